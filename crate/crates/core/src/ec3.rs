//! Three-bit exact cover (EC3) instances.
//!
//! A clause names three distinct bits and is satisfied when exactly one of
//! them is 1. Assignments are integers with bit `i` stored in the `i`-th least
//! significant position, so `|z>` indexing is shared with the operator code.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest supported bit count.
pub const MAX_BITS: usize = 24;

/// Default restart budget for [`generate_unique`].
pub const DEFAULT_MAX_RESTARTS: usize = 10_000;

/// A clause over three distinct bits, stored in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause([usize; 3]);

impl Clause {
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == b || b == c || a == c {
            return Err(Error::InvalidClause(a, b, c));
        }
        let mut idx = [a, b, c];
        idx.sort_unstable();
        Ok(Clause(idx))
    }

    pub fn indices(&self) -> [usize; 3] {
        self.0
    }

    /// Largest bit index referenced.
    pub fn max_index(&self) -> usize {
        self.0[2]
    }

    pub(crate) fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &i| m | (1u64 << i))
    }

    /// True iff exactly one of the three bits of `z` is set.
    pub fn is_satisfied(&self, z: Assignment) -> Result<bool> {
        if self.max_index() >= z.width() {
            return Err(Error::IndexOutOfRange {
                index: self.max_index(),
                n: z.width(),
            });
        }
        Ok(self.satisfied_by(z.value()))
    }

    #[inline]
    pub(crate) fn satisfied_by(&self, z: u64) -> bool {
        (z & self.mask()).count_ones() == 1
    }
}

/// An `n`-bit assignment encoded as an integer in `[0, 2^n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Assignment {
    value: u64,
    width: usize,
}

impl Assignment {
    pub fn new(value: u64, width: usize) -> Result<Self> {
        if width > 63 || value >> width != 0 {
            return Err(Error::AssignmentOutOfRange { value, n: width });
        }
        Ok(Assignment { value, width })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.value >> i) & 1 == 1
    }

    /// Bits as a string, most significant bit first.
    pub fn to_bitstring(&self) -> String {
        (0..self.width)
            .rev()
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }
}

/// Free-function form of [`Clause::is_satisfied`].
pub fn clause_satisfied(c: &Clause, z: Assignment) -> Result<bool> {
    c.is_satisfied(z)
}

/// An EC3 instance: `n` bits, an ordered list of distinct clauses and,
/// optionally, its unique satisfying assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ec3Instance {
    n: usize,
    clauses: Vec<Clause>,
    solution: Option<Assignment>,
    seed: Option<u64>,
}

impl Ec3Instance {
    /// Builds an instance, rejecting bits that appear in no clause.
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        let inst = Self::new_allow_uncovered(n, clauses)?;
        if let Some(bit) = inst.uncovered_bits().first() {
            return Err(Error::UncoveredBit(*bit));
        }
        Ok(inst)
    }

    /// Builds an instance without the coverage requirement. Such instances
    /// can be evaluated but cannot back a Hamiltonian.
    pub fn new_allow_uncovered(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        if n == 0 || n > MAX_BITS {
            return Err(Error::BitCount {
                n,
                min: 1,
                max: MAX_BITS,
            });
        }
        let mut seen = HashSet::with_capacity(clauses.len());
        for c in &clauses {
            if c.max_index() >= n {
                return Err(Error::IndexOutOfRange {
                    index: c.max_index(),
                    n,
                });
            }
            if !seen.insert(*c) {
                let [a, b, k] = c.indices();
                return Err(Error::DuplicateClause(a, b, k));
            }
        }
        Ok(Ec3Instance {
            n,
            clauses,
            solution: None,
            seed: None,
        })
    }

    /// Records `z` as the unique satisfying assignment after checking it
    /// exhaustively.
    pub fn with_solution(mut self, z: u64) -> Result<Self> {
        let z = Assignment::new(z, self.n)?;
        if self.violations(z.value()) != 0 {
            return Err(Error::BadSolution(z.value()));
        }
        let others = (0..1u64 << self.n)
            .filter(|&y| y != z.value())
            .any(|y| self.violations(y) == 0);
        if others {
            return Err(Error::BadSolution(z.value()));
        }
        self.solution = Some(z);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn solution(&self) -> Option<Assignment> {
        self.solution
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// Bits that appear in no clause, ascending.
    pub fn uncovered_bits(&self) -> Vec<usize> {
        let deg = self.degrees();
        (0..self.n).filter(|&i| deg[i] == 0).collect()
    }

    /// Number of clauses containing each bit.
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n];
        for c in &self.clauses {
            for i in c.indices() {
                deg[i] += 1;
            }
        }
        deg
    }

    #[inline]
    pub(crate) fn violations(&self, z: u64) -> u32 {
        self.clauses.iter().filter(|c| !c.satisfied_by(z)).count() as u32
    }

    /// h(z): the number of violated clauses.
    pub fn violation_count(&self, z: u64) -> Result<u32> {
        let z = Assignment::new(z, self.n)?;
        Ok(self.violations(z.value()))
    }

    /// h(z) for every z in `0..2^n`.
    pub fn violation_table(&self) -> Vec<u32> {
        (0..1u64 << self.n).map(|z| self.violations(z)).collect()
    }

    /// Exhaustive count of satisfying assignments.
    pub fn count_satisfying(&self) -> Result<u64> {
        if self.n > MAX_BITS {
            return Err(Error::BitCount {
                n: self.n,
                min: 1,
                max: MAX_BITS,
            });
        }
        Ok((0..1u64 << self.n).filter(|&z| self.violations(z) == 0).count() as u64)
    }

    /// Serializes to the instance text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.clauses.len());
        for c in &self.clauses {
            let [i, j, k] = c.indices();
            let _ = writeln!(out, "{i} {j} {k}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed {seed}");
        }
        if let Some(z) = self.solution {
            let _ = writeln!(out, "# assignment {} {}", z.value(), z.to_bitstring());
        }
        out
    }

    /// Parses the instance text format: a header line `n m`, then `m` clause
    /// lines `i j k`, then optional `#` comment lines. `# seed <u64>` and
    /// `# assignment <int> [<bits>]` are recognized; other comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(perr(ln, "expected `n m`"));
        }
        let n: usize = head[0].parse().map_err(|_| perr(ln, "bad bit count"))?;
        let m: usize = head[1].parse().map_err(|_| perr(ln, "bad clause count"))?;

        let mut clauses = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, line) = lines.next().ok_or_else(|| perr(ln + 1, "missing clause line"))?;
            let idx = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| perr(ln, "bad clause index"))?;
            if idx.len() != 3 {
                return Err(perr(ln, "expected three indices"));
            }
            if !(idx[0] < idx[1] && idx[1] < idx[2]) {
                return Err(perr(ln, "clause indices must be strictly ascending"));
            }
            clauses.push(Clause::new(idx[0], idx[1], idx[2])?);
        }

        let mut seed = None;
        let mut solution = None;
        for (ln, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let body = line
                .strip_prefix('#')
                .ok_or_else(|| perr(ln, "trailing lines must be comments"))?;
            let mut toks = body.split_whitespace();
            match toks.next() {
                Some("seed") => {
                    let v = toks.next().and_then(|t| t.parse().ok());
                    seed = Some(v.ok_or_else(|| perr(ln, "bad seed"))?);
                }
                Some("assignment") => {
                    let v = toks.next().and_then(|t| t.parse().ok());
                    solution = Some(v.ok_or_else(|| perr(ln, "bad assignment"))?);
                }
                _ => {}
            }
        }

        let mut inst = Ec3Instance::new(n, clauses)?;
        inst.seed = seed;
        if let Some(z) = solution {
            inst = inst.with_solution(z)?;
        }
        Ok(inst)
    }
}

fn choose3(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Generates an instance with a unique satisfying assignment using the
/// default restart budget.
pub fn generate_unique(n: usize, seed: u64) -> Result<Ec3Instance> {
    generate_unique_with(n, seed, DEFAULT_MAX_RESTARTS)
}

/// Adds uniformly drawn distinct clauses until exactly one assignment
/// survives. If the survivors drop to zero first, all clauses are discarded
/// and the procedure restarts.
pub fn generate_unique_with(n: usize, seed: u64, max_restarts: usize) -> Result<Ec3Instance> {
    if !(3..=MAX_BITS).contains(&n) {
        return Err(Error::BitCount {
            n,
            min: 3,
            max: MAX_BITS,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = choose3(n);

    for _ in 0..=max_restarts {
        let mut clauses: Vec<Clause> = Vec::new();
        let mut used: HashSet<Clause> = HashSet::new();
        let mut alive: Vec<u32> = (0..1u32 << n).collect();

        while used.len() < total {
            let picked = sample(&mut rng, n, 3);
            let c = Clause::new(picked.index(0), picked.index(1), picked.index(2))?;
            if !used.insert(c) {
                continue;
            }
            clauses.push(c);
            alive.retain(|&z| c.satisfied_by(z as u64));
            match alive.len() {
                0 => break,
                1 => {
                    let z = alive[0] as u64;
                    let inst = Ec3Instance::new(n, clauses)?;
                    return Ok(Ec3Instance {
                        solution: Some(Assignment::new(z, n)?),
                        seed: Some(seed),
                        ..inst
                    });
                }
                _ => {}
            }
        }
    }
    Err(Error::GenerationFailed(max_restarts))
}
