//! Sweep harness: each plan kind produces one CSV table with a metadata
//! sidecar that records everything needed to rerun it.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::ec3::{generate_unique, Ec3Instance};
use crate::error::{Error, Result};
use crate::evolution::{evolve, find_runtime, EvolutionConfig};
use crate::open_system::{decoherence_table, evolve_master, thermal_success, BathParams, MAX_MASTER_BITS};
use crate::operators::{HamiltonianSpec, Perturbation, PerturbationKind};
use crate::spectral::{ground_overlap, min_gap, spectrum_scan, spectrum_table, DEFAULT_GRID_POINTS, REPORT_LEVELS};
use crate::table::{fmt_float, fmt_list, Cell, Table};

/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "ADIAQ_THREADS";
pub const DEFAULT_DIRECTION_SEEDS: [u64; 4] = [1, 2, 3, 4];
pub const DEFAULT_TEMPERATURES: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];
pub const DEFAULT_LAMBDA_SQ: [f64; 2] = [0.0, 0.1];
pub const CALIBRATION_TOL: f64 = 0.02;
pub const DEFAULT_T_POINTS: usize = 16;
/// Run-time range of the default decoherence grid.
pub const DECOHERENCE_T_RANGE: (f64, f64) = (0.5, 200.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Spectrum,
    Decoherence,
    K1,
    K2,
    K3,
    Runtime,
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::Spectrum => "spectrum",
            SweepKind::Decoherence => "decoherence",
            SweepKind::K1 => "k1",
            SweepKind::K2 => "k2",
            SweepKind::K3 => "k3",
            SweepKind::Runtime => "runtime",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "spectrum" => SweepKind::Spectrum,
            "decoherence" => SweepKind::Decoherence,
            "k1" => SweepKind::K1,
            "k2" => SweepKind::K2,
            "k3" => SweepKind::K3,
            "runtime" | "runtime_curve" => SweepKind::Runtime,
            _ => return Err(Error::Parameter(format!("unknown sweep kind `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Generate { n: usize, seed: u64 },
    File(PathBuf),
    Given(Ec3Instance),
}

impl InstanceSource {
    pub fn load(&self) -> Result<Ec3Instance> {
        match self {
            InstanceSource::Generate { n, seed } => generate_unique(*n, *seed),
            InstanceSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                Ec3Instance::from_text(&text)
            }
            InstanceSource::Given(inst) => Ok(inst.clone()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InstanceSource::Generate { n, seed } => format!("generate n={n} seed={seed}"),
            InstanceSource::File(p) => format!("file {}", p.display()),
            InstanceSource::Given(_) => "given".into(),
        }
    }
}

/// Everything a sweep needs. Unset optional fields take the documented
/// defaults for the kind.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub kind: SweepKind,
    pub source: InstanceSource,
    pub direction_seeds: Vec<u64>,
    /// `C` values for k1/k2/k3; ignored otherwise. Empty selects the default.
    pub grid: Vec<f64>,
    /// Run times for runtime/decoherence, or fixed run times for k1/k2/k3
    /// that skip calibration. Empty selects the default.
    pub run_times: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub lambda_sq: Vec<f64>,
    /// Calibration target: 1/2 for k1/k2, 1/8 for k3.
    pub target: f64,
    pub calibration_tol: f64,
    pub config: EvolutionConfig,
    pub gap_grid_points: usize,
    pub dense_cap: Option<usize>,
}

impl SweepPlan {
    pub fn new(kind: SweepKind, source: InstanceSource) -> Self {
        SweepPlan {
            kind,
            source,
            direction_seeds: DEFAULT_DIRECTION_SEEDS.to_vec(),
            grid: Vec::new(),
            run_times: Vec::new(),
            temperatures: DEFAULT_TEMPERATURES.to_vec(),
            lambda_sq: DEFAULT_LAMBDA_SQ.to_vec(),
            target: if kind == SweepKind::K3 { 0.125 } else { 0.5 },
            calibration_tol: CALIBRATION_TOL,
            config: EvolutionConfig::default(),
            gap_grid_points: DEFAULT_GRID_POINTS,
            dense_cap: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let needs_seeds = matches!(self.kind, SweepKind::K1 | SweepKind::K2 | SweepKind::K3);
        if needs_seeds && self.direction_seeds.is_empty() {
            return Err(Error::Parameter("sweep needs at least one direction seed".into()));
        }
        if self.kind == SweepKind::Decoherence
            && (self.temperatures.is_empty() || self.lambda_sq.is_empty())
        {
            return Err(Error::Parameter("decoherence needs temperatures and couplings".into()));
        }
        if self.run_times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Parameter("run times must be positive".into()));
        }
        Ok(())
    }

    fn spec(&self, inst: &Ec3Instance) -> Result<HamiltonianSpec> {
        let spec = HamiltonianSpec::from_instance(inst)?;
        match self.dense_cap {
            Some(cap) => spec.with_dense_cap(cap),
            None => Ok(spec),
        }
    }
}

/// A finished sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub table: Table,
}

impl SweepResult {
    /// Writes `<kind>.csv` and `<kind>.meta` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        self.table.write(dir, self.kind.name())
    }
}

pub fn run(plan: &SweepPlan) -> Result<SweepResult> {
    match plan.kind {
        SweepKind::Spectrum => run_spectrum(plan),
        SweepKind::Decoherence => run_decoherence(plan),
        SweepKind::K1 => run_k1(plan),
        SweepKind::K2 => run_k2(plan),
        SweepKind::K3 => run_k3(plan),
        SweepKind::Runtime => run_runtime_curve(plan),
    }
}

/// Worker count from [`THREADS_ENV`], defaulting to rayon's choice.
pub fn worker_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` over `jobs` on a bounded pool, keeping input order.
fn par_map<J, T, F>(jobs: &[J], f: F) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T> + Sync,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(&f).collect())
}

/// `points` values spaced geometrically over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// `{0, 0.05, ..., 1}` followed by a coarser tail out to 10.
pub fn default_c1_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    g.extend([1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0]);
    g
}

/// `{-3, -2.75, ..., 3}`.
pub fn default_c2_grid() -> Vec<f64> {
    (-12..=12).map(|k| k as f64 * 0.25).collect()
}

/// `{0, 1, ..., ceil(2 n T / pi)}`.
pub fn default_c3_grid(n: usize, run_time: f64) -> Vec<f64> {
    let top = (2.0 * n as f64 * run_time / std::f64::consts::PI).ceil() as usize;
    (0..=top).map(|c| c as f64).collect()
}

/// The resonance scale `n T / pi`.
pub fn resonance_scale(n: usize, run_time: f64) -> f64 {
    n as f64 * run_time / std::f64::consts::PI
}

fn base_metadata(table: &mut Table, plan: &SweepPlan, inst: &Ec3Instance) {
    table.meta("version", env!("CARGO_PKG_VERSION"));
    table.meta("kind", plan.kind.name());
    table.meta("instance_source", plan.source.describe());
    table.meta("n", inst.n());
    table.meta("clauses", inst.clauses().len());
    if let Some(seed) = inst.seed() {
        table.meta("instance_seed", seed);
    }
    if let Some(z) = inst.solution() {
        table.meta("solution", z.to_bitstring());
    }
    table.meta("rel_tol", fmt_float(plan.config.rel_tol));
    table.meta("abs_tol", fmt_float(plan.config.abs_tol));
}

fn seed_list(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn run_spectrum(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let inst = plan.source.load()?;
    let spec = plan.spec(&inst)?;
    let rows = spectrum_scan(&spec, plan.gap_grid_points, REPORT_LEVELS)?;
    let gap = min_gap(&spec, plan.gap_grid_points)?;
    let mut table = spectrum_table(&rows);
    base_metadata(&mut table, plan, &inst);
    table.meta("grid_points", plan.gap_grid_points);
    table.meta("delta", fmt_float(gap.delta));
    table.meta("s_star", fmt_float(gap.s_star));
    table.meta("e_cal", fmt_float(gap.e_cal));
    Ok(SweepResult {
        kind: SweepKind::Spectrum,
        table,
    })
}

/// Closed-system `Prob(T)` over a run-time grid, with the gap report in the
/// metadata. The default grid spans `[0.1, 10 E / Delta^2]`.
pub fn run_runtime_curve(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let inst = plan.source.load()?;
    let spec = plan.spec(&inst)?;
    let gap = min_gap(&spec, plan.gap_grid_points)?;
    let times = if plan.run_times.is_empty() {
        log_grid(0.1, (10.0 * gap.adiabatic_scale()).max(1.0), DEFAULT_T_POINTS)
    } else {
        plan.run_times.clone()
    };
    let probs = par_map(&times, |&t| {
        evolve(&spec, t, &plan.config).map(|r| r.success_probability)
    })?;
    let mut table = Table::new(["T", "success_prob"]);
    for (t, p) in times.iter().zip(&probs) {
        table.push(vec![Cell::Float(*t), Cell::Float(*p)]);
    }
    base_metadata(&mut table, plan, &inst);
    table.meta("t_grid", fmt_list(&times));
    table.meta("grid_points", plan.gap_grid_points);
    table.meta("delta", fmt_float(gap.delta));
    table.meta("s_star", fmt_float(gap.s_star));
    table.meta("e_cal", fmt_float(gap.e_cal));
    table.meta("adiabatic_scale", fmt_float(gap.adiabatic_scale()));
    Ok(SweepResult {
        kind: SweepKind::Runtime,
        table,
    })
}

/// Master-equation success over temperatures and run times. Rows with
/// `lambda_sq = 0` do not depend on the temperature; they are computed once
/// per run time and repeated for every temperature.
pub fn run_decoherence(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let inst = plan.source.load()?;
    if inst.n() > MAX_MASTER_BITS {
        return Err(Error::BitCount {
            n: inst.n(),
            min: 1,
            max: MAX_MASTER_BITS,
        });
    }
    let times = if plan.run_times.is_empty() {
        log_grid(DECOHERENCE_T_RANGE.0, DECOHERENCE_T_RANGE.1, DEFAULT_T_POINTS)
    } else {
        plan.run_times.clone()
    };

    // Job key: (lambda index, temperature index or None for closed, T index).
    let mut jobs = Vec::new();
    for (li, &l) in plan.lambda_sq.iter().enumerate() {
        if l == 0.0 {
            jobs.extend((0..times.len()).map(|ti| (li, None, ti)));
        } else {
            for temp_i in 0..plan.temperatures.len() {
                jobs.extend((0..times.len()).map(|ti| (li, Some(temp_i), ti)));
            }
        }
    }
    let results = par_map(&jobs, |&(li, temp_i, ti)| {
        let temp = plan.temperatures[temp_i.unwrap_or(0)];
        let bath = BathParams::from_temperature(plan.lambda_sq[li], temp)?;
        evolve_master(&inst, times[ti], &bath, &plan.config)
    })?;
    let lookup = |li: usize, temp_i: Option<usize>, ti: usize| {
        let k = jobs
            .iter()
            .position(|&j| j == (li, temp_i, ti))
            .expect("job scheduled");
        &results[k]
    };

    let mut table = decoherence_table();
    for (temp_i, &temp) in plan.temperatures.iter().enumerate() {
        let thermal = thermal_success(&inst, 1.0 / temp)?;
        for (li, &l) in plan.lambda_sq.iter().enumerate() {
            for (ti, &t) in times.iter().enumerate() {
                let r = lookup(li, (l != 0.0).then_some(temp_i), ti);
                table.push(vec![
                    Cell::Float(t),
                    Cell::Float(temp),
                    Cell::Float(l),
                    Cell::Float(r.success_probability),
                    Cell::Float(thermal),
                    Cell::Float(r.trace_error),
                    Cell::Float(r.min_eigenvalue),
                ]);
            }
        }
    }
    base_metadata(&mut table, plan, &inst);
    table.meta("t_grid", fmt_list(&times));
    table.meta("temperatures", fmt_list(&plan.temperatures));
    table.meta("lambda_sq", fmt_list(&plan.lambda_sq));
    table.meta("spectral_function", "flat");
    let warnings: usize = results.iter().map(|r| r.degeneracy_warnings).sum();
    table.meta("degeneracy_warnings", warnings);
    Ok(SweepResult {
        kind: SweepKind::Decoherence,
        table,
    })
}

fn calibrated_run_time(plan: &SweepPlan, spec: &HamiltonianSpec, table: &mut Table) -> Result<f64> {
    if let Some(&t) = plan.run_times.first() {
        table.meta("run_time", fmt_float(t));
        table.meta("run_time_source", "given");
        return Ok(t);
    }
    let cal = find_runtime(spec, plan.target, plan.calibration_tol, &plan.config)?;
    table.meta("run_time", fmt_float(cal.run_time));
    table.meta("run_time_source", "calibrated");
    table.meta("calibration_target", fmt_float(plan.target));
    table.meta("calibration_tol", fmt_float(plan.calibration_tol));
    table.meta("calibrated_success", fmt_float(cal.success_probability));
    Ok(cal.run_time)
}

/// Success under `K1` over a `C1` grid for each direction seed, at one run
/// time shared by all seeds, plus the final ground-state overlap.
pub fn run_k1(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let inst = plan.source.load()?;
    let spec = plan.spec(&inst)?;
    let mut table = Table::new(["C1", "seed", "success_prob", "overlap"]);
    let run_time = calibrated_run_time(plan, &spec, &mut table)?;
    let grid = if plan.grid.is_empty() { default_c1_grid() } else { plan.grid.clone() };
    let baseline = evolve(&spec, run_time, &plan.config)?.success_probability;

    let jobs: Vec<(u64, f64)> = plan
        .direction_seeds
        .iter()
        .flat_map(|&seed| grid.iter().map(move |&c| (seed, c)))
        .collect();
    let rows = par_map(&jobs, |&(seed, c)| {
        if c == 0.0 {
            return Ok((baseline, 1.0));
        }
        let p = Perturbation::from_seed(PerturbationKind::K1, c, inst.n(), seed)?;
        let pspec = spec.clone().with_perturbation(p)?;
        let prob = evolve(&pspec, run_time, &plan.config)?.success_probability;
        Ok((prob, ground_overlap(&pspec)?.overlap))
    })?;
    for ((seed, c), (prob, overlap)) in jobs.iter().zip(rows) {
        table.push(vec![
            Cell::Float(*c),
            Cell::from(*seed),
            Cell::Float(prob),
            Cell::Float(overlap),
        ]);
    }
    base_metadata(&mut table, plan, &inst);
    table.meta("direction_seeds", seed_list(&plan.direction_seeds));
    table.meta("grid", fmt_list(&grid));
    Ok(SweepResult {
        kind: SweepKind::K1,
        table,
    })
}

/// Success under `K2` and the perturbed minimum gap over a `C2` grid.
pub fn run_k2(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let inst = plan.source.load()?;
    let spec = plan.spec(&inst)?;
    let mut table = Table::new(["C2", "seed", "success_prob", "min_gap"]);
    let run_time = calibrated_run_time(plan, &spec, &mut table)?;
    let grid = if plan.grid.is_empty() { default_c2_grid() } else { plan.grid.clone() };
    let baseline = evolve(&spec, run_time, &plan.config)?.success_probability;
    let base_gap = min_gap(&spec, plan.gap_grid_points)?.delta;

    let jobs: Vec<(u64, f64)> = plan
        .direction_seeds
        .iter()
        .flat_map(|&seed| grid.iter().map(move |&c| (seed, c)))
        .collect();
    let rows = par_map(&jobs, |&(seed, c)| {
        if c == 0.0 {
            return Ok((baseline, base_gap));
        }
        let p = Perturbation::from_seed(PerturbationKind::K2, c, inst.n(), seed)?;
        let pspec = spec.clone().with_perturbation(p)?;
        let prob = evolve(&pspec, run_time, &plan.config)?.success_probability;
        Ok((prob, min_gap(&pspec, plan.gap_grid_points)?.delta))
    })?;
    for ((seed, c), (prob, gap)) in jobs.iter().zip(rows) {
        table.push(vec![
            Cell::Float(*c),
            Cell::from(*seed),
            Cell::Float(prob),
            Cell::Float(gap),
        ]);
    }
    base_metadata(&mut table, plan, &inst);
    table.meta("direction_seeds", seed_list(&plan.direction_seeds));
    table.meta("grid", fmt_list(&grid));
    table.meta("grid_points", plan.gap_grid_points);
    table.meta("unperturbed_delta", fmt_float(base_gap));
    Ok(SweepResult {
        kind: SweepKind::K2,
        table,
    })
}

/// Success under `K3` over integer frequencies, at the calibrated run time
/// and at twice that. Uses the first direction seed.
pub fn run_k3(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let inst = plan.source.load()?;
    let spec = plan.spec(&inst)?;
    let mut table = Table::new(["C3", "run_time", "success_prob"]);
    let times: Vec<f64> = if plan.run_times.len() >= 2 {
        plan.run_times.clone()
    } else {
        let t = calibrated_run_time(plan, &spec, &mut table)?;
        vec![t, 2.0 * t]
    };
    if let Some(c) = plan.grid.iter().find(|c| **c < 0.0 || c.fract() != 0.0) {
        return Err(Error::Perturbation(format!(
            "K3 frequency must be a nonnegative integer, got {c}"
        )));
    }
    let seed = plan.direction_seeds[0];

    let mut jobs: Vec<(f64, f64)> = Vec::new();
    for &t in &times {
        let grid = if plan.grid.is_empty() {
            default_c3_grid(inst.n(), t)
        } else {
            plan.grid.clone()
        };
        jobs.extend(grid.into_iter().map(|c| (t, c)));
    }
    let probs = par_map(&jobs, |&(t, c)| {
        let s = if c == 0.0 {
            spec.clone()
        } else {
            let p = Perturbation::from_seed(PerturbationKind::K3, c, inst.n(), seed)?;
            spec.clone().with_perturbation(p)?
        };
        evolve(&s, t, &plan.config).map(|r| r.success_probability)
    })?;
    for ((t, c), p) in jobs.iter().zip(probs) {
        table.push(vec![Cell::Int(*c as i64), Cell::Float(*t), Cell::Float(p)]);
    }
    base_metadata(&mut table, plan, &inst);
    table.meta("direction_seed", seed);
    table.meta("run_times", fmt_list(&times));
    let scales: Vec<f64> = times.iter().map(|&t| resonance_scale(inst.n(), t)).collect();
    table.meta("nT_over_pi", fmt_list(&scales));
    if !plan.grid.is_empty() {
        table.meta("grid", fmt_list(&plan.grid));
    }
    Ok(SweepResult {
        kind: SweepKind::K3,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = default_c1_grid();
        assert_eq!(g.len(), 29);
        assert_eq!(g[0], 0.0);
        assert!((g[20] - 1.0).abs() < 1e-15);
        let g2 = default_c2_grid();
        assert_eq!(g2.len(), 25);
        assert!(g2.contains(&0.0) && g2.contains(&-3.0) && g2.contains(&3.0));
        let g3 = default_c3_grid(8, 7.5);
        assert_eq!(*g3.last().unwrap(), (2.0 * 8.0 * 7.5 / std::f64::consts::PI).ceil());
        let t = log_grid(0.5, 200.0, 16);
        assert_eq!(t.len(), 16);
        assert!((t[0] - 0.5).abs() < 1e-12 && (t[15] - 200.0).abs() < 1e-9);
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in [
            SweepKind::Spectrum,
            SweepKind::Decoherence,
            SweepKind::K1,
            SweepKind::K2,
            SweepKind::K3,
            SweepKind::Runtime,
        ] {
            assert_eq!(k.name().parse::<SweepKind>().unwrap(), k);
        }
        assert!("k4".parse::<SweepKind>().is_err());
    }

    #[test]
    fn k1_and_k2_share_the_unperturbed_row() {
        let src = InstanceSource::Generate { n: 5, seed: 3 };
        let mut p1 = SweepPlan::new(SweepKind::K1, src.clone());
        p1.grid = vec![0.0, 0.5];
        p1.run_times = vec![4.0];
        p1.direction_seeds = vec![7];
        let mut p2 = p1.clone();
        p2.kind = SweepKind::K2;
        p2.grid = vec![0.0, -1.0];
        let a = run_k1(&p1).unwrap().table;
        let b = run_k2(&p2).unwrap().table;
        assert_eq!(a.values("success_prob")[0], b.values("success_prob")[0]);
        assert_eq!(a.values("overlap")[0], 1.0);
    }

    #[test]
    fn decoherence_rejects_large_n() {
        let plan = SweepPlan::new(SweepKind::Decoherence, InstanceSource::Generate { n: 5, seed: 0 });
        assert!(matches!(run(&plan), Err(Error::BitCount { n: 5, .. })));
    }
}
