use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adiaq::evolution::{evolve, trajectory_table, EvolutionConfig};
use adiaq::experiments::{self, InstanceSource, SweepKind, SweepPlan};
use adiaq::open_system::{decoherence_table, evolve_master, thermal_success, BathParams};
use adiaq::operators::MAX_DENSE_CAP;
use adiaq::table::{fmt_float, Cell, Table};
use adiaq::{generate_unique, Error, HamiltonianSpec, Perturbation, PerturbationKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adiaq", version, about = "Adiabatic quantum computation on exact cover")]
struct Cli {
    /// Seed for instance generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for CSV and metadata output.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Relative integration tolerance; the absolute tolerance is 100x smaller.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Grid points for spectrum scans and gap searches.
    #[arg(long, global = true, default_value_t = 201)]
    grid: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Source {
    /// Generate a unique-solution instance with this many bits.
    #[arg(long, conflicts_with = "instance")]
    n: Option<usize>,
    /// Read an instance file instead of generating one.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Kind {
    K1,
    K2,
    K3,
    Decoherence,
    Runtime,
    Spectrum,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance with a unique satisfying assignment.
    Generate {
        #[arg(long)]
        n: usize,
    },
    /// Lowest levels of H(s) over a uniform grid, plus the minimum gap.
    Spectrum {
        #[command(flatten)]
        source: Source,
        /// Allow dense matrices up to 14 bits.
        #[arg(long)]
        big: bool,
    },
    /// Closed-system run from the uniform superposition.
    Evolve {
        #[command(flatten)]
        source: Source,
        /// Run time T.
        #[arg(long)]
        time: f64,
        #[arg(long, value_parser = parse_kind)]
        perturbation: Option<PerturbationKind>,
        /// C1, C2 or C3.
        #[arg(long, default_value_t = 0.0)]
        strength: f64,
        /// Seed for the field directions.
        #[arg(long, default_value_t = 1)]
        dir_seed: u64,
        /// Trajectory sampling interval; defaults to T / 100.
        #[arg(long)]
        stride: Option<f64>,
    },
    /// Master-equation run coupled to a thermal bath (n <= 4).
    Decohere {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 10.0)]
        time: f64,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, default_value_t = 0.1)]
        lambda_sq: f64,
    },
    /// Parameter sweeps that produce one CSV per run.
    Sweep {
        #[arg(long, value_enum)]
        kind: Kind,
        #[command(flatten)]
        source: Source,
        /// Comma-separated C values (k1, k2, k3).
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated run times; k1/k2/k3 skip calibration when given.
        #[arg(long, value_delimiter = ',')]
        run_times: Vec<f64>,
        /// Comma-separated direction seeds.
        #[arg(long, value_delimiter = ',')]
        dir_seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        temperatures: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        lambda_sq: Vec<f64>,
        /// Calibration target probability.
        #[arg(long)]
        target: Option<f64>,
        /// Allow dense matrices up to 14 bits.
        #[arg(long)]
        big: bool,
    },
}

fn parse_kind(s: &str) -> Result<PerturbationKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn config(tol: Option<f64>) -> EvolutionConfig {
    tol.map_or_else(EvolutionConfig::default, EvolutionConfig::with_tol)
}

impl Source {
    fn resolve(&self, seed: u64) -> Result<InstanceSource, Error> {
        match (&self.instance, self.n) {
            (Some(p), _) => Ok(InstanceSource::File(p.clone())),
            (None, Some(n)) => Ok(InstanceSource::Generate { n, seed }),
            (None, None) => Err(Error::Parameter("give --n or --instance".into())),
        }
    }
}

fn report(path: &Path) {
    println!("wrote {}", path.display());
}

fn base_meta(t: &mut Table, cli: &Cli, cfg: &EvolutionConfig, source: &InstanceSource) {
    t.meta("version", env!("CARGO_PKG_VERSION"));
    t.meta("seed", cli.seed);
    t.meta("rel_tol", fmt_float(cfg.rel_tol));
    t.meta("abs_tol", fmt_float(cfg.abs_tol));
    t.meta("instance_source", source.describe());
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = config(cli.tol);
    match &cli.command {
        Command::Generate { n } => {
            let inst = generate_unique(*n, cli.seed)?;
            std::fs::create_dir_all(&cli.out_dir)?;
            let stem = format!("ec3_n{n}_seed{}", cli.seed);
            let path = cli.out_dir.join(format!("{stem}.txt"));
            std::fs::write(&path, inst.to_text())?;
            let mut meta = Table::new(Vec::<String>::new());
            meta.meta("version", env!("CARGO_PKG_VERSION"));
            meta.meta("n", n);
            meta.meta("seed", cli.seed);
            meta.meta("clauses", inst.clauses().len());
            std::fs::write(cli.out_dir.join(format!("{stem}.meta")), meta.metadata_text())?;
            report(&path);
        }
        Command::Spectrum { source, big } => {
            let mut plan = SweepPlan::new(SweepKind::Spectrum, source.resolve(cli.seed)?);
            plan.gap_grid_points = cli.grid;
            plan.config = cfg;
            plan.dense_cap = big.then_some(MAX_DENSE_CAP);
            let r = experiments::run(&plan)?;
            println!("min gap {} at s = {}", r.table.metadata["delta"], r.table.metadata["s_star"]);
            report(&r.write(&cli.out_dir)?);
        }
        Command::Evolve {
            source,
            time,
            perturbation,
            strength,
            dir_seed,
            stride,
        } => {
            let src = source.resolve(cli.seed)?;
            let inst = src.load()?;
            let mut spec = HamiltonianSpec::from_instance(&inst)?;
            if let Some(kind) = perturbation {
                spec = spec.with_perturbation(Perturbation::from_seed(*kind, *strength, inst.n(), *dir_seed)?)?;
            }
            let mut run_cfg = cfg;
            run_cfg.record_stride = Some(stride.unwrap_or(time / 100.0));
            let r = evolve(&spec, *time, &run_cfg)?;
            let mut t = trajectory_table(r.trajectory.as_deref().unwrap_or(&[]));
            base_meta(&mut t, cli, &cfg, &src);
            t.meta("run_time", fmt_float(*time));
            t.meta("success_prob", fmt_float(r.success_probability));
            t.meta("norm_drift", fmt_float(r.norm_drift));
            t.meta("steps", r.steps_taken);
            if let Some(p) = spec.perturbation() {
                t.meta("perturbation", p.to_config()?.trim().replace('\n', "; "));
            }
            println!("success probability {}", fmt_float(r.success_probability));
            report(&t.write(&cli.out_dir, "evolve")?);
        }
        Command::Decohere {
            source,
            time,
            temperature,
            lambda_sq,
        } => {
            let src = source.resolve(cli.seed)?;
            let inst = src.load()?;
            let bath = BathParams::from_temperature(*lambda_sq, *temperature)?;
            let r = evolve_master(&inst, *time, &bath, &cfg)?;
            let mut t = decoherence_table();
            t.push(vec![
                Cell::Float(*time),
                Cell::Float(*temperature),
                Cell::Float(*lambda_sq),
                Cell::Float(r.success_probability),
                Cell::Float(thermal_success(&inst, bath.beta)?),
                Cell::Float(r.trace_error),
                Cell::Float(r.min_eigenvalue),
            ]);
            base_meta(&mut t, cli, &cfg, &src);
            t.meta("degeneracy_warnings", r.degeneracy_warnings);
            println!("success probability {}", fmt_float(r.success_probability));
            report(&t.write(&cli.out_dir, "decohere")?);
        }
        Command::Sweep {
            kind,
            source,
            values,
            run_times,
            dir_seeds,
            temperatures,
            lambda_sq,
            target,
            big,
        } => {
            let kind = match kind {
                Kind::K1 => SweepKind::K1,
                Kind::K2 => SweepKind::K2,
                Kind::K3 => SweepKind::K3,
                Kind::Decoherence => SweepKind::Decoherence,
                Kind::Runtime => SweepKind::Runtime,
                Kind::Spectrum => SweepKind::Spectrum,
            };
            let mut plan = SweepPlan::new(kind, source.resolve(cli.seed)?);
            plan.grid = values.clone();
            plan.run_times = run_times.clone();
            if !dir_seeds.is_empty() {
                plan.direction_seeds = dir_seeds.clone();
            }
            if !temperatures.is_empty() {
                plan.temperatures = temperatures.clone();
            }
            if !lambda_sq.is_empty() {
                plan.lambda_sq = lambda_sq.clone();
            }
            if let Some(t) = target {
                plan.target = *t;
            }
            plan.config = cfg;
            plan.gap_grid_points = cli.grid;
            plan.dense_cap = big.then_some(MAX_DENSE_CAP);
            let mut r = experiments::run(&plan)?;
            r.table.meta("cli_seed", cli.seed);
            report(&r.write(&cli.out_dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
