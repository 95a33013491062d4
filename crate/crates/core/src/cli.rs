//! Command-line front end: `simulate`, `run`, `tune`, `surface`, `diagnose`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{read_theta_file, theta_from_map, RunConfig};
use crate::data::{load_dataset, read_trace, write_dataset, write_summary, write_trace};
use crate::diagnostics::{format_table, summarize};
use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec, ParamVector};
use crate::sampler::{run_chain, Trace};
use crate::surface::{surface, surface_csv, Axis, SeedMode};
use crate::tuning::tune;

/// Exit status when the summary was written but some R̂ is above threshold.
pub const EXIT_RHAT_WARNING: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pmglm",
    version,
    about = "Pseudo-marginal MCMC for logistic regression with missing covariates"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct GlobalArgs {
    /// Model and run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides `sampler.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the importance sampler (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub n_importance: Option<usize>,
    #[arg(long, global = true)]
    pub burn_in: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset and truth file from the `[simulate]` section.
    Simulate,
    /// Run the pseudo-marginal chain and write `trace.csv`.
    Run {
        /// Data CSV; overrides `data.path`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Variance of the log-likelihood estimate over a grid of N.
    Tune {
        #[arg(long)]
        data: Option<PathBuf>,
        /// TOML table of parameter values (defaults to the simulation truth).
        #[arg(long)]
        theta: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "100,500,1000,5000")]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        replicates: usize,
    },
    /// Negative log estimated likelihood over a two-parameter grid.
    Surface {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        theta: Option<PathBuf>,
        /// First axis as `name:lo:hi:steps`.
        #[arg(long)]
        a: String,
        /// Second axis as `name:lo:hi:steps`.
        #[arg(long)]
        b: String,
        #[arg(long, value_enum, default_value_t = SeedModeArg::Fresh)]
        seed_mode: SeedModeArg,
        #[arg(long, default_value_t = 2)]
        replicates: usize,
    },
    /// Summarise a trace: estimates, MCSE, 95% intervals and split R̂.
    Diagnose {
        /// Trace CSV (defaults to `<out-dir>/trace.csv`).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        rhat_threshold: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SeedModeArg {
    Fresh,
    Common,
}

impl From<SeedModeArg> for SeedMode {
    fn from(m: SeedModeArg) -> Self {
        match m {
            SeedModeArg::Fresh => SeedMode::Fresh,
            SeedModeArg::Common => SeedMode::Common,
        }
    }
}

/// Loaded configuration with command-line overrides applied.
pub struct Session {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub global: GlobalArgs,
}

impl Session {
    pub fn open(global: &GlobalArgs) -> Result<Self> {
        let path = global
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
        let mut config = RunConfig::from_path(path)?;
        let s = &mut config.sampler;
        if let Some(v) = global.seed {
            s.seed = v;
        }
        if let Some(v) = global.workers {
            s.workers = v;
        }
        if let Some(v) = global.iterations {
            s.iterations = v;
        }
        if let Some(v) = global.n_importance {
            s.n_importance = v;
        }
        if let Some(v) = global.burn_in {
            s.burn_in = v;
        }
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self {
            config,
            base_dir,
            global: global.clone(),
        })
    }

    pub fn load(&self, data_override: Option<&Path>) -> Result<(Dataset, ModelSpec)> {
        let path = match data_override {
            Some(p) => p.to_path_buf(),
            None => self.config.data_path(&self.base_dir)?,
        };
        let data = load_dataset(&path, &self.config)?;
        let spec = self.config.model_spec()?;
        spec.check_data(&data)?;
        Ok((data, spec))
    }

    fn theta(&self, spec: &ModelSpec, file: Option<&Path>) -> Result<ParamVector> {
        let map: BTreeMap<String, f64> = match file {
            Some(p) => read_theta_file(p)?,
            None => match &self.config.simulate {
                Some(sim) => sim.truth.clone(),
                None => self
                    .config
                    .parameters
                    .iter()
                    .map(|p| {
                        p.init.map(|v| (p.name.clone(), v)).ok_or_else(|| {
                            Error::Config("no --theta given and no truth or init values in the config".into())
                        })
                    })
                    .collect::<Result<_>>()?,
            },
        };
        theta_from_map(spec, &map)
    }

    pub fn with_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.sampler.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(f))
    }

    /// Loads data, draws or reads the initial state, and runs the chain.
    pub fn run(&self, data_override: Option<&Path>) -> Result<Trace> {
        let (data, spec) = self.load(data_override)?;
        let s = &self.config.sampler;
        let init = self.config.initial_state(&spec, s.seed)?;
        let prop = self.config.proposal()?;
        let mut trace =
            self.with_pool(|| run_chain(&data, &spec, &prop, &init, s.iterations, s.n_importance, s.seed))??;
        trace.meta.burn_in = s.burn_in;
        Ok(trace)
    }
}

fn parse_axis(text: &str) -> Result<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Config(format!("axis `{text}` must look like name:lo:hi:steps"));
    if parts.len() != 4 {
        return Err(bad());
    }
    Ok(Axis {
        param: parts[0].to_string(),
        lo: parts[1].parse().map_err(|_| bad())?,
        hi: parts[2].parse().map_err(|_| bad())?,
        steps: parts[3].parse().map_err(|_| bad())?,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs a parsed command line, returning the process exit status.
pub fn execute(cli: Cli) -> Result<i32> {
    let out = &cli.global.out_dir;
    match cli.command {
        Command::Simulate => {
            let session = Session::open(&cli.global)?;
            ensure_dir(out)?;
            let (data, truth) = crate::simulate::simulate(&session.config, session.config.sampler.seed)?;
            write_dataset(out.join("data.csv"), &data, &session.config.data.response)?;
            write_text(&out.join("truth.toml"), &toml::to_string(&truth)?)?;
            for (j, name) in data.column_names().iter().enumerate() {
                eprintln!("{name}: {:.1}% missing", 100.0 * data.column_missing_fraction(j));
            }
        }
        Command::Run { data } => {
            let session = Session::open(&cli.global)?;
            ensure_dir(out)?;
            let trace = session.run(data.as_deref())?;
            write_trace(out.join("trace.csv"), &trace)?;
            eprintln!(
                "{} iterations, acceptance rate {:.3}",
                trace.rows.len(),
                trace.acceptance_rate()
            );
        }
        Command::Tune {
            data,
            theta,
            grid,
            replicates,
        } => {
            let session = Session::open(&cli.global)?;
            ensure_dir(out)?;
            let (data, spec) = session.load(data.as_deref())?;
            let theta = session.theta(&spec, theta.as_deref())?;
            let seed = session.config.sampler.seed;
            let report = session.with_pool(|| tune(&data, &spec, &theta, &grid, replicates, seed))??;
            write_text(&out.join("tune.csv"), &report.to_csv())?;
            print!("{}", report.to_text());
        }
        Command::Surface {
            data,
            theta,
            a,
            b,
            seed_mode,
            replicates,
        } => {
            let session = Session::open(&cli.global)?;
            ensure_dir(out)?;
            let (data, spec) = session.load(data.as_deref())?;
            let theta = session.theta(&spec, theta.as_deref())?;
            let (axis_a, axis_b) = (parse_axis(&a)?, parse_axis(&b)?);
            let s = &session.config.sampler;
            let points = session.with_pool(|| {
                surface(
                    &data,
                    &spec,
                    &theta,
                    &axis_a,
                    &axis_b,
                    s.n_importance,
                    s.seed,
                    seed_mode.into(),
                    replicates,
                )
            })??;
            write_text(
                &out.join("surface.csv"),
                &surface_csv(&points, &axis_a.param, &axis_b.param),
            )?;
        }
        Command::Diagnose { trace, rhat_threshold } => {
            let config = match &cli.global.config {
                Some(_) => Some(Session::open(&cli.global)?.config),
                None => None,
            };
            let trace_path = trace.unwrap_or_else(|| out.join("trace.csv"));
            let trace = read_trace(&trace_path)?;
            let burn_in = cli
                .global
                .burn_in
                .or(config.as_ref().map(|c| c.sampler.burn_in))
                .unwrap_or(trace.meta.burn_in);
            let threshold = rhat_threshold
                .or(config.as_ref().map(|c| c.sampler.rhat_threshold))
                .unwrap_or(1.1);
            let rows = summarize(&trace, burn_in)?;
            ensure_dir(out)?;
            write_summary(out.join("summary.csv"), &rows)?;
            print!("{}", format_table(&rows));
            let high: Vec<&str> = rows
                .iter()
                .filter(|r| r.rhat > threshold || r.rhat.is_nan())
                .map(|r| r.name.as_str())
                .collect();
            if !high.is_empty() {
                eprintln!("warning: R-hat above {threshold} for {}", high.join(", "));
                return Ok(EXIT_RHAT_WARNING);
            }
        }
    }
    Ok(0)
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
