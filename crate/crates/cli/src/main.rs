//! `skwave`: run and verify constrained stochastic wave experiments.
//!
//! Every flag can also be set through an environment variable with the
//! `SKWAVE_` prefix (`SKWAVE_CONFIG`, `SKWAVE_SEED`, `SKWAVE_JOBS`,
//! `SKWAVE_OUT`, `SKWAVE_PROJECT`, `SKWAVE_DRIFT`); flags win over the
//! environment. Log verbosity follows `SKWAVE_LOG` (default `warn`).
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 usage or configuration
//! error, 3 numerical blow-up, 4 invariant failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use skwave_core::config::{OutputFormat, SimConfig};
use skwave_core::io::{self, OutputDigest, RunMetadata};
use skwave_core::limit::{simulate_limit, DiscriminatorReport};
use skwave_core::verify::{run_suite, Suite};
use skwave_core::wave::{energy_equality_residual, remainder_r_mu, simulate_wave, Trajectory};
use skwave_core::{
    discriminator_experiment, load_config, small_mass_sweep, ConvergenceReport, DriftKind, Error,
    Projection,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BLOW_UP: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "skwave", version, about = "Sphere-constrained stochastic wave equations and their small-mass limit")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration (defaults apply when omitted)
    #[arg(long, global = true, env = "SKWAVE_CONFIG")]
    config: Option<PathBuf>,

    /// Noise seed, overriding `noise.seed`
    #[arg(long, global = true, env = "SKWAVE_SEED")]
    seed: Option<u64>,

    /// Worker threads for replica ensembles (default: available parallelism)
    #[arg(long, global = true, env = "SKWAVE_JOBS")]
    jobs: Option<usize>,

    /// Output directory, overriding `output.directory`
    #[arg(long, global = true, env = "SKWAVE_OUT")]
    out: Option<PathBuf>,

    /// Renormalization after each step: each-step | never
    #[arg(long, global = true, env = "SKWAVE_PROJECT")]
    project: Option<Projection>,

    /// Limit-equation drift: noise-induced | stratonovich
    #[arg(long, global = true, env = "SKWAVE_DRIFT")]
    drift: Option<DriftKind>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path of the damped wave system
    SimulateWave {
        #[arg(long, default_value_t = 0)]
        replica: u64,
        /// Mass, overriding `wave.mu`
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Simulate one path of the parabolic limit equation
    SimulateLimit {
        #[arg(long, default_value_t = 0)]
        replica: u64,
    },
    /// Small-mass convergence sweep against the limit on coupled noise
    SweepMu,
    /// Compare the noise-induced and Stratonovich limit equations
    Discriminate,
    /// Run invariant suites; exits 4 if any check fails
    Verify {
        /// geometry | identity | functional | scheme | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Re-render a saved JSON report as CSV
    Report {
        /// sweep_report.json or discriminator.json
        #[arg(long)]
        input: PathBuf,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
            Some(Error::BlowUp { .. }) => EXIT_BLOW_UP,
            Some(Error::Config(_)) | Some(Error::InvalidArgument(_)) => EXIT_USAGE,
            Some(_) => EXIT_FAILURE,
            None => EXIT_FAILURE,
        };
        Self { code, err }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

fn fail(code: u8, msg: impl Into<String>) -> Failure {
    Failure {
        code,
        err: anyhow!(msg.into()),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Run {
    config: SimConfig,
    config_file: String,
    warnings: Vec<String>,
    out: PathBuf,
}

impl Run {
    fn prepare(common: &Common) -> CliResult<Self> {
        let (mut config, config_file) = match &common.config {
            Some(p) => (load_config(p)?.0, p.display().to_string()),
            None => (SimConfig::minimal(16, 0), String::new()),
        };
        if let Some(seed) = common.seed {
            config.noise.seed = seed;
        }
        if let Some(project) = common.project {
            config.wave.project = project;
        }
        if let Some(drift) = common.drift {
            config.limit.drift = drift;
        }
        let warnings = config.materialize()?;
        for w in &warnings {
            log::warn!("{w}");
        }
        let out = common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(&config.output.directory));
        fs::create_dir_all(&out)
            .with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(Self {
            config,
            config_file,
            warnings,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes `config.toml` and `run.json` next to the outputs.
    fn finish(&self, command: &str, scheme: &str, replica: Option<u64>, outputs: &[&str]) -> CliResult<()> {
        let echo = self.config.to_toml()?;
        fs::write(self.path("config.toml"), &echo)
            .context("writing config echo")?;
        let mut digests = vec![];
        for name in outputs {
            digests.push(OutputDigest {
                file: name.to_string(),
                sha256: io::file_sha256(self.path(name))?,
            });
        }
        let meta = RunMetadata {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scheme: scheme.into(),
            seed: self.config.noise.seed,
            replica,
            config_file: self.config_file.clone(),
            config_hash: self.config.content_hash()?,
            config: echo,
            warnings: self.warnings.clone(),
            outputs: digests,
        };
        io::write_json(&meta, self.path("run.json"))?;
        println!("wrote {} (config {})", self.out.display(), meta.config_hash);
        Ok(())
    }
}

fn trajectory_summary(tr: &Trajectory) -> serde_json::Value {
    let worst = tr
        .states
        .iter()
        .map(|z| {
            let (a, b) = z.constraint_defects();
            a.max(b)
        })
        .fold(0.0, f64::max);
    serde_json::json!({
        "n_steps": tr.n_steps(),
        "dt": tr.dt,
        "increments_fingerprint": format!("{:016x}", tr.increments.fingerprint()),
        "max_constraint_defect": worst,
        "final_u": tr.final_state().u,
        "final_diagnostics": tr.diagnostics.last(),
    })
}

fn write_trajectory(run: &Run, tr: &Trajectory, extra: serde_json::Value) -> CliResult<Vec<&'static str>> {
    let mut outputs = vec![];
    if run.config.output.wants(OutputFormat::Csv) {
        io::save_trajectory_csv(tr, run.path("trajectory.csv"))?;
        outputs.push("trajectory.csv");
    }
    if run.config.output.wants(OutputFormat::Json) {
        let mut summary = trajectory_summary(tr);
        if let (Some(s), serde_json::Value::Object(e)) = (summary.as_object_mut(), extra) {
            s.extend(e);
        }
        io::write_json(&summary, run.path("summary.json"))?;
        outputs.push("summary.json");
    }
    Ok(outputs)
}

fn simulate_wave_cmd(run: &mut Run, replica: u64, mu: Option<f64>) -> CliResult<()> {
    if let Some(mu) = mu {
        run.config.wave.mu = mu;
        run.warnings = run.config.materialize()?;
    }
    let c = &run.config;
    let p = c.wave_params();
    let dm = c.diffusion_model()?;
    let tr = simulate_wave(&c.initial_state()?, &p, &dm, &c.noise_model()?, replica)?;
    let extra = serde_json::json!({
        "energy_equality_residual": energy_equality_residual(&tr, &p, &dm),
        "sup_remainder_r_mu": remainder_r_mu(&tr, &p, &dm).into_iter().fold(0.0, f64::max),
    });
    let outputs = write_trajectory(run, &tr, extra)?;
    run.finish("simulate-wave", "wave-exponential-euler", Some(replica), &outputs)
}

fn simulate_limit_cmd(run: &Run, replica: u64) -> CliResult<()> {
    let c = &run.config;
    let tr = simulate_limit(
        &c.initial_state()?.u,
        &c.limit_params(),
        &c.diffusion_model()?,
        &c.noise_model()?,
        replica,
    )?;
    let outputs = write_trajectory(run, &tr, serde_json::json!({ "drift": c.limit.drift }))?;
    run.finish(
        "simulate-limit",
        &format!("limit-exponential-euler/{}", c.limit.drift),
        Some(replica),
        &outputs,
    )
}

fn write_sweep_outputs(run: &Run, rep: &ConvergenceReport, outputs: &mut Vec<&'static str>) -> CliResult<()> {
    if run.config.output.wants(OutputFormat::Json) {
        io::write_json(rep, run.path("sweep_report.json"))?;
        outputs.push("sweep_report.json");
    }
    if run.config.output.wants(OutputFormat::Csv) {
        io::write_sweep_csv(rep, fs::File::create(run.path("sweep_rows.csv")).context("sweep_rows.csv")?)?;
        io::write_sweep_summary_csv(
            rep,
            fs::File::create(run.path("sweep_summary.csv")).context("sweep_summary.csv")?,
        )?;
        outputs.extend(["sweep_rows.csv", "sweep_summary.csv"]);
    }
    Ok(())
}

fn sweep_cmd(run: &Run) -> CliResult<()> {
    let rep = small_mass_sweep(&run.config.sweep_config()?)?;
    for s in &rep.per_mu {
        println!(
            "mu = {:<8} L4(H1) error {:.6} ± {:.6}  E sup|R_mu| {:.6} ± {:.6}  excluded {}",
            s.mu,
            s.l4h1_error.mean,
            s.l4h1_error.stderr_or_zero(),
            s.sup_r_mu.mean,
            s.sup_r_mu.stderr_or_zero(),
            s.excluded
        );
    }
    println!(
        "error decreasing: {}  remainder decreasing: {}  monitor flags: {:?}",
        rep.error_decreasing, rep.remainder_decreasing, rep.monitor_flags
    );
    let mut outputs = vec![];
    write_sweep_outputs(run, &rep, &mut outputs)?;
    run.finish("sweep-mu", "coupled wave/limit exponential Euler", None, &outputs)?;
    if rep.exclusion_limit_exceeded {
        return Err(fail(EXIT_BLOW_UP, "more than 5% of the replicas blew up for some mass"));
    }
    Ok(())
}

fn write_discriminator_outputs(run: &Run, rep: &DiscriminatorReport, outputs: &mut Vec<&'static str>) -> CliResult<()> {
    if run.config.output.wants(OutputFormat::Json) {
        io::write_json(rep, run.path("discriminator.json"))?;
        outputs.push("discriminator.json");
    }
    if run.config.output.wants(OutputFormat::Csv) {
        io::write_discriminator_csv(
            rep,
            fs::File::create(run.path("discriminator.csv")).context("discriminator.csv")?,
        )?;
        outputs.push("discriminator.csv");
    }
    Ok(())
}

fn discriminate_cmd(run: &Run) -> CliResult<()> {
    let c = &run.config;
    let rep = discriminator_experiment(
        &c.initial_state()?.u,
        &c.limit_params(),
        &c.diffusion_model()?,
        &c.noise_model()?,
        c.discriminator.replicas,
        c.discriminator.checkpoints,
    )?;
    println!("{}", serde_json::to_string_pretty(&rep).context("serializing report")?);
    let mut outputs = vec![];
    write_discriminator_outputs(run, &rep, &mut outputs)?;
    run.finish("discriminate", "limit-exponential-euler/both drifts", None, &outputs)
}

fn verify_cmd(common: &Common, suite: &str, samples: usize) -> CliResult<()> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse()?]
    };
    let seed = common.seed.unwrap_or(20240501);
    let mut reports = vec![];
    for s in suites {
        let rep = run_suite(s, seed, samples)?;
        println!("[{}]", s.name());
        for c in &rep.checks {
            println!("  {c}");
        }
        reports.push(rep);
    }
    if let Some(out) = &common.out {
        fs::create_dir_all(out).context("creating output directory")?;
        io::write_json(&reports, out.join("verify.json"))?;
    }
    if reports.iter().all(|r| r.passed()) {
        Ok(())
    } else {
        Err(fail(EXIT_INVARIANT, "invariant check failed"))
    }
}

fn report_cmd(common: &Common, input: &Path) -> CliResult<()> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let dir = common
        .out
        .clone()
        .or_else(|| input.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    fs::create_dir_all(&dir).context("creating output directory")?;
    let file = |name: &str| fs::File::create(dir.join(name)).with_context(|| name.to_string());
    if let Ok(rep) = serde_json::from_str::<ConvergenceReport>(&text) {
        io::write_sweep_csv(&rep, file("sweep_rows.csv")?)?;
        io::write_sweep_summary_csv(&rep, file("sweep_summary.csv")?)?;
        println!("rendered sweep report into {}", dir.display());
    } else if let Ok(rep) = serde_json::from_str::<DiscriminatorReport>(&text) {
        io::write_discriminator_csv(&rep, file("discriminator.csv")?)?;
        println!("rendered discriminator report into {}", dir.display());
    } else {
        return Err(fail(
            EXIT_USAGE,
            format!("{} is neither a sweep nor a discriminator report", input.display()),
        ));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Verify { suite, samples } => return verify_cmd(&cli.common, suite, *samples),
        Command::Report { input } => return report_cmd(&cli.common, input),
        _ => {}
    }
    let mut run = Run::prepare(&cli.common)?;
    match cli.command {
        Command::SimulateWave { replica, mu } => simulate_wave_cmd(&mut run, replica, mu),
        Command::SimulateLimit { replica } => simulate_limit_cmd(&run, replica),
        Command::SweepMu => sweep_cmd(&run),
        Command::Discriminate => discriminate_cmd(&run),
        Command::Verify { .. } | Command::Report { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SKWAVE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.jobs.unwrap_or(0))
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
