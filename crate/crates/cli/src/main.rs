//! `heatflow`: field generation, heat-flow diagnostics, Besov norms,
//! commutator and flux experiments, Euler runs and the verification suites.

mod commands;
mod config;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heatflow_core::besov::BesovMode;
use heatflow_core::fields::LacunaryGeometry;
use heatflow_core::{GeneratorSpec, Report, ReportFormat};

use config::{default_generator, parse_besov_spec, CliError, CliResult, FluxGenerator, RunConfig, ScheduleConfig, Suite};

#[derive(Parser, Debug)]
#[command(name = "heatflow", version, about = "Heat-flow regularization of incompressible fields on the torus and sphere")]
struct Cli {
    /// JSON run configuration; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report file (stdout when absent).
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Heat-time schedule: `standard` or `s_min,s_max,ratio`.
    #[arg(long, global = true)]
    schedule: Option<String>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a divergence-free field and write it as an OHFL file.
    Gen(GenArgs),
    /// Heat-flow diagnostics of a field; optionally export U(s).
    Smooth(SmoothArgs),
    /// Heat-flow Besov norm and c(N) flags of a field.
    Besov(BesovArgs),
    /// Heat versus Littlewood-Paley norm ratios over the standard field set (CSV by default).
    BesovEquiv(BesovEquivArgs),
    /// Commutator decomposition, source identity and flux at one heat time.
    Commutator(CommutatorArgs),
    /// Flux decay exponent over a lacunary ensemble (CSV by default).
    FluxDecay(FluxArgs),
    /// Run 2D Euler and write the trajectory.
    EulerRun(EulerRunArgs),
    /// Smoothed energy identity and weak-form residual of a stored trajectory.
    EulerVerify(EulerVerifyArgs),
    /// Run the verification suites; exit 0 iff every check passes.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct GeneratorArgs {
    /// Generator kind: single_mode, lacunary, random_slope, taylor_green,
    /// sphere_mode, sphere_lacunary, sphere_random.
    #[arg(long)]
    kind: Option<String>,
    /// Torus resolution.
    #[arg(long)]
    n: Option<usize>,
    /// Sphere bandwidth.
    #[arg(long)]
    l_max: Option<usize>,
    /// Regularity of lacunary fields.
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of lacunary shells.
    #[arg(long = "J")]
    shells: Option<u32>,
    /// Seed of random generators.
    #[arg(long)]
    seed: Option<u64>,
    /// Spectral slope of random_slope, decay of sphere_random.
    #[arg(long)]
    gamma: Option<f64>,
    /// Wavevector of single_mode, e.g. `3,4`.
    #[arg(long)]
    k: Option<String>,
    /// Degree and order of sphere_mode, e.g. `2,1`.
    #[arg(long)]
    lm: Option<String>,
    /// Lacunary geometry.
    #[arg(long, value_enum)]
    geometry: Option<Geometry>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Geometry {
    Shear,
    Shells,
}

impl From<Geometry> for LacunaryGeometry {
    fn from(g: Geometry) -> Self {
        match g {
            Geometry::Shear => LacunaryGeometry::Shear,
            Geometry::Shells => LacunaryGeometry::Shells,
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Output OHFL file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FieldArgs {
    /// Input OHFL field; the configured generator is used when absent.
    #[arg(long)]
    field: Option<PathBuf>,
    #[command(flatten)]
    generator: GeneratorArgs,
}

#[derive(Args, Debug)]
struct SmoothArgs {
    #[command(flatten)]
    input: FieldArgs,
    /// Heat time of the exported field.
    #[arg(long)]
    s: Option<f64>,
    /// Exponent of the L^p estimates.
    #[arg(long)]
    p: Option<f64>,
    /// Write e^{s Delta} u here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BesovArgs {
    #[command(flatten)]
    input: FieldArgs,
    /// `alpha,p,r` with r a number, `inf` or `cN`.
    #[arg(long)]
    spec: Option<String>,
}

#[derive(Args, Debug)]
struct BesovEquivArgs {
    /// `alpha,p,r` with r a number, `inf` or `cN`.
    #[arg(long)]
    spec: Option<String>,
    /// Grid of the field set.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct CommutatorArgs {
    #[command(flatten)]
    input: FieldArgs,
    /// Heat time.
    #[arg(long)]
    s: Option<f64>,
    /// Graded Duhamel nodes.
    #[arg(long)]
    quad_nodes: Option<usize>,
}

#[derive(Args, Debug)]
struct FluxArgs {
    /// `lacunary` (torus) or `sphere_lacunary`.
    #[arg(long)]
    generator: Option<String>,
    /// Regularity exponent of the ensemble.
    #[arg(long)]
    alpha: Option<f64>,
    /// Torus resolution.
    #[arg(long)]
    n: Option<usize>,
    /// Sphere bandwidth.
    #[arg(long)]
    l_max: Option<usize>,
    /// Number of lacunary shells.
    #[arg(long = "J")]
    shells: Option<u32>,
    /// Torus lacunary geometry.
    #[arg(long, value_enum)]
    geometry: Option<Geometry>,
    /// Ensemble size; seeds run upward from `--seed`.
    #[arg(long)]
    ensemble: Option<usize>,
    /// First seed of the ensemble.
    #[arg(long)]
    seed: Option<u64>,
    /// Graded Duhamel nodes (curved backends).
    #[arg(long)]
    quad_nodes: Option<usize>,
}

#[derive(Args, Debug)]
struct EulerRunArgs {
    /// Torus resolution.
    #[arg(long)]
    n: Option<usize>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Steps between stored snapshots.
    #[arg(long)]
    stride: Option<usize>,
    /// `taylor-green` or `random:<seed>`.
    #[arg(long)]
    init: Option<String>,
    /// Trajectory file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EulerVerifyArgs {
    /// Trajectory written by `euler-run`.
    traj: PathBuf,
    /// Heat times of the identity: `standard` or `s_min,s_max,ratio`.
    #[arg(long)]
    s_schedule: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Suites to run (all when absent).
    #[arg(value_enum)]
    suites: Vec<Suite>,
}

fn parse_ints(text: &str) -> CliResult<Vec<i64>> {
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| CliError::Usage(format!("`{t}` is not an integer"))))
        .collect()
}

fn apply_generator(cfg: &mut RunConfig, a: &GeneratorArgs) -> CliResult<()> {
    if let Some(kind) = &a.kind {
        cfg.generator = default_generator(kind)?;
    }
    match &mut cfg.generator {
        GeneratorSpec::SingleMode { n, k } => {
            set(n, a.n);
            if let Some(text) = &a.k {
                *k = parse_ints(text)?;
            }
        }
        GeneratorSpec::Lacunary { n, alpha, shells, seed, geometry } => {
            set(n, a.n);
            set(alpha, a.alpha);
            set(shells, a.shells);
            set(seed, a.seed);
            set(geometry, a.geometry.map(Into::into));
        }
        GeneratorSpec::RandomSlope { n, gamma, seed } => {
            set(n, a.n);
            set(gamma, a.gamma);
            set(seed, a.seed);
        }
        GeneratorSpec::TaylorGreen { n } => set(n, a.n),
        GeneratorSpec::SphereMode { l_max, l, m } => {
            set(l_max, a.l_max);
            if let Some(text) = &a.lm {
                match parse_ints(text)?[..] {
                    [dl, dm] if dl >= 1 => {
                        *l = dl as usize;
                        *m = dm;
                    }
                    _ => return Err(CliError::Usage(format!("--lm `{text}`: expected `l,m` with l >= 1"))),
                }
            }
        }
        GeneratorSpec::SphereLacunary { l_max, alpha, shells, seed } => {
            set(l_max, a.l_max);
            set(alpha, a.alpha);
            set(shells, a.shells);
            set(seed, a.seed);
        }
        GeneratorSpec::SphereRandom { l_max, decay, seed } => {
            set(l_max, a.l_max);
            set(decay, a.gamma);
            set(seed, a.seed);
        }
    }
    Ok(())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_spec(cfg: &mut RunConfig, spec: &Option<String>) -> CliResult<()> {
    if let Some(text) = spec {
        let (alpha, p, mode): (f64, f64, BesovMode) = parse_besov_spec(text)?;
        cfg.besov.alpha = alpha;
        cfg.besov.p = p;
        cfg.besov.mode = mode;
    }
    Ok(())
}

/// Resolved configuration: defaults, then the config file, then flags.
fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.report, cli.report.clone().map(Some));
    if let Some(f) = cli.format {
        cfg.format = Some(match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        });
    }
    if let Some(text) = &cli.schedule {
        cfg.schedule = ScheduleConfig::parse(text)?;
    }
    match &cli.command {
        Command::Gen(a) => apply_generator(&mut cfg, &a.generator)?,
        Command::Smooth(a) => {
            apply_input(&mut cfg, &a.input)?;
            set(&mut cfg.smooth.s, a.s);
            set(&mut cfg.smooth.p, a.p);
            set(&mut cfg.smooth.out, a.out.clone().map(Some));
        }
        Command::Besov(a) => {
            apply_input(&mut cfg, &a.input)?;
            apply_spec(&mut cfg, &a.spec)?;
        }
        Command::BesovEquiv(a) => {
            apply_spec(&mut cfg, &a.spec)?;
            set(&mut cfg.besov.equiv_n, a.n);
        }
        Command::Commutator(a) => {
            apply_input(&mut cfg, &a.input)?;
            set(&mut cfg.commutator.s, a.s);
            set(&mut cfg.commutator.quad_nodes, a.quad_nodes);
        }
        Command::FluxDecay(a) => {
            if let Some(g) = &a.generator {
                cfg.flux.generator = match g.replace('-', "_").as_str() {
                    "lacunary" => FluxGenerator::Lacunary,
                    "sphere_lacunary" => FluxGenerator::SphereLacunary,
                    other => return Err(CliError::Usage(format!("flux generator `{other}`: expected lacunary or sphere_lacunary"))),
                };
            }
            let f = &mut cfg.flux;
            set(&mut f.alpha, a.alpha);
            set(&mut f.n, a.n);
            set(&mut f.l_max, a.l_max);
            set(&mut f.shells, a.shells);
            set(&mut f.geometry, a.geometry.map(Into::into));
            set(&mut f.ensemble, a.ensemble);
            set(&mut f.seed, a.seed);
            set(&mut f.quad_nodes, a.quad_nodes);
        }
        Command::EulerRun(a) => {
            let e = &mut cfg.euler;
            set(&mut e.n, a.n);
            set(&mut e.dt, a.dt);
            set(&mut e.t_final, a.t_final);
            set(&mut e.stride, a.stride);
            set(&mut e.init, a.init.clone());
            set(&mut e.out, a.out.clone().map(Some));
        }
        Command::EulerVerify(a) => {
            if let Some(text) = &a.s_schedule {
                cfg.schedule = ScheduleConfig::parse(text)?;
            }
        }
        Command::Verify(a) => {
            if !a.suites.is_empty() {
                cfg.verify.suites = a.suites.clone();
            }
        }
    }
    Ok(cfg)
}

fn apply_input(cfg: &mut RunConfig, a: &FieldArgs) -> CliResult<()> {
    set(&mut cfg.field, a.field.clone().map(Some));
    apply_generator(cfg, &a.generator)
}

fn execute(cli: &Cli, cfg: &RunConfig) -> CliResult<(Report, ReportFormat)> {
    let csv_default = matches!(cli.command, Command::BesovEquiv(_) | Command::FluxDecay(_));
    let format = cfg.format.unwrap_or(if csv_default { ReportFormat::Csv } else { ReportFormat::Json });
    let report = match &cli.command {
        Command::Gen(a) => commands::gen(cfg, a.out.as_deref())?,
        Command::Smooth(_) => commands::smooth(cfg)?,
        Command::Besov(_) => commands::besov(cfg)?,
        Command::BesovEquiv(_) => commands::besov_equiv(cfg)?,
        Command::Commutator(_) => commands::commutator(cfg)?,
        Command::FluxDecay(_) => commands::flux_decay(cfg)?,
        Command::EulerRun(_) => commands::euler_run(cfg)?,
        Command::EulerVerify(a) => commands::euler_verify(cfg, &a.traj, &cfg.schedule.build()?)?,
        Command::Verify(_) => commands::verify(cfg)?,
    };
    Ok((report, format))
}

fn thread_pool() -> CliResult<()> {
    let Ok(text) = std::env::var("OHFL_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("OHFL_THREADS=`{text}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn main_inner(cli: Cli) -> CliResult<bool> {
    thread_pool()?;
    let cfg = resolve(&cli)?;
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return Ok(true);
    }
    let (report, format) = execute(&cli, &cfg)?;
    match &cfg.report {
        Some(path) => report.write(path, format).map_err(|e| match e {
            heatflow_core::Error::Io(source) => CliError::Io { path: path.display().to_string(), source },
            e => e.into(),
        })?,
        None => print!("{}", report.render(format)?),
    }
    for c in report.failures() {
        eprintln!(
            "FAIL {}{}: {:e} (threshold {:e}, {:?})",
            c.check,
            c.s.map(|s| format!(" at s={s}")).unwrap_or_default(),
            c.value,
            c.threshold,
            c.comparison
        );
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
