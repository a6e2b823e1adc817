//! The `dressing` command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{PipelineConfig, CONFIG_ENV};
use crate::error::{Error, ExitClass, Result};
use crate::geometry::ArmPosture;
use crate::io::{self, AngleUnit};
use crate::metrics::effectiveness;
use crate::policy::{generate_with_grid, train_policy, BimanualPolicy, ConditionalModel, TrainingSet};
use crate::preprocess::{convert_demonstration, Demonstration, RawDemonstration};
use crate::synth::{make_posture, synth_dataset};

#[derive(Debug, Parser)]
#[command(name = "dressing", version, about = "Learn and generate bimanual dressing trajectories")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset with known ground truth.
    Synth(SynthArgs),
    /// Convert a dataset to spherical demonstrations and report their ranges.
    Preprocess(PreprocessArgs),
    /// Fit a policy to a dataset.
    Train(TrainArgs),
    /// Generate trajectories for a posture.
    Generate(GenerateArgs),
    /// Report the dressing effectiveness of an armscye measurement.
    Evaluate(EvaluateArgs),
    /// Summarize a policy file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-coordinate noise standard deviation, meters.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Arm-2 azimuth lag, degrees.
    #[arg(long)]
    lag: Option<f64>,
    /// Elbow angles, degrees.
    #[arg(long, value_delimiter = ',')]
    angles: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "degrees")]
    angle_unit: UnitArg,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum UnitArg {
    Degrees,
    Radians,
}

impl From<UnitArg> for AngleUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Degrees => AngleUnit::Degrees,
            UnitArg::Radians => AngleUnit::Radians,
        }
    }
}

#[derive(Debug, Args)]
struct SmoothingArgs {
    /// Skip LOWESS smoothing.
    #[arg(long)]
    no_smoothing: bool,
    #[arg(long)]
    lowess_fraction: Option<f64>,
    #[arg(long)]
    robust_iterations: Option<usize>,
    /// Points per resampled demonstration.
    #[arg(long)]
    demo_grid: Option<usize>,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Write the spherical demonstrations here.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    smoothing: SmoothingArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Points in the generation sweep stored with the policy.
    #[arg(long)]
    grid_size: Option<usize>,
    #[command(flatten)]
    smoothing: SmoothingArgs,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(short, long)]
    policy: PathBuf,
    /// Posture file.
    #[arg(long, conflicts_with = "psi", required_unless_present = "psi")]
    posture: Option<PathBuf>,
    /// Elbow angle in degrees; the posture is built with the synthetic arm.
    #[arg(long)]
    psi: Option<f64>,
    /// Trajectory table destination; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    grid_size: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Posture plus armscye points.
    #[arg(short, long)]
    armscye: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(short, long)]
    policy: PathBuf,
}

/// Runs the CLI with `args` (program name first) and returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitClass::Usage as i32 } else { 0 };
            let rendered = e.to_string();
            if e.use_stderr() {
                let first = rendered.lines().next().unwrap_or("").trim_start_matches("error: ");
                let _ = writeln!(err, "error: UsageError: {first}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error: {}: {message}", e.category());
            e.exit_class() as i32
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Synth(a) => synth(a, config, out),
        Command::Preprocess(a) => preprocess(a, config, out),
        Command::Train(a) => train(a, config, out),
        Command::Generate(a) => generate(a, config, out, err),
        Command::Evaluate(a) => evaluate(a, out),
        Command::Inspect(a) => inspect(a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::Io {
        path: PathBuf::from("<stdout>"),
        message: e.to_string(),
    })
}

fn synth(a: SynthArgs, config: PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let mut params = config.synth;
    if let Some(s) = a.seed {
        params.seed = s;
    }
    if let Some(n) = a.noise {
        params.noise_sigma = n;
    }
    if let Some(n) = a.samples {
        params.samples_per_demo = n;
    }
    if let Some(l) = a.lag {
        params.coupling_lag = l.to_radians();
    }
    let angles = a.angles.unwrap_or(config.dataset.elbow_angles_deg);
    let psis: Vec<f64> = angles.iter().map(|d| d.to_radians()).collect();
    let demos: Vec<RawDemonstration> = synth_dataset(&psis, &params)?
        .into_iter()
        .map(|(raw, _)| raw)
        .collect();
    io::save_dataset(&a.output, &demos, a.angle_unit.into())?;
    emit(
        out,
        &format!(
            "wrote {} demonstrations to {}\n",
            demos.len(),
            a.output.display()
        ),
    )
}

fn preprocess_config(s: &SmoothingArgs, config: &PipelineConfig) -> crate::preprocess::PreprocessConfig {
    let mut c = config.preprocess;
    if s.no_smoothing {
        c.smoothing = false;
    }
    if let Some(f) = s.lowess_fraction {
        c.lowess.fraction = f;
    }
    if let Some(r) = s.robust_iterations {
        c.lowess.robust_iterations = r;
    }
    if let Some(g) = s.demo_grid {
        c.grid_size = g;
    }
    c
}

fn convert_all(
    raws: &[RawDemonstration],
    config: &crate::preprocess::PreprocessConfig,
) -> Result<Vec<Demonstration>> {
    raws.iter()
        .enumerate()
        .map(|(i, r)| {
            convert_demonstration(r, config).map_err(|e| match e {
                Error::Validation { location, message } => Error::Validation {
                    location: format!("demonstrations[{i}].{location}"),
                    message,
                },
                Error::NonTraversal { .. } => Error::validation(
                    format!("demonstrations[{i}]"),
                    e.to_string(),
                ),
                other => other,
            })
        })
        .collect()
}

fn preprocess(a: PreprocessArgs, config: PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let pc = preprocess_config(&a.smoothing, &config);
    let raws = io::load_dataset(&a.input)?;
    let demos = convert_all(&raws, &pc)?;
    let mut text = String::from("demo\tpsi_deg\tphi1_start\tphi1_end\tphi2_start\tphi2_end\tpoints\n");
    for (i, d) in demos.iter().enumerate() {
        let n = d.grid_len();
        text.push_str(&format!(
            "{i}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{n}\n",
            d.elbow_angle.to_degrees(),
            d.traj1[0].phi.to_degrees(),
            d.traj1[n - 1].phi.to_degrees(),
            d.traj2[0].phi.to_degrees(),
            d.traj2[n - 1].phi.to_degrees(),
        ));
    }
    emit(out, &text)?;
    if let Some(path) = &a.output {
        io::save_demonstrations(path, &demos, AngleUnit::Degrees)?;
    }
    Ok(())
}

fn bic_table(name: &str, m: &ConditionalModel) -> String {
    let mut s = format!("{name}: K = {}\n  k\tbic\tlog_likelihood\n", m.model.k());
    for e in &m.bic_table {
        match (e.bic, e.log_likelihood, &e.failure) {
            (Some(b), Some(ll), _) => s.push_str(&format!("  {}\t{b:.3}\t{ll:.3}\n", e.k)),
            (_, _, Some(f)) => s.push_str(&format!("  {}\tfailed: {f}\n", e.k)),
            _ => s.push_str(&format!("  {}\t-\n", e.k)),
        }
    }
    s
}

fn train(a: TrainArgs, config: PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let pc = preprocess_config(&a.smoothing, &config);
    let mut tc = config.train;
    if let Some(s) = a.seed {
        tc.seed = s;
    }
    if let Some(k) = a.k_min {
        tc.k_min = k;
    }
    if let Some(k) = a.k_max {
        tc.k_max = k;
    }
    if let Some(g) = a.grid_size {
        tc.grid_size = g;
    }
    let raws = io::load_dataset(&a.input)?;
    let demos = convert_all(&raws, &pc)?;
    let ts = TrainingSet::new(demos)?;
    let mut policy = train_policy(&ts, &tc)?;
    policy.preprocess = Some(pc);
    io::save_policy(&policy, &a.output)?;
    let mut text = String::new();
    for (name, m) in [
        ("arm_one", &policy.arm_one),
        ("coupling", &policy.coupling),
        ("arm_two", &policy.arm_two),
    ] {
        text.push_str(&bic_table(name, m));
    }
    text.push_str(&format!("wrote policy to {}\n", a.output.display()));
    emit(out, &text)
}

fn posture_for(a: &GenerateArgs, config: &PipelineConfig) -> Result<ArmPosture> {
    match (&a.posture, a.psi) {
        (Some(path), _) => io::load_posture(path),
        (None, Some(deg)) => make_posture(deg.to_radians(), &config.synth, 0),
        (None, None) => Err(Error::InvalidArgument("either --posture or --psi is required".into())),
    }
}

fn generate(a: GenerateArgs, config: PipelineConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let policy = io::load_policy(&a.policy)?;
    let posture = posture_for(&a, &config)?;
    let grid = a.grid_size.unwrap_or(policy.grid_size);
    let g = generate_with_grid(&policy, &posture, grid)?;
    if g.extrapolated {
        let _ = writeln!(
            err,
            "warning: elbow angle {:.2} deg is outside the training range [{:.2}, {:.2}] deg",
            g.psi.to_degrees(),
            policy.psi_range.0.to_degrees(),
            policy.psi_range.1.to_degrees()
        );
    }
    let table = io::trajectory_table(&g);
    match &a.output {
        Some(path) => {
            io::write_atomic(path, table.as_bytes())?;
            emit(
                out,
                &format!("wrote {} rows to {}\n", g.arm1.len(), path.display()),
            )
        }
        None => emit(out, &table),
    }
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let (posture, points) = io::load_armscye(&a.armscye)?;
    let r = effectiveness(&posture, &points)?;
    emit(out, &format!("{:.1}\n", r.percent()))
}

fn inspect(a: InspectArgs, out: &mut dyn Write) -> Result<()> {
    let policy = io::load_policy(&a.policy)?;
    emit(out, &summary(&policy, &a.policy))
}

fn summary(p: &BimanualPolicy, path: &Path) -> String {
    let tc = &p.train_config;
    let mut s = format!(
        "policy {}\npsi range: {:.2} .. {:.2} deg\ngrid size: {}\nseed: {}  K search: {}..{}  EM tolerance: {:e}  max iterations: {}\n",
        path.display(),
        p.psi_range.0.to_degrees(),
        p.psi_range.1.to_degrees(),
        p.grid_size,
        tc.seed,
        tc.k_min,
        tc.k_max,
        tc.em.tolerance,
        tc.em.max_iterations,
    );
    if let Some(pc) = &p.preprocess {
        s.push_str(&format!(
            "smoothing: {}  lowess fraction: {}  robust iterations: {}\n",
            pc.smoothing, pc.lowess.fraction, pc.lowess.robust_iterations
        ));
    }
    for (name, m) in [
        ("arm_one", &p.arm_one),
        ("coupling", &p.coupling),
        ("arm_two", &p.arm_two),
    ] {
        s.push_str(&format!(
            "{name}: inputs {:?} outputs {:?} K = {} log-likelihood {:.3}\n",
            m.split.input_dims,
            m.split.output_dims,
            m.model.k(),
            m.model.log_likelihood
        ));
    }
    s
}

