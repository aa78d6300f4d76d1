//! Command-line driver for data-poisoning experiments against direct
//! data-driven control synthesis.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use poisonctl_core::attacker::{identify_apparent, verify_trajectory_compatible, AttackMode, DatasetEnvelope};
use poisonctl_core::defaults;
use poisonctl_core::pipeline::{
    norm_growth_report, run_pipeline, sweep_min_delta, DeltaSearch, ExperimentConfig,
    PlannerMethod, SystemSource,
};
use poisonctl_core::plant::spectrum;
use poisonctl_core::signals::{is_persistently_exciting, stacked_rank, DataMatrices, Sequence};

#[derive(Parser)]
#[command(
    name = "poisonctl",
    version,
    about = "Data-poisoning experiments against direct data-driven control synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identification → poisoning → synthesis → deployment protocol.
    Pipeline(RunArgs),
    /// Find the minimal effective |delta| across a grid of noise levels.
    SweepNoise(SweepArgs),
    /// Characterize perturbation norm growth of the recursive attack.
    NormGrowth(RunArgs),
    /// Inspect a stored poisoned-dataset JSON envelope.
    InspectData(InspectArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AttackArg {
    None,
    Hankel,
    Recursive,
}

impl AttackArg {
    fn mode(self) -> AttackMode {
        match self {
            AttackArg::None => AttackMode::None,
            AttackArg::Hankel => AttackMode::HankelShift,
            AttackArg::Recursive => AttackMode::Recursive,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlannerArg {
    Lqr,
    Pole,
}

impl PlannerArg {
    fn method(self) -> PlannerMethod {
        match self {
            PlannerArg::Lqr => PlannerMethod::Lqr,
            PlannerArg::Pole => PlannerMethod::Pole,
        }
    }
}

/// Experiment selection; every flag overrides the corresponding config-file
/// entry.
#[derive(Args)]
struct RunArgs {
    /// JSON config file mirroring the experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `batch-reactor` or the path of a plant matrix file.
    #[arg(long)]
    system: Option<String>,
    /// Experiment length T.
    #[arg(long)]
    t: Option<usize>,
    /// Attack shift magnitude (sign included).
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    attack: Option<AttackArg>,
    #[arg(long, value_enum)]
    planner: Option<PlannerArg>,
    /// Raw measurement-noise bound.
    #[arg(long)]
    noise_bound: Option<f64>,
    /// Noise scale alpha.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Closed-loop deployment horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory for report.json and the CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = &self.system {
            cfg.system = SystemSource::parse(s);
        }
        if let Some(t) = self.t {
            cfg.t = t;
        }
        if let Some(delta) = self.delta {
            cfg.delta = delta;
        }
        if let Some(attack) = self.attack {
            cfg.attack = attack.mode();
        }
        if let Some(planner) = self.planner {
            cfg.planner = planner.method();
        }
        if let Some(b) = self.noise_bound {
            cfg.noise_bound = b;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(out) = self.out {
            cfg.out_dir = Some(out);
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Noise scales to sweep, e.g. `--alphas 0,0.5,1,2`.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1,2,4")]
    alphas: Vec<f64>,
    /// Explicit |delta| grid; overrides bisection when given.
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    /// Bisection lower bound on |delta|.
    #[arg(long, default_value_t = 1.0)]
    delta_min: f64,
    /// Bisection upper bound on |delta|.
    #[arg(long, default_value_t = 4.0)]
    delta_max: f64,
    /// Bisection resolution.
    #[arg(long, default_value_t = defaults::SWEEP_RESOLUTION)]
    resolution: f64,
    /// Trials per (alpha, delta) point.
    #[arg(long, default_value_t = defaults::SWEEP_TRIALS)]
    trials: usize,
}

#[derive(Args)]
struct InspectArgs {
    /// Poisoned-dataset JSON envelope (as written by `pipeline`).
    dataset: PathBuf,
    #[arg(long, default_value_t = defaults::RANK_TOL)]
    rank_tol: f64,
    /// Write the inspection JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Pipeline(args) => cmd_pipeline(args),
        Command::SweepNoise(args) => cmd_sweep(args),
        Command::NormGrowth(args) => cmd_norm_growth(args),
        Command::InspectData(args) => cmd_inspect(args),
    }
}

fn cmd_pipeline(args: RunArgs) -> anyhow::Result<()> {
    let cfg = args.into_config()?;
    let out_dir = cfg.out_dir.clone();
    let artifacts = run_pipeline(&cfg).context("pipeline run failed")?;
    let report = &artifacts.report;
    if !report.attack.effectiveness_guaranteed && report.attack.mode != AttackMode::None {
        eprintln!(
            "note: |delta| = {} is below the guarantee threshold 2; destabilization \
             is not certified",
            report.attack.delta.abs()
        );
    }
    println!(
        "system: {} (n = {}, m = {}), T = {}",
        cfg.system, report.state_dim, report.input_dim, cfg.t
    );
    println!(
        "persistency of excitation: {} (rank {}/{})",
        report.pe.is_pe, report.pe.achieved_rank, report.pe.required_rank
    );
    println!(
        "attack: {} delta = {} (trajectory-compatible: {})",
        report.attack.mode, report.attack.delta, report.attack.trajectory_compatible
    );
    println!(
        "planner: {} -> apparent rho = {:.6} (Schur stable: {})",
        report.certificate.method,
        report.apparent_spectrum.spectral_radius,
        report.apparent_spectrum.schur_stable
    );
    println!(
        "true closed loop: rho = {:.6}, min |lambda| = {:.6}",
        report.true_spectrum.spectral_radius, report.true_spectrum.min_eigen_magnitude
    );
    match report.nsr_db {
        Some(nsr) => println!("noise: NSR = {nsr:.2} dB"),
        None => println!("noise: none"),
    }
    println!(
        "verdict: effective = {}, strictly effective = {}, deployment diverged = {}",
        report.effective, report.strictly_effective, report.deployment.diverged
    );
    if let Some(dir) = out_dir {
        println!("artifacts written to {}", dir.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let mut cfg = args.run.into_config()?;
    if cfg.attack == AttackMode::None {
        cfg.attack = AttackMode::Recursive;
    }
    let search = match args.delta_grid {
        Some(grid) => DeltaSearch::Grid(grid),
        None => DeltaSearch::Bisect {
            lo: args.delta_min,
            hi: args.delta_max,
            resolution: args.resolution,
        },
    };
    let report = sweep_min_delta(&cfg, &args.alphas, &search, args.trials)
        .context("sweep failed")?;
    println!("alpha    NSR(dB)      min|delta|   trials");
    for row in &report.rows {
        println!(
            "{:<8} {:<12} {:<12} {}",
            row.alpha,
            row.nsr_db.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into()),
            row.min_delta_abs
                .map(|v| format!("{v:.3}"))
                .unwrap_or_else(|| "not found".into()),
            row.trials
        );
    }
    if let Some(dir) = &cfg.out_dir {
        println!("sweep.csv and sweep.json written to {}", dir.display());
    }
    Ok(())
}

fn cmd_norm_growth(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg = args.into_config()?;
    if cfg.attack != AttackMode::Recursive {
        bail!("norm-growth requires --attack recursive");
    }
    // A longer record stabilizes the slope fit; keep T = 15-style runs for
    // `pipeline` but default to 50 here unless the user pinned T.
    if cfg.t == ExperimentConfig::default().t {
        cfg.t = 50;
    }
    let report = norm_growth_report(&cfg).context("norm-growth run failed")?;
    println!("k    |x(k)|        |x~(k)|       |delta(k)|");
    for (k, nx, nxt, nd) in &report.rows {
        println!("{k:<4} {nx:<13.6e} {nxt:<13.6e} {nd:<13.6e}");
    }
    match report.fitted_log_slope {
        Some(slope) => println!(
            "fitted log-slope = {slope:.6}, log rho(A + delta I) = {:.6}, relative gap = {:.2}%",
            report.reference_log_rate,
            report.relative_gap.unwrap_or(f64::NAN) * 100.0
        ),
        None => println!("perturbation identically zero; growth slope undefined"),
    }
    if let Some(dir) = &cfg.out_dir {
        println!("norm_growth.csv and norm_growth.json written to {}", dir.display());
    }
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.dataset)
        .with_context(|| format!("reading {}", args.dataset.display()))?;
    let envelope: DatasetEnvelope = serde_json::from_str(&text).context("parsing envelope")?;
    let pd = envelope.to_dataset().context("rebuilding dataset")?;
    let n = pd.state_dim();

    let input = Sequence::from_matrix(pd.u()).context("empty input block")?;
    let pe = is_persistently_exciting(&input, n + 1, args.rank_tol)?;
    let dm_tilde = DataMatrices::new(
        pd.u().clone(),
        pd.x_minus_tilde().clone(),
        pd.x_plus_tilde().clone(),
    )?;
    let stacked = stacked_rank(&dm_tilde, args.rank_tol);
    let compatible = verify_trajectory_compatible(&pd, defaults::OVERLAP_TOL);

    let identified = identify_apparent(&pd, args.rank_tol);
    let model = match &identified {
        Ok((a_hat, _)) => {
            let spec = spectrum(a_hat)?;
            serde_json::json!({
                "identified": true,
                "apparent_open_loop_spectrum": spec.summary(),
            })
        }
        Err(e) => serde_json::json!({
            "identified": false,
            "error": e.to_string(),
        }),
    };
    let inspection = serde_json::json!({
        "t": pd.len(),
        "state_dim": n,
        "input_dim": pd.input_dim(),
        "attack": {
            "mode": envelope.mode,
            "delta": envelope.delta,
            "effectiveness_guaranteed": pd.attack().effectiveness_guaranteed(),
        },
        "input_pe": pe,
        "stacked_rank": stacked,
        "trajectory_compatible": compatible,
        "apparent_model": model,
    });
    let rendered = format!("{:#}\n", inspection);
    match &args.out {
        Some(path) => {
            std::fs::write(path, rendered)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("inspection written to {}", path.display());
        }
        None => print!("{rendered}"),
    }
    Ok(())
}
