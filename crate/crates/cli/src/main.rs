mod commands;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use commands::{
    parse_distribution, run, BoundInputs, BoundKind, CampaignConfig, Inputs, SimulateInputs,
    TspInputs,
};
use report::{differences, Provenance, Report};
use riskbound::decision_select::tsp::TspInstance;
use riskbound::io::{
    histogram, read_json, read_samples, write_csv_file, write_json, write_trajectory_csv,
};
use riskbound::risk_core::min_samples;
use riskbound::sim::{ControllerParams, NoiseModel, SimConfig};
use riskbound::validation::ValidationConfig;
use riskbound::{seeding, ConfidenceSpec, Error, SearchConfig};

#[derive(Parser)]
#[command(
    name = "riskbound",
    version,
    about = "Sample-based risk bounds, verification and synthesis"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = "RISKBOUND_WORKERS")]
    workers: Option<usize>,
    /// Also write the JSON report here.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smallest sample count certifying (epsilon, gamma).
    MinSamples {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        gamma: f64,
    },
    /// Upper bound on a risk measure from a sample file (CSV or JSON array).
    Bound {
        #[arg(long, value_enum)]
        kind: BoundKind,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Coverage study against a known distribution.
    Validate {
        /// Fixture name (multimodal, robustness, constant) or inline JSON.
        #[arg(long, default_value = "multimodal")]
        distribution: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 149)]
        n: usize,
        #[arg(long, default_value_t = 0.02)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        /// Directory for validate_cvar.csv and validate_evar.csv.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Good tour of a travelling-salesman instance.
    Tsp {
        /// Random instance with this many nodes in the unit square.
        #[arg(
            long,
            conflicts_with = "instance",
            required_unless_present = "instance"
        )]
        nodes: Option<usize>,
        /// JSON file with {"nodes": [[x, y], ...]}.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95)]
        gamma: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long)]
        seed: u64,
        /// Rank the chosen tour against every tour (n <= 10).
        #[arg(long, value_parser = ["exhaustive"])]
        audit: Option<String>,
    },
    /// Risk certificate for one controller.
    Verify {
        #[command(flatten)]
        campaign: CampaignArgs,
        /// Controller gains p1,p2,p3,p4.
        #[arg(long, value_parser = parse_params)]
        params: Option<ControllerParams>,
    },
    /// Pick a controller with a certified riskmap percentile.
    Synthesize {
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long)]
        epsilon2: Option<f64>,
        #[arg(long)]
        gamma2: Option<f64>,
        /// Override the candidate count implied by (epsilon2, gamma2).
        #[arg(long)]
        candidates: Option<usize>,
        /// Evaluate every candidate on the same scenario batch.
        #[arg(long)]
        crn: bool,
        /// Use the analytic surrogate riskmap with this noise level.
        #[arg(long)]
        surrogate_noise: Option<f64>,
    },
    /// One rollout of the multi-robot simulator.
    Simulate {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = parse_params, default_value = "1,2,1,10")]
        params: ControllerParams,
        #[arg(long)]
        noise_free: bool,
        /// Trajectory CSV (t, x1, y1, theta1, ...).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Rerun a report's inputs and compare the outputs.
    Replay { report: PathBuf },
}

#[derive(Args)]
struct CampaignArgs {
    /// JSON campaign configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon_inner: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    n_inner: Option<usize>,
    #[arg(long)]
    noise_free: bool,
    /// Histogram CSV (value, count) of the collected robustness values.
    #[arg(long)]
    histogram: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
}

fn parse_params(s: &str) -> Result<ControllerParams, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let arr: [f64; 4] = v
        .try_into()
        .map_err(|_| "expected four comma-separated gains".to_string())?;
    let p = ControllerParams::from_array(arr);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

enum Failure {
    Usage(String),
    Core(Error),
    Mismatch(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
        Err(Failure::Mismatch(paths)) => {
            eprintln!("replay mismatch at {} path(s):", paths.len());
            for p in paths {
                eprintln!("  {p}");
            }
            ExitCode::from(1)
        }
    }
}

fn load_campaign(args: &CampaignArgs) -> Result<CampaignConfig, Failure> {
    let mut c: CampaignConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => CampaignConfig::default(),
    };
    if args.seed.is_some() {
        c.seed = args.seed;
    }
    if let Some(a) = args.alpha {
        c.alpha = a;
    }
    if let Some(e) = args.epsilon_inner {
        c.epsilon_inner = e;
    }
    if let Some(g) = args.gamma1 {
        c.gamma1 = g;
    }
    if args.n_inner.is_some() {
        c.n_inner = args.n_inner;
    }
    if args.noise_free {
        c.noise_model = NoiseModel::None;
    }
    if let Some(b) = args.bins {
        c.histogram_bins = b;
    }
    if c.seed.is_none() {
        return Err(Failure::Usage(
            "a master seed is required (--seed or \"seed\" in the config)".into(),
        ));
    }
    Ok(c)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let mut histogram_path = None;
    let mut csv_dir = None;
    let mut trajectory_csv = None;
    let inputs = match cli.command {
        Command::MinSamples { epsilon, gamma } => {
            println!("{}", min_samples(ConfidenceSpec::new(epsilon, gamma)?)?);
            return Ok(());
        }
        Command::Replay { report } => return replay(&report),
        Command::Bound {
            kind,
            samples,
            ell,
            epsilon,
            alpha,
        } => Inputs::Bound(BoundInputs {
            kind,
            samples: read_samples(&samples)?,
            ell,
            epsilon,
            alpha,
            search: SearchConfig::default(),
        }),
        Command::Validate {
            distribution,
            trials,
            n,
            epsilon,
            alpha,
            seed,
            csv_dir: dir,
        } => {
            csv_dir = dir;
            Inputs::Validate(ValidationConfig {
                distribution: parse_distribution(&distribution)?,
                trials,
                n,
                epsilon,
                alpha,
                seed,
                truth_draws: riskbound::fixtures::TRUTH_DRAWS,
                search: SearchConfig::default(),
            })
        }
        Command::Tsp {
            nodes,
            instance,
            gamma,
            epsilon,
            seed,
            audit,
        } => {
            let instance = match (nodes, instance) {
                (Some(n), _) => TspInstance::random(
                    n,
                    &mut seeding::stream(seeding::labelled(seed, "instance"), 0),
                )?,
                (None, Some(p)) => read_json(&p)?,
                (None, None) => {
                    return Err(Failure::Usage("--nodes or --instance is required".into()))
                }
            };
            Inputs::Tsp(TspInputs {
                instance,
                gamma,
                epsilon,
                seed,
                audit: audit.is_some(),
            })
        }
        Command::Verify { campaign, params } => {
            let mut c = load_campaign(&campaign)?;
            if let Some(p) = params {
                c.params = p;
            }
            histogram_path = campaign.histogram;
            Inputs::Verify(c)
        }
        Command::Synthesize {
            campaign,
            epsilon2,
            gamma2,
            candidates,
            crn,
            surrogate_noise,
        } => {
            let mut c = load_campaign(&campaign)?;
            if let Some(e) = epsilon2 {
                c.epsilon2 = e;
            }
            if let Some(g) = gamma2 {
                c.gamma2 = g;
            }
            if candidates.is_some() {
                c.candidates = candidates;
            }
            if crn {
                c.common_random_numbers = true;
            }
            if surrogate_noise.is_some() {
                c.surrogate_noise = surrogate_noise;
            }
            if campaign.histogram.is_some() && c.surrogate_noise.is_some() {
                return Err(Failure::Usage(
                    "--histogram needs simulator rollouts, not the surrogate".into(),
                ));
            }
            histogram_path = campaign.histogram;
            Inputs::Synthesize(c)
        }
        Command::Simulate {
            seed,
            params,
            noise_free,
            csv,
        } => {
            trajectory_csv = csv;
            let mut sim = SimConfig::default();
            if noise_free {
                sim.noise = NoiseModel::None;
            }
            Inputs::Simulate(SimulateInputs { seed, params, sim })
        }
    };

    let outcome = run(&inputs)?;

    if let (Some(path), Some(values)) = (&histogram_path, &outcome.robustness) {
        let bins = match &inputs {
            Inputs::Verify(c) | Inputs::Synthesize(c) => c.histogram_bins,
            _ => 20,
        };
        write_csv_file(path, &histogram(values, bins)?)?;
    }
    if let (Some(dir), Some(rep)) = (&csv_dir, &outcome.validation) {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        write_csv_file(&dir.join("validate_cvar.csv"), &rep.cvar_rows)?;
        write_csv_file(&dir.join("validate_evar.csv"), &rep.evar_rows)?;
    }
    if let (Some(path), Some(traj)) = (&trajectory_csv, &outcome.trajectory) {
        let file = std::fs::File::create(path).map_err(Error::from)?;
        write_trajectory_csv(std::io::BufWriter::new(file), traj)?;
    }

    let report = Report {
        provenance: Provenance::now(inputs.seed()),
        inputs,
        outputs: outcome.outputs,
    };
    if let Some(path) = &cli.output {
        write_json(path, &report)?;
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(Error::from)?
    );
    Ok(())
}

fn replay(path: &Path) -> Result<(), Failure> {
    let stored: Report = read_json(path)?;
    let fresh = run(&stored.inputs)?;
    let diffs = differences(&stored.outputs, &fresh.outputs);
    if diffs.is_empty() {
        println!("replay ok: outputs identical");
        Ok(())
    } else {
        Err(Failure::Mismatch(diffs))
    }
}
