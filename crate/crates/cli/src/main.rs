use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mfsteiner::ballgrow::{ball_growth_tree, BallGrowthOptions, MeetingRule};
use mfsteiner::harness::{
    compare_ballgrow_exact, dump_instance, load_instance, render_report, run_experiment,
    to_canonical_json, write_text, ExperimentConfig, Format, Quantity,
};
use mfsteiner::maximal::{w_max_with, MaximalOptions};
use mfsteiner::stats::dkw_bound;
use mfsteiner::theory::{
    check_f_conditional_law, check_f_tail_bound, coupling_law_check, lemma2_bound,
    subset_intersection_empty_freq, LawCheckConfig,
};
use mfsteiner::{gen_instance, steiner_exact, Error, Instance, Seed};

#[derive(Parser)]
#[command(name = "mfsteiner", version, about = "Steiner trees on complete graphs with Exp(1) edge weights")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for experiments.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format (csv applies to experiment reports).
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct InstanceArgs {
    /// Vertex count of a generated instance.
    #[arg(long, required_unless_present = "instance")]
    n: Option<usize>,
    /// Trial index selecting the instance under the master seed.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Read the instance from a JSON dump instead of generating it.
    #[arg(long, conflicts_with = "n")]
    instance: Option<PathBuf>,
}

impl InstanceArgs {
    fn load(&self, master: u64) -> Result<Instance, Error> {
        match (&self.instance, self.n) {
            (Some(path), _) => load_instance(path),
            (None, Some(n)) => gen_instance(n, instance_seed(master, self.trial)),
            (None, None) => Err(Error::InvalidArgument("need --n or --instance".into())),
        }
    }
}

fn instance_seed(master: u64, trial: u64) -> Seed {
    Seed::new(master, "instance", trial)
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and dump its weights as JSON.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Exact Steiner tree for a terminal set.
    Steiner {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Comma-separated 0-based terminals.
        #[arg(long, value_delimiter = ',', required = true)]
        terminals: Vec<usize>,
    },
    /// Maximal Steiner weight W(k,l) with fixed terminals 0..k.
    Wkl {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        /// Cap on the candidate sets examined.
        #[arg(long, default_value_t = mfsteiner::maximal::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Two-stage ball-growth tree on roots 0..k.
    Ballgrow {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Meeting::LowestIndex)]
        meeting: Meeting,
        /// Override the ball size.
        #[arg(long)]
        m: Option<usize>,
        /// Include the per-root balls and annuli.
        #[arg(long)]
        trace: bool,
    },
    /// Finite-n checks of the supporting lemmas.
    Check {
        #[command(subcommand)]
        which: Check,
    },
    /// Monte Carlo experiment over a grid of n.
    Experiment {
        /// W(k,l), ball_growth(k), mst, lemma2(k), f_lemma, coupling(k) or mgf(k).
        #[arg(long)]
        quantity: String,
        /// Comma-separated strictly increasing vertex counts.
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<usize>,
        #[arg(long)]
        trials: usize,
        /// Block exponent of the coupling quantity.
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        /// Keep every per-trial value in the report.
        #[arg(long)]
        retain_trials: bool,
        /// Report the ratio of the ball-growth weight to the exact Steiner weight.
        #[arg(long)]
        compare_exact: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Meeting {
    LowestIndex,
    MinPathSum,
}

#[derive(Subcommand)]
enum Check {
    /// Empty-intersection frequency of k random m-subsets against its bound.
    Lemma2 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Law and tail of the truncating transform f.
    Flemma {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Also check the tail bound at this alpha.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Coupled weights against rejection-sampled conditioned weights.
    Coupling {
        #[arg(long, default_value_t = 60)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        accepted: usize,
        /// Threshold b; defaults to (1 - 2 eps) ln n / n.
        #[arg(long)]
        b: Option<f64>,
        /// Position of the chosen vertex inside each block.
        #[arg(long, default_value_t = 0)]
        offset: usize,
    },
    /// Exact stage-time moment generating function over c_kn.
    Mgf {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Defaults to 0.9 (1 - 1/ln n).
        #[arg(long)]
        t: Option<f64>,
    },
}

enum Outcome {
    Done,
    SystemicFailure,
}

fn emit(cli: &Cli, text: &str) -> Result<(), Error> {
    match &cli.out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let seed = cli.seed;
    match &cli.command {
        Command::Gen { n, trial } => {
            let inst = gen_instance(*n, instance_seed(seed, *trial))?;
            match &cli.out {
                Some(path) => dump_instance(&inst, path)?,
                None => print!("{}", to_canonical_json(&inst)?),
            }
        }
        Command::Steiner { inst, terminals } => {
            let inst = inst.load(seed)?;
            let res = steiner_exact(&inst, terminals)?;
            emit(cli, &to_canonical_json(&res)?)?;
        }
        Command::Wkl { inst, k, l, budget } => {
            let inst = inst.load(seed)?;
            let opts = MaximalOptions {
                budget: *budget,
                ..Default::default()
            };
            let res = w_max_with(&inst, *k, *l, opts)?;
            emit(cli, &to_canonical_json(&json!({ "k": k, "l": l, "weight": res.weight, "witness": res.witness }))?)?;
        }
        Command::Ballgrow { inst, k, meeting, m, trace } => {
            let inst = inst.load(seed)?;
            let opts = BallGrowthOptions {
                m_override: *m,
                meeting: match meeting {
                    Meeting::LowestIndex => MeetingRule::LowestIndex,
                    Meeting::MinPathSum => MeetingRule::MinPathSum,
                },
            };
            let run = ball_growth_tree(&inst, *k, opts)?;
            let text = if *trace {
                to_canonical_json(&run)?
            } else {
                to_canonical_json(&run.outcome)?
            };
            emit(cli, &text)?;
        }
        Command::Check { which } => emit(cli, &to_canonical_json(&check(which, seed)?)?)?,
        Command::Experiment {
            quantity,
            n_grid,
            trials,
            epsilon,
            retain_trials,
            compare_exact,
        } => {
            let quantity: Quantity = quantity.parse()?;
            let mut cfg = ExperimentConfig::new(quantity, n_grid.clone(), *trials, seed);
            cfg.threads = cli.threads;
            cfg.epsilon = *epsilon;
            cfg.retain_trials = *retain_trials;
            let report = if *compare_exact {
                compare_ballgrow_exact(&cfg)?
            } else {
                run_experiment(&cfg)?
            };
            let format = match cli.format {
                OutFormat::Json => Format::Json,
                OutFormat::Csv => Format::Csv,
            };
            emit(cli, &render_report(&report, format)?)?;
            if report.systemic_failure() {
                return Ok(Outcome::SystemicFailure);
            }
        }
    }
    Ok(Outcome::Done)
}

fn check(which: &Check, master: u64) -> Result<serde_json::Value, Error> {
    Ok(match which {
        Check::Lemma2 { n, m, k, trials } => {
            let mut rng = Seed::new(master, "check-lemma2", 0).stream();
            let freq = subset_intersection_empty_freq(*n, *m, *k, *trials, &mut rng)?;
            let bound = lemma2_bound(*n, *m, *k)?;
            let se = (bound * (1.0 - bound) / *trials as f64).sqrt();
            json!({
                "n": n, "m": m, "k": k, "trials": trials,
                "freq": freq, "bound": bound, "se": se,
                "holds": freq <= bound + 3.0 * se,
            })
        }
        Check::Flemma { mu, b, samples, alpha } => {
            let mut rng = Seed::new(master, "check-flemma", 0).stream();
            let stat = check_f_conditional_law(*mu, *b, *samples, &mut rng)?;
            let dkw = dkw_bound(*samples, 0.01);
            let mut out = json!({
                "mu": mu, "b": b, "samples": samples,
                "statistic": stat, "dkw_bound": dkw, "holds": stat <= dkw,
            });
            if let Some(alpha) = alpha {
                let mut rng = Seed::new(master, "check-flemma-tail", 0).stream();
                let tail = check_f_tail_bound(*mu, *b, *alpha, *samples, &mut rng)?;
                out["tail"] = json!({
                    "alpha": alpha, "freq": tail.freq, "bound": tail.bound,
                    "se": tail.se, "holds": tail.holds(),
                });
            }
            out
        }
        Check::Coupling { n, epsilon, k, accepted, b, offset } => {
            let cfg = LawCheckConfig {
                n: *n,
                epsilon: *epsilon,
                k: *k,
                accepted: *accepted,
                b: *b,
                chosen_offset: *offset,
            };
            let res = coupling_law_check(&cfg, Seed::new(master, "check-coupling", 0))?;
            let passes = res.passes();
            let mut v = serde_json::to_value(&res)?;
            v["config"] = serde_json::to_value(cfg)?;
            v["holds"] = json!(passes);
            v
        }
        Check::Mgf { n, k, t } => {
            let rows = n
                .iter()
                .map(|&n| {
                    let t = t.unwrap_or(0.9 * (1.0 - 1.0 / (n as f64).ln()));
                    let mgf = mfsteiner::ballgrow::mgf_exact(n, *k, t)?;
                    let c = mfsteiner::ballgrow::c_kn(n, *k)?;
                    Ok(json!({ "n": n, "k": k, "t": t, "mgf": mgf, "c_kn": c, "ratio": mgf / c }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            json!({ "rows": rows })
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::SystemicFailure) => {
            eprintln!("error: more than half of the trials failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
