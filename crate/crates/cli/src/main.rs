//! Command line interface: dataset generation, learning, inspection,
//! evaluation and planning.
//!
//! Exit codes: 0 on success, 2 for input or configuration errors, 3 for
//! generation failures, 4 for query errors (unknown or unsupported pairs).

use clap::{Parser, Subcommand};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ttc_core::apkm::{ActionPairKeypointModel, ALL_CHANNELS};
use ttc_core::eval::{curve_to_csv, pair_universe, run_scenarios, ScenarioConfig};
use ttc_core::fuzzy::{fuzzy_point, DEFAULT_EPSILON};
use ttc_core::io::{DatasetFile, ModelFile, PlanFile, SttcFile};
use ttc_core::model::{learn, ModelConfig, TaskModel};
use ttc_core::solver::DEFAULT_THETA;
use ttc_core::ssttc::plan_bimanual;
use ttc_core::synth::{generate, GenError, GeneratorConfig};
use ttc_core::temporal::{Action, ActionPair};
use ttc_core::{FuzzyConfig, SolverConfig};

const EXIT_INPUT: u8 = 2;
const EXIT_GENERATION: u8 = 3;
const EXIT_QUERY: u8 = 4;

#[derive(Parser)]
#[command(name = "ttc", version, about = "Temporal task constraints: learn, evaluate, plan")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground-truth constraints
    Generate {
        /// Generator configuration (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output path for the demonstration dataset (JSON)
        #[arg(long)]
        out: PathBuf,
        /// Output path for the ground-truth constraint set (JSON)
        #[arg(long)]
        truth: PathBuf,
        /// Override the seed from the configuration
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Learn a task model from a demonstration dataset
    Learn {
        /// Demonstration dataset (JSON)
        #[arg(long)]
        demos: PathBuf,
        /// Equality margin in seconds
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Membership threshold for constraint assignment
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        /// Seed for the mixture fits
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path for the model (JSON)
        #[arg(long)]
        out: PathBuf,
        /// Extract subsymbolic constraints for all four channels instead of
        /// only the necessary ones
        #[arg(long)]
        all_channels: bool,
    },
    /// Run incremental learning scenarios and write the aggregated
    /// precision/recall curve
    Eval {
        /// Demonstration dataset (JSON)
        #[arg(long)]
        demos: PathBuf,
        /// Ground-truth constraint set (JSON)
        #[arg(long)]
        truth: PathBuf,
        /// Number of independent learning scenarios
        #[arg(long, default_value_t = 20)]
        scenarios: usize,
        /// Demonstrations per scenario (defaults to the dataset size)
        #[arg(long)]
        per_scenario: Option<usize>,
        /// Base seed; scenario i uses seed + i
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Equality margin in seconds
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Membership threshold for constraint assignment
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        /// Parallel scenario workers
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output path for the learning curve (CSV)
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan a synchronized two-action timeline from a learned model
    Plan {
        /// Learned model (JSON)
        #[arg(long)]
        model: PathBuf,
        /// The action pair, e.g. "hold:cup,pour:milk"
        #[arg(long)]
        pair: String,
        /// Duration for the first named action (defaults to its demonstrated
        /// mean)
        #[arg(long)]
        dur_a: Option<f64>,
        /// Duration for the second named action (defaults to its
        /// demonstrated mean)
        #[arg(long)]
        dur_b: Option<f64>,
        /// Output path for the plan (JSON)
        #[arg(long)]
        out: PathBuf,
    },
    /// Print relation memberships and mixture summaries of a pair
    Inspect {
        /// Learned model (JSON)
        #[arg(long)]
        model: PathBuf,
        /// The action pair, e.g. "hold:cup,pour:milk"
        #[arg(long)]
        pair: String,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }

    fn query(message: impl Into<String>) -> Self {
        CliError { code: EXIT_QUERY, message: message.into() }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn load_dataset(path: &Path) -> Result<(String, Vec<ttc_core::Demonstration>), CliError> {
    let file = DatasetFile::from_json(&read_file(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(file.into_demos())
}

fn load_model(path: &Path) -> Result<TaskModel, CliError> {
    ModelFile::from_json(&read_file(path)?)
        .and_then(ModelFile::into_model)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn parse_pair_arg(arg: &str) -> Result<(Action, Action), CliError> {
    let bad = || CliError::input(format!("bad pair `{arg}` (expected `verb:object,verb:object`)"));
    let (a, b) = arg.split_once(',').ok_or_else(bad)?;
    match (Action::parse(a.trim()), Action::parse(b.trim())) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(bad()),
    }
}

fn cmd_generate(
    config_path: &Path,
    out: &Path,
    truth_path: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut config: GeneratorConfig = serde_json::from_str(&read_file(config_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", config_path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let (demos, truth) = generate(&config).map_err(|e| match e {
        GenError::InvalidConfig { .. } => CliError::input(e.to_string()),
        GenError::RejectionLimitExceeded { .. } => {
            CliError { code: EXIT_GENERATION, message: e.to_string() }
        }
    })?;
    let dataset = DatasetFile::from_demos(config.task.clone(), &demos);
    write_file(out, &dataset.to_json().map_err(|e| CliError::input(e.to_string()))?)?;
    let truth_file = SttcFile::from_sttcs(&truth);
    write_file(truth_path, &truth_file.to_json().map_err(|e| CliError::input(e.to_string()))?)?;
    println!(
        "wrote {} demonstrations to {} and {} ground-truth constraints to {}",
        demos.len(),
        out.display(),
        truth.assignments.len(),
        truth_path.display()
    );
    Ok(())
}

fn cmd_learn(
    demos_path: &Path,
    epsilon: f64,
    theta: f64,
    seed: u64,
    out: &Path,
    all_channels: bool,
) -> Result<(), CliError> {
    let (_, demos) = load_dataset(demos_path)?;
    let config = ModelConfig { epsilon, theta, seed };
    let model = learn(&demos, config, all_channels).map_err(|e| CliError::input(e.to_string()))?;
    for pair in model.ssttc_gaps() {
        eprintln!(
            "warning: no suitably signed mixture component for {pair}; \
             subsymbolic constraints omitted"
        );
    }
    let file = ModelFile::from_model(&model);
    write_file(out, &file.to_json().map_err(|e| CliError::input(e.to_string()))?)?;
    println!(
        "learned {} constraints ({} bimanual-symmetric) from {} demonstrations -> {}",
        model.sttcs.assignments.len(),
        model.sttcs.symmetric.len(),
        demos.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    demos_path: &Path,
    truth_path: &Path,
    scenarios: usize,
    per_scenario: Option<usize>,
    seed: u64,
    epsilon: f64,
    theta: f64,
    jobs: usize,
    out: &Path,
) -> Result<(), CliError> {
    let (_, demos) = load_dataset(demos_path)?;
    let truth = SttcFile::from_json(&read_file(truth_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", truth_path.display())))?
        .into_sttcs();
    let per_scenario = per_scenario.unwrap_or(demos.len());
    if per_scenario == 0 || per_scenario > demos.len() {
        return Err(CliError::input(format!(
            "per-scenario count {per_scenario} outside 1..={}",
            demos.len()
        )));
    }
    let universe = pair_universe(&demos);
    let truth_pairs: BTreeSet<&ActionPair> = truth.assignments.keys().collect();
    if let Some(missing) = truth_pairs.iter().find(|p| !universe.contains(**p)) {
        return Err(CliError::input(format!(
            "mismatched action vocabularies: ground-truth pair {missing} never occurs in the dataset"
        )));
    }
    let config = ScenarioConfig {
        n_scenarios: scenarios,
        demos_per_scenario: per_scenario,
        seed,
        fuzzy: FuzzyConfig { epsilon },
        solver: SolverConfig { theta, allow_fallback: true },
    };
    let curve = run_scenarios(&demos, &truth, &config, jobs.max(1));
    write_file(out, &curve_to_csv(&curve))?;
    println!(
        "evaluated {} scenarios x {} demonstrations -> {}",
        scenarios,
        per_scenario,
        out.display()
    );
    Ok(())
}

fn cmd_plan(
    model_path: &Path,
    pair_arg: &str,
    dur_a: Option<f64>,
    dur_b: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let (action_a, action_b) = parse_pair_arg(pair_arg)?;
    let (pair, _) = ActionPair::oriented(action_a.clone(), action_b.clone())
        .ok_or_else(|| CliError::query(format!("`{pair_arg}` names the same action twice")))?;
    let constraint = model
        .sttcs
        .assignments
        .get(&pair)
        .ok_or_else(|| CliError::query(format!("pair {pair} is not constrained in the model")))?;
    let ssttcs = model
        .ssttcs
        .get(&pair)
        .ok_or_else(|| CliError::query(format!("pair {pair} has no subsymbolic constraints")))?;
    let duration_of = |action: &Action, explicit: Option<f64>| -> Result<f64, CliError> {
        if let Some(d) = explicit {
            if d <= 0.0 || !d.is_finite() {
                return Err(CliError::input(format!("duration for {action} must be positive")));
            }
            return Ok(d);
        }
        model
            .durations
            .get(action)
            .copied()
            .ok_or_else(|| CliError::query(format!("no demonstrated duration for {action}")))
    };
    // map the user's argument order onto the canonical pair orientation
    let (dur_first, dur_second) = if action_a == *pair.first() {
        (duration_of(&action_a, dur_a)?, duration_of(&action_b, dur_b)?)
    } else {
        (duration_of(&action_b, dur_b)?, duration_of(&action_a, dur_a)?)
    };
    let plan = plan_bimanual(
        pair.first(),
        pair.second(),
        constraint.relation,
        ssttcs,
        (dur_first, dur_second),
        model.config.epsilon,
    )
    .map_err(|e| CliError::query(e.to_string()))?;
    let json = PlanFile::from_plan(&plan)
        .to_json()
        .map_err(|e| CliError::input(e.to_string()))?;
    write_file(out, &json)?;
    for entry in &plan.entries {
        println!(
            "{} {}: start {:.3} s, duration {:.3} s",
            entry.hand, entry.action, entry.start, entry.duration
        );
    }
    println!("objective {:.6} -> {}", plan.objective_value, out.display());
    Ok(())
}

fn print_pair_report(
    pair_name: &str,
    apkm: &ActionPairKeypointModel,
    profile: &ttc_core::FuzzyAllenProfile,
    epsilon: f64,
) {
    println!("pair: {pair_name}");
    println!("relation        membership");
    for (relation, membership) in profile.iter() {
        println!("{:<15} {membership:.6}", relation.name());
    }
    println!();
    println!("channel  before    equals    after     sum       components");
    for channel in ALL_CHANNELS {
        let mixture = apkm.mixture(channel);
        let point = fuzzy_point(mixture, epsilon);
        let components: Vec<String> = mixture
            .components
            .iter()
            .map(|c| format!("(w={:.3}, mu={:.3}, var={:.5})", c.weight, c.mean, c.variance))
            .collect();
        println!(
            "{:<8} {:.6}  {:.6}  {:.6}  {:.6}  {}",
            channel.name(),
            point.before,
            point.equals,
            point.after,
            point.before + point.equals + point.after,
            components.join(" ")
        );
    }
}

fn cmd_inspect(model_path: &Path, pair_arg: &str) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let (action_a, action_b) = parse_pair_arg(pair_arg)?;
    let epsilon = model.config.epsilon;
    if action_a == action_b {
        let (apkm, profile) = model
            .self_pairs
            .get(&action_a)
            .ok_or_else(|| CliError::query(format!("no cross-hand model for {action_a}")))?;
        print_pair_report(&format!("{action_a} (both hands)"), apkm, profile, epsilon);
        return Ok(());
    }
    let (pair, swapped) = ActionPair::oriented(action_a, action_b).expect("distinct actions");
    let (apkm, profile) = model
        .pairs
        .get(&pair)
        .ok_or_else(|| CliError::query(format!("pair {pair} is not in the model")))?;
    if swapped {
        eprintln!("note: showing canonical orientation {pair}");
    }
    print_pair_report(&pair.to_string(), apkm, profile, epsilon);
    if let Some(constraint) = model.sttcs.assignments.get(&pair) {
        println!();
        println!(
            "assigned: {} (membership {:.6})",
            constraint.relation, constraint.membership
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out, truth, seed } => cmd_generate(&config, &out, &truth, seed),
        Command::Learn { demos, epsilon, theta, seed, out, all_channels } => {
            cmd_learn(&demos, epsilon, theta, seed, &out, all_channels)
        }
        Command::Eval {
            demos,
            truth,
            scenarios,
            per_scenario,
            seed,
            epsilon,
            theta,
            jobs,
            out,
        } => cmd_eval(
            &demos,
            &truth,
            scenarios,
            per_scenario,
            seed,
            epsilon,
            theta,
            jobs,
            &out,
        ),
        Command::Plan { model, pair, dur_a, dur_b, out } => {
            cmd_plan(&model, &pair, dur_a, dur_b, &out)
        }
        Command::Inspect { model, pair } => cmd_inspect(&model, &pair),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
