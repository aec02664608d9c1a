//! Command-line front end: cluster demonstrations, learn rewards, train and evaluate
//! bundles, run episodes and serve live sessions.

use std::io::{BufRead, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use teamtype::clustering::{select_best_model, ClusterModel, SelectionConfig};
use teamtype::domain::{load_demonstrations, place_drill, save_demonstrations, DemoSequence, DemoSet, TaskDomain};
use teamtype::harness::{
    classification_accuracy, cross_validate, emit_plot_data, evaluate_robustness, EpsilonHuman, RobustnessConfig,
};
use teamtype::irl::{empirical_feature_expectations, irl_learn, IrlConfig};
use teamtype::momdp::{response_model, ResponseSource};
use teamtype::par::Execution;
use teamtype::pipeline::{
    infer_type_offline, run_episode, train, MomdpController, ScriptedHuman, TaskWorld, TrainConfig, TrainedBundle,
    Transcript,
};
use teamtype::service::{PriorSource, Service, ServiceConfig, TurnRecord};
use teamtype::synth::{personas_from_demos, two_generator_corpus, Generators, PlaceDrillCorpus};

#[derive(Parser)]
#[command(name = "teamtype", version, about = "Learn human collaborator types and plan around them")]
struct Cli {
    /// Run every data-parallel stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster demonstrations into types, choosing k by BIC.
    Cluster(ClusterArgs),
    /// Learn the reward of one cluster.
    Irl(IrlArgs),
    /// Cluster, learn rewards, assemble and solve; writes a bundle directory.
    Train(TrainArgs),
    /// Posterior over a bundle's types from a user's demonstrations.
    InferType(InferArgs),
    /// Run one episode of the bundle's policy against a human.
    Run(RunArgs),
    /// Write the bundle's α-vectors and corner actions as JSON.
    ExportPolicy(ExportArgs),
    /// Leave-one-subject-out robustness evaluation.
    Evaluate(EvaluateArgs),
    /// Serve live sessions over line-delimited JSON on TCP.
    Serve(ServeArgs),
    /// Generate synthetic demonstration corpora.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Write the bundled place-and-drill domain.
    Domain {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    demos: PathBuf,
    #[arg(long, default_value_t = 2)]
    kmin: usize,
    #[arg(long, default_value_t = 10)]
    kmax: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IrlArgs {
    /// Domain file; the bundled place-and-drill domain when omitted.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Output of `cluster`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    cluster: usize,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 50)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct TrainOptions {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    kmin: usize,
    #[arg(long, default_value_t = 10)]
    kmax: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Belief points for the solver.
    #[arg(long, default_value_t = 1000)]
    points: usize,
}

impl TrainOptions {
    fn config(&self, execution: Execution) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            k_min: self.kmin,
            k_max: self.kmax,
            restarts: self.restarts,
            irl_epsilon: self.epsilon,
            n_points: self.points,
            execution,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    demos: PathBuf,
    #[arg(long)]
    domain: Option<PathBuf>,
    #[command(flatten)]
    options: TrainOptions,
    /// Bundle directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    demos: PathBuf,
    /// Only this subject's sequences.
    #[arg(long)]
    subject: Option<String>,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum HumanKind {
    Scripted,
    Simulated,
    Interactive,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, value_enum)]
    human: HumanKind,
    /// Comma-separated human action labels (scripted).
    #[arg(long, value_delimiter = ',')]
    script: Vec<String>,
    /// Placement order as screw letters, e.g. `B,A,C` (simulated).
    #[arg(long, value_delimiter = ',', default_value = "A,B,C")]
    order: Vec<String>,
    /// Probability of a random deviation per turn (simulated).
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from the posterior of this user's demonstrations instead of the uniform prior.
    #[arg(long)]
    prior_demos: Option<PathBuf>,
    #[arg(long)]
    subject: Option<String>,
    #[arg(long, default_value_t = 30)]
    max_turns: usize,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Labelled place-and-drill demonstrations with subjects.
    #[arg(long)]
    demos: PathBuf,
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8,1.0")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// `per-user-mdp` or `none`.
    #[arg(long, default_value = "per-user-mdp")]
    baselines: String,
    #[arg(long, default_value_t = 30)]
    max_turns: usize,
    #[command(flatten)]
    options: TrainOptions,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Bundle directory; repeat to serve several, each under its directory name.
    #[arg(long, required = true)]
    bundle: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:7878")]
    bind: String,
    /// Minutes before an idle session is dropped.
    #[arg(long, default_value_t = 30)]
    idle_minutes: u64,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Labelled place-and-drill demonstrations from safe and efficient personas.
    PlaceDrill {
        #[arg(long, default_value_t = 6)]
        subjects_per_style: usize,
        #[arg(long, default_value_t = 3)]
        demos_per_subject: usize,
        #[arg(long, default_value_t = 0.1)]
        order_noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sequences from two well-separated transition matrices.
    Generators {
        #[arg(long, default_value_t = 60)]
        sequences: usize,
        #[arg(long, default_value_t = 8)]
        actions: usize,
        #[arg(long, default_value_t = 6)]
        min_len: usize,
        #[arg(long, default_value_t = 12)]
        max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let execution = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Cluster(a) => cluster(a, execution),
        Command::Irl(a) => irl(a),
        Command::Train(a) => {
            let demos = load_demonstrations(&a.demos)?;
            let domain = load_domain(a.domain.as_deref())?;
            let bundle = train(&demos, &domain, &a.options.config(execution))?;
            bundle.save(&a.out)?;
            log::info!("bundle written to {}", a.out.display());
            Ok(())
        }
        Command::InferType(a) => infer_type(a),
        Command::Run(a) => run(a),
        Command::ExportPolicy(a) => export_policy(a),
        Command::Evaluate(a) => evaluate(a, execution),
        Command::Serve(a) => serve(a),
        Command::Synth(s) => synth(s),
        Command::Domain { out } => {
            place_drill::domain().save(&out)?;
            Ok(())
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, value: &impl Serialize) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn load_domain(path: Option<&Path>) -> Result<TaskDomain> {
    Ok(match path {
        Some(p) => TaskDomain::load(p)?,
        None => place_drill::domain(),
    })
}

#[derive(Serialize, serde::Deserialize)]
struct BicRow {
    k: usize,
    restart: usize,
    log_likelihood: f64,
    bic: f64,
}

#[derive(Serialize, serde::Deserialize)]
struct ModelOutput {
    k: usize,
    priors: Vec<f64>,
    assignments: Vec<usize>,
    bic_table: Vec<BicRow>,
    model: ClusterModel,
    demonstrations: serde_json::Value,
}

fn cluster(a: ClusterArgs, execution: Execution) -> Result<()> {
    let demos = load_demonstrations(&a.demos)?;
    ensure!(a.kmin >= 1 && a.kmin <= a.kmax, "need 1 <= kmin <= kmax");
    let config = SelectionConfig {
        k_min: a.kmin,
        k_max: a.kmax,
        restarts: a.restarts,
        seed: a.seed,
        execution,
        ..SelectionConfig::default()
    };
    let selection = select_best_model(&demos.sequences, demos.alphabet.len(), &config);
    let bic_table = selection
        .best_by_k()
        .into_iter()
        .map(|c| BicRow {
            k: c.k,
            restart: c.restart,
            log_likelihood: c.log_likelihood,
            bic: c.bic,
        })
        .collect();
    let model = selection.model;
    let out = ModelOutput {
        k: model.k,
        priors: model.priors.clone(),
        assignments: model.assignments.clone(),
        bic_table,
        demonstrations: serde_json::from_str(&demos.to_json()?)?,
        model,
    };
    write_json(&a.out, &out)
}

#[derive(Serialize)]
struct RewardOutput {
    cluster: usize,
    weights: Vec<f64>,
    state_rewards: Vec<f64>,
    features: teamtype::irl::FeatureMap,
    converged: bool,
    iterations: usize,
    best_margin: f64,
    margins: Vec<f64>,
    epsilon: f64,
    sequences: usize,
}

fn irl(a: IrlArgs) -> Result<()> {
    let domain = load_domain(a.domain.as_deref())?;
    let text = std::fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let file: ModelOutput = serde_json::from_str(&text)?;
    let demos = DemoSet::from_json(&file.demonstrations.to_string())?;
    let model = file.model;
    ensure!(a.cluster < model.k, "cluster {} is out of range (k = {})", a.cluster, model.k);
    let members: Vec<&DemoSequence> = demos
        .sequences
        .iter()
        .zip(&model.assignments)
        .filter(|(_, &z)| z == a.cluster)
        .map(|e| e.0)
        .collect();
    ensure!(!members.is_empty(), "cluster {} has no sequences", a.cluster);
    let trajectories = members.iter().map(|s| domain.trajectory(s)).collect::<teamtype::Result<Vec<_>>>()?;
    let phi = domain.feature_map();
    let mdp = response_model(&domain, ResponseSource::Learned(&model))?.type_mdp(a.cluster);
    let demo_mu = empirical_feature_expectations(&trajectories, &phi, domain.discount)?;
    let config = IrlConfig {
        epsilon: a.epsilon,
        max_iterations: a.max_iterations,
        seed: a.seed,
        action_costs: None,
    };
    let result = irl_learn(&mdp, &phi, &demo_mu, &config)?;
    if !result.converged {
        log::warn!("stopped at margin {:.4} after {} iterations", result.best_margin(), result.iterations());
    }
    let out = RewardOutput {
        cluster: a.cluster,
        state_rewards: result.state_rewards(&phi),
        weights: result.weights.clone(),
        converged: result.converged,
        iterations: result.iterations(),
        best_margin: result.best_margin(),
        margins: result.ts.clone(),
        epsilon: result.epsilon,
        sequences: members.len(),
        features: phi,
    };
    write_json(&a.out, &out)
}

fn select_subject(demos: &DemoSet, subject: Option<&str>) -> Result<Vec<DemoSequence>> {
    let picked: Vec<DemoSequence> = demos
        .sequences
        .iter()
        .filter(|s| subject.is_none_or(|want| s.subject.as_deref() == Some(want)))
        .cloned()
        .collect();
    if picked.is_empty() {
        bail!("no demonstrations for subject {}", subject.unwrap_or("(any)"));
    }
    Ok(picked)
}

#[derive(Serialize)]
struct InferOutput {
    types: Vec<String>,
    posterior: Vec<f64>,
    most_likely: String,
    sequences: usize,
}

fn infer_type(a: InferArgs) -> Result<()> {
    let bundle = TrainedBundle::load(&a.bundle)?;
    let demos = load_demonstrations(&a.demos)?;
    let user = select_subject(&demos, a.subject.as_deref())?;
    let posterior = infer_type_offline(&bundle, &user)?;
    let types = bundle.labels();
    let out = InferOutput {
        most_likely: types[teamtype::clustering::argmax(&posterior)].clone(),
        types,
        posterior,
        sequences: user.len(),
    };
    emit(a.out.as_deref(), &out)
}

#[derive(Serialize)]
struct RunOutput {
    human: &'static str,
    types: Vec<String>,
    prior: Vec<f64>,
    turns: Vec<TurnRecord>,
    final_belief: Vec<f64>,
    terminal: bool,
}

fn run(a: RunArgs) -> Result<()> {
    let bundle = TrainedBundle::load(&a.bundle)?;
    let prior = match &a.prior_demos {
        Some(path) => infer_type_offline(&bundle, &select_subject(&load_demonstrations(path)?, a.subject.as_deref())?)?,
        None => {
            let k = bundle.momdp.n_types();
            vec![1.0 / k as f64; k]
        }
    };
    let alphabet = &bundle.domain.alphabet;
    let out = match a.human {
        HumanKind::Scripted => {
            let actions = a
                .script
                .iter()
                .map(|l| alphabet.id_of(l).with_context(|| format!("unknown action '{l}'")))
                .collect::<Result<Vec<_>>>()?;
            let world = TaskWorld::new(&bundle.domain, ScriptedHuman::new(actions));
            batch(&bundle, "scripted", prior, world, a.max_turns)?
        }
        HumanKind::Simulated => {
            let order = parse_order(&a.order)?;
            let world = TaskWorld::new(&bundle.domain, EpsilonHuman::new(order, a.epsilon, a.seed));
            batch(&bundle, "simulated", prior, world, a.max_turns)?
        }
        HumanKind::Interactive => interactive(bundle, prior)?,
    };
    emit(a.out.as_deref(), &out)
}

fn parse_order(letters: &[String]) -> Result<[usize; 3]> {
    let order: Vec<usize> = letters
        .iter()
        .map(|l| match l.trim() {
            "A" | "a" => Ok(0),
            "B" | "b" => Ok(1),
            "C" | "c" => Ok(2),
            other => bail!("unknown screw '{other}'"),
        })
        .collect::<Result<_>>()?;
    let order: [usize; 3] = order.try_into().map_err(|_| anyhow::anyhow!("the order needs three screws"))?;
    ensure!(order.iter().all(|s| order.iter().filter(|t| *t == s).count() == 1), "each screw once");
    Ok(order)
}

fn batch<H: teamtype::pipeline::HumanPolicy>(
    bundle: &TrainedBundle,
    human: &'static str,
    prior: Vec<f64>,
    mut world: TaskWorld<'_, H>,
    max_turns: usize,
) -> Result<RunOutput> {
    let mut controller = MomdpController::new(&bundle.momdp, &bundle.kernel, &bundle.policy, prior.clone());
    let t = run_episode(&bundle.momdp, &mut controller, &mut world, max_turns)?;
    Ok(RunOutput {
        human,
        types: bundle.labels(),
        prior,
        turns: records(bundle, &t),
        final_belief: t.final_belief.clone().unwrap_or_default(),
        terminal: t.terminal,
    })
}

fn records(bundle: &TrainedBundle, t: &Transcript) -> Vec<TurnRecord> {
    let m = &bundle.momdp;
    t.turns
        .iter()
        .enumerate()
        .map(|(i, turn)| TurnRecord {
            index: i,
            step: m.steps[turn.step].clone(),
            belief: turn.belief.clone().unwrap_or_default(),
            robot_action: m.actions[turn.action].clone(),
            human_action: m.observations[turn.observation].clone(),
            next: m.steps[turn.next].clone(),
            belief_after: match t.turns.get(i + 1) {
                Some(n) => n.belief.clone().unwrap_or_default(),
                None => t.final_belief.clone().unwrap_or_default(),
            },
            belief_reset: turn.belief_reset,
        })
        .collect()
}

/// Plays the human from stdin through a service session, so illegal input is refused and
/// asked for again.
fn interactive(bundle: TrainedBundle, prior: Vec<f64>) -> Result<RunOutput> {
    let types = bundle.labels();
    let service = Service::new([("bundle".to_string(), bundle)], ServiceConfig::default());
    let view = service.create(None, &PriorSource::Explicit { belief: prior })?;
    let id = view.session;
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    let mut err = std::io::stderr();
    loop {
        let t = service.transcript(&id)?;
        if t.status.terminal {
            break;
        }
        writeln!(
            err,
            "board {}  robot: {}  belief {:?}\nyour move ({}):",
            t.status.board,
            t.status.robot_action.as_deref().unwrap_or("-"),
            t.status.belief,
            t.status.legal.join(", ")
        )?;
        let Some(line) = lines.next() else { break };
        let line = line?;
        match service.act(&id, line.trim()) {
            Ok(_) => {}
            Err(teamtype::Error::IllegalAction { legal, .. }) => writeln!(err, "not allowed; try one of {}", legal.join(", "))?,
            Err(e) => return Err(e.into()),
        }
    }
    let t = service.transcript(&id)?;
    Ok(RunOutput {
        human: "interactive",
        types,
        prior: t.prior,
        turns: t.turns,
        final_belief: t.status.belief,
        terminal: t.status.terminal,
    })
}

#[derive(Serialize)]
struct PolicyExport {
    types: Vec<String>,
    steps: Vec<String>,
    actions: Vec<String>,
    /// Best action per step when the type is known.
    corner_actions: Vec<Vec<String>>,
    /// Best action per step at the uniform belief.
    uniform_actions: Vec<String>,
    policy: teamtype::momdp::PolicyValue,
}

fn export_policy(a: ExportArgs) -> Result<()> {
    let bundle = TrainedBundle::load(&a.bundle)?;
    let m = &bundle.momdp;
    let k = m.n_types();
    let corner = |y: usize| -> Vec<f64> { (0..k).map(|i| f64::from(u8::from(i == y))).collect() };
    let uniform = vec![1.0 / k as f64; k];
    let out = PolicyExport {
        types: bundle.labels(),
        steps: m.steps.clone(),
        actions: m.actions.clone(),
        corner_actions: (0..k)
            .map(|y| (0..m.n_steps()).map(|x| m.actions[bundle.policy.best_action(x, &corner(y))].clone()).collect())
            .collect(),
        uniform_actions: (0..m.n_steps()).map(|x| m.actions[bundle.policy.best_action(x, &uniform)].clone()).collect(),
        policy: bundle.policy.clone(),
    };
    write_json(&a.out, &out)
}

#[derive(Serialize)]
struct FoldOutput {
    subject: String,
    k: usize,
    types: Vec<String>,
}

#[derive(Serialize)]
struct EvaluationOutput {
    classification_accuracy: f64,
    folds: Vec<FoldOutput>,
    report: teamtype::harness::RobustnessReport,
}

fn evaluate(a: EvaluateArgs, execution: Execution) -> Result<()> {
    let demos = load_demonstrations(&a.demos)?;
    let domain = load_domain(a.domain.as_deref())?;
    let baseline = match a.baselines.as_str() {
        "per-user-mdp" => true,
        "none" | "" => false,
        other => bail!("unknown baseline '{other}'"),
    };
    let personas = personas_from_demos(&demos)?;
    let folds = cross_validate(&demos, &domain, &a.options.config(execution))?;
    let labels = demos
        .sequences
        .iter()
        .filter_map(|s| Some((s.subject.clone()?, s.label.clone()?)))
        .collect();
    let accuracy = classification_accuracy(&folds, &demos, &labels)?;
    let config = RobustnessConfig {
        epsilons: a.epsilons.clone(),
        reps: a.reps,
        seed: a.options.seed,
        max_turns: a.max_turns,
        baseline,
        execution,
    };
    let report = evaluate_robustness(&folds, &demos, &personas, &config)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    emit_plot_data(&report, a.out.join("plot.csv"))?;
    let out = EvaluationOutput {
        classification_accuracy: accuracy,
        folds: folds
            .iter()
            .map(|f| FoldOutput {
                subject: f.subject.clone(),
                k: f.bundle.model.k,
                types: f.bundle.labels(),
            })
            .collect(),
        report,
    };
    write_json(&a.out.join("report.json"), &out)
}

fn serve(a: ServeArgs) -> Result<()> {
    let mut bundles = Vec::new();
    for dir in &a.bundle {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        bundles.push((name, TrainedBundle::load(dir)?));
    }
    let config = ServiceConfig {
        idle_timeout: Duration::from_secs(a.idle_minutes * 60),
    };
    let service = Arc::new(Service::new(bundles, config));
    let listener = TcpListener::bind(&a.bind).with_context(|| format!("binding {}", a.bind))?;
    eprintln!("listening on {}", listener.local_addr()?);
    teamtype::service::serve(service, listener)?;
    Ok(())
}

fn synth(command: SynthCommand) -> Result<()> {
    match command {
        SynthCommand::PlaceDrill {
            subjects_per_style,
            demos_per_subject,
            order_noise,
            seed,
            out,
        } => {
            let corpus = PlaceDrillCorpus {
                subjects_per_style,
                demos_per_subject,
                order_noise,
            };
            save_demonstrations(&corpus.generate(seed).0, &out)?;
        }
        SynthCommand::Generators {
            sequences,
            actions,
            min_len,
            max_len,
            seed,
            out,
        } => {
            ensure!(actions >= 4 && actions % 2 == 0, "--actions must be even and at least 4");
            ensure!(min_len >= 2 && min_len <= max_len, "need 2 <= min-len <= max-len");
            let generators = Generators::well_separated(actions, seed);
            let (seqs, _) = two_generator_corpus(&generators, sequences, min_len, max_len, seed.wrapping_add(1));
            let alphabet = teamtype::domain::ActionAlphabet::new((0..actions).map(|i| {
                let actor = if i < actions / 2 { teamtype::domain::Actor::Human } else { teamtype::domain::Actor::Robot };
                (format!("a{i}"), actor)
            }))?;
            save_demonstrations(&DemoSet::new(alphabet, seqs)?, &out)?;
        }
    }
    Ok(())
}
