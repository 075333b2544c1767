//! Command-line harness: dataset generation, training, prediction,
//! evaluation, oracle-search comparison tables, and theory-check suites.
//!
//! Exit codes: 0 ok, 2 IO failure, 3 bad configuration, 4 usage error.

mod compare;
mod theory;

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use structsvm::dataio;
use structsvm::hierarchy::HierarchySpec;
use structsvm::loss::BiCriteriaLoss;
use structsvm::model::{Dataset, ModelKind, StructuredModel};
use structsvm::synth;
use structsvm::train::{
    self, evaluate, gold_sets, microlabel_universe, predict_sets, InferenceMethod, TrainConfig,
};

pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn io(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 4,
            message: message.into(),
        }
    }
}

#[derive(Parser)]
#[command(name = "structsvm", version, about = "Structured SVM with bi-criteria surrogate losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it to a file.
    Train(TrainArgs),
    /// Predict labels for a dataset with a trained model.
    Predict(PredictArgs),
    /// Evaluate a trained model on a labeled dataset.
    Eval(EvalArgs),
    /// Compare the λ-oracle search methods on synthetic instance streams.
    CompareOracles(CompareArgs),
    /// Run the named property suites with fixed seeds.
    TheoryCheck(TheoryArgs),
    /// Generate synthetic datasets.
    Gen(GenArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// chain | multilabel | hier
    #[arg(long)]
    kind: String,
    /// margin | slack | betascale | genscale | logloss | probloss |
    /// probloss-ext | microf1
    #[arg(long)]
    loss: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// margin | binary | bisect | angular | hull
    #[arg(long)]
    infer: String,
    #[arg(long)]
    data: PathBuf,
    /// hierarchy edge file (hier kind)
    #[arg(long)]
    hier: Option<PathBuf>,
    /// per-node α via the ρ-program (hier kind; all-ones when absent)
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    c: f64,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// warm-start hull inference from each example's previous vertices
    #[arg(long)]
    warm_hull: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    hier: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// accepted for interface uniformity; prediction is deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    hier: Option<PathBuf>,
    /// accepted for interface uniformity; evaluation is deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
pub struct CompareArgs {
    /// points | hard | chain
    #[arg(long, default_value = "points")]
    stream: String,
    #[arg(long, default_value_t = 200)]
    instances: usize,
    /// labels per point instance
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// chain length for the chain stream
    #[arg(long, default_value_t = 6)]
    len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// re-run serially and verify identical results
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
pub struct TheoryArgs {
    /// run a single suite: monotonicity | k-bound | angular-subopt |
    /// hull-calls | alpha-optimality | invariance
    #[arg(long)]
    suite: Option<String>,
    /// iteration budget for angular-subopt
    #[arg(long, default_value_t = 63)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    /// chain | multilabel (omit when --hier is used)
    #[arg(long)]
    kind: Option<String>,
    /// hierarchical recipe: balanced | unbalanced
    #[arg(long)]
    hier: Option<String>,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 4)]
    len: usize,
    #[arg(long, default_value_t = 2)]
    states: usize,
    #[arg(long, default_value_t = 8)]
    labels: usize,
    #[arg(long, default_value_t = 0.5)]
    margin: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// output path prefix; writes <out>.data (+ <out>.hier for hierarchies)
    #[arg(long)]
    out: PathBuf,
}

fn parse_loss(name: &str, alpha: Option<f64>, beta: Option<f64>) -> Result<BiCriteriaLoss, CliError> {
    let bad = |e: structsvm::loss::LossError| CliError::config(e.to_string());
    match name {
        "margin" => Ok(BiCriteriaLoss::margin_rescaling()),
        "slack" => Ok(BiCriteriaLoss::slack_rescaling()),
        "logloss" => Ok(BiCriteriaLoss::loss_scaled_log()),
        "probloss" => Ok(BiCriteriaLoss::probloss()),
        "probloss-ext" => Ok(BiCriteriaLoss::probloss_convex_ext()),
        "microf1" => Ok(BiCriteriaLoss::micro_f1()),
        "betascale" => {
            let b = beta.ok_or_else(|| CliError::config("betascale needs --beta"))?;
            BiCriteriaLoss::beta_scaling(b).map_err(bad)
        }
        "genscale" => {
            let a = alpha.ok_or_else(|| CliError::config("genscale needs --alpha"))?;
            let b = beta.ok_or_else(|| CliError::config("genscale needs --beta"))?;
            BiCriteriaLoss::generalized_scaling(a, b).map_err(bad)
        }
        other => Err(CliError::usage(format!("unknown loss {other}"))),
    }
}

fn parse_inference(name: &str) -> Result<InferenceMethod, CliError> {
    match name {
        "margin" => Ok(InferenceMethod::MarginArgmax),
        "binary" => Ok(InferenceMethod::BinarySearch),
        "bisect" => Ok(InferenceMethod::Bisecting),
        "angular" => Ok(InferenceMethod::Angular),
        "hull" => Ok(InferenceMethod::ConvexHull),
        other => Err(CliError::usage(format!("unknown inference {other}"))),
    }
}

fn load_hierarchy(path: &Option<PathBuf>) -> Result<Option<HierarchySpec>, CliError> {
    match path {
        None => Ok(None),
        Some(p) => dataio::read_hierarchy(p)
            .map(Some)
            .map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
    }
}

fn load_dataset(
    kind: &str,
    data: &Path,
    hier: &Option<PathBuf>,
) -> Result<Dataset, CliError> {
    let io = |e: dataio::DataError| CliError::io(format!("{}: {e}", data.display()));
    match kind {
        "chain" => dataio::read_sequences(data).map_err(io),
        "multilabel" => dataio::read_multilabel(data).map_err(io),
        "hier" => {
            let spec = load_hierarchy(hier)?
                .ok_or_else(|| CliError::config("hier kind needs --hier <edges file>"))?;
            dataio::read_hier_examples(data, &spec).map_err(io)
        }
        other => Err(CliError::usage(format!("unknown kind {other}"))),
    }
}

fn kind_of_model(model: &StructuredModel) -> &'static str {
    match model.kind {
        ModelKind::Chain { .. } => "chain",
        ModelKind::FlatMultiLabel { .. } => "multilabel",
        ModelKind::Hierarchical { .. } => "hier",
    }
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let loss = parse_loss(&args.loss, args.alpha, args.beta)?;
    let inference = parse_inference(&args.infer)?;
    let data = load_dataset(&args.kind, &args.data, &args.hier)?;
    let mut config = TrainConfig::new(loss, inference);
    config.reg_c = args.c;
    config.learning_rate = args.lr;
    config.epochs = args.epochs;
    config.seed = args.seed;
    config.lr_decay = args.decay;
    config.warm_start_hull = args.warm_hull;
    if config.reg_c <= 0.0 || config.learning_rate <= 0.0 {
        return Err(CliError::config("c and lr must be positive"));
    }
    let model = match (&data, args.rho) {
        (Dataset::Hier { spec, .. }, Some(rho)) => {
            let alpha = structsvm::hierarchy::compute_alpha_rho(spec, rho, None)
                .map_err(|e| CliError::config(e.to_string()))?;
            train::sgd_train_hier_with_alpha(&data, &config, alpha)
        }
        _ => train::sgd_train(&data, &config),
    }
    .map_err(|e| CliError::config(e.to_string()))?;
    model
        .save(&args.out)
        .map_err(|e| CliError::io(e.to_string()))?;
    let metrics = evaluate(
        &gold_sets(&data),
        &predict_sets(&model, &data),
        microlabel_universe(&data),
    )
    .map_err(|e| CliError::config(e.to_string()))?;
    let objective = train::regularized_objective(&model, &data, &config.loss, config.reg_c);
    println!(
        "{}",
        serde_json::json!({
            "objective": objective,
            "accuracy": metrics.accuracy,
            "hamming": metrics.hamming,
            "micro_f1": metrics.micro_f1,
            "macro_f1": metrics.macro_f1,
        })
    );
    Ok(())
}

fn load_model(model: &Path, hier: &Option<PathBuf>) -> Result<StructuredModel, CliError> {
    let spec = load_hierarchy(hier)?;
    StructuredModel::load(model, spec.as_ref()).map_err(|e| match e {
        structsvm::model::ModelError::Io(io) => CliError::io(format!("{}: {io}", model.display())),
        other => CliError::config(other.to_string()),
    })
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let model = load_model(&args.model, &args.hier)?;
    let data = load_dataset(kind_of_model(&model), &args.data, &args.hier)?;
    let mut out = String::new();
    match (&model.kind, &data) {
        (ModelKind::Chain { .. }, Dataset::Chain { examples, .. }) => {
            for ex in examples {
                let states: Vec<String> = model
                    .predict_chain(ex)
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                out.push_str(&states.join(" "));
                out.push('\n');
            }
        }
        (ModelKind::FlatMultiLabel { .. }, Dataset::MultiLabel { examples, .. }) => {
            for ex in examples {
                let labels: Vec<String> = model
                    .predict_multilabel(ex)
                    .iter()
                    .map(|l| l.to_string())
                    .collect();
                out.push_str(if labels.is_empty() { "-" } else { "" });
                out.push_str(&labels.join(","));
                out.push('\n');
            }
        }
        (ModelKind::Hierarchical { .. }, Dataset::Hier { examples, .. }) => {
            for ex in examples {
                out.push_str(&model.predict_hier(ex).to_string());
                out.push('\n');
            }
        }
        _ => return Err(CliError::config("model and data kinds disagree")),
    }
    std::fs::write(&args.out, out).map_err(|e| CliError::io(format!("{}: {e}", args.out.display())))
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let model = load_model(&args.model, &args.hier)?;
    let data = load_dataset(kind_of_model(&model), &args.data, &args.hier)?;
    let metrics = evaluate(
        &gold_sets(&data),
        &predict_sets(&model, &data),
        microlabel_universe(&data),
    )
    .map_err(|e| CliError::config(e.to_string()))?;
    println!(
        "{}",
        serde_json::json!({
            "accuracy": metrics.accuracy,
            "hamming": metrics.hamming,
            "micro_f1": metrics.micro_f1,
            "macro_f1": metrics.macro_f1,
        })
    );
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let io = |e: dataio::DataError| CliError::io(e.to_string());
    match (&args.hier, args.kind.as_deref()) {
        (Some(recipe), _) => {
            let data = match recipe.as_str() {
                "balanced" => synth::gen_hier_balanced(args.depth, args.n, args.d, args.seed),
                "unbalanced" => synth::gen_hier_unbalanced(args.depth, args.n, args.d, args.seed),
                other => return Err(CliError::usage(format!("unknown hierarchy recipe {other}"))),
            };
            let (spec, examples, dim) = match &data {
                Dataset::Hier {
                    spec,
                    examples,
                    dim,
                } => (spec, examples, *dim),
                _ => unreachable!(),
            };
            dataio::write_hierarchy(&args.out.with_extension("hier"), spec).map_err(io)?;
            dataio::write_hier_examples(
                &args.out.with_extension("data"),
                dim,
                spec.num_nodes(),
                examples,
            )
            .map_err(io)?;
            Ok(())
        }
        (None, Some("chain")) => {
            let data = synth::gen_chain_planted(
                args.n,
                args.len,
                args.states,
                args.d,
                args.margin,
                args.seed,
            );
            let (examples, dim, states) = match &data {
                Dataset::Chain {
                    examples,
                    dim,
                    num_states,
                } => (examples, *dim, *num_states),
                _ => unreachable!(),
            };
            // token names chosen so their hash is the drawn feature index
            let toks: Vec<(Vec<String>, Vec<usize>)> = examples
                .iter()
                .map(|ex| {
                    let tokens = ex
                        .features
                        .iter()
                        .map(|f| find_token_for_index(f[0].0, dim))
                        .collect();
                    (tokens, ex.states.clone())
                })
                .collect();
            dataio::write_sequences(&args.out.with_extension("data"), dim, states, &toks)
                .map_err(io)
        }
        (None, Some("multilabel")) => {
            let data =
                synth::gen_multilabel_planted(args.n, args.labels, args.d, args.margin, args.seed);
            let (examples, dim, labels) = match &data {
                Dataset::MultiLabel {
                    examples,
                    dim,
                    num_labels,
                } => (examples, *dim, *num_labels),
                _ => unreachable!(),
            };
            dataio::write_multilabel(&args.out.with_extension("data"), dim, labels, examples)
                .map_err(io)
        }
        (None, Some(other)) => Err(CliError::usage(format!("unknown kind {other}"))),
        (None, None) => Err(CliError::usage("gen needs --kind or --hier <recipe>")),
    }
}

/// Smallest token of the form `t<k>` whose FNV hash lands on `idx`.
fn find_token_for_index(idx: usize, dim: usize) -> String {
    for k in 0..100_000u64 {
        let tok = format!("t{k}");
        if dataio::hash_token(&tok, dim) == idx {
            return tok;
        }
    }
    format!("f{idx}")
}

fn run() -> Result<(), CliError> {
    let cli = Cli::try_parse().map_err(|e| {
        // clap already formats a good message; help/version are not errors,
        // anything else is a usage failure
        let code = match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
            _ => 4,
        };
        let _ = e.print();
        CliError {
            code,
            message: String::new(),
        }
    })?;
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::CompareOracles(args) => compare::cmd_compare_oracles(args),
        Command::TheoryCheck(args) => theory::cmd_theory_check(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {}", e.message);
            }
            ExitCode::from(e.code)
        }
    }
}
