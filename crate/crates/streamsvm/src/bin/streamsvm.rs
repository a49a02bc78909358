//! Command-line driver: dataset generation, single-pass training,
//! prediction, evaluation, lookahead sweeps, and adversarial-ordering
//! measurements.
//!
//! Exit codes: 0 success, 1 error, 2 soft-acceptance warning.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use streamsvm::baselines::{train_batch_l2svm_ref, train_perceptron, train_sgd_hinge, SgdConfig};
use streamsvm::data::{
    gen_gaussian_clusters, parse_svmlight, permute_stream, write_synth, Dataset, SynthSpec,
};
use streamsvm::harness::{
    adversarial_csv, evaluate, run_adversarial_bound_check, run_lookahead_sweep, sweep_csv,
    HarnessConfig,
};
use streamsvm::model::{deserialize_model, predict, serialize_model, KernelSpec, LinearModel, Model};
use streamsvm::trainer::{train_stream_kernel, train_stream_l1, train_stream_lookahead, TrainConfig, XiConvention};

#[derive(Parser)]
#[command(name = "streamsvm", about = "Single-pass streaming l2-SVM trainer and experiment harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-cluster dataset.
    Generate(GenerateArgs),
    /// Train a model in a single pass over the input stream.
    Train(TrainArgs),
    /// Write one predicted label per test example.
    Predict(PredictArgs),
    /// Print test accuracy as JSON.
    Eval(EvalArgs),
    /// Lookahead sweep over random stream orderings.
    Sweep(SweepArgs),
    /// Adversarial-ordering approximation-ratio measurement.
    Adversarial(AdversarialArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenerateKind {
    Gaussian,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    kind: GenerateKind,
    #[arg(long = "n-train")]
    n_train: usize,
    #[arg(long = "n-test")]
    n_test: usize,
    #[arg(long)]
    dim: usize,
    /// Target Bayes accuracy of the generating clusters, in (0.5, 1].
    #[arg(long)]
    sep: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long = "out-train")]
    out_train: PathBuf,
    #[arg(long = "out-test")]
    out_test: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Stream,
    Lookahead,
    Kernel,
    Perceptron,
    Sgd,
    BatchRef,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum XiConventionArg {
    Corrected,
    PaperLiteral,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    algo: AlgoArg,
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "model-out")]
    model_out: PathBuf,
    #[arg(long = "C")]
    c: f64,
    /// Lookahead buffer size (lookahead algorithm only).
    #[arg(long = "L", default_value_t = 1)]
    l: usize,
    #[arg(long, value_enum, default_value = "linear")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Permute the stream with this seed before training.
    #[arg(long = "shuffle-seed")]
    shuffle_seed: Option<u64>,
    #[arg(long = "xi-convention", value_enum, default_value = "corrected")]
    xi_convention: XiConventionArg,
    /// Regularization for the sgd baseline.
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    /// Block size for the sgd baseline.
    #[arg(long = "block-k", default_value_t = 1)]
    block_k: usize,
    /// Core-set tolerance for the batch reference.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Scale every feature vector to unit norm before training.
    #[arg(long)]
    normalize: bool,
    /// Accept {0,1} labels and map them to {-1,+1}.
    #[arg(long = "zero-one-labels")]
    zero_one_labels: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    normalize: bool,
    #[arg(long = "zero-one-labels")]
    zero_one_labels: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    normalize: bool,
    #[arg(long = "zero-one-labels")]
    zero_one_labels: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Comma-separated lookahead values, e.g. 1,2,5,10,20.
    #[arg(long = "L")]
    l: String,
    #[arg(long, default_value_t = 100)]
    perms: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "zero-one-labels")]
    zero_one_labels: bool,
}

#[derive(Args)]
struct AdversarialArgs {
    /// Instance size; odd, at least 3.
    #[arg(long, default_value_t = 101)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    orderings: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn load_dataset(path: &PathBuf, zero_one: bool, normalize: bool) -> streamsvm::Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let ds = parse_svmlight(&text, zero_one)?;
    Ok(if normalize { ds.normalized() } else { ds })
}

fn cmd_generate(args: &GenerateArgs) -> streamsvm::Result<()> {
    let spec = SynthSpec {
        n_train: args.n_train,
        n_test: args.n_test,
        dim: args.dim,
        separability_target: args.sep,
        seed: args.seed,
    };
    let (train, test) = gen_gaussian_clusters(&spec)?;
    fs::write(&args.out_train, write_synth(&train, args.seed, args.sep))?;
    fs::write(&args.out_test, write_synth(&test, args.seed, args.sep))?;
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> streamsvm::Result<()> {
    let ds = load_dataset(&args.input, args.zero_one_labels, args.normalize)?;
    let stream = match args.shuffle_seed {
        Some(seed) => permute_stream(&ds, seed),
        None => ds,
    };
    let cfg = TrainConfig {
        c: args.c,
        l: args.l,
        xi_convention: match args.xi_convention {
            XiConventionArg::Corrected => XiConvention::Corrected,
            XiConventionArg::PaperLiteral => XiConvention::PaperLiteral,
        },
        seed: args.shuffle_seed.unwrap_or(0),
        ..TrainConfig::default()
    };
    let model = match args.algo {
        AlgoArg::Stream => {
            let (m, _) = train_stream_l1(stream.examples.iter(), &cfg)?;
            Model::Linear(m)
        }
        AlgoArg::Lookahead => {
            let (m, _) = train_stream_lookahead(stream.examples.iter(), &cfg)?;
            Model::Linear(m)
        }
        AlgoArg::Kernel => {
            let kernel = match args.kernel {
                KernelArg::Linear => KernelSpec::Linear,
                KernelArg::Rbf => KernelSpec::Rbf { gamma: args.gamma },
            };
            let (m, _) = train_stream_kernel(stream.examples.iter(), &cfg, &kernel)?;
            Model::Kernel(m)
        }
        AlgoArg::Perceptron => {
            let out = train_perceptron(stream.examples.iter())?;
            Model::Linear(LinearModel {
                w: out.weights,
                r: 0.0,
                s2: 0.0,
                m: out.mistakes.max(1),
                c: args.c,
            })
        }
        AlgoArg::Sgd => {
            let scfg = SgdConfig {
                lambda: args.lambda,
                block_k: args.block_k,
                seed: args.shuffle_seed.unwrap_or(0),
                project: true,
            };
            let out = train_sgd_hinge(stream.examples.iter(), &scfg)?;
            Model::Linear(LinearModel {
                w: out.weights,
                r: 0.0,
                s2: 0.0,
                m: out.steps.max(1),
                c: args.c,
            })
        }
        AlgoArg::BatchRef => {
            let m = train_batch_l2svm_ref(&stream, args.c, args.epsilon)?;
            Model::Linear(m)
        }
    };
    fs::write(&args.model_out, serialize_model(&model))?;
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> streamsvm::Result<()> {
    let model = deserialize_model(&fs::read_to_string(&args.model)?)?;
    let ds = load_dataset(&args.input, args.zero_one_labels, args.normalize)?;
    let mut out = String::new();
    for ex in &ds.examples {
        let (_, label) = predict(&model, &ex.features);
        out.push_str(&label.to_string());
        out.push('\n');
    }
    fs::write(&args.out, out)?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> streamsvm::Result<()> {
    let model = deserialize_model(&fs::read_to_string(&args.model)?)?;
    let ds = load_dataset(&args.input, args.zero_one_labels, args.normalize)?;
    let accuracy = evaluate(&model, &ds)?;
    println!("{{\"accuracy\":{},\"n\":{}}}", accuracy, ds.len());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> streamsvm::Result<ExitCode> {
    let train = load_dataset(&args.train, args.zero_one_labels, false)?;
    let test = load_dataset(&args.test, args.zero_one_labels, false)?;
    let mut l_list = Vec::new();
    for tok in args.l.split(',') {
        let l: usize = tok.trim().parse().map_err(|_| {
            streamsvm::Error::InvalidConfig(format!("bad lookahead value '{tok}'"))
        })?;
        l_list.push(l);
    }
    let cfg = HarnessConfig {
        train: TrainConfig { c: args.c, ..TrainConfig::default() },
        seed_base: args.seed,
        ..HarnessConfig::default()
    };
    let result = run_lookahead_sweep(&train, &test, &l_list, args.perms, &cfg)?;
    fs::write(&args.out, sweep_csv(&result))?;
    for row in &result.rows {
        println!(
            "L={}: accuracy {:.4} +/- {:.4} over {} permutations",
            row.l, row.mean_accuracy, row.std_accuracy, row.n_perms
        );
    }
    if !result.variance_shrinks() {
        eprintln!(
            "warning: accuracy spread did not shrink from the smallest to the largest lookahead"
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_adversarial(args: &AdversarialArgs) -> streamsvm::Result<()> {
    let report = run_adversarial_bound_check(args.n, args.orderings, args.seed)?;
    fs::write(&args.out, adversarial_csv(&report))?;
    println!(
        "singleton-last ratio {:.6}; over {} orderings: min {:.6} mean {:.6} max {:.6}",
        report.singleton_last_ratio,
        report.rows.len(),
        report.min_ratio,
        report.mean_ratio,
        report.max_ratio
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate(args) => cmd_generate(args).map(|_| ExitCode::SUCCESS),
        Command::Train(args) => cmd_train(args).map(|_| ExitCode::SUCCESS),
        Command::Predict(args) => cmd_predict(args).map(|_| ExitCode::SUCCESS),
        Command::Eval(args) => cmd_eval(args).map(|_| ExitCode::SUCCESS),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Adversarial(args) => cmd_adversarial(args).map(|_| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
