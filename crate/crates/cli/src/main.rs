//! `xtrepan`: train networks, extract and induce trees, score them.

mod config;
mod error;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use xtrepan::c45::{induce_c45, C45Params};
use xtrepan::dataset::{bin_target, split_dataset, BinningSpec, SplitSpec};
use xtrepan::eval::{compare_report, evaluate, Report};
use xtrepan::network::{save_network, Task};
use xtrepan::trainer::{train, LayerSpec, Loss, TopologySpec, TrainConfig};
use xtrepan::trepan::{audit_csv, extract_with_audit, TrepanParams, Variant};
use xtrepan::{Activation, Dataset, DecisionTree, Network};

use config::{pick, FileConfig};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "xtrepan",
    version,
    about = "Decision-tree extraction from trained neural networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a dataset, train a network and write it with its error curve.
    Train(TrainArgs),
    /// Extract an m-of-n tree from a trained network.
    Extract(ExtractArgs),
    /// Induce a C4.5 tree from labeled data.
    Induce(InduceArgs),
    /// Score one tree on a dataset.
    Evaluate(EvaluateArgs),
    /// Score several trees side by side.
    Compare(CompareArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// TOML schema describing the CSV columns.
    #[arg(long)]
    schema: PathBuf,
    /// TOML file of defaults; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice (default 0).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Train, CV and test fractions, e.g. 0.6,0.2,0.2.
    #[arg(long)]
    split: Option<String>,
    /// cross_entropy or mse.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Epochs without CV improvement before stopping.
    #[arg(long)]
    patience: Option<usize>,
    /// Hidden layers as UNITS:ACTIVATION, comma separated (e.g. 8:hyperbolic).
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    output_activation: Option<String>,
    /// Skip connections as FROM-TO layer pairs (0 is the input), e.g. 0-2.
    #[arg(long)]
    skips: Option<String>,
    /// Bins for a regression target, EDGES:LABELS (e.g. 10,20:low,mid,high).
    #[arg(long)]
    bins: Option<String>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Network file.
    #[arg(long)]
    network: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// mofn, single or disjunctive.
    #[arg(long)]
    variant: Option<String>,
    /// Examples a node must have before it is split (default 1000).
    #[arg(long)]
    min_sample: Option<usize>,
    /// Internal-node budget (default 50).
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Beam width of the m-of-n search (default 2).
    #[arg(long)]
    beam_width: Option<usize>,
    /// Majority fraction at which a leaf is final (default 0.99).
    #[arg(long)]
    purity: Option<f64>,
}

#[derive(Args)]
struct InduceArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// gain or gain_ratio (default gain_ratio).
    #[arg(long)]
    criterion: Option<String>,
    /// Smallest node that may still be split (default 2).
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Bins for a regression target, EDGES:LABELS.
    #[arg(long)]
    bins: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Tree file.
    #[arg(long)]
    tree: PathBuf,
    /// Network file; adds fidelity to the metrics.
    #[arg(long)]
    network: Option<PathBuf>,
    /// Metrics CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Bins for a regression target, EDGES:LABELS.
    #[arg(long)]
    bins: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: DataArgs,
    /// Tree files, one flag per tree.
    #[arg(long = "tree", required = true)]
    trees: Vec<PathBuf>,
    /// Network file.
    #[arg(long)]
    network: PathBuf,
    /// Report CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Bins for a regression target, EDGES:LABELS.
    #[arg(long)]
    bins: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Induce(a) => cmd_induce(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_hidden(text: &str) -> Result<Vec<LayerSpec>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|layer| {
            let (units, act) = layer
                .split_once(':')
                .ok_or_else(|| usage(format!("hidden layer `{layer}`: expected UNITS:ACTIVATION")))?;
            let units = units
                .trim()
                .parse()
                .map_err(|_| usage(format!("hidden layer `{layer}`: bad unit count")))?;
            Ok(LayerSpec {
                units,
                activation: act.trim().parse()?,
            })
        })
        .collect()
}

fn parse_skips(text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let bad = || usage(format!("skip `{pair}`: expected FROM-TO"));
            let (from, to) = pair.split_once('-').ok_or_else(bad)?;
            Ok((
                from.trim().parse().map_err(|_| bad())?,
                to.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

/// Classification data as is; a regression target binned by `bins` or, if
/// absent, by the network's own binning.
fn labeled(data: Dataset, bins: Option<&str>, net: Option<&Network>) -> Result<Dataset, CliError> {
    if data.schema().is_classification() {
        if bins.is_some() {
            return Err(usage("--bins applies only to a continuous target"));
        }
        return Ok(data);
    }
    let spec = match (bins, net.map(Network::task)) {
        (Some(text), _) => BinningSpec::parse(text)?,
        (None, Some(Task::Regression { binning: Some(b) })) => b.clone(),
        _ => return Err(usage("a continuous target needs --bins")),
    };
    Ok(bin_target(&data, &spec)?)
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.input.config.as_deref())?;
    let seed = pick(a.input.seed, file.seed, 0);
    let data = io::load_dataset(&a.input.data, &a.input.schema)?;
    let split = SplitSpec::parse(&pick(a.split, file.split, "0.6,0.2,0.2".into()), seed)?;
    let labels = data.schema().class_labels().map(<[String]>::len);
    let loss: Loss = match a.loss.or(file.loss) {
        Some(text) => text.parse()?,
        None if labels.is_some() => Loss::CrossEntropy,
        None => Loss::MeanSquareError,
    };
    let output_activation: Activation = match a.output_activation.or(file.output_activation) {
        Some(text) => text.parse()?,
        None => match labels {
            Some(2) => Activation::Logistic,
            Some(_) => Activation::Softmax,
            None => Activation::Identity,
        },
    };
    let bins = a.bins.or(file.bins);
    if bins.is_some() && labels.is_some() {
        return Err(usage("--bins applies only to a continuous target"));
    }
    let cfg = TrainConfig {
        topology: TopologySpec {
            hidden: parse_hidden(&pick(a.hidden, file.hidden, "8:hyperbolic".into()))?,
            output_activation,
            skips: parse_skips(&pick(a.skips, file.skips, String::new()))?,
        },
        loss,
        learning_rate: pick(a.lr, file.lr, 0.1),
        max_epochs: pick(a.epochs, file.epochs, 1000),
        patience: pick(a.patience, file.patience, 100),
        seed,
    };
    let (train_set, cv_set, test_set) = split_dataset(&data, &split)?;
    let (mut net, report) = train(&train_set, &cv_set, &cfg)?;
    if let Some(text) = bins {
        net = net.with_binning(BinningSpec::parse(&text)?)?;
    }
    println!(
        "trained {} epochs ({:?}), best CV error {:.6} at epoch {}",
        report.stopping_epoch, report.stop_reason, report.cv_error[report.best_epoch], report.best_epoch
    );
    io::emit(&a.out, "network.txt", &save_network(&net))?;
    io::emit(&a.out, "train_report.csv", &report.to_csv())?;
    io::emit(&a.out, "train.csv", &train_set.to_csv())?;
    io::emit(&a.out, "cv.csv", &cv_set.to_csv())?;
    io::emit(&a.out, "test.csv", &test_set.to_csv())?;
    Ok(())
}

fn write_tree(out: &Path, tree: &DecisionTree) -> Result<(), CliError> {
    let c = tree.complexity();
    println!(
        "tree: {} internal nodes, {} leaves, {} literals",
        c.internal_nodes, c.leaves, c.total_literals
    );
    io::emit(out, "tree.json", &tree.serialize())?;
    io::emit(out, "tree.dot", &tree.to_dot())?;
    Ok(())
}

fn cmd_extract(a: ExtractArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.input.config.as_deref())?;
    let defaults = TrepanParams::default();
    let variant: Variant = pick(a.variant, file.variant, defaults.variant.name().into()).parse()?;
    let params = TrepanParams {
        min_sample: pick(a.min_sample, file.min_sample, defaults.min_sample),
        max_internal_nodes: pick(a.max_nodes, file.max_nodes, defaults.max_internal_nodes),
        beam_width: pick(a.beam_width, file.beam_width, defaults.beam_width),
        variant,
        purity_stop: pick(a.purity, file.purity, defaults.purity_stop),
        seed: pick(a.input.seed, file.seed, 0),
        rejection_cap: defaults.rejection_cap,
    };
    let net = io::load_net(&a.network)?;
    let data = io::load_dataset(&a.input.data, &a.input.schema)?;
    let ex = extract_with_audit(&net, &data, &params)?;
    println!("{} network queries", ex.queries);
    write_tree(&a.out, &ex.tree)?;
    io::emit(&a.out, "audit.csv", &audit_csv(&ex.audit))?;
    Ok(())
}

fn cmd_induce(a: InduceArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.input.config.as_deref())?;
    let use_gain_ratio = match pick(a.criterion, file.criterion, "gain_ratio".into()).as_str() {
        "gain" => false,
        "gain_ratio" => true,
        other => {
            return Err(usage(format!(
                "unknown criterion `{other}` (expected gain or gain_ratio)"
            )))
        }
    };
    let params = C45Params {
        min_instances_per_leaf: pick(a.min_leaf, file.min_leaf, 2),
        use_gain_ratio,
        max_depth: a.max_depth.or(file.max_depth),
    };
    let data = io::load_dataset(&a.input.data, &a.input.schema)?;
    let data = labeled(data, a.bins.or(file.bins).as_deref(), None)?;
    write_tree(&a.out, &induce_c45(&data, &params)?)
}

fn model_name(path: &Path) -> String {
    path.display().to_string()
}

fn write_report(out: &Path, report: &Report) -> Result<(), CliError> {
    print!("{}", report.to_text());
    io::write_atomic(out, &report.to_csv())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.input.config.as_deref())?;
    let tree = io::load_tree(&a.tree)?;
    let net = a.network.as_deref().map(io::load_net).transpose()?;
    let data = io::load_dataset(&a.input.data, &a.input.schema)?;
    let data = labeled(data, a.bins.or(file.bins).as_deref(), net.as_ref())?;
    let metrics = evaluate(&tree, net.as_ref(), &data)?;
    let report = Report {
        rows: vec![(model_name(&a.tree), metrics)],
    };
    write_report(&a.out, &report)
}

fn cmd_compare(a: CompareArgs) -> Result<(), CliError> {
    let file = FileConfig::load(a.input.config.as_deref())?;
    let models = a
        .trees
        .iter()
        .map(|p| Ok((model_name(p), io::load_tree(p)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let net = io::load_net(&a.network)?;
    let data = io::load_dataset(&a.input.data, &a.input.schema)?;
    let data = labeled(data, a.bins.or(file.bins).as_deref(), Some(&net))?;
    write_report(&a.out, &compare_report(&models, &net, &data)?)
}
