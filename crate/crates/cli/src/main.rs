use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aglbp::classify::{
    confusion_to_csv, DescriptorCache, EvalReport, Evaluator, LabelSet, Manifest, PipelineConfig, Selection,
};
use aglbp::gradient::GradientFields;
use aglbp::patterns::serialize::{to_binary, to_csv_row};
use aglbp::patterns::{DescriptorKind, ExtractConfig, Extractor, MappingKind, Normalization};
use aglbp::raster::{load_gray, NeighborhoodSpec, ScalarField};
use aglbp::selection::{learn_mask, mask_to_csv, sweep, sweep_to_csv, SelectionMethod, TrainingSet};
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

const SUPPORTED_GEOMETRY: [(f64, usize); 3] = [(1.0, 8), (2.0, 12), (3.0, 16)];

#[derive(Parser)]
#[command(
    name = "aglbp",
    version,
    about = "Affine-gradient local binary pattern texture descriptors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Describe one image and write the descriptor as CSV or binary.
    Extract {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Output format; defaults to binary for `.aglb` files and CSV otherwise.
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[command(flatten)]
        descriptor: DescriptorArgs,
    },
    /// Histogram of the gradient or affine-gradient field of one image.
    Hist {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_enum)]
        field: Field,
        #[arg(long, default_value_t = 256)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write every valid `x,y,value` of the field.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Gaussian pre-smoothing; 0 disables it.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// Learn a feature mask on a training manifest.
    TrainMask {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        descriptor: DescriptorArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Classify a test manifest against a training manifest, or run the
    /// leave-samples-out protocol on a grouped manifest.
    Evaluate {
        #[arg(long, required_unless_present = "groups", requires = "test")]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Manifest with a group column; each fold trains on one group per class.
        #[arg(long, conflicts_with_all = ["train", "test"])]
        groups: Option<PathBuf>,
        /// Run a single fold of the grouped protocol.
        #[arg(long, requires = "groups")]
        fold: Option<usize>,
        /// JSON report; the confusion matrix goes next to it as `.csv`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        descriptor: DescriptorArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Accuracy and mask dimension over a grid of selection parameters.
    Sweep {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        descriptor: DescriptorArgs,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Field {
    Eg,
    Affg,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Select {
    Topn,
    Var,
    None,
}

#[derive(Args)]
struct DescriptorArgs {
    #[arg(long, default_value = "AGLBP")]
    descriptor: DescriptorKind,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 8)]
    points: usize,
    /// Defaults to `ro` for rotation-aligned descriptors and `original` otherwise.
    #[arg(long)]
    mapping: Option<MappingKind>,
    #[arg(long, default_value = "percent")]
    norm: Normalization,
    /// Allow geometries other than (1,8), (2,12) and (3,16).
    #[arg(long)]
    unsafe_geometry: bool,
}

#[derive(Args)]
struct SelectionArgs {
    #[arg(long, value_enum, default_value = "var")]
    select: Select,
    /// N for topn, phi for var.
    #[arg(long)]
    param: Option<f64>,
    /// Variance threshold; accepts `inf`. Implies `--select var`.
    #[arg(long, conflicts_with = "param")]
    phi: Option<f64>,
    /// Seeds the per-class group order of the grouped protocol.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Errors from argument values the parser could not check.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

impl DescriptorArgs {
    fn config(&self) -> anyhow::Result<ExtractConfig> {
        let supported = SUPPORTED_GEOMETRY.contains(&(self.radius, self.points));
        if !supported && !self.unsafe_geometry {
            return Err(usage(format!(
                "geometry (R={}, P={}) is outside (1,8), (2,12), (3,16); pass --unsafe-geometry to use it",
                self.radius, self.points
            )));
        }
        let spec = NeighborhoodSpec::new(self.radius, self.points)?;
        let mut config = ExtractConfig::new(self.descriptor, spec).with_normalization(self.norm);
        if let Some(m) = self.mapping {
            config = config.with_mapping(m);
        }
        Ok(config)
    }
}

impl SelectionArgs {
    fn selection(&self) -> anyhow::Result<Option<Selection>> {
        if let Some(phi) = self.phi {
            return Ok(Some(Selection {
                method: SelectionMethod::VarThreshold,
                parameter: phi,
            }));
        }
        Ok(match self.select {
            Select::None => None,
            Select::Var => Some(Selection {
                method: SelectionMethod::VarThreshold,
                parameter: self.param.unwrap_or(2.0),
            }),
            Select::Topn => Some(Selection {
                method: SelectionMethod::TopN,
                parameter: self.param.ok_or_else(|| usage("--select topn needs --param N"))?,
            }),
        })
    }

    fn method(&self) -> SelectionMethod {
        match (self.phi, self.select) {
            (None, Select::Topn) => SelectionMethod::TopN,
            _ => SelectionMethod::VarThreshold,
        }
    }
}

fn pipeline(descriptor: &DescriptorArgs, selection: &SelectionArgs) -> anyhow::Result<PipelineConfig> {
    let mut config = PipelineConfig::new(descriptor.config()?).with_selection(selection.selection()?);
    config.seed = selection.seed;
    Ok(config)
}

fn evaluator(config: PipelineConfig, cache: &Option<PathBuf>) -> anyhow::Result<Evaluator> {
    let ev = Evaluator::new(config)?;
    Ok(match cache {
        Some(dir) => ev.with_cache(DescriptorCache::new(dir)?),
        None => ev,
    })
}

fn echo(value: &impl serde::Serialize) -> String {
    format!(
        "# config: {}\n",
        serde_json::to_string(value).expect("config serializes")
    )
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_manifest(path: &Path) -> anyhow::Result<Manifest> {
    Ok(Manifest::load(path)?)
}

fn cmd_extract(image: &Path, out: &Path, format: Option<Format>, args: &DescriptorArgs) -> anyhow::Result<()> {
    let config = args.config()?;
    let img = load_gray(image)?;
    let d = Extractor::new(config)?.extract(&img).map_err(|e| aglbp::Error::Data {
        path: image.to_path_buf(),
        message: e.to_string(),
    })?;
    let binary = match format {
        Some(f) => matches!(f, Format::Binary),
        None => out.extension().is_some_and(|e| e == "aglb"),
    };
    if binary {
        write(out, to_binary(&d))?;
    } else {
        write(out, echo(&config) + &to_csv_row(&d))?;
    }
    println!("dimension: {}", d.dimension());
    Ok(())
}

fn cmd_hist(
    image: &Path,
    field: Field,
    bins: usize,
    out: &Path,
    dump: Option<&Path>,
    sigma: f64,
) -> anyhow::Result<()> {
    if bins < 2 {
        return Err(usage("--bins must be at least 2"));
    }
    let img = load_gray(image)?;
    let fields = GradientFields::compute(&img, sigma)?;
    let (name, f): (&str, &ScalarField) = match field {
        Field::Eg => ("eg", &fields.eg),
        Field::Affg => ("affg", &fields.affg_prime),
    };
    let (min, max) = f.range().ok_or_else(|| aglbp::Error::EmptyValidRegion {
        width: img.width(),
        height: img.height(),
        radius: 1.0,
    })?;
    // bin centers run from 0 to the field maximum
    let hi = max;
    let step = hi / (bins - 1) as f64;
    let mut counts = vec![0u64; bins];
    for (_, _, v) in f.valid_values() {
        let i = if step > 0.0 { (v / step).round() as usize } else { 0 };
        counts[i.min(bins - 1)] += 1;
    }
    let mut csv = echo(&serde_json::json!({
        "image": image, "field": name, "bins": bins, "sigma": sigma
    }));
    csv.push_str("bin_center,count\n");
    for (i, c) in counts.iter().enumerate() {
        csv.push_str(&format!("{},{c}\n", hi * i as f64 / (bins - 1) as f64));
    }
    write(out, csv)?;
    if let Some(dump) = dump {
        let mut csv = String::from("x,y,value\n");
        for (x, y, v) in f.valid_values() {
            csv.push_str(&format!("{x},{y},{v}\n"));
        }
        write(dump, csv)?;
    }
    println!("min: {min}");
    println!("max: {max}");
    println!("pixels: {}", f.valid_count());
    Ok(())
}

fn describe(
    ev: &Evaluator,
    m: &Manifest,
    labels: &LabelSet,
) -> anyhow::Result<Vec<(aglbp::patterns::Descriptor, usize)>> {
    Ok(ev.describe_manifest(m, &labels.intern(m)?)?)
}

fn cmd_train_mask(
    train: &Path,
    out: &Path,
    d: &DescriptorArgs,
    s: &SelectionArgs,
    cache: &Option<PathBuf>,
) -> anyhow::Result<()> {
    let config = pipeline(d, s)?;
    let Some(selection) = config.selection else {
        return Err(usage("train-mask needs --select topn or var"));
    };
    let ev = evaluator(config, cache)?;
    let m = load_manifest(train)?;
    let labels = LabelSet::from_manifest(&m);
    let training = TrainingSet::new(describe(&ev, &m, &labels)?)?;
    let mask = learn_mask(
        &training,
        selection.method,
        selection.parameter,
        &config.selection_config,
    )?;
    write(out, echo(&config) + &mask_to_csv(&mask))?;
    println!("dimension: {}", mask.dimension());
    Ok(())
}

fn print_report(r: &EvalReport) {
    println!("accuracy: {:.2}%", r.accuracy);
    if let (Some(mean), Some(spread)) = (r.mean_fold_accuracy, r.fold_spread) {
        for f in &r.folds {
            println!("fold {}: {:.2}%", f.fold, f.accuracy);
        }
        println!("mean fold accuracy: {mean:.2}% (spread {spread:.2})");
    }
    println!("dimension: {}", r.dimension);
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    train: Option<&Path>,
    test: Option<&Path>,
    groups: Option<&Path>,
    fold: Option<usize>,
    out: &Path,
    d: &DescriptorArgs,
    s: &SelectionArgs,
    cache: &Option<PathBuf>,
) -> anyhow::Result<()> {
    let ev = evaluator(pipeline(d, s)?, cache)?;
    let report = match (groups, train, test) {
        (Some(g), _, _) => ev.evaluate_groups(&load_manifest(g)?, fold)?,
        (None, Some(train), Some(test)) => ev.evaluate(&load_manifest(train)?, &load_manifest(test)?)?,
        _ => return Err(usage("evaluate needs --train and --test, or --groups")),
    };
    write(out, report.to_json())?;
    write(
        &out.with_extension("csv"),
        echo(&report.config) + &confusion_to_csv(&report),
    )?;
    print_report(&report);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    train: &Path,
    test: &Path,
    grid: &[f64],
    out: &Path,
    d: &DescriptorArgs,
    s: &SelectionArgs,
    cache: &Option<PathBuf>,
) -> anyhow::Result<()> {
    if s.select == Select::None && s.phi.is_none() {
        return Err(usage("sweep needs --select topn or var"));
    }
    // the grid supplies the selection parameter
    let config = PipelineConfig::new(d.config()?).with_selection(None);
    let ev = evaluator(config, cache)?;
    let train_m = load_manifest(train)?;
    let test_m = load_manifest(test)?;
    let labels = LabelSet::from_manifest(&train_m);
    let training = TrainingSet::new(describe(&ev, &train_m, &labels)?)?;
    let validation = describe(&ev, &test_m, &labels)?;
    let rows = sweep(&training, &validation, s.method(), grid, &config.selection_config)?;
    let echo_config = serde_json::json!({
        "extract": config.extract,
        "method": s.method(),
        "selection_config": config.selection_config,
    });
    write(out, echo(&echo_config) + &sweep_to_csv(&rows))?;
    for r in &rows {
        println!("{}: {:.2}% ({} dims)", r.parameter, r.accuracy, r.dimension);
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Extract {
            image,
            out,
            format,
            descriptor,
        } => cmd_extract(image, out, *format, descriptor),
        Command::Hist {
            image,
            field,
            bins,
            out,
            dump,
            sigma,
        } => cmd_hist(image, *field, *bins, out, dump.as_deref(), *sigma),
        Command::TrainMask {
            train,
            out,
            descriptor,
            selection,
            cache,
        } => cmd_train_mask(train, out, descriptor, selection, cache),
        Command::Evaluate {
            train,
            test,
            groups,
            fold,
            out,
            descriptor,
            selection,
            cache,
        } => cmd_evaluate(
            train.as_deref(),
            test.as_deref(),
            groups.as_deref(),
            *fold,
            out,
            descriptor,
            selection,
            cache,
        ),
        Command::Sweep {
            train,
            test,
            grid,
            out,
            descriptor,
            selection,
            cache,
        } => cmd_sweep(train, test, grid, out, descriptor, selection, cache),
    }
}

/// 2 for usage errors, 3 for data errors, 4 for broken invariants.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<aglbp::Error>() {
        Some(aglbp::Error::InvalidParameter(_) | aglbp::Error::Capacity(_)) => 2,
        Some(aglbp::Error::Invariant(_)) => 4,
        _ => 3,
    }
}

/// The error chain on one line, leaving out causes already quoted by
/// their parent's message.
fn describe_error(err: &anyhow::Error) -> String {
    let mut text = err.to_string();
    for cause in err.chain().skip(1) {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            text.push_str(": ");
            text.push_str(&msg);
        }
    }
    text
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("AGLBP_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("AGLBP_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe_error(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
