//! Command-line surface. Argument structs live here so the binary stays
//! a thin shim; `run` does the dispatching.
//!
//! Every primary output is one line-delimited JSON record embedding the
//! resolved configuration and the library version, so a result file is
//! self-describing. Reruns with identical arguments and inputs produce
//! byte-identical output.

use crate::causal::{
    crump_trim, fit_propensity_logistic, margin_pipeline, naive_ace, subpopulation_ace,
    CausalEstimate, MatchMetric, PipelineConfig, PipelineResult, TreatmentModel,
};
use crate::dataset::{
    generate, load_csv, standardize, CsvSchema, Dataset, DgpSpec, LoadReport,
    StandardizationRecord, TreatmentKind, TreatmentVector,
};
use crate::diagnostics::{
    bootstrap_margin_size, default_min_leaf, fit_margin_tree, BootstrapMarginDist, TreeNode,
    DEFAULT_BOOTSTRAP_B, DEFAULT_MAX_DEPTH,
};
use crate::error::{Error, Result};
use crate::geometry::relaxed_overlap_check;
use crate::svm::{
    self, fit_linear_svm, fit_meta_margin, kkt_report, margin_set, KktReport, MarginReport,
    MetaMargin, SvmModel, SvmParams,
};
use crate::svr::{self, fit_linear_svr, SvrModel, SvrParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "marginfit",
    version,
    about = "Overlap diagnostics and margin-based causal effect estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic benchmark dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Test relaxed covariate overlap between the arms of a binary study.
    Overlap(OverlapArgs),
    /// Fit the linear SVM assignment model and report its KKT state.
    FitSvm(FitSvmArgs),
    /// Fit the linear epsilon-insensitive SVR dose model.
    FitSvr(FitSvrArgs),
    /// Extract the margin subpopulation.
    Margin(MarginArgs),
    /// Estimate the causal effect: naive, trimmed, or margin pipeline.
    Estimate(EstimateArgs),
    /// Bootstrap the distribution of the margin size.
    Bootstrap(BootstrapArgs),
    /// Fit a small classification tree describing margin membership.
    Tree(TreeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Binary,
    Categorical,
    Continuous,
}

impl From<KindArg> for TreatmentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Binary => TreatmentKind::Binary,
            KindArg::Categorical => TreatmentKind::Categorical,
            KindArg::Continuous => TreatmentKind::Continuous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    #[value(alias = "propensity")]
    PropensityAbsoluteDifference,
    Mahalanobis,
}

impl From<MetricArg> for MatchMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::PropensityAbsoluteDifference => MatchMetric::PropensityAbsDiff,
            MetricArg::Mahalanobis => MatchMetric::Mahalanobis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Naive,
    Crump,
    Margin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Fig1,
    Fig2,
    Positivity,
    Continuous,
}

/// Where the input rows come from and how to read them.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the treatment column.
    #[arg(long)]
    pub treatment_col: String,
    /// How to interpret the treatment column.
    #[arg(long, value_enum, default_value_t = KindArg::Binary)]
    pub treatment_kind: KindArg,
    /// Name of the outcome column, when estimation needs one.
    #[arg(long)]
    pub outcome_col: Option<String>,
    /// Comma-separated covariate columns. Default: every remaining
    /// numeric column.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the primary output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Primary output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Benchmark family.
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Sample size (total; fig1/fig2 split it evenly across arms).
    #[arg(long)]
    pub n: usize,
    /// Master seed for the generator.
    #[arg(long)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Recorded for provenance; the check itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FitSvmArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Soft-margin cost C.
    #[arg(long, default_value_t = svm::DEFAULT_COST)]
    pub cost: f64,
    /// Skip covariate standardization.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FitSvrArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Tube half-width epsilon.
    #[arg(long, default_value_t = svr::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Regularization constant.
    #[arg(long, default_value_t = svr::DEFAULT_REG_C)]
    pub reg_c: f64,
    /// Skip covariate standardization.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MarginArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = svm::DEFAULT_COST)]
    pub cost: f64,
    #[arg(long, default_value_t = svr::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = svr::DEFAULT_REG_C)]
    pub reg_c: f64,
    /// Skip covariate standardization.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Estimation route.
    #[arg(long, value_enum, default_value_t = MethodArg::Margin)]
    pub method: MethodArg,
    /// Propensity trimming threshold for --method crump.
    #[arg(long, default_value_t = 0.1)]
    pub trim_c: f64,
    #[arg(long, default_value_t = svm::DEFAULT_COST)]
    pub cost: f64,
    #[arg(long, default_value_t = svr::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = svr::DEFAULT_REG_C)]
    pub reg_c: f64,
    /// Matching distance for the binary branch.
    #[arg(long, value_enum, default_value_t = MetricArg::PropensityAbsoluteDifference)]
    pub metric: MetricArg,
    /// Skip covariate standardization.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = svm::DEFAULT_COST)]
    pub cost: f64,
    /// Number of replicates.
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_B)]
    pub boot_b: usize,
    /// Master seed; replicate r derives its own seed from it.
    #[arg(long)]
    pub seed: u64,
    /// Skip covariate standardization.
    #[arg(long)]
    pub no_standardize: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = svm::DEFAULT_COST)]
    pub cost: f64,
    #[arg(long, default_value_t = svr::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = svr::DEFAULT_REG_C)]
    pub reg_c: f64,
    /// Maximum tree depth.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Minimum subjects per leaf. Default: max(5, n/50).
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Skip covariate standardization.
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Resolved run parameters, embedded verbatim in every output record.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub data: Option<String>,
    pub family: Option<String>,
    pub n: Option<usize>,
    pub treatment_col: Option<String>,
    pub treatment_kind: Option<TreatmentKind>,
    pub outcome_col: Option<String>,
    pub covariates: Option<Vec<String>>,
    pub cost: Option<f64>,
    pub epsilon: Option<f64>,
    pub reg_c: Option<f64>,
    pub trim_c: Option<f64>,
    pub metric: Option<MatchMetric>,
    pub method: Option<String>,
    pub boot_b: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: Option<usize>,
    pub seed: Option<u64>,
    pub standardize: bool,
    pub out: Option<String>,
    pub format: String,
}

impl RunConfig {
    fn new(subcommand: &str) -> Self {
        RunConfig {
            subcommand: subcommand.to_string(),
            data: None,
            family: None,
            n: None,
            treatment_col: None,
            treatment_kind: None,
            outcome_col: None,
            covariates: None,
            cost: None,
            epsilon: None,
            reg_c: None,
            trim_c: None,
            metric: None,
            method: None,
            boot_b: None,
            max_depth: None,
            min_leaf: None,
            seed: None,
            standardize: true,
            out: None,
            format: "jsonl".into(),
        }
    }

    fn with_data(mut self, d: &DataArgs) -> Self {
        self.data = Some(d.data.display().to_string());
        self.treatment_col = Some(d.treatment_col.clone());
        self.treatment_kind = Some(d.treatment_kind.into());
        self.outcome_col = d.outcome_col.clone();
        self.covariates = d.covariates.clone();
        self
    }

    fn with_output(mut self, o: &OutputArgs) -> Self {
        self.out = o.out.as_ref().map(|p| p.display().to_string());
        self.format = format!("{:?}", o.format).to_lowercase();
        self
    }
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    record: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: T,
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn emit<T: Serialize>(
    out: &Option<PathBuf>,
    record: &'static str,
    config: &RunConfig,
    result: T,
) -> Result<()> {
    let rec = Record {
        record,
        version: crate::VERSION,
        config,
        result,
    };
    let line = serde_json::to_string(&rec)
        .map_err(|e| Error::NonFinite(format!("output not representable as JSON: {e}")))?;
    write_output(out, &format!("{line}\n"))
}

fn load(d: &DataArgs) -> Result<(Dataset, LoadReport)> {
    let schema = CsvSchema {
        treatment_col: d.treatment_col.clone(),
        treatment_kind: d.treatment_kind.into(),
        outcome_col: d.outcome_col.clone(),
        covariate_cols: d.covariates.clone(),
    };
    load_csv(&d.data, &schema)
}

/// Standardized working copy plus the record of what changed, honoring
/// the `--no-standardize` switch.
fn working_copy(
    d: &Dataset,
    no_standardize: bool,
) -> Result<(Dataset, Option<StandardizationRecord>)> {
    if no_standardize {
        Ok((d.clone(), None))
    } else {
        let (w, record) = standardize(d)?;
        Ok((w, Some(record)))
    }
}

fn dataset_to_csv(d: &Dataset) -> String {
    let mut out = String::new();
    for name in d.covariate_names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("treatment");
    let has_outcome = d.outcome().is_some();
    if has_outcome {
        out.push_str(",outcome");
    }
    out.push('\n');
    let raw = d.treatment().raw_values();
    for i in 0..d.n() {
        for j in 0..d.p() {
            out.push_str(&format!("{},", d.covariates()[[i, j]]));
        }
        out.push_str(&format!("{}", raw[i]));
        if let Some(y) = d.outcome() {
            out.push_str(&format!(",{}", y[i]));
        }
        out.push('\n');
    }
    out
}

/// Margin extraction shared by `margin` and `tree`: the construction is
/// chosen by the treatment kind.
fn extract_margin(
    work: &Dataset,
    cost: f64,
    epsilon: f64,
    reg_c: f64,
) -> Result<(MarginReport, Option<MetaMargin>)> {
    match work.treatment() {
        TreatmentVector::Binary { .. } => {
            let params = SvmParams {
                cost,
                ..SvmParams::default()
            };
            let model = fit_linear_svm(work, &params)?;
            let report = margin_set(&model, work, svm::DEFAULT_MARGIN_TOL)?;
            Ok((report, None))
        }
        TreatmentVector::Categorical { .. } => {
            let params = SvmParams {
                cost,
                ..SvmParams::default()
            };
            let meta = fit_meta_margin(work, &params, svm::DEFAULT_MARGIN_TOL)?;
            let report = MarginReport {
                kept: meta.kept.clone(),
                rule: format!(
                    "union over level pairs of T_i*(w.z_i - b) < 1 - {:e}",
                    svm::DEFAULT_MARGIN_TOL
                ),
                scores: Vec::new(),
                margin_tol: svm::DEFAULT_MARGIN_TOL,
            };
            Ok((report, Some(meta)))
        }
        TreatmentVector::Continuous(_) => {
            let params = SvrParams {
                epsilon,
                reg_c,
                ..SvrParams::default()
            };
            let model = fit_linear_svr(work, &params)?;
            let report = svr::continuous_margin_set(&model, svm::DEFAULT_MARGIN_TOL)?;
            Ok((report, None))
        }
    }
}

#[derive(Serialize)]
struct SimulateResult {
    spec: DgpSpec,
    rows: usize,
    path: String,
}

#[derive(Serialize)]
struct OverlapResult {
    overlap: crate::geometry::OverlapReport,
    load: LoadReport,
}

#[derive(Serialize)]
struct FitSvmResult {
    model: SvmModel,
    kkt: KktReport,
    standardization: Option<StandardizationRecord>,
    load: LoadReport,
}

#[derive(Serialize)]
struct FitSvrResult {
    model: SvrModel,
    standardization: Option<StandardizationRecord>,
    load: LoadReport,
}

#[derive(Serialize)]
struct MarginResult {
    margin: MarginReport,
    meta: Option<MetaMargin>,
    standardization: Option<StandardizationRecord>,
    load: LoadReport,
}

#[derive(Serialize)]
struct EstimateResult {
    estimates: Vec<CausalEstimate>,
    /// Subjects the estimate is computed on (trimmed or margin set);
    /// absent for the naive route.
    kept: Option<Vec<usize>>,
    pipeline: Option<PipelineResult>,
    load: LoadReport,
}

#[derive(Serialize)]
struct BootstrapResult {
    dist: BootstrapMarginDist,
    histogram: Vec<(usize, usize)>,
    skipped: usize,
    load: LoadReport,
}

#[derive(Serialize)]
struct TreeResult {
    tree: TreeNode,
    rendered: String,
    in_margin: usize,
    load: LoadReport,
}

fn require_jsonl(format: FormatArg, allowed: &str) -> Result<()> {
    if format != FormatArg::Jsonl {
        return Err(Error::InvalidArgument(format!(
            "this subcommand only supports --format {allowed}"
        )));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Overlap(args) => run_overlap(args),
        Command::FitSvm(args) => run_fit_svm(args),
        Command::FitSvr(args) => run_fit_svr(args),
        Command::Margin(args) => run_margin(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Bootstrap(args) => run_bootstrap(args),
        Command::Tree(args) => run_tree(args),
    }
}

/// Effect size used by the outcome-bearing benchmark families.
const SIMULATED_TAU: f64 = 2.0;

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let spec = match args.family {
        FamilyArg::Fig1 => DgpSpec::fig1(args.n, args.seed),
        FamilyArg::Fig2 => DgpSpec::fig2(args.n / 2, args.n - args.n / 2, args.seed),
        FamilyArg::Positivity => DgpSpec::positivity(args.n, SIMULATED_TAU, args.seed),
        FamilyArg::Continuous => DgpSpec::continuous(args.n, SIMULATED_TAU, args.seed),
    };
    let d = generate(&spec)?;
    std::fs::write(&args.out, dataset_to_csv(&d))?;

    let mut config = RunConfig::new("simulate");
    config.family = Some(spec.family_name().to_string());
    config.n = Some(args.n);
    config.seed = Some(args.seed);
    config.out = Some(args.out.display().to_string());
    config.format = "csv".into();
    let result = SimulateResult {
        spec,
        rows: d.n(),
        path: args.out.display().to_string(),
    };
    // The CSV is the primary output; the provenance record goes to stdout.
    emit(&None, "simulate", &config, result)
}

fn run_overlap(args: OverlapArgs) -> Result<()> {
    require_jsonl(args.output.format, "jsonl")?;
    let (d, load_report) = load(&args.data)?;
    let z0 = d.group_covariates(-1.0)?;
    let z1 = d.group_covariates(1.0)?;
    let overlap = relaxed_overlap_check(&z0, &z1, None)?;
    let mut config = RunConfig::new("overlap")
        .with_data(&args.data)
        .with_output(&args.output);
    config.seed = args.seed;
    emit(
        &args.output.out,
        "overlap-report",
        &config,
        OverlapResult {
            overlap,
            load: load_report,
        },
    )
}

fn run_fit_svm(args: FitSvmArgs) -> Result<()> {
    require_jsonl(args.output.format, "jsonl")?;
    let (d, load_report) = load(&args.data)?;
    let (work, standardization) = working_copy(&d, args.no_standardize)?;
    let params = SvmParams {
        cost: args.cost,
        ..SvmParams::default()
    };
    let model = fit_linear_svm(&work, &params)?;
    let kkt = kkt_report(&model, &work)?;
    let mut config = RunConfig::new("fit-svm")
        .with_data(&args.data)
        .with_output(&args.output);
    config.cost = Some(args.cost);
    config.standardize = !args.no_standardize;
    config.seed = args.seed;
    emit(
        &args.output.out,
        "svm-model",
        &config,
        FitSvmResult {
            model,
            kkt,
            standardization,
            load: load_report,
        },
    )
}

fn run_fit_svr(args: FitSvrArgs) -> Result<()> {
    require_jsonl(args.output.format, "jsonl")?;
    let (d, load_report) = load(&args.data)?;
    let (work, standardization) = working_copy(&d, args.no_standardize)?;
    let params = SvrParams {
        epsilon: args.epsilon,
        reg_c: args.reg_c,
        ..SvrParams::default()
    };
    let model = fit_linear_svr(&work, &params)?;
    let mut config = RunConfig::new("fit-svr")
        .with_data(&args.data)
        .with_output(&args.output);
    config.epsilon = Some(args.epsilon);
    config.reg_c = Some(args.reg_c);
    config.standardize = !args.no_standardize;
    config.seed = args.seed;
    emit(
        &args.output.out,
        "svr-model",
        &config,
        FitSvrResult {
            model,
            standardization,
            load: load_report,
        },
    )
}

fn run_margin(args: MarginArgs) -> Result<()> {
    require_jsonl(args.output.format, "jsonl")?;
    let (d, load_report) = load(&args.data)?;
    let (work, standardization) = working_copy(&d, args.no_standardize)?;
    let (margin, meta) = extract_margin(&work, args.cost, args.epsilon, args.reg_c)?;
    let mut config = RunConfig::new("margin")
        .with_data(&args.data)
        .with_output(&args.output);
    config.cost = Some(args.cost);
    config.epsilon = Some(args.epsilon);
    config.reg_c = Some(args.reg_c);
    config.standardize = !args.no_standardize;
    config.seed = args.seed;
    emit(
        &args.output.out,
        "margin-report",
        &config,
        MarginResult {
            margin,
            meta,
            standardization,
            load: load_report,
        },
    )
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    require_jsonl(args.output.format, "jsonl")?;
    let (d, load_report) = load(&args.data)?;
    let method_name = match args.method {
        MethodArg::Naive => "naive",
        MethodArg::Crump => "crump",
        MethodArg::Margin => "margin",
    };
    let result = match args.method {
        MethodArg::Naive => EstimateResult {
            estimates: vec![naive_ace(&d)?],
            kept: None,
            pipeline: None,
            load: load_report,
        },
        MethodArg::Crump => {
            let (work, _) = working_copy(&d, args.no_standardize)?;
            let pm = fit_propensity_logistic(&work)?;
            let kept = crump_trim(&pm, args.trim_c)?;
            let est = subpopulation_ace(&d, &kept)?;
            EstimateResult {
                estimates: vec![est],
                kept: Some(kept),
                pipeline: None,
                load: load_report,
            }
        }
        MethodArg::Margin => {
            let config = PipelineConfig {
                svm: SvmParams {
                    cost: args.cost,
                    ..SvmParams::default()
                },
                svr: SvrParams {
                    epsilon: args.epsilon,
                    reg_c: args.reg_c,
                    ..SvrParams::default()
                },
                margin_tol: svm::DEFAULT_MARGIN_TOL,
                metric: args.metric.into(),
                dose_model: TreatmentModel::LinearLeastSquares,
                standardize: !args.no_standardize,
            };
            let pr = margin_pipeline(&d, &config)?;
            EstimateResult {
                estimates: pr.estimates.clone(),
                kept: Some(pr.margin.kept.clone()),
                pipeline: Some(pr),
                load: load_report,
            }
        }
    };
    let mut config = RunConfig::new("estimate")
        .with_data(&args.data)
        .with_output(&args.output);
    config.method = Some(method_name.to_string());
    config.trim_c = Some(args.trim_c);
    config.cost = Some(args.cost);
    config.epsilon = Some(args.epsilon);
    config.reg_c = Some(args.reg_c);
    config.metric = Some(args.metric.into());
    config.standardize = !args.no_standardize;
    config.seed = args.seed;
    emit(&args.output.out, "estimate", &config, result)
}

fn run_bootstrap(args: BootstrapArgs) -> Result<()> {
    let (d, load_report) = load(&args.data)?;
    let (work, _) = working_copy(&d, args.no_standardize)?;
    let params = SvmParams {
        cost: args.cost,
        ..SvmParams::default()
    };
    let dist = bootstrap_margin_size(
        &work,
        args.boot_b,
        &params,
        svm::DEFAULT_MARGIN_TOL,
        args.seed,
    )?;
    let mut config = RunConfig::new("bootstrap")
        .with_data(&args.data)
        .with_output(&args.output);
    config.cost = Some(args.cost);
    config.boot_b = Some(args.boot_b);
    config.seed = Some(args.seed);
    config.standardize = !args.no_standardize;
    match args.output.format {
        FormatArg::Jsonl => {
            let histogram = dist.histogram();
            let skipped = dist.skipped();
            emit(
                &args.output.out,
                "bootstrap-margin-size",
                &config,
                BootstrapResult {
                    dist,
                    histogram,
                    skipped,
                    load: load_report,
                },
            )
        }
        FormatArg::Csv => {
            let mut table = String::from("size,count\n");
            for (size, count) in dist.histogram() {
                table.push_str(&format!("{size},{count}\n"));
            }
            write_output(&args.output.out, &table)
        }
        FormatArg::Text => Err(Error::InvalidArgument(
            "bootstrap supports --format jsonl or csv".into(),
        )),
    }
}

fn run_tree(args: TreeArgs) -> Result<()> {
    if args.output.format == FormatArg::Csv {
        return Err(Error::InvalidArgument(
            "tree supports --format jsonl or text".into(),
        ));
    }
    let (d, load_report) = load(&args.data)?;
    let (work, _) = working_copy(&d, args.no_standardize)?;
    let (margin, _) = extract_margin(&work, args.cost, args.epsilon, args.reg_c)?;
    let mut in_margin = vec![false; d.n()];
    for &i in &margin.kept {
        in_margin[i] = true;
    }
    let max_depth = args.max_depth.unwrap_or(DEFAULT_MAX_DEPTH);
    let min_leaf = args.min_leaf.unwrap_or_else(|| default_min_leaf(d.n()));
    // The tree reads raw covariates so thresholds stay in data units.
    let tree = fit_margin_tree(&d, &in_margin, max_depth, min_leaf)?;
    let rendered = tree.render(d.covariate_names());
    let mut config = RunConfig::new("tree")
        .with_data(&args.data)
        .with_output(&args.output);
    config.cost = Some(args.cost);
    config.epsilon = Some(args.epsilon);
    config.reg_c = Some(args.reg_c);
    config.max_depth = Some(max_depth);
    config.min_leaf = Some(min_leaf);
    config.standardize = !args.no_standardize;
    config.seed = args.seed;
    match args.output.format {
        FormatArg::Text => write_output(&args.output.out, &rendered),
        _ => emit(
            &args.output.out,
            "margin-tree",
            &config,
            TreeResult {
                tree,
                rendered,
                in_margin: margin.kept.len(),
                load: load_report,
            },
        ),
    }
}
