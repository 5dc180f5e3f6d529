//! Command line for the descriptor/inference pipeline:
//! `featurize` (SDF + values -> dictionary + feature CSV),
//! `train` (features -> Lasso hyperplane with cross-validated R²),
//! `infer` (specification + model -> LP file + variable map),
//! `decode-verify` (solver solution -> SDF + verification report).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use moldesc::chemgraph::Element;
use moldesc::features::{self, FeaturizeParams};
use moldesc::milp::{self, ObjectiveSense};
use moldesc::regress::{self, ModelFile};
use moldesc::Error;

#[derive(Parser)]
#[command(
    name = "moldesc",
    version,
    about = "Chemical-graph descriptors, property models, and inverse-design MILP generation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Featurize an SDF dataset: build the descriptor dictionary and the
    /// feature matrix.
    Featurize(FeaturizeArgs),
    /// Train a Lasso hyperplane with 10x5-fold cross validation.
    Train(TrainArgs),
    /// Build the inference MILP and write it as an LP file.
    Infer(InferArgs),
    /// Decode a solver solution into an SDF and verify it independently.
    DecodeVerify(DecodeVerifyArgs),
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Input SDF (V2000, kekulized).
    #[arg(long)]
    sdf: PathBuf,
    /// Property values CSV (header: id,<property>).
    #[arg(long)]
    values: PathBuf,
    /// Output dictionary JSON.
    #[arg(long)]
    dict: PathBuf,
    /// Output feature CSV.
    #[arg(long)]
    features: PathBuf,
    /// Output skip-report CSV (default: <features>.skips.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Branch parameter.
    #[arg(long, default_value_t = 2)]
    rho: u32,
    /// Minimum chordless-cycle length for CC descriptors.
    #[arg(long, default_value_t = 4)]
    cmin: usize,
    /// Maximum chordless-cycle length for CC descriptors.
    #[arg(long, default_value_t = 6)]
    cmax: usize,
    /// Collect cycle-configuration descriptors.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    cc: Toggle,
    /// Comma-separated element set (e.g. C,O,N,S2,S6); default: all supported.
    #[arg(long)]
    elements: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct TrainArgs {
    /// Feature CSV from `featurize`.
    #[arg(long)]
    features: PathBuf,
    /// Property values CSV (header: id,<property>).
    #[arg(long)]
    values: PathBuf,
    /// Output model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Output CV report JSON (default: <model>.cv.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed regularization strength.
    #[arg(long, conflicts_with = "lambda_grid")]
    lambda: Option<f64>,
    /// Comma-separated grid; the best mean CV R² wins. Default: 13 log-spaced
    /// points in [1e-4, 1e1].
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Seed for fold shuffling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InferArgs {
    /// Specification JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Seed tree JSON (overrides the one embedded in the specification).
    #[arg(long)]
    seed_tree: Option<PathBuf>,
    /// Trained model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Descriptor dictionary JSON the model was trained with.
    #[arg(long)]
    dict: PathBuf,
    /// Output LP file.
    #[arg(long)]
    lp: PathBuf,
    /// Output variable map JSON.
    #[arg(long)]
    varmap: PathBuf,
    /// Target lower bound (overrides the specification).
    #[arg(long)]
    ylb: Option<f64>,
    /// Target upper bound (overrides the specification).
    #[arg(long)]
    yub: Option<f64>,
    /// Objective: feasibility, or maximize/minimize the predicted property.
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Feas)]
    objective: ObjectiveArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Feas,
    Max,
    Min,
}

impl From<ObjectiveArg> for ObjectiveSense {
    fn from(o: ObjectiveArg) -> ObjectiveSense {
        match o {
            ObjectiveArg::Feas => ObjectiveSense::Feasibility,
            ObjectiveArg::Max => ObjectiveSense::Maximize,
            ObjectiveArg::Min => ObjectiveSense::Minimize,
        }
    }
}

#[derive(Args)]
struct DecodeVerifyArgs {
    /// Solver solution (plain `name value` lines).
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    seed_tree: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    /// Output SDF for the decoded molecule.
    #[arg(long)]
    out: PathBuf,
    /// Output verification report JSON (default: <out>.report.json).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    ylb: Option<f64>,
    #[arg(long)]
    yub: Option<f64>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Feas)]
    objective: ObjectiveArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Featurize(args) => cmd_featurize(args),
        Command::Train(args) => cmd_train(args),
        Command::Infer(args) => cmd_infer(args),
        Command::DecodeVerify(args) => cmd_decode_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_elements(spec: &Option<String>) -> Result<Vec<Element>, Error> {
    match spec {
        None => Ok(Element::all().collect()),
        Some(s) => s
            .split(',')
            .map(|tok| Element::parse_token(tok.trim()))
            .collect(),
    }
}

fn cmd_featurize(args: FeaturizeArgs) -> Result<ExitCode, Error> {
    let dataset = features::read_dataset(&args.sdf, &args.values)?;
    let params = FeaturizeParams {
        rho: args.rho,
        c_min: args.cmin,
        c_max: args.cmax,
        lambda: parse_elements(&args.elements)?,
        with_cc: args.cc == Toggle::On,
    };
    let (profiles, skips) = features::profile_dataset(&dataset, &params);
    let dict = features::build_dictionary(&profiles, &params)?;
    let matrix = features::featurize_all(&profiles, &dict)?;
    features::write_dictionary_json(&dict, &args.dict)?;
    features::write_feature_csv(&matrix, &args.features)?;
    let skip_path = args
        .out
        .unwrap_or_else(|| with_suffix(&args.features, ".skips.csv"));
    features::write_skip_report(&skips, &skip_path)?;
    println!(
        "featurized {} molecules ({} skipped): K_2L = {}, K_CC = {}",
        matrix.n_rows(),
        skips.len(),
        dict.k_2l(),
        dict.k_cc()
    );
    Ok(ExitCode::SUCCESS)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode, Error> {
    let matrix = features::read_feature_csv(&args.features)?;
    let (property, values) = features::read_values_csv(&args.values)?;
    let mut y = Vec::with_capacity(matrix.n_rows());
    for id in &matrix.ids {
        let v = values
            .get(id)
            .copied()
            .ok_or_else(|| Error::Dataset(format!("missing property value for {id:?}")))?;
        y.push(v);
    }
    let lambda = match (args.lambda, &args.lambda_grid) {
        (Some(l), _) => l,
        (None, grid) => {
            let grid: Vec<f64> = match grid {
                Some(s) => s
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| Error::Regress(format!("bad lambda grid entry {t:?}")))
                    })
                    .collect::<Result<_, Error>>()?,
                None => regress::default_lambda_grid(),
            };
            let (best, _) =
                regress::select_lambda(&matrix.rows, &y, &matrix.header, &grid, args.seed)?;
            best
        }
    };
    let report = regress::cross_validate(&matrix.rows, &y, &matrix.header, lambda, args.seed)?;
    let hyperplane = regress::lasso_fit(
        &matrix.rows,
        &y,
        &matrix.header,
        lambda,
        regress::DEFAULT_TOL,
        regress::DEFAULT_MAX_ITER,
    )?;
    if !hyperplane.converged {
        eprintln!("warning: coordinate descent did not converge within the iteration budget");
    }
    let model = ModelFile {
        format: regress::MODEL_FORMAT.to_string(),
        property,
        seed: args.seed,
        cv_median_r2: Some(report.median_r2),
        hyperplane,
    };
    regress::write_model_json(&model, &args.model)?;
    let report_path = args
        .out
        .unwrap_or_else(|| with_suffix(&args.model, ".cv.json"));
    let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    text.push('\n');
    std::fs::write(&report_path, text)?;
    println!("lambda {lambda}: median CV R^2 = {:.6}", report.median_r2);
    Ok(ExitCode::SUCCESS)
}

fn load_spec_model_dict(
    spec_path: &Path,
    seed_tree: &Option<PathBuf>,
    model_path: &Path,
    dict_path: &Path,
    ylb: Option<f64>,
    yub: Option<f64>,
) -> Result<
    (
        milp::Specification,
        ModelFile,
        features::DescriptorDictionary,
    ),
    Error,
> {
    let tree = match seed_tree {
        Some(p) => Some(milp::read_seed_tree_json(p)?),
        None => None,
    };
    let spec = milp::read_spec_json(spec_path, tree, ylb, yub)?;
    let model = regress::read_model_json(model_path)?;
    let dict = features::read_dictionary_json(dict_path)?;
    Ok((spec, model, dict))
}

fn cmd_infer(args: InferArgs) -> Result<ExitCode, Error> {
    let (spec, model, dict) = load_spec_model_dict(
        &args.spec,
        &args.seed_tree,
        &args.model,
        &args.dict,
        args.ylb,
        args.yub,
    )?;
    let milp_model = milp::build_milp(&spec, &model.hyperplane, &dict, args.objective.into())?;
    milp::write_lp(&milp_model, &args.lp, &args.varmap)?;
    println!(
        "variables: {}  constraints: {}",
        milp_model.n_variables(),
        milp_model.n_constraints()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_decode_verify(args: DecodeVerifyArgs) -> Result<ExitCode, Error> {
    let (spec, model, dict) = load_spec_model_dict(
        &args.spec,
        &args.seed_tree,
        &args.model,
        &args.dict,
        args.ylb,
        args.yub,
    )?;
    let milp_model = milp::build_milp(&spec, &model.hyperplane, &dict, args.objective.into())?;
    let text = std::fs::read_to_string(&args.solution)?;
    let sol = milp::read_solution(&text)?;
    let decoded = milp::decode_solution(&sol, &milp_model, &spec)?;
    std::fs::write(
        &args.out,
        moldesc::chemgraph::write_sdf_record(&decoded.graph),
    )?;
    let report = milp::verify_solution(&decoded, &spec, &model.hyperplane, &dict)?;
    let report_path = args
        .report
        .unwrap_or_else(|| with_suffix(&args.out, ".report.json"));
    let mut text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    text.push('\n');
    std::fs::write(&report_path, text)?;
    for check in &report.checks {
        println!(
            "{} {}: {}",
            if check.passed { "pass" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if report.all_passed {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("verification failed");
        Ok(ExitCode::from(2))
    }
}
