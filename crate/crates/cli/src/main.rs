//! `fuzzysum`: summarize fuzzy relational data from the command line.
//!
//! Each pipeline stage is exposed as its own subcommand so intermediate
//! artifacts stay inspectable: `validate` the schema and labels, `encode`
//! the correspondence matrix, `cluster` the memberships, `summarize` the
//! full hierarchy, `query` one level, `export` JSON or DOT.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fuzzysum_core::catalog::{load_label_definitions, parse_fsql_schema};
use fuzzysum_core::cluster::{alpha_cut, fcm, per_attribute_partitions, FcmConfig, FcmOverride};
use fuzzysum_core::encode::{assign_codes, build_intermediate_matrix, normalize_matrix};
use fuzzysum_core::lattice::export::{
    hierarchy_from_json, hierarchy_to_dot, hierarchy_to_json, nested_to_dot,
};
use fuzzysum_core::lattice::{disambiguate_partitions, nested_diagram};
use fuzzysum_core::pipeline::{
    load_catalog, load_table, render_level, run_pipeline, PipelineConfig, PipelineError,
    StageClass,
};

const EXIT_USAGE: u8 = 2;
const EXIT_PARSE: u8 = 10;
const EXIT_CATALOG: u8 = 11;
const EXIT_DATA: u8 = 12;
const EXIT_CLUSTER: u8 = 13;
const EXIT_LATTICE: u8 = 14;
const EXIT_IO: u8 = 15;

fn stage_exit(stage: StageClass) -> u8 {
    match stage {
        StageClass::Parse => EXIT_PARSE,
        StageClass::Catalog => EXIT_CATALOG,
        StageClass::Data => EXIT_DATA,
        StageClass::Cluster => EXIT_CLUSTER,
        StageClass::Lattice => EXIT_LATTICE,
        StageClass::Io => EXIT_IO,
    }
}

struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: EXIT_USAGE }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        Self {
            message: format!("{}: {source}", path.display()),
            code: EXIT_IO,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(err: PipelineError) -> Self {
        let code = match &err {
            PipelineError::Config(_) => EXIT_USAGE,
            other => stage_exit(other.stage()),
        };
        Self { message: err.to_string(), code }
    }
}

#[derive(Parser)]
#[command(
    name = "fuzzysum",
    version,
    about = "Summarize fuzzy relational data into a hierarchy of concept summaries"
)]
struct Cli {
    /// Config file with defaults; FUZZYSUM_CONFIG names one too
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Args, Default, Clone)]
struct InputArgs {
    /// FSQL schema file (one CREATE TABLE statement)
    #[arg(long, value_name = "FILE")]
    schema: Option<PathBuf>,
    /// Label sidecar file
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
    /// Data CSV whose header names the catalog attributes
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Attributes to summarize, comma separated
    #[arg(long, value_delimiter = ',', value_name = "A,B,...")]
    attrs: Vec<String>,
    /// Membership cut in [0,1]
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed for the deterministic clustering initialization
    #[arg(long)]
    seed: Option<u64>,
    /// Fuzzy c-means fuzzifier (> 1)
    #[arg(long)]
    fuzzifier: Option<f64>,
    /// Convergence tolerance on membership change
    #[arg(long)]
    tolerance: Option<f64>,
    /// Iteration cap per clustering run
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Per-attribute cluster count, e.g. --clusters AGE=2 (repeatable)
    #[arg(long = "clusters", value_name = "ATTR=K")]
    clusters: Vec<String>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output file (stdout when absent)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Cluster all selected attributes jointly into K clusters instead of
    /// per attribute
    #[arg(long, value_name = "K")]
    joint: Option<usize>,
    /// Output file (stdout when absent)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output file (stdout when absent)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Abstraction level to list
    #[arg(long)]
    level: usize,
    /// Previously exported hierarchy JSON; the pipeline runs when absent
    #[arg(long = "in", value_name = "FILE")]
    input_json: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Previously exported hierarchy JSON; the pipeline runs when absent
    #[arg(long = "in", value_name = "FILE")]
    input_json: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Nested line diagram `OUTER,INNER` (DOT only, needs the full pipeline)
    #[arg(long, value_delimiter = ',', value_name = "OUTER,INNER")]
    nested: Vec<String>,
    /// Output file (stdout when absent)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the schema and label definitions, printing diagnostics
    Validate(ValidateArgs),
    /// Emit the intermediate code matrix as CSV
    Encode(EncodeArgs),
    /// Emit purified cluster memberships as CSV
    Cluster(ClusterArgs),
    /// Run the full pipeline and emit the summary hierarchy
    Summarize(SummarizeArgs),
    /// List the concept summaries at one hierarchy level
    Query(QueryArgs),
    /// Convert a hierarchy to JSON or DOT, optionally as a nested diagram
    Export(ExportArgs),
}

/// Inputs after merging defaults, the config file, and command-line flags
/// (the command line wins).
struct Settings {
    pipeline: PipelineConfig,
    out: Option<PathBuf>,
    format: Format,
}

fn parse_cluster_flags(flags: &[String]) -> Result<BTreeMap<String, FcmOverride>, Failure> {
    let mut out: BTreeMap<String, FcmOverride> = BTreeMap::new();
    for flag in flags {
        let (attr, count) = flag
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--clusters expects ATTR=K, got {flag}")))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("invalid cluster count in {flag}")))?;
        out.entry(attr.trim().to_ascii_uppercase())
            .or_default()
            .n_clusters = Some(count);
    }
    Ok(out)
}

fn resolve(cli_config: &Option<PathBuf>, input: &InputArgs, out: &Option<PathBuf>, format: Option<Format>) -> Result<Settings, Failure> {
    let config_path = cli_config.clone().or_else(|| {
        std::env::var_os("FUZZYSUM_CONFIG").map(PathBuf::from)
    });
    let file = match &config_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            config::parse_config(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => config::FileConfig::default(),
    };

    let schema = input
        .schema
        .clone()
        .or(file.schema)
        .ok_or_else(|| Failure::usage("--schema is required (flag or config)"))?;
    let labels = input
        .labels
        .clone()
        .or(file.labels)
        .ok_or_else(|| Failure::usage("--labels is required (flag or config)"))?;
    let data = input
        .data
        .clone()
        .or(file.data)
        .unwrap_or_default();
    let attrs = if input.attrs.is_empty() {
        file.attrs.unwrap_or_default()
    } else {
        input.attrs.clone()
    };
    let attrs: Vec<String> = attrs.iter().map(|a| a.to_ascii_uppercase()).collect();

    let mut pipeline = PipelineConfig::new(schema, labels, data, attrs);
    if let Some(alpha) = input.alpha.or(file.alpha) {
        pipeline.alpha = alpha;
    }
    if let Some(seed) = input.seed.or(file.seed) {
        pipeline.seed = seed;
    }
    if let Some(fuzzifier) = input.fuzzifier.or(file.fuzzifier) {
        pipeline.fuzzifier = fuzzifier;
    }
    if let Some(tolerance) = input.tolerance.or(file.tolerance) {
        pipeline.tolerance = tolerance;
    }
    if let Some(max_iterations) = input.max_iterations.or(file.max_iterations) {
        pipeline.max_iterations = max_iterations;
    }
    pipeline.overrides = file.overrides;
    for (attr, ovr) in parse_cluster_flags(&input.clusters)? {
        let entry = pipeline.overrides.entry(attr).or_default();
        if ovr.n_clusters.is_some() {
            entry.n_clusters = ovr.n_clusters;
        }
    }

    let format = match format {
        Some(f) => f,
        None => match file.format.as_deref() {
            Some("json") | None => Format::Json,
            Some("dot") => Format::Dot,
            Some(other) => {
                return Err(Failure::usage(format!(
                    "config format must be json or dot, got {other}"
                )))
            }
        },
    };

    Ok(Settings {
        pipeline,
        out: out.clone().or(file.out),
        format,
    })
}

/// Writes through a temp file and an atomic rename; stdout when no path is
/// given.
fn emit(out: &Option<PathBuf>, contents: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{contents}");
            Ok(())
        }
        Some(path) => {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".tmp");
            let tmp = PathBuf::from(tmp);
            fs::write(&tmp, contents).map_err(|e| Failure::io(&tmp, e))?;
            fs::rename(&tmp, path).map_err(|e| Failure::io(path, e))
        }
    }
}

fn require_data(settings: &Settings) -> Result<(), Failure> {
    if settings.pipeline.data_path.as_os_str().is_empty() {
        return Err(Failure::usage("--data is required (flag or config)"));
    }
    Ok(())
}

fn cmd_validate(cli: &Cli, args: &ValidateArgs) -> Result<(), Failure> {
    let settings = resolve(&cli.config, &args.input, &None, None)?;
    let schema_text = fs::read_to_string(&settings.pipeline.schema_path)
        .map_err(|e| Failure::io(&settings.pipeline.schema_path, e))?;
    let catalog = parse_fsql_schema(&schema_text).map_err(|e| Failure {
        message: format!("schema parse failed: {e}"),
        code: EXIT_PARSE,
    })?;
    let labels_text = fs::read_to_string(&settings.pipeline.labels_path)
        .map_err(|e| Failure::io(&settings.pipeline.labels_path, e))?;
    let catalog = load_label_definitions(catalog, &labels_text).map_err(|e| Failure {
        message: format!("label definitions failed: {e}"),
        code: EXIT_CATALOG,
    })?;

    let diagnostics = catalog.validate();
    for d in &diagnostics {
        println!("diagnostic: {d}");
    }
    let codebook = assign_codes(&catalog).map_err(|e| Failure {
        message: e.to_string(),
        code: EXIT_CATALOG,
    })?;
    for w in &codebook.warnings {
        println!("warning: {w}");
    }
    if diagnostics.is_empty() {
        println!(
            "catalog OK: table {} with {} attributes, {} fuzzy",
            catalog.table_name,
            catalog.attributes.len(),
            catalog.fuzzy_attributes().count()
        );
        Ok(())
    } else {
        Err(Failure {
            message: format!("{} diagnostic(s)", diagnostics.len()),
            code: EXIT_CATALOG,
        })
    }
}

fn cmd_encode(cli: &Cli, args: &EncodeArgs) -> Result<(), Failure> {
    let settings = resolve(&cli.config, &args.input, &args.out, None)?;
    require_data(&settings)?;
    let catalog = load_catalog(&settings.pipeline)?;
    let table = load_table(&settings.pipeline, &catalog)?;
    let codebook = assign_codes(&catalog).map_err(|e| Failure {
        message: e.to_string(),
        code: EXIT_CATALOG,
    })?;
    let matrix = build_intermediate_matrix(
        &table,
        &catalog,
        &codebook,
        &settings.pipeline.selected_attributes,
    )
    .map_err(|e| Failure {
        message: e.to_string(),
        code: EXIT_DATA,
    })?;
    for row in &matrix.excluded_rows {
        eprintln!("excluded {} ({})", row.id, row.reason);
    }
    emit(&settings.out, &matrix.to_csv())
}

fn cmd_cluster(cli: &Cli, args: &ClusterArgs) -> Result<(), Failure> {
    let settings = resolve(&cli.config, &args.input, &args.out, None)?;
    require_data(&settings)?;
    let catalog = load_catalog(&settings.pipeline)?;
    let table = load_table(&settings.pipeline, &catalog)?;

    let csv = match args.joint {
        Some(n_clusters) => {
            let codebook = assign_codes(&catalog).map_err(|e| Failure {
                message: e.to_string(),
                code: EXIT_CATALOG,
            })?;
            let matrix = build_intermediate_matrix(
                &table,
                &catalog,
                &codebook,
                &settings.pipeline.selected_attributes,
            )
            .map_err(|e| Failure {
                message: e.to_string(),
                code: EXIT_DATA,
            })?;
            for row in &matrix.excluded_rows {
                eprintln!("excluded {} ({})", row.id, row.reason);
            }
            let normalized = normalize_matrix(&matrix).map_err(|e| Failure {
                message: e.to_string(),
                code: EXIT_CLUSTER,
            })?;
            let cfg = FcmConfig {
                n_clusters,
                fuzzifier: settings.pipeline.fuzzifier,
                tolerance: settings.pipeline.tolerance,
                max_iterations: settings.pipeline.max_iterations,
                seed: settings.pipeline.seed,
            };
            let result = fcm(&normalized.rows, &normalized.row_ids, &cfg).map_err(|e| Failure {
                message: e.to_string(),
                code: EXIT_CLUSTER,
            })?;
            let purified =
                alpha_cut(&result.memberships, settings.pipeline.alpha).map_err(|e| Failure {
                    message: e.to_string(),
                    code: EXIT_CLUSTER,
                })?;
            eprintln!("joint fcm converged in {} iterations", result.iterations);
            let descriptors: Vec<String> =
                (1..=n_clusters).map(|k| format!("cluster-{k}")).collect();
            purified.to_csv(&descriptors)
        }
        None => {
            let opts = fuzzysum_core::cluster::PartitionOptions {
                alpha: settings.pipeline.alpha,
                seed: settings.pipeline.seed,
                fuzzifier: settings.pipeline.fuzzifier,
                tolerance: settings.pipeline.tolerance,
                max_iterations: settings.pipeline.max_iterations,
                overrides: settings.pipeline.overrides.clone(),
            };
            let (mut partitions, excluded) = per_attribute_partitions(
                &table,
                &catalog,
                &settings.pipeline.selected_attributes,
                &opts,
            )
            .map_err(|e| Failure {
                message: e.to_string(),
                code: EXIT_CLUSTER,
            })?;
            for row in &excluded {
                eprintln!("excluded {} ({})", row.id, row.reason);
            }
            disambiguate_partitions(&mut partitions);
            let mut out = String::from("id,descriptor,degree\n");
            for p in &partitions {
                eprintln!("{}: fcm converged in {} iterations", p.attribute, p.iterations);
                let descriptors: Vec<String> =
                    p.clusters.iter().map(|c| c.descriptor.clone()).collect();
                let body = p.memberships.to_csv(&descriptors);
                out.push_str(body.trim_start_matches("id,descriptor,degree\n"));
            }
            out
        }
    };
    emit(&settings.out, &csv)
}

fn cmd_summarize(cli: &Cli, args: &SummarizeArgs) -> Result<(), Failure> {
    let settings = resolve(&cli.config, &args.input, &args.out, args.format)?;
    require_data(&settings)?;
    let output = run_pipeline(&settings.pipeline)?;
    eprint!("{}", output.report.render());
    let rendered = match settings.format {
        Format::Json => hierarchy_to_json(&output.hierarchy),
        Format::Dot => hierarchy_to_dot(&output.hierarchy),
    };
    emit(&settings.out, &rendered)
}

fn load_hierarchy(
    cli: &Cli,
    input: &InputArgs,
    input_json: &Option<PathBuf>,
) -> Result<fuzzysum_core::SummaryHierarchy, Failure> {
    match input_json {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            hierarchy_from_json(&text).map_err(|e| Failure {
                message: format!("{}: {e}", path.display()),
                code: EXIT_LATTICE,
            })
        }
        None => {
            let settings = resolve(&cli.config, input, &None, None)?;
            require_data(&settings)?;
            Ok(run_pipeline(&settings.pipeline)?.hierarchy)
        }
    }
}

fn cmd_query(cli: &Cli, args: &QueryArgs) -> Result<(), Failure> {
    let hierarchy = load_hierarchy(cli, &args.input, &args.input_json)?;
    let text = render_level(&hierarchy, args.level).map_err(|e| Failure {
        message: e.to_string(),
        code: EXIT_LATTICE,
    })?;
    print!("{text}");
    Ok(())
}

fn cmd_export(cli: &Cli, args: &ExportArgs) -> Result<(), Failure> {
    if !args.nested.is_empty() {
        if args.nested.len() != 2 {
            return Err(Failure::usage("--nested expects OUTER,INNER"));
        }
        if args.input_json.is_some() {
            return Err(Failure::usage(
                "--nested rebuilds the context, so it needs pipeline inputs, not --in",
            ));
        }
        let settings = resolve(&cli.config, &args.input, &args.out, args.format)?;
        require_data(&settings)?;
        if settings.format != Format::Dot {
            return Err(Failure::usage("--nested is a DOT export; pass --format dot"));
        }
        let output = run_pipeline(&settings.pipeline)?;
        let nested = nested_diagram(
            &output.context,
            &args.nested[0].to_ascii_uppercase(),
            &args.nested[1].to_ascii_uppercase(),
            &settings.pipeline.limits,
        )
        .map_err(|e| Failure {
            message: e.to_string(),
            code: EXIT_LATTICE,
        })?;
        return emit(&settings.out, &nested_to_dot(&nested));
    }

    match &args.input_json {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            let hierarchy = hierarchy_from_json(&text).map_err(|e| Failure {
                message: format!("{}: {e}", path.display()),
                code: EXIT_LATTICE,
            })?;
            let rendered = match args.format.unwrap_or(Format::Json) {
                Format::Json => hierarchy_to_json(&hierarchy),
                Format::Dot => hierarchy_to_dot(&hierarchy),
            };
            emit(&args.out, &rendered)
        }
        None => {
            let settings = resolve(&cli.config, &args.input, &args.out, args.format)?;
            require_data(&settings)?;
            let output = run_pipeline(&settings.pipeline)?;
            let rendered = match settings.format {
                Format::Json => hierarchy_to_json(&output.hierarchy),
                Format::Dot => hierarchy_to_dot(&output.hierarchy),
            };
            emit(&settings.out, &rendered)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(args) => cmd_validate(&cli, args),
        Command::Encode(args) => cmd_encode(&cli, args),
        Command::Cluster(args) => cmd_cluster(&cli, args),
        Command::Summarize(args) => cmd_summarize(&cli, args),
        Command::Query(args) => cmd_query(&cli, args),
        Command::Export(args) => cmd_export(&cli, args),
    };
    match result {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
