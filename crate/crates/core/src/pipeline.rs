//! End-to-end pipeline: parse schema, load labels, ingest CSV, cluster each
//! attribute, appose the partitions into a fuzzy context, and build the
//! summary hierarchy.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::catalog::{
    load_label_definitions, parse_fsql_schema, LabelError, ParseError, SchemaCatalog,
};
use crate::cluster::{
    per_attribute_partitions, AttributePartition, ClusterError, FcmOverride, PartitionOptions,
};
use crate::dataset::{read_csv, DataError, Table};
use crate::encode::{assign_codes, ExcludedRow};
use crate::lattice::{
    build_fuzzy_context, disambiguate_partitions, EnumerationLimits, FuzzyContext, LatticeError,
    SummaryHierarchy,
};

/// Which stage of the pipeline failed; each class maps to its own process
/// exit code in the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageClass {
    Parse,
    Catalog,
    Data,
    Cluster,
    Lattice,
    Io,
}

impl StageClass {
    pub fn name(&self) -> &'static str {
        match self {
            StageClass::Parse => "parse",
            StageClass::Catalog => "catalog",
            StageClass::Data => "data",
            StageClass::Cluster => "cluster",
            StageClass::Lattice => "lattice",
            StageClass::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("schema parse failed: {0}")]
    Parse(#[from] ParseError),
    #[error("label definitions failed: {0}")]
    Labels(#[from] LabelError),
    #[error("catalog validation failed: {diagnostics}")]
    Invalid { diagnostics: String },
    #[error("data ingestion failed: {0}")]
    Data(#[from] DataError),
    #[error("clustering failed: {0}")]
    Cluster(#[from] ClusterError),
    #[error("lattice construction failed: {0}")]
    Lattice(#[from] LatticeError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("configuration error: {0}")]
    Config(String),
}

impl PipelineError {
    pub fn stage(&self) -> StageClass {
        match self {
            PipelineError::Parse(_) => StageClass::Parse,
            PipelineError::Labels(_) | PipelineError::Invalid { .. } => StageClass::Catalog,
            PipelineError::Data(_) => StageClass::Data,
            PipelineError::Cluster(_) => StageClass::Cluster,
            PipelineError::Lattice(_) => StageClass::Lattice,
            PipelineError::Io { .. } => StageClass::Io,
            PipelineError::Config(_) => StageClass::Io,
        }
    }
}

/// Everything one run needs: input paths, attribute selection, cut level,
/// clustering defaults, and per-attribute overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub schema_path: PathBuf,
    pub labels_path: PathBuf,
    pub data_path: PathBuf,
    pub selected_attributes: Vec<String>,
    pub alpha: f64,
    pub seed: u64,
    pub fuzzifier: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub overrides: BTreeMap<String, FcmOverride>,
    pub limits: EnumerationLimits,
}

impl PipelineConfig {
    pub fn new(
        schema_path: impl Into<PathBuf>,
        labels_path: impl Into<PathBuf>,
        data_path: impl Into<PathBuf>,
        selected_attributes: Vec<String>,
    ) -> Self {
        Self {
            schema_path: schema_path.into(),
            labels_path: labels_path.into(),
            data_path: data_path.into(),
            selected_attributes,
            alpha: 0.2,
            seed: 42,
            fuzzifier: 2.0,
            tolerance: 1e-6,
            max_iterations: 300,
            overrides: BTreeMap::new(),
            limits: EnumerationLimits::default(),
        }
    }

    fn partition_options(&self) -> PartitionOptions {
        PartitionOptions {
            alpha: self.alpha,
            seed: self.seed,
            fuzzifier: self.fuzzifier,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            overrides: self.overrides.clone(),
        }
    }
}

/// What happened during a run, for operators rather than for the exports.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub excluded_rows: Vec<ExcludedRow>,
    pub dropped_from_context: Vec<String>,
    /// FCM iterations per attribute.
    pub iterations: BTreeMap<String, usize>,
    /// Records that lost every membership to the cut, per attribute.
    pub unsupported_after_cut: BTreeMap<String, Vec<String>>,
    pub concept_count: usize,
    pub warnings: Vec<String>,
    pub wall_time: Duration,
}

impl RunReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("concepts: {}\n", self.concept_count));
        for (attr, iters) in &self.iterations {
            out.push_str(&format!("fcm iterations for {attr}: {iters}\n"));
        }
        if !self.excluded_rows.is_empty() {
            out.push_str(&format!("excluded rows ({}):\n", self.excluded_rows.len()));
            for row in &self.excluded_rows {
                out.push_str(&format!("  {} ({})\n", row.id, row.reason));
            }
        }
        if !self.dropped_from_context.is_empty() {
            out.push_str(&format!(
                "dropped from context: {}\n",
                self.dropped_from_context.join(", ")
            ));
        }
        for (attr, ids) in &self.unsupported_after_cut {
            out.push_str(&format!(
                "records cut from every {attr} cluster: {}\n",
                ids.join(", ")
            ));
        }
        for warning in &self.warnings {
            out.push_str(&format!("warning: {warning}\n"));
        }
        out.push_str(&format!("wall time: {:.3}s\n", self.wall_time.as_secs_f64()));
        out
    }
}

fn read_file(path: &PathBuf) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses the schema and loads the label sidecar, failing on any validation
/// diagnostic.
pub fn load_catalog(cfg: &PipelineConfig) -> Result<SchemaCatalog, PipelineError> {
    let schema_text = read_file(&cfg.schema_path)?;
    let catalog = parse_fsql_schema(&schema_text)?;
    let labels_text = read_file(&cfg.labels_path)?;
    let catalog = load_label_definitions(catalog, &labels_text)?;
    let diagnostics = catalog.validate();
    if !diagnostics.is_empty() {
        let rendered: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
        return Err(PipelineError::Invalid {
            diagnostics: rendered.join("; "),
        });
    }
    Ok(catalog)
}

/// Ingests the data CSV against a loaded catalog.
pub fn load_table(cfg: &PipelineConfig, catalog: &SchemaCatalog) -> Result<Table, PipelineError> {
    let file = fs::File::open(&cfg.data_path).map_err(|source| PipelineError::Io {
        path: cfg.data_path.display().to_string(),
        source,
    })?;
    Ok(read_csv(file, catalog)?)
}

/// A finished run: the hierarchy plus the context it came from and the
/// operator report.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub catalog: SchemaCatalog,
    pub partitions: Vec<AttributePartition>,
    pub context: FuzzyContext,
    pub hierarchy: SummaryHierarchy,
    pub report: RunReport,
}

/// Runs the whole pipeline: parse, load labels, ingest, cluster per
/// attribute, appose, enumerate, organize.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    if cfg.selected_attributes.is_empty() {
        return Err(PipelineError::Config(
            "select at least one attribute".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(PipelineError::Config(format!(
            "alpha must lie in [0,1], got {}",
            cfg.alpha
        )));
    }
    let start = Instant::now();
    let mut report = RunReport::default();

    let catalog = load_catalog(cfg)?;
    let codebook = assign_codes(&catalog).map_err(|e| {
        PipelineError::Cluster(ClusterError::Encode {
            attribute: "<catalog>".into(),
            source: e,
        })
    })?;
    report.warnings.extend(codebook.warnings.iter().cloned());

    let table = load_table(cfg, &catalog)?;

    let (mut partitions, excluded) = per_attribute_partitions(
        &table,
        &catalog,
        &cfg.selected_attributes,
        &cfg.partition_options(),
    )?;
    report.excluded_rows = excluded;
    for p in &partitions {
        report.iterations.insert(p.attribute.clone(), p.iterations);
        let unsupported: Vec<String> = p
            .memberships
            .unsupported_rows()
            .into_iter()
            .map(str::to_string)
            .collect();
        if !unsupported.is_empty() {
            report
                .unsupported_after_cut
                .insert(p.attribute.clone(), unsupported);
        }
    }

    disambiguate_partitions(&mut partitions);
    let (mut context, dropped) = build_fuzzy_context(&partitions)?;
    report.dropped_from_context = dropped;

    // descriptors no record supports carry no information; dropping them
    // keeps a full cut from exploding into an artificial lattice
    let supported: Vec<usize> = (0..context.n_descriptors())
        .filter(|&j| context.incidence.iter().any(|row| row[j] > 0.0))
        .collect();
    if supported.len() < context.n_descriptors() {
        for j in 0..context.n_descriptors() {
            if !supported.contains(&j) {
                report.warnings.push(format!(
                    "descriptor {} has no support after the alpha cut",
                    context.descriptors[j].name
                ));
            }
        }
        context = FuzzyContext::new(
            context.objects.clone(),
            supported
                .iter()
                .map(|&j| context.descriptors[j].clone())
                .collect(),
            context
                .incidence
                .iter()
                .map(|row| supported.iter().map(|&j| row[j]).collect())
                .collect(),
        )?;
        if supported.is_empty() {
            report
                .warnings
                .push("degenerate context: every membership fell below the cut".into());
        }
    }

    let hierarchy = SummaryHierarchy::build(&context, &cfg.limits)?;
    report.concept_count = hierarchy.nodes.len();
    report.wall_time = start.elapsed();

    Ok(PipelineOutput {
        catalog,
        partitions,
        context,
        hierarchy,
        report,
    })
}

/// Text rendering of the concepts at one level: intent, card, count, and the
/// top-representative records by degree.
pub fn render_level(hierarchy: &SummaryHierarchy, level: usize) -> Result<String, LatticeError> {
    let concepts = hierarchy.level_concepts(level)?;
    let mut out = format!("level {level}: {} concept(s)\n", concepts.len());
    for node in concepts {
        let mut extent = node.extent.clone();
        extent.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("degrees are finite").then(a.0.cmp(&b.0)));
        let top: Vec<String> = extent
            .iter()
            .take(3)
            .map(|(id, d)| format!("{id}({d:.2})"))
            .collect();
        out.push_str(&format!(
            "  {{{}}} card={:.2} count={} top=[{}]\n",
            node.intent.join(", "),
            node.card,
            node.count,
            top.join(", ")
        ));
    }
    Ok(out)
}
