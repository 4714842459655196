//! Schema catalog for the FSQL `CREATE TABLE` subset with GEFRED fuzzy
//! attribute types, plus the expert-provided label/similarity definitions.

mod labels;
mod parser;

pub use labels::{load_label_definitions, serialize_label_definitions, LabelError};
pub use parser::{parse_fsql_schema, ParseError};

use std::fmt;

use crate::fuzzy::{SimilarityRelation, TrapezoidLabel};

/// GEFRED classification of an attribute.
///
/// `Type1` columns store crisp data but may carry labels for flexible
/// querying; `Type2` columns additionally store imprecise values over an
/// ordered domain; `Type3`/`Type4` columns range over discrete non-ordered
/// label domains, with and without a similarity relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FuzzyClass {
    Crisp,
    Type1 { margin: f64, threshold: f64 },
    Type2 { margin: f64, threshold: f64 },
    Type3 { n_labels: u32 },
    Type4 { n_labels: u32 },
}

impl FuzzyClass {
    pub fn is_crisp(&self) -> bool {
        matches!(self, FuzzyClass::Crisp)
    }

    /// Margin for `~x` approximate values, where the class defines one.
    pub fn margin(&self) -> Option<f64> {
        match self {
            FuzzyClass::Type1 { margin, .. } | FuzzyClass::Type2 { margin, .. } => Some(*margin),
            _ => None,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            FuzzyClass::Type1 { threshold, .. } | FuzzyClass::Type2 { threshold, .. } => {
                Some(*threshold)
            }
            _ => None,
        }
    }

    /// Whether labels of this class receive numeric codes in the
    /// intermediate matrix. Type1 and crisp columns are passed through
    /// unchanged.
    pub fn takes_codes(&self) -> bool {
        matches!(
            self,
            FuzzyClass::Type2 { .. } | FuzzyClass::Type3 { .. } | FuzzyClass::Type4 { .. }
        )
    }
}

impl fmt::Display for FuzzyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuzzyClass::Crisp => write!(f, "CRISP"),
            FuzzyClass::Type1 { margin, threshold } => write!(f, "FTYPE1({margin},{threshold})"),
            FuzzyClass::Type2 { margin, threshold } => write!(f, "FTYPE2({margin},{threshold})"),
            FuzzyClass::Type3 { n_labels } => write!(f, "FTYPE3({n_labels})"),
            FuzzyClass::Type4 { n_labels } => write!(f, "FTYPE4({n_labels})"),
        }
    }
}

/// Special markers a column may default to and a cell may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialValue {
    Unknown,
    Undefined,
    Null,
}

impl SpecialValue {
    pub fn keyword(&self) -> &'static str {
        match self {
            SpecialValue::Unknown => "UNKNOWN",
            SpecialValue::Undefined => "UNDEFINED",
            SpecialValue::Null => "NULL",
        }
    }
}

/// Textual base declaration such as `NUMBER(3)` or `VARCHAR(20)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseType {
    pub name: String,
    pub params: Vec<u64>,
}

impl fmt::Display for BaseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.params.is_empty() {
            let params: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", params.join(","))?;
        }
        Ok(())
    }
}

/// Expert-provided label definitions attached to an attribute after the
/// sidecar document is loaded.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LabelDefinitions {
    /// Nothing loaded yet, or a crisp attribute.
    #[default]
    None,
    /// Ordered trapezoid labels over a numeric domain (FTYPE1/FTYPE2).
    Trapezoids(Vec<TrapezoidLabel>),
    /// Ordered scalar labels over a discrete domain (FTYPE3/FTYPE4),
    /// with a similarity relation for FTYPE3.
    Scalars {
        labels: Vec<String>,
        similarity: Option<SimilarityRelation>,
    },
}

impl LabelDefinitions {
    /// Label names in declaration (semantic ascending) order.
    pub fn names(&self) -> Vec<&str> {
        match self {
            LabelDefinitions::None => Vec::new(),
            LabelDefinitions::Trapezoids(ts) => ts.iter().map(|t| t.name.as_str()).collect(),
            LabelDefinitions::Scalars { labels, .. } => {
                labels.iter().map(|l| l.as_str()).collect()
            }
        }
    }

    pub fn count(&self) -> usize {
        match self {
            LabelDefinitions::None => 0,
            LabelDefinitions::Trapezoids(ts) => ts.len(),
            LabelDefinitions::Scalars { labels, .. } => labels.len(),
        }
    }

    pub fn similarity(&self) -> Option<&SimilarityRelation> {
        match self {
            LabelDefinitions::Scalars { similarity, .. } => similarity.as_ref(),
            _ => None,
        }
    }
}

/// One column of the parsed schema.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDef {
    pub name: String,
    /// 1-based column index in declaration order.
    pub position: usize,
    pub class: FuzzyClass,
    pub base_type: Option<BaseType>,
    pub nullable: bool,
    pub default_special: Option<SpecialValue>,
    pub labels: LabelDefinitions,
}

/// Parsed table schema: attributes in declaration order plus the primary key.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaCatalog {
    pub table_name: String,
    pub attributes: Vec<AttributeDef>,
    pub primary_key: Vec<String>,
}

/// A validation finding: which attribute (if any) broke which rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub attribute: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.attribute {
            Some(attr) => write!(f, "{attr}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl SchemaCatalog {
    /// Case-insensitive attribute lookup.
    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes
            .iter()
            .find(|a| a.name.eq_ignore_ascii_case(name))
    }

    pub fn attribute_mut(&mut self, name: &str) -> Option<&mut AttributeDef> {
        self.attributes
            .iter_mut()
            .find(|a| a.name.eq_ignore_ascii_case(name))
    }

    /// Fuzzy attributes (any FTYPE class), in declaration order.
    pub fn fuzzy_attributes(&self) -> impl Iterator<Item = &AttributeDef> {
        self.attributes.iter().filter(|a| !a.class.is_crisp())
    }

    /// Checks every type/label/similarity invariant; empty means valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let diag = |attr: &AttributeDef, message: String| Diagnostic {
            attribute: Some(attr.name.clone()),
            message,
        };

        for (i, attr) in self.attributes.iter().enumerate() {
            if attr.position != i + 1 {
                out.push(diag(
                    attr,
                    format!("position {} not contiguous (expected {})", attr.position, i + 1),
                ));
            }
            match attr.class {
                FuzzyClass::Type1 { margin, threshold } | FuzzyClass::Type2 { margin, threshold } => {
                    if margin < 0.0 {
                        out.push(diag(attr, format!("margin must be non-negative, got {margin}")));
                    }
                    if threshold <= 0.0 {
                        out.push(diag(
                            attr,
                            format!("threshold must be positive, got {threshold}"),
                        ));
                    }
                    if matches!(attr.labels, LabelDefinitions::Scalars { .. }) {
                        out.push(diag(attr, "expected trapezoid labels, found scalar labels".into()));
                    }
                }
                FuzzyClass::Type3 { n_labels } | FuzzyClass::Type4 { n_labels } => {
                    if n_labels < 1 {
                        out.push(diag(attr, "label capacity must be at least 1".into()));
                    }
                    if matches!(attr.labels, LabelDefinitions::Trapezoids(_)) {
                        out.push(diag(attr, "expected scalar labels, found trapezoid labels".into()));
                    }
                }
                FuzzyClass::Crisp => {
                    if !matches!(attr.labels, LabelDefinitions::None) {
                        out.push(diag(attr, "crisp attribute cannot carry label definitions".into()));
                    }
                }
            }
            if matches!(attr.class, FuzzyClass::Type3 { .. }) {
                match attr.labels.similarity() {
                    None if attr.labels.count() > 0 => {
                        out.push(diag(attr, "missing similarity relation".into()));
                    }
                    Some(rel) => {
                        if rel.labels.len() != attr.labels.count() {
                            out.push(diag(
                                attr,
                                format!(
                                    "similarity dimension {} does not match label count {}",
                                    rel.labels.len(),
                                    attr.labels.count()
                                ),
                            ));
                        }
                        for problem in rel.check() {
                            out.push(diag(attr, problem));
                        }
                    }
                    None => {}
                }
            }
            if matches!(attr.class, FuzzyClass::Type4 { .. }) && attr.labels.similarity().is_some()
            {
                out.push(diag(
                    attr,
                    "FTYPE4 attribute must not carry a similarity relation".into(),
                ));
            }
            let names = attr.labels.names();
            for (j, name) in names.iter().enumerate() {
                if names[..j].iter().any(|n| n.eq_ignore_ascii_case(name)) {
                    out.push(diag(attr, format!("duplicate label name {name}")));
                }
            }
        }

        for pk in &self.primary_key {
            match self.attribute(pk) {
                None => out.push(Diagnostic {
                    attribute: None,
                    message: format!("primary key references unknown column {pk}"),
                }),
                Some(attr) if attr.nullable => out.push(Diagnostic {
                    attribute: Some(attr.name.clone()),
                    message: "primary-key attribute must be NOT NULL".into(),
                }),
                Some(_) => {}
            }
        }
        out
    }

    /// Deterministic canonical rendering of the schema, reparsable by
    /// [`parse_fsql_schema`]. Label definitions are rendered separately by
    /// [`serialize_label_definitions`].
    pub fn to_fsql(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("CREATE TABLE {} (\n", self.table_name));
        for attr in &self.attributes {
            out.push_str(&format!("  {}", attr.name));
            if !attr.class.is_crisp() {
                out.push_str(&format!(" {}", attr.class));
            }
            if let Some(base) = &attr.base_type {
                out.push_str(&format!(" {base}"));
            }
            if let Some(special) = attr.default_special {
                out.push_str(&format!(" DEFAULT {}", special.keyword()));
            }
            if !attr.nullable {
                out.push_str(" NOT NULL");
            }
            out.push_str(",\n");
        }
        out.push_str(&format!("  PRIMARY KEY ({})\n);\n", self.primary_key.join(", ")));
        out
    }
}
