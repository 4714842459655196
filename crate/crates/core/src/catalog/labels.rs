//! Loader for the label sidecar document that supplies, per fuzzy attribute,
//! either trapezoid label definitions or a scalar label list with an
//! optional similarity matrix.
//!
//! Format, one block per attribute, blank lines between blocks, `#` starts a
//! comment line:
//!
//! ```text
//! attribute AGE
//! label Young trapezoid 18 22 30 35
//! label Adult trapezoid 25 32 45 50
//!
//! attribute PRODUCTIVITY
//! labels Bad Regular Good
//! similarity
//! 1 0.3 0.2
//! 0.3 1 0.7
//! 0.2 0.7 1
//! ```

use thiserror::Error;

use super::{FuzzyClass, LabelDefinitions, SchemaCatalog};
use crate::fuzzy::{FuzzyError, SimilarityRelation, TrapezoidLabel};

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown attribute {attribute}")]
    UnknownAttribute { line: usize, attribute: String },
    #[error("line {line}: attribute {attribute} is crisp and takes no labels")]
    CrispAttribute { line: usize, attribute: String },
    #[error("line {line}: duplicate block for attribute {attribute}")]
    DuplicateBlock { line: usize, attribute: String },
    #[error("line {line}: attribute {attribute} ({class}) expects {expected} definitions")]
    WrongKind {
        line: usize,
        attribute: String,
        class: String,
        expected: &'static str,
    },
    #[error("line {line}: {source} (attribute {attribute})")]
    Fuzzy {
        line: usize,
        attribute: String,
        source: FuzzyError,
    },
    #[error(
        "line {line}: similarity matrix of attribute {attribute} is {dim}x{dim} but {labels} labels are declared"
    )]
    DimensionMismatch {
        line: usize,
        attribute: String,
        dim: usize,
        labels: usize,
    },
    #[error("line {line}: similarity given for FTYPE4 attribute {attribute}")]
    UnexpectedSimilarity { line: usize, attribute: String },
    #[error("missing label definitions for fuzzy attribute {attribute}")]
    MissingDefinitions { attribute: String },
    #[error("line {line}: duplicate label {label} for attribute {attribute}")]
    DuplicateLabel {
        line: usize,
        attribute: String,
        label: String,
    },
}

struct Block {
    attribute: String,
    line: usize,
    trapezoids: Vec<TrapezoidLabel>,
    scalar_labels: Vec<String>,
    similarity_rows: Option<Vec<f64>>,
    similarity_line: usize,
}

fn parse_blocks(text: &str) -> Result<Vec<Block>, LabelError> {
    let mut blocks: Vec<Block> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = line.split_whitespace();
        let head = words.next().expect("non-empty line has a first word");
        match head {
            "attribute" => {
                let name = words.next().ok_or_else(|| LabelError::Syntax {
                    line: line_no,
                    message: "attribute line needs a name".into(),
                })?;
                blocks.push(Block {
                    attribute: name.to_ascii_uppercase(),
                    line: line_no,
                    trapezoids: Vec::new(),
                    scalar_labels: Vec::new(),
                    similarity_rows: None,
                    similarity_line: 0,
                });
            }
            "label" => {
                let block = blocks.last_mut().ok_or_else(|| LabelError::Syntax {
                    line: line_no,
                    message: "label line before any attribute line".into(),
                })?;
                let name = words.next().ok_or_else(|| LabelError::Syntax {
                    line: line_no,
                    message: "label line needs a name".into(),
                })?;
                if words.next() != Some("trapezoid") {
                    return Err(LabelError::Syntax {
                        line: line_no,
                        message: "expected `label <Name> trapezoid a b c d`".into(),
                    });
                }
                let mut points = [0.0f64; 4];
                for p in points.iter_mut() {
                    let w = words.next().ok_or_else(|| LabelError::Syntax {
                        line: line_no,
                        message: "trapezoid needs four points".into(),
                    })?;
                    *p = w.parse().map_err(|_| LabelError::Syntax {
                        line: line_no,
                        message: format!("invalid number {w}"),
                    })?;
                }
                if words.next().is_some() {
                    return Err(LabelError::Syntax {
                        line: line_no,
                        message: "trailing tokens after trapezoid points".into(),
                    });
                }
                let attribute = block.attribute.clone();
                let trapezoid = TrapezoidLabel::new(name, points[0], points[1], points[2], points[3])
                    .map_err(|source| LabelError::Fuzzy {
                        line: line_no,
                        attribute,
                        source,
                    })?;
                block.trapezoids.push(trapezoid);
            }
            "labels" => {
                let block = blocks.last_mut().ok_or_else(|| LabelError::Syntax {
                    line: line_no,
                    message: "labels line before any attribute line".into(),
                })?;
                block.scalar_labels = words.map(str::to_string).collect();
                if block.scalar_labels.is_empty() {
                    return Err(LabelError::Syntax {
                        line: line_no,
                        message: "labels line needs at least one label".into(),
                    });
                }
            }
            "similarity" => {
                let block = blocks.last_mut().ok_or_else(|| LabelError::Syntax {
                    line: line_no,
                    message: "similarity line before any attribute line".into(),
                })?;
                block.similarity_rows = Some(Vec::new());
                block.similarity_line = line_no;
            }
            _ => {
                // inside a similarity section, bare numbers continue the matrix
                let block = blocks.last_mut().filter(|b| b.similarity_rows.is_some());
                match block {
                    Some(block) => {
                        let rows = block.similarity_rows.as_mut().expect("checked above");
                        for w in line.split_whitespace() {
                            let v: f64 = w.parse().map_err(|_| LabelError::Syntax {
                                line: line_no,
                                message: format!("invalid similarity degree {w}"),
                            })?;
                            rows.push(v);
                        }
                    }
                    None => {
                        return Err(LabelError::Syntax {
                            line: line_no,
                            message: format!("unrecognized directive {head}"),
                        })
                    }
                }
            }
        }
    }
    Ok(blocks)
}

/// Parses the sidecar document and enriches the catalog with label
/// definitions. Every fuzzy attribute must end up with definitions of the
/// kind its class expects.
pub fn load_label_definitions(
    mut catalog: SchemaCatalog,
    defs: &str,
) -> Result<SchemaCatalog, LabelError> {
    let blocks = parse_blocks(defs)?;
    let mut seen: Vec<String> = Vec::new();

    for block in blocks {
        if seen.contains(&block.attribute) {
            return Err(LabelError::DuplicateBlock {
                line: block.line,
                attribute: block.attribute,
            });
        }
        seen.push(block.attribute.clone());

        let attr = catalog.attribute(&block.attribute).ok_or_else(|| {
            LabelError::UnknownAttribute {
                line: block.line,
                attribute: block.attribute.clone(),
            }
        })?;
        let class = attr.class;
        let attribute = attr.name.clone();

        let definitions = match class {
            FuzzyClass::Crisp => {
                return Err(LabelError::CrispAttribute {
                    line: block.line,
                    attribute,
                })
            }
            FuzzyClass::Type1 { .. } | FuzzyClass::Type2 { .. } => {
                if block.trapezoids.is_empty()
                    || !block.scalar_labels.is_empty()
                    || block.similarity_rows.is_some()
                {
                    return Err(LabelError::WrongKind {
                        line: block.line,
                        attribute,
                        class: class.to_string(),
                        expected: "trapezoid label",
                    });
                }
                check_unique_names(
                    block.trapezoids.iter().map(|t| t.name.as_str()),
                    block.line,
                    &attribute,
                )?;
                LabelDefinitions::Trapezoids(block.trapezoids)
            }
            FuzzyClass::Type3 { .. } | FuzzyClass::Type4 { .. } => {
                if block.scalar_labels.is_empty() || !block.trapezoids.is_empty() {
                    return Err(LabelError::WrongKind {
                        line: block.line,
                        attribute,
                        class: class.to_string(),
                        expected: "scalar label",
                    });
                }
                check_unique_names(
                    block.scalar_labels.iter().map(String::as_str),
                    block.line,
                    &attribute,
                )?;
                let n = block.scalar_labels.len();
                let similarity = match (class, block.similarity_rows) {
                    (FuzzyClass::Type4 { .. }, Some(_)) => {
                        return Err(LabelError::UnexpectedSimilarity {
                            line: block.similarity_line,
                            attribute,
                        })
                    }
                    (_, Some(values)) => {
                        if values.len() != n * n {
                            return Err(LabelError::DimensionMismatch {
                                line: block.similarity_line,
                                attribute,
                                dim: (values.len() as f64).sqrt().round() as usize,
                                labels: n,
                            });
                        }
                        let degrees: Vec<Vec<f64>> =
                            values.chunks(n).map(|row| row.to_vec()).collect();
                        let relation = SimilarityRelation::new(block.scalar_labels.clone(), degrees)
                            .map_err(|source| LabelError::Fuzzy {
                                line: block.similarity_line,
                                attribute: attribute.clone(),
                                source,
                            })?;
                        Some(relation)
                    }
                    (FuzzyClass::Type3 { .. }, None) => {
                        return Err(LabelError::WrongKind {
                            line: block.line,
                            attribute,
                            class: class.to_string(),
                            expected: "similarity matrix",
                        })
                    }
                    (_, None) => None,
                };
                LabelDefinitions::Scalars {
                    labels: block.scalar_labels,
                    similarity,
                }
            }
        };

        catalog
            .attribute_mut(&attribute)
            .expect("attribute resolved above")
            .labels = definitions;
    }

    for attr in catalog.fuzzy_attributes() {
        if attr.labels == LabelDefinitions::None {
            return Err(LabelError::MissingDefinitions {
                attribute: attr.name.clone(),
            });
        }
    }
    Ok(catalog)
}

fn check_unique_names<'a>(
    names: impl Iterator<Item = &'a str>,
    line: usize,
    attribute: &str,
) -> Result<(), LabelError> {
    let mut seen: Vec<&str> = Vec::new();
    for name in names {
        if seen.iter().any(|s| s.eq_ignore_ascii_case(name)) {
            return Err(LabelError::DuplicateLabel {
                line,
                attribute: attribute.to_string(),
                label: name.to_string(),
            });
        }
        seen.push(name);
    }
    Ok(())
}

/// Canonical sidecar rendering of the loaded label definitions, reparsable
/// by [`load_label_definitions`].
pub fn serialize_label_definitions(catalog: &SchemaCatalog) -> String {
    let mut out = String::new();
    for attr in catalog.fuzzy_attributes() {
        match &attr.labels {
            LabelDefinitions::None => continue,
            LabelDefinitions::Trapezoids(ts) => {
                out.push_str(&format!("attribute {}\n", attr.name));
                for t in ts {
                    out.push_str(&format!(
                        "label {} trapezoid {} {} {} {}\n",
                        t.name, t.a, t.b, t.c, t.d
                    ));
                }
            }
            LabelDefinitions::Scalars { labels, similarity } => {
                out.push_str(&format!("attribute {}\n", attr.name));
                out.push_str(&format!("labels {}\n", labels.join(" ")));
                if let Some(rel) = similarity {
                    out.push_str("similarity\n");
                    for row in &rel.degrees {
                        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                        out.push_str(&cells.join(" "));
                        out.push('\n');
                    }
                }
            }
        }
        out.push('\n');
    }
    out
}
