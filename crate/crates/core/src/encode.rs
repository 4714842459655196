//! Correspondence encoding: linguistic labels become numeric codes, records
//! become the intermediate matrix fed to clustering.
//!
//! Labels of FTYPE2/FTYPE3/FTYPE4 attributes receive codes
//! `base + (rank - 1) * step`, where `base` is 10, `rank` is the 1-based
//! position in semantic ascending (declaration) order, and `step` is the
//! attribute's threshold (default 10 where no threshold is declared). Codes
//! keep the attribute apart from its neighbours at threshold granularity.
//! FTYPE1 and crisp columns pass through unchanged.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::catalog::SchemaCatalog;
use crate::dataset::Table;
use crate::fuzzy::FuzzyValue;

/// Code step assigned to the first label of every coded attribute.
pub const BASE_OFFSET: f64 = 10.0;

/// Fallback step for label domains that declare no threshold.
pub const DEFAULT_STEP: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("attribute {attribute} declares labels but no positive code step")]
    NoStep { attribute: String },
    #[error("attribute {attribute} is not part of the catalog")]
    UnknownAttribute { attribute: String },
    #[error("record {id}: label {label} is not in the codebook of attribute {attribute}")]
    LabelNotInCodebook {
        id: String,
        attribute: String,
        label: String,
    },
    #[error("record {id}: non-numeric cell {cell} for numeric attribute {attribute}")]
    NonNumericCell {
        id: String,
        attribute: String,
        cell: String,
    },
    #[error("no rows left to encode")]
    NoRows,
}

/// Numeric code of one linguistic label: the attribute's 1-based index among
/// coded attributes, plus the level value in threshold units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelCode {
    pub attr_index: usize,
    pub level: f64,
}

impl LabelCode {
    /// Display form `<attr>.<level>`, level zero-padded to two digits:
    /// `(1, 10)` prints as `1.10`. Display only; the structured pair is the
    /// stored representation.
    pub fn display(&self) -> String {
        let mut out = String::new();
        if self.level.fract() == 0.0 {
            write!(out, "{}.{:02}", self.attr_index, self.level as i64).unwrap();
        } else {
            write!(out, "{}.{}", self.attr_index, self.level).unwrap();
        }
        out
    }
}

/// Codes of one attribute's labels, rank order preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeCodes {
    pub attr_index: usize,
    pub base_offset: f64,
    pub step: f64,
    /// `(label name, code)` in declaration (semantic ascending) order.
    pub codes: Vec<(String, LabelCode)>,
}

impl AttributeCodes {
    pub fn code_of(&self, label: &str) -> Option<LabelCode> {
        self.codes
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(label))
            .map(|(_, code)| *code)
    }
}

/// Table of correspondence codes: per coded attribute, a map from label to
/// code. Attributes without codes (crisp, FTYPE1) are absent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CodeBook {
    per_attribute: BTreeMap<String, AttributeCodes>,
    /// Soft findings, e.g. FTYPE3 declaration order disagreeing with a
    /// greedy similarity seriation.
    pub warnings: Vec<String>,
}

impl CodeBook {
    pub fn codes_for(&self, attribute: &str) -> Option<&AttributeCodes> {
        self.per_attribute.get(&attribute.to_ascii_uppercase())
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&String, &AttributeCodes)> {
        self.per_attribute.iter()
    }
}

/// Builds the codebook for every FTYPE2/FTYPE3/FTYPE4 attribute with loaded
/// labels. The attribute index counts coded attributes in declaration order.
pub fn assign_codes(catalog: &SchemaCatalog) -> Result<CodeBook, EncodeError> {
    let mut book = CodeBook::default();
    let mut attr_index = 0usize;
    for attr in &catalog.attributes {
        if !attr.class.takes_codes() {
            continue;
        }
        attr_index += 1;
        let names = attr.labels.names();
        if names.is_empty() {
            continue;
        }
        let step = match attr.class.threshold() {
            Some(t) if t > 0.0 => t,
            Some(_) => {
                return Err(EncodeError::NoStep {
                    attribute: attr.name.clone(),
                })
            }
            None => DEFAULT_STEP,
        };
        let codes: Vec<(String, LabelCode)> = names
            .iter()
            .enumerate()
            .map(|(rank, name)| {
                let level = BASE_OFFSET + rank as f64 * step;
                (name.to_string(), LabelCode { attr_index, level })
            })
            .collect();
        if let Some(rel) = attr.labels.similarity() {
            let greedy = rel.greedy_seriation();
            if greedy.iter().enumerate().any(|(i, &j)| i != j) {
                book.warnings.push(format!(
                    "attribute {}: declared label order is not similarity-ascending \
                     (greedy seriation suggests {})",
                    attr.name,
                    greedy
                        .iter()
                        .map(|&j| names[j])
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
        }
        book.per_attribute.insert(
            attr.name.clone(),
            AttributeCodes {
                attr_index,
                base_offset: BASE_OFFSET,
                step,
                codes,
            },
        );
    }
    Ok(book)
}

/// One numeric cell of the intermediate matrix: either a label code or a
/// raw value passed through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Code(LabelCode),
    Raw(f64),
}

impl Cell {
    pub fn value(&self) -> f64 {
        match self {
            Cell::Code(code) => code.level,
            Cell::Raw(v) => *v,
        }
    }

    pub fn display(&self) -> String {
        match self {
            Cell::Code(code) => code.display(),
            Cell::Raw(v) => v.to_string(),
        }
    }
}

/// A record dropped from the matrix, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedRow {
    pub id: String,
    pub reason: String,
}

/// The intermediate numeric matrix over the selected attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMatrix {
    pub row_ids: Vec<String>,
    pub selected_attrs: Vec<String>,
    /// Rectangular: `cells[i][j]` is row `i`'s value for `selected_attrs[j]`.
    pub cells: Vec<Vec<Cell>>,
    pub excluded_rows: Vec<ExcludedRow>,
}

impl CodeMatrix {
    /// Numeric values of one column.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cells.iter().map(|row| row[j].value()).collect()
    }

    /// CSV rendering with the record id first and display codes for coded
    /// cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("id,");
        out.push_str(&self.selected_attrs.join(","));
        out.push('\n');
        for (id, row) in self.row_ids.iter().zip(&self.cells) {
            out.push_str(id);
            for cell in row {
                out.push(',');
                out.push_str(&cell.display());
            }
            out.push('\n');
        }
        out
    }
}

/// Applies the correspondence function to every record: labels become level
/// values, crisp and approximate cells pass through as numbers, and rows
/// holding a special marker in any selected attribute are excluded.
pub fn build_intermediate_matrix(
    table: &Table,
    catalog: &SchemaCatalog,
    codebook: &CodeBook,
    selected: &[String],
) -> Result<CodeMatrix, EncodeError> {
    let mut attr_positions = Vec::with_capacity(selected.len());
    for name in selected {
        let pos = catalog
            .attributes
            .iter()
            .position(|a| a.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| EncodeError::UnknownAttribute {
                attribute: name.clone(),
            })?;
        attr_positions.push(pos);
    }

    let mut row_ids = Vec::new();
    let mut cells = Vec::new();
    let mut excluded_rows = Vec::new();

    'rows: for record in &table.records {
        // first pass: the specials rule
        for &pos in &attr_positions {
            let attr = &catalog.attributes[pos];
            if let Some(marker) = record.values[pos].special_name() {
                excluded_rows.push(ExcludedRow {
                    id: record.id.clone(),
                    reason: format!("{}: {}", attr.name, marker),
                });
                continue 'rows;
            }
        }
        let mut row = Vec::with_capacity(attr_positions.len());
        for &pos in &attr_positions {
            let attr = &catalog.attributes[pos];
            let cell = match &record.values[pos] {
                FuzzyValue::Label(label) => match codebook.codes_for(&attr.name) {
                    Some(codes) => match codes.code_of(label) {
                        Some(code) => Cell::Code(code),
                        None => {
                            return Err(EncodeError::LabelNotInCodebook {
                                id: record.id.clone(),
                                attribute: attr.name.clone(),
                                label: label.clone(),
                            })
                        }
                    },
                    None => {
                        return Err(EncodeError::NonNumericCell {
                            id: record.id.clone(),
                            attribute: attr.name.clone(),
                            cell: label.clone(),
                        })
                    }
                },
                FuzzyValue::Crisp(v) => Cell::Raw(*v),
                FuzzyValue::Approximate { value, .. } => Cell::Raw(*value),
                special => unreachable!("specials excluded above: {special:?}"),
            };
            row.push(cell);
        }
        row_ids.push(record.id.clone());
        cells.push(row);
    }

    Ok(CodeMatrix {
        row_ids,
        selected_attrs: attr_positions
            .iter()
            .map(|&p| catalog.attributes[p].name.clone())
            .collect(),
        cells,
        excluded_rows,
    })
}

/// Min-max scaled matrix, keeping the column ranges so centroids can be
/// mapped back to code space.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub row_ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub col_min: Vec<f64>,
    pub col_max: Vec<f64>,
}

impl NormalizedMatrix {
    /// Maps a normalized coordinate back to the original column scale.
    pub fn denormalize(&self, col: usize, v: f64) -> f64 {
        let (min, max) = (self.col_min[col], self.col_max[col]);
        if max > min {
            min + v * (max - min)
        } else {
            min
        }
    }
}

/// Per-column min-max scaling into `[0, 1]`; constant columns map to 0.5.
pub fn normalize_matrix(matrix: &CodeMatrix) -> Result<NormalizedMatrix, EncodeError> {
    if matrix.cells.is_empty() {
        return Err(EncodeError::NoRows);
    }
    let n_cols = matrix.selected_attrs.len();
    let mut col_min = vec![f64::INFINITY; n_cols];
    let mut col_max = vec![f64::NEG_INFINITY; n_cols];
    for row in &matrix.cells {
        for (j, cell) in row.iter().enumerate() {
            let v = cell.value();
            col_min[j] = col_min[j].min(v);
            col_max[j] = col_max[j].max(v);
        }
    }
    let rows = matrix
        .cells
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, cell)| {
                    if col_max[j] > col_min[j] {
                        (cell.value() - col_min[j]) / (col_max[j] - col_min[j])
                    } else {
                        0.5
                    }
                })
                .collect()
        })
        .collect();
    Ok(NormalizedMatrix {
        row_ids: matrix.row_ids.clone(),
        columns: matrix.selected_attrs.clone(),
        rows,
        col_min,
        col_max,
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::catalog::{load_label_definitions, parse_fsql_schema};
    use crate::dataset::read_csv;

    /// The Personal table: Age and Experience over four records.
    pub const PERSONAL_FSQL: &str = "\
        CREATE TABLE PERSONAL (\n\
          ID VARCHAR(3) NOT NULL,\n\
          AGE FTYPE2(5,10) NUMBER(3),\n\
          EXPERIENCE FTYPE2(2,5) NUMBER(2),\n\
          PRIMARY KEY (ID));\n";

    pub const PERSONAL_LABELS: &str = "\
        attribute AGE\n\
        label Young trapezoid 18 22 30 35\n\
        label Adult trapezoid 25 32 45 50\n\
        label Old trapezoid 50 55 62 70\n\
        attribute EXPERIENCE\n\
        label Small trapezoid 2 3 5 6\n\
        label Good trapezoid 5 7 10 12\n\
        label Sufficient trapezoid 7 8 15 20\n\
        label Large trapezoid 12 15 50 50\n";

    pub const PERSONAL_CSV: &str = "\
ID,AGE,EXPERIENCE
001,Young,Good
002,Old,Small
003,Adult,Sufficient
004,Young,Large
";

    pub fn personal_catalog() -> SchemaCatalog {
        let catalog = parse_fsql_schema(PERSONAL_FSQL).unwrap();
        load_label_definitions(catalog, PERSONAL_LABELS).unwrap()
    }

    pub fn personal_table(catalog: &SchemaCatalog) -> Table {
        read_csv(PERSONAL_CSV.as_bytes(), catalog).unwrap()
    }
}
