//! CSV ingestion. Cells use a small syntax: a bare number is crisp, `~x` is
//! an approximate value, a bare word is a linguistic label, and
//! `#UNKNOWN`/`#UNDEFINED`/`#NULL` are the special markers. Empty cells fall
//! back to the column's declared DEFAULT, or NULL.

use std::io::Read;

use thiserror::Error;

use crate::catalog::{AttributeDef, SchemaCatalog, SpecialValue};
use crate::fuzzy::FuzzyValue;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header is missing catalog attribute {attribute}")]
    MissingColumn { attribute: String },
    #[error("header column {column} does not match any catalog attribute")]
    UnknownColumn { column: String },
    #[error("record {row}: missing cell for attribute {attribute}")]
    MissingCell { row: usize, attribute: String },
    #[error("record {row}, attribute {attribute}: invalid approximate value {text}")]
    BadApproximate {
        row: usize,
        attribute: String,
        text: String,
    },
    #[error(
        "record {row}, attribute {attribute}: approximate values need a margin, but {class} has none"
    )]
    NoMargin {
        row: usize,
        attribute: String,
        class: String,
    },
    #[error("record {row}, attribute {attribute}: unknown special marker {text}")]
    BadMarker {
        row: usize,
        attribute: String,
        text: String,
    },
    #[error("duplicate record id {id} at row {row}")]
    DuplicateId { id: String, row: usize },
    #[error("table has no data rows")]
    Empty,
}

/// One ingested row: the primary-key text plus one value per catalog
/// attribute, in catalog order.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub values: Vec<FuzzyValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub records: Vec<Record>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn special_from_default(attr: &AttributeDef) -> FuzzyValue {
    match attr.default_special {
        Some(SpecialValue::Unknown) => FuzzyValue::Unknown,
        Some(SpecialValue::Undefined) => FuzzyValue::Undefined,
        Some(SpecialValue::Null) | None => FuzzyValue::Null,
    }
}

/// Parses one CSV cell for the given attribute.
pub fn parse_cell(text: &str, attr: &AttributeDef, row: usize) -> Result<FuzzyValue, DataError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(special_from_default(attr));
    }
    if let Some(marker) = text.strip_prefix('#') {
        return match marker.to_ascii_uppercase().as_str() {
            "UNKNOWN" => Ok(FuzzyValue::Unknown),
            "UNDEFINED" => Ok(FuzzyValue::Undefined),
            "NULL" => Ok(FuzzyValue::Null),
            _ => Err(DataError::BadMarker {
                row,
                attribute: attr.name.clone(),
                text: text.to_string(),
            }),
        };
    }
    if let Some(body) = text.strip_prefix('~') {
        let value: f64 = body.trim().parse().map_err(|_| DataError::BadApproximate {
            row,
            attribute: attr.name.clone(),
            text: text.to_string(),
        })?;
        let margin = attr.class.margin().ok_or_else(|| DataError::NoMargin {
            row,
            attribute: attr.name.clone(),
            class: attr.class.to_string(),
        })?;
        return Ok(FuzzyValue::Approximate { value, margin });
    }
    if let Ok(value) = text.parse::<f64>() {
        return Ok(FuzzyValue::Crisp(value));
    }
    Ok(FuzzyValue::Label(text.to_string()))
}

/// Reads a CSV document whose header names the catalog attributes (any
/// order, all present). The record id is the primary-key cell text,
/// composite keys joined with `/`.
pub fn read_csv<R: Read>(reader: R, catalog: &SchemaCatalog) -> Result<Table, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let mut column_of = vec![None; catalog.attributes.len()];
    for (idx, column) in headers.iter().enumerate() {
        match catalog
            .attributes
            .iter()
            .position(|a| a.name.eq_ignore_ascii_case(column))
        {
            Some(attr_idx) => column_of[attr_idx] = Some(idx),
            None => {
                return Err(DataError::UnknownColumn {
                    column: column.to_string(),
                })
            }
        }
    }
    for (attr, col) in catalog.attributes.iter().zip(&column_of) {
        if col.is_none() {
            return Err(DataError::MissingColumn {
                attribute: attr.name.clone(),
            });
        }
    }

    let pk_columns: Vec<usize> = catalog
        .primary_key
        .iter()
        .map(|pk| {
            let attr_idx = catalog
                .attributes
                .iter()
                .position(|a| a.name.eq_ignore_ascii_case(pk))
                .expect("primary key resolved at parse time");
            column_of[attr_idx].expect("all columns mapped above")
        })
        .collect();

    let mut records = Vec::new();
    for (i, result) in rdr.records().enumerate() {
        let row = i + 2; // header is row 1
        let record = result?;
        let id = pk_columns
            .iter()
            .map(|&c| record.get(c).unwrap_or("").trim().to_string())
            .collect::<Vec<_>>()
            .join("/");
        if records.iter().any(|r: &Record| r.id == id) {
            return Err(DataError::DuplicateId { id, row });
        }
        let mut values = Vec::with_capacity(catalog.attributes.len());
        for (attr, col) in catalog.attributes.iter().zip(&column_of) {
            let cell = record
                .get(col.expect("all columns mapped above"))
                .ok_or_else(|| DataError::MissingCell {
                    row,
                    attribute: attr.name.clone(),
                })?;
            values.push(parse_cell(cell, attr, row)?);
        }
        records.push(Record { id, values });
    }
    if records.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(Table { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::test_support::employee_catalog_with_labels;

    const CSV: &str = "\
ID#,NAME,SURNAME,ADDRESS,AGE,SALARY,PRODUCTIVITY
001,John,Doe,Paris,Young,300,Good
002,Jane,Roe,Lyon,~30,120,Regular
003,Jim,Poe,Nice,#UNKNOWN,80,Bad
004,Joan,Moe,Metz,42,,Good
";

    #[test]
    fn reads_all_cell_kinds() {
        let catalog = employee_catalog_with_labels();
        let table = read_csv(CSV.as_bytes(), &catalog).unwrap();
        assert_eq!(table.len(), 4);
        assert_eq!(table.records[0].id, "001");

        let age = |i: usize| &table.records[i].values[4];
        assert_eq!(age(0), &FuzzyValue::Label("Young".into()));
        assert_eq!(age(1), &FuzzyValue::Approximate { value: 30.0, margin: 5.0 });
        assert_eq!(age(2), &FuzzyValue::Unknown);
        assert_eq!(age(3), &FuzzyValue::Crisp(42.0));

        // empty SALARY cell, no DEFAULT declared -> NULL
        assert_eq!(table.records[3].values[5], FuzzyValue::Null);
    }

    #[test]
    fn empty_cell_uses_declared_default() {
        let catalog = employee_catalog_with_labels();
        let csv = "ID#,NAME,SURNAME,ADDRESS,AGE,SALARY,PRODUCTIVITY\n001,a,b,c,,100,Good\n";
        let table = read_csv(csv.as_bytes(), &catalog).unwrap();
        // AGE declares DEFAULT UNKNOWN
        assert_eq!(table.records[0].values[4], FuzzyValue::Unknown);
    }

    #[test]
    fn header_order_is_free_but_must_cover_catalog() {
        let catalog = employee_catalog_with_labels();
        let csv = "AGE,ID#,NAME,SURNAME,ADDRESS,SALARY,PRODUCTIVITY\nYoung,001,a,b,c,100,Good\n";
        let table = read_csv(csv.as_bytes(), &catalog).unwrap();
        assert_eq!(table.records[0].id, "001");
        assert_eq!(table.records[0].values[4], FuzzyValue::Label("Young".into()));

        let csv = "ID#,NAME,SURNAME,ADDRESS,AGE,SALARY\n001,a,b,c,Young,100\n";
        let err = read_csv(csv.as_bytes(), &catalog).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn { .. }));

        let csv = "ID#,NAME,SURNAME,ADDRESS,AGE,SALARY,PRODUCTIVITY,EXTRA\n001,a,b,c,Young,100,Good,x\n";
        let err = read_csv(csv.as_bytes(), &catalog).unwrap_err();
        assert!(matches!(err, DataError::UnknownColumn { .. }));
    }

    #[test]
    fn bad_marker_and_duplicate_id_are_rejected() {
        let catalog = employee_catalog_with_labels();
        let csv = "ID#,NAME,SURNAME,ADDRESS,AGE,SALARY,PRODUCTIVITY\n001,a,b,c,#NOPE,100,Good\n";
        let err = read_csv(csv.as_bytes(), &catalog).unwrap_err();
        assert!(matches!(err, DataError::BadMarker { .. }));

        let csv = "ID#,NAME,SURNAME,ADDRESS,AGE,SALARY,PRODUCTIVITY\n\
                   001,a,b,c,30,100,Good\n001,d,e,f,40,200,Bad\n";
        let err = read_csv(csv.as_bytes(), &catalog).unwrap_err();
        assert!(matches!(err, DataError::DuplicateId { row: 3, .. }));
    }

    #[test]
    fn approximate_needs_a_margin() {
        let catalog = employee_catalog_with_labels();
        // PRODUCTIVITY is FTYPE3: no margin defined
        let csv = "ID#,NAME,SURNAME,ADDRESS,AGE,SALARY,PRODUCTIVITY\n001,a,b,c,30,100,~2\n";
        let err = read_csv(csv.as_bytes(), &catalog).unwrap_err();
        assert!(matches!(err, DataError::NoMargin { .. }));
    }
}
