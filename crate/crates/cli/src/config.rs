//! Line-oriented `key = value` config files with one `[attr NAME]` section
//! per attribute override. Command-line flags win over file values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use fuzzysum_core::cluster::FcmOverride;

#[derive(Debug, Default, Clone, PartialEq)]
pub struct FileConfig {
    pub schema: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub attrs: Option<Vec<String>>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub fuzzifier: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub overrides: BTreeMap<String, FcmOverride>,
}

pub fn parse_config(text: &str) -> Result<FileConfig, String> {
    let mut cfg = FileConfig::default();
    let mut section: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| format!("line {line_no}: unterminated section header"))?;
            let name = header
                .trim()
                .strip_prefix("attr")
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| format!("line {line_no}: expected [attr NAME]"))?;
            section = Some(name.to_ascii_uppercase());
            cfg.overrides.entry(section.clone().unwrap()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {line_no}: expected key = value"))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        let parse_f64 = |v: &str| -> Result<f64, String> {
            v.parse().map_err(|_| format!("line {line_no}: invalid number {v}"))
        };
        let parse_usize = |v: &str| -> Result<usize, String> {
            v.parse().map_err(|_| format!("line {line_no}: invalid count {v}"))
        };

        match &section {
            None => match key.as_str() {
                "schema" => cfg.schema = Some(value.into()),
                "labels" => cfg.labels = Some(value.into()),
                "data" => cfg.data = Some(value.into()),
                "attrs" => {
                    cfg.attrs = Some(
                        value
                            .split(',')
                            .map(|a| a.trim().to_string())
                            .filter(|a| !a.is_empty())
                            .collect(),
                    )
                }
                "alpha" => cfg.alpha = Some(parse_f64(value)?),
                "seed" => {
                    cfg.seed = Some(
                        value
                            .parse()
                            .map_err(|_| format!("line {line_no}: invalid seed {value}"))?,
                    )
                }
                "fuzzifier" => cfg.fuzzifier = Some(parse_f64(value)?),
                "tolerance" => cfg.tolerance = Some(parse_f64(value)?),
                "max-iterations" => cfg.max_iterations = Some(parse_usize(value)?),
                "out" => cfg.out = Some(value.into()),
                "format" => cfg.format = Some(value.to_string()),
                other => return Err(format!("line {line_no}: unknown key {other}")),
            },
            Some(attr) => {
                let entry = cfg.overrides.entry(attr.clone()).or_default();
                match key.as_str() {
                    "clusters" => entry.n_clusters = Some(parse_usize(value)?),
                    "fuzzifier" => entry.fuzzifier = Some(parse_f64(value)?),
                    "tolerance" => entry.tolerance = Some(parse_f64(value)?),
                    "max-iterations" => entry.max_iterations = Some(parse_usize(value)?),
                    other => {
                        return Err(format!("line {line_no}: unknown override key {other}"))
                    }
                }
            }
        }
    }
    Ok(cfg)
}
