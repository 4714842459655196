//! Fuzzy c-means over the normalized intermediate matrix, alpha-cut
//! purification, and linguistic labeling of the resulting clusters.
//!
//! Memberships are initialized from a generator seeded per row id, so runs
//! are reproducible and permuting the input rows permutes the output rows
//! bit for bit. Centroid sums are accumulated in row-id order for the same
//! reason.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::catalog::SchemaCatalog;
use crate::dataset::Table;
use crate::encode::{
    assign_codes, build_intermediate_matrix, normalize_matrix, CodeBook, EncodeError, ExcludedRow,
    NormalizedMatrix,
};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("need at least {wanted} rows for {wanted} clusters, got {got}")]
    TooFewRows { wanted: usize, got: usize },
    #[error("empty data")]
    EmptyData,
    #[error("fuzzifier must be > 1, got {0}")]
    BadFuzzifier(f64),
    #[error("cluster count must be at least 2, got {0}")]
    BadClusterCount(usize),
    #[error("alpha must lie in [0,1], got {0}")]
    BadAlpha(f64),
    #[error("membership matrix already purified")]
    AlreadyPurified,
    #[error("no data for attribute {attribute}: {detail}")]
    NoData { attribute: String, detail: String },
    #[error("attribute {attribute} declares no labels; pass an explicit cluster count")]
    NoClusterCount { attribute: String },
    #[error("attribute {attribute}: {source}")]
    Encode {
        attribute: String,
        source: EncodeError,
    },
}

/// Hyperparameters of one fuzzy c-means run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcmConfig {
    pub n_clusters: usize,
    /// Fuzzifier m > 1; 2.0 is the canonical choice.
    pub fuzzifier: f64,
    /// Convergence threshold on the largest membership change.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl FcmConfig {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            fuzzifier: 2.0,
            tolerance: 1e-6,
            max_iterations: 300,
            seed: 0,
        }
    }
}

/// N x C membership degrees, optionally purified by an alpha-cut.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    pub row_ids: Vec<String>,
    pub n_clusters: usize,
    /// `degrees[i][k]` is row `i`'s membership in cluster `k`; zero after a
    /// cut means the entry was eliminated.
    pub degrees: Vec<Vec<f64>>,
    pub purified: bool,
    pub alpha: Option<f64>,
}

impl MembershipMatrix {
    /// Rows left with no surviving entry after a cut.
    pub fn unsupported_rows(&self) -> Vec<&str> {
        self.row_ids
            .iter()
            .zip(&self.degrees)
            .filter(|(_, row)| row.iter().all(|&d| d == 0.0))
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// CSV rendering `(record id, cluster descriptor, degree)` with degrees
    /// printed to 6 decimals; zero entries are skipped.
    pub fn to_csv(&self, descriptors: &[String]) -> String {
        let mut out = String::from("id,descriptor,degree\n");
        for (id, row) in self.row_ids.iter().zip(&self.degrees) {
            for (k, &d) in row.iter().enumerate() {
                if d > 0.0 {
                    out.push_str(&format!("{id},{},{d:.6}\n", descriptors[k]));
                }
            }
        }
        out
    }
}

/// Converged FCM output.
#[derive(Debug, Clone, PartialEq)]
pub struct FcmResult {
    pub memberships: MembershipMatrix,
    /// One centroid per cluster, in the (normalized) data space.
    pub centroids: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Objective value after each iteration; non-increasing.
    pub objective_trace: Vec<f64>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn initial_memberships(row_ids: &[String], n_clusters: usize, seed: u64) -> Vec<Vec<f64>> {
    row_ids
        .iter()
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(id.as_bytes()));
            let mut row: Vec<f64> = (0..n_clusters)
                // bounded away from zero so normalization is stable
                .map(|_| 0.05 + 0.95 * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64))
                .collect();
            let sum: f64 = row.iter().sum();
            for v in &mut row {
                *v /= sum;
            }
            row
        })
        .collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Standard fuzzy c-means. Deterministic for a fixed `(data, row_ids, cfg)`;
/// permuting rows (with their ids) permutes the outputs identically.
pub fn fcm(
    data: &[Vec<f64>],
    row_ids: &[String],
    cfg: &FcmConfig,
) -> Result<FcmResult, ClusterError> {
    let n = data.len();
    let c = cfg.n_clusters;
    if n == 0 {
        return Err(ClusterError::EmptyData);
    }
    if c < 2 {
        return Err(ClusterError::BadClusterCount(c));
    }
    if c > n {
        return Err(ClusterError::TooFewRows { wanted: c, got: n });
    }
    if cfg.fuzzifier <= 1.0 {
        return Err(ClusterError::BadFuzzifier(cfg.fuzzifier));
    }
    let dim = data[0].len();
    let m = cfg.fuzzifier;
    let exponent = 1.0 / (m - 1.0);

    // row-id order makes centroid accumulation independent of input order
    let mut canonical: Vec<usize> = (0..n).collect();
    canonical.sort_by(|&a, &b| row_ids[a].cmp(&row_ids[b]));

    let mut u = initial_memberships(row_ids, c, cfg.seed);
    let mut centroids = vec![vec![0.0; dim]; c];
    let mut iterations = 0;
    let mut objective_trace = Vec::new();

    for _ in 0..cfg.max_iterations {
        iterations += 1;

        // centroid update: v_k = sum_i u_ik^m x_i / sum_i u_ik^m
        for (k, centroid) in centroids.iter_mut().enumerate() {
            let mut weight_sum = 0.0;
            let mut num = vec![0.0; dim];
            for &i in &canonical {
                let w = u[i][k].powf(m);
                weight_sum += w;
                for (acc, &x) in num.iter_mut().zip(&data[i]) {
                    *acc += w * x;
                }
            }
            for (v, acc) in centroid.iter_mut().zip(num) {
                if weight_sum > 0.0 {
                    *v = acc / weight_sum;
                }
            }
        }

        // membership update with the zero-distance guard
        let mut max_delta = 0.0f64;
        for (i, row) in u.iter_mut().enumerate() {
            let d2: Vec<f64> = centroids
                .iter()
                .map(|v| squared_distance(&data[i], v))
                .collect();
            let new_row: Vec<f64> = match d2.iter().position(|&d| d == 0.0) {
                Some(hit) => (0..c).map(|k| if k == hit { 1.0 } else { 0.0 }).collect(),
                None => {
                    let inv: Vec<f64> = d2.iter().map(|&d| (1.0 / d).powf(exponent)).collect();
                    let total: f64 = inv.iter().sum();
                    inv.into_iter().map(|v| v / total).collect()
                }
            };
            for k in 0..c {
                max_delta = max_delta.max((new_row[k] - row[k]).abs());
            }
            *row = new_row;
        }

        let mut objective = 0.0;
        for &i in &canonical {
            for k in 0..c {
                objective += u[i][k].powf(m) * squared_distance(&data[i], &centroids[k]);
            }
        }
        objective_trace.push(objective);

        if max_delta < cfg.tolerance {
            break;
        }
    }

    Ok(FcmResult {
        memberships: MembershipMatrix {
            row_ids: row_ids.to_vec(),
            n_clusters: c,
            degrees: u,
            purified: false,
            alpha: None,
        },
        centroids,
        iterations,
        objective_trace,
    })
}

/// Eliminates every degree lower than `alpha`. Degrees equal to the cut
/// survive; rows may end up with no entry (see
/// [`MembershipMatrix::unsupported_rows`]).
pub fn alpha_cut(u: &MembershipMatrix, alpha: f64) -> Result<MembershipMatrix, ClusterError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ClusterError::BadAlpha(alpha));
    }
    if u.purified {
        return Err(ClusterError::AlreadyPurified);
    }
    let degrees = u
        .degrees
        .iter()
        .map(|row| row.iter().map(|&d| if d < alpha { 0.0 } else { d }).collect())
        .collect();
    Ok(MembershipMatrix {
        row_ids: u.row_ids.clone(),
        n_clusters: u.n_clusters,
        degrees,
        purified: true,
        alpha: Some(alpha),
    })
}

/// Names each centroid (already mapped back to code space) after the nearest
/// label code; ties break toward the lower rank, duplicates get a numeric
/// suffix, and attributes without codes fall back to `cluster-k`.
pub fn label_clusters(
    centroid_levels: &[f64],
    codebook: &CodeBook,
    attribute: &str,
) -> Vec<String> {
    let codes = match codebook.codes_for(attribute) {
        Some(codes) if !codes.codes.is_empty() => codes,
        _ => {
            return (1..=centroid_levels.len())
                .map(|k| format!("cluster-{k}"))
                .collect()
        }
    };
    let mut out: Vec<String> = Vec::with_capacity(centroid_levels.len());
    for &level in centroid_levels {
        let (name, _) = codes
            .codes
            .iter()
            .map(|(name, code)| (name, (code.level - level).abs()))
            // strict `<` keeps the earliest (lowest-rank) label on ties
            .fold(None::<(&String, f64)>, |best, (name, dist)| match best {
                Some((_, best_dist)) if best_dist <= dist => best,
                _ => Some((name, dist)),
            })
            .expect("attribute has at least one code");
        let mut descriptor = name.clone();
        let mut suffix = 2;
        while out.contains(&descriptor) {
            descriptor = format!("{name}-{suffix}");
            suffix += 1;
        }
        out.push(descriptor);
    }
    out
}

/// One attribute's clustering outcome: labeled clusters plus the purified
/// membership matrix, clusters ordered by centroid level.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterInfo {
    pub id: usize,
    /// Centroid mapped back to code space (raw value space for pass-through
    /// attributes).
    pub centroid_level: f64,
    pub descriptor: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributePartition {
    pub attribute: String,
    pub clusters: Vec<ClusterInfo>,
    pub memberships: MembershipMatrix,
    pub iterations: usize,
}

/// Per-attribute overrides for the partition pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FcmOverride {
    pub n_clusters: Option<usize>,
    pub fuzzifier: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
}

/// Options for [`per_attribute_partitions`].
#[derive(Debug, Clone)]
pub struct PartitionOptions {
    pub alpha: f64,
    pub seed: u64,
    pub fuzzifier: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub overrides: BTreeMap<String, FcmOverride>,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            seed: 0,
            fuzzifier: 2.0,
            tolerance: 1e-6,
            max_iterations: 300,
            overrides: BTreeMap::new(),
        }
    }
}

fn override_for<'a>(opts: &'a PartitionOptions, attribute: &str) -> Option<&'a FcmOverride> {
    opts.overrides
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(attribute))
        .map(|(_, o)| o)
}

/// Runs encode -> normalize -> fcm -> alpha-cut -> label for each selected
/// attribute over a shared record universe: rows holding a special marker in
/// any selected attribute are excluded everywhere.
pub fn per_attribute_partitions(
    table: &Table,
    catalog: &SchemaCatalog,
    selected: &[String],
    opts: &PartitionOptions,
) -> Result<(Vec<AttributePartition>, Vec<ExcludedRow>), ClusterError> {
    let codebook = assign_codes(catalog).map_err(|source| ClusterError::Encode {
        attribute: "<catalog>".into(),
        source,
    })?;
    let matrix = build_intermediate_matrix(table, catalog, &codebook, selected).map_err(
        |source| ClusterError::Encode {
            attribute: selected.join(","),
            source,
        },
    )?;
    if matrix.row_ids.is_empty() {
        let detail = if matrix.excluded_rows.is_empty() {
            "table has no rows".to_string()
        } else {
            let reasons: Vec<String> = matrix
                .excluded_rows
                .iter()
                .map(|e| format!("{} ({})", e.id, e.reason))
                .collect();
            format!("all rows excluded: {}", reasons.join(", "))
        };
        return Err(ClusterError::NoData {
            attribute: selected.join(","),
            detail,
        });
    }
    let normalized = normalize_matrix(&matrix).map_err(|source| ClusterError::Encode {
        attribute: selected.join(","),
        source,
    })?;

    let mut partitions = Vec::with_capacity(selected.len());
    for (j, attribute) in matrix.selected_attrs.iter().enumerate() {
        let partition =
            partition_single_attribute(catalog, &codebook, &normalized, j, attribute, opts)?;
        partitions.push(partition);
    }
    Ok((partitions, matrix.excluded_rows))
}

fn partition_single_attribute(
    catalog: &SchemaCatalog,
    codebook: &CodeBook,
    normalized: &NormalizedMatrix,
    col: usize,
    attribute: &str,
    opts: &PartitionOptions,
) -> Result<AttributePartition, ClusterError> {
    let attr = catalog
        .attribute(attribute)
        .expect("attribute resolved during encoding");
    let ovr = override_for(opts, attribute).copied().unwrap_or_default();
    let n_clusters = match ovr.n_clusters {
        Some(c) => c,
        None => match attr.labels.count() {
            0 => {
                return Err(ClusterError::NoClusterCount {
                    attribute: attribute.to_string(),
                })
            }
            c => c,
        },
    };
    let cfg = FcmConfig {
        n_clusters,
        fuzzifier: ovr.fuzzifier.unwrap_or(opts.fuzzifier),
        tolerance: ovr.tolerance.unwrap_or(opts.tolerance),
        max_iterations: ovr.max_iterations.unwrap_or(opts.max_iterations),
        seed: opts.seed,
    };

    let data: Vec<Vec<f64>> = normalized.rows.iter().map(|row| vec![row[col]]).collect();
    let result = fcm(&data, &normalized.row_ids, &cfg)?;
    let purified = alpha_cut(&result.memberships, opts.alpha)?;

    let mut levels: Vec<f64> = result
        .centroids
        .iter()
        .map(|v| normalized.denormalize(col, v[0]))
        .collect();

    // order clusters by centroid level so descriptors read low to high
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| levels[a].partial_cmp(&levels[b]).expect("finite centroids"));
    levels = order.iter().map(|&k| levels[k]).collect();
    let degrees: Vec<Vec<f64>> = purified
        .degrees
        .iter()
        .map(|row| order.iter().map(|&k| row[k]).collect())
        .collect();

    let descriptors = label_clusters(&levels, codebook, attribute);
    let clusters = descriptors
        .iter()
        .enumerate()
        .map(|(id, descriptor)| ClusterInfo {
            id,
            centroid_level: levels[id],
            descriptor: descriptor.clone(),
        })
        .collect();

    Ok(AttributePartition {
        attribute: attribute.to_string(),
        clusters,
        memberships: MembershipMatrix {
            row_ids: purified.row_ids,
            n_clusters: purified.n_clusters,
            degrees,
            purified: true,
            alpha: purified.alpha,
        },
        iterations: result.iterations,
    })
}
