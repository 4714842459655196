//! Fuzzy-set primitives: trapezoidal possibility distributions, approximate
//! values, and similarity relations over discrete label domains.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("non-monotone trapezoid for label {name}: points must satisfy a <= b <= c <= d")]
    NonMonotoneTrapezoid { name: String },
    #[error("unknown label {label} in similarity relation")]
    UnknownLabel { label: String },
    #[error("similarity matrix must be {n}x{n}, got {rows} rows")]
    NotSquare { n: usize, rows: usize },
    #[error("similarity degree {value} at ({row},{col}) outside [0,1]")]
    DegreeOutOfRange { value: f64, row: usize, col: usize },
}

/// A linguistic label backed by a trapezoidal possibility distribution.
///
/// Membership is 0 up to `a`, ramps linearly to 1 at `b`, stays 1 on the
/// plateau `[b, c]`, and ramps back to 0 at `d`. Degenerate ramps (`a == b`
/// or `c == d`) jump straight to 1 at the shared point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapezoidLabel {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl TrapezoidLabel {
    pub fn new(
        name: impl Into<String>,
        a: f64,
        b: f64,
        c: f64,
        d: f64,
    ) -> Result<Self, FuzzyError> {
        let name = name.into();
        if !(a <= b && b <= c && c <= d) {
            return Err(FuzzyError::NonMonotoneTrapezoid { name });
        }
        Ok(Self { name, a, b, c, d })
    }

    /// Membership degree of `x`, always in `[0, 1]`.
    pub fn membership(&self, x: f64) -> f64 {
        if x < self.a || x > self.d {
            0.0
        } else if x >= self.b && x <= self.c {
            1.0
        } else if x < self.b {
            // a < b here, otherwise x would have fallen in the plateau arm
            (x - self.a) / (self.b - self.a)
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }
}

/// Triangular distribution for "approximately `x`": `(x-margin, x, x, x+margin)`.
pub fn approximate_distribution(x: f64, margin: f64) -> TrapezoidLabel {
    debug_assert!(margin >= 0.0);
    TrapezoidLabel {
        name: format!("~{x}"),
        a: x - margin,
        b: x,
        c: x,
        d: x + margin,
    }
}

/// Similarity (proximity) relation over the scalar labels of a discrete
/// non-ordered domain, e.g. how much "Regular" productivity resembles "Good".
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRelation {
    pub labels: Vec<String>,
    /// Row-major `n x n` degrees in `[0, 1]`.
    pub degrees: Vec<Vec<f64>>,
}

impl SimilarityRelation {
    /// Builds the relation, rejecting non-square matrices and out-of-range
    /// degrees. Reflexivity and symmetry are reported by [`Self::check`]
    /// rather than rejected here, so a catalog validation pass can name them.
    pub fn new(labels: Vec<String>, degrees: Vec<Vec<f64>>) -> Result<Self, FuzzyError> {
        let n = labels.len();
        if degrees.len() != n || degrees.iter().any(|row| row.len() != n) {
            return Err(FuzzyError::NotSquare {
                n,
                rows: degrees.len(),
            });
        }
        for (i, row) in degrees.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(FuzzyError::DegreeOutOfRange {
                        value: v,
                        row: i,
                        col: j,
                    });
                }
            }
        }
        Ok(Self { labels, degrees })
    }

    fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.eq_ignore_ascii_case(label))
    }

    /// Similarity degree between two labels.
    pub fn degree(&self, l1: &str, l2: &str) -> Result<f64, FuzzyError> {
        let i = self.index_of(l1).ok_or_else(|| FuzzyError::UnknownLabel {
            label: l1.to_string(),
        })?;
        let j = self.index_of(l2).ok_or_else(|| FuzzyError::UnknownLabel {
            label: l2.to_string(),
        })?;
        Ok(self.degrees[i][j])
    }

    /// Reflexivity and symmetry violations, one message per offending entry.
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let n = self.labels.len();
        for i in 0..n {
            if self.degrees[i][i] != 1.0 {
                problems.push(format!(
                    "similarity not reflexive: s({0},{0}) = {1}",
                    self.labels[i], self.degrees[i][i]
                ));
            }
            for j in (i + 1)..n {
                if self.degrees[i][j] != self.degrees[j][i] {
                    problems.push(format!(
                        "similarity not symmetric: s({},{}) = {} but s({},{}) = {}",
                        self.labels[i],
                        self.labels[j],
                        self.degrees[i][j],
                        self.labels[j],
                        self.labels[i],
                        self.degrees[j][i]
                    ));
                }
            }
        }
        problems
    }

    /// Greedy seriation: start from the first label and repeatedly append the
    /// most similar unused one. Used to warn when the declared order is not
    /// similarity-ascending.
    pub fn greedy_seriation(&self) -> Vec<usize> {
        let n = self.labels.len();
        if n == 0 {
            return Vec::new();
        }
        let mut order = vec![0usize];
        let mut used = vec![false; n];
        used[0] = true;
        while order.len() < n {
            let current = *order.last().expect("order is non-empty");
            let next = (0..n)
                .filter(|&j| !used[j])
                .max_by(|&a, &b| {
                    self.degrees[current][a]
                        .partial_cmp(&self.degrees[current][b])
                        .expect("degrees are finite")
                        .then(b.cmp(&a)) // tie -> lowest index
                })
                .expect("an unused label remains");
            used[next] = true;
            order.push(next);
        }
        order
    }
}

/// A cell value in a fuzzy relation: crisp, approximate, linguistic, or one
/// of the special markers.
#[derive(Debug, Clone, PartialEq)]
pub enum FuzzyValue {
    Crisp(f64),
    Approximate { value: f64, margin: f64 },
    Label(String),
    Unknown,
    Undefined,
    Null,
}

impl FuzzyValue {
    /// True for Unknown/Undefined/Null, which carry no encodable value.
    pub fn is_special(&self) -> bool {
        matches!(
            self,
            FuzzyValue::Unknown | FuzzyValue::Undefined | FuzzyValue::Null
        )
    }

    pub fn special_name(&self) -> Option<&'static str> {
        match self {
            FuzzyValue::Unknown => Some("UNKNOWN"),
            FuzzyValue::Undefined => Some("UNDEFINED"),
            FuzzyValue::Null => Some("NULL"),
            _ => None,
        }
    }
}
