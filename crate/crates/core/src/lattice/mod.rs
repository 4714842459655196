//! Fuzzy formal context and the concept-summary hierarchy.
//!
//! Concepts are one-sided: a crisp intent (a set of cluster descriptors)
//! paired with a fuzzy extent, where each record's degree is the minimum of
//! its incidences over the intent. Enumeration uses close-by-one with a
//! canonicity test over crisp intents; a brute-force enumerator over all
//! descriptor subsets doubles as the test oracle.

pub mod export;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::AttributePartition;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("context has no objects")]
    EmptyContext,
    #[error("incidence matrix is not rectangular")]
    NotRectangular,
    #[error("incidence degree {value} at ({row},{col}) outside [0,1]")]
    DegreeOutOfRange { value: f64, row: usize, col: usize },
    #[error("descriptor name collision: {name} (disambiguate before building the context)")]
    DescriptorCollision { name: String },
    #[error("duplicate object id {id}")]
    DuplicateObject { id: String },
    #[error("unknown descriptor {name}")]
    UnknownDescriptor { name: String },
    #[error(
        "{count} descriptors exceed the enumeration limit of {limit}; \
         raise the alpha cut or select fewer attributes"
    )]
    TooManyDescriptors { count: usize, limit: usize },
    #[error(
        "concept enumeration exceeded {budget} closure computations; \
         raise the alpha cut or select fewer attributes"
    )]
    ClosureBudgetExceeded { budget: u64 },
    #[error("brute force oracle is limited to {limit} descriptors, got {count}")]
    OracleTooLarge { count: usize, limit: usize },
    #[error("unknown attribute {name}")]
    UnknownAttribute { name: String },
    #[error("outer and inner attributes must differ")]
    AttributesMustDiffer,
    #[error("level {level} out of range, hierarchy has levels 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },
}

/// A context column: the cluster descriptor plus the database attribute the
/// cluster came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRef {
    pub name: String,
    pub source_attribute: String,
}

/// Fuzzy formal context: record ids against cluster descriptors, incidence
/// degrees in `[0, 1]` (absent entries are 0).
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyContext {
    pub objects: Vec<String>,
    pub descriptors: Vec<DescriptorRef>,
    /// `incidence[i][j]` is object `i`'s degree for descriptor `j`.
    pub incidence: Vec<Vec<f64>>,
}

impl FuzzyContext {
    pub fn new(
        objects: Vec<String>,
        descriptors: Vec<DescriptorRef>,
        incidence: Vec<Vec<f64>>,
    ) -> Result<Self, LatticeError> {
        if incidence.len() != objects.len() {
            return Err(LatticeError::NotRectangular);
        }
        for (i, row) in incidence.iter().enumerate() {
            if row.len() != descriptors.len() {
                return Err(LatticeError::NotRectangular);
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(LatticeError::DegreeOutOfRange { value: v, row: i, col: j });
                }
            }
        }
        for (i, d) in descriptors.iter().enumerate() {
            if descriptors[..i].iter().any(|e| e.name == d.name) {
                return Err(LatticeError::DescriptorCollision { name: d.name.clone() });
            }
        }
        for (i, id) in objects.iter().enumerate() {
            if objects[..i].contains(id) {
                return Err(LatticeError::DuplicateObject { id: id.clone() });
            }
        }
        Ok(Self { objects, descriptors, incidence })
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_descriptors(&self) -> usize {
        self.descriptors.len()
    }

    pub fn descriptor_index(&self, name: &str) -> Option<usize> {
        self.descriptors.iter().position(|d| d.name == name)
    }

    fn intent_bits(&self, names: &[&str]) -> Result<u64, LatticeError> {
        let mut bits = 0u64;
        for name in names {
            let j = self
                .descriptor_index(name)
                .ok_or_else(|| LatticeError::UnknownDescriptor { name: name.to_string() })?;
            bits |= 1 << j;
        }
        Ok(bits)
    }

    fn names_of(&self, bits: u64) -> Vec<String> {
        (0..self.n_descriptors())
            .filter(|j| bits & (1 << j) != 0)
            .map(|j| self.descriptors[j].name.clone())
            .collect()
    }

    /// Extent degrees for a crisp intent: the min incidence over the intent,
    /// 1 for every object when the intent is empty.
    fn extent_degrees(&self, intent: u64) -> Vec<f64> {
        (0..self.n_objects())
            .map(|i| {
                let mut degree = 1.0f64;
                for j in 0..self.n_descriptors() {
                    if intent & (1 << j) != 0 {
                        degree = degree.min(self.incidence[i][j]);
                    }
                }
                degree
            })
            .collect()
    }

    /// Descriptors whose column dominates the extent pointwise.
    fn closure_of_extent(&self, extent: &[f64]) -> u64 {
        let mut bits = 0u64;
        'cols: for j in 0..self.n_descriptors() {
            for (i, &degree) in extent.iter().enumerate() {
                if degree > self.incidence[i][j] {
                    continue 'cols;
                }
            }
            bits |= 1 << j;
        }
        bits
    }
}

/// Renames descriptors that appear in more than one partition to
/// `<ATTRIBUTE>.<name>`, so the apposed context has unique columns.
pub fn disambiguate_partitions(partitions: &mut [AttributePartition]) {
    let mut counts = std::collections::BTreeMap::new();
    for p in partitions.iter() {
        for c in &p.clusters {
            *counts.entry(c.descriptor.clone()).or_insert(0usize) += 1;
        }
    }
    for p in partitions.iter_mut() {
        let attribute = p.attribute.clone();
        for c in &mut p.clusters {
            if counts[&c.descriptor] > 1 {
                c.descriptor = format!("{attribute}.{}", c.descriptor);
            }
        }
    }
}

/// Apposes per-attribute partitions into one context over the shared record
/// universe. Records missing from any partition are dropped entirely and
/// returned alongside the context.
pub fn build_fuzzy_context(
    partitions: &[AttributePartition],
) -> Result<(FuzzyContext, Vec<String>), LatticeError> {
    let mut descriptors = Vec::new();
    for p in partitions {
        for c in &p.clusters {
            descriptors.push(DescriptorRef {
                name: c.descriptor.clone(),
                source_attribute: p.attribute.clone(),
            });
        }
    }

    let first = match partitions.first() {
        Some(p) => p,
        None => return Err(LatticeError::EmptyContext),
    };
    let mut objects = Vec::new();
    let mut dropped = Vec::new();
    for id in &first.memberships.row_ids {
        if partitions
            .iter()
            .all(|p| p.memberships.row_ids.contains(id))
        {
            objects.push(id.clone());
        } else {
            dropped.push(id.clone());
        }
    }
    for p in &partitions[1..] {
        for id in &p.memberships.row_ids {
            if !objects.contains(id) && !dropped.contains(id) {
                dropped.push(id.clone());
            }
        }
    }

    let mut incidence = Vec::with_capacity(objects.len());
    for id in &objects {
        let mut row = Vec::with_capacity(descriptors.len());
        for p in partitions {
            let i = p
                .memberships
                .row_ids
                .iter()
                .position(|r| r == id)
                .expect("id present in every partition");
            row.extend(p.memberships.degrees[i].iter().copied());
        }
        incidence.push(row);
    }

    let ctx = FuzzyContext::new(objects, descriptors, incidence)?;
    if ctx.n_objects() == 0 {
        return Err(LatticeError::EmptyContext);
    }
    Ok((ctx, dropped))
}

/// Fuzzy extent of a descriptor set: each object's degree is the minimum of
/// its incidences over the set (1 for the empty set); zero-degree objects
/// are omitted.
pub fn extent_of(
    ctx: &FuzzyContext,
    descriptors: &[&str],
) -> Result<Vec<(String, f64)>, LatticeError> {
    let bits = ctx.intent_bits(descriptors)?;
    let degrees = ctx.extent_degrees(bits);
    Ok(ctx
        .objects
        .iter()
        .zip(degrees)
        .filter(|(_, d)| *d > 0.0)
        .map(|(id, d)| (id.clone(), d))
        .collect())
}

/// Closure of a descriptor set: every descriptor whose column dominates the
/// set's extent pointwise. Extensive, monotone, and idempotent.
pub fn intent_closure(
    ctx: &FuzzyContext,
    descriptors: &[&str],
) -> Result<Vec<String>, LatticeError> {
    let bits = ctx.intent_bits(descriptors)?;
    let closed = ctx.closure_of_extent(&ctx.extent_degrees(bits));
    Ok(ctx.names_of(closed))
}

/// A concept summary: fuzzy extent (zero degrees omitted) plus closed crisp
/// intent.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSummary {
    pub intent: Vec<String>,
    pub extent: Vec<(String, f64)>,
}

impl ConceptSummary {
    /// Representativity: the sum of extent degrees, plus the support count.
    pub fn cardinality(&self) -> (f64, usize) {
        (self.extent.iter().map(|(_, d)| d).sum(), self.extent.len())
    }
}

/// Guards against exponential blowup during enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationLimits {
    pub max_descriptors: usize,
    pub max_closure_calls: u64,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_descriptors: 64,
            max_closure_calls: 1 << 20,
        }
    }
}

/// Internal concept: intent bitset plus full extent vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RawConcept {
    pub intent: u64,
    pub extent: Vec<f64>,
}

fn mask_below(j: usize) -> u64 {
    (1u64 << j) - 1
}

/// Close-by-one enumeration of every concept, in lexicographic CbO order,
/// without duplicates.
pub(crate) fn enumerate_raw(
    ctx: &FuzzyContext,
    limits: &EnumerationLimits,
) -> Result<Vec<RawConcept>, LatticeError> {
    if ctx.n_objects() == 0 {
        return Err(LatticeError::EmptyContext);
    }
    let m = ctx.n_descriptors();
    let limit = limits.max_descriptors.min(64);
    if m > limit {
        return Err(LatticeError::TooManyDescriptors { count: m, limit });
    }

    let mut budget = limits.max_closure_calls;
    let charge = |budget: &mut u64| -> Result<(), LatticeError> {
        if *budget == 0 {
            return Err(LatticeError::ClosureBudgetExceeded {
                budget: limits.max_closure_calls,
            });
        }
        *budget -= 1;
        Ok(())
    };

    charge(&mut budget)?;
    let root_extent = ctx.extent_degrees(0);
    let root_intent = ctx.closure_of_extent(&root_extent);

    let mut out = Vec::new();
    // (intent, extent, next attribute to try)
    let mut stack = vec![(root_intent, ctx.extent_degrees(root_intent), 0usize)];
    while let Some((intent, extent, start)) = stack.pop() {
        out.push(RawConcept { intent, extent: extent.clone() });

        // queue children in reverse so the smallest attribute pops first
        let mut children = Vec::new();
        for j in start..m {
            if intent & (1 << j) != 0 {
                continue;
            }
            let mut child_extent = extent.clone();
            for (i, degree) in child_extent.iter_mut().enumerate() {
                *degree = degree.min(ctx.incidence[i][j]);
            }
            charge(&mut budget)?;
            let child_intent = ctx.closure_of_extent(&child_extent);
            // canonicity: nothing below j may have been added
            if child_intent & mask_below(j) == intent & mask_below(j) {
                children.push((child_intent, child_extent, j + 1));
            }
        }
        while let Some(child) = children.pop() {
            stack.push(child);
        }
    }
    Ok(out)
}

fn to_summary(ctx: &FuzzyContext, raw: &RawConcept) -> ConceptSummary {
    ConceptSummary {
        intent: ctx.names_of(raw.intent),
        extent: ctx
            .objects
            .iter()
            .zip(&raw.extent)
            .filter(|(_, &d)| d > 0.0)
            .map(|(id, &d)| (id.clone(), d))
            .collect(),
    }
}

/// All concept summaries of the context, enumerated by close-by-one.
pub fn enumerate_concepts(
    ctx: &FuzzyContext,
    limits: &EnumerationLimits,
) -> Result<Vec<ConceptSummary>, LatticeError> {
    Ok(enumerate_raw(ctx, limits)?
        .iter()
        .map(|raw| to_summary(ctx, raw))
        .collect())
}

/// Test oracle: closes all `2^|M|` descriptor subsets and deduplicates.
/// Limited to 12 descriptors.
pub fn brute_force_concepts(ctx: &FuzzyContext) -> Result<Vec<ConceptSummary>, LatticeError> {
    if ctx.n_objects() == 0 {
        return Err(LatticeError::EmptyContext);
    }
    let m = ctx.n_descriptors();
    if m > 12 {
        return Err(LatticeError::OracleTooLarge { count: m, limit: 12 });
    }
    let mut closed: BTreeSet<u64> = BTreeSet::new();
    for subset in 0u64..(1 << m) {
        let extent = ctx.extent_degrees(subset);
        closed.insert(ctx.closure_of_extent(&extent));
    }
    Ok(closed
        .into_iter()
        .map(|intent| {
            to_summary(
                ctx,
                &RawConcept {
                    intent,
                    extent: ctx.extent_degrees(intent),
                },
            )
        })
        .collect())
}

fn is_strict_subset(a: u64, b: u64) -> bool {
    a != b && a & b == a
}

/// Hasse cover edges `(parent, child)` over indices into `concepts`:
/// the parent's intent is strictly contained in the child's with no concept
/// in between.
pub(crate) fn cover_relation_raw(concepts: &[RawConcept]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (p, parent) in concepts.iter().enumerate() {
        for (ch, child) in concepts.iter().enumerate() {
            if !is_strict_subset(parent.intent, child.intent) {
                continue;
            }
            let has_intermediate = concepts.iter().any(|mid| {
                is_strict_subset(parent.intent, mid.intent)
                    && is_strict_subset(mid.intent, child.intent)
            });
            if !has_intermediate {
                edges.push((p, ch));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Level of each concept: the length of the longest root-to-concept path in
/// the Hasse diagram; the root (minimal intent) sits at level 0.
pub(crate) fn assign_levels_raw(
    concepts: &[RawConcept],
    edges: &[(usize, usize)],
) -> Vec<usize> {
    let n = concepts.len();
    // process in intent-size order: every parent precedes its children
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (concepts[i].intent.count_ones(), concepts[i].intent));
    let mut level = vec![0usize; n];
    for &node in &order {
        for &(p, ch) in edges {
            if ch == node {
                level[node] = level[node].max(level[p] + 1);
            }
        }
    }
    level
}

/// One node of the exported hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptNode {
    pub intent: Vec<String>,
    pub extent: Vec<(String, f64)>,
    pub card: f64,
    pub count: usize,
    pub level: usize,
}

/// The leveled hierarchy of every concept summary, with Hasse cover edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryHierarchy {
    pub nodes: Vec<ConceptNode>,
    /// `(parent index, child index)` cover pairs.
    pub edges: Vec<(usize, usize)>,
}

impl SummaryHierarchy {
    /// Enumerates concepts, computes the cover relation, and assigns levels.
    pub fn build(ctx: &FuzzyContext, limits: &EnumerationLimits) -> Result<Self, LatticeError> {
        let raw = enumerate_raw(ctx, limits)?;
        let edges = cover_relation_raw(&raw);
        let levels = assign_levels_raw(&raw, &edges);
        let nodes = raw
            .iter()
            .zip(&levels)
            .map(|(concept, &level)| {
                let summary = to_summary(ctx, concept);
                let (card, count) = summary.cardinality();
                ConceptNode {
                    intent: summary.intent,
                    extent: summary.extent,
                    card,
                    count,
                    level,
                }
            })
            .collect();
        Ok(Self { nodes, edges })
    }

    /// Index of the unique minimal-intent root.
    pub fn root(&self) -> usize {
        self.nodes
            .iter()
            .enumerate()
            .find(|(_, n)| n.level == 0)
            .map(|(i, _)| i)
            .expect("a non-empty hierarchy has a root")
    }

    pub fn max_level(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// Concept indices grouped by level, `result[k]` holding level `k`.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.max_level() + 1];
        for (i, node) in self.nodes.iter().enumerate() {
            out[node.level].push(i);
        }
        out
    }

    /// The concept summaries at one level.
    pub fn level_concepts(&self, level: usize) -> Result<Vec<&ConceptNode>, LatticeError> {
        let max = self.max_level();
        if level > max {
            return Err(LatticeError::LevelOutOfRange { level, max });
        }
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.level == level)
            .collect())
    }
}

/// A nested line diagram: the outer attribute's lattice with, inside each
/// outer concept, the inner attribute's lattice restricted to that concept's
/// extent support.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedDiagram {
    pub outer_attribute: String,
    pub inner_attribute: String,
    pub outer: SummaryHierarchy,
    /// One inner hierarchy per outer node; `None` when the outer extent has
    /// empty support.
    pub cells: Vec<Option<SummaryHierarchy>>,
}

fn restrict_columns(ctx: &FuzzyContext, attribute: &str) -> Result<FuzzyContext, LatticeError> {
    let cols: Vec<usize> = ctx
        .descriptors
        .iter()
        .enumerate()
        .filter(|(_, d)| d.source_attribute.eq_ignore_ascii_case(attribute))
        .map(|(j, _)| j)
        .collect();
    if cols.is_empty() {
        return Err(LatticeError::UnknownAttribute { name: attribute.to_string() });
    }
    FuzzyContext::new(
        ctx.objects.clone(),
        cols.iter().map(|&j| ctx.descriptors[j].clone()).collect(),
        ctx.incidence
            .iter()
            .map(|row| cols.iter().map(|&j| row[j]).collect())
            .collect(),
    )
}

fn restrict_objects(ctx: &FuzzyContext, keep: &[usize]) -> FuzzyContext {
    FuzzyContext {
        objects: keep.iter().map(|&i| ctx.objects[i].clone()).collect(),
        descriptors: ctx.descriptors.clone(),
        incidence: keep.iter().map(|&i| ctx.incidence[i].clone()).collect(),
    }
}

/// Builds the nested diagram of two database attributes present in the
/// context.
pub fn nested_diagram(
    ctx: &FuzzyContext,
    outer_attr: &str,
    inner_attr: &str,
    limits: &EnumerationLimits,
) -> Result<NestedDiagram, LatticeError> {
    if outer_attr.eq_ignore_ascii_case(inner_attr) {
        return Err(LatticeError::AttributesMustDiffer);
    }
    let outer_ctx = restrict_columns(ctx, outer_attr)?;
    let inner_ctx = restrict_columns(ctx, inner_attr)?;
    let outer = SummaryHierarchy::build(&outer_ctx, limits)?;

    let mut cells = Vec::with_capacity(outer.nodes.len());
    for node in &outer.nodes {
        let support: Vec<usize> = ctx
            .objects
            .iter()
            .enumerate()
            .filter(|(_, id)| node.extent.iter().any(|(e, _)| e == *id))
            .map(|(i, _)| i)
            .collect();
        if support.is_empty() {
            cells.push(None);
        } else {
            let cell_ctx = restrict_objects(&inner_ctx, &support);
            cells.push(Some(SummaryHierarchy::build(&cell_ctx, limits)?));
        }
    }
    Ok(NestedDiagram {
        outer_attribute: outer_attr.to_string(),
        inner_attribute: inner_attr.to_string(),
        outer,
        cells,
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// A 6-record, 5-descriptor context over two source attributes
    /// (salary, age) with fractional degrees and a graded lattice:
    /// 16 concepts across levels 0..5, level sizes (1,4,4,4,2,1).
    ///
    /// Descriptor order: miserable, modest, comfortable, young, adult.
    pub fn employee_style_context() -> FuzzyContext {
        let descriptors = [
            ("miserable", "SALARY"),
            ("modest", "SALARY"),
            ("comfortable", "SALARY"),
            ("young", "AGE"),
            ("adult", "AGE"),
        ]
        .iter()
        .map(|(name, attr)| DescriptorRef {
            name: name.to_string(),
            source_attribute: attr.to_string(),
        })
        .collect();
        let incidence = vec![
            vec![0.0, 0.8, 0.8, 0.4, 0.8], // t1
            vec![0.8, 0.4, 0.0, 0.8, 0.4], // t2
            vec![0.4, 0.4, 0.0, 0.0, 0.8], // t3
            vec![0.0, 0.7, 0.7, 0.7, 0.0], // t4
            vec![0.0, 0.5, 0.0, 0.6, 0.0], // t5
            vec![0.3, 0.5, 0.0, 0.5, 0.3], // t6
        ];
        let objects = (1..=6).map(|i| format!("t{i}")).collect();
        FuzzyContext::new(objects, descriptors, incidence).unwrap()
    }

    /// Deterministic random contexts with degrees on the grid
    /// {0, .25, .5, .75, 1}.
    pub fn random_grid_context(seed: u64, n_objects: usize, n_descriptors: usize) -> FuzzyContext {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let incidence: Vec<Vec<f64>> = (0..n_objects)
            .map(|_| {
                (0..n_descriptors)
                    .map(|_| (next() % 5) as f64 * 0.25)
                    .collect()
            })
            .collect();
        FuzzyContext::new(
            (0..n_objects).map(|i| format!("t{i}")).collect(),
            (0..n_descriptors)
                .map(|j| DescriptorRef {
                    name: format!("m{j}"),
                    source_attribute: format!("A{j}"),
                })
                .collect(),
            incidence,
        )
        .unwrap()
    }

    pub fn sorted_for_comparison(mut concepts: Vec<ConceptSummary>) -> Vec<ConceptSummary> {
        concepts.sort_by(|a, b| {
            (a.intent.len(), &a.intent).cmp(&(b.intent.len(), &b.intent))
        });
        concepts
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::cluster::{ClusterInfo, MembershipMatrix};
    use proptest::prelude::*;

    fn limits() -> EnumerationLimits {
        EnumerationLimits::default()
    }

    fn partition(
        attribute: &str,
        descriptors: &[&str],
        ids: &[&str],
        degrees: Vec<Vec<f64>>,
    ) -> AttributePartition {
        AttributePartition {
            attribute: attribute.to_string(),
            clusters: descriptors
                .iter()
                .enumerate()
                .map(|(id, d)| ClusterInfo {
                    id,
                    centroid_level: id as f64,
                    descriptor: d.to_string(),
                })
                .collect(),
            memberships: MembershipMatrix {
                row_ids: ids.iter().map(|s| s.to_string()).collect(),
                n_clusters: descriptors.len(),
                degrees,
                purified: true,
                alpha: Some(0.2),
            },
            iterations: 1,
        }
    }

    #[test]
    fn apposition_size_is_sum_of_cluster_counts() {
        let ids = ["t1", "t2", "t3", "t4", "t5", "t6"];
        let p1 = partition("AGE", &["young", "old"], &ids, vec![vec![0.5, 0.5]; 6]);
        let p2 = partition(
            "SALARY",
            &["low", "mid", "high"],
            &ids,
            vec![vec![0.2, 0.5, 0.3]; 6],
        );
        let (ctx, dropped) = build_fuzzy_context(&[p1, p2]).unwrap();
        assert_eq!(ctx.n_objects(), 6);
        assert_eq!(ctx.n_descriptors(), 5);
        assert!(dropped.is_empty());
        assert_eq!(ctx.incidence[0], vec![0.5, 0.5, 0.2, 0.5, 0.3]);
    }

    #[test]
    fn single_partition_context_is_its_membership_matrix() {
        let ids = ["a", "b"];
        let degrees = vec![vec![0.9, 0.1], vec![0.3, 0.7]];
        let p = partition("AGE", &["young", "old"], &ids, degrees.clone());
        let (ctx, _) = build_fuzzy_context(&[p]).unwrap();
        assert_eq!(ctx.incidence, degrees);
    }

    #[test]
    fn records_missing_from_one_partition_are_dropped_and_reported() {
        let p1 = partition("AGE", &["young"], &["a", "b", "c"], vec![vec![1.0]; 3]);
        let p2 = partition("SALARY", &["low"], &["a", "c"], vec![vec![1.0]; 2]);
        let (ctx, dropped) = build_fuzzy_context(&[p1, p2]).unwrap();
        assert_eq!(ctx.objects, vec!["a", "c"]);
        assert_eq!(dropped, vec!["b"]);
    }

    #[test]
    fn descriptor_collision_is_rejected() {
        let p1 = partition("AGE", &["young"], &["a"], vec![vec![1.0]]);
        let p2 = partition("SALARY", &["young"], &["a"], vec![vec![1.0]]);
        let err = build_fuzzy_context(&[p1, p2]).unwrap_err();
        assert!(matches!(err, LatticeError::DescriptorCollision { .. }));
    }

    #[test]
    fn disambiguation_qualifies_colliding_descriptors() {
        let mut ps = vec![
            partition("AGE", &["cluster-1"], &["a"], vec![vec![1.0]]),
            partition("SALARY", &["cluster-1", "low"], &["a"], vec![vec![0.5, 0.5]]),
        ];
        disambiguate_partitions(&mut ps);
        assert_eq!(ps[0].clusters[0].descriptor, "AGE.cluster-1");
        assert_eq!(ps[1].clusters[0].descriptor, "SALARY.cluster-1");
        assert_eq!(ps[1].clusters[1].descriptor, "low");
        assert!(build_fuzzy_context(&ps).is_ok());
    }

    #[test]
    fn extent_is_min_composition() {
        // t1 carries 0.5 for modest and 0.6 for young
        let ctx = FuzzyContext::new(
            vec!["t1".into()],
            vec![
                DescriptorRef { name: "modest".into(), source_attribute: "SALARY".into() },
                DescriptorRef { name: "young".into(), source_attribute: "AGE".into() },
            ],
            vec![vec![0.5, 0.6]],
        )
        .unwrap();
        let extent = extent_of(&ctx, &["modest", "young"]).unwrap();
        assert_eq!(extent, vec![("t1".to_string(), 0.5)]);
    }

    #[test]
    fn empty_intent_gives_every_object_at_one() {
        let ctx = employee_style_context();
        let extent = extent_of(&ctx, &[]).unwrap();
        assert_eq!(extent.len(), 6);
        assert!(extent.iter().all(|(_, d)| *d == 1.0));
    }

    #[test]
    fn all_zero_column_gives_empty_extent() {
        let mut ctx = random_grid_context(1, 4, 3);
        for row in &mut ctx.incidence {
            row[1] = 0.0;
        }
        let extent = extent_of(&ctx, &["m1"]).unwrap();
        assert!(extent.is_empty());
        let err = extent_of(&ctx, &["nope"]).unwrap_err();
        assert!(matches!(err, LatticeError::UnknownDescriptor { .. }));
    }

    #[test]
    fn closure_absorbs_duplicate_columns() {
        let ctx = FuzzyContext::new(
            vec!["a".into(), "b".into()],
            vec![
                DescriptorRef { name: "m1".into(), source_attribute: "X".into() },
                DescriptorRef { name: "m2".into(), source_attribute: "Y".into() },
            ],
            vec![vec![0.5, 0.5], vec![0.25, 0.25]],
        )
        .unwrap();
        let closed = intent_closure(&ctx, &["m1"]).unwrap();
        assert_eq!(closed, vec!["m1", "m2"]);
    }

    #[test]
    fn full_descriptor_set_is_closed() {
        let ctx = employee_style_context();
        let all: Vec<&str> = ctx.descriptors.iter().map(|d| d.name.as_str()).collect();
        let closed = intent_closure(&ctx, &all).unwrap();
        assert_eq!(closed.len(), 5);
    }

    #[test]
    fn employee_style_fixture_matches_oracle_and_grading() {
        let ctx = employee_style_context();
        let enumerated = sorted_for_comparison(enumerate_concepts(&ctx, &limits()).unwrap());
        let oracle = sorted_for_comparison(brute_force_concepts(&ctx).unwrap());
        assert_eq!(enumerated, oracle);

        // oracle-verified shape: 16 concepts, one per level pattern 1,4,4,4,2,1
        assert_eq!(enumerated.len(), 16);
        let hierarchy = SummaryHierarchy::build(&ctx, &limits()).unwrap();
        let level_sizes: Vec<usize> =
            hierarchy.levels().iter().map(|l| l.len()).collect();
        assert_eq!(level_sizes, vec![1, 4, 4, 4, 2, 1]);

        // graded: level equals intent size throughout
        for node in &hierarchy.nodes {
            assert_eq!(node.level, node.intent.len());
        }

        // root holds every record at degree 1
        let root = &hierarchy.nodes[hierarchy.root()];
        assert!(root.intent.is_empty());
        assert_eq!(root.extent.len(), 6);
        assert!(root.extent.iter().all(|(_, d)| *d == 1.0));

        // the deepest concept carries the full intent over an empty extent
        let top = hierarchy.nodes.iter().find(|n| n.level == 5).unwrap();
        assert_eq!(top.intent.len(), 5);
        assert!(top.extent.is_empty());

        // {modest, young} is closed and sits at level 2
        let mod_young = hierarchy
            .nodes
            .iter()
            .find(|n| n.intent == vec!["modest".to_string(), "young".to_string()])
            .expect("modest+young concept exists");
        assert_eq!(mod_young.level, 2);
    }

    #[test]
    fn identity_incidence_yields_n_plus_two_concepts() {
        let n = 4;
        let incidence: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let ctx = FuzzyContext::new(
            (0..n).map(|i| format!("t{i}")).collect(),
            (0..n)
                .map(|j| DescriptorRef {
                    name: format!("m{j}"),
                    source_attribute: "A".into(),
                })
                .collect(),
            incidence,
        )
        .unwrap();
        let enumerated = sorted_for_comparison(enumerate_concepts(&ctx, &limits()).unwrap());
        let oracle = sorted_for_comparison(brute_force_concepts(&ctx).unwrap());
        assert_eq!(enumerated, oracle);
        assert_eq!(enumerated.len(), n + 2);
    }

    #[test]
    fn all_zero_incidence_collapses_to_two_concepts() {
        let ctx = FuzzyContext::new(
            vec!["a".into(), "b".into()],
            vec![
                DescriptorRef { name: "m0".into(), source_attribute: "A".into() },
                DescriptorRef { name: "m1".into(), source_attribute: "B".into() },
            ],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let concepts = sorted_for_comparison(enumerate_concepts(&ctx, &limits()).unwrap());
        let oracle = sorted_for_comparison(brute_force_concepts(&ctx).unwrap());
        assert_eq!(concepts, oracle);
        assert_eq!(concepts.len(), 2);
        assert!(concepts[0].intent.is_empty());
        assert_eq!(concepts[1].intent.len(), 2);
        assert!(concepts[1].extent.is_empty());
    }

    #[test]
    fn context_without_descriptors_has_single_root_concept() {
        let ctx = FuzzyContext::new(
            vec!["a".into(), "b".into()],
            vec![],
            vec![vec![], vec![]],
        )
        .unwrap();
        let concepts = enumerate_concepts(&ctx, &limits()).unwrap();
        assert_eq!(concepts.len(), 1);
        assert!(concepts[0].intent.is_empty());
        assert_eq!(concepts[0].extent.len(), 2);
    }

    #[test]
    fn enumeration_order_is_deterministic_and_duplicate_free() {
        let ctx = random_grid_context(77, 8, 6);
        let a = enumerate_concepts(&ctx, &limits()).unwrap();
        let b = enumerate_concepts(&ctx, &limits()).unwrap();
        assert_eq!(a, b);
        let mut intents: Vec<&Vec<String>> = a.iter().map(|c| &c.intent).collect();
        let before = intents.len();
        intents.sort();
        intents.dedup();
        assert_eq!(before, intents.len());
    }

    #[test]
    fn descriptor_limit_guard_triggers() {
        let ctx = random_grid_context(5, 3, 8);
        let tight = EnumerationLimits { max_descriptors: 6, max_closure_calls: 1 << 20 };
        let err = enumerate_concepts(&ctx, &tight).unwrap_err();
        assert!(matches!(err, LatticeError::TooManyDescriptors { count: 8, limit: 6 }));
        let starved = EnumerationLimits { max_descriptors: 64, max_closure_calls: 3 };
        let err = enumerate_concepts(&ctx, &starved).unwrap_err();
        assert!(matches!(err, LatticeError::ClosureBudgetExceeded { .. }));
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn chain_of_nested_intents_has_two_edges() {
        // column supports nest: m0 ⊇ m1 ⊇ m2 -> chain lattice
        let ctx = FuzzyContext::new(
            vec!["a".into(), "b".into(), "c".into()],
            (0..3)
                .map(|j| DescriptorRef {
                    name: format!("m{j}"),
                    source_attribute: format!("A{j}"),
                })
                .collect(),
            vec![
                vec![1.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.0],
                vec![1.0, 0.0, 0.0],
            ],
        )
        .unwrap();
        let hierarchy = SummaryHierarchy::build(&ctx, &limits()).unwrap();
        // closed intents: {m0}, {m0,m1}, {m0,m1,m2}
        assert_eq!(hierarchy.nodes.len(), 3);
        assert_eq!(hierarchy.edges.len(), 2);
    }

    #[test]
    fn root_connects_to_minimal_closed_non_root_intents() {
        let ctx = employee_style_context();
        let hierarchy = SummaryHierarchy::build(&ctx, &limits()).unwrap();
        let root = hierarchy.root();
        let direct: BTreeSet<&Vec<String>> = hierarchy
            .edges
            .iter()
            .filter(|(p, _)| *p == root)
            .map(|(_, ch)| &hierarchy.nodes[*ch].intent)
            .collect();
        let level1: BTreeSet<&Vec<String>> = hierarchy
            .nodes
            .iter()
            .filter(|n| n.level == 1)
            .map(|n| &n.intent)
            .collect();
        assert_eq!(direct, level1);
    }

    #[test]
    fn levels_match_longest_chain_oracle() {
        for seed in 0..20u64 {
            let ctx = random_grid_context(seed, 6, 5);
            let raw = enumerate_raw(&ctx, &limits()).unwrap();
            let edges = cover_relation_raw(&raw);
            let levels = assign_levels_raw(&raw, &edges);

            // oracle: longest strict-containment chain from the root,
            // computed over all pairs rather than cover edges
            let mut order: Vec<usize> = (0..raw.len()).collect();
            order.sort_by_key(|&i| raw[i].intent.count_ones());
            let mut chain = vec![0usize; raw.len()];
            for &i in &order {
                for &j in &order {
                    if is_strict_subset(raw[j].intent, raw[i].intent) {
                        chain[i] = chain[i].max(chain[j] + 1);
                    }
                }
            }
            assert_eq!(levels, chain, "seed {seed}");
        }
    }

    #[test]
    fn cover_edges_match_transitive_reduction_oracle() {
        for seed in 20..35u64 {
            let ctx = random_grid_context(seed, 6, 5);
            let raw = enumerate_raw(&ctx, &limits()).unwrap();
            let edges = cover_relation_raw(&raw);

            // oracle: all strict-subset pairs minus those with a midpoint
            let mut expected = Vec::new();
            for p in 0..raw.len() {
                for ch in 0..raw.len() {
                    if is_strict_subset(raw[p].intent, raw[ch].intent)
                        && !(0..raw.len()).any(|m| {
                            is_strict_subset(raw[p].intent, raw[m].intent)
                                && is_strict_subset(raw[m].intent, raw[ch].intent)
                        })
                    {
                        expected.push((p, ch));
                    }
                }
            }
            expected.sort_unstable();
            assert_eq!(edges, expected, "seed {seed}");
        }
    }

    #[test]
    fn cardinality_sums_extent_degrees() {
        let z = ConceptSummary {
            intent: vec!["modest".into(), "young".into()],
            extent: vec![
                ("t1".into(), 0.5),
                ("t5".into(), 0.5),
                ("t6".into(), 0.5),
            ],
        };
        assert_eq!(z.cardinality(), (1.5, 3));

        let empty = ConceptSummary { intent: vec![], extent: vec![] };
        assert_eq!(empty.cardinality(), (0.0, 0));

        let full = ConceptSummary {
            intent: vec![],
            extent: (0..4).map(|i| (format!("t{i}"), 1.0)).collect(),
        };
        assert_eq!(full.cardinality(), (4.0, 4));
    }

    #[test]
    fn hierarchy_edges_grow_intent_and_shrink_extent() {
        let ctx = employee_style_context();
        let raw = enumerate_raw(&ctx, &limits()).unwrap();
        let edges = cover_relation_raw(&raw);
        for &(p, ch) in &edges {
            assert!(is_strict_subset(raw[p].intent, raw[ch].intent));
            for (a, b) in raw[p].extent.iter().zip(&raw[ch].extent) {
                assert!(b <= a, "extent must shrink pointwise");
            }
            let card = |c: &RawConcept| c.extent.iter().sum::<f64>();
            assert!(card(&raw[ch]) <= card(&raw[p]) + 1e-12);
        }
    }

    #[test]
    fn query_by_level_partitions_the_concepts() {
        let ctx = employee_style_context();
        let h = SummaryHierarchy::build(&ctx, &limits()).unwrap();
        assert_eq!(h.level_concepts(0).unwrap().len(), 1);
        let total: usize = (0..=h.max_level())
            .map(|k| h.level_concepts(k).unwrap().len())
            .sum();
        assert_eq!(total, h.nodes.len());
        assert!(matches!(
            h.level_concepts(99),
            Err(LatticeError::LevelOutOfRange { level: 99, max: 5 })
        ));
    }

    #[test]
    fn nested_diagram_has_one_cell_per_outer_concept() {
        let ctx = employee_style_context();
        let nested = nested_diagram(&ctx, "SALARY", "AGE", &limits()).unwrap();
        assert_eq!(nested.cells.len(), nested.outer.nodes.len());

        // the outer root supports every object, so its cell equals the
        // full inner-attribute lattice
        let root = nested.outer.root();
        let inner_full =
            SummaryHierarchy::build(&restrict_columns(&ctx, "AGE").unwrap(), &limits()).unwrap();
        assert_eq!(nested.cells[root].as_ref().unwrap(), &inner_full);
    }

    #[test]
    fn nested_diagram_rejects_equal_attributes() {
        let ctx = employee_style_context();
        assert!(matches!(
            nested_diagram(&ctx, "AGE", "AGE", &limits()),
            Err(LatticeError::AttributesMustDiffer)
        ));
        assert!(matches!(
            nested_diagram(&ctx, "AGE", "BONUS", &limits()),
            Err(LatticeError::UnknownAttribute { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        /// closure(closure(B)) = closure(B), B ⊆ closure(B), monotone.
        #[test]
        fn closure_laws_hold(seed in any::<u64>(), b1 in 0u64..64, b2 in 0u64..64) {
            let ctx = random_grid_context(seed, 5, 6);
            let all: Vec<&str> = ctx.descriptors.iter().map(|d| d.name.as_str()).collect();
            let pick = |bits: u64| -> Vec<&str> {
                all.iter().enumerate().filter(|(j, _)| bits & (1 << j) != 0).map(|(_, n)| *n).collect()
            };
            let b_small: Vec<&str> = pick(b1 & b2);
            let b_big: Vec<&str> = pick(b1 | b2);

            let once = intent_closure(&ctx, &pick(b1)).unwrap();
            let once_refs: Vec<&str> = once.iter().map(String::as_str).collect();
            let twice = intent_closure(&ctx, &once_refs).unwrap();
            prop_assert_eq!(&once, &twice, "idempotence");

            for name in pick(b1) {
                prop_assert!(once.iter().any(|n| n == name), "extensive");
            }

            let small = intent_closure(&ctx, &b_small).unwrap();
            let big = intent_closure(&ctx, &b_big).unwrap();
            for name in &small {
                prop_assert!(big.contains(name), "monotone");
            }
        }

        /// B1 ⊆ B2 implies extent(B2) ≤ extent(B1) pointwise.
        #[test]
        fn galois_antitone_law(seed in any::<u64>(), b1 in 0u64..64, extra in 0u64..64) {
            let ctx = random_grid_context(seed, 5, 6);
            let small = b1 & !extra;
            let big = b1 | extra;
            let d_small = ctx.extent_degrees(small);
            let d_big = ctx.extent_degrees(big);
            for (a, b) in d_small.iter().zip(&d_big) {
                prop_assert!(b <= a);
            }
        }

        /// Close-by-one agrees with the brute-force oracle.
        #[test]
        fn enumeration_matches_oracle(seed in any::<u64>()) {
            let ctx = random_grid_context(seed, 8, 6);
            let fast = sorted_for_comparison(enumerate_concepts(&ctx, &EnumerationLimits::default()).unwrap());
            let slow = sorted_for_comparison(brute_force_concepts(&ctx).unwrap());
            prop_assert_eq!(fast, slow);
        }

        /// Intent grows and extent shrinks along every cover edge; card is
        /// monotone downward; the root is unique and holds everything at 1.
        #[test]
        fn hierarchy_monotonicity(seed in any::<u64>()) {
            let ctx = random_grid_context(seed, 6, 5);
            let raw = enumerate_raw(&ctx, &EnumerationLimits::default()).unwrap();
            let edges = cover_relation_raw(&raw);
            for &(p, ch) in &edges {
                prop_assert!(is_strict_subset(raw[p].intent, raw[ch].intent));
                for (a, b) in raw[p].extent.iter().zip(&raw[ch].extent) {
                    prop_assert!(b <= a);
                }
                let card_p: f64 = raw[p].extent.iter().sum();
                let card_c: f64 = raw[ch].extent.iter().sum();
                prop_assert!(card_c <= card_p + 1e-12);
            }
            let levels = assign_levels_raw(&raw, &edges);
            let roots: Vec<usize> = (0..raw.len()).filter(|&i| levels[i] == 0).collect();
            prop_assert_eq!(roots.len(), 1);
            prop_assert!(ctx.extent_degrees(raw[roots[0]].intent).iter().all(|&d| d == 1.0));
        }
    }
}
