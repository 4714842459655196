//! Summarization of fuzzy relational data.
//!
//! The pipeline mirrors how a fuzzy database gets condensed into a hierarchy
//! of concept summaries:
//!
//! 1. [`catalog`] parses an FSQL-subset `CREATE TABLE` script plus a label
//!    sidecar into a [`catalog::SchemaCatalog`].
//! 2. [`dataset`] ingests CSV rows whose cells may be crisp numbers,
//!    approximate values, linguistic labels, or special markers.
//! 3. [`encode`] assigns numeric codes to linguistic labels and builds the
//!    intermediate matrix fed to clustering.
//! 4. [`cluster`] runs fuzzy c-means per attribute, purifies memberships with
//!    an alpha-cut, and names each cluster with a linguistic descriptor.
//! 5. [`lattice`] apposes the per-attribute partitions into a fuzzy formal
//!    context and enumerates the concept-summary hierarchy.
//! 6. [`pipeline`] wires the stages together behind one configuration.

pub mod catalog;
pub mod cluster;
pub mod dataset;
pub mod encode;
pub mod fuzzy;
pub mod lattice;
pub mod pipeline;

pub use catalog::{AttributeDef, FuzzyClass, SchemaCatalog};
pub use cluster::{AttributePartition, FcmConfig, MembershipMatrix};
pub use encode::{CodeBook, CodeMatrix};
pub use fuzzy::{FuzzyValue, SimilarityRelation, TrapezoidLabel};
pub use lattice::{ConceptSummary, FuzzyContext, SummaryHierarchy};
pub use pipeline::{PipelineConfig, RunReport};
