//! Graph-regularized multinomial logistic regression for small-sample
//! compositional data.
//!
//! The pipeline maps relative abundances to CLR features, builds a taxa graph
//! from Spearman correlations (against macrofauna counts and between taxa),
//! and fits a softmax classifier whose weights are smoothed over that graph
//! by a Laplacian penalty. Macrofauna counts are used only while training;
//! prediction needs abundances alone.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compositional;
pub mod config;
pub mod dataset;
pub mod ecograph;
pub mod error;
pub mod eval;
pub mod model;
pub mod rankstats;
pub mod rng;
pub mod synth;

pub use compositional::{clr_transform, FeatureMatrix, FeatureTransform};
pub use config::GrmlrConfig;
pub use dataset::{load_dataset, save_dataset, AbundanceMatrix, Dataset, MacrofaunaCounts, StageLabels};
pub use ecograph::{build_a_co, build_a_macro, export_heatmaps, fuse, CoOccurrenceScope, EcologicalGraph};
pub use error::{GrmlrError, Result};
pub use model::{class_balanced_weights, fit, loss, loss_gradient, Fitted, GrmlrModel};
pub use rankstats::spearman;
pub use synth::{synthesize, synthesize_dataset, SynthParams};
