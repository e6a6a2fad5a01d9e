//! The graph-regularized multinomial classifier.

mod fit;
pub mod lbfgs;
pub mod objective;

use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

pub use fit::{
    class_balanced_weights, fit, fit_features, fit_with_context, FitReport, Fitted, NON_CONVERGENCE_GRADIENT,
};
pub use objective::{loss, loss_gradient, softmax_rows, Objective};

use crate::compositional::FeatureMatrix;
use crate::config::GrmlrConfig;
use crate::dataset::{AbundanceMatrix, StageLabels};
use crate::error::{GrmlrError, Result};

pub const MODEL_FORMAT: &str = "grmlr-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct GrmlrModel {
    /// K x p.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub taxa_names: Vec<String>,
    pub label_set: Vec<String>,
    pub hyperparams: GrmlrConfig,
}

impl GrmlrModel {
    pub fn zeros(taxa_names: Vec<String>, label_set: Vec<String>, hyperparams: GrmlrConfig) -> Self {
        let (k, p) = (label_set.len(), taxa_names.len());
        GrmlrModel {
            weights: Array2::zeros((k, p)),
            bias: Array1::zeros(k),
            taxa_names,
            label_set,
            hyperparams,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.label_set.len()
    }

    pub fn n_taxa(&self) -> usize {
        self.taxa_names.len()
    }

    pub(crate) fn check_taxa(&self, taxa: &[String]) -> Result<()> {
        if taxa == self.taxa_names.as_slice() {
            return Ok(());
        }
        Err(GrmlrError::TaxaMismatch {
            missing: self.taxa_names.iter().filter(|t| !taxa.contains(t)).cloned().collect(),
            extra: taxa.iter().filter(|t| !self.taxa_names.contains(t)).cloned().collect(),
        })
    }

    /// Class probabilities, one row per site; rows sum to 1.
    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<Array2<f64>> {
        self.check_taxa(&features.taxa_names)?;
        let mut logits = features.values.dot(&self.weights.t());
        logits += &self.bias;
        Ok(softmax_rows(&logits))
    }

    /// Maps abundances to features with the model's own transform and pseudo-count.
    pub fn features(&self, abundances: &AbundanceMatrix) -> Result<FeatureMatrix> {
        let aligned = abundances.reorder_taxa(&self.taxa_names)?;
        Ok(self.hyperparams.transform.apply(&aligned, self.hyperparams.epsilon))
    }

    /// Stage labels and their probabilities for each site.
    pub fn predict_with_proba(&self, abundances: &AbundanceMatrix) -> Result<(StageLabels, Array2<f64>)> {
        let proba = self.predict_proba(&self.features(abundances)?)?;
        let labels = proba.axis_iter(Axis(0)).map(|row| argmax(&row.to_vec())).collect();
        Ok((
            StageLabels {
                site_ids: abundances.site_ids.clone(),
                label_set: self.label_set.clone(),
                labels,
            },
            proba,
        ))
    }

    /// Uses only microbial abundances; ties resolve to the lowest label index.
    pub fn predict(&self, abundances: &AbundanceMatrix) -> Result<StageLabels> {
        Ok(self.predict_with_proba(abundances)?.0)
    }

    /// Euclidean norm of each taxon's weight column (length p).
    pub fn coefficient_magnitudes(&self) -> Vec<f64> {
        self.weights.axis_iter(Axis(1)).map(|c| c.dot(&c).sqrt()).collect()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            label_set: self.label_set.clone(),
            taxa_names: self.taxa_names.clone(),
            weights: self.weights.axis_iter(Axis(0)).map(|r| r.to_vec()).collect(),
            bias: self.bias.to_vec(),
            config: self.hyperparams.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| GrmlrError::ModelFormat(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(GrmlrError::ModelFormat(format!("unexpected format `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(GrmlrError::ModelFormat(format!("unsupported version {}", file.version)));
        }
        let (k, p) = (file.label_set.len(), file.taxa_names.len());
        if file.weights.len() != k || file.weights.iter().any(|r| r.len() != p) || file.bias.len() != k {
            return Err(GrmlrError::ModelFormat(format!(
                "weights/bias do not match {k} classes x {p} taxa"
            )));
        }
        let weights = Array2::from_shape_vec((k, p), file.weights.concat()).expect("checked shape");
        let model = GrmlrModel {
            weights,
            bias: Array1::from(file.bias),
            taxa_names: file.taxa_names,
            label_set: file.label_set,
            hyperparams: file.config,
        };
        if model.weights.iter().chain(model.bias.iter()).any(|v| !v.is_finite()) {
            return Err(GrmlrError::ModelFormat("non-finite parameter".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| GrmlrError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GrmlrError::io(path, e))?;
        Self::from_json(&text)
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = c;
        }
    }
    best
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    label_set: Vec<String>,
    taxa_names: Vec<String>,
    /// Row-major, one row per class.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    config: GrmlrConfig,
}
