//! Centered log-ratio transform from the simplex to the zero-sum hyperplane.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::AbundanceMatrix;

/// Model-space features, one row per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub site_ids: Vec<String>,
    pub taxa_names: Vec<String>,
    pub values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn n_sites(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_taxa(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        FeatureMatrix {
            site_ids: rows.iter().map(|&i| self.site_ids[i].clone()).collect(),
            taxa_names: self.taxa_names.clone(),
            values: self.values.select(Axis(0), rows),
        }
    }
}

/// How abundances are mapped to model features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureTransform {
    #[default]
    Clr,
    /// Raw relative abundances, used by the no-CLR ablation.
    Raw,
}

impl FeatureTransform {
    pub fn apply(self, abundances: &AbundanceMatrix, epsilon: f64) -> FeatureMatrix {
        match self {
            FeatureTransform::Clr => clr_transform(abundances, epsilon),
            FeatureTransform::Raw => FeatureMatrix {
                site_ids: abundances.site_ids.clone(),
                taxa_names: abundances.taxa_names.clone(),
                values: abundances.values.clone(),
            },
        }
    }
}

/// `z_ij = ln(x_ij + eps) - mean_k ln(x_ik + eps)`.
///
/// The pseudo-count is added to every component, not only to zeros.
pub fn clr_transform(abundances: &AbundanceMatrix, epsilon: f64) -> FeatureMatrix {
    FeatureMatrix {
        site_ids: abundances.site_ids.clone(),
        taxa_names: abundances.taxa_names.clone(),
        values: clr_rows(&abundances.values, epsilon),
    }
}

/// Row-wise CLR on an arbitrary non-negative matrix. Rows need not be closed.
pub fn clr_rows(values: &Array2<f64>, epsilon: f64) -> Array2<f64> {
    let mut out = values.mapv(|x| (x + epsilon).ln());
    for mut row in out.axis_iter_mut(Axis(0)) {
        let mean = row.mean().unwrap_or(0.0);
        row.mapv_inplace(|v| v - mean);
    }
    out
}
