//! Weighted cross-entropy with Frobenius and Laplacian penalties on `W`.
//!
//! ```text
//! loss = (1/n) sum_i s_i * -ln P(y_i | z_i) + l2 * ||W||_F^2 + g * Tr(W L W^T)
//! ```
//!
//! The bias enters neither penalty.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::compositional::FeatureMatrix;
use crate::dataset::StageLabels;
use crate::ecograph::EcologicalGraph;
use crate::error::{GrmlrError, Result};
use crate::model::GrmlrModel;

/// Row-wise softmax of `logits` with per-row max subtraction.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Everything the optimizer needs, borrowed from aligned training data.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub features: ArrayView2<'a, f64>,
    pub labels: &'a [usize],
    pub sample_weights: &'a [f64],
    pub laplacian: Option<ArrayView2<'a, f64>>,
    pub n_classes: usize,
    pub lambda_l2: f64,
    pub lambda_g: f64,
}

impl<'a> Objective<'a> {
    pub fn n_params(&self) -> usize {
        self.n_classes * (self.features.ncols() + 1)
    }

    pub fn split<'t>(&self, theta: &'t [f64]) -> (ArrayView2<'t, f64>, ArrayView1<'t, f64>) {
        let k = self.n_classes;
        let p = self.features.ncols();
        let w = ArrayView2::from_shape((k, p), &theta[..k * p]).expect("parameter length");
        let b = ArrayView1::from(&theta[k * p..]);
        (w, b)
    }

    /// Objective value; writes `[dW (row-major), db]` into `grad`.
    pub fn evaluate(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (w, b) = self.split(theta);
        let n = self.features.nrows();
        let k = self.n_classes;
        let p = self.features.ncols();

        let mut logits = self.features.dot(&w.t());
        logits += &b;

        let mut data = 0.0;
        // residual r_i = s_i (p_i - onehot(y_i)), scaled by 1/n below
        let mut residual = Array2::<f64>::zeros((n, k));
        for i in 0..n {
            let row = logits.row(i);
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut sum = 0.0;
            for c in 0..k {
                let e = (row[c] - max).exp();
                residual[(i, c)] = e;
                sum += e;
            }
            let lse = max + sum.ln();
            let y = self.labels[i];
            data += self.sample_weights[i] * (lse - row[y]);
            let s = self.sample_weights[i] / n as f64;
            for c in 0..k {
                residual[(i, c)] = s * residual[(i, c)] / sum;
            }
            residual[(i, y)] -= s;
        }
        data /= n as f64;

        let mut gw = residual.t().dot(&self.features);
        let gb = residual.sum_axis(Axis(0));

        let mut value = data;
        if self.lambda_l2 != 0.0 {
            value += self.lambda_l2 * w.iter().map(|v| v * v).sum::<f64>();
            gw.scaled_add(2.0 * self.lambda_l2, &w);
        }
        if let (Some(l), true) = (self.laplacian, self.lambda_g != 0.0) {
            let wl = w.dot(&l);
            value += self.lambda_g * (&w * &wl).sum();
            gw.scaled_add(2.0 * self.lambda_g, &wl);
        }

        grad[..k * p].copy_from_slice(gw.as_slice().expect("standard layout"));
        grad[k * p..].copy_from_slice(gb.as_slice().expect("standard layout"));
        value
    }
}

pub(crate) fn pack(weights: &Array2<f64>, bias: &Array1<f64>) -> Vec<f64> {
    weights.iter().chain(bias.iter()).copied().collect()
}

fn check_inputs(
    model: &GrmlrModel,
    features: &FeatureMatrix,
    labels: &StageLabels,
    graph: &EcologicalGraph,
    sample_weights: &[f64],
) -> Result<()> {
    model.check_taxa(&features.taxa_names)?;
    model.check_taxa(&graph.taxa_names)?;
    if labels.site_ids != features.site_ids {
        return Err(GrmlrError::Misalignment(
            "labels and features have different site order".into(),
        ));
    }
    if labels.label_set != model.label_set {
        return Err(GrmlrError::Misalignment("label set differs from the model's".into()));
    }
    if sample_weights.len() != features.n_sites() {
        return Err(GrmlrError::Misalignment(format!(
            "{} sample weights for {} sites",
            sample_weights.len(),
            features.n_sites()
        )));
    }
    Ok(())
}

fn objective<'a>(
    model: &GrmlrModel,
    features: &'a FeatureMatrix,
    labels: &'a StageLabels,
    graph: &'a EcologicalGraph,
    sample_weights: &'a [f64],
) -> Objective<'a> {
    Objective {
        features: features.values.view(),
        labels: &labels.labels,
        sample_weights,
        laplacian: Some(graph.laplacian.view()),
        n_classes: model.label_set.len(),
        lambda_l2: model.hyperparams.lambda_l2,
        lambda_g: model.hyperparams.lambda_g,
    }
}

/// Penalized loss of `model` on the given data, using the model's penalties.
pub fn loss(
    model: &GrmlrModel,
    features: &FeatureMatrix,
    labels: &StageLabels,
    graph: &EcologicalGraph,
    sample_weights: &[f64],
) -> Result<f64> {
    check_inputs(model, features, labels, graph, sample_weights)?;
    let obj = objective(model, features, labels, graph, sample_weights);
    let mut scratch = vec![0.0; obj.n_params()];
    Ok(obj.evaluate(&pack(&model.weights, &model.bias), &mut scratch))
}

/// Gradient of [`loss`] with respect to `(W, b)`.
pub fn loss_gradient(
    model: &GrmlrModel,
    features: &FeatureMatrix,
    labels: &StageLabels,
    graph: &EcologicalGraph,
    sample_weights: &[f64],
) -> Result<(Array2<f64>, Array1<f64>)> {
    check_inputs(model, features, labels, graph, sample_weights)?;
    let obj = objective(model, features, labels, graph, sample_weights);
    let mut grad = vec![0.0; obj.n_params()];
    obj.evaluate(&pack(&model.weights, &model.bias), &mut grad);
    let k = obj.n_classes;
    let p = features.n_taxa();
    let gb = Array1::from(grad.split_off(k * p));
    let gw = Array2::from_shape_vec((k, p), grad).expect("gradient shape");
    Ok((gw, gb))
}
