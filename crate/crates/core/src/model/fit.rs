use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsOptions, Termination};
use super::objective::Objective;
use super::GrmlrModel;
use crate::compositional::FeatureMatrix;
use crate::config::GrmlrConfig;
use crate::dataset::{AbundanceMatrix, Dataset, StageLabels};
use crate::ecograph::{build_graph, CoOccurrenceScope, EcologicalGraph};
use crate::error::{GrmlrError, Result};

/// A run that stops on the iteration cap above this gradient max-norm is
/// flagged as not converged.
pub const NON_CONVERGENCE_GRADIENT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub final_loss: f64,
    pub grad_max: f64,
    pub termination: Termination,
    pub converged: bool,
    /// Objective after every accepted step, starting from `W = 0, b = 0`.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: GrmlrModel,
    pub graph: EcologicalGraph,
    pub report: FitReport,
}

/// `s_i = n / (K * n_{y_i})`, so the weights sum to `n`.
pub fn class_balanced_weights(labels: &StageLabels) -> Result<Vec<f64>> {
    let counts = labels.class_counts();
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(GrmlrError::EmptyClass(labels.label_set[c].clone()));
    }
    let n = labels.len() as f64;
    let k = labels.n_classes() as f64;
    Ok(labels.labels.iter().map(|&y| n / (k * counts[y] as f64)).collect())
}

/// Minimizes the penalized loss on prepared features and graph from `W = 0, b = 0`.
pub fn fit_features(
    features: &FeatureMatrix,
    labels: &StageLabels,
    graph: &EcologicalGraph,
    sample_weights: &[f64],
    config: &GrmlrConfig,
) -> Result<(GrmlrModel, FitReport)> {
    let model = GrmlrModel::zeros(features.taxa_names.clone(), labels.label_set.clone(), config.clone());
    model.check_taxa(&graph.taxa_names)?;
    if labels.site_ids != features.site_ids {
        return Err(GrmlrError::Misalignment(
            "labels and features differ in site order".into(),
        ));
    }
    if sample_weights.len() != features.n_sites() {
        return Err(GrmlrError::Misalignment(
            "sample weight count differs from site count".into(),
        ));
    }
    let objective = Objective {
        features: features.values.view(),
        labels: &labels.labels,
        sample_weights,
        laplacian: (config.lambda_g != 0.0).then(|| graph.laplacian.view()),
        n_classes: labels.n_classes(),
        lambda_l2: config.lambda_l2,
        lambda_g: config.lambda_g,
    };
    let opts = LbfgsOptions {
        ftol: config.ftol,
        gtol: config.gtol,
        max_iters: config.max_iters,
        ..LbfgsOptions::default()
    };
    let result = minimize(|x, g| objective.evaluate(x, g), vec![0.0; objective.n_params()], &opts);

    let (w, b) = objective.split(&result.x);
    let model = GrmlrModel {
        weights: w.to_owned(),
        bias: b.to_owned(),
        ..model
    };
    let converged = !(matches!(
        result.termination,
        Termination::MaxIterations | Termination::LineSearchStalled
    ) && result.grad_max > NON_CONVERGENCE_GRADIENT);
    let report = FitReport {
        iterations: result.iterations,
        evaluations: result.evaluations,
        final_loss: result.value,
        grad_max: result.grad_max,
        termination: result.termination,
        converged,
        trace: result.trace,
    };
    Ok((model, report))
}

/// Fits on `train`. `co_sites` supplies the abundances used for the
/// co-occurrence source when the config asks for all-site scope.
pub fn fit_with_context(train: &Dataset, co_sites: Option<&AbundanceMatrix>, config: &GrmlrConfig) -> Result<Fitted> {
    config.validate()?;
    let labels = train.require_stages()?;
    if config.alpha > 0.0 && train.macrofauna.is_none() {
        return Err(GrmlrError::MissingMacrofauna);
    }
    let features = config.transform.apply(&train.abundances, config.epsilon);
    let co_features = match (config.co_occurrence_scope, co_sites) {
        (CoOccurrenceScope::All, Some(all)) => Some(config.transform.apply(all, config.epsilon)),
        _ => None,
    };
    let graph = build_graph(
        &features,
        train.macrofauna.as_ref(),
        co_features.as_ref(),
        config.tau,
        config.gamma,
        config.alpha,
    )?;
    let weights = if config.class_balanced {
        class_balanced_weights(labels)?
    } else {
        vec![1.0; labels.len()]
    };
    let (model, report) = fit_features(&features, labels, &graph, &weights, config)?;
    Ok(Fitted { model, graph, report })
}

/// Fits on every site of `dataset`.
pub fn fit(dataset: &Dataset, config: &GrmlrConfig) -> Result<Fitted> {
    fit_with_context(dataset, None, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::default_stages;

    fn labels(ys: &[usize]) -> StageLabels {
        StageLabels {
            site_ids: (0..ys.len()).map(|i| format!("s{i}")).collect(),
            label_set: default_stages(),
            labels: ys.to_vec(),
        }
    }

    #[test]
    fn balanced_weights_on_3_7_3() {
        let mut ys = vec![0; 3];
        ys.extend([1; 7]);
        ys.extend([2; 3]);
        let w = class_balanced_weights(&labels(&ys)).unwrap();
        assert!((w[0] - 13.0 / 9.0).abs() < 1e-15);
        assert!((w[5] - 13.0 / 21.0).abs() < 1e-15);
        assert!((w[12] - 13.0 / 9.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_classes_get_unit_weights() {
        let w = class_balanced_weights(&labels(&[0, 1, 2, 2, 1, 0])).unwrap();
        assert!(w.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn single_class_is_empty_class_error() {
        assert!(matches!(
            class_balanced_weights(&labels(&[1, 1, 1])),
            Err(GrmlrError::EmptyClass(c)) if c == "juvenile"
        ));
    }
}
