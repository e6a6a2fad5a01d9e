use serde::{Deserialize, Serialize};

use super::metrics;
use crate::config::GrmlrConfig;
use crate::dataset::Dataset;
use crate::error::{GrmlrError, Result};
use crate::model::{fit_with_context, Fitted, GrmlrModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub site_id: String,
    pub true_label: String,
    /// `None` when the fold was skipped.
    pub predicted_label: Option<String>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_fold: Vec<FoldRecord>,
    /// Correct predictions over all sites; skipped folds count as wrong.
    pub accuracy: f64,
    pub macro_f1: f64,
    pub stage_correct: Vec<StageCount>,
    /// Sites whose training fold lost an entire class.
    pub skipped_folds: Vec<String>,
    pub non_converged_folds: usize,
    pub config: GrmlrConfig,
}

impl EvalReport {
    pub fn n_correct(&self) -> usize {
        self.stage_correct.iter().map(|s| s.correct).sum()
    }
}

/// Rows of every site except `held_out`.
pub fn training_rows(n: usize, held_out: usize) -> Vec<usize> {
    (0..n).filter(|&i| i != held_out).collect()
}

/// Fits the model for one LOOCV fold. Only the training sites' counts and
/// labels are visible; with all-site co-occurrence scope the held-out site's
/// abundances also enter the co-occurrence source.
pub fn fit_fold(dataset: &Dataset, held_out: usize, config: &GrmlrConfig) -> Result<Fitted> {
    let train = dataset.select_rows(&training_rows(dataset.n_sites(), held_out));
    fit_with_context(&train, Some(&dataset.abundances), config)
}

/// LOOCV returning each fold's fitted model (`None` for skipped folds).
pub fn loocv_with_models(dataset: &Dataset, config: &GrmlrConfig) -> Result<(EvalReport, Vec<Option<GrmlrModel>>)> {
    config.validate()?;
    let stages = dataset.require_stages()?;
    let n = dataset.n_sites();
    let k = stages.n_classes();
    if n < k + 1 {
        return Err(GrmlrError::TooFewSamples { needed: k + 1, got: n });
    }
    let counts = stages.class_counts();

    let mut per_fold = Vec::with_capacity(n);
    let mut models = Vec::with_capacity(n);
    let mut predicted = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    let mut non_converged = 0;
    for i in 0..n {
        let site = dataset.site_ids()[i].clone();
        let truth = stages.labels[i];
        if counts[truth] == 1 {
            skipped.push(site.clone());
            per_fold.push(FoldRecord {
                site_id: site,
                true_label: stages.label_set[truth].clone(),
                predicted_label: None,
                converged: true,
            });
            models.push(None);
            predicted.push(None);
            continue;
        }
        let fitted = fit_fold(dataset, i, config)?;
        let held = dataset.abundances.select_rows(&[i]);
        let y = fitted.model.predict(&held)?.labels[0];
        if !fitted.report.converged {
            non_converged += 1;
        }
        per_fold.push(FoldRecord {
            site_id: site,
            true_label: stages.label_set[truth].clone(),
            predicted_label: Some(stages.label_set[y].clone()),
            converged: fitted.report.converged,
        });
        models.push(Some(fitted.model));
        predicted.push(Some(y));
    }

    let truth = &stages.labels;
    let stage_correct = (0..k)
        .map(|c| StageCount {
            stage: stages.label_set[c].clone(),
            correct: (0..n).filter(|&i| truth[i] == c && predicted[i] == Some(c)).count(),
            total: counts[c],
        })
        .collect::<Vec<_>>();
    let correct: usize = stage_correct.iter().map(|s| s.correct).sum();
    let report = EvalReport {
        per_fold,
        accuracy: correct as f64 / n as f64,
        macro_f1: metrics::macro_f1_with_abstentions(truth, &predicted, k)?,
        stage_correct,
        skipped_folds: skipped,
        non_converged_folds: non_converged,
        config: config.clone(),
    };
    Ok((report, models))
}

pub fn loocv(dataset: &Dataset, config: &GrmlrConfig) -> Result<EvalReport> {
    Ok(loocv_with_models(dataset, config)?.0)
}
