use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loocv::loocv;
use super::with_workers;
use crate::config::GrmlrConfig;
use crate::dataset::Dataset;
use crate::error::{GrmlrError, Result};
use crate::rng::{stream_rng, Stream};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationReport {
    pub observed_accuracy: f64,
    pub permuted_accuracies: Vec<f64>,
    pub p_value: f64,
    pub seed: u64,
}

/// Add-one estimate `(1 + #{permuted >= observed}) / (1 + B)`.
pub fn permutation_p_value(observed: f64, permuted: &[f64]) -> f64 {
    let exceed = permuted.iter().filter(|&&a| a >= observed).count();
    (1 + exceed) as f64 / (1 + permuted.len()) as f64
}

/// `b` seeded label permutations, each an independent shuffle of the
/// original labels.
pub fn label_permutations(labels: &[usize], b: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = stream_rng(seed, Stream::Permutation);
    (0..b)
        .map(|_| {
            let mut perm = labels.to_vec();
            perm.shuffle(&mut rng);
            perm
        })
        .collect()
}

/// Reruns full LOOCV under each label permutation; abundances and counts
/// stay fixed.
pub fn permutation_test(
    dataset: &Dataset,
    config: &GrmlrConfig,
    b: usize,
    seed: u64,
    workers: usize,
) -> Result<PermutationReport> {
    if b == 0 {
        return Err(GrmlrError::InvalidConfig {
            key: "B".into(),
            message: "need at least one permutation".into(),
        });
    }
    let labels = &dataset.require_stages()?.labels;
    let observed = loocv(dataset, config)?.accuracy;
    let perms = label_permutations(labels, b, seed);
    let permuted = with_workers(workers, || {
        perms
            .par_iter()
            .map(|perm| Ok(loocv(&dataset.with_labels(perm.clone())?, config)?.accuracy))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(PermutationReport {
        observed_accuracy: observed,
        p_value: permutation_p_value(observed, &permuted),
        permuted_accuracies: permuted,
        seed,
    })
}
