//! Synthetic compositional datasets with planted block structure.
//!
//! Taxa are split into contiguous blocks. Each site draws a latent level per
//! block; sites of class `c >= 1` additionally have block `(c - 1) % n_blocks`
//! raised by `shift`. Per-taxon Gaussian noise is added in log space and rows
//! are closed to the simplex. Macrofauna category `m` follows the CLR mean of
//! block `m % n_blocks`, blended with independent noise according to
//! `coupling`, through a monotone map to counts.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::compositional::clr_rows;
use crate::dataset::{
    default_macrofauna_categories, default_stages, AbundanceMatrix, Dataset, MacrofaunaCounts, StageLabels,
};
use crate::error::{GrmlrError, Result};
use crate::rng::{stream_rng, Stream};

/// Counts are `round(COUNT_SCALE * exp(driver))`.
const COUNT_SCALE: f64 = 100_000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub n_blocks: usize,
    pub coupling: f64,
    pub noise: f64,
    pub seed: u64,
    /// Log-abundance lift applied to a class's signal block.
    pub shift: f64,
    /// Standard deviation of the per-site block level.
    pub block_sd: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n: 13,
            p: 26,
            k: 3,
            n_blocks: 4,
            coupling: 0.9,
            noise: 0.1,
            seed: 7,
            shift: 2.0,
            block_sd: 0.1,
        }
    }
}

impl SynthParams {
    pub fn block_of(&self, taxon: usize) -> usize {
        taxon * self.n_blocks / self.p
    }

    /// Block lifted by class `class`, or `None` for the baseline class 0.
    pub fn signal_block(&self, class: usize) -> Option<usize> {
        (class > 0).then(|| (class - 1) % self.n_blocks)
    }

    /// Whether the taxon lies in a block that some class shifts.
    pub fn is_signal_taxon(&self, taxon: usize) -> bool {
        let b = self.block_of(taxon);
        (1..self.k).any(|c| self.signal_block(c) == Some(b))
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GrmlrError::InvalidShape(m));
        if self.k < 2 {
            return bad(format!("need at least 2 classes, got {}", self.k));
        }
        if self.n < self.k {
            return bad(format!("n = {} is smaller than K = {}", self.n, self.k));
        }
        if self.n_blocks < 1 || self.p < self.n_blocks {
            return bad(format!("p = {} cannot hold {} blocks", self.p, self.n_blocks));
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return bad(format!("coupling {} outside [0, 1]", self.coupling));
        }
        if !(self.noise >= 0.0) || !(self.block_sd >= 0.0) || !self.shift.is_finite() {
            return bad("noise, block_sd must be >= 0 and shift finite".into());
        }
        Ok(())
    }
}

fn stage_names(k: usize) -> Vec<String> {
    if k == 3 {
        default_stages()
    } else {
        (1..=k).map(|c| format!("stage{c}")).collect()
    }
}

pub fn synthesize_dataset(
    n: usize,
    p: usize,
    k: usize,
    n_blocks: usize,
    coupling: f64,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    synthesize(&SynthParams {
        n,
        p,
        k,
        n_blocks,
        coupling,
        noise,
        seed,
        ..SynthParams::default()
    })
}

pub fn synthesize(params: &SynthParams) -> Result<Dataset> {
    params.validate()?;
    let SynthParams { n, p, k, n_blocks, .. } = *params;
    let mut rng = stream_rng(params.seed, Stream::Synthesis);
    let mut normal = move || -> f64 { rng.sample(StandardNormal) };

    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let base: Vec<f64> = (0..p).map(|_| 0.5 * normal()).collect();
    let levels = Array2::from_shape_fn((n, n_blocks), |_| params.block_sd * normal());
    let taxon_noise = Array2::from_shape_fn((n, p), |_| normal());
    let count_noise = Array2::from_shape_fn((n, 4), |_| normal());

    let mut log_abundance = Array2::zeros((n, p));
    for i in 0..n {
        let lifted = params.signal_block(labels[i]);
        for j in 0..p {
            let b = params.block_of(j);
            let lift = if lifted == Some(b) { params.shift } else { 0.0 };
            log_abundance[(i, j)] = base[j] + lift + levels[(i, b)] + params.noise * taxon_noise[(i, j)];
        }
    }
    let mut values = log_abundance;
    for mut row in values.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }

    // CLR block means, standardised across sites.
    let clr = clr_rows(&values, 0.0);
    let mut block_mean = Array2::<f64>::zeros((n, n_blocks));
    let mut sizes = vec![0usize; n_blocks];
    for j in 0..p {
        let b = params.block_of(j);
        sizes[b] += 1;
        for i in 0..n {
            block_mean[(i, b)] += clr[(i, j)];
        }
    }
    for (b, &size) in sizes.iter().enumerate() {
        let mut col = block_mean.column_mut(b);
        col.mapv_inplace(|v| v / size as f64);
        let mean = col.mean().unwrap_or(0.0);
        let sd = col.mapv(|v| (v - mean).powi(2)).mean().unwrap_or(0.0).sqrt();
        col.mapv_inplace(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 });
    }

    let categories = default_macrofauna_categories();
    let mut counts = Array2::<u64>::zeros((n, categories.len()));
    for i in 0..n {
        for c in 0..categories.len() {
            let driver =
                params.coupling * block_mean[(i, c % n_blocks)] + (1.0 - params.coupling) * count_noise[(i, c)];
            counts[(i, c)] = (COUNT_SCALE * driver.exp()).round() as u64;
        }
    }

    let site_ids: Vec<String> = (1..=n).map(|i| format!("site{i:02}")).collect();
    let taxa: Vec<String> = (1..=p).map(|j| format!("taxon{j:02}")).collect();
    let abundances = AbundanceMatrix::new(site_ids.clone(), taxa, values)?;
    let macrofauna = MacrofaunaCounts {
        site_ids: site_ids.clone(),
        category_names: categories,
        values: counts,
    };
    let stages = StageLabels {
        site_ids,
        label_set: stage_names(k),
        labels,
    };
    Dataset::new(
        abundances,
        Some(macrofauna),
        Some(stages),
        format!(
            "synthetic n={n} p={p} k={k} blocks={n_blocks} coupling={} noise={} seed={} shift={} block_sd={}",
            params.coupling, params.noise, params.seed, params.shift, params.block_sd
        ),
    )
}

/// Row sums of the abundance matrix, for closure checks.
pub fn row_sums(dataset: &Dataset) -> Array1<f64> {
    dataset.abundances.values.sum_axis(Axis(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rankstats::spearman;

    #[test]
    fn rows_close_and_shapes_match() {
        let ds = synthesize_dataset(13, 26, 3, 4, 0.9, 0.1, 7).unwrap();
        assert_eq!(ds.n_sites(), 13);
        assert_eq!(ds.n_taxa(), 26);
        assert!(row_sums(&ds).iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert_eq!(ds.stages.as_ref().unwrap().n_classes(), 3);
    }

    #[test]
    fn deterministic() {
        let a = synthesize_dataset(13, 26, 3, 4, 0.9, 0.1, 7).unwrap();
        let b = synthesize_dataset(13, 26, 3, 4, 0.9, 0.1, 7).unwrap();
        assert_eq!(a, b);
        let c = synthesize_dataset(13, 26, 3, 4, 0.9, 0.1, 8).unwrap();
        assert_ne!(a.abundances, c.abundances);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(synthesize_dataset(2, 26, 3, 4, 0.9, 0.1, 0).is_err());
        assert!(synthesize_dataset(13, 3, 3, 4, 0.9, 0.1, 0).is_err());
        assert!(synthesize_dataset(13, 26, 3, 0, 0.9, 0.1, 0).is_err());
        assert!(synthesize_dataset(13, 26, 3, 4, 1.5, 0.1, 0).is_err());
    }

    #[test]
    fn blocks_partition_taxa() {
        let p = SynthParams::default();
        let blocks: Vec<usize> = (0..p.p).map(|j| p.block_of(j)).collect();
        assert!(blocks.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        assert_eq!(*blocks.last().unwrap(), p.n_blocks - 1);
        assert_eq!((0..p.p).filter(|&j| p.is_signal_taxon(j)).count(), 13);
    }

    #[test]
    fn full_coupling_gives_perfect_rank_agreement() {
        for seed in 0..20 {
            for n_blocks in [2, 4] {
                let params = SynthParams {
                    n: 13,
                    n_blocks,
                    coupling: 1.0,
                    noise: 0.0,
                    seed,
                    ..SynthParams::default()
                };
                let ds = synthesize(&params).unwrap();
                let z = clr_rows(&ds.abundances.values, 0.0);
                let counts = ds.macrofauna.as_ref().unwrap().as_f64();
                for j in (0..params.p).filter(|&j| params.is_signal_taxon(j)) {
                    let best = (0..counts.ncols())
                        .map(|c| {
                            spearman(&z.column(j).to_vec(), &counts.column(c).to_vec())
                                .unwrap()
                                .abs()
                        })
                        .fold(0.0, f64::max);
                    assert!((best - 1.0).abs() < 1e-12, "seed {seed} taxon {j}: {best}");
                }
            }
        }
    }
}
