//! Component ablations and the alpha sensitivity sweep.

use serde::{Deserialize, Serialize};

use super::grid::{grid_search, Grid};
use super::loocv::{loocv, EvalReport};
use crate::compositional::FeatureTransform;
use crate::config::GrmlrConfig;
use crate::dataset::Dataset;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// `lambda_g = 0`.
    WithoutGraph,
    /// `alpha = 0`: co-occurrence edges only.
    WithoutMacro,
    /// `alpha = 1`: macro-coupling edges only.
    WithoutCo,
    /// Raw relative abundances instead of CLR features.
    WithoutClr,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::WithoutGraph,
        Ablation::WithoutMacro,
        Ablation::WithoutCo,
        Ablation::WithoutClr,
    ];

    pub fn apply(self, config: &GrmlrConfig) -> GrmlrConfig {
        let mut c = config.clone();
        match self {
            Ablation::WithoutGraph => c.lambda_g = 0.0,
            Ablation::WithoutMacro => c.alpha = 0.0,
            Ablation::WithoutCo => c.alpha = 1.0,
            Ablation::WithoutClr => c.transform = FeatureTransform::Raw,
        }
        c
    }

    pub fn label(self) -> &'static str {
        match self {
            Ablation::WithoutGraph => "w/o graph",
            Ablation::WithoutMacro => "w/o a_macro",
            Ablation::WithoutCo => "w/o a_co",
            Ablation::WithoutClr => "w/o clr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub full: EvalReport,
    pub variants: Vec<(Ablation, EvalReport)>,
}

impl AblationReport {
    pub fn variant(&self, which: Ablation) -> &EvalReport {
        &self
            .variants
            .iter()
            .find(|(a, _)| *a == which)
            .expect("all variants are run")
            .1
    }
}

/// LOOCV for the full configuration and each single-component removal.
pub fn ablate(dataset: &Dataset, config: &GrmlrConfig) -> Result<AblationReport> {
    let full = loocv(dataset, config)?;
    let variants = Ablation::ALL
        .iter()
        .map(|&a| Ok((a, loocv(dataset, &a.apply(config))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport { full, variants })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub best_accuracy: f64,
    pub best_macro_f1: f64,
    pub best_config: Option<GrmlrConfig>,
    pub evaluated: usize,
}

pub fn default_alphas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// For each alpha, grid-searches every other axis of `grid` and keeps the
/// best LOOCV accuracy.
pub fn alpha_sweep(
    dataset: &Dataset,
    base: &GrmlrConfig,
    grid: &Grid,
    alphas: &[f64],
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    let rest = grid.without("alpha");
    alphas
        .iter()
        .map(|&alpha| {
            let mut axes = vec![("alpha".to_string(), vec![alpha.to_string()])];
            axes.extend(rest.axes.iter().cloned());
            let result = grid_search(dataset, base, &Grid::new(axes)?, workers)?;
            let best = result.best();
            Ok(SweepPoint {
                alpha,
                best_accuracy: best.and_then(|e| e.accuracy).unwrap_or(0.0),
                best_macro_f1: best.and_then(|e| e.macro_f1).unwrap_or(0.0),
                best_config: best.map(|e| e.config.clone()),
                evaluated: result.entries.len(),
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("alpha,best_accuracy,best_macro_f1\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.alpha, p.best_accuracy, p.best_macro_f1));
    }
    s
}
