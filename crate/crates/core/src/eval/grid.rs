//! Exhaustive hyperparameter search scored by LOOCV.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loocv::loocv;
use super::with_workers;
use crate::config::{key_values, GrmlrConfig, PARAMETER_NAMES};
use crate::dataset::Dataset;
use crate::error::{GrmlrError, Result};

/// Named axes, each a list of textual values for one config field.
/// The first axis varies slowest in the Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<(String, Vec<String>)>,
}

fn axis(name: &str, values: &[f64]) -> (String, Vec<String>) {
    (name.to_string(), values.iter().map(f64::to_string).collect())
}

impl Grid {
    /// 11 x 4 x 4 x 3 x 4 = 2112 configurations.
    pub fn default_grid() -> Self {
        let alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        Grid {
            axes: vec![
                axis("alpha", &alphas),
                axis("lambda_g", &[0.1, 1.0, 5.0, 10.0]),
                axis("lambda_l2", &[0.005, 0.01, 0.02, 0.05]),
                axis("tau", &[0.5, 0.6, 0.7]),
                axis("gamma", &[0.6, 0.7, 0.8, 0.9]),
            ],
        }
    }

    pub fn new(axes: Vec<(String, Vec<String>)>) -> Result<Self> {
        let g = Grid { axes };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (name, values)) in self.axes.iter().enumerate() {
            if !PARAMETER_NAMES.contains(&name.as_str()) {
                return Err(GrmlrError::UnknownParameter(name.clone()));
            }
            if values.is_empty() {
                return Err(GrmlrError::InvalidConfig {
                    key: name.clone(),
                    message: "grid axis is empty".into(),
                });
            }
            if self.axes[..i].iter().any(|(n, _)| n == name) {
                return Err(GrmlrError::InvalidConfig {
                    key: name.clone(),
                    message: "axis listed twice".into(),
                });
            }
        }
        Ok(())
    }

    /// Lines of `name = v1, v2, ...`.
    pub fn parse(text: &str) -> Result<Self> {
        let axes = key_values(text)?
            .into_iter()
            .map(|(k, v)| {
                let values = v
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                (k, values)
            })
            .collect();
        Grid::new(axes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GrmlrError::io(path, e))?;
        Grid::parse(&text)
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn without(&self, name: &str) -> Grid {
        Grid {
            axes: self.axes.iter().filter(|(n, _)| n != name).cloned().collect(),
        }
    }

    /// All configurations in Cartesian order, each starting from `base`.
    pub fn configs(&self, base: &GrmlrConfig) -> Result<Vec<GrmlrConfig>> {
        self.validate()?;
        let mut out = vec![base.clone()];
        for (name, values) in &self.axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for cfg in &out {
                for v in values {
                    let mut c = cfg.clone();
                    c.set(name, v)?;
                    next.push(c);
                }
            }
            out = next;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    /// Position in Cartesian order.
    pub index: usize,
    pub config: GrmlrConfig,
    pub accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Accuracy descending, then macro-F1 descending, then Cartesian index;
    /// failed entries last.
    pub entries: Vec<GridEntry>,
}

impl GridResult {
    pub fn best(&self) -> Option<&GridEntry> {
        self.entries.first().filter(|e| e.accuracy.is_some())
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.error.is_some()).count()
    }
}

fn rank(a: &GridEntry, b: &GridEntry) -> Ordering {
    let key = |e: &GridEntry| {
        (
            e.accuracy.unwrap_or(f64::NEG_INFINITY),
            e.macro_f1.unwrap_or(f64::NEG_INFINITY),
        )
    };
    let (aa, af) = key(a);
    let (ba, bf) = key(b);
    ba.total_cmp(&aa).then(bf.total_cmp(&af)).then(a.index.cmp(&b.index))
}

/// Sorts entries into the canonical result order.
pub fn sort_entries(mut entries: Vec<GridEntry>) -> GridResult {
    entries.sort_by(rank);
    GridResult { entries }
}

/// Runs LOOCV for every grid configuration on up to `workers` threads.
/// A configuration that errors is recorded as failed; the search continues.
pub fn grid_search(dataset: &Dataset, base: &GrmlrConfig, grid: &Grid, workers: usize) -> Result<GridResult> {
    dataset.require_stages()?;
    let configs = grid.configs(base)?;
    let entries = with_workers(workers, || {
        configs
            .into_par_iter()
            .enumerate()
            .map(|(index, config)| match loocv(dataset, &config) {
                Ok(r) => GridEntry {
                    index,
                    config,
                    accuracy: Some(r.accuracy),
                    macro_f1: Some(r.macro_f1),
                    error: None,
                },
                Err(e) => GridEntry {
                    index,
                    config,
                    accuracy: None,
                    macro_f1: None,
                    error: Some(e.to_string()),
                },
            })
            .collect::<Vec<_>>()
    });
    Ok(sort_entries(entries))
}
