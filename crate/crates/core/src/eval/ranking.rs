use serde::{Deserialize, Serialize};

use crate::error::{GrmlrError, Result};
use crate::model::GrmlrModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonMagnitude {
    pub taxon: String,
    pub magnitude: f64,
}

/// Per-taxon L2 norm of the weight column, averaged over models and sorted
/// descending. Equal magnitudes keep taxa order.
pub fn coefficient_ranking(models: &[GrmlrModel]) -> Result<Vec<TaxonMagnitude>> {
    let first = models
        .first()
        .ok_or_else(|| GrmlrError::InvalidShape("no models to rank".into()))?;
    let p = first.n_taxa();
    let mut sums = vec![0.0; p];
    for m in models {
        first.check_taxa(&m.taxa_names)?;
        for (s, v) in sums.iter_mut().zip(m.coefficient_magnitudes()) {
            *s += v;
        }
    }
    let mut out: Vec<TaxonMagnitude> = first
        .taxa_names
        .iter()
        .zip(sums)
        .map(|(t, s)| TaxonMagnitude {
            taxon: t.clone(),
            magnitude: s / models.len() as f64,
        })
        .collect();
    out.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    Ok(out)
}

pub fn ranking_csv(ranking: &[TaxonMagnitude]) -> String {
    let mut s = String::from("rank,taxon,mean_magnitude\n");
    for (i, t) in ranking.iter().enumerate() {
        s.push_str(&format!("{},{},{}\n", i + 1, t.taxon, t.magnitude));
    }
    s
}
