//! Ecological knowledge graph over taxa.
//!
//! Two adjacency sources are built from Spearman correlations and fused:
//!
//! * macro coupling: each taxon gets a profile of Spearman correlations against
//!   every macrofauna category; two taxa are linked by the cosine of their
//!   profiles when it reaches `tau`.
//! * co-occurrence: two taxa are linked by their pairwise Spearman correlation
//!   when it reaches `gamma`. Negative correlations never form edges.
//!
//! `A = alpha * A_macro + (1 - alpha) * A_co` and `L = D - A`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::compositional::FeatureMatrix;
use crate::dataset::MacrofaunaCounts;
use crate::error::{GrmlrError, Result};
use crate::rankstats::{average_ranks, spearman_ranked};

const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcologicalGraph {
    pub taxa_names: Vec<String>,
    pub a_macro: Array2<f64>,
    pub a_co: Array2<f64>,
    pub alpha: f64,
    pub adjacency: Array2<f64>,
    pub laplacian: Array2<f64>,
    pub tau: f64,
    pub gamma: f64,
}

impl EcologicalGraph {
    pub fn n_taxa(&self) -> usize {
        self.taxa_names.len()
    }

    /// A graph with no edges. Its Laplacian is the zero matrix.
    pub fn empty(taxa_names: Vec<String>) -> Self {
        let p = taxa_names.len();
        let zero = Array2::zeros((p, p));
        EcologicalGraph {
            taxa_names,
            a_macro: zero.clone(),
            a_co: zero.clone(),
            alpha: 0.0,
            adjacency: zero.clone(),
            laplacian: zero,
            tau: 0.0,
            gamma: 0.0,
        }
    }

    /// Wraps an explicit adjacency (treated as the co-occurrence source).
    pub fn from_adjacency(taxa_names: Vec<String>, adjacency: Array2<f64>) -> Result<Self> {
        let p = taxa_names.len();
        check_adjacency("adjacency", &adjacency)?;
        if adjacency.nrows() != p {
            return Err(GrmlrError::ShapeMismatch(format!(
                "{p} taxa but adjacency is {}x{}",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        let mut g = fuse(Array2::zeros((p, p)), adjacency, 0.0)?;
        g.taxa_names = taxa_names;
        Ok(g)
    }

    pub fn edge_count(&self) -> usize {
        let p = self.adjacency.nrows();
        (0..p)
            .flat_map(|u| ((u + 1)..p).map(move |v| (u, v)))
            .filter(|&(u, v)| self.adjacency[(u, v)] > 0.0)
            .count()
    }
}

fn ranked_columns(values: &Array2<f64>) -> Vec<Vec<f64>> {
    values
        .axis_iter(Axis(1))
        .map(|col| average_ranks(&col.to_vec()))
        .collect()
}

fn require_sites(n: usize) -> Result<()> {
    if n < 3 {
        return Err(GrmlrError::TooFewSamples { needed: 3, got: n });
    }
    Ok(())
}

/// Spearman profile of each taxon against each macrofauna category (p x k).
pub fn macro_profiles(features: &FeatureMatrix, macrofauna: &MacrofaunaCounts) -> Result<Array2<f64>> {
    if features.site_ids != macrofauna.site_ids {
        return Err(GrmlrError::Misalignment(
            "features and macrofauna counts have different site order".into(),
        ));
    }
    require_sites(features.n_sites())?;
    let taxa = ranked_columns(&features.values);
    let counts = ranked_columns(&macrofauna.as_f64());
    let mut profiles = Array2::zeros((taxa.len(), counts.len()));
    for (j, rt) in taxa.iter().enumerate() {
        for (c, rc) in counts.iter().enumerate() {
            profiles[(j, c)] = spearman_ranked(rt, rc);
        }
    }
    Ok(profiles)
}

pub fn build_a_macro(features: &FeatureMatrix, macrofauna: &MacrofaunaCounts, tau: f64) -> Result<Array2<f64>> {
    let profiles = macro_profiles(features, macrofauna)?;
    let p = profiles.nrows();
    let sq_norms: Vec<f64> = profiles.axis_iter(Axis(0)).map(|r| r.dot(&r)).collect();
    let mut a = Array2::zeros((p, p));
    for u in 0..p {
        for v in (u + 1)..p {
            if sq_norms[u] == 0.0 || sq_norms[v] == 0.0 {
                continue;
            }
            // identical profiles give exactly 1: x / sqrt(x * x) == 1 in IEEE arithmetic
            let cos = (profiles.row(u).dot(&profiles.row(v)) / (sq_norms[u] * sq_norms[v]).sqrt()).clamp(-1.0, 1.0);
            if cos >= tau {
                a[(u, v)] = cos;
                a[(v, u)] = cos;
            }
        }
    }
    Ok(a)
}

pub fn build_a_co(features: &FeatureMatrix, gamma: f64) -> Result<Array2<f64>> {
    require_sites(features.n_sites())?;
    let cols = ranked_columns(&features.values);
    let p = cols.len();
    let mut a = Array2::zeros((p, p));
    for u in 0..p {
        for v in (u + 1)..p {
            let rho = spearman_ranked(&cols[u], &cols[v]);
            if rho >= gamma && rho > 0.0 {
                a[(u, v)] = rho;
                a[(v, u)] = rho;
            }
        }
    }
    Ok(a)
}

fn check_adjacency(name: &'static str, a: &Array2<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(GrmlrError::ShapeMismatch(format!(
            "{name} is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let p = a.nrows();
    for u in 0..p {
        if a[(u, u)] != 0.0 {
            return Err(GrmlrError::AsymmetricInput(name));
        }
        for v in 0..p {
            let x = a[(u, v)];
            if !(x >= 0.0) || (x - a[(v, u)]).abs() > SYMMETRY_TOLERANCE {
                return Err(GrmlrError::AsymmetricInput(name));
            }
        }
    }
    Ok(())
}

/// `L = D - A` with `D_uu = sum_v A_uv`.
pub fn laplacian(adjacency: &Array2<f64>) -> Array2<f64> {
    let degree: Array1<f64> = adjacency.sum_axis(Axis(1));
    let mut l = -adjacency.clone();
    for (u, d) in degree.iter().enumerate() {
        l[(u, u)] += d;
    }
    l
}

pub fn fuse(a_macro: Array2<f64>, a_co: Array2<f64>, alpha: f64) -> Result<EcologicalGraph> {
    check_adjacency("a_macro", &a_macro)?;
    check_adjacency("a_co", &a_co)?;
    if a_macro.dim() != a_co.dim() {
        return Err(GrmlrError::ShapeMismatch(format!(
            "a_macro {:?} vs a_co {:?}",
            a_macro.dim(),
            a_co.dim()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(GrmlrError::InvalidConfig {
            key: "alpha".into(),
            message: format!("{alpha} outside [0, 1]"),
        });
    }
    let adjacency = if alpha == 0.0 {
        a_co.clone()
    } else if alpha == 1.0 {
        a_macro.clone()
    } else {
        &a_macro * alpha + &a_co * (1.0 - alpha)
    };
    let laplacian = laplacian(&adjacency);
    let p = adjacency.nrows();
    Ok(EcologicalGraph {
        taxa_names: (0..p).map(|j| format!("taxon_{j}")).collect(),
        a_macro,
        a_co,
        alpha,
        adjacency,
        laplacian,
        tau: 0.0,
        gamma: 0.0,
    })
}

/// Which sites the co-occurrence source is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoOccurrenceScope {
    /// Training sites only.
    #[default]
    Train,
    /// Every site, including held-out ones (features only, never labels or counts).
    All,
}

/// Builds both sources and fuses them.
///
/// `co_features` overrides the sites used for co-occurrence; by default the
/// training features are used. Macrofauna are only consulted when `alpha > 0`.
pub fn build_graph(
    features: &FeatureMatrix,
    macrofauna: Option<&MacrofaunaCounts>,
    co_features: Option<&FeatureMatrix>,
    tau: f64,
    gamma: f64,
    alpha: f64,
) -> Result<EcologicalGraph> {
    let p = features.n_taxa();
    let a_macro = if alpha > 0.0 {
        let m = macrofauna.ok_or(GrmlrError::MissingMacrofauna)?;
        build_a_macro(features, m, tau)?
    } else {
        Array2::zeros((p, p))
    };
    let a_co = if alpha < 1.0 {
        build_a_co(co_features.unwrap_or(features), gamma)?
    } else {
        Array2::zeros((p, p))
    };
    let mut g = fuse(a_macro, a_co, alpha)?;
    g.taxa_names = features.taxa_names.clone();
    g.tau = tau;
    g.gamma = gamma;
    Ok(g)
}

fn write_matrix(path: &Path, taxa: &[String], m: &Array2<f64>) -> Result<()> {
    let io = |e| GrmlrError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "taxon,{}", taxa.join(",")).map_err(io)?;
    for (u, row) in m.axis_iter(Axis(0)).enumerate() {
        write!(w, "{}", taxa[u]).map_err(io)?;
        for v in row {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a taxa-labelled square matrix written by [`export_heatmaps`].
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let file = File::open(path).map_err(|e| GrmlrError::io(path, e))?;
    let parse = |line: usize, message: String| GrmlrError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse(1, "empty file".into()))?
        .map_err(|e| GrmlrError::io(path, e))?;
    let taxa: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let p = taxa.len();
    let mut m = Array2::zeros((p, p));
    for (u, line) in lines.enumerate() {
        let line = line.map_err(|e| GrmlrError::io(path, e))?;
        if u >= p {
            return Err(parse(u + 2, "more rows than columns".into()));
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != p + 1 || cells[0] != taxa[u] {
            return Err(parse(u + 2, "row does not match header".into()));
        }
        for (v, c) in cells[1..].iter().enumerate() {
            m[(u, v)] = c.parse().map_err(|_| parse(u + 2, format!("`{c}` is not a number")))?;
        }
    }
    Ok((taxa, m))
}

/// Writes `a_macro.csv`, `a_co.csv` and `adjacency.csv` into `out_dir`.
pub fn export_heatmaps(graph: &EcologicalGraph, out_dir: &Path) -> Result<[PathBuf; 3]> {
    std::fs::create_dir_all(out_dir).map_err(|e| GrmlrError::io(out_dir, e))?;
    let paths = [
        out_dir.join("a_macro.csv"),
        out_dir.join("a_co.csv"),
        out_dir.join("adjacency.csv"),
    ];
    write_matrix(&paths[0], &graph.taxa_names, &graph.a_macro)?;
    write_matrix(&paths[1], &graph.taxa_names, &graph.a_co)?;
    write_matrix(&paths[2], &graph.taxa_names, &graph.adjacency)?;
    Ok(paths)
}
