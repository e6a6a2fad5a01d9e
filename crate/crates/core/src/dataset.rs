//! Site-level observation tables: microbial abundances, macrofauna counts and
//! stage labels, plus CSV ingestion and export.
//!
//! The abundance file is the site-order authority. Macrofauna and label rows
//! are reordered to match it on load.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{GrmlrError, Result};

/// Abundance rows must close to 1 within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_STAGES: [&str; 3] = ["juvenile", "adult", "dead"];
pub const DEFAULT_MACROFAUNA: [&str; 4] = ["dead", "adult", "juvenile", "clam"];

pub fn default_stages() -> Vec<String> {
    DEFAULT_STAGES.iter().map(|s| s.to_string()).collect()
}

pub fn default_macrofauna_categories() -> Vec<String> {
    DEFAULT_MACROFAUNA.iter().map(|s| s.to_string()).collect()
}

/// Relative abundances, one row per site and one column per taxon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbundanceMatrix {
    pub site_ids: Vec<String>,
    pub taxa_names: Vec<String>,
    pub values: Array2<f64>,
}

impl AbundanceMatrix {
    /// Builds a matrix after checking shape, non-negativity and row closure.
    pub fn new(site_ids: Vec<String>, taxa_names: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let m = AbundanceMatrix {
            site_ids,
            taxa_names,
            values,
        };
        m.validate("abundances")?;
        Ok(m)
    }

    fn validate(&self, file: &str) -> Result<()> {
        if self.values.nrows() != self.site_ids.len() || self.values.ncols() != self.taxa_names.len() {
            return Err(GrmlrError::InvalidShape(format!(
                "abundance matrix is {}x{} but has {} site ids and {} taxa",
                self.values.nrows(),
                self.values.ncols(),
                self.site_ids.len(),
                self.taxa_names.len()
            )));
        }
        for (i, row) in self.values.axis_iter(Axis(0)).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(GrmlrError::NegativeAbundance {
                        file: file.to_string(),
                        site: self.site_ids[i].clone(),
                        column: self.taxa_names[j].clone(),
                        value: v,
                    });
                }
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(GrmlrError::RowSumViolation {
                    file: file.to_string(),
                    site: self.site_ids[i].clone(),
                    sum,
                });
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_taxa(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        AbundanceMatrix {
            site_ids: rows.iter().map(|&i| self.site_ids[i].clone()).collect(),
            taxa_names: self.taxa_names.clone(),
            values: self.values.select(Axis(0), rows),
        }
    }

    /// Reorders columns to match `taxa`, matching by name.
    pub fn reorder_taxa(&self, taxa: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = self
            .taxa_names
            .iter()
            .enumerate()
            .map(|(j, t)| (t.as_str(), j))
            .collect();
        let missing: Vec<String> = taxa
            .iter()
            .filter(|t| !index.contains_key(t.as_str()))
            .cloned()
            .collect();
        let extra: Vec<String> = self.taxa_names.iter().filter(|t| !taxa.contains(t)).cloned().collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(GrmlrError::TaxaMismatch { missing, extra });
        }
        let cols: Vec<usize> = taxa.iter().map(|t| index[t.as_str()]).collect();
        Ok(AbundanceMatrix {
            site_ids: self.site_ids.clone(),
            taxa_names: taxa.to_vec(),
            values: self.values.select(Axis(1), &cols),
        })
    }
}

/// Macrofauna counts per site and category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacrofaunaCounts {
    pub site_ids: Vec<String>,
    pub category_names: Vec<String>,
    pub values: Array2<u64>,
}

impl MacrofaunaCounts {
    pub fn n_categories(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        MacrofaunaCounts {
            site_ids: rows.iter().map(|&i| self.site_ids[i].clone()).collect(),
            category_names: self.category_names.clone(),
            values: self.values.select(Axis(0), rows),
        }
    }

    /// Counts as reals, for correlation.
    pub fn as_f64(&self) -> Array2<f64> {
        self.values.mapv(|c| c as f64)
    }
}

/// Stage labels stored as indices into an ordered label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLabels {
    pub site_ids: Vec<String>,
    pub label_set: Vec<String>,
    pub labels: Vec<usize>,
}

impl StageLabels {
    pub fn n_classes(&self) -> usize {
        self.label_set.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_set.len()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    pub fn name(&self, i: usize) -> &str {
        &self.label_set[self.labels[i]]
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        StageLabels {
            site_ids: rows.iter().map(|&i| self.site_ids[i].clone()).collect(),
            label_set: self.label_set.clone(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Self {
        StageLabels {
            site_ids: self.site_ids.clone(),
            label_set: self.label_set.clone(),
            labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub abundances: AbundanceMatrix,
    pub macrofauna: Option<MacrofaunaCounts>,
    pub stages: Option<StageLabels>,
    pub provenance: String,
}

impl Dataset {
    /// Assembles a dataset, checking that every present table shares the
    /// abundance site order.
    pub fn new(
        abundances: AbundanceMatrix,
        macrofauna: Option<MacrofaunaCounts>,
        stages: Option<StageLabels>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if let Some(m) = &macrofauna {
            if m.site_ids != abundances.site_ids {
                return Err(GrmlrError::Misalignment(
                    "macrofauna site order differs from abundances".into(),
                ));
            }
        }
        if let Some(s) = &stages {
            if s.site_ids != abundances.site_ids {
                return Err(GrmlrError::Misalignment(
                    "label site order differs from abundances".into(),
                ));
            }
        }
        Ok(Dataset {
            abundances,
            macrofauna,
            stages,
            provenance: provenance.into(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.abundances.n_sites()
    }

    pub fn n_taxa(&self) -> usize {
        self.abundances.n_taxa()
    }

    pub fn site_ids(&self) -> &[String] {
        &self.abundances.site_ids
    }

    pub fn require_stages(&self) -> Result<&StageLabels> {
        self.stages.as_ref().ok_or(GrmlrError::MissingLabels)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Dataset {
            abundances: self.abundances.select_rows(rows),
            macrofauna: self.macrofauna.as_ref().map(|m| m.select_rows(rows)),
            stages: self.stages.as_ref().map(|s| s.select_rows(rows)),
            provenance: self.provenance.clone(),
        }
    }

    /// Same dataset with the stage label indices replaced.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        let stages = self.require_stages()?.with_labels(labels);
        Ok(Dataset {
            stages: Some(stages),
            ..self.clone()
        })
    }
}

/// Loads with the default stage set (juvenile, adult, dead).
pub fn load_dataset(
    abundance_path: &Path,
    macrofauna_path: Option<&Path>,
    labels_path: Option<&Path>,
) -> Result<Dataset> {
    load_dataset_with_stages(abundance_path, macrofauna_path, labels_path, &default_stages())
}

pub fn load_dataset_with_stages(
    abundance_path: &Path,
    macrofauna_path: Option<&Path>,
    labels_path: Option<&Path>,
    stage_set: &[String],
) -> Result<Dataset> {
    let abundances = read_abundances(abundance_path)?;
    let order = site_index(&abundances.site_ids);
    let macrofauna = match macrofauna_path {
        Some(p) => Some(read_macrofauna(p, &abundances.site_ids, &order, abundance_path)?),
        None => None,
    };
    let stages = match labels_path {
        Some(p) => Some(read_labels(p, stage_set, &abundances.site_ids, &order, abundance_path)?),
        None => None,
    };
    let provenance = std::iter::once(Some(abundance_path))
        .chain([macrofauna_path, labels_path])
        .flatten()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(";");
    Dataset::new(abundances, macrofauna, stages, provenance)
}

fn site_index(sites: &[String]) -> HashMap<String, usize> {
    sites.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| GrmlrError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse_err = |line: usize, message: String| GrmlrError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("site_id") {
        return Err(parse_err(1, "first header column must be `site_id`".into()));
    }
    let mut rows = Vec::new();
    let mut seen = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if let Some(prev) = seen.insert(fields[0].clone(), line) {
            return Err(parse_err(
                line,
                format!("duplicate site `{}` (first seen on line {prev})", fields[0]),
            ));
        }
        rows.push((line, fields));
    }
    Ok(RawTable { header, rows })
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

pub fn read_abundances(path: &Path) -> Result<AbundanceMatrix> {
    let table = read_table(path)?;
    let taxa: Vec<String> = table.header[1..].to_vec();
    if taxa.is_empty() {
        return Err(GrmlrError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no taxon columns".into(),
        });
    }
    let mut sites = Vec::with_capacity(table.rows.len());
    let mut values = Array2::zeros((table.rows.len(), taxa.len()));
    for (i, (line, fields)) in table.rows.iter().enumerate() {
        sites.push(fields[0].clone());
        for (j, raw) in fields[1..].iter().enumerate() {
            values[(i, j)] = raw.parse::<f64>().map_err(|_| GrmlrError::Parse {
                path: path.to_path_buf(),
                line: *line,
                message: format!("column `{}`: `{raw}` is not a number", taxa[j]),
            })?;
        }
    }
    let m = AbundanceMatrix {
        site_ids: sites,
        taxa_names: taxa,
        values,
    };
    m.validate(&file_label(path))?;
    Ok(m)
}

fn aligned_rows(
    table: &RawTable,
    path: &Path,
    sites: &[String],
    order: &HashMap<String, usize>,
    abundance_path: &Path,
) -> Result<Vec<usize>> {
    let mut slot = vec![None; sites.len()];
    for (r, (_, fields)) in table.rows.iter().enumerate() {
        match order.get(&fields[0]) {
            Some(&i) => slot[i] = Some(r),
            None => {
                return Err(GrmlrError::MissingSite {
                    file: file_label(path),
                    site: fields[0].clone(),
                    other: file_label(abundance_path),
                })
            }
        }
    }
    slot.iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| GrmlrError::MissingSite {
                file: file_label(abundance_path),
                site: sites[i].clone(),
                other: file_label(path),
            })
        })
        .collect()
}

fn read_macrofauna(
    path: &Path,
    sites: &[String],
    order: &HashMap<String, usize>,
    abundance_path: &Path,
) -> Result<MacrofaunaCounts> {
    let table = read_table(path)?;
    let categories: Vec<String> = table.header[1..].to_vec();
    let rows = aligned_rows(&table, path, sites, order, abundance_path)?;
    let mut values = Array2::zeros((sites.len(), categories.len()));
    for (i, &r) in rows.iter().enumerate() {
        let fields = &table.rows[r].1;
        for (c, raw) in fields[1..].iter().enumerate() {
            values[(i, c)] = raw.parse::<u64>().map_err(|_| GrmlrError::NegativeCount {
                file: file_label(path),
                site: sites[i].clone(),
                column: categories[c].clone(),
                value: raw.clone(),
            })?;
        }
    }
    Ok(MacrofaunaCounts {
        site_ids: sites.to_vec(),
        category_names: categories,
        values,
    })
}

fn read_labels(
    path: &Path,
    stage_set: &[String],
    sites: &[String],
    order: &HashMap<String, usize>,
    abundance_path: &Path,
) -> Result<StageLabels> {
    let table = read_table(path)?;
    if table.header.len() != 2 || table.header[1] != "stage" {
        return Err(GrmlrError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `site_id,stage`".into(),
        });
    }
    let rows = aligned_rows(&table, path, sites, order, abundance_path)?;
    let labels = rows
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let raw = table.rows[r].1[1].to_lowercase();
            stage_set
                .iter()
                .position(|s| s.to_lowercase() == raw)
                .ok_or_else(|| GrmlrError::UnknownLabel {
                    file: file_label(path),
                    site: sites[i].clone(),
                    label: table.rows[r].1[1].clone(),
                    expected: stage_set.to_vec(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StageLabels {
        site_ids: sites.to_vec(),
        label_set: stage_set.to_vec(),
        labels,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| GrmlrError::io(path, e))
}

/// Writes a site-indexed real matrix with a `site_id` header.
pub fn write_real_table(path: &Path, site_ids: &[String], columns: &[String], values: &Array2<f64>) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| GrmlrError::io(path, e);
    write!(w, "site_id").map_err(io)?;
    for c in columns {
        write!(w, ",{c}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, row) in values.axis_iter(Axis(0)).enumerate() {
        write!(w, "{}", site_ids[i]).map_err(io)?;
        for v in row {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_abundances(path: &Path, m: &AbundanceMatrix) -> Result<()> {
    write_real_table(path, &m.site_ids, &m.taxa_names, &m.values)
}

pub fn write_macrofauna(path: &Path, m: &MacrofaunaCounts) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| GrmlrError::io(path, e);
    writeln!(w, "site_id,{}", m.category_names.join(",")).map_err(io)?;
    for (i, row) in m.values.axis_iter(Axis(0)).enumerate() {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        writeln!(w, "{},{}", m.site_ids[i], cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_labels(path: &Path, s: &StageLabels) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| GrmlrError::io(path, e);
    writeln!(w, "site_id,stage").map_err(io)?;
    for (i, site) in s.site_ids.iter().enumerate() {
        writeln!(w, "{site},{}", s.name(i).to_lowercase()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Paths written by [`save_dataset`].
#[derive(Debug, Clone)]
pub struct DatasetFiles {
    pub abundances: PathBuf,
    pub macrofauna: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

/// Writes `abundances.csv`, and `macrofauna.csv` / `labels.csv` when present.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<DatasetFiles> {
    std::fs::create_dir_all(dir).map_err(|e| GrmlrError::io(dir, e))?;
    let abundances = dir.join("abundances.csv");
    write_abundances(&abundances, &dataset.abundances)?;
    let macrofauna = match &dataset.macrofauna {
        Some(m) => {
            let p = dir.join("macrofauna.csv");
            write_macrofauna(&p, m)?;
            Some(p)
        }
        None => None,
    };
    let labels = match &dataset.stages {
        Some(s) => {
            let p = dir.join("labels.csv");
            write_labels(&p, s)?;
            Some(p)
        }
        None => None,
    };
    Ok(DatasetFiles {
        abundances,
        macrofauna,
        labels,
    })
}
