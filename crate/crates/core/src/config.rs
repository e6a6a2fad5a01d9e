//! Hyperparameters and the flat `key = value` config format.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compositional::FeatureTransform;
use crate::ecograph::CoOccurrenceScope;
use crate::error::{GrmlrError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrmlrConfig {
    /// CLR pseudo-count.
    pub epsilon: f64,
    /// Macro-coupling cosine threshold.
    pub tau: f64,
    /// Co-occurrence Spearman threshold.
    pub gamma: f64,
    /// Weight of the macro-coupling source in the fused adjacency.
    pub alpha: f64,
    pub lambda_l2: f64,
    pub lambda_g: f64,
    pub ftol: f64,
    pub gtol: f64,
    pub max_iters: usize,
    pub class_balanced: bool,
    pub co_occurrence_scope: CoOccurrenceScope,
    pub transform: FeatureTransform,
    pub seed: u64,
}

impl Default for GrmlrConfig {
    fn default() -> Self {
        GrmlrConfig {
            epsilon: 1e-6,
            tau: 0.7,
            gamma: 0.9,
            alpha: 0.1,
            lambda_l2: 0.02,
            lambda_g: 5.0,
            ftol: 1e-14,
            gtol: 1e-9,
            max_iters: 15_000,
            class_balanced: true,
            co_occurrence_scope: CoOccurrenceScope::Train,
            transform: FeatureTransform::Clr,
            seed: 0,
        }
    }
}

pub const PARAMETER_NAMES: [&str; 13] = [
    "epsilon",
    "tau",
    "gamma",
    "alpha",
    "lambda_l2",
    "lambda_g",
    "ftol",
    "gtol",
    "max_iters",
    "class_balanced",
    "co_occurrence_scope",
    "transform",
    "seed",
];

fn invalid(key: &str, message: impl Into<String>) -> GrmlrError {
    GrmlrError::InvalidConfig {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse `{value}`")))
}

impl GrmlrConfig {
    /// Sets one field by name from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "tau" => self.tau = parse_num(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "lambda_l2" => self.lambda_l2 = parse_num(key, value)?,
            "lambda_g" => self.lambda_g = parse_num(key, value)?,
            "ftol" => self.ftol = parse_num(key, value)?,
            "gtol" => self.gtol = parse_num(key, value)?,
            "max_iters" => self.max_iters = parse_num(key, value)?,
            "class_balanced" => self.class_balanced = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "co_occurrence_scope" => {
                self.co_occurrence_scope = match value.to_lowercase().as_str() {
                    "train" => CoOccurrenceScope::Train,
                    "all" => CoOccurrenceScope::All,
                    _ => return Err(invalid(key, "expected `train` or `all`")),
                }
            }
            "transform" => {
                self.transform = match value.to_lowercase().as_str() {
                    "clr" => FeatureTransform::Clr,
                    "raw" => FeatureTransform::Raw,
                    _ => return Err(invalid(key, "expected `clr` or `raw`")),
                }
            }
            _ => return Err(GrmlrError::UnknownParameter(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(key, format!("{v} outside [0, 1]")))
            }
        };
        unit("alpha", self.alpha)?;
        unit("tau", self.tau)?;
        unit("gamma", self.gamma)?;
        for (key, v) in [("lambda_l2", self.lambda_l2), ("lambda_g", self.lambda_g)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(key, format!("{v} must be finite and >= 0")));
            }
        }
        if self.transform == FeatureTransform::Clr && !(self.epsilon >= 0.0) {
            return Err(invalid("epsilon", "must be >= 0"));
        }
        if !(self.ftol >= 0.0) || !(self.gtol >= 0.0) {
            return Err(invalid("ftol", "tolerances must be >= 0"));
        }
        Ok(())
    }

    /// Parses `key = value` lines. `#` starts a comment; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = GrmlrConfig::default();
        for (key, value) in key_values(text)? {
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GrmlrError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Field name and textual value pairs in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let scope = match self.co_occurrence_scope {
            CoOccurrenceScope::Train => "train",
            CoOccurrenceScope::All => "all",
        };
        let transform = match self.transform {
            FeatureTransform::Clr => "clr",
            FeatureTransform::Raw => "raw",
        };
        vec![
            ("epsilon", self.epsilon.to_string()),
            ("tau", self.tau.to_string()),
            ("gamma", self.gamma.to_string()),
            ("alpha", self.alpha.to_string()),
            ("lambda_l2", self.lambda_l2.to_string()),
            ("lambda_g", self.lambda_g.to_string()),
            ("ftol", self.ftol.to_string()),
            ("gtol", self.gtol.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("class_balanced", self.class_balanced.to_string()),
            ("co_occurrence_scope", scope.to_string()),
            ("transform", transform.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub(crate) fn key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(invalid(
                &format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
