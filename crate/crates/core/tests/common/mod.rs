//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the library's numerics: ranks, correlations,
//! softmax and the plain multinomial fit are recomputed from scratch.

#![allow(dead_code)]

use grmlr_core::{AbundanceMatrix, FeatureMatrix, StageLabels};
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Rows drawn uniformly then closed; roughly `zero_rate` of entries are zero.
pub fn random_abundances(rng: &mut ChaCha8Rng, n: usize, p: usize, zero_rate: f64) -> AbundanceMatrix {
    let mut values = Array2::from_shape_fn((n, p), |_| {
        if rng.random::<f64>() < zero_rate {
            0.0
        } else {
            rng.random::<f64>().powi(3) + 1e-4
        }
    });
    for mut row in values.rows_mut() {
        if row.sum() == 0.0 {
            row[0] = 1.0;
        }
        let s: f64 = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    AbundanceMatrix::new(names("site", n), names("taxon", p), values).unwrap()
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize, p: usize, scale: f64) -> FeatureMatrix {
    FeatureMatrix {
        site_ids: names("site", n),
        taxa_names: names("taxon", p),
        values: Array2::from_shape_fn((n, p), |_| scale * (2.0 * rng.random::<f64>() - 1.0)),
    }
}

/// Labels covering every class at least once, in shuffled order.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> StageLabels {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    StageLabels {
        site_ids: names("site", n),
        label_set: names("class", k),
        labels,
    }
}

/// Symmetric, zero-diagonal, non-negative weights with the given edge density.
pub fn random_adjacency(rng: &mut ChaCha8Rng, p: usize, density: f64) -> Array2<f64> {
    let mut a = Array2::zeros((p, p));
    for u in 0..p {
        for v in 0..u {
            if rng.random::<f64>() < density {
                let w = rng.random::<f64>();
                a[(u, v)] = w;
                a[(v, u)] = w;
            }
        }
    }
    a
}

/// Rank of each element: strictly smaller count plus the midpoint of its tie group.
pub fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            let less = x.iter().filter(|&&v| v < xi).count() as f64;
            let equal = x.iter().filter(|&&v| v == xi).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Textbook Pearson from sums of products; zero-variance input gives 0.
pub fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let saa: f64 = a.iter().map(|v| v * v).sum();
    let sbb: f64 = b.iter().map(|v| v * v).sum();
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cov = sab - sa * sb / n;
    let va = saa - sa * sa / n;
    let vb = sbb - sb * sb / n;
    if va <= 1e-12 || vb <= 1e-12 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

pub fn brute_spearman(a: &[f64], b: &[f64]) -> f64 {
    brute_pearson(&brute_ranks(a), &brute_ranks(b))
}

/// Plain L2-penalised weighted multinomial logistic regression, minimised by
/// Newton's method with an exact Hessian. Parameters are `[W row-major, b]`.
pub struct PlainMlr<'a> {
    pub x: &'a Array2<f64>,
    pub y: &'a [usize],
    pub s: &'a [f64],
    pub k: usize,
    pub lambda_l2: f64,
}

impl PlainMlr<'_> {
    fn dims(&self) -> (usize, usize, usize) {
        (self.x.nrows(), self.x.ncols(), self.k)
    }

    fn probabilities(&self, theta: &DVector<f64>, i: usize) -> Vec<f64> {
        let (_, p, k) = self.dims();
        let logits: Vec<f64> = (0..k)
            .map(|c| (0..p).map(|j| theta[c * p + j] * self.x[(i, j)]).sum::<f64>() + theta[k * p + c])
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().map(|v| v / z).collect()
    }

    pub fn value(&self, theta: &DVector<f64>) -> f64 {
        let (n, p, k) = self.dims();
        let data: f64 = (0..n)
            .map(|i| -self.s[i] * self.probabilities(theta, i)[self.y[i]].ln())
            .sum::<f64>()
            / n as f64;
        let ridge: f64 = (0..k * p).map(|q| theta[q] * theta[q]).sum();
        data + self.lambda_l2 * ridge
    }

    pub fn gradient_hessian(&self, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let (n, p, k) = self.dims();
        let m = k * (p + 1);
        let mut g = DVector::zeros(m);
        let mut h = DMatrix::zeros(m, m);
        // index of coefficient on feature j (j == p means the intercept) for class c
        let idx = |c: usize, j: usize| if j < p { c * p + j } else { k * p + c };
        let xt = |i: usize, j: usize| if j < p { self.x[(i, j)] } else { 1.0 };
        for i in 0..n {
            let pi = self.probabilities(theta, i);
            let w = self.s[i] / n as f64;
            for c in 0..k {
                let r = pi[c] - if self.y[i] == c { 1.0 } else { 0.0 };
                for j in 0..=p {
                    g[idx(c, j)] += w * r * xt(i, j);
                }
                for d in 0..k {
                    let coef = w * (if c == d { pi[c] } else { 0.0 } - pi[c] * pi[d]);
                    for j in 0..=p {
                        for l in 0..=p {
                            h[(idx(c, j), idx(d, l))] += coef * xt(i, j) * xt(i, l);
                        }
                    }
                }
            }
        }
        for q in 0..k * p {
            g[q] += 2.0 * self.lambda_l2 * theta[q];
            h[(q, q)] += 2.0 * self.lambda_l2;
        }
        (g, h)
    }

    /// Returns the minimiser and the minimum.
    pub fn minimize(&self) -> (DVector<f64>, f64) {
        let (_, p, k) = self.dims();
        let mut theta = DVector::zeros(k * (p + 1));
        let mut f = self.value(&theta);
        for _ in 0..200 {
            let (g, h) = self.gradient_hessian(&theta);
            if g.amax() < 1e-13 {
                break;
            }
            // The common intercept shift is a flat direction; the
            // pseudo-inverse steps orthogonally to it.
            let step = -(h.pseudo_inverse(1e-12).expect("svd") * &g);
            let mut t = 1.0;
            loop {
                let cand = &theta + &step * t;
                let fc = self.value(&cand);
                if fc <= f + 1e-4 * t * g.dot(&step) {
                    theta = cand;
                    f = fc;
                    break;
                }
                t *= 0.5;
                if t < 1e-10 {
                    return (theta, f);
                }
            }
        }
        (theta, f)
    }
}
