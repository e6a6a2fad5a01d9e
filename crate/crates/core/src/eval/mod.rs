//! Evaluation harness: leave-one-out cross validation, metrics, permutation
//! tests, grid search, ablations, the alpha sweep and coefficient ranking.

pub mod grid;
pub mod loocv;
pub mod metrics;
pub mod permutation;
pub mod plot;
pub mod ranking;
pub mod studies;

pub use grid::{grid_search, Grid, GridEntry, GridResult};
pub use loocv::{fit_fold, loocv, loocv_with_models, EvalReport, FoldRecord, StageCount};
pub use metrics::{accuracy, macro_f1};
pub use permutation::{permutation_p_value, permutation_test, PermutationReport};
pub use ranking::{coefficient_ranking, TaxonMagnitude};
pub use studies::{ablate, alpha_sweep, Ablation, AblationReport, SweepPoint};

/// Runs `op` on a dedicated pool of `workers` threads (at least one).
pub(crate) fn with_workers<T: Send>(workers: usize, op: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(op)
}
