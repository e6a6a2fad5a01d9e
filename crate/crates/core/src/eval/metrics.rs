use crate::error::{GrmlrError, Result};

fn check(truth: &[usize], predicted: &[usize]) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(GrmlrError::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    Ok(())
}

pub fn accuracy(truth: &[usize], predicted: &[usize]) -> Result<f64> {
    check(truth, predicted)?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let correct = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// F1 per class; a class with no actual and no predicted members scores 0.
pub fn per_class_f1(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    check(truth, predicted)?;
    let predicted: Vec<Option<usize>> = predicted.iter().copied().map(Some).collect();
    Ok(f1_scores(truth, &predicted, n_classes))
}

/// Macro-F1 where `None` marks an abstention (a false negative for the true
/// class, and no false positive anywhere).
pub fn macro_f1_with_abstentions(truth: &[usize], predicted: &[Option<usize>], n_classes: usize) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(GrmlrError::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    Ok(f1_scores(truth, predicted, n_classes).iter().sum::<f64>() / n_classes as f64)
}

fn f1_scores(truth: &[usize], predicted: &[Option<usize>], n_classes: usize) -> Vec<f64> {
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fneg = vec![0usize; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        match p {
            Some(p) if p == t => tp[t] += 1,
            Some(p) => {
                fp[p] += 1;
                fneg[t] += 1;
            }
            None => fneg[t] += 1,
        }
    }
    (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fneg[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .collect()
}

/// Unweighted mean of per-class F1 over all `n_classes` classes.
pub fn macro_f1(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<f64> {
    let f1 = per_class_f1(truth, predicted, n_classes)?;
    Ok(f1.iter().sum::<f64>() / n_classes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let y = [0, 1, 2, 1];
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
        assert_eq!(macro_f1(&y, &y, 3).unwrap(), 1.0);
    }

    #[test]
    fn collapsed_to_majority() {
        let mut truth = vec![0; 3];
        truth.extend([1; 7]);
        truth.extend([2; 3]);
        let pred = vec![1; 13];
        let f = macro_f1(&truth, &pred, 3).unwrap();
        assert!((f - 0.7 / 3.0).abs() < 1e-15);
        assert!((f - 0.2333).abs() < 1e-4);
    }

    #[test]
    fn absent_classes_count_as_zero() {
        let y = [0, 0, 0];
        assert!((macro_f1(&y, &y, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            macro_f1(&[0, 1], &[0], 2),
            Err(GrmlrError::LengthMismatch { .. })
        ));
    }
}
