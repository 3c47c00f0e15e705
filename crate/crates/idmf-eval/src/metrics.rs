//! Trajectory error metrics, meters.

/// Root of the mean squared pointwise difference. Panics on length
/// mismatch.
pub fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(
        pred.len(),
        truth.len(),
        "rmse length mismatch: {} vs {}",
        pred.len(),
        truth.len()
    );
    assert!(!pred.is_empty(), "rmse of empty series");
    let ms = pred
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / pred.len() as f64;
    ms.sqrt()
}

/// Final displacement error: absolute error at the last sample.
pub fn fde(pred: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(
        pred.len(),
        truth.len(),
        "fde length mismatch: {} vs {}",
        pred.len(),
        truth.len()
    );
    assert!(!pred.is_empty(), "fde of empty series");
    (pred[pred.len() - 1] - truth[truth.len() - 1]).abs()
}
