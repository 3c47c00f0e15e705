//! Central-difference gradient verification.

/// Result of comparing an analytic gradient to central finite differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

/// Compare `analytic` to central differences of `f` at `params`.
///
/// Relative error per parameter is |ad - fd| / max(|ad|, |fd|, 1e-6); the
/// floor keeps finite-difference round-off on near-zero gradients from
/// dominating the report.
pub fn grad_check(
    f: impl Fn(&[f64]) -> f64,
    analytic: &[f64],
    params: &[f64],
    step: f64,
    tolerance: f64,
) -> GradCheckReport {
    assert_eq!(analytic.len(), params.len());
    let mut work = params.to_vec();
    let mut max_rel = 0.0;
    let mut worst = 0;
    for i in 0..params.len() {
        let orig = work[i];
        work[i] = orig + step;
        let fp = f(&work);
        work[i] = orig - step;
        let fm = f(&work);
        work[i] = orig;
        let fd = (fp - fm) / (2.0 * step);
        let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-6);
        if rel > max_rel {
            max_rel = rel;
            worst = i;
        }
    }
    GradCheckReport {
        max_rel_error: max_rel,
        worst_index: worst,
        checked: params.len(),
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_closure_is_exact() {
        let params: Vec<f64> = (0..10).map(|i| i as f64 * 0.3 - 1.0).collect();
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let analytic: Vec<f64> = params.iter().map(|v| 2.0 * v).collect();
        let report = grad_check(f, &analytic, &params, 1e-5, 1e-8);
        assert!(report.passed(), "max rel {}", report.max_rel_error);
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let params = vec![0.5, -0.25];
        let f = |x: &[f64]| x[0] * x[0] + x[1];
        let wrong = vec![2.0 * params[0] + 0.1, 1.0];
        let report = grad_check(f, &wrong, &params, 1e-5, 1e-6);
        assert!(!report.passed());
        assert_eq!(report.worst_index, 0);
    }
}
