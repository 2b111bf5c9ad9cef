use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradientError {
    #[error("objective was not finite when perturbing coordinate {index}")]
    NonFiniteEvaluation { index: usize },
}

fn step(h_rel: f64, xi: f64) -> f64 {
    h_rel * xi.abs().max(1.0)
}

/// Central differences with per-coordinate step `h_rel·max(1, |x_i|)`.
/// `f` returns `None` (or a non-finite value) when it cannot be evaluated.
pub fn numeric_gradient<F>(f: F, x: &[f64], h_rel: f64) -> Result<Vec<f64>, GradientError>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step(h_rel, x[i]);
        probe[i] = x[i] + h;
        let up = f(&probe).filter(|v| v.is_finite());
        probe[i] = x[i] - h;
        let down = f(&probe).filter(|v| v.is_finite());
        probe[i] = x[i];
        match (up, down) {
            (Some(u), Some(d)) => grad.push((u - d) / (2.0 * h)),
            _ => return Err(GradientError::NonFiniteEvaluation { index: i }),
        }
    }
    Ok(grad)
}

/// Forward differences; used to cross-check [`numeric_gradient`].
pub fn one_sided_gradient<F>(f: F, x: &[f64], h_rel: f64) -> Result<Vec<f64>, GradientError>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let f0 = f(x).filter(|v| v.is_finite()).ok_or(GradientError::NonFiniteEvaluation { index: 0 })?;
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step(h_rel, x[i]);
        probe[i] = x[i] + h;
        let up = f(&probe).filter(|v| v.is_finite()).ok_or(GradientError::NonFiniteEvaluation { index: i })?;
        probe[i] = x[i];
        grad.push((up - f0) / h);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: &[f64]) -> Option<f64> {
        Some(x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn quadratic_gradient() {
        let g = numeric_gradient(sq, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1e-6).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!(g[1..].iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn linear_is_exact() {
        let s = [0.5, -3.0, 2.0];
        let f = |x: &[f64]| Some(x.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>());
        let g = numeric_gradient(f, &[0.1, 0.2, -0.3], 1e-6).unwrap();
        for (gi, si) in g.iter().zip(&s) {
            assert!((gi - si).abs() < 1e-9 * si.abs().max(1.0));
        }
    }

    #[test]
    fn central_and_forward_agree_on_quadratic() {
        let x = [0.7, -0.2, 1.5];
        let c = numeric_gradient(sq, &x, 1e-7).unwrap();
        let o = one_sided_gradient(sq, &x, 1e-7).unwrap();
        for (a, b) in c.iter().zip(&o) {
            assert!((a - b).abs() <= 1e-4 * a.abs().max(1e-3));
        }
    }

    #[test]
    fn non_finite_is_reported() {
        let f = |x: &[f64]| if x[1] > 0.0 { None } else { Some(x[0]) };
        assert_eq!(
            numeric_gradient(f, &[0.0, 0.0], 1e-6),
            Err(GradientError::NonFiniteEvaluation { index: 1 })
        );
    }
}
