//! Trust-boxed SQP with damped BFGS, an ℓ1 merit function and Armijo
//! backtracking. Nonlinear equalities come with analytic Jacobians; the
//! inequalities are linear and therefore stay satisfied once a start has been
//! projected onto them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gradient::numeric_gradient;
use super::qp::{solve_qp, QpError};

pub type Objective<'a> = dyn Fn(&[f64]) -> Option<f64> + Sync + 'a;
/// Returns constraint values and one gradient row per constraint.
pub type Equalities<'a> = dyn Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>) + Sync + 'a;

pub struct NlpProblem<'a> {
    pub objective: &'a Objective<'a>,
    pub equalities: &'a Equalities<'a>,
    /// Linear inequalities `A x + b ≥ 0`, one row of `A` per constraint.
    pub lin_a: DMatrix<f64>,
    pub lin_b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqpSettings {
    pub max_iter: usize,
    pub kkt_tol: f64,
    pub constraint_tol: f64,
    pub fd_step: f64,
    pub initial_trust: f64,
    pub max_trust: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqpStatus {
    Converged,
    MaxIter,
    Stalled,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub violation: f64,
    /// Lowest objective among feasible iterates so far.
    pub best_feasible: Option<f64>,
    pub step: f64,
    pub trust: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub violation: f64,
    pub kkt: f64,
    pub iterations: usize,
    pub status: SqpStatus,
    pub history: Vec<IterationRecord>,
}

struct Point {
    x: DVector<f64>,
    f: f64,
    grad: DVector<f64>,
    c_eq: Vec<f64>,
    j_eq: Vec<Vec<f64>>,
}

impl<'a> NlpProblem<'a> {
    fn lin_violation(&self, x: &DVector<f64>) -> f64 {
        let s = &self.lin_a * x + &self.lin_b;
        s.iter().fold(0.0, |m: f64, &v| m.max(-v))
    }

    fn violation(&self, x: &DVector<f64>, c_eq: &[f64]) -> f64 {
        c_eq.iter().fold(self.lin_violation(x), |m, v| m.max(v.abs()))
    }

    fn l1_infeasibility(&self, x: &DVector<f64>, c_eq: &[f64]) -> f64 {
        let s = &self.lin_a * x + &self.lin_b;
        s.iter().map(|v| (-v).max(0.0)).sum::<f64>() + c_eq.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn evaluate(&self, x: DVector<f64>, fd_step: f64) -> Option<Point> {
        let f = (self.objective)(x.as_slice()).filter(|v| v.is_finite())?;
        let grad = numeric_gradient(|z| (self.objective)(z), x.as_slice(), fd_step).ok()?;
        let (c_eq, j_eq) = (self.equalities)(x.as_slice());
        Some(Point { x, f, grad: DVector::from_vec(grad), c_eq, j_eq })
    }

    /// Closest point (Euclidean) satisfying the linear inequalities.
    pub fn project(&self, x0: &[f64]) -> Option<Vec<f64>> {
        let n = x0.len();
        let x = DVector::from_column_slice(x0);
        if self.lin_violation(&x) <= 0.0 {
            return Some(x0.to_vec());
        }
        let ci = self.lin_a.transpose();
        let ci0 = &self.lin_a * &x + &self.lin_b;
        let sol = solve_qp(&DMatrix::identity(n, n), &DVector::zeros(n), &DMatrix::zeros(n, 0), &DVector::zeros(0), &ci, &ci0).ok()?;
        Some((x + sol.x).as_slice().to_vec())
    }
}

struct Subproblem {
    d: DVector<f64>,
    lambda_eq: Vec<f64>,
    lambda_lin: Vec<f64>,
}

fn solve_subproblem(prob: &NlpProblem, pt: &Point, b: &DMatrix<f64>, trust: f64) -> Result<Subproblem, QpError> {
    let n = pt.x.len();
    let n_lin = prob.lin_a.nrows();
    let lin_at = &prob.lin_a * &pt.x + &prob.lin_b;
    let mut ci = DMatrix::zeros(n, n_lin + 2 * n);
    let mut ci0 = DVector::zeros(n_lin + 2 * n);
    for k in 0..n_lin {
        ci.set_column(k, &prob.lin_a.row(k).transpose());
        ci0[k] = lin_at[k];
    }
    for i in 0..n {
        ci[(i, n_lin + 2 * i)] = 1.0;
        ci0[n_lin + 2 * i] = trust;
        ci[(i, n_lin + 2 * i + 1)] = -1.0;
        ci0[n_lin + 2 * i + 1] = trust;
    }
    let p = pt.c_eq.len();
    let mut ce = DMatrix::zeros(n, p);
    for (k, row) in pt.j_eq.iter().enumerate() {
        ce.set_column(k, &DVector::from_column_slice(row));
    }
    // relax the equality target when the linearisation cannot be met inside the box
    let mut last = Err(QpError::Infeasible);
    for theta in [1.0, 0.5, 0.25, 0.1, 0.0] {
        let ce0 = DVector::from_iterator(p, pt.c_eq.iter().map(|c| theta * c));
        last = solve_qp(b, &pt.grad, &ce, &ce0, &ci, &ci0);
        if let Ok(sol) = &last {
            return Ok(Subproblem {
                d: sol.x.clone(),
                lambda_eq: sol.eq_multipliers.clone(),
                lambda_lin: sol.ineq_multipliers[..n_lin].to_vec(),
            });
        }
        if matches!(last, Err(QpError::NotPositiveDefinite)) {
            break;
        }
    }
    last.map(|_| unreachable!())
}

fn lagrangian_grad(prob: &NlpProblem, pt: &Point, lambda_eq: &[f64], lambda_lin: &[f64]) -> DVector<f64> {
    let mut g = pt.grad.clone();
    for (row, &l) in pt.j_eq.iter().zip(lambda_eq) {
        g -= DVector::from_column_slice(row) * l;
    }
    for (k, &l) in lambda_lin.iter().enumerate() {
        if l != 0.0 {
            g -= prob.lin_a.row(k).transpose() * l;
        }
    }
    g
}

fn kkt_measure(prob: &NlpProblem, pt: &Point, sub: &Subproblem) -> f64 {
    let stat = lagrangian_grad(prob, pt, &sub.lambda_eq, &sub.lambda_lin).amax();
    let lin_at = &prob.lin_a * &pt.x + &prob.lin_b;
    let comp = sub.lambda_lin.iter().zip(lin_at.iter()).fold(0.0, |m: f64, (l, s)| m.max((l * s).abs()));
    stat.max(comp)
}

fn damped_bfgs(b: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 0.0) || !sbs.is_finite() {
        return;
    }
    let sy = s.dot(y);
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r = y * theta + &bs * (1.0 - theta);
    let sr = s.dot(&r);
    if !(sr > 0.0) || !sr.is_finite() {
        return;
    }
    *b += &r * r.transpose() / sr - &bs * bs.transpose() / sbs;
}

/// Minimises the objective from `x0`, which must satisfy the linear
/// inequalities (see [`NlpProblem::project`]).
pub fn minimize(prob: &NlpProblem, x0: &[f64], settings: &SqpSettings) -> SqpOutcome {
    let n = x0.len();
    let failed = |x: Vec<f64>, status| SqpOutcome {
        x,
        objective: f64::NAN,
        violation: f64::INFINITY,
        kkt: f64::INFINITY,
        iterations: 0,
        status,
        history: Vec::new(),
    };
    let Some(mut pt) = prob.evaluate(DVector::from_column_slice(x0), settings.fd_step) else {
        return failed(x0.to_vec(), SqpStatus::Stalled);
    };

    let mut b = DMatrix::<f64>::identity(n, n);
    let mut trust = settings.initial_trust;
    let mut mu = 1.0f64;
    let mut history = Vec::new();
    let mut best: Option<(f64, DVector<f64>, f64, f64)> = None;
    let mut kkt = f64::INFINITY;
    let mut status = SqpStatus::MaxIter;
    let mut iterations = 0;

    let note_feasible = |pt: &Point, kkt: f64, best: &mut Option<(f64, DVector<f64>, f64, f64)>| {
        let v = prob.violation(&pt.x, &pt.c_eq);
        if v <= settings.constraint_tol && best.as_ref().map_or(true, |(f, ..)| pt.f < *f) {
            *best = Some((pt.f, pt.x.clone(), v, kkt));
        }
        v
    };
    note_feasible(&pt, kkt, &mut best);

    for it in 1..=settings.max_iter {
        iterations = it;
        let sub = match solve_subproblem(prob, &pt, &b, trust) {
            Ok(s) => s,
            Err(_) => {
                b = DMatrix::identity(n, n);
                match solve_subproblem(prob, &pt, &b, trust) {
                    Ok(s) => s,
                    Err(_) => {
                        status = SqpStatus::Stalled;
                        break;
                    }
                }
            }
        };
        kkt = kkt_measure(prob, &pt, &sub);
        let viol = prob.violation(&pt.x, &pt.c_eq);
        if let Some(entry) = best.as_mut() {
            if entry.1 == pt.x {
                entry.3 = kkt;
            }
        }
        if viol <= settings.constraint_tol && kkt <= settings.kkt_tol {
            status = SqpStatus::Converged;
            iterations = it - 1;
            break;
        }

        let lam_max = sub.lambda_eq.iter().chain(&sub.lambda_lin).fold(0.0f64, |m, l| m.max(l.abs()));
        mu = mu.max(1.5 * lam_max + 1e-6);
        let infeas = prob.l1_infeasibility(&pt.x, &pt.c_eq);
        let merit0 = pt.f + mu * infeas;
        let slope = (pt.grad.dot(&sub.d) - mu * infeas).min(-1e-14);
        let d_norm = sub.d.amax();

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial_x = &pt.x + &sub.d * alpha;
            if let Some(f_trial) = (prob.objective)(trial_x.as_slice()).filter(|v| v.is_finite()) {
                let (c_trial, _) = (prob.equalities)(trial_x.as_slice());
                let merit = f_trial + mu * prob.l1_infeasibility(&trial_x, &c_trial);
                if merit <= merit0 + 1e-4 * alpha * slope {
                    accepted = Some(trial_x);
                    break;
                }
            }
            alpha *= 0.5;
        }

        let Some(x_new) = accepted else {
            trust *= 0.25;
            if trust < 1e-12 || d_norm < 1e-14 {
                status = SqpStatus::Stalled;
                break;
            }
            history.push(IterationRecord {
                iteration: it,
                objective: pt.f,
                violation: viol,
                best_feasible: best.as_ref().map(|b| b.0),
                step: 0.0,
                trust,
            });
            continue;
        };
        let Some(next) = prob.evaluate(x_new, settings.fd_step) else {
            status = SqpStatus::Stalled;
            break;
        };

        let s = &next.x - &pt.x;
        let y = lagrangian_grad(prob, &next, &sub.lambda_eq, &sub.lambda_lin)
            - lagrangian_grad(prob, &pt, &sub.lambda_eq, &sub.lambda_lin);
        damped_bfgs(&mut b, &s, &y);

        let step = s.amax();
        if alpha == 1.0 && d_norm >= 0.99 * trust {
            trust = (2.0 * trust).min(settings.max_trust);
        } else if alpha < 1.0 {
            trust = (trust * 0.5).max(2.0 * step).min(trust);
        }
        pt = next;
        let v = note_feasible(&pt, f64::INFINITY, &mut best);
        history.push(IterationRecord {
            iteration: it,
            objective: pt.f,
            violation: v,
            best_feasible: best.as_ref().map(|b| b.0),
            step,
            trust,
        });
        if step < 1e-15 {
            status = SqpStatus::Stalled;
            break;
        }
    }

    if status == SqpStatus::Converged {
        return SqpOutcome {
            violation: prob.violation(&pt.x, &pt.c_eq),
            x: pt.x.as_slice().to_vec(),
            objective: pt.f,
            kkt,
            iterations,
            status,
            history,
        };
    }
    match best {
        Some((f, x, violation, best_kkt)) => SqpOutcome {
            kkt: if x == pt.x { kkt } else { best_kkt },
            x: x.as_slice().to_vec(),
            objective: f,
            violation,
            iterations,
            status,
            history,
        },
        None => SqpOutcome {
            violation: prob.violation(&pt.x, &pt.c_eq),
            x: pt.x.as_slice().to_vec(),
            objective: pt.f,
            kkt,
            iterations,
            status: SqpStatus::Infeasible,
            history,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> SqpSettings {
        SqpSettings { max_iter: 200, kkt_tol: 1e-8, constraint_tol: 1e-9, fd_step: 1e-6, initial_trust: 0.5, max_trust: 4.0 }
    }

    #[test]
    fn equality_constrained_quadratic() {
        // min (x−2)² + (y−1)² s.t. x + y = 1 → (1, 0)
        let obj = |z: &[f64]| Some((z[0] - 2.0).powi(2) + (z[1] - 1.0).powi(2));
        let eq = |z: &[f64]| (vec![z[0] + z[1] - 1.0], vec![vec![1.0, 1.0]]);
        let prob = NlpProblem { objective: &obj, equalities: &eq, lin_a: DMatrix::zeros(0, 2), lin_b: DVector::zeros(0) };
        let out = minimize(&prob, &[0.0, 0.0], &settings());
        assert_eq!(out.status, SqpStatus::Converged);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && out.x[1].abs() < 1e-6);
    }

    #[test]
    fn nonlinear_equality_on_circle() {
        // min x + y s.t. x² + y² = 2 → (−1, −1)
        let obj = |z: &[f64]| Some(z[0] + z[1]);
        let eq = |z: &[f64]| (vec![z[0] * z[0] + z[1] * z[1] - 2.0], vec![vec![2.0 * z[0], 2.0 * z[1]]]);
        let prob = NlpProblem { objective: &obj, equalities: &eq, lin_a: DMatrix::zeros(0, 2), lin_b: DVector::zeros(0) };
        let out = minimize(&prob, &[1.0, -0.5], &settings());
        assert_eq!(out.status, SqpStatus::Converged, "{out:?}");
        assert!((out.x[0] + 1.0).abs() < 1e-6 && (out.x[1] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_inequality_active() {
        // max x + 2y (min −x − 2y) s.t. x ≥ 0, y ≥ 0, x + y ≤ 1 → (0, 1)
        let obj = |z: &[f64]| Some(-z[0] - 2.0 * z[1] + 0.01 * (z[0] * z[0] + z[1] * z[1]));
        let eq = |_: &[f64]| (vec![], vec![]);
        let lin_a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]);
        let lin_b = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let prob = NlpProblem { objective: &obj, equalities: &eq, lin_a, lin_b };
        let out = minimize(&prob, &[0.2, 0.2], &settings());
        assert_eq!(out.status, SqpStatus::Converged);
        assert!(out.x[0].abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
        let bests: Vec<f64> = out.history.iter().filter_map(|h| h.best_feasible).collect();
        assert!(bests.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn projection_onto_halfspace() {
        let obj = |_: &[f64]| Some(0.0);
        let eq = |_: &[f64]| (vec![], vec![]);
        let prob = NlpProblem {
            objective: &obj,
            equalities: &eq,
            lin_a: DMatrix::from_row_slice(1, 2, &[-1.0, -1.0]),
            lin_b: DVector::from_vec(vec![1.0]),
        };
        let p = prob.project(&[2.0, 2.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }
}
