//! Dense convex QP by the Goldfarb–Idnani dual active-set method:
//!
//! ```text
//! min ½ xᵀ G x + g0ᵀ x   s.t.  CEᵀ x + ce0 = 0,   CIᵀ x + ci0 ≥ 0
//! ```
//!
//! `G` must be symmetric positive definite. Constraint normals are the
//! columns of `CE` (n × p) and `CI` (n × m).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("QP Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("equality constraints are linearly dependent")]
    DependentEqualities,
    #[error("QP constraints are inconsistent")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Multipliers of the equality constraints, in input order.
    pub eq_multipliers: Vec<f64>,
    /// Multipliers of the inequality constraints (zero when inactive).
    pub ineq_multipliers: Vec<f64>,
}

struct Work {
    n: usize,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    r_norm: f64,
}

impl Work {
    fn compute_d(&self, np: &DVector<f64>) -> DVector<f64> {
        self.j.tr_mul(np)
    }

    fn update_z(&self, d: &DVector<f64>, iq: usize) -> DVector<f64> {
        let mut z = DVector::zeros(self.n);
        for i in 0..self.n {
            z[i] = (iq..self.n).map(|k| self.j[(i, k)] * d[k]).sum();
        }
        z
    }

    fn update_r(&self, d: &DVector<f64>, iq: usize) -> DVector<f64> {
        let mut r = DVector::zeros(iq.max(1) + 1);
        for i in (0..iq).rev() {
            let s: f64 = (i + 1..iq).map(|k| self.r[(i, k)] * r[k]).sum();
            r[i] = (d[i] - s) / self.r[(i, i)];
        }
        r
    }

    fn add_constraint(&mut self, d: &mut DVector<f64>, iq: &mut usize) -> bool {
        let n = self.n;
        for j in (*iq + 1..n).rev() {
            let (mut cc, mut ss) = (d[j - 1], d[j]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[j] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[j - 1] = -h;
            } else {
                d[j - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[(k, j - 1)];
                let t2 = self.j[(k, j)];
                self.j[(k, j - 1)] = t1 * cc + t2 * ss;
                self.j[(k, j)] = xny * (t1 + self.j[(k, j - 1)]) - t2;
            }
        }
        *iq += 1;
        for i in 0..*iq {
            self.r[(i, *iq - 1)] = d[i];
        }
        if d[*iq - 1].abs() <= f64::EPSILON * self.r_norm {
            return false;
        }
        self.r_norm = self.r_norm.max(d[*iq - 1].abs());
        true
    }

    fn delete_constraint(&mut self, active: &mut [isize], u: &mut [f64], p: usize, iq: &mut usize, l: isize) {
        let n = self.n;
        let Some(qq) = (p..*iq).find(|&i| active[i] == l) else { return };
        for i in qq..*iq - 1 {
            active[i] = active[i + 1];
            u[i] = u[i + 1];
            for j in 0..n {
                self.r[(j, i)] = self.r[(j, i + 1)];
            }
        }
        active[*iq - 1] = active[*iq];
        u[*iq - 1] = u[*iq];
        active[*iq] = 0;
        u[*iq] = 0.0;
        for j in 0..*iq {
            self.r[(j, *iq - 1)] = 0.0;
        }
        *iq -= 1;
        if *iq == 0 {
            return;
        }
        for j in qq..*iq {
            let (mut cc, mut ss) = (self.r[(j, j)], self.r[(j + 1, j)]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(j + 1, j)] = 0.0;
            if cc < 0.0 {
                self.r[(j, j)] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[(j, j)] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in j + 1..*iq {
                let t1 = self.r[(j, k)];
                let t2 = self.r[(j + 1, k)];
                self.r[(j, k)] = t1 * cc + t2 * ss;
                self.r[(j + 1, k)] = xny * (t1 + self.r[(j, k)]) - t2;
            }
            for k in 0..n {
                let t1 = self.j[(k, j)];
                let t2 = self.j[(k, j + 1)];
                self.j[(k, j)] = t1 * cc + t2 * ss;
                self.j[(k, j + 1)] = xny * (self.j[(k, j)] + t1) - t2;
            }
        }
    }
}

pub fn solve_qp(
    g: &DMatrix<f64>,
    g0: &DVector<f64>,
    ce: &DMatrix<f64>,
    ce0: &DVector<f64>,
    ci: &DMatrix<f64>,
    ci0: &DVector<f64>,
) -> Result<QpSolution, QpError> {
    let n = g.nrows();
    let p = ce.ncols();
    let m = ci.ncols();
    let inf = f64::INFINITY;

    let c1 = g.trace();
    let chol = g.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
    let l_inv = chol.l().try_inverse().ok_or(QpError::NotPositiveDefinite)?;
    let mut w = Work { n, j: l_inv.transpose(), r: DMatrix::zeros(n, n), r_norm: 1.0 };
    let c2 = w.j.trace();

    let mut x = -chol.solve(g0);
    let mut f = 0.5 * g0.dot(&x);

    let total = p + m;
    let mut active = vec![0isize; total + 1];
    let mut u = vec![0.0; total + 1];
    let mut iq = 0usize;

    for i in 0..p {
        let np = ce.column(i).into_owned();
        let mut d = w.compute_d(&np);
        let z = w.update_z(&d, iq);
        let r = w.update_r(&d, iq);
        let zn = z.dot(&np);
        let t2 = if z.dot(&z).abs() > f64::EPSILON { (-np.dot(&x) - ce0[i]) / zn } else { 0.0 };
        x += &z * t2;
        u[iq] = t2;
        for k in 0..iq {
            u[k] -= t2 * r[k];
        }
        f += 0.5 * t2 * t2 * zn;
        active[i] = -(i as isize) - 1;
        if !w.add_constraint(&mut d, &mut iq) {
            return Err(QpError::DependentEqualities);
        }
    }

    // iai[i] = i while inequality i may still enter the active set, -1 otherwise
    let mut iai: Vec<isize> = (0..m as isize).collect();
    let mut iaexcl = vec![true; m];
    let mut s = vec![0.0; m];
    let ineq_value = |x: &DVector<f64>, i: usize| ci.column(i).dot(x) + ci0[i];

    let mut guard = 0usize;
    let max_guard = 50 * (total + n + 10);
    'outer: loop {
        guard += 1;
        if guard > max_guard {
            return Err(QpError::Infeasible);
        }
        for i in p..iq {
            iai[active[i] as usize] = -1;
        }
        let mut psi = 0.0;
        for i in 0..m {
            iaexcl[i] = true;
            s[i] = ineq_value(&x, i);
            psi += s[i].min(0.0);
        }
        if psi.abs() <= m as f64 * f64::EPSILON * c1 * c2 * 100.0 {
            break 'outer;
        }
        let u_old = u.clone();
        let a_old = active.clone();
        let x_old = x.clone();

        'choose: loop {
            let mut ss = 0.0;
            let mut ip = 0usize;
            for i in 0..m {
                if iaexcl[i] && iai[i] != -1 && s[i] < ss {
                    ss = s[i];
                    ip = i;
                }
            }
            if ss >= 0.0 {
                break 'outer;
            }
            let np = ci.column(ip).into_owned();
            u[iq] = 0.0;
            active[iq] = ip as isize;

            loop {
                guard += 1;
                if guard > max_guard {
                    return Err(QpError::Infeasible);
                }
                let mut d = w.compute_d(&np);
                let z = w.update_z(&d, iq);
                let r = w.update_r(&d, iq);

                let mut l = 0isize;
                let mut t1 = inf;
                for k in p..iq {
                    if r[k] > 0.0 && u[k] / r[k] < t1 {
                        t1 = u[k] / r[k];
                        l = active[k];
                    }
                }
                let zn = z.dot(&np);
                let t2 = if z.dot(&z).abs() > f64::EPSILON { -s[ip] / zn } else { inf };
                let t = t1.min(t2);

                if t >= inf {
                    return Err(QpError::Infeasible);
                }
                if t2 >= inf {
                    for k in 0..iq {
                        u[k] -= t * r[k];
                    }
                    u[iq] += t;
                    iai[l as usize] = l;
                    w.delete_constraint(&mut active, &mut u, p, &mut iq, l);
                    continue;
                }

                x += &z * t;
                f += t * zn * (0.5 * t + u[iq]);
                for k in 0..iq {
                    u[k] -= t * r[k];
                }
                u[iq] += t;

                if (t - t2).abs() < f64::EPSILON {
                    if !w.add_constraint(&mut d, &mut iq) {
                        iaexcl[ip] = false;
                        w.delete_constraint(&mut active, &mut u, p, &mut iq, ip as isize);
                        for (i, v) in iai.iter_mut().enumerate() {
                            *v = i as isize;
                        }
                        for i in p..iq {
                            active[i] = a_old[i];
                            u[i] = u_old[i];
                            iai[active[i] as usize] = -1;
                        }
                        x = x_old.clone();
                        continue 'choose;
                    }
                    iai[ip] = -1;
                    continue 'outer;
                }

                iai[l as usize] = l;
                w.delete_constraint(&mut active, &mut u, p, &mut iq, l);
                s[ip] = ineq_value(&x, ip);
            }
        }
    }

    let mut eq_multipliers = vec![0.0; p];
    let mut ineq_multipliers = vec![0.0; m];
    for k in 0..iq {
        let a = active[k];
        if a < 0 {
            eq_multipliers[(-a - 1) as usize] = u[k];
        } else {
            ineq_multipliers[a as usize] = u[k];
        }
    }
    let objective = 0.5 * x.dot(&(g * &x)) + g0.dot(&x);
    let _ = f;
    Ok(QpSolution { x, objective, eq_multipliers, ineq_multipliers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, -2.0, -2.0, 4.0]);
        let g0 = DVector::from_vec(vec![6.0, 0.0]);
        let ce = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let ce0 = DVector::from_vec(vec![-3.0]);
        let ci = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let ci0 = DVector::from_vec(vec![0.0, 0.0, -2.0]);
        let sol = solve_qp(&g, &g0, &ce, &ce0, &ci, &ci0).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 2.0).abs() < 1e-12);
        assert!((sol.objective - 12.0).abs() < 1e-10);
        // stationarity: G x + g0 = CE λ + CI μ
        let grad = &g * &sol.x + &g0;
        let recon = &ce * DVector::from_vec(sol.eq_multipliers.clone()) + &ci * DVector::from_vec(sol.ineq_multipliers.clone());
        assert!((grad - recon).amax() < 1e-10);
        assert!(sol.ineq_multipliers.iter().all(|&u| u >= -1e-12));
    }

    #[test]
    fn unconstrained_minimum_inside_box() {
        let g = DMatrix::identity(3, 3);
        let g0 = DVector::from_vec(vec![-0.1, 0.2, 0.0]);
        let ci = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![-1.0, 0.0, 0.0]),
        ]);
        let ci0 = DVector::from_vec(vec![1.0, 1.0]);
        let sol = solve_qp(&g, &g0, &DMatrix::zeros(3, 0), &DVector::zeros(0), &ci, &ci0).unwrap();
        assert!((sol.x - DVector::from_vec(vec![0.1, -0.2, 0.0])).amax() < 1e-14);
        assert!(sol.ineq_multipliers.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn active_bound_projection() {
        // project (2, 2) onto x + y ≤ 1
        let g = DMatrix::identity(2, 2);
        let g0 = DVector::from_vec(vec![-2.0, -2.0]);
        let ci = DMatrix::from_row_slice(2, 1, &[-1.0, -1.0]);
        let ci0 = DVector::from_vec(vec![1.0]);
        let sol = solve_qp(&g, &g0, &DMatrix::zeros(2, 0), &DVector::zeros(0), &ci, &ci0).unwrap();
        assert!((sol.x - DVector::from_vec(vec![0.5, 0.5])).amax() < 1e-14);
        assert!((sol.ineq_multipliers[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_constraints() {
        let g = DMatrix::identity(1, 1);
        let ci = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let ci0 = DVector::from_vec(vec![-2.0, 1.0]);
        let res = solve_qp(&g, &DVector::zeros(1), &DMatrix::zeros(1, 0), &DVector::zeros(0), &ci, &ci0);
        assert_eq!(res, Err(QpError::Infeasible));
    }

    #[test]
    fn indefinite_hessian_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let res = solve_qp(&g, &DVector::zeros(2), &DMatrix::zeros(2, 0), &DVector::zeros(0), &DMatrix::zeros(2, 0), &DVector::zeros(0));
        assert_eq!(res, Err(QpError::NotPositiveDefinite));
    }
}
