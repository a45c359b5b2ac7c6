//! Derivative-free local search used by the heralded-circuit searches.
//!
//! [`nelder_mead`] is the adaptive-coefficient simplex method. Equality
//! constraints are handled by [`penalty_minimize`], which reruns the simplex
//! with an escalating quadratic penalty, and [`project_feasible`], a
//! minimum-norm Gauss–Newton correction onto the constraint set.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop when the spread of function values in the simplex drops below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter drops below this.
    pub x_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_evals: 4000, f_tol: 1e-14, x_tol: 1e-10, initial_step: 0.3 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

/// Minimizes `f` starting from `x0`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n > 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * (1.0 + values[0].abs()) && diameter <= opts.x_tol {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(alpha * gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(alpha * rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink
        let best = simplex[0].clone();
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = best[j] + sigma * (simplex[i][j] - best[j]);
            }
            values[i] = eval(&simplex[i], &mut evals);
        }
    }

    let (i, &f) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    Minimum { x: simplex[i].clone(), f, evals }
}

/// Minimizes `objective + μ Σ c_k²` for each weight `μ` in `weights`, each
/// stage warm-started from the previous one.
pub fn penalty_minimize<F, C>(
    objective: F,
    constraints: C,
    x0: &[f64],
    weights: &[f64],
    opts: &SimplexOptions,
) -> Minimum
where
    F: Fn(&[f64]) -> f64,
    C: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let mut evals = 0;
    let mut step = opts.initial_step;
    for &mu in weights {
        let stage = SimplexOptions { initial_step: step, ..opts.clone() };
        let m = nelder_mead(
            |v| objective(v) + mu * constraints(v).iter().map(|c| c * c).sum::<f64>(),
            &x,
            &stage,
        );
        evals += m.evals;
        x = m.x;
        step = (step * 0.3).max(1e-4);
    }
    let f = objective(&x);
    Minimum { x, f, evals }
}

/// Gauss–Newton iterations with minimum-norm steps, driving `residuals` to
/// zero while moving `x` as little as possible. The Jacobian is taken by
/// central differences. Returns the final point and its max residual.
pub fn project_feasible<C>(residuals: C, x0: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, f64)
where
    C: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let max_abs = |r: &[f64]| r.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut r = residuals(&x);
    for _ in 0..max_iter {
        if max_abs(&r) <= tol {
            break;
        }
        let jac = central_jacobian(&residuals, &x, 1e-7);
        let svd = jac.svd(true, true);
        let Ok(step) = svd.solve(&DVector::from_column_slice(&r), 1e-12) else {
            break;
        };
        // backtrack if the full step does not help
        let mut t = 1.0;
        let current = max_abs(&r);
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let rt = residuals(&trial);
            if max_abs(&rt) < current || t < 1e-4 {
                x = trial;
                r = rt;
                break;
            }
            t *= 0.5;
        }
    }
    let worst = max_abs(&r);
    (x, worst)
}

fn central_jacobian<C>(residuals: &C, x: &[f64], h: f64) -> DMatrix<f64>
where
    C: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let rp = residuals(&xp);
        let rm = residuals(&xm);
        cols.push(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    let m = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(m, n, |i, j| cols[j][i])
}

#[derive(Clone, Debug)]
pub struct SqpOptions {
    pub max_iter: usize,
    /// Feasibility tolerance (max absolute residual).
    pub feas_tol: f64,
    /// Stop once the step length drops below this.
    pub x_tol: f64,
}

impl Default for SqpOptions {
    fn default() -> Self {
        Self { max_iter: 500, feas_tol: 1e-12, x_tol: 1e-12 }
    }
}

fn central_gradient<F>(f: &F, x: &[f64], h: f64) -> DVector<f64>
where
    F: Fn(&[f64]) -> f64,
{
    DVector::from_fn(x.len(), |j, _| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Minimizes `objective` subject to `residuals(x) = 0` by sequential
/// quadratic programming: damped-BFGS Lagrangian Hessian, equality-only KKT
/// steps and an ℓ₁ merit line search. Derivatives are central differences.
/// The returned point is the last iterate; check its residuals.
pub fn sqp_minimize<F, C>(objective: F, residuals: C, x0: &[f64], opts: &SqpOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
    C: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let h = 1e-7;
    let l1 = |c: &[f64]| c.iter().map(|v| v.abs()).sum::<f64>();
    let mut x = x0.to_vec();
    let mut f = objective(&x);
    let mut c = residuals(&x);
    let m = c.len();
    let mut g = central_gradient(&objective, &x, h);
    let mut jac = central_jacobian(&residuals, &x, h);
    let mut hess = DMatrix::<f64>::identity(n, n);
    let mut mu = 1.0;
    let mut evals = 1 + 2 * n * 2;

    for _ in 0..opts.max_iter {
        let mut kkt = DMatrix::<f64>::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        kkt.view_mut((0, n), (n, m)).copy_from(&jac.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&jac);
        let mut rhs = DVector::<f64>::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-&g));
        rhs.rows_mut(n, m).copy_from(&(-DVector::from_column_slice(&c)));
        let Ok(sol) = kkt.svd(true, true).solve(&rhs, 1e-12) else {
            break;
        };
        let d = sol.rows(0, n).into_owned();
        let lambda = sol.rows(n, m).into_owned();
        if d.amax() < opts.x_tol && c.iter().all(|v| v.abs() <= opts.feas_tol) {
            break;
        }

        mu = f64::max(mu, 1.1 * lambda.amax());
        let merit = f + mu * l1(&c);
        let slope = g.dot(&d) - mu * l1(&c);
        let mut t = 1.0;
        let (xn, fnew, cn) = loop {
            let trial: Vec<f64> = x.iter().zip(d.iter()).map(|(a, b)| a + t * b).collect();
            let ft = objective(&trial);
            let ct = residuals(&trial);
            evals += 1;
            if ft + mu * l1(&ct) <= merit + 1e-4 * t * slope.min(0.0) || t < 1e-10 {
                break (trial, ft, ct);
            }
            t *= 0.5;
        };

        let gn = central_gradient(&objective, &xn, h);
        let jn = central_jacobian(&residuals, &xn, h);
        evals += 4 * n;
        let s_vec = DVector::from_iterator(n, xn.iter().zip(&x).map(|(a, b)| a - b));
        let y = (&gn + jn.transpose() * &lambda) - (&g + jac.transpose() * &lambda);
        // Powell damping keeps the update positive definite
        let bs = &hess * &s_vec;
        let sbs = s_vec.dot(&bs);
        let sy = s_vec.dot(&y);
        if sbs > 1e-300 {
            let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
            let r = theta * &y + (1.0 - theta) * &bs;
            let sr = s_vec.dot(&r);
            if sr > 1e-300 {
                hess = hess - &bs * bs.transpose() / sbs + &r * r.transpose() / sr;
            }
        }

        let moved = s_vec.amax();
        x = xn;
        f = fnew;
        c = cn;
        g = gn;
        jac = jn;
        if moved < opts.x_tol && c.iter().all(|v| v.abs() <= opts.feas_tol) {
            break;
        }
    }
    Minimum { x, f, evals }
}
