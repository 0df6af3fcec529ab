//! Primal log-barrier method with damped Newton centering, plus the
//! phase-I program used to find a strictly feasible start.

use nalgebra::{DMatrix, DVector};

use crate::convex::{ConvexProgram, Ineq, LogConvexFn};
use crate::newton::{Assembly, Layout};

/// Log-domain coordinates beyond this magnitude overflow `exp`.
pub(crate) const Y_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Params {
    pub tol: f64,
    pub max_iter: usize,
    pub mu: f64,
    pub tau0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Exit {
    Converged,
    Stopped,
    MaxIter,
    Unbounded,
    Numerical,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub y: Vec<f64>,
    pub exit: Exit,
    pub gap: f64,
    pub decrement: f64,
    pub tau: f64,
}

/// What a caller wants after each centering.
pub(crate) enum Verdict {
    Continue,
    Stop,
}

fn n_barrier_terms(p: &ConvexProgram) -> usize {
    p.ineqs.len()
        + p.lo.iter().filter(|v| v.is_finite()).count()
        + p.hi.iter().filter(|v| v.is_finite()).count()
}

/// Barrier objective `tau f0 + phi`, or `None` outside the strict interior.
fn merit(p: &ConvexProgram, y: &[f64], tau: f64) -> Option<f64> {
    let mut v = tau * p.objective.value(y);
    for c in &p.ineqs {
        let sl = c.slack(y);
        if !(sl > 0.0) {
            return None;
        }
        v -= sl.ln();
    }
    for k in 0..p.n {
        if p.lo[k].is_finite() {
            let d = y[k] - p.lo[k];
            if !(d > 0.0) {
                return None;
            }
            v -= d.ln();
        }
        if p.hi[k].is_finite() {
            let d = p.hi[k] - y[k];
            if !(d > 0.0) {
                return None;
            }
            v -= d.ln();
        }
    }
    v.is_finite().then_some(v)
}

pub(crate) fn strictly_feasible(p: &ConvexProgram, y: &[f64]) -> bool {
    merit(p, y, 0.0).is_some()
}

fn scatter(grad: &mut [f64], f: &LogConvexFn, g: &[f64], scale: f64) {
    for (&v, gi) in f.support().iter().zip(g) {
        grad[v] += scale * gi;
    }
}

fn solve_psd(m: DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
    if let Some(ch) = m.clone().cholesky() {
        return ch.solve(&rhs);
    }
    m.pseudo_inverse(1e-12).map(|pi| pi * &rhs).unwrap_or_else(|_| DVector::zeros(rhs.len()))
}

/// Newton direction and squared decrement at `y`, or `None` on a
/// factorisation failure.
fn newton_step(p: &ConvexProgram, layout: &Layout, y: &[f64], tau: f64) -> Option<(Vec<f64>, f64)> {
    let n = p.n;
    let mut grad = vec![0.0; n];
    let mut asm = Assembly::new(layout);
    let (_, g0, ev0) = p.objective.eval(y);
    scatter(&mut grad, &p.objective, &g0, tau);
    asm.add_curvature(0, &p.objective, &ev0, tau);
    for (k, c) in p.ineqs.iter().enumerate() {
        let (gk, inv) = match c {
            Ineq::Log(f) => {
                let (fk, gk, evk) = f.eval(y);
                let inv = 1.0 / (-fk);
                asm.add_curvature(k + 1, f, &evk, inv);
                (gk, inv)
            }
            Ineq::Exp(e) => {
                let (pk, gk, tv) = e.eval(y);
                let inv = 1.0 / (1.0 - pk);
                asm.add_exp_curvature(e, &tv, inv);
                (gk, inv)
            }
        };
        for (&v, g) in c.support().iter().zip(&gk) {
            grad[v] += inv * g;
        }
        let u: Vec<f64> = gk.iter().map(|g| g * inv).collect();
        asm.add_outer(k + 1, c.support(), &u);
    }
    for v in 0..n {
        if p.lo[v].is_finite() {
            let d = 1.0 / (y[v] - p.lo[v]);
            grad[v] -= d;
            asm.add_diag(v, d * d);
        }
        if p.hi[v].is_finite() {
            let d = 1.0 / (p.hi[v] - y[v]);
            grad[v] += d;
            asm.add_diag(v, d * d);
        }
    }
    // A^T A vanishes on the feasible directions and keeps H positive
    // definite when the objective is flat along the equality normals.
    for row in &p.eq_rows {
        asm.add_sparse_outer(row);
    }
    let mut fac = asm.factor()?;
    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut dx = fac.solve(&neg);
    if !p.eq_rows.is_empty() {
        let q = p.eq_rows.len();
        let mut x_cols = Vec::with_capacity(q);
        for row in &p.eq_rows {
            let mut e = vec![0.0; n];
            for &(v, a) in row {
                e[v] += a;
            }
            x_cols.push(fac.solve(&e));
        }
        let dot = |row: &[(usize, f64)], x: &[f64]| row.iter().map(|&(v, a)| a * x[v]).sum::<f64>();
        let mut m = DMatrix::zeros(q, q);
        let mut rhs = DVector::zeros(q);
        for (a, row) in p.eq_rows.iter().enumerate() {
            for (b, xc) in x_cols.iter().enumerate() {
                m[(a, b)] = dot(row, xc);
            }
            let resid = dot(row, y) - p.eq_rhs[a];
            rhs[a] = dot(row, &dx) + resid;
        }
        let nu = solve_psd(m, rhs);
        for (b, xc) in x_cols.iter().enumerate() {
            for (d, x) in dx.iter_mut().zip(xc) {
                *d -= nu[b] * x;
            }
        }
    }
    if dx.iter().any(|d| !d.is_finite()) {
        return None;
    }
    let lambda2 = -grad.iter().zip(&dx).map(|(g, d)| g * d).sum::<f64>();
    Some((dx, lambda2.max(0.0)))
}

/// The `tau` whose centering condition `tau grad f0 + grad phi = 0` is
/// best met at `y` in the least-squares sense, or `None` if the objective
/// gradient vanishes or points the wrong way.
pub(crate) fn central_tau(p: &ConvexProgram, y: &[f64]) -> Option<f64> {
    let n = p.n;
    let mut g0 = vec![0.0; n];
    let (_, g, _) = p.objective.eval(y);
    scatter(&mut g0, &p.objective, &g, 1.0);
    let mut gphi = vec![0.0; n];
    for c in &p.ineqs {
        let (gk, inv) = match c {
            Ineq::Log(f) => {
                let (fk, gk, _) = f.eval(y);
                (gk, 1.0 / (-fk))
            }
            Ineq::Exp(e) => {
                let (pk, gk, _) = e.eval(y);
                (gk, 1.0 / (1.0 - pk))
            }
        };
        for (&v, g) in c.support().iter().zip(&gk) {
            gphi[v] += inv * g;
        }
    }
    for v in 0..n {
        if p.lo[v].is_finite() {
            gphi[v] -= 1.0 / (y[v] - p.lo[v]);
        }
        if p.hi[v].is_finite() {
            gphi[v] += 1.0 / (p.hi[v] - y[v]);
        }
    }
    let gg: f64 = g0.iter().map(|a| a * a).sum();
    let gp: f64 = g0.iter().zip(&gphi).map(|(a, b)| a * b).sum();
    let tau = -gp / gg;
    (gg > 0.0 && tau.is_finite() && tau > 0.0).then_some(tau)
}

fn max_box_step(p: &ConvexProgram, y: &[f64], dx: &[f64]) -> f64 {
    let mut t: f64 = 1.0;
    for v in 0..p.n {
        if dx[v] > 0.0 && p.hi[v].is_finite() {
            t = t.min(0.99 * (p.hi[v] - y[v]) / dx[v]);
        } else if dx[v] < 0.0 && p.lo[v].is_finite() {
            t = t.min(0.99 * (y[v] - p.lo[v]) / -dx[v]);
        }
    }
    t
}

/// Runs the barrier method from a strictly feasible `y`. `steps` counts
/// Newton iterations across calls so phase I and phase II share a budget.
pub(crate) fn run(
    p: &ConvexProgram,
    layout: &Layout,
    mut y: Vec<f64>,
    prm: &Params,
    steps: &mut usize,
    mut on_step: impl FnMut(&[f64]) -> bool,
    mut on_centered: impl FnMut(&[f64], f64) -> Verdict,
) -> Outcome {
    debug_assert_eq!(layout.n(), p.n);
    let m = n_barrier_terms(p) as f64;
    let mut tau = prm.tau0;
    let mut decrement = f64::INFINITY;
    let out = |y: Vec<f64>, exit, tau: f64, decrement| Outcome { y, exit, gap: m / tau, decrement, tau };
    loop {
        // centering
        loop {
            let Some(cur) = merit(p, &y, tau) else {
                return out(y, Exit::Numerical, tau, decrement);
            };
            let Some((dx, l2)) = newton_step(p, layout, &y, tau) else {
                return out(y, Exit::Numerical, tau, decrement);
            };
            decrement = l2;
            if l2 / 2.0 <= 1e-9 {
                break;
            }
            let slope = -l2;
            let mut t = max_box_step(p, &y, &dx);
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<f64> = y.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
                if let Some(v) = merit(p, &cand, tau) {
                    if v <= cur + 0.01 * t * slope {
                        // a decrease lost in rounding means the centre is reached
                        if cur - v > 1e-15 * cur.abs().max(1.0) {
                            accepted = Some(cand);
                        }
                        break;
                    }
                }
                t *= 0.5;
            }
            *steps += 1;
            let Some(next) = accepted else {
                // no progress possible at this precision
                break;
            };
            y = next;
            if y.iter().any(|v| v.abs() > Y_LIMIT) || p.objective.value(&y) < -Y_LIMIT * 4.0 {
                return out(y, Exit::Unbounded, tau, decrement);
            }
            if on_step(&y) {
                return out(y, Exit::Stopped, tau, decrement);
            }
            if *steps >= prm.max_iter {
                return out(y, Exit::MaxIter, tau, decrement);
            }
        }
        if let Verdict::Stop = on_centered(&y, m / tau) {
            return out(y, Exit::Stopped, tau, decrement);
        }
        if m / tau <= prm.tol {
            return out(y, Exit::Converged, tau, decrement);
        }
        tau *= prm.mu;
    }
}

/// Result of the feasibility search.
pub(crate) enum PhaseOne {
    Feasible(Vec<f64>),
    Infeasible,
    Undecided(Vec<f64>),
}

/// Minimises `s` subject to `f_k(y) <= s`, starting from `y0` which must
/// already satisfy the equality rows. Bounds that `y0` violates are turned
/// into soft constraints `y_v - hi_v <= s` for the search.
pub(crate) fn phase_one(p: &ConvexProgram, y0: &[f64], prm: &Params, steps: &mut usize) -> PhaseOne {
    let n = p.n;
    let s = n;
    let mut lo = p.lo.clone();
    let mut hi = p.hi.clone();
    let mut ineqs: Vec<LogConvexFn> = p.ineqs.iter().map(|c| c.as_log().with_linear_term(s, -1.0)).collect();
    for v in 0..n {
        if !(y0[v] > lo[v] && y0[v] < hi[v]) {
            if lo[v].is_finite() {
                ineqs.push(LogConvexFn::affine(lo[v], vec![(v, -1.0), (s, -1.0)]));
                lo[v] = f64::NEG_INFINITY;
            }
            if hi[v].is_finite() {
                ineqs.push(LogConvexFn::affine(-hi[v], vec![(v, 1.0), (s, -1.0)]));
                hi[v] = f64::INFINITY;
            }
        }
    }
    let mut y = y0.to_vec();
    y.push(0.0);
    let worst = ineqs.iter().map(|f| f.value(&y)).fold(f64::NEG_INFINITY, f64::max);
    y[s] = worst.max(0.0) + 1.0;
    lo.push(-1.0);
    hi.push(f64::INFINITY);
    let aux = ConvexProgram {
        n: n + 1,
        objective: LogConvexFn::affine(0.0, vec![(s, 1.0)]),
        ineqs: ineqs.into_iter().map(Ineq::Log).collect(),
        eq_rows: p.eq_rows.clone(),
        eq_rhs: p.eq_rhs.clone(),
        lo,
        hi,
    };
    let layout = Layout::new(n + 1, &aux.objective, &aux.ineqs);
    let mut infeasible = false;
    let margin = 1e-3;
    let res = run(
        &aux,
        &layout,
        y,
        prm,
        steps,
        |y| y[s] < -margin,
        |y, gap| {
            if y[s] - gap > 0.0 || (gap <= prm.tol && y[s] >= 0.0) {
                infeasible = true;
                Verdict::Stop
            } else if y[s] < 0.0 && gap <= prm.tol {
                Verdict::Stop
            } else {
                Verdict::Continue
            }
        },
    );
    let mut y = res.y;
    let sv = y.pop().unwrap_or(0.0);
    if infeasible {
        PhaseOne::Infeasible
    } else if sv < 0.0 && strictly_feasible(p, &y) {
        PhaseOne::Feasible(y)
    } else {
        PhaseOne::Undecided(y)
    }
}

/// Closest point to `y` on `eq_rows . y = eq_rhs` in the Euclidean norm.
pub(crate) fn project_equalities(p: &ConvexProgram, y: &mut [f64]) {
    if p.eq_rows.is_empty() {
        return;
    }
    let q = p.eq_rows.len();
    let mut a = DMatrix::zeros(q, p.n);
    for (r, row) in p.eq_rows.iter().enumerate() {
        for &(v, c) in row {
            a[(r, v)] += c;
        }
    }
    let yv = DVector::from_column_slice(y);
    let resid = &a * &yv - DVector::from_column_slice(&p.eq_rhs);
    let nu = solve_psd(&a * a.transpose(), resid);
    let corr = a.transpose() * nu;
    for (yi, c) in y.iter_mut().zip(corr.iter()) {
        *yi -= c;
    }
}
