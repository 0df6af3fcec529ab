//! Log-domain image of a geometric program.
//!
//! With `y = log x` a monomial becomes affine and a posynomial becomes a
//! log-sum-exp of affine forms. A [`GenPosynomial`] therefore maps to
//! `constant + linear . y + sum_k w_k * lse_k(y)`, which is convex because
//! each weight is positive.

use crate::algebra::{GenPosynomial, Monomial, Posynomial};
use crate::problem::GpProblem;

/// One `log sum_t exp(log c_t + a_t . y)` term over a compact support.
#[derive(Debug, Clone)]
pub struct LseBlock {
    support: Vec<usize>,
    terms: Vec<LseTerm>,
}

#[derive(Debug, Clone)]
struct LseTerm {
    log_coeff: f64,
    exps: Vec<(usize, f64)>,
}

/// Per-evaluation state of an [`LseBlock`]: value, local gradient and the
/// softmax weights needed for the Hessian.
#[derive(Debug, Clone, Default)]
pub struct LseEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LseBlock {
    fn from_posynomial(p: &Posynomial) -> Self {
        let mut support: Vec<usize> =
            p.terms().iter().flat_map(|m| m.exponents().iter().map(|(v, _)| *v)).collect();
        support.sort_unstable();
        support.dedup();
        let terms = p
            .terms()
            .iter()
            .map(|m| LseTerm {
                log_coeff: m.coeff().ln(),
                exps: m
                    .exponents()
                    .iter()
                    .map(|&(v, a)| (support.binary_search(&v).expect("var in support"), a))
                    .collect(),
            })
            .collect();
        Self { support, terms }
    }

    /// Global variable indices touched by this block, sorted.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    fn exponents(&self, t: usize) -> &[(usize, f64)] {
        &self.terms[t].exps
    }

    fn zmax_and_sum(&self, y: &[f64], z: &mut Vec<f64>) -> (f64, f64) {
        z.clear();
        z.extend(self.terms.iter().map(|t| {
            t.log_coeff + t.exps.iter().map(|&(l, a)| a * y[self.support[l]]).sum::<f64>()
        }));
        let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum = z.iter().map(|&zi| (zi - zmax).exp()).sum::<f64>();
        (zmax, sum)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let mut z = Vec::with_capacity(self.terms.len());
        let (zmax, sum) = self.zmax_and_sum(y, &mut z);
        zmax + sum.ln()
    }

    pub fn eval(&self, y: &[f64]) -> LseEval {
        let mut z = Vec::with_capacity(self.terms.len());
        let (zmax, sum) = self.zmax_and_sum(y, &mut z);
        let weights: Vec<f64> = z.iter().map(|&zi| (zi - zmax).exp() / sum).collect();
        let mut grad = vec![0.0; self.support.len()];
        for (t, &pi) in weights.iter().enumerate() {
            for &(l, a) in &self.terms[t].exps {
                grad[l] += pi * a;
            }
        }
        LseEval { value: zmax + sum.ln(), grad, weights }
    }

    /// Adds `scale * hess` into a dense row-major buffer addressed through
    /// `local` (block-local index to buffer index) with leading dimension `ld`.
    pub fn add_hessian(&self, ev: &LseEval, scale: f64, local: &[usize], buf: &mut [f64], ld: usize) {
        for (t, &pi) in ev.weights.iter().enumerate() {
            let w = scale * pi;
            if w == 0.0 {
                continue;
            }
            let ex = self.exponents(t);
            for &(l1, a1) in ex {
                let r = local[l1] * ld;
                for &(l2, a2) in ex {
                    buf[r + local[l2]] += w * a1 * a2;
                }
            }
        }
        for (l1, &g1) in ev.grad.iter().enumerate() {
            if g1 == 0.0 {
                continue;
            }
            let r = local[l1] * ld;
            for (l2, &g2) in ev.grad.iter().enumerate() {
                buf[r + local[l2]] -= scale * g1 * g2;
            }
        }
    }
}

/// `constant + linear . y + sum_k w_k * lse_k(y)` with every `w_k > 0`.
#[derive(Debug, Clone)]
pub struct LogConvexFn {
    constant: f64,
    linear: Vec<(usize, f64)>,
    blocks: Vec<(LseBlock, f64)>,
    support: Vec<usize>,
}

impl LogConvexFn {
    /// Affine function `constant + linear . y`.
    pub fn affine(constant: f64, linear: Vec<(usize, f64)>) -> Self {
        Self::assemble(constant, linear, Vec::new())
    }

    fn assemble(constant: f64, mut linear: Vec<(usize, f64)>, blocks: Vec<(LseBlock, f64)>) -> Self {
        linear.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(linear.len());
        for (v, a) in linear {
            match merged.last_mut() {
                Some((lv, la)) if *lv == v => *la += a,
                _ => merged.push((v, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        let mut support: Vec<usize> = merged
            .iter()
            .map(|(v, _)| *v)
            .chain(blocks.iter().flat_map(|(b, _)| b.support.iter().copied()))
            .collect();
        support.sort_unstable();
        support.dedup();
        Self { constant, linear: merged, blocks, support }
    }

    pub fn from_monomial(m: &Monomial) -> Self {
        Self::affine(m.coeff().ln(), m.exponents().to_vec())
    }

    pub fn from_posynomial(p: &Posynomial) -> Self {
        Self::from_gen(&GenPosynomial::from(p.clone()))
    }

    pub fn from_gen(g: &GenPosynomial) -> Self {
        let mut constant = g.scale().coeff().ln();
        let mut linear = g.scale().exponents().to_vec();
        let mut blocks = Vec::new();
        for (p, w) in g.factors() {
            if let [m] = p.terms() {
                constant += w * m.coeff().ln();
                linear.extend(m.exponents().iter().map(|&(v, a)| (v, w * a)));
            } else {
                blocks.push((LseBlock::from_posynomial(p), *w));
            }
        }
        Self::assemble(constant, linear, blocks)
    }

    /// Returns a copy with `coef * y[var]` added.
    pub fn with_linear_term(&self, var: usize, coef: f64) -> Self {
        let mut linear = self.linear.clone();
        linear.push((var, coef));
        Self::assemble(self.constant, linear, self.blocks.clone())
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn blocks(&self) -> &[(LseBlock, f64)] {
        &self.blocks
    }

    pub fn is_affine(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.constant
            + self.linear.iter().map(|&(v, a)| a * y[v]).sum::<f64>()
            + self.blocks.iter().map(|(b, w)| w * b.value(y)).sum::<f64>()
    }

    /// Value, gradient on [`Self::support`], and per-block evaluations.
    pub fn eval(&self, y: &[f64]) -> (f64, Vec<f64>, Vec<LseEval>) {
        let mut value = self.constant;
        let mut grad = vec![0.0; self.support.len()];
        for &(v, a) in &self.linear {
            value += a * y[v];
            grad[self.support.binary_search(&v).expect("linear var in support")] += a;
        }
        let mut evals = Vec::with_capacity(self.blocks.len());
        for (b, w) in &self.blocks {
            let ev = b.eval(y);
            value += w * ev.value;
            let mut k = 0;
            for (l, &v) in b.support.iter().enumerate() {
                while self.support[k] != v {
                    k += 1;
                }
                grad[k] += w * ev.grad[l];
            }
            evals.push(ev);
        }
        (value, grad, evals)
    }

    /// Dense gradient of length `n`.
    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let (_, g, _) = self.eval(y);
        let mut out = vec![0.0; y.len()];
        for (k, &v) in self.support.iter().enumerate() {
            out[v] = g[k];
        }
        out
    }
}

/// Posynomial constraint `P(y) = sum_t exp(log c_t + a_t . y) <= 1` kept in
/// exponential form. Its Hessian splits into one small outer product per
/// term, so a budget such as `sum_s x_s <= 1` adds only diagonal curvature.
#[derive(Debug, Clone)]
pub struct ExpPosy {
    terms: Vec<(f64, Vec<(usize, f64)>)>,
    support: Vec<usize>,
    log_form: LogConvexFn,
}

impl ExpPosy {
    pub fn new(p: &Posynomial) -> Self {
        let terms: Vec<(f64, Vec<(usize, f64)>)> =
            p.terms().iter().map(|m| (m.coeff().ln(), m.exponents().to_vec())).collect();
        let mut support: Vec<usize> = terms.iter().flat_map(|(_, e)| e.iter().map(|(v, _)| *v)).collect();
        support.sort_unstable();
        support.dedup();
        Self { terms, support, log_form: LogConvexFn::from_posynomial(p) }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Per-term variable lists.
    pub fn term_exponents(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.terms.iter().map(|(_, e)| e.as_slice())
    }

    /// `log P`, the same function as a [`LogConvexFn`].
    pub fn log_form(&self) -> &LogConvexFn {
        &self.log_form
    }

    fn term_values(&self, y: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|(lc, e)| (lc + e.iter().map(|&(v, a)| a * y[v]).sum::<f64>()).exp()).collect()
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.term_values(y).iter().sum()
    }

    /// `P(y)`, its gradient on [`Self::support`], and the per-term values.
    pub fn eval(&self, y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let tv = self.term_values(y);
        let mut grad = vec![0.0; self.support.len()];
        for ((_, e), &t) in self.terms.iter().zip(&tv) {
            for &(v, a) in e {
                grad[self.support.binary_search(&v).expect("var in support")] += t * a;
            }
        }
        (tv.iter().sum(), grad, tv)
    }
}

/// One inequality of a [`ConvexProgram`].
#[derive(Debug, Clone)]
pub enum Ineq {
    /// `f(y) <= 0` with barrier `-log(-f)`.
    Log(LogConvexFn),
    /// `P(y) <= 1` with barrier `-log(1 - P)`.
    Exp(ExpPosy),
}

impl Ineq {
    pub fn support(&self) -> &[usize] {
        match self {
            Ineq::Log(f) => f.support(),
            Ineq::Exp(p) => p.support(),
        }
    }

    /// The constraint written as `g(y) <= 0` with `g` log-convex.
    pub fn as_log(&self) -> &LogConvexFn {
        match self {
            Ineq::Log(f) => f,
            Ineq::Exp(p) => p.log_form(),
        }
    }

    /// Barrier slack: `-f` or `1 - P`, positive in the strict interior.
    pub fn slack(&self, y: &[f64]) -> f64 {
        match self {
            Ineq::Log(f) => -f.value(y),
            Ineq::Exp(p) => 1.0 - p.value(y),
        }
    }
}

/// Smooth convex program in `y`: minimise `objective` subject to every
/// inequality, `eq_rows . y = eq_rhs` and `lo <= y <= hi`.
#[derive(Debug, Clone)]
pub struct ConvexProgram {
    pub n: usize,
    pub objective: LogConvexFn,
    pub ineqs: Vec<Ineq>,
    pub eq_rows: Vec<Vec<(usize, f64)>>,
    pub eq_rhs: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Takes logs of everything. Bounds map to `log lo`, `log hi` (zero and
/// infinity map to unbounded sides) and equal bounds become an equality.
/// Plain posynomial constraints with several terms keep the exponential
/// form; everything else becomes a log-sum-exp expression.
pub fn to_log_convex(gp: &GpProblem) -> ConvexProgram {
    let n = gp.n_vars();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut eq_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut eq_rhs = Vec::new();
    for (v, &(l, h)) in gp.bounds().iter().enumerate() {
        if l == h {
            eq_rows.push(vec![(v, 1.0)]);
            eq_rhs.push(l.ln());
            lo.push(f64::NEG_INFINITY);
            hi.push(f64::INFINITY);
        } else {
            lo.push(if l > 0.0 { l.ln() } else { f64::NEG_INFINITY });
            hi.push(if h.is_finite() { h.ln() } else { f64::INFINITY });
        }
    }
    for m in gp.equalities() {
        eq_rows.push(m.exponents().to_vec());
        eq_rhs.push(-m.coeff().ln());
    }
    let ineqs = gp
        .constraints()
        .iter()
        .map(|c| match c.as_posynomial() {
            Some(p) if p.terms().len() > 1 => Ineq::Exp(ExpPosy::new(p)),
            _ => Ineq::Log(LogConvexFn::from_gen(c)),
        })
        .collect();
    ConvexProgram { n, objective: LogConvexFn::from_gen(gp.objective()), ineqs, eq_rows, eq_rhs, lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_is_affine() {
        let m = Monomial::new(3.0, [(0, 2.0), (1, -1.0)]).unwrap();
        let f = LogConvexFn::from_monomial(&m);
        assert!(f.is_affine());
        let y = [0.3, -1.2];
        assert!((f.value(&y) - (3f64.ln() + 0.6 + 1.2)).abs() < 1e-14);
        assert_eq!(f.gradient(&y), vec![2.0, -1.0]);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let p = Posynomial::from(Monomial::constant(5.0).unwrap());
        let f = LogConvexFn::from_posynomial(&p);
        let y = [0.7, 2.0];
        assert!((f.value(&y) - 5f64.ln()).abs() < 1e-15);
        assert!(f.gradient(&y).iter().all(|g| *g == 0.0));
    }

    #[test]
    fn exp_form_matches_log_form() {
        let p = Posynomial::new(vec![
            Monomial::new(0.2, [(0, 1.0)]).unwrap(),
            Monomial::new(0.3, [(1, 1.0), (2, -0.5)]).unwrap(),
        ])
        .unwrap();
        let e = ExpPosy::new(&p);
        let y = [0.1, -0.3, 0.8];
        assert!((e.value(&y).ln() - e.log_form().value(&y)).abs() < 1e-14);
        let (_, g, _) = e.eval(&y);
        let h = 1e-6;
        for (k, &v) in e.support().iter().enumerate() {
            let mut a = y;
            let mut b = y;
            a[v] += h;
            b[v] -= h;
            assert!((g[k] - (e.value(&a) - e.value(&b)) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn lse_value_is_log_of_posynomial() {
        let p = Posynomial::new(vec![
            Monomial::new(2.0, [(0, 1.0)]).unwrap(),
            Monomial::new(0.5, [(0, -1.0), (1, 2.0)]).unwrap(),
            Monomial::constant(1.0).unwrap(),
        ])
        .unwrap();
        let f = LogConvexFn::from_posynomial(&p);
        let x = [1.7f64, 0.4];
        let y = [x[0].ln(), x[1].ln()];
        assert!((f.value(&y) - p.eval(&x).unwrap().ln()).abs() < 1e-14);
    }
}
