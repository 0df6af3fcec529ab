//! Standard-form problems, solver options and solutions.

use serde::{Deserialize, Serialize};

use crate::algebra::{GenPosynomial, Monomial};
use crate::barrier::{self, Exit, Params, PhaseOne, Verdict};
use crate::convex::to_log_convex;
use crate::newton::Layout;
use crate::GpError;

/// Minimise `objective` subject to `constraints[k] <= 1`,
/// `equalities[k] == 1` and `lo_v <= x_v <= hi_v`.
///
/// A lower bound of `0` or an upper bound of `+inf` leaves that side open.
/// Equal bounds pin the variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpProblem {
    n_vars: usize,
    objective: GenPosynomial,
    constraints: Vec<GenPosynomial>,
    equalities: Vec<Monomial>,
    #[serde(with = "open_bounds")]
    bounds: Vec<(f64, f64)>,
}

/// JSON has no infinity, so an open upper bound is written as `null`.
mod open_bounds {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(b: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<(f64, Option<f64>)> = b.iter().map(|&(l, h)| (l, h.is_finite().then_some(h))).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, f64)>, D::Error> {
        let v: Vec<(f64, Option<f64>)> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|(l, h)| (l, h.unwrap_or(f64::INFINITY))).collect())
    }
}

impl GpProblem {
    pub fn new(n_vars: usize, objective: impl Into<GenPosynomial>) -> Self {
        Self {
            n_vars,
            objective: objective.into(),
            constraints: Vec::new(),
            equalities: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n_vars],
        }
    }

    pub fn add_constraint(&mut self, c: impl Into<GenPosynomial>) -> &mut Self {
        self.constraints.push(c.into());
        self
    }

    pub fn add_equality(&mut self, m: Monomial) -> &mut Self {
        self.equalities.push(m);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn objective(&self) -> &GenPosynomial {
        &self.objective
    }

    pub fn constraints(&self) -> &[GenPosynomial] {
        &self.constraints
    }

    pub fn equalities(&self) -> &[Monomial] {
        &self.equalities
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn validate(&self) -> Result<(), GpError> {
        if self.bounds.len() != self.n_vars {
            return Err(GpError::Malformed(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                self.n_vars
            )));
        }
        for (var, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo >= 0.0 && hi > 0.0 && lo <= hi) || lo.is_infinite() || hi.is_nan() {
                return Err(GpError::InvalidBounds { var, lo, hi });
            }
        }
        let vars = std::iter::once(self.objective.max_var())
            .chain(self.constraints.iter().map(GenPosynomial::max_var))
            .chain(self.equalities.iter().map(Monomial::max_var));
        if let Some(v) = vars.flatten().find(|&v| v >= self.n_vars) {
            return Err(GpError::UnknownVariable(v));
        }
        Ok(())
    }

    /// JSON text holding the variable count, term lists and bounds.
    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serialises")
    }

    pub fn from_text(s: &str) -> Result<Self, GpError> {
        let gp: Self = serde_json::from_str(s)?;
        gp.validate()?;
        Ok(gp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GpStatus {
    Optimal,
    Infeasible,
    MaxIter,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSolution {
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Upper bound on log-domain suboptimality at the returned point.
    pub kkt_residual: f64,
    pub status: GpStatus,
    pub newton_steps: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    /// Newton step budget shared by phase I and phase II.
    pub max_iter: usize,
    /// Starting point; pulled into the box interior before use.
    pub hint: Option<Vec<f64>>,
    pub mu: f64,
    pub tau0: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 200, hint: None, mu: 20.0, tau0: 1.0 }
    }
}

impl SolveOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_hint(mut self, hint: Vec<f64>) -> Self {
        self.hint = Some(hint);
        self
    }
}

fn starting_point(lo: &[f64], hi: &[f64], hint: Option<&[f64]>) -> Vec<f64> {
    (0..lo.len())
        .map(|v| {
            let (l, h) = (lo[v], hi[v]);
            let guess = hint.and_then(|x| x.get(v)).filter(|x| **x > 0.0 && x.is_finite()).map(|x| x.ln());
            let mid = match (l.is_finite(), h.is_finite()) {
                (true, true) => 0.5 * (l + h),
                (true, false) => l.max(0.0) + 1.0,
                (false, true) => h.min(0.0) - 1.0,
                (false, false) => 0.0,
            };
            let y = guess.unwrap_or(mid);
            let margin = if l.is_finite() && h.is_finite() { (0.01 * (h - l)).min(1e-3) } else { 1e-3 };
            y.clamp(l + margin, h - margin)
        })
        .collect()
}

/// Solves `gp` in log coordinates. Infeasibility and budget exhaustion are
/// reported through [`GpStatus`]; only malformed input is an error.
pub fn solve(gp: &GpProblem, opts: &SolveOptions) -> Result<GpSolution, GpError> {
    gp.validate()?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 || !(opts.mu > 1.0) || !(opts.tau0 > 0.0) {
        return Err(GpError::InvalidOption(format!(
            "tol={} max_iter={} mu={} tau0={}",
            opts.tol, opts.max_iter, opts.mu, opts.tau0
        )));
    }
    let prog = to_log_convex(gp);
    let prm = Params { tol: opts.tol, max_iter: opts.max_iter, mu: opts.mu, tau0: opts.tau0 };
    let mut y = starting_point(&prog.lo, &prog.hi, opts.hint.as_deref());
    barrier::project_equalities(&prog, &mut y);
    let mut steps = 0;
    let finish = |y: &[f64], status, kkt, steps| {
        let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        let objective_value = gp.objective().eval(&x).unwrap_or(f64::NAN);
        GpSolution { x, objective_value, kkt_residual: kkt, status, newton_steps: steps }
    };
    if !barrier::strictly_feasible(&prog, &y) {
        match barrier::phase_one(&prog, &y, &prm, &mut steps) {
            PhaseOne::Feasible(y1) => y = y1,
            PhaseOne::Infeasible => return Ok(finish(&y, GpStatus::Infeasible, f64::INFINITY, steps)),
            PhaseOne::Undecided(y1) => return Ok(finish(&y1, GpStatus::MaxIter, f64::INFINITY, steps)),
        }
    }
    let layout = Layout::new(prog.n, &prog.objective, &prog.ineqs);
    let mut prm = prm;
    if opts.hint.is_some() {
        // a warm start is usually close to some point of the central path
        if let Some(t) = barrier::central_tau(&prog, &y) {
            let m = (prog.ineqs.len() + 2 * prog.n) as f64;
            prm.tau0 = prm.tau0.max(t.min(0.1 * m / prm.tol));
        }
    }
    let res = barrier::run(&prog, &layout, y, &prm, &mut steps, |_| false, |_, _| Verdict::Continue);
    let kkt = res.gap.max(res.decrement / res.tau);
    let status = match res.exit {
        Exit::Converged if kkt <= opts.tol => GpStatus::Optimal,
        Exit::Unbounded => GpStatus::Unbounded,
        _ => GpStatus::MaxIter,
    };
    Ok(finish(&res.y, status, kkt, steps))
}
