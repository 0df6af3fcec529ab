//! Geometric programs approximating one SCA step.
//!
//! SINR auxiliaries are eliminated: every constraint is written directly
//! in the power variables through the interference-to-signal posynomial
//! `I_ic = (noise + sum_j p_jc G_jic) / (p_ic G_iic) = 1 / gamma_ic`,
//! so the condensed rate bound `c_i prod_c gamma_ic^w_ic` becomes the
//! generalized posynomial `prod_c I_ic^w_ic / c_i`.

use posy::{GenPosynomial, GpProblem, Monomial, Posynomial};

use super::band::BandAllocation;
use super::condense::CondensationPoint;
use super::{Domain, LinkModel, PowerAllocation, ScenarioConfig};
use crate::UavError;

/// Which powers are free and how they are tied together.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Every `true` entry is an independent power. In the frequency domain
    /// each UE's free entries share its power budget; in the time domain
    /// each entry is limited by the budget on its own.
    Free { mask: Vec<Vec<bool>> },
    /// One power density per UE over its contiguous band.
    Banded(BandAllocation),
}

impl Layout {
    pub fn full(n: usize, cols: usize) -> Self {
        Layout::Free { mask: vec![vec![true; cols]; n] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Maximise the smallest spectral efficiency.
    MaxMin,
    /// Maximise the sum, optionally keeping every UE above a floor.
    MaxSum { qos: Option<Vec<f64>> },
}

impl Objective {
    /// Value of the objective for the given SEs, or `-inf` if a QoS floor is violated.
    pub fn score(&self, se: &[f64]) -> f64 {
        match self {
            Objective::MaxMin => se.iter().cloned().fold(f64::INFINITY, f64::min),
            Objective::MaxSum { qos } => {
                if let Some(r) = qos {
                    if se.iter().zip(r).any(|(s, r)| *s < r - 1e-9) {
                        return f64::NEG_INFINITY;
                    }
                }
                se.iter().sum()
            }
        }
    }
}

/// Maps allocation entries to GP variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VarMap {
    entry: Vec<Vec<Option<usize>>>,
    hi: Vec<f64>,
    owner: Vec<usize>,
    budgets: Vec<Vec<usize>>,
    p_min: f64,
    p_max: f64,
}

impl VarMap {
    pub fn new(m: &LinkModel, layout: &Layout, cfg: &ScenarioConfig) -> Result<Self, UavError> {
        let (n, cols) = (m.n(), m.cols());
        let mut entry = vec![vec![None; cols]; n];
        let mut hi = Vec::new();
        let mut owner = Vec::new();
        let mut budgets = Vec::new();
        match layout {
            Layout::Free { mask } => {
                if mask.len() != n || mask.iter().any(|r| r.len() != cols) {
                    return Err(UavError::Dimension("mask shape differs from the model".into()));
                }
                for (i, row) in mask.iter().enumerate() {
                    let vars: Vec<usize> = row
                        .iter()
                        .enumerate()
                        .filter(|(_, &on)| on)
                        .map(|(c, _)| {
                            entry[i][c] = Some(hi.len());
                            hi.push(cfg.p_max_w);
                            owner.push(i);
                            hi.len() - 1
                        })
                        .collect();
                    if vars.is_empty() {
                        return Err(UavError::Dimension(format!("UE {i} has no usable column")));
                    }
                    if m.domain() == Domain::Frequency && vars.len() > 1 {
                        budgets.push(vars);
                    }
                }
            }
            Layout::Banded(bands) => {
                if bands.ranges.len() != n {
                    return Err(UavError::Dimension("one band per UE is required".into()));
                }
                for (i, r) in bands.ranges.iter().enumerate() {
                    let (first, last) = r.ok_or_else(|| UavError::Dimension(format!("UE {i} has an empty band")))?;
                    if last >= cols || first > last {
                        return Err(UavError::Dimension(format!("band of UE {i} is outside the columns")));
                    }
                    for e in &mut entry[i][first..=last] {
                        *e = Some(hi.len());
                    }
                    hi.push(cfg.p_max_w / (last - first + 1) as f64);
                    owner.push(i);
                }
            }
        }
        Ok(Self { entry, hi, owner, budgets, p_min: cfg.p_min_w, p_max: cfg.p_max_w })
    }

    pub fn n_power_vars(&self) -> usize {
        self.hi.len()
    }

    pub fn var(&self, i: usize, c: usize) -> Option<usize> {
        self.entry[i][c]
    }

    /// Expands power variables into a full allocation.
    pub fn allocation(&self, x: &[f64]) -> PowerAllocation {
        let p = self
            .entry
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.map_or(self.p_min, |k| x[k].clamp(self.p_min, self.hi[k])))
                    .collect()
            })
            .collect();
        let mut a = PowerAllocation { p };
        self.enforce_budget(&mut a);
        a
    }

    fn enforce_budget(&self, a: &mut PowerAllocation) {
        for vars in &self.budgets {
            let i = self.owner[vars[0]];
            let row = &mut a.p[i];
            let total: f64 = row.iter().zip(&self.entry[i]).filter(|(_, e)| e.is_some()).map(|(p, _)| p).sum();
            if total > self.p_max {
                let k = self.p_max / total;
                for (p, e) in row.iter_mut().zip(&self.entry[i]) {
                    if e.is_some() {
                        *p = (*p * k).max(self.p_min);
                    }
                }
            }
        }
    }

    /// Power variables that reproduce `p` as closely as the layout allows.
    pub fn variables_of(&self, p: &PowerAllocation) -> Vec<f64> {
        let mut sum = vec![0.0; self.hi.len()];
        let mut cnt = vec![0usize; self.hi.len()];
        for (i, row) in self.entry.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                if let Some(k) = e {
                    sum[*k] += p.p[i][c];
                    cnt[*k] += 1;
                }
            }
        }
        sum.iter().zip(&cnt).zip(&self.hi).map(|((s, &n), hi)| (s / n as f64).clamp(self.p_min, *hi)).collect()
    }

    /// Restricts `p` to the layout.
    pub fn project(&self, p: &PowerAllocation) -> PowerAllocation {
        self.allocation(&self.variables_of(p))
    }

    /// Variables strictly inside the bounds and budgets.
    pub fn interior(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> =
            x.iter().zip(&self.hi).map(|(v, hi)| v.clamp(self.p_min * 1.01, hi * 0.999)).collect();
        for vars in &self.budgets {
            let total: f64 = vars.iter().map(|&k| y[k]).sum();
            if total > 0.999 * self.p_max {
                let k = 0.999 * self.p_max / total;
                for &v in vars {
                    y[v] = (y[v] * k).max(self.p_min * 1.01);
                }
            }
        }
        y
    }

    /// `I_ic` in the power variables, or `None` when `p_ic` is fixed.
    fn interference_ratio(&self, m: &LinkModel, i: usize, c: usize) -> Option<Posynomial> {
        let own = self.entry[i][c]?;
        let g_own = m.gain(i, i, c);
        let mut constant = m.noise();
        let mut terms = Vec::new();
        for j in (0..m.n()).filter(|&j| m.interferes(j, i)) {
            let g = m.gain(j, i, c);
            match self.entry[j][c] {
                Some(k) => terms.push(Monomial::new(g / g_own, [(k, 1.0), (own, -1.0)]).expect("positive gain")),
                None => constant += self.p_min * g,
            }
        }
        terms.push(Monomial::new(constant / g_own, [(own, -1.0)]).expect("positive noise"));
        Some(Posynomial::new(terms).expect("non-empty"))
    }
}

/// Condensed constraint data for UE `i`: the `ln c_i` restricted to free
/// columns and the `(I_ic, w_ic)` factors.
fn condensed_factors(m: &LinkModel, vm: &VarMap, cond: &CondensationPoint, i: usize) -> (f64, Vec<(Posynomial, f64)>) {
    let mut ln_c = 0.0;
    let mut factors = Vec::new();
    for c in 0..m.cols() {
        if let Some(ratio) = vm.interference_ratio(m, i, c) {
            let (a, w) = (cond.a0[i][c], cond.w[i][c]);
            ln_c += a.ln_1p() - w * a.ln();
            factors.push((ratio, w));
        }
    }
    (ln_c, factors)
}

/// Builds the GP of one SCA step around the anchors in `cond`.
///
/// Variables are the layout's power variables followed, for
/// [`Objective::MaxMin`], by `b = 2^(cols * t)` where `t` is the common
/// SE target. Returns the problem and the index of `b` if present.
pub fn build_gp(
    m: &LinkModel,
    vm: &VarMap,
    cond: &CondensationPoint,
    objective: &Objective,
    cfg: &ScenarioConfig,
) -> Result<(GpProblem, Option<usize>), UavError> {
    if cond.a0.len() != m.n() || cond.a0.iter().any(|r| r.len() != m.cols()) {
        return Err(UavError::Dimension("condensation point does not match the model".into()));
    }
    let np = vm.n_power_vars();
    let cols = m.cols() as f64;
    let ln2 = std::f64::consts::LN_2;
    let mut gp;
    let mut b_index = None;
    match objective {
        Objective::MaxMin => {
            let b = np;
            b_index = Some(b);
            gp = GpProblem::new(np + 1, Monomial::new(1.0, [(b, -1.0)])?);
            for i in 0..m.n() {
                let (ln_c, factors) = condensed_factors(m, vm, cond, i);
                let scale = Monomial::new((-ln_c).exp(), [(b, 1.0 / m.share(i))])?;
                gp.add_constraint(GenPosynomial::new(scale, factors)?);
            }
        }
        Objective::MaxSum { qos } => {
            let mut all = Vec::new();
            let mut qos_constraints = Vec::new();
            for i in 0..m.n() {
                let (ln_c, factors) = condensed_factors(m, vm, cond, i);
                let k = m.share(i);
                if let Some(r) = qos.as_ref().map(|q| q[i]).filter(|r| *r > 0.0) {
                    let scale = Monomial::constant((cols * r * ln2 / k - ln_c).exp())?;
                    qos_constraints.push(GenPosynomial::new(scale, factors.clone())?);
                }
                all.extend(factors.into_iter().map(|(f, w)| (f, k * w)));
            }
            gp = GpProblem::new(np, GenPosynomial::new(Monomial::constant(1.0)?, all)?);
            for c in qos_constraints {
                gp.add_constraint(c);
            }
        }
    }
    for (k, hi) in vm.hi.iter().enumerate() {
        gp.set_bounds(k, cfg.p_min_w, *hi);
    }
    for vars in &vm.budgets {
        let terms = vars.iter().map(|&k| Monomial::new(1.0 / cfg.p_max_w, [(k, 1.0)])).collect::<Result<_, _>>()?;
        gp.add_constraint(Posynomial::new(terms)?);
    }
    Ok((gp, b_index))
}
