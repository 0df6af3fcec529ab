use posy::{solve, GpStatus, SolveOptions};
use serde::{Deserialize, Serialize};

use super::condense::condense;
use super::gp::{build_gp, Layout, Objective, VarMap};
use super::{evaluate, sinr, LinkModel, PowerAllocation, ScenarioConfig};
use crate::UavError;

const STALL_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaOptions {
    /// Stop once no significant power moves by more than this many dB.
    pub eps_db: f64,
    pub max_outer: usize,
    pub gp_tol: f64,
    /// Newton budget per GP. A step that runs out is still taken if it
    /// improves the true objective.
    pub gp_max_iter: usize,
    /// Stop once five accepted steps together gain less than this fraction.
    pub obj_rel_tol: f64,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self { eps_db: 1e-3, max_outer: 50, gp_tol: 1e-7, gp_max_iter: 40, obj_rel_tol: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxOuter,
    /// The GP step did not improve the true objective, so the previous point was kept.
    NoImprovement,
    /// The GP could not be solved; carries the solver status.
    SolverFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaOutcome {
    pub p: PowerAllocation,
    pub se: Vec<f64>,
    /// True objective at the starting point and after every accepted step.
    pub history: Vec<f64>,
    pub outer_iterations: usize,
    pub stop: StopReason,
    pub newton_steps: usize,
}

impl ScaOutcome {
    pub fn objective(&self) -> f64 {
        *self.history.last().expect("history starts with the initial point")
    }
}

fn max_db_change(a: &PowerAllocation, b: &PowerAllocation, floor: f64) -> f64 {
    a.p.iter()
        .flatten()
        .zip(b.p.iter().flatten())
        .filter(|(x, y)| x.max(**y) >= floor)
        .map(|(x, y)| (10.0 * (x / y).log10()).abs())
        .fold(0.0, f64::max)
}

/// Successive condensation: anchor at the current SINRs, solve the GP,
/// move, repeat.
///
/// A step is kept only if it does not lower the true objective, so the
/// history is non-decreasing. Powers that stay below `1e-6 p_max` on
/// both sides of a step are ignored by the convergence test, which also
/// fires when the objective has stopped moving.
pub fn sca_solve(
    m: &LinkModel,
    layout: &Layout,
    objective: &Objective,
    cfg: &ScenarioConfig,
    init: &PowerAllocation,
    opts: &ScaOptions,
) -> Result<ScaOutcome, UavError> {
    cfg.validate()?;
    if let Objective::MaxSum { qos: Some(r) } = objective {
        if r.len() != m.n() || r.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(UavError::config("qos", "one non-negative floor per UE is required"));
        }
    }
    if init.n_ue() != m.n() || init.p.iter().any(|r| r.len() != m.cols()) {
        return Err(UavError::Dimension("initial allocation does not match the model".into()));
    }
    let vm = VarMap::new(m, layout, cfg)?;
    let mut p = vm.project(init);
    let mut se = evaluate(&p, m)?;
    let mut obj = objective.score(&se);
    let mut history = vec![obj];
    let mut newton_steps = 0;
    let mut stop = StopReason::MaxOuter;
    let mut outer = 0;
    let floor = 1e-6 * cfg.p_max_w;
    while outer < opts.max_outer {
        outer += 1;
        let cond = condense(&sinr(&p, m)?.gamma);
        let (gp, b) = build_gp(m, &vm, &cond, objective, cfg)?;
        let mut hint = vm.interior(&vm.variables_of(&p));
        if b.is_some() {
            let at = vm.allocation(&hint);
            let gamma = sinr(&at, m)?.gamma;
            let ln_b = (0..m.n())
                .map(|i| {
                    let used: Vec<usize> = (0..m.cols()).filter(|&c| vm.var(i, c).is_some()).collect();
                    let ln_h: f64 = used
                        .iter()
                        .map(|&c| {
                            let (a, w) = (cond.a0[i][c], cond.w[i][c]);
                            a.ln_1p() - w * a.ln() + w * gamma[i][c].ln()
                        })
                        .sum();
                    m.share(i) * ln_h
                })
                .fold(f64::INFINITY, f64::min);
            hint.push((ln_b - 1e-3).exp().max(f64::MIN_POSITIVE));
        }
        let sol = solve(&gp, &SolveOptions::default().with_tol(opts.gp_tol).with_max_iter(opts.gp_max_iter).with_hint(hint))?;
        newton_steps += sol.newton_steps;
        if !matches!(sol.status, GpStatus::Optimal | GpStatus::MaxIter) {
            stop = StopReason::SolverFailed(format!("{:?}", sol.status));
            break;
        }
        let cand = vm.allocation(&sol.x[..vm.n_power_vars()]);
        let cand_se = evaluate(&cand, m)?;
        let cand_obj = objective.score(&cand_se);
        if !(cand_obj >= obj - 1e-9 * obj.abs().max(1.0)) {
            stop = StopReason::NoImprovement;
            break;
        }
        let change = max_db_change(&cand, &p, floor);
        p = cand;
        se = cand_se;
        obj = cand_obj;
        history.push(obj);
        let stalled = history.len() > STALL_WINDOW
            && obj - history[history.len() - 1 - STALL_WINDOW] <= opts.obj_rel_tol * obj.abs().max(1e-12);
        if change < opts.eps_db || stalled {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(ScaOutcome { p, se, history, outer_iterations: outer, stop, newton_steps })
}
