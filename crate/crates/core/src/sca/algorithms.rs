use serde::{Deserialize, Serialize};

use super::band::{sc_band_allocate, sc_band_within, BandAllocation};
use super::gp::{Layout, Objective};
use super::solver::{sca_solve, ScaOptions, ScaOutcome};
use super::{sinr, Domain, LinkModel, PowerAllocation, ScenarioConfig};
use crate::UavError;

/// Result of one allocator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alloc {
    pub p: PowerAllocation,
    pub se: Vec<f64>,
    pub bands: Option<BandAllocation>,
    /// Objective history of the final SCA run.
    pub history: Vec<f64>,
    pub outer_iterations: usize,
}

impl Alloc {
    fn from_outcome(o: ScaOutcome, bands: Option<BandAllocation>) -> Self {
        Self { p: o.p, se: o.se, bands, history: o.history, outer_iterations: o.outer_iterations }
    }

    pub fn min_se(&self) -> f64 {
        self.se.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn sum_se(&self) -> f64 {
        self.se.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QosOutcome {
    Feasible(Alloc),
    /// The max-min point misses some floor; it is returned as the fallback.
    Infeasible { fallback: Alloc },
}

impl QosOutcome {
    pub fn alloc(&self) -> &Alloc {
        match self {
            QosOutcome::Feasible(a) => a,
            QosOutcome::Infeasible { fallback } => fallback,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, QosOutcome::Feasible(_))
    }
}

/// Open-loop powers: spread evenly over blocks in the frequency domain,
/// repeated in every TTI in the time domain.
pub fn olpc_allocation(m: &LinkModel, total_w: &[f64]) -> PowerAllocation {
    let cols = m.cols();
    let per_col = |p: f64| match m.domain() {
        Domain::Frequency => p / cols as f64,
        Domain::Time => p,
    };
    PowerAllocation { p: total_w.iter().map(|&p| vec![per_col(p); cols]).collect() }
}

/// The even start, plus an alternating one that favours every other
/// column. Both columns of a symmetric start stay symmetric under SCA,
/// so the second start is what lets UEs separate in frequency or time.
fn starts(m: &LinkModel, total_w: &[f64], windows: &[(usize, usize)]) -> Vec<PowerAllocation> {
    let even = PowerAllocation {
        p: total_w
            .iter()
            .zip(windows)
            .map(|(&p, &(lo, hi))| {
                let w = (hi - lo + 1) as f64;
                (0..m.cols())
                    .map(|c| {
                        if c < lo || c > hi {
                            0.0
                        } else if m.domain() == Domain::Time {
                            p
                        } else {
                            p / w
                        }
                    })
                    .collect()
            })
            .collect(),
    };
    let mut out = vec![even.clone()];
    if m.n() > 1 && windows.iter().any(|&(lo, hi)| hi > lo) {
        let mut alt = even;
        for (i, row) in alt.p.iter_mut().enumerate() {
            let (lo, hi) = windows[i];
            let weights: Vec<f64> = (lo..=hi).map(|c| if (c + i) % 2 == 0 { 1.0 } else { 0.01 }).collect();
            let norm = match m.domain() {
                Domain::Frequency => weights.iter().sum::<f64>(),
                Domain::Time => weights.iter().cloned().fold(0.0, f64::max),
            };
            for (c, w) in (lo..=hi).zip(&weights) {
                row[c] = total_w[i] * w / norm;
            }
        }
        out.push(alt);
    }
    out
}

fn best_run(
    m: &LinkModel,
    layout: &Layout,
    objective: &Objective,
    cfg: &ScenarioConfig,
    inits: &[PowerAllocation],
    opts: &ScaOptions,
) -> Result<ScaOutcome, UavError> {
    let mut best: Option<ScaOutcome> = None;
    for init in inits {
        let o = sca_solve(m, layout, objective, cfg, init, opts)?;
        if best.as_ref().is_none_or(|b| o.objective() > b.objective()) {
            best = Some(o);
        }
    }
    Ok(best.expect("at least one start"))
}

fn require(m: &LinkModel, domain: Domain, total_w: &[f64]) -> Result<(), UavError> {
    if m.domain() != domain {
        return Err(UavError::Dimension(format!("expected a {domain:?}-domain model")));
    }
    if total_w.len() != m.n() {
        return Err(UavError::Dimension("one initial power per UE is required".into()));
    }
    Ok(())
}

fn full_windows(m: &LinkModel) -> Vec<(usize, usize)> {
    vec![(0, m.cols() - 1); m.n()]
}

fn mask_of(m: &LinkModel, windows: &[(usize, usize)]) -> Layout {
    Layout::Free { mask: windows.iter().map(|&(lo, hi)| (0..m.cols()).map(|c| lo <= c && c <= hi).collect()).collect() }
}

/// Max-min without the single-carrier constraint. `init_w` holds each UE's
/// starting total power, normally its open-loop value.
pub fn fd_maxmin(m: &LinkModel, cfg: &ScenarioConfig, init_w: &[f64], opts: &ScaOptions) -> Result<Alloc, UavError> {
    require(m, Domain::Frequency, init_w)?;
    let w = full_windows(m);
    let o = best_run(m, &Layout::full(m.n(), m.cols()), &Objective::MaxMin, cfg, &starts(m, init_w, &w), opts)?;
    Ok(Alloc::from_outcome(o, None))
}

/// Max-min over TTIs, each power limited by `p_max` on its own.
pub fn td_maxmin(m: &LinkModel, cfg: &ScenarioConfig, init_w: &[f64], opts: &ScaOptions) -> Result<Alloc, UavError> {
    require(m, Domain::Time, init_w)?;
    let w = full_windows(m);
    let o = best_run(m, &Layout::full(m.n(), m.cols()), &Objective::MaxMin, cfg, &starts(m, init_w, &w), opts)?;
    Ok(Alloc::from_outcome(o, None))
}

fn check_eta(eta: f64) -> Result<(), UavError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(UavError::config("eta", format!("must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

/// Single-carrier max-min shared by the single- and multi-UE entry points.
fn sc_maxmin_in_windows(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    init_w: &[f64],
    eta: f64,
    windows: &[(usize, usize)],
    opts: &ScaOptions,
) -> Result<Alloc, UavError> {
    check_eta(eta)?;
    let free = best_run(m, &mask_of(m, windows), &Objective::MaxMin, cfg, &starts(m, init_w, windows), opts)?;
    sc_from_free(m, cfg, init_w, eta, windows, &free.p, opts)
}

fn sc_from_free(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    init_w: &[f64],
    eta: f64,
    windows: &[(usize, usize)],
    free: &PowerAllocation,
    opts: &ScaOptions,
) -> Result<Alloc, UavError> {
    let gamma = sinr(free, m)?;
    let full = windows.iter().all(|&(lo, hi)| lo == 0 && hi + 1 == m.cols());
    let bands = if full { sc_band_allocate(&gamma, eta).0 } else { sc_band_within(&gamma, eta, windows) };
    let banded = sca_solve(m, &Layout::Banded(bands.clone()), &Objective::MaxMin, cfg, free, opts)?;
    // Spanning the whole window with one density is always single-carrier
    // feasible, so it is kept whenever the heuristic bands do worse.
    let wide = BandAllocation { ranges: windows.iter().map(|&w| Some(w)).collect() };
    if wide != bands {
        let even = &starts(m, init_w, windows)[0];
        let whole = sca_solve(m, &Layout::Banded(wide.clone()), &Objective::MaxMin, cfg, even, opts)?;
        if whole.objective() > banded.objective() {
            return Ok(Alloc::from_outcome(whole, Some(wide)));
        }
    }
    Ok(Alloc::from_outcome(banded, Some(bands)))
}

/// Unconstrained max-min, band assignment, then max-min over one density per band.
pub fn fd_sc_maxmin(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    init_w: &[f64],
    eta: f64,
    opts: &ScaOptions,
) -> Result<Alloc, UavError> {
    require(m, Domain::Frequency, init_w)?;
    sc_maxmin_in_windows(m, cfg, init_w, eta, &full_windows(m), opts)
}

/// [`fd_sc_maxmin`] continuing from an unconstrained max-min result the
/// caller already has, such as the output of [`fd_maxmin`].
pub fn fd_sc_maxmin_from(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    init_w: &[f64],
    eta: f64,
    free: &Alloc,
    opts: &ScaOptions,
) -> Result<Alloc, UavError> {
    require(m, Domain::Frequency, init_w)?;
    check_eta(eta)?;
    if free.p.n_ue() != m.n() || free.p.cols() != m.cols() {
        return Err(UavError::Dimension("unconstrained allocation does not match the model".into()));
    }
    sc_from_free(m, cfg, init_w, eta, &full_windows(m), &free.p, opts)
}

fn check_qos(qos: &[f64], n: usize) -> Result<(), UavError> {
    if qos.len() != n || qos.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(UavError::config("qos", "one non-negative floor per UE is required"));
    }
    Ok(())
}

fn maxsum_from(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    qos: &[f64],
    mm: Alloc,
    layout: Layout,
    opts: &ScaOptions,
) -> Result<QosOutcome, UavError> {
    if mm.se.iter().zip(qos).any(|(s, r)| s < r) {
        return Ok(QosOutcome::Infeasible { fallback: mm });
    }
    let o = sca_solve(m, &layout, &Objective::MaxSum { qos: Some(qos.to_vec()) }, cfg, &mm.p, opts)?;
    if o.se.iter().zip(qos).all(|(s, r)| *s >= r - 1e-6) && o.se.iter().sum::<f64>() >= mm.sum_se() {
        Ok(QosOutcome::Feasible(Alloc::from_outcome(o, mm.bands)))
    } else {
        Ok(QosOutcome::Feasible(mm))
    }
}

/// Sum maximisation under per-UE SE floors and the single-carrier bands
/// found by [`fd_sc_maxmin`], which also supplies the starting point.
pub fn fd_maxsum_qos(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    init_w: &[f64],
    qos: &[f64],
    eta: f64,
    opts: &ScaOptions,
) -> Result<QosOutcome, UavError> {
    check_qos(qos, m.n())?;
    let mm = fd_sc_maxmin(m, cfg, init_w, eta, opts)?;
    let layout = Layout::Banded(mm.bands.clone().expect("single-carrier result has bands"));
    maxsum_from(m, cfg, qos, mm, layout, opts)
}

/// [`fd_maxsum_qos`] from a single-carrier max-min result already at hand.
pub fn fd_maxsum_qos_from(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    qos: &[f64],
    sc: &Alloc,
    opts: &ScaOptions,
) -> Result<QosOutcome, UavError> {
    check_qos(qos, m.n())?;
    let bands = sc.bands.clone().ok_or_else(|| UavError::Dimension("max-min result carries no bands".into()))?;
    if sc.p.n_ue() != m.n() || sc.p.cols() != m.cols() {
        return Err(UavError::Dimension("max-min allocation does not match the model".into()));
    }
    maxsum_from(m, cfg, qos, sc.clone(), Layout::Banded(bands), opts)
}

/// [`td_maxsum_qos`] from a time-domain max-min result already at hand.
pub fn td_maxsum_qos_from(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    qos: &[f64],
    mm: &Alloc,
    opts: &ScaOptions,
) -> Result<QosOutcome, UavError> {
    check_qos(qos, m.n())?;
    if m.domain() != Domain::Time || mm.p.n_ue() != m.n() || mm.p.cols() != m.cols() {
        return Err(UavError::Dimension("max-min allocation does not match the time-domain model".into()));
    }
    maxsum_from(m, cfg, qos, mm.clone(), Layout::full(m.n(), m.cols()), opts)
}

/// Time-domain counterpart of [`fd_maxsum_qos`], started from [`td_maxmin`].
pub fn td_maxsum_qos(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    init_w: &[f64],
    qos: &[f64],
    opts: &ScaOptions,
) -> Result<QosOutcome, UavError> {
    check_qos(qos, m.n())?;
    let mm = td_maxmin(m, cfg, init_w, opts)?;
    maxsum_from(m, cfg, qos, mm, Layout::full(m.n(), m.cols()), opts)
}

/// Unconstrained sum maximisation from the open-loop point, in either domain.
pub fn maxsum_noqos(m: &LinkModel, cfg: &ScenarioConfig, init_w: &[f64], opts: &ScaOptions) -> Result<Alloc, UavError> {
    if init_w.len() != m.n() {
        return Err(UavError::Dimension("one initial power per UE is required".into()));
    }
    let init = olpc_allocation(m, init_w);
    let o = sca_solve(m, &Layout::full(m.n(), m.cols()), &Objective::MaxSum { qos: None }, cfg, &init, opts)?;
    Ok(Alloc::from_outcome(o, None))
}

/// Equal contiguous split of the columns among the UEs of each cell, in UE order.
pub fn intra_cell_windows(m: &LinkModel) -> Result<Vec<(usize, usize)>, UavError> {
    let cols = m.cols();
    let mut out = vec![(0, 0); m.n()];
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..m.n() {
        members.entry(m.cell(i)).or_default().push(i);
    }
    for (cell, ues) in members {
        let k = ues.len();
        if k > cols {
            return Err(UavError::config("ues_per_cell", format!("cell {cell} has {k} UEs for {cols} blocks")));
        }
        for (q, &i) in ues.iter().enumerate() {
            out[i] = (q * cols / k, (q + 1) * cols / k - 1);
        }
    }
    Ok(out)
}

/// Fails if two UEs of the same cell hold overlapping bands.
pub fn check_intra_cell_disjoint(m: &LinkModel, bands: &BandAllocation) -> Result<(), UavError> {
    for i in 0..m.n() {
        for j in i + 1..m.n() {
            if m.cell(i) != m.cell(j) {
                continue;
            }
            if let (Some((a, b)), Some((c, d))) = (bands.ranges[i], bands.ranges[j]) {
                if a <= d && c <= b {
                    return Err(UavError::config(
                        "schedule",
                        format!("UEs {i} and {j} of cell {} overlap in frequency", m.cell(i)),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Single-carrier max-min when a cell may serve several UEs.
///
/// UEs of one cell split the band into equal contiguous windows, and the
/// model's shares should equal the number of UEs in each cell so that SE
/// is normalised to the whole band.
pub fn multi_ue_maxmin(
    m: &LinkModel,
    cfg: &ScenarioConfig,
    init_w: &[f64],
    eta: f64,
    opts: &ScaOptions,
) -> Result<Alloc, UavError> {
    require(m, Domain::Frequency, init_w)?;
    let windows = intra_cell_windows(m)?;
    let a = sc_maxmin_in_windows(m, cfg, init_w, eta, &windows, opts)?;
    check_intra_cell_disjoint(m, a.bands.as_ref().expect("bands"))?;
    Ok(a)
}
