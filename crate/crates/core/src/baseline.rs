//! Reference schemes: open-loop power control and time-domain
//! proportional-fair selection.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelGainTensor;
use crate::{dbm_to_w, UavError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlpcParams {
    pub p_max_dbm: f64,
    pub p0_dbm: f64,
    pub alpha: f64,
    pub m_rb: u32,
}

impl Default for OlpcParams {
    /// 23 dBm cap, -81 dBm target, 0.9 compensation, 50 resource blocks.
    fn default() -> Self {
        Self { p_max_dbm: 23.0, p0_dbm: -81.0, alpha: 0.9, m_rb: 50 }
    }
}

impl OlpcParams {
    pub fn validate(&self) -> Result<(), UavError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(UavError::config("olpc.alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        if self.m_rb == 0 {
            return Err(UavError::config("olpc.m_rb", "must be at least 1"));
        }
        if !(self.p0_dbm.is_finite() && self.p_max_dbm.is_finite()) {
            return Err(UavError::config("olpc.p0_dbm", "powers must be finite"));
        }
        Ok(())
    }
}

/// `min(P_max, P0 + 10 log10(M_RB) + alpha PL)` in dBm.
pub fn olpc_power_dbm(pl_db: f64, params: &OlpcParams) -> f64 {
    params.p_max_dbm.min(params.p0_dbm + 10.0 * f64::from(params.m_rb).log10() + params.alpha * pl_db)
}

/// Open-loop transmit power of every UE in watts.
///
/// The compensated loss is the serving link's path loss plus shadowing
/// when the tensor records it, otherwise the band-average serving gain.
pub fn olpc_powers_w(g: &ChannelGainTensor, serving: &[usize], params: &OlpcParams) -> Vec<f64> {
    serving
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let pl = g.coupling_db(i, j).unwrap_or_else(|| {
                let mean = (0..g.s_blocks()).map(|s| g.get(i, j, s)).sum::<f64>() / g.s_blocks() as f64;
                -10.0 * mean.log10()
            });
            dbm_to_w(olpc_power_dbm(pl, params))
        })
        .collect()
}

/// Exponentially averaged served rates of the UEs of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfState {
    pub r_hist: Vec<f64>,
    pub forgetting: f64,
}

pub const PF_INITIAL_RATE: f64 = 1e-3;
pub const PF_FORGETTING: f64 = 0.01;

impl PfState {
    pub fn new(n: usize) -> Self {
        Self { r_hist: vec![PF_INITIAL_RATE; n], forgetting: PF_FORGETTING }
    }

    /// Adds a UE with the initial average and returns its index.
    pub fn push(&mut self) -> usize {
        self.r_hist.push(PF_INITIAL_RATE);
        self.r_hist.len() - 1
    }

    pub fn remove(&mut self, k: usize) {
        self.r_hist.remove(k);
    }
}

/// Index maximising `rate / average`, lowest index on ties.
pub fn pf_select(instant_rates: &[f64], state: &PfState) -> Result<usize, UavError> {
    if instant_rates.is_empty() || instant_rates.len() != state.r_hist.len() {
        return Err(UavError::Scheduling(format!(
            "{} rates for {} tracked UEs",
            instant_rates.len(),
            state.r_hist.len()
        )));
    }
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (k, (r, h)) in instant_rates.iter().zip(&state.r_hist).enumerate() {
        let v = r / h;
        if v > best_v {
            best = k;
            best_v = v;
        }
    }
    Ok(best)
}

/// One averaging step: the served UE moves toward `rate`, the others decay.
pub fn pf_update(state: &PfState, served: usize, rate: f64) -> PfState {
    let mut next = state.clone();
    next.update(served, rate);
    next
}

impl PfState {
    pub fn update(&mut self, served: usize, rate: f64) {
        let b = self.forgetting;
        for (k, r) in self.r_hist.iter_mut().enumerate() {
            *r = (1.0 - b) * *r + if k == served { b * rate } else { 0.0 };
        }
    }
}
