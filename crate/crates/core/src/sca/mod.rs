//! SINR evaluation and successive geometric-programming power allocation.
//!
//! Everything here works on a [`LinkModel`], a dense view of the gain
//! tensor indexed by transmitting UE, receiving UE and column. A column is
//! a frequency block in the frequency domain and a TTI in the time domain.

mod algorithms;
mod band;
mod condense;
mod gp;
mod solver;

pub use algorithms::{
    check_intra_cell_disjoint, fd_maxmin, fd_maxsum_qos, fd_maxsum_qos_from, fd_sc_maxmin, fd_sc_maxmin_from,
    intra_cell_windows, maxsum_noqos, multi_ue_maxmin, olpc_allocation, td_maxmin, td_maxsum_qos,
    td_maxsum_qos_from, Alloc, QosOutcome,
};
pub use band::{sc_band_allocate, BandAllocation};
pub use condense::{condense, CondensationPoint, GAMMA_FLOOR};
pub use gp::{build_gp, Layout, Objective, VarMap};
pub use solver::{sca_solve, ScaOptions, ScaOutcome, StopReason};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelGainTensor, DEFAULT_BANDWIDTH_HZ, DEFAULT_NOISE_DENSITY_DBM_HZ};
use crate::{dbm_to_w, UavError};

pub const DEFAULT_P_MAX_DBM: f64 = 23.0;
pub const DEFAULT_P_MIN_W: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Frequency,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub s_blocks: usize,
    pub t_ttis: usize,
    pub bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    pub p_min_w: f64,
    pub p_max_w: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            s_blocks: 20,
            t_ttis: 20,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            noise_density_dbm_hz: DEFAULT_NOISE_DENSITY_DBM_HZ,
            p_min_w: DEFAULT_P_MIN_W,
            p_max_w: dbm_to_w(DEFAULT_P_MAX_DBM),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), UavError> {
        if self.s_blocks == 0 {
            return Err(UavError::config("segments", "must be at least 1"));
        }
        if self.t_ttis == 0 {
            return Err(UavError::config("ttis", "must be at least 1"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(UavError::config("bandwidth_hz", "must be positive"));
        }
        if !self.noise_density_dbm_hz.is_finite() {
            return Err(UavError::config("noise_density_dbm_hz", "must be finite"));
        }
        if !(self.p_min_w > 0.0 && self.p_min_w < self.p_max_w && self.p_max_w.is_finite()) {
            return Err(UavError::config("p_max_dbm", "power limits must satisfy 0 < p_min < p_max"));
        }
        Ok(())
    }

    /// Thermal noise over the whole band in watts.
    pub fn noise_w(&self) -> f64 {
        dbm_to_w(self.noise_density_dbm_hz) * self.bandwidth_hz
    }
}

/// Transmit powers in watts, one row per UE and one column per block or TTI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p: Vec<Vec<f64>>,
}

impl PowerAllocation {
    pub fn n_ue(&self) -> usize {
        self.p.len()
    }

    pub fn cols(&self) -> usize {
        self.p.first().map_or(0, Vec::len)
    }

    pub fn totals(&self) -> Vec<f64> {
        self.p.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), UavError> {
        write_matrix(&self.p, "p_w", out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrMatrix {
    pub gamma: Vec<Vec<f64>>,
}

impl SinrMatrix {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), UavError> {
        write_matrix(&self.gamma, "sinr", out)
    }
}

/// Writes an objective history as `iteration,objective` rows; row 0 is
/// the starting point.
pub fn write_history_csv<W: std::io::Write>(history: &[f64], out: W) -> Result<(), UavError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "objective"])?;
    for (k, v) in history.iter().enumerate() {
        w.write_record(&[k.to_string(), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

fn write_matrix<W: std::io::Write>(m: &[Vec<f64>], name: &str, out: W) -> Result<(), UavError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ue", "col", name])?;
    for (i, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            w.write_record(&[i.to_string(), c.to_string(), format!("{v:e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Dense per-column link gains between the UEs of one optimisation.
///
/// `gain(tx, rx, c)` is the gain from UE `tx` to the serving cell of UE
/// `rx`. UEs that share a serving cell never interfere with each other;
/// they are expected to use disjoint columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    n: usize,
    cols: usize,
    domain: Domain,
    gain: Vec<f64>,
    cell: Vec<usize>,
    share: Vec<f64>,
    noise: f64,
}

impl LinkModel {
    /// One column per block of `g`, noise scaled to the block bandwidth.
    pub fn frequency(g: &ChannelGainTensor, serving: &[usize], cfg: &ScenarioConfig) -> Result<Self, UavError> {
        let cols = g.s_blocks();
        Self::assemble(g, serving, cfg, Domain::Frequency, cols, cfg.noise_w() / cols as f64, |i, j, c| g.get(i, j, c))
    }

    /// `cfg.t_ttis` columns, each carrying the band-average gain over the full band.
    pub fn time(g: &ChannelGainTensor, serving: &[usize], cfg: &ScenarioConfig) -> Result<Self, UavError> {
        let s = g.s_blocks();
        Self::assemble(g, serving, cfg, Domain::Time, cfg.t_ttis, cfg.noise_w(), |i, j, _| {
            (0..s).map(|b| g.get(i, j, b)).sum::<f64>() / s as f64
        })
    }

    fn assemble(
        g: &ChannelGainTensor,
        serving: &[usize],
        cfg: &ScenarioConfig,
        domain: Domain,
        cols: usize,
        noise: f64,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self, UavError> {
        cfg.validate()?;
        let n = g.n_ue();
        if serving.len() != n {
            return Err(UavError::Dimension(format!("{} serving cells for {n} UEs", serving.len())));
        }
        if let Some(&c) = serving.iter().find(|&&c| c >= g.n_cells()) {
            return Err(UavError::Dimension(format!("serving cell {c} outside the tensor")));
        }
        if cols == 0 {
            return Err(UavError::Dimension("model needs at least one column".into()));
        }
        let mut gain = Vec::with_capacity(n * n * cols);
        for tx in 0..n {
            for &rx_cell in serving {
                for c in 0..cols {
                    gain.push(f(tx, rx_cell, c));
                }
            }
        }
        if gain.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(UavError::Dimension("gains must be positive and finite".into()));
        }
        Ok(Self { n, cols, domain, gain, cell: serving.to_vec(), share: vec![1.0; n], noise })
    }

    /// Builds a model directly from `gain(tx, rx, col)` values.
    pub fn from_fn(
        n: usize,
        cols: usize,
        domain: Domain,
        noise: f64,
        gain: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let mut g = Vec::with_capacity(n * n * cols);
        for tx in 0..n {
            for rx in 0..n {
                for c in 0..cols {
                    g.push(gain(tx, rx, c));
                }
            }
        }
        Self { n, cols, domain, gain: g, cell: (0..n).collect(), share: vec![1.0; n], noise }
    }

    /// Sets the per-UE multiplier applied to spectral efficiency.
    pub fn with_shares(mut self, share: Vec<f64>) -> Result<Self, UavError> {
        if share.len() != self.n || share.iter().any(|k| !(*k > 0.0)) {
            return Err(UavError::Dimension("one positive share per UE is required".into()));
        }
        self.share = share;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn share(&self, i: usize) -> f64 {
        self.share[i]
    }

    pub fn cell(&self, i: usize) -> usize {
        self.cell[i]
    }

    #[inline]
    pub fn gain(&self, tx: usize, rx: usize, c: usize) -> f64 {
        self.gain[(tx * self.n + rx) * self.cols + c]
    }

    #[inline]
    pub fn interferes(&self, tx: usize, rx: usize) -> bool {
        tx != rx && self.cell[tx] != self.cell[rx]
    }

    fn check(&self, p: &PowerAllocation) -> Result<(), UavError> {
        if p.n_ue() != self.n || p.p.iter().any(|r| r.len() != self.cols) {
            return Err(UavError::Dimension(format!(
                "allocation is {}x{}, model is {}x{}",
                p.n_ue(),
                p.cols(),
                self.n,
                self.cols
            )));
        }
        Ok(())
    }
}

/// Serving SINR of every UE on every column.
pub fn sinr(p: &PowerAllocation, m: &LinkModel) -> Result<SinrMatrix, UavError> {
    m.check(p)?;
    let gamma = (0..m.n)
        .map(|i| {
            (0..m.cols)
                .map(|c| {
                    let interference: f64 =
                        (0..m.n).filter(|&j| m.interferes(j, i)).map(|j| p.p[j][c] * m.gain(j, i, c)).sum();
                    p.p[i][c] * m.gain(i, i, c) / (m.noise + interference)
                })
                .collect()
        })
        .collect();
    Ok(SinrMatrix { gamma })
}

/// `share_i / cols * sum_c log2(1 + gamma_ic)` for every UE.
pub fn spectral_efficiency(gamma: &SinrMatrix, m: &LinkModel) -> Vec<f64> {
    gamma
        .gamma
        .iter()
        .enumerate()
        .map(|(i, row)| m.share[i] / row.len() as f64 * row.iter().map(|g| g.ln_1p()).sum::<f64>() / std::f64::consts::LN_2)
        .collect()
}

/// SINR followed by spectral efficiency.
pub fn evaluate(p: &PowerAllocation, m: &LinkModel) -> Result<Vec<f64>, UavError> {
    Ok(spectral_efficiency(&sinr(p, m)?, m))
}

/// Minimum SE expressed as the SINR whose single-block rate equals it, in dB.
pub fn equivalent_sinr_db(min_se: f64) -> f64 {
    10.0 * (2f64.powf(min_se) - 1.0).log10()
}
