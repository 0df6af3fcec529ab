//! Link budget and frequency-selective gains.
//!
//! A gain tensor entry `g[i][j][s]` is the linear power gain from UE `i` to
//! the antenna of cell `j` on frequency block `s`. It combines distance path
//! loss, log-normal shadowing, the sector and UAV antenna patterns, and the
//! block-averaged response of one tapped-delay-line realisation per link.
//!
//! Block gains are exact averages of `|H(f)|^2` over each sub-band, so the
//! mean of the `S` block gains equals the single-block gain of the same
//! realisation and coarser tensors can be derived with [`ChannelGainTensor::regroup`].

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::topology::{NetworkLayout, UeDrop};
use crate::UavError;

pub const DEFAULT_BANDWIDTH_HZ: f64 = 9e6;
pub const DEFAULT_NOISE_DENSITY_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleParams {
    pub ple: f64,
    pub pl_1m_db: f64,
    pub shadow_std_db: f64,
}

impl Default for LargeScaleParams {
    fn default() -> Self {
        Self { ple: 2.1, pl_1m_db: 32.8, shadow_std_db: 4.4 }
    }
}

impl LargeScaleParams {
    pub fn validate(&self) -> Result<(), UavError> {
        if !(self.ple > 0.0 && self.ple.is_finite()) {
            return Err(UavError::config("channel.ple", format!("must be positive, got {}", self.ple)));
        }
        if !(self.shadow_std_db >= 0.0 && self.shadow_std_db.is_finite()) {
            return Err(UavError::config("channel.shadow_std_db", "must be non-negative"));
        }
        if !self.pl_1m_db.is_finite() {
            return Err(UavError::config("channel.pl_1m_db", "must be finite"));
        }
        Ok(())
    }
}

/// `pl_1m + 10 ple log10(d)`, with `d` clamped to at least one metre.
pub fn path_loss_db(distance_3d: f64, params: &LargeScaleParams) -> f64 {
    params.pl_1m_db + 10.0 * params.ple * distance_3d.max(1.0).log10()
}

/// Power delay profile. `tap_powers_db` are total tap powers summing to
/// one in linear scale; tap 0 is Rician with its own K-factor
/// `rician_k_db`, the others are Rayleigh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdlProfile {
    pub tap_delays: Vec<f64>,
    pub tap_powers_db: Vec<f64>,
    pub rician_k_db: f64,
}

impl Default for TdlProfile {
    /// Twelve taps, 30 dB exponential decay of the scattered part, a
    /// line-of-sight component 15 dB above the total scattered power, and
    /// a 10 ns RMS delay spread.
    fn default() -> Self {
        Self::exponential(12, 30.0, 10e-9, 15.0)
    }
}

impl TdlProfile {
    /// Exponentially decaying scattered taps over `dynamic_range_db`, a
    /// specular component on tap 0 carrying `los_to_scatter_db` relative to
    /// the total scattered power, and uniform tap spacing chosen so the
    /// whole profile has `rms_delay_s`.
    pub fn exponential(n_taps: usize, dynamic_range_db: f64, rms_delay_s: f64, los_to_scatter_db: f64) -> Self {
        let n_taps = n_taps.max(1);
        let scatter: Vec<f64> = (0..n_taps)
            .map(|l| {
                let frac = if n_taps > 1 { l as f64 / (n_taps - 1) as f64 } else { 0.0 };
                10f64.powf(-dynamic_range_db * frac / 10.0)
            })
            .collect();
        let total_scatter: f64 = scatter.iter().sum();
        let k = 10f64.powf(los_to_scatter_db / 10.0);
        let total = total_scatter * (1.0 + k);
        let mut powers: Vec<f64> = scatter.iter().map(|p| p / total).collect();
        powers[0] += k * total_scatter / total;
        let unit: Vec<f64> = (0..n_taps).map(|l| l as f64).collect();
        let spread = rms_delay(&unit, &powers);
        let step = if spread > 0.0 { rms_delay_s / spread } else { 0.0 };
        Self {
            tap_delays: unit.iter().map(|u| u * step).collect(),
            tap_powers_db: powers.iter().map(|p| 10.0 * p.log10()).collect(),
            rician_k_db: 10.0 * (k * total_scatter / scatter[0]).log10(),
        }
    }

    /// A single deterministic tap.
    pub fn los_only() -> Self {
        Self { tap_delays: vec![0.0], tap_powers_db: vec![0.0], rician_k_db: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<(), UavError> {
        if self.tap_delays.is_empty() || self.tap_delays.len() != self.tap_powers_db.len() {
            return Err(UavError::config("channel.tdl", "delays and powers must be non-empty and of equal length"));
        }
        if self.tap_delays[0] != 0.0 || self.tap_delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(UavError::config("channel.tdl.tap_delays", "must start at 0 and increase strictly"));
        }
        let total: f64 = self.tap_powers_db.iter().map(|p| 10f64.powf(p / 10.0)).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(UavError::config("channel.tdl.tap_powers_db", format!("sum to {total}, expected 1")));
        }
        if self.rician_k_db.is_nan() {
            return Err(UavError::config("channel.tdl.rician_k_db", "must be a number"));
        }
        Ok(())
    }

    pub fn rms_delay_spread(&self) -> f64 {
        let p: Vec<f64> = self.tap_powers_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
        rms_delay(&self.tap_delays, &p)
    }
}

fn rms_delay(delays: &[f64], powers: &[f64]) -> f64 {
    let total: f64 = powers.iter().sum();
    let mean = delays.iter().zip(powers).map(|(d, p)| d * p).sum::<f64>() / total;
    let second = delays.iter().zip(powers).map(|(d, p)| d * d * p).sum::<f64>() / total;
    (second - mean * mean).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay: f64,
    pub gain: Complex64,
}

pub fn realize_tdl(profile: &TdlProfile, rng_seed: u64) -> Vec<Tap> {
    realize_tdl_with(profile, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

pub fn realize_tdl_with<R: Rng + ?Sized>(profile: &TdlProfile, rng: &mut R) -> Vec<Tap> {
    let cn = |rng: &mut R, power: f64| {
        let s = (power / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    };
    profile
        .tap_delays
        .iter()
        .zip(&profile.tap_powers_db)
        .enumerate()
        .map(|(l, (&delay, &pdb))| {
            let power = 10f64.powf(pdb / 10.0);
            let gain = if l == 0 {
                let los_frac = if profile.rician_k_db.is_infinite() && profile.rician_k_db > 0.0 {
                    1.0
                } else {
                    let k = 10f64.powf(profile.rician_k_db / 10.0);
                    k / (1.0 + k)
                };
                let phase = rng.random_range(0.0..2.0 * PI);
                Complex64::from_polar((power * los_frac).sqrt(), phase) + cn(rng, power * (1.0 - los_frac))
            } else {
                cn(rng, power)
            };
            Tap { delay, gain }
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Average of `|H(f)|^2` over each of `s_blocks` equal sub-bands of
/// `[-B/2, B/2]`, computed in closed form.
pub fn block_gains(taps: &[Tap], bandwidth: f64, s_blocks: usize) -> Vec<f64> {
    let width = bandwidth / s_blocks as f64;
    let diag: f64 = taps.iter().map(|t| t.gain.norm_sqr()).sum();
    (0..s_blocks)
        .map(|s| {
            let fc = -bandwidth / 2.0 + (s as f64 + 0.5) * width;
            let mut g = diag;
            for (a, ta) in taps.iter().enumerate() {
                for tb in &taps[a + 1..] {
                    let dt = ta.delay - tb.delay;
                    let cross = ta.gain * tb.gain.conj() * Complex64::from_polar(1.0, -2.0 * PI * fc * dt);
                    g += 2.0 * cross.re * sinc(PI * width * dt);
                }
            }
            g.max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub azimuth_hpbw_deg: f64,
    pub elevation_hpbw_deg: Option<f64>,
    pub max_gain_dbi: f64,
    pub front_to_back_db: f64,
}

impl AntennaPattern {
    pub fn sector() -> Self {
        Self { azimuth_hpbw_deg: 120.0, elevation_hpbw_deg: Some(13.0), max_gain_dbi: 15.0, front_to_back_db: 25.0 }
    }

    pub fn uav_element() -> Self {
        Self { azimuth_hpbw_deg: 60.0, elevation_hpbw_deg: None, max_gain_dbi: 8.0, front_to_back_db: 25.0 }
    }
}

/// Wraps an angle into `[-180, 180)`.
pub fn wrap_deg(a: f64) -> f64 {
    (a + 180.0).rem_euclid(360.0) - 180.0
}

/// Parabolic pattern, per-axis attenuation capped at the front-to-back
/// ratio, summed and floored at the same value.
pub fn pattern_gain_db(az_off_deg: f64, el_off_deg: f64, p: &AntennaPattern) -> f64 {
    let axis = |theta: f64, hpbw: f64| (12.0 * (theta / hpbw).powi(2)).min(p.front_to_back_db);
    let mut att = axis(wrap_deg(az_off_deg), p.azimuth_hpbw_deg);
    if let Some(h) = p.elevation_hpbw_deg {
        att += axis(el_off_deg, h);
    }
    p.max_gain_dbi - att.min(p.front_to_back_db)
}

/// Everything needed to turn a drop into a gain tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub large: LargeScaleParams,
    pub tdl: TdlProfile,
    pub sector: AntennaPattern,
    pub uav: AntennaPattern,
    pub uav_beams: usize,
    pub bandwidth_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            large: LargeScaleParams::default(),
            tdl: TdlProfile::default(),
            sector: AntennaPattern::sector(),
            uav: AntennaPattern::uav_element(),
            uav_beams: 6,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), UavError> {
        self.large.validate()?;
        self.tdl.validate()?;
        if self.uav_beams == 0 {
            return Err(UavError::config("channel.uav_beams", "must be at least 1"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(UavError::config("bandwidth_hz", "must be positive"));
        }
        Ok(())
    }
}

/// Linear gains `g[i][j][s]`, plus the per-link path loss with shadowing
/// in dB when the tensor was generated rather than imported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGainTensor {
    n_ue: usize,
    n_cells: usize,
    s_blocks: usize,
    g: Vec<f64>,
    coupling_db: Option<Vec<f64>>,
}

impl ChannelGainTensor {
    pub fn from_fn(n_ue: usize, n_cells: usize, s_blocks: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut g = Vec::with_capacity(n_ue * n_cells * s_blocks);
        for i in 0..n_ue {
            for j in 0..n_cells {
                for s in 0..s_blocks {
                    g.push(f(i, j, s));
                }
            }
        }
        Self { n_ue, n_cells, s_blocks, g, coupling_db: None }
    }

    pub fn n_ue(&self) -> usize {
        self.n_ue
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn s_blocks(&self) -> usize {
        self.s_blocks
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, s: usize) -> f64 {
        self.g[(i * self.n_cells + j) * self.s_blocks + s]
    }

    /// Path loss plus shadowing of link `i -> j`, without antenna gains.
    pub fn coupling_db(&self, i: usize, j: usize) -> Option<f64> {
        self.coupling_db.as_ref().map(|c| c[i * self.n_cells + j])
    }

    /// Averages groups of adjacent blocks down to `s_new` blocks.
    pub fn regroup(&self, s_new: usize) -> Result<Self, UavError> {
        if s_new == 0 || self.s_blocks % s_new != 0 {
            return Err(UavError::Dimension(format!("cannot regroup {} blocks into {s_new}", self.s_blocks)));
        }
        let k = self.s_blocks / s_new;
        let mut out = Self::from_fn(self.n_ue, self.n_cells, s_new, |i, j, s| {
            (0..k).map(|q| self.get(i, j, s * k + q)).sum::<f64>() / k as f64
        });
        out.coupling_db = self.coupling_db.clone();
        Ok(out)
    }

    /// Sub-tensor over the listed UEs and cells, in the given order.
    pub fn select(&self, ues: &[usize], cells: &[usize]) -> Self {
        let mut out = Self::from_fn(ues.len(), cells.len(), self.s_blocks, |a, b, s| self.get(ues[a], cells[b], s));
        out.coupling_db = self
            .coupling_db
            .as_ref()
            .map(|c| ues.iter().flat_map(|&i| cells.iter().map(move |&j| c[i * self.n_cells + j])).collect());
        out
    }

    /// Concatenates the UEs of several tensors over the same cells and blocks.
    pub fn stack(parts: &[&ChannelGainTensor]) -> Result<Self, UavError> {
        let first = parts.first().ok_or_else(|| UavError::Dimension("nothing to stack".into()))?;
        let (n_cells, s_blocks) = (first.n_cells, first.s_blocks);
        if parts.iter().any(|t| t.n_cells != n_cells || t.s_blocks != s_blocks) {
            return Err(UavError::Dimension("stacked tensors must share cells and blocks".into()));
        }
        let coupling_db = parts
            .iter()
            .map(|t| t.coupling_db.clone())
            .collect::<Option<Vec<_>>>()
            .map(|c| c.concat());
        Ok(Self {
            n_ue: parts.iter().map(|t| t.n_ue).sum(),
            n_cells,
            s_blocks,
            g: parts.iter().flat_map(|t| t.g.iter().copied()).collect(),
            coupling_db,
        })
    }

    /// Writes `i,j,s,gain_db` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), UavError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "s", "gain_db"])?;
        for i in 0..self.n_ue {
            for j in 0..self.n_cells {
                for s in 0..self.s_blocks {
                    let db = 10.0 * self.get(i, j, s).log10();
                    w.write_record(&[i.to_string(), j.to_string(), s.to_string(), format!("{db:.17e}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows written by [`Self::write_csv`]; every `(i, j, s)` up to
    /// the largest indices must be present exactly once.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, UavError> {
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(input).deserialize() {
            let (i, j, s, db): (usize, usize, usize, f64) = rec?;
            if !db.is_finite() {
                return Err(UavError::Dimension(format!("non-finite gain at ({i},{j},{s})")));
            }
            rows.push((i, j, s, db));
        }
        let dim = |f: fn(&(usize, usize, usize, f64)) -> usize| rows.iter().map(f).max().map_or(0, |m| m + 1);
        let (n_ue, n_cells, s_blocks) = (dim(|r| r.0), dim(|r| r.1), dim(|r| r.2));
        let mut g = vec![f64::NAN; n_ue * n_cells * s_blocks];
        for (i, j, s, db) in rows {
            let k = (i * n_cells + j) * s_blocks + s;
            if !g[k].is_nan() {
                return Err(UavError::Dimension(format!("duplicate entry ({i},{j},{s})")));
            }
            g[k] = 10f64.powf(db / 10.0);
        }
        if g.is_empty() || g.iter().any(|v| v.is_nan()) {
            return Err(UavError::Dimension("gain table is empty or has missing entries".into()));
        }
        Ok(Self { n_ue, n_cells, s_blocks, g, coupling_db: None })
    }
}

fn azimuth_deg(from: [f64; 3], to: [f64; 3]) -> f64 {
    (to[1] - from[1]).atan2(to[0] - from[0]).to_degrees()
}

/// Index of the UAV beam that points best toward `target`.
fn best_beam(ue: [f64; 3], target: [f64; 3], params: &ChannelParams) -> usize {
    let az = azimuth_deg(ue, target);
    let step = 360.0 / params.uav_beams as f64;
    (0..params.uav_beams)
        .map(|b| (b, pattern_gain_db(az - step * b as f64, 0.0, &params.uav)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

/// Antenna gains in dB of link `ue -> cell` with the UAV on `beam`.
pub fn antenna_gains_db(
    layout: &NetworkLayout,
    ue: [f64; 3],
    cell: usize,
    beam: usize,
    params: &ChannelParams,
) -> (f64, f64) {
    let bs = layout.bs_position(cell);
    let sector = &layout.sectors[cell];
    let dh = ((ue[0] - bs[0]).powi(2) + (ue[1] - bs[1]).powi(2)).sqrt();
    let elev = (ue[2] - bs[2]).atan2(dh).to_degrees();
    let g_bs = pattern_gain_db(azimuth_deg(bs, ue) - sector.azimuth_deg, elev + sector.downtilt_deg, &params.sector);
    let step = 360.0 / params.uav_beams as f64;
    let g_ue = pattern_gain_db(azimuth_deg(ue, bs) - step * beam as f64, 0.0, &params.uav);
    (g_bs, g_ue)
}

/// Draws one realisation of every link of `drop`. Links are visited UE by
/// UE and cell by cell; each takes a shadowing value and then a TDL draw
/// from a single stream seeded with `rng_seed`.
pub fn build_gain_tensor(
    layout: &NetworkLayout,
    drop: &UeDrop,
    params: &ChannelParams,
    s_blocks: usize,
    rng_seed: u64,
) -> Result<ChannelGainTensor, UavError> {
    build_gain_tensor_with(layout, drop, params, s_blocks, &mut ChaCha8Rng::seed_from_u64(rng_seed))
}

pub fn build_gain_tensor_with<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    drop: &UeDrop,
    params: &ChannelParams,
    s_blocks: usize,
    rng: &mut R,
) -> Result<ChannelGainTensor, UavError> {
    params.validate()?;
    if s_blocks == 0 {
        return Err(UavError::config("segments", "must be at least 1"));
    }
    if drop.serving_cell.len() != drop.positions.len() {
        return Err(UavError::Dimension("drop positions and serving cells differ in length".into()));
    }
    if let Some(&c) = drop.serving_cell.iter().find(|&&c| c >= layout.n_cells()) {
        return Err(UavError::Dimension(format!("serving cell {c} outside layout")));
    }
    let n_ue = drop.n_ue();
    let n_cells = layout.n_cells();
    let shadow = Normal::new(0.0, params.large.shadow_std_db).expect("validated std");
    let mut g = Vec::with_capacity(n_ue * n_cells * s_blocks);
    let mut coupling = Vec::with_capacity(n_ue * n_cells);
    for (i, &ue) in drop.positions.iter().enumerate() {
        let beam = best_beam(ue, layout.bs_position(drop.serving_cell[i]), params);
        for j in 0..n_cells {
            let bs = layout.bs_position(j);
            let d = ((ue[0] - bs[0]).powi(2) + (ue[1] - bs[1]).powi(2) + (ue[2] - bs[2]).powi(2)).sqrt();
            let loss = path_loss_db(d, &params.large) + shadow.sample(rng);
            let (g_bs, g_ue) = antenna_gains_db(layout, ue, j, beam, params);
            let scale = 10f64.powf((g_bs + g_ue - loss) / 10.0);
            let taps = realize_tdl_with(&params.tdl, rng);
            g.extend(block_gains(&taps, params.bandwidth_hz, s_blocks).into_iter().map(|b| (scale * b).max(1e-300)));
            coupling.push(loss);
        }
    }
    Ok(ChannelGainTensor { n_ue, n_cells, s_blocks, g, coupling_db: Some(coupling) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_examples() {
        let p = LargeScaleParams::default();
        assert!((path_loss_db(1.0, &p) - 32.8).abs() < 1e-12);
        assert!((path_loss_db(10.0, &p) - 53.8).abs() < 1e-12);
        let q = LargeScaleParams { ple: 3.7, ..p };
        assert!((path_loss_db(1.0, &q) - 32.8).abs() < 1e-12);
        assert!((path_loss_db(0.2, &p) - 32.8).abs() < 1e-12);
    }

    #[test]
    fn pattern_examples() {
        let s = AntennaPattern::sector();
        assert_eq!(pattern_gain_db(0.0, 0.0, &s), 15.0);
        assert!((pattern_gain_db(60.0, 0.0, &s) - 12.0).abs() < 1e-12);
        assert!((pattern_gain_db(180.0, 0.0, &s) - (15.0 - 25.0)).abs() < 1e-12);
        assert!((pattern_gain_db(0.0, 6.5, &s) - 12.0).abs() < 1e-12);
        let u = AntennaPattern::uav_element();
        assert!((pattern_gain_db(-30.0, 50.0, &u) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn single_tap_is_flat() {
        let taps = [Tap { delay: 0.0, gain: Complex64::new(0.6, -0.3) }];
        for s in [1, 4, 20] {
            let b = block_gains(&taps, 9e6, s);
            assert!(b.iter().all(|g| (g - 0.45).abs() < 1e-15));
        }
    }

    #[test]
    fn two_taps_one_over_b_apart() {
        let bw = 9e6;
        let taps = [
            Tap { delay: 0.0, gain: Complex64::new(0.5f64.sqrt(), 0.0) },
            Tap { delay: 1.0 / bw, gain: Complex64::new(0.5f64.sqrt(), 0.0) },
        ];
        let b = block_gains(&taps, bw, 8);
        let spread = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - b.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 0.5);
        let mean = b.iter().sum::<f64>() / 8.0;
        assert!((mean - 1.0).abs() < 1e-12);
        assert!((block_gains(&taps, bw, 1)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_profile_shape() {
        let p = TdlProfile::default();
        p.validate().unwrap();
        assert_eq!(p.tap_delays.len(), 12);
        assert!((p.rms_delay_spread() - 10e-9).abs() < 1e-15);
    }

    #[test]
    fn deterministic_limit() {
        let p = TdlProfile::los_only();
        for seed in 0..5 {
            let t = realize_tdl(&p, seed);
            assert!((t[0].gain.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn regroup_preserves_mean() {
        let t = ChannelGainTensor::from_fn(2, 3, 4, |i, j, s| 1.0 + (i + 2 * j + 3 * s) as f64);
        let r = t.regroup(2).unwrap();
        assert_eq!(r.get(1, 2, 1), (t.get(1, 2, 2) + t.get(1, 2, 3)) / 2.0);
        assert!(t.regroup(3).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = ChannelGainTensor::from_fn(2, 3, 2, |i, j, s| 1e-9 * (1.0 + (i * 7 + j * 3 + s) as f64));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ChannelGainTensor::read_csv(buf.as_slice()).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for s in 0..2 {
                    assert!((back.get(i, j, s) / t.get(i, j, s) - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(ChannelGainTensor::read_csv("i,j,s,gain_db\n0,0,1,-3\n".as_bytes()).is_err());
    }
}
