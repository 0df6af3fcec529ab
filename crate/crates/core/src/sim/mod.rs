//! Evaluation campaigns.
//!
//! [`run_full_buffer`] draws independent snapshots of a partially loaded
//! network. [`run_bursty`] and [`run_clustered`] step a Poisson traffic
//! model through fixed update intervals and score each finished session by
//! its delivery time. Both produce a [`CampaignReport`], which
//! [`summarize`] and [`CampaignReport::write_csvs`] turn into tables.

mod bursty;
mod full_buffer;
mod report;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::{olpc_powers_w, OlpcParams};
use crate::channel::{ChannelGainTensor, ChannelParams};
use crate::sca::{
    evaluate, fd_maxmin, fd_maxsum_qos_from, fd_sc_maxmin_from, maxsum_noqos, olpc_allocation, td_maxmin,
    td_maxsum_qos_from, Alloc, BandAllocation, Domain, LinkModel, PowerAllocation, QosOutcome, ScaOptions,
    ScenarioConfig,
};
use crate::topology::{default_layout, ClusterMap, NetworkLayout};
use crate::UavError;

pub use bursty::{
    poisson_arrivals, run_bursty, run_bursty_observed, run_clustered, simulate_sessions, BurstyConfig, IntervalRecord,
    UeSession,
};
pub use full_buffer::{run_full_buffer, FullBufferConfig};
pub use report::{percentile, summarize, CampaignReport, Mode, SeSample, Summary, SummaryRow, RANKS};

/// Power allocation schemes a campaign can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Olpc,
    FdMaxminS1,
    FdMaxminS,
    FdScMaxmin,
    FdScMaxsumQos,
    TdMaxmin,
    TdMaxsumQos,
    MaxsumNoqos,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Olpc,
        Algorithm::FdMaxminS1,
        Algorithm::FdMaxminS,
        Algorithm::FdScMaxmin,
        Algorithm::FdScMaxsumQos,
        Algorithm::TdMaxmin,
        Algorithm::TdMaxsumQos,
        Algorithm::MaxsumNoqos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Olpc => "olpc",
            Algorithm::FdMaxminS1 => "fd-maxmin-s1",
            Algorithm::FdMaxminS => "fd-maxmin-s",
            Algorithm::FdScMaxmin => "fd-sc-maxmin",
            Algorithm::FdScMaxsumQos => "fd-sc-maxsum-qos",
            Algorithm::TdMaxmin => "td-maxmin",
            Algorithm::TdMaxsumQos => "td-maxsum-qos",
            Algorithm::MaxsumNoqos => "maxsum-noqos",
        }
    }

    /// Whether the scheme runs the successive GP machinery.
    pub fn is_optimizing(self) -> bool {
        self != Algorithm::Olpc
    }

    /// Whether the scheme has a QoS target that can turn out infeasible.
    pub fn uses_qos(self) -> bool {
        matches!(self, Algorithm::FdScMaxsumQos | Algorithm::TdMaxsumQos)
    }

    /// Which link model the scheme optimizes and is scored on.
    pub fn model_kind(self) -> ModelKind {
        match self {
            Algorithm::FdMaxminS1 | Algorithm::MaxsumNoqos => ModelKind::SingleBlock,
            Algorithm::TdMaxmin | Algorithm::TdMaxsumQos => ModelKind::Time,
            _ => ModelKind::Blocks,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = UavError;

    fn from_str(s: &str) -> Result<Self, UavError> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL.into_iter().find(|a| a.name() == key).ok_or_else(|| {
            let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            UavError::config("algo", format!("unknown algorithm `{s}`, expected one of {}", names.join(", ")))
        })
    }
}

/// Link model flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Frequency domain with all `S` blocks.
    Blocks,
    /// Frequency domain with the band treated as one block.
    SingleBlock,
    /// Time domain with `T` TTIs of band-average gains.
    Time,
}

/// Everything a campaign needs besides its own traffic settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub layout: NetworkLayout,
    pub channel: ChannelParams,
    pub link: ScenarioConfig,
    pub olpc: OlpcParams,
    pub sca: ScaOptions,
    pub eta: f64,
    pub qos: f64,
    pub ue_height_m: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            layout: default_layout(),
            channel: ChannelParams::default(),
            link: ScenarioConfig::default(),
            olpc: OlpcParams::default(),
            sca: ScaOptions::default(),
            eta: 0.8,
            qos: 0.8,
            ue_height_m: crate::topology::DEFAULT_UE_HEIGHT_M,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), UavError> {
        self.channel.validate()?;
        self.link.validate()?;
        self.olpc.validate()?;
        if (self.channel.bandwidth_hz - self.link.bandwidth_hz).abs() > 1e-9 * self.link.bandwidth_hz {
            return Err(UavError::config("bandwidth_hz", "channel and link bandwidths differ"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(UavError::config("eta", format!("must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.qos >= 0.0 && self.qos.is_finite()) {
            return Err(UavError::config("qos", format!("must be a non-negative SE, got {}", self.qos)));
        }
        if !(self.ue_height_m > 0.0 && self.ue_height_m.is_finite()) {
            return Err(UavError::config("ue_height_m", "must be positive"));
        }
        if self.layout.n_cells() == 0 {
            return Err(UavError::config("sites", "the layout has no cells"));
        }
        Ok(())
    }

    pub fn model(&self, kind: ModelKind, g: &ChannelGainTensor, serving: &[usize]) -> Result<LinkModel, UavError> {
        match kind {
            ModelKind::Blocks => LinkModel::frequency(g, serving, &self.link),
            ModelKind::SingleBlock => LinkModel::frequency(&g.regroup(1)?, serving, &self.link),
            ModelKind::Time => LinkModel::time(g, serving, &self.link),
        }
    }
}

/// One scheme's transmit decision for a set of links.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub kind: ModelKind,
    pub p: PowerAllocation,
    pub bands: Option<BandAllocation>,
    /// SE the scheme expects on the links it was given.
    pub predicted_se: Vec<f64>,
    pub qos_infeasible: bool,
}

/// A set of links with lazily built models and shared intermediate results,
/// so that related schemes reuse each other's max-min points.
pub struct Instance<'a> {
    g: &'a ChannelGainTensor,
    serving: &'a [usize],
    sc: &'a Scenario,
    olpc_w: Vec<f64>,
    blocks: Option<LinkModel>,
    single: Option<LinkModel>,
    time: Option<LinkModel>,
    free: Option<Alloc>,
    sc_mm: Option<Alloc>,
    td_mm: Option<Alloc>,
}

impl<'a> Instance<'a> {
    pub fn new(g: &'a ChannelGainTensor, serving: &'a [usize], sc: &'a Scenario) -> Self {
        let olpc_w = olpc_powers_w(g, serving, &sc.olpc);
        Self { g, serving, sc, olpc_w, blocks: None, single: None, time: None, free: None, sc_mm: None, td_mm: None }
    }

    pub fn model(&mut self, kind: ModelKind) -> Result<&LinkModel, UavError> {
        let slot = match kind {
            ModelKind::Blocks => &mut self.blocks,
            ModelKind::SingleBlock => &mut self.single,
            ModelKind::Time => &mut self.time,
        };
        if slot.is_none() {
            *slot = Some(self.sc.model(kind, self.g, self.serving)?);
        }
        Ok(slot.as_ref().expect("model just built"))
    }

    pub fn decide(&mut self, alg: Algorithm) -> Result<Decision, UavError> {
        let kind = alg.model_kind();
        self.model(kind)?;
        let (sc, w) = (self.sc, self.olpc_w.clone());
        let (cfg, opts) = (&sc.link, &sc.sca);
        let qos = vec![sc.qos; self.serving.len()];
        let done = |a: &Alloc, infeasible: bool| Decision {
            kind,
            p: a.p.clone(),
            bands: a.bands.clone(),
            predicted_se: a.se.clone(),
            qos_infeasible: infeasible,
        };
        let from_qos = |o: QosOutcome| {
            let infeasible = !o.is_feasible();
            done(o.alloc(), infeasible)
        };
        Ok(match alg {
            Algorithm::Olpc => {
                let m = self.blocks.as_ref().expect("built");
                let p = olpc_allocation(m, &w);
                let se = evaluate(&p, m)?;
                Decision { kind, p, bands: None, predicted_se: se, qos_infeasible: false }
            }
            Algorithm::FdMaxminS1 => done(&fd_maxmin(self.single.as_ref().expect("built"), cfg, &w, opts)?, false),
            Algorithm::MaxsumNoqos => done(&maxsum_noqos(self.single.as_ref().expect("built"), cfg, &w, opts)?, false),
            Algorithm::FdMaxminS => done(self.free()?, false),
            Algorithm::FdScMaxmin => done(self.sc_maxmin()?, false),
            Algorithm::FdScMaxsumQos => {
                let mm = self.sc_maxmin()?.clone();
                from_qos(fd_maxsum_qos_from(self.blocks.as_ref().expect("built"), cfg, &qos, &mm, opts)?)
            }
            Algorithm::TdMaxmin => done(self.td_maxmin()?, false),
            Algorithm::TdMaxsumQos => {
                let mm = self.td_maxmin()?.clone();
                from_qos(td_maxsum_qos_from(self.time.as_ref().expect("built"), cfg, &qos, &mm, opts)?)
            }
        })
    }

    fn free(&mut self) -> Result<&Alloc, UavError> {
        if self.free.is_none() {
            let m = self.model(ModelKind::Blocks)?.clone();
            self.free = Some(fd_maxmin(&m, &self.sc.link, &self.olpc_w, &self.sc.sca)?);
        }
        Ok(self.free.as_ref().expect("just solved"))
    }

    fn sc_maxmin(&mut self) -> Result<&Alloc, UavError> {
        if self.sc_mm.is_none() {
            let free = self.free()?.clone();
            let m = self.blocks.as_ref().expect("built by free");
            self.sc_mm = Some(fd_sc_maxmin_from(m, &self.sc.link, &self.olpc_w, self.sc.eta, &free, &self.sc.sca)?);
        }
        Ok(self.sc_mm.as_ref().expect("just solved"))
    }

    fn td_maxmin(&mut self) -> Result<&Alloc, UavError> {
        if self.td_mm.is_none() {
            self.model(ModelKind::Time)?;
            let m = self.time.as_ref().expect("just built");
            self.td_mm = Some(td_maxmin(m, &self.sc.link, &self.olpc_w, &self.sc.sca)?);
        }
        Ok(self.td_mm.as_ref().expect("just solved"))
    }
}

/// Per-cluster decisions for one scheme, merged back into network order.
///
/// `serving[i]` indexes the tensor's cells. Each cluster sees only the
/// gains among its own UEs and cells; interference from the rest of the
/// network is left out.
pub fn decide_clustered(
    g: &ChannelGainTensor,
    serving: &[usize],
    clusters: &ClusterMap,
    sc: &Scenario,
    alg: Algorithm,
) -> Result<Decision, UavError> {
    let ids: Vec<usize> = (0..serving.len()).collect();
    decide_clustered_cached(g, serving, &ids, clusters, sc, alg, &mut HashMap::new())
}

/// [`decide_clustered`] reusing cluster decisions from `cache`, keyed by
/// the `ids` of the cluster's UEs.
pub(crate) fn decide_clustered_cached(
    g: &ChannelGainTensor,
    serving: &[usize],
    ids: &[usize],
    clusters: &ClusterMap,
    sc: &Scenario,
    alg: Algorithm,
    cache: &mut HashMap<Vec<usize>, Decision>,
) -> Result<Decision, UavError> {
    let n = serving.len();
    let mut p = vec![Vec::new(); n];
    let mut ranges = vec![None; n];
    let mut predicted = vec![0.0; n];
    let mut has_bands = false;
    let mut infeasible = false;
    let mut covered = 0;
    for cluster in &clusters.clusters {
        let ues: Vec<usize> = (0..n).filter(|&i| cluster.contains(&serving[i])).collect();
        if ues.is_empty() {
            continue;
        }
        let key: Vec<usize> = ues.iter().map(|&i| ids[i]).collect();
        if !cache.contains_key(&key) {
            let mut cells: Vec<usize> = ues.iter().map(|&i| serving[i]).collect();
            cells.sort_unstable();
            cells.dedup();
            let sub = g.select(&ues, &cells);
            let sub_serving: Vec<usize> =
                ues.iter().map(|&i| cells.binary_search(&serving[i]).expect("serving cell listed")).collect();
            let d = Instance::new(&sub, &sub_serving, sc).decide(alg)?;
            cache.insert(key.clone(), d);
        }
        let d = &cache[&key];
        infeasible |= d.qos_infeasible;
        for (k, &i) in ues.iter().enumerate() {
            p[i] = d.p.p[k].clone();
            predicted[i] = d.predicted_se[k];
            if let Some(b) = &d.bands {
                has_bands = true;
                ranges[i] = b.ranges[k];
            }
        }
        covered += ues.len();
    }
    if covered != n {
        return Err(UavError::config("clusters", "some serving cells belong to no cluster"));
    }
    Ok(Decision {
        kind: alg.model_kind(),
        p: PowerAllocation { p },
        bands: has_bands.then_some(BandAllocation { ranges }),
        predicted_se: predicted,
        qos_infeasible: infeasible,
    })
}

/// SE each UE actually gets from `d` with every link of `g` in play.
pub fn achieved_se(
    g: &ChannelGainTensor,
    serving: &[usize],
    sc: &Scenario,
    d: &Decision,
) -> Result<Vec<f64>, UavError> {
    evaluate(&d.p, &sc.model(d.kind, g, serving)?)
}

/// Checks the transmit constraints of a decision: per-UE power budget in
/// frequency, per-TTI cap in time, floor everywhere, and power only inside
/// the UE's band when one is assigned.
pub fn check_decision(d: &Decision, sc: &Scenario) -> Result<(), UavError> {
    let (pmin, pmax) = (sc.link.p_min_w, sc.link.p_max_w);
    let domain = if d.kind == ModelKind::Time { Domain::Time } else { Domain::Frequency };
    for (i, row) in d.p.p.iter().enumerate() {
        if row.iter().any(|&x| !(x >= 0.0)) {
            return Err(UavError::Solver(format!("UE {i} has a negative or NaN power")));
        }
        let over = match domain {
            Domain::Frequency => row.iter().sum::<f64>() > pmax * (1.0 + 1e-9),
            Domain::Time => row.iter().any(|&x| x > pmax * (1.0 + 1e-9)),
        };
        if over {
            return Err(UavError::Solver(format!("UE {i} exceeds the power limit")));
        }
        if let Some(b) = &d.bands {
            let (first, _) = b.ranges[i].ok_or_else(|| UavError::Solver(format!("UE {i} has no band")))?;
            for (c, &x) in row.iter().enumerate() {
                if !b.contains(i, c) && x > pmin * (1.0 + 1e-9) {
                    return Err(UavError::Solver(format!("UE {i} transmits outside its band at column {c}")));
                }
                if b.contains(i, c) && (x - row[first]).abs() > 1e-9 * row[first] {
                    return Err(UavError::Solver(format!("UE {i} has an uneven density inside its band")));
                }
            }
        }
    }
    Ok(())
}
