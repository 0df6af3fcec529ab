use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{achieved_se, decide_clustered_cached, Algorithm, CampaignReport, Decision, Instance, Mode, Scenario, SeSample};
use crate::baseline::{pf_select, PfState};
use crate::channel::{build_gain_tensor_with, ChannelGainTensor};
use crate::sca::{evaluate, olpc_allocation, LinkModel};
use crate::topology::{co_site_clusters, drop_ues_with, ClusterMap};
use crate::UavError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstyConfig {
    /// New UEs per second per cell.
    pub arrival_rate: f64,
    pub packet_bits: f64,
    pub update_interval_s: f64,
    pub sim_time_s: f64,
    /// Sessions starting before this time are not scored.
    pub warmup_s: f64,
    /// Optimize per co-site cluster instead of network-wide.
    pub clustered: bool,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    /// Independent traffic runs, seeded `seed, seed + 1, ...`.
    pub n_runs: usize,
}

impl Default for BurstyConfig {
    fn default() -> Self {
        Self {
            arrival_rate: 2.5,
            packet_bits: 4e6,
            update_interval_s: 0.02,
            sim_time_s: 10.0,
            warmup_s: 1.6,
            clustered: false,
            algorithms: vec![
                Algorithm::Olpc,
                Algorithm::FdScMaxmin,
                Algorithm::FdScMaxsumQos,
                Algorithm::TdMaxmin,
                Algorithm::TdMaxsumQos,
                Algorithm::MaxsumNoqos,
            ],
            seed: 1,
            n_runs: 1,
        }
    }
}

impl BurstyConfig {
    pub fn validate(&self) -> Result<(), UavError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(UavError::config(key, format!("must be positive, got {v}")))
            }
        };
        positive("arrival_rate", self.arrival_rate)?;
        positive("packet_bits", self.packet_bits)?;
        positive("update_interval_s", self.update_interval_s)?;
        positive("sim_time_s", self.sim_time_s)?;
        if !(self.warmup_s >= 0.0 && self.warmup_s < self.sim_time_s) {
            return Err(UavError::config("warmup_s", "must lie in [0, sim_time_s)"));
        }
        if self.algorithms.is_empty() {
            return Err(UavError::config("algo", "no algorithm selected"));
        }
        if self.n_runs == 0 {
            return Err(UavError::config("realizations", "must be at least 1"));
        }
        Ok(())
    }

    fn intervals(&self) -> usize {
        (self.sim_time_s / self.update_interval_s - 1e-9).ceil() as usize
    }
}

/// One UAV's upload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSession {
    pub id: usize,
    pub cell: usize,
    pub arrival_s: f64,
    /// First update instant at or after the arrival, when the UE joins.
    pub t_in: f64,
    pub t_out: Option<f64>,
    pub bits_remaining: f64,
    /// Everything credited to the session, including the unused part of
    /// its last interval.
    pub delivered_bits: f64,
    /// Credit of the most recent interval the session was served in.
    pub last_interval_bits: f64,
}

impl UeSession {
    /// `packet / (B (t_out - t_in))` once finished.
    pub fn se(&self, packet_bits: f64, bandwidth_hz: f64) -> Option<f64> {
        self.t_out.map(|t| packet_bits / (bandwidth_hz * (t - self.t_in)))
    }
}

/// What a scheme transmitted in one interval.
#[derive(Debug)]
pub struct IntervalRecord<'a> {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub t: f64,
    pub sessions: &'a [usize],
    pub cells: &'a [usize],
    pub decision: &'a Decision,
    /// SE achieved with all scheduled links active.
    pub se: &'a [f64],
    /// True when the scheme failed and OLPC powers were sent instead.
    pub fallback: bool,
}

/// Poisson arrival instants per cell over `[0, sim_time)`, sorted by time
/// then cell.
pub fn poisson_arrivals(cfg: &BurstyConfig, n_cells: usize, seed: u64) -> Vec<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(cfg.arrival_rate).expect("validated rate");
    let mut out = Vec::new();
    for cell in 0..n_cells {
        let mut t = gap.sample(&mut rng);
        while t < cfg.sim_time_s {
            out.push((t, cell));
            t += gap.sample(&mut rng);
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

struct Arrival {
    time: f64,
    cell: usize,
    gains: ChannelGainTensor,
    solo_se: f64,
}

fn arrivals(cfg: &BurstyConfig, sc: &Scenario, seed: u64) -> Result<Vec<Arrival>, UavError> {
    let noise = sc.link.noise_w();
    let p_max = sc.link.p_max_w;
    poisson_arrivals(cfg, sc.layout.n_cells(), seed)
        .into_iter()
        .enumerate()
        .map(|(k, (time, cell))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            let drop = drop_ues_with(&sc.layout, &[cell], 1, sc.ue_height_m, &mut rng)?;
            let gains = build_gain_tensor_with(&sc.layout, &drop, &sc.channel, sc.link.s_blocks, &mut rng)?;
            let s = gains.s_blocks();
            let solo_se = (0..s).map(|b| (1.0 + p_max * gains.get(0, cell, b) / noise).log2()).sum::<f64>() / s as f64;
            Ok(Arrival { time, cell, gains, solo_se })
        })
        .collect()
}

/// Result of one scheme on one traffic run.
struct RunOutcome {
    sessions: Vec<UeSession>,
    failed_intervals: usize,
    qos_infeasible_intervals: usize,
}

struct Cell {
    queue: Vec<usize>,
    pf: PfState,
}

fn simulate(
    cfg: &BurstyConfig,
    sc: &Scenario,
    clusters: Option<&ClusterMap>,
    alg: Algorithm,
    seed: u64,
    arr: &[Arrival],
    observer: &mut dyn FnMut(&IntervalRecord),
) -> Result<RunOutcome, UavError> {
    let dt = cfg.update_interval_s;
    let bw = sc.link.bandwidth_hz;
    let mut sessions: Vec<UeSession> = Vec::with_capacity(arr.len());
    let mut cells: Vec<Cell> = (0..sc.layout.n_cells()).map(|_| Cell { queue: Vec::new(), pf: PfState::new(0) }).collect();
    let mut memo: HashMap<Vec<usize>, (Decision, Vec<f64>, bool)> = HashMap::new();
    let mut cluster_memo: HashMap<Vec<usize>, Decision> = HashMap::new();
    let mut out = RunOutcome { sessions: Vec::new(), failed_intervals: 0, qos_infeasible_intervals: 0 };
    let mut next = 0;
    for k in 0..cfg.intervals() {
        let t = k as f64 * dt;
        while next < arr.len() && arr[next].time <= t + 1e-12 {
            let a = &arr[next];
            sessions.push(UeSession {
                id: next,
                cell: a.cell,
                arrival_s: a.time,
                t_in: t,
                t_out: None,
                bits_remaining: cfg.packet_bits,
                delivered_bits: 0.0,
                last_interval_bits: 0.0,
            });
            let c = &mut cells[a.cell];
            c.queue.push(next);
            c.pf.push();
            next += 1;
        }

        let mut picked: Vec<(usize, usize)> = Vec::new();
        for (ci, c) in cells.iter().enumerate() {
            if c.queue.is_empty() {
                continue;
            }
            let rates: Vec<f64> = c.queue.iter().map(|&id| arr[id].solo_se).collect();
            picked.push((ci, pf_select(&rates, &c.pf)?));
        }
        if picked.is_empty() {
            continue;
        }
        let ids: Vec<usize> = picked.iter().map(|&(ci, q)| cells[ci].queue[q]).collect();
        let serving: Vec<usize> = picked.iter().map(|&(ci, _)| ci).collect();

        if !memo.contains_key(&ids) {
            let parts: Vec<&ChannelGainTensor> = ids.iter().map(|&id| &arr[id].gains).collect();
            let g = ChannelGainTensor::stack(&parts)?;
            let decided = match clusters {
                Some(map) => {
                    decide_clustered_cached(&g, &serving, &ids, &map.restrict(&serving), sc, alg, &mut cluster_memo)
                }
                None => Instance::new(&g, &serving, sc).decide(alg),
            };
            let (d, fallback) = match decided {
                Ok(d) => (d, false),
                Err(UavError::Solver(_)) => {
                    let m = LinkModel::frequency(&g, &serving, &sc.link)?;
                    let p = olpc_allocation(&m, &crate::baseline::olpc_powers_w(&g, &serving, &sc.olpc));
                    let se = evaluate(&p, &m)?;
                    let kind = super::ModelKind::Blocks;
                    (Decision { kind, p, bands: None, predicted_se: se, qos_infeasible: false }, true)
                }
                Err(e) => return Err(e),
            };
            let se = achieved_se(&g, &serving, sc, &d)?;
            memo.insert(ids.clone(), (d, se, fallback));
        }
        let (d, se, fallback) = &memo[&ids];
        out.failed_intervals += usize::from(*fallback);
        out.qos_infeasible_intervals += usize::from(d.qos_infeasible);
        observer(&IntervalRecord {
            algorithm: alg,
            seed,
            t,
            sessions: &ids,
            cells: &serving,
            decision: d,
            se,
            fallback: *fallback,
        });

        for (n, &(ci, q)) in picked.iter().enumerate() {
            let s = &mut sessions[ids[n]];
            let bits = se[n] * bw * dt;
            s.delivered_bits += bits;
            s.last_interval_bits = bits;
            if bits >= s.bits_remaining {
                s.t_out = Some(t + dt * s.bits_remaining / bits);
                s.bits_remaining = 0.0;
            } else {
                s.bits_remaining -= bits;
            }
            let c = &mut cells[ci];
            c.pf.update(q, se[n]);
        }
        for (n, &(ci, q)) in picked.iter().enumerate() {
            if sessions[ids[n]].t_out.is_some() {
                let c = &mut cells[ci];
                c.queue.remove(q);
                c.pf.remove(q);
            }
        }
        memo.retain(|key, _| key.iter().all(|&id| sessions[id].t_out.is_none()));
        cluster_memo.retain(|key, _| key.iter().all(|&id| sessions[id].t_out.is_none()));
    }
    out.sessions = sessions;
    Ok(out)
}

/// Sessions of one scheme on one traffic run, with every interval passed to
/// `observer`. Arrivals and channels depend only on `seed`, so schemes run
/// with the same seed face identical traffic.
pub fn simulate_sessions(
    cfg: &BurstyConfig,
    sc: &Scenario,
    clusters: Option<&ClusterMap>,
    alg: Algorithm,
    seed: u64,
    observer: &mut dyn FnMut(&IntervalRecord),
) -> Result<Vec<UeSession>, UavError> {
    cfg.validate()?;
    sc.validate()?;
    let arr = arrivals(cfg, sc, seed)?;
    Ok(simulate(cfg, sc, clusters, alg, seed, &arr, observer)?.sessions)
}

fn campaign(
    cfg: &BurstyConfig,
    sc: &Scenario,
    clusters: Option<&ClusterMap>,
    observer: Option<&mut dyn FnMut(&IntervalRecord)>,
) -> Result<CampaignReport, UavError> {
    cfg.validate()?;
    sc.validate()?;
    if let Some(map) = clusters {
        let all: Vec<usize> = (0..sc.layout.n_cells()).collect();
        if !map.is_partition_of(&all) {
            return Err(UavError::config("clusters", "must partition the cells of the layout"));
        }
    }
    let seeds: Vec<u64> = (0..cfg.n_runs as u64).map(|k| cfg.seed.wrapping_add(k)).collect();
    let traffic: Vec<Vec<Arrival>> =
        seeds.par_iter().map(|&s| arrivals(cfg, sc, s)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, Algorithm)> =
        (0..seeds.len()).flat_map(|r| cfg.algorithms.iter().map(move |&a| (r, a))).collect();
    let outcomes: Vec<Result<RunOutcome, UavError>> = match observer {
        Some(obs) => jobs.iter().map(|&(r, a)| simulate(cfg, sc, clusters, a, seeds[r], &traffic[r], obs)).collect(),
        None => jobs.par_iter().map(|&(r, a)| simulate(cfg, sc, clusters, a, seeds[r], &traffic[r], &mut |_| {})).collect(),
    };

    let mut report = CampaignReport::new(Mode::Bursty, &cfg.algorithms);
    report.runs = seeds.len();
    report.clusters = clusters.map(|m| m.clusters.len());
    let offsets: Vec<usize> = traffic.iter().scan(0, |acc, t| {
        let o = *acc;
        *acc += t.len();
        Some(o)
    }).collect();
    for (&(r, alg), res) in jobs.iter().zip(outcomes) {
        let run = res?;
        *report.skipped.entry(alg).or_default() += run.failed_intervals;
        *report.qos_infeasible.entry(alg).or_default() += run.qos_infeasible_intervals;
        for s in &run.sessions {
            if s.t_in < cfg.warmup_s {
                if alg == cfg.algorithms[0] {
                    report.warmup_excluded += 1;
                }
                continue;
            }
            match s.se(cfg.packet_bits, sc.link.bandwidth_hz) {
                Some(se) => report.samples.push(SeSample { run: offsets[r] + s.id, ue: s.cell, algorithm: alg, se }),
                None => *report.unfinished.entry(alg).or_default() += 1,
            }
        }
    }
    Ok(report)
}

/// Bursty-traffic campaign, optimized network-wide unless `cfg.clustered`
/// asks for co-site clusters.
///
/// In each update interval every cell with waiting UEs serves one of them,
/// chosen by proportional fairness on its interference-free rate. The
/// scheme then allocates power across the served UEs, whose SE drains
/// their remaining bits. Interval counts of solver fallbacks and
/// infeasible QoS targets land in [`CampaignReport::skipped`] and
/// [`CampaignReport::qos_infeasible`].
pub fn run_bursty(cfg: &BurstyConfig, sc: &Scenario) -> Result<CampaignReport, UavError> {
    if cfg.clustered {
        campaign(cfg, sc, Some(&co_site_clusters(&sc.layout)), None)
    } else {
        campaign(cfg, sc, None, None)
    }
}

/// [`run_bursty`] run sequentially, handing every interval to `observer`.
pub fn run_bursty_observed(
    cfg: &BurstyConfig,
    sc: &Scenario,
    observer: &mut dyn FnMut(&IntervalRecord),
) -> Result<CampaignReport, UavError> {
    let map = cfg.clustered.then(|| co_site_clusters(&sc.layout));
    campaign(cfg, sc, map.as_ref(), Some(observer))
}

/// Bursty campaign where each cluster of `clusters` optimizes on its own
/// gains only, and SE is scored with all clusters transmitting together.
pub fn run_clustered(cfg: &BurstyConfig, clusters: &ClusterMap, sc: &Scenario) -> Result<CampaignReport, UavError> {
    campaign(cfg, sc, Some(clusters), None)
}
