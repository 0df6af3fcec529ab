use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{achieved_se, decide_clustered, Algorithm, CampaignReport, Instance, Mode, Scenario, SeSample};
use crate::channel::build_gain_tensor_with;
use crate::topology::{co_site_clusters, drop_ues_with, ClusterMap};
use crate::UavError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullBufferConfig {
    pub n_realizations: usize,
    /// Fraction of cells carrying a UE, drawn uniformly per realization.
    pub active_fraction_range: (f64, f64),
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    /// Optimize per co-site cluster instead of network-wide.
    pub clustered: bool,
}

impl Default for FullBufferConfig {
    fn default() -> Self {
        Self {
            n_realizations: 300,
            active_fraction_range: (0.5, 1.0),
            algorithms: Algorithm::ALL.to_vec(),
            seed: 1,
            clustered: false,
        }
    }
}

impl FullBufferConfig {
    pub fn validate(&self) -> Result<(), UavError> {
        if self.n_realizations == 0 {
            return Err(UavError::config("realizations", "must be at least 1"));
        }
        let (lo, hi) = self.active_fraction_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(UavError::config("active_fraction", format!("range ({lo}, {hi}) must lie in [0, 1] and be ordered")));
        }
        if self.algorithms.is_empty() {
            return Err(UavError::config("algo", "no algorithm selected"));
        }
        Ok(())
    }
}

/// Active cells of one realization, ascending. At least one cell is active.
pub(crate) fn sample_active<R: Rng + ?Sized>(n_cells: usize, range: (f64, f64), rng: &mut R) -> Vec<usize> {
    let f = if range.1 > range.0 { rng.random_range(range.0..=range.1) } else { range.0 };
    let k = ((f * n_cells as f64).round() as usize).clamp(1, n_cells);
    let mut cells = sample(rng, n_cells, k).into_vec();
    cells.sort_unstable();
    cells
}

struct Realization {
    samples: Vec<SeSample>,
    failed: Vec<Algorithm>,
    infeasible: Vec<Algorithm>,
}

fn realize(cfg: &FullBufferConfig, sc: &Scenario, r: usize) -> Result<Realization, UavError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(r as u64 + 1);
    let active = sample_active(sc.layout.n_cells(), cfg.active_fraction_range, &mut rng);
    let drop = drop_ues_with(&sc.layout, &active, 1, sc.ue_height_m, &mut rng)?;
    let g = build_gain_tensor_with(&sc.layout, &drop, &sc.channel, sc.link.s_blocks, &mut rng)?;
    let serving = &drop.serving_cell;
    let clusters: Option<ClusterMap> = cfg.clustered.then(|| co_site_clusters(&sc.layout).restrict(&active));
    let mut out = Realization { samples: Vec::new(), failed: Vec::new(), infeasible: Vec::new() };
    let mut inst = Instance::new(&g, serving, sc);
    for &alg in &cfg.algorithms {
        let decided = match &clusters {
            Some(map) => decide_clustered(&g, serving, map, sc, alg),
            None => inst.decide(alg),
        };
        let se = decided.and_then(|d| achieved_se(&g, serving, sc, &d).map(|se| (d.qos_infeasible, se)));
        match se {
            Ok((infeasible, se)) => {
                if infeasible {
                    out.infeasible.push(alg);
                }
                out.samples.extend(se.into_iter().enumerate().map(|(ue, se)| SeSample { run: r, ue, algorithm: alg, se }));
            }
            Err(UavError::Solver(_)) => out.failed.push(alg),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Snapshot campaign with every active UE always transmitting.
///
/// Realization `r` draws from stream `r + 1` of a ChaCha8 generator seeded
/// with `cfg.seed`, so results do not depend on thread count or order.
/// Solver failures drop that algorithm's samples for the realization and
/// are counted in [`CampaignReport::skipped`].
pub fn run_full_buffer(cfg: &FullBufferConfig, sc: &Scenario) -> Result<CampaignReport, UavError> {
    cfg.validate()?;
    sc.validate()?;
    let results: Vec<Result<Realization, UavError>> =
        (0..cfg.n_realizations).into_par_iter().map(|r| realize(cfg, sc, r)).collect();
    let mut report = CampaignReport::new(Mode::FullBuffer, &cfg.algorithms);
    report.runs = cfg.n_realizations;
    if cfg.clustered {
        report.clusters = Some(co_site_clusters(&sc.layout).clusters.len());
    }
    for res in results {
        let real = res?;
        report.samples.extend(real.samples);
        for a in real.failed {
            *report.skipped.entry(a).or_default() += 1;
        }
        for a in real.infeasible {
            *report.qos_infeasible.entry(a).or_default() += 1;
        }
    }
    Ok(report)
}
