//! Per-site optimization evaluated against the whole network's interference.

use uavpc::sim::{run_bursty, Algorithm, BurstyConfig, Scenario};
use uavpc::topology::build_layout;

fn main() -> Result<(), uavpc::UavError> {
    let sc = Scenario { layout: build_layout(2, 2000.0, 35.0, 8.5)?, ..Scenario::default() };
    let base = BurstyConfig { sim_time_s: 3.0, warmup_s: 0.5, algorithms: vec![Algorithm::FdScMaxmin], ..BurstyConfig::default() };
    for clustered in [false, true] {
        let r = run_bursty(&BurstyConfig { clustered, ..base.clone() }, &sc)?;
        let s = r.summary(Algorithm::FdScMaxmin)?;
        let label = r.clusters.map_or("centralized".to_string(), |k| format!("{k} clusters"));
        println!("{label:<12} p10 {:.3}  median {:.3}  mean {:.3}", s.percentiles[0], s.percentiles[2], s.mean);
    }
    Ok(())
}
