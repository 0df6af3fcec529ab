//! Poisson sessions on three cells, watching every scheduling interval.

use uavpc::sim::{run_bursty_observed, Algorithm, BurstyConfig, Scenario};
use uavpc::topology::build_layout;

fn main() -> Result<(), uavpc::UavError> {
    let sc = Scenario { layout: build_layout(1, 2000.0, 35.0, 8.5)?, ..Scenario::default() };
    let cfg = BurstyConfig {
        sim_time_s: 4.0,
        warmup_s: 0.5,
        algorithms: vec![Algorithm::Olpc, Algorithm::TdMaxsumQos],
        ..BurstyConfig::default()
    };
    let mut busiest = 0;
    let report = run_bursty_observed(&cfg, &sc, &mut |rec| busiest = busiest.max(rec.sessions.len()))?;

    println!("at most {busiest} sessions were scheduled together");
    for alg in &cfg.algorithms {
        let s = report.summary(*alg)?;
        println!("{alg:<16} sessions {:>4}  p10 {:.3}  median {:.3}  unfinished {}", s.n, s.percentiles[0], s.percentiles[2], report.unfinished[alg]);
    }
    Ok(())
}
