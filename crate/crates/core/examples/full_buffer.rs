//! A short full-buffer campaign on twelve cells with every algorithm.

use uavpc::sim::{run_full_buffer, FullBufferConfig, Scenario};
use uavpc::topology::build_layout;

fn main() -> Result<(), uavpc::UavError> {
    let sc = Scenario { layout: build_layout(4, 2000.0, 35.0, 8.5)?, ..Scenario::default() };
    let cfg = FullBufferConfig { n_realizations: 8, ..FullBufferConfig::default() };
    let report = run_full_buffer(&cfg, &sc)?;

    println!("{:<18} {:>6} {:>7} {:>7} {:>7} {:>9}", "algorithm", "n", "mean", "p10", "p50", "p10 gain");
    for row in report.summary_rows()? {
        let s = &row.summary;
        let gain = row.gains_pct.map_or("-".to_string(), |g| format!("{:+.0}%", g[0]));
        println!("{:<18} {:>6} {:>7.3} {:>7.3} {:>7.3} {:>9}", row.algorithm.name(), s.n, s.mean, s.percentiles[0], s.percentiles[2], gain);
    }
    Ok(())
}
