//! Time-domain max-min: two strong mutual interferers learn to take turns.

use uavpc::channel::ChannelGainTensor;
use uavpc::sca::{td_maxmin, LinkModel, ScaOptions, ScenarioConfig};

fn main() -> Result<(), uavpc::UavError> {
    let g = ChannelGainTensor::from_fn(2, 2, 1, |i, j, _| if i == j { 1e-10 } else { 8e-11 });
    let cfg = ScenarioConfig { t_ttis: 6, ..ScenarioConfig::default() };
    let m = LinkModel::time(&g, &[0, 1], &cfg)?;
    let a = td_maxmin(&m, &cfg, &[cfg.p_max_w; 2], &ScaOptions::default())?;

    for (i, row) in a.p.p.iter().enumerate() {
        let dbm: Vec<String> = row.iter().map(|p| format!("{:6.1}", 10.0 * (p * 1e3).log10())).collect();
        println!("UE {i} power per TTI (dBm): {}", dbm.join(" "));
    }
    println!("SE {:?}", a.se);
    Ok(())
}
