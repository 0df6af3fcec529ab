//! The single-carrier heuristic: every UE ends up on one contiguous band
//! with a flat power density.

use uavpc::channel::ChannelGainTensor;
use uavpc::sca::{fd_maxmin, fd_sc_maxmin_from, LinkModel, ScaOptions, ScenarioConfig};

fn main() -> Result<(), uavpc::UavError> {
    // Three UEs that hear each other strongly; frequency selectivity
    // favours a different part of the band for each.
    let g = ChannelGainTensor::from_fn(3, 3, 12, |i, j, s| {
        let tilt = 1.0 + 0.5 * ((s as f64 / 11.0) * 3.0 - i as f64).cos();
        if i == j { 2e-11 * tilt } else { 6e-12 }
    });
    let cfg = ScenarioConfig { s_blocks: 12, ..ScenarioConfig::default() };
    let m = LinkModel::frequency(&g, &[0, 1, 2], &cfg)?;
    let opts = ScaOptions::default();
    let init = vec![cfg.p_max_w; 3];

    let free = fd_maxmin(&m, &cfg, &init, &opts)?;
    let sc = fd_sc_maxmin_from(&m, &cfg, &init, 0.8, &free, &opts)?;
    let bands = sc.bands.as_ref().expect("single-carrier result carries bands");
    for i in 0..3 {
        let row: String = (0..12).map(|c| if bands.contains(i, c) { '#' } else { '.' }).collect();
        println!("UE {i}: {row}  SE {:.3} (unconstrained {:.3})", sc.se[i], free.se[i]);
    }
    Ok(())
}
