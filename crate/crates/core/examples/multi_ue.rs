//! Two UAVs sharing each cell: each gets its own slice of the band before
//! the single-carrier max-min runs.

use uavpc::channel::ChannelGainTensor;
use uavpc::sca::{intra_cell_windows, multi_ue_maxmin, LinkModel, ScaOptions, ScenarioConfig};

fn main() -> Result<(), uavpc::UavError> {
    let serving = [0, 0, 1, 1];
    let g = ChannelGainTensor::from_fn(4, 2, 8, |i, j, s| {
        let own = serving[i] == j;
        (if own { 3e-11 } else { 3e-12 }) * (1.0 + 0.05 * ((i + s) % 3) as f64)
    });
    let cfg = ScenarioConfig { s_blocks: 8, ..ScenarioConfig::default() };
    let m = LinkModel::frequency(&g, &serving, &cfg)?.with_shares(vec![2.0; 4])?;
    println!("windows: {:?}", intra_cell_windows(&m)?);

    let a = multi_ue_maxmin(&m, &cfg, &[cfg.p_max_w; 4], 0.8, &ScaOptions::default())?;
    for (i, r) in a.bands.as_ref().unwrap().ranges.iter().enumerate() {
        println!("UE {i} (cell {}): blocks {r:?}, SE {:.3}", serving[i], a.se[i]);
    }
    Ok(())
}
