//! Sum-rate maximisation with a per-UE SE floor, in both domains, and the
//! infeasible case where the floor exceeds what max-min can reach.

use uavpc::channel::ChannelGainTensor;
use uavpc::sca::{fd_maxsum_qos, maxsum_noqos, td_maxsum_qos, LinkModel, QosOutcome, ScaOptions, ScenarioConfig};

fn show(label: &str, out: &QosOutcome) {
    let a = out.alloc();
    let se: Vec<String> = a.se.iter().map(|s| format!("{s:.3}")).collect();
    let tag = if out.is_feasible() { "feasible" } else { "infeasible, max-min fallback" };
    println!("{label:<22} {tag:<29} sum {:.3}  [{}]", a.sum_se(), se.join(", "));
}

fn main() -> Result<(), uavpc::UavError> {
    let g = ChannelGainTensor::from_fn(4, 4, 8, |i, j, _| if i == j { 1e-11 * (1.0 + i as f64) } else { 1.5e-12 });
    let cfg = ScenarioConfig { s_blocks: 8, t_ttis: 8, ..ScenarioConfig::default() };
    let serving = [0, 1, 2, 3];
    let fd = LinkModel::frequency(&g, &serving, &cfg)?;
    let td = LinkModel::time(&g, &serving, &cfg)?;
    let opts = ScaOptions::default();
    let init = vec![0.05; 4];

    for floor in [0.8, 1.5, 40.0] {
        println!("floor {floor} b/s/Hz");
        show("  frequency, SC bands", &fd_maxsum_qos(&fd, &cfg, &init, &[floor; 4], 0.8, &opts)?);
        show("  time", &td_maxsum_qos(&td, &cfg, &init, &[floor; 4], &opts)?);
    }
    let free = maxsum_noqos(&fd, &cfg, &init, &opts)?;
    println!("no floor: sum {:.3}, weakest UE {:.4}", free.sum_se(), free.min_se());
    Ok(())
}
