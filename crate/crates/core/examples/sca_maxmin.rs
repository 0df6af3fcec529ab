//! Frequency-domain max-min power allocation over 20 blocks for six UAVs,
//! compared with open-loop power control.

use uavpc::baseline::{olpc_powers_w, OlpcParams};
use uavpc::channel::{build_gain_tensor, ChannelParams};
use uavpc::sca::{
    equivalent_sinr_db, evaluate, fd_maxmin, olpc_allocation, write_history_csv, LinkModel, ScaOptions, ScenarioConfig,
};
use uavpc::topology::{build_layout, drop_ues};

fn main() -> Result<(), uavpc::UavError> {
    let layout = build_layout(2, 2000.0, 35.0, 8.5)?;
    let drop = drop_ues(&layout, &[0, 1, 2, 3, 4, 5], 1, 3)?;
    let g = build_gain_tensor(&layout, &drop, &ChannelParams::default(), 20, 3)?;
    let cfg = ScenarioConfig::default();
    let m = LinkModel::frequency(&g, &drop.serving_cell, &cfg)?;

    let init = olpc_powers_w(&g, &drop.serving_cell, &OlpcParams::default());
    let olpc = evaluate(&olpc_allocation(&m, &init), &m)?;
    let a = fd_maxmin(&m, &cfg, &init, &ScaOptions::default())?;

    println!("{:>3} {:>10} {:>10} {:>12}", "UE", "OLPC SE", "max-min SE", "total power");
    for i in 0..m.n() {
        println!("{i:>3} {:>10.3} {:>10.3} {:>9.1} mW", olpc[i], a.se[i], 1e3 * a.p.totals()[i]);
    }
    println!(
        "min SE {:.3} b/s/Hz ({:.2} dB equivalent) after {} SCA iterations",
        a.min_se(),
        equivalent_sinr_db(a.min_se()),
        a.outer_iterations
    );
    write_history_csv(&a.history, std::io::stdout().lock())?;
    Ok(())
}
