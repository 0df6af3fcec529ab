//! Channel gains for a drop: serving link against the strongest interferer,
//! plus the per-block gains of one tapped-delay-line realization.

use uavpc::channel::{block_gains, build_gain_tensor, realize_tdl, ChannelParams, DEFAULT_BANDWIDTH_HZ};
use uavpc::topology::{build_layout, drop_ues};

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn main() -> Result<(), uavpc::UavError> {
    let layout = build_layout(7, 2000.0, 35.0, 8.5)?;
    let active: Vec<usize> = (0..layout.n_cells()).collect();
    let drop = drop_ues(&layout, &active, 1, 7)?;
    let params = ChannelParams::default();
    let g = build_gain_tensor(&layout, &drop, &params, 20, 7)?;

    for (i, &cell) in drop.serving_cell.iter().enumerate().take(6) {
        let avg = |j: usize| (0..g.s_blocks()).map(|s| g.get(i, j, s)).sum::<f64>() / g.s_blocks() as f64;
        let (worst, w) = (0..g.n_cells())
            .filter(|&j| j != cell)
            .map(|j| (j, avg(j)))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        println!("UE {i:2}: serving {:7.2} dB, strongest other cell {worst:2} at {:7.2} dB", db(avg(cell)), db(w));
    }

    let taps = realize_tdl(&params.tdl, 1);
    let blocks = block_gains(&taps, DEFAULT_BANDWIDTH_HZ, 20);
    let spread: Vec<String> = blocks.iter().map(|b| format!("{:+.2}", db(*b))).collect();
    println!("{} taps, block gains in dB: {}", taps.len(), spread.join(" "));
    Ok(())
}
