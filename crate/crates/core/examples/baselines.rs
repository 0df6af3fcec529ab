//! Open-loop power control and the proportional-fair scheduler.

use uavpc::baseline::{olpc_power_dbm, pf_select, OlpcParams, PfState};

fn main() -> Result<(), uavpc::UavError> {
    let params = OlpcParams::default();
    for pl in [80.0, 100.0, 120.0, 140.0] {
        println!("path loss {pl:5.1} dB -> {:6.2} dBm", olpc_power_dbm(pl, &params));
    }

    // Three sessions with fixed instantaneous rates: PF shares the slots.
    let rates = [3.0, 1.5, 0.5];
    let mut state = PfState::new(rates.len());
    let mut served = [0usize; 3];
    for _ in 0..3000 {
        let k = pf_select(&rates, &state)?;
        served[k] += 1;
        state.update(k, rates[k]);
    }
    println!("slots served per UE: {served:?}");
    Ok(())
}
