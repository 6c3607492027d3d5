//! Forward-simulates a handful of contact states, decodes the raw signals
//! back through a fitted calibration, and tabulates truth against estimate.

use tactile_twin::calibration::CalibrationGridSpec;
use tactile_twin::physics::forward_sample;
use tactile_twin::{decode, generate_calibration, Result, SensorParams, TactileState};

fn main() -> Result<()> {
    let params = SensorParams::default();
    let grid = CalibrationGridSpec::for_params(&params);
    let cal = generate_calibration(&params, &grid)?;

    let states = [
        TactileState::at_rest(25.0),
        TactileState::new(25.0, 5.52, 0.0, 0.80),
        TactileState::new(80.0, 3.0, -0.6, 0.8),
        TactileState::new(20.0, 7.0, 0.9, 0.0),
        TactileState::new(55.0, 4.4, 0.3, -1.1),
    ];

    println!(
        "{:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8} | {:>8} {:>8}",
        "T true", "T est", "Fz true", "Fz est", "Ft true", "Ft est", "th true", "th est"
    );
    for state in &states {
        let raw = forward_sample(state, &params, 0.0)?;
        let dec = decode(&raw, &cal)?;
        let tau_true = state.fx_n.hypot(state.fy_n);
        let theta_true = if tau_true > 0.0 {
            format!("{:8.2}", state.fy_n.atan2(state.fx_n).to_degrees())
        } else {
            format!("{:>8}", "-")
        };
        let theta_est = match dec.theta_deg {
            Some(th) => format!("{th:8.2}"),
            None => format!("{:>8}", "-"),
        };
        println!(
            "{:8.3} {:8.3} | {:8.4} {:8.4} | {:8.4} {:8.4} | {theta_true} {theta_est}",
            state.temperature_c, dec.temperature_c, state.fz_n, dec.fz_n, tau_true, dec.f_tau_n
        );
    }
    Ok(())
}
