//! Replays the slip-disturbance scenario with the adaptive grip controller
//! in the loop and prints the command trajectory: the controller jams the
//! grasp while the tangential disturbance grows, then relaxes back to the
//! floor force once it passes.

use tactile_twin::{
    gen_scenario, generate_calibration, run_scenario, GripPhase, Result, ScenarioKind,
};

fn main() -> Result<()> {
    let kind = ScenarioKind::GripJamming;
    let params = kind.params();
    let cal = generate_calibration(&params, &kind.grid())?;
    let scn = gen_scenario(kind, &Default::default());
    let trace = run_scenario(&scn, &params, &cal, kind.grip().as_ref())?;

    println!(
        "{:>6} {:>8} {:>8} {:>8}  phase",
        "t (s)", "Ftau (N)", "cmd (N)", "margin"
    );
    let mut peak_cmd: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    let mut phase_counts = [0usize; 3];
    for (idx, row) in trace.rows.iter().enumerate() {
        let (dec, grip) = match (&row.dec, &row.grip) {
            (Some(dec), Some(grip)) => (dec, grip),
            _ => continue,
        };
        peak_cmd = peak_cmd.max(grip.fz_cmd_n);
        min_margin = min_margin.min(grip.margin_n);
        phase_counts[match grip.phase {
            GripPhase::Stationary => 0,
            GripPhase::Jamming => 1,
            GripPhase::Recovery => 2,
        }] += 1;
        if idx % 25 == 0 {
            println!(
                "{:6.2} {:8.4} {:8.4} {:8.4}  {}",
                row.t_s, dec.f_tau_n, grip.fz_cmd_n, grip.margin_n, grip.phase
            );
        }
    }
    println!("peak command {peak_cmd:.3} N, worst cone margin {min_margin:.3} N");
    println!(
        "phase occupancy: {} stationary, {} jamming, {} recovery samples",
        phase_counts[0], phase_counts[1], phase_counts[2]
    );
    Ok(())
}
