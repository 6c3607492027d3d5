//! Replays the hot-container handover scenario: the gripper holds a heated
//! vessel while its contents are poured out, then detects the sustained load
//! drop when a receiving hand takes the weight, and releases.

use tactile_twin::{gen_scenario, generate_calibration, run_scenario, Result, ScenarioKind};

fn main() -> Result<()> {
    let kind = ScenarioKind::TeaHandover;
    let params = kind.params();
    let cal = generate_calibration(&params, &kind.grid())?;
    let scn = gen_scenario(kind, &Default::default());
    let trace = run_scenario(&scn, &params, &cal, kind.grip().as_ref())?;

    println!(
        "{:>6} {:>8} {:>8} {:>8}  phase",
        "t (s)", "T (degC)", "Fz (N)", "cmd (N)"
    );
    for (idx, row) in trace.rows.iter().enumerate() {
        if idx % 250 != 0 {
            continue;
        }
        let (dec, grip) = match (&row.dec, &row.grip) {
            (Some(dec), Some(grip)) => (dec, grip),
            _ => continue,
        };
        println!(
            "{:6.1} {:8.3} {:8.4} {:8.4}  {}",
            row.t_s, dec.temperature_c, dec.fz_n, grip.fz_cmd_n, grip.phase
        );
    }

    let pour_end = kind.pour_end_s().unwrap_or(0.0);
    println!("pouring ends at {pour_end:.1} s");
    for ev in &trace.handovers {
        println!(
            "handover detected at {:.3} s (latency {:.3} s, confidence {:.2})",
            ev.t_s, ev.latency_s, ev.confidence
        );
    }
    if trace.handovers.is_empty() {
        println!("no handover detected");
        std::process::exit(1);
    }
    Ok(())
}
