//! Replays a heat/shake/cool protocol and scores the decoded temperature
//! against ground truth: worst-case error over the run and agreement on
//! whether the sample sits inside the 60-75 degC working band.

use tactile_twin::{gen_scenario, generate_calibration, run_scenario, Result, ScenarioKind};

const BAND_LO_C: f64 = 60.0;
const BAND_HI_C: f64 = 75.0;

fn main() -> Result<()> {
    let kind = ScenarioKind::SolutionPrep;
    let params = kind.params();
    let cal = generate_calibration(&params, &kind.grid())?;
    let scn = gen_scenario(kind, &Default::default());
    let trace = run_scenario(&scn, &params, &cal, None)?;

    let mut worst_err: f64 = 0.0;
    let mut agree = 0usize;
    let mut total = 0usize;
    for row in &trace.rows {
        let dec = match &row.dec {
            Some(dec) => dec,
            None => continue,
        };
        worst_err = worst_err.max((dec.temperature_c - row.gt.temperature_c).abs());
        let in_band = |t: f64| (BAND_LO_C..=BAND_HI_C).contains(&t);
        if in_band(dec.temperature_c) == in_band(row.gt.temperature_c) {
            agree += 1;
        }
        total += 1;
    }

    println!("samples decoded: {total}");
    println!("worst temperature error: {worst_err:.3} degC");
    println!(
        "in-band agreement ({BAND_LO_C:.0}-{BAND_HI_C:.0} degC): {agree}/{total} ({:.2}%)",
        100.0 * agree as f64 / total as f64
    );
    Ok(())
}
