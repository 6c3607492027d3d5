//! Fits a calibration bundle from synthetic sweeps of the default build,
//! prints the recovered constants, and validates the bundle against a fresh
//! grid of ground-truth states.

use tactile_twin::calibration::CalibrationGridSpec;
use tactile_twin::{generate_calibration, validate_calibration, Result, SensorParams};

fn main() -> Result<()> {
    let params = SensorParams::default();
    let grid = CalibrationGridSpec::for_params(&params);
    let cal = generate_calibration(&params, &grid)?;

    println!("provenance: {}", cal.provenance);
    println!("temperature poly (uA -> degC): {:?}", cal.temp_poly);
    println!("rest frequency f0: {:.3} Hz", cal.f0_hz);
    println!(
        "normal map: break at {:.4} Hz drop, slopes {:.6} / {:.6} N per Hz",
        cal.fz_map.break_x, cal.fz_map.slope_lo, cal.fz_map.slope_hi
    );
    println!(
        "tangential map: break at {:.4}, slopes {:.6} / {:.6}",
        cal.tau_map.break_x, cal.tau_map.slope_lo, cal.tau_map.slope_hi
    );
    println!("field thermal gain: {:.3e} per degC", cal.gamma_t_per_c);
    let (fz0, m0) = cal.m0_grid[0];
    println!(
        "amplitude grid: {} knots, first ({fz0:.2} N, {m0:.1} uT)",
        cal.m0_grid.len()
    );

    let report = validate_calibration(&cal, &params, &grid);
    println!("{report}");
    if report.all_passed() {
        println!("calibration bundle accepted");
        Ok(())
    } else {
        std::process::exit(1);
    }
}
