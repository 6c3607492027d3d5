//! Exercises the full offline workflow through files: simulate a noisy run
//! to CSV, persist the calibration bundle as JSON, reload both, decode the
//! trace offline, and confirm every artifact round-trips byte-for-byte.

use std::fs;

use tactile_twin::calibration::CalibrationSet;
use tactile_twin::trace::{load_trace, save_trace, write_trace_csv};
use tactile_twin::{
    decode_trace, gen_scenario, generate_calibration, simulate_scenario, Result, ScenarioKind,
};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("tactile-twin-pipeline");
    fs::create_dir_all(&dir)?;

    let kind = ScenarioKind::GripJamming;
    let bench = kind.params();
    let mut field = bench;
    field.noise_current_ua = 0.05;
    field.noise_freq_hz = 2.0;
    field.noise_field_ut = 5.0;
    field.rng_seed = 7;

    let raw = simulate_scenario(&gen_scenario(kind, &Default::default()), &field)?;
    let raw_path = dir.join("raw.csv");
    save_trace(&raw, &raw_path)?;
    let reloaded = load_trace(&raw_path)?;
    let raw_csv = write_trace_csv(&raw);
    let raw_identical = raw_csv == write_trace_csv(&reloaded);

    let cal = generate_calibration(&bench, &kind.grid())?;
    let cal_path = dir.join("cal.json");
    cal.save(&cal_path)?;
    let cal_identical = CalibrationSet::load(&cal_path)? == cal;

    let decoded = decode_trace(&reloaded, &cal)?;
    let dec_path = dir.join("decoded.csv");
    save_trace(&decoded, &dec_path)?;
    let dec_identical = write_trace_csv(&load_trace(&dec_path)?) == write_trace_csv(&decoded);

    println!("raw trace:     {} bytes, reload identical: {raw_identical}", raw_csv.len());
    println!(
        "calibration:   {} bytes, reload identical: {cal_identical}",
        cal.to_json().len()
    );
    println!(
        "decoded trace: {} bytes, reload identical: {dec_identical}",
        write_trace_csv(&decoded).len()
    );

    fs::remove_dir_all(&dir)?;
    if raw_identical && cal_identical && dec_identical {
        println!("pipeline round trip clean");
        Ok(())
    } else {
        std::process::exit(1);
    }
}
