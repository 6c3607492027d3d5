//! Randomized invariants: channel cross-insensitivity, monotonicity, decode
//! round trips, controller safety bounds, detector thresholds, fitter
//! recovery, and lossless serialization.

use std::sync::OnceLock;

use proptest::prelude::*;

use tactile_twin::calibration::{
    generate_calibration, CalibrationGridSpec, CalibrationSet, FZ_LOW_RANGE_N, TOL_DIRECTION_DEG,
    TOL_FZ_HIGH_N, TOL_FZ_LOW_N, TOL_TAU_N, TOL_TEMP_C,
};
use tactile_twin::decode::{decode, decode_tangential};
use tactile_twin::error::TwinError;
use tactile_twin::fit::{fit_piecewise_linear, PiecewiseLinear};
use tactile_twin::grip::{detect_handover, grip_init, grip_update, GripConfig};
use tactile_twin::params::SensorParams;
use tactile_twin::physics::{capacitor_frequency, forward_sample, halbach_field, iongel_current};
use tactile_twin::state::{DecodeFlags, DecodedState, TactileState};

/// Calibration of the default build, fitted once and shared across cases.
fn default_cal() -> &'static CalibrationSet {
    static CAL: OnceLock<CalibrationSet> = OnceLock::new();
    CAL.get_or_init(|| {
        let params = SensorParams::default();
        generate_calibration(&params, &CalibrationGridSpec::for_params(&params))
            .expect("default calibration")
    })
}

/// Smallest absolute angle between two directions, deg.
fn angle_between_deg(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Decoded state carrying only a tangential load along +x.
fn tangential_state(tau: f64) -> DecodedState {
    DecodedState {
        temperature_c: 25.0,
        fz_n: 3.0,
        f_tau_n: tau,
        theta_deg: Some(0.0),
        fx_n: tau,
        fy_n: 0.0,
        flags: DecodeFlags::default(),
    }
}

proptest! {
    /// The load leak multiplies the temperature current by at most
    /// (1 + leak), so a leak-free cell is exactly load-blind.
    #[test]
    fn temperature_current_leak_is_bounded(
        temp in 20.0..=80.0f64,
        fz in 0.0..=7.0f64,
        tau in 0.0..=2.0f64,
        leak in 0.0..=0.01f64,
    ) {
        let mut p = SensorParams::default();
        p.iongel.force_leak = leak;
        let free = iongel_current(&TactileState::at_rest(temp), &p.iongel);
        let loaded = iongel_current(&TactileState::new(temp, fz, tau, 0.0), &p.iongel);
        let excess = loaded / free - 1.0;
        prop_assert!((-1e-12..=leak + 1e-12).contains(&excess));
    }

    /// The stacked-plate geometry only responds to compression: any in-plane
    /// load leaves the oscillator frequency bit-identical.
    #[test]
    fn capacitor_is_blind_to_tangential_load(
        temp in 20.0..=80.0f64,
        fz in 0.0..=9.0f64,
        fx in -2.0..2.0f64,
        fy in -2.0..2.0f64,
    ) {
        let p = SensorParams::default();
        let (rest, _) = capacitor_frequency(&TactileState::new(temp, fz, 0.0, 0.0), &p.capacitor);
        let (loaded, _) = capacitor_frequency(&TactileState::new(temp, fz, fx, fy), &p.capacitor);
        prop_assert_eq!(rest.to_bits(), loaded.to_bits());
    }

    /// With matched gap-expansion and permittivity coefficients the thermal
    /// terms cancel exactly: frequency is bit-identical across temperature.
    #[test]
    fn capacitor_thermal_terms_cancel_when_matched(
        t1 in 20.0..=80.0f64,
        t2 in 20.0..=80.0f64,
        fz in 0.0..=9.0f64,
    ) {
        let p = SensorParams::default();
        let (fa, _) = capacitor_frequency(&TactileState::new(t1, fz, 0.0, 0.0), &p.capacitor);
        let (fb, _) = capacitor_frequency(&TactileState::new(t2, fz, 0.0, 0.0), &p.capacitor);
        prop_assert_eq!(fa.to_bits(), fb.to_bits());
    }

    /// More normal load always reads as a lower frequency until saturation.
    #[test]
    fn frequency_strictly_decreases_with_load(
        fz in 0.0..9.0f64,
        step in 1e-3..2.0f64,
        temp in 20.0..=80.0f64,
    ) {
        let p = SensorParams::default();
        let fz_hi = (fz + step).min(9.2);
        prop_assume!(fz_hi > fz + 1e-6);
        let (fa, _) = capacitor_frequency(&TactileState::new(temp, fz, 0.0, 0.0), &p.capacitor);
        let (fb, _) = capacitor_frequency(&TactileState::new(temp, fz_hi, 0.0, 0.0), &p.capacitor);
        prop_assert!(fb < fa);
    }

    /// More tangential load always reads as a stronger radial field inside
    /// the shear range.
    #[test]
    fn radial_field_strictly_increases_with_tangential_load(
        tau in 0.0..1.2f64,
        step in 1e-3..1.0f64,
        fz in 0.0..=7.0f64,
    ) {
        let p = SensorParams::default();
        let tau_hi = (tau + step).min(1.249);
        prop_assume!(tau_hi > tau + 1e-6);
        let field = |t: f64| {
            let (bx, by, _) =
                halbach_field(&TactileState::new(25.0, fz, t, 0.0), &p.halbach, &p.capacitor)
                    .expect("inside shear range");
            bx.hypot(by)
        };
        prop_assert!(field(tau_hi) > field(tau));
    }

    /// Tangential loads beyond the shear range are rejected, not clamped.
    #[test]
    fn tangential_overrange_is_rejected(
        tau in 1.2501..3.0f64,
        theta in -180.0..180.0f64,
    ) {
        let p = SensorParams::default();
        let rad = theta.to_radians();
        let gt = TactileState::new(25.0, 3.0, tau * rad.cos(), tau * rad.sin());
        let err = forward_sample(&gt, &p, 0.0).unwrap_err();
        let overrange = matches!(err, TwinError::RangeExceeded { .. });
        prop_assert!(overrange, "unexpected error kind: {err}");
    }

    /// Full forward/decode round trip stays inside the shipped tolerances
    /// everywhere in the calibrated envelope.
    #[test]
    fn decode_round_trip_stays_within_tolerances(
        temp in 20.0..=80.0f64,
        fz in 0.0..=7.0f64,
        tau in 0.0..=1.0f64,
        theta in -180.0..180.0f64,
    ) {
        let params = SensorParams::default();
        let rad = theta.to_radians();
        let gt = TactileState::new(temp, fz, tau * rad.cos(), tau * rad.sin());
        let dec = decode(&forward_sample(&gt, &params, 0.0).unwrap(), default_cal()).unwrap();
        prop_assert!((dec.temperature_c - temp).abs() <= TOL_TEMP_C);
        let tol_fz = if fz <= FZ_LOW_RANGE_N { TOL_FZ_LOW_N } else { TOL_FZ_HIGH_N };
        prop_assert!((dec.fz_n - fz).abs() <= tol_fz);
        prop_assert!((dec.f_tau_n - tau).abs() <= TOL_TAU_N);
        if let Some(th) = dec.theta_deg {
            prop_assert!(angle_between_deg(th, gt.theta_deg()) <= TOL_DIRECTION_DEG);
        }
    }

    /// The decoded direction is the field's own angle, preserved exactly by
    /// the scalar drift compensation.
    #[test]
    fn direction_survives_the_round_trip_exactly(
        temp in 20.0..=80.0f64,
        fz in 0.0..=7.0f64,
        tau in 0.05..1.25f64,
        theta in -179.99..180.0f64,
    ) {
        let params = SensorParams::default();
        let rad = theta.to_radians();
        let gt = TactileState::new(temp, fz, tau * rad.cos(), tau * rad.sin());
        let dec = decode(&forward_sample(&gt, &params, 0.0).unwrap(), default_cal()).unwrap();
        let th = dec.theta_deg.expect("loaded contact");
        prop_assert!(angle_between_deg(th, theta) <= 1e-9);
    }

    /// Stage order matters: feeding the amplitude normalization a wrong
    /// normal force visibly corrupts the tangential reading.
    #[test]
    fn tangential_decode_needs_the_true_normal_force(
        temp_fz in 2.5..4.5f64,
        tau in 0.8..1.2f64,
        theta in -180.0..180.0f64,
    ) {
        let params = SensorParams::default();
        let rad = theta.to_radians();
        let gt = TactileState::new(25.0, temp_fz, tau * rad.cos(), tau * rad.sin());
        let (bx, by, _) = halbach_field(&gt, &params.halbach, &params.capacitor).unwrap();
        let cal = default_cal();
        let honest = decode_tangential(bx, by, temp_fz, cal).unwrap();
        let corrupted = decode_tangential(bx, by, 1.5 * temp_fz, cal).unwrap();
        prop_assert!((honest.f_tau_n - corrupted.f_tau_n).abs() > TOL_TAU_N);
    }

    /// The release detector fires exactly when the observed drop exceeds the
    /// configured fraction, and reports the drop it saw.
    #[test]
    fn handover_fires_only_past_the_drop_fraction(
        dip in 0.2..0.9f64,
        frac in 0.05..0.95f64,
    ) {
        prop_assume!((dip - frac).abs() >= 0.03);
        let cfg = GripConfig {
            handover_drop_frac: frac,
            ..GripConfig::default()
        };
        let dt = 0.02;
        let mut window = Vec::new();
        for k in 0..=25 {
            window.push((k as f64 * dt, 3.0));
        }
        for k in 1..=5 {
            window.push((0.5 + k as f64 * dt, 3.0 * (1.0 - dip)));
        }
        let event = detect_handover(&window, &cfg);
        prop_assert_eq!(event.is_some(), dip > frac);
        if let Some(e) = event {
            prop_assert!(e.latency_s <= cfg.handover_window_s + 1e-9);
            prop_assert!((e.confidence - dip).abs() <= 1e-9);
        }
    }

    /// Commands never move faster than the slew limit, never leave the
    /// clamp range, and always carry the exact residual cone margin.
    #[test]
    fn grip_commands_slew_clamp_and_report_margin(
        taus in prop::collection::vec(0.0..6.0f64, 5..50),
        dt in 0.005..0.1f64,
        mu in 0.3..0.8f64,
        gain_over in 1.0..3.0f64,
        fz_min in 0.5..6.0f64,
        span in 1.0..10.0f64,
        rate in 1.0..20.0f64,
    ) {
        let cfg = GripConfig {
            mu,
            gain: gain_over / mu,
            fz_min_n: fz_min,
            fz_max_n: fz_min + span,
            rate_limit_n_per_s: rate,
            ..GripConfig::default()
        };
        cfg.validate().unwrap();
        let mut cmd = grip_init(&tangential_state(taus[0]), &cfg);
        prop_assert!(cmd.fz_cmd_n >= cfg.fz_min_n && cmd.fz_cmd_n <= cfg.fz_max_n);
        for &tau in &taus[1..] {
            let next = grip_update(&tangential_state(tau), &cfg, &cmd, dt);
            prop_assert!((next.fz_cmd_n - cmd.fz_cmd_n).abs() <= rate * dt + 1e-9);
            prop_assert!(next.fz_cmd_n >= cfg.fz_min_n - 1e-12);
            prop_assert!(next.fz_cmd_n <= cfg.fz_max_n + 1e-12);
            prop_assert_eq!(next.margin_n, mu * next.fz_cmd_n - tau);
            cmd = next;
        }
    }

    /// Exact two-segment data comes back with its exact parameters, and
    /// refitting the fit's own samples is a fixed point.
    #[test]
    fn piecewise_fit_recovers_and_is_idempotent(
        gaps in prop::collection::vec(0.05..1.0f64, 10..40),
        frac in 0.2..0.8f64,
        slope_lo in -3.0..3.0f64,
        step in 0.2..3.0f64,
        steep_up in any::<bool>(),
        y_break in -5.0..5.0f64,
    ) {
        let mut x = Vec::with_capacity(gaps.len());
        let mut acc = 0.0;
        for g in &gaps {
            acc += g;
            x.push(acc);
        }
        let k = x.len() / 2;
        let break_x = x[k - 1] + frac * (x[k] - x[k - 1]);
        let slope_hi = slope_lo + if steep_up { step } else { -step };
        let exact = |xi: f64| {
            y_break + slope_lo * (xi - break_x).min(0.0) + slope_hi * (xi - break_x).max(0.0)
        };
        let points: Vec<(f64, f64)> = x.iter().map(|&xi| (xi, exact(xi))).collect();
        let fit = fit_piecewise_linear(&points).unwrap();
        prop_assert!((fit.map.break_x - break_x).abs() <= 1e-9 * break_x.abs().max(1.0));
        prop_assert!((fit.map.slope_lo - slope_lo).abs() <= 1e-9 * slope_lo.abs().max(1.0));
        prop_assert!((fit.map.slope_hi - slope_hi).abs() <= 1e-9 * slope_hi.abs().max(1.0));
        let resampled: Vec<(f64, f64)> = x.iter().map(|&xi| (xi, fit.map.eval(xi))).collect();
        let refit = fit_piecewise_linear(&resampled).unwrap();
        prop_assert!((refit.map.break_x - fit.map.break_x).abs() <= 1e-9 * break_x.abs().max(1.0));
        prop_assert!((refit.map.slope_lo - fit.map.slope_lo).abs() <= 1e-9);
        prop_assert!((refit.map.slope_hi - fit.map.slope_hi).abs() <= 1e-9);
    }

    /// Increasing maps invert their own evaluations.
    #[test]
    fn increasing_map_inverts_its_own_output(
        break_x in 1.0..5.0f64,
        tail in 1.0..5.0f64,
        break_y in -5.0..5.0f64,
        slope_lo in 0.05..5.0f64,
        slope_hi in 0.05..5.0f64,
        frac in 0.0..=1.0f64,
    ) {
        let map = PiecewiseLinear {
            break_x,
            break_y,
            slope_lo,
            slope_hi,
            x_min: 0.0,
            x_max: break_x + tail,
        };
        map.validate().unwrap();
        let x = frac * map.x_max;
        let y = map.eval(x);
        prop_assert!((map.invert(y) - x).abs() <= 1e-9 * x.abs().max(1.0));
    }

    /// Parameter files are lossless: parse(write(p)) == p bit for bit.
    #[test]
    fn parameter_files_round_trip(
        scale in 0.25..8.0f64,
        noise_i in 0.0..1.0f64,
        noise_f in 0.0..10.0f64,
        noise_b in 0.0..20.0f64,
        seed in any::<u64>(),
    ) {
        let mut p = SensorParams::default().with_stiffness_scale(scale);
        p.noise_current_ua = noise_i;
        p.noise_freq_hz = noise_f;
        p.noise_field_ut = noise_b;
        p.rng_seed = seed;
        let parsed = SensorParams::from_text(&p.to_text()).unwrap();
        prop_assert_eq!(parsed, p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Calibration bundles are lossless across builds of different
    /// stiffness: parse(write(cal)) == cal field for field.
    #[test]
    fn calibration_bundles_round_trip(scale in 0.5..4.0f64) {
        let params = SensorParams::default().with_stiffness_scale(scale);
        let cal = generate_calibration(&params, &CalibrationGridSpec::for_params(&params)).unwrap();
        let trip = CalibrationSet::from_json(&cal.to_json()).unwrap();
        prop_assert_eq!(trip, cal);
    }
}
