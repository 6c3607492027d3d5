use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, TwinError};
use crate::params::{CapacitorParams, HalbachParams, IonGelParams, SensorParams};
use crate::state::{RawSample, TactileState};

/// Normal-force scale of the ion-gel load factor, N.
const LOAD_FACTOR_FZ_SCALE_N: f64 = 7.0;
/// Tangential-force scale of the ion-gel load factor, N.
const LOAD_FACTOR_TAU_SCALE_N: f64 = 2.0;

/// Combined load fraction in [0, 1] driving the ion-gel force cross-talk.
pub fn load_factor(state: &TactileState) -> f64 {
    let raw = (state.fz_n / LOAD_FACTOR_FZ_SCALE_N
        + state.f_tau_n() / LOAD_FACTOR_TAU_SCALE_N)
        / 2.0;
    raw.min(1.0)
}

/// Ion-gel current, microamps: exponential in temperature with an optional
/// bounded force leak of at most force_leak (<= 1%) relative change.
pub fn iongel_current(state: &TactileState, p: &IonGelParams) -> f64 {
    let thermal = p.i_ref_ua * (p.growth_per_c * (state.temperature_c - p.t_ref_c)).exp();
    thermal * (1.0 + p.force_leak * load_factor(state))
}

/// Normal compression of the elastomer stack under `fz_n`, mm, and whether
/// the displacement clamped at the saturation bound.
pub fn displacement_mm(fz_n: f64, c: &CapacitorParams) -> (f64, bool) {
    let fz_break = c.fz_break_n();
    let dh = if fz_n <= fz_break {
        fz_n / c.k_seg1_n_per_mm
    } else {
        c.dh_break_mm + (fz_n - fz_break) / c.k_seg2_n_per_mm
    };
    if dh > c.dh_max_mm {
        (c.dh_max_mm, true)
    } else {
        (dh, false)
    }
}

/// Inverse of `displacement_mm` below saturation: normal force producing a
/// given compression, N.
pub fn force_of_displacement_n(dh_mm: f64, c: &CapacitorParams) -> f64 {
    if dh_mm <= c.dh_break_mm {
        c.k_seg1_n_per_mm * dh_mm
    } else {
        c.fz_break_n() + c.k_seg2_n_per_mm * (dh_mm - c.dh_break_mm)
    }
}

/// Capacitance of the stacked-disc electrode assembly, pF, at rest geometry.
/// Both the permittivity and the gap scale linearly with temperature; with
/// cte == it the two factors cancel exactly and C is temperature-invariant.
pub fn capacitance_pf(c: &CapacitorParams, temperature_c: f64) -> f64 {
    let dt = temperature_c - c.t_ref_c;
    let area_m2 = (3.0 * c.s1_mm2 + 2.0 * c.s2_mm2 + 2.0 * c.s3_mm2) * 1e-6;
    let rest =
        c.eps_r0 * area_m2 / (8.0 * std::f64::consts::PI * c.k_e * c.d0_mm * 1e-3) * 1e12;
    // C scales as eps_r / d; identical coefficients make the ratio exactly 1.
    let thermal = (1.0 + c.it_per_c * dt) / (1.0 + c.cte_per_c * dt);
    rest * thermal
}

/// Oscillator frequency of the capacitor channel, Hz, plus the saturation
/// flag. Frequency falls linearly with compression; the thermal factor is the
/// inverse capacitance ratio and is exactly 1 when cte == it, making the
/// output bit-identical across temperature. Tangential force never enters.
pub fn capacitor_frequency(state: &TactileState, c: &CapacitorParams) -> (f64, bool) {
    let (dh, saturated) = displacement_mm(state.fz_n, c);
    let base = c.f0_hz + c.freq_slope_hz_per_mm * dh;
    let dt = state.temperature_c - c.t_ref_c;
    // f scales as 1/C: gap expansion raises f, permittivity growth lowers it.
    let thermal = (1.0 + c.cte_per_c * dt) / (1.0 + c.it_per_c * dt);
    (base * thermal, saturated)
}

/// Three Hall field components, uT. The amplitude grows with compression and
/// drifts linearly with temperature; the radial component follows the sine of
/// the tangential displacement times the pattern wavenumber.
pub fn halbach_field(
    state: &TactileState,
    h: &HalbachParams,
    c: &CapacitorParams,
) -> Result<(f64, f64, f64)> {
    // Capacity check in force space: tau/ks can land one ulp past dr_max
    // even when tau was produced as ks * dr_max.
    let tau = state.f_tau_n();
    if tau > h.shear_stiffness_n_per_mm * h.dr_max_mm {
        return Err(TwinError::RangeExceeded {
            quantity: "tangential displacement (mm)",
            value: tau / h.shear_stiffness_n_per_mm,
            limit: h.dr_max_mm,
        });
    }
    let dr = tau / h.shear_stiffness_n_per_mm;
    let (dh, _) = displacement_mm(state.fz_n, c);
    let amplitude = h.m0_ut
        * (1.0 + h.beta_per_mm * dh)
        * (1.0 + h.gamma_t_per_c * (state.temperature_c - h.t_ref_c));
    let phase = h.k_m_per_mm * dr;
    let m_r = amplitude * phase.sin();
    let theta = state.fy_n.atan2(state.fx_n);
    Ok((
        m_r * theta.cos(),
        m_r * theta.sin(),
        amplitude * phase.cos(),
    ))
}

/// Per-sample RNG derived from (seed, t): a splitmix64-style mix keeps each
/// timestamp's draws independent while the whole stream stays reproducible.
fn sample_rng(seed: u64, t_s: f64) -> ChaCha8Rng {
    let mut z = seed ^ t_s.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Runs all three channel models and applies seeded Gaussian noise. Pure in
/// (state, params, t_s): identical inputs always produce identical samples.
/// Draw order is fixed: current, frequency, bx, by, bz.
pub fn forward_sample(state: &TactileState, p: &SensorParams, t_s: f64) -> Result<RawSample> {
    state.validate()?;
    let current = iongel_current(state, &p.iongel);
    let (freq, _saturated) = capacitor_frequency(state, &p.capacitor);
    let (bx, by, bz) = halbach_field(state, &p.halbach, &p.capacitor)?;

    let mut rng = sample_rng(p.rng_seed, t_s);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let current = (current + p.noise_current_ua * draw()).max(1e-9);
    let freq = (freq + p.noise_freq_hz * draw()).max(1e-9);
    let bx = bx + p.noise_field_ut * draw();
    let by = by + p.noise_field_ut * draw();
    let bz = bz + p.noise_field_ut * draw();

    Ok(RawSample {
        t_s,
        current_ua: current,
        freq_hz: freq,
        bx_ut: bx,
        by_ut: by,
        bz_ut: bz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn rest(t: f64) -> TactileState {
        TactileState::at_rest(t)
    }

    #[test]
    fn current_equals_reference_at_t_ref() {
        let p = IonGelParams::default();
        let s = TactileState::new(p.t_ref_c, 7.0, 1.0, 0.5);
        assert_eq!(iongel_current(&s, &p), p.i_ref_ua);
    }

    #[test]
    fn current_is_e_fold_one_inverse_growth_above_reference() {
        let p = IonGelParams::default();
        let s = rest(p.t_ref_c + 1.0 / p.growth_per_c);
        assert_relative_eq!(
            iongel_current(&s, &p),
            p.i_ref_ua * std::f64::consts::E,
            epsilon = 1e-12
        );
    }

    #[test]
    fn current_matches_closed_form() {
        let p = IonGelParams {
            i_ref_ua: 1.0,
            growth_per_c: 0.03,
            t_ref_c: 25.0,
            force_leak: 0.0,
        };
        let s = rest(50.0);
        // exp(0.03 * 25) = exp(0.75)
        assert_relative_eq!(iongel_current(&s, &p), 0.75_f64.exp(), epsilon = 1e-12);
        assert_relative_eq!(iongel_current(&s, &p), 2.117, epsilon = 1e-3);
    }

    #[test]
    fn load_factor_caps_at_one() {
        let heavy = TactileState::new(25.0, 14.0, 4.0, 0.0);
        assert_eq!(load_factor(&heavy), 1.0);
        let half = TactileState::new(25.0, 3.5, 1.0, 0.0);
        assert_relative_eq!(load_factor(&half), 0.5);
    }

    #[test]
    fn force_leak_bounds_relative_current_change() {
        let p = IonGelParams { force_leak: 0.01, ..IonGelParams::default() };
        let free = rest(60.0);
        let loaded = TactileState::new(60.0, 7.0, 0.0, 2.0);
        let ratio = iongel_current(&loaded, &p) / iongel_current(&free, &p);
        assert!(ratio - 1.0 <= 0.01 + 1e-12);
    }

    #[test]
    fn frequency_at_rest_is_f0() {
        let c = CapacitorParams::default();
        let (f, sat) = capacitor_frequency(&rest(c.t_ref_c), &c);
        assert_eq!(f, c.f0_hz);
        assert!(!sat);
    }

    #[test]
    fn frequency_drop_600_hz_at_segment_one_end() {
        let c = CapacitorParams::default();
        // 1 N at 1.5 N/mm: 2/3 mm, times -900 Hz/mm
        let (f, _) = capacitor_frequency(&TactileState::new(c.t_ref_c, 1.0, 0.0, 0.0), &c);
        assert_relative_eq!(f, c.f0_hz - 600.0, epsilon = 1e-9);
    }

    #[test]
    fn frequency_drop_1800_hz_at_two_mm_compression() {
        let c = CapacitorParams::default();
        let s = TactileState::new(c.t_ref_c, 7.0, 0.0, 0.0);
        let (dh, sat) = displacement_mm(s.fz_n, &c);
        assert_relative_eq!(dh, 2.0, epsilon = 1e-12);
        assert!(!sat);
        let (f, _) = capacitor_frequency(&s, &c);
        assert_relative_eq!(f, c.f0_hz - 1800.0, epsilon = 1e-9);
    }

    #[test]
    fn displacement_saturates_and_flags() {
        let c = CapacitorParams::default();
        let (dh, sat) = displacement_mm(c.fz_saturation_n() + 1.0, &c);
        assert_eq!(dh, c.dh_max_mm);
        assert!(sat);
    }

    #[test]
    fn displacement_inverse_round_trips() {
        let c = CapacitorParams::default();
        for fz in [0.0, 0.4, 1.0, 2.5, 7.0, 9.0] {
            let (dh, _) = displacement_mm(fz, &c);
            assert_relative_eq!(force_of_displacement_n(dh, &c), fz, epsilon = 1e-12);
        }
    }

    #[test]
    fn frequency_ignores_tangential_force_bitwise() {
        let c = CapacitorParams::default();
        let a = capacitor_frequency(&TactileState::new(47.0, 3.0, 0.0, 0.0), &c).0;
        let b = capacitor_frequency(&TactileState::new(47.0, 3.0, 1.2, -0.8), &c).0;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn frequency_temperature_invariant_when_coefficients_match() {
        let c = CapacitorParams::default();
        assert_eq!(c.cte_per_c, c.it_per_c);
        let cold = capacitor_frequency(&TactileState::new(20.0, 4.0, 0.0, 0.0), &c).0;
        let hot = capacitor_frequency(&TactileState::new(80.0, 4.0, 0.0, 0.0), &c).0;
        assert_eq!(cold.to_bits(), hot.to_bits());
    }

    #[test]
    fn frequency_shifts_when_coefficients_differ() {
        let c = CapacitorParams { cte_per_c: 5.0e-4, ..CapacitorParams::default() };
        let cold = capacitor_frequency(&TactileState::new(20.0, 4.0, 0.0, 0.0), &c).0;
        let hot = capacitor_frequency(&TactileState::new(80.0, 4.0, 0.0, 0.0), &c).0;
        assert!((cold - hot).abs() > 1e-3);
    }

    #[test]
    fn capacitance_value_and_thermal_invariance() {
        let c = CapacitorParams::default();
        // eps_r0 * (3*S1 + 2*S2 + 2*S3) / (8 pi k_e d0), independently computed
        assert_relative_eq!(capacitance_pf(&c, c.t_ref_c), 3.129346, epsilon = 1e-5);
        assert_eq!(
            capacitance_pf(&c, 20.0).to_bits(),
            capacitance_pf(&c, 80.0).to_bits()
        );
    }

    #[test]
    fn rest_field_is_axial_only() {
        let p = SensorParams::default();
        let (bx, by, bz) =
            halbach_field(&rest(p.halbach.t_ref_c), &p.halbach, &p.capacitor).unwrap();
        assert_eq!(bx, 0.0);
        assert_eq!(by, 0.0);
        assert_relative_eq!(bz, p.halbach.m0_ut, epsilon = 1e-12);
    }

    #[test]
    fn equal_components_give_45_degrees() {
        let p = SensorParams::default();
        let s = TactileState::new(25.0, 0.0, 0.4, 0.4);
        let (bx, by, _) = halbach_field(&s, &p.halbach, &p.capacitor).unwrap();
        assert_relative_eq!(bx, by, epsilon = 1e-12);
        assert_relative_eq!(by.atan2(bx).to_degrees(), 45.0, epsilon = 1e-12);
    }

    #[test]
    fn radial_field_peaks_when_wavenumber_spans_quarter_turn() {
        // k_m placed so the sine peak coincides with the range bound
        let mut p = SensorParams::default();
        p.halbach.k_m_per_mm = PI / 5.0;
        p.validate().unwrap();
        let tau_at_bound = p.halbach.tau_range_n();
        let s = TactileState::new(p.halbach.t_ref_c, 0.0, tau_at_bound, 0.0);
        let (bx, by, bz) = halbach_field(&s, &p.halbach, &p.capacitor).unwrap();
        let m_r = bx.hypot(by);
        assert_relative_eq!(m_r, p.halbach.m0_ut, epsilon = 1e-9);
        assert_relative_eq!(bz, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn tangential_overload_is_range_error() {
        let p = SensorParams::default();
        let s = TactileState::new(25.0, 0.0, 0.0, p.halbach.tau_range_n() + 0.01);
        match halbach_field(&s, &p.halbach, &p.capacitor) {
            Err(TwinError::RangeExceeded { .. }) => {}
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn amplitude_grows_with_compression_and_drifts_with_temperature() {
        let p = SensorParams::default();
        let h = &p.halbach;
        let s = TactileState::new(80.0, 7.0, 0.5, 0.0);
        let (_, _, _) = halbach_field(&s, h, &p.capacitor).unwrap();
        let (dh, _) = displacement_mm(7.0, &p.capacitor);
        let expect_amp = h.m0_ut * (1.0 + h.beta_per_mm * dh) * (1.0 + h.gamma_t_per_c * 55.0);
        let rest_dir = TactileState::new(80.0, 7.0, 0.0, 0.0);
        let (_, _, bz) = halbach_field(&rest_dir, h, &p.capacitor).unwrap();
        assert_relative_eq!(bz, expect_amp, epsilon = 1e-9);
    }

    #[test]
    fn forward_rest_sample_hits_all_rest_values() {
        let p = SensorParams::default();
        let s = rest(p.iongel.t_ref_c);
        let raw = forward_sample(&s, &p, 0.0).unwrap();
        assert_eq!(raw.current_ua, p.iongel.i_ref_ua);
        assert_eq!(raw.freq_hz, p.capacitor.f0_hz);
        assert_eq!(raw.bx_ut, 0.0);
        assert_eq!(raw.by_ut, 0.0);
        assert_relative_eq!(raw.bz_ut, p.halbach.m0_ut, epsilon = 1e-12);
    }

    #[test]
    fn forward_sample_is_deterministic() {
        let p = SensorParams {
            noise_current_ua: 0.05,
            noise_freq_hz: 2.0,
            noise_field_ut: 3.0,
            rng_seed: 1234,
            ..SensorParams::default()
        };
        let s = TactileState::new(42.0, 3.0, 0.3, -0.2);
        let a = forward_sample(&s, &p, 1.25).unwrap();
        let b = forward_sample(&s, &p, 1.25).unwrap();
        assert_eq!(a, b);
        let c = forward_sample(&s, &p, 1.30).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_noise_forward_is_exact_regardless_of_seed() {
        let s = TactileState::new(42.0, 3.0, 0.3, -0.2);
        let p1 = SensorParams { rng_seed: 1, ..SensorParams::default() };
        let p2 = SensorParams { rng_seed: 2, ..SensorParams::default() };
        assert_eq!(
            forward_sample(&s, &p1, 0.5).unwrap(),
            forward_sample(&s, &p2, 0.5).unwrap()
        );
    }
}
