use crate::calibration::CalibrationSet;
use crate::error::{Result, TwinError};
use crate::fit::polyval;
use crate::state::{DecodeFlags, DecodedState, RawSample, T_RANGE_MAX_C, T_RANGE_MIN_C};

/// Gain floor below which Hall compensation is refused as corrupt.
const MIN_COMPENSATION_GAIN: f64 = 1e-9;

/// Recovers temperature from the ion-gel current, degC, plus an
/// out-of-calibration-range flag. The flag is set when the current falls
/// outside the fitted span (extrapolation) or the result leaves the rated
/// operating range.
pub fn decode_temperature(current_ua: f64, cal: &CalibrationSet) -> Result<(f64, bool)> {
    if !(current_ua > 0.0) {
        return Err(TwinError::InvalidInput(format!(
            "current must be positive, got {current_ua} uA"
        )));
    }
    let t = polyval(&cal.temp_poly, current_ua);
    let out_of_range = !(cal.i_min_ua..=cal.i_max_ua).contains(&current_ua)
        || !(T_RANGE_MIN_C..=T_RANGE_MAX_C).contains(&t);
    Ok((t, out_of_range))
}

/// Result of the normal-force stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalDecode {
    pub fz_n: f64,
    pub dh_mm: f64,
    pub saturated: bool,
    pub out_of_range: bool,
}

/// Recovers normal force and compression from the oscillator frequency.
/// Works on the frequency drop (f0 - f): negative drops (sensor pulled or
/// drifted above rest) clamp to zero force and flag out-of-range, drops past
/// the calibrated span clamp to the last fitted point and flag saturation.
/// Temperature never enters: the channel is self-compensating by design.
pub fn decode_normal(freq_hz: f64, cal: &CalibrationSet) -> Result<NormalDecode> {
    if !(freq_hz > 0.0) {
        return Err(TwinError::InvalidInput(format!(
            "frequency must be positive, got {freq_hz} Hz"
        )));
    }
    let drop = cal.f0_hz - freq_hz;
    if drop < 0.0 {
        return Ok(NormalDecode {
            fz_n: 0.0,
            dh_mm: 0.0,
            saturated: false,
            out_of_range: true,
        });
    }
    let saturated = drop > cal.fz_map.x_max;
    let clamped = drop.min(cal.fz_map.x_max);
    Ok(NormalDecode {
        fz_n: cal.fz_map.eval(clamped).max(0.0),
        dh_mm: clamped / -cal.dh_slope_hz_per_mm,
        saturated,
        out_of_range: false,
    })
}

/// Removes the fitted thermal drift from all three field components: each is
/// divided by the gain (1 + gamma_T * (T - t_ref)).
pub fn compensate_hall(
    bx_ut: f64,
    by_ut: f64,
    bz_ut: f64,
    temperature_c: f64,
    cal: &CalibrationSet,
) -> Result<(f64, f64, f64)> {
    let gain = 1.0 + cal.gamma_t_per_c * (temperature_c - cal.t_ref_c);
    if gain <= MIN_COMPENSATION_GAIN {
        return Err(TwinError::DegenerateGain {
            gain,
            temperature_c,
        });
    }
    Ok((bx_ut / gain, by_ut / gain, bz_ut / gain))
}

/// Result of the tangential stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentialDecode {
    pub f_tau_n: f64,
    /// Absent when the contact is tangentially at rest.
    pub theta_deg: Option<f64>,
    pub fx_n: f64,
    pub fy_n: f64,
    pub at_rest: bool,
}

/// Recovers the tangential force vector from the compensated in-plane field.
/// The decoded normal force selects the amplitude normalization (deeper
/// compression strengthens the field), then the fitted map yields the
/// magnitude and atan2 the direction.
pub fn decode_tangential(
    bx_ut: f64,
    by_ut: f64,
    fz_n: f64,
    cal: &CalibrationSet,
) -> Result<TangentialDecode> {
    let m_r = bx_ut.hypot(by_ut);
    if m_r < cal.rest_threshold_ut {
        return Ok(TangentialDecode {
            f_tau_n: 0.0,
            theta_deg: None,
            fx_n: 0.0,
            fy_n: 0.0,
            at_rest: true,
        });
    }
    let fz_top = cal.fz_map.eval(cal.fz_map.x_max);
    let drop = cal.fz_map.invert(fz_n.clamp(0.0, fz_top));
    let dh = drop.max(0.0) / -cal.dh_slope_hz_per_mm;
    let m_norm = cal.normalize_field(m_r, dh);
    if m_norm > cal.tau_map.x_max * (1.0 + 1e-9) {
        return Err(TwinError::RangeExceeded {
            quantity: "normalized radial field (uT)",
            value: m_norm,
            limit: cal.tau_map.x_max,
        });
    }
    let f_tau = cal.tau_map.eval(m_norm.min(cal.tau_map.x_max)).max(0.0);
    let theta = by_ut.atan2(bx_ut);
    Ok(TangentialDecode {
        f_tau_n: f_tau,
        theta_deg: Some(theta.to_degrees()),
        fx_n: f_tau * theta.cos(),
        fy_n: f_tau * theta.sin(),
        at_rest: false,
    })
}

/// Full staged decode: temperature first, then normal force, then the
/// drift-compensated tangential vector. Later stages consume earlier outputs
/// (the field compensation needs the decoded temperature, the amplitude
/// normalization the decoded normal force), so a failed stage aborts the
/// rest. Flags from all stages are unioned.
pub fn decode(sample: &RawSample, cal: &CalibrationSet) -> Result<DecodedState> {
    sample.validate()?;
    let (temperature_c, temp_out_of_range) = decode_temperature(sample.current_ua, cal)?;
    let normal = decode_normal(sample.freq_hz, cal)?;
    let (bx, by, _bz) =
        compensate_hall(sample.bx_ut, sample.by_ut, sample.bz_ut, temperature_c, cal)?;
    let tangential = decode_tangential(bx, by, normal.fz_n, cal)?;
    Ok(DecodedState {
        temperature_c,
        fz_n: normal.fz_n,
        f_tau_n: tangential.f_tau_n,
        theta_deg: tangential.theta_deg,
        fx_n: tangential.fx_n,
        fy_n: tangential.fy_n,
        flags: DecodeFlags {
            tangential_at_rest: tangential.at_rest,
            normal_saturated: normal.saturated,
            out_of_calibration_range: temp_out_of_range || normal.out_of_range,
        },
    })
}
