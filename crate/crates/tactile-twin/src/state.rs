use crate::error::{Result, TwinError};

/// Calibrated operating range of the temperature channel, degrees Celsius.
pub const T_RANGE_MIN_C: f64 = 20.0;
pub const T_RANGE_MAX_C: f64 = 80.0;

/// Ground truth applied to the sensor: temperature plus a 3D force vector
/// split into a normal component and two in-plane tangential components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TactileState {
    pub temperature_c: f64,
    pub fz_n: f64,
    pub fx_n: f64,
    pub fy_n: f64,
}

impl TactileState {
    pub fn new(temperature_c: f64, fz_n: f64, fx_n: f64, fy_n: f64) -> Self {
        Self {
            temperature_c,
            fz_n,
            fx_n,
            fy_n,
        }
    }

    /// Unloaded state at the given temperature.
    pub fn at_rest(temperature_c: f64) -> Self {
        Self::new(temperature_c, 0.0, 0.0, 0.0)
    }

    /// Tangential force magnitude sqrt(fx^2 + fy^2).
    pub fn f_tau_n(&self) -> f64 {
        self.fx_n.hypot(self.fy_n)
    }

    /// Direction of the tangential force, degrees in (-180, 180].
    pub fn theta_deg(&self) -> f64 {
        self.fy_n.atan2(self.fx_n).to_degrees()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_c.is_finite()
            && self.fz_n.is_finite()
            && self.fx_n.is_finite()
            && self.fy_n.is_finite())
        {
            return Err(TwinError::InvalidInput("non-finite tactile state".into()));
        }
        if self.fz_n < 0.0 {
            return Err(TwinError::InvalidInput(format!(
                "normal force must be non-negative, got {}",
                self.fz_n
            )));
        }
        Ok(())
    }

    /// True when the temperature is inside the calibrated operating range.
    pub fn in_calibrated_range(&self) -> bool {
        (T_RANGE_MIN_C..=T_RANGE_MAX_C).contains(&self.temperature_c)
    }
}

/// One raw acquisition: what the sensor electronics would emit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    pub t_s: f64,
    pub current_ua: f64,
    pub freq_hz: f64,
    pub bx_ut: f64,
    pub by_ut: f64,
    pub bz_ut: f64,
}

impl RawSample {
    pub fn validate(&self) -> Result<()> {
        let finite = self.t_s.is_finite()
            && self.current_ua.is_finite()
            && self.freq_hz.is_finite()
            && self.bx_ut.is_finite()
            && self.by_ut.is_finite()
            && self.bz_ut.is_finite();
        if !finite {
            return Err(TwinError::InvalidInput("non-finite raw sample".into()));
        }
        if self.current_ua <= 0.0 || self.freq_hz <= 0.0 {
            return Err(TwinError::InvalidInput(
                "current and frequency must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Conditions noticed while decoding; none of them abort the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecodeFlags {
    /// Field magnitude below the rest threshold; tangential force reported as zero.
    pub tangential_at_rest: bool,
    /// Normal channel clamped at the top of its calibrated range.
    pub normal_saturated: bool,
    /// A reading fell outside the calibrated span and was extrapolated or clamped.
    pub out_of_calibration_range: bool,
}

impl DecodeFlags {
    pub fn union(self, other: DecodeFlags) -> DecodeFlags {
        DecodeFlags {
            tangential_at_rest: self.tangential_at_rest || other.tangential_at_rest,
            normal_saturated: self.normal_saturated || other.normal_saturated,
            out_of_calibration_range: self.out_of_calibration_range
                || other.out_of_calibration_range,
        }
    }
}

/// Output of the decoupling pipeline.
///
/// Invariants: fx_n = f_tau_n*cos(theta), fy_n = f_tau_n*sin(theta); when
/// `flags.tangential_at_rest` is set, f_tau_n == 0 and theta_deg is None.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedState {
    pub temperature_c: f64,
    pub fz_n: f64,
    pub f_tau_n: f64,
    /// Direction in degrees, (-180, 180]; absent when the tangential channel is at rest.
    pub theta_deg: Option<f64>,
    pub fx_n: f64,
    pub fy_n: f64,
    pub flags: DecodeFlags,
}
