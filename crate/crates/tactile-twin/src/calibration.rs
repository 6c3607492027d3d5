use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TwinError};
use crate::fit::{
    fit_hall_drift, fit_line, fit_piecewise_linear, fit_temperature_poly, polyval,
    PiecewiseLinear, DRIFT_MIN_POINTS, PIECEWISE_MIN_POINTS, TEMP_FIT_MIN_POINTS,
};
use crate::params::SensorParams;
use crate::physics::{
    capacitor_frequency, displacement_mm, force_of_displacement_n, forward_sample,
    iongel_current,
};
use crate::state::{TactileState, T_RANGE_MAX_C, T_RANGE_MIN_C};

/// Decode tolerance for temperature, degC.
pub const TOL_TEMP_C: f64 = 0.5;
/// Decode tolerance for normal force at or below `FZ_LOW_RANGE_N`, N.
pub const TOL_FZ_LOW_N: f64 = 0.01;
/// Decode tolerance for normal force above `FZ_LOW_RANGE_N`, N.
pub const TOL_FZ_HIGH_N: f64 = 0.03;
/// Normal-force boundary between the low and high tolerance bands, N.
pub const FZ_LOW_RANGE_N: f64 = 1.0;
/// Decode tolerance for tangential force magnitude, N.
pub const TOL_TAU_N: f64 = 0.01;
/// Decode tolerance for tangential direction, deg.
pub const TOL_DIRECTION_DEG: f64 = 2.0;

/// Sweep layout for synthetic calibration: where the forward models are
/// sampled for each channel. The grid must cover the full operating
/// temperature range and at least two compression levels so the tangential
/// amplitude's displacement dependence is observable.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationGridSpec {
    pub t_min_c: f64,
    pub t_max_c: f64,
    pub temp_points: usize,
    pub fz_points: usize,
    pub fz_max_n: f64,
    pub tau_points: usize,
    pub dh_levels_mm: Vec<f64>,
    pub drift_points: usize,
}

impl CalibrationGridSpec {
    /// Default grid for a parameter set: full temperature range, normal
    /// sweep up to the force that compresses the stack by 2 mm, tangential
    /// sweeps at five compression levels.
    pub fn for_params(params: &SensorParams) -> Self {
        CalibrationGridSpec {
            t_min_c: T_RANGE_MIN_C,
            t_max_c: T_RANGE_MAX_C,
            temp_points: 25,
            fz_points: 71,
            fz_max_n: force_of_displacement_n(2.0, &params.capacitor),
            tau_points: 41,
            dh_levels_mm: vec![0.0, params.capacitor.dh_break_mm, 1.0, 1.5, 2.0],
            drift_points: 13,
        }
    }

    pub fn validate(&self, params: &SensorParams) -> Result<()> {
        if !(self.t_min_c <= T_RANGE_MIN_C && self.t_max_c >= T_RANGE_MAX_C) {
            return Err(TwinError::InvalidInput(format!(
                "temperature grid [{}, {}] must cover [{}, {}] degC",
                self.t_min_c, self.t_max_c, T_RANGE_MIN_C, T_RANGE_MAX_C
            )));
        }
        if self.temp_points < TEMP_FIT_MIN_POINTS {
            return Err(TwinError::InsufficientData {
                context: "temperature sweep points",
                required: TEMP_FIT_MIN_POINTS,
                actual: self.temp_points,
            });
        }
        if self.fz_points < PIECEWISE_MIN_POINTS {
            return Err(TwinError::InsufficientData {
                context: "normal sweep points",
                required: PIECEWISE_MIN_POINTS,
                actual: self.fz_points,
            });
        }
        if self.tau_points < PIECEWISE_MIN_POINTS {
            return Err(TwinError::InsufficientData {
                context: "tangential sweep points",
                required: PIECEWISE_MIN_POINTS,
                actual: self.tau_points,
            });
        }
        if self.drift_points < DRIFT_MIN_POINTS {
            return Err(TwinError::InsufficientData {
                context: "drift sweep points",
                required: DRIFT_MIN_POINTS,
                actual: self.drift_points,
            });
        }
        if !(self.fz_max_n > 0.0 && self.fz_max_n <= params.capacitor.fz_saturation_n()) {
            return Err(TwinError::InvalidInput(format!(
                "normal sweep limit {} N outside (0, {}]",
                self.fz_max_n,
                params.capacitor.fz_saturation_n()
            )));
        }
        if self.dh_levels_mm.len() < 2 {
            return Err(TwinError::InsufficientData {
                context: "tangential sweep compression levels",
                required: 2,
                actual: self.dh_levels_mm.len(),
            });
        }
        for w in self.dh_levels_mm.windows(2) {
            if w[1] <= w[0] {
                return Err(TwinError::InvalidInput(
                    "compression levels must be strictly increasing".into(),
                ));
            }
        }
        let last = *self.dh_levels_mm.last().unwrap();
        if self.dh_levels_mm[0] < 0.0 || last > params.capacitor.dh_max_mm {
            return Err(TwinError::InvalidInput(format!(
                "compression levels must lie in [0, {}] mm",
                params.capacitor.dh_max_mm
            )));
        }
        Ok(())
    }
}

/// Fitted inverse maps of all three channels plus their validity ranges.
/// Immutable after construction; decoding never mutates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSet {
    /// Free-text source tag.
    pub provenance: String,
    /// Reference temperature of the force channels, degC.
    pub t_ref_c: f64,
    /// T(I) cubic coefficients, degC from uA, constant term first.
    pub temp_poly: [f64; 4],
    /// Current range covered by the temperature fit, uA.
    pub i_min_ua: f64,
    pub i_max_ua: f64,
    /// Fitted rest frequency, Hz.
    pub f0_hz: f64,
    /// Fitted frequency-per-compression slope, Hz/mm (negative).
    pub dh_slope_hz_per_mm: f64,
    /// Normal force vs frequency drop (f0 - f), N from Hz.
    pub fz_map: PiecewiseLinear,
    /// Tangential force vs normalized radial field, N from uT.
    pub tau_map: PiecewiseLinear,
    /// Radial field amplitude per compression level: (dh_mm, amplitude_uT),
    /// all amplitudes taken at the common full tangential deflection.
    pub m0_grid: Vec<(f64, f64)>,
    /// Fitted thermal drift of the field amplitude, 1/degC.
    pub gamma_t_per_c: f64,
    /// Radial field below which the contact is treated as tangentially at
    /// rest, uT.
    pub rest_threshold_ut: f64,
    /// Validity ranges.
    pub t_min_c: f64,
    pub t_max_c: f64,
    pub fz_max_n: f64,
    pub tau_max_n: f64,
}

impl CalibrationSet {
    /// Field amplitude at a given compression, uT: piecewise-linear
    /// interpolation over the calibrated levels, clamped at the ends. Exact
    /// everywhere the underlying amplitude law is linear in compression.
    pub fn amplitude_at(&self, dh_mm: f64) -> f64 {
        let grid = &self.m0_grid;
        if dh_mm <= grid[0].0 {
            return grid[0].1;
        }
        for w in grid.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if dh_mm <= x1 {
                return y0 + (y1 - y0) * (dh_mm - x0) / (x1 - x0);
            }
        }
        grid.last().unwrap().1
    }

    /// Rescales a measured radial field to the reference compression level
    /// (the last calibrated one, whose sweep the tangential map was fitted
    /// on), so one map serves every compression.
    pub fn normalize_field(&self, m_r_ut: f64, dh_mm: f64) -> f64 {
        m_r_ut * self.m0_grid.last().unwrap().1 / self.amplitude_at(dh_mm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fz_map.slope_lo > 0.0 && self.fz_map.slope_hi > 0.0) {
            return Err(TwinError::InvalidCalibration(
                "normal-force map slopes must be positive on the drop axis".into(),
            ));
        }
        if self.fz_map.break_y <= 0.0 {
            return Err(TwinError::InvalidCalibration(
                "normal-force breakpoint force must be positive".into(),
            ));
        }
        self.fz_map.validate()?;
        self.tau_map.validate()?;
        if !self.tau_map.is_increasing() {
            return Err(TwinError::InvalidCalibration(
                "tangential map slopes must be positive".into(),
            ));
        }
        if self.m0_grid.is_empty() {
            return Err(TwinError::InvalidCalibration(
                "amplitude grid must not be empty".into(),
            ));
        }
        for w in self.m0_grid.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(TwinError::InvalidCalibration(
                    "amplitude grid must be strictly increasing in compression".into(),
                ));
            }
        }
        if self.m0_grid.iter().any(|&(_, a)| a <= 0.0) {
            return Err(TwinError::InvalidCalibration(
                "amplitude grid values must be positive".into(),
            ));
        }
        if !(self.i_min_ua < self.i_max_ua) {
            return Err(TwinError::InvalidCalibration(
                "temperature fit needs a positive current span".into(),
            ));
        }
        // numerical monotonicity audit of the temperature polynomial
        let mut prev = polyval(&self.temp_poly, self.i_min_ua);
        for k in 1..1000 {
            let i = self.i_min_ua + (self.i_max_ua - self.i_min_ua) * k as f64 / 999.0;
            let t = polyval(&self.temp_poly, i);
            if t <= prev {
                return Err(TwinError::InvalidCalibration(format!(
                    "temperature polynomial not increasing near {i:.4} uA"
                )));
            }
            prev = t;
        }
        if self.rest_threshold_ut <= 0.0 {
            return Err(TwinError::InvalidCalibration(
                "rest threshold must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Serializes to the bundle format: pretty JSON, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("calibration serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cal: CalibrationSet = serde_json::from_str(text)?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Published-datasheet profile: the vendor-quoted map constants verbatim
    /// (frequency drop slopes 1/600 and 1/200 N/Hz breaking at 1 N, field
    /// slopes 1/10531 and 1/377 N/uT breaking at 1 N, -900 Hz/mm), with the
    /// temperature polynomial fitted from the default current channel.
    pub fn datasheet() -> Self {
        let gel = crate::params::IonGelParams::default();
        let temp_points: Vec<(f64, f64)> = (0..13)
            .map(|k| {
                let t = T_RANGE_MIN_C + (T_RANGE_MAX_C - T_RANGE_MIN_C) * k as f64 / 12.0;
                let state = TactileState::new(t, 0.0, 0.0, 0.0);
                (iongel_current(&state, &gel), t)
            })
            .collect();
        let temp_poly =
            fit_temperature_poly(&temp_points).expect("datasheet temperature fit holds");
        let cal = CalibrationSet {
            provenance: "published-datasheet".into(),
            t_ref_c: 25.0,
            temp_poly,
            i_min_ua: temp_points[0].0,
            i_max_ua: temp_points[12].0,
            f0_hz: 5000.0,
            dh_slope_hz_per_mm: -900.0,
            fz_map: PiecewiseLinear {
                break_x: 600.0,
                break_y: 1.0,
                slope_lo: 1.0 / 600.0,
                slope_hi: 1.0 / 200.0,
                x_min: 0.0,
                x_max: 1800.0,
            },
            tau_map: PiecewiseLinear {
                break_x: 10531.0,
                break_y: 1.0,
                slope_lo: 1.0 / 10531.0,
                slope_hi: 1.0 / 377.0,
                x_min: 0.0,
                x_max: 10908.0,
            },
            m0_grid: vec![(2.0, 10908.0)],
            gamma_t_per_c: -0.001,
            rest_threshold_ut: 1.0,
            t_min_c: T_RANGE_MIN_C,
            t_max_c: T_RANGE_MAX_C,
            fz_max_n: 7.0,
            tau_max_n: 2.0,
        };
        cal.validate().expect("datasheet profile is valid");
        cal
    }
}

/// Synthetic sample times per sweep; only uniqueness matters (they seed the
/// per-sample noise streams).
const SWEEP_T_TEMP: f64 = 0.0;
const SWEEP_T_FZ: f64 = 1.0e6;
const SWEEP_T_TAU: f64 = 2.0e6;
const SWEEP_T_TAU_LEVEL_STRIDE: f64 = 1.0e4;
const SWEEP_T_DRIFT: f64 = 3.0e6;

fn sweep_temp(params: &SensorParams, grid: &CalibrationGridSpec) -> Result<Vec<(f64, f64)>> {
    (0..grid.temp_points)
        .map(|k| {
            let t = grid.t_min_c
                + (grid.t_max_c - grid.t_min_c) * k as f64 / (grid.temp_points - 1) as f64;
            let state = TactileState::new(t, 0.0, 0.0, 0.0);
            let raw = forward_sample(&state, params, SWEEP_T_TEMP + k as f64)?;
            Ok((raw.current_ua, t))
        })
        .collect()
}

/// Normal sweep with an instrumented rig: the true compression is recorded
/// alongside the oscillator frequency. Returns (dh_mm, freq_Hz, fz_N) rows.
fn sweep_normal(
    params: &SensorParams,
    grid: &CalibrationGridSpec,
) -> Result<Vec<(f64, f64, f64)>> {
    (0..grid.fz_points)
        .map(|k| {
            let fz = grid.fz_max_n * k as f64 / (grid.fz_points - 1) as f64;
            let state = TactileState::new(params.capacitor.t_ref_c, fz, 0.0, 0.0);
            let raw = forward_sample(&state, params, SWEEP_T_FZ + k as f64)?;
            let (dh, _) = displacement_mm(fz, &params.capacitor);
            Ok((dh, raw.freq_hz, fz))
        })
        .collect()
}

/// Tangential sweep at one compression level: ramps the shear deflection to
/// its calibrated limit. Returns (radial_field_uT, tau_N) rows.
fn sweep_tangential(
    params: &SensorParams,
    grid: &CalibrationGridSpec,
    level_index: usize,
) -> Result<Vec<(f64, f64)>> {
    let dh = grid.dh_levels_mm[level_index];
    let fz = force_of_displacement_n(dh, &params.capacitor);
    (0..grid.tau_points)
        .map(|k| {
            let dr =
                params.halbach.dr_max_mm * k as f64 / (grid.tau_points - 1) as f64;
            let tau = params.halbach.shear_stiffness_n_per_mm * dr;
            let state = TactileState::new(params.capacitor.t_ref_c, fz, tau, 0.0);
            let t_s =
                SWEEP_T_TAU + level_index as f64 * SWEEP_T_TAU_LEVEL_STRIDE + k as f64;
            let raw = forward_sample(&state, params, t_s)?;
            Ok((raw.bx_ut.hypot(raw.by_ut), tau))
        })
        .collect()
}

/// Thermal drift sweep: field ratio against the reference-temperature field
/// at half tangential deflection, uncompressed. Returns (T_degC, ratio) rows.
fn sweep_drift(params: &SensorParams, grid: &CalibrationGridSpec) -> Result<Vec<(f64, f64)>> {
    let tau = params.halbach.shear_stiffness_n_per_mm * params.halbach.dr_max_mm / 2.0;
    let at = |t_c: f64, t_s: f64| -> Result<f64> {
        let state = TactileState::new(t_c, 0.0, tau, 0.0);
        let raw = forward_sample(&state, params, t_s)?;
        Ok(raw.bx_ut.hypot(raw.by_ut))
    };
    let m_ref = at(params.halbach.t_ref_c, SWEEP_T_DRIFT - 1.0)?;
    (0..grid.drift_points)
        .map(|k| {
            let t = grid.t_min_c
                + (grid.t_max_c - grid.t_min_c) * k as f64 / (grid.drift_points - 1) as f64;
            Ok((t, at(t, SWEEP_T_DRIFT + k as f64)? / m_ref))
        })
        .collect()
}

/// Runs every calibration sweep through the forward models and fits the
/// complete inverse-map bundle.
pub fn generate_calibration(
    params: &SensorParams,
    grid: &CalibrationGridSpec,
) -> Result<CalibrationSet> {
    params.validate()?;
    grid.validate(params)?;

    let temp_points = sweep_temp(params, grid)?;
    let temp_poly = fit_temperature_poly(&temp_points)?;
    let (i_min, i_max) = temp_points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(i, _)| {
            (lo.min(i), hi.max(i))
        });

    let normal = sweep_normal(params, grid)?;
    let freq_line: Vec<(f64, f64)> = normal.iter().map(|&(dh, f, _)| (dh, f)).collect();
    let (dh_slope, f0) = fit_line(&freq_line)?;
    let drop_points: Vec<(f64, f64)> = normal.iter().map(|&(_, f, fz)| (f0 - f, fz)).collect();
    let fz_map = fit_piecewise_linear(&drop_points)?.map;

    let mut m0_grid = Vec::with_capacity(grid.dh_levels_mm.len());
    let mut reference_sweep = Vec::new();
    for level in 0..grid.dh_levels_mm.len() {
        let rows = sweep_tangential(params, grid, level)?;
        m0_grid.push((grid.dh_levels_mm[level], rows.last().unwrap().0));
        if level == grid.dh_levels_mm.len() - 1 {
            reference_sweep = rows;
        }
    }
    let tau_map = fit_piecewise_linear(&reference_sweep)?.map;

    let gamma_t = fit_hall_drift(&sweep_drift(params, grid)?, params.halbach.t_ref_c)?;

    let cal = CalibrationSet {
        provenance: "synthetic-forward-sweep".into(),
        t_ref_c: params.capacitor.t_ref_c,
        temp_poly,
        i_min_ua: i_min,
        i_max_ua: i_max,
        f0_hz: f0,
        dh_slope_hz_per_mm: dh_slope,
        fz_map,
        tau_map,
        m0_grid,
        gamma_t_per_c: gamma_t,
        rest_threshold_ut: (3.0 * params.noise_field_ut).max(1.0),
        t_min_c: grid.t_min_c,
        t_max_c: grid.t_max_c,
        fz_max_n: grid.fz_max_n,
        tau_max_n: params.halbach.tau_range_n(),
    };
    cal.validate()?;
    Ok(cal)
}

/// Residual audit of one decoded channel on a held-out grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: String,
    pub samples: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Per-channel residual audit of a calibration bundle against a parameter
/// set; failures are entries, not errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub channels: Vec<ChannelReport>,
    /// False when any channel had no held-out samples to audit.
    pub complete: bool,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.complete && self.channels.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.channels {
            writeln!(
                f,
                "{:<18} {:>4} samples  max {:>10.4e}  mean {:>10.4e}  tol {:>8.2e}  {}",
                c.channel,
                c.samples,
                c.max_residual,
                c.mean_residual,
                c.tolerance,
                if c.passed { "pass" } else { "FAIL" }
            )?;
        }
        if !self.complete {
            writeln!(f, "report incomplete: one or more channels had no samples")?;
        }
        Ok(())
    }
}

fn channel_report(channel: &str, residuals: &[f64], tolerance: f64) -> Option<ChannelReport> {
    if residuals.is_empty() {
        return None;
    }
    let max = residuals.iter().fold(0.0_f64, |a, &r| a.max(r));
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    Some(ChannelReport {
        channel: channel.into(),
        samples: residuals.len(),
        max_residual: max,
        mean_residual: mean,
        tolerance,
        passed: max <= tolerance,
    })
}

/// Midpoints of an even grid over [0, hi] (or [lo, hi]): the held-out points
/// sit half a step off every fit point.
fn midpoints(lo: f64, hi: f64, fit_points: usize) -> Vec<f64> {
    if fit_points < 2 {
        return Vec::new();
    }
    let step = (hi - lo) / (fit_points - 1) as f64;
    (0..fit_points - 1)
        .map(|k| lo + step * (k as f64 + 0.5))
        .collect()
}

/// Audits a calibration bundle against a parameter set on grids shifted half
/// a step from the fit grids, so residuals are measured between, not on, the
/// fitted samples. Signals are synthesized noise-free.
pub fn validate_calibration(
    cal: &CalibrationSet,
    params: &SensorParams,
    grid: &CalibrationGridSpec,
) -> ValidationReport {
    use crate::decode;

    let mut temp_res = Vec::new();
    for t in midpoints(grid.t_min_c, grid.t_max_c, grid.temp_points) {
        let state = TactileState::new(t, 0.0, 0.0, 0.0);
        let i = iongel_current(&state, &params.iongel);
        if let Ok((t_hat, _)) = decode::decode_temperature(i, cal) {
            temp_res.push((t_hat - t).abs());
        }
    }

    let mut fz_low_res = Vec::new();
    let mut fz_high_res = Vec::new();
    for fz in midpoints(0.0, grid.fz_max_n, grid.fz_points) {
        for t in [params.capacitor.t_ref_c, grid.t_max_c] {
            let state = TactileState::new(t, fz, 0.0, 0.0);
            let (f, _) = capacitor_frequency(&state, &params.capacitor);
            let Ok(dec) = decode::decode_normal(f, cal) else {
                continue;
            };
            let residual = (dec.fz_n - fz).abs();
            if fz <= FZ_LOW_RANGE_N {
                fz_low_res.push(residual);
            } else {
                fz_high_res.push(residual);
            }
        }
    }

    let mut tau_res = Vec::new();
    let mut dir_res = Vec::new();
    let fz_levels = [0.0, grid.fz_max_n / 2.0];
    let theta_deg: [f64; 4] = [30.0, 120.0, 210.0, 300.0];
    for tau in midpoints(0.0, cal.tau_max_n, grid.tau_points) {
        if tau < 0.02 {
            continue; // below any meaningful direction resolution
        }
        for &fz in &fz_levels {
            for &th in &theta_deg {
                for t in [params.capacitor.t_ref_c, grid.t_max_c] {
                    let rad = th.to_radians();
                    let state = TactileState::new(t, fz, tau * rad.cos(), tau * rad.sin());
                    let Ok(raw) = crate::physics::forward_sample(&state, params, 0.0) else {
                        continue;
                    };
                    let Ok(dec) = decode::decode(&raw, cal) else {
                        continue;
                    };
                    tau_res.push((dec.f_tau_n - tau).abs());
                    if let Some(th_hat) = dec.theta_deg {
                        let mut d = (th_hat - th).rem_euclid(360.0);
                        if d > 180.0 {
                            d = 360.0 - d;
                        }
                        dir_res.push(d);
                    }
                }
            }
        }
    }

    let channels: Vec<ChannelReport> = [
        channel_report("temperature", &temp_res, TOL_TEMP_C),
        channel_report("normal_force_low", &fz_low_res, TOL_FZ_LOW_N),
        channel_report("normal_force_high", &fz_high_res, TOL_FZ_HIGH_N),
        channel_report("tangential_force", &tau_res, TOL_TAU_N),
        channel_report("direction", &dir_res, TOL_DIRECTION_DEG),
    ]
    .into_iter()
    .flatten()
    .collect();
    let complete = channels.len() == 5;
    ValidationReport { channels, complete }
}

/// Calibration sweeps in the flat CSV interchange layout: one (x, y) series
/// per channel. The tangential series carries a single compression level, so
/// bundles fitted from it use an identity amplitude normalization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepData {
    /// (current_uA, temperature_degC)
    pub temp: Vec<(f64, f64)>,
    /// (dh_mm, freq_Hz)
    pub normal_freq: Vec<(f64, f64)>,
    /// (freq_drop_Hz, fz_N)
    pub normal_force: Vec<(f64, f64)>,
    /// (radial_field_uT, tau_N)
    pub tangential: Vec<(f64, f64)>,
    /// (temperature_degC, field_ratio)
    pub drift: Vec<(f64, f64)>,
}

const SWEEP_HEADER: &str = "channel,x,y";
const SWEEP_CHANNELS: [&str; 5] = ["temp", "normal_freq", "normal_force", "tangential", "drift"];

impl SweepData {
    fn series(&self, channel: &str) -> &Vec<(f64, f64)> {
        match channel {
            "temp" => &self.temp,
            "normal_freq" => &self.normal_freq,
            "normal_force" => &self.normal_force,
            "tangential" => &self.tangential,
            "drift" => &self.drift,
            _ => unreachable!("known channel"),
        }
    }

    fn series_mut(&mut self, channel: &str) -> Option<&mut Vec<(f64, f64)>> {
        match channel {
            "temp" => Some(&mut self.temp),
            "normal_freq" => Some(&mut self.normal_freq),
            "normal_force" => Some(&mut self.normal_force),
            "tangential" => Some(&mut self.tangential),
            "drift" => Some(&mut self.drift),
            _ => None,
        }
    }
}

/// Serializes sweeps to CSV. Values use the shortest representation that
/// parses back to the identical bits, so write -> read -> write is stable.
pub fn write_sweep_csv(sweeps: &SweepData) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for channel in SWEEP_CHANNELS {
        for &(x, y) in sweeps.series(channel) {
            out.push_str(&format!("{channel},{x},{y}\n"));
        }
    }
    out
}

pub fn read_sweep_csv(text: &str) -> Result<SweepData> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == SWEEP_HEADER => {}
        _ => {
            return Err(TwinError::SchemaMismatch {
                missing: vec![SWEEP_HEADER.into()],
            })
        }
    }
    let mut sweeps = SweepData::default();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let mut fields = line.split(',');
        let (channel, x, y) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(c), Some(x), Some(y), None) => (c, x, y),
            _ => {
                return Err(TwinError::Parse {
                    line: line_no,
                    message: "expected exactly 3 fields: channel,x,y".into(),
                })
            }
        };
        let series = sweeps
            .series_mut(channel)
            .ok_or_else(|| TwinError::Parse {
                line: line_no,
                message: format!("unknown channel {channel:?}"),
            })?;
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| TwinError::Parse {
                line: line_no,
                message: format!("bad number {s:?}"),
            })?;
            if !v.is_finite() {
                return Err(TwinError::Parse {
                    line: line_no,
                    message: "non-finite value".into(),
                });
            }
            Ok(v)
        };
        series.push((parse(x)?, parse(y)?));
    }
    Ok(sweeps)
}

/// Synthesizes the flat CSV sweeps for a parameter set: the same series the
/// bundle fitter consumes, with the tangential sweep at the deepest
/// compression level.
pub fn export_sweeps(params: &SensorParams, grid: &CalibrationGridSpec) -> Result<SweepData> {
    params.validate()?;
    grid.validate(params)?;
    let temp = sweep_temp(params, grid)?;
    let normal = sweep_normal(params, grid)?;
    let normal_freq: Vec<(f64, f64)> = normal.iter().map(|&(dh, f, _)| (dh, f)).collect();
    let (_, f0) = fit_line(&normal_freq)?;
    let normal_force: Vec<(f64, f64)> = normal.iter().map(|&(_, f, fz)| (f0 - f, fz)).collect();
    let tangential = sweep_tangential(params, grid, grid.dh_levels_mm.len() - 1)?;
    let drift = sweep_drift(params, grid)?;
    Ok(SweepData {
        temp,
        normal_freq,
        normal_force,
        tangential,
        drift,
    })
}

/// Fits a calibration bundle from flat CSV sweeps. With a single tangential
/// series there is no displacement dependence to calibrate, so the amplitude
/// grid gets one entry and normalization is the identity.
pub fn fit_from_sweeps(sweeps: &SweepData, t_ref_c: f64) -> Result<CalibrationSet> {
    let temp_poly = fit_temperature_poly(&sweeps.temp)?;
    let (i_min, i_max) = sweeps
        .temp
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(i, _)| {
            (lo.min(i), hi.max(i))
        });
    let (t_min, t_max) = sweeps
        .temp
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, t)| {
            (lo.min(t), hi.max(t))
        });
    let (dh_slope, f0) = fit_line(&sweeps.normal_freq)?;
    let fz_map = fit_piecewise_linear(&sweeps.normal_force)?.map;
    let tau_map = fit_piecewise_linear(&sweeps.tangential)?.map;
    let gamma_t = fit_hall_drift(&sweeps.drift, t_ref_c)?;
    let cal = CalibrationSet {
        provenance: "sweep-csv".into(),
        t_ref_c,
        temp_poly,
        i_min_ua: i_min,
        i_max_ua: i_max,
        f0_hz: f0,
        dh_slope_hz_per_mm: dh_slope,
        fz_map,
        tau_map,
        m0_grid: vec![(0.0, tau_map.x_max)],
        gamma_t_per_c: gamma_t,
        rest_threshold_ut: 1.0,
        t_min_c: t_min,
        t_max_c: t_max,
        fz_max_n: fz_map.eval(fz_map.x_max),
        tau_max_n: tau_map.eval(tau_map.x_max),
    };
    cal.validate()?;
    Ok(cal)
}
