use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, TwinError};

/// Ion-gel temperature channel: current grows exponentially with temperature
/// and is designed to be nearly force-blind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonGelParams {
    /// Current at the reference temperature, microamps.
    pub i_ref_ua: f64,
    /// Exponential growth coefficient, per degC.
    pub growth_per_c: f64,
    /// Reference temperature, degC.
    pub t_ref_c: f64,
    /// Residual force sensitivity, dimensionless; 0 disables force cross-talk.
    pub force_leak: f64,
}

impl Default for IonGelParams {
    fn default() -> Self {
        Self {
            i_ref_ua: 10.0,
            growth_per_c: 0.02,
            t_ref_c: 25.0,
            force_leak: 0.0,
        }
    }
}

impl IonGelParams {
    pub fn validate(&self) -> Result<()> {
        if self.i_ref_ua <= 0.0 {
            return Err(TwinError::InvalidParams("i_ref_uA must be positive".into()));
        }
        if self.growth_per_c <= 0.0 {
            return Err(TwinError::InvalidParams(
                "growth_per_C must be positive".into(),
            ));
        }
        if !(0.0..=0.01).contains(&self.force_leak) {
            return Err(TwinError::InvalidParams(
                "force_leak must be within [0, 0.01]".into(),
            ));
        }
        Ok(())
    }
}

/// Stacked-disc capacitor normal channel, read out as an oscillator frequency.
///
/// The displacement law is two-regime piecewise linear: apparent stiffness
/// k_seg1 below dh_break, k_seg2 above, saturating at dh_max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitorParams {
    /// Oscillator frequency at zero load, Hz.
    pub f0_hz: f64,
    /// Frequency change per mm of normal compression, Hz/mm (negative).
    pub freq_slope_hz_per_mm: f64,
    /// Apparent stiffness of the first deformation regime, N/mm.
    pub k_seg1_n_per_mm: f64,
    /// Apparent stiffness of the second (stiffer) regime, N/mm.
    pub k_seg2_n_per_mm: f64,
    /// Compression at the regime change, mm.
    pub dh_break_mm: f64,
    /// Saturation compression, mm.
    pub dh_max_mm: f64,
    /// Thermal expansion coefficient of the electrode gap, per degC.
    pub cte_per_c: f64,
    /// Ionization (permittivity) coefficient, per degC. Equal to cte_per_c by
    /// design, which makes the capacitance temperature-invariant.
    pub it_per_c: f64,
    /// Relative permittivity at the reference temperature.
    pub eps_r0: f64,
    /// Rest electrode gap, mm.
    pub d0_mm: f64,
    /// Electrode overlap areas of the three stacked discs, mm^2.
    pub s1_mm2: f64,
    pub s2_mm2: f64,
    pub s3_mm2: f64,
    /// Electrostatic constant, N m^2 / C^2.
    pub k_e: f64,
    /// Reference temperature for the two thermal coefficients, degC.
    pub t_ref_c: f64,
}

impl Default for CapacitorParams {
    fn default() -> Self {
        Self {
            f0_hz: 5000.0,
            freq_slope_hz_per_mm: -900.0,
            k_seg1_n_per_mm: 1.5,
            k_seg2_n_per_mm: 4.5,
            dh_break_mm: 2.0 / 3.0,
            dh_max_mm: 2.5,
            cte_per_c: 3.1e-4,
            it_per_c: 3.1e-4,
            eps_r0: 3.2,
            d0_mm: 1.0,
            s1_mm2: PI * 3.75 * 3.75,
            s2_mm2: PI * 3.0 * 3.0,
            s3_mm2: PI * 2.25 * 2.25,
            k_e: 8.9875e9,
            t_ref_c: 25.0,
        }
    }
}

impl CapacitorParams {
    /// Normal force at the regime change, N.
    pub fn fz_break_n(&self) -> f64 {
        self.k_seg1_n_per_mm * self.dh_break_mm
    }

    /// Largest normal force the channel can resolve before saturating, N.
    pub fn fz_saturation_n(&self) -> f64 {
        self.fz_break_n() + self.k_seg2_n_per_mm * (self.dh_max_mm - self.dh_break_mm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f0_hz <= 0.0 {
            return Err(TwinError::InvalidParams("f0_Hz must be positive".into()));
        }
        if self.freq_slope_hz_per_mm >= 0.0 {
            return Err(TwinError::InvalidParams(
                "freq_slope_Hz_per_mm must be negative".into(),
            ));
        }
        if self.k_seg1_n_per_mm <= 0.0 {
            return Err(TwinError::InvalidParams(
                "k_seg1_N_per_mm must be positive".into(),
            ));
        }
        if self.k_seg2_n_per_mm <= self.k_seg1_n_per_mm {
            return Err(TwinError::InvalidParams(
                "k_seg2_N_per_mm must exceed k_seg1_N_per_mm (stiffening)".into(),
            ));
        }
        if self.dh_break_mm <= 0.0 || self.dh_max_mm <= self.dh_break_mm {
            return Err(TwinError::InvalidParams(
                "require 0 < dh_break_mm < dh_max_mm".into(),
            ));
        }
        if self.eps_r0 <= 0.0 || self.d0_mm <= 0.0 || self.k_e <= 0.0 {
            return Err(TwinError::InvalidParams(
                "eps_r0, d0_mm, k_e must be positive".into(),
            ));
        }
        if self.s1_mm2 <= 0.0 || self.s2_mm2 <= 0.0 || self.s3_mm2 <= 0.0 {
            return Err(TwinError::InvalidParams(
                "electrode areas must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Circular Halbach magnet film over an elastomer shear layer, read by a
/// 3-axis Hall sensor. The radial field amplitude encodes tangential load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalbachParams {
    /// Tangential field amplitude at rest height and reference temperature, uT.
    pub m0_ut: f64,
    /// Amplitude gain per mm of normal compression, per mm.
    pub beta_per_mm: f64,
    /// Spatial wavenumber of the circular magnetization pattern, rad/mm.
    pub k_m_per_mm: f64,
    /// Linear field drift with temperature (magnet plus Hall chip), per degC.
    pub gamma_t_per_c: f64,
    /// Reference temperature, degC.
    pub t_ref_c: f64,
    /// Tangential displacement range bound, mm.
    pub dr_max_mm: f64,
    /// Lumped shear stiffness S*G/h, N/mm.
    pub shear_stiffness_n_per_mm: f64,
    /// Contact area S, mm^2.
    pub contact_area_mm2: f64,
    /// Elastomer shear modulus G, kPa.
    pub shear_modulus_kpa: f64,
    /// Elastomer layer height h, mm.
    pub elastomer_height_mm: f64,
}

impl Default for HalbachParams {
    fn default() -> Self {
        Self {
            m0_ut: 2000.0,
            beta_per_mm: 0.10,
            k_m_per_mm: PI / 12.0,
            gamma_t_per_c: -0.001,
            t_ref_c: 25.0,
            dr_max_mm: 2.5,
            shear_stiffness_n_per_mm: 0.5,
            contact_area_mm2: 30.0,
            shear_modulus_kpa: 50.0,
            elastomer_height_mm: 3.0,
        }
    }
}

impl HalbachParams {
    /// Largest tangential force inside the displacement range bound, N.
    pub fn tau_range_n(&self) -> f64 {
        self.shear_stiffness_n_per_mm * self.dr_max_mm
    }

    pub fn validate(&self) -> Result<()> {
        if self.m0_ut <= 0.0 {
            return Err(TwinError::InvalidParams("m0_uT must be positive".into()));
        }
        if self.dr_max_mm <= 0.0 || self.shear_stiffness_n_per_mm <= 0.0 {
            return Err(TwinError::InvalidParams(
                "dr_max_mm and shear_stiffness_N_per_mm must be positive".into(),
            ));
        }
        // Field must stay monotone over the measurement range.
        if self.k_m_per_mm * self.dr_max_mm > FRAC_PI_2 + 1e-9 {
            return Err(TwinError::InvalidParams(
                "k_m_per_mm * dr_max_mm must not exceed pi/2".into(),
            ));
        }
        let lumped = self.contact_area_mm2 * self.shear_modulus_kpa / self.elastomer_height_mm
            * 1e-3; // mm^2 * kPa / mm = 1e-3 N/mm
        if (lumped - self.shear_stiffness_n_per_mm).abs() > 1e-9 * self.shear_stiffness_n_per_mm {
            return Err(TwinError::InvalidParams(format!(
                "shear_stiffness_N_per_mm {} inconsistent with S*G/h = {}",
                self.shear_stiffness_n_per_mm, lumped
            )));
        }
        Ok(())
    }
}

/// Complete forward-model parameter set plus channel noise and RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    pub iongel: IonGelParams,
    pub capacitor: CapacitorParams,
    pub halbach: HalbachParams,
    /// Gaussian noise standard deviations per channel; 0 disables noise.
    pub noise_current_ua: f64,
    pub noise_freq_hz: f64,
    pub noise_field_ut: f64,
    pub rng_seed: u64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            iongel: IonGelParams::default(),
            capacitor: CapacitorParams::default(),
            halbach: HalbachParams::default(),
            noise_current_ua: 0.0,
            noise_freq_hz: 0.0,
            noise_field_ut: 0.0,
            rng_seed: 0,
        }
    }
}

impl SensorParams {
    /// Variant with all elastomer stiffnesses scaled by `scale` (> 0): the
    /// same geometry built from a firmer compound. Measurable force ranges
    /// scale proportionally; displacement bounds are unchanged.
    pub fn with_stiffness_scale(mut self, scale: f64) -> Self {
        self.capacitor.k_seg1_n_per_mm *= scale;
        self.capacitor.k_seg2_n_per_mm *= scale;
        self.halbach.shear_modulus_kpa *= scale;
        self.halbach.shear_stiffness_n_per_mm = self.halbach.contact_area_mm2
            * self.halbach.shear_modulus_kpa
            / self.halbach.elastomer_height_mm
            * 1e-3;
        self
    }

    /// Firm-compound profile used by the high-load demo scenarios; tangential
    /// range 5 N and normal range 28 N instead of the default 1.25 N / 7 N.
    pub fn firm() -> Self {
        Self::default().with_stiffness_scale(4.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.iongel.validate()?;
        self.capacitor.validate()?;
        self.halbach.validate()?;
        if self.noise_current_ua < 0.0 || self.noise_freq_hz < 0.0 || self.noise_field_ut < 0.0 {
            return Err(TwinError::InvalidParams(
                "noise standard deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Serializes to the flat `key = value` text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tactile sensor forward-model parameters");
        let _ = writeln!(s, "# ion-gel temperature channel");
        let _ = writeln!(s, "iongel.i_ref_uA = {}", self.iongel.i_ref_ua);
        let _ = writeln!(s, "iongel.growth_per_C = {}", self.iongel.growth_per_c);
        let _ = writeln!(s, "iongel.t_ref_C = {}", self.iongel.t_ref_c);
        let _ = writeln!(s, "iongel.force_leak = {}", self.iongel.force_leak);
        let _ = writeln!(s, "# capacitor normal channel");
        let _ = writeln!(s, "capacitor.f0_Hz = {}", self.capacitor.f0_hz);
        let _ = writeln!(
            s,
            "capacitor.freq_slope_Hz_per_mm = {}",
            self.capacitor.freq_slope_hz_per_mm
        );
        let _ = writeln!(
            s,
            "capacitor.k_seg1_N_per_mm = {}",
            self.capacitor.k_seg1_n_per_mm
        );
        let _ = writeln!(
            s,
            "capacitor.k_seg2_N_per_mm = {}",
            self.capacitor.k_seg2_n_per_mm
        );
        let _ = writeln!(s, "capacitor.dh_break_mm = {}", self.capacitor.dh_break_mm);
        let _ = writeln!(s, "capacitor.dh_max_mm = {}", self.capacitor.dh_max_mm);
        let _ = writeln!(s, "capacitor.cte_per_C = {}", self.capacitor.cte_per_c);
        let _ = writeln!(s, "capacitor.it_per_C = {}", self.capacitor.it_per_c);
        let _ = writeln!(s, "capacitor.eps_r0 = {}", self.capacitor.eps_r0);
        let _ = writeln!(s, "capacitor.d0_mm = {}", self.capacitor.d0_mm);
        let _ = writeln!(s, "capacitor.s1_mm2 = {}", self.capacitor.s1_mm2);
        let _ = writeln!(s, "capacitor.s2_mm2 = {}", self.capacitor.s2_mm2);
        let _ = writeln!(s, "capacitor.s3_mm2 = {}", self.capacitor.s3_mm2);
        let _ = writeln!(s, "capacitor.k_e = {}", self.capacitor.k_e);
        let _ = writeln!(s, "capacitor.t_ref_C = {}", self.capacitor.t_ref_c);
        let _ = writeln!(s, "# Halbach tangential channel");
        let _ = writeln!(s, "halbach.m0_uT = {}", self.halbach.m0_ut);
        let _ = writeln!(s, "halbach.beta_per_mm = {}", self.halbach.beta_per_mm);
        let _ = writeln!(s, "halbach.k_m_per_mm = {}", self.halbach.k_m_per_mm);
        let _ = writeln!(s, "halbach.gamma_T_per_C = {}", self.halbach.gamma_t_per_c);
        let _ = writeln!(s, "halbach.t_ref_C = {}", self.halbach.t_ref_c);
        let _ = writeln!(s, "halbach.dr_max_mm = {}", self.halbach.dr_max_mm);
        let _ = writeln!(
            s,
            "halbach.shear_stiffness_N_per_mm = {}",
            self.halbach.shear_stiffness_n_per_mm
        );
        let _ = writeln!(
            s,
            "halbach.contact_area_mm2 = {}",
            self.halbach.contact_area_mm2
        );
        let _ = writeln!(
            s,
            "halbach.shear_modulus_kPa = {}",
            self.halbach.shear_modulus_kpa
        );
        let _ = writeln!(
            s,
            "halbach.elastomer_height_mm = {}",
            self.halbach.elastomer_height_mm
        );
        let _ = writeln!(s, "# channel noise and seeding");
        let _ = writeln!(s, "noise_current_uA = {}", self.noise_current_ua);
        let _ = writeln!(s, "noise_freq_Hz = {}", self.noise_freq_hz);
        let _ = writeln!(s, "noise_field_uT = {}", self.noise_field_ut);
        let _ = writeln!(s, "rng_seed = {}", self.rng_seed);
        s
    }

    /// Parses the flat text format. Unknown keys are rejected; missing keys
    /// keep their default values. The result is validated.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_text_with_base(text, SensorParams::default())
    }

    /// Like [`from_text`](Self::from_text), but missing keys keep the values
    /// from `base` instead of the stock build — the file acts as an overlay.
    pub fn from_text_with_base(text: &str, base: SensorParams) -> Result<Self> {
        let mut p = base;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| TwinError::Parse {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = || -> Result<f64> {
                value.parse::<f64>().map_err(|e| TwinError::Parse {
                    line: line_no,
                    message: format!("bad number '{value}' for {key}: {e}"),
                })
            };
            match key {
                "iongel.i_ref_uA" => p.iongel.i_ref_ua = parse_f64()?,
                "iongel.growth_per_C" => p.iongel.growth_per_c = parse_f64()?,
                "iongel.t_ref_C" => p.iongel.t_ref_c = parse_f64()?,
                "iongel.force_leak" => p.iongel.force_leak = parse_f64()?,
                "capacitor.f0_Hz" => p.capacitor.f0_hz = parse_f64()?,
                "capacitor.freq_slope_Hz_per_mm" => {
                    p.capacitor.freq_slope_hz_per_mm = parse_f64()?
                }
                "capacitor.k_seg1_N_per_mm" => p.capacitor.k_seg1_n_per_mm = parse_f64()?,
                "capacitor.k_seg2_N_per_mm" => p.capacitor.k_seg2_n_per_mm = parse_f64()?,
                "capacitor.dh_break_mm" => p.capacitor.dh_break_mm = parse_f64()?,
                "capacitor.dh_max_mm" => p.capacitor.dh_max_mm = parse_f64()?,
                "capacitor.cte_per_C" => p.capacitor.cte_per_c = parse_f64()?,
                "capacitor.it_per_C" => p.capacitor.it_per_c = parse_f64()?,
                "capacitor.eps_r0" => p.capacitor.eps_r0 = parse_f64()?,
                "capacitor.d0_mm" => p.capacitor.d0_mm = parse_f64()?,
                "capacitor.s1_mm2" => p.capacitor.s1_mm2 = parse_f64()?,
                "capacitor.s2_mm2" => p.capacitor.s2_mm2 = parse_f64()?,
                "capacitor.s3_mm2" => p.capacitor.s3_mm2 = parse_f64()?,
                "capacitor.k_e" => p.capacitor.k_e = parse_f64()?,
                "capacitor.t_ref_C" => p.capacitor.t_ref_c = parse_f64()?,
                "halbach.m0_uT" => p.halbach.m0_ut = parse_f64()?,
                "halbach.beta_per_mm" => p.halbach.beta_per_mm = parse_f64()?,
                "halbach.k_m_per_mm" => p.halbach.k_m_per_mm = parse_f64()?,
                "halbach.gamma_T_per_C" => p.halbach.gamma_t_per_c = parse_f64()?,
                "halbach.t_ref_C" => p.halbach.t_ref_c = parse_f64()?,
                "halbach.dr_max_mm" => p.halbach.dr_max_mm = parse_f64()?,
                "halbach.shear_stiffness_N_per_mm" => {
                    p.halbach.shear_stiffness_n_per_mm = parse_f64()?
                }
                "halbach.contact_area_mm2" => p.halbach.contact_area_mm2 = parse_f64()?,
                "halbach.shear_modulus_kPa" => p.halbach.shear_modulus_kpa = parse_f64()?,
                "halbach.elastomer_height_mm" => p.halbach.elastomer_height_mm = parse_f64()?,
                "noise_current_uA" => p.noise_current_ua = parse_f64()?,
                "noise_freq_Hz" => p.noise_freq_hz = parse_f64()?,
                "noise_field_uT" => p.noise_field_ut = parse_f64()?,
                "rng_seed" => {
                    p.rng_seed = value.parse::<u64>().map_err(|e| TwinError::Parse {
                        line: line_no,
                        message: format!("bad seed '{value}': {e}"),
                    })?
                }
                other => {
                    return Err(TwinError::InvalidParams(format!(
                        "unknown key '{other}' at line {line_no}"
                    )))
                }
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}
