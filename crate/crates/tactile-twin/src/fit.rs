use serde::{Deserialize, Serialize};

use crate::error::{Result, TwinError};

/// Maximum admissible residual of the temperature polynomial fit, degC.
pub const TEMP_FIT_TOLERANCE_C: f64 = 0.5;
/// Minimum number of points for the temperature fit.
pub const TEMP_FIT_MIN_POINTS: usize = 8;
/// Minimum temperature span of the fit data, degC.
pub const TEMP_FIT_MIN_SPAN_C: f64 = 40.0;
/// Minimum number of points for a two-segment fit.
pub const PIECEWISE_MIN_POINTS: usize = 6;
/// Minimum points per segment in a two-segment fit.
pub const PIECEWISE_MIN_SEGMENT_POINTS: usize = 3;
/// Minimum number of points for the field drift fit.
pub const DRIFT_MIN_POINTS: usize = 4;

/// Continuous two-segment linear map: y(x) = break_y + slope*(x - break_x)
/// with slope_lo left of the breakpoint and slope_hi right of it.
/// Continuity at the breakpoint holds by construction (single shared point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseLinear {
    pub break_x: f64,
    pub break_y: f64,
    pub slope_lo: f64,
    pub slope_hi: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl PiecewiseLinear {
    pub fn eval(&self, x: f64) -> f64 {
        let slope = if x <= self.break_x {
            self.slope_lo
        } else {
            self.slope_hi
        };
        self.break_y + slope * (x - self.break_x)
    }

    /// Inverse map; requires both slopes positive (strictly increasing map).
    pub fn invert(&self, y: f64) -> f64 {
        let slope = if y <= self.break_y {
            self.slope_lo
        } else {
            self.slope_hi
        };
        self.break_x + (y - self.break_y) / slope
    }

    pub fn is_increasing(&self) -> bool {
        self.slope_lo > 0.0 && self.slope_hi > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.break_x && self.break_x < self.x_max) {
            return Err(TwinError::InvalidCalibration(format!(
                "breakpoint {} outside ({}, {})",
                self.break_x, self.x_min, self.x_max
            )));
        }
        Ok(())
    }
}

/// Solves a small dense linear system in place by Gaussian elimination with
/// partial pivoting. Returns None when the matrix is singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (pivot_rows, rest) = a.split_at_mut(col + 1);
        let pivot_row = &pivot_rows[col];
        for (off, row_vals) in rest.iter_mut().enumerate() {
            let factor = row_vals[col] / pivot_row[col];
            for (rv, pv) in row_vals.iter_mut().zip(pivot_row).skip(col) {
                *rv -= factor * pv;
            }
            b[col + 1 + off] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Least-squares cubic y(x) = c0 + c1 x + c2 x^2 + c3 x^3. The system is
/// solved in x/scale coordinates to keep the normal equations well
/// conditioned, then the coefficients are rescaled to raw units.
pub fn polyfit_cubic(points: &[(f64, f64)]) -> Result<[f64; 4]> {
    if points.len() < 4 {
        return Err(TwinError::InsufficientData {
            context: "cubic fit",
            required: 4,
            actual: points.len(),
        });
    }
    let scale = points
        .iter()
        .map(|&(x, _)| x.abs())
        .fold(0.0_f64, f64::max)
        .max(1e-300);
    let mut ata = vec![vec![0.0; 4]; 4];
    let mut aty = vec![0.0; 4];
    for &(x, y) in points {
        let u = x / scale;
        let row = [1.0, u, u * u, u * u * u];
        for i in 0..4 {
            for j in 0..4 {
                ata[i][j] += row[i] * row[j];
            }
            aty[i] += row[i] * y;
        }
    }
    let c = solve_dense(ata, aty)
        .ok_or_else(|| TwinError::DegenerateFit("singular cubic normal equations".into()))?;
    Ok([
        c[0],
        c[1] / scale,
        c[2] / (scale * scale),
        c[3] / (scale * scale * scale),
    ])
}

pub fn polyval(c: &[f64; 4], x: f64) -> f64 {
    // Horner evaluation
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

/// Fits the temperature polynomial T(I) and enforces the accuracy gate: the
/// fit is rejected when any input point misses by more than 0.5 degC.
pub fn fit_temperature_poly(points: &[(f64, f64)]) -> Result<[f64; 4]> {
    if points.len() < TEMP_FIT_MIN_POINTS {
        return Err(TwinError::InsufficientData {
            context: "temperature fit",
            required: TEMP_FIT_MIN_POINTS,
            actual: points.len(),
        });
    }
    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, t) in points {
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    if t_max - t_min < TEMP_FIT_MIN_SPAN_C {
        return Err(TwinError::InsufficientData {
            context: "temperature fit span (degC)",
            required: TEMP_FIT_MIN_SPAN_C as usize,
            actual: (t_max - t_min) as usize,
        });
    }
    let coeffs = polyfit_cubic(points)?;
    let max_residual = points
        .iter()
        .map(|&(i, t)| (polyval(&coeffs, i) - t).abs())
        .fold(0.0_f64, f64::max);
    if max_residual > TEMP_FIT_TOLERANCE_C {
        return Err(TwinError::FitToleranceExceeded {
            max_residual,
            limit: TEMP_FIT_TOLERANCE_C,
        });
    }
    Ok(coeffs)
}

/// Least-squares line y = slope*x + intercept.
pub fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(TwinError::InsufficientData {
            context: "line fit",
            required: 2,
            actual: points.len(),
        });
    }
    let (slope, intercept, _) = line_fit(points)
        .ok_or_else(|| TwinError::DegenerateFit("line fit needs x spread".into()))?;
    Ok((slope, intercept))
}

/// Simple line fit over a slice of points: (slope, intercept, sse).
fn line_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let sse = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Some((slope, intercept, sse))
}

/// Continuous hinge fit with the breakpoint pinned at `c0` and the partition
/// fixed: left points get slope_lo, right points slope_hi, both segments
/// meeting at (c0, a). Solves the 3x3 normal equations in (a, lo, hi).
fn hinge_fit_at(
    left: &[(f64, f64)],
    right: &[(f64, f64)],
    c0: f64,
) -> Option<(f64, f64, f64, f64)> {
    let n = (left.len() + right.len()) as f64;
    let (mut su_l, mut suu_l, mut suy_l) = (0.0, 0.0, 0.0);
    let (mut su_r, mut suu_r, mut suy_r) = (0.0, 0.0, 0.0);
    let mut sy = 0.0;
    for &(x, y) in left {
        let u = x - c0;
        su_l += u;
        suu_l += u * u;
        suy_l += u * y;
        sy += y;
    }
    for &(x, y) in right {
        let u = x - c0;
        su_r += u;
        suu_r += u * u;
        suy_r += u * y;
        sy += y;
    }
    let a = vec![
        vec![n, su_l, su_r],
        vec![su_l, suu_l, 0.0],
        vec![su_r, 0.0, suu_r],
    ];
    let sol = solve_dense(a, vec![sy, suy_l, suy_r])?;
    let (a0, lo, hi) = (sol[0], sol[1], sol[2]);
    let mut sse = 0.0;
    for &(x, y) in left {
        let r = y - (a0 + lo * (x - c0));
        sse += r * r;
    }
    for &(x, y) in right {
        let r = y - (a0 + hi * (x - c0));
        sse += r * r;
    }
    Some((a0, lo, hi, sse))
}

/// Fitted two-segment map plus its sum of squared residuals.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseFit {
    pub map: PiecewiseLinear,
    pub sse: f64,
}

/// Least-squares continuous two-segment fit with a free breakpoint.
///
/// For every admissible split of the data (at least 3 points per side) the
/// breakpoint is optimized exactly over the interval between the neighboring
/// x values: the unconstrained per-side line fits give the interior optimum
/// when their intersection lands inside the interval, and pinned hinge fits
/// at both interval ends cover the boundary cases. The global SSE minimizer
/// over all candidates is returned.
pub fn fit_piecewise_linear(points: &[(f64, f64)]) -> Result<PiecewiseFit> {
    let n = points.len();
    if n < PIECEWISE_MIN_POINTS {
        return Err(TwinError::InsufficientData {
            context: "two-segment fit",
            required: PIECEWISE_MIN_POINTS,
            actual: n,
        });
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(TwinError::DegenerateFit(
                "x values must be strictly increasing".into(),
            ));
        }
    }

    let mut best: Option<(f64, f64, f64, f64, f64)> = None; // (sse, c, a, lo, hi)
    let mut consider = |cand: (f64, f64, f64, f64, f64)| {
        if best.is_none_or(|b| cand.0 < b.0) {
            best = Some(cand);
        }
    };

    for i in (PIECEWISE_MIN_SEGMENT_POINTS - 1)..=(n - 1 - PIECEWISE_MIN_SEGMENT_POINTS) {
        let (left, right) = points.split_at(i + 1);
        let (x_lo, x_hi) = (points[i].0, points[i + 1].0);

        if let (Some((m_l, b_l, sse_l)), Some((m_r, b_r, sse_r))) =
            (line_fit(left), line_fit(right))
        {
            if (m_l - m_r).abs() > 1e-300 {
                let c = (b_r - b_l) / (m_l - m_r);
                if c > x_lo && c < x_hi {
                    consider((sse_l + sse_r, c, m_l * c + b_l, m_l, m_r));
                }
            }
        }
        for c0 in [x_lo, x_hi] {
            if let Some((a0, lo, hi, sse)) = hinge_fit_at(left, right, c0) {
                consider((sse, c0, a0, lo, hi));
            }
        }
    }

    let (sse, c, a, lo, hi) =
        best.ok_or_else(|| TwinError::DegenerateFit("no admissible breakpoint".into()))?;
    let map = PiecewiseLinear {
        break_x: c,
        break_y: a,
        slope_lo: lo,
        slope_hi: hi,
        x_min: points[0].0,
        x_max: points[n - 1].0,
    };
    map.validate()?;
    Ok(PiecewiseFit { map, sse })
}

/// Least-squares slope of (ratio - 1) against (T - t_ref), intercept forced
/// through (t_ref, 1): the thermal drift gain of the Hall channel.
pub fn fit_hall_drift(points: &[(f64, f64)], t_ref_c: f64) -> Result<f64> {
    if points.len() < DRIFT_MIN_POINTS {
        return Err(TwinError::InsufficientData {
            context: "field drift fit",
            required: DRIFT_MIN_POINTS,
            actual: points.len(),
        });
    }
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, ratio) in points {
        let x = t - t_ref_c;
        sxx += x * x;
        sxy += x * (ratio - 1.0);
    }
    if sxx < 1e-300 {
        return Err(TwinError::DegenerateFit(
            "drift fit needs temperature spread".into(),
        ));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cubic_recovers_exact_cubic() {
        let truth = [2.0, -1.5, 0.25, 0.01];
        let points: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let x = 1.0 + k as f64;
                (x, polyval(&truth, x))
            })
            .collect();
        let c = polyfit_cubic(&points).unwrap();
        for (a, b) in c.iter().zip(truth.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-7, max_relative = 1e-7);
        }
        let resid = points
            .iter()
            .map(|&(x, y)| (polyval(&c, x) - y).abs())
            .fold(0.0_f64, f64::max);
        assert!(resid < 1e-8);
    }

    #[test]
    fn temperature_fit_from_exponential_meets_gate() {
        // 13 noise-free points from the default exponential channel over [20, 80]
        let gel = crate::params::IonGelParams::default();
        let points: Vec<(f64, f64)> = (0..13)
            .map(|k| {
                let t = 20.0 + 60.0 * k as f64 / 12.0;
                let i = gel.i_ref_ua * (gel.growth_per_c * (t - gel.t_ref_c)).exp();
                (i, t)
            })
            .collect();
        let c = fit_temperature_poly(&points).unwrap();
        let mut dense_max = 0.0_f64;
        for k in 0..=4000 {
            let t = 20.0 + 60.0 * k as f64 / 4000.0;
            let i = gel.i_ref_ua * (gel.growth_per_c * (t - gel.t_ref_c)).exp();
            dense_max = dense_max.max((polyval(&c, i) - t).abs());
        }
        // independently computed: 0.2485 degC for this configuration
        assert_relative_eq!(dense_max, 0.2485, epsilon = 2e-3);
        assert!(dense_max <= TEMP_FIT_TOLERANCE_C);
    }

    #[test]
    fn temperature_fit_rejects_too_few_points() {
        let pts = [(1.0, 20.0), (2.0, 40.0), (3.0, 60.0)];
        match fit_temperature_poly(&pts) {
            Err(TwinError::InsufficientData { .. }) => {}
            other => panic!("expected insufficient data, got {other:?}"),
        }
    }

    #[test]
    fn temperature_fit_rejects_narrow_span() {
        let pts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 20.0 + k as f64)).collect();
        assert!(matches!(
            fit_temperature_poly(&pts),
            Err(TwinError::InsufficientData { .. })
        ));
    }

    #[test]
    fn temperature_fit_rejects_poor_fit() {
        // a step function cannot be fit by a cubic to 0.5 degC
        let pts: Vec<(f64, f64)> = (0..16)
            .map(|k| {
                let x = k as f64;
                (x, if k < 8 { 20.0 } else { 80.0 })
            })
            .collect();
        assert!(matches!(
            fit_temperature_poly(&pts),
            Err(TwinError::FitToleranceExceeded { .. })
        ));
    }

    fn sample_map(map: &PiecewiseLinear, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let x = map.x_min + (map.x_max - map.x_min) * k as f64 / (n - 1) as f64;
                (x, map.eval(x))
            })
            .collect()
    }

    #[test]
    fn piecewise_recovers_exact_map_without_a_grid_point_at_the_break() {
        let truth = PiecewiseLinear {
            break_x: 600.0,
            break_y: 1.0,
            slope_lo: 1.0 / 600.0,
            slope_hi: 1.0 / 200.0,
            x_min: 0.0,
            x_max: 2250.0,
        };
        // 71 evenly spaced points; 600 is not one of them
        let pts = sample_map(&truth, 71);
        assert!(pts.iter().all(|&(x, _)| (x - 600.0).abs() > 1.0));
        let fit = fit_piecewise_linear(&pts).unwrap();
        assert_relative_eq!(fit.map.break_x, 600.0, epsilon = 1e-9);
        assert_relative_eq!(fit.map.break_y, 1.0, epsilon = 1e-9);
        assert_relative_eq!(fit.map.slope_lo, 1.0 / 600.0, epsilon = 1e-12);
        assert_relative_eq!(fit.map.slope_hi, 1.0 / 200.0, epsilon = 1e-12);
        assert!(fit.sse < 1e-18);
    }

    #[test]
    fn piecewise_on_a_single_line_degenerates_gracefully() {
        let pts: Vec<(f64, f64)> = (0..12).map(|k| (k as f64, 3.0 + 0.5 * k as f64)).collect();
        let fit = fit_piecewise_linear(&pts).unwrap();
        assert_relative_eq!(fit.map.slope_lo, fit.map.slope_hi, epsilon = 1e-9);
        assert_relative_eq!(fit.map.slope_lo, 0.5, epsilon = 1e-9);
        assert!(fit.sse < 1e-18);
        fit.map.validate().unwrap();
    }

    #[test]
    fn piecewise_rejects_too_few_or_unsorted_points() {
        let few: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, k as f64)).collect();
        assert!(matches!(
            fit_piecewise_linear(&few),
            Err(TwinError::InsufficientData { .. })
        ));
        let unsorted = [
            (0.0, 0.0),
            (2.0, 1.0),
            (1.0, 2.0),
            (3.0, 3.0),
            (4.0, 4.0),
            (5.0, 5.0),
        ];
        assert!(matches!(
            fit_piecewise_linear(&unsorted),
            Err(TwinError::DegenerateFit(_))
        ));
    }

    #[test]
    fn piecewise_median_slope_error_under_noise_stays_below_two_percent() {
        use rand::Rng;
        use rand::SeedableRng;
        let truth = PiecewiseLinear {
            break_x: 600.0,
            break_y: 1.0,
            slope_lo: 1.0 / 600.0,
            slope_hi: 1.0 / 200.0,
            x_min: 0.0,
            x_max: 2250.0,
        };
        let clean = sample_map(&truth, 201);
        let range = 9.25; // y span of the sampled map
        let mut err_lo = Vec::new();
        let mut err_hi = Vec::new();
        for seed in 0..40u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let noisy: Vec<(f64, f64)> = clean
                .iter()
                .map(|&(x, y)| {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    (x, y + 0.005 * range * z)
                })
                .collect();
            let fit = fit_piecewise_linear(&noisy).unwrap();
            err_lo.push((fit.map.slope_lo - truth.slope_lo).abs() / truth.slope_lo);
            err_hi.push((fit.map.slope_hi - truth.slope_hi).abs() / truth.slope_hi);
        }
        err_lo.sort_by(f64::total_cmp);
        err_hi.sort_by(f64::total_cmp);
        assert!(err_lo[20] < 0.02, "median slope_lo error {}", err_lo[20]);
        assert!(err_hi[20] < 0.02, "median slope_hi error {}", err_hi[20]);
    }

    #[test]
    fn piecewise_fit_is_idempotent() {
        let curved: Vec<(f64, f64)> = (0..41)
            .map(|k| {
                let x = k as f64 / 40.0 * 2.0;
                (x, (1.2 * x).sin())
            })
            .collect();
        let first = fit_piecewise_linear(&curved).unwrap();
        let resampled = sample_map(&first.map, 41);
        let second = fit_piecewise_linear(&resampled).unwrap();
        assert_relative_eq!(first.map.break_x, second.map.break_x, epsilon = 1e-9);
        assert_relative_eq!(first.map.slope_lo, second.map.slope_lo, epsilon = 1e-9);
        assert_relative_eq!(first.map.slope_hi, second.map.slope_hi, epsilon = 1e-9);
    }

    #[test]
    fn eval_invert_round_trip() {
        let map = PiecewiseLinear {
            break_x: 600.0,
            break_y: 1.0,
            slope_lo: 1.0 / 600.0,
            slope_hi: 1.0 / 200.0,
            x_min: 0.0,
            x_max: 2250.0,
        };
        for x in [0.0, 123.4, 600.0, 601.0, 2250.0] {
            assert_relative_eq!(map.invert(map.eval(x)), x, epsilon = 1e-9);
        }
    }

    #[test]
    fn drift_fit_recovers_exact_slope() {
        let gamma = -0.001;
        let t_ref = 25.0;
        let pts: Vec<(f64, f64)> = (0..13)
            .map(|k| {
                let t = 20.0 + 5.0 * k as f64;
                (t, 1.0 + gamma * (t - t_ref))
            })
            .collect();
        let g = fit_hall_drift(&pts, t_ref).unwrap();
        assert_relative_eq!(g, gamma, epsilon = 1e-12);
    }

    #[test]
    fn drift_fit_of_unit_ratios_is_zero() {
        let pts: Vec<(f64, f64)> = (0..6).map(|k| (20.0 + 10.0 * k as f64, 1.0)).collect();
        assert_eq!(fit_hall_drift(&pts, 25.0).unwrap(), 0.0);
    }

    #[test]
    fn drift_fit_rejects_two_points() {
        let pts = [(20.0, 1.0), (80.0, 0.94)];
        assert!(matches!(
            fit_hall_drift(&pts, 25.0),
            Err(TwinError::InsufficientData { .. })
        ));
    }
}
