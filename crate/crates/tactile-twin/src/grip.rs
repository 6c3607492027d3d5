use std::collections::VecDeque;
use std::fmt;

use crate::error::{Result, TwinError};
use crate::state::DecodedState;

/// Hysteresis on the command target used for phase labeling, N.
pub const PHASE_HYSTERESIS_N: f64 = 0.05;
/// Fraction of the baseline the signal must stay above for drop-onset
/// timing; values below it count as already dropping.
const ONSET_FRAC: f64 = 0.9;
/// Fraction of the trigger baseline the signal must recover to before the
/// streaming monitor re-arms.
const REARM_FRAC: f64 = 0.8;

/// Adaptive-grip and handover tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct GripConfig {
    /// Friction coefficient between gripper and object.
    pub mu: f64,
    /// Commanded normal force per tangential newton.
    pub gain: f64,
    /// Command clamps, N.
    pub fz_min_n: f64,
    pub fz_max_n: f64,
    /// Maximum command slew, N/s.
    pub rate_limit_n_per_s: f64,
    /// Fractional drop of gravity-axis tangential force that signals a
    /// handover.
    pub handover_drop_frac: f64,
    /// Detection window, s.
    pub handover_window_s: f64,
}

impl Default for GripConfig {
    fn default() -> Self {
        GripConfig {
            mu: 0.5,
            gain: 4.16,
            fz_min_n: 5.52,
            fz_max_n: 12.0,
            rate_limit_n_per_s: 10.0,
            handover_drop_frac: 0.6,
            handover_window_s: 0.4,
        }
    }
}

impl GripConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(TwinError::InvalidInput("mu must be positive".into()));
        }
        if !(self.gain >= 1.0 / self.mu) {
            // below 1/mu the commanded grip could leave the friction cone
            return Err(TwinError::InvalidInput(format!(
                "gain {} below 1/mu = {}",
                self.gain,
                1.0 / self.mu
            )));
        }
        if !(self.fz_min_n < self.fz_max_n) {
            return Err(TwinError::InvalidInput(
                "fz_min must be below fz_max".into(),
            ));
        }
        if !(self.fz_min_n >= 0.0 && self.rate_limit_n_per_s > 0.0) {
            return Err(TwinError::InvalidInput(
                "clamps must be non-negative and rate limit positive".into(),
            ));
        }
        if !(self.handover_drop_frac > 0.0 && self.handover_drop_frac < 1.0) {
            return Err(TwinError::InvalidInput(
                "handover_drop_frac must lie in (0, 1)".into(),
            ));
        }
        if !(self.handover_window_s > 0.0) {
            return Err(TwinError::InvalidInput(
                "handover_window_s must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GripPhase {
    Stationary,
    Jamming,
    Recovery,
}

impl fmt::Display for GripPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GripPhase::Stationary => "stationary",
            GripPhase::Jamming => "jamming",
            GripPhase::Recovery => "recovery",
        })
    }
}

impl std::str::FromStr for GripPhase {
    type Err = TwinError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(GripPhase::Stationary),
            "jamming" => Ok(GripPhase::Jamming),
            "recovery" => Ok(GripPhase::Recovery),
            other => Err(TwinError::InvalidInput(format!(
                "unknown grip phase {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripCommand {
    pub fz_cmd_n: f64,
    /// mu * fz_cmd - F_tau: how far inside the friction cone the command
    /// sits; negative only when the command is clamped at fz_max.
    pub margin_n: f64,
    pub phase: GripPhase,
}

/// How far the decoded contact state sits inside the friction cone, N.
pub fn slip_margin(state: &DecodedState, mu: f64) -> f64 {
    mu * state.fz_n - state.fx_n.hypot(state.fy_n)
}

fn target_force(state: &DecodedState, cfg: &GripConfig) -> f64 {
    (cfg.gain * state.f_tau_n).clamp(cfg.fz_min_n, cfg.fz_max_n)
}

/// Initial command for a stream: starts directly at the target.
pub fn grip_init(state: &DecodedState, cfg: &GripConfig) -> GripCommand {
    let fz_cmd = target_force(state, cfg);
    GripCommand {
        fz_cmd_n: fz_cmd,
        margin_n: cfg.mu * fz_cmd - state.f_tau_n,
        phase: GripPhase::Stationary,
    }
}

/// One controller step: slew the command toward the clamped proportional
/// target and label the phase. Jamming while the target leads the command
/// upward, Recovery while it retreats from a disturbance, Stationary once
/// settled.
pub fn grip_update(
    state: &DecodedState,
    cfg: &GripConfig,
    prev: &GripCommand,
    dt_s: f64,
) -> GripCommand {
    debug_assert!(dt_s > 0.0);
    let target = target_force(state, cfg);
    let max_step = cfg.rate_limit_n_per_s * dt_s;
    let fz_cmd = prev.fz_cmd_n + (target - prev.fz_cmd_n).clamp(-max_step, max_step);
    let phase = if target > prev.fz_cmd_n + PHASE_HYSTERESIS_N {
        GripPhase::Jamming
    } else if target < prev.fz_cmd_n - PHASE_HYSTERESIS_N
        && matches!(prev.phase, GripPhase::Jamming | GripPhase::Recovery)
    {
        GripPhase::Recovery
    } else {
        GripPhase::Stationary
    };
    GripCommand {
        fz_cmd_n: fz_cmd,
        margin_n: cfg.mu * fz_cmd - state.f_tau_n,
        phase,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandoverEvent {
    /// Detection time, s.
    pub t_s: f64,
    /// Time from drop onset to detection, s.
    pub latency_s: f64,
    /// Observed drop fraction at detection.
    pub confidence: f64,
}

/// One-shot handover test over a time-ordered window of (time_s,
/// gravity-axis tangential force) samples. The window's first half sets the
/// baseline (median); an event fires when the latest sample has dropped by
/// the configured fraction and the drop began within the detection window.
/// Slow unloading therefore never triggers: its onset lies too far back.
pub fn detect_handover(window: &[(f64, f64)], cfg: &GripConfig) -> Option<HandoverEvent> {
    let (&(t_first, _), &(t_last, latest)) = (window.first()?, window.last()?);
    if t_last - t_first < cfg.handover_window_s {
        return None;
    }
    let mut first_half: Vec<f64> = window[..window.len() / 2].iter().map(|&(_, f)| f).collect();
    first_half.sort_by(f64::total_cmp);
    let mid = first_half.len() / 2;
    let baseline = if first_half.len() % 2 == 1 {
        first_half[mid]
    } else {
        (first_half[mid - 1] + first_half[mid]) / 2.0
    };
    if baseline <= 1e-9 || latest > (1.0 - cfg.handover_drop_frac) * baseline {
        return None;
    }
    // onset: last time the signal still held near the baseline
    let t_onset = window
        .iter()
        .rev()
        .find(|&&(_, f)| f >= ONSET_FRAC * baseline)
        .map(|&(t, _)| t)?;
    let latency = t_last - t_onset;
    if latency > cfg.handover_window_s {
        return None;
    }
    Some(HandoverEvent {
        t_s: t_last,
        latency_s: latency,
        confidence: 1.0 - latest / baseline,
    })
}

/// Streaming handover detector: keeps a sliding buffer twice the detection
/// window (the older half supplies the baseline), fires at most once per
/// load cycle, and re-arms only after the load recovers most of the way to
/// the baseline it triggered against.
#[derive(Debug, Clone)]
pub struct HandoverMonitor {
    cfg: GripConfig,
    buffer: VecDeque<(f64, f64)>,
    armed: bool,
    trigger_baseline: f64,
}

impl HandoverMonitor {
    pub fn new(cfg: GripConfig) -> Self {
        HandoverMonitor {
            cfg,
            buffer: VecDeque::new(),
            armed: true,
            trigger_baseline: 0.0,
        }
    }

    pub fn push(&mut self, t_s: f64, gravity_force_n: f64) -> Option<HandoverEvent> {
        self.buffer.push_back((t_s, gravity_force_n));
        while let Some(&(t_front, _)) = self.buffer.front() {
            if t_s - t_front > 2.0 * self.cfg.handover_window_s {
                self.buffer.pop_front();
            } else {
                break;
            }
        }
        if !self.armed {
            if gravity_force_n >= REARM_FRAC * self.trigger_baseline {
                self.armed = true;
            }
            return None;
        }
        let (a, b) = self.buffer.as_slices();
        let window: Vec<(f64, f64)> = a.iter().chain(b.iter()).copied().collect();
        let event = detect_handover(&window, &self.cfg)?;
        self.armed = false;
        self.trigger_baseline = gravity_force_n / (1.0 - event.confidence);
        Some(event)
    }
}
