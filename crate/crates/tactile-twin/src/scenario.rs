use crate::calibration::{CalibrationGridSpec, CalibrationSet};
use crate::decode::decode;
use crate::error::{Result, TwinError};
use crate::grip::{grip_init, grip_update, GripCommand, GripConfig, HandoverEvent, HandoverMonitor};
use crate::params::SensorParams;
use crate::physics::forward_sample;
use crate::state::{DecodedState, RawSample, TactileState};

/// Default scenario sample rate, Hz: twenty samples per handover window.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 50.0;
/// Normal force of the reference 100 g test weight, N.
pub const TEST_WEIGHT_N: f64 = 0.981;

/// In-plane axis along which gravity pulls a held object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GravityAxis {
    X,
    Y,
}

/// How a segment moves between its endpoint states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interp {
    /// Stay at the start state.
    Hold,
    /// Straight-line blend from start to end.
    Linear,
    /// Oscillate from start to end and back at the given frequency.
    Sinusoid { freq_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration_s: f64,
    pub start: TactileState,
    pub end: TactileState,
    pub interp: Interp,
}

impl Segment {
    fn state_at(&self, t_s: f64) -> TactileState {
        let s = match self.interp {
            Interp::Hold => 0.0,
            Interp::Linear => (t_s / self.duration_s).clamp(0.0, 1.0),
            Interp::Sinusoid { freq_hz } => {
                (1.0 - (2.0 * std::f64::consts::PI * freq_hz * t_s).cos()) / 2.0
            }
        };
        let lerp = |a: f64, b: f64| a + (b - a) * s;
        TactileState {
            temperature_c: lerp(self.start.temperature_c, self.end.temperature_c),
            fz_n: lerp(self.start.fz_n, self.end.fz_n),
            fx_n: lerp(self.start.fx_n, self.end.fx_n),
            fy_n: lerp(self.start.fy_n, self.end.fy_n),
        }
    }
}

/// A scripted ground-truth trajectory: contiguous segments sampled at a
/// fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub sample_rate_hz: f64,
    pub segments: Vec<Segment>,
    /// When set, the handover monitor watches this tangential axis.
    pub gravity_axis: Option<GravityAxis>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(TwinError::InvalidInput(
                "sample rate must be positive".into(),
            ));
        }
        if self.segments.is_empty() {
            return Err(TwinError::InvalidInput(
                "scenario needs at least one segment".into(),
            ));
        }
        for seg in &self.segments {
            if !(seg.duration_s > 0.0) {
                return Err(TwinError::InvalidInput(
                    "segment durations must be positive".into(),
                ));
            }
            seg.start.validate()?;
            seg.end.validate()?;
            if let Interp::Sinusoid { freq_hz } = seg.interp {
                if !(freq_hz > 0.0) {
                    return Err(TwinError::InvalidInput(
                        "sinusoid frequency must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    /// Ground truth at a time; clamps to the trajectory ends.
    pub fn state_at(&self, t_s: f64) -> TactileState {
        let mut remaining = t_s.max(0.0);
        for seg in &self.segments {
            if remaining < seg.duration_s {
                return seg.state_at(remaining);
            }
            remaining -= seg.duration_s;
        }
        let last = self.segments.last().expect("validated non-empty");
        last.state_at(last.duration_s)
    }
}

/// Built-in scenario kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Static loads under a full temperature ramp: a 100 g weight, then an
    /// x-tangential pull, then a y-tangential pull.
    StaticSweep,
    /// Adaptive grasp under a sinusoidal tangential disturbance.
    GripJamming,
    /// Temperature staging of a stirred solution: heat, shake while
    /// cooling, reheat, repeat.
    SolutionPrep,
    /// Pour-and-handover: rising tangential load in three stages, then a
    /// rapid release.
    TeaHandover,
}

pub const SCENARIO_NAMES: [&str; 4] = [
    "static_sweep",
    "grip_jamming",
    "solution_prep",
    "tea_handover",
];

impl ScenarioKind {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "static_sweep" => Ok(ScenarioKind::StaticSweep),
            "grip_jamming" => Ok(ScenarioKind::GripJamming),
            "solution_prep" => Ok(ScenarioKind::SolutionPrep),
            "tea_handover" => Ok(ScenarioKind::TeaHandover),
            other => Err(TwinError::UnknownScenario(other.into())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::StaticSweep => "static_sweep",
            ScenarioKind::GripJamming => "grip_jamming",
            ScenarioKind::SolutionPrep => "solution_prep",
            ScenarioKind::TeaHandover => "tea_handover",
        }
    }

    /// Sensor parameters sized for the scenario's loads: the high-force
    /// scripts run the stiff build variant so their tangential peaks stay
    /// inside the shear range.
    pub fn params(&self) -> SensorParams {
        match self {
            ScenarioKind::StaticSweep | ScenarioKind::SolutionPrep => SensorParams::default(),
            ScenarioKind::GripJamming | ScenarioKind::TeaHandover => SensorParams::firm(),
        }
    }

    /// Calibration grid for the scenario's parameter set; the handover
    /// script starts below room temperature, so its grid reaches down to
    /// cover it.
    pub fn grid(&self) -> CalibrationGridSpec {
        self.grid_for(&self.params())
    }

    /// Same grid sizing for a caller-supplied parameter set.
    pub fn grid_for(&self, params: &SensorParams) -> CalibrationGridSpec {
        let mut grid = CalibrationGridSpec::for_params(params);
        if *self == ScenarioKind::TeaHandover {
            grid.t_min_c = grid.t_min_c.min(15.0);
        }
        grid
    }

    /// Grip configuration for the control scenarios; None where no gripper
    /// is in the loop.
    pub fn grip(&self) -> Option<GripConfig> {
        match self {
            ScenarioKind::StaticSweep | ScenarioKind::SolutionPrep => None,
            ScenarioKind::GripJamming => Some(GripConfig::default()),
            ScenarioKind::TeaHandover => Some(GripConfig {
                fz_max_n: 15.0,
                ..GripConfig::default()
            }),
        }
    }

    /// End of the pouring stages in the handover script, s; the release
    /// comes later.
    pub fn pour_end_s(&self) -> Option<f64> {
        matches!(self, ScenarioKind::TeaHandover).then_some(62.0)
    }
}

/// Optional adjustments applied by `gen_scenario`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScenarioOverrides {
    pub sample_rate_hz: Option<f64>,
    /// Pins every segment to one temperature (disables thermal ramps).
    pub constant_temperature_c: Option<f64>,
}

fn st(t: f64, fz: f64, fx: f64, fy: f64) -> TactileState {
    TactileState::new(t, fz, fx, fy)
}

fn seg(duration_s: f64, start: TactileState, end: TactileState, interp: Interp) -> Segment {
    Segment {
        duration_s,
        start,
        end,
        interp,
    }
}

fn static_sweep() -> Vec<Segment> {
    // temperature ramps 20 -> 80 across the full 200 s while the load steps
    let w = TEST_WEIGHT_N;
    vec![
        seg(50.0, st(20.0, 0.0, 0.0, 0.0), st(35.0, 0.0, 0.0, 0.0), Interp::Linear),
        seg(50.0, st(35.0, w, 0.0, 0.0), st(50.0, w, 0.0, 0.0), Interp::Linear),
        seg(50.0, st(50.0, w, 0.3, 0.0), st(65.0, w, 0.3, 0.0), Interp::Linear),
        seg(50.0, st(65.0, w, 0.0, 0.3), st(80.0, w, 0.0, 0.3), Interp::Linear),
    ]
}

fn grip_jamming() -> Vec<Segment> {
    // stationary grasp, sinusoidal in-plane disturbance, release, recovery
    let hold = st(25.0, 5.52, 0.0, 0.80);
    let low = st(25.0, 5.52, -0.62, 0.08);
    let high = st(25.0, 5.52, 1.24, 1.56);
    vec![
        seg(3.0, hold, hold, Interp::Hold),
        seg(0.5, hold, low, Interp::Linear),
        seg(4.0, low, high, Interp::Sinusoid { freq_hz: 0.5 }),
        seg(0.5, low, hold, Interp::Linear),
        seg(2.0, hold, hold, Interp::Hold),
    ]
}

fn solution_prep() -> Vec<Segment> {
    // heat to 75, then alternate 1 s agitation (temperature steady) with
    // 1 s cooling steps down to 60, reheat, repeat, settle
    let mut segs = vec![
        seg(60.0, st(20.0, 0.0, 0.0, 0.0), st(75.0, 0.0, 0.0, 0.0), Interp::Linear),
        seg(10.0, st(75.0, 0.0, 0.0, 0.0), st(75.0, 0.0, 0.0, 0.0), Interp::Hold),
    ];
    let round = |segs: &mut Vec<Segment>| {
        for k in 0..15 {
            let t_hi = 75.0 - k as f64;
            let shake_a = st(t_hi, 5.0, -0.35, 0.9);
            let shake_b = st(t_hi, 5.0, 0.35, 0.9);
            segs.push(seg(1.0, shake_a, shake_b, Interp::Sinusoid { freq_hz: 1.0 }));
            segs.push(seg(1.0, shake_a, st(t_hi - 1.0, 5.0, -0.35, 0.9), Interp::Linear));
        }
    };
    round(&mut segs);
    segs.push(seg(
        15.0,
        st(60.0, 0.0, 0.0, 0.0),
        st(75.0, 0.0, 0.0, 0.0),
        Interp::Linear,
    ));
    round(&mut segs);
    segs.push(seg(
        5.0,
        st(60.0, 0.0, 0.0, 0.0),
        st(60.0, 0.0, 0.0, 0.0),
        Interp::Hold,
    ));
    segs
}

fn tea_handover() -> Vec<Segment> {
    // three pouring stages raise weight and warmth, then a 0.3 s release
    vec![
        seg(5.0, st(18.5, 7.7, 0.0, 1.4), st(18.5, 7.7, 0.0, 1.4), Interp::Hold),
        seg(10.0, st(18.5, 7.7, 0.0, 1.4), st(25.7, 9.3, 0.0, 1.9), Interp::Linear),
        seg(17.0, st(25.7, 9.3, 0.0, 1.9), st(40.0, 10.9, 0.0, 2.4), Interp::Linear),
        seg(30.0, st(40.0, 10.9, 0.0, 2.4), st(55.0, 12.5, 0.0, 2.9), Interp::Linear),
        seg(5.0, st(55.0, 12.5, 0.0, 2.9), st(55.0, 12.5, 0.0, 2.9), Interp::Hold),
        seg(0.3, st(55.0, 12.5, 0.0, 2.9), st(55.0, 3.0, 0.0, 0.3), Interp::Linear),
        seg(2.0, st(55.0, 3.0, 0.0, 0.3), st(55.0, 3.0, 0.0, 0.3), Interp::Hold),
    ]
}

/// Builds a scripted scenario, optionally adjusted.
pub fn gen_scenario(kind: ScenarioKind, overrides: &ScenarioOverrides) -> Scenario {
    let mut segments = match kind {
        ScenarioKind::StaticSweep => static_sweep(),
        ScenarioKind::GripJamming => grip_jamming(),
        ScenarioKind::SolutionPrep => solution_prep(),
        ScenarioKind::TeaHandover => tea_handover(),
    };
    if let Some(t) = overrides.constant_temperature_c {
        for seg in &mut segments {
            seg.start.temperature_c = t;
            seg.end.temperature_c = t;
        }
    }
    let scenario = Scenario {
        name: kind.name().into(),
        sample_rate_hz: overrides.sample_rate_hz.unwrap_or(DEFAULT_SAMPLE_RATE_HZ),
        segments,
        gravity_axis: matches!(kind, ScenarioKind::TeaHandover).then_some(GravityAxis::Y),
    };
    scenario.validate().expect("built-in scenarios are valid");
    scenario
}

/// One sample of a replay: ground truth, raw channels, and whatever later
/// pipeline stages ran.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t_s: f64,
    pub gt: TactileState,
    pub raw: RawSample,
    pub dec: Option<DecodedState>,
    pub grip: Option<GripCommand>,
    pub event: Option<String>,
}

/// A sampled replay. Handover events are also kept separately with their
/// latencies; the rows carry only the event marker.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub handovers: Vec<HandoverEvent>,
}

impl Trace {
    pub fn sample_period_s(&self) -> Option<f64> {
        (self.rows.len() >= 2).then(|| self.rows[1].t_s - self.rows[0].t_s)
    }
}

fn sample_times(scn: &Scenario) -> Vec<f64> {
    let n = (scn.duration_s() * scn.sample_rate_hz).round() as usize;
    (0..=n).map(|k| k as f64 / scn.sample_rate_hz).collect()
}

/// Forward-only replay: ground truth and raw channels, no decoding.
pub fn simulate_scenario(scn: &Scenario, params: &SensorParams) -> Result<Trace> {
    scn.validate()?;
    params.validate()?;
    let mut rows = Vec::new();
    for (index, t) in sample_times(scn).into_iter().enumerate() {
        let gt = scn.state_at(t);
        let raw = forward_sample(&gt, params, t).map_err(|e| e.at_sample(index))?;
        rows.push(TraceRow {
            t_s: t,
            gt,
            raw,
            dec: None,
            grip: None,
            event: None,
        });
    }
    Ok(Trace {
        rows,
        handovers: Vec::new(),
    })
}

/// Full replay: forward models, staged decode, and (when configured) the
/// grip controller plus the handover monitor on the scenario's gravity
/// axis. Deterministic for a given seed.
pub fn run_scenario(
    scn: &Scenario,
    params: &SensorParams,
    cal: &CalibrationSet,
    grip: Option<&GripConfig>,
) -> Result<Trace> {
    scn.validate()?;
    params.validate()?;
    cal.validate()?;
    if let Some(cfg) = grip {
        cfg.validate()?;
    }
    let dt = 1.0 / scn.sample_rate_hz;
    let mut monitor = match (grip, scn.gravity_axis) {
        (Some(cfg), Some(_)) => Some(HandoverMonitor::new(cfg.clone())),
        _ => None,
    };
    let mut prev_cmd: Option<GripCommand> = None;
    let mut rows = Vec::new();
    let mut handovers = Vec::new();
    for (index, t) in sample_times(scn).into_iter().enumerate() {
        let gt = scn.state_at(t);
        let raw = forward_sample(&gt, params, t).map_err(|e| e.at_sample(index))?;
        let dec = decode(&raw, cal).map_err(|e| e.at_sample(index))?;
        let cmd = grip.map(|cfg| match prev_cmd {
            None => grip_init(&dec, cfg),
            Some(prev) => grip_update(&dec, cfg, &prev, dt),
        });
        prev_cmd = cmd;
        let mut event = None;
        if let Some(mon) = monitor.as_mut() {
            let f = match scn.gravity_axis.expect("monitor implies axis") {
                GravityAxis::X => dec.fx_n,
                GravityAxis::Y => dec.fy_n,
            };
            if let Some(e) = mon.push(t, f) {
                handovers.push(e);
                event = Some("handover".to_string());
            }
        }
        rows.push(TraceRow {
            t_s: t,
            gt,
            raw,
            dec: Some(dec),
            grip: cmd,
            event,
        });
    }
    Ok(Trace { rows, handovers })
}

/// Fills the decoded columns of a raw trace.
pub fn decode_trace(trace: &Trace, cal: &CalibrationSet) -> Result<Trace> {
    let mut out = trace.clone();
    for (index, row) in out.rows.iter_mut().enumerate() {
        row.dec = Some(decode(&row.raw, cal).map_err(|e| e.at_sample(index))?);
    }
    Ok(out)
}
