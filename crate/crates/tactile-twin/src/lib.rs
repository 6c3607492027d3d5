//! Software twin of a multi-layer tactile sensor.
//!
//! The sensor stacks three transduction layers that share one contact pad:
//! an ion-gel film whose current grows exponentially with temperature, a
//! spiral-plate capacitor whose resonant frequency drops as normal load
//! compresses the gap, and a Halbach magnet over a Hall element whose
//! in-plane field components rotate and grow with tangential load. This
//! crate provides the forward signal models, calibration fitting, the staged
//! decoder that recovers temperature and the 3D force vector from the raw
//! channels, a grip controller with slip margin and handover detection, and
//! scripted scenarios for end-to-end replay.

pub mod calibration;
pub mod checks;
pub mod decode;
pub mod error;
pub mod fit;
pub mod grip;
pub mod params;
pub mod physics;
pub mod scenario;
pub mod state;
pub mod trace;

pub use calibration::{
    generate_calibration, validate_calibration, CalibrationGridSpec, CalibrationSet, SweepData,
};
pub use checks::{run_all, run_check, CheckReport};
pub use decode::{decode, decode_normal, decode_tangential, decode_temperature};
pub use error::{Result, TwinError};
pub use fit::{fit_hall_drift, fit_piecewise_linear, fit_temperature_poly, PiecewiseLinear};
pub use grip::{detect_handover, grip_update, slip_margin, GripCommand, GripConfig, GripPhase};
pub use params::{CapacitorParams, HalbachParams, IonGelParams, SensorParams};
pub use scenario::{
    decode_trace, gen_scenario, run_scenario, simulate_scenario, Scenario, ScenarioKind, Trace,
    TraceRow,
};
pub use state::{DecodedState, RawSample, TactileState};
