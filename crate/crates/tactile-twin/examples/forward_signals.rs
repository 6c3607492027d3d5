//! Prints each transduction channel over its working range, then the
//! cross-channel blindness that makes staged decoding possible: tangential
//! load leaves the temperature and normal channels untouched.

use tactile_twin::physics::{capacitor_frequency, halbach_field, iongel_current};
use tactile_twin::{Result, SensorParams, TactileState};

fn main() -> Result<()> {
    let p = SensorParams::default();

    println!("ion-gel current vs temperature (rest)");
    for k in 0..=6 {
        let t = 20.0 + 10.0 * k as f64;
        let i = iongel_current(&TactileState::at_rest(t), &p.iongel);
        println!("  {t:5.1} degC -> {i:7.3} uA");
    }

    println!("oscillator frequency vs normal load (25 degC)");
    for fz in [0.0, 0.5, 1.0, 2.0, 4.0, 7.0] {
        let (f, _) = capacitor_frequency(&TactileState::new(25.0, fz, 0.0, 0.0), &p.capacitor);
        println!("  {fz:4.1} N -> {f:7.1} Hz");
    }

    println!("radial field vs tangential load (25 degC, Fz = 3 N)");
    for tau in [0.0, 0.25, 0.5, 0.75, 1.0, 1.25] {
        let (bx, by, _) =
            halbach_field(&TactileState::new(25.0, 3.0, tau, 0.0), &p.halbach, &p.capacitor)?;
        println!("  {tau:4.2} N -> {:7.1} uT", bx.hypot(by));
    }

    let pure = TactileState::new(40.0, 3.0, 0.0, 0.0);
    let sheared = TactileState::new(40.0, 3.0, 0.8, 0.6);
    let (f_pure, _) = capacitor_frequency(&pure, &p.capacitor);
    let (f_shear, _) = capacitor_frequency(&sheared, &p.capacitor);
    println!("frequency, pure vs sheared load: {f_pure:.3} vs {f_shear:.3} Hz (bit-identical: {})",
        f_pure.to_bits() == f_shear.to_bits());
    let i_pure = iongel_current(&pure, &p.iongel);
    let i_shear = iongel_current(&sheared, &p.iongel);
    println!("current,   pure vs sheared load: {i_pure:.4} vs {i_shear:.4} uA (bit-identical: {})",
        i_pure.to_bits() == i_shear.to_bits());
    Ok(())
}
