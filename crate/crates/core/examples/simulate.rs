//! The same movement three ways: the exact solution, a fine Runge-Kutta
//! integration and the one-step-per-sample scheme.

use gesture_dynamics::dynamics::{
    closed_form_state, simulate_paper_euler, simulate_rk4, EulerOptions, GestureParams, Rk4Options, StopRule,
};
use gesture_dynamics::synth::lambda0_for_onset_fraction;

fn main() -> gesture_dynamics::Result<()> {
    let p = GestureParams::new(22.82, 0.36)?;
    let x0 = 30.0;
    // onset at 20% of the eventual peak speed
    let v0 = (p.t - x0) / lambda0_for_onset_fraction(p.r, 0.2)?;

    let rk4 = simulate_rk4(x0, v0, &p, &Rk4Options::new(0.001, StopRule::SpeedBelow(v0.abs())))?;
    let exact = closed_form_state(rk4.len(), x0, v0, &p, 0.01)?;
    let euler = simulate_paper_euler(x0, v0, &p, &EulerOptions::stop_below(v0.abs()))?;

    println!("sample      exact        rk4      euler");
    for i in 0..rk4.len().max(euler.len()) {
        let e = euler.state().values().get(i).map_or(String::new(), |x| format!("{x:>10.4}"));
        let k = rk4.state().values().get(i).map_or(String::new(), |x| format!("{x:>10.4}"));
        let c = exact.values().get(i).map_or(String::new(), |x| format!("{x:>10.4}"));
        println!("{i:>6} {c:>10} {k:>10} {e:>10}");
    }

    // the one-step scheme overshoots once lambda drops below 1 / (1 + r) samples
    let fast = GestureParams::new(25.0, 0.8)?;
    let v0 = (fast.t - x0) / lambda0_for_onset_fraction(fast.r, 0.2)?;
    match simulate_paper_euler(x0, v0, &fast, &EulerOptions::stop_below(v0.abs())) {
        Ok(t) => println!("r = 0.8: {} samples", t.len()),
        Err(e) => println!("r = 0.8 with one step per sample: {e}"),
    }
    Ok(())
}
