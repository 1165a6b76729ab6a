//! Fit target and rapidity to a noisy token, compare with the mass-spring
//! baseline, and replay the fitted parameters against the observation.

use gesture_dynamics::dynamics::GestureParams;
use gesture_dynamics::fit::{fit_eq5, fit_msd, simulate_and_score, FitConfig};
use gesture_dynamics::synth::{generate_token, SynthSpec};

fn main() -> gesture_dynamics::Result<()> {
    let truth = GestureParams::new(22.82, 0.36)?;
    let mut spec = SynthSpec::at_threshold_onset(truth, 30.0, 0.2)?;
    spec.noise_sd = 0.02;
    spec.seed = 7;
    let tok = generate_token(&spec, "fit-demo")?.token;

    let fit = fit_eq5(&tok, &FitConfig::default())?;
    println!(
        "fitted t = {:.3} mm (true {}), r = {:.4} (true {}), R^2 = {:.4}, {} iterations",
        fit.params.t, truth.t, fit.params.r, truth.r, fit.r_squared, fit.iterations
    );

    let msd = fit_msd(&tok)?;
    println!("mass-spring with the target fixed: k = {:.4}, b = {:.4}, R^2 = {:.4}", msd.k, msd.b, msd.r_squared);

    let score = simulate_and_score(&tok, &fit)?;
    println!(
        "replayed {} samples: R^2 state {:.3}, velocity {:.3}, acceleration {:.3}",
        score.simulated_samples, score.r2_state, score.r2_velocity, score.r2_accel
    );
    if let Some(k) = score.kinematics {
        println!(
            "simulated duration {:.0} ms, peak velocity {:.1} mm/s, relative time to peak {:.2}",
            k.duration, k.peak_velocity, k.rel_time_to_peak
        );
    }
    Ok(())
}
