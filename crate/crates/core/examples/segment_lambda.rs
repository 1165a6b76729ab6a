//! Find a movement in a recording and look at how lambda, the time left to
//! reach the target at the current speed, decays over it.

use gesture_dynamics::dynamics::GestureParams;
use gesture_dynamics::segment::{lambda_series, ln_lambda_fit};
use gesture_dynamics::synth::{generate_token, SynthSpec};

fn main() -> gesture_dynamics::Result<()> {
    let mut spec = SynthSpec::at_threshold_onset(GestureParams::new(22.0, 0.3)?, 30.0, 0.2)?;
    spec.noise_sd = 0.01;
    let tok = generate_token(&spec, "demo")?.token;

    println!(
        "onset {} offset {} ({} samples), x0 = {:.3} mm, observed target {:.3} mm, flags {:?}",
        tok.onset(),
        tok.offset(),
        tok.window_len(),
        tok.x0(),
        tok.t_obs(),
        tok.flags()
    );

    let lambda = lambda_series(&tok, tok.t_obs())?;
    for (i, l) in lambda.values.iter().enumerate() {
        println!("{i:>3} lambda {l:>8.3}");
    }
    let fit = ln_lambda_fit(&lambda)?;
    println!(
        "ln lambda slope {:.4} per sample (generating r = {}), R^2 {:.4}",
        fit.slope, spec.params.r, fit.r_squared
    );
    Ok(())
}
