//! Rank correlations and descriptive statistics over fitted parameters,
//! overall and per speaker.

use std::collections::BTreeMap;

use gesture_dynamics::dynamics::GestureParams;
use gesture_dynamics::fit::{fit_eq5, FitConfig};
use gesture_dynamics::segment::{lambda_series, ln_lambda_fit};
use gesture_dynamics::stats::{describe, param_correlation_report, spearman, spearman_permutation_p, ParamPoint};
use gesture_dynamics::synth::{generate_token, SynthSpec};

fn main() -> gesture_dynamics::Result<()> {
    let mut rs = Vec::new();
    let mut slopes = Vec::new();
    let mut targets = Vec::new();
    let mut metas = Vec::new();
    for (i, r) in [0.2, 0.25, 0.3, 0.36, 0.42, 0.5].into_iter().enumerate() {
        for (j, t) in [18.0, 21.0, 24.0].into_iter().enumerate() {
            let mut spec = SynthSpec::at_threshold_onset(GestureParams::new(t, r)?, 30.0, 0.2)?;
            spec.noise_sd = 0.02;
            spec.seed = (i * 3 + j) as u64;
            let tok = generate_token(&spec, &format!("t{i}{j}"))?.token;
            let fit = fit_eq5(&tok, &FitConfig::default())?;
            let slope = ln_lambda_fit(&lambda_series(&tok, tok.t_obs())?)?.slope;
            rs.push(fit.params.r);
            targets.push(fit.params.t);
            slopes.push(-slope);
            metas.push(BTreeMap::from([("speaker".to_string(), ["s1", "s2"][i % 2].to_string())]));
        }
    }

    let s = spearman(&rs, &slopes)?;
    println!("rho(r, -ln lambda slope) = {:.3}, p = {:.2e}, n = {}", s.rho, s.p_value, s.n);
    let d = describe(&rs)?;
    println!("fitted r: mean {:.3}, sd {:.3}, median {:.3}, range {:.3}..{:.3}", d.mean, d.sd, d.median, d.min, d.max);

    let small = spearman(&rs[..6], &targets[..6])?;
    println!(
        "first six tokens, r vs t: rho {:.3}, t-approximation p {:.3}, exact p {:.3}",
        small.rho,
        small.p_value,
        spearman_permutation_p(&rs[..6], &targets[..6])?
    );

    let points: Vec<ParamPoint> = rs
        .iter()
        .zip(&targets)
        .zip(&metas)
        .map(|((&r, &t), meta)| ParamPoint { r, t, meta })
        .collect();
    for g in param_correlation_report(&points, &["speaker"]) {
        match g.spearman {
            Some(s) => println!("speaker {:?}: n = {}, rho(r, t) = {:.3}", g.group, g.n, s.rho),
            None => println!("speaker {:?}: n = {}, too few tokens", g.group, g.n),
        }
    }
    Ok(())
}
