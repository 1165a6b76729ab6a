//! Release acceptance checks. Prints one line per criterion and exits
//! non-zero if any criterion fails. Criterion 12 runs only when
//! `GESTURE_DYNAMICS_CORPUS` names a directory of recordings (with an optional
//! metadata table in `GESTURE_DYNAMICS_METADATA`).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use gesture_dynamics::batch::{self, RunConfig, CORPUS_FILE, METADATA_FILE};
use gesture_dynamics::dynamics::{
    appendix_a_residual, closed_form_state, simulate_paper_euler, simulate_rk4, EulerOptions,
    GestureParams, MsdParams, Rk4Options, StopRule,
};
use gesture_dynamics::fit::{fit_eq5, fit_msd, FitConfig};
use gesture_dynamics::segment::{lambda_series, ln_lambda_fit, MovementToken};
use gesture_dynamics::signal::{resample_pchip, Butterworth, SampledSeries, Trajectory};
use gesture_dynamics::stats::{describe, kinematic_summary, linear_regression, spearman, KinematicSummary};
use gesture_dynamics::synth::{
    generate_msd_token, generate_token, lambda0_for_onset_fraction, sweep, DerivativeSource, SweepBase,
    SweepGrid, SynthSpec, SynthToken,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

struct Draw {
    x0: f64,
    v0: f64,
    p: GestureParams,
}

/// Random valid problems: closing or opening movements with
/// r in [0.1, 0.8], displacement in [2, 15] mm and r * lambda0 in [2, 15].
fn draws(n: usize, seed: u64) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = rng.gen_range(0.1..0.8);
            let d = rng.gen_range(2.0..15.0);
            let x0 = rng.gen_range(20.0..40.0);
            let dir = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
            let lambda0 = rng.gen_range(2.0..15.0) / r;
            let t = x0 + dir * d;
            Draw {
                x0,
                v0: (t - x0) / lambda0,
                p: GestureParams::new(t, r).unwrap(),
            }
        })
        .collect()
}

fn rk4(d: &Draw, dense: bool) -> Trajectory {
    let mut opts = Rk4Options::new(0.001, StopRule::SpeedBelow(0.5 * d.v0.abs()));
    if dense {
        opts = opts.dense();
    }
    simulate_rk4(d.x0, d.v0, &d.p, &opts).unwrap()
}

fn c1_closed_form() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for d in draws(50, 1) {
        let tr = rk4(&d, false);
        let cf = closed_form_state(tr.len(), d.x0, d.v0, &d.p, 0.01).unwrap();
        for (a, b) in tr.state().values().iter().zip(cf.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-7 && secs < 10.0,
        format!("max |closed form - RK4| = {worst:.2e} mm over 50 draws in {secs:.2} s (limits 1e-7 mm, 10 s)"),
    )
}

fn c2_lambda_identity() -> Outcome {
    let (mut worst, mut control_min) = (0.0f64, f64::INFINITY);
    for d in draws(50, 2) {
        worst = worst.max(appendix_a_residual(&rk4(&d, true), &d.p).unwrap());
        // lambda grows instead of decaying
        let flipped = GestureParams { t: d.p.t, r: -d.p.r };
        let opts = Rk4Options::new(0.001, StopRule::Samples(30)).dense();
        let control = simulate_rk4(d.x0, d.v0, &flipped, &opts).unwrap();
        control_min = control_min.min(appendix_a_residual(&control, &d.p).unwrap());
    }
    verdict(
        worst < 1e-6 && control_min > 0.1,
        format!("max residual {worst:.2e} (< 1e-6); smallest control residual {control_min:.3} (> 0.1)"),
    )
}

fn exact_token(t: f64, r: f64, x0: f64) -> (SynthSpec, MovementToken) {
    let mut s = SynthSpec::at_threshold_onset(GestureParams::new(t, r).unwrap(), x0, 0.2).unwrap();
    s.derivatives = DerivativeSource::Integrator;
    let tok = generate_token(&s, &format!("r{r}-t{t}")).unwrap().token;
    (s, tok)
}

const SWEEP_R: [f64; 8] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

fn sweep_displacements() -> Vec<f64> {
    (2..=15).map(f64::from).collect()
}

fn c3_exponential_decay() -> Outcome {
    let (mut min_r2, mut worst_slope) = (f64::INFINITY, 0.0f64);
    let mut n = 0;
    for r in SWEEP_R {
        for d in sweep_displacements() {
            let (s, tok) = exact_token(30.0 - d, r, 30.0);
            let fit = ln_lambda_fit(&lambda_series(&tok, s.params.t).unwrap()).unwrap();
            min_r2 = min_r2.min(fit.r_squared);
            worst_slope = worst_slope.max((fit.slope + r).abs());
            n += 1;
        }
    }
    verdict(
        min_r2 >= 0.9999 && worst_slope <= 1e-6,
        format!("{n} tokens: min ln-lambda R^2 = {min_r2:.12}, max |slope + r| = {worst_slope:.2e} per sample"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn c4_recovery() -> Outcome {
    let cfg = FitConfig::default();
    let (mut worst_rel, mut min_r2) = (0.0f64, f64::INFINITY);
    for r in SWEEP_R {
        for d in [2.0, 5.0, 9.0, 15.0] {
            for dir in [-1.0, 1.0] {
                let (s, tok) = exact_token(30.0 + dir * d, r, 30.0);
                let f = fit_eq5(&tok, &cfg).unwrap();
                worst_rel = worst_rel
                    .max((f.params.t / s.params.t - 1.0).abs())
                    .max((f.params.r / r - 1.0).abs());
                min_r2 = min_r2.min(f.r_squared);
            }
        }
    }
    let (mut dr, mut dt) = (Vec::new(), Vec::new());
    for seed in 0..100 {
        let mut s = SynthSpec::at_threshold_onset(GestureParams::new(22.82, 0.36).unwrap(), 30.0, 0.2).unwrap();
        s.derivatives = DerivativeSource::Integrator;
        s.accel_noise_frac = 0.05;
        s.seed = seed;
        let tok = generate_token(&s, "noisy").unwrap().token;
        let f = fit_eq5(&tok, &cfg).unwrap();
        dr.push((f.params.r - 0.36).abs());
        dt.push((f.params.t - 22.82).abs());
    }
    let (mr, mt) = (median(dr), median(dt));
    verdict(
        worst_rel <= 1e-6 && min_r2 >= 1.0 - 1e-10 && mr <= 0.05 && mt <= 0.5,
        format!(
            "noiseless: max rel error {worst_rel:.2e}, min R^2 1 - {:.1e}; 5% noise: median |dr| = {mr:.4}, median |dt| = {mt:.4} mm",
            1.0 - min_r2
        ),
    )
}

/// Movement from an onset at `fraction` of peak speed, run until the speed
/// falls below the onset speed. `None` for the unit-step scheme when it
/// fails (it diverges once lambda drops below `1 / (1 + r)` samples).
fn from_onset(r: f64, d: f64, fraction: f64, euler: bool) -> Option<(GestureParams, Trajectory)> {
    let p = GestureParams::new(30.0 - d, r).unwrap();
    let v0 = -d / lambda0_for_onset_fraction(r, fraction).unwrap();
    let tr = if euler {
        simulate_paper_euler(30.0, v0, &p, &EulerOptions::stop_below(v0.abs())).ok()?
    } else {
        simulate_rk4(30.0, v0, &p, &Rk4Options::new(0.001, StopRule::SpeedBelow(v0.abs()))).unwrap()
    };
    Some((p, tr))
}

fn local_maxima(v: &[f64]) -> usize {
    let s: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    (0..s.len())
        .filter(|&i| (i == 0 || s[i] > s[i - 1]) && (i + 1 == s.len() || s[i] > s[i + 1]))
        .count()
}

fn single_peak_no_crossing(p: &GestureParams, tr: &Trajectory) -> bool {
    let crossed = tr.state().values().iter().any(|x| (p.t - x) * (p.t - 30.0) <= 0.0);
    local_maxima(tr.velocity().values()) == 1 && !crossed
}

fn c5_single_peak() -> Outcome {
    let mut bad = Vec::new();
    let (mut n, mut euler_ok) = (0, 0);
    for r in SWEEP_R {
        for d in sweep_displacements() {
            n += 1;
            let (p, tr) = from_onset(r, d, 0.02, false).unwrap();
            if !single_peak_no_crossing(&p, &tr) {
                bad.push(format!("r={r} d={d}"));
            }
            if from_onset(r, d, 0.2, true).is_some_and(|(p, tr)| single_peak_no_crossing(&p, &tr)) {
                euler_ok += 1;
            }
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "{n} reference simulations from near rest, {} violations {bad:?}; unit-step scheme single-peaked in {euler_ok}/{n}",
            bad.len()
        ),
    )
}

fn whole_movement_kinematics(p: &GestureParams, tr: Trajectory) -> KinematicSummary {
    let n = tr.len();
    let tok = MovementToken::new("sim", tr, 0, n - 1, p.t, BTreeMap::new()).unwrap();
    kinematic_summary(&tok).unwrap()
}

fn simulated_kinematics(r: f64, d: f64, euler: bool) -> Option<KinematicSummary> {
    from_onset(r, d, 0.2, euler).map(|(p, tr)| whole_movement_kinematics(&p, tr))
}

fn c6_rel_time_to_peak() -> Outcome {
    let (mut rel, mut rel_dense, mut rel_euler) = (Vec::new(), Vec::new(), Vec::new());
    for r in SWEEP_R {
        for d in sweep_displacements() {
            rel.push(simulated_kinematics(r, d, false).unwrap().rel_time_to_peak);
            rel_euler.extend(simulated_kinematics(r, d, true).map(|k| k.rel_time_to_peak));
            // the same movement at the integration step, ending at the first
            // step whose speed is back below the onset speed
            let p = GestureParams::new(30.0 - d, r).unwrap();
            let v0 = -d / lambda0_for_onset_fraction(r, 0.2).unwrap();
            let whole = from_onset(r, d, 0.2, false).unwrap().1.len();
            let opts = Rk4Options::new(0.001, StopRule::Samples(whole + 1)).dense();
            let v = simulate_rk4(30.0, v0, &p, &opts).unwrap().velocity().values().to_vec();
            let peak = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
            let end = (peak..v.len()).find(|&i| v[i].abs() < v0.abs()).unwrap();
            rel_dense.push(peak as f64 / end as f64);
        }
    }
    let desc = describe(&rel).unwrap();
    let dense = describe(&rel_dense).unwrap();
    let eu = describe(&rel_euler).unwrap();
    verdict(
        desc.sd <= 0.05 && (0.5..=0.7).contains(&desc.mean),
        format!(
            "{} reference simulations at 100 Hz: mean {:.4} (in [0.5, 0.7]), sd {:.4} (<= 0.05); \
             read at the integration step: mean {:.4}, sd {:.1e}; unit-step scheme ({} runs): mean {:.4}, sd {:.4}",
            desc.n, desc.mean, desc.sd, dense.mean, dense.sd, eu.n, eu.mean, eu.sd
        ),
    )
}

/// Signs of the mean residual of a linear fit within each third of the
/// points. Means below `floor` count as zero.
fn tercile_signs(xs: &[f64], ys: &[f64], floor: f64) -> (Vec<i8>, f64) {
    let fit = linear_regression(xs, ys).unwrap();
    let res: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - fit.predict(*x)).collect();
    let n = res.len();
    let cuts = [0, n / 3, n - n / 3, n];
    let signs = cuts
        .windows(2)
        .map(|w| {
            let m = res[w[0]..w[1]].iter().sum::<f64>() / (w[1] - w[0]) as f64;
            if m.abs() <= floor {
                0
            } else if m > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    (signs, res.iter().fold(0.0f64, |m, r| m.max(r.abs())))
}

fn c7_peak_velocity_curvature() -> Outcome {
    let ds: Vec<f64> = (0..10).map(|i| 2.0 + 13.0 * i as f64 / 9.0).collect();
    let peaks: Vec<f64> = ds
        .iter()
        .map(|&d| simulated_kinematics(0.36, d, true).unwrap().peak_velocity)
        .collect();
    let rho = spearman(&ds, &peaks).unwrap().rho;
    let strictly = peaks.windows(2).all(|w| w[1] > w[0]);
    let scale = peaks.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let (signs, max_res) = tercile_signs(&ds, &peaks, 1e-9 * scale);
    let curved = signs == [-1, 1, -1] || signs == [1, -1, 1];

    // same grid with the onset speed held fixed instead of lambda0
    let v0 = -0.2;
    let fixed_v: Vec<f64> = ds
        .iter()
        .map(|&d| {
            let p = GestureParams::new(30.0 - d, 0.36).unwrap();
            let tr = simulate_paper_euler(30.0, v0, &p, &EulerOptions::stop_below(0.2)).unwrap();
            whole_movement_kinematics(&p, tr).peak_velocity
        })
        .collect();
    let (companion, _) = tercile_signs(&ds, &fixed_v, 1e-9 * scale);
    verdict(
        strictly && rho == 1.0 && curved,
        format!(
            "rho = {rho}, strictly increasing = {strictly}; residual signs by tercile {signs:?} \
             (max |residual| {max_res:.1e} mm/s: peak speed is proportional to displacement at fixed r and lambda0); \
             with v0 fixed instead: {companion:?}"
        ),
    )
}

fn noisy_corpus() -> Vec<SynthToken> {
    let grid = SweepGrid {
        r: vec![0.15, 0.2, 0.25, 0.3, 0.36, 0.45, 0.55, 0.7],
        displacement: vec![3.0, 5.0, 7.0, 10.0, 13.0],
        x0: vec![30.0],
        noise_sd: vec![0.02],
        seeds: (0..5).collect(),
        base: SweepBase::default(),
    };
    sweep(&grid).unwrap()
}

fn c8_r_slope_link(corpus: &[SynthToken]) -> Outcome {
    let (mut rs, mut slopes) = (Vec::new(), Vec::new());
    for st in corpus {
        let tok = &st.token;
        let f = fit_eq5(tok, &FitConfig::default()).unwrap();
        let l = ln_lambda_fit(&lambda_series(tok, tok.t_obs()).unwrap()).unwrap();
        rs.push(f.params.r);
        slopes.push(-l.slope);
    }
    let s = spearman(&rs, &slopes).unwrap();
    verdict(s.rho >= 0.9, format!("{} tokens: rho(fitted r, -ln lambda slope) = {:.4}", s.n, s.rho))
}

fn c9_baseline(corpus: &[SynthToken]) -> Outcome {
    let mut wins = 0;
    for st in corpus {
        let f = fit_eq5(&st.token, &FitConfig::default()).unwrap();
        let m = fit_msd(&st.token).unwrap();
        if f.r_squared > m.r_squared {
            wins += 1;
        }
    }
    let share = wins as f64 / corpus.len() as f64;
    let mut worst = 0.0f64;
    for (k, b) in [(0.1, 0.5), (0.05, 0.3), (0.2, 0.9), (0.02, 0.1)] {
        let p = MsdParams::new(k, b, 20.0).unwrap();
        let tok = generate_msd_token(&p, 30.0, -0.3, 100.0, 0.2, "msd").unwrap();
        let m = fit_msd(&tok).unwrap();
        worst = worst.max((m.k / k - 1.0).abs()).max((m.b / b - 1.0).abs());
    }
    verdict(
        share >= 0.95 && worst < 1e-10,
        format!(
            "model beats baseline on {wins}/{} tokens ({:.1}%); mass-spring recovery max rel error {worst:.1e}",
            corpus.len(),
            100.0 * share
        ),
    )
}

fn brute_rank_corr(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn c10_numerics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_rho = 0.0f64;
    let mut rho_mismatch = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(3..=12);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
        match (spearman(&xs, &ys).ok(), brute_rank_corr(&xs, &ys)) {
            (Some(s), Some(b)) => worst_rho = worst_rho.max((s.rho - b).abs()),
            (None, None) => {}
            _ => rho_mismatch += 1,
        }
    }

    let bw = Butterworth::lowpass(5, 20.0, 100.0).unwrap();
    let omega = 2.0 * std::f64::consts::PI * 0.2;
    let x: Vec<f64> = (0..2000).map(|i| (omega * i as f64).sin()).collect();
    let y = bw.filter(&x);
    let tail = 1500..2000;
    let (mut s, mut c) = (0.0, 0.0);
    for i in tail.clone() {
        s += y[i] * (omega * i as f64).sin();
        c += y[i] * (omega * i as f64).cos();
    }
    let gain = 2.0 * (s * s + c * c).sqrt() / tail.len() as f64;
    let gain_err = (gain * std::f64::consts::SQRT_2 - 1.0).abs();

    let mut pchip_bad = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=30);
        let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        y.sort_by(f64::total_cmp);
        if rng.gen_bool(0.5) {
            y.reverse();
        }
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m = rng.gen_range(2..=200);
        let out = resample_pchip(&SampledSeries::new(y, 0.01, "mm").unwrap(), m).unwrap();
        if out.values().iter().any(|v| *v < lo || *v > hi) {
            pchip_bad += 1;
        }
    }
    verdict(
        worst_rho <= 1e-12 && rho_mismatch == 0 && gain_err < 0.01 && pchip_bad == 0,
        format!(
            "spearman vs brute force max diff {worst_rho:.1e} ({rho_mismatch} definedness mismatches); \
             gain at cutoff {gain:.5} ({:.3}% from 1/sqrt 2); pchip out of bounds {pchip_bad}/1000",
            100.0 * gain_err
        ),
    )
}

fn c11_determinism() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let n = batch::generate_corpus(&RunConfig::default(), &corpus).unwrap();
    let mut outputs: Vec<BTreeMap<String, Vec<u8>>> = Vec::new();
    for (run, jobs) in [1, 8, 1, 8].into_iter().enumerate() {
        let cfg = RunConfig {
            inputs: vec![corpus.join(CORPUS_FILE)],
            metadata: Some(corpus.join(METADATA_FILE)),
            jobs: Some(jobs),
            out: dir.path().join(format!("run{run}")),
            ..Default::default()
        };
        let bundle = batch::run_pipeline(&cfg).unwrap();
        batch::emit(&bundle, &cfg.out).unwrap();
        outputs.push(
            std::fs::read_dir(&cfg.out)
                .unwrap()
                .map(|e| {
                    let p = e.unwrap().path();
                    (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
                })
                .collect(),
        );
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        identical && n == 45 && secs < 30.0,
        format!(
            "{n}-token corpus, 4 runs at 1 and 8 workers: {} files each, identical = {identical}, {secs:.2} s (< 30 s)",
            outputs[0].len()
        ),
    )
}

fn c12_recorded_corpus() -> Outcome {
    let Some(dir) = std::env::var_os("GESTURE_DYNAMICS_CORPUS").map(PathBuf::from) else {
        return Skip("no corpus supplied (set GESTURE_DYNAMICS_CORPUS)".into());
    };
    let cfg = RunConfig {
        inputs: vec![dir],
        metadata: std::env::var_os("GESTURE_DYNAMICS_METADATA").map(PathBuf::from),
        ..Default::default()
    };
    let bundle = match batch::run_pipeline(&cfg) {
        Ok(b) => b,
        Err(e) => return Fail(format!("pipeline error: {e}")),
    };
    let d = &bundle.summary.distributions;
    let (Some(r2), Some(rel)) = (d.get("fit_r2"), d.get("rel_time_to_peak")) else {
        return Fail("no analyzed tokens".into());
    };
    verdict(
        (r2.mean - 0.88).abs() <= 0.05 && (rel.mean - 0.61).abs() <= 0.03,
        format!(
            "{} tokens analyzed: mean fit R^2 {:.3} (0.88 +- 0.05), mean rel time to peak {:.3} (0.61 +- 0.03)",
            bundle.summary.counts.analyzed, r2.mean, rel.mean
        ),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let corpus = noisy_corpus();
    let criteria: Vec<Criterion> = vec![
        ("closed form matches RK4", Box::new(c1_closed_form)),
        ("lambda decay identity", Box::new(c2_lambda_identity)),
        ("exponential lambda decay", Box::new(c3_exponential_decay)),
        ("parameter recovery", Box::new(c4_recovery)),
        ("single velocity peak", Box::new(c5_single_peak)),
        ("relative time to peak", Box::new(c6_rel_time_to_peak)),
        ("peak velocity vs displacement curvature", Box::new(c7_peak_velocity_curvature)),
        ("r vs ln lambda slope", Box::new(|| c8_r_slope_link(&corpus))),
        ("baseline separation", Box::new(|| c9_baseline(&corpus))),
        ("numerics oracles", Box::new(c10_numerics)),
        ("determinism", Box::new(c11_determinism)),
        ("recorded corpus", Box::new(c12_recorded_corpus)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
    }
    println!("acceptance: {failed} of {} criteria failed", criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
