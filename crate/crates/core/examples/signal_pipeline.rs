//! Lip aperture from two sensor tracks, then smoothing, differencing and a
//! zero-phase lowpass to get velocity and acceleration.

use gesture_dynamics::signal::{
    differentiate_pipeline, lip_aperture, per_sample_to_per_second, resample_pchip, FilterConfig, SensorTrack,
    SmoothConfig,
};

fn main() -> gesture_dynamics::Result<()> {
    let dt = 0.01;
    let n = 80;
    // lower lip rises toward the upper lip with a smooth S-curve, plus a little jitter
    let upper: Vec<[f64; 3]> = (0..n).map(|_| [0.0, 0.0, 10.0]).collect();
    let lower: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let s = 1.0 / (1.0 + (-(i as f64 - 40.0) / 4.0).exp());
            let jitter = 0.02 * ((i * 7919) % 13) as f64 / 13.0;
            [1.0, 0.0, -20.0 + 12.0 * s + jitter]
        })
        .collect();
    let aperture = lip_aperture(&SensorTrack::new(upper, dt), &SensorTrack::new(lower, dt))?;

    let traj = differentiate_pipeline(&aperture, &SmoothConfig::default(), &FilterConfig::default())?;
    let v = traj.velocity().values();
    let (peak, vmax) = v.iter().enumerate().fold((0, 0.0f64), |m, (i, x)| if x.abs() > m.1.abs() { (i, *x) } else { m });
    println!(
        "aperture {:.2} -> {:.2} mm, peak velocity {:.1} mm/s at sample {peak}",
        aperture.values()[0],
        aperture.values()[n - 1],
        per_sample_to_per_second(vmax, dt)
    );

    let grid = resample_pchip(traj.state(), 10)?;
    let shown: Vec<String> = grid.values().iter().map(|x| format!("{x:.2}")).collect();
    println!("smoothed aperture on a 10-point grid: {}", shown.join(" "));
    Ok(())
}
