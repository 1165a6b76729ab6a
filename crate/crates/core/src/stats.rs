//! Kinematic variables, descriptive statistics, least-squares lines and rank
//! correlation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::segment::MovementToken;

/// Per-token kinematic variables in report units (ms, mm, mm/s, 1/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSummary {
    pub duration: f64,
    pub max_displacement: f64,
    pub peak_velocity: f64,
    pub time_to_peak: f64,
    pub rel_time_to_peak: f64,
    pub kinematic_stiffness: f64,
}

/// Kinematics of the token's `[onset, offset]` window. Displacement is the
/// onset state minus the observed target; the peak is the largest `|v|`
/// (earliest on ties).
pub fn kinematic_summary(token: &MovementToken) -> Result<KinematicSummary> {
    let (onset, offset) = (token.onset(), token.offset());
    if offset <= onset {
        return Err(Error::Degenerate("zero-duration movement window".into()));
    }
    let traj = token.trajectory();
    let dt = traj.dt();
    let (peak_idx, peak_v) = crate::segment::find_velocity_peak(traj.velocity(), onset..offset + 1)?;
    let duration = (offset - onset) as f64 * dt;
    let time_to_peak = (peak_idx - onset) as f64 * dt;
    let max_displacement = (token.x0() - token.t_obs()).abs();
    let peak_velocity = peak_v.abs() / traj.sample_period();
    Ok(KinematicSummary {
        duration: duration * 1e3,
        max_displacement,
        peak_velocity,
        time_to_peak: time_to_peak * 1e3,
        rel_time_to_peak: time_to_peak / duration,
        kinematic_stiffness: peak_velocity / max_displacement,
    })
}

/// Coefficient of determination `1 - SS_res / SS_tot`; may be negative.
///
/// When the observations have zero variance the ratio is undefined: the
/// result is 1 if the prediction also matches them exactly (to rounding) and
/// 0 otherwise.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    if observed.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: predicted.len(),
        });
    }
    if observed.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: observed.len(),
        });
    }
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_res: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p) * (o - p))
        .sum();
    let constant = observed.iter().all(|&o| o == observed[0]);
    if constant {
        let scale = observed[0].abs().max(1.0);
        let max_err = observed
            .iter()
            .zip(predicted)
            .fold(0.0f64, |m, (o, p)| m.max((o - p).abs()));
        return Ok(if max_err <= 1e-12 * scale { 1.0 } else { 0.0 });
    }
    let ss_tot: f64 = observed.iter().map(|o| (o - mean) * (o - mean)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least-squares line.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fitted: Vec<f64> = xs.iter().map(|x| intercept + slope * x).collect();
    Ok(LinearFit {
        slope,
        intercept,
        r_squared: r_squared(ys, &fitted)?,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spearman {
    pub rho: f64,
    /// Two-sided p from the t approximation with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: xs.len(),
        });
    }
    for v in [xs, ys] {
        if v.iter().all(|&x| x == v[0]) {
            return Err(Error::Degenerate("constant input vector".into()));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Spearman> {
    check_pair(xs, ys)?;
    let rho = pearson(&average_ranks(xs), &average_ranks(ys));
    let n = xs.len();
    Ok(Spearman {
        rho,
        p_value: t_approx_p(rho, n),
        n,
    })
}

fn t_approx_p(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 - 1e-12 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    // lower tail avoids cancellation for large |t|
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

/// Exact two-sided permutation p-value for Spearman's rho, enumerating all
/// `n!` orderings. Only offered for `n <= 10`.
pub fn spearman_permutation_p(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len();
    if n > 10 {
        return Err(Error::InvalidInput(format!(
            "exact permutation test limited to n <= 10, got {n}"
        )));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let observed = pearson(&rx, &ry).abs();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut shuffled = ry.clone();
    let mut hits = 0u64;
    let mut total = 0u64;
    let mut count = |perm: &[usize], shuffled: &mut Vec<f64>| {
        for (s, &k) in shuffled.iter_mut().zip(perm) {
            *s = ry[k];
        }
        total += 1;
        if pearson(&rx, shuffled).abs() >= observed - 1e-12 {
            hits += 1;
        }
    };
    // Heap's algorithm
    count(&perm, &mut shuffled);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            count(&perm, &mut shuffled);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Description {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 when `n == 1`.
    pub sd: f64,
    pub sd_defined: bool,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn describe(values: &[f64]) -> Result<Description> {
    if values.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    // summing the sorted copy makes the mean independent of input order
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let (sd, sd_defined) = if n > 1 {
        let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
        ((ss / (n - 1) as f64).sqrt(), true)
    } else {
        (0.0, false)
    };
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(Description {
        n,
        mean,
        sd,
        sd_defined,
        median,
        min: sorted[0],
        max: sorted[n - 1],
    })
}

/// One fitted token for the r-vs-t correlation table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint<'a> {
    pub r: f64,
    pub t: f64,
    pub meta: &'a BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupCorrelation {
    /// Values of the grouping keys, in key order.
    pub group: Vec<String>,
    pub n: usize,
    /// `None` when the group had fewer than 3 members or a constant column.
    pub spearman: Option<Spearman>,
}

/// Spearman's rho of fitted r against fitted t within each metadata group.
/// Missing keys group under an empty string. Groups are returned in sorted
/// order; undersized groups are reported with `spearman: None` and a warning.
pub fn param_correlation_report(points: &[ParamPoint<'_>], group_by: &[&str]) -> Vec<GroupCorrelation> {
    let mut groups: BTreeMap<Vec<String>, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in points {
        let key: Vec<String> = group_by
            .iter()
            .map(|k| p.meta.get(*k).cloned().unwrap_or_default())
            .collect();
        let entry = groups.entry(key).or_default();
        entry.0.push(p.r);
        entry.1.push(p.t);
    }
    groups
        .into_iter()
        .map(|(group, (rs, ts))| {
            let spearman = match spearman(&rs, &ts) {
                Ok(s) => Some(s),
                Err(e) => {
                    log::warn!("skipping r-t correlation for group {group:?}: {e}");
                    None
                }
            };
            GroupCorrelation {
                group,
                n: rs.len(),
                spearman,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_squared_examples() {
        let obs = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&obs, &obs).unwrap(), 1.0);
        assert_eq!(r_squared(&obs, &[2.0; 3]).unwrap(), 0.0);
        assert_eq!(r_squared(&obs, &[3.0, 2.0, 1.0]).unwrap(), -3.0);
        assert_eq!(r_squared(&[4.0; 3], &[4.0; 3]).unwrap(), 1.0);
        assert_eq!(r_squared(&[4.0; 3], &[4.0, 4.5, 4.0]).unwrap(), 0.0);
        assert!(r_squared(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn regression_examples() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let fit = linear_regression(&xs, &xs.map(|x| 2.0 * x + 1.0)).unwrap();
        assert_eq!((fit.slope, fit.intercept, fit.r_squared), (2.0, 1.0, 1.0));

        let fit = linear_regression(&xs, &[7.0; 4]).unwrap();
        assert_eq!((fit.slope, fit.intercept, fit.r_squared), (0.0, 7.0, 1.0));

        let fit = linear_regression(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-15);
        assert!((fit.intercept - 1.0 / 6.0).abs() < 1e-15);
        assert!((fit.r_squared - 0.75).abs() < 1e-15);

        assert!(linear_regression(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        let s = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]).unwrap();
        assert_eq!(s.rho, 1.0);
        assert_eq!(s.p_value, 0.0);
        let s = spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap();
        assert!((s.rho + 0.5).abs() < 1e-15);
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn permutation_p_small_case() {
        // n = 4, perfectly monotone: 2 of 24 orderings reach |rho| = 1
        let p = spearman_permutation_p(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 6.0, 8.0]).unwrap();
        assert!((p - 2.0 / 24.0).abs() < 1e-15);
        assert!(spearman_permutation_p(&[0.0; 11], &[0.0; 11]).is_err());
    }

    #[test]
    fn t_approximation_tracks_permutation_p() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        let ys = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 10.0, 7.0, 9.0];
        let s = spearman(&xs, &ys).unwrap();
        let exact = spearman_permutation_p(&xs, &ys).unwrap();
        assert!(s.p_value < 0.01 && exact < 0.01);
    }

    #[test]
    fn describe_examples() {
        let d = describe(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((d.mean, d.sd, d.median), (2.0, 1.0, 2.0));
        let d = describe(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(d.median, 2.5);
        assert_eq!((d.min, d.max), (1.0, 4.0));
        let d = describe(&[5.0]).unwrap();
        assert_eq!((d.sd, d.sd_defined), (0.0, false));
        assert!(describe(&[]).is_err());
    }

    #[test]
    fn correlation_groups() {
        let en: BTreeMap<String, String> = [("language".to_string(), "en".to_string())].into();
        let zh: BTreeMap<String, String> = [("language".to_string(), "zh".to_string())].into();
        let mut pts = Vec::new();
        for i in 0..6 {
            pts.push(ParamPoint { r: 0.3 + 0.01 * i as f64, t: 20.0 + i as f64, meta: &en });
        }
        pts.push(ParamPoint { r: 0.3, t: 1.0, meta: &zh });
        pts.push(ParamPoint { r: 0.4, t: 2.0, meta: &zh });
        let rep = param_correlation_report(&pts, &["language"]);
        assert_eq!(rep.len(), 2);
        assert_eq!(rep[0].group, vec!["en".to_string()]);
        assert_eq!(rep[0].spearman.unwrap().rho, 1.0);
        assert_eq!(rep[1].n, 2);
        assert!(rep[1].spearman.is_none());
    }
}
