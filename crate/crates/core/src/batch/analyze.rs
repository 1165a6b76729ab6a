//! Per-token analysis and corpus aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ingest::Recording;
use super::{round9, RunConfig};
use crate::error::{Error, Result};
use crate::fit::{fit_eq5, fit_msd, simulate_and_score, Curves};
use crate::segment::{lambda_series, ln_lambda_fit, segment_recording, Flag, MovementToken};
use crate::signal::{differentiate_pipeline, resample_pchip, SampledSeries};
use crate::stats::{
    describe, kinematic_summary, param_correlation_report, spearman, spearman_permutation_p,
    Description, GroupCorrelation, KinematicSummary, ParamPoint,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const STATUS_ANALYZED: &str = "analyzed";
pub const STATUS_EXCLUDED: &str = "excluded";

/// One row of the per-token table. Column order is field order. Numbers are
/// rounded to 9 significant digits when the record is built, so a table read
/// back from disk reproduces the in-memory record exactly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub id: String,
    pub status: String,
    /// Exclusion reason; empty for analyzed tokens.
    pub exclusion: String,
    /// Semicolon-separated flags.
    pub flags: String,
    pub speaker: String,
    pub language: String,
    pub vowel: String,
    pub prominence: String,
    pub onset: Option<usize>,
    pub offset: Option<usize>,
    pub window_len: Option<usize>,
    pub x0: Option<f64>,
    pub v0: Option<f64>,
    pub t_obs: Option<f64>,
    pub lambda0: Option<f64>,
    pub ln_lambda_slope: Option<f64>,
    pub ln_lambda_intercept: Option<f64>,
    pub ln_lambda_r2: Option<f64>,
    pub fit_t: Option<f64>,
    pub fit_r: Option<f64>,
    pub fit_r2: Option<f64>,
    pub fit_iterations: Option<usize>,
    pub fit_converged: Option<bool>,
    /// Fitted target minus observed target (mm).
    pub undershoot: Option<f64>,
    pub msd_k: Option<f64>,
    pub msd_b: Option<f64>,
    pub msd_r2: Option<f64>,
    pub sim_r2_state: Option<f64>,
    pub sim_r2_velocity: Option<f64>,
    pub sim_r2_accel: Option<f64>,
    pub sim_samples: Option<usize>,
    pub duration_ms: Option<f64>,
    pub max_displacement: Option<f64>,
    pub peak_velocity: Option<f64>,
    pub time_to_peak_ms: Option<f64>,
    pub rel_time_to_peak: Option<f64>,
    pub kinematic_stiffness: Option<f64>,
    pub sim_duration_ms: Option<f64>,
    pub sim_max_displacement: Option<f64>,
    pub sim_peak_velocity: Option<f64>,
    pub sim_time_to_peak_ms: Option<f64>,
    pub sim_rel_time_to_peak: Option<f64>,
    pub sim_kinematic_stiffness: Option<f64>,
    /// Non-fatal problems (baseline or simulation failures).
    pub note: String,
}

impl TokenRecord {
    pub fn is_analyzed(&self) -> bool {
        self.status == STATUS_ANALYZED
    }

    fn excluded(mut self, reason: &str) -> Self {
        self.status = STATUS_EXCLUDED.into();
        self.exclusion = reason.into();
        self
    }

    fn add_note(&mut self, note: String) {
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(&note);
    }
}

fn n9(x: f64) -> Option<f64> {
    x.is_finite().then(|| round9(x))
}

fn set_kinematics(k: &KinematicSummary, sim: bool, rec: &mut TokenRecord) {
    let vals = [
        n9(k.duration),
        n9(k.max_displacement),
        n9(k.peak_velocity),
        n9(k.time_to_peak),
        n9(k.rel_time_to_peak),
        n9(k.kinematic_stiffness),
    ];
    let slots = if sim {
        [
            &mut rec.sim_duration_ms,
            &mut rec.sim_max_displacement,
            &mut rec.sim_peak_velocity,
            &mut rec.sim_time_to_peak_ms,
            &mut rec.sim_rel_time_to_peak,
            &mut rec.sim_kinematic_stiffness,
        ]
    } else {
        [
            &mut rec.duration_ms,
            &mut rec.max_displacement,
            &mut rec.peak_velocity,
            &mut rec.time_to_peak_ms,
            &mut rec.rel_time_to_peak,
            &mut rec.kinematic_stiffness,
        ]
    };
    for (slot, v) in slots.into_iter().zip(vals) {
        *slot = v;
    }
}

/// Time-normalized curves of one analyzed token on the common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenCurves {
    pub observed: Curves,
    pub lambda: Vec<f64>,
    pub simulated: Option<Curves>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenOutcome {
    pub record: TokenRecord,
    pub curves: Option<TokenCurves>,
}

fn is_truthy(v: &str) -> bool {
    matches!(v.to_ascii_lowercase().as_str(), "1" | "true" | "yes" | "y" | "x")
}

fn is_falsy(v: &str) -> bool {
    matches!(v.to_ascii_lowercase().as_str(), "" | "0" | "false" | "no" | "n")
}

fn meta_f64(meta: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    meta.get(key)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("metadata {key}: not a number: {v:?}")))
        })
        .transpose()
}

/// Segment a recording (honouring any metadata window) into a token.
pub fn tokenize(rec: &Recording, config: &RunConfig) -> Result<MovementToken> {
    let traj = differentiate_pipeline(&rec.aperture, &config.smooth, &config.filter)?;
    let window = match (meta_f64(&rec.meta, "window_start")?, meta_f64(&rec.meta, "window_end")?) {
        (None, None) => 0..traj.len(),
        (s, e) => rec.window_indices(
            s.unwrap_or(rec.start_time),
            e.unwrap_or(rec.start_time + rec.aperture.dt() * (rec.aperture.len() - 1) as f64),
        )?,
    };
    segment_recording(rec.id.clone(), traj, window, &config.segment(), rec.meta.clone())
}

/// Run every analysis stage on one recording. Failures become exclusions.
pub fn analyze_recording(rec: &Recording, config: &RunConfig) -> TokenOutcome {
    let meta = |k: &str| rec.meta.get(k).cloned().unwrap_or_default();
    let mut out = TokenRecord {
        id: rec.id.clone(),
        status: STATUS_ANALYZED.into(),
        speaker: meta("speaker"),
        language: meta("language"),
        vowel: meta("vowel"),
        prominence: meta("prominence"),
        ..Default::default()
    };
    let done = |record: TokenRecord| TokenOutcome { record, curves: None };

    if let Some(v) = rec.meta.get("exclude").filter(|v| !is_falsy(v)) {
        let reason = if is_truthy(v) { "metadata".to_string() } else { v.to_ascii_lowercase() };
        return done(out.excluded(&reason));
    }
    let token = match tokenize(rec, config) {
        Ok(t) => t,
        Err(e) => {
            out.add_note(e.to_string());
            return done(out.excluded("segmentation_failed"));
        }
    };
    out.flags = token.flags().iter().map(Flag::as_str).collect::<Vec<_>>().join(";");
    out.onset = Some(token.onset());
    out.offset = Some(token.offset());
    out.window_len = Some(token.window_len());
    out.x0 = n9(token.x0());
    out.v0 = n9(token.v0());
    out.t_obs = n9(token.t_obs());
    if let Ok(k) = kinematic_summary(&token) {
        set_kinematics(&k, false, &mut out);
    }
    if token.has_flag(Flag::NonMonotonic) {
        return done(out.excluded(Flag::NonMonotonic.as_str()));
    }

    let lambda = match lambda_series(&token, token.t_obs()).and_then(|l| {
        let fit = ln_lambda_fit(&l)?;
        Ok((l, fit))
    }) {
        Ok(v) => v,
        Err(e) => {
            out.add_note(e.to_string());
            return done(out.excluded("lambda_undefined"));
        }
    };
    out.lambda0 = n9(lambda.0.initial());
    out.ln_lambda_slope = n9(lambda.1.slope);
    out.ln_lambda_intercept = n9(lambda.1.intercept);
    out.ln_lambda_r2 = n9(lambda.1.r_squared);

    let fit = match fit_eq5(&token, &config.fit) {
        Ok(f) => f,
        Err(e) => {
            out.add_note(e.to_string());
            return done(out.excluded("fit_failed"));
        }
    };
    out.fit_t = n9(fit.params.t);
    out.fit_r = n9(fit.params.r);
    out.fit_r2 = n9(fit.r_squared);
    out.fit_iterations = Some(fit.iterations);
    out.fit_converged = Some(fit.converged);
    out.undershoot = n9(fit.params.t - token.t_obs());
    if !fit.converged {
        return done(out.excluded("fit_not_converged"));
    }

    if config.stages.baseline {
        match fit_msd(&token) {
            Ok(m) => {
                out.msd_k = n9(m.k);
                out.msd_b = n9(m.b);
                out.msd_r2 = n9(m.r_squared);
            }
            Err(e) => out.add_note(format!("baseline: {e}")),
        }
    }

    let observed = Curves::from_trajectory(&token.window());
    let lambda_grid = SampledSeries::new(lambda.0.values.clone(), 1.0, "samples")
        .and_then(|s| resample_pchip(&s, crate::fit::GRID_POINTS))
        .map(SampledSeries::into_values);
    let mut simulated = None;
    if config.stages.simulate {
        match simulate_and_score(&token, &fit) {
            Ok(s) => {
                out.sim_r2_state = n9(s.r2_state);
                out.sim_r2_velocity = n9(s.r2_velocity);
                out.sim_r2_accel = n9(s.r2_accel);
                out.sim_samples = Some(s.simulated_samples);
                if let Some(k) = &s.kinematics {
                    set_kinematics(k, true, &mut out);
                }
                simulated = Some(s.simulated);
            }
            Err(e) => out.add_note(format!("simulation: {e}")),
        }
    }
    let curves = match (observed, lambda_grid) {
        (Ok(observed), Ok(lambda)) => Some(TokenCurves {
            observed,
            lambda,
            simulated,
        }),
        _ => None,
    };
    TokenOutcome { record: out, curves }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Counts {
    pub ingested: usize,
    pub analyzed: usize,
    pub excluded_total: usize,
    pub excluded: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub name: String,
    pub x: String,
    pub y: String,
    pub n: usize,
    pub rho: Option<f64>,
    /// Two-sided p from the t approximation.
    pub p_t: Option<f64>,
    /// Exact two-sided permutation p, for n <= 10.
    pub p_permutation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaCap {
    pub cap: f64,
    pub tokens_exceeding: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub counts: Counts,
    pub distributions: BTreeMap<String, Description>,
    pub correlations: Vec<CorrelationRow>,
    pub r_t_by_group: Vec<GroupCorrelation>,
    pub group_by: Vec<String>,
    pub lambda_plot_cap: LambdaCap,
}

type Column = fn(&TokenRecord) -> Option<f64>;

/// Per-token numeric columns used for distributions, histograms and scatters.
pub const VARIABLES: &[(&str, Column)] = &[
    ("duration_ms", |r| r.duration_ms),
    ("max_displacement", |r| r.max_displacement),
    ("peak_velocity", |r| r.peak_velocity),
    ("time_to_peak_ms", |r| r.time_to_peak_ms),
    ("rel_time_to_peak", |r| r.rel_time_to_peak),
    ("kinematic_stiffness", |r| r.kinematic_stiffness),
    ("lambda0", |r| r.lambda0),
    ("ln_lambda_slope", |r| r.ln_lambda_slope),
    ("ln_lambda_r2", |r| r.ln_lambda_r2),
    ("fit_t", |r| r.fit_t),
    ("fit_r", |r| r.fit_r),
    ("fit_r2", |r| r.fit_r2),
    ("undershoot", |r| r.undershoot),
    ("msd_r2", |r| r.msd_r2),
    ("sim_r2_state", |r| r.sim_r2_state),
    ("sim_r2_velocity", |r| r.sim_r2_velocity),
    ("sim_r2_accel", |r| r.sim_r2_accel),
    ("sim_peak_velocity", |r| r.sim_peak_velocity),
    ("sim_max_displacement", |r| r.sim_max_displacement),
    ("sim_rel_time_to_peak", |r| r.sim_rel_time_to_peak),
];

/// Scatter pairs: (name, x column, y column).
pub const PAIRS: &[(&str, &str, &str)] = &[
    ("r_vs_neg_ln_lambda_slope", "fit_r", "neg_ln_lambda_slope"),
    ("lambda0_vs_ln_lambda_slope", "lambda0", "ln_lambda_slope"),
    ("displacement_vs_peak_velocity", "max_displacement", "peak_velocity"),
    ("sim_displacement_vs_sim_peak_velocity", "sim_max_displacement", "sim_peak_velocity"),
    ("rel_time_to_peak_vs_sim", "rel_time_to_peak", "sim_rel_time_to_peak"),
    ("t_vs_r", "fit_t", "fit_r"),
];

pub fn column(name: &str) -> Option<Column> {
    if name == "neg_ln_lambda_slope" {
        return Some(|r| r.ln_lambda_slope.map(|s| -s));
    }
    VARIABLES.iter().find(|(n, _)| *n == name).map(|(_, f)| *f)
}

/// Paired values of two columns over analyzed tokens where both are present.
pub fn paired(records: &[TokenRecord], x: &str, y: &str) -> Vec<(String, f64, f64)> {
    let (fx, fy) = (column(x).expect("known column"), column(y).expect("known column"));
    records
        .iter()
        .filter(|r| r.is_analyzed())
        .filter_map(|r| Some((r.id.clone(), fx(r)?, fy(r)?)))
        .collect()
}

pub fn summarize(records: &[TokenRecord], group_by: &[String], lambda_cap: f64) -> Summary {
    let mut counts = Counts {
        ingested: records.len(),
        ..Default::default()
    };
    for r in records {
        if r.is_analyzed() {
            counts.analyzed += 1;
        } else {
            counts.excluded_total += 1;
            *counts.excluded.entry(r.exclusion.clone()).or_default() += 1;
        }
    }
    let analyzed: Vec<&TokenRecord> = records.iter().filter(|r| r.is_analyzed()).collect();
    let distributions = VARIABLES
        .iter()
        .filter_map(|(name, f)| {
            let vals: Vec<f64> = analyzed.iter().filter_map(|r| f(r)).collect();
            describe(&vals).ok().map(|d| (name.to_string(), d))
        })
        .collect();
    let correlations = PAIRS
        .iter()
        .map(|(name, x, y)| {
            let pts = paired(records, x, y);
            let xs: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.2).collect();
            let s = spearman(&xs, &ys).ok();
            let p_perm = if (3..=10).contains(&xs.len()) {
                spearman_permutation_p(&xs, &ys).ok()
            } else {
                None
            };
            CorrelationRow {
                name: name.to_string(),
                x: x.to_string(),
                y: y.to_string(),
                n: pts.len(),
                rho: s.map(|s| s.rho),
                p_t: s.map(|s| s.p_value),
                p_permutation: p_perm,
            }
        })
        .collect();
    let metas: Vec<BTreeMap<String, String>> = analyzed
        .iter()
        .map(|r| {
            [
                ("speaker", &r.speaker),
                ("language", &r.language),
                ("vowel", &r.vowel),
                ("prominence", &r.prominence),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
        })
        .collect();
    let points: Vec<ParamPoint<'_>> = analyzed
        .iter()
        .zip(&metas)
        .filter_map(|(r, meta)| {
            Some(ParamPoint {
                r: r.fit_r?,
                t: r.fit_t?,
                meta,
            })
        })
        .collect();
    let keys: Vec<&str> = group_by.iter().map(String::as_str).collect();
    Summary {
        schema_version: SCHEMA_VERSION,
        counts,
        distributions,
        correlations,
        r_t_by_group: param_correlation_report(&points, &keys),
        group_by: group_by.to_vec(),
        lambda_plot_cap: LambdaCap {
            cap: lambda_cap,
            tokens_exceeding: analyzed
                .iter()
                .filter(|r| r.lambda0.is_some_and(|l| l > lambda_cap))
                .count(),
        },
    }
}

/// Mean and SD of one curve at one grid index across tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub curve: String,
    pub index: usize,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

/// Bands over the 100-point grid. States are taken relative to their
/// onset value so movements from different positions can be averaged.
pub fn bands(curves: &[&TokenCurves]) -> Vec<BandRow> {
    let rel = |c: &Curves| -> Vec<f64> { c.state.iter().map(|x| x - c.state[0]).collect() };
    let mut named: Vec<(&str, Vec<Vec<f64>>)> = vec![
        ("state", curves.iter().map(|c| rel(&c.observed)).collect()),
        ("velocity", curves.iter().map(|c| c.observed.velocity.clone()).collect()),
        ("acceleration", curves.iter().map(|c| c.observed.acceleration.clone()).collect()),
        ("lambda", curves.iter().map(|c| c.lambda.clone()).collect()),
    ];
    let sims: Vec<&Curves> = curves.iter().filter_map(|c| c.simulated.as_ref()).collect();
    named.push(("sim_state", sims.iter().map(|c| rel(c)).collect()));
    named.push(("sim_velocity", sims.iter().map(|c| c.velocity.clone()).collect()));
    named.push(("sim_acceleration", sims.iter().map(|c| c.acceleration.clone()).collect()));

    let mut rows = Vec::new();
    for (name, series) in named {
        if series.is_empty() {
            continue;
        }
        for i in 0..crate::fit::GRID_POINTS {
            let col: Vec<f64> = series.iter().map(|s| s[i]).collect();
            let d = describe(&col).expect("nonempty");
            rows.push(BandRow {
                curve: name.to_string(),
                index: i,
                n: d.n,
                mean: round9(d.mean),
                sd: round9(d.sd),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub variable: String,
    pub bin: usize,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

pub const HISTOGRAM_BINS: usize = 20;

pub const HISTOGRAM_VARIABLES: &[&str] = &[
    "rel_time_to_peak",
    "sim_rel_time_to_peak",
    "fit_r2",
    "fit_r",
    "fit_t",
    "ln_lambda_r2",
    "peak_velocity",
    "duration_ms",
];

/// Equal-width bins spanning each variable's range; the last bin is closed.
pub fn histograms(records: &[TokenRecord]) -> Vec<HistogramRow> {
    let mut rows = Vec::new();
    for name in HISTOGRAM_VARIABLES {
        let f = column(name).expect("known column");
        let vals: Vec<f64> = records.iter().filter(|r| r.is_analyzed()).filter_map(f).collect();
        let Ok(d) = describe(&vals) else { continue };
        let bins = if d.max > d.min { HISTOGRAM_BINS } else { 1 };
        let width = (d.max - d.min) / bins as f64;
        let mut counts = vec![0usize; bins];
        for v in &vals {
            let b = if width > 0.0 { ((v - d.min) / width) as usize } else { 0 };
            counts[b.min(bins - 1)] += 1;
        }
        for (b, count) in counts.into_iter().enumerate() {
            rows.push(HistogramRow {
                variable: name.to_string(),
                bin: b,
                lower: round9(d.min + b as f64 * width),
                upper: round9(if b + 1 == bins { d.max } else { d.min + (b + 1) as f64 * width }),
                count,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub pair: String,
    pub id: String,
    pub x: f64,
    pub y: f64,
}

pub fn scatters(records: &[TokenRecord]) -> Vec<ScatterRow> {
    PAIRS
        .iter()
        .flat_map(|(name, x, y)| {
            paired(records, x, y).into_iter().map(|(id, x, y)| ScatterRow {
                pair: name.to_string(),
                id,
                x,
                y,
            })
        })
        .collect()
}

/// Everything `emit` writes. `bands` is `None` when the bundle was rebuilt
/// from a saved per-token table, which does not carry the curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub records: Vec<TokenRecord>,
    pub summary: Summary,
    pub bands: Option<Vec<BandRow>>,
}

impl ReportBundle {
    pub fn from_records(mut records: Vec<TokenRecord>, config: &RunConfig, bands: Option<Vec<BandRow>>) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let summary = summarize(&records, &config.group_by, config.lambda_plot_cap);
        Self {
            records,
            summary,
            bands,
        }
    }

    pub fn from_outcomes(mut outcomes: Vec<TokenOutcome>, config: &RunConfig) -> Self {
        outcomes.sort_by(|a, b| a.record.id.cmp(&b.record.id));
        let curves: Vec<&TokenCurves> = outcomes.iter().filter_map(|o| o.curves.as_ref()).collect();
        let band_rows = bands(&curves);
        let records = outcomes.into_iter().map(|o| o.record).collect();
        Self::from_records(records, config, Some(band_rows))
    }
}
