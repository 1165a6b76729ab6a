//! Output files. All numbers carry at most 9 significant digits and every
//! table is written in a fixed row order, so re-emitting a bundle reproduces
//! the same bytes.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use super::analyze::{histograms, scatters, BandRow, HistogramRow, ReportBundle, ScatterRow, TokenRecord};
use super::round9;
use crate::error::{Error, Result};
use crate::signal::Trajectory;
use crate::synth::SynthToken;

pub const TOKENS_FILE: &str = "tokens.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const BANDS_FILE: &str = "bands.csv";
pub const HISTOGRAMS_FILE: &str = "histograms.csv";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const CORPUS_FILE: &str = "corpus.csv";
pub const METADATA_FILE: &str = "metadata.csv";
pub const TRUTH_FILE: &str = "truth.csv";

fn header_of<T: Serialize>(sample: &T) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(sample).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let end = bytes.iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| i + 1);
    Ok(bytes[..end].to_vec())
}

/// Header-only when `rows` is empty.
fn write_table<T: Serialize>(path: &Path, rows: &[T], empty: &T) -> Result<()> {
    let bytes = if rows.is_empty() {
        header_of(empty)?
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| Error::io(path, e))?;
        }
        w.into_inner().map_err(|e| Error::io(path, e))?
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round9).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Write the per-token table, corpus summary and plot-data tables to `dir`.
/// `bands.csv` is written only when the bundle carries curves.
pub fn emit(bundle: &ReportBundle, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_table(&dir.join(TOKENS_FILE), &bundle.records, &TokenRecord::default())?;

    let mut json = serde_json::to_value(&bundle.summary).map_err(|e| Error::InvalidInput(e.to_string()))?;
    round_json(&mut json);
    let mut text = serde_json::to_string_pretty(&json).map_err(|e| Error::InvalidInput(e.to_string()))?;
    text.push('\n');
    let summary_path = dir.join(SUMMARY_FILE);
    std::fs::write(&summary_path, text).map_err(|e| Error::io(&summary_path, e))?;

    if let Some(b) = &bundle.bands {
        let empty = BandRow {
            curve: String::new(),
            index: 0,
            n: 0,
            mean: 0.0,
            sd: 0.0,
        };
        write_table(&dir.join(BANDS_FILE), b, &empty)?;
    }
    let empty_hist = HistogramRow {
        variable: String::new(),
        bin: 0,
        lower: 0.0,
        upper: 0.0,
        count: 0,
    };
    write_table(&dir.join(HISTOGRAMS_FILE), &histograms(&bundle.records), &empty_hist)?;
    let empty_scatter = ScatterRow {
        pair: String::new(),
        id: String::new(),
        x: 0.0,
        y: 0.0,
    };
    write_table(&dir.join(SCATTER_FILE), &scatters(&bundle.records), &empty_scatter)
}

pub fn read_token_table(path: &Path) -> Result<Vec<TokenRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CorpusRow<'a> {
    id: &'a str,
    t: f64,
    la: f64,
}

#[derive(Serialize)]
struct TruthRow<'a> {
    id: &'a str,
    t: f64,
    r: f64,
    x0: f64,
    v0: f64,
    onset: usize,
    offset: usize,
}

/// Write a synthetic corpus as an aperture file with an id column, plus the
/// matching metadata and ground-truth tables.
pub fn write_corpus(tokens: &[SynthToken], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rows = Vec::new();
    for st in tokens {
        let state = st.token.trajectory().state();
        for (i, x) in state.values().iter().enumerate() {
            rows.push(CorpusRow {
                id: st.token.id(),
                t: round9(i as f64 * state.dt()),
                la: round9(*x),
            });
        }
    }
    write_table(
        &dir.join(CORPUS_FILE),
        &rows,
        &CorpusRow {
            id: "",
            t: 0.0,
            la: 0.0,
        },
    )?;

    let keys: BTreeSet<&str> = tokens
        .iter()
        .flat_map(|t| t.token.meta().keys().map(String::as_str))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id"];
    header.extend(keys.iter().copied());
    let path = dir.join(METADATA_FILE);
    w.write_record(&header).map_err(|e| Error::io(&path, e))?;
    for st in tokens {
        let mut rec = vec![st.token.id().to_string()];
        rec.extend(keys.iter().map(|k| st.token.meta().get(*k).cloned().unwrap_or_default()));
        w.write_record(&rec).map_err(|e| Error::io(&path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(&path, e))?;
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;

    let truth: Vec<TruthRow> = tokens
        .iter()
        .map(|st| {
            let tr = st.token.trajectory();
            TruthRow {
                id: st.token.id(),
                t: round9(st.truth.t),
                r: round9(st.truth.r),
                x0: round9(tr.state().values()[st.origin]),
                v0: round9(tr.velocity().values()[st.origin]),
                onset: st.token.onset(),
                offset: st.token.offset(),
            }
        })
        .collect();
    write_table(
        &dir.join(TRUTH_FILE),
        &truth,
        &TruthRow {
            id: "",
            t: 0.0,
            r: 0.0,
            x0: 0.0,
            v0: 0.0,
            onset: 0,
            offset: 0,
        },
    )
}

#[derive(Serialize)]
struct TrajectoryRow {
    sample: f64,
    time_s: f64,
    x: f64,
    v: f64,
    a: f64,
}

/// Columns: sample (in units of the sample period), time_s, x (mm),
/// v (mm/sample), a (mm/sample^2).
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let h = traj.step_in_samples();
    let rows: Vec<TrajectoryRow> = (0..traj.len())
        .map(|i| TrajectoryRow {
            sample: round9(i as f64 * h),
            time_s: round9(i as f64 * traj.state().dt()),
            x: round9(traj.state().values()[i]),
            v: round9(traj.velocity().values()[i]),
            a: round9(traj.acceleration().values()[i]),
        })
        .collect();
    let empty = TrajectoryRow {
        sample: 0.0,
        time_s: 0.0,
        x: 0.0,
        v: 0.0,
        a: 0.0,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_table(path, &rows, &empty)
}
