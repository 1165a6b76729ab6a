//! Tabular trajectory input.
//!
//! Aperture files have the header `t,la`; sensor files have
//! `t,ul_x,ul_y,ul_z,ll_x,ll_y,ll_z` and are reduced to lip aperture. Either
//! layout may start with an `id` column, in which case one file holds many
//! recordings; otherwise the file stem is the recording id.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::emit::{METADATA_FILE, TRUTH_FILE};
use crate::error::{Error, Result};
use crate::signal::{lip_aperture, SampledSeries, SensorTrack};

/// Maximum deviation of any time step from the mean step (s).
pub const DT_TOLERANCE: f64 = 1e-6;

const SENSOR_COLUMNS: [&str; 6] = ["ul_x", "ul_y", "ul_z", "ll_x", "ll_y", "ll_z"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Decide from the header.
    #[default]
    Auto,
    Aperture,
    Sensor,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "aperture" => Ok(Self::Aperture),
            "sensor" => Ok(Self::Sensor),
            other => Err(Error::InvalidInput(format!(
                "unknown input format {other:?} (expected auto, aperture or sensor)"
            ))),
        }
    }
}

/// One continuous recording of lip aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: String,
    pub aperture: SampledSeries,
    /// Time of the first sample (s).
    pub start_time: f64,
    pub meta: BTreeMap<String, String>,
}

impl Recording {
    /// Sample index range covering `[start, end]` seconds, clamped to the
    /// recording.
    pub fn window_indices(&self, start: f64, end: f64) -> Result<std::ops::Range<usize>> {
        let dt = self.aperture.dt();
        let n = self.aperture.len();
        let to_index = |t: f64| ((t - self.start_time) / dt).round().clamp(0.0, n as f64 - 1.0) as usize;
        let (s, e) = (to_index(start), to_index(end));
        if !(start.is_finite() && end.is_finite()) || e <= s {
            return Err(Error::InvalidInput(format!(
                "recording {}: empty analysis window [{start}, {end}] s",
                self.id
            )));
        }
        Ok(s..e + 1)
    }
}

struct Rows {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    lines: Vec<usize>,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Read every recording in `path`. `fs` overrides the sampling rate implied
/// by the time column, which must still be uniform.
pub fn ingest(path: &Path, format: InputFormat, fs: Option<f64>) -> Result<Vec<Recording>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let has_id = header.first().map(String::as_str) == Some("id");
    let cols: Vec<&str> = header.iter().skip(usize::from(has_id)).map(String::as_str).collect();
    let is_aperture = cols == ["t", "la"];
    let is_sensor = cols.len() == 7 && cols[0] == "t" && cols[1..] == SENSOR_COLUMNS;
    let sensor = match (format, is_aperture, is_sensor) {
        (InputFormat::Auto | InputFormat::Aperture, true, _) => false,
        (InputFormat::Auto | InputFormat::Sensor, _, true) => true,
        _ => {
            return Err(parse_error(
                path,
                1,
                format!(
                    "malformed header {:?}: expected [id,]t,la or [id,]t,{}",
                    header.join(","),
                    SENSOR_COLUMNS.join(",")
                ),
            ))
        }
    };

    let default_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "recording".into());
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Rows> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let id = if has_id { rec[0].to_string() } else { default_id.clone() };
        let mut nums = Vec::with_capacity(cols.len());
        for (j, field) in rec.iter().enumerate().skip(usize::from(has_id)) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, format!("column {}: not a number: {field:?}", header[j])))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("column {}: non-finite value", header[j])));
            }
            nums.push(v);
        }
        let rows = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            Rows {
                times: Vec::new(),
                values: Vec::new(),
                lines: Vec::new(),
            }
        });
        rows.times.push(nums[0]);
        rows.values.push(nums[1..].to_vec());
        rows.lines.push(line);
    }

    order
        .into_iter()
        .map(|id| {
            let rows = groups.remove(&id).expect("grouped");
            build_recording(path, id, rows, sensor, fs)
        })
        .collect()
}

fn build_recording(path: &Path, id: String, rows: Rows, sensor: bool, fs: Option<f64>) -> Result<Recording> {
    let n = rows.times.len();
    if n < 2 {
        return Err(parse_error(
            path,
            rows.lines.first().copied().unwrap_or(1),
            format!("recording {id}: need at least 2 rows to infer the sampling interval"),
        ));
    }
    let mean_dt = (rows.times[n - 1] - rows.times[0]) / (n - 1) as f64;
    for i in 1..n {
        let step = rows.times[i] - rows.times[i - 1];
        if step <= 0.0 {
            return Err(parse_error(path, rows.lines[i], format!("recording {id}: time is not strictly increasing")));
        }
        if (step - mean_dt).abs() > DT_TOLERANCE {
            return Err(parse_error(
                path,
                rows.lines[i],
                format!("recording {id}: time step {step} deviates from {mean_dt} by more than {DT_TOLERANCE} s"),
            ));
        }
    }
    let dt = match fs {
        Some(f) if f > 0.0 => 1.0 / f,
        Some(f) => return Err(Error::InvalidInput(format!("sampling rate must be positive, got {f}"))),
        None => mean_dt,
    };
    let aperture = if sensor {
        let upper = SensorTrack::new(rows.values.iter().map(|r| [r[0], r[1], r[2]]).collect(), dt);
        let lower = SensorTrack::new(rows.values.iter().map(|r| [r[3], r[4], r[5]]).collect(), dt);
        lip_aperture(&upper, &lower)?
    } else {
        SampledSeries::new(rows.values.iter().map(|r| r[0]).collect(), dt, "mm")?
    };
    Ok(Recording {
        id,
        aperture,
        start_time: rows.times[0],
        meta: BTreeMap::new(),
    })
}

/// Sidecar metadata: a CSV with an `id` column and any of `speaker`,
/// `language`, `vowel`, `prominence`, `exclude`, `window_start`,
/// `window_end` (s). Other columns are carried through as metadata.
pub fn read_metadata(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let id_col = header
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| parse_error(path, 1, "metadata header lacks an id column"))?;
    let mut out = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let id = rec[id_col].to_string();
        let meta: BTreeMap<String, String> = header
            .iter()
            .zip(rec.iter())
            .enumerate()
            .filter(|(j, (_, v))| *j != id_col && !v.is_empty())
            .map(|(_, (k, v))| (k.clone(), v.to_string()))
            .collect();
        if out.insert(id.clone(), meta).is_some() {
            return Err(parse_error(path, line, format!("duplicate metadata id {id:?}")));
        }
    }
    Ok(out)
}

/// Expand directories to their `*.csv` files, sorted by name. The metadata
/// and truth sidecars written next to a generated corpus are skipped.
pub fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "csv"))
                .filter(|f| !f.file_name().is_some_and(|n| n == METADATA_FILE || n == TRUTH_FILE))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}
