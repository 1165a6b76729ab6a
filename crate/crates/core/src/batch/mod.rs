//! Batch orchestration: read recordings, analyze every token, and write the
//! per-token table, corpus summary and plot-data files.

mod analyze;
mod emit;
mod ingest;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitConfig;
use crate::segment::SegmentConfig;
use crate::signal::{FilterConfig, SmoothConfig};
use crate::synth::{DerivativeSource, SweepBase, SweepGrid};

pub use analyze::{
    analyze_recording, bands, histograms, paired, scatters, summarize, tokenize, BandRow, CorrelationRow,
    Counts, HistogramRow, LambdaCap, ReportBundle, ScatterRow, Summary, TokenCurves, TokenOutcome,
    TokenRecord, HISTOGRAM_BINS, PAIRS, SCHEMA_VERSION, STATUS_ANALYZED, STATUS_EXCLUDED, VARIABLES,
};
pub use emit::{
    emit, read_token_table, write_corpus, write_trajectory, BANDS_FILE, CORPUS_FILE, HISTOGRAMS_FILE,
    METADATA_FILE, SCATTER_FILE, SUMMARY_FILE, TOKENS_FILE, TRUTH_FILE,
};
pub use ingest::{expand_inputs, ingest, read_metadata, InputFormat, Recording, DT_TOLERANCE};

/// Round to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Which optional stages follow the model fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Stages {
    pub baseline: bool,
    pub simulate: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self {
            baseline: true,
            simulate: true,
        }
    }
}

/// Everything a batch run needs. Loadable from TOML; every field is optional
/// there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub format: InputFormat,
    pub metadata: Option<PathBuf>,
    /// Sampling rate override (Hz).
    pub fs: Option<f64>,
    pub threshold: f64,
    pub filter: FilterConfig,
    pub smooth: SmoothConfig,
    pub fit: FitConfig,
    pub stages: Stages,
    pub out: PathBuf,
    /// Worker threads; `None` uses one per core.
    pub jobs: Option<usize>,
    pub seed: u64,
    /// Metadata keys for the grouped r-t correlation table.
    pub group_by: Vec<String>,
    /// Tokens whose initial lambda exceeds this are counted for plotting.
    pub lambda_plot_cap: f64,
    /// Grid for synthetic corpus generation.
    pub sweep: SweepSettings,
}

/// Synthetic sweep axes. Replicate `i` uses seed `RunConfig::seed + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub r: Vec<f64>,
    pub displacement: Vec<f64>,
    pub x0: Vec<f64>,
    pub noise_sd: Vec<f64>,
    pub replicates: u64,
    pub derivatives: DerivativeSource,
    /// Onset placed at this fraction of peak speed.
    pub onset_fraction: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            r: vec![0.2, 0.36, 0.6],
            displacement: vec![4.0, 8.0, 12.0],
            x0: vec![30.0],
            noise_sd: vec![0.02],
            replicates: 5,
            derivatives: DerivativeSource::Pipeline,
            onset_fraction: 0.2,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            format: InputFormat::Auto,
            metadata: None,
            fs: None,
            threshold: SegmentConfig::default().threshold,
            filter: FilterConfig::default(),
            smooth: SmoothConfig::default(),
            fit: FitConfig::default(),
            stages: Stages::default(),
            out: PathBuf::from("out"),
            jobs: None,
            seed: 0,
            group_by: vec!["speaker".into()],
            lambda_plot_cap: 150.0,
            sweep: SweepSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidInput(m) => Error::InvalidInput(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn segment(&self) -> SegmentConfig {
        SegmentConfig {
            threshold: self.threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidInput(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if let Some(fs) = self.fs {
            if !(fs > 0.0 && fs.is_finite()) {
                return Err(Error::InvalidInput(format!("fs must be positive, got {fs}")));
            }
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidInput("jobs must be at least 1".into()));
        }
        for p in self.inputs.iter().chain(&self.metadata) {
            if !p.exists() {
                return Err(Error::Io {
                    path: p.display().to_string(),
                    message: "no such file or directory".into(),
                });
            }
        }
        Ok(())
    }

    /// The synthetic grid described by `sweep`, sampled at `fs` (100 Hz by
    /// default) and processed with this run's settings.
    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            r: self.sweep.r.clone(),
            displacement: self.sweep.displacement.clone(),
            x0: self.sweep.x0.clone(),
            noise_sd: self.sweep.noise_sd.clone(),
            seeds: (self.seed..self.seed + self.sweep.replicates).collect(),
            base: SweepBase {
                fs: self.fs.unwrap_or(100.0),
                derivatives: self.sweep.derivatives,
                onset_fraction: self.sweep.onset_fraction,
                segment: self.segment(),
                smooth: self.smooth.clone(),
                filter: self.filter.clone(),
            },
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            b = b.num_threads(j);
        }
        b.build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
    }
}

/// Read all configured inputs and attach sidecar metadata.
pub fn load_recordings(config: &RunConfig) -> Result<Vec<Recording>> {
    let mut recordings = Vec::new();
    for path in expand_inputs(&config.inputs)? {
        recordings.extend(ingest(&path, config.format, config.fs)?);
    }
    let mut seen = BTreeSet::new();
    for r in &recordings {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate recording id {:?}", r.id)));
        }
    }
    if let Some(path) = &config.metadata {
        let mut meta: BTreeMap<String, BTreeMap<String, String>> = read_metadata(path)?;
        for r in &mut recordings {
            if let Some(m) = meta.remove(&r.id) {
                r.meta.extend(m);
            }
        }
        for id in meta.keys() {
            log::warn!("metadata for unknown recording {id:?}");
        }
    }
    Ok(recordings)
}

/// Analyze recordings on a bounded pool; results are sorted by id.
pub fn analyze_recordings(recordings: &[Recording], config: &RunConfig) -> Result<ReportBundle> {
    config.validate()?;
    let outcomes: Vec<TokenOutcome> = config
        .pool()?
        .install(|| recordings.par_iter().map(|r| analyze_recording(r, config)).collect());
    Ok(ReportBundle::from_outcomes(outcomes, config))
}

/// Validate, ingest and analyze.
pub fn run_pipeline(config: &RunConfig) -> Result<ReportBundle> {
    config.validate()?;
    let recordings = load_recordings(config)?;
    analyze_recordings(&recordings, config)
}

/// Generate the configured synthetic sweep and write it to `dir`.
pub fn generate_corpus(config: &RunConfig, dir: &Path) -> Result<usize> {
    config.validate()?;
    let tokens = config.pool()?.install(|| crate::synth::sweep(&config.sweep_grid()))?;
    write_corpus(&tokens, dir)?;
    Ok(tokens.len())
}

/// Rebuild a bundle from a saved per-token table.
pub fn report_from_table(path: &Path, config: &RunConfig) -> Result<ReportBundle> {
    Ok(ReportBundle::from_records(read_token_table(path)?, config, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SampledSeries;
    use crate::synth::{sweep, SweepBase, SweepGrid};

    fn grid() -> SweepGrid {
        SweepGrid {
            r: vec![0.2, 0.36, 0.6],
            displacement: vec![4.0, 8.0, 12.0],
            x0: vec![30.0],
            noise_sd: vec![0.02],
            seeds: (0..5).collect(),
            base: SweepBase::default(),
        }
    }

    fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
        std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect()
    }

    #[test]
    fn round9_keeps_nine_digits() {
        assert_eq!(round9(0.1 + 0.2), 0.3);
        assert_eq!(round9(123_456_789_123.0), 123_456_789_000.0);
        assert_eq!(round9(-2.0 / 3.0), -0.666666667);
        assert_eq!(round9(0.0), 0.0);
    }

    #[test]
    fn empty_input_gives_empty_report() {
        let cfg = RunConfig::default();
        let bundle = analyze_recordings(&[], &cfg).unwrap();
        assert_eq!(bundle.summary.counts, Counts::default());
        let dir = tempfile::tempdir().unwrap();
        emit(&bundle, dir.path()).unwrap();
        let tokens = std::fs::read_to_string(dir.path().join(TOKENS_FILE)).unwrap();
        assert_eq!(tokens.lines().count(), 1);
        assert!(tokens.starts_with("id,status,exclusion,flags,"));
        let hist = std::fs::read_to_string(dir.path().join(HISTOGRAMS_FILE)).unwrap();
        assert_eq!(hist, "variable,bin,lower,upper,count\n");
    }

    #[test]
    fn synthetic_sweep_end_to_end() {
        let corpus = tempfile::tempdir().unwrap();
        write_corpus(&sweep(&grid()).unwrap(), corpus.path()).unwrap();
        let mut cfg = RunConfig {
            inputs: vec![corpus.path().join(CORPUS_FILE)],
            metadata: Some(corpus.path().join(METADATA_FILE)),
            jobs: Some(1),
            ..Default::default()
        };
        let a = run_pipeline(&cfg).unwrap();
        assert_eq!(a.records.len(), 45);
        assert_eq!(a.summary.counts.analyzed, 45, "{:?}", a.summary.counts);
        assert_eq!(a.summary.counts.excluded_total, 0);
        assert!(a.records.iter().all(|r| r.speaker == "synthetic"));

        cfg.jobs = Some(4);
        let b = run_pipeline(&cfg).unwrap();
        assert_eq!(a, b);
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        emit(&a, d1.path()).unwrap();
        emit(&b, d2.path()).unwrap();
        emit(&a, d2.path()).unwrap();
        assert_eq!(files(d1.path()), files(d2.path()));

        let table = read_token_table(&d1.path().join(TOKENS_FILE)).unwrap();
        assert_eq!(table, a.records);
        let re = report_from_table(&d1.path().join(TOKENS_FILE), &cfg).unwrap();
        assert_eq!(re.summary, a.summary);
    }

    #[test]
    fn exclusions_are_counted_by_reason() {
        let st = crate::synth::generate_token(
            &crate::synth::SynthSpec::at_threshold_onset(crate::dynamics::GestureParams::new(22.82, 0.36).unwrap(), 30.0, 0.2)
                .unwrap(),
            "clean",
        )
        .unwrap();
        let clean = st.clean_state.clone();
        let rec = |id: &str, x: Vec<f64>| Recording {
            id: id.into(),
            aperture: SampledSeries::new(x, 0.01, "mm").unwrap(),
            start_time: 0.0,
            meta: BTreeMap::new(),
        };
        // an opening movement just before the closing one
        let mut reversed: Vec<f64> = vec![clean[0] - 2.0; 20];
        reversed.extend((0..10).map(|i| clean[0] - 1.0 - (std::f64::consts::PI * i as f64 / 9.0).cos()));
        reversed.extend(&clean);
        let mut disfluent = rec("c", clean.clone());
        disfluent.meta.insert("exclude".into(), "Disfluent".into());
        let mut flagged = rec("d", clean.clone());
        flagged.meta.insert("exclude".into(), "1".into());
        let mut kept = rec("e", clean.clone());
        kept.meta.insert("exclude".into(), "no".into());
        let recs = vec![rec("a", clean.clone()), rec("b", reversed), disfluent, flagged, kept, rec("f", vec![1.0; 40])];

        let bundle = analyze_recordings(&recs, &RunConfig::default()).unwrap();
        let c = &bundle.summary.counts;
        assert_eq!(c.ingested, 6);
        assert_eq!(c.analyzed, 2);
        assert_eq!(c.excluded_total, 4);
        assert_eq!(c.analyzed + c.excluded.values().sum::<usize>(), c.ingested);
        assert_eq!(c.excluded["non_monotonic"], 1);
        assert_eq!(c.excluded["disfluent"], 1);
        assert_eq!(c.excluded["metadata"], 1);
        assert_eq!(c.excluded["segmentation_failed"], 1);
        let b = bundle.records.iter().find(|r| r.id == "b").unwrap();
        assert!(b.flags.contains("non_monotonic"));
    }

    #[test]
    fn metadata_window_restricts_segmentation() {
        let st = crate::synth::generate_token(
            &crate::synth::SynthSpec::at_threshold_onset(crate::dynamics::GestureParams::new(22.82, 0.36).unwrap(), 30.0, 0.2)
                .unwrap(),
            "w",
        )
        .unwrap();
        let n = st.clean_state.len();
        let mut x = st.clean_state.clone();
        x.extend(st.clean_state.iter().rev());
        let mut rec = Recording {
            id: "w".into(),
            aperture: SampledSeries::new(x, 0.01, "mm").unwrap(),
            start_time: 1.0,
            meta: BTreeMap::new(),
        };
        let cfg = RunConfig::default();
        rec.meta.insert("window_start".into(), (1.0 + 0.01 * n as f64).to_string());
        let tok = tokenize(&rec, &cfg).unwrap();
        assert!(tok.onset() >= n);
        rec.meta.insert("window_start".into(), "abc".into());
        assert!(tokenize(&rec, &cfg).is_err());
    }

    #[test]
    fn config_from_toml() {
        let cfg = RunConfig::from_toml_str("threshold = 0.15\njobs = 2\n[filter]\norder = 3\n").unwrap();
        assert_eq!(cfg.threshold, 0.15);
        assert_eq!(cfg.jobs, Some(2));
        assert_eq!(cfg.filter.order, 3);
        assert_eq!(cfg.filter.velocity_cutoff_hz, Some(20.0));
        assert!(RunConfig::from_toml_str("thresold = 0.1").is_err());
        let bad = RunConfig {
            threshold: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let missing = RunConfig {
            inputs: vec!["/nonexistent/file.csv".into()],
            ..Default::default()
        };
        assert!(missing.validate().is_err());
    }
}
