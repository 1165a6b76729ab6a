//! End to end: generate a corpus, analyze it in parallel and write the
//! report bundle.

use gesture_dynamics::batch::{self, RunConfig, CORPUS_FILE, METADATA_FILE};

fn main() -> gesture_dynamics::Result<()> {
    let root = std::env::temp_dir().join("gesture-dynamics-report");
    let data = root.join("corpus");
    let mut cfg = RunConfig::default();
    let n = batch::generate_corpus(&cfg, &data)?;
    println!("generated {n} recordings in {}", data.display());

    cfg.inputs = vec![data.join(CORPUS_FILE)];
    cfg.metadata = Some(data.join(METADATA_FILE));
    cfg.out = root.join("report");
    cfg.jobs = Some(4);
    let bundle = batch::run_pipeline(&cfg)?;
    batch::emit(&bundle, &cfg.out)?;

    let s = &bundle.summary;
    println!("{} analyzed, {} excluded {:?}", s.counts.analyzed, s.counts.excluded_total, s.counts.excluded);
    for name in ["fit_r2", "fit_r", "rel_time_to_peak", "peak_velocity"] {
        if let Some(d) = s.distributions.get(name) {
            println!("{name:<18} mean {:>9.4}  sd {:>9.4}", d.mean, d.sd);
        }
    }
    for c in &s.correlations {
        if let Some(rho) = c.rho {
            println!("{:<40} rho {rho:>6.3} (n = {})", c.name, c.n);
        }
    }
    println!("report written to {}", cfg.out.display());
    Ok(())
}
