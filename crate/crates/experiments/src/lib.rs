//! Registered, seeded experiments: configuration, targets, runners and summaries.

// domains such as [−3.14, 3.14] are literal values, not π
#![allow(clippy::approx_constant)]

pub mod config;
pub mod error;
pub mod registry;
pub mod runners;
pub mod summary;
pub mod target;

use std::path::{Path, PathBuf};

use fplab_io::{write_run_record, write_spectrum_csv, IoError};

pub use config::{ExperimentConfig, LossChoice, ModelSpec, ProbeConfig};
pub use error::{ExpError, ExpResult};
pub use registry::{entries, lookup, names, Entry};
pub use runners::{Artifact, LabeledRun, Outcome};
pub use summary::{Check, Summary};
pub use target::{make_target, TargetSpec};

/// Runs every seed of `cfg`, then writes records, artifacts and the summary under
/// `out_dir/<name>/` when an output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> ExpResult<Outcome> {
    cfg.validate()?;
    let entry = lookup(&cfg.name)?;
    let mut out = Outcome::new(cfg);
    (entry.run)(cfg, &mut out)?;
    if let Some(dir) = &cfg.out_dir {
        persist(&out, &dir.join(&cfg.name))?;
    }
    Ok(out)
}

/// File name of one run record.
pub fn record_file_name(label: &str, seed: u64) -> String {
    format!("{label}-seed{seed}.jsonl")
}

pub fn persist(out: &Outcome, dir: &Path) -> ExpResult<Vec<PathBuf>> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| ExpError::Io(IoError::File { path: p, source })
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for run in &out.runs {
        let p = dir.join(record_file_name(&run.label, run.record.seed));
        write_run_record(&p, &run.record)?;
        written.push(p);
    }
    for a in &out.artifacts {
        match a {
            Artifact::Spectrum { file, spectrum } => {
                let p = dir.join(file);
                write_spectrum_csv(&p, spectrum)?;
                written.push(p);
            }
            Artifact::Text { file, contents } => {
                let p = dir.join(file);
                std::fs::write(&p, contents).map_err(io_err(&p))?;
                written.push(p);
            }
        }
    }
    for (file, text) in [("config.toml", out.config.to_toml()), ("summary.txt", out.summary.render())] {
        let p = dir.join(file);
        std::fs::write(&p, text).map_err(io_err(&p))?;
        written.push(p);
    }
    Ok(written)
}
