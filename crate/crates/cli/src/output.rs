//! Output directory layout and versioned writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use qmetro::config::{ExperimentConfig, VERSION};

pub struct OutputDir {
    pub reports: PathBuf,
    pub sweeps: PathBuf,
    pub states: PathBuf,
}

/// Envelope shared by every JSON artifact.
#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    version: &'static str,
    command: &'a str,
    config: &'a ExperimentConfig,
    data: &'a T,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        let dir = OutputDir {
            reports: root.join("reports"),
            sweeps: root.join("sweeps"),
            states: root.join("states"),
        };
        for d in [&dir.reports, &dir.sweeps, &dir.states] {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(dir)
    }
}

pub fn write_json<T: Serialize>(
    path: &Path,
    command: &str,
    config: &ExperimentConfig,
    data: &T,
) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &Artifact { version: VERSION, command, config, data })?;
    writeln!(w)?;
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// CSV writer whose first line is a `#` comment with the version string.
pub fn csv_writer(path: &Path, command: &str, seed: u64) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# {VERSION} command={command} seed={seed}")?;
    Ok(csv::Writer::from_writer(w))
}
