//! Staged output files: everything is written next to its destination under
//! a temporary name and renamed only once the whole command has succeeded.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

#[derive(Default)]
pub struct Staged {
    files: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens a temporary file that becomes `dest` on commit.
    pub fn create(&mut self, dest: impl AsRef<Path>) -> Result<BufWriter<File>> {
        let dest = dest.as_ref().to_path_buf();
        let name = dest
            .file_name()
            .with_context(|| format!("{} is not a file path", dest.display()))?
            .to_string_lossy()
            .into_owned();
        let tmp = dest.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
        let file = File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        self.files.push((tmp, dest));
        Ok(BufWriter::new(file))
    }

    /// Runs `write` against a staged file.
    pub fn write_with<F>(&mut self, dest: impl AsRef<Path>, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let dest = dest.as_ref().to_path_buf();
        let mut w = self.create(&dest)?;
        write(&mut w).with_context(|| format!("cannot write {}", dest.display()))?;
        Ok(())
    }

    pub fn destinations(&self) -> Vec<String> {
        self.files
            .iter()
            .map(|(_, d)| d.display().to_string())
            .collect()
    }

    pub fn commit(mut self) -> Result<()> {
        for (tmp, dest) in &self.files {
            fs::rename(tmp, dest)
                .with_context(|| format!("cannot move {} to {}", tmp.display(), dest.display()))?;
        }
        self.committed = true;
        Ok(())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.files {
                let _ = fs::remove_file(tmp);
            }
        }
    }
}

/// Manifest for one run. `config` echoes the resolved settings.
pub fn manifest(command: &str, seed: u64, config: Value, outputs: Vec<String>) -> Value {
    json!({
        "tool": "zsl",
        "cli_version": env!("CARGO_PKG_VERSION"),
        "core_version": zsl_core::VERSION,
        "command": command,
        "seed": seed,
        "argv": std::env::args().collect::<Vec<_>>(),
        "config": config,
        "outputs": outputs,
    })
}

/// Stages the manifest as the last file of the run.
pub fn stage_manifest(
    staged: &mut Staged,
    path: impl AsRef<Path>,
    command: &str,
    seed: u64,
    config: Value,
) -> Result<()> {
    let mut outputs = staged.destinations();
    outputs.push(path.as_ref().display().to_string());
    let m = manifest(command, seed, config, outputs);
    staged.write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, &m)?;
        use std::io::Write;
        writeln!(w)?;
        w.flush()
    })
}

/// `<path>.manifest.json`
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
