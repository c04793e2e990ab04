//! Output files: surface/peaks/residual/histogram CSVs, fit JSON, and the
//! run manifest that checksums them.
//!
//! Floats are written in Rust's shortest round-trip form, so files are
//! lossless and byte-stable across runs.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sweep::{Peak, QuadFit, Surface, SymmetryCheck};

pub const SURFACE_HEADER: &str = "lambda,t,L,dlogL,qfi,flag";
pub const PEAKS_HEADER: &str = "peak_index,lambda_star,t_star,qfi_star,N,delta,temperature";
pub const HISTOGRAM_HEADER: &str = "bin_left,bin_right,count";
pub const RESIDUAL_HEADER: &str = "lambda_shift,t,value_n0,value_n1_scaled,residual,flag";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_surface_csv<W: Write>(mut w: W, surface: &Surface) -> io::Result<()> {
    writeln!(w, "{SURFACE_HEADER}")?;
    let g = &surface.grid;
    for i in 0..g.lambda_steps {
        for j in 0..g.t_steps {
            let n = &surface.nodes[g.index(i, j)];
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(g.lambda(i)),
                fmt_f64(g.t(j)),
                fmt_f64(n.l),
                fmt_f64(n.dlog_l),
                fmt_f64(n.qfi),
                n.flag.as_str()
            )?;
        }
    }
    Ok(())
}

/// One line of the peaks table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakRow {
    pub peak: Peak,
    pub n: usize,
    pub delta: f64,
    pub temperature: f64,
}

pub fn write_peaks_csv<W: Write>(mut w: W, rows: &[PeakRow]) -> io::Result<()> {
    writeln!(w, "{PEAKS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.peak.index_l,
            fmt_f64(r.peak.lambda_star),
            fmt_f64(r.peak.t_star),
            fmt_f64(r.peak.f_star),
            r.n,
            fmt_f64(r.delta),
            fmt_f64(r.temperature)
        )?;
    }
    Ok(())
}

pub fn fit_json(fit: &QuadFit) -> String {
    serde_json::to_string_pretty(fit).expect("fit serializes") + "\n"
}

pub fn write_histogram_csv<W: Write>(mut w: W, check: &SymmetryCheck) -> io::Result<()> {
    writeln!(w, "{HISTOGRAM_HEADER}")?;
    let h = &check.histogram;
    for (b, count) in h.counts.iter().enumerate() {
        writeln!(w, "{},{},{}", fmt_f64(h.edges[b]), fmt_f64(h.edges[b + 1]), count)?;
    }
    Ok(())
}

pub fn write_residual_csv<W: Write>(mut w: W, check: &SymmetryCheck) -> io::Result<()> {
    writeln!(w, "{RESIDUAL_HEADER}")?;
    let g = &check.grid;
    for i in 0..g.lambda_steps {
        for j in 0..g.t_steps {
            let k = g.index(i, j);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(g.lambda(i)),
                fmt_f64(g.t(j)),
                fmt_f64(check.value_n0[k]),
                fmt_f64(check.value_n1_scaled[k]),
                fmt_f64(check.residual[k]),
                if check.flagged[k] { "flagged" } else { "ok" }
            )?;
        }
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputRecord>,
}

/// Collects output files for one run directory and writes the manifest last.
#[derive(Debug)]
pub struct RunDir {
    dir: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl RunDir {
    pub fn create(dir: impl AsRef<Path>) -> io::Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf(), outputs: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` atomically and records its checksum.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.retain(|o| o.file != name);
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(path)
    }

    pub fn outputs(&self) -> &[OutputRecord] {
        &self.outputs
    }

    pub fn finish(self, mut manifest: RunManifest) -> io::Result<PathBuf> {
        manifest.outputs = self.outputs;
        let text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)? + "\n";
        let path = self.dir.join("manifest.json");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
