//! Report files.
//!
//! Every CSV starts with two comment lines, `# schema_version=N` and
//! `# config_hash=sha256:<hex>`, followed by a header row. Column contracts:
//!
//! | file                 | columns |
//! |----------------------|---------|
//! | `plan.csv`           | preset, bw_hz, feasible, free_per_side_hz, span_hz, slack_hz, occupancy_ratio, free_total_hz, max_feasible_bw_hz |
//! | `matrix.csv`         | preset, topology, bw_mhz, evm_low_pct, evm_high_pct, q_db, pass_3gpp, seed, status |
//! | `psd*.csv`           | freq_ghz, psd_dbm_per_hz |
//! | `constellation*.csv` | i, q, ref_i, ref_q |
//!
//! JSON files carry `schema_version` and `config_hash` fields instead.

use std::path::{Path, PathBuf};

use arofsim_core::planner::{Allocation, FeasibilityTable};
use arofsim_core::signal::SpectrumEstimate;
use arofsim_core::topology::SweepCell;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const MATRIX_COLUMNS: [&str; 9] =
    ["preset", "topology", "bw_mhz", "evm_low_pct", "evm_high_pct", "q_db", "pass_3gpp", "seed", "status"];
pub const PLAN_COLUMNS: [&str; 9] = [
    "preset",
    "bw_hz",
    "feasible",
    "free_per_side_hz",
    "span_hz",
    "slack_hz",
    "occupancy_ratio",
    "free_total_hz",
    "max_feasible_bw_hz",
];
pub const PSD_COLUMNS: [&str; 2] = ["freq_ghz", "psd_dbm_per_hz"];
pub const CONSTELLATION_COLUMNS: [&str; 4] = ["i", "q", "ref_i", "ref_q"];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub cell: String,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub cells: Vec<CellStatus>,
    pub files: Vec<FileEntry>,
}

/// Writes files into one output directory and remembers their checksums.
pub struct ReportWriter {
    dir: PathBuf,
    config_hash: String,
    files: Vec<FileEntry>,
}

impl ReportWriter {
    pub fn new(dir: &Path, config_hash: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), config_hash: config_hash.to_string(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(path)
    }

    pub fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let mut buf = format!("# schema_version={SCHEMA_VERSION}\n# config_hash={}\n", self.config_hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let ser = |e: csv::Error| CliError::Serialize(e.to_string());
            w.write_record(header).map_err(ser)?;
            for row in rows {
                w.write_record(row).map_err(ser)?;
            }
            w.flush().map_err(|e| CliError::Serialize(e.to_string()))?;
        }
        self.write_bytes(name, &buf)
    }

    /// Pretty JSON with `schema_version` and `config_hash` added at the top level.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let body = serde_json::to_value(value).map_err(|e| CliError::Serialize(e.to_string()))?;
        let mut doc = serde_json::Map::new();
        doc.insert("schema_version".into(), SCHEMA_VERSION.into());
        doc.insert("config_hash".into(), self.config_hash.clone().into());
        match body {
            serde_json::Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Serialize(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// The manifest lists every file written before it; it is not listed itself.
    pub fn write_manifest(&mut self, manifest: &RunManifest) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Serialize(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn plan_rows(label: &str, table: &FeasibilityTable) -> Vec<Vec<String>> {
    table.rows.iter().map(|a| plan_row(label, a, table.max_feasible_bw)).collect()
}

fn plan_row(label: &str, a: &Allocation, max_bw: f64) -> Vec<String> {
    vec![
        label.to_string(),
        num(a.plan.arof_bw),
        a.feasible.to_string(),
        num(a.free_per_side),
        num(a.span_per_arof),
        num(a.slack),
        num(a.occupancy_ratio),
        num(a.free_total()),
        num(max_bw),
    ]
}

pub fn matrix_rows(cells: &[SweepCell]) -> Vec<Vec<String>> {
    cells
        .iter()
        .map(|c| {
            let mut row = vec![c.preset.clone(), c.topology.to_string(), num(c.arof_bw_hz / 1e6)];
            match &c.outcome {
                Ok(r) => row.extend([
                    format!("{:.4}", r.evm_low),
                    format!("{:.4}", r.evm_high),
                    format!("{:.4}", r.q_report.q_db),
                    (r.pass_3gpp[0] && r.pass_3gpp[1]).to_string(),
                    c.seed.to_string(),
                    "ok".to_string(),
                ]),
                Err(e) => row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    c.seed.to_string(),
                    format!("error: {e}"),
                ]),
            }
            row
        })
        .collect()
}

pub fn psd_rows(psd: &SpectrumEstimate) -> Vec<Vec<String>> {
    psd.frequencies.iter().zip(&psd.psd).map(|(&f, &p)| vec![format!("{:.6}", f / 1e9), format!("{p:.4}")]).collect()
}

pub fn constellation_rows(pairs: &[(Complex64, Complex64)]) -> Vec<Vec<String>> {
    pairs.iter().map(|(s, r)| vec![format!("{:.6}", s.re), format!("{:.6}", s.im), num(r.re), num(r.im)]).collect()
}

pub fn cell_label(c: &SweepCell) -> String {
    format!("{}-topo{}-{}MHz-seed{}", c.preset, c.topology, c.arof_bw_hz / 1e6, c.seed)
}
