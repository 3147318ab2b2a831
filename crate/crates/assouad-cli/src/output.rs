//! Machine-readable output: JSON documents and RFC 4180 CSV, each embedding
//! the invocation hash and seed. Every emitted number carries a provenance
//! label (exact | estimate | bound).

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Estimate,
    Bound,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Estimate => "estimate",
            Provenance::Bound => "bound",
        }
    }
}

/// A labeled scalar in JSON outputs.
#[derive(Clone, Debug, Serialize)]
pub struct Labeled {
    pub value: f64,
    pub provenance: Provenance,
}

impl Labeled {
    pub fn exact(value: f64) -> Self {
        Labeled { value, provenance: Provenance::Exact }
    }
    pub fn estimate(value: f64) -> Self {
        Labeled { value, provenance: Provenance::Estimate }
    }
    pub fn bound(value: f64) -> Self {
        Labeled { value, provenance: Provenance::Bound }
    }
}

/// Hash of the canonicalized invocation: subcommand, normalized arguments and
/// raw config bytes when a file is involved.
pub fn invocation_hash(parts: &[&str], config_bytes: Option<&[u8]>) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0u8]);
    }
    if let Some(b) = config_bytes {
        hasher.update(b);
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Document<T: Serialize> {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub results: T,
}

pub fn emit_json<T: Serialize>(doc: &Document<T>, out: &mut dyn Write) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// CSV rows for estimator outputs; one row per estimate.
#[derive(Debug, Serialize)]
pub struct EstimateRow {
    pub theta_or_delta: f64,
    pub mode: String,
    pub estimate_lower: f64,
    pub estimate_upper: f64,
    pub witness_x: f64,
    pub witness_r_big: f64,
    pub witness_r_small: f64,
    pub samples: usize,
    pub seed: u64,
    pub provenance: String,
    pub config_sha256: String,
}

pub fn emit_csv<T: Serialize>(rows: &[T], out: &mut dyn Write) -> anyhow::Result<()> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
