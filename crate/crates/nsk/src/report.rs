//! Serializable scan reports.

use crate::error::{NskError, Result};
use crate::params::FluidParams;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(if self.passed() { "PASS" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub shell: Option<usize>,
    pub xi: Vec<f64>,
    pub lambda: C64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellRecord {
    pub index: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub count: usize,
    /// one entry per report column
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub xi: Vec<f64>,
    pub lambda: C64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub kind: String,
    pub params: FluidParams,
    pub grid: serde_json::Value,
    pub columns: Vec<String>,
    pub points: Vec<PointRecord>,
    pub shells: Vec<ShellRecord>,
    pub summary: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub skipped: Vec<SkippedPoint>,
    pub verdict: Verdict,
    pub timestamp: Option<String>,
    pub config_hash: String,
    #[serde(default)]
    pub seed: u64,
}

/// Hex SHA-256 of the JSON encoding of `v`.
pub fn config_hash<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

impl ScanReport {
    /// Report skeleton; the hash covers kind, params, grid and thresholds.
    pub fn new(kind: &str, params: &FluidParams, grid: serde_json::Value, thresholds: BTreeMap<String, f64>) -> Self {
        let config_hash = config_hash(&(kind, params, &grid, &thresholds));
        ScanReport {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            params: params.clone(),
            grid,
            columns: Vec::new(),
            points: Vec::new(),
            shells: Vec::new(),
            summary: BTreeMap::new(),
            thresholds,
            notes: Vec::new(),
            skipped: Vec::new(),
            verdict: Verdict::Fail,
            timestamp: None,
            config_hash,
            seed: 0,
        }
    }

    /// Hash of the physical parameters alone, used to decide whether two
    /// reports can be merged.
    pub fn params_hash(&self) -> String {
        config_hash(&self.params)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| NskError::Schema(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: ScanReport = serde_json::from_str(s).map_err(|e| NskError::Schema(e.to_string()))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(NskError::Schema(format!("schema_version {} (expected {SCHEMA_VERSION})", r.schema_version)));
        }
        Ok(r)
    }

    /// Per-point CSV: shell, xi components, lambda, then the report columns.
    pub fn to_csv(&self) -> String {
        let nx = self.points.first().map_or(0, |p| p.xi.len());
        let mut out = String::from("shell");
        for j in 0..nx {
            let _ = write!(out, ",xi{}", j + 1);
        }
        out.push_str(",lambda_re,lambda_im");
        for c in &self.columns {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for p in &self.points {
            match p.shell {
                Some(s) => {
                    let _ = write!(out, "{s}");
                }
                None => out.push('-'),
            }
            for x in &p.xi {
                let _ = write!(out, ",{x:e}");
            }
            let _ = write!(out, ",{:e},{:e}", p.lambda.re, p.lambda.im);
            for v in &p.values {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_is_bit_identical() {
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, 2).unwrap();
        let mut r = ScanReport::new("test", &p, serde_json::json!({"n": 3}), BTreeMap::new());
        r.columns = vec!["a".into()];
        r.points.push(PointRecord { shell: Some(0), xi: vec![0.1], lambda: C64::new(1.0 / 3.0, -2e-300), values: vec![std::f64::consts::PI] });
        r.summary.insert("min".into(), 0.1 + 0.2);
        let s = r.to_json().unwrap();
        let back = ScanReport::from_json(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json().unwrap(), s);
        assert!(r.to_csv().starts_with("shell,xi1,lambda_re,lambda_im,a\n0,"));
    }

    #[test]
    fn hash_tracks_config() {
        let p = FluidParams::simple(1.0, 3.0, 1.0, 1.0, 2).unwrap();
        let a = ScanReport::new("k", &p, serde_json::json!({"n": 3}), BTreeMap::new());
        let b = ScanReport::new("k", &p, serde_json::json!({"n": 4}), BTreeMap::new());
        assert_eq!(a.config_hash.len(), 64);
        assert_ne!(a.config_hash, b.config_hash);
    }
}
