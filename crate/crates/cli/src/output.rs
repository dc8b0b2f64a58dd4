//! Artifact writing, provenance and exit-status mapping.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use membrane_cauchy::cauchy::CauchyError;
use membrane_cauchy::curve::CurveError;
use membrane_cauchy::cylinder::CylinderError;
use membrane_cauchy::mesh::MeshError;
use membrane_cauchy::shape::ShapeError;
use membrane_cauchy::strip::StripError;

pub const EXIT_INVARIANT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Raised when a computed artifact fails one of its own checks.
#[derive(Debug)]
pub struct InvariantViolation(pub String);

impl std::fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invariant violated: {}", self.0)
    }
}

impl std::error::Error for InvariantViolation {}

/// Tool version plus a SHA-256 of the canonical JSON of the run config.
pub fn provenance<C: Serialize>(config: &C) -> Value {
    let canon = serde_json::to_vec(config).expect("config serializes");
    let hash = hex::encode(Sha256::digest(&canon));
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "config": serde_json::from_slice::<Value>(&canon).expect("round trip"),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Pretty JSON to `path`, or to stdout when no path is given.
pub fn emit(value: &Value, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// 2 for bad input or failed checks, 3 when a numerical method gave up.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<InvariantViolation>() || cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return EXIT_INVARIANT;
        }
        if let Some(e) = cause.downcast_ref::<CylinderError>() {
            return match e {
                CylinderError::InvalidParams(_) | CylinderError::OutOfFamily { .. } => EXIT_INVARIANT,
                _ => EXIT_NUMERICAL,
            };
        }
        if let Some(e) = cause.downcast_ref::<CauchyError>() {
            return match e {
                CauchyError::Curve(CurveError::DegenerateFrenet { .. }) => EXIT_NUMERICAL,
                _ => EXIT_INVARIANT,
            };
        }
        if let Some(e) = cause.downcast_ref::<CurveError>() {
            return match e {
                CurveError::DegenerateFrenet { .. } => EXIT_NUMERICAL,
                _ => EXIT_INVARIANT,
            };
        }
        if cause.is::<StripError>() {
            return EXIT_NUMERICAL;
        }
        if cause.is::<ShapeError>() || cause.is::<MeshError>() {
            return EXIT_INVARIANT;
        }
    }
    EXIT_NUMERICAL
}
