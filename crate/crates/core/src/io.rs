//! Plain-text tensor files and factor directories.
//!
//! A tensor file holds optional `#` comment lines, one `dims: I_1 ... I_D`
//! header, then `Π I_d` whitespace-separated values in row-major order.
//! The token `nan` (any case) marks a missing entry.
//!
//! ```text
//! # 2x2 example
//! dims: 2 2
//! 0.4 0.1
//! 0.2 0.3
//! ```
//!
//! Values are written with 17 significant digits, so a write/read round
//! trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::factors::{Factor, FactorSet};
use crate::tensor::{validate_dims, DenseTensor, MaskedTensor};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Tensor {
        path: PathBuf,
        #[source]
        source: Error,
    },
}

/// Contents of a tensor file; NaN marks missing entries.
#[derive(Debug, Clone)]
pub struct RawTensor {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

impl RawTensor {
    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }
}

/// Parses tensor-file text. Errors carry 1-based line numbers.
pub fn parse_tensor(text: &str) -> std::result::Result<RawTensor, (usize, String)> {
    let mut dims: Option<Vec<usize>> = None;
    let mut values = Vec::new();
    let mut expected = 0;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(_) = dims else {
            let rest = line
                .strip_prefix("dims:")
                .ok_or((line_no, "expected header `dims: I_1 ... I_D`".to_string()))?;
            let d = rest
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| (line_no, format!("bad dimension `{t}`"))))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            expected = validate_dims(&d).map_err(|e| (line_no, e.to_string()))?;
            values.reserve(expected);
            dims = Some(d);
            continue;
        };
        for token in line.split_whitespace() {
            let v = if token.eq_ignore_ascii_case("nan") {
                f64::NAN
            } else {
                match token.parse::<f64>() {
                    Ok(v) if v.is_finite() && v >= 0.0 => v,
                    _ => return Err((line_no, format!("bad value `{token}` (need a finite number >= 0 or nan)"))),
                }
            };
            if values.len() == expected {
                return Err((line_no, format!("more than {expected} values")));
            }
            values.push(v);
        }
    }
    let dims = dims.ok_or((0, "missing `dims:` header".to_string()))?;
    if values.len() != expected {
        return Err((0, format!("expected {expected} values, found {}", values.len())));
    }
    Ok(RawTensor { dims, values })
}

pub fn read_raw(path: &Path) -> Result<RawTensor, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_tensor(&text).map_err(|(line, message)| FileError::Format {
        path: path.to_path_buf(),
        line,
        message,
    })
}

/// Reads a tensor that must not contain missing entries.
pub fn read_tensor(path: &Path) -> Result<DenseTensor, FileError> {
    let raw = read_raw(path)?;
    if raw.missing_count() > 0 {
        return Err(FileError::Format {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{} missing (nan) entries are not allowed here", raw.missing_count()),
        });
    }
    DenseTensor::new(raw.dims, raw.values).map_err(|source| FileError::Tensor {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a tensor whose `nan` entries are missing.
pub fn read_masked(path: &Path) -> Result<MaskedTensor, FileError> {
    let raw = read_raw(path)?;
    MaskedTensor::from_nan_values(raw.dims, raw.values).map_err(|source| FileError::Tensor {
        path: path.to_path_buf(),
        source,
    })
}

/// Formats values in the tensor-file layout, one last-mode fiber per line.
pub fn format_tensor(dims: &[usize], values: &[f64]) -> String {
    let mut out = String::from("dims:");
    for d in dims {
        write!(out, " {d}").unwrap();
    }
    out.push('\n');
    let width = dims.last().copied().unwrap_or(1).max(1);
    for row in values.chunks(width) {
        let tokens: Vec<String> = row
            .iter()
            .map(|v| if v.is_nan() { "nan".to_string() } else { format!("{v:.16e}") })
            .collect();
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_values(path: &Path, dims: &[usize], values: &[f64]) -> Result<(), FileError> {
    fs::write(path, format_tensor(dims, values)).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<(), FileError> {
    write_values(path, t.dims(), t.values())
}

pub const MANIFEST: &str = "manifest.json";

/// `manifest.json` of a factor directory. Modes are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorManifest {
    pub dims: Vec<usize>,
    pub subsets: Vec<Vec<usize>>,
    #[serde(rename = "Z")]
    pub partition_function: f64,
    pub scale: f64,
    pub files: Vec<String>,
}

/// Writes one tensor file per factor plus `manifest.json` into `dir` (created if needed).
pub fn write_factor_dir(dir: &Path, f: &FactorSet) -> Result<(), FileError> {
    let io_err = |source| FileError::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut files = Vec::new();
    for (j, factor) in f.factors().iter().enumerate() {
        let name = format!("factor_{j}.txt");
        write_tensor(&dir.join(&name), &factor.values)?;
        files.push(name);
    }
    let manifest = FactorManifest {
        dims: f.dims().to_vec(),
        subsets: f
            .factors()
            .iter()
            .map(|x| x.modes.iter().map(|m| m + 1).collect())
            .collect(),
        partition_function: f.partition_function(),
        scale: f.scale(),
        files,
    };
    let path = dir.join(MANIFEST);
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| FileError::Json {
        path: path.clone(),
        source,
    })?;
    fs::write(&path, json + "\n").map_err(|source| FileError::Io { path, source })
}

pub fn read_factor_dir(dir: &Path) -> Result<FactorSet, FileError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|source| FileError::Io {
        path: path.clone(),
        source,
    })?;
    let manifest: FactorManifest = serde_json::from_str(&text).map_err(|source| FileError::Json {
        path: path.clone(),
        source,
    })?;
    if manifest.subsets.len() != manifest.files.len() {
        return Err(FileError::Format {
            path,
            line: 0,
            message: "subsets and files differ in length".into(),
        });
    }
    let mut factors = Vec::new();
    for (modes, file) in manifest.subsets.iter().zip(&manifest.files) {
        if modes.contains(&0) {
            return Err(FileError::Format {
                path: path.clone(),
                line: 0,
                message: "modes are 1-based".into(),
            });
        }
        factors.push(Factor {
            modes: modes.iter().map(|m| m - 1).collect(),
            values: read_tensor(&dir.join(file))?,
        });
    }
    FactorSet::new(manifest.dims, factors, manifest.partition_function, manifest.scale)
        .map_err(|source| FileError::Tensor { path, source })
}
