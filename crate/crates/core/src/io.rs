//! Model configuration files, operator files and trajectory tables.
//!
//! Complex numbers are written as `[re, im]` pairs and matrices as arrays
//! of rows. Node numbers in files are 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::derivation::{Construction, Coupling, ModelSpec, TransitionOperatorSet};
use crate::error::{Error, Result};
use crate::linalg::{Complex64, ComplexMatrix};
use crate::trajectory::Trajectory;
use crate::walk::{KrausLabel, KrausTerm};

pub const PRESET_TWO_LEVEL: &str = "two-level";
/// βω₀ of the two-level preset.
pub const PRESET_BETA_OMEGA0: f64 = 0.01;
/// γ₀Δ of the two-level preset.
pub const PRESET_GAMMA0_DELTA: f64 = 0.01;

/// Hermiticity tolerance applied to matrices read from a config file.
pub const CONFIG_HERMITIAN_TOL: f64 = 1e-10;

pub type MatrixRepr = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_repr(m: &ComplexMatrix) -> MatrixRepr {
    m.to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_repr(repr: &MatrixRepr, field: &str) -> Result<ComplexMatrix> {
    let rows = repr
        .iter()
        .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        .collect();
    ComplexMatrix::from_rows(rows).map_err(|e| Error::Parse(format!("{field}: {e}")))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega1: Option<MatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega2: Option<MatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_a: Option<MatrixRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Rate for zero-frequency coupling components (both directions).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_frequency_rate: Option<f64>,
}

fn required<'a, T>(value: &'a Option<T>, field: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::Parse(format!("missing field `{field}`")))
}

fn hermitian_field(repr: &MatrixRepr, field: &str, dim: usize) -> Result<ComplexMatrix> {
    let m = matrix_from_repr(repr, field)?;
    if m.rows() != dim || m.cols() != dim {
        return Err(Error::Parse(format!(
            "{field}: expected {dim}x{dim}, found {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_hermitian(CONFIG_HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            what: field.to_string(),
            deviation: m.hermiticity_defect(),
        });
    }
    Ok(m.hermitian_part())
}

fn positive(value: f64, field: &str) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::bad_parameter(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

impl ModelConfigFile {
    pub fn into_spec(self) -> Result<ModelSpec> {
        let spec = match self.preset.as_deref() {
            Some(PRESET_TWO_LEVEL) => {
                let gamma0 = positive(self.gamma0.unwrap_or(1.0), "gamma0")?;
                let beta = positive(self.beta.unwrap_or(PRESET_BETA_OMEGA0), "beta")?;
                ModelSpec::two_level(beta, gamma0)?
            }
            Some(other) => {
                return Err(Error::Parse(format!(
                    "unknown preset `{other}` (known: {PRESET_TWO_LEVEL})"
                )))
            }
            None => {
                let dim = *required(&self.dim, "dim")?;
                if dim == 0 {
                    return Err(Error::bad_parameter("dim", "must be >= 1"));
                }
                let omega1 = hermitian_field(required(&self.omega1, "omega1")?, "omega1", dim)?;
                let omega2 = hermitian_field(required(&self.omega2, "omega2")?, "omega2", dim)?;
                let a = hermitian_field(required(&self.coupling_a, "coupling_a")?, "coupling_a", dim)?;
                let gamma0 = positive(*required(&self.gamma0, "gamma0")?, "gamma0")?;
                let beta = positive(*required(&self.beta, "beta")?, "beta")?;
                ModelSpec::new(omega1, omega2, Coupling::Hermitian(a), gamma0, beta)?
            }
        };
        match self.zero_frequency_rate {
            Some(rate) => spec.with_zero_frequency_rate(rate),
            None => Ok(spec),
        }
    }

    pub fn from_spec(spec: &ModelSpec) -> Self {
        let preset = spec.is_two_level_preset();
        Self {
            preset: preset.then(|| PRESET_TWO_LEVEL.to_string()),
            dim: Some(spec.dim()),
            omega1: (!preset).then(|| matrix_to_repr(spec.omega1())),
            omega2: (!preset).then(|| matrix_to_repr(spec.omega2())),
            coupling_a: match spec.coupling() {
                Coupling::Hermitian(a) => Some(matrix_to_repr(a)),
                Coupling::TwoLevelJumpPair => None,
            },
            gamma0: Some(spec.gamma0()),
            beta: Some(spec.beta()),
            zero_frequency_rate: spec.zero_frequency_rate(),
        }
    }
}

/// Parses a JSON model configuration into a validated model.
pub fn parse_model_config(doc: &str) -> Result<ModelSpec> {
    let file: ModelConfigFile = serde_json::from_str(doc).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_spec()
}

pub fn serialize_model_config(spec: &ModelSpec) -> String {
    serde_json::to_string_pretty(&ModelConfigFile::from_spec(spec)).expect("config serializes")
}

/// Default walk step for a model: γ₀Δ = 0.01.
pub fn default_delta(spec: &ModelSpec) -> f64 {
    if spec.gamma0() > 0.0 {
        PRESET_GAMMA0_DELTA / spec.gamma0()
    } else {
        PRESET_GAMMA0_DELTA
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausTermFile {
    pub from_node: usize,
    pub to_node: usize,
    pub label: KrausLabel,
    pub matrix: MatrixRepr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub node_count: usize,
    pub dim: usize,
    pub delta: f64,
    pub construction: Construction,
    pub terms: Vec<KrausTermFile>,
}

pub fn serialize_operators(ops: &TransitionOperatorSet) -> String {
    let file = OperatorFile {
        node_count: ops.node_count,
        dim: ops.dim,
        delta: ops.delta,
        construction: ops.construction,
        terms: ops
            .terms
            .iter()
            .map(|t| KrausTermFile {
                from_node: t.from + 1,
                to_node: t.to + 1,
                label: t.label,
                matrix: matrix_to_repr(&t.matrix),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("operators serialize")
}

pub fn parse_operators(doc: &str) -> Result<TransitionOperatorSet> {
    let file: OperatorFile = serde_json::from_str(doc).map_err(|e| Error::Parse(e.to_string()))?;
    let node = |n: usize, field: &str| {
        if n == 0 || n > file.node_count {
            Err(Error::Parse(format!("{field} {n} outside 1..={}", file.node_count)))
        } else {
            Ok(n - 1)
        }
    };
    let terms = file
        .terms
        .iter()
        .map(|t| {
            Ok(KrausTerm::new(
                node(t.from_node, "from_node")?,
                node(t.to_node, "to_node")?,
                t.label,
                matrix_from_repr(&t.matrix, "matrix")?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let set = TransitionOperatorSet {
        node_count: file.node_count,
        dim: file.dim,
        delta: file.delta,
        construction: file.construction,
        terms,
    };
    crate::walk::kraus_residuals(set.node_count, set.dim, &set.terms)?;
    Ok(set)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text: `step,time,p1..pV,trace,purity1..purityV`, LF line endings,
/// 17 significant digits.
pub fn format_trajectory(traj: &Trajectory) -> String {
    let v = traj.node_count();
    let mut out = String::from("step,time");
    for i in 1..=v {
        let _ = write!(out, ",p{i}");
    }
    out.push_str(",trace");
    for i in 1..=v {
        let _ = write!(out, ",purity{i}");
    }
    out.push('\n');
    for row in 0..traj.len() {
        let _ = write!(out, "{},{}", traj.steps[row], sci(traj.times[row]));
        for p in &traj.probabilities[row] {
            let _ = write!(out, ",{}", sci(*p));
        }
        let _ = write!(out, ",{}", sci(traj.traces[row]));
        for p in &traj.purities[row] {
            let _ = write!(out, ",{}", sci(*p));
        }
        out.push('\n');
    }
    out
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::bad_parameter("out", format!("`{}` is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    write_atomic(path, &format_trajectory(traj))
}
