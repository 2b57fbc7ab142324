//! Bohr frequencies between the two node Hamiltonians and the matching
//! frequency components of the coupling operator.
//!
//! An eigenvalue pair `(λ_i, ξ_j)` with `λ_i − ξ_j ≥ 0` (up to the merge
//! tolerance) feeds the "up" component `A²¹†(ω)`; every other pair feeds
//! the "down" component `A¹²†(ω′)` with `ω′ = ξ_j − λ_i > 0`. Each pair is
//! therefore counted exactly once, and zero frequencies live only in the up
//! list.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, EigenSystem, HERMITIAN_TOL};

/// Default relative tolerance for degeneracy detection and frequency merging.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

/// Eigenoperators with Frobenius norm at or below this fraction of `‖A‖_F`
/// are dropped.
pub const PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `A²¹†(ω)`: node-2 eigenstate `ξ_j` to node-1 eigenstate `λ_i`, `λ_i − ξ_j = ω ≥ 0`.
    Up,
    /// `A¹²†(ω′)`: node-1 eigenstate `λ_j` to node-2 eigenstate `ξ_i`, `ξ_i − λ_j = ω′ > 0`.
    Down,
}

/// A merged Bohr frequency and the eigenvalue index pairs `(row, col)` it
/// collects. For `Up`, rows index Ω₁ and columns Ω₂; for `Down`, the reverse.
#[derive(Debug, Clone)]
struct FrequencyCluster {
    omega: f64,
    pairs: Vec<(usize, usize)>,
}

/// One nonzero frequency component of the coupling operator.
#[derive(Debug, Clone)]
pub struct Eigenoperator {
    pub omega: f64,
    pub direction: Direction,
    /// `A²¹†(ω)` for `Up`, `A¹²†(ω′)` for `Down`.
    pub matrix: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct BohrDecomposition {
    pub eig1: EigenSystem,
    pub eig2: EigenSystem,
    up: Vec<FrequencyCluster>,
    down: Vec<FrequencyCluster>,
    merge_tol: f64,
}

fn check_nondegenerate(eig: &EigenSystem, rel_tol: f64, what: &str) -> Result<()> {
    let gap = eig.min_gap();
    let tol = rel_tol * eig.span();
    if eig.dim() > 1 && gap <= tol {
        return Err(Error::DegenerateSpectrum {
            what: what.to_string(),
            gap,
            tol,
        });
    }
    Ok(())
}

/// Member frequencies and eigenvalue index pairs of one cluster in progress.
type Group = (Vec<f64>, Vec<(usize, usize)>);

/// Single-linkage clustering of sorted `(value, pair)` entries.
fn cluster(mut entries: Vec<(f64, (usize, usize))>, tol: f64, snap_zero: bool) -> Vec<FrequencyCluster> {
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<Group> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (value, pair) in entries {
        match out.last_mut() {
            Some((values, pairs)) if value - last <= tol => {
                values.push(value);
                pairs.push(pair);
            }
            _ => out.push((vec![value], vec![pair])),
        }
        last = value;
    }
    out.into_iter()
        .map(|(values, pairs)| {
            let touches_zero = values.iter().any(|v| v.abs() <= tol);
            let omega = if snap_zero && touches_zero {
                0.0
            } else {
                values.iter().sum::<f64>() / values.len() as f64
            };
            FrequencyCluster { omega, pairs }
        })
        .collect()
}

/// Computes the merged up/down Bohr frequency sets of `(Ω₁, Ω₂)`.
///
/// `gap_tol` is relative: each Hamiltonian must have all eigenvalue gaps
/// above `gap_tol·span(Ω)`, and frequencies closer than
/// `gap_tol·span(Ω₁ ∪ Ω₂)` are merged.
pub fn bohr_frequencies(omega1: &ComplexMatrix, omega2: &ComplexMatrix, gap_tol: f64) -> Result<BohrDecomposition> {
    if omega1.rows() != omega2.rows() {
        return Err(Error::DimensionMismatch {
            expected: omega1.rows(),
            got: omega2.rows(),
        });
    }
    let eig1 = hermitian_eig(omega1, HERMITIAN_TOL).map_err(|e| rename_hermitian(e, "omega1"))?;
    let eig2 = hermitian_eig(omega2, HERMITIAN_TOL).map_err(|e| rename_hermitian(e, "omega2"))?;
    check_nondegenerate(&eig1, gap_tol, "omega1")?;
    check_nondegenerate(&eig2, gap_tol, "omega2")?;

    let all = eig1.eigenvalues.iter().chain(&eig2.eigenvalues);
    let lo = all.clone().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi - lo > 0.0 { hi - lo } else { hi.abs().max(1.0) };
    let merge_tol = gap_tol * scale;

    let mut up = Vec::new();
    let mut down = Vec::new();
    for (i, &l) in eig1.eigenvalues.iter().enumerate() {
        for (j, &x) in eig2.eigenvalues.iter().enumerate() {
            let d = l - x;
            if d >= -merge_tol {
                up.push((d, (i, j)));
            } else {
                down.push((-d, (j, i)));
            }
        }
    }
    Ok(BohrDecomposition {
        eig1,
        eig2,
        up: cluster(up, merge_tol, true),
        down: cluster(down, merge_tol, false),
        merge_tol,
    })
}

fn rename_hermitian(e: Error, what: &str) -> Error {
    match e {
        Error::NotHermitian { deviation, .. } => Error::NotHermitian {
            what: what.to_string(),
            deviation,
        },
        other => other,
    }
}

impl BohrDecomposition {
    pub fn up_frequencies(&self) -> Vec<f64> {
        self.up.iter().map(|c| c.omega).collect()
    }

    pub fn down_frequencies(&self) -> Vec<f64> {
        self.down.iter().map(|c| c.omega).collect()
    }

    pub fn merge_tol(&self) -> f64 {
        self.merge_tol
    }

    fn find(&self, omega: f64, direction: Direction) -> Result<&FrequencyCluster> {
        let list = match direction {
            Direction::Up => &self.up,
            Direction::Down => &self.down,
        };
        list.iter()
            .filter(|c| (c.omega - omega).abs() <= self.merge_tol)
            .min_by(|a, b| (a.omega - omega).abs().total_cmp(&(b.omega - omega).abs()))
            .ok_or(Error::UnknownFrequency(omega))
    }

    fn component(&self, a: &ComplexMatrix, cluster: &FrequencyCluster, direction: Direction) -> ComplexMatrix {
        let (rows, cols) = match direction {
            Direction::Up => (&self.eig1.eigenvectors, &self.eig2.eigenvectors),
            Direction::Down => (&self.eig2.eigenvectors, &self.eig1.eigenvectors),
        };
        // matrix elements ⟨row_i| A |col_j⟩ restricted to the cluster
        let elements = &(&rows.adjoint() * a) * cols;
        let n = a.rows();
        let mut masked = ComplexMatrix::zeros(n, n);
        for &(i, j) in &cluster.pairs {
            masked[(i, j)] = elements[(i, j)];
        }
        &(rows * &masked) * &cols.adjoint()
    }

    /// `A²¹†(ω)` (`Up`) or `A¹²†(ω′)` (`Down`) for a frequency in the
    /// corresponding list.
    pub fn eigenoperator(&self, a: &ComplexMatrix, omega: f64, direction: Direction) -> Result<ComplexMatrix> {
        self.check_coupling(a)?;
        let cluster = self.find(omega, direction)?;
        Ok(self.component(a, cluster, direction))
    }

    /// All nonzero frequency components of `a`, up list first.
    pub fn eigenoperators(&self, a: &ComplexMatrix) -> Result<Vec<Eigenoperator>> {
        self.check_coupling(a)?;
        let floor = PRUNE_TOL * a.frobenius_norm();
        let mut out = Vec::new();
        for (list, direction) in [(&self.up, Direction::Up), (&self.down, Direction::Down)] {
            for cluster in list {
                let matrix = self.component(a, cluster, direction);
                if matrix.frobenius_norm() > floor {
                    out.push(Eigenoperator {
                        omega: cluster.omega,
                        direction,
                        matrix,
                    });
                }
            }
        }
        Ok(out)
    }

    fn check_coupling(&self, a: &ComplexMatrix) -> Result<()> {
        if !a.is_square() {
            return Err(Error::NotSquare(a.rows(), a.cols()));
        }
        if a.rows() != self.eig1.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.eig1.dim(),
                got: a.rows(),
            });
        }
        Ok(())
    }
}

/// `Σ_ω A²¹†(ω) + Σ_ω′ (A¹²†(ω′))†`, which equals `A` for Hermitian `A`.
pub fn reassemble(ops: &[Eigenoperator]) -> Option<ComplexMatrix> {
    let n = ops.first()?.matrix.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for op in ops {
        match op.direction {
            Direction::Up => out += &op.matrix,
            Direction::Down => out += &op.matrix.adjoint(),
        }
    }
    Some(out)
}
