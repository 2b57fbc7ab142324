//! Coin density matrices and the node-indexed block-diagonal walker state
//! `ρ = Σ_i ρ_i ⊗ |i⟩⟨i|`.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix};

/// Tolerance for the block-state invariants (trace sum, block positivity).
pub const BLOCK_TOL: f64 = 1e-10;

/// Reported probabilities within this distance outside `[0, 1]` are clamped.
pub const CLAMP_TOL: f64 = 1e-12;

/// A validated density matrix: Hermitian, positive semi-definite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// Pure state `|k⟩⟨k|` in the computational basis.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = crate::linalg::ONE;
        Self(m)
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }
}

fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(m, 1.0)?.eigenvalues[0])
}

/// Checks Hermiticity, positivity and unit trace, each to absolute `tol`.
pub fn validate_density(rho: &ComplexMatrix, tol: f64) -> Result<DensityMatrix> {
    if !rho.is_square() {
        return Err(Error::NotSquare(rho.rows(), rho.cols()));
    }
    if !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    let defect = rho.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian {
            what: "density matrix".into(),
            deviation: defect,
        });
    }
    let min = min_eigenvalue(rho)?;
    if min < -tol {
        return Err(Error::NotPsd(min));
    }
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
        return Err(Error::BadTrace(trace.re));
    }
    Ok(DensityMatrix(rho.hermitian_part()))
}

/// Block-diagonal walker state. Blocks are kept unnormalized; the node
/// probabilities are their traces.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    blocks: Vec<ComplexMatrix>,
}

impl BlockState {
    /// Validates `Σ Tr ρ_i = 1` and per-block Hermitian positivity.
    pub fn new(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let state = Self::from_blocks_unchecked(blocks)?;
        let total = state.total_trace();
        if (total - 1.0).abs() > BLOCK_TOL {
            return Err(Error::BadTrace(total));
        }
        for block in &state.blocks {
            let defect = block.hermiticity_defect();
            if defect > BLOCK_TOL {
                return Err(Error::NotHermitian {
                    what: "node block".into(),
                    deviation: defect,
                });
            }
            let min = min_eigenvalue(block)?;
            if min < -BLOCK_TOL {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(state)
    }

    /// Shape checks only: at least one node, all blocks square, equal size
    /// and finite. Used for intermediate results whose trace may drift.
    pub fn from_blocks_unchecked(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::ShapeMismatch("block state needs at least one node".into()))?;
        let dim = first.rows();
        for b in &blocks {
            if !b.is_square() {
                return Err(Error::NotSquare(b.rows(), b.cols()));
            }
            if b.rows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: b.rows(),
                });
            }
            if !b.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { blocks })
    }

    /// Walker localized on `node` with coin state `coin`.
    pub fn localized(node_count: usize, node: usize, coin: &DensityMatrix) -> Result<Self> {
        if node >= node_count {
            return Err(Error::bad_parameter(
                "node",
                format!("node {node} out of range for {node_count} nodes"),
            ));
        }
        let dim = coin.dim();
        let blocks = (0..node_count)
            .map(|i| {
                if i == node {
                    coin.matrix().clone()
                } else {
                    ComplexMatrix::zeros(dim, dim)
                }
            })
            .collect();
        Ok(Self { blocks })
    }

    pub fn node_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].rows()
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, node: usize) -> &ComplexMatrix {
        &self.blocks[node]
    }

    pub fn into_blocks(self) -> Vec<ComplexMatrix> {
        self.blocks
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    /// `p_i = Tr ρ_i`, with round-off just outside `[0, 1]` clamped.
    pub fn node_probabilities(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                let p = b.trace().re;
                if (-CLAMP_TOL..0.0).contains(&p) {
                    0.0
                } else if p > 1.0 && p <= 1.0 + CLAMP_TOL {
                    1.0
                } else {
                    p
                }
            })
            .collect()
    }

    /// Purity of the conditional coin state on each node,
    /// `Tr(ρ_i²)/Tr(ρ_i)²`; zero for empty nodes.
    pub fn conditional_purities(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                let p = b.trace().re;
                if p <= 1e-300 {
                    0.0
                } else {
                    (b * b).trace().re / (p * p)
                }
            })
            .collect()
    }

    /// Smallest eigenvalue across all blocks.
    pub fn min_block_eigenvalue(&self) -> Result<f64> {
        self.blocks
            .iter()
            .map(min_eigenvalue)
            .try_fold(f64::INFINITY, |acc, m| m.map(|m| acc.min(m)))
    }

    /// Divides every block by the total trace.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total_trace();
        if total.abs() <= 1e-300 {
            return Err(Error::ZeroTrace(total));
        }
        Ok(Self {
            blocks: self.blocks.iter().map(|b| b.scale_real(1.0 / total)).collect(),
        })
    }

    /// Dense `Σ_i ρ_i ⊗ |i⟩⟨i|` on coin ⊗ position.
    pub fn to_full(&self) -> FullState {
        let v = self.node_count();
        let n = self.dim();
        let mut m = ComplexMatrix::zeros(n * v, n * v);
        for (i, block) in self.blocks.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    m[(a * v + i, b * v + i)] = block[(a, b)];
                }
            }
        }
        FullState {
            node_count: v,
            dim: n,
            matrix: m,
        }
    }

    /// Linear combination `Σ w_k s_k` of equally shaped states, without
    /// renormalization.
    pub fn combine(terms: &[(f64, &BlockState)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::ShapeMismatch("empty combination".into()))?;
        let mut blocks: Vec<ComplexMatrix> = first
            .blocks
            .iter()
            .map(|b| ComplexMatrix::zeros(b.rows(), b.cols()))
            .collect();
        for (w, s) in terms {
            if s.node_count() != first.node_count() || s.dim() != first.dim() {
                return Err(Error::ShapeMismatch("combined states differ in shape".into()));
            }
            for (acc, b) in blocks.iter_mut().zip(&s.blocks) {
                *acc += &b.scale_real(*w);
            }
        }
        Ok(Self { blocks })
    }
}

/// Dense state on coin ⊗ position, including the off-diagonal node blocks
/// `ρ_{k,m}`. Index of (coin `a`, node `i`) is `a·V + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    node_count: usize,
    dim: usize,
    matrix: ComplexMatrix,
}

impl FullState {
    /// Validates Hermiticity, positivity and unit trace to `BLOCK_TOL`.
    pub fn new(node_count: usize, dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != node_count * dim {
            return Err(Error::DimensionMismatch {
                expected: node_count * dim,
                got: matrix.rows(),
            });
        }
        let rho = validate_density(&matrix, BLOCK_TOL)?;
        Ok(Self {
            node_count,
            dim,
            matrix: rho.into_matrix(),
        })
    }

    pub(crate) fn from_parts_unchecked(node_count: usize, dim: usize, matrix: ComplexMatrix) -> Self {
        Self {
            node_count,
            dim,
            matrix,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Coin-space block `ρ_{k,m}`.
    pub fn node_block(&self, k: usize, m: usize) -> ComplexMatrix {
        let v = self.node_count;
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                out[(a, b)] = self.matrix[(a * v + k, b * v + m)];
            }
        }
        out
    }

    /// Frobenius mass carried by the off-diagonal node blocks.
    pub fn off_diagonal_mass(&self) -> f64 {
        let mut mass = 0.0;
        for k in 0..self.node_count {
            for m in 0..self.node_count {
                if k != m {
                    mass += self.node_block(k, m).frobenius_norm();
                }
            }
        }
        mass
    }
}

/// Keeps the diagonal node blocks of a full state and reports the Frobenius
/// mass of the discarded off-diagonal blocks.
pub fn block_extract(full: &FullState) -> (BlockState, f64) {
    let blocks = (0..full.node_count).map(|i| full.node_block(i, i)).collect();
    (BlockState { blocks }, full.off_diagonal_mass())
}
