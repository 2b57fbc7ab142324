//! Discrete-time open quantum walk on a finite graph.
//!
//! A walk is a list of labeled Kraus terms `B_i^j` (coin operator applied
//! when the walker hops from node `j` to node `i`). One step maps the block
//! state as `ρ_i ← Σ_j Σ_labels B_i^j ρ_j B_i^j†`; the dilated operators
//! `B_i^j ⊗ |i⟩⟨j|` are only built for full-space demonstrations and the
//! Choi matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ONE, ZERO};
use crate::state::{BlockState, FullState};
use crate::trajectory::Trajectory;

/// Normalization residual accepted by strict-mode maps.
pub const STRICT_TOL: f64 = 1e-10;

/// Label carried by a Kraus term so same-edge terms stay distinguishable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum KrausLabel {
    /// Diagonal (stay) operator `B_j^j`.
    Stay,
    /// Term coming from an up-list frequency ω.
    Omega(f64),
    /// Term coming from a down-list frequency ω′.
    OmegaPrime(f64),
    /// Plain index for hand-built maps.
    Index(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausTerm {
    pub from: usize,
    pub to: usize,
    pub label: KrausLabel,
    pub matrix: ComplexMatrix,
}

impl KrausTerm {
    pub fn new(from: usize, to: usize, label: KrausLabel, matrix: ComplexMatrix) -> Self {
        Self {
            from,
            to,
            label,
            matrix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    /// Requires a normalized family; steps preserve trace exactly.
    Strict,
    /// Divides the output by its total trace after every step.
    Renormalized,
    /// Applies the operators verbatim and records the trace drift.
    FirstOrderWarn,
}

fn check_shapes(node_count: usize, dim: usize, terms: &[KrausTerm]) -> Result<()> {
    if node_count == 0 || dim == 0 {
        return Err(Error::ShapeMismatch(
            "walk needs at least one node and a coin dimension".into(),
        ));
    }
    for t in terms {
        if t.from >= node_count || t.to >= node_count {
            return Err(Error::ShapeMismatch(format!(
                "edge {} -> {} outside a {node_count}-node graph",
                t.from, t.to
            )));
        }
        if t.matrix.rows() != dim || t.matrix.cols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "Kraus matrix on edge {} -> {} is {}x{}, expected {dim}x{dim}",
                t.from,
                t.to,
                t.matrix.rows(),
                t.matrix.cols()
            )));
        }
    }
    Ok(())
}

/// `‖Σ_i Σ_labels B_i^j† B_i^j − I‖_F` for every source node `j`.
pub fn kraus_residuals(node_count: usize, dim: usize, terms: &[KrausTerm]) -> Result<Vec<f64>> {
    check_shapes(node_count, dim, terms)?;
    let mut sums = vec![ComplexMatrix::zeros(dim, dim); node_count];
    for t in terms {
        sums[t.from] += &t.matrix.gram();
    }
    let id = ComplexMatrix::identity(dim);
    Ok(sums.iter().map(|s| (s - &id).frobenius_norm()).collect())
}

/// One discrete-time open quantum walk.
#[derive(Debug, Clone)]
pub struct OqwMap {
    node_count: usize,
    dim: usize,
    terms: Vec<KrausTerm>,
    mode: StepMode,
    step_size: Option<f64>,
}

impl OqwMap {
    /// Checks shapes; strict mode also requires every node's residual to be
    /// at most [`STRICT_TOL`].
    pub fn new(node_count: usize, dim: usize, terms: Vec<KrausTerm>, mode: StepMode) -> Result<Self> {
        let residuals = kraus_residuals(node_count, dim, &terms)?;
        if mode == StepMode::Strict {
            if let Some((node, &residual)) = residuals.iter().enumerate().find(|(_, &r)| r > STRICT_TOL) {
                return Err(Error::NotNormalized {
                    node,
                    residual,
                    tol: STRICT_TOL,
                });
            }
        }
        Ok(Self {
            node_count,
            dim,
            terms,
            mode,
            step_size: None,
        })
    }

    /// Attaches the physical time per step used for trajectory timestamps.
    pub fn with_step_size(mut self, delta: f64) -> Self {
        self.step_size = Some(delta);
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> StepMode {
        self.mode
    }

    pub fn step_size(&self) -> Option<f64> {
        self.step_size
    }

    pub fn terms(&self) -> &[KrausTerm] {
        &self.terms
    }

    pub fn residuals(&self) -> Vec<f64> {
        kraus_residuals(self.node_count, self.dim, &self.terms).expect("shapes checked at construction")
    }

    fn check_state(&self, node_count: usize, dim: usize) -> Result<()> {
        if node_count != self.node_count {
            return Err(Error::DimensionMismatch {
                expected: self.node_count,
                got: node_count,
            });
        }
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: dim,
            });
        }
        Ok(())
    }

    /// Applies the map without any renormalization.
    pub fn apply_raw(&self, s: &BlockState) -> Result<BlockState> {
        self.check_state(s.node_count(), s.dim())?;
        let mut out = vec![ComplexMatrix::zeros(self.dim, self.dim); self.node_count];
        for t in &self.terms {
            out[t.to] += &t.matrix.sandwich(s.block(t.from));
        }
        BlockState::from_blocks_unchecked(out)
    }

    /// One step in the configured mode. Returns the stored state and the
    /// total trace before renormalization.
    pub fn step(&self, s: &BlockState) -> Result<(BlockState, f64)> {
        let raw = self.apply_raw(s)?;
        let trace = raw.total_trace();
        match self.mode {
            StepMode::Strict | StepMode::FirstOrderWarn => Ok((raw, trace)),
            StepMode::Renormalized => {
                if trace <= 1e-300 {
                    return Err(Error::ZeroTrace(trace));
                }
                Ok((raw.normalized()?, trace))
            }
        }
    }

    /// Dilated operators `M_i^j = B_i^j ⊗ |i⟩⟨j|` on coin ⊗ position.
    pub fn dilated_operators(&self) -> Vec<ComplexMatrix> {
        self.terms
            .iter()
            .map(|t| {
                let mut hop = ComplexMatrix::zeros(self.node_count, self.node_count);
                hop[(t.to, t.from)] = ONE;
                t.matrix.kron(&hop)
            })
            .collect()
    }

    /// `Σ M ρ M†` on a full (not necessarily block-diagonal) state, using the
    /// dilated operators.
    pub fn apply_dilated(&self, full: &FullState) -> Result<FullState> {
        self.check_state(full.node_count(), full.dim())?;
        let size = self.node_count * self.dim;
        let mut out = ComplexMatrix::zeros(size, size);
        for m in self.dilated_operators() {
            out += &m.sandwich(full.matrix());
        }
        Ok(FullState::from_parts_unchecked(self.node_count, self.dim, out))
    }

    /// Choi matrix `Σ_ab |a⟩⟨b| ⊗ Φ(|a⟩⟨b|)` of the dilated map.
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let size = self.node_count * self.dim;
        let ops = self.dilated_operators();
        let mut choi = ComplexMatrix::zeros(size * size, size * size);
        for a in 0..size {
            for b in 0..size {
                let mut unit = ComplexMatrix::zeros(size, size);
                unit[(a, b)] = ONE;
                let mut image = ComplexMatrix::zeros(size, size);
                for m in &ops {
                    image += &m.sandwich(&unit);
                }
                for k in 0..size {
                    for l in 0..size {
                        let z = image[(k, l)];
                        if z != ZERO {
                            choi[(a * size + k, b * size + l)] = z;
                        }
                    }
                }
            }
        }
        choi
    }
}

/// Per-node normalization residuals; errors with the offending node when a
/// residual exceeds `tol`.
pub fn validate_kraus_normalization(map: &OqwMap, tol: f64) -> Result<Vec<f64>> {
    let residuals = map.residuals();
    if let Some((node, &residual)) = residuals.iter().enumerate().find(|(_, &r)| r > tol) {
        return Err(Error::NotNormalized { node, residual, tol });
    }
    Ok(residuals)
}

pub fn oqw_step(map: &OqwMap, s: &BlockState) -> Result<BlockState> {
    map.step(s).map(|(state, _)| state)
}

/// Runs `steps` steps; the trajectory holds `steps + 1` rows.
pub fn run_walk(map: &OqwMap, init: &BlockState, steps: usize) -> Result<Trajectory> {
    let dt = map.step_size();
    let time = |n: usize| dt.map_or(n as f64, |d| n as f64 * d);
    let mut traj = Trajectory::new(dt);
    map.check_state(init.node_count(), init.dim())?;
    traj.push(0, 0.0, init.clone(), init.total_trace());
    let mut current = init.clone();
    for n in 1..=steps {
        let (next, raw) = map.step(&current)?;
        traj.push(n, time(n), next.clone(), raw);
        current = next;
    }
    Ok(traj)
}

/// Smallest row index from which every node-probability vector stays within
/// `eps` (max norm) of the final one.
///
/// A trajectory that only settles at its last row has not demonstrably
/// converged and yields `NotConverged`.
pub fn mixing_time(traj: &Trajectory, eps: f64) -> Result<usize> {
    if traj.len() < 2 {
        return Err(Error::bad_parameter("trajectory", "need at least two rows"));
    }
    let last = traj.probabilities.last().unwrap();
    let distance = |p: &[f64]| p.iter().zip(last).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut n = traj.len() - 1;
    while n > 0 && distance(&traj.probabilities[n - 1]) <= eps {
        n -= 1;
    }
    if n == traj.len() - 1 {
        return Err(Error::NotConverged(format!(
            "node probabilities still move by more than {eps} at the final step"
        )));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex64;
    use crate::state::DensityMatrix;

    fn hadamard() -> ComplexMatrix {
        let h = 1.0 / 2f64.sqrt();
        ComplexMatrix::from_real(&[&[h, h], &[h, -h]])
    }

    /// Two-node walk with projector coins: |0⟩ stays, |1⟩ hops.
    fn projector_walk(mode: StepMode) -> OqwMap {
        let p0 = ComplexMatrix::from_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_diagonal(&[0.0, 1.0]);
        let h = hadamard();
        let terms = vec![
            KrausTerm::new(0, 0, KrausLabel::Stay, &h * &p0),
            KrausTerm::new(0, 1, KrausLabel::Index(0), &h * &p1),
            KrausTerm::new(1, 1, KrausLabel::Stay, &h * &p0),
            KrausTerm::new(1, 0, KrausLabel::Index(0), &h * &p1),
        ];
        OqwMap::new(2, 2, terms, mode).unwrap()
    }

    #[test]
    fn unitary_single_node_has_zero_residual() {
        let terms = vec![KrausTerm::new(0, 0, KrausLabel::Stay, hadamard())];
        let map = OqwMap::new(1, 2, terms, StepMode::Strict).unwrap();
        assert!(validate_kraus_normalization(&map, 1e-15).unwrap()[0] < 1e-15);
    }

    #[test]
    fn strict_rejects_unnormalized_family() {
        let terms = vec![KrausTerm::new(
            0,
            0,
            KrausLabel::Stay,
            ComplexMatrix::identity(2).scale_real(0.9),
        )];
        let r = OqwMap::new(1, 2, terms.clone(), StepMode::Strict);
        assert!(matches!(r, Err(Error::NotNormalized { node: 0, .. })));
        assert!(OqwMap::new(1, 2, terms, StepMode::FirstOrderWarn).is_ok());
    }

    #[test]
    fn shape_errors() {
        let terms = vec![KrausTerm::new(0, 3, KrausLabel::Stay, ComplexMatrix::identity(2))];
        assert!(matches!(
            OqwMap::new(2, 2, terms, StepMode::Strict),
            Err(Error::ShapeMismatch(_))
        ));
        let terms = vec![KrausTerm::new(0, 0, KrausLabel::Stay, ComplexMatrix::identity(3))];
        assert!(matches!(
            OqwMap::new(1, 2, terms, StepMode::Strict),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn identity_walk_leaves_state_unchanged() {
        let terms = (0..3)
            .map(|j| KrausTerm::new(j, j, KrausLabel::Stay, ComplexMatrix::identity(2)))
            .collect();
        let map = OqwMap::new(3, 2, terms, StepMode::Strict).unwrap();
        let s = BlockState::new(vec![
            ComplexMatrix::from_diagonal(&[0.2, 0.1]),
            ComplexMatrix::from_diagonal(&[0.3, 0.0]),
            ComplexMatrix::from_diagonal(&[0.25, 0.15]),
        ])
        .unwrap();
        assert_eq!(oqw_step(&map, &s).unwrap(), s);
    }

    #[test]
    fn dimension_mismatch_on_step() {
        let map = projector_walk(StepMode::Strict);
        let s = BlockState::localized(3, 0, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(matches!(oqw_step(&map, &s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn full_state_step_is_block_diagonal() {
        let map = projector_walk(StepMode::Strict);
        // |ψ⟩ = (|0,node0⟩ + i|1,node1⟩)/√2
        let a = 1.0 / 2f64.sqrt();
        let psi = [Complex64::new(a, 0.0), ZERO, ZERO, Complex64::new(0.0, a)];
        let mut m = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        let full = FullState::new(2, 2, m).unwrap();
        assert!(full.off_diagonal_mass() > 0.5);
        let out = map.apply_dilated(&full).unwrap();
        assert!(out.off_diagonal_mass() <= 1e-14);
        // the diagonal blocks agree with the block-wise step on the extracted state
        let (blocks, _) = crate::state::block_extract(&full);
        let stepped = oqw_step(&map, &blocks).unwrap();
        for i in 0..2 {
            assert!(out.node_block(i, i).max_abs_diff(stepped.block(i)) < 1e-15);
        }
    }

    #[test]
    fn renormalized_mode_divides_by_trace() {
        let terms = vec![
            KrausTerm::new(0, 0, KrausLabel::Stay, ComplexMatrix::identity(1).scale_real(0.5)),
            KrausTerm::new(0, 1, KrausLabel::Index(0), ComplexMatrix::identity(1)),
            KrausTerm::new(1, 1, KrausLabel::Stay, ComplexMatrix::identity(1)),
        ];
        let map = OqwMap::new(2, 1, terms, StepMode::Renormalized).unwrap();
        let s = BlockState::localized(2, 0, &DensityMatrix::maximally_mixed(1)).unwrap();
        let (next, raw) = map.step(&s).unwrap();
        assert!((raw - 1.25).abs() < 1e-15);
        assert!((next.node_probabilities()[0] - 0.2).abs() < 1e-15);
        assert!((next.total_trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn renormalized_mode_rejects_vanishing_trace() {
        let terms = vec![KrausTerm::new(0, 0, KrausLabel::Stay, ComplexMatrix::zeros(1, 1))];
        let map = OqwMap::new(1, 1, terms, StepMode::Renormalized).unwrap();
        let s = BlockState::localized(1, 0, &DensityMatrix::maximally_mixed(1)).unwrap();
        assert!(matches!(map.step(&s), Err(Error::ZeroTrace(_))));
    }

    #[test]
    fn run_walk_lengths_and_times() {
        let map = projector_walk(StepMode::Strict).with_step_size(0.5);
        let init = BlockState::localized(2, 0, &DensityMatrix::basis(2, 0)).unwrap();
        let traj = run_walk(&map, &init, 0).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], init);
        let traj = run_walk(&map, &init, 7).unwrap();
        assert_eq!(traj.len(), 8);
        assert_eq!(traj.times[4], 2.0);
        assert!(traj.max_trace_error() < 1e-14);
    }

    #[test]
    fn mixing_time_examples() {
        let map = projector_walk(StepMode::Strict);
        let identity = OqwMap::new(
            2,
            2,
            (0..2)
                .map(|j| KrausTerm::new(j, j, KrausLabel::Stay, ComplexMatrix::identity(2)))
                .collect(),
            StepMode::Strict,
        )
        .unwrap();
        let init = BlockState::localized(2, 0, &DensityMatrix::basis(2, 0)).unwrap();
        let constant = run_walk(&identity, &init, 5).unwrap();
        assert_eq!(mixing_time(&constant, 1e-12).unwrap(), 0);

        let traj = run_walk(&map, &init, 60).unwrap();
        let n = mixing_time(&traj, 1e-3).unwrap();
        assert!(n > 0 && n < 60);
        let hop = BlockState::localized(2, 0, &DensityMatrix::basis(2, 1)).unwrap();
        let short = run_walk(&map, &hop, 1).unwrap();
        assert!(matches!(mixing_time(&short, 1e-6), Err(Error::NotConverged(_))));
    }
}
