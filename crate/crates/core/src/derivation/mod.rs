//! From a microscopic model (node Hamiltonians Ω₁, Ω₂, coupling A, thermal
//! bath γ₀, β) to the jump channels of the two-node master equation and the
//! coin operators of the discrete walk.
//!
//! Node 1 is index 0 and node 2 is index 1 throughout.

mod bath;
mod bohr;

pub use bath::{bath_rate, RateSign};
pub use bohr::{bohr_frequencies, reassemble, BohrDecomposition, Direction, Eigenoperator, DEFAULT_GAP_TOL, PRUNE_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, ComplexMatrix, HERMITIAN_TOL};
use crate::state::DensityMatrix;
use crate::walk::{kraus_residuals, KrausLabel, KrausTerm, OqwMap, StepMode};

pub const NODE_1: usize = 0;
pub const NODE_2: usize = 1;

/// System part of the system–bath coupling.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// `H_SB = A ⊗ (|1⟩⟨2| + |2⟩⟨1|) ⊗ B` with Hermitian `A`; channels follow
    /// the generic block master equation.
    Hermitian(ComplexMatrix),
    /// The two-level worked example: a single transition at ω₀ with lowering
    /// operator σ₋ carrying the walker from node 2 to node 1 at rate γ(−ω₀)
    /// and σ₊ from node 1 to node 2 at rate γ(ω₀). Basis order is (e, g).
    TwoLevelJumpPair,
}

/// σ₊ = |e⟩⟨g| in the (e, g) basis.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
}

/// σ₋ = |g⟩⟨e| in the (e, g) basis.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[0.0, 0.0], &[1.0, 0.0]])
}

/// Validated microscopic model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    omega1: ComplexMatrix,
    omega2: ComplexMatrix,
    coupling: Coupling,
    gamma0: f64,
    beta: f64,
    zero_frequency_rate: Option<f64>,
    gap_tol: f64,
}

fn check_hermitian(m: &ComplexMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            what: what.to_string(),
            deviation: m.hermiticity_defect(),
        });
    }
    Ok(())
}

impl ModelSpec {
    pub fn new(
        omega1: ComplexMatrix,
        omega2: ComplexMatrix,
        coupling: Coupling,
        gamma0: f64,
        beta: f64,
    ) -> Result<Self> {
        check_hermitian(&omega1, "omega1")?;
        check_hermitian(&omega2, "omega2")?;
        if omega1.rows() != omega2.rows() {
            return Err(Error::DimensionMismatch {
                expected: omega1.rows(),
                got: omega2.rows(),
            });
        }
        match &coupling {
            Coupling::Hermitian(a) => {
                check_hermitian(a, "coupling_a")?;
                if a.rows() != omega1.rows() {
                    return Err(Error::DimensionMismatch {
                        expected: omega1.rows(),
                        got: a.rows(),
                    });
                }
            }
            Coupling::TwoLevelJumpPair => {
                let diagonal = |m: &ComplexMatrix| m.rows() == 2 && m[(0, 1)].norm() == 0.0 && m[(1, 0)].norm() == 0.0;
                if !(diagonal(&omega1) && omega1 == omega2 && omega1[(0, 0)].re > omega1[(1, 1)].re) {
                    return Err(Error::bad_parameter(
                        "preset",
                        "two-level jump pair needs Ω₁ = Ω₂ = diag(E_e, E_g) with E_e > E_g",
                    ));
                }
            }
        }
        if !(gamma0.is_finite() && gamma0 >= 0.0) {
            return Err(Error::bad_parameter(
                "gamma0",
                format!("must be finite and >= 0, got {gamma0}"),
            ));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::bad_parameter(
                "beta",
                format!("must be finite and > 0, got {beta}"),
            ));
        }
        let spec = Self {
            omega1,
            omega2,
            coupling,
            gamma0,
            beta,
            zero_frequency_rate: None,
            gap_tol: DEFAULT_GAP_TOL,
        };
        spec.bohr()?;
        Ok(spec)
    }

    /// Two-level example with ω₀ = 1: Ω₁ = Ω₂ = σ_z/2, so `beta` equals βω₀.
    pub fn two_level(beta_omega0: f64, gamma0: f64) -> Result<Self> {
        let h = ComplexMatrix::from_diagonal(&[0.5, -0.5]);
        Self::new(h.clone(), h, Coupling::TwoLevelJumpPair, gamma0, beta_omega0)
    }

    /// Rate used for both directions of zero-frequency (dephasing-like)
    /// components; without it such components are an error.
    pub fn with_zero_frequency_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::bad_parameter("zero_frequency_rate", "must be finite and >= 0"));
        }
        self.zero_frequency_rate = Some(rate);
        Ok(self)
    }

    pub fn with_gap_tol(mut self, gap_tol: f64) -> Result<Self> {
        self.gap_tol = gap_tol;
        self.bohr()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.omega1.rows()
    }

    pub fn omega1(&self) -> &ComplexMatrix {
        &self.omega1
    }

    pub fn omega2(&self) -> &ComplexMatrix {
        &self.omega2
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn zero_frequency_rate(&self) -> Option<f64> {
        self.zero_frequency_rate
    }

    pub fn is_two_level_preset(&self) -> bool {
        self.coupling == Coupling::TwoLevelJumpPair
    }

    pub fn bohr(&self) -> Result<BohrDecomposition> {
        bohr_frequencies(&self.omega1, &self.omega2, self.gap_tol)
    }

    pub fn rate(&self, omega: f64, sign: RateSign) -> Result<f64> {
        bath_rate(self.gamma0, self.beta, omega, sign)
    }

    /// Transition frequency ω₀ of the two-level preset.
    pub fn preset_frequency(&self) -> Option<f64> {
        self.is_two_level_preset()
            .then(|| self.omega1[(0, 0)].re - self.omega1[(1, 1)].re)
    }

    /// Lowest eigenstate of Ω₁, the default initial coin state on node 1.
    pub fn ground_state(&self) -> Result<DensityMatrix> {
        let bd = self.bohr()?;
        let v = bd.eig1.vector(0);
        let n = v.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        crate::state::validate_density(&m, 1e-12)
    }

    /// Dissipative channels of the block master equation.
    ///
    /// For every up component `E = A²¹†(ω)`: `E` from node 2 to node 1 at
    /// γ(ω) and `E†` from node 1 to node 2 at γ(−ω). For every down component
    /// `F = A¹²†(ω′)`: `F†` from node 2 to node 1 at γ(−ω′) and `F` from node
    /// 1 to node 2 at γ(ω′).
    pub fn channels(&self) -> Result<Vec<JumpChannel>> {
        match &self.coupling {
            Coupling::TwoLevelJumpPair => {
                let w0 = self.preset_frequency().expect("preset");
                let label = KrausLabel::Omega(w0);
                Ok(vec![
                    JumpChannel {
                        from: NODE_2,
                        to: NODE_1,
                        label,
                        operator: sigma_minus(),
                        rate: self.rate(w0, RateSign::Minus)?,
                    },
                    JumpChannel {
                        from: NODE_1,
                        to: NODE_2,
                        label,
                        operator: sigma_plus(),
                        rate: self.rate(w0, RateSign::Plus)?,
                    },
                ])
            }
            Coupling::Hermitian(a) => {
                let bd = self.bohr()?;
                let mut out = Vec::new();
                for op in bd.eigenoperators(a)? {
                    let (rate_2_to_1, rate_1_to_2) = if op.omega == 0.0 {
                        let r = self.zero_frequency_rate.ok_or(Error::ZeroFrequency)?;
                        (r, r)
                    } else {
                        match op.direction {
                            Direction::Up => (
                                self.rate(op.omega, RateSign::Plus)?,
                                self.rate(op.omega, RateSign::Minus)?,
                            ),
                            Direction::Down => (
                                self.rate(op.omega, RateSign::Minus)?,
                                self.rate(op.omega, RateSign::Plus)?,
                            ),
                        }
                    };
                    let (label, into_1, into_2) = match op.direction {
                        Direction::Up => (KrausLabel::Omega(op.omega), op.matrix.clone(), op.matrix.adjoint()),
                        Direction::Down => (KrausLabel::OmegaPrime(op.omega), op.matrix.adjoint(), op.matrix.clone()),
                    };
                    out.push(JumpChannel {
                        from: NODE_2,
                        to: NODE_1,
                        label,
                        operator: into_1,
                        rate: rate_2_to_1,
                    });
                    out.push(JumpChannel {
                        from: NODE_1,
                        to: NODE_2,
                        label,
                        operator: into_2,
                        rate: rate_1_to_2,
                    });
                }
                Ok(out)
            }
        }
    }
}

/// One dissipator `rate · D(K ⊗ |to⟩⟨from|)` of the block master equation.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel {
    pub from: usize,
    pub to: usize,
    pub label: KrausLabel,
    pub operator: ComplexMatrix,
    pub rate: f64,
}

/// How the diagonal (stay) operators are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `B_j^j = I − (Δ/2) Σ rate·K†K`, normalized only to O(Δ²).
    FirstOrder,
    /// `B_j^j = √(I − Δ Σ rate·K†K)`, exactly normalized.
    Exact,
}

/// Coin operators of one discrete walk derived with time step Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOperatorSet {
    pub node_count: usize,
    pub dim: usize,
    pub delta: f64,
    pub construction: Construction,
    pub terms: Vec<KrausTerm>,
}

impl TransitionOperatorSet {
    pub fn normalization_residual(&self) -> Vec<f64> {
        kraus_residuals(self.node_count, self.dim, &self.terms).expect("derived sets are well shaped")
    }

    pub fn to_map(&self, mode: StepMode) -> Result<OqwMap> {
        Ok(OqwMap::new(self.node_count, self.dim, self.terms.clone(), mode)?.with_step_size(self.delta))
    }

    /// Terms on the edge `from → to`.
    pub fn edge(&self, from: usize, to: usize) -> impl Iterator<Item = &KrausTerm> {
        self.terms.iter().filter(move |t| t.from == from && t.to == to)
    }
}

/// Finite-difference coin operators for a channel list: hop operators
/// `√(Δ·rate)·K` and one stay operator per node.
pub fn kraus_from_channels(
    node_count: usize,
    dim: usize,
    channels: &[JumpChannel],
    delta: f64,
    construction: Construction,
) -> Result<TransitionOperatorSet> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::bad_parameter(
            "delta",
            format!("must be finite and >= 0, got {delta}"),
        ));
    }
    let id = ComplexMatrix::identity(dim);
    let mut outflow = vec![ComplexMatrix::zeros(dim, dim); node_count];
    let mut hops = Vec::with_capacity(channels.len());
    for c in channels {
        if c.from >= node_count || c.to >= node_count || c.operator.rows() != dim {
            return Err(Error::ShapeMismatch(format!(
                "channel {} -> {} does not fit the model",
                c.from, c.to
            )));
        }
        outflow[c.from] += &c.operator.gram().scale_real(c.rate);
        hops.push(KrausTerm::new(
            c.from,
            c.to,
            c.label,
            c.operator.scale_real((delta * c.rate).sqrt()),
        ));
    }
    let mut terms = Vec::with_capacity(node_count + hops.len());
    for (j, out) in outflow.iter().enumerate() {
        let stay = match construction {
            Construction::FirstOrder => &id - &out.scale_real(delta / 2.0),
            Construction::Exact => {
                let target = &id - &out.scale_real(delta);
                psd_sqrt(&target).map_err(|e| match e {
                    Error::NotPsd(min) => {
                        Error::StepTooLarge(format!("I - Δ·Σ rate·K†K at node {} has eigenvalue {min:.3e}", j + 1))
                    }
                    other => other,
                })?
            }
        };
        terms.push(KrausTerm::new(j, j, KrausLabel::Stay, stay));
    }
    terms.extend(hops);
    Ok(TransitionOperatorSet {
        node_count,
        dim,
        delta,
        construction,
        terms,
    })
}

/// Coin operators of the two-node walk derived from `spec` with step Δ.
pub fn build_transition_operators(
    spec: &ModelSpec,
    delta: f64,
    construction: Construction,
) -> Result<TransitionOperatorSet> {
    kraus_from_channels(2, spec.dim(), &spec.channels()?, delta, construction)
}

pub fn normalization_residual(ops: &TransitionOperatorSet) -> Vec<f64> {
    ops.normalization_residual()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex64;

    fn two_level() -> ModelSpec {
        ModelSpec::two_level(0.01, 1.0).unwrap()
    }

    fn only(ops: &TransitionOperatorSet, from: usize, to: usize) -> ComplexMatrix {
        let v: Vec<_> = ops.edge(from, to).collect();
        assert_eq!(v.len(), 1, "edge {from}->{to}");
        v[0].matrix.clone()
    }

    #[test]
    fn two_level_operators_match_closed_form() {
        let spec = two_level();
        let delta = 0.01;
        let up = spec.rate(1.0, RateSign::Plus).unwrap();
        let down = spec.rate(1.0, RateSign::Minus).unwrap();
        let ops = build_transition_operators(&spec, delta, Construction::FirstOrder).unwrap();
        let id = ComplexMatrix::identity(2);
        let ground = &sigma_minus() * &sigma_plus();
        let excited = &sigma_plus() * &sigma_minus();

        let b21 = sigma_minus().scale_real((delta * down).sqrt());
        let b12 = sigma_plus().scale_real((delta * up).sqrt());
        let b11 = &id - &ground.scale_real(delta * up / 2.0);
        let b22 = &id - &excited.scale_real(delta * down / 2.0);
        assert!(only(&ops, NODE_2, NODE_1).max_abs_diff(&b21) < 1e-15);
        assert!(only(&ops, NODE_1, NODE_2).max_abs_diff(&b12) < 1e-15);
        assert!(only(&ops, NODE_1, NODE_1).max_abs_diff(&b11) < 1e-15);
        assert!(only(&ops, NODE_2, NODE_2).max_abs_diff(&b22) < 1e-15);
    }

    #[test]
    fn zero_step_is_identity() {
        for construction in [Construction::FirstOrder, Construction::Exact] {
            let ops = build_transition_operators(&two_level(), 0.0, construction).unwrap();
            for t in &ops.terms {
                if t.from == t.to {
                    assert!(t.matrix.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
                } else {
                    assert_eq!(t.matrix.frobenius_norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn first_order_residual_is_projector_square() {
        // Δγ(ω₀) = 0.02 at βω₀ = 0.01 needs Δ = 0.02/γ(ω₀)
        let spec = two_level();
        let up = spec.rate(1.0, RateSign::Plus).unwrap();
        let delta = 0.02 / up;
        let ops = build_transition_operators(&spec, delta, Construction::FirstOrder).unwrap();
        let r = ops.normalization_residual();
        assert!((r[NODE_1] - 1e-4).abs() <= 1e-12 * 1e-4);
    }

    #[test]
    fn coarse_step_breaks_first_order_normalization() {
        let ops = build_transition_operators(&two_level(), 0.01, Construction::FirstOrder).unwrap();
        let r = ops.normalization_residual();
        // (Δγ(ω₀)/2)² with Δγ(ω₀) = 0.995008333…
        assert!((r[NODE_1] - 0.247_510_395_843_784_68).abs() < 1e-12);
    }

    #[test]
    fn exact_mode_fails_for_large_step() {
        let r = build_transition_operators(&two_level(), 0.01, Construction::Exact);
        assert!(matches!(r, Err(Error::StepTooLarge(_))));
        let ok = build_transition_operators(&two_level(), 1e-3, Construction::Exact).unwrap();
        assert!(ok.normalization_residual().iter().all(|&r| r <= 1e-12));
    }

    #[test]
    fn hermitian_coupling_channels_follow_rate_pairing() {
        let h = ComplexMatrix::from_diagonal(&[0.5, -0.5]);
        let sx = ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let spec = ModelSpec::new(h.clone(), h, Coupling::Hermitian(sx), 1.0, 2.0).unwrap();
        let up = spec.rate(1.0, RateSign::Plus).unwrap();
        let down = spec.rate(1.0, RateSign::Minus).unwrap();
        let ch = spec.channels().unwrap();
        assert_eq!(ch.len(), 4);
        let find = |from, to, label: KrausLabel| {
            ch.iter()
                .find(|c| c.from == from && c.to == to && c.label == label)
                .unwrap()
                .clone()
        };
        let c = find(NODE_2, NODE_1, KrausLabel::Omega(1.0));
        assert!(c.operator.max_abs_diff(&sigma_plus()) < 1e-15);
        assert_eq!(c.rate, up);
        let c = find(NODE_1, NODE_2, KrausLabel::Omega(1.0));
        assert!(c.operator.max_abs_diff(&sigma_minus()) < 1e-15);
        assert_eq!(c.rate, down);
        let c = find(NODE_2, NODE_1, KrausLabel::OmegaPrime(1.0));
        assert!(c.operator.max_abs_diff(&sigma_minus()) < 1e-15);
        assert_eq!(c.rate, down);
        let c = find(NODE_1, NODE_2, KrausLabel::OmegaPrime(1.0));
        assert!(c.operator.max_abs_diff(&sigma_plus()) < 1e-15);
        assert_eq!(c.rate, up);
    }

    #[test]
    fn zero_frequency_requires_rate() {
        let h = ComplexMatrix::from_diagonal(&[0.5, -0.5]);
        let sz = ComplexMatrix::from_diagonal(&[1.0, -1.0]);
        let spec = ModelSpec::new(h.clone(), h, Coupling::Hermitian(sz), 1.0, 1.0).unwrap();
        assert!(matches!(spec.channels(), Err(Error::ZeroFrequency)));
        let spec = spec.with_zero_frequency_rate(0.3).unwrap();
        let ch = spec.channels().unwrap();
        assert_eq!(ch.len(), 2);
        assert!(ch.iter().all(|c| c.rate == 0.3));
    }

    #[test]
    fn model_validation() {
        let h = ComplexMatrix::from_diagonal(&[0.5, -0.5]);
        let mut bad = h.clone();
        bad[(0, 1)] = Complex64::new(0.2, 0.0);
        let r = ModelSpec::new(bad, h.clone(), Coupling::Hermitian(h.clone()), 1.0, 1.0);
        assert!(matches!(r, Err(Error::NotHermitian { ref what, .. }) if what == "omega1"));
        let r = ModelSpec::new(h.clone(), h.clone(), Coupling::Hermitian(h.clone()), 1.0, 0.0);
        assert!(matches!(r, Err(Error::BadParameter { .. })));
        let r = ModelSpec::new(
            ComplexMatrix::identity(2),
            h.clone(),
            Coupling::Hermitian(h.clone()),
            1.0,
            1.0,
        );
        assert!(matches!(r, Err(Error::DegenerateSpectrum { .. })));
        let flipped = ComplexMatrix::from_diagonal(&[-0.5, 0.5]);
        let r = ModelSpec::new(flipped.clone(), flipped, Coupling::TwoLevelJumpPair, 1.0, 1.0);
        assert!(matches!(r, Err(Error::BadParameter { .. })));
    }

    #[test]
    fn ground_state_of_preset_is_lower_level() {
        let g = two_level().ground_state().unwrap();
        let expected = &sigma_minus() * &sigma_plus();
        assert!(g.matrix().max_abs_diff(&expected) < 1e-15);
    }
}
