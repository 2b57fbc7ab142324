//! Continuous-time block master equation and its fixed-step RK4 integrator.
//!
//! Each jump channel `(from → to, K, rate)` contributes a gain
//! `rate·K ρ_from K†` to `dρ_to/dt` and a loss `−(rate/2){K†K, ρ_from}` to
//! `dρ_from/dt`. There is no coherent `−i[H, ρ]` term.

use crate::derivation::{
    build_transition_operators, sigma_minus, sigma_plus, Construction, JumpChannel, ModelSpec, RateSign, NODE_1,
};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::state::BlockState;
use crate::trajectory::Trajectory;
use crate::walk::{run_walk, StepMode};

/// Block norm above which an integration is declared unstable.
pub const INSTABILITY_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Channel list built from the Bohr decomposition of a Hermitian coupling.
    GenericBlock,
    /// Hand-coded two-level equations with σ± and rates γ(±ω₀).
    TwoLevelPreset,
}

#[derive(Debug, Clone)]
pub enum GeneratorSpec {
    Channels {
        node_count: usize,
        dim: usize,
        gamma0: f64,
        channels: Vec<JumpChannel>,
    },
    /// `dρ₁/dt = γ(−ω₀)σ₋ρ₂σ₊ − (γ(ω₀)/2){σ₋σ₊, ρ₁}`,
    /// `dρ₂/dt = γ(ω₀)σ₊ρ₁σ₋ − (γ(−ω₀)/2){σ₊σ₋, ρ₂}`.
    TwoLevelPreset {
        /// γ(ω₀)
        absorption: f64,
        /// γ(−ω₀)
        emission: f64,
    },
}

impl GeneratorSpec {
    pub fn from_channels(node_count: usize, dim: usize, gamma0: f64, channels: Vec<JumpChannel>) -> Result<Self> {
        for c in &channels {
            if c.from >= node_count || c.to >= node_count {
                return Err(Error::ShapeMismatch(format!(
                    "channel {} -> {} outside graph",
                    c.from, c.to
                )));
            }
            if c.operator.rows() != dim || c.operator.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.operator.rows(),
                });
            }
            if !(c.rate.is_finite() && c.rate >= 0.0) {
                return Err(Error::bad_parameter(
                    "rate",
                    format!("must be finite and >= 0, got {}", c.rate),
                ));
            }
        }
        Ok(Self::Channels {
            node_count,
            dim,
            gamma0,
            channels,
        })
    }

    /// Preset models get the hand-coded two-level equations, everything
    /// else the generic channel list.
    pub fn from_model(spec: &ModelSpec) -> Result<Self> {
        match spec.preset_frequency() {
            Some(w0) => Ok(Self::TwoLevelPreset {
                absorption: spec.rate(w0, RateSign::Plus)?,
                emission: spec.rate(w0, RateSign::Minus)?,
            }),
            None => Self::from_channels(2, spec.dim(), spec.gamma0(), spec.channels()?),
        }
    }

    /// Generic channel form of any model, including the preset.
    pub fn channels_of(spec: &ModelSpec) -> Result<Self> {
        Self::from_channels(2, spec.dim(), spec.gamma0(), spec.channels()?)
    }

    pub fn kind(&self) -> GeneratorKind {
        match self {
            Self::Channels { .. } => GeneratorKind::GenericBlock,
            Self::TwoLevelPreset { .. } => GeneratorKind::TwoLevelPreset,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Self::Channels { node_count, .. } => *node_count,
            Self::TwoLevelPreset { .. } => 2,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Channels { dim, .. } => *dim,
            Self::TwoLevelPreset { .. } => 2,
        }
    }

    /// γ₀, the rate unit used by convergence tolerances.
    pub fn gamma0(&self) -> f64 {
        match self {
            Self::Channels { gamma0, .. } => *gamma0,
            Self::TwoLevelPreset { absorption, emission } => emission - absorption,
        }
    }

    /// Largest total outflow rate `‖Σ rate·K†K‖` over nodes (Frobenius
    /// bound), used to pick stable step sizes.
    pub fn max_rate(&self) -> f64 {
        match self {
            Self::Channels {
                node_count,
                dim,
                channels,
                ..
            } => {
                let mut out = vec![ComplexMatrix::zeros(*dim, *dim); *node_count];
                for c in channels {
                    out[c.from] += &c.operator.gram().scale_real(c.rate);
                }
                out.iter().map(ComplexMatrix::frobenius_norm).fold(0.0, f64::max)
            }
            Self::TwoLevelPreset { absorption, emission } => absorption.max(*emission),
        }
    }

    fn derivative(&self, blocks: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
        let n = blocks[0].rows();
        let mut out = vec![ComplexMatrix::zeros(n, n); blocks.len()];
        match self {
            Self::Channels { channels, .. } => {
                for c in channels {
                    if c.rate == 0.0 {
                        continue;
                    }
                    let rho = &blocks[c.from];
                    out[c.to] += &c.operator.sandwich(rho).scale_real(c.rate);
                    out[c.from] -= &c.operator.gram().anticommutator(rho).scale_real(c.rate / 2.0);
                }
            }
            Self::TwoLevelPreset { absorption, emission } => {
                let sp = sigma_plus();
                let sm = sigma_minus();
                let ground = &sm * &sp;
                let excited = &sp * &sm;
                let (rho1, rho2) = (&blocks[0], &blocks[1]);
                out[0] = &sm.sandwich(rho2).scale_real(*emission)
                    - &ground.anticommutator(rho1).scale_real(absorption / 2.0);
                out[1] = &sp.sandwich(rho1).scale_real(*absorption)
                    - &excited.anticommutator(rho2).scale_real(emission / 2.0);
            }
        }
        out
    }
}

/// `dρ_i/dt` for every node block.
pub fn generator_apply(g: &GeneratorSpec, s: &BlockState) -> Result<Vec<ComplexMatrix>> {
    if s.node_count() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: s.node_count(),
        });
    }
    if s.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: s.dim(),
        });
    }
    Ok(g.derivative(s.blocks()))
}

fn blocks_norm(blocks: &[ComplexMatrix]) -> f64 {
    blocks.iter().map(|b| b.frobenius_norm().powi(2)).sum::<f64>().sqrt()
}

fn axpy(y: &[ComplexMatrix], a: f64, x: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    y.iter().zip(x).map(|(y, x)| y + &x.scale_real(a)).collect()
}

fn rk4_step(g: &GeneratorSpec, y: &[ComplexMatrix], h: f64) -> Vec<ComplexMatrix> {
    let k1 = g.derivative(y);
    let k2 = g.derivative(&axpy(y, h / 2.0, &k1));
    let k3 = g.derivative(&axpy(y, h / 2.0, &k2));
    let k4 = g.derivative(&axpy(y, h, &k3));
    y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let mut incr = &k1[i] + &k4[i];
            incr += &(&k2[i] + &k3[i]).scale_real(2.0);
            yi + &incr.scale_real(h / 6.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Record every `stride`-th step (the final state is always recorded).
    pub stride: usize,
}

impl OdeConfig {
    pub fn new(dt: f64, t_final: f64, stride: usize) -> Result<Self> {
        let cfg = Self { dt, t_final, stride };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::bad_parameter("dt", "must be finite and > 0"));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::bad_parameter("t_final", "must be finite and >= dt"));
        }
        if self.stride == 0 {
            return Err(Error::bad_parameter("stride", "must be >= 1"));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_final`.
    fn step_count(&self) -> usize {
        let n = self.t_final / self.dt;
        let rounded = n.round();
        if (n - rounded).abs() <= 1e-9 * n.max(1.0) {
            rounded as usize
        } else {
            n.ceil() as usize
        }
    }
}

/// Classical fixed-step fourth-order Runge–Kutta integration.
pub fn rk4_integrate(g: &GeneratorSpec, init: &BlockState, cfg: &OdeConfig) -> Result<Trajectory> {
    cfg.validate()?;
    generator_apply(g, init)?;
    let steps = cfg.step_count();
    let mut traj = Trajectory::new(Some(cfg.dt));
    traj.push(0, 0.0, init.clone(), init.total_trace());
    let mut y = init.blocks().to_vec();
    let mut t = 0.0;
    for n in 1..=steps {
        let h = if n == steps { cfg.t_final - t } else { cfg.dt };
        y = rk4_step(g, &y, h);
        t = if n == steps { cfg.t_final } else { n as f64 * cfg.dt };
        let norm = blocks_norm(&y);
        if !norm.is_finite() || norm > INSTABILITY_NORM {
            return Err(Error::StepUnstable { time: t, norm });
        }
        if n % cfg.stride == 0 || n == steps {
            let state = BlockState::from_blocks_unchecked(y.clone())?;
            let trace = state.total_trace();
            traj.push(n, t, state, trace);
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateConfig {
    /// Integration step; defaults to `0.1 / max_rate`.
    pub dt: Option<f64>,
    /// Integration time budget before giving up.
    pub max_time: f64,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        Self {
            dt: None,
            max_time: 1e4,
        }
    }
}

/// Integrates until `‖dρ/dt‖_F ≤ tol·γ₀` and returns the settled state.
pub fn steady_state(g: &GeneratorSpec, init: &BlockState, tol: f64, cfg: &SteadyStateConfig) -> Result<BlockState> {
    let threshold = tol * g.gamma0();
    let mut y = init.blocks().to_vec();
    let residual = |y: &[ComplexMatrix]| blocks_norm(&g.derivative(y));
    generator_apply(g, init)?;
    if residual(&y) <= threshold {
        return BlockState::from_blocks_unchecked(y);
    }
    let max_rate = g.max_rate();
    let dt = match cfg.dt {
        Some(dt) => dt,
        None if max_rate > 0.0 => 0.1 / max_rate,
        None => return Err(Error::NotConverged("generator has no dissipation".into())),
    };
    let mut t = 0.0;
    while t < cfg.max_time {
        y = rk4_step(g, &y, dt);
        t += dt;
        let norm = blocks_norm(&y);
        if !norm.is_finite() || norm > INSTABILITY_NORM {
            return Err(Error::StepUnstable { time: t, norm });
        }
        if residual(&y) <= threshold {
            return BlockState::from_blocks_unchecked(y);
        }
    }
    Err(Error::NotConverged(format!(
        "‖dρ/dt‖ = {:.3e} above {threshold:.3e} after t = {}",
        residual(&y),
        cfg.max_time
    )))
}

/// Sup-norm deviation between the discrete walk and the integrated master
/// equation sampled at the walk's time points.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub delta: f64,
    pub steps: usize,
    pub ode_dt: f64,
    pub max_deviation: f64,
    pub discrete_final: Vec<f64>,
    pub continuous_final: Vec<f64>,
}

/// Sub-steps of the integrator per walk step.
pub const COMPARE_SUBSTEPS: usize = 10;

/// Runs the first-order walk (renormalized steps of size Δ) and RK4 with
/// `dt = Δ/10` from the ground state of Ω₁ on node 1, and reports the
/// largest node-probability difference over the walk's steps.
pub fn compare_discrete_continuous(spec: &ModelSpec, delta: f64, steps: usize) -> Result<ComparisonReport> {
    let generator = GeneratorSpec::from_model(spec)?;
    let channel_rate = GeneratorSpec::channels_of(spec)?.max_rate();
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::bad_parameter("delta", "must be finite and > 0"));
    }
    if delta * channel_rate >= 0.1 {
        return Err(Error::bad_parameter(
            "delta",
            format!("Δ·max_rate = {:.3e} must be < 0.1", delta * channel_rate),
        ));
    }
    let init = BlockState::localized(2, NODE_1, &spec.ground_state()?)?;
    let ops = build_transition_operators(spec, delta, Construction::FirstOrder)?;
    let walk = run_walk(&ops.to_map(StepMode::Renormalized)?, &init, steps)?;

    let ode_dt = delta / COMPARE_SUBSTEPS as f64;
    let continuous = if steps == 0 {
        let mut t = Trajectory::new(Some(ode_dt));
        t.push(0, 0.0, init.clone(), 1.0);
        t
    } else {
        rk4_integrate(
            &generator,
            &init,
            &OdeConfig::new(ode_dt, delta * steps as f64, COMPARE_SUBSTEPS)?,
        )?
    };
    debug_assert_eq!(continuous.len(), walk.len());
    let max_deviation = walk
        .probabilities
        .iter()
        .zip(&continuous.probabilities)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        delta,
        steps,
        ode_dt,
        max_deviation,
        discrete_final: walk.final_probabilities().unwrap().to_vec(),
        continuous_final: continuous.final_probabilities().unwrap().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::Coupling;
    use crate::state::DensityMatrix;

    fn two_level(beta_omega0: f64) -> ModelSpec {
        ModelSpec::two_level(beta_omega0, 1.0).unwrap()
    }

    fn ground_on_node1() -> BlockState {
        BlockState::localized(2, 0, &DensityMatrix::basis(2, 1)).unwrap()
    }

    #[test]
    fn zero_rates_give_zero_derivative() {
        let spec = ModelSpec::two_level(0.01, 0.0).unwrap();
        let g = GeneratorSpec::from_model(&spec).unwrap();
        let d = generator_apply(&g, &ground_on_node1()).unwrap();
        assert!(d.iter().all(|b| b.frobenius_norm() == 0.0));
        let g = GeneratorSpec::channels_of(&spec).unwrap();
        let d = generator_apply(&g, &ground_on_node1()).unwrap();
        assert!(d.iter().all(|b| b.frobenius_norm() == 0.0));
    }

    #[test]
    fn preset_derivative_from_ground_state() {
        let spec = two_level(0.01);
        let g = GeneratorSpec::from_model(&spec).unwrap();
        assert_eq!(g.kind(), GeneratorKind::TwoLevelPreset);
        let up = spec.rate(1.0, RateSign::Plus).unwrap();
        let d = generator_apply(&g, &ground_on_node1()).unwrap();
        // dρ₁/dt = −γ(ω₀)|g⟩⟨g|, dρ₂/dt = γ(ω₀)|e⟩⟨e|
        assert!(d[0].max_abs_diff(&ComplexMatrix::from_diagonal(&[0.0, -up])) < 1e-12);
        assert!(d[1].max_abs_diff(&ComplexMatrix::from_diagonal(&[up, 0.0])) < 1e-12);
        let total: f64 = d.iter().map(|b| b.trace().re).sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn preset_matches_its_channel_form() {
        let spec = two_level(0.7);
        let preset = GeneratorSpec::from_model(&spec).unwrap();
        let generic = GeneratorSpec::channels_of(&spec).unwrap();
        let s = BlockState::new(vec![
            ComplexMatrix::from_real(&[&[0.2, 0.05], &[0.05, 0.3]]),
            ComplexMatrix::from_real(&[&[0.35, -0.1], &[-0.1, 0.15]]),
        ])
        .unwrap();
        let a = generator_apply(&preset, &s).unwrap();
        let b = generator_apply(&generic, &s).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.max_abs_diff(y) < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let g = GeneratorSpec::from_model(&two_level(1.0)).unwrap();
        let s = BlockState::localized(3, 0, &DensityMatrix::basis(2, 1)).unwrap();
        assert!(matches!(generator_apply(&g, &s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rk4_constant_without_dissipation() {
        let spec = ModelSpec::two_level(0.01, 0.0).unwrap();
        let g = GeneratorSpec::from_model(&spec).unwrap();
        let traj = rk4_integrate(&g, &ground_on_node1(), &OdeConfig::new(0.1, 1.0, 1).unwrap()).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.states.iter().all(|s| *s == ground_on_node1()));
    }

    #[test]
    fn rk4_config_rules() {
        assert!(OdeConfig::new(0.0, 1.0, 1).is_err());
        assert!(OdeConfig::new(0.5, 0.1, 1).is_err());
        assert!(OdeConfig::new(0.1, 1.0, 0).is_err());
        // t_final not a multiple of dt: the last step is shortened
        let g = GeneratorSpec::from_model(&two_level(1.0)).unwrap();
        let traj = rk4_integrate(&g, &ground_on_node1(), &OdeConfig::new(0.3, 1.0, 2).unwrap()).unwrap();
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert_eq!(traj.steps, vec![0, 2, 4]);
    }

    #[test]
    fn rk4_blows_up_with_huge_step() {
        let g = GeneratorSpec::from_model(&two_level(0.01)).unwrap();
        let r = rk4_integrate(&g, &ground_on_node1(), &OdeConfig::new(1.0, 100.0, 1).unwrap());
        assert!(matches!(r, Err(Error::StepUnstable { .. })));
    }

    #[test]
    fn zero_temperature_steady_state() {
        let g = GeneratorSpec::from_model(&two_level(50.0)).unwrap();
        let s = steady_state(&g, &ground_on_node1(), 1e-9, &SteadyStateConfig::default()).unwrap();
        assert!(s.node_probabilities()[0] >= 0.999);
    }

    #[test]
    fn steady_state_budget() {
        let g = GeneratorSpec::from_model(&two_level(0.01)).unwrap();
        let cfg = SteadyStateConfig {
            dt: None,
            max_time: 1e-3,
        };
        assert!(matches!(
            steady_state(&g, &ground_on_node1(), 1e-9, &cfg),
            Err(Error::NotConverged(_))
        ));
    }

    #[test]
    fn compare_without_dissipation_is_exact() {
        let spec = ModelSpec::two_level(0.01, 0.0).unwrap();
        let rep = compare_discrete_continuous(&spec, 1e-2, 20).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
    }

    #[test]
    fn compare_rejects_large_step() {
        let r = compare_discrete_continuous(&two_level(0.01), 0.01, 10);
        assert!(matches!(r, Err(Error::BadParameter { .. })));
    }

    #[test]
    fn generic_block_generator_preserves_trace_and_form() {
        let h1 = ComplexMatrix::from_diagonal(&[0.0, 0.8, 2.0]);
        let h2 = ComplexMatrix::from_diagonal(&[0.1, 1.1, 1.7]);
        let a = ComplexMatrix::from_real(&[&[0.3, 1.0, 0.2], &[1.0, -0.5, 0.7], &[0.2, 0.7, 0.1]]);
        let spec = ModelSpec::new(h1, h2, Coupling::Hermitian(a), 1.0, 0.5).unwrap();
        let g = GeneratorSpec::from_model(&spec).unwrap();
        assert_eq!(g.kind(), GeneratorKind::GenericBlock);
        let s = BlockState::new(vec![
            ComplexMatrix::from_real(&[&[0.2, 0.05, 0.0], &[0.05, 0.1, 0.02], &[0.0, 0.02, 0.1]]),
            ComplexMatrix::from_real(&[&[0.3, 0.0, 0.01], &[0.0, 0.2, 0.0], &[0.01, 0.0, 0.1]]),
        ])
        .unwrap();
        let d = generator_apply(&g, &s).unwrap();
        let total: f64 = d.iter().map(|b| b.trace().re).sum();
        assert!(total.abs() < 1e-12);
        assert!(d.iter().all(|b| b.hermiticity_defect() < 1e-12));
    }
}
