use crate::state::BlockState;

/// Recorded sequence of walker states with derived observables.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    /// Step (discrete walk) or integration-step (continuous) index per row.
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<BlockState>,
    pub probabilities: Vec<Vec<f64>>,
    /// Total trace of the stored state.
    pub traces: Vec<f64>,
    /// Total trace before any renormalization was applied.
    pub raw_traces: Vec<f64>,
    pub purities: Vec<Vec<f64>>,
    /// Time step of the walk or integrator, if any.
    pub step_size: Option<f64>,
}

impl Trajectory {
    pub fn new(step_size: Option<f64>) -> Self {
        Self {
            step_size,
            ..Self::default()
        }
    }

    pub fn push(&mut self, step: usize, time: f64, state: BlockState, raw_trace: f64) {
        self.steps.push(step);
        self.times.push(time);
        self.probabilities.push(state.node_probabilities());
        self.traces.push(state.total_trace());
        self.purities.push(state.conditional_purities());
        self.raw_traces.push(raw_trace);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.states.first().map_or(0, BlockState::node_count)
    }

    pub fn last_state(&self) -> Option<&BlockState> {
        self.states.last()
    }

    pub fn final_probabilities(&self) -> Option<&[f64]> {
        self.probabilities.last().map(Vec::as_slice)
    }

    /// Probability of one node along the trajectory.
    pub fn node_series(&self, node: usize) -> Vec<f64> {
        self.probabilities.iter().map(|p| p[node]).collect()
    }

    pub fn max_trace_error(&self) -> f64 {
        self.traces.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_raw_trace_drift(&self) -> f64 {
        self.raw_traces.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max)
    }
}
