//! Per-run diagnostics shared by all solvers.

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    /// The per-epoch maximum step norm fell below the stopping tolerance
    /// (or, for the L1 baseline, every coordinate became fixed).
    Converged,
    MaxEpochs,
    Error(String),
}

impl RunStatus {
    pub fn as_str(&self) -> &str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxEpochs => "max_epochs",
            RunStatus::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub t: usize,
    pub epoch: usize,
    pub node: usize,
    pub step_norm: f64,
    /// Total least-absolute-deviations energy after this iteration;
    /// populated by the L1 baseline only.
    pub l1_energy: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Maximum pairwise distance of the normalization products; present
    /// when ground truth is available.
    pub delta: Option<f64>,
    /// Radius of the smallest ball enclosing the normalization products.
    pub ball_radius: Option<f64>,
    /// delta(this epoch) / delta(previous epoch), when both are defined
    /// and the previous value is above the float noise floor.
    pub delta_ratio: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub iters: Vec<IterRecord>,
    pub epochs: Vec<EpochRecord>,
    /// delta of the initial estimates, before any update.
    pub initial_delta: Option<f64>,
    pub status: RunStatus,
}

impl RunTrace {
    pub fn new() -> Self {
        RunTrace {
            iters: Vec::new(),
            epochs: Vec::new(),
            initial_delta: None,
            status: RunStatus::MaxEpochs,
        }
    }

    pub fn final_delta(&self) -> Option<f64> {
        self.epochs.iter().rev().find_map(|e| e.delta)
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs.len()
    }
}

impl Default for RunTrace {
    fn default() -> Self {
        Self::new()
    }
}
