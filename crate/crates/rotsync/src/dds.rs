//! Depth descent synchronization: cyclic coordinate updates along
//! directions selected from the Tukey-depth level set of the tangent-space
//! measurement cloud.
//!
//! At iteration t the node j = t mod n maps each neighbor's implied
//! position `R_jk R_k` into its tangent space, selects a deep point of the
//! resulting cloud, and moves by `eta` times that vector. With per-node
//! corruption below `beta = 1/(D(D-1)+2)`, a well-connected graph, and
//! initialization whose normalization products fit in a ball of radius
//! below pi/2, the iteration recovers the ground truth exactly; the
//! enclosing-ball radius of the products is the convergence diagnostic.
//!
//! Measurements that land on the cut locus of the current estimate are
//! dropped from the update with a warning: inliers cannot be there under
//! the initialization assumption, so only corrupted data is discarded.

use log::warn;
use rand::Rng;
use std::time::Instant;

use crate::depth::{max_depth_point, PointCloud, SelectionRule};
use crate::error::{Result, SyncError};
use crate::graph::MeasurementGraph;
use crate::manifold::{
    enclosing_arc, exp_map, log_map, smallest_enclosing_ball, tangent_dim, Rotation, TangentVector,
    UnitComplex,
};
use crate::scenario::Scenario;
use crate::trace::{EpochRecord, IterRecord, RunStatus, RunTrace};

/// Current estimates plus iteration bookkeeping.
#[derive(Debug, Clone)]
pub struct SyncState {
    pub estimates: Vec<Rotation>,
    pub t: usize,
    pub epoch: usize,
}

impl SyncState {
    pub fn new(estimates: Vec<Rotation>) -> Self {
        SyncState {
            estimates,
            t: 0,
            epoch: 0,
        }
    }
}

/// Depth parameter of the recovery theorem: `1/(D(D-1)+2)`.
pub fn default_beta(dim: usize) -> f64 {
    1.0 / (dim as f64 * (dim as f64 - 1.0) + 2.0)
}

#[derive(Debug, Clone)]
pub struct DdsConfig {
    /// Depth level; defaults to [`default_beta`] of the dimension.
    pub beta: Option<f64>,
    /// Step size. Defaults to 1 for D in {2, 3}; required for D > 3,
    /// where no safe default is known.
    pub eta: Option<f64>,
    /// Selection rule; defaults to the trimmed mean for SO(2) and the
    /// deepest candidate otherwise.
    pub rule: Option<SelectionRule>,
    pub max_epochs: usize,
    /// A run converges when the largest step norm over a full epoch falls
    /// below this.
    pub stop_tol: f64,
}

impl Default for DdsConfig {
    fn default() -> Self {
        DdsConfig {
            beta: None,
            eta: None,
            rule: None,
            max_epochs: 2000,
            stop_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedDds {
    pub beta: f64,
    pub eta: f64,
    pub rule: SelectionRule,
    pub max_epochs: usize,
    pub stop_tol: f64,
}

impl DdsConfig {
    pub fn resolve(&self, dim: usize) -> Result<ResolvedDds> {
        let beta = self.beta.unwrap_or_else(|| default_beta(dim));
        if !(beta > 0.0 && beta < 0.5) {
            return Err(SyncError::InvalidConfig(format!(
                "beta must be in (0, 1/2), got {beta}"
            )));
        }
        let eta = match (self.eta, dim) {
            (Some(e), 2 | 3) => {
                if !(e > 0.0 && e <= 1.0) {
                    return Err(SyncError::InvalidConfig(format!(
                        "eta must be in (0, 1] for D in {{2, 3}}, got {e}"
                    )));
                }
                e
            }
            (None, 2 | 3) => 1.0,
            (Some(e), _) => {
                if e <= 0.0 {
                    return Err(SyncError::InvalidConfig(format!(
                        "eta must be positive, got {e}"
                    )));
                }
                e
            }
            (None, d) => {
                return Err(SyncError::InvalidConfig(format!(
                    "no default step size is available for D = {d}; supply eta explicitly"
                )));
            }
        };
        let rule = self
            .rule
            .unwrap_or_else(|| SelectionRule::default_for_dim(tangent_dim(dim)));
        if self.max_epochs == 0 {
            return Err(SyncError::InvalidConfig("max_epochs must be positive".into()));
        }
        Ok(ResolvedDds {
            beta,
            eta,
            rule,
            max_epochs: self.max_epochs,
            stop_tol: self.stop_tol,
        })
    }
}

/// Tangent-space measurement cloud at node j: coordinates of
/// `Log_{R_j}(R_jk R_k)` per neighbor, with the contributing neighbor
/// indices. Cut-locus neighbors are skipped and counted.
pub fn tangent_cloud(
    graph: &MeasurementGraph,
    estimates: &[Rotation],
    j: usize,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, usize)> {
    let base = &estimates[j];
    let mut coords = Vec::with_capacity(graph.degree(j));
    let mut contributors = Vec::with_capacity(graph.degree(j));
    let mut skipped = 0usize;
    for &(k, idx) in graph.neighbors(j) {
        let target = graph.oriented_measurement(idx, j).compose(&estimates[k]);
        match log_map(base, &target) {
            Ok(v) => {
                coords.push(v.coords().to_vec());
                contributors.push(k);
            }
            Err(SyncError::CutLocus { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((coords, contributors, skipped))
}

/// One coordinate update; returns the step norm `eta * |v_j|`.
pub fn dds_update_node<R: Rng + ?Sized>(
    state: &mut SyncState,
    graph: &MeasurementGraph,
    cfg: &ResolvedDds,
    j: usize,
    rng: &mut R,
) -> Result<f64> {
    let (coords, _, skipped) = tangent_cloud(graph, &state.estimates, j)?;
    if skipped > 0 {
        warn!("node {j}: skipped {skipped} measurement(s) at the cut locus");
    }
    if coords.is_empty() {
        warn!("node {j}: no usable measurements this update");
        return Ok(0.0);
    }
    let cloud = PointCloud::new(tangent_dim(graph.dim()), coords)?;
    let v = max_depth_point(&cloud, cfg.beta, &cfg.rule, rng)?;
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let base = state.estimates[j].clone();
    let step = TangentVector::new(base.clone(), v.iter().map(|c| cfg.eta * c).collect())?;
    state.estimates[j] = exp_map(&base, &step)?;
    Ok(cfg.eta * norm)
}

/// Maximum pairwise distance between normalization products
/// `truth_j^T estimate_j`; zero exactly at recovery up to one global right
/// factor. Angular metric for D = 2, Frobenius otherwise.
pub fn normalization_spread(estimates: &[Rotation], ground_truth: &[Rotation]) -> f64 {
    assert_eq!(estimates.len(), ground_truth.len());
    let products: Vec<Rotation> = ground_truth
        .iter()
        .zip(estimates)
        .map(|(t, z)| t.transpose().compose(z))
        .collect();
    let dim = products[0].dim();
    let mut max = 0.0f64;
    if dim == 2 {
        let zs: Vec<UnitComplex> = products.iter().map(UnitComplex::from_rotation).collect();
        for a in 0..zs.len() {
            for b in (a + 1)..zs.len() {
                max = max.max(zs[a].angular_distance(&zs[b]));
            }
        }
    } else {
        for a in 0..products.len() {
            for b in (a + 1)..products.len() {
                max = max.max(crate::manifold::geodesic_distance(&products[a], &products[b]));
            }
        }
    }
    max
}

/// Per-epoch diagnostics: (delta, enclosing-ball radius of the products).
/// The radius is angular for D = 2 and Frobenius otherwise; it is reported
/// even when it exceeds the convexity threshold.
pub fn product_diagnostics(estimates: &[Rotation], ground_truth: &[Rotation]) -> (f64, f64) {
    let delta = normalization_spread(estimates, ground_truth);
    let products: Vec<Rotation> = ground_truth
        .iter()
        .zip(estimates)
        .map(|(t, z)| t.transpose().compose(z))
        .collect();
    let radius = if products[0].dim() == 2 {
        let zs: Vec<UnitComplex> = products.iter().map(UnitComplex::from_rotation).collect();
        enclosing_arc(&zs).1
    } else {
        match smallest_enclosing_ball(&products) {
            Ok(ball) => ball.radius,
            Err(SyncError::NoSmallBall { radius, .. }) => radius,
            Err(_) => f64::NAN,
        }
    };
    (delta, radius)
}

/// Runs the full cyclic iteration on a scenario.
pub fn dds_run<R: Rng + ?Sized>(
    scenario: &Scenario,
    config: &DdsConfig,
    rng: &mut R,
) -> Result<(SyncState, RunTrace)> {
    let n = scenario.n();
    let cfg = config.resolve(scenario.dim())?;

    if scenario.graph.is_labeled() {
        let stats = scenario.graph.corruption_stats()?;
        if stats.alpha0 >= cfg.beta {
            warn!(
                "per-node corruption alpha0 = {:.4} is not below beta = {:.4}; recovery is not guaranteed",
                stats.alpha0, cfg.beta
            );
        }
    }
    if scenario.ground_truth.is_some() && !scenario.assumption_1_ok {
        warn!("initial normalization products do not fit in a ball of radius < pi/2");
    }

    let mut state = SyncState::new(scenario.init.clone());
    let mut trace = RunTrace::new();
    let truth = scenario.ground_truth.as_deref();
    trace.initial_delta = truth.map(|t| normalization_spread(&state.estimates, t));
    let mut prev_delta = trace.initial_delta;
    let started = Instant::now();

    for epoch in 0..cfg.max_epochs {
        let mut max_step = 0.0f64;
        for _ in 0..n {
            let j = state.t % n;
            let step = dds_update_node(&mut state, &scenario.graph, &cfg, j, rng)?;
            trace.iters.push(IterRecord {
                t: state.t,
                epoch,
                node: j,
                step_norm: step,
                l1_energy: None,
            });
            state.t += 1;
            state.epoch = state.t / n;
            max_step = max_step.max(step);
        }
        let (delta, ball_radius) = match truth {
            Some(t) => {
                let (d, r) = product_diagnostics(&state.estimates, t);
                (Some(d), Some(r))
            }
            None => (None, None),
        };
        let delta_ratio = match (prev_delta, delta) {
            (Some(p), Some(d)) if p > 1e-13 => Some(d / p),
            _ => None,
        };
        trace.epochs.push(EpochRecord {
            epoch,
            delta,
            ball_radius,
            delta_ratio,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        prev_delta = delta;
        if max_step < cfg.stop_tol {
            trace.status = RunStatus::Converged;
            return Ok((state, trace));
        }
    }
    trace.status = RunStatus::MaxEpochs;
    Ok((state, trace))
}
