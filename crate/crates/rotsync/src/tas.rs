//! Damped trimmed averaging synchronization on SO(2).
//!
//! Each node averages the 0.25-trimmed tangent logs of its neighbors'
//! implied positions and moves by a fraction `eta` of the result. This is
//! the depth-descent iteration specialized to the 1-dimensional tangent
//! space with the trimmed-mean selection rule. On a complete graph with
//! per-node corruption below 1/4 the normalization-product spread
//! contracts by at least `(n - 1 - eta) / (n - 1)` per epoch.

use log::warn;
use std::time::Instant;

use crate::depth::trimmed_mean_level;
use crate::dds::{product_diagnostics, SyncState};
use crate::error::{Result, SyncError};
use crate::graph::So2View;
use crate::manifold::{wrap_angle, Rotation, UnitComplex, CUT_TOLERANCE};
use crate::scenario::Scenario;
use crate::trace::{EpochRecord, IterRecord, RunStatus, RunTrace};

#[derive(Debug, Clone)]
pub struct TasConfig {
    /// Damping factor in (0, 1); on complete graphs it must additionally
    /// stay below (n-1)/(n+1) for the contraction guarantee. Defaults to
    /// `min(0.9, 0.9 (n-1)/(n+1))`.
    pub eta: Option<f64>,
    pub max_epochs: usize,
    pub stop_tol: f64,
}

impl Default for TasConfig {
    fn default() -> Self {
        TasConfig {
            eta: None,
            max_epochs: 2000,
            stop_tol: 1e-12,
        }
    }
}

pub fn default_eta(n: usize) -> f64 {
    let bound = 0.9 * (n as f64 - 1.0) / (n as f64 + 1.0);
    bound.min(0.9)
}

fn resolve_eta(config: &TasConfig, n: usize, complete: bool) -> Result<f64> {
    let eta = config.eta.unwrap_or_else(|| default_eta(n));
    if !(eta > 0.0 && eta < 1.0) {
        return Err(SyncError::InvalidConfig(format!(
            "eta must lie strictly inside (0, 1), got {eta}"
        )));
    }
    if complete {
        let bound = (n as f64 - 1.0) / (n as f64 + 1.0);
        if eta >= bound {
            return Err(SyncError::InvalidConfig(format!(
                "on a complete graph eta must be below (n-1)/(n+1) = {bound:.4}, got {eta}"
            )));
        }
    }
    Ok(eta)
}

/// One trimmed-averaging update; returns the step norm in the angular
/// metric. Neighbors at the cut locus of the current estimate are skipped.
pub fn tas_update_node(z: &mut [UnitComplex], view: &So2View, eta: f64, j: usize) -> f64 {
    let mut logs = Vec::with_capacity(view.neighbors[j].len());
    let mut skipped = 0usize;
    for &(k, angle_jk) in &view.neighbors[j] {
        let log = wrap_angle(angle_jk + z[k].angle() - z[j].angle());
        if log.abs() > std::f64::consts::PI - CUT_TOLERANCE {
            skipped += 1;
            continue;
        }
        logs.push(log);
    }
    if skipped > 0 {
        warn!("node {j}: skipped {skipped} measurement(s) at the cut locus");
    }
    if logs.is_empty() {
        warn!("node {j}: no usable measurements this update");
        return 0.0;
    }
    let mean = trimmed_mean_level(&logs, 0.25);
    z[j] = z[j].exp(eta * mean);
    eta * mean.abs()
}

/// Runs the cyclic iteration; same trace contract as the depth solver,
/// with the per-epoch spread contraction ratio recorded as well.
pub fn tas_run(scenario: &Scenario, config: &TasConfig) -> Result<(SyncState, RunTrace)> {
    if scenario.dim() != 2 {
        return Err(SyncError::DimensionMismatch {
            expected: 2,
            got: scenario.dim(),
        });
    }
    let n = scenario.n();
    let eta = resolve_eta(config, n, scenario.graph.is_complete())?;
    if config.max_epochs == 0 {
        return Err(SyncError::InvalidConfig("max_epochs must be positive".into()));
    }
    let view = So2View::new(&scenario.graph)?;

    if scenario.graph.is_labeled() {
        let stats = scenario.graph.corruption_stats()?;
        if stats.alpha0 >= 0.25 {
            warn!(
                "per-node corruption alpha0 = {:.4} is not below 1/4; recovery is not guaranteed",
                stats.alpha0
            );
        }
    }
    if scenario.ground_truth.is_some() && !scenario.assumption_1_ok {
        warn!("initial spread is not below pi; the local guarantee does not apply");
    }

    let mut z: Vec<UnitComplex> = scenario.init.iter().map(UnitComplex::from_rotation).collect();
    let mut trace = RunTrace::new();
    let truth = scenario.ground_truth.as_deref();
    let diag = |z: &[UnitComplex], truth: Option<&[Rotation]>| -> Option<(f64, f64)> {
        truth.map(|t| {
            let estimates: Vec<Rotation> = z.iter().map(UnitComplex::to_rotation).collect();
            product_diagnostics(&estimates, t)
        })
    };
    trace.initial_delta = diag(&z, truth).map(|(d, _)| d);
    let mut prev_delta = trace.initial_delta;
    let started = Instant::now();
    let mut t = 0usize;

    for epoch in 0..config.max_epochs {
        let mut max_step = 0.0f64;
        for _ in 0..n {
            let j = t % n;
            let step = tas_update_node(&mut z, &view, eta, j);
            trace.iters.push(IterRecord {
                t,
                epoch,
                node: j,
                step_norm: step,
                l1_energy: None,
            });
            t += 1;
            max_step = max_step.max(step);
        }
        let (delta, ball_radius) = match diag(&z, truth) {
            Some((d, r)) => (Some(d), Some(r)),
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
        if max_step < config.stop_tol {
            trace.status = RunStatus::Converged;
            return Ok((finish(z, t, n), trace));
        }
    }
    trace.status = RunStatus::MaxEpochs;
    Ok((finish(z, t, n), trace))
}

fn finish(z: Vec<UnitComplex>, t: usize, n: usize) -> SyncState {
    SyncState {
        estimates: z.iter().map(UnitComplex::to_rotation).collect(),
        t,
        epoch: t / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dds::normalization_spread;
    use crate::graph::{Edge, EdgeLabel, MeasurementGraph};
    use crate::scenario::{spurious_fixture, CorruptionModel, GraphKind, ScenarioSpec};
    use approx::assert_abs_diff_eq;

    fn spec(n: usize, alpha: f64, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            n,
            dim: 2,
            graph: GraphKind::Complete,
            model: CorruptionModel::Random,
            alpha,
            rho: 1.0,
            theta: 0.0,
            seed,
        }
    }

    fn star_view(offsets: &[f64]) -> So2View {
        let edges: Vec<Edge> = offsets
            .iter()
            .enumerate()
            .map(|(i, &phi)| Edge {
                j: 0,
                k: i + 1,
                measurement: Rotation::from_angle(phi),
                label: EdgeLabel::Good,
            })
            .collect();
        let graph = MeasurementGraph::new(offsets.len() + 1, 2, edges).unwrap();
        So2View::new(&graph).unwrap()
    }

    #[test]
    fn agreeing_neighbors_damped_pull() {
        // all neighbors imply the same offset phi; the update covers eta of it
        let phi = 0.8;
        let view = star_view(&[phi; 5]);
        let eta = 0.5;
        let mut z = vec![UnitComplex::identity(); 6];
        let step = tas_update_node(&mut z, &view, eta, 0);
        assert_abs_diff_eq!(z[0].angle(), eta * phi, epsilon = 1e-14);
        assert_abs_diff_eq!(step, eta * phi, epsilon = 1e-14);
        // remaining offset is (1 - eta) * phi
        assert_abs_diff_eq!(
            wrap_angle(phi - z[0].angle()),
            (1.0 - eta) * phi,
            epsilon = 1e-14
        );
    }

    #[test]
    fn trimming_removes_outliers() {
        // symmetric inliers around zero plus a far outlier on each side
        // (within 25% per side): both are trimmed and the update vanishes
        let view = star_view(&[-3.0, -0.4, -0.2, 0.0, 0.2, 0.4, 2.9, -0.1, 0.1]);
        let mut z = vec![UnitComplex::identity(); 10];
        let step = tas_update_node(&mut z, &view, 0.5, 0);
        assert!(step < 1e-15, "step = {step:e}");
        assert_eq!(z[0].angle(), 0.0);
    }

    #[test]
    fn vanishing_eta_freezes_the_state() {
        let view = star_view(&[0.9, -0.3, 0.5]);
        let mut z = vec![UnitComplex::identity(); 4];
        let step = tas_update_node(&mut z, &view, 1e-9, 0);
        assert!(step < 1e-8);
    }

    #[test]
    fn eta_validation() {
        let s = spec(5, 0.0, 61).build().unwrap();
        for eta in [1.0, 0.0, -0.2] {
            let cfg = TasConfig {
                eta: Some(eta),
                ..TasConfig::default()
            };
            assert!(tas_run(&s, &cfg).is_err(), "eta = {eta} accepted");
        }
        // complete n = 5 requires eta < 2/3
        let cfg = TasConfig {
            eta: Some(0.7),
            ..TasConfig::default()
        };
        assert!(tas_run(&s, &cfg).is_err());
    }

    #[test]
    fn recovery_within_threshold() {
        for (n, alpha, seed) in [(12usize, 0.2, 62u64), (20, 0.24, 63)] {
            let s = spec(n, alpha, seed).build().unwrap();
            let (state, trace) = tas_run(&s, &TasConfig::default()).unwrap();
            assert_eq!(trace.status, RunStatus::Converged);
            let delta =
                normalization_spread(&state.estimates, s.ground_truth.as_deref().unwrap());
            assert!(delta < 1e-9, "n {n} alpha {alpha}: delta {delta:e}");
        }
    }

    #[test]
    fn contraction_bound_on_complete_graph() {
        let n = 10;
        let s = spec(n, 0.2, 64).build().unwrap();
        let cfg = TasConfig {
            eta: Some(0.5),
            ..TasConfig::default()
        };
        let (_, trace) = tas_run(&s, &cfg).unwrap();
        let bound = (n as f64 - 1.0 - 0.5) / (n as f64 - 1.0);
        for rec in trace.epochs.iter().skip(1) {
            if let Some(ratio) = rec.delta_ratio {
                assert!(
                    ratio <= bound + 1e-9,
                    "epoch {}: ratio {ratio} > bound {bound}",
                    rec.epoch
                );
            }
        }
    }

    #[test]
    fn escapes_the_two_cluster_fixture() {
        let s = spurious_fixture(6, std::f64::consts::FRAC_PI_4).unwrap();
        let (state, trace) = tas_run(&s, &TasConfig::default()).unwrap();
        assert_eq!(trace.status, RunStatus::Converged);
        let delta =
            normalization_spread(&state.estimates, s.ground_truth.as_deref().unwrap());
        assert!(delta < 1e-9, "delta = {delta:e}");
    }

    #[test]
    fn matches_depth_descent_with_trimmed_rule() {
        use crate::dds::{dds_run, DdsConfig};
        use crate::depth::{RuleKind, SelectionRule};
        use rand::SeedableRng;

        let s = spec(8, 0.2, 65).build().unwrap();
        let eta = 0.5;
        let tas_cfg = TasConfig {
            eta: Some(eta),
            max_epochs: 120,
            stop_tol: 0.0,
        };
        let dds_cfg = DdsConfig {
            beta: Some(0.25),
            eta: Some(eta),
            rule: Some(SelectionRule::new(RuleKind::TrimmedMean, 500)),
            max_epochs: 120,
            stop_tol: 0.0,
        };
        let (za, _) = tas_run(&s, &tas_cfg).unwrap();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let (zb, _) = dds_run(&s, &dds_cfg, &mut r).unwrap();
        for (a, b) in za.estimates.iter().zip(&zb.estimates) {
            let d = UnitComplex::from_rotation(a).angular_distance(&UnitComplex::from_rotation(b));
            assert!(d < 1e-12, "iterates diverged by {d:e}");
        }
    }
}
