//! Coordinate-descent least-absolute-deviations rotation averaging on
//! SO(2): the GD-L1 baseline.
//!
//! Each coordinate minimizes the sum of angular distances to its
//! neighbors' implied positions via a breakpoint line search. The energy
//! strictly decreases at every moving iteration and, with per-node
//! corruption below 1/2 and a connected graph, the normalization-product
//! spread never grows; but the iteration has spurious fixed points (states
//! where every coordinate is a one-sided local minimum that are not the
//! ground truth), and the coordinate map is not closed at the cut locus.
//! Both pathologies are exercised by the tests.

use std::time::Instant;

use crate::dds::{product_diagnostics, SyncState};
use crate::error::{Result, SyncError};
use crate::graph::So2View;
use crate::manifold::{wrap_angle, Rotation, UnitComplex, CUT_TOLERANCE};
use crate::scenario::Scenario;
use crate::trace::{EpochRecord, IterRecord, RunStatus, RunTrace};

/// The neighbor estimates `z_jk z_k` of node j, split by their tangent log
/// at a probe position: strictly ahead, strictly behind, exactly equal, or
/// at the cut locus (within [`CUT_TOLERANCE`] of pi).
#[derive(Debug, Clone)]
pub struct EstimatePartition {
    pub c_plus: Vec<usize>,
    pub c_minus: Vec<usize>,
    pub c_zero: Vec<usize>,
    pub cut: Vec<usize>,
}

impl EstimatePartition {
    /// Partition of j's neighbor estimates relative to the probe `y`.
    pub fn at(j: usize, y: &UnitComplex, z: &[UnitComplex], view: &So2View) -> Self {
        let mut p = EstimatePartition {
            c_plus: Vec::new(),
            c_minus: Vec::new(),
            c_zero: Vec::new(),
            cut: Vec::new(),
        };
        for &(k, angle_jk) in &view.neighbors[j] {
            let log = wrap_angle(angle_jk + z[k].angle() - y.angle());
            if log.abs() > std::f64::consts::PI - CUT_TOLERANCE {
                p.cut.push(k);
            } else if log == 0.0 {
                p.c_zero.push(k);
            } else if log > 0.0 {
                p.c_plus.push(k);
            } else {
                p.c_minus.push(k);
            }
        }
        p
    }

    pub fn total(&self) -> usize {
        self.c_plus.len() + self.c_minus.len() + self.c_zero.len() + self.cut.len()
    }
}

/// Total energy: the sum of angular deviations over the stored edges.
pub fn l1_energy(z: &[UnitComplex], view: &So2View) -> f64 {
    view.edges
        .iter()
        .map(|&(j, k, angle)| {
            let target = UnitComplex::from_angle(angle + z[k].angle());
            z[j].angular_distance(&target)
        })
        .sum()
}

/// Energy of node j probed at `y`: the sum of angular distances from `y`
/// to each neighbor estimate.
pub fn coordinate_energy(j: usize, y: &UnitComplex, z: &[UnitComplex], view: &So2View) -> f64 {
    view.neighbors[j]
        .iter()
        .map(|&(k, angle_jk)| {
            let target = UnitComplex::from_angle(angle_jk + z[k].angle());
            y.angular_distance(&target)
        })
        .sum()
}

/// One-sided directional derivative of the coordinate energy at `y` in the
/// unit direction `v`:
/// `sign(v) (-#C+ + #C-) + #C0 - #cut`.
///
/// Estimates exactly at the probe resist motion in both directions (their
/// distance grows at unit rate either way), hence the `+#C0` term; cut
/// estimates shrink either way, hence `-#cut`.
pub fn directional_derivative_at(
    j: usize,
    v: i8,
    y: &UnitComplex,
    z: &[UnitComplex],
    view: &So2View,
) -> f64 {
    let p = EstimatePartition::at(j, y, z, view);
    let signed = -(p.c_plus.len() as f64) + p.c_minus.len() as f64;
    (v.signum() as f64) * signed + p.c_zero.len() as f64 - p.cut.len() as f64
}

/// Directional derivative at node j's current position.
pub fn directional_derivative(j: usize, v: i8, z: &[UnitComplex], view: &So2View) -> f64 {
    directional_derivative_at(j, v, &z[j], z, view)
}

/// One coordinate update of the GD-L1 iteration. Returns the absolute
/// angular move (zero when the node is already a coordinate-wise local
/// minimum).
pub fn gd_l1_update_node(j: usize, z: &mut [UnitComplex], view: &So2View) -> Result<f64> {
    let d_plus = directional_derivative(j, 1, z, view);
    let d_minus = directional_derivative(j, -1, z, view);
    if d_plus.min(d_minus) >= 0.0 {
        return Ok(0.0);
    }
    let v: i8 = if d_plus <= d_minus { 1 } else { -1 };

    // breakpoints: logs of the estimates ahead of the move plus the
    // antipodes of the estimates behind it
    let p = EstimatePartition::at(j, &z[j], z, view);
    let (ahead, behind) = if v == 1 {
        (&p.c_plus, &p.c_minus)
    } else {
        (&p.c_minus, &p.c_plus)
    };
    let mut breakpoints: Vec<f64> = Vec::with_capacity(ahead.len() + behind.len());
    for &(k, angle_jk) in &view.neighbors[j] {
        let log = wrap_angle(angle_jk + z[k].angle() - z[j].angle());
        if ahead.contains(&k) {
            breakpoints.push(log);
        } else if behind.contains(&k) {
            breakpoints.push(wrap_angle(log + std::f64::consts::PI));
        }
    }
    breakpoints.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    for y in breakpoints {
        let probe = z[j].exp(y);
        if directional_derivative_at(j, v, &probe, z, view) >= 0.0 {
            z[j] = probe;
            return Ok(y.abs());
        }
    }
    Err(SyncError::NoBreakpoint)
}

/// True iff every node is a local minimum of its own coordinate energy in
/// both directions; otherwise the offending nodes are listed.
pub fn is_coordinatewise_fixed(z: &[UnitComplex], view: &So2View) -> (bool, Vec<usize>) {
    let mut non_fixed = Vec::new();
    for j in 0..view.n {
        let d_plus = directional_derivative(j, 1, z, view);
        let d_minus = directional_derivative(j, -1, z, view);
        if d_plus.min(d_minus) < 0.0 {
            non_fixed.push(j);
        }
    }
    (non_fixed.is_empty(), non_fixed)
}

/// Runs the cyclic iteration. With `stop_on_fixed` the run halts at the
/// first full epoch in which no coordinate moves; otherwise it runs out
/// `max_epochs` (useful for demonstrating that fixed points persist).
pub fn gd_l1_run(
    scenario: &Scenario,
    max_epochs: usize,
    stop_on_fixed: bool,
) -> Result<(SyncState, RunTrace)> {
    if scenario.dim() != 2 {
        return Err(SyncError::DimensionMismatch {
            expected: 2,
            got: scenario.dim(),
        });
    }
    if max_epochs == 0 {
        return Err(SyncError::InvalidConfig("max_epochs must be positive".into()));
    }
    let n = scenario.n();
    let view = So2View::new(&scenario.graph)?;
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

    for epoch in 0..max_epochs {
        let mut moved = false;
        for _ in 0..n {
            let j = t % n;
            let step = gd_l1_update_node(j, &mut z, &view)?;
            moved |= step > 0.0;
            trace.iters.push(IterRecord {
                t,
                epoch,
                node: j,
                step_norm: step,
                l1_energy: Some(l1_energy(&z, &view)),
            });
            t += 1;
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
        if stop_on_fixed && !moved {
            trace.status = RunStatus::Converged;
            return Ok((finish(z, t, n), trace));
        }
    }
    trace.status = if stop_on_fixed {
        RunStatus::MaxEpochs
    } else {
        let (fixed, _) = is_coordinatewise_fixed(&z, &view);
        if fixed {
            RunStatus::Converged
        } else {
            RunStatus::MaxEpochs
        }
    };
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
    use crate::scenario::spurious_fixture;
    use approx::assert_abs_diff_eq;

    fn complete_view(n: usize, measurement_angles: &dyn Fn(usize, usize) -> f64) -> So2View {
        let mut edges = Vec::new();
        for j in 0..n {
            for k in (j + 1)..n {
                edges.push(Edge {
                    j,
                    k,
                    measurement: Rotation::from_angle(measurement_angles(j, k)),
                    label: EdgeLabel::Unknown,
                });
            }
        }
        So2View::new(&MeasurementGraph::new(n, 2, edges).unwrap()).unwrap()
    }

    fn angles(z: &[f64]) -> Vec<UnitComplex> {
        z.iter().map(|&a| UnitComplex::from_angle(a)).collect()
    }

    #[test]
    fn energy_examples() {
        // identity measurements, all estimates equal: zero energy
        let view = complete_view(4, &|_, _| 0.0);
        let z = angles(&[0.3, 0.3, 0.3, 0.3]);
        assert!(l1_energy(&z, &view) < 1e-15);
        // single edge with offset phi
        let edges = vec![Edge {
            j: 0,
            k: 1,
            measurement: Rotation::from_angle(0.0),
            label: EdgeLabel::Unknown,
        }];
        let view1 = So2View::new(&MeasurementGraph::new(2, 2, edges).unwrap()).unwrap();
        let z = angles(&[0.7, 0.0]);
        assert_abs_diff_eq!(l1_energy(&z, &view1), 0.7, epsilon = 1e-15);
        // edge-sum identity: sum of coordinate energies double-counts
        let view = complete_view(5, &|j, k| (j + k) as f64 * 0.1);
        let z = angles(&[0.0, 0.5, -0.4, 1.0, 2.0]);
        let total: f64 = (0..5).map(|j| coordinate_energy(j, &z[j], &z, &view)).sum();
        assert_abs_diff_eq!(l1_energy(&z, &view), total / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn coordinate_energy_of_symmetric_estimates() {
        // neighbors at offsets {-a, 0, a} around y: energy 2a
        let a = 0.6;
        let view = complete_view(4, &|j, k| match (j, k) {
            (0, 1) => -a,
            (0, 2) => 0.0,
            (0, 3) => a,
            _ => 0.0,
        });
        let z = angles(&[0.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(
            coordinate_energy(0, &z[0], &z, &view),
            2.0 * a,
            epsilon = 1e-15
        );
    }

    #[test]
    fn derivative_count_formula() {
        // node 0 with 4 neighbors: 3 ahead, 1 behind
        let view = complete_view(5, &|j, k| match (j, k) {
            (0, 1) => 0.2,
            (0, 2) => 0.4,
            (0, 3) => 0.9,
            (0, 4) => -0.5,
            _ => 0.0,
        });
        let z = angles(&[0.0; 5]);
        assert_eq!(directional_derivative(0, 1, &z, &view), -2.0);
        assert_eq!(directional_derivative(0, -1, &z, &view), 2.0);
    }

    #[test]
    fn exact_consensus_is_fixed() {
        let view = complete_view(4, &|_, _| 0.0);
        let mut z = angles(&[0.1, 0.1, 0.1, 0.1]);
        // every neighbor estimate coincides: both derivatives are
        // nonnegative and the node does not move
        assert!(directional_derivative(0, 1, &z, &view) >= 0.0);
        assert!(directional_derivative(0, -1, &z, &view) >= 0.0);
        let step = gd_l1_update_node(0, &mut z, &view).unwrap();
        assert_eq!(step, 0.0);
        assert_eq!(z[0].angle(), 0.1);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..40 {
            let n = 5 + (r.gen::<u32>() % 4) as usize;
            let view = complete_view(n, &{
                let seed: f64 = r.gen();
                move |j, k| ((j * 31 + k * 17) as f64 * seed).sin() * 2.0
            });
            let z: Vec<UnitComplex> = (0..n)
                .map(|_| UnitComplex::from_angle(r.gen::<f64>() * 6.0 - 3.0))
                .collect();
            for j in 0..n {
                for v in [1i8, -1] {
                    let d = directional_derivative(j, v, &z, &view);
                    let h = 1e-7;
                    let probe = z[j].exp(v as f64 * h);
                    let fd = (coordinate_energy(j, &probe, &z, &view)
                        - coordinate_energy(j, &z[j], &z, &view))
                        / h;
                    // off breakpoints the one-sided derivative is exact
                    assert!(
                        (d - fd).abs() < 1e-4 * (1.0 + d.abs()),
                        "node {j} dir {v}: derivative {d} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_neighbor_snaps_onto_it() {
        let edges = vec![Edge {
            j: 0,
            k: 1,
            measurement: Rotation::from_angle(0.0),
            label: EdgeLabel::Unknown,
        }];
        let view = So2View::new(&MeasurementGraph::new(2, 2, edges).unwrap()).unwrap();
        let mut z = angles(&[0.0, 0.9]);
        let step = gd_l1_update_node(0, &mut z, &view).unwrap();
        assert_abs_diff_eq!(z[0].angle(), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(step, 0.9, epsilon = 1e-15);
    }

    #[test]
    fn moves_to_the_median_breakpoint() {
        // neighbors at offsets {0.1, 0.2, 0.9}: the move stops at 0.2
        let view = complete_view(4, &|j, k| match (j, k) {
            (0, 1) => 0.1,
            (0, 2) => 0.2,
            (0, 3) => 0.9,
            _ => 0.0,
        });
        let mut z = angles(&[0.0; 4]);
        let step = gd_l1_update_node(0, &mut z, &view).unwrap();
        assert_abs_diff_eq!(z[0].angle(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(step, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn fixture_is_coordinatewise_fixed_but_wrong() {
        let s = spurious_fixture(6, std::f64::consts::FRAC_PI_4).unwrap();
        let view = So2View::new(&s.graph).unwrap();
        let z: Vec<UnitComplex> = s.init.iter().map(UnitComplex::from_rotation).collect();
        let (fixed, non_fixed) = is_coordinatewise_fixed(&z, &view);
        assert!(fixed, "non-fixed nodes: {non_fixed:?}");
        let delta = normalization_spread(&s.init, s.ground_truth.as_deref().unwrap());
        assert_abs_diff_eq!(delta, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        // and it stays put under the full iteration
        let (state, trace) = gd_l1_run(&s, 50, false).unwrap();
        assert_eq!(trace.status, RunStatus::Converged);
        for (a, b) in state.estimates.iter().zip(&s.init) {
            assert_eq!(a.angle(), b.angle());
        }
    }

    #[test]
    fn majority_on_one_side_is_not_fixed() {
        let view = complete_view(4, &|j, _| if j == 0 { 0.5 } else { 0.0 });
        let z = angles(&[0.0; 4]);
        let (fixed, non_fixed) = is_coordinatewise_fixed(&z, &view);
        assert!(!fixed);
        assert!(non_fixed.contains(&0));
    }

    #[test]
    fn energy_strictly_decreases_while_moving() {
        use rand::SeedableRng;
        let spec = crate::scenario::ScenarioSpec {
            n: 10,
            dim: 2,
            graph: crate::scenario::GraphKind::Complete,
            model: crate::scenario::CorruptionModel::Random,
            alpha: 0.3,
            rho: 1.2,
            theta: 0.0,
            seed: 72,
        };
        let s = spec.build().unwrap();
        let _ = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let (_, trace) = gd_l1_run(&s, 300, true).unwrap();
        let mut prev = f64::INFINITY;
        for rec in &trace.iters {
            let e = rec.l1_energy.unwrap();
            if rec.step_norm > 0.0 {
                assert!(e < prev + 1e-12, "energy rose: {prev} -> {e}");
            }
            prev = e;
        }
        assert_eq!(trace.status, RunStatus::Converged);
    }

    #[test]
    fn map_is_not_closed_at_the_cut_locus() {
        // perturbed states step to e^{-ic} while the limit state steps to
        // e^{+ic}: the coordinate map is discontinuous in its inputs
        let c = 1.0;
        let view = complete_view(6, &|_, _| 0.0);
        // limit input: fifth and sixth coordinates exactly at the cut locus
        let mut z_limit = angles(&[0.0, c, c, -c, std::f64::consts::PI, std::f64::consts::PI]);
        gd_l1_update_node(0, &mut z_limit, &view).unwrap();
        assert_abs_diff_eq!(z_limit[0].angle(), c, epsilon = 1e-12);
        for l in [10.0f64, 100.0, 1000.0] {
            let near_pi = wrap_angle(1.0 / l + std::f64::consts::PI);
            let mut z = angles(&[0.0, c, c, -c, near_pi, near_pi]);
            gd_l1_update_node(0, &mut z, &view).unwrap();
            assert_abs_diff_eq!(z[0].angle(), -c, epsilon = 1e-12);
        }
    }
}
