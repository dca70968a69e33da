//! Smallest enclosing balls of rotation sets.
//!
//! D = 2 is exact via the minimal covering arc of the angles. D = 3 is exact
//! via a lift to unit quaternions: the minimax spherical-cap center is the
//! normalized minimum-norm point of the convex hull of the (sign-aligned)
//! quaternions. D > 3 falls back to an iterative Riemannian center-shift,
//! which is a diagnostic-quality approximation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    geodesic_distance, geodesic_point, log_map, mat3_to_quat, quat_to_mat3, Ball,
    Rotation, UnitComplex, SQRT2,
};
use crate::convex::min_norm_point;
use crate::error::{Result, SyncError};

/// Minimal covering arc of unit complex numbers: returns (center, radius)
/// with the radius in the angular metric. Exact.
pub fn enclosing_arc(points: &[UnitComplex]) -> (UnitComplex, f64) {
    assert!(!points.is_empty());
    if points.len() == 1 {
        return (points[0], 0.0);
    }
    let mut angles: Vec<f64> = points.iter().map(|z| z.angle()).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = angles.len();
    // largest gap between consecutive angles (cyclically)
    let mut best_gap = 2.0 * std::f64::consts::PI - (angles[n - 1] - angles[0]);
    let mut gap_end = angles[0];
    for w in angles.windows(2) {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            gap_end = w[1];
        }
    }
    let width = 2.0 * std::f64::consts::PI - best_gap;
    let center = UnitComplex::from_angle(gap_end + width / 2.0);
    (center, width / 2.0)
}

/// Smallest ball enclosing the given rotations, radius in the Frobenius-log
/// metric. Errors with [`SyncError::NoSmallBall`] when the best ball found
/// has radius >= pi/2 (the convexity certificate fails); the ball is still
/// carried in the error for diagnostics.
pub fn smallest_enclosing_ball(points: &[Rotation]) -> Result<Ball> {
    assert!(!points.is_empty(), "enclosing ball of an empty set");
    let dim = points[0].dim();
    let ball = match dim {
        2 => {
            let zs: Vec<UnitComplex> = points.iter().map(UnitComplex::from_rotation).collect();
            let (center, radius) = enclosing_arc(&zs);
            Ball {
                center: center.to_rotation(),
                radius: SQRT2 * radius,
            }
        }
        3 => so3_ball(points),
        _ => riemannian_center_ball(points),
    };
    if ball.radius >= std::f64::consts::FRAC_PI_2 {
        let radius = ball.radius;
        return Err(SyncError::NoSmallBall { ball, radius });
    }
    Ok(ball)
}

fn so3_ball(points: &[Rotation]) -> Ball {
    if points.len() == 1 {
        return Ball {
            center: points[0].clone(),
            radius: 0.0,
        };
    }
    // lift to quaternions with consistent signs: align to the first point,
    // then re-align once against the chordal mean for stability
    let mut quats: Vec<[f64; 4]> = points.iter().map(|r| mat3_to_quat(r.matrix())).collect();
    for i in 1..quats.len() {
        if qdot(&quats[0], &quats[i]) < 0.0 {
            qneg(&mut quats[i]);
        }
    }
    let mut mean = [0.0f64; 4];
    for q in &quats {
        for k in 0..4 {
            mean[k] += q[k];
        }
    }
    for q in &mut quats {
        if qdot(&mean, q) < 0.0 {
            qneg(q);
        }
    }

    let cloud: Vec<Vec<f64>> = quats.iter().map(|q| q.to_vec()).collect();
    let w = min_norm_point(&cloud);
    let wn = (w.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let center = if wn < 1e-9 {
        // no covering hemisphere; report from the chordal mean as best effort
        let n = (mean.iter().map(|x| x * x).sum::<f64>()).sqrt();
        Rotation::from_matrix_unchecked(quat_to_mat3(&[
            mean[0] / n,
            mean[1] / n,
            mean[2] / n,
            mean[3] / n,
        ]))
    } else {
        Rotation::from_matrix_unchecked(quat_to_mat3(&[
            w[0] / wn,
            w[1] / wn,
            w[2] / wn,
            w[3] / wn,
        ]))
    };
    let radius = points
        .iter()
        .map(|p| geodesic_distance(&center, p))
        .fold(0.0, f64::max);
    Ball { center, radius }
}

/// Iterative minimax center: move a fraction 1/(k+1) along the geodesic
/// toward the current farthest point until the radius stalls.
fn riemannian_center_ball(points: &[Rotation]) -> Ball {
    let mut center = points[0].clone();
    let mut radius = max_distance(&center, points);
    let mut stall = 0;
    // deterministic tie-breaking jitter source, in case a log hits the cut locus
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eb);
    for k in 1..20_000usize {
        let (far, d) = farthest(&center, points);
        if d <= 0.0 {
            break;
        }
        let step = 1.0 / (k + 1) as f64;
        let next = match log_map(&center, far) {
            Ok(v) => super::exp_map(&center, &v.scaled(step)).expect("exp of scaled log"),
            Err(_) => {
                // nudge off the cut locus and retry next round
                let v = super::TangentVector::random_in_ball(center.clone(), 1e-6, &mut rng);
                super::exp_map(&center, &v).expect("exp of jitter")
            }
        };
        let next_radius = max_distance(&next, points);
        if radius - next_radius < 1e-9 {
            stall += 1;
            if stall > 50 {
                if next_radius < radius {
                    center = next;
                    radius = next_radius;
                }
                break;
            }
        } else {
            stall = 0;
        }
        if next_radius < radius {
            radius = next_radius;
            center = next;
        }
    }
    Ball { center, radius }
}

fn farthest<'a>(center: &Rotation, points: &'a [Rotation]) -> (&'a Rotation, f64) {
    let mut best = &points[0];
    let mut best_d = -1.0;
    for p in points {
        let d = geodesic_distance(center, p);
        if d > best_d {
            best_d = d;
            best = p;
        }
    }
    (best, best_d)
}

fn max_distance(center: &Rotation, points: &[Rotation]) -> f64 {
    points
        .iter()
        .map(|p| geodesic_distance(center, p))
        .fold(0.0, f64::max)
}

/// Geodesic midpoint-style interpolation used by tests; re-exported here to
/// keep the ball module self-contained.
#[allow(dead_code)]
fn geodesic_midpoint(a: &Rotation, b: &Rotation) -> Result<Rotation> {
    geodesic_point(a, b, 0.5)
}

fn qdot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn qneg(q: &mut [f64; 4]) {
    for x in q.iter_mut() {
        *x = -*x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{exp_map, random_rotation, wrap_angle, TangentVector};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_ball_has_zero_radius() {
        let r = Rotation::from_angle(0.7);
        let ball = smallest_enclosing_ball(std::slice::from_ref(&r)).unwrap();
        assert_eq!(ball.radius, 0.0);
        assert_eq!(ball.center.matrix(), r.matrix());
    }

    #[test]
    fn so2_arc_of_three_angles() {
        // angles {-0.3, 0.0, 0.5}: covering arc center 0.1, radius 0.4
        let pts: Vec<Rotation> = [-0.3, 0.0, 0.5].iter().map(|&a| Rotation::from_angle(a)).collect();
        let ball = smallest_enclosing_ball(&pts).unwrap();
        assert_abs_diff_eq!(ball.center.angle(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(ball.radius, SQRT2 * 0.4, epsilon = 1e-12);
    }

    #[test]
    fn all_points_contained_within_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2usize, 3] {
            for _ in 0..20 {
                let center = random_rotation(dim, &mut rng);
                let pts: Vec<Rotation> = (0..12)
                    .map(|_| {
                        let v = TangentVector::random_in_ball(center.clone(), 0.8, &mut rng);
                        exp_map(&center, &v).unwrap()
                    })
                    .collect();
                let ball = smallest_enclosing_ball(&pts).unwrap();
                for p in &pts {
                    assert!(
                        ball.contains(p, 1e-6),
                        "point at distance {} outside radius {}",
                        geodesic_distance(&ball.center, p),
                        ball.radius
                    );
                }
            }
        }
    }

    #[test]
    fn so3_ball_is_minimax_against_grid_refinement() {
        // the exact center cannot be beaten by local perturbations
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let base = random_rotation(3, &mut rng);
            let pts: Vec<Rotation> = (0..8)
                .map(|_| {
                    let v = TangentVector::random_in_ball(base.clone(), 0.6, &mut rng);
                    exp_map(&base, &v).unwrap()
                })
                .collect();
            let ball = smallest_enclosing_ball(&pts).unwrap();
            for _ in 0..200 {
                let v = TangentVector::random_in_ball(ball.center.clone(), 1e-3, &mut rng);
                let other = exp_map(&ball.center, &v).unwrap();
                let r = pts
                    .iter()
                    .map(|p| geodesic_distance(&other, p))
                    .fold(0.0, f64::max);
                assert!(r > ball.radius - 1e-6, "found better center: {r} < {}", ball.radius);
            }
        }
    }

    #[test]
    fn wide_spread_reports_no_small_ball() {
        let pts = vec![
            Rotation::from_angle(0.0),
            Rotation::from_angle(1.4),
            Rotation::from_angle(-1.4),
        ];
        // angular radius 1.4 -> Frobenius radius sqrt(2)*1.4 > pi/2
        match smallest_enclosing_ball(&pts) {
            Err(SyncError::NoSmallBall { radius, .. }) => {
                assert_abs_diff_eq!(radius, SQRT2 * 1.4, epsilon = 1e-12);
            }
            other => panic!("expected NoSmallBall, got {other:?}"),
        }
    }

    #[test]
    fn wrap_angle_arc_spanning_pi() {
        // angles near +-pi: covering arc should cross the seam
        let pts: Vec<Rotation> = [3.0, -3.0, 3.1]
            .iter()
            .map(|&a| Rotation::from_angle(a))
            .collect();
        let ball = smallest_enclosing_ball(&pts).unwrap();
        let center = UnitComplex::from_rotation(&ball.center);
        for p in &pts {
            let z = UnitComplex::from_rotation(p);
            assert!(center.angular_distance(&z) <= ball.radius / SQRT2 + 1e-12);
        }
        assert!(wrap_angle(center.angle()).abs() > 3.0);
    }
}
