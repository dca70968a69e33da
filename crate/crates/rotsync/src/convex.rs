//! Small convex-geometry utilities: the minimum-norm point of a convex hull
//! (Wolfe's algorithm) and a point-in-hull distance built on it.

use nalgebra::DMatrix;

/// Minimum-norm point of the convex hull of `points` (Wolfe, 1976).
///
/// Exact up to floating-point tolerance for the small dimensions used here
/// (the corral never outgrows dim + 1 points after minor cycles).
pub fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    assert!(!points.is_empty());
    let dim = points[0].len();
    let scale = points
        .iter()
        .map(|p| dot(p, p))
        .fold(0.0f64, f64::max)
        .max(1e-30);
    let tol = 1e-13 * scale;

    // start from the point of smallest norm
    let start = (0..points.len())
        .min_by(|&a, &b| {
            dot(&points[a], &points[a])
                .partial_cmp(&dot(&points[b], &points[b]))
                .unwrap()
        })
        .unwrap();
    let mut corral: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = points[start].clone();

    for _ in 0..(10 * points.len() + 100) {
        // most violating vertex
        let xx = dot(&x, &x);
        let mut best = 0;
        let mut best_dot = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            let d = dot(&x, p);
            if d < best_dot {
                best_dot = d;
                best = i;
            }
        }
        if best_dot >= xx - tol || corral.contains(&best) {
            break;
        }
        corral.push(best);
        weights.push(0.0);

        // minor cycles: affine minimizer clipped back into the simplex
        loop {
            let alpha = affine_min_norm(points, &corral);
            if alpha.iter().all(|&a| a > -1e-12) {
                weights = alpha.iter().map(|&a| a.max(0.0)).collect();
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                break;
            }
            let mut theta = 1.0f64;
            for (i, (&w, &a)) in weights.iter().zip(alpha.iter()).enumerate() {
                let _ = i;
                if a < w {
                    theta = theta.min(w / (w - a));
                }
            }
            for (w, &a) in weights.iter_mut().zip(alpha.iter()) {
                *w = (1.0 - theta) * *w + theta * a;
            }
            let keep: Vec<usize> = (0..corral.len()).filter(|&i| weights[i] > 1e-14).collect();
            if keep.len() == corral.len() {
                // numerical stall; accept the clipped weights
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                break;
            }
            corral = keep.iter().map(|&i| corral[i]).collect();
            weights = keep.iter().map(|&i| weights[i]).collect();
        }

        x = vec![0.0; dim];
        for (&ci, &w) in corral.iter().zip(weights.iter()) {
            for (xi, pi) in x.iter_mut().zip(points[ci].iter()) {
                *xi += w * pi;
            }
        }
    }
    x
}

/// Euclidean distance from `point` to the convex hull of `points`.
pub fn distance_to_hull(point: &[f64], points: &[Vec<f64>]) -> f64 {
    let shifted: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(point).map(|(a, b)| a - b).collect())
        .collect();
    let m = min_norm_point(&shifted);
    dot(&m, &m).sqrt()
}

/// Coefficients of the min-norm point of the affine hull of the corral:
/// minimize |sum a_i p_i|^2 subject to sum a_i = 1.
fn affine_min_norm(points: &[Vec<f64>], corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    let mut sys = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = nalgebra::DVector::zeros(k + 1);
    for i in 0..k {
        for j in 0..k {
            sys[(i, j)] = 2.0 * dot(&points[corral[i]], &points[corral[j]]);
        }
        sys[(i, k)] = 1.0;
        sys[(k, i)] = 1.0;
    }
    rhs[k] = 1.0;
    match sys.lu().solve(&rhs) {
        Some(sol) => (0..k).map(|i| sol[i]).collect(),
        None => {
            // degenerate corral: fall back to uniform weights
            vec![1.0 / k as f64; k]
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
