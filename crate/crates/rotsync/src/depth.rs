//! Tukey halfspace depth over point sets in the Euclidean tangent
//! coordinates of SO(D), plus level sets, trimmed means, and the selection
//! rules used by the solvers.
//!
//! The depth of `x` in a cloud is the minimum, over closed halfspaces whose
//! boundary hyperplane passes through `x`, of the number of cloud points in
//! the halfspace. Dimensions 1 through 3 are computed exactly: the minimum
//! is always attained on an open cell of the arrangement of hyperplane
//! normals, and every such cell is reachable by perturbing a candidate
//! normal built from the data (cross products of difference pairs in 3D,
//! orthogonals of differences in 2D). Dimensions above 3 are rejected; no
//! algorithm here needs them.

use rand::Rng;

use crate::error::{Result, SyncError};

/// Angular size of the tie-breaking perturbations applied to candidate
/// hyperplane normals.
const NORMAL_PERTURBATION: f64 = 1e-7;

/// Integer ceiling of a float count with protection against representation
/// error in products like `(1.0/3.0) * 9.0`.
pub fn ceil_count(v: f64) -> usize {
    (v - 1e-9).ceil().max(0.0) as usize
}

/// Integer floor with the same protection.
pub fn floor_count(v: f64) -> usize {
    (v + 1e-9).floor().max(0.0) as usize
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A finite point set in R^dim.
#[derive(Debug, Clone)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(SyncError::InvalidInput("empty point cloud".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(SyncError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
        }
        Ok(PointCloud { dim, points })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        PointCloud::new(1, values.into_iter().map(|v| vec![v]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    fn values_1d(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }
}

/// The 1-dimensional beta-depth level set, a closed interval of order
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthInterval {
    pub lo: f64,
    pub hi: f64,
}

impl DepthInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// How a point is chosen from the depth level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Average of the points between the beta and (1-beta) quantiles.
    /// 1-dimensional clouds only.
    TrimmedMean,
    /// The deepest point among the candidate set.
    DeepestCandidate,
    /// Uniformly random qualifying candidate.
    RandomInterior,
}

#[derive(Debug, Clone, Copy)]
pub struct SelectionRule {
    pub kind: RuleKind,
    pub search_budget: usize,
}

impl SelectionRule {
    pub fn new(kind: RuleKind, search_budget: usize) -> Self {
        SelectionRule {
            kind,
            search_budget,
        }
    }

    /// TrimmedMean for 1D tangent spaces, DeepestCandidate otherwise.
    pub fn default_for_dim(dim: usize) -> Self {
        let kind = if dim == 1 {
            RuleKind::TrimmedMean
        } else {
            RuleKind::DeepestCandidate
        };
        SelectionRule {
            kind,
            search_budget: 500,
        }
    }
}

// ---------------------------------------------------------------------------
// 1D depth
// ---------------------------------------------------------------------------

/// `min(#{x_i <= x}, #{x_i >= x})`.
pub fn tukey_depth_1d(x: f64, cloud: &PointCloud) -> usize {
    debug_assert_eq!(cloud.dim(), 1);
    let mut le = 0usize;
    let mut ge = 0usize;
    for p in cloud.points() {
        if p[0] <= x {
            le += 1;
        }
        if p[0] >= x {
            ge += 1;
        }
    }
    le.min(ge)
}

/// `[x_(ceil(beta n)), x_(floor((1-beta) n))]` with 1-indexed order
/// statistics.
pub fn depth_region_1d(beta: f64, cloud: &PointCloud) -> Result<DepthInterval> {
    debug_assert_eq!(cloud.dim(), 1);
    if !(beta > 0.0 && beta <= 0.5) {
        return Err(SyncError::InvalidConfig(format!(
            "beta must be in (0, 1/2], got {beta}"
        )));
    }
    let n = cloud.len();
    let lo_idx = ceil_count(beta * n as f64).max(1);
    let hi_idx = floor_count((1.0 - beta) * n as f64);
    if lo_idx > hi_idx {
        return Err(SyncError::EmptyRegion {
            lo: lo_idx,
            hi: hi_idx,
        });
    }
    let mut values = cloud.values_1d();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(DepthInterval {
        lo: values[lo_idx - 1],
        hi: values[hi_idx - 1],
    })
}

/// The p-quantile convention used throughout: the order statistic
/// `x_(max(1, ceil(p n)))`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let idx = ceil_count(p * n as f64).max(1).min(n);
    sorted[idx - 1]
}

/// Mean of the values between the beta and (1-beta) quantiles (inclusive).
pub fn trimmed_mean_level(values: &[f64], beta: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = quantile(&sorted, beta);
    let hi = quantile(&sorted, 1.0 - beta);
    let mut sum = 0.0;
    let mut count = 0usize;
    for &v in &sorted {
        if lo <= v && v <= hi {
            sum += v;
            count += 1;
        }
    }
    sum / count as f64
}

/// The fixed 0.25-trimming operator: `ave({x : X_0.25 <= x <= X_0.75})`.
pub fn trimmed_mean_1d(cloud: &PointCloud) -> f64 {
    debug_assert_eq!(cloud.dim(), 1);
    trimmed_mean_level(&cloud.values_1d(), 0.25)
}

// ---------------------------------------------------------------------------
// Exact depth, dimensions 2 and 3
// ---------------------------------------------------------------------------

/// Exact halfspace depth for dim in 1..=3.
pub fn tukey_depth(x: &[f64], cloud: &PointCloud) -> Result<usize> {
    if x.len() != cloud.dim() {
        return Err(SyncError::DimensionMismatch {
            expected: cloud.dim(),
            got: x.len(),
        });
    }
    match cloud.dim() {
        1 => Ok(tukey_depth_1d(x[0], cloud)),
        2 => Ok(depth_2d(x, cloud.points(), 0)),
        3 => Ok(depth_3d(x, cloud.points(), 0)),
        dim => Err(SyncError::UnsupportedDim { dim }),
    }
}

/// Depth with a pruning floor: once the running minimum drops below
/// `floor`, the scan aborts and returns it (the true depth is no larger).
fn depth_pruned(x: &[f64], cloud: &PointCloud, floor: usize) -> usize {
    match cloud.dim() {
        1 => tukey_depth_1d(x[0], cloud),
        2 => depth_2d(x, cloud.points(), floor),
        _ => depth_3d(x, cloud.points(), floor),
    }
}

fn depth_2d(x: &[f64], points: &[Vec<f64>], floor: usize) -> usize {
    let mut diffs: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    let mut zeros = 0usize;
    for p in points {
        let d = [p[0] - x[0], p[1] - x[1]];
        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if n == 0.0 {
            zeros += 1;
        } else {
            diffs.push([d[0] / n, d[1] / n]);
        }
    }
    let count = |u: &[f64; 2]| -> usize {
        zeros
            + diffs
                .iter()
                .filter(|d| u[0] * d[0] + u[1] * d[1] >= 0.0)
                .count()
    };
    let mut best = zeros + diffs.len();
    let visit = |u: [f64; 2], best: &mut usize| -> bool {
        let c = count(&u);
        if c < *best {
            *best = c;
        }
        *best < floor
    };
    if visit([1.0, 0.0], &mut best) {
        return best;
    }
    for i in 0..diffs.len() {
        let d = diffs[i];
        let t = [-d[1], d[0]];
        for u in [
            d,
            [-d[0], -d[1]],
            [t[0] + NORMAL_PERTURBATION * d[0], t[1] + NORMAL_PERTURBATION * d[1]],
            [t[0] - NORMAL_PERTURBATION * d[0], t[1] - NORMAL_PERTURBATION * d[1]],
            [-t[0] + NORMAL_PERTURBATION * d[0], -t[1] + NORMAL_PERTURBATION * d[1]],
            [-t[0] - NORMAL_PERTURBATION * d[0], -t[1] - NORMAL_PERTURBATION * d[1]],
        ] {
            if visit(u, &mut best) {
                return best;
            }
        }
    }
    best
}

fn depth_3d(x: &[f64], points: &[Vec<f64>], floor: usize) -> usize {
    let mut diffs: Vec<[f64; 3]> = Vec::with_capacity(points.len());
    let mut zeros = 0usize;
    for p in points {
        let d = [p[0] - x[0], p[1] - x[1], p[2] - x[2]];
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if n == 0.0 {
            zeros += 1;
        } else {
            diffs.push([d[0] / n, d[1] / n, d[2] / n]);
        }
    }
    let count = |u: &[f64; 3]| -> usize {
        zeros
            + diffs
                .iter()
                .filter(|d| u[0] * d[0] + u[1] * d[1] + u[2] * d[2] >= 0.0)
                .count()
    };
    let mut best = zeros + diffs.len();
    let visit = |u: [f64; 3], best: &mut usize| -> bool {
        let c = count(&u);
        if c < *best {
            *best = c;
        }
        *best < floor
    };
    if visit([1.0, 0.0, 0.0], &mut best) {
        return best;
    }
    // single-difference directions cover collinear clouds and prune fast
    for d in &diffs {
        if visit(*d, &mut best) || visit([-d[0], -d[1], -d[2]], &mut best) {
            return best;
        }
    }
    // arrangement vertices: cross products of difference pairs, perturbed
    // into each adjacent cell
    let eps = NORMAL_PERTURBATION;
    for i in 0..diffs.len() {
        for j in (i + 1)..diffs.len() {
            let a = diffs[i];
            let b = diffs[j];
            let c = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            let cn = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            if cn < 1e-12 {
                continue;
            }
            let c = [c[0] / cn, c[1] / cn, c[2] / cn];
            for s in [1.0f64, -1.0] {
                for (s1, s2) in [(1.0f64, 1.0f64), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let u = [
                        s * c[0] + eps * (s1 * a[0] + s2 * b[0]),
                        s * c[1] + eps * (s1 * a[1] + s2 * b[1]),
                        s * c[2] + eps * (s1 * a[2] + s2 * b[2]),
                    ];
                    if visit(u, &mut best) {
                        return best;
                    }
                }
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Maximal-depth selection
// ---------------------------------------------------------------------------

/// Selects a point of depth at least `ceil(beta * n)` from the cloud.
///
/// The candidate set is the cloud itself, the coordinate-wise median, the
/// coordinate-wise trimmed mean, the full mean, and all pairwise midpoints;
/// a hill climb from the deepest candidate handles the rare miss. Existence
/// is guaranteed for `beta <= 1/(dim+1)` by the centerpoint bound.
pub fn max_depth_point<R: Rng + ?Sized>(
    cloud: &PointCloud,
    beta: f64,
    rule: &SelectionRule,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if cloud.is_empty() {
        return Err(SyncError::InvalidInput("empty point cloud".into()));
    }
    let n = cloud.len();
    let needed = ceil_count(beta * n as f64);

    if rule.kind == RuleKind::TrimmedMean {
        if cloud.dim() != 1 {
            return Err(SyncError::InvalidConfig(
                "the trimmed-mean rule applies to 1-dimensional clouds only".into(),
            ));
        }
        let tm = trimmed_mean_level(&cloud.values_1d(), beta);
        return Ok(vec![nudge_1d(tm, cloud)]);
    }

    let candidates = candidate_points(cloud);
    let mut best_idx = 0usize;
    let mut best_depth = depth_pruned(&candidates[0], cloud, 0);
    for (idx, c) in candidates.iter().enumerate().skip(1) {
        let d = depth_pruned(c, cloud, best_depth);
        if d > best_depth {
            best_depth = d;
            best_idx = idx;
        }
    }

    let selected: Vec<f64> = match rule.kind {
        RuleKind::DeepestCandidate => {
            if best_depth >= needed {
                candidates[best_idx].clone()
            } else {
                hill_climb(cloud, candidates[best_idx].clone(), best_depth, needed, rule, rng)?
            }
        }
        RuleKind::RandomInterior => {
            let qualifying: Vec<usize> = candidates
                .iter()
                .enumerate()
                .filter(|(_, c)| depth_pruned(c, cloud, needed) >= needed)
                .map(|(i, _)| i)
                .collect();
            if qualifying.is_empty() {
                hill_climb(cloud, candidates[best_idx].clone(), best_depth, needed, rule, rng)?
            } else {
                candidates[qualifying[rng.gen_range(0..qualifying.len())]].clone()
            }
        }
        RuleKind::TrimmedMean => unreachable!(),
    };

    // relative-interior nudge: a selected cloud point is averaged with the
    // deepest candidate at weight 1e-3 (a no-op when they coincide)
    if cloud.points().iter().any(|p| p == &selected) {
        let deepest = &candidates[best_idx];
        let blended: Vec<f64> = selected
            .iter()
            .zip(deepest)
            .map(|(s, d)| s + 1e-3 * (d - s))
            .collect();
        return Ok(blended);
    }
    Ok(selected)
}

fn nudge_1d(value: f64, cloud: &PointCloud) -> f64 {
    if !cloud.points().iter().any(|p| p[0] == value) {
        return value;
    }
    let mut sorted = cloud.values_1d();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    value + 1e-3 * (median - value)
}

fn candidate_points(cloud: &PointCloud) -> Vec<Vec<f64>> {
    let dim = cloud.dim();
    let n = cloud.len();
    let pts = cloud.points();

    let mut sorted_per_coord: Vec<Vec<f64>> = vec![Vec::with_capacity(n); dim];
    for p in pts {
        for (k, &v) in p.iter().enumerate() {
            sorted_per_coord[k].push(v);
        }
    }
    for col in &mut sorted_per_coord {
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }

    let median: Vec<f64> = sorted_per_coord
        .iter()
        .map(|col| {
            if n % 2 == 1 {
                col[n / 2]
            } else {
                0.5 * (col[n / 2 - 1] + col[n / 2])
            }
        })
        .collect();
    let trimmed: Vec<f64> = sorted_per_coord
        .iter()
        .map(|col| trimmed_mean_level(col, 0.25))
        .collect();
    let mean: Vec<f64> = (0..dim)
        .map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n as f64)
        .collect();

    let mut candidates = Vec::with_capacity(3 + n + n * (n - 1) / 2);
    candidates.push(median);
    candidates.push(trimmed);
    candidates.push(mean);
    for p in pts {
        candidates.push(p.clone());
    }
    for i in 0..n {
        for j in (i + 1)..n {
            candidates.push(
                (0..dim)
                    .map(|k| 0.5 * (pts[i][k] + pts[j][k]))
                    .collect::<Vec<f64>>(),
            );
        }
    }
    candidates.dedup();
    candidates
}

/// Grid-plus-climb fallback for the rare cloud whose candidate set misses
/// the required depth: scan a coarse bounding-box grid, then hill-climb
/// from the deepest point found with random steps and step halving.
fn hill_climb<R: Rng + ?Sized>(
    cloud: &PointCloud,
    start: Vec<f64>,
    start_depth: usize,
    needed: usize,
    rule: &SelectionRule,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dim = cloud.dim();
    let mut point = start;
    let mut depth = start_depth;
    if depth >= needed {
        return Ok(point);
    }

    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in cloud.points() {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let cells = match dim {
        1 => 33,
        2 => 17,
        _ => 9,
    };
    let mut idx = vec![0usize; dim];
    'grid: loop {
        let trial: Vec<f64> = (0..dim)
            .map(|k| lo[k] + (hi[k] - lo[k]) * (idx[k] as f64 + 0.5) / cells as f64)
            .collect();
        let d = depth_pruned(&trial, cloud, depth + 1);
        if d > depth {
            depth = d;
            point = trial;
            if depth >= needed {
                return Ok(point);
            }
        }
        for k in 0..dim {
            idx[k] += 1;
            if idx[k] < cells {
                continue 'grid;
            }
            idx[k] = 0;
        }
        break;
    }

    let scale = (0..dim)
        .map(|k| hi[k] - lo[k])
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let mut step = 0.25 * scale;
    for _ in 0..rule.search_budget {
        let dir: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let trial: Vec<f64> = point
            .iter()
            .zip(&dir)
            .map(|(p, d)| p + step * d / norm)
            .collect();
        let trial_depth = depth_pruned(&trial, cloud, depth + 1);
        if trial_depth > depth {
            point = trial;
            depth = trial_depth;
            step = 0.25 * scale;
            if depth >= needed {
                return Ok(point);
            }
        } else {
            step = (step * 0.5).max(1e-6 * scale);
        }
    }

    if let Some(p) = radon_witnesses(cloud, needed, rng) {
        return Ok(p);
    }
    if let Some(p) = projection_witness(cloud, needed, rng) {
        return Ok(p);
    }
    Err(SyncError::DepthSearchFailed {
        budget: rule.search_budget,
        needed,
        best: depth,
    })
}

/// Radon points of (dim+2)-subsets. When the maximum depth equals the
/// centerpoint bound the deep region can degenerate to a single point (the
/// Radon point for n = dim+2); recomputing it under every pivot choice
/// yields a spray of uls-scale variants, one of which realizes the exact
/// count.
fn radon_witnesses<R: Rng + ?Sized>(
    cloud: &PointCloud,
    needed: usize,
    rng: &mut R,
) -> Option<Vec<f64>> {
    let dim = cloud.dim();
    if dim < 2 {
        return None;
    }
    let n = cloud.len();
    let size = dim + 2;
    if n < size {
        return None;
    }
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    if n == size {
        subsets.push((0..n).collect());
    } else {
        for _ in 0..400 {
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..size {
                let j = i + rng.gen_range(0..(n - i));
                idx.swap(i, j);
            }
            let mut s = idx[..size].to_vec();
            s.sort_unstable();
            subsets.push(s);
        }
        subsets.sort_unstable();
        subsets.dedup();
    }
    for subset in &subsets {
        let pts: Vec<&Vec<f64>> = subset.iter().map(|&i| &cloud.points()[i]).collect();
        for pivot in 0..size {
            if let Some(r) = radon_point(&pts, dim, pivot) {
                if let Some(p) = jitter_to_depth(&r, cloud, needed, rng) {
                    return Some(p);
                }
            }
        }
    }
    None
}

/// Solves the affine dependency of dim+2 points with the pivot coefficient
/// fixed to one, and returns the common point of the two partition hulls.
fn radon_point(pts: &[&Vec<f64>], dim: usize, pivot: usize) -> Option<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    let size = dim + 2;
    let idx: Vec<usize> = (0..size).filter(|&i| i != pivot).collect();
    let mut m = DMatrix::zeros(dim + 1, dim + 1);
    let mut rhs = DVector::zeros(dim + 1);
    for (col, &i) in idx.iter().enumerate() {
        for k in 0..dim {
            m[(k, col)] = pts[i][k];
        }
        m[(dim, col)] = 1.0;
    }
    for k in 0..dim {
        rhs[k] = -pts[pivot][k];
    }
    rhs[dim] = -1.0;
    let x = m.lu().solve(&rhs)?;
    let mut coeffs = vec![0.0; size];
    for (col, &i) in idx.iter().enumerate() {
        coeffs[i] = x[col];
    }
    coeffs[pivot] = 1.0;
    let pos: f64 = coeffs.iter().filter(|v| **v > 0.0).sum();
    if pos <= 0.0 {
        return None;
    }
    let mut r = vec![0.0; dim];
    for (i, p) in pts.iter().enumerate() {
        if coeffs[i] > 0.0 {
            for k in 0..dim {
                r[k] += coeffs[i] / pos * p[k];
            }
        }
    }
    Some(r)
}

/// Cyclic projections onto the leave-(needed-1)-out hulls. The depth-k
/// region is exactly the intersection of conv(S) over subsets S of size
/// n-k+1, so the limit point is arbitrarily deep; a jitter scan around it
/// finds a representable point that realizes the count.
fn projection_witness<R: Rng + ?Sized>(
    cloud: &PointCloud,
    needed: usize,
    rng: &mut R,
) -> Option<Vec<f64>> {
    let dim = cloud.dim();
    let n = cloud.len();
    if needed < 2 || needed > n {
        return None;
    }
    let leave = needed - 1;
    let mut leave_sets: Vec<Vec<usize>> = Vec::new();
    enumerate_subsets(n, leave, &mut |s| {
        leave_sets.push(s.to_vec());
        leave_sets.len() < 2000
    });
    let hulls: Vec<Vec<Vec<f64>>> = leave_sets
        .iter()
        .map(|s| {
            (0..n)
                .filter(|i| !s.contains(i))
                .map(|i| cloud.points()[i].clone())
                .collect()
        })
        .collect();
    let mut x = vec![0.0; dim];
    for p in cloud.points() {
        for k in 0..dim {
            x[k] += p[k] / n as f64;
        }
    }
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for hull in &hulls {
            let shifted: Vec<Vec<f64>> = hull
                .iter()
                .map(|p| p.iter().zip(&x).map(|(a, b)| a - b).collect())
                .collect();
            let mn = crate::convex::min_norm_point(&shifted);
            moved += mn.iter().map(|v| v * v).sum::<f64>();
            for k in 0..dim {
                x[k] += mn[k];
            }
        }
        if moved < 1e-30 {
            break;
        }
    }
    jitter_to_depth(&x, cloud, needed, rng)
}

fn enumerate_subsets(n: usize, k: usize, visit: &mut impl FnMut(&[usize]) -> bool) {
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        current: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if current.len() == k {
            return visit(current);
        }
        for i in start..n {
            current.push(i);
            let go_on = rec(i + 1, n, k, current, visit);
            current.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    let mut current = Vec::with_capacity(k);
    rec(0, n, k, &mut current, visit);
}

/// Scans ulp-scale perturbations of `p` for a representable point whose
/// exact closed-halfspace count reaches `needed`.
fn jitter_to_depth<R: Rng + ?Sized>(
    p: &[f64],
    cloud: &PointCloud,
    needed: usize,
    rng: &mut R,
) -> Option<Vec<f64>> {
    if depth_pruned(p, cloud, needed) >= needed {
        return Some(p.to_vec());
    }
    for scale in [1e-16, 3e-16, 1e-15, 3e-15, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10] {
        for _ in 0..60 {
            let q: Vec<f64> = p.iter().map(|v| v + scale * (rng.gen::<f64>() - 0.5)).collect();
            if depth_pruned(&q, cloud, needed) >= needed {
                return Some(q);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn cloud_1d(values: &[f64]) -> PointCloud {
        PointCloud::from_values(values.to_vec()).unwrap()
    }

    /// Monte-Carlo upper bound: the depth cannot exceed the count in any
    /// sampled direction, and dense sampling finds the minimizing cell on
    /// small clouds.
    fn mc_depth<R: Rng>(x: &[f64], cloud: &PointCloud, dirs: usize, rng: &mut R) -> usize {
        let dim = cloud.dim();
        let mut best = cloud.len();
        for _ in 0..dirs {
            let u: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            if u.iter().all(|&v| v == 0.0) {
                continue;
            }
            let count = cloud
                .points()
                .iter()
                .filter(|p| {
                    p.iter()
                        .zip(x)
                        .zip(&u)
                        .map(|((pi, xi), ui)| ui * (pi - xi))
                        .sum::<f64>()
                        >= 0.0
                })
                .count();
            best = best.min(count);
        }
        best
    }

    #[test]
    fn depth_1d_examples() {
        let c = cloud_1d(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(tukey_depth_1d(3.0, &c), 3);
        assert_eq!(tukey_depth_1d(1.0, &c), 1);
        assert_eq!(tukey_depth_1d(0.0, &c), 0);
    }

    #[test]
    fn region_1d_order_statistics() {
        let c = cloud_1d(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let r = depth_region_1d(0.25, &c).unwrap();
        assert_eq!(r, DepthInterval { lo: 2.0, hi: 6.0 });

        let c = cloud_1d(&[0.0, 1.0, 2.0, 3.0]);
        let r = depth_region_1d(0.25, &c).unwrap();
        assert_eq!(r, DepthInterval { lo: 0.0, hi: 2.0 });

        // beta -> 0+ keeps everything
        let r = depth_region_1d(1e-300, &c).unwrap();
        assert_eq!(r, DepthInterval { lo: 0.0, hi: 3.0 });

        // infeasible indices
        let c = cloud_1d(&[1.0, 2.0, 3.0]);
        match depth_region_1d(0.5, &c) {
            Err(SyncError::EmptyRegion { lo: 2, hi: 1 }) => {}
            other => panic!("expected EmptyRegion, got {other:?}"),
        }
    }

    #[test]
    fn trimmed_mean_examples() {
        assert_eq!(trimmed_mean_1d(&cloud_1d(&[0.0, 1.0, 2.0, 3.0])), 1.0);
        assert_eq!(trimmed_mean_1d(&cloud_1d(&[4.2; 7])), 4.2);
        let m = 1e9;
        let c = cloud_1d(&[-m, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, m]);
        assert_eq!(trimmed_mean_1d(&c), 0.0);
    }

    #[test]
    fn tetrahedron_centroid_has_depth_one() {
        let verts = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ];
        let cloud = PointCloud::new(3, verts).unwrap();
        let centroid = [0.0, 0.0, 0.0];
        assert_eq!(tukey_depth(&centroid, &cloud).unwrap(), 1);
        let mut r = rng(21);
        assert_eq!(mc_depth(&centroid, &cloud, 10_000, &mut r), 1);
    }

    #[test]
    fn extreme_cloud_point_has_depth_one() {
        // x is a cloud point with every other point strictly on one side
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.2, 0.1],
            vec![2.0, -0.3, 0.4],
            vec![1.5, 0.0, -0.2],
        ];
        let cloud = PointCloud::new(3, pts).unwrap();
        assert_eq!(tukey_depth(&[0.0, 0.0, 0.0], &cloud).unwrap(), 1);
    }

    #[test]
    fn exact_depth_matches_monte_carlo_small_clouds() {
        let mut r = rng(22);
        for dim in [2usize, 3] {
            for n in [4usize, 7, 10, 12] {
                for _ in 0..20 {
                    let pts: Vec<Vec<f64>> = (0..n)
                        .map(|_| (0..dim).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect())
                        .collect();
                    let cloud = PointCloud::new(dim, pts).unwrap();
                    let x: Vec<f64> = (0..dim).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
                    let exact = tukey_depth(&x, &cloud).unwrap();
                    let mc = mc_depth(&x, &cloud, 20_000, &mut r);
                    assert_eq!(exact, mc, "dim {dim} n {n}: exact {exact} vs mc {mc}");
                }
            }
        }
    }

    #[test]
    fn depth_rejects_dim_above_three() {
        let cloud = PointCloud::new(4, vec![vec![0.0; 4]; 3]).unwrap();
        match tukey_depth(&[0.0; 4], &cloud) {
            Err(SyncError::UnsupportedDim { dim: 4 }) => {}
            other => panic!("expected UnsupportedDim, got {other:?}"),
        }
    }

    #[test]
    fn affine_equivariance() {
        let mut r = rng(23);
        for dim in [1usize, 3] {
            for _ in 0..40 {
                let n = 4 + (r.gen::<u32>() % 7) as usize;
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..dim).map(|_| r.gen::<f64>() * 4.0 - 2.0).collect())
                    .collect();
                let cloud = PointCloud::new(dim, pts.clone()).unwrap();
                let x: Vec<f64> = (0..dim).map(|_| r.gen::<f64>() * 4.0 - 2.0).collect();

                // well-conditioned random affine map
                let a: Vec<Vec<f64>> = loop {
                    let m: Vec<Vec<f64>> = (0..dim)
                        .map(|_| (0..dim).map(|_| r.gen::<f64>() * 3.0 - 1.5).collect())
                        .collect();
                    let det = match dim {
                        1 => m[0][0],
                        _ => {
                            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
                        }
                    };
                    if det.abs() > 0.3 {
                        break m;
                    }
                };
                let b: Vec<f64> = (0..dim).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect();
                let apply = |p: &[f64]| -> Vec<f64> {
                    (0..dim)
                        .map(|i| a[i].iter().zip(p).map(|(aij, pj)| aij * pj).sum::<f64>() + b[i])
                        .collect()
                };
                let mapped = PointCloud::new(
                    dim,
                    pts.iter().map(|p| apply(p)).collect::<Vec<_>>(),
                )
                .unwrap();
                assert_eq!(
                    tukey_depth(&x, &cloud).unwrap(),
                    tukey_depth(&apply(&x), &mapped).unwrap()
                );
            }
        }
    }

    #[test]
    fn centerpoint_bound_reached_by_candidate_search() {
        let mut r = rng(24);
        let rule = SelectionRule::new(RuleKind::DeepestCandidate, 500);
        for dim in [1usize, 3] {
            let beta = 1.0 / (dim as f64 + 1.0);
            for n in 4..=12usize {
                for _ in 0..25 {
                    let pts: Vec<Vec<f64>> = (0..n)
                        .map(|_| (0..dim).map(|_| r.gen::<f64>() * 2.0 - 1.0).collect())
                        .collect();
                    let cloud = PointCloud::new(dim, pts).unwrap();
                    let p = max_depth_point(&cloud, beta, &rule, &mut r).unwrap();
                    let needed = ceil_count(beta * n as f64);
                    let d = tukey_depth(&p, &cloud).unwrap();
                    assert!(d >= needed, "dim {dim} n {n}: depth {d} < {needed}");
                }
            }
        }
    }

    #[test]
    fn identical_points_select_themselves() {
        let cloud = PointCloud::new(3, vec![vec![0.5, -0.25, 1.0]; 6]).unwrap();
        let rule = SelectionRule::default_for_dim(3);
        let mut r = rng(25);
        let p = max_depth_point(&cloud, 0.125, &rule, &mut r).unwrap();
        assert_eq!(p, vec![0.5, -0.25, 1.0]);
        assert_eq!(tukey_depth(&p, &cloud).unwrap(), 6);
    }

    #[test]
    fn region_membership_implies_depth_threshold() {
        // every point of the 1D region has depth >= ceil(beta n); the lower
        // endpoint is tight (just below it the depth drops)
        let mut r = rng(26);
        for beta in [0.125, 0.25, 1.0 / 3.0] {
            for n in [5usize, 8, 11, 16] {
                let values: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * 10.0 - 5.0).collect();
                let cloud = PointCloud::from_values(values.clone()).unwrap();
                let region = match depth_region_1d(beta, &cloud) {
                    Ok(reg) => reg,
                    Err(SyncError::EmptyRegion { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                let needed = ceil_count(beta * n as f64);
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - 0.5;
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 0.5;
                for k in 0..=400 {
                    let x = lo + (hi - lo) * k as f64 / 400.0;
                    if region.contains(x) {
                        assert!(
                            tukey_depth_1d(x, &cloud) >= needed,
                            "x = {x} in region but depth {} < {needed}",
                            tukey_depth_1d(x, &cloud)
                        );
                    }
                }
                let eps = 1e-9;
                assert!(tukey_depth_1d(region.lo, &cloud) >= needed);
                assert!(tukey_depth_1d(region.lo - eps, &cloud) < needed);
            }
        }
    }

    #[test]
    fn halfspace_majority_forces_selection_inside() {
        // more than n - n/(2d+2) points strictly inside an open halfspace,
        // fewer than n/2 on its boundary: the selected point lands inside
        let mut r = rng(27);
        for dim in [1usize, 3] {
            let beta = 1.0 / (2.0 * dim as f64 + 2.0);
            let rule = SelectionRule::new(RuleKind::DeepestCandidate, 500);
            for _ in 0..30 {
                let n = 8 + (r.gen::<u32>() % 5) as usize;
                // strictly fewer than n/(2d+2) points sit on the boundary
                // hyperplane (first coordinate exactly zero)
                let n_boundary = ceil_count(n as f64 / (2.0 * dim as f64 + 2.0)) - 1;
                let mut pts: Vec<Vec<f64>> = Vec::new();
                for _ in 0..n_boundary {
                    let mut p: Vec<f64> = (0..dim).map(|_| r.gen::<f64>() - 0.5).collect();
                    p[0] = 0.0;
                    pts.push(p);
                }
                while pts.len() < n {
                    let mut p: Vec<f64> = (0..dim).map(|_| r.gen::<f64>() - 0.5).collect();
                    p[0] = 0.1 + r.gen::<f64>();
                    pts.push(p);
                }
                let cloud = PointCloud::new(dim, pts).unwrap();
                let sel = max_depth_point(&cloud, beta, &rule, &mut r).unwrap();
                assert!(sel[0] > 0.0, "selected {sel:?} not in open halfspace");
            }
        }
    }

    #[test]
    fn depth_never_exceeds_half_for_generic_points() {
        let mut r = rng(28);
        for dim in [1usize, 2, 3] {
            for _ in 0..30 {
                let n = 3 + (r.gen::<u32>() % 10) as usize;
                let pts: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..dim).map(|_| r.gen::<f64>()).collect())
                    .collect();
                let cloud = PointCloud::new(dim, pts).unwrap();
                let x: Vec<f64> = (0..dim).map(|_| r.gen::<f64>()).collect();
                let d = tukey_depth(&x, &cloud).unwrap();
                assert!(d <= n.div_ceil(2));
            }
        }
    }

    #[test]
    fn trimmed_mean_rule_on_symmetric_cloud() {
        // pinned under the global quantile convention x_(max(1, ceil(p n)))
        let cloud = cloud_1d(&[-1.0, 0.0, 0.0, 1.0]);
        let rule = SelectionRule::new(RuleKind::TrimmedMean, 500);
        let mut r = rng(29);
        let p = max_depth_point(&cloud, 0.25, &rule, &mut r).unwrap();
        // quantiles x_(1) = -1 and x_(3) = 0 retain {-1, 0, 0}
        assert!((p[0] - (-1.0 / 3.0)).abs() < 1e-12, "got {}", p[0]);
        assert!(tukey_depth_1d(p[0], &cloud) >= 1);
    }

    #[test]
    fn random_interior_rule_qualifies() {
        let mut r = rng(30);
        let rule = SelectionRule::new(RuleKind::RandomInterior, 500);
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..9)
                .map(|_| (0..3).map(|_| r.gen::<f64>()).collect())
                .collect();
            let cloud = PointCloud::new(3, pts).unwrap();
            let p = max_depth_point(&cloud, 0.125, &rule, &mut r).unwrap();
            assert!(tukey_depth(&p, &cloud).unwrap() >= ceil_count(0.125 * 9.0));
        }
    }
}
