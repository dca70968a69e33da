//! Synthetic ground truth and adversarial corruption generators.
//!
//! Ground-truth rotations are drawn so that their transposes lie in a ball
//! of radius rho around a random center; the identity initialization then
//! places all normalization products inside that ball, which is the local
//! initialization the solvers assume. Corruption replaces a per-node-capped
//! subset of edges either with independent Haar measurements
//! ([`corrupt_random`]) or with measurements consistent with a second,
//! hidden signal ([`corrupt_consistent`]), the strongest named adversary.
//! [`spurious_fixture`] builds the matching-corrupted complete graph whose
//! two-cluster state is a fixed point of coordinate-wise L1 descent.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Result, SyncError};
use crate::graph::{EdgeLabel, MeasurementGraph};
use crate::manifold::{
    enclosing_arc, exp_map, random_rotation, smallest_enclosing_ball, Rotation, TangentVector,
    UnitComplex, SQRT2,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionModel {
    Random,
    Consistent,
    Spurious,
}

impl CorruptionModel {
    pub fn name(&self) -> &'static str {
        match self {
            CorruptionModel::Random => "random",
            CorruptionModel::Consistent => "consistent",
            CorruptionModel::Spurious => "spurious",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(CorruptionModel::Random),
            "consistent" => Ok(CorruptionModel::Consistent),
            "spurious" => Ok(CorruptionModel::Spurious),
            other => Err(SyncError::InvalidConfig(format!(
                "unknown corruption model '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioMeta {
    pub model: String,
    pub alpha: f64,
    pub seed: u64,
    pub rho: f64,
}

/// A labeled synthetic instance: graph with measurements, ground truth,
/// and the initial estimates handed to the solvers.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: MeasurementGraph,
    /// Absent when a scenario is loaded from a file that omits it.
    pub ground_truth: Option<Vec<Rotation>>,
    pub init: Vec<Rotation>,
    pub meta: ScenarioMeta,
    /// Normalization products of `init` fit in a ball of radius < pi/2
    /// (angular for D = 2, Frobenius otherwise).
    pub assumption_1_ok: bool,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }
}

/// Draws ground truth with all transposes in a ball of radius `spread_rho`
/// around a Haar-random center. The radius is angular for D = 2 and
/// Frobenius for D >= 3.
pub fn generate_ground_truth<R: Rng + ?Sized>(
    n: usize,
    dim: usize,
    spread_rho: f64,
    rng: &mut R,
) -> Result<Vec<Rotation>> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&spread_rho) {
        return Err(SyncError::InvalidConfig(format!(
            "spread rho must be in [0, pi/2), got {spread_rho}"
        )));
    }
    let coord_radius = if dim == 2 { SQRT2 * spread_rho } else { spread_rho };
    let center = random_rotation(dim, rng);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let v = TangentVector::random_in_ball(center.clone(), coord_radius, rng);
        let transpose_of_truth = exp_map(&center, &v)?;
        out.push(transpose_of_truth.transpose());
    }
    Ok(out)
}

/// Builds the uncorrupted scenario: every edge carries the exact relative
/// measurement and the Good label; estimates start at the identity.
pub fn uncorrupted(
    mut graph: MeasurementGraph,
    ground_truth: Vec<Rotation>,
    meta: ScenarioMeta,
) -> Result<Scenario> {
    if ground_truth.len() != graph.n() {
        return Err(SyncError::InvalidInput(format!(
            "ground truth length {} does not match n = {}",
            ground_truth.len(),
            graph.n()
        )));
    }
    for idx in 0..graph.edges().len() {
        let (j, k) = (graph.edges()[idx].j, graph.edges()[idx].k);
        let measurement = ground_truth[j].compose(&ground_truth[k].transpose());
        graph.set_edge(idx, measurement, EdgeLabel::Good);
    }
    let init = vec![Rotation::identity(graph.dim()); graph.n()];
    let assumption_1_ok = initial_neighborhood_ok(&graph, &ground_truth, &init);
    Ok(Scenario {
        graph,
        ground_truth: Some(ground_truth),
        init,
        meta,
        assumption_1_ok,
    })
}

fn initial_neighborhood_ok(
    graph: &MeasurementGraph,
    ground_truth: &[Rotation],
    init: &[Rotation],
) -> bool {
    let products: Vec<Rotation> = ground_truth
        .iter()
        .zip(init)
        .map(|(t, z)| t.transpose().compose(z))
        .collect();
    if graph.dim() == 2 {
        let zs: Vec<UnitComplex> = products.iter().map(UnitComplex::from_rotation).collect();
        let (_, radius) = enclosing_arc(&zs);
        radius < std::f64::consts::FRAC_PI_2
    } else {
        smallest_enclosing_ball(&products).is_ok()
    }
}

/// Marks a per-node-capped set of edges bad via a greedy shuffled pass:
/// an edge is taken while both endpoints stay within floor(alpha * n_j)
/// bad edges. Returns the chosen edge indices.
fn select_bad_edges<R: Rng + ?Sized>(
    graph: &MeasurementGraph,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = graph.n();
    let budgets: Vec<usize> = (0..n)
        .map(|j| (alpha * graph.degree(j) as f64 + 1e-12).floor() as usize)
        .collect();
    let mut counts = vec![0usize; n];
    let mut order: Vec<usize> = (0..graph.edges().len()).collect();
    order.shuffle(rng);
    let mut chosen = Vec::new();
    for idx in order {
        let e = &graph.edges()[idx];
        if counts[e.j] < budgets[e.j] && counts[e.k] < budgets[e.k] {
            counts[e.j] += 1;
            counts[e.k] += 1;
            chosen.push(idx);
        }
    }
    // the greedy pass must saturate someone, otherwise the caps were
    // unattainable on this topology
    if !(0..n).any(|j| counts[j] == budgets[j]) {
        return Err(SyncError::InfeasibleBudget(format!(
            "no node attained its cap floor(alpha * n_j) with alpha = {alpha}"
        )));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Replaces a per-node-capped set of measurements with independent
/// Haar-random rotations.
///
/// `alpha` beyond 1/2 is permitted for demonstration runs; the theory and
/// the command-line interface cap it below 1/2.
pub fn corrupt_random<R: Rng + ?Sized>(
    scenario: &Scenario,
    alpha: f64,
    rng: &mut R,
) -> Result<Scenario> {
    validate_alpha(alpha)?;
    let mut out = scenario.clone();
    out.meta.alpha = alpha;
    out.meta.model = CorruptionModel::Random.name().into();
    let chosen = select_bad_edges(&out.graph, alpha, rng)?;
    for idx in chosen {
        let m = random_rotation(out.graph.dim(), rng);
        out.graph.set_edge(idx, m, EdgeLabel::Bad);
    }
    Ok(out)
}

/// Replaces a per-node-capped set of measurements with values consistent
/// with a hidden Haar-random alternative signal.
pub fn corrupt_consistent<R: Rng + ?Sized>(
    scenario: &Scenario,
    alpha: f64,
    rng: &mut R,
) -> Result<(Scenario, Vec<Rotation>)> {
    validate_alpha(alpha)?;
    let mut out = scenario.clone();
    out.meta.alpha = alpha;
    out.meta.model = CorruptionModel::Consistent.name().into();
    let dim = out.graph.dim();
    let alternative: Vec<Rotation> = (0..out.graph.n())
        .map(|_| random_rotation(dim, rng))
        .collect();
    let chosen = select_bad_edges(&out.graph, alpha, rng)?;
    for idx in chosen {
        let (j, k) = (out.graph.edges()[idx].j, out.graph.edges()[idx].k);
        let m = alternative[j].compose(&alternative[k].transpose());
        out.graph.set_edge(idx, m, EdgeLabel::Bad);
    }
    Ok((out, alternative))
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(SyncError::InvalidConfig(format!(
            "corruption fraction must be in [0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// The two-cluster fixed-point fixture on SO(2): a complete graph with one
/// bad edge per node (a perfect matching between the clusters), bad
/// measurements tilted by a small epsilon past the cluster offset, and the
/// clustered state itself as the initial estimate.
pub fn spurious_fixture(n: usize, theta: f64) -> Result<Scenario> {
    if n < 4 || n % 2 != 0 {
        return Err(SyncError::InvalidConfig(format!(
            "the fixture requires an even n >= 4, got {n}"
        )));
    }
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(SyncError::InvalidConfig(format!(
            "theta must be in (0, pi/2), got {theta}"
        )));
    }
    const EPSILON: f64 = 1e-3;
    let half = n / 2;
    let ground_truth = vec![Rotation::identity(2); n];
    let mut graph = MeasurementGraph::complete(n, 2)?;
    for idx in 0..graph.edges().len() {
        let (j, k) = (graph.edges()[idx].j, graph.edges()[idx].k);
        if j < half && k == j + half {
            graph.set_edge(idx, Rotation::from_angle(theta + EPSILON), EdgeLabel::Bad);
        } else {
            graph.set_edge(idx, Rotation::identity(2), EdgeLabel::Good);
        }
    }
    let mut init = Vec::with_capacity(n);
    for j in 0..n {
        if j < half {
            init.push(Rotation::from_angle(theta));
        } else {
            init.push(Rotation::identity(2));
        }
    }
    let assumption_1_ok = initial_neighborhood_ok(&graph, &ground_truth, &init);
    Ok(Scenario {
        graph,
        ground_truth: Some(ground_truth),
        init,
        meta: ScenarioMeta {
            model: CorruptionModel::Spurious.name().into(),
            alpha: 1.0 / (n as f64 - 1.0),
            seed: 0,
            rho: theta,
        },
        assumption_1_ok,
    })
}

// ---------------------------------------------------------------------------
// One-call synthetic builder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    Complete,
    ErdosRenyi { p: f64 },
}

/// Parameters of a synthetic instance; `build` is deterministic in them.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub n: usize,
    pub dim: usize,
    pub graph: GraphKind,
    pub model: CorruptionModel,
    pub alpha: f64,
    pub rho: f64,
    /// Cluster offset of the spurious fixture; unused by other models.
    pub theta: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<Scenario> {
        if self.model == CorruptionModel::Spurious {
            if self.dim != 2 {
                return Err(SyncError::InvalidConfig(
                    "the spurious fixture is defined on SO(2) only".into(),
                ));
            }
            let mut s = spurious_fixture(self.n, self.theta)?;
            s.meta.seed = self.seed;
            return Ok(s);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let graph = match self.graph {
            GraphKind::Complete => MeasurementGraph::complete(self.n, self.dim)?,
            GraphKind::ErdosRenyi { p } => {
                MeasurementGraph::erdos_renyi(self.n, self.dim, p, &mut rng)?
            }
        };
        let truth = generate_ground_truth(self.n, self.dim, self.rho, &mut rng)?;
        let meta = ScenarioMeta {
            model: self.model.name().into(),
            alpha: self.alpha,
            seed: self.seed,
            rho: self.rho,
        };
        let base = uncorrupted(graph, truth, meta)?;
        match self.model {
            CorruptionModel::Random => corrupt_random(&base, self.alpha, &mut rng),
            CorruptionModel::Consistent => {
                corrupt_consistent(&base, self.alpha, &mut rng).map(|(s, _)| s)
            }
            CorruptionModel::Spurious => unreachable!(),
        }
    }
}
