//! Deterministic file formats.
//!
//! Scenario/graph JSON:
//!
//! ```json
//! {
//!   "n": 4, "D": 2,
//!   "edges": [{"j": 0, "k": 1, "R": [<D*D floats, row-major>], "label": "good"}],
//!   "ground_truth": [[...], ...],
//!   "scenario": {"model": "random", "alpha": 0.2, "seed": 7, "rho": 1.0,
//!                "init": [[...], ...]}
//! }
//! ```
//!
//! `ground_truth` and the `scenario` section are optional; a bare graph
//! file loads with identity initial estimates. Floats are always written
//! with 17 significant digits (`{:.16e}`), which round-trips f64 exactly
//! and makes writers byte-stable: identical inputs produce identical
//! bytes. Edges are written sorted by (j, k).
//!
//! Trace CSV columns: `epoch,t,node,step_norm,delta,ball_radius,l1_energy,
//! wall_ms`; one row per iteration, with the per-epoch diagnostics joined
//! onto each epoch's final row.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SyncError};
use crate::graph::{Edge, EdgeLabel, MeasurementGraph};
use crate::manifold::Rotation;
use crate::scenario::{Scenario, ScenarioMeta};
use crate::trace::{RunStatus, RunTrace};

/// 17 significant digits; round-trips every finite f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON serializer formatter that pins float formatting to 17 significant
/// digits.
struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{}", format_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        write!(writer, "{}", format_f64(value as f64))
    }
}

/// Serializes any value to a JSON string with pinned float formatting.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serializer writes utf-8"))
}

// ---------------------------------------------------------------------------
// Scenario JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct EdgeDto {
    j: usize,
    k: usize,
    #[serde(rename = "R")]
    r: Vec<f64>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct ScenarioSectionDto {
    model: String,
    alpha: f64,
    seed: u64,
    rho: f64,
    init: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFileDto {
    n: usize,
    #[serde(rename = "D")]
    dim: usize,
    edges: Vec<EdgeDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_truth: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<ScenarioSectionDto>,
}

fn label_str(label: EdgeLabel) -> &'static str {
    match label {
        EdgeLabel::Good => "good",
        EdgeLabel::Bad => "bad",
        EdgeLabel::Unknown => "unknown",
    }
}

fn parse_label(s: &str) -> Result<EdgeLabel> {
    match s {
        "good" => Ok(EdgeLabel::Good),
        "bad" => Ok(EdgeLabel::Bad),
        "unknown" => Ok(EdgeLabel::Unknown),
        other => Err(SyncError::InvalidInput(format!("unknown edge label '{other}'"))),
    }
}

/// Serializes a scenario (graph, labels, ground truth, and init) to the
/// byte-stable JSON format.
pub fn scenario_to_json(scenario: &Scenario) -> Result<String> {
    let mut edges: Vec<&Edge> = scenario.graph.edges().iter().collect();
    edges.sort_by_key(|e| (e.j, e.k));
    let dto = ScenarioFileDto {
        n: scenario.graph.n(),
        dim: scenario.graph.dim(),
        edges: edges
            .into_iter()
            .map(|e| EdgeDto {
                j: e.j,
                k: e.k,
                r: e.measurement.row_major(),
                label: label_str(e.label).to_string(),
            })
            .collect(),
        ground_truth: scenario
            .ground_truth
            .as_ref()
            .map(|ts| ts.iter().map(|t| t.row_major()).collect()),
        scenario: Some(ScenarioSectionDto {
            model: scenario.meta.model.clone(),
            alpha: scenario.meta.alpha,
            seed: scenario.meta.seed,
            rho: scenario.meta.rho,
            init: scenario.init.iter().map(|z| z.row_major()).collect(),
        }),
    };
    to_json_string(&dto)
}

/// Parses and validates the scenario JSON format: rotation invariants,
/// edge ordering, and graph connectivity are all enforced.
pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let dto: ScenarioFileDto = serde_json::from_str(text)?;
    let mut edges = Vec::with_capacity(dto.edges.len());
    for e in &dto.edges {
        edges.push(Edge {
            j: e.j,
            k: e.k,
            measurement: Rotation::from_row_major(dto.dim, &e.r)?,
            label: parse_label(&e.label)?,
        });
    }
    let graph = MeasurementGraph::new(dto.n, dto.dim, edges)?;
    let ground_truth = match &dto.ground_truth {
        Some(rows) => {
            if rows.len() != dto.n {
                return Err(SyncError::InvalidInput(format!(
                    "ground_truth has {} entries, expected {}",
                    rows.len(),
                    dto.n
                )));
            }
            Some(
                rows.iter()
                    .map(|row| Rotation::from_row_major(dto.dim, row))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        None => None,
    };
    let (init, meta) = match &dto.scenario {
        Some(sec) => {
            if sec.init.len() != dto.n {
                return Err(SyncError::InvalidInput(format!(
                    "init has {} entries, expected {}",
                    sec.init.len(),
                    dto.n
                )));
            }
            let init = sec
                .init
                .iter()
                .map(|row| Rotation::from_row_major(dto.dim, row))
                .collect::<Result<Vec<_>>>()?;
            let meta = ScenarioMeta {
                model: sec.model.clone(),
                alpha: sec.alpha,
                seed: sec.seed,
                rho: sec.rho,
            };
            (init, meta)
        }
        None => (
            vec![Rotation::identity(dto.dim); dto.n],
            ScenarioMeta {
                model: "unknown".into(),
                alpha: 0.0,
                seed: 0,
                rho: 0.0,
            },
        ),
    };
    let assumption_1_ok = match &ground_truth {
        Some(truth) => {
            let products: Vec<Rotation> = truth
                .iter()
                .zip(&init)
                .map(|(t, z)| t.transpose().compose(z))
                .collect();
            if dto.dim == 2 {
                let zs: Vec<crate::manifold::UnitComplex> = products
                    .iter()
                    .map(crate::manifold::UnitComplex::from_rotation)
                    .collect();
                crate::manifold::enclosing_arc(&zs).1 < std::f64::consts::FRAC_PI_2
            } else {
                crate::manifold::smallest_enclosing_ball(&products).is_ok()
            }
        }
        None => true,
    };
    Ok(Scenario {
        graph,
        ground_truth,
        init,
        meta,
        assumption_1_ok,
    })
}

// ---------------------------------------------------------------------------
// Trace CSV and summary JSON
// ---------------------------------------------------------------------------

pub const TRACE_CSV_HEADER: &str = "epoch,t,node,step_norm,delta,ball_radius,l1_energy,wall_ms";

/// One row per iteration; per-epoch diagnostics appear on each epoch's
/// final row, other cells stay empty.
pub fn trace_to_csv(trace: &RunTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.iters.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for rec in &trace.iters {
        let epoch_end = trace
            .epochs
            .get(rec.epoch)
            .filter(|_| {
                trace
                    .iters
                    .iter()
                    .filter(|r| r.epoch == rec.epoch)
                    .next_back()
                    .map(|r| r.t == rec.t)
                    .unwrap_or(false)
            });
        let fmt_opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            rec.epoch,
            rec.t,
            rec.node,
            format_f64(rec.step_norm),
            fmt_opt(epoch_end.and_then(|e| e.delta)),
            fmt_opt(epoch_end.and_then(|e| e.ball_radius)),
            fmt_opt(rec.l1_energy),
            fmt_opt(epoch_end.map(|e| e.wall_ms)),
        ));
    }
    out
}

#[derive(Serialize)]
struct SummaryDto<'a> {
    status: &'a str,
    final_delta: Option<f64>,
    epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    coordinatewise_fixed: Option<bool>,
}

/// Run summary JSON: status, final delta, epoch count, and (for the L1
/// baseline) whether the final state is coordinate-wise fixed.
pub fn summary_to_json(trace: &RunTrace, coordinatewise_fixed: Option<bool>) -> Result<String> {
    let dto = SummaryDto {
        status: trace.status.as_str(),
        final_delta: trace.final_delta(),
        epochs: trace.epochs_run(),
        coordinatewise_fixed,
    };
    to_json_string(&dto)
}

/// Exit code convention for runs: 0 converged, 2 out of epochs, 1 error.
pub fn status_exit_code(status: &RunStatus) -> i32 {
    match status {
        RunStatus::Converged => 0,
        RunStatus::MaxEpochs => 2,
        RunStatus::Error(_) => 1,
    }
}
