//! Robust rotation synchronization on SO(D).
//!
//! Recovers n ground-truth rotations from corrupted pairwise relative
//! measurements on a graph. Three solvers are provided:
//!
//! * depth descent ([`dds`]): cyclic coordinate updates along directions
//!   selected from the Tukey-depth level set of the tangent-space
//!   measurement cloud; robust up to a per-node corruption fraction of
//!   `1/(D(D-1)+2)` on well-connected graphs;
//! * damped trimmed averaging ([`tas`]): the SO(2) specialization with a
//!   trimmed-mean selection rule and a per-epoch linear contraction on
//!   complete graphs;
//! * least-absolute-deviations coordinate descent ([`l1mra`]): the GD-L1
//!   baseline, which exhibits spurious fixed points that the depth-based
//!   solvers escape.
//!
//! Supporting modules: [`manifold`] (SO(D) geometry), [`depth`] (halfspace
//! depth in tangent coordinates), [`graph`] (measurement graphs and the
//! well-connectedness check), [`scenario`] (synthetic ground truth and
//! adversaries), [`trace`] (run diagnostics), and [`io`] (deterministic
//! JSON/CSV formats).

pub mod convex;
pub mod depth;
pub mod error;
pub mod graph;
pub mod io;
pub mod l1mra;
pub mod manifold;
pub mod scenario;
pub mod tas;
pub mod trace;

pub mod dds;

pub use error::{Result, SyncError};
