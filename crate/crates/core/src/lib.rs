//! Trustworthy distributed average consensus over a fixed bidirectional
//! topology, simulated in deterministic synchronous rounds.
//!
//! Honest nodes run a running-sum linear averaging iteration that can
//! virtually remove (or re-admit) neighbors as their trust assessments
//! change, compensating so that the network still converges to the exact
//! average of the trustworthy nodes' initial values. Trust assessments
//! either come from a configured oracle schedule or are derived on-line
//! from one-hop and two-hop message evidence via parity checks.
//!
//! The crate is organized around the protocol's moving parts:
//!
//! - [`graph`]: the fixed communication topology and structural queries
//!   (neighborhoods, two-hop sets, induced subgraphs, assumption checks).
//! - [`consensus`]: one honest node's per-round state machine and the
//!   runtime-checkable conservation invariant.
//! - [`trust`]: oracle schedules, parity checks, and the verdict state
//!   machine that turns check residuals into trust assessments.
//! - [`adversary`]: configurable malicious behaviors that forge outgoing
//!   messages or doctor reported trust sets.
//! - [`engine`]: the synchronous round loop tying everything together,
//!   producing a per-round [`engine::Trace`].

pub mod adversary;
pub mod consensus;
pub mod engine;
mod error;
pub mod graph;
pub mod rng;
pub mod trust;

pub use adversary::Behavior;
pub use consensus::{Broadcast, NodeState, TrustDelta};
pub use engine::{
    convergence_metrics, run_scenario, trustworthy_average, ConvergenceMetrics, NodeRow, Scenario,
    Simulation, Summary, Trace, TrustMode, VerdictEvent,
};
pub use error::Error;
pub use graph::{AssumptionReport, AssumptionViolation, Graph, NodeId, NodeSet, ValidationMode};
pub use trust::{
    classify, concurrent_check, infrequent_check, oracle_trust, predict_value, CheckEvidence,
    CheckingMode, ScheduleMode, TrustSchedule, Verdict, VerdictReason, VerdictState, VerdictStatus,
};

/// Base absolute tolerance for every "exactly zero in real arithmetic"
/// claim: residuals are compared against `BASE_EPS * max(1, scale)` where
/// `scale` tracks the magnitude of the running sums involved. Honest
/// floating-point noise stays far below this; adversarial offsets in the
/// bundled scenarios are at least 1e-3.
pub const BASE_EPS: f64 = 1e-9;

/// Scaled tolerance used by invariant and parity-check comparisons.
pub fn scaled_tol(scale: f64) -> f64 {
    BASE_EPS * scale.abs().max(1.0)
}

pub type Result<T> = std::result::Result<T, Error>;
