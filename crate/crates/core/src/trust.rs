//! Trust assessments: oracle schedules for the side-information regime,
//! and the distributed checking machinery (parity checks over one-hop and
//! two-hop evidence plus the verdict state machine) for the on-line
//! regimes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, NodeSet};
use crate::rng::{mix, STREAM_TRUST};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Oracle schedules
// ---------------------------------------------------------------------------

/// How oracle-mode trust assessments evolve over rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Every node sees the true trustworthy set from round 0.
    CorrectFromStart,
    /// Independent fair coin flips per (round, observer, subject) until
    /// `settle_round`, exact truth afterwards.
    RandomUntil { settle_round: u64, seed: u64 },
    /// Explicit per-round, per-node table.
    Custom {
        table: BTreeMap<u64, BTreeMap<NodeId, NodeSet>>,
    },
}

/// An oracle trust schedule together with the ground-truth trustworthy set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustSchedule {
    pub mode: ScheduleMode,
    /// The true trustworthy set the assessments settle to.
    pub truth: NodeSet,
}

/// The trust set node `j` holds at round `k` under `schedule`. Always
/// contains `j` (a node trusts itself); deterministic in
/// `(mode, seed, k, j)`.
pub fn oracle_trust(
    schedule: &TrustSchedule,
    k: u64,
    j: NodeId,
    n_total: usize,
) -> Result<NodeSet> {
    let mut set = match &schedule.mode {
        ScheduleMode::CorrectFromStart => schedule.truth.clone(),
        ScheduleMode::RandomUntil { settle_round, seed } => {
            if k >= *settle_round {
                schedule.truth.clone()
            } else {
                (0..n_total)
                    .filter(|&i| mix(&[*seed, STREAM_TRUST, k, j as u64, i as u64]) & 1 == 1)
                    .collect()
            }
        }
        ScheduleMode::Custom { table } => table
            .get(&k)
            .and_then(|per_node| per_node.get(&j))
            .cloned()
            .ok_or(Error::CustomTableMissing { round: k, node: j })?,
    };
    set.insert(j);
    Ok(set)
}

// ---------------------------------------------------------------------------
// Check evidence and parity checks
// ---------------------------------------------------------------------------

/// Everything observer `observer` knows about neighbor `subject` when
/// verifying its round-K update.
///
/// `subject_sigma_*` carry the subject's running sums as heard on the
/// two-hop channel (the channel checks are computed from);
/// `onehop_sigma_*` carry the same sums as heard one-hop, used only to
/// test that the two channels agree. For honest subjects the channels
/// coincide. `nbr_sigma_*` cover the subject's neighborhood exactly, as
/// reported two-hop.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckEvidence {
    pub subject: NodeId,
    pub observer: NodeId,
    /// x_i[K], heard one-hop a round ago.
    pub subject_x_prev: f64,
    /// x_i[K+1], heard one-hop this round.
    pub subject_x_now: f64,
    /// sigma_i[K] on the two-hop channel.
    pub subject_sigma_prev: f64,
    /// sigma_i[K+1] on the two-hop channel.
    pub subject_sigma_now: f64,
    /// The subject's reported trust set for round K-1.
    pub subject_trust_prev: NodeSet,
    /// The subject's reported trust set for round K.
    pub subject_trust_now: NodeSet,
    /// The subject's initial value, announced at initialization.
    pub subject_x0: f64,
    /// Two-hop running sums sigma_l[K] for every neighbor l of the subject.
    pub nbr_sigma_prev: BTreeMap<NodeId, f64>,
    /// Two-hop running sums sigma_l[K+1] for every neighbor l of the subject.
    pub nbr_sigma_now: BTreeMap<NodeId, f64>,
    /// sigma_i[K] as heard one-hop.
    pub onehop_sigma_prev: f64,
    /// sigma_i[K+1] as heard one-hop.
    pub onehop_sigma_now: f64,
}

impl CheckEvidence {
    /// The subject's neighborhood, implied by the evidence maps.
    pub fn subject_nbrs(&self) -> NodeSet {
        self.nbr_sigma_now.keys().copied().collect()
    }

    /// Magnitude scale for tolerance checks: the largest running sum in
    /// play dominates every compared quantity.
    pub fn scale(&self) -> f64 {
        let mut scale = self
            .subject_sigma_prev
            .abs()
            .max(self.subject_sigma_now.abs())
            .max(self.onehop_sigma_prev.abs())
            .max(self.onehop_sigma_now.abs());
        for (&_, &v) in self.nbr_sigma_prev.iter().chain(self.nbr_sigma_now.iter()) {
            scale = scale.max(v.abs());
        }
        scale
    }
}

/// Replays the subject's round-K value update from reported evidence: the
/// same formula an honest node runs, with the per-neighbor table rebuilt
/// from the two-hop running sums exactly as the subject would build it.
pub fn predict_value(ev: &CheckEvidence, n_total: usize) -> Result<f64> {
    let n = n_total as f64;
    let nbrs = ev.subject_nbrs();
    let active_now = nbrs.intersection(&ev.subject_trust_now);
    let active_prev = nbrs.intersection(&ev.subject_trust_prev);
    let dropped = nbrs.intersection(&ev.subject_trust_prev.difference(&ev.subject_trust_now));
    let added = nbrs.intersection(&ev.subject_trust_now.difference(&ev.subject_trust_prev));

    // Same accumulation order as the node's own step, so an honest
    // subject's prediction matches bit for bit given identical inputs.
    let mut acc = (1.0 - active_now.len() as f64 / n) * ev.subject_x_prev;
    for l in nbrs.iter() {
        let now = ev.nbr_sigma_now.get(&l).ok_or(Error::MissingTwoHopSigma {
            subject: ev.subject,
            nbr: l,
        })?;
        let prev = ev.nbr_sigma_prev.get(&l).ok_or(Error::MissingTwoHopSigma {
            subject: ev.subject,
            nbr: l,
        })?;
        let mu_now = if active_now.contains(l) { *now } else { 0.0 };
        let mu_prev = if active_prev.contains(l) { *prev } else { 0.0 };
        acc += (mu_now - mu_prev) / n;
    }
    let e = (dropped.len() as f64 - added.len() as f64) * ev.subject_sigma_prev / n;
    Ok(acc + e)
}

/// Per-round parity checks: `p` compares the reported value update against
/// the replayed one, `q` the reported running-sum update against its
/// definition. Residuals are returned raw; tolerances apply in
/// [`classify`].
pub fn concurrent_check(ev: &CheckEvidence, n_total: usize) -> Result<(f64, f64)> {
    let p = ev.subject_x_now - predict_value(ev, n_total)?;
    let q = ev.subject_sigma_now - (ev.subject_sigma_prev + ev.subject_x_prev);
    Ok((p, q))
}

/// Infrequent-mode checks: `p`, `q` as in [`concurrent_check`], plus `r`
/// (the conservation-invariant residual, which catches manipulation at
/// unchecked rounds) and `s` (agreement between the subject's one-hop and
/// two-hop running-sum reports).
pub fn infrequent_check(ev: &CheckEvidence, n_total: usize) -> Result<(f64, f64, f64, f64)> {
    let (p, q) = concurrent_check(ev, n_total)?;
    let n = n_total as f64;
    let active_now = ev.subject_nbrs().intersection(&ev.subject_trust_now);
    let mut sum = 0.0;
    for l in active_now.iter() {
        sum += ev.nbr_sigma_now.get(&l).ok_or(Error::MissingTwoHopSigma {
            subject: ev.subject,
            nbr: l,
        })?;
    }
    let r = ev.subject_x_now - ev.subject_x0 + active_now.len() as f64 / n * ev.subject_sigma_now
        - sum / n;
    let s = sigma_channel_mismatch(
        ev.onehop_sigma_prev,
        ev.onehop_sigma_now,
        ev.subject_sigma_prev,
        ev.subject_sigma_now,
    );
    Ok((p, q, r, s))
}

/// `|twohop[K] - onehop[K]| + |twohop[K+1] - onehop[K+1]|`: nonzero iff
/// the subject told its one-hop and two-hop audiences different stories.
pub fn sigma_channel_mismatch(
    onehop_prev: f64,
    onehop_now: f64,
    twohop_prev: f64,
    twohop_now: f64,
) -> f64 {
    (twohop_prev - onehop_prev).abs() + (twohop_now - onehop_now).abs()
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Trusted,
    PossiblyUntrustworthy,
    Malicious,
}

impl VerdictStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictStatus::Trusted => "trusted",
            VerdictStatus::PossiblyUntrustworthy => "possibly_untrustworthy",
            VerdictStatus::Malicious => "malicious",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictReason {
    PFail,
    QFail,
    RFail,
    SFail,
    NoShrinkAfterSuspect,
    UnfairlyDeclaredMe,
    TrustSetGrew,
}

impl VerdictReason {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictReason::PFail => "p_fail",
            VerdictReason::QFail => "q_fail",
            VerdictReason::RFail => "r_fail",
            VerdictReason::SFail => "s_fail",
            VerdictReason::NoShrinkAfterSuspect => "no_shrink_after_suspect",
            VerdictReason::UnfairlyDeclaredMe => "unfairly_declared_me",
            VerdictReason::TrustSetGrew => "trust_set_grew",
        }
    }
}

/// An observer's current judgement of one subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub reason: Option<VerdictReason>,
}

impl Verdict {
    pub fn trusted() -> Verdict {
        Verdict {
            status: VerdictStatus::Trusted,
            reason: None,
        }
    }
}

/// Per-(observer, subject) classifier state carried between rounds.
/// `Malicious` is absorbing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictState {
    pub verdict: Verdict,
    /// Round at which the subject was last marked possibly untrustworthy.
    pub pending_since: Option<u64>,
    /// How many suspicions the subject has resolved by strictly shrinking
    /// its reported trust set. Bounded by its degree: each legitimate
    /// shrink blames a distinct bad neighbor.
    pub escapes: usize,
}

impl Default for VerdictState {
    fn default() -> Self {
        VerdictState {
            verdict: Verdict::trusted(),
            pending_since: None,
            escapes: 0,
        }
    }
}

/// Which checking regime the classifier runs under. Concurrent evidence is
/// exactly the inputs the subject used, so value-update mismatches convict
/// directly; infrequent evidence may be polluted by a lying neighbor of
/// the subject, so they only raise suspicion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckingMode {
    Concurrent,
    Infrequent,
}

/// Parity-check residuals available to the classifier this round, if any.
/// Partial evidence (a subject that answered a two-hop request whose full
/// neighborhood did not) carries only `s`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckValues {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    /// Magnitude scale for tolerance comparison.
    pub scale: f64,
}

/// Advance the verdict state machine one round. Decision rules, in order:
///
/// 1. A failed `q` or `s` check convicts: both are computed purely from
///    the subject's own reports, so a mismatch is self-inconsistency.
/// 2. A subject that drops the observer itself from its reported trust set
///    is convicted: the observer knows itself honest.
/// 3. Under infrequent checking a reported trust set must never grow.
/// 4. A pending suspicion from the previous round must be answered by a
///    strictly shrinking trust set (the subject blaming some neighbor);
///    anything else convicts, as does exhausting the degree-bounded
///    budget of such escapes.
/// 5. A failed `p` or `r` check convicts under concurrent checking, and
///    marks the subject possibly untrustworthy under infrequent checking.
///    Exception: under infrequent checking a `p` failure at a round where
///    the subject's reported trust set strictly shrank is attributed to
///    whatever neighbor it just dropped (that neighbor's two-hop reports
///    straddle the drop window and need not match the values the subject
///    actually used), so it raises no fresh suspicion. The invariant
///    check `r` is immune to that window and always counts, which keeps
///    real forgers catchable; repeated shrink excuses are bounded by the
///    monotone-trust rule.
/// 6. Otherwise the subject stays (or becomes again) trusted.
pub fn classify(
    prior: &VerdictState,
    trust_prev: &NodeSet,
    trust_now: &NodeSet,
    checks: Option<&CheckValues>,
    mode: CheckingMode,
    observer: NodeId,
    subject_degree: usize,
    round: u64,
    eps: f64,
) -> VerdictState {
    if prior.verdict.status == VerdictStatus::Malicious {
        return prior.clone();
    }
    let convict = |reason| VerdictState {
        verdict: Verdict {
            status: VerdictStatus::Malicious,
            reason: Some(reason),
        },
        pending_since: None,
        escapes: prior.escapes,
    };
    let tol = |scale: f64| eps * scale.abs().max(1.0);
    let fails = |v: Option<f64>, scale: f64| v.is_some_and(|v| v.abs() > tol(scale));

    if let Some(c) = checks {
        if fails(c.q, c.scale) {
            return convict(VerdictReason::QFail);
        }
        if fails(c.s, c.scale) {
            return convict(VerdictReason::SFail);
        }
    }
    if trust_prev.contains(observer) && !trust_now.contains(observer) {
        return convict(VerdictReason::UnfairlyDeclaredMe);
    }
    if mode == CheckingMode::Infrequent && !trust_now.is_subset(trust_prev) {
        return convict(VerdictReason::TrustSetGrew);
    }

    let mut next = prior.clone();
    if prior.verdict.status == VerdictStatus::PossiblyUntrustworthy
        && prior.pending_since == Some(round.wrapping_sub(1))
    {
        if trust_now.is_strict_subset(trust_prev) {
            next.escapes += 1;
            if next.escapes > subject_degree {
                return convict(VerdictReason::NoShrinkAfterSuspect);
            }
            next.verdict = Verdict::trusted();
            next.pending_since = None;
        } else {
            return convict(VerdictReason::NoShrinkAfterSuspect);
        }
    }

    if let Some(c) = checks {
        let shrink_excuse = mode == CheckingMode::Infrequent
            && trust_now.is_strict_subset(trust_prev);
        let bad_p = fails(c.p, c.scale) && !shrink_excuse;
        let bad_r = fails(c.r, c.scale);
        if bad_p || bad_r {
            let reason = if bad_p {
                VerdictReason::PFail
            } else {
                VerdictReason::RFail
            };
            match mode {
                CheckingMode::Concurrent => return convict(reason),
                CheckingMode::Infrequent => {
                    next.verdict = Verdict {
                        status: VerdictStatus::PossiblyUntrustworthy,
                        reason: Some(reason),
                    };
                    next.pending_since = Some(round);
                }
            }
        }
    }
    next
}
