//! Convex hull search: exact fractional maximization of any bi-criteria loss
//! over the convex hull of label points, using only plain λ-oracle calls,
//! plus integral recovery through ban-list queries.

use crate::geometry::{
    contour_tangent_slope, edge_slope, golden_max_on_segment, GeometryError, HullState,
    LabelPoint, Segment,
};
use crate::loss::BiCriteriaLoss;
use crate::oracle::{LabelId, Lambda, LambdaSpace, OracleError};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HullError {
    #[error("hull state is empty")]
    EmptyState,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Maximizer over the label hull: a vertex or a point on an edge.
#[derive(Debug, Clone, Copy)]
pub enum FractionalLabel {
    Vertex(LabelPoint),
    /// The point (1−t)·p + t·q with 0 < t < 1.
    Edge { p: LabelPoint, q: LabelPoint, t: f64 },
}

impl FractionalLabel {
    pub fn coords(&self) -> (f64, f64) {
        match self {
            FractionalLabel::Vertex(v) => (v.h, v.g),
            FractionalLabel::Edge { p, q, t } => Segment::new(*p, *q).at(*t),
        }
    }

    pub fn psi(&self, loss: &BiCriteriaLoss) -> f64 {
        let (h, g) = self.coords();
        loss.psi_value(h, g).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn is_integral(&self) -> bool {
        matches!(self, FractionalLabel::Vertex(_))
    }

    /// Endpoint labels with convex weights (one entry for a vertex).
    pub fn weighted_endpoints(&self) -> Vec<(LabelPoint, f64)> {
        match self {
            FractionalLabel::Vertex(v) => vec![(*v, 1.0)],
            FractionalLabel::Edge { p, q, t } => vec![(*p, 1.0 - t), (*q, *t)],
        }
    }
}

/// Convex hull search outcome, including the vertex state for warm starts.
#[derive(Debug)]
pub struct HullSearchOutcome {
    pub frac: FractionalLabel,
    pub oracle_calls: usize,
    pub state: HullState,
}

/// The optimal oracle weight for the current vertex set: −slope of the line
/// T separating the super-level set of the incumbent from the hull interior.
/// T is the incumbent's contour tangent unless a neighboring vertex pokes
/// into the tangent's upper half-plane, in which case T is that edge.
pub fn get_lambda(state: &HullState, loss: &BiCriteriaLoss) -> Result<f64, HullError> {
    let (idx, _) = state.incumbent(loss).ok_or(HullError::EmptyState)?;
    let verts = state.vertices();
    let at = verts[idx];
    let tangent = contour_tangent_slope(loss, &at)?;
    let above = |n: &LabelPoint| n.h > at.h + tangent * (n.g - at.g);
    let mut t_slope = tangent;
    if idx > 0 && above(&verts[idx - 1]) {
        t_slope = edge_slope(&verts[idx - 1], &at)?;
    }
    if idx + 1 < verts.len() && above(&verts[idx + 1]) {
        t_slope = edge_slope(&at, &verts[idx + 1])?;
    }
    Ok((-t_slope).max(0.0))
}

const FRACT_SNAP: f64 = 1e-9;

/// Maximizes the loss over the incumbent vertex and its at most two
/// neighboring edges; golden-section does the per-edge maximization.
pub fn get_max_fract(
    state: &HullState,
    loss: &BiCriteriaLoss,
) -> Result<FractionalLabel, HullError> {
    let (idx, best_psi) = state.incumbent(loss).ok_or(HullError::EmptyState)?;
    let verts = state.vertices();
    let at = verts[idx];
    let mut best = FractionalLabel::Vertex(at);
    let mut best_val = best_psi;

    let mut consider = |p: LabelPoint, q: LabelPoint| -> Result<(), HullError> {
        let seg = Segment::new(p, q);
        let (t, v) = golden_max_on_segment(loss, &seg, 1e-9)?;
        if v > best_val {
            best_val = v;
            best = if t <= FRACT_SNAP {
                FractionalLabel::Vertex(p)
            } else if t >= 1.0 - FRACT_SNAP {
                FractionalLabel::Vertex(q)
            } else {
                FractionalLabel::Edge { p, q, t }
            };
        }
        Ok(())
    };
    if idx > 0 {
        consider(verts[idx - 1], at)?;
    }
    if idx + 1 < verts.len() {
        consider(at, verts[idx + 1])?;
    }
    Ok(best)
}

/// Convex hull search. Starts at the λ→∞ sentinel (or from warm-start
/// vertices re-evaluated under the current oracle), requeries at the optimal
/// λ of the growing vertex list, and terminates the moment the oracle repeats
/// a previously seen label.
pub fn convex_hull_search(
    oracle: &dyn LambdaSpace,
    loss: &BiCriteriaLoss,
    warm_start: Option<&[LabelId]>,
) -> Result<(FractionalLabel, usize), HullError> {
    convex_hull_search_full(oracle, loss, warm_start).map(|o| (o.frac, o.oracle_calls))
}

pub fn convex_hull_search_full(
    oracle: &dyn LambdaSpace,
    loss: &BiCriteriaLoss,
    warm_start: Option<&[LabelId]>,
) -> Result<HullSearchOutcome, HullError> {
    let mut state = HullState::new();
    if let Some(ids) = warm_start {
        for &id in ids {
            if let Some(p) = oracle.point_of(id) {
                if !state.contains(id) {
                    let _ = state.insert_sorted(p);
                }
            }
        }
    }
    // A vanished gradient means the loss is flat at the incumbent (true
    // label, or a tail underflow): nothing can improve, stop querying.
    let next_lambda = |state: &HullState| -> Result<Option<f64>, HullError> {
        match get_lambda(state, loss) {
            Ok(l) => Ok(Some(l)),
            Err(HullError::Geometry(GeometryError::ZeroGradient(_, _))) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut lam = if state.is_empty() {
        Some(Lambda::Inf)
    } else {
        next_lambda(&state)?.map(Lambda::Finite)
    };
    let mut calls = 0usize;
    let cap = oracle.num_labels() as usize + 2;
    while let Some(query) = lam {
        let ans = oracle.lambda_oracle(query);
        calls += 1;
        if state.contains(ans.point.label_id) || calls >= cap {
            break;
        }
        state.insert_sorted(ans.point)?;
        lam = next_lambda(&state)?.map(Lambda::Finite);
    }
    let frac = get_max_fract(&state, loss)?;
    Ok(HullSearchOutcome {
        frac,
        oracle_calls: calls,
        state,
    })
}

/// Recovers the best integral label from a fractional hull optimum by banning
/// the fractional edge's endpoints and requerying at the edge's λ until the
/// K-bound certifies no remaining label can beat the incumbent, the space is
/// exhausted, or `call_cap` is hit. Returns the label and the extra calls.
pub fn integral_recovery(
    frac: &FractionalLabel,
    oracle: &dyn LambdaSpace,
    loss: &BiCriteriaLoss,
    call_cap: usize,
) -> Result<(LabelPoint, usize), HullError> {
    let (p, q, _) = match frac {
        FractionalLabel::Vertex(v) => return Ok((*v, 0)),
        FractionalLabel::Edge { p, q, t } => (*p, *q, *t),
    };
    let lam = (-edge_slope(&p, &q)?).max(0.0);
    let mut banned: BTreeSet<LabelId> = [p.label_id, q.label_id].into();
    let psi_of = |pt: &LabelPoint| loss.psi_value(pt.h, pt.g).unwrap_or(f64::NEG_INFINITY);
    let mut best = if psi_of(&p) >= psi_of(&q) { p } else { q };
    let (g_lo, g_hi) = oracle.g_range();
    let mut calls = 0usize;
    while calls < call_cap {
        let ans = match oracle.banlist_oracle(Lambda::Finite(lam), &banned) {
            Ok(a) => a,
            Err(OracleError::Exhausted) => break,
            Err(e) => return Err(e.into()),
        };
        calls += 1;
        if psi_of(&ans.point) > psi_of(&best) {
            best = ans.point;
        }
        // All labels outside the ban list lie on or below h + λg = K; the
        // loss on that line is unimodal, so its maximum bounds the rest.
        if let Some(ub) = line_psi_upper_bound(loss, ans.oracle_value, lam, g_lo, g_hi) {
            if psi_of(&best) >= ub - 1e-12 {
                break;
            }
        }
        banned.insert(ans.point.label_id);
    }
    Ok((best, calls))
}

/// Maximum of the loss along {h + λ·g = K} for g in the label space's range,
/// clipped to the loss's g-regime. `None` when the line misses the domain.
fn line_psi_upper_bound(
    loss: &BiCriteriaLoss,
    k: f64,
    lam: f64,
    g_lo: f64,
    g_hi: f64,
) -> Option<f64> {
    use std::cmp::Ordering;
    let (lo, hi) = match loss.g_regime() {
        Some(Ordering::Greater) => (g_lo.max(0.0), g_hi),
        Some(Ordering::Less) => (g_lo, g_hi.min(-1e-12)),
        _ => (g_lo, g_hi),
    };
    if lo > hi {
        return None;
    }
    let a = LabelPoint::new(u64::MAX, k - lam * lo, lo);
    let b = LabelPoint::new(u64::MAX, k - lam * hi, hi);
    golden_max_on_segment(loss, &Segment::new(a, b), 1e-9)
        .ok()
        .map(|(_, v)| v)
}
