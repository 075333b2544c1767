//! λ-oracle backends and constrained variants.
//!
//! A λ-oracle maximizes `𝓛_λ(y) = h(y) + λ·g(y)` over the label space; it is
//! margin-rescaling inference with the loss term reweighted. Backends:
//! enumeration over explicit points, and Viterbi over chain instances. The
//! constrained oracle restricts answers to a slope window in the plane and is
//! served by enumeration backends only.

mod adversarial;
mod chain;
mod enumeration;

pub use adversarial::{verify_transcript, AdversarialStream, QueryRegion, StreamAnswer};
pub use chain::{ChainInstance, ChainOracle};
pub use enumeration::EnumerationOracle;

use crate::geometry::LabelPoint;
use std::collections::BTreeSet;
use thiserror::Error;

/// Opaque label handle. Chain backends encode the state sequence; enumeration
/// backends use the point index.
pub type LabelId = u64;

/// Oracle weight. `Inf` asks for the lexicographic max on `(g, h)` — the
/// λ→∞ limit used to initialize convex hull search — without overflowing
/// float arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Inf,
}

impl Lambda {
    pub fn finite(self) -> Option<f64> {
        match self {
            Lambda::Finite(v) => Some(v),
            Lambda::Inf => None,
        }
    }
}

/// Result of a λ-oracle call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleAnswer {
    pub point: LabelPoint,
    /// `h + λ·g` of the returned point; `+∞` for the `Inf` sentinel when
    /// g > 0, `h` when g = 0.
    pub oracle_value: f64,
}

impl OracleAnswer {
    pub(crate) fn at(point: LabelPoint, lam: Lambda) -> Self {
        let oracle_value = match lam {
            Lambda::Finite(l) => point.h + l * point.g,
            Lambda::Inf => {
                if point.g > 0.0 {
                    f64::INFINITY
                } else {
                    point.h
                }
            }
        };
        OracleAnswer {
            point,
            oracle_value,
        }
    }
}

/// Slope window of the constrained oracle.
///
/// With `strict_mode = false` the admitted slopes g/h lie in `[lo, hi)`
/// (the `hi·h > g`, `lo·h ≤ g` inequality form); with `strict_mode = true`
/// they lie in `(lo, hi]`. Angular search alternates both so that a returned
/// label is excluded from both child windows of its split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeWindow {
    pub slope_hi: f64,
    pub slope_lo: f64,
    pub strict_mode: bool,
}

impl SlopeWindow {
    pub fn new(slope_hi: f64, slope_lo: f64, strict_mode: bool) -> Self {
        debug_assert!(slope_hi >= slope_lo && slope_lo >= 0.0);
        SlopeWindow {
            slope_hi,
            slope_lo,
            strict_mode,
        }
    }

    /// The full right half-plane window used to seed angular search.
    pub fn full(strict_mode: bool) -> Self {
        SlopeWindow::new(f64::INFINITY, 0.0, strict_mode)
    }

    /// Whether a point satisfies the window predicates. The window geometry
    /// lives in the closed right half-plane; points with h < 0 never qualify.
    ///
    /// The comparison runs on the slope g/h rather than the cross products
    /// g ≷ bound·h: window bounds are themselves slopes of answered points,
    /// and only the identical division makes their exclusion from child
    /// windows exact in floating point.
    pub fn admits(&self, h: f64, g: f64) -> bool {
        if h < 0.0 {
            return false;
        }
        let slope = if h == 0.0 {
            if g == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            g / h
        };
        let lo_ok = if self.strict_mode {
            slope > self.slope_lo
        } else {
            slope >= self.slope_lo
        };
        let hi_ok = if self.strict_mode {
            slope <= self.slope_hi
        } else {
            slope < self.slope_hi
        };
        lo_ok && hi_ok
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("backend does not support constrained (slope window) queries")]
    UnsupportedBackend,
    #[error("ban list covers the whole label space")]
    Exhausted,
    #[error("invalid construction parameters: {0}")]
    InvalidParams(String),
    #[error("inconsistent adversarial query: {0}")]
    InconsistentQuery(String),
}

/// A label space a search can query.
///
/// All implementations break argmax ties toward the smallest label id so that
/// searches are deterministic.
pub trait LambdaSpace {
    /// Best label under `h + λ·g`.
    fn lambda_oracle(&self, lam: Lambda) -> OracleAnswer;

    /// Best label within a slope window, or `None` when no label qualifies.
    /// Enumeration backends only.
    fn constrained_lambda_oracle(
        &self,
        lam: f64,
        window: &SlopeWindow,
    ) -> Result<Option<OracleAnswer>, OracleError>;

    /// Best label not in `banned`; `Exhausted` when the ban list covers the
    /// space.
    fn banlist_oracle(
        &self,
        lam: Lambda,
        banned: &BTreeSet<LabelId>,
    ) -> Result<OracleAnswer, OracleError>;

    /// Re-evaluates a known label id (used by warm starts).
    fn point_of(&self, id: LabelId) -> Option<LabelPoint>;

    /// Total number of labels.
    fn num_labels(&self) -> u64;

    /// Range of g over the label space (used by integral recovery bounds).
    fn g_range(&self) -> (f64, f64);
}

/// The 3-label construction on which every λ-only search fails:
/// A = [ε, Ĝ], B = [Ĥ, ε], C = [Ĥ/2, Ĝ/2]. C maximizes Φ = h·g with
/// Φ(C) = ĤĜ/4 but is never returned by a plain λ-oracle.
pub fn three_label_hard_instance(
    h_hat: f64,
    g_hat: f64,
    eps: f64,
) -> Result<EnumerationOracle, OracleError> {
    if !(eps > 0.0 && eps < h_hat.min(g_hat) / 4.0) {
        return Err(OracleError::InvalidParams(format!(
            "need 0 < eps < min(H,G)/4, got eps={eps}, H={h_hat}, G={g_hat}"
        )));
    }
    Ok(EnumerationOracle::from_coords(&[
        (eps, g_hat),
        (h_hat, eps),
        (h_hat / 2.0, g_hat / 2.0),
    ]))
}

/// The oscillation game instance: A = [2,4], B = [4,2], C = [3+ε,3].
/// For λ > 1 the oracle returns A, for λ < 1 it returns B, and only λ = 1
/// (the hull search's optimal choice) reveals C.
pub fn oscillation_game_instance(eps: f64) -> EnumerationOracle {
    EnumerationOracle::from_coords(&[(2.0, 4.0), (4.0, 2.0), (3.0 + eps, 3.0)])
}
