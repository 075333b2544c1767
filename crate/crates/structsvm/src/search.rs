//! Searches for the product objective Φ(y) = h(y)·g(y) (slack rescaling with
//! h = 1 + margin) driven by a λ-oracle: binary search on the convex upper
//! bound F̄, bisecting search on the 2D interval geometry, and angular search
//! with the constrained oracle, which is exact.

use crate::geometry::{ray_slope, LabelPoint};
use crate::oracle::{Lambda, LambdaSpace, OracleError, SlopeWindow};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
}

/// Outcome of a Φ search.
#[derive(Debug, Clone, Copy)]
pub struct SearchResult {
    /// Best label seen; `None` only when no query admitted any label.
    pub best: Option<LabelPoint>,
    /// Φ of `best`, −∞ when `best` is `None`.
    pub best_value: f64,
    pub oracle_calls: usize,
    /// Upper bound on Φ* when the method produces one.
    pub certificate: Option<f64>,
}

impl SearchResult {
    fn empty() -> Self {
        SearchResult {
            best: None,
            best_value: f64::NEG_INFINITY,
            oracle_calls: 0,
            certificate: None,
        }
    }

    fn offer(&mut self, p: LabelPoint) {
        let phi = p.phi();
        if self.best.is_none() || phi > self.best_value {
            self.best = Some(p);
            self.best_value = phi;
        }
    }
}

/// The K(λ)²/(4λ) upper bound on Φ*.
pub fn suboptimality_certificate(k: f64, lam: f64) -> Result<f64, SearchError> {
    if lam <= 0.0 {
        return Err(SearchError::NonPositiveLambda(lam));
    }
    Ok(k * k / (4.0 * lam))
}

const GOLDEN_RESP: f64 = 2.0 - 1.618_033_988_749_895;

/// Golden-section minimization of F̄(λ) = ¼·max_y((1/λ)h + λg)² over
/// λ ∈ [lam_lo, lam_hi]. Each evaluation is one λ-oracle call at λ²; the
/// running best Φ over all queried labels is returned together with the
/// minimum evaluated F̄ as certificate. Stops early once both ends of the
/// remaining interval returned the same label: the oracle answer cannot
/// change inside it.
pub fn binary_search_sgd(
    oracle: &dyn LambdaSpace,
    lam_lo: f64,
    lam_hi: f64,
    tol: f64,
) -> SearchResult {
    assert!(0.0 < lam_lo && lam_lo < lam_hi && tol > 0.0);
    let mut out = SearchResult::empty();
    let mut cert = f64::INFINITY;
    let eval = |lam: f64, out: &mut SearchResult| -> (f64, u64) {
        let ans = oracle.lambda_oracle(Lambda::Finite(lam * lam));
        out.oracle_calls += 1;
        out.offer(ans.point);
        let fbar = 0.25 * (ans.oracle_value / lam).powi(2);
        (fbar, ans.point.label_id)
    };

    let (mut a, mut b) = (lam_lo, lam_hi);
    let (fa, mut id_a) = eval(a, &mut out);
    let (fb, mut id_b) = eval(b, &mut out);
    cert = cert.min(fa).min(fb);
    if id_a == id_b {
        // The oracle answer cannot change inside [a, b].
        out.certificate = Some(cert);
        return out;
    }
    let mut x1 = a + GOLDEN_RESP * (b - a);
    let mut x2 = b - GOLDEN_RESP * (b - a);
    let (mut f1, mut id1) = eval(x1, &mut out);
    let (mut f2, mut id2) = eval(x2, &mut out);
    cert = cert.min(f1).min(f2);
    while (b - a) > tol && id_a != id_b {
        if f1 < f2 {
            b = x2;
            id_b = id2;
            x2 = x1;
            f2 = f1;
            id2 = id1;
            x1 = a + GOLDEN_RESP * (b - a);
            let e = eval(x1, &mut out);
            f1 = e.0;
            id1 = e.1;
        } else {
            a = x1;
            id_a = id1;
            x1 = x2;
            f1 = f2;
            id1 = id2;
            x2 = b - GOLDEN_RESP * (b - a);
            let e = eval(x2, &mut out);
            f2 = e.0;
            id2 = e.1;
        }
        cert = cert.min(f1).min(f2);
    }
    out.certificate = Some(cert);
    out
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn nonneg() -> Self {
        Interval {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }
    fn intersect(&mut self, lo: f64, hi: f64) {
        self.lo = self.lo.max(lo);
        self.hi = self.hi.min(hi);
    }
    fn is_empty(&self) -> bool {
        self.lo > self.hi
    }
}

/// Bisecting search: maintains interval sets H, G (possible h and g of the
/// λ-reachable optimum) and L (possible λ*), halving L each step. Terminates
/// when H or G empties, when both current λ-interval endpoints were queried
/// and returned the same label, or at `max_iters`.
pub fn bisecting_search(oracle: &dyn LambdaSpace, lam0: f64, max_iters: usize) -> SearchResult {
    assert!(lam0 > 0.0);
    let mut out = SearchResult::empty();
    let mut h_iv = Interval::nonneg();
    let mut g_iv = Interval::nonneg();
    let mut l_iv = Interval::nonneg();
    let mut lam = lam0;
    let mut cert = f64::INFINITY;
    let mut seen_at: BTreeMap<u64, u64> = BTreeMap::new(); // λ bits → label id

    for _ in 0..max_iters {
        if h_iv.is_empty() || g_iv.is_empty() {
            break;
        }
        let ans = oracle.lambda_oracle(Lambda::Finite(lam));
        out.oracle_calls += 1;
        out.offer(ans.point);
        seen_at.insert(lam.to_bits(), ans.point.label_id);
        cert = cert.min(suboptimality_certificate(ans.oracle_value, lam).unwrap());

        let (h, g) = (ans.point.h, ans.point.g);
        let u = [h, lam * g];
        let v = [g, h / lam];
        h_iv.intersect(u[0].min(u[1]), u[0].max(u[1]));
        g_iv.intersect(v[0].min(v[1]), v[0].max(v[1]));
        if v[0] <= v[1] {
            l_iv.intersect(lam, f64::INFINITY);
        } else {
            l_iv.intersect(0.0, lam);
        }

        // Same label at both finite endpoints: the oracle answer cannot
        // change inside L, stop.
        if l_iv.hi.is_finite() {
            let at_lo = seen_at.get(&l_iv.lo.to_bits());
            let at_hi = seen_at.get(&l_iv.hi.to_bits());
            if let (Some(a), Some(b)) = (at_lo, at_hi) {
                if a == b {
                    break;
                }
            }
        }

        lam = if l_iv.hi.is_infinite() {
            2.0 * l_iv.lo.max(lam0 * f64::EPSILON)
        } else {
            0.5 * (l_iv.lo + l_iv.hi)
        };
        if !(lam > 0.0) || (l_iv.hi - l_iv.lo).abs() < 1e-15 * l_iv.hi.max(1.0) {
            break;
        }
    }
    out.certificate = Some(cert);
    out
}

/// Queue discipline and pruning knobs for angular search.
#[derive(Debug, Clone, Copy)]
pub struct AngularOptions {
    pub max_iters: usize,
    /// Initial (slope_hi, slope_lo); defaults to the full right half-plane.
    pub init_window: Option<(f64, f64)>,
    /// Dequeue the angle with the highest Φ upper bound instead of FIFO.
    pub priority_queue: bool,
    /// Best Φ from a label cache; enables pruning angles whose bound cannot
    /// beat it.
    pub seed_phi: Option<f64>,
}

impl Default for AngularOptions {
    fn default() -> Self {
        AngularOptions {
            max_iters: usize::MAX,
            init_window: None,
            priority_queue: false,
            seed_phi: None,
        }
    }
}

/// Per-iteration record of an instrumented angular run.
#[derive(Debug, Clone, Copy)]
pub struct AngularTraceStep {
    pub iteration: usize,
    pub best_phi: f64,
}

#[derive(Debug, Clone)]
pub struct AngularTrace {
    pub steps: Vec<AngularTraceStep>,
    /// v₁ = max(λ₁/∂(y₁), ∂(y₁)/λ₁) from the first answered query.
    pub v1: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct AngleTask {
    hi: f64,
    lo: f64,
    strict_flag: u8, // the pseudocode's s
    inherited_lambda: f64,
    bound: f64,
}

fn capacity_bound(v: f64) -> f64 {
    if !v.is_finite() {
        f64::INFINITY
    } else {
        0.25 * (v + 1.0 / v).powi(2)
    }
}

/// Angular search with the constrained λ-oracle. Run to queue exhaustion it
/// returns the exact argmax of Φ; truncated it satisfies the capacity decay
/// bound. `init_window` supports the φ-initialized variant
/// (α₀ = Ĝ²/φ, β₀ = φ/Ĥ²).
pub fn angular_search(
    oracle: &dyn LambdaSpace,
    lam0: f64,
    max_iters: usize,
    init_window: Option<(f64, f64)>,
) -> Result<SearchResult, OracleError> {
    let opts = AngularOptions {
        max_iters,
        init_window,
        ..Default::default()
    };
    angular_search_with(oracle, lam0, &opts).map(|(r, _)| r)
}

/// Angular search returning the per-iteration trace for bound checks.
pub fn angular_search_with(
    oracle: &dyn LambdaSpace,
    lam0: f64,
    opts: &AngularOptions,
) -> Result<(SearchResult, AngularTrace), OracleError> {
    assert!(lam0 > 0.0);
    let mut out = SearchResult::empty();
    let mut trace = AngularTrace {
        steps: Vec::new(),
        v1: None,
    };
    let mut queue: VecDeque<AngleTask> = VecDeque::new();
    let (hi0, lo0) = opts.init_window.unwrap_or((f64::INFINITY, 0.0));
    queue.push_back(AngleTask {
        hi: hi0,
        lo: lo0,
        strict_flag: 0,
        inherited_lambda: lam0,
        bound: f64::INFINITY,
    });
    if let Some(phi) = opts.seed_phi {
        out.best_value = out.best_value.max(phi);
    }
    let prune = opts.seed_phi.is_some();

    let mut t = 0usize;
    while !queue.is_empty() {
        let task = if opts.priority_queue {
            let (idx, _) = queue
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.bound.partial_cmp(&b.1.bound).unwrap())
                .unwrap();
            queue.remove(idx).unwrap()
        } else {
            queue.pop_front().unwrap()
        };
        if prune && task.bound <= out.best_value {
            continue;
        }
        let mut lam = if task.lo > 0.0 {
            1.0 / (task.hi * task.lo).sqrt()
        } else {
            task.inherited_lambda
        };
        if !lam.is_finite() || lam <= 0.0 {
            lam = task.inherited_lambda;
        }
        // s=0 queries the (lo,hi] window, s=1 the [lo,hi) one.
        let window = SlopeWindow::new(task.hi, task.lo, task.strict_flag == 0);
        let ans = oracle.constrained_lambda_oracle(lam, &window)?;
        t += 1;
        out.oracle_calls = t;

        if let Some(ans) = ans {
            let y = ans.point;
            if trace.v1.is_none() {
                let slope = ray_slope(&y);
                trace.v1 = Some(if slope.is_infinite() || slope == 0.0 {
                    f64::INFINITY
                } else {
                    (lam / slope).max(slope / lam)
                });
            }
            out.offer(y);
            let z1 = y.h;
            let z1p = lam * y.g;
            let scale = z1.abs().max(z1p.abs()).max(1.0);
            if (z1 - z1p).abs() <= 1e-12 * scale {
                // y attains the K-bound of its angle exactly.
                trace.steps.push(AngularTraceStep {
                    iteration: t,
                    best_phi: out.best_value,
                });
                break;
            }
            let dz = ray_slope(&y);
            // z' = [λg, h/λ] has slope h/(λ²g) = αβ/∂(z); the product form
            // keeps the child boundary bit-exact against the parent's, so a
            // returned label stays excluded from both children.
            let dzp = if task.lo > 0.0 && task.hi.is_finite() && dz > 0.0 && dz.is_finite() {
                (task.hi * task.lo) / dz
            } else if y.g == 0.0 {
                f64::INFINITY
            } else {
                y.h / (lam * lam * y.g)
            };
            let dr = if task.lo > 0.0 && task.hi.is_finite() {
                (task.hi * task.lo).sqrt()
            } else {
                1.0 / lam
            };
            let (k1, k2) = if dz > dzp {
                ((dz, dr, 1u8), (dr, dzp, 0u8))
            } else {
                ((dzp, dr, 1u8), (dr, dz, 0u8))
            };
            let v_task = if task.lo > 0.0 {
                (task.hi / task.lo).sqrt()
            } else {
                f64::INFINITY
            };
            let child_bound = capacity_bound(v_task) * y.phi().max(0.0);
            for (hi, lo, s) in [k1, k2] {
                if hi >= lo {
                    queue.push_back(AngleTask {
                        hi,
                        lo,
                        strict_flag: s,
                        inherited_lambda: lam,
                        bound: child_bound.min(task.bound),
                    });
                }
            }
        }
        trace.steps.push(AngularTraceStep {
            iteration: t,
            best_phi: out.best_value,
        });
        if t >= opts.max_iters {
            break;
        }
    }
    Ok((out, trace))
}
