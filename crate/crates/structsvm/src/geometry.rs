//! 2D geometry of labels: points in the `(h, g)` plane, segments, the sorted
//! vertex list maintained by convex hull search, and segment maximization.
//!
//! Two distinct slope conventions coexist in this codebase and are kept apart
//! by name: [`edge_slope`] is Δh/Δg between two points (used by the hull
//! search's Get-λ), while [`ray_slope`] is g/h of a single point seen as a
//! vector from the origin (used by angular search windows).

use crate::loss::{BiCriteriaLoss, LossError};
use crate::oracle::LabelId;
use thiserror::Error;

/// A label's image in the plane plus its opaque identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelPoint {
    pub label_id: LabelId,
    /// Margin-side coordinate.
    pub h: f64,
    /// Loss-side coordinate. Nonnegative for structural losses; negative in
    /// the Micro-F1 factor convention.
    pub g: f64,
}

impl LabelPoint {
    pub fn new(label_id: LabelId, h: f64, g: f64) -> Self {
        debug_assert!(h.is_finite() && g.is_finite());
        LabelPoint { label_id, h, g }
    }

    /// Product objective of the slack-rescaling searches.
    pub fn phi(&self) -> f64 {
        self.h * self.g
    }
}

/// A segment between two label points.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub p: LabelPoint,
    pub q: LabelPoint,
}

impl Segment {
    pub fn new(p: LabelPoint, q: LabelPoint) -> Self {
        Segment { p, q }
    }

    /// Point at parameter `t` in `[0,1]`, measured from `p` toward `q`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        (
            (1.0 - t) * self.p.h + t * self.q.h,
            (1.0 - t) * self.p.g + t * self.q.g,
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("segment endpoints share the same g coordinate")]
    DegenerateSegment,
    #[error("label {0} already present in hull state")]
    DuplicateLabel(LabelId),
    #[error("loss evaluated non-finite on segment at t={0}")]
    NonFiniteLoss(f64),
    #[error("gradient vanished at ({0}, {1})")]
    ZeroGradient(f64, f64),
}

/// Slope Δh/Δg between two points (h as a function of g).
pub fn edge_slope(p: &LabelPoint, q: &LabelPoint) -> Result<f64, GeometryError> {
    if p.g == q.g {
        return Err(GeometryError::DegenerateSegment);
    }
    Ok((p.h - q.h) / (p.g - q.g))
}

/// Slope g/h of a point as a ray from the origin. Infinite when h = 0.
pub fn ray_slope(p: &LabelPoint) -> f64 {
    if p.h == 0.0 {
        if p.g == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        p.g / p.h
    }
}

/// Contour tangent slope dh/dg of the loss at a point, i.e.
/// `−(∂ψ/∂g)/(∂ψ/∂h)`. For a monotone loss this is negative, and
/// `λ = −slope > 0` is the optimal oracle weight at that point.
pub fn contour_tangent_slope(loss: &BiCriteriaLoss, at: &LabelPoint) -> Result<f64, GeometryError> {
    let (dh, dg) = loss
        .psi_grad(at.h, at.g)
        .map_err(|_| GeometryError::ZeroGradient(at.h, at.g))?;
    if dh == 0.0 && dg == 0.0 {
        return Err(GeometryError::ZeroGradient(at.h, at.g));
    }
    if dh == 0.0 {
        return Err(GeometryError::ZeroGradient(at.h, at.g));
    }
    Ok(-dg / dh)
}

const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Golden-section maximization of a quasi-concave loss along a segment.
///
/// Returns `(t, value)` with `t` the maximizer parameter from `p` toward `q`,
/// accurate to `tol` in `t`. Quasi-concavity makes the restriction unimodal,
/// so golden-section finds the segment-global maximum. Endpoints are always
/// candidates.
pub fn golden_max_on_segment(
    loss: &BiCriteriaLoss,
    seg: &Segment,
    tol: f64,
) -> Result<(f64, f64), GeometryError> {
    debug_assert!(tol > 0.0);
    let eval = |t: f64| -> Result<f64, GeometryError> {
        let (h, g) = seg.at(t);
        match loss.psi_value(h, g) {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(GeometryError::NonFiniteLoss(t)),
            Err(LossError::DomainError { .. }) => Err(GeometryError::NonFiniteLoss(t)),
            Err(_) => Err(GeometryError::NonFiniteLoss(t)),
        }
    };

    let resp = 2.0 - GOLDEN_RATIO;
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let f0 = eval(0.0)?;
    let f1 = eval(1.0)?;
    let mut x1 = a + resp * (b - a);
    let mut x2 = b - resp * (b - a);
    let mut v1 = eval(x1)?;
    let mut v2 = eval(x2)?;
    while (b - a) > tol {
        if v1 > v2 {
            b = x2;
            x2 = x1;
            v2 = v1;
            x1 = a + resp * (b - a);
            v1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            v1 = v2;
            x2 = b - resp * (b - a);
            v2 = eval(x2)?;
        }
    }
    let tm = 0.5 * (a + b);
    let vm = eval(tm)?;
    // Best of interior estimate and both endpoints.
    let mut best = (tm, vm);
    if f0 > best.1 {
        best = (0.0, f0);
    }
    if f1 > best.1 {
        best = (1.0, f1);
    }
    Ok(best)
}

/// Sorted vertex list of labels revealed by λ-oracle calls, ordered by
/// increasing g, with the set of all label ids seen so far.
#[derive(Debug, Clone, Default)]
pub struct HullState {
    vertices: Vec<LabelPoint>,
    seen: std::collections::BTreeSet<LabelId>,
}

/// Result of inserting a point into a [`HullState`].
#[derive(Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted,
    /// An existing vertex with the same g was replaced (larger h wins).
    Replaced,
    /// The point was dominated by an existing equal-g vertex and dropped.
    Dropped,
}

impl HullState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertices(&self) -> &[LabelPoint] {
        &self.vertices
    }

    pub fn contains(&self, id: LabelId) -> bool {
        self.seen.contains(&id)
    }

    pub fn seen_ids(&self) -> impl Iterator<Item = LabelId> + '_ {
        self.seen.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Inserts a point keeping vertices strictly increasing in g.
    ///
    /// Equal-g points cannot both be hull vertices; the one with larger h
    /// survives. Collinear triples (within 1e−12 of the cross product scale)
    /// drop the middle point, keeping the later-inserted endpoint.
    pub fn insert_sorted(&mut self, point: LabelPoint) -> Result<InsertOutcome, GeometryError> {
        if self.seen.contains(&point.label_id) {
            return Err(GeometryError::DuplicateLabel(point.label_id));
        }
        self.seen.insert(point.label_id);
        let pos = self.vertices.partition_point(|v| v.g < point.g);
        if pos < self.vertices.len() && self.vertices[pos].g == point.g {
            if self.vertices[pos].h < point.h {
                self.vertices[pos] = point;
                return Ok(InsertOutcome::Replaced);
            }
            return Ok(InsertOutcome::Dropped);
        }
        self.vertices.insert(pos, point);
        self.drop_collinear(pos);
        Ok(InsertOutcome::Inserted)
    }

    /// Removes a middle vertex made collinear by the insert at `pos`.
    fn drop_collinear(&mut self, pos: usize) {
        for mid in [pos.checked_sub(1), Some(pos + 1)].into_iter().flatten() {
            if mid == 0 || mid + 1 >= self.vertices.len() {
                continue;
            }
            let (a, b, c) = (
                self.vertices[mid - 1],
                self.vertices[mid],
                self.vertices[mid + 1],
            );
            let cross = (b.g - a.g) * (c.h - a.h) - (c.g - a.g) * (b.h - a.h);
            let scale = (b.g - a.g).abs().max((c.g - a.g).abs()) * (c.h - a.h).abs().max(1.0);
            if cross.abs() <= 1e-12 * scale.max(1.0) {
                self.vertices.remove(mid);
                return;
            }
        }
    }

    /// Index of the vertex maximizing the loss; ties break to the smaller g.
    pub fn incumbent(&self, loss: &BiCriteriaLoss) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in self.vertices.iter().enumerate() {
            let val = loss.psi_value(v.h, v.g).unwrap_or(f64::NEG_INFINITY);
            match best {
                Some((_, bv)) if bv >= val => {}
                _ => best = Some((i, val)),
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::BiCriteriaLoss;
    use proptest::prelude::*;

    fn pt(id: LabelId, h: f64, g: f64) -> LabelPoint {
        LabelPoint::new(id, h, g)
    }

    #[test]
    fn edge_slope_matches_hand_values() {
        // Points from the three-label construction.
        let p = pt(0, 0.01, 2.0);
        let q = pt(1, 2.0, 0.01);
        assert!((edge_slope(&p, &q).unwrap() - (-1.0)).abs() < 1e-12);
        assert_eq!(edge_slope(&pt(0, 0.0, 0.0), &pt(1, 1.0, 1.0)).unwrap(), 1.0);
        assert_eq!(edge_slope(&pt(0, 3.0, 2.0), &pt(1, 3.0, 5.0)).unwrap(), 0.0);
        assert_eq!(
            edge_slope(&pt(0, 1.0, 2.0), &pt(1, 3.0, 2.0)),
            Err(GeometryError::DegenerateSegment)
        );
    }

    #[test]
    fn ray_slope_conventions() {
        assert_eq!(ray_slope(&pt(0, 2.0, 1.0)), 0.5);
        assert_eq!(ray_slope(&pt(0, 0.0, 3.0)), f64::INFINITY);
        assert_eq!(ray_slope(&pt(0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn insert_keeps_sorted_by_g() {
        let mut s = HullState::new();
        s.insert_sorted(pt(0, 0.01, 2.0)).unwrap();
        s.insert_sorted(pt(1, 1.0, 1.0)).unwrap();
        assert_eq!(s.vertices()[0].label_id, 1);
        assert_eq!(s.vertices()[1].label_id, 0);
        s.insert_sorted(pt(2, 2.0, 0.01)).unwrap();
        assert_eq!(s.vertices()[0].label_id, 2);
        let err = s.insert_sorted(pt(2, 5.0, 9.0)).unwrap_err();
        assert_eq!(err, GeometryError::DuplicateLabel(2));
    }

    #[test]
    fn golden_max_slack_segment() {
        // Closed form: maximize (h+1)g over the segment A=(0.01,2) → B=(2,0.01);
        // the quadratic in t peaks at t = 0.99/3.98.
        let loss = BiCriteriaLoss::slack_rescaling();
        let seg = Segment::new(pt(0, 0.01, 2.0), pt(1, 2.0, 0.01));
        let (t, v) = golden_max_on_segment(&loss, &seg, 1e-9).unwrap();
        assert!((t - 0.99 / 3.98).abs() < 1e-6, "t={t}");
        let (h, g) = seg.at(t);
        assert!((h - 0.505).abs() < 1e-6);
        assert!((g - 1.505).abs() < 1e-6);
        assert!((v - 1.505 * 1.505).abs() < 1e-9);
    }

    #[test]
    fn golden_max_degenerate_and_affine() {
        let loss = BiCriteriaLoss::slack_rescaling();
        let p = pt(0, 1.0, 2.0);
        let (_, v) = golden_max_on_segment(&loss, &Segment::new(p, p), 1e-9).unwrap();
        assert!((v - 4.0).abs() < 1e-12);

        // Affine ψ on a segment is maximized at an endpoint.
        let margin = BiCriteriaLoss::margin_rescaling();
        let seg = Segment::new(pt(0, 0.0, 3.0), pt(1, 2.5, 0.0));
        let (t, v) = golden_max_on_segment(&margin, &seg, 1e-9).unwrap();
        assert!((v - 3.0).abs() < 1e-9);
        assert!(t < 1e-6 || t > 1.0 - 1e-6);
    }

    #[test]
    fn contour_tangent_hand_values() {
        let margin = BiCriteriaLoss::margin_rescaling();
        let s = contour_tangent_slope(&margin, &pt(0, 0.7, 4.2)).unwrap();
        assert!((s + 1.0).abs() < 1e-12);

        let slack = BiCriteriaLoss::slack_rescaling();
        let s = contour_tangent_slope(&slack, &pt(0, 0.0, 2.0)).unwrap();
        assert!((s + 0.5).abs() < 1e-12);

        let prob = BiCriteriaLoss::probloss();
        let s = contour_tangent_slope(&prob, &pt(0, 0.0, 1.0)).unwrap();
        assert!((s + 1.0).abs() < 1e-9);
    }

    #[test]
    fn contour_tangent_matches_finite_differences() {
        // Implicit contour slope dh/dg compared against central differences of
        // ψ for 100 deterministic points per family.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for loss in [
            BiCriteriaLoss::margin_rescaling(),
            BiCriteriaLoss::slack_rescaling(),
            BiCriteriaLoss::beta_scaling(0.5).unwrap(),
            BiCriteriaLoss::probloss(),
        ] {
            for _ in 0..100 {
                let h = rng.gen_range(-0.5..3.0);
                let g = rng.gen_range(0.2..6.0);
                let p = pt(0, h, g);
                let (dh, dg) = loss.psi_grad(h, g).unwrap();
                // skip ill-conditioned slopes where finite differences lose
                // the comparison, not the implementation
                if dg.abs() < 1e-6 || dh.abs() < 1e-4 {
                    continue;
                }
                let slope = contour_tangent_slope(&loss, &p).unwrap();
                let eps = 1e-6;
                let fd_dh =
                    (loss.psi_value(h + eps, g).unwrap() - loss.psi_value(h - eps, g).unwrap())
                        / (2.0 * eps);
                let fd_dg =
                    (loss.psi_value(h, g + eps).unwrap() - loss.psi_value(h, g - eps).unwrap())
                        / (2.0 * eps);
                let fd_slope = -fd_dg / fd_dh;
                let rel = (slope - fd_slope).abs() / fd_slope.abs().max(1e-9);
                assert!(rel < 1e-5, "slope {slope} vs fd {fd_slope}");
                let _ = (dh, dg);
            }
        }
    }

    proptest! {
        #[test]
        fn insert_sorted_stays_strictly_increasing(
            gs in proptest::collection::vec(0.0_f64..100.0, 1..40)
        ) {
            let mut s = HullState::new();
            for (i, g) in gs.iter().enumerate() {
                let _ = s.insert_sorted(pt(i as LabelId, (i as f64) * 0.37, *g));
            }
            for w in s.vertices().windows(2) {
                prop_assert!(w[0].g < w[1].g);
            }
        }

        #[test]
        fn golden_beats_endpoints_on_quasiconcave(
            h0 in -0.5_f64..2.0, g0 in 0.1_f64..5.0,
            h1 in -0.5_f64..2.0, g1 in 0.1_f64..5.0,
        ) {
            let loss = BiCriteriaLoss::slack_rescaling();
            let seg = Segment::new(pt(0, h0, g0), pt(1, h1, g1));
            let (_, v) = golden_max_on_segment(&loss, &seg, 1e-9).unwrap();
            let ve = loss.psi_value(h0, g0).unwrap().max(loss.psi_value(h1, g1).unwrap());
            prop_assert!(v >= ve - 1e-9);
        }
    }
}
