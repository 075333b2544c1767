//! Exact λ-oracle over an explicit finite set of label points.

use super::{LabelId, Lambda, LambdaSpace, OracleAnswer, OracleError, SlopeWindow};
use crate::geometry::LabelPoint;
use std::collections::BTreeSet;

/// Enumeration backend: label ids are point indices.
#[derive(Debug, Clone)]
pub struct EnumerationOracle {
    points: Vec<LabelPoint>,
}

impl EnumerationOracle {
    pub fn new(points: Vec<LabelPoint>) -> Self {
        EnumerationOracle { points }
    }

    pub fn from_coords(coords: &[(f64, f64)]) -> Self {
        let points = coords
            .iter()
            .enumerate()
            .map(|(i, &(h, g))| LabelPoint::new(i as LabelId, h, g))
            .collect();
        EnumerationOracle { points }
    }

    pub fn points(&self) -> &[LabelPoint] {
        &self.points
    }

    /// Brute-force argmax of an arbitrary score; ties break to the smallest id.
    pub fn argmax_by<F: Fn(&LabelPoint) -> f64>(&self, score: F) -> Option<LabelPoint> {
        let mut best: Option<(f64, LabelPoint)> = None;
        for p in &self.points {
            let s = score(p);
            match &best {
                Some((bs, _)) if *bs >= s => {}
                _ => best = Some((s, *p)),
            }
        }
        best.map(|(_, p)| p)
    }
}

fn lex_key(p: &LabelPoint, lam: Lambda) -> (f64, f64) {
    match lam {
        Lambda::Finite(l) => (p.h + l * p.g, 0.0),
        Lambda::Inf => (p.g, p.h),
    }
}

fn better(candidate: (f64, f64), incumbent: (f64, f64)) -> bool {
    candidate.0 > incumbent.0 || (candidate.0 == incumbent.0 && candidate.1 > incumbent.1)
}

impl LambdaSpace for EnumerationOracle {
    fn lambda_oracle(&self, lam: Lambda) -> OracleAnswer {
        let mut best: Option<(LabelPoint, (f64, f64))> = None;
        for p in &self.points {
            let key = lex_key(p, lam);
            match &best {
                Some((_, bk)) if !better(key, *bk) => {}
                _ => best = Some((*p, key)),
            }
        }
        let (point, _) = best.expect("enumeration oracle over empty label set");
        OracleAnswer::at(point, lam)
    }

    fn constrained_lambda_oracle(
        &self,
        lam: f64,
        window: &SlopeWindow,
    ) -> Result<Option<OracleAnswer>, OracleError> {
        let mut best: Option<(LabelPoint, f64)> = None;
        for p in &self.points {
            if !window.admits(p.h, p.g) {
                continue;
            }
            let v = p.h + lam * p.g;
            match &best {
                Some((_, bv)) if *bv >= v => {}
                _ => best = Some((*p, v)),
            }
        }
        Ok(best.map(|(p, _)| OracleAnswer::at(p, Lambda::Finite(lam))))
    }

    fn banlist_oracle(
        &self,
        lam: Lambda,
        banned: &BTreeSet<LabelId>,
    ) -> Result<OracleAnswer, OracleError> {
        let mut best: Option<(LabelPoint, (f64, f64))> = None;
        for p in &self.points {
            if banned.contains(&p.label_id) {
                continue;
            }
            let key = lex_key(p, lam);
            match &best {
                Some((_, bk)) if !better(key, *bk) => {}
                _ => best = Some((*p, key)),
            }
        }
        match best {
            Some((p, _)) => Ok(OracleAnswer::at(p, lam)),
            None => Err(OracleError::Exhausted),
        }
    }

    fn point_of(&self, id: LabelId) -> Option<LabelPoint> {
        self.points.get(id as usize).copied()
    }

    fn num_labels(&self) -> u64 {
        self.points.len() as u64
    }

    fn g_range(&self) -> (f64, f64) {
        let lo = self.points.iter().map(|p| p.g).fold(f64::INFINITY, f64::min);
        let hi = self
            .points
            .iter()
            .map(|p| p.g)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}
