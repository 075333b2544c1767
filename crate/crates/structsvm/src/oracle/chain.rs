//! Chain-structured label spaces: Viterbi λ-oracle and k-best decoding with
//! ban lists. Both h and g decompose over positions, so the λ-oracle is plain
//! Viterbi over loss-augmented unary scores.

use super::{LabelId, Lambda, LambdaSpace, OracleAnswer, OracleError, SlopeWindow};
use crate::geometry::LabelPoint;
use std::collections::BTreeSet;

/// A fixed inference problem over state sequences.
#[derive(Debug, Clone)]
pub struct ChainInstance {
    pub length: usize,
    pub num_states: usize,
    /// unary[t][s]
    pub unary: Vec<Vec<f64>>,
    /// pairwise[t][s][s'] scores the arc from position t to t+1.
    pub pairwise: Vec<Vec<Vec<f64>>>,
    pub true_label: Vec<usize>,
}

impl ChainInstance {
    pub fn new(
        unary: Vec<Vec<f64>>,
        pairwise: Vec<Vec<Vec<f64>>>,
        true_label: Vec<usize>,
    ) -> Self {
        let length = unary.len();
        assert!(length > 0);
        let num_states = unary[0].len();
        assert!(unary.iter().all(|u| u.len() == num_states));
        assert_eq!(pairwise.len(), length.saturating_sub(1));
        assert_eq!(true_label.len(), length);
        assert!(true_label.iter().all(|&s| s < num_states));
        let finite = unary.iter().flatten().all(|v| v.is_finite())
            && pairwise
                .iter()
                .flatten()
                .flatten()
                .all(|v| v.is_finite());
        assert!(finite, "chain scores must be finite");
        ChainInstance {
            length,
            num_states,
            unary,
            pairwise,
            true_label,
        }
    }

    /// Raw potential of a sequence.
    pub fn score_of(&self, seq: &[usize]) -> f64 {
        let mut s = 0.0;
        for (t, &st) in seq.iter().enumerate() {
            s += self.unary[t][st];
            if t + 1 < self.length {
                s += self.pairwise[t][st][seq[t + 1]];
            }
        }
        s
    }

    pub fn hamming_of(&self, seq: &[usize]) -> f64 {
        seq.iter()
            .zip(&self.true_label)
            .filter(|(a, b)| a != b)
            .count() as f64
    }

    pub fn encode(&self, seq: &[usize]) -> LabelId {
        let mut id: u64 = 0;
        for &s in seq {
            id = id * self.num_states as u64 + s as u64;
        }
        id
    }

    pub fn decode(&self, mut id: LabelId) -> Vec<usize> {
        let mut seq = vec![0usize; self.length];
        for t in (0..self.length).rev() {
            seq[t] = (id % self.num_states as u64) as usize;
            id /= self.num_states as u64;
        }
        seq
    }

    pub fn label_count(&self) -> u64 {
        (self.num_states as u64).pow(self.length as u32)
    }

    /// All sequences as label points; only sensible at desk scale.
    pub fn enumerate_points(&self, h_offset: f64) -> Vec<LabelPoint> {
        let true_score = self.score_of(&self.true_label);
        let n = self.label_count();
        let mut pts = Vec::with_capacity(n as usize);
        for id in 0..n {
            let seq = self.decode(id);
            let h = h_offset + self.score_of(&seq) - true_score;
            pts.push(LabelPoint::new(id, h, self.hamming_of(&seq)));
        }
        pts
    }
}

/// λ-oracle view of a chain instance. `h_offset` selects the margin
/// convention: 0 for ψ-style factors h = m(y), 1 for the product objective
/// h = 1 + m(y).
pub struct ChainOracle<'a> {
    inst: &'a ChainInstance,
    h_offset: f64,
}

/// Lexicographically compared pair score used by the Viterbi DPs.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score2(f64, f64);

impl Score2 {
    fn plus(self, o: Score2) -> Score2 {
        Score2(self.0 + o.0, self.1 + o.1)
    }
    fn better(self, o: Score2) -> bool {
        self.0 > o.0 || (self.0 == o.0 && self.1 > o.1)
    }
}

impl<'a> ChainOracle<'a> {
    pub fn new(inst: &'a ChainInstance, h_offset: f64) -> Self {
        ChainOracle { inst, h_offset }
    }

    pub fn instance(&self) -> &ChainInstance {
        self.inst
    }

    fn node_score(&self, lam: Lambda, t: usize, s: usize) -> Score2 {
        let ind = if s != self.inst.true_label[t] { 1.0 } else { 0.0 };
        match lam {
            Lambda::Finite(l) => Score2(self.inst.unary[t][s] + l * ind, 0.0),
            Lambda::Inf => Score2(ind, self.inst.unary[t][s]),
        }
    }

    fn arc_score(&self, lam: Lambda, t: usize, s: usize, s2: usize) -> Score2 {
        let w = self.inst.pairwise[t][s][s2];
        match lam {
            Lambda::Finite(_) => Score2(w, 0.0),
            Lambda::Inf => Score2(0.0, w),
        }
    }

    /// Backward Viterbi; ties break to the lexicographically smallest
    /// sequence, which matches the smallest encoded label id.
    fn viterbi(&self, lam: Lambda) -> Vec<usize> {
        let (t_len, s_len) = (self.inst.length, self.inst.num_states);
        let mut suffix = vec![vec![Score2(0.0, 0.0); s_len]; t_len];
        for s in 0..s_len {
            suffix[t_len - 1][s] = self.node_score(lam, t_len - 1, s);
        }
        for t in (0..t_len - 1).rev() {
            for s in 0..s_len {
                let mut best: Option<Score2> = None;
                for s2 in 0..s_len {
                    let cand = self
                        .node_score(lam, t, s)
                        .plus(self.arc_score(lam, t, s, s2))
                        .plus(suffix[t + 1][s2]);
                    if best.map_or(true, |b| cand.better(b)) {
                        best = Some(cand);
                    }
                }
                suffix[t][s] = best.unwrap();
            }
        }
        // Forward reconstruction, preferring the smallest state on ties.
        let mut seq = Vec::with_capacity(t_len);
        let first = (0..s_len)
            .max_by(|&a, &b| {
                if suffix[0][a] == suffix[0][b] {
                    b.cmp(&a) // smaller state wins the max
                } else if suffix[0][a].better(suffix[0][b]) {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Less
                }
            })
            .unwrap();
        seq.push(first);
        for t in 0..t_len - 1 {
            let s = seq[t];
            let target = suffix[t][s];
            let node = self.node_score(lam, t, s);
            let mut chosen = None;
            for s2 in 0..s_len {
                let cand = node.plus(self.arc_score(lam, t, s, s2)).plus(suffix[t + 1][s2]);
                if cand == target {
                    chosen = Some(s2);
                    break;
                }
            }
            // Float round-off can make exact equality miss; fall back to best.
            let next = chosen.unwrap_or_else(|| {
                (0..s_len)
                    .max_by(|&a, &b| {
                        let ca = node.plus(self.arc_score(lam, t, s, a)).plus(suffix[t + 1][a]);
                        let cb = node.plus(self.arc_score(lam, t, s, b)).plus(suffix[t + 1][b]);
                        if ca == cb {
                            b.cmp(&a)
                        } else if ca.better(cb) {
                            std::cmp::Ordering::Greater
                        } else {
                            std::cmp::Ordering::Less
                        }
                    })
                    .unwrap()
            });
            seq.push(next);
        }
        seq
    }

    fn answer_for(&self, seq: &[usize], lam: Lambda) -> OracleAnswer {
        let h = self.h_offset + self.inst.score_of(seq) - self.inst.score_of(&self.inst.true_label);
        let g = self.inst.hamming_of(seq);
        OracleAnswer::at(LabelPoint::new(self.inst.encode(seq), h, g), lam)
    }

    /// Top-k sequences under the λ-augmented score, best first; ties ordered
    /// by the smaller sequence id. Exact list decoding via backward DP.
    pub fn k_best(&self, lam: Lambda, k: usize) -> Vec<Vec<usize>> {
        let (t_len, s_len) = (self.inst.length, self.inst.num_states);
        let space = self.inst.label_count();
        let k = k.min(space as usize).max(1);
        // candidate: (score, suffix id) plus the suffix states for extraction
        #[derive(Clone)]
        struct Cand {
            score: Score2,
            suffix_id: u64,
            states: Vec<usize>,
        }
        let order = |a: &Cand, b: &Cand| -> std::cmp::Ordering {
            if a.score == b.score {
                a.suffix_id.cmp(&b.suffix_id)
            } else if a.score.better(b.score) {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            }
        };
        let mut lists: Vec<Vec<Cand>> = vec![Vec::new(); s_len];
        for s in 0..s_len {
            lists[s].push(Cand {
                score: self.node_score(lam, t_len - 1, s),
                suffix_id: s as u64,
                states: vec![s],
            });
        }
        for t in (0..t_len - 1).rev() {
            let mut next: Vec<Vec<Cand>> = vec![Vec::new(); s_len];
            for s in 0..s_len {
                let node = self.node_score(lam, t, s);
                let mut pool: Vec<Cand> = Vec::new();
                for s2 in 0..s_len {
                    let arc = self.arc_score(lam, t, s, s2);
                    for c in &lists[s2] {
                        let mut states = Vec::with_capacity(c.states.len() + 1);
                        states.push(s);
                        states.extend_from_slice(&c.states);
                        pool.push(Cand {
                            score: node.plus(arc).plus(c.score),
                            suffix_id: s as u64
                                * (self.inst.num_states as u64)
                                    .pow((t_len - 1 - t) as u32)
                                + c.suffix_id,
                            states,
                        });
                    }
                }
                pool.sort_by(order);
                pool.truncate(k);
                next[s] = pool;
            }
            lists = next;
        }
        let mut all: Vec<Cand> = lists.into_iter().flatten().collect();
        all.sort_by(order);
        all.truncate(k);
        all.into_iter().map(|c| c.states).collect()
    }
}

impl LambdaSpace for ChainOracle<'_> {
    fn lambda_oracle(&self, lam: Lambda) -> OracleAnswer {
        let seq = self.viterbi(lam);
        self.answer_for(&seq, lam)
    }

    fn constrained_lambda_oracle(
        &self,
        _lam: f64,
        _window: &SlopeWindow,
    ) -> Result<Option<OracleAnswer>, OracleError> {
        // Slope windows do not decompose over positions.
        Err(OracleError::UnsupportedBackend)
    }

    fn banlist_oracle(
        &self,
        lam: Lambda,
        banned: &BTreeSet<LabelId>,
    ) -> Result<OracleAnswer, OracleError> {
        let space = self.inst.label_count();
        if banned.len() as u64 >= space {
            return Err(OracleError::Exhausted);
        }
        let mut k = banned.len() + 1;
        loop {
            let seqs = self.k_best(lam, k);
            for seq in &seqs {
                if !banned.contains(&self.inst.encode(seq)) {
                    return Ok(self.answer_for(seq, lam));
                }
            }
            if k as u64 >= space {
                return Err(OracleError::Exhausted);
            }
            k = (k * 2).min(space as usize);
        }
    }

    fn point_of(&self, id: LabelId) -> Option<LabelPoint> {
        if id >= self.inst.label_count() {
            return None;
        }
        let seq = self.inst.decode(id);
        let h = self.h_offset + self.inst.score_of(&seq)
            - self.inst.score_of(&self.inst.true_label);
        Some(LabelPoint::new(id, h, self.inst.hamming_of(&seq)))
    }

    fn num_labels(&self) -> u64 {
        self.inst.label_count()
    }

    fn g_range(&self) -> (f64, f64) {
        (0.0, self.inst.length as f64)
    }
}
