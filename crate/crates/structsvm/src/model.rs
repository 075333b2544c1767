//! Linear structured models over three label-space kinds: state chains,
//! flat multi-label sets, and single-label hierarchies. The model owns the
//! weight vector and the feature-map conventions; λ-oracle views over
//! concrete examples are built here.

use crate::geometry::LabelPoint;
use crate::hierarchy::{HierarchySpec, NodeSet};
use crate::loss::{BiCriteriaLoss, LossFamily};
use crate::oracle::{
    ChainInstance, LabelId, Lambda, LambdaSpace, OracleAnswer, OracleError, SlopeWindow,
};
use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad model file: {0}")]
    Parse(String),
    #[error("model kind needs a hierarchy file to load")]
    MissingHierarchy,
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
}

/// A sparse feature vector: (index, value) pairs.
pub type SparseVec = Vec<(usize, f64)>;

/// A chain example: per-position features and the true state sequence.
#[derive(Debug, Clone)]
pub struct SeqExample {
    pub features: Vec<SparseVec>,
    pub states: Vec<usize>,
}

/// A multi-label example.
#[derive(Debug, Clone)]
pub struct MultiLabelExample {
    pub features: SparseVec,
    pub labels: BTreeSet<u32>,
}

/// A single-label hierarchical example (the label is a leaf node).
#[derive(Debug, Clone)]
pub struct HierExample {
    pub features: SparseVec,
    pub leaf: usize,
}

/// A dataset of one of the three kinds.
#[derive(Debug, Clone)]
pub enum Dataset {
    Chain {
        dim: usize,
        num_states: usize,
        examples: Vec<SeqExample>,
    },
    MultiLabel {
        dim: usize,
        num_labels: usize,
        examples: Vec<MultiLabelExample>,
    },
    Hier {
        dim: usize,
        spec: HierarchySpec,
        examples: Vec<HierExample>,
    },
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Chain { examples, .. } => examples.len(),
            Dataset::MultiLabel { examples, .. } => examples.len(),
            Dataset::Hier { examples, .. } => examples.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Chain {
        num_states: usize,
        feature_dim: usize,
    },
    FlatMultiLabel {
        num_labels: usize,
        feature_dim: usize,
    },
    Hierarchical {
        spec: HierarchySpec,
        feature_dim: usize,
    },
}

/// Linear weights plus the decomposable feature-map conventions.
///
/// Weight layout: chains store unary blocks `[state][feature]` followed by
/// the transition matrix `[state][state]`; multi-label stores
/// `[label][feature]`; hierarchies store `[node][feature]` with the per-node
/// α kept alongside (the potential of node n is √α_n·W_n·x).
#[derive(Debug, Clone)]
pub struct StructuredModel {
    pub kind: ModelKind,
    pub weights: Vec<f64>,
    /// Per-node α for hierarchical models; empty otherwise.
    pub alpha: Vec<f64>,
}

fn dot(w: &[f64], offset: usize, x: &SparseVec) -> f64 {
    x.iter().map(|&(i, v)| w[offset + i] * v).sum()
}

impl StructuredModel {
    pub fn new_zeroed(kind: ModelKind) -> Self {
        let (len, alpha) = match &kind {
            ModelKind::Chain {
                num_states,
                feature_dim,
            } => (num_states * feature_dim + num_states * num_states, vec![]),
            ModelKind::FlatMultiLabel {
                num_labels,
                feature_dim,
            } => (num_labels * feature_dim, vec![]),
            ModelKind::Hierarchical { spec, feature_dim } => {
                (spec.num_nodes() * feature_dim, vec![1.0; spec.num_nodes()])
            }
        };
        StructuredModel {
            kind,
            weights: vec![0.0; len],
            alpha,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match &self.kind {
            ModelKind::Chain { feature_dim, .. } => *feature_dim,
            ModelKind::FlatMultiLabel { feature_dim, .. } => *feature_dim,
            ModelKind::Hierarchical { feature_dim, .. } => *feature_dim,
        }
    }

    /// Index of a transition weight (chains only).
    pub fn trans_index(&self, s: usize, s2: usize) -> usize {
        match &self.kind {
            ModelKind::Chain {
                num_states,
                feature_dim,
            } => num_states * feature_dim + s * num_states + s2,
            _ => unreachable!("transition weights exist on chains only"),
        }
    }

    /// Instantiates the chain scores for one example.
    pub fn chain_instance(&self, ex: &SeqExample) -> ChainInstance {
        let (s_num, d) = match &self.kind {
            ModelKind::Chain {
                num_states,
                feature_dim,
            } => (*num_states, *feature_dim),
            _ => panic!("not a chain model"),
        };
        let len = ex.features.len();
        let unary: Vec<Vec<f64>> = (0..len)
            .map(|t| {
                (0..s_num)
                    .map(|s| dot(&self.weights, s * d, &ex.features[t]))
                    .collect()
            })
            .collect();
        let pairwise: Vec<Vec<Vec<f64>>> = (0..len.saturating_sub(1))
            .map(|_| {
                (0..s_num)
                    .map(|s| {
                        (0..s_num)
                            .map(|s2| self.weights[self.trans_index(s, s2)])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ChainInstance::new(unary, pairwise, ex.states.clone())
    }

    /// Per-label scores W_l·x (multi-label models).
    pub fn label_scores(&self, x: &SparseVec) -> Vec<f64> {
        match &self.kind {
            ModelKind::FlatMultiLabel {
                num_labels,
                feature_dim,
            } => (0..*num_labels)
                .map(|l| dot(&self.weights, l * feature_dim, x))
                .collect(),
            _ => panic!("not a multi-label model"),
        }
    }

    /// Raw per-node potentials W_n·x (hierarchical models; α not applied).
    pub fn node_potentials(&self, x: &SparseVec) -> Vec<f64> {
        match &self.kind {
            ModelKind::Hierarchical { spec, feature_dim } => (0..spec.num_nodes())
                .map(|n| dot(&self.weights, n * feature_dim, x))
                .collect(),
            _ => panic!("not a hierarchical model"),
        }
    }

    /// √α-scaled potential of a label (sum over member nodes).
    pub fn hier_label_potential(&self, pots: &[f64], y: NodeSet) -> f64 {
        (0..pots.len())
            .filter(|&n| y >> n & 1 == 1)
            .map(|n| self.alpha[n].sqrt() * pots[n])
            .sum()
    }

    /// Plain argmax prediction for a chain example (ties break to the
    /// smallest state sequence).
    pub fn predict_chain(&self, ex: &SeqExample) -> Vec<usize> {
        let inst = self.chain_instance(ex);
        let oracle = crate::oracle::ChainOracle::new(&inst, 0.0);
        let ans = oracle.lambda_oracle(Lambda::Finite(0.0));
        inst.decode(ans.point.label_id)
    }

    /// Per-label threshold prediction for a multi-label example.
    pub fn predict_multilabel(&self, ex: &MultiLabelExample) -> BTreeSet<u32> {
        self.label_scores(&ex.features)
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0.0)
            .map(|(l, _)| l as u32)
            .collect()
    }

    /// Leaf with the largest path potential (ties break to the smallest id).
    pub fn predict_hier(&self, ex: &HierExample) -> usize {
        let spec = match &self.kind {
            ModelKind::Hierarchical { spec, .. } => spec,
            _ => panic!("not a hierarchical model"),
        };
        let pots = self.node_potentials(&ex.features);
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for &l in spec.leaves() {
            let y = spec.label_of_leaves([l]);
            let v = self.hier_label_potential(&pots, y);
            if v > best.0 {
                best = (v, l);
            }
        }
        best.1
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        match &self.kind {
            ModelKind::Chain {
                num_states,
                feature_dim,
            } => writeln!(f, "structsvm-model v1 chain {num_states} {feature_dim}")?,
            ModelKind::FlatMultiLabel {
                num_labels,
                feature_dim,
            } => writeln!(
                f,
                "structsvm-model v1 multilabel {num_labels} {feature_dim}"
            )?,
            ModelKind::Hierarchical { spec, feature_dim } => writeln!(
                f,
                "structsvm-model v1 hier {} {feature_dim}",
                spec.num_nodes()
            )?,
        }
        for a in &self.alpha {
            writeln!(f, "{a:.16e}")?;
        }
        for w in &self.weights {
            writeln!(f, "{w:.16e}")?;
        }
        Ok(())
    }

    /// Loads a model file; hierarchical kinds need the hierarchy supplied.
    pub fn load(path: &Path, hierarchy: Option<&HierarchySpec>) -> Result<Self, ModelError> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut lines = f.lines();
        let header = lines
            .next()
            .ok_or_else(|| ModelError::Parse("empty file".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "structsvm-model" || parts[1] != "v1" {
            return Err(ModelError::Parse(format!("bad header: {header}")));
        }
        let a: usize = parts[3]
            .parse()
            .map_err(|_| ModelError::Parse("bad dims".into()))?;
        let d: usize = parts[4]
            .parse()
            .map_err(|_| ModelError::Parse("bad dims".into()))?;
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            values.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|_| ModelError::Parse(format!("bad weight line: {line}")))?,
            );
        }
        let (kind, n_alpha, n_weights) = match parts[2] {
            "chain" => (
                ModelKind::Chain {
                    num_states: a,
                    feature_dim: d,
                },
                0,
                a * d + a * a,
            ),
            "multilabel" => (
                ModelKind::FlatMultiLabel {
                    num_labels: a,
                    feature_dim: d,
                },
                0,
                a * d,
            ),
            "hier" => {
                let spec = hierarchy.ok_or(ModelError::MissingHierarchy)?;
                if spec.num_nodes() != a {
                    return Err(ModelError::Dimensions(format!(
                        "hierarchy has {} nodes, model expects {a}",
                        spec.num_nodes()
                    )));
                }
                (
                    ModelKind::Hierarchical {
                        spec: spec.clone(),
                        feature_dim: d,
                    },
                    a,
                    a * d,
                )
            }
            other => return Err(ModelError::Parse(format!("unknown kind {other}"))),
        };
        if values.len() != n_alpha + n_weights {
            return Err(ModelError::Dimensions(format!(
                "expected {} values, got {}",
                n_alpha + n_weights,
                values.len()
            )));
        }
        let alpha = values[..n_alpha].to_vec();
        let weights = values[n_alpha..].to_vec();
        Ok(StructuredModel {
            kind,
            weights,
            alpha,
        })
    }
}

/// Factor convention of a multi-label oracle view.
#[derive(Debug, Clone, Copy)]
pub enum MultiFactorMode {
    /// h = offset + margin, g = set Hamming.
    MarginHamming { offset: f64 },
    /// h = Hamming + margin, g = −(|y| + |y_true|).
    MicroF1,
}

/// λ-oracle over all 2^L label sets of a multi-label example; label ids are
/// bitmasks. Queries decompose per label, so each call is O(L).
pub struct MultiLabelOracle {
    scores: Vec<f64>,
    truth_mask: u64,
    truth_size: usize,
    truth_score: f64,
    mode: MultiFactorMode,
}

impl MultiLabelOracle {
    pub fn new(model: &StructuredModel, ex: &MultiLabelExample, mode: MultiFactorMode) -> Self {
        let scores = model.label_scores(&ex.features);
        assert!(scores.len() <= 63, "multi-label oracle is bitmask-bound");
        let truth_mask = ex.labels.iter().fold(0u64, |m, &l| m | 1 << l);
        let truth_score = ex.labels.iter().map(|&l| scores[l as usize]).sum();
        MultiLabelOracle {
            scores,
            truth_mask,
            truth_size: ex.labels.len(),
            truth_score,
            mode,
        }
    }

    pub fn point_for_mask(&self, mask: u64) -> LabelPoint {
        let l = self.scores.len();
        let mut score = 0.0;
        let mut hamming = 0usize;
        let mut size = 0usize;
        for i in 0..l {
            let inset = mask >> i & 1 == 1;
            if inset {
                score += self.scores[i];
                size += 1;
            }
            if inset != (self.truth_mask >> i & 1 == 1) {
                hamming += 1;
            }
        }
        let margin = score - self.truth_score;
        let (h, g) = match self.mode {
            MultiFactorMode::MarginHamming { offset } => (offset + margin, hamming as f64),
            MultiFactorMode::MicroF1 => {
                (hamming as f64 + margin, -((size + self.truth_size) as f64))
            }
        };
        LabelPoint::new(mask, h, g)
    }

    pub fn num_base_labels(&self) -> usize {
        self.scores.len()
    }
}

impl LambdaSpace for MultiLabelOracle {
    fn lambda_oracle(&self, lam: Lambda) -> OracleAnswer {
        // per-label independent inclusion under h + λg; the Inf sentinel
        // maximizes g first, h second; ties leave the label out so the
        // smallest mask wins
        let l = self.scores.len();
        let mut mask = 0u64;
        for i in 0..l {
            let in_truth = self.truth_mask >> i & 1 == 1;
            let (h_in, g_in, h_out, g_out) = match self.mode {
                MultiFactorMode::MarginHamming { .. } => (
                    self.scores[i],
                    if in_truth { 0.0 } else { 1.0 },
                    0.0,
                    if in_truth { 1.0 } else { 0.0 },
                ),
                MultiFactorMode::MicroF1 => (
                    self.scores[i] + if in_truth { 0.0 } else { 1.0 },
                    -1.0,
                    if in_truth { 1.0 } else { 0.0 },
                    0.0,
                ),
            };
            let include = match lam {
                Lambda::Finite(lv) => h_in + lv * g_in > h_out + lv * g_out,
                Lambda::Inf => g_in > g_out || (g_in == g_out && h_in > h_out),
            };
            if include {
                mask |= 1 << i;
            }
        }
        OracleAnswer::at(self.point_for_mask(mask), lam)
    }

    fn constrained_lambda_oracle(
        &self,
        _lam: f64,
        _window: &SlopeWindow,
    ) -> Result<Option<OracleAnswer>, OracleError> {
        // slope windows do not decompose per label
        Err(OracleError::UnsupportedBackend)
    }

    fn banlist_oracle(
        &self,
        lam: Lambda,
        banned: &BTreeSet<LabelId>,
    ) -> Result<OracleAnswer, OracleError> {
        let total = 1u64 << self.scores.len();
        if banned.len() as u64 >= total {
            return Err(OracleError::Exhausted);
        }
        if self.scores.len() > 20 {
            return Err(OracleError::UnsupportedBackend);
        }
        let mut best: Option<(LabelPoint, (f64, f64))> = None;
        for mask in 0..total {
            if banned.contains(&mask) {
                continue;
            }
            let p = self.point_for_mask(mask);
            let key = match lam {
                Lambda::Finite(lv) => (p.h + lv * p.g, 0.0),
                Lambda::Inf => (p.g, p.h),
            };
            match &best {
                Some((_, bk)) if !(key.0 > bk.0 || (key.0 == bk.0 && key.1 > bk.1)) => {}
                _ => best = Some((p, key)),
            }
        }
        best.map(|(p, _)| OracleAnswer::at(p, lam))
            .ok_or(OracleError::Exhausted)
    }

    fn point_of(&self, id: LabelId) -> Option<LabelPoint> {
        if self.scores.len() < 64 && id >> self.scores.len() != 0 {
            return None;
        }
        Some(self.point_for_mask(id))
    }

    fn num_labels(&self) -> u64 {
        1u64 << self.scores.len()
    }

    fn g_range(&self) -> (f64, f64) {
        match self.mode {
            MultiFactorMode::MarginHamming { .. } => (0.0, self.scores.len() as f64),
            MultiFactorMode::MicroF1 => (
                -((self.scores.len() + self.truth_size) as f64),
                -(self.truth_size as f64),
            ),
        }
    }
}

/// Structural error used by the hierarchical oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HierErrorMode {
    /// √(Σ α over the symmetric difference).
    Normalized,
    /// Plain node Hamming |y Δ y'| (the unnormalized baseline).
    NodeHamming,
    /// 0/1 error: unit margin for any wrong leaf.
    ZeroOne,
}

/// λ-oracle over the leaves of a hierarchy: h = margin of the √α-scaled
/// potential, g = structural error. Label ids are leaf node ids. Being a
/// plain enumeration it also serves constrained queries.
pub struct HierOracle {
    points: Vec<LabelPoint>,
}

impl HierOracle {
    pub fn new(model: &StructuredModel, ex: &HierExample) -> Self {
        Self::with_error(model, ex, HierErrorMode::Normalized)
    }

    pub fn with_error(model: &StructuredModel, ex: &HierExample, mode: HierErrorMode) -> Self {
        let spec = match &model.kind {
            ModelKind::Hierarchical { spec, .. } => spec,
            _ => panic!("not a hierarchical model"),
        };
        let pots = model.node_potentials(&ex.features);
        let y_true = spec.label_of_leaves([ex.leaf]);
        let true_pot = model.hier_label_potential(&pots, y_true);
        let points = spec
            .leaves()
            .iter()
            .map(|&l| {
                let y = spec.label_of_leaves([l]);
                let h = model.hier_label_potential(&pots, y) - true_pot;
                let g = match mode {
                    HierErrorMode::Normalized => {
                        crate::hierarchy::normalized_error(spec, &model.alpha, y, y_true)
                            .expect("leaf labels are valid")
                    }
                    HierErrorMode::NodeHamming => (y ^ y_true).count_ones() as f64,
                    HierErrorMode::ZeroOne => {
                        if y == y_true {
                            0.0
                        } else {
                            1.0
                        }
                    }
                };
                LabelPoint::new(l as LabelId, h, g)
            })
            .collect();
        HierOracle { points }
    }

    pub fn points(&self) -> &[LabelPoint] {
        &self.points
    }

    fn scan<F: Fn(&LabelPoint) -> bool>(&self, lam: Lambda, keep: F) -> Option<LabelPoint> {
        let mut best: Option<(LabelPoint, (f64, f64))> = None;
        for p in &self.points {
            if !keep(p) {
                continue;
            }
            let key = match lam {
                Lambda::Finite(lv) => (p.h + lv * p.g, 0.0),
                Lambda::Inf => (p.g, p.h),
            };
            match &best {
                Some((_, bk)) if !(key.0 > bk.0 || (key.0 == bk.0 && key.1 > bk.1)) => {}
                _ => best = Some((*p, key)),
            }
        }
        best.map(|(p, _)| p)
    }
}

impl LambdaSpace for HierOracle {
    fn lambda_oracle(&self, lam: Lambda) -> OracleAnswer {
        let p = self.scan(lam, |_| true).expect("hierarchy has leaves");
        OracleAnswer::at(p, lam)
    }

    fn constrained_lambda_oracle(
        &self,
        lam: f64,
        window: &SlopeWindow,
    ) -> Result<Option<OracleAnswer>, OracleError> {
        Ok(self
            .scan(Lambda::Finite(lam), |p| window.admits(p.h, p.g))
            .map(|p| OracleAnswer::at(p, Lambda::Finite(lam))))
    }

    fn banlist_oracle(
        &self,
        lam: Lambda,
        banned: &BTreeSet<LabelId>,
    ) -> Result<OracleAnswer, OracleError> {
        self.scan(lam, |p| !banned.contains(&p.label_id))
            .map(|p| OracleAnswer::at(p, lam))
            .ok_or(OracleError::Exhausted)
    }

    fn point_of(&self, id: LabelId) -> Option<LabelPoint> {
        self.points.iter().find(|p| p.label_id == id).copied()
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

/// The multi-label factor mode a loss family calls for.
pub fn factor_mode_for(loss: &BiCriteriaLoss, offset: f64) -> MultiFactorMode {
    match loss.family() {
        LossFamily::MicroF1Surrogate => MultiFactorMode::MicroF1,
        _ => MultiFactorMode::MarginHamming { offset },
    }
}
