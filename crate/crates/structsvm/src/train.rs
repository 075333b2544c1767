//! SGD training of the regularized structured-SVM objective with a pluggable
//! surrogate loss and loss-augmented inference method, plus prediction-side
//! metrics.

use crate::hull::{convex_hull_search_full, FractionalLabel};
use crate::loss::BiCriteriaLoss;
use crate::model::{
    factor_mode_for, Dataset, HierErrorMode, HierExample, ModelKind, MultiLabelExample,
    MultiLabelOracle, SeqExample, StructuredModel,
};
use crate::oracle::{ChainOracle, EnumerationOracle, LabelId, Lambda, LambdaSpace};
use crate::search::{angular_search, binary_search_sgd, bisecting_search};
use crate::geometry::LabelPoint;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("inference failed on example {example}: {message}")]
    InferenceFailure { example: usize, message: String },
    #[error("dataset is empty")]
    EmptyData,
    #[error("label space too large for {0} inference ({1} labels)")]
    SpaceTooLarge(&'static str, u64),
    #[error("gold/prediction lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Loss-augmented inference backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferenceMethod {
    /// One λ-oracle call at λ = 1 (margin-rescaling argmax).
    MarginArgmax,
    /// Binary search on the convex upper bound F̄ (product objective).
    BinarySearch,
    /// Bisecting search (product objective).
    Bisecting,
    /// Angular search with the constrained oracle; enumeration-backed.
    Angular,
    /// Convex hull search under the configured bi-criteria loss.
    ConvexHull,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub reg_c: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub inference: InferenceMethod,
    pub loss: BiCriteriaLoss,
    pub seed: u64,
    /// Optional 1/(1 + decay·t) learning-rate schedule.
    pub lr_decay: Option<f64>,
    /// Reuse each example's previous hull vertices as a warm start.
    pub warm_start_hull: bool,
    /// Structural error for hierarchical label spaces.
    pub hier_error: HierErrorMode,
}

impl TrainConfig {
    pub fn new(loss: BiCriteriaLoss, inference: InferenceMethod) -> Self {
        TrainConfig {
            reg_c: 1e-3,
            learning_rate: 0.1,
            epochs: 10,
            inference,
            loss,
            seed: 0,
            lr_decay: None,
            warm_start_hull: false,
            hier_error: HierErrorMode::Normalized,
        }
    }
}

/// Aggregate counters from a training run.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainStats {
    pub inferences: usize,
    pub oracle_calls: usize,
}

/// Per-microlabel prediction quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub hamming: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

/// Exact-match, per-microlabel error rate, micro-averaged and macro-averaged
/// F1 over aligned gold/prediction label sets. Absent labels score 1 under
/// the 0/0 convention.
pub fn evaluate(
    gold: &[BTreeSet<u32>],
    pred: &[BTreeSet<u32>],
    num_labels: usize,
) -> Result<Metrics, TrainError> {
    if gold.len() != pred.len() {
        return Err(TrainError::LengthMismatch(gold.len(), pred.len()));
    }
    if gold.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let n = gold.len() as f64;
    let mut exact = 0usize;
    let mut hamming = 0.0;
    let mut inter_sum = 0usize;
    let mut size_sum = 0usize;
    let mut tp = vec![0usize; num_labels];
    let mut fp = vec![0usize; num_labels];
    let mut fn_ = vec![0usize; num_labels];
    for (g, p) in gold.iter().zip(pred) {
        if g == p {
            exact += 1;
        }
        let inter = g.intersection(p).count();
        hamming += (g.len() + p.len() - 2 * inter) as f64 / num_labels as f64;
        inter_sum += inter;
        size_sum += g.len() + p.len();
        for &l in p {
            if g.contains(&l) {
                tp[l as usize] += 1;
            } else {
                fp[l as usize] += 1;
            }
        }
        for &l in g {
            if !p.contains(&l) {
                fn_[l as usize] += 1;
            }
        }
    }
    let micro_f1 = if size_sum == 0 {
        1.0
    } else {
        2.0 * inter_sum as f64 / size_sum as f64
    };
    let macro_f1 = (0..num_labels)
        .map(|l| {
            let denom = 2 * tp[l] + fp[l] + fn_[l];
            if denom == 0 {
                1.0
            } else {
                2.0 * tp[l] as f64 / denom as f64
            }
        })
        .sum::<f64>()
        / num_labels as f64;
    Ok(Metrics {
        accuracy: exact as f64 / n,
        hamming: hamming / n,
        micro_f1,
        macro_f1,
    })
}

/// Which example an update refers to (the feature map depends on the kind).
pub enum ExampleRef<'a> {
    Chain(&'a SeqExample),
    Multi(&'a MultiLabelExample),
    Hier(&'a HierExample),
}

const COEF_CLIP: f64 = 1e6;

/// One subgradient step: shrinks weights by the regularizer and moves along
/// the ∂ψ/∂h-weighted feature difference of each endpoint of the (possibly
/// fractional) inference result. The result's points use the h = m(y)
/// convention.
pub fn subgradient_step(
    model: &mut StructuredModel,
    example: &ExampleRef,
    result: &FractionalLabel,
    loss: &BiCriteriaLoss,
    lr: f64,
    reg_c: f64,
) {
    let shrink = 1.0 - lr * reg_c;
    for w in model.weights.iter_mut() {
        *w *= shrink;
    }
    let endpoints = result.weighted_endpoints();
    // borrow dance: collect the sparse deltas first
    let mut updates: Vec<(usize, f64)> = Vec::new();
    for (point, weight) in endpoints {
        if weight == 0.0 {
            continue;
        }
        let coef = loss
            .psi_grad(point.h, point.g)
            .map(|(dh, _)| dh)
            .unwrap_or(0.0)
            .clamp(0.0, COEF_CLIP);
        if coef == 0.0 {
            continue;
        }
        let scale = lr * weight * coef;
        match example {
            ExampleRef::Chain(ex) => {
                let (s_num, d) = match &model.kind {
                    ModelKind::Chain {
                        num_states,
                        feature_dim,
                    } => (*num_states, *feature_dim),
                    _ => panic!("kind mismatch"),
                };
                let mut decode = vec![0usize; ex.states.len()];
                let mut id = point.label_id;
                for t in (0..ex.states.len()).rev() {
                    decode[t] = (id % s_num as u64) as usize;
                    id /= s_num as u64;
                }
                for t in 0..ex.states.len() {
                    let (yhat, ytrue) = (decode[t], ex.states[t]);
                    if yhat != ytrue {
                        for &(i, v) in &ex.features[t] {
                            updates.push((yhat * d + i, -scale * v));
                            updates.push((ytrue * d + i, scale * v));
                        }
                    }
                    if t + 1 < ex.states.len() {
                        let (a, b) = (decode[t + 1], ex.states[t + 1]);
                        if yhat != ytrue || a != b {
                            updates.push((model.trans_index(yhat, a), -scale));
                            updates.push((model.trans_index(ytrue, b), scale));
                        }
                    }
                }
            }
            ExampleRef::Multi(ex) => {
                let d = model.feature_dim();
                let truth: u64 = ex.labels.iter().fold(0, |m, &l| m | 1 << l);
                let diff = point.label_id ^ truth;
                let mut bits = diff;
                while bits != 0 {
                    let l = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let sign = if point.label_id >> l & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                    for &(i, v) in &ex.features {
                        updates.push((l * d + i, sign * scale * v));
                    }
                }
            }
            ExampleRef::Hier(ex) => {
                let (spec, d) = match &model.kind {
                    ModelKind::Hierarchical { spec, feature_dim } => (spec, *feature_dim),
                    _ => panic!("kind mismatch"),
                };
                let y_hat = spec.label_of_leaves([point.label_id as usize]);
                let y_true = spec.label_of_leaves([ex.leaf]);
                let diff = y_hat ^ y_true;
                let mut bits = diff;
                while bits != 0 {
                    let n = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let root_a = model.alpha[n].sqrt();
                    let sign = if y_hat >> n & 1 == 1 { -1.0 } else { 1.0 };
                    for &(i, v) in &ex.features {
                        updates.push((n * d + i, sign * scale * root_a * v));
                    }
                }
            }
        }
    }
    for (i, dv) in updates {
        model.weights[i] += dv;
    }
}

fn shift_h(frac: FractionalLabel, delta: f64) -> FractionalLabel {
    let mv = |p: LabelPoint| LabelPoint::new(p.label_id, p.h + delta, p.g);
    match frac {
        FractionalLabel::Vertex(v) => FractionalLabel::Vertex(mv(v)),
        FractionalLabel::Edge { p, q, t } => FractionalLabel::Edge {
            p: mv(p),
            q: mv(q),
            t,
        },
    }
}

/// Runs the configured inference for one example; the returned points use the
/// h = m(y) convention regardless of backend.
fn infer(
    model: &StructuredModel,
    data: &Dataset,
    idx: usize,
    config: &TrainConfig,
    hull_cache: &mut BTreeMap<usize, Vec<LabelId>>,
    stats: &mut TrainStats,
) -> Result<FractionalLabel, TrainError> {
    let fail = |message: String| TrainError::InferenceFailure {
        example: idx,
        message,
    };
    stats.inferences += 1;
    let mut run_searches = |oracle: &dyn LambdaSpace,
                        truth_id: LabelId,
                        stats: &mut TrainStats|
     -> Result<FractionalLabel, TrainError> {
        match config.inference {
            InferenceMethod::MarginArgmax => unreachable!("handled by caller"),
            InferenceMethod::BinarySearch => {
                let r = binary_search_sgd(oracle, 1e-2, 1e2, 1e-3);
                stats.oracle_calls += r.oracle_calls;
                Ok(FractionalLabel::Vertex(
                    r.best.ok_or_else(|| fail("binary search found no label".into()))?,
                ))
            }
            InferenceMethod::Bisecting => {
                let r = bisecting_search(oracle, 1.0, 60);
                stats.oracle_calls += r.oracle_calls;
                Ok(FractionalLabel::Vertex(
                    r.best.ok_or_else(|| fail("bisecting search found no label".into()))?,
                ))
            }
            InferenceMethod::Angular => {
                let r = angular_search(oracle, 1.0, usize::MAX, None)
                    .map_err(|e| fail(e.to_string()))?;
                stats.oracle_calls += r.oracle_calls;
                match r.best {
                    Some(p) => Ok(FractionalLabel::Vertex(p)),
                    // no label with positive Φ: the argmax is the true label
                    // and the update degenerates to the regularizer
                    None => Ok(FractionalLabel::Vertex(LabelPoint::new(
                        truth_id, 1.0, 0.0,
                    ))),
                }
            }
            InferenceMethod::ConvexHull => {
                let warm: Option<Vec<LabelId>> = if config.warm_start_hull {
                    hull_cache.get(&idx).cloned()
                } else {
                    None
                };
                let out = convex_hull_search_full(oracle, &config.loss, warm.as_deref())
                    .map_err(|e| fail(e.to_string()))?;
                stats.oracle_calls += out.oracle_calls;
                if config.warm_start_hull {
                    hull_cache.insert(idx, out.state.seen_ids().collect());
                }
                Ok(out.frac)
            }
        }
    };

    match data {
        Dataset::Chain { examples, .. } => {
            let ex = &examples[idx];
            let inst = model.chain_instance(ex);
            match config.inference {
                InferenceMethod::MarginArgmax => {
                    let oracle = ChainOracle::new(&inst, 0.0);
                    stats.oracle_calls += 1;
                    Ok(FractionalLabel::Vertex(
                        oracle.lambda_oracle(Lambda::Finite(1.0)).point,
                    ))
                }
                InferenceMethod::ConvexHull => {
                    let oracle = ChainOracle::new(&inst, 0.0);
                    let truth = inst.encode(&ex.states);
                    run_searches(&oracle, truth, stats)
                }
                InferenceMethod::Angular => {
                    // constrained queries need an enumeration view
                    if inst.label_count() > 1 << 16 {
                        return Err(TrainError::SpaceTooLarge("angular", inst.label_count()));
                    }
                    let truth = inst.encode(&ex.states);
                    let enumer = EnumerationOracle::new(inst.enumerate_points(1.0));
                    run_searches(&enumer, truth, stats).map(|f| shift_h(f, -1.0))
                }
                _ => {
                    let oracle = ChainOracle::new(&inst, 1.0);
                    let truth = inst.encode(&ex.states);
                    run_searches(&oracle, truth, stats).map(|f| shift_h(f, -1.0))
                }
            }
        }
        Dataset::MultiLabel { examples, .. } => {
            let ex = &examples[idx];
            if matches!(
                config.loss.family(),
                crate::loss::LossFamily::MicroF1Surrogate
            ) && ex.labels.is_empty()
            {
                return Err(fail("micro-f1 surrogate needs a nonempty true label set".into()));
            }
            match config.inference {
                InferenceMethod::MarginArgmax => {
                    let oracle =
                        MultiLabelOracle::new(model, ex, factor_mode_for(&config.loss, 0.0));
                    stats.oracle_calls += 1;
                    Ok(FractionalLabel::Vertex(
                        oracle.lambda_oracle(Lambda::Finite(1.0)).point,
                    ))
                }
                InferenceMethod::ConvexHull => {
                    let oracle =
                        MultiLabelOracle::new(model, ex, factor_mode_for(&config.loss, 0.0));
                    let truth = ex.labels.iter().fold(0u64, |m, &l| m | 1 << l);
                    run_searches(&oracle, truth, stats)
                }
                InferenceMethod::Angular => {
                    let oracle = MultiLabelOracle::new(
                        model,
                        ex,
                        factor_mode_for(&config.loss, 1.0),
                    );
                    if oracle.num_labels() > 1 << 16 {
                        return Err(TrainError::SpaceTooLarge("angular", oracle.num_labels()));
                    }
                    let truth = ex.labels.iter().fold(0u64, |m, &l| m | 1 << l);
                    let pts: Vec<LabelPoint> = (0..oracle.num_labels())
                        .map(|m| oracle.point_for_mask(m))
                        .collect();
                    let enumer = EnumerationOracle::new(pts);
                    run_searches(&enumer, truth, stats).map(|f| shift_h(f, -1.0))
                }
                _ => {
                    let oracle =
                        MultiLabelOracle::new(model, ex, factor_mode_for(&config.loss, 1.0));
                    let truth = ex.labels.iter().fold(0u64, |m, &l| m | 1 << l);
                    run_searches(&oracle, truth, stats).map(|f| shift_h(f, -1.0))
                }
            }
        }
        Dataset::Hier { examples, .. } => {
            let ex = &examples[idx];
            let oracle = crate::model::HierOracle::with_error(model, ex, config.hier_error);
            match config.inference {
                InferenceMethod::MarginArgmax => {
                    stats.oracle_calls += 1;
                    Ok(FractionalLabel::Vertex(
                        oracle.lambda_oracle(Lambda::Finite(1.0)).point,
                    ))
                }
                InferenceMethod::ConvexHull => run_searches(&oracle, ex.leaf as LabelId, stats),
                _ => {
                    // shift into the product convention and back
                    let pts: Vec<LabelPoint> = oracle
                        .points()
                        .iter()
                        .map(|p| LabelPoint::new(p.label_id, p.h + 1.0, p.g))
                        .collect();
                    let enumer = EnumerationOracle::new(pts);
                    run_searches(&enumer, ex.leaf as LabelId, stats).map(|f| shift_h(f, -1.0))
                }
            }
        }
    }
}

fn example_ref<'a>(data: &'a Dataset, idx: usize) -> ExampleRef<'a> {
    match data {
        Dataset::Chain { examples, .. } => ExampleRef::Chain(&examples[idx]),
        Dataset::MultiLabel { examples, .. } => ExampleRef::Multi(&examples[idx]),
        Dataset::Hier { examples, .. } => ExampleRef::Hier(&examples[idx]),
    }
}

/// Runs `epochs` SGD passes on an existing model; deterministic in the rng.
pub fn sgd_epochs(
    model: &mut StructuredModel,
    data: &Dataset,
    config: &TrainConfig,
    epochs: usize,
    rng: &mut ChaCha8Rng,
    hull_cache: &mut BTreeMap<usize, Vec<LabelId>>,
    stats: &mut TrainStats,
) -> Result<(), TrainError> {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(rng);
        for &idx in &order {
            let frac = infer(model, data, idx, config, hull_cache, stats)?;
            let lr = match config.lr_decay {
                Some(d) => config.learning_rate / (1.0 + d * t as f64),
                None => config.learning_rate,
            };
            subgradient_step(
                model,
                &example_ref(data, idx),
                &frac,
                &config.loss,
                lr,
                config.reg_c,
            );
            t += 1;
        }
    }
    Ok(())
}

/// Hierarchical training with an explicit α assignment.
pub fn sgd_train_hier_with_alpha(
    data: &Dataset,
    config: &TrainConfig,
    alpha: Vec<f64>,
) -> Result<StructuredModel, TrainError> {
    let (spec, dim) = match data {
        Dataset::Hier { spec, dim, .. } => (spec, *dim),
        _ => panic!("hierarchical dataset required"),
    };
    let mut model = StructuredModel::new_zeroed(ModelKind::Hierarchical {
        spec: spec.clone(),
        feature_dim: dim,
    });
    model.alpha = alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = BTreeMap::new();
    let mut stats = TrainStats::default();
    sgd_epochs(
        &mut model,
        data,
        config,
        config.epochs,
        &mut rng,
        &mut cache,
        &mut stats,
    )?;
    Ok(model)
}

/// Fresh training run per the config.
pub fn sgd_train(data: &Dataset, config: &TrainConfig) -> Result<StructuredModel, TrainError> {
    sgd_train_with_stats(data, config).map(|(m, _)| m)
}

pub fn sgd_train_with_stats(
    data: &Dataset,
    config: &TrainConfig,
) -> Result<(StructuredModel, TrainStats), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    let kind = match data {
        Dataset::Chain {
            dim, num_states, ..
        } => ModelKind::Chain {
            num_states: *num_states,
            feature_dim: *dim,
        },
        Dataset::MultiLabel {
            dim, num_labels, ..
        } => ModelKind::FlatMultiLabel {
            num_labels: *num_labels,
            feature_dim: *dim,
        },
        Dataset::Hier { dim, spec, .. } => ModelKind::Hierarchical {
            spec: spec.clone(),
            feature_dim: *dim,
        },
    };
    let mut model = StructuredModel::new_zeroed(kind);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = BTreeMap::new();
    let mut stats = TrainStats::default();
    sgd_epochs(
        &mut model,
        data,
        config,
        config.epochs,
        &mut rng,
        &mut cache,
        &mut stats,
    )?;
    Ok((model, stats))
}

/// Exact regularized objective C/2·‖w‖² + mean over examples of max_y ψ,
/// computed by enumeration (desk scale only; used by tests and reports).
pub fn regularized_objective(
    model: &StructuredModel,
    data: &Dataset,
    loss: &BiCriteriaLoss,
    reg_c: f64,
) -> f64 {
    let reg: f64 = 0.5 * reg_c * model.weights.iter().map(|w| w * w).sum::<f64>();
    let mut total = 0.0;
    let psi_of = |p: &LabelPoint| loss.psi_value(p.h, p.g).unwrap_or(f64::NEG_INFINITY);
    match data {
        Dataset::Chain { examples, .. } => {
            for ex in examples {
                let inst = model.chain_instance(ex);
                assert!(inst.label_count() <= 1 << 16);
                let best = inst
                    .enumerate_points(0.0)
                    .iter()
                    .map(psi_of)
                    .fold(f64::MIN, f64::max);
                total += best;
            }
        }
        Dataset::MultiLabel { examples, .. } => {
            for ex in examples {
                let oracle = MultiLabelOracle::new(model, ex, factor_mode_for(loss, 0.0));
                let best = (0..oracle.num_labels())
                    .map(|m| psi_of(&oracle.point_for_mask(m)))
                    .fold(f64::MIN, f64::max);
                total += best;
            }
        }
        Dataset::Hier { examples, .. } => {
            for ex in examples {
                let oracle = crate::model::HierOracle::new(model, ex);
                let best = oracle.points().iter().map(psi_of).fold(f64::MIN, f64::max);
                total += best;
            }
        }
    }
    reg + total / data.len() as f64
}

/// Dataset-wide prediction as micro-label sets (chains map position-state
/// pairs, hierarchies map to their leaf).
pub fn predict_sets(model: &StructuredModel, data: &Dataset) -> Vec<BTreeSet<u32>> {
    match data {
        Dataset::Chain {
            examples,
            num_states,
            ..
        } => examples
            .iter()
            .map(|ex| {
                model
                    .predict_chain(ex)
                    .iter()
                    .enumerate()
                    .map(|(t, &s)| (t * num_states + s) as u32)
                    .collect()
            })
            .collect(),
        Dataset::MultiLabel { examples, .. } => examples
            .iter()
            .map(|ex| model.predict_multilabel(ex))
            .collect(),
        Dataset::Hier { examples, .. } => examples
            .iter()
            .map(|ex| [model.predict_hier(ex) as u32].into())
            .collect(),
    }
}

/// Gold labels in the same micro-label encoding as [`predict_sets`].
pub fn gold_sets(data: &Dataset) -> Vec<BTreeSet<u32>> {
    match data {
        Dataset::Chain {
            examples,
            num_states,
            ..
        } => examples
            .iter()
            .map(|ex| {
                ex.states
                    .iter()
                    .enumerate()
                    .map(|(t, &s)| (t * num_states + s) as u32)
                    .collect()
            })
            .collect(),
        Dataset::MultiLabel { examples, .. } => {
            examples.iter().map(|ex| ex.labels.clone()).collect()
        }
        Dataset::Hier { examples, .. } => examples
            .iter()
            .map(|ex| [ex.leaf as u32].into())
            .collect(),
    }
}

/// Universe size of the micro-label encoding.
pub fn microlabel_universe(data: &Dataset) -> usize {
    match data {
        Dataset::Chain {
            examples,
            num_states,
            ..
        } => {
            examples
                .iter()
                .map(|e| e.states.len())
                .max()
                .unwrap_or(0)
                * num_states
        }
        Dataset::MultiLabel { num_labels, .. } => *num_labels,
        Dataset::Hier { spec, .. } => spec.num_nodes(),
    }
}

/// The four hierarchy training variants compared in the synthetic study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HierVariant {
    /// α concentrated on the leaves: the flat multi-class baseline.
    Flat,
    /// All-ones α with plain node-Hamming margins: unnormalized HSVM.
    Hsvm,
    /// ρ-program α with normalized margins.
    Nhsvm { rho: f64 },
    /// Shared-norm training: SGD blocks alternating with the exact α step.
    Ssvm { rho_init: f64, alternation_period: usize },
}

fn variant_alpha(spec: &crate::hierarchy::HierarchySpec, variant: HierVariant) -> Vec<f64> {
    match variant {
        HierVariant::Flat => {
            let mut alpha = vec![0.0; spec.num_nodes()];
            for &l in spec.leaves() {
                alpha[l] = 1.0;
            }
            alpha
        }
        HierVariant::Hsvm => vec![1.0; spec.num_nodes()],
        HierVariant::Nhsvm { rho } | HierVariant::Ssvm { rho_init: rho, .. } => {
            crate::hierarchy::compute_alpha_rho(spec, rho, None).expect("tree alpha")
        }
    }
}

/// Trains one hierarchy variant with margin-rescaling SGD over the leaves,
/// with the variant's own structural-error convention.
pub fn train_hier_variant(
    data: &Dataset,
    variant: HierVariant,
    config: &TrainConfig,
) -> Result<StructuredModel, TrainError> {
    let mut cfg = config.clone();
    cfg.hier_error = match variant {
        HierVariant::Nhsvm { .. } | HierVariant::Flat => HierErrorMode::Normalized,
        HierVariant::Hsvm => HierErrorMode::NodeHamming,
        HierVariant::Ssvm { .. } => HierErrorMode::Normalized,
    };
    train_hier_variant_raw(data, variant, &cfg)
}

/// As [`train_hier_variant`] but taking the config's error mode as-is.
pub fn train_hier_variant_raw(
    data: &Dataset,
    variant: HierVariant,
    config: &TrainConfig,
) -> Result<StructuredModel, TrainError> {
    let (spec, dim) = match data {
        Dataset::Hier { spec, dim, .. } => (spec, *dim),
        _ => panic!("hierarchical dataset required"),
    };
    let cfg = config.clone();
    let mut model = StructuredModel::new_zeroed(ModelKind::Hierarchical {
        spec: spec.clone(),
        feature_dim: dim,
    });
    model.alpha = variant_alpha(spec, variant);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache = BTreeMap::new();
    let mut stats = TrainStats::default();
    match variant {
        HierVariant::Ssvm {
            alternation_period, ..
        } => {
            let period = alternation_period.max(1);
            let mut done = 0;
            while done < cfg.epochs {
                let block = period.min(cfg.epochs - done);
                sgd_epochs(&mut model, data, &cfg, block, &mut rng, &mut cache, &mut stats)?;
                done += block;
                if done < cfg.epochs {
                    ssvm_alpha_step(&mut model, spec);
                }
            }
        }
        _ => {
            sgd_epochs(
                &mut model,
                data,
                &cfg,
                cfg.epochs,
                &mut rng,
                &mut cache,
                &mut stats,
            )?;
        }
    }
    Ok(model)
}

/// The exact shared-norm α update: U_n = √α_n·V_n, α ← argmin Σ‖U_n‖²/α_n,
/// then V rescaled so the potentials are unchanged.
pub fn ssvm_alpha_step(model: &mut StructuredModel, spec: &crate::hierarchy::HierarchySpec) {
    let d = model.feature_dim();
    let m = spec.num_nodes();
    let sq: Vec<f64> = (0..m)
        .map(|n| {
            let row = &model.weights[n * d..(n + 1) * d];
            model.alpha[n] * row.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    let new_alpha = crate::hierarchy::argmin_alpha_tree(&sq, spec).expect("tree alpha step");
    for n in 0..m {
        let scale = if new_alpha[n] > 0.0 {
            (model.alpha[n] / new_alpha[n]).sqrt()
        } else {
            0.0
        };
        for w in model.weights[n * d..(n + 1) * d].iter_mut() {
            *w *= scale;
        }
    }
    model.alpha = new_alpha;
}

/// Shared-SVM training: returns the model together with its learned α.
pub fn shared_svm_train(
    data: &Dataset,
    config: &TrainConfig,
    alternation_period: usize,
) -> Result<(StructuredModel, Vec<f64>), TrainError> {
    let model = train_hier_variant(
        data,
        HierVariant::Ssvm {
            rho_init: 2.0,
            alternation_period,
        },
        config,
    )?;
    let alpha = model.alpha.clone();
    Ok((model, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn evaluate_hand_cases() {
        let a: BTreeSet<u32> = [1, 2].into();
        let b: BTreeSet<u32> = [1].into();
        let m = evaluate(&[a.clone()], &[a.clone()], 4).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.hamming, 0.0);
        assert_eq!(m.micro_f1, 1.0);

        let m = evaluate(&[a.clone()], &[b], 4).unwrap();
        assert!((m.micro_f1 - 2.0 / 3.0).abs() < 1e-12);

        let c: BTreeSet<u32> = [3].into();
        let m = evaluate(&[a], &[c], 4).unwrap();
        assert_eq!(m.micro_f1, 0.0);

        assert!(matches!(
            evaluate(&[[1u32].into()], &[], 2),
            Err(TrainError::LengthMismatch(1, 0))
        ));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let data = synth::gen_chain_planted(20, 4, 2, 8, 0.5, 3);
        let mut config = TrainConfig::new(
            BiCriteriaLoss::margin_rescaling(),
            InferenceMethod::MarginArgmax,
        );
        config.epochs = 0;
        let model = sgd_train(&data, &config).unwrap();
        assert!(model.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn determinism_bit_identical() {
        let data = synth::gen_chain_planted(40, 4, 2, 8, 0.5, 5);
        let mut config = TrainConfig::new(
            BiCriteriaLoss::slack_rescaling(),
            InferenceMethod::Bisecting,
        );
        config.epochs = 3;
        config.seed = 11;
        let a = sgd_train(&data, &config).unwrap();
        let b = sgd_train(&data, &config).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn separable_chains_reach_perfect_train_accuracy() {
        let data = synth::gen_chain_planted(100, 4, 2, 8, 0.5, 7);
        let mut config = TrainConfig::new(
            BiCriteriaLoss::margin_rescaling(),
            InferenceMethod::MarginArgmax,
        );
        config.epochs = 50;
        config.learning_rate = 0.1;
        config.reg_c = 1e-4;
        let model = sgd_train(&data, &config).unwrap();
        let metrics = evaluate(
            &gold_sets(&data),
            &predict_sets(&model, &data),
            microlabel_universe(&data),
        )
        .unwrap();
        assert_eq!(metrics.accuracy, 1.0, "metrics {metrics:?}");
    }

    #[test]
    fn margin_update_on_true_label_only_shrinks() {
        let data = synth::gen_chain_planted(5, 3, 2, 6, 0.5, 9);
        let examples = match &data {
            Dataset::Chain { examples, .. } => examples.clone(),
            _ => unreachable!(),
        };
        let mut config = TrainConfig::new(
            BiCriteriaLoss::margin_rescaling(),
            InferenceMethod::MarginArgmax,
        );
        config.epochs = 1;
        let mut model = sgd_train(&data, &config).unwrap();
        let before = model.weights.clone();
        // a "result" equal to the truth moves only the regularizer
        let ex = &examples[0];
        let truth_id = model.chain_instance(ex).encode(&ex.states);
        let frac = FractionalLabel::Vertex(LabelPoint::new(truth_id, 0.0, 0.0));
        subgradient_step(
            &mut model,
            &ExampleRef::Chain(ex),
            &frac,
            &BiCriteriaLoss::margin_rescaling(),
            0.1,
            0.5,
        );
        for (a, b) in before.iter().zip(&model.weights) {
            assert!((a * (1.0 - 0.1 * 0.5) - b).abs() < 1e-15);
        }
    }

    #[test]
    fn fractional_update_is_convex_combination() {
        let data = synth::gen_chain_planted(3, 3, 2, 6, 0.5, 13);
        let (examples, _dim) = match &data {
            Dataset::Chain { examples, dim, .. } => (examples.clone(), *dim),
            _ => unreachable!(),
        };
        let ex = &examples[0];
        let loss = BiCriteriaLoss::slack_rescaling();
        let base = {
            let mut config = TrainConfig::new(loss, InferenceMethod::MarginArgmax);
            config.epochs = 1;
            config.seed = 3;
            sgd_train(&data, &config).unwrap()
        };
        let inst = base.chain_instance(ex);
        let pts = inst.enumerate_points(0.0);
        let (p, q, t) = (pts[1], pts[2], 0.3);

        let run = |frac: &FractionalLabel| -> Vec<f64> {
            let mut m = base.clone();
            subgradient_step(&mut m, &ExampleRef::Chain(ex), frac, &loss, 0.1, 0.0);
            m.weights
        };
        let w_frac = run(&FractionalLabel::Edge { p, q, t });
        let w_p = run(&FractionalLabel::Vertex(p));
        let w_q = run(&FractionalLabel::Vertex(q));
        for i in 0..w_frac.len() {
            let blend = base.weights[i]
                + (1.0 - t) * (w_p[i] - base.weights[i])
                + t * (w_q[i] - base.weights[i]);
            assert!((w_frac[i] - blend).abs() < 1e-12);
        }
    }

    #[test]
    fn subgradient_lower_bounds_loss_growth() {
        // convexity check with the argmax frozen: loss(w + δ) ≥ loss(w) +
        // ⟨subgrad, δ⟩ − 1e−6 for the margin family
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let data = synth::gen_chain_planted(10, 3, 2, 6, 0.2, 15);
        let examples = match &data {
            Dataset::Chain { examples, .. } => examples.clone(),
            _ => unreachable!(),
        };
        let mut config = TrainConfig::new(
            BiCriteriaLoss::margin_rescaling(),
            InferenceMethod::MarginArgmax,
        );
        config.epochs = 2;
        config.seed = 21;
        let model = sgd_train(&data, &config).unwrap();
        let loss = BiCriteriaLoss::margin_rescaling();
        for ex in examples.iter().take(3) {
            let inst = model.chain_instance(ex);
            let pts = inst.enumerate_points(0.0);
            let best = pts
                .iter()
                .max_by(|a, b| {
                    let va = loss.psi_value(a.h, a.g).unwrap();
                    let vb = loss.psi_value(b.h, b.g).unwrap();
                    va.partial_cmp(&vb).unwrap()
                })
                .unwrap();
            let base_val = loss.psi_value(best.h, best.g).unwrap();
            // frozen-argmax subgradient of ψ(h(w), g) in w
            let seq = inst.decode(best.label_id);
            let mut grad = vec![0.0; model.weights.len()];
            let d = model.feature_dim();
            for t in 0..seq.len() {
                for &(i, v) in &ex.features[t] {
                    grad[seq[t] * d + i] += v;
                    grad[ex.states[t] * d + i] -= v;
                }
                if t + 1 < seq.len() {
                    grad[model.trans_index(seq[t], seq[t + 1])] += 1.0;
                    grad[model.trans_index(ex.states[t], ex.states[t + 1])] -= 1.0;
                }
            }
            for _ in 0..30 {
                let delta: Vec<f64> = (0..model.weights.len())
                    .map(|_| rng.gen_range(-1e-3..1e-3))
                    .collect();
                let mut shifted = model.clone();
                for (w, dv) in shifted.weights.iter_mut().zip(&delta) {
                    *w += dv;
                }
                let inst2 = shifted.chain_instance(ex);
                let seq_pt = {
                    let id = inst2.encode(&seq);
                    let h = inst2.score_of(&seq) - inst2.score_of(&ex.states);
                    LabelPoint::new(id, h, inst2.hamming_of(&seq))
                };
                let val2 = loss.psi_value(seq_pt.h, seq_pt.g).unwrap();
                let lin: f64 = grad.iter().zip(&delta).map(|(g, d)| g * d).sum();
                assert!(val2 >= base_val + lin - 1e-6);
            }
        }
    }
}
