//! Deterministic synthetic dataset generators: planted-margin chains,
//! planted multi-label sets, and hierarchical data from recursive random
//! hyperplane splits (balanced and unbalanced).

use crate::hierarchy::HierarchySpec;
use crate::model::{
    Dataset, HierExample, ModelKind, MultiLabelExample, SeqExample, SparseVec, StructuredModel,
};
use crate::oracle::{ChainOracle, Lambda};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller; two uniforms per draw keeps the stream simple.
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn dense(rng: &mut ChaCha8Rng, dim: usize) -> SparseVec {
    (0..dim).map(|i| (i, gaussian(rng))).collect()
}

fn normalize(x: &mut SparseVec) {
    let norm: f64 = x.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, v) in x.iter_mut() {
            *v /= norm;
        }
    }
}

/// Chains with one-hot token features and labels planted by a hidden model;
/// instances whose best and second-best score differ by less than `margin`
/// are redrawn, so the dataset is linearly separable with a margin.
pub fn gen_chain_planted(
    n: usize,
    length: usize,
    num_states: usize,
    dim: usize,
    margin: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planted = StructuredModel::new_zeroed(ModelKind::Chain {
        num_states,
        feature_dim: dim,
    });
    for w in planted.weights.iter_mut() {
        *w = gaussian(&mut rng);
    }
    let mut examples = Vec::with_capacity(n);
    while examples.len() < n {
        let features: Vec<SparseVec> = (0..length)
            .map(|_| vec![(rng.gen_range(0..dim), 1.0)])
            .collect();
        let probe = SeqExample {
            features: features.clone(),
            states: vec![0; length],
        };
        let states = planted.predict_chain(&probe);
        // margin of the planted label over the runner-up
        let inst = planted.chain_instance(&SeqExample {
            features: features.clone(),
            states: states.clone(),
        });
        let oracle = ChainOracle::new(&inst, 0.0);
        let two = oracle.k_best(Lambda::Finite(0.0), 2);
        if two.len() == 2 {
            let gap = inst.score_of(&two[0]) - inst.score_of(&two[1]);
            if gap < margin {
                continue;
            }
        }
        examples.push(SeqExample { features, states });
    }
    Dataset::Chain {
        dim,
        num_states,
        examples,
    }
}

/// Multi-label sets planted by per-label hyperplanes over gaussian features.
pub fn gen_multilabel_planted(
    n: usize,
    num_labels: usize,
    dim: usize,
    margin: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes: Vec<Vec<f64>> = (0..num_labels)
        .map(|_| {
            let mut w: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng)).collect();
            let norm: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in w.iter_mut() {
                *v /= norm;
            }
            w
        })
        .collect();
    let mut examples = Vec::with_capacity(n);
    while examples.len() < n {
        let mut x = dense(&mut rng, dim);
        normalize(&mut x);
        let scores: Vec<f64> = planes
            .iter()
            .map(|w| x.iter().map(|&(i, v)| w[i] * v).sum())
            .collect();
        if scores.iter().any(|s| s.abs() < margin) {
            continue;
        }
        let labels = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0.0)
            .map(|(l, _)| l as u32)
            .collect();
        examples.push(MultiLabelExample { features: x, labels });
    }
    Dataset::MultiLabel {
        dim,
        num_labels,
        examples,
    }
}

/// Complete binary tree of the given depth (depth 1 = root with two leaf
/// children); labels are the leaves with maximum planted path potential.
pub fn gen_hier_balanced(depth: usize, n: usize, dim: usize, seed: u64) -> Dataset {
    assert!(depth >= 1);
    let m = (1usize << (depth + 1)) - 1;
    let parents: Vec<Vec<usize>> = (0..m)
        .map(|i| if i == 0 { vec![] } else { vec![(i - 1) / 2] })
        .collect();
    let spec = HierarchySpec::from_parent_lists(parents).expect("balanced tree is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planted = StructuredModel::new_zeroed(ModelKind::Hierarchical {
        spec: spec.clone(),
        feature_dim: dim,
    });
    for w in planted.weights.iter_mut() {
        *w = gaussian(&mut rng);
    }
    let examples = (0..n)
        .map(|_| {
            let mut x = dense(&mut rng, dim);
            normalize(&mut x);
            let probe = HierExample {
                features: x.clone(),
                leaf: spec.leaves()[0],
            };
            let leaf = planted.predict_hier(&probe);
            HierExample { features: x, leaf }
        })
        .collect();
    Dataset::Hier {
        dim,
        spec,
        examples,
    }
}

/// Unbalanced binary tree from recursive random hyperplane splits: each
/// level splits off one leaf region and recurses into the other side, giving
/// 2·depth+1 nodes. Instances are normalized gaussians labeled by the region
/// they fall into.
pub fn gen_hier_unbalanced(depth: usize, n: usize, dim: usize, seed: u64) -> Dataset {
    assert!(depth >= 1);
    // nodes: internal chain i_0..i_{depth-1}, each with leaf child l_k, and a
    // final leaf under the last internal node
    let m = 2 * depth + 1;
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); m];
    // internal node k is index k; leaf for level k is depth + k; final leaf is 2*depth
    for k in 1..depth {
        parents[k] = vec![k - 1];
    }
    for k in 0..depth {
        parents[depth + k] = vec![k];
    }
    parents[2 * depth] = vec![depth - 1];
    let spec = HierarchySpec::from_parent_lists(parents).expect("unbalanced tree is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planes: Vec<Vec<f64>> = (0..depth)
        .map(|_| (0..dim).map(|_| gaussian(&mut rng)).collect())
        .collect();
    let examples = (0..n)
        .map(|_| {
            let mut x = dense(&mut rng, dim);
            normalize(&mut x);
            let mut leaf = 2 * depth; // deepest region unless split off earlier
            for (k, plane) in planes.iter().enumerate() {
                let side: f64 = x.iter().map(|&(i, v)| plane[i] * v).sum();
                if side >= 0.0 {
                    leaf = depth + k;
                    break;
                }
            }
            HierExample { features: x, leaf }
        })
        .collect();
    Dataset::Hier {
        dim,
        spec,
        examples,
    }
}
