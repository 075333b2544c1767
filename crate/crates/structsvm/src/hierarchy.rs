//! Normalized hierarchical SVM machinery: the label hierarchy, per-node
//! α-weight solvers, normalized class attributes and structural error, the
//! O(M) tree argmax for multi-label inference, and the exact α step of the
//! shared Frobenius norm.
//!
//! Labels are node sets (bitmasks over at most 64 nodes): a label is the
//! union of root-to-leaf paths of its leaves.

use thiserror::Error;

/// A label as a node bitmask.
pub type NodeSet = u64;

#[derive(Debug, Error, PartialEq)]
pub enum HierarchyError {
    #[error("hierarchy is invalid: {0}")]
    InvalidStructure(String),
    #[error("operation requires a tree, got a DAG")]
    UnsupportedDag,
    #[error("node set {0:#x} is not a valid label")]
    InvalidLabel(NodeSet),
    #[error("node {0} is invalid here: {1}")]
    InvalidNode(usize, String),
    #[error("structure admits no feasible alpha")]
    InfeasibleStructure,
}

/// Tree or DAG over labeled nodes. Multiple roots are allowed (the union of
/// the per-root trees); `is_tree` means every non-root has exactly one
/// parent.
#[derive(Debug, Clone)]
pub struct HierarchySpec {
    num_nodes: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    leaves: Vec<usize>,
    roots: Vec<usize>,
    is_tree: bool,
    /// Topological order, parents before children.
    topo: Vec<usize>,
}

impl HierarchySpec {
    pub fn from_parent_lists(parents: Vec<Vec<usize>>) -> Result<Self, HierarchyError> {
        let m = parents.len();
        if m == 0 {
            return Err(HierarchyError::InvalidStructure("no nodes".into()));
        }
        if m > 64 {
            return Err(HierarchyError::InvalidStructure(format!(
                "at most 64 nodes supported, got {m}"
            )));
        }
        let mut children = vec![Vec::new(); m];
        for (n, ps) in parents.iter().enumerate() {
            for &p in ps {
                if p >= m {
                    return Err(HierarchyError::InvalidStructure(format!(
                        "parent {p} of node {n} out of range"
                    )));
                }
                if p == n {
                    return Err(HierarchyError::InvalidStructure(format!(
                        "node {n} is its own parent"
                    )));
                }
                children[p].push(n);
            }
        }
        // Kahn's algorithm: detects cycles and yields the topological order.
        let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
        let mut queue: std::collections::VecDeque<usize> =
            (0..m).filter(|&n| indeg[n] == 0).collect();
        let roots: Vec<usize> = queue.iter().copied().collect();
        if roots.is_empty() {
            return Err(HierarchyError::InvalidStructure("no root (cyclic)".into()));
        }
        let mut topo = Vec::with_capacity(m);
        while let Some(n) = queue.pop_front() {
            topo.push(n);
            for &c in &children[n] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if topo.len() != m {
            return Err(HierarchyError::InvalidStructure("cycle detected".into()));
        }
        let leaves: Vec<usize> = (0..m).filter(|&n| children[n].is_empty()).collect();
        let is_tree = parents.iter().all(|p| p.len() <= 1);
        Ok(HierarchySpec {
            num_nodes: m,
            parents,
            children,
            leaves,
            roots,
            is_tree,
            topo,
        })
    }

    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self, HierarchyError> {
        let mut parents = vec![Vec::new(); num_nodes];
        for &(p, c) in edges {
            if c >= num_nodes || p >= num_nodes {
                return Err(HierarchyError::InvalidStructure(format!(
                    "edge ({p},{c}) out of range"
                )));
            }
            parents[c].push(p);
        }
        Self::from_parent_lists(parents)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }
    pub fn roots(&self) -> &[usize] {
        &self.roots
    }
    pub fn is_tree(&self) -> bool {
        self.is_tree
    }
    pub fn children(&self, n: usize) -> &[usize] {
        &self.children[n]
    }
    pub fn parents(&self, n: usize) -> &[usize] {
        &self.parents[n]
    }
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// 𝒜̄(n): the node with all its ancestors.
    pub fn up_closure(&self, n: usize) -> NodeSet {
        let mut set: NodeSet = 1 << n;
        let mut stack = vec![n];
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if set >> p & 1 == 0 {
                    set |= 1 << p;
                    stack.push(p);
                }
            }
        }
        set
    }

    /// The label for a set of leaves: union of their upward closures.
    pub fn label_of_leaves(&self, leaves: impl IntoIterator<Item = usize>) -> NodeSet {
        leaves
            .into_iter()
            .map(|l| self.up_closure(l))
            .fold(0, |a, b| a | b)
    }

    /// A label must be ancestor-closed and every member node must sit on a
    /// path to a member leaf.
    pub fn is_valid_label(&self, y: NodeSet) -> bool {
        if y == 0 || (self.num_nodes < 64 && y >> self.num_nodes != 0) {
            return false;
        }
        let member_leaves: Vec<usize> = self
            .leaves
            .iter()
            .copied()
            .filter(|&l| y >> l & 1 == 1)
            .collect();
        if member_leaves.is_empty() {
            return false;
        }
        y == self.label_of_leaves(member_leaves)
    }

    /// Number of nodes on the root path of `n`, itself included.
    pub fn leaf_depth(&self, n: usize) -> usize {
        self.up_closure(n).count_ones() as usize
    }

    /// Splices a duplicate of internal node `n`: the new node takes n's
    /// children and becomes n's only child, so both nodes share the same
    /// label membership pattern. Leaves are rejected.
    pub fn duplicate_node(&self, n: usize) -> Result<(HierarchySpec, usize), HierarchyError> {
        if n >= self.num_nodes {
            return Err(HierarchyError::InvalidNode(n, "out of range".into()));
        }
        if self.children[n].is_empty() {
            return Err(HierarchyError::InvalidNode(
                n,
                "cannot duplicate a leaf".into(),
            ));
        }
        if self.num_nodes + 1 > 64 {
            return Err(HierarchyError::InvalidStructure("node budget".into()));
        }
        let new_id = self.num_nodes;
        let mut parents = self.parents.clone();
        parents.push(vec![n]);
        for c in self.children[n].clone() {
            for p in parents[c].iter_mut() {
                if *p == n {
                    *p = new_id;
                }
            }
        }
        let spec = HierarchySpec::from_parent_lists(parents)?;
        Ok((spec, new_id))
    }
}

/// Exact minimizer of Σ α_n^ρ under per-leaf path sums = 1 on trees, by the
/// same budget-splitting recursion as the shared-norm α step: every subtree's
/// optimum is A·l^ρ for budget l, and the split at a node solves
/// (k/(1−k))^(ρ−1) = 1/Σ_children A for the node's own share k.
fn alpha_rho_tree(spec: &HierarchySpec, rho: f64) -> Vec<f64> {
    let m = spec.num_nodes();
    let mut agg = vec![0.0_f64; m];
    let mut frac = vec![0.0_f64; m];
    for &n in spec.topo_order().iter().rev() {
        if spec.children(n).is_empty() {
            agg[n] = 1.0;
            frac[n] = 1.0;
        } else {
            let s: f64 = spec.children(n).iter().map(|&c| agg[c]).sum();
            // minimize k^ρ + S(1−k)^ρ over the node's own share k:
            // (k/(1−k))^(ρ−1) = S, solved in logs to survive the ρ→1 blowup
            // of S^(1/(ρ−1))
            let ln_tau = s.ln() / (rho - 1.0);
            let k = if ln_tau > 500.0 {
                1.0
            } else if ln_tau < -500.0 {
                0.0
            } else {
                let tau = ln_tau.exp();
                tau / (1.0 + tau)
            };
            frac[n] = k;
            agg[n] = k.powf(rho) + s * (1.0 - k).powf(rho);
        }
    }
    let mut alpha = vec![0.0_f64; m];
    let mut budget = vec![0.0_f64; m];
    for &n in spec.topo_order() {
        let b = if spec.parents(n).is_empty() {
            1.0
        } else {
            budget[spec.parents(n)[0]]
        };
        alpha[n] = b * frac[n];
        budget[n] = b * (1.0 - frac[n]);
    }
    alpha
}

fn leaf_paths(spec: &HierarchySpec) -> Vec<Vec<usize>> {
    spec.leaves()
        .iter()
        .map(|&l| {
            let set = spec.up_closure(l);
            (0..spec.num_nodes())
                .filter(|&n| set >> n & 1 == 1)
                .collect()
        })
        .collect()
}

fn project_feasible(alpha: &mut [f64], paths: &[Vec<usize>], range: (f64, f64), sweeps: usize) {
    for _ in 0..sweeps {
        let mut worst = 0.0_f64;
        for path in paths {
            let s: f64 = path.iter().map(|&n| alpha[n]).sum();
            let target = s.clamp(range.0, range.1);
            let delta = (target - s) / path.len() as f64;
            if delta != 0.0 {
                for &n in path {
                    alpha[n] += delta;
                }
            }
            worst = worst.max((target - s).abs());
        }
        for a in alpha.iter_mut() {
            if *a < 0.0 {
                *a = 0.0;
            }
        }
        if worst < 1e-10 {
            break;
        }
    }
}

/// α minimizing Σ α_n^ρ subject to per-leaf path sums: exactly 1 on trees
/// (via the exact budget recursion), relaxed into [1, T] when `relaxed_t` is
/// given or the structure is a DAG (projected gradient with per-leaf
/// feasibility sweeps).
pub fn compute_alpha_rho(
    spec: &HierarchySpec,
    rho: f64,
    relaxed_t: Option<f64>,
) -> Result<Vec<f64>, HierarchyError> {
    assert!(rho > 1.0, "rho must exceed 1");
    if spec.is_tree() && relaxed_t.is_none() {
        return Ok(alpha_rho_tree(spec, rho));
    }
    let range = match relaxed_t {
        Some(t) => {
            if t < 1.0 {
                return Err(HierarchyError::InvalidStructure(format!(
                    "relaxation upper bound {t} < 1"
                )));
            }
            (1.0, t)
        }
        None => (1.0, 1.0),
    };
    let m = spec.num_nodes();
    let paths = leaf_paths(spec);
    if paths.is_empty() {
        return Err(HierarchyError::InfeasibleStructure);
    }
    let max_depth = paths.iter().map(Vec::len).max().unwrap_or(1);
    let mut alpha = vec![1.0 / max_depth as f64; m];
    project_feasible(&mut alpha, &paths, range, 400);
    let mut step = 0.05 / rho;
    let mut prev_obj: f64 = alpha.iter().map(|a| a.powf(rho)).sum();
    for _ in 0..10_000 {
        let mut trial: Vec<f64> = alpha
            .iter()
            .map(|&a| (a - step * rho * a.max(0.0).powf(rho - 1.0)).max(0.0))
            .collect();
        project_feasible(&mut trial, &paths, range, 60);
        let obj: f64 = trial.iter().map(|a| a.powf(rho)).sum();
        if obj <= prev_obj {
            let moved = alpha
                .iter()
                .zip(&trial)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            alpha = trial;
            prev_obj = obj;
            if moved < 1e-10 {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    project_feasible(&mut alpha, &paths, range, 4000);
    Ok(alpha)
}

/// max–min α by bisection on the minimum value with a greedy top-down
/// assignment: internal nodes take the candidate minimum, leaves absorb the
/// remaining path budget. Directional ordering (child ≥ parent) holds by
/// construction. Trees only.
pub fn compute_alpha_maxmin(
    spec: &HierarchySpec,
    directional: bool,
) -> Result<Vec<f64>, HierarchyError> {
    if !spec.is_tree() {
        return Err(HierarchyError::UnsupportedDag);
    }
    let _ = directional;
    let depths: Vec<usize> = spec.leaves().iter().map(|&l| spec.leaf_depth(l)).collect();
    let feasible = |m: f64| -> bool {
        depths
            .iter()
            .all(|&d| 1.0 - m * (d as f64 - 1.0) >= m - 1e-15)
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m_star = lo;
    let mut alpha = vec![0.0; spec.num_nodes()];
    for &n in spec.topo_order() {
        if spec.children(n).is_empty() {
            alpha[n] = 1.0 - m_star * (spec.leaf_depth(n) as f64 - 1.0);
        } else {
            alpha[n] = m_star;
        }
    }
    Ok(alpha)
}

/// Normalized class attribute Λ̃(y): √α_n on member nodes.
pub fn normalized_attributes(
    spec: &HierarchySpec,
    alpha: &[f64],
    y: NodeSet,
) -> Result<Vec<f64>, HierarchyError> {
    if !spec.is_valid_label(y) {
        return Err(HierarchyError::InvalidLabel(y));
    }
    Ok((0..spec.num_nodes())
        .map(|n| if y >> n & 1 == 1 { alpha[n].sqrt() } else { 0.0 })
        .collect())
}

/// Normalized structural error √(Σ of α over the symmetric difference).
pub fn normalized_error(
    spec: &HierarchySpec,
    alpha: &[f64],
    y: NodeSet,
    y_prime: NodeSet,
) -> Result<f64, HierarchyError> {
    if !spec.is_valid_label(y) {
        return Err(HierarchyError::InvalidLabel(y));
    }
    if !spec.is_valid_label(y_prime) {
        return Err(HierarchyError::InvalidLabel(y_prime));
    }
    let diff = y ^ y_prime;
    let sum: f64 = (0..spec.num_nodes())
        .filter(|&n| diff >> n & 1 == 1)
        .map(|n| alpha[n])
        .sum();
    Ok(sum.sqrt())
}

fn grow_from(spec: &HierarchySpec, start: usize, val: &[f64], y: &mut NodeSet) {
    let mut stack = vec![start];
    while let Some(n) = stack.pop() {
        *y |= 1 << n;
        let kids = spec.children(n);
        if kids.is_empty() {
            continue;
        }
        if kids.iter().any(|&c| val[c] >= 0.0) {
            for &c in kids {
                if val[c] >= 0.0 {
                    stack.push(c);
                }
            }
        } else {
            let best = *kids
                .iter()
                .max_by(|&&a, &&b| val[a].partial_cmp(&val[b]).unwrap())
                .unwrap();
            stack.push(best);
        }
    }
}

/// Most violating multi-label on a tree in O(M): maximizes Σ_{n∈y} r_n with
/// r_n = √α_n·(node potential) plus the decomposed leaf-loss adjustment
/// (+1 for leaves outside the true label, −1 inside), over ancestor-closed
/// labels containing at least one leaf.
pub fn tree_multilabel_argmax(
    spec: &HierarchySpec,
    alpha: &[f64],
    node_potentials: &[f64],
    y_true: NodeSet,
) -> Result<NodeSet, HierarchyError> {
    if !spec.is_tree() {
        return Err(HierarchyError::UnsupportedDag);
    }
    let m = spec.num_nodes();
    let r: Vec<f64> = (0..m)
        .map(|n| {
            let mut v = alpha[n].sqrt() * node_potentials[n];
            if spec.children(n).is_empty() {
                v += if y_true >> n & 1 == 1 { -1.0 } else { 1.0 };
            }
            v
        })
        .collect();
    // val[n]: best total over valid sub-labelings rooted at and including n.
    let mut val = vec![0.0_f64; m];
    for &n in spec.topo_order().iter().rev() {
        if spec.children(n).is_empty() {
            val[n] = r[n];
        } else {
            let kids = spec.children(n);
            let best_kid = kids.iter().map(|&c| val[c]).fold(f64::MIN, f64::max);
            let pos_sum: f64 = kids.iter().map(|&c| val[c].max(0.0)).sum();
            val[n] = r[n] + if best_kid >= 0.0 { pos_sum } else { best_kid };
        }
    }
    // At least one root participates (a label needs a leaf); others join
    // when their subtree is worth a positive amount.
    let best_root = *spec
        .roots()
        .iter()
        .max_by(|&&a, &&b| val[a].partial_cmp(&val[b]).unwrap())
        .unwrap();
    let mut y: NodeSet = 0;
    grow_from(spec, best_root, &val, &mut y);
    for &root in spec.roots() {
        if root != best_root && val[root] >= 0.0 {
            grow_from(spec, root, &val, &mut y);
        }
    }
    Ok(y)
}

/// Exact α step of the shared Frobenius norm: minimizes Σ ‖U_n‖²/α_n under
/// per-leaf path sums ≤ 1 on a tree in O(M). Zero-norm nodes get α = 0 and
/// contribute nothing.
pub fn argmin_alpha_tree(
    sq_norms: &[f64],
    spec: &HierarchySpec,
) -> Result<Vec<f64>, HierarchyError> {
    if !spec.is_tree() {
        return Err(HierarchyError::UnsupportedDag);
    }
    let m = spec.num_nodes();
    assert_eq!(sq_norms.len(), m);
    // Bottom-up: the subtree optimum is (√B₁ + √B₂)²/l for budget l, with B₁
    // the node's own squared norm and B₂ the children's aggregate; the node's
    // budget share is √B₁/(√B₁+√B₂).
    let mut agg = vec![0.0_f64; m];
    let mut frac = vec![0.0_f64; m];
    for &n in spec.topo_order().iter().rev() {
        let b1 = sq_norms[n].max(0.0);
        if spec.children(n).is_empty() {
            agg[n] = b1;
            frac[n] = if b1 > 0.0 { 1.0 } else { 0.0 };
        } else {
            let s: f64 = spec.children(n).iter().map(|&c| agg[c]).sum();
            if b1.sqrt() + s.sqrt() == 0.0 {
                agg[n] = 0.0;
                frac[n] = 0.0;
            } else {
                frac[n] = b1.sqrt() / (b1.sqrt() + s.sqrt());
                agg[n] = (b1.sqrt() + s.sqrt()).powi(2);
            }
        }
    }
    let mut alpha = vec![0.0_f64; m];
    let mut budget = vec![0.0_f64; m];
    for &n in spec.topo_order() {
        let b = if spec.parents(n).is_empty() {
            1.0
        } else {
            budget[spec.parents(n)[0]]
        };
        alpha[n] = b * frac[n];
        budget[n] = b * (1.0 - frac[n]);
    }
    Ok(alpha)
}

/// Objective Σ ‖U_n‖²/α_n with the 0/0 := 0 convention.
pub fn alpha_objective(sq_norms: &[f64], alpha: &[f64]) -> f64 {
    sq_norms
        .iter()
        .zip(alpha)
        .map(|(&b, &a)| if b == 0.0 { 0.0 } else { b / a })
        .sum()
}

/// Squared structured shared Frobenius norm of a leaf-by-feature matrix:
/// min over node decompositions Σ_path W_n = U_leaf of Σ ‖W_n‖²/α_n with a
/// feasible α, computed by alternating the exact α step with the weighted
/// least-norm redistribution of the rows. The no-sharing split caps the value
/// at the squared Frobenius norm.
pub fn shared_frobenius_norm_sq(
    u_rows: &[Vec<f64>],
    spec: &HierarchySpec,
) -> Result<f64, HierarchyError> {
    if !spec.is_tree() {
        return Err(HierarchyError::UnsupportedDag);
    }
    let leaves = spec.leaves();
    assert_eq!(u_rows.len(), leaves.len());
    let dim = u_rows.first().map(|r| r.len()).unwrap_or(0);
    let m = spec.num_nodes();
    let paths = leaf_paths(spec);
    let fro_sq: f64 = u_rows.iter().flatten().map(|v| v * v).sum();

    // Redistribute under a fixed α: per feature column, minimize Σ w²/α
    // subject to the path sums matching the target rows. The minimizer is
    // w_n = α_n·Σ_{leaves through n} μ_l with Gram G_{ll'} = Σ_{shared} α_n.
    let redistribute = |alpha: &[f64], w: &mut [Vec<f64>]| {
        let a: Vec<f64> = alpha.iter().map(|&x| x.max(1e-9)).collect();
        let y = leaves.len();
        let mut gram = vec![vec![0.0_f64; y]; y];
        for (i, pi) in paths.iter().enumerate() {
            for (j, pj) in paths.iter().enumerate() {
                gram[i][j] = pi.iter().filter(|n| pj.contains(n)).map(|&n| a[n]).sum();
            }
        }
        for c in 0..dim {
            let rhs: Vec<f64> = (0..y).map(|i| u_rows[i][c]).collect();
            let mu = solve_linear(&gram, &rhs);
            for (n, row) in w.iter_mut().enumerate() {
                let v: f64 = paths
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.contains(&n))
                    .map(|(i, _)| mu[i])
                    .sum();
                row[c] = a[n] * v;
            }
        }
    };

    // Seed from a structure-aware feasible α so shared ancestors can take
    // mass; the pure no-sharing start is a fixed point of the alternation.
    let mut w = vec![vec![0.0_f64; dim]; m];
    let seed_alpha = compute_alpha_rho(spec, 2.0, None)?;
    redistribute(&seed_alpha, &mut w);
    let mut best_obj = fro_sq;
    for _ in 0..500 {
        let sq: Vec<f64> = w
            .iter()
            .map(|row| row.iter().map(|v| v * v).sum())
            .collect();
        let alpha = argmin_alpha_tree(&sq, spec)?;
        let obj = alpha_objective(&sq, &alpha);
        if obj >= best_obj - 1e-12 {
            best_obj = best_obj.min(obj);
            break;
        }
        best_obj = obj;
        redistribute(&alpha, &mut w);
    }
    Ok(best_obj)
}

/// Gaussian elimination with partial pivoting; systems here are tiny.
fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        if p.abs() < 1e-300 {
            continue;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[i][col] / p;
            if f != 0.0 {
                for k in col..=n {
                    m[i][k] -= f * m[col][k];
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            if m[i][i].abs() < 1e-300 {
                0.0
            } else {
                m[i][n] / m[i][i]
            }
        })
        .collect()
}
