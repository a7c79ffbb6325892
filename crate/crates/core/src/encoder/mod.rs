//! Compilation of decision-list learning into partial weighted MaxSAT.
//!
//! A list is laid out as a path of `N` nodes. Each node is a feature literal,
//! a leaf (a class pseudo-feature that ends the current rule) or unused, and
//! all unused nodes come last. Per instance the encoding tracks whether it is
//! still *valid* at a node (agrees with every literal of the current rule so
//! far) and whether it is still *not yet classified* by an earlier rule.
//!
//! Binary problems use one class pseudo-feature whose node truth value is the
//! predicted class; problems with three or more classes use one pseudo-feature
//! per class and pin leaf truth values to true.

pub mod cnf;

use thiserror::Error;

use crate::dataset::{check_consistency, BinDataset, Instance};
use cnf::{CnfBuilder, Gate};

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("dataset is inconsistent: {} group(s) of identical rows carry different classes", .0.len())]
    Inconsistent(Vec<Vec<usize>>),
    #[error("a perfect list needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("layout needs N, M, K, C >= 1 (got N={nodes}, M={instances}, K={features}, C={classes})")]
    EmptyDimension {
        nodes: usize,
        instances: usize,
        features: usize,
        classes: usize,
    },
    #[error("variable ids overflow the 31-bit DIMACS range")]
    Overflow,
    #[error("exactly-one over an empty literal list")]
    EmptyCardinality,
    #[error("lambda must lie in (0, 1], got {0}")]
    BadLambda(f64),
}

/// Deterministic numbering of the primary variables.
///
/// Ids start at 1 and are allocated in blocks, in this order:
///
/// | block | count      | id of                                   |
/// |-------|------------|-----------------------------------------|
/// | `s`   | `N*(K+C)`  | node `j` selects slot `r` (node-major)  |
/// | `t`   | `N`        | truth value of node `j`                 |
/// | `v`   | `M*N`      | instance `i` valid at node `j` (instance-major) |
/// | `n`   | `M*N`      | instance `i` not classified before node `j` |
/// | `u`   | `N`        | node `j` unused                         |
/// | `m`   | `M`        | instance `i` misclassified (sparse only) |
///
/// Slots `0..K` are features and `K..K+C` class pseudo-features. Auxiliary
/// variables follow from `first_aux` on. All indices here are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    pub nodes: usize,
    pub instances: usize,
    pub features: usize,
    pub class_features: usize,
    pub sparse: bool,
    pub first_aux: u32,
}

impl VariableLayout {
    pub fn new(
        nodes: usize,
        instances: usize,
        features: usize,
        class_features: usize,
        sparse: bool,
    ) -> Result<Self, EncodeError> {
        if nodes == 0 || instances == 0 || features == 0 || class_features == 0 {
            return Err(EncodeError::EmptyDimension {
                nodes,
                instances,
                features,
                classes: class_features,
            });
        }
        let (n, m, k, c) = (nodes as u64, instances as u64, features as u64, class_features as u64);
        let primary = n
            .checked_mul(k + c + 2)
            .and_then(|x| m.checked_mul(n).and_then(|mn| mn.checked_mul(2)).and_then(|y| x.checked_add(y)))
            .and_then(|x| x.checked_add(if sparse { m } else { 0 }))
            .ok_or(EncodeError::Overflow)?;
        if primary >= i32::MAX as u64 / 2 {
            return Err(EncodeError::Overflow);
        }
        Ok(VariableLayout {
            nodes,
            instances,
            features,
            class_features,
            sparse,
            first_aux: primary as u32 + 1,
        })
    }

    pub fn primary_count(&self) -> u32 {
        self.first_aux - 1
    }

    pub fn slots(&self) -> usize {
        self.features + self.class_features
    }

    pub fn is_binary(&self) -> bool {
        self.class_features == 1
    }

    fn t_base(&self) -> usize {
        self.nodes * self.slots()
    }
    fn v_base(&self) -> usize {
        self.t_base() + self.nodes
    }
    fn n_base(&self) -> usize {
        self.v_base() + self.instances * self.nodes
    }
    fn u_base(&self) -> usize {
        self.n_base() + self.instances * self.nodes
    }
    fn m_base(&self) -> usize {
        self.u_base() + self.nodes
    }

    pub fn s(&self, node: usize, slot: usize) -> i32 {
        debug_assert!(node < self.nodes && slot < self.slots());
        (1 + node * self.slots() + slot) as i32
    }

    /// Selector of class pseudo-feature `class` at `node`.
    pub fn s_class(&self, node: usize, class: usize) -> i32 {
        self.s(node, self.features + class)
    }

    pub fn t(&self, node: usize) -> i32 {
        (1 + self.t_base() + node) as i32
    }

    pub fn v(&self, instance: usize, node: usize) -> i32 {
        (1 + self.v_base() + instance * self.nodes + node) as i32
    }

    pub fn n(&self, instance: usize, node: usize) -> i32 {
        (1 + self.n_base() + instance * self.nodes + node) as i32
    }

    pub fn u(&self, node: usize) -> i32 {
        (1 + self.u_base() + node) as i32
    }

    pub fn m(&self, instance: usize) -> i32 {
        assert!(self.sparse, "m variables exist only in sparse layouts");
        (1 + self.m_base() + instance) as i32
    }

    /// Human-readable name of a variable, 1-based indices: `s j r`, `t j`,
    /// `v i j`, `n i j`, `u j`, `m i` or `aux`.
    pub fn describe(&self, var: u32) -> String {
        let idx = var as usize - 1;
        if var >= self.first_aux {
            "aux".to_string()
        } else if idx < self.t_base() {
            format!("s {} {}", idx / self.slots() + 1, idx % self.slots() + 1)
        } else if idx < self.v_base() {
            format!("t {}", idx - self.t_base() + 1)
        } else if idx < self.n_base() {
            let k = idx - self.v_base();
            format!("v {} {}", k / self.nodes + 1, k % self.nodes + 1)
        } else if idx < self.u_base() {
            let k = idx - self.n_base();
            format!("n {} {}", k / self.nodes + 1, k % self.nodes + 1)
        } else if idx < self.m_base() {
            format!("u {}", idx - self.u_base() + 1)
        } else {
            format!("m {}", idx - self.m_base() + 1)
        }
    }
}

/// Hard clauses plus weighted soft clauses over DIMACS-style signed literals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WcnfFormula {
    pub variable_count: u32,
    pub hard: Vec<Vec<i32>>,
    pub soft: Vec<(Vec<i32>, u64)>,
}

impl WcnfFormula {
    /// One more than the total soft weight.
    pub fn top_weight(&self) -> u64 {
        1 + self.soft.iter().map(|(_, w)| *w).sum::<u64>()
    }

    pub fn literal_count(&self) -> usize {
        self.hard.iter().map(Vec::len).sum::<usize>()
            + self.soft.iter().map(|(c, _)| c.len()).sum::<usize>()
    }

    pub fn clause_count(&self) -> usize {
        self.hard.len() + self.soft.len()
    }

    /// Total weight of the soft clauses falsified by `assignment`.
    pub fn cost(&self, assignment: &[bool]) -> u64 {
        self.soft
            .iter()
            .filter(|(c, _)| !c.iter().any(|&l| cnf::lit_value(assignment, l)))
            .map(|(_, w)| *w)
            .sum()
    }

    pub fn satisfies_hard(&self, assignment: &[bool]) -> bool {
        assignment.len() > self.variable_count as usize && cnf::satisfies(&self.hard, assignment)
    }
}

/// Regularization of the sparse objective: each used node costs `big_lambda`
/// misclassifications, `big_lambda = ceil(lambda * M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseConfig {
    pub lambda: f64,
    pub big_lambda: u64,
}

impl SparseConfig {
    pub fn new(lambda: f64, instances: usize) -> Result<Self, EncodeError> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(EncodeError::BadLambda(lambda));
        }
        let scaled = lambda * instances as f64;
        // 0.05 * 120 is 6.000000000000001 in binary floating point
        let big = if (scaled - scaled.round()).abs() < 1e-9 {
            scaled.round()
        } else {
            scaled.ceil()
        };
        Ok(SparseConfig {
            lambda,
            big_lambda: (big as u64).max(1),
        })
    }

    pub fn with_big_lambda(big_lambda: u64) -> Self {
        SparseConfig {
            lambda: f64::NAN,
            big_lambda: big_lambda.max(1),
        }
    }
}

/// One position of the node path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    /// A feature literal; `positive` is the node truth value.
    Feature { feature: usize, positive: bool },
    /// End of a rule. For binary layouts `class` is 0 or 1 and doubles as
    /// the node truth value.
    Leaf { class: usize },
    Unused,
}

/// Validity and not-yet-classified flags of one instance at every node,
/// computed by walking the path directly.
pub fn simulate_path(path: &[Node], features: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let mut valid = Vec::with_capacity(path.len());
    let mut unclassified = Vec::with_capacity(path.len());
    let (mut v, mut n) = (true, true);
    for node in path {
        valid.push(v);
        unclassified.push(n);
        let leaf = matches!(node, Node::Leaf { .. });
        let agree = matches!(node, Node::Feature { feature, positive } if features[*feature] == *positive);
        let next_n = n && !(leaf && v);
        v = (leaf && next_n) || (v && agree);
        n = next_n;
    }
    (valid, unclassified)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Labels {
    /// One class pseudo-feature; `true` is class 1.
    Binary(Vec<bool>),
    /// One pseudo-feature per class.
    Multi { classes: Vec<usize>, count: usize },
}

/// Everything the clause generator needs; the public entry points and the
/// per-class segment trainer fill it in differently.
#[derive(Debug, Clone)]
pub(crate) struct Problem<'a> {
    pub rows: Vec<&'a [bool]>,
    pub features: usize,
    pub labels: Labels,
    pub nodes: usize,
    /// Instances that must be covered by some leaf (or pay `m_i`).
    pub cover: Vec<bool>,
    /// Binary only: leaves may predict class 1 only.
    pub pin_leaf_positive: bool,
    /// No rule may start with a leaf.
    pub forbid_empty_rules: bool,
    pub sparse: Option<u64>,
    /// Node 1 must be used.
    pub require_nonempty: bool,
}

/// A compiled problem: the formula, its variable map and the definitions of
/// its auxiliary variables.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub formula: WcnfFormula,
    pub layout: VariableLayout,
    pub gates: Vec<Gate>,
    rows: Vec<Vec<bool>>,
    labels: Labels,
}

impl Encoding {
    /// The full assignment that realizes `path` (padded with unused nodes),
    /// including `v`, `n`, `m` and every auxiliary. Sparse layouts set `m_i`
    /// exactly for instances the path misclassifies or leaves unclassified.
    pub fn assignment_for(&self, path: &[Node]) -> Vec<bool> {
        let l = &self.layout;
        assert!(path.len() <= l.nodes, "path longer than the layout");
        let mut full: Vec<Node> = path.to_vec();
        full.resize(l.nodes, Node::Unused);
        let mut a = vec![false; self.formula.variable_count as usize + 1];
        for (j, node) in full.iter().enumerate() {
            match *node {
                Node::Unused => a[l.u(j) as usize] = true,
                Node::Feature { feature, positive } => {
                    a[l.s(j, feature) as usize] = true;
                    a[l.t(j) as usize] = positive;
                }
                Node::Leaf { class } => {
                    if l.is_binary() {
                        a[l.s_class(j, 0) as usize] = true;
                        a[l.t(j) as usize] = class == 1;
                    } else {
                        a[l.s_class(j, class) as usize] = true;
                        a[l.t(j) as usize] = true;
                    }
                }
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            let (valid, unclassified) = simulate_path(&full, row);
            for j in 0..l.nodes {
                a[l.v(i, j) as usize] = valid[j];
                a[l.n(i, j) as usize] = unclassified[j];
            }
            if l.sparse {
                let truth = match &self.labels {
                    Labels::Binary(pos) => pos[i] as usize,
                    Labels::Multi { classes, .. } => classes[i],
                };
                let verdict = full
                    .iter()
                    .enumerate()
                    .find(|(j, node)| matches!(node, Node::Leaf { .. }) && valid[*j]);
                let correct = matches!(verdict, Some((_, Node::Leaf { class })) if *class == truth);
                a[l.m(i) as usize] = !correct;
            }
        }
        CnfBuilder::extend_assignment(&self.gates, &mut a);
        a
    }
}

fn class_lits(layout: &VariableLayout, node: usize) -> Vec<i32> {
    (0..layout.class_features)
        .map(|c| layout.s_class(node, c))
        .collect()
}

pub(crate) fn encode(problem: &Problem) -> Result<Encoding, EncodeError> {
    let nodes = problem.nodes;
    let instances = problem.rows.len();
    let class_features = match &problem.labels {
        Labels::Binary(_) => 1,
        Labels::Multi { count, .. } => *count,
    };
    let layout = VariableLayout::new(
        nodes,
        instances,
        problem.features,
        class_features,
        problem.sparse.is_some(),
    )?;
    let l = &layout;
    let mut b = CnfBuilder::with_reserved(l.primary_count());

    // each node decides exactly one slot or is unused
    for j in 0..nodes {
        let mut lits = vec![l.u(j)];
        lits.extend((0..l.slots()).map(|r| l.s(j, r)));
        b.exactly_one(&lits)?;
    }
    // unused nodes form a suffix
    for j in 0..nodes - 1 {
        b.add_clause(&[-l.u(j), l.u(j + 1)]);
    }
    // the last used node is a leaf
    for j in 0..nodes - 1 {
        let mut clause = vec![-l.u(j + 1), l.u(j)];
        clause.extend(class_lits(l, j));
        b.add_clause(&clause);
    }
    let mut last = vec![l.u(nodes - 1)];
    last.extend(class_lits(l, nodes - 1));
    b.add_clause(&last);

    let leaf: Vec<i32> = (0..nodes).map(|j| b.reify_or(&class_lits(l, j))).collect();

    if problem.require_nonempty {
        b.add_clause(&[-l.u(0)]);
    }
    if problem.forbid_empty_rules {
        b.add_clause(&[-leaf[0]]);
        for j in 0..nodes - 1 {
            b.add_clause(&[-leaf[j], -leaf[j + 1]]);
        }
    }
    // leaves only state membership of their class
    if problem.pin_leaf_positive || matches!(problem.labels, Labels::Multi { .. }) {
        for j in 0..nodes {
            for lit in class_lits(l, j) {
                b.add_clause(&[-lit, l.t(j)]);
            }
        }
    }

    for (i, row) in problem.rows.iter().enumerate() {
        b.add_clause(&[l.n(i, 0)]);
        b.add_clause(&[l.v(i, 0)]);
        let mut fired = Vec::with_capacity(nodes);
        for j in 0..nodes {
            fired.push(b.reify_and(&[leaf[j], l.v(i, j)]));
        }
        for j in 0..nodes - 1 {
            // unclassified after j iff unclassified at j and not classified by a leaf at j
            b.equiv_and(l.n(i, j + 1), &[l.n(i, j), -fired[j]]);
            // valid after j iff a rule restarts here, or still agreeing with the rule
            let terms: Vec<i32> = (0..problem.features)
                .map(|r| {
                    let t = if row[r] { l.t(j) } else { -l.t(j) };
                    b.reify_and(&[l.s(j, r), t])
                })
                .collect();
            let agree = b.reify_or(&terms);
            let keep = b.reify_and(&[l.v(i, j), agree]);
            let restart = b.reify_and(&[leaf[j], l.n(i, j + 1)]);
            b.equiv_or(l.v(i, j + 1), &[restart, keep]);
        }

        let slack = problem.sparse.map(|_| l.m(i));
        let with_slack = |mut c: Vec<i32>| {
            c.extend(slack);
            c
        };
        // a leaf that fires must predict the right class
        for j in 0..nodes {
            match &problem.labels {
                Labels::Binary(pos) => {
                    let t = if pos[i] { l.t(j) } else { -l.t(j) };
                    b.add_clause(&with_slack(vec![-l.s_class(j, 0), -l.v(i, j), t]));
                }
                Labels::Multi { classes, count } => {
                    for c in (0..*count).filter(|&c| c != classes[i]) {
                        b.add_clause(&with_slack(vec![-l.s_class(j, c), -l.v(i, j)]));
                    }
                }
            }
        }
        if problem.cover[i] {
            b.add_clause(&with_slack(fired.clone()));
        }
    }

    let mut soft = Vec::new();
    match problem.sparse {
        None => soft.extend((0..nodes).map(|j| (vec![l.u(j)], 1))),
        Some(big_lambda) => {
            soft.extend((0..instances).map(|i| (vec![-l.m(i)], 1)));
            soft.extend((0..nodes).map(|j| (vec![l.u(j)], big_lambda)));
        }
    }

    let (variable_count, hard, gates) = b.into_parts();
    Ok(Encoding {
        formula: WcnfFormula {
            variable_count,
            hard,
            soft,
        },
        layout,
        gates,
        rows: problem.rows.iter().map(|r| r.to_vec()).collect(),
        labels: problem.labels.clone(),
    })
}

fn labels_of(ds: &BinDataset) -> Labels {
    if ds.class_count() == 2 {
        Labels::Binary(ds.instances.iter().map(|i| i.class_id == 1).collect())
    } else {
        Labels::Multi {
            classes: ds.instances.iter().map(|i| i.class_id).collect(),
            count: ds.class_count(),
        }
    }
}

fn rows_of(instances: &[Instance]) -> Vec<&[bool]> {
    instances.iter().map(|i| i.features.as_slice()).collect()
}

/// Minimum-size perfect list with at most `nodes` nodes: every instance must
/// be classified correctly; soft clauses `(u_j, 1)` reward unused nodes.
pub fn encode_perfect(ds: &BinDataset, nodes: usize) -> Result<Encoding, EncodeError> {
    let conflicts = check_consistency(ds);
    if !conflicts.is_empty() {
        return Err(EncodeError::Inconsistent(conflicts));
    }
    if nodes < 2 {
        return Err(EncodeError::TooFewNodes(nodes));
    }
    encode(&Problem {
        rows: rows_of(&ds.instances),
        features: ds.feature_count(),
        labels: labels_of(ds),
        nodes,
        cover: vec![true; ds.len()],
        pin_leaf_positive: false,
        forbid_empty_rules: false,
        sparse: None,
        require_nonempty: false,
    })
}

/// Sparse list: misclassifications (`m_i`, weight 1) traded against used
/// nodes (weight `big_lambda` each). The empty list is excluded.
pub fn encode_sparse(
    ds: &BinDataset,
    nodes: usize,
    cfg: &SparseConfig,
) -> Result<Encoding, EncodeError> {
    encode(&Problem {
        rows: rows_of(&ds.instances),
        features: ds.feature_count(),
        labels: labels_of(ds),
        nodes,
        cover: vec![true; ds.len()],
        pin_leaf_positive: false,
        forbid_empty_rules: false,
        sparse: Some(cfg.big_lambda),
        require_nonempty: true,
    })
}

/// One-vs-rest segment for `target`: leaves predict `target` only, only
/// target instances need covering, and no rule may be empty.
pub fn encode_segment(
    instances: &[&Instance],
    features: usize,
    target: usize,
    nodes: usize,
    sparse: Option<u64>,
) -> Result<Encoding, EncodeError> {
    let positive: Vec<bool> = instances.iter().map(|i| i.class_id == target).collect();
    encode(&Problem {
        rows: instances.iter().map(|i| i.features.as_slice()).collect(),
        features,
        labels: Labels::Binary(positive.clone()),
        nodes,
        cover: positive,
        pin_leaf_positive: true,
        forbid_empty_rules: true,
        sparse,
        require_nonempty: false,
    })
}
