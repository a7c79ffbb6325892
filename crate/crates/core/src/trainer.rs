//! Training drivers: iterative-N perfect lists, sparse lists, and separated
//! lists built one class segment at a time.

use std::cmp::Ordering;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::{check_consistency, BinDataset, Instance};
use crate::encoder::{encode_perfect, encode_segment, encode_sparse, EncodeError, Encoding, Node, SparseConfig};
use crate::maxsat::{MaxSatSolver, OptResult, SolveError, SolveStatus};
use crate::metrics::{sparse_objective, SparseObjective};
use crate::model::{decode, decode_path, rules_from_path, DecisionList, ModelError, Rule, Schema};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is inconsistent: {} group(s) of identical rows carry different classes", .0.len())]
    Inconsistent(Vec<Vec<usize>>),
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("no perfect list with at most {max_n} nodes")]
    NodeLimit { max_n: usize },
    #[error("solver budget exhausted before any solution was found (N = {nodes})")]
    Timeout { nodes: usize },
    #[error("invalid node schedule: {0}")]
    BadSchedule(String),
    #[error("invalid class order: {0}")]
    BadOrder(String),
    #[error("class `{class}`: {source}")]
    Segment {
        class: String,
        #[source]
        source: Box<TrainError>,
    },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl TrainError {
    /// 3 for unsatisfiable or inconsistent input, 4 for resource limits,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            TrainError::Inconsistent(_) | TrainError::Encode(EncodeError::Inconsistent(_)) => 3,
            TrainError::NodeLimit { .. } | TrainError::Timeout { .. } => 4,
            TrainError::Segment { source, .. } => source.exit_code(),
            TrainError::BadSchedule(_) | TrainError::BadOrder(_) => 2,
            _ => 1,
        }
    }
}

/// How N grows when a perfect list does not fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NSchedule {
    pub initial_n: usize,
    pub step: usize,
    pub max_n: usize,
}

impl NSchedule {
    pub const DEFAULT_STEP: usize = 5;
    pub const DEFAULT_MAX_N: usize = 200;

    /// `initial_n = |C| + 1`, step 5.
    pub fn for_classes(classes: usize) -> Self {
        NSchedule {
            initial_n: (classes + 1).max(2),
            step: Self::DEFAULT_STEP,
            max_n: Self::DEFAULT_MAX_N,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.initial_n < 2 {
            return Err(TrainError::BadSchedule(format!("initial N {} < 2", self.initial_n)));
        }
        if self.step < 1 {
            return Err(TrainError::BadSchedule("step must be at least 1".into()));
        }
        if self.max_n < self.initial_n {
            return Err(TrainError::BadSchedule(format!(
                "max N {} below initial N {}",
                self.max_n, self.initial_n
            )));
        }
        Ok(())
    }

    fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        let mut n = Some(self.initial_n);
        std::iter::from_fn(move || {
            let cur = n?;
            n = match cur {
                c if c >= self.max_n => None,
                c => Some((c + self.step).min(self.max_n)),
            };
            Some(cur)
        })
    }
}

/// A trained list plus how it was obtained.
#[derive(Debug, Clone)]
pub struct Trained {
    pub list: DecisionList,
    /// False when a time limit cut the search short.
    pub optimal: bool,
    /// Node bound N of the final formula.
    pub nodes: usize,
    /// Solver cost of the final formula.
    pub cost: u64,
}

fn solution_or_timeout(result: &OptResult, nodes: usize) -> Result<&[bool], TrainError> {
    result
        .solution
        .as_ref()
        .map(|s| s.assignment.as_slice())
        .ok_or(TrainError::Timeout { nodes })
}

/// Smallest perfect list, growing N along `schedule` while the hard
/// clauses are unsatisfiable.
pub fn train_perfect(
    ds: &BinDataset,
    schedule: &NSchedule,
    solver: &dyn MaxSatSolver,
) -> Result<Trained, TrainError> {
    schedule.validate()?;
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let conflicts = check_consistency(ds);
    if !conflicts.is_empty() {
        return Err(TrainError::Inconsistent(conflicts));
    }
    let schema = Schema::of(ds);
    for nodes in schedule.sizes() {
        let enc = encode_perfect(ds, nodes)?;
        let result = solver.solve(&enc.formula)?;
        if result.status == SolveStatus::Unsatisfiable {
            continue;
        }
        let assignment = solution_or_timeout(&result, nodes)?;
        let list = decode(assignment, &enc.layout, &schema)?;
        return Ok(Trained {
            list,
            optimal: result.is_optimum(),
            nodes,
            cost: result.cost().unwrap_or_default(),
        });
    }
    Err(TrainError::NodeLimit {
        max_n: schedule.max_n,
    })
}

/// `ceil(M / big_lambda) + 1`: a default rule costs at most `M + big_lambda`
/// while `n` nodes cost at least `n * big_lambda`.
pub fn sparse_node_bound(instances: usize, big_lambda: u64) -> usize {
    (instances as u64).div_ceil(big_lambda) as usize + 1
}

/// A sparse list together with its objective breakdown.
#[derive(Debug, Clone)]
pub struct SparseTrained {
    pub trained: Trained,
    pub objective: SparseObjective,
}

pub fn train_sparse(
    ds: &BinDataset,
    cfg: &SparseConfig,
    n_override: Option<usize>,
    solver: &dyn MaxSatSolver,
) -> Result<SparseTrained, TrainError> {
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let nodes = n_override.unwrap_or_else(|| sparse_node_bound(ds.len(), cfg.big_lambda));
    let enc = encode_sparse(ds, nodes, cfg)?;
    let result = solver.solve(&enc.formula)?;
    if result.status == SolveStatus::Unsatisfiable {
        // cannot happen: a default rule is always feasible
        return Err(TrainError::Encode(EncodeError::TooFewNodes(nodes)));
    }
    let assignment = solution_or_timeout(&result, nodes)?;
    let list = decode(assignment, &enc.layout, &Schema::of(ds))?;
    let objective = sparse_objective(&list, ds, cfg.big_lambda, nodes)?;
    Ok(SparseTrained {
        trained: Trained {
            list,
            optimal: result.is_optimum(),
            nodes,
            cost: result.cost().unwrap_or_default(),
        },
        objective,
    })
}

/// How classes are arranged into segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderingStrategy {
    /// One integrated list, no segments.
    Union,
    CountAsc,
    CountDesc,
    AccAsc,
    AccDesc,
    CostAsc,
    CostDesc,
    Greedy,
    /// Class ids, first segment first.
    Explicit(Vec<usize>),
}

impl FromStr for OrderingStrategy {
    type Err = TrainError;

    /// Named strategies only; explicit orders need class names and are
    /// resolved by the caller.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "union" => OrderingStrategy::Union,
            "count-asc" | "inc" => OrderingStrategy::CountAsc,
            "count-desc" | "dec" => OrderingStrategy::CountDesc,
            "acc-asc" | "acc-inc" => OrderingStrategy::AccAsc,
            "acc-desc" | "acc-dec" => OrderingStrategy::AccDesc,
            "cost-asc" | "cost-inc" => OrderingStrategy::CostAsc,
            "cost-desc" | "cost-dec" => OrderingStrategy::CostDesc,
            "greedy" => OrderingStrategy::Greedy,
            other => return Err(TrainError::BadOrder(format!("unknown strategy `{other}`"))),
        })
    }
}

/// What each segment (or the integrated list) optimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Perfect(NSchedule),
    Sparse {
        lambda: f64,
        /// Fixed N instead of the sound bound.
        nodes: Option<usize>,
    },
}

/// Per-class training quality of one segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassReport {
    pub class: usize,
    /// Class instances the segment covers.
    pub covered: usize,
    /// Class instances in the segment's training data.
    pub total: usize,
    /// Misclassification slack over all instances the segment saw.
    pub errors: usize,
    pub used_nodes: usize,
    /// `used_nodes + ceil(errors / big_lambda)`.
    pub cost: u64,
}

impl ClassReport {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }

    /// Compares accuracies exactly.
    fn cmp_accuracy(&self, other: &ClassReport) -> Ordering {
        let a = self.covered as u128 * other.total.max(1) as u128;
        let b = other.covered as u128 * self.total.max(1) as u128;
        let a = if self.total == 0 { other.total.max(1) as u128 } else { a };
        let b = if other.total == 0 { self.total.max(1) as u128 } else { b };
        a.cmp(&b)
    }
}

/// One trained class segment.
#[derive(Debug, Clone)]
struct Segment {
    rules: Vec<Rule>,
    report: ClassReport,
    optimal: bool,
}

#[derive(Debug, Clone, Copy)]
struct SegmentParams<'a> {
    mode: &'a Mode,
    /// Fixed for the whole separated run: computed from the full training set.
    big_lambda: u64,
    features: usize,
}

fn params<'a>(ds: &BinDataset, mode: &'a Mode) -> Result<SegmentParams<'a>, TrainError> {
    let big_lambda = match mode {
        Mode::Perfect(s) => {
            s.validate()?;
            1
        }
        Mode::Sparse { lambda, .. } => SparseConfig::new(*lambda, ds.len())?.big_lambda,
    };
    Ok(SegmentParams {
        mode,
        big_lambda,
        features: ds.feature_count(),
    })
}

fn segment_report(rules: &[Rule], remaining: &[&Instance], target: usize, big_lambda: u64) -> ClassReport {
    let mut covered = 0;
    let mut total = 0;
    let mut errors = 0;
    for inst in remaining {
        let fires = rules.iter().any(|r| r.fires(&inst.features));
        if inst.class_id == target {
            total += 1;
            if fires {
                covered += 1;
            } else {
                errors += 1;
            }
        } else if fires {
            errors += 1;
        }
    }
    let used_nodes: usize = rules.iter().map(Rule::size).sum();
    ClassReport {
        class: target,
        covered,
        total,
        errors,
        used_nodes,
        cost: used_nodes as u64 + (errors as u64).div_ceil(big_lambda),
    }
}

fn decode_segment(enc: &Encoding, assignment: &[bool], target: usize) -> Result<Vec<Rule>, TrainError> {
    let path: Vec<Node> = decode_path(assignment, &enc.layout)?;
    let mut rules = rules_from_path(&path)?;
    for r in &mut rules {
        r.class = target;
    }
    Ok(rules)
}

fn train_segment(
    remaining: &[&Instance],
    target: usize,
    p: SegmentParams<'_>,
    solver: &dyn MaxSatSolver,
) -> Result<Segment, TrainError> {
    if !remaining.iter().any(|i| i.class_id == target) {
        return Ok(Segment {
            rules: Vec::new(),
            report: segment_report(&[], remaining, target, p.big_lambda),
            optimal: true,
        });
    }
    match p.mode {
        Mode::Perfect(schedule) => {
            for nodes in schedule.sizes() {
                let enc = encode_segment(remaining, p.features, target, nodes, None)?;
                let result = solver.solve(&enc.formula)?;
                if result.status == SolveStatus::Unsatisfiable {
                    continue;
                }
                let rules = decode_segment(&enc, solution_or_timeout(&result, nodes)?, target)?;
                return Ok(Segment {
                    report: segment_report(&rules, remaining, target, p.big_lambda),
                    rules,
                    optimal: result.is_optimum(),
                });
            }
            Err(TrainError::NodeLimit {
                max_n: schedule.max_n,
            })
        }
        Mode::Sparse { nodes, .. } => {
            let nodes = nodes.unwrap_or_else(|| sparse_node_bound(remaining.len(), p.big_lambda));
            let enc = encode_segment(remaining, p.features, target, nodes, Some(p.big_lambda))?;
            let result = solver.solve(&enc.formula)?;
            let rules = decode_segment(&enc, solution_or_timeout(&result, nodes)?, target)?;
            Ok(Segment {
                report: segment_report(&rules, remaining, target, p.big_lambda),
                rules,
                optimal: result.is_optimum(),
            })
        }
    }
}

fn named(ds: &BinDataset, class: usize, err: TrainError) -> TrainError {
    TrainError::Segment {
        class: ds.class_names[class].clone(),
        source: Box::new(err),
    }
}

fn present_classes(instances: &[&Instance], classes: usize) -> Vec<usize> {
    let mut seen = vec![false; classes];
    for i in instances {
        seen[i.class_id] = true;
    }
    (0..classes).filter(|&c| seen[c]).collect()
}

/// Trains one segment per class concurrently on the same instances.
fn probe_all(
    ds: &BinDataset,
    remaining: &[&Instance],
    classes: &[usize],
    p: SegmentParams<'_>,
    solver: &dyn MaxSatSolver,
) -> Result<Vec<Segment>, TrainError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = classes
            .iter()
            .map(|&c| scope.spawn(move || train_segment(remaining, c, p, solver)))
            .collect();
        handles
            .into_iter()
            .zip(classes)
            .map(|(h, &c)| h.join().expect("probe thread").map_err(|e| named(ds, c, e)))
            .collect()
    })
}

/// Sorts by `key`, ties broken by ascending class id.
fn sort_by<F: Fn(&ClassReport, &ClassReport) -> Ordering>(reports: &mut [ClassReport], key: F) {
    reports.sort_by(|a, b| key(a, b).then(a.class.cmp(&b.class)));
}

/// The segment order for a non-greedy separated strategy.
pub fn order_classes(
    ds: &BinDataset,
    strategy: &OrderingStrategy,
    mode: &Mode,
    solver: &dyn MaxSatSolver,
) -> Result<Vec<usize>, TrainError> {
    let all: Vec<&Instance> = ds.instances.iter().collect();
    let present = present_classes(&all, ds.class_count());
    let counts = ds.class_counts();
    let by_count = |desc: bool| {
        let mut order = present.clone();
        order.sort_by(|&a, &b| {
            let o = counts[a].cmp(&counts[b]);
            if desc { o.reverse() } else { o }.then(a.cmp(&b))
        });
        order
    };
    let probed = |f: &dyn Fn(&ClassReport, &ClassReport) -> Ordering| -> Result<Vec<usize>, TrainError> {
        let p = params(ds, mode)?;
        let mut reports: Vec<ClassReport> = probe_all(ds, &all, &present, p, solver)?
            .into_iter()
            .map(|s| s.report)
            .collect();
        sort_by(&mut reports, f);
        Ok(reports.into_iter().map(|r| r.class).collect())
    };
    match strategy {
        OrderingStrategy::CountAsc => Ok(by_count(false)),
        OrderingStrategy::CountDesc => Ok(by_count(true)),
        OrderingStrategy::AccAsc => probed(&|a, b| a.cmp_accuracy(b)),
        OrderingStrategy::AccDesc => probed(&|a, b| b.cmp_accuracy(a)),
        OrderingStrategy::CostAsc => probed(&|a, b| a.cost.cmp(&b.cost)),
        OrderingStrategy::CostDesc => probed(&|a, b| b.cost.cmp(&a.cost)),
        OrderingStrategy::Explicit(sigma) => {
            check_permutation(sigma, &present, ds.class_count())?;
            Ok(sigma.iter().copied().filter(|c| present.contains(c)).collect())
        }
        OrderingStrategy::Union | OrderingStrategy::Greedy => Err(TrainError::BadOrder(
            "union and greedy have no fixed class order".into(),
        )),
    }
}

fn check_permutation(sigma: &[usize], present: &[usize], classes: usize) -> Result<(), TrainError> {
    let mut seen = vec![false; classes];
    for &c in sigma {
        if c >= classes {
            return Err(TrainError::BadOrder(format!("class id {c} out of range")));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(TrainError::BadOrder(format!("class id {c} listed twice")));
        }
    }
    if let Some(&c) = present.iter().find(|&&c| !seen[c]) {
        return Err(TrainError::BadOrder(format!("class id {c} missing")));
    }
    Ok(())
}

/// Result of a separated run.
#[derive(Debug, Clone)]
pub struct Separated {
    pub list: DecisionList,
    /// Classes in segment order; the last one owns the default rule.
    pub order: Vec<usize>,
    /// One report per trained (non-default) segment.
    pub reports: Vec<ClassReport>,
    pub optimal: bool,
}

fn classified_by<'a>(rules: &[Rule], remaining: Vec<&'a Instance>) -> Vec<&'a Instance> {
    remaining
        .into_iter()
        .filter(|i| !rules.iter().any(|r| r.fires(&i.features)))
        .collect()
}

/// Segments in the order `sigma`; the last class gets a default rule, and
/// so does the first class whose remaining instances are all its own.
pub fn train_separated_fixed(
    ds: &BinDataset,
    sigma: &[usize],
    mode: &Mode,
    solver: &dyn MaxSatSolver,
) -> Result<Separated, TrainError> {
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let all: Vec<&Instance> = ds.instances.iter().collect();
    let present = present_classes(&all, ds.class_count());
    check_permutation(sigma, &present, ds.class_count())?;
    if matches!(mode, Mode::Perfect(_)) {
        let conflicts = check_consistency(ds);
        if !conflicts.is_empty() {
            return Err(TrainError::Inconsistent(conflicts));
        }
    }
    let sigma: Vec<usize> = sigma.iter().copied().filter(|c| present.contains(c)).collect();
    let p = params(ds, mode)?;
    let mut remaining = all;
    let mut rules = Vec::new();
    let mut reports = Vec::new();
    let mut order = Vec::new();
    let mut optimal = true;
    for (pos, &c) in sigma.iter().enumerate() {
        order.push(c);
        let last = pos + 1 == sigma.len();
        if last || remaining.iter().all(|i| i.class_id == c) {
            rules.push(Rule::default_to(c));
            break;
        }
        let seg = train_segment(&remaining, c, p, solver).map_err(|e| named(ds, c, e))?;
        optimal &= seg.optimal;
        remaining = classified_by(&seg.rules, remaining);
        rules.extend(seg.rules);
        reports.push(seg.report);
    }
    Ok(Separated {
        list: DecisionList::new(rules, Schema::of(ds)),
        order,
        reports,
        optimal,
    })
}

/// Each round trains every unfixed class on the remaining instances and
/// fixes the cheapest (ties: higher accuracy, then lower class id).
pub fn train_separated_greedy(
    ds: &BinDataset,
    mode: &Mode,
    solver: &dyn MaxSatSolver,
) -> Result<Separated, TrainError> {
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if matches!(mode, Mode::Perfect(_)) {
        let conflicts = check_consistency(ds);
        if !conflicts.is_empty() {
            return Err(TrainError::Inconsistent(conflicts));
        }
    }
    let p = params(ds, mode)?;
    let mut remaining: Vec<&Instance> = ds.instances.iter().collect();
    let mut unfixed = present_classes(&remaining, ds.class_count());
    let mut rules = Vec::new();
    let mut reports = Vec::new();
    let mut order = Vec::new();
    let mut optimal = true;
    loop {
        let live: Vec<usize> = present_classes(&remaining, ds.class_count())
            .into_iter()
            .filter(|c| unfixed.contains(c))
            .collect();
        if live.len() <= 1 {
            let counts = ds.class_counts();
            let default = live.first().copied().unwrap_or_else(|| {
                unfixed
                    .iter()
                    .copied()
                    .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                    .unwrap_or_else(|| ds.majority_class())
            });
            order.push(default);
            rules.push(Rule::default_to(default));
            break;
        }
        let segments = probe_all(ds, &remaining, &live, p, solver)?;
        let best = segments
            .into_iter()
            .min_by(|a, b| {
                a.report
                    .cost
                    .cmp(&b.report.cost)
                    .then(b.report.cmp_accuracy(&a.report))
                    .then(a.report.class.cmp(&b.report.class))
            })
            .expect("at least two live classes");
        let c = best.report.class;
        optimal &= best.optimal;
        unfixed.retain(|&u| u != c);
        order.push(c);
        remaining = classified_by(&best.rules, remaining);
        rules.extend(best.rules);
        reports.push(best.report);
    }
    Ok(Separated {
        list: DecisionList::new(rules, Schema::of(ds)),
        order,
        reports,
        optimal,
    })
}

/// Everything a full training run reports.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub list: DecisionList,
    pub optimal: bool,
    /// Node bound of the integrated formula; `None` for separated runs.
    pub nodes: Option<usize>,
    /// Solver cost of the integrated formula; `None` for separated runs.
    pub cost: Option<u64>,
    /// Sparse mode: objective of the final list on the training data.
    pub objective: Option<SparseObjective>,
    /// Segment order; empty for integrated runs.
    pub order: Vec<usize>,
    pub reports: Vec<ClassReport>,
}

/// Trains according to `mode` and `strategy`.
pub fn train(
    ds: &BinDataset,
    mode: &Mode,
    strategy: &OrderingStrategy,
    solver: &dyn MaxSatSolver,
) -> Result<TrainOutcome, TrainError> {
    if ds.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let sparse = match mode {
        Mode::Sparse { lambda, nodes } => Some((SparseConfig::new(*lambda, ds.len())?, *nodes)),
        Mode::Perfect(_) => None,
    };
    let separated = match strategy {
        OrderingStrategy::Union => {
            return match (mode, sparse) {
                (Mode::Perfect(schedule), _) => {
                    let t = train_perfect(ds, schedule, solver)?;
                    Ok(TrainOutcome {
                        list: t.list,
                        optimal: t.optimal,
                        nodes: Some(t.nodes),
                        cost: Some(t.cost),
                        objective: None,
                        order: Vec::new(),
                        reports: Vec::new(),
                    })
                }
                (_, Some((cfg, nodes))) => {
                    let s = train_sparse(ds, &cfg, nodes, solver)?;
                    Ok(TrainOutcome {
                        list: s.trained.list,
                        optimal: s.trained.optimal,
                        nodes: Some(s.trained.nodes),
                        cost: Some(s.trained.cost),
                        objective: Some(s.objective),
                        order: Vec::new(),
                        reports: Vec::new(),
                    })
                }
                _ => unreachable!("sparse mode always has a config"),
            };
        }
        OrderingStrategy::Greedy => train_separated_greedy(ds, mode, solver)?,
        other => {
            let sigma = order_classes(ds, other, mode, solver)?;
            train_separated_fixed(ds, &sigma, mode, solver)?
        }
    };
    let objective = match sparse {
        Some((cfg, nodes)) => {
            let n = nodes.unwrap_or_else(|| sparse_node_bound(ds.len(), cfg.big_lambda));
            Some(sparse_objective(&separated.list, ds, cfg.big_lambda, n)?)
        }
        None => None,
    };
    Ok(TrainOutcome {
        list: separated.list,
        optimal: separated.optimal,
        nodes: None,
        cost: None,
        objective,
        order: separated.order,
        reports: separated.reports,
    })
}
