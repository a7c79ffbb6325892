//! Exact partial weighted MaxSAT.
//!
//! [`BuiltinSolver`] runs a linear SAT-UNSAT search: every soft clause gets a
//! relaxation literal, the weighted sum of relaxation literals is bounded by a
//! sequential weighted counter, and each improved model tightens the bound
//! (through an assumption on a counter output) until the SAT backend proves
//! that nothing cheaper exists. [`ExternalSolver`] hands the formula to any
//! MaxSAT-evaluation style binary instead and verifies what comes back.

mod external;
pub mod sat;
pub mod wcnf;

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::encoder::WcnfFormula;
pub use external::{format_output, interpret_output, ExternalSolver, SOLVER_ENV};
use sat::{CdclSolver, SatBackend, SatResult};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("cannot run external solver `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error while talking to the external solver: {0}")]
    Io(#[from] std::io::Error),
    #[error("external solver produced no status line ({status}); stderr: {stderr}")]
    Crashed { status: String, stderr: String },
    #[error("unparsable solver output: {0}")]
    Unparsable(String),
    #[error("solver assignment violates hard clause #{clause}")]
    HardViolated { clause: usize },
    #[error("solver reported cost {reported} but its assignment costs {actual}")]
    CostMismatch { reported: u64, actual: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// The solution is a proven optimum.
    Optimum,
    /// The hard clauses alone are unsatisfiable.
    Unsatisfiable,
    /// The budget ran out; the solution, if any, is the best one found.
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    /// Total weight of falsified soft clauses.
    pub cost: u64,
    /// Truth value per variable id; index 0 is unused.
    pub assignment: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult {
    pub status: SolveStatus,
    pub solution: Option<Solution>,
}

impl OptResult {
    pub fn cost(&self) -> Option<u64> {
        self.solution.as_ref().map(|s| s.cost)
    }

    pub fn is_optimum(&self) -> bool {
        self.status == SolveStatus::Optimum
    }
}

/// Anything that solves WCNF formulas exactly.
pub trait MaxSatSolver: Send + Sync {
    fn solve(&self, formula: &WcnfFormula) -> Result<OptResult, SolveError>;
}

/// The in-process solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinSolver {
    pub time_limit: Option<Duration>,
}

impl BuiltinSolver {
    pub fn new(time_limit: Option<Duration>) -> Self {
        BuiltinSolver { time_limit }
    }
}

impl MaxSatSolver for BuiltinSolver {
    fn solve(&self, formula: &WcnfFormula) -> Result<OptResult, SolveError> {
        Ok(solve_builtin(formula, self.time_limit))
    }
}

/// `sum_i w_i * x_i >= k` indicator literals for `k = 1..=bound`.
///
/// Only the upward direction is encoded (a large sum forces the indicators
/// true), which is all an upper bound needs.
struct WeightedCounter {
    at_least: Vec<i32>,
}

impl WeightedCounter {
    fn build<S: SatBackend>(sat: &mut S, terms: &[(i32, u64)], bound: u64) -> WeightedCounter {
        let mut prev: Vec<i32> = Vec::new();
        for &(lit, weight) in terms {
            let len = (prev.len() as u64 + weight).min(bound) as usize;
            let cur: Vec<i32> = (0..len).map(|_| sat.new_var()).collect();
            for k in 1..=len {
                let out = cur[k - 1];
                if k <= prev.len() {
                    sat.add_clause(&[-prev[k - 1], out]);
                }
                if k as u64 <= weight {
                    sat.add_clause(&[-lit, out]);
                } else if k - (weight as usize) <= prev.len() {
                    sat.add_clause(&[-lit, -prev[k - weight as usize - 1], out]);
                }
            }
            prev = cur;
        }
        WeightedCounter { at_least: prev }
    }

    /// Literal that must be false for the sum to stay below `k`.
    fn at_least(&self, k: u64) -> Option<i32> {
        self.at_least.get(k as usize - 1).copied()
    }
}

/// Linear SAT-UNSAT search for the minimum falsified soft weight.
pub fn solve_builtin(formula: &WcnfFormula, time_limit: Option<Duration>) -> OptResult {
    let deadline = time_limit.map(|t| Instant::now() + t);
    let mut sat = CdclSolver::new();
    solve_with(&mut sat, formula, deadline)
}

/// The search itself, over any SAT backend.
pub fn solve_with<S: SatBackend>(
    sat: &mut S,
    formula: &WcnfFormula,
    deadline: Option<Instant>,
) -> OptResult {
    let unsat = OptResult {
        status: SolveStatus::Unsatisfiable,
        solution: None,
    };
    sat.ensure_vars(formula.variable_count);
    for clause in &formula.hard {
        if !sat.add_clause(clause) {
            return unsat;
        }
    }
    // relaxation literal per soft clause: true when the clause is falsified
    let mut terms: Vec<(i32, u64)> = Vec::new();
    for (clause, weight) in &formula.soft {
        if *weight == 0 || clause.is_empty() {
            continue;
        }
        let relax = if clause.len() == 1 {
            -clause[0]
        } else {
            let r = sat.new_var();
            let mut relaxed = clause.clone();
            relaxed.push(r);
            sat.add_clause(&relaxed);
            r
        };
        terms.push((relax, *weight));
    }

    let snapshot = |sat: &S| {
        let mut assignment = sat.model().to_vec();
        assignment.truncate(formula.variable_count as usize + 1);
        assignment.resize(formula.variable_count as usize + 1, false);
        Solution {
            cost: formula.cost(&assignment),
            assignment,
        }
    };

    let mut best = match sat.solve(&[], deadline) {
        SatResult::Unsat => return unsat,
        SatResult::Unknown => {
            return OptResult {
                status: SolveStatus::Timeout,
                solution: None,
            }
        }
        SatResult::Sat => snapshot(sat),
    };
    let floor = formula
        .soft
        .iter()
        .filter(|(c, _)| c.is_empty())
        .map(|(_, w)| *w)
        .sum::<u64>();
    if best.cost == floor {
        return OptResult {
            status: SolveStatus::Optimum,
            solution: Some(best),
        };
    }

    let counter = WeightedCounter::build(sat, &terms, best.cost - floor);
    while let Some(bound) = counter.at_least(best.cost - floor) {
        match sat.solve(&[-bound], deadline) {
            SatResult::Sat => {
                let next = snapshot(sat);
                debug_assert!(next.cost < best.cost);
                best = next;
                if best.cost == floor {
                    break;
                }
            }
            SatResult::Unsat => break,
            SatResult::Unknown => {
                return OptResult {
                    status: SolveStatus::Timeout,
                    solution: Some(best),
                }
            }
        }
    }
    OptResult {
        status: SolveStatus::Optimum,
        solution: Some(best),
    }
}
