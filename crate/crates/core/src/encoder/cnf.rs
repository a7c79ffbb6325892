//! Clause construction helpers: normalized clause storage, cardinality
//! (exactly-one) and Tseitin gates.
//!
//! Every auxiliary variable records a [`Gate`] describing the value it takes
//! in the intended model, so a partial assignment over the primary variables
//! can be extended to a full one with [`CnfBuilder::extend_assignment`].

use std::collections::{HashMap, HashSet};

use super::EncodeError;

/// Largest literal count handled with the quadratic pairwise encoding.
pub const PAIRWISE_LIMIT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    And,
    Or,
}

/// `var` is defined as the conjunction/disjunction of `inputs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub var: i32,
    pub kind: GateKind,
    pub inputs: Vec<i32>,
}

impl Gate {
    pub fn eval(&self, assignment: &[bool]) -> bool {
        let value = |l: &i32| lit_value(assignment, *l);
        match self.kind {
            GateKind::And => self.inputs.iter().all(value),
            GateKind::Or => self.inputs.iter().any(value),
        }
    }
}

/// Value of a signed literal under an assignment indexed by variable id.
pub fn lit_value(assignment: &[bool], lit: i32) -> bool {
    assignment[lit.unsigned_abs() as usize] == (lit > 0)
}

#[derive(Debug, Default, Clone)]
pub struct CnfBuilder {
    num_vars: u32,
    clauses: Vec<Vec<i32>>,
    seen: HashSet<Vec<i32>>,
    gates: Vec<Gate>,
    and_memo: HashMap<Vec<i32>, i32>,
    or_memo: HashMap<Vec<i32>, i32>,
}

impl CnfBuilder {
    /// A builder whose first `reserved` variable ids are already taken.
    pub fn with_reserved(reserved: u32) -> Self {
        CnfBuilder {
            num_vars: reserved,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn into_parts(self) -> (u32, Vec<Vec<i32>>, Vec<Gate>) {
        (self.num_vars, self.clauses, self.gates)
    }

    pub fn fresh(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }

    fn fresh_gate(&mut self, kind: GateKind, inputs: Vec<i32>) -> i32 {
        let var = self.fresh();
        self.gates.push(Gate { var, kind, inputs });
        var
    }

    /// Adds a clause after dropping repeated literals. Tautologies and
    /// clauses already present are skipped. Returns whether it was kept.
    pub fn add_clause(&mut self, lits: &[i32]) -> bool {
        let mut clause: Vec<i32> = Vec::with_capacity(lits.len());
        for &l in lits {
            debug_assert!(l != 0);
            if clause.contains(&-l) {
                return false;
            }
            if !clause.contains(&l) {
                clause.push(l);
            }
        }
        let mut key = clause.clone();
        key.sort_unstable();
        if !self.seen.insert(key) {
            return false;
        }
        self.clauses.push(clause);
        true
    }

    /// Exactly one of `lits` is true.
    ///
    /// Up to [`PAIRWISE_LIMIT`] literals use the pairwise encoding with no
    /// auxiliaries; longer lists use a sequential-counter ladder with
    /// `lits.len() - 1` auxiliaries, where ladder variable `y_i` means "one of
    /// the first `i + 1` literals is true".
    pub fn exactly_one(&mut self, lits: &[i32]) -> Result<(), EncodeError> {
        if lits.is_empty() {
            return Err(EncodeError::EmptyCardinality);
        }
        self.add_clause(lits);
        if lits.len() <= PAIRWISE_LIMIT {
            for (a, &x) in lits.iter().enumerate() {
                for &y in &lits[a + 1..] {
                    self.add_clause(&[-x, -y]);
                }
            }
            return Ok(());
        }
        let n = lits.len();
        let ladder: Vec<i32> = (1..n)
            .map(|i| self.fresh_gate(GateKind::Or, lits[..i].to_vec()))
            .collect();
        for i in 0..n - 1 {
            self.add_clause(&[-lits[i], ladder[i]]);
            self.add_clause(&[-ladder[i], -lits[i + 1]]);
            if i + 1 < n - 1 {
                self.add_clause(&[-ladder[i], ladder[i + 1]]);
            }
        }
        Ok(())
    }

    /// A literal equivalent to the conjunction of `lits`. A single input is
    /// returned unchanged; identical input sets share one variable.
    ///
    /// Panics on an empty input.
    pub fn reify_and(&mut self, lits: &[i32]) -> i32 {
        assert!(!lits.is_empty(), "reify_and of nothing");
        if lits.len() == 1 {
            return lits[0];
        }
        let mut key = lits.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&x) = self.and_memo.get(&key) {
            return x;
        }
        let x = self.fresh_gate(GateKind::And, lits.to_vec());
        self.equiv_and(x, lits);
        self.and_memo.insert(key, x);
        x
    }

    /// A literal equivalent to the disjunction of `lits`.
    ///
    /// Panics on an empty input.
    pub fn reify_or(&mut self, lits: &[i32]) -> i32 {
        assert!(!lits.is_empty(), "reify_or of nothing");
        if lits.len() == 1 {
            return lits[0];
        }
        let mut key = lits.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&x) = self.or_memo.get(&key) {
            return x;
        }
        let x = self.fresh_gate(GateKind::Or, lits.to_vec());
        self.equiv_or(x, lits);
        self.or_memo.insert(key, x);
        x
    }

    /// Clauses for `target <-> AND(lits)`.
    pub fn equiv_and(&mut self, target: i32, lits: &[i32]) {
        for &l in lits {
            self.add_clause(&[-target, l]);
        }
        let mut long: Vec<i32> = lits.iter().map(|&l| -l).collect();
        long.push(target);
        self.add_clause(&long);
    }

    /// Clauses for `target <-> OR(lits)`.
    pub fn equiv_or(&mut self, target: i32, lits: &[i32]) {
        for &l in lits {
            self.add_clause(&[target, -l]);
        }
        let mut long: Vec<i32> = lits.to_vec();
        long.push(-target);
        self.add_clause(&long);
    }

    /// Fills in every auxiliary variable from its gate definition. Gates are
    /// evaluated in creation order, which respects their dependencies.
    pub fn extend_assignment(gates: &[Gate], assignment: &mut [bool]) {
        for gate in gates {
            assignment[gate.var as usize] = gate.eval(assignment);
        }
    }
}

/// Whether every clause has a true literal.
pub fn satisfies(clauses: &[Vec<i32>], assignment: &[bool]) -> bool {
    clauses
        .iter()
        .all(|c| c.iter().any(|&l| lit_value(assignment, l)))
}
