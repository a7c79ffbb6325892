//! A compact CDCL SAT solver: two watched literals, first-UIP learning with
//! basic clause minimization, VSIDS with phase saving, Luby restarts and
//! solving under assumptions. Complete and deterministic.

use std::time::Instant;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Lit(u32);

impl Lit {
    fn from_dimacs(l: i32) -> Lit {
        debug_assert!(l != 0);
        Lit((l.unsigned_abs() - 1) * 2 + (l < 0) as u32)
    }
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    fn neg(self) -> Lit {
        Lit(self.0 ^ 1)
    }
    fn negative(self) -> bool {
        self.0 & 1 == 1
    }
    fn idx(self) -> usize {
        self.0 as usize
    }
}

const TRUE: u8 = 1;
const FALSE: u8 = 0;
const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    /// The deadline passed first.
    Unknown,
}

/// The contract the MaxSAT layer needs from a SAT procedure.
pub trait SatBackend {
    /// Makes sure variables `1..=count` exist.
    fn ensure_vars(&mut self, count: u32);
    fn new_var(&mut self) -> i32;
    /// Returns `false` once the clause set is known to be unsatisfiable.
    fn add_clause(&mut self, lits: &[i32]) -> bool;
    fn solve(&mut self, assumptions: &[i32], deadline: Option<Instant>) -> SatResult;
    /// Value of `var` in the last model; index 0 is unused.
    fn model(&self) -> &[bool];
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

/// Max-heap of variables keyed by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, vars: usize) {
        self.pos.resize(vars, None);
    }
    fn contains(&self, v: usize) -> bool {
        self.pos[v].is_some()
    }
    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = Some(self.heap.len());
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }
    fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Some(p) = self.pos[v] {
            self.up(p, act);
        }
    }
    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }
    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[parent]] >= act[v] {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i]] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }
    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let left = 2 * i + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let child = if right < n && act[self.heap[right]] > act[self.heap[left]] {
                right
            } else {
                left
            };
            if act[self.heap[child]] <= act[v] {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i]] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }
}

fn luby(mut x: u64) -> u64 {
    let (mut size, mut seq) = (1u64, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

pub struct CdclSolver {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    seen: Vec<bool>,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    ok: bool,
    model: Vec<bool>,
    conflicts: u64,
    ticks: u64,
}

impl Default for CdclSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl CdclSolver {
    pub fn new() -> Self {
        CdclSolver {
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            seen: Vec::new(),
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 0.0,
            ok: true,
            model: vec![false],
            conflicts: 0,
            ticks: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    fn value(&self, l: Lit) -> u8 {
        match self.assigns[l.var()] {
            UNDEF => UNDEF,
            a => a ^ l.negative() as u8,
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = (!l.negative()) as u8;
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].neg().idx()].push(Watcher { cref, blocker: lits[1] });
        self.watches[lits[1].neg().idx()].push(Watcher { cref, blocker: lits[0] });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.ticks += 1;
            let false_lit = p.neg();
            let mut ws = std::mem::take(&mut self.watches[p.idx()]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                if self.clauses[cref as usize].deleted {
                    continue;
                }
                let first = {
                    let lits = &mut self.clauses[cref as usize].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                    lits[0]
                };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = Watcher { cref, blocker: first };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref as usize].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let lk = self.clauses[cref as usize].lits[k];
                    if self.value(lk) != FALSE {
                        let lits = &mut self.clauses[cref as usize].lits;
                        lits.swap(1, k);
                        self.watches[lk.neg().idx()].push(Watcher { cref, blocker: first });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher { cref, blocker: first };
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, cref);
                }
            }
            ws.truncate(j);
            self.watches[p.idx()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut pending = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;
        loop {
            if self.clauses[confl as usize].learnt {
                self.bump_clause(confl);
            }
            let start = usize::from(p.is_some());
            let len = self.clauses[confl as usize].lits.len();
            for k in start..len {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            confl = self.reason[lit.var()];
            self.seen[lit.var()] = false;
            pending -= 1;
            if pending == 0 {
                break;
            }
        }
        learnt[0] = p.unwrap().neg();

        // drop literals implied by the rest of the clause
        let kept: Vec<Lit> = learnt[1..]
            .iter()
            .copied()
            .filter(|&q| {
                let r = self.reason[q.var()];
                r == NO_REASON
                    || self.clauses[r as usize].lits[1..].iter().any(|x| {
                        !self.seen[x.var()] && self.level[x.var()] > 0
                    })
            })
            .collect();
        for q in &learnt[1..] {
            self.seen[q.var()] = false;
        }
        learnt.truncate(1);
        learnt.extend(kept);

        let mut back = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var()] > self.level[learnt[best].var()] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            back = self.level[learnt[1].var()] as usize;
        }
        (learnt, back)
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for k in (lim..self.trail.len()).rev() {
            let v = self.trail[k].var();
            self.polarity[v] = self.assigns[v] == TRUE;
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = self.trail.len();
    }

    fn locked(&self, cref: u32) -> bool {
        let first = self.clauses[cref as usize].lits[0];
        self.reason[first.var()] == cref && self.value(first) == TRUE
    }

    fn reduce_db(&mut self) {
        let mut learnts = std::mem::take(&mut self.learnts);
        learnts.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .total_cmp(&self.clauses[b as usize].activity)
        });
        let half = learnts.len() / 2;
        let mut kept = Vec::with_capacity(learnts.len());
        for (k, cref) in learnts.into_iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if k < half && c.lits.len() > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = Vec::new();
            } else {
                kept.push(cref);
            }
        }
        self.learnts = kept;
        let clauses = &self.clauses;
        for ws in &mut self.watches {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(Lit(v as u32 * 2 + (!self.polarity[v]) as u32));
            }
        }
        None
    }

    fn search(
        &mut self,
        conflict_budget: u64,
        assumptions: &[Lit],
        deadline: Option<Instant>,
    ) -> Option<SatResult> {
        let mut local_conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                local_conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SatResult::Unsat);
                }
                let (learnt, back) = self.analyze(confl);
                self.cancel_until(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if self.conflicts.is_multiple_of(128) && deadline.is_some_and(|d| Instant::now() >= d) {
                    return Some(SatResult::Unknown);
                }
            } else {
                if local_conflicts >= conflict_budget {
                    self.cancel_until(0);
                    return None;
                }
                if self.learnts.len() as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                }
                if self.ticks > 1 << 14 {
                    self.ticks = 0;
                    if deadline.is_some_and(|d| Instant::now() >= d) {
                        return Some(SatResult::Unknown);
                    }
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let a = assumptions[self.decision_level()];
                    match self.value(a) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => return Some(SatResult::Unsat),
                        _ => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let lit = match next {
                    Some(l) => l,
                    None => match self.pick_branch() {
                        Some(l) => l,
                        None => {
                            self.model = vec![false; self.num_vars() + 1];
                            for v in 0..self.num_vars() {
                                self.model[v + 1] = self.assigns[v] == TRUE;
                            }
                            return Some(SatResult::Sat);
                        }
                    },
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(lit, NO_REASON);
            }
        }
    }
}

impl SatBackend for CdclSolver {
    fn ensure_vars(&mut self, count: u32) {
        let count = count as usize;
        while self.num_vars() < count {
            let v = self.num_vars();
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(NO_REASON);
            self.polarity.push(false);
            self.activity.push(0.0);
            self.seen.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.heap.grow(v + 1);
            self.heap.insert(v, &self.activity);
        }
    }

    fn new_var(&mut self) -> i32 {
        let v = self.num_vars() as u32 + 1;
        self.ensure_vars(v);
        v as i32
    }

    fn add_clause(&mut self, lits: &[i32]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        if let Some(max) = lits.iter().map(|l| l.unsigned_abs()).max() {
            self.ensure_vars(max);
        }
        let mut clause: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            let lit = Lit::from_dimacs(l);
            match self.value(lit) {
                TRUE => return true,
                FALSE => continue,
                _ => {}
            }
            if clause.contains(&lit.neg()) {
                return true;
            }
            if !clause.contains(&lit) {
                clause.push(lit);
            }
        }
        match clause.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(clause[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(clause, false);
            }
        }
        self.ok
    }

    fn solve(&mut self, assumptions: &[i32], deadline: Option<Instant>) -> SatResult {
        if !self.ok {
            return SatResult::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.unsigned_abs()).max() {
            self.ensure_vars(max);
        }
        let assumptions: Vec<Lit> = assumptions.iter().map(|&l| Lit::from_dimacs(l)).collect();
        self.max_learnts = self.max_learnts.max(self.clauses.len() as f64 / 3.0).max(2000.0);
        let mut restarts = 0;
        let result = loop {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                break SatResult::Unknown;
            }
            if let Some(r) = self.search(luby(restarts) * 100, &assumptions, deadline) {
                break r;
            }
            restarts += 1;
            self.max_learnts *= 1.05;
        };
        self.cancel_until(0);
        result
    }

    fn model(&self) -> &[bool] {
        &self.model
    }
}
