//! Weighted variable-set automata.
//!
//! A weighted vset-automaton is an NFA over the alphabet extended with
//! variable markers `⊢x` / `⊣x`, with initial, final, and transition weights
//! drawn from a commutative semiring. Boolean-weighted automata are document
//! spanners; tropical- and numerical-weighted automata represent regular
//! weight functions.
//!
//! Entries absent from the weight maps mean weight `0̄`. The standing
//! assumption is that automata are free of epsilon-cycles; every algorithm
//! here that requires epsilon-freeness says so.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::semiring::{sr_add, SemiringKind, SemiringValue};
use crate::spans::{Var, VarOp, VarOpKind};

mod json;
mod ops;
mod regex;

pub use json::{automaton_from_json, automaton_to_json};
pub use ops::{
    accepts, join, materialize, normalize_var_order, project, remove_epsilon, union_,
    WeightedSpanRelation,
};
pub use regex::{compile_regex, parse_regex, RegexAst};

pub type StateId = usize;

/// A transition label: an alphabet symbol, epsilon, or a variable marker.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Eps,
    Sym(char),
    Open(Var),
    Close(Var),
}

impl Label {
    pub fn var_op(&self) -> Option<VarOp> {
        match self {
            Label::Open(v) => Some(VarOp::open(v.clone())),
            Label::Close(v) => Some(VarOp::close(v.clone())),
            _ => None,
        }
    }

    pub fn is_var_op(&self) -> bool {
        matches!(self, Label::Open(_) | Label::Close(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Eps => write!(f, "ε"),
            Label::Sym(c) => write!(f, "{c}"),
            Label::Open(v) => write!(f, "⊢{v}"),
            Label::Close(v) => write!(f, "⊣{v}"),
        }
    }
}

/// A weighted variable-set automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VsetAutomaton {
    semiring: SemiringKind,
    vars: BTreeSet<Var>,
    num_states: usize,
    initial: BTreeMap<StateId, SemiringValue>,
    finals: BTreeMap<StateId, SemiringValue>,
    /// `transitions[p][(label, q)] = w` with `w ≠ 0̄`.
    transitions: BTreeMap<StateId, BTreeMap<(Label, StateId), SemiringValue>>,
}

impl VsetAutomaton {
    pub fn new(semiring: SemiringKind, vars: impl IntoIterator<Item = Var>) -> Self {
        VsetAutomaton {
            semiring,
            vars: vars.into_iter().collect(),
            num_states: 0,
            initial: BTreeMap::new(),
            finals: BTreeMap::new(),
            transitions: BTreeMap::new(),
        }
    }

    pub fn semiring(&self) -> SemiringKind {
        self.semiring
    }

    pub fn vars(&self) -> &BTreeSet<Var> {
        &self.vars
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn add_state(&mut self) -> StateId {
        self.num_states += 1;
        self.num_states - 1
    }

    pub fn add_states(&mut self, n: usize) -> std::ops::Range<StateId> {
        let start = self.num_states;
        self.num_states += n;
        start..self.num_states
    }

    fn check_state(&self, q: StateId) {
        assert!(q < self.num_states, "state {q} out of range");
    }

    /// Sets the initial weight of `q`; a zero weight removes the entry.
    pub fn set_initial(&mut self, q: StateId, w: SemiringValue) {
        self.check_state(q);
        if w.is_zero() {
            self.initial.remove(&q);
        } else {
            self.initial.insert(q, w);
        }
    }

    pub fn set_final(&mut self, q: StateId, w: SemiringValue) {
        self.check_state(q);
        if w.is_zero() {
            self.finals.remove(&q);
        } else {
            self.finals.insert(q, w);
        }
    }

    /// Adds weight to a transition, combining with `⊕` if it already exists.
    pub fn add_transition(&mut self, p: StateId, label: Label, q: StateId, w: SemiringValue) {
        self.check_state(p);
        self.check_state(q);
        if let Label::Open(v) | Label::Close(v) = &label {
            assert!(self.vars.contains(v), "transition uses undeclared variable {v}");
        }
        if w.is_zero() {
            return;
        }
        let entry = self.transitions.entry(p).or_default().entry((label, q));
        match entry {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(w);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let combined = sr_add(self.semiring, e.get(), &w).expect("same semiring");
                if combined.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = combined;
                }
            }
        }
    }

    pub fn initial_weights(&self) -> impl Iterator<Item = (StateId, &SemiringValue)> {
        self.initial.iter().map(|(q, w)| (*q, w))
    }

    pub fn final_weights(&self) -> impl Iterator<Item = (StateId, &SemiringValue)> {
        self.finals.iter().map(|(q, w)| (*q, w))
    }

    pub fn initial_weight(&self, q: StateId) -> Option<&SemiringValue> {
        self.initial.get(&q)
    }

    pub fn final_weight(&self, q: StateId) -> Option<&SemiringValue> {
        self.finals.get(&q)
    }

    pub fn out_edges(&self, p: StateId) -> impl Iterator<Item = (&Label, StateId, &SemiringValue)> {
        self.transitions
            .get(&p)
            .into_iter()
            .flat_map(|m| m.iter().map(|((l, q), w)| (l, *q, w)))
    }

    pub fn edges(&self) -> impl Iterator<Item = (StateId, &Label, StateId, &SemiringValue)> {
        self.transitions
            .iter()
            .flat_map(|(p, m)| m.iter().map(move |((l, q), w)| (*p, l, *q, w)))
    }

    pub fn num_edges(&self) -> usize {
        self.transitions.values().map(|m| m.len()).sum()
    }

    pub fn has_epsilon(&self) -> bool {
        self.edges().any(|(_, l, _, _)| matches!(l, Label::Eps))
    }

    /// Out-edges grouped by label, for synchronized product constructions.
    pub(crate) fn out_by_label(&self) -> Vec<BTreeMap<Label, Vec<(StateId, SemiringValue)>>> {
        let mut out: Vec<BTreeMap<Label, Vec<(StateId, SemiringValue)>>> =
            vec![BTreeMap::new(); self.num_states];
        for (p, l, q, w) in self.edges() {
            out[p].entry(l.clone()).or_default().push((q, w.clone()));
        }
        out
    }

    /// States reachable from a nonzero initial state via nonzero transitions.
    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut queue: VecDeque<StateId> = self.initial.keys().copied().collect();
        for &q in self.initial.keys() {
            seen[q] = true;
        }
        while let Some(p) = queue.pop_front() {
            for (_, q, _) in self.out_edges(p) {
                if !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        seen
    }

    /// States from which a nonzero final state is reachable.
    fn coreachable(&self) -> Vec<bool> {
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); self.num_states];
        for (p, _, q, _) in self.edges() {
            rev[q].push(p);
        }
        let mut seen = vec![false; self.num_states];
        let mut queue: VecDeque<StateId> = self.finals.keys().copied().collect();
        for &q in self.finals.keys() {
            seen[q] = true;
        }
        while let Some(p) = queue.pop_front() {
            for &q in &rev[p] {
                if !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        seen
    }

    /// Removes every state that is not on a path from an initial to a final
    /// state, renumbering the survivors.
    pub fn trim(&self) -> VsetAutomaton {
        let reach = self.reachable();
        let coreach = self.coreachable();
        let mut map: Vec<Option<StateId>> = vec![None; self.num_states];
        let mut out = VsetAutomaton::new(self.semiring, self.vars.iter().cloned());
        for q in 0..self.num_states {
            if reach[q] && coreach[q] {
                map[q] = Some(out.add_state());
            }
        }
        for (&q, w) in &self.initial {
            if let Some(nq) = map[q] {
                out.set_initial(nq, w.clone());
            }
        }
        for (&q, w) in &self.finals {
            if let Some(nq) = map[q] {
                out.set_final(nq, w.clone());
            }
        }
        for (p, l, q, w) in self.edges() {
            if let (Some(np), Some(nq)) = (map[p], map[q]) {
                out.add_transition(np, l.clone(), nq, w.clone());
            }
        }
        out
    }

    /// Whether the automaton accepts nothing (after trimming).
    pub fn is_empty_language(&self) -> bool {
        let reach = self.reachable();
        !self.finals.keys().any(|&q| reach[q])
    }

    /// Index of each declared variable in sorted order.
    pub(crate) fn var_index(&self) -> BTreeMap<Var, usize> {
        self.vars.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect()
    }
}

/// Per-variable progress through its open/close lifecycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum VarPhase {
    Unopened,
    Open,
    Closed,
}

pub(crate) type StatusVec = Vec<VarPhase>;

impl VsetAutomaton {
    /// Computes the unique variable status of every trimmed state.
    ///
    /// Returns `None` if some state is reachable with two different statuses,
    /// some path performs an invalid operation, or some accepting state does
    /// not have every variable closed — exactly the situations in which the
    /// automaton is not functional. Expects a trimmed, epsilon-free input.
    pub(crate) fn var_statuses(&self) -> Option<Vec<StatusVec>> {
        debug_assert!(!self.has_epsilon());
        let index = self.var_index();
        let nv = index.len();
        let mut status: Vec<Option<StatusVec>> = vec![None; self.num_states];
        let mut queue: VecDeque<StateId> = VecDeque::new();
        for &q in self.initial.keys() {
            let fresh = vec![VarPhase::Unopened; nv];
            match &status[q] {
                None => {
                    status[q] = Some(fresh);
                    queue.push_back(q);
                }
                Some(s) if *s == fresh => {}
                Some(_) => return None,
            }
        }
        while let Some(p) = queue.pop_front() {
            let base = status[p].clone().expect("queued state has a status");
            for (l, q, _) in self.out_edges(p) {
                let mut next = base.clone();
                match l {
                    Label::Eps => unreachable!("epsilon-free input"),
                    Label::Sym(_) => {}
                    Label::Open(v) => {
                        let i = index[v];
                        if next[i] != VarPhase::Unopened {
                            return None;
                        }
                        next[i] = VarPhase::Open;
                    }
                    Label::Close(v) => {
                        let i = index[v];
                        if next[i] != VarPhase::Open {
                            return None;
                        }
                        next[i] = VarPhase::Closed;
                    }
                }
                match &status[q] {
                    None => {
                        status[q] = Some(next);
                        queue.push_back(q);
                    }
                    Some(s) if *s == next => {}
                    Some(_) => return None,
                }
            }
        }
        for &q in self.finals.keys() {
            match &status[q] {
                Some(s) if s.iter().all(|p| *p == VarPhase::Closed) => {}
                Some(_) => return None,
                // Unreached accepting states only occur in untrimmed input.
                None => {}
            }
        }
        // Trimmed input: every state has been visited.
        status.into_iter().collect()
    }

    /// Whether every accepted ref-word is valid and uses exactly the declared
    /// variable set. Expects an epsilon-free input.
    pub fn is_functional(&self) -> bool {
        let trimmed = self.trim();
        trimmed.var_statuses().is_some()
    }

    /// Condition C1: no two consecutive variable operations out of order.
    ///
    /// Checks, over the trimmed automaton, that for every state the variable
    /// operations on incoming edges strictly precede those on outgoing edges
    /// under the fixed order. Expects an epsilon-free input.
    pub fn check_voc(&self) -> bool {
        let trimmed = self.trim();
        let mut incoming: Vec<Vec<VarOp>> = vec![Vec::new(); trimmed.num_states];
        for (_, l, q, _) in trimmed.edges() {
            if let Some(op) = l.var_op() {
                incoming[q].push(op);
            }
        }
        for (p, ops) in incoming.iter().enumerate() {
            for op_in in ops {
                for (l, _, _) in trimmed.out_edges(p) {
                    if let Some(op_out) = l.var_op() {
                        if !(op_in < &op_out) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Condition C2: at most one run per accepted ref-word.
    ///
    /// Standard self-product pair test. Seeding the search with every pair of
    /// nonzero initial states and accepting at every pair of nonzero final
    /// states is the same as first framing the automaton with fresh unique
    /// start and end markers. Expects an epsilon-free input.
    pub fn has_unique_runs(&self) -> bool {
        let trimmed = self.trim();
        let out = trimmed.out_by_label();
        let mut seen: HashSet<(StateId, StateId)> = HashSet::new();
        let mut queue: VecDeque<(StateId, StateId)> = VecDeque::new();
        let mut pred: HashMap<(StateId, StateId), Vec<(StateId, StateId)>> = HashMap::new();
        for &p in trimmed.initial.keys() {
            for &q in trimmed.initial.keys() {
                if seen.insert((p, q)) {
                    queue.push_back((p, q));
                }
            }
        }
        while let Some((p, q)) = queue.pop_front() {
            for (label, succs_p) in &out[p] {
                if let Some(succs_q) = out[q].get(label) {
                    for (np, _) in succs_p {
                        for (nq, _) in succs_q {
                            pred.entry((*np, *nq)).or_default().push((p, q));
                            if seen.insert((*np, *nq)) {
                                queue.push_back((*np, *nq));
                            }
                        }
                    }
                }
            }
        }
        // Backward sweep: pairs that can reach a pair of accepting states.
        let mut coreach: HashSet<(StateId, StateId)> = HashSet::new();
        let mut back: VecDeque<(StateId, StateId)> = VecDeque::new();
        for &p in trimmed.finals.keys() {
            for &q in trimmed.finals.keys() {
                if seen.contains(&(p, q)) && coreach.insert((p, q)) {
                    back.push_back((p, q));
                }
            }
        }
        while let Some(pair) = back.pop_front() {
            if let Some(ps) = pred.get(&pair) {
                for &prev in ps {
                    if coreach.insert(prev) {
                        back.push_back(prev);
                    }
                }
            }
        }
        coreach.iter().all(|(p, q)| p == q)
    }

    /// Unambiguity: the variable order condition plus unique runs.
    /// Expects an epsilon-free input.
    pub fn is_unambiguous(&self) -> bool {
        self.check_voc() && self.has_unique_runs()
    }

    /// Reinterprets every nonzero weight as `1̄` of the target semiring.
    ///
    /// For Boolean automata this is the usual lifting into a weighted
    /// automaton that assigns `1̄` to every extracted tuple.
    pub fn reweight_as(&self, kind: SemiringKind) -> VsetAutomaton {
        let mut out = VsetAutomaton::new(kind, self.vars.iter().cloned());
        out.add_states(self.num_states);
        for (&q, _) in &self.initial {
            out.set_initial(q, kind.one());
        }
        for (&q, _) in &self.finals {
            out.set_final(q, kind.one());
        }
        for (p, l, q, _) in self.edges() {
            out.add_transition(p, l.clone(), q, kind.one());
        }
        out
    }

    /// Forgets weights, keeping the support as a Boolean spanner.
    pub fn support_spanner(&self) -> VsetAutomaton {
        self.reweight_as(SemiringKind::Boolean)
    }
}

/// A straight-line automaton accepting exactly one ref-word, with weight `1̄`.
pub fn refword_chain(
    r: &crate::spans::RefWord,
    kind: SemiringKind,
    vars: impl IntoIterator<Item = Var>,
) -> VsetAutomaton {
    let mut a = VsetAutomaton::new(kind, vars);
    let n = r.len();
    let states = a.add_states(n + 1);
    let first = states.start;
    a.set_initial(first, kind.one());
    a.set_final(first + n, kind.one());
    for (i, sym) in r.symbols().iter().enumerate() {
        let label = match sym {
            crate::spans::RefSym::Sym(c) => Label::Sym(*c),
            crate::spans::RefSym::Op(op) => match op.kind {
                VarOpKind::Open => Label::Open(op.var.clone()),
                VarOpKind::Close => Label::Close(op.var.clone()),
            },
        };
        a.add_transition(first + i, label, first + i + 1, kind.one());
    }
    a
}

/// The straight-line automaton of a document: no variables, weight `1̄`.
pub fn doc_chain(doc: &crate::spans::Document, kind: SemiringKind) -> VsetAutomaton {
    let mut a = VsetAutomaton::new(kind, []);
    let n = doc.len();
    let states = a.add_states(n + 1);
    let first = states.start;
    a.set_initial(first, kind.one());
    a.set_final(first + n, kind.one());
    for (i, c) in doc.symbols().iter().enumerate() {
        a.add_transition(first + i, Label::Sym(*c), first + i + 1, kind.one());
    }
    a
}

#[cfg(test)]
mod tests;
