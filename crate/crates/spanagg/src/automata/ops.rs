//! Operations on weighted vset-automata: epsilon removal, variable-order
//! normalization, the union/projection/join algebra, evaluation on a single
//! tuple, and materialization of the full extracted relation.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::semiring::{sr_add, sr_mul, SemiringKind, SemiringValue};
use crate::spans::{canonical_refword, Document, RefSym, Span, SpanTuple, Var, VarOp, VarOpKind};

use super::{Label, StateId, VarPhase, VsetAutomaton};

/// The materialized result of applying an automaton to a document: a map
/// from tuples to nonzero weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedSpanRelation {
    pub semiring: SemiringKind,
    pub vars: std::collections::BTreeSet<Var>,
    pub rows: BTreeMap<SpanTuple, SemiringValue>,
}

impl WeightedSpanRelation {
    pub fn support_size(&self) -> usize {
        self.rows.len()
    }

    pub fn weight(&self, t: &SpanTuple) -> SemiringValue {
        self.rows.get(t).cloned().unwrap_or_else(|| self.semiring.zero())
    }
}

/// Removes all epsilon transitions, preserving the represented annotator.
///
/// Epsilon paths are folded forward into the following non-epsilon transition
/// (and into the final weights). Fails with a structure error if the automaton
/// has an epsilon-cycle.
pub fn remove_epsilon(a: &VsetAutomaton) -> Result<VsetAutomaton> {
    if !a.has_epsilon() {
        return Ok(a.trim());
    }
    let kind = a.semiring();
    // Epsilon-only adjacency, cycle check via iterative DFS coloring.
    let mut eps_out: Vec<Vec<(StateId, SemiringValue)>> = vec![Vec::new(); a.num_states()];
    for (p, l, q, w) in a.edges() {
        if matches!(l, Label::Eps) {
            eps_out[p].push((q, w.clone()));
        }
    }
    let mut has_cycle = false;
    let mut color = vec![0u8; a.num_states()]; // 0 white, 1 gray, 2 black
    'outer: for start in 0..a.num_states() {
        if color[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        color[start] = 1;
        while let Some(&mut (p, ref mut i)) = stack.last_mut() {
            if *i < eps_out[p].len() {
                let (q, _) = eps_out[p][*i];
                *i += 1;
                match color[q] {
                    0 => {
                        color[q] = 1;
                        stack.push((q, 0));
                    }
                    1 => {
                        has_cycle = true;
                        break 'outer;
                    }
                    _ => {}
                }
            } else {
                color[p] = 2;
                stack.pop();
            }
        }
    }
    if has_cycle && kind != SemiringKind::Boolean {
        // Weighted run sums are undefined under epsilon-cycles.
        return Err(Error::Structure("epsilon-cycle with nonzero weight".to_string()));
    }
    if has_cycle {
        // Over the Boolean semiring addition is idempotent, so the closure is
        // plain reachability and cycles are harmless.
        return Ok(remove_epsilon_boolean(a));
    }
    // closure[p]: total weight of epsilon paths p -> r (including the empty
    // path p -> p with weight 1̄), computed by memoized DFS on the acyclic
    // epsilon graph.
    let mut closure: Vec<Option<BTreeMap<StateId, SemiringValue>>> = vec![None; a.num_states()];
    fn closure_of(
        p: StateId,
        kind: SemiringKind,
        eps_out: &[Vec<(StateId, SemiringValue)>],
        closure: &mut Vec<Option<BTreeMap<StateId, SemiringValue>>>,
    ) -> BTreeMap<StateId, SemiringValue> {
        if let Some(c) = &closure[p] {
            return c.clone();
        }
        let mut acc: BTreeMap<StateId, SemiringValue> = BTreeMap::new();
        acc.insert(p, kind.one());
        for (q, w) in eps_out[p].clone() {
            for (r, wr) in closure_of(q, kind, eps_out, closure) {
                let contrib = sr_mul(kind, &w, &wr).expect("same semiring");
                let entry = acc.entry(r).or_insert_with(|| kind.zero());
                *entry = sr_add(kind, entry, &contrib).expect("same semiring");
            }
        }
        acc.retain(|_, w| !w.is_zero());
        closure[p] = Some(acc.clone());
        acc
    }

    let mut out = VsetAutomaton::new(kind, a.vars().iter().cloned());
    out.add_states(a.num_states());
    for (q, w) in a.initial_weights() {
        out.set_initial(q, w.clone());
    }
    for p in 0..a.num_states() {
        let cl = closure_of(p, kind, &eps_out, &mut closure);
        let mut fin = kind.zero();
        for (r, wr) in &cl {
            if let Some(fw) = a.final_weight(*r) {
                fin = sr_add(kind, &fin, &sr_mul(kind, wr, fw)?)?;
            }
            for (l, q, w) in a.out_edges(*r) {
                if matches!(l, Label::Eps) {
                    continue;
                }
                out.add_transition(p, l.clone(), q, sr_mul(kind, wr, w)?);
            }
        }
        out.set_final(p, fin);
    }
    Ok(out.trim())
}

/// Epsilon removal specialized to reachability, valid for Boolean automata
/// even in the presence of epsilon-cycles.
fn remove_epsilon_boolean(a: &VsetAutomaton) -> VsetAutomaton {
    let kind = SemiringKind::Boolean;
    let mut eps_out: Vec<Vec<StateId>> = vec![Vec::new(); a.num_states()];
    for (p, l, q, _) in a.edges() {
        if matches!(l, Label::Eps) {
            eps_out[p].push(q);
        }
    }
    let mut out = VsetAutomaton::new(kind, a.vars().iter().cloned());
    out.add_states(a.num_states());
    for (q, w) in a.initial_weights() {
        out.set_initial(q, w.clone());
    }
    for p in 0..a.num_states() {
        // forward epsilon reachability from p
        let mut seen = vec![false; a.num_states()];
        let mut stack = vec![p];
        seen[p] = true;
        while let Some(r) = stack.pop() {
            for &q in &eps_out[r] {
                if !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        let mut is_final = false;
        for (r, reached) in seen.iter().enumerate() {
            if !reached {
                continue;
            }
            if a.final_weight(r).is_some() {
                is_final = true;
            }
            for (l, q, w) in a.out_edges(r) {
                if !matches!(l, Label::Eps) {
                    out.add_transition(p, l.clone(), q, w.clone());
                }
            }
        }
        if is_final {
            out.set_final(p, kind.one());
        }
    }
    out.trim()
}

/// Rewrites the automaton so that adjacent variable operations always appear
/// in the fixed total order, without changing the represented annotator.
///
/// Between two document symbols a run performs a block of variable
/// operations. For a trimmed functional automaton the set of operations
/// performed between two states is determined by their variable statuses, so
/// each maximal block from `p` to `r` can be re-emitted in sorted order; the
/// weights of all operation paths from `p` to `r` are combined by `⊕` into
/// the rewritten block. Input must be epsilon-free and functional.
pub fn normalize_var_order(a: &VsetAutomaton) -> Result<VsetAutomaton> {
    let trimmed = a.trim();
    if trimmed.check_voc() {
        return Ok(trimmed);
    }
    let kind = trimmed.semiring();
    let statuses = trimmed
        .var_statuses()
        .ok_or_else(|| Error::Functionality("variable-order normalization".to_string()))?;
    let vars_sorted: Vec<Var> = trimmed.vars().iter().cloned().collect();

    // omega[p]: for every r reachable from p through one or more variable
    // operations, the ⊕-total weight over all such operation paths.
    let mut op_out: Vec<Vec<(StateId, SemiringValue)>> = vec![Vec::new(); trimmed.num_states()];
    for (p, l, q, w) in trimmed.edges() {
        if l.is_var_op() {
            op_out[p].push((q, w.clone()));
        }
    }
    let mut omega: Vec<Option<BTreeMap<StateId, SemiringValue>>> =
        vec![None; trimmed.num_states()];
    fn omega_of(
        p: StateId,
        kind: SemiringKind,
        op_out: &[Vec<(StateId, SemiringValue)>],
        omega: &mut Vec<Option<BTreeMap<StateId, SemiringValue>>>,
    ) -> BTreeMap<StateId, SemiringValue> {
        if let Some(m) = &omega[p] {
            return m.clone();
        }
        let mut acc: BTreeMap<StateId, SemiringValue> = BTreeMap::new();
        for (q, w) in op_out[p].clone() {
            let entry = acc.entry(q).or_insert_with(|| kind.zero());
            *entry = sr_add(kind, entry, &w).expect("same semiring");
            for (r, wr) in omega_of(q, kind, op_out, omega) {
                let contrib = sr_mul(kind, &w, &wr).expect("same semiring");
                let entry = acc.entry(r).or_insert_with(|| kind.zero());
                *entry = sr_add(kind, entry, &contrib).expect("same semiring");
            }
        }
        acc.retain(|_, w| !w.is_zero());
        omega[p] = Some(acc.clone());
        acc
    }

    // The sorted operation sequence implied by a status change.
    let block_ops = |from: &[VarPhase], to: &[VarPhase]| -> Result<Vec<VarOp>> {
        let mut ops = Vec::new();
        for (i, v) in vars_sorted.iter().enumerate() {
            match (from[i], to[i]) {
                (a, b) if a == b => {}
                (VarPhase::Unopened, VarPhase::Open) => ops.push(VarOp::open(v.clone())),
                (VarPhase::Open, VarPhase::Closed) => ops.push(VarOp::close(v.clone())),
                (VarPhase::Unopened, VarPhase::Closed) => {
                    ops.push(VarOp::open(v.clone()));
                    ops.push(VarOp::close(v.clone()));
                }
                _ => {
                    return Err(Error::Functionality(
                        "variable status regressed along a block".to_string(),
                    ))
                }
            }
        }
        ops.sort();
        Ok(ops)
    };

    // New automaton: entry copies keep the original ids, "block done" copies
    // are offset by the original state count, gadget chain states follow.
    let n = trimmed.num_states();
    let mut out = VsetAutomaton::new(kind, trimmed.vars().iter().cloned());
    out.add_states(2 * n);
    let entry = |q: StateId| q;
    let done = |q: StateId| n + q;
    for (q, w) in trimmed.initial_weights() {
        out.set_initial(entry(q), w.clone());
    }
    for (q, w) in trimmed.final_weights() {
        out.set_final(entry(q), w.clone());
        out.set_final(done(q), w.clone());
    }
    for (p, l, q, w) in trimmed.edges() {
        if let Label::Sym(c) = l {
            out.add_transition(entry(p), Label::Sym(*c), entry(q), w.clone());
            out.add_transition(done(p), Label::Sym(*c), entry(q), w.clone());
        }
    }
    for p in 0..n {
        for (r, total) in omega_of(p, kind, &op_out, &mut omega) {
            let ops = block_ops(&statuses[p], &statuses[r])?;
            debug_assert!(!ops.is_empty());
            let mut cur = entry(p);
            for (i, op) in ops.iter().enumerate() {
                let next = if i + 1 == ops.len() { done(r) } else { out.add_state() };
                let label = match op.kind {
                    VarOpKind::Open => Label::Open(op.var.clone()),
                    VarOpKind::Close => Label::Close(op.var.clone()),
                };
                let w = if i == 0 { total.clone() } else { kind.one() };
                out.add_transition(cur, label, next, w);
                cur = next;
            }
        }
    }
    Ok(out.trim())
}

/// Union of two annotators over the same variable set: pointwise `⊕`.
pub fn union_(a1: &VsetAutomaton, a2: &VsetAutomaton) -> Result<VsetAutomaton> {
    if a1.semiring() != a2.semiring() {
        return Err(Error::Type("union of automata over different semirings".to_string()));
    }
    if a1.vars() != a2.vars() {
        return Err(Error::Type(
            "union requires both automata to use the same variable set".to_string(),
        ));
    }
    let mut out = VsetAutomaton::new(a1.semiring(), a1.vars().iter().cloned());
    out.add_states(a1.num_states() + a2.num_states());
    let off = a1.num_states();
    for (q, w) in a1.initial_weights() {
        out.set_initial(q, w.clone());
    }
    for (q, w) in a1.final_weights() {
        out.set_final(q, w.clone());
    }
    for (p, l, q, w) in a1.edges() {
        out.add_transition(p, l.clone(), q, w.clone());
    }
    for (q, w) in a2.initial_weights() {
        out.set_initial(off + q, w.clone());
    }
    for (q, w) in a2.final_weights() {
        out.set_final(off + q, w.clone());
    }
    for (p, l, q, w) in a2.edges() {
        out.add_transition(off + p, l.clone(), off + q, w.clone());
    }
    Ok(out)
}

/// Projection onto `X ⊆ Vars(A)`: operations of dropped variables become
/// epsilon transitions, which are then removed. Weights of tuples that agree
/// on `X` are combined by `⊕` at evaluation time.
pub fn project(a: &VsetAutomaton, x: &std::collections::BTreeSet<Var>) -> Result<VsetAutomaton> {
    if !x.is_subset(a.vars()) {
        return Err(Error::Type(
            "projection variables must be a subset of the automaton's variables".to_string(),
        ));
    }
    let mut mid = VsetAutomaton::new(a.semiring(), x.iter().cloned());
    mid.add_states(a.num_states());
    for (q, w) in a.initial_weights() {
        mid.set_initial(q, w.clone());
    }
    for (q, w) in a.final_weights() {
        mid.set_final(q, w.clone());
    }
    for (p, l, q, w) in a.edges() {
        let label = match l {
            Label::Open(v) | Label::Close(v) if !x.contains(v) => Label::Eps,
            other => other.clone(),
        };
        mid.add_transition(p, label, q, w.clone());
    }
    remove_epsilon(&mid)
}

/// Natural join: `⟦A₁ ⋈ A₂⟧(d)(t) = ⟦A₁⟧(d)(π_{V₁}t) ⊗ ⟦A₂⟧(d)(π_{V₂}t)`.
///
/// Both inputs are first normalized to satisfy the variable order condition;
/// the product then emits the variable operations of each position block as
/// the sorted merge of the two sides, synchronizing on shared variables.
/// Every pair of runs (one per side, on the same document, agreeing on the
/// shared spans) yields exactly one run of the result, so the construction
/// preserves weights over any commutative semiring and preserves unambiguity
/// of both inputs.
pub fn join(a1: &VsetAutomaton, a2: &VsetAutomaton) -> Result<VsetAutomaton> {
    if a1.semiring() != a2.semiring() {
        return Err(Error::Type("join of automata over different semirings".to_string()));
    }
    let kind = a1.semiring();
    let n1 = normalize_var_order(a1)?;
    let n2 = normalize_var_order(a2)?;
    let shared: std::collections::BTreeSet<Var> =
        n1.vars().intersection(n2.vars()).cloned().collect();
    let all_vars: std::collections::BTreeSet<Var> =
        n1.vars().union(n2.vars()).cloned().collect();
    let out1 = n1.out_by_label();
    let out2 = n2.out_by_label();

    type PairKey = (StateId, StateId, Option<VarOp>);
    struct Builder {
        out: VsetAutomaton,
        index: HashMap<PairKey, StateId>,
        queue: VecDeque<PairKey>,
    }
    impl Builder {
        fn intern(&mut self, key: PairKey) -> StateId {
            if let Some(&id) = self.index.get(&key) {
                return id;
            }
            let id = self.out.add_state();
            self.index.insert(key.clone(), id);
            self.queue.push_back(key);
            id
        }

        /// Adds the op-labeled transitions for one block step, respecting the
        /// strictly increasing order of operations within a block.
        fn emit(
            &mut self,
            from: StateId,
            last: &Option<VarOp>,
            op: VarOp,
            steps: Vec<(StateId, StateId, SemiringValue)>,
        ) {
            if let Some(prev) = last {
                if !(prev < &op) {
                    return;
                }
            }
            let label = match op.kind {
                VarOpKind::Open => Label::Open(op.var.clone()),
                VarOpKind::Close => Label::Close(op.var.clone()),
            };
            for (p1, p2, w) in steps {
                let nid = self.intern((p1, p2, Some(op.clone())));
                self.out.add_transition(from, label.clone(), nid, w);
            }
        }
    }

    let mut b = Builder {
        out: VsetAutomaton::new(kind, all_vars),
        index: HashMap::new(),
        queue: VecDeque::new(),
    };
    for (q1, w1) in n1.initial_weights() {
        for (q2, w2) in n2.initial_weights() {
            let id = b.intern((q1, q2, None));
            b.out.set_initial(id, sr_mul(kind, w1, w2)?);
        }
    }
    while let Some(key) = b.queue.pop_front() {
        let (q1, q2, last) = key.clone();
        let id = b.index[&key];
        if let (Some(f1), Some(f2)) = (n1.final_weight(q1), n2.final_weight(q2)) {
            let w = sr_mul(kind, f1, f2)?;
            b.out.set_final(id, w);
        }
        // Document symbols: synchronized, block resets.
        for (l1, succ1) in &out1[q1] {
            if let Label::Sym(c) = l1 {
                if let Some(succ2) = out2[q2].get(&Label::Sym(*c)) {
                    for (p1, w1) in succ1 {
                        for (p2, w2) in succ2 {
                            let nid = b.intern((*p1, *p2, None));
                            let w = sr_mul(kind, w1, w2)?;
                            b.out.add_transition(id, Label::Sym(*c), nid, w);
                        }
                    }
                }
            }
        }
        // Variable operations: shared variables advance both sides at once,
        // private ones advance their own side.
        for (l1, succ1) in &out1[q1] {
            if let Some(op) = l1.var_op() {
                if shared.contains(&op.var) {
                    if let Some(succ2) = out2[q2].get(l1) {
                        let mut steps = Vec::new();
                        for (p1, w1) in succ1 {
                            for (p2, w2) in succ2 {
                                steps.push((*p1, *p2, sr_mul(kind, w1, w2)?));
                            }
                        }
                        b.emit(id, &last, op, steps);
                    }
                } else {
                    let steps =
                        succ1.iter().map(|(p1, w1)| (*p1, q2, w1.clone())).collect::<Vec<_>>();
                    b.emit(id, &last, op, steps);
                }
            }
        }
        for (l2, succ2) in &out2[q2] {
            if let Some(op) = l2.var_op() {
                if !shared.contains(&op.var) {
                    let steps =
                        succ2.iter().map(|(p2, w2)| (q1, *p2, w2.clone())).collect::<Vec<_>>();
                    b.emit(id, &last, op, steps);
                }
            }
        }
    }
    Ok(b.out.trim())
}

/// The weight `⟦A⟧(d)(t)`: the `⊕`-sum over all valid nonzero runs encoding
/// the tuple.
///
/// After variable-order normalization every run for `t` lies on the unique
/// order-respecting ref-word of `(d, t)`, so the value is a single forward
/// pass over that ref-word. Input must be functional and epsilon-free.
pub fn accepts(a: &VsetAutomaton, doc: &Document, t: &SpanTuple) -> Result<SemiringValue> {
    if &t.var_set() != a.vars() {
        return Err(Error::Type(format!(
            "tuple over {:?} applied to an automaton over {:?}",
            t.var_set(),
            a.vars()
        )));
    }
    let kind = a.semiring();
    if !t.is_valid_for(doc) {
        return Ok(kind.zero());
    }
    let norm = normalize_var_order(a)?;
    let refword = canonical_refword(doc, t)?;
    let out = norm.out_by_label();
    let mut cur: BTreeMap<StateId, SemiringValue> =
        norm.initial_weights().map(|(q, w)| (q, w.clone())).collect();
    for sym in refword.symbols() {
        let label = match sym {
            RefSym::Sym(c) => Label::Sym(*c),
            RefSym::Op(op) => match op.kind {
                VarOpKind::Open => Label::Open(op.var.clone()),
                VarOpKind::Close => Label::Close(op.var.clone()),
            },
        };
        let mut next: BTreeMap<StateId, SemiringValue> = BTreeMap::new();
        for (q, w) in &cur {
            if let Some(succ) = out[*q].get(&label) {
                for (p, ew) in succ {
                    let contrib = sr_mul(kind, w, ew)?;
                    let entry = next.entry(*p).or_insert_with(|| kind.zero());
                    *entry = sr_add(kind, entry, &contrib)?;
                }
            }
        }
        next.retain(|_, w| !w.is_zero());
        if next.is_empty() {
            return Ok(kind.zero());
        }
        cur = next;
    }
    let mut total = kind.zero();
    for (q, w) in &cur {
        if let Some(f) = norm.final_weight(*q) {
            total = sr_add(kind, &total, &sr_mul(kind, w, f)?)?;
        }
    }
    Ok(total)
}

/// Per-variable capture progress with recorded positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Capture {
    Unopened,
    Open(u32),
    Closed(u32, u32),
}

/// Materializes the full relation `⟦A⟧(d)` as a map from tuples to nonzero
/// weights.
///
/// Runs a forward pass over the product of the automaton with the document,
/// tracking per-variable capture positions; runs reaching acceptance with the
/// same captures have their weights combined by `⊕`. Aborts with a capacity
/// error if the support would exceed `guard` tuples (or if the intermediate
/// state space grows past a proportional budget). Input must be functional
/// and epsilon-free.
pub fn materialize(
    a: &VsetAutomaton,
    doc: &Document,
    guard: u64,
) -> Result<WeightedSpanRelation> {
    if guard == 0 {
        return Err(Error::Capacity("materialization guard must be at least 1".to_string()));
    }
    let kind = a.semiring();
    let trimmed = a.trim();
    let var_index = trimmed.var_index();
    let vars_sorted: Vec<Var> = trimmed.vars().iter().cloned().collect();
    let nv = vars_sorted.len();
    let out = trimmed.out_by_label();
    let n = doc.len() as u32;
    let node_budget: u64 = guard.saturating_mul(64).max(1 << 20);

    type Key = (StateId, u32, Vec<Capture>);
    // Layered forward pass. Each edge strictly increases (position, number of
    // performed variable operations), and both components are functions of
    // the node key, so finishing layers in that order is a topological
    // traversal that visits every node exactly once.
    fn op_progress(caps: &[Capture]) -> u32 {
        caps.iter()
            .map(|c| match c {
                Capture::Unopened => 0u32,
                Capture::Open(_) => 1,
                Capture::Closed(_, _) => 2,
            })
            .sum()
    }
    let mut layers: BTreeMap<(u32, u32), HashMap<Key, SemiringValue>> = BTreeMap::new();
    let add = |layers: &mut BTreeMap<(u32, u32), HashMap<Key, SemiringValue>>,
                   key: Key,
                   w: SemiringValue|
     -> Result<()> {
        let layer = (key.1, op_progress(&key.2));
        let slot = layers.entry(layer).or_default().entry(key).or_insert_with(|| kind.zero());
        *slot = sr_add(kind, slot, &w)?;
        Ok(())
    };

    let start_caps = vec![Capture::Unopened; nv];
    for (q, w) in trimmed.initial_weights() {
        add(&mut layers, (q, 0, start_caps.clone()), w.clone())?;
    }

    let mut rows: BTreeMap<SpanTuple, SemiringValue> = BTreeMap::new();
    let mut processed: u64 = 0;
    while let Some((&layer, _)) = layers.iter().next() {
        let nodes = layers.remove(&layer).expect("layer exists");
        for ((q, pos, caps), w) in nodes {
            if w.is_zero() {
                continue;
            }
            processed += 1;
            if processed > node_budget {
                return Err(Error::Capacity(format!(
                    "materialization state space exceeded {node_budget} nodes"
                )));
            }
            if pos == n && caps.iter().all(|c| matches!(c, Capture::Closed(_, _))) {
                if let Some(f) = trimmed.final_weight(q) {
                    let mut tuple = SpanTuple::empty();
                    for (i, v) in vars_sorted.iter().enumerate() {
                        if let Capture::Closed(s, e) = caps[i] {
                            tuple.insert(v.clone(), Span { start: s as usize, end: e as usize });
                        }
                    }
                    let entry = rows.entry(tuple).or_insert_with(|| kind.zero());
                    *entry = sr_add(kind, entry, &sr_mul(kind, &w, f)?)?;
                    if rows.len() as u64 > guard {
                        return Err(Error::Capacity(format!(
                            "relation support exceeds the guard of {guard} tuples"
                        )));
                    }
                }
            }
            for (label, succ) in &out[q] {
                match label {
                    Label::Eps => {
                        return Err(Error::Structure(
                            "materialize requires an epsilon-free automaton".to_string(),
                        ))
                    }
                    Label::Sym(c) => {
                        if pos < n && doc.symbols()[pos as usize] == *c {
                            for (p, ew) in succ {
                                add(
                                    &mut layers,
                                    (*p, pos + 1, caps.clone()),
                                    sr_mul(kind, &w, ew)?,
                                )?;
                            }
                        }
                    }
                    Label::Open(v) => {
                        let i = var_index[v];
                        if caps[i] == Capture::Unopened {
                            let mut next = caps.clone();
                            next[i] = Capture::Open(pos + 1);
                            for (p, ew) in succ {
                                add(
                                    &mut layers,
                                    (*p, pos, next.clone()),
                                    sr_mul(kind, &w, ew)?,
                                )?;
                            }
                        }
                    }
                    Label::Close(v) => {
                        let i = var_index[v];
                        if let Capture::Open(s) = caps[i] {
                            let mut next = caps.clone();
                            next[i] = Capture::Closed(s, pos + 1);
                            for (p, ew) in succ {
                                add(
                                    &mut layers,
                                    (*p, pos, next.clone()),
                                    sr_mul(kind, &w, ew)?,
                                )?;
                            }
                        }
                    }
                }
            }
        }
    }
    rows.retain(|_, w| !w.is_zero());
    Ok(WeightedSpanRelation { semiring: kind, vars: trimmed.vars().clone(), rows })
}
