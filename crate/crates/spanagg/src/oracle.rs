//! Brute-force reference implementation.
//!
//! Ground truth for every exact algorithm: candidate tuples are enumerated
//! over the full span cross product and filtered by automaton acceptance,
//! and the aggregate definitions are applied literally to the resulting
//! weighted tuple set. Allowed to be exponential; guarded by a budget.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

use crate::aggregates::{AggregateKind, AggregateValue};
use crate::automata::{accepts, normalize_var_order, Label, VsetAutomaton};
use crate::error::{Error, Result};
use crate::semiring::{SemiringKind, SemiringValue};
use crate::spans::{canonical_refword, spans_of, Document, RefSym, Span, SpanTuple, Var, VarOpKind};
use crate::weights::{weight_of, WeightFunction};

/// Bitset-based acceptance for Boolean spanners, fast enough to scan the
/// whole candidate space.
struct BoolMatcher {
    num_states: usize,
    initial: Vec<u64>,
    finals: Vec<u64>,
    /// successor masks per (label, state)
    masks: BTreeMap<Label, Vec<Vec<u64>>>,
}

impl BoolMatcher {
    fn new(a: &VsetAutomaton) -> Result<Self> {
        let norm = normalize_var_order(a)?;
        let n = norm.num_states();
        let words = n.div_ceil(64);
        let mut initial = vec![0u64; words];
        for (q, _) in norm.initial_weights() {
            initial[q / 64] |= 1 << (q % 64);
        }
        let mut finals = vec![0u64; words];
        for (q, _) in norm.final_weights() {
            finals[q / 64] |= 1 << (q % 64);
        }
        let mut masks: BTreeMap<Label, Vec<Vec<u64>>> = BTreeMap::new();
        for (p, l, q, _) in norm.edges() {
            let per_state = masks.entry(l.clone()).or_insert_with(|| vec![vec![0u64; words]; n]);
            per_state[p][q / 64] |= 1 << (q % 64);
        }
        Ok(BoolMatcher { num_states: n, initial, finals, masks })
    }

    fn accepts_refword(&self, symbols: &[RefSym]) -> bool {
        let mut active = self.initial.clone();
        for sym in symbols {
            let label = match sym {
                RefSym::Sym(c) => Label::Sym(*c),
                RefSym::Op(op) => match op.kind {
                    VarOpKind::Open => Label::Open(op.var.clone()),
                    VarOpKind::Close => Label::Close(op.var.clone()),
                },
            };
            let Some(per_state) = self.masks.get(&label) else { return false };
            let mut next = vec![0u64; active.len()];
            for (w, bits) in active.iter().enumerate() {
                let mut bits = *bits;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let p = w * 64 + b;
                    if p < self.num_states {
                        for (i, m) in per_state[p].iter().enumerate() {
                            next[i] |= m;
                        }
                    }
                }
            }
            if next.iter().all(|w| *w == 0) {
                return false;
            }
            active = next;
        }
        active.iter().zip(&self.finals).any(|(a, f)| a & f != 0)
    }
}

fn candidate_space(doc: &Document, num_vars: usize) -> Option<u128> {
    let spans = spans_of(doc).len() as u128;
    let mut total: u128 = 1;
    for _ in 0..num_vars {
        total = total.checked_mul(spans)?;
    }
    Some(total)
}

/// Iterates every candidate tuple (lexicographic over (variable, span)) and
/// keeps those the spanner accepts.
///
/// Guarded: the full candidate space `|Spans(d)|^|Vars(A)|` must fit within
/// the budget. The spanner must be functional and epsilon-free.
pub fn enumerate_tuples(
    spanner: &VsetAutomaton,
    doc: &Document,
    budget: u64,
) -> Result<Vec<SpanTuple>> {
    let vars: Vec<Var> = spanner.vars().iter().cloned().collect();
    let space = candidate_space(doc, vars.len())
        .ok_or_else(|| Error::Capacity("candidate space overflows".to_string()))?;
    if space > u128::from(budget) {
        return Err(Error::Capacity(format!(
            "candidate space of {space} tuples exceeds the oracle budget {budget}"
        )));
    }
    let matcher = BoolMatcher::new(spanner)?;
    let spans: Vec<Span> = spans_of(doc);
    let mut out = Vec::new();
    let mut odometer = vec![0usize; vars.len()];
    loop {
        let tuple = SpanTuple::new(
            vars.iter().cloned().zip(odometer.iter().map(|&i| spans[i])),
        );
        let refword = canonical_refword(doc, &tuple)?;
        if matcher.accepts_refword(refword.symbols()) {
            out.push(tuple);
        }
        // advance the rightmost position first: lexicographic by variable
        let mut i = vars.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            odometer[i] += 1;
            if odometer[i] < spans.len() {
                break;
            }
            odometer[i] = 0;
        }
    }
}

/// The full weighted relation by enumeration plus per-tuple evaluation.
pub fn oracle_relation(
    spanner: &VsetAutomaton,
    doc: &Document,
    budget: u64,
) -> Result<BTreeMap<SpanTuple, SemiringValue>> {
    let mut out = BTreeMap::new();
    if spanner.semiring() == SemiringKind::Boolean {
        for t in enumerate_tuples(spanner, doc, budget)? {
            out.insert(t, SemiringValue::Bool(true));
        }
        return Ok(out);
    }
    // weighted automata: evaluate every candidate exactly
    let vars: Vec<Var> = spanner.vars().iter().cloned().collect();
    let space = candidate_space(doc, vars.len())
        .ok_or_else(|| Error::Capacity("candidate space overflows".to_string()))?;
    if space > u128::from(budget) {
        return Err(Error::Capacity(format!(
            "candidate space of {space} tuples exceeds the oracle budget {budget}"
        )));
    }
    let spans: Vec<Span> = spans_of(doc);
    let mut odometer = vec![0usize; vars.len()];
    loop {
        let tuple = SpanTuple::new(
            vars.iter().cloned().zip(odometer.iter().map(|&i| spans[i])),
        );
        let w = accepts(spanner, doc, &tuple)?;
        if !w.is_zero() {
            out.insert(tuple, w);
        }
        let mut i = vars.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            odometer[i] += 1;
            if odometer[i] < spans.len() {
                break;
            }
            odometer[i] = 0;
        }
    }
}

/// Applies the aggregate definitions literally to the enumerated, weighted
/// tuple set.
pub fn oracle_aggregate(
    spanner: &VsetAutomaton,
    doc: &Document,
    weight: Option<&WeightFunction>,
    kind: &AggregateKind,
    budget: u64,
) -> Result<AggregateValue> {
    let tuples = enumerate_tuples(spanner, doc, budget)?;
    let count = tuples.len();
    if let AggregateKind::Count = kind {
        return Ok(AggregateValue::Count(BigUint::from(count)));
    }
    let weight =
        weight.ok_or_else(|| Error::Type("this aggregate needs a weight function".to_string()))?;
    let mut weights: Vec<BigRational> = Vec::with_capacity(count);
    for t in &tuples {
        weights.push(weight_of(weight, doc, t)?);
    }
    match kind {
        AggregateKind::Count => unreachable!("handled above"),
        AggregateKind::Min => {
            weights.iter().min().cloned().map(AggregateValue::Rational).ok_or(Error::EmptyRelation)
        }
        AggregateKind::Max => {
            weights.iter().max().cloned().map(AggregateValue::Rational).ok_or(Error::EmptyRelation)
        }
        AggregateKind::Sum => {
            Ok(AggregateValue::Rational(weights.iter().fold(BigRational::zero(), |a, b| a + b)))
        }
        AggregateKind::Avg => {
            if count == 0 {
                return Err(Error::EmptyRelation);
            }
            let sum = weights.iter().fold(BigRational::zero(), |a, b| a + b);
            Ok(AggregateValue::Rational(sum / BigRational::from_integer(BigInt::from(count))))
        }
        AggregateKind::Quantile(q) => {
            if count == 0 {
                return Err(Error::EmptyRelation);
            }
            // least r in the image with |{t : w(t) <= r}| / count >= q
            let mut image: Vec<&BigRational> = weights.iter().collect();
            image.sort();
            image.dedup();
            let total = BigInt::from(count);
            for r in image {
                let below = weights.iter().filter(|w| *w <= r).count();
                if BigInt::from(below) * q.denom() >= q.numer() * &total {
                    return Ok(AggregateValue::Rational(r.clone()));
                }
            }
            Ok(AggregateValue::Rational(weights.iter().max().expect("nonempty").clone()))
        }
        AggregateKind::CountBelow { threshold, strict } => {
            let n = weights
                .iter()
                .filter(|w| if *strict { *w < threshold } else { *w <= threshold })
                .count();
            Ok(AggregateValue::Count(BigUint::from(n)))
        }
    }
}

/// Whether two evaluation outcomes agree: equal values, or errors of the
/// same kind.
pub fn outcomes_agree(
    a: &Result<AggregateValue>,
    b: &Result<AggregateValue>,
) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y,
        (Err(x), Err(y)) => std::mem::discriminant(x) == std::mem::discriminant(y),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregates::AggregateKind;
    use crate::automata::{compile_regex, parse_regex};
    use crate::semiring::rational;
    use crate::spans::Alphabet;

    fn compile(src: &str) -> VsetAutomaton {
        compile_regex(&parse_regex(src).unwrap(), &Alphabet::new(['a', 'b'])).unwrap()
    }

    #[test]
    fn enumerates_simple_matches() {
        let a = compile(".*x{a}.*");
        let d = Document::from_text("aba");
        let tuples = enumerate_tuples(&a, &d, 1000).unwrap();
        assert_eq!(tuples.len(), 2);
    }

    #[test]
    fn empty_variable_set_yields_empty_tuple() {
        let a = compile("a*");
        let d = Document::from_text("aa");
        let tuples = enumerate_tuples(&a, &d, 1000).unwrap();
        assert_eq!(tuples, vec![SpanTuple::empty()]);
        let rejecting = compile("b");
        assert!(enumerate_tuples(&rejecting, &d, 1000).unwrap().is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let a = compile(".*x{a}.*y{b}.*");
        let d = Document::from_text("abab");
        // 15^2 candidates > 100
        assert!(matches!(enumerate_tuples(&a, &d, 100), Err(Error::Capacity(_))));
    }

    #[test]
    fn oracle_self_consistency() {
        let a = compile(".*x{a.*}.*");
        let d = Document::from_text("abab");
        let x = Var::new("x");
        let rel = crate::weights::CWidthRelation::new(
            [x.clone()],
            [
                (std::collections::BTreeMap::from([(x.clone(), "a".into())]), rational(2, 1)),
                (std::collections::BTreeMap::from([(x.clone(), "ab".into())]), rational(-1, 2)),
            ],
            &crate::weights::WeightLimits::default(),
        )
        .unwrap();
        let w = WeightFunction::CWidth(rel);
        let count = oracle_aggregate(&a, &d, None, &AggregateKind::Count, 10_000).unwrap();
        let tuples = enumerate_tuples(&a, &d, 10_000).unwrap();
        assert_eq!(count, AggregateValue::Count(BigUint::from(tuples.len())));

        let min = oracle_aggregate(&a, &d, Some(&w), &AggregateKind::Min, 10_000).unwrap();
        let q0 =
            oracle_aggregate(&a, &d, Some(&w), &AggregateKind::Quantile(rational(0, 1)), 10_000)
                .unwrap();
        assert_eq!(min, q0);
        let max = oracle_aggregate(&a, &d, Some(&w), &AggregateKind::Max, 10_000).unwrap();
        let q1 =
            oracle_aggregate(&a, &d, Some(&w), &AggregateKind::Quantile(rational(1, 1)), 10_000)
                .unwrap();
        assert_eq!(max, q1);
    }

    #[test]
    fn weighted_relation_by_enumeration() {
        let mut a = VsetAutomaton::new(SemiringKind::Tropical, [Var::new("x")]);
        let q: Vec<_> = a.add_states(3).collect();
        a.set_initial(q[0], crate::semiring::trop(1));
        a.set_final(q[2], crate::semiring::trop(0));
        a.add_transition(q[0], Label::Open(Var::new("x")), q[1], crate::semiring::trop(0));
        a.add_transition(q[1], Label::Sym('a'), q[1], crate::semiring::trop(2));
        a.add_transition(q[1], Label::Close(Var::new("x")), q[2], crate::semiring::trop(0));
        a.add_transition(q[2], Label::Sym('a'), q[2], crate::semiring::trop(0));
        let d = Document::from_text("aa");
        let rel = oracle_relation(&a, &d, 10_000).unwrap();
        // captures a prefix of a's starting at position 1..: spans [1,1⟩ [1,2⟩ [1,3⟩
        // weight = 1 + 2·len
        assert_eq!(rel.len(), 3);
        assert_eq!(
            rel[&SpanTuple::new([(Var::new("x"), Span::new(1, 3).unwrap())])],
            crate::semiring::trop(5)
        );
    }
}
