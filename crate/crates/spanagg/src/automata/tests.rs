use std::collections::BTreeSet;

use super::*;
use crate::error::Error;
use crate::semiring::{num, trop, SemiringKind, SemiringValue};
use crate::spans::{Alphabet, Document, Span, SpanTuple};

fn ab() -> Alphabet {
    Alphabet::new(['a', 'b'])
}

fn doc(text: &str) -> Document {
    Document::from_text(text)
}

fn tuple(bindings: &[(&str, usize, usize)]) -> SpanTuple {
    SpanTuple::new(
        bindings.iter().map(|(v, i, j)| (Var::new(v), Span::new(*i, *j).unwrap())),
    )
}

fn compile(src: &str, alphabet: &Alphabet) -> VsetAutomaton {
    compile_regex(&parse_regex(src).unwrap(), alphabet).unwrap()
}

fn support(a: &VsetAutomaton, d: &Document) -> BTreeSet<SpanTuple> {
    materialize(a, d, 1_000_000).unwrap().rows.keys().cloned().collect()
}

#[test]
fn compile_and_materialize_simple_capture() {
    let a = compile(".*x{a}.*", &ab());
    let got = support(&a, &doc("aba"));
    let want: BTreeSet<_> =
        [tuple(&[("x", 1, 2)]), tuple(&[("x", 3, 4)])].into_iter().collect();
    assert_eq!(got, want);
}

#[test]
fn empty_capture_on_empty_document() {
    let a = compile("x{()}", &ab());
    let got = support(&a, &doc(""));
    let want: BTreeSet<_> = [tuple(&[("x", 1, 1)])].into_iter().collect();
    assert_eq!(got, want);
}

#[test]
fn non_functional_formula_is_rejected() {
    let err = compile_regex(&parse_regex("x{a}|a").unwrap(), &ab()).unwrap_err();
    assert!(matches!(err, Error::Functionality(_)));
    let err = compile_regex(&parse_regex("x{x{a}}").unwrap(), &ab()).unwrap_err();
    assert!(matches!(err, Error::Functionality(_)));
}

#[test]
fn nested_star_with_nullable_inner_compiles() {
    let a = compile("(a*)*b", &ab());
    assert!(!a.has_epsilon());
    assert_eq!(accepts(&a, &doc("aab"), &SpanTuple::empty()).unwrap(), SemiringValue::Bool(true));
    assert_eq!(accepts(&a, &doc("aba"), &SpanTuple::empty()).unwrap(), SemiringValue::Bool(false));
}

#[test]
fn regex_parse_errors() {
    assert!(parse_regex("").is_err());
    assert!(parse_regex("a|").is_err());
    assert!(parse_regex("x{a").is_err());
    assert!(parse_regex("(a").is_err());
    assert!(parse_regex("a)").is_err());
    assert!(parse_regex("*a").is_err());
}

#[test]
fn escaped_metacharacters_parse_as_symbols() {
    let alphabet = Alphabet::new(['a', '*', '{']);
    let a = compile(r"a\*\{", &alphabet);
    assert_eq!(
        accepts(&a, &Document::new("a*{", alphabet.clone()).unwrap(), &SpanTuple::empty())
            .unwrap(),
        SemiringValue::Bool(true)
    );
}

#[test]
fn epsilon_removal_folds_weights_forward() {
    // one path: ⊢x · ε(2) · a(3) · ⊣x over the tropical semiring
    let mut a = VsetAutomaton::new(SemiringKind::Tropical, [Var::new("x")]);
    let q: Vec<_> = a.add_states(5).collect();
    a.set_initial(q[0], trop(0));
    a.set_final(q[4], trop(0));
    a.add_transition(q[0], Label::Open(Var::new("x")), q[1], trop(0));
    a.add_transition(q[1], Label::Eps, q[2], trop(2));
    a.add_transition(q[2], Label::Sym('a'), q[3], trop(3));
    a.add_transition(q[3], Label::Close(Var::new("x")), q[4], trop(0));
    let b = remove_epsilon(&a).unwrap();
    assert!(!b.has_epsilon());
    let d = doc("a");
    let t = tuple(&[("x", 1, 2)]);
    assert_eq!(accepts(&b, &d, &t).unwrap(), trop(5));
}

#[test]
fn epsilon_removal_is_identity_on_epsilon_free() {
    let a = compile("x{a}b", &ab());
    let b = remove_epsilon(&a).unwrap();
    let d = doc("ab");
    assert_eq!(support(&a, &d), support(&b, &d));
}

#[test]
fn epsilon_cycle_is_rejected_for_weighted_automata() {
    let mut a = VsetAutomaton::new(SemiringKind::Numerical, []);
    let q: Vec<_> = a.add_states(2).collect();
    a.set_initial(q[0], num(1));
    a.set_final(q[1], num(1));
    a.add_transition(q[0], Label::Eps, q[1], num(1));
    a.add_transition(q[1], Label::Eps, q[0], num(1));
    assert!(matches!(remove_epsilon(&a), Err(Error::Structure(_))));
}

#[test]
fn functionality_checks() {
    assert!(compile("x{a}|x{b}", &ab()).is_functional());
    // hand-built: branch that closes x without opening it
    let mut a = VsetAutomaton::new(SemiringKind::Boolean, [Var::new("x")]);
    let q: Vec<_> = a.add_states(2).collect();
    a.set_initial(q[0], SemiringValue::Bool(true));
    a.set_final(q[1], SemiringValue::Bool(true));
    a.add_transition(q[0], Label::Close(Var::new("x")), q[1], SemiringValue::Bool(true));
    assert!(!a.is_functional());
}

#[test]
fn duplicate_branch_is_functional_but_ambiguous() {
    let a = compile("x{a}|x{a}", &ab());
    assert!(a.is_functional());
    assert!(a.check_voc());
    assert!(!a.has_unique_runs());
    assert!(!a.is_unambiguous());
    // Boolean ⊕ is idempotent, so materialization still has one tuple.
    assert_eq!(support(&a, &doc("a")).len(), 1);
}

#[test]
fn voc_violation_detected() {
    // accepts ⊢y ⊢x a ⊣x ⊣y, whose first block is out of order
    let mut a = VsetAutomaton::new(SemiringKind::Boolean, [Var::new("x"), Var::new("y")]);
    let q: Vec<_> = a.add_states(6).collect();
    let t = SemiringValue::Bool(true);
    a.set_initial(q[0], t.clone());
    a.set_final(q[5], t.clone());
    a.add_transition(q[0], Label::Open(Var::new("y")), q[1], t.clone());
    a.add_transition(q[1], Label::Open(Var::new("x")), q[2], t.clone());
    a.add_transition(q[2], Label::Sym('a'), q[3], t.clone());
    a.add_transition(q[3], Label::Close(Var::new("x")), q[4], t.clone());
    a.add_transition(q[4], Label::Close(Var::new("y")), q[5], t.clone());
    assert!(a.is_functional());
    assert!(!a.check_voc());
    assert!(!a.is_unambiguous());

    // normalization rewrites it into sorted order without changing the tuple
    let n = normalize_var_order(&a).unwrap();
    assert!(n.check_voc());
    let d = doc("a");
    let want = tuple(&[("x", 1, 2), ("y", 1, 2)]);
    assert_eq!(support(&n, &d), [want.clone()].into_iter().collect());
    assert_eq!(accepts(&a, &d, &want).unwrap(), SemiringValue::Bool(true));
}

#[test]
fn union_agrees_with_set_union() {
    let a1 = compile("x{a}.*", &ab());
    let a2 = compile(".*x{b}", &ab());
    let u = union_(&a1, &a2).unwrap();
    let d = doc("ab");
    let mut want = support(&a1, &d);
    want.extend(support(&a2, &d));
    assert_eq!(support(&u, &d), want);
}

#[test]
fn union_requires_same_vars() {
    let a1 = compile("x{a}", &ab());
    let a2 = compile("y{a}", &ab());
    assert!(matches!(union_(&a1, &a2), Err(Error::Type(_))));
}

#[test]
fn join_of_two_captures() {
    let a1 = compile("x{a}.*", &ab());
    let a2 = compile(".*y{b}", &ab());
    let j = join(&a1, &a2).unwrap();
    let got = support(&j, &doc("ab"));
    let want: BTreeSet<_> = [tuple(&[("x", 1, 2), ("y", 2, 3)])].into_iter().collect();
    assert_eq!(got, want);
}

#[test]
fn join_preserves_unambiguity() {
    let a1 = compile(".*x{a}.*", &ab());
    let a2 = compile(".*y{b}.*", &ab());
    assert!(a1.is_unambiguous());
    assert!(a2.is_unambiguous());
    let j = join(&a1, &a2).unwrap();
    assert!(j.is_unambiguous());
}

#[test]
fn join_on_shared_variable_synchronizes() {
    let a1 = compile(".*x{a}.*", &ab());
    let a2 = compile(".*x{.}b.*", &ab());
    let j = join(&a1, &a2).unwrap();
    // x must capture an 'a' immediately followed by 'b'
    let got = support(&j, &doc("abab"));
    let want: BTreeSet<_> =
        [tuple(&[("x", 1, 2)]), tuple(&[("x", 3, 4)])].into_iter().collect();
    assert_eq!(got, want);
}

#[test]
fn projection_to_empty_set() {
    let a = compile("x{a}", &ab());
    let p = project(&a, &BTreeSet::new()).unwrap();
    let got = materialize(&p, &doc("a"), 10).unwrap();
    assert_eq!(got.rows.len(), 1);
    assert_eq!(got.rows[&SpanTuple::empty()], SemiringValue::Bool(true));
}

#[test]
fn projection_requires_subset() {
    let a = compile("x{a}", &ab());
    let y: BTreeSet<Var> = [Var::new("y")].into_iter().collect();
    assert!(matches!(project(&a, &y), Err(Error::Type(_))));
}

#[test]
fn accepts_basics() {
    let a = compile("x{a}", &ab());
    let d = doc("a");
    assert_eq!(accepts(&a, &d, &tuple(&[("x", 1, 2)])).unwrap(), SemiringValue::Bool(true));
    assert_eq!(accepts(&a, &d, &tuple(&[("x", 1, 1)])).unwrap(), SemiringValue::Bool(false));
    assert!(matches!(accepts(&a, &d, &tuple(&[("y", 1, 2)])), Err(Error::Type(_))));
}

#[test]
fn materialize_guard_is_enforced() {
    let a = compile(".*x{.*}.*", &ab());
    let d = doc("aaaa");
    // 15 spans on a 4-symbol document
    assert!(materialize(&a, &d, 14).is_err());
    assert_eq!(materialize(&a, &d, 15).unwrap().rows.len(), 15);
}

#[test]
fn materialize_on_rejecting_automaton_is_empty() {
    let a = compile("b", &ab());
    assert!(materialize(&a, &doc("a"), 10).unwrap().rows.is_empty());
}

#[test]
fn json_roundtrip() {
    let mut a = VsetAutomaton::new(SemiringKind::Tropical, [Var::new("x")]);
    let q: Vec<_> = a.add_states(3).collect();
    a.set_initial(q[0], trop(0));
    a.set_final(q[2], trop(7));
    a.add_transition(q[0], Label::Open(Var::new("x")), q[1], trop(0));
    a.add_transition(q[1], Label::Sym('a'), q[1], trop(2));
    a.add_transition(q[1], Label::Close(Var::new("x")), q[2], trop(0));
    let json = automaton_to_json(&a);
    let b = automaton_from_json(&json).unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_rejects_duplicates_and_unknowns() {
    let json = serde_json::json!({
        "semiring": "bool",
        "vars": [],
        "states": ["q0"],
        "initial": [{"state": "q0"}],
        "final": [{"state": "q1"}],
        "transitions": []
    });
    assert!(matches!(automaton_from_json(&json), Err(Error::Parse(_))));

    let json = serde_json::json!({
        "semiring": "bool",
        "vars": [],
        "states": ["q0"],
        "initial": [{"state": "q0"}],
        "final": [{"state": "q0"}],
        "transitions": [
            {"from": "q0", "label": {"kind": "sym", "value": "a"}, "to": "q0"},
            {"from": "q0", "label": {"kind": "sym", "value": "a"}, "to": "q0"}
        ]
    });
    assert!(matches!(automaton_from_json(&json), Err(Error::Parse(_))));
}

#[test]
fn weighted_epsilon_fold_preserves_relation() {
    // weighted case: epsilon edge of weight 2 folded into its successor
    let mut a = VsetAutomaton::new(SemiringKind::Tropical, [Var::new("x")]);
    let q: Vec<_> = a.add_states(5).collect();
    a.set_initial(q[0], trop(0));
    a.set_final(q[4], trop(0));
    a.add_transition(q[0], Label::Open(Var::new("x")), q[1], trop(1));
    a.add_transition(q[1], Label::Eps, q[2], trop(2));
    a.add_transition(q[1], Label::Sym('a'), q[3], trop(10));
    a.add_transition(q[2], Label::Sym('a'), q[3], trop(4));
    a.add_transition(q[3], Label::Close(Var::new("x")), q[4], trop(0));
    let b = remove_epsilon(&a).unwrap();
    // two routes for the same ref-word: min(1+10, 1+2+4) = 7
    let d = doc("a");
    let t = tuple(&[("x", 1, 2)]);
    assert_eq!(accepts(&b, &d, &t).unwrap(), trop(7));
}
