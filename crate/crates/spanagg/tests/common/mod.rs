//! Shared helpers for the integration suites: deterministic random
//! instances over a two-symbol alphabet.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use spanagg::automata::{compile_regex, union_, RegexAst, VsetAutomaton};
use spanagg::semiring::SemiringKind;
use spanagg::spans::{Alphabet, Document, Var};
use spanagg::weights::{cwidth_to_ureg, CWidthRelation, RegWeight, WeightFunction, WeightLimits};

pub fn ab() -> Alphabet {
    Alphabet::new(['a', 'b'])
}

pub fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn rational(rng: &mut ChaCha12Rng) -> BigRational {
    let num = rng.gen_range(-6i64..=6);
    let den = rng.gen_range(1i64..=3);
    BigRational::new(num.into(), den.into())
}

fn small_expr(rng: &mut ChaCha12Rng, depth: u32) -> RegexAst {
    let choice = rng.gen_range(0..if depth == 0 { 4 } else { 7 });
    match choice {
        0 => RegexAst::Eps,
        1 => RegexAst::Sym('a'),
        2 => RegexAst::Sym('b'),
        3 => RegexAst::Any,
        4 => RegexAst::star(small_expr(rng, depth - 1)),
        5 => RegexAst::alt([small_expr(rng, depth - 1), small_expr(rng, depth - 1)]),
        _ => RegexAst::concat([small_expr(rng, depth - 1), small_expr(rng, depth - 1)]),
    }
}

/// One branch binding every variable exactly once, with random filler.
fn branch(rng: &mut ChaCha12Rng, vars: &[Var]) -> RegexAst {
    let mut order: Vec<&Var> = vars.iter().collect();
    // Fisher-Yates over the variable order
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut parts = vec![small_expr(rng, 1)];
    for v in order {
        parts.push(RegexAst::capture((*v).clone(), small_expr(rng, 1)));
        parts.push(small_expr(rng, 1));
    }
    RegexAst::Concat(parts)
}

/// A random functional spanner over up to `max_vars` variables; roughly a
/// third of the outputs are ambiguous (duplicated or overlapping branches).
pub fn random_spanner(rng: &mut ChaCha12Rng, max_vars: usize) -> VsetAutomaton {
    let nvars = rng.gen_range(0..=max_vars);
    let vars: Vec<Var> = ["x", "y", "z"][..nvars].iter().map(Var::new).collect();
    let mut branches = vec![branch(rng, &vars)];
    while rng.gen_bool(0.35) && branches.len() < 3 {
        if rng.gen_bool(0.4) {
            // exact duplicate: guaranteed ambiguity
            branches.push(branches[0].clone());
        } else {
            branches.push(branch(rng, &vars));
        }
    }
    compile_regex(&RegexAst::Alt(branches), &ab()).expect("branches bind every variable")
}

pub fn random_doc(rng: &mut ChaCha12Rng, max_len: usize) -> Document {
    let len = rng.gen_range(0..=max_len);
    let text: String =
        (0..len).map(|_| if rng.gen_bool(0.5) { 'a' } else { 'b' }).collect();
    Document::new(&text, ab()).expect("two-symbol document")
}

pub fn random_cwidth(rng: &mut ChaCha12Rng, spanner_vars: &[Var]) -> CWidthRelation {
    let arity = rng.gen_range(0..=spanner_vars.len().min(2));
    let vars: Vec<Var> = spanner_vars[..arity].to_vec();
    let nrows = rng.gen_range(0..=3);
    let mut rows: BTreeMap<Vec<String>, BigRational> = BTreeMap::new();
    for _ in 0..nrows {
        let key: Vec<String> = vars
            .iter()
            .map(|_| {
                let len = rng.gen_range(0..=2);
                (0..len).map(|_| if rng.gen_bool(0.5) { 'a' } else { 'b' }).collect()
            })
            .collect();
        rows.insert(key, rational(rng));
    }
    CWidthRelation::new(
        vars.iter().cloned(),
        rows.into_iter().map(|(key, w)| {
            (vars.iter().cloned().zip(key).collect::<BTreeMap<Var, String>>(), w)
        }),
        &WeightLimits::default(),
    )
    .expect("arity within limits")
}

/// A weighted automaton from a random formula, with random edge weights:
/// functional, possibly ambiguous, not necessarily total over the tropical
/// semiring.
pub fn random_reg_from_regex(
    rng: &mut ChaCha12Rng,
    spanner_vars: &[Var],
    kind: SemiringKind,
) -> RegWeight {
    let nvars = rng.gen_range(0..=spanner_vars.len().min(2));
    let vars: Vec<Var> = spanner_vars[..nvars].to_vec();
    let mut branches = vec![branch(rng, &vars)];
    if rng.gen_bool(0.3) {
        branches.push(branches[0].clone());
    }
    let boolean = compile_regex(&RegexAst::Alt(branches), &ab()).expect("functional formula");
    let auto = boolean.reweight_as(kind);
    // copy the shape, drawing a fresh random weight for every entry
    let mut fresh = VsetAutomaton::new(kind, auto.vars().iter().cloned());
    fresh.add_states(auto.num_states());
    for (q, _) in auto.initial_weights() {
        fresh.set_initial(
            q,
            match kind {
                SemiringKind::Tropical => spanagg::semiring::SemiringValue::Trop(rational(rng)),
                _ => spanagg::semiring::SemiringValue::Num(nonzero_rational(rng)),
            },
        );
    }
    for (q, _) in auto.final_weights() {
        fresh.set_final(
            q,
            match kind {
                SemiringKind::Tropical => spanagg::semiring::SemiringValue::Trop(rational(rng)),
                _ => spanagg::semiring::SemiringValue::Num(nonzero_rational(rng)),
            },
        );
    }
    for (p, l, q, _) in auto.edges() {
        fresh.add_transition(
            p,
            l.clone(),
            q,
            match kind {
                SemiringKind::Tropical => spanagg::semiring::SemiringValue::Trop(rational(rng)),
                _ => spanagg::semiring::SemiringValue::Num(nonzero_rational(rng)),
            },
        );
    }
    RegWeight::new(fresh).expect("functional weight automaton")
}

pub fn nonzero_rational(rng: &mut ChaCha12Rng) -> BigRational {
    loop {
        let v = rational(rng);
        if v != BigRational::from_integer(0.into()) {
            return v;
        }
    }
}

/// A total tropical weight function, possibly ambiguous: the union of one or
/// two constant-width conversions (each covers every tuple).
pub fn random_total_tropical(
    rng: &mut ChaCha12Rng,
    spanner_vars: &[Var],
    force_ambiguous: bool,
) -> RegWeight {
    let first = cwidth_to_ureg(&random_cwidth(rng, spanner_vars), SemiringKind::Tropical, &ab())
        .expect("conversion");
    if !force_ambiguous {
        return first;
    }
    let second = cwidth_to_ureg(
        &random_cwidth_over(rng, first.vars().iter().cloned().collect::<Vec<_>>()),
        SemiringKind::Tropical,
        &ab(),
    )
    .expect("conversion");
    let union = union_(first.automaton(), second.automaton()).expect("same variables");
    RegWeight::new(union).expect("functional union")
}

fn random_cwidth_over(rng: &mut ChaCha12Rng, vars: Vec<Var>) -> CWidthRelation {
    let nrows = rng.gen_range(0..=2);
    let mut rows: BTreeMap<Vec<String>, BigRational> = BTreeMap::new();
    for _ in 0..nrows {
        let key: Vec<String> = vars
            .iter()
            .map(|_| {
                let len = rng.gen_range(0..=2);
                (0..len).map(|_| if rng.gen_bool(0.5) { 'a' } else { 'b' }).collect()
            })
            .collect();
        rows.insert(key, rational(rng));
    }
    CWidthRelation::new(
        vars.iter().cloned(),
        rows.into_iter().map(|(key, w)| {
            (vars.iter().cloned().zip(key).collect::<BTreeMap<Var, String>>(), w)
        }),
        &WeightLimits::default(),
    )
    .expect("arity within limits")
}

/// A random weight function compatible with the spanner; tropical weight
/// automata that may be partial are only produced when their coverage gaps
/// are detectable (the automaton is unambiguous).
pub fn random_weight(rng: &mut ChaCha12Rng, spanner: &VsetAutomaton) -> WeightFunction {
    let vars: Vec<Var> = spanner.vars().iter().cloned().collect();
    match rng.gen_range(0..6) {
        0 | 1 => WeightFunction::CWidth(random_cwidth(rng, &vars)),
        2 => WeightFunction::Reg(
            cwidth_to_ureg(&random_cwidth(rng, &vars), SemiringKind::Numerical, &ab())
                .expect("conversion"),
        ),
        3 => WeightFunction::Reg(random_reg_from_regex(rng, &vars, SemiringKind::Numerical)),
        4 => {
            let ambiguous = rng.gen_bool(0.5);
            WeightFunction::Reg(random_total_tropical(rng, &vars, ambiguous))
        }
        _ => {
            // possibly-partial tropical automaton; keep it unambiguous so
            // missing tuples are detected as domain errors on every path
            let w = random_reg_from_regex(rng, &vars, SemiringKind::Tropical);
            if w.is_unambiguous() {
                WeightFunction::Reg(w)
            } else {
                WeightFunction::Reg(random_total_tropical(rng, &vars, false))
            }
        }
    }
}
