//! Test-instance factories with known ground truth.
//!
//! * [`spanner_with_k_tuples`]: an unambiguous spanner and document
//!   extracting exactly `k` tuples, for any `k` up to the full cross
//!   product of spans — counting it exercises the path DP far beyond what
//!   materialization could handle.
//! * [`encode_cnf_sum`]: a spanner/weight pair whose Sum equals the number
//!   of satisfying assignments of a CNF formula.
//! * [`running_example`]: the packaged events-per-location extraction demo.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::automata::{compile_regex, RegexAst, VsetAutomaton};
use crate::error::{Error, Result};
use crate::semiring::{integer, SemiringKind};
use crate::spans::{Alphabet, Document, Var};
use crate::weights::{CWidthRelation, WeightLimits};

/// Greedy decomposition of `1 ≤ k ≤ (limit·(limit+1))/2` into distinct
/// naturals `≤ limit`, largest addend first.
fn distinct_summands(mut k: u64, limit: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut cap = limit;
    while k > 0 {
        let take = k.min(cap);
        out.push(take);
        k -= take;
        cap = take - 1;
    }
    out
}

/// `Σ* · x{Σ^len} · Σ*`: all spans of one length.
///
/// The base alphabet is spelled out as explicit symbol unions rather than
/// `.` so that, in the multi-variable construction, these pieces stay inside
/// one copy of the base document and never consume the separator.
fn spans_of_length(x: &Var, len: u64, sigma: &Alphabet) -> RegexAst {
    let any_base = || RegexAst::one_of(sigma.symbols());
    let body = RegexAst::concat((0..len).map(|_| any_base()));
    RegexAst::concat([
        RegexAst::star(any_base()),
        RegexAst::capture(x.clone(), if len == 0 { RegexAst::Eps } else { body }),
        RegexAst::star(any_base()),
    ])
}

/// A formula selecting exactly `k` spans of the base document in `x`, as the
/// union of one branch per addend of a distinct-summand decomposition: the
/// branch for addend `m` selects the `m` spans of length `|d| + 1 − m`.
fn k_span_formula(x: &Var, k: u64, doc_len: u64, sigma: &Alphabet) -> RegexAst {
    let branches: Vec<RegexAst> = distinct_summands(k, doc_len + 1)
        .into_iter()
        .map(|m| spans_of_length(x, doc_len + 1 - m, sigma))
        .collect();
    RegexAst::Alt(branches)
}

/// Builds an unambiguous functional spanner `A` over the given variables and
/// a document `d'` such that `A` extracts exactly `k` tuples from `d'`.
///
/// Single variable: `d' = d` and the formula is the union of
/// all-spans-of-one-length branches. Several variables: `d'` is `|X|` copies
/// of `d` followed by a separator symbol, `k` is written in base
/// `|Spans(d)|`, and the branch for digit `i` pins the earlier variables to
/// their separators, selects `kᵢ` spans of the `i`-th copy, and leaves the
/// later variables free over their copies.
pub fn spanner_with_k_tuples(
    vars: &[Var],
    doc: &Document,
    k: &BigUint,
) -> Result<(VsetAutomaton, Document)> {
    if vars.is_empty() {
        return Err(Error::Range("at least one variable is required".to_string()));
    }
    let n = doc.len() as u64;
    let spans_per_doc = BigUint::from((n + 1) * (n + 2) / 2);
    let space = spans_per_doc.pow(vars.len() as u32);
    if k > &space {
        return Err(Error::Range(format!(
            "k = {k} exceeds the {space} candidate tuples over the document"
        )));
    }
    let sigma = doc.alphabet().clone();

    if vars.len() == 1 {
        let k64 = k.iter_u64_digits().next().unwrap_or(0);
        let ast = k_span_formula(&vars[0], k64, n, &sigma);
        let auto = if k.is_zero() {
            empty_spanner(vars)
        } else {
            compile_regex(&ast, &sigma)?
        };
        verify_generator_output(&auto)?;
        return Ok((auto, doc.clone()));
    }

    let separator = pick_separator(&sigma)?;
    let extended = {
        let mut syms: Vec<char> = sigma.symbols().collect();
        syms.push(separator);
        Alphabet::new(syms)
    };
    let mut out_text = String::new();
    for _ in 0..vars.len() {
        out_text.push_str(&doc.text());
        out_text.push(separator);
    }
    let out_doc = Document::new(&out_text, extended.clone())?;

    if k.is_zero() {
        let auto = empty_spanner(vars);
        verify_generator_output(&auto)?;
        return Ok((auto, out_doc));
    }

    // digits of k in base |Spans(d)|, most significant first; k = base^v gets
    // the leading digit `base` followed by zeros
    let base = &spans_per_doc;
    let v = vars.len();
    let digits: Vec<u64> = if k == &space {
        let mut d = vec![0u64; v];
        d[0] = base.iter_u64_digits().next().unwrap_or(0);
        d
    } else {
        let mut d = vec![0u64; v];
        let mut rest = k.clone();
        for slot in (0..v).rev() {
            let (q, r) = rest.div_rem(base);
            d[slot] = r.iter_u64_digits().next().unwrap_or(0);
            rest = q;
        }
        debug_assert!(rest.is_zero());
        d
    };

    let full = base.iter_u64_digits().next().unwrap_or(0);
    let mut branches: Vec<RegexAst> = Vec::new();
    for (i, &digit) in digits.iter().enumerate() {
        if digit == 0 {
            continue;
        }
        let mut parts: Vec<RegexAst> = Vec::new();
        for (j, var) in vars.iter().enumerate() {
            match j.cmp(&i) {
                std::cmp::Ordering::Less => {
                    parts.push(RegexAst::literal(&doc.text()));
                    parts.push(RegexAst::capture(var.clone(), RegexAst::Sym(separator)));
                }
                std::cmp::Ordering::Equal => {
                    parts.push(k_span_formula(var, digit, n, &sigma));
                    parts.push(RegexAst::Sym(separator));
                }
                std::cmp::Ordering::Greater => {
                    parts.push(k_span_formula(var, full, n, &sigma));
                    parts.push(RegexAst::Sym(separator));
                }
            }
        }
        branches.push(RegexAst::Concat(parts));
    }
    let auto = compile_regex(&RegexAst::Alt(branches), &extended)?;
    verify_generator_output(&auto)?;
    Ok((auto, out_doc))
}

/// An automaton over the given variables accepting nothing.
fn empty_spanner(vars: &[Var]) -> VsetAutomaton {
    let mut a = VsetAutomaton::new(SemiringKind::Boolean, vars.iter().cloned());
    a.add_state();
    a
}

const SEPARATOR_CANDIDATES: &[char] = &['#', '§', '¶', '\u{1}', '\u{2}'];

fn pick_separator(sigma: &Alphabet) -> Result<char> {
    SEPARATOR_CANDIDATES.iter().copied().find(|c| !sigma.contains(*c)).ok_or_else(|| {
        Error::Range("no separator symbol available outside the document alphabet".to_string())
    })
}

fn verify_generator_output(a: &VsetAutomaton) -> Result<()> {
    if !a.is_functional() {
        return Err(Error::Functionality("generated spanner".to_string()));
    }
    if !a.is_unambiguous() {
        return Err(Error::Structure("generated spanner is ambiguous".to_string()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// #CNF as a Sum instance

/// A CNF formula over variables `1..=num_vars`; literals are signed indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i64>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i64>>) -> Result<Self> {
        for clause in &clauses {
            if clause.is_empty() {
                return Err(Error::Range("empty clause".to_string()));
            }
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > num_vars {
                    return Err(Error::Range(format!("literal {lit} out of range")));
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// Number of satisfying assignments, by exhaustive enumeration.
    pub fn count_satisfying(&self) -> BigUint {
        let mut count = BigUint::zero();
        for bits in 0..(1u64 << self.num_vars) {
            let sat = self.clauses.iter().all(|clause| {
                clause.iter().any(|&lit| {
                    let v = (bits >> (lit.unsigned_abs() - 1)) & 1 == 1;
                    if lit > 0 {
                        v
                    } else {
                        !v
                    }
                })
            });
            if sat {
                count += BigUint::one();
            }
        }
        count
    }
}

fn assignment_var(i: usize) -> Var {
    Var::new(format!("x{i}"))
}

/// `xᵢ{a} ∨ xᵢ{ε}·a`: an empty capture at position `i` encodes false, a
/// one-symbol capture encodes true.
fn free_choice(i: usize) -> RegexAst {
    RegexAst::alt([
        RegexAst::capture(assignment_var(i), RegexAst::Sym('a')),
        RegexAst::concat([
            RegexAst::capture(assignment_var(i), RegexAst::Eps),
            RegexAst::Sym('a'),
        ]),
    ])
}

/// The branch for one clause: tuples correspond exactly to the assignments
/// falsifying it. Public so tests can compare against hand-written formulas.
pub fn cnf_clause_branch(formula: &CnfFormula, clause: &[i64]) -> RegexAst {
    let mut parts: Vec<RegexAst> = Vec::new();
    for i in 1..=formula.num_vars {
        let positive = clause.contains(&(i as i64));
        let negative = clause.contains(&(-(i as i64)));
        let piece = if positive {
            // falsify: the variable must be false
            RegexAst::concat([
                RegexAst::capture(assignment_var(i), RegexAst::Eps),
                RegexAst::Sym('a'),
            ])
        } else if negative {
            // falsify: the variable must be true
            RegexAst::capture(assignment_var(i), RegexAst::Sym('a'))
        } else {
            RegexAst::alt([
                RegexAst::concat([
                    RegexAst::capture(assignment_var(i), RegexAst::Eps),
                    RegexAst::Sym('a'),
                ]),
                RegexAst::capture(assignment_var(i), RegexAst::Sym('a')),
            ])
        };
        parts.push(piece);
    }
    parts.push(RegexAst::capture(Var::new("x"), RegexAst::literal("-1")));
    RegexAst::Concat(parts)
}

/// Encodes `#CNF` as a Sum instance: on `d = aⁿ·"-1"` the returned spanner
/// extracts one weight-`1` tuple per assignment and one weight-`−1` tuple
/// per (clause, falsifying assignment) pair, so the Sum over the returned
/// constant-width weight equals the number of satisfying assignments.
pub fn encode_cnf_sum(
    formula: &CnfFormula,
) -> Result<(VsetAutomaton, Document, CWidthRelation)> {
    let alphabet = Alphabet::new(['a', '-', '1']);
    let text = format!("{}-1", "a".repeat(formula.num_vars));
    let doc = Document::new(&text, alphabet.clone())?;

    // the all-assignments branch, ending in x{1}
    let mut positive: Vec<RegexAst> = (1..=formula.num_vars).map(free_choice).collect();
    positive.push(RegexAst::Sym('-'));
    positive.push(RegexAst::capture(Var::new("x"), RegexAst::Sym('1')));
    let mut branches = vec![RegexAst::Concat(positive)];
    for clause in &formula.clauses {
        branches.push(cnf_clause_branch(formula, clause));
    }
    let spanner = compile_regex(&RegexAst::Alt(branches), &alphabet)?;

    let x = Var::new("x");
    let weight = CWidthRelation::new(
        [x.clone()],
        [
            (BTreeMap::from([(x.clone(), "1".to_string())]), integer(1)),
            (BTreeMap::from([(x.clone(), "-1".to_string())]), integer(-1)),
        ],
        &WeightLimits::default(),
    )?;
    Ok((spanner, doc, weight))
}

// ---------------------------------------------------------------------------
// The packaged running example

/// The events-per-location demo: a document, an unambiguous spanner, an
/// ambiguous variant extracting the same relation, and the weight relation
/// translating the captured event counts to numbers.
pub struct RunningExample {
    pub doc: Document,
    pub lower: VsetAutomaton,
    pub upper: VsetAutomaton,
    pub weights: CWidthRelation,
}

pub const RUNNING_EXAMPLE_TEXT: &str =
    "There are 7 events in Belgium, 10-15 in France, 4 in Luxembourg, three in Berlin.";

pub fn running_example() -> Result<RunningExample> {
    let doc = Document::from_text(RUNNING_EXAMPLE_TEXT);
    let sigma = doc.alphabet().clone();
    let events = Var::new("x_events");
    let loc = Var::new("x_loc");

    let number = RegexAst::alt([
        RegexAst::literal("7"),
        RegexAst::literal("10-15"),
        RegexAst::literal("4"),
        RegexAst::literal("three"),
    ]);
    let gap = RegexAst::alt([RegexAst::literal(" events in "), RegexAst::literal(" in ")]);
    let cities = [RegexAst::literal("Luxembourg"), RegexAst::literal("Berlin")];
    let countries = [
        RegexAst::literal("Belgium"),
        RegexAst::literal("France"),
        RegexAst::literal("Luxembourg"),
    ];
    let location_once = RegexAst::alt([
        RegexAst::literal("Belgium"),
        RegexAst::literal("France"),
        RegexAst::literal("Luxembourg"),
        RegexAst::literal("Berlin"),
    ]);
    let location_twice = RegexAst::alt(cities.into_iter().chain(countries));

    let body = |location: RegexAst| {
        RegexAst::concat([
            RegexAst::star(RegexAst::Any),
            RegexAst::capture(events.clone(), number.clone()),
            gap.clone(),
            RegexAst::capture(loc.clone(), location),
            RegexAst::star(RegexAst::Any),
        ])
    };
    let lower = compile_regex(&body(location_once), &sigma)?;
    let upper = compile_regex(&body(location_twice), &sigma)?;

    let weights = CWidthRelation::new(
        [events.clone()],
        [
            (BTreeMap::from([(events.clone(), "7".to_string())]), integer(7)),
            (BTreeMap::from([(events.clone(), "10-15".to_string())]), integer(10)),
            (BTreeMap::from([(events.clone(), "4".to_string())]), integer(4)),
            (BTreeMap::from([(events.clone(), "three".to_string())]), integer(3)),
        ],
        &WeightLimits::default(),
    )?;
    Ok(RunningExample { doc, lower, upper, weights })
}
