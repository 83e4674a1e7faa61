//! Weight functions mapping (document, tuple) pairs to exact rationals.
//!
//! Three representations:
//!
//! * constant-width relations: the weight depends only on the strings
//!   captured by a bounded set of variables, given as a finite weighted
//!   string relation;
//! * regular weight functions: a functional weighted vset-automaton over the
//!   tropical or numerical semiring;
//! * host callbacks: an opaque total function with a declared time budget.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use num_rational::BigRational;
use num_traits::Zero;

use crate::automata::{
    accepts, automaton_from_json, automaton_to_json, compile_regex, join, remove_epsilon, union_,
    Label, RegexAst, VsetAutomaton,
};
use crate::error::{Error, Result};
use crate::semiring::{format_rational, parse_rational, SemiringKind, SemiringValue};
use crate::spans::{subdoc, Alphabet, Document, SpanTuple, Var};

/// Configuration limits for weight functions.
#[derive(Clone, Copy, Debug)]
pub struct WeightLimits {
    /// Maximum arity of a constant-width weight function.
    pub max_cwidth_arity: usize,
}

impl Default for WeightLimits {
    fn default() -> Self {
        WeightLimits { max_cwidth_arity: 4 }
    }
}

/// A constant-width weight function: a finite map from string tuples over a
/// bounded variable set to rationals. Absent rows weigh zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CWidthRelation {
    vars: Vec<Var>, // sorted
    rows: BTreeMap<Vec<String>, BigRational>,
}

impl CWidthRelation {
    pub fn new(
        vars: impl IntoIterator<Item = Var>,
        rows: impl IntoIterator<Item = (BTreeMap<Var, String>, BigRational)>,
        limits: &WeightLimits,
    ) -> Result<Self> {
        let var_set: BTreeSet<Var> = vars.into_iter().collect();
        if var_set.len() > limits.max_cwidth_arity {
            return Err(Error::Type(format!(
                "constant-width weight function over {} variables exceeds the arity limit {}",
                var_set.len(),
                limits.max_cwidth_arity
            )));
        }
        let vars: Vec<Var> = var_set.iter().cloned().collect();
        let mut out = BTreeMap::new();
        for (strings, weight) in rows {
            let domain: BTreeSet<Var> = strings.keys().cloned().collect();
            if domain != var_set {
                return Err(Error::Type(format!(
                    "row over variables {domain:?} does not match the declared set {var_set:?}"
                )));
            }
            let key: Vec<String> = vars.iter().map(|v| strings[v].clone()).collect();
            if out.insert(key.clone(), weight).is_some() {
                return Err(Error::Parse(format!("duplicate row for strings {key:?}")));
            }
        }
        Ok(CWidthRelation { vars, rows: out })
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.vars.iter().cloned().collect()
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Vec<String>, &BigRational)> {
        self.rows.iter()
    }

    /// The weight of a projected tuple, via the strings it selects.
    pub fn weight_of_tuple(&self, doc: &Document, t: &SpanTuple) -> Result<BigRational> {
        let mut key = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let span = t
                .get(v)
                .ok_or_else(|| Error::Type(format!("weight variable {v} missing from tuple")))?;
            key.push(subdoc(doc, span)?);
        }
        Ok(self.rows.get(&key).cloned().unwrap_or_else(BigRational::zero))
    }

    /// Multiplies every row weight by a constant.
    pub fn scale(&self, factor: &BigRational) -> CWidthRelation {
        CWidthRelation {
            vars: self.vars.clone(),
            rows: self.rows.iter().map(|(k, w)| (k.clone(), w * factor)).collect(),
        }
    }
}

/// A regular weight function: a functional weighted vset-automaton over the
/// tropical or numerical semiring. Whether the automaton is unambiguous is
/// verified at construction, not declared.
#[derive(Clone, Debug)]
pub struct RegWeight {
    automaton: VsetAutomaton,
    unambiguous: bool,
}

impl RegWeight {
    pub fn new(automaton: VsetAutomaton) -> Result<Self> {
        if automaton.semiring() == SemiringKind::Boolean {
            return Err(Error::Type(
                "regular weight functions use the tropical or numerical semiring".to_string(),
            ));
        }
        let automaton = remove_epsilon(&automaton)?;
        if !automaton.is_functional() {
            return Err(Error::Functionality("regular weight automaton".to_string()));
        }
        let unambiguous = automaton.is_unambiguous();
        Ok(RegWeight { automaton, unambiguous })
    }

    pub fn automaton(&self) -> &VsetAutomaton {
        &self.automaton
    }

    pub fn semiring(&self) -> SemiringKind {
        self.automaton.semiring()
    }

    pub fn is_unambiguous(&self) -> bool {
        self.unambiguous
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.automaton.vars().clone()
    }

    pub fn weight_of_tuple(&self, doc: &Document, t: &SpanTuple) -> Result<BigRational> {
        let projected = t.project(self.automaton.vars())?;
        match accepts(&self.automaton, doc, &projected)? {
            SemiringValue::Num(q) | SemiringValue::Trop(q) => Ok(q),
            SemiringValue::TropInfinity => Err(Error::Domain(format!(
                "tuple {projected} has no run in the tropical weight automaton"
            ))),
            SemiringValue::Bool(_) => unreachable!("checked at construction"),
        }
    }
}

impl PartialEq for RegWeight {
    fn eq(&self, other: &Self) -> bool {
        self.automaton == other.automaton
    }
}

/// A host-supplied weight function. The budget is declared metadata for the
/// host; a callback that produces no value within its budget reports `None`,
/// which is interpreted as weight zero.
#[derive(Clone)]
pub struct CallbackWeight {
    func: Arc<dyn Fn(&Document, &SpanTuple) -> Option<BigRational> + Send + Sync>,
    budget: Duration,
}

impl CallbackWeight {
    pub fn new(
        budget: Duration,
        func: impl Fn(&Document, &SpanTuple) -> Option<BigRational> + Send + Sync + 'static,
    ) -> Self {
        CallbackWeight { func: Arc::new(func), budget }
    }

    pub fn budget(&self) -> Duration {
        self.budget
    }

    pub fn weight_of_tuple(&self, doc: &Document, t: &SpanTuple) -> BigRational {
        (self.func)(doc, t).unwrap_or_else(BigRational::zero)
    }
}

impl fmt::Debug for CallbackWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackWeight").field("budget", &self.budget).finish_non_exhaustive()
    }
}

/// Any of the three weight-function representations.
#[derive(Clone, Debug)]
pub enum WeightFunction {
    CWidth(CWidthRelation),
    Reg(RegWeight),
    Callback(CallbackWeight),
}

impl WeightFunction {
    /// The variables the weight function reads. `None` means the full tuple
    /// is consumed (callbacks).
    pub fn required_vars(&self) -> Option<BTreeSet<Var>> {
        match self {
            WeightFunction::CWidth(r) => Some(r.vars()),
            WeightFunction::Reg(w) => Some(w.vars()),
            WeightFunction::Callback(_) => None,
        }
    }
}

/// Evaluates a weight function on one tuple.
///
/// The variables the weight function reads must be present in the tuple.
/// A tropical weight automaton with no run for the tuple is a domain error.
pub fn weight_of(w: &WeightFunction, doc: &Document, t: &SpanTuple) -> Result<BigRational> {
    match w {
        WeightFunction::CWidth(r) => r.weight_of_tuple(doc, t),
        WeightFunction::Reg(r) => r.weight_of_tuple(doc, t),
        WeightFunction::Callback(c) => Ok(c.weight_of_tuple(doc, t)),
    }
}

/// `Σ* · x{s} · Σ*` as an unambiguous Boolean spanner.
fn string_capture(x: &Var, s: &str, alphabet: &Alphabet) -> Result<VsetAutomaton> {
    let ast = RegexAst::concat([
        RegexAst::star(RegexAst::Any),
        RegexAst::capture(x.clone(), RegexAst::literal(s)),
        RegexAst::star(RegexAst::Any),
    ]);
    compile_regex(&ast, alphabet)
}

/// `Σ* · x{L} · Σ*` where `L = Σ* \ F` for a finite string set `F`, built
/// from the complete trie DFA of `F`.
fn complement_capture(x: &Var, forbidden: &[&str], alphabet: &Alphabet) -> VsetAutomaton {
    let kind = SemiringKind::Boolean;
    let one = kind.one();
    let mut a = VsetAutomaton::new(kind, [x.clone()]);
    let pre = a.add_state();
    let post = a.add_state();
    for c in alphabet.symbols() {
        a.add_transition(pre, Label::Sym(c), pre, one.clone());
        a.add_transition(post, Label::Sym(c), post, one.clone());
    }
    a.set_initial(pre, one.clone());
    a.set_final(post, one.clone());

    // Trie over all prefixes of the forbidden strings, plus a sink for every
    // other string; accepting exactly the non-forbidden strings.
    let mut prefixes: BTreeMap<String, usize> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for f in forbidden {
        let chars: Vec<char> = f.chars().collect();
        for i in 0..=chars.len() {
            let p: String = chars[..i].iter().collect();
            prefixes.entry(p.clone()).or_insert_with(|| {
                order.push(p);
                order.len() - 1
            });
        }
    }
    if prefixes.is_empty() {
        prefixes.insert(String::new(), 0);
        order.push(String::new());
    }
    let trie: Vec<usize> = order.iter().map(|_| a.add_state()).collect();
    let sink = a.add_state();
    for c in alphabet.symbols() {
        a.add_transition(sink, Label::Sym(c), sink, one.clone());
    }
    for (p, &i) in &prefixes {
        for c in alphabet.symbols() {
            let mut ext = p.clone();
            ext.push(c);
            let target = prefixes.get(&ext).map(|&j| trie[j]).unwrap_or(sink);
            a.add_transition(trie[i], Label::Sym(c), target, one.clone());
        }
    }
    a.add_transition(pre, Label::Open(x.clone()), trie[prefixes[""]], one.clone());
    for (p, &i) in &prefixes {
        if !forbidden.contains(&p.as_str()) {
            a.add_transition(trie[i], Label::Close(x.clone()), post, one.clone());
        }
    }
    a.add_transition(sink, Label::Close(x.clone()), post, one);
    a.trim()
}

/// Lifts a Boolean spanner into the target semiring and multiplies its
/// initial weights by a constant.
fn weighted_copy(a: &VsetAutomaton, kind: SemiringKind, scale: &SemiringValue) -> VsetAutomaton {
    let mut w = a.reweight_as(kind);
    let initial: Vec<_> = w.initial_weights().map(|(q, _)| q).collect();
    for q in initial {
        w.set_initial(q, scale.clone());
    }
    w
}

/// The universal spanner over `X`: every variable captures any span, weight `1̄`.
fn universal_spanner(vars: &[Var], alphabet: &Alphabet) -> Result<VsetAutomaton> {
    if vars.is_empty() {
        let ast = RegexAst::star(RegexAst::Any);
        return compile_regex(&ast, alphabet);
    }
    let mut auto: Option<VsetAutomaton> = None;
    for v in vars {
        let cap = compile_regex(
            &RegexAst::concat([
                RegexAst::star(RegexAst::Any),
                RegexAst::capture(v.clone(), RegexAst::star(RegexAst::Any)),
                RegexAst::star(RegexAst::Any),
            ]),
            alphabet,
        )?;
        auto = Some(match auto {
            None => cap,
            Some(acc) => join(&acc, &cap)?,
        });
    }
    Ok(auto.expect("at least one variable"))
}

/// Converts a constant-width weight function into an equivalent unambiguous
/// regular weight function over the requested semiring.
///
/// Each row becomes the join of per-variable string captures, weighted by the
/// row's value. Over the tropical semiring, where absent runs mean `∞` rather
/// than `0`, a complement branch assigning weight `0` to every tuple outside
/// the relation is added; it is built per combination of per-variable
/// "matches this row string" / "matches none of them" languages whose row
/// sets have empty intersection. The union of all branches has pairwise
/// disjoint ref-word languages, so the result is unambiguous.
pub fn cwidth_to_ureg(
    relation: &CWidthRelation,
    kind: SemiringKind,
    alphabet: &Alphabet,
) -> Result<RegWeight> {
    if kind == SemiringKind::Boolean {
        return Err(Error::Type("weight automata are tropical or numerical".to_string()));
    }
    let vars = relation.vars.clone();
    let mut branches: Vec<VsetAutomaton> = Vec::new();

    for (strings, value) in &relation.rows {
        let scale = match kind {
            SemiringKind::Numerical => SemiringValue::Num(value.clone()),
            SemiringKind::Tropical => SemiringValue::Trop(value.clone()),
            SemiringKind::Boolean => unreachable!(),
        };
        if scale.is_zero() {
            // Over the numerical semiring a zero row is the same as an
            // absent one; skip it rather than build an empty branch.
            continue;
        }
        let mut row_auto: Option<VsetAutomaton> = None;
        for (v, s) in vars.iter().zip(strings) {
            let cap = string_capture(v, s, alphabet)?;
            row_auto = Some(match row_auto {
                None => cap,
                Some(acc) => join(&acc, &cap)?,
            });
        }
        let bool_auto = match row_auto {
            Some(a) => a,
            // zero variables: the row is the empty tuple on any document
            None => universal_spanner(&[], alphabet)?,
        };
        branches.push(weighted_copy(&bool_auto, kind, &scale));
    }

    if kind == SemiringKind::Tropical {
        // Complement branches: weight 0 for every tuple whose strings do not
        // form a row.
        let zero_weight = SemiringValue::Trop(BigRational::zero());
        if vars.is_empty() {
            if !relation.rows.contains_key(&Vec::new()) {
                branches
                    .push(weighted_copy(&universal_spanner(&[], alphabet)?, kind, &zero_weight));
            }
        } else {
            // Per variable: the distinct row strings, each with the set of
            // rows using it.
            let row_list: Vec<&Vec<String>> = relation.rows.keys().collect();
            let mut per_var: Vec<BTreeMap<&str, BTreeSet<usize>>> = vec![BTreeMap::new(); vars.len()];
            for (j, row) in row_list.iter().enumerate() {
                for (i, s) in row.iter().enumerate() {
                    per_var[i].entry(s.as_str()).or_default().insert(j);
                }
            }
            // Choice per variable: Some(string) or None ("none of them").
            let mut choices: Vec<Vec<Option<&str>>> = Vec::new();
            for m in &per_var {
                let mut c: Vec<Option<&str>> = m.keys().map(|s| Some(*s)).collect();
                c.push(None);
                choices.push(c);
            }
            let mut combo = vec![0usize; vars.len()];
            loop {
                // intersection of the row sets selected by this combination
                let mut rows_in_common: Option<BTreeSet<usize>> = None;
                for (i, &pick) in combo.iter().enumerate() {
                    let set = match choices[i][pick] {
                        Some(s) => per_var[i][s].clone(),
                        None => BTreeSet::new(),
                    };
                    rows_in_common = Some(match rows_in_common {
                        None => set,
                        Some(acc) => acc.intersection(&set).copied().collect(),
                    });
                }
                if rows_in_common.map(|s| s.is_empty()).unwrap_or(true) {
                    let mut branch: Option<VsetAutomaton> = None;
                    for (i, &pick) in combo.iter().enumerate() {
                        let cap = match choices[i][pick] {
                            Some(s) => string_capture(&vars[i], s, alphabet)?,
                            None => {
                                let forb: Vec<&str> = per_var[i].keys().copied().collect();
                                complement_capture(&vars[i], &forb, alphabet)
                            }
                        };
                        branch = Some(match branch {
                            None => cap,
                            Some(acc) => join(&acc, &cap)?,
                        });
                    }
                    branches.push(weighted_copy(
                        &branch.expect("at least one variable"),
                        kind,
                        &zero_weight,
                    ));
                }
                // next combination
                let mut i = 0;
                loop {
                    if i == combo.len() {
                        break;
                    }
                    combo[i] += 1;
                    if combo[i] < choices[i].len() {
                        break;
                    }
                    combo[i] = 0;
                    i += 1;
                }
                if i == combo.len() {
                    break;
                }
            }
        }
    }

    let union = match branches.len() {
        0 => {
            // Empty numerical relation: the automaton with empty language
            // assigns 0 everywhere, matching the absent-row convention.
            let mut vs = VsetAutomaton::new(kind, vars.iter().cloned());
            let q = vs.add_state();
            let _ = q;
            vs
        }
        _ => {
            let mut it = branches.into_iter();
            let mut acc = it.next().expect("nonempty");
            for b in it {
                acc = union_(&acc, &b)?;
            }
            acc
        }
    };
    RegWeight::new(union)
}

// ---------------------------------------------------------------------------
// JSON form

/// Parses a weight function from its JSON form:
/// `{"kind":"cwidth","vars":[...],"rows":[{"strings":{...},"weight":"1"}]}`
/// or `{"kind":"reg","automaton":{...}}`. Callback weights are library-only.
pub fn weight_from_json(value: &serde_json::Value, limits: &WeightLimits) -> Result<WeightFunction> {
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| Error::Parse("weight JSON needs a \"kind\" field".to_string()))?;
    match kind {
        "cwidth" => {
            let vars: Vec<Var> = value
                .get("vars")
                .and_then(|v| v.as_array())
                .ok_or_else(|| Error::Parse("cwidth weight needs \"vars\"".to_string()))?
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(Var::new)
                        .ok_or_else(|| Error::Parse("variable names are strings".to_string()))
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            for row in value
                .get("rows")
                .and_then(|v| v.as_array())
                .ok_or_else(|| Error::Parse("cwidth weight needs \"rows\"".to_string()))?
            {
                let strings = row
                    .get("strings")
                    .and_then(|v| v.as_object())
                    .ok_or_else(|| Error::Parse("row needs a \"strings\" object".to_string()))?;
                let mut m = BTreeMap::new();
                for (k, v) in strings {
                    let s = v
                        .as_str()
                        .ok_or_else(|| Error::Parse("row strings are strings".to_string()))?;
                    m.insert(Var::new(k), s.to_string());
                }
                let w = row
                    .get("weight")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| Error::Parse("row needs a \"weight\" string".to_string()))?;
                rows.push((m, parse_rational(w)?));
            }
            Ok(WeightFunction::CWidth(CWidthRelation::new(vars, rows, limits)?))
        }
        "reg" => {
            let auto = value
                .get("automaton")
                .ok_or_else(|| Error::Parse("reg weight needs an \"automaton\"".to_string()))?;
            Ok(WeightFunction::Reg(RegWeight::new(automaton_from_json(auto)?)?))
        }
        other => Err(Error::Parse(format!("unknown weight kind {other:?}"))),
    }
}

/// Serializes a weight function; callbacks are not expressible in files.
pub fn weight_to_json(w: &WeightFunction) -> Result<serde_json::Value> {
    match w {
        WeightFunction::CWidth(r) => {
            let rows: Vec<serde_json::Value> = r
                .rows()
                .map(|(key, weight)| {
                    let strings: serde_json::Map<String, serde_json::Value> = r
                        .vars
                        .iter()
                        .zip(key)
                        .map(|(v, s)| (v.name().to_string(), serde_json::Value::String(s.clone())))
                        .collect();
                    serde_json::json!({"strings": strings, "weight": format_rational(weight)})
                })
                .collect();
            Ok(serde_json::json!({
                "kind": "cwidth",
                "vars": r.vars.iter().map(|v| v.name().to_string()).collect::<Vec<_>>(),
                "rows": rows,
            }))
        }
        WeightFunction::Reg(w) => Ok(serde_json::json!({
            "kind": "reg",
            "automaton": automaton_to_json(w.automaton()),
        })),
        WeightFunction::Callback(_) => {
            Err(Error::Unsupported("callback weights have no file form".to_string()))
        }
    }
}
