//! JSON form of automata.
//!
//! ```json
//! {
//!   "semiring": "bool" | "num" | "trop",
//!   "vars": ["x", ...],
//!   "states": ["q0", ...],
//!   "initial": [{"state": "q0", "weight": "1"}, ...],
//!   "final": [...],
//!   "transitions": [
//!     {"from": "q0", "label": {"kind": "sym", "value": "a"}, "to": "q1", "weight": "1"}
//!   ]
//! }
//! ```
//!
//! Weights use the textual form of the semiring; an omitted weight means `1̄`.
//! Label kinds are `sym`, `eps`, `open`, and `close`; `value` carries the
//! symbol or variable name and is omitted for `eps`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semiring::{SemiringKind, SemiringValue};
use crate::spans::Var;

use super::{Label, VsetAutomaton};

#[derive(Serialize, Deserialize)]
struct AutomatonJson {
    semiring: String,
    vars: Vec<String>,
    states: Vec<String>,
    #[serde(default)]
    initial: Vec<WeightedState>,
    #[serde(rename = "final", default)]
    finals: Vec<WeightedState>,
    #[serde(default)]
    transitions: Vec<TransitionJson>,
}

#[derive(Serialize, Deserialize)]
struct WeightedState {
    state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TransitionJson {
    from: String,
    label: LabelJson,
    to: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct LabelJson {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<String>,
}

fn label_to_json(label: &Label) -> LabelJson {
    match label {
        Label::Eps => LabelJson { kind: "eps".into(), value: None },
        Label::Sym(c) => LabelJson { kind: "sym".into(), value: Some(c.to_string()) },
        Label::Open(v) => LabelJson { kind: "open".into(), value: Some(v.name().to_string()) },
        Label::Close(v) => LabelJson { kind: "close".into(), value: Some(v.name().to_string()) },
    }
}

fn label_from_json(l: &LabelJson) -> Result<Label> {
    let need = |what: &str| -> Result<&str> {
        l.value.as_deref().ok_or_else(|| Error::Parse(format!("{what} label needs a value")))
    };
    match l.kind.as_str() {
        "eps" => Ok(Label::Eps),
        "sym" => {
            let v = need("sym")?;
            let mut chars = v.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(Label::Sym(c)),
                _ => Err(Error::Parse(format!("sym label value {v:?} must be a single symbol"))),
            }
        }
        "open" => Ok(Label::Open(Var::new(need("open")?))),
        "close" => Ok(Label::Close(Var::new(need("close")?))),
        other => Err(Error::Parse(format!("unknown label kind {other:?}"))),
    }
}

/// Serializes an automaton to the documented JSON value.
pub fn automaton_to_json(a: &VsetAutomaton) -> serde_json::Value {
    let name = |q: usize| format!("q{q}");
    let weight = |w: &SemiringValue| {
        if w.is_one() {
            None
        } else {
            Some(w.to_string())
        }
    };
    let json = AutomatonJson {
        semiring: a.semiring().name().to_string(),
        vars: a.vars().iter().map(|v| v.name().to_string()).collect(),
        states: (0..a.num_states()).map(name).collect(),
        initial: a
            .initial_weights()
            .map(|(q, w)| WeightedState { state: name(q), weight: weight(w) })
            .collect(),
        finals: a
            .final_weights()
            .map(|(q, w)| WeightedState { state: name(q), weight: weight(w) })
            .collect(),
        transitions: a
            .edges()
            .map(|(p, l, q, w)| TransitionJson {
                from: name(p),
                label: label_to_json(l),
                to: name(q),
                weight: weight(w),
            })
            .collect(),
    };
    serde_json::to_value(json).expect("automaton serialization cannot fail")
}

/// Parses an automaton from its JSON form.
pub fn automaton_from_json(value: &serde_json::Value) -> Result<VsetAutomaton> {
    let json: AutomatonJson = serde_json::from_value(value.clone())
        .map_err(|e| Error::Parse(format!("automaton JSON: {e}")))?;
    let kind: SemiringKind = json.semiring.parse()?;
    let mut a = VsetAutomaton::new(kind, json.vars.iter().map(Var::new));
    let mut ids: HashMap<&str, usize> = HashMap::new();
    for s in &json.states {
        if ids.insert(s.as_str(), a.add_state()).is_some() {
            return Err(Error::Parse(format!("duplicate state name {s:?}")));
        }
    }
    let resolve = |s: &str| -> Result<usize> {
        ids.get(s).copied().ok_or_else(|| Error::Parse(format!("unknown state {s:?}")))
    };
    let parse_weight = |w: &Option<String>| -> Result<SemiringValue> {
        match w {
            None => Ok(kind.one()),
            Some(s) => SemiringValue::parse(kind, s),
        }
    };
    for ws in &json.initial {
        a.set_initial(resolve(&ws.state)?, parse_weight(&ws.weight)?);
    }
    for ws in &json.finals {
        a.set_final(resolve(&ws.state)?, parse_weight(&ws.weight)?);
    }
    let mut seen = std::collections::HashSet::new();
    for t in &json.transitions {
        let p = resolve(&t.from)?;
        let q = resolve(&t.to)?;
        let label = label_from_json(&t.label)?;
        if let Label::Open(v) | Label::Close(v) = &label {
            if !a.vars().contains(v) {
                return Err(Error::Parse(format!(
                    "transition uses undeclared variable {v}"
                )));
            }
        }
        if !seen.insert((p, label.clone(), q)) {
            return Err(Error::Parse(format!(
                "duplicate transition {} --{}--> {}",
                t.from, t.label.kind, t.to
            )));
        }
        a.add_transition(p, label, q, parse_weight(&t.weight)?);
    }
    Ok(a)
}
