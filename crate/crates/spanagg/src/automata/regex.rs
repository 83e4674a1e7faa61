//! Regex formulas with capture variables, and their compilation into
//! vset-automata.
//!
//! Grammar:
//!
//! ```text
//! expr   := term ('|' term)*
//! term   := factor+
//! factor := atom '*'?
//! atom   := CHAR | '.' | '(' expr ')' | '()' | VAR '{' expr '}'
//! ```
//!
//! `CHAR` is any declared alphabet symbol, backslash-escaped if it is one of
//! the metacharacters `| * ( ) { } . \`. `VAR` is an identifier matching
//! `[A-Za-z_][A-Za-z0-9_]*`. `.` matches any single alphabet symbol and
//! `()` denotes the empty word.

use crate::error::{Error, Result};
use crate::semiring::SemiringKind;
use crate::spans::{Alphabet, Var};

use super::{remove_epsilon, Label, StateId, VsetAutomaton};

/// Abstract syntax of a regex formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegexAst {
    Sym(char),
    /// `.`: any single alphabet symbol.
    Any,
    /// `()`: the empty word.
    Eps,
    Concat(Vec<RegexAst>),
    Alt(Vec<RegexAst>),
    Star(Box<RegexAst>),
    Capture(Var, Box<RegexAst>),
}

impl RegexAst {
    pub fn literal(s: &str) -> RegexAst {
        RegexAst::Concat(s.chars().map(RegexAst::Sym).collect())
    }

    pub fn capture(var: impl Into<Var>, inner: RegexAst) -> RegexAst {
        RegexAst::Capture(var.into(), Box::new(inner))
    }

    pub fn star(inner: RegexAst) -> RegexAst {
        RegexAst::Star(Box::new(inner))
    }

    pub fn concat(parts: impl IntoIterator<Item = RegexAst>) -> RegexAst {
        RegexAst::Concat(parts.into_iter().collect())
    }

    pub fn alt(parts: impl IntoIterator<Item = RegexAst>) -> RegexAst {
        RegexAst::Alt(parts.into_iter().collect())
    }

    /// Alternation over an explicit set of symbols.
    pub fn one_of(symbols: impl IntoIterator<Item = char>) -> RegexAst {
        RegexAst::Alt(symbols.into_iter().map(RegexAst::Sym).collect())
    }

    /// All capture variables occurring in the formula.
    pub fn capture_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            RegexAst::Sym(_) | RegexAst::Any | RegexAst::Eps => {}
            RegexAst::Concat(parts) | RegexAst::Alt(parts) => {
                for p in parts {
                    p.collect_vars(out);
                }
            }
            RegexAst::Star(inner) => inner.collect_vars(out),
            RegexAst::Capture(v, inner) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
                inner.collect_vars(out);
            }
        }
    }
}

const METACHARACTERS: &[char] = &['|', '*', '(', ')', '{', '}', '.', '\\'];

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("regex: {msg} at offset {}", self.pos))
    }

    fn parse_expr(&mut self) -> Result<RegexAst> {
        let mut branches = vec![self.parse_term()?];
        while self.peek() == Some('|') {
            self.bump();
            branches.push(self.parse_term()?);
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { RegexAst::Alt(branches) })
    }

    fn parse_term(&mut self) -> Result<RegexAst> {
        let mut factors = Vec::new();
        while self.starts_atom() {
            factors.push(self.parse_factor()?);
        }
        if factors.is_empty() {
            return Err(self.error("expected at least one factor"));
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { RegexAst::Concat(factors) })
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            None => false,
            Some(c) => !matches!(c, '|' | '*' | ')' | '{' | '}'),
        }
    }

    fn parse_factor(&mut self) -> Result<RegexAst> {
        let atom = self.parse_atom()?;
        if self.peek() == Some('*') {
            self.bump();
            Ok(RegexAst::Star(Box::new(atom)))
        } else {
            Ok(atom)
        }
    }

    /// A maximal identifier followed by `{` is a capture; otherwise the
    /// leading character is an ordinary symbol.
    fn try_capture_head(&self) -> Option<(String, usize)> {
        let first = self.peek()?;
        if !(first.is_ascii_alphabetic() || first == '_') {
            return None;
        }
        let mut end = self.pos;
        while end < self.chars.len()
            && (self.chars[end].is_ascii_alphanumeric() || self.chars[end] == '_')
        {
            end += 1;
        }
        if self.chars.get(end) == Some(&'{') {
            Some((self.chars[self.pos..end].iter().collect(), end))
        } else {
            None
        }
    }

    fn parse_atom(&mut self) -> Result<RegexAst> {
        if let Some((name, ident_end)) = self.try_capture_head() {
            self.pos = ident_end + 1; // past '{'
            let inner = self.parse_expr()?;
            if self.bump() != Some('}') {
                return Err(self.error("expected '}' closing a capture"));
            }
            return Ok(RegexAst::Capture(Var::new(name), Box::new(inner)));
        }
        match self.peek() {
            None => Err(self.error("unexpected end of pattern")),
            Some('.') => {
                self.bump();
                Ok(RegexAst::Any)
            }
            Some('(') => {
                self.bump();
                if self.peek() == Some(')') {
                    self.bump();
                    return Ok(RegexAst::Eps);
                }
                let inner = self.parse_expr()?;
                if self.bump() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some('\\') => {
                self.bump();
                match self.bump() {
                    Some(c) => Ok(RegexAst::Sym(c)),
                    None => Err(self.error("dangling escape")),
                }
            }
            Some(c) if METACHARACTERS.contains(&c) => {
                Err(self.error(&format!("unexpected metacharacter {c:?}")))
            }
            Some(c) => {
                self.bump();
                Ok(RegexAst::Sym(c))
            }
        }
    }
}

/// Parses the surface syntax into an AST.
pub fn parse_regex(src: &str) -> Result<RegexAst> {
    let mut p = Parser { chars: src.chars().collect(), pos: 0 };
    let ast = p.parse_expr()?;
    if p.pos != p.chars.len() {
        return Err(p.error("trailing input"));
    }
    Ok(ast)
}

/// Compiles a regex formula into a functional Boolean vset-automaton.
///
/// Thompson-style construction with `⊢x`/`⊣x` transitions at capture
/// boundaries, followed by epsilon removal and trimming. Rejects formulas
/// whose automaton is not functional (a variable repeated or omitted on some
/// branch).
pub fn compile_regex(ast: &RegexAst, alphabet: &Alphabet) -> Result<VsetAutomaton> {
    let kind = SemiringKind::Boolean;
    let vars = ast.capture_vars();
    let mut a = VsetAutomaton::new(kind, vars);
    let (start, end) = build(ast, &mut a, alphabet)?;
    a.set_initial(start, kind.one());
    a.set_final(end, kind.one());
    let a = remove_epsilon(&a)?;
    if !a.is_functional() {
        return Err(Error::Functionality(
            "regex formula does not bind every variable exactly once on every branch".to_string(),
        ));
    }
    Ok(a)
}

fn build(
    ast: &RegexAst,
    a: &mut VsetAutomaton,
    alphabet: &Alphabet,
) -> Result<(StateId, StateId)> {
    let one = SemiringKind::Boolean.one();
    match ast {
        RegexAst::Sym(c) => {
            if !alphabet.contains(*c) {
                return Err(Error::Parse(format!(
                    "regex symbol {c:?} is not in the declared alphabet"
                )));
            }
            let s = a.add_state();
            let e = a.add_state();
            a.add_transition(s, Label::Sym(*c), e, one);
            Ok((s, e))
        }
        RegexAst::Any => {
            let s = a.add_state();
            let e = a.add_state();
            for c in alphabet.symbols() {
                a.add_transition(s, Label::Sym(c), e, one.clone());
            }
            Ok((s, e))
        }
        RegexAst::Eps => {
            let s = a.add_state();
            let e = a.add_state();
            a.add_transition(s, Label::Eps, e, one);
            Ok((s, e))
        }
        RegexAst::Concat(parts) => {
            let s = a.add_state();
            let mut cur = s;
            for p in parts {
                let (ps, pe) = build(p, a, alphabet)?;
                a.add_transition(cur, Label::Eps, ps, one.clone());
                cur = pe;
            }
            let e = a.add_state();
            a.add_transition(cur, Label::Eps, e, one);
            Ok((s, e))
        }
        RegexAst::Alt(parts) => {
            let s = a.add_state();
            let e = a.add_state();
            for p in parts {
                let (ps, pe) = build(p, a, alphabet)?;
                a.add_transition(s, Label::Eps, ps, one.clone());
                a.add_transition(pe, Label::Eps, e, one.clone());
            }
            Ok((s, e))
        }
        RegexAst::Star(inner) => {
            let s = a.add_state();
            let e = a.add_state();
            let (is, ie) = build(inner, a, alphabet)?;
            a.add_transition(s, Label::Eps, e, one.clone());
            a.add_transition(s, Label::Eps, is, one.clone());
            a.add_transition(ie, Label::Eps, e, one.clone());
            a.add_transition(ie, Label::Eps, is, one);
            Ok((s, e))
        }
        RegexAst::Capture(v, inner) => {
            let s = a.add_state();
            let e = a.add_state();
            let (is, ie) = build(inner, a, alphabet)?;
            a.add_transition(s, Label::Open(v.clone()), is, one.clone());
            a.add_transition(ie, Label::Close(v.clone()), e, one);
            Ok((s, e))
        }
    }
}
