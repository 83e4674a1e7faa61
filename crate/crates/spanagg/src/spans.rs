//! Documents, spans, span tuples, and ref-words.
//!
//! Positions are 1-based throughout; a span `[i, j⟩` selects the symbols at
//! positions `i..j-1` of the document, so `i = j` is the empty span. A
//! ref-word is a word over the alphabet extended with variable markers
//! `⊢x` / `⊣x`; it jointly encodes a document and a tuple.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A capture variable name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Self {
        Var(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({})", self.0)
    }
}

impl<T: AsRef<str>> From<T> for Var {
    fn from(s: T) -> Self {
        Var::new(s)
    }
}

/// Whether a variable operation opens or closes the variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarOpKind {
    Open,
    Close,
}

/// A variable operation `⊢x` or `⊣x`.
///
/// The derived ordering is the fixed total order on variable operations used
/// for the variable order condition: operations compare by `(name, kind)`
/// with `Open < Close` at equal names. In particular `⊢x` precedes `⊣x` for
/// every variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarOp {
    pub var: Var,
    pub kind: VarOpKind,
}

impl VarOp {
    pub fn open(var: impl Into<Var>) -> Self {
        VarOp { var: var.into(), kind: VarOpKind::Open }
    }

    pub fn close(var: impl Into<Var>) -> Self {
        VarOp { var: var.into(), kind: VarOpKind::Close }
    }
}

impl PartialOrd for VarOp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VarOp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.var, self.kind).cmp(&(&other.var, other.kind))
    }
}

impl fmt::Display for VarOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            VarOpKind::Open => write!(f, "⊢{}", self.var),
            VarOpKind::Close => write!(f, "⊣{}", self.var),
        }
    }
}

/// A finite alphabet of symbols, declared explicitly per run.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Alphabet {
    symbols: BTreeSet<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Self {
        Alphabet { symbols: symbols.into_iter().collect() }
    }

    /// The distinct symbols of a string, in order of code point.
    pub fn of_text(text: &str) -> Self {
        Alphabet::new(text.chars())
    }

    pub fn contains(&self, c: char) -> bool {
        self.symbols.contains(&c)
    }

    pub fn symbols(&self) -> impl Iterator<Item = char> + '_ {
        self.symbols.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn union(&self, other: &Alphabet) -> Alphabet {
        Alphabet { symbols: self.symbols.union(&other.symbols).copied().collect() }
    }
}

/// A document: a finite sequence of symbols over a declared alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    symbols: Vec<char>,
    alphabet: Alphabet,
}

impl Document {
    /// Builds a document, checking every symbol against the alphabet.
    pub fn new(text: &str, alphabet: Alphabet) -> Result<Self> {
        for c in text.chars() {
            if !alphabet.contains(c) {
                return Err(Error::Range(format!(
                    "document symbol {c:?} is not in the declared alphabet"
                )));
            }
        }
        Ok(Document { symbols: text.chars().collect(), alphabet })
    }

    /// Builds a document whose alphabet is exactly its set of symbols.
    pub fn from_text(text: &str) -> Self {
        Document { symbols: text.chars().collect(), alphabet: Alphabet::of_text(text) }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// The symbol at 1-based position `i`.
    pub fn symbol_at(&self, i: usize) -> Option<char> {
        if i >= 1 {
            self.symbols.get(i - 1).copied()
        } else {
            None
        }
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn text(&self) -> String {
        self.symbols.iter().collect()
    }
}

/// A span `[start, end⟩` of a document, 1-based with exclusive end.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start < 1 || start > end {
            return Err(Error::Range(format!("invalid span [{start},{end}⟩")));
        }
        Ok(Span { start, end })
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    /// Whether the span lies within a document of length `n`:
    /// `1 ≤ start ≤ end ≤ n + 1`.
    pub fn is_valid_for(&self, doc: &Document) -> bool {
        self.start >= 1 && self.end <= doc.len() + 1
    }
}

impl fmt::Debug for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}⟩", self.start, self.end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}⟩", self.start, self.end)
    }
}

/// A tuple assigning a span to each variable of its domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SpanTuple {
    bindings: BTreeMap<Var, Span>,
}

impl SpanTuple {
    pub fn empty() -> Self {
        SpanTuple::default()
    }

    pub fn new(bindings: impl IntoIterator<Item = (Var, Span)>) -> Self {
        SpanTuple { bindings: bindings.into_iter().collect() }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.bindings.keys()
    }

    pub fn var_set(&self) -> BTreeSet<Var> {
        self.bindings.keys().cloned().collect()
    }

    pub fn get(&self, var: &Var) -> Option<Span> {
        self.bindings.get(var).copied()
    }

    pub fn insert(&mut self, var: Var, span: Span) {
        self.bindings.insert(var, span);
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Span)> {
        self.bindings.iter()
    }

    /// Restriction of the tuple to the variables in `vars`.
    ///
    /// Fails if a requested variable is unbound.
    pub fn project(&self, vars: &BTreeSet<Var>) -> Result<SpanTuple> {
        let mut out = SpanTuple::empty();
        for v in vars {
            match self.get(v) {
                Some(s) => out.insert(v.clone(), s),
                None => {
                    return Err(Error::Type(format!("variable {v} is not bound by the tuple")))
                }
            }
        }
        Ok(out)
    }

    /// Whether every bound span is valid for `doc`.
    pub fn is_valid_for(&self, doc: &Document) -> bool {
        self.bindings.values().all(|s| s.is_valid_for(doc))
    }
}

impl fmt::Display for SpanTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, s)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v} ↦ {s}")?;
        }
        write!(f, "}}")
    }
}

/// One symbol of a ref-word: an alphabet symbol or a variable operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RefSym {
    Sym(char),
    Op(VarOp),
}

impl fmt::Display for RefSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefSym::Sym(c) => write!(f, "{c}"),
            RefSym::Op(op) => write!(f, "{op}"),
        }
    }
}

/// A ref-word: a sequence over the alphabet extended with variable markers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RefWord {
    symbols: Vec<RefSym>,
}

impl RefWord {
    pub fn new(symbols: Vec<RefSym>) -> Self {
        RefWord { symbols }
    }

    pub fn symbols(&self) -> &[RefSym] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Checks validity: every occurring variable opens exactly once and
    /// closes exactly once, with the close after the open.
    pub fn check_valid(&self) -> Result<()> {
        let mut open: BTreeSet<Var> = BTreeSet::new();
        let mut closed: BTreeSet<Var> = BTreeSet::new();
        for s in &self.symbols {
            if let RefSym::Op(op) = s {
                match op.kind {
                    VarOpKind::Open => {
                        if open.contains(&op.var) || closed.contains(&op.var) {
                            return Err(Error::Validity(format!(
                                "variable {} opened twice",
                                op.var
                            )));
                        }
                        open.insert(op.var.clone());
                    }
                    VarOpKind::Close => {
                        if !open.remove(&op.var) {
                            return Err(Error::Validity(format!(
                                "variable {} closed while not open",
                                op.var
                            )));
                        }
                        closed.insert(op.var.clone());
                    }
                }
            }
        }
        if let Some(v) = open.iter().next() {
            return Err(Error::Validity(format!("variable {v} never closed")));
        }
        Ok(())
    }

    /// Whether all adjacent variable operations are sorted under the fixed
    /// total order on variable operations.
    pub fn satisfies_voc(&self) -> bool {
        self.symbols.windows(2).all(|w| match (&w[0], &w[1]) {
            (RefSym::Op(a), RefSym::Op(b)) => a < b,
            _ => true,
        })
    }

    /// The set of variables occurring in the ref-word.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.symbols
            .iter()
            .filter_map(|s| match s {
                RefSym::Op(op) => Some(op.var.clone()),
                RefSym::Sym(_) => None,
            })
            .collect()
    }
}

impl fmt::Display for RefWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// All spans of `doc`: every `[i,j⟩` with `1 ≤ i ≤ j ≤ |doc|+1`.
///
/// The result has `(|doc|+1)(|doc|+2)/2` elements.
pub fn spans_of(doc: &Document) -> Vec<Span> {
    let n = doc.len();
    let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in 1..=n + 1 {
        for j in i..=n + 1 {
            out.push(Span { start: i, end: j });
        }
    }
    out
}

/// The substring `doc[i..j-1]` selected by a span.
pub fn subdoc(doc: &Document, span: Span) -> Result<String> {
    if !span.is_valid_for(doc) {
        return Err(Error::Range(format!(
            "span {span} is out of range for a document of length {}",
            doc.len()
        )));
    }
    Ok(doc.symbols()[span.start - 1..span.end - 1].iter().collect())
}

/// The `doc` morphism: erase all variable operations.
pub fn doc_of_refword(r: &RefWord) -> String {
    r.symbols()
        .iter()
        .filter_map(|s| match s {
            RefSym::Sym(c) => Some(*c),
            RefSym::Op(_) => None,
        })
        .collect()
}

/// The `tup` function: the tuple encoded by a valid ref-word.
///
/// The span of `x` starts at one plus the number of alphabet symbols before
/// `⊢x` and ends at one plus the number of alphabet symbols before `⊣x`.
pub fn tup_of_refword(r: &RefWord) -> Result<SpanTuple> {
    r.check_valid()?;
    let mut tuple = SpanTuple::empty();
    let mut open_at: BTreeMap<Var, usize> = BTreeMap::new();
    let mut pos = 1usize; // 1-based position of the next document symbol
    for s in r.symbols() {
        match s {
            RefSym::Sym(_) => pos += 1,
            RefSym::Op(op) => match op.kind {
                VarOpKind::Open => {
                    open_at.insert(op.var.clone(), pos);
                }
                VarOpKind::Close => {
                    let start = open_at[&op.var];
                    tuple.insert(op.var.clone(), Span { start, end: pos });
                }
            },
        }
    }
    Ok(tuple)
}

/// The unique ref-word encoding `(doc, tuple)` that satisfies the variable
/// order condition.
pub fn canonical_refword(doc: &Document, tuple: &SpanTuple) -> Result<RefWord> {
    if !tuple.is_valid_for(doc) {
        return Err(Error::Range(format!(
            "tuple {tuple} is not a tuple over a document of length {}",
            doc.len()
        )));
    }
    let n = doc.len();
    let mut blocks: Vec<Vec<VarOp>> = vec![Vec::new(); n + 2];
    for (v, s) in tuple.iter() {
        blocks[s.start].push(VarOp::open(v.clone()));
        blocks[s.end].push(VarOp::close(v.clone()));
    }
    let mut symbols = Vec::new();
    for pos in 1..=n + 1 {
        blocks[pos].sort();
        symbols.extend(blocks[pos].drain(..).map(RefSym::Op));
        if pos <= n {
            symbols.push(RefSym::Sym(doc.symbols()[pos - 1]));
        }
    }
    Ok(RefWord::new(symbols))
}
