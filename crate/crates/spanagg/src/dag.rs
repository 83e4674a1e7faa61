//! The product DAG of (spanner, weight automaton, document) and its path
//! algorithms.
//!
//! The DAG is built from the join of the weight automaton, the spanner
//! (lifted into the weight semiring), and the straight-line automaton of the
//! document. Nodes are (state, last transition label) pairs plus the
//! distinguished `src` and `snk`; each source-to-sink path corresponds to one
//! accepting run of the joined automaton, and its length (the `⊗`-product of
//! its edge weights) is that run's weight. Paths map onto extracted tuples
//! surjectively, and bijectively when both the spanner and the weight
//! automaton are unambiguous.

use std::collections::HashMap;

use num_bigint::{BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::automata::{doc_chain, join, normalize_var_order, Label, VsetAutomaton};
use crate::error::{Error, Result};
use crate::semiring::{SemiringKind, SemiringValue};
use crate::spans::{Document, RefSym, RefWord, SpanTuple};
use crate::weights::RegWeight;

/// Edge payload: the framing initial/final weights or one run transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DagEdgeKind {
    Initial,
    Step(Label),
    Final,
}

#[derive(Clone, Debug)]
pub struct DagEdge {
    pub from: usize,
    pub to: usize,
    pub kind: DagEdgeKind,
    pub weight: SemiringValue,
}

/// A trimmed weighted DAG with unique source and sink.
#[derive(Clone, Debug)]
pub struct ProductDag {
    semiring: SemiringKind,
    num_nodes: usize,
    src: usize,
    snk: usize,
    edges: Vec<DagEdge>,
    out: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    /// Node ids in topological order.
    topo: Vec<usize>,
    /// Common length of every src→snk path, when uniform.
    uniform_path_edges: Option<usize>,
    doc_len: usize,
    num_vars: usize,
}

impl ProductDag {
    pub fn semiring(&self) -> SemiringKind {
        self.semiring
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[DagEdge] {
        &self.edges
    }

    pub fn src(&self) -> usize {
        self.src
    }

    pub fn snk(&self) -> usize {
        self.snk
    }

    pub fn doc_len(&self) -> usize {
        self.doc_len
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn uniform_path_edges(&self) -> Option<usize> {
        self.uniform_path_edges
    }

    pub fn has_paths(&self) -> bool {
        self.src != self.snk && !self.edges.is_empty()
    }
}

/// Builds a trimmed DAG from an arbitrary edge list.
///
/// Used by the product construction and directly by tests that need small
/// hand-shaped DAGs. Fails if the graph has a cycle among nodes that lie on
/// src→snk paths.
pub struct DagBuilder {
    semiring: SemiringKind,
    num_nodes: usize,
    edges: Vec<DagEdge>,
    doc_len: usize,
    num_vars: usize,
}

impl DagBuilder {
    pub fn new(semiring: SemiringKind) -> Self {
        DagBuilder { semiring, num_nodes: 0, edges: Vec::new(), doc_len: 0, num_vars: 0 }
    }

    pub fn with_meta(mut self, doc_len: usize, num_vars: usize) -> Self {
        self.doc_len = doc_len;
        self.num_vars = num_vars;
        self
    }

    pub fn add_node(&mut self) -> usize {
        self.num_nodes += 1;
        self.num_nodes - 1
    }

    pub fn add_nodes(&mut self, n: usize) -> std::ops::Range<usize> {
        let start = self.num_nodes;
        self.num_nodes += n;
        start..self.num_nodes
    }

    pub fn add_edge(&mut self, from: usize, to: usize, kind: DagEdgeKind, weight: SemiringValue) {
        assert!(from < self.num_nodes && to < self.num_nodes);
        assert_eq!(weight.kind(), self.semiring, "edge weight of the wrong semiring");
        assert!(!weight.is_zero(), "DAG edges carry nonzero weights");
        self.edges.push(DagEdge { from, to, kind, weight });
    }

    /// Trims to the nodes on src→snk paths, renumbers, topologically sorts.
    pub fn finish(self, src: usize, snk: usize) -> Result<ProductDag> {
        let DagBuilder { semiring, num_nodes, edges, doc_len, num_vars } = self;
        // forward/backward reachability
        let mut fwd = vec![false; num_nodes];
        let mut bwd = vec![false; num_nodes];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        let mut radj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for e in &edges {
            adj[e.from].push(e.to);
            radj[e.to].push(e.from);
        }
        let mut stack = vec![src];
        fwd[src] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !fwd[u] {
                    fwd[u] = true;
                    stack.push(u);
                }
            }
        }
        let mut stack = vec![snk];
        bwd[snk] = true;
        while let Some(v) = stack.pop() {
            for &u in &radj[v] {
                if !bwd[u] {
                    bwd[u] = true;
                    stack.push(u);
                }
            }
        }
        let keep: Vec<bool> = (0..num_nodes).map(|v| fwd[v] && bwd[v]).collect();
        if !keep[src] || !keep[snk] || src == snk {
            // No src→snk path: the empty DAG.
            return Ok(ProductDag {
                semiring,
                num_nodes: 2,
                src: 0,
                snk: 1,
                edges: Vec::new(),
                out: vec![Vec::new(), Vec::new()],
                incoming: vec![Vec::new(), Vec::new()],
                topo: vec![0, 1],
                uniform_path_edges: None,
                doc_len,
                num_vars,
            });
        }
        let mut map = vec![usize::MAX; num_nodes];
        let mut count = 0;
        for v in 0..num_nodes {
            if keep[v] {
                map[v] = count;
                count += 1;
            }
        }
        let edges: Vec<DagEdge> = edges
            .into_iter()
            .filter(|e| keep[e.from] && keep[e.to])
            .map(|e| DagEdge { from: map[e.from], to: map[e.to], kind: e.kind, weight: e.weight })
            .collect();
        let src = map[src];
        let snk = map[snk];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); count];
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
            incoming[e.to].push(i);
        }
        // Kahn topological sort; leftovers mean a cycle.
        let mut indeg: Vec<usize> = incoming.iter().map(|v| v.len()).collect();
        let mut topo = Vec::with_capacity(count);
        let mut ready: Vec<usize> =
            (0..count).filter(|&v| indeg[v] == 0).collect();
        while let Some(v) = ready.pop() {
            topo.push(v);
            for &ei in &out[v] {
                let u = edges[ei].to;
                indeg[u] -= 1;
                if indeg[u] == 0 {
                    ready.push(u);
                }
            }
        }
        if topo.len() != count {
            return Err(Error::Structure("product graph contains a cycle".to_string()));
        }
        // Path-length uniformity: min and max edge count per node from src.
        let mut minlen = vec![usize::MAX; count];
        let mut maxlen = vec![0usize; count];
        minlen[src] = 0;
        for &v in &topo {
            if minlen[v] == usize::MAX {
                continue;
            }
            for &ei in &out[v] {
                let u = edges[ei].to;
                minlen[u] = minlen[u].min(minlen[v] + 1);
                maxlen[u] = maxlen[u].max(maxlen[v] + 1);
            }
        }
        let uniform_path_edges =
            if minlen[snk] != usize::MAX && minlen[snk] == maxlen[snk] {
                Some(minlen[snk])
            } else {
                None
            };
        Ok(ProductDag {
            semiring,
            num_nodes: count,
            src,
            snk,
            edges,
            out,
            incoming,
            topo,
            uniform_path_edges,
            doc_len,
            num_vars,
        })
    }
}

/// Builds the product DAG of a Boolean spanner, an optional regular weight
/// function, and a document.
///
/// With no weight function the DAG carries Boolean weight `1̄` on every edge
/// and its paths are exactly the (order-normalized) runs of the spanner on
/// the document. With a weight function, the weight automaton's variables
/// must be contained in the spanner's.
pub fn build_dag(
    spanner: &VsetAutomaton,
    weight: Option<&RegWeight>,
    doc: &Document,
) -> Result<ProductDag> {
    if spanner.semiring() != SemiringKind::Boolean {
        return Err(Error::Type("the spanner side of the product is Boolean".to_string()));
    }
    let kind = match weight {
        Some(w) => w.semiring(),
        None => SemiringKind::Boolean,
    };
    let joined = match weight {
        Some(w) => {
            if !w.vars().is_subset(spanner.vars()) {
                return Err(Error::Type(
                    "weight variables must be contained in the spanner's variables".to_string(),
                ));
            }
            join(w.automaton(), &spanner.reweight_as(kind))?
        }
        None => normalize_var_order(spanner)?,
    };
    let product = join(&joined, &doc_chain(doc, kind))?;

    // Unfold the automaton into the (state, last label) node space.
    let mut builder =
        DagBuilder::new(kind).with_meta(doc.len(), spanner.vars().len());
    let src = builder.add_node();
    let snk = builder.add_node();
    // node for (state, None) is entry[q]; (state, Some(label)) interned on demand
    let mut entry: HashMap<usize, usize> = HashMap::new();
    let mut by_label: HashMap<(usize, Label), usize> = HashMap::new();
    let mut all_nodes_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for (q, w) in product.initial_weights() {
        let n = *entry.entry(q).or_insert_with(|| builder.add_node());
        all_nodes_of.entry(q).or_default().push(n);
        builder.add_edge(src, n, DagEdgeKind::Initial, w.clone());
    }
    // Intern every (state, label) target node.
    for (_, l, q, _) in product.edges() {
        let key = (q, l.clone());
        if !by_label.contains_key(&key) {
            let n = builder.add_node();
            by_label.insert(key, n);
            all_nodes_of.entry(q).or_default().push(n);
        }
    }
    for (p, l, q, w) in product.edges() {
        let to = by_label[&(q, l.clone())];
        if let Some(froms) = all_nodes_of.get(&p) {
            for &f in froms.clone().iter() {
                builder.add_edge(f, to, DagEdgeKind::Step(l.clone()), w.clone());
            }
        }
    }
    for (q, w) in product.final_weights() {
        if let Some(froms) = all_nodes_of.get(&q) {
            for &f in froms {
                builder.add_edge(f, snk, DagEdgeKind::Final, w.clone());
            }
        }
    }
    let dag = builder.finish(src, snk)?;
    debug_assert!(
        !dag.has_paths()
            || dag.uniform_path_edges == Some(doc.len() + 2 * spanner.vars().len() + 2),
        "every src→snk path runs one initial edge, one edge per ref-word symbol, one final edge"
    );
    Ok(dag)
}

impl ProductDag {
    /// Exact number of src→snk paths.
    pub fn count_paths(&self) -> BigUint {
        if !self.has_paths() {
            return BigUint::zero();
        }
        let mut count: Vec<BigUint> = vec![BigUint::zero(); self.num_nodes];
        count[self.src] = BigUint::one();
        for &v in &self.topo {
            if count[v].is_zero() {
                continue;
            }
            let c = count[v].clone();
            for &ei in &self.out[v] {
                let u = self.edges[ei].to;
                count[u] += &c;
            }
        }
        count[self.snk].clone()
    }

    /// Number of paths from src to each node and from each node to snk.
    fn counts_forward_backward(&self) -> (Vec<BigUint>, Vec<BigUint>) {
        let mut fwd: Vec<BigUint> = vec![BigUint::zero(); self.num_nodes];
        fwd[self.src] = BigUint::one();
        for &v in &self.topo {
            let c = fwd[v].clone();
            if c.is_zero() {
                continue;
            }
            for &ei in &self.out[v] {
                let u = self.edges[ei].to;
                fwd[u] += &c;
            }
        }
        let mut bwd: Vec<BigUint> = vec![BigUint::zero(); self.num_nodes];
        bwd[self.snk] = BigUint::one();
        for &v in self.topo.iter().rev() {
            let c = bwd[v].clone();
            if c.is_zero() {
                continue;
            }
            for &ei in &self.incoming[v] {
                let u = self.edges[ei].from;
                bwd[u] += &c;
            }
        }
        (fwd, bwd)
    }

    fn finite_weight(w: &SemiringValue) -> BigRational {
        match w {
            SemiringValue::Num(q) | SemiringValue::Trop(q) => q.clone(),
            _ => unreachable!("checked by callers"),
        }
    }

    /// Minimum and maximum path length.
    ///
    /// Tropical: the length of a path is the sum of its edge weights.
    /// Numerical: the length is the product; the pass tracks both per-node
    /// extrema because negative factors swap minima and maxima.
    fn extremal_paths(&self) -> Result<(BigRational, BigRational)> {
        if self.semiring == SemiringKind::Boolean {
            return Err(Error::Type(
                "extremal path lengths need tropical or numerical weights".to_string(),
            ));
        }
        if !self.has_paths() {
            return Err(Error::EmptyRelation);
        }
        let mut lo: Vec<Option<BigRational>> = vec![None; self.num_nodes];
        let mut hi: Vec<Option<BigRational>> = vec![None; self.num_nodes];
        let neutral = match self.semiring {
            SemiringKind::Tropical => BigRational::zero(),
            _ => BigRational::one(),
        };
        lo[self.src] = Some(neutral.clone());
        hi[self.src] = Some(neutral);
        for &v in &self.topo {
            let (Some(vlo), Some(vhi)) = (lo[v].clone(), hi[v].clone()) else { continue };
            for &ei in &self.out[v] {
                let e = &self.edges[ei];
                let w = Self::finite_weight(&e.weight);
                let (a, b) = match self.semiring {
                    SemiringKind::Tropical => (&vlo + &w, &vhi + &w),
                    _ => (&vlo * &w, &vhi * &w),
                };
                let (elo, ehi) = if a <= b { (a, b) } else { (b, a) };
                let u = e.to;
                lo[u] = Some(match lo[u].take() {
                    None => elo,
                    Some(cur) => cur.min(elo),
                });
                hi[u] = Some(match hi[u].take() {
                    None => ehi,
                    Some(cur) => cur.max(ehi),
                });
            }
        }
        match (lo[self.snk].clone(), hi[self.snk].clone()) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::EmptyRelation),
        }
    }

    pub fn min_path(&self) -> Result<BigRational> {
        Ok(self.extremal_paths()?.0)
    }

    pub fn max_path(&self) -> Result<BigRational> {
        Ok(self.extremal_paths()?.1)
    }

    /// Sum over src→snk paths of the product of edge weights, by a single
    /// topological pass. Numerical weights only.
    pub fn sum_paths_numerical(&self) -> Result<BigRational> {
        if self.semiring != SemiringKind::Numerical {
            return Err(Error::Type("path-product sums need numerical weights".to_string()));
        }
        let mut acc: Vec<BigRational> = vec![BigRational::zero(); self.num_nodes];
        acc[self.src] = BigRational::one();
        for &v in &self.topo {
            if acc[v].is_zero() && v != self.src {
                continue;
            }
            let c = acc[v].clone();
            for &ei in &self.out[v] {
                let e = &self.edges[ei];
                acc[e.to] += &c * Self::finite_weight(&e.weight);
            }
        }
        Ok(acc[self.snk].clone())
    }

    /// The same sum in the adjacency-matrix power form `I × M^L × Fᵀ`, where
    /// `L` is the uniform number of edges per path. Intended for small DAGs
    /// as an independent cross-check of [`Self::sum_paths_numerical`].
    pub fn sum_paths_numerical_matrix(&self) -> Result<BigRational> {
        if self.semiring != SemiringKind::Numerical {
            return Err(Error::Type("path-product sums need numerical weights".to_string()));
        }
        if !self.has_paths() {
            return Ok(BigRational::zero());
        }
        let len = self.uniform_path_edges.ok_or_else(|| {
            Error::Structure("matrix-power sum needs uniform path lengths".to_string())
        })?;
        let n = self.num_nodes;
        let mut m = vec![vec![BigRational::zero(); n]; n];
        for e in &self.edges {
            m[e.from][e.to] += Self::finite_weight(&e.weight);
        }
        // M^len by repeated squaring
        let mut result: Vec<Vec<BigRational>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
            .collect();
        let mut base = m;
        let mut exp = len;
        let matmul = |a: &Vec<Vec<BigRational>>, b: &Vec<Vec<BigRational>>| {
            let mut c = vec![vec![BigRational::zero(); n]; n];
            for i in 0..n {
                for k in 0..n {
                    if a[i][k].is_zero() {
                        continue;
                    }
                    for (j, bkj) in b[k].iter().enumerate() {
                        if !bkj.is_zero() {
                            c[i][j] += &a[i][k] * bkj;
                        }
                    }
                }
            }
            c
        };
        while exp > 0 {
            if exp & 1 == 1 {
                result = matmul(&result, &base);
            }
            exp >>= 1;
            if exp > 0 {
                base = matmul(&base, &base);
            }
        }
        Ok(result[self.src][self.snk].clone())
    }

    /// Sum over src→snk paths of the sum of edge weights, via
    /// `Σ_p ℓ(p) = Σ_e ℓ(e)·c(e)` where `c(e)` is the number of paths
    /// through `e`. Tropical weights only; all edge weights are finite by
    /// construction.
    pub fn sum_paths_tropical(&self) -> Result<BigRational> {
        if self.semiring != SemiringKind::Tropical {
            return Err(Error::Type("edge-count sums need tropical weights".to_string()));
        }
        let (fwd, bwd) = self.counts_forward_backward();
        let mut total = BigRational::zero();
        for e in &self.edges {
            let uses = &fwd[e.from] * &bwd[e.to];
            if uses.is_zero() {
                continue;
            }
            let uses = BigRational::from_integer(uses.into());
            total += Self::finite_weight(&e.weight) * uses;
        }
        Ok(total)
    }
}

/// Draws uniform random src→snk paths from a DAG.
///
/// Suffix path counts are computed once; a draw walks from the source,
/// choosing each out-edge with probability proportional to the number of
/// paths through it.
pub struct PathSampler<'a> {
    dag: &'a ProductDag,
    suffix: Vec<BigUint>,
}

impl<'a> PathSampler<'a> {
    pub fn new(dag: &'a ProductDag) -> Result<Self> {
        if !dag.has_paths() {
            return Err(Error::EmptyRelation);
        }
        let (_, suffix) = dag.counts_forward_backward();
        Ok(PathSampler { dag, suffix })
    }

    /// One exact-uniform path, as edge indices.
    pub fn sample_with(&self, rng: &mut impl rand::Rng) -> Vec<usize> {
        let mut path = Vec::new();
        let mut v = self.dag.src;
        while v != self.dag.snk {
            let total = &self.suffix[v];
            let mut pick = rng.gen_biguint_below(total);
            let mut chosen = None;
            for &ei in &self.dag.out[v] {
                let via = &self.suffix[self.dag.edges[ei].to];
                if &pick < via {
                    chosen = Some(ei);
                    break;
                }
                pick -= via;
            }
            let ei = chosen.expect("suffix counts cover all out-edges");
            path.push(ei);
            v = self.dag.edges[ei].to;
        }
        path
    }

    /// The tuple encoded by a sampled path.
    pub fn decode_tuple(&self, path: &[usize]) -> Result<SpanTuple> {
        let mut symbols = Vec::new();
        for &ei in path {
            if let DagEdgeKind::Step(l) = &self.dag.edges[ei].kind {
                match l {
                    Label::Sym(c) => symbols.push(RefSym::Sym(*c)),
                    Label::Open(v) => {
                        symbols.push(RefSym::Op(crate::spans::VarOp::open(v.clone())))
                    }
                    Label::Close(v) => {
                        symbols.push(RefSym::Op(crate::spans::VarOp::close(v.clone())))
                    }
                    Label::Eps => {
                        return Err(Error::Structure(
                            "epsilon label on a product edge".to_string(),
                        ))
                    }
                }
            }
        }
        crate::spans::tup_of_refword(&RefWord::new(symbols))
    }

    /// One uniform tuple draw.
    pub fn sample_tuple(&self, rng: &mut impl rand::Rng) -> Result<SpanTuple> {
        let path = self.sample_with(rng);
        self.decode_tuple(&path)
    }
}

/// One deterministic uniform path draw from a fresh seeded generator.
pub fn sample_path(dag: &ProductDag, seed: u64) -> Result<Vec<usize>> {
    let sampler = PathSampler::new(dag)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok(sampler.sample_with(&mut rng))
}

/// Debug dump of the DAG, edge schema mirroring the automaton JSON.
pub fn dag_to_json(dag: &ProductDag) -> serde_json::Value {
    let name = |v: usize| {
        if v == dag.src {
            "src".to_string()
        } else if v == dag.snk {
            "snk".to_string()
        } else {
            format!("n{v}")
        }
    };
    let edges: Vec<serde_json::Value> = dag
        .edges
        .iter()
        .map(|e| {
            let label = match &e.kind {
                DagEdgeKind::Initial => serde_json::json!({"kind": "initial"}),
                DagEdgeKind::Final => serde_json::json!({"kind": "final"}),
                DagEdgeKind::Step(Label::Sym(c)) => {
                    serde_json::json!({"kind": "sym", "value": c.to_string()})
                }
                DagEdgeKind::Step(Label::Open(v)) => {
                    serde_json::json!({"kind": "open", "value": v.name()})
                }
                DagEdgeKind::Step(Label::Close(v)) => {
                    serde_json::json!({"kind": "close", "value": v.name()})
                }
                DagEdgeKind::Step(Label::Eps) => serde_json::json!({"kind": "eps"}),
            };
            serde_json::json!({
                "from": name(e.from),
                "label": label,
                "to": name(e.to),
                "weight": e.weight.to_string(),
            })
        })
        .collect();
    serde_json::json!({
        "semiring": dag.semiring.name(),
        "nodes": (0..dag.num_nodes).map(name).collect::<Vec<_>>(),
        "doc_len": dag.doc_len,
        "vars": dag.num_vars,
        "edges": edges,
    })
}
