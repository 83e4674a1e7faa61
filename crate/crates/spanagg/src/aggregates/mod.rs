//! The user-facing aggregate evaluators.
//!
//! Every evaluation algorithm is a strategy behind the [`EvalStrategy`]
//! trait, registered by name in a [`StrategyRegistry`]. The engine classifies
//! the request — spanner class, weight-function class, aggregate — and picks
//! the first applicable strategy; the registry order encodes the
//! tractability matrix in [`table`], with the guarded materialization
//! fallback last. A strategy can also be forced by tag, e.g. from the
//! command line.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::automata::{materialize, project, remove_epsilon, VsetAutomaton};
use crate::dag::{build_dag, PathSampler};
use crate::error::{Error, Result};
use crate::semiring::SemiringKind;
use crate::spans::Document;
use crate::weights::{weight_of, RegWeight, WeightFunction};

pub mod multiset;
pub mod table;

pub use multiset::{multiset_sigma, weight_multiset, WeightMultiset};
pub use table::{in_fp, AggTag, SpannerClass, WeightClass};

/// Which aggregate to compute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AggregateKind {
    Count,
    Min,
    Max,
    Sum,
    Avg,
    Quantile(BigRational),
    CountBelow { threshold: BigRational, strict: bool },
}

impl AggregateKind {
    pub fn tag(&self) -> AggTag {
        match self {
            AggregateKind::Count => AggTag::Count,
            AggregateKind::Min => AggTag::Min,
            AggregateKind::Max => AggTag::Max,
            AggregateKind::Sum => AggTag::Sum,
            AggregateKind::Avg => AggTag::Avg,
            AggregateKind::Quantile(_) => AggTag::Quantile,
            AggregateKind::CountBelow { .. } => AggTag::CountBelow,
        }
    }

    pub fn needs_weight(&self) -> bool {
        !matches!(self, AggregateKind::Count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Approx,
}

/// One aggregate evaluation request.
#[derive(Clone, Debug)]
pub struct AggregateRequest {
    pub kind: AggregateKind,
    pub mode: Mode,
    /// Maximum number of tuples any materializing step may produce.
    pub guard: u64,
    /// Positional tolerance for approximate quantiles.
    pub delta: Option<BigRational>,
    /// Seed for the sampler; replays are deterministic.
    pub seed: u64,
}

pub const DEFAULT_GUARD: u64 = 1_000_000;

impl AggregateRequest {
    pub fn exact(kind: AggregateKind) -> Self {
        AggregateRequest { kind, mode: Mode::Exact, guard: DEFAULT_GUARD, delta: None, seed: 0 }
    }

    fn validate(&self) -> Result<()> {
        if self.guard == 0 {
            return Err(Error::Range("the guard must be at least 1".to_string()));
        }
        if let AggregateKind::Quantile(q) = &self.kind {
            if q.is_negative() || q > &BigRational::one() {
                return Err(Error::Range(format!("quantile position {q} is outside [0, 1]")));
            }
        }
        if self.mode == Mode::Approx {
            if let Some(delta) = &self.delta {
                if !delta.is_positive() || delta > &BigRational::one() {
                    return Err(Error::Range(format!("delta {delta} is outside (0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// The result value: a big natural for counting aggregates, an exact
/// rational otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AggregateValue {
    Count(BigUint),
    Rational(BigRational),
}

impl std::fmt::Display for AggregateValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AggregateValue::Count(n) => write!(f, "{n}"),
            AggregateValue::Rational(q) => f.write_str(&crate::semiring::format_rational(q)),
        }
    }
}

/// A prepared evaluation instance: a functional epsilon-free Boolean spanner,
/// a document, and an optional weight function whose variables the spanner
/// binds.
#[derive(Clone, Debug)]
pub struct Instance {
    spanner: VsetAutomaton,
    doc: Document,
    weight: Option<WeightFunction>,
    unambiguous: bool,
}

impl Instance {
    pub fn new(
        spanner: VsetAutomaton,
        doc: Document,
        weight: Option<WeightFunction>,
    ) -> Result<Self> {
        if spanner.semiring() != SemiringKind::Boolean {
            return Err(Error::Type("spanners are Boolean vset-automata".to_string()));
        }
        let spanner = remove_epsilon(&spanner)?;
        if !spanner.is_functional() {
            return Err(Error::Functionality(
                "the engine only evaluates functional spanners".to_string(),
            ));
        }
        if let Some(w) = &weight {
            if let Some(required) = w.required_vars() {
                if !required.is_subset(spanner.vars()) {
                    let missing: BTreeSet<_> =
                        required.difference(spanner.vars()).cloned().collect();
                    return Err(Error::Type(format!(
                        "weight variables {missing:?} are not bound by the spanner"
                    )));
                }
            }
        }
        let unambiguous = spanner.is_unambiguous();
        Ok(Instance { spanner, doc, weight, unambiguous })
    }

    pub fn spanner(&self) -> &VsetAutomaton {
        &self.spanner
    }

    pub fn doc(&self) -> &Document {
        &self.doc
    }

    pub fn weight(&self) -> Option<&WeightFunction> {
        self.weight.as_ref()
    }

    pub fn is_unambiguous(&self) -> bool {
        self.unambiguous
    }

    pub fn spanner_class(&self) -> SpannerClass {
        if self.unambiguous {
            SpannerClass::Unambiguous
        } else {
            SpannerClass::Functional
        }
    }

    pub fn weight_class(&self) -> Option<WeightClass> {
        self.weight.as_ref().map(|w| match w {
            WeightFunction::CWidth(_) => WeightClass::CWidth,
            WeightFunction::Reg(r) => match r.semiring() {
                SemiringKind::Tropical => {
                    WeightClass::RegTropical { unambiguous: r.is_unambiguous() }
                }
                _ => WeightClass::RegNumerical { unambiguous: r.is_unambiguous() },
            },
            WeightFunction::Callback(_) => WeightClass::Callback,
        })
    }

    fn reg_weight(&self) -> Option<&RegWeight> {
        match &self.weight {
            Some(WeightFunction::Reg(r)) => Some(r),
            _ => None,
        }
    }

    fn cwidth(&self) -> Option<&crate::weights::CWidthRelation> {
        match &self.weight {
            Some(WeightFunction::CWidth(r)) => Some(r),
            _ => None,
        }
    }
}

/// Counters reported alongside a result.
#[derive(Clone, Debug, Default)]
pub struct EvalStats {
    /// How many times a relation (or projection) was materialized.
    pub materialize_calls: u64,
    /// Sample count, for the randomized quantile approximation.
    pub samples: Option<u64>,
}

/// The classification a strategy is selected on.
#[derive(Clone, Copy, Debug)]
pub struct PlanContext {
    pub aggregate: AggTag,
    pub mode: Mode,
    pub spanner_class: SpannerClass,
    pub weight_class: Option<WeightClass>,
}

/// The dispatcher's decision: which algorithm runs and which cell of the
/// tractability matrix justified it.
#[derive(Clone, Debug)]
pub struct DispatchPlan {
    pub algorithm: &'static str,
    pub aggregate: AggTag,
    pub spanner_class: SpannerClass,
    pub weight_class: Option<WeightClass>,
    pub polynomial: bool,
}

/// One evaluation algorithm.
pub trait EvalStrategy: Send + Sync {
    /// Stable name used in result records and for forced selection.
    fn tag(&self) -> &'static str;
    /// Whether the algorithm runs in polynomial time.
    fn polynomial(&self) -> bool;
    /// Whether the result is exact (false for the sampling approximation).
    fn exact(&self) -> bool {
        true
    }
    fn applies(&self, cx: &PlanContext) -> bool;
    fn run(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        stats: &mut EvalStats,
    ) -> Result<AggregateValue>;
}

// ---------------------------------------------------------------------------
// Strategies

/// Count by path counting on the product DAG: for an unambiguous spanner,
/// paths are in bijection with tuples.
struct DagPathCount;

impl EvalStrategy for DagPathCount {
    fn tag(&self) -> &'static str {
        "dag-path-count"
    }
    fn polynomial(&self) -> bool {
        true
    }
    fn applies(&self, cx: &PlanContext) -> bool {
        cx.mode == Mode::Exact
            && cx.aggregate == AggTag::Count
            && cx.spanner_class == SpannerClass::Unambiguous
    }
    fn run(
        &self,
        inst: &Instance,
        _req: &AggregateRequest,
        _stats: &mut EvalStats,
    ) -> Result<AggregateValue> {
        let dag = build_dag(&inst.spanner, None, &inst.doc)?;
        Ok(AggregateValue::Count(dag.count_paths()))
    }
}

/// Min/Max with a constant-width weight: project the spanner onto the weight
/// variables, materialize the polynomial-size projection, scan the weights.
struct CWidthExtremum;

impl EvalStrategy for CWidthExtremum {
    fn tag(&self) -> &'static str {
        "cwidth-projection"
    }
    fn polynomial(&self) -> bool {
        true
    }
    fn applies(&self, cx: &PlanContext) -> bool {
        cx.mode == Mode::Exact
            && matches!(cx.aggregate, AggTag::Min | AggTag::Max)
            && cx.weight_class == Some(WeightClass::CWidth)
    }
    fn run(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        stats: &mut EvalStats,
    ) -> Result<AggregateValue> {
        let rel = inst.cwidth().expect("cwidth weight");
        let projection = project(&inst.spanner, &rel.vars())?;
        stats.materialize_calls += 1;
        let support = materialize(&projection, &inst.doc, req.guard)?;
        let mut best: Option<BigRational> = None;
        for t in support.rows.keys() {
            let w = rel.weight_of_tuple(&inst.doc, t)?;
            best = Some(match (best, &req.kind) {
                (None, _) => w,
                (Some(b), AggregateKind::Min) => b.min(w),
                (Some(b), AggregateKind::Max) => b.max(w),
                _ => unreachable!("applies() checked the aggregate"),
            });
        }
        best.map(AggregateValue::Rational).ok_or(Error::EmptyRelation)
    }
}

/// Min/Max as extremal path length in the product DAG.
///
/// When the weight automaton is unambiguous, every path for a tuple has the
/// tuple's weight, so run counts are compared to detect tuples outside the
/// weight automaton's support: over the tropical semiring those are domain
/// errors, over the numerical semiring they weigh `0` and fold into the
/// extremum. An ambiguous tropical weight automaton (minimum only) is used
/// as-is; it must cover the whole relation.
struct DagExtremalPath {
    maximize: bool,
}

impl EvalStrategy for DagExtremalPath {
    fn tag(&self) -> &'static str {
        if self.maximize {
            "dag-max-path"
        } else {
            "dag-min-path"
        }
    }
    fn polynomial(&self) -> bool {
        true
    }
    fn applies(&self, cx: &PlanContext) -> bool {
        if cx.mode != Mode::Exact {
            return false;
        }
        let agg_ok = cx.aggregate == if self.maximize { AggTag::Max } else { AggTag::Min };
        let weight_ok = match cx.weight_class {
            Some(WeightClass::RegTropical { unambiguous }) => !self.maximize || unambiguous,
            Some(WeightClass::RegNumerical { unambiguous }) => unambiguous,
            _ => false,
        };
        agg_ok && weight_ok
    }
    fn run(
        &self,
        inst: &Instance,
        _req: &AggregateRequest,
        _stats: &mut EvalStats,
    ) -> Result<AggregateValue> {
        let w = inst.reg_weight().expect("regular weight");
        let base = build_dag(&inst.spanner, None, &inst.doc)?;
        let runs = base.count_paths();
        if runs.is_zero() {
            return Err(Error::EmptyRelation);
        }
        let dag = build_dag(&inst.spanner, Some(w), &inst.doc)?;
        let covered = dag.count_paths();
        let full_coverage = covered == runs;
        match w.semiring() {
            SemiringKind::Tropical => {
                if w.is_unambiguous() && !full_coverage {
                    return Err(Error::Domain(
                        "some extracted tuple has no run in the tropical weight automaton"
                            .to_string(),
                    ));
                }
                if !dag.has_paths() {
                    return Err(Error::Domain(
                        "no extracted tuple has a run in the tropical weight automaton"
                            .to_string(),
                    ));
                }
                let v = if self.maximize { dag.max_path()? } else { dag.min_path()? };
                Ok(AggregateValue::Rational(v))
            }
            _ => {
                // numerical: tuples without a run weigh 0
                if !dag.has_paths() {
                    return Ok(AggregateValue::Rational(BigRational::zero()));
                }
                let mut v = if self.maximize { dag.max_path()? } else { dag.min_path()? };
                if !full_coverage {
                    let zero = BigRational::zero();
                    v = if self.maximize { v.max(zero) } else { v.min(zero) };
                }
                Ok(AggregateValue::Rational(v))
            }
        }
    }
}

/// Sum/Average/Quantile/threshold-Count from the exact weight multiset,
/// polynomial for unambiguous spanners with constant-width weights.
struct MultisetCWidth;

impl EvalStrategy for MultisetCWidth {
    fn tag(&self) -> &'static str {
        "multiset-cwidth"
    }
    fn polynomial(&self) -> bool {
        true
    }
    fn applies(&self, cx: &PlanContext) -> bool {
        cx.mode == Mode::Exact
            && matches!(
                cx.aggregate,
                AggTag::Sum | AggTag::Avg | AggTag::Quantile | AggTag::CountBelow
            )
            && cx.spanner_class == SpannerClass::Unambiguous
            && cx.weight_class == Some(WeightClass::CWidth)
    }
    fn run(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        stats: &mut EvalStats,
    ) -> Result<AggregateValue> {
        let weight = inst.weight.as_ref().expect("weighted aggregate");
        let wm = weight_multiset(&inst.spanner, inst.unambiguous, &inst.doc, weight, req.guard, stats)?;
        aggregate_of_multiset(&wm, &req.kind)
    }
}

/// Sum (and Average) as the sum over all source-to-sink path products.
struct SumPathsNumerical;

impl EvalStrategy for SumPathsNumerical {
    fn tag(&self) -> &'static str {
        "sum-paths-numerical"
    }
    fn polynomial(&self) -> bool {
        true
    }
    fn applies(&self, cx: &PlanContext) -> bool {
        cx.mode == Mode::Exact
            && matches!(cx.aggregate, AggTag::Sum | AggTag::Avg)
            && cx.spanner_class == SpannerClass::Unambiguous
            && matches!(cx.weight_class, Some(WeightClass::RegNumerical { .. }))
    }
    fn run(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        _stats: &mut EvalStats,
    ) -> Result<AggregateValue> {
        let w = inst.reg_weight().expect("regular weight");
        let dag = build_dag(&inst.spanner, Some(w), &inst.doc)?;
        let sum = dag.sum_paths_numerical()?;
        match req.kind {
            AggregateKind::Sum => Ok(AggregateValue::Rational(sum)),
            AggregateKind::Avg => {
                let count = build_dag(&inst.spanner, None, &inst.doc)?.count_paths();
                if count.is_zero() {
                    return Err(Error::EmptyRelation);
                }
                Ok(AggregateValue::Rational(
                    sum / BigRational::from_integer(BigInt::from(count)),
                ))
            }
            _ => unreachable!("applies() checked the aggregate"),
        }
    }
}

/// Sum (and Average) over an unambiguous tropical weight automaton, via the
/// edge-use identity `Σ_p ℓ(p) = Σ_e ℓ(e)·c(e)`.
struct SumPathsTropical;

impl EvalStrategy for SumPathsTropical {
    fn tag(&self) -> &'static str {
        "sum-paths-tropical"
    }
    fn polynomial(&self) -> bool {
        true
    }
    fn applies(&self, cx: &PlanContext) -> bool {
        cx.mode == Mode::Exact
            && matches!(cx.aggregate, AggTag::Sum | AggTag::Avg)
            && cx.spanner_class == SpannerClass::Unambiguous
            && cx.weight_class == Some(WeightClass::RegTropical { unambiguous: true })
    }
    fn run(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        _stats: &mut EvalStats,
    ) -> Result<AggregateValue> {
        let w = inst.reg_weight().expect("regular weight");
        let count = build_dag(&inst.spanner, None, &inst.doc)?.count_paths();
        let dag = build_dag(&inst.spanner, Some(w), &inst.doc)?;
        if dag.count_paths() != count {
            return Err(Error::Domain(
                "some extracted tuple has no run in the tropical weight automaton".to_string(),
            ));
        }
        let sum = dag.sum_paths_tropical()?;
        match req.kind {
            AggregateKind::Sum => Ok(AggregateValue::Rational(sum)),
            AggregateKind::Avg => {
                if count.is_zero() {
                    return Err(Error::EmptyRelation);
                }
                Ok(AggregateValue::Rational(
                    sum / BigRational::from_integer(BigInt::from(count)),
                ))
            }
            _ => unreachable!("applies() checked the aggregate"),
        }
    }
}

/// Positional quantile approximation by uniform path sampling.
struct SampleQuantile;

/// `⌈ln(32) / (2δ²)⌉` samples.
pub fn approx_sample_size(delta: &BigRational) -> u64 {
    let d = delta.numer().to_f64().unwrap_or(f64::NAN)
        / delta.denom().to_f64().unwrap_or(f64::NAN);
    (32f64.ln() / (2.0 * d * d)).ceil() as u64
}

impl EvalStrategy for SampleQuantile {
    fn tag(&self) -> &'static str {
        "positional-sample-quantile"
    }
    fn polynomial(&self) -> bool {
        true
    }
    fn exact(&self) -> bool {
        false
    }
    fn applies(&self, cx: &PlanContext) -> bool {
        cx.mode == Mode::Approx
            && cx.aggregate == AggTag::Quantile
            && cx.spanner_class == SpannerClass::Unambiguous
    }
    fn run(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        stats: &mut EvalStats,
    ) -> Result<AggregateValue> {
        let q = match &req.kind {
            AggregateKind::Quantile(q) => q,
            _ => unreachable!("applies() checked the aggregate"),
        };
        let delta = req
            .delta
            .as_ref()
            .ok_or_else(|| Error::Range("approximate quantiles need a delta".to_string()))?;
        let weight = inst.weight.as_ref().expect("weighted aggregate");
        let dag = build_dag(&inst.spanner, None, &inst.doc)?;
        let sampler = PathSampler::new(&dag)?;
        let samples = approx_sample_size(delta);
        let mut rng = ChaCha12Rng::seed_from_u64(req.seed);
        let mut sample = WeightMultiset::new();
        for _ in 0..samples {
            let t = sampler.sample_tuple(&mut rng)?;
            sample.insert(weight_of(weight, &inst.doc, &t)?, BigUint::one());
        }
        stats.samples = Some(samples);
        Ok(AggregateValue::Rational(sample.quantile(q)?))
    }
}

/// Guarded materialization: the exact fallback for every cell without a
/// polynomial algorithm.
struct FallbackMaterialize;

impl EvalStrategy for FallbackMaterialize {
    fn tag(&self) -> &'static str {
        "fallback-materialize"
    }
    fn polynomial(&self) -> bool {
        false
    }
    fn applies(&self, cx: &PlanContext) -> bool {
        cx.mode == Mode::Exact
    }
    fn run(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        stats: &mut EvalStats,
    ) -> Result<AggregateValue> {
        stats.materialize_calls += 1;
        let rel = materialize(&inst.spanner, &inst.doc, req.guard)?;
        if let AggregateKind::Count = req.kind {
            return Ok(AggregateValue::Count(BigUint::from(rel.rows.len())));
        }
        let weight = inst.weight.as_ref().expect("weighted aggregate");
        let mut wm = WeightMultiset::new();
        for t in rel.rows.keys() {
            wm.insert(weight_of(weight, &inst.doc, t)?, BigUint::one());
        }
        aggregate_of_multiset(&wm, &req.kind)
    }
}

fn aggregate_of_multiset(wm: &WeightMultiset, kind: &AggregateKind) -> Result<AggregateValue> {
    Ok(match kind {
        AggregateKind::Count => AggregateValue::Count(wm.total()),
        AggregateKind::Min => AggregateValue::Rational(wm.min()?),
        AggregateKind::Max => AggregateValue::Rational(wm.max()?),
        AggregateKind::Sum => AggregateValue::Rational(wm.sum()),
        AggregateKind::Avg => AggregateValue::Rational(wm.average()?),
        AggregateKind::Quantile(q) => AggregateValue::Rational(wm.quantile(q)?),
        AggregateKind::CountBelow { threshold, strict } => {
            AggregateValue::Count(wm.count_below(threshold, *strict))
        }
    })
}

// ---------------------------------------------------------------------------
// Registry and engine

/// An ordered collection of strategies; the first applicable one wins.
pub struct StrategyRegistry {
    strategies: Vec<Box<dyn EvalStrategy>>,
}

impl StrategyRegistry {
    /// The standard registry: every polynomial algorithm, in tractability
    /// order, with the guarded fallback last.
    pub fn standard() -> Self {
        StrategyRegistry {
            strategies: vec![
                Box::new(DagPathCount),
                Box::new(CWidthExtremum),
                Box::new(DagExtremalPath { maximize: false }),
                Box::new(DagExtremalPath { maximize: true }),
                Box::new(MultisetCWidth),
                Box::new(SumPathsNumerical),
                Box::new(SumPathsTropical),
                Box::new(SampleQuantile),
                Box::new(FallbackMaterialize),
            ],
        }
    }

    pub fn tags(&self) -> Vec<&'static str> {
        self.strategies.iter().map(|s| s.tag()).collect()
    }

    pub fn by_tag(&self, tag: &str) -> Option<&dyn EvalStrategy> {
        self.strategies.iter().find(|s| s.tag() == tag).map(|b| b.as_ref())
    }

    pub fn select(&self, cx: &PlanContext) -> Result<&dyn EvalStrategy> {
        self.strategies
            .iter()
            .find(|s| s.applies(cx))
            .map(|b| b.as_ref())
            .ok_or_else(|| match cx.mode {
                Mode::Approx => Error::Unsupported(
                    "no approximation scheme in scope for this request (approximate \
                     evaluation covers quantiles over unambiguous spanners)"
                        .to_string(),
                ),
                Mode::Exact => Error::Unsupported("no strategy applies".to_string()),
            })
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        StrategyRegistry::standard()
    }
}

/// A finished evaluation with its dispatch metadata.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: AggregateValue,
    pub plan: DispatchPlan,
    pub exact: bool,
    pub samples: Option<u64>,
    pub delta: Option<BigRational>,
    pub stats: EvalStats,
}

/// The aggregate evaluation engine.
pub struct Engine {
    registry: StrategyRegistry,
}

impl Engine {
    pub fn new() -> Self {
        Engine { registry: StrategyRegistry::standard() }
    }

    pub fn with_registry(registry: StrategyRegistry) -> Self {
        Engine { registry }
    }

    pub fn registry(&self) -> &StrategyRegistry {
        &self.registry
    }

    fn context(&self, inst: &Instance, req: &AggregateRequest) -> Result<PlanContext> {
        req.validate()?;
        if req.kind.needs_weight() && inst.weight.is_none() {
            return Err(Error::Type(format!(
                "{:?} needs a weight function",
                req.kind.tag()
            )));
        }
        Ok(PlanContext {
            aggregate: req.kind.tag(),
            mode: req.mode,
            spanner_class: inst.spanner_class(),
            weight_class: inst.weight_class(),
        })
    }

    /// The dispatch decision for a request, without running it.
    pub fn plan(&self, inst: &Instance, req: &AggregateRequest) -> Result<DispatchPlan> {
        let cx = self.context(inst, req)?;
        let strategy = self.registry.select(&cx)?;
        Ok(DispatchPlan {
            algorithm: strategy.tag(),
            aggregate: cx.aggregate,
            spanner_class: cx.spanner_class,
            weight_class: cx.weight_class,
            polynomial: strategy.polynomial(),
        })
    }

    pub fn evaluate(&self, inst: &Instance, req: &AggregateRequest) -> Result<Evaluation> {
        self.evaluate_inner(inst, req, None)
    }

    /// Evaluates with a specific strategy, bypassing dispatch.
    pub fn evaluate_forced(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        tag: &str,
    ) -> Result<Evaluation> {
        self.evaluate_inner(inst, req, Some(tag))
    }

    fn evaluate_inner(
        &self,
        inst: &Instance,
        req: &AggregateRequest,
        forced: Option<&str>,
    ) -> Result<Evaluation> {
        let cx = self.context(inst, req)?;
        let strategy = match forced {
            None => self.registry.select(&cx)?,
            Some(tag) => {
                let s = self
                    .registry
                    .by_tag(tag)
                    .ok_or_else(|| Error::Unsupported(format!("unknown strategy {tag:?}")))?;
                if !s.applies(&cx) {
                    return Err(Error::Unsupported(format!(
                        "strategy {tag:?} does not apply to this request"
                    )));
                }
                s
            }
        };
        let mut stats = EvalStats::default();
        let value = strategy.run(inst, req, &mut stats)?;
        let samples = stats.samples;
        Ok(Evaluation {
            value,
            plan: DispatchPlan {
                algorithm: strategy.tag(),
                aggregate: cx.aggregate,
                spanner_class: cx.spanner_class,
                weight_class: cx.weight_class,
                polynomial: strategy.polynomial(),
            },
            exact: strategy.exact(),
            samples,
            delta: if req.mode == Mode::Approx { req.delta.clone() } else { None },
            stats,
        })
    }
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}
