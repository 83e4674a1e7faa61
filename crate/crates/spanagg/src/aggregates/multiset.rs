//! The multiset of projected tuples and the weight multiset behind
//! Sum/Average/Quantile on the polynomial path.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::automata::{join, materialize, project, refword_chain, VsetAutomaton};
use crate::dag::build_dag;
use crate::error::{Error, Result};
use crate::semiring::SemiringKind;
use crate::spans::{canonical_refword, Document, SpanTuple, Var};
use crate::weights::{weight_of, WeightFunction};

use super::EvalStats;

/// Exact rational values with big-integer multiplicities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightMultiset {
    entries: BTreeMap<BigRational, BigUint>,
}

impl WeightMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, value: BigRational, multiplicity: BigUint) {
        if multiplicity.is_zero() {
            return;
        }
        *self.entries.entry(value).or_default() += multiplicity;
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BigRational, &BigUint)> {
        self.entries.iter()
    }

    pub fn total(&self) -> BigUint {
        self.entries.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn min(&self) -> Result<BigRational> {
        self.entries.keys().next().cloned().ok_or(Error::EmptyRelation)
    }

    pub fn max(&self) -> Result<BigRational> {
        self.entries.keys().next_back().cloned().ok_or(Error::EmptyRelation)
    }

    pub fn sum(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for (v, m) in &self.entries {
            acc += v * BigRational::from_integer(BigInt::from(m.clone()));
        }
        acc
    }

    pub fn average(&self) -> Result<BigRational> {
        let total = self.total();
        if total.is_zero() {
            return Err(Error::EmptyRelation);
        }
        Ok(self.sum() / BigRational::from_integer(BigInt::from(total)))
    }

    /// The least value `r` in the multiset with
    /// `#{elements ≤ r} / total ≥ q`.
    pub fn quantile(&self, q: &BigRational) -> Result<BigRational> {
        let total = self.total();
        if total.is_zero() {
            return Err(Error::EmptyRelation);
        }
        let total = BigInt::from(total);
        let mut cumulative = BigInt::zero();
        for (value, mult) in &self.entries {
            cumulative += BigInt::from(mult.clone());
            // cumulative / total >= q  <=>  cumulative * q.denom >= q.numer * total
            if &cumulative * q.denom() >= q.numer() * &total {
                return Ok(value.clone());
            }
        }
        // q <= 1 guarantees the loop returns before running out.
        Ok(self.entries.keys().next_back().expect("nonempty").clone())
    }

    /// Number of elements `< k` (strict) or `≤ k`.
    pub fn count_below(&self, k: &BigRational, strict: bool) -> BigUint {
        let mut acc = BigUint::zero();
        for (value, mult) in &self.entries {
            let keep = if strict { value < k } else { value <= k };
            if keep {
                acc += mult;
            } else {
                break;
            }
        }
        acc
    }
}

/// The multiset of `X`-projections of the extracted tuples, with
/// multiplicities in binary.
///
/// For an unambiguous spanner this follows the polynomial scheme: materialize
/// the projection (its support is polynomial for bounded `|X|`), then for
/// each projected tuple count the full tuples extending it by joining the
/// spanner with the straight-line automaton of the projected tuple's
/// canonical ref-word and counting paths in the resulting product DAG. For
/// ambiguous spanners the full relation is materialized behind the guard.
pub fn multiset_sigma(
    spanner: &VsetAutomaton,
    unambiguous: bool,
    doc: &Document,
    x: &BTreeSet<Var>,
    guard: u64,
    stats: &mut EvalStats,
) -> Result<BTreeMap<SpanTuple, BigUint>> {
    if !x.is_subset(spanner.vars()) {
        return Err(Error::Type(
            "projection variables must be a subset of the spanner's variables".to_string(),
        ));
    }
    let mut out: BTreeMap<SpanTuple, BigUint> = BTreeMap::new();
    if unambiguous {
        let projection = project(spanner, x)?;
        stats.materialize_calls += 1;
        let support = materialize(&projection, doc, guard)?;
        for t in support.rows.keys() {
            let refword = canonical_refword(doc, t)?;
            let anchor = refword_chain(&refword, SemiringKind::Boolean, x.iter().cloned());
            let constrained = join(spanner, &anchor)?;
            let count = build_dag(&constrained, None, doc)?.count_paths();
            debug_assert!(!count.is_zero());
            out.insert(t.clone(), count);
        }
    } else {
        stats.materialize_calls += 1;
        let full = materialize(spanner, doc, guard)?;
        for t in full.rows.keys() {
            let projected = t.project(x)?;
            *out.entry(projected).or_default() += BigUint::one();
        }
    }
    Ok(out)
}

/// The multiset of weights of all extracted tuples.
///
/// Polynomial for an unambiguous spanner with a constant-width weight
/// function; otherwise falls back to guarded materialization of the full
/// relation.
pub fn weight_multiset(
    spanner: &VsetAutomaton,
    unambiguous: bool,
    doc: &Document,
    weight: &WeightFunction,
    guard: u64,
    stats: &mut EvalStats,
) -> Result<WeightMultiset> {
    let mut out = WeightMultiset::new();
    match weight {
        WeightFunction::CWidth(rel) if unambiguous => {
            let sigma = multiset_sigma(spanner, unambiguous, doc, &rel.vars(), guard, stats)?;
            for (t, mult) in sigma {
                out.insert(rel.weight_of_tuple(doc, &t)?, mult);
            }
        }
        _ => {
            stats.materialize_calls += 1;
            let full = materialize(spanner, doc, guard)?;
            for t in full.rows.keys() {
                out.insert(weight_of(weight, doc, t)?, BigUint::one());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::{integer, rational};

    fn multiset(values: &[(i64, u32)]) -> WeightMultiset {
        let mut m = WeightMultiset::new();
        for (v, c) in values {
            m.insert(integer(*v), BigUint::from(*c));
        }
        m
    }

    #[test]
    fn quantile_on_the_running_weights() {
        let m = multiset(&[(3, 1), (4, 1), (7, 1), (10, 1)]);
        assert_eq!(m.quantile(&rational(1, 2)).unwrap(), integer(4));
        assert_eq!(m.quantile(&rational(0, 1)).unwrap(), integer(3));
        assert_eq!(m.quantile(&rational(1, 1)).unwrap(), integer(10));
        assert_eq!(m.quantile(&rational(1, 4)).unwrap(), integer(3));
        assert_eq!(m.quantile(&rational(26, 100)).unwrap(), integer(4));
    }

    #[test]
    fn constant_multiset_quantiles() {
        let m = multiset(&[(5, 9)]);
        for q in [rational(0, 1), rational(1, 3), rational(1, 1)] {
            assert_eq!(m.quantile(&q).unwrap(), integer(5));
        }
    }

    #[test]
    fn sum_average_count_below() {
        let m = multiset(&[(3, 1), (4, 1), (7, 1), (10, 1)]);
        assert_eq!(m.sum(), integer(24));
        assert_eq!(m.average().unwrap(), integer(6));
        assert_eq!(m.count_below(&integer(5), true), BigUint::from(2u32));
        assert_eq!(m.count_below(&integer(4), true), BigUint::from(1u32));
        assert_eq!(m.count_below(&integer(4), false), BigUint::from(2u32));
        assert_eq!(m.count_below(&integer(2), false), BigUint::from(0u32));
    }

    #[test]
    fn empty_multiset_errors() {
        let m = WeightMultiset::new();
        assert!(matches!(m.quantile(&rational(1, 2)), Err(Error::EmptyRelation)));
        assert!(matches!(m.average(), Err(Error::EmptyRelation)));
        assert_eq!(m.sum(), integer(0));
    }
}
