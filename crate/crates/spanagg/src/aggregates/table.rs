//! The tractability matrix: which (aggregate, spanner class, weight class)
//! combinations admit a polynomial-time exact algorithm.
//!
//! The dispatcher consults this table; cells outside it route to the guarded
//! fallback (or to a declared-unsupported error in approximate mode).

/// Spanner classification: unambiguous functional vs. merely functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpannerClass {
    Unambiguous,
    Functional,
}

/// Weight-function classification used by the dispatcher.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightClass {
    CWidth,
    RegTropical { unambiguous: bool },
    RegNumerical { unambiguous: bool },
    Callback,
}

/// Aggregate discriminant without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggTag {
    Count,
    Min,
    Max,
    Sum,
    Avg,
    Quantile,
    CountBelow,
}

/// Whether exact evaluation of the cell is polynomial-time.
///
/// * Count: polynomial for unambiguous spanners only.
/// * Min: constant-width, any tropical weight automaton, or an unambiguous
///   numerical one — regardless of spanner ambiguity.
/// * Max: constant-width or an unambiguous weight automaton of either
///   semiring — regardless of spanner ambiguity.
/// * Sum and Average: unambiguous spanners with constant-width, any
///   numerical, or unambiguous tropical weights.
/// * Quantile (and threshold counting): unambiguous spanners with
///   constant-width weights only.
/// * Host callbacks are opaque, never polynomial.
pub fn in_fp(agg: AggTag, spanner: SpannerClass, weight: Option<WeightClass>) -> bool {
    use AggTag::*;
    use WeightClass::*;
    match agg {
        Count => spanner == SpannerClass::Unambiguous,
        Min => matches!(
            weight,
            Some(CWidth)
                | Some(RegTropical { .. })
                | Some(RegNumerical { unambiguous: true })
        ),
        Max => matches!(
            weight,
            Some(CWidth)
                | Some(RegTropical { unambiguous: true })
                | Some(RegNumerical { unambiguous: true })
        ),
        Sum | Avg => {
            spanner == SpannerClass::Unambiguous
                && matches!(
                    weight,
                    Some(CWidth)
                        | Some(RegNumerical { .. })
                        | Some(RegTropical { unambiguous: true })
                )
        }
        Quantile | CountBelow => {
            spanner == SpannerClass::Unambiguous && matches!(weight, Some(CWidth))
        }
    }
}
