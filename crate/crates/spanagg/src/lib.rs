//! Aggregate evaluation over document spanners.
//!
//! A document spanner extracts a relation of spans (intervals of a document)
//! from text; here spanners are represented by (weighted) vset-automata.
//! This crate evaluates Count, Min, Max, Sum, Average and q-Quantile over the
//! extracted relation, choosing a polynomial-time algorithm whenever the
//! combination of spanner class and weight-function class admits one and
//! falling back to guarded materialization or declared-unsupported errors
//! otherwise.
//!
//! The main pieces:
//!
//! * [`spans`] — documents, spans, span tuples, and ref-words.
//! * [`semiring`] — exact arithmetic in the Boolean, numerical, and tropical
//!   semirings.
//! * [`automata`] — weighted vset-automata: regex compilation, structural
//!   checks, epsilon removal, the union/projection/join algebra, evaluation,
//!   and materialization.
//! * [`weights`] — weight functions mapping (document, tuple) pairs to
//!   rationals: constant-width relations, regular weight automata, and host
//!   callbacks.
//! * [`dag`] — the product DAG of spanner, weight automaton, and document,
//!   with the path-counting, extremal-path, path-sum, and path-sampling
//!   dynamic programs.
//! * [`aggregates`] — the user-facing engine: a registry of evaluation
//!   strategies plus the tractability dispatcher that picks one per request.
//! * [`oracle`] — the brute-force reference implementation used for
//!   cross-checking.
//! * [`generators`] — test-instance factories with known ground truth.

pub mod aggregates;
pub mod automata;
pub mod dag;
mod error;
pub mod generators;
pub mod oracle;
pub mod semiring;
pub mod spans;
pub mod weights;

pub use error::{Error, Result};
