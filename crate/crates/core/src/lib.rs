//! Learner-private convex optimization on the unit interval.
//!
//! A learner locates the minimizer of an unknown convex function on `[0,1]`
//! through first-order (subgradient) queries while an eavesdropper observes
//! the query locations, but not the responses, and tries to estimate the
//! minimizer itself. This crate provides:
//!
//! * piecewise-linear convex functions and a resisting oracle that forces
//!   bisection-rate progress on a hosted interval ([`convex_fn`]),
//! * a Dirichlet-process prior over convex functions together with the
//!   marginal law of the minimizer ([`dp_prior`]),
//! * private querying strategies for the fixed-truth and prior-drawn
//!   settings ([`learner_minimax`], [`learner_bayes`]) and a separable
//!   multidimensional extension ([`multidim`]),
//! * eavesdropping adversary estimators and covering-number machinery
//!   ([`adversary`]),
//! * a seeded Monte Carlo audit harness that measures accuracy, adversary
//!   success, and query counts against the theoretical bounds ([`audit`]).
//!
//! The crate is `no_std`-compatible (requires `alloc`); the companion CLI
//! crate carries all file formats and IO.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adversary;
pub mod audit;
pub mod convex_fn;
pub mod dp_prior;
pub mod learner_bayes;
pub mod learner_minimax;
pub mod multidim;
pub mod special;
pub mod stats;
pub mod transcript;

use alloc::string::String;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use transcript::{AdversaryView, Phase, QueryTranscript};

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A query fell outside the domain `[0, 1]`.
    #[error("query {0} outside the domain [0, 1]")]
    DomainQuery(f64),
    /// A configuration violated a precondition; the message names the
    /// violated inequality.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// No feasible solution exists for a derived quantity.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// An iterative numerical scheme failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A learner strategy did not terminate within its query budget.
    #[error("query budget of {0} exceeded")]
    BudgetExceeded(u64),
    /// An adversary was handed an empty query list.
    #[error("adversary view contains no queries")]
    EmptyView,
}

pub type Result<T> = core::result::Result<T, Error>;

/// First-order oracle serving subgradients of a fixed convex function on
/// `[0,1]`.
///
/// Implementations may be stateful (the resisting oracle adapts its answers
/// to the query history), hence `&mut self`.
pub trait GradientOracle {
    fn gradient(&mut self, q: f64) -> f64;
}

/// Adapter turning a closure into a [`GradientOracle`].
pub struct FnOracle<F>(pub F);

impl<F: FnMut(f64) -> f64> GradientOracle for FnOracle<F> {
    fn gradient(&mut self, q: f64) -> f64 {
        (self.0)(q)
    }
}

/// Deterministic per-trial random stream.
///
/// Every batch operation derives one independent substream per trial from
/// `(master_seed, index)`, so results do not depend on evaluation order.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Number of times `len` must be halved to become `<= eps`.
///
/// This is the exact iteration count of a bisection loop `while len > eps`,
/// and equals `ceil(log2(len / eps))` for positive ratios.
pub fn halving_count(mut len: f64, eps: f64) -> u64 {
    let mut n = 0;
    while len > eps {
        len /= 2.0;
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn trial_rng_is_deterministic_and_stream_separated() {
        let a: u64 = trial_rng(7, 0).next_u64();
        let b: u64 = trial_rng(7, 0).next_u64();
        let c: u64 = trial_rng(7, 1).next_u64();
        let d: u64 = trial_rng(8, 0).next_u64();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn halving_count_matches_ceil_log2() {
        assert_eq!(halving_count(1.0, 2f64.powi(-6)), 6);
        assert_eq!(halving_count(0.5, 2f64.powi(-6)), 5);
        assert_eq!(halving_count(1.0, 1.0), 0);
        assert_eq!(halving_count(0.3, 0.3), 0);
        // non-dyadic ratio: ceil(log2(0.3 / 0.001)) = ceil(8.22) = 9
        assert_eq!(halving_count(0.3, 0.001), 9);
    }
}
