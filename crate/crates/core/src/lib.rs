//! Numerical laboratory for the asymmetric simple exclusion process (ASEP)
//! on the integer lattice.
//!
//! * [`sim`]: continuous-time Monte Carlo on a finite window.
//! * [`bethe`]: exact N-particle transition probabilities from the
//!   Bethe-Ansatz contour integral, with a Markov-generator oracle.
//! * [`identities`]: numerical checks of the algebraic identities behind the
//!   marginal formulas, and tau-binomial arithmetic.
//! * [`painleve`]: the Hastings-McLeod solution of Painleve II and the
//!   Tracy-Widom distributions F1, F2.
//! * [`fredholm`]: Fredholm determinants for the finite-time marginal law and
//!   the Airy-kernel representation of F2.
//! * [`harness`]: KPZ scaling constants and Monte Carlo convergence studies.

pub mod airy;
pub mod bethe;
pub mod error;
pub mod fredholm;
pub mod harness;
pub mod identities;
pub mod painleve;
pub mod rates;
pub mod sim;
mod stats;

pub use error::{Error, Result};
pub use rates::HoppingRates;
pub use stats::{poisson_cdf, poisson_upper_tail};
