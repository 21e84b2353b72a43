//! Step skew-products over finite shifts with monotone interval fiber maps.
//!
//! The crate covers symbolic dynamics and Markov measures ([`symbolic`]),
//! fiber maps ([`fiber`]), the skew-product and its orientation-doubled
//! extension ([`skew`]), stationary and empirical fiber measures
//! ([`measures`]), strips and attractors ([`strips`]), hyperbolic times
//! ([`hyperbolicity`]) and genericity checks ([`genericity`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fiber;
pub mod genericity;
pub mod hyperbolicity;
pub mod measures;
pub mod skew;
pub mod strips;
pub mod symbolic;
pub mod systems;

pub use error::{Error, Result};
pub use fiber::{FiberMap, Interval, Orientation};
pub use skew::{ExtendedSystem, PointState, SkewProduct, StepSkewSystem};
pub use symbolic::{MarkovChain, MarkovChainSpec, TransitionMatrix, Word};
