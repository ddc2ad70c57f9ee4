//! Analysis of finite-state Markov chains: Markov-Dobrushin contraction and
//! geometric ergodicity, coupling constructions, limit theorems for additive
//! functionals, large deviations, and discrete Poisson equations.
//!
//! ```
//! use ergo_core::{chain::StochasticChain, ergodicity};
//!
//! let chain = StochasticChain::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
//! let kappa = ergodicity::md_coefficient(&chain, 1).unwrap();
//! assert!((kappa - 0.3).abs() < 1e-15);
//! ```

pub mod chain;
pub mod coupling;
pub mod deviations;
pub mod ergodicity;
pub mod error;
pub mod limits;
pub mod linalg;
pub mod mc;
pub mod poisson;
pub mod spectral;

pub use chain::{total_variation, Distribution, Observable, StochasticChain};
pub use error::{ErgoError, Result, Warning};
pub use mc::SeedSpec;
