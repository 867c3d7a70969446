//! Exact and probabilistic lower bounds on the ground-state degeneracy and
//! ground-state entropy density of short-range ±J Ising models.
//!
//! The toolkit is organised around frustration *modules*: small blocks of
//! sites whose coupling pattern forces a nonempty energy-preserving spin
//! flip inside the block for every ground state of every host lattice.
//! Counting how many disjoint blocks of a random coupling configuration
//! realise such a pattern yields a lower bound `2^n` on the number of
//! ground states, and hence a positive lower bound on the entropy per site.
//!
//! The pieces:
//!
//! - [`lattice`]: square, triangular and hexagonal (brick-wall) lattice
//!   graphs with free, cylindrical or toroidal boundaries, plus site/bond
//!   dilution and contour-bond queries.
//! - [`ising`]: the ±J algebra — energy, unhappy bonds, closed-curve
//!   parity, plaquette frustration, entropic sets.
//! - [`ground_state`]: three exact solvers (bit-packed exhaustive scan,
//!   column transfer matrix, branch and bound) that all report the exact
//!   minimum energy and degeneracy.
//! - [`modules`]: the three built-in module patterns, coupling realisation,
//!   pattern matching, and verification by exhaustive enumeration.
//! - [`bounds`]: the probabilistic layer — parity counting, `f(p)`,
//!   degeneracy lower bounds from tilings, and entropy-density reports.

pub mod bits;
pub mod bounds;
pub mod error;
pub mod ground_state;
pub mod ising;
pub mod lattice;
pub mod modules;
pub mod seeds;

pub use error::{Error, Result};
