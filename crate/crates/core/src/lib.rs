//! Compactly supported Hamiltonian dynamics on the open unit cotangent bundle
//! of the flat torus `Tⁿ × Dⁿ`.
//!
//! The crate is organised bottom-up:
//!
//! * [`phase`]: lifted points on the universal cover `ℝⁿ × Dⁿ`, deck
//!   transformations and the fundamental domain.
//! * [`hamiltonians`]: profile splines, the two profile families, and the
//!   field constructions (products, periodic reparametrisation, iterates).
//! * [`flow`]: implicit-midpoint integration, time-one maps, sequential
//!   systems and action quadrature.
//! * [`orbits`]: Newton shooting for periodic orbits in a homotopy class.
//! * [`propagation`]: propagation speed, rotation sets, Birkhoff averages and
//!   the dissipative counterexample.
//! * [`hofer`]: sampled oscillation certificates for generating Hamiltonians.
//! * [`homology`]: GF(2) bookkeeping for filtered symplectic homology tables.

pub mod error;
pub mod flow;
pub mod hamiltonians;
pub mod hofer;
pub mod homology;
pub mod orbits;
pub mod phase;
pub mod propagation;
pub mod rng;

pub use error::{Error, Result};
pub use flow::{IntegratorSettings, LiftedTrajectory, Scheme, SequentialSystem, TimeOneMap};
pub use hamiltonians::{HamiltonianField, ProfileFunction};
pub use phase::{BasePoint, FundamentalDomain, HomotopyClass, LiftedPoint};
