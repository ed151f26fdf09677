//! Toolkit for generating bounded solutions ("ideal internal dynamics") of
//! unstable linear differential equations driven by exosystem-modeled forcing.
//!
//! The problem: given an unstable system
//!
//! ```text
//!     η̇ = A η + Σ_k N_k ξ_k,
//! ```
//!
//! where each forcing channel ξ_k is produced by an autonomous exosystem
//! `ẇ_k = S w_k`, `ξ_k = Eᵀ w_k`, find a *bounded* trajectory η using only
//! past values of the forcing. The toolkit builds an augmented generator that
//! embeds a copy of the exosystem dynamics (internal-model principle), feeds
//! back a matching error through synthesized gains, and converges to the
//! bounded solution from a zero initial state — running strictly forward in
//! time.
//!
//! Module map:
//!
//! - [`model`] — domain types (exosystems, plants, gains, pole regions) and
//!   scenario validation.
//! - [`ctrb`] — spectral/controllability algorithms: PBH test, cyclicity,
//!   constructive single-input vectors, functional observers.
//! - [`generator`] — assembly of the augmented closed-loop matrices and the
//!   perturbation error system.
//! - [`analysis`] — H2/H∞ norms, Lyapunov solves, pole-region membership.
//! - [`synthesis`] — gain selection: constructive `L1`, penalty direct search
//!   for `L23` under norm and pole-region constraints.
//! - [`sim`] — fixed-step RK4 simulation with exact exosystem propagation,
//!   residual tracking, noise injection, superposition checks.
//! - [`oracle`] — the exact bounded solution via the Sylvester equation;
//!   independent certification of simulated traces.
//! - [`config`] — scenario file schema (TOML) and conversions.
//! - [`cli`] — subcommand dispatch and CSV/metrics emission.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod ctrb;
pub mod error;
pub mod generator;
mod linalg;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
