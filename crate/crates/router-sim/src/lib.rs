//! Exact non-Markovian dynamics of two-level emitters coupled through a
//! shared one-dimensional phonon continuum.
//!
//! An array of emitters (e.g. silicon-vacancy centers in a diamond
//! waveguide) exchanges a single excitation with a bosonic bath whose
//! correlated spectral density falls off exponentially above a cutoff.
//! Everything in this crate works in the dimensionless model produced by
//! [`params::ModelParams::reduce`]: frequencies in units of the orbital
//! splitting Δ, times in units of 1/Δ.
//!
//! The main pipeline:
//!
//! * [`params`] — physical (SI) parameters and their dimensionless reduction,
//! * [`spectral`] — spectral-density matrix J(ω), memory kernel h(t), and the
//!   dispersion integrals below the band edge,
//! * [`spectrum`] — bound-state poles, residue weights, and spectrum scans,
//! * [`dynamics`] — the Volterra integro-differential solver, the Markov
//!   baseline, and the analytic bound-state steady state,
//! * [`observables`] — concurrence, state-transfer fidelity, and steady-state
//!   envelopes,
//! * [`oracle`] — a brute-force discretized-bath model used to validate the
//!   whole stack,
//! * [`csv`] — deterministic CSV serialization of results.
//!
//! ```
//! use router_sim::{params::ModelParams, spectrum};
//!
//! let model = ModelParams::reference_device(2, 10e-9).reduce().unwrap();
//! let bound = spectrum::find_bound_states(&model, 1.05).unwrap();
//! assert_eq!(bound.len(), 2);
//! assert!(bound.iter().all(|b| b.pole < 0.0));
//! ```

pub mod csv;
pub mod dynamics;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod params;
pub mod quad;
pub mod spectral;
pub mod spectrum;

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter failed validation; `field` names it.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    /// An argument left the domain on which an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A solver produced non-finite intermediates or failed to converge.
    #[error("numerical instability: {0}")]
    Numerical(String),
    /// A guaranteed-by-construction step failed anyway.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Run the chapter snippets of the guide in `book/` as doc-tests so the
/// prose can never drift away from the public API.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(model, "../../../book/src/model.md");
    chapter!(spectral, "../../../book/src/spectral.md");
    chapter!(bound_states, "../../../book/src/bound-states.md");
    chapter!(dynamics, "../../../book/src/dynamics.md");
    chapter!(observables, "../../../book/src/observables.md");
    chapter!(oracle, "../../../book/src/oracle.md");
    chapter!(cli, "../../../book/src/cli.md");
}
