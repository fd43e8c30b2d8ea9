//! The non-asymptotic bound: its ingredients, the implicit ε, the four
//! summands, the asymptotic constant and the pointwise Ψ bounds.
//!
//! Generic constants `C` are a parameter (default 1). Under the i.i.d.
//! reduction `W_i = X_i/√n` every sum over summands is `n` times the
//! per-summand value; [`CltTerms::from_summands`] handles unequal blocks.

mod bound;
mod psi;
mod terms;

pub use bound::{
    corollary_constant, exact_lattice_law, solve_epsilon, solve_epsilon_with, theorem_bound, theorem_bound_with, BoundInputs, BoundReport,
    DenominatorForm, Diagnostic, EpsilonSolution, WqPolicy,
};
pub use psi::{delta, eta_p, psi1, psi2, psi3, psi_regime, Regime, RegimeValue};
pub use terms::{compute_terms, compute_terms_with, CltTerms, SourceSummary, Summand, TermsOptions};
