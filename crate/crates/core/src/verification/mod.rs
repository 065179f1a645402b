//! Numerical checks of the estimates behind energy convergence of mollified
//! fields: the Jensen inequalities, the shifted-coefficient chain, gradient
//! blow-up rates, and the `C(I; L²)` decomposition into a spatial and a
//! temporal translation part.
//!
//! Every inequality is checked with the same slack
//! `ε_quad = C_BUDGET · (dx² + dt²) · scale`, where `scale` is the size of the
//! larger side of the inequality.

pub mod convergence;
pub mod decomposition;
pub mod inequalities;
pub mod modulus;
pub mod rates;

pub use convergence::{
    run_convergence, ConvergenceReport, ConvergenceSetup, FamilyVerdict, FittedRate, Reference, ReportRow, SkippedH, Status,
    Tolerances,
};
pub use decomposition::{check_i_decomposition, Decomposition};
pub use inequalities::{check_jensen_gradient, check_star_chain, gradient_blowup_rate, BlowupFit, JensenCheck, StarCheck};
pub use modulus::{time_modulus, ModulusTable};
pub use rates::fit_slope;

/// Multiplier of the quadrature slack.
pub const C_BUDGET: f64 = 10.0;

/// `C_BUDGET · (dx² + dt²) · scale`.
pub fn eps_quad(dx: f64, dt: f64, scale: f64) -> f64 {
    C_BUDGET * (dx * dx + dt * dt) * scale
}
