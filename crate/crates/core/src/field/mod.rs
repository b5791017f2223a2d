//! Chiral boson fields on the two edge channels.
//!
//! Both channels are expanded on a ring of circumference Λ with momenta
//! k_n = 2πn/Λ, n = 1..N. Each mode carries a quadrature pair (q_n, p_n) with
//! [q_n, p_m] = iδ_nm and free Hamiltonian Σ k_n(q_n² + p_n²)/2. With
//! s_n = √(ν k_n /(πΛ)) the charge densities are
//!
//! ```text
//! ϱ_S(x) = Σ s_n (q_n cos k_n x + p_n sin k_n x)     (left-moving, chirality −1)
//! ϱ_P(y) = Σ s_n (q_n cos k_n y − p_n sin k_n y)     (right-moving, chirality +1)
//! ```
//!
//! which reproduces [ϱ(x), ϱ(x′)] = ∓i(ν/2π)∂δ(x−x′) and H = (π/ν)∫ϱ².
//! Smeared observables ∫f ϱ use the unregulated truncated modes; point
//! evaluations carry the factor e^{−kε/2} so that two-point functions pick
//! up the e^{−kε} regulator.

mod modes;
mod window;

pub use modes::{
    commutator_check, mode_sum_correlator, point_row, smeared_row, smeared_row_derivative, vacuum_correlator,
    window_moment, ChiralChannel, Chirality, CommutatorCheck, ModeBasis,
};
pub use window::{WindowKind, WindowProfile, DEFAULT_TAIL_TOL};
