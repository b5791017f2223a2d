//! End-to-end protocol: parameters, the Gaussian oracle, the Monte-Carlo
//! shot loop and energy bookkeeping.
//!
//! A shot measures channel S at A (outcome v), drives the gate on P with
//! v_P (v itself in the QET arm, an independent draw in the control arm),
//! and lets the packet pass region B. The report collects E_A, the packet
//! energy E_1 without interaction, E_2 after B and E_B = E_2 − E_1.
//!
//! Shots draw their random numbers from a ChaCha stream selected by
//! (seed, shot index), and means are formed by pairwise summation in shot
//! order, so reports do not depend on the thread count.

mod experiment;
mod oracle;
mod params;
mod relations;

pub use experiment::{
    classical_noise_injection, lagrange_at_zero, pairwise_sum, run_experiment, weak_coupling_limit, Arm,
    Engine, EnergyReport, Estimate, ExperimentConfig, ExperimentOutcome, ShotRecord, WeakCouplingFit,
};
pub use oracle::{ConservationAudit, DriveMoments, ModeHamiltonian, OracleModel, ShotCoefficients};
pub use params::{OracleConfig, PhysicalParams};
pub use relations::{current_energy_relation, energy_current_relation};
