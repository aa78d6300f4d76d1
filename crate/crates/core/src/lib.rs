//! Data-poisoning attacks on direct data-driven control synthesis.
//!
//! A planner records input/state data from an unknown LTI plant and
//! synthesizes a stabilizing state-feedback gain directly from the data. An
//! attacker who can rewrite the recorded state trajectory — knowing neither
//! the plant nor the synthesis method — can force any such gain to
//! destabilize the true plant by shifting the data-consistent model to
//! `(A + δI, B)` with `|δ| >= 2`. This crate implements the attack
//! constructions, the synthesis strategies they defeat, the spectral
//! verification algebra, and the experiment pipeline that measures all of it.
//!
//! The numeric core ([`signals`], [`plant`], [`attacker`], [`planner`]) is
//! generic over the scalar type through [`scalar::Scalar`] (`f32` or `f64`);
//! orchestration and file I/O ([`pipeline`]) are pinned to `f64`. Aliases for
//! the common double-precision instantiations live at the crate root.

pub mod attacker;
pub mod error;
mod linalg;
pub mod pipeline;
pub mod planner;
pub mod plant;
pub mod rng;
pub mod scalar;
pub mod signals;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default tolerances and limits used wherever a config does not override
/// them.
pub mod defaults {
    /// Relative singular-value cutoff for numerical rank decisions.
    pub const RANK_TOL: f64 = 1e-9;
    /// Riccati fixed-point stopping tolerance on `‖ΔP‖_F`.
    pub const DARE_TOL: f64 = 1e-10;
    pub const DARE_MAX_ITER: usize = 100_000;
    /// Divergence is declared when the final norm exceeds this multiple of
    /// `‖x0‖`.
    pub const DIVERGENCE_FACTOR: f64 = 1e6;
    /// Default closed-loop deployment horizon.
    pub const HORIZON: usize = 50;
    /// Absolute per-component tolerance of the trajectory-overlap check.
    pub const OVERLAP_TOL: f64 = 1e-9;
    pub const PLACEMENT_RETRIES: usize = 20;
    /// Certification tolerance on an achieved pole-placement spectrum.
    pub const PLACEMENT_TOL: f64 = 1e-6;
    /// Trials per (noise level, delta) sweep point.
    pub const SWEEP_TRIALS: usize = 20;
    /// Bisection resolution of the minimal-|delta| search.
    pub const SWEEP_RESOLUTION: f64 = 0.05;
    /// Unit-disc clamp margin of the sweep's escape synthesis targets.
    pub const STABILITY_MARGIN: f64 = 0.02;
    /// Inputs are uniform in `[-INPUT_BOUND, INPUT_BOUND]`.
    pub const INPUT_BOUND: f64 = 1.0;
    /// Raw measurement-noise bound `‖w(k)‖_∞`.
    pub const NOISE_BOUND: f64 = 0.05;
}


// Double-precision aliases for the generic core types.
pub type Sequence64 = signals::Sequence<f64>;
pub type HankelMatrix64 = signals::HankelMatrix<f64>;
pub type DataMatrices64 = signals::DataMatrices<f64>;
pub type LtiSystem64 = plant::LtiSystem<f64>;
pub type Controller64 = plant::Controller<f64>;
pub type SpectrumReport64 = plant::SpectrumReport<f64>;
pub type AttackConfig64 = attacker::AttackConfig<f64>;
pub type PoisonedDataset64 = attacker::PoisonedDataset<f64>;
pub type LqrWeights64 = planner::LqrWeights<f64>;
pub type SynthesisCertificate64 = planner::SynthesisCertificate<f64>;
