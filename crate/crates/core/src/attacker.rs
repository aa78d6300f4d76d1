//! Poisoned-dataset construction and verification.
//!
//! Two attack mechanisms are implemented, both operating purely on recorded
//! data (never on the plant matrices):
//!
//! * the Hankel-shift attack, which replaces the successor-state matrix with
//!   `X̃₊ = X₊ + δ X₋` while keeping `X̃₋ = X₋` — effective but not
//!   expressible as a single poisoned trajectory;
//! * the recursive attack, which generates a genuine poisoned trajectory
//!   `x̃(k) = x(k) + Δ(k)` whose data matrices emulate the apparent plant
//!   `(A + δI, B)` while staying consistent with one state evolution.
//!
//! The `verify_*` operations are harness-side checks: they may consume ground
//! truth and exist to validate attack outputs, not to construct them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::plant::LtiSystem;
use crate::scalar::{from_f64, Scalar};
use crate::signals::{DataMatrices, Sequence};

/// Which poisoning mechanism produced (or will produce) a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    None,
    HankelShift,
    Recursive,
}

impl std::fmt::Display for AttackMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackMode::None => write!(f, "none"),
            AttackMode::HankelShift => write!(f, "hankel_shift"),
            AttackMode::Recursive => write!(f, "recursive"),
        }
    }
}

/// Attack parameters: mechanism and shift magnitude.
///
/// Destabilization is guaranteed only for `|delta| >= 2`; smaller magnitudes
/// are accepted (they are the subject of the insufficiency experiments) and
/// flagged through [`Self::effectiveness_guaranteed`] rather than rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig<T: Scalar> {
    pub delta: T,
    pub mode: AttackMode,
}

impl<T: Scalar> AttackConfig<T> {
    pub fn new(delta: T, mode: AttackMode) -> Self {
        Self { delta, mode }
    }

    pub fn none() -> Self {
        Self {
            delta: T::zero(),
            mode: AttackMode::None,
        }
    }

    /// True iff the shift magnitude meets the `|delta| >= 2` threshold below
    /// which a stabilizing synthesis always exists.
    pub fn effectiveness_guaranteed(&self) -> bool {
        self.delta.abs() >= from_f64::<T>(2.0)
    }
}

/// A poisoned dataset handed to the planner: inputs are untouched, state
/// matrices carry the attack.
///
/// Invariants by mode: `recursive` stores `Δ(0..T)` with `Δ(0) = 0` and
/// `x̃(k) = x(k) + Δ(k)`, plus the solve columns `g(k)` used downstream by
/// the G-algebra verification; `hankel_shift` keeps `X̃₋ = X₋` exactly and
/// stores no perturbation sequence (none exists).
#[derive(Debug, Clone, PartialEq)]
pub struct PoisonedDataset<T: Scalar> {
    u: DMatrix<T>,
    x_minus_tilde: DMatrix<T>,
    x_plus_tilde: DMatrix<T>,
    perturbations: Option<Vec<DVector<T>>>,
    g_delta: Option<DMatrix<T>>,
    attack: AttackConfig<T>,
}

impl<T: Scalar> PoisonedDataset<T> {
    /// Wrap an untouched dataset (attack mode `none`).
    pub fn unpoisoned(input: &Sequence<T>, states: &Sequence<T>) -> Result<Self> {
        let dm = DataMatrices::from_dataset(input, states)?;
        Ok(Self {
            u: dm.u().clone(),
            x_minus_tilde: dm.x_minus().clone(),
            x_plus_tilde: dm.x_plus().clone(),
            perturbations: None,
            g_delta: None,
            attack: AttackConfig::none(),
        })
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn x_minus_tilde(&self) -> &DMatrix<T> {
        &self.x_minus_tilde
    }

    pub fn x_plus_tilde(&self) -> &DMatrix<T> {
        &self.x_plus_tilde
    }

    /// `Δ(0), …, Δ(T)`; present only for the recursive mode.
    pub fn perturbations(&self) -> Option<&[DVector<T>]> {
        self.perturbations.as_deref()
    }

    /// Solve columns `[g(0) … g(T-1)]`; present only for the recursive mode.
    pub fn g_delta(&self) -> Option<&DMatrix<T>> {
        self.g_delta.as_ref()
    }

    pub fn attack(&self) -> &AttackConfig<T> {
        &self.attack
    }

    /// Column count `T`.
    pub fn len(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn state_dim(&self) -> usize {
        self.x_minus_tilde.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.u.nrows()
    }

    /// The `(n + m) × T` stack `[X̃₋; U]` the planner synthesizes from.
    pub fn stacked_tilde(&self) -> DMatrix<T> {
        linalg::vstack(&self.x_minus_tilde, &self.u).expect("column counts fixed at construction")
    }

    /// Canonical poisoned-state reading `x̃(0), …, x̃(T)`: first column of
    /// `X̃₋` followed by the columns of `X̃₊`. Exact for trajectory-compatible
    /// modes; for the Hankel-shift attack this is the stored successor data.
    pub fn poisoned_states(&self) -> Sequence<T> {
        let mut samples = Vec::with_capacity(self.len() + 1);
        samples.push(self.x_minus_tilde.column(0).into_owned());
        for k in 0..self.len() {
            samples.push(self.x_plus_tilde.column(k).into_owned());
        }
        Sequence::new(samples).expect("dimensions fixed at construction")
    }

    /// The recorded (pre-attack) states `x(0), …, x(T)`, reconstructed from
    /// the stored data: `x̃ - Δ` for the recursive mode, `X̃₊ - δ X̃₋` for the
    /// Hankel shift, identity otherwise.
    pub fn original_states(&self) -> Sequence<T> {
        let t = self.len();
        let mut samples = Vec::with_capacity(t + 1);
        match self.attack.mode {
            AttackMode::Recursive => {
                let deltas = self
                    .perturbations
                    .as_ref()
                    .expect("recursive datasets store perturbations");
                let poisoned = self.poisoned_states();
                for k in 0..=t {
                    samples.push(poisoned.sample(k) - &deltas[k]);
                }
            }
            AttackMode::HankelShift => {
                for k in 0..t {
                    samples.push(self.x_minus_tilde.column(k).into_owned());
                }
                let last = self.x_plus_tilde.column(t - 1)
                    - self.x_minus_tilde.column(t - 1) * self.attack.delta;
                samples.push(last);
            }
            AttackMode::None => return self.poisoned_states(),
        }
        Sequence::new(samples).expect("dimensions fixed at construction")
    }
}

/// The Hankel-shift attack: `X̃₊ = X₊ + δ X₋`, `X̃₋ = X₋`, inputs untouched.
///
/// The result is generally not consistent with any single poisoned
/// trajectory; it applies when data are stored directly in matrix form or as
/// independent one-step transitions.
pub fn hankel_shift_attack<T: Scalar>(
    dm: &DataMatrices<T>,
    cfg: &AttackConfig<T>,
) -> Result<PoisonedDataset<T>> {
    if cfg.mode != AttackMode::HankelShift {
        return Err(Error::InvalidInput(format!(
            "hankel_shift_attack called with mode {}",
            cfg.mode
        )));
    }
    let x_plus_tilde = dm.x_plus() + dm.x_minus() * cfg.delta;
    Ok(PoisonedDataset {
        u: dm.u().clone(),
        x_minus_tilde: dm.x_minus().clone(),
        x_plus_tilde,
        perturbations: None,
        g_delta: None,
        attack: *cfg,
    })
}

/// The recursive trajectory-poisoning attack.
///
/// Starting from `Δ(0) = 0`, each step solves
/// `[X₋; U] g(k) = [Δ(k); 0]` (minimum-norm solution) and propagates
/// `Δ(k+1) = X₊ g(k) + δ (x(k) + Δ(k))`, `x̃(k+1) = x(k+1) + Δ(k+1)`.
/// The output is a genuine trajectory whose data matrices emulate the
/// apparent plant `(A + δI, B)`.
///
/// Requires the stack `[X₋; U]` to have full row rank; otherwise the solve in
/// the update rule has no solution for general `Δ(k)` and the attack
/// prerequisite fails.
pub fn recursive_poison<T: Scalar>(
    input: &Sequence<T>,
    states: &Sequence<T>,
    cfg: &AttackConfig<T>,
    rank_tol: T,
) -> Result<PoisonedDataset<T>> {
    if cfg.mode != AttackMode::Recursive {
        return Err(Error::InvalidInput(format!(
            "recursive_poison called with mode {}",
            cfg.mode
        )));
    }
    let dm = DataMatrices::from_dataset(input, states)?;
    let t = dm.len();
    let (n, m) = (dm.state_dim(), dm.input_dim());
    let stack = dm.stacked();
    let rank = linalg::numerical_rank(&stack, rank_tol);
    if rank != n + m {
        return Err(Error::InsufficientExcitation(format!(
            "[X-; U] has rank {rank} < {} = n + m; the g(k) solve is not guaranteed solvable",
            n + m
        )));
    }
    let stack_pinv = linalg::pseudo_inverse(&stack, rank_tol)?;

    let mut deltas: Vec<DVector<T>> = Vec::with_capacity(t + 1);
    deltas.push(DVector::zeros(n));
    let mut g_delta = DMatrix::<T>::zeros(t, t);
    let mut rhs = DVector::<T>::zeros(n + m);
    for k in 0..t {
        rhs.rows_mut(0, n).copy_from(&deltas[k]);
        let g_k = &stack_pinv * &rhs;
        let next =
            dm.x_plus() * &g_k + (states.sample(k) + &deltas[k]) * cfg.delta;
        g_delta.set_column(k, &g_k);
        deltas.push(next);
    }

    let poisoned: Vec<DVector<T>> = (0..=t).map(|k| states.sample(k) + &deltas[k]).collect();
    let x_minus_tilde = DMatrix::from_fn(n, t, |i, k| poisoned[k][i]);
    let x_plus_tilde = DMatrix::from_fn(n, t, |i, k| poisoned[k + 1][i]);
    Ok(PoisonedDataset {
        u: dm.u().clone(),
        x_minus_tilde,
        x_plus_tilde,
        perturbations: Some(deltas),
        g_delta: Some(g_delta),
        attack: *cfg,
    })
}

/// Check whether the poisoned Hankel views arise from one sequential
/// trajectory `{x̃(k)}`.
///
/// The recorded matrices `X₋`, `X₊` are views of a single sequence, so the
/// perturbation overlap condition reduces to the direct overlap of the
/// poisoned views: column `k+1` of `X̃₋` must equal column `k` of `X̃₊`.
/// Columns match when their difference stays within `tol` (absolute, per
/// component).
pub fn verify_trajectory_compatible<T: Scalar>(pd: &PoisonedDataset<T>, tol: T) -> bool {
    let t = pd.len();
    for k in 0..t.saturating_sub(1) {
        let diff = pd.x_minus_tilde.column(k + 1) - pd.x_plus_tilde.column(k);
        if diff.iter().any(|v| v.abs() > tol) {
            return false;
        }
    }
    true
}

/// Harness-side check that the poisoned data satisfy the apparent plant
/// `(A + δI, B)`: returns `‖X̃₊ - (A + δI) X̃₋ - B U‖_F`.
///
/// Requires ground truth, so this is a verification operation only.
pub fn verify_apparent_model<T: Scalar>(
    pd: &PoisonedDataset<T>,
    sys: &LtiSystem<T>,
    cfg: &AttackConfig<T>,
) -> Result<T> {
    if pd.state_dim() != sys.state_dim() || pd.input_dim() != sys.input_dim() {
        return Err(Error::Dimension(format!(
            "dataset is ({}, {})-dimensional, plant is ({}, {})",
            pd.state_dim(),
            pd.input_dim(),
            sys.state_dim(),
            sys.input_dim()
        )));
    }
    let shifted = sys.a() + DMatrix::identity(sys.state_dim(), sys.state_dim()) * cfg.delta;
    let residual = &pd.x_plus_tilde - shifted * &pd.x_minus_tilde - sys.b() * &pd.u;
    Ok(residual.norm())
}

/// Least-squares identification of the unique model compatible with the
/// poisoned dataset: solves `[Ahat Bhat] [X̃₋; U] = X̃₊`.
///
/// Uniqueness needs `[X̃₋; U]` to have full row rank; a deficient stack is
/// rejected because multiple models then explain the data.
pub fn identify_apparent<T: Scalar>(
    pd: &PoisonedDataset<T>,
    rank_tol: T,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let (n, m) = (pd.state_dim(), pd.input_dim());
    let stack = pd.stacked_tilde();
    let rank = linalg::numerical_rank(&stack, rank_tol);
    if rank != n + m {
        return Err(Error::NonUniqueModel(format!(
            "[X~-; U] has rank {rank} < {}; several models are data-consistent",
            n + m
        )));
    }
    let model = &pd.x_plus_tilde * linalg::pseudo_inverse(&stack, rank_tol)?;
    let a_hat = model.view((0, 0), (n, n)).into_owned();
    let b_hat = model.view((0, n), (n, m)).into_owned();
    Ok((a_hat, b_hat))
}

// ---------------------------------------------------------------------------
// Serialization: CSV table and JSON envelope.
// ---------------------------------------------------------------------------

/// JSON envelope for a poisoned dataset, carrying attack provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEnvelope {
    pub mode: AttackMode,
    pub delta: f64,
    pub t: usize,
    pub state_dim: usize,
    pub input_dim: usize,
    /// Row-major `m × T`.
    pub u: Vec<Vec<f64>>,
    /// Row-major `n × T`.
    pub x_minus_tilde: Vec<Vec<f64>>,
    /// Row-major `n × T`.
    pub x_plus_tilde: Vec<Vec<f64>>,
    /// `Δ(0), …, Δ(T)` as vectors; recursive mode only.
    pub perturbations: Option<Vec<Vec<f64>>>,
    /// Row-major `T × T` solve columns; recursive mode only.
    pub g_delta: Option<Vec<Vec<f64>>>,
}

impl<T: Scalar> PoisonedDataset<T> {
    pub fn to_envelope(&self) -> DatasetEnvelope {
        DatasetEnvelope {
            mode: self.attack.mode,
            delta: self.attack.delta.to_f64().unwrap_or(f64::NAN),
            t: self.len(),
            state_dim: self.state_dim(),
            input_dim: self.input_dim(),
            u: linalg::matrix_to_rows(&self.u),
            x_minus_tilde: linalg::matrix_to_rows(&self.x_minus_tilde),
            x_plus_tilde: linalg::matrix_to_rows(&self.x_plus_tilde),
            perturbations: self
                .perturbations
                .as_ref()
                .map(|ds| ds.iter().map(|d| d.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()).collect()),
            g_delta: self.g_delta.as_ref().map(|g| linalg::matrix_to_rows(g)),
        }
    }

    /// One CSV row per time step `k = 0..T`: `k, u(k)ᵀ, x(k)ᵀ, x̃(k)ᵀ, Δ(k)ᵀ`.
    /// The input fields of row `T` and the `Δ` fields of non-recursive modes
    /// are left empty.
    pub fn to_csv(&self) -> String {
        let (t, n, m) = (self.len(), self.state_dim(), self.input_dim());
        let mut out = String::new();
        let mut header = vec!["k".to_string()];
        header.extend((0..m).map(|i| format!("u_{i}")));
        header.extend((0..n).map(|i| format!("x_{i}")));
        header.extend((0..n).map(|i| format!("x_tilde_{i}")));
        header.extend((0..n).map(|i| format!("delta_{i}")));
        out.push_str(&header.join(","));
        out.push('\n');

        let original = self.original_states();
        let poisoned = self.poisoned_states();
        for k in 0..=t {
            let mut fields = vec![k.to_string()];
            for i in 0..m {
                if k < t {
                    fields.push(fmt_scalar(self.u[(i, k)]));
                } else {
                    fields.push(String::new());
                }
            }
            for i in 0..n {
                fields.push(fmt_scalar(original.sample(k)[i]));
            }
            for i in 0..n {
                fields.push(fmt_scalar(poisoned.sample(k)[i]));
            }
            for i in 0..n {
                match &self.perturbations {
                    Some(ds) => fields.push(fmt_scalar(ds[k][i])),
                    None => fields.push(String::new()),
                }
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

impl DatasetEnvelope {
    /// Rebuild a poisoned dataset (in double precision) from the envelope.
    pub fn to_dataset(&self) -> Result<PoisonedDataset<f64>> {
        let u = linalg::rows_to_matrix(&self.u)?;
        let x_minus_tilde = linalg::rows_to_matrix(&self.x_minus_tilde)?;
        let x_plus_tilde = linalg::rows_to_matrix(&self.x_plus_tilde)?;
        if u.ncols() != self.t || x_minus_tilde.ncols() != self.t || x_plus_tilde.ncols() != self.t
        {
            return Err(Error::Dimension(
                "envelope matrices disagree with the declared length".into(),
            ));
        }
        if x_minus_tilde.nrows() != self.state_dim || u.nrows() != self.input_dim {
            return Err(Error::Dimension(
                "envelope matrices disagree with the declared dimensions".into(),
            ));
        }
        let perturbations = match &self.perturbations {
            Some(rows) => {
                if rows.len() != self.t + 1 {
                    return Err(Error::Dimension(format!(
                        "expected {} perturbation vectors, found {}",
                        self.t + 1,
                        rows.len()
                    )));
                }
                Some(
                    rows.iter()
                        .map(|r| {
                            if r.len() != self.state_dim {
                                Err(Error::Dimension(
                                    "perturbation vector has wrong dimension".into(),
                                ))
                            } else {
                                Ok(DVector::from_column_slice(r))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => None,
        };
        let g_delta = match &self.g_delta {
            Some(rows) => Some(linalg::rows_to_matrix(rows)?),
            None => None,
        };
        Ok(PoisonedDataset {
            u,
            x_minus_tilde,
            x_plus_tilde,
            perturbations,
            g_delta,
            attack: AttackConfig::new(self.delta, self.mode),
        })
    }
}

fn fmt_scalar<T: Scalar>(v: T) -> String {
    format!("{}", v.to_f64().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{simulate_open_loop, LtiSystem};
    use crate::rng::SeededRng;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    /// Controllable 2-state, 1-input test plant and a PE experiment on it.
    fn two_state_dataset(t: usize, seed: u64) -> (LtiSystem<f64>, Sequence<f64>, Sequence<f64>) {
        let sys = LtiSystem::new(dmatrix![0.8, 0.5; 0.0, 0.4], dmatrix![0.0; 1.0]).unwrap();
        let mut rng = SeededRng::new(seed);
        let input = Sequence::new(
            (0..t)
                .map(|_| DVector::from_fn(1, |_, _| rng.symmetric(1.0)))
                .collect(),
        )
        .unwrap();
        let states = simulate_open_loop(&sys, &input, &dvector![1.0, -1.0]).unwrap();
        (sys, input, states)
    }

    #[test]
    fn hankel_shift_zero_delta_is_identity() {
        let (_, input, states) = two_state_dataset(8, 1);
        let dm = DataMatrices::from_dataset(&input, &states).unwrap();
        let pd =
            hankel_shift_attack(&dm, &AttackConfig::new(0.0, AttackMode::HankelShift)).unwrap();
        assert_eq!(pd.x_plus_tilde(), dm.x_plus());
        assert_eq!(pd.x_minus_tilde(), dm.x_minus());
        assert_eq!(pd.u(), dm.u());
        assert!(pd.perturbations().is_none());
    }

    #[test]
    fn hankel_shift_identity_columns() {
        // With X- = I the shift subtracts 2I from X+.
        let x_plus = dmatrix![0.3, 0.1, 0.0; -0.2, 0.5, 0.4; 0.0, 0.7, -0.1];
        let dm = DataMatrices::new(
            DMatrix::from_element(1, 3, 1.0),
            DMatrix::identity(3, 3),
            x_plus.clone(),
        )
        .unwrap();
        let pd =
            hankel_shift_attack(&dm, &AttackConfig::new(-2.0, AttackMode::HankelShift)).unwrap();
        let expected = &x_plus - DMatrix::identity(3, 3) * 2.0;
        assert_eq!(pd.x_plus_tilde(), &expected);
    }

    #[test]
    fn hankel_shift_rejects_wrong_mode() {
        let (_, input, states) = two_state_dataset(8, 1);
        let dm = DataMatrices::from_dataset(&input, &states).unwrap();
        assert!(hankel_shift_attack(&dm, &AttackConfig::new(-2.0, AttackMode::Recursive)).is_err());
    }

    #[test]
    fn recursive_zero_delta_leaves_data_untouched() {
        let (_, input, states) = two_state_dataset(8, 2);
        let pd = recursive_poison(
            &input,
            &states,
            &AttackConfig::new(0.0, AttackMode::Recursive),
            1e-9,
        )
        .unwrap();
        for d in pd.perturbations().unwrap() {
            assert!(d.norm() <= 1e-12);
        }
        let poisoned = pd.poisoned_states();
        for k in 0..=8 {
            assert_relative_eq!(
                (poisoned.sample(k) - states.sample(k)).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn recursive_keeps_initial_state() {
        let (_, input, states) = two_state_dataset(10, 3);
        let pd = recursive_poison(
            &input,
            &states,
            &AttackConfig::new(-2.0, AttackMode::Recursive),
            1e-9,
        )
        .unwrap();
        assert_eq!(pd.perturbations().unwrap()[0], DVector::zeros(2));
        assert_eq!(&pd.poisoned_states().sample(0).clone(), states.sample(0));
    }

    #[test]
    fn recursive_emulates_shifted_plant() {
        let (sys, input, states) = two_state_dataset(10, 4);
        let cfg = AttackConfig::new(-2.0, AttackMode::Recursive);
        let pd = recursive_poison(&input, &states, &cfg, 1e-9).unwrap();
        // Oracle: direct substitution with the known (A, B).
        let residual = verify_apparent_model(&pd, &sys, &cfg).unwrap();
        assert!(
            residual <= 1e-8 * pd.x_plus_tilde().norm().max(1.0),
            "residual {residual} too large"
        );
    }

    #[test]
    fn recursive_matches_closed_form_recursion() {
        // Noise-free, minimum-norm g(k): Δ(k+1) = (A + δI) Δ(k) + δ x(k).
        let (sys, input, states) = two_state_dataset(12, 5);
        let delta = -2.0;
        let pd = recursive_poison(
            &input,
            &states,
            &AttackConfig::new(delta, AttackMode::Recursive),
            1e-9,
        )
        .unwrap();
        let shifted = sys.a() + DMatrix::identity(2, 2) * delta;
        let ds = pd.perturbations().unwrap();
        for k in 0..12 {
            let expected = &shifted * &ds[k] + states.sample(k) * delta;
            assert_relative_eq!((&ds[k + 1] - expected).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn recursive_rejects_rank_deficient_stack() {
        // Zero input gives a rank-deficient [X-; U] stack.
        let sys = LtiSystem::new(dmatrix![0.8, 0.5; 0.0, 0.4], dmatrix![0.0; 1.0]).unwrap();
        let input = Sequence::new(vec![DVector::zeros(1); 8]).unwrap();
        let states = simulate_open_loop(&sys, &input, &dvector![1.0, -1.0]).unwrap();
        let err = recursive_poison(
            &input,
            &states,
            &AttackConfig::new(-2.0, AttackMode::Recursive),
            1e-9,
        );
        assert!(matches!(err, Err(Error::InsufficientExcitation(_))));
    }

    #[test]
    fn overlap_check_accepts_recursive_and_rejects_hankel() {
        let (_, input, states) = two_state_dataset(10, 6);
        let recursive = recursive_poison(
            &input,
            &states,
            &AttackConfig::new(-2.0, AttackMode::Recursive),
            1e-9,
        )
        .unwrap();
        assert!(verify_trajectory_compatible(&recursive, 1e-9));

        let dm = DataMatrices::from_dataset(&input, &states).unwrap();
        let shifted =
            hankel_shift_attack(&dm, &AttackConfig::new(-2.0, AttackMode::HankelShift)).unwrap();
        assert!(!verify_trajectory_compatible(&shifted, 1e-9));

        let unshifted =
            hankel_shift_attack(&dm, &AttackConfig::new(0.0, AttackMode::HankelShift)).unwrap();
        assert!(verify_trajectory_compatible(&unshifted, 1e-9));
    }

    #[test]
    fn hankel_shift_residual_against_shifted_plant() {
        // X+ = A X- + B U implies X~+ = (A + δI) X- + B U exactly.
        let (sys, input, states) = two_state_dataset(9, 7);
        let dm = DataMatrices::from_dataset(&input, &states).unwrap();
        let cfg = AttackConfig::new(-2.0, AttackMode::HankelShift);
        let pd = hankel_shift_attack(&dm, &cfg).unwrap();
        let residual = verify_apparent_model(&pd, &sys, &cfg).unwrap();
        assert!(residual <= 1e-10 * pd.x_plus_tilde().norm().max(1.0));
    }

    #[test]
    fn identify_recovers_true_model_without_attack() {
        let (sys, input, states) = two_state_dataset(10, 8);
        let pd = PoisonedDataset::unpoisoned(&input, &states).unwrap();
        let (a_hat, b_hat) = identify_apparent(&pd, 1e-9).unwrap();
        assert!((&a_hat - sys.a()).norm() <= 1e-7);
        assert!((&b_hat - sys.b()).norm() <= 1e-7);
    }

    #[test]
    fn identify_recovers_shifted_model_after_recursive_attack() {
        let (sys, input, states) = two_state_dataset(10, 9);
        let pd = recursive_poison(
            &input,
            &states,
            &AttackConfig::new(-2.0, AttackMode::Recursive),
            1e-9,
        )
        .unwrap();
        let (a_hat, b_hat) = identify_apparent(&pd, 1e-9).unwrap();
        let expected = sys.a() - DMatrix::identity(2, 2) * 2.0;
        assert!((&a_hat - expected).norm() <= 1e-7);
        assert!((&b_hat - sys.b()).norm() <= 1e-7);
    }

    #[test]
    fn identify_rejects_rank_deficient_data() {
        let input = Sequence::new(vec![DVector::zeros(1); 6]).unwrap();
        let states = Sequence::new(vec![DVector::<f64>::zeros(2); 7]).unwrap();
        let pd = PoisonedDataset::unpoisoned(&input, &states).unwrap();
        assert!(matches!(
            identify_apparent(&pd, 1e-9),
            Err(Error::NonUniqueModel(_))
        ));
    }

    #[test]
    fn envelope_round_trip() {
        let (_, input, states) = two_state_dataset(8, 10);
        let pd = recursive_poison(
            &input,
            &states,
            &AttackConfig::new(-2.5, AttackMode::Recursive),
            1e-9,
        )
        .unwrap();
        let json = serde_json::to_string(&pd.to_envelope()).unwrap();
        let parsed: DatasetEnvelope = serde_json::from_str(&json).unwrap();
        let rebuilt = parsed.to_dataset().unwrap();
        assert_eq!(&rebuilt, &pd);
    }

    #[test]
    fn csv_has_one_row_per_step() {
        let (_, input, states) = two_state_dataset(8, 11);
        let pd = recursive_poison(
            &input,
            &states,
            &AttackConfig::new(-2.0, AttackMode::Recursive),
            1e-9,
        )
        .unwrap();
        let csv = pd.to_csv();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 1 + 8 + 1); // header + T+1 rows
        assert_eq!(lines[0], "k,u_0,x_0,x_1,x_tilde_0,x_tilde_1,delta_0,delta_1");
        // Last row has an empty input field.
        assert!(lines[9].starts_with("8,,"));
        // Initial perturbation is zero.
        assert!(lines[1].ends_with(",0,0"));
    }

    #[test]
    fn original_states_reconstruction_hankel_mode() {
        let (_, input, states) = two_state_dataset(8, 12);
        let dm = DataMatrices::from_dataset(&input, &states).unwrap();
        let pd =
            hankel_shift_attack(&dm, &AttackConfig::new(-2.0, AttackMode::HankelShift)).unwrap();
        let original = pd.original_states();
        for k in 0..=8 {
            assert_relative_eq!(
                (original.sample(k) - states.sample(k)).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn identification_survives_measurement_noise() {
        // No exactness claim under noise; the model must still be unique and
        // close to the shifted plant.
        let (sys, input, states) = two_state_dataset(12, 13);
        let noisy = crate::plant::record_with_noise(
            &states,
            &crate::plant::NoiseConfig::new(0.05, 1.0, 77).unwrap(),
        );
        let pd = recursive_poison(
            &input,
            &noisy,
            &AttackConfig::new(-2.0, AttackMode::Recursive),
            1e-9,
        )
        .unwrap();
        let (a_hat, b_hat) = identify_apparent(&pd, 1e-9).unwrap();
        let shifted = sys.a() - DMatrix::identity(2, 2) * 2.0;
        assert!((&a_hat - shifted).norm() < 0.5);
        assert!((&b_hat - sys.b()).norm() < 0.5);
        let residual = verify_apparent_model(&pd, &sys, pd.attack()).unwrap();
        assert!(residual > 0.0); // reported, not asserted small
    }

    #[test]
    fn recursive_attack_works_in_single_precision() {
        let sys = LtiSystem::<f32>::new(
            nalgebra::dmatrix![0.8f32, 0.5; 0.0, 0.4],
            nalgebra::dmatrix![0.0f32; 1.0],
        )
        .unwrap();
        let mut rng = SeededRng::new(5);
        let input = Sequence::new(
            (0..10)
                .map(|_| DVector::from_fn(1, |_, _| rng.symmetric(1.0f32)))
                .collect(),
        )
        .unwrap();
        let states =
            simulate_open_loop(&sys, &input, &nalgebra::dvector![1.0f32, -1.0]).unwrap();
        let cfg = AttackConfig::new(-2.0f32, AttackMode::Recursive);
        let pd = recursive_poison(&input, &states, &cfg, 1e-5f32).unwrap();
        assert!(verify_trajectory_compatible(&pd, 1e-4f32));
        let residual = verify_apparent_model(&pd, &sys, &cfg).unwrap();
        assert!(residual <= 1e-3 * pd.x_plus_tilde().norm().max(1.0));
    }

    #[test]
    fn effectiveness_threshold_flag() {
        assert!(AttackConfig::new(-2.0, AttackMode::Recursive).effectiveness_guaranteed());
        assert!(AttackConfig::new(2.5, AttackMode::HankelShift).effectiveness_guaranteed());
        assert!(!AttackConfig::new(1.9, AttackMode::Recursive).effectiveness_guaranteed());
    }
}
