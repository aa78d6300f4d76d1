//! Ground-truth LTI plant: simulation, noise injection, closed-loop
//! deployment, and spectral analysis.
//!
//! This is the only module that manipulates the true `(A, B)`. The attacker
//! and planner modules operate purely on recorded data; ground truth enters
//! their signatures only through explicitly named `verify_*` harness
//! operations.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::SeededRng;
use crate::scalar::{from_f64, Scalar};
use crate::signals::Sequence;

/// Discrete-time LTI plant `x(k+1) = A x(k) + B u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
}

impl<T: Scalar> LtiSystem<T> {
    /// Plant from raw matrices; only shapes are validated here. Experiment
    /// presets and file loads go through [`Self::controllable`].
    pub fn new(a: DMatrix<T>, b: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(Error::Dimension(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "B must be {n}x m with m >= 1, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b })
    }

    /// Plant from raw matrices, rejecting uncontrollable pairs.
    pub fn controllable(a: DMatrix<T>, b: DMatrix<T>, rank_tol: T) -> Result<Self> {
        let sys = Self::new(a, b)?;
        let rank = sys.controllability_rank(rank_tol);
        if rank != sys.state_dim() {
            return Err(Error::InvalidInput(format!(
                "(A, B) is not controllable: controllability matrix has rank {rank} < {}",
                sys.state_dim()
            )));
        }
        Ok(sys)
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Rank of `[B, AB, …, A^{n-1}B]`.
    pub fn controllability_rank(&self, rank_tol: T) -> usize {
        let n = self.state_dim();
        let m = self.input_dim();
        let mut ctrb = DMatrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for i in 0..n {
            ctrb.view_mut((0, i * m), (n, m)).copy_from(&block);
            block = &self.a * &block;
        }
        linalg::numerical_rank(&ctrb, rank_tol)
    }
}

/// State-feedback gain `u(k) = K x(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller<T: Scalar> {
    k: DMatrix<T>,
}

impl<T: Scalar> Controller<T> {
    pub fn new(k: DMatrix<T>) -> Result<Self> {
        if k.nrows() == 0 || k.ncols() == 0 {
            return Err(Error::Dimension("gain matrix must be nonempty".into()));
        }
        Ok(Self { k })
    }

    pub fn gain(&self) -> &DMatrix<T> {
        &self.k
    }

    pub fn state_dim(&self) -> usize {
        self.k.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.k.nrows()
    }
}

/// Eigenvalues and stability verdict of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport<T: Scalar> {
    /// All eigenvalues, sorted by (re, im) for a stable ordering.
    pub eigenvalues: Vec<Complex<T>>,
    pub spectral_radius: T,
    pub min_eigen_magnitude: T,
    pub schur_stable: bool,
}

impl<T: Scalar> SpectrumReport<T> {
    pub fn magnitudes(&self) -> Vec<T> {
        self.eigenvalues.iter().map(|l| l.re.hypot(l.im)).collect()
    }

    pub fn summary(&self) -> SpectrumSummary {
        SpectrumSummary {
            eigenvalues: self
                .eigenvalues
                .iter()
                .map(|l| EigenvalueEntry {
                    re: l.re.to_f64().unwrap_or(f64::NAN),
                    im: l.im.to_f64().unwrap_or(f64::NAN),
                })
                .collect(),
            spectral_radius: self.spectral_radius.to_f64().unwrap_or(f64::NAN),
            min_eigen_magnitude: self.min_eigen_magnitude.to_f64().unwrap_or(f64::NAN),
            schur_stable: self.schur_stable,
        }
    }
}

/// One eigenvalue as serialized in reports.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EigenvalueEntry {
    pub re: f64,
    pub im: f64,
}

impl EigenvalueEntry {
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Serializable form of a [`SpectrumReport`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<EigenvalueEntry>,
    pub spectral_radius: f64,
    pub min_eigen_magnitude: f64,
    pub schur_stable: bool,
}

/// All eigenvalues of a real square matrix via the real Schur factorization
/// (Hessenberg reduction + QR iteration of the numeric backend).
pub fn spectrum<T: Scalar>(m: &DMatrix<T>) -> Result<SpectrumReport<T>> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "spectrum needs a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let max_niter = 200 * m.nrows().max(10);
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), T::default_epsilon(), max_niter)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "eigenvalue QR iteration did not converge within {max_niter} iterations \
                 (n = {}, ||M||_F = {:?})",
                m.nrows(),
                m.norm().to_f64()
            ))
        })?;
    let mut eigenvalues: Vec<Complex<T>> = schur.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .expect("eigenvalues of a finite matrix are finite")
    });
    let magnitudes: Vec<T> = eigenvalues.iter().map(|l| l.re.hypot(l.im)).collect();
    let spectral_radius = magnitudes.iter().copied().fold(T::zero(), T::max);
    let min_eigen_magnitude = magnitudes
        .iter()
        .copied()
        .fold(T::max_value().unwrap_or_else(T::one), T::min);
    Ok(SpectrumReport {
        eigenvalues,
        spectral_radius,
        min_eigen_magnitude,
        schur_stable: spectral_radius < T::one(),
    })
}

/// Simulate `x(k+1) = A x(k) + B u(k)` for the whole input sequence.
/// Returns the state sequence `x(0), …, x(T)` of length `T + 1`.
pub fn simulate_open_loop<T: Scalar>(
    sys: &LtiSystem<T>,
    input: &Sequence<T>,
    x0: &DVector<T>,
) -> Result<Sequence<T>> {
    if input.dim() != sys.input_dim() {
        return Err(Error::Dimension(format!(
            "input dimension {} does not match plant input dimension {}",
            input.dim(),
            sys.input_dim()
        )));
    }
    if x0.len() != sys.state_dim() {
        return Err(Error::Dimension(format!(
            "x0 has dimension {}, plant state dimension is {}",
            x0.len(),
            sys.state_dim()
        )));
    }
    let mut states = Vec::with_capacity(input.len() + 1);
    states.push(x0.clone());
    for k in 0..input.len() {
        let next = &sys.a * &states[k] + &sys.b * input.sample(k);
        states.push(next);
    }
    Sequence::new(states)
}

/// Measurement-noise model for the offline data-collection phase.
///
/// Raw noise samples `w(k)` are componentwise uniform in `[-bound, bound]`
/// and enter only the recorded states, scaled by `alpha`; the dynamics stay
/// noise-free.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseConfig {
    pub bound: f64,
    pub scale_alpha: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(bound: f64, scale_alpha: f64, seed: u64) -> Result<Self> {
        if !(bound >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise bound must be >= 0, got {bound}"
            )));
        }
        Ok(Self {
            bound,
            scale_alpha,
            seed,
        })
    }

    /// No-noise configuration.
    pub fn none() -> Self {
        Self {
            bound: 0.0,
            scale_alpha: 0.0,
            seed: 0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.bound > 0.0 && self.scale_alpha != 0.0
    }
}

/// The raw noise matrix `W` (`dim × count`, unscaled by `alpha`) that
/// [`record_with_noise`] adds. Exposed so noise-to-signal ratios can be
/// computed from exactly the realization that entered the record.
pub fn noise_matrix<T: Scalar>(cfg: &NoiseConfig, dim: usize, count: usize) -> DMatrix<T> {
    let mut rng = SeededRng::new(cfg.seed);
    let bound = from_f64::<T>(cfg.bound);
    // Draw sample by sample (column-major), component by component.
    DMatrix::from_fn(dim, count, |_, _| rng.symmetric(bound))
}

/// Recorded states `x(k) + alpha * w(k)`; reproducible from `cfg.seed`.
pub fn record_with_noise<T: Scalar>(true_states: &Sequence<T>, cfg: &NoiseConfig) -> Sequence<T> {
    let w = noise_matrix::<T>(cfg, true_states.dim(), true_states.len());
    let alpha = from_f64::<T>(cfg.scale_alpha);
    let recorded = true_states
        .samples()
        .iter()
        .enumerate()
        .map(|(k, x)| x + w.column(k).into_owned() * alpha)
        .collect();
    Sequence::new(recorded).expect("recorded sequence mirrors a valid sequence")
}

/// Closed-loop matrix `A + B K`.
pub fn closed_loop_matrix<T: Scalar>(
    sys: &LtiSystem<T>,
    ctrl: &Controller<T>,
) -> Result<DMatrix<T>> {
    if ctrl.state_dim() != sys.state_dim() || ctrl.input_dim() != sys.input_dim() {
        return Err(Error::Dimension(format!(
            "gain is {}x{}, plant expects {}x{}",
            ctrl.input_dim(),
            ctrl.state_dim(),
            sys.input_dim(),
            sys.state_dim()
        )));
    }
    Ok(&sys.a + &sys.b * ctrl.gain())
}

/// Closed-loop simulation result.
#[derive(Debug, Clone)]
pub struct ClosedLoopRun<T: Scalar> {
    pub states: Sequence<T>,
    pub diverged: bool,
    /// True when the iteration was frozen early to avoid overflow.
    pub saturated: bool,
}

/// Iterate `x(k+1) = (A + BK) x(k)` for `horizon` steps.
///
/// The run is flagged divergent when the final norm exceeds
/// `divergence_factor * ||x0||`. If the norm approaches the floating-point
/// ceiling the iteration saturates (the state is frozen) and the run is
/// flagged divergent.
pub fn simulate_closed_loop<T: Scalar>(
    sys: &LtiSystem<T>,
    ctrl: &Controller<T>,
    x0: &DVector<T>,
    horizon: usize,
    divergence_factor: T,
) -> Result<ClosedLoopRun<T>> {
    if x0.len() != sys.state_dim() {
        return Err(Error::Dimension(format!(
            "x0 has dimension {}, plant state dimension is {}",
            x0.len(),
            sys.state_dim()
        )));
    }
    let acl = closed_loop_matrix(sys, ctrl)?;
    let saturation_cap = T::max_value().unwrap_or_else(T::one).sqrt();
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(x0.clone());
    let mut saturated = false;
    for k in 0..horizon {
        if saturated {
            states.push(states[k].clone());
            continue;
        }
        let next = &acl * &states[k];
        if next.norm() > saturation_cap || next.iter().any(|v| !v.is_finite()) {
            saturated = true;
            states.push(states[k].clone());
        } else {
            states.push(next);
        }
    }
    let diverged = saturated || states[horizon].norm() > divergence_factor * x0.norm();
    Ok(ClosedLoopRun {
        states: Sequence::new(states)?,
        diverged,
        saturated,
    })
}

/// The 4-state, 2-input discrete-time batch reactor benchmark plant.
pub fn batch_reactor_preset<T: Scalar>() -> LtiSystem<T> {
    let a =DMatrix::from_row_slice(
        4,
        4,
        &[
            1.178, 0.001, 0.511, -0.403, //
            -0.051, 0.661, -0.011, 0.061, //
            0.076, 0.335, 0.560, 0.382, //
            0.0, 0.335, 0.089, 0.849,
        ],
    )
    .map(from_f64::<T>);
    let b = DMatrix::from_row_slice(
        4,
        2,
        &[
            0.004, -0.087, //
            0.467, 0.001, //
            0.213, -0.235, //
            0.213, -0.016,
        ],
    )
    .map(from_f64::<T>);
    LtiSystem::controllable(a, b, linalg::default_rank_tol::<T>())
        .expect("batch reactor preset is controllable")
}

/// Parse a plant from the plain-text format: header `n m`, then the `n × n`
/// matrix `A` and the `n × m` matrix `B`, row-major, whitespace-separated.
pub fn parse_plant_text<T: Scalar>(text: &str) -> Result<LtiSystem<T>> {
    let mut tokens = text.split_whitespace();
    let mut next_usize = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
    };
    let n = next_usize("state dimension n")?;
    let m = next_usize("input dimension m")?;
    if n == 0 || m == 0 {
        return Err(Error::Parse("n and m must be >= 1".into()));
    }
    let mut values = Vec::with_capacity(n * n + n * m);
    for tok in tokens.by_ref().take(n * n + n * m) {
        values.push(
            tok.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad matrix entry `{tok}`: {e}")))?,
        );
    }
    if values.len() != n * n + n * m {
        return Err(Error::Parse(format!(
            "expected {} matrix entries, found {}",
            n * n + n * m,
            values.len()
        )));
    }
    if tokens.next().is_some() {
        return Err(Error::Parse("trailing data after matrix entries".into()));
    }
    let a = DMatrix::from_row_slice(n, n, &values[..n * n]).map(from_f64::<T>);
    let b = DMatrix::from_row_slice(n, m, &values[n * n..]).map(from_f64::<T>);
    LtiSystem::controllable(a, b, linalg::default_rank_tol::<T>())
}

/// Load a plant from a plain-text matrix file (see [`parse_plant_text`]).
pub fn load_plant_file<T: Scalar>(path: &Path) -> Result<LtiSystem<T>> {
    parse_plant_text(&std::fs::read_to_string(path)?)
}

/// Render a plant in the plain-text matrix format accepted by
/// [`parse_plant_text`].
pub fn plant_to_text<T: Scalar>(sys: &LtiSystem<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", sys.state_dim(), sys.input_dim());
    for matrix in [sys.a(), sys.b()] {
        for i in 0..matrix.nrows() {
            let row: Vec<String> = (0..matrix.ncols())
                .map(|j| format!("{}", matrix[(i, j)].to_f64().unwrap_or(f64::NAN)))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn scalar_sys(a: f64, b: f64) -> LtiSystem<f64> {
        LtiSystem::new(dmatrix![a], dmatrix![b]).unwrap()
    }

    #[test]
    fn open_loop_zero_dynamics_replays_input() {
        let sys = LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        let input = Sequence::new(vec![dvector![1.0, 2.0], dvector![-3.0, 0.5]]).unwrap();
        let states = simulate_open_loop(&sys, &input, &DVector::zeros(2)).unwrap();
        assert_eq!(states.sample(0), &dvector![0.0, 0.0]);
        assert_eq!(states.sample(1), &dvector![1.0, 2.0]);
        assert_eq!(states.sample(2), &dvector![-3.0, 0.5]);
    }

    #[test]
    fn open_loop_frozen_dynamics_holds_state() {
        let sys = LtiSystem::new(DMatrix::identity(3, 3), DMatrix::zeros(3, 1)).unwrap();
        let input = Sequence::from_scalars(&[1.0, -1.0, 5.0]).unwrap();
        let v = dvector![0.3, -0.7, 2.0];
        let states = simulate_open_loop(&sys, &input, &v).unwrap();
        for k in 0..=3 {
            assert_eq!(states.sample(k), &v);
        }
    }

    #[test]
    fn open_loop_rejects_dimension_mismatch() {
        let sys = batch_reactor_preset::<f64>();
        let input = Sequence::from_scalars(&[1.0]).unwrap(); // m = 1, plant wants 2
        assert!(simulate_open_loop(&sys, &input, &DVector::zeros(4)).is_err());
    }

    #[test]
    fn record_with_zero_bound_is_identity() {
        let states = Sequence::new(vec![dvector![1.0, 2.0], dvector![3.0, 4.0]]).unwrap();
        let recorded = record_with_noise(&states, &NoiseConfig::new(0.0, 1.0, 9).unwrap());
        assert_eq!(&recorded, &states);
    }

    #[test]
    fn record_noise_respects_scaled_bound() {
        let states = Sequence::new(vec![DVector::<f64>::zeros(3); 20]).unwrap();
        let cfg = NoiseConfig::new(0.05, 0.5, 42).unwrap();
        let recorded = record_with_noise(&states, &cfg);
        for k in 0..recorded.len() {
            for i in 0..3 {
                assert!(recorded.sample(k)[i].abs() <= 0.5 * 0.05);
            }
        }
    }

    #[test]
    fn record_noise_is_reproducible() {
        let states = Sequence::new(vec![dvector![1.0, -1.0]; 7]).unwrap();
        let cfg = NoiseConfig::new(0.05, 1.0, 1234).unwrap();
        assert_eq!(
            record_with_noise(&states, &cfg),
            record_with_noise(&states, &cfg)
        );
    }

    #[test]
    fn noise_matrix_matches_record() {
        let states = Sequence::new(vec![DVector::<f64>::zeros(2); 5]).unwrap();
        let cfg = NoiseConfig::new(0.1, 2.0, 7).unwrap();
        let recorded = record_with_noise(&states, &cfg);
        let w = noise_matrix::<f64>(&cfg, 2, 5);
        for k in 0..5 {
            assert_relative_eq!(recorded.sample(k)[0], 2.0 * w[(0, k)]);
            assert_relative_eq!(recorded.sample(k)[1], 2.0 * w[(1, k)]);
        }
    }

    #[test]
    fn closed_loop_matrix_degenerate_cases() {
        let sys = batch_reactor_preset::<f64>();
        let zero_k = Controller::new(DMatrix::zeros(2, 4)).unwrap();
        assert_eq!(&closed_loop_matrix(&sys, &zero_k).unwrap(), sys.a());

        let no_input = LtiSystem::new(dmatrix![0.7, 0.1; 0.0, 0.3], DMatrix::zeros(2, 1)).unwrap();
        let k = Controller::new(dmatrix![5.0, -2.0]).unwrap();
        assert_eq!(&closed_loop_matrix(&no_input, &k).unwrap(), no_input.a());
    }

    #[test]
    fn closed_loop_matrix_scalar_arithmetic() {
        let sys = scalar_sys(2.0, 1.0);
        let k = Controller::new(dmatrix![-1.5]).unwrap();
        assert_relative_eq!(closed_loop_matrix(&sys, &k).unwrap()[(0, 0)], 0.5);
    }

    #[test]
    fn spectrum_of_identity() {
        let report = spectrum(&DMatrix::<f64>::identity(4, 4)).unwrap();
        assert_eq!(report.eigenvalues.len(), 4);
        for l in &report.eigenvalues {
            assert_relative_eq!(l.re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(l.im, 0.0, epsilon = 1e-12);
        }
        assert_relative_eq!(report.spectral_radius, 1.0, epsilon = 1e-12);
        assert!(!report.schur_stable);
    }

    #[test]
    fn spectrum_shift_identity_small_case() {
        let m = dmatrix![0.2, 1.0; -0.4, 0.9];
        let delta = -2.0;
        let shifted = &m + DMatrix::identity(2, 2) * delta;
        let base = spectrum(&m).unwrap();
        let moved = spectrum(&shifted).unwrap();
        for (a, b) in base.eigenvalues.iter().zip(moved.eigenvalues.iter()) {
            assert_relative_eq!(a.re + delta, b.re, epsilon = 1e-10);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn spectrum_rejects_nonsquare() {
        assert!(spectrum(&DMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn closed_loop_scalar_divergence() {
        // 1.5^40 ≈ 1.1e7 exceeds the 1e6 threshold.
        let sys = scalar_sys(1.5, 1.0);
        let k = Controller::new(dmatrix![0.0]).unwrap();
        let run = simulate_closed_loop(&sys, &k, &dvector![1.0], 40, 1e6).unwrap();
        assert!(run.diverged);
        assert_relative_eq!(run.states.sample(40)[0], 1.5f64.powi(40), max_relative = 1e-12);
    }

    #[test]
    fn closed_loop_stable_converges() {
        let sys = scalar_sys(0.5, 1.0);
        let k = Controller::new(dmatrix![0.0]).unwrap();
        let run = simulate_closed_loop(&sys, &k, &dvector![1.0], 50, 1e6).unwrap();
        assert!(!run.diverged);
        assert!(run.states.sample(50)[0].abs() < 1e-10);
    }

    #[test]
    fn closed_loop_saturates_instead_of_overflowing() {
        let sys = scalar_sys(1e3, 1.0);
        let k = Controller::new(dmatrix![0.0]).unwrap();
        let run = simulate_closed_loop(&sys, &k, &dvector![1.0], 200, 1e6).unwrap();
        assert!(run.saturated);
        assert!(run.diverged);
        assert!(run.states.sample(200)[0].is_finite());
    }

    #[test]
    fn batch_reactor_shape_and_entries() {
        let sys = batch_reactor_preset::<f64>();
        assert_eq!(sys.state_dim(), 4);
        assert_eq!(sys.input_dim(), 2);
        assert_relative_eq!(sys.a()[(0, 0)], 1.178);
        assert_relative_eq!(sys.a()[(3, 1)], 0.335);
        assert_relative_eq!(sys.b()[(0, 1)], -0.087);
        assert_eq!(sys.controllability_rank(1e-9), 4);
    }

    #[test]
    fn batch_reactor_one_step_residual_is_exact() {
        let sys = batch_reactor_preset::<f64>();
        let mut rng = crate::rng::SeededRng::new(5);
        let input = Sequence::new(
            (0..15)
                .map(|_| DVector::from_fn(2, |_, _| rng.symmetric(1.0)))
                .collect(),
        )
        .unwrap();
        let states = simulate_open_loop(&sys, &input, &DVector::zeros(4)).unwrap();
        for k in 0..15 {
            let predicted = sys.a() * states.sample(k) + sys.b() * input.sample(k);
            assert_eq!(states.sample(k + 1), &predicted);
        }
    }

    #[test]
    fn plant_text_round_trip() {
        let sys = batch_reactor_preset::<f64>();
        let text = plant_to_text(&sys);
        let reparsed = parse_plant_text::<f64>(&text).unwrap();
        assert_eq!(reparsed.a(), sys.a());
        assert_eq!(reparsed.b(), sys.b());
    }

    #[test]
    fn plant_text_rejects_malformed_input() {
        assert!(parse_plant_text::<f64>("").is_err());
        assert!(parse_plant_text::<f64>("2 1\n1 0 0 1").is_err()); // missing B
        assert!(parse_plant_text::<f64>("1 1\n0.5 1.0 extra").is_err());
        assert!(parse_plant_text::<f64>("1 1\nfoo bar").is_err());
        // Uncontrollable pair: B = 0.
        assert!(parse_plant_text::<f64>("1 1\n0.5\n0").is_err());
    }

    #[test]
    fn controller_validates_shape() {
        assert!(Controller::<f64>::new(DMatrix::zeros(0, 4)).is_err());
    }

    #[test]
    fn noise_config_rejects_negative_bound() {
        assert!(NoiseConfig::new(-0.1, 1.0, 0).is_err());
    }
}
