//! Data-driven controller synthesis from (possibly poisoned) datasets.
//!
//! The planner never sees the true plant: it identifies the unique model
//! consistent with the dataset and stabilizes that model. Two interchangeable
//! strategies are provided — LQR through a discrete Riccati fixed-point
//! iteration, and pole placement through a Sylvester equation — and every
//! successful synthesis certifies Schur stability of the apparent closed
//! loop. Whatever the strategy, deploying the gain on the true plant is
//! subject to the spectral-shift algebra verified in
//! [`verify_g_composition`].

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::attacker::{identify_apparent, PoisonedDataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::plant::{spectrum, Controller, SpectrumReport};
use crate::rng::SeededRng;
use crate::scalar::{from_f64, Scalar};
use crate::signals::DataMatrices;

/// LQR weights; symmetric positive-definite, checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrWeights<T: Scalar> {
    q: DMatrix<T>,
    r: DMatrix<T>,
}

impl<T: Scalar> LqrWeights<T> {
    pub fn new(q: DMatrix<T>, r: DMatrix<T>) -> Result<Self> {
        for (name, m) in [("Q", &q), ("R", &r)] {
            if m.nrows() != m.ncols() || m.nrows() == 0 {
                return Err(Error::InvalidInput(format!("{name} must be square")));
            }
            let asym = (m - m.transpose()).norm();
            if asym > from_f64::<T>(1e-12) * m.norm().max(T::one()) {
                return Err(Error::InvalidInput(format!("{name} must be symmetric")));
            }
            if m.clone().cholesky().is_none() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive definite"
                )));
            }
        }
        Ok(Self { q, r })
    }

    /// Q = I_n, R = I_m.
    pub fn identity(state_dim: usize, input_dim: usize) -> Self {
        Self {
            q: DMatrix::identity(state_dim, state_dim),
            r: DMatrix::identity(input_dim, input_dim),
        }
    }

    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }
}

/// Synthesis strategy used to produce a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMethod {
    Lqr,
    PolePlacement,
}

impl std::fmt::Display for SynthesisMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SynthesisMethod::Lqr => write!(f, "lqr"),
            SynthesisMethod::PolePlacement => write!(f, "pole_placement"),
        }
    }
}

/// Residual diagnostics attached to every certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisDiagnostics<T: Scalar> {
    /// `‖[X̃₋; U] G - [I; K]‖_F` for the recovered decision matrix.
    pub g_residual: T,
    /// Riccati fixed-point residual `‖P - f(P)‖_F` (LQR only).
    pub dare_residual: Option<T>,
    pub dare_iterations: Option<usize>,
    /// `‖Ahat X - X F - Bhat G_aux‖_F / max(1, ‖Ahat‖_F ‖X‖_F)` (placement only).
    pub sylvester_relative_residual: Option<T>,
    /// Max sorted-pairing distance between achieved and requested spectra
    /// (placement only).
    pub placement_error: Option<T>,
}

/// Outcome of a successful synthesis: the gain, the identified model it
/// stabilizes, the certified apparent closed-loop spectrum, and the decision
/// matrix `G` solving `[X̃₋; U] G = [I; K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisCertificate<T: Scalar> {
    pub controller: Controller<T>,
    pub apparent_a: DMatrix<T>,
    pub apparent_b: DMatrix<T>,
    pub apparent_closed_loop: SpectrumReport<T>,
    pub method: SynthesisMethod,
    /// `T × n` decision matrix (minimum-norm solution).
    pub g: DMatrix<T>,
    pub diagnostics: SynthesisDiagnostics<T>,
}

impl<T: Scalar> SynthesisCertificate<T> {
    pub fn gain(&self) -> &DMatrix<T> {
        self.controller.gain()
    }

    pub fn summary(&self) -> CertificateSummary {
        let d = &self.diagnostics;
        CertificateSummary {
            method: self.method,
            gain: linalg::matrix_to_rows(self.gain()),
            apparent_spectrum: self.apparent_closed_loop.summary(),
            g_residual: d.g_residual.to_f64().unwrap_or(f64::NAN),
            dare_residual: d.dare_residual.and_then(|v| v.to_f64()),
            dare_iterations: d.dare_iterations,
            sylvester_relative_residual: d.sylvester_relative_residual.and_then(|v| v.to_f64()),
            placement_error: d.placement_error.and_then(|v| v.to_f64()),
        }
    }
}

/// Serializable form of a [`SynthesisCertificate`]: gain entries, method,
/// apparent closed-loop spectrum, and residual diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub method: SynthesisMethod,
    /// Row-major `m × n` gain.
    pub gain: Vec<Vec<f64>>,
    pub apparent_spectrum: crate::plant::SpectrumSummary,
    pub g_residual: f64,
    pub dare_residual: Option<f64>,
    pub dare_iterations: Option<usize>,
    pub sylvester_relative_residual: Option<f64>,
    pub placement_error: Option<f64>,
}

/// Recover the minimum-norm `G` with `[X̃₋; U] G = [I; K]` and its residual.
fn recover_decision_matrix<T: Scalar>(
    pd: &PoisonedDataset<T>,
    gain: &DMatrix<T>,
    rank_tol: T,
) -> Result<(DMatrix<T>, T)> {
    let n = pd.state_dim();
    let stack = pd.stacked_tilde();
    let rhs = linalg::vstack(&DMatrix::identity(n, n), gain)?;
    let g = linalg::min_norm_solve(&stack, &rhs, rank_tol)?;
    let residual = (&stack * &g - rhs).norm();
    Ok((g, residual))
}

/// Converged solution of the discrete algebraic Riccati equation.
#[derive(Debug, Clone, PartialEq)]
pub struct DareSolution<T: Scalar> {
    /// Symmetric positive-definite fixed point.
    pub p: DMatrix<T>,
    /// `K = -(R + BᵀPB)⁻¹ BᵀPA`, so the closed loop is `A + BK`.
    pub gain: DMatrix<T>,
    /// `‖P - f(P)‖_F` recomputed at the fixed point.
    pub residual: T,
    pub iterations: usize,
}

/// Solve the DARE for `(a, b)` by fixed-point value iteration
/// `P ← AᵀPA - AᵀPB (R + BᵀPB)⁻¹ BᵀPA + Q`, refined to the final tolerance
/// by policy (Hewer) steps.
///
/// Plain value iteration accumulates rounding noise at a floor around
/// `eps · ‖A‖² · ‖P‖ / (1 - contraction)`, which for stiff plants sits above
/// tight tolerances. Once the coarse iterate stabilizes the gain, each
/// refinement step re-solves `P` from a Stein equation directly, so the last
/// digits come from a direct solve instead of an accumulating recursion.
pub fn solve_dare<T: Scalar>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    weights: &LqrWeights<T>,
    tol: T,
    max_iter: usize,
) -> Result<DareSolution<T>> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::Dimension(format!(
            "DARE needs square A and conforming B, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if weights.q.nrows() != n || weights.r.nrows() != m {
        return Err(Error::Dimension(format!(
            "weights are {}x{} / {}x{}, model is n = {n}, m = {m}",
            weights.q.nrows(),
            weights.q.ncols(),
            weights.r.nrows(),
            weights.r.ncols()
        )));
    }

    let a_t = a.transpose();
    let b_t = b.transpose();
    let gain_for = |p: &DMatrix<T>| -> Result<DMatrix<T>> {
        let btpb = &weights.r + &b_t * p * b;
        let inv = btpb.try_inverse().ok_or_else(|| {
            Error::Synthesis("R + BᵀPB became singular during the Riccati iteration".into())
        })?;
        Ok(-(&inv * &b_t * p * a))
    };
    let riccati_image = |p: &DMatrix<T>| -> Result<DMatrix<T>> {
        let btpb = &weights.r + &b_t * p * b;
        let inv = btpb.try_inverse().ok_or_else(|| {
            Error::Synthesis("R + BᵀPB became singular during the Riccati iteration".into())
        })?;
        let image = &a_t * p * a - &a_t * p * b * &inv * &b_t * p * a + &weights.q;
        Ok((&image + image.transpose()) * from_f64::<T>(0.5))
    };

    let coarse_tol = tol.max(from_f64::<T>(1e-6));
    let mut p = weights.q.clone();
    let mut iterations = 0;
    let mut coarse_done = false;
    while iterations < max_iter {
        iterations += 1;
        let next = riccati_image(&p)?;
        let step = (&next - &p).norm();
        p = next;
        if step < coarse_tol {
            coarse_done = true;
            break;
        }
    }
    if !coarse_done {
        return Err(Error::Synthesis(format!(
            "Riccati value iteration did not reach {:?} within {max_iter} iterations",
            coarse_tol.to_f64()
        )));
    }

    // Near the fixed point of a stiff problem successive Stein solutions can
    // jitter by more than the fixed-point residual they each achieve, so the
    // loop also accepts on a direct residual certificate and keeps the best
    // iterate seen.
    let mut converged = false;
    let mut best: Option<(T, DMatrix<T>)> = None;
    for _ in 0..50 {
        iterations += 1;
        let gain = gain_for(&p)?;
        let closed = a + b * &gain;
        if spectrum(&closed)?.spectral_radius >= T::one() {
            // Not yet in the stabilizing region; keep value-iterating.
            p = riccati_image(&p)?;
            continue;
        }
        let cost = &weights.q + gain.transpose() * &weights.r * &gain;
        let next = crate::linalg::solve_stein(&closed, &cost)?;
        let step = (&next - &p).norm();
        let residual = (riccati_image(&next)? - &next).norm();
        if best.as_ref().map_or(true, |(r, _)| residual < *r) {
            best = Some((residual, next.clone()));
        }
        p = next;
        if step < tol || residual <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Synthesis(format!(
            "Riccati iteration did not reach tol {:?} within {max_iter} iterations",
            tol.to_f64()
        )));
    }
    if let Some((_, best_p)) = best {
        p = best_p;
    }
    if p.clone().cholesky().is_none() {
        return Err(Error::Synthesis(
            "converged Riccati solution is not positive definite".into(),
        ));
    }
    let gain = gain_for(&p)?;
    let residual = (riccati_image(&p)? - &p).norm();
    Ok(DareSolution {
        p,
        gain,
        residual,
        iterations,
    })
}

/// LQR synthesis on the identified data-consistent model.
///
/// Identifies `(Ahat, Bhat)`, solves the DARE (see [`solve_dare`]), and
/// certifies `ρ(Ahat + Bhat K) < 1`.
pub fn synthesize_lqr<T: Scalar>(
    pd: &PoisonedDataset<T>,
    weights: &LqrWeights<T>,
    tol: T,
    max_iter: usize,
    rank_tol: T,
) -> Result<SynthesisCertificate<T>> {
    let (a, b) = identify_apparent(pd, rank_tol)?;
    let solution = solve_dare(&a, &b, weights, tol, max_iter)?;
    let gain = solution.gain;

    let closed = &a + &b * &gain;
    let apparent_closed_loop = spectrum(&closed)?;
    if !apparent_closed_loop.schur_stable {
        return Err(Error::Synthesis(format!(
            "LQR gain fails to stabilize the identified model (rho = {:?})",
            apparent_closed_loop.spectral_radius.to_f64()
        )));
    }
    let (g, g_residual) = recover_decision_matrix(pd, &gain, rank_tol)?;
    Ok(SynthesisCertificate {
        controller: Controller::new(gain)?,
        apparent_a: a,
        apparent_b: b,
        apparent_closed_loop,
        method: SynthesisMethod::Lqr,
        g,
        diagnostics: SynthesisDiagnostics {
            g_residual,
            dare_residual: Some(solution.residual),
            dare_iterations: Some(solution.iterations),
            sylvester_relative_residual: None,
            placement_error: None,
        },
    })
}

/// A conjugate-closed target spectrum, realized as a real block-diagonal
/// matrix (1×1 blocks for real targets, 2×2 rotation-scaled blocks for
/// conjugate pairs). Repeated targets are spread apart by 1e-3 so the
/// Sylvester solution stays generically invertible.
#[derive(Debug, Clone)]
pub struct TargetSpectrum<T: Scalar> {
    realized: Vec<Complex<T>>,
    block_diagonal: DMatrix<T>,
}

impl<T: Scalar> TargetSpectrum<T> {
    /// Validate conjugate closure and build the realization.
    pub fn new(targets: &[Complex<T>]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidInput("target spectrum is empty".into()));
        }
        let pair_tol = from_f64::<T>(1e-9);
        let mut reals: Vec<T> = Vec::new();
        let mut uppers: Vec<Complex<T>> = Vec::new();
        let mut lowers: Vec<Complex<T>> = Vec::new();
        for t in targets {
            if t.im == T::zero() {
                reals.push(t.re);
            } else if t.im > T::zero() {
                uppers.push(*t);
            } else {
                lowers.push(*t);
            }
        }
        // Every strictly-complex target must pair with its conjugate.
        if uppers.len() != lowers.len() {
            return Err(Error::InvalidInput(
                "target spectrum is not closed under conjugation".into(),
            ));
        }
        let mut remaining = lowers;
        for u in &uppers {
            let scale = T::one() + u.re.hypot(u.im);
            let found = remaining.iter().position(|l| {
                (l.re - u.re).abs() <= pair_tol * scale && (l.im + u.im).abs() <= pair_tol * scale
            });
            match found {
                Some(i) => {
                    remaining.swap_remove(i);
                }
                None => {
                    return Err(Error::InvalidInput(
                        "target spectrum is not closed under conjugation".into(),
                    ))
                }
            }
        }

        // Spread repeated targets by 1e-3 along the real axis, moving toward
        // zero so Schur-stable requests stay inside the unit disc.
        let spacing = from_f64::<T>(1e-3);
        let dup_tol = from_f64::<T>(1e-9);
        let spread_real = |seen: &mut Vec<(T, T, usize)>, re: T, im: T| -> T {
            for (sre, sim, count) in seen.iter_mut() {
                if (*sre - re).abs() <= dup_tol * (T::one() + re.abs())
                    && (*sim - im).abs() <= dup_tol * (T::one() + im.abs())
                {
                    *count += 1;
                    let offset = spacing * from_f64::<T>(*count as f64 - 1.0);
                    let direction = if re >= T::zero() { -T::one() } else { T::one() };
                    return re + direction * offset;
                }
            }
            seen.push((re, im, 1));
            re
        };

        let mut realized = Vec::with_capacity(targets.len());
        let mut blocks: Vec<DMatrix<T>> = Vec::new();
        let mut seen: Vec<(T, T, usize)> = Vec::new();
        reals.sort_by(|x, y| x.partial_cmp(y).expect("finite targets"));
        for re in reals {
            let re = spread_real(&mut seen, re, T::zero());
            realized.push(Complex::new(re, T::zero()));
            blocks.push(DMatrix::from_element(1, 1, re));
        }
        uppers.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("finite targets")
        });
        for u in uppers {
            let re = spread_real(&mut seen, u.re, u.im);
            let im = u.im;
            realized.push(Complex::new(re, im));
            realized.push(Complex::new(re, -im));
            blocks.push(DMatrix::from_row_slice(
                2,
                2,
                &[re, im, -im, re],
            ));
        }

        let n = targets.len();
        let mut block_diagonal = DMatrix::zeros(n, n);
        let mut offset = 0;
        for b in blocks {
            let s = b.nrows();
            block_diagonal.view_mut((offset, offset), (s, s)).copy_from(&b);
            offset += s;
        }
        Ok(Self {
            realized,
            block_diagonal,
        })
    }

    /// The targets actually realized (after duplicate spreading), sorted by
    /// (re, im).
    pub fn realized(&self) -> Vec<Complex<T>> {
        let mut out = self.realized.clone();
        out.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("finite targets")
        });
        out
    }

    pub fn block_diagonal(&self) -> &DMatrix<T> {
        &self.block_diagonal
    }

    pub fn is_schur_stable(&self) -> bool {
        self.realized
            .iter()
            .all(|l| l.re.hypot(l.im) < T::one())
    }
}

/// Max sorted-pairing distance between two spectra of equal size.
pub fn spectrum_distance<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    let sort = |xs: &[Complex<T>]| {
        let mut v = xs.to_vec();
        v.sort_by(|p, q| {
            (p.re, p.im)
                .partial_cmp(&(q.re, q.im))
                .expect("finite eigenvalues")
        });
        v
    };
    sort(a)
        .iter()
        .zip(sort(b).iter())
        .map(|(p, q)| (p.re - q.re).hypot(p.im - q.im))
        .fold(T::zero(), T::max)
}

/// Pole placement on the identified data-consistent model, certifying the
/// achieved spectrum against the realized targets to the default 1e-6.
///
/// See [`synthesize_pole_placement_with_tol`] for the tolerance-parameterized
/// form (tightly clustered targets are ill-conditioned and may need a looser
/// certification gate).
pub fn synthesize_pole_placement<T: Scalar>(
    pd: &PoisonedDataset<T>,
    targets: &[Complex<T>],
    max_retries: usize,
    rng: &mut SeededRng,
    rank_tol: T,
) -> Result<SynthesisCertificate<T>> {
    synthesize_pole_placement_with_tol(
        pd,
        targets,
        max_retries,
        rng,
        rank_tol,
        from_f64(crate::defaults::PLACEMENT_TOL),
    )
}

/// Pole placement on the identified data-consistent model.
///
/// Draws a random auxiliary matrix `G_aux`, solves the Sylvester equation
/// `Ahat X - X F = Bhat G_aux` for the realization `F` of the target
/// spectrum, and sets `K = -G_aux X⁻¹`, retrying with a fresh draw whenever
/// `X` is singular. The achieved spectrum is certified against the realized
/// targets to `placement_tol`; Schur stability of the apparent closed loop
/// is certified unconditionally.
pub fn synthesize_pole_placement_with_tol<T: Scalar>(
    pd: &PoisonedDataset<T>,
    targets: &[Complex<T>],
    max_retries: usize,
    rng: &mut SeededRng,
    rank_tol: T,
    placement_tol: T,
) -> Result<SynthesisCertificate<T>> {
    let (a, b) = identify_apparent(pd, rank_tol)?;
    let n = a.nrows();
    let m = b.ncols();
    if targets.len() != n {
        return Err(Error::InvalidInput(format!(
            "expected {n} targets for an {n}-state model, got {}",
            targets.len()
        )));
    }
    let spec = TargetSpectrum::new(targets)?;
    if !spec.is_schur_stable() {
        return Err(Error::Synthesis(
            "target spectrum lies outside the unit disc; synthesis must stabilize \
             the data-consistent model"
                .into(),
        ));
    }
    let apparent_eigs = spectrum(&a)?.eigenvalues;
    let disjoint_tol = from_f64::<T>(1e-9) * (T::one() + a.norm());
    for target in spec.realized() {
        for lam in &apparent_eigs {
            if (target.re - lam.re).hypot(target.im - lam.im) <= disjoint_tol {
                return Err(Error::InvalidInput(format!(
                    "target {:?} collides with an open-loop eigenvalue of the identified model",
                    (target.re.to_f64(), target.im.to_f64())
                )));
            }
        }
    }

    let f = spec.block_diagonal();
    let singular_tol = from_f64::<T>(1e-12);
    let mut last_failure = String::from("no attempts made");
    for _ in 0..max_retries.max(1) {
        let g_aux = DMatrix::from_fn(m, n, |_, _| rng.symmetric(T::one()));
        let rhs = &b * &g_aux;
        let x = match linalg::solve_sylvester(&a, f, &rhs) {
            Ok(x) => x,
            Err(e) => {
                last_failure = format!("Sylvester solve failed: {e}");
                continue;
            }
        };
        if linalg::numerical_rank(&x, singular_tol) != n {
            last_failure = "Sylvester solution X is singular".into();
            continue;
        }
        let x_inv = match x.clone().try_inverse() {
            Some(inv) => inv,
            None => {
                last_failure = "Sylvester solution X is singular".into();
                continue;
            }
        };
        let gain = -(&g_aux * &x_inv);
        let closed = &a + &b * &gain;
        let achieved = spectrum(&closed)?;
        let placement_error = spectrum_distance(&achieved.eigenvalues, &spec.realized());
        if placement_error > placement_tol {
            last_failure = format!(
                "achieved spectrum misses the targets by {:?}",
                placement_error.to_f64()
            );
            continue;
        }
        // Assumption-2 certificate: the apparent closed loop must be Schur
        // stable regardless of how loose the placement gate is.
        if !achieved.schur_stable {
            last_failure = format!(
                "achieved spectrum is not Schur stable (rho = {:?})",
                achieved.spectral_radius.to_f64()
            );
            continue;
        }
        let sylvester_residual = (&a * &x - &x * f - &rhs).norm();
        let sylvester_relative_residual =
            sylvester_residual / (a.norm() * x.norm()).max(T::one());
        let (g, g_residual) = recover_decision_matrix(pd, &gain, rank_tol)?;
        return Ok(SynthesisCertificate {
            controller: Controller::new(gain)?,
            apparent_a: a,
            apparent_b: b,
            apparent_closed_loop: achieved,
            method: SynthesisMethod::PolePlacement,
            g,
            diagnostics: SynthesisDiagnostics {
                g_residual,
                dare_residual: None,
                dare_iterations: None,
                sylvester_relative_residual: Some(sylvester_relative_residual),
                placement_error: Some(placement_error),
            },
        });
    }
    Err(Error::Synthesis(format!(
        "pole placement failed after {max_retries} retries: {last_failure}"
    )))
}

/// The open interval `Λ = (-1, 1) ∩ (-1 - δ, 1 - δ)` of true-pole locations
/// admitting a stabilizing synthesis despite a shift of `δ`; empty exactly
/// when `|δ| >= 2`.
pub fn stability_interval<T: Scalar>(delta: T) -> Option<(T, T)> {
    let lo = (-T::one()).max(-T::one() - delta);
    let hi = T::one().min(T::one() - delta);
    if lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

/// Residuals of the composite-operator identities tying the poisoned-data
/// synthesis back to the true data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCompositionReport {
    /// `‖[X₋; U] G_map - [X̃₋; U]‖_F`
    pub map_residual: f64,
    /// `‖[X₋; U] G_true - [I; K]‖_F`
    pub true_residual: f64,
    /// `‖X̃₊ G̃ - (X₊ G_true + δ I)‖_F`
    pub shift_residual: f64,
}

impl GCompositionReport {
    pub fn max_residual(&self) -> f64 {
        self.map_residual
            .max(self.true_residual)
            .max(self.shift_residual)
    }
}

/// Verify the G-algebra of a recursive-mode attack against the true data:
/// `G_map = I + [g(0) … g(T-1)]` maps the true stack onto the poisoned one,
/// `G_true = G_map G̃` solves the true-data synthesis equation, and the
/// closed loops differ by exactly `δ I`.
///
/// Consumes the true data matrices, so this is a harness-side verification.
pub fn verify_g_composition<T: Scalar>(
    pd: &PoisonedDataset<T>,
    cert: &SynthesisCertificate<T>,
    dm_true: &DataMatrices<T>,
) -> Result<GCompositionReport> {
    let g_delta = pd.g_delta().ok_or_else(|| {
        Error::Unsupported(
            "G-composition requires the stored g(k) columns of a recursive-mode dataset".into(),
        )
    })?;
    let t = pd.len();
    if dm_true.len() != t {
        return Err(Error::Dimension(format!(
            "true data have {} columns, poisoned data have {t}",
            dm_true.len()
        )));
    }
    let n = pd.state_dim();
    let delta = pd.attack().delta;
    let g_map = DMatrix::identity(t, t) + g_delta;
    let g_true = &g_map * &cert.g;

    let true_stack = dm_true.stacked();
    let tilde_stack = pd.stacked_tilde();
    let map_residual = (&true_stack * &g_map - tilde_stack).norm();

    let rhs = linalg::vstack(&DMatrix::identity(n, n), cert.gain())?;
    let true_residual = (&true_stack * &g_true - rhs).norm();

    let shift_residual = (pd.x_plus_tilde() * &cert.g
        - dm_true.x_plus() * &g_true
        - DMatrix::identity(n, n) * delta)
        .norm();

    Ok(GCompositionReport {
        map_residual: map_residual.to_f64().unwrap_or(f64::NAN),
        true_residual: true_residual.to_f64().unwrap_or(f64::NAN),
        shift_residual: shift_residual.to_f64().unwrap_or(f64::NAN),
    })
}
