//! Shared scaffolding for the integration suites: randomized controllable
//! systems, persistently exciting experiments, and oracles that stay
//! independent of the implementation paths they check.
//!
//! Each suite uses its own subset of these helpers.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use poisonctl_core::plant::{simulate_open_loop, LtiSystem};
use poisonctl_core::rng::SeededRng;
use poisonctl_core::signals::Sequence;

/// Random controllable pair with `n <= max_n`, `m <= max_m`. `A` is scaled
/// so open-loop trajectories stay within f64 range over short experiments.
pub fn random_controllable_system(
    rng: &mut SeededRng,
    max_n: usize,
    max_m: usize,
) -> LtiSystem<f64> {
    random_system_with_margin(rng, max_n, max_m, 1e-9, 1.1)
}

/// Like [`random_controllable_system`] but rejecting weakly controllable
/// pairs: every singular value of the controllability matrix must exceed
/// 1e-3 times the largest, and `A` is scaled slightly smaller. The
/// synthesis-heavy suites use this ensemble so Riccati solutions stay
/// moderate and placement gains stay well-conditioned.
pub fn random_strongly_controllable_system(
    rng: &mut SeededRng,
    max_n: usize,
    max_m: usize,
) -> LtiSystem<f64> {
    random_system_with_margin(rng, max_n, max_m, 1e-3, 0.9)
}

fn random_system_with_margin(
    rng: &mut SeededRng,
    max_n: usize,
    max_m: usize,
    ctrb_tol: f64,
    a_scale: f64,
) -> LtiSystem<f64> {
    loop {
        let n = 1 + (rng.unit::<f64>() * max_n as f64) as usize;
        let n = n.min(max_n);
        let m = 1 + (rng.unit::<f64>() * max_m as f64) as usize;
        let m = m.min(max_m);
        let scale = a_scale / (n as f64).sqrt();
        let a = DMatrix::from_fn(n, n, |_, _| rng.symmetric(scale));
        let b = DMatrix::from_fn(n, m, |_, _| rng.symmetric(1.0));
        if let Ok(sys) = LtiSystem::controllable(a, b, ctrb_tol) {
            return sys;
        }
    }
}

/// A strongly controllable draw on which the default LQR synthesis of the
/// shifted models converges at the tight tolerance for every `delta` the
/// suite exercises. Draws whose Riccati cost sits beyond what absolute
/// `‖ΔP‖ < 1e-10` stopping can express in f64 are systems where synthesis
/// honestly reports non-convergence; they carry no certificate to test, so
/// the ensemble excludes them.
pub fn random_synthesis_friendly_system(
    rng: &mut SeededRng,
    max_n: usize,
    max_m: usize,
    deltas: &[f64],
    dare_tol: f64,
) -> LtiSystem<f64> {
    use poisonctl_core::planner::{solve_dare, LqrWeights};
    'draw: loop {
        let sys = random_strongly_controllable_system(rng, max_n, max_m);
        let n = sys.state_dim();
        let weights = LqrWeights::identity(n, sys.input_dim());
        for &delta in deltas {
            let shifted = sys.a() + DMatrix::identity(n, n) * delta;
            if solve_dare(&shifted, sys.b(), &weights, dare_tol, 30_000).is_err() {
                continue 'draw;
            }
        }
        return sys;
    }
}

/// A persistently exciting experiment of order `n + 1` on `sys`, started
/// from a random initial state.
pub fn pe_experiment(
    sys: &LtiSystem<f64>,
    t: usize,
    seed: u64,
) -> (Sequence<f64>, Sequence<f64>) {
    let input = poisonctl_core::pipeline::generate_pe_input(
        sys.input_dim(),
        t,
        1.0,
        seed,
        sys.state_dim() + 1,
        1e-9,
    )
    .expect("uniform draws are persistently exciting");
    let mut rng = SeededRng::new(seed ^ 0xA5A5_5A5A);
    let x0 = DVector::from_fn(sys.state_dim(), |_, _| rng.symmetric(1.0));
    let states = simulate_open_loop(sys, &input, &x0).expect("dimensions agree");
    (input, states)
}

/// Shortest experiment length satisfying the excitation requirement, plus
/// some slack.
pub fn experiment_length(sys: &LtiSystem<f64>) -> usize {
    (sys.input_dim() + 1) * (sys.state_dim() + 1) - 1 + 3
}

/// Rank by Gaussian elimination with partial pivoting; independent of the
/// SVD-based rank used inside the crate.
pub fn elimination_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.abs().max().max(1.0);
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        if row >= rows {
            break;
        }
        let (pivot_row, pivot_val) = (row..rows)
            .map(|r| (r, a[(r, col)].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pivot_val <= tol * scale {
            continue;
        }
        a.swap_rows(row, pivot_row);
        for r in (row + 1)..rows {
            let factor = a[(r, col)] / a[(row, col)];
            for c in col..cols {
                a[(r, c)] -= factor * a[(row, c)];
            }
        }
        rank += 1;
        row += 1;
    }
    rank
}

/// Characteristic polynomial coefficients of `a` (monic, highest power
/// first) via the Faddeev–LeVerrier recurrence.
pub fn char_poly_coeffs(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * coeffs[k - 1];
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// All roots of a real polynomial (monic, highest power first) via the
/// Durand–Kerner fixed-point iteration; independent of any QR machinery.
pub fn durand_kerner(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let deg = coeffs.len() - 1;
    let eval = |z: Complex<f64>| -> Complex<f64> {
        coeffs
            .iter()
            .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
    };
    // Non-real, non-root-of-unity starting points.
    let mut roots: Vec<Complex<f64>> = (0..deg)
        .map(|i| Complex::new(0.4, 0.9).powu(i as u32 + 1))
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-13 {
            break;
        }
    }
    roots
}

/// Best possible eigenpair residual of `lambda` for `m`: the smallest
/// singular value of `M - lambda I`, computed through a complex SVD (a route
/// independent of the real-Schur eigensolver under test).
pub fn eigenpair_residual(m: &DMatrix<f64>, lambda: Complex<f64>) -> f64 {
    let n = m.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        Complex::new(m[(i, j)], 0.0) - if i == j { lambda } else { Complex::new(0.0, 0.0) }
    });
    let svals = shifted.svd(false, false).singular_values;
    svals.iter().fold(f64::INFINITY, |acc, s| acc.min(*s))
}

/// Sorted multiset distance between complex spectra.
pub fn sorted_spectrum_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    poisonctl_core::planner::spectrum_distance(a, b)
}
