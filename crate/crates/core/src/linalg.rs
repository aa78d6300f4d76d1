//! Internal dense linear-algebra helpers shared by the domain modules.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{from_f64, Scalar};

/// Numerical rank: singular values above `rel_tol` times the largest one.
pub(crate) fn numerical_rank<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> usize {
    let svals = m.clone().singular_values();
    let sigma_max = svals.iter().copied().fold(T::zero(), |a, b| a.max(b));
    if sigma_max == T::zero() {
        return 0;
    }
    let cut = rel_tol * sigma_max;
    svals.iter().filter(|&&s| s > cut).count()
}

/// Minimum-norm least-squares solution of `a * x = b` via SVD, with singular
/// values below `rel_tol * sigma_max` treated as zero.
pub(crate) fn min_norm_solve<T: Scalar>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    rel_tol: T,
) -> Result<DMatrix<T>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "solve lhs has {} rows, rhs has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd
        .singular_values
        .iter()
        .copied()
        .fold(T::zero(), |m, s| m.max(s));
    svd.solve(b, rel_tol * sigma_max)
        .map_err(|e| Error::Numerical(format!("SVD solve failed: {e}")))
}

/// Moore-Penrose pseudoinverse with singular values below
/// `rel_tol * sigma_max` treated as zero.
pub(crate) fn pseudo_inverse<T: Scalar>(a: &DMatrix<T>, rel_tol: T) -> Result<DMatrix<T>> {
    let svd = a.clone().svd(true, true);
    let sigma_max = svd
        .singular_values
        .iter()
        .copied()
        .fold(T::zero(), |m, s| m.max(s));
    svd.pseudo_inverse(rel_tol * sigma_max)
        .map_err(|e| Error::Numerical(format!("pseudoinverse failed: {e}")))
}

/// Matrix rows as nested vectors of f64 (row-major), for serialization.
pub(crate) fn matrix_to_rows<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| m[(i, j)].to_f64().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

/// Rebuild a matrix from row-major nested vectors; rows must be equal length.
pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(Error::Dimension("matrix rows must be nonempty".into()));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("matrix rows have unequal lengths".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Vertical stack `[top; bottom]`; the two blocks must agree on column count.
pub(crate) fn vstack<T: Scalar>(top: &DMatrix<T>, bottom: &DMatrix<T>) -> Result<DMatrix<T>> {
    if top.ncols() != bottom.ncols() {
        return Err(Error::Dimension(format!(
            "stack blocks have {} and {} columns",
            top.ncols(),
            bottom.ncols()
        )));
    }
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape())
        .copy_from(bottom);
    Ok(out)
}

/// Solve the Sylvester equation `a*x - x*f = c` through the vectorized
/// Kronecker system `(I ⊗ a - fᵀ ⊗ I) vec(x) = vec(c)`. Solvable exactly when
/// the spectra of `a` and `f` are disjoint.
pub(crate) fn solve_sylvester<T: Scalar>(
    a: &DMatrix<T>,
    f: &DMatrix<T>,
    c: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let p = f.nrows();
    if a.ncols() != n || f.ncols() != p {
        return Err(Error::Dimension("Sylvester blocks must be square".into()));
    }
    if c.nrows() != n || c.ncols() != p {
        return Err(Error::Dimension(format!(
            "Sylvester rhs must be {n}x{p}, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let eye_p = DMatrix::<T>::identity(p, p);
    let eye_n = DMatrix::<T>::identity(n, n);
    let system = eye_p.kronecker(a) - f.transpose().kronecker(&eye_n);
    let rhs = nalgebra::DVector::from_column_slice(c.as_slice());
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Sylvester system is singular".into()))?;
    Ok(DMatrix::from_column_slice(n, p, sol.as_slice()))
}

/// Solve the Stein (discrete Lyapunov) equation `p - aᵀ p a = w` through the
/// vectorized system `(I - aᵀ ⊗ aᵀ) vec(p) = vec(w)`; unique when no two
/// eigenvalues of `a` have product 1. The result is symmetrized.
pub(crate) fn solve_stein<T: Scalar>(a: &DMatrix<T>, w: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n || w.nrows() != n || w.ncols() != n {
        return Err(Error::Dimension(
            "Stein blocks must be square and match".into(),
        ));
    }
    let a_t = a.transpose();
    let system = DMatrix::<T>::identity(n * n, n * n) - a_t.kronecker(&a_t);
    let rhs = nalgebra::DVector::from_column_slice(w.as_slice());
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("Stein system is singular".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * from_f64::<T>(0.5))
}

pub(crate) fn default_rank_tol<T: Scalar>() -> T {
    from_f64(crate::defaults::RANK_TOL)
}
