//! Sequences, Hankel matrices, and persistency-of-excitation checks.
//!
//! Everything downstream (attack construction, synthesis, verification) works
//! on the depth-1 Hankel views `U`, `X₋`, `X₊` built here. Numerical rank is
//! always decided through singular values relative to the largest one, never
//! through elimination, so near-deficient noisy stacks degrade gracefully.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Finite vector-valued sequence `w(0), …, w(T-1)` with `w(k) ∈ ℝ^q`.
///
/// Immutable after construction; all samples share the dimension `q ≥ 1`
/// and the sequence is nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<T: Scalar> {
    samples: Vec<DVector<T>>,
    dim: usize,
}

impl<T: Scalar> Sequence<T> {
    pub fn new(samples: Vec<DVector<T>>) -> Result<Self> {
        let dim = samples
            .first()
            .map(|s| s.len())
            .ok_or_else(|| Error::Dimension("sequence must contain at least one sample".into()))?;
        if dim == 0 {
            return Err(Error::Dimension("sequence samples must be nonempty".into()));
        }
        if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
            return Err(Error::Dimension(format!(
                "sequence samples must share one dimension: expected {dim}, found {}",
                bad.len()
            )));
        }
        Ok(Self { samples, dim })
    }

    /// Scalar sequence from a slice of values.
    pub fn from_scalars(values: &[T]) -> Result<Self> {
        Self::new(values.iter().map(|&v| DVector::from_element(1, v)).collect())
    }

    /// Columns of `m` interpreted as consecutive samples.
    pub fn from_matrix(m: &DMatrix<T>) -> Result<Self> {
        Self::new(m.column_iter().map(|c| c.into_owned()).collect())
    }

    /// Sample count `T`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    /// Sample dimension `q`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, k: usize) -> &DVector<T> {
        &self.samples[k]
    }

    pub fn samples(&self) -> &[DVector<T>] {
        &self.samples
    }

    /// The `q × T` matrix whose column `k` is `w(k)` (the depth-1 Hankel view).
    pub fn as_matrix(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.samples.len());
        for (k, s) in self.samples.iter().enumerate() {
            m.set_column(k, s);
        }
        m
    }

    /// Sub-sequence `w(start), …, w(end-1)`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.samples.len() {
            return Err(Error::Dimension(format!(
                "window {start}..{end} out of range for length {}",
                self.samples.len()
            )));
        }
        Self::new(self.samples[start..end].to_vec())
    }
}

/// Block-Hankel matrix of a sequence, depth `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix<T: Scalar> {
    entries: DMatrix<T>,
    depth: usize,
    source_dims: (usize, usize),
}

impl<T: Scalar> HankelMatrix<T> {
    /// Shape `(qL) × (T − L + 1)`.
    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `(q, T)` of the source sequence.
    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    /// Block at block-row `r`, block-column `c`; equals source sample `r + c`.
    pub fn block(&self, r: usize, c: usize) -> DVector<T> {
        let q = self.source_dims.0;
        self.entries.view((r * q, c), (q, 1)).column(0).into_owned()
    }
}

/// Build the depth-`L` block-Hankel matrix of `seq`.
///
/// Block `(i, j)` holds sample `w(i + j)`; the result is `(qL) × (T − L + 1)`.
pub fn build_hankel<T: Scalar>(seq: &Sequence<T>, depth: usize) -> Result<HankelMatrix<T>> {
    let (q, t) = (seq.dim(), seq.len());
    if depth == 0 || depth > t {
        return Err(Error::Dimension(format!(
            "Hankel depth must satisfy 1 <= L <= T, got L = {depth}, T = {t}"
        )));
    }
    let cols = t - depth + 1;
    let mut entries = DMatrix::zeros(q * depth, cols);
    for i in 0..depth {
        for j in 0..cols {
            entries
                .view_mut((i * q, j), (q, 1))
                .copy_from(seq.sample(i + j));
        }
    }
    Ok(HankelMatrix {
        entries,
        depth,
        source_dims: (q, t),
    })
}

/// Why a persistency-of-excitation check came back negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PeFailure {
    /// `T < (q+1)L − 1`: the sequence cannot be persistently exciting of this
    /// order no matter its values.
    SequenceTooShort,
    /// The depth-`L` Hankel matrix is rank deficient.
    RankDeficient,
}

/// Outcome of a persistency-of-excitation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PeReport {
    pub is_pe: bool,
    pub achieved_rank: usize,
    pub required_rank: usize,
    pub failure: Option<PeFailure>,
}

/// Check persistency of excitation of the given order.
///
/// True iff the depth-`order` Hankel matrix has full row rank `q·order`, with
/// rank decided by singular values above `rank_tol` times the largest.
/// A sequence shorter than `(q+1)·order − 1` is reported as too short rather
/// than rejected.
pub fn is_persistently_exciting<T: Scalar>(
    seq: &Sequence<T>,
    order: usize,
    rank_tol: T,
) -> Result<PeReport> {
    if order == 0 {
        return Err(Error::Dimension("excitation order must be >= 1".into()));
    }
    let (q, t) = (seq.dim(), seq.len());
    let required_rank = q * order;
    if t < (q + 1) * order - 1 {
        // Too short to reach full row rank; still report whatever rank the
        // (possibly unbuildable) Hankel matrix achieves.
        let achieved_rank = if order <= t {
            linalg::numerical_rank(build_hankel(seq, order)?.entries(), rank_tol)
        } else {
            0
        };
        return Ok(PeReport {
            is_pe: false,
            achieved_rank,
            required_rank,
            failure: Some(PeFailure::SequenceTooShort),
        });
    }
    let hankel = build_hankel(seq, order)?;
    let achieved_rank = linalg::numerical_rank(hankel.entries(), rank_tol);
    let is_pe = achieved_rank == required_rank;
    Ok(PeReport {
        is_pe,
        achieved_rank,
        required_rank,
        failure: if is_pe {
            None
        } else {
            Some(PeFailure::RankDeficient)
        },
    })
}

/// Depth-1 data matrices of an input/state experiment.
///
/// `U` is `m × T`, `X₋` and `X₊` are `n × T`; when built from a recorded
/// trajectory, column `k` of `X₋` and of `X₊` are consecutive states.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrices<T: Scalar> {
    u: DMatrix<T>,
    x_minus: DMatrix<T>,
    x_plus: DMatrix<T>,
}

impl<T: Scalar> DataMatrices<T> {
    /// Assemble from raw matrices. Only column-count consistency is checked;
    /// the consecutive-state property holds when using [`Self::from_dataset`].
    pub fn new(u: DMatrix<T>, x_minus: DMatrix<T>, x_plus: DMatrix<T>) -> Result<Self> {
        let t = u.ncols();
        if x_minus.ncols() != t || x_plus.ncols() != t {
            return Err(Error::Dimension(format!(
                "data matrices must share column count: U has {t}, X- has {}, X+ has {}",
                x_minus.ncols(),
                x_plus.ncols()
            )));
        }
        if x_minus.nrows() != x_plus.nrows() {
            return Err(Error::Dimension(format!(
                "state matrices must share row count: X- has {}, X+ has {}",
                x_minus.nrows(),
                x_plus.nrows()
            )));
        }
        if t == 0 {
            return Err(Error::Dimension("data matrices must be nonempty".into()));
        }
        Ok(Self { u, x_minus, x_plus })
    }

    /// Build `U = H₁(u)`, `X₋ = H₁(x(0..T-1))`, `X₊ = H₁(x(1..T))` from an
    /// input sequence of length `T` and a state sequence of length `T + 1`.
    pub fn from_dataset(input: &Sequence<T>, states: &Sequence<T>) -> Result<Self> {
        let t = input.len();
        if states.len() != t + 1 {
            return Err(Error::Dimension(format!(
                "state sequence must have T + 1 = {} samples, got {}",
                t + 1,
                states.len()
            )));
        }
        let u = input.as_matrix();
        let x_minus = states.window(0, t)?.as_matrix();
        let x_plus = states.window(1, t + 1)?.as_matrix();
        Self::new(u, x_minus, x_plus)
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn x_minus(&self) -> &DMatrix<T> {
        &self.x_minus
    }

    pub fn x_plus(&self) -> &DMatrix<T> {
        &self.x_plus
    }

    /// Column count `T`.
    pub fn len(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    /// State dimension `n`.
    pub fn state_dim(&self) -> usize {
        self.x_minus.nrows()
    }

    /// Input dimension `m`.
    pub fn input_dim(&self) -> usize {
        self.u.nrows()
    }

    /// The `(n + m) × T` stack `[X₋; U]`.
    pub fn stacked(&self) -> DMatrix<T> {
        linalg::vstack(&self.x_minus, &self.u).expect("column counts checked at construction")
    }
}

/// Rank report for the `[X₋; U]` stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StackedRankReport {
    pub rank: usize,
    pub rows: usize,
    pub full_row_rank: bool,
}

/// Numerical rank of the `(n + m) × T` stack `[X₋; U]`; full row rank is the
/// prerequisite for both the recursive attack and controller synthesis.
pub fn stacked_rank<T: Scalar>(dm: &DataMatrices<T>, rank_tol: T) -> StackedRankReport {
    let stack = dm.stacked();
    let rank = linalg::numerical_rank(&stack, rank_tol);
    StackedRankReport {
        rank,
        rows: stack.nrows(),
        full_row_rank: rank == stack.nrows(),
    }
}
