//! Density operators on composite finite-dimensional systems.
//!
//! States are dense complex matrices carrying an explicit list of subsystem
//! dimensions. Validation (Hermiticity, eigenvalue floor, unit trace) happens
//! at construction; arithmetic never clips silently.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::Tolerances;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix side {side} does not match product of subsystem dims {dims_product}")]
    SideMismatch { side: usize, dims_product: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("not Hermitian (max deviation {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },
    #[error("not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("trace is not one (got {trace:.12})")]
    TraceNotOne { trace: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("subsystem index {index} out of range for {n_subsystems} subsystems")]
    IndexOutOfRange { index: usize, n_subsystems: usize },
    #[error("keep set is empty")]
    EmptyKeepSet,
    #[error("requested rank {rank} exceeds total dimension {dim}")]
    RankTooLarge { rank: usize, dim: usize },
    #[error("rank must be positive")]
    RankZero,
    #[error("subsystem dimension list is empty")]
    EmptyDims,
    #[error("tolerance {name} = {value} outside [0, 1e-3]")]
    ToleranceOutOfRange { name: &'static str, value: f64 },
}

/// Positive unit-trace operator on a composite system with explicit
/// subsystem dimensions, ordered left to right in the tensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Validates `matrix` as a density operator on subsystems `dims`.
    ///
    /// Checks, in order: squareness, side = product of dims, finiteness,
    /// Hermiticity within `tol_herm`, eigenvalue floor `-tol_psd`, and
    /// `|trace - 1| <= tol_tr`.
    pub fn new(
        matrix: DMatrix<Complex64>,
        dims: Vec<usize>,
        tol: &Tolerances,
    ) -> Result<Self, StateError> {
        tol.validate()?;
        if dims.is_empty() {
            return Err(StateError::EmptyDims);
        }
        let side = matrix.nrows();
        if matrix.ncols() != side {
            return Err(StateError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let dims_product: usize = dims.iter().product();
        if side != dims_product {
            return Err(StateError::SideMismatch { side, dims_product });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(StateError::NonFinite);
        }

        let mut max_dev: f64 = 0.0;
        for i in 0..side {
            for j in i..side {
                let d = matrix[(i, j)] - matrix[(j, i)].conj();
                max_dev = max_dev.max(d.norm());
            }
        }
        if max_dev > tol.tol_herm {
            return Err(StateError::NotHermitian { max_dev });
        }

        let evals = hermitian_eigenvalues(&matrix);
        let min_eigenvalue = evals.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -tol.tol_psd {
            return Err(StateError::NotPositive { min_eigenvalue });
        }

        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol.tol_tr {
            return Err(StateError::TraceNotOne { trace });
        }

        Ok(Self { dims, matrix })
    }

    /// Builds the projector onto a (normalized) pure state vector.
    pub fn from_pure(amplitudes: &[Complex64], dims: Vec<usize>) -> Result<Self, StateError> {
        let d: usize = dims.iter().product();
        if amplitudes.len() != d {
            return Err(StateError::SideMismatch {
                side: amplitudes.len(),
                dims_product: d,
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !(norm_sq.is_finite() && norm_sq > 0.0) {
            return Err(StateError::NonFinite);
        }
        let v = DVector::from_fn(d, |i, _| amplitudes[i] / norm_sq.sqrt());
        let matrix = &v * v.adjoint();
        Ok(Self { dims, matrix })
    }

    /// Builds the diagonal state with the given probability weights
    /// (normalized to unit trace).
    pub fn from_diagonal(weights: &[f64], dims: Vec<usize>) -> Result<Self, StateError> {
        let d: usize = dims.iter().product();
        if weights.len() != d {
            return Err(StateError::SideMismatch {
                side: weights.len(),
                dims_product: d,
            });
        }
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(StateError::NonFinite);
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(weights[i] / total, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self { dims, matrix })
    }

    /// Maximally mixed state on the given subsystems.
    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self, StateError> {
        if dims.is_empty() {
            return Err(StateError::EmptyDims);
        }
        let d: usize = dims.iter().product();
        Self::from_diagonal(&vec![1.0; d], dims)
    }

    /// Internal constructor for outputs that are PSD and unit-trace by
    /// construction (e.g. trace-preserving Kraus action on a valid input).
    pub(crate) fn trusted(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.iter().product::<usize>());
        debug_assert!((matrix.trace().re - 1.0).abs() < 1e-8);
        Self { dims, matrix }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn total_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Eigenvalues of the state, ascending order not guaranteed.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix).iter().copied().collect()
    }

    /// Kronecker product; dims are concatenated.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            dims,
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// Traces out every subsystem not listed in `keep`.
    ///
    /// `keep` is treated as a set; the reduced state carries the kept
    /// subsystems in their original tensor order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self, StateError> {
        if keep.is_empty() {
            return Err(StateError::EmptyKeepSet);
        }
        let n = self.dims.len();
        for &k in keep {
            if k >= n {
                return Err(StateError::IndexOutOfRange {
                    index: k,
                    n_subsystems: n,
                });
            }
        }
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();

        let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        if traced.is_empty() {
            return Ok(self.clone());
        }

        // Strides of the full tensor order (leftmost factor varies slowest).
        let mut stride = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            stride[i] = stride[i + 1] * self.dims[i + 1];
        }

        let kept_dims: Vec<usize> = keep.iter().map(|&i| self.dims[i]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&i| self.dims[i]).collect();
        let dk: usize = kept_dims.iter().product();
        let dt: usize = traced_dims.iter().product();

        // Flat offsets contributed by each kept / traced multi-index.
        let offsets = |positions: &[usize], dims: &[usize], flat: usize| -> usize {
            let mut rem = flat;
            let mut off = 0;
            for (pos, &d) in positions.iter().zip(dims).rev() {
                off += (rem % d) * stride[*pos];
                rem /= d;
            }
            off
        };

        let kept_offsets: Vec<usize> = (0..dk).map(|a| offsets(&keep, &kept_dims, a)).collect();
        let traced_offsets: Vec<usize> =
            (0..dt).map(|t| offsets(&traced, &traced_dims, t)).collect();

        let mut out = DMatrix::<Complex64>::zeros(dk, dk);
        for (a, &oa) in kept_offsets.iter().enumerate() {
            for (b, &ob) in kept_offsets.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &ot in &traced_offsets {
                    acc += self.matrix[(oa + ot, ob + ot)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(Self {
            dims: kept_dims,
            matrix: out,
        })
    }

    /// Uhlmann fidelity `F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, in [0, 1].
    pub fn fidelity(&self, other: &Self) -> Result<f64, StateError> {
        if self.total_dim() != other.total_dim() {
            return Err(StateError::DimensionMismatch {
                left: self.total_dim(),
                right: other.total_dim(),
            });
        }
        Ok(fidelity_matrices(&self.matrix, &other.matrix))
    }

    /// Trace distance `0.5 * ||rho - sigma||_1`, in [0, 1].
    pub fn trace_distance(&self, other: &Self) -> Result<f64, StateError> {
        if self.total_dim() != other.total_dim() {
            return Err(StateError::DimensionMismatch {
                left: self.total_dim(),
                right: other.total_dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let evals = hermitian_eigenvalues(&diff);
        Ok(0.5 * evals.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Seeded Ginibre construction `G G^dag / Tr(G G^dag)` with `G` of width
    /// `rank`. Deterministic for a fixed seed.
    pub fn random(dims: Vec<usize>, rank: usize, seed: u64) -> Result<Self, StateError> {
        if dims.is_empty() {
            return Err(StateError::EmptyDims);
        }
        let d: usize = dims.iter().product();
        if rank == 0 {
            return Err(StateError::RankZero);
        }
        if rank > d {
            return Err(StateError::RankTooLarge { rank, dim: d });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = DMatrix::<Complex64>::zeros(d, rank);
        for i in 0..d {
            for j in 0..rank {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                g[(i, j)] = Complex64::new(re, im);
            }
        }
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        Ok(Self {
            dims,
            matrix: m / Complex64::new(tr, 0.0),
        })
    }

    /// Seeded random diagonal (incoherent) state.
    pub fn random_diagonal(dims: Vec<usize>, seed: u64) -> Result<Self, StateError> {
        if dims.is_empty() {
            return Err(StateError::EmptyDims);
        }
        let d: usize = dims.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Exponential weights give a flat Dirichlet distribution after
        // normalization.
        let weights: Vec<f64> = (0..d)
            .map(|_| {
                let u: f64 = rand::Rng::random(&mut rng);
                -(1.0 - u).ln()
            })
            .collect();
        Self::from_diagonal(&weights, dims)
    }

    /// Entrywise equality within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.total_dim() == other.total_dim() && max_abs_diff(&self.matrix, &other.matrix) <= tol
    }
}

/// Positive operator with trace at most one, as produced by a
/// trace-non-increasing map. Carries the same dims bookkeeping as
/// [`DensityOperator`].
#[derive(Debug, Clone)]
pub struct SubnormalizedState {
    dims: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

impl SubnormalizedState {
    pub(crate) fn new(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Self {
        Self { dims, matrix }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Divides by the trace and revalidates. Fails on (near-)zero trace.
    pub fn renormalized(&self, tol: &Tolerances) -> Result<DensityOperator, StateError> {
        let tr = self.trace();
        if tr <= f64::EPSILON {
            return Err(StateError::TraceNotOne { trace: tr });
        }
        DensityOperator::new(
            &self.matrix / Complex64::new(tr, 0.0),
            self.dims.clone(),
            tol,
        )
    }
}

/// Eigenvalues of a Hermitian matrix (symmetrized first to shed roundoff).
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> DVector<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues
}

/// Principal square root of a Hermitian PSD matrix; tiny negative
/// eigenvalues are clamped to zero.
pub(crate) fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let se = SymmetricEigen::new(h);
    let n = m.nrows();
    let mut u_sqrt = se.eigenvectors.clone();
    for j in 0..n {
        let root = se.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            u_sqrt[(i, j)] *= Complex64::new(root, 0.0);
        }
    }
    &u_sqrt * se.eigenvectors.adjoint()
}

pub(crate) fn fidelity_matrices(rho: &DMatrix<Complex64>, sigma: &DMatrix<Complex64>) -> f64 {
    let sqrt_rho = hermitian_sqrt(rho);
    let inner = &sqrt_rho * sigma * &sqrt_rho;
    let evals = hermitian_eigenvalues(&inner);
    let root_sum: f64 = evals.iter().map(|l| l.max(0.0).sqrt()).sum();
    (root_sum * root_sum).clamp(0.0, 1.0 + 1e-9).min(1.0)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
