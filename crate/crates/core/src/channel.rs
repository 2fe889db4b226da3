//! Kraus-form quantum channels and the structured families the censorship
//! protocol needs: permutation-phase (free) unitaries, the swap, and the
//! dephasing channel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::state::{hermitian_eigenvalues, DensityOperator, StateError, SubnormalizedState};
use crate::Tolerances;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("Kraus list is empty")]
    EmptyKrausList,
    #[error("Kraus operator {index} has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    KrausShapeMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("completeness relation violated for {mode:?} (deviation {deviation:.3e})")]
    CompletenessViolated { mode: TpMode, deviation: f64 },
    #[error("channel is trace-non-increasing; use apply_subnormalized")]
    NotTracePreserving,
    #[error("index map is not a permutation")]
    NotAPermutation,
    #[error("phase list length {phases} does not match permutation length {perm}")]
    PhaseCountMismatch { phases: usize, perm: usize },
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("factor at term {term}, site {site} is not structurally incoherent (Kraus {kraus}, column {column})")]
    NotIncoherentFactor {
        term: usize,
        site: usize,
        kraus: usize,
        column: usize,
    },
    #[error("summed map is not trace-preserving (deviation {deviation:.3e})")]
    NotTracePreservingSum { deviation: f64 },
    #[error("term {term} has {got} site factors, expected {expected}")]
    FactorCountMismatch {
        term: usize,
        expected: usize,
        got: usize,
    },
    #[error("no terms supplied")]
    NoTerms,
    #[error(transparent)]
    State(#[from] StateError),
}

/// Whether the completeness sum must equal the identity or may fall below it
/// in operator order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpMode {
    TracePreserving,
    TraceNonIncreasing,
}

/// Completely positive map as an explicit list of Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    kraus: Vec<DMatrix<Complex64>>,
    tp_mode: TpMode,
}

/// Deviations of the completeness sum `C = sum_a M_a^dag M_a` from the
/// identity, as reported by [`KrausChannel::validate`].
#[derive(Debug, Clone, Copy)]
pub struct KrausValidation {
    /// Largest entrywise modulus of `C - I`.
    pub trace_preserving_deviation: f64,
    /// Positive part of the largest eigenvalue of `C - I`; zero when the
    /// channel sits at or below the identity in operator order.
    pub nonincreasing_excess: f64,
}

impl KrausValidation {
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preserving_deviation <= tol
    }

    pub fn is_trace_non_increasing(&self, tol: f64) -> bool {
        self.nonincreasing_excess <= tol
    }

    pub fn is_valid(&self, mode: TpMode, tol: f64) -> bool {
        match mode {
            TpMode::TracePreserving => self.is_trace_preserving(tol),
            TpMode::TraceNonIncreasing => self.is_trace_non_increasing(tol),
        }
    }

    /// The deviation relevant for the given mode.
    pub fn deviation(&self, mode: TpMode) -> f64 {
        match mode {
            TpMode::TracePreserving => self.trace_preserving_deviation,
            TpMode::TraceNonIncreasing => self.nonincreasing_excess,
        }
    }
}

/// Outcome of the structural incoherence test (at most one nonzero entry per
/// column of every Kraus operator).
#[derive(Debug, Clone, Copy)]
pub struct IncoherenceCheck {
    pub incoherent: bool,
    /// First violating (Kraus operator, column) pair, if any.
    pub violation: Option<(usize, usize)>,
}

impl KrausChannel {
    /// Validates shapes and the completeness relation for `tp_mode`.
    pub fn new(
        kraus: Vec<DMatrix<Complex64>>,
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
        tp_mode: TpMode,
        tol: &Tolerances,
    ) -> Result<Self, ChannelError> {
        if kraus.is_empty() {
            return Err(ChannelError::EmptyKrausList);
        }
        let in_total: usize = in_dims.iter().product();
        let out_total: usize = out_dims.iter().product();
        for (index, m) in kraus.iter().enumerate() {
            if m.nrows() != out_total || m.ncols() != in_total {
                return Err(ChannelError::KrausShapeMismatch {
                    index,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    expected_rows: out_total,
                    expected_cols: in_total,
                });
            }
        }
        let ch = Self {
            in_dims,
            out_dims,
            kraus,
            tp_mode,
        };
        let report = ch.validate();
        if !report.is_valid(tp_mode, tol.tol_tr.max(1e-10) * 10.0) {
            return Err(ChannelError::CompletenessViolated {
                mode: tp_mode,
                deviation: report.deviation(tp_mode),
            });
        }
        Ok(ch)
    }

    /// Constructor for channels whose completeness holds by construction
    /// (composition, tensoring, unitary embedding).
    pub(crate) fn assemble(
        kraus: Vec<DMatrix<Complex64>>,
        in_dims: Vec<usize>,
        out_dims: Vec<usize>,
        tp_mode: TpMode,
    ) -> Self {
        debug_assert!(!kraus.is_empty());
        Self {
            in_dims,
            out_dims,
            kraus,
            tp_mode,
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        Self::assemble(
            vec![DMatrix::identity(d, d)],
            dims.to_vec(),
            dims.to_vec(),
            TpMode::TracePreserving,
        )
    }

    /// Single-Kraus channel from a unitary matrix.
    pub fn unitary(u: DMatrix<Complex64>, dims: &[usize]) -> Result<Self, ChannelError> {
        let d: usize = dims.iter().product();
        if u.nrows() != d || u.ncols() != d {
            return Err(ChannelError::KrausShapeMismatch {
                index: 0,
                rows: u.nrows(),
                cols: u.ncols(),
                expected_rows: d,
                expected_cols: d,
            });
        }
        let dev = crate::state::max_abs_diff(&(u.adjoint() * &u), &DMatrix::identity(d, d));
        if dev > 1e-9 {
            return Err(ChannelError::NotUnitary { deviation: dev });
        }
        Ok(Self::assemble(
            vec![u],
            dims.to_vec(),
            dims.to_vec(),
            TpMode::TracePreserving,
        ))
    }

    /// The dephasing channel `Delta` realized as the projector family
    /// `{|a><a|}`.
    pub fn dephasing(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        let kraus = (0..d)
            .map(|a| {
                let mut m = DMatrix::zeros(d, d);
                m[(a, a)] = Complex64::new(1.0, 0.0);
                m
            })
            .collect();
        Self::assemble(kraus, dims.to_vec(), dims.to_vec(), TpMode::TracePreserving)
    }

    /// Exchanges two blocks of subsystems: `|x>_A |y>_B -> |y>_B |x>_A`.
    pub fn block_swap(dims_a: &[usize], dims_b: &[usize]) -> Self {
        let da: usize = dims_a.iter().product();
        let db: usize = dims_b.iter().product();
        let d = da * db;
        let mut m = DMatrix::zeros(d, d);
        for x in 0..da {
            for y in 0..db {
                m[(y * da + x, x * db + y)] = Complex64::new(1.0, 0.0);
            }
        }
        let in_dims = [dims_a, dims_b].concat();
        let out_dims = [dims_b, dims_a].concat();
        Self::assemble(vec![m], in_dims, out_dims, TpMode::TracePreserving)
    }

    /// Two-party swap `M = sum_{a,b} |ab><ba|`.
    pub fn swap(dim_a: usize, dim_b: usize) -> Self {
        Self::block_swap(&[dim_a], &[dim_b])
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_total(&self) -> usize {
        self.in_dims.iter().product()
    }

    pub fn out_total(&self) -> usize {
        self.out_dims.iter().product()
    }

    pub fn kraus(&self) -> &[DMatrix<Complex64>] {
        &self.kraus
    }

    pub fn tp_mode(&self) -> TpMode {
        self.tp_mode
    }

    /// `sum_a M_a^dag M_a`.
    pub fn completeness_operator(&self) -> DMatrix<Complex64> {
        let d = self.in_total();
        let mut c = DMatrix::zeros(d, d);
        for m in &self.kraus {
            c += m.adjoint() * m;
        }
        c
    }

    /// Measures how far the completeness sum sits from the identity.
    pub fn validate(&self) -> KrausValidation {
        let d = self.in_total();
        let diff = self.completeness_operator() - DMatrix::<Complex64>::identity(d, d);
        let trace_preserving_deviation = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let max_eig = hermitian_eigenvalues(&diff)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        KrausValidation {
            trace_preserving_deviation,
            nonincreasing_excess: max_eig.max(0.0),
        }
    }

    /// Raw Kraus action `sum_a M_a m M_a^dag` with no dims checks.
    pub fn apply_matrix(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let out = self.out_total();
        let mut acc = DMatrix::zeros(out, out);
        for k in &self.kraus {
            acc += k * m * k.adjoint();
        }
        acc
    }

    /// Applies a trace-preserving channel to a state.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator, ChannelError> {
        if self.tp_mode != TpMode::TracePreserving {
            return Err(ChannelError::NotTracePreserving);
        }
        if rho.dims() != self.in_dims.as_slice() {
            return Err(ChannelError::DimensionMismatch {
                expected: self.in_dims.clone(),
                got: rho.dims().to_vec(),
            });
        }
        let out = self.apply_matrix(rho.matrix());
        Ok(DensityOperator::trusted(self.out_dims.clone(), out))
    }

    /// Applies the channel without renormalizing; valid for both modes.
    pub fn apply_subnormalized(
        &self,
        rho: &DensityOperator,
    ) -> Result<SubnormalizedState, ChannelError> {
        if rho.dims() != self.in_dims.as_slice() {
            return Err(ChannelError::DimensionMismatch {
                expected: self.in_dims.clone(),
                got: rho.dims().to_vec(),
            });
        }
        let out = self.apply_matrix(rho.matrix());
        Ok(SubnormalizedState::new(self.out_dims.clone(), out))
    }

    /// `late` after `early`; the Kraus set is all pairwise products.
    pub fn compose(late: &Self, early: &Self) -> Result<Self, ChannelError> {
        if early.out_dims != late.in_dims {
            return Err(ChannelError::DimensionMismatch {
                expected: late.in_dims.clone(),
                got: early.out_dims.clone(),
            });
        }
        let mut kraus = Vec::with_capacity(late.kraus.len() * early.kraus.len());
        for l in &late.kraus {
            for e in &early.kraus {
                kraus.push(l * e);
            }
        }
        let tp_mode = if late.tp_mode == TpMode::TracePreserving
            && early.tp_mode == TpMode::TracePreserving
        {
            TpMode::TracePreserving
        } else {
            TpMode::TraceNonIncreasing
        };
        Ok(Self::assemble(
            kraus,
            early.in_dims.clone(),
            late.out_dims.clone(),
            tp_mode,
        ))
    }

    /// Parallel application: the Kraus set is all tensor products of one
    /// operator per factor.
    pub fn tensor(channels: &[Self]) -> Result<Self, ChannelError> {
        let (first, rest) = channels.split_first().ok_or(ChannelError::EmptyKrausList)?;
        let mut acc = first.clone();
        for ch in rest {
            let mut kraus = Vec::with_capacity(acc.kraus.len() * ch.kraus.len());
            for a in &acc.kraus {
                for b in &ch.kraus {
                    kraus.push(a.kronecker(b));
                }
            }
            let tp_mode = if acc.tp_mode == TpMode::TracePreserving
                && ch.tp_mode == TpMode::TracePreserving
            {
                TpMode::TracePreserving
            } else {
                TpMode::TraceNonIncreasing
            };
            acc = Self::assemble(
                kraus,
                [acc.in_dims.as_slice(), ch.in_dims.as_slice()].concat(),
                [acc.out_dims.as_slice(), ch.out_dims.as_slice()].concat(),
                tp_mode,
            );
        }
        Ok(acc)
    }

    /// Structural incoherence test: every Kraus column carries at most one
    /// entry with modulus above `tol`.
    pub fn is_incoherent(&self, tol: f64) -> IncoherenceCheck {
        for (k, m) in self.kraus.iter().enumerate() {
            for col in 0..m.ncols() {
                let nonzeros = (0..m.nrows()).filter(|&r| m[(r, col)].norm() > tol).count();
                if nonzeros > 1 {
                    return IncoherenceCheck {
                        incoherent: false,
                        violation: Some((k, col)),
                    };
                }
            }
        }
        IncoherenceCheck {
            incoherent: true,
            violation: None,
        }
    }
}

/// Permutation-phase unitary `U = sum_a e^{i phi_a} |pi(a)><a|`, the general
/// form of a unitary that cannot create coherence.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeUnitary {
    perm: Vec<usize>,
    phases: Vec<f64>,
}

impl FreeUnitary {
    pub fn new(perm: Vec<usize>, phases: Vec<f64>) -> Result<Self, ChannelError> {
        if phases.len() != perm.len() {
            return Err(ChannelError::PhaseCountMismatch {
                phases: phases.len(),
                perm: perm.len(),
            });
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(ChannelError::NotAPermutation);
            }
            seen[p] = true;
        }
        Ok(Self { perm, phases })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            perm: (0..dim).collect(),
            phases: vec![0.0; dim],
        }
    }

    /// Seeded random permutation and phases.
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.shuffle(&mut rng);
        let phases = (0..dim)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        Self { perm, phases }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// `U^dag`, again a permutation-phase unitary: `(pi^-1, -phi o pi^-1)`.
    pub fn inverse(&self) -> Self {
        let d = self.dim();
        let mut perm = vec![0usize; d];
        let mut phases = vec![0.0; d];
        for a in 0..d {
            perm[self.perm[a]] = a;
            phases[self.perm[a]] = -self.phases[a];
        }
        Self { perm, phases }
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut u = DMatrix::zeros(d, d);
        for a in 0..d {
            u[(self.perm[a], a)] = Complex64::from_polar(1.0, self.phases[a]);
        }
        u
    }

    /// Embeds the unitary as a single-Kraus channel on the given subsystem
    /// decomposition (product of dims must equal the unitary dimension).
    pub fn to_channel(&self, dims: &[usize]) -> Result<KrausChannel, ChannelError> {
        let d: usize = dims.iter().product();
        if d != self.dim() {
            return Err(ChannelError::DimensionMismatch {
                expected: vec![self.dim()],
                got: dims.to_vec(),
            });
        }
        Ok(KrausChannel::assemble(
            vec![self.matrix()],
            dims.to_vec(),
            dims.to_vec(),
            TpMode::TracePreserving,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::max_abs_diff;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn plus() -> DensityOperator {
        DensityOperator::from_pure(&[c(1.0, 0.0), c(1.0, 0.0)], vec![2]).unwrap()
    }

    fn ket_bra(d: usize, i: usize, j: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(d, d);
        m[(i, j)] = c(1.0, 0.0);
        m
    }

    #[test]
    fn identity_channel_fixes_states() {
        let rho = DensityOperator::random(vec![2, 2], 3, 5).unwrap();
        let id = KrausChannel::identity(&[2, 2]);
        assert!(id.apply(&rho).unwrap().approx_eq(&rho, 1e-14));
    }

    #[test]
    fn dephasing_kills_off_diagonals() {
        let out = KrausChannel::dephasing(&[2]).apply(&plus()).unwrap();
        let expected = DensityOperator::from_diagonal(&[0.5, 0.5], vec![2]).unwrap();
        assert!(out.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn bit_flip_permutes_basis() {
        let x = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let ch = KrausChannel::unitary(x, &[2]).unwrap();
        let zero = DensityOperator::from_diagonal(&[1.0, 0.0], vec![2]).unwrap();
        let one = DensityOperator::from_diagonal(&[0.0, 1.0], vec![2]).unwrap();
        assert!(ch.apply(&zero).unwrap().approx_eq(&one, 0.0));
    }

    #[test]
    fn validation_reports_per_mode() {
        let id = KrausChannel::identity(&[2]);
        let v = id.validate();
        assert_eq!(v.trace_preserving_deviation, 0.0);
        assert!(v.is_trace_preserving(0.0));

        // {|0><0|} alone: valid trace-non-increasing, invalid trace-preserving.
        let proj = KrausChannel::assemble(
            vec![ket_bra(2, 0, 0)],
            vec![2],
            vec![2],
            TpMode::TraceNonIncreasing,
        );
        let v = proj.validate();
        assert!(v.is_trace_non_increasing(1e-12));
        assert!(!v.is_trace_preserving(0.5));

        // {|0><0|, |0><1|}: completeness sums to the identity.
        let ch = KrausChannel::new(
            vec![ket_bra(2, 0, 0), ket_bra(2, 0, 1)],
            vec![2],
            vec![2],
            TpMode::TracePreserving,
            &tol(),
        )
        .unwrap();
        assert!(ch.validate().is_trace_preserving(1e-12));
    }

    #[test]
    fn constructor_rejects_incomplete_tp_channel() {
        let err = KrausChannel::new(
            vec![ket_bra(2, 0, 0)],
            vec![2],
            vec![2],
            TpMode::TracePreserving,
            &tol(),
        );
        assert!(matches!(
            err,
            Err(ChannelError::CompletenessViolated { .. })
        ));
    }

    #[test]
    fn compose_matches_sequential_action() {
        let rho = DensityOperator::random(vec![2], 2, 21).unwrap();
        let deph = KrausChannel::dephasing(&[2]);
        let id = KrausChannel::identity(&[2]);

        let with_id = KrausChannel::compose(&id, &deph).unwrap();
        assert!(with_id
            .apply(&rho)
            .unwrap()
            .approx_eq(&deph.apply(&rho).unwrap(), 1e-14));

        // Dephasing is idempotent in action.
        let twice = KrausChannel::compose(&deph, &deph).unwrap();
        assert!(twice
            .apply(&rho)
            .unwrap()
            .approx_eq(&deph.apply(&rho).unwrap(), 1e-13));
    }

    #[test]
    fn free_unitary_composes_to_identity_with_inverse() {
        let phi = FreeUnitary::random(3, 9);
        let rho = DensityOperator::random(vec![3], 3, 10).unwrap();
        let fwd = phi.to_channel(&[3]).unwrap();
        let bwd = phi.inverse().to_channel(&[3]).unwrap();
        let round = KrausChannel::compose(&bwd, &fwd).unwrap();
        assert!(round.apply(&rho).unwrap().approx_eq(&rho, 1e-13));
    }

    #[test]
    fn tensor_factorizes_on_product_states() {
        let a = DensityOperator::random(vec![2], 2, 31).unwrap();
        let b = DensityOperator::random(vec![2], 1, 32).unwrap();
        let deph = KrausChannel::dephasing(&[2]);
        let id = KrausChannel::identity(&[2]);

        let joint = KrausChannel::tensor(&[deph.clone(), id.clone()]).unwrap();
        assert_eq!(joint.kraus().len(), deph.kraus().len() * id.kraus().len());
        let lhs = joint.apply(&a.tensor(&b)).unwrap();
        let rhs = deph.apply(&a).unwrap().tensor(&id.apply(&b).unwrap());
        assert!(lhs.approx_eq(&rhs, 1e-13));

        let id2 = KrausChannel::tensor(&[id.clone(), id]).unwrap();
        let rho = DensityOperator::random(vec![2, 2], 4, 33).unwrap();
        assert!(id2.apply(&rho).unwrap().approx_eq(&rho, 1e-14));
    }

    #[test]
    fn incoherence_test_accepts_structured_and_rejects_hadamard() {
        assert!(KrausChannel::dephasing(&[3]).is_incoherent(1e-12).incoherent);
        assert!(KrausChannel::swap(2, 2).is_incoherent(1e-12).incoherent);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        let had = KrausChannel::unitary(h, &[2]).unwrap();
        let check = had.is_incoherent(1e-12);
        assert!(!check.incoherent);
        assert_eq!(check.violation, Some((0, 0)));
    }

    #[test]
    fn free_unitary_channel_behaviour() {
        let id = FreeUnitary::identity(2).to_channel(&[2]).unwrap();
        let rho = DensityOperator::random(vec![2], 2, 41).unwrap();
        assert!(id.apply(&rho).unwrap().approx_eq(&rho, 0.0));

        // Transposition (0 1) is the bit flip.
        let x = FreeUnitary::new(vec![1, 0], vec![0.0, 0.0]).unwrap();
        let ch = x.to_channel(&[2]).unwrap();
        let zero = DensityOperator::from_diagonal(&[1.0, 0.0], vec![2]).unwrap();
        let one = DensityOperator::from_diagonal(&[0.0, 1.0], vec![2]).unwrap();
        assert!(ch.apply(&zero).unwrap().approx_eq(&one, 0.0));
        assert!(ch.is_incoherent(1e-12).incoherent);

        // Free unitaries keep diagonal states diagonal.
        let phi = FreeUnitary::random(4, 17);
        let diag = DensityOperator::random_diagonal(vec![4], 18).unwrap();
        let out = phi.to_channel(&[4]).unwrap().apply(&diag).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(out.matrix()[(i, j)].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn free_unitary_rejects_non_permutation() {
        assert!(matches!(
            FreeUnitary::new(vec![0, 0], vec![0.0, 0.0]),
            Err(ChannelError::NotAPermutation)
        ));
        assert!(matches!(
            FreeUnitary::new(vec![0, 1], vec![0.0]),
            Err(ChannelError::PhaseCountMismatch { .. })
        ));
    }

    #[test]
    fn swap_exchanges_factors() {
        let rho = DensityOperator::from_diagonal(&[1.0, 0.0], vec![2]).unwrap();
        let sigma = plus();
        let sw = KrausChannel::swap(2, 2);
        let out = sw.apply(&rho.tensor(&sigma)).unwrap();
        assert!(out.approx_eq(&sigma.tensor(&rho), 0.0));

        // Symmetric inputs are fixed points.
        let sym = sw.apply(&sigma.tensor(&sigma)).unwrap();
        assert!(sym.approx_eq(&sigma.tensor(&sigma), 0.0));

        // Applying twice returns the input.
        let any = DensityOperator::random(vec![2, 2], 4, 55).unwrap();
        let back = sw.apply(&sw.apply(&any).unwrap()).unwrap();
        assert!(back.approx_eq(&any, 1e-14));
    }

    #[test]
    fn swap_of_free_states_is_free() {
        let sigma = DensityOperator::random_diagonal(vec![2], 61).unwrap();
        let gamma = DensityOperator::random_diagonal(vec![3], 62).unwrap();
        let sw = KrausChannel::block_swap(&[2], &[3]);
        let out = sw.apply(&sigma.tensor(&gamma)).unwrap();
        assert!(out.approx_eq(&gamma.tensor(&sigma), 0.0));
        let m = out.matrix();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(m[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn block_swap_matches_pairwise_swaps() {
        // Swapping (A1 A2) with (C1 C2) as blocks equals swapping A1<->C1
        // and A2<->C2 individually, as a permutation of basis labels.
        let block = KrausChannel::block_swap(&[2, 2], &[2, 2]);
        let d = 16;
        let mut perm = vec![0usize; d];
        for a1 in 0..2 {
            for a2 in 0..2 {
                for c1 in 0..2 {
                    for c2 in 0..2 {
                        let src = ((a1 * 2 + a2) * 2 + c1) * 2 + c2;
                        let dst = ((c1 * 2 + c2) * 2 + a1) * 2 + a2;
                        perm[src] = dst;
                    }
                }
            }
        }
        let pairwise = FreeUnitary::new(perm, vec![0.0; d]).unwrap();
        assert_eq!(max_abs_diff(&block.kraus()[0], &pairwise.matrix()), 0.0);
    }

    #[test]
    fn apply_rejects_mode_and_dims_misuse() {
        let proj = KrausChannel::assemble(
            vec![ket_bra(2, 0, 0)],
            vec![2],
            vec![2],
            TpMode::TraceNonIncreasing,
        );
        let rho = DensityOperator::maximally_mixed(vec![2]).unwrap();
        assert!(matches!(
            proj.apply(&rho),
            Err(ChannelError::NotTracePreserving)
        ));
        let sub = proj.apply_subnormalized(&rho).unwrap();
        assert!((sub.trace() - 0.5).abs() < 1e-15);

        let id = KrausChannel::identity(&[3]);
        assert!(matches!(
            id.apply(&rho),
            Err(ChannelError::DimensionMismatch { .. })
        ));
    }
}
