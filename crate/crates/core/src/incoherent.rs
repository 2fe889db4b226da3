//! Structured incoherent operations: the single-column Kraus form
//! `M_a = sum_b c_ab |f_a(b)><b|`, instruments built from it, and separable
//! incoherent operations (sums of tensor products of local incoherent maps).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{ChannelError, KrausChannel, TpMode};
use crate::state::{max_abs_diff, DensityOperator};
use crate::{derive_seed, Tolerances, COLUMN_ZERO_TOL};

/// One Kraus operator of an incoherent operation: column `b` maps to row
/// `column_map[b]` with amplitude `coeffs[b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IoKraus {
    pub column_map: Vec<usize>,
    pub coeffs: Vec<Complex64>,
}

impl IoKraus {
    fn to_matrix(&self, dim: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(dim, dim);
        for (b, (&row, &c)) in self.column_map.iter().zip(&self.coeffs).enumerate() {
            if c.norm() > 0.0 {
                m[(row, b)] = c;
            }
        }
        m
    }
}

/// A Kraus channel together with the column-map/coefficient structure that
/// witnesses its incoherence.
#[derive(Debug, Clone)]
pub struct IncoherentChannel {
    base: KrausChannel,
    structure: Vec<IoKraus>,
}

impl IncoherentChannel {
    /// Builds the channel from explicit structure and validates the
    /// completeness relation for `tp_mode`.
    pub fn from_structure(
        dims: &[usize],
        structure: Vec<IoKraus>,
        tp_mode: TpMode,
        tol: &Tolerances,
    ) -> Result<Self, ChannelError> {
        let d: usize = dims.iter().product();
        if structure.is_empty() {
            return Err(ChannelError::EmptyKrausList);
        }
        for (index, op) in structure.iter().enumerate() {
            if op.column_map.len() != d || op.coeffs.len() != d {
                return Err(ChannelError::KrausShapeMismatch {
                    index,
                    rows: op.column_map.len(),
                    cols: op.coeffs.len(),
                    expected_rows: d,
                    expected_cols: d,
                });
            }
            if op.column_map.iter().any(|&r| r >= d) {
                return Err(ChannelError::NotAPermutation);
            }
        }
        let kraus = structure.iter().map(|op| op.to_matrix(d)).collect();
        let base = KrausChannel::new(kraus, dims.to_vec(), dims.to_vec(), tp_mode, tol)?;
        Ok(Self { base, structure })
    }

    /// Extracts the structure of an existing channel, failing with the first
    /// violating (Kraus, column) pair when some column carries two entries.
    pub fn try_from_channel(ch: &KrausChannel, tol: f64) -> Result<Self, ChannelError> {
        let check = ch.is_incoherent(tol);
        if let Some((kraus, column)) = check.violation {
            return Err(ChannelError::NotIncoherentFactor {
                term: 0,
                site: 0,
                kraus,
                column,
            });
        }
        let d = ch.in_total();
        let structure = ch
            .kraus()
            .iter()
            .map(|m| {
                let mut column_map = vec![0usize; d];
                let mut coeffs = vec![Complex64::new(0.0, 0.0); d];
                for b in 0..d {
                    for r in 0..d {
                        if m[(r, b)].norm() > tol {
                            column_map[b] = r;
                            coeffs[b] = m[(r, b)];
                            break;
                        }
                    }
                }
                IoKraus { column_map, coeffs }
            })
            .collect();
        Ok(Self {
            base: ch.clone(),
            structure,
        })
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.base
    }

    pub fn into_channel(self) -> KrausChannel {
        self.base
    }

    pub fn structure(&self) -> &[IoKraus] {
        &self.structure
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator, ChannelError> {
        self.base.apply(rho)
    }
}

/// Renormalizes a raw structure so that every column satisfies
/// `sum_a |c_ab|^2 = 1`. Requires each column to carry some weight.
fn normalize_columns(structure: &mut [IoKraus], dim: usize) {
    for b in 0..dim {
        let w: f64 = structure.iter().map(|op| op.coeffs[b].norm_sqr()).sum();
        debug_assert!(w > 0.0, "column {b} has no weight");
        let s = w.sqrt();
        for op in structure.iter_mut() {
            op.coeffs[b] /= Complex64::new(s, 0.0);
        }
    }
}

/// Draws a raw IO structure with `n_kraus` operators on total dimension `d`.
///
/// Column maps are uniform, then made injective on each operator's
/// coefficient support (colliding columns are dropped from that operator);
/// this makes column-wise normalization enforce the completeness relation
/// exactly. Columns left without weight anywhere are reassigned to a free
/// row of one operator.
fn raw_io_structure(d: usize, n_kraus: usize, rng: &mut ChaCha8Rng) -> Vec<IoKraus> {
    let mut structure: Vec<IoKraus> = (0..n_kraus)
        .map(|_| {
            let column_map = (0..d).map(|_| rng.random_range(0..d)).collect();
            let coeffs = (0..d)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex64::new(re, im)
                })
                .collect();
            IoKraus { column_map, coeffs }
        })
        .collect();

    // Drop colliding columns per operator (keep the lowest column index).
    for op in &mut structure {
        let mut used = vec![false; d];
        for b in 0..d {
            let row = op.column_map[b];
            if used[row] {
                op.coeffs[b] = Complex64::new(0.0, 0.0);
            } else {
                used[row] = true;
            }
        }
    }

    // Guarantee every column keeps support in at least one operator.
    for b in 0..d {
        let has_weight = structure.iter().any(|op| op.coeffs[b].norm() > 0.0);
        if !has_weight {
            let op = &mut structure[b % n_kraus];
            let mut used = vec![false; d];
            for bb in 0..d {
                if op.coeffs[bb].norm() > 0.0 {
                    used[op.column_map[bb]] = true;
                }
            }
            let free_row = (0..d).find(|&r| !used[r]).expect("some row is free");
            op.column_map[b] = free_row;
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            op.coeffs[b] = Complex64::new(re + 0.1, im);
        }
    }
    structure
}

/// Seeded random trace-preserving incoherent operation on the given
/// subsystem decomposition.
pub fn sample_random_io(
    dims: &[usize],
    n_kraus: usize,
    seed: u64,
) -> Result<IncoherentChannel, ChannelError> {
    if n_kraus == 0 {
        return Err(ChannelError::EmptyKrausList);
    }
    let d: usize = dims.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut structure = raw_io_structure(d, n_kraus, &mut rng);
    normalize_columns(&mut structure, d);
    IncoherentChannel::from_structure(dims, structure, TpMode::TracePreserving, &Tolerances::default())
}

/// A collection of trace-non-increasing incoherent branches whose sum is
/// trace-preserving; the selective form `Lambda = sum_a Lambda_a`.
#[derive(Debug, Clone)]
pub struct Instrument {
    branches: Vec<IncoherentChannel>,
}

impl Instrument {
    pub fn new(branches: Vec<IncoherentChannel>, tol: &Tolerances) -> Result<Self, ChannelError> {
        let (first, rest) = branches.split_first().ok_or(ChannelError::EmptyKrausList)?;
        let dims = first.channel().in_dims().to_vec();
        for b in rest {
            if b.channel().in_dims() != dims.as_slice() {
                return Err(ChannelError::DimensionMismatch {
                    expected: dims.clone(),
                    got: b.channel().in_dims().to_vec(),
                });
            }
        }
        let d: usize = dims.iter().product();
        let mut total = DMatrix::<Complex64>::zeros(d, d);
        for b in &branches {
            total += b.channel().completeness_operator();
        }
        let deviation = max_abs_diff(&total, &DMatrix::identity(d, d));
        if deviation > tol.tol_tr.max(1e-10) * 10.0 {
            return Err(ChannelError::NotTracePreservingSum { deviation });
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[IncoherentChannel] {
        &self.branches
    }

    pub fn in_dims(&self) -> &[usize] {
        self.branches[0].channel().in_dims()
    }

    /// Seeded random instrument: one IO structure split into branches.
    pub fn sample(
        dims: &[usize],
        n_branches: usize,
        kraus_per_branch: usize,
        seed: u64,
    ) -> Result<Self, ChannelError> {
        if n_branches == 0 || kraus_per_branch == 0 {
            return Err(ChannelError::EmptyKrausList);
        }
        let d: usize = dims.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut structure = raw_io_structure(d, n_branches * kraus_per_branch, &mut rng);
        normalize_columns(&mut structure, d);
        let tol = Tolerances::default();
        let branches = structure
            .chunks(kraus_per_branch)
            .map(|chunk| {
                IncoherentChannel::from_structure(
                    dims,
                    chunk.to_vec(),
                    TpMode::TraceNonIncreasing,
                    &tol,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(branches, &tol)
    }
}

/// Separable incoherent operation: `sum_b Lambda^b_1 x ... x Lambda^b_S`,
/// every local factor structurally incoherent and possibly trace-
/// non-increasing, the sum trace-preserving.
#[derive(Debug, Clone)]
pub struct SioChannel {
    site_dims: Vec<usize>,
    terms: Vec<Vec<KrausChannel>>,
}

impl SioChannel {
    /// Validates factor structure (incoherence, matching site dims) and the
    /// trace-preservation of the summed map.
    pub fn new(terms: Vec<Vec<KrausChannel>>, tol: &Tolerances) -> Result<Self, ChannelError> {
        let first = terms.first().ok_or(ChannelError::NoTerms)?;
        if first.is_empty() {
            return Err(ChannelError::FactorCountMismatch {
                term: 0,
                expected: 1,
                got: 0,
            });
        }
        let site_dims: Vec<usize> = first.iter().map(|f| f.in_total()).collect();
        for (t, term) in terms.iter().enumerate() {
            if term.len() != site_dims.len() {
                return Err(ChannelError::FactorCountMismatch {
                    term: t,
                    expected: site_dims.len(),
                    got: term.len(),
                });
            }
            for (s, factor) in term.iter().enumerate() {
                if factor.in_total() != site_dims[s] || factor.out_total() != site_dims[s] {
                    return Err(ChannelError::DimensionMismatch {
                        expected: vec![site_dims[s]],
                        got: vec![factor.in_total(), factor.out_total()],
                    });
                }
                let check = factor.is_incoherent(COLUMN_ZERO_TOL);
                if let Some((kraus, column)) = check.violation {
                    return Err(ChannelError::NotIncoherentFactor {
                        term: t,
                        site: s,
                        kraus,
                        column,
                    });
                }
            }
        }

        let d: usize = site_dims.iter().product();
        let mut total = DMatrix::<Complex64>::zeros(d, d);
        for term in &terms {
            let mut c = term[0].completeness_operator();
            for factor in &term[1..] {
                c = c.kronecker(&factor.completeness_operator());
            }
            total += c;
        }
        let deviation = max_abs_diff(&total, &DMatrix::identity(d, d));
        if deviation > tol.tol_tr.max(1e-10) * 100.0 {
            return Err(ChannelError::NotTracePreservingSum { deviation });
        }
        Ok(Self { site_dims, terms })
    }

    pub fn site_dims(&self) -> &[usize] {
        &self.site_dims
    }

    pub fn n_sites(&self) -> usize {
        self.site_dims.len()
    }

    pub fn terms(&self) -> &[Vec<KrausChannel>] {
        &self.terms
    }

    pub fn total_dim(&self) -> usize {
        self.site_dims.iter().product()
    }

    /// Action as the sum of per-term tensor-product applications.
    pub fn apply_matrix(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let d = self.total_dim();
        let mut acc = DMatrix::zeros(d, d);
        for term in &self.terms {
            let joint = KrausChannel::tensor(term).expect("term validated nonempty");
            acc += joint.apply_matrix(m);
        }
        acc
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator, ChannelError> {
        if rho.total_dim() != self.total_dim() {
            return Err(ChannelError::DimensionMismatch {
                expected: self.site_dims.clone(),
                got: rho.dims().to_vec(),
            });
        }
        Ok(DensityOperator::trusted(
            self.site_dims.clone(),
            self.apply_matrix(rho.matrix()),
        ))
    }

    /// Flattens into a single global Kraus channel (union over terms of all
    /// tensor products of local Kraus operators).
    pub fn to_kraus_channel(&self) -> KrausChannel {
        let mut kraus = Vec::new();
        for term in &self.terms {
            let joint = KrausChannel::tensor(term).expect("term validated nonempty");
            kraus.extend(joint.kraus().iter().cloned());
        }
        KrausChannel::assemble(
            kraus,
            self.site_dims.clone(),
            self.site_dims.clone(),
            TpMode::TracePreserving,
        )
    }
}

/// Seeded random SIO: one site measures (an IO instrument with `n_terms`
/// branches) and every other site applies a trace-preserving IO operation
/// conditioned on the outcome.
pub fn sample_random_sio(
    site_dims: &[usize],
    n_terms: usize,
    kraus_per_factor: usize,
    seed: u64,
) -> Result<SioChannel, ChannelError> {
    if site_dims.is_empty() {
        return Err(ChannelError::NoTerms);
    }
    let n_sites = site_dims.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measuring_site = rng.random_range(0..n_sites);
    let instrument = Instrument::sample(
        &[site_dims[measuring_site]],
        n_terms,
        kraus_per_factor,
        derive_seed(seed, 0xA11CE, 0),
    )?;

    let mut terms = Vec::with_capacity(n_terms);
    for (b, branch) in instrument.branches().iter().enumerate() {
        let mut factors = Vec::with_capacity(n_sites);
        for (s, &dim) in site_dims.iter().enumerate() {
            if s == measuring_site {
                factors.push(branch.channel().clone());
            } else {
                let conditioned = sample_random_io(
                    &[dim],
                    kraus_per_factor,
                    derive_seed(seed, 0xB0B + s as u64, b as u64),
                )?;
                factors.push(conditioned.into_channel());
            }
        }
        terms.push(factors);
    }
    SioChannel::new(terms, &Tolerances::default())
}
