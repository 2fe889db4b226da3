//! Index bookkeeping for the computational product basis `|a_1 ... a_N>`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("subsystem dimension list is empty")]
    EmptyDims,
    #[error("subsystem dimension {dim} at position {index} is below 2")]
    DimTooSmall { index: usize, dim: usize },
}

/// The fixed incoherent basis of a composite system: the computational
/// product basis, identified by the ordered subsystem dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncoherentBasis {
    dims: Vec<usize>,
}

impl IncoherentBasis {
    pub fn new(dims: Vec<usize>) -> Result<Self, BasisError> {
        if dims.is_empty() {
            return Err(BasisError::EmptyDims);
        }
        for (index, &dim) in dims.iter().enumerate() {
            if dim < 2 {
                return Err(BasisError::DimTooSmall { index, dim });
            }
        }
        Ok(Self { dims })
    }

    /// N equal sites of local dimension `site_dim`.
    pub fn uniform(n_sites: usize, site_dim: usize) -> Result<Self, BasisError> {
        Self::new(vec![site_dim; n_sites])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Decomposes a flat basis index into per-site indices, leftmost site
    /// varying slowest.
    pub fn tuple_of(&self, mut flat: usize) -> Vec<usize> {
        let mut tuple = vec![0usize; self.dims.len()];
        for (i, &d) in self.dims.iter().enumerate().rev() {
            tuple[i] = flat % d;
            flat /= d;
        }
        tuple
    }

    pub fn flat_of(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.dims.len());
        tuple
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&t, &d)| acc * d + t)
    }

    /// Number of sites at which the two basis labels differ. The censorship
    /// channel scales off-diagonal entry (a, b) by epsilon to this power.
    pub fn mismatch_weight(&self, a: usize, b: usize) -> usize {
        let ta = self.tuple_of(a);
        let tb = self.tuple_of(b);
        ta.iter().zip(&tb).filter(|(x, y)| x != y).count()
    }
}
