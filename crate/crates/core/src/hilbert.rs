use crate::error::{Error, Result};

/// Ordered tensor-product structure of a state space.
///
/// Site 0 is the most significant factor of the flat basis index. Cavity
/// models list all atoms of cavity 0, then its photon mode, then the atoms
/// of cavity 1, and so on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    local_dims: Vec<usize>,
    total_dim: usize,
}

impl HilbertSpace {
    pub fn new(local_dims: Vec<usize>) -> Result<Self> {
        if local_dims.is_empty() {
            return Err(Error::InvalidArgument(
                "a Hilbert space needs at least one factor".into(),
            ));
        }
        if let Some(d) = local_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidArgument(format!(
                "local dimension {d} < 2"
            )));
        }
        let total_dim = local_dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidArgument("total dimension overflows".into()))?;
        Ok(Self {
            local_dims,
            total_dim,
        })
    }

    /// A single factor of dimension `dim`.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    /// `n` identical factors of dimension `dim`.
    pub fn uniform(dim: usize, n: usize) -> Result<Self> {
        Self::new(vec![dim; n])
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn n_sites(&self) -> usize {
        self.local_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Product of local dimensions over `first..first + len`.
    pub fn block_dim(&self, first: usize, len: usize) -> Result<usize> {
        if len == 0 || first + len > self.local_dims.len() {
            return Err(Error::InvalidArgument(format!(
                "site block {first}..{} out of range for {} sites",
                first + len,
                self.local_dims.len()
            )));
        }
        Ok(self.local_dims[first..first + len].iter().product())
    }

    /// Digits of a flat basis index, one per site.
    pub fn decompose(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.local_dims.len()];
        for (slot, &d) in digits.iter_mut().zip(&self.local_dims).rev() {
            *slot = index % d;
            index /= d;
        }
        digits
    }

    pub fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.local_dims)
            .fold(0, |acc, (&k, &d)| acc * d + k)
    }

    /// Concatenation of two spaces (the tensor product `self ⊗ other`).
    pub fn tensor(&self, other: &HilbertSpace) -> Result<Self> {
        let mut dims = self.local_dims.clone();
        dims.extend_from_slice(&other.local_dims);
        Self::new(dims)
    }
}
