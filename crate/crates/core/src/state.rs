use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::sparse::C64;

/// Dense state vector with a cached squared norm.
#[derive(Clone, Debug)]
pub struct QuantumState {
    space: HilbertSpace,
    amplitudes: Vec<C64>,
    norm_squared: f64,
}

fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

impl QuantumState {
    pub fn new(space: HilbertSpace, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                found: amplitudes.len(),
            });
        }
        let norm_squared = norm_sq(&amplitudes);
        Ok(Self {
            space,
            amplitudes,
            norm_squared,
        })
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let dim = space.total_dim();
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} >= dimension {dim}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(space, amps)
    }

    /// Product state from one local vector per site.
    pub fn product(space: HilbertSpace, locals: &[Vec<C64>]) -> Result<Self> {
        if locals.len() != space.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: space.n_sites(),
                found: locals.len(),
            });
        }
        for (v, &d) in locals.iter().zip(space.local_dims()) {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
        }
        let mut amps = vec![C64::new(1.0, 0.0)];
        for v in locals {
            amps = amps
                .iter()
                .flat_map(|a| v.iter().map(move |b| a * b))
                .collect();
        }
        Self::new(space, amps)
    }

    /// Normalized state with independent Gaussian-ish amplitudes from `seed`.
    pub fn random(space: HilbertSpace, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..space.total_dim())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Self::new(space, amps)
            .expect("length matches")
            .normalized()
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_squared(&self) -> f64 {
        self.norm_squared
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared.sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
            self.norm_squared = norm_sq(&self.amplitudes);
        }
        self
    }

    /// Replaces the amplitudes, recomputing the cached norm.
    pub fn with_amplitudes(&self, amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(self.space.clone(), amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_ordering() {
        let space = HilbertSpace::new(vec![2, 3]).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let s = QuantumState::product(space, &[vec![zero, one], vec![zero, zero, one]]).unwrap();
        assert_eq!(s.amplitudes()[5], one);
        assert!((s.norm_squared() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_is_normalized_and_seeded() {
        let space = HilbertSpace::uniform(2, 3).unwrap();
        let a = QuantumState::random(space.clone(), 7);
        let b = QuantumState::random(space, 7);
        assert!((a.norm_squared() - 1.0).abs() < 1e-12);
        assert_eq!(a.amplitudes(), b.amplitudes());
    }
}
