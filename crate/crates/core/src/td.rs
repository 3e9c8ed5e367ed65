//! Hamiltonians of the form `H(t) = H_0 + Σ_k (e^{iν_k t} H_k + e^{-iν_k t} H_k†)`.

use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::sparse::{LinearMap, SparseOperator, C64};

/// Frequencies closer than this are merged into one term.
pub const FREQUENCY_MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct RotatingTerm {
    pub operator: SparseOperator,
    adjoint: SparseOperator,
    pub frequency: f64,
}

#[derive(Clone, Debug)]
pub struct TimeDependentOperator {
    static_part: SparseOperator,
    terms: Vec<RotatingTerm>,
}

impl TimeDependentOperator {
    /// Terms sharing a frequency are summed, empty terms dropped, and a
    /// zero-frequency term is folded into the static part as `H + H†`.
    pub fn new(static_part: SparseOperator, terms: Vec<(SparseOperator, f64)>) -> Result<Self> {
        let mut static_part = static_part.into_hermitian()?;
        let space = static_part.space().clone();
        let mut merged: Vec<(SparseOperator, f64)> = Vec::new();
        for (op, nu) in terms {
            if op.space() != &space {
                return Err(Error::DimensionMismatch {
                    expected: space.total_dim(),
                    found: op.dim(),
                });
            }
            if !nu.is_finite() {
                return Err(Error::InvalidArgument("non-finite frequency".into()));
            }
            if let Some(slot) = merged
                .iter_mut()
                .find(|(_, f)| (f - nu).abs() < FREQUENCY_MERGE_TOLERANCE)
            {
                slot.0 = slot.0.add(&op)?;
            } else {
                merged.push((op, nu));
            }
        }
        let mut out = Vec::new();
        for (op, nu) in merged {
            if op.nnz() == 0 {
                continue;
            }
            if nu.abs() < FREQUENCY_MERGE_TOLERANCE {
                let herm = op.add(&op.adjoint())?.into_hermitian()?;
                static_part = static_part.add(&herm)?;
                continue;
            }
            let adjoint = op.adjoint();
            out.push(RotatingTerm {
                operator: op,
                adjoint,
                frequency: nu,
            });
        }
        Ok(Self {
            static_part,
            terms: out,
        })
    }

    pub fn from_static(op: SparseOperator) -> Result<Self> {
        Self::new(op, Vec::new())
    }

    pub fn space(&self) -> &HilbertSpace {
        self.static_part.space()
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn static_part(&self) -> &SparseOperator {
        &self.static_part
    }

    pub fn terms(&self) -> &[RotatingTerm] {
        &self.terms
    }

    pub fn is_static(&self) -> bool {
        self.terms.is_empty()
    }

    /// Signed frequencies of the rotating terms, in insertion order.
    pub fn frequencies(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.frequency).collect()
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.frequency.abs()).fold(0.0, f64::max)
    }

    /// Materializes `H(t)`.
    pub fn evaluate(&self, t: f64) -> Result<SparseOperator> {
        let mut acc = self.static_part.clone();
        for term in &self.terms {
            let phase = C64::from_polar(1.0, term.frequency * t);
            acc = acc.axpy(phase, &term.operator)?.axpy(phase.conj(), &term.adjoint)?;
        }
        acc.into_hermitian()
    }

    /// `H(t)` as a matrix-free map.
    pub fn at(&self, t: f64) -> FrozenOperator<'_> {
        let phases = self
            .terms
            .iter()
            .map(|term| C64::from_polar(1.0, term.frequency * t))
            .collect();
        FrozenOperator { op: self, phases }
    }
}

/// `H(t)` at a fixed time.
pub struct FrozenOperator<'a> {
    op: &'a TimeDependentOperator,
    phases: Vec<C64>,
}

impl LinearMap for FrozenOperator<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        LinearMap::apply_into(&self.op.static_part, x, y);
        for (term, &phase) in self.op.terms.iter().zip(&self.phases) {
            term.operator.apply_add(phase, x, y);
            term.adjoint.apply_add(phase.conj(), x, y);
        }
    }

    fn is_hermitian(&self) -> bool {
        true
    }
}
