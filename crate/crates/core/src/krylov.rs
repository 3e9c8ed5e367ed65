//! Krylov approximation of `exp(-i t A) v` with adaptive substeps.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::{LinearMap, C64};

/// Basis sizes at which convergence is checked before the basis is full.
const CHECKPOINTS: [usize; 8] = [4, 6, 8, 12, 16, 20, 25, 30];

/// Substeps are never allowed to shrink below this fraction of `|t|`.
const STEP_FLOOR: f64 = 1e-13;

const MAX_REJECTIONS: usize = 80;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KrylovStats {
    pub substeps: usize,
    pub rejections: usize,
    pub matvecs: usize,
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct Arnoldi {
    basis: Vec<Vec<C64>>,
    h: DMatrix<C64>,
    /// Number of columns of `h` filled.
    size: usize,
    happy: bool,
}

/// `exp(-i τ H_m) e_1` scaled by `β`, plus the error estimate
/// `β |τ h_{m+1,m} [φ₁(-iτH_m)]_{m,1}|`, from one augmented exponential.
fn small_propagator(arn: &Arnoldi, tau: f64, beta: f64) -> (Vec<C64>, f64) {
    let m = arn.size;
    let mut aug = DMatrix::<C64>::zeros(m + 1, m + 1);
    for c in 0..m {
        for r in 0..=(c + 1).min(m) {
            if r == m && arn.happy {
                continue;
            }
            aug[(r, c)] = arn.h[(r, c)] * C64::new(0.0, -tau);
        }
    }
    let e = aug.exp();
    let coeffs = (0..m).map(|r| e[(r, 0)] * beta).collect();
    let err = if arn.happy { 0.0 } else { beta * e[(m, 0)].norm() };
    (coeffs, err)
}

fn shrink(tau: f64, err: f64, tol: f64, m: usize) -> f64 {
    let f = 0.9 * (tol / err).powf(1.0 / (m as f64 + 1.0));
    tau * f.clamp(0.1, 0.9)
}

/// `exp(-i t A) v`. `A` need not be Hermitian. Each internal substep keeps
/// the estimated local error below `tol` (absolute, in the norm of `v`).
pub fn expmv<A: LinearMap + ?Sized>(
    a: &A,
    t: f64,
    v: &[C64],
    krylov_dim: usize,
    tol: f64,
) -> Result<(Vec<C64>, KrylovStats)> {
    let n = a.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    if krylov_dim < 2 || !(tol > 0.0) {
        return Err(Error::InvalidArgument(
            "krylov_dim must be >= 2 and the tolerance positive".into(),
        ));
    }
    let mut stats = KrylovStats::default();
    let mut w = v.to_vec();
    if t == 0.0 {
        return Ok((w, stats));
    }
    let sign = t.signum();
    let total = t.abs();
    let m_max = krylov_dim.min(n);
    let mut done = 0.0;
    let mut tau = total;
    let mut scratch = vec![C64::new(0.0, 0.0); n];

    while done < total {
        let beta = norm(&w);
        if beta == 0.0 {
            break;
        }
        tau = tau.min(total - done);
        let mut arn = Arnoldi {
            basis: vec![w.iter().map(|x| x / beta).collect()],
            h: DMatrix::zeros(m_max + 1, m_max),
            size: 0,
            happy: false,
        };
        let mut accepted: Option<(Vec<C64>, f64)> = None;
        for j in 0..m_max {
            a.apply_into(&arn.basis[j], &mut scratch);
            stats.matvecs += 1;
            let col_norm = norm(&scratch);
            for _ in 0..2 {
                for i in 0..=j {
                    let hij = dot(&arn.basis[i], &scratch);
                    arn.h[(i, j)] += hij;
                    for (s, b) in scratch.iter_mut().zip(&arn.basis[i]) {
                        *s -= hij * b;
                    }
                }
            }
            let hn = norm(&scratch);
            arn.h[(j + 1, j)] = C64::new(hn, 0.0);
            arn.size = j + 1;
            if hn <= 1e-13 * col_norm.max(f64::MIN_POSITIVE) {
                arn.happy = true;
                break;
            }
            arn.basis.push(scratch.iter().map(|x| x / hn).collect());
            if CHECKPOINTS.contains(&(j + 1)) && j + 1 < m_max {
                let (c, err) = small_propagator(&arn, sign * tau, beta);
                if err <= tol {
                    accepted = Some((c, err));
                    break;
                }
            }
        }
        let (coeffs, err) = match accepted {
            Some(x) => x,
            None => {
                let mut rejections = 0;
                loop {
                    let (c, err) = small_propagator(&arn, sign * tau, beta);
                    if err <= tol {
                        break (c, err);
                    }
                    rejections += 1;
                    stats.rejections += 1;
                    tau = shrink(tau, err, tol, arn.size);
                    if tau < STEP_FLOOR * total || rejections > MAX_REJECTIONS {
                        return Err(Error::NonConvergence(format!(
                            "Krylov step fell below the floor (error estimate {err:.3e}, tolerance {tol:.3e})"
                        )));
                    }
                }
            }
        };
        for x in w.iter_mut() {
            *x = C64::new(0.0, 0.0);
        }
        for (c, b) in coeffs.iter().zip(&arn.basis) {
            for (x, bi) in w.iter_mut().zip(b) {
                *x += c * bi;
            }
        }
        done += tau;
        stats.substeps += 1;
        if arn.happy {
            tau = total - done;
        } else if err > 0.0 {
            let grow = 0.9 * (tol / err).powf(1.0 / (arn.size as f64 + 1.0));
            tau *= grow.clamp(1.0, 5.0);
        } else {
            tau *= 5.0;
        }
    }
    Ok((w, stats))
}
