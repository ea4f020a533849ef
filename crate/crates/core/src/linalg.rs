//! Small dense Hermitian helpers for the brute-force oracles.
//!
//! The eigensolver is a cyclic Jacobi iteration. It never touches an
//! off-diagonal element that is exactly zero, so block-structured inputs keep
//! their decoupled diagonal entries bit for bit, and small eigenvalues come
//! out with good relative accuracy.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::model::C64;

pub type CMatrix4 = Matrix4<C64>;

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (unsorted) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix4) -> (Vector4<f64>, CMatrix4) {
    let mut a = *m;
    let mut v = CMatrix4::identity();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[(p, q)];
                let mag = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if mag == 0.0 || mag <= 0.5 * f64::EPSILON * (app.abs() * aqq.abs()).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let zeta = (aqq - app) / (2.0 * mag);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, s], [-s conj(phase), c conj(phase)]] on (p, q).
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                for k in 0..4 {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
                for k in 0..4 {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, p)] = C64::new(app - t * mag, 0.0);
                a[(q, q)] = C64::new(aqq + t * mag, 0.0);
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
            }
        }
        if !rotated {
            break;
        }
    }
    (Vector4::from_fn(|i, _| a[(i, i)].re), v)
}

pub fn hermiticity_defect(m: &CMatrix4) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checks a dense matrix is a density matrix up to `tolerance`.
pub fn validate_density(m: &CMatrix4, tolerance: f64) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState("non-finite element".into()));
    }
    let defect = hermiticity_defect(m);
    if defect > tolerance {
        return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > tolerance || trace.im.abs() > tolerance {
        return Err(Error::InvalidState(format!("trace {trace} != 1")));
    }
    let (values, _) = hermitian_eigen(m);
    let min = values.min();
    if min < -tolerance {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues below `floor` (absolute) are set to zero before taking roots.
pub fn psd_sqrt(m: &CMatrix4, floor: f64) -> CMatrix4 {
    let (values, vectors) = hermitian_eigen(m);
    let roots = values.map(|l| if l <= floor { 0.0 } else { l.sqrt() });
    let mut scaled = vectors;
    for (j, r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*r);
    }
    scaled * vectors.adjoint()
}

pub fn outer(v: &[C64; 4]) -> CMatrix4 {
    CMatrix4::from_fn(|r, c| v[r] * v[c].conj())
}
