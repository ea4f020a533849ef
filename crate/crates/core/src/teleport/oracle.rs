//! Brute-force teleportation references built from full 4x4 matrices.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermiticity_defect, outer, psd_sqrt, validate_density, CMatrix4};
use crate::model::{input_state_vector, InputState, C64};
use crate::quadrature::gauss_legendre;
use crate::xstate::XStateDensityMatrix;

use super::output_density_matrix;

/// Tolerance on Hermiticity and trace for oracle inputs.
const INPUT_TOLERANCE: f64 = 1e-9;

/// Eigenvalues below this fraction of the largest are treated as zero in the
/// fidelity square roots, so pure states stay exactly rank one.
const RELATIVE_RANK_FLOOR: f64 = 1e-13;

fn pauli(i: usize) -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let im = C64::new(0.0, 1.0);
    match i {
        0 => [[one, z], [z, one]],
        1 => [[z, one], [one, z]],
        2 => [[z, -im], [im, z]],
        _ => [[one, z], [z, -one]],
    }
}

fn kron(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> CMatrix4 {
    CMatrix4::from_fn(|r, c| a[r / 2][c / 2] * b[r % 2][c % 2])
}

/// Bell vectors `Psi-`, `Phi-`, `Phi+`, `Psi+` in the crate basis.
pub fn bell_vectors() -> [[C64; 4]; 4] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    [[z, h, -h, z], [h, z, z, -h], [h, z, z, h], [z, h, h, z]]
}

/// Bell weights from explicit projector traces of a dense state.
pub fn bell_probabilities_dense(rho: &CMatrix4) -> [f64; 4] {
    bell_vectors().map(|v| (outer(&v) * rho).trace().re)
}

/// Output state as the explicit sum over the 16 Pauli-pair corrections.
pub fn output_via_pauli_channel(rho_ch: &XStateDensityMatrix, s: &InputState) -> Result<CMatrix4> {
    rho_ch.validate()?;
    let rho_in = outer(&input_state_vector(s)?);
    let p = bell_probabilities_dense(&rho_ch.to_dense());
    let mut out = CMatrix4::zeros();
    for (i, pi) in p.iter().enumerate() {
        for (j, pj) in p.iter().enumerate() {
            let u = kron(&pauli(i), &pauli(j));
            out += (u * rho_in * u.adjoint()).scale(pi * pj);
        }
    }
    Ok(out)
}

/// Hill-Wootters concurrence of an arbitrary two-qubit state.
///
/// The square roots of the spin-flip eigenvalues are the singular values of
/// `sqrt(rho) (sy x sy) conj(sqrt(rho))`.
pub fn wootters_concurrence(rho: &CMatrix4) -> Result<f64> {
    check_oracle_input(rho)?;
    let root = psd_sqrt(rho, 0.0);
    let flip = kron(&pauli(2), &pauli(2));
    let product = root * flip * root.map(|z| z.conj());
    let mut s: Vec<f64> = product.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok((s[0] - s[1] - s[2] - s[3]).clamp(0.0, 1.0))
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`, evaluated as the
/// squared nuclear norm of `sqrt(a) sqrt(b)`.
pub fn uhlmann_fidelity(a: &CMatrix4, b: &CMatrix4) -> Result<f64> {
    check_oracle_input(a)?;
    check_oracle_input(b)?;
    let ra = psd_sqrt(a, rank_floor(a));
    let rb = psd_sqrt(b, rank_floor(b));
    let nuclear: f64 = (ra * rb).singular_values().iter().sum();
    Ok(nuclear * nuclear)
}

fn rank_floor(m: &CMatrix4) -> f64 {
    let (values, _) = hermitian_eigen(m);
    RELATIVE_RANK_FLOOR * values.max().max(0.0)
}

fn check_oracle_input(m: &CMatrix4) -> Result<()> {
    let defect = hermiticity_defect(m);
    if defect > INPUT_TOLERANCE {
        return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > INPUT_TOLERANCE || trace.im.abs() > INPUT_TOLERANCE {
        return Err(Error::InvalidState(format!("trace {trace} != 1")));
    }
    validate_density(m, INPUT_TOLERANCE)
}

const THETA_NODES: usize = 64;
const PHI_NODES: usize = 8;

/// Average of `<psi|rho_out|psi>` over the uniform measure on pure inputs,
/// by Gauss-Legendre in `theta` and the trapezoid rule in `phi`.
pub fn average_fidelity_numeric(rho_ch: &XStateDensityMatrix) -> Result<f64> {
    rho_ch.validate()?;
    let (nodes, weights) = gauss_legendre(THETA_NODES);
    let mut total = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let theta = 0.5 * PI * (x + 1.0);
        let mut ring = 0.0;
        for k in 0..PHI_NODES {
            let phi = 2.0 * PI * k as f64 / PHI_NODES as f64;
            let s = InputState::new(theta, phi)?;
            let psi = input_state_vector(&s)?;
            let out = output_density_matrix(rho_ch, &s)?.to_dense();
            let mut overlap = C64::new(0.0, 0.0);
            for r in 0..4 {
                for c in 0..4 {
                    overlap += psi[r].conj() * out[(r, c)] * psi[c];
                }
            }
            ring += overlap.re;
        }
        total += w * theta.sin() * ring / PHI_NODES as f64;
    }
    // (1/4pi) * 2pi (phi mean) * pi/2 (theta map Jacobian)
    Ok(total * PI / 4.0)
}
