//! Teleportation of a two-qubit pure state through two channel dimers.
//!
//! The closed forms below work from the Bell-state probabilities of the
//! channel, so they also hold for X-states with `r22 != r33` or a complex
//! coherence. The [`oracle`] submodule holds the brute-force counterparts.

pub mod oracle;

use serde::Serialize;

use crate::channel::channel_concurrence;
use crate::error::{Error, Result};
use crate::model::{validate_theta, InputState, C64};
use crate::xstate::XStateDensityMatrix;

/// Best fidelity reachable by a measure-and-prepare classical protocol.
pub const CLASSICAL_THRESHOLD: f64 = 2.0 / 3.0;

/// Overlaps of the channel with the Bell states `Psi-`, `Phi-`, `Phi+`, `Psi+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellProbabilities {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl BellProbabilities {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeleportationMetrics {
    pub c_in: f64,
    pub c_out: f64,
    pub fidelity: f64,
    pub average_fidelity: f64,
    pub classical_threshold: f64,
}

pub fn input_concurrence(theta: f64) -> Result<f64> {
    validate_theta(theta)?;
    Ok(theta.sin().abs())
}

pub fn bell_probabilities(rho: &XStateDensityMatrix) -> BellProbabilities {
    let mixed = 0.5 * (rho.r22 + rho.r33);
    let aligned = 0.5 * (rho.r11 + rho.r44);
    BellProbabilities {
        p0: mixed - rho.r23.re,
        p1: aligned,
        p2: aligned,
        p3: mixed + rho.r23.re,
    }
}

/// Sums that every output element depends on: the weight of no-flip Pauli
/// corrections, the weight of flip corrections, and the coherence contrast.
fn channel_sums(rho: &XStateDensityMatrix) -> (f64, f64, f64) {
    let p = bell_probabilities(rho);
    (p.p0 + p.p3, p.p1 + p.p2, p.p0 - p.p3)
}

pub fn output_density_matrix(rho: &XStateDensityMatrix, s: &InputState) -> Result<XStateDensityMatrix> {
    s.validate()?;
    let (keep, flip, contrast) = channel_sums(rho);
    let cos2 = (s.theta / 2.0).cos().powi(2);
    let sin2 = (s.theta / 2.0).sin().powi(2);
    let cross = keep * flip;
    Ok(XStateDensityMatrix {
        r11: cross,
        r22: cos2 * keep * keep + sin2 * flip * flip,
        r33: sin2 * keep * keep + cos2 * flip * flip,
        r44: cross,
        r23: C64::from_polar(0.5 * s.theta.sin() * contrast * contrast, -s.phi),
    })
}

pub fn output_concurrence(rho: &XStateDensityMatrix, s: &InputState) -> Result<f64> {
    Ok(channel_concurrence(&output_density_matrix(rho, s)?))
}

/// Fidelity of the teleported state; independent of the input phase.
pub fn fidelity(rho: &XStateDensityMatrix, theta: f64) -> Result<f64> {
    validate_theta(theta)?;
    let (keep, flip, contrast) = channel_sums(rho);
    let weight = 0.5 * theta.sin().powi(2);
    Ok((weight * (flip * flip + contrast * contrast - keep * keep) + keep * keep).clamp(0.0, 1.0))
}

/// Fidelity averaged over all pure inputs (`<sin^2> = 2/3` on the sphere).
pub fn average_fidelity(rho: &XStateDensityMatrix) -> f64 {
    let (keep, flip, contrast) = channel_sums(rho);
    ((flip * flip + contrast * contrast - keep * keep) / 3.0 + keep * keep).clamp(0.0, 1.0)
}

pub fn teleportation_metrics(rho: &XStateDensityMatrix, s: &InputState) -> Result<TeleportationMetrics> {
    Ok(TeleportationMetrics {
        c_in: input_concurrence(s.theta)?,
        c_out: output_concurrence(rho, s)?,
        fidelity: fidelity(rho, s.theta)?,
        average_fidelity: average_fidelity(rho),
        classical_threshold: CLASSICAL_THRESHOLD,
    })
}

/// Rejects states that cannot be channel resources.
pub fn validate_channel(rho: &XStateDensityMatrix) -> Result<()> {
    rho.validate()?;
    let p = bell_probabilities(rho);
    if p.as_array().iter().any(|v| *v < -crate::xstate::STATE_TOLERANCE) {
        return Err(Error::InvalidState(format!("negative Bell weight in {p:?}")));
    }
    Ok(())
}
