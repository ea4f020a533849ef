//! Transfer-matrix thermodynamics of the infinite trimer chain.
//!
//! Weights are carried in scaled form: the stored `t0, t1, t2` are the true
//! Boltzmann weights divided by `exp(log_scale)`. Every observable below is
//! either scale free or adds `log_scale` back in the log domain, so the chain
//! can be evaluated far below the temperature where `exp(beta * E)` overflows.

use crate::error::Result;
use crate::model::{CouplingSet, IsingPair, Thermo};

/// `ln(exp(a) + exp(b))` without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `ln(cosh(y))` without overflow.
pub(crate) fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln T(s_l, s_r)`, the log of the bond Boltzmann factor in its cosh form.
pub fn log_boltzmann_factor(pair: IsingPair, c: &CouplingSet, t: &Thermo) -> Result<f64> {
    c.validate()?;
    let beta = t.beta();
    let x = pair.sum();
    let omega = (c.j1 * pair.difference()).hypot(c.j);
    let classical = -beta * c.j / 4.0 + ln_cosh(beta * c.j1 / 2.0 * x - beta * c.h);
    let quantum = beta * c.j / 4.0 + ln_cosh(beta * omega / 2.0);
    Ok(std::f64::consts::LN_2 + beta * c.h * x / 2.0 + log_add_exp(classical, quantum))
}

/// Bond Boltzmann factor `T(s_l, s_r) = Tr_dimer exp(-beta H_k)`.
pub fn boltzmann_factor(pair: IsingPair, c: &CouplingSet, t: &Thermo) -> Result<f64> {
    Ok(log_boltzmann_factor(pair, c, t)?.exp())
}

/// The three distinct transfer-matrix elements, scaled by `exp(-log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferWeights {
    /// Both neighbours up.
    pub t1: f64,
    /// Both neighbours down.
    pub t2: f64,
    /// Opposite neighbours.
    pub t0: f64,
    pub log_scale: f64,
}

impl TransferWeights {
    /// Unscaled weights `(t1, t2, t0)`; may overflow at very low temperature.
    pub fn unscaled(&self) -> (f64, f64, f64) {
        let s = self.log_scale.exp();
        (self.t1 * s, self.t2 * s, self.t0 * s)
    }

    /// Scaled weight for an arbitrary neighbour pair.
    pub fn weight(&self, pair: IsingPair) -> f64 {
        match (pair.s_left() > 0.0, pair.s_right() > 0.0) {
            (true, true) => self.t1,
            (false, false) => self.t2,
            _ => self.t0,
        }
    }
}

pub fn transfer_weights(c: &CouplingSet, t: &Thermo) -> Result<TransferWeights> {
    let l1 = log_boltzmann_factor(IsingPair::UP_UP, c, t)?;
    let l2 = log_boltzmann_factor(IsingPair::DOWN_DOWN, c, t)?;
    let l0 = log_boltzmann_factor(IsingPair::UP_DOWN, c, t)?;
    let log_scale = l1.max(l2).max(l0);
    Ok(TransferWeights {
        t1: (l1 - log_scale).exp(),
        t2: (l2 - log_scale).exp(),
        t0: (l0 - log_scale).exp(),
        log_scale,
    })
}

/// Eigenvalues of the symmetric 2x2 transfer matrix, in the weights' scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferEigenvalues {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub ratio: f64,
    /// `sqrt((t1 - t2)^2 + 4 t0^2)`.
    pub radical: f64,
    pub log_scale: f64,
}

impl TransferEigenvalues {
    pub fn ln_lambda_plus(&self) -> f64 {
        self.log_scale + self.lambda_plus.ln()
    }
}

pub fn transfer_eigenvalues(w: &TransferWeights) -> TransferEigenvalues {
    let diff = w.t1 - w.t2;
    let radical = diff.hypot(2.0 * w.t0);
    let lambda_plus = 0.5 * (w.t1 + w.t2 + radical);
    // Product form avoids cancellation in t1 + t2 - radical.
    let lambda_minus = (w.t1 * w.t2 - w.t0 * w.t0) / lambda_plus;
    TransferEigenvalues {
        lambda_plus,
        lambda_minus,
        ratio: lambda_minus / lambda_plus,
        radical,
        log_scale: w.log_scale,
    }
}

pub fn free_energy_per_cell(c: &CouplingSet, t: &Thermo) -> Result<f64> {
    let ev = transfer_eigenvalues(&transfer_weights(c, t)?);
    Ok(-t.temperature() * ev.ln_lambda_plus())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingStatistics {
    pub m_ising: f64,
    pub eps_ising: f64,
}

/// Ising magnetization and nearest-neighbour correlation from precomputed weights.
pub fn ising_statistics_from(w: &TransferWeights) -> IsingStatistics {
    let ev = transfer_eigenvalues(w);
    let m_ising = 0.5 * (w.t1 - w.t2) / ev.radical;
    let m2 = m_ising * m_ising;
    IsingStatistics {
        m_ising,
        eps_ising: m2 + (0.25 - m2) * ev.ratio,
    }
}

pub fn ising_statistics(c: &CouplingSet, t: &Thermo) -> Result<IsingStatistics> {
    Ok(ising_statistics_from(&transfer_weights(c, t)?))
}

pub fn ising_magnetization(c: &CouplingSet, t: &Thermo) -> Result<f64> {
    Ok(ising_statistics(c, t)?.m_ising)
}

pub fn ising_correlation(c: &CouplingSet, t: &Thermo) -> Result<f64> {
    Ok(ising_statistics(c, t)?.eps_ising)
}
