//! Reduced density matrix of one Heisenberg dimer in the infinite chain,
//! its concurrence, and the zero-temperature phase structure.

use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{CouplingSet, Thermo};
use crate::transfer::{ising_statistics_from, transfer_weights, IsingStatistics};
use crate::xstate::XStateDensityMatrix;

/// Conditional dimer-state coefficients for a neighbour spin sum `x`.
///
/// `x = s_left + s_right` is the sum of the two Ising eigenvalues, so it takes
/// the integer values -1, 0, +1 (not the doubled spins).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FCoefficients {
    pub f11: f64,
    pub f22: f64,
    pub f33: f64,
    pub f44: f64,
    pub f23: f64,
}

impl FCoefficients {
    fn as_array(&self) -> [f64; 5] {
        [self.f11, self.f22, self.f33, self.f44, self.f23]
    }
}

pub fn f_coefficients(x: i32, c: &CouplingSet, t: &Thermo) -> Result<FCoefficients> {
    if !(-1..=1).contains(&x) {
        return Err(invalid("x", format!("neighbour spin sum must be -1, 0 or 1, got {x}")));
    }
    c.validate()?;
    let beta = t.beta();
    let xf = f64::from(x);
    let omega = (c.j1 * c.j1 * (1.0 - xf * xf) + c.j * c.j).sqrt();
    // Exponents of the four dimer levels: up-up, down-down, and the mixed pair.
    let up_up = -beta * c.j / 4.0 - beta * c.j1 / 2.0 * xf + beta * c.h;
    let down_down = -beta * c.j / 4.0 + beta * c.j1 / 2.0 * xf - beta * c.h;
    let upper = beta * c.j / 4.0 - beta * omega / 2.0;
    let lower = beta * c.j / 4.0 + beta * omega / 2.0;
    let shift = up_up.max(down_down).max(upper).max(lower);
    let [e11, e44, e_up, e_lo] = [up_up, down_down, upper, lower].map(|a| (a - shift).exp());
    let denom = e11 + e44 + e_up + e_lo;
    let mixing = if omega > 0.0 { c.j / omega } else { 0.0 };
    let f22 = 0.5 * (e_up + e_lo) / denom;
    Ok(FCoefficients {
        f11: e11 / denom,
        f22,
        f33: f22,
        f44: e44 / denom,
        f23: -mixing * 0.5 * (e_lo - e_up) / denom,
    })
}

/// Combines the conditional coefficients with the Ising pair statistics.
pub fn channel_density_matrix_from(
    f_plus: &FCoefficients,
    f_minus: &FCoefficients,
    f_zero: &FCoefficients,
    stats: &IsingStatistics,
) -> XStateDensityMatrix {
    let (p, m, z) = (f_plus.as_array(), f_minus.as_array(), f_zero.as_array());
    let element = |k: usize| {
        0.25 * (p[k] + m[k] + 2.0 * z[k]) + (p[k] + m[k] - 2.0 * z[k]) * stats.eps_ising + (p[k] - m[k]) * stats.m_ising
    };
    // Populations can cancel to -1e-44 or so when a sector is frozen out.
    let pop = |k: usize| element(k).max(0.0);
    XStateDensityMatrix::real(pop(0), pop(1), pop(2), pop(3), element(4))
}

pub fn channel_density_matrix(c: &CouplingSet, t: &Thermo) -> Result<XStateDensityMatrix> {
    let stats = ising_statistics_from(&transfer_weights(c, t)?);
    Ok(channel_density_matrix_from(
        &f_coefficients(1, c, t)?,
        &f_coefficients(-1, c, t)?,
        &f_coefficients(0, c, t)?,
        &stats,
    ))
}

/// X-state concurrence `2 max(0, |r23| - sqrt(r11 r44))`.
pub fn channel_concurrence(rho: &XStateDensityMatrix) -> f64 {
    // The product can round to a tiny negative number deep in a classical phase.
    (2.0 * (rho.r23.norm() - (rho.r11 * rho.r44).max(0.0).sqrt())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    /// Quantum antiferromagnetic: Neel Ising order, partially entangled dimers.
    Qaf,
    /// Quantum ferrimagnetic: Ising spins up, singlet dimers.
    Qfi,
    /// Classical ferrimagnetic: Ising spins down, dimers fully up.
    Cfi,
    /// Classical paramagnetic: everything up.
    Cpm,
}

impl Phase {
    /// Tie-break order: earlier wins on exactly degenerate energies.
    pub const PRIORITY: [Phase; 4] = [Phase::Qfi, Phase::Qaf, Phase::Cfi, Phase::Cpm];

    pub fn label(&self) -> &'static str {
        match self {
            Phase::Qaf => "QAF",
            Phase::Qfi => "QFI",
            Phase::Cfi => "CFI",
            Phase::Cpm => "CPM",
        }
    }

    /// Energy per unit cell of the phase's ground-state candidate.
    pub fn energy_per_cell(&self, c: &CouplingSet) -> f64 {
        let (j, j1, h) = (c.j, c.j1, c.h);
        match self {
            Phase::Qaf => -j / 4.0 - j1.hypot(j) / 2.0,
            Phase::Qfi => -0.75 * j - h / 2.0,
            Phase::Cfi => j / 4.0 - j1 / 2.0 - h / 2.0,
            Phase::Cpm => j / 4.0 + j1 / 2.0 - 1.5 * h,
        }
    }

    /// Reduced dimer state of the ground state in the thermodynamic limit.
    ///
    /// For QAF both Neel sublattices are equally weighted, which symmetrizes
    /// the populations of the mixed sector.
    pub fn dimer_state(&self, c: &CouplingSet) -> XStateDensityMatrix {
        match self {
            Phase::Qaf => XStateDensityMatrix::real(0.0, 0.5, 0.5, 0.0, -0.5 * c.j / c.j1.hypot(c.j)),
            Phase::Qfi => XStateDensityMatrix::singlet(),
            Phase::Cfi | Phase::Cpm => XStateDensityMatrix::real(1.0, 0.0, 0.0, 0.0, 0.0),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStatePhase {
    pub phase: Phase,
    pub energy_per_cell: f64,
    /// Another phase degenerate with the reported one, if any.
    pub tie: Option<Phase>,
}

/// Relative energy window treated as an exact tie.
const TIE_TOLERANCE: f64 = 1e-12;

pub fn classify_ground_state(c: &CouplingSet) -> Result<GroundStatePhase> {
    c.validate_phase_regime()?;
    let mut best = Phase::PRIORITY[0];
    let mut best_e = best.energy_per_cell(c);
    for phase in &Phase::PRIORITY[1..] {
        let e = phase.energy_per_cell(c);
        if e < best_e - tie_window(e, best_e) {
            best = *phase;
            best_e = e;
        }
    }
    let tie = Phase::PRIORITY
        .iter()
        .copied()
        .filter(|p| *p != best)
        .find(|p| (p.energy_per_cell(c) - best_e).abs() <= tie_window(p.energy_per_cell(c), best_e));
    Ok(GroundStatePhase {
        phase: best,
        energy_per_cell: best_e,
        tie,
    })
}

fn tie_window(a: f64, b: f64) -> f64 {
    TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// QAF-QFI and QFI-CPM critical fields for `0 <= J1 < 2J`.
pub fn transition_fields(j: f64, j1: f64) -> Result<(f64, f64)> {
    CouplingSet::new(j, j1, 0.0)?.validate_phase_regime()?;
    if j1 >= 2.0 * j {
        return Err(Error::Regime(format!(
            "J1 = {j1} >= 2J = {}: the classical ferrimagnet intervenes",
            2.0 * j
        )));
    }
    Ok((j1.hypot(j) - j, j + j1 / 2.0))
}

pub fn ground_state_channel_concurrence(c: &CouplingSet) -> Result<f64> {
    let gs = classify_ground_state(c)?;
    Ok(match gs.phase {
        Phase::Qaf => c.j / c.j1.hypot(c.j),
        Phase::Qfi => 1.0,
        Phase::Cfi | Phase::Cpm => 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dimer_eigensystem, IsingPair};
    use crate::transfer::ising_statistics;
    use proptest::prelude::*;

    fn cs(j: f64, j1: f64, h: f64) -> CouplingSet {
        CouplingSet::new(j, j1, h).unwrap()
    }

    fn temp(t: f64) -> Thermo {
        Thermo::from_temperature(t).unwrap()
    }

    /// Oracle: normalized dimer Gibbs state from the eigenvectors, averaged
    /// over the neighbour orderings that share the spin sum `x`.
    fn conditional_gibbs(x: i32, c: &CouplingSet, beta: f64) -> [[f64; 4]; 4] {
        let pairs: Vec<IsingPair> = IsingPair::ALL.into_iter().filter(|p| p.sum() == f64::from(x)).collect();
        let mut acc = [[0.0; 4]; 4];
        for pair in &pairs {
            let es = dimer_eigensystem(*pair, c).unwrap();
            let vecs = es.eigenvectors();
            let weights: Vec<f64> = es.energies.iter().map(|e| (-beta * e).exp()).collect();
            let z: f64 = weights.iter().sum();
            for (w, v) in weights.iter().zip(vecs.iter()) {
                for r in 0..4 {
                    for col in 0..4 {
                        acc[r][col] += w / z * v[r] * v[col] / pairs.len() as f64;
                    }
                }
            }
        }
        acc
    }

    #[test]
    fn f_coefficient_examples() {
        let c = cs(1.0, 1.0, 0.0);
        let t = temp(1.0);
        let f = f_coefficients(1, &c, &t).unwrap();
        assert!((f.f11 - 0.101537).abs() < 1e-5);
        assert!((f.f22 - 0.311229).abs() < 1e-5 && f.f22 == f.f33);
        assert!((f.f44 - 0.276005).abs() < 1e-5);
        assert!((f.f23 + 0.143825).abs() < 1e-5);
        let f = f_coefficients(0, &c, &t).unwrap();
        assert!((f.f11 - 0.162424).abs() < 1e-5 && (f.f44 - 0.162424).abs() < 1e-5);
        assert!((f.f22 - 0.337576).abs() < 1e-5);
        assert!((f.f23 + 0.145338).abs() < 1e-5);
        for x in [-1, 0, 1] {
            let f = f_coefficients(x, &cs(1.0, 2.0, 0.7), &temp(1e6)).unwrap();
            for d in [f.f11, f.f22, f.f33, f.f44] {
                assert!((d - 0.25).abs() < 1e-6);
            }
            assert!(f.f23.abs() < 1e-6);
        }
        assert!(f_coefficients(2, &c, &t).is_err());
    }

    #[test]
    fn f_coefficients_match_conditional_gibbs_state() {
        for (j, j1, h, beta) in [(1.0, 1.0, 0.0, 1.0), (0.7, 2.1, 0.9, 3.0), (-1.0, 0.5, 0.2, 2.0)] {
            let c = cs(j, j1, h);
            let t = Thermo::from_beta(beta).unwrap();
            for x in [-1, 0, 1] {
                let f = f_coefficients(x, &c, &t).unwrap();
                let g = conditional_gibbs(x, &c, beta);
                assert!((f.f11 - g[0][0]).abs() < 1e-12);
                assert!((f.f22 - g[1][1]).abs() < 1e-12);
                assert!((f.f33 - g[2][2]).abs() < 1e-12);
                assert!((f.f44 - g[3][3]).abs() < 1e-12);
                assert!((f.f23 - g[1][2]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_examples() {
        let rho = channel_density_matrix(&cs(1.0, 1.0, 0.0), &temp(1.0)).unwrap();
        assert!((rho.r11 - 0.17540).abs() < 1e-5 && (rho.r44 - 0.17540).abs() < 1e-5);
        assert!((rho.r22 - 0.32460).abs() < 1e-5 && rho.r22 == rho.r33);
        assert!((rho.r23.re + 0.14459).abs() < 1e-5 && rho.r23.im == 0.0);
        assert_eq!(channel_concurrence(&rho), 0.0);

        let rho = channel_density_matrix(&cs(1.0, 1.0, 0.3), &temp(1e6)).unwrap();
        assert!(rho.max_abs_diff_x(&XStateDensityMatrix::maximally_mixed()) < 1e-6);

        let rho = channel_density_matrix(&cs(1.0, 1.0, 1.0), &temp(1.0 / 200.0)).unwrap();
        assert!(rho.max_abs_diff_x(&XStateDensityMatrix::singlet()) < 1e-8);
    }

    #[test]
    fn concurrence_examples() {
        assert_eq!(channel_concurrence(&XStateDensityMatrix::singlet()), 1.0);
        let rho = channel_density_matrix(&cs(1.0, 1.0, 0.2), &temp(1.0 / 200.0)).unwrap();
        assert!((channel_concurrence(&rho) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
    }

    #[test]
    fn phase_examples() {
        assert_eq!(classify_ground_state(&cs(1.0, 1.0, 0.2)).unwrap().phase, Phase::Qaf);
        assert_eq!(classify_ground_state(&cs(1.0, 1.0, 1.0)).unwrap().phase, Phase::Qfi);
        assert_eq!(classify_ground_state(&cs(1.0, 1.0, 2.0)).unwrap().phase, Phase::Cpm);
        // CFI needs J1 > 2J and J + J1 - hypot(J1, J) < h < J1; at low field QAF still wins.
        assert_eq!(classify_ground_state(&cs(1.0, 3.0, 0.05)).unwrap().phase, Phase::Qaf);
        assert_eq!(classify_ground_state(&cs(1.0, 3.0, 2.0)).unwrap().phase, Phase::Cfi);
        assert!(classify_ground_state(&cs(-1.0, 1.0, 0.2)).is_err());
        assert!(classify_ground_state(&cs(1.0, 1.0, -0.2)).is_err());
    }

    #[test]
    fn ties_prefer_priority_order_and_are_flagged() {
        // QFI-CPM boundary at h = J + J1/2.
        let gs = classify_ground_state(&cs(1.0, 1.0, 1.5)).unwrap();
        assert_eq!(gs.phase, Phase::Qfi);
        assert_eq!(gs.tie, Some(Phase::Cpm));
        // Decoupled dimers at h = 0: QAF and QFI are degenerate.
        let gs = classify_ground_state(&cs(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(gs.phase, Phase::Qfi);
        assert_eq!(gs.tie, Some(Phase::Qaf));
        assert_eq!(classify_ground_state(&cs(1.0, 1.0, 1.0)).unwrap().tie, None);
    }

    #[test]
    fn transition_field_examples() {
        let (a, b) = transition_fields(1.0, 1.0).unwrap();
        assert!((a - (2f64.sqrt() - 1.0)).abs() < 1e-15 && b == 1.5);
        assert_eq!(transition_fields(1.0, 0.0).unwrap(), (0.0, 1.0));
        let (a, b) = transition_fields(103.0, 30.0).unwrap();
        assert!((a - 4.28).abs() < 5e-3 && b == 118.0);
        assert!(matches!(transition_fields(1.0, 2.0), Err(Error::Regime(_))));
        assert!(transition_fields(0.0, 0.5).is_err());
    }

    #[test]
    fn transition_fields_separate_phases() {
        for j1 in [0.0, 0.4, 1.0, 1.9] {
            let (h1, h2) = transition_fields(1.0, j1).unwrap();
            let at = |h: f64| classify_ground_state(&cs(1.0, j1, h)).unwrap().phase;
            if h1 > 1e-3 {
                assert_eq!(at(h1 - 1e-3), Phase::Qaf);
            }
            assert_eq!(at(h1 + 1e-3), Phase::Qfi);
            assert_eq!(at(h2 - 1e-3), Phase::Qfi);
            assert_eq!(at(h2 + 1e-3), Phase::Cpm);
        }
    }

    #[test]
    fn ground_concurrence_examples() {
        let c = ground_state_channel_concurrence(&cs(1.0, 1.0, 0.2)).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(ground_state_channel_concurrence(&cs(1.0, 1.0, 1.0)).unwrap(), 1.0);
        assert_eq!(ground_state_channel_concurrence(&cs(1.0, 1.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn sudden_death_above_twice_j() {
        for j1 in [0.0, 0.5, 1.0, 2.0, 3.0] {
            for h in [0.0, 0.5, 1.0, 2.0, 4.0] {
                for tt in [2.0, 3.0, 5.0] {
                    let rho = channel_density_matrix(&cs(1.0, j1, h), &temp(tt)).unwrap();
                    assert_eq!(channel_concurrence(&rho), 0.0, "J1={j1} h={h} T={tt}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn f_sum_rule(j in -3.0f64..3.0, j1 in -3.0f64..3.0, h in -4.0f64..4.0, tt in 0.01f64..10.0) {
            for x in [-1, 0, 1] {
                let f = f_coefficients(x, &cs(j, j1, h), &temp(tt)).unwrap();
                prop_assert!((f.f11 + f.f22 + f.f33 + f.f44 - 1.0).abs() < 1e-12);
                prop_assert_eq!(f.f22, f.f33);
                prop_assert!(f.f23.abs() <= f.f22);
                prop_assert!(f.f11 >= 0.0 && f.f22 >= 0.0 && f.f44 >= 0.0);
            }
        }

        #[test]
        fn channel_is_valid_x_state(j in -3.0f64..3.0, j1 in -3.0f64..3.0, h in -4.0f64..4.0, tt in 0.01f64..10.0) {
            let rho = channel_density_matrix(&cs(j, j1, h), &temp(tt)).unwrap();
            prop_assert!(rho.validate().is_ok(), "{:?}", rho);
            prop_assert_eq!(rho.r22, rho.r33);
            let c = channel_concurrence(&rho);
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn field_reversal_swaps_populations(j in 0.1f64..3.0, j1 in 0.0f64..3.0, h in 0.0f64..4.0, tt in 0.02f64..5.0) {
            let c = cs(j, j1, h);
            let a = channel_density_matrix(&c, &temp(tt)).unwrap();
            let b = channel_density_matrix(&c.reversed_field(), &temp(tt)).unwrap();
            prop_assert!((a.r11 - b.r44).abs() < 1e-14 && (a.r44 - b.r11).abs() < 1e-14);
            prop_assert!((a.r22 - b.r22).abs() < 1e-14 && (a.r23 - b.r23).norm() < 1e-14);
        }

        #[test]
        fn ising_bounds_hold(j in 0.1f64..3.0, j1 in 0.0f64..3.0, h in 0.0f64..4.0, tt in 0.02f64..5.0) {
            let s = ising_statistics(&cs(j, j1, h), &temp(tt)).unwrap();
            prop_assert!(s.m_ising.abs() <= 0.5);
        }
    }
}
