//! Parameter records, basis conventions and the single-dimer eigenproblem.
//!
//! Basis convention for every two-qubit object in this crate: qubit `|1>` is
//! spin up, `|0>` is spin down, and 4x4 matrices are indexed
//! `(up-up, up-down, down-up, down-down) = (|11>, |10>, |01>, |00>)`.
//! Energies are unit-agnostic: Kelvin with `k_B = 1`, or units of `J`.

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_finite, Error, Result};

pub type C64 = Complex<f64>;

/// Bohr magneton over Boltzmann constant, in K/T.
pub const MU_B_OVER_K_B: f64 = 0.671_714_1;

/// Exchange constants and Zeeman field of one trimer chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    /// Heisenberg intradimer exchange.
    pub j: f64,
    /// Ising-Heisenberg exchange.
    pub j1: f64,
    /// Zeeman field in energy units.
    pub h: f64,
}

impl CouplingSet {
    pub fn new(j: f64, j1: f64, h: f64) -> Result<Self> {
        let c = Self { j, j1, h };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        require_finite("J", self.j)?;
        require_finite("J1", self.j1)?;
        require_finite("h", self.h)
    }

    /// Checks the antiferromagnetic regime the phase classification assumes.
    pub fn validate_phase_regime(&self) -> Result<()> {
        self.validate()?;
        if self.j <= 0.0 {
            return Err(invalid("J", format!("must be > 0, got {}", self.j)));
        }
        if self.j1 < 0.0 {
            return Err(invalid("J1", format!("must be >= 0, got {}", self.j1)));
        }
        if self.h < 0.0 {
            return Err(invalid("h", format!("must be >= 0, got {}", self.h)));
        }
        Ok(())
    }

    pub fn with_field(self, h: f64) -> Self {
        Self { h, ..self }
    }

    pub fn reversed_field(self) -> Self {
        Self { h: -self.h, ..self }
    }
}

/// Temperature and the matching inverse temperature (`k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    temperature: f64,
    beta: f64,
}

impl Thermo {
    pub fn from_temperature(temperature: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(invalid(
                "T",
                format!("temperature must be finite and > 0, got {temperature}"),
            ));
        }
        Ok(Self {
            temperature,
            beta: 1.0 / temperature,
        })
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid("beta", format!("must be finite and > 0, got {beta}")));
        }
        Ok(Self {
            temperature: 1.0 / beta,
            beta,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// The two Ising neighbours of a Heisenberg dimer, each `+1/2` or `-1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsingPair {
    s_left: f64,
    s_right: f64,
}

impl IsingPair {
    pub const UP_UP: Self = Self {
        s_left: 0.5,
        s_right: 0.5,
    };
    pub const UP_DOWN: Self = Self {
        s_left: 0.5,
        s_right: -0.5,
    };
    pub const DOWN_UP: Self = Self {
        s_left: -0.5,
        s_right: 0.5,
    };
    pub const DOWN_DOWN: Self = Self {
        s_left: -0.5,
        s_right: -0.5,
    };

    pub const ALL: [Self; 4] = [Self::UP_UP, Self::UP_DOWN, Self::DOWN_UP, Self::DOWN_DOWN];

    pub fn new(s_left: f64, s_right: f64) -> Result<Self> {
        for (field, s) in [("s_left", s_left), ("s_right", s_right)] {
            if s != 0.5 && s != -0.5 {
                return Err(invalid(field, format!("Ising value must be +-1/2, got {s}")));
            }
        }
        Ok(Self { s_left, s_right })
    }

    pub fn s_left(&self) -> f64 {
        self.s_left
    }

    pub fn s_right(&self) -> f64 {
        self.s_right
    }

    pub fn sum(&self) -> f64 {
        self.s_left + self.s_right
    }

    pub fn difference(&self) -> f64 {
        self.s_left - self.s_right
    }

    pub fn swapped(&self) -> Self {
        Self {
            s_left: self.s_right,
            s_right: self.s_left,
        }
    }
}

/// Spectrum of one Heisenberg dimer for fixed Ising neighbours.
///
/// Eigenvectors in the crate basis:
/// `psi1 = |up up>`, `psi2 = |down down>`,
/// `psi3 = a+ |up down> + sgn(J) a- |down up>`,
/// `psi4 = a- |up down> - sgn(J) a+ |down up>`.
/// For `J > 0` this is exactly the textbook form; `sgn(J)` only matters for
/// ferromagnetic `J`, where the upper level of the mixed sector flips parity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerEigensystem {
    pub energies: [f64; 4],
    pub a_plus: f64,
    pub a_minus: f64,
    j_sign: f64,
}

impl DimerEigensystem {
    /// Eigenvectors as rows, real amplitudes in the crate basis.
    pub fn eigenvectors(&self) -> [[f64; 4]; 4] {
        let s = self.j_sign;
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, self.a_plus, s * self.a_minus, 0.0],
            [0.0, self.a_minus, -s * self.a_plus, 0.0],
        ]
    }

    /// Rebuilds `sum_l e_l |psi_l><psi_l|`.
    pub fn reconstruct(&self) -> [[f64; 4]; 4] {
        let vecs = self.eigenvectors();
        let mut m = [[0.0; 4]; 4];
        for (e, v) in self.energies.iter().zip(vecs.iter()) {
            for r in 0..4 {
                for c in 0..4 {
                    m[r][c] += e * v[r] * v[c];
                }
            }
        }
        m
    }
}

pub fn dimer_eigensystem(pair: IsingPair, c: &CouplingSet) -> Result<DimerEigensystem> {
    c.validate()?;
    let x = pair.sum();
    let d = c.j1 * pair.difference();
    let omega = d.hypot(c.j);
    let energies = [
        c.j / 4.0 + c.j1 / 2.0 * x - c.h,
        c.j / 4.0 - c.j1 / 2.0 * x + c.h,
        -c.j / 4.0 + omega / 2.0,
        -c.j / 4.0 - omega / 2.0,
    ];
    // omega = 0 only for J = 0 with equal neighbours: fully degenerate sector.
    let ratio = if omega > 0.0 { d / omega } else { 0.0 };
    let a_plus = (0.5 * (1.0 + ratio)).max(0.0).sqrt();
    let a_minus = (0.5 * (1.0 - ratio)).max(0.0).sqrt();
    let j_sign = if c.j < 0.0 { -1.0 } else { 1.0 };
    Ok(DimerEigensystem {
        energies,
        a_plus,
        a_minus,
        j_sign,
    })
}

/// Converts a field in Tesla to Zeeman energy in Kelvin.
pub fn field_from_tesla(b_tesla: f64, g_factor: f64) -> Result<f64> {
    field_from_tesla_with(b_tesla, g_factor, MU_B_OVER_K_B)
}

/// As [`field_from_tesla`] with an explicit `mu_B / k_B` (K/T).
pub fn field_from_tesla_with(b_tesla: f64, g_factor: f64, mu_b_over_k_b: f64) -> Result<f64> {
    require_finite("B", b_tesla)?;
    if b_tesla < 0.0 {
        return Err(invalid("B", format!("must be >= 0, got {b_tesla}")));
    }
    if !(g_factor.is_finite() && g_factor > 0.0) {
        return Err(invalid("g", format!("must be finite and > 0, got {g_factor}")));
    }
    Ok(g_factor * mu_b_over_k_b * b_tesla)
}

/// Teleported pure state `cos(t/2)|10> + e^{i phi} sin(t/2)|01>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

impl InputState {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        let s = Self { theta, phi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        validate_theta(self.theta)?;
        if !(self.phi.is_finite() && (0.0..2.0 * PI).contains(&self.phi)) {
            return Err(invalid("phi", format!("must lie in [0, 2pi), got {}", self.phi)));
        }
        Ok(())
    }
}

pub(crate) fn validate_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && (0.0..=PI).contains(&theta) {
        Ok(())
    } else {
        Err(invalid("theta", format!("must lie in [0, pi], got {theta}")))
    }
}

pub fn input_state_vector(s: &InputState) -> Result<[C64; 4]> {
    s.validate()?;
    let (sin, cos) = (0.5 * s.theta).sin_cos();
    Ok([
        C64::new(0.0, 0.0),
        C64::new(cos, 0.0),
        C64::from_polar(sin, s.phi),
        C64::new(0.0, 0.0),
    ])
}

/// Material parameters in physical units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaterialPreset {
    pub name: &'static str,
    pub j_kelvin: f64,
    pub j1_kelvin: f64,
    pub g_factor: f64,
}

impl MaterialPreset {
    pub fn couplings(&self, h_kelvin: f64) -> Result<CouplingSet> {
        CouplingSet::new(self.j_kelvin, self.j1_kelvin, h_kelvin)
    }
}

/// Copper phosphate polymer Cu3(P2O6OH)2.
pub const CU3P2O6OH2: MaterialPreset = MaterialPreset {
    name: "cu3p2o6oh2",
    j_kelvin: 103.0,
    j1_kelvin: 30.0,
    g_factor: 2.12,
};

pub const PRESETS: &[MaterialPreset] = &[CU3P2O6OH2];

pub fn preset(name: &str) -> Result<&'static MaterialPreset> {
    PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownPreset {
            name: name.to_string(),
            available: PRESETS.iter().map(|p| p.name).collect::<Vec<_>>().join(", "),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dimer_hamiltonian_matrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn equal_neighbours_spectrum() {
        let c = CouplingSet::new(1.0, 1.0, 0.0).unwrap();
        let es = dimer_eigensystem(IsingPair::UP_UP, &c).unwrap();
        let expect = [0.75, -0.25, 0.25, -0.75];
        for (e, x) in es.energies.iter().zip(expect) {
            assert!(close(*e, x, 1e-15));
        }
        assert!(close(es.a_plus, FRAC_1_SQRT_2, 1e-15));
        assert!(close(es.a_minus, FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn opposite_neighbours_spectrum() {
        let c = CouplingSet::new(1.0, 1.0, 0.0).unwrap();
        let es = dimer_eigensystem(IsingPair::UP_DOWN, &c).unwrap();
        let r = 2f64.sqrt() / 2.0;
        let expect = [0.25, 0.25, -0.25 + r, -0.25 - r];
        for (e, x) in es.energies.iter().zip(expect) {
            assert!(close(*e, x, 1e-15));
        }
        assert!(close(es.energies[2], 0.45711, 1e-5));
        assert!(close(es.energies[3], -0.95711, 1e-5));
        assert!(close(es.a_plus, 0.92388, 1e-5));
        assert!(close(es.a_minus, 0.38268, 1e-5));
        assert!(close(es.a_plus.powi(2), 0.5 * (1.0 + FRAC_1_SQRT_2), 1e-15));
    }

    #[test]
    fn isolated_dimer() {
        let c = CouplingSet::new(1.0, 0.0, 0.0).unwrap();
        for pair in IsingPair::ALL {
            let es = dimer_eigensystem(pair, &c).unwrap();
            for (e, x) in es.energies.iter().zip([0.25, 0.25, 0.25, -0.75]) {
                assert!(close(*e, x, 1e-15));
            }
            assert!(close(es.a_plus, FRAC_1_SQRT_2, 1e-15));
        }
    }

    #[test]
    fn rejects_non_finite() {
        let c = CouplingSet {
            j: f64::NAN,
            j1: 1.0,
            h: 0.0,
        };
        assert!(matches!(
            dimer_eigensystem(IsingPair::UP_UP, &c),
            Err(Error::InvalidParameter { field: "J", .. })
        ));
        assert!(IsingPair::new(0.5, 1.0).is_err());
    }

    #[test]
    fn reconstruction_matches_dense_bond_matrix() {
        let params = [
            (1.0, 1.0, 0.0),
            (1.0, 0.3, 0.7),
            (2.5, 1.7, -0.4),
            (-1.0, 0.8, 0.3),
            (0.0, 1.2, 0.5),
            (0.0, 0.0, 0.1),
        ];
        for (j, j1, h) in params {
            let c = CouplingSet::new(j, j1, h).unwrap();
            for pair in IsingPair::ALL {
                let es = dimer_eigensystem(pair, &c).unwrap();
                let dense = dimer_hamiltonian_matrix(pair, &c);
                let rebuilt = es.reconstruct();
                let mut trace = 0.0;
                for r in 0..4 {
                    trace += dense[(r, r)];
                    for col in 0..4 {
                        assert!(
                            close(rebuilt[r][col], dense[(r, col)], 1e-12),
                            "{pair:?} {c:?} ({r},{col})"
                        );
                    }
                }
                let sum: f64 = es.energies.iter().sum();
                assert!(close(sum, trace, 1e-12));
                let norm = es.a_plus.powi(2) + es.a_minus.powi(2);
                assert!(close(norm, 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn swapping_neighbours_swaps_amplitudes() {
        let c = CouplingSet::new(1.3, 0.9, 0.2).unwrap();
        for pair in IsingPair::ALL {
            let a = dimer_eigensystem(pair, &c).unwrap();
            let b = dimer_eigensystem(pair.swapped(), &c).unwrap();
            assert_eq!(a.a_plus, b.a_minus);
            assert_eq!(a.a_minus, b.a_plus);
        }
    }

    #[test]
    fn traceless_sector_at_zero_field() {
        let c = CouplingSet::new(1.0, 2.0, 0.0).unwrap();
        let es = dimer_eigensystem(IsingPair::UP_DOWN, &c).unwrap();
        assert!(close(es.energies.iter().sum::<f64>(), 0.0, 1e-15));
    }

    #[test]
    fn tesla_conversion() {
        assert_eq!(field_from_tesla(0.0, 2.12).unwrap(), 0.0);
        assert!(close(field_from_tesla(80.0, 2.12).unwrap(), 113.9227, 1e-4));
        assert!(close(field_from_tesla(1.0, 2.0).unwrap(), 1.3434, 1e-4));
        assert!(field_from_tesla(-1.0, 2.0).is_err());
        assert!(field_from_tesla(1.0, 0.0).is_err());
    }

    #[test]
    fn input_vectors() {
        let v = input_state_vector(&InputState::new(PI / 2.0, 0.0).unwrap()).unwrap();
        assert!(close(v[1].re, FRAC_1_SQRT_2, 1e-15) && close(v[2].re, FRAC_1_SQRT_2, 1e-15));
        assert_eq!(v[0], C64::new(0.0, 0.0));
        let v = input_state_vector(&InputState::new(0.0, 4.0).unwrap()).unwrap();
        assert_eq!(v[1], C64::new(1.0, 0.0));
        assert!(v[2].norm() == 0.0);
        let v = input_state_vector(&InputState::new(PI / 3.0, PI / 2.0).unwrap()).unwrap();
        assert!(close(v[1].re, 0.86603, 1e-5));
        assert!(close(v[2].re, 0.0, 1e-15) && close(v[2].im, 0.5, 1e-15));
    }

    #[test]
    fn input_state_rejects_out_of_range() {
        assert!(InputState::new(-0.1, 0.0).is_err());
        assert!(InputState::new(PI + 1e-9, 0.0).is_err());
        assert!(InputState::new(1.0, 2.0 * PI).is_err());
        assert!(InputState::new(1.0, -0.5).is_err());
    }

    #[test]
    fn preset_lookup() {
        let p = preset("cu3p2o6oh2").unwrap();
        assert_eq!(p.j_kelvin, 103.0);
        let err = preset("nope").unwrap_err();
        assert!(err.to_string().contains("cu3p2o6oh2"));
    }

    #[test]
    fn thermo_rejects_zero_temperature() {
        assert!(Thermo::from_temperature(0.0).is_err());
        assert!(Thermo::from_temperature(-1.0).is_err());
        let t = Thermo::from_temperature(4.0).unwrap();
        assert_eq!(t.beta(), 0.25);
    }

    proptest::proptest! {
        #[test]
        fn input_vector_unit_norm(theta in 0.0..=PI, phi in 0.0..(2.0 * PI)) {
            let v = input_state_vector(&InputState::new(theta, phi).unwrap()).unwrap();
            let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            proptest::prop_assert!((norm - 1.0).abs() <= 1e-14);
        }
    }
}
