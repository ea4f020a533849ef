use nalgebra::Matrix4;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::C64;

/// Two-qubit density matrix with X-shaped sparsity in the crate basis.
///
/// Only the diagonal and the `(2,3)` coherence are stored (1-based labels);
/// the `(1,4)` coherence is structurally zero for every state built here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XStateDensityMatrix {
    pub r11: f64,
    pub r22: f64,
    pub r33: f64,
    pub r44: f64,
    #[serde(serialize_with = "ser_complex")]
    pub r23: C64,
}

fn ser_complex<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

/// Slack for trace and positivity checks.
pub const STATE_TOLERANCE: f64 = 1e-12;

impl XStateDensityMatrix {
    pub fn real(r11: f64, r22: f64, r33: f64, r44: f64, r23: f64) -> Self {
        Self {
            r11,
            r22,
            r33,
            r44,
            r23: C64::new(r23, 0.0),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self::real(0.25, 0.25, 0.25, 0.25, 0.0)
    }

    /// Singlet `(|up down> - |down up>)/sqrt 2`.
    pub fn singlet() -> Self {
        Self::real(0.0, 0.5, 0.5, 0.0, -0.5)
    }

    pub fn trace(&self) -> f64 {
        self.r11 + self.r22 + self.r33 + self.r44
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.r11, self.r22, self.r33, self.r44, self.r23.re, self.r23.im];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite element in {self:?}")));
        }
        if (self.trace() - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {} != 1", self.trace())));
        }
        let diag_min = self.r11.min(self.r22).min(self.r33).min(self.r44);
        if diag_min < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!("negative population {diag_min}")));
        }
        if self.r22 * self.r33 - self.r23.norm_sqr() < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "coherence |r23| = {} exceeds sqrt(r22 r33)",
                self.r23.norm()
            )));
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Matrix4<C64> {
        let mut m = Matrix4::<C64>::zeros();
        m[(0, 0)] = C64::new(self.r11, 0.0);
        m[(1, 1)] = C64::new(self.r22, 0.0);
        m[(2, 2)] = C64::new(self.r33, 0.0);
        m[(3, 3)] = C64::new(self.r44, 0.0);
        m[(1, 2)] = self.r23;
        m[(2, 1)] = self.r23.conj();
        m
    }

    /// Largest elementwise deviation from a dense matrix, including the
    /// structurally zero entries.
    pub fn max_abs_diff(&self, dense: &Matrix4<C64>) -> f64 {
        (self.to_dense() - dense).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff_x(&self, other: &Self) -> f64 {
        [
            (self.r11 - other.r11).abs(),
            (self.r22 - other.r22).abs(),
            (self.r33 - other.r33).abs(),
            (self.r44 - other.r44).abs(),
            (self.r23 - other.r23).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// `<S^z_2 + S^z_3>` of the dimer.
    pub fn dimer_magnetization(&self) -> f64 {
        self.r11 - self.r44
    }
}
