//! Quantum states: density matrices, pure states, and the Bloch-vector form
//! used for every single-qubit metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, r, ComplexMatrix, C64, ONE, ZERO};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian, unit trace, eigenvalues >= -1e-10.
    pub fn new(n_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.require_square()?;
        if dim != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: dim,
            });
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        if let Err(m) = matrix.psd_check(PSD_SLACK) {
            return Err(Error::InvalidState(format!("negative eigenvalue {m:e}")));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Skips the eigenvalue check. Used for intermediate simulator states whose
    /// positivity is guaranteed by construction.
    pub(crate) fn from_parts_unchecked(n_qubits: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), 1 << n_qubits);
        Self { n_qubits, matrix }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self {
            n_qubits,
            matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Trace distance 1/2 ||rho - sigma||_1.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(0.5 * (&self.matrix - &other.matrix).trace_norm()?)
    }

    /// <psi| rho |psi>
    pub fn overlap(&self, psi: &PureState) -> Result<f64> {
        if psi.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: psi.n_qubits,
            });
        }
        let v = self.matrix.apply(&psi.amplitudes);
        Ok(psi
            .amplitudes
            .iter()
            .zip(&v)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state norm is {norm}")));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let d = 1 << n_qubits;
        if index >= d {
            return Err(Error::IndexOutOfRange { index, limit: d });
        }
        let mut amps = vec![ZERO; d];
        amps[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes: amps,
        })
    }

    /// cos(t/2)|0> + e^{i phi} sin(t/2)|1> for the given Bloch direction.
    pub fn from_bloch(v: &BlochVector) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "pure states need a unit Bloch vector (norm {norm})"
            )));
        }
        let z = (v.z / norm).clamp(-1.0, 1.0);
        let polar = z.acos();
        let azimuth = v.y.atan2(v.x);
        let amps = vec![
            r((polar / 2.0).cos()),
            C64::from_polar((polar / 2.0).sin(), azimuth),
        ];
        Ok(Self {
            n_qubits: 1,
            amplitudes: amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }

    pub fn bloch(&self) -> Result<BlochVector> {
        bloch_of(&self.density())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_angles(polar: f64, azimuth: f64) -> Self {
        Self {
            x: polar.sin() * azimuth.cos(),
            y: polar.sin() * azimuth.sin(),
            z: polar.cos(),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// Bloch vector of a single-qubit density matrix.
pub fn bloch_of(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.n_qubits != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: rho.n_qubits,
        });
    }
    let m = &rho.matrix;
    let off = m[(1, 0)];
    Ok(BlochVector {
        x: 2.0 * off.re,
        y: 2.0 * off.im,
        z: (m[(0, 0)] - m[(1, 1)]).re,
    })
}

/// (I + x X + y Y + z Z) / 2
pub fn density_of(v: &BlochVector) -> Result<DensityMatrix> {
    if v.norm() > 1.0 + 1e-10 {
        return Err(Error::InvalidState(format!(
            "Bloch vector norm {} exceeds 1",
            v.norm()
        )));
    }
    let m = ComplexMatrix::from_rows(&[
        &[r(0.5 * (1.0 + v.z)), c(0.5 * v.x, -0.5 * v.y)],
        &[c(0.5 * v.x, 0.5 * v.y), r(0.5 * (1.0 - v.z))],
    ]);
    Ok(DensityMatrix {
        n_qubits: 1,
        matrix: m,
    })
}

/// `n` nearly uniform points on the Bloch sphere (golden-angle spiral).
/// Deterministic and seedless.
pub fn fibonacci_sphere(n: usize) -> Vec<BlochVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            BlochVector::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &BlochVector, b: &BlochVector) -> bool {
        (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12 && (a.z - b.z).abs() < 1e-12
    }

    #[test]
    fn bloch_of_standard_states() {
        let zero = PureState::basis(1, 0).unwrap().density();
        assert!(close(&bloch_of(&zero).unwrap(), &BlochVector::new(0.0, 0.0, 1.0)));
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!(close(&bloch_of(&mixed).unwrap(), &BlochVector::new(0.0, 0.0, 0.0)));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(1, vec![r(s), r(s)]).unwrap().density();
        assert!(close(&bloch_of(&plus).unwrap(), &BlochVector::new(1.0, 0.0, 0.0)));
    }

    #[test]
    fn bloch_rejects_two_qubits() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(bloch_of(&rho).is_err());
    }

    #[test]
    fn bloch_round_trip() {
        for v in fibonacci_sphere(40) {
            let half = BlochVector::new(0.7 * v.x, 0.7 * v.y, 0.7 * v.z);
            for w in [v, half] {
                let rho = density_of(&w).unwrap();
                assert!(close(&bloch_of(&rho).unwrap(), &w));
            }
            let psi = PureState::from_bloch(&v).unwrap();
            assert!(close(&psi.bloch().unwrap(), &v));
        }
    }

    #[test]
    fn density_validation() {
        let bad = ComplexMatrix::from_real_rows(&[&[1.2, 0.0], &[0.0, -0.2]]);
        assert!(DensityMatrix::new(1, bad).is_err());
        let not_unit = ComplexMatrix::identity(2);
        assert!(DensityMatrix::new(1, not_unit).is_err());
        assert!(DensityMatrix::new(1, DensityMatrix::maximally_mixed(1).into_matrix()).is_ok());
    }

    #[test]
    fn fibonacci_points_are_unit_and_balanced() {
        let pts = fibonacci_sphere(150);
        assert_eq!(pts.len(), 150);
        let mut sum = [0.0; 3];
        for p in &pts {
            assert!((p.norm() - 1.0).abs() < 1e-12);
            sum[0] += p.x;
            sum[1] += p.y;
            sum[2] += p.z;
        }
        for s in sum {
            assert!(s.abs() / 150.0 < 0.01);
        }
    }
}
