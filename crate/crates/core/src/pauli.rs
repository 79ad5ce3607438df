//! Pauli operators on qubit registers.
//!
//! Qubit 0 is the most significant bit of a basis-state index, so the string
//! "XIZ" acts with X on the leftmost tensor factor.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{r, ComplexMatrix, C64, I, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or(Error::IndexOutOfRange { index: i, limit: 4 })
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn x_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn z_bit(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    /// Unnormalized 2x2 matrix.
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
            Pauli::Y => ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
            Pauli::Z => ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        }
    }

    /// Product `self * other` as (power of i, letter).
    fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }
}

/// Normalized single-qubit Pauli basis element sigma_i / sqrt(2).
pub fn pauli_basis(i: usize) -> Result<ComplexMatrix> {
    Ok(Pauli::from_index(i)?
        .matrix()
        .scale_real(std::f64::consts::FRAC_1_SQRT_2))
}

/// A tensor product of Pauli letters with a global phase i^k.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    phase: u8,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters, phase: 0 }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(vec![Pauli::I; n])
    }

    /// Single non-identity letter on `qubit` of an `n`-qubit register.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<Self> {
        if qubit >= n {
            return Err(Error::IndexOutOfRange {
                index: qubit,
                limit: n,
            });
        }
        let mut s = Self::identity(n);
        s.letters[qubit] = p;
        Ok(s)
    }

    pub fn with_phase(mut self, power_of_i: u8) -> Self {
        self.phase = power_of_i % 4;
        self
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    /// Global phase as a power of i.
    pub fn phase_power(&self) -> u8 {
        self.phase
    }

    pub fn phase(&self) -> C64 {
        i_pow(self.phase)
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    pub fn x_mask(&self) -> usize {
        self.mask(Pauli::x_bit)
    }

    pub fn z_mask(&self) -> usize {
        self.mask(Pauli::z_bit)
    }

    fn mask(&self, bit: fn(Pauli) -> bool) -> usize {
        let n = self.letters.len();
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| bit(p))
            .fold(0, |m, (q, _)| m | 1 << (n - 1 - q))
    }

    fn y_count(&self) -> u32 {
        self.letters.iter().filter(|&&p| p == Pauli::Y).count() as u32
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.letters.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.letters.len(),
            });
        }
        Ok(())
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        other.check_len(self.n_qubits())?;
        let anti = (self.x_mask() & other.z_mask()).count_ones()
            + (self.z_mask() & other.x_mask()).count_ones();
        Ok(anti.is_multiple_of(2))
    }

    /// Operator product `self * other`, tracking the phase.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        other.check_len(self.n_qubits())?;
        let mut phase = self.phase + other.phase;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (k, p) = a.mul(b);
                phase += k;
                p
            })
            .collect();
        Ok(Self {
            letters,
            phase: phase % 4,
        })
    }

    /// Dense 2^n x 2^n matrix.
    pub fn matrix(&self) -> ComplexMatrix {
        let d = 1 << self.n_qubits();
        let mut m = ComplexMatrix::zeros(d, d);
        for b in 0..d {
            let (a, amp) = self.act_on_basis(b);
            m[(a, b)] = amp;
        }
        m
    }

    /// P|b> = amp |a>.
    pub fn act_on_basis(&self, b: usize) -> (usize, C64) {
        let x = self.x_mask();
        let z = self.z_mask();
        let sign = if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let amp = i_pow(self.phase + (self.y_count() % 4) as u8) * sign;
        (b ^ x, amp)
    }

    pub fn apply_to_vector(&self, v: &[C64]) -> Result<Vec<C64>> {
        let d = 1 << self.n_qubits();
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        let mut out = vec![ZERO; d];
        for (b, &vb) in v.iter().enumerate() {
            let (a, amp) = self.act_on_basis(b);
            out[a] = amp * vb;
        }
        Ok(out)
    }

    fn check_operand(&self, m: &ComplexMatrix) -> Result<usize> {
        let d = m.require_square()?;
        if d != 1 << self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.n_qubits(),
                found: d,
            });
        }
        Ok(d)
    }

    fn signs(&self, d: usize) -> Vec<f64> {
        let z = self.z_mask();
        (0..d)
            .map(|b| if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 })
            .collect()
    }

    /// P * M without forming P.
    pub fn left_multiply(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.check_operand(m)?;
        let x = self.x_mask();
        let s = self.signs(d);
        let g = i_pow(self.phase + (self.y_count() % 4) as u8);
        let mut out = ComplexMatrix::zeros(d, d);
        for a in 0..d {
            let src = a ^ x;
            let f = g * s[src];
            for col in 0..d {
                out[(a, col)] = f * m[(src, col)];
            }
        }
        Ok(out)
    }

    /// M * P without forming P.
    pub fn right_multiply(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.check_operand(m)?;
        let x = self.x_mask();
        let s = self.signs(d);
        let g = i_pow(self.phase + (self.y_count() % 4) as u8);
        let mut out = ComplexMatrix::zeros(d, d);
        for row in 0..d {
            for col in 0..d {
                out[(row, col)] = m[(row, col ^ x)] * (g * s[col]);
            }
        }
        Ok(out)
    }

    /// P M P^dagger without forming P.
    pub fn conjugate(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.check_operand(m)?;
        let x = self.x_mask();
        let s = self.signs(d);
        let mut out = ComplexMatrix::zeros(d, d);
        for a in 0..d {
            let sa = s[a ^ x];
            for col in 0..d {
                out[(a, col)] = m[(a ^ x, col ^ x)] * (sa * s[col ^ x]);
            }
        }
        Ok(out)
    }

    /// Expectation Tr(P M).
    pub fn expectation(&self, m: &ComplexMatrix) -> Result<C64> {
        let d = self.check_operand(m)?;
        let mut acc = ZERO;
        for b in 0..d {
            let (a, amp) = self.act_on_basis(b);
            acc += amp * m[(b, a)];
        }
        Ok(acc)
    }
}

fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => r(-1.0),
        _ => -I,
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else {
            (0, s)
        };
        if body.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string `{s}`")));
        }
        let letters = body
            .chars()
            .map(|ch| match ch {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse(format!(
                    "unexpected character `{other}` in Pauli string `{s}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { letters, phase })
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix) {
        assert!((a - b).max_abs() < 1e-12, "{a:?}\n!=\n{b:?}");
    }

    #[test]
    fn basis_is_orthonormal() {
        for i in 0..4 {
            for j in 0..4 {
                let bi = pauli_basis(i).unwrap();
                let bj = pauli_basis(j).unwrap();
                let ip = bi.hs_inner(&bj);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - r(expected)).norm() < 1e-15);
            }
        }
        assert!(pauli_basis(4).is_err());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(&pauli_basis(0).unwrap(), &ComplexMatrix::identity(2).scale_real(s));
        assert_close(&pauli_basis(3).unwrap(), &Pauli::Z.matrix().scale_real(s));
    }

    #[test]
    fn parse_and_display() {
        for s in ["IIIXYYI", "-XZ", "iY", "-iZZ"] {
            assert_eq!(ps(s).to_string(), s);
        }
        assert_eq!(ps("+XX"), ps("XX"));
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn matrix_matches_kron() {
        let p = ps("XYZ");
        let expected = tensor(&tensor(&Pauli::X.matrix(), &Pauli::Y.matrix()), &Pauli::Z.matrix());
        assert_close(&p.matrix(), &expected);
        let q = ps("-iZX");
        let expected = tensor(&Pauli::Z.matrix(), &Pauli::X.matrix()).scale(-I);
        assert_close(&q.matrix(), &expected);
    }

    #[test]
    fn multiplication_phases() {
        assert_eq!(ps("X").multiply(&ps("Y")).unwrap(), ps("iZ"));
        assert_eq!(ps("Y").multiply(&ps("X")).unwrap(), ps("-iZ"));
        let a = ps("XYZI");
        let b = ps("ZZXY");
        let prod = a.multiply(&b).unwrap();
        assert_close(&prod.matrix(), &(&a.matrix() * &b.matrix()));
    }

    #[test]
    fn commutation() {
        assert!(ps("ZZI").commutes_with(&ps("IZZ")).unwrap());
        assert!(!ps("XII").commutes_with(&ps("ZZI")).unwrap());
        assert!(ps("XXX").commutes_with(&ps("ZZI")).unwrap());
        assert!(!ps("XXX").commutes_with(&ps("ZZZ")).unwrap());
        assert!(ps("XX").commutes_with(&ps("XXX")).is_err());
    }

    #[test]
    fn fast_products_match_dense() {
        let d = 8;
        let mut m = ComplexMatrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                m[(a, b)] = C64::new((a * 3 + b) as f64 * 0.1, (a as f64 - b as f64) * 0.2);
            }
        }
        for s in ["XYZ", "-iYIX", "ZZI", "iIYY"] {
            let p = ps(s);
            let pm = p.matrix();
            assert_close(&p.left_multiply(&m).unwrap(), &(&pm * &m));
            assert_close(&p.right_multiply(&m).unwrap(), &(&m * &pm));
            assert_close(&p.conjugate(&m).unwrap(), &(&(&pm * &m) * &pm.dagger()));
            let tr = (&pm * &m).trace();
            assert!((p.expectation(&m).unwrap() - tr).norm() < 1e-12);
        }
    }

    #[test]
    fn zz_parity_on_basis() {
        let p = ps("ZZ");
        assert_eq!(p.act_on_basis(0b01), (0b01, r(-1.0)));
        assert_eq!(p.act_on_basis(0b11), (0b11, r(1.0)));
        assert_eq!(ps("XI").x_mask(), 0b10);
    }
}
