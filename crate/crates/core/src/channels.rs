//! Single-qubit channels in Kraus, process-matrix (χ), Choi, and Pauli
//! transfer-matrix form, plus the parametric noise models and the set of
//! stabilizer-simulable channels used by the approximations.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, r, ComplexMatrix, C64, I, ONE, ZERO};
use crate::pauli::{pauli_basis, Pauli};
use crate::state::DensityMatrix;

pub const TP_TOL: f64 = 1e-10;
pub const CHI_HERMITIAN_TOL: f64 = 1e-12;
pub const CHI_TRACE_TOL: f64 = 1e-10;
pub const CP_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    operators: Vec<ComplexMatrix>,
    label: String,
}

impl KrausChannel {
    /// Validates shapes and completeness (sum K^dagger K = I to 1e-10).
    pub fn new(operators: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let k = Self::new_unchecked(operators, label)?;
        validate_cptp(&k)?;
        Ok(k)
    }

    fn new_unchecked(operators: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let Some(first) = operators.first() else {
            return Err(Error::InvalidParameter("channel needs at least one Kraus operator".into()));
        };
        let d = first.require_square()?;
        for op in &operators {
            let dk = op.require_square()?;
            if dk != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: dk,
                });
            }
        }
        if d != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: d,
            });
        }
        Ok(Self {
            operators,
            label: label.into(),
        })
    }

    pub fn identity() -> Self {
        Self {
            operators: vec![ComplexMatrix::identity(2)],
            label: "identity".into(),
        }
    }

    pub fn unitary(u: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        Self::new(vec![u], label)
    }

    /// Convex combination of channels, realized by stacking sqrt(w)-scaled
    /// Kraus operators. Zero weights are skipped.
    pub fn mixture(parts: &[(f64, &KrausChannel)], label: impl Into<String>) -> Result<Self> {
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0 || !w.is_finite()) || (total - 1.0).abs() > TP_TOL {
            return Err(Error::InvalidParameter(format!(
                "mixture weights must be nonnegative and sum to 1 (sum {total})"
            )));
        }
        let ops: Vec<_> = parts
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .flat_map(|(w, k)| k.operators.iter().map(move |op| op.scale_real(w.sqrt())))
            .collect();
        Self::new(ops, label)
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// E(M) for an arbitrary 2x2 operator M.
    pub fn apply_operator(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(2, 2);
        for k in &self.operators {
            let term = k.matmul(m)?.matmul(&k.dagger())?;
            out.add_scaled(&term, ONE);
        }
        Ok(out)
    }

    pub fn chi(&self) -> ChiMatrix {
        chi_from_kraus(self)
    }
}

/// Checks sum K^dagger K = I to 1e-10.
pub fn validate_cptp(k: &KrausChannel) -> Result<()> {
    let mut acc = ComplexMatrix::zeros(2, 2);
    for op in &k.operators {
        acc.add_scaled(&op.dagger().matmul(op)?, ONE);
    }
    let dev = (&acc - &ComplexMatrix::identity(2)).max_abs();
    if dev > TP_TOL {
        return Err(Error::NotTracePreserving { deviation: dev });
    }
    Ok(())
}

/// Channel that applies `first` and then `second`.
pub fn compose(first: &KrausChannel, second: &KrausChannel) -> Result<KrausChannel> {
    let mut ops = Vec::with_capacity(first.operators.len() * second.operators.len());
    for b in &second.operators {
        for a in &first.operators {
            ops.push(b.matmul(a)?);
        }
    }
    KrausChannel::new(ops, format!("{} then {}", first.label, second.label))
}

/// Applies a single-qubit channel to qubit `target` of a register.
pub fn apply(k: &KrausChannel, rho: &DensityMatrix, target: usize) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if target >= n {
        return Err(Error::IndexOutOfRange {
            index: target,
            limit: n,
        });
    }
    let out = apply_local(&k.operators, rho.matrix(), n, target);
    Ok(DensityMatrix::from_parts_unchecked(n, out))
}

/// sum_k (K_k on qubit q) M (K_k on qubit q)^dagger without forming the
/// embedded operators.
pub(crate) fn apply_local(
    ops: &[ComplexMatrix],
    m: &ComplexMatrix,
    n_qubits: usize,
    q: usize,
) -> ComplexMatrix {
    let d = m.rows();
    let bit = 1 << (n_qubits - 1 - q);
    let mut out = ComplexMatrix::zeros(d, d);
    let mut left = ComplexMatrix::zeros(d, d);
    for k in ops {
        let (k00, k01, k10, k11) = (k[(0, 0)], k[(0, 1)], k[(1, 0)], k[(1, 1)]);
        for r0 in (0..d).filter(|r| r & bit == 0) {
            let r1 = r0 | bit;
            for col in 0..d {
                let a = m[(r0, col)];
                let b = m[(r1, col)];
                left[(r0, col)] = k00 * a + k01 * b;
                left[(r1, col)] = k10 * a + k11 * b;
            }
        }
        let (c00, c01, c10, c11) = (k00.conj(), k01.conj(), k10.conj(), k11.conj());
        for row in 0..d {
            for c0 in (0..d).filter(|c| c & bit == 0) {
                let c1 = c0 | bit;
                let a = left[(row, c0)];
                let b = left[(row, c1)];
                out[(row, c0)] += a * c00 + b * c01;
                out[(row, c1)] += a * c10 + b * c11;
            }
        }
    }
    out
}

/// Process matrix in the normalized Pauli basis {I, X, Y, Z}/sqrt(2); trace 2
/// for trace-preserving maps (the identity channel is diag(2, 0, 0, 0)).
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix {
    entries: ComplexMatrix,
}

impl ChiMatrix {
    /// Validated constructor: Hermitian, trace 2, completely positive.
    pub fn new(entries: ComplexMatrix) -> Result<Self> {
        let chi = Self::from_entries_hermitian(entries)?;
        let tr = chi.entries.trace();
        if (tr - r(2.0)).norm() > CHI_TRACE_TOL {
            return Err(Error::NotTracePreserving {
                deviation: (tr - r(2.0)).norm(),
            });
        }
        let m = chi.entries.min_eigenvalue()?;
        if m < -CP_SLACK {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: m });
        }
        Ok(chi)
    }

    /// Checks shape and hermiticity only, then symmetrizes away rounding.
    pub(crate) fn from_entries_hermitian(entries: ComplexMatrix) -> Result<Self> {
        if entries.rows() != 4 || entries.cols() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: entries.rows().max(entries.cols()),
            });
        }
        let tol = CHI_HERMITIAN_TOL * entries.max_abs().max(1.0);
        if !entries.is_hermitian(tol) {
            return Err(Error::InvalidParameter("χ matrix is not Hermitian".into()));
        }
        Ok(Self {
            entries: entries.hermitian_part(),
        })
    }

    pub fn identity() -> Self {
        let mut e = ComplexMatrix::zeros(4, 4);
        e[(0, 0)] = r(2.0);
        Self { entries: e }
    }

    /// Pauli channel with error probabilities (p_x, p_y, p_z).
    pub fn pauli(p: [f64; 3]) -> Result<Self> {
        check_pauli_probs(&p)?;
        let p0 = 1.0 - p.iter().sum::<f64>();
        Ok(Self {
            entries: ComplexMatrix::diagonal(&[
                r(2.0 * p0),
                r(2.0 * p[0]),
                r(2.0 * p[1]),
                r(2.0 * p[2]),
            ]),
        })
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.entries[(m, n)]
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.entries[(i, i)].re)
    }

    /// Probabilities (p_I, p_x, p_y, p_z) of the twirled channel.
    pub fn pauli_probabilities(&self) -> [f64; 4] {
        self.diagonal().map(|d| d / 2.0)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..4).all(|i| (0..4).all(|j| i == j || self.entries[(i, j)].norm() <= tol))
    }

    /// Convex combination sum w_i chi_i.
    pub fn mix(parts: &[(f64, &ChiMatrix)]) -> Result<Self> {
        let mut e = ComplexMatrix::zeros(4, 4);
        for (w, chi) in parts {
            e.add_scaled(&chi.entries, r(*w));
        }
        Self::new(e)
    }

    /// E(M) = sum_mn chi_mn B_m M B_n^dagger.
    pub fn apply_operator(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let basis = basis_matrices();
        let mut out = ComplexMatrix::zeros(2, 2);
        for (a, bm) in basis.iter().enumerate() {
            let left = bm.matmul(m)?;
            for (b, bn) in basis.iter().enumerate() {
                let w = self.entries[(a, b)];
                if w == ZERO {
                    continue;
                }
                out.add_scaled(&left.matmul(&bn.dagger())?, w);
            }
        }
        Ok(out)
    }

    /// Choi matrix J = sum_ij |i><j| ⊗ E(|i><j|).
    pub fn choi(&self) -> ComplexMatrix {
        let v = choi_vectors();
        let mut j = ComplexMatrix::zeros(4, 4);
        for a in 0..4 {
            for b in 0..4 {
                let w = self.entries[(a, b)];
                if w == ZERO {
                    continue;
                }
                j.add_scaled(&ComplexMatrix::outer(&v[a], &v[b]), w);
            }
        }
        j
    }

    pub fn from_choi(j: &ComplexMatrix) -> Result<Self> {
        if j.rows() != 4 || j.cols() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: j.rows().max(j.cols()),
            });
        }
        let v = choi_vectors();
        let mut e = ComplexMatrix::zeros(4, 4);
        for a in 0..4 {
            let jv: Vec<Vec<C64>> = (0..4).map(|b| j.apply(&v[b])).collect();
            for b in 0..4 {
                e[(a, b)] = v[a].iter().zip(&jv[b]).map(|(x, y)| x.conj() * y).sum();
            }
        }
        Self::new(e)
    }

    /// Pauli transfer matrix R_ij = Tr(σ_i E(σ_j)) / 2, real 4x4.
    pub fn transfer_matrix(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        let paulis = Pauli::ALL.map(Pauli::matrix);
        for j in 0..4 {
            let e = self
                .apply_operator(&paulis[j])
                .expect("2x2 operands always agree");
            for i in 0..4 {
                out[i][j] = 0.5 * paulis[i].hs_inner(&e).re;
            }
        }
        out
    }

    pub fn to_kraus(&self) -> Result<KrausChannel> {
        kraus_from_chi(self)
    }
}

/// Serialized as `{"re": [[..4]; 4], "im": [[..4]; 4]}`.
impl Serialize for ChiMatrix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let part = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..4).map(|i| (0..4).map(|j| f(&self.entries[(i, j)])).collect()).collect()
        };
        let mut st = ser.serialize_struct("ChiMatrix", 2)?;
        st.serialize_field("re", &part(|z| z.re))?;
        st.serialize_field("im", &part(|z| z.im))?;
        st.end()
    }
}

/// Accepts the serialized form and re-validates the χ invariants.
impl<'de> Deserialize<'de> for ChiMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Parts {
            re: [[f64; 4]; 4],
            im: [[f64; 4]; 4],
        }
        let p = Parts::deserialize(de)?;
        let mut m = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = c(p.re[i][j], p.im[i][j]);
            }
        }
        ChiMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for ChiMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = f.precision().unwrap_or(6);
        for i in 0..4 {
            let row: Vec<String> = (0..4)
                .map(|j| {
                    let z = self.entries[(i, j)];
                    format!("{:+.*e}{:+.*e}i", prec, z.re, prec, z.im)
                })
                .collect();
            writeln!(f, "{}", row.join("  "))?;
        }
        Ok(())
    }
}

fn basis_matrices() -> [ComplexMatrix; 4] {
    [0, 1, 2, 3].map(|i| pauli_basis(i).expect("index below 4"))
}

/// v_m with components v_m[(i, k)] = (B_m)_{k i}, so that J = sum chi_mn v_m v_n^dagger.
fn choi_vectors() -> [Vec<C64>; 4] {
    basis_matrices().map(|b| {
        let mut v = vec![ZERO; 4];
        for i in 0..2 {
            for k in 0..2 {
                v[2 * i + k] = b[(k, i)];
            }
        }
        v
    })
}

/// chi_mn = sum_k a_km conj(a_kn), with a_km = Tr(B_m^dagger K_k).
pub fn chi_from_kraus(k: &KrausChannel) -> ChiMatrix {
    let basis = basis_matrices();
    let mut e = ComplexMatrix::zeros(4, 4);
    for op in &k.operators {
        let a: Vec<C64> = basis.iter().map(|b| b.hs_inner(op)).collect();
        for m in 0..4 {
            for n in 0..4 {
                e[(m, n)] += a[m] * a[n].conj();
            }
        }
    }
    ChiMatrix {
        entries: e.hermitian_part(),
    }
}

/// Canonical Kraus operators from the eigendecomposition of chi.
pub fn kraus_from_chi(chi: &ChiMatrix) -> Result<KrausChannel> {
    let (w, u) = chi.entries.eigh()?;
    if let Some(&m) = w.first() {
        if m < -CP_SLACK {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: m });
        }
    }
    let basis = basis_matrices();
    let cutoff = 1e-14 * w.last().copied().unwrap_or(0.0).abs().max(1.0);
    let mut ops = Vec::new();
    for (k, &lambda) in w.iter().enumerate().rev() {
        if lambda <= cutoff {
            continue;
        }
        let mut op = ComplexMatrix::zeros(2, 2);
        for (m, b) in basis.iter().enumerate() {
            op.add_scaled(b, u[(m, k)] * lambda.sqrt());
        }
        ops.push(op);
    }
    if ops.is_empty() {
        return Err(Error::NotTracePreserving { deviation: 1.0 });
    }
    KrausChannel::new_unchecked(ops, "from χ")
}

/// Pauli twirl: keep the diagonal of chi.
pub fn twirl(chi: &ChiMatrix) -> ChiMatrix {
    let d = chi.diagonal();
    ChiMatrix {
        entries: ComplexMatrix::diagonal(&d.map(r)),
    }
}

/// Choi matrix of a Kraus channel, J = sum_ij |i><j| ⊗ E(|i><j|).
pub fn choi_of(k: &KrausChannel) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(4, 4);
    for op in &k.operators {
        let mut v = vec![ZERO; 4];
        for i in 0..2 {
            for o in 0..2 {
                v[2 * i + o] = op[(o, i)];
            }
        }
        j.add_scaled(&ComplexMatrix::outer(&v, &v), ONE);
    }
    j
}

fn check_pauli_probs(p: &[f64]) -> Result<()> {
    if p.iter().any(|x| !(0.0..=1.0).contains(x)) || p.iter().sum::<f64>() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "Pauli probabilities {p:?} must lie in [0, 1] and sum to at most 1"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelTag {
    #[serde(rename = "ADC")]
    Adc,
    PolPi8,
    #[serde(rename = "RZ")]
    Rz,
    #[serde(rename = "RH")]
    Rh,
    #[serde(rename = "RX")]
    Rx,
    #[serde(rename = "DC")]
    Dc,
    BitFlip,
    Pauli,
    #[serde(rename = "CMCMixture")]
    CmcMixture,
    Identity,
}

impl ChannelTag {
    pub fn name(self) -> &'static str {
        match self {
            ChannelTag::Adc => "ADC",
            ChannelTag::PolPi8 => "PolPi8",
            ChannelTag::Rz => "RZ",
            ChannelTag::Rh => "RH",
            ChannelTag::Rx => "RX",
            ChannelTag::Dc => "DC",
            ChannelTag::BitFlip => "BitFlip",
            ChannelTag::Pauli => "Pauli",
            ChannelTag::CmcMixture => "CMCMixture",
            ChannelTag::Identity => "Identity",
        }
    }

    /// Whether `strength` parameterizes the channel (false for the fixed
    /// probability-vector models).
    pub fn has_strength(self) -> bool {
        !matches!(
            self,
            ChannelTag::Pauli | ChannelTag::CmcMixture | ChannelTag::Identity
        )
    }

    pub fn is_coherent(self) -> bool {
        matches!(self, ChannelTag::Rz | ChannelTag::Rh | ChannelTag::Rx)
    }
}

impl std::str::FromStr for ChannelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tag = match s.to_ascii_lowercase().as_str() {
            "adc" => ChannelTag::Adc,
            "polpi8" | "pol" => ChannelTag::PolPi8,
            "rz" => ChannelTag::Rz,
            "rh" => ChannelTag::Rh,
            "rx" => ChannelTag::Rx,
            "dc" => ChannelTag::Dc,
            "bitflip" | "flip" => ChannelTag::BitFlip,
            "pauli" => ChannelTag::Pauli,
            "cmcmixture" | "cmc" => ChannelTag::CmcMixture,
            "identity" | "id" => ChannelTag::Identity,
            _ => return Err(Error::Parse(format!("unknown channel `{s}`"))),
        };
        Ok(tag)
    }
}

/// Parametric noise model. `strength` is γ for ADC, p for PolPi8, DC and BitFlip, and
/// the rotation angle θ (radians) for RZ, RH, and RX. Pauli channels carry
/// (p_x, p_y, p_z) in `extra`; CMC mixtures carry one weight per member of
/// the full elementary set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub tag: ChannelTag,
    #[serde(default)]
    pub strength: f64,
    #[serde(default)]
    pub extra: Vec<f64>,
}

impl ChannelModel {
    pub fn new(tag: ChannelTag, strength: f64) -> Self {
        Self {
            tag,
            strength,
            extra: Vec::new(),
        }
    }

    pub fn adc(gamma: f64) -> Self {
        Self::new(ChannelTag::Adc, gamma)
    }

    pub fn pol_pi8(p: f64) -> Self {
        Self::new(ChannelTag::PolPi8, p)
    }

    pub fn rz(theta: f64) -> Self {
        Self::new(ChannelTag::Rz, theta)
    }

    pub fn rh(theta: f64) -> Self {
        Self::new(ChannelTag::Rh, theta)
    }

    pub fn rx(theta: f64) -> Self {
        Self::new(ChannelTag::Rx, theta)
    }

    pub fn dc(p: f64) -> Self {
        Self::new(ChannelTag::Dc, p)
    }

    pub fn pauli(p: [f64; 3]) -> Self {
        Self {
            tag: ChannelTag::Pauli,
            strength: 0.0,
            extra: p.to_vec(),
        }
    }

    /// X flip with probability p.
    pub fn bit_flip(p: f64) -> Self {
        Self::new(ChannelTag::BitFlip, p)
    }

    pub fn cmc_mixture(weights: Vec<f64>) -> Self {
        Self {
            tag: ChannelTag::CmcMixture,
            strength: 0.0,
            extra: weights,
        }
    }

    pub fn identity() -> Self {
        Self::new(ChannelTag::Identity, 0.0)
    }

    /// Same family at a different strength.
    pub fn at(&self, strength: f64) -> Result<Self> {
        if !self.tag.has_strength() {
            return Err(Error::InvalidParameter(format!(
                "{} channels have no strength parameter",
                self.tag.name()
            )));
        }
        Ok(Self {
            strength,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.strength;
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidParameter(format!("strength {s} must be finite and >= 0")));
        }
        match self.tag {
            ChannelTag::Adc | ChannelTag::PolPi8 | ChannelTag::Dc | ChannelTag::BitFlip if s > 1.0 => Err(
                Error::InvalidParameter(format!("{} strength {s} exceeds 1", self.tag.name())),
            ),
            ChannelTag::Rz | ChannelTag::Rh | ChannelTag::Rx if s >= PI => Err(
                Error::InvalidParameter(format!("rotation angle {s} must lie in [0, π)")),
            ),
            ChannelTag::Pauli => {
                if self.extra.len() != 3 {
                    return Err(Error::InvalidParameter(
                        "Pauli channels need extra = [p_x, p_y, p_z]".into(),
                    ));
                }
                check_pauli_probs(&self.extra)
            }
            ChannelTag::CmcMixture => {
                let n = ElementaryChannelSet::full().len();
                if self.extra.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "CMC mixtures need {n} weights, got {}",
                        self.extra.len()
                    )));
                }
                let sum: f64 = self.extra.iter().sum();
                if self.extra.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > TP_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "CMC weights must be nonnegative and sum to 1 (sum {sum})"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn kraus(&self) -> Result<KrausChannel> {
        kraus_of_model(self)
    }

    pub fn chi(&self) -> Result<ChiMatrix> {
        Ok(chi_from_kraus(&self.kraus()?))
    }

    pub fn label(&self) -> String {
        match self.tag {
            ChannelTag::Pauli | ChannelTag::CmcMixture => self.tag.name().to_string(),
            ChannelTag::Identity => "Identity".into(),
            _ => format!("{}({})", self.tag.name(), self.strength),
        }
    }
}

fn rotation(axis: [f64; 3], angle: f64) -> ComplexMatrix {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let n = axis.map(|a| a / norm);
    let (cos, sin) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let mut u = ComplexMatrix::identity(2).scale_real(cos);
    for (i, p) in [Pauli::X, Pauli::Y, Pauli::Z].iter().enumerate() {
        u.add_scaled(&p.matrix(), c(0.0, -sin * n[i]));
    }
    u
}

pub fn kraus_of_model(m: &ChannelModel) -> Result<KrausChannel> {
    m.validate()?;
    let s = m.strength;
    let label = m.label();
    match m.tag {
        ChannelTag::Identity => Ok(KrausChannel::identity()),
        ChannelTag::Adc => {
            let k0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - s).sqrt()]]);
            let k1 = ComplexMatrix::from_real_rows(&[&[0.0, s.sqrt()], &[0.0, 0.0]]);
            KrausChannel::new(vec![k0, k1], label)
        }
        ChannelTag::PolPi8 => {
            let (cs, sn) = ((PI / 8.0).cos(), (PI / 8.0).sin());
            let mut a = Pauli::X.matrix().scale_real(cs);
            a.add_scaled(&Pauli::Y.matrix(), r(sn));
            KrausChannel::new(
                vec![
                    ComplexMatrix::identity(2).scale_real((1.0 - s).sqrt()),
                    a.scale_real(s.sqrt()),
                ],
                label,
            )
        }
        ChannelTag::Rz => KrausChannel::unitary(rotation([0.0, 0.0, 1.0], s), label),
        ChannelTag::Rx => KrausChannel::unitary(rotation([1.0, 0.0, 0.0], s), label),
        ChannelTag::Rh => {
            KrausChannel::unitary(rotation([FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2], s), label)
        }
        ChannelTag::Dc => pauli_kraus([s / 3.0; 3], label),
        ChannelTag::BitFlip => pauli_kraus([s, 0.0, 0.0], label),
        ChannelTag::Pauli => pauli_kraus([m.extra[0], m.extra[1], m.extra[2]], label),
        ChannelTag::CmcMixture => {
            let set = ElementaryChannelSet::full();
            let parts: Vec<(f64, &KrausChannel)> = m
                .extra
                .iter()
                .zip(set.members())
                .map(|(&w, mem)| (w, &mem.channel))
                .collect();
            KrausChannel::mixture(&parts, label)
        }
    }
}

fn pauli_kraus(p: [f64; 3], label: String) -> Result<KrausChannel> {
    check_pauli_probs(&p)?;
    let p0 = (1.0 - p.iter().sum::<f64>()).max(0.0);
    let mut ops = vec![ComplexMatrix::identity(2).scale_real(p0.sqrt())];
    for (prob, letter) in p.iter().zip([Pauli::X, Pauli::Y, Pauli::Z]) {
        if *prob > 0.0 {
            ops.push(letter.matrix().scale_real(prob.sqrt()));
        }
    }
    KrausChannel::new(ops, label)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Clifford,
    /// Measure and transport every outcome to a fixed Pauli eigenstate.
    Translation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryMember {
    pub id: String,
    pub kind: MemberKind,
    pub channel: KrausChannel,
    pub chi: ChiMatrix,
}

/// Ordered set of stabilizer-simulable channels: the 24 single-qubit
/// Cliffords followed by the 6 translations to Pauli eigenstates, or just the
/// 4 Paulis.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryChannelSet {
    members: Vec<ElementaryMember>,
    pauli_only: bool,
}

impl ElementaryChannelSet {
    pub fn full() -> Self {
        elementary_set(false)
    }

    pub fn paulis() -> Self {
        elementary_set(true)
    }

    pub fn members(&self) -> &[ElementaryMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_pauli_only(&self) -> bool {
        self.pauli_only
    }

    pub fn chis(&self) -> Vec<&ChiMatrix> {
        self.members.iter().map(|m| &m.chi).collect()
    }

    /// chi of sum_j w_j member_j.
    pub fn mix_chi(&self, weights: &[f64]) -> Result<ChiMatrix> {
        if weights.len() != self.members.len() {
            return Err(Error::DimensionMismatch {
                expected: self.members.len(),
                found: weights.len(),
            });
        }
        let mut e = ComplexMatrix::zeros(4, 4);
        for (w, m) in weights.iter().zip(&self.members) {
            e.add_scaled(m.chi.entries(), r(*w));
        }
        ChiMatrix::from_entries_hermitian(e)
    }

    pub fn mix_kraus(&self, weights: &[f64], label: &str) -> Result<KrausChannel> {
        if weights.len() != self.members.len() {
            return Err(Error::DimensionMismatch {
                expected: self.members.len(),
                found: weights.len(),
            });
        }
        let parts: Vec<(f64, &KrausChannel)> = weights
            .iter()
            .zip(&self.members)
            .map(|(&w, m)| (w, &m.channel))
            .collect();
        KrausChannel::mixture(&parts, label)
    }

    /// Weights over the full set that reproduce `weights` over this set.
    pub fn embed_in_full(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if !self.pauli_only {
            return Ok(weights.to_vec());
        }
        let full = Self::full();
        let mut out = vec![0.0; full.len()];
        for (w, m) in weights.iter().zip(&self.members) {
            let idx = full
                .members
                .iter()
                .position(|f| f.id == m.id)
                .expect("Paulis are part of the full set");
            out[idx] = *w;
        }
        Ok(out)
    }
}

/// Builds the elementary set. Cliffords are ordered by rotation axis (identity,
/// X, Y, Z, the six edge axes, the four body diagonals) and then by angle.
pub fn elementary_set(pauli_only: bool) -> ElementaryChannelSet {
    let mut specs: Vec<(String, [f64; 3], f64)> = vec![("I".into(), [0.0, 0.0, 1.0], 0.0)];
    let half = PI / 2.0;
    for (name, axis) in [
        ("X", [1.0, 0.0, 0.0]),
        ("Y", [0.0, 1.0, 0.0]),
        ("Z", [0.0, 0.0, 1.0]),
    ] {
        if pauli_only {
            specs.push((name.into(), axis, PI));
            continue;
        }
        specs.push((format!("R{name}(pi/2)"), axis, half));
        specs.push((name.into(), axis, PI));
        specs.push((format!("R{name}(3pi/2)"), axis, 3.0 * half));
    }
    if !pauli_only {
        for (name, axis) in [
            ("XY+", [1.0, 1.0, 0.0]),
            ("XY-", [1.0, -1.0, 0.0]),
            ("XZ+", [1.0, 0.0, 1.0]),
            ("XZ-", [1.0, 0.0, -1.0]),
            ("YZ+", [0.0, 1.0, 1.0]),
            ("YZ-", [0.0, 1.0, -1.0]),
        ] {
            specs.push((format!("R[{name}](pi)"), axis, PI));
        }
        for (name, axis) in [
            ("+++", [1.0, 1.0, 1.0]),
            ("++-", [1.0, 1.0, -1.0]),
            ("+-+", [1.0, -1.0, 1.0]),
            ("-++", [-1.0, 1.0, 1.0]),
        ] {
            specs.push((format!("R[{name}](2pi/3)"), axis, 2.0 * PI / 3.0));
            specs.push((format!("R[{name}](4pi/3)"), axis, 4.0 * PI / 3.0));
        }
    }
    let mut members: Vec<ElementaryMember> = specs
        .into_iter()
        .map(|(id, axis, angle)| {
            let channel = KrausChannel {
                operators: vec![rotation(axis, angle)],
                label: id.clone(),
            };
            ElementaryMember {
                chi: chi_from_kraus(&channel),
                id,
                kind: MemberKind::Clifford,
                channel,
            }
        })
        .collect();
    if !pauli_only {
        let s = FRAC_1_SQRT_2;
        let targets: [(&str, [C64; 2]); 6] = [
            ("|0>", [ONE, ZERO]),
            ("|1>", [ZERO, ONE]),
            ("|+>", [r(s), r(s)]),
            ("|->", [r(s), r(-s)]),
            ("|+i>", [r(s), I * s]),
            ("|-i>", [r(s), -I * s]),
        ];
        for (name, b) in targets {
            // Measuring any Pauli axis and moving both outcomes to |b> is the
            // same channel, so one Kraus pair per target suffices.
            let ops = (0..2)
                .map(|k| {
                    let mut e = vec![ZERO; 2];
                    e[k] = ONE;
                    ComplexMatrix::outer(&b, &e)
                })
                .collect();
            let id = format!("translate{name}");
            let channel = KrausChannel {
                operators: ops,
                label: id.clone(),
            };
            members.push(ElementaryMember {
                chi: chi_from_kraus(&channel),
                id,
                kind: MemberKind::Translation,
                channel,
            });
        }
    }
    ElementaryChannelSet {
        members,
        pauli_only,
    }
}
