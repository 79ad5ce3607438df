//! Stabilizer codes under perfect error correction.
//!
//! Two routes to the effective one-qubit logical channel are provided:
//!
//! * [`logical_channel`] simulates encode, i.i.d. noise, syndrome
//!   projection, correction and decoding on the full density matrix, then
//!   reconstructs χ by process tomography.
//! * [`logical_chi`] propagates the physical process matrix through the
//!   code's Pauli frame: every n-qubit Pauli error is mapped to its syndrome
//!   and to the logical Pauli left after correction, and the logical χ is a
//!   sum of products of physical χ entries. There is no subtraction of O(1)
//!   quantities, so entries of size 1e-20 keep full relative precision.
//!
//! Qubit 0 is the most significant bit of a basis index.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{apply_local, ChannelModel, ChiMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{c, r, ComplexMatrix, C64, ONE, ZERO};
use crate::pauli::{Pauli, PauliString};
use crate::state::DensityMatrix;

/// Trace weight outside the codespace tolerated after perfect EC.
pub const LEAKAGE_TOL: f64 = 1e-10;
/// Largest code accepted (the density matrix is 4^n complex entries).
pub const MAX_QUBITS: usize = 10;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeDef {
    #[serde(default = "custom_name")]
    name: String,
    stabilizer_generators: Vec<PauliString>,
    logical_x: PauliString,
    logical_z: PauliString,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decoder_table: Option<BTreeMap<String, PauliString>>,
}

fn custom_name() -> String {
    "custom".into()
}

/// A stabilizer code with its encoder and lookup decoder.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CodeDef", into = "CodeDef")]
pub struct CodeSpec {
    name: String,
    n: usize,
    stabilizer_generators: Vec<PauliString>,
    logical_x: PauliString,
    logical_z: PauliString,
    encoding_isometry: ComplexMatrix,
    decoder_table: BTreeMap<String, PauliString>,
    frame: OnceLock<Arc<PauliFrame>>,
}

impl TryFrom<CodeDef> for CodeSpec {
    type Error = Error;

    fn try_from(d: CodeDef) -> Result<Self> {
        CodeSpec::new(d.name, d.stabilizer_generators, d.logical_x, d.logical_z, d.decoder_table)
    }
}

impl From<CodeSpec> for CodeDef {
    fn from(c: CodeSpec) -> Self {
        CodeDef {
            name: c.name,
            stabilizer_generators: c.stabilizer_generators,
            logical_x: c.logical_x,
            logical_z: c.logical_z,
            decoder_table: Some(c.decoder_table),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidCode(msg.into())
}

impl CodeSpec {
    /// Builds and validates a code. Without a decoder table, a minimum-weight
    /// table is generated (ties broken by qubit order, then X < Y < Z).
    pub fn new(
        name: impl Into<String>,
        generators: Vec<PauliString>,
        logical_x: PauliString,
        logical_z: PauliString,
        decoder_table: Option<BTreeMap<String, PauliString>>,
    ) -> Result<Self> {
        let n = logical_x.n_qubits();
        if n == 0 || n > MAX_QUBITS {
            return Err(invalid(format!("code size {n} outside 1..={MAX_QUBITS}")));
        }
        if generators.len() + 1 != n {
            return Err(invalid(format!(
                "{} generators for {n} qubits; a one-logical-qubit code needs {}",
                generators.len(),
                n - 1
            )));
        }
        for g in generators.iter().chain([&logical_z]) {
            if g.n_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.n_qubits(),
                });
            }
        }
        for (i, a) in generators.iter().enumerate() {
            if a.phase_power() % 2 == 1 {
                return Err(invalid(format!("generator {a} is not Hermitian")));
            }
            for b in &generators[i + 1..] {
                if !a.commutes_with(b)? {
                    return Err(invalid(format!("generators {a} and {b} anticommute")));
                }
            }
            for l in [&logical_x, &logical_z] {
                if !a.commutes_with(l)? {
                    return Err(invalid(format!("logical {l} anticommutes with generator {a}")));
                }
            }
        }
        if logical_x.commutes_with(&logical_z)? {
            return Err(invalid("logical X and Z must anticommute"));
        }
        let encoding_isometry = build_isometry(n, &generators, &logical_x, &logical_z)?;
        let table = match decoder_table {
            Some(t) => t,
            None => min_weight_table(n, &generators)?,
        };
        let code = Self {
            name: name.into(),
            n,
            stabilizer_generators: generators,
            logical_x,
            logical_z,
            encoding_isometry,
            decoder_table: table,
            frame: OnceLock::new(),
        };
        code.check_decoder()?;
        Ok(code)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn stabilizer_generators(&self) -> &[PauliString] {
        &self.stabilizer_generators
    }

    pub fn logical_x(&self) -> &PauliString {
        &self.logical_x
    }

    pub fn logical_z(&self) -> &PauliString {
        &self.logical_z
    }

    /// 2^n x 2 matrix with columns |0_L>, |1_L>.
    pub fn encoding_isometry(&self) -> &ComplexMatrix {
        &self.encoding_isometry
    }

    pub fn decoder_table(&self) -> &BTreeMap<String, PauliString> {
        &self.decoder_table
    }

    /// Syndrome bitstring of a Pauli error; character i is 1 when the error
    /// anticommutes with generator i.
    pub fn syndrome(&self, e: &PauliString) -> Result<String> {
        self.stabilizer_generators
            .iter()
            .map(|g| Ok(if g.commutes_with(e)? { '0' } else { '1' }))
            .collect()
    }

    pub fn correction(&self, syndrome: &str) -> Result<&PauliString> {
        self.decoder_table
            .get(syndrome)
            .ok_or_else(|| invalid(format!("decoder table has no entry for syndrome {syndrome}")))
    }

    /// V^dagger P V as a one-qubit operator.
    fn logical_action(&self, p: &PauliString) -> Result<ComplexMatrix> {
        let v = &self.encoding_isometry;
        let cols: Vec<Vec<C64>> = (0..2)
            .map(|j| p.apply_to_vector(&column(v, j)))
            .collect::<Result<_>>()?;
        let mut out = ComplexMatrix::zeros(2, 2);
        for i in 0..2 {
            let vi = column(v, i);
            for (j, cj) in cols.iter().enumerate() {
                out[(i, j)] = vi.iter().zip(cj).map(|(a, b)| a.conj() * b).sum();
            }
        }
        Ok(out)
    }

    fn check_decoder(&self) -> Result<()> {
        let r = self.stabilizer_generators.len();
        for (s, corr) in &self.decoder_table {
            if s.len() != r || !s.chars().all(|ch| ch == '0' || ch == '1') {
                return Err(invalid(format!("bad syndrome key `{s}`")));
            }
            if corr.n_qubits() != self.n {
                return Err(invalid(format!("correction {corr} has the wrong length")));
            }
            if &self.syndrome(corr)? != s {
                return Err(invalid(format!("correction {corr} does not produce syndrome {s}")));
            }
        }
        if self.decoder_table.len() != 1 << r {
            return Err(invalid(format!(
                "decoder table covers {} of {} syndromes",
                self.decoder_table.len(),
                1usize << r
            )));
        }
        Ok(())
    }

    fn frame(&self) -> Result<Arc<PauliFrame>> {
        if let Some(f) = self.frame.get() {
            return Ok(f.clone());
        }
        let f = Arc::new(PauliFrame::build(self)?);
        Ok(self.frame.get_or_init(|| f).clone())
    }
}

fn column(m: &ComplexMatrix, j: usize) -> Vec<C64> {
    (0..m.rows()).map(|i| m[(i, j)]).collect()
}

fn build_isometry(
    n: usize,
    generators: &[PauliString],
    logical_x: &PauliString,
    logical_z: &PauliString,
) -> Result<ComplexMatrix> {
    let d = 1usize << n;
    // (I + P)/2 applied to a vector.
    let project = |p: &PauliString, v: Vec<C64>| -> Result<Vec<C64>> {
        let pv = p.apply_to_vector(&v)?;
        Ok(v.iter().zip(&pv).map(|(a, b)| (a + b) * 0.5).collect())
    };
    let mut zero = None;
    for b in 0..d {
        let mut v = vec![ZERO; d];
        v[b] = ONE;
        for g in generators.iter().chain([logical_z]) {
            v = project(g, v)?;
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let lead = v.iter().find(|a| a.norm() > 1e-12).copied().unwrap_or(ONE);
            let phase = lead.conj() / lead.norm();
            zero = Some(v.into_iter().map(|a| a * phase / norm).collect::<Vec<_>>());
            break;
        }
    }
    let zero = zero.ok_or_else(|| invalid("stabilizer group fixes no state"))?;
    let one = logical_x.apply_to_vector(&zero)?;
    let mut v = ComplexMatrix::zeros(d, 2);
    for i in 0..d {
        v[(i, 0)] = zero[i];
        v[(i, 1)] = one[i];
    }
    let gram = v.dagger().matmul(&v)?;
    if (&gram - &ComplexMatrix::identity(2)).max_abs() > 1e-12 {
        return Err(invalid("encoding isometry is not orthonormal"));
    }
    Ok(v)
}

fn pauli_from_digits(n: usize, idx: usize) -> PauliString {
    let letters = (0..n)
        .map(|q| Pauli::ALL[(idx >> (2 * (n - 1 - q))) & 3])
        .collect();
    PauliString::new(letters)
}

fn min_weight_table(n: usize, generators: &[PauliString]) -> Result<BTreeMap<String, PauliString>> {
    let r = generators.len();
    let target = 1usize << r;
    let mut by_weight: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for idx in 0..(1usize << (2 * n)) {
        let w = (0..n).filter(|q| (idx >> (2 * q)) & 3 != 0).count();
        by_weight[w].push(idx);
    }
    let mut table = BTreeMap::new();
    'outer: for group in by_weight {
        // Within a weight, order by the qubit positions used, then letters.
        let mut group: Vec<(Vec<usize>, usize)> = group
            .into_iter()
            .map(|idx| {
                let support = (0..n).filter(|&q| (idx >> (2 * (n - 1 - q))) & 3 != 0).collect();
                (support, idx)
            })
            .collect();
        group.sort();
        for (_, idx) in group {
            let p = pauli_from_digits(n, idx);
            let s: String = generators
                .iter()
                .map(|g| Ok(if g.commutes_with(&p)? { '0' } else { '1' }))
                .collect::<Result<_>>()?;
            table.entry(s).or_insert(p);
            if table.len() == target {
                break 'outer;
            }
        }
    }
    if table.len() != target {
        return Err(invalid("stabilizer generators are not independent"));
    }
    Ok(table)
}

/// Per-Pauli bookkeeping for [`logical_chi`]: for every n-qubit Pauli P, its
/// syndrome class and the logical Pauli L with V^dagger C_s P V = lambda L.
#[derive(Debug)]
struct PauliFrame {
    n: usize,
    /// (pauli index, logical index, lambda) grouped by syndrome.
    groups: Vec<Vec<(usize, usize, C64)>>,
}

impl PauliFrame {
    fn build(code: &CodeSpec) -> Result<Self> {
        let n = code.n;
        let r = code.stabilizer_generators.len();
        let logicals: Vec<ComplexMatrix> = Pauli::ALL.iter().map(|p| p.matrix()).collect();
        let entries: Vec<(usize, usize, usize, C64)> = (0..(1usize << (2 * n)))
            .into_par_iter()
            .map(|idx| {
                let p = pauli_from_digits(n, idx);
                let s = code.syndrome(&p)?;
                let key = usize::from_str_radix(&s, 2).unwrap_or(0);
                let fixed = code.correction(&s)?.multiply(&p)?;
                let action = code.logical_action(&fixed)?;
                for (l, m) in logicals.iter().enumerate() {
                    let lambda = m.hs_inner(&action) * 0.5;
                    if lambda.norm() > 0.5 {
                        if (&action - &m.scale(lambda)).max_abs() > 1e-9 {
                            break;
                        }
                        return Ok((key, idx, l, snap_phase(lambda)));
                    }
                }
                Err(invalid(format!("corrected error {fixed} does not act as a logical Pauli")))
            })
            .collect::<Result<_>>()?;
        let mut groups = vec![Vec::new(); 1 << r];
        for (key, idx, l, lambda) in entries {
            groups[key].push((idx, l, lambda));
        }
        Ok(Self { n, groups })
    }
}

fn snap_phase(z: C64) -> C64 {
    [ONE, r(-1.0), c(0.0, 1.0), c(0.0, -1.0)]
        .into_iter()
        .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
        .unwrap_or(z)
}

/// Logical χ of i.i.d. physical noise `chi` under one round of perfect EC,
/// by exact propagation through the Pauli frame.
pub fn logical_chi(code: &CodeSpec, chi: &ChiMatrix) -> Result<ChiMatrix> {
    let frame = code.frame()?;
    let n = frame.n;
    let e = chi.entries();
    let phys: Vec<[C64; 4]> = (0..4).map(|m| [e[(m, 0)], e[(m, 1)], e[(m, 2)], e[(m, 3)]]).collect();
    let digit = |idx: usize, q: usize| (idx >> (2 * q)) & 3;
    let partial: Vec<[[C64; 4]; 4]> = frame
        .groups
        .par_iter()
        .map(|group| {
            let mut acc = [[ZERO; 4]; 4];
            for &(p, lp, xp) in group {
                for &(q, lq, xq) in group {
                    let mut prod = xp * xq.conj();
                    for k in 0..n {
                        let f = phys[digit(p, k)][digit(q, k)];
                        if f == ZERO {
                            prod = ZERO;
                            break;
                        }
                        prod *= f;
                    }
                    acc[lp][lq] += prod;
                }
            }
            acc
        })
        .collect();
    let norm = 2.0 / (1u64 << n) as f64;
    let mut out = ComplexMatrix::zeros(4, 4);
    for acc in &partial {
        for a in 0..4 {
            for b in 0..4 {
                out[(a, b)] += acc[a][b] * norm;
            }
        }
    }
    ChiMatrix::new(out.hermitian_part())
}

/// V rho V^dagger.
pub fn encode(code: &CodeSpec, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: rho.n_qubits(),
        });
    }
    let v = &code.encoding_isometry;
    let out = v.matmul(rho.matrix())?.matmul(&v.dagger())?;
    Ok(DensityMatrix::from_parts_unchecked(code.n, out))
}

/// One round of perfect syndrome measurement and lookup correction:
/// sum over syndromes s of C_s P_s rho P_s C_s^dagger.
pub fn perfect_ec(code: &CodeSpec, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n_qubits() != code.n {
        return Err(Error::DimensionMismatch {
            expected: code.n,
            found: rho.n_qubits(),
        });
    }
    let out = perfect_ec_matrix(code, rho.matrix())?;
    Ok(DensityMatrix::from_parts_unchecked(code.n, out))
}

fn perfect_ec_matrix(code: &CodeSpec, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut branches = vec![(m.clone(), String::new())];
    for g in &code.stabilizer_generators {
        let next: Vec<Vec<(ComplexMatrix, String)>> = branches
            .into_par_iter()
            .map(|(b, s)| {
                let gb = g.left_multiply(&b)?;
                let bg = g.right_multiply(&b)?;
                let gbg = g.right_multiply(&gb)?;
                let mut plus = b.clone();
                let mut minus = b;
                for (t, sign) in [(&gb, 1.0), (&bg, 1.0), (&gbg, 1.0)] {
                    plus.add_scaled(t, r(sign));
                }
                minus.add_scaled(&gb, r(-1.0));
                minus.add_scaled(&bg, r(-1.0));
                minus.add_scaled(&gbg, ONE);
                Ok(vec![
                    (plus.scale_real(0.25), format!("{s}0")),
                    (minus.scale_real(0.25), format!("{s}1")),
                ])
            })
            .collect::<Result<_>>()?;
        branches = next.into_iter().flatten().collect();
    }
    let corrected: Vec<ComplexMatrix> = branches
        .into_par_iter()
        .map(|(b, s)| code.correction(&s)?.conjugate(&b))
        .collect::<Result<_>>()?;
    let d = m.rows();
    let mut out = ComplexMatrix::zeros(d, d);
    for b in &corrected {
        out.add_scaled(b, ONE);
    }
    Ok(out)
}

/// V^dagger rho V together with the trace weight outside the codespace.
pub fn decode(code: &CodeSpec, rho: &DensityMatrix) -> Result<(ComplexMatrix, f64)> {
    let v = &code.encoding_isometry;
    let logical = v.dagger().matmul(rho.matrix())?.matmul(v)?;
    let leakage = rho.trace() - logical.trace().re;
    Ok((logical, leakage))
}

#[derive(Clone, Debug, Serialize)]
pub struct LogicalChannelResult {
    pub chi: ChiMatrix,
    /// Largest trace weight outside the codespace over the tomography inputs.
    pub codespace_leakage: f64,
    pub strengths_used: Vec<f64>,
}

/// Density-matrix simulation plus tomography of the logical channel for
/// `noise` at `strength`.
pub fn logical_channel(code: &CodeSpec, noise: &ChannelModel, strength: f64) -> Result<LogicalChannelResult> {
    let model = if noise.tag.has_strength() {
        noise.at(strength)?
    } else {
        noise.clone()
    };
    let mut res = logical_channel_kraus(code, &model.kraus()?)?;
    res.strengths_used = vec![strength];
    Ok(res)
}

/// As [`logical_channel`] for an arbitrary single-qubit Kraus channel.
pub fn logical_channel_kraus(code: &CodeSpec, noise: &KrausChannel) -> Result<LogicalChannelResult> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let inputs: [[C64; 2]; 4] = [
        [ONE, ZERO],
        [ZERO, ONE],
        [r(h), r(h)],
        [r(h), c(0.0, h)],
    ];
    let outputs: Vec<(ComplexMatrix, f64)> = inputs
        .par_iter()
        .map(|psi| {
            let rho = DensityMatrix::from_parts_unchecked(1, ComplexMatrix::outer(psi, psi));
            let mut m = encode(code, &rho)?.into_matrix();
            for q in 0..code.n {
                m = apply_local(noise.operators(), &m, code.n, q);
            }
            let m = perfect_ec_matrix(code, &m)?;
            decode(code, &DensityMatrix::from_parts_unchecked(code.n, m))
        })
        .collect::<Result<_>>()?;
    let leakage = outputs.iter().map(|o| o.1.abs()).fold(0.0, f64::max);
    if leakage > LEAKAGE_TOL {
        return Err(Error::Leakage(leakage));
    }
    let e00 = &outputs[0].0;
    let e11 = &outputs[1].0;
    // |+><+| and |+i><+i| give E(|1><0|) = E(+) - i E(+i) - (1-i)/2 (E(0) + E(1)).
    let mut e10 = outputs[2].0.clone();
    e10.add_scaled(&outputs[3].0, c(0.0, -1.0));
    e10.add_scaled(e00, c(-0.5, 0.5));
    e10.add_scaled(e11, c(-0.5, 0.5));
    let e01 = e10.dagger();
    let blocks = [[e00, &e01], [&e10, e11]];
    let mut choi = ComplexMatrix::zeros(4, 4);
    for (i, row) in blocks.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            for a in 0..2 {
                for bb in 0..2 {
                    choi[(2 * i + a, 2 * j + bb)] = b[(a, bb)];
                }
            }
        }
    }
    Ok(LogicalChannelResult {
        chi: ChiMatrix::from_choi(&choi.hermitian_part())?,
        codespace_leakage: leakage,
        strengths_used: Vec::new(),
    })
}

/// Codes known by name: `bitflip3` and `steane7`.
pub fn build_code(name: &str) -> Result<CodeSpec> {
    let ps = |s: &str| s.parse::<PauliString>();
    match name.to_ascii_lowercase().as_str() {
        "bitflip3" | "bitflip" => CodeSpec::new("bitflip3", vec![ps("ZZI")?, ps("IZZ")?], ps("XXX")?, ps("ZZZ")?, None),
        "steane7" | "steane" => {
            let rows = ["IIIXXXX", "IXXIIXX", "XIXIXIX"];
            let mut gens: Vec<PauliString> = rows.iter().map(|s| ps(s)).collect::<Result<_>>()?;
            gens.extend(rows.iter().map(|s| ps(&s.replace('X', "Z"))).collect::<Result<Vec<_>>>()?);
            CodeSpec::new("steane7", gens, ps("XXXXXXX")?, ps("ZZZZZZZ")?, None)
        }
        _ => Err(Error::UnknownCode(name.to_string())),
    }
}

/// Noise for the three-qubit bit-flip closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BitflipNoise {
    Flip(f64),
    Rx(f64),
    TwirledRx(f64),
}

/// Logical χ of the three-qubit bit-flip code under perfect EC, evaluated
/// from closed forms. With p the physical flip probability, the diagonal is
/// 2(1-p)^3 + 6(1-p)^2 p and 2p^3 + 6(1-p)p^2; for R_X(θ) (p = sin²(θ/2))
/// the I-X coherence is 4i[p(1-p)]^{3/2}.
pub fn bitflip_closed_form(noise: BitflipNoise) -> Result<ChiMatrix> {
    let (p, coherent) = match noise {
        BitflipNoise::Flip(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("flip probability {p} outside [0, 1]")));
            }
            (p, None)
        }
        BitflipNoise::Rx(t) | BitflipNoise::TwirledRx(t) => {
            if !(0.0..std::f64::consts::PI).contains(&t) {
                return Err(Error::InvalidParameter(format!("angle {t} outside [0, pi)")));
            }
            let s = (t / 2.0).sin();
            let cc = (t / 2.0).cos();
            let off = matches!(noise, BitflipNoise::Rx(_)).then(|| 4.0 * (s * cc).powi(3));
            (s * s, off)
        }
    };
    let q = 1.0 - p;
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = r(2.0 * q.powi(3) + 6.0 * q * q * p);
    m[(1, 1)] = r(2.0 * p.powi(3) + 6.0 * q * p * p);
    if let Some(off) = coherent {
        m[(0, 1)] = c(0.0, off);
        m[(1, 0)] = c(0.0, -off);
    }
    ChiMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::PureState;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() < tol
    }

    #[test]
    fn known_codes_are_valid() {
        let b = build_code("bitflip3").unwrap();
        assert_eq!(b.stabilizer_generators(), &[ps("ZZI"), ps("IZZ")]);
        let s = build_code("steane7").unwrap();
        assert_eq!(s.stabilizer_generators().len(), 6);
        assert_eq!(s.decoder_table().len(), 64);
        let v = s.encoding_isometry();
        assert!(close(&v.dagger().matmul(v).unwrap(), &ComplexMatrix::identity(2), 1e-12));
        assert!(matches!(build_code("shor9"), Err(Error::UnknownCode(_))));
    }

    #[test]
    fn steane_corrects_every_single_qubit_error() {
        let code = build_code("steane7").unwrap();
        for q in 0..7 {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let e = PauliString::single(7, q, p).unwrap();
                let fixed = code.correction(&code.syndrome(&e).unwrap()).unwrap().multiply(&e).unwrap();
                let l = code.logical_action(&fixed).unwrap();
                assert!(close(&l, &ComplexMatrix::identity(2).scale(l[(0, 0)]), 1e-12), "{e}");
                assert!((l[(0, 0)].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_codes_are_rejected() {
        // Anticommuting generators.
        assert!(CodeSpec::new("bad", vec![ps("ZZI"), ps("XII")], ps("XXX"), ps("ZZZ"), None).is_err());
        // Commuting logicals.
        assert!(CodeSpec::new("bad", vec![ps("ZZI"), ps("IZZ")], ps("ZZZ"), ps("ZII"), None).is_err());
        // Table entry with the wrong syndrome.
        let mut t = build_code("bitflip3").unwrap().decoder_table().clone();
        t.insert("10".into(), ps("IIX"));
        assert!(CodeSpec::new("bad", vec![ps("ZZI"), ps("IZZ")], ps("XXX"), ps("ZZZ"), Some(t)).is_err());
    }

    #[test]
    fn code_json_round_trip() {
        let code = build_code("steane7").unwrap();
        let js = serde_json::to_string(&code).unwrap();
        let back: CodeSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back.decoder_table(), code.decoder_table());
        assert!(close(back.encoding_isometry(), code.encoding_isometry(), 1e-15));
        let custom = r#"{"stabilizer_generators":["ZZI","IZZ"],"logical_x":"XXX","logical_z":"ZZZ"}"#;
        let c: CodeSpec = serde_json::from_str(custom).unwrap();
        assert_eq!(c.name(), "custom");
        assert!(serde_json::from_str::<CodeSpec>(r#"{"stabilizer_generators":["ZZI","XII"],"logical_x":"XXX","logical_z":"ZZZ"}"#).is_err());
    }

    #[test]
    fn encoding_examples() {
        let code = build_code("bitflip3").unwrap();
        let zero = encode(&code, &PureState::basis(1, 0).unwrap().density()).unwrap();
        assert!((zero.matrix()[(0, 0)] - ONE).norm() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(1, vec![r(h), r(h)]).unwrap().density();
        let enc = encode(&code, &plus).unwrap();
        for (a, b) in [(0, 0), (0, 7), (7, 0), (7, 7)] {
            assert!((enc.matrix()[(a, b)] - r(0.5)).norm() < 1e-15);
        }
        let steane = build_code("steane7").unwrap();
        let rho = PureState::new(1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap().density();
        let enc = encode(&steane, &rho).unwrap();
        for g in steane.stabilizer_generators() {
            assert!((g.expectation(enc.matrix()).unwrap() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn perfect_ec_examples() {
        let steane = build_code("steane7").unwrap();
        let zero = encode(&steane, &PureState::basis(1, 0).unwrap().density()).unwrap();
        for q in 0..7 {
            let x = PauliString::single(7, q, Pauli::X).unwrap();
            let hit = DensityMatrix::from_parts_unchecked(7, x.conjugate(zero.matrix()).unwrap());
            let fixed = perfect_ec(&steane, &hit).unwrap();
            assert!(close(fixed.matrix(), zero.matrix(), 1e-12));
        }
        assert!(close(perfect_ec(&steane, &zero).unwrap().matrix(), zero.matrix(), 1e-12));

        let b = build_code("bitflip3").unwrap();
        let zero = encode(&b, &PureState::basis(1, 0).unwrap().density()).unwrap();
        let two = ps("IXX").conjugate(zero.matrix()).unwrap();
        let out = perfect_ec(&b, &DensityMatrix::from_parts_unchecked(3, two)).unwrap();
        assert!((out.matrix()[(7, 7)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn simulated_bitflip_matches_closed_forms() {
        let code = build_code("bitflip3").unwrap();
        for p in [0.001, 0.01, 0.1] {
            let sim = logical_channel(&code, &ChannelModel::bit_flip(p), p).unwrap();
            let exact = bitflip_closed_form(BitflipNoise::Flip(p)).unwrap();
            assert!(close(sim.chi.entries(), exact.entries(), 1e-12));
            assert!(sim.codespace_leakage < 1e-12);
            let theta = 2.0 * p.sqrt().asin();
            let sim = logical_channel(&code, &ChannelModel::rx(theta), theta).unwrap();
            let exact = bitflip_closed_form(BitflipNoise::Rx(theta)).unwrap();
            assert!(close(sim.chi.entries(), exact.entries(), 1e-12), "{}\n{}", sim.chi, exact);
        }
    }

    #[test]
    fn closed_form_limits() {
        let id = bitflip_closed_form(BitflipNoise::Flip(0.0)).unwrap();
        assert!(close(id.entries(), ChiMatrix::identity().entries(), 1e-15));
        let t = 1e-2;
        let rx = bitflip_closed_form(BitflipNoise::Rx(t)).unwrap();
        assert!((rx.get(1, 1).re / t.powi(4) - 3.0 / 8.0).abs() < 1e-3);
        assert!((rx.get(0, 1).im / t.powi(3) - 0.5).abs() < 1e-3);
        let tw = bitflip_closed_form(BitflipNoise::TwirledRx(t)).unwrap();
        assert_eq!(tw.diagonal(), rx.diagonal());
        assert!(tw.is_diagonal(0.0));
    }

    #[test]
    fn frame_route_matches_simulation() {
        for name in ["bitflip3", "steane7"] {
            let code = build_code(name).unwrap();
            for model in [ChannelModel::adc(0.05), ChannelModel::rz(0.3), ChannelModel::rh(0.2), ChannelModel::pol_pi8(0.04)] {
                let sim = logical_channel(&code, &model, model.strength).unwrap();
                let alg = logical_chi(&code, &model.chi().unwrap()).unwrap();
                assert!(close(sim.chi.entries(), alg.entries(), 1e-11), "{name} {model:?}\n{}\n{}", sim.chi, alg);
            }
        }
    }

    #[test]
    fn identity_noise_is_identity() {
        for name in ["bitflip3", "steane7"] {
            let code = build_code(name).unwrap();
            let chi = logical_chi(&code, &ChiMatrix::identity()).unwrap();
            assert!(close(chi.entries(), ChiMatrix::identity().entries(), 1e-14));
        }
    }
}
