//! Error-magnitude measures of a single-qubit channel relative to the
//! identity: average error rate, average trace distance, diamond distance.
//!
//! Everything is computed from the deviation D = χ - χ_identity, whose
//! identity entry is taken as minus the sum of the other diagonal entries.
//! That keeps small errors free of the cancellation in 2 - χ_II.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{ChiMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{r, ComplexMatrix, C64, ZERO};
use crate::pauli::{pauli_basis, Pauli};
use crate::sdp::{Block, SdpOptions, SdpProblem};
use crate::state::{fibonacci_sphere, BlochVector, PureState};

/// Number of Bloch-sphere states used for sampled averages.
pub const DEFAULT_STATES: usize = 150;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ErrorRate,
    TraceDistance,
    Diamond,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::ErrorRate, Metric::TraceDistance, Metric::Diamond];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ErrorRate => "error_rate",
            Metric::TraceDistance => "trace_distance",
            Metric::Diamond => "diamond",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "error_rate" | "r" | "infidelity" => Ok(Metric::ErrorRate),
            "trace_distance" | "trd" => Ok(Metric::TraceDistance),
            "diamond" => Ok(Metric::Diamond),
            _ => Err(Error::Parse(format!("unknown metric `{s}`"))),
        }
    }
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub avg_error_rate: MeanStd,
    pub avg_trace_distance: MeanStd,
    pub diamond: f64,
    pub diamond_gap: f64,
    pub n_states_used: usize,
    /// How the trace-distance mean was obtained. The error-rate mean and
    /// standard deviation are always exact.
    pub method: Method,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiamondResult {
    /// 1/2 ||E - Id||_⋄
    pub value: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// χ - χ_identity with the identity entry rebuilt from the error diagonal.
pub fn chi_deviation(chi: &ChiMatrix) -> ComplexMatrix {
    let mut d = chi.entries().clone();
    let err: f64 = (1..4).map(|i| chi.get(i, i).re).sum();
    d[(0, 0)] = r(-err);
    d
}

/// Affine Bloch-vector map v -> v + A v + t of the deviation, returned as (A, t).
pub fn bloch_deviation(chi: &ChiMatrix) -> ([[f64; 3]; 3], [f64; 3]) {
    let ptm = transfer_of(&chi_deviation(chi));
    let mut a = [[0.0; 3]; 3];
    let mut t = [0.0; 3];
    for i in 0..3 {
        t[i] = ptm[i + 1][0];
        for j in 0..3 {
            a[i][j] = ptm[i + 1][j + 1];
        }
    }
    (a, t)
}

/// Pauli transfer matrix of the linear map M -> sum_mn e_mn B_m M B_n^dagger.
fn transfer_of(e: &ComplexMatrix) -> [[f64; 4]; 4] {
    let basis: Vec<ComplexMatrix> = (0..4).map(|i| pauli_basis(i).expect("index below 4")).collect();
    let paulis = Pauli::ALL.map(Pauli::matrix);
    let mut out = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut img = ComplexMatrix::zeros(2, 2);
        for m in 0..4 {
            let left = &basis[m] * &paulis[j];
            for n in 0..4 {
                let w = e[(m, n)];
                if w != ZERO {
                    img.add_scaled(&(&left * &basis[n].dagger()), w);
                }
            }
        }
        for i in 0..4 {
            out[i][j] = 0.5 * paulis[i].hs_inner(&img).re;
        }
    }
    out
}

fn require_single_qubit(psi: &PureState) -> Result<BlochVector> {
    if psi.n_qubits() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: psi.n_qubits(),
        });
    }
    psi.bloch()
}

/// 1 - <v|E(|v><v|)|v> for a Bloch vector on the unit sphere.
pub fn error_rate_bloch(chi: &ChiMatrix, v: &BlochVector) -> f64 {
    let d = chi_deviation(chi);
    let w = [1.0, v.x, v.y, v.z];
    let mut acc = 0.0;
    for m in 0..4 {
        for n in 0..4 {
            acc += w[m] * w[n] * d[(m, n)].re;
        }
    }
    -0.5 * acc
}

/// 1/2 ||E(rho) - rho||_1, half the Euclidean Bloch displacement.
pub fn trace_distance_bloch(chi: &ChiMatrix, v: &BlochVector) -> f64 {
    let (a, t) = bloch_deviation(chi);
    displacement(&a, &t, v)
}

fn displacement(a: &[[f64; 3]; 3], t: &[f64; 3], v: &BlochVector) -> f64 {
    let v = v.as_array();
    let mut sq = 0.0;
    for i in 0..3 {
        let di = t[i] + (0..3).map(|j| a[i][j] * v[j]).sum::<f64>();
        sq += di * di;
    }
    0.5 * sq.sqrt()
}

pub fn error_rate_state(k: &KrausChannel, psi: &PureState) -> Result<f64> {
    let v = require_single_qubit(psi)?;
    Ok(error_rate_bloch(&k.chi(), &v))
}

pub fn trace_distance_state(k: &KrausChannel, psi: &PureState) -> Result<f64> {
    let v = require_single_qubit(psi)?;
    Ok(trace_distance_bloch(&k.chi(), &v))
}

/// Exact mean and standard deviation of the error rate over the uniform
/// distribution of pure states.
pub fn avg_error_rate_chi(chi: &ChiMatrix) -> MeanStd {
    let d = chi_deviation(chi);
    let mean = -d[(0, 0)].re / 3.0;
    let (a, t) = bloch_deviation(chi);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 0.5 * (a[i][j] + a[j][i]);
        }
    }
    let tr: f64 = (0..3).map(|i| s[i][i]).sum();
    let mut dev_sq = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let traceless = s[i][j] - if i == j { tr / 3.0 } else { 0.0 };
            dev_sq += traceless * traceless;
        }
    }
    let t2: f64 = t.iter().map(|x| x * x).sum();
    // r = -(v·Sv + v·t)/2 over the unit sphere: Var(v·Sv) is 2/15 of the
    // squared Frobenius norm of the traceless part of S, Var(v·t) = |t|^2/3,
    // and the cross term vanishes by symmetry.
    let var = (2.0 * dev_sq / 15.0 + t2 / 3.0) / 4.0;
    MeanStd {
        mean,
        std: var.max(0.0).sqrt(),
    }
}

pub fn avg_error_rate(k: &KrausChannel) -> MeanStd {
    avg_error_rate_chi(&k.chi())
}

/// Error rates at the given states.
pub fn error_rates(chi: &ChiMatrix, states: &[BlochVector]) -> Vec<f64> {
    states.iter().map(|v| error_rate_bloch(chi, v)).collect()
}

/// Trace distances at the given states.
pub fn trace_distances(chi: &ChiMatrix, states: &[BlochVector]) -> Vec<f64> {
    let (a, t) = bloch_deviation(chi);
    states.iter().map(|v| displacement(&a, &t, v)).collect()
}

pub fn avg_trace_distance_chi(chi: &ChiMatrix, states: &[BlochVector]) -> Result<MeanStd> {
    if states.is_empty() {
        return Err(Error::InvalidParameter("state sample is empty".into()));
    }
    Ok(MeanStd::of(&trace_distances(chi, states)))
}

pub fn avg_trace_distance(k: &KrausChannel, states: &[BlochVector]) -> Result<MeanStd> {
    avg_trace_distance_chi(&k.chi(), states)
}

pub fn diamond_distance(k: &KrausChannel) -> Result<DiamondResult> {
    diamond_distance_chi(&k.chi())
}

/// 1/2 ||E - Id||_⋄ by the semidefinite program
/// min λ_max(Tr_out Z) subject to Z ⪰ 0, Z ⪰ J, where J is the Choi matrix of
/// E - Id. Complex Hermitian blocks are embedded as real symmetric ones.
pub fn diamond_distance_chi(chi: &ChiMatrix) -> Result<DiamondResult> {
    let j = choi_of_deviation(&chi_deviation(chi));
    let scale = j.max_abs();
    if scale == 0.0 {
        return Ok(DiamondResult {
            value: 0.0,
            primal: 0.0,
            dual: 0.0,
            gap: 0.0,
            iterations: 0,
        });
    }
    let jn = j.scale_real(1.0 / scale);
    let sol = diamond_problem(&jn)?.solve(&SdpOptions {
        gap_tol: 1e-11,
        feas_tol: 1e-11,
        max_iterations: 150,
        acceptable_gap: 1e-8,
    })?;
    let primal = sol.primal_objective * scale;
    let dual = sol.dual_objective * scale;
    Ok(DiamondResult {
        value: 0.5 * (primal + dual),
        primal,
        dual,
        gap: (primal - dual).abs(),
        iterations: sol.iterations,
    })
}

/// Choi matrix sum_mn e_mn v_m v_n^dagger of the linear map with χ-coefficients e.
fn choi_of_deviation(e: &ComplexMatrix) -> ComplexMatrix {
    let basis: Vec<ComplexMatrix> = (0..4).map(|i| pauli_basis(i).expect("index below 4")).collect();
    let v: Vec<Vec<C64>> = basis
        .iter()
        .map(|b| {
            let mut v = vec![ZERO; 4];
            for i in 0..2 {
                for k in 0..2 {
                    v[2 * i + k] = b[(k, i)];
                }
            }
            v
        })
        .collect();
    let mut j = ComplexMatrix::zeros(4, 4);
    for m in 0..4 {
        for n in 0..4 {
            if e[(m, n)] != ZERO {
                j.add_scaled(&ComplexMatrix::outer(&v[m], &v[n]), e[(m, n)]);
            }
        }
    }
    j.hermitian_part()
}

/// Real symmetric embedding [[Re H, -Im H], [Im H, Re H]].
fn embed(h: &ComplexMatrix) -> Block {
    let n = h.rows();
    let mut out = Block::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let z = h[(a, b)];
            out[(a, b)] = z.re;
            out[(a + n, b + n)] = z.re;
            out[(a, b + n)] = -z.im;
            out[(a + n, b)] = z.im;
        }
    }
    out
}

/// Orthonormal basis of n x n Hermitian matrices under Re Tr(A B).
fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        let mut m = ComplexMatrix::zeros(n, n);
        m[(a, a)] = r(1.0);
        out.push(m);
        for b in a + 1..n {
            let mut re = ComplexMatrix::zeros(n, n);
            re[(a, b)] = r(s);
            re[(b, a)] = r(s);
            out.push(re);
            let mut im = ComplexMatrix::zeros(n, n);
            im[(a, b)] = C64::new(0.0, -s);
            im[(b, a)] = C64::new(0.0, s);
            out.push(im);
        }
    }
    out
}

/// Blocks: 0 = Z, 1 = Z - J, 2 = t I - Tr_out Z, 3 = t.
fn diamond_problem(j: &ComplexMatrix) -> Result<SdpProblem> {
    let mut p = SdpProblem::new(vec![8, 8, 4, 1]);
    p.set_objective_block(3, Block::identity(1, 1))?;
    for h in hermitian_basis(4) {
        let e = embed(&h) * 0.5;
        let rhs = -h.hs_inner(j).re;
        p.add_constraint(vec![(0, -&e), (1, e)], rhs)?;
    }
    let id2 = ComplexMatrix::identity(2);
    for g in hermitian_basis(2) {
        let lifted = embed(&g.kron(&id2)) * 0.5;
        let tr = g.trace().re;
        p.add_constraint(
            vec![
                (0, lifted),
                (2, embed(&g) * 0.5),
                (3, Block::from_element(1, 1, -tr)),
            ],
            0.0,
        )?;
    }
    Ok(p)
}

/// All three metrics; the trace-distance average uses `n_states` Fibonacci
/// lattice points.
pub fn metric_report(k: &KrausChannel, n_states: usize) -> Result<MetricReport> {
    metric_report_chi(&k.chi(), n_states)
}

pub fn metric_report_chi(chi: &ChiMatrix, n_states: usize) -> Result<MetricReport> {
    let states = fibonacci_sphere(n_states);
    let trd = avg_trace_distance_chi(chi, &states)?;
    let diamond = diamond_distance_chi(chi)?;
    let method = if trd.std <= 1e-12 * trd.mean.max(f64::MIN_POSITIVE) {
        Method::Analytic
    } else {
        Method::Sampled
    };
    Ok(MetricReport {
        avg_error_rate: avg_error_rate_chi(chi),
        avg_trace_distance: trd,
        diamond: diamond.value,
        diamond_gap: diamond.gap,
        n_states_used: n_states,
        method,
    })
}

/// Value of one metric (its mean for the averaged ones).
pub fn metric_value(chi: &ChiMatrix, metric: Metric, n_states: usize) -> Result<f64> {
    match metric {
        Metric::ErrorRate => Ok(avg_error_rate_chi(chi).mean),
        Metric::TraceDistance => Ok(avg_trace_distance_chi(chi, &fibonacci_sphere(n_states))?.mean),
        Metric::Diamond => Ok(diamond_distance_chi(chi)?.value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{twirl, ChannelModel};
    use crate::linalg::c;

    fn plus() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(1, vec![r(s), r(s)]).unwrap()
    }

    #[test]
    fn per_state_examples() {
        let id = KrausChannel::identity();
        assert_eq!(error_rate_state(&id, &plus()).unwrap(), 0.0);
        assert_eq!(trace_distance_state(&id, &plus()).unwrap(), 0.0);
        let zero = PureState::basis(1, 0).unwrap();
        let flip = ChannelModel::bit_flip(1.0).kraus().unwrap();
        assert!((error_rate_state(&flip, &zero).unwrap() - 1.0).abs() < 1e-15);
        let p = 0.2;
        let flip = ChannelModel::bit_flip(p).kraus().unwrap();
        assert!((trace_distance_state(&flip, &zero).unwrap() - p).abs() < 1e-15);
        let theta: f64 = 0.3;
        let rz = ChannelModel::rz(theta).kraus().unwrap();
        let direct = {
            let out = rz.apply_operator(plus().density().matrix()).unwrap();
            1.0 - plus().density().matrix().hs_inner(&out).re
        };
        assert!((error_rate_state(&rz, &plus()).unwrap() - direct).abs() < 1e-15);
        assert!((direct - (theta / 2.0).sin().powi(2)).abs() < 1e-15);
        assert!((trace_distance_state(&rz, &plus()).unwrap() - (theta / 2.0).sin()).abs() < 1e-15);
        assert!(error_rate_state(&rz, &PureState::basis(2, 0).unwrap()).is_err());
    }

    #[test]
    fn averages_for_depolarizing() {
        let g = 0.01;
        let dc = ChannelModel::dc(g).kraus().unwrap();
        let r = avg_error_rate(&dc);
        // Kraus weights p/3 on each Pauli give χ entries 2p/3.
        assert!((r.mean - 2.0 * g / 3.0).abs() < 1e-15);
        assert!(r.std < 1e-16);
        let t = avg_trace_distance(&dc, &fibonacci_sphere(150)).unwrap();
        assert!((t.mean - 2.0 * g / 3.0).abs() < 1e-15);
        let id = avg_error_rate(&KrausChannel::identity());
        assert_eq!((id.mean, id.std), (0.0, 0.0));
    }

    #[test]
    fn analytic_std_matches_dense_sampling() {
        for m in [ChannelModel::rz(0.2), ChannelModel::adc(0.1), ChannelModel::pol_pi8(0.05)] {
            let chi = m.chi().unwrap();
            let exact = avg_error_rate_chi(&chi);
            let sampled = MeanStd::of(&error_rates(&chi, &fibonacci_sphere(20000)));
            assert!((exact.mean - sampled.mean).abs() < 1e-6 * exact.mean.max(1e-3));
            assert!((exact.std - sampled.std).abs() < 1e-3 * exact.std);
        }
    }

    #[test]
    fn twirl_keeps_error_rate() {
        for m in [ChannelModel::rh(0.3), ChannelModel::adc(0.2)] {
            let chi = m.chi().unwrap();
            let a = avg_error_rate_chi(&chi).mean;
            let b = avg_error_rate_chi(&twirl(&chi)).mean;
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn diamond_closed_forms() {
        let p = [0.01, 0.02, 0.03];
        let d = diamond_distance_chi(&ChiMatrix::pauli(p).unwrap()).unwrap();
        assert!((d.value - 0.06).abs() < 1e-10, "{d:?}");
        assert!(d.gap < 1e-10);
        for theta in [1e-3, 0.1, 1.0] {
            let d = diamond_distance(&ChannelModel::rz(theta).kraus().unwrap()).unwrap();
            assert!((d.value - (theta / 2.0).sin()).abs() < 1e-9, "{theta}: {d:?}");
            let d = diamond_distance(&ChannelModel::rh(theta).kraus().unwrap()).unwrap();
            assert!((d.value - (theta / 2.0).sin()).abs() < 1e-9, "{theta}: {d:?}");
        }
        let d = diamond_distance(&ChannelModel::dc(0.001).kraus().unwrap()).unwrap();
        assert!((d.value - 0.001).abs() < 1e-12);
        let d = diamond_distance(&KrausChannel::identity()).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let basis = hermitian_basis(3);
        assert_eq!(basis.len(), 9);
        for (i, a) in basis.iter().enumerate() {
            assert!(a.is_hermitian(0.0));
            for (j, b) in basis.iter().enumerate() {
                let ip = (a * b).trace().re;
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let h = ComplexMatrix::from_rows(&[&[r(1.0), c(0.5, -0.25)], &[c(0.5, 0.25), r(-2.0)]]);
        let e = embed(&h);
        assert!((e.clone() - e.transpose()).norm() < 1e-15);
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("diamond".parse::<Metric>().unwrap(), Metric::Diamond);
        assert_eq!("trace-distance".parse::<Metric>().unwrap(), Metric::TraceDistance);
        assert!("fidelity2".parse::<Metric>().is_err());
    }
}
