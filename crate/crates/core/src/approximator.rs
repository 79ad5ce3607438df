//! Stabilizer-simulable approximations of a target channel.
//!
//! Weights over an [`ElementaryChannelSet`] are chosen to minimize the
//! Hilbert-Schmidt distance between process matrices. The honest variants
//! additionally require that, state by state, the approximation moves a pure
//! input at least as far (in trace distance) as the target does.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channels::{ChiMatrix, ElementaryChannelSet, KrausChannel};
use crate::error::{Error, Result};
use crate::metrics::bloch_deviation;
use crate::qp::{QpOptions, QpProblem};
use crate::state::{fibonacci_sphere, BlochVector};

/// Margin below which an approximation is no longer called honest.
pub const HONESTY_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "PCa")]
    PCa,
    #[serde(rename = "PCw")]
    PCw,
    #[serde(rename = "CMCa")]
    CMCa,
    #[serde(rename = "CMCw")]
    CMCw,
    #[serde(rename = "DC")]
    DC,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::PCa, Variant::PCw, Variant::CMCa, Variant::CMCw, Variant::DC];

    pub fn name(self) -> &'static str {
        match self {
            Variant::PCa => "PCa",
            Variant::PCw => "PCw",
            Variant::CMCa => "CMCa",
            Variant::CMCw => "CMCw",
            Variant::DC => "DC",
        }
    }

    pub fn is_constrained(self) -> bool {
        matches!(self, Variant::PCw | Variant::CMCw)
    }

    pub fn set(self) -> ElementaryChannelSet {
        match self {
            Variant::CMCa | Variant::CMCw => ElementaryChannelSet::full(),
            _ => ElementaryChannelSet::paulis(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown approximation `{s}`")))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// States at which the honesty constraint is imposed initially.
    pub training_states: usize,
    /// States on which honesty is verified after fitting.
    pub verification_states: usize,
    /// Worst violators moved into the training set per refinement round.
    pub refinement_batch: usize,
    pub max_refinements: usize,
    pub max_linearizations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            training_states: 150,
            verification_states: 10_000,
            refinement_batch: 20,
            max_refinements: 10,
            max_linearizations: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationResult {
    pub variant: Variant,
    pub member_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub chi: ChiMatrix,
    pub hs_distance: f64,
    pub honest: bool,
    /// Minimum over the verification grid of D_tr(model) - D_tr(target).
    pub honesty_margin: f64,
}

#[derive(Serialize)]
struct WeightEntry<'a> {
    member_id: &'a str,
    weight: f64,
}

#[derive(Serialize)]
struct ResultView<'a> {
    variant: Variant,
    weights: Vec<WeightEntry<'a>>,
    hs_distance: f64,
    honest: bool,
    honesty_margin: f64,
}

impl Serialize for ApproximationResult {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ResultView {
            variant: self.variant,
            weights: self
                .member_ids
                .iter()
                .zip(&self.weights)
                .map(|(id, &weight)| WeightEntry {
                    member_id: id,
                    weight,
                })
                .collect(),
            hs_distance: self.hs_distance,
            honest: self.honest,
            honesty_margin: self.honesty_margin,
        }
        .serialize(ser)
    }
}

impl ApproximationResult {
    /// The fitted channel as a Kraus mixture of the set members.
    pub fn kraus(&self) -> Result<KrausChannel> {
        self.variant
            .set()
            .mix_kraus(&self.weights, &format!("{} approximation", self.variant))
    }
}

/// Fits `variant` to the target with default options.
pub fn approximate(target: &ChiMatrix, variant: Variant) -> Result<ApproximationResult> {
    approximate_with(target, variant, &FitOptions::default())
}

pub fn approximate_with(target: &ChiMatrix, variant: Variant, opts: &FitOptions) -> Result<ApproximationResult> {
    let mut res = match variant {
        Variant::DC => depolarizing_fit_with(target, opts)?,
        _ => fit_with(target, &variant.set(), variant.is_constrained(), opts)?,
    };
    res.variant = variant;
    Ok(res)
}

pub fn fit(target: &ChiMatrix, set: &ElementaryChannelSet, constrained: bool) -> Result<ApproximationResult> {
    fit_with(target, set, constrained, &FitOptions::default())
}

/// Per-state Bloch displacement data of one channel: v -> A v + t.
#[derive(Clone, Copy)]
struct Displacement {
    a: [[f64; 3]; 3],
    t: [f64; 3],
}

impl Displacement {
    fn of(chi: &ChiMatrix) -> Self {
        let (a, t) = bloch_deviation(chi);
        Self { a, t }
    }

    fn at(&self, v: &BlochVector) -> [f64; 3] {
        let v = v.as_array();
        let mut out = self.t;
        for (i, o) in out.iter_mut().enumerate() {
            *o += (0..3).map(|j| self.a[i][j] * v[j]).sum::<f64>();
        }
        out
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

struct Fitter<'a> {
    set: &'a ElementaryChannelSet,
    members: Vec<Displacement>,
    target: Displacement,
    q: DMatrix<f64>,
    c: DVector<f64>,
    target_chi: ChiMatrix,
    identity_index: usize,
    anchor: Vec<f64>,
}

impl<'a> Fitter<'a> {
    fn new(target: &ChiMatrix, set: &'a ElementaryChannelSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::DegenerateSet("channel set is empty".into()));
        }
        let chis = set.chis();
        let n = chis.len();
        let mut q = DMatrix::zeros(n, n);
        let mut c = DVector::zeros(n);
        for i in 0..n {
            for j in 0..n {
                q[(i, j)] = 2.0 * chis[i].entries().hs_inner(chis[j].entries()).re;
            }
            c[i] = -2.0 * chis[i].entries().hs_inner(target.entries()).re;
        }
        // Linearly dependent members make the optimum non-unique. No ridge
        // term is added: the interior-point iterates converge to the analytic
        // center of the optimal face, which is a deterministic tie-break and
        // leaves the distance itself exact.
        let ids: Vec<&str> = set.members().iter().map(|m| m.id.as_str()).collect();
        let identity_index = ids
            .iter()
            .position(|&id| id == "I")
            .ok_or_else(|| Error::DegenerateSet("set has no identity member".into()))?;
        let mut anchor = vec![0.0; n];
        for p in ["X", "Y", "Z"] {
            let k = ids
                .iter()
                .position(|&id| id == p)
                .ok_or_else(|| Error::DegenerateSet(format!("set has no {p} member")))?;
            anchor[k] = 1.0 / 3.0;
        }
        Ok(Self {
            set,
            members: chis.iter().map(|c| Displacement::of(c)).collect(),
            target: Displacement::of(target),
            q,
            c,
            target_chi: target.clone(),
            identity_index,
            anchor,
        })
    }

    fn displacement(&self, w: &[f64], v: &BlochVector) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (wj, m) in w.iter().zip(&self.members) {
            if *wj == 0.0 {
                continue;
            }
            let d = m.at(v);
            for i in 0..3 {
                out[i] += wj * d[i];
            }
        }
        out
    }

    /// Per-state D_tr(model) - D_tr(target).
    fn margins(&self, w: &[f64], states: &[BlochVector]) -> Vec<f64> {
        states
            .iter()
            .map(|v| 0.5 * (norm3(&self.displacement(w, v)) - norm3(&self.target.at(v))))
            .collect()
    }

    fn solve_qp(&self, extra: Option<(&DMatrix<f64>, &DVector<f64>)>) -> Result<Vec<f64>> {
        let mut p = QpProblem::on_simplex(self.q.clone(), self.c.clone());
        if let Some((g, h)) = extra {
            p = p.with_inequalities(g, h);
        }
        let sol = p.solve(&QpOptions::default())?;
        Ok(clean_weights(sol.x.as_slice()))
    }

    /// A weight vector meeting every training constraint, starting from `w`.
    fn restore(&self, w: &[f64], states: &[BlochVector], need: &[f64]) -> Result<Vec<f64>> {
        let feasible = |cand: &[f64]| {
            states
                .iter()
                .zip(need)
                .all(|(v, &t)| norm3(&self.displacement(cand, v)) >= t)
        };
        if feasible(w) {
            return Ok(w.to_vec());
        }
        // Scaling the non-identity part scales every displacement uniformly.
        let mut kappa: f64 = 1.0;
        for (v, &t) in states.iter().zip(need) {
            if t <= 0.0 {
                continue;
            }
            let d = norm3(&self.displacement(w, v));
            kappa = if d > 0.0 { kappa.max(t / d) } else { f64::INFINITY };
        }
        if kappa.is_finite() {
            let mut scaled: Vec<f64> = w.iter().map(|x| kappa * x).collect();
            scaled[self.identity_index] = 1.0 - kappa * (1.0 - w[self.identity_index]);
            // One ulp of headroom against rounding in the displacement.
            if scaled[self.identity_index] >= 0.0 {
                let bump = 1.0 + 1e-12;
                let mut bumped: Vec<f64> = w.iter().map(|x| kappa * bump * x).collect();
                bumped[self.identity_index] = 1.0 - kappa * bump * (1.0 - w[self.identity_index]);
                if bumped[self.identity_index] >= 0.0 && feasible(&bumped) {
                    return Ok(bumped);
                }
                if feasible(&scaled) {
                    return Ok(scaled);
                }
            }
        }
        // Otherwise walk toward the uniform Pauli mixture, which displaces
        // every pure state by 4/3.
        let mix = |lambda: f64| -> Vec<f64> {
            w.iter()
                .zip(&self.anchor)
                .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
                .collect()
        };
        if !feasible(&self.anchor) {
            let (state, violation) = states
                .iter()
                .zip(need)
                .enumerate()
                .map(|(k, (v, &t))| (k, t - norm3(&self.displacement(&self.anchor, v))))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            return Err(Error::Infeasible {
                state,
                violation: 0.5 * violation,
            });
        }
        let steps = 64;
        let mut lo = 0.0;
        let mut hi = 1.0;
        for s in 1..=steps {
            let lambda = s as f64 / steps as f64;
            if feasible(&mix(lambda)) {
                hi = lambda;
                break;
            }
            lo = lambda;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(&mix(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(mix(hi))
    }

    /// Rows u_k·d(w) >= t_k, where u_k is the unit vector returned by `dir`
    /// for state k. Any choice of u_k gives an inner approximation of the
    /// honesty constraint |d(w)| >= t_k.
    fn linearized(
        &self,
        states: &[BlochVector],
        need: &[f64],
        dir: impl Fn(&BlochVector) -> [f64; 3],
    ) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (v, &t) in states.iter().zip(need) {
            if t <= 0.0 {
                continue;
            }
            let d = dir(v);
            let len = norm3(&d);
            let u = [d[0] / len, d[1] / len, d[2] / len];
            rows.push(
                self.members
                    .iter()
                    .map(|m| {
                        let dm = m.at(v);
                        u[0] * dm[0] + u[1] * dm[1] + u[2] * dm[2]
                    })
                    .collect::<Vec<_>>(),
            );
            rhs.push(t);
        }
        if rows.is_empty() {
            return None;
        }
        let n = self.members.len();
        Some((DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]), DVector::from_vec(rhs)))
    }

    /// Sequential convex programming on the training set: each round replaces
    /// |d(w)| >= t by the inner approximation u·d(w) >= t, with u the unit
    /// displacement at the current iterate. The objective never increases.
    fn constrained(&self, start: &[f64], states: &[BlochVector], need: &[f64], max_rounds: usize) -> Result<Vec<f64>> {
        let mut w = self.restore(start, states, need)?;
        let mut dist = self.distance(&w)?;
        let mut stalled = 0;
        for _ in 0..max_rounds {
            let Some((g, h)) = self.linearized(states, need, |v| self.displacement(&w, v)) else {
                return Ok(w);
            };
            let next = self.solve_qp(Some((&g, &h)))?;
            let change = next
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let next_dist = self.distance(&next)?;
            // On a flat optimal face the iterate can wander at rounding level
            // without improving the distance; stop after a few such rounds.
            stalled = if next_dist >= dist * (1.0 - 1e-14) { stalled + 1 } else { 0 };
            w = next;
            dist = dist.min(next_dist);
            if change <= 1e-14 || stalled >= 3 {
                break;
            }
        }
        Ok(w)
    }

    /// The problem is nonconvex, so two starts are tried: the unconstrained
    /// optimum, and the convex subproblem that pushes every state along the
    /// target's own displacement direction. The better local optimum wins.
    fn constrained_best(&self, unconstrained: &[f64], states: &[BlochVector], max_rounds: usize) -> Result<Vec<f64>> {
        let need: Vec<f64> = states.iter().map(|v| norm3(&self.target.at(v))).collect();
        let mut starts = vec![unconstrained.to_vec()];
        if let Some((g, h)) = self.linearized(states, &need, |v| self.target.at(v)) {
            if let Ok(aligned) = self.solve_qp(Some((&g, &h))) {
                starts.push(aligned);
            }
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut first_err = None;
        for start in starts {
            match self.constrained(&start, states, &need, max_rounds) {
                Ok(w) => {
                    let d = self.distance(&w)?;
                    if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                        best = Some((d, w));
                    }
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match (best, first_err) {
            (Some((_, w)), _) => Ok(w),
            (None, Some(e)) => Err(e),
            (None, None) => unreachable!("at least one start is tried"),
        }
    }

    fn distance(&self, w: &[f64]) -> Result<f64> {
        Ok((self.set.mix_chi(w)?.entries() - self.target_chi.entries()).frobenius_norm())
    }

    fn result(&self, w: Vec<f64>, variant: Variant, verify: &[BlochVector]) -> Result<ApproximationResult> {
        let chi = self.set.mix_chi(&w)?;
        let hs = self.distance(&w)?;
        let margin = self.margins(&w, verify).into_iter().fold(f64::INFINITY, f64::min);
        Ok(ApproximationResult {
            variant,
            member_ids: self.set.members().iter().map(|m| m.id.clone()).collect(),
            weights: w,
            chi,
            hs_distance: hs,
            honest: margin >= -HONESTY_SLACK,
            honesty_margin: margin,
        })
    }
}

/// Snaps rounding-level negatives to zero and renormalizes.
fn clean_weights(x: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = x.iter().map(|&v| if v < 1e-15 { 0.0 } else { v }).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

pub fn fit_with(
    target: &ChiMatrix,
    set: &ElementaryChannelSet,
    constrained: bool,
    opts: &FitOptions,
) -> Result<ApproximationResult> {
    let fitter = Fitter::new(target, set)?;
    let verify = fibonacci_sphere(opts.verification_states);
    let variant = match (set.is_pauli_only(), constrained) {
        (true, false) => Variant::PCa,
        (true, true) => Variant::PCw,
        (false, false) => Variant::CMCa,
        (false, true) => Variant::CMCw,
    };
    let unconstrained = fitter.solve_qp(None)?;
    if !constrained {
        return fitter.result(unconstrained, variant, &verify);
    }
    // The six Pauli eigenstates are where displacements of the elementary
    // channels peak, and the Fibonacci lattice never lands on them exactly.
    let mut train = fibonacci_sphere(opts.training_states);
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut v = [0.0; 3];
            v[axis] = sign;
            train.push(BlochVector::from_array(v));
        }
    }
    let mut w = unconstrained.clone();
    for round in 0..=opts.max_refinements {
        w = fitter.constrained_best(&unconstrained, &train, opts.max_linearizations)?;
        let margins = fitter.margins(&w, &verify);
        let mut worst: Vec<(usize, f64)> = margins
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, m)| *m < 0.0)
            .collect();
        if worst.iter().all(|(_, m)| *m >= -HONESTY_SLACK) || round == opts.max_refinements {
            break;
        }
        worst.sort_by(|a, b| a.1.total_cmp(&b.1));
        train.extend(worst.iter().take(opts.refinement_batch).map(|(k, _)| verify[*k]));
    }
    fitter.result(w, variant, &verify)
}

/// Best depolarizing channel in Hilbert-Schmidt distance. The optimum keeps
/// the total error weight: each Pauli entry becomes the mean of the target's
/// three error entries.
pub fn depolarizing_fit(target: &ChiMatrix) -> Result<ApproximationResult> {
    depolarizing_fit_with(target, &FitOptions::default())
}

fn depolarizing_fit_with(target: &ChiMatrix, opts: &FitOptions) -> Result<ApproximationResult> {
    let set = ElementaryChannelSet::paulis();
    let fitter = Fitter::new(target, &set)?;
    let d = target.diagonal();
    let err = (d[1] + d[2] + d[3]) / 2.0;
    let w = vec![1.0 - err, err / 3.0, err / 3.0, err / 3.0];
    let verify = fibonacci_sphere(opts.verification_states);
    fitter.result(w, Variant::DC, &verify)
}

/// min over `n_grid` Fibonacci-lattice states of D_tr(model) - D_tr(target).
pub fn verify_honesty(model: &KrausChannel, target: &KrausChannel, n_grid: usize) -> f64 {
    honesty_margin_chi(&model.chi(), &target.chi(), &fibonacci_sphere(n_grid))
}

pub fn honesty_margin_chi(model: &ChiMatrix, target: &ChiMatrix, states: &[BlochVector]) -> f64 {
    let m = Displacement::of(model);
    let t = Displacement::of(target);
    states
        .iter()
        .map(|v| 0.5 * (norm3(&m.at(v)) - norm3(&t.at(v))))
        .fold(f64::INFINITY, f64::min)
}
