//! Dense convex quadratic programs
//!
//! ```text
//!   minimize  x'Qx/2 + c'x  subject to  A x = b,  G x >= h
//! ```
//!
//! solved by a primal-dual interior-point method with Mehrotra
//! predictor-corrector steps. Intended for a few dozen variables and a few
//! hundred inequality rows.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct QpProblem {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct QpOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of the equality rows.
    pub y: DVector<f64>,
    /// Multipliers of the inequality rows (>= 0).
    pub z: DVector<f64>,
    pub objective: f64,
    /// Largest absolute entry of the stationarity, feasibility, and
    /// complementarity residuals.
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl QpProblem {
    /// Minimization over the probability simplex {x >= 0, sum x = 1}.
    pub fn on_simplex(q: DMatrix<f64>, c: DVector<f64>) -> Self {
        let n = c.len();
        Self {
            q,
            c,
            a: DMatrix::from_element(1, n, 1.0),
            b: DVector::from_element(1, 1.0),
            g: DMatrix::identity(n, n),
            h: DVector::zeros(n),
        }
    }

    /// Appends inequality rows G_extra x >= h_extra.
    pub fn with_inequalities(mut self, g: &DMatrix<f64>, h: &DVector<f64>) -> Self {
        let n = self.c.len();
        let rows = self.g.nrows() + g.nrows();
        let mut gg = DMatrix::zeros(rows, n);
        gg.rows_mut(0, self.g.nrows()).copy_from(&self.g);
        gg.rows_mut(self.g.nrows(), g.nrows()).copy_from(g);
        let mut hh = DVector::zeros(rows);
        hh.rows_mut(0, self.h.len()).copy_from(&self.h);
        hh.rows_mut(self.h.len(), h.len()).copy_from(h);
        self.g = gg;
        self.h = hh;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.c.len();
        let bad = |expected: usize, found: usize| Error::DimensionMismatch { expected, found };
        if self.q.nrows() != n || self.q.ncols() != n {
            return Err(bad(n, self.q.nrows()));
        }
        if self.a.ncols() != n || self.a.nrows() != self.b.len() {
            return Err(bad(n, self.a.ncols()));
        }
        if self.g.ncols() != n || self.g.nrows() != self.h.len() {
            return Err(bad(n, self.g.ncols()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }

    pub fn solve(&self, opts: &QpOptions) -> Result<QpSolution> {
        self.validate()?;
        let n = self.c.len();
        let m = self.b.len();
        let p = self.h.len();
        let q = (&self.q + self.q.transpose()) * 0.5;

        let mut x = DVector::from_element(n, 1.0 / n.max(1) as f64);
        let mut y = DVector::zeros(m);
        let mut s = (&self.g * &x - &self.h).map(|v| v.max(1.0));
        let mut z = DVector::from_element(p, 1.0);
        let scale = 1.0 + self.c.amax().max(self.q.amax());

        let mut best: Option<QpSolution> = None;
        for iter in 0..=opts.max_iterations {
            let rd = &q * &x + &self.c - self.a.transpose() * &y - self.g.transpose() * &z;
            let rp = &self.a * &x - &self.b;
            let rg = &self.g * &x - &s - &self.h;
            let mu = if p > 0 { s.dot(&z) / p as f64 } else { 0.0 };
            let kkt = rd
                .amax()
                .max(rp.amax())
                .max(rg.amax())
                .max(s.component_mul(&z).amax());
            let sol = QpSolution {
                x: x.clone(),
                y: y.clone(),
                z: z.clone(),
                objective: self.objective(&x),
                kkt_residual: kkt,
                iterations: iter,
            };
            if kkt < opts.tol * scale {
                return Ok(self.polish(&q, &x, &s, &z).unwrap_or(sol));
            }
            if best.as_ref().is_none_or(|b| kkt < b.kkt_residual) {
                best = Some(sol);
            }
            if iter == opts.max_iterations {
                break;
            }

            let d = z.component_div(&s);
            let mut gd = self.g.clone();
            for (k, mut row) in gd.row_iter_mut().enumerate() {
                row *= d[k];
            }
            let h = &q + self.g.transpose() * gd;
            let mut kkt_mat = DMatrix::zeros(n + m, n + m);
            kkt_mat.view_mut((0, 0), (n, n)).copy_from(&h);
            kkt_mat.view_mut((0, n), (n, m)).copy_from(&(-self.a.transpose()));
            kkt_mat.view_mut((n, 0), (m, n)).copy_from(&self.a);
            let lu = kkt_mat.lu();

            let direction = |rc: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
                // dz = -S^-1 (rc + Z (G dx + rg)), ds = G dx + rg
                let w = (rc + z.component_mul(&rg)).component_div(&s);
                let top = -&rd - self.g.transpose() * &w;
                let mut rhs = DVector::zeros(n + m);
                rhs.rows_mut(0, n).copy_from(&top);
                rhs.rows_mut(n, m).copy_from(&(-&rp));
                let sol = lu.solve(&rhs)?;
                let dx = sol.rows(0, n).into_owned();
                let dy = sol.rows(n, m).into_owned();
                let ds = &self.g * &dx + &rg;
                let dz = -(rc + z.component_mul(&ds)).component_div(&s);
                Some((dx, dy, ds, dz))
            };

            let rc_aff = s.component_mul(&z);
            let Some((_, _, ds_a, dz_a)) = direction(&rc_aff) else {
                break;
            };
            let a_aff = step_to_boundary(&s, &ds_a).min(step_to_boundary(&z, &dz_a)).min(1.0);
            let mu_aff = if p > 0 {
                (&s + &ds_a * a_aff).dot(&(&z + &dz_a * a_aff)) / p as f64
            } else {
                0.0
            };
            let sigma = if mu > 0.0 {
                (mu_aff / mu).clamp(0.0, 1.0).powi(3)
            } else {
                0.0
            };
            let rc = &rc_aff + ds_a.component_mul(&dz_a) - DVector::from_element(p, sigma * mu);
            let Some((dx, dy, ds, dz)) = direction(&rc) else {
                break;
            };
            let alpha = (0.99 * step_to_boundary(&s, &ds).min(step_to_boundary(&z, &dz))).min(1.0);
            if alpha < 1e-14 {
                break;
            }
            x += &dx * alpha;
            y += &dy * alpha;
            s += &ds * alpha;
            z += &dz * alpha;
        }
        let best = best.expect("at least one iterate is evaluated");
        if best.kkt_residual < 1e-9 {
            let s = &self.g * &best.x - &self.h;
            return Ok(self.polish(&q, &best.x, &s, &best.z).unwrap_or(best));
        }
        Err(Error::SolverFailure {
            iterations: best.iterations,
            gap: best.z.dot(&(&self.g * &best.x - &self.h)).abs(),
            infeasibility: best.kkt_residual,
        })
    }
}

impl QpProblem {
    /// Re-solves with the apparent active set as equalities. Interior-point
    /// iterates carry O(mu / s) error in the multipliers, which shows up in x
    /// when the solution has tiny but nonzero components; the equality
    /// solve removes it. The correction is the minimum-norm one, so when Q is
    /// singular the result stays next to the interior-point iterate. Returns
    /// None if the guess fails any KKT sign check.
    fn polish(&self, q: &DMatrix<f64>, x0: &DVector<f64>, s: &DVector<f64>, z: &DVector<f64>) -> Option<QpSolution> {
        let mut active: Vec<usize> = (0..s.len()).filter(|&k| z[k] > s[k]).collect();
        // Without strict complementarity the initial guess can be off by a
        // row or two; a few primal/dual swaps fix it.
        for _ in 0..20 {
            match self.solve_active(q, x0, &active) {
                Ok(sol) => return Some(sol),
                Err(Swap::Drop(i)) => {
                    active.remove(i);
                }
                Err(Swap::Add(k)) => {
                    active.push(k);
                    active.sort_unstable();
                }
                Err(Swap::Fail) => return None,
            }
        }
        None
    }

    fn solve_active(&self, q: &DMatrix<f64>, x0: &DVector<f64>, active: &[usize]) -> std::result::Result<QpSolution, Swap> {
        let n = self.c.len();
        let m = self.b.len();
        let e = m + active.len();
        let mut kkt = DMatrix::zeros(n + e, n + e);
        kkt.view_mut((0, 0), (n, n)).copy_from(q);
        let mut rhs = DVector::zeros(n + e);
        rhs.rows_mut(0, n).copy_from(&(-(q * x0 + &self.c)));
        for (r, (row, val)) in (0..m)
            .map(|i| (self.a.row(i), self.b[i]))
            .chain(active.iter().map(|&k| (self.g.row(k), self.h[k])))
            .enumerate()
        {
            for j in 0..n {
                kkt[(n + r, j)] = row[j];
                kkt[(j, n + r)] = -row[j];
            }
            rhs[n + r] = val - row.dot(&x0.transpose());
        }
        // LU is enough when the system is nonsingular; otherwise fall back to
        // the minimum-norm least-squares step.
        let lu_sol = kkt.clone().lu().solve(&rhs).filter(|sol| {
            sol.iter().all(|v| v.is_finite()) && (&kkt * sol - &rhs).amax() <= 1e-13 * (1.0 + rhs.amax())
        });
        let sol = match lu_sol {
            Some(sol) => sol,
            None => {
                let svd = kkt.svd(true, true);
                let cutoff = 1e-13 * svd.singular_values.max();
                svd.solve(&rhs, cutoff).map_err(|_| Swap::Fail)?
            }
        };
        let x = x0 + sol.rows(0, n);
        let mult = sol.rows(n, e).into_owned();
        let scale = 1.0 + self.c.amax().max(self.q.amax());
        if x.iter().chain(mult.iter()).any(|v| !v.is_finite()) {
            return Err(Swap::Fail);
        }
        let slack = &self.g * &x - &self.h;
        let (worst_row, slack_val) = slack
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
        if slack_val < -1e-14 * scale {
            return if active.contains(&worst_row) {
                Err(Swap::Fail)
            } else {
                Err(Swap::Add(worst_row))
            };
        }
        let (worst_mult, mult_val) = mult
            .rows(m, active.len())
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        let (y, za) = if mult_val >= -1e-12 * scale {
            (mult.rows(0, m).into_owned(), mult.rows(m, active.len()).map(|v| v.max(0.0)))
        } else {
            // Redundant active rows make the multipliers non-unique; the
            // minimum-norm choice can be negative while a valid one exists.
            let cols = 2 * m + active.len();
            let mut mat = DMatrix::zeros(n, cols);
            for i in 0..m {
                mat.column_mut(i).copy_from(&self.a.row(i).transpose());
                mat.column_mut(m + i).copy_from(&(-self.a.row(i).transpose()));
            }
            for (j, &k) in active.iter().enumerate() {
                mat.column_mut(2 * m + j).copy_from(&self.g.row(k).transpose());
            }
            let grad = q * &x + &self.c;
            let coef = nnls(&mat, &grad);
            if (&mat * &coef - &grad).amax() > 1e-12 * scale {
                return Err(Swap::Drop(worst_mult));
            }
            let y = DVector::from_fn(m, |i, _| coef[i] - coef[m + i]);
            (y, coef.rows(2 * m, active.len()).into_owned())
        };
        let mut zz = DVector::zeros(self.h.len());
        for (i, &k) in active.iter().enumerate() {
            zz[k] = za[i];
        }
        let rd = q * &x + &self.c - self.a.transpose() * &y - self.g.transpose() * &zz;
        let rp = &self.a * &x - &self.b;
        let residual = rd.amax().max(rp.amax());
        if !(residual < 1e-12 * scale) {
            return Err(Swap::Fail);
        }
        Ok(QpSolution {
            objective: self.objective(&x),
            x,
            y,
            z: zz,
            kkt_residual: residual,
            iterations: 0,
        })
    }
}

/// Lawson-Hanson nonnegative least squares: min |M x - r| over x >= 0.
fn nnls(mat: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let cols = mat.ncols();
    let mut x = DVector::zeros(cols);
    let mut passive = vec![false; cols];
    let tol = 1e-14 * (1.0 + mat.amax()) * (1.0 + r.amax());
    let lstsq = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(mat.nrows(), idx.len(), |i, j| mat[(i, idx[j])]);
        let svd = sub.svd(true, true);
        let cutoff = 1e-13 * svd.singular_values.max();
        let sol = svd.solve(r, cutoff).unwrap_or_else(|_| DVector::zeros(idx.len()));
        let mut full = DVector::zeros(cols);
        for (k, &j) in idx.iter().enumerate() {
            full[j] = sol[k];
        }
        full
    };
    for _ in 0..3 * cols + 10 {
        let w = mat.transpose() * (r - mat * &x);
        let Some(j) = (0..cols)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]))
        else {
            break;
        };
        passive[j] = true;
        loop {
            let s = lstsq(&passive);
            if (0..cols).filter(|&k| passive[k]).all(|k| s[k] > 0.0) {
                x = s;
                break;
            }
            let alpha = (0..cols)
                .filter(|&k| passive[k] && s[k] <= 0.0)
                .map(|k| x[k] / (x[k] - s[k]))
                .fold(f64::INFINITY, f64::min);
            x += (&s - &x) * alpha;
            for k in 0..cols {
                if passive[k] && x[k] <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

enum Swap {
    Drop(usize),
    Add(usize),
    Fail,
}

/// Largest alpha with v + alpha dv >= 0 (infinity if unbounded).
fn step_to_boundary(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(a, d)| -a / d)
        .fold(f64::INFINITY, f64::min)
}
