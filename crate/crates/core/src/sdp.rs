//! Small dense semidefinite programs in standard form
//!
//! ```text
//!   minimize  <C, X>  subject to  <A_k, X> = b_k,  X ⪰ 0
//!   maximize  b·y     subject to  C - Σ y_k A_k = Z ⪰ 0
//! ```
//!
//! with X, Z block diagonal and real symmetric. Solved by an infeasible-start
//! primal-dual interior-point method (HKM direction, Mehrotra
//! predictor-corrector). Problem sizes here are a few dozen rows, so every
//! matrix is dense.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Block = DMatrix<f64>;

#[derive(Clone, Debug)]
pub struct SdpProblem {
    block_sizes: Vec<usize>,
    c: Vec<Block>,
    a: Vec<Vec<Block>>,
    b: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpOptions {
    /// Target for |primal - dual| and <X, Z>.
    pub gap_tol: f64,
    /// Target for the relative primal and dual residuals.
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// When progress stalls before the targets are met, the last iterate is
    /// still returned if its gap and residuals are below this.
    pub acceptable_gap: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-11,
            feas_tol: 1e-11,
            max_iterations: 100,
            acceptable_gap: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Vec<Block>,
    pub y: Vec<f64>,
    pub z: Vec<Block>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

impl SdpSolution {
    /// Duality gap |<C, X> - b·y|.
    pub fn gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
    }
}

impl SdpProblem {
    pub fn new(block_sizes: Vec<usize>) -> Self {
        let c = block_sizes.iter().map(|&n| Block::zeros(n, n)).collect();
        Self {
            block_sizes,
            c,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    pub fn n_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    fn check_block(&self, block: usize, m: &Block) -> Result<()> {
        let n = *self.block_sizes.get(block).ok_or(Error::IndexOutOfRange {
            index: block,
            limit: self.block_sizes.len(),
        })?;
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
        Ok(())
    }

    pub fn set_objective_block(&mut self, block: usize, m: Block) -> Result<()> {
        self.check_block(block, &m)?;
        self.c[block] = symmetrize(&m);
        Ok(())
    }

    /// Adds sum_blocks <A_block, X_block> = rhs. Blocks not listed are zero.
    pub fn add_constraint(&mut self, terms: Vec<(usize, Block)>, rhs: f64) -> Result<()> {
        let mut a: Vec<Block> = self.block_sizes.iter().map(|&n| Block::zeros(n, n)).collect();
        for (block, m) in terms {
            self.check_block(block, &m)?;
            a[block] += symmetrize(&m);
        }
        self.a.push(a);
        self.b.push(rhs);
        Ok(())
    }

    fn op_a(&self, x: &[Block]) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|ak| inner(ak, x)))
    }

    fn op_at(&self, y: &DVector<f64>) -> Vec<Block> {
        let mut out: Vec<Block> = self.block_sizes.iter().map(|&n| Block::zeros(n, n)).collect();
        for (ak, &yk) in self.a.iter().zip(y.iter()) {
            if yk == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(ak) {
                *o += a * yk;
            }
        }
        out
    }

    pub fn solve(&self, opts: &SdpOptions) -> Result<SdpSolution> {
        let m = self.a.len();
        let n_total: usize = self.block_sizes.iter().sum();
        let b = DVector::from_column_slice(&self.b);
        let b_norm = b.norm();
        let c_norm = frob(&self.c);
        let scale = 10.0_f64.max(b_norm).max(c_norm);
        let mut x: Vec<Block> = self
            .block_sizes
            .iter()
            .map(|&n| Block::identity(n, n) * scale)
            .collect();
        let mut z = x.clone();
        let mut y = DVector::zeros(m);

        let mut best: Option<(f64, SdpSolution)> = None;
        let mut prev_pinf = f64::INFINITY;
        for iter in 0..=opts.max_iterations {
            let rp = &b - self.op_a(&x);
            let aty = self.op_at(&y);
            let rd: Vec<Block> = self
                .c
                .iter()
                .zip(&aty)
                .zip(&z)
                .map(|((c, a), zz)| c - a - zz)
                .collect();
            let pobj = inner(&self.c, &x);
            let dobj = b.dot(&y);
            let pinf = rp.norm() / (1.0 + b_norm);
            let dinf = frob(&rd) / (1.0 + c_norm);
            let xz = inner(&x, &z);
            let sol = SdpSolution {
                x: x.clone(),
                y: y.iter().copied().collect(),
                z: z.clone(),
                primal_objective: pobj,
                dual_objective: dobj,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                iterations: iter,
            };
            let gap_scale = 1.0 + pobj.abs().max(dobj.abs());
            if (pobj - dobj).abs() < opts.gap_tol * gap_scale
                && xz < opts.gap_tol * gap_scale
                && pinf < opts.feas_tol
                && dinf < opts.feas_tol
            {
                return Ok(sol);
            }
            let score = ((pobj - dobj).abs() / gap_scale).max(pinf).max(dinf);
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((score, sol));
            }
            // A step that wrecks feasibility means the directions are no
            // longer trustworthy; keep the best iterate seen.
            if pinf > 1e-6 && pinf > 1e3 * prev_pinf {
                break;
            }
            prev_pinf = pinf;
            if iter == opts.max_iterations {
                break;
            }

            let Some(zinv) = spd_inverse(&z) else { break };
            let schur = self.schur(&x, &zinv);
            // Near the optimum the Schur complement can lose definiteness to
            // rounding; LU still gives a usable direction.
            let factor = match Cholesky::new(schur.clone()) {
                Some(ch) => SchurFactor::Cholesky(ch),
                None => SchurFactor::Lu(schur.clone().lu()),
            };
            let mu = xz / n_total as f64;

            let x_rd_zinv: Vec<Block> = x
                .iter()
                .zip(&rd)
                .zip(&zinv)
                .map(|((xb, r), zi)| xb * r * zi)
                .collect();
            let solve_dir = |rc: &[Block]| -> (Vec<Block>, DVector<f64>, Vec<Block>) {
                let rhs = &rp - self.op_a(rc) + self.op_a(&x_rd_zinv);
                let mut dy = factor.solve(&rhs);
                let fix = factor.solve(&(&rhs - &schur * &dy));
                if fix.iter().all(|v| v.is_finite()) {
                    dy += fix;
                }
                let at_dy = self.op_at(&dy);
                let dz: Vec<Block> = rd.iter().zip(&at_dy).map(|(r, a)| r - a).collect();
                let dx: Vec<Block> = rc
                    .iter()
                    .zip(&x)
                    .zip(&dz)
                    .zip(&zinv)
                    .map(|(((rcb, xb), dzb), zi)| symmetrize(&(rcb - xb * dzb * zi)))
                    .collect();
                (dx, dy, dz)
            };

            let rc_aff: Vec<Block> = x.iter().map(|xb| -xb).collect();
            let (dx_a, _, dz_a) = solve_dir(&rc_aff);
            let ap = max_step(&x, &dx_a).min(1.0);
            let ad = max_step(&z, &dz_a).min(1.0);
            let mu_aff = inner(&add(&x, &dx_a, ap), &add(&z, &dz_a, ad)) / n_total as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            let rc: Vec<Block> = x
                .iter()
                .zip(&zinv)
                .zip(dx_a.iter().zip(&dz_a))
                .map(|((xb, zi), (dxa, dza))| {
                    zi * (sigma * mu) - xb - symmetrize(&(dxa * dza * zi))
                })
                .collect();
            let (dx, dy, dz) = solve_dir(&rc);
            let tau = 0.98;
            let ap = (tau * max_step(&x, &dx)).min(1.0);
            let ad = (tau * max_step(&z, &dz)).min(1.0);
            if ap < 1e-12 && ad < 1e-12 {
                break;
            }
            x = add(&x, &dx, ap);
            z = add(&z, &dz, ad);
            y += dy * ad;
        }
        let (_, sol) = best.expect("at least one iterate is evaluated");
        let gap_scale = 1.0 + sol.primal_objective.abs().max(sol.dual_objective.abs());
        if sol.gap() < opts.acceptable_gap * gap_scale
            && sol.primal_infeasibility.max(sol.dual_infeasibility) < opts.acceptable_gap
        {
            return Ok(sol);
        }
        Err(Error::SolverFailure {
            iterations: sol.iterations,
            gap: sol.gap(),
            infeasibility: sol.primal_infeasibility.max(sol.dual_infeasibility),
        })
    }

    /// M_ij = Tr(A_i X A_j Z^-1).
    fn schur(&self, x: &[Block], zinv: &[Block]) -> DMatrix<f64> {
        let m = self.a.len();
        let g: Vec<Vec<Block>> = self
            .a
            .iter()
            .map(|aj| {
                aj.iter()
                    .zip(x)
                    .zip(zinv)
                    .map(|((a, xb), zi)| xb * a * zi)
                    .collect()
            })
            .collect();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] = inner(&self.a[i], &g[j]);
            }
        }
        (&out + out.transpose()) * 0.5
    }
}

enum SchurFactor {
    Cholesky(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            SchurFactor::Cholesky(c) => c.solve(rhs),
            SchurFactor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
        }
    }
}

fn symmetrize(m: &Block) -> Block {
    (m + m.transpose()) * 0.5
}

fn inner(a: &[Block], b: &[Block]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[Block]) -> f64 {
    inner(a, a).sqrt()
}

fn add(a: &[Block], d: &[Block], step: f64) -> Vec<Block> {
    a.iter().zip(d).map(|(x, dx)| x + dx * step).collect()
}

fn spd_inverse(z: &[Block]) -> Option<Vec<Block>> {
    z.iter()
        .map(|b| Cholesky::new(b.clone()).map(|c| symmetrize(&c.inverse())))
        .collect()
}

/// Largest alpha with X + alpha dX ⪰ 0 (infinity if unbounded).
fn max_step(x: &[Block], dx: &[Block]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, dxb) in x.iter().zip(dx) {
        let Some(chol) = Cholesky::new(xb.clone()) else {
            return 0.0;
        };
        let l = chol.l();
        let Some(linv) = l.try_inverse() else {
            return 0.0;
        };
        let w = symmetrize(&(&linv * dxb * linv.transpose()));
        let lmin = SymmetricEigen::new(w).eigenvalues.min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}
