//! Small dense primal-dual interior-point solver for semidefinite programs
//! over complex Hermitian blocks.
//!
//! Primal: `min Σ_b Re Tr(C_b X_b)` s.t. `Σ_b Re Tr(A_ib X_b) = b_i`,
//! `X_b ⪰ 0`. Dual: `max bᵀy` s.t. `Z_b = C_b − Σ_i y_i A_ib ⪰ 0`.
//!
//! Infeasible-start path following with the HKM search direction and a
//! Mehrotra predictor-corrector step. Constraint operators are stored
//! sparsely; the Schur complement is dense. Iteration order is fixed, so
//! identical inputs give bit-identical outputs.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::linalg::{eigh, hermitian_part, identity, max_abs, real, zeros, ComplexMatrix, C64};

/// Duality gap the returned solution is guaranteed to meet.
pub const CONTRACT_GAP: f64 = 1e-6;
/// Primal and dual residuals the returned solution is guaranteed to meet.
pub const CONTRACT_RESIDUAL: f64 = 1e-7;

#[derive(Debug, Clone, Error, Serialize, Deserialize)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    /// `y` with `bᵀy = 1` and `−Σ y_i A_i ⪰ 0` (approximately).
    #[error("primal problem is infeasible")]
    PrimalInfeasible { certificate: Vec<f64> },
    /// `X ⪰ 0` with `A(X) ≈ 0` and `⟨C, X⟩ = −1`.
    #[error("dual problem is infeasible (primal unbounded)")]
    DualInfeasible { certificate: Vec<ComplexMatrix> },
    #[error("no convergence after {iterations} iterations (gap {gap:.3e}, primal residual {primal_residual:.3e}, dual residual {dual_residual:.3e})")]
    NotConverged {
        iterations: usize,
        gap: f64,
        primal_residual: f64,
        dual_residual: f64,
    },
}

/// Hermitian operator stored as its nonzero entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((r, c, v));
                }
            }
        }
        Self {
            dim: m.nrows(),
            entries,
        }
    }

    /// Operator with the given `(row, col, value)` entries; duplicates add up.
    pub fn from_entries(dim: usize, entries: Vec<(usize, usize, C64)>) -> Self {
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `Re Tr(A X)`.
    pub(crate) fn re_trace_with(&self, x: &ComplexMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| (v * x[(c, r)]).re)
            .sum()
    }

    pub(crate) fn add_scaled_to(&self, target: &mut ComplexMatrix, s: f64) {
        for &(r, c, v) in &self.entries {
            target[(r, c)] += v * s;
        }
    }

    fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `X A Y` for dense `X`, `Y`.
    fn sandwich(&self, x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim;
        let mut out = zeros(n, n);
        for &(r, c, v) in &self.entries {
            for j in 0..n {
                let yc = y[(c, j)] * v;
                if yc.re == 0.0 && yc.im == 0.0 {
                    continue;
                }
                for i in 0..n {
                    out[(i, j)] += x[(i, r)] * yc;
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, SparseOp)>,
    pub rhs: f64,
}

/// SDP in standard form over Hermitian PSD blocks. Scalars are 1×1 blocks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    blocks: Vec<usize>,
    objective: Vec<ComplexMatrix>,
    constraints: Vec<Constraint>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a PSD block of the given size with zero objective; returns its index.
    pub fn add_block(&mut self, size: usize) -> usize {
        self.blocks.push(size);
        self.objective.push(zeros(size, size));
        self.blocks.len() - 1
    }

    pub fn set_objective(&mut self, block: usize, c: ComplexMatrix) {
        self.objective[block] = c;
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, ComplexMatrix)>, rhs: f64) {
        let terms = terms
            .into_iter()
            .map(|(b, m)| (b, SparseOp::from_dense(&m)))
            .collect();
        self.constraints.push(Constraint { terms, rhs });
    }

    pub fn add_sparse_constraint(&mut self, terms: Vec<(usize, SparseOp)>, rhs: f64) {
        self.constraints.push(Constraint { terms, rhs });
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn validate(&self) -> Result<(), SolverError> {
        if self.blocks.is_empty() {
            return Err(SolverError::InvalidProblem("no variable blocks".into()));
        }
        for (b, (&n, c)) in self.blocks.iter().zip(&self.objective).enumerate() {
            if n == 0 {
                return Err(SolverError::InvalidProblem(format!("block {b} is empty")));
            }
            if c.shape() != (n, n) {
                return Err(SolverError::InvalidProblem(format!(
                    "objective of block {b} has the wrong shape"
                )));
            }
            if crate::qcore::linalg::hermitian_deviation(c) > 1e-12 * (1.0 + max_abs(c)) {
                return Err(SolverError::InvalidProblem(format!(
                    "objective of block {b} is not Hermitian"
                )));
            }
        }
        for (i, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(SolverError::InvalidProblem(format!("constraint {i} has a non-finite rhs")));
            }
            for (b, op) in &con.terms {
                if *b >= self.blocks.len() || op.dim != self.blocks[*b] {
                    return Err(SolverError::InvalidProblem(format!(
                        "constraint {i} references block {b} with the wrong dimension"
                    )));
                }
                let dense = op.to_dense();
                if crate::qcore::linalg::hermitian_deviation(&dense) > 1e-12 * (1.0 + max_abs(&dense)) {
                    return Err(SolverError::InvalidProblem(format!(
                        "constraint {i} has a non-Hermitian coefficient"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Relative accuracy targeted for gap and infeasibilities.
    pub tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 120,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub x: Vec<ComplexMatrix>,
    pub y: Vec<f64>,
    pub z: Vec<ComplexMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal − dual objective|`.
    pub gap: f64,
    /// Max abs violation of `A(X) = b`.
    pub primal_residual: f64,
    /// Max abs entry of `C − Z − Aᵀy`.
    pub dual_residual: f64,
    pub iterations: usize,
}

struct Index<'a> {
    /// Per block: constraints touching it.
    terms: Vec<Vec<(usize, &'a SparseOp)>>,
}

impl<'a> Index<'a> {
    fn new(p: &'a ConicProblem) -> Self {
        let mut terms = vec![Vec::new(); p.blocks.len()];
        for (i, con) in p.constraints.iter().enumerate() {
            for (b, op) in &con.terms {
                terms[*b].push((i, op));
            }
        }
        Self { terms }
    }
}

fn apply_a(p: &ConicProblem, x: &[ComplexMatrix]) -> DVector<f64> {
    DVector::from_iterator(
        p.constraints.len(),
        p.constraints
            .iter()
            .map(|con| con.terms.iter().map(|(b, op)| op.re_trace_with(&x[*b])).sum()),
    )
}

fn apply_at(p: &ConicProblem, index: &Index, y: &DVector<f64>) -> Vec<ComplexMatrix> {
    p.blocks
        .iter()
        .enumerate()
        .map(|(b, &n)| {
            let mut m = zeros(n, n);
            for &(i, op) in &index.terms[b] {
                op.add_scaled_to(&mut m, y[i]);
            }
            m
        })
        .collect()
}

fn inner(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| crate::qcore::linalg::re_trace_product(x, y))
        .sum()
}

fn inverse_hpd(m: &ComplexMatrix) -> ComplexMatrix {
    match Cholesky::new(hermitian_part(m)) {
        Some(ch) => hermitian_part(&ch.inverse()),
        None => crate::qcore::linalg::spectral_map(m, |x| 1.0 / x.max(1e-300)),
    }
}

/// Largest `α` with `X + α ΔX ⪰ 0` (infinite when every direction is PSD).
fn max_step(x: &ComplexMatrix, dx: &ComplexMatrix) -> f64 {
    let Some(ch) = Cholesky::new(hermitian_part(x)) else {
        return 0.0;
    };
    let l = ch.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&identity(x.nrows()))
        .unwrap_or_else(|| identity(x.nrows()));
    let w = &linv * dx * linv.adjoint();
    let lmin = eigh(&w).0.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn fro(m: &[ComplexMatrix]) -> f64 {
    m.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

struct Direction {
    dx: Vec<ComplexMatrix>,
    dy: DVector<f64>,
    dz: Vec<ComplexMatrix>,
}

enum Factor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Empty,
}

/// Factorised Schur complement; solves are refined against the unperturbed
/// matrix.
struct SchurFactor {
    matrix: DMatrix<f64>,
    factor: Factor,
}

impl SchurFactor {
    fn new(matrix: DMatrix<f64>) -> Self {
        if matrix.nrows() == 0 {
            return Self {
                matrix,
                factor: Factor::Empty,
            };
        }
        if let Some(ch) = Cholesky::new(matrix.clone()) {
            return Self {
                matrix,
                factor: Factor::Chol(ch),
            };
        }
        let mut m = matrix.clone();
        let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
        for i in 0..m.nrows() {
            m[(i, i)] += 1e-13 * scale;
        }
        let factor = match Cholesky::new(m.clone()) {
            Some(ch) => Factor::Chol(ch),
            None => Factor::Lu(m.lu()),
        };
        Self { matrix, factor }
    }

    fn raw_solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Chol(ch) => ch.solve(rhs),
            Factor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
            Factor::Empty => DVector::zeros(0),
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.raw_solve(rhs);
        if x.is_empty() {
            return x;
        }
        for _ in 0..2 {
            let r = rhs - &self.matrix * &x;
            x += self.raw_solve(&r);
        }
        x
    }
}

pub fn solve_conic(p: &ConicProblem) -> Result<ConicSolution, SolverError> {
    solve_conic_with(p, &SolverSettings::default())
}

pub fn solve_conic_with(p: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution, SolverError> {
    p.validate()?;
    let index = Index::new(p);
    let m = p.constraints.len();
    let b = DVector::from_iterator(m, p.constraints.iter().map(|c| c.rhs));
    let total_dim: usize = p.blocks.iter().sum();
    let b_norm = b.norm();
    let c_norm = fro(&p.objective);

    // SDPT3-style infeasible starting point.
    let mut x = Vec::with_capacity(p.blocks.len());
    let mut z = Vec::with_capacity(p.blocks.len());
    for (blk, &n) in p.blocks.iter().enumerate() {
        let nf = n as f64;
        let mut xi: f64 = 10f64.max(nf.sqrt());
        let mut eta: f64 = 10f64.max(nf.sqrt());
        let mut max_a: f64 = 0.0;
        for &(i, op) in &index.terms[blk] {
            let na = op.norm();
            max_a = max_a.max(na);
            xi = xi.max(nf * (1.0 + b[i].abs()) / (1.0 + na));
        }
        eta = eta.max((1.0 + max_a.max(p.objective[blk].norm())) / nf.sqrt());
        x.push(identity(n) * real(xi));
        z.push(identity(n) * real(eta));
    }
    let mut y = DVector::<f64>::zeros(m);

    struct Best {
        score: f64,
        x: Vec<ComplexMatrix>,
        y: DVector<f64>,
        z: Vec<ComplexMatrix>,
        iteration: usize,
    }
    let mut best: Option<Best> = None;
    let mut stalls = 0;

    for iteration in 0..=settings.max_iterations {
        let ax = apply_a(p, &x);
        let rp = &b - &ax;
        let aty = apply_at(p, &index, &y);
        let rd: Vec<ComplexMatrix> = (0..p.blocks.len())
            .map(|k| &p.objective[k] - &z[k] - &aty[k])
            .collect();
        let pobj = inner(&p.objective, &x);
        let dobj = b.dot(&y);
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = fro(&rd) / (1.0 + c_norm);
        let score = rel_gap.max(pinf).max(dinf);
        if best.as_ref().is_none_or(|bst| score < bst.score) {
            best = Some(Best {
                score,
                x: x.clone(),
                y: y.clone(),
                z: z.clone(),
                iteration,
            });
        }
        if score < settings.tolerance || iteration == settings.max_iterations {
            break;
        }

        // Infeasibility detection on diverging iterates.
        if dobj > 0.0 && pinf > 1e-6 {
            let ratio = fro(&p.objective.iter().zip(&rd).map(|(c, r)| c - r).collect::<Vec<_>>()) / dobj;
            if ratio < 1e-8 && dobj > 1e6 {
                return Err(SolverError::PrimalInfeasible {
                    certificate: y.iter().map(|v| v / dobj).collect(),
                });
            }
        }
        if pobj < 0.0 && dinf > 1e-6 {
            let ratio = ax.norm() / (-pobj);
            if ratio < 1e-8 && -pobj > 1e6 {
                return Err(SolverError::DualInfeasible {
                    certificate: x.iter().map(|xb| xb / real(-pobj)).collect(),
                });
            }
        }

        let mu = inner(&x, &z) / total_dim as f64;
        let zinv: Vec<ComplexMatrix> = z.iter().map(inverse_hpd).collect();

        // Schur complement M_ij = Σ_b Re Tr(A_ib X_b A_jb Z_b^{-1}).
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (blk, terms) in index.terms.iter().enumerate() {
            for &(j, op_j) in terms {
                let pj = op_j.sandwich(&x[blk], &zinv[blk]);
                for &(i, op_i) in terms {
                    if i > j {
                        continue;
                    }
                    let v = op_i.re_trace_with(&pj);
                    schur[(i, j)] += v;
                }
            }
        }
        for j in 0..m {
            for i in 0..j {
                schur[(j, i)] = schur[(i, j)];
            }
        }
        let factor = SchurFactor::new(schur);

        let x_rd_zinv: Vec<ComplexMatrix> = (0..p.blocks.len())
            .map(|k| &x[k] * &rd[k] * &zinv[k])
            .collect();
        let direction = |g: Vec<ComplexMatrix>| -> Direction {
            let h: Vec<ComplexMatrix> = g.iter().zip(&x_rd_zinv).map(|(gk, t)| gk - t).collect();
            let rhs = &rp - apply_a(p, &h);
            let dy = factor.solve(&rhs);
            let atdy = apply_at(p, &index, &dy);
            let dz: Vec<ComplexMatrix> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
            let dx = (0..p.blocks.len())
                .map(|k| hermitian_part(&(&g[k] - &x[k] * &dz[k] * &zinv[k])))
                .collect();
            Direction { dx, dy, dz }
        };
        let steps = |d: &Direction| -> (f64, f64) {
            let ap = x
                .iter()
                .zip(&d.dx)
                .map(|(xk, dk)| max_step(xk, dk))
                .fold(f64::INFINITY, f64::min);
            let ad = z
                .iter()
                .zip(&d.dz)
                .map(|(zk, dk)| max_step(zk, dk))
                .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // Predictor.
        let pred = direction(x.iter().map(|xk| -xk.clone()).collect());
        let (ap, ad) = steps(&pred);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let x_aff: Vec<ComplexMatrix> = x.iter().zip(&pred.dx).map(|(a, d)| a + d * real(ap)).collect();
        let z_aff: Vec<ComplexMatrix> = z.iter().zip(&pred.dz).map(|(a, d)| a + d * real(ad)).collect();
        let mu_aff = inner(&x_aff, &z_aff) / total_dim as f64;
        let exponent = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powf(exponent) } else { 0.0 };

        // Corrector.
        let g: Vec<ComplexMatrix> = (0..p.blocks.len())
            .map(|k| {
                &zinv[k] * real(sigma * mu) - &x[k] - &pred.dx[k] * &pred.dz[k] * &zinv[k]
            })
            .collect();
        let corr = direction(g);
        let (ap, ad) = steps(&corr);
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls > 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        for k in 0..p.blocks.len() {
            x[k] = hermitian_part(&(&x[k] + &corr.dx[k] * real(ap)));
            z[k] = hermitian_part(&(&z[k] + &corr.dz[k] * real(ad)));
        }
        y += &corr.dy * ad;
    }

    let best = best.expect("at least one iterate is evaluated");
    let ax = apply_a(p, &best.x);
    let primal_residual = (&b - &ax).amax();
    let aty = apply_at(p, &index, &best.y);
    let dual_residual = (0..p.blocks.len())
        .map(|k| max_abs(&(&p.objective[k] - &best.z[k] - &aty[k])))
        .fold(0.0, f64::max);
    let primal_objective = inner(&p.objective, &best.x);
    let dual_objective = b.dot(&best.y);
    let gap = (primal_objective - dual_objective).abs();
    if gap > CONTRACT_GAP || primal_residual > CONTRACT_RESIDUAL || dual_residual > CONTRACT_RESIDUAL {
        return Err(SolverError::NotConverged {
            iterations: best.iteration,
            gap,
            primal_residual,
            dual_residual,
        });
    }
    Ok(ConicSolution {
        x: best.x,
        y: best.y.iter().copied().collect(),
        z: best.z,
        primal_objective,
        dual_objective,
        gap,
        primal_residual,
        dual_residual,
        iterations: best.iteration,
    })
}
