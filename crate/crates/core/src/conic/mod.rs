//! Conic solver for programs of the form
//!
//! ```text
//!   min  ½ Σ_j d_j x_j² + cᵀx + c0
//!   s.t. A x + b ∈ K,   l ≤ x ≤ u
//! ```
//!
//! where `K` is a product of zero cones (equalities), nonnegative orthants,
//! second-order cones `f0 ≥ ‖f1..‖` and rotated cones `f0·f1 ≥ ‖f2..‖²`
//! with `f0, f1 ≥ 0`.
//!
//! [`solve_conic`] runs presolve, converts to the solver's standard form and
//! calls the homogeneous self-dual interior-point method. Row duals follow
//! the convention `∇f(x) = Aᵀy + (bound multipliers)`, `y ∈ K*`.

mod certificate;
mod cones;
mod ipm;
mod kkt;
mod ldl;
mod presolve;
pub mod sparse;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use certificate::{verify_certificate, CertificateCheck};
pub use sparse::CscMatrix;

use cones::ConeBlock;
use ipm::{IpmSettings, IpmStatus, StdForm};
use presolve::PresolveOutcome;

/// Cone type of a block of rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    /// `f = 0`.
    Zero,
    /// `f ≥ 0`.
    NonNeg,
    /// `f0 ≥ ‖f1..‖`.
    Soc,
    /// `f0·f1 ≥ ‖f2..‖²`, `f0, f1 ≥ 0`.
    RotatedSoc,
}

impl ConeKind {
    pub fn is_linear(self) -> bool {
        matches!(self, ConeKind::Zero | ConeKind::NonNeg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub kind: ConeKind,
    pub dim: usize,
}

/// A conic program in user form. Rows are partitioned, in order, by `cones`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Diagonal of the quadratic term, `½ Σ quad_j x_j²`.
    pub quad: Vec<f64>,
    pub lin: Vec<f64>,
    pub constant: f64,
    pub rows: CscMatrix,
    pub row_const: Vec<f64>,
    pub cones: Vec<ConeSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("negative quadratic coefficient {value} on column {col}")]
    NonConvex { col: usize, value: f64 },
    #[error("cone block {block} of kind {kind:?} has invalid dimension {dim}")]
    ConeDim { block: usize, kind: ConeKind, dim: usize },
    #[error("non-finite data in {0}")]
    NonFinite(&'static str),
}

impl ConicProblem {
    pub fn num_vars(&self) -> usize {
        self.lin.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_const.len()
    }

    /// First row of every cone block.
    pub fn cone_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.cones
            .iter()
            .map(|c| {
                let o = off;
                off += c.dim;
                o
            })
            .collect()
    }

    /// Cone kind and block index of every row.
    pub fn row_kinds(&self) -> Vec<(ConeKind, usize)> {
        let mut out = Vec::with_capacity(self.num_rows());
        for (bi, c) in self.cones.iter().enumerate() {
            out.extend(std::iter::repeat((c.kind, bi)).take(c.dim));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.lower.len() != n || self.upper.len() != n || self.quad.len() != n {
            return Err(ConicError::Dimension("column vectors differ in length".into()));
        }
        if self.rows.ncols != n || self.rows.nrows != m {
            return Err(ConicError::Dimension(format!(
                "row matrix is {}x{}, expected {m}x{n}",
                self.rows.nrows, self.rows.ncols
            )));
        }
        let total: usize = self.cones.iter().map(|c| c.dim).sum();
        if total != m {
            return Err(ConicError::Dimension(format!("cones cover {total} rows, problem has {m}")));
        }
        for (bi, c) in self.cones.iter().enumerate() {
            let min = match c.kind {
                ConeKind::Zero | ConeKind::NonNeg | ConeKind::Soc => 1,
                ConeKind::RotatedSoc => 2,
            };
            if c.dim < min {
                return Err(ConicError::ConeDim {
                    block: bi,
                    kind: c.kind,
                    dim: c.dim,
                });
            }
        }
        for (j, &d) in self.quad.iter().enumerate() {
            if !(d >= 0.0) {
                return Err(ConicError::NonConvex { col: j, value: d });
            }
        }
        if !self.lin.iter().chain(&self.rows.nzval).chain(&self.row_const).all(|v| v.is_finite())
            || !self.constant.is_finite()
        {
            return Err(ConicError::NonFinite("objective or rows"));
        }
        if self.lower.iter().chain(&self.upper).any(|v| v.is_nan()) {
            return Err(ConicError::NonFinite("bounds"));
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut f = self.constant;
        for j in 0..x.len() {
            f += 0.5 * self.quad[j] * x[j] * x[j] + self.lin[j] * x[j];
        }
        f
    }

    /// `A x + b`.
    pub fn row_values(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.row_const.clone();
        self.rows.gemv(1.0, x, &mut f);
        f
    }

    /// Same feasible set, with every quadratic objective term moved into a
    /// rotated cone `t_j · 1 ≥ (√(d_j/2) x_j)²` and a linear term `t_j`.
    pub fn epigraph_form(&self) -> ConicProblem {
        let mut b = ConicBuilder::new();
        for j in 0..self.num_vars() {
            let v = b.add_var(self.lower[j], self.upper[j]);
            b.set_cost(v, 0.0, self.lin[j]);
        }
        b.add_constant(self.constant);
        let at = self.rows.transpose();
        let offsets = self.cone_offsets();
        for (bi, c) in self.cones.iter().enumerate() {
            let rows: Vec<(Vec<(usize, f64)>, f64)> = (offsets[bi]..offsets[bi] + c.dim)
                .map(|r| {
                    let terms = (at.colptr[r]..at.colptr[r + 1]).map(|k| (at.rowval[k], at.nzval[k])).collect();
                    (terms, self.row_const[r])
                })
                .collect();
            b.add_block(c.kind, rows);
        }
        for j in 0..self.num_vars() {
            if self.quad[j] > 0.0 {
                let t = b.add_var(0.0, f64::INFINITY);
                b.set_cost(t, 0.0, 1.0);
                b.add_block(
                    ConeKind::RotatedSoc,
                    vec![
                        (vec![(t, 1.0)], 0.0),
                        (vec![], 1.0),
                        (vec![(j, (0.5 * self.quad[j]).sqrt())], 0.0),
                    ],
                );
            }
        }
        b.build()
    }
}

/// Incremental construction of a [`ConicProblem`].
#[derive(Debug, Clone, Default)]
pub struct ConicBuilder {
    lower: Vec<f64>,
    upper: Vec<f64>,
    quad: Vec<f64>,
    lin: Vec<f64>,
    constant: f64,
    trip: Vec<(usize, usize, f64)>,
    row_const: Vec<f64>,
    cones: Vec<ConeSpec>,
}

impl ConicBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.lin.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_const.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.quad.push(0.0);
        self.lin.push(0.0);
        self.lin.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    /// Adds `½ quad x² + lin x` to the objective.
    pub fn set_cost(&mut self, var: usize, quad: f64, lin: f64) {
        self.quad[var] += quad;
        self.lin[var] += lin;
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// Adds one linear row `Σ terms + constant` in `kind` (zero or
    /// nonnegative); consecutive rows of the same kind share a block.
    /// Returns the row index.
    pub fn add_row(&mut self, kind: ConeKind, terms: &[(usize, f64)], constant: f64) -> usize {
        assert!(kind.is_linear(), "add_row takes linear rows only");
        let r = self.push_row(terms, constant);
        match self.cones.last_mut() {
            Some(last) if last.kind == kind => last.dim += 1,
            _ => self.cones.push(ConeSpec { kind, dim: 1 }),
        }
        r
    }

    /// Adds a full cone block; returns the index of its first row.
    pub fn add_block(&mut self, kind: ConeKind, rows: Vec<(Vec<(usize, f64)>, f64)>) -> usize {
        let first = self.num_rows();
        if kind.is_linear() {
            for (terms, c) in &rows {
                self.add_row(kind, terms, *c);
            }
            return first;
        }
        let dim = rows.len();
        for (terms, c) in &rows {
            self.push_row(terms, *c);
        }
        self.cones.push(ConeSpec { kind, dim });
        first
    }

    fn push_row(&mut self, terms: &[(usize, f64)], constant: f64) -> usize {
        let r = self.row_const.len();
        for &(c, v) in terms {
            if v != 0.0 {
                self.trip.push((r, c, v));
            }
        }
        self.row_const.push(constant);
        r
    }

    pub fn build(self) -> ConicProblem {
        let n = self.lin.len();
        let m = self.row_const.len();
        ConicProblem {
            lower: self.lower,
            upper: self.upper,
            quad: self.quad,
            lin: self.lin,
            constant: self.constant,
            rows: CscMatrix::from_triplets(m, n, &self.trip),
            row_const: self.row_const,
            cones: self.cones,
        }
    }
}

/// Stopping tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative primal and dual residual.
    pub feasibility: f64,
    pub gap_abs: f64,
    pub gap_rel: f64,
    /// Threshold for declaring an iterate an infeasibility certificate.
    pub infeasibility: f64,
    /// Tolerance used when re-checking a certificate on the user problem.
    pub certificate: f64,
    pub max_iter: usize,
    pub presolve: bool,
    /// Compute the Lagrangian dual bound at every iteration for the log.
    pub record_dual_bound: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-8,
            gap_abs: 1e-8,
            gap_rel: 1e-8,
            infeasibility: 1e-8,
            certificate: 1e-6,
            max_iter: 200,
            presolve: true,
            record_dual_bound: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
}

/// One line of the interior-point iteration log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
    /// Lagrangian lower bound of the current dual iterate (NaN unless
    /// requested).
    pub dual_bound: f64,
}

/// Residuals measured on the user problem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    /// Largest row violation, each relative to `1 + ` the row's largest term.
    pub primal: f64,
    /// Largest gradient mismatch not absorbable by a finite bound, relative.
    pub dual: f64,
    /// `|objective − dual_objective| / (1 + |objective|)`.
    pub gap: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// One multiplier per row, in `K*`.
    pub row_duals: Vec<f64>,
    pub objective: f64,
    /// Lagrangian bound of `row_duals` over the box: a valid lower bound on
    /// the optimum whenever `row_duals ∈ K*`.
    pub dual_objective: f64,
    pub residuals: KktResiduals,
    pub iterations: usize,
    /// Row vector proving infeasibility (status `Infeasible` only).
    pub certificate: Option<Vec<f64>>,
    pub presolve_removed_cols: usize,
    pub presolve_removed_rows: usize,
    #[serde(skip)]
    pub log: Vec<IterationRecord>,
    #[serde(skip)]
    pub solve_seconds: f64,
}

impl ContinuousSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    fn empty(status: SolveStatus, n: usize, m: usize) -> Self {
        Self {
            status,
            x: vec![f64::NAN; n],
            row_duals: vec![f64::NAN; m],
            objective: f64::NAN,
            dual_objective: f64::NAN,
            residuals: KktResiduals {
                primal: f64::INFINITY,
                dual: f64::INFINITY,
                gap: f64::INFINITY,
            },
            iterations: 0,
            certificate: None,
            presolve_removed_cols: 0,
            presolve_removed_rows: 0,
            log: Vec::new(),
            solve_seconds: 0.0,
        }
    }
}

/// Solves `problem`. Invalid input yields `NumericalLimit` with an error in
/// the log; use [`ConicProblem::validate`] first to get the reason.
pub fn solve_conic(problem: &ConicProblem, tol: &Tolerances) -> ContinuousSolution {
    let start = Instant::now();
    let n = problem.num_vars();
    let m = problem.num_rows();
    if let Err(e) = problem.validate() {
        log::error!("conic problem rejected: {e}");
        return ContinuousSolution::empty(SolveStatus::NumericalLimit, n, m);
    }
    let mut sol = solve_validated(problem, tol);
    sol.solve_seconds = start.elapsed().as_secs_f64();
    sol
}

fn solve_validated(problem: &ConicProblem, tol: &Tolerances) -> ContinuousSolution {
    let n = problem.num_vars();
    let m = problem.num_rows();
    let pre = if tol.presolve {
        match presolve::presolve(problem) {
            PresolveOutcome::Reduced(p) => Some(p),
            PresolveOutcome::Infeasible(y) => {
                let check = verify_certificate(problem, &y);
                log::debug!("presolve infeasible: {check:?}");
                let mut sol = ContinuousSolution::empty(SolveStatus::Infeasible, n, m);
                sol.certificate = Some(y);
                return sol;
            }
        }
    } else {
        None
    };
    // crossing original bounds are not a presolve matter when it is off
    if pre.is_none() {
        if let Some(j) = (0..n).find(|&j| problem.lower[j] > problem.upper[j]) {
            log::debug!("column {j} has crossing bounds");
            let mut sol = ContinuousSolution::empty(SolveStatus::Infeasible, n, m);
            sol.certificate = Some(vec![0.0; m]);
            return sol;
        }
    }
    let reduced = pre.as_ref().map(|p| &p.reduced).unwrap_or(problem);
    let (std, blocks_user) = to_std_form(reduced);

    let settings = IpmSettings {
        max_iter: tol.max_iter,
        eps_abs: tol.gap_abs,
        eps_rel: tol.gap_rel,
        eps_feas: tol.feasibility,
        eps_infeas: tol.infeasibility,
        step_fraction: 0.99,
        ruiz_iters: 10,
        record_dual_bound: tol.record_dual_bound,
    };
    let res = if std.b.is_empty() {
        unconstrained(&std)
    } else {
        ipm::solve(&std, &settings)
    };

    // user-form duals of the reduced problem
    let user_duals = |zs: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; reduced.num_rows()];
        let roff = reduced.cone_offsets();
        for (bi, c) in reduced.cones.iter().enumerate() {
            let o = roff[bi];
            let so = blocks_user[bi];
            if c.kind == ConeKind::RotatedSoc {
                let z = &zs[so..so + c.dim];
                y[o] = 0.5 * (z[0] + z[1]);
                y[o + 1] = 0.5 * (z[0] - z[1]);
                y[o + 2..o + c.dim].copy_from_slice(&z[2..]);
            } else {
                y[o..o + c.dim].copy_from_slice(&zs[so..so + c.dim]);
            }
        }
        y
    };
    let y_red = if res.status != IpmStatus::DualInfeasible {
        user_duals(&res.z)
    } else {
        vec![0.0; reduced.num_rows()]
    };
    // infeasibility certificate on the original rows from reduced duals
    let certificate_of = |y_red: &[f64]| -> Vec<f64> {
        match &pre {
            Some(p) => {
                let mut y = vec![0.0; m];
                for r in 0..m {
                    if let Some(rr) = p.row_map[r] {
                        y[r] = y_red[rr];
                    }
                }
                presolve::finish_certificate(problem, y, &p.lower_src, &p.upper_src, &p.tightened)
            }
            None => y_red.to_vec(),
        }
    };

    let expand_x = |xr: &[f64]| -> Vec<f64> {
        match &pre {
            Some(p) => (0..n)
                .map(|j| match p.col_map[j] {
                    Some(jj) => xr[jj],
                    None => p.lower[j],
                })
                .collect(),
            None => xr.to_vec(),
        }
    };
    let (rc, rr) = pre.as_ref().map(|p| (p.removed_cols, p.removed_rows)).unwrap_or((0, 0));

    match res.status {
        IpmStatus::Solved | IpmStatus::MaxIterations | IpmStatus::Numerical => {
            let mut x = expand_x(&res.x);
            let (lo, hi) = match &pre {
                Some(p) => (&p.lower, &p.upper),
                None => (&problem.lower, &problem.upper),
            };
            for j in 0..n {
                x[j] = x[j].clamp(lo[j], hi[j]);
            }
            let y = match &pre {
                Some(p) => presolve::recover_duals(problem, p, &x, &y_red),
                None => y_red,
            };
            let y = project_dual(problem, y);
            let objective = problem.objective(&x);
            let (dual_objective, dual_res) = lagrangian(problem, &y);
            let primal = primal_residual(problem, &x);
            let gap = (objective - dual_objective).abs() / (1.0 + objective.abs());
            let residuals = KktResiduals {
                primal,
                dual: dual_res,
                gap,
            };
            // a stalled run still counts when the recovered point meets the
            // tolerances on the original problem
            let verified = primal <= tol.feasibility && dual_res <= tol.feasibility && gap <= tol.gap_rel;
            // a stalled run heading to τ = 0 may still carry a valid
            // certificate once the bounds are taken into account
            if !verified && res.status != IpmStatus::Solved {
                if let Some(ray) = &res.ray {
                    let cert = project_dual(problem, certificate_of(&user_duals(ray)));
                    let check = verify_certificate(problem, &cert);
                    log::debug!("stalled run ray: {check:?}");
                    if check.is_valid(tol.certificate) {
                        let mut sol = ContinuousSolution::empty(SolveStatus::Infeasible, n, m);
                        sol.certificate = Some(cert);
                        sol.iterations = res.iterations;
                        sol.log = res.log;
                        sol.presolve_removed_cols = rc;
                        sol.presolve_removed_rows = rr;
                        return sol;
                    }
                }
            }
            let status = if res.status == IpmStatus::Solved || verified {
                SolveStatus::Optimal
            } else {
                SolveStatus::NumericalLimit
            };
            ContinuousSolution {
                status,
                x,
                row_duals: y,
                objective,
                dual_objective,
                residuals,
                iterations: res.iterations,
                certificate: None,
                presolve_removed_cols: rc,
                presolve_removed_rows: rr,
                log: res.log,
                solve_seconds: 0.0,
            }
        }
        IpmStatus::PrimalInfeasible => {
            let y = certificate_of(&y_red);
            let check = verify_certificate(problem, &y);
            let mut sol = ContinuousSolution::empty(SolveStatus::Infeasible, n, m);
            if !check.is_valid(tol.certificate) {
                log::warn!("infeasibility certificate failed verification: {check:?}");
                sol.status = SolveStatus::NumericalLimit;
            }
            sol.certificate = Some(y);
            sol.iterations = res.iterations;
            sol.log = res.log;
            sol.presolve_removed_cols = rc;
            sol.presolve_removed_rows = rr;
            sol
        }
        IpmStatus::DualInfeasible => {
            let mut sol = ContinuousSolution::empty(SolveStatus::Unbounded, n, m);
            sol.x = expand_x(&res.x);
            sol.iterations = res.iterations;
            sol.log = res.log;
            sol
        }
    }
}

/// Standard form of a validated problem. Also returns the first standard
/// row of every user cone block.
fn to_std_form(prob: &ConicProblem) -> (StdForm, Vec<usize>) {
    let n = prob.num_vars();
    let m = prob.num_rows();
    let at = prob.rows.transpose();
    let offsets = prob.cone_offsets();
    let mut trip = Vec::with_capacity(prob.rows.nnz() + 2 * n);
    let mut b = vec![0.0; m];
    let mut blocks: Vec<ConeBlock> = Vec::new();
    let mut starts = Vec::with_capacity(prob.cones.len());
    let push_linear = |blocks: &mut Vec<ConeBlock>, kind: ConeKind, d: usize| {
        match (blocks.last_mut(), kind) {
            (Some(ConeBlock::Zero(k)), ConeKind::Zero) => *k += d,
            (Some(ConeBlock::NonNeg(k)), ConeKind::NonNeg) => *k += d,
            (_, ConeKind::Zero) => blocks.push(ConeBlock::Zero(d)),
            _ => blocks.push(ConeBlock::NonNeg(d)),
        }
    };
    for (bi, c) in prob.cones.iter().enumerate() {
        let o = offsets[bi];
        starts.push(o);
        match c.kind {
            ConeKind::Zero | ConeKind::NonNeg => {
                push_linear(&mut blocks, c.kind, c.dim);
                for r in o..o + c.dim {
                    for k in at.colptr[r]..at.colptr[r + 1] {
                        trip.push((r, at.rowval[k], -at.nzval[k]));
                    }
                    b[r] = prob.row_const[r];
                }
            }
            ConeKind::Soc => {
                blocks.push(ConeBlock::Soc(c.dim));
                for r in o..o + c.dim {
                    for k in at.colptr[r]..at.colptr[r + 1] {
                        trip.push((r, at.rowval[k], -at.nzval[k]));
                    }
                    b[r] = prob.row_const[r];
                }
            }
            ConeKind::RotatedSoc => {
                blocks.push(ConeBlock::Soc(c.dim));
                // u0 = (f0 + f1)/2, u1 = (f0 - f1)/2
                for (r, sign) in [(o, 1.0), (o + 1, -1.0)] {
                    let _ = r;
                    for k in at.colptr[o]..at.colptr[o + 1] {
                        trip.push((r, at.rowval[k], -0.5 * at.nzval[k]));
                    }
                    for k in at.colptr[o + 1]..at.colptr[o + 2] {
                        trip.push((r, at.rowval[k], -0.5 * sign * at.nzval[k]));
                    }
                    b[r] = 0.5 * (prob.row_const[o] + sign * prob.row_const[o + 1]);
                }
                for r in o + 2..o + c.dim {
                    for k in at.colptr[r]..at.colptr[r + 1] {
                        trip.push((r, at.rowval[k], -at.nzval[k]));
                    }
                    b[r] = prob.row_const[r];
                }
            }
        }
    }
    // bound rows
    let mut nb = 0;
    for j in 0..n {
        if prob.upper[j].is_finite() {
            trip.push((m + nb, j, 1.0));
            b.push(prob.upper[j]);
            nb += 1;
        }
        if prob.lower[j].is_finite() {
            trip.push((m + nb, j, -1.0));
            b.push(-prob.lower[j]);
            nb += 1;
        }
    }
    if nb > 0 {
        push_linear(&mut blocks, ConeKind::NonNeg, nb);
    }
    let a = CscMatrix::from_triplets(m + nb, n, &trip);
    (
        StdForm {
            p: prob.quad.clone(),
            q: prob.lin.clone(),
            a,
            b,
            blocks,
            real_rows: m,
            lower: prob.lower.clone(),
            upper: prob.upper.clone(),
            obj_const: prob.constant,
        },
        starts,
    )
}

/// A problem without rows and bounds.
fn unconstrained(std: &StdForm) -> ipm::IpmResult {
    let n = std.q.len();
    let mut x = vec![0.0; n];
    let mut status = IpmStatus::Solved;
    for j in 0..n {
        if std.p[j] > 0.0 {
            x[j] = -std.q[j] / std.p[j];
        } else if std.q[j] != 0.0 {
            status = IpmStatus::DualInfeasible;
            x = vec![0.0; n];
            x[j] = -std.q[j].signum();
            break;
        }
    }
    ipm::IpmResult {
        status,
        x,
        z: vec![],
        ray: None,
        iterations: 0,
        log: vec![],
    }
}

/// Pushes row duals onto `K*` (removes round-off from the dual recovery).
fn project_dual(prob: &ConicProblem, mut y: Vec<f64>) -> Vec<f64> {
    for (o, c) in prob.cone_offsets().into_iter().zip(&prob.cones) {
        let v = &mut y[o..o + c.dim];
        match c.kind {
            ConeKind::Zero => {}
            ConeKind::NonNeg => v.iter_mut().for_each(|t| *t = t.max(0.0)),
            ConeKind::Soc => {
                let nt = cones::norm2(&v[1..]);
                if v[0] < nt {
                    v[0] = nt;
                }
            }
            ConeKind::RotatedSoc => {
                let viol = certificate::dual_violation(c.kind, v);
                if viol > 0.0 {
                    // raising both y0, y1 by viol/2 raises u0 = y0 + y1 by viol
                    v[0] += 0.5 * viol;
                    v[1] += 0.5 * viol;
                }
            }
        }
    }
    y
}

/// Lagrangian bound `min_{l ≤ x ≤ u} f(x) − yᵀ(Ax + b)` and the relative
/// size of the gradient terms that had to be dropped because they point to
/// an infinite bound.
fn lagrangian(prob: &ConicProblem, y: &[f64]) -> (f64, f64) {
    let mut g = prob.lin.clone();
    prob.rows.gemv_t(-1.0, y, &mut g);
    let mut total = prob.constant - sparse::dot(y, &prob.row_const);
    let mut leak: f64 = 0.0;
    let mut scale: f64 = sparse::norm_inf(&prob.lin);
    for j in 0..g.len() {
        let (p, lo, hi) = (prob.quad[j], prob.lower[j], prob.upper[j]);
        let v = ipm::separable_min(p, g[j], lo, hi);
        if v.is_finite() {
            total += v;
        } else {
            leak = leak.max(g[j].abs());
        }
        scale = scale.max((g[j] - prob.lin[j]).abs());
    }
    (total, leak / (1.0 + scale))
}

/// Largest row or bound violation at `x`, each row scaled by `1 + largest
/// term magnitude`.
pub fn primal_residual(prob: &ConicProblem, x: &[f64]) -> f64 {
    let f = prob.row_values(x);
    // largest term magnitude per row
    let mut size = prob.row_const.iter().map(|c| c.abs()).collect::<Vec<_>>();
    let a = &prob.rows;
    for j in 0..a.ncols {
        for k in a.colptr[j]..a.colptr[j + 1] {
            let t = (a.nzval[k] * x[j]).abs();
            let r = a.rowval[k];
            if t > size[r] {
                size[r] = t;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (o, c) in prob.cone_offsets().into_iter().zip(&prob.cones) {
        let block = &f[o..o + c.dim];
        if c.kind.is_linear() {
            for r in o..o + c.dim {
                let v = certificate::primal_violation(c.kind, &f[r..r + 1]);
                worst = worst.max(v / (1.0 + size[r]));
            }
        } else {
            let s = size[o..o + c.dim].iter().fold(0.0f64, |m, v| m.max(*v));
            worst = worst.max(certificate::primal_violation(c.kind, block) / (1.0 + s));
        }
    }
    for j in 0..x.len() {
        worst = worst.max((prob.lower[j] - x[j]).max(x[j] - prob.upper[j]).max(0.0));
    }
    worst
}

/// Per rotated cone block, `f0·f1 − ‖f2..‖²` at `x`. For a branch cone
/// `(l, w, p, q)` this is `l·w − p² − q²`, zero when the relaxation is
/// exact. Returned in block order as `(first row, residual)`.
pub fn check_exactness(problem: &ConicProblem, solution: &ContinuousSolution) -> Vec<(usize, f64)> {
    let f = problem.row_values(&solution.x);
    problem
        .cone_offsets()
        .into_iter()
        .zip(&problem.cones)
        .filter(|(_, c)| c.kind == ConeKind::RotatedSoc)
        .map(|(o, c)| {
            let g: f64 = f[o + 2..o + c.dim].iter().map(|v| v * v).sum();
            (o, f[o] * f[o + 1] - g)
        })
        .collect()
}
