//! Reduced KKT system
//!
//! ```text
//!     [ P + R    A_k^T      ] [dx]   [rx]
//!     [ A_k     -(H_k + δI) ] [dz] = [rz]
//! ```
//!
//! where `A_k` holds the constraint rows that stay in the system. Nonnegative
//! rows with a single nonzero (variable bounds, mostly) are eliminated
//! analytically and fold into the diagonal term `R`; this keeps the factored
//! matrix close to the size of the network model instead of doubling it with
//! bound rows.

use super::cones::{ConeBlock, ProductCone};
use super::ldl::{DynamicRegularization, LdlError, LdlFactor};
use super::sparse::{norm_inf, CscMatrix};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Condensed {
    row: usize,
    col: usize,
    a: f64,
}

pub(crate) struct KktSolver {
    n: usize,
    m: usize,
    condensed: Vec<Condensed>,
    /// Row -> KKT index (n + k), or NONE for condensed rows.
    kkt_index: Vec<usize>,
    dim: usize,
    /// Upper-triangular KKT pattern; values are rebuilt each iteration.
    upper: CscMatrix,
    diag_pos: Vec<usize>,
    /// For every SOC/nonneg/zero kept block entry (r, c) with r <= c:
    /// (position in upper, block, local r, local c).
    h_pos: Vec<(usize, usize, usize, usize)>,
    factor: LdlFactor,
    static_reg: f64,
    /// Unregularized x-block diagonal of the current system.
    xdiag: Vec<f64>,
    /// H blocks of the current system per cone block: dense row-major for
    /// second-order blocks, diagonal otherwise.
    hblocks: Vec<Vec<f64>>,
    /// Condensed h values aligned with `condensed`.
    hcond: Vec<f64>,
    work: Vec<f64>,
    resid: Vec<f64>,
    corr: Vec<f64>,
    pub refine_steps: usize,
}

impl KktSolver {
    pub fn new(a: &CscMatrix, cone: &ProductCone) -> Result<Self, LdlError> {
        let (n, m) = (a.ncols, a.nrows);
        // row nonzero counts
        let mut count = vec![0usize; m];
        let mut last_col = vec![0usize; m];
        let mut last_val = vec![0.0; m];
        for c in 0..n {
            for k in a.colptr[c]..a.colptr[c + 1] {
                let r = a.rowval[k];
                count[r] += 1;
                last_col[r] = c;
                last_val[r] = a.nzval[k];
            }
        }
        let mut condensed = Vec::new();
        let mut kkt_index = vec![NONE; m];
        let mut next = n;
        for (bi, b) in cone.blocks.iter().enumerate() {
            let off = cone.offsets[bi];
            for r in off..off + b.dim() {
                let singleton = matches!(b, ConeBlock::NonNeg(_)) && count[r] == 1 && last_val[r] != 0.0;
                if singleton {
                    condensed.push(Condensed {
                        row: r,
                        col: last_col[r],
                        a: last_val[r],
                    });
                } else {
                    kkt_index[r] = next;
                    next += 1;
                }
            }
        }
        let dim = next;

        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(n + a.nnz() + m * 2);
        for j in 0..n {
            trip.push((j, j, 1.0));
        }
        for c in 0..n {
            for k in a.colptr[c]..a.colptr[c + 1] {
                let r = a.rowval[k];
                if kkt_index[r] != NONE {
                    trip.push((c, kkt_index[r], a.nzval[k]));
                }
            }
        }
        let mut h_entries = Vec::new();
        for (bi, b) in cone.blocks.iter().enumerate() {
            let off = cone.offsets[bi];
            match b {
                ConeBlock::Soc(d) => {
                    for lc in 0..*d {
                        for lr in 0..=lc {
                            let (kr, kc) = (kkt_index[off + lr], kkt_index[off + lc]);
                            trip.push((kr, kc, -1.0));
                            h_entries.push((kr, kc, bi, lr, lc));
                        }
                    }
                }
                _ => {
                    for l in 0..b.dim() {
                        let k = kkt_index[off + l];
                        if k != NONE {
                            trip.push((k, k, -1.0));
                            h_entries.push((k, k, bi, l, l));
                        }
                    }
                }
            }
        }
        let upper = CscMatrix::from_triplets(dim, dim, &trip);
        let pos = |r: usize, c: usize| -> usize {
            let range = upper.colptr[c]..upper.colptr[c + 1];
            range.start + upper.rowval[range].binary_search(&r).expect("pattern entry")
        };
        let diag_pos = (0..n).map(|j| pos(j, j)).collect();
        let h_pos = h_entries
            .iter()
            .map(|&(r, c, bi, lr, lc)| (pos(r, c), bi, lr, lc))
            .collect();
        let mut signs = vec![1.0; dim];
        for s in signs.iter_mut().skip(n) {
            *s = -1.0;
        }
        let factor = LdlFactor::new(&upper, &signs)?;
        let hcond = vec![1.0; condensed.len()];
        Ok(Self {
            n,
            m,
            condensed,
            kkt_index,
            dim,
            upper,
            diag_pos,
            h_pos,
            factor,
            static_reg: 1e-8,
            xdiag: vec![0.0; n],
            hblocks: vec![Vec::new(); cone.blocks.len()],
            hcond,
            work: vec![0.0; dim],
            resid: vec![0.0; dim],
            corr: vec![0.0; dim],
            refine_steps: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz_factor(&self) -> usize {
        self.factor.nnz_l()
    }

    /// Loads `P` (diagonal) and the cone scaling blocks and refactors.
    /// With `unit_scaling`, every non-zero cone block uses `H = I`.
    pub fn update(&mut self, pdiag: &[f64], cone: &ProductCone, unit_scaling: bool) -> Result<(), LdlError> {
        for (bi, b) in cone.blocks.iter().enumerate() {
            if unit_scaling {
                let d = b.dim();
                let h = &mut self.hblocks[bi];
                h.clear();
                match b {
                    ConeBlock::Zero(_) => h.resize(d, 0.0),
                    ConeBlock::NonNeg(_) => h.resize(d, 1.0),
                    ConeBlock::Soc(_) => {
                        h.resize(d * d, 0.0);
                        for k in 0..d {
                            h[k * d + k] = 1.0;
                        }
                    }
                }
            } else {
                cone.hessian_block(bi, &mut self.hblocks[bi]);
            }
        }
        self.xdiag.copy_from_slice(pdiag);
        for (i, c) in self.condensed.iter().enumerate() {
            let h = if unit_scaling { 1.0 } else { cone.nonneg_h(c.row) };
            self.hcond[i] = h;
            self.xdiag[c.col] += c.a * c.a / h;
        }

        let reg = self.static_reg;
        for j in 0..self.n {
            let p = self.diag_pos[j];
            self.upper.nzval[p] = self.xdiag[j] + reg;
        }
        for &(p, bi, lr, lc) in &self.h_pos {
            let d = cone.blocks[bi].dim();
            let mut v = match cone.blocks[bi] {
                ConeBlock::Soc(_) => -self.hblocks[bi][lr * d + lc],
                _ => -self.hblocks[bi][lr],
            };
            if lr == lc {
                v -= reg;
            }
            self.upper.nzval[p] = v;
        }
        self.factor.set_values(&self.upper.nzval);
        self.factor.factor(DynamicRegularization::default())
    }

    /// Unregularized product of the reduced KKT matrix.
    fn matvec(&self, a: &CscMatrix, cone: &ProductCone, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            out[j] = self.xdiag[j] * v[j];
        }
        for o in out[n..].iter_mut() {
            *o = 0.0;
        }
        for c in 0..n {
            let mut acc = 0.0;
            for k in a.colptr[c]..a.colptr[c + 1] {
                let ki = self.kkt_index[a.rowval[k]];
                if ki != NONE {
                    acc += a.nzval[k] * v[ki];
                    out[ki] += a.nzval[k] * v[c];
                }
            }
            out[c] += acc;
        }
        for (bi, b) in cone.blocks.iter().enumerate() {
            let off = cone.offsets[bi];
            let d = b.dim();
            let h = &self.hblocks[bi];
            match b {
                ConeBlock::Soc(_) => {
                    for r in 0..d {
                        let kr = self.kkt_index[off + r];
                        let mut acc = 0.0;
                        for c in 0..d {
                            acc += h[r * d + c] * v[self.kkt_index[off + c]];
                        }
                        out[kr] -= acc;
                    }
                }
                _ => {
                    for r in 0..d {
                        let kr = self.kkt_index[off + r];
                        if kr != NONE {
                            out[kr] -= h[r] * v[kr];
                        }
                    }
                }
            }
        }
    }

    /// Solves the full (uncondensed) system for right-hand sides `rx` (n) and
    /// `rz` (m), writing `dx`, `dz`.
    pub fn solve(
        &mut self,
        a: &CscMatrix,
        cone: &ProductCone,
        rx: &[f64],
        rz: &[f64],
        dx: &mut [f64],
        dz: &mut [f64],
    ) {
        let n = self.n;
        let mut rhs = vec![0.0; self.dim];
        rhs[..n].copy_from_slice(rx);
        for (i, c) in self.condensed.iter().enumerate() {
            rhs[c.col] += c.a * rz[c.row] / self.hcond[i];
        }
        for r in 0..self.m {
            let k = self.kkt_index[r];
            if k != NONE {
                rhs[k] = rz[r];
            }
        }

        let mut sol = rhs.clone();
        self.factor.solve(&mut sol);

        // iterative refinement against the unregularized matrix
        let bnorm = norm_inf(&rhs).max(1.0);
        self.refine_steps = 0;
        let mut work = std::mem::take(&mut self.work);
        let mut resid = std::mem::take(&mut self.resid);
        let mut corr = std::mem::take(&mut self.corr);
        self.matvec(a, cone, &sol, &mut work);
        for i in 0..self.dim {
            resid[i] = rhs[i] - work[i];
        }
        let mut err = norm_inf(&resid);
        for _ in 0..10 {
            if err <= 1e-13 * bnorm {
                break;
            }
            corr.copy_from_slice(&resid);
            self.factor.solve(&mut corr);
            let trial: Vec<f64> = sol.iter().zip(&corr).map(|(s, c)| s + c).collect();
            self.matvec(a, cone, &trial, &mut work);
            for i in 0..self.dim {
                work[i] = rhs[i] - work[i];
            }
            let new_err = norm_inf(&work);
            if new_err < err {
                sol = trial;
                std::mem::swap(&mut resid, &mut work);
                self.refine_steps += 1;
                // stop when progress stalls
                if new_err > 0.5 * err {
                    break;
                }
                err = new_err;
            } else {
                break;
            }
        }
        self.work = work;
        self.resid = resid;
        self.corr = corr;

        dx.copy_from_slice(&sol[..n]);
        for r in 0..self.m {
            let k = self.kkt_index[r];
            if k != NONE {
                dz[r] = sol[k];
            }
        }
        for (i, c) in self.condensed.iter().enumerate() {
            dz[c.row] = (c.a * dx[c.col] - rz[c.row]) / self.hcond[i];
        }
    }
}
