//! Sparse LDLᵀ factorization for quasi-definite KKT matrices.
//!
//! Up-looking factorization over an elimination tree, with a fill-reducing
//! approximate-minimum-degree ordering. Pivots are expected to carry a known
//! sign (positive for primal columns, negative for dual columns); pivots of the
//! wrong sign or too close to zero are replaced by a signed regularization
//! value, which is the usual treatment for interior-point KKT systems.

use super::sparse::CscMatrix;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LdlError {
    #[error("KKT matrix is not upper triangular (entry ({row},{col}))")]
    NotUpper { row: usize, col: usize },
    #[error("KKT matrix is missing diagonal entry {0}")]
    MissingDiagonal(usize),
    #[error("fill-reducing ordering failed")]
    Ordering,
    #[error("factorization produced a non-finite pivot at column {0}")]
    NonFinite(usize),
}

/// Settings for the signed pivot regularization.
#[derive(Debug, Clone, Copy)]
pub struct DynamicRegularization {
    pub eps: f64,
    pub delta: f64,
}

impl Default for DynamicRegularization {
    fn default() -> Self {
        Self {
            eps: 1e-13,
            delta: 2e-7,
        }
    }
}

/// Symbolic and numeric state of one factorization. The sparsity pattern is
/// fixed at construction; values may be refreshed and refactored repeatedly.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    /// Permuted upper-triangular matrix.
    kperm: CscMatrix,
    /// Position in `kperm.nzval` of every entry of the caller's matrix.
    map: Vec<usize>,
    signs: Vec<f64>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    // workspaces
    y_vals: Vec<f64>,
    y_idx: Vec<usize>,
    y_marks: Vec<bool>,
    elim_buf: Vec<usize>,
    next_space: Vec<usize>,
    perm_rhs: Vec<f64>,
    pub regularized_pivots: usize,
}

impl LdlFactor {
    /// `upper` must hold the upper triangle (including every diagonal) of a
    /// symmetric matrix. `signs[i]` is the expected sign of pivot `i`.
    pub fn new(upper: &CscMatrix, signs: &[f64]) -> Result<Self, LdlError> {
        let n = upper.ncols;
        assert_eq!(upper.nrows, n);
        assert_eq!(signs.len(), n);
        for c in 0..n {
            let range = upper.colptr[c]..upper.colptr[c + 1];
            if let Some(&r) = upper.rowval[range.clone()].iter().find(|&&r| r > c) {
                return Err(LdlError::NotUpper { row: r, col: c });
            }
            if upper.rowval[range].last() != Some(&c) {
                return Err(LdlError::MissingDiagonal(c));
            }
        }

        let (perm, iperm) = amd_order(upper)?;

        let mut triplets = Vec::with_capacity(upper.nnz());
        for c in 0..n {
            for k in upper.colptr[c]..upper.colptr[c + 1] {
                let (a, b) = (iperm[upper.rowval[k]], iperm[c]);
                triplets.push((a.min(b), a.max(b), upper.nzval[k]));
            }
        }
        let kperm = CscMatrix::from_triplets(n, n, &triplets);
        let map: Vec<usize> = triplets
            .iter()
            .map(|&(r, c, _)| {
                let range = kperm.colptr[c]..kperm.colptr[c + 1];
                range.start + kperm.rowval[range].binary_search(&r).expect("entry present")
            })
            .collect();
        let psigns: Vec<f64> = perm.iter().map(|&p| signs[p]).collect();

        let (etree, lnz) = elimination_tree(&kperm);
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz_l = lp[n];

        Ok(Self {
            n,
            perm,
            kperm,
            map,
            signs: psigns,
            etree,
            lp,
            li: vec![0; nnz_l],
            lx: vec![0.0; nnz_l],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            y_vals: vec![0.0; n],
            y_idx: vec![0; n],
            y_marks: vec![false; n],
            elim_buf: vec![0; n],
            next_space: vec![0; n],
            perm_rhs: vec![0.0; n],
            regularized_pivots: 0,
        })
    }

    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    pub fn set_values(&mut self, vals: &[f64]) {
        for (k, &v) in vals.iter().enumerate() {
            self.kperm.nzval[self.map[k]] = v;
        }
    }

    /// Numeric factorization of the current values.
    pub fn factor(&mut self, reg: DynamicRegularization) -> Result<(), LdlError> {
        let n = self.n;
        let a = &self.kperm;
        self.regularized_pivots = 0;
        for i in 0..n {
            self.next_space[i] = self.lp[i];
            self.y_marks[i] = false;
            self.y_vals[i] = 0.0;
        }

        for k in 0..n {
            let mut nnz_y = 0usize;
            self.d[k] = 0.0;
            for p in a.colptr[k]..a.colptr[k + 1] {
                let bidx = a.rowval[p];
                if bidx == k {
                    self.d[k] = a.nzval[p];
                    continue;
                }
                self.y_vals[bidx] = a.nzval[p];
                if !self.y_marks[bidx] {
                    self.y_marks[bidx] = true;
                    self.elim_buf[0] = bidx;
                    let mut nnz_e = 1usize;
                    let mut next = self.etree[bidx];
                    while next != NONE && next < k {
                        if self.y_marks[next] {
                            break;
                        }
                        self.y_marks[next] = true;
                        self.elim_buf[nnz_e] = next;
                        nnz_e += 1;
                        next = self.etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        self.y_idx[nnz_y] = self.elim_buf[nnz_e];
                        nnz_y += 1;
                    }
                }
            }

            for i in (0..nnz_y).rev() {
                let c = self.y_idx[i];
                let tmp = self.next_space[c];
                let yc = self.y_vals[c];
                for j in self.lp[c]..tmp {
                    self.y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[tmp] = k;
                let l = yc * self.dinv[c];
                self.lx[tmp] = l;
                self.d[k] -= yc * l;
                self.next_space[c] += 1;
                self.y_vals[c] = 0.0;
                self.y_marks[c] = false;
            }

            if !self.d[k].is_finite() {
                return Err(LdlError::NonFinite(k));
            }
            let s = self.signs[k];
            if s * self.d[k] <= reg.eps {
                self.d[k] = s * reg.delta;
                self.regularized_pivots += 1;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(())
    }

    /// Solves K x = b in place.
    pub fn solve(&mut self, b: &mut [f64]) {
        let n = self.n;
        let x = &mut self.perm_rhs;
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for j in self.lp[i]..self.lp[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[i] = acc;
        }
        for i in 0..n {
            b[self.perm[i]] = x[i];
        }
    }

    /// Inertia of the last factorization as (positive, negative) pivot counts.
    #[cfg(test)]
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&d| d > 0.0).count();
        (pos, self.n - pos)
    }
}

fn amd_order(upper: &CscMatrix) -> Result<(Vec<usize>, Vec<usize>), LdlError> {
    let n = upper.ncols;
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let ap: Vec<isize> = upper.colptr.iter().map(|&v| v as isize).collect();
    let ai: Vec<isize> = upper.rowval.iter().map(|&v| v as isize).collect();
    let (p, pinv, _) = amd::order(n as isize, &ap, &ai, &amd::Control::default())
        .map_err(|_| LdlError::Ordering)?;
    Ok((
        p.into_iter().map(|v| v as usize).collect(),
        pinv.into_iter().map(|v| v as usize).collect(),
    ))
}

/// Elimination tree and column counts of L for an upper-triangular pattern.
fn elimination_tree(a: &CscMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = a.ncols;
    let mut work = vec![NONE; n];
    let mut lnz = vec![0usize; n];
    let mut etree = vec![NONE; n];
    for j in 0..n {
        work[j] = j;
        for p in a.colptr[j]..a.colptr[j + 1] {
            let mut i = a.rowval[p];
            while work[i] != j {
                if etree[i] == NONE {
                    etree[i] = j;
                }
                lnz[i] += 1;
                work[i] = j;
                i = etree[i];
            }
        }
    }
    (etree, lnz)
}
