//! Presolve for [`ConicProblem`]: removes fixed variables, turns singleton
//! linear rows into bounds, drops empty rows.
//!
//! Every reduction is recorded so that row duals and infeasibility
//! certificates of the reduced problem can be mapped back to rows of the
//! original problem.

use super::sparse::CscMatrix;
use super::{ConeKind, ConicProblem};

/// Where a variable bound came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum BoundSource {
    Original,
    /// Row `row` of the original problem, `coef * x + rest >= 0` (or `= 0`).
    Row { row: usize, coef: f64, equality: bool },
}

#[derive(Debug, Clone)]
pub(crate) struct Presolved {
    pub reduced: ConicProblem,
    /// Original column -> reduced column.
    pub col_map: Vec<Option<usize>>,
    /// Original row -> reduced row.
    pub row_map: Vec<Option<usize>>,
    /// Final bounds in the original column space.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower_src: Vec<BoundSource>,
    pub upper_src: Vec<BoundSource>,
    /// Columns in the order their bounds were last tightened by a row.
    pub tightened: Vec<usize>,
    pub removed_cols: usize,
    pub removed_rows: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum PresolveOutcome {
    Reduced(Presolved),
    /// Infeasible, with a certificate over the original rows.
    Infeasible(Vec<f64>),
}

const FIX_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

pub(crate) fn presolve(prob: &ConicProblem) -> PresolveOutcome {
    let n = prob.num_vars();
    let m = prob.num_rows();
    let a = &prob.rows;
    let at = a.transpose(); // rows as columns
    let row_kind = prob.row_kinds();

    let mut lower = prob.lower.clone();
    let mut upper = prob.upper.clone();
    for j in 0..n {
        if lower[j] < -1e20 {
            lower[j] = f64::NEG_INFINITY;
        }
        if upper[j] > 1e20 {
            upper[j] = f64::INFINITY;
        }
    }
    let mut lower_src = vec![BoundSource::Original; n];
    let mut upper_src = vec![BoundSource::Original; n];
    let mut fixed = vec![false; n];
    let mut row_alive = vec![true; m];
    let mut row_count: Vec<usize> = (0..m).map(|r| at.colptr[r + 1] - at.colptr[r]).collect();
    let mut tightened: Vec<usize> = Vec::new();

    // columns whose bounds cross: infeasible (certificate from sources)
    let crossing = |j: usize, lower: &[f64], upper: &[f64]| lower[j] > upper[j] + FEAS_TOL * (1.0 + upper[j].abs().min(lower[j].abs()));

    let mut queue: Vec<usize> = (0..m)
        .filter(|&r| row_count[r] <= 1 && row_kind[r].0.is_linear())
        .collect();
    let mut fix_queue: Vec<usize> = (0..n)
        .filter(|&j| lower[j].is_finite() && (upper[j] - lower[j]).abs() <= FIX_TOL * (1.0 + lower[j].abs()))
        .collect();

    for &j in &fix_queue {
        if crossing(j, &lower, &upper) {
            return infeasible_from_crossing(prob, j, &lower_src, &upper_src, &tightened);
        }
    }

    loop {
        while let Some(j) = fix_queue.pop() {
            if fixed[j] {
                continue;
            }
            fixed[j] = true;
            for k in a.colptr[j]..a.colptr[j + 1] {
                let r = a.rowval[k];
                row_count[r] -= 1;
                if row_count[r] <= 1 && row_alive[r] && row_kind[r].0.is_linear() {
                    queue.push(r);
                }
            }
        }
        let Some(r) = queue.pop() else { break };
        if !row_alive[r] {
            continue;
        }
        // find the remaining free entry, accumulate the constant
        let mut constant = prob.row_const[r];
        let mut free: Option<(usize, f64)> = None;
        for k in at.colptr[r]..at.colptr[r + 1] {
            let j = at.rowval[k];
            let v = at.nzval[k];
            if fixed[j] {
                constant += v * lower[j];
            } else if v != 0.0 {
                free = Some((j, v));
            }
        }
        let equality = row_kind[r].0 == ConeKind::Zero;
        match free {
            None => {
                let ok = if equality {
                    constant.abs() <= FEAS_TOL * (1.0 + row_abs_scale(&at, r, &lower))
                } else {
                    constant >= -FEAS_TOL * (1.0 + row_abs_scale(&at, r, &lower))
                };
                if !ok {
                    let mut y = vec![0.0; m];
                    y[r] = if equality { -constant.signum() } else { 1.0 };
                    return PresolveOutcome::Infeasible(finish_certificate(
                        prob, y, &lower_src, &upper_src, &tightened,
                    ));
                }
                row_alive[r] = false;
            }
            Some((j, coef)) => {
                // coef x + constant (>=|=) 0
                let bound = -constant / coef;
                let src = BoundSource::Row {
                    row: r,
                    coef,
                    equality,
                };
                let mut changed = false;
                if equality || coef > 0.0 {
                    if bound > lower[j] {
                        lower[j] = bound;
                        lower_src[j] = src;
                        changed = true;
                    }
                }
                if equality || coef < 0.0 {
                    if bound < upper[j] {
                        upper[j] = bound;
                        upper_src[j] = src;
                        changed = true;
                    }
                }
                if changed {
                    tightened.retain(|&c| c != j);
                    tightened.push(j);
                }
                row_alive[r] = false;
                if crossing(j, &lower, &upper) {
                    return infeasible_from_crossing(prob, j, &lower_src, &upper_src, &tightened);
                }
                if lower[j].is_finite() && (upper[j] - lower[j]).abs() <= FIX_TOL * (1.0 + lower[j].abs()) {
                    // snap to a single value
                    if upper[j] < lower[j] {
                        upper[j] = lower[j];
                    }
                    let v = 0.5 * (lower[j] + upper[j]);
                    lower[j] = v;
                    upper[j] = v;
                    fix_queue.push(j);
                }
            }
        }
    }

    // Conic blocks whose rows are all constant: check membership and drop.
    let offsets = prob.cone_offsets();
    let mut block_alive = vec![true; prob.cones.len()];
    for (bi, cs) in prob.cones.iter().enumerate() {
        if cs.kind.is_linear() {
            continue;
        }
        let off = offsets[bi];
        if (off..off + cs.dim).any(|r| row_count[r] > 0) {
            continue;
        }
        let vals: Vec<f64> = (off..off + cs.dim)
            .map(|r| {
                let mut c = prob.row_const[r];
                for k in at.colptr[r]..at.colptr[r + 1] {
                    c += at.nzval[k] * lower[at.rowval[k]];
                }
                c
            })
            .collect();
        match super::certificate::separating_dual(cs.kind, &vals, FEAS_TOL) {
            None => {
                block_alive[bi] = false;
                for r in off..off + cs.dim {
                    row_alive[r] = false;
                }
            }
            Some(ysep) => {
                let mut y = vec![0.0; m];
                y[off..off + cs.dim].copy_from_slice(&ysep);
                return PresolveOutcome::Infeasible(finish_certificate(prob, y, &lower_src, &upper_src, &tightened));
            }
        }
    }

    // assemble the reduced problem
    let mut col_map = vec![None; n];
    let mut nn = 0;
    for j in 0..n {
        if !fixed[j] {
            col_map[j] = Some(nn);
            nn += 1;
        }
    }
    let mut row_map = vec![None; m];
    let mut cones = Vec::new();
    let mut mm = 0;
    for (bi, cs) in prob.cones.iter().enumerate() {
        let off = offsets[bi];
        if cs.kind.is_linear() {
            // linear blocks split row by row
            let mut run = 0;
            for r in off..off + cs.dim {
                if row_alive[r] {
                    row_map[r] = Some(mm);
                    mm += 1;
                    run += 1;
                }
            }
            if run > 0 {
                cones.push(super::ConeSpec { kind: cs.kind, dim: run });
            }
        } else if block_alive[bi] {
            for r in off..off + cs.dim {
                row_map[r] = Some(mm);
                mm += 1;
            }
            cones.push(*cs);
        }
    }

    let mut trip = Vec::with_capacity(a.nnz());
    let mut row_const = vec![0.0; mm];
    for r in 0..m {
        if let Some(rr) = row_map[r] {
            row_const[rr] = prob.row_const[r];
        }
    }
    let mut constant = prob.constant;
    for j in 0..n {
        if fixed[j] {
            let v = lower[j];
            constant += 0.5 * prob.quad[j] * v * v + prob.lin[j] * v;
            for k in a.colptr[j]..a.colptr[j + 1] {
                if let Some(rr) = row_map[a.rowval[k]] {
                    row_const[rr] += a.nzval[k] * v;
                }
            }
        } else {
            let jj = col_map[j].unwrap();
            for k in a.colptr[j]..a.colptr[j + 1] {
                if let Some(rr) = row_map[a.rowval[k]] {
                    trip.push((rr, jj, a.nzval[k]));
                }
            }
        }
    }
    let keep = |v: &Vec<f64>| -> Vec<f64> { (0..n).filter(|&j| !fixed[j]).map(|j| v[j]).collect() };
    let reduced = ConicProblem {
        lower: keep(&lower),
        upper: keep(&upper),
        quad: keep(&prob.quad),
        lin: keep(&prob.lin),
        constant,
        rows: CscMatrix::from_triplets(mm, nn, &trip),
        row_const,
        cones,
    };
    let removed_rows = m - mm;
    PresolveOutcome::Reduced(Presolved {
        reduced,
        col_map,
        row_map,
        lower,
        upper,
        lower_src,
        upper_src,
        tightened,
        removed_cols: n - nn,
        removed_rows,
    })
}

fn row_abs_scale(at: &CscMatrix, r: usize, vals: &[f64]) -> f64 {
    let mut s: f64 = 0.0;
    for k in at.colptr[r]..at.colptr[r + 1] {
        s = s.max((at.nzval[k] * vals[at.rowval[k]]).abs());
    }
    s
}

fn infeasible_from_crossing(
    prob: &ConicProblem,
    j: usize,
    lower_src: &[BoundSource],
    upper_src: &[BoundSource],
    tightened: &[usize],
) -> PresolveOutcome {
    let m = prob.num_rows();
    let mut y = vec![0.0; m];
    // a multiplier giving coefficient +1 on x_j from the lower-bound row, or
    // -1 from the upper-bound row; the other side is then cancelled or
    // evaluated on the original box.
    match (lower_src[j], upper_src[j]) {
        (BoundSource::Row { row, coef, .. }, _) => y[row] += 1.0 / coef,
        (_, BoundSource::Row { row, coef, .. }) => y[row] += -1.0 / coef,
        _ => {
            // original bounds already cross; no row is involved
            return PresolveOutcome::Infeasible(y);
        }
    }
    PresolveOutcome::Infeasible(finish_certificate(prob, y, lower_src, upper_src, tightened))
}

/// Cancels, in reverse tightening order, the certificate coefficient of every
/// column whose relevant bound came from a row, by adding that row with the
/// admissible multiplier. The result certifies infeasibility against the
/// original box.
pub(crate) fn finish_certificate(
    prob: &ConicProblem,
    mut y: Vec<f64>,
    lower_src: &[BoundSource],
    upper_src: &[BoundSource],
    tightened: &[usize],
) -> Vec<f64> {
    let mut g = vec![0.0; prob.num_vars()];
    prob.rows.gemv_t(1.0, &y, &mut g);
    let at = prob.rows.transpose();
    for &j in tightened.iter().rev() {
        let gj = g[j];
        if gj == 0.0 {
            continue;
        }
        // expression max over the box uses the upper bound when gj > 0
        let src = if gj > 0.0 { upper_src[j] } else { lower_src[j] };
        if let BoundSource::Row { row, coef, equality } = src {
            let mult = -gj / coef;
            if equality || mult >= 0.0 {
                y[row] += mult;
                for k in at.colptr[row]..at.colptr[row + 1] {
                    g[at.rowval[k]] += mult * at.nzval[k];
                }
            }
        }
    }
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        for v in y.iter_mut() {
            *v /= scale;
        }
    }
    y
}

/// Maps row duals of the reduced problem back, assigning multipliers to
/// rows that were turned into bounds.
pub(crate) fn recover_duals(prob: &ConicProblem, pre: &Presolved, x: &[f64], y_reduced: &[f64]) -> Vec<f64> {
    let m = prob.num_rows();
    let mut y = vec![0.0; m];
    for r in 0..m {
        if let Some(rr) = pre.row_map[r] {
            y[r] = y_reduced[rr];
        }
    }
    // g = A^T y - grad f, cancelled through row-derived bounds
    let mut g = vec![0.0; prob.num_vars()];
    prob.rows.gemv_t(1.0, &y, &mut g);
    for j in 0..g.len() {
        g[j] -= prob.quad[j] * x[j] + prob.lin[j];
    }
    let at = prob.rows.transpose();
    for &j in pre.tightened.iter().rev() {
        let gj = g[j];
        if gj == 0.0 {
            continue;
        }
        // g = mu_upper - mu_lower
        let src = if gj > 0.0 { pre.upper_src[j] } else { pre.lower_src[j] };
        if let BoundSource::Row { row, coef, equality } = src {
            let mult = -gj / coef;
            if equality || mult >= 0.0 {
                y[row] += mult;
                for k in at.colptr[row]..at.colptr[row + 1] {
                    g[at.rowval[k]] += mult * at.nzval[k];
                }
            }
        }
    }
    y
}
