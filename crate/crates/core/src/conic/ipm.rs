//! Primal-dual interior-point method on the homogeneous self-dual embedding
//!
//! ```text
//!   min  ½ xᵀPx + qᵀx   s.t.  Ax + s = b,  s ∈ K
//! ```
//!
//! with `P` diagonal and `K` a product of zero, nonnegative and second-order
//! cones. The embedding adds the scalars τ, κ so that the iterates converge
//! either to a scaled optimal pair (τ > 0) or to an infeasibility
//! certificate (τ → 0). Search directions use Nesterov–Todd scaling and a
//! Mehrotra predictor-corrector.

use super::cones::{ConeBlock, ProductCone};
use super::kkt::KktSolver;
use super::sparse::{dot, norm_inf, CscMatrix};
use super::IterationRecord;

#[derive(Debug, Clone)]
pub(crate) struct StdForm {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub blocks: Vec<ConeBlock>,
    /// Rows `>= real_rows` are variable-bound rows.
    pub real_rows: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub obj_const: f64,
}

/// Infeasibility ratio accepted when the iteration stalls.
const REDUCED_INFEAS_TOL: f64 = 5e-5;

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_feas: f64,
    pub eps_infeas: f64,
    pub step_fraction: f64,
    pub ruiz_iters: usize,
    pub record_dual_bound: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Solved,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    Numerical,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: IpmStatus,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Dual direction of the last iterate of a stalled run, for the caller
    /// to test as an infeasibility certificate.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
}

struct Scaling {
    d: Vec<f64>,
    e: Vec<f64>,
    c: f64,
}

fn equilibrate(p: &mut [f64], q: &mut [f64], a: &mut CscMatrix, b: &mut [f64], cone: &ProductCone, iters: usize) -> Scaling {
    let (n, m) = (a.ncols, a.nrows);
    let mut d = vec![1.0; n];
    let mut e = vec![1.0; m];
    let clip = |v: f64| v.clamp(1e-4, 1e4);
    for _ in 0..iters {
        let colmax = a.col_norms_inf();
        let rowmax = a.row_norms_inf();
        let dd: Vec<f64> = (0..n)
            .map(|j| {
                let nrm = colmax[j].max(p[j].abs());
                if nrm < 1e-8 {
                    1.0
                } else {
                    clip(1.0 / nrm.sqrt())
                }
            })
            .collect();
        let mut ee: Vec<f64> = rowmax
            .iter()
            .map(|&nrm| if nrm < 1e-8 { 1.0 } else { clip(1.0 / nrm.sqrt()) })
            .collect();
        for (bi, blk) in cone.blocks.iter().enumerate() {
            if let ConeBlock::Soc(dim) = blk {
                let off = cone.offsets[bi];
                let mean = ee[off..off + dim].iter().sum::<f64>() / *dim as f64;
                ee[off..off + dim].fill(mean);
            }
        }
        a.scale(&ee, &dd);
        for j in 0..n {
            p[j] *= dd[j] * dd[j];
            d[j] *= dd[j];
        }
        for i in 0..m {
            e[i] *= ee[i];
        }
    }
    for j in 0..n {
        q[j] *= d[j];
    }
    for i in 0..m {
        b[i] *= e[i];
    }
    let pmean = if n > 0 { p.iter().map(|v| v.abs()).sum::<f64>() / n as f64 } else { 0.0 };
    let c = (1.0 / pmean.max(norm_inf(q)).max(1e-12)).clamp(1e-4, 1e4);
    for j in 0..n {
        p[j] *= c;
        q[j] *= c;
    }
    Scaling { d, e, c }
}

pub(crate) fn solve(data: &StdForm, settings: &IpmSettings) -> IpmResult {
    let n = data.q.len();
    let m = data.b.len();
    let mut cone = ProductCone::new(data.blocks.clone());
    let mut p = data.p.clone();
    let mut q = data.q.clone();
    let mut a = data.a.clone();
    let mut b = data.b.clone();
    let sc = equilibrate(&mut p, &mut q, &mut a, &mut b, &cone, settings.ruiz_iters);

    let mut log = Vec::new();
    let fail = |status: IpmStatus, log: Vec<IterationRecord>| IpmResult {
        status,
        x: vec![f64::NAN; n],
        z: vec![f64::NAN; m],
        ray: None,
        iterations: 0,
        log,
    };

    let mut kkt = match KktSolver::new(&a, &cone) {
        Ok(k) => k,
        Err(_) => return fail(IpmStatus::Numerical, log),
    };
    log::debug!(
        "ipm: n={n} m={m} kkt_dim={} nnz(L)={}",
        kkt.dim(),
        kkt.nnz_factor()
    );

    // initial point
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; m];
    let mut s = vec![0.0; m];
    if kkt.update(&p, &cone, true).is_err() {
        return fail(IpmStatus::Numerical, log);
    }
    let zeros_n = vec![0.0; n];
    let zeros_m = vec![0.0; m];
    let mut tmp_z = vec![0.0; m];
    kkt.solve(&a, &cone, &zeros_n, &b, &mut x, &mut tmp_z);
    for i in 0..m {
        s[i] = -tmp_z[i];
    }
    cone.shift_to_interior(&mut s, true);
    let neg_q: Vec<f64> = q.iter().map(|v| -v).collect();
    let mut tmp_x = vec![0.0; n];
    kkt.solve(&a, &cone, &neg_q, &zeros_m, &mut tmp_x, &mut z);
    cone.shift_to_interior(&mut z, false);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let nu = cone.degree as f64;
    let mut rx = vec![0.0; n];
    let mut rz = vec![0.0; m];
    let mut px = vec![0.0; n];
    let mut x1 = vec![0.0; n];
    let mut z1 = vec![0.0; m];
    let mut x2 = vec![0.0; n];
    let mut z2 = vec![0.0; m];
    let mut dx = vec![0.0; n];
    let mut dz = vec![0.0; m];
    let mut ds = vec![0.0; m];
    let mut dsv = vec![0.0; m];
    let mut w1 = vec![0.0; m];
    let mut w2 = vec![0.0; m];
    let mut rhs_x = vec![0.0; n];
    let mut rhs_z = vec![0.0; m];
    let mut e_id = vec![0.0; m];
    cone.identity(&mut e_id);

    let mut status;
    let mut metrics;
    // best primal infeasibility ray seen so far, as (ratio, z)
    let mut best_ray: Option<(f64, Vec<f64>)> = None;
    // best iterate by the optimality measure, as (measure, x, s, z, tau)
    let mut best_point: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;
    let mut iter = 0;
    let mut last_alpha = 1.0;
    let mut prev_best = f64::INFINITY;
    let mut stall = 0usize;
    loop {
        // residuals
        for j in 0..n {
            px[j] = p[j] * x[j];
        }
        for j in 0..n {
            rx[j] = px[j] + q[j] * tau;
        }
        a.gemv_t(1.0, &z, &mut rx);
        for i in 0..m {
            rz[i] = s[i] - b[i] * tau;
        }
        a.gemv(1.0, &x, &mut rz);
        let xpx = dot(&x, &px);
        let r_tau = dot(&q, &x) + dot(&b, &z) + kappa + xpx / tau;
        let mu = (dot(&s, &z) + tau * kappa) / (nu + 1.0);

        metrics = compute_metrics(data, &sc, &x, &s, &z, tau);
        let dual_bound = if settings.record_dual_bound {
            lagrangian_bound(data, &sc, &z, tau)
        } else {
            f64::NAN
        };
        log.push(IterationRecord {
            iteration: iter,
            primal_objective: metrics.pobj + data.obj_const,
            dual_objective: metrics.dobj + data.obj_const,
            primal_residual: metrics.res_p,
            dual_residual: metrics.res_d,
            gap: metrics.gap_abs,
            mu,
            tau,
            kappa,
            step: last_alpha,
            dual_bound: dual_bound + data.obj_const,
        });
        log::trace!(
            "iter {iter:3} pobj {:+.8e} dobj {:+.8e} pres {:.2e} dres {:.2e} gap {:.2e} mu {:.2e} tau {:.2e} kappa {:.2e}",
            metrics.pobj, metrics.dobj, metrics.res_p, metrics.res_d, metrics.gap_abs, mu, tau, kappa
        );

        if metrics.res_p <= settings.eps_feas
            && metrics.res_d <= settings.eps_feas
            && (metrics.gap_abs <= settings.eps_abs || metrics.gap_rel <= settings.eps_rel)
        {
            status = IpmStatus::Solved;
            break;
        }
        let infeas = primal_infeasibility_ratio(data, &sc, &z, settings.eps_infeas);
        log::trace!("iter {iter:3} infeasibility ratio {infeas:?}");
        if infeas.is_some_and(|r| r <= settings.eps_infeas) {
            status = IpmStatus::PrimalInfeasible;
            break;
        }
        if let Some(r) = infeas {
            if best_ray.as_ref().map_or(true, |b| r < b.0) {
                best_ray = Some((r, z.clone()));
            }
        }
        if dual_infeasible(data, &sc, &x, &s, settings.eps_infeas) {
            status = IpmStatus::DualInfeasible;
            break;
        }
        if iter >= settings.max_iter {
            status = IpmStatus::MaxIterations;
            break;
        }
        // stall detection on the combined optimality measure
        let optimality = metrics.res_p.max(metrics.res_d).max(metrics.gap_rel.min(metrics.gap_abs));
        if best_point.as_ref().map_or(true, |b| optimality < b.0) {
            best_point = Some((optimality, x.clone(), s.clone(), z.clone(), tau));
        }
        let progress = optimality.min(infeas.unwrap_or(f64::INFINITY));
        if progress < 0.9 * prev_best {
            prev_best = progress;
            stall = 0;
        } else {
            stall += 1;
            if stall > 12 {
                log::debug!("no progress for {stall} iterations");
                status = IpmStatus::Numerical;
                break;
            }
        }

        iter += 1;
        if !cone.update_scaling(&s, &z) {
            log::debug!("iterate left the cone interior");
            status = IpmStatus::Numerical;
            break;
        }
        if kkt.update(&p, &cone, false).is_err() {
            log::debug!("factorization failed");
            status = IpmStatus::Numerical;
            break;
        }

        // constant system
        kkt.solve(&a, &cone, &neg_q, &b, &mut x1, &mut z1);
        let xi: Vec<f64> = x.iter().map(|v| v / tau).collect();
        let qp2: Vec<f64> = (0..n).map(|j| q[j] + 2.0 * p[j] * xi[j]).collect();
        let xi_p_xi: f64 = (0..n).map(|j| p[j] * xi[j] * xi[j]).sum();
        let denom = dot(&qp2, &x1) + dot(&b, &z1) - xi_p_xi - kappa / tau;

        // one pass for the affine direction, one for the combined direction
        let lam = cone.lambda.clone();
        let mut step = Step::default();
        let mut sigma = 0.0;
        let mut affine: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
        for pass in 0..2 {
            // d_s
            cone.circ(&lam, &lam, &mut dsv);
            let mut d_kappa = tau * kappa;
            if let Some((ds_a, dz_a, dtau_a, dkappa_a)) = &affine {
                cone.mul_winv(ds_a, &mut w1);
                cone.mul_w(dz_a, &mut w2);
                let mut corr = vec![0.0; m];
                cone.circ(&w1, &w2, &mut corr);
                for i in 0..m {
                    dsv[i] += corr[i] - sigma * mu * e_id[i];
                }
                d_kappa += dtau_a * dkappa_a - sigma * mu;
            }
            let resid_scale = 1.0 - sigma;
            // rhs
            cone.lambda_inv_circ(&dsv, &mut w1);
            cone.mul_w(&w1, &mut w2); // W (lambda \ d_s)
            for j in 0..n {
                rhs_x[j] = -resid_scale * rx[j];
            }
            for i in 0..m {
                rhs_z[i] = -resid_scale * rz[i] + w2[i];
            }
            kkt.solve(&a, &cone, &rhs_x, &rhs_z, &mut x2, &mut z2);
            let num = -resid_scale * r_tau + d_kappa / tau - dot(&qp2, &x2) - dot(&b, &z2);
            let dtau = num / denom;
            for j in 0..n {
                dx[j] = x2[j] + dtau * x1[j];
            }
            for i in 0..m {
                dz[i] = z2[i] + dtau * z1[i];
            }
            // ds = -W (lambda \ d_s) - W W dz
            cone.mul_w(&dz, &mut w1);
            let mut wwdz = vec![0.0; m];
            cone.mul_w(&w1, &mut wwdz);
            for i in 0..m {
                ds[i] = -w2[i] - wwdz[i];
            }
            let dkappa = -(d_kappa + kappa * dtau) / tau;

            let mut alpha = cone.max_step(&s, &ds, 1.0).min(cone.max_step(&z, &dz, 1.0));
            if dtau < 0.0 {
                alpha = alpha.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                alpha = alpha.min(-kappa / dkappa);
            }
            if pass == 0 {
                sigma = (1.0 - alpha).powi(3);
                affine = Some((ds.clone(), dz.clone(), dtau, dkappa));
            } else {
                step = Step {
                    alpha: (settings.step_fraction * alpha).min(1.0),
                    dtau,
                    dkappa,
                };
            }
        }
        let alpha = step.alpha;
        last_alpha = alpha;
        if !(alpha > 1e-10) {
            log::debug!("step length {alpha:e}");
            status = IpmStatus::Numerical;
            break;
        }
        for j in 0..n {
            x[j] += alpha * dx[j];
        }
        for i in 0..m {
            s[i] += alpha * ds[i];
            z[i] += alpha * dz[i];
        }
        tau += alpha * step.dtau;
        kappa += alpha * step.dkappa;
        // keep zero-cone slacks exactly zero
        for (bi, blk) in cone.blocks.iter().enumerate() {
            if let ConeBlock::Zero(d) = blk {
                let off = cone.offsets[bi];
                s[off..off + d].fill(0.0);
            }
        }
    }

    // a stalled run whose dual ray is nearly a certificate reports it; the
    // caller re-checks the certificate on the original problem
    if matches!(status, IpmStatus::Numerical | IpmStatus::MaxIterations) {
        if let Some((r, zb)) = best_ray {
            if r <= REDUCED_INFEAS_TOL {
                z = zb;
                status = IpmStatus::PrimalInfeasible;
            }
        }
    }
    // otherwise a stalled run returns its best iterate
    let mut ray = None;
    if matches!(status, IpmStatus::Numerical | IpmStatus::MaxIterations) {
        ray = Some(unscale(&sc, &x, &s, &z, 1.0).2);
        if let Some((_, xb, sb, zb, tb)) = best_point {
            x = xb;
            s = sb;
            z = zb;
            tau = tb;
        }
    }

    // unscale
    let (xo, _, zo) = match status {
        IpmStatus::PrimalInfeasible | IpmStatus::DualInfeasible => unscale(&sc, &x, &s, &z, 1.0),
        _ => unscale(&sc, &x, &s, &z, tau),
    };
    IpmResult {
        status,
        x: xo,
        z: zo,
        ray,
        iterations: iter,
        log,
    }
}

#[derive(Default, Clone, Copy)]
struct Step {
    alpha: f64,
    dtau: f64,
    dkappa: f64,
}

#[derive(Default, Clone, Copy, Debug)]
struct Metrics {
    pobj: f64,
    dobj: f64,
    res_p: f64,
    res_d: f64,
    gap_abs: f64,
    gap_rel: f64,
}

fn unscale(sc: &Scaling, x: &[f64], s: &[f64], z: &[f64], tau: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let xo = x.iter().zip(&sc.d).map(|(v, d)| v * d / tau).collect();
    let so = s.iter().zip(&sc.e).map(|(v, e)| v / e / tau).collect();
    let zo = z.iter().zip(&sc.e).map(|(v, e)| v * e / (sc.c * tau)).collect();
    (xo, so, zo)
}

/// Optimality measures of the normalized iterate, in the original scaling.
fn compute_metrics(data: &StdForm, sc: &Scaling, x: &[f64], s: &[f64], z: &[f64], tau: f64) -> Metrics {
    let (xo, so, zo) = unscale(sc, x, s, z, tau);
    let n = xo.len();
    let m = so.len();
    let px: Vec<f64> = (0..n).map(|j| data.p[j] * xo[j]).collect();
    let mut ax = vec![0.0; m];
    data.a.gemv(1.0, &xo, &mut ax);
    let mut atz = vec![0.0; n];
    data.a.gemv_t(1.0, &zo, &mut atz);
    let xpx = dot(&xo, &px);
    let pobj = 0.5 * xpx + dot(&data.q, &xo);
    let dobj = -0.5 * xpx - dot(&data.b, &zo);

    let mut rp: f64 = 0.0;
    for i in 0..m {
        rp = rp.max((ax[i] + so[i] - data.b[i]).abs());
    }
    let mut rd: f64 = 0.0;
    for j in 0..n {
        rd = rd.max((px[j] + atz[j] + data.q[j]).abs());
    }
    let res_p = rp / (1.0 + norm_inf(&data.b).max(norm_inf(&ax)).max(norm_inf(&so)));
    let res_d = rd / (1.0 + norm_inf(&data.q).max(norm_inf(&px)).max(norm_inf(&atz)));
    let gap_abs = (pobj - dobj).abs();
    let gap_rel = gap_abs / (1.0 + pobj.abs().min(dobj.abs()));
    Metrics {
        pobj,
        dobj,
        res_p,
        res_d,
        gap_abs,
        gap_rel,
    }
}

/// `‖Aᵀz‖ / (−bᵀz)` for the normalized dual iterate, when `bᵀz < −eps`.
fn primal_infeasibility_ratio(data: &StdForm, sc: &Scaling, z: &[f64], eps: f64) -> Option<f64> {
    let zo: Vec<f64> = z.iter().zip(&sc.e).map(|(v, e)| v * e).collect();
    let scale = norm_inf(&zo);
    if scale <= 0.0 {
        return None;
    }
    let btz = dot(&data.b, &zo) / scale;
    if btz >= -eps {
        return None;
    }
    let mut atz = vec![0.0; data.q.len()];
    data.a.gemv_t(1.0 / scale, &zo, &mut atz);
    Some(norm_inf(&atz) / (-btz))
}

fn dual_infeasible(data: &StdForm, sc: &Scaling, x: &[f64], s: &[f64], eps: f64) -> bool {
    let xo: Vec<f64> = x.iter().zip(&sc.d).map(|(v, d)| v * d).collect();
    let scale = norm_inf(&xo);
    if scale <= 0.0 {
        return false;
    }
    let qtx = dot(&data.q, &xo) / scale;
    if qtx >= -eps {
        return false;
    }
    let px: Vec<f64> = (0..xo.len()).map(|j| data.p[j] * xo[j] / scale).collect();
    let mut r: Vec<f64> = s.iter().zip(&sc.e).map(|(v, e)| v / e / scale).collect();
    data.a.gemv(1.0 / scale, &xo, &mut r);
    norm_inf(&px) <= eps * (-qtx) && norm_inf(&r) <= eps * (-qtx)
}

/// Lagrangian dual bound `min_{l<=x<=u} L(x, z)` for the current dual iterate,
/// using only the structural rows (bound rows are handled by the box).
fn lagrangian_bound(data: &StdForm, sc: &Scaling, z: &[f64], tau: f64) -> f64 {
    let zo: Vec<f64> = z.iter().zip(&sc.e).map(|(v, e)| v * e / (sc.c * tau)).collect();
    let nr = data.real_rows;
    let mut zr = zo.clone();
    for v in zr[nr..].iter_mut() {
        *v = 0.0;
    }
    let mut g = data.q.clone();
    data.a.gemv_t(1.0, &zr, &mut g);
    let mut total = -dot(&data.b[..nr], &zr[..nr]);
    for j in 0..g.len() {
        total += separable_min(data.p[j], g[j], data.lower[j], data.upper[j]);
    }
    total
}

/// min over [lo, hi] of ½ p x² + g x.
pub(crate) fn separable_min(p: f64, g: f64, lo: f64, hi: f64) -> f64 {
    let f = |x: f64| 0.5 * p * x * x + g * x;
    if p > 0.0 {
        let xs = (-g / p).clamp(lo, hi);
        f(xs)
    } else if g > 0.0 {
        if lo.is_finite() {
            f(lo)
        } else {
            f64::NEG_INFINITY
        }
    } else if g < 0.0 {
        if hi.is_finite() {
            f(hi)
        } else {
            f64::NEG_INFINITY
        }
    } else {
        0.0
    }
}
