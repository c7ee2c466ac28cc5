//! Verification of infeasibility certificates.
//!
//! A certificate for `f(x) = A x + c ∈ K, l ≤ x ≤ u` is a vector `y ∈ K*`
//! such that `yᵀ f(x) ≥ 0` must hold for every feasible `x`, while
//! `max_{l ≤ x ≤ u} yᵀ f(x) < 0`. The second quantity separates over the
//! columns, so both conditions can be checked directly.

use super::cones::norm2;
use super::{ConeKind, ConicProblem};

/// Outcome of checking a candidate certificate against a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    /// Largest violation of `y ∈ K*`.
    pub dual_cone_violation: f64,
    /// Largest coefficient of `yᵀ A` that pushes towards an infinite bound.
    pub unbounded_leak: f64,
    /// Lower bound on `-yᵀ f(x)` over the box; positive proves infeasibility.
    pub separation: f64,
}

impl CertificateCheck {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.dual_cone_violation <= tol && self.unbounded_leak <= tol && self.separation >= tol
    }
}

/// Checks `y` (one entry per problem row, any positive scaling) as an
/// infeasibility certificate.
pub fn verify_certificate(prob: &ConicProblem, y: &[f64]) -> CertificateCheck {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return CertificateCheck {
            dual_cone_violation: f64::INFINITY,
            unbounded_leak: f64::INFINITY,
            separation: f64::NEG_INFINITY,
        };
    }
    let y: Vec<f64> = y.iter().map(|v| v / scale).collect();
    let mut viol: f64 = 0.0;
    for (off, cs) in prob.cone_offsets().iter().zip(&prob.cones) {
        viol = viol.max(dual_violation(cs.kind, &y[*off..off + cs.dim]));
    }
    let mut g = vec![0.0; prob.num_vars()];
    prob.rows.gemv_t(1.0, &y, &mut g);
    let mut upper_bound: f64 = y.iter().zip(&prob.row_const).map(|(a, b)| a * b).sum();
    let mut leak: f64 = 0.0;
    for j in 0..g.len() {
        let gj = g[j];
        if gj > 0.0 {
            if prob.upper[j].is_finite() {
                upper_bound += gj * prob.upper[j];
            } else {
                leak = leak.max(gj);
            }
        } else if gj < 0.0 {
            if prob.lower[j].is_finite() {
                upper_bound += gj * prob.lower[j];
            } else {
                leak = leak.max(-gj);
            }
        }
    }
    CertificateCheck {
        dual_cone_violation: viol,
        unbounded_leak: leak,
        separation: -upper_bound,
    }
}

/// Violation of dual-cone membership for one block of user rows.
pub(crate) fn dual_violation(kind: ConeKind, y: &[f64]) -> f64 {
    match kind {
        ConeKind::Zero => 0.0,
        ConeKind::NonNeg => y.iter().fold(0.0f64, |m, v| m.max(-v)),
        ConeKind::Soc => (norm2(&y[1..]) - y[0]).max(0.0),
        ConeKind::RotatedSoc => {
            // dual of {f0 f1 >= |g|^2, f0, f1 >= 0} is {4 y0 y1 >= |g|^2, y0, y1 >= 0}
            let u0 = y[0] + y[1];
            let u1 = y[0] - y[1];
            let rest = norm2(&y[2..]);
            ((u1 * u1 + rest * rest).sqrt() - u0).max(0.0)
        }
    }
}

/// Primal membership violation for one block of row values `f`.
pub(crate) fn primal_violation(kind: ConeKind, f: &[f64]) -> f64 {
    match kind {
        ConeKind::Zero => f.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        ConeKind::NonNeg => f.iter().fold(0.0f64, |m, v| m.max(-v)),
        ConeKind::Soc => (norm2(&f[1..]) - f[0]).max(0.0),
        ConeKind::RotatedSoc => {
            let u0 = 0.5 * (f[0] + f[1]);
            let u1 = 0.5 * (f[0] - f[1]);
            let rest = norm2(&f[2..]);
            ((u1 * u1 + rest * rest).sqrt() - u0).max(0.0)
        }
    }
}

/// For a constant block value `v` outside the cone, a dual vector
/// `y ∈ K*` with `yᵀ v < 0`; `None` if `v` is in the cone up to `tol`.
pub(crate) fn separating_dual(kind: ConeKind, v: &[f64], tol: f64) -> Option<Vec<f64>> {
    let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if primal_violation(kind, v) <= tol * scale {
        return None;
    }
    let y = match kind {
        ConeKind::Zero => {
            let n = norm2(v);
            v.iter().map(|x| -x / n).collect()
        }
        ConeKind::NonNeg => v.iter().map(|&x| if x < 0.0 { 1.0 } else { 0.0 }).collect(),
        ConeKind::Soc => soc_separator(v),
        ConeKind::RotatedSoc => {
            let mut u = vec![0.5 * (v[0] + v[1]), 0.5 * (v[0] - v[1])];
            u.extend_from_slice(&v[2..]);
            let z = soc_separator(&u);
            let mut y = vec![0.5 * (z[0] + z[1]), 0.5 * (z[0] - z[1])];
            y.extend_from_slice(&z[2..]);
            y
        }
    };
    Some(y)
}

fn soc_separator(v: &[f64]) -> Vec<f64> {
    let n = norm2(&v[1..]);
    let mut y = vec![1.0];
    if n > 0.0 {
        y.extend(v[1..].iter().map(|x| -x / n));
    } else {
        // v0 < 0 with a zero tail
        y.extend(std::iter::repeat(0.0).take(v.len() - 1));
    }
    y
}
