//! Forward-backward sweep AC power flow on a radial feeder, used as an
//! independent check of DistFlow solutions.

use num_complex::Complex64;

use crate::model::{Orientation, PlanningModel};
use crate::network::NetworkCase;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Squared voltage magnitude per bus index.
    pub w: Vec<f64>,
    /// Squared current magnitude per branch.
    pub l: Vec<f64>,
    /// Sending-end complex power per branch.
    pub sending: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the feeder for given net withdrawals `p + jq` per bus (the root
/// entry is ignored) with the root held at `1∠0`.
pub fn forward_backward_sweep(
    case: &NetworkCase,
    orientation: &Orientation,
    p: &[f64],
    q: &[f64],
    tol: f64,
    max_iter: usize,
) -> SweepResult {
    let n = case.buses.len();
    let nb = case.branches.len();
    let z: Vec<Complex64> = case.branches.iter().map(|b| Complex64::new(b.r, b.x)).collect();
    // children before parents
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut stack = vec![0usize];
    while let Some(u) = stack.pop() {
        order.push(u);
        for &k in &orientation.out[u] {
            stack.push(orientation.ends[k].1);
        }
    }
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    let mut current = vec![Complex64::new(0.0, 0.0); nb];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        for &j in order.iter().rev() {
            let Some(k) = orientation.incoming[j] else { continue };
            let mut i = (Complex64::new(p[j], q[j]) / v[j]).conj();
            for &c in &orientation.out[j] {
                i += current[c];
            }
            current[k] = i;
        }
        let mut change: f64 = 0.0;
        for &j in &order {
            let Some(k) = orientation.incoming[j] else { continue };
            let (parent, _) = orientation.ends[k];
            let nv = v[parent] - z[k] * current[k];
            change = change.max((nv - v[j]).norm());
            v[j] = nv;
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    let sending = (0..nb)
        .map(|k| v[orientation.ends[k].0] * current[k].conj())
        .collect();
    SweepResult {
        w: v.iter().map(|x| x.norm_sqr()).collect(),
        l: current.iter().map(|x| x.norm_sqr()).collect(),
        sending,
        iterations,
        converged,
    }
}

/// Largest deviation between a DistFlow point and the AC power flow driven
/// by its net withdrawals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcMismatch {
    pub max_dw: f64,
    pub max_dl: f64,
    pub converged: bool,
}

/// Runs the sweep on the net withdrawals of `x` in scenario `s`, hour index
/// `t` and compares squared voltages and currents with the model values.
pub fn ac_mismatch(model: &PlanningModel, x: &[f64], s: usize, t: usize) -> AcMismatch {
    let lay = &model.layout;
    let n = lay.buses;
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for b in 1..n {
        p[b] = x[lay.pn(s, t, b)];
        q[b] = x[lay.qn(s, t, b)];
    }
    let pf = forward_backward_sweep(&model.case, &model.orientation, &p, &q, 1e-13, 1000);
    let max_dw = (0..n).fold(0.0f64, |m, b| m.max((pf.w[b] - x[lay.w(s, t, b)]).abs()));
    let max_dl = (0..lay.branches).fold(0.0f64, |m, k| m.max((pf.l[k] - x[lay.l(s, t, k)]).abs()));
    AcMismatch {
        max_dw,
        max_dl,
        converged: pf.converged,
    }
}
