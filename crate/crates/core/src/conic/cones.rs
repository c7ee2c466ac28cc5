//! Symmetric cone algebra used by the interior-point iterations.
//!
//! Each cone owns a contiguous slice of the slack/dual vectors. Second-order
//! cones use the convention `s[0] >= ||s[1..]||`.

/// One block of the product cone in solver form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeBlock {
    /// `s = 0`; the dual variable is free.
    Zero(usize),
    /// `s >= 0` componentwise.
    NonNeg(usize),
    /// `s[0] >= ||s[1..]||`.
    Soc(usize),
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match *self {
            ConeBlock::Zero(d) | ConeBlock::NonNeg(d) | ConeBlock::Soc(d) => d,
        }
    }

    /// Barrier degree contributed to the complementarity measure.
    pub fn degree(&self) -> usize {
        match *self {
            ConeBlock::Zero(_) => 0,
            ConeBlock::NonNeg(d) => d,
            ConeBlock::Soc(_) => 1,
        }
    }
}

/// Nesterov–Todd scaling data for one SOC block.
#[derive(Debug, Clone, Default)]
struct SocScaling {
    eta: f64,
    /// Normalized scaling point, `w0^2 - ||w1||^2 = 1`.
    w: Vec<f64>,
}

/// The full product cone with per-block scaling state.
#[derive(Debug, Clone)]
pub struct ProductCone {
    pub blocks: Vec<ConeBlock>,
    pub offsets: Vec<usize>,
    pub degree: usize,
    /// NT scaling for nonnegative entries (`sqrt(s/z)`), indexed like `s`.
    nn_w: Vec<f64>,
    soc: Vec<SocScaling>,
    /// Scaled point `lambda = W z = W^{-1} s`.
    pub lambda: Vec<f64>,
}

impl ProductCone {
    pub fn new(blocks: Vec<ConeBlock>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        let mut degree = 0;
        let mut soc = Vec::with_capacity(blocks.len());
        for b in &blocks {
            offsets.push(dim);
            dim += b.dim();
            degree += b.degree();
            soc.push(match b {
                ConeBlock::Soc(d) => SocScaling {
                    eta: 1.0,
                    w: vec![0.0; *d],
                },
                _ => SocScaling::default(),
            });
        }
        Self {
            blocks,
            offsets,
            degree,
            nn_w: vec![1.0; dim],
            soc,
            lambda: vec![0.0; dim],
        }
    }

    fn ranges(&self) -> impl Iterator<Item = (usize, ConeBlock, std::ops::Range<usize>)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .map(move |(i, b)| (i, *b, self.offsets[i]..self.offsets[i] + b.dim()))
    }

    /// Writes the identity element of the cone (zero on zero-cone blocks).
    pub fn identity(&self, out: &mut [f64]) {
        for (_, b, r) in self.ranges() {
            match b {
                ConeBlock::Zero(_) => out[r].fill(0.0),
                ConeBlock::NonNeg(_) => out[r].fill(1.0),
                ConeBlock::Soc(_) => {
                    out[r.clone()].fill(0.0);
                    out[r.start] = 1.0;
                }
            }
        }
    }

    /// Smallest "eigenvalue" of `v` over the non-zero blocks; `+inf` if there
    /// are none.
    pub fn min_eig(&self, v: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for (_, b, r) in self.ranges() {
            match b {
                ConeBlock::Zero(_) => {}
                ConeBlock::NonNeg(_) => {
                    for &x in &v[r] {
                        m = m.min(x);
                    }
                }
                ConeBlock::Soc(_) => {
                    let t = v[r.start];
                    let n = norm2(&v[r.start + 1..r.end]);
                    m = m.min(t - n);
                }
            }
        }
        m
    }

    /// Moves `v` into the interior: adds `(1 - min_eig) e` if `v` is not
    /// comfortably interior. Zero-cone entries of a slack are forced to zero.
    pub fn shift_to_interior(&self, v: &mut [f64], is_slack: bool) {
        let m = self.min_eig(v);
        let shift = if m < 1e-8 { 1.0 - m } else { 0.0 };
        for (_, b, r) in self.ranges() {
            match b {
                ConeBlock::Zero(_) => {
                    if is_slack {
                        v[r].fill(0.0);
                    }
                }
                ConeBlock::NonNeg(_) => {
                    for x in &mut v[r] {
                        *x += shift;
                    }
                }
                ConeBlock::Soc(_) => v[r.start] += shift,
            }
        }
    }

    /// Computes NT scalings and `lambda` from interior `s`, `z`.
    pub fn update_scaling(&mut self, s: &[f64], z: &[f64]) -> bool {
        let mut ok = true;
        for i in 0..self.blocks.len() {
            let b = self.blocks[i];
            let r = self.offsets[i]..self.offsets[i] + b.dim();
            match b {
                ConeBlock::Zero(_) => {
                    self.lambda[r].fill(0.0);
                }
                ConeBlock::NonNeg(_) => {
                    for k in r {
                        if !(s[k] > 0.0 && z[k] > 0.0) {
                            ok = false;
                        }
                        self.nn_w[k] = (s[k] / z[k]).sqrt();
                        self.lambda[k] = (s[k] * z[k]).sqrt();
                    }
                }
                ConeBlock::Soc(d) => {
                    let (ss, zz) = (&s[r.clone()], &z[r.clone()]);
                    let s_det = soc_det(ss);
                    let z_det = soc_det(zz);
                    if !(s_det > 0.0 && z_det > 0.0 && ss[0] > 0.0 && zz[0] > 0.0) {
                        ok = false;
                        continue;
                    }
                    let s_scale = s_det.sqrt();
                    let z_scale = z_det.sqrt();
                    let mut dotp = ss[0] * zz[0];
                    for k in 1..d {
                        dotp += ss[k] * zz[k];
                    }
                    dotp /= s_scale * z_scale;
                    let gamma = ((1.0 + dotp) / 2.0).sqrt();
                    let sc = &mut self.soc[i];
                    sc.w[0] = (ss[0] / s_scale + zz[0] / z_scale) / (2.0 * gamma);
                    for k in 1..d {
                        sc.w[k] = (ss[k] / s_scale - zz[k] / z_scale) / (2.0 * gamma);
                    }
                    // renormalize to guard against drift
                    let wdet = soc_det(&sc.w).max(f64::MIN_POSITIVE).sqrt();
                    for wk in sc.w.iter_mut() {
                        *wk /= wdet;
                    }
                    sc.eta = (s_scale / z_scale).sqrt();
                    let mut lam = vec![0.0; d];
                    soc_mul_w(sc, zz, &mut lam, false);
                    self.lambda[r].copy_from_slice(&lam);
                }
            }
        }
        ok
    }

    /// out = W v (W is symmetric on every block). Zero-cone entries give 0.
    pub fn mul_w(&self, v: &[f64], out: &mut [f64]) {
        self.apply_w(v, out, false)
    }

    /// out = W^{-1} v.
    pub fn mul_winv(&self, v: &[f64], out: &mut [f64]) {
        self.apply_w(v, out, true)
    }

    fn apply_w(&self, v: &[f64], out: &mut [f64], inverse: bool) {
        for (i, b, r) in self.ranges() {
            match b {
                ConeBlock::Zero(_) => out[r].fill(0.0),
                ConeBlock::NonNeg(_) => {
                    for k in r {
                        out[k] = if inverse { v[k] / self.nn_w[k] } else { v[k] * self.nn_w[k] };
                    }
                }
                ConeBlock::Soc(_) => {
                    let (vi, oi) = (&v[r.clone()], &mut out[r.clone()]);
                    soc_mul_w(&self.soc[i], vi, oi, inverse);
                }
            }
        }
    }

    /// `H = W W` of block `i`: dense row-major for second-order blocks,
    /// the diagonal for linear blocks.
    pub fn hessian_block(&self, i: usize, out: &mut Vec<f64>) {
        let b = self.blocks[i];
        let d = b.dim();
        out.clear();
        let off = self.offsets[i];
        match b {
            ConeBlock::Zero(_) => out.resize(d, 0.0),
            ConeBlock::NonNeg(_) => {
                out.extend((0..d).map(|k| self.nn_w[off + k] * self.nn_w[off + k]));
            }
            ConeBlock::Soc(_) => {
                out.resize(d * d, 0.0);
                // eta^2 (2 w w^T - J)
                let sc = &self.soc[i];
                let e2 = sc.eta * sc.eta;
                for a in 0..d {
                    for c in 0..d {
                        let mut v = 2.0 * sc.w[a] * sc.w[c];
                        if a == c {
                            v += if a == 0 { -1.0 } else { 1.0 };
                        }
                        out[a * d + c] = e2 * v;
                    }
                }
            }
        }
    }

    /// Diagonal entry of `H` for a nonnegative coordinate.
    pub fn nonneg_h(&self, k: usize) -> f64 {
        self.nn_w[k] * self.nn_w[k]
    }

    /// Jordan product out = u ∘ v.
    pub fn circ(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        for (_, b, r) in self.ranges() {
            match b {
                ConeBlock::Zero(_) => out[r].fill(0.0),
                ConeBlock::NonNeg(_) => {
                    for k in r {
                        out[k] = u[k] * v[k];
                    }
                }
                ConeBlock::Soc(_) => {
                    let s = r.start;
                    let mut d = 0.0;
                    for k in r.clone() {
                        d += u[k] * v[k];
                    }
                    for k in s + 1..r.end {
                        out[k] = u[s] * v[k] + v[s] * u[k];
                    }
                    out[s] = d;
                }
            }
        }
    }

    /// Inverse Jordan product with `lambda`: out solves lambda ∘ out = v.
    pub fn lambda_inv_circ(&self, v: &[f64], out: &mut [f64]) {
        let lam = &self.lambda;
        for (_, b, r) in self.ranges() {
            match b {
                ConeBlock::Zero(_) => out[r].fill(0.0),
                ConeBlock::NonNeg(_) => {
                    for k in r {
                        out[k] = v[k] / lam[k];
                    }
                }
                ConeBlock::Soc(_) => {
                    let s = r.start;
                    let l = &lam[r.clone()];
                    let det = soc_det(l);
                    let mut l1v1 = 0.0;
                    for k in 1..l.len() {
                        l1v1 += l[k] * v[s + k];
                    }
                    let y0 = (l[0] * v[s] - l1v1) / det;
                    out[s] = y0;
                    for k in 1..l.len() {
                        out[s + k] = (v[s + k] - y0 * l[k]) / l[0];
                    }
                }
            }
        }
    }

    /// Largest `alpha` in `[0, cap]` keeping `u + alpha du` in the cone.
    pub fn max_step(&self, u: &[f64], du: &[f64], cap: f64) -> f64 {
        let mut alpha = cap;
        for (_, b, r) in self.ranges() {
            match b {
                ConeBlock::Zero(_) => {}
                ConeBlock::NonNeg(_) => {
                    for k in r {
                        if du[k] < 0.0 {
                            alpha = alpha.min(-u[k] / du[k]);
                        }
                    }
                }
                ConeBlock::Soc(_) => {
                    alpha = alpha.min(soc_step(&u[r.clone()], &du[r]));
                }
            }
        }
        alpha.max(0.0)
    }

    #[cfg(test)]
    /// True if every non-zero block of `v` lies in the cone, up to `tol`.
    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.ranges().all(|(_, b, r)| match b {
            ConeBlock::Zero(_) => true,
            ConeBlock::NonNeg(_) => v[r].iter().all(|&x| x >= -tol),
            ConeBlock::Soc(_) => v[r.start] - norm2(&v[r.start + 1..r.end]) >= -tol,
        })
    }
}

fn soc_det(v: &[f64]) -> f64 {
    let mut n = 0.0;
    for x in &v[1..] {
        n += x * x;
    }
    // (t - |x|)(t + |x|) is more accurate than t^2 - |x|^2 near the boundary
    let nx = n.sqrt();
    (v[0] - nx) * (v[0] + nx)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn soc_mul_w(sc: &SocScaling, v: &[f64], out: &mut [f64], inverse: bool) {
    let d = v.len();
    let w0 = sc.w[0];
    let mut w1v1 = 0.0;
    for k in 1..d {
        w1v1 += sc.w[k] * v[k];
    }
    let (sign, scale) = if inverse { (-1.0, 1.0 / sc.eta) } else { (1.0, sc.eta) };
    // W = eta [[w0, w1^T], [w1, I + w1 w1^T/(1+w0)]]; inverse flips w1.
    out[0] = scale * (w0 * v[0] + sign * w1v1);
    let c = sign * v[0] + w1v1 / (1.0 + w0);
    for k in 1..d {
        out[k] = scale * (v[k] + c * sc.w[k]);
    }
}

/// Largest step keeping u + a du inside the SOC (u assumed interior).
fn soc_step(u: &[f64], du: &[f64]) -> f64 {
    let mut a = du[0] * du[0];
    let mut b = u[0] * du[0];
    let c = soc_det(u).max(0.0);
    for k in 1..u.len() {
        a -= du[k] * du[k];
        b -= u[k] * du[k];
    }
    // f(alpha) = a alpha^2 + 2 b alpha + c, f(0) = c >= 0
    let mut best = f64::INFINITY;
    if a.abs() < 1e-300 {
        if b < 0.0 {
            best = -c / (2.0 * b);
        }
    } else {
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let qq = -(b + b.signum() * sq);
            let mut roots = [f64::INFINITY; 2];
            if qq != 0.0 {
                roots[0] = qq / a;
                roots[1] = c / qq;
            } else {
                roots[0] = (-b + sq) / a;
                roots[1] = (-b - sq) / a;
            }
            for r in roots {
                if r >= 0.0 && r < best {
                    best = r;
                }
            }
        }
    }
    // the leading coordinate must stay nonnegative
    if du[0] < 0.0 {
        best = best.min(-u[0] / du[0]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        v[0] = norm2(&v[1..]) + 0.1 + rng.gen::<f64>();
        v
    }

    #[test]
    fn nt_scaling_maps_z_and_s_to_same_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 2..6 {
            let mut cone = ProductCone::new(vec![ConeBlock::Soc(d), ConeBlock::NonNeg(2)]);
            let mut s = random_interior(&mut rng, d);
            let mut z = random_interior(&mut rng, d);
            s.extend([0.3, 2.0]);
            z.extend([1.5, 0.1]);
            assert!(cone.update_scaling(&s, &z));
            let mut wz = vec![0.0; d + 2];
            let mut winv_s = vec![0.0; d + 2];
            cone.mul_w(&z, &mut wz);
            cone.mul_winv(&s, &mut winv_s);
            for k in 0..d + 2 {
                assert!((wz[k] - winv_s[k]).abs() < 1e-12, "{wz:?} vs {winv_s:?}");
                assert!((wz[k] - cone.lambda[k]).abs() < 1e-12);
            }
            // H = W W
            let mut h = Vec::new();
            cone.hessian_block(0, &mut h);
            let v: Vec<f64> = (0..d).map(|k| k as f64 + 0.5).collect();
            let mut wv = vec![0.0; d + 2];
            let mut wwv = vec![0.0; d + 2];
            let mut vv = v.clone();
            vv.extend([0.0, 0.0]);
            cone.mul_w(&vv, &mut wv);
            cone.mul_w(&wv, &mut wwv);
            for a in 0..d {
                let hv: f64 = (0..d).map(|c| h[a * d + c] * v[c]).sum();
                assert!((hv - wwv[a]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn inverse_circ_undoes_circ() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut cone = ProductCone::new(vec![ConeBlock::Soc(4), ConeBlock::NonNeg(1)]);
        let mut s = random_interior(&mut rng, 4);
        let mut z = random_interior(&mut rng, 4);
        s.push(0.7);
        z.push(0.2);
        cone.update_scaling(&s, &z);
        let v = vec![0.3, -0.2, 0.9, 0.1, 0.5];
        let mut y = vec![0.0; 5];
        cone.lambda_inv_circ(&v, &mut y);
        let mut back = vec![0.0; 5];
        let lam = cone.lambda.clone();
        cone.circ(&lam, &y, &mut back);
        for k in 0..5 {
            assert!((back[k] - v[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_length_hits_boundary() {
        let cone = ProductCone::new(vec![ConeBlock::Soc(3)]);
        let u = [2.0, 0.0, 0.0];
        let du = [-1.0, 1.0, 0.0];
        // (2 - a)^2 = a^2 -> a = 1
        let a = cone.max_step(&u, &du, 10.0);
        assert!((a - 1.0).abs() < 1e-14);
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = u[k] + a * du[k];
        }
        assert!(cone.contains(&p, 1e-12));
        // moving inward never blocks
        assert_eq!(cone.max_step(&u, &[1.0, 0.0, 0.0], 5.0), 5.0);
    }

    #[test]
    fn shift_makes_interior() {
        let cone = ProductCone::new(vec![ConeBlock::Zero(1), ConeBlock::NonNeg(2), ConeBlock::Soc(3)]);
        let mut v = vec![3.0, -1.0, 0.5, 0.1, 2.0, 0.0];
        cone.shift_to_interior(&mut v, true);
        assert_eq!(v[0], 0.0);
        assert!(cone.min_eig(&v) >= 1.0 - 1e-12);
    }
}
