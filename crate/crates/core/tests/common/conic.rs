//! Random small conic problems with known feasibility.

use ess_planner::conic::{ConeKind, ConicBuilder, ConicProblem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random problem with a known interior point `x0`, so it is feasible.
pub fn random_feasible(rng: &mut ChaCha8Rng) -> ConicProblem {
    let n = rng.gen_range(3..10);
    let mut b = ConicBuilder::new();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for j in 0..n {
        let lo = if rng.gen_bool(0.8) { x0[j] - rng.gen_range(0.1..2.0) } else { f64::NEG_INFINITY };
        let hi = if rng.gen_bool(0.8) { x0[j] + rng.gen_range(0.1..2.0) } else { f64::INFINITY };
        let v = b.add_var(lo, hi);
        let quad = if rng.gen_bool(0.6) || !(lo.is_finite() && hi.is_finite()) {
            rng.gen_range(0.1..3.0)
        } else {
            0.0
        };
        b.set_cost(v, quad, rng.gen_range(-2.0..2.0));
    }
    b.add_constant(rng.gen_range(-1.0..1.0));
    let rand_terms = |rng: &mut ChaCha8Rng| -> Vec<(usize, f64)> {
        let mut t = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                t.push((j, rng.gen_range(-1.0..1.0)));
            }
        }
        t
    };
    let eval = |t: &[(usize, f64)]| t.iter().map(|&(j, v)| v * x0[j]).sum::<f64>();
    for _ in 0..rng.gen_range(0..3) {
        let t = rand_terms(rng);
        let c = -eval(&t);
        b.add_row(ConeKind::Zero, &t, c);
    }
    for _ in 0..rng.gen_range(0..4) {
        let t = rand_terms(rng);
        let c = -eval(&t) + rng.gen_range(0.01..1.0);
        b.add_row(ConeKind::NonNeg, &t, c);
    }
    for _ in 0..rng.gen_range(0..3) {
        let d = rng.gen_range(2..5);
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = (1..d)
            .map(|_| {
                let t = rand_terms(rng);
                let c = rng.gen_range(-0.5..0.5);
                (t, c)
            })
            .collect();
        let tail: f64 = rows.iter().map(|(t, c)| (eval(t) + c).powi(2)).sum::<f64>().sqrt();
        let t0 = rand_terms(rng);
        let c0 = tail - eval(&t0) + rng.gen_range(0.01..1.0);
        rows.insert(0, (t0, c0));
        b.add_block(ConeKind::Soc, rows);
    }
    for _ in 0..rng.gen_range(0..3) {
        let d = rng.gen_range(3..5);
        let g: Vec<(Vec<(usize, f64)>, f64)> = (2..d).map(|_| (rand_terms(rng), rng.gen_range(-0.5..0.5))).collect();
        let gg: f64 = g.iter().map(|(t, c)| (eval(t) + c).powi(2)).sum();
        let t0 = rand_terms(rng);
        let t1 = rand_terms(rng);
        let f0 = rng.gen_range(0.5..2.0);
        let f1 = gg / f0 + rng.gen_range(0.01..1.0);
        let mut rows = vec![(t0.clone(), f0 - eval(&t0)), (t1.clone(), f1 - eval(&t1))];
        rows.extend(g);
        b.add_block(ConeKind::RotatedSoc, rows);
    }
    b.build()
}

/// Random problem made infeasible by a dense nonnegative row whose maximum
/// over the box is negative, or by a cone that no box point can satisfy.
pub fn random_infeasible(rng: &mut ChaCha8Rng) -> ConicProblem {
    let n = rng.gen_range(3..8);
    let mut b = ConicBuilder::new();
    for _ in 0..n {
        let v = b.add_var(-1.0, 1.0);
        b.set_cost(v, rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let t: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.gen_range(-1.0..1.0))).collect();
    let reach: f64 = t.iter().map(|(_, v)| v.abs()).sum();
    match rng.gen_range(0..3) {
        0 => {
            b.add_row(ConeKind::NonNeg, &t, -reach - rng.gen_range(0.1..1.0));
        }
        1 => {
            // ||x|| <= reach/ (n) - something negative
            let mut rows = vec![(vec![], -rng.gen_range(0.1..1.0))];
            rows.extend((0..n).map(|j| (vec![(j, 1.0)], 0.0)));
            b.add_block(ConeKind::Soc, rows);
        }
        _ => {
            // x0 * x1 >= 4 with |x| <= 1, plus a coupling equality
            let rows = vec![(vec![(0, 1.0)], 0.0), (vec![(1, 1.0)], 0.0), (vec![], 2.0)];
            b.add_block(ConeKind::RotatedSoc, rows);
            b.add_row(ConeKind::Zero, &t, 0.0);
        }
    }
    b.build()
}
