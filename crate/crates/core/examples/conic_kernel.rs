//! Solves a small second-order cone program with the built-in
//! interior-point kernel, then an infeasible one with its certificate.

use ess_planner::conic::{check_exactness, solve_conic, verify_certificate, ConeKind, ConicBuilder, Tolerances};

fn main() {
    // single line: serve 0.8 + j0.3 at the far end, loss r·l, l·w ≥ p² + q²
    let (r, x, pd, qd) = (0.05, 0.04, 0.8, 0.3);
    let mut b = ConicBuilder::new();
    let p = b.add_var(f64::NEG_INFINITY, f64::INFINITY);
    let q = b.add_var(f64::NEG_INFINITY, f64::INFINITY);
    let l = b.add_var(0.0, f64::INFINITY);
    let w = b.add_var(0.9 * 0.9, 1.1 * 1.1);
    b.set_cost(p, 2.0, 10.0);
    b.add_row(ConeKind::Zero, &[(p, 1.0), (l, -r)], -pd);
    b.add_row(ConeKind::Zero, &[(q, 1.0), (l, -x)], -qd);
    b.add_row(ConeKind::Zero, &[(w, 1.0), (p, 2.0 * r), (q, 2.0 * x), (l, -(r * r + x * x))], -1.0);
    b.add_block(
        ConeKind::RotatedSoc,
        vec![(vec![(l, 1.0)], 0.0), (vec![], 1.0), (vec![(p, 1.0)], 0.0), (vec![(q, 1.0)], 0.0)],
    );
    let prob = b.build();
    let tol = Tolerances { record_dual_bound: true, ..Default::default() };
    let sol = solve_conic(&prob, &tol);
    println!("status {:?} after {} iterations", sol.status, sol.iterations);
    println!("p = {:.6}, q = {:.6}, l = {:.6}, w = {:.6}", sol.x[p], sol.x[q], sol.x[l], sol.x[w]);
    println!("objective {:.8}, dual bound {:.8}, residuals {:?}", sol.objective, sol.dual_objective, sol.residuals);
    for (block, res) in check_exactness(&prob, &sol) {
        println!("cone block {block}: l·w − p² − q² = {res:.2e}");
    }
    for rec in &sol.log {
        println!(
            "  iter {:>2}  primal {:+.6e}  bound {:+.6e}  mu {:.2e}",
            rec.iteration, rec.primal_objective, rec.dual_objective, rec.mu
        );
    }

    // the same line cannot hold the far end above 1.2 pu
    let mut prob2 = prob.clone();
    prob2.lower[w] = 1.2 * 1.2;
    prob2.upper[w] = 1.3 * 1.3;
    let bad = solve_conic(&prob2, &Tolerances::default());
    let cert = bad.certificate.expect("infeasible problems carry a certificate");
    println!("\nraised voltage floor: {:?}, certificate check {:?}", bad.status, verify_certificate(&prob2, &cert));
}
