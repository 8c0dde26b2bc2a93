//! Ellipsoid feasibility and optimization over a polytope given by a
//! separation callback.

use santa_alloc::ellipsoid::{EllipsoidConfig, EllipsoidStatus, optimize_with_binary_search, polytope_oracle, solve_feasibility};

fn main() -> santa_alloc::Result<()> {
    // x, y ≥ 0, x + 2y ≤ 4, 3x + y ≤ 6.
    let rows = vec![(vec![-1.0, 0.0], 0.0), (vec![0.0, -1.0], 0.0), (vec![1.0, 2.0], 4.0), (vec![3.0, 1.0], 6.0)];
    let cfg = EllipsoidConfig { outer_radius: 100.0, inner_radius: 1e-7, ..Default::default() };
    let run = solve_feasibility(2, &cfg, polytope_oracle(&rows, 0.0))?;
    println!("feasible point after {} cuts: {:?}", run.iterations, run.status);

    let best = optimize_with_binary_search(&[1.0, 1.0], &cfg, (0.0, 10.0), 1e-4, polytope_oracle(&rows, 0.0))?;
    let x = best.expect("polytope is non-empty");
    println!("max x + y ≈ {:.4} at ({:.4}, {:.4}); the vertex (1.6, 1.2) gives 2.8", x[0] + x[1], x[0], x[1]);

    let empty = vec![(vec![1.0], -1.0), (vec![-1.0], 0.0)];
    let run = solve_feasibility(1, &cfg, polytope_oracle(&empty, 0.0))?;
    assert_eq!(run.status, EllipsoidStatus::Infeasible);
    println!("x ≤ -1 and x ≥ 0: infeasible after {} cuts", run.iterations);
    Ok(())
}
