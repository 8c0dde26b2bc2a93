//! Path decomposition and integral max-flow on a small DAG.

use santa_alloc::flowcore::{Edge, decompose, max_flow_integral, recompose};

fn main() -> santa_alloc::Result<()> {
    // s=0 → {1, 2} → 3 → t=4, plus a direct edge 2 → 4.
    let edges: Vec<Edge> =
        [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (2, 4)].into_iter().map(|(tail, head)| Edge { tail, head }).collect();
    let terminal = [true, false, false, false, true];

    let flow = [1.5, 1.0, 1.5, 0.25, 1.75, 0.75];
    let paths = decompose(5, &edges, &flow, &terminal)?;
    for p in &paths {
        println!("weight {:.2} on edges {:?}", p.weight, p.edges);
    }
    assert_eq!(recompose(edges.len(), &paths), flow);

    let cap = [2, 2, 1, 1, 1, 1];
    let (value, f) = max_flow_integral(5, &edges, &[(0, 4)], 4, &cap)?;
    println!("max flow {value}, per edge {f:?}");
    Ok(())
}
