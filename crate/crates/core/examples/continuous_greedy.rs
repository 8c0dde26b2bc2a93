//! Continuous greedy for a coverage function under a cardinality budget,
//! compared with the best pair found by enumeration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use santa_alloc::cli::cgreedy_example;
use santa_alloc::sep::{GreedyOptions, continuous_greedy, multilinear_exact};

fn main() -> santa_alloc::Result<()> {
    let f = cgreedy_example();
    let n = f.domain();
    let k = 2;
    // Linear maximization over {x ∈ [0,1]^n : Σx ≤ k}: the k largest positive weights.
    let top_k = |w: &[f64]| {
        let mut idx: Vec<usize> = (0..w.len()).collect();
        idx.sort_by(|&a, &b| w[b].total_cmp(&w[a]));
        let mut x = vec![0.0; w.len()];
        for &j in idx.iter().take(k).filter(|&&j| w[j] > 0.0) {
            x[j] = 1.0;
        }
        Ok(Some((x.clone(), x)))
    };
    let opts = GreedyOptions { delta: 0.01, samples: 2000, exact_limit: 10 };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let out = continuous_greedy(n, |s| f.value(s), &opts, &mut rng, top_k)?.expect("non-empty polytope");
    let fy = multilinear_exact(|s| f.value(s), &out.y)?;

    let best = (0..1usize << n)
        .filter(|m| m.count_ones() as usize <= k)
        .map(|m| f.value(&(0..n).filter(|j| m >> j & 1 == 1).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    println!("y = {:?}", out.y.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>());
    println!("F(y) = {fy:.4}, best pair = {best:.4}, ratio {:.3} (guarantee {:.3})", fy / best, 1.0 - (-1.0f64).exp());
    Ok(())
}
