//! The four valuation families, marginals, the exhaustive submodularity
//! check and the multilinear extension.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use santa_alloc::instance::{ValuationOracle, check_submodular};
use santa_alloc::sep::{multilinear_estimate, multilinear_exact};

fn main() -> santa_alloc::Result<()> {
    let additive = ValuationOracle::additive(vec![1.0, 0.5, 0.25])?;
    let truncated = ValuationOracle::truncated_additive(vec![0.8, 0.8, 0.3], 1.0)?;
    let coverage = ValuationOracle::weighted_coverage(vec![vec![0, 1], vec![1, 2], vec![2]], vec![0.5, 1.0, 0.25])?;
    // Square root of 1, 2 and 3 units on a two-element ground set.
    let table = ValuationOracle::explicit_table(3, vec![0, 2], vec![0.0, 1.0, 2f64.sqrt(), 3f64.sqrt()])?;

    for (name, f) in [("additive", &additive), ("truncated", &truncated), ("coverage", &coverage), ("table", &table)] {
        println!(
            "{name:<10} f({{0,1,2}}) = {:.4}  f(2 | {{0,1}}) = {:.4}  check: {:?}",
            f.value(&[0, 1, 2]),
            f.marginal(&[0, 1], 2)?,
            check_submodular(f)?
        );
    }

    let supermodular = ValuationOracle::explicit_table_unchecked(2, vec![0, 1], vec![0.0, 0.0, 0.0, 1.0])?;
    println!("pair bonus check: {:?}", check_submodular(&supermodular)?);

    let x = [0.5, 0.5, 0.0];
    let exact = multilinear_exact(|s| truncated.value(s), &x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let est = multilinear_estimate(|s| truncated.value(s), &x, 4000, &mut rng)?;
    println!("truncated F(0.5, 0.5, 0) = {exact:.4} exactly, {est:.4} from 4000 samples");
    Ok(())
}
