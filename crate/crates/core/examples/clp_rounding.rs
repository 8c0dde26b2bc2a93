//! Configuration-LP membership on an augmentation instance, followed by
//! level-by-level randomized rounding of the witness.

use santa_alloc::auggraph::{build_aug_instance, check_feasible};
use santa_alloc::clp::{ClpContext, ClpParams, Membership, membership};
use santa_alloc::generators::{Family, GenParams, generate};
use santa_alloc::reduction::canonicalize;
use santa_alloc::rounding::round_all_levels;

fn main() -> santa_alloc::Result<()> {
    let g = generate(&GenParams { family: Family::PlantedCoverage, players: 3, resources: 6, seed: 2 })?;
    let canon = canonicalize(&g.instance, 8.0)?;
    let sigma = canon.initial_assignment();
    let inst = build_aug_instance(&canon, &sigma, 2)?;
    let t = inst.layout.as_ref().expect("canonical layout").collector;
    println!(
        "{} levels, {} edges, {} uncovered basic players",
        inst.depth(),
        inst.total_edges(),
        canon.uncovered_basic(&sigma).len()
    );

    let (alpha, beta) = (2.0, 2);
    let mut ctx = ClpContext::new(&inst, ClpParams::practical(alpha, beta, 9));
    for budget in [0.0, 1.0, 4.0] {
        let b = vec![budget; inst.total_edges()];
        match membership(&mut ctx, 0, &[t], &b)? {
            Membership::Member(w) => {
                println!("budget {budget}: member, {} columns, weight on t {:.3}", w.num_columns(), w.weight_of(t));
                let r = round_all_levels(&inst, &w, &[t], alpha, 8.0, 5, 16)?;
                for l in &r.levels {
                    println!("  level {}: congestion {}, attempts {}", l.level, l.congestion, l.attempts);
                }
                let beta = r.solution.congestion().max(1);
                println!(
                    "  rounded solution at coverage 1/{alpha}, congestion {beta}: {:?}",
                    check_feasible(&inst, &r.solution, &[t], alpha, beta)
                );
            }
            Membership::Separated(hp) => println!("budget {budget}: separated, w·b = {:.3e} < {:.3e}", hp.eval(&b), hp.rhs),
        }
    }
    println!("{} separation calls, {} LP solves", ctx.stats.sep_calls, ctx.stats.lp_solves);
    Ok(())
}
