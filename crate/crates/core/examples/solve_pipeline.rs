//! End-to-end solve on generated instances, checked against brute force.

use santa_alloc::augment::solve;
use santa_alloc::config::Config;
use santa_alloc::generators::{FAMILIES, GenParams, generate};
use santa_alloc::oracle::brute_opt;

fn main() -> santa_alloc::Result<()> {
    let config = Config::default();
    for family in FAMILIES {
        let g = generate(&GenParams { family, players: 3, resources: 6, seed: 1 })?;
        let params = config.resolve(g.instance.num_players() + g.instance.num_resources())?;
        let report = solve(&g.instance, &params)?;
        let (opt, _) = brute_opt(&g.instance)?;
        println!(
            "{family:<29} OPT {opt:.3}  found {:.3}  eta* {:.3}  grid points {}",
            report.min_value,
            report.eta_star,
            report.attempts.len()
        );
        assert!(report.min_value <= opt + 1e-9);
    }
    Ok(())
}
