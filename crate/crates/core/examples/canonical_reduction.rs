//! Splits every player into a basic and a complex player, lifts an optimal
//! allocation and maps it back.

use santa_alloc::instance::Instance;
use santa_alloc::instance::ValuationOracle;
use santa_alloc::oracle::brute_opt;
use santa_alloc::reduction::{canonicalize, decanonicalize, lift_assignment};

fn main() -> santa_alloc::Result<()> {
    let inst = Instance::from_valuations(vec![
        ValuationOracle::additive(vec![1.0, 0.3, 0.4, 0.0, 0.3])?,
        ValuationOracle::truncated_additive(vec![0.5, 1.0, 0.0, 0.6, 0.5], 1.0)?,
    ])?;
    let (opt, best) = brute_opt(&inst)?;
    println!("OPT = {opt}");

    let gamma = 4.0;
    let canon = canonicalize(&inst.scaled(opt), gamma)?;
    println!(
        "canonical instance: {} players, {} resources (one private resource per source player)",
        canon.instance.num_players(),
        canon.instance.num_resources()
    );
    let lifted = lift_assignment(&canon, &best);
    let values = canon.instance.player_values(&lifted);
    for p in 0..canon.num_source_players() {
        println!("player {p}: basic {:.3}, complex {:.3}", values[canon.basic(p)], values[canon.complex(p)]);
    }
    let back = decanonicalize(&canon, &lifted)?;
    println!(
        "decanonicalized minimum value {:.3} (at least 1/gamma = {:.3} after scaling)",
        inst.scaled(opt).min_value(&back),
        1.0 / gamma
    );
    Ok(())
}
