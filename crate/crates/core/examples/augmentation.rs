//! The gap loop: augmentation steps from the private-resource assignment
//! until every basic player is covered or the solver proves no solution.

use santa_alloc::augment::{GapRun, exact_aug_solver, planted_aug_solver, solve_gap};
use santa_alloc::generators::{Family, GenParams, generate};
use santa_alloc::instance::{Instance, ValuationOracle};
use santa_alloc::reduction::{GapOutcome, canonicalize, lift_assignment};

fn report(label: &str, inst: &Instance, gamma: f64, run: GapRun) {
    println!("{label}:");
    for s in &run.steps {
        println!(
            "  step {}: uncovered {} -> {}, case {:?}, complex minimum {:.3}",
            s.k, s.uncovered_before, s.uncovered_after, s.case, s.complex_min
        );
    }
    match run.outcome {
        GapOutcome::Success(a) => println!("  success, minimum value {:.3} (need {:.3})", inst.min_value(&a), 1.0 / gamma),
        GapOutcome::Reject => println!("  rejected: no allocation reaches the target"),
        GapOutcome::Inconclusive(why) => println!("  inconclusive: {why}"),
    }
}

fn main() -> santa_alloc::Result<()> {
    let gamma = 8.0;

    // The planted optimum drives each step through its flow.
    let g = generate(&GenParams { family: Family::AdversarialPrivateResource, players: 4, resources: 10, seed: 4 })?;
    let (opt, _) = g.planted.as_ref().expect("planted family");
    let canon = canonicalize(&g.instance, gamma)?;
    let lifted = lift_assignment(&canon, opt);
    let run = solve_gap(&canon, 2, false, planted_aug_solver(&canon, &lifted))?;
    report("planted solver, target 1", &g.instance, gamma, run);

    // Diagonal values: the target 1 is reachable, while at 200 no resource
    // is big for anyone and exhaustive search proves there is no solution.
    let tiny =
        Instance::from_valuations(vec![ValuationOracle::additive(vec![1.0, 0.0])?, ValuationOracle::additive(vec![0.0, 1.0])?])?;
    for eta in [1.0, 200.0] {
        let scaled = tiny.scaled(eta);
        let canon = canonicalize(&scaled, gamma)?;
        let run = solve_gap(&canon, 2, false, exact_aug_solver())?;
        report(&format!("exact solver, target {eta}"), &scaled, gamma, run);
    }
    Ok(())
}
