//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::seq::SliceRandom;
use santa_alloc::auggraph::{AugInstance, Level, LevelBuilder, Role};
use santa_alloc::instance::{Instance, ValuationOracle};

/// Valuation kinds the fixtures can build.
pub const KINDS: [&str; 4] = ["additive", "weighted-coverage", "truncated-additive", "explicit-table"];

/// Uniform multiple of `1/8` in `[lo/8, hi/8]`.
pub fn eighths<R: Rng>(rng: &mut R, lo: u32, hi: u32) -> f64 {
    rng.gen_range(lo..=hi) as f64 / 8.0
}

/// Random monotone submodular oracle of kind `KINDS[kind]` over `domain`
/// resources that only values `ground`.
pub fn random_oracle<R: Rng>(kind: usize, domain: usize, ground: &[usize], rng: &mut R) -> ValuationOracle {
    let in_ground = |r: usize| ground.contains(&r);
    match kind {
        0 => {
            let v = (0..domain).map(|r| if in_ground(r) { eighths(rng, 0, 8) } else { 0.0 }).collect();
            ValuationOracle::additive(v).unwrap()
        }
        1 => {
            let universe = rng.gen_range(1..=6);
            let weights = (0..universe).map(|_| eighths(rng, 1, 8)).collect();
            let covers = (0..domain)
                .map(|r| if in_ground(r) { (0..universe).filter(|_| rng.gen_bool(0.4)).collect() } else { Vec::new() })
                .collect();
            ValuationOracle::weighted_coverage(covers, weights).unwrap()
        }
        2 => {
            let v = (0..domain).map(|r| if in_ground(r) { eighths(rng, 0, 8) } else { 0.0 }).collect();
            ValuationOracle::truncated_additive(v, eighths(rng, 1, 12)).unwrap()
        }
        _ => {
            // Square root of a nonnegative additive function.
            let w: Vec<f64> = ground.iter().map(|_| eighths(rng, 0, 8)).collect();
            let table = (0..1usize << ground.len())
                .map(|m| (0..ground.len()).filter(|j| m >> j & 1 == 1).map(|j| w[j]).sum::<f64>().sqrt())
                .collect();
            ValuationOracle::explicit_table(domain, ground.to_vec(), table).unwrap()
        }
    }
}

/// Instance with `players` random oracles over `resources` resources.
pub fn random_instance<R: Rng>(players: usize, resources: usize, rng: &mut R) -> Instance {
    let all: Vec<usize> = (0..resources).collect();
    let vals = (0..players).map(|_| random_oracle(rng.gen_range(0..3), resources, &all, rng)).collect();
    Instance::from_valuations(vals).unwrap()
}

/// Vertex ids of a level built by [`random_level`].
pub struct TinyLevel {
    pub level: Level,
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
}

/// Acyclic level with up to 3 sources, at most one relay vertex and
/// `sinks` sinks, each entered by 1 to 3 edges. Sources have out-degree at
/// most 1. Sink values are multiples of 1/2.
pub fn random_level<R: Rng>(rng: &mut R, sinks: usize) -> TinyLevel {
    let mut b = LevelBuilder::new();
    let mut sources: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| b.vertex(Role::Plain)).collect();
    let mut free = sources.clone();
    let relay = rng.gen_bool(0.5).then(|| {
        let relay = b.vertex(Role::Plain);
        for _ in 0..rng.gen_range(1..=free.len().min(2)) {
            let s = free.swap_remove(rng.gen_range(0..free.len()));
            b.edge(s, relay);
        }
        relay
    });
    let sink_ids: Vec<usize> = (0..sinks).map(|_| b.vertex(Role::Plain)).collect();
    for &v in &sink_ids {
        let mut deg = 0;
        if let Some(r) = relay.filter(|_| rng.gen_bool(0.6)) {
            b.edge(r, v);
            deg += 1;
        }
        for _ in 0..rng.gen_range(0..=2usize) {
            if !free.is_empty() {
                let s = free.swap_remove(rng.gen_range(0..free.len()));
                b.edge(s, v);
                deg += 1;
            }
        }
        if deg == 0 {
            let s = b.vertex(Role::Plain);
            sources.push(s);
            b.edge(s, v);
            deg = 1;
        }
        let vals = (0..deg).map(|_| rng.gen_range(1..=2) as f64 / 2.0).collect();
        b.sink(v, ValuationOracle::additive(vals).unwrap());
    }
    for &s in &sources {
        b.source(s);
    }
    TinyLevel { level: b.build().unwrap(), sources, sinks: sink_ids }
}

/// One- or two-level instance; in the two-level case every level-1 sink is
/// linked to a distinct level-0 source when one is available.
pub fn random_aug_instance<R: Rng>(rng: &mut R, depth: usize) -> (AugInstance, Vec<usize>) {
    let k = rng.gen_range(1..=2);
    let top = random_level(rng, k);
    let t_star = top.sinks.clone();
    if depth == 1 {
        return (AugInstance::new(vec![top.level], vec![]).unwrap(), t_star);
    }
    let k = rng.gen_range(1..=2);
    let bottom = random_level(rng, k);
    let mut sources = top.sources.clone();
    sources.shuffle(rng);
    let links = bottom.sinks.iter().zip(&sources).map(|(&u, &s)| (u, s)).collect();
    (AugInstance::new(vec![top.level, bottom.level], vec![links]).unwrap(), t_star)
}
