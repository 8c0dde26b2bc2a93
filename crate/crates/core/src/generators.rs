//! Seeded instance generators. Planted families come with an assignment
//! whose minimum value is the optimum.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result, input};
use crate::instance::{Assignment, Instance, ValuationOracle};
use crate::rng::stream;

const RNG_TAG: u64 = 0x67_656e;

/// Values are multiples of `1/UNITS`, so bundle sums are exact.
const UNITS: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Additive; every player values its own bundle at 1 and others' resources at most as much.
    PlantedAdditive,
    /// Weighted coverage; each player only values its own element group of weight 1.
    PlantedCoverage,
    /// Independent uniform additive values, no known optimum.
    RandomAdditive,
    /// Each resource has one value and a set of players allowed to use it.
    RestrictedAssignment,
    /// Truncated additive with cap 1: one value-1 resource per player plus many tiny resources.
    AdversarialPrivateResource,
}

pub const FAMILIES: [Family; 5] = [
    Family::PlantedAdditive,
    Family::PlantedCoverage,
    Family::RandomAdditive,
    Family::RestrictedAssignment,
    Family::AdversarialPrivateResource,
];

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PlantedAdditive => "planted-additive",
            Family::PlantedCoverage => "planted-coverage",
            Family::RandomAdditive => "random-additive",
            Family::RestrictedAssignment => "restricted-assignment",
            Family::AdversarialPrivateResource => "adversarial-private-resource",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FAMILIES.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<&str> = FAMILIES.iter().map(|f| f.name()).collect();
            Error::Input(format!("unknown family {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GenParams {
    pub family: Family,
    pub players: usize,
    pub resources: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    /// Planted assignment and the optimum it attains.
    pub planted: Option<(Assignment, f64)>,
}

/// Splits `UNITS` into `k ≥ 1` positive integer parts.
fn split_units<R: Rng>(k: usize, rng: &mut R) -> Vec<u64> {
    let mut cuts: Vec<u64> = (0..k - 1).map(|_| rng.gen_range(1..UNITS)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    while cuts.len() < k - 1 {
        let c = rng.gen_range(1..UNITS);
        if let Err(pos) = cuts.binary_search(&c) {
            cuts.insert(pos, c);
        }
    }
    let mut out = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(UNITS)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

fn units(x: u64) -> f64 {
    x as f64 / UNITS as f64
}

/// Random partition of `0..m` into `n` non-empty bundles; returns the owner of each resource.
fn planted_owner<R: Rng>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut owner: Vec<usize> = (0..m).map(|r| if r < n { r } else { rng.gen_range(0..n) }).collect();
    owner.shuffle(rng);
    owner
}

fn bundles(owner: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut b = vec![Vec::new(); n];
    for (r, &p) in owner.iter().enumerate() {
        b[p].push(r);
    }
    b
}

/// Additive values: own bundle sums to 1; a foreign resource is worth a
/// random fraction of its planted value. Player values of any allocation
/// sum to at most `n`, so the optimum is 1.
fn planted_additive<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<(Vec<ValuationOracle>, Vec<usize>)> {
    let owner = planted_owner(n, m, rng);
    let mut base = vec![0u64; m];
    for b in bundles(&owner, n) {
        for (r, x) in b.iter().zip(split_units(b.len(), rng)) {
            base[*r] = x;
        }
    }
    let vals = (0..n)
        .map(|p| {
            let v =
                (0..m).map(|r| if owner[r] == p { units(base[r]) } else { units(base[r] * rng.gen_range(0..=4) / 4) }).collect();
            ValuationOracle::additive(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((vals, owner))
}

/// Each player values only its element group (weight 1 in total); the
/// planted bundle covers the whole group with overlapping covers, and
/// other resources cover some of its elements as decoys.
fn planted_coverage<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<(Vec<ValuationOracle>, Vec<usize>)> {
    let owner = planted_owner(n, m, rng);
    let per_group = 3;
    let mut weights = Vec::with_capacity(n * per_group);
    for _ in 0..n {
        weights.extend(split_units(per_group, rng).into_iter().map(units));
    }
    let group = |p: usize| p * per_group..(p + 1) * per_group;
    let mut covers: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (p, b) in bundles(&owner, n).into_iter().enumerate() {
        // Element j of the group goes to bundle member j mod |b|, then extra random overlaps.
        for (j, u) in group(p).enumerate() {
            covers[b[j % b.len()]].push(u);
        }
        for &r in &b {
            for u in group(p) {
                if rng.gen_bool(0.3) {
                    covers[r].push(u);
                }
            }
        }
    }
    for r in 0..m {
        if rng.gen_bool(0.5) {
            let q = rng.gen_range(0..n);
            if q != owner[r] {
                covers[r].push(rng.gen_range(group(q)));
            }
        }
        covers[r].sort_unstable();
        covers[r].dedup();
    }
    let vals = (0..n)
        .map(|p| {
            let w: Vec<f64> = (0..weights.len()).map(|u| if group(p).contains(&u) { weights[u] } else { 0.0 }).collect();
            ValuationOracle::weighted_coverage(covers.clone(), w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((vals, owner))
}

fn random_additive<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<Vec<ValuationOracle>> {
    (0..n).map(|_| ValuationOracle::additive((0..m).map(|_| units(rng.gen_range(0..=UNITS))).collect())).collect()
}

/// One value per resource, split so planted bundles sum to 1; a resource is
/// allowed for its planted owner and each other player with probability 1/3.
/// Values of any allocation sum to at most `n`, so the optimum is 1.
fn restricted<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<(Vec<ValuationOracle>, Vec<usize>)> {
    let owner = planted_owner(n, m, rng);
    let mut base = vec![0.0; m];
    for b in bundles(&owner, n) {
        for (r, x) in b.iter().zip(split_units(b.len(), rng)) {
            base[*r] = units(x);
        }
    }
    let allowed: Vec<Vec<bool>> = (0..n).map(|p| (0..m).map(|r| owner[r] == p || rng.gen_bool(1.0 / 3.0)).collect()).collect();
    let vals = (0..n)
        .map(|p| ValuationOracle::additive((0..m).map(|r| if allowed[p][r] { base[r] } else { 0.0 }).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok((vals, owner))
}

/// Resource `p` is worth 1 to player `p` only; the remaining tiny resources
/// are worth `1/UNITS..8/UNITS` to everyone. Capped at 1, so the optimum is 1.
fn adversarial<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<(Vec<ValuationOracle>, Vec<usize>)> {
    let tiny: Vec<f64> = (n..m).map(|_| units(rng.gen_range(1..=8))).collect();
    let vals = (0..n)
        .map(|p| {
            let v = (0..m).map(|r| if r < n { if r == p { 1.0 } else { 0.0 } } else { tiny[r - n] }).collect();
            ValuationOracle::truncated_additive(v, 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let owner = (0..m).map(|r| if r < n { r } else { rng.gen_range(0..n) }).collect();
    Ok((vals, owner))
}

pub fn generate(p: &GenParams) -> Result<Generated> {
    let (n, m) = (p.players, p.resources);
    if n == 0 {
        return input("players must be at least 1");
    }
    if m < n && p.family != Family::RandomAdditive {
        return input(format!("{} needs at least as many resources as players", p.family));
    }
    let mut rng = stream(p.seed, &[RNG_TAG, n as u64, m as u64]);
    let (vals, owner) = match p.family {
        Family::PlantedAdditive => planted_additive(n, m, &mut rng).map(|(v, o)| (v, Some(o)))?,
        Family::PlantedCoverage => planted_coverage(n, m, &mut rng).map(|(v, o)| (v, Some(o)))?,
        Family::RandomAdditive => (random_additive(n, m, &mut rng)?, None),
        Family::RestrictedAssignment => restricted(n, m, &mut rng).map(|(v, o)| (v, Some(o)))?,
        Family::AdversarialPrivateResource => adversarial(n, m, &mut rng).map(|(v, o)| (v, Some(o)))?,
    };
    let instance = Instance::from_valuations(vals)?;
    let planted = owner.map(|o| {
        let a = Assignment { owner: o.into_iter().map(Some).collect() };
        let v = instance.min_value(&a);
        (a, v)
    });
    Ok(Generated { instance, planted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{SubmodularVerdict, check_submodular};
    use crate::oracle::brute_opt;

    #[test]
    fn planted_optimum_is_one_and_matches_brute_force() {
        for family in FAMILIES {
            for seed in 0..6 {
                let g = generate(&GenParams { family, players: 3, resources: 6, seed }).unwrap();
                let (opt, _) = brute_opt(&g.instance).unwrap();
                if let Some((_, v)) = g.planted {
                    assert_eq!(v, 1.0, "{family} seed {seed}");
                    assert!((opt - 1.0).abs() < 1e-9, "{family} seed {seed}: brute {opt}");
                }
                for f in g.instance.valuations() {
                    assert_eq!(check_submodular(f).unwrap(), SubmodularVerdict::Ok);
                }
            }
        }
    }

    #[test]
    fn zero_players_and_unknown_family_are_rejected() {
        assert!(generate(&GenParams { family: Family::PlantedAdditive, players: 0, resources: 3, seed: 0 }).is_err());
        assert!("no-such-family".parse::<Family>().is_err());
        assert_eq!("planted-coverage".parse::<Family>().unwrap(), Family::PlantedCoverage);
    }

    #[test]
    fn split_is_exact() {
        let mut rng = stream(3, &[]);
        for k in 1..20 {
            let parts = split_units(k, &mut rng);
            assert_eq!(parts.len(), k);
            assert!(parts.iter().all(|&x| x > 0));
            assert_eq!(parts.iter().map(|&x| units(x)).sum::<f64>(), 1.0);
        }
    }
}
