//! Instances, assignments and value oracles.

use std::sync::Arc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result, input};

/// Absolute tolerance for every value comparison.
pub const TOL: f64 = 1e-9;

/// Largest ground set accepted by exhaustive checks and explicit tables.
pub const MAX_EXHAUSTIVE_GROUND: usize = 20;

#[derive(Debug)]
enum Kind {
    Additive(Vec<f64>),
    WeightedCoverage {
        covers: Vec<Vec<usize>>,
        weights: Vec<f64>,
    },
    TruncatedAdditive {
        values: Vec<f64>,
        cap: f64,
    },
    ExplicitTable {
        ground: Vec<usize>,
        table: Vec<f64>,
    },
    /// `|A ∩ ground| / ground.len()`.
    Cardinality {
        member: Vec<bool>,
        size: usize,
    },
    Scaled {
        inner: Arc<Kind>,
        factor: f64,
    },
    /// 1 if `private` is in the bundle, else `inner` on the bundle minus `excluded`.
    Residual {
        inner: Arc<Kind>,
        private: usize,
        excluded: Vec<bool>,
    },
}

impl Kind {
    fn eval(&self, bundle: &[usize]) -> f64 {
        match self {
            Kind::Additive(values) => bundle.iter().filter_map(|&r| values.get(r)).sum(),
            Kind::WeightedCoverage { covers, weights } => {
                let mut hit = vec![false; weights.len()];
                let mut total = 0.0;
                for &r in bundle {
                    if let Some(elems) = covers.get(r) {
                        for &u in elems {
                            if !hit[u] {
                                hit[u] = true;
                                total += weights[u];
                            }
                        }
                    }
                }
                total
            }
            Kind::TruncatedAdditive { values, cap } => {
                let s: f64 = bundle.iter().filter_map(|&r| values.get(r)).sum();
                s.min(*cap)
            }
            Kind::ExplicitTable { ground, table } => {
                let mut mask = 0usize;
                for &r in bundle {
                    if let Some(p) = ground.iter().position(|&g| g == r) {
                        mask |= 1 << p;
                    }
                }
                table[mask]
            }
            Kind::Cardinality { member, size } => {
                if *size == 0 {
                    return 0.0;
                }
                let k = bundle.iter().filter(|&&r| member.get(r).copied().unwrap_or(false)).count();
                k as f64 / *size as f64
            }
            Kind::Scaled { inner, factor } => inner.eval(bundle) * factor,
            Kind::Residual { inner, private, excluded } => {
                if bundle.contains(private) {
                    return 1.0;
                }
                let rest: Vec<usize> = bundle.iter().copied().filter(|&r| !excluded.get(r).copied().unwrap_or(true)).collect();
                inner.eval(&rest)
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Kind::Additive(_) => "additive",
            Kind::WeightedCoverage { .. } => "weighted_coverage",
            Kind::TruncatedAdditive { .. } => "truncated_additive",
            Kind::ExplicitTable { .. } => "explicit_table",
            Kind::Cardinality { .. } => "cardinality",
            Kind::Scaled { inner, .. } => inner.name(),
            Kind::Residual { .. } => "residual",
        }
    }
}

/// A monotone submodular set function over resource indices `0..domain`.
///
/// Clones share the query counter.
#[derive(Debug, Clone)]
pub struct ValuationOracle {
    kind: Arc<Kind>,
    domain: usize,
    queries: Arc<AtomicU64>,
}

fn check_values(values: &[f64]) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return input(format!("value at index {i} must be finite and non-negative, got {v}"));
        }
    }
    Ok(())
}

impl ValuationOracle {
    fn new(kind: Kind, domain: usize) -> Self {
        ValuationOracle { kind: Arc::new(kind), domain, queries: Arc::new(AtomicU64::new(0)) }
    }

    pub fn additive(values: Vec<f64>) -> Result<Self> {
        check_values(&values)?;
        let domain = values.len();
        Ok(Self::new(Kind::Additive(values), domain))
    }

    /// `covers[r]` lists the universe elements covered by resource `r`.
    pub fn weighted_coverage(covers: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        check_values(&weights)?;
        for (r, elems) in covers.iter().enumerate() {
            if let Some(&u) = elems.iter().find(|&&u| u >= weights.len()) {
                return input(format!("resource {r} covers unknown element {u}"));
            }
        }
        let domain = covers.len();
        Ok(Self::new(Kind::WeightedCoverage { covers, weights }, domain))
    }

    pub fn truncated_additive(values: Vec<f64>, cap: f64) -> Result<Self> {
        check_values(&values)?;
        check_values(&[cap])?;
        let domain = values.len();
        Ok(Self::new(Kind::TruncatedAdditive { values, cap }, domain))
    }

    /// Table indexed by bitmask over `ground` (bit `j` is `ground[j]`). Rejects
    /// tables that are not normalized, monotone and submodular.
    pub fn explicit_table(domain: usize, ground: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        let oracle = Self::explicit_table_unchecked(domain, ground, table)?;
        match check_submodular(&oracle)? {
            SubmodularVerdict::Ok => Ok(oracle),
            v => input(format!("explicit table is not monotone submodular: {v:?}")),
        }
    }

    /// Like [`ValuationOracle::explicit_table`] without the submodularity check.
    pub fn explicit_table_unchecked(domain: usize, ground: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        if ground.len() > MAX_EXHAUSTIVE_GROUND {
            return Err(Error::Capability(format!("explicit table ground set {} > {MAX_EXHAUSTIVE_GROUND}", ground.len())));
        }
        if table.len() != 1 << ground.len() {
            return input(format!("explicit table needs {} entries, got {}", 1usize << ground.len(), table.len()));
        }
        let mut sorted = ground.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ground.len() || ground.iter().any(|&r| r >= domain) {
            return input("explicit table ground must list distinct known resources");
        }
        check_values(&table)?;
        Ok(Self::new(Kind::ExplicitTable { ground, table }, domain))
    }

    /// `f(A) = |A ∩ ground| / |ground|`, the constant 0 when `ground` is empty.
    pub fn cardinality(domain: usize, ground: &[usize]) -> Self {
        let mut member = vec![false; domain];
        for &r in ground {
            member[r] = true;
        }
        Self::new(Kind::Cardinality { member, size: ground.len() }, domain)
    }

    /// `f / eta`, used to normalize a target value to 1.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(Kind::Scaled { inner: self.kind.clone(), factor }, self.domain)
    }

    /// The complex-player function of the canonical reduction over a domain
    /// extended with private resources.
    pub(crate) fn residual(&self, domain: usize, private: usize, excluded: Vec<bool>) -> Self {
        Self::new(Kind::Residual { inner: self.kind.clone(), private, excluded }, domain)
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn kind_name(&self) -> &'static str {
        self.kind.name()
    }

    /// Resources the exhaustive checker ranges over.
    pub fn ground(&self) -> Vec<usize> {
        match &*self.kind {
            Kind::ExplicitTable { ground, .. } => ground.clone(),
            _ => (0..self.domain).collect(),
        }
    }

    /// Validated value query. Duplicates in `bundle` are ignored.
    pub fn evaluate(&self, bundle: &[usize]) -> Result<f64> {
        if let Some(&r) = bundle.iter().find(|&&r| r >= self.domain) {
            return input(format!("unknown resource index {r} (domain {})", self.domain));
        }
        let mut set = bundle.to_vec();
        set.sort_unstable();
        set.dedup();
        Ok(self.value(&set))
    }

    /// Unvalidated value query; `bundle` must be duplicate-free.
    pub fn value(&self, bundle: &[usize]) -> f64 {
        self.queries.fetch_add(1, Ordering::Relaxed);
        // An empty float sum is `-0.0`; report it as `0.0`.
        let v = self.kind.eval(bundle);
        if v == 0.0 { 0.0 } else { v }
    }

    pub fn singleton(&self, r: usize) -> f64 {
        self.value(&[r])
    }

    /// `f(base ∪ {r}) − f(base)`.
    pub fn marginal(&self, base: &[usize], r: usize) -> Result<f64> {
        if base.contains(&r) {
            return input(format!("resource {r} already in base"));
        }
        let mut with = base.to_vec();
        with.push(r);
        let hi = self.evaluate(&with)?;
        let lo = self.evaluate(base)?;
        Ok(hi - lo)
    }

    /// Number of value queries answered so far.
    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub(crate) fn to_spec(&self) -> Option<ValuationSpecParts> {
        match &*self.kind {
            Kind::Additive(v) => Some(ValuationSpecParts::Additive(v.clone())),
            Kind::WeightedCoverage { covers, weights } => Some(ValuationSpecParts::Coverage(covers.clone(), weights.clone())),
            Kind::TruncatedAdditive { values, cap } => Some(ValuationSpecParts::Truncated(values.clone(), *cap)),
            Kind::ExplicitTable { ground, table } => Some(ValuationSpecParts::Table(ground.clone(), table.clone())),
            _ => None,
        }
    }
}

pub(crate) enum ValuationSpecParts {
    Additive(Vec<f64>),
    Coverage(Vec<Vec<usize>>, Vec<f64>),
    Truncated(Vec<f64>, f64),
    Table(Vec<usize>, Vec<f64>),
}

/// Outcome of the exhaustive submodularity check. Sets are resource indices.
#[derive(Debug, Clone, PartialEq)]
pub enum SubmodularVerdict {
    Ok,
    NotNormalized {
        value: f64,
    },
    NotMonotone {
        set: Vec<usize>,
        r: usize,
    },
    /// `f(a ∪ {r}) − f(a) < f(b ∪ {r}) − f(b)` with `a ⊆ b`, `r ∉ b`.
    Counterexample {
        a: Vec<usize>,
        b: Vec<usize>,
        r: usize,
    },
}

fn mask_to_set(ground: &[usize], mask: usize) -> Vec<usize> {
    (0..ground.len()).filter(|j| mask >> j & 1 == 1).map(|j| ground[j]).collect()
}

/// Exhaustive check of normalization, monotonicity and diminishing returns.
///
/// Diminishing returns is checked in its local form
/// `f(S+a) + f(S+b) ≥ f(S+a+b) + f(S)`, which is equivalent.
pub fn check_submodular(oracle: &ValuationOracle) -> Result<SubmodularVerdict> {
    let ground = oracle.ground();
    let k = ground.len();
    if k > MAX_EXHAUSTIVE_GROUND {
        return Err(Error::Capability(format!("ground set {k} > {MAX_EXHAUSTIVE_GROUND}")));
    }
    let table: Vec<f64> = (0..1usize << k).map(|m| oracle.value(&mask_to_set(&ground, m))).collect();
    if table[0].abs() > TOL {
        return Ok(SubmodularVerdict::NotNormalized { value: table[0] });
    }
    for m in 0..1usize << k {
        for j in 0..k {
            if m >> j & 1 == 0 && table[m | 1 << j] < table[m] - TOL {
                return Ok(SubmodularVerdict::NotMonotone { set: mask_to_set(&ground, m), r: ground[j] });
            }
        }
    }
    for m in 0..1usize << k {
        for a in 0..k {
            if m >> a & 1 == 1 {
                continue;
            }
            for b in a + 1..k {
                if m >> b & 1 == 1 {
                    continue;
                }
                let lhs = table[m | 1 << a] + table[m | 1 << b];
                let rhs = table[m | 1 << a | 1 << b] + table[m];
                if lhs < rhs - TOL {
                    return Ok(SubmodularVerdict::Counterexample {
                        a: mask_to_set(&ground, m),
                        b: mask_to_set(&ground, m | 1 << b),
                        r: ground[a],
                    });
                }
            }
        }
    }
    Ok(SubmodularVerdict::Ok)
}

/// Players, resources and one valuation oracle per player.
#[derive(Debug, Clone)]
pub struct Instance {
    resources: Vec<String>,
    players: Vec<String>,
    valuations: Vec<ValuationOracle>,
}

impl Instance {
    pub fn new(resources: Vec<String>, players: Vec<String>, valuations: Vec<ValuationOracle>) -> Result<Self> {
        if players.len() != valuations.len() {
            return input("every player needs exactly one valuation");
        }
        for (ids, what) in [(&resources, "resource"), (&players, "player")] {
            let mut sorted: Vec<&String> = ids.iter().collect();
            sorted.sort();
            if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                return input(format!("duplicate {what} id {:?}", w[0]));
            }
        }
        for (p, v) in valuations.iter().enumerate() {
            if v.domain() != resources.len() {
                return input(format!(
                    "valuation of player {:?} has domain {} but the instance has {} resources",
                    players[p],
                    v.domain(),
                    resources.len()
                ));
            }
        }
        Ok(Instance { resources, players, valuations })
    }

    /// Instance with generated ids `r0..` and `p0..`.
    pub fn from_valuations(valuations: Vec<ValuationOracle>) -> Result<Self> {
        let m = valuations.first().map_or(0, |v| v.domain());
        let resources = (0..m).map(|r| format!("r{r}")).collect();
        let players = (0..valuations.len()).map(|p| format!("p{p}")).collect();
        Instance::new(resources, players, valuations)
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn resource_ids(&self) -> &[String] {
        &self.resources
    }

    pub fn player_ids(&self) -> &[String] {
        &self.players
    }

    pub fn valuation(&self, p: usize) -> &ValuationOracle {
        &self.valuations[p]
    }

    pub fn valuations(&self) -> &[ValuationOracle] {
        &self.valuations
    }

    pub fn resource_index(&self, id: &str) -> Result<usize> {
        self.resources.iter().position(|r| r == id).ok_or_else(|| Error::Input(format!("unknown resource id {id:?}")))
    }

    pub fn player_index(&self, id: &str) -> Result<usize> {
        self.players.iter().position(|p| p == id).ok_or_else(|| Error::Input(format!("unknown player id {id:?}")))
    }

    /// Value of a bundle given by resource ids.
    pub fn evaluate(&self, p: usize, bundle: &[&str]) -> Result<f64> {
        let idx = bundle.iter().map(|id| self.resource_index(id)).collect::<Result<Vec<_>>>()?;
        self.valuations[p].evaluate(&idx)
    }

    /// Every valuation divided by `eta`.
    pub fn scaled(&self, eta: f64) -> Self {
        Instance {
            resources: self.resources.clone(),
            players: self.players.clone(),
            valuations: self.valuations.iter().map(|v| v.scaled(1.0 / eta)).collect(),
        }
    }

    /// Per-player values under `assignment`.
    pub fn player_values(&self, assignment: &Assignment) -> Vec<f64> {
        let bundles = assignment.bundles(self.num_players());
        bundles.iter().enumerate().map(|(p, b)| self.valuations[p].value(b)).collect()
    }

    /// Minimum player value, 0 for an instance without players.
    pub fn min_value(&self, assignment: &Assignment) -> f64 {
        self.player_values(assignment).into_iter().reduce(f64::min).unwrap_or(0.0)
    }
}

/// Total map from resources to an optional player.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub owner: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(num_resources: usize) -> Self {
        Assignment { owner: vec![None; num_resources] }
    }

    pub fn bundle(&self, p: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&r| self.owner[r] == Some(p)).collect()
    }

    pub fn bundles(&self, num_players: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); num_players];
        for (r, o) in self.owner.iter().enumerate() {
            if let Some(p) = o {
                out[*p].push(r);
            }
        }
        out
    }
}
