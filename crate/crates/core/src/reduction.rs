//! Canonical instances and the binary search over the target value.

use serde::Serialize;

use crate::error::{Error, Result, input};
use crate::instance::{Assignment, Instance, TOL, ValuationOracle};

/// `log2(n)` clamped below by 1.
pub fn log2_clamped(n: usize) -> f64 {
    if n < 2 { 1.0 } else { (n as f64).log2().max(1.0) }
}

/// Canonical form of a normalized instance.
///
/// Player `p` of the source instance becomes basic player `p` and complex
/// player `k + p`; complex player `k + p` owns private resource `m + p`.
#[derive(Debug, Clone)]
pub struct CanonicalInstance {
    pub source: Instance,
    pub instance: Instance,
    pub gamma: f64,
    /// `big[p][r]` iff `f_p({r}) ≥ 1/γ`.
    pub big: Vec<Vec<bool>>,
}

impl CanonicalInstance {
    pub fn num_source_players(&self) -> usize {
        self.source.num_players()
    }

    pub fn num_source_resources(&self) -> usize {
        self.source.num_resources()
    }

    pub fn basic(&self, p: usize) -> usize {
        p
    }

    pub fn complex(&self, p: usize) -> usize {
        self.num_source_players() + p
    }

    pub fn private(&self, p: usize) -> usize {
        self.num_source_resources() + p
    }

    pub fn is_basic(&self, q: usize) -> bool {
        q < self.num_source_players()
    }

    /// Source player behind canonical player `q`.
    pub fn source_player(&self, q: usize) -> usize {
        q % self.num_source_players()
    }

    /// Owner of a private resource, if `r` is one.
    pub fn private_owner(&self, r: usize) -> Option<usize> {
        (r >= self.num_source_resources()).then(|| self.complex(r - self.num_source_resources()))
    }

    pub fn num_basic(&self) -> usize {
        self.num_source_players()
    }

    pub fn valuation(&self, q: usize) -> &ValuationOracle {
        self.instance.valuation(q)
    }

    /// Basic players without a value-1 resource under `sigma`.
    pub fn uncovered_basic(&self, sigma: &Assignment) -> Vec<usize> {
        let bundles = sigma.bundles(self.instance.num_players());
        (0..self.num_basic()).filter(|&p| self.valuation(p).value(&bundles[p]) < 1.0 - TOL).collect()
    }

    /// Assignment giving every complex player its private resource.
    pub fn initial_assignment(&self) -> Assignment {
        let mut sigma = Assignment::empty(self.instance.num_resources());
        for p in 0..self.num_source_players() {
            sigma.owner[self.private(p)] = Some(self.complex(p));
        }
        sigma
    }
}

/// Splits every player into a basic and a complex player.
pub fn canonicalize(instance: &Instance, gamma: f64) -> Result<CanonicalInstance> {
    if !(gamma >= 1.0) {
        return input(format!("gamma must be at least 1, got {gamma}"));
    }
    let k = instance.num_players();
    let m = instance.num_resources();
    let domain = m + k;
    let mut big = Vec::with_capacity(k);
    let mut basic = Vec::with_capacity(k);
    let mut complex = Vec::with_capacity(k);
    for p in 0..k {
        let f = instance.valuation(p);
        let b: Vec<bool> = (0..m).map(|r| f.singleton(r) >= 1.0 / gamma - TOL).collect();
        let covers = (0..domain).map(|r| if (r < m && b[r]) || r == m + p { vec![0] } else { vec![] }).collect();
        basic.push(ValuationOracle::weighted_coverage(covers, vec![1.0])?);
        let mut excluded = vec![true; domain];
        excluded[..m].copy_from_slice(&b[..m]);
        complex.push(f.residual(domain, m + p, excluded));
        big.push(b);
    }
    let ids = instance.player_ids();
    let mut players: Vec<String> = ids.iter().map(|p| format!("{p}#basic")).collect();
    players.extend(ids.iter().map(|p| format!("{p}#complex")));
    let mut resources = instance.resource_ids().to_vec();
    resources.extend(ids.iter().map(|p| format!("{p}#private")));
    basic.extend(complex);
    Ok(CanonicalInstance { source: instance.clone(), instance: Instance::new(resources, players, basic)?, gamma, big })
}

/// Canonical counterpart of a source assignment: a player with a big resource
/// keeps it on the basic side, otherwise the basic side takes the private
/// resource and the complex side takes the bundle.
pub fn lift_assignment(canon: &CanonicalInstance, sigma: &Assignment) -> Assignment {
    let mut out = Assignment::empty(canon.instance.num_resources());
    let bundles = sigma.bundles(canon.num_source_players());
    for (p, bundle) in bundles.iter().enumerate() {
        if let Some(&r) = bundle.iter().find(|&&r| canon.big[p][r]) {
            out.owner[r] = Some(canon.basic(p));
            out.owner[canon.private(p)] = Some(canon.complex(p));
            for &r2 in bundle.iter().filter(|&&r2| r2 != r) {
                out.owner[r2] = Some(canon.complex(p));
            }
        } else {
            out.owner[canon.private(p)] = Some(canon.basic(p));
            for &r in bundle {
                out.owner[r] = Some(canon.complex(p));
            }
        }
    }
    out
}

/// Maps a canonical assignment in which both halves of every player reach
/// `1/γ` back to the source instance. Player `p` receives the source
/// resources held by either half.
pub fn decanonicalize(canon: &CanonicalInstance, sigma: &Assignment) -> Result<Assignment> {
    let k = canon.num_source_players();
    let m = canon.num_source_resources();
    let bundles = sigma.bundles(canon.instance.num_players());
    let threshold = 1.0 / canon.gamma - TOL;
    for p in 0..k {
        let b = canon.valuation(canon.basic(p)).value(&bundles[canon.basic(p)]);
        let c = canon.valuation(canon.complex(p)).value(&bundles[canon.complex(p)]);
        if b < 1.0 - TOL || c < threshold {
            return Err(Error::Contract(format!(
                "player {:?} is not covered (basic {b}, complex {c})",
                canon.source.player_ids()[p]
            )));
        }
    }
    let mut out = Assignment::empty(m);
    for r in 0..m {
        out.owner[r] = sigma.owner[r].map(|q| canon.source_player(q));
    }
    for p in 0..k {
        let v = canon.source.valuation(p).value(&out.bundle(p));
        if v < threshold {
            return Err(Error::Internal(format!("decanonicalized player {p} has value {v}")));
        }
    }
    Ok(out)
}

/// Verdict of the gap decision at a fixed target value.
#[derive(Debug, Clone)]
pub enum GapOutcome {
    /// Assignment of the source instance with every value at least `η/γ`.
    Success(Assignment),
    /// Certified: no assignment reaches `η`.
    Reject,
    /// Neither outcome could be established.
    Inconclusive(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct GridAttempt {
    pub eta: f64,
    pub outcome: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub assignment: Assignment,
    pub eta_star: f64,
    pub min_value: f64,
    /// Smallest rejected target, an upper bound on the optimum.
    pub opt_upper_bound: Option<f64>,
    pub attempts: Vec<GridAttempt>,
}

/// Geometric grid `hi, hi/2, …` down to the smallest positive singleton.
pub fn search_grid(instance: &Instance, max_steps: usize) -> Vec<f64> {
    let all: Vec<usize> = (0..instance.num_resources()).collect();
    let hi = instance.valuations().iter().map(|f| f.value(&all)).fold(f64::INFINITY, f64::min);
    let lo = instance
        .valuations()
        .iter()
        .map(|f| (0..instance.num_resources()).map(|r| f.singleton(r)).filter(|&v| v > TOL).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min);
    if !hi.is_finite() || hi <= TOL || !lo.is_finite() {
        return Vec::new();
    }
    let steps = ((hi / lo).log2().ceil().max(0.0) as usize + 1).clamp(1, max_steps);
    (0..steps).map(|j| hi / 2f64.powi(j as i32)).collect()
}

/// Largest grid value at which `solve` succeeds, assuming success is
/// monotone along the grid. Leftover resources are handed to the player
/// with the currently smallest value.
pub fn binary_search_solve<F>(instance: &Instance, max_steps: usize, mut solve: F) -> Result<SearchResult>
where
    F: FnMut(f64) -> Result<GapOutcome>,
{
    let grid = search_grid(instance, max_steps);
    let mut attempts = Vec::new();
    let mut best: Option<(f64, Assignment)> = None;
    let mut upper: Option<f64> = None;
    let mut run = |j: usize, attempts: &mut Vec<GridAttempt>| -> Result<Option<Assignment>> {
        let eta = grid[j];
        let out = solve(eta)?;
        let (tag, detail, res) = match out {
            GapOutcome::Success(a) => ("success", String::new(), Some(a)),
            GapOutcome::Reject => {
                upper = Some(upper.map_or(eta, |u: f64| u.min(eta)));
                ("reject", String::new(), None)
            }
            GapOutcome::Inconclusive(why) => ("inconclusive", why, None),
        };
        attempts.push(GridAttempt { eta, outcome: tag, detail });
        Ok(res)
    };
    if let Some(last) = grid.len().checked_sub(1)
        && let Some(a) = run(last, &mut attempts)?
    {
        best = Some((grid[last], a));
        // `ok` is the smallest index known to succeed, `bad` the largest known to fail.
        let mut ok = last;
        let mut bad: isize = -1;
        while ok as isize - bad > 1 {
            let mid = ((bad + ok as isize) / 2) as usize;
            match run(mid, &mut attempts)? {
                Some(a) => {
                    ok = mid;
                    best = Some((grid[mid], a));
                }
                None => bad = mid as isize,
            }
        }
    }
    let (eta_star, mut assignment) = best.unwrap_or((0.0, Assignment::empty(instance.num_resources())));
    fill_leftovers(instance, &mut assignment);
    let min_value = instance.min_value(&assignment);
    Ok(SearchResult { assignment, eta_star, min_value, opt_upper_bound: upper, attempts })
}

/// Gives every unassigned resource to the player of smallest current value.
pub fn fill_leftovers(instance: &Instance, assignment: &mut Assignment) {
    if instance.num_players() == 0 {
        return;
    }
    let mut values = instance.player_values(assignment);
    for r in 0..assignment.owner.len() {
        if assignment.owner[r].is_some() {
            continue;
        }
        let p = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("players exist");
        assignment.owner[r] = Some(p);
        values[p] = instance.valuation(p).value(&assignment.bundle(p));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn additive(rows: &[&[f64]]) -> Instance {
        Instance::from_valuations(rows.iter().map(|r| ValuationOracle::additive(r.to_vec()).unwrap()).collect()).unwrap()
    }

    #[test]
    fn big_resources_follow_the_threshold() {
        let inst = additive(&[&[0.5, 0.005]]);
        let c = canonicalize(&inst, 10.0).unwrap();
        assert_eq!(c.big[0], vec![true, false]);
    }

    #[test]
    fn basic_player_without_big_resources_needs_private() {
        let inst = additive(&[&[0.01, 0.02]]);
        let c = canonicalize(&inst, 10.0).unwrap();
        let f = c.valuation(c.basic(0));
        assert_eq!(f.value(&[0, 1]), 0.0);
        assert_eq!(f.value(&[c.private(0)]), 1.0);
    }

    #[test]
    fn complex_player_ignores_big_resources() {
        let inst = additive(&[&[0.5, 0.05, 0.05]]);
        let c = canonicalize(&inst, 10.0).unwrap();
        let f = c.valuation(c.complex(0));
        assert!((f.value(&[0, 1, 2]) - 0.1).abs() < 1e-12);
        assert_eq!(f.value(&[c.private(0)]), 1.0);
    }

    #[test]
    fn decanonicalize_case_big() {
        let inst = additive(&[&[0.5, 0.05]]);
        let c = canonicalize(&inst, 10.0).unwrap();
        let mut s = Assignment::empty(3);
        s.owner[0] = Some(c.basic(0));
        s.owner[c.private(0)] = Some(c.complex(0));
        let a = decanonicalize(&c, &s).unwrap();
        assert_eq!(a.bundle(0), vec![0]);
    }

    #[test]
    fn decanonicalize_case_small_bundle() {
        let inst = additive(&[&[0.5, 0.05, 0.06]]);
        let c = canonicalize(&inst, 10.0).unwrap();
        let mut s = Assignment::empty(4);
        s.owner[c.private(0)] = Some(c.basic(0));
        s.owner[1] = Some(c.complex(0));
        s.owner[2] = Some(c.complex(0));
        let a = decanonicalize(&c, &s).unwrap();
        assert_eq!(a.bundle(0), vec![1, 2]);
    }

    #[test]
    fn decanonicalize_rejects_uncovered_pair() {
        let inst = additive(&[&[0.5]]);
        let c = canonicalize(&inst, 10.0).unwrap();
        let s = Assignment::empty(2);
        assert!(matches!(decanonicalize(&c, &s), Err(Error::Contract(_))));
    }

    #[test]
    fn single_player_search_hits_total_value() {
        let inst = additive(&[&[1.5, 0.5]]);
        let res = binary_search_solve(&inst, 40, |_| {
            let mut a = Assignment::empty(2);
            a.owner = vec![Some(0), Some(0)];
            Ok(GapOutcome::Success(a))
        })
        .unwrap();
        assert_eq!(res.eta_star, 2.0);
        assert_eq!(res.assignment.bundle(0), vec![0, 1]);
    }

    #[test]
    fn failure_everywhere_yields_zero_target_but_hands_out_resources() {
        let inst = additive(&[&[1.0], &[1.0]]);
        let res = binary_search_solve(&inst, 40, |_| Ok(GapOutcome::Reject)).unwrap();
        assert_eq!(res.eta_star, 0.0);
        assert_eq!(res.opt_upper_bound, Some(1.0));
        assert_eq!(res.assignment.owner, vec![Some(0)]);
    }

    #[test]
    fn log_is_clamped() {
        assert_eq!(log2_clamped(0), 1.0);
        assert_eq!(log2_clamped(16), 4.0);
    }
}
