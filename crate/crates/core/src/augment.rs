//! The augmentation driver: structured flows, one augmentation step, the
//! gap loop over steps, and the binary search over target values.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::auggraph::{
    AugInstance, AugSolution, CanonicalLayout, Level, Role, build_aug_instance, check_feasible, planted_solution, sigma_bar,
};
use crate::clp::{ClpContext, ClpParams, ClpStats, Membership, membership};
use crate::config::{AugSolverKind, Mode, Params};
use crate::error::{Error, Result};
use crate::flowcore::{Bucket, BucketAnchor, QuantizeInput, decompose_unit, max_flow_integral, quantize_flow};
use crate::instance::{Assignment, Instance, TOL};
use crate::oracle::brute_aug;
use crate::reduction::{
    CanonicalInstance, GapOutcome, GridAttempt, SearchResult, binary_search_solve, canonicalize, decanonicalize,
};
use crate::rounding::round_all_levels;

/// Which sources the first level of a structured flow uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowCase {
    /// Only supply sources of unassigned resources.
    SupplyOnly,
    /// Only complex-player sources.
    ComplexOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructuredFlow {
    pub solution: AugSolution,
    pub case: FlowCase,
    /// Depth mark of each complex sink on levels `1..h` (`None` when unused).
    pub depth: Vec<Vec<Option<usize>>>,
    pub t_coverage: f64,
    /// Whether the last level avoids complex sources (fails only in practical mode).
    pub structured: bool,
    /// Paths removed above sinks that could not be marked.
    pub fallback_deletions: usize,
}

#[derive(Debug, Clone)]
struct UnitPath {
    edges: Vec<usize>,
    source: usize,
    sink: usize,
}

fn layout(inst: &AugInstance) -> Result<&CanonicalLayout> {
    inst.layout.as_ref().ok_or_else(|| Error::Input("augmentation instance has no canonical layout".into()))
}

/// `1 + log(βn²)/log(γ/(2α))`.
pub fn depth_requirement(alpha: f64, beta: u32, gamma: f64, n: usize) -> f64 {
    let ratio = gamma / (2.0 * alpha);
    if ratio <= 1.0 {
        return f64::INFINITY;
    }
    1.0 + (beta as f64 * (n * n) as f64).ln() / ratio.ln()
}

struct Structurer<'a> {
    inst: &'a AugInstance,
    t: usize,
    paths: Vec<Vec<UnitPath>>,
    kept: Vec<Vec<bool>>,
    required: Vec<Vec<usize>>,
}

impl<'a> Structurer<'a> {
    fn new(inst: &'a AugInstance, sol: &AugSolution, t: usize) -> Result<Self> {
        let mut paths = Vec::with_capacity(inst.depth());
        for (i, flow) in sol.flows.iter().enumerate() {
            let level = inst.level(i);
            let mut ps: Vec<UnitPath> = decompose_unit(level.num_vertices(), &level.edges, flow, level.terminal())?
                .into_iter()
                .map(|edges| UnitPath {
                    source: level.edges[edges[0]].tail,
                    sink: level.edges[*edges.last().expect("non-empty path")].head,
                    edges,
                })
                .collect();
            ps.sort_by(|a, b| (a.source, &a.edges).cmp(&(b.source, &b.edges)));
            paths.push(ps);
        }
        let kept = paths.iter().map(|ps| vec![true; ps.len()]).collect();
        Ok(Structurer { inst, t, paths, kept, required: vec![Vec::new(); inst.depth()] })
    }

    /// Drops every path that does not end in a required sink, top-down.
    fn prune(&mut self) {
        let mut required = vec![self.t];
        for i in 0..self.inst.depth() {
            for (j, p) in self.paths[i].iter().enumerate() {
                if self.kept[i][j] && !required.contains(&p.sink) {
                    self.kept[i][j] = false;
                }
            }
            self.required[i] = required.clone();
            if i + 1 < self.inst.depth() {
                let mut next: Vec<usize> = self.paths[i]
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| self.kept[i][*j])
                    .filter_map(|(_, p)| self.inst.link(i, p.source))
                    .collect();
                next.sort_unstable();
                next.dedup();
                required = next;
            }
        }
    }

    /// Marginal weights of the kept paths into `v`, in path order.
    fn weights(&self, i: usize, v: usize) -> Vec<(usize, f64)> {
        let level = self.inst.level(i);
        let mut set: Vec<usize> = Vec::new();
        let mut prev = 0.0;
        let mut out = Vec::new();
        for (j, p) in self.paths[i].iter().enumerate() {
            if !self.kept[i][j] || p.sink != v {
                continue;
            }
            let last = *p.edges.last().expect("non-empty path");
            if !set.contains(&last) {
                set.push(last);
            }
            let now = level.sink_value(v, &set);
            out.push((j, now - prev));
            prev = now;
        }
        out
    }

    fn keep_only(&mut self, i: usize, v: usize, keep: impl Fn(&UnitPath) -> bool) {
        for (j, p) in self.paths[i].iter().enumerate() {
            if p.sink == v && !keep(p) {
                self.kept[i][j] = false;
            }
        }
    }

    fn flows(&self) -> AugSolution {
        let flows = (0..self.inst.depth())
            .map(|i| {
                let mut f = vec![0u32; self.inst.level(i).num_edges()];
                for (j, p) in self.paths[i].iter().enumerate() {
                    if self.kept[i][j] {
                        for &e in &p.edges {
                            f[e] += 1;
                        }
                    }
                }
                f
            })
            .collect();
        AugSolution { flows }
    }

    fn t_has_paths(&self) -> bool {
        self.paths[0].iter().enumerate().any(|(j, p)| self.kept[0][j] && p.sink == self.t)
    }
}

fn is_supply(level: &Level, s: usize) -> bool {
    matches!(level.roles[s], Role::Supply(_))
}

/// Turns a solution covering `t` into one whose first level uses a single
/// kind of source and whose last level uses no complex sources.
///
/// `strict` enforces the depth precondition and the structuring guarantees;
/// otherwise sinks that cannot be marked have their parents removed.
pub fn structure_flow(
    inst: &AugInstance,
    sol: &AugSolution,
    alpha: f64,
    beta: u32,
    gamma: f64,
    strict: bool,
) -> Result<StructuredFlow> {
    let lay = layout(inst)?;
    let t = lay.collector;
    let h = inst.depth();
    if strict {
        let need = depth_requirement(alpha, beta, gamma, inst.level(0).num_vertices());
        if (h as f64) < need {
            return Err(Error::Input(format!("h = {h} is below the required depth {need:.3}")));
        }
    }
    let fail = check_feasible(inst, sol, &[t], alpha, beta);
    if !fail.is_ok() {
        return Err(Error::Contract(format!("input solution is not feasible: {fail:?}")));
    }
    let mut st = Structurer::new(inst, sol, t)?;
    st.prune();
    let level0 = inst.level(0);
    let weights = st.weights(0, t);
    let supply_weight: f64 = weights.iter().filter(|(j, _)| is_supply(level0, st.paths[0][*j].source)).map(|(_, w)| w).sum();
    let case = if supply_weight >= 1.0 / (2.0 * alpha) - TOL { FlowCase::SupplyOnly } else { FlowCase::ComplexOnly };
    let mut depth = vec![vec![None; 0]; h];
    let mut structured = true;
    let mut fallback_deletions = 0;
    match case {
        FlowCase::SupplyOnly => {
            st.keep_only(0, t, |p| is_supply(level0, p.source));
            for i in 1..h {
                st.kept[i].iter_mut().for_each(|k| *k = false);
            }
            st.prune();
        }
        FlowCase::ComplexOnly => {
            st.keep_only(0, t, |p| !is_supply(level0, p.source));
            let snapshot = st.kept.clone();
            loop {
                st.prune();
                depth = mark_depths(&mut st, h);
                let unmarked: Vec<(usize, usize)> = (1..h)
                    .flat_map(|i| st.required[i].iter().map(move |&u| (i, u)))
                    .filter(|&(i, u)| depth[i][u].is_none())
                    .collect();
                if unmarked.is_empty() {
                    break;
                }
                if strict {
                    return Err(Error::Internal(format!("{} complex sinks left unmarked", unmarked.len())));
                }
                for (i, u) in unmarked {
                    for (j, p) in st.paths[i - 1].iter().enumerate() {
                        if st.kept[i - 1][j] && inst.link(i - 1, p.source) == Some(u) {
                            st.kept[i - 1][j] = false;
                            fallback_deletions += 1;
                        }
                    }
                }
                if !st.t_has_paths() {
                    // Keep the minimal subtree of `t` without the last-level property.
                    st.kept = snapshot.clone();
                    st.prune();
                    depth = vec![vec![None; 0]; h];
                    structured = false;
                    break;
                }
            }
        }
    }
    let last = h - 1;
    let level_last = inst.level(last);
    if st.paths[last]
        .iter()
        .enumerate()
        .any(|(j, p)| st.kept[last][j] && matches!(level_last.roles[p.source], Role::ComplexSource(_)))
    {
        structured = false;
    }
    let solution = st.flows();
    let t_coverage = level0.coverage(t, &solution.flows[0]);
    if strict {
        let check = check_feasible(inst, &solution, &[t], 2.0 * h as f64 * alpha, beta);
        if !check.is_ok() || !structured {
            return Err(Error::Internal(format!("structured flow violates its guarantees: {check:?}")));
        }
    }
    Ok(StructuredFlow { solution, case, depth, t_coverage, structured, fallback_deletions })
}

/// Marks required complex sinks on levels `1..h` by depth, deleting the
/// paths into a marked sink that do not come from its marking category.
fn mark_depths(st: &mut Structurer, h: usize) -> Vec<Vec<Option<usize>>> {
    let inst = st.inst;
    let mut depth: Vec<Vec<Option<usize>>> = (0..h).map(|i| vec![None; inst.level(i).num_vertices()]).collect();
    for ell in 1..h.max(2) {
        for i in 1..h {
            let level = inst.level(i);
            for u in st.required[i].clone() {
                if depth[i][u].is_some() {
                    continue;
                }
                let in_category = |p: &UnitPath, depth: &Vec<Vec<Option<usize>>>| -> bool {
                    if ell == 1 {
                        is_supply(level, p.source)
                    } else {
                        i + 1 < h && inst.link(i, p.source).is_some_and(|w| depth[i + 1][w] == Some(ell - 1))
                    }
                };
                let w = st.weights(i, u);
                let total: f64 = w.iter().map(|(_, x)| x).sum();
                let cat: f64 = w.iter().filter(|(j, _)| in_category(&st.paths[i][*j], &depth)).map(|(_, x)| x).sum();
                if total > TOL && cat > total / (2.0 * h as f64) {
                    depth[i][u] = Some(ell);
                    let snapshot = depth.clone();
                    st.keep_only(i, u, |p| in_category(p, &snapshot));
                }
            }
        }
        st.prune();
    }
    depth
}

/// Parameters of one augmentation step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepParams {
    pub alpha: f64,
    pub beta: u32,
    pub h: usize,
    pub k: usize,
    pub strict: bool,
}

/// Outcome of [`augment_once`].
#[derive(Debug, Clone, Serialize)]
pub struct AugmentStep {
    #[serde(skip)]
    pub sigma: Assignment,
    pub k: usize,
    pub case: Option<FlowCase>,
    pub uncovered_before: usize,
    pub uncovered_after: usize,
    pub flow_into_t: u32,
    /// Complex players that took their private resource back.
    pub repaired: usize,
    pub complex_min: f64,
    /// `1/(8αβh²(k+1)) − 4(k+1)/γ`.
    pub complex_floor_bound: f64,
    /// Congestion of the structured flow, used as `β` in the quantization.
    pub congestion: u32,
    pub structured: bool,
}

pub fn complex_floor_bound(alpha: f64, beta: u32, h: usize, k: usize, gamma: f64) -> f64 {
    let (b, h, k) = (beta as f64, h as f64, k as f64);
    1.0 / (8.0 * alpha * b * h * h * k) - 4.0 * k / gamma
}

fn complex_min(canon: &CanonicalInstance, sigma: &Assignment) -> f64 {
    let bundles = sigma.bundles(canon.instance.num_players());
    (0..canon.num_source_players())
        .map(|p| canon.valuation(canon.complex(p)).value(&bundles[canon.complex(p)]))
        .fold(f64::INFINITY, f64::min)
}

/// Applies an integral flow of the augmentation graph to `sigma_bar`:
/// every used edge from a resource to a player hands the resource over.
fn apply_flow(level: &Level, base: &Assignment, flow: &[u32]) -> Assignment {
    let mut out = base.clone();
    for (e, &x) in flow.iter().enumerate() {
        if x == 0 {
            continue;
        }
        let edge = level.edges[e];
        if let Role::Resource(r) = level.roles[edge.tail] {
            match level.roles[edge.head] {
                Role::Basic(q) | Role::ComplexSink(q) => out.owner[r] = Some(q),
                _ => {}
            }
        }
    }
    out
}

fn rational(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `i` with `2^{-(i-1)} > m ≥ 2^{-i}`; 0 for `m ≥ 1` and `u32::MAX` for zero marginals.
fn dyadic_class(m: f64) -> u32 {
    if m <= TOL { u32::MAX } else { (-m.log2()).ceil().max(0.0) as u32 }
}

/// Splits `edges` (with resources `res`) into dyadic classes of their
/// marginal values under `f`, in the given order.
fn dyadic_buckets(canon: &CanonicalInstance, q: usize, edges: &[usize], res: &[usize], anchor: BucketAnchor) -> Vec<Bucket> {
    let f = canon.valuation(q);
    let mut classes: Vec<(u32, Vec<usize>)> = Vec::new();
    let mut prefix = Vec::new();
    let mut prev = 0.0;
    for (&e, &r) in edges.iter().zip(res) {
        prefix.push(r);
        let now = f.value(&prefix);
        let c = dyadic_class(now - prev);
        prev = now;
        match classes.iter_mut().find(|(k, _)| *k == c) {
            Some((_, es)) => es.push(e),
            None => classes.push((c, vec![e])),
        }
    }
    classes.sort_by_key(|(k, _)| *k);
    classes.into_iter().map(|(_, edges)| Bucket { edges, anchor: anchor.clone() }).collect()
}

/// One augmentation step: structures the given solution of `I(σ_k, h)`,
/// reassigns resources along it and repairs complex players.
pub fn augment_once(
    canon: &CanonicalInstance,
    sigma_k: &Assignment,
    inst: &AugInstance,
    sol: &AugSolution,
    p: StepParams,
) -> Result<AugmentStep> {
    let lay = layout(inst)?;
    if lay.sigma_bar != sigma_bar(canon, sigma_k) {
        return Err(Error::Input("augmentation instance was not built from this assignment".into()));
    }
    let before = canon.uncovered_basic(sigma_k).len();
    let gamma = canon.gamma;
    let mut step = AugmentStep {
        sigma: sigma_k.clone(),
        k: p.k,
        case: None,
        uncovered_before: before,
        uncovered_after: before,
        flow_into_t: 0,
        repaired: 0,
        complex_min: complex_min(canon, sigma_k),
        complex_floor_bound: complex_floor_bound(p.alpha, p.beta, p.h, p.k + 1, gamma),
        congestion: 0,
        structured: true,
    };
    if inst.nothing_to_augment() {
        return Ok(step);
    }
    let sf = structure_flow(inst, sol, p.alpha, p.beta, gamma, p.strict)?;
    let level = inst.level(0);
    let t = lay.collector;
    let k = canon.num_source_players();
    let bar = &lay.sigma_bar;
    let beta = sf.solution.congestion().max(1);
    step.case = Some(sf.case);
    step.congestion = beta;
    step.structured = sf.structured;
    let (sigma, into_t) = match sf.case {
        FlowCase::SupplyOnly => {
            let g1 = &sf.solution.flows[0];
            let cap: Vec<i64> = g1.iter().map(|&x| i64::from(x > 0)).collect();
            let sources: Vec<(usize, i64)> = level.sources.iter().filter(|&&s| is_supply(level, s)).map(|&s| (s, 1)).collect();
            let (value, f) = max_flow_integral(level.num_vertices(), &level.edges, &sources, t, &cap)?;
            let inflow: u32 = level.in_edges(t).iter().map(|&e| g1[e]).sum();
            if (value as u64) * (beta as u64) < inflow as u64 || value < 1 {
                return Err(Error::Internal(format!("integral flow {value} below {inflow}/{beta}")));
            }
            let g: Vec<u32> = f.iter().map(|&x| x as u32).collect();
            let mut sigma = apply_flow(level, bar, &g);
            let bundles = sigma_k.bundles(canon.instance.num_players());
            for pl in 0..k {
                let c = canon.complex(pl);
                let private = canon.private(pl);
                if sigma_k.owner[private] == Some(c) {
                    continue;
                }
                let lost = &bundles[c];
                let taken: Vec<usize> = lost.iter().copied().filter(|&r| sigma.owner[r].is_some_and(|o| o != c)).collect();
                if taken.len() >= 2 {
                    if sigma.owner[private].is_some_and(|o| canon.is_basic(o)) {
                        step.repaired += 1;
                    }
                    sigma.owner[private] = Some(c);
                } else {
                    for &r in lost.iter().filter(|r| !taken.contains(r)) {
                        sigma.owner[r] = Some(c);
                    }
                }
            }
            (sigma, value as u32)
        }
        FlowCase::ComplexOnly => {
            let g1 = &sf.solution.flows[0];
            let mut g = vec![0u32; level.num_edges()];
            for f in &sf.solution.flows {
                for (e, &x) in f.iter().enumerate() {
                    g[e] += x;
                }
            }
            let h = inst.depth() as u64;
            let kk = p.k as u64 + 1;
            let b = beta as u64;
            let fractional: Vec<BigRational> =
                (0..level.num_edges()).map(|e| rational(g1[e] as u64, 2 * b) + rational(g[e] as u64, 2 * kk * b * h)).collect();
            let in_x: Vec<bool> = (0..k).map(|pl| level.out_edges(lay.complex_source[pl]).iter().any(|&e| g[e] > 0)).collect();
            let mut buckets = Vec::new();
            for pl in 0..k {
                let c = canon.complex(pl);
                if in_x[pl] {
                    let v = lay.complex_sink[pl];
                    let edges: Vec<usize> = level.in_edges(v).iter().copied().filter(|&e| g[e] > 0).collect();
                    let res: Vec<usize> = edges
                        .iter()
                        .map(|&e| match level.roles[level.edges[e].tail] {
                            Role::Resource(r) => r,
                            _ => unreachable!("complex sinks are fed by resources"),
                        })
                        .collect();
                    buckets.extend(dyadic_buckets(canon, c, &edges, &res, BucketAnchor::Head(v)));
                } else if sigma_k.owner[canon.private(pl)] != Some(c) {
                    let mut res = Vec::new();
                    let mut edges = Vec::new();
                    for r in sigma_k.bundle(c) {
                        if let Some(s) = lay.supply[r] {
                            let e = level.out_edges(s)[0];
                            if g[e] > 0 {
                                res.push(r);
                                edges.push(e);
                            }
                        }
                    }
                    buckets.extend(dyadic_buckets(canon, c, &edges, &res, BucketAnchor::Sources));
                }
            }
            let q = QuantizeInput {
                n: level.num_vertices(),
                edges: &level.edges,
                sources: &level.sources,
                sinks: &level.sinks,
                target: t,
                fractional: &fractional,
                buckets: &buckets,
                min_target_inflow: 1,
            };
            let gq = quantize_flow(&q)?;
            let mut sigma = apply_flow(level, bar, &gq);
            let touched = |r: usize| {
                let v = lay.resource[r];
                level.in_edges(v).iter().chain(level.out_edges(v)).any(|&e| gq[e] > 0)
            };
            for pl in 0..k {
                let c = canon.complex(pl);
                if in_x[pl] || sigma_k.owner[canon.private(pl)] == Some(c) {
                    continue;
                }
                for r in sigma_k.bundle(c) {
                    if !touched(r) {
                        sigma.owner[r] = Some(c);
                    }
                }
            }
            let into: u32 = level.in_edges(t).iter().map(|&e| gq[e]).sum();
            (sigma, into)
        }
    };
    let after = canon.uncovered_basic(&sigma).len();
    if after >= before {
        return Err(Error::Internal(format!("augmentation made no progress ({before} → {after} uncovered)")));
    }
    step.uncovered_after = after;
    step.flow_into_t = into_t;
    step.complex_min = complex_min(canon, &sigma);
    step.sigma = sigma;
    Ok(step)
}

/// Answer of an augmentation solver on `I(σ, h)`.
#[derive(Debug, Clone)]
pub enum AugAnswer {
    Solution {
        solution: AugSolution,
        alpha: f64,
        beta: u32,
    },
    /// Certified: no solution with coverage 1 and congestion 1 exists.
    NoSolution,
}

#[derive(Debug, Clone)]
pub struct GapRun {
    pub outcome: GapOutcome,
    pub steps: Vec<AugmentStep>,
    /// Final canonical assignment.
    pub sigma: Assignment,
}

/// Repeats augmentation steps from the private-resource assignment until
/// every basic player is covered or the solver certifies infeasibility.
pub fn solve_gap<F>(canon: &CanonicalInstance, h: usize, strict: bool, mut aug: F) -> Result<GapRun>
where
    F: FnMut(&AugInstance, usize) -> Result<AugAnswer>,
{
    let mut sigma = canon.initial_assignment();
    let mut steps = Vec::new();
    let cap = canon.num_basic() + 1;
    for k in 1..=cap {
        if canon.uncovered_basic(&sigma).is_empty() {
            let outcome = match decanonicalize(canon, &sigma) {
                Ok(a) => GapOutcome::Success(a),
                Err(Error::Contract(msg)) => GapOutcome::Inconclusive(msg),
                Err(e) => return Err(e),
            };
            return Ok(GapRun { outcome, steps, sigma });
        }
        let inst = build_aug_instance(canon, &sigma, h)?;
        let answer = aug(&inst, k).map_err(|e| with_context(e, k))?;
        match answer {
            AugAnswer::NoSolution => return Ok(GapRun { outcome: GapOutcome::Reject, steps, sigma }),
            AugAnswer::Solution { solution, alpha, beta } => {
                let p = StepParams { alpha, beta, h, k, strict };
                let step = augment_once(canon, &sigma, &inst, &solution, p).map_err(|e| with_context(e, k))?;
                sigma = step.sigma.clone();
                steps.push(step);
            }
        }
    }
    Err(Error::Internal(format!("gap loop exceeded {cap} iterations")))
}

fn with_context(e: Error, k: usize) -> Error {
    match e {
        Error::Input(m) => Error::Input(format!("iteration {k}: {m}")),
        Error::Capability(m) => Error::Capability(format!("iteration {k}: {m}")),
        Error::Contract(m) => Error::Contract(format!("iteration {k}: {m}")),
        Error::Budget(m) => Error::Budget(format!("iteration {k}: {m}")),
        Error::Internal(m) => Error::Internal(format!("iteration {k}: {m}")),
        Error::Solver(m) => Error::Solver(format!("iteration {k}: {m}")),
        other => other,
    }
}

fn collector(inst: &AugInstance) -> Result<usize> {
    Ok(layout(inst)?.collector)
}

/// Exhaustive solver; answers at coverage 1 and congestion 1.
pub fn exact_aug_solver() -> impl FnMut(&AugInstance, usize) -> Result<AugAnswer> {
    |inst: &AugInstance, _k: usize| {
        let t = collector(inst)?;
        Ok(match brute_aug(inst, &[t])? {
            Some(solution) => AugAnswer::Solution { solution, alpha: 1.0, beta: 1 },
            None => AugAnswer::NoSolution,
        })
    }
}

/// Solver that returns the flow of a known assignment of value 1.
pub fn planted_aug_solver<'a>(
    canon: &'a CanonicalInstance,
    opt: &'a Assignment,
) -> impl FnMut(&AugInstance, usize) -> Result<AugAnswer> + 'a {
    move |inst: &AugInstance, _k: usize| {
        Ok(AugAnswer::Solution { solution: planted_solution(canon, inst, opt)?, alpha: 1.0, beta: 1 })
    }
}

/// Configuration LP at budget `γ_round` everywhere, then level-by-level rounding.
pub fn lp_aug_solver<'a>(
    params: &'a Params,
    stats: &'a mut ClpStats,
) -> impl FnMut(&AugInstance, usize) -> Result<AugAnswer> + 'a {
    move |inst: &AugInstance, k: usize| {
        let t = collector(inst)?;
        let mut cp = ClpParams::from_params(params);
        cp.seed = rand::RngCore::next_u64(&mut crate::rng::stream(params.seed, &[k as u64]));
        let seed = cp.seed;
        let mut ctx = ClpContext::new(inst, cp);
        let b = vec![params.rounding_gamma; inst.total_edges()];
        let res = membership(&mut ctx, 0, &[t], &b);
        accumulate(stats, &ctx.stats);
        match res? {
            Membership::Separated(_) => Ok(AugAnswer::NoSolution),
            Membership::Member(w) => {
                let r = round_all_levels(inst, &w, &[t], params.alpha, params.rounding_gamma, seed, params.rounding_attempts)?;
                stats.rounding_attempts += r.levels.iter().map(|l| l.attempts as u64).sum::<u64>();
                let beta = r.solution.congestion().max(1);
                Ok(AugAnswer::Solution { solution: r.solution, alpha: params.alpha, beta })
            }
        }
    }
}

fn accumulate(into: &mut ClpStats, from: &ClpStats) {
    into.sep_calls += from.sep_calls;
    into.lp_solves += from.lp_solves;
    into.columns += from.columns;
    into.rounding_attempts += from.rounding_attempts;
}

/// Full pipeline result.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub assignment: Assignment,
    pub eta_star: f64,
    pub min_value: f64,
    pub opt_upper_bound: Option<f64>,
    pub attempts: Vec<GridAttempt>,
    pub steps: Vec<(f64, Vec<AugmentStep>)>,
    pub stats: ClpStats,
    pub params: Params,
}

impl SolveReport {
    /// Every grid point was rejected.
    pub fn all_rejected(&self) -> bool {
        !self.attempts.is_empty() && self.eta_star == 0.0 && self.attempts.iter().all(|a| a.outcome == "reject")
    }

    pub fn budget_exhausted(&self) -> bool {
        self.eta_star == 0.0 && self.attempts.iter().any(|a| a.outcome == "inconclusive" && a.detail.contains("budget"))
    }
}

/// Binary search over target values, deciding each with the gap loop.
pub fn solve(instance: &Instance, params: &Params) -> Result<SolveReport> {
    if instance.num_players() == 0 {
        return Err(Error::Input("instance has no players".into()));
    }
    let strict = params.mode == Mode::Theory;
    let mut stats = ClpStats::default();
    let mut steps = Vec::new();
    let result: SearchResult = binary_search_solve(instance, params.grid_steps, |eta| {
        let canon = canonicalize(&instance.scaled(eta), params.gamma)?;
        let run = match params.aug_solver {
            AugSolverKind::Exact => solve_gap(&canon, params.h, strict, exact_aug_solver()),
            AugSolverKind::Lp => solve_gap(&canon, params.h, strict, lp_aug_solver(params, &mut stats)),
        };
        match run {
            Ok(run) => {
                steps.push((eta, run.steps));
                Ok(match run.outcome {
                    GapOutcome::Success(a) => GapOutcome::Success(a),
                    other => other,
                })
            }
            Err(e @ (Error::Budget(_) | Error::Capability(_))) => Ok(GapOutcome::Inconclusive(e.to_string())),
            Err(e) => Err(e),
        }
    })?;
    Ok(SolveReport {
        assignment: result.assignment,
        eta_star: result.eta_star,
        min_value: result.min_value,
        opt_upper_bound: result.opt_upper_bound,
        attempts: result.attempts,
        steps,
        stats,
        params: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::instance::ValuationOracle;
    use crate::oracle::brute_opt;
    use crate::reduction::lift_assignment;

    fn additive(rows: &[&[f64]]) -> Instance {
        Instance::from_valuations(rows.iter().map(|r| ValuationOracle::additive(r.to_vec()).unwrap()).collect()).unwrap()
    }

    #[test]
    fn dyadic_classes() {
        assert_eq!(dyadic_class(1.0), 0);
        assert_eq!(dyadic_class(0.7), 1);
        assert_eq!(dyadic_class(0.5), 1);
        assert_eq!(dyadic_class(0.3), 2);
        assert_eq!(dyadic_class(0.0), u32::MAX);
    }

    #[test]
    fn one_free_resource_covers_the_basic_player() {
        let inst = additive(&[&[1.0]]);
        let canon = canonicalize(&inst, 8.0).unwrap();
        let sigma = canon.initial_assignment();
        let aug = build_aug_instance(&canon, &sigma, 1).unwrap();
        let (_, opt) = brute_opt(&inst).unwrap();
        let planted = planted_solution(&canon, &aug, &lift_assignment(&canon, &opt)).unwrap();
        let p = StepParams { alpha: 1.0, beta: 1, h: 1, k: 1, strict: false };
        let step = augment_once(&canon, &sigma, &aug, &planted, p).unwrap();
        assert_eq!(step.case, Some(FlowCase::SupplyOnly));
        assert_eq!((step.uncovered_before, step.uncovered_after), (1, 0));
        assert_eq!(step.sigma.owner[canon.private(0)], Some(canon.complex(0)));
    }

    #[test]
    fn nothing_to_augment_keeps_sigma() {
        let inst = additive(&[&[1.0]]);
        let canon = canonicalize(&inst, 8.0).unwrap();
        let mut sigma = canon.initial_assignment();
        sigma.owner[0] = Some(canon.basic(0));
        let aug = build_aug_instance(&canon, &sigma, 2).unwrap();
        let step = augment_once(
            &canon,
            &sigma,
            &aug,
            &AugSolution::zero(&aug),
            StepParams { alpha: 1.0, beta: 1, h: 2, k: 1, strict: false },
        )
        .unwrap();
        assert_eq!(step.sigma, sigma);
        assert_eq!(step.case, None);
    }

    #[test]
    fn infeasible_input_is_rejected_before_mutation() {
        let inst = additive(&[&[1.0]]);
        let canon = canonicalize(&inst, 8.0).unwrap();
        let sigma = canon.initial_assignment();
        let aug = build_aug_instance(&canon, &sigma, 1).unwrap();
        let p = StepParams { alpha: 1.0, beta: 1, h: 1, k: 1, strict: false };
        assert!(matches!(augment_once(&canon, &sigma, &aug, &AugSolution::zero(&aug), p), Err(Error::Contract(_))));
    }

    #[test]
    fn gap_rejects_without_big_resources() {
        // The basic player values its private resource, so σ_0 covers nobody;
        // a single free big resource is needed. With none, the exact solver rejects.
        let inst = additive(&[&[0.01]]);
        let canon = canonicalize(&inst, 8.0).unwrap();
        let run = solve_gap(&canon, 2, false, exact_aug_solver()).unwrap();
        assert!(matches!(run.outcome, GapOutcome::Reject));
    }

    #[test]
    fn gap_with_exact_solver_on_diagonal() {
        let inst = additive(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let canon = canonicalize(&inst, 8.0).unwrap();
        let run = solve_gap(&canon, 2, false, exact_aug_solver()).unwrap();
        let GapOutcome::Success(a) = run.outcome else { panic!("expected success: {:?}", run.outcome) };
        assert!(inst.min_value(&a) >= 1.0 / 8.0 - 1e-9);
    }

    #[test]
    fn pipeline_single_player_gets_everything() {
        let inst = additive(&[&[0.5, 0.25, 0.25]]);
        let params = Config { aug_solver: AugSolverKind::Exact, ..Config::default() }.resolve(4).unwrap();
        let r = solve(&inst, &params).unwrap();
        assert_eq!(r.assignment.owner, vec![Some(0); 3]);
        assert!(r.min_value <= 1.0 + 1e-9);
    }
}
