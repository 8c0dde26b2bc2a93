//! Separation for the dual of the column LP: given `(π, μ)` find a column
//! of sink `v` with `μ·(g ⊕ d) < π_v`.
//!
//! Edges whose singleton value reaches `1/α` are handled exactly by a
//! shortest-path search. The remaining edges go through continuous greedy
//! over the LINSEP polytope followed by randomized path rounding.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use rand::Rng;

use crate::auggraph::Level;
use crate::clp::{ClpContext, Column, Witness};
use crate::error::{Error, Result};
use crate::instance::TOL;
use crate::lp::{Cmp, LinearProgram, LpStatus};

/// Cheapest columns found so far, valid for one fixed `μ`.
#[derive(Debug, Default)]
pub struct MinCostCache {
    best: HashMap<(usize, usize), Option<Arc<Column>>>,
}

/// Rounds of "find something cheaper" when searching a minimum-cost column.
const MIN_COST_ROUNDS: usize = 8;
/// Largest `k = ⌈ΣΦ/π⌉` the strict rounding accepts.
const MAX_PARTS: usize = 10;

const RNG_ROUND: u64 = 1;
const RNG_GREEDY: u64 = 2;

/// Cost of using a source: the cheapest column of its linked sink, or 0
/// when unlinked. `None` marks a source whose linked sink has no column.
pub type SourceCost = Option<(f64, Option<Arc<Column>>)>;

/// Looks for a column of sink `v` at level `i` with cost below `pi`.
pub fn sep(
    ctx: &mut ClpContext,
    cache: &mut MinCostCache,
    i: usize,
    v: usize,
    pi: f64,
    mu: &[f64],
) -> Result<Option<Arc<Column>>> {
    ctx.stats.sep_calls += 1;
    if !(pi > TOL) {
        return Ok(None);
    }
    let level = ctx.inst.levels[i].clone();
    if level.in_edges(v).is_empty() {
        return Ok(None);
    }
    let costs = source_costs(ctx, cache, i, mu)?;
    if let Some(c) = large_branch(ctx, &level, i, v, pi, mu, &costs) {
        return Ok(Some(c));
    }
    small_branch(ctx, &level, i, v, pi, mu, &costs)
}

/// Cheapest column of sink `v` at level `i` under `μ`, memoized in `cache`.
pub fn min_cost_column(
    ctx: &mut ClpContext,
    cache: &mut MinCostCache,
    i: usize,
    v: usize,
    mu: &[f64],
) -> Result<Option<Arc<Column>>> {
    if let Some(hit) = cache.best.get(&(i, v)) {
        return Ok(hit.clone());
    }
    let mut best: Option<Arc<Column>> = None;
    let mut bound = f64::INFINITY;
    for _ in 0..MIN_COST_ROUNDS {
        match sep(ctx, cache, i, v, bound, mu)? {
            Some(c) => {
                bound = c.cost(mu);
                best = Some(c);
                if bound <= TOL {
                    break;
                }
            }
            None => break,
        }
    }
    cache.best.insert((i, v), best.clone());
    Ok(best)
}

/// Cost of every source of level `i` under `μ`, indexed by vertex.
pub fn source_costs(ctx: &mut ClpContext, cache: &mut MinCostCache, i: usize, mu: &[f64]) -> Result<Vec<SourceCost>> {
    let level = ctx.inst.levels[i].clone();
    let mut out = vec![None; level.num_vertices()];
    for &s in &level.sources {
        out[s] = match ctx.inst.link(i, s) {
            None => Some((0.0, None)),
            Some(u) => min_cost_column(ctx, cache, i + 1, u, mu)?.map(|c| (c.cost(mu), Some(c))),
        };
    }
    Ok(out)
}

fn sub_witness(i: usize, cols: Vec<Arc<Column>>) -> Option<Arc<Witness>> {
    (!cols.is_empty()).then(|| Arc::new(Witness { level: i + 1, entries: cols.into_iter().map(|c| (c, 1.0)).collect() }))
}

fn is_large(level: &Level, v: usize, e: usize, alpha: f64) -> bool {
    level.sink_value(v, &[e]) >= 1.0 / alpha - TOL
}

/// Cheapest single path ending in an edge of singleton value `≥ 1/α`.
fn large_branch(
    ctx: &mut ClpContext,
    level: &Level,
    i: usize,
    v: usize,
    pi: f64,
    mu: &[f64],
    costs: &[SourceCost],
) -> Option<Arc<Column>> {
    let alpha = ctx.params.alpha;
    let large: Vec<usize> = level.in_edges(v).iter().copied().filter(|&e| is_large(level, v, e, alpha)).collect();
    if large.is_empty() {
        return None;
    }
    let n = level.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &s in &level.sources {
        if let Some((c, _)) = &costs[s] {
            dist[s] = *c;
            heap.push(Reverse((c.to_bits(), s)));
        }
    }
    while let Some(Reverse((bits, u))) = heap.pop() {
        if f64::from_bits(bits) > dist[u] {
            continue;
        }
        for &e in level.out_edges(u) {
            let w = level.edges[e].head;
            if level.is_sink(w) {
                continue;
            }
            let nd = dist[u] + mu[ctx.inst.global_edge(i, e)];
            if nd < dist[w] {
                dist[w] = nd;
                pred[w] = Some(e);
                heap.push(Reverse((nd.to_bits(), w)));
            }
        }
    }
    let (cost, e) = large
        .iter()
        .map(|&e| (dist[level.edges[e].tail] + mu[ctx.inst.global_edge(i, e)], e))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?;
    if !(cost < pi - TOL) {
        return None;
    }
    let mut path = vec![e];
    let mut u = level.edges[e].tail;
    while let Some(p) = pred[u] {
        path.push(p);
        u = level.edges[p].tail;
    }
    let sub = costs[u].as_ref().and_then(|(_, c)| c.clone());
    let flow = path.into_iter().rev().map(|e| (e, 1)).collect();
    Some(ctx.column(i, v, flow, sub_witness(i, sub.into_iter().collect())))
}

/// The LINSEP polytope of sink `v` restricted to small edges: flows from
/// usable sources into `v` with `g ≤ 1` and total cost at most `π`.
struct Linsep {
    /// Level edge of each LP variable.
    vars: Vec<usize>,
    /// LP variable of each small edge, in `small` order.
    small_vars: Vec<Option<usize>>,
    lp: LinearProgram,
    num_edges: usize,
}

impl Linsep {
    fn build(level: &Level, v: usize, small: &[usize], costs: &[SourceCost], mu_of: impl Fn(usize) -> f64, pi: f64) -> Self {
        let m = level.num_edges();
        let n = level.num_vertices();
        let mut allowed = vec![false; m];
        for (e, edge) in level.edges.iter().enumerate() {
            let tail_ok = !level.is_source(edge.tail) || costs[edge.tail].is_some();
            let head_ok = if edge.head == v { small.contains(&e) } else { !level.is_sink(edge.head) };
            allowed[e] = tail_ok && head_ok;
        }
        // Keep edges reachable from usable sources that can still reach `v`.
        let mut fwd = vec![false; n];
        let mut stack: Vec<usize> = level.sources.iter().copied().filter(|&s| costs[s].is_some()).collect();
        for &s in &stack {
            fwd[s] = true;
        }
        while let Some(u) = stack.pop() {
            for &e in level.out_edges(u) {
                let w = level.edges[e].head;
                if allowed[e] && !fwd[w] {
                    fwd[w] = true;
                    stack.push(w);
                }
            }
        }
        let mut bwd = vec![false; n];
        bwd[v] = true;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &e in level.in_edges(u) {
                let w = level.edges[e].tail;
                if allowed[e] && !bwd[w] {
                    bwd[w] = true;
                    stack.push(w);
                }
            }
        }
        let mut lp = LinearProgram::new();
        let mut var_of = vec![None; m];
        let mut vars = Vec::new();
        for e in 0..m {
            let edge = level.edges[e];
            if allowed[e] && fwd[edge.tail] && bwd[edge.head] {
                var_of[e] = Some(lp.var(0.0));
                vars.push(e);
            }
        }
        for u in 0..n {
            if level.terminal()[u] {
                continue;
            }
            let mut coeffs: Vec<(usize, f64)> = level.in_edges(u).iter().filter_map(|&e| var_of[e].map(|x| (x, 1.0))).collect();
            coeffs.extend(level.out_edges(u).iter().filter_map(|&e| var_of[e].map(|x| (x, -1.0))));
            if !coeffs.is_empty() {
                lp.row(coeffs, Cmp::Eq, 0.0);
            }
        }
        for (j, _) in vars.iter().enumerate() {
            lp.row(vec![(j, 1.0)], Cmp::Le, 1.0);
        }
        if pi.is_finite() {
            let coeffs = vars
                .iter()
                .enumerate()
                .map(|(j, &e)| {
                    let tail = level.edges[e].tail;
                    let src = if level.is_source(tail) { costs[tail].as_ref().map_or(0.0, |c| c.0) } else { 0.0 };
                    (j, mu_of(e) + src)
                })
                .collect();
            lp.row(coeffs, Cmp::Le, pi);
        }
        let small_vars = small.iter().map(|&e| var_of[e]).collect();
        Linsep { vars, small_vars, lp, num_edges: m }
    }

    /// `max Σ c_j g(small_j)`; returns the small-edge projection and the full flow.
    fn maximize(&self, c: &[f64]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        let mut lp = self.lp.clone();
        for (j, var) in self.small_vars.iter().enumerate() {
            if let Some(x) = var {
                lp.objective[*x] = -c[j];
            }
        }
        let sol = lp.solve()?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => return Err(Error::Internal("bounded LINSEP reported unbounded".into())),
        }
        let clip = |x: f64| if x < 1e-9 { 0.0 } else { x.min(1.0) };
        let mut full = vec![0.0; self.num_edges];
        for (j, &e) in self.vars.iter().enumerate() {
            full[e] = clip(sol.x[j]);
        }
        let proj = self.small_vars.iter().map(|var| var.map_or(0.0, |x| clip(sol.x[x]))).collect();
        Ok(Some((proj, full)))
    }
}

/// Solves `max c·g(δ(v) small)` over the LINSEP polytope and returns the full flow.
pub fn solve_linsep(ctx: &mut ClpContext, i: usize, v: usize, pi: f64, mu: &[f64], c: &[f64]) -> Result<Option<Vec<f64>>> {
    let level = ctx.inst.levels[i].clone();
    let mut cache = MinCostCache::default();
    let costs = source_costs(ctx, &mut cache, i, mu)?;
    let small: Vec<usize> = level.in_edges(v).iter().copied().filter(|&e| !is_large(&level, v, e, ctx.params.alpha)).collect();
    if c.len() != small.len() {
        return Err(Error::Input(format!("objective has {} entries for {} small edges", c.len(), small.len())));
    }
    let inst = ctx.inst;
    let ls = Linsep::build(&level, v, &small, &costs, |e| mu[inst.global_edge(i, e)], pi);
    Ok(ls.maximize(c)?.map(|(_, full)| full))
}

/// Continuous greedy over the LINSEP polytope of `v` restricted to its
/// small edges, maximizing the coverage of `v` truncated at 1.
#[allow(clippy::too_many_arguments)]
pub fn fractional_separation(
    ctx: &mut ClpContext,
    level: &Level,
    i: usize,
    v: usize,
    pi: f64,
    mu: &[f64],
    costs: &[SourceCost],
) -> Result<Option<FractionalSep>> {
    let alpha = ctx.params.alpha;
    let small: Vec<usize> = level.in_edges(v).iter().copied().filter(|&e| !is_large(level, v, e, alpha)).collect();
    if small.is_empty() {
        return Ok(None);
    }
    let inst = ctx.inst;
    let ls = Linsep::build(level, v, &small, costs, |e| mu[inst.global_edge(i, e)], pi);
    if ls.small_vars.iter().all(Option::is_none) {
        return Ok(None);
    }
    let sv = level.sink_valuation(v).ok_or_else(|| Error::Input(format!("{v} is not a sink")))?;
    let element: Vec<usize> = small.iter().map(|&e| sv.elements[level.in_position(e)]).collect();
    let buf = RefCell::new(Vec::with_capacity(small.len()));
    let truncated = |set: &[usize]| -> f64 {
        let mut elems = buf.borrow_mut();
        elems.clear();
        elems.extend(set.iter().map(|&j| element[j]));
        elems.sort_unstable();
        elems.dedup();
        sv.oracle.value(&elems).min(1.0)
    };
    let opts =
        GreedyOptions { delta: ctx.params.delta, samples: ctx.params.samples, exact_limit: ctx.params.exact_marginal_limit };
    let mut rng = ctx.rng(RNG_GREEDY, i, v);
    ctx.stats.lp_solves += (1.0 / opts.delta).ceil() as u64;
    let Some(out) = continuous_greedy(small.len(), truncated, &opts, &mut rng, |c| ls.maximize(c))? else {
        return Ok(None);
    };
    Ok(Some(FractionalSep { g: out.full, y: out.y, small }))
}

#[allow(clippy::too_many_arguments)]
fn small_branch(
    ctx: &mut ClpContext,
    level: &Level,
    i: usize,
    v: usize,
    pi: f64,
    mu: &[f64],
    costs: &[SourceCost],
) -> Result<Option<Arc<Column>>> {
    match fractional_separation(ctx, level, i, v, pi, mu, costs)? {
        Some(frac) => round_separation(ctx, level, i, v, pi, mu, costs, &frac),
        None => Ok(None),
    }
}

/// Fractional LINSEP point: the level flow `g` and its values `y` on the small edges into `v`.
#[derive(Debug, Clone)]
pub struct FractionalSep {
    pub g: Vec<f64>,
    pub y: Vec<f64>,
    pub small: Vec<usize>,
}

/// Peels source-to-`v` paths off a nearly conserving flow by walking
/// backwards from each edge into `v`.
pub fn peel_paths(level: &Level, g: &[f64], v: usize) -> Vec<(Vec<usize>, f64)> {
    const EPS: f64 = 1e-9;
    let mut rem: Vec<f64> = g.iter().map(|&x| if x > EPS { x } else { 0.0 }).collect();
    let mut out = Vec::new();
    for &last in level.in_edges(v) {
        while rem[last] > EPS {
            let mut path = vec![last];
            let mut w = rem[last];
            let mut u = level.edges[last].tail;
            let mut dead = false;
            while !level.is_source(u) {
                let Some(&e) = level
                    .in_edges(u)
                    .iter()
                    .filter(|&&e| rem[e] > EPS)
                    .max_by(|&&a, &&b| rem[a].total_cmp(&rem[b]).then(b.cmp(&a)))
                else {
                    dead = true;
                    break;
                };
                if path.len() > level.num_vertices() {
                    dead = true;
                    break;
                }
                w = w.min(rem[e]);
                path.push(e);
                u = level.edges[e].tail;
            }
            if dead {
                rem[last] = 0.0;
                break;
            }
            for &e in &path {
                rem[e] -= w;
            }
            path.reverse();
            out.push((path, w));
        }
    }
    out
}

/// Rounds a fractional LINSEP point to a column of cost below `pi`, or
/// gives up after the attempt cap. Every returned column has been checked
/// for coverage, cost, congestion and the sub-budget box.
#[allow(clippy::too_many_arguments)]
pub fn round_separation(
    ctx: &mut ClpContext,
    level: &Level,
    i: usize,
    v: usize,
    pi: f64,
    mu: &[f64],
    costs: &[SourceCost],
    frac: &FractionalSep,
) -> Result<Option<Arc<Column>>> {
    let alpha = ctx.params.alpha;
    let beta = ctx.params.beta;
    let strict = ctx.params.strict_rounding;
    let paths = peel_paths(level, &frac.g, v);
    if paths.is_empty() {
        return Ok(None);
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, (p, _)) in paths.iter().enumerate() {
        let last = *p.last().expect("non-empty path");
        match groups.iter_mut().find(|(e, _)| *e == last) {
            Some((_, members)) => members.push(idx),
            None => groups.push((last, vec![idx])),
        }
    }
    groups.sort_by_key(|(e, _)| *e);
    let source_of = |p: &[usize]| level.edges[p[0]].tail;
    let phi = |p: &[usize]| -> f64 {
        let path_cost: f64 = p.iter().map(|&e| mu[ctx.inst.global_edge(i, e)]).sum();
        path_cost + costs[source_of(p)].as_ref().map_or(f64::INFINITY, |c| c.0)
    };
    let phis: Vec<f64> = paths.iter().map(|(p, _)| phi(p)).collect();
    let mut rng = ctx.rng(RNG_ROUND, i, v);
    for _ in 0..ctx.params.sep_attempts {
        ctx.stats.rounding_attempts += 1;
        let mut sampled: Vec<usize> = Vec::new();
        for (_, members) in &groups {
            let u: f64 = rng.r#gen();
            let mut acc = 0.0;
            for &idx in members {
                acc += paths[idx].1;
                if u < acc {
                    sampled.push(idx);
                    break;
                }
            }
        }
        if sampled.is_empty() {
            continue;
        }
        let value = |set: &[usize]| -> f64 {
            let last: Vec<usize> = set.iter().map(|&idx| *paths[idx].0.last().expect("non-empty")).collect();
            level.sink_value(v, &last)
        };
        if strict && value(&sampled).min(1.0) < 0.5 {
            continue;
        }
        let total: f64 = sampled.iter().map(|&idx| phis[idx]).sum();
        let k = if pi.is_finite() { ((total / pi).ceil() as usize).max(1) } else { 1 };
        if strict && k > MAX_PARTS {
            continue;
        }
        let (parts, overflow) = partition(&sampled, &phis, pi, k);
        if overflow.len() > k || parts.iter().any(|p| pi.is_finite() && p.iter().map(|&idx| phis[idx]).sum::<f64>() >= pi) {
            return Err(Error::Internal("Φ-partition broke its structure".into()));
        }
        let best = parts
            .iter()
            .filter(|p| !p.is_empty())
            .map(|p| (value(p), p))
            .filter(|(val, _)| *val >= 1.0 / alpha - TOL)
            .max_by(|a, b| a.0.total_cmp(&b.0));
        let Some((_, chosen)) = best else { continue };
        if let Some(c) = build_column(ctx, level, i, v, pi, mu, costs, &paths, chosen, alpha, beta) {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Greedy split into `k` parts of `Φ`-sum below `pi`; a path that would
/// push the current part to `pi` goes to the overflow set instead.
fn partition(sampled: &[usize], phis: &[f64], pi: f64, k: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut parts = vec![Vec::new(); k];
    let mut overflow = Vec::new();
    let mut j = 0;
    let mut sum = 0.0;
    for &idx in sampled {
        if j >= k {
            overflow.push(idx);
        } else if sum + phis[idx] < pi {
            parts[j].push(idx);
            sum += phis[idx];
        } else {
            overflow.push(idx);
            j += 1;
            sum = 0.0;
        }
    }
    (parts, overflow)
}

#[allow(clippy::too_many_arguments)]
fn build_column(
    ctx: &mut ClpContext,
    level: &Level,
    i: usize,
    v: usize,
    pi: f64,
    mu: &[f64],
    costs: &[SourceCost],
    paths: &[(Vec<usize>, f64)],
    chosen: &[usize],
    alpha: f64,
    beta: u32,
) -> Option<Arc<Column>> {
    let mut g = vec![0u32; level.num_edges()];
    let mut subs: Vec<Arc<Column>> = Vec::new();
    let mut used_sources = Vec::new();
    for &idx in chosen {
        let p = &paths[idx].0;
        for &e in p {
            g[e] += 1;
        }
        let s = level.edges[p[0]].tail;
        if !used_sources.contains(&s) {
            used_sources.push(s);
            if let Some((_, Some(c))) = &costs[s] {
                subs.push(c.clone());
            }
        }
    }
    if g.iter().any(|&x| x > beta) || level.coverage(v, &g) < 1.0 / alpha - TOL {
        return None;
    }
    subs.sort_by_key(|c| c.sink);
    let flow: Vec<(usize, u32)> = g.iter().enumerate().filter(|(_, x)| **x > 0).map(|(e, &x)| (e, x)).collect();
    let col = ctx.column(i, v, flow, sub_witness(i, subs));
    if let Some(sub) = &col.sub
        && sub.usage().iter().any(|&(_, x)| x > beta as f64 + TOL)
    {
        return None;
    }
    (col.cost(mu) < pi - TOL).then_some(col)
}

/// Sampling and step parameters of continuous greedy.
#[derive(Debug, Clone)]
pub struct GreedyOptions {
    pub delta: f64,
    pub samples: usize,
    /// Marginals are exact while at most this many coordinates are fractional.
    pub exact_limit: usize,
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub y: Vec<f64>,
    /// Same convex combination applied to the full points returned by the maximizer.
    pub full: Vec<f64>,
    pub steps: usize,
}

/// Continuous greedy over a downward-closed polytope given by a linear
/// maximizer returning `(projection onto [0,1]^n, full point)`, or `None`
/// when the polytope is empty.
pub fn continuous_greedy<F, M, R>(
    n: usize,
    f: F,
    opts: &GreedyOptions,
    rng: &mut R,
    mut maximizer: M,
) -> Result<Option<GreedyOutcome>>
where
    F: Fn(&[usize]) -> f64,
    M: FnMut(&[f64]) -> Result<Option<(Vec<f64>, Vec<f64>)>>,
    R: Rng,
{
    if !(opts.delta > 0.0 && opts.delta <= 1.0) {
        return Err(Error::Input("delta must lie in (0, 1]".into()));
    }
    let mut y = vec![0.0; n];
    let mut full: Vec<f64> = Vec::new();
    let mut t = 0.0;
    let mut steps = 0;
    while t < 1.0 - 1e-12 {
        let dt = opts.delta.min(1.0 - t);
        let w = marginals(&f, &y, opts, rng);
        let Some((x, z)) = maximizer(&w)? else { return Ok(None) };
        if full.is_empty() {
            full = vec![0.0; z.len()];
        }
        for (yj, xj) in y.iter_mut().zip(&x) {
            *yj = (*yj + dt * xj).min(1.0);
        }
        for (fj, zj) in full.iter_mut().zip(&z) {
            *fj += dt * zj;
        }
        t += dt;
        steps += 1;
    }
    Ok(Some(GreedyOutcome { y, full, steps }))
}

const FRAC_EPS: f64 = 1e-12;

fn split_support(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let ones = (0..x.len()).filter(|&j| x[j] >= 1.0 - FRAC_EPS).collect();
    let frac = (0..x.len()).filter(|&j| x[j] > FRAC_EPS && x[j] < 1.0 - FRAC_EPS).collect();
    (ones, frac)
}

/// `E[f(R ∪ {j}) − f(R)]` for every `j`, with `R ~ y`.
fn marginals<F: Fn(&[usize]) -> f64, R: Rng>(f: &F, y: &[f64], opts: &GreedyOptions, rng: &mut R) -> Vec<f64> {
    let n = y.len();
    let (ones, frac) = split_support(y);
    let mut w = vec![0.0; n];
    let add = |set: &mut Vec<usize>, prob: f64, w: &mut Vec<f64>| {
        set.sort_unstable();
        let base = f(set);
        for j in 0..n {
            if set.binary_search(&j).is_ok() {
                continue;
            }
            set.push(j);
            let with = f(set);
            set.pop();
            w[j] += prob * (with - base);
        }
    };
    if frac.len() <= opts.exact_limit {
        for mask in 0..1usize << frac.len() {
            let mut prob = 1.0;
            let mut set = ones.clone();
            for (b, &j) in frac.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    prob *= y[j];
                    set.push(j);
                } else {
                    prob *= 1.0 - y[j];
                }
            }
            if prob > 0.0 {
                add(&mut set, prob, &mut w);
            }
        }
    } else {
        let p = 1.0 / opts.samples as f64;
        for _ in 0..opts.samples {
            let mut set = ones.clone();
            for &j in &frac {
                if rng.r#gen::<f64>() < y[j] {
                    set.push(j);
                }
            }
            add(&mut set, p, &mut w);
        }
    }
    w
}

/// Exact multilinear extension by enumerating the fractional coordinates.
pub fn multilinear_exact<F: Fn(&[usize]) -> f64>(f: F, x: &[f64]) -> Result<f64> {
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Input("x must lie in [0,1]^n".into()));
    }
    let (ones, frac) = split_support(x);
    if frac.len() > 16 {
        return Err(Error::Capability(format!("{} fractional coordinates > 16", frac.len())));
    }
    let mut total = 0.0;
    for mask in 0..1usize << frac.len() {
        let mut prob = 1.0;
        let mut set = ones.clone();
        for (b, &j) in frac.iter().enumerate() {
            if mask >> b & 1 == 1 {
                prob *= x[j];
                set.push(j);
            } else {
                prob *= 1.0 - x[j];
            }
        }
        set.sort_unstable();
        total += prob * f(&set);
    }
    Ok(total)
}

/// Monte-Carlo estimate of the multilinear extension from `samples` draws.
pub fn multilinear_estimate<F: Fn(&[usize]) -> f64, R: Rng>(f: F, x: &[f64], samples: usize, rng: &mut R) -> Result<f64> {
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Input("x must lie in [0,1]^n".into()));
    }
    if samples == 0 {
        return Err(Error::Input("need at least one sample".into()));
    }
    let mut total = 0.0;
    let mut set = Vec::with_capacity(x.len());
    for _ in 0..samples {
        set.clear();
        for (j, &p) in x.iter().enumerate() {
            if rng.r#gen::<f64>() < p {
                set.push(j);
            }
        }
        total += f(&set);
    }
    Ok(total / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auggraph::{AugInstance, LevelBuilder, Role};
    use crate::clp::ClpParams;
    use crate::instance::ValuationOracle;
    use crate::rng::stream;

    fn box_maximizer(n: usize, cap: f64) -> impl FnMut(&[f64]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        move |c: &[f64]| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| c[b].total_cmp(&c[a]).then(a.cmp(&b)));
            let mut x = vec![0.0; n];
            let mut left = cap;
            for j in order {
                if left <= 0.0 || c[j] <= 0.0 {
                    break;
                }
                x[j] = left.min(1.0);
                left -= x[j];
            }
            Ok(Some((x.clone(), x)))
        }
    }

    #[test]
    fn additive_multilinear_is_linear() {
        let vals = [0.3, 0.5, 0.2];
        let f = |s: &[usize]| s.iter().map(|&j| vals[j]).sum::<f64>();
        let x = [0.1, 0.7, 0.4];
        let exact = multilinear_exact(f, &x).unwrap();
        assert!((exact - (0.03 + 0.35 + 0.08)).abs() < 1e-12);
        assert_eq!(multilinear_exact(f, &[0.0; 3]).unwrap(), 0.0);
        assert!((multilinear_exact(f, &[1.0; 3]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_example_value() {
        let f = |s: &[usize]| (0.8 * s.len() as f64).min(1.0);
        assert!((multilinear_exact(f, &[0.5, 0.5]).unwrap() - 0.65).abs() < 1e-12);
    }

    #[test]
    fn estimate_close_to_exact() {
        let f = |s: &[usize]| (0.3 * s.len() as f64).min(1.0);
        let x = [0.2, 0.9, 0.5, 0.5, 0.1];
        let exact = multilinear_exact(f, &x).unwrap();
        let est = multilinear_estimate(f, &x, 20_000, &mut stream(3, &[])).unwrap();
        assert!((est - exact).abs() < 0.02);
    }

    #[test]
    fn greedy_on_additive_picks_best_singleton() {
        let vals = [0.1, 0.7, 0.3];
        let f = |s: &[usize]| s.iter().map(|&j| vals[j]).sum::<f64>();
        let opts = GreedyOptions { delta: 0.02, samples: 100, exact_limit: 12 };
        let out = continuous_greedy(3, f, &opts, &mut stream(1, &[]), box_maximizer(3, 1.0)).unwrap().unwrap();
        let val = multilinear_exact(f, &out.y).unwrap();
        assert!(val >= (1.0 - 1.0 / std::f64::consts::E - 0.02) * 0.7);
        assert!(out.y.iter().sum::<f64>() <= 1.0 + 1e-9);
    }

    #[test]
    fn greedy_on_zero_function() {
        let opts = GreedyOptions { delta: 0.1, samples: 10, exact_limit: 12 };
        let out = continuous_greedy(2, |_: &[usize]| 0.0, &opts, &mut stream(1, &[]), box_maximizer(2, 1.0)).unwrap().unwrap();
        assert_eq!(multilinear_exact(|_: &[usize]| 0.0, &out.y).unwrap(), 0.0);
    }

    /// `s_j → v` for `n` sources with additive values `val`.
    fn star(n: usize, val: f64) -> (AugInstance, usize) {
        let mut b = LevelBuilder::new();
        let v = b.vertex(Role::Plain);
        for _ in 0..n {
            let s = b.vertex(Role::Plain);
            b.edge(s, v);
            b.source(s);
        }
        b.sink(v, ValuationOracle::additive(vec![val; n]).unwrap());
        (AugInstance::new(vec![b.build().unwrap()], vec![]).unwrap(), v)
    }

    #[test]
    fn large_edge_gives_direct_path() {
        let (inst, v) = star(1, 1.0);
        let mut ctx = ClpContext::new(&inst, ClpParams::practical(40.0, 5, 1));
        let c = sep(&mut ctx, &mut MinCostCache::default(), 0, v, 1.0, &[0.0]).unwrap().unwrap();
        assert_eq!(c.flow, vec![(0, 1)]);
    }

    #[test]
    fn expensive_edges_give_nothing() {
        let (inst, v) = star(10, 0.02);
        let mut ctx = ClpContext::new(&inst, ClpParams::practical(10.0, 5, 1));
        let mu = vec![5.0; 10];
        assert!(sep(&mut ctx, &mut MinCostCache::default(), 0, v, 1.0, &mu).unwrap().is_none());
    }

    #[test]
    fn small_edges_are_rounded_into_a_column() {
        let (inst, v) = star(30, 0.02);
        let mut ctx = ClpContext::new(&inst, ClpParams::practical(10.0, 5, 1));
        let mu = vec![0.01; 30];
        let c = sep(&mut ctx, &mut MinCostCache::default(), 0, v, 1.0, &mu).unwrap().unwrap();
        let g = c.dense_flow(30);
        assert!(inst.level(0).coverage(v, &g) >= 0.1 - TOL);
        assert!(c.cost(&mu) < 1.0);
    }

    #[test]
    fn linsep_with_zero_objective_is_feasible() {
        let (inst, v) = star(3, 0.02);
        let mut ctx = ClpContext::new(&inst, ClpParams::practical(10.0, 5, 1));
        let g = solve_linsep(&mut ctx, 0, v, 1.0, &[0.0; 3], &[0.0; 3]).unwrap().unwrap();
        assert!(g.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let g1 = solve_linsep(&mut ctx, 0, v, 1.0, &[0.0; 3], &[1.0, 0.0, 0.0]).unwrap().unwrap();
        assert!((g1[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn peeling_recovers_paths() {
        let (inst, v) = star(2, 0.1);
        let paths = peel_paths(inst.level(0), &[0.5, 0.25], v);
        assert_eq!(paths, vec![(vec![0], 0.5), (vec![1], 0.25)]);
    }

    #[test]
    fn partition_structure() {
        let phis = [0.4, 0.4, 0.4, 0.4, 0.4];
        let (parts, over) = partition(&[0, 1, 2, 3, 4], &phis, 1.0, 2);
        assert!(over.len() <= 2);
        for p in &parts {
            assert!(p.iter().map(|&j| phis[j]).sum::<f64>() < 1.0);
        }
    }
}
