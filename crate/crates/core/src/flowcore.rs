//! Flow utilities: path decomposition, integral max-flow and bucket-constrained quantization.

use std::collections::VecDeque;
use std::ops::{AddAssign, Sub, SubAssign};

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, input};

/// Directed edge `tail → head`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

/// A path given by edge ids together with its weight in a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPath<T> {
    pub edges: Vec<usize>,
    pub weight: T,
}

/// Numbers a flow may carry.
pub trait FlowValue: Clone + PartialOrd + Zero + AddAssign + SubAssign + Sub<Output = Self> {}
impl<T: Clone + PartialOrd + Zero + AddAssign + SubAssign + Sub<Output = T>> FlowValue for T {}

fn min_of<T: FlowValue>(a: T, b: T) -> T {
    if b < a { b } else { a }
}

/// Net outflow (out − in) of every vertex.
fn excess<T: FlowValue>(n: usize, edges: &[Edge], flow: &[T]) -> (Vec<T>, Vec<T>) {
    let mut out = vec![T::zero(); n];
    let mut inn = vec![T::zero(); n];
    for (e, f) in edges.iter().zip(flow) {
        out[e.tail] += f.clone();
        inn[e.head] += f.clone();
    }
    (out, inn)
}

/// Checks conservation at every vertex whose `terminal` flag is false.
pub fn check_conservation<T: FlowValue>(n: usize, edges: &[Edge], flow: &[T], terminal: &[bool]) -> Result<()> {
    if flow.len() != edges.len() {
        return input(format!("flow has {} entries for {} edges", flow.len(), edges.len()));
    }
    if flow.iter().any(|f| *f < T::zero()) {
        return input("flow must be non-negative");
    }
    let (out, inn) = excess(n, edges, flow);
    for v in 0..n {
        if !terminal[v] && out[v] != inn[v] {
            return input(format!("flow does not conserve at vertex {v}"));
        }
    }
    Ok(())
}

/// Removes flow cycles in place.
fn cancel_cycles<T: FlowValue>(n: usize, edges: &[Edge], flow: &mut [T]) {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, e) in edges.iter().enumerate() {
        out[e.tail].push(id);
    }
    loop {
        // Iterative DFS over the positive support looking for a back edge.
        let mut state = vec![0u8; n];
        let mut found: Option<Vec<usize>> = None;
        'roots: for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            let mut via: Vec<usize> = Vec::new();
            state[root] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < out[v].len() {
                    let id = out[v][*next];
                    *next += 1;
                    if flow[id] <= T::zero() {
                        continue;
                    }
                    let w = edges[id].head;
                    match state[w] {
                        0 => {
                            state[w] = 1;
                            via.push(id);
                            stack.push((w, 0));
                        }
                        1 => {
                            let mut cycle = vec![id];
                            for &pid in via.iter().rev() {
                                if edges[cycle[cycle.len() - 1]].tail == w {
                                    break;
                                }
                                cycle.push(pid);
                            }
                            found = Some(cycle);
                            break 'roots;
                        }
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack.pop();
                    via.pop();
                }
            }
        }
        let Some(cycle) = found else { return };
        let m = cycle.iter().map(|&id| flow[id].clone()).reduce(min_of).expect("non-empty cycle");
        for id in cycle {
            flow[id] -= m.clone();
        }
    }
}

/// Exact path decomposition of a conserving flow.
///
/// Cycles are canceled first, so the returned paths recompose the
/// acyclic part of `flow`, which equals `flow` whenever it has no cycles.
pub fn decompose<T: FlowValue>(n: usize, edges: &[Edge], flow: &[T], terminal: &[bool]) -> Result<Vec<WeightedPath<T>>> {
    check_conservation(n, edges, flow, terminal)?;
    let mut f = flow.to_vec();
    cancel_cycles(n, edges, &mut f);
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, e) in edges.iter().enumerate() {
        out[e.tail].push(id);
    }
    let (o, i) = excess(n, edges, &f);
    let mut surplus: Vec<T> = (0..n).map(|v| if o[v] > i[v] { o[v].clone() - i[v].clone() } else { T::zero() }).collect();
    let mut deficit: Vec<T> = (0..n).map(|v| if i[v] > o[v] { i[v].clone() - o[v].clone() } else { T::zero() }).collect();
    let mut paths = Vec::new();
    for s in 0..n {
        while surplus[s] > T::zero() {
            let mut path = Vec::new();
            let mut v = s;
            let mut w = surplus[s].clone();
            loop {
                if deficit[v] > T::zero() && v != s {
                    break;
                }
                let Some(&id) = out[v].iter().find(|&&id| f[id] > T::zero()) else {
                    return Err(Error::Internal(format!("path from {s} stuck at vertex {v}")));
                };
                w = min_of(w, f[id].clone());
                path.push(id);
                v = edges[id].head;
            }
            w = min_of(w, deficit[v].clone());
            for &id in &path {
                f[id] -= w.clone();
            }
            surplus[s] -= w.clone();
            deficit[v] -= w.clone();
            paths.push(WeightedPath { edges: path, weight: w });
        }
    }
    Ok(paths)
}

/// Decomposition of an integral flow into unit-weight paths.
pub fn decompose_unit(n: usize, edges: &[Edge], flow: &[u32], terminal: &[bool]) -> Result<Vec<Vec<usize>>> {
    let paths = decompose(n, edges, flow, terminal)?;
    Ok(paths.into_iter().flat_map(|p| std::iter::repeat_n(p.edges, p.weight as usize)).collect())
}

/// Sums weighted characteristic vectors of `paths` over `m` edges.
pub fn recompose<T: FlowValue>(m: usize, paths: &[WeightedPath<T>]) -> Vec<T> {
    let mut f = vec![T::zero(); m];
    for p in paths {
        for &id in &p.edges {
            f[id] += p.weight.clone();
        }
    }
    f
}

/// Maximum edge load.
pub fn congestion(flow: &[u32]) -> u32 {
    flow.iter().copied().max().unwrap_or(0)
}

/// Dinic max-flow network with integer capacities.
#[derive(Debug, Clone)]
pub struct Network {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    orig: Vec<i64>,
}

pub const INF_CAP: i64 = i64::MAX / 4;

impl Network {
    pub fn new(n: usize) -> Self {
        Network { adj: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new(), orig: Vec::new() }
    }

    pub fn add_vertex(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Adds `u → v` and returns its arc id.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: i64) -> usize {
        let id = self.to.len();
        self.to.push(v);
        self.cap.push(cap);
        self.orig.push(cap);
        self.adj[u].push(id);
        self.to.push(u);
        self.cap.push(0);
        self.orig.push(0);
        self.adj[v].push(id + 1);
        id
    }

    /// Flow currently routed on arc `id`.
    pub fn flow(&self, id: usize) -> i64 {
        self.orig[id] - self.cap[id]
    }

    fn bfs(&self, s: usize, t: usize, level: &mut [i32]) -> bool {
        level.iter_mut().for_each(|l| *l = -1);
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &id in &self.adj[v] {
                let w = self.to[id];
                if self.cap[id] > 0 && level[w] < 0 {
                    level[w] = level[v] + 1;
                    q.push_back(w);
                }
            }
        }
        level[t] >= 0
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: i64, level: &[i32], it: &mut [usize]) -> i64 {
        if v == t {
            return pushed;
        }
        while it[v] < self.adj[v].len() {
            let id = self.adj[v][it[v]];
            let w = self.to[id];
            if self.cap[id] > 0 && level[w] == level[v] + 1 {
                let d = self.dfs(w, t, pushed.min(self.cap[id]), level, it);
                if d > 0 {
                    self.cap[id] -= d;
                    self.cap[id ^ 1] += d;
                    return d;
                }
            }
            it[v] += 1;
        }
        0
    }

    /// Augments from `s` to `t` until no augmenting path remains; returns the added value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.adj.len();
        let mut total = 0;
        let mut level = vec![-1; n];
        while self.bfs(s, t, &mut level) {
            let mut it = vec![0; n];
            loop {
                let d = self.dfs(s, t, INF_CAP, &level, &mut it);
                if d == 0 {
                    break;
                }
                total += d;
            }
        }
        total
    }
}

/// Maximum integral flow from capacitated `sources` to `sink`.
///
/// Returns the flow value and the per-edge flow.
pub fn max_flow_integral(
    n: usize,
    edges: &[Edge],
    sources: &[(usize, i64)],
    sink: usize,
    capacity: &[i64],
) -> Result<(i64, Vec<i64>)> {
    if capacity.len() != edges.len() {
        return input("one capacity per edge required");
    }
    if capacity.iter().any(|&c| c < 0) || sources.iter().any(|&(_, c)| c < 0) {
        return input("capacities must be non-negative");
    }
    let mut net = Network::new(n + 1);
    let root = n;
    let ids: Vec<usize> = edges.iter().zip(capacity).map(|(e, &c)| net.add_edge(e.tail, e.head, c)).collect();
    for &(s, c) in sources {
        net.add_edge(root, s, c);
    }
    let value = net.max_flow(root, sink);
    Ok((value, ids.iter().map(|&id| net.flow(id)).collect()))
}

/// Anchor of a bucket of edges in the quantization gadget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BucketAnchor {
    /// All edges enter this vertex.
    Head(usize),
    /// All edges leave distinct sources.
    Sources,
}

/// A set of edges whose integral mass must lie between the floor and the
/// ceiling of its fractional mass.
#[derive(Debug, Clone)]
pub struct Bucket {
    pub edges: Vec<usize>,
    pub anchor: BucketAnchor,
}

/// Problem data for [`quantize_flow`].
#[derive(Debug, Clone)]
pub struct QuantizeInput<'a> {
    pub n: usize,
    pub edges: &'a [Edge],
    pub sources: &'a [usize],
    pub sinks: &'a [usize],
    /// Sink whose inflow is maximized.
    pub target: usize,
    pub fractional: &'a [BigRational],
    pub buckets: &'a [Bucket],
    /// Required integral inflow into `target`.
    pub min_target_inflow: i64,
}

fn floor_ceil(x: &BigRational) -> (i64, i64) {
    (x.floor().to_integer().to_i64().unwrap_or(i64::MAX), x.ceil().to_integer().to_i64().unwrap_or(i64::MAX))
}

struct Gadget {
    net: Network,
    /// Arc per original edge (support only).
    arc: Vec<Option<usize>>,
    demand: Vec<i64>,
    base: usize,
}

impl Gadget {
    /// Arc with lower bound `lo` and capacity `hi`.
    fn bounded(&mut self, u: usize, v: usize, lo: i64, hi: i64) -> usize {
        self.demand[v] += lo;
        self.demand[u] -= lo;
        self.net.add_edge(u, v, if hi >= INF_CAP { INF_CAP } else { hi - lo })
    }

    fn feasible(mut self) -> Option<Network> {
        let s2 = self.net.add_vertex();
        let t2 = self.net.add_vertex();
        let mut need = 0;
        for v in 0..self.base {
            let d = self.demand[v];
            if d > 0 {
                self.net.add_edge(s2, v, d);
                need += d;
            } else if d < 0 {
                self.net.add_edge(v, t2, -d);
            }
        }
        (self.net.max_flow(s2, t2) == need).then_some(self.net)
    }
}

fn build_gadget(q: &QuantizeInput, target_lo: i64, relax: Option<usize>) -> Result<Gadget> {
    let n = q.n;
    let m = q.edges.len();
    let root = n;
    let sink = n + 1;
    let base = n + 2 + q.buckets.len();
    let mut g = Gadget { net: Network::new(base), arc: vec![None; m], demand: vec![0; base], base };
    let mut bucket_of = vec![None; m];
    for (b, bucket) in q.buckets.iter().enumerate() {
        for &e in &bucket.edges {
            if e >= m {
                return input(format!("bucket {b} names unknown edge {e}"));
            }
            if bucket_of[e].replace(b).is_some() {
                return input(format!("edge {e} is in two buckets"));
            }
            match bucket.anchor {
                BucketAnchor::Head(v) if q.edges[e].head != v => {
                    return input(format!("bucket {b}: edge {e} does not enter {v}"));
                }
                BucketAnchor::Sources if !q.sources.contains(&q.edges[e].tail) => {
                    return input(format!("bucket {b}: edge {e} does not leave a source"));
                }
                _ => {}
            }
        }
    }
    let mut source_bucket = vec![None; n];
    for e in 0..m {
        if q.fractional[e].is_zero() {
            continue;
        }
        let Edge { tail, head } = q.edges[e];
        match bucket_of[e].map(|b| (b, &q.buckets[b].anchor)) {
            Some((b, BucketAnchor::Head(_))) => g.arc[e] = Some(g.net.add_edge(tail, n + 2 + b, 1)),
            Some((b, BucketAnchor::Sources)) => {
                source_bucket[tail] = Some(b);
                g.arc[e] = Some(g.net.add_edge(tail, head, 1));
            }
            None => g.arc[e] = Some(g.net.add_edge(tail, head, 1)),
        }
    }
    for (b, bucket) in q.buckets.iter().enumerate() {
        let mass = bucket.edges.iter().fold(BigRational::zero(), |acc, &e| acc + &q.fractional[e]);
        let (lo, hi) = if relax == Some(b) { (0, INF_CAP) } else { floor_ceil(&mass) };
        let d = n + 2 + b;
        match bucket.anchor {
            BucketAnchor::Head(v) => {
                g.bounded(d, v, lo, hi);
            }
            BucketAnchor::Sources => {
                g.bounded(root, d, lo, hi);
            }
        }
    }
    for &s in q.sources {
        match source_bucket[s] {
            Some(b) => g.net.add_edge(n + 2 + b, s, 1),
            None => g.net.add_edge(root, s, 1),
        };
    }
    for &v in q.sinks {
        if v == q.target {
            g.bounded(v, sink, target_lo, INF_CAP);
        } else {
            g.net.add_edge(v, sink, INF_CAP);
        }
    }
    g.net.add_edge(sink, root, INF_CAP);
    Ok(g)
}

/// Rounds a fractional flow of congestion ≤ 1 to a 0/1 flow on its support that
/// respects every bucket's floor/ceiling and maximizes inflow into the target.
pub fn quantize_flow(q: &QuantizeInput) -> Result<Vec<u32>> {
    let m = q.edges.len();
    if q.fractional.len() != m {
        return input("fractional flow length mismatch");
    }
    let one = BigRational::from_integer(1.into());
    if q.fractional.iter().any(|x| *x < BigRational::zero() || *x > one) {
        return input("fractional flow must lie in [0, 1]");
    }
    if q.fractional.iter().all(|x| x.is_integer()) {
        return Ok(q.fractional.iter().map(|x| if x.is_zero() { 0 } else { 1 }).collect());
    }
    let extract = |net: &Network, arc: &[Option<usize>]| -> Vec<u32> {
        arc.iter().map(|a| a.map_or(0, |id| net.flow(id) as u32)).collect()
    };
    let lo = q.min_target_inflow.max(0);
    let Some(mut best) = build_gadget(q, lo, None)?.feasible().map(|net| (lo, net)) else {
        for b in 0..q.buckets.len() {
            if build_gadget(q, lo, Some(b))?.feasible().is_some() {
                return Err(Error::Contract(format!("bucket {b} bounds cannot be met")));
            }
        }
        return Err(Error::Contract(format!("no 0/1 flow meets the buckets with target inflow {lo}")));
    };
    let mut hi = q.edges.iter().enumerate().filter(|(e, ed)| ed.head == q.target && !q.fractional[*e].is_zero()).count() as i64;
    let mut lo = best.0;
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        match build_gadget(q, mid, None)?.feasible() {
            Some(net) => {
                lo = mid;
                best = (mid, net);
            }
            None => hi = mid - 1,
        }
    }
    // Arc ids do not depend on the target bound.
    let arc = build_gadget(q, best.0, None)?.arc;
    Ok(extract(&best.1, &arc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn e(tail: usize, head: usize) -> Edge {
        Edge { tail, head }
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn unit_path_decomposes_to_itself() {
        let edges = [e(0, 1), e(1, 2)];
        let term = [true, false, true];
        let paths = decompose(3, &edges, &[1u32, 1], &term).unwrap();
        assert_eq!(paths, vec![WeightedPath { edges: vec![0, 1], weight: 1 }]);
    }

    #[test]
    fn zero_flow_has_no_paths() {
        let edges = [e(0, 1), e(1, 2)];
        assert!(decompose(3, &edges, &[0u32, 0], &[true, false, true]).unwrap().is_empty());
    }

    #[test]
    fn non_conserving_flow_is_rejected() {
        let edges = [e(0, 1), e(1, 2)];
        assert!(matches!(decompose(3, &edges, &[1u32, 0], &[true, false, true]), Err(Error::Input(_))));
    }

    #[test]
    fn cycles_are_canceled() {
        // 0 -> 1 -> 2 -> 1 loop plus 1 -> 3.
        let edges = [e(0, 1), e(1, 2), e(2, 1), e(1, 3)];
        let term = [true, false, false, true];
        let paths = decompose(4, &edges, &[1u32, 2, 2, 1], &term).unwrap();
        assert_eq!(recompose(4, &paths), vec![1, 0, 0, 1]);
    }

    #[test]
    fn rational_decomposition_is_exact() {
        let edges = [e(0, 2), e(1, 2), e(2, 3), e(2, 4)];
        let term = [true, true, false, true, true];
        let flow = vec![rat(1, 3), rat(1, 2), rat(1, 6), rat(2, 3)];
        let paths = decompose(5, &edges, &flow, &term).unwrap();
        assert_eq!(recompose(4, &paths), flow);
    }

    #[test]
    fn two_disjoint_paths() {
        let edges = [e(0, 2), e(1, 3), e(2, 4), e(3, 4)];
        let (v, _) = max_flow_integral(5, &edges, &[(0, 1), (1, 1)], 4, &[1; 4]).unwrap();
        assert_eq!(v, 2);
    }

    #[test]
    fn bottleneck_limits_value() {
        let edges = [e(0, 3), e(1, 3), e(2, 3), e(3, 4), e(4, 5)];
        let (v, f) = max_flow_integral(6, &edges, &[(0, 1), (1, 1), (2, 1)], 5, &[1, 1, 1, 1, 1]).unwrap();
        assert_eq!(v, 1);
        assert_eq!(f[4], 1);
    }

    #[test]
    fn single_bucket_rounds_to_floor_or_ceiling() {
        // Sources 0,1,2 each into hub 3, hub into target 4.
        let edges = [e(0, 3), e(1, 3), e(2, 3), e(3, 4)];
        let frac = vec![rat(1, 2), rat(1, 2), rat(1, 2), rat(1, 1)];
        let buckets = [Bucket { edges: vec![0, 1, 2], anchor: BucketAnchor::Head(3) }];
        let out = quantize_flow(&QuantizeInput {
            n: 5,
            edges: &edges,
            sources: &[0, 1, 2],
            sinks: &[4],
            target: 4,
            fractional: &frac,
            buckets: &buckets,
            min_target_inflow: 1,
        })
        .unwrap();
        let mass: u32 = out[..3].iter().sum();
        assert!(mass == 1 || mass == 2);
        assert_eq!(out[3], 1);
    }

    #[test]
    fn integral_input_is_unchanged() {
        let edges = [e(0, 1), e(1, 2)];
        let frac = vec![rat(1, 1), rat(1, 1)];
        let out = quantize_flow(&QuantizeInput {
            n: 3,
            edges: &edges,
            sources: &[0],
            sinks: &[2],
            target: 2,
            fractional: &frac,
            buckets: &[],
            min_target_inflow: 1,
        })
        .unwrap();
        assert_eq!(out, vec![1, 1]);
    }

    #[test]
    fn source_bucket_gadget() {
        // Sources 0,1 into target 2, bucket over both source edges with mass 1/2.
        let edges = [e(0, 2), e(1, 2)];
        let frac = vec![rat(1, 4), rat(1, 4)];
        let buckets = [Bucket { edges: vec![0, 1], anchor: BucketAnchor::Sources }];
        let out = quantize_flow(&QuantizeInput {
            n: 3,
            edges: &edges,
            sources: &[0, 1],
            sinks: &[2],
            target: 2,
            fractional: &frac,
            buckets: &buckets,
            min_target_inflow: 0,
        })
        .unwrap();
        assert_eq!(out.iter().sum::<u32>(), 1);
    }
}
