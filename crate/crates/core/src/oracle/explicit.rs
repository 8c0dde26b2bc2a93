use std::collections::{BTreeSet, HashMap};

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::auggraph::{AugInstance, Level};
use crate::error::{Error, Result};
use crate::instance::TOL;

use super::rational_lp::{LpOutcome, RationalLp, Sense, rat, rat_f64};

/// Largest level edge count accepted by the flow enumerators.
pub const MAX_CONFIG_EDGES: usize = 16;

/// Largest number of LP columns or enumerated points.
pub const MAX_COLUMNS: usize = 100_000;

const MAX_DFS_NODES: usize = 20_000_000;

/// Every non-zero integral flow of `level` with values in `0..=beta` that
/// conserves at non-terminal vertices. With `only_sink = Some(v)` no flow
/// may enter any other sink.
pub fn enumerate_flows(level: &Level, beta: u32, only_sink: Option<usize>, cap: usize) -> Result<Vec<Vec<u32>>> {
    let m = level.num_edges();
    if m > MAX_CONFIG_EDGES {
        return Err(Error::Capability(format!("{m} edges > {MAX_CONFIG_EDGES}")));
    }
    let n = level.num_vertices();
    let forced_zero: Vec<bool> =
        level.edges.iter().map(|e| only_sink.is_some_and(|v| level.is_sink(e.head) && e.head != v)).collect();
    let mut last = vec![None; n];
    for (j, e) in level.edges.iter().enumerate() {
        last[e.tail] = Some(j);
        last[e.head] = Some(j);
    }
    let mut closes = vec![Vec::new(); m];
    for v in 0..n {
        if let (false, Some(j)) = (level.terminal()[v], last[v]) {
            closes[j].push(v);
        }
    }
    struct Dfs<'a> {
        level: &'a Level,
        beta: u32,
        forced_zero: Vec<bool>,
        closes: Vec<Vec<usize>>,
        balance: Vec<i64>,
        flow: Vec<u32>,
        out: Vec<Vec<u32>>,
        cap: usize,
        nodes: usize,
    }
    impl Dfs<'_> {
        fn go(&mut self, j: usize) -> Result<()> {
            self.nodes += 1;
            if self.nodes > MAX_DFS_NODES {
                return Err(Error::Capability("flow enumeration exceeded its node budget".into()));
            }
            if j == self.flow.len() {
                if self.flow.iter().any(|&x| x > 0) {
                    if self.out.len() >= self.cap {
                        return Err(Error::Capability(format!("more than {} flows", self.cap)));
                    }
                    self.out.push(self.flow.clone());
                }
                return Ok(());
            }
            let e = self.level.edges[j];
            let top = if self.forced_zero[j] { 0 } else { self.beta };
            for x in 0..=top {
                self.flow[j] = x;
                self.balance[e.head] += x as i64;
                self.balance[e.tail] -= x as i64;
                if self.closes[j].iter().all(|&v| self.balance[v] == 0) {
                    self.go(j + 1)?;
                }
                self.balance[e.head] -= x as i64;
                self.balance[e.tail] += x as i64;
            }
            self.flow[j] = 0;
            Ok(())
        }
    }
    let mut dfs = Dfs { level, beta, forced_zero, closes, balance: vec![0; n], flow: vec![0; m], out: Vec::new(), cap, nodes: 0 };
    dfs.go(0)?;
    Ok(dfs.out)
}

/// All configurations of sink `v`: flows into `v` alone with congestion
/// `≤ beta` and coverage `≥ 1/alpha`. A sink without incoming edges has none.
pub fn enumerate_configurations(level: &Level, v: usize, alpha: f64, beta: u32) -> Result<Vec<Vec<u32>>> {
    if !level.is_sink(v) {
        return Err(Error::Input(format!("vertex {v} is not a sink")));
    }
    let flows = enumerate_flows(level, beta, Some(v), MAX_COLUMNS)?;
    Ok(flows.into_iter().filter(|g| level.coverage(v, g) >= 1.0 / alpha - TOL).collect())
}

struct Enumerator<'a> {
    inst: &'a AugInstance,
    alpha: f64,
    beta: u32,
    configs: HashMap<(usize, usize), Vec<Vec<u32>>>,
    points: HashMap<(usize, Vec<usize>), (Vec<Vec<u32>>, bool)>,
}

impl<'a> Enumerator<'a> {
    fn new(inst: &'a AugInstance, alpha: f64, beta: u32) -> Self {
        Enumerator { inst, alpha, beta, configs: HashMap::new(), points: HashMap::new() }
    }

    fn configs(&mut self, i: usize, v: usize) -> Result<Vec<Vec<u32>>> {
        if let Some(c) = self.configs.get(&(i, v)) {
            return Ok(c.clone());
        }
        let c = enumerate_configurations(self.inst.level(i), v, self.alpha, self.beta)?;
        self.configs.insert((i, v), c.clone());
        Ok(c)
    }

    fn linked(&self, i: usize, g: &[u32]) -> Vec<usize> {
        self.inst.linked_sinks(i, g)
    }

    /// Budget vectors (over global edges) of integral solutions for `sinks`
    /// at level `i`, and whether none was dropped by the box.
    fn points(&mut self, i: usize, sinks: &[usize]) -> Result<(Vec<Vec<u32>>, bool)> {
        let total = self.inst.total_edges();
        if sinks.is_empty() || i >= self.inst.depth() {
            return Ok((vec![vec![0; total]], true));
        }
        let key = (i, sinks.to_vec());
        if let Some(hit) = self.points.get(&key) {
            return Ok(hit.clone());
        }
        let mut exact = true;
        let mut acc: BTreeSet<Vec<u32>> = BTreeSet::new();
        acc.insert(vec![0; total]);
        for &v in sinks {
            let mut single = BTreeSet::new();
            for g in self.configs(i, v)? {
                let (subs, ex) = self.points(i + 1, &self.linked(i, &g))?;
                exact &= ex;
                for d in subs {
                    let mut p = d;
                    for (e, &x) in g.iter().enumerate() {
                        p[self.inst.global_edge(i, e)] += x;
                    }
                    single.insert(p);
                }
            }
            let mut next = BTreeSet::new();
            for a in &acc {
                for s in &single {
                    let sum: Vec<u32> = a.iter().zip(s).map(|(x, y)| x + y).collect();
                    if sum.iter().any(|&x| x > self.beta) {
                        exact = false;
                    } else {
                        next.insert(sum);
                    }
                    if next.len() > MAX_COLUMNS {
                        return Err(Error::Capability(format!("more than {MAX_COLUMNS} budget points")));
                    }
                }
            }
            acc = next;
        }
        let out = (acc.into_iter().collect::<Vec<_>>(), exact);
        self.points.insert(key, out.clone());
        Ok(out)
    }
}

/// Budget vectors of every integral solution covering `sinks` at level `i`
/// (indexed by global edge id), plus an exactness flag that is false when
/// the box `[0, β]` removed some sum.
pub fn budget_points(inst: &AugInstance, i: usize, sinks: &[usize], alpha: f64, beta: u32) -> Result<(Vec<Vec<u32>>, bool)> {
    Enumerator::new(inst, alpha, beta).points(i, sinks)
}

/// Result of the explicit compact LP.
#[derive(Debug, Clone)]
pub struct ExplicitClp {
    pub feasible: bool,
    /// `(sink, configuration, weight)` of the top level when feasible.
    pub weights: Vec<(usize, Vec<u32>, f64)>,
    pub columns: usize,
}

/// Result of the explicit Dantzig-Wolfe LP over enumerated budget points.
#[derive(Debug, Clone)]
pub struct ExplicitDw {
    pub feasible: bool,
    /// False when the box removed generator sums, so the decision may be
    /// stricter than the compact LP.
    pub exact: bool,
    pub columns: usize,
}

fn check_budget(inst: &AugInstance, i: usize, b: &[f64], beta: u32) -> Result<()> {
    if b.len() != inst.total_edges() {
        return Err(Error::Input(format!("budget has {} entries, expected {}", b.len(), inst.total_edges())));
    }
    for e in inst.edges_from(i) {
        if !(b[e] >= 0.0 && b[e] <= beta as f64) {
            return Err(Error::Input(format!("budget {} on edge {e} outside [0, {beta}]", b[e])));
        }
    }
    Ok(())
}

/// Decides `b ∈ B_{≥i}(sinks, α, β)` with the compact recursive LP over
/// enumerated configurations, in exact arithmetic. `b` is indexed by global
/// edge id; entries below level `i` are ignored.
pub fn explicit_clp_feasible(
    inst: &AugInstance,
    i: usize,
    sinks: &[usize],
    b: &[f64],
    alpha: f64,
    beta: u32,
) -> Result<ExplicitClp> {
    check_budget(inst, i, b, beta)?;
    let mut en = Enumerator::new(inst, alpha, beta);
    let mut lp = RationalLp::new();
    let mut top = Vec::new();
    let usage = block(&mut en, &mut lp, i, sinks, None, &mut top)?;
    for (e, terms) in usage.into_iter().enumerate() {
        if !terms.is_empty() {
            lp.row(terms, Sense::Le, rat_f64(b[e]));
        }
    }
    let columns = lp.num_vars;
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Ok(ExplicitClp {
            feasible: true,
            weights: top.into_iter().map(|(v, g, j)| (v, g, x[j].to_f64().unwrap_or(0.0))).collect(),
            columns,
        }),
        LpOutcome::Infeasible => Ok(ExplicitClp { feasible: false, weights: Vec::new(), columns }),
        LpOutcome::Unbounded => Err(Error::Internal("feasibility LP reported unbounded".into())),
    }
}

type Terms = Vec<(usize, BigRational)>;

/// Adds the constraints of `x · B_{≥i}(sinks)` (with `x = 1` when `scale` is
/// `None`) and returns, per global edge, the usage expression.
fn block(
    en: &mut Enumerator,
    lp: &mut RationalLp,
    i: usize,
    sinks: &[usize],
    scale: Option<usize>,
    top: &mut Vec<(usize, Vec<u32>, usize)>,
) -> Result<Vec<Terms>> {
    let total = en.inst.total_edges();
    let mut usage: Vec<Terms> = vec![Vec::new(); total];
    for &v in sinks {
        let mut cover: Terms = Vec::new();
        for g in en.configs(i, v)? {
            let x = lp.var();
            if lp.num_vars > MAX_COLUMNS {
                return Err(Error::Capability(format!("more than {MAX_COLUMNS} LP columns")));
            }
            cover.push((x, rat(1)));
            for (e, &val) in g.iter().enumerate() {
                if val > 0 {
                    usage[en.inst.global_edge(i, e)].push((x, rat(val as i64)));
                }
            }
            let linked = en.linked(i, &g);
            if !linked.is_empty() && i + 1 < en.inst.depth() {
                let sub = block(en, lp, i + 1, &linked, Some(x), top)?;
                for (e, terms) in sub.into_iter().enumerate() {
                    usage[e].extend(terms);
                }
            }
            if scale.is_none() {
                top.push((v, g, x));
            }
        }
        match scale {
            Some(s) => {
                cover.push((s, rat(-1)));
                lp.row(cover, Sense::Ge, rat(0));
            }
            None => lp.row(cover, Sense::Ge, rat(1)),
        }
    }
    if let Some(s) = scale {
        for terms in usage.iter().filter(|t| !t.is_empty()) {
            let mut row = terms.clone();
            row.push((s, rat(-(en.beta as i64))));
            lp.row(row, Sense::Le, BigRational::zero());
        }
    }
    Ok(usage)
}

/// Decides `b ∈ B_{≥i}(sinks, α, β)` with one column per (sink,
/// configuration, budget point of the linked sinks), in exact arithmetic.
pub fn explicit_clp_dw_feasible(
    inst: &AugInstance,
    i: usize,
    sinks: &[usize],
    b: &[f64],
    alpha: f64,
    beta: u32,
) -> Result<ExplicitDw> {
    check_budget(inst, i, b, beta)?;
    let mut en = Enumerator::new(inst, alpha, beta);
    let total = inst.total_edges();
    let mut lp = RationalLp::new();
    let mut usage: Vec<Terms> = vec![Vec::new(); total];
    let mut exact = true;
    for &v in sinks {
        let mut cover = Vec::new();
        for g in en.configs(i, v)? {
            let linked = en.linked(i, &g);
            let (points, ex) = en.points(i + 1, &linked)?;
            exact &= ex;
            for d in points {
                let y = lp.var();
                if lp.num_vars > MAX_COLUMNS {
                    return Err(Error::Capability(format!("more than {MAX_COLUMNS} LP columns")));
                }
                cover.push((y, rat(1)));
                let mut a = d;
                for (e, &val) in g.iter().enumerate() {
                    a[inst.global_edge(i, e)] += val;
                }
                for (e, &val) in a.iter().enumerate() {
                    if val > 0 {
                        usage[e].push((y, rat(val as i64)));
                    }
                }
            }
        }
        lp.row(cover, Sense::Ge, rat(1));
    }
    for (e, terms) in usage.into_iter().enumerate() {
        if !terms.is_empty() {
            lp.row(terms, Sense::Le, rat_f64(b[e]));
        }
    }
    let columns = lp.num_vars;
    let feasible = match lp.solve() {
        LpOutcome::Optimal { .. } => true,
        LpOutcome::Infeasible => false,
        LpOutcome::Unbounded => return Err(Error::Internal("feasibility LP reported unbounded".into())),
    };
    Ok(ExplicitDw { feasible, exact, columns })
}
