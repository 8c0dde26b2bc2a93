//! The multi-level configuration LP in column form.
//!
//! A column for sink `v` of level `i` is an integral flow `g` into `v`
//! together with a witness for the sinks linked to the sources `g` uses;
//! its budget vector is `g` on `E_i` followed by that witness's usage on
//! `E_{≥i+1}`. A [`Witness`] is a weighted set of columns.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::auggraph::AugInstance;
use crate::config::{Engine, Mode, Params};
use crate::ellipsoid::{EllipsoidConfig, EllipsoidStatus, SepResponse, solve_feasibility};
use crate::error::{Error, Result};
use crate::instance::TOL;
use crate::lp::{Cmp, LinearProgram, LpStatus};
use crate::sep::{MinCostCache, sep};

/// Slack below which a restricted LP counts as feasible.
const FEASIBLE_SLACK: f64 = 1e-7;
/// Tolerance of the witness audit.
pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub id: u64,
    pub level: usize,
    pub sink: usize,
    /// Local edge ids of the level with their integral flow.
    pub flow: Vec<(usize, u32)>,
    pub sub: Option<Arc<Witness>>,
    /// Sparse budget vector over global edge ids, sorted.
    pub budget: Vec<(usize, f64)>,
}

impl Column {
    pub fn new(
        inst: &AugInstance,
        id: u64,
        level: usize,
        sink: usize,
        flow: Vec<(usize, u32)>,
        sub: Option<Arc<Witness>>,
    ) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for &(e, x) in &flow {
            *acc.entry(inst.global_edge(level, e)).or_default() += x as f64;
        }
        if let Some(w) = &sub {
            for (e, x) in w.usage() {
                *acc.entry(e).or_default() += x;
            }
        }
        Column { id, level, sink, flow, sub, budget: acc.into_iter().collect() }
    }

    pub fn dense_flow(&self, num_edges: usize) -> Vec<u32> {
        let mut g = vec![0; num_edges];
        for &(e, x) in &self.flow {
            g[e] += x;
        }
        g
    }

    /// `μ·(g ⊕ d)`.
    pub fn cost(&self, mu: &[f64]) -> f64 {
        self.budget.iter().map(|&(e, x)| x * mu[e]).sum()
    }

    fn signature(&self) -> (usize, Vec<(usize, u64)>) {
        (self.sink, self.budget.iter().map(|&(e, x)| (e, x.to_bits())).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub level: usize,
    pub entries: Vec<(Arc<Column>, f64)>,
}

impl Witness {
    pub fn empty(level: usize) -> Self {
        Witness { level, entries: Vec::new() }
    }

    /// `Σ y_c · budget_c`, sparse and sorted.
    pub fn usage(&self) -> Vec<(usize, f64)> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (c, y) in &self.entries {
            for &(e, x) in &c.budget {
                *acc.entry(e).or_default() += x * y;
            }
        }
        acc.into_iter().collect()
    }

    pub fn usage_dense(&self, total_edges: usize) -> Vec<f64> {
        let mut d = vec![0.0; total_edges];
        for (e, x) in self.usage() {
            d[e] += x;
        }
        d
    }

    /// Total weight on columns of sink `v`.
    pub fn weight_of(&self, v: usize) -> f64 {
        self.entries.iter().filter(|(c, _)| c.sink == v).map(|(_, y)| y).sum()
    }

    pub fn sinks(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.entries.iter().map(|(c, _)| c.sink).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn cost(&self, mu: &[f64]) -> f64 {
        self.entries.iter().map(|(c, y)| y * c.cost(mu)).sum()
    }

    /// Sum of two witnesses of the same level.
    pub fn merge(&self, other: &Witness) -> Result<Witness> {
        if self.level != other.level {
            return Err(Error::Input(format!("cannot merge witnesses of levels {} and {}", self.level, other.level)));
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Ok(Witness { level: self.level, entries })
    }

    /// Zero-masks every column whose sink is not in `sinks`.
    pub fn restrict(&self, sinks: &[usize]) -> Witness {
        Witness { level: self.level, entries: self.entries.iter().filter(|(c, _)| sinks.contains(&c.sink)).cloned().collect() }
    }

    pub fn num_columns(&self) -> usize {
        self.entries.len()
    }
}

/// Dual point `(π, μ)`; `μ` is dense over global edge ids.
#[derive(Debug, Clone, Serialize)]
pub struct DualPoint {
    pub pi: Vec<(usize, f64)>,
    pub mu: Vec<f64>,
}

impl DualPoint {
    pub fn pi_of(&self, v: usize) -> f64 {
        self.pi.iter().find(|(s, _)| *s == v).map_or(0.0, |(_, p)| *p)
    }
}

/// `μ·(g ⊕ d) − π_v`; negative means the dual constraint is violated.
pub fn dual_violation_value(dual: &DualPoint, column: &Column) -> f64 {
    column.cost(&dual.mu) - dual.pi_of(column.sink)
}

/// `w·b ≥ rhs` holds for every budget vector of the tight set; the
/// queried vector has `w·b < rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct Hyperplane {
    pub w: Vec<f64>,
    pub rhs: f64,
}

impl Hyperplane {
    pub fn eval(&self, b: &[f64]) -> f64 {
        self.w.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn normalized(w: Vec<f64>, rhs: f64) -> Self {
        let norm = (w.iter().map(|x| x * x).sum::<f64>() + rhs * rhs).sqrt();
        if norm > 0.0 {
            Hyperplane { w: w.into_iter().map(|x| x / norm).collect(), rhs: rhs / norm }
        } else {
            Hyperplane { w, rhs }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Membership {
    Member(Witness),
    Separated(Hyperplane),
}

/// Parameters of the LP machinery.
#[derive(Debug, Clone, Serialize)]
pub struct ClpParams {
    pub alpha: f64,
    pub beta: u32,
    pub delta: f64,
    pub samples: usize,
    pub exact_marginal_limit: usize,
    pub sep_attempts: usize,
    pub cg_iterations: usize,
    /// Cost of one unit of budget overrun in the restricted LP.
    pub penalty: f64,
    pub engine: Engine,
    pub ellipsoid: EllipsoidConfig,
    /// Box on dual variables in the ellipsoid engine.
    pub dual_box: f64,
    /// Apply the Markov-type filters of the rounding analysis.
    pub strict_rounding: bool,
    pub seed: u64,
}

impl ClpParams {
    pub fn practical(alpha: f64, beta: u32, seed: u64) -> Self {
        ClpParams {
            alpha,
            beta,
            delta: 0.02,
            samples: 2000,
            exact_marginal_limit: 10,
            sep_attempts: 256,
            cg_iterations: 200,
            penalty: 1e4,
            engine: Engine::ColumnGeneration,
            ellipsoid: EllipsoidConfig { outer_radius: 1e3, inner_radius: 1e-6, cap: 200_000, center: None },
            dual_box: 100.0,
            strict_rounding: false,
            seed,
        }
    }

    pub fn from_params(p: &Params) -> Self {
        ClpParams {
            alpha: p.alpha,
            beta: p.beta,
            delta: p.delta,
            samples: p.samples,
            exact_marginal_limit: p.exact_marginal_limit,
            sep_attempts: p.sep_attempts,
            cg_iterations: p.cg_iterations,
            penalty: 1e4,
            engine: p.engine,
            ellipsoid: p.ellipsoid.clone(),
            dual_box: 100.0,
            strict_rounding: p.mode == Mode::Theory,
            seed: p.seed,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ClpStats {
    pub sep_calls: u64,
    pub lp_solves: u64,
    pub columns: u64,
    pub rounding_attempts: u64,
}

/// State shared by one membership run and all separation calls below it.
#[derive(Debug)]
pub struct ClpContext<'a> {
    pub inst: &'a AugInstance,
    pub params: ClpParams,
    pub stats: ClpStats,
    next_id: u64,
    draws: u64,
}

impl<'a> ClpContext<'a> {
    pub fn new(inst: &'a AugInstance, params: ClpParams) -> Self {
        ClpContext { inst, params, stats: ClpStats::default(), next_id: 0, draws: 0 }
    }

    pub fn column(&mut self, level: usize, sink: usize, flow: Vec<(usize, u32)>, sub: Option<Arc<Witness>>) -> Arc<Column> {
        self.next_id += 1;
        self.stats.columns += 1;
        Arc::new(Column::new(self.inst, self.next_id, level, sink, flow, sub))
    }

    /// Fresh stream for a randomized step at `(level, sink)`.
    pub fn rng(&mut self, tag: u64, level: usize, sink: usize) -> ChaCha8Rng {
        self.draws += 1;
        crate::rng::stream(self.params.seed, &[tag, level as u64, sink as u64, self.draws])
    }
}

fn check_request(inst: &AugInstance, i: usize, t_star: &[usize], b: &[f64]) -> Result<()> {
    if i >= inst.depth() {
        return Err(Error::Input(format!("level {i} out of range")));
    }
    if b.len() != inst.total_edges() {
        return Err(Error::Input(format!("budget has {} entries, expected {}", b.len(), inst.total_edges())));
    }
    if b.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::Input("budget entries must be finite and non-negative".into()));
    }
    let mut seen = HashSet::new();
    for &v in t_star {
        if !inst.level(i).is_sink(v) || !seen.insert(v) {
            return Err(Error::Input(format!("{v} is not a distinct sink of level {i}")));
        }
    }
    Ok(())
}

/// Decides whether `b` (dense over global edges, entries below level `i`
/// ignored) lies in the relaxed budget set of `t_star`, returning a
/// witness, or a hyperplane separating `b` from the tight set.
pub fn membership(ctx: &mut ClpContext, i: usize, t_star: &[usize], b: &[f64]) -> Result<Membership> {
    check_request(ctx.inst, i, t_star, b)?;
    if t_star.is_empty() {
        return Ok(Membership::Member(Witness::empty(i)));
    }
    match ctx.params.engine {
        Engine::ColumnGeneration => membership_cg(ctx, i, t_star, b),
        Engine::Ellipsoid => membership_ellipsoid(ctx, i, t_star, b),
    }
}

struct Restricted {
    value: f64,
    witness: Witness,
    dual: DualPoint,
}

/// `min Σ s_v + U Σ z_e` over the pooled columns.
fn restricted_lp(ctx: &mut ClpContext, i: usize, t_star: &[usize], b: &[f64], pool: &[Arc<Column>]) -> Result<Restricted> {
    ctx.stats.lp_solves += 1;
    let mut lp = LinearProgram::new();
    let y: Vec<usize> = pool.iter().map(|_| lp.var(0.0)).collect();
    let mut cover_rows = Vec::with_capacity(t_star.len());
    for &v in t_star {
        let s = lp.var(1.0);
        let mut coeffs: Vec<(usize, f64)> = pool.iter().zip(&y).filter(|(c, _)| c.sink == v).map(|(_, &j)| (j, 1.0)).collect();
        coeffs.push((s, 1.0));
        cover_rows.push(lp.row(coeffs, Cmp::Ge, 1.0));
    }
    let mut by_edge: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (c, &j) in pool.iter().zip(&y) {
        for &(e, x) in &c.budget {
            by_edge.entry(e).or_default().push((j, x));
        }
    }
    let mut cap_rows = Vec::with_capacity(by_edge.len());
    for (e, mut coeffs) in by_edge {
        let z = lp.var(ctx.params.penalty);
        coeffs.push((z, -1.0));
        cap_rows.push((e, lp.row(coeffs, Cmp::Le, b[e])));
    }
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("restricted LP ended {:?}", sol.status)));
    }
    let pi: Vec<(usize, f64)> = t_star.iter().zip(&cover_rows).map(|(&v, &r)| (v, sol.duals[r].max(0.0))).collect();
    let mut mu = vec![0.0; ctx.inst.total_edges()];
    for (e, r) in cap_rows {
        mu[e] = (-sol.duals[r]).max(0.0);
    }
    let mut entries: Vec<(Arc<Column>, f64)> = Vec::new();
    for &v in t_star {
        let chosen: Vec<(Arc<Column>, f64)> =
            pool.iter().zip(&y).filter(|(c, j)| c.sink == v && sol.x[**j] > 1e-12).map(|(c, &j)| (c.clone(), sol.x[j])).collect();
        let total: f64 = chosen.iter().map(|(_, w)| w).sum();
        let scale = if total > 0.0 && total < 1.0 { 1.0 / total } else { 1.0 };
        entries.extend(chosen.into_iter().map(|(c, w)| (c, w * scale)));
    }
    Ok(Restricted { value: sol.value, witness: Witness { level: i, entries }, dual: DualPoint { pi, mu } })
}

fn membership_cg(ctx: &mut ClpContext, i: usize, t_star: &[usize], b: &[f64]) -> Result<Membership> {
    let mut pool: Vec<Arc<Column>> = Vec::new();
    let mut seen = HashSet::new();
    for _ in 0..ctx.params.cg_iterations {
        let r = restricted_lp(ctx, i, t_star, b, &pool)?;
        if r.value <= FEASIBLE_SLACK {
            return Ok(Membership::Member(r.witness));
        }
        let mut cache = MinCostCache::default();
        let mut fresh = Vec::new();
        for &(v, pi) in &r.dual.pi {
            if pi <= TOL {
                continue;
            }
            if let Some(c) = sep(ctx, &mut cache, i, v, pi, &r.dual.mu)?
                && c.cost(&r.dual.mu) < pi - TOL
                && seen.insert(c.signature())
            {
                fresh.push(c);
            }
        }
        if fresh.is_empty() {
            let rhs: f64 = r.dual.pi.iter().map(|(_, p)| p).sum();
            let mut w = r.dual.mu;
            for (e, x) in w.iter_mut().enumerate() {
                if e < ctx.inst.edges_from(i).start {
                    *x = 0.0;
                }
            }
            return Ok(Membership::Separated(Hyperplane::normalized(w, rhs)));
        }
        pool.extend(fresh);
    }
    Err(Error::Budget(format!("column generation did not settle within {} rounds", ctx.params.cg_iterations)))
}

/// Solves the LP restricted to `columns`; fails when those columns cannot
/// serve `t_star` within `b`.
pub fn dw_reconstruct_primal(
    ctx: &mut ClpContext,
    i: usize,
    t_star: &[usize],
    b: &[f64],
    columns: &[Arc<Column>],
) -> Result<Witness> {
    check_request(ctx.inst, i, t_star, b)?;
    if t_star.is_empty() {
        return Ok(Witness::empty(i));
    }
    let r = restricted_lp(ctx, i, t_star, b, columns)?;
    if r.value > FEASIBLE_SLACK {
        return Err(Error::Internal(format!("restricted primal is infeasible (slack {})", r.value)));
    }
    Ok(r.witness)
}

/// Ellipsoid over the dual slice `Σ π_v − b·μ = 1`, with `π_{v0}` eliminated.
fn membership_ellipsoid(ctx: &mut ClpContext, i: usize, t_star: &[usize], b: &[f64]) -> Result<Membership> {
    let edges: Vec<usize> = ctx.inst.edges_from(i).collect();
    let k = t_star.len();
    let dim = k - 1 + edges.len();
    let bound = ctx.params.dual_box;
    // Point layout: π of t_star[1..], then μ of `edges`.
    let full = |z: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mu: Vec<f64> = z[k - 1..].to_vec();
        let others: f64 = z[..k - 1].iter().sum();
        let bmu: f64 = edges.iter().zip(&mu).map(|(&e, m)| b[e] * m).sum();
        let mut pi = vec![1.0 + bmu - others];
        pi.extend_from_slice(&z[..k - 1]);
        (pi, mu)
    };
    // Maps a cut `a_π·π + a_μ·μ ≤ c` on full coordinates to the slice.
    let reduce = |a_pi: &[f64], a_mu: &[f64], c: f64| -> (Vec<f64>, f64) {
        let mut w = Vec::with_capacity(dim);
        for j in 1..k {
            w.push(a_pi[j] - a_pi[0]);
        }
        for (idx, &e) in edges.iter().enumerate() {
            w.push(a_mu[idx] + a_pi[0] * b[e]);
        }
        (w, c - a_pi[0])
    };
    if dim == 0 {
        // Single sink and no edges: the only dual point is π = 1, μ = ().
        let mut cache = MinCostCache::default();
        return Ok(match sep(ctx, &mut cache, i, t_star[0], 1.0, &vec![0.0; ctx.inst.total_edges()])? {
            Some(c) => Membership::Member(Witness { level: i, entries: vec![(c, 1.0)] }),
            None => Membership::Separated(Hyperplane { w: vec![0.0; ctx.inst.total_edges()], rhs: 1.0 }),
        });
    }
    let mut encountered: Vec<Arc<Column>> = Vec::new();
    let mut seen = HashSet::new();
    let mut found: Option<(Vec<f64>, Vec<f64>)> = None;
    let cfg = EllipsoidConfig { center: Some(vec![0.5; dim]), ..ctx.params.ellipsoid.clone() };
    let total = ctx.inst.total_edges();
    let run = solve_feasibility(dim, &cfg, |z| {
        let (pi, mu) = full(z);
        let mut unit_pi = vec![0.0; k];
        let mut unit_mu = vec![0.0; edges.len()];
        // Box and sign constraints first.
        let worst_pi = (0..k).map(|j| (j, pi[j])).min_by(|a, b| a.1.total_cmp(&b.1)).expect("k ≥ 1");
        if worst_pi.1 < 0.0 {
            unit_pi[worst_pi.0] = -1.0;
            let (w, rhs) = reduce(&unit_pi, &unit_mu, 0.0);
            return Ok(SepResponse::Cut { w, rhs });
        }
        if let Some((j, _)) = mu.iter().enumerate().find(|(_, m)| **m < 0.0) {
            unit_mu[j] = -1.0;
            let (w, rhs) = reduce(&unit_pi, &unit_mu, 0.0);
            return Ok(SepResponse::Cut { w, rhs });
        }
        if let Some(j) = (0..k).find(|&j| pi[j] > bound) {
            unit_pi[j] = 1.0;
            let (w, rhs) = reduce(&unit_pi, &unit_mu, bound);
            return Ok(SepResponse::Cut { w, rhs });
        }
        if let Some((j, _)) = mu.iter().enumerate().find(|(_, m)| **m > bound) {
            unit_mu[j] = 1.0;
            let (w, rhs) = reduce(&unit_pi, &unit_mu, bound);
            return Ok(SepResponse::Cut { w, rhs });
        }
        let mut dense_mu = vec![0.0; total];
        for (idx, &e) in edges.iter().enumerate() {
            dense_mu[e] = mu[idx];
        }
        let mut cache = MinCostCache::default();
        for (j, &v) in t_star.iter().enumerate() {
            if let Some(c) = sep(ctx, &mut cache, i, v, pi[j], &dense_mu)?
                && c.cost(&dense_mu) < pi[j] - TOL
            {
                // π_v − a_c·μ ≤ 0.
                unit_pi[j] = 1.0;
                for &(e, x) in &c.budget {
                    if let Ok(idx) = edges.binary_search(&e) {
                        unit_mu[idx] -= x;
                    }
                }
                if seen.insert(c.signature()) {
                    encountered.push(c);
                }
                let (w, rhs) = reduce(&unit_pi, &unit_mu, 0.0);
                return Ok(SepResponse::Cut { w, rhs });
            }
        }
        found = Some((pi, dense_mu));
        Ok(SepResponse::Member)
    })?;
    match run.status {
        EllipsoidStatus::Member(_) => {
            let (pi, mu) = found.expect("member point recorded");
            Ok(Membership::Separated(Hyperplane::normalized(mu, pi.iter().sum())))
        }
        EllipsoidStatus::Infeasible => Ok(Membership::Member(dw_reconstruct_primal(ctx, i, t_star, b, &encountered)?)),
        EllipsoidStatus::BudgetExhausted => Err(Error::Budget("ellipsoid iteration cap reached".into())),
    }
}

/// Checks a witness for `t_star` at level `i`: cover, column validity,
/// recursive sub-witnesses, the box `[0, β]` on sub-budgets and, when
/// given, usage within `b`.
pub fn audit_witness(inst: &AugInstance, w: &Witness, t_star: &[usize], b: Option<&[f64]>, alpha: f64, beta: u32) -> Result<()> {
    let fail = |msg: String| Err(Error::Contract(msg));
    for &v in t_star {
        let y = w.weight_of(v);
        if y < 1.0 - AUDIT_TOL {
            return fail(format!("sink {v} of level {} has weight {y}", w.level));
        }
    }
    for (c, y) in &w.entries {
        if !(*y >= 0.0) {
            return fail(format!("column {} has negative weight", c.id));
        }
        audit_column(inst, c, alpha, beta)?;
    }
    if let Some(b) = b {
        for (e, x) in w.usage() {
            if x > b[e] + AUDIT_TOL {
                return fail(format!("edge {e}: usage {x} exceeds budget {}", b[e]));
            }
        }
    }
    Ok(())
}

fn audit_column(inst: &AugInstance, c: &Column, alpha: f64, beta: u32) -> Result<()> {
    let fail = |msg: String| Err(Error::Contract(msg));
    let level = inst.level(c.level);
    let g = c.dense_flow(level.num_edges());
    if g.iter().any(|&x| x > beta) {
        return fail(format!("column {} exceeds congestion {beta}", c.id));
    }
    for (e, &x) in g.iter().enumerate() {
        let head = level.edges[e].head;
        if x > 0 && level.is_sink(head) && head != c.sink {
            return fail(format!("column {} enters foreign sink {head}", c.id));
        }
    }
    if crate::flowcore::check_conservation(level.num_vertices(), &level.edges, &g, level.terminal()).is_err() {
        return fail(format!("column {} does not conserve flow", c.id));
    }
    if level.coverage(c.sink, &g) < 1.0 / alpha - TOL {
        return fail(format!("column {} covers its sink below 1/α", c.id));
    }
    let linked = inst.linked_sinks(c.level, &g);
    match (&c.sub, linked.is_empty()) {
        (None, false) => return fail(format!("column {} lacks a witness for its linked sinks", c.id)),
        (Some(sub), _) => {
            if sub.level != c.level + 1 {
                return fail(format!("column {} has a sub-witness at the wrong level", c.id));
            }
            let box_b = vec![beta as f64; inst.total_edges()];
            audit_witness(inst, sub, &linked, Some(&box_b), alpha, beta)?;
        }
        (None, true) => {}
    }
    let rebuilt = Column::new(inst, c.id, c.level, c.sink, c.flow.clone(), c.sub.clone());
    let same = rebuilt.budget.len() == c.budget.len()
        && rebuilt.budget.iter().zip(&c.budget).all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= AUDIT_TOL);
    if !same {
        return fail(format!("column {} has a stale budget vector", c.id));
    }
    Ok(())
}

/// Splits `b` between disjoint sink sets using a witness for their union.
/// The second part is the usage of the columns of `t2` (zero-masking the
/// rest), the first part is the remainder, so `b1 + b2 = b`.
pub fn split_budget(b: &[f64], t1: &[usize], t2: &[usize], witness: &Witness) -> Result<(Vec<f64>, Vec<f64>, Witness, Witness)> {
    if t1.iter().any(|v| t2.contains(v)) {
        return Err(Error::Input("sink sets must be disjoint".into()));
    }
    let w1 = witness.restrict(t1);
    let w2 = witness.restrict(t2);
    let mut b2 = vec![0.0; b.len()];
    for (e, x) in w2.usage() {
        b2[e] = x.min(b[e]);
    }
    let b1: Vec<f64> = b.iter().zip(&b2).map(|(x, y)| x - y).collect();
    Ok((b1, b2, w1, w2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auggraph::{Level, LevelBuilder, Role};
    use crate::instance::ValuationOracle;

    /// `s → v` with `f_v = 1` on the edge.
    fn unit_path() -> (AugInstance, usize) {
        let mut b = LevelBuilder::new();
        let s = b.vertex(Role::Plain);
        let v = b.vertex(Role::Plain);
        b.edge(s, v);
        b.source(s);
        b.sink(v, ValuationOracle::additive(vec![1.0]).unwrap());
        (AugInstance::new(vec![b.build().unwrap()], vec![]).unwrap(), v)
    }

    /// Two sinks fed through one shared edge `a → m`.
    fn shared_edge() -> (AugInstance, usize, usize) {
        let mut b = LevelBuilder::new();
        let s1 = b.vertex(Role::Plain);
        let s2 = b.vertex(Role::Plain);
        let a = b.vertex(Role::Plain);
        let m = b.vertex(Role::Plain);
        let v1 = b.vertex(Role::Plain);
        let v2 = b.vertex(Role::Plain);
        b.edge(s1, a);
        b.edge(s2, a);
        b.edge(a, m);
        b.edge(m, v1);
        b.edge(m, v2);
        b.source(s1);
        b.source(s2);
        b.sink(v1, ValuationOracle::additive(vec![1.0]).unwrap());
        b.sink(v2, ValuationOracle::additive(vec![1.0]).unwrap());
        let level: Level = b.build().unwrap();
        (AugInstance::new(vec![level], vec![]).unwrap(), v1, v2)
    }

    fn params() -> ClpParams {
        ClpParams::practical(1.0, 1, 7)
    }

    #[test]
    fn empty_t_star_is_member() {
        let (inst, _) = unit_path();
        let mut ctx = ClpContext::new(&inst, params());
        assert!(matches!(membership(&mut ctx, 0, &[], &[0.0]).unwrap(), Membership::Member(w) if w.entries.is_empty()));
    }

    #[test]
    fn unit_path_gets_one_column() {
        let (inst, v) = unit_path();
        let mut ctx = ClpContext::new(&inst, params());
        match membership(&mut ctx, 0, &[v], &[1.0]).unwrap() {
            Membership::Member(w) => {
                assert_eq!(w.entries.len(), 1);
                assert!((w.entries[0].1 - 1.0).abs() < 1e-6);
                audit_witness(&inst, &w, &[v], Some(&[1.0]), 1.0, 1).unwrap();
            }
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn zero_budget_is_separated() {
        let (inst, v) = unit_path();
        let mut ctx = ClpContext::new(&inst, params());
        match membership(&mut ctx, 0, &[v], &[0.0]).unwrap() {
            Membership::Separated(h) => {
                assert!(h.eval(&[0.0]) < h.rhs);
                assert!(h.eval(&[1.0]) >= h.rhs - 1e-9);
            }
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn shared_edge_budget_two_serves_both() {
        let (inst, v1, v2) = shared_edge();
        let mut ctx = ClpContext::new(&inst, ClpParams::practical(1.0, 2, 3));
        let b = vec![1.0, 1.0, 2.0, 1.0, 1.0];
        let Membership::Member(w) = membership(&mut ctx, 0, &[v1, v2], &b).unwrap() else { panic!("separated") };
        audit_witness(&inst, &w, &[v1, v2], Some(&b), 1.0, 2).unwrap();
        let (b1, b2, w1, w2) = split_budget(&b, &[v1], &[v2], &w).unwrap();
        audit_witness(&inst, &w1, &[v1], Some(&b1), 1.0, 2).unwrap();
        audit_witness(&inst, &w2, &[v2], Some(&b2), 1.0, 2).unwrap();
        let back = w1.merge(&w2).unwrap();
        audit_witness(&inst, &back, &[v1, v2], Some(&b), 1.0, 2).unwrap();
        let tight = vec![1.0, 1.0, 1.0, 1.0, 1.0];
        assert!(matches!(membership(&mut ctx, 0, &[v1, v2], &tight).unwrap(), Membership::Separated(_)));
    }

    #[test]
    fn ellipsoid_engine_agrees_on_small_cases() {
        let (inst, v1, v2) = shared_edge();
        let mut p = ClpParams::practical(1.0, 2, 3);
        p.engine = Engine::Ellipsoid;
        p.ellipsoid.inner_radius = 1e-4;
        let mut ctx = ClpContext::new(&inst, p);
        let b = vec![1.0, 1.0, 2.0, 1.0, 1.0];
        let Membership::Member(w) = membership(&mut ctx, 0, &[v1, v2], &b).unwrap() else { panic!("separated") };
        audit_witness(&inst, &w, &[v1, v2], Some(&b), 1.0, 2).unwrap();
        let tight = vec![1.0, 1.0, 1.0, 1.0, 1.0];
        assert!(matches!(membership(&mut ctx, 0, &[v1, v2], &tight).unwrap(), Membership::Separated(_)));
    }

    #[test]
    fn dual_violation_examples() {
        let (inst, v) = unit_path();
        let c = Column::new(&inst, 1, 0, v, vec![(0, 1)], None);
        let d = DualPoint { pi: vec![(v, 1.0)], mu: vec![0.0] };
        assert_eq!(dual_violation_value(&d, &c), -1.0);
        let d0 = DualPoint { pi: vec![], mu: vec![0.3] };
        assert!(dual_violation_value(&d0, &c) >= 0.0);
    }

    #[test]
    fn single_column_reconstruction() {
        let (inst, v) = unit_path();
        let mut ctx = ClpContext::new(&inst, params());
        let c = ctx.column(0, v, vec![(0, 1)], None);
        let w = dw_reconstruct_primal(&mut ctx, 0, &[v], &[1.0], &[c]).unwrap();
        assert!((w.weight_of(v) - 1.0).abs() < 1e-6);
        let c2 = ctx.column(0, v, vec![(0, 1)], None);
        assert!(matches!(dw_reconstruct_primal(&mut ctx, 0, &[v], &[0.5], &[c2]), Err(Error::Internal(_))));
    }

    #[test]
    fn split_rejects_overlap() {
        let w = Witness::empty(0);
        assert!(split_budget(&[1.0], &[3], &[3], &w).is_err());
        let (b1, b2, _, _) = split_budget(&[1.0], &[3], &[], &w).unwrap();
        assert_eq!((b1, b2), (vec![1.0], vec![0.0]));
    }
}
