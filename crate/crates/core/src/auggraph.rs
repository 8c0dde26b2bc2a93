//! Layered augmentation instances and their integral solutions.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result, input};
use crate::flowcore::{Edge, check_conservation};
use crate::instance::{Assignment, TOL, ValuationOracle};
use crate::reduction::CanonicalInstance;

/// What a vertex stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Plain,
    Resource(usize),
    Basic(usize),
    /// Source copy of a complex player.
    ComplexSource(usize),
    /// Sink copy of a complex player.
    ComplexSink(usize),
    Collector,
    /// Source feeding an unassigned resource.
    Supply(usize),
}

/// Valuation of a sink over its incoming edges.
///
/// The `j`-th incoming edge (in edge-id order) stands for element `elements[j]`
/// of `oracle`.
#[derive(Debug, Clone)]
pub struct SinkValuation {
    pub oracle: ValuationOracle,
    pub elements: Vec<usize>,
}

/// One layer: a digraph with sources, sinks and sink valuations.
#[derive(Debug, Clone)]
pub struct Level {
    pub roles: Vec<Role>,
    pub edges: Vec<Edge>,
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
    valuations: Vec<Option<SinkValuation>>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    in_pos: Vec<usize>,
    terminal: Vec<bool>,
}

/// Incremental construction of a [`Level`].
#[derive(Debug, Default, Clone)]
pub struct LevelBuilder {
    roles: Vec<Role>,
    edges: Vec<Edge>,
    sources: Vec<usize>,
    sinks: Vec<(usize, Option<ValuationOracle>, Option<Vec<usize>>)>,
}

impl LevelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, role: Role) -> usize {
        self.roles.push(role);
        self.roles.len() - 1
    }

    pub fn edge(&mut self, tail: usize, head: usize) -> usize {
        self.edges.push(Edge { tail, head });
        self.edges.len() - 1
    }

    pub fn source(&mut self, v: usize) {
        self.sources.push(v);
    }

    /// Sink whose valuation is `oracle` over incoming-edge positions `0..deg`.
    pub fn sink(&mut self, v: usize, oracle: ValuationOracle) {
        self.sinks.push((v, Some(oracle), None));
    }

    /// Sink valued by `oracle` where incoming edge `j` stands for `elements[j]`.
    pub fn sink_with_elements(&mut self, v: usize, oracle: ValuationOracle, elements: Vec<usize>) {
        self.sinks.push((v, Some(oracle), Some(elements)));
    }

    /// Sink valued by `|A| / |δ(v)|`.
    pub fn uniform_sink(&mut self, v: usize) {
        self.sinks.push((v, None, None));
    }

    pub fn build(self) -> Result<Level> {
        let n = self.roles.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut in_pos = vec![0; self.edges.len()];
        for (id, e) in self.edges.iter().enumerate() {
            if e.tail >= n || e.head >= n {
                return input(format!("edge {id} has an unknown endpoint"));
            }
            out_edges[e.tail].push(id);
            in_pos[id] = in_edges[e.head].len();
            in_edges[e.head].push(id);
        }
        let mut terminal = vec![false; n];
        for &s in &self.sources {
            if terminal[s] {
                return input(format!("vertex {s} listed twice as terminal"));
            }
            terminal[s] = true;
            if !in_edges[s].is_empty() || out_edges[s].len() > 1 {
                return input(format!("source {s} must have no incoming and at most one outgoing edge"));
            }
        }
        let mut valuations = vec![None; n];
        let mut sinks = Vec::new();
        for (v, oracle, elements) in self.sinks {
            if terminal[v] {
                return input(format!("vertex {v} listed twice as terminal"));
            }
            terminal[v] = true;
            if !out_edges[v].is_empty() {
                return input(format!("sink {v} has outgoing edges"));
            }
            let deg = in_edges[v].len();
            let (oracle, elements) = match (oracle, elements) {
                (None, _) => (ValuationOracle::cardinality(deg, &(0..deg).collect::<Vec<_>>()), (0..deg).collect()),
                (Some(o), None) => (o, (0..deg).collect()),
                (Some(o), Some(el)) => (o, el),
            };
            if elements.len() != deg || elements.iter().any(|&x| x >= oracle.domain()) {
                return input(format!("sink {v}: valuation does not match its {deg} incoming edges"));
            }
            valuations[v] = Some(SinkValuation { oracle, elements });
            sinks.push(v);
        }
        Ok(Level {
            roles: self.roles,
            edges: self.edges,
            sources: self.sources,
            sinks,
            valuations,
            out_edges,
            in_edges,
            in_pos,
            terminal,
        })
    }
}

impl Level {
    pub fn num_vertices(&self) -> usize {
        self.roles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn terminal(&self) -> &[bool] {
        &self.terminal
    }

    pub fn is_source(&self, v: usize) -> bool {
        self.terminal[v] && self.valuations[v].is_none()
    }

    pub fn is_sink(&self, v: usize) -> bool {
        self.valuations[v].is_some()
    }

    pub fn sink_valuation(&self, v: usize) -> Option<&SinkValuation> {
        self.valuations[v].as_ref()
    }

    /// `f_v` of a set of edges entering `v`.
    pub fn sink_value(&self, v: usize, edges: &[usize]) -> f64 {
        let Some(sv) = &self.valuations[v] else { return 0.0 };
        let mut elems: Vec<usize> =
            edges.iter().filter(|&&e| self.edges[e].head == v).map(|&e| sv.elements[self.in_pos[e]]).collect();
        elems.sort_unstable();
        elems.dedup();
        sv.oracle.value(&elems)
    }

    /// `f_v` of the support of `flow` inside `δ(v)`.
    pub fn coverage<T: PartialOrd + Default>(&self, v: usize, flow: &[T]) -> f64 {
        let zero = T::default();
        let used: Vec<usize> = self.in_edges[v].iter().copied().filter(|&e| flow[e] > zero).collect();
        self.sink_value(v, &used)
    }

    /// Position of edge `e` among the incoming edges of its head.
    pub fn in_position(&self, e: usize) -> usize {
        self.in_pos[e]
    }
}

/// Vertex ids of the canonical construction, shared by all levels.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalLayout {
    /// Vertex of each canonical resource.
    pub resource: Vec<usize>,
    pub basic: Vec<usize>,
    pub complex_source: Vec<usize>,
    pub complex_sink: Vec<usize>,
    pub collector: usize,
    /// Supply vertex of each resource unassigned under the reduced assignment.
    pub supply: Vec<Option<usize>>,
    /// The reduced assignment the levels were built from.
    #[serde(skip)]
    pub sigma_bar: Assignment,
}

/// `h` levels connected by linking matchings.
#[derive(Debug, Clone)]
pub struct AugInstance {
    pub levels: Vec<Arc<Level>>,
    /// `links[i]` pairs a sink of level `i + 1` with a source of level `i`.
    pub links: Vec<Vec<(usize, usize)>>,
    link_of_source: Vec<Vec<Option<usize>>>,
    edge_offset: Vec<usize>,
    pub layout: Option<CanonicalLayout>,
}

impl AugInstance {
    pub fn new(levels: Vec<Level>, links: Vec<Vec<(usize, usize)>>) -> Result<Self> {
        Self::from_shared(levels.into_iter().map(Arc::new).collect(), links, None)
    }

    fn from_shared(levels: Vec<Arc<Level>>, links: Vec<Vec<(usize, usize)>>, layout: Option<CanonicalLayout>) -> Result<Self> {
        if levels.is_empty() {
            return input("an augmentation instance needs at least one level");
        }
        if links.len() + 1 != levels.len() {
            return input(format!("{} levels need {} linking sets", levels.len(), levels.len() - 1));
        }
        let mut link_of_source = Vec::with_capacity(levels.len());
        for (i, pairs) in links.iter().enumerate() {
            let mut map = vec![None; levels[i].num_vertices()];
            let mut used_sink = vec![false; levels[i + 1].num_vertices()];
            for &(sink, source) in pairs {
                if sink >= used_sink.len() || !levels[i + 1].is_sink(sink) {
                    return input(format!("link ({sink},{source}) at level {i}: {sink} is not a sink of level {}", i + 1));
                }
                if source >= map.len() || !levels[i].is_source(source) {
                    return input(format!("link ({sink},{source}) at level {i}: {source} is not a source"));
                }
                if map[source].is_some() || used_sink[sink] {
                    return input(format!("linking set {i} is not a matching"));
                }
                map[source] = Some(sink);
                used_sink[sink] = true;
            }
            link_of_source.push(map);
        }
        link_of_source.push(vec![None; levels[levels.len() - 1].num_vertices()]);
        let mut edge_offset = Vec::with_capacity(levels.len() + 1);
        let mut acc = 0;
        for l in &levels {
            edge_offset.push(acc);
            acc += l.num_edges();
        }
        edge_offset.push(acc);
        Ok(AugInstance { levels, links, link_of_source, edge_offset, layout })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, i: usize) -> &Level {
        &self.levels[i]
    }

    /// Total vertex count over all levels.
    pub fn total_vertices(&self) -> usize {
        self.levels.iter().map(|l| l.num_vertices()).sum()
    }

    /// Sink of level `i + 1` linked to source `s` of level `i`.
    pub fn link(&self, i: usize, s: usize) -> Option<usize> {
        self.link_of_source[i].get(s).copied().flatten()
    }

    /// Global id of edge `e` of level `i`.
    pub fn global_edge(&self, i: usize, e: usize) -> usize {
        self.edge_offset[i] + e
    }

    /// Level and local id of a global edge id.
    pub fn local_edge(&self, g: usize) -> (usize, usize) {
        let i = self.edge_offset.partition_point(|&o| o <= g) - 1;
        (i, g - self.edge_offset[i])
    }

    /// Global ids of the edges of levels `i..`.
    pub fn edges_from(&self, i: usize) -> std::ops::Range<usize> {
        self.edge_offset[i]..self.edge_offset[self.depth()]
    }

    pub fn total_edges(&self) -> usize {
        self.edge_offset[self.depth()]
    }

    /// Sinks of level `i + 1` linked to sources used by `flow` in level `i`.
    pub fn linked_sinks(&self, i: usize, flow: &[u32]) -> Vec<usize> {
        if i + 1 >= self.depth() {
            return Vec::new();
        }
        let level = self.level(i);
        let mut out: Vec<usize> = level
            .sources
            .iter()
            .filter(|&&s| level.out_edges(s).iter().any(|&e| flow[e] > 0))
            .filter_map(|&s| self.link(i, s))
            .collect();
        out.sort_unstable();
        out
    }

    /// `δ(t)` is empty in a canonical instance: nothing to augment.
    pub fn nothing_to_augment(&self) -> bool {
        self.layout.as_ref().is_some_and(|l| self.level(0).in_edges(l.collector).is_empty())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let levels: Vec<_> = self
            .levels
            .iter()
            .map(|l| {
                serde_json::json!({
                    "roles": l.roles,
                    "edges": l.edges,
                    "sources": l.sources,
                    "sinks": l.sinks,
                })
            })
            .collect();
        serde_json::json!({ "levels": levels, "links": self.links })
    }
}

/// Integral per-level edge flows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AugSolution {
    pub flows: Vec<Vec<u32>>,
}

impl AugSolution {
    pub fn zero(inst: &AugInstance) -> Self {
        AugSolution { flows: inst.levels.iter().map(|l| vec![0; l.num_edges()]).collect() }
    }

    pub fn congestion(&self) -> u32 {
        self.flows.iter().flat_map(|f| f.iter().copied()).max().unwrap_or(0)
    }
}

/// First violated condition found by [`check_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Ok,
    Shape(String),
    Congestion { level: usize, edge: usize, load: u32 },
    Conservation { level: usize, vertex: usize },
    Coverage { level: usize, sink: usize, value: f64 },
}

impl Feasibility {
    pub fn is_ok(&self) -> bool {
        matches!(self, Feasibility::Ok)
    }
}

/// Checks conservation, congestion `≤ β` and coverage `≥ 1/α` of every
/// required sink: `T*` on level 0 and the linked sinks of used sources below.
pub fn check_feasible(inst: &AugInstance, sol: &AugSolution, t_star: &[usize], alpha: f64, beta: u32) -> Feasibility {
    if sol.flows.len() != inst.depth() {
        return Feasibility::Shape(format!("{} flows for {} levels", sol.flows.len(), inst.depth()));
    }
    let mut required = t_star.to_vec();
    for (i, flow) in sol.flows.iter().enumerate() {
        let level = inst.level(i);
        if flow.len() != level.num_edges() {
            return Feasibility::Shape(format!("level {i}: {} flow values for {} edges", flow.len(), level.num_edges()));
        }
        if let Some((edge, &load)) = flow.iter().enumerate().find(|(_, f)| **f > beta) {
            return Feasibility::Congestion { level: i, edge, load };
        }
        if check_conservation(level.num_vertices(), &level.edges, flow, level.terminal()).is_err() {
            let vertex = (0..level.num_vertices())
                .find(|&v| {
                    !level.terminal()[v]
                        && level.in_edges(v).iter().map(|&e| flow[e]).sum::<u32>()
                            != level.out_edges(v).iter().map(|&e| flow[e]).sum::<u32>()
                })
                .unwrap_or(0);
            return Feasibility::Conservation { level: i, vertex };
        }
        for &v in &required {
            if !level.is_sink(v) {
                return Feasibility::Shape(format!("level {i}: required vertex {v} is not a sink"));
            }
            let value = level.coverage(v, flow);
            if value < 1.0 / alpha - TOL {
                return Feasibility::Coverage { level: i, sink: v, value };
            }
        }
        required = inst.linked_sinks(i, flow);
    }
    Feasibility::Ok
}

/// `σ̄`: keeps `σ(r)` only when the holder values `r` alone at 1.
pub fn sigma_bar(canon: &CanonicalInstance, sigma: &Assignment) -> Assignment {
    let owner =
        sigma.owner.iter().enumerate().map(|(r, o)| o.filter(|&q| canon.valuation(q).singleton(r) >= 1.0 - TOL)).collect();
    Assignment { owner }
}

/// Builds `I(σ, h)`.
pub fn build_aug_instance(canon: &CanonicalInstance, sigma: &Assignment, h: usize) -> Result<AugInstance> {
    if h < 1 {
        return input("h must be at least 1");
    }
    let inst = &canon.instance;
    if sigma.owner.len() != inst.num_resources() {
        return input("assignment does not match the canonical resources");
    }
    let bar = sigma_bar(canon, sigma);
    let k = canon.num_source_players();
    let mut b = LevelBuilder::new();
    let resource: Vec<usize> = (0..inst.num_resources()).map(|r| b.vertex(Role::Resource(r))).collect();
    let basic: Vec<usize> = (0..k).map(|p| b.vertex(Role::Basic(canon.basic(p)))).collect();
    let complex_source: Vec<usize> = (0..k).map(|p| b.vertex(Role::ComplexSource(canon.complex(p)))).collect();
    let complex_sink: Vec<usize> = (0..k).map(|p| b.vertex(Role::ComplexSink(canon.complex(p)))).collect();
    let collector = b.vertex(Role::Collector);
    let supply: Vec<Option<usize>> =
        (0..inst.num_resources()).map(|r| bar.owner[r].is_none().then(|| b.vertex(Role::Supply(r)))).collect();
    let player_vertex = |q: usize, sink: bool| -> usize {
        if canon.is_basic(q) {
            basic[q]
        } else if sink {
            complex_sink[q - k]
        } else {
            complex_source[q - k]
        }
    };
    let mut sink_elements: Vec<Vec<usize>> = vec![Vec::new(); k];
    for r in 0..inst.num_resources() {
        if let Some(s) = supply[r] {
            b.edge(s, resource[r]);
        }
        if let Some(q) = bar.owner[r] {
            b.edge(player_vertex(q, false), resource[r]);
        }
        for q in 0..inst.num_players() {
            if bar.owner[r] != Some(q) && canon.valuation(q).singleton(r) > TOL {
                b.edge(resource[r], player_vertex(q, true));
                if !canon.is_basic(q) {
                    sink_elements[q - k].push(r);
                }
            }
        }
    }
    let bundles = bar.bundles(inst.num_players());
    for p in 0..k {
        if canon.valuation(canon.basic(p)).value(&bundles[canon.basic(p)]) < 1.0 - TOL {
            b.edge(basic[p], collector);
        }
    }
    for s in supply.iter().flatten() {
        b.source(*s);
    }
    for p in 0..k {
        b.source(complex_source[p]);
        b.sink_with_elements(complex_sink[p], canon.valuation(canon.complex(p)).clone(), sink_elements[p].clone());
    }
    b.uniform_sink(collector);
    let level = Arc::new(b.build()?);
    let links = (0..h - 1).map(|_| (0..k).map(|p| (complex_sink[p], complex_source[p])).collect()).collect();
    let layout = CanonicalLayout { resource, basic, complex_source, complex_sink, collector, supply, sigma_bar: bar };
    AugInstance::from_shared(vec![level; h], links, Some(layout))
}

/// Normalizes a canonical assignment of value 1 so that the symmetric
/// difference with `σ̄` is a flow, then returns that flow on every level.
///
/// Needs every basic player to hold at most one resource under `σ̄`.
pub fn planted_solution(canon: &CanonicalInstance, aug: &AugInstance, opt: &Assignment) -> Result<AugSolution> {
    let layout = aug.layout.as_ref().ok_or_else(|| Error::Input("instance has no canonical layout".into()))?;
    let bar = &layout.sigma_bar;
    let inst = &canon.instance;
    let k = canon.num_source_players();
    let nres = inst.num_resources();
    let bar_bundles = bar.bundles(inst.num_players());
    if (0..k).any(|p| bar_bundles[canon.basic(p)].len() > 1) {
        return input("a basic player holds more than one resource");
    }
    let opt_bundles = opt.bundles(inst.num_players());
    for q in 0..inst.num_players() {
        if canon.valuation(q).value(&opt_bundles[q]) < 1.0 - TOL {
            return input(format!("planted assignment leaves player {q} below 1"));
        }
    }
    let mut star = vec![None; nres];
    for p in 0..k {
        let q = canon.basic(p);
        let f = canon.valuation(q);
        let held = bar_bundles[q].first().copied().filter(|&r| opt.owner[r] == Some(q));
        let pick = held.or_else(|| opt_bundles[q].iter().copied().find(|&r| f.singleton(r) >= 1.0 - TOL));
        let r = pick.ok_or_else(|| Error::Internal(format!("basic player {q} has no value-1 resource")))?;
        star[r] = Some(q);
        let c = canon.complex(p);
        if opt.owner[canon.private(p)] == Some(c) {
            star[canon.private(p)] = Some(c);
        } else {
            let f = canon.valuation(c);
            for &r in opt_bundles[c].iter().filter(|&&r| f.singleton(r) > TOL) {
                star[r] = Some(c);
            }
        }
    }
    // Resolve resources held under σ̄ but dropped by the normalized optimum.
    while let Some(r) = (0..nres).find(|&r| bar.owner[r].is_some() && star[r].is_none()) {
        let x = bar.owner[r].expect("checked");
        for r2 in 0..nres {
            if star[r2] == Some(x) {
                star[r2] = None;
            }
        }
        star[r] = Some(x);
    }
    let level = aug.level(0);
    let mut flow = vec![0u32; level.num_edges()];
    let vertex_of = |q: usize, sink: bool| -> usize {
        if canon.is_basic(q) {
            layout.basic[q]
        } else if sink {
            layout.complex_sink[q - k]
        } else {
            layout.complex_source[q - k]
        }
    };
    let find = |tail: usize, head: usize| -> Result<usize> {
        level
            .out_edges(tail)
            .iter()
            .copied()
            .find(|&e| level.edges[e].head == head)
            .ok_or_else(|| Error::Internal(format!("missing edge {tail}->{head}")))
    };
    for r in 0..nres {
        if bar.owner[r] == star[r] {
            continue;
        }
        let rv = layout.resource[r];
        match bar.owner[r] {
            Some(p) => flow[find(vertex_of(p, false), rv)?] = 1,
            None => flow[find(layout.supply[r].expect("unassigned"), rv)?] = 1,
        }
        if let Some(q) = star[r] {
            flow[find(rv, vertex_of(q, true))?] = 1;
        }
    }
    for &e in level.in_edges(layout.collector) {
        flow[e] = 1;
    }
    Ok(AugSolution { flows: vec![flow; aug.depth()] })
}
