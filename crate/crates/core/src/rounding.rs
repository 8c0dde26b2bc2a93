//! Level-by-level randomized rounding of a configuration-LP witness into
//! an integral augmentation solution.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::auggraph::{AugInstance, AugSolution};
use crate::clp::{AUDIT_TOL, Column, Witness};
use crate::error::{Error, Result};
use crate::instance::TOL;
use crate::reduction::log2_clamped;
use crate::rng::stream;

const RNG_TAG: u64 = 0x72_6f75_6e64;

/// `γ_j = γ_0 (1 + 1/log₂ n)^j` for `j = 0..h`.
pub fn gamma_schedule(gamma0: f64, n: usize, h: usize) -> Vec<f64> {
    let step = 1.0 + 1.0 / log2_clamped(n);
    (0..h).map(|j| gamma0 * step.powi(j as i32)).collect()
}

/// One rounded level.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRounding {
    pub level: usize,
    pub flow: Vec<u32>,
    /// Merged sub-witnesses of the sampled configurations.
    #[serde(skip)]
    pub next: Witness,
    pub attempts: usize,
    pub congestion: u32,
    /// Largest entry of the next-level usage.
    pub next_peak: f64,
}

/// Bounds a level must meet before it is accepted.
#[derive(Debug, Clone, Copy)]
pub struct LevelBounds {
    pub alpha: f64,
    /// Budget of this level; congestion must stay within `2γ`.
    pub gamma: f64,
    /// Budget of the next level, if any.
    pub gamma_next: Option<f64>,
}

/// Per-sink distributions: the sink's columns with weights summing to 1.
fn distributions(w: &Witness, t_star: &[usize]) -> Result<Vec<(usize, Vec<(Arc<Column>, f64)>)>> {
    let mut sinks = t_star.to_vec();
    sinks.sort_unstable();
    sinks.dedup();
    let mut out = Vec::with_capacity(sinks.len());
    for v in sinks {
        let cols: Vec<(Arc<Column>, f64)> = w.entries.iter().filter(|(c, y)| c.sink == v && *y > 0.0).cloned().collect();
        let total: f64 = cols.iter().map(|(_, y)| y).sum();
        if total < 1.0 - AUDIT_TOL {
            return Err(Error::Contract(format!("sink {v} of level {} has witness weight {total} < 1", w.level)));
        }
        out.push((v, cols.into_iter().map(|(c, y)| (c, y / total)).collect()));
    }
    Ok(out)
}

/// Samples one configuration per sink of `t_star`, resampling the whole
/// level until congestion stays within `2γ` and the next-level usage
/// within `γ_next`.
pub fn round_level(
    inst: &AugInstance,
    w: &Witness,
    t_star: &[usize],
    bounds: LevelBounds,
    seed: u64,
    max_attempts: usize,
) -> Result<LevelRounding> {
    let i = w.level;
    if i >= inst.depth() {
        return Err(Error::Input(format!("witness level {i} out of range")));
    }
    let level = inst.level(i);
    let dists = distributions(w, t_star)?;
    let mut last = String::from("no attempts allowed");
    for attempt in 0..max_attempts {
        let mut flow = vec![0u32; level.num_edges()];
        let mut next = Witness::empty(i + 1);
        for (v, cols) in &dists {
            let mut rng = stream(seed, &[RNG_TAG, i as u64, *v as u64, attempt as u64]);
            let u: f64 = rng.r#gen();
            let mut acc = 0.0;
            let mut pick = &cols[cols.len() - 1].0;
            for (c, y) in cols {
                acc += y;
                if u < acc {
                    pick = c;
                    break;
                }
            }
            let g = pick.dense_flow(level.num_edges());
            if level.coverage(*v, &g) < 1.0 / bounds.alpha - TOL {
                return Err(Error::Contract(format!("column {} does not cover sink {v}", pick.id)));
            }
            for (e, x) in g.into_iter().enumerate() {
                flow[e] += x;
            }
            if let Some(sub) = &pick.sub {
                next = next.merge(sub)?;
            }
        }
        let congestion = flow.iter().copied().max().unwrap_or(0);
        let next_peak = next.usage().iter().map(|&(_, x)| x).fold(0.0, f64::max);
        if congestion as f64 > 2.0 * bounds.gamma + TOL {
            last = format!("congestion {congestion} > 2γ = {}", 2.0 * bounds.gamma);
            continue;
        }
        if let Some(gn) = bounds.gamma_next
            && next_peak > gn + AUDIT_TOL
        {
            last = format!("next-level usage {next_peak} > {gn}");
            continue;
        }
        return Ok(LevelRounding { level: i, flow, next, attempts: attempt + 1, congestion, next_peak });
    }
    Err(Error::Budget(format!("rounding level {i}: {last} after {max_attempts} attempts")))
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundedSolution {
    pub solution: AugSolution,
    pub levels: Vec<LevelRounding>,
    pub gammas: Vec<f64>,
}

/// Rounds a level-0 witness level by level; the required sinks of level
/// `j + 1` are those linked to sources used by the rounded level `j`.
pub fn round_all_levels(
    inst: &AugInstance,
    w: &Witness,
    t_star: &[usize],
    alpha: f64,
    gamma0: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<RoundedSolution> {
    if w.level != 0 {
        return Err(Error::Input("round_all_levels expects a level-0 witness".into()));
    }
    let h = inst.depth();
    let gammas = gamma_schedule(gamma0, inst.total_vertices(), h + 1);
    let mut levels = Vec::with_capacity(h);
    let mut current = w.clone();
    let mut required = t_star.to_vec();
    for j in 0..h {
        let bounds = LevelBounds { alpha, gamma: gammas[j], gamma_next: (j + 1 < h).then(|| gammas[j + 1]) };
        let r = round_level(inst, &current, &required, bounds, seed, max_attempts)?;
        required = inst.linked_sinks(j, &r.flow);
        current = r.next.clone();
        levels.push(r);
    }
    let solution = AugSolution { flows: levels.iter().map(|l| l.flow.clone()).collect() };
    Ok(RoundedSolution { solution, levels, gammas: gammas[..h].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auggraph::{Feasibility, LevelBuilder, Role, check_feasible};
    use crate::instance::ValuationOracle;

    fn unit_path() -> (AugInstance, usize) {
        let mut b = LevelBuilder::new();
        let s = b.vertex(Role::Plain);
        let v = b.vertex(Role::Plain);
        b.edge(s, v);
        b.source(s);
        b.sink(v, ValuationOracle::additive(vec![1.0]).unwrap());
        (AugInstance::new(vec![b.build().unwrap()], vec![]).unwrap(), v)
    }

    #[test]
    fn schedule_arithmetic() {
        let g = gamma_schedule(600.0, 16, 3);
        assert_eq!(g, vec![600.0, 750.0, 937.5]);
    }

    #[test]
    fn single_configuration_is_copied() {
        let (inst, v) = unit_path();
        let c = Arc::new(Column::new(&inst, 1, 0, v, vec![(0, 1)], None));
        let w = Witness { level: 0, entries: vec![(c, 1.0)] };
        let r = round_all_levels(&inst, &w, &[v], 1.0, 1.0, 0, 4).unwrap();
        assert_eq!(r.solution.flows, vec![vec![1]]);
        assert_eq!(check_feasible(&inst, &r.solution, &[v], 1.0, 1), Feasibility::Ok);
    }

    #[test]
    fn empty_target_gives_zero_flow() {
        let (inst, _) = unit_path();
        let r = round_all_levels(&inst, &Witness::empty(0), &[], 1.0, 1.0, 0, 4).unwrap();
        assert_eq!(r.solution.flows, vec![vec![0]]);
    }

    #[test]
    fn underweight_sink_is_a_contract_error() {
        let (inst, v) = unit_path();
        let c = Arc::new(Column::new(&inst, 1, 0, v, vec![(0, 1)], None));
        let w = Witness { level: 0, entries: vec![(c, 0.5)] };
        assert!(matches!(round_all_levels(&inst, &w, &[v], 1.0, 1.0, 0, 4), Err(Error::Contract(_))));
    }

    #[test]
    fn impossible_congestion_exhausts_attempts() {
        let (inst, v) = unit_path();
        let c = Arc::new(Column::new(&inst, 1, 0, v, vec![(0, 3)], None));
        let w = Witness { level: 0, entries: vec![(c, 1.0)] };
        let bounds = LevelBounds { alpha: 1.0, gamma: 1.0, gamma_next: None };
        assert!(matches!(round_level(&inst, &w, &[v], bounds, 0, 5), Err(Error::Budget(_))));
    }
}
