use std::collections::HashMap;

use crate::auggraph::{AugInstance, AugSolution};
use crate::error::{Error, Result};
use crate::instance::{Assignment, Instance, TOL};

use super::explicit::enumerate_flows;

/// Largest number of complete assignments [`brute_opt`] will visit.
pub const BRUTE_OPT_CAP: f64 = 1e7;

/// Largest per-level edge count accepted by [`brute_aug`].
pub const BRUTE_AUG_EDGES: usize = 14;

/// Exact optimum by enumerating every map from resources to players.
pub fn brute_opt(instance: &Instance) -> Result<(f64, Assignment)> {
    let k = instance.num_players();
    let m = instance.num_resources();
    if k == 0 {
        return Err(Error::Input("instance has no players".into()));
    }
    if (k as f64).powi(m as i32) > BRUTE_OPT_CAP {
        return Err(Error::Capability(format!("{k}^{m} assignments exceed {BRUTE_OPT_CAP}")));
    }
    let mut digits = vec![0usize; m];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let mut bundles = vec![Vec::new(); k];
        for (r, &p) in digits.iter().enumerate() {
            bundles[p].push(r);
        }
        let v = (0..k).map(|p| instance.valuation(p).value(&bundles[p])).fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, digits.clone()));
        }
        let mut pos = 0;
        while pos < m && digits[pos] + 1 == k {
            digits[pos] = 0;
            pos += 1;
        }
        if pos == m {
            break;
        }
        digits[pos] += 1;
    }
    let (value, digits) = best.expect("at least one assignment");
    Ok((value, Assignment { owner: digits.into_iter().map(Some).collect() }))
}

/// Exhaustive search for a coverage-1, congestion-1 solution covering `t_star`.
pub fn brute_aug(inst: &AugInstance, t_star: &[usize]) -> Result<Option<AugSolution>> {
    for i in 0..inst.depth() {
        let m = inst.level(i).num_edges();
        if m > BRUTE_AUG_EDGES {
            return Err(Error::Capability(format!("level {i} has {m} edges > {BRUTE_AUG_EDGES}")));
        }
    }
    let mut memo = HashMap::new();
    let mut required: Vec<usize> = t_star.to_vec();
    required.sort_unstable();
    required.dedup();
    Ok(search(inst, 0, &required, &mut memo)?.map(|flows| AugSolution { flows }))
}

type Memo = HashMap<(usize, Vec<usize>), Option<Vec<Vec<u32>>>>;

fn search(inst: &AugInstance, i: usize, required: &[usize], memo: &mut Memo) -> Result<Option<Vec<Vec<u32>>>> {
    let key = (i, required.to_vec());
    if let Some(hit) = memo.get(&key) {
        return Ok(hit.clone());
    }
    let level = inst.level(i);
    let zero_tail = |from: usize| -> Vec<Vec<u32>> { (from..inst.depth()).map(|j| vec![0; inst.level(j).num_edges()]).collect() };
    let mut result = None;
    if required.is_empty() {
        result = Some(zero_tail(i));
    } else {
        let candidates = enumerate_flows(level, 1, None, usize::MAX)?;
        for flow in candidates {
            let covered = required.iter().all(|&v| level.coverage(v, &flow) >= 1.0 - TOL);
            if !covered {
                continue;
            }
            let next = inst.linked_sinks(i, &flow);
            let tail = if i + 1 == inst.depth() { Some(Vec::new()) } else { search(inst, i + 1, &next, memo)? };
            if let Some(mut tail) = tail {
                let mut flows = vec![flow];
                flows.append(&mut tail);
                result = Some(flows);
                break;
            }
        }
    }
    memo.insert(key, result.clone());
    Ok(result)
}
