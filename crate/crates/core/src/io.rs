//! JSON formats for instances, allocations and run reports.
//!
//! Every document carries a `format_version` field. Reports are JSON lines.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Value, json};

use crate::error::{Error, Result, input};
use crate::instance::{Assignment, Instance, ValuationOracle, ValuationSpecParts};

pub const FORMAT_VERSION: u32 = 1;

fn default_version() -> u32 {
    FORMAT_VERSION
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return input(format!("unsupported format_version {v}, expected {FORMAT_VERSION}"));
    }
    Ok(())
}

/// Valuation parameters keyed by resource id. Resources missing from a
/// value map are worth 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ValuationSpec {
    Additive {
        values: BTreeMap<String, f64>,
    },
    /// `covers[r]` lists universe elements; `weights` gives each element's weight.
    WeightedCoverage {
        covers: BTreeMap<String, Vec<String>>,
        weights: BTreeMap<String, f64>,
    },
    TruncatedAdditive {
        values: BTreeMap<String, f64>,
        cap: f64,
    },
    /// `table[mask]` is the value of `{ground[j] : bit j of mask set}`.
    ExplicitTable {
        ground: Vec<String>,
        table: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    pub id: String,
    pub valuation: ValuationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub resources: Vec<String>,
    pub players: Vec<PlayerSpec>,
}

fn dense(resources: &[String], values: &BTreeMap<String, f64>, what: &str) -> Result<Vec<f64>> {
    let mut out = vec![0.0; resources.len()];
    for (id, v) in values {
        let r =
            resources.iter().position(|x| x == id).ok_or_else(|| Error::Input(format!("{what}: unknown resource id {id:?}")))?;
        out[r] = *v;
    }
    Ok(out)
}

impl ValuationSpec {
    pub fn build(&self, resources: &[String]) -> Result<ValuationOracle> {
        self.build_with(resources, true)
    }

    /// `checked = false` skips the submodularity check of explicit tables.
    pub fn build_with(&self, resources: &[String], checked: bool) -> Result<ValuationOracle> {
        let index =
            |id: &str| resources.iter().position(|x| x == id).ok_or_else(|| Error::Input(format!("unknown resource id {id:?}")));
        match self {
            ValuationSpec::Additive { values } => ValuationOracle::additive(dense(resources, values, "additive")?),
            ValuationSpec::TruncatedAdditive { values, cap } => {
                ValuationOracle::truncated_additive(dense(resources, values, "truncated-additive")?, *cap)
            }
            ValuationSpec::WeightedCoverage { covers, weights } => {
                let elems: Vec<&String> = weights.keys().collect();
                let mut dense_covers = vec![Vec::new(); resources.len()];
                for (id, list) in covers {
                    let r = index(id)?;
                    for e in list {
                        let u = elems
                            .iter()
                            .position(|x| *x == e)
                            .ok_or_else(|| Error::Input(format!("resource {id:?} covers unknown element {e:?}")))?;
                        dense_covers[r].push(u);
                    }
                }
                ValuationOracle::weighted_coverage(dense_covers, weights.values().copied().collect())
            }
            ValuationSpec::ExplicitTable { ground, table } => {
                let g = ground.iter().map(|id| index(id)).collect::<Result<Vec<_>>>()?;
                if checked {
                    ValuationOracle::explicit_table(resources.len(), g, table.clone())
                } else {
                    ValuationOracle::explicit_table_unchecked(resources.len(), g, table.clone())
                }
            }
        }
    }

    /// Spec of an oracle built from one of the serializable kinds.
    pub fn from_oracle(oracle: &ValuationOracle, resources: &[String]) -> Result<Self> {
        let keyed = |v: &[f64]| -> BTreeMap<String, f64> {
            v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(r, x)| (resources[r].clone(), *x)).collect()
        };
        let parts = oracle
            .to_spec()
            .ok_or_else(|| Error::Capability(format!("{} valuations cannot be serialized", oracle.kind_name())))?;
        Ok(match parts {
            ValuationSpecParts::Additive(v) => ValuationSpec::Additive { values: keyed(&v) },
            ValuationSpecParts::Truncated(v, cap) => ValuationSpec::TruncatedAdditive { values: keyed(&v), cap },
            ValuationSpecParts::Coverage(covers, weights) => {
                // Zero-padded names keep the element order under BTreeMap sorting.
                let width = weights.len().to_string().len();
                let name = |u: usize| format!("e{u:0width$}");
                ValuationSpec::WeightedCoverage {
                    covers: covers
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| !c.is_empty())
                        .map(|(r, c)| (resources[r].clone(), c.iter().map(|&u| name(u)).collect()))
                        .collect(),
                    weights: weights.iter().enumerate().map(|(u, w)| (name(u), *w)).collect(),
                }
            }
            ValuationSpecParts::Table(ground, table) => {
                ValuationSpec::ExplicitTable { ground: ground.iter().map(|&r| resources[r].clone()).collect(), table }
            }
        })
    }
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        self.build_with(true)
    }

    /// Builds without validating explicit tables, for inspecting bad inputs.
    pub fn build_unchecked(&self) -> Result<Instance> {
        self.build_with(false)
    }

    fn build_with(&self, checked: bool) -> Result<Instance> {
        check_version(self.format_version)?;
        let valuations =
            self.players.iter().map(|p| p.valuation.build_with(&self.resources, checked)).collect::<Result<Vec<_>>>()?;
        Instance::new(self.resources.clone(), self.players.iter().map(|p| p.id.clone()).collect(), valuations)
    }

    pub fn from_instance(inst: &Instance) -> Result<Self> {
        let players = (0..inst.num_players())
            .map(|p| {
                Ok(PlayerSpec {
                    id: inst.player_ids()[p].clone(),
                    valuation: ValuationSpec::from_oracle(inst.valuation(p), inst.resource_ids())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InstanceSpec { format_version: FORMAT_VERSION, resources: inst.resource_ids().to_vec(), players })
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_spec(text)?.build()
}

pub fn parse_instance_spec(text: &str) -> Result<InstanceSpec> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("instance: {e}")))
}

pub fn instance_to_json(inst: &Instance) -> Result<String> {
    Ok(serde_json::to_string_pretty(&InstanceSpec::from_instance(inst)?)? + "\n")
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_instance(&text)
}

/// `{"format_version", "assignments": {resource: player|null}, "min_value", "eta_star"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub assignments: BTreeMap<String, Option<String>>,
    pub min_value: f64,
    pub eta_star: f64,
}

impl AllocationSpec {
    pub fn new(inst: &Instance, a: &Assignment, eta_star: f64) -> Self {
        let assignments =
            inst.resource_ids().iter().zip(&a.owner).map(|(r, o)| (r.clone(), o.map(|p| inst.player_ids()[p].clone()))).collect();
        AllocationSpec { format_version: FORMAT_VERSION, assignments, min_value: inst.min_value(a), eta_star }
    }

    /// Assignment over `inst`; resources missing from the map stay unassigned.
    pub fn assignment(&self, inst: &Instance) -> Result<Assignment> {
        check_version(self.format_version)?;
        let mut a = Assignment::empty(inst.num_resources());
        for (r, p) in &self.assignments {
            let ri = inst.resource_index(r)?;
            a.owner[ri] = p.as_deref().map(|p| inst.player_index(p)).transpose()?;
        }
        Ok(a)
    }
}

/// Writes JSON lines, each tagged with the format version and a record kind.
pub struct ReportWriter<W: Write> {
    out: W,
}

impl<W: Write> ReportWriter<W> {
    pub fn new(out: W) -> Self {
        ReportWriter { out }
    }

    pub fn record(&mut self, kind: &str, body: impl Serialize) -> Result<()> {
        let mut v = json!({ "format_version": FORMAT_VERSION, "kind": kind });
        match serde_json::to_value(body)? {
            Value::Object(map) => v.as_object_mut().expect("object").extend(map),
            other => {
                v["data"] = other;
            }
        }
        writeln!(self.out, "{}", serde_json::to_string(&v)?)?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
      "format_version": 1,
      "resources": ["a", "b", "c"],
      "players": [
        {"id": "alice", "valuation": {"type": "additive", "values": {"a": 1.0, "b": 0.5}}},
        {"id": "bob", "valuation": {"type": "weighted-coverage",
           "covers": {"a": ["x"], "c": ["x", "y"]}, "weights": {"x": 1.0, "y": 2.0}}},
        {"id": "carol", "valuation": {"type": "truncated-additive", "values": {"b": 0.8, "c": 0.8}, "cap": 1.0}},
        {"id": "dave", "valuation": {"type": "explicit-table", "ground": ["a", "b"], "table": [0, 1, 1, 1]}}
      ]
    }"#;

    #[test]
    fn sample_parses_and_evaluates() {
        let inst = parse_instance(SAMPLE).unwrap();
        assert_eq!(inst.evaluate(0, &["a", "b"]).unwrap(), 1.5);
        assert_eq!(inst.evaluate(1, &["a", "c"]).unwrap(), 3.0);
        assert_eq!(inst.evaluate(2, &["b", "c"]).unwrap(), 1.0);
        assert_eq!(inst.evaluate(3, &["a", "b", "c"]).unwrap(), 1.0);
    }

    #[test]
    fn round_trip_preserves_values() {
        let inst = parse_instance(SAMPLE).unwrap();
        let back = parse_instance(&instance_to_json(&inst).unwrap()).unwrap();
        for p in 0..4 {
            for mask in 0..8usize {
                let b: Vec<usize> = (0..3).filter(|r| mask >> r & 1 == 1).collect();
                assert_eq!(inst.valuation(p).value(&b), back.valuation(p).value(&b));
            }
        }
        assert_eq!(instance_to_json(&inst).unwrap(), instance_to_json(&back).unwrap());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(
            parse_instance(r#"{"resources":["a"],"players":[{"id":"p","valuation":{"type":"additive","values":{"z":1}}}]}"#)
                .is_err()
        );
        assert!(parse_instance(r#"{"format_version":9,"resources":[],"players":[]}"#).is_err());
        assert!(parse_instance(r#"{"resources":["a","a"],"players":[]}"#).is_err());
        assert!(parse_instance(r#"{"resources":["a"],"players":[{"id":"p","valuation":{"type":"magic"}}]}"#).is_err());
        let table = r#"{"resources":["a","b"],"players":[{"id":"p","valuation":{"type":"explicit-table","ground":["a","b"],"table":[0,0,0,1]}}]}"#;
        assert!(matches!(parse_instance(table), Err(Error::Input(_))));
    }

    #[test]
    fn allocation_round_trip() {
        let inst = parse_instance(SAMPLE).unwrap();
        let a = Assignment { owner: vec![Some(0), None, Some(1)] };
        let spec = AllocationSpec::new(&inst, &a, 0.5);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"b\":null"));
        let back: AllocationSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.assignment(&inst).unwrap(), a);
        assert_eq!(spec.min_value, 0.0);
    }

    #[test]
    fn report_lines_are_tagged() {
        let mut w = ReportWriter::new(Vec::new());
        w.record("summary", json!({"eta_star": 1.0})).unwrap();
        w.record("value", 3).unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"eta_star":1.0,"format_version":1,"kind":"summary"}"#);
        assert_eq!(lines[1], r#"{"data":3,"format_version":1,"kind":"value"}"#);
    }
}
