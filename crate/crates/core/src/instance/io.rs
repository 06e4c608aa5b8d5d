use serde::Deserialize;
use serde_json::{json, Number, Value};

use super::{Arc, Commodity, Instance};
use crate::error::{NppError, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    nodes: usize,
    arcs: Vec<RawArc>,
    #[serde(default)]
    commodities: Vec<RawCommodity>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArc {
    tail: usize,
    head: usize,
    cost: f64,
    #[serde(default)]
    tolled: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCommodity {
    origin: usize,
    destination: usize,
    #[serde(default = "unit_demand")]
    demand: f64,
}

fn unit_demand() -> f64 {
    1.0
}

/// Parses and validates an instance document.
pub fn parse(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| NppError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let arcs =
        raw.arcs.into_iter().map(|a| Arc { tail: a.tail, head: a.head, cost: a.cost, tolled: a.tolled }).collect();
    let commodities = raw
        .commodities
        .into_iter()
        .map(|c| Commodity { origin: c.origin, destination: c.destination, demand: c.demand })
        .collect();
    Instance::new(raw.nodes, arcs, commodities)
}

/// Integral values are written without a fractional part so that documents
/// written by hand survive a round trip unchanged.
pub(crate) fn number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        Value::Number(Number::from(v as i64))
    } else {
        Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
    }
}

pub fn serialize(inst: &Instance) -> String {
    let arcs: Vec<Value> = inst
        .arcs()
        .iter()
        .map(|a| json!({"tail": a.tail, "head": a.head, "cost": number(a.cost), "tolled": a.tolled}))
        .collect();
    let commodities: Vec<Value> = inst
        .commodities()
        .iter()
        .map(|c| json!({"origin": c.origin, "destination": c.destination, "demand": number(c.demand)}))
        .collect();
    let doc = json!({"nodes": inst.node_count(), "arcs": arcs, "commodities": commodities});
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    text.push('\n');
    text
}
