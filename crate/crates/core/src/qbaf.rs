//! Quantitative bipolar argumentation frameworks.
//!
//! A [`Qbaf`] is a finite set of [`Argument`]s, each carrying a base score in
//! `[0, 1]`, together with two directed edge relations (attack and support)
//! that never share an edge. Values are immutable once built; every editing
//! operation returns a new framework.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{check_unit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgumentKind {
    Claim,
    Evidence,
}

impl ArgumentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArgumentKind::Claim => "claim",
            ArgumentKind::Evidence => "evidence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    pub id: String,
    pub text: String,
    pub kind: ArgumentKind,
    pub base_score: f64,
}

impl Argument {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        kind: ArgumentKind,
        base_score: f64,
    ) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            kind,
            base_score,
        }
    }

    pub fn claim(id: impl Into<String>, text: impl Into<String>, base_score: f64) -> Self {
        Self::new(id, text, ArgumentKind::Claim, base_score)
    }

    pub fn evidence(id: impl Into<String>, text: impl Into<String>, base_score: f64) -> Self {
        Self::new(id, text, ArgumentKind::Evidence, base_score)
    }
}

/// Polarity of a directed edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Attack,
    Support,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Attack => "attack",
            Relation::Support => "support",
        })
    }
}

/// A directed edge `(from, to)`.
pub type Edge = (String, String);

#[derive(Debug, Clone, PartialEq)]
pub struct Qbaf {
    arguments: BTreeMap<String, Argument>,
    attacks: BTreeSet<Edge>,
    supports: BTreeSet<Edge>,
    attackers: BTreeMap<String, BTreeSet<String>>,
    supporters: BTreeMap<String, BTreeSet<String>>,
}

impl Qbaf {
    /// Validates the inputs and builds a framework.
    ///
    /// Repeated edges collapse to one. Input order does not matter.
    pub fn build<A, E1, E2>(arguments: A, attacks: E1, supports: E2) -> Result<Self>
    where
        A: IntoIterator<Item = Argument>,
        E1: IntoIterator<Item = Edge>,
        E2: IntoIterator<Item = Edge>,
    {
        let mut args = BTreeMap::new();
        let mut claim: Option<String> = None;
        for arg in arguments {
            if arg.id.is_empty() {
                return Err(Error::schema(
                    "arguments[].id",
                    "argument id must be non-empty",
                ));
            }
            check_unit(format!("base_score of `{}`", arg.id), arg.base_score)?;
            if arg.kind == ArgumentKind::Claim {
                if let Some(existing) = &claim {
                    return Err(Error::schema(
                        "arguments[].kind",
                        format!(
                            "more than one claim argument (`{existing}` and `{}`)",
                            arg.id
                        ),
                    ));
                }
                claim = Some(arg.id.clone());
            }
            if args.contains_key(&arg.id) {
                return Err(Error::DuplicateId(arg.id));
            }
            args.insert(arg.id.clone(), arg);
        }

        let attacks: BTreeSet<Edge> = attacks.into_iter().collect();
        let supports: BTreeSet<Edge> = supports.into_iter().collect();
        for (from, to) in attacks.iter().chain(supports.iter()) {
            for end in [from, to] {
                if !args.contains_key(end) {
                    return Err(Error::DanglingEdge {
                        from: from.clone(),
                        to: to.clone(),
                        missing: end.clone(),
                    });
                }
            }
        }
        if let Some((from, to)) = attacks.intersection(&supports).next() {
            return Err(Error::DisjointnessViolation {
                from: from.clone(),
                to: to.clone(),
            });
        }

        Ok(Self::assemble(args, attacks, supports))
    }

    fn assemble(
        arguments: BTreeMap<String, Argument>,
        attacks: BTreeSet<Edge>,
        supports: BTreeSet<Edge>,
    ) -> Self {
        let index = |edges: &BTreeSet<Edge>| {
            let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            for (from, to) in edges {
                map.entry(to.clone()).or_default().insert(from.clone());
            }
            map
        };
        let attackers = index(&attacks);
        let supporters = index(&supports);
        Self {
            arguments,
            attacks,
            supports,
            attackers,
            supporters,
        }
    }

    pub fn empty() -> Self {
        Self::assemble(BTreeMap::new(), BTreeSet::new(), BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.arguments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }

    /// Arguments in ascending id order.
    pub fn arguments(&self) -> impl Iterator<Item = &Argument> {
        self.arguments.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.arguments.keys().map(String::as_str)
    }

    pub fn argument(&self, id: &str) -> Option<&Argument> {
        self.arguments.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.arguments.contains_key(id)
    }

    pub fn base_score(&self, id: &str) -> Option<f64> {
        self.arguments.get(id).map(|a| a.base_score)
    }

    pub fn claim(&self) -> Option<&Argument> {
        self.arguments
            .values()
            .find(|a| a.kind == ArgumentKind::Claim)
    }

    pub fn attacks(&self) -> &BTreeSet<Edge> {
        &self.attacks
    }

    pub fn supports(&self) -> &BTreeSet<Edge> {
        &self.supports
    }

    pub fn edge_count(&self) -> usize {
        self.attacks.len() + self.supports.len()
    }

    /// Attackers of `id` in ascending id order (empty for unknown ids).
    pub fn attackers(&self, id: &str) -> impl Iterator<Item = &str> {
        self.attackers
            .get(id)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn supporters(&self, id: &str) -> impl Iterator<Item = &str> {
        self.supporters
            .get(id)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn relation(&self, from: &str, to: &str) -> Option<Relation> {
        let edge = (from.to_owned(), to.to_owned());
        if self.attacks.contains(&edge) {
            Some(Relation::Attack)
        } else if self.supports.contains(&edge) {
            Some(Relation::Support)
        } else {
            None
        }
    }

    /// True if the argument has no incoming and no outgoing edges.
    pub fn is_isolated(&self, id: &str) -> bool {
        !self
            .attacks
            .iter()
            .chain(self.supports.iter())
            .any(|(f, t)| f == id || t == id)
    }

    /// True if the edge relation (attacks and supports together) has no cycle.
    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm over the union of both relations.
        let mut indegree: BTreeMap<&str, usize> = self.ids().map(|id| (id, 0)).collect();
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (from, to) in self.attacks.iter().chain(self.supports.iter()) {
            *indegree.get_mut(to.as_str()).expect("validated edge") += 1;
            out.entry(from.as_str()).or_default().push(to.as_str());
        }
        let mut ready: Vec<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut seen = 0;
        while let Some(id) = ready.pop() {
            seen += 1;
            for next in out.get(id).into_iter().flatten() {
                let d = indegree.get_mut(next).expect("validated edge");
                *d -= 1;
                if *d == 0 {
                    ready.push(next);
                }
            }
        }
        seen == self.len()
    }

    /// Returns a copy without `id` and without every edge touching it.
    pub fn remove_argument(&self, id: &str) -> Result<Self> {
        if !self.contains(id) {
            return Err(Error::UnknownId(id.to_owned()));
        }
        let mut arguments = self.arguments.clone();
        arguments.remove(id);
        let keep = |edges: &BTreeSet<Edge>| -> BTreeSet<Edge> {
            edges
                .iter()
                .filter(|(f, t)| f != id && t != id)
                .cloned()
                .collect()
        };
        Ok(Self::assemble(
            arguments,
            keep(&self.attacks),
            keep(&self.supports),
        ))
    }

    /// Returns a copy with the base score of `id` replaced.
    pub fn with_base_score(&self, id: &str, base_score: f64) -> Result<Self> {
        check_unit(format!("base_score of `{id}`"), base_score)?;
        let mut arguments = self.arguments.clone();
        let arg = arguments
            .get_mut(id)
            .ok_or_else(|| Error::UnknownId(id.to_owned()))?;
        arg.base_score = base_score;
        Ok(Self::assemble(
            arguments,
            self.attacks.clone(),
            self.supports.clone(),
        ))
    }

    /// Returns a copy where the edge `(from, to)` has the given polarity;
    /// `None` removes the edge.
    pub fn with_relation(&self, from: &str, to: &str, relation: Option<Relation>) -> Result<Self> {
        for end in [from, to] {
            if !self.contains(end) {
                return Err(Error::UnknownId(end.to_owned()));
            }
        }
        let edge = (from.to_owned(), to.to_owned());
        let mut attacks = self.attacks.clone();
        let mut supports = self.supports.clone();
        attacks.remove(&edge);
        supports.remove(&edge);
        match relation {
            Some(Relation::Attack) => {
                attacks.insert(edge);
            }
            Some(Relation::Support) => {
                supports.insert(edge);
            }
            None => {}
        }
        Ok(Self::assemble(self.arguments.clone(), attacks, supports))
    }

    /// Canonical JSON text: arguments sorted by id, edges sorted.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("QBAF serialization is infallible")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("QBAF serialization is infallible")
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("QBAF serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::schema("$", format!("invalid JSON: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema("$", "expected an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "arguments" | "attacks" | "supports") {
                return Err(Error::schema(format!("$.{key}"), "unknown field"));
            }
        }
        let list = |key: &str| -> Result<&Vec<Value>> {
            match obj.get(key) {
                Some(Value::Array(items)) => Ok(items),
                Some(_) => Err(Error::schema(format!("$.{key}"), "expected an array")),
                None => Err(Error::schema(format!("$.{key}"), "missing field")),
            }
        };

        let mut arguments = Vec::new();
        for (i, item) in list("arguments")?.iter().enumerate() {
            arguments.push(decode_argument(item, &format!("$.arguments[{i}]"))?);
        }
        let attacks = decode_edges(list("attacks")?, "$.attacks")?;
        let supports = decode_edges(list("supports")?, "$.supports")?;
        Self::build(arguments, attacks, supports)
    }
}

fn decode_argument(value: &Value, path: &str) -> Result<Argument> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema(path, "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "id" | "text" | "kind" | "base_score") {
            return Err(Error::schema(format!("{path}.{key}"), "unknown field"));
        }
    }
    let string = |key: &str| -> Result<String> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(Error::schema(format!("{path}.{key}"), "expected a string")),
            None => Err(Error::schema(format!("{path}.{key}"), "missing field")),
        }
    };
    let id = string("id")?;
    let text = string("text")?;
    let kind = match string("kind")?.as_str() {
        "claim" => ArgumentKind::Claim,
        "evidence" => ArgumentKind::Evidence,
        other => {
            return Err(Error::schema(
                format!("{path}.kind"),
                format!("expected \"claim\" or \"evidence\", got {other:?}"),
            ))
        }
    };
    let base_score = obj
        .get("base_score")
        .ok_or_else(|| Error::schema(format!("{path}.base_score"), "missing field"))?
        .as_f64()
        .ok_or_else(|| Error::schema(format!("{path}.base_score"), "expected a number"))?;
    Ok(Argument {
        id,
        text,
        kind,
        base_score,
    })
}

fn decode_edges(items: &[Value], path: &str) -> Result<Vec<Edge>> {
    items
        .iter()
        .enumerate()
        .map(|(i, item)| match item.as_array().map(Vec::as_slice) {
            Some([Value::String(from), Value::String(to)]) => Ok((from.clone(), to.clone())),
            _ => Err(Error::schema(
                format!("{path}[{i}]"),
                "expected a [from, to] pair of strings",
            )),
        })
        .collect()
}

#[derive(Serialize)]
struct Wire<'a> {
    arguments: Vec<&'a Argument>,
    attacks: Vec<[&'a str; 2]>,
    supports: Vec<[&'a str; 2]>,
}

impl Serialize for Qbaf {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        fn edges(set: &BTreeSet<Edge>) -> Vec<[&str; 2]> {
            set.iter().map(|(f, t)| [f.as_str(), t.as_str()]).collect()
        }
        Wire {
            arguments: self.arguments.values().collect(),
            attacks: edges(&self.attacks),
            supports: edges(&self.supports),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Qbaf {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        Qbaf::from_value(&value).map_err(serde::de::Error::custom)
    }
}
