// SPDX-License-Identifier: Apache-2.0

//! Network configuration metamodel.
//!
//! A metamodel declares specification item groups (with typed items and an
//! optional generalization parent) and the relationships allowed between
//! them. Models are checked against it, and the generator consults the
//! `configRelevant` flag to decide which groups can ever produce commands.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The bundled default metamodel (network configuration groups for
/// Cisco-style routers).
pub const DEFAULT_METAMODEL: &str = include_str!("../examples/scenario/metamodel.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    String,
    Int,
    Bool,
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataType::String => "string",
            DataType::Int => "int",
            DataType::Bool => "bool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecItem {
    pub name: String,
    #[serde(rename = "type")]
    pub data_type: DataType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct SpecItemGroup {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default = "default_true")]
    pub config_relevant: bool,
    #[serde(default)]
    pub items: Vec<SpecItem>,
}

fn default_true() -> bool {
    true
}

/// Multiplicity bound on one end of a relationship. `max == None` is
/// unbounded (`*`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Multiplicity {
    pub min: u32,
    pub max: Option<u32>,
}

impl Multiplicity {
    pub const ZERO_OR_ONE: Multiplicity = Multiplicity {
        min: 0,
        max: Some(1),
    };
    pub const ONE: Multiplicity = Multiplicity {
        min: 1,
        max: Some(1),
    };
    pub const MANY: Multiplicity = Multiplicity { min: 0, max: None };

    pub fn admits(&self, count: usize) -> bool {
        count >= self.min as usize && self.max.is_none_or(|m| count <= m as usize)
    }
}

impl FromStr for Multiplicity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bound = |t: &str| -> std::result::Result<u32, String> {
            t.parse::<u32>()
                .map_err(|_| format!("bad multiplicity {s:?}"))
        };
        match s.split_once("..") {
            None if s == "*" => Ok(Multiplicity::MANY),
            None => {
                let n = bound(s)?;
                Ok(Multiplicity {
                    min: n,
                    max: Some(n),
                })
            }
            Some((lo, "*")) => Ok(Multiplicity {
                min: bound(lo)?,
                max: None,
            }),
            Some((lo, hi)) => {
                let (min, max) = (bound(lo)?, bound(hi)?);
                if min > max {
                    return Err(format!("bad multiplicity {s:?}: lower bound exceeds upper"));
                }
                Ok(Multiplicity {
                    min,
                    max: Some(max),
                })
            }
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.min, self.max) {
            (0, None) => f.write_str("*"),
            (n, None) => write!(f, "{n}..*"),
            (n, Some(m)) if n == m => write!(f, "{n}"),
            (n, Some(m)) => write!(f, "{n}..{m}"),
        }
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationshipKind {
    Association,
    Composition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    A,
    B,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::A => End::B,
            End::B => End::A,
        }
    }
}

/// A relationship between two groups. `mult_b` bounds how many B partners
/// one A instance has, and `mult_a` the converse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationshipDecl {
    #[serde(rename = "a")]
    pub end_a: String,
    #[serde(rename = "b")]
    pub end_b: String,
    #[serde(rename = "aMult")]
    pub mult_a: Multiplicity,
    #[serde(rename = "bMult")]
    pub mult_b: Multiplicity,
    pub kind: RelationshipKind,
    #[serde(
        rename = "compositeEnd",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub composite_end: Option<End>,
}

impl RelationshipDecl {
    pub fn group(&self, end: End) -> &str {
        match end {
            End::A => &self.end_a,
            End::B => &self.end_b,
        }
    }

    pub fn mult(&self, end: End) -> Multiplicity {
        match end {
            End::A => self.mult_a,
            End::B => self.mult_b,
        }
    }

    /// Self-referencing `0..1`-to-`0..1` relationship: a singly linked
    /// ordering among instances of one group (access list entries).
    pub fn is_chain(&self) -> bool {
        self.end_a == self.end_b
            && self.mult_a == Multiplicity::ZERO_OR_ONE
            && self.mult_b == Multiplicity::ZERO_OR_ONE
    }
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct MetamodelDoc {
    groups: Vec<SpecItemGroup>,
    #[serde(default)]
    relationships: Vec<RelationshipDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metamodel {
    groups: Vec<SpecItemGroup>,
    index: BTreeMap<String, usize>,
    relationships: Vec<RelationshipDecl>,
}

pub fn load_metamodel(document: &str) -> Result<Metamodel> {
    let doc: MetamodelDoc =
        serde_json::from_str(document).map_err(|e| Error::parse("metamodel", e))?;
    Metamodel::new(doc.groups, doc.relationships)
}

impl Metamodel {
    pub fn new(groups: Vec<SpecItemGroup>, relationships: Vec<RelationshipDecl>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, g) in groups.iter().enumerate() {
            if g.name.is_empty() {
                return Err(Error::Metamodel(format!("group #{i} has an empty name")));
            }
            if index.insert(g.name.clone(), i).is_some() {
                return Err(Error::Metamodel(format!("duplicate group {:?}", g.name)));
            }
        }
        let mm = Metamodel {
            groups,
            index,
            relationships,
        };
        mm.validate()?;
        Ok(mm)
    }

    pub fn default_network() -> Self {
        load_metamodel(DEFAULT_METAMODEL).expect("bundled metamodel is valid")
    }

    fn validate(&self) -> Result<()> {
        for g in &self.groups {
            if let Some(p) = &g.parent {
                if !self.index.contains_key(p) {
                    return Err(Error::Metamodel(format!(
                        "group {:?} has unknown parent {p:?}",
                        g.name
                    )));
                }
            }
        }
        for g in &self.groups {
            let mut seen = BTreeSet::new();
            let mut cur = Some(g);
            while let Some(c) = cur {
                if !seen.insert(c.name.as_str()) {
                    return Err(Error::Metamodel(format!(
                        "generalization cycle through group {:?}",
                        g.name
                    )));
                }
                cur = c.parent.as_deref().map(|p| &self.groups[self.index[p]]);
            }
        }
        for g in &self.groups {
            let mut names = BTreeSet::new();
            for item in self.ancestors(&g.name).iter().rev().flat_map(|a| &a.items) {
                if item.name.is_empty() {
                    return Err(Error::Metamodel(format!(
                        "group {:?} has an item with an empty name",
                        g.name
                    )));
                }
                if !names.insert(item.name.as_str()) {
                    return Err(Error::Metamodel(format!(
                        "item {:?} declared twice in group {:?} (including inherited items)",
                        item.name, g.name
                    )));
                }
            }
        }
        for (i, r) in self.relationships.iter().enumerate() {
            for end in [&r.end_a, &r.end_b] {
                if !self.index.contains_key(end) {
                    return Err(Error::Metamodel(format!(
                        "relationship #{i} names unknown group {end:?}"
                    )));
                }
            }
            match (r.kind, r.composite_end) {
                (RelationshipKind::Composition, None) => {
                    return Err(Error::Metamodel(format!(
                        "composition {}-{} lacks compositeEnd",
                        r.end_a, r.end_b
                    )))
                }
                (RelationshipKind::Association, Some(_)) => {
                    return Err(Error::Metamodel(format!(
                        "association {}-{} must not set compositeEnd",
                        r.end_a, r.end_b
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> &[SpecItemGroup] {
        &self.groups
    }

    pub fn relationships(&self) -> &[RelationshipDecl] {
        &self.relationships
    }

    pub fn group(&self, name: &str) -> Option<&SpecItemGroup> {
        self.index.get(name).map(|&i| &self.groups[i])
    }

    fn require(&self, name: &str) -> Result<&SpecItemGroup> {
        self.group(name)
            .ok_or_else(|| Error::Metamodel(format!("unknown group {name:?}")))
    }

    /// The group followed by its generalization ancestors, nearest first.
    fn ancestors(&self, name: &str) -> Vec<&SpecItemGroup> {
        let mut out = Vec::new();
        let mut cur = self.group(name);
        while let Some(g) = cur {
            out.push(g);
            cur = g.parent.as_deref().and_then(|p| self.group(p));
        }
        out
    }

    /// True when `group` is `ancestor` or inherits from it.
    pub fn is_a(&self, group: &str, ancestor: &str) -> bool {
        self.ancestors(group).iter().any(|g| g.name == ancestor)
    }

    pub fn is_config_relevant(&self, group: &str) -> bool {
        self.group(group).is_some_and(|g| g.config_relevant)
    }

    /// Inherited items first (root ancestor first), then the group's own.
    pub fn effective_items(&self, group: &str) -> Result<Vec<&SpecItem>> {
        self.require(group)?;
        Ok(self
            .ancestors(group)
            .into_iter()
            .rev()
            .flat_map(|g| g.items.iter())
            .collect())
    }

    pub fn item(&self, group: &str, item: &str) -> Option<&SpecItem> {
        self.ancestors(group)
            .into_iter()
            .flat_map(|g| g.items.iter())
            .find(|i| i.name == item)
    }

    pub fn effective_relationships(&self, group: &str) -> Result<Vec<&RelationshipDecl>> {
        Ok(self
            .effective_relationship_indices(group)?
            .into_iter()
            .map(|i| &self.relationships[i])
            .collect())
    }

    pub fn effective_relationship_indices(&self, group: &str) -> Result<Vec<usize>> {
        self.require(group)?;
        Ok(self
            .relationships
            .iter()
            .enumerate()
            .filter(|(_, r)| self.is_a(group, &r.end_a) || self.is_a(group, &r.end_b))
            .map(|(i, _)| i)
            .collect())
    }

    pub fn to_json(&self) -> String {
        let doc = MetamodelDoc {
            groups: self.groups.clone(),
            relationships: self.relationships.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("metamodel serializes")
    }
}
