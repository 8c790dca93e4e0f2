// SPDX-License-Identifier: Apache-2.0

//! Network configuration models (AsIs / ToBe) and their deterministic
//! traversal from a `Config` root.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metamodel::{DataType, End, Metamodel, RelationshipKind};

/// Name of the group that roots one device's configuration.
pub const CONFIG_GROUP: &str = "Config";

/// A non-empty item value. Empty (unused) items are represented by the
/// absence of the item from [`GroupValue::items`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Str(String),
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn data_type(&self) -> DataType {
        match self {
            Value::Str(_) => DataType::String,
            Value::Int(_) => DataType::Int,
            Value::Bool(_) => DataType::Bool,
        }
    }
}

/// Canonical text: bools as `true`/`false`, ints in decimal, strings verbatim.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupValue {
    pub id: String,
    pub group: String,
    pub items: BTreeMap<String, Value>,
}

impl GroupValue {
    pub fn new(id: impl Into<String>, group: impl Into<String>) -> Self {
        GroupValue {
            id: id.into(),
            group: group.into(),
            items: BTreeMap::new(),
        }
    }

    pub fn with(mut self, item: &str, value: impl Into<Value>) -> Self {
        self.items.insert(item.to_string(), value.into());
        self
    }

    /// `None` means the item is empty.
    pub fn value(&self, item: &str) -> Option<&Value> {
        self.items.get(item)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipValue {
    pub from: String,
    pub to: String,
    /// Index into [`Metamodel::relationships`].
    pub decl: usize,
    /// Which declaration end `from` sits at.
    pub from_end: End,
}

impl RelationshipValue {
    pub fn id_at(&self, end: End) -> &str {
        if end == self.from_end {
            &self.from
        } else {
            &self.to
        }
    }

    fn far_end(&self, id: &str) -> Option<&str> {
        if self.from == id {
            Some(&self.to)
        } else if self.to == id {
            Some(&self.from)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    group_values: Vec<GroupValue>,
    index: HashMap<String, usize>,
    relationship_values: Vec<RelationshipValue>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
struct ModelDoc {
    name: String,
    #[serde(default)]
    group_values: Vec<GroupValueDoc>,
    #[serde(default)]
    relationship_values: Vec<RelationshipDoc>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GroupValueDoc {
    id: String,
    group: String,
    #[serde(default)]
    items: BTreeMap<String, serde_json::Value>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RelationshipDoc {
    from: String,
    to: String,
}

pub fn load_model(document: &str, mm: &Metamodel) -> Result<Model> {
    let doc: ModelDoc = serde_json::from_str(document).map_err(|e| Error::parse("model", e))?;
    let mut gvs = Vec::with_capacity(doc.group_values.len());
    for g in doc.group_values {
        let mut gv = GroupValue::new(g.id, g.group);
        for (item, raw) in g.items {
            let v = match raw {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => Value::Str(s),
                serde_json::Value::Bool(b) => Value::Bool(b),
                serde_json::Value::Number(n) => match n.as_i64() {
                    Some(i) => Value::Int(i),
                    None => {
                        return Err(Error::Model(format!(
                            "{}.{item}: {n} is not an integer",
                            gv.id
                        )))
                    }
                },
                other => {
                    return Err(Error::Model(format!(
                        "{}.{item}: unsupported value {other}",
                        gv.id
                    )))
                }
            };
            gv.items.insert(item, v);
        }
        gvs.push(gv);
    }
    let links = doc
        .relationship_values
        .into_iter()
        .map(|r| (r.from, r.to))
        .collect();
    Model::from_parts(doc.name, gvs, links, mm)
}

impl Model {
    /// Builds a model, checking ids, group and item names, value types,
    /// and resolving each link to its relationship declaration.
    /// Multiplicity and ownership are left to [`validate_conformance`].
    pub fn from_parts(
        name: impl Into<String>,
        group_values: Vec<GroupValue>,
        links: Vec<(String, String)>,
        mm: &Metamodel,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(group_values.len());
        for (i, gv) in group_values.iter().enumerate() {
            if index.insert(gv.id.clone(), i).is_some() {
                return Err(Error::Model(format!("duplicate id {:?}", gv.id)));
            }
            if mm.group(&gv.group).is_none() {
                return Err(Error::Model(format!(
                    "{}: unknown group {:?}",
                    gv.id, gv.group
                )));
            }
            for (item, value) in &gv.items {
                let decl = mm.item(&gv.group, item).ok_or_else(|| {
                    Error::Model(format!(
                        "{}: group {} has no item {item:?}",
                        gv.id, gv.group
                    ))
                })?;
                if decl.data_type != value.data_type() {
                    return Err(Error::Model(format!(
                        "{}.{item}: type mismatch, expected {} but got {} {value:?}",
                        gv.id,
                        decl.data_type,
                        value.data_type()
                    )));
                }
            }
        }

        let mut relationship_values = Vec::with_capacity(links.len());
        for (from, to) in links {
            let group_of = |id: &str| {
                index
                    .get(id)
                    .map(|&i| group_values[i].group.as_str())
                    .ok_or_else(|| Error::Model(format!("link {from}->{to}: unknown id {id:?}")))
            };
            let (gf, gt) = (group_of(&from)?, group_of(&to)?);
            let mut matches = Vec::new();
            for (d, r) in mm.relationships().iter().enumerate() {
                if mm.is_a(gf, &r.end_a) && mm.is_a(gt, &r.end_b) {
                    matches.push((d, End::A));
                } else if mm.is_a(gf, &r.end_b) && mm.is_a(gt, &r.end_a) {
                    matches.push((d, End::B));
                }
            }
            let (decl, from_end) = match matches.as_slice() {
                [one] => *one,
                [] => {
                    return Err(Error::Model(format!(
                        "link {from}->{to}: no relationship between {gf} and {gt}"
                    )))
                }
                _ => {
                    return Err(Error::Model(format!(
                        "link {from}->{to}: ambiguous, {} relationships match {gf}-{gt}",
                        matches.len()
                    )))
                }
            };
            relationship_values.push(RelationshipValue {
                from,
                to,
                decl,
                from_end,
            });
        }

        Ok(Model {
            name: name.into(),
            group_values,
            index,
            relationship_values,
        })
    }

    pub fn group_values(&self) -> &[GroupValue] {
        &self.group_values
    }

    pub fn relationship_values(&self) -> &[RelationshipValue] {
        &self.relationship_values
    }

    pub fn get(&self, id: &str) -> Option<&GroupValue> {
        self.index.get(id).map(|&i| &self.group_values[i])
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            name: self.name.clone(),
            group_values: self
                .group_values
                .iter()
                .map(|gv| GroupValueDoc {
                    id: gv.id.clone(),
                    group: gv.group.clone(),
                    items: gv
                        .items
                        .iter()
                        .map(|(k, v)| {
                            let j = match v {
                                Value::Str(s) => serde_json::Value::from(s.as_str()),
                                Value::Int(i) => serde_json::Value::from(*i),
                                Value::Bool(b) => serde_json::Value::from(*b),
                            };
                            (k.clone(), j)
                        })
                        .collect(),
                })
                .collect(),
            relationship_values: self
                .relationship_values
                .iter()
                .map(|r| RelationshipDoc {
                    from: r.from.clone(),
                    to: r.to.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    Multiplicity,
    CompositionOwnership,
    Endpoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub ids: Vec<String>,
    pub decl: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn validate_conformance(model: &Model, mm: &Metamodel) -> Vec<Violation> {
    let mut out = Vec::new();
    let rels = mm.relationships();

    for rv in &model.relationship_values {
        let Some(decl) = rels.get(rv.decl) else {
            out.push(Violation {
                kind: ViolationKind::Endpoint,
                ids: vec![rv.from.clone(), rv.to.clone()],
                decl: None,
                message: format!("link {}->{}: no declaration #{}", rv.from, rv.to, rv.decl),
            });
            continue;
        };
        for end in [End::A, End::B] {
            let id = rv.id_at(end);
            let ok = model
                .get(id)
                .is_some_and(|gv| mm.is_a(&gv.group, decl.group(end)));
            if !ok {
                out.push(Violation {
                    kind: ViolationKind::Endpoint,
                    ids: vec![rv.from.clone(), rv.to.clone()],
                    decl: Some(rv.decl),
                    message: format!(
                        "link {}->{}: {id} is not a {}",
                        rv.from,
                        rv.to,
                        decl.group(end)
                    ),
                });
            }
        }
    }

    for gv in &model.group_values {
        for d in mm
            .effective_relationship_indices(&gv.group)
            .unwrap_or_default()
        {
            let decl = &rels[d];
            for end in [End::A, End::B] {
                if !mm.is_a(&gv.group, decl.group(end)) {
                    continue;
                }
                let partners: Vec<&str> = model
                    .relationship_values
                    .iter()
                    .filter(|rv| rv.decl == d && rv.id_at(end) == gv.id)
                    .map(|rv| rv.id_at(end.other()))
                    .collect();
                let mult = decl.mult(end.other());
                if !mult.admits(partners.len()) {
                    let mut ids = vec![gv.id.clone()];
                    ids.extend(partners.iter().map(|s| s.to_string()));
                    out.push(Violation {
                        kind: ViolationKind::Multiplicity,
                        ids,
                        decl: Some(d),
                        message: format!(
                            "{} has {} {} partner(s) via {}-{}, allowed {mult}",
                            gv.id,
                            partners.len(),
                            decl.group(end.other()),
                            decl.end_a,
                            decl.end_b
                        ),
                    });
                }
            }
        }

        let owners: Vec<&RelationshipValue> = model
            .relationship_values
            .iter()
            .filter(|rv| {
                rels.get(rv.decl).is_some_and(|decl| {
                    decl.kind == RelationshipKind::Composition
                        && decl
                            .composite_end
                            .is_some_and(|c| rv.id_at(c.other()) == gv.id)
                })
            })
            .collect();
        if owners.len() > 1 {
            let mut ids = vec![gv.id.clone()];
            ids.extend(
                owners
                    .iter()
                    .map(|rv| rv.id_at(rels[rv.decl].composite_end.unwrap()).to_string()),
            );
            out.push(Violation {
                kind: ViolationKind::CompositionOwnership,
                ids: ids.clone(),
                decl: Some(owners[0].decl),
                message: format!(
                    "{} is owned by {} composites: {}",
                    gv.id,
                    owners.len(),
                    ids[1..].join(", ")
                ),
            });
        }
    }
    out
}

pub fn config_roots<'m>(model: &'m Model, mm: &Metamodel) -> Vec<&'m GroupValue> {
    let mut roots: Vec<&GroupValue> = model
        .group_values
        .iter()
        .filter(|gv| mm.is_a(&gv.group, CONFIG_GROUP))
        .collect();
    roots.sort_by(|a, b| a.id.cmp(&b.id));
    roots
}

/// Preorder depth-first walk of the configuration reachable from `config`.
///
/// Links to groups that are not config-relevant, and to other `Config`
/// roots, are not followed. Siblings are visited by (group name, id), except
/// that siblings of a chained group are visited in chain order, head first.
pub fn traversal<'m>(
    config: &GroupValue,
    model: &'m Model,
    mm: &Metamodel,
) -> Result<Vec<&'m GroupValue>> {
    let root = *model.index.get(&config.id).ok_or_else(|| {
        Error::Model(format!(
            "config {:?} not in model {}",
            config.id, model.name
        ))
    })?;

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); model.group_values.len()];
    for (r, rv) in model.relationship_values.iter().enumerate() {
        for id in [&rv.from, &rv.to] {
            if let Some(&i) = model.index.get(id.as_str()) {
                adjacency[i].push(r);
            }
        }
    }

    let mut walk = Walk {
        model,
        mm,
        adjacency,
        visited: vec![false; model.group_values.len()],
        order: Vec::new(),
    };
    walk.visit(root)?;
    Ok(walk
        .order
        .into_iter()
        .map(|i| &model.group_values[i])
        .collect())
}

struct Walk<'a> {
    model: &'a Model,
    mm: &'a Metamodel,
    adjacency: Vec<Vec<usize>>,
    visited: Vec<bool>,
    order: Vec<usize>,
}

impl Walk<'_> {
    fn visit(&mut self, node: usize) -> Result<()> {
        self.visited[node] = true;
        self.order.push(node);
        for child in self.children(node)? {
            if !self.visited[child] {
                self.visit(child)?;
            }
        }
        Ok(())
    }

    fn followable(&self, idx: usize) -> bool {
        let g = &self.model.group_values[idx].group;
        !self.visited[idx] && self.mm.is_config_relevant(g) && !self.mm.is_a(g, CONFIG_GROUP)
    }

    fn is_chain_link(&self, rv: &RelationshipValue) -> bool {
        self.mm.relationships()[rv.decl].is_chain()
    }

    fn children(&self, node: usize) -> Result<Vec<usize>> {
        let id = &self.model.group_values[node].id;
        let mut by_group: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for &r in &self.adjacency[node] {
            let rv = &self.model.relationship_values[r];
            if self.is_chain_link(rv) {
                continue;
            }
            let Some(&far) = rv.far_end(id).and_then(|f| self.model.index.get(f)) else {
                continue;
            };
            if far != node && self.followable(far) {
                by_group
                    .entry(&self.model.group_values[far].group)
                    .or_default()
                    .insert(far);
            }
        }

        let mut out = Vec::new();
        for (group, members) in by_group {
            let chained = self
                .mm
                .relationships()
                .iter()
                .any(|d| d.is_chain() && self.mm.is_a(group, &d.end_a));
            if chained {
                out.extend(self.chain_order(members)?);
            } else {
                let mut members: Vec<usize> = members.into_iter().collect();
                members.sort_by(|&a, &b| {
                    self.model.group_values[a]
                        .id
                        .cmp(&self.model.group_values[b].id)
                });
                out.extend(members);
            }
        }
        Ok(out)
    }

    /// Orders one sibling set of chained group values. The set is closed
    /// under chain successors so entries linked only through the chain are
    /// still reached.
    fn chain_order(&self, seed: BTreeSet<usize>) -> Result<Vec<usize>> {
        let gvs = &self.model.group_values;
        let successors = |i: usize| -> Vec<usize> {
            let id = &gvs[i].id;
            let mut next: Vec<usize> = self.adjacency[i]
                .iter()
                .map(|&r| &self.model.relationship_values[r])
                .filter(|rv| self.is_chain_link(rv) && rv.id_at(End::A) == id)
                .filter_map(|rv| self.model.index.get(rv.id_at(End::B)).copied())
                .filter(|&j| self.followable(j))
                .collect();
            next.sort_by(|&a, &b| gvs[a].id.cmp(&gvs[b].id));
            next.dedup();
            next
        };

        let mut members = seed.clone();
        let mut frontier: Vec<usize> = seed.into_iter().collect();
        while let Some(i) = frontier.pop() {
            for j in successors(i) {
                if members.insert(j) {
                    frontier.push(j);
                }
            }
        }

        let mut has_pred = BTreeSet::new();
        let mut next_of = BTreeMap::new();
        for &i in &members {
            let next = successors(i);
            if next.len() > 1 {
                return Err(Error::Model(format!(
                    "chain branches at {}: successors {}",
                    gvs[i].id,
                    next.iter()
                        .map(|&j| gvs[j].id.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
            if let Some(&j) = next.first() {
                has_pred.insert(j);
                next_of.insert(i, j);
            }
        }

        let mut heads: Vec<usize> = members
            .iter()
            .copied()
            .filter(|i| !has_pred.contains(i))
            .collect();
        heads.sort_by(|&a, &b| gvs[a].id.cmp(&gvs[b].id));

        let mut placed = BTreeSet::new();
        let mut out = Vec::with_capacity(members.len());
        for head in heads {
            let mut cur = Some(head);
            while let Some(i) = cur {
                if !placed.insert(i) {
                    return Err(Error::ChainCycle(gvs[i].id.clone()));
                }
                out.push(i);
                cur = next_of.get(&i).copied();
            }
        }
        if let Some(&stray) = members.iter().find(|i| !placed.contains(i)) {
            return Err(Error::ChainCycle(gvs[stray].id.clone()));
        }
        Ok(out)
    }
}
