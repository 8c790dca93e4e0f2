// SPDX-License-Identifier: Apache-2.0

//! Model difference detection.
//!
//! Group values are paired across AsIs and ToBe by identifier; every
//! non-empty item value then gets a label. A value that disappears or
//! changes is `Unset` on the AsIs side, a value that appears or changes is
//! `Set` on the ToBe side, and empty values are never labeled.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{GroupValue, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Set,
    Unset,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    AsIs,
    ToBe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledModel {
    pub base: Model,
    pub side: Side,
    /// One entry per non-empty item value, keyed by (group value id, item).
    pub labels: BTreeMap<(String, String), Label>,
}

impl LabeledModel {
    pub fn label(&self, id: &str, item: &str) -> Label {
        self.labels
            .get(&(id.to_string(), item.to_string()))
            .copied()
            .unwrap_or(Label::None)
    }

    /// (id, item) pairs carrying `label`.
    pub fn labeled(&self, label: Label) -> BTreeSet<(String, String)> {
        self.labels
            .iter()
            .filter(|(_, &l)| l == label)
            .map(|(k, _)| k.clone())
            .collect()
    }

    pub fn has_changes(&self) -> bool {
        self.labels.values().any(|&l| l != Label::None)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairingResult {
    pub matched: Vec<(String, String)>,
    pub asis_only: Vec<String>,
    pub tobe_only: Vec<String>,
}

pub fn pair_groups(asis: &Model, tobe: &Model) -> Result<PairingResult> {
    let mut out = PairingResult::default();
    for a in asis.group_values() {
        match tobe.get(&a.id) {
            Some(t) if t.group != a.group => {
                return Err(Error::GroupMismatch {
                    id: a.id.clone(),
                    asis_group: a.group.clone(),
                    tobe_group: t.group.clone(),
                })
            }
            Some(t) => out.matched.push((a.id.clone(), t.id.clone())),
            None => out.asis_only.push(a.id.clone()),
        }
    }
    out.tobe_only = tobe
        .group_values()
        .iter()
        .filter(|t| asis.get(&t.id).is_none())
        .map(|t| t.id.clone())
        .collect();
    out.matched.sort();
    out.asis_only.sort();
    out.tobe_only.sort();
    Ok(out)
}

pub fn label_models(asis: &Model, tobe: &Model) -> Result<(LabeledModel, LabeledModel)> {
    pair_groups(asis, tobe)?;
    Ok((
        LabeledModel {
            labels: side_labels(asis, tobe, Label::Unset),
            base: asis.clone(),
            side: Side::AsIs,
        },
        LabeledModel {
            labels: side_labels(tobe, asis, Label::Set),
            base: tobe.clone(),
            side: Side::ToBe,
        },
    ))
}

/// Labels `own` against `other`: an item value absent from, or different
/// in, the paired group value gets `changed`.
fn side_labels(own: &Model, other: &Model, changed: Label) -> BTreeMap<(String, String), Label> {
    let mut labels = BTreeMap::new();
    for gv in own.group_values() {
        let partner: Option<&GroupValue> = other.get(&gv.id);
        for (item, value) in &gv.items {
            let same = partner.and_then(|p| p.value(item)) == Some(value);
            let label = if same { Label::None } else { changed };
            labels.insert((gv.id.clone(), item.clone()), label);
        }
    }
    labels
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DiffReport {
    pub matched: Vec<String>,
    pub asis_only: Vec<String>,
    pub tobe_only: Vec<String>,
    pub labels: ReportLabels,
}

/// id -> item -> label, `none` entries omitted.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ReportLabels {
    pub asis: BTreeMap<String, BTreeMap<String, Label>>,
    pub tobe: BTreeMap<String, BTreeMap<String, Label>>,
}

impl DiffReport {
    pub fn new(pairing: &PairingResult, asis: &LabeledModel, tobe: &LabeledModel) -> Self {
        let collect = |lm: &LabeledModel| {
            let mut out: BTreeMap<String, BTreeMap<String, Label>> = BTreeMap::new();
            for ((id, item), &l) in &lm.labels {
                if l != Label::None {
                    out.entry(id.clone()).or_default().insert(item.clone(), l);
                }
            }
            out
        };
        DiffReport {
            matched: pairing.matched.iter().map(|(a, _)| a.clone()).collect(),
            asis_only: pairing.asis_only.clone(),
            tobe_only: pairing.tobe_only.clone(),
            labels: ReportLabels {
                asis: collect(asis),
                tobe: collect(tobe),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diff report serializes")
    }
}
