// SPDX-License-Identifier: Apache-2.0

//! A slow, direct reimplementation of labeling, traversal and procedure
//! generation, used to cross-check the library on small inputs.

use std::collections::{BTreeMap, BTreeSet};

use confgen::diff::Label;
use confgen::metamodel::{Metamodel, RelationshipKind};
use confgen::model::{GroupValue, Model};
use confgen::template::{CmdType, Pass, SpecItems, Template, TemplateRow};
use confgen::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Dangling,
    ChainCycle,
    Model,
    Selection,
    Other,
}

pub fn failure_of(e: &Error) -> Failure {
    match e {
        Error::DanglingDependency { .. } => Failure::Dangling,
        Error::ChainCycle(_) => Failure::ChainCycle,
        Error::Model(_) => Failure::Model,
        Error::TemplateSelection { .. } => Failure::Selection,
        _ => Failure::Other,
    }
}

pub type Labels = BTreeMap<(String, String), Label>;

/// Labels for every (id, item) of every group value on both sides, `None`
/// included, computed by looking each value up on the other side.
pub fn naive_labels(asis: &Model, tobe: &Model, mm: &Metamodel) -> (Labels, Labels) {
    let side = |own: &Model, other: &Model, changed: Label| {
        let mut out = Labels::new();
        for gv in own.group_values() {
            for item in mm.effective_items(&gv.group).unwrap() {
                let key = (gv.id.clone(), item.name.clone());
                let label = match gv.items.get(&item.name) {
                    None => Label::None,
                    Some(v) => {
                        let theirs = other.group_values().iter().find(|o| o.id == gv.id);
                        match theirs.and_then(|o| o.items.get(&item.name)) {
                            Some(w) if w == v => Label::None,
                            _ => changed,
                        }
                    }
                };
                out.insert(key, label);
            }
        }
        out
    };
    (side(asis, tobe, Label::Unset), side(tobe, asis, Label::Set))
}

fn label_of(labels: &Labels, id: &str, item: &str) -> Label {
    labels
        .get(&(id.to_string(), item.to_string()))
        .copied()
        .unwrap_or(Label::None)
}

fn is_chain_decl(mm: &Metamodel, decl: usize) -> bool {
    let d = &mm.relationships()[decl];
    d.end_a == d.end_b
        && d.kind == RelationshipKind::Association
        && d.mult_a.to_string() == "0..1"
        && d.mult_b.to_string() == "0..1"
}

fn chained_group(mm: &Metamodel, group: &str) -> bool {
    (0..mm.relationships().len())
        .any(|i| is_chain_decl(mm, i) && mm.is_a(group, &mm.relationships()[i].end_a))
}

/// Preorder walk from `config`, recomputed from scratch at every node.
pub fn naive_traversal<'m>(
    config: &str,
    model: &'m Model,
    mm: &Metamodel,
) -> Result<Vec<&'m GroupValue>, Failure> {
    let mut order: Vec<&'m GroupValue> = Vec::new();
    visit(config, model, mm, &mut order)?;
    Ok(order)
}

fn visit<'m>(
    id: &str,
    model: &'m Model,
    mm: &Metamodel,
    order: &mut Vec<&'m GroupValue>,
) -> Result<(), Failure> {
    let gv = model.get(id).ok_or(Failure::Model)?;
    order.push(gv);
    let seen = |x: &str, order: &Vec<&GroupValue>| order.iter().any(|g| g.id == x);
    let followable = |x: &str, order: &Vec<&GroupValue>| {
        let g = &model.get(x).unwrap().group;
        !seen(x, order) && mm.is_config_relevant(g) && !mm.is_a(g, "Config")
    };

    let mut neighbours: BTreeSet<(String, String)> = BTreeSet::new();
    for rv in model.relationship_values() {
        if is_chain_decl(mm, rv.decl) {
            continue;
        }
        let far = if rv.from == id {
            &rv.to
        } else if rv.to == id {
            &rv.from
        } else {
            continue;
        };
        if far != id && followable(far, order) {
            neighbours.insert((model.get(far).unwrap().group.clone(), far.clone()));
        }
    }

    let mut groups: Vec<String> = neighbours.iter().map(|(g, _)| g.clone()).collect();
    groups.dedup();
    let mut children: Vec<String> = Vec::new();
    for g in groups {
        let members: Vec<String> = neighbours
            .iter()
            .filter(|(h, _)| *h == g)
            .map(|(_, i)| i.clone())
            .collect();
        if chained_group(mm, &g) {
            children.extend(chain_sorted(members, model, mm, |x| followable(x, order))?);
        } else {
            children.extend(members);
        }
    }

    for c in children {
        if !seen(&c, order) {
            visit(&c, model, mm, order)?;
        }
    }
    Ok(())
}

fn chain_sorted(
    seed: Vec<String>,
    model: &Model,
    mm: &Metamodel,
    followable: impl Fn(&str) -> bool,
) -> Result<Vec<String>, Failure> {
    let succ = |x: &str| -> Vec<String> {
        let mut v: Vec<String> = model
            .relationship_values()
            .iter()
            .filter(|rv| is_chain_decl(mm, rv.decl))
            .filter(|rv| rv.id_at(confgen::metamodel::End::A) == x)
            .map(|rv| rv.id_at(confgen::metamodel::End::B).to_string())
            .filter(|y| followable(y))
            .collect();
        v.sort();
        v.dedup();
        v
    };
    let mut set: BTreeSet<String> = seed.into_iter().collect();
    loop {
        let before = set.len();
        for x in set.clone() {
            set.extend(succ(&x));
        }
        if set.len() == before {
            break;
        }
    }
    for x in &set {
        if succ(x).len() > 1 {
            return Err(Failure::Model);
        }
    }
    let preds = |x: &str| {
        set.iter()
            .filter(|p| succ(p).iter().any(|s| s == x))
            .count()
    };
    if set.iter().any(|x| preds(x) > 1) {
        return Err(Failure::ChainCycle);
    }
    // position = (id of the chain head, distance from it)
    let mut keyed = Vec::new();
    for x in &set {
        let mut cur = x.clone();
        let mut dist = 0;
        while let Some(p) = set.iter().find(|p| succ(p).contains(&cur)) {
            cur = p.clone();
            dist += 1;
            if dist > set.len() {
                return Err(Failure::ChainCycle);
            }
        }
        keyed.push(((cur, dist), x.clone()));
    }
    keyed.sort();
    Ok(keyed.into_iter().map(|(_, x)| x).collect())
}

fn render(command: &str, gv: &GroupValue) -> Option<String> {
    let mut out = String::new();
    let mut rest = command;
    while let Some(open) = rest.find('<') {
        let Some(close) = rest[open..].find('>') else {
            break;
        };
        let name = &rest[open + 1..open + close];
        let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            out.push_str(&rest[..open + 1]);
            rest = &rest[open + 1..];
            continue;
        }
        out.push_str(&rest[..open]);
        out.push_str(&gv.items.get(name)?.to_string());
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Some(out)
}

fn items_of(row: &TemplateRow, mm: &Metamodel) -> Vec<String> {
    match &row.spec_items {
        SpecItems::Any => mm
            .effective_items(row.spec_item_group.as_deref().unwrap())
            .unwrap()
            .iter()
            .map(|i| i.name.clone())
            .collect(),
        SpecItems::Named(v) => v.clone(),
    }
}

struct Entry<'t> {
    row: &'t TemplateRow,
    text: String,
    pass: Option<Pass>,
    source: Option<String>,
    parent: Option<usize>,
    dead: bool,
}

fn passes(row: &TemplateRow, pass: Pass) -> bool {
    use confgen::template::ProcType::*;
    matches!(
        (row.proc_type, pass),
        (Some(Set), Pass::Set) | (Some(Unset), Pass::Unset) | (Some(SetOrUnset), _)
    )
}

pub struct Input<'a> {
    pub asis: &'a Model,
    pub tobe: &'a Model,
    pub la: &'a Labels,
    pub lt: &'a Labels,
    pub mm: &'a Metamodel,
}

/// Commands for one config under one template.
pub fn naive_procedure(config: &str, t: &Template, x: &Input) -> Result<Vec<String>, Failure> {
    let mut list: Vec<Entry> = Vec::new();
    fn add<'t>(
        list: &mut Vec<Entry<'t>>,
        row: &'t TemplateRow,
        text: String,
        pass: Option<Pass>,
        source: Option<String>,
    ) -> Result<(), Failure> {
        let parent = match row.dep_id {
            None => None,
            Some(d) => Some(
                list.iter()
                    .rposition(|e| e.row.id == d)
                    .ok_or(Failure::Dangling)?,
            ),
        };
        list.push(Entry {
            row,
            text,
            pass,
            source,
            parent,
            dead: false,
        });
        Ok(())
    }

    for row in t.rows.iter().filter(|r| r.cmd_type == CmdType::Header) {
        add(&mut list, row, row.command.clone(), None, None)?;
    }
    for (pass, model, labels, want) in [
        (Pass::Unset, x.asis, x.la, Label::Unset),
        (Pass::Set, x.tobe, x.lt, Label::Set),
    ] {
        if model.get(config).is_none() {
            continue;
        }
        for gv in naive_traversal(config, model, x.mm)? {
            for row in &t.rows {
                if row.cmd_type != CmdType::Template
                    || row.spec_item_group.as_deref() != Some(gv.group.as_str())
                    || !passes(row, pass)
                {
                    continue;
                }
                let Some(text) = render(&row.command, gv) else {
                    continue;
                };
                let labeled = items_of(row, x.mm)
                    .iter()
                    .any(|i| label_of(labels, &gv.id, i) == want);
                let holds = match &row.condition {
                    None => true,
                    Some(c) => {
                        gv.items.get(&c.item).map(|v| v.to_string()) == Some(c.literal.clone())
                    }
                };
                if (labeled && holds) || row.modal {
                    add(&mut list, row, text, Some(pass), Some(gv.id.clone()))?;
                }
            }
        }
    }
    for row in t.rows.iter().filter(|r| r.cmd_type == CmdType::Footer) {
        add(&mut list, row, row.command.clone(), None, None)?;
    }

    loop {
        let mut changed = false;
        for i in 0..list.len() {
            let e = &list[i];
            if e.dead || !e.row.modal || e.row.cmd_type != CmdType::Template {
                continue;
            }
            if list.iter().any(|c| !c.dead && c.parent == Some(i)) {
                continue;
            }
            let labels = if e.pass == Some(Pass::Unset) {
                x.la
            } else {
                x.lt
            };
            let src = e.source.as_deref().unwrap();
            if items_of(e.row, x.mm)
                .iter()
                .all(|it| label_of(labels, src, it) == Label::None)
            {
                list[i].dead = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    if !list
        .iter()
        .any(|e| !e.dead && e.row.cmd_type == CmdType::Template)
    {
        return Ok(Vec::new());
    }

    let before: Vec<&str> = t
        .rows
        .iter()
        .filter(|r| r.cmd_type == CmdType::ModeBefore)
        .map(|r| r.command.as_str())
        .collect();
    let after: Vec<&str> = t
        .rows
        .iter()
        .filter(|r| r.cmd_type == CmdType::ModeAfter)
        .map(|r| r.command.as_str())
        .collect();
    let mut out = Vec::new();
    fn emit(i: usize, list: &[Entry], before: &[&str], after: &[&str], out: &mut Vec<String>) {
        let modal = list[i].row.modal;
        if modal {
            out.extend(before.iter().map(|s| s.to_string()));
        }
        out.push(list[i].text.clone());
        for j in 0..list.len() {
            if !list[j].dead && list[j].parent == Some(i) {
                emit(j, list, before, after, out);
            }
        }
        if modal {
            out.extend(after.iter().map(|s| s.to_string()));
        }
    }
    for i in 0..list.len() {
        if !list[i].dead && list[i].parent.is_none() {
            emit(i, &list, &before, &after, &mut out);
        }
    }
    Ok(out)
}

/// Every config of either model, in id order, with its commands.
pub fn naive_generate_all(
    asis: &Model,
    tobe: &Model,
    mm: &Metamodel,
    templates: &[Template],
) -> Result<Vec<(String, Vec<String>)>, Failure> {
    let (la, lt) = naive_labels(asis, tobe, mm);
    let x = Input {
        asis,
        tobe,
        la: &la,
        lt: &lt,
        mm,
    };
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for m in [asis, tobe] {
        for gv in m.group_values() {
            if mm.is_a(&gv.group, "Config") {
                ids.insert(&gv.id);
            }
        }
    }
    let mut out = Vec::new();
    for id in ids {
        let cfg = tobe.get(id).or_else(|| asis.get(id)).unwrap();
        let dm = cfg
            .items
            .get("deviceModel")
            .ok_or(Failure::Selection)?
            .to_string();
        let hits: Vec<&Template> = templates.iter().filter(|t| t.device_model == dm).collect();
        if hits.len() != 1 {
            return Err(Failure::Selection);
        }
        out.push((id.to_string(), naive_procedure(id, hits[0], &x)?));
    }
    Ok(out)
}
