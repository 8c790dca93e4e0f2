// SPDX-License-Identifier: Apache-2.0

//! Procedure generation.
//!
//! For each `Config` the generator keeps a list of command instances (in
//! insertion order) and a dependency tree over them:
//!
//! 1. start empty;
//! 2. add header rows;
//! 3. walk AsIs from the config and add `unset`-pass instances;
//! 4. walk ToBe and add `set`-pass instances;
//! 5. add footer rows;
//! 6. drop modal instances that carry no change and have no children, then
//!    attach mode-before / mode-after wrappers to the surviving modals;
//! 7. emit the tree in preorder.
//!
//! An instance whose row has a `depId` is parented under the most recent
//! earlier instance of that row.

use std::collections::{BTreeSet, HashMap};

use crate::diff::{label_models, Label, LabeledModel};
use crate::error::{Error, Result};
use crate::metamodel::Metamodel;
use crate::model::{config_roots, traversal, GroupValue, Model};
use crate::template::{
    eval_condition, expand_spec_items, select_template, CmdType, Pass, Template, TemplateRow,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandInstance {
    pub seq: usize,
    pub text: String,
    pub row_id: Option<u32>,
    pub kind: CmdType,
    pub modal: bool,
    pub pass: Option<Pass>,
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    instance: CommandInstance,
    parent: Option<usize>,
    children: Vec<usize>,
    alive: bool,
    before: Vec<String>,
    after: Vec<String>,
}

/// Command list and dependency tree in one: nodes are stored in list
/// order, so a node's index is its `seq`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTree {
    pub config_id: String,
    nodes: Vec<Node>,
    latest: HashMap<u32, usize>,
}

impl CommandTree {
    pub fn new(config_id: impl Into<String>) -> Self {
        CommandTree {
            config_id: config_id.into(),
            nodes: Vec::new(),
            latest: HashMap::new(),
        }
    }

    /// Appends an instance of `row`, parented under the latest instance of
    /// its dependency.
    pub fn push(
        &mut self,
        row: &TemplateRow,
        text: String,
        pass: Option<Pass>,
        source: Option<&str>,
    ) -> Result<usize> {
        let parent = match row.dep_id {
            None => None,
            Some(dep) => Some(
                *self
                    .latest
                    .get(&dep)
                    .ok_or_else(|| Error::DanglingDependency {
                        config: self.config_id.clone(),
                        row_id: row.id,
                        dep_id: dep,
                    })?,
            ),
        };
        let seq = self.nodes.len();
        self.nodes.push(Node {
            instance: CommandInstance {
                seq,
                text,
                row_id: Some(row.id),
                kind: row.cmd_type,
                modal: row.modal,
                pass,
                source: source.map(str::to_string),
            },
            parent,
            children: Vec::new(),
            alive: true,
            before: Vec::new(),
            after: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(seq);
        }
        self.latest.insert(row.id, seq);
        Ok(seq)
    }

    /// Every instance ever added, in list order, including pruned ones.
    pub fn instances(&self) -> impl Iterator<Item = &CommandInstance> {
        self.nodes.iter().map(|n| &n.instance)
    }

    /// Instances still in the tree, in list order.
    pub fn live(&self) -> impl Iterator<Item = &CommandInstance> {
        self.nodes.iter().filter(|n| n.alive).map(|n| &n.instance)
    }

    pub fn parent_of(&self, seq: usize) -> Option<usize> {
        self.nodes.get(seq).and_then(|n| n.parent)
    }

    pub fn children_of(&self, seq: usize) -> Vec<usize> {
        self.nodes
            .get(seq)
            .map(|n| {
                n.children
                    .iter()
                    .copied()
                    .filter(|&c| self.nodes[c].alive)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn roots(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.alive && n.parent.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_alive(&self, seq: usize) -> bool {
        self.nodes.get(seq).is_some_and(|n| n.alive)
    }

    fn remove(&mut self, seq: usize) {
        self.nodes[seq].alive = false;
    }

    pub fn is_empty(&self) -> bool {
        !self.nodes.iter().any(|n| n.alive)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Procedure {
    pub config_id: String,
    pub device_name: String,
    pub commands: Vec<String>,
    pub tree: CommandTree,
}

impl Procedure {
    /// One command per line, LF terminated.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.commands {
            s.push_str(c);
            s.push('\n');
        }
        s
    }
}

fn pass_label(pass: Pass) -> Label {
    match pass {
        Pass::Unset => Label::Unset,
        Pass::Set => Label::Set,
    }
}

/// Adds an instance of a template row for one group value when the row
/// fires: either a spec item carries the pass label, every placeholder is
/// non-empty and the condition holds; or the row is modal and every
/// placeholder is non-empty (kept speculatively, pruned later if unused).
pub fn apply_row(
    row: &TemplateRow,
    gv: &GroupValue,
    labels: &LabeledModel,
    pass: Pass,
    mm: &Metamodel,
    tree: &mut CommandTree,
) -> Result<Option<usize>> {
    debug_assert!(row.applies(pass));
    let Some(text) = row.render(gv) else {
        return Ok(None);
    };
    let wanted = pass_label(pass);
    let labeled = expand_spec_items(row, mm)?
        .iter()
        .any(|item| labels.label(&gv.id, item) == wanted);
    let fires = (labeled && eval_condition(row.condition.as_ref(), gv, mm)?) || row.modal;
    if !fires {
        return Ok(None);
    }
    tree.push(row, text, Some(pass), Some(&gv.id)).map(Some)
}

fn run_pass(
    config_id: &str,
    labels: &LabeledModel,
    pass: Pass,
    template: &Template,
    mm: &Metamodel,
    tree: &mut CommandTree,
) -> Result<()> {
    let Some(config) = labels.base.get(config_id) else {
        return Ok(());
    };
    for gv in traversal(config, &labels.base, mm)? {
        for row in template.rows_of(CmdType::Template) {
            if row.spec_item_group.as_deref() == Some(gv.group.as_str()) && row.applies(pass) {
                apply_row(row, gv, labels, pass, mm, tree)?;
            }
        }
    }
    Ok(())
}

/// Steps 1 to 5: headers, the unset pass over AsIs, the set pass over ToBe,
/// footers. Nothing is pruned yet.
pub fn instantiate(
    config_id: &str,
    asis: &LabeledModel,
    tobe: &LabeledModel,
    template: &Template,
    mm: &Metamodel,
) -> Result<CommandTree> {
    let mut tree = CommandTree::new(config_id);
    for row in template.rows_of(CmdType::Header) {
        tree.push(row, row.command.clone(), None, None)?;
    }
    run_pass(config_id, asis, Pass::Unset, template, mm, &mut tree)?;
    run_pass(config_id, tobe, Pass::Set, template, mm, &mut tree)?;
    for row in template.rows_of(CmdType::Footer) {
        tree.push(row, row.command.clone(), None, None)?;
    }
    Ok(tree)
}

/// Removes modal instances whose spec items carry no change in their pass
/// and which have no remaining children. Children always come later in the
/// list than their parent, so one backward sweep reaches the fixpoint.
pub fn prune_redundant_modals(
    tree: &mut CommandTree,
    template: &Template,
    asis: &LabeledModel,
    tobe: &LabeledModel,
    mm: &Metamodel,
) -> Result<()> {
    for seq in (0..tree.nodes.len()).rev() {
        let node = &tree.nodes[seq];
        let inst = &node.instance;
        if !node.alive || !inst.modal || inst.kind != CmdType::Template {
            continue;
        }
        if node.children.iter().any(|&c| tree.nodes[c].alive) {
            continue;
        }
        let (Some(row_id), Some(pass), Some(source)) = (inst.row_id, inst.pass, &inst.source)
        else {
            continue;
        };
        let row = template.row(row_id).ok_or_else(|| Error::Generation {
            config: tree.config_id.clone(),
            message: format!("instance of unknown row {row_id}"),
        })?;
        let labels = match pass {
            Pass::Unset => asis,
            Pass::Set => tobe,
        };
        let changed = expand_spec_items(row, mm)?
            .iter()
            .any(|item| labels.label(source, item) != Label::None);
        if !changed {
            tree.remove(seq);
        }
    }
    Ok(())
}

/// Drops header and footer instances when no template instance survived,
/// so an untouched device gets an empty procedure.
fn suppress_bare_frame(tree: &mut CommandTree) {
    if !tree.live().any(|i| i.kind == CmdType::Template) {
        for seq in 0..tree.nodes.len() {
            tree.remove(seq);
        }
    }
}

/// Attaches the template's mode-before rows ahead of, and mode-after rows
/// behind the subtree of, every surviving modal instance.
pub fn inject_mode_wrappers(tree: &mut CommandTree, template: &Template) {
    let before: Vec<String> = template
        .rows_of(CmdType::ModeBefore)
        .map(|r| r.command.clone())
        .collect();
    let after: Vec<String> = template
        .rows_of(CmdType::ModeAfter)
        .map(|r| r.command.clone())
        .collect();
    for node in tree.nodes.iter_mut() {
        if node.alive && node.instance.modal {
            node.before = before.clone();
            node.after = after.clone();
        }
    }
}

/// Preorder over roots and children in list order.
pub fn emit(tree: &CommandTree) -> Vec<String> {
    emit_traced(tree)
        .into_iter()
        .map(|(_, line)| line)
        .collect()
}

/// Like [`emit`], pairing each line with the seq of the instance it came
/// from (`None` for mode wrappers).
pub fn emit_traced(tree: &CommandTree) -> Vec<(Option<usize>, String)> {
    fn walk(tree: &CommandTree, seq: usize, out: &mut Vec<(Option<usize>, String)>) {
        let node = &tree.nodes[seq];
        out.extend(node.before.iter().map(|b| (None, b.clone())));
        out.push((Some(seq), node.instance.text.clone()));
        for c in tree.children_of(seq) {
            walk(tree, c, out);
        }
        out.extend(node.after.iter().map(|a| (None, a.clone())));
    }
    let mut out = Vec::new();
    for r in tree.roots() {
        walk(tree, r, &mut out);
    }
    out
}

pub fn generate_for_config(
    config_id: &str,
    asis: &LabeledModel,
    tobe: &LabeledModel,
    template: &Template,
    mm: &Metamodel,
) -> Result<Procedure> {
    let mut tree = instantiate(config_id, asis, tobe, template, mm)?;
    prune_redundant_modals(&mut tree, template, asis, tobe, mm)?;
    suppress_bare_frame(&mut tree);
    inject_mode_wrappers(&mut tree, template);
    Ok(Procedure {
        config_id: config_id.to_string(),
        device_name: device_name(config_id, &tobe.base, &asis.base, mm),
        commands: emit(&tree),
        tree,
    })
}

const HOSTNAME_GROUP: &str = "Hostname";

/// ToBe hostname, else AsIs hostname, else the config id.
pub fn device_name(config_id: &str, tobe: &Model, asis: &Model, mm: &Metamodel) -> String {
    for model in [tobe, asis] {
        let name = model
            .relationship_values()
            .iter()
            .filter_map(|rv| match (rv.from.as_str(), rv.to.as_str()) {
                (f, t) if f == config_id => Some(t),
                (f, t) if t == config_id => Some(f),
                _ => None,
            })
            .filter_map(|id| model.get(id))
            .filter(|gv| mm.is_a(&gv.group, HOSTNAME_GROUP))
            .filter_map(|gv| gv.value("name"))
            .map(|v| v.to_string())
            .min();
        if let Some(n) = name {
            return n;
        }
    }
    config_id.to_string()
}

/// One procedure per `Config` id found in either model, in id order.
pub fn generate_all(
    asis: &Model,
    tobe: &Model,
    mm: &Metamodel,
    templates: &[Template],
) -> Result<Vec<Procedure>> {
    let (la, lt) = label_models(asis, tobe)?;
    let ids: BTreeSet<&str> = config_roots(asis, mm)
        .into_iter()
        .chain(config_roots(tobe, mm))
        .map(|gv| gv.id.as_str())
        .collect();
    let mut checked = BTreeSet::new();
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let config = tobe
            .get(id)
            .or_else(|| asis.get(id))
            .expect("id came from a model");
        let template = select_template(config, templates)?;
        if checked.insert(template.device_model.as_str()) {
            template.check_against(mm)?;
        }
        out.push(generate_for_config(id, &la, &lt, template, mm)?);
    }
    Ok(out)
}
