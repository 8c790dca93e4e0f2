// SPDX-License-Identifier: Apache-2.0

//! Device configuration command templates.
//!
//! A template is a CSV table, one row per command, with the columns
//!
//! ```text
//! commandType,specItemGroup,specItem,procType,id,command,modal,depId,condition
//! ```
//!
//! Rows keep file order; the generator walks them top-down for every group
//! value it reaches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metamodel::Metamodel;
use crate::model::GroupValue;

pub const CSV_HEADER: &str =
    "commandType,specItemGroup,specItem,procType,id,command,modal,depId,condition";

/// Item whose value in a `Config` group value names the template to use.
pub const DEVICE_MODEL_ITEM: &str = "deviceModel";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmdType {
    Template,
    Header,
    Footer,
    ModeBefore,
    ModeAfter,
}

impl CmdType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "template" => CmdType::Template,
            "header" => CmdType::Header,
            "footer" => CmdType::Footer,
            "mode-before" => CmdType::ModeBefore,
            "mode-after" => CmdType::ModeAfter,
            _ => return None,
        })
    }
}

impl fmt::Display for CmdType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmdType::Template => "template",
            CmdType::Header => "header",
            CmdType::Footer => "footer",
            CmdType::ModeBefore => "mode-before",
            CmdType::ModeAfter => "mode-after",
        })
    }
}

/// Generation pass. The unset pass walks AsIs, the set pass walks ToBe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pass {
    Unset,
    Set,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcType {
    Set,
    Unset,
    SetOrUnset,
}

impl ProcType {
    pub fn applies(self, pass: Pass) -> bool {
        matches!(
            (self, pass),
            (ProcType::SetOrUnset, _) | (ProcType::Set, Pass::Set) | (ProcType::Unset, Pass::Unset)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecItems {
    Any,
    Named(Vec<String>),
}

/// `<item> == literal`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub item: String,
    pub literal: String,
}

impl Condition {
    pub fn parse(s: &str) -> Option<Condition> {
        let (lhs, rhs) = s.split_once("==")?;
        let item = lhs.trim().strip_prefix('<')?.strip_suffix('>')?;
        let literal = rhs.trim();
        if !is_ident(item) || literal.is_empty() || literal.contains("==") {
            return None;
        }
        Some(Condition {
            item: item.to_string(),
            literal: literal.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Item(String),
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_command(cmd: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut text = String::new();
    let mut rest = cmd;
    while let Some(open) = rest.find('<') {
        let after = &rest[open + 1..];
        match after.find('>') {
            Some(close) if is_ident(&after[..close]) => {
                text.push_str(&rest[..open]);
                if !text.is_empty() {
                    out.push(Segment::Text(std::mem::take(&mut text)));
                }
                out.push(Segment::Item(after[..close].to_string()));
                rest = &after[close + 1..];
            }
            _ => {
                text.push_str(&rest[..=open]);
                rest = after;
            }
        }
    }
    text.push_str(rest);
    if !text.is_empty() {
        out.push(Segment::Text(text));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRow {
    pub cmd_type: CmdType,
    pub spec_item_group: Option<String>,
    pub spec_items: SpecItems,
    pub proc_type: Option<ProcType>,
    pub id: u32,
    pub command: String,
    pub modal: bool,
    pub dep_id: Option<u32>,
    pub condition: Option<Condition>,
    segments: Vec<Segment>,
}

impl TemplateRow {
    /// Item names referenced by `<item>` placeholders, in order of first use.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Item(i) if seen.insert(i.as_str()) => Some(i.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn applies(&self, pass: Pass) -> bool {
        self.cmd_type == CmdType::Template && self.proc_type.is_some_and(|p| p.applies(pass))
    }

    /// Substitutes every placeholder with the group value's item value.
    /// `None` when any referenced item is empty.
    pub fn render(&self, gv: &GroupValue) -> Option<String> {
        let mut out = String::with_capacity(self.command.len() + 16);
        for seg in &self.segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Item(i) => out.push_str(&gv.value(i)?.to_string()),
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub device_model: String,
    pub rows: Vec<TemplateRow>,
}

impl Template {
    pub fn row(&self, id: u32) -> Option<&TemplateRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    pub fn rows_of(&self, cmd_type: CmdType) -> impl Iterator<Item = &TemplateRow> {
        self.rows.iter().filter(move |r| r.cmd_type == cmd_type)
    }

    /// Checks group, item, placeholder and condition names against the
    /// metamodel.
    pub fn check_against(&self, mm: &Metamodel) -> Result<()> {
        for row in self.rows_of(CmdType::Template) {
            let group = row.spec_item_group.as_deref().unwrap_or_default();
            if mm.group(group).is_none() {
                return Err(Error::template(
                    &self.device_model,
                    format!("row {}: unknown specItemGroup {group:?}", row.id),
                ));
            }
            expand_spec_items(row, mm)
                .map_err(|e| Error::template(&self.device_model, e.to_string()))?;
            let cond_item = row.condition.as_ref().map(|c| c.item.as_str());
            for item in row.placeholders().into_iter().chain(cond_item) {
                if mm.item(group, item).is_none() {
                    return Err(Error::template(
                        &self.device_model,
                        format!("row {}: group {group} has no item {item:?}", row.id),
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn load_template(name: &str, csv_text: &str) -> Result<Template> {
    let err = |msg: String| Error::template(name, msg);

    let first = csv_text.lines().next().unwrap_or_default();
    if first.trim_end_matches('\r') != CSV_HEADER {
        return Err(err(format!(
            "header must be exactly {CSV_HEADER:?}, found {first:?}"
        )));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(csv_text.as_bytes());
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| Error::parse(format!("template {name}"), e))?;
        rows.push(parse_row(&rec).map_err(|m| err(format!("line {line}: {m}")))?);
    }

    let mut ids = BTreeMap::new();
    for row in &rows {
        if ids.insert(row.id, row.dep_id).is_some() {
            return Err(err(format!("duplicate id {}", row.id)));
        }
    }
    for row in &rows {
        if let Some(dep) = row.dep_id {
            if !ids.contains_key(&dep) {
                return Err(err(format!("row {} depends on missing id {dep}", row.id)));
            }
        }
        let mut seen = BTreeSet::from([row.id]);
        let mut cur = row.dep_id;
        while let Some(d) = cur {
            if !seen.insert(d) {
                return Err(err(format!("depId cycle through row {}", row.id)));
            }
            cur = ids[&d];
        }
    }

    Ok(Template {
        device_model: name.to_string(),
        rows,
    })
}

fn parse_row(rec: &csv::StringRecord) -> std::result::Result<TemplateRow, String> {
    let field = |i: usize| rec.get(i).unwrap_or_default().trim();
    let cmd_type =
        CmdType::parse(field(0)).ok_or_else(|| format!("unknown commandType {:?}", field(0)))?;
    let id: u32 = field(4)
        .parse()
        .ok()
        .filter(|&i| i > 0)
        .ok_or_else(|| format!("id must be a positive integer, got {:?}", field(4)))?;
    let command = rec.get(5).unwrap_or_default().to_string();
    let segments = parse_command(&command);
    let modal = match field(6) {
        "" => false,
        "TRUE" => true,
        other => {
            return Err(format!(
                "row {id}: modal must be TRUE or blank, got {other:?}"
            ))
        }
    };
    let dep_id = match field(7) {
        "" => None,
        s => Some(
            s.parse::<u32>()
                .map_err(|_| format!("row {id}: bad depId {s:?}"))?,
        ),
    };
    let condition = match field(8) {
        "" => None,
        s => Some(
            Condition::parse(s).ok_or_else(|| format!("row {id}: malformed condition {s:?}"))?,
        ),
    };

    if cmd_type != CmdType::Template {
        let template_only = [
            (!field(1).is_empty(), "specItemGroup"),
            (!field(2).is_empty(), "specItem"),
            (!field(3).is_empty(), "procType"),
            (modal, "modal"),
            (condition.is_some(), "condition"),
            (
                segments.iter().any(|s| matches!(s, Segment::Item(_))),
                "placeholders",
            ),
        ];
        if let Some((_, what)) = template_only.iter().find(|(set, _)| *set) {
            return Err(format!("row {id}: {cmd_type} row must not carry {what}"));
        }
        return Ok(TemplateRow {
            cmd_type,
            spec_item_group: None,
            spec_items: SpecItems::Named(Vec::new()),
            proc_type: None,
            id,
            command,
            modal,
            dep_id,
            condition,
            segments,
        });
    }

    let group = field(1);
    if group.is_empty() {
        return Err(format!("row {id}: template row needs a specItemGroup"));
    }
    let spec_items = match field(2) {
        "*" => SpecItems::Any,
        "" => SpecItems::Named(Vec::new()),
        s => SpecItems::Named(s.split('/').map(|i| i.trim().to_string()).collect()),
    };
    if let SpecItems::Named(names) = &spec_items {
        if names.iter().any(|n| !is_ident(n)) {
            return Err(format!("row {id}: bad specItem {:?}", field(2)));
        }
    }
    let proc_type = match field(3) {
        "set" => ProcType::Set,
        "unset" => ProcType::Unset,
        "set/unset" => ProcType::SetOrUnset,
        other => return Err(format!("row {id}: bad procType {other:?}")),
    };
    Ok(TemplateRow {
        cmd_type,
        spec_item_group: Some(group.to_string()),
        spec_items,
        proc_type: Some(proc_type),
        id,
        command,
        modal,
        dep_id,
        condition,
        segments,
    })
}

/// Loads every `*.csv` in `dir`; the file stem is the device model name.
pub fn load_template_dir(dir: &Path) -> Result<Vec<Template>> {
    let io = |source| Error::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.display().to_string(),
                source,
            })?;
            let stem = p.file_stem().unwrap_or_default().to_string_lossy();
            load_template(&stem, &text)
        })
        .collect()
}

pub fn select_template<'t>(config: &GroupValue, library: &'t [Template]) -> Result<&'t Template> {
    let err = |message: String| Error::TemplateSelection {
        config: config.id.clone(),
        message,
    };
    let model = config
        .value(DEVICE_MODEL_ITEM)
        .ok_or_else(|| err(format!("{DEVICE_MODEL_ITEM} is empty")))?
        .to_string();
    let mut hits = library.iter().filter(|t| t.device_model == model);
    match (hits.next(), hits.next()) {
        (Some(t), None) => Ok(t),
        (None, _) => Err(err(format!("no template named {model:?}"))),
        (Some(_), Some(_)) => Err(err(format!("more than one template named {model:?}"))),
    }
}

pub fn expand_spec_items(row: &TemplateRow, mm: &Metamodel) -> Result<Vec<String>> {
    let group = row.spec_item_group.as_deref().ok_or_else(|| {
        Error::Metamodel(format!(
            "row {} is a {} row without a group",
            row.id, row.cmd_type
        ))
    })?;
    let items = mm.effective_items(group)?;
    match &row.spec_items {
        SpecItems::Any => Ok(items.iter().map(|i| i.name.clone()).collect()),
        SpecItems::Named(names) => {
            for n in names {
                if !items.iter().any(|i| &i.name == n) {
                    return Err(Error::Metamodel(format!(
                        "row {}: group {group} has no item {n:?}",
                        row.id
                    )));
                }
            }
            Ok(names.clone())
        }
    }
}

pub fn eval_condition(cond: Option<&Condition>, gv: &GroupValue, mm: &Metamodel) -> Result<bool> {
    let Some(cond) = cond else {
        return Ok(true);
    };
    if mm.item(&gv.group, &cond.item).is_none() {
        return Err(Error::Metamodel(format!(
            "condition names {:?}, which group {} does not have",
            cond.item, gv.group
        )));
    }
    Ok(gv
        .value(&cond.item)
        .is_some_and(|v| v.to_string() == cond.literal))
}
