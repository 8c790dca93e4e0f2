// SPDX-License-Identifier: Apache-2.0

//! Generate network device configuration procedures from the difference
//! between two network configuration models.
//!
//! The pipeline is:
//!
//! * [`metamodel`]: which groups, items and relationships a model may use;
//! * [`model`]: AsIs / ToBe models, conformance, deterministic traversal;
//! * [`diff`]: pair group values by id and label item values set / unset;
//! * [`template`]: CSV command templates, one per device model;
//! * [`generator`]: turn labels and a template into an ordered procedure.

pub mod cli;
pub mod diff;
pub mod error;
pub mod generator;
pub mod metamodel;
pub mod model;
pub mod template;

pub use diff::{label_models, pair_groups, Label, LabeledModel, PairingResult};
pub use error::{Error, Result};
pub use generator::{generate_all, generate_for_config, CommandTree, Procedure};
pub use metamodel::{load_metamodel, Metamodel};
pub use model::{load_model, traversal, validate_conformance, GroupValue, Model, Value};
pub use template::{load_template, load_template_dir, Pass, Template};
