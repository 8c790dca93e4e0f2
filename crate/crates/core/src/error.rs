// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },

    #[error("metamodel: {0}")]
    Metamodel(String),

    #[error("model: {0}")]
    Model(String),

    #[error("pairing: group value {id} is {asis_group} in AsIs but {tobe_group} in ToBe")]
    GroupMismatch {
        id: String,
        asis_group: String,
        tobe_group: String,
    },

    #[error("access list chain cycle detected involving {0}")]
    ChainCycle(String),

    #[error("template {template}: {message}")]
    Template { template: String, message: String },

    #[error("template selection for {config}: {message}")]
    TemplateSelection { config: String, message: String },

    #[error("generation for {config}: {message}")]
    Generation { config: String, message: String },

    #[error("row {row_id} depends on row {dep_id} which has no prior instance (config {config})")]
    DanglingDependency {
        config: String,
        row_id: u32,
        dep_id: u32,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(what: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            what: what.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn template(template: &str, message: impl Into<String>) -> Self {
        Error::Template {
            template: template.to_string(),
            message: message.into(),
        }
    }
}
