use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing {} ({})", file_name(.0), .0.display())]
    MissingFile(PathBuf),

    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {what}: {source}")]
    Json {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("skill at position {0} has an empty id")]
    EmptySkillId(usize),

    #[error("skill `{0}` has an empty payload")]
    EmptyPayload(String),

    #[error("duplicate skill id `{0}`")]
    DuplicateSkill(String),

    #[error("edge {src} -> {dst}: unknown endpoint `{missing}`")]
    UnknownEndpoint {
        src: String,
        dst: String,
        missing: String,
    },

    #[error("edge {src} -> {dst}: unknown edge type `{kind}`")]
    UnknownEdgeType {
        src: String,
        dst: String,
        kind: String,
    },

    #[error("edge {src} -> {dst}: weight {weight} outside (0, 1]")]
    WeightOutOfRange { src: String, dst: String, weight: f64 },

    #[error("edge {0} -> {0}: self-loops are not allowed")]
    SelfLoop(String),

    #[error("unknown skill `{0}`")]
    UnknownSkill(String),

    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("invalid pool: {0}")]
    InvalidPool(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown variant `{0}`")]
    UnknownVariant(String),

    #[error("annotation errors:\n{}", .0.join("\n"))]
    Annotation(Vec<String>),
}

impl Error {
    pub(crate) fn json(what: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            what: what.into(),
            source,
        }
    }
}
