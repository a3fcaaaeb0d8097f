use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
    #[error("duplicate object id `{0}`")]
    DuplicateId(String),
    #[error("duplicate asset id `{0}`")]
    DuplicateAsset(String),
    #[error("object `{id}` is invalid: {reason}")]
    InvalidObject { id: String, reason: String },
    #[error("unknown anchor `{anchor}` on object `{id}`")]
    UnknownAnchor { id: String, anchor: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("spec `{spec}`: {reason}")]
    Malformed { spec: String, reason: String },
}

impl SpecError {
    pub(crate) fn malformed(spec: impl Into<String>, reason: impl Into<String>) -> Self {
        SpecError::Malformed {
            spec: spec.into(),
            reason: reason.into(),
        }
    }
}
