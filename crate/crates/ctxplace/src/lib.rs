//! Std side of the placement engine: file formats, the built-in task suite,
//! the propose/judge/correct pipeline, the evaluation harness, the VLM
//! bridge and raster export.

use std::path::Path;

use ctxplace_core::{SceneError, SpecError};

pub mod cli;
pub mod eval;
pub mod format;
pub mod pipeline;
pub mod raster;
pub mod suite;
pub mod vlm;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Format { origin: String, message: String },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("cannot resolve instruction: {0}")]
    Unresolvable(String),
    #[error("render: {0}")]
    Render(String),
    #[error(transparent)]
    Vlm(#[from] vlm::VlmError),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<SceneError> for Error {
    fn from(e: SceneError) -> Self {
        Error::Spec(e.into())
    }
}
