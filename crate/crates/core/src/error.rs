use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FfError>;

#[derive(Debug, Error)]
pub enum FfError {
    #[error("format error: {0}")]
    Format(String),
    #[error("image set has no labels")]
    MissingLabels,
    #[error("color conversion error: {0}")]
    Color(String),
    #[error("dimension error: {0}")]
    Dim(String),
    #[error("linear system is singular")]
    Singular,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    /// An error annotated with the pipeline step that raised it.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<FfError>,
    },
}

impl FfError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        FfError::Dim(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        FfError::Format(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        FfError::Config(msg.into())
    }

    pub fn at(self, stage: impl Into<String>) -> Self {
        FfError::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
