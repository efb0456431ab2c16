use thiserror::Error;

use crate::cloudio::CloudError;
use crate::evalmetrics::EvalError;
use crate::grouping::GroupingError;
use crate::preprocess::PreprocessError;
use crate::topview::TopViewError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Any error surfaced by the pipeline, tagged with the stage it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cloud: {0}")]
    Cloud(#[from] CloudError),
    #[error("preprocess: {0}")]
    Preprocess(#[from] PreprocessError),
    #[error("grouping: {0}")]
    Grouping(#[from] GroupingError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("topview: {0}")]
    TopView(#[from] TopViewError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Short name of the pipeline stage that produced this error.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Cloud(_) => "load",
            Error::Preprocess(_) => "preprocess",
            Error::Grouping(_) => "segment",
            Error::Eval(_) => "eval",
            Error::TopView(_) => "topview",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
            Error::Invalid(_) => "input",
        }
    }
}
