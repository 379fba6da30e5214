use std::fmt::Display;

use reqforge::classification::ClassificationError;
use reqforge::eval::EvalError;
use reqforge::gateway::GatewayError;
use reqforge::pipeline::{FailureKind, PipelineError, Stage};
use reqforge::prompt::PromptError;
use serde_json::json;

/// A command failure, printed to stderr as one JSON object.
#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub stage: Option<Stage>,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Display) -> Self {
        Failure {
            kind: FailureKind::Input,
            stage: None,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    pub fn to_json(&self) -> String {
        let kind = match self.kind {
            FailureKind::Input => "input",
            FailureKind::Backend => "backend",
            FailureKind::Parse => "parse",
        };
        json!({
            "error": {
                "kind": kind,
                "exit_code": self.exit_code(),
                "stage": self.stage,
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            kind: e.kind(),
            stage: e.stage(),
            message: e.to_string(),
        }
    }
}

impl From<ClassificationError> for Failure {
    fn from(e: ClassificationError) -> Self {
        Failure {
            kind: FailureKind::of_classification(&e),
            stage: Some(Stage::Classification),
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Classification(inner) => inner.into(),
            other => Failure::input(other),
        }
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        Failure {
            kind: FailureKind::of_gateway(&e),
            stage: None,
            message: e.to_string(),
        }
    }
}

impl From<PromptError> for Failure {
    fn from(e: PromptError) -> Self {
        Failure::input(e)
    }
}
