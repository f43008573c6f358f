//! Command-line front end: argument definitions, run configuration, run
//! manifests and the subcommand implementations behind the `lsa` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod manifest;

use lsa_core::error::LlmError;

/// A bad flag, file or value. Exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        UsageError(msg.into())
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_EXTERNAL: i32 = 2;

fn is_external(e: &LlmError) -> bool {
    !matches!(e, LlmError::MalformedRequest(_) | LlmError::Mock(_))
}

/// 2 when the failure came from the completion service, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<LlmError>() {
            return if is_external(e) { EXIT_EXTERNAL } else { EXIT_VALIDATION };
        }
        if let Some(lsa_core::Error::Llm(e)) = cause.downcast_ref::<lsa_core::Error>() {
            return if is_external(e) { EXIT_EXTERNAL } else { EXIT_VALIDATION };
        }
    }
    EXIT_VALIDATION
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let auth = anyhow::Error::from(lsa_core::Error::Llm(LlmError::Auth { status: 401 }));
        assert_eq!(exit_code(&auth), EXIT_EXTERNAL);
        let timeout = anyhow::Error::from(LlmError::Timeout { attempts: 3 }).context("video x");
        assert_eq!(exit_code(&timeout), EXIT_EXTERNAL);
        let usage = anyhow::Error::from(UsageError::new("bad"));
        assert_eq!(exit_code(&usage), EXIT_VALIDATION);
        let malformed = anyhow::Error::from(LlmError::MalformedRequest("empty".into()));
        assert_eq!(exit_code(&malformed), EXIT_VALIDATION);
    }
}
