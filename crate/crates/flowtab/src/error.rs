use serde::Serialize;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] flowtab_core::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Input(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Json(_) => "InvalidJson",
            CliError::Io(_) => "Io",
            CliError::Input(_) => "InvalidInput",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_resource_limit() => EXIT_RESOURCE,
            _ => EXIT_INPUT,
        }
    }

    pub fn to_json(&self) -> String {
        error_json(self.code(), &self.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: &'a str,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

/// `{"error":{"code":…,"message":…}}`
pub fn error_json(code: &str, message: &str) -> String {
    serde_json::to_string(&ErrorReport {
        error: ErrorBody { code, message },
    })
    .expect("strings serialize")
}
