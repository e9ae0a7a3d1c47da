use std::fmt;

use pqm_core::PqmError;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_PARSE: u8 = 4;
pub const EXIT_CONFIG: u8 = 5;
pub const EXIT_METRIC: u8 = 6;

/// Errors raised by the command layer itself.
#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent arguments clap cannot check on its own.
    Usage(String),
    /// A value was well formed but not acceptable.
    Config(String),
    /// Every benchmark cell failed.
    Metric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Metric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    CliError::Usage(msg.into()).into()
}

pub fn config(msg: impl Into<String>) -> anyhow::Error {
    CliError::Config(msg.into()).into()
}

fn pqm_code(e: &PqmError) -> u8 {
    match e {
        PqmError::Io { .. } => EXIT_IO,
        PqmError::Parse { .. } | PqmError::EmptyCloud(_) => EXIT_PARSE,
        PqmError::InvalidInput(_)
        | PqmError::InvalidConfig { .. }
        | PqmError::Config(_)
        | PqmError::EmptyResult(_) => EXIT_CONFIG,
        PqmError::Degenerate(_)
        | PqmError::UndefinedMetric { .. }
        | PqmError::Bijectivity { .. }
        | PqmError::InstanceTooLarge { .. }
        | PqmError::RegionTasks { .. } => EXIT_METRIC,
    }
}

/// Exit status for an error, from the first classifiable cause.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<PqmError>() {
            return pqm_code(e);
        }
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Config(_) => EXIT_CONFIG,
                CliError::Metric(_) => EXIT_METRIC,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
        if cause.is::<toml::de::Error>() {
            return EXIT_CONFIG;
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn codes_follow_the_cause_chain() {
        let e: anyhow::Error = PqmError::EmptyCloud("reference".into()).into();
        assert_eq!(exit_code(&e), EXIT_PARSE);
        let e = Err::<(), _>(PqmError::Bijectivity { left: 1, right: 2 })
            .context("while computing baselines")
            .unwrap_err();
        assert_eq!(exit_code(&e), EXIT_METRIC);
        assert_eq!(exit_code(&usage("x")), EXIT_USAGE);
        assert_eq!(exit_code(&config("x")), EXIT_CONFIG);
        let io: anyhow::Error = std::io::Error::other("disk").into();
        assert_eq!(exit_code(&io), EXIT_IO);
    }
}
