//! Experiment harness behind the `anyonic` binary: config files, commands and result records.

pub mod commands;
pub mod config;

use anyonic::AnyonError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(e: &AnyonError) -> i32 {
    match e {
        AnyonError::Parse(_) | AnyonError::UnknownCharge(_) | AnyonError::InvalidParameter(_) => EXIT_USAGE,
        AnyonError::InvalidModel(_) | AnyonError::InvalidState(_) | AnyonError::Inconsistent(_) => EXIT_FAILED,
        AnyonError::ZeroProbability(_) | AnyonError::Pole(_) | AnyonError::NonConvergence(_) | AnyonError::Convergence(_) => {
            EXIT_NUMERICAL
        }
    }
}

/// Writes via a sibling temp file and rename so readers never see partial output.
pub fn write_atomic(path: &std::path::Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(std::path::Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
