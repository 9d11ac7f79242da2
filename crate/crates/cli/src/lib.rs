//! File formats, run manifests and subcommands behind the `snb` binary.

pub mod commands;
pub mod config;
pub mod evaluation;
pub mod manifest;
pub mod render;
pub mod snb1;

/// Thread count from `SNB_THREADS`: `Some(1)` for 0 (single-threaded,
/// deterministic), `Some(n)` for n, `None` when unset.
pub fn threads_from_env(value: Option<&str>) -> anyhow::Result<Option<usize>> {
    match value {
        None => Ok(None),
        Some(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("SNB_THREADS must be a non-negative integer, got '{v}'"))?;
            Ok(Some(n.max(1)))
        }
    }
}
