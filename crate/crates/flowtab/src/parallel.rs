//! Worker pool sized by `FLOWTAB_THREADS`.

use crate::error::CliError;

pub const THREADS_ENV: &str = "FLOWTAB_THREADS";

/// Worker count: the available parallelism, capped by `FLOWTAB_THREADS`.
pub fn worker_count() -> Result<usize, CliError> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(available),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n.min(available)),
            _ => Err(CliError::Input(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

pub fn pool() -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| CliError::Input(e.to_string()))
}
