//! File formats, configuration and command implementations behind the
//! `cavity-eig` binary. The numerical work lives in `cavity-eig-core`;
//! this crate owns everything that touches the filesystem.

pub mod commands;
pub mod config;
pub mod io;
pub mod results;

/// Worker cap for parallel sweeps: the `CAVITY_EIG_THREADS` environment
/// variable when set, otherwise the machine's available parallelism.
pub fn worker_cap() -> usize {
    std::env::var("CAVITY_EIG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}
