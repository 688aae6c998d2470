//! Thread-count plumbing. The effective count is echoed into every
//! report; the trajectory bytes must not depend on it.

use crate::outcome::{CmdError, CmdResult};

#[cfg(feature = "parallel")]
pub fn apply(flag: Option<usize>, from_config: Option<usize>) -> CmdResult<usize> {
    if let Some(n) = flag.or(from_config) {
        if n == 0 {
            return Err(CmdError::config("threads must be at least 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("thread pool already initialized, keeping it: {e}");
        }
    }
    Ok(rayon::current_num_threads())
}

#[cfg(not(feature = "parallel"))]
pub fn apply(flag: Option<usize>, from_config: Option<usize>) -> CmdResult<usize> {
    if let Some(n) = flag.or(from_config) {
        if n == 0 {
            return Err(CmdError::config("threads must be at least 1"));
        }
        if n != 1 {
            log::warn!("built without the parallel feature; running on one thread");
        }
    }
    Ok(1)
}
