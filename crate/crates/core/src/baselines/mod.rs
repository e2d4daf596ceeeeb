//! Reference algorithms for the compressed MPO–MPS product.
//!
//! Every method returns a [`MethodReport`] carrying the output together with
//! wall time and the operation count recorded by [`crate::flops`].

mod ctc;
mod density;
mod fitting;
mod zipup;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flops;
use crate::mpo::Mpo;
use crate::mps::Mps;
use crate::src::{src_multiply, TruncationPolicy};

pub use ctc::{ctc_basic, ctc_randomized};
pub use density::density_matrix;
pub use fitting::{fitting, FittingOptions};
pub use zipup::zip_up;

#[derive(Clone, Debug)]
pub struct MethodReport {
    pub output: Mps,
    pub wall_time: f64,
    pub flops: u64,
    /// Full sweeps performed (fitting only; 1 for one-shot methods).
    pub sweeps: usize,
    /// Fitting: the stopping test was met. SRC: no adaptive warnings.
    /// Always true for the other methods.
    pub converged: bool,
    pub max_bond: usize,
}

/// Summary of a report without the output state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportStats {
    pub wall_time: f64,
    pub flops: u64,
    pub sweeps: usize,
    pub converged: bool,
    pub max_bond: usize,
}

impl MethodReport {
    pub fn stats(&self) -> ReportStats {
        ReportStats {
            wall_time: self.wall_time,
            flops: self.flops,
            sweeps: self.sweeps,
            converged: self.converged,
            max_bond: self.max_bond,
        }
    }
}

/// Runs `f`, timing it and counting its operations on this thread.
pub(crate) fn timed(f: impl FnOnce() -> Result<(Mps, usize, bool)>) -> Result<MethodReport> {
    let start = Instant::now();
    let (result, flops) = flops::measure(f);
    let wall_time = start.elapsed().as_secs_f64();
    let (output, sweeps, converged) = result?;
    let max_bond = output.max_bond();
    Ok(MethodReport {
        output,
        wall_time,
        flops,
        sweeps,
        converged,
        max_bond,
    })
}

/// SRC wrapped in the common report.
pub fn src(h: &Mpo, psi: &Mps, policy: &TruncationPolicy, seed: u64) -> Result<MethodReport> {
    timed(|| {
        let out = src_multiply(h, psi, policy, seed)?;
        let ok = out.warnings.is_empty();
        Ok((out.mps, 1, ok))
    })
}
