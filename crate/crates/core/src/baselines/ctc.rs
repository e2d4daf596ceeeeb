use crate::error::Result;
use crate::linalg::Truncation;
use crate::mpo::Mpo;
use crate::mps::Mps;
use crate::src::{src_multiply, TruncationPolicy};

use super::{timed, MethodReport};

/// Exact product at bond `Dχ`, then an SVD rounding sweep.
pub fn ctc_basic(h: &Mpo, psi: &Mps, cut: Truncation) -> Result<MethodReport> {
    timed(|| Ok((h.apply_exact(psi)?.truncate(cut)?, 1, true)))
}

/// Exact product at bond `Dχ`, then a randomize-then-orthogonalize
/// compression: a Khatri–Rao sketch contracted left to right, followed by a
/// right-to-left sweep of QR factorizations.
pub fn ctc_randomized(h: &Mpo, psi: &Mps, chi_bar: usize, seed: u64) -> Result<MethodReport> {
    timed(|| {
        let exact = h.apply_exact(psi)?;
        let identity = Mpo::identity(&psi.phys_dims());
        let out = src_multiply(&identity, &exact, &TruncationPolicy::FixedBond { chi_bar }, seed)?;
        Ok((out.mps, 1, true))
    })
}
