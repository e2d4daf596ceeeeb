//! Per-thread operation counter.
//!
//! Every contraction adds its exact number of complex multiply-adds; the
//! dense factorizations add their textbook leading-order counts. Algorithms
//! run on the calling thread, so the counter attributes work to whichever
//! method is being measured.

use std::cell::Cell;

thread_local! {
    static COUNTER: Cell<u64> = const { Cell::new(0) };
}

/// Adds `ops` complex multiply-adds to the current thread's counter.
pub fn record(ops: u64) {
    COUNTER.with(|c| c.set(c.get().saturating_add(ops)));
}

/// Current value of the counter.
pub fn count() -> u64 {
    COUNTER.with(Cell::get)
}

pub fn reset() {
    COUNTER.with(|c| c.set(0));
}

/// Runs `f` and returns its output together with the operations it recorded.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = count();
    let out = f();
    (out, count().saturating_sub(before))
}

pub(crate) fn matmul(m: usize, k: usize, n: usize) {
    record((m as u64) * (k as u64) * (n as u64));
}

/// Householder QR of an `m x n` matrix: `2mn^2 - 2n^3/3` with `n <= m`.
pub(crate) fn qr(m: usize, n: usize) {
    let (big, small) = (m.max(n) as u64, m.min(n) as u64);
    record(2 * big * small * small - 2 * small * small * small / 3);
}

/// Golub-Kahan SVD, leading order `4mn^2 + 8n^3`.
pub(crate) fn svd(m: usize, n: usize) {
    let (big, small) = (m.max(n) as u64, m.min(n) as u64);
    record(4 * big * small * small + 8 * small * small * small);
}

pub(crate) fn eigh(n: usize) {
    let n = n as u64;
    record(9 * n * n * n);
}
