//! Dense factorizations on matrices stored as rank-2 [`DenseTensor`]s.
//!
//! Householder QR, SVD and Hermitian eigendecomposition are delegated to
//! `faer`; this module fixes gauges and truncation rules on top of them.

use faer::Side;

use crate::error::{Error, Result};
use crate::flops;
use crate::tensor::DenseTensor;
use crate::C64;

/// Singular values at or below this fraction of the largest are treated as
/// numerically zero when sizing a truncation.
pub const RANK_EPS: f64 = 1e-14;

/// Thin QR factorization `m = q * r`.
///
/// For an `M x N` input with `k = min(M, N)`, `q` is `M x k` with orthonormal
/// columns and `r` is `k x N` upper trapezoidal with a nonnegative real
/// diagonal.
#[derive(Clone, Debug)]
pub struct ThinQr {
    pub q: DenseTensor,
    pub r: DenseTensor,
}

/// Truncated SVD `m ≈ u * diag(s) * v^†`.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    pub u: DenseTensor,
    pub s: Vec<f64>,
    pub v: DenseTensor,
    /// Sum of the squared singular values that were dropped.
    pub discarded_weight: f64,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `diag(s) * v^†`, the factor usually absorbed into a neighbouring site.
    pub fn s_vh(&self) -> DenseTensor {
        let (n, k) = self.v.dims2();
        DenseTensor::from_fn(&[k, n], |i| self.v.get(&[i[1], i[0]]).conj() * self.s[i[0]])
    }

    /// `u * diag(s)`.
    pub fn u_s(&self) -> DenseTensor {
        let (m, k) = self.u.dims2();
        DenseTensor::from_fn(&[m, k], |i| self.u.get(i) * self.s[i[1]])
    }
}

/// How many singular values (or eigenvalues) to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Keep at most this many values.
    MaxRank(usize),
    /// Keep the fewest values whose discarded weight is at most
    /// `tau^2 * ||m||_F^2`.
    Tolerance(f64),
}

impl Truncation {
    /// Number of leading values to retain from a non-increasing list of
    /// squared magnitudes (squared singular values or clamped eigenvalues).
    pub fn keep(&self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let top = weights.first().copied().unwrap_or(0.0);
        let numerical = weights
            .iter()
            .take_while(|&&w| w > RANK_EPS * RANK_EPS * top && w > 0.0)
            .count();
        match *self {
            Truncation::MaxRank(k) => k.min(numerical).max(1).min(weights.len()),
            Truncation::Tolerance(tau) => {
                if total == 0.0 {
                    return 0;
                }
                let budget = tau * tau * total;
                // Walk from the tail: the smallest prefix whose tail fits the budget.
                let mut tail = 0.0;
                let mut keep = weights.len();
                while keep > 0 && tail + weights[keep - 1] <= budget {
                    tail += weights[keep - 1];
                    keep -= 1;
                }
                keep.min(numerical).max(1)
            }
        }
    }
}

pub fn qr_thin(m: &DenseTensor) -> ThinQr {
    let (rows, cols) = m.dims2();
    flops::qr(rows, cols);
    let qr = m.as_mat().qr();
    let mut q = DenseTensor::from_mat(qr.compute_thin_Q().as_ref());
    let mut r = DenseTensor::from_mat(qr.thin_R());
    normalize_qr_gauge(&mut q, &mut r);
    ThinQr { q, r }
}

/// Rotates each column of `q` (and row of `r`) so that `r`'s diagonal is
/// real and nonnegative.
pub(crate) fn normalize_qr_gauge(q: &mut DenseTensor, r: &mut DenseTensor) {
    let (m, k) = q.dims2();
    let (_, n) = r.dims2();
    for i in 0..k.min(n) {
        let d = r.get(&[i, i]);
        let mag = d.norm();
        if mag == 0.0 {
            continue;
        }
        let phase = d / mag;
        let inv = phase.conj();
        for j in 0..n {
            let v = r.get(&[i, j]) * inv;
            r.set(&[i, j], v);
        }
        r.set(&[i, i], C64::new(mag, 0.0));
        for row in 0..m {
            let v = q.get(&[row, i]) * phase;
            q.set(&[row, i], v);
        }
    }
}

/// Thin LQ factorization `m = l * q` with `q` having orthonormal rows.
pub fn lq_thin(m: &DenseTensor) -> (DenseTensor, DenseTensor) {
    let ThinQr { q, r } = qr_thin(&m.adjoint());
    (r.adjoint(), q.adjoint())
}

pub fn svd_truncated(m: &DenseTensor, cut: Truncation) -> Result<TruncatedSvd> {
    let (rows, cols) = m.dims2();
    flops::svd(rows, cols);
    let svd = m
        .as_mat()
        .thin_svd()
        .map_err(|e| Error::Linalg(format!("svd did not converge: {e:?}")))?;
    let diag = svd.S().column_vector();
    let s_all: Vec<f64> = (0..diag.nrows()).map(|i| diag[i].re.max(0.0)).collect();
    let weights: Vec<f64> = s_all.iter().map(|s| s * s).collect();
    let k = cut.keep(&weights);
    let discarded_weight = weights[k..].iter().sum();
    let u_full = DenseTensor::from_mat(svd.U());
    let v_full = DenseTensor::from_mat(svd.V());
    if k == 0 {
        // Zero matrix under a tolerance: rank 0. Tensors cannot have zero
        // extents, so `u` and `v` are single zero columns.
        return Ok(TruncatedSvd {
            u: DenseTensor::zeros(&[rows, 1]),
            s: Vec::new(),
            v: DenseTensor::zeros(&[cols, 1]),
            discarded_weight,
        });
    }
    Ok(TruncatedSvd {
        u: u_full.slice_axis(1, 0..k)?,
        s: s_all[..k].to_vec(),
        v: v_full.slice_axis(1, 0..k)?,
        discarded_weight,
    })
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues non-increasing.
/// Returns the eigenvalues and a matrix whose columns are the eigenvectors.
pub fn eigh(h: &DenseTensor) -> Result<(Vec<f64>, DenseTensor)> {
    let (n, m) = h.dims2();
    if n != m {
        return Err(Error::Shape(format!("eigh needs a square matrix, got {n}x{m}")));
    }
    flops::eigh(n);
    let evd = h
        .as_mat()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = DenseTensor::from_mat(evd.U());
    let values: Vec<f64> = (0..n).rev().map(|i| s[i].re).collect();
    let vectors = DenseTensor::from_fn(&[n, n], |i| u.get(&[i[0], n - 1 - i[1]]));
    Ok((values, vectors))
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn invert_upper(r: &DenseTensor) -> Result<DenseTensor> {
    let (n, m) = r.dims2();
    if n != m {
        return Err(Error::Shape(format!("expected square triangular factor, got {n}x{m}")));
    }
    flops::record((n * n * n / 3) as u64);
    let mut inv = DenseTensor::zeros(&[n, n]);
    for col in 0..n {
        for row in (0..=col).rev() {
            let rhs = if row == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            let acc: C64 = (row + 1..=col).map(|k| r.get(&[row, k]) * inv.get(&[k, col])).sum();
            let d = r.get(&[row, row]);
            if d.norm() == 0.0 {
                return Err(Error::Linalg("singular triangular factor".into()));
            }
            inv.set(&[row, col], (rhs - acc) / d);
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(&[m, n], |_| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn diag(values: &[f64]) -> DenseTensor {
        let n = values.len();
        DenseTensor::from_fn(&[n, n], |i| {
            C64::new(if i[0] == i[1] { values[i[0]] } else { 0.0 }, 0.0)
        })
    }

    fn gram_defect(q: &DenseTensor) -> f64 {
        let g = q.adjoint().matmul(q).unwrap();
        g.sub(&DenseTensor::identity(g.dims2().0)).unwrap().max_abs()
    }

    #[test]
    fn qr_of_isometry_is_trivial() {
        let base = qr_thin(&random(6, 3, 1)).q;
        let again = qr_thin(&base);
        assert!(again.q.sub(&base).unwrap().max_abs() < 1e-12);
        assert!(again.r.sub(&DenseTensor::identity(3)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn qr_columns_orthonormal() {
        let m = random(4, 2, 2);
        let f = qr_thin(&m);
        assert!(gram_defect(&f.q) < 1e-12);
        assert!(f.q.matmul(&f.r).unwrap().sub(&m).unwrap().norm() <= 1e-12 * m.norm());
        for i in 0..2 {
            let d = f.r.get(&[i, i]);
            assert!(d.re >= 0.0 && d.im == 0.0);
        }
    }

    #[test]
    fn qr_rank_one_has_vanishing_pivot() {
        let u = random(3, 1, 3);
        let v = random(1, 2, 4);
        let f = qr_thin(&u.matmul(&v).unwrap());
        assert!(f.r.get(&[1, 1]).norm() <= 1e-12);
    }

    #[test]
    fn qr_of_wide_matrix_is_trapezoidal() {
        let m = random(2, 5, 5);
        let f = qr_thin(&m);
        assert_eq!(f.q.shape(), &[2, 2]);
        assert_eq!(f.r.shape(), &[2, 5]);
        assert!(f.q.matmul(&f.r).unwrap().sub(&m).unwrap().norm() <= 1e-12 * m.norm());
    }

    #[test]
    fn svd_recovers_rank_one() {
        let m = random(5, 1, 6).matmul(&random(1, 4, 7)).unwrap();
        let svd = svd_truncated(&m, Truncation::MaxRank(3)).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!(svd.discarded_weight <= 1e-24 * m.norm_sqr());
    }

    #[test]
    fn svd_of_diagonal_with_rank_cap() {
        let svd = svd_truncated(&diag(&[3.0, 2.0, 1.0]), Truncation::MaxRank(2)).unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-14 && (svd.s[1] - 2.0).abs() < 1e-14);
        assert!((svd.discarded_weight - 1.0).abs() < 1e-12);
    }

    /// Exhaustive oracle: smallest k with tail weight within the budget.
    fn threshold_oracle(s: &[f64], tau: f64) -> usize {
        let total: f64 = s.iter().map(|x| x * x).sum();
        (0..=s.len())
            .find(|&k| s[k..].iter().map(|x| x * x).sum::<f64>() <= tau * tau * total)
            .unwrap()
    }

    #[test]
    fn svd_tolerance_matches_threshold_scan() {
        let s = [3.0, 2.0, 1.0];
        for tau in [0.0, 0.1, 0.25, 0.3, 0.4, 0.6, 0.8, 0.95, 1.0] {
            let svd = svd_truncated(&diag(&s), Truncation::Tolerance(tau)).unwrap();
            assert_eq!(svd.rank(), threshold_oracle(&s, tau).max(1), "tau = {tau}");
        }
        // tau = 0.4: dropping 1 costs 1 <= 0.16 * 14, dropping 2 as well costs 5 > 2.24.
        let svd = svd_truncated(&diag(&s), Truncation::Tolerance(0.4)).unwrap();
        assert_eq!(svd.rank(), 2);
    }

    #[test]
    fn svd_zero_matrix_with_tolerance_is_empty() {
        let svd = svd_truncated(&DenseTensor::zeros(&[3, 2]), Truncation::Tolerance(1e-8)).unwrap();
        assert_eq!(svd.rank(), 0);
    }

    #[test]
    fn svd_weight_identity() {
        for seed in 0..5 {
            let m = random(7, 5, 10 + seed);
            let svd = svd_truncated(&m, Truncation::MaxRank(3)).unwrap();
            let kept: f64 = svd.s.iter().map(|s| s * s).sum();
            assert!((kept + svd.discarded_weight - m.norm_sqr()).abs() <= 1e-10 * m.norm_sqr());
            let approx = svd.u.matmul(&svd.s_vh()).unwrap();
            let err = m.sub(&approx).unwrap().norm_sqr();
            assert!((err - svd.discarded_weight).abs() <= 1e-10 * m.norm_sqr());
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigh_orders_descending() {
        let a = random(5, 5, 20);
        let h = a.matmul(&a.adjoint()).unwrap();
        let (vals, vecs) = eigh(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let hv = h.matmul(&vecs).unwrap();
        for (j, &val) in vals.iter().enumerate() {
            for i in 0..5 {
                assert!((hv.get(&[i, j]) - vecs.get(&[i, j]) * val).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn triangular_inverse() {
        let r = qr_thin(&random(6, 4, 21)).r;
        let inv = invert_upper(&r).unwrap();
        assert!(r.matmul(&inv).unwrap().sub(&DenseTensor::identity(4)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn lq_rows_orthonormal() {
        let m = random(3, 7, 22);
        let (l, q) = lq_thin(&m);
        assert!(gram_defect(&q.adjoint()) < 1e-12);
        assert!(l.matmul(&q).unwrap().sub(&m).unwrap().norm() < 1e-12 * m.norm());
    }
}
