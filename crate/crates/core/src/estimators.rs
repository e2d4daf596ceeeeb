//! Stochastic diagnostics for randomized range finding.
//!
//! For a sketch `Y = A Ω = Q R` with `p` columns, `G = R^{-†}` has columns
//! `g_i` and the leave-one-out estimate of the root-mean-square error is
//! `(1/p Σ ||g_i||^{-2})^{1/2}`. The norm estimate is `||R||_F / sqrt(p)`.
//! [`HouseholderQr`] lets the adaptive loop append sketch columns without
//! refactoring from scratch, and [`g_append`] extends `G` in step.

use crate::error::{Error, Result};
use crate::flops;
use crate::linalg::{invert_upper, ThinQr};
use crate::tensor::DenseTensor;
use crate::C64;

/// Diagonal entries of `R` below this fraction of the largest are singular.
pub const SINGULAR_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LooEstimate {
    pub err_hat: f64,
    pub norm_hat: f64,
    pub p: usize,
    /// `R` was numerically singular: the sketch already spans the range and
    /// `err_hat` is reported as 0.
    pub rank_deficient: bool,
}

fn max_diag(r: &DenseTensor) -> f64 {
    let (m, n) = r.dims2();
    (0..m.min(n)).map(|i| r.get(&[i, i]).norm()).fold(0.0, f64::max)
}

fn is_singular(r: &DenseTensor, scale: f64) -> bool {
    let (m, n) = r.dims2();
    m != n || scale == 0.0 || (0..n).any(|i| r.get(&[i, i]).norm() < SINGULAR_FLOOR * scale)
}

/// Leave-one-out error estimate from a square upper-triangular `r`.
/// Returns `(err_hat, rank_deficient)`.
pub fn loo_error(r: &DenseTensor) -> Result<(f64, bool)> {
    if is_singular(r, max_diag(r)) {
        return Ok((0.0, true));
    }
    let g = invert_upper(r)?.adjoint();
    Ok((loo_from_g(&g), false))
}

/// Leave-one-out error estimate from `G = R^{-†}` directly.
pub fn loo_from_g(g: &DenseTensor) -> f64 {
    let (rows, p) = g.dims2();
    let sum: f64 = (0..p)
        .map(|c| {
            let norm_sqr: f64 = (0..rows).map(|r| g.get(&[r, c]).norm_sqr()).sum();
            1.0 / norm_sqr
        })
        .sum();
    (sum / p as f64).sqrt()
}

/// `||m||_F / sqrt(p)` for `m` either the sketch `Y` or its triangular factor.
pub fn norm_estimate(m: &DenseTensor, p: usize) -> f64 {
    m.norm() / (p.max(1) as f64).sqrt()
}

pub fn estimate(r: &DenseTensor) -> Result<LooEstimate> {
    let (err_hat, rank_deficient) = loo_error(r)?;
    let p = r.dims2().1;
    Ok(LooEstimate {
        err_hat,
        norm_hat: norm_estimate(r, p),
        p,
        rank_deficient,
    })
}

/// Extends `G = R^{-†}` after `R` grows to `[[R, R'], [0, R'']]`:
/// `G' = [[G, 0], [-(R'')^{-†} (R')^† G, (R'')^{-†}]]`.
///
/// Returns `None` when `R''` has a diagonal entry below the singularity floor
/// relative to the largest diagonal entry of the assembled factor.
pub fn g_append(g: &DenseTensor, r_prime: &DenseTensor, r_dprime: &DenseTensor) -> Result<Option<DenseTensor>> {
    let (p, _) = g.dims2();
    let (rp_rows, delta) = r_prime.dims2();
    if rp_rows != p || r_dprime.dims2() != (delta, delta) {
        return Err(Error::Shape(format!(
            "g is {p}x{p}, r' is {rp_rows}x{delta}, r'' is {:?}",
            r_dprime.dims2()
        )));
    }
    // The diagonal of G is 1 / conj(diag R).
    let old_scale = (0..p)
        .map(|i| 1.0 / g.get(&[i, i]).norm())
        .fold(0.0, f64::max);
    if is_singular(r_dprime, old_scale.max(max_diag(r_dprime))) {
        return Ok(None);
    }
    let h = invert_upper(r_dprime)?.adjoint();
    let lower = h.matmul(&r_prime.adjoint())?.matmul(g)?.scale(C64::new(-1.0, 0.0));
    let top = g.concat(&DenseTensor::zeros(&[p, delta]), 1)?;
    let bottom = lower.concat(&h, 1)?;
    Ok(Some(top.concat(&bottom, 0)?))
}

/// Householder QR that keeps its reflectors so columns can be appended.
///
/// The exposed factors follow the same gauge as [`crate::linalg::qr_thin`]:
/// the diagonal of `R` is real and nonnegative.
#[derive(Clone, Debug)]
pub struct HouseholderQr {
    rows: usize,
    /// Reflector `i` acts on rows `i..`: `H_i = I - tau_i v_i v_i^†` with `v_i[0] = 1`.
    reflectors: Vec<(Vec<C64>, C64)>,
    /// `±1` per reflector, folded into the exposed factors.
    signs: Vec<f64>,
    /// Upper-trapezoidal factor, `reflectors.len() x cols`, before sign folding.
    r: DenseTensor,
    cols: usize,
}

/// LAPACK-style reflector: returns `(v, tau, beta)` with
/// `(I - tau v v^†)^† x = beta e_1` and `beta` real.
fn reflector(x: &[C64]) -> (Vec<C64>, C64, f64) {
    let alpha = x[0];
    let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut v = vec![C64::new(0.0, 0.0); x.len()];
    v[0] = C64::new(1.0, 0.0);
    if tail == 0.0 && alpha.im == 0.0 {
        return (v, C64::new(0.0, 0.0), alpha.re);
    }
    let norm = (alpha.norm_sqr() + tail).sqrt();
    let beta = if alpha.re >= 0.0 { -norm } else { norm };
    let tau = (C64::new(beta, 0.0) - alpha) / beta;
    let scale = (alpha - beta).inv();
    for (vi, xi) in v[1..].iter_mut().zip(&x[1..]) {
        *vi = xi * scale;
    }
    (v, tau, beta)
}

/// Applies `(I - t v v^†)` to rows `offset..` of every column of `a` (row-major).
fn apply_reflector(a: &mut DenseTensor, offset: usize, v: &[C64], t: C64) {
    let (_, n) = a.dims2();
    flops::record((2 * v.len() * n) as u64);
    for c in 0..n {
        let dot: C64 = v
            .iter()
            .enumerate()
            .map(|(k, vk)| vk.conj() * a.get(&[offset + k, c]))
            .sum();
        let f = t * dot;
        if f == C64::new(0.0, 0.0) {
            continue;
        }
        for (k, vk) in v.iter().enumerate() {
            let val = a.get(&[offset + k, c]) - f * vk;
            a.set(&[offset + k, c], val);
        }
    }
}

impl HouseholderQr {
    /// Empty factorization of a matrix with `rows` rows and no columns.
    pub fn empty(rows: usize) -> Self {
        Self {
            rows,
            reflectors: Vec::new(),
            signs: Vec::new(),
            r: DenseTensor::zeros(&[1, 1]),
            cols: 0,
        }
    }

    pub fn new(m: &DenseTensor) -> Result<Self> {
        let mut qr = Self::empty(m.dims2().0);
        qr.append(m)?;
        Ok(qr)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of orthonormal columns in `Q`.
    pub fn rank(&self) -> usize {
        self.reflectors.len()
    }

    /// Appends columns. Returns the new blocks `(R', R'')`: `R'` couples the
    /// old basis to the new columns, `R''` is the triangular factor of their
    /// component orthogonal to the old basis (`None` once the basis already
    /// spans all `rows` dimensions).
    pub fn append(&mut self, new_cols: &DenseTensor) -> Result<(DenseTensor, Option<DenseTensor>)> {
        let (m, delta) = new_cols.dims2();
        if m != self.rows {
            return Err(Error::AxisMismatch {
                axis_a: 0,
                extent_a: self.rows,
                axis_b: 0,
                extent_b: m,
            });
        }
        let k = self.reflectors.len();
        let mut w = new_cols.clone();
        for (i, (v, tau)) in self.reflectors.iter().enumerate() {
            apply_reflector(&mut w, i, v, tau.conj());
        }
        let fresh = (m - k).min(delta);
        flops::qr(m - k, delta);
        for j in 0..fresh {
            let row = k + j;
            let x: Vec<C64> = (row..m).map(|r| w.get(&[r, j])).collect();
            let (v, tau, beta) = reflector(&x);
            // Remaining columns of the block see this reflector too.
            if j + 1 < delta {
                let mut rest = w.slice_axis(1, j + 1..delta)?;
                apply_reflector(&mut rest, row, &v, tau.conj());
                for r in row..m {
                    for c in j + 1..delta {
                        w.set(&[r, c], rest.get(&[r, c - j - 1]));
                    }
                }
            }
            w.set(&[row, j], C64::new(beta, 0.0));
            for r in row + 1..m {
                w.set(&[r, j], C64::new(0.0, 0.0));
            }
            self.reflectors.push((v, tau));
            self.signs.push(if beta < 0.0 { -1.0 } else { 1.0 });
        }
        let new_k = self.reflectors.len();
        let total = self.cols + delta;
        let mut r = DenseTensor::zeros(&[new_k, total]);
        for i in 0..k {
            for c in 0..self.cols {
                r.set(&[i, c], self.r.get(&[i, c]));
            }
        }
        for i in 0..new_k {
            for c in 0..delta {
                r.set(&[i, self.cols + c], w.get(&[i, c]));
            }
        }
        self.r = r;
        self.cols = total;
        let exposed = self.r_factor();
        let r_prime = if k == 0 {
            DenseTensor::zeros(&[1, delta])
        } else {
            exposed.slice_axis(0, 0..k)?.slice_axis(1, total - delta..total)?
        };
        let r_dprime = if new_k > k {
            Some(exposed.slice_axis(0, k..new_k)?.slice_axis(1, total - delta..total)?)
        } else {
            None
        };
        Ok((r_prime, r_dprime))
    }

    /// `R` with a real nonnegative diagonal, `rank() x cols()`.
    pub fn r_factor(&self) -> DenseTensor {
        let (k, n) = (self.reflectors.len(), self.cols);
        DenseTensor::from_fn(&[k, n], |i| self.r.get(i) * self.signs[i[0]])
    }

    /// The `rows() x rank()` orthonormal factor.
    pub fn q_factor(&self) -> DenseTensor {
        let k = self.reflectors.len();
        let mut e = DenseTensor::from_fn(&[self.rows, k], |i| {
            if i[0] == i[1] {
                C64::new(self.signs[i[1]], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        for (i, (v, tau)) in self.reflectors.iter().enumerate().rev() {
            apply_reflector(&mut e, i, v, *tau);
        }
        e
    }

    pub fn to_thin_qr(&self) -> ThinQr {
        ThinQr {
            q: self.q_factor(),
            r: self.r_factor(),
        }
    }
}

/// Factorization of `[Y Y']` from a factorization of `Y`.
pub fn qr_append(qr: &HouseholderQr, new_cols: &DenseTensor) -> Result<HouseholderQr> {
    let mut out = qr.clone();
    out.append(new_cols)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qr_thin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseTensor::from_fn(shape, |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn identity_r_gives_unit_estimate() {
        let (err, deficient) = loo_error(&DenseTensor::identity(4)).unwrap();
        assert!(!deficient);
        assert!((err - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_r_is_flagged() {
        let mut r = DenseTensor::identity(3);
        r.set(&[2, 2], C64::new(1e-15, 0.0));
        assert_eq!(loo_error(&r).unwrap(), (0.0, true));
    }

    #[test]
    fn norm_estimate_of_zero() {
        assert_eq!(norm_estimate(&DenseTensor::zeros(&[3, 2]), 2), 0.0);
    }

    #[test]
    fn householder_matches_reference_qr() {
        let m = random(&[7, 4], 1);
        let h = HouseholderQr::new(&m).unwrap();
        let reference = qr_thin(&m);
        let (q, r) = (h.q_factor(), h.r_factor());
        assert!(q.sub(&reference.q).unwrap().max_abs() < 1e-12);
        assert!(r.sub(&reference.r).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn append_reconstructs_concatenation() {
        let y = random(&[12, 3], 2);
        let extra = random(&[12, 2], 3);
        let grown = qr_append(&HouseholderQr::new(&y).unwrap(), &extra).unwrap();
        let full = y.concat(&extra, 1).unwrap();
        let ThinQr { q, r } = grown.to_thin_qr();
        assert!(q.matmul(&r).unwrap().sub(&full).unwrap().norm() <= 1e-12 * full.norm());
        let gram = q.adjoint().matmul(&q).unwrap();
        assert!(gram.sub(&DenseTensor::identity(5)).unwrap().max_abs() < 1e-12);
        assert!((r.norm() - full.norm()).abs() <= 1e-12 * full.norm());
    }

    #[test]
    fn append_to_empty_is_plain_qr() {
        let m = random(&[6, 3], 4);
        let mut h = HouseholderQr::empty(6);
        h.append(&m).unwrap();
        assert!(h.r_factor().sub(&qr_thin(&m).r).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn column_in_span_gives_tiny_r_dprime() {
        let y = random(&[8, 3], 5);
        let mut h = HouseholderQr::new(&y).unwrap();
        let col = y.matmul(&random(&[3, 1], 6)).unwrap();
        let (_, rdd) = h.append(&col).unwrap();
        assert!(rdd.unwrap().get(&[0, 0]).norm() <= 1e-10 * col.norm());
    }

    #[test]
    fn g_append_matches_direct_inverse() {
        let y = random(&[10, 4], 7);
        let extra = random(&[10, 2], 8);
        let mut h = HouseholderQr::new(&y).unwrap();
        let g = invert_upper(&h.r_factor()).unwrap().adjoint();
        let (rp, rdd) = h.append(&extra).unwrap();
        let g2 = g_append(&g, &rp, &rdd.unwrap()).unwrap().unwrap();
        let direct = invert_upper(&h.r_factor()).unwrap().adjoint();
        assert!(g2.sub(&direct).unwrap().max_abs() < 1e-11 * direct.max_abs());
        assert_eq!(g2.slice_axis(0, 0..4).unwrap().slice_axis(1, 0..4).unwrap(), g);
        let (a, _) = loo_error(&h.r_factor()).unwrap();
        assert!((loo_from_g(&g2) - a).abs() <= 1e-10 * a);
    }

    #[test]
    fn g_append_block_diagonal_case() {
        let g = DenseTensor::identity(2);
        let out = g_append(&g, &DenseTensor::zeros(&[2, 2]), &DenseTensor::identity(2))
            .unwrap()
            .unwrap();
        assert_eq!(out, DenseTensor::identity(4));
    }
}
