//! Matrix product states.
//!
//! Site `j` is a rank-3 tensor indexed `(left bond, physical, right bond)`;
//! the outer boundary bonds are explicit extent-1 axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lq_thin, qr_thin, svd_truncated, Truncation};
use crate::mpo::Mpo;
use crate::tensor::{contract, unfold, DenseTensor};
use crate::C64;

/// Default limit on the number of entries materialized by dense oracles.
pub const DEFAULT_DENSE_CAP: usize = 1 << 20;

/// Densification cap, overridable with the `TN_DENSE_CAP` environment variable.
pub fn dense_cap() -> usize {
    std::env::var("TN_DENSE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_CAP)
}

pub(crate) fn check_cap(dims: impl IntoIterator<Item = usize>) -> Result<()> {
    let entries = dims
        .into_iter()
        .fold(1u128, |acc, d| acc.saturating_mul(d as u128));
    let cap = dense_cap();
    if entries > cap as u128 {
        return Err(Error::DenseCap { entries, cap });
    }
    Ok(())
}

/// Gauge of an MPS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Canonical {
    None,
    /// Sites `0..n-1` are left isometries; the norm sits on the last site.
    Left,
    /// Sites `1..n` are right isometries; the norm sits on the first site.
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    sites: Vec<DenseTensor>,
    canonical: Canonical,
}

impl Mps {
    pub fn new(sites: Vec<DenseTensor>) -> Result<Self> {
        Self::with_canonical(sites, Canonical::None)
    }

    /// Builds an MPS and records the gauge the caller vouches for.
    pub fn with_canonical(sites: Vec<DenseTensor>, canonical: Canonical) -> Result<Self> {
        validate_chain(&sites, 3)?;
        Ok(Self { sites, canonical })
    }

    /// Product state `v_0 ⊗ v_1 ⊗ ...` with all bonds equal to 1.
    pub fn product(vectors: &[Vec<C64>]) -> Result<Self> {
        let sites = vectors
            .iter()
            .map(|v| DenseTensor::new(vec![1, v.len(), 1], v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(sites)
    }

    /// The zero vector with all bonds equal to 1.
    pub fn zero(phys_dims: &[usize]) -> Self {
        let sites = phys_dims.iter().map(|&d| DenseTensor::zeros(&[1, d, 1])).collect();
        Self {
            sites,
            canonical: Canonical::None,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, j: usize) -> &DenseTensor {
        &self.sites[j]
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<DenseTensor> {
        self.sites
    }

    pub fn canonical(&self) -> Canonical {
        self.canonical
    }

    /// All `n + 1` bond extents, boundaries included.
    pub fn bonds(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.sites.iter().map(|s| s.shape()[2]))
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bonds().into_iter().max().unwrap_or(1)
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[1]).collect()
    }

    /// Multiplies the state by `factor`, preserving any canonical gauge.
    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        let j = match self.canonical {
            Canonical::Left => self.sites.len() - 1,
            _ => 0,
        };
        out.sites[j] = out.sites[j].clone().scale(factor);
        out
    }

    /// Contracts the chain into a tensor with one axis per site.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let dims = self.phys_dims();
        check_cap(dims.iter().copied())?;
        let mut acc = self.sites[0].clone();
        for site in &self.sites[1..] {
            let rank = acc.rank();
            acc = contract(&acc, site, &[(rank - 1, 0)])?;
        }
        acc.reshape(&dims)
    }

    /// Exact tensor-train decomposition of a dense tensor by successive SVDs,
    /// dropping only numerically zero singular values. Output is left canonical.
    pub fn from_dense(t: &DenseTensor) -> Result<Self> {
        let dims = t.shape().to_vec();
        if dims.is_empty() {
            return Err(Error::Shape("cannot decompose a scalar".into()));
        }
        let mut sites = Vec::with_capacity(dims.len());
        let mut rest = t.clone().reshape(&[1, t.len()])?;
        let mut left = 1;
        for &d in &dims[..dims.len() - 1] {
            let cols = rest.len() / (left * d);
            let m = rest.reshape(&[left * d, cols])?;
            let svd = svd_truncated(&m, Truncation::MaxRank(usize::MAX))?;
            let k = svd.rank();
            sites.push(svd.u.clone().reshape(&[left, d, k])?);
            rest = svd.s_vh();
            left = k;
        }
        let last = *dims.last().unwrap();
        sites.push(rest.reshape(&[left, last, 1])?);
        Self::with_canonical(sites, Canonical::Left)
    }

    /// `<self|other>`, by a left-to-right environment sweep.
    pub fn inner(&self, other: &Mps) -> Result<C64> {
        check_compatible(self, other)?;
        let mut env = DenseTensor::from_real(&[1, 1], &[1.0])?;
        for (a, b) in self.sites.iter().zip(&other.sites) {
            // (la, lb) x (lb, s, rb) -> (la, s, rb)
            let t = contract(&env, b, &[(1, 0)])?;
            // conj(a)(la, s, ra) x (la, s, rb) -> (ra, rb)
            env = contract(&a.clone().conj(), &t, &[(0, 0), (1, 1)])?;
        }
        Ok(env.data()[0])
    }

    pub fn norm(&self) -> f64 {
        match self.canonical {
            Canonical::Right => self.sites[0].norm(),
            Canonical::Left => self.sites[self.sites.len() - 1].norm(),
            Canonical::None => self.inner(self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0),
        }
    }

    /// Brings the chain into left or right canonical form by sweeping thin QR.
    pub fn canonicalize(&self, direction: Direction) -> Result<Mps> {
        let mut sites = self.sites.clone();
        let n = sites.len();
        match direction {
            Direction::Left => {
                for j in 0..n - 1 {
                    let shape = sites[j].shape().to_vec();
                    let m = sites[j].clone().reshape(&[shape[0] * shape[1], shape[2]])?;
                    let f = qr_thin(&m);
                    let k = f.q.dims2().1;
                    sites[j] = f.q.reshape(&[shape[0], shape[1], k])?;
                    sites[j + 1] = contract(&f.r, &sites[j + 1], &[(1, 0)])?;
                }
                Ok(Mps { sites, canonical: Canonical::Left })
            }
            Direction::Right => {
                for j in (1..n).rev() {
                    let shape = sites[j].shape().to_vec();
                    let m = sites[j].clone().reshape(&[shape[0], shape[1] * shape[2]])?;
                    let (l, q) = lq_thin(&m);
                    let k = q.dims2().0;
                    sites[j] = q.reshape(&[k, shape[1], shape[2]])?;
                    sites[j - 1] = contract(&sites[j - 1], &l, &[(2, 0)])?;
                }
                Ok(Mps { sites, canonical: Canonical::Right })
            }
        }
    }

    /// Largest deviation from the partial-isometry identity over the sites
    /// that `direction` requires to be isometric.
    pub fn isometry_defect(&self, direction: Direction) -> f64 {
        let n = self.sites.len();
        let mut worst: f64 = 0.0;
        for (j, site) in self.sites.iter().enumerate() {
            let s = site.shape();
            let m = match direction {
                Direction::Left if j + 1 < n => unfold(site, &[0, 1], &[2]),
                Direction::Right if j > 0 => unfold(site, &[1, 2], &[0]),
                _ => continue,
            }
            .expect("site unfolding");
            let g = m.adjoint().matmul(&m).expect("gram");
            let k = match direction {
                Direction::Left => s[2],
                Direction::Right => s[0],
            };
            let defect = g.sub(&DenseTensor::identity(k)).expect("same shape").max_abs();
            worst = worst.max(defect);
        }
        worst
    }

    /// SVD rounding. The input is first brought into one canonical form (if
    /// it is not already flagged as such), then swept in the opposite
    /// direction with a truncated SVD at every bond; the output carries the
    /// opposite canonical form. Each bond obeys `cut` relative to the norm of
    /// the state at that bond.
    pub fn truncate(&self, cut: Truncation) -> Result<Mps> {
        let n = self.sites.len();
        if self.canonical == Canonical::Left {
            let mut sites = self.sites.clone();
            for j in (1..n).rev() {
                let shape = sites[j].shape().to_vec();
                let m = sites[j].clone().reshape(&[shape[0], shape[1] * shape[2]])?;
                let svd = svd_truncated(&m, cut)?;
                if svd.rank() == 0 {
                    return Ok(Mps::zero(&self.phys_dims()));
                }
                let k = svd.rank();
                sites[j] = svd.v.adjoint().reshape(&[k, shape[1], shape[2]])?;
                sites[j - 1] = contract(&sites[j - 1], &svd.u_s(), &[(2, 0)])?;
            }
            return Ok(Mps { sites, canonical: Canonical::Right });
        }
        let start = if self.canonical == Canonical::Right {
            self.clone()
        } else {
            self.canonicalize(Direction::Right)?
        };
        let mut sites = start.sites;
        for j in 0..n - 1 {
            let shape = sites[j].shape().to_vec();
            let m = sites[j].clone().reshape(&[shape[0] * shape[1], shape[2]])?;
            let svd = svd_truncated(&m, cut)?;
            if svd.rank() == 0 {
                return Ok(Mps::zero(&self.phys_dims()));
            }
            let k = svd.rank();
            sites[j] = svd.u.clone().reshape(&[shape[0], shape[1], k])?;
            sites[j + 1] = contract(&svd.s_vh(), &sites[j + 1], &[(1, 0)])?;
        }
        Ok(Mps { sites, canonical: Canonical::Left })
    }

    /// `self + factor * other` as an MPS whose bonds are the sums of the
    /// operands' bonds (block-diagonal embedding).
    pub fn add(&self, factor: C64, other: &Mps) -> Result<Mps> {
        check_compatible(self, other)?;
        let n = self.sites.len();
        let mut sites = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = (&self.sites[j], &other.sites[j]);
            let (sa, sb) = (a.shape(), b.shape());
            let left = if j == 0 { 1 } else { sa[0] + sb[0] };
            let right = if j == n - 1 { 1 } else { sa[2] + sb[2] };
            let d = sa[1];
            let b_factor = if j == 0 { factor } else { C64::new(1.0, 0.0) };
            let site = DenseTensor::from_fn(&[left, d, right], |i| {
                let (l, s, r) = (i[0], i[1], i[2]);
                let in_a_left = j == 0 || l < sa[0];
                let in_a_right = j == n - 1 || r < sa[2];
                let in_b_left = j == 0 || l >= sa[0];
                let in_b_right = j == n - 1 || r >= sa[2];
                let mut v = C64::new(0.0, 0.0);
                if in_a_left && in_a_right {
                    v += a.get(&[if j == 0 { 0 } else { l }, s, if j == n - 1 { 0 } else { r }]);
                }
                if in_b_left && in_b_right {
                    let lb = if j == 0 { 0 } else { l - sa[0] };
                    let rb = if j == n - 1 { 0 } else { r - sa[2] };
                    v += b_factor * b.get(&[lb, s, rb]);
                }
                v
            });
            sites.push(site);
        }
        Mps::new(sites)
    }
}

/// Below this, distances from the inner-product formula are dominated by
/// cancellation and are recomputed from an explicit difference.
const CANCELLATION_LIMIT: f64 = 1e-5;

/// `||a - b||`, from the norm of the left-canonicalized difference `a - b`.
/// Accurate to round-off relative to `||a|| + ||b||`, at the cost of QR
/// sweeps over bonds of size `chi_a + chi_b`.
pub fn distance(a: &Mps, b: &Mps) -> Result<f64> {
    let diff = a.add(C64::new(-1.0, 0.0), b)?;
    Ok(diff.canonicalize(Direction::Left)?.norm())
}

/// `||a - b|| / ||b||`. Uses `<a|a> - 2 Re<a|b> + <b|b>` (negative round-off
/// clamped), falling back to [`distance`] when the result is too small for
/// that formula to resolve.
pub fn relative_distance(a: &Mps, b: &Mps) -> Result<f64> {
    let aa = a.inner(a)?.re;
    let bb = b.inner(b)?.re;
    let ab = a.inner(b)?.re;
    let diff = (aa - 2.0 * ab + bb).max(0.0);
    let rel = if bb > 0.0 { (diff / bb).sqrt() } else { diff.sqrt() };
    if rel >= CANCELLATION_LIMIT {
        return Ok(rel);
    }
    let d = distance(a, b)?;
    Ok(if bb > 0.0 { d / bb.sqrt() } else { d })
}

/// `<bra| H |ket>` by an environment sweep; nothing is densified.
pub fn expectation(bra: &Mps, h: &Mpo, ket: &Mps) -> Result<C64> {
    check_compatible(bra, ket)?;
    h.check_acts_on(ket)?;
    let mut env = DenseTensor::from_real(&[1, 1, 1], &[1.0])?;
    for j in 0..ket.n_sites() {
        // env(la, dl, lb) x ket(lb, i, rb) -> (la, dl, i, rb)
        let t = contract(&env, ket.site(j), &[(2, 0)])?;
        // x H(dl, o, i, dr) over (dl, i) -> (la, rb, o, dr)
        let t = contract(&t, h.site(j), &[(1, 0), (2, 2)])?;
        // x conj(bra)(la, o, ra) over (la, o) -> (rb, dr, ra)
        let t = contract(&t, &bra.site(j).clone().conj(), &[(0, 0), (2, 1)])?;
        env = t.permute(&[2, 1, 0])?;
    }
    Ok(env.data()[0])
}

/// `||H |psi>||^2`, computed as `<psi| H^† H |psi>` without forming the product.
pub fn applied_norm_sqr(h: &Mpo, psi: &Mps) -> Result<f64> {
    h.check_acts_on(psi)?;
    let mut env = DenseTensor::from_real(&[1, 1, 1, 1], &[1.0])?;
    for j in 0..psi.n_sites() {
        let (w, a) = (h.site(j), psi.site(j));
        // env(la, ea, eb, lb) x psi(lb, i, rb) -> (la, ea, eb, i, rb)
        let t = contract(&env, a, &[(3, 0)])?;
        // x H(eb, o, i, fb) -> (la, ea, rb, o, fb)
        let t = contract(&t, w, &[(2, 0), (3, 2)])?;
        // x conj H(ea, o, i', fa) over (ea, o) -> (la, rb, fb, i', fa)
        let t = contract(&t, &w.clone().conj(), &[(1, 0), (3, 1)])?;
        // x conj psi(la, i', ra) -> (rb, fb, fa, ra)
        let t = contract(&t, &a.clone().conj(), &[(0, 0), (3, 1)])?;
        env = t.permute(&[3, 2, 1, 0])?;
    }
    Ok(env.data()[0].re.max(0.0))
}

/// Largest exact product (in stored entries) formed to resolve small errors.
const PRODUCT_FALLBACK_CAP: u128 = 1 << 26;

/// `|| H|psi> - eta || / || H|psi> ||` from environment sweeps, without
/// forming the product unless the error is below what the inner-product
/// formula resolves (see [`relative_distance`]) and the product is small
/// enough to store.
pub fn product_relative_error(eta: &Mps, h: &Mpo, psi: &Mps) -> Result<f64> {
    let target = applied_norm_sqr(h, psi)?;
    let cross = expectation(eta, h, psi)?.re;
    let own = eta.inner(eta)?.re;
    let diff = (target - 2.0 * cross + own).max(0.0);
    let rel = if target > 0.0 { (diff / target).sqrt() } else { diff.sqrt() };
    let (hb, pb, dims) = (h.bonds(), psi.bonds(), psi.phys_dims());
    let entries: u128 = (0..dims.len())
        .map(|j| (hb[j] * pb[j]) as u128 * dims[j] as u128 * (hb[j + 1] * pb[j + 1]) as u128)
        .sum();
    if rel >= CANCELLATION_LIMIT || entries > PRODUCT_FALLBACK_CAP {
        return Ok(rel);
    }
    let d = distance(eta, &h.apply_exact(psi)?)?;
    Ok(if target > 0.0 { d / target.sqrt() } else { d })
}

pub(crate) fn check_compatible(a: &Mps, b: &Mps) -> Result<()> {
    if a.phys_dims() != b.phys_dims() {
        return Err(Error::Shape(format!(
            "physical dimensions differ: {:?} vs {:?}",
            a.phys_dims(),
            b.phys_dims()
        )));
    }
    Ok(())
}

/// Checks rank, boundary bonds and bond matching for a chain of site tensors.
pub(crate) fn validate_chain(sites: &[DenseTensor], rank: usize) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::Shape("a chain needs at least one site".into()));
    }
    for (j, s) in sites.iter().enumerate() {
        if s.rank() != rank {
            return Err(Error::Shape(format!(
                "site {j} has rank {}, expected {rank}",
                s.rank()
            )));
        }
    }
    if sites[0].shape()[0] != 1 || sites[sites.len() - 1].shape()[rank - 1] != 1 {
        return Err(Error::Shape("boundary bonds must have extent 1".into()));
    }
    for j in 0..sites.len() - 1 {
        let right = sites[j].shape()[rank - 1];
        let left = sites[j + 1].shape()[0];
        if right != left {
            return Err(Error::Shape(format!(
                "bond {j}: site {j} has right extent {right}, site {} has left extent {left}",
                j + 1
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_mpo, random_mps};

    fn dense_dot(a: &DenseTensor, b: &DenseTensor) -> C64 {
        a.data().iter().zip(b.data()).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn product_state_densifies() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let psi = Mps::product(&[vec![one, zero], vec![zero, one]]).unwrap();
        let dense = psi.to_dense().unwrap();
        assert_eq!(dense.shape(), &[2, 2]);
        assert_eq!(dense.data(), &[zero, one, zero, zero]);
    }

    #[test]
    fn inner_matches_dense() {
        let a = random_mps(6, 2, 3, -0.5, 1).unwrap();
        let b = random_mps(6, 2, 4, -0.5, 2).unwrap();
        let got = a.inner(&b).unwrap();
        let want = dense_dot(&a.to_dense().unwrap(), &b.to_dense().unwrap());
        assert!((got - want).norm() <= 1e-12 * want.norm());
        let self_inner = a.inner(&a).unwrap();
        assert!(self_inner.re >= 0.0 && self_inner.im.abs() <= 1e-12 * self_inner.re);
        assert!((a.norm().powi(2) - a.to_dense().unwrap().norm_sqr()).abs() <= 1e-12 * self_inner.re);
    }

    #[test]
    fn canonical_forms_preserve_state() {
        let psi = random_mps(6, 2, 4, -0.5, 3).unwrap();
        let dense = psi.to_dense().unwrap();
        for dir in [Direction::Left, Direction::Right] {
            let c = psi.canonicalize(dir).unwrap();
            assert!(c.isometry_defect(dir) < 1e-10);
            let diff = c.to_dense().unwrap().sub(&dense).unwrap().norm();
            assert!(diff <= 1e-12 * dense.norm());
            assert!((c.norm() - dense.norm()).abs() <= 1e-12 * dense.norm());
            let again = c.canonicalize(dir).unwrap();
            assert!(again.to_dense().unwrap().sub(&dense).unwrap().norm() <= 1e-12 * dense.norm());
        }
    }

    #[test]
    fn right_canonical_norm_lives_on_first_site() {
        let psi = random_mps(5, 2, 3, 0.0, 4).unwrap().canonicalize(Direction::Right).unwrap();
        let direct = psi.inner(&psi).unwrap().re.sqrt();
        assert!((psi.site(0).norm() - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn truncate_without_cut_is_lossless() {
        let psi = random_mps(6, 2, 4, -0.5, 5).unwrap();
        let out = psi.truncate(Truncation::MaxRank(64)).unwrap();
        assert!(relative_distance(&out, &psi).unwrap() <= 1e-12);
        assert_eq!(out.canonical(), Canonical::Left);
        let back = out.truncate(Truncation::MaxRank(64)).unwrap();
        assert_eq!(back.canonical(), Canonical::Right);
    }

    #[test]
    fn from_dense_round_trip() {
        let psi = random_mps(5, 2, 3, -1.0, 6).unwrap();
        let dense = psi.to_dense().unwrap();
        let rebuilt = Mps::from_dense(&dense).unwrap();
        assert!(rebuilt.to_dense().unwrap().sub(&dense).unwrap().norm() <= 1e-12 * dense.norm());
        assert!(rebuilt.max_bond() <= 3);
    }

    #[test]
    fn add_is_dense_sum() {
        let a = random_mps(4, 2, 2, -0.5, 7).unwrap();
        let b = random_mps(4, 2, 3, -0.5, 8).unwrap();
        let f = C64::new(0.5, -2.0);
        let sum = a.add(f, &b).unwrap();
        let want = a.to_dense().unwrap().axpy(f, &b.to_dense().unwrap()).unwrap();
        assert!(sum.to_dense().unwrap().sub(&want).unwrap().norm() <= 1e-12 * want.norm());
    }

    #[test]
    fn dense_cap_is_enforced() {
        let psi = Mps::zero(&[2; 30]);
        assert!(matches!(psi.to_dense(), Err(Error::DenseCap { .. })));
    }

    #[test]
    fn environment_products_match_dense() {
        let h = random_mpo(5, 2, 3, -0.5, 9).unwrap();
        let psi = random_mps(5, 2, 3, -0.5, 10).unwrap();
        let eta = random_mps(5, 2, 2, -0.5, 11).unwrap();
        let hm = h.to_dense_matrix().unwrap();
        let v = psi.to_dense().unwrap().reshape(&[32, 1]).unwrap();
        let hv = hm.matmul(&v).unwrap();
        let want_norm = hv.norm_sqr();
        assert!((applied_norm_sqr(&h, &psi).unwrap() - want_norm).abs() <= 1e-12 * want_norm);
        let e = eta.to_dense().unwrap().reshape(&[32, 1]).unwrap();
        let want = dense_dot(&e, &hv);
        assert!((expectation(&eta, &h, &psi).unwrap() - want).norm() <= 1e-12 * want.norm());
        let err = product_relative_error(&eta, &h, &psi).unwrap();
        let direct = hv.sub(&e).unwrap().norm() / hv.norm();
        assert!((err - direct).abs() <= 1e-8);
    }

    #[test]
    fn small_distances_are_resolved() {
        let psi = random_mps(6, 2, 3, -0.5, 12).unwrap();
        let mut nudged = psi.clone().into_sites();
        let v = nudged[2].get(&[0, 1, 0]);
        nudged[2].set(&[0, 1, 0], v * (1.0 + 1e-12));
        let nudged = Mps::new(nudged).unwrap();
        let dense = psi.to_dense().unwrap();
        let want = nudged.to_dense().unwrap().sub(&dense).unwrap().norm() / dense.norm();
        let got = relative_distance(&nudged, &psi).unwrap();
        assert!(want > 0.0 && (got - want).abs() <= 1e-3 * want, "{got} vs {want}");
        assert!(relative_distance(&psi, &psi).unwrap() <= 1e-14);
    }

    #[test]
    fn validation_rejects_mismatched_bonds() {
        let sites = vec![DenseTensor::zeros(&[1, 2, 3]), DenseTensor::zeros(&[2, 2, 1])];
        assert!(Mps::new(sites).is_err());
        let sites = vec![DenseTensor::zeros(&[2, 2, 1])];
        assert!(Mps::new(sites).is_err());
    }
}
