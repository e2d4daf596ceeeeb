//! Matrix product operators.
//!
//! Site `j` is a rank-4 tensor indexed `(left bond, out, in, right bond)`.

use crate::error::{Error, Result};
use crate::mps::{check_cap, validate_chain, Canonical, Mps};
use crate::tensor::{contract, DenseTensor};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    sites: Vec<DenseTensor>,
}

impl Mpo {
    pub fn new(sites: Vec<DenseTensor>) -> Result<Self> {
        validate_chain(&sites, 4)?;
        for (j, s) in sites.iter().enumerate() {
            if s.shape()[1] != s.shape()[2] {
                return Err(Error::Shape(format!(
                    "site {j} maps dimension {} to {}; local operators must be square",
                    s.shape()[2],
                    s.shape()[1]
                )));
            }
        }
        Ok(Self { sites })
    }

    /// Identity operator with operator bonds equal to 1.
    pub fn identity(phys_dims: &[usize]) -> Self {
        let sites = phys_dims
            .iter()
            .map(|&d| DenseTensor::identity(d).reshape(&[1, d, d, 1]).expect("identity site"))
            .collect();
        Self { sites }
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

    /// All `n + 1` operator bond extents, boundaries included.
    pub fn bonds(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.sites.iter().map(|s| s.shape()[3]))
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bonds().into_iter().max().unwrap_or(1)
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[1]).collect()
    }

    /// Errors unless this operator maps the physical spaces of `psi` to themselves.
    pub fn check_acts_on(&self, psi: &Mps) -> Result<()> {
        if self.phys_dims() != psi.phys_dims() {
            return Err(Error::Shape(format!(
                "operator acts on dimensions {:?}, state has {:?}",
                self.phys_dims(),
                psi.phys_dims()
            )));
        }
        Ok(())
    }

    /// Multiplies the operator by `factor` (absorbed into the first site).
    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.sites[0] = out.sites[0].clone().scale(factor);
        out
    }

    /// The operator as a `d^n x d^n` matrix, rows indexed by the output
    /// multi-index in row-major order.
    pub fn to_dense_matrix(&self) -> Result<DenseTensor> {
        let dims = self.phys_dims();
        check_cap(dims.iter().chain(dims.iter()).copied())?;
        let d0 = dims[0];
        let bond = self.sites[0].shape()[3];
        // acc(out, in, bond)
        let mut acc = self.sites[0].clone().reshape(&[d0, d0, bond])?;
        let (mut rows, mut cols) = (d0, d0);
        for site in &self.sites[1..] {
            let s = site.shape().to_vec();
            // (O, I, D) x (D, o, i, D') -> (O, I, o, i, D')
            let t = contract(&acc, site, &[(2, 0)])?;
            let t = t.permute(&[0, 2, 1, 3, 4])?;
            rows *= s[1];
            cols *= s[2];
            acc = t.reshape(&[rows, cols, s[3]])?;
        }
        acc.reshape(&[rows, cols])
    }

    /// Exact product `H|psi>` as an MPS whose bond at every cut is the product
    /// of the operator and state bonds.
    pub fn apply_exact(&self, psi: &Mps) -> Result<Mps> {
        self.check_acts_on(psi)?;
        let sites = self
            .sites
            .iter()
            .zip(psi.sites())
            .map(|(w, a)| apply_site(w, a))
            .collect::<Result<Vec<_>>>()?;
        Mps::with_canonical(sites, Canonical::None)
    }

    /// `H^†`, obtained by swapping the physical legs and conjugating.
    pub fn adjoint(&self) -> Self {
        let sites = self
            .sites
            .iter()
            .map(|s| s.permute(&[0, 2, 1, 3]).expect("rank-4 site").conj())
            .collect();
        Self { sites }
    }
}

/// One site of the exact product: `(Dl, o, i, Dr) x (cl, i, cr) -> (Dl*cl, o, Dr*cr)`
/// with the operator bond as the slow index of each fused pair.
pub(crate) fn apply_site(w: &DenseTensor, a: &DenseTensor) -> Result<DenseTensor> {
    let (ws, as_) = (w.shape(), a.shape());
    // -> (Dl, o, Dr, cl, cr)
    let t = contract(w, a, &[(2, 1)])?;
    let t = t.permute(&[0, 3, 1, 2, 4])?;
    t.reshape(&[ws[0] * as_[0], ws[1], ws[3] * as_[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_mpo, random_mps};

    fn dense_product(h: &Mpo, psi: &Mps) -> DenseTensor {
        let n: usize = psi.phys_dims().iter().product();
        let v = psi.to_dense().unwrap().reshape(&[n, 1]).unwrap();
        h.to_dense_matrix().unwrap().matmul(&v).unwrap()
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let psi = random_mps(5, 2, 3, -0.5, 1).unwrap();
        let out = Mpo::identity(&psi.phys_dims()).apply_exact(&psi).unwrap();
        assert_eq!(out.bonds(), psi.bonds());
        assert_eq!(out.to_dense().unwrap(), psi.to_dense().unwrap());
    }

    #[test]
    fn apply_exact_matches_dense_matvec() {
        let h = random_mpo(6, 2, 2, -0.5, 2).unwrap();
        let psi = random_mps(6, 2, 3, -0.5, 3).unwrap();
        let out = h.apply_exact(&psi).unwrap();
        let want = dense_product(&h, &psi);
        let got = out.to_dense().unwrap().reshape(&[64, 1]).unwrap();
        assert!(got.sub(&want).unwrap().norm() <= 1e-12 * want.norm());
        let expect: Vec<usize> = h.bonds().iter().zip(psi.bonds()).map(|(a, b)| a * b).collect();
        assert_eq!(out.bonds(), expect);
        assert!((out.norm() - want.norm()).abs() <= 1e-12 * want.norm());
    }

    #[test]
    fn adjoint_is_dense_adjoint() {
        let h = random_mpo(3, 2, 2, -1.0, 4).unwrap().scaled(C64::new(0.0, 1.0));
        let want = h.to_dense_matrix().unwrap().adjoint();
        assert_eq!(h.adjoint().to_dense_matrix().unwrap(), want);
    }

    #[test]
    fn rejects_non_square_sites() {
        let sites = vec![DenseTensor::zeros(&[1, 2, 3, 1])];
        assert!(Mpo::new(sites).is_err());
    }
}
