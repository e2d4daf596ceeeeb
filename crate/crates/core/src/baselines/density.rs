use crate::error::Result;
use crate::linalg::{eigh, Truncation};
use crate::mpo::Mpo;
use crate::mps::{Canonical, Mps};
use crate::src::right_block;
use crate::tensor::{contract, DenseTensor};

use super::{timed, MethodReport};

/// Left environments of `<Hψ|Hψ>`: entry `j` covers sites `0..j` and is
/// shaped `(χ_bra, D_bra, D_ket, χ_ket)`.
fn left_environments(h: &Mpo, psi: &Mps) -> Result<Vec<DenseTensor>> {
    let n = psi.n_sites();
    let mut envs = Vec::with_capacity(n);
    let mut env = DenseTensor::from_real(&[1, 1, 1, 1], &[1.0])?;
    for j in 0..n {
        envs.push(env.clone());
        if j + 1 == n {
            break;
        }
        let (w, a) = (h.site(j), psi.site(j));
        let t = contract(&env, a, &[(3, 0)])?;
        let t = contract(&t, w, &[(2, 0), (3, 2)])?;
        let t = contract(&t, &w.clone().conj(), &[(1, 0), (3, 1)])?;
        let t = contract(&t, &a.clone().conj(), &[(0, 0), (3, 1)])?;
        env = t.permute(&[3, 2, 1, 0])?;
    }
    Ok(envs)
}

/// Right-to-left construction of each output site from the leading
/// eigenvectors of the reduced density matrix `ρ = B B^†`.
pub fn density_matrix(h: &Mpo, psi: &Mps, cut: Truncation) -> Result<MethodReport> {
    timed(|| {
        h.check_acts_on(psi)?;
        let n = psi.n_sites();
        let left = left_environments(h, psi)?;
        let mut senv = DenseTensor::from_real(&[1, 1, 1], &[1.0])?;
        let mut sites = Vec::with_capacity(n);
        for j in (1..n).rev() {
            // (Dl, o, χl, χ̄)
            let v = right_block(h.site(j), psi.site(j), &senv)?;
            let (d, chi_r) = (v.shape()[1], v.shape()[3]);
            // (χ', D', D, χ) x (D, o, χ, χ̄) -> (χ', D', o, χ̄)
            let x = contract(&left[j], &v, &[(2, 0), (3, 2)])?;
            // x conj (D', o', χ', χ̄') -> (o, χ̄, o', χ̄')
            let rho = contract(&x, &v.clone().conj(), &[(0, 2), (1, 0)])?;
            let rho = rho.reshape(&[d * chi_r, d * chi_r])?;
            let (values, vectors) = eigh(&rho)?;
            let weights: Vec<f64> = values.iter().map(|&l| l.max(0.0)).collect();
            let k = cut.keep(&weights);
            if k == 0 {
                return Ok((Mps::zero(&psi.phys_dims()), 1, true));
            }
            let q = vectors.slice_axis(1, 0..k)?;
            let eta = q.transpose().reshape(&[k, d, chi_r])?;
            senv = contract(&v, &eta.clone().conj(), &[(1, 1), (3, 2)])?.permute(&[1, 0, 2])?;
            sites.push(eta);
        }
        let v = right_block(h.site(0), psi.site(0), &senv)?;
        let s = v.shape().to_vec();
        sites.push(v.reshape(&[1, s[1], s[3]])?);
        sites.reverse();
        Ok((Mps::with_canonical(sites, Canonical::Right)?, 1, true))
    })
}
