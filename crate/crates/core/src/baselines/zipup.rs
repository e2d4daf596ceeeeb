use crate::error::Result;
use crate::linalg::{svd_truncated, Truncation};
use crate::mpo::Mpo;
use crate::mps::{Canonical, Direction, Mps};
use crate::tensor::{contract, DenseTensor};

use super::{timed, MethodReport};

/// Right-canonicalizes the operator, viewed as a state on the doubled
/// physical space.
fn right_canonical_mpo(h: &Mpo) -> Result<Mpo> {
    let as_state = h
        .sites()
        .iter()
        .map(|s| {
            let sh = s.shape();
            s.clone().reshape(&[sh[0], sh[1] * sh[2], sh[3]])
        })
        .collect::<Result<Vec<_>>>()?;
    let canon = Mps::new(as_state)?.canonicalize(Direction::Right)?;
    let sites = canon
        .into_sites()
        .into_iter()
        .zip(h.phys_dims())
        .map(|(s, d)| {
            let sh = s.shape().to_vec();
            s.reshape(&[sh[0], d, d, sh[2]])
        })
        .collect::<Result<Vec<_>>>()?;
    Mpo::new(sites)
}

/// One left-to-right pass: merge the next operator and state sites into the
/// carried remainder, split off a truncated left isometry, carry the rest.
/// Both inputs are first right-canonicalized so that each local truncation
/// sees an orthonormal right side.
pub fn zip_up(h: &Mpo, psi: &Mps, cut: Truncation) -> Result<MethodReport> {
    timed(|| {
        h.check_acts_on(psi)?;
        let h = right_canonical_mpo(h)?;
        let psi = psi.canonicalize(Direction::Right)?;
        let n = psi.n_sites();
        let mut carry = DenseTensor::from_real(&[1, 1, 1], &[1.0])?;
        let mut sites = Vec::with_capacity(n);
        for j in 0..n {
            // (a, Dl, χl) x (χl, i, χr) -> (a, Dl, i, χr)
            let t = contract(&carry, psi.site(j), &[(2, 0)])?;
            // x (Dl, o, i, Dr) -> (a, χr, o, Dr)
            let t = contract(&t, h.site(j), &[(1, 0), (2, 2)])?;
            let t = t.permute(&[0, 2, 3, 1])?;
            let s = t.shape().to_vec();
            if j + 1 == n {
                sites.push(t.reshape(&[s[0], s[1], 1])?);
                break;
            }
            let m = t.reshape(&[s[0] * s[1], s[2] * s[3]])?;
            let svd = svd_truncated(&m, cut)?;
            if svd.rank() == 0 {
                return Ok((Mps::zero(&psi.phys_dims()), 1, true));
            }
            let k = svd.rank();
            sites.push(svd.u.clone().reshape(&[s[0], s[1], k])?);
            carry = svd.s_vh().reshape(&[k, s[2], s[3]])?;
        }
        Ok((Mps::with_canonical(sites, Canonical::Left)?, 1, true))
    })
}
