use crate::error::{Error, Result};
use crate::linalg::{svd_truncated, Truncation};
use crate::mpo::Mpo;
use crate::mps::{applied_norm_sqr, expectation, Canonical, Direction, Mps};
use crate::random::gaussian_mps;
use crate::tensor::{contract, DenseTensor};

use super::{timed, MethodReport};

#[derive(Clone, Debug)]
pub struct FittingOptions {
    pub max_sweeps: usize,
    /// Stop once the change in `||η||` over a sweep is below
    /// `tol * ||Hψ||`.
    pub tol: f64,
    /// Starting state. A Gaussian random state of the target bond is used
    /// when absent.
    pub guess: Option<Mps>,
    /// Seed for the default starting state.
    pub seed: u64,
}

impl Default for FittingOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 10,
            tol: 1e-10,
            guess: None,
            seed: 0,
        }
    }
}

fn unit3() -> DenseTensor {
    DenseTensor::from_real(&[1, 1, 1], &[1.0]).expect("unit environment")
}

/// `(a, D, χ)` environment extended by one site to the right.
fn grow_left(env: &DenseTensor, eta: &DenseTensor, w: &DenseTensor, a: &DenseTensor) -> Result<DenseTensor> {
    let t = contract(env, a, &[(2, 0)])?;
    // (a, D, i, χr) x (D, o, i, Dr) -> (a, χr, o, Dr)
    let t = contract(&t, w, &[(1, 0), (2, 2)])?;
    // conj η (a, o, b) -> (b, χr, Dr)
    contract(&eta.clone().conj(), &t, &[(0, 0), (1, 2)])?.permute(&[0, 2, 1])
}

/// `(b, D, χ)` environment extended by one site to the left.
fn grow_right(env: &DenseTensor, eta: &DenseTensor, w: &DenseTensor, a: &DenseTensor) -> Result<DenseTensor> {
    // (χl, i, χr) x (b, Dr, χr) -> (χl, i, b, Dr)
    let t = contract(a, env, &[(2, 2)])?;
    // (Dl, o, i, Dr) x t -> (Dl, o, χl, b)
    let t = contract(w, &t, &[(2, 1), (3, 3)])?;
    contract(&eta.clone().conj(), &t, &[(1, 1), (2, 3)])
}

/// Projection of `Hψ` onto the two-site window `(j, j+1)`, shaped
/// `(a, o1, o2, b)`.
fn two_site(h: &Mpo, psi: &Mps, left: &DenseTensor, right: &DenseTensor, j: usize) -> Result<DenseTensor> {
    let t = contract(left, psi.site(j), &[(2, 0)])?;
    let t = contract(&t, h.site(j), &[(1, 0), (2, 2)])?;
    // (a, χr, o1, Dr) x (χr, i2, χr2) -> (a, o1, Dr, i2, χr2)
    let t = contract(&t, psi.site(j + 1), &[(1, 0)])?;
    // x (Dr, o2, i2, Dr2) -> (a, o1, χr2, o2, Dr2)
    let t = contract(&t, h.site(j + 1), &[(2, 0), (3, 2)])?;
    contract(&t, right, &[(2, 2), (4, 1)])
}

struct Split {
    left: DenseTensor,
    right: DenseTensor,
    norm: f64,
}

/// Truncated split of a two-site tensor. The singular values go to the
/// right factor when `towards == Right`, otherwise to the left one.
fn split(theta: &DenseTensor, cut: Truncation, towards: Direction) -> Result<Split> {
    let s = theta.shape().to_vec();
    let m = theta.clone().reshape(&[s[0] * s[1], s[2] * s[3]])?;
    let svd = svd_truncated(&m, cut)?;
    let k = svd.rank();
    if k == 0 {
        return Ok(Split {
            left: DenseTensor::zeros(&[s[0], s[1], 1]),
            right: DenseTensor::zeros(&[1, s[2], s[3]]),
            norm: 0.0,
        });
    }
    let norm = svd.s.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (l, r) = match towards {
        Direction::Right => (svd.u.clone(), svd.s_vh()),
        Direction::Left => (svd.u_s(), svd.v.adjoint()),
    };
    Ok(Split {
        left: l.reshape(&[s[0], s[1], k])?,
        right: r.reshape(&[k, s[2], s[3]])?,
        norm,
    })
}

/// Two-site variational fitting of `Hψ`: alternate left-to-right and
/// right-to-left sweeps, each local step replacing two sites of `η` by the
/// truncated SVD of the projected target.
///
/// A run is reported converged when `||η||` changed by at most
/// `tol * ||Hψ||` over the last sweep while staying above that level.
/// A guess orthogonal to `Hψ` has zero projections everywhere and never
/// converges.
pub fn fitting(h: &Mpo, psi: &Mps, cut: Truncation, opts: &FittingOptions) -> Result<MethodReport> {
    timed(|| {
        h.check_acts_on(psi)?;
        let dims = psi.phys_dims();
        let n = dims.len();
        if n < 2 {
            return Ok((h.apply_exact(psi)?.truncate(cut)?, 0, true));
        }
        let guess = match &opts.guess {
            Some(g) => {
                if g.phys_dims() != dims {
                    return Err(Error::Shape("fitting guess has the wrong physical dimensions".into()));
                }
                g.clone()
            }
            None => {
                let chi = match cut {
                    Truncation::MaxRank(k) => k,
                    Truncation::Tolerance(_) => psi.max_bond().max(1),
                };
                gaussian_mps(&dims, chi, opts.seed)?
            }
        };
        let target = applied_norm_sqr(h, psi)?.sqrt();
        let guess_norm = guess.norm();
        let mut proxy = if guess_norm > 0.0 {
            expectation(&guess, h, psi)?.norm() / guess_norm
        } else {
            0.0
        };
        let mut eta = guess.canonicalize(Direction::Right)?.into_sites();

        let mut left = vec![unit3(); n + 1];
        let mut right = vec![unit3(); n + 1];
        for j in (1..n).rev() {
            right[j] = grow_right(&right[j + 1], &eta[j], h.site(j), psi.site(j))?;
        }

        let threshold = opts.tol * target;
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < opts.max_sweeps {
            let mut norm = 0.0;
            for j in 0..n - 1 {
                let theta = two_site(h, psi, &left[j], &right[j + 2], j)?;
                let sp = split(&theta, cut, Direction::Right)?;
                left[j + 1] = grow_left(&left[j], &sp.left, h.site(j), psi.site(j))?;
                eta[j] = sp.left;
                eta[j + 1] = sp.right;
                norm = sp.norm;
            }
            for j in (0..n - 1).rev() {
                let theta = two_site(h, psi, &left[j], &right[j + 2], j)?;
                let sp = split(&theta, cut, Direction::Left)?;
                right[j + 1] = grow_right(&right[j + 2], &sp.right, h.site(j + 1), psi.site(j + 1))?;
                eta[j] = sp.left;
                eta[j + 1] = sp.right;
                norm = sp.norm;
            }
            sweeps += 1;
            let change = (norm - proxy).abs();
            proxy = norm;
            if change <= threshold && proxy > threshold {
                converged = true;
                break;
            }
        }
        Ok((Mps::with_canonical(eta, Canonical::Right)?, sweeps, converged))
    })
}
