//! Seeded random ensembles of states and operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mpo::Mpo;
use crate::mps::Mps;
use crate::tensor::DenseTensor;
use crate::C64;

/// Largest rank attainable at each of the `n + 1` cuts of a chain with local
/// dimension `local` and requested bond `bond`.
pub fn clipped_bonds(n: usize, local: usize, bond: usize) -> Vec<usize> {
    let pow = |k: usize| -> usize {
        (0..k).try_fold(1usize, |acc, _| acc.checked_mul(local)).unwrap_or(usize::MAX)
    };
    (0..=n)
        .map(|j| bond.min(pow(j)).min(pow(n - j)).max(1))
        .collect()
}

fn check_params(n: usize, d: usize, bond: usize, alpha: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 sites, got {n}")));
    }
    if d < 2 {
        return Err(Error::Parameter(format!("physical dimension must be at least 2, got {d}")));
    }
    if bond < 1 {
        return Err(Error::Parameter("bond dimension must be at least 1".into()));
    }
    if !(-1.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha must lie in [-1, 1], got {alpha}")));
    }
    Ok(())
}

fn uniform_site(rng: &mut ChaCha8Rng, shape: &[usize], alpha: f64) -> DenseTensor {
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| C64::new(alpha + (1.0 - alpha) * rng.random::<f64>(), 0.0))
        .collect();
    DenseTensor::new(shape.to_vec(), data).expect("consistent shape")
}

/// MPS with i.i.d. real entries uniform on `[alpha, 1]`.
pub fn random_mps(n: usize, d: usize, chi: usize, alpha: f64, seed: u64) -> Result<Mps> {
    check_params(n, d, chi, alpha)?;
    let bonds = clipped_bonds(n, d, chi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = (0..n)
        .map(|j| uniform_site(&mut rng, &[bonds[j], d, bonds[j + 1]], alpha))
        .collect();
    Mps::new(sites)
}

/// MPO with i.i.d. real entries uniform on `[alpha, 1]`.
pub fn random_mpo(n: usize, d: usize, bond: usize, alpha: f64, seed: u64) -> Result<Mpo> {
    check_params(n, d, bond, alpha)?;
    let bonds = clipped_bonds(n, d * d, bond);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = (0..n)
        .map(|j| uniform_site(&mut rng, &[bonds[j], d, d, bonds[j + 1]], alpha))
        .collect();
    Mpo::new(sites)
}

/// MPS with i.i.d. real standard normal entries, used as a starting guess.
pub fn gaussian_mps(phys_dims: &[usize], chi: usize, seed: u64) -> Result<Mps> {
    let n = phys_dims.len();
    let mut bonds = vec![1; n + 1];
    let mut left = 1usize;
    for j in 1..n {
        left = left.saturating_mul(phys_dims[j - 1]);
        let right = phys_dims[j..].iter().fold(1usize, |a, &d| a.saturating_mul(d));
        bonds[j] = chi.min(left).min(right).max(1);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = (0..n)
        .map(|j| {
            let shape = [bonds[j], phys_dims[j], bonds[j + 1]];
            let len: usize = shape.iter().product();
            let data = (0..len)
                .map(|_| C64::new(rng.sample(StandardNormal), 0.0))
                .collect();
            DenseTensor::new(shape.to_vec(), data).expect("consistent shape")
        })
        .collect();
    Mps::new(sites)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonds_are_clipped_to_rank_bound() {
        assert_eq!(random_mps(2, 2, 5, 0.0, 1).unwrap().bonds(), vec![1, 2, 1]);
        assert_eq!(random_mpo(2, 2, 3, 0.0, 1).unwrap().bonds(), vec![1, 3, 1]);
        assert_eq!(clipped_bonds(6, 2, 5), vec![1, 2, 4, 5, 4, 2, 1]);
    }

    #[test]
    fn entries_lie_in_range_and_are_real() {
        let psi = random_mps(4, 3, 4, -0.5, 7).unwrap();
        for s in psi.sites() {
            for z in s.data() {
                assert!(z.im == 0.0 && (-0.5..=1.0).contains(&z.re));
            }
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        assert_eq!(random_mps(5, 2, 3, -0.5, 9).unwrap(), random_mps(5, 2, 3, -0.5, 9).unwrap());
        assert_eq!(random_mpo(5, 2, 3, -0.5, 9).unwrap(), random_mpo(5, 2, 3, -0.5, 9).unwrap());
        assert_ne!(random_mps(5, 2, 3, -0.5, 9).unwrap(), random_mps(5, 2, 3, -0.5, 10).unwrap());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(random_mps(1, 2, 2, 0.0, 0).is_err());
        assert!(random_mps(3, 1, 2, 0.0, 0).is_err());
        assert!(random_mps(3, 2, 0, 0.0, 0).is_err());
        assert!(random_mpo(3, 2, 2, 1.5, 0).is_err());
    }
}
