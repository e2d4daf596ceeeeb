//! Khatri–Rao random test matrices and randomized QB approximation.
//!
//! Column `j` of the Khatri–Rao product `Ω^(1) ⊙ ... ⊙ Ω^(m)` is the
//! Kronecker product `ω_j^(1) ⊗ ... ⊗ ω_j^(m)` of the `j`-th columns.
//! Every column of every factor is drawn from its own generator keyed by
//! `(seed, site, column)`, so growing a sketch never changes existing
//! columns and the result does not depend on how the growth was split.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::qr_thin;
use crate::mps::check_cap;
use crate::tensor::DenseTensor;
use crate::C64;

/// Distribution of the sketch entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryDist {
    /// Real standard normal.
    #[default]
    Real,
    /// Complex normal with unit variance, `(x + iy) / sqrt(2)`.
    Complex,
}

fn column_rng(seed: u64, site: usize, column: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(site as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(column as u64).to_le_bytes());
    key[24..].copy_from_slice(b"krsketch");
    ChaCha8Rng::from_seed(key)
}

/// Draws column `column` of factor `site`.
fn draw_column(seed: u64, site: usize, column: usize, d: usize, dist: EntryDist) -> Vec<C64> {
    let mut rng = column_rng(seed, site, column);
    (0..d)
        .map(|_| match dist {
            EntryDist::Real => C64::new(StandardNormal.sample(&mut rng), 0.0),
            EntryDist::Complex => {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
        })
        .collect()
}

/// Per-site Gaussian factors of a Khatri–Rao product, stored transposed as
/// `p x d` matrices so that row `a` is the `a`-th test vector at that site.
#[derive(Clone, Debug, PartialEq)]
pub struct KhatriRaoSketch {
    factors: Vec<DenseTensor>,
    dims: Vec<usize>,
    p: usize,
    seed: u64,
    dist: EntryDist,
}

impl KhatriRaoSketch {
    /// Sketch with one factor per entry of `dims` and `p` columns.
    pub fn new(dims: &[usize], p: usize, seed: u64, dist: EntryDist) -> Result<Self> {
        if p == 0 {
            return Err(Error::Parameter("a sketch needs at least one column".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Parameter("sketch factors need positive dimensions".into()));
        }
        let factors = dims
            .iter()
            .enumerate()
            .map(|(site, &d)| Self::block(seed, site, 0..p, d, dist))
            .collect();
        Ok(Self {
            factors,
            dims: dims.to_vec(),
            p,
            seed,
            dist,
        })
    }

    fn block(seed: u64, site: usize, cols: std::ops::Range<usize>, d: usize, dist: EntryDist) -> DenseTensor {
        let rows = cols.len();
        let data = cols.flat_map(|c| draw_column(seed, site, c, d, dist)).collect();
        DenseTensor::new(vec![rows, d], data).expect("consistent block")
    }

    /// Appends `extra` columns to every factor.
    pub fn grow(&self, extra: usize) -> Result<Self> {
        if extra == 0 {
            return Err(Error::Parameter("grow needs at least one new column".into()));
        }
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(site, f)| {
                let new = Self::block(self.seed, site, self.p..self.p + extra, self.dims[site], self.dist);
                f.concat(&new, 0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            factors,
            dims: self.dims.clone(),
            p: self.p + extra,
            seed: self.seed,
            dist: self.dist,
        })
    }

    /// Current number of columns.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn dist(&self) -> EntryDist {
        self.dist
    }

    /// `Ω^(site)` as a `d x p` matrix.
    pub fn omega(&self, site: usize) -> DenseTensor {
        self.factors[site].transpose()
    }

    /// Rows `cols` of the transposed factor: a `cols.len() x d` matrix.
    pub(crate) fn rows(&self, site: usize, cols: std::ops::Range<usize>) -> Result<DenseTensor> {
        self.factors[site].slice_axis(0, cols)
    }

    /// The full `(d_1 ... d_m) x p` Khatri–Rao product, rows in row-major
    /// order with the first factor slowest. Refuses past the dense cap.
    pub fn materialize(&self) -> Result<DenseTensor> {
        check_cap(self.dims.iter().copied().chain([self.p]))?;
        let rows: usize = self.dims.iter().product();
        let mut out = DenseTensor::zeros(&[rows, self.p]);
        for c in 0..self.p {
            let mut col = vec![C64::new(1.0, 0.0)];
            for f in &self.factors {
                let d = f.shape()[1];
                col = col
                    .iter()
                    .flat_map(|&x| (0..d).map(move |s| (x, s)))
                    .map(|(x, s)| x * f.get(&[c, s]))
                    .collect();
            }
            for (r, v) in col.into_iter().enumerate() {
                out.set(&[r, c], v);
            }
        }
        Ok(out)
    }
}

/// Randomized QB approximation `a ≈ q b`.
#[derive(Clone, Debug)]
pub struct Qb {
    /// Orthonormal basis for the range of `a * omega`.
    pub q: DenseTensor,
    /// `q^† a`.
    pub b: DenseTensor,
    /// Number of columns of `q`; 0 when `a * omega` vanishes, in which case
    /// `q` and `b` are single zero columns/rows.
    pub rank: usize,
}

impl Qb {
    pub fn approximation(&self) -> DenseTensor {
        self.q.matmul(&self.b).expect("conforming factors")
    }
}

pub fn qb_approx(a: &DenseTensor, omega: &DenseTensor) -> Result<Qb> {
    let (m, n) = a.dims2();
    if omega.dims2().0 != n {
        return Err(Error::AxisMismatch {
            axis_a: 1,
            extent_a: n,
            axis_b: 0,
            extent_b: omega.dims2().0,
        });
    }
    let y = a.matmul(omega)?;
    if y.max_abs() == 0.0 {
        return Ok(Qb {
            q: DenseTensor::zeros(&[m, 1]),
            b: DenseTensor::zeros(&[1, n]),
            rank: 0,
        });
    }
    let q = qr_thin(&y).q;
    let b = q.adjoint().matmul(a)?;
    let rank = q.dims2().1;
    Ok(Qb { q, b, rank })
}
