//! Successive randomized compression of MPO–MPS products.
//!
//! The product `H|ψ⟩` is never formed. A left-to-right pass contracts a
//! Khatri–Rao sketch into the operator and state, caching the partial
//! contractions `C^(i)`. A right-to-left pass then builds the output one site
//! at a time: at site `j` it sketches the remaining unfolding `B^(j)`, takes a
//! QR factorization whose orthonormal factor becomes `η^(j)`, and folds
//! `conj(η^(j))` into the right environment `S^(j)`. The output is right
//! canonical; the first site carries the norm.
//!
//! Sums `Σ_t c_t H_t|ψ_t⟩` are handled by sketching every term with the same
//! random factors and adding the local sketches before each QR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{g_append, loo_from_g, HouseholderQr, SINGULAR_FLOOR};
use crate::linalg::{invert_upper, qr_thin, Truncation};
use crate::mpo::Mpo;
use crate::mps::{Canonical, Mps};
use crate::sketch::{EntryDist, KhatriRaoSketch};
use crate::tensor::{contract, contract_batched, DenseTensor};
use crate::C64;

/// How the output bond dimensions are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// Sketch with exactly `chi_bar` columns.
    FixedBond { chi_bar: usize },
    /// Sketch with `chi_prime` columns (default [`default_oversampling`]),
    /// then round down to `chi_bar` with an SVD sweep.
    Oversampled { chi_bar: usize, chi_prime: Option<usize> },
    /// Grow each bond until the leave-one-out estimate meets the tolerance.
    Adaptive(AdaptiveParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    pub tau_abs: f64,
    pub tau_rel: f64,
    /// Starting bond dimension at each site.
    pub chi0: usize,
    /// Increment applied when the estimate misses the tolerance.
    pub delta_chi: usize,
    /// No bond grows past this.
    pub chi_cap: usize,
    /// Run the loop at a tenth of the tolerance, then round at the tolerance.
    pub final_round: bool,
    /// Start each site from the previous site's accepted bond instead of `chi0`.
    pub inherit: bool,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            tau_abs: 0.0,
            tau_rel: 1e-8,
            chi0: 2,
            delta_chi: 3,
            chi_cap: usize::MAX,
            final_round: false,
            inherit: false,
        }
    }
}

impl AdaptiveParams {
    pub fn relative(tau_rel: f64) -> Self {
        Self {
            tau_rel,
            ..Self::default()
        }
    }
}

/// `max(ceil(1.5 chi_bar), chi_bar + 10)`.
pub fn default_oversampling(chi_bar: usize) -> usize {
    (chi_bar * 3).div_ceil(2).max(chi_bar + 10)
}

impl TruncationPolicy {
    /// Oversampled mode with the default inflated bond.
    pub fn oversampled(chi_bar: usize) -> Self {
        TruncationPolicy::Oversampled {
            chi_bar,
            chi_prime: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TruncationPolicy::FixedBond { chi_bar: 0 } => {
                Err(Error::Parameter("chi_bar must be at least 1".into()))
            }
            TruncationPolicy::Oversampled { chi_bar, chi_prime } => {
                if chi_bar == 0 {
                    return Err(Error::Parameter("chi_bar must be at least 1".into()));
                }
                match chi_prime {
                    Some(p) if p < chi_bar => Err(Error::Parameter(format!(
                        "oversampled bond {p} is below the target {chi_bar}"
                    ))),
                    _ => Ok(()),
                }
            }
            TruncationPolicy::Adaptive(a) => {
                let bad_tau = !(a.tau_abs >= 0.0 && a.tau_rel >= 0.0) || (a.tau_abs == 0.0 && a.tau_rel == 0.0);
                if bad_tau {
                    return Err(Error::Parameter(
                        "tolerances must be nonnegative and not both zero".into(),
                    ));
                }
                if a.chi0 == 0 || a.delta_chi == 0 || a.chi_cap < a.chi0 {
                    return Err(Error::Parameter(
                        "need chi0 >= 1, delta_chi >= 1 and chi_cap >= chi0".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Per-site record of the adaptive loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteEstimate {
    /// Zero-based output site.
    pub site: usize,
    /// Accepted bond to the left of the site.
    pub bond: usize,
    pub err_hat: f64,
    pub norm_hat: f64,
    pub rank_deficient: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SrcWarning {
    /// The bond reached its cap before the estimate met the tolerance.
    CapReached {
        site: usize,
        bond: usize,
        err_hat: f64,
        threshold: f64,
    },
}

#[derive(Clone, Debug)]
pub struct SrcOutput {
    pub mps: Mps,
    pub warnings: Vec<SrcWarning>,
    /// Filled in adaptive mode, ordered from the last site to the second.
    pub estimates: Vec<SiteEstimate>,
}

impl SrcOutput {
    pub fn into_mps(self) -> Mps {
        self.mps
    }
}

/// Compresses `H|ψ⟩` with real Gaussian Khatri–Rao sketches drawn from `seed`.
pub fn src_multiply(h: &Mpo, psi: &Mps, policy: &TruncationPolicy, seed: u64) -> Result<SrcOutput> {
    src_multiply_sum(&[(C64::new(1.0, 0.0), h, psi)], policy, seed)
}

/// Compresses `Σ_t c_t H_t|ψ_t⟩`.
pub fn src_multiply_sum(terms: &[(C64, &Mpo, &Mps)], policy: &TruncationPolicy, seed: u64) -> Result<SrcOutput> {
    src_multiply_sum_with(terms, policy, seed, EntryDist::Real)
}

/// As [`src_multiply_sum`], with a choice of sketch distribution.
pub fn src_multiply_sum_with(
    terms: &[(C64, &Mpo, &Mps)],
    policy: &TruncationPolicy,
    seed: u64,
    dist: EntryDist,
) -> Result<SrcOutput> {
    policy.validate()?;
    let (first, rest) = terms
        .split_first()
        .ok_or_else(|| Error::Parameter("need at least one term".into()))?;
    let dims = first.2.phys_dims();
    if dims.len() < 2 {
        return Err(Error::Parameter("need at least 2 sites".into()));
    }
    first.1.check_acts_on(first.2)?;
    for t in rest {
        t.1.check_acts_on(t.2)?;
        if t.2.phys_dims() != dims {
            return Err(Error::Shape(format!(
                "terms act on different spaces: {:?} vs {:?}",
                dims,
                t.2.phys_dims()
            )));
        }
    }
    match *policy {
        TruncationPolicy::FixedBond { chi_bar } => {
            let mut run = Run::new(terms, seed, dist);
            let mps = run.fixed(chi_bar)?;
            Ok(SrcOutput {
                mps,
                warnings: Vec::new(),
                estimates: Vec::new(),
            })
        }
        TruncationPolicy::Oversampled { chi_bar, chi_prime } => {
            let wide = chi_prime.unwrap_or_else(|| default_oversampling(chi_bar));
            let mut run = Run::new(terms, seed, dist);
            let mps = run.fixed(wide)?.truncate(Truncation::MaxRank(chi_bar))?;
            Ok(SrcOutput {
                mps,
                warnings: Vec::new(),
                estimates: Vec::new(),
            })
        }
        TruncationPolicy::Adaptive(params) => {
            let mut run = Run::new(terms, seed, dist);
            let loop_params = if params.final_round {
                AdaptiveParams {
                    tau_abs: 0.1 * params.tau_abs,
                    tau_rel: 0.1 * params.tau_rel,
                    ..params
                }
            } else {
                params
            };
            let mut out = run.adaptive(&loop_params)?;
            if params.final_round {
                let norm = out.mps.norm();
                if norm > 0.0 {
                    let tau = params.tau_rel + params.tau_abs / norm;
                    out.mps = out.mps.truncate(Truncation::Tolerance(tau))?;
                }
            }
            Ok(out)
        }
    }
}

struct TermState<'a> {
    coeff: C64,
    h: &'a Mpo,
    psi: &'a Mps,
    /// `C^(i)` for sites `0..=i`, shaped `(p, D_i, χ_i)`.
    cenv: Vec<DenseTensor>,
    /// Right environment `S`, shaped `(χ, D, χ̄)`.
    senv: DenseTensor,
}

struct Run<'a> {
    terms: Vec<TermState<'a>>,
    dims: Vec<usize>,
    seed: u64,
    dist: EntryDist,
    sketch: Option<KhatriRaoSketch>,
}

/// Per-term intermediate `V = W^(j) ψ^(j) S^(j+1)`, shaped `(D_l, d, χ_l, χ̄_r)`.
pub(crate) fn right_block(w: &DenseTensor, a: &DenseTensor, s: &DenseTensor) -> Result<DenseTensor> {
    // (χl, i, χr) x (χr, Dr, χ̄) -> (χl, i, Dr, χ̄)
    let u = contract(a, s, &[(2, 0)])?;
    // (Dl, o, i, Dr) x (χl, i, Dr, χ̄) -> (Dl, o, χl, χ̄)
    contract(w, &u, &[(2, 1), (3, 2)])
}

impl<'a> Run<'a> {
    fn new(terms: &[(C64, &'a Mpo, &'a Mps)], seed: u64, dist: EntryDist) -> Self {
        let dims = terms[0].2.phys_dims();
        let terms = terms
            .iter()
            .map(|&(coeff, h, psi)| TermState {
                coeff,
                h,
                psi,
                cenv: Vec::new(),
                senv: DenseTensor::from_real(&[1, 1, 1], &[1.0]).expect("unit environment"),
            })
            .collect();
        Self {
            terms,
            dims,
            seed,
            dist,
            sketch: None,
        }
    }

    fn n(&self) -> usize {
        self.dims.len()
    }

    /// Largest rank the unfolding at the cut left of site `j` can have.
    fn rank_bound(&self, j: usize) -> usize {
        let product: usize = self
            .terms
            .iter()
            .map(|t| t.h.bonds()[j].saturating_mul(t.psi.bonds()[j]))
            .fold(0usize, usize::saturating_add);
        let left = self.dims[..j]
            .iter()
            .fold(1usize, |acc, &d| acc.saturating_mul(d));
        product.min(left)
    }

    fn width(&self) -> usize {
        self.sketch.as_ref().map_or(0, KhatriRaoSketch::p)
    }

    /// Makes the sketch at least `p` wide and extends `C^(0..=upto)` to match.
    fn ensure_width(&mut self, p: usize, upto: usize) -> Result<()> {
        let old = self.width();
        if p > old {
            let sketch = match &self.sketch {
                None => KhatriRaoSketch::new(&self.dims[..self.n() - 1], p, self.seed, self.dist)?,
                Some(s) => s.grow(p - old)?,
            };
            self.sketch = Some(sketch);
        }
        let sketch = self.sketch.as_ref().expect("sketch exists");
        let width = sketch.p();
        for term in &mut self.terms {
            let have = term.cenv.first().map_or(0, |c| c.shape()[0]);
            let done = term.cenv.len();
            // Extend already computed environments with the new rows.
            if have < width && done > 0 {
                let fresh = left_pass(term, sketch, have..width, done - 1)?;
                for (c, f) in term.cenv.iter_mut().zip(fresh) {
                    *c = c.concat(&f, 0)?;
                }
            }
            // Compute environments not yet reached, at full width.
            if done <= upto {
                let mut all = left_pass(term, sketch, 0..width, upto)?;
                term.cenv.extend(all.drain(done..));
            }
        }
        Ok(())
    }

    /// Sketch rows `rows` of `B^(j)` as a `(d χ̄_r) x rows.len()` matrix.
    fn sketch_block(&self, j: usize, blocks: &[DenseTensor], rows: std::ops::Range<usize>) -> Result<DenseTensor> {
        let mut acc: Option<DenseTensor> = None;
        for (term, v) in self.terms.iter().zip(blocks) {
            let c = &term.cenv[j - 1];
            let c = if rows == (0..c.shape()[0]) {
                c.clone()
            } else {
                c.slice_axis(0, rows.clone())?
            };
            // (q, Dl, χl) x (Dl, o, χl, χ̄) -> (q, o, χ̄)
            let y = contract(&c, v, &[(1, 0), (2, 2)])?.scale(term.coeff);
            acc = Some(match acc {
                None => y,
                Some(a) => a.axpy(C64::new(1.0, 0.0), &y)?,
            });
        }
        let y = acc.expect("at least one term");
        let s = y.shape().to_vec();
        Ok(y.reshape(&[s[0], s[1] * s[2]])?.transpose())
    }

    fn blocks(&self, j: usize) -> Result<Vec<DenseTensor>> {
        self.terms
            .iter()
            .map(|t| right_block(t.h.site(j), t.psi.site(j), &t.senv))
            .collect()
    }

    /// Turns the orthonormal factor into `η^(j)` and folds it into each `S`.
    fn emit(&mut self, j: usize, q: &DenseTensor, blocks: &[DenseTensor]) -> Result<DenseTensor> {
        let (rows, k) = q.dims2();
        let d = self.dims[j];
        let eta = q.transpose().reshape(&[k, d, rows / d])?;
        let eta_conj = eta.clone().conj();
        for (term, v) in self.terms.iter_mut().zip(blocks) {
            // (Dl, o, χl, χ̄) x (k, o, χ̄) -> (Dl, χl, k)
            term.senv = contract(v, &eta_conj, &[(1, 1), (3, 2)])?.permute(&[1, 0, 2])?;
        }
        Ok(eta)
    }

    fn first_site(&self) -> Result<DenseTensor> {
        let blocks = self.blocks(0)?;
        let mut acc: Option<DenseTensor> = None;
        for (term, v) in self.terms.iter().zip(blocks) {
            let y = v.scale(term.coeff);
            acc = Some(match acc {
                None => y,
                Some(a) => a.axpy(C64::new(1.0, 0.0), &y)?,
            });
        }
        let v = acc.expect("at least one term");
        let s = v.shape().to_vec();
        v.reshape(&[1, s[1], s[3]])
    }

    fn finish(&self, mut sites: Vec<DenseTensor>) -> Result<Mps> {
        let first = self.first_site()?;
        if first.max_abs() == 0.0 {
            return Ok(Mps::zero(&self.dims));
        }
        sites.push(first);
        sites.reverse();
        Mps::with_canonical(sites, Canonical::Right)
    }

    fn fixed(&mut self, chi_bar: usize) -> Result<Mps> {
        let n = self.n();
        let widths: Vec<usize> = (1..n).map(|j| chi_bar.min(self.rank_bound(j))).collect();
        let width = widths.iter().copied().max().unwrap_or(1).max(1);
        self.ensure_width(width, n - 2)?;
        let mut sites = Vec::with_capacity(n);
        for j in (1..n).rev() {
            let blocks = self.blocks(j)?;
            let rows = self.dims[j] * self.terms[0].senv.shape()[2];
            let p = widths[j - 1].min(rows);
            let y = self.sketch_block(j, &blocks, 0..p)?;
            let q = qr_thin(&y).q;
            sites.push(self.emit(j, &q, &blocks)?);
        }
        self.finish(sites)
    }

    fn adaptive(&mut self, params: &AdaptiveParams) -> Result<SrcOutput> {
        let n = self.n();
        let mut sites = Vec::with_capacity(n);
        let mut warnings = Vec::new();
        let mut estimates = Vec::new();
        let mut previous = params.chi0;
        for j in (1..n).rev() {
            let blocks = self.blocks(j)?;
            let rows = self.dims[j] * self.terms[0].senv.shape()[2];
            let hard = rows.min(self.rank_bound(j)).max(1);
            let bound = hard.min(params.chi_cap);
            let start = if params.inherit { previous } else { params.chi0 };
            let mut p = start.clamp(1, bound);
            self.ensure_width(p, j - 1)?;
            let y = self.sketch_block(j, &blocks, 0..p)?;
            let mut qr = HouseholderQr::new(&y)?;
            let r = qr.r_factor();
            let mut g = initial_g(&r)?;
            let mut norm_sqr = r.norm_sqr();
            loop {
                let norm_hat = norm_estimate_from_sqr(norm_sqr, p);
                let err_hat = g.as_ref().map_or(0.0, loo_from_g);
                let threshold = params.tau_abs + params.tau_rel * norm_hat;
                let done = g.is_none() || err_hat <= threshold;
                if done || p >= bound {
                    // At the hard bound the sketch spans the whole range and the
                    // step is exact; only a user cap can leave it short.
                    if !done && p < hard {
                        warnings.push(SrcWarning::CapReached {
                            site: j,
                            bond: p,
                            err_hat,
                            threshold,
                        });
                    }
                    estimates.push(SiteEstimate {
                        site: j,
                        bond: p,
                        err_hat,
                        norm_hat,
                        rank_deficient: g.is_none(),
                    });
                    break;
                }
                let next = (p + params.delta_chi).min(bound);
                self.ensure_width(next, j - 1)?;
                let extra = self.sketch_block(j, &blocks, p..next)?;
                norm_sqr += extra.norm_sqr();
                let (r_prime, r_dprime) = qr.append(&extra)?;
                g = match (g, r_dprime) {
                    (Some(g), Some(rdd)) => g_append(&g, &r_prime, &rdd)?,
                    _ => None,
                };
                p = next;
            }
            previous = p;
            let q = qr.q_factor();
            sites.push(self.emit(j, &q, &blocks)?);
        }
        let mps = self.finish(sites)?;
        Ok(SrcOutput {
            mps,
            warnings,
            estimates,
        })
    }
}

/// `||Y||_F / sqrt(p)`, with `||Y||_F^2` accumulated as columns arrive.
fn norm_estimate_from_sqr(norm_sqr: f64, p: usize) -> f64 {
    (norm_sqr / p.max(1) as f64).sqrt()
}

/// `R^{-†}`, or `None` when `R` is numerically singular.
fn initial_g(r: &DenseTensor) -> Result<Option<DenseTensor>> {
    let (k, p) = r.dims2();
    let scale = (0..k.min(p)).map(|i| r.get(&[i, i]).norm()).fold(0.0, f64::max);
    if k != p || scale == 0.0 || (0..p).any(|i| r.get(&[i, i]).norm() < SINGULAR_FLOOR * scale) {
        return Ok(None);
    }
    Ok(Some(invert_upper(r)?.adjoint()))
}

/// `C^(0..=upto)` restricted to sketch rows `cols`.
fn left_pass(
    term: &TermState<'_>,
    sketch: &KhatriRaoSketch,
    cols: std::ops::Range<usize>,
    upto: usize,
) -> Result<Vec<DenseTensor>> {
    let q = cols.len();
    let mut c = DenseTensor::from_fn(&[q, 1, 1], |_| C64::new(1.0, 0.0));
    let mut out = Vec::with_capacity(upto + 1);
    for i in 0..=upto {
        let omega = sketch.rows(i, cols.clone())?;
        // (q, o) x (Dl, o, i, Dr) -> (q, Dl, i, Dr)
        let w = contract(&omega, term.h.site(i), &[(1, 1)])?;
        // (q, Dl, χl) x (χl, i, χr) -> (q, Dl, i, χr)
        let t = contract(&c, term.psi.site(i), &[(2, 0)])?;
        // batch q, sum (Dl, i) -> (q, Dr, χr)
        c = contract_batched(&w, &t, &[(0, 0)], &[(1, 1), (2, 2)])?;
        out.push(c.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{product_relative_error, relative_distance};
    use crate::random::{random_mpo, random_mps};

    #[test]
    fn default_oversampling_formula() {
        assert_eq!(default_oversampling(20), 30);
        assert_eq!(default_oversampling(5), 15);
        assert_eq!(default_oversampling(30), 45);
        assert_eq!(default_oversampling(21), 32);
    }

    #[test]
    fn identity_operator_recovers_state() {
        let psi = random_mps(6, 2, 3, -0.5, 1).unwrap();
        let h = Mpo::identity(&psi.phys_dims());
        let out = src_multiply(&h, &psi, &TruncationPolicy::FixedBond { chi_bar: 3 }, 5).unwrap();
        assert!(relative_distance(&out.mps, &psi).unwrap() <= 1e-10);
        assert_eq!(out.mps.canonical(), Canonical::Right);
        assert!(out.mps.isometry_defect(crate::Direction::Right) < 1e-10);
    }

    #[test]
    fn exact_recovery_at_full_bond() {
        let h = random_mpo(8, 2, 2, -0.5, 2).unwrap();
        let psi = random_mps(8, 2, 3, -0.5, 3).unwrap();
        for seed in 0..5 {
            let out = src_multiply(&h, &psi, &TruncationPolicy::FixedBond { chi_bar: 6 }, seed).unwrap();
            assert!(product_relative_error(&out.mps, &h, &psi).unwrap() <= 1e-10);
            assert!(out.mps.max_bond() <= 6);
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        let h = random_mpo(6, 2, 2, -0.5, 4).unwrap();
        let psi = random_mps(6, 2, 3, -0.5, 5).unwrap();
        let p = TruncationPolicy::oversampled(3);
        let a = src_multiply(&h, &psi, &p, 9).unwrap().mps;
        let b = src_multiply(&h, &psi, &p, 9).unwrap().mps;
        assert_eq!(a, b);
        assert_eq!(a.canonical(), Canonical::Left);
        assert!(a.max_bond() <= 3);
    }

    #[test]
    fn cancelling_sum_is_zero() {
        let h = random_mpo(5, 2, 2, -0.5, 6).unwrap();
        let psi = random_mps(5, 2, 2, -0.5, 7).unwrap();
        let one = C64::new(1.0, 0.0);
        let terms = [(one, &h, &psi), (-one, &h, &psi)];
        let out = src_multiply_sum(&terms, &TruncationPolicy::FixedBond { chi_bar: 4 }, 1).unwrap();
        assert_eq!(out.mps.norm(), 0.0);
        assert_eq!(out.mps.max_bond(), 1);
    }

    #[test]
    fn adaptive_meets_tolerance() {
        let h = random_mpo(8, 2, 3, 0.5, 8).unwrap();
        let psi = random_mps(8, 2, 3, 0.5, 9).unwrap();
        let params = AdaptiveParams {
            final_round: true,
            ..AdaptiveParams::relative(1e-6)
        };
        let out = src_multiply(&h, &psi, &TruncationPolicy::Adaptive(params), 3).unwrap();
        assert!(out.warnings.is_empty());
        assert!(product_relative_error(&out.mps, &h, &psi).unwrap() <= 1e-4);
        assert_eq!(out.estimates.len(), 7);
    }

    #[test]
    fn adaptive_cap_warns() {
        let h = random_mpo(8, 2, 3, -0.5, 10).unwrap();
        let psi = random_mps(8, 2, 3, -0.5, 11).unwrap();
        let params = AdaptiveParams {
            chi_cap: 2,
            ..AdaptiveParams::relative(1e-12)
        };
        let out = src_multiply(&h, &psi, &TruncationPolicy::Adaptive(params), 3).unwrap();
        assert!(!out.warnings.is_empty());
        assert!(out.mps.max_bond() <= 2);
    }

    #[test]
    fn invalid_policies_are_rejected() {
        assert!(TruncationPolicy::FixedBond { chi_bar: 0 }.validate().is_err());
        let bad = AdaptiveParams {
            tau_rel: 0.0,
            ..AdaptiveParams::default()
        };
        assert!(TruncationPolicy::Adaptive(bad).validate().is_err());
        let bad = AdaptiveParams {
            chi_cap: 1,
            ..AdaptiveParams::default()
        };
        assert!(TruncationPolicy::Adaptive(bad).validate().is_err());
    }
}
