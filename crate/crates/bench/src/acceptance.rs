//! Acceptance checks, one function per criterion. Each returns an
//! [`Outcome`] with the measured quantities in `detail`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use mpomps::baselines::{self, FittingOptions};
use mpomps::estimators::{g_append, loo_error, HouseholderQr, qr_append};
use mpomps::linalg::{invert_upper, qr_thin};
use mpomps::mps::{product_relative_error, relative_distance};
use mpomps::random::{gaussian_mps, random_mpo, random_mps};
use mpomps::sketch::{qb_approx, EntryDist, KhatriRaoSketch};
use mpomps::src::{src_multiply, AdaptiveParams, TruncationPolicy};
use mpomps::{DenseTensor, Mpo, Mps, Truncation, C64};

use crate::error::Result;
use crate::run::adaptive_policy;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {:<32} {verdict}  {}", self.id, self.name, self.detail)
    }
}

pub const COUNT: u8 = 11;

pub fn run(id: u8) -> Result<Outcome> {
    match id {
        1 => exact_recovery(),
        2 => khatri_rao_qb(),
        3 => gaussian_qb_bound(),
        4 => loo_unbiased(),
        5 => norm_unbiased(),
        6 => oversampling(),
        7 => complexity_scaling(),
        8 => adaptive_tolerance(),
        9 => qr_g_updating(),
        10 => baseline_exactness(),
        11 => fitting_failure_mode(),
        _ => Err(crate::error::usage(format!("no criterion {id} (1..={COUNT})"))),
    }
}

pub fn run_all() -> Result<Vec<Outcome>> {
    (1..=COUNT).map(run).collect()
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseTensor::from_fn(&[rows, cols], |_| {
        C64::new(StandardNormal.sample(&mut rng), 0.0)
    })
}

/// `u diag(s) v^T` with Haar-like orthogonal factors.
fn with_spectrum(s: &[f64], seed: u64) -> Result<DenseTensor> {
    let n = s.len();
    let u = qr_thin(&gaussian(n, n, seed)).q;
    let v = qr_thin(&gaussian(n, n, seed ^ 0x5555)).q;
    let us = DenseTensor::from_fn(&[n, n], |ix| u.get(ix) * s[ix[1]]);
    Ok(us.matmul(&v.adjoint())?)
}

fn rel_fro(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    Ok(a.sub(b)?.norm() / b.norm())
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sample_var(xs: &[f64]) -> f64 {
    let (mean, se) = mean_se(xs);
    let _ = mean;
    se * se * xs.len() as f64
}

fn dense_product(h: &Mpo, psi: &Mps) -> Result<DenseTensor> {
    let m = h.to_dense_matrix()?;
    let v = psi.to_dense()?;
    let len = v.len();
    Ok(m.matmul(&v.reshape(&[len, 1])?)?)
}

fn dense_error(out: &Mps, want: &DenseTensor) -> Result<f64> {
    let got = out.to_dense()?;
    let len = got.len();
    rel_fro(&got.reshape(&[len, 1])?, want)
}

pub fn exact_recovery() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let h = random_mpo(8, 2, 2, -1.0, 2 * seed)?;
        let psi = random_mps(8, 2, 3, -1.0, 2 * seed + 1)?;
        let want = dense_product(&h, &psi)?;
        let out = src_multiply(&h, &psi, &TruncationPolicy::FixedBond { chi_bar: 6 }, seed)?.mps;
        worst = worst.max(dense_error(&out, &want)?);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome {
        id: 1,
        name: "exact recovery",
        passed: worst <= 1e-10 && secs < 5.0,
        detail: format!("max rel error {worst:.2e} over 100 seeds (<= 1e-10), {secs:.2} s (< 5 s)"),
    })
}

pub fn khatri_rao_qb() -> Result<Outcome> {
    // Rank-4 unfolding of a 12-site chain with bond 4 at the middle cut.
    let state = gaussian_mps(&[2; 12], 4, 2024)?;
    let a = state.to_dense()?.reshape(&[64, 64])?;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let omega = KhatriRaoSketch::new(&[2; 6], 4, seed, EntryDist::Real)?.materialize()?;
        let qb = qb_approx(&a, &omega)?;
        worst = worst.max(rel_fro(&qb.approximation(), &a)?);
    }
    Ok(Outcome {
        id: 2,
        name: "Khatri-Rao QB exact recovery",
        passed: worst <= 1e-10,
        detail: format!("max ||A-QB||/||A|| {worst:.2e} over 100 seeds (<= 1e-10)"),
    })
}

pub fn gaussian_qb_bound() -> Result<Outcome> {
    let (n, p, r) = (32, 8, 4);
    let s: Vec<f64> = (0..n).map(|k| 2f64.powi(-(k as i32))).collect();
    let a = with_spectrum(&s, 3)?;
    let tail: f64 = s[r..].iter().map(|x| x * x).sum();
    let bound = (1.0 + r as f64 / (p - r - 1) as f64) * tail;
    let errs: Vec<f64> = (0..2000u64)
        .map(|seed| {
            let qb = qb_approx(&a, &gaussian(n, p, 10_000 + seed))?;
            Ok(qb.approximation().sub(&a)?.norm_sqr())
        })
        .collect::<Result<_>>()?;
    let (mean, _) = mean_se(&errs);
    Ok(Outcome {
        id: 3,
        name: "Gaussian QB error bound",
        passed: mean <= bound * 1.05,
        detail: format!("mean err^2 {mean:.4e} <= 1.05 x bound {bound:.4e}"),
    })
}

pub fn loo_unbiased() -> Result<Outcome> {
    let (n, p) = (20, 5);
    let s: Vec<f64> = (0..n).map(|k| 0.8f64.powi(k as i32)).collect();
    let a = with_spectrum(&s, 4)?;
    let mut diffs = Vec::with_capacity(2000);
    let mut est = Vec::with_capacity(2000);
    let mut truth = Vec::with_capacity(2000);
    for seed in 0..2000u64 {
        let omega = gaussian(n, p, 20_000 + seed);
        let (err_hat, singular) = loo_error(&qr_thin(&a.matmul(&omega)?).r)?;
        assert!(!singular, "full-rank test matrix");
        // Rank-(p-1) QB error with the same draw, leaving out the last column.
        let qb = qb_approx(&a, &omega.slice_axis(1, 0..p - 1)?)?;
        let e4 = qb.approximation().sub(&a)?.norm_sqr();
        est.push(err_hat * err_hat);
        truth.push(e4);
        diffs.push(err_hat * err_hat - e4);
    }
    let (gap, se) = mean_se(&diffs);
    let (m_est, _) = mean_se(&est);
    let (m_true, _) = mean_se(&truth);
    Ok(Outcome {
        id: 4,
        name: "leave-one-out unbiasedness",
        passed: gap.abs() <= 3.0 * se,
        detail: format!(
            "mean Err^2 est {m_est:.4e} vs Monte-Carlo {m_true:.4e}, gap {gap:.2e} (3 SE = {:.2e})",
            3.0 * se
        ),
    })
}

pub fn norm_unbiased() -> Result<Outcome> {
    let b = gaussian(16, 16, 5);
    let target = b.norm_sqr();
    let draws = |p: usize, offset: u64| -> Result<Vec<f64>> {
        (0..2000u64)
            .map(|seed| Ok(b.matmul(&gaussian(16, p, offset + seed))?.norm_sqr() / p as f64))
            .collect()
    };
    let small = draws(8, 30_000)?;
    let large = draws(32, 40_000)?;
    let (mean, se) = mean_se(&small);
    let (v8, v32) = (sample_var(&small), sample_var(&large));
    Ok(Outcome {
        id: 5,
        name: "norm-estimator unbiasedness",
        passed: (mean - target).abs() <= 3.0 * se && v32 < v8,
        detail: format!(
            "mean Norm^2 {mean:.4e} vs ||B||^2 {target:.4e} (3 SE = {:.2e}); var p=8 {v8:.3e} > p=32 {v32:.3e}",
            3.0 * se
        ),
    })
}

pub fn oversampling() -> Result<Outcome> {
    let chi_bars = [5usize, 10, 15, 20, 25, 30];
    let trials = 5;
    let mut src = vec![0.0; chi_bars.len()];
    let mut ctc = vec![0.0; chi_bars.len()];
    let mut zip = vec![0.0; chi_bars.len()];
    let mut ref_err: f64 = 0.0;
    for trial in 0..trials {
        let (h, psi) = crate::run::synthetic_instance(40, 2, 20, 20, -0.5, 7, trial)?;
        // One exact product, rounded at every bond, stands in for repeated
        // ctc_basic calls; the result is identical. Errors are measured
        // against its rounding at 1e-12, whose own error is recorded.
        let exact = h.apply_exact(&psi)?.canonicalize(mpomps::Direction::Right)?;
        let reference = exact.truncate(Truncation::Tolerance(1e-12))?;
        ref_err = ref_err.max(product_relative_error(&reference, &h, &psi)?);
        let err = |m: &Mps| relative_distance(m, &reference);
        for (i, &c) in chi_bars.iter().enumerate() {
            let os = src_multiply(&h, &psi, &TruncationPolicy::oversampled(c), 100 * trial as u64 + i as u64)?.mps;
            src[i] += err(&os)? / trials as f64;
            ctc[i] += err(&exact.truncate(Truncation::MaxRank(c))?)? / trials as f64;
            let z = baselines::zip_up(&h, &psi, Truncation::MaxRank(c))?.output;
            zip[i] += err(&z)? / trials as f64;
        }
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, &c) in chi_bars.iter().enumerate() {
        let near = src[i] <= 3.0 * ctc[i];
        let zip_worse = ![10, 15, 20].contains(&c) || zip[i] >= src[i];
        ok &= near && zip_worse;
        parts.push(format!("{c}: src {:.2e} ctc {:.2e} zip {:.2e}", src[i], ctc[i], zip[i]));
    }
    Ok(Outcome {
        id: 6,
        name: "oversampling near-optimality",
        passed: ok,
        detail: format!("mean rel error at chi_bar {} (reference error {ref_err:.1e})", parts.join("; ")),
    })
}

pub fn complexity_scaling() -> Result<Outcome> {
    let mut src = Vec::new();
    let mut ctc = Vec::new();
    for (k, bond) in [4usize, 8, 16].into_iter().enumerate() {
        let h = random_mpo(32, 2, bond, -0.5, 70 + k as u64)?;
        let psi = random_mps(32, 2, 16, -0.5, 80 + k as u64)?;
        src.push(baselines::src(&h, &psi, &TruncationPolicy::FixedBond { chi_bar: 16 }, 1)?.flops as f64);
        ctc.push(baselines::ctc_basic(&h, &psi, Truncation::MaxRank(16))?.flops as f64);
    }
    let src_ratio = [src[1] / src[0], src[2] / src[1]];
    let ctc_ratio = [ctc[1] / ctc[0], ctc[2] / ctc[1]];
    Ok(Outcome {
        id: 7,
        name: "complexity scaling",
        passed: src_ratio.iter().all(|&r| r <= 2.5) && ctc_ratio.iter().all(|&r| r >= 6.0),
        detail: format!(
            "src growth {:.2}x, {:.2}x (<= 2.5); ctc growth {:.2}x, {:.2}x (>= 6)",
            src_ratio[0], src_ratio[1], ctc_ratio[0], ctc_ratio[1]
        ),
    })
}

pub fn adaptive_tolerance() -> Result<Outcome> {
    let policy = TruncationPolicy::Adaptive(AdaptiveParams {
        tau_rel: 1e-6,
        chi0: 2,
        delta_chi: 3,
        final_round: true,
        ..AdaptiveParams::default()
    });
    let mut worst: f64 = 0.0;
    let mut passing = 0;
    for seed in 0..20u64 {
        let h = random_mpo(20, 2, 8, 0.5, 500 + seed)?;
        let psi = random_mps(20, 2, 8, 0.5, 600 + seed)?;
        let out = src_multiply(&h, &psi, &policy, seed)?.mps;
        let err = product_relative_error(&out, &h, &psi)?;
        worst = worst.max(err);
        if err <= 1e-4 {
            passing += 1;
        }
    }
    let mut ordering = true;
    let mut bonds = Vec::new();
    for tau in [1e-2, 1e-4] {
        let (mut zip, mut src) = (0usize, 0usize);
        for seed in 0..5u64 {
            let h = random_mpo(20, 2, 8, 0.5, 700 + seed)?;
            let psi = random_mps(20, 2, 8, 0.5, 800 + seed)?;
            zip += baselines::zip_up(&h, &psi, Truncation::Tolerance(tau))?.max_bond;
            src += baselines::src(&h, &psi, &adaptive_policy(tau), seed)?.max_bond;
        }
        ordering &= zip >= src;
        bonds.push(format!("tau {tau:.0e}: zipup {:.1} src {:.1}", zip as f64 / 5.0, src as f64 / 5.0));
    }
    Ok(Outcome {
        id: 8,
        name: "adaptive tolerance",
        passed: passing == 20 && ordering,
        detail: format!(
            "{passing}/20 seeds <= 1e-4 (worst {worst:.2e}); mean max bond {}",
            bonds.join(", ")
        ),
    })
}

fn random_upper(n: usize, seed: u64) -> DenseTensor {
    let g = gaussian(n, n, seed);
    DenseTensor::from_fn(&[n, n], |ix| match ix[0].cmp(&ix[1]) {
        std::cmp::Ordering::Less => g.get(ix),
        std::cmp::Ordering::Equal => C64::new(1.0 + g.get(ix).norm(), 0.0),
        std::cmp::Ordering::Greater => C64::new(0.0, 0.0),
    })
}

pub fn qr_g_updating() -> Result<Outcome> {
    let mut g_worst: f64 = 0.0;
    let mut qr_worst: f64 = 0.0;
    for t in 0..500u64 {
        let k = 1 + (t % 7) as usize;
        let delta = 1 + (t % 3) as usize;
        let r = random_upper(k, 90_000 + t);
        let rp = gaussian(k, delta, 91_000 + t);
        let rpp = random_upper(delta, 92_000 + t);
        let g = invert_upper(&r)?.adjoint();
        let updated = g_append(&g, &rp, &rpp)?.expect("well-conditioned block");
        let full = r
            .concat(&rp, 1)?
            .concat(&DenseTensor::zeros(&[delta, k]).concat(&rpp, 1)?, 0)?;
        let direct = invert_upper(&full)?.adjoint();
        g_worst = g_worst.max(rel_fro(&updated, &direct)?);

        let rows = k + delta + 3;
        let m = gaussian(rows, k, 93_000 + t);
        let extra = gaussian(rows, delta, 94_000 + t);
        let qr = qr_append(&HouseholderQr::new(&m)?, &extra)?.to_thin_qr();
        qr_worst = qr_worst.max(rel_fro(&qr.q.matmul(&qr.r)?, &m.concat(&extra, 1)?)?);
    }
    Ok(Outcome {
        id: 9,
        name: "QR and G updating",
        passed: g_worst <= 1e-11 && qr_worst <= 1e-12,
        detail: format!("g_append {g_worst:.2e} (<= 1e-11); qr_append {qr_worst:.2e} (<= 1e-12) over 500 triples"),
    })
}

pub fn baseline_exactness() -> Result<Outcome> {
    let mut worst = [0.0f64; 5];
    for seed in 0..5u64 {
        let h = random_mpo(6, 2, 2, -0.5, 300 + seed)?;
        let psi = random_mps(6, 2, 3, -0.5, 400 + seed)?;
        let want = dense_product(&h, &psi)?;
        let full = Truncation::MaxRank(6);
        let outs = [
            baselines::ctc_basic(&h, &psi, full)?.output,
            baselines::ctc_randomized(&h, &psi, 6, seed)?.output,
            baselines::zip_up(&h, &psi, full)?.output,
            baselines::density_matrix(&h, &psi, full)?.output,
            baselines::fitting(&h, &psi, full, &FittingOptions { seed, ..FittingOptions::default() })?.output,
        ];
        for (w, out) in worst.iter_mut().zip(&outs) {
            *w = w.max(dense_error(out, &want)?);
        }
    }
    let limits = [1e-10, 1e-10, 1e-10, 1e-8, 1e-10];
    let names = ["ctc", "rctc", "zipup", "density", "fitting"];
    let passed = worst.iter().zip(limits).all(|(w, l)| *w <= l);
    let detail = names
        .iter()
        .zip(worst)
        .map(|(n, w)| format!("{n} {w:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        id: 10,
        name: "baseline exactness",
        passed,
        detail,
    })
}

/// `X^{⊗n}` times a random diagonal MPO, applied to `|0…0⟩`. The product is
/// proportional to `|1…1⟩`, orthogonal to every two-site window of the
/// starting guess `|0…0⟩`, so fitting sees a zero projection at every step.
pub fn hard_instance(n: usize, bond: usize, seed: u64) -> Result<(Mpo, Mps)> {
    let diag = random_mpo(n, 2, bond, 0.5, seed)?;
    let sites = diag
        .sites()
        .iter()
        .map(|w| {
            let s = w.shape();
            // (X · diag(w))[o, i] = w[1-o, i] if 1-o == i.
            DenseTensor::from_fn(s, |ix| {
                if ix[1] + ix[2] == 1 {
                    w.get(&[ix[0], ix[2], ix[2], ix[3]])
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    let h = Mpo::new(sites)?;
    let zero = vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]; n];
    Ok((h, Mps::product(&zero)?))
}

pub fn fitting_failure_mode() -> Result<Outcome> {
    let (h, psi) = hard_instance(16, 4, 11)?;
    let opts = FittingOptions {
        max_sweeps: 10,
        guess: Some(psi.clone()),
        ..FittingOptions::default()
    };
    let fit = baselines::fitting(&h, &psi, Truncation::MaxRank(4), &opts)?;
    let src = baselines::src(&h, &psi, &TruncationPolicy::FixedBond { chi_bar: 4 }, 5)?;
    let src_err = product_relative_error(&src.output, &h, &psi)?;
    let fit_err = product_relative_error(&fit.output, &h, &psi)?;
    Ok(Outcome {
        id: 11,
        name: "fitting failure-mode surface",
        passed: !fit.converged && fit.sweeps == 10 && src_err <= 1e-6,
        detail: format!(
            "fitting converged={} after {} sweeps (error {fit_err:.2e}); src error {src_err:.2e} (<= 1e-6)",
            fit.converged, fit.sweeps
        ),
    })
}
