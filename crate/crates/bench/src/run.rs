use serde::{Deserialize, Serialize};

use mpomps::baselines::{self, FittingOptions, MethodReport};
use mpomps::io::{self, Network};
use mpomps::mps::{product_relative_error, relative_distance};
use mpomps::random::{random_mpo, random_mps};
use mpomps::src::{AdaptiveParams, TruncationPolicy};
use mpomps::{Mpo, Mps, Truncation};

use crate::config::{BenchConfig, Instance, Method, Reference, Sweep};
use crate::error::{usage, Result};

/// One row of benchmark output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    /// Target bond dimension or relative tolerance.
    pub param: f64,
    pub rel_error: f64,
    pub wall_time_s: f64,
    pub flops: u64,
    pub max_bond: usize,
    pub trial: usize,
    /// Seed of the method's own randomness for this row.
    pub seed: u64,
}

#[derive(Clone, Debug, Default)]
pub struct BenchRun {
    pub records: Vec<BenchRecord>,
    pub warnings: Vec<String>,
}

/// A single sweep point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    ChiBar(usize),
    Tolerance(f64),
}

impl Point {
    pub fn param(self) -> f64 {
        match self {
            Point::ChiBar(c) => c as f64,
            Point::Tolerance(t) => t,
        }
    }
}

fn points(sweep: &Sweep) -> Vec<Point> {
    match sweep {
        Sweep::ChiBar(v) => v.iter().map(|&c| Point::ChiBar(c)).collect(),
        Sweep::Tolerance(v) => v.iter().map(|&t| Point::Tolerance(t)).collect(),
    }
}

/// Deterministic seed stream: every row gets its own seed from the
/// configuration seed and its coordinates, so results do not depend on the
/// order rows are computed in.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    tags.iter().fold(splitmix(seed), |acc, &t| splitmix(acc ^ splitmix(t)))
}

/// The adaptive policy used for SRC in tolerance sweeps.
pub fn adaptive_policy(tau_rel: f64) -> TruncationPolicy {
    TruncationPolicy::Adaptive(AdaptiveParams {
        final_round: true,
        ..AdaptiveParams::relative(tau_rel)
    })
}

/// Runs one method at one sweep point.
pub fn run_method(
    method: Method,
    point: Point,
    h: &Mpo,
    psi: &Mps,
    seed: u64,
    fitting_sweeps: usize,
) -> Result<MethodReport> {
    let fit = FittingOptions {
        max_sweeps: fitting_sweeps,
        seed,
        ..FittingOptions::default()
    };
    let report = match point {
        Point::ChiBar(c) => {
            let cut = Truncation::MaxRank(c);
            match method {
                Method::Src => baselines::src(h, psi, &TruncationPolicy::FixedBond { chi_bar: c }, seed)?,
                Method::SrcOversampled => baselines::src(h, psi, &TruncationPolicy::oversampled(c), seed)?,
                Method::RandomizedCtc => baselines::ctc_randomized(h, psi, c, seed)?,
                Method::Ctc => baselines::ctc_basic(h, psi, cut)?,
                Method::ZipUp => baselines::zip_up(h, psi, cut)?,
                Method::Density => baselines::density_matrix(h, psi, cut)?,
                Method::Fitting => baselines::fitting(h, psi, cut, &fit)?,
            }
        }
        Point::Tolerance(t) => {
            let cut = Truncation::Tolerance(t);
            match method {
                Method::Src => baselines::src(h, psi, &adaptive_policy(t), seed)?,
                Method::Ctc => baselines::ctc_basic(h, psi, cut)?,
                Method::ZipUp => baselines::zip_up(h, psi, cut)?,
                Method::Density => baselines::density_matrix(h, psi, cut)?,
                Method::Fitting => baselines::fitting(h, psi, cut, &fit)?,
                Method::SrcOversampled | Method::RandomizedCtc => {
                    return Err(usage(format!("method `{method}` has no tolerance mode")));
                }
            }
        }
    };
    Ok(report)
}

/// Stored entries of the exact product `Hψ`.
pub fn exact_product_entries(h: &Mpo, psi: &Mps) -> u128 {
    let (hb, pb, dims) = (h.bonds(), psi.bonds(), psi.phys_dims());
    (0..dims.len())
        .map(|j| (hb[j] * pb[j]) as u128 * dims[j] as u128 * (hb[j + 1] * pb[j + 1]) as u128)
        .sum()
}

enum Target {
    Ctc(Mps),
    Exact,
}

impl Target {
    fn error(&self, out: &Mps, h: &Mpo, psi: &Mps) -> Result<f64> {
        Ok(match self {
            Target::Ctc(r) => relative_distance(out, r)?,
            Target::Exact => product_relative_error(out, h, psi)?,
        })
    }
}

/// Reference tolerance for the CTC reference.
const MACHINE_TOLERANCE: f64 = 1e-14;

fn load_pair(mpo: &std::path::Path, mps: &std::path::Path) -> Result<(Mpo, Mps)> {
    let h = match io::load(mpo)? {
        Network::Mpo(h) => h,
        other => return Err(usage(format!("{} holds a {}, expected an mpo", mpo.display(), other.kind()))),
    };
    let psi = match io::load(mps)? {
        Network::Mps(psi) => psi,
        other => return Err(usage(format!("{} holds a {}, expected an mps", mps.display(), other.kind()))),
    };
    Ok((h, psi))
}

/// Operator and state for one trial of a synthetic ensemble.
pub fn synthetic_instance(n: usize, d: usize, chi: usize, bond_d: usize, alpha: f64, seed: u64, trial: usize) -> Result<(Mpo, Mps)> {
    let base = derive_seed(seed, &[u64::MAX, trial as u64]);
    let h = random_mpo(n, d, bond_d, alpha, derive_seed(base, &[1]))?;
    let psi = random_mps(n, d, chi, alpha, derive_seed(base, &[2]))?;
    Ok((h, psi))
}

/// Runs every (trial, point, method) combination serially. Wall time covers
/// the method call only; instance generation and error evaluation are
/// excluded.
pub fn run_bench(config: &BenchConfig) -> Result<BenchRun> {
    config.validate()?;
    let mut run = BenchRun::default();
    let fixed = match &config.instance {
        Instance::Files { mpo, mps } => {
            let pair = load_pair(mpo, mps)?;
            pair.0.check_acts_on(&pair.1).map_err(|e| usage(e.to_string()))?;
            Some(pair)
        }
        Instance::Synthetic { .. } => None,
    };
    let pts = points(&config.sweep);
    for trial in 0..config.trials {
        let (h, psi) = match (&fixed, &config.instance) {
            (Some((h, psi)), _) => (h.clone(), psi.clone()),
            (None, &Instance::Synthetic { n, d, chi, bond_d, alpha }) => {
                synthetic_instance(n, d, chi, bond_d, alpha, config.seed, trial)?
            }
            _ => unreachable!("file instances are loaded up front"),
        };
        let target = match config.reference {
            Reference::Exact => Target::Exact,
            Reference::Ctc => {
                let entries = exact_product_entries(&h, &psi);
                if entries <= config.reference_cap as u128 {
                    let exact = h.apply_exact(&psi)?;
                    Target::Ctc(exact.truncate(Truncation::Tolerance(MACHINE_TOLERANCE))?)
                } else {
                    let msg = format!(
                        "trial {trial}: exact product has {entries} entries (cap {}); measuring errors against the exact product through environments",
                        config.reference_cap
                    );
                    if !run.warnings.contains(&msg) {
                        run.warnings.push(msg);
                    }
                    Target::Exact
                }
            }
        };
        for (pi, &point) in pts.iter().enumerate() {
            for &method in &config.methods {
                let seed = derive_seed(config.seed, &[method as u64, pi as u64, trial as u64]);
                let report = run_method(method, point, &h, &psi, seed, config.fitting_sweeps)?;
                if method == Method::Fitting && !report.converged {
                    run.warnings.push(format!(
                        "trial {trial}: fitting did not converge at {} after {} sweeps",
                        point.param(),
                        report.sweeps
                    ));
                }
                let rel_error = target.error(&report.output, &h, &psi)?;
                run.records.push(BenchRecord {
                    method: method.name().to_string(),
                    param: point.param(),
                    rel_error,
                    wall_time_s: report.wall_time,
                    flops: report.flops,
                    max_bond: report.max_bond,
                    trial,
                    seed,
                });
            }
        }
    }
    Ok(run)
}
