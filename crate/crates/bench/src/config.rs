use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{usage, BenchError, Result};

/// Methods the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// SRC at the target bond, no oversampling. Adaptive in tolerance mode.
    #[serde(rename = "src")]
    Src,
    /// SRC with the default oversampling followed by rounding.
    #[serde(rename = "src-os")]
    SrcOversampled,
    /// Randomized contract-then-compress.
    #[serde(rename = "rctc")]
    RandomizedCtc,
    #[serde(rename = "ctc")]
    Ctc,
    #[serde(rename = "zipup")]
    ZipUp,
    #[serde(rename = "density")]
    Density,
    #[serde(rename = "fitting")]
    Fitting,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Src,
        Method::SrcOversampled,
        Method::RandomizedCtc,
        Method::Ctc,
        Method::ZipUp,
        Method::Density,
        Method::Fitting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Src => "src",
            Method::SrcOversampled => "src-os",
            Method::RandomizedCtc => "rctc",
            Method::Ctc => "ctc",
            Method::ZipUp => "zipup",
            Method::Density => "density",
            Method::Fitting => "fitting",
        }
    }

    /// Whether the method has a tolerance-driven variant.
    pub fn supports_tolerance(self) -> bool {
        !matches!(self, Method::SrcOversampled | Method::RandomizedCtc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                usage(format!("unknown method `{s}` (known: {})", known.join(", ")))
            })
    }
}

/// Comma-separated method list.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Method = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Points at which each method is run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    ChiBar(Vec<usize>),
    Tolerance(Vec<f64>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::ChiBar(v) => v.len(),
            Sweep::Tolerance(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The sweep values as written to the `param` column.
    pub fn params(&self) -> Vec<f64> {
        match self {
            Sweep::ChiBar(v) => v.iter().map(|&c| c as f64).collect(),
            Sweep::Tolerance(v) => v.clone(),
        }
    }
}

/// `start:stop:step` (inclusive) or a comma list of bond dimensions.
pub fn parse_chi_bar(s: &str) -> Result<Vec<usize>> {
    let bad = || usage(format!("cannot parse bond sweep `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let values: Vec<usize> = match parts.as_slice() {
        [start, stop] | [start, stop, _] => {
            let start: usize = start.trim().parse().map_err(|_| bad())?;
            let stop: usize = stop.trim().parse().map_err(|_| bad())?;
            let step: usize = match parts.get(2) {
                Some(p) => p.trim().parse().map_err(|_| bad())?,
                None => 1,
            };
            if step == 0 || stop < start {
                return Err(bad());
            }
            (start..=stop).step_by(step).collect()
        }
        [list] => list
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?,
        _ => return Err(bad()),
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

/// Comma list of relative tolerances.
pub fn parse_tolerances(s: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("cannot parse tolerance `{p}`")))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(usage("empty tolerance list"));
    }
    Ok(values)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(usage(format!("unknown format `{other}` (csv or json)"))),
        }
    }
}

/// What errors are measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Contract-then-compress at machine tolerance, computed once per trial.
    /// Falls back to `Exact` with a warning when the exact product exceeds
    /// [`BenchConfig::reference_cap`].
    #[default]
    Ctc,
    /// The exact product, through environment contractions only.
    Exact,
}

impl FromStr for Reference {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ctc" => Ok(Reference::Ctc),
            "exact" => Ok(Reference::Exact),
            other => Err(usage(format!("unknown reference `{other}` (ctc or exact)"))),
        }
    }
}

/// Where the operator and state come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instance {
    /// Random ensemble with entries uniform on `[alpha, 1]`, fresh per trial.
    Synthetic {
        n: usize,
        d: usize,
        chi: usize,
        bond_d: usize,
        alpha: f64,
    },
    /// A fixed pair of TNC1 files; only the method seeds change per trial.
    Files { mpo: PathBuf, mps: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub instance: Instance,
    pub methods: Vec<Method>,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub reference: Reference,
    /// Largest exact product, in stored entries, used for the CTC reference.
    pub reference_cap: usize,
    pub fitting_sweeps: usize,
}

pub const DEFAULT_REFERENCE_CAP: usize = 1 << 26;

impl BenchConfig {
    pub fn synthetic(n: usize, d: usize, chi: usize, bond_d: usize, alpha: f64) -> Self {
        Self {
            instance: Instance::Synthetic {
                n,
                d,
                chi,
                bond_d,
                alpha,
            },
            methods: vec![Method::Src],
            sweep: Sweep::ChiBar(vec![chi]),
            trials: 5,
            seed: 0,
            reference: Reference::Ctc,
            reference_cap: DEFAULT_REFERENCE_CAP,
            fitting_sweeps: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(usage("trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(usage("at least one method is required"));
        }
        if self.fitting_sweeps == 0 {
            return Err(usage("fitting sweeps must be at least 1"));
        }
        match &self.sweep {
            Sweep::ChiBar(v) if v.is_empty() || v.contains(&0) => {
                return Err(usage("bond sweep values must be positive"));
            }
            Sweep::Tolerance(v) if v.is_empty() || v.iter().any(|t| !(*t > 0.0 && t.is_finite())) => {
                return Err(usage("tolerances must be positive"));
            }
            Sweep::Tolerance(_) => {
                if let Some(m) = self.methods.iter().find(|m| !m.supports_tolerance()) {
                    return Err(usage(format!("method `{m}` has no tolerance mode")));
                }
            }
            _ => {}
        }
        if let Instance::Synthetic { n, d, chi, bond_d, alpha } = self.instance {
            if n < 2 || d < 2 || chi == 0 || bond_d == 0 {
                return Err(usage("need n >= 2, d >= 2, chi >= 1 and D >= 1"));
            }
            if !(-1.0..=1.0).contains(&alpha) {
                return Err(usage("alpha must lie in [-1, 1]"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bond_sweeps() {
        assert_eq!(parse_chi_bar("5:30:5").unwrap(), vec![5, 10, 15, 20, 25, 30]);
        assert_eq!(parse_chi_bar("2:4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_chi_bar("4,8, 16").unwrap(), vec![4, 8, 16]);
        assert!(parse_chi_bar("5:1").is_err());
        assert!(parse_chi_bar("1:5:0").is_err());
        assert!(parse_chi_bar("x").is_err());
    }

    #[test]
    fn methods_and_tolerances() {
        assert_eq!(
            parse_methods("src,zipup,ctc").unwrap(),
            vec![Method::Src, Method::ZipUp, Method::Ctc]
        );
        assert!(matches!(parse_methods("src,magic"), Err(BenchError::Usage(_))));
        assert_eq!(parse_tolerances("1e-2,1e-4").unwrap(), vec![1e-2, 1e-4]);
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn validation() {
        let mut c = BenchConfig::synthetic(10, 2, 4, 2, -0.5);
        c.validate().unwrap();
        c.trials = 0;
        assert!(c.validate().is_err());
        c.trials = 1;
        c.sweep = Sweep::Tolerance(vec![1e-3]);
        c.methods = vec![Method::RandomizedCtc];
        assert!(c.validate().is_err());
        c.methods = vec![Method::Src, Method::ZipUp];
        c.validate().unwrap();
    }
}
