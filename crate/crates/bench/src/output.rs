use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::config::BenchConfig;
use crate::run::{BenchRecord, BenchRun};

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "param",
    "rel_error",
    "wall_time_s",
    "flops",
    "max_bond",
    "trial",
    "seed",
];

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(records: &[BenchRecord], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.method.clone(),
            fmt_f64(r.param),
            fmt_f64(r.rel_error),
            fmt_f64(r.wall_time_s),
            r.flops.to_string(),
            r.max_bond.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// The whole run as one JSON document: configuration, records, per-cell
/// summary and warnings.
pub fn write_json(config: &BenchConfig, run: &BenchRun, w: impl Write) -> Result<()> {
    let doc = serde_json::json!({
        "config": config,
        "records": run.records,
        "summary": summarize(&run.records),
        "warnings": run.warnings,
    });
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

/// Mean and sample standard deviation over the trials of one
/// (method, param) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub param: f64,
    pub trials: usize,
    pub rel_error_mean: f64,
    pub rel_error_std: f64,
    pub wall_time_mean: f64,
    pub wall_time_std: f64,
    pub flops_mean: f64,
    pub max_bond_mean: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per (method, param), in order of first appearance.
pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, u64), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.method.clone(), r.param.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let col = |f: fn(&BenchRecord) -> f64| g.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (rel_error_mean, rel_error_std) = mean_std(&col(|r| r.rel_error));
            let (wall_time_mean, wall_time_std) = mean_std(&col(|r| r.wall_time_s));
            SummaryRow {
                method: key.0.clone(),
                param: f64::from_bits(key.1),
                trials: g.len(),
                rel_error_mean,
                rel_error_std,
                wall_time_mean,
                wall_time_std,
                flops_mean: mean_std(&col(|r| r.flops as f64)).0,
                max_bond_mean: mean_std(&col(|r| r.max_bond as f64)).0,
            }
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "method",
        "param",
        "trials",
        "rel_error_mean",
        "rel_error_std",
        "wall_time_mean",
        "wall_time_std",
        "flops_mean",
        "max_bond_mean",
    ])?;
    for r in rows {
        out.write_record([
            r.method.clone(),
            fmt_f64(r.param),
            r.trials.to_string(),
            fmt_f64(r.rel_error_mean),
            fmt_f64(r.rel_error_std),
            fmt_f64(r.wall_time_mean),
            fmt_f64(r.wall_time_std),
            fmt_f64(r.flops_mean),
            fmt_f64(r.max_bond_mean),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes one series file per method into `dir`, each with columns
/// `param,wall_time_s,rel_error,rel_error_std` (trial means, sorted by
/// param), so that error can be plotted against either time or the sweep
/// parameter. `index.csv` lists the series files and is header-only when
/// there are no records. Returns the paths written, index first.
pub fn emit_plotdata(records: &[BenchRecord], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut by_method: BTreeMap<String, Vec<SummaryRow>> = BTreeMap::new();
    for row in summarize(records) {
        by_method.entry(row.method.clone()).or_default().push(row);
    }
    let index_path = dir.join("index.csv");
    let mut index = csv::Writer::from_path(&index_path)?;
    index.write_record(["method", "file"])?;
    let mut written = vec![index_path];
    for (method, mut rows) in by_method {
        rows.sort_by(|a, b| a.param.total_cmp(&b.param));
        let name = format!("{method}.csv");
        let path = dir.join(&name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["param", "wall_time_s", "rel_error", "rel_error_std"])?;
        for r in rows {
            w.write_record([
                fmt_f64(r.param),
                fmt_f64(r.wall_time_mean),
                fmt_f64(r.rel_error_mean),
                fmt_f64(r.rel_error_std),
            ])?;
        }
        w.flush()?;
        index.write_record([method.as_str(), name.as_str()])?;
        written.push(path);
    }
    index.flush()?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: &str, param: f64, err: f64, trial: usize) -> BenchRecord {
        BenchRecord {
            method: method.into(),
            param,
            rel_error: err,
            wall_time_s: 0.1 + err,
            flops: 1000 + trial as u64,
            max_bond: param as usize,
            trial,
            seed: 42 + trial as u64,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let recs = vec![
            rec("src", 5.0, 0.1 + 0.2, 0),
            rec("ctc", 1e-4, std::f64::consts::PI * 1e-17, 1),
            rec("zipup", 10.0, f64::MIN_POSITIVE, 2),
        ];
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,param,rel_error,wall_time_s,flops,max_bond,trial,seed\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn summary_statistics() {
        let recs = vec![rec("src", 5.0, 1.0, 0), rec("src", 5.0, 3.0, 1), rec("ctc", 5.0, 2.0, 0)];
        let rows = summarize(&recs);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, "src");
        assert_eq!(rows[0].trials, 2);
        assert_eq!(rows[0].rel_error_mean, 2.0);
        assert!((rows[0].rel_error_std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(rows[1].rel_error_std, 0.0);
    }

    #[test]
    fn plotdata_files() {
        let dir = tempfile::tempdir().unwrap();
        let empty = emit_plotdata(&[], dir.path().join("empty")).unwrap();
        assert_eq!(empty.len(), 1);
        assert_eq!(fs::read_to_string(&empty[0]).unwrap(), "method,file\n");

        let mut recs = Vec::new();
        for m in ["src", "ctc"] {
            for p in [3.0, 1.0, 2.0] {
                recs.push(rec(m, p, p * 0.1, 0));
            }
        }
        let files = emit_plotdata(&recs, dir.path().join("full")).unwrap();
        assert_eq!(files.len(), 3);
        for f in &files[1..] {
            let mut rdr = csv::Reader::from_path(f).unwrap();
            let params: Vec<f64> = rdr
                .records()
                .map(|r| r.unwrap()[0].parse().unwrap())
                .collect();
            assert_eq!(params, vec![1.0, 2.0, 3.0]);
        }
    }
}
