//! Trial rows, summary statistics and their CSV / Markdown renderings.

use std::io::Write;

use serde::{Deserialize, Serialize};

/// One CSV row. Column order is part of the file format.
///
/// `opt_lb` is the best certified lower bound on the optimum (the larger of
/// `max(vol, span)` and the integral of per-interval bounds); `opt_exact` is
/// empty when some interval could not be solved exactly. `ratio` divides by
/// `opt_exact` when present and by `opt_lb` otherwise, so it never
/// understates the competitive ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub family: String,
    pub params: String,
    pub seed: u64,
    pub alg: String,
    pub alpha: Option<f64>,
    pub f: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub alg_cost: f64,
    pub opt_lb: f64,
    pub opt_exact: Option<f64>,
    pub opt_ub: f64,
    pub ratio: Option<f64>,
    pub mig_unit: u64,
    pub mig_size: f64,
    pub max_pertime_ratio: Option<f64>,
    pub phases: u32,
}

pub const CSV_COLUMNS: [&str; 16] = [
    "family",
    "params",
    "seed",
    "alg",
    "alpha",
    "f",
    "C",
    "alg_cost",
    "opt_lb",
    "opt_exact",
    "opt_ub",
    "ratio",
    "mig_unit",
    "mig_size",
    "max_pertime_ratio",
    "phases",
];

/// Mean with sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Option<Stat> {
        let xs: Vec<f64> = xs.into_iter().collect();
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Stat { n, mean, sd, min, max })
    }

    /// Three standard errors of the mean.
    pub fn three_se(&self) -> f64 {
        3.0 * self.sd / (self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub failed: usize,
    pub exact_opt: usize,
    pub alg_cost: Option<Stat>,
    pub ratio: Option<Stat>,
    pub mig_unit: Option<Stat>,
    pub mig_size: Option<Stat>,
    pub worst_pertime_ratio: Option<f64>,
}

impl Summary {
    pub fn from_rows(rows: &[TrialRow], failed: usize) -> Summary {
        Summary {
            rows: rows.len(),
            failed,
            exact_opt: rows.iter().filter(|r| r.opt_exact.is_some()).count(),
            alg_cost: Stat::of(rows.iter().map(|r| r.alg_cost)),
            ratio: Stat::of(rows.iter().filter_map(|r| r.ratio)),
            mig_unit: Stat::of(rows.iter().map(|r| r.mig_unit as f64)),
            mig_size: Stat::of(rows.iter().map(|r| r.mig_size)),
            worst_pertime_ratio: rows.iter().filter_map(|r| r.max_pertime_ratio).reduce(f64::max),
        }
    }
}

pub fn write_csv<W: Write>(rows: &[TrialRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> csv::Result<Vec<TrialRow>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{:.4}", v)).unwrap_or_else(|| "-".into())
}

/// Per-trial Markdown table. Empty input still yields the header.
pub fn markdown_rows(rows: &[TrialRow]) -> String {
    let mut s = String::new();
    s.push_str("| seed | alg | alg_cost | opt | ratio | mig_unit | mig_size | max_pertime | phases |\n");
    s.push_str("|---:|---|---:|---:|---:|---:|---:|---:|---:|\n");
    for r in rows {
        let opt = match r.opt_exact {
            Some(v) => format!("{:.4}", v),
            None => format!(">= {:.4}", r.opt_lb),
        };
        s.push_str(&format!(
            "| {} | {} | {:.4} | {} | {} | {} | {:.4} | {} | {} |\n",
            r.seed,
            r.alg,
            r.alg_cost,
            opt,
            cell(r.ratio),
            r.mig_unit,
            r.mig_size,
            cell(r.max_pertime_ratio),
            r.phases
        ));
    }
    s
}

pub fn markdown_summary(summary: &Summary) -> String {
    let mut s = format!(
        "trials: {}, failed: {}, exact OPT: {}\n\n| metric | n | mean | sd | 3se | min | max |\n|---|---:|---:|---:|---:|---:|---:|\n",
        summary.rows, summary.failed, summary.exact_opt
    );
    for (name, st) in [
        ("alg_cost", summary.alg_cost),
        ("ratio", summary.ratio),
        ("mig_unit", summary.mig_unit),
        ("mig_size", summary.mig_size),
    ] {
        match st {
            Some(t) => s.push_str(&format!(
                "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
                name,
                t.n,
                t.mean,
                t.sd,
                t.three_se(),
                t.min,
                t.max
            )),
            None => s.push_str(&format!("| {} | 0 | - | - | - | - | - |\n", name)),
        }
    }
    s.push_str(&format!("\nworst per-time ratio: {}\n", cell(summary.worst_pertime_ratio)));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, cost: f64) -> TrialRow {
        TrialRow {
            family: "fig2".into(),
            params: "k=2;mu=3".into(),
            seed,
            alg: "firstfit".into(),
            alpha: None,
            f: None,
            c: None,
            alg_cost: cost,
            opt_lb: 2.0,
            opt_exact: Some(4.0),
            opt_ub: 6.0,
            ratio: Some(cost / 4.0),
            mig_unit: 0,
            mig_size: 0.0,
            max_pertime_ratio: Some(1.5),
            phases: 0,
        }
    }

    #[test]
    fn csv_header_and_roundtrip() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), CSV_COLUMNS.join(","));

        let rows = vec![row(0, 6.0), row(1, 8.0)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert!(text.lines().nth(1).unwrap().contains(",,,"));
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn summary_is_recomputable() {
        let rows = vec![row(0, 6.0), row(1, 8.0), row(2, 10.0)];
        let s = Summary::from_rows(&rows, 0);
        let a = s.alg_cost.unwrap();
        assert_eq!(a.mean, 8.0);
        assert_eq!(a.sd, 2.0);
        assert_eq!((a.min, a.max), (6.0, 10.0));
        assert_eq!(Summary::from_rows(&rows, 0), s);
        assert_eq!(s.worst_pertime_ratio, Some(1.5));
    }

    #[test]
    fn empty_markdown_has_headers() {
        assert_eq!(markdown_rows(&[]).lines().count(), 2);
        let s = Summary::from_rows(&[], 0);
        assert!(markdown_summary(&s).contains("| alg_cost | 0 |"));
    }
}
