//! Result CSVs, per-order summaries and plot series.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::bench::{BenchResult, CellResult};
use crate::pipeline::Method;

pub const RESULTS_HEADER: &str =
    "method,snr_db,order,trials,pd,pf_emp,output_snr_db,confidence,err_f_pct,err_g_pct,wall_s";
pub const SUMMARY_HEADER: &str = "method,order,snr_points,pd,output_snr_db,confidence,err_f_pct,err_g_pct,pd_gain,output_snr_gain_db,confidence_gain";

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

fn row(c: &CellResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        c.method, c.snr_db, c.order, c.trials, c.pd, c.pf_emp, c.output_snr_db, c.confidence,
        c.err_f_pct, c.err_g_pct, c.wall_s
    )
}

/// Per-order means over the SNR grid, with gains relative to order 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub order: usize,
    pub snr_points: usize,
    pub pd: f64,
    pub output_snr_db: f64,
    pub confidence: f64,
    pub err_f_pct: f64,
    pub err_g_pct: f64,
    /// `None` when order 0 is not in the result.
    pub pd_gain: Option<f64>,
    pub output_snr_gain_db: Option<f64>,
    pub confidence_gain: Option<f64>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Table of per-order means. Noiseless cells are left out of the averages.
pub fn summarize(result: &BenchResult) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, usize)> = Vec::new();
    for c in &result.cells {
        if !keys.contains(&(c.method, c.order)) {
            keys.push((c.method, c.order));
        }
    }
    keys.sort_by_key(|&(m, o)| (m as u8, o));
    let base = |m: Method| -> Vec<&CellResult> {
        result
            .cells
            .iter()
            .filter(|c| c.method == m && c.order == 0 && c.snr_db.is_finite())
            .collect()
    };
    keys.into_iter()
        .map(|(method, order)| {
            let cells: Vec<&CellResult> = result
                .cells
                .iter()
                .filter(|c| c.method == method && c.order == order && c.snr_db.is_finite())
                .collect();
            let zero = base(method);
            let gain = |f: fn(&CellResult) -> f64| -> Option<f64> {
                let pairs: Vec<f64> = cells
                    .iter()
                    .filter_map(|c| zero.iter().find(|z| z.snr_db == c.snr_db).map(|z| f(c) - f(z)))
                    .collect();
                (!pairs.is_empty()).then(|| mean(pairs.into_iter()))
            };
            SummaryRow {
                method,
                order,
                snr_points: cells.len(),
                pd: mean(cells.iter().map(|c| c.pd)),
                output_snr_db: mean(cells.iter().map(|c| c.output_snr_db)),
                confidence: mean(cells.iter().map(|c| c.confidence)),
                err_f_pct: mean(cells.iter().map(|c| c.err_f_pct)),
                err_g_pct: mean(cells.iter().map(|c| c.err_g_pct)),
                pd_gain: gain(|c| c.pd),
                output_snr_gain_db: gain(|c| c.output_snr_db),
                confidence_gain: gain(|c| c.confidence),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.order,
            r.snr_points,
            r.pd,
            r.output_snr_db,
            r.confidence,
            r.err_f_pct,
            r.err_g_pct,
            opt(r.pd_gain),
            opt(r.output_snr_gain_db),
            opt(r.confidence_gain)
        );
    }
    s
}

/// Fixed-width table of the summary for terminals.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:>5} {:>7} {:>10} {:>10} {:>8} {:>8} {:>8} {:>10} {:>10}",
        "method", "order", "pd", "snr_out", "conf", "err_f%", "err_g%", "pd_gain", "snr_gain", "conf_gain"
    );
    let g = |v: Option<f64>, p: usize| v.map_or_else(|| "-".to_string(), |x| format!("{x:.p$}"));
    for r in rows {
        let _ = writeln!(
            s,
            "{:<6} {:>5} {:>7.4} {:>10.3} {:>10.4} {:>8.3} {:>8.3} {:>8} {:>10} {:>10}",
            r.method.to_string(),
            r.order,
            r.pd,
            r.output_snr_db,
            r.confidence,
            r.err_f_pct,
            r.err_g_pct,
            g(r.pd_gain, 4),
            g(r.output_snr_gain_db, 3),
            g(r.confidence_gain, 4)
        );
    }
    s
}

pub fn results_csv(result: &BenchResult) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for c in &result.cells {
        s.push_str(&row(c));
        s.push('\n');
    }
    s
}

/// Write `results.csv` and `summary.csv` into `dir`, returning their paths.
pub fn write_report(result: &BenchResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let results = dir.join(RESULTS_FILE);
    let summary = dir.join(SUMMARY_FILE);
    let mut f = std::fs::File::create(&results)?;
    f.write_all(results_csv(result).as_bytes())?;
    let mut f = std::fs::File::create(&summary)?;
    f.write_all(summary_csv(&summarize(result)).as_bytes())?;
    Ok(vec![results, summary])
}

fn field<T: FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: bad {name} `{s}`")))
}

/// Parse a results CSV written by [`write_report`].
pub fn read_report_csv<R: BufRead>(r: R) -> Result<BenchResult> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != RESULTS_HEADER {
        return Err(Error::Format(format!("expected header `{RESULTS_HEADER}`")));
    }
    let mut cells = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let no = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(Error::Format(format!("line {no}: expected 11 fields, got {}", f.len())));
        }
        cells.push(CellResult {
            method: f[0].trim().parse()?,
            snr_db: field(f[1], "snr_db", no)?,
            order: field(f[2], "order", no)?,
            trials: field(f[3], "trials", no)?,
            pd: field(f[4], "pd", no)?,
            pf_emp: field(f[5], "pf_emp", no)?,
            output_snr_db: field(f[6], "output_snr_db", no)?,
            confidence: field(f[7], "confidence", no)?,
            err_f_pct: field(f[8], "err_f_pct", no)?,
            err_g_pct: field(f[9], "err_g_pct", no)?,
            wall_s: field(f[10], "wall_s", no)?,
        });
    }
    Ok(BenchResult { cells, samples: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Pd,
    OutputSnr,
    Confidence,
    ErrF,
    ErrG,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pd" => Ok(Metric::Pd),
            "output_snr" => Ok(Metric::OutputSnr),
            "confidence" => Ok(Metric::Confidence),
            "err_f" => Ok(Metric::ErrF),
            "err_g" => Ok(Metric::ErrG),
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }
}

impl Metric {
    fn of(self, c: &CellResult) -> f64 {
        match self {
            Metric::Pd => c.pd,
            Metric::OutputSnr => c.output_snr_db,
            Metric::Confidence => c.confidence,
            Metric::ErrF => c.err_f_pct,
            Metric::ErrG => c.err_g_pct,
        }
    }
}

/// `(snr_db, value)` points of one method and order, ascending in SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub method: Method,
    pub order: usize,
    pub points: Vec<(f64, f64)>,
}

pub fn plot_data(result: &BenchResult, metric: &str) -> Result<Vec<Series>> {
    let metric: Metric = metric.parse()?;
    let mut series: Vec<Series> = Vec::new();
    for c in &result.cells {
        let point = (c.snr_db, metric.of(c));
        match series.iter_mut().find(|s| s.method == c.method && s.order == c.order) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                method: c.method,
                order: c.order,
                points: vec![point],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series.sort_by_key(|s| (s.method as u8, s.order));
    Ok(series)
}

/// Long-format CSV of [`plot_data`]: `method,order,snr_db,value`.
pub fn series_csv(series: &[Series]) -> String {
    let mut s = String::from("method,order,snr_db,value\n");
    for ser in series {
        for (x, y) in &ser.points {
            let _ = writeln!(s, "{},{},{},{}", ser.method, ser.order, x, y);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(order: usize, snr_db: f64, pd: f64) -> CellResult {
        CellResult {
            method: Method::Wht,
            snr_db,
            order,
            trials: 300,
            pd,
            pf_emp: 0.01,
            output_snr_db: 10.0 + order as f64,
            confidence: 0.5 * order as f64,
            err_f_pct: 10.0 - pd * 10.0,
            err_g_pct: 10.0 - pd * 9.0,
            wall_s: 0.125,
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_report(&BenchResult::default(), dir.path()).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text, format!("{RESULTS_HEADER}\n"));
    }

    #[test]
    fn single_cell_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let c = CellResult {
            pd: 1.0 / 3.0,
            output_snr_db: -1.0 / 7.0,
            ..cell(2, -4.0, 0.0)
        };
        let r = BenchResult { cells: vec![c.clone()], samples: None };
        let paths = write_report(&r, dir.path()).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back = read_report_csv(text.as_bytes()).unwrap();
        assert_eq!(back.cells, vec![c]);
    }

    #[test]
    fn non_finite_values_round_trip() {
        let c = CellResult {
            snr_db: f64::INFINITY,
            output_snr_db: f64::NEG_INFINITY,
            ..cell(0, 0.0, 1.0)
        };
        let text = results_csv(&BenchResult { cells: vec![c.clone()], samples: None });
        assert_eq!(read_report_csv(text.as_bytes()).unwrap().cells, vec![c]);
    }

    #[test]
    fn bad_csv_rejected() {
        assert!(read_report_csv("a,b\n".as_bytes()).is_err());
        let t = format!("{RESULTS_HEADER}\nwht,1,2\n");
        assert!(read_report_csv(t.as_bytes()).is_err());
    }

    #[test]
    fn summary_gains() {
        let cells = vec![cell(0, -2.0, 0.2), cell(1, -2.0, 0.5), cell(0, 0.0, 0.6), cell(1, 0.0, 0.7)];
        let rows = summarize(&BenchResult { cells, samples: None });
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].pd_gain, Some(0.0));
        assert!((rows[1].pd_gain.unwrap() - 0.2).abs() < 1e-12);
        assert!((rows[1].output_snr_gain_db.unwrap() - 1.0).abs() < 1e-12);
        assert!((rows[1].pd - 0.6).abs() < 1e-12);
        assert_eq!(summary_csv(&rows).lines().count(), 3);
        assert!(summary_table(&rows).contains("wht"));
    }

    #[test]
    fn plot_series_per_order_sorted() {
        let cells = vec![cell(0, 0.0, 0.6), cell(1, 0.0, 0.7), cell(0, -2.0, 0.2), cell(1, -2.0, 0.5)];
        let r = BenchResult { cells, samples: None };
        let s = plot_data(&r, "pd").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].points, vec![(-2.0, 0.2), (0.0, 0.6)]);
        assert_eq!(s[1].order, 1);
        assert!(matches!(plot_data(&r, "snr"), Err(Error::UnknownMetric(_))));
        assert_eq!(series_csv(&s).lines().count(), 5);
    }
}
