use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::channel::fmt9;
use crate::{Error, Result};

use super::run::SweepResult;

pub const DEFAULT_HISTOGRAM_BINS: usize = 20;
pub const AGGREGATES_FILE: &str = "aggregates.csv";
pub const DRMS_HISTOGRAM_FILE: &str = "histogram.csv";
pub const RSS_HISTOGRAM_FILE: &str = "histogram_rss.csv";

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub point_value: f64,
    pub n: usize,
    pub drms_ns: Moments,
    pub rss_dbm: Moments,
    pub pl_db: Moments,
}

/// Occurrence matrix: one row per sweep point, common bin edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub point_values: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
}

impl Histogram {
    /// `n_bins` equal bins spanning the observed range; a degenerate range
    /// `v` becomes `[v - 0.5, v + 0.5]`.
    pub fn new(rows: &[(f64, Vec<f64>)], n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::range("n_bins", "must be >= 1"));
        }
        let all = rows.iter().flat_map(|(_, v)| v.iter().copied());
        let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Empty("histogram samples"));
        }
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        let width = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|k| if k == n_bins { hi } else { lo + k as f64 * width }).collect();
        let counts = rows
            .iter()
            .map(|(_, values)| {
                let mut row = vec![0u64; n_bins];
                for &x in values {
                    let k = (((x - lo) / width).floor() as usize).min(n_bins - 1);
                    row[k] += 1;
                }
                row
            })
            .collect();
        Ok(Self { edges, point_values: rows.iter().map(|(p, _)| *p).collect(), counts })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "point_value,bin_lo,bin_hi,count")?;
        for (p, row) in self.point_values.iter().zip(&self.counts) {
            for (k, c) in row.iter().enumerate() {
                writeln!(w, "{p},{},{},{c}", fmt9(self.edges[k]), fmt9(self.edges[k + 1]))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub points: Vec<PointStats>,
    pub drms_histogram: Histogram,
    pub rss_histogram: Histogram,
}

impl Aggregates {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "point_value,n,drms_mean_ns,drms_std_ns,rss_mean_dbm,rss_std_dbm,pl_mean_db,pl_std_db")?;
        for s in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                s.point_value,
                s.n,
                fmt9(s.drms_ns.mean),
                fmt9(s.drms_ns.std),
                fmt9(s.rss_dbm.mean),
                fmt9(s.rss_dbm.std),
                fmt9(s.pl_db.mean),
                fmt9(s.pl_db.std)
            )?;
        }
        Ok(())
    }

    pub fn point(&self, point_value: f64) -> Option<&PointStats> {
        self.points.iter().find(|s| s.point_value == point_value)
    }
}

/// Per-point moments of D_RMS, RSS and PL plus D_RMS and RSS occurrence
/// matrices. Points without records are left out.
pub fn aggregate(result: &SweepResult, n_bins: usize) -> Result<Aggregates> {
    if result.records.is_empty() {
        return Err(Error::Empty("sweep records"));
    }
    let mut points = Vec::new();
    let mut drms_rows = Vec::new();
    let mut rss_rows = Vec::new();
    for (p, &value) in result.values.iter().enumerate() {
        let recs: Vec<_> = result.records_for(p).collect();
        if recs.is_empty() {
            log::warn!("sweep point {value} has no records");
            continue;
        }
        let point_value = recs[0].point_value;
        let drms: Vec<f64> = recs.iter().map(|r| r.drms_ns).collect();
        let rss: Vec<f64> = recs.iter().map(|r| r.rss_dbm).collect();
        let pl: Vec<f64> = recs.iter().map(|r| r.pl_db).collect();
        points.push(PointStats {
            point_value,
            n: recs.len(),
            drms_ns: Moments::of(&drms).expect("nonempty"),
            rss_dbm: Moments::of(&rss).expect("nonempty"),
            pl_db: Moments::of(&pl).expect("nonempty"),
        });
        drms_rows.push((point_value, drms));
        rss_rows.push((point_value, rss));
    }
    Ok(Aggregates {
        points,
        drms_histogram: Histogram::new(&drms_rows, n_bins)?,
        rss_histogram: Histogram::new(&rss_rows, n_bins)?,
    })
}

pub fn write_aggregates(agg: &Aggregates, dir: &Path) -> Result<()> {
    let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    agg.write_csv(open(AGGREGATES_FILE)?)?;
    agg.drms_histogram.write_csv(open(DRMS_HISTOGRAM_FILE)?)?;
    agg.rss_histogram.write_csv(open(RSS_HISTOGRAM_FILE)?)?;
    Ok(())
}

/// Recomputes the aggregates of a result directory from `records.csv` and
/// checks them against the emitted `aggregates.csv` and histograms.
pub fn verify_aggregates(dir: &Path) -> Result<Aggregates> {
    let (manifest, result) = super::run::load_result(dir)?;
    let agg = aggregate(&result, manifest.histogram_bins)?;
    let checks: [(&str, Box<dyn Fn(&mut Vec<u8>) -> Result<()>>); 3] = [
        (AGGREGATES_FILE, Box::new(|b| agg.write_csv(b))),
        (DRMS_HISTOGRAM_FILE, Box::new(|b| agg.drms_histogram.write_csv(b))),
        (RSS_HISTOGRAM_FILE, Box::new(|b| agg.rss_histogram.write_csv(b))),
    ];
    for (name, render) in checks {
        let mut expected = Vec::new();
        render(&mut expected)?;
        if std::fs::read(dir.join(name))? != expected {
            return Err(Error::Config(format!("{name} does not match the records")));
        }
    }
    Ok(agg)
}
