use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{self, fmt9, ChannelImpulseResponse};
use crate::{Error, Result};

use super::aggregate::{aggregate, write_aggregates, DEFAULT_HISTOGRAM_BINS};
use super::config::{SweepAxis, SweepConfig};
use super::realization::simulate;

pub const RECORDS_FILE: &str = "records.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
const RECORDS_HEADER: &str = "point_value,realization,seed,rss_dbm,pl_db,drms_ns,n_mpcs";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub point_index: usize,
    pub point_value: f64,
    pub realization: usize,
    pub seed: u64,
    pub rss_dbm: f64,
    pub pl_db: f64,
    pub drms_ns: f64,
    pub n_mpcs: usize,
    /// Not written to `records.csv`; zero for records loaded from disk.
    pub wall_time_s: f64,
}

impl SweepRecord {
    /// Values are stored at the precision they are written with, so
    /// statistics computed in memory and from the CSV agree exactly.
    fn rounded(mut self) -> Self {
        let r = |x: f64| fmt9(x).parse::<f64>().expect("formatted float parses");
        self.rss_dbm = r(self.rss_dbm);
        self.pl_db = r(self.pl_db);
        self.drms_ns = r(self.drms_ns);
        self
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.point_value,
            self.realization,
            self.seed,
            fmt9(self.rss_dbm),
            fmt9(self.pl_db),
            fmt9(self.drms_ns),
            self.n_mpcs
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub point_index: usize,
    pub point_value: f64,
    pub realization: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub realizations: usize,
    /// Sorted by `(point_index, realization)`.
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
}

impl SweepResult {
    pub fn records_for(&self, point_index: usize) -> impl Iterator<Item = &SweepRecord> {
        self.records.iter().filter(move |r| r.point_index == point_index)
    }

    pub fn write_records<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{RECORDS_HEADER}")?;
        for r in &self.records {
            writeln!(w, "{}", r.csv_line())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub histogram_bins: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: SweepConfig,
    pub histogram_bins: usize,
}

impl Manifest {
    pub fn new(config: &SweepConfig, histogram_bins: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: config.clone(),
            histogram_bins,
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }
}

struct Job {
    point_index: usize,
    realization: usize,
    seed: u64,
}

enum Outcome {
    Done(SweepRecord, Option<ChannelImpulseResponse>),
    Failed(SweepFailure),
}

fn run_job(config: &SweepConfig, job: &Job) -> Outcome {
    let point_value = config.point_value(job.point_index);
    let started = Instant::now();
    let result = config
        .point_params(job.point_index)
        .and_then(|p| simulate(&config.simulation, &p.with_seed(job.seed)));
    match result {
        Ok(r) => {
            let record = SweepRecord {
                point_index: job.point_index,
                point_value,
                realization: job.realization,
                seed: job.seed,
                rss_dbm: r.path_loss.rss_dbm,
                pl_db: r.path_loss.pl_db,
                drms_ns: r.drms * 1e9,
                n_mpcs: r.mpcs.len(),
                wall_time_s: started.elapsed().as_secs_f64(),
            };
            Outcome::Done(record.rounded(), Some(r.cir))
        }
        Err(e) => {
            log::warn!("point {point_value} realization {} failed: {e}", job.realization);
            Outcome::Failed(SweepFailure {
                point_index: job.point_index,
                point_value,
                realization: job.realization,
                seed: job.seed,
                error: e.to_string(),
            })
        }
    }
}

/// Runs every `(point, realization)` job of the sweep.
///
/// With an output directory, records are appended to `records.csv` in
/// `(point, realization)` order as soon as they are available, whatever the
/// completion order. Rows already present from an interrupted run with the
/// same configuration are kept and their jobs skipped. Failed jobs are
/// listed in `failures.csv` and do not stop the sweep.
pub fn run_sweep(config: &SweepConfig, options: &RunOptions) -> Result<SweepResult> {
    config.validate()?;
    let bins = options.histogram_bins.unwrap_or(DEFAULT_HISTOGRAM_BINS);
    let jobs: Vec<Job> = (0..config.values.len())
        .flat_map(|p| {
            (0..config.realizations).map(move |r| Job { point_index: p, realization: r, seed: config.realization_seed(p, r) })
        })
        .collect();

    let mut slots: Vec<Option<Outcome>> = (0..jobs.len()).map(|_| None).collect();
    let mut writer = None;
    if let Some(dir) = &options.out_dir {
        fs::create_dir_all(dir)?;
        let manifest_path = dir.join(MANIFEST_FILE);
        if manifest_path.exists() {
            let previous = Manifest::load(dir)?;
            if previous.config != *config {
                return Err(Error::Config(format!("{} holds a sweep with a different configuration", dir.display())));
            }
        }
        for (k, record) in resume_records(config, &dir.join(RECORDS_FILE))? {
            slots[k] = Some(Outcome::Done(record, None));
        }
        let resumed = slots.iter().filter(|s| s.is_some()).count();
        if resumed > 0 {
            log::info!("resuming: {resumed} of {} records already present", jobs.len());
        }
        fs::write(&manifest_path, serde_json::to_string_pretty(&Manifest::new(config, bins))? + "\n")?;
        let mut w = BufWriter::new(File::create(dir.join(RECORDS_FILE))?);
        writeln!(w, "{RECORDS_HEADER}")?;
        writer = Some(w);
    }
    let pending: Vec<usize> = (0..jobs.len()).filter(|&k| slots[k].is_none()).collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut point_cirs: Vec<Vec<ChannelImpulseResponse>> = vec![Vec::new(); config.values.len()];
    let mut next = 0;
    let mut emit = |slots: &mut Vec<Option<Outcome>>, writer: &mut Option<BufWriter<File>>| -> Result<()> {
        while next < slots.len() {
            let Some(outcome) = slots[next].take() else { break };
            match outcome {
                Outcome::Done(record, cir) => {
                    if let Some(w) = writer.as_mut() {
                        writeln!(w, "{}", record.csv_line())?;
                        w.flush()?;
                    }
                    if let Some(cir) = cir {
                        point_cirs[record.point_index].push(cir);
                    }
                    records.push(record);
                }
                Outcome::Failed(f) => failures.push(f),
            }
            next += 1;
        }
        Ok(())
    };
    emit(&mut slots, &mut writer)?;

    let (tx, rx) = std::sync::mpsc::channel::<(usize, Outcome)>();
    std::thread::scope(|s| -> Result<()> {
        let jobs = &jobs;
        let pending = &pending;
        let threads = options.threads;
        s.spawn(move || execute(config, jobs, pending, threads, tx));
        for (k, outcome) in rx {
            slots[k] = Some(outcome);
            emit(&mut slots, &mut writer)?;
        }
        Ok(())
    })?;
    emit(&mut slots, &mut writer)?;
    drop(emit);
    if let Some(mut w) = writer.take() {
        w.flush()?;
    }

    let result = SweepResult {
        axis: config.axis,
        values: config.values.clone(),
        realizations: config.realizations,
        records,
        failures,
    };
    if let Some(dir) = &options.out_dir {
        write_failures(&result, dir)?;
        write_point_profiles(config, &point_cirs, dir)?;
        if !result.records.is_empty() {
            write_aggregates(&aggregate(&result, bins)?, dir)?;
        }
    }
    Ok(result)
}

fn execute(config: &SweepConfig, jobs: &[Job], pending: &[usize], threads: Option<usize>, tx: std::sync::mpsc::Sender<(usize, Outcome)>) {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let work = || {
            pending.par_iter().for_each_with(tx.clone(), |tx, &k| {
                let _ = tx.send((k, run_job(config, &jobs[k])));
            })
        };
        match threads.map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
            Some(Ok(pool)) => pool.install(work),
            Some(Err(e)) => {
                log::warn!("could not build a {}-thread pool ({e}); using the global pool", threads.unwrap_or(0));
                work()
            }
            None => work(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        for &k in pending {
            let _ = tx.send((k, run_job(config, &jobs[k])));
        }
    }
}

#[derive(Debug, Deserialize)]
struct RecordRow {
    point_value: f64,
    realization: usize,
    seed: u64,
    rss_dbm: f64,
    pl_db: f64,
    drms_ns: f64,
    n_mpcs: usize,
}

/// Complete rows of a previous run that belong to the job list, keyed by job
/// index. A torn last line is dropped.
fn resume_records(config: &SweepConfig, path: &Path) -> Result<Vec<(usize, SweepRecord)>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut text = fs::read_to_string(path)?;
    if !text.ends_with('\n') {
        text.truncate(text.rfind('\n').map_or(0, |i| i + 1));
    }
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let index: HashMap<(u64, usize), usize> = (0..config.values.len())
        .flat_map(|p| (0..config.realizations).map(move |r| ((config.point_value(p).to_bits(), r), p)))
        .collect();
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(text.as_bytes()).deserialize::<RecordRow>() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                log::warn!("ignoring unreadable row in {}: {e}", path.display());
                continue;
            }
        };
        let Some(&p) = index.get(&(row.point_value.to_bits(), row.realization)) else { continue };
        if row.seed != config.realization_seed(p, row.realization) {
            continue;
        }
        let record = record_from_row(p, row);
        out.push((p * config.realizations + record.realization, record));
    }
    Ok(out)
}

fn record_from_row(point_index: usize, row: RecordRow) -> SweepRecord {
    SweepRecord {
        point_index,
        point_value: row.point_value,
        realization: row.realization,
        seed: row.seed,
        rss_dbm: row.rss_dbm,
        pl_db: row.pl_db,
        drms_ns: row.drms_ns,
        n_mpcs: row.n_mpcs,
        wall_time_s: 0.0,
    }
}

/// Reads `records.csv` back against the sweep in `manifest.json`.
pub fn load_result(dir: &Path) -> Result<(Manifest, SweepResult)> {
    let manifest = Manifest::load(dir)?;
    let config = &manifest.config;
    let mut records = Vec::new();
    for row in csv::Reader::from_path(dir.join(RECORDS_FILE))?.deserialize::<RecordRow>() {
        let row = row?;
        let p = (0..config.values.len())
            .find(|&p| config.point_value(p) == row.point_value)
            .ok_or_else(|| Error::Config(format!("record for unknown sweep point {}", row.point_value)))?;
        records.push(record_from_row(p, row));
    }
    records.sort_by_key(|r| (r.point_index, r.realization));
    let result = SweepResult {
        axis: config.axis,
        values: config.values.clone(),
        realizations: config.realizations,
        records,
        failures: Vec::new(),
    };
    Ok((manifest, result))
}

fn write_failures(result: &SweepResult, dir: &Path) -> Result<()> {
    let path = dir.join(FAILURES_FILE);
    if result.failures.is_empty() {
        if path.exists() {
            fs::remove_file(path)?;
        }
        return Ok(());
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["point_value", "realization", "seed", "error"])?;
    for f in &result.failures {
        w.write_record([f.point_value.to_string(), f.realization.to_string(), f.seed.to_string(), f.error.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Realization-averaged PDP and its CDF per sweep point. Averages cover the
/// realizations computed in this invocation; resumed records carry no CIR.
fn write_point_profiles(config: &SweepConfig, cirs: &[Vec<ChannelImpulseResponse>], dir: &Path) -> Result<()> {
    let gate = config.simulation.channel.gate_db;
    for (p, point) in cirs.iter().enumerate() {
        if point.is_empty() {
            continue;
        }
        if point.len() != config.realizations {
            log::warn!("point {}: PDP covers {} of {} realizations", config.point_value(p), point.len(), config.realizations);
        }
        let pdp = channel::average_pdp(point)?;
        channel::write_pdp_csv(&pdp, BufWriter::new(File::create(dir.join(format!("pdp_point{p}.csv")))?))?;
        let samples = channel::pdp_cdf_samples(&pdp, gate);
        if !samples.is_empty() {
            let cdf = channel::empirical_cdf(&samples)?;
            channel::write_cdf_csv(&cdf, BufWriter::new(File::create(dir.join(format!("cdf_point{p}.csv")))?))?;
        }
    }
    Ok(())
}
