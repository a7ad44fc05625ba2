use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use foliage_rt::channel::{self, free_space_path_loss_db};
use foliage_rt::mesh::io::{write_obj, write_obj_merged, write_ply};
use foliage_rt::ray::TracerConfig;
use foliage_rt::sweep::{
    aggregate, build_crown, load_result, parse_config, run_sweep, simulate, write_aggregates, RunOptions, SweepAxis,
    SweepConfig,
};
use foliage_rt::{FoliageParams, Result};

#[derive(Parser)]
#[command(name = "foliage", version, about = "Stochastic tree-crown models and mmWave channel sweeps")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; omitted keys take the defaults listed by `foliage defaults`
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed for sweeps, realization seed for `generate` and `trace`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: `sweep.out_dir` or ./out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "FOLIAGE_THREADS")]
    threads: Option<usize>,
    /// 2e6 candidate rays and 25 interactions instead of the desk-scale budget
    #[arg(long, global = true)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Export the envelope and scatterer soup of one realization
    Generate {
        #[command(flatten)]
        point: PointOverride,
        #[arg(long, value_enum, default_value_t = MeshFormat::Obj)]
        format: MeshFormat,
    },
    /// Trace one realization and dump MPCs, CIR, PDP and CDF
    Trace {
        #[command(flatten)]
        point: PointOverride,
    },
    /// Run a multi-point, multi-realization sweep
    Sweep {
        /// Histogram bins for the occurrence matrices
        #[arg(long, default_value_t = foliage_rt::sweep::aggregate::DEFAULT_HISTOGRAM_BINS)]
        bins: usize,
    },
    /// Recompute aggregates and histograms from `records.csv` in --out
    Aggregate {
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Print the fully resolved configuration
    Defaults,
}

#[derive(Args)]
struct PointOverride {
    /// Triangle density, triangles/m^3
    #[arg(long)]
    rho: Option<f64>,
    /// Crown volume, m^3
    #[arg(long)]
    volume: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshFormat {
    Obj,
    Ply,
    Both,
}

impl Common {
    fn out_dir(&self, config: Option<&SweepConfig>) -> PathBuf {
        self.out.clone().or_else(|| config.and_then(|c| c.out_dir.clone())).unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn load_config(common: &Common) -> Result<SweepConfig> {
    let mut config = match &common.config {
        Some(path) => parse_config(path)?,
        None => SweepConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if common.full_scale {
        let t = TracerConfig::full_scale();
        config.simulation.tracer.n_candidate_rays = t.n_candidate_rays;
        config.simulation.tracer.max_depth = t.max_depth;
    }
    config.validate()?;
    Ok(config)
}

fn point_params(config: &SweepConfig, point: &PointOverride) -> Result<FoliageParams> {
    let mut p = config.foliage.with_seed(config.seed);
    if let Some(rho) = point.rho {
        p = p.with_rho(rho)?;
    }
    if let Some(v) = point.volume {
        p = p.with_v_target(v)?;
    }
    Ok(p)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn generate(config: &SweepConfig, point: &PointOverride, format: MeshFormat, out: &Path) -> Result<()> {
    let params = point_params(config, point)?;
    let (envelope, soup) = build_crown(&config.simulation, &params)?;
    fs::create_dir_all(out)?;
    if matches!(format, MeshFormat::Obj | MeshFormat::Both) {
        write_obj(&envelope, create(out, "envelope.obj")?)?;
        write_obj(soup.mesh(), create(out, "soup.obj")?)?;
        write_obj_merged(&envelope, soup.mesh(), create(out, "crown.obj")?)?;
    }
    if matches!(format, MeshFormat::Ply | MeshFormat::Both) {
        write_ply(&envelope, create(out, "envelope.ply")?)?;
        write_ply(soup.mesh(), create(out, "soup.ply")?)?;
    }
    println!(
        "envelope: {} vertices, {} faces, volume {:.3} m^3; soup: {} triangles -> {}",
        envelope.vertex_count(),
        envelope.face_count(),
        envelope.volume()?,
        soup.len(),
        out.display()
    );
    Ok(())
}

fn trace_one(config: &SweepConfig, point: &PointOverride, out: &Path) -> Result<()> {
    let params = point_params(config, point)?;
    let r = simulate(&config.simulation, &params)?;
    fs::create_dir_all(out)?;
    channel::write_mpcs_csv(&r.mpcs, create(out, "mpcs.csv")?)?;
    channel::write_cir_csv(&r.cir, create(out, "cir.csv")?)?;
    channel::write_pdp_csv(&r.pdp, create(out, "pdp.csv")?)?;
    let samples = channel::pdp_cdf_samples(&r.pdp, config.simulation.channel.gate_db);
    channel::write_cdf_csv(&channel::empirical_cdf(&samples)?, create(out, "cdf.csv")?)?;
    write_obj_merged(&r.envelope, r.soup.mesh(), create(out, "crown.obj")?)?;
    let summary = json!({
        "seed": params.seed(),
        "params": params,
        "rss_dbm": r.path_loss.rss_dbm,
        "pl_db": r.path_loss.pl_db,
        "drms_ns": r.drms * 1e9,
    });
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    let fspl = free_space_path_loss_db(config.simulation.geometry.distance(), config.simulation.geometry.carrier_hz);
    println!(
        "{} MPCs, {} scatterers: PL {:.2} dB (excess {:.2} dB), RSS {:.2} dBm, D_RMS {:.3} ns -> {}",
        r.mpcs.len(),
        r.soup.len(),
        r.path_loss.pl_db,
        r.path_loss.pl_db - fspl,
        r.path_loss.rss_dbm,
        r.drms * 1e9,
        out.display()
    );
    Ok(())
}

fn print_table(agg: &foliage_rt::sweep::Aggregates, axis: SweepAxis) {
    println!("{:>10} {:>4} {:>12} {:>10} {:>12} {:>10}", axis.name(), "n", "D_RMS/ns", "std", "RSS/dBm", "std");
    for s in &agg.points {
        println!(
            "{:>10} {:>4} {:>12.4} {:>10.4} {:>12.3} {:>10.3}",
            s.point_value, s.n, s.drms_ns.mean, s.drms_ns.std, s.rss_dbm.mean, s.rss_dbm.std
        );
    }
}

fn sweep(config: &SweepConfig, common: &Common, bins: usize) -> Result<()> {
    let out = common.out_dir(Some(config));
    let options = RunOptions { out_dir: Some(out.clone()), threads: common.threads, histogram_bins: Some(bins) };
    let result = run_sweep(config, &options)?;
    if !result.records.is_empty() {
        print_table(&aggregate(&result, bins)?, result.axis);
    }
    if !result.failures.is_empty() {
        eprintln!("{} realizations failed; see {}", result.failures.len(), out.join("failures.csv").display());
    }
    println!("{} records -> {}", result.records.len(), out.display());
    Ok(())
}

fn reaggregate(out: &Path, bins: Option<usize>) -> Result<()> {
    let (manifest, result) = load_result(out)?;
    let agg = aggregate(&result, bins.unwrap_or(manifest.histogram_bins))?;
    write_aggregates(&agg, out)?;
    print_table(&agg, result.axis);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    let common = &cli.common;
    match &cli.command {
        Command::Generate { point, format } => {
            let config = load_config(common)?;
            generate(&config, point, *format, &common.out_dir(Some(&config)))
        }
        Command::Trace { point } => {
            let config = load_config(common)?;
            trace_one(&config, point, &common.out_dir(Some(&config)))
        }
        Command::Sweep { bins } => sweep(&load_config(common)?, common, *bins),
        Command::Aggregate { bins } => reaggregate(&common.out_dir(None), *bins),
        Command::Defaults => {
            print!("{}", load_config(&cli.common)?.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
