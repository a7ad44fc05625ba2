use std::fs;
use std::path::Path;

use foliage_rt::sweep::{
    aggregate, parse_config_str, run_sweep, simulate, verify_aggregates, RunOptions, SweepConfig,
};

fn desk(text: &str) -> SweepConfig {
    let fast = "[tracer]\nn_candidate_rays = 20000\nmax_depth = 4\n";
    parse_config_str(&format!("{fast}{text}")).unwrap()
}

fn in_dir(dir: &Path) -> RunOptions {
    RunOptions { out_dir: Some(dir.to_owned()), ..RunOptions::default() }
}

#[test]
fn empty_crown_record_is_free_space() {
    let c = desk("[sweep]\naxis = \"rho\"\nvalues = [0.0]\nrealizations = 1\n");
    let r = run_sweep(&c, &RunOptions::default()).unwrap();
    assert_eq!(r.records.len(), 1);
    let rec = &r.records[0];
    assert!((rec.pl_db - 100.05).abs() < 0.01);
    assert!(rec.drms_ns < 0.5);
    assert_eq!(rec.n_mpcs, 1);
}

#[test]
fn record_count_is_points_times_realizations() {
    let c = desk("[sweep]\naxis = \"rho\"\nvalues = [0.1, 0.2]\nrealizations = 3\n");
    let r = run_sweep(&c, &RunOptions::default()).unwrap();
    assert_eq!(r.records.len(), 6);
    assert!(r.failures.is_empty());
    let keys: Vec<_> = r.records.iter().map(|x| (x.point_index, x.realization)).collect();
    assert_eq!(keys, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
    let agg = aggregate(&r, 8).unwrap();
    for row in &agg.drms_histogram.counts {
        assert_eq!(row.iter().sum::<u64>(), 3);
    }
    for row in &agg.rss_histogram.counts {
        assert_eq!(row.iter().sum::<u64>(), 3);
    }
}

#[test]
fn records_reproduce_from_their_seed() {
    let c = desk("[sweep]\naxis = \"v_target\"\nvalues = [300.0]\nrealizations = 2\n");
    let r = run_sweep(&c, &RunOptions::default()).unwrap();
    let rec = &r.records[1];
    let params = c.point_params(0).unwrap().with_seed(rec.seed);
    let again = simulate(&c.simulation, &params).unwrap();
    assert!((again.path_loss.pl_db - rec.pl_db).abs() < 1e-6);
    assert_eq!(again.mpcs.len(), rec.n_mpcs);
}

#[test]
fn reruns_and_thread_counts_give_identical_bytes() {
    let c = desk("[sweep]\naxis = \"rho\"\nvalues = [0.0, 0.5]\nrealizations = 3\n");
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (d, threads) in dirs.iter().zip([None, Some(1), Some(3)]) {
        run_sweep(&c, &RunOptions { threads, ..in_dir(d.path()) }).unwrap();
    }
    let first = fs::read(dirs[0].path().join("records.csv")).unwrap();
    for d in &dirs[1..] {
        assert_eq!(fs::read(d.path().join("records.csv")).unwrap(), first);
        assert_eq!(fs::read(d.path().join("aggregates.csv")).unwrap(), fs::read(dirs[0].path().join("aggregates.csv")).unwrap());
    }
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("point_value,realization,seed,rss_dbm,pl_db,drms_ns,n_mpcs\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn interrupted_sweep_resumes_to_the_same_file() {
    let c = desk("[sweep]\naxis = \"rho\"\nvalues = [0.25, 0.5]\nrealizations = 3\n");
    let full = tempfile::tempdir().unwrap();
    run_sweep(&c, &in_dir(full.path())).unwrap();
    let complete = fs::read_to_string(full.path().join("records.csv")).unwrap();

    let partial = tempfile::tempdir().unwrap();
    fs::copy(full.path().join("manifest.json"), partial.path().join("manifest.json")).unwrap();
    let lines: Vec<&str> = complete.lines().collect();
    let torn = format!("{}\n{}", lines[..4].join("\n"), &lines[4][..lines[4].len() / 2]);
    fs::write(partial.path().join("records.csv"), torn).unwrap();
    let resumed = run_sweep(&c, &in_dir(partial.path())).unwrap();
    assert_eq!(resumed.records.len(), 6);
    assert_eq!(fs::read_to_string(partial.path().join("records.csv")).unwrap(), complete);

    let other = desk("[sweep]\naxis = \"rho\"\nvalues = [0.25, 0.75]\nrealizations = 3\n");
    assert!(run_sweep(&other, &in_dir(full.path())).is_err());
}

#[test]
fn inserting_a_point_leaves_other_points_alone() {
    let a = run_sweep(&desk("[sweep]\naxis = \"rho\"\nvalues = [0.25, 0.75]\nrealizations = 2\n"), &RunOptions::default()).unwrap();
    let b = run_sweep(&desk("[sweep]\naxis = \"rho\"\nvalues = [0.25, 0.5, 0.75]\nrealizations = 2\n"), &RunOptions::default()).unwrap();
    let strip = |r: &foliage_rt::sweep::SweepRecord| (r.point_value, r.realization, r.seed, r.rss_dbm, r.drms_ns, r.n_mpcs);
    let kept: Vec<_> = b.records.iter().filter(|r| r.point_value != 0.5).map(strip).collect();
    assert_eq!(a.records.iter().map(strip).collect::<Vec<_>>(), kept);
}

#[test]
fn per_point_seeds_differ_between_points() {
    let c = desk("[sweep]\naxis = \"rho\"\nvalues = [0.25, 0.5]\nrealizations = 2\nseeds = \"per_point\"\n");
    let r = run_sweep(&c, &RunOptions::default()).unwrap();
    assert_ne!(r.records[0].seed, r.records[2].seed);
    let shared = run_sweep(&desk("[sweep]\naxis = \"rho\"\nvalues = [0.25, 0.5]\nrealizations = 2\n"), &RunOptions::default()).unwrap();
    assert_eq!(shared.records[0].seed, shared.records[2].seed);
}

#[test]
fn aggregates_are_checked_against_records() {
    let c = desk("[sweep]\naxis = \"rho\"\nvalues = [0.25, 1.0]\nrealizations = 4\n");
    let dir = tempfile::tempdir().unwrap();
    let result = run_sweep(&c, &in_dir(dir.path())).unwrap();
    let from_disk = verify_aggregates(dir.path()).unwrap();
    assert_eq!(from_disk, aggregate(&result, foliage_rt::sweep::aggregate::DEFAULT_HISTOGRAM_BINS).unwrap());
    for name in ["manifest.json", "histogram.csv", "histogram_rss.csv", "pdp_point0.csv", "cdf_point1.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let path = dir.path().join("aggregates.csv");
    let tampered = fs::read_to_string(&path).unwrap().replacen(",4,", ",5,", 1);
    fs::write(&path, tampered).unwrap();
    assert!(verify_aggregates(dir.path()).is_err());
}
