use std::path::Path;

use fracmhd::checkpoint::Checkpoint;
use fracmhd::config::RunConfig;
use fracmhd::error::Error;
use fracmhd::run::{resume, run, sweep, Simulation, CHECKPOINT_DIR, FINAL_CHECKPOINT, SERIES_FILE};
use fracmhd::series::read_series;

fn config(dir: &Path, text: &str) -> RunConfig {
    let mut c = RunConfig::parse(text).unwrap();
    c.output_dir = dir.to_path_buf();
    c
}

const BASE: &str = "n = 16\nic = orszag_tang_like\noutput_interval = 0.025\n";

#[test]
fn row_count_matches_output_grid() {
    for (t_end, dt) in [(0.1f64, 0.025f64), (0.11, 0.025), (0.3, 0.1), (0.25, 0.05), (0.0, 0.3)] {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path(), &format!("n = 16\nt_end = {t_end}\noutput_interval = {dt}\n"));
        let s = run(&c).unwrap();
        let expect = (t_end / dt * (1.0 + 1e-12)).floor() as u64 + 1;
        assert_eq!(s.rows, expect, "t_end {t_end} dt {dt}");
        assert_eq!(read_series(&dir.path().join(SERIES_FILE)).unwrap().rows.len() as u64, expect);
        assert!((s.t_final - t_end).abs() <= 1e-12 * t_end.max(1.0));
    }
}

#[test]
fn resume_matches_uninterrupted_run_bitwise() {
    let full = tempfile::tempdir().unwrap();
    run(&config(full.path(), &format!("{BASE}t_end = 0.2\ncheckpoint_interval = 0.05\n"))).unwrap();

    let part = tempfile::tempdir().unwrap();
    run(&config(part.path(), &format!("{BASE}t_end = 0.075\n"))).unwrap();
    let c = config(part.path(), &format!("{BASE}t_end = 0.2\n"));
    resume(&c, &part.path().join(CHECKPOINT_DIR).join(FINAL_CHECKPOINT), false).unwrap();

    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(full.path(), SERIES_FILE), read(part.path(), SERIES_FILE));
    let fin = format!("{CHECKPOINT_DIR}/{FINAL_CHECKPOINT}");
    assert_eq!(read(full.path(), &fin), read(part.path(), &fin));
    assert!(full.path().join(CHECKPOINT_DIR).join("ckpt_000004.bin").exists());
}

#[test]
fn resume_rejects_foreign_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    run(&config(dir.path(), &format!("{BASE}t_end = 0.05\n"))).unwrap();
    let ck = Checkpoint::load(&dir.path().join(CHECKPOINT_DIR).join(FINAL_CHECKPOINT)).unwrap();

    let other = config(dir.path(), &format!("{BASE}t_end = 0.1\ncfl_number = 0.3\n"));
    assert!(matches!(Simulation::from_checkpoint(&other, &ck, false), Err(Error::Config(_))));
    assert!(Simulation::from_checkpoint(&other, &ck, true).is_ok());

    let bigger = config(dir.path(), &format!("{BASE}n = 32\nt_end = 0.1\n"));
    assert!(Simulation::from_checkpoint(&bigger, &ck, true).is_err());
}

#[test]
fn sweep_is_independent_of_order_and_concurrency() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let text = format!("{BASE}t_end = 0.1\n");
    let ma = sweep(&config(a.path(), &text), &[1.2, 1.5, 2.0], 1).unwrap();
    let mb = sweep(&config(b.path(), &text), &[2.0, 1.2, 1.5], 3).unwrap();
    assert!(ma.all_completed() && mb.all_completed());
    for tag in ["1.2", "1.5", "2"] {
        let f = format!("beta_{tag}/{SERIES_FILE}");
        assert_eq!(std::fs::read(a.path().join(&f)).unwrap(), std::fs::read(b.path().join(&f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_records_member_failures() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "n = 16\nic = random_band\nic.k_max = 4\nic.amplitude_u = 1e14\nt_end = 0.1\n");
    let m = sweep(&c, &[1.5], 1).unwrap();
    assert_eq!(m.runs[0].status, "aborted");
    assert_eq!(m.exit_code(), 3);
    assert!(dir.path().join("manifest.json").exists());
}
