//! Run, resume and sweep orchestration.
//!
//! Output layout of one run:
//!
//! ```text
//! <output_dir>/config.txt               canonical configuration
//! <output_dir>/series.csv               one row per output time
//! <output_dir>/series.ndjson            optional mirror
//! <output_dir>/checkpoints/ckpt_<k>.bin at every checkpoint output index k
//! <output_dir>/checkpoints/final.bin    state at t_end
//! <output_dir>/checkpoints/abort.bin    last good state after a numerical abort
//! <output_dir>/failure.json             cause of an abort
//! ```
//!
//! A sweep writes one such directory per `β` (`beta_<β>`) and a
//! `manifest.json` at the top.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::diagnostics::{tag, Diagnostics, DiagnosticsSchema, NormRecord};
use crate::error::{Abort, Error, Result};
use crate::grid::GridSpec;
use crate::ic::make_initial_condition;
use crate::ranges::{q_interval, r_interval, within_hypothesis};
use crate::series::SeriesWriter;
use crate::solver::{FlowState, Stepper};
use crate::spectral::Reduction;

pub const CONFIG_FILE: &str = "config.txt";
pub const SERIES_FILE: &str = "series.csv";
pub const NDJSON_FILE: &str = "series.ndjson";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_CHECKPOINT: &str = "final.bin";
pub const ABORT_CHECKPOINT: &str = "abort.bin";
pub const FAILURE_FILE: &str = "failure.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Exponents actually monitored for a configuration.
pub fn schema_for(config: &RunConfig) -> DiagnosticsSchema {
    let params = config.range_params();
    let keep_all = config.keep_inadmissible || !within_hypothesis(config.beta);
    let (qi, ri) = (q_interval(config.beta), r_interval(config.beta));
    DiagnosticsSchema {
        q_list: params.q_list.iter().copied().filter(|&q| keep_all || qi.contains(q)).collect(),
        besov_pairs: params.besov_pairs(config.keep_inadmissible),
        r_list: params.r_list.iter().copied().filter(|&r| keep_all || ri.contains(r)).collect(),
    }
}

pub fn checkpoint_name(output_index: u64) -> String {
    format!("ckpt_{output_index:06}.bin")
}

/// One trajectory with its diagnostics, advanced output by output.
pub struct Simulation {
    config: RunConfig,
    grid: GridSpec,
    stepper: Stepper,
    diagnostics: Diagnostics,
    state: FlowState,
    last: NormRecord,
    output_index: u64,
    digest: [u8; 32],
}

impl Simulation {
    /// Builds the initial state and its record at `t = 0`.
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let state = make_initial_condition(&config.ic, config.seed, grid, config.beta)?;
        let diagnostics = Diagnostics::new(
            grid,
            config.beta,
            schema_for(config),
            Reduction::from_deterministic(config.deterministic),
        )?;
        let last = diagnostics.record(&state, None, 0.0)?;
        Ok(Self {
            config: config.clone(),
            grid,
            stepper: Stepper::new(grid, config.beta, config.step_control())?,
            diagnostics,
            state,
            last,
            output_index: 0,
            digest: config.digest(),
        })
    }

    /// Continues from a checkpoint. The configuration must carry the same
    /// digest unless `force` is set.
    pub fn from_checkpoint(config: &RunConfig, ckpt: &Checkpoint, force: bool) -> Result<Self> {
        config.validate()?;
        let digest = config.digest();
        if ckpt.digest != digest {
            let msg = format!(
                "checkpoint digest {} does not match configuration digest {}",
                hex::encode(ckpt.digest),
                hex::encode(digest)
            );
            if !force {
                return Err(Error::Config(msg));
            }
            warn!("{msg}; continuing because the override is set");
        }
        if ckpt.n as usize != config.n || ckpt.beta != config.beta {
            return Err(Error::Config(format!(
                "checkpoint has n = {}, beta = {}, configuration has n = {}, beta = {}",
                ckpt.n, ckpt.beta, config.n, config.beta
            )));
        }
        let grid = config.grid()?;
        let state = ckpt.state(config.dealias_fraction)?;
        let diagnostics = Diagnostics::new(
            grid,
            config.beta,
            schema_for(config),
            Reduction::from_deterministic(config.deterministic),
        )?;
        let last = NormRecord::from_row(diagnostics.schema(), &ckpt.last_record)
            .map_err(|e| Error::Checkpoint(format!("stored record does not fit the configuration: {e}")))?;
        Ok(Self {
            config: config.clone(),
            grid,
            stepper: Stepper::new(grid, config.beta, config.step_control())?,
            diagnostics,
            state,
            last,
            output_index: ckpt.output_index,
            digest,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    pub fn last_record(&self) -> &NormRecord {
        &self.last
    }

    pub fn output_index(&self) -> u64 {
        self.output_index
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn columns(&self) -> Vec<String> {
        self.diagnostics.schema().columns()
    }

    /// `k·Δ`, computed from the index so that it never accumulates error.
    pub fn output_time(&self, k: u64) -> f64 {
        k as f64 * self.config.output_interval
    }

    /// Steps up to `target`; the state is left untouched on failure.
    /// Returns the last step size, or 0 if no step was needed.
    pub fn advance_to(&mut self, target: f64) -> Result<f64> {
        let mut cur = self.state.clone();
        let mut dt = 0.0;
        while cur.t < target {
            match self.stepper.step_until(&cur, target) {
                Ok((next, used)) => {
                    cur = next;
                    dt = used;
                }
                Err(e) => {
                    self.state = cur;
                    return Err(e);
                }
            }
        }
        self.state = cur;
        Ok(dt)
    }

    /// Integrates to the next output time and records it.
    pub fn advance_output(&mut self) -> Result<&NormRecord> {
        let k = self.output_index + 1;
        let dt = self.advance_to(self.output_time(k))?;
        self.last = self.diagnostics.record(&self.state, Some(&self.last), dt)?;
        self.output_index = k;
        Ok(&self.last)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::capture(&self.state, self.config.seed, self.digest, self.output_index, self.last.to_row())
    }
}

#[derive(Clone, Debug, Serialize)]
struct FailureRecord {
    cause: String,
    t: f64,
    max_speed: f64,
    message: String,
    checkpoint: String,
}

/// What a completed run produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub rows: u64,
    pub t_final: f64,
    pub final_record: NormRecord,
    pub columns: Vec<String>,
}

fn write_failure(dir: &Path, sim: &Simulation, abort: &Abort, err: &Error) -> Result<()> {
    let ck = dir.join(CHECKPOINT_DIR).join(ABORT_CHECKPOINT);
    sim.checkpoint().save(&ck)?;
    let rec = FailureRecord {
        cause: abort.cause.to_string(),
        t: abort.t,
        max_speed: abort.max_speed,
        message: err.to_string(),
        checkpoint: format!("{CHECKPOINT_DIR}/{ABORT_CHECKPOINT}"),
    };
    let text = serde_json::to_string_pretty(&rec).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(dir.join(FAILURE_FILE), text + "\n")?;
    Ok(())
}

fn drive(sim: &mut Simulation, writer: &mut SeriesWriter, dir: &Path) -> Result<RunSummary> {
    let config = sim.config().clone();
    let last_k = config.last_output_index();
    let every = config.checkpoint_every();
    let ck_dir = dir.join(CHECKPOINT_DIR);
    let mut rows = sim.output_index() + 1;
    while sim.output_index() < last_k {
        let step = sim.advance_output().map(|r| r.to_row());
        let row = match step {
            Ok(row) => row,
            Err(e) => {
                if let Error::Numerical(abort) = &e {
                    write_failure(dir, sim, abort, &e)?;
                }
                return Err(e);
            }
        };
        writer.append(&row)?;
        rows += 1;
        let k = sim.output_index();
        if every.is_some_and(|m| k.is_multiple_of(m)) {
            sim.checkpoint().save(&ck_dir.join(checkpoint_name(k)))?;
        }
        log::debug!("t = {:.6} (output {k}/{last_k})", sim.state().t);
    }
    if let Err(e) = sim.advance_to(config.t_end) {
        if let Error::Numerical(abort) = &e {
            write_failure(dir, sim, abort, &e)?;
        }
        return Err(e);
    }
    sim.checkpoint().save(&ck_dir.join(FINAL_CHECKPOINT))?;
    Ok(RunSummary {
        output_dir: dir.to_path_buf(),
        rows,
        t_final: sim.state().t,
        final_record: sim.last_record().clone(),
        columns: sim.columns(),
    })
}

fn ndjson_path(config: &RunConfig) -> Option<PathBuf> {
    config.ndjson.then(|| config.output_dir.join(NDJSON_FILE))
}

/// Integrates from `t = 0` to `t_end`, writing series and checkpoints.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    config.range_warnings().iter().for_each(|w| warn!("{w}"));
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
    let _ = std::fs::remove_file(dir.join(FAILURE_FILE));
    std::fs::write(dir.join(CONFIG_FILE), config.to_text())?;
    info!("run: n = {}, beta = {}, t_end = {}, output in {}", config.n, config.beta, config.t_end, dir.display());
    let mut sim = Simulation::new(config)?;
    let nd = ndjson_path(config);
    let mut writer = SeriesWriter::create(&dir.join(SERIES_FILE), nd.as_deref(), sim.columns())?;
    writer.append(&sim.last_record().to_row())?;
    if sim.config().checkpoint_every().is_some() {
        sim.checkpoint().save(&dir.join(CHECKPOINT_DIR).join(checkpoint_name(0)))?;
    }
    drive(&mut sim, &mut writer, &dir)
}

/// Finds the configuration saved next to a checkpoint.
pub fn config_for_checkpoint(path: &Path) -> Option<PathBuf> {
    path.ancestors().skip(1).take(2).map(|d| d.join(CONFIG_FILE)).find(|p| p.exists())
}

/// Continues a run from `checkpoint` up to `config.t_end`. Series rows
/// after the checkpoint's last output are discarded and rewritten.
pub fn resume(config: &RunConfig, checkpoint: &Path, force: bool) -> Result<RunSummary> {
    config.validate()?;
    config.range_warnings().iter().for_each(|w| warn!("{w}"));
    let ckpt = Checkpoint::load(checkpoint)?;
    let mut sim = Simulation::from_checkpoint(config, &ckpt, force)?;
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
    let _ = std::fs::remove_file(dir.join(FAILURE_FILE));
    std::fs::write(dir.join(CONFIG_FILE), config.to_text())?;
    info!("resume from t = {} (output {}) to t_end = {}", ckpt.t, ckpt.output_index, config.t_end);
    let nd = ndjson_path(config);
    let mut writer = SeriesWriter::resume(&dir.join(SERIES_FILE), nd.as_deref(), sim.columns(), sim.last_record().t)?;
    drive(&mut sim, &mut writer, &dir)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ManifestEntry {
    pub beta: f64,
    pub output_dir: String,
    pub series: String,
    pub ndjson: Option<String>,
    /// `completed`, `aborted` or `failed`.
    pub status: String,
    pub exit_code: i32,
    pub message: Option<String>,
    pub rows: Option<u64>,
    pub t_final: Option<f64>,
    pub config_digest: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Manifest {
    pub schema_version: u32,
    pub t_end: f64,
    pub output_interval: f64,
    pub runs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(|r| r.status == "completed")
    }

    /// Worst exit code over the members.
    pub fn exit_code(&self) -> i32 {
        self.runs.iter().map(|r| r.exit_code).max().unwrap_or(0)
    }
}

/// Runs one member per `β` with up to `jobs` concurrent workers and writes
/// the manifest. Member failures are recorded, not propagated.
pub fn sweep(base: &RunConfig, betas: &[f64], jobs: usize) -> Result<Manifest> {
    if betas.is_empty() {
        return Err(Error::Config("sweep needs at least one beta".into()));
    }
    let members: Vec<RunConfig> = betas
        .iter()
        .map(|&b| {
            let mut c = base.clone();
            c.beta = b;
            c.output_dir = base.output_dir.join(format!("beta_{}", tag(b)));
            c
        })
        .collect();
    for m in &members {
        m.validate()?;
    }
    std::fs::create_dir_all(&base.output_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    let results: Vec<Result<RunSummary>> = pool.install(|| members.par_iter().map(run).collect());
    let runs = members
        .iter()
        .zip(results)
        .map(|(m, r)| {
            let rel = format!("beta_{}", tag(m.beta));
            let (status, exit_code, message, rows, t_final) = match r {
                Ok(s) => ("completed", 0, None, Some(s.rows), Some(s.t_final)),
                Err(e @ Error::Numerical(_)) => ("aborted", e.exit_code(), Some(e.to_string()), None, None),
                Err(e) => ("failed", e.exit_code(), Some(e.to_string()), None, None),
            };
            ManifestEntry {
                beta: m.beta,
                series: format!("{rel}/{SERIES_FILE}"),
                ndjson: m.ndjson.then(|| format!("{rel}/{NDJSON_FILE}")),
                output_dir: rel,
                status: status.into(),
                exit_code,
                message,
                rows,
                t_final,
                config_digest: m.digest_hex(),
            }
        })
        .collect();
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        t_end: base.t_end,
        output_interval: base.output_interval,
        runs,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(base.output_dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::read_series;

    fn small(dir: &Path) -> RunConfig {
        let mut c = RunConfig::default();
        c.apply_text(
            "n = 16\nbeta = 1.5\nt_end = 0.2\noutput_interval = 0.05\nic = random_band\nic.k_max = 4\nseed = 5",
        )
        .unwrap();
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn zero_length_run_writes_one_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path());
        c.t_end = 0.0;
        let s = run(&c).unwrap();
        assert_eq!(s.rows, 1);
        assert_eq!(read_series(&dir.path().join(SERIES_FILE)).unwrap().rows.len(), 1);
        let ck = Checkpoint::load(&dir.path().join(CHECKPOINT_DIR).join(FINAL_CHECKPOINT)).unwrap();
        assert_eq!(ck.t, 0.0);
    }

    #[test]
    fn row_count_and_uneven_end() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(dir.path());
        c.t_end = 0.17;
        let s = run(&c).unwrap();
        assert_eq!(s.rows, 4);
        assert_eq!(s.t_final, 0.17);
        let series = read_series(&dir.path().join(SERIES_FILE)).unwrap();
        assert_eq!(series.column("t").unwrap(), vec![0.0, 0.05, 0.1, 0.15000000000000002]);
    }

    #[test]
    fn schema_drops_inadmissible_unless_kept() {
        let mut c = RunConfig::default();
        c.apply_text("beta = 1.1\nq_list = 2,4\nr_list = 2,30").unwrap();
        let s = schema_for(&c);
        assert_eq!((s.q_list.clone(), s.r_list.clone()), (vec![2.0], vec![2.0]));
        c.keep_inadmissible = true;
        assert_eq!(schema_for(&c).q_list, vec![2.0, 4.0]);
    }
}
