//! Parallel, append-only, resumable execution of an experiment.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::experiments::{summarize, Context};
use crate::record::{Summary, TrialRecord};

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "WH_THREADS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep records already on disk and run only the missing trials.
    pub resume: bool,
    /// Worker threads; falls back to `WH_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
    /// Stop after this many new trials (simulates an interrupted run).
    pub limit: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    /// Trials executed by this invocation.
    pub executed: usize,
    /// Trials found on disk and reused.
    pub reused: usize,
    pub records_path: PathBuf,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Reads every complete record, ignoring a torn trailing line.
pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(_) => break,
        }
    }
    Ok(out)
}

/// Truncates the file after its last complete, parseable line.
fn repair(path: &Path) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let bytes = std::fs::read(path)?;
    let mut good = 0;
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            if serde_json::from_slice::<TrialRecord>(&bytes[start..i]).is_err() {
                break;
            }
            good = i + 1;
            start = i + 1;
        }
    }
    if good < bytes.len() {
        OpenOptions::new().write(true).open(path)?.set_len(good as u64)?;
    }
    Ok(())
}

fn thread_count(opts: &RunOptions) -> Option<usize> {
    opts.threads
        .or_else(|| std::env::var(THREADS_VAR).ok().and_then(|s| s.parse().ok()))
        .filter(|&t| t > 0)
}

pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let ctx = Context::new(config)?;
    let path = config.output.clone();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut done: HashSet<String> = HashSet::new();
    if opts.resume {
        repair(&path)?;
        done.extend(read_records(&path)?.into_iter().map(|r| r.id));
    } else if path.exists() {
        std::fs::remove_file(&path)?;
    }
    let jobs: Vec<(usize, usize)> = config
        .lengths
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .filter(|&(n, t)| !done.contains(&TrialRecord::id_for(config.experiment, n, t)))
        .take(opts.limit.unwrap_or(usize::MAX))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count(opts) {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let chunk = (pool.current_num_threads() * 16).max(64);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for batch in jobs.chunks(chunk) {
        let records: Vec<TrialRecord> = pool.install(|| batch.par_iter().map(|&(n, t)| ctx.run_trial(n, t)).collect());
        for r in &records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    drop(out);

    let mut seen = HashSet::new();
    let records: Vec<TrialRecord> = read_records(&path)?
        .into_iter()
        .filter(|r| r.experiment == config.experiment && config.lengths.contains(&r.n) && r.trial < config.trials)
        .filter(|r| seen.insert(r.id.clone()))
        .collect();
    let summary = summarize(config, &records);
    let csv_path = config.summary_path();
    summary.write_csv(&csv_path)?;
    let summary_path = path.with_extension("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    Ok(RunReport {
        summary,
        executed: jobs.len(),
        reused: done.len(),
        records_path: path,
        csv_path,
        summary_path,
    })
}
