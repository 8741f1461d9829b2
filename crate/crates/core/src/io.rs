//! On-disk formats.
//!
//! * `results_L{L}_l{l}_{env}.csv`: one row per realization. Columns
//!   `schema_version, config_hash, size, message_sites, environment,
//!   disorder, disorder_index, realization, seed, stream, status,
//!   steady_state, h_1..h_L, r(t=…)…`. Time values are encoded exactly in
//!   the rate column headers. Failed realizations carry the error in
//!   `status` and empty numeric cells.
//! * `aggregate.csv`: `schema_version, config_hash, size, message_sites,
//!   environment, disorder, mean, stderr, samples`. `stderr` is `NaN` when
//!   only one realization contributed.
//! * `trace_L{L}_l{l}_{env}_h{h}.csv`: `schema_version, config_hash, time,
//!   mean, stderr, samples`.
//! * `config.json`: the canonical sweep configuration.
//! * `manifest.json`: a [`RunManifest`].
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! reads back bit-exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SweepConfig;
use crate::environment::EnvironmentKind;
use crate::error::{Error, Result};
use crate::sweep::{
    AveragedTrace, HolevoTrace, Job, RealizationKey, RealizationOutcome, SteadyStateRecord, SweepOutput,
};

pub const SCHEMA_VERSION: u32 = 1;

const RESULT_COLUMNS: [&str; 12] = [
    "schema_version",
    "config_hash",
    "size",
    "message_sites",
    "environment",
    "disorder",
    "disorder_index",
    "realization",
    "seed",
    "stream",
    "status",
    "steady_state",
];

const AGGREGATE_COLUMNS: [&str; 9] = [
    "schema_version",
    "config_hash",
    "size",
    "message_sites",
    "environment",
    "disorder",
    "mean",
    "stderr",
    "samples",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn parse<T: std::str::FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Domain(format!("cannot parse `{value}` in column `{field}`")))
}

pub fn results_file_name(size: usize, message_sites: usize, env: EnvironmentKind) -> String {
    format!("results_L{size}_l{message_sites}_{env}.csv")
}

pub fn trace_file_name(trace: &AveragedTrace) -> String {
    format!(
        "trace_L{}_l{}_{}_h{}.csv",
        trace.size, trace.message_sites, trace.environment, trace.disorder
    )
}

/// Writes one results table per `(L, l, environment)` and returns the paths.
pub fn write_results(dir: &Path, output: &SweepOutput) -> Result<Vec<PathBuf>> {
    let mut tables: BTreeMap<(usize, usize, EnvironmentKind), Vec<&RealizationOutcome>> = BTreeMap::new();
    for outcome in &output.outcomes {
        let job = match outcome {
            Ok(t) => &t.job,
            Err(f) => &f.job,
        };
        tables
            .entry((job.size, job.message_sites, job.environment))
            .or_default()
            .push(outcome);
    }
    let mut paths = Vec::new();
    for ((size, l, env), rows) in tables {
        let times = rows
            .iter()
            .find_map(|o| o.as_ref().ok().map(|t| t.times.clone()))
            .unwrap_or_default();
        let path = dir.join(results_file_name(size, l, env));
        write_results_table(&path, &output.config_hash, size, &times, &rows)?;
        paths.push(path);
    }
    Ok(paths)
}

fn write_results_table(
    path: &Path,
    config_hash: &str,
    size: usize,
    times: &[f64],
    rows: &[&RealizationOutcome],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = RESULT_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=size).map(|j| format!("h_{j}")));
    header.extend(times.iter().map(|t| format!("r(t={})", num(*t))));
    w.write_record(&header)?;
    for outcome in rows {
        let (job, status) = match outcome {
            Ok(t) => (&t.job, "ok".to_string()),
            Err(f) => (&f.job, format!("error: {}", f.message)),
        };
        let mut record = vec![
            SCHEMA_VERSION.to_string(),
            config_hash.to_string(),
            job.size.to_string(),
            job.message_sites.to_string(),
            job.environment.to_string(),
            num(job.disorder),
            job.key.disorder_index.to_string(),
            job.key.realization.to_string(),
            job.key.master_seed.to_string(),
            job.key.stream().to_string(),
            status,
        ];
        match outcome {
            Ok(t) => {
                if t.times != times {
                    return Err(Error::Domain("traces in one table use different grids".into()));
                }
                record.push(num(t.steady_state));
                record.extend(t.fields.iter().map(|h| num(*h)));
                record.extend(t.rates.iter().map(|r| num(*r)));
            }
            Err(_) => record.extend(std::iter::repeat_n(String::new(), 1 + size + times.len())),
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub config_hash: String,
    pub outcome: RealizationOutcome,
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let fixed = RESULT_COLUMNS.len();
    if header.len() < fixed || header.iter().take(fixed).ne(RESULT_COLUMNS.iter().copied()) {
        return Err(Error::Domain(format!("{} is not a results table", path.display())));
    }
    let size = header.iter().filter(|h| h.starts_with("h_")).count();
    let times: Vec<f64> = header
        .iter()
        .skip(fixed + size)
        .map(|h| {
            let inner = h
                .strip_prefix("r(t=")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::Domain(format!("unexpected column `{h}`")))?;
            parse("time", inner)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or("");
        let version: u32 = parse("schema_version", get(0))?;
        if version != SCHEMA_VERSION {
            return Err(Error::Domain(format!("unsupported schema version {version}")));
        }
        let job = Job {
            size: parse("size", get(2))?,
            message_sites: parse("message_sites", get(3))?,
            environment: get(4).parse()?,
            disorder: parse("disorder", get(5))?,
            key: RealizationKey {
                master_seed: parse("seed", get(8))?,
                size: parse("size", get(2))?,
                disorder_index: parse("disorder_index", get(6))?,
                realization: parse("realization", get(7))?,
            },
        };
        let status = get(10);
        let outcome = if status == "ok" {
            let fields = (fixed..fixed + size)
                .map(|i| parse("h", get(i)))
                .collect::<Result<_>>()?;
            let rates = (fixed + size..record.len())
                .map(|i| parse("r", get(i)))
                .collect::<Result<_>>()?;
            Ok(HolevoTrace {
                job,
                fields,
                times: times.clone(),
                rates,
                steady_state: parse("steady_state", get(11))?,
            })
        } else {
            Err(crate::sweep::RealizationFailure {
                job,
                message: status.strip_prefix("error: ").unwrap_or(status).to_string(),
            })
        };
        rows.push(ResultRow {
            config_hash: get(1).to_string(),
            outcome,
        });
    }
    Ok(rows)
}

pub fn write_aggregate(path: &Path, config_hash: &str, records: &[SteadyStateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(AGGREGATE_COLUMNS)?;
    for rec in records {
        w.write_record([
            SCHEMA_VERSION.to_string(),
            config_hash.to_string(),
            rec.size.to_string(),
            rec.message_sites.to_string(),
            rec.environment.to_string(),
            num(rec.disorder),
            num(rec.mean),
            num(rec.stderr),
            rec.samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate(path: &Path) -> Result<Vec<SteadyStateRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(AGGREGATE_COLUMNS.iter().copied()) {
        return Err(Error::Domain(format!("{} is not an aggregate table", path.display())));
    }
    r.records()
        .map(|record| {
            let record = record?;
            let get = |i: usize| record.get(i).unwrap_or("");
            Ok(SteadyStateRecord {
                size: parse("size", get(2))?,
                message_sites: parse("message_sites", get(3))?,
                environment: get(4).parse()?,
                disorder: parse("disorder", get(5))?,
                mean: parse("mean", get(6))?,
                stderr: parse("stderr", get(7))?,
                samples: parse("samples", get(8))?,
            })
        })
        .collect()
}

pub fn write_trace(path: &Path, config_hash: &str, trace: &AveragedTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["schema_version", "config_hash", "time", "mean", "stderr", "samples"])?;
    for i in 0..trace.times.len() {
        w.write_record([
            SCHEMA_VERSION.to_string(),
            config_hash.to_string(),
            num(trace.times[i]),
            num(trace.mean[i]),
            num(trace.stderr[i]),
            trace.samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_config_json(path: &Path, config: &SweepConfig) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Provenance of one command invocation. Unlike the data files it records
/// wall-clock times, so it differs between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub tool_version: String,
    pub command: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config_hash: &str, started_unix: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            started_unix,
            finished_unix: started_unix,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::RealizationFailure;

    fn job(realization: usize) -> Job {
        Job {
            size: 4,
            message_sites: 1,
            environment: EnvironmentKind::Neel,
            disorder: 0.1 + 0.2,
            key: RealizationKey {
                master_seed: 9,
                size: 4,
                disorder_index: 3,
                realization,
            },
        }
    }

    #[test]
    fn results_round_trip_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let trace = HolevoTrace {
            job: job(0),
            fields: vec![0.1, -1.0 / 3.0, 2.5e-17, 0.0],
            times: vec![0.0, 0.18, 1.0 / 7.0 + 18.0, 144.0],
            rates: vec![1.0, 0.9999999999999999, 0.123456789, f64::MIN_POSITIVE],
            steady_state: 0.3333333333333333,
        };
        let failure = RealizationFailure {
            job: job(1),
            message: "eigendecomposition failed, sector 2".into(),
        };
        let output = SweepOutput {
            config_hash: "abc123".into(),
            outcomes: vec![Ok(trace), Err(failure)],
        };
        let paths = write_results(dir.path(), &output).unwrap();
        assert_eq!(paths.len(), 1);
        let rows = read_results(&paths[0]).unwrap();
        assert_eq!(rows.len(), 2);
        for (row, original) in rows.iter().zip(&output.outcomes) {
            assert_eq!(row.config_hash, "abc123");
            assert_eq!(&row.outcome, original);
        }
    }

    #[test]
    fn aggregate_round_trip_keeps_nan_sentinel() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aggregate.csv");
        let records = vec![SteadyStateRecord {
            size: 9,
            message_sites: 3,
            environment: EnvironmentKind::MidSpectrumEigenstate,
            disorder: 2.5,
            mean: 0.41234567891234,
            stderr: f64::NAN,
            samples: 1,
        }];
        write_aggregate(&path, "h", &records).unwrap();
        let back = read_aggregate(&path).unwrap();
        assert_eq!(back[0].mean.to_bits(), records[0].mean.to_bits());
        assert!(back[0].stderr.is_nan());
        assert_eq!(back[0].environment, EnvironmentKind::MidSpectrumEigenstate);
    }

    #[test]
    fn wrong_table_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_aggregate(&path).is_err());
        assert!(read_results(&path).is_err());
    }
}
