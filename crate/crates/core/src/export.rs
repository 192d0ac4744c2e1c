//! Result files and the aggregate tables computed from them.
//!
//! Every number is rounded to 9 significant digits before it is written, and
//! the aggregates in `summary.json` are computed from those rounded values.
//! Re-reading the CSV files therefore reproduces the aggregates exactly.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::{nearest_rank, percentile_series, MetricsStore, PercentileRow};
use crate::services::ServiceKind;
use crate::time::SimTime;

pub const CBR_FILE: &str = "cbr_timeseries.csv";
pub const DELTA_FILE: &str = "delta_timeseries.csv";
pub const SATISFACTION_FILE: &str = "satisfaction.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// `x` rounded to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Text form of `x` with 9 significant digits.
pub fn fmt_sig(x: f64) -> String {
    round_sig(x).to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbrRow {
    pub time_s: f64,
    pub vehicle_id: usize,
    pub cbr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub time_s: f64,
    pub vehicle_id: usize,
    pub vehicle_type: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionRow {
    pub group: String,
    pub service: String,
    pub priority: u32,
    pub ratio: f64,
}

/// The three exported time series / tables, already rounded.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tables {
    pub cbr: Vec<CbrRow>,
    pub delta: Vec<DeltaRow>,
    pub satisfaction: Vec<SatisfactionRow>,
}

impl Tables {
    pub fn from_metrics(m: &MetricsStore) -> Self {
        let mut samples: Vec<_> = m.control.iter().collect();
        samples.sort_by_key(|s| (s.time, s.vehicle));
        let time = |t: SimTime| round_sig(t.as_secs());
        let cbr = samples
            .iter()
            .map(|s| CbrRow {
                time_s: time(s.time),
                vehicle_id: s.vehicle,
                cbr: round_sig(s.cbr),
            })
            .collect();
        let delta = samples
            .iter()
            .map(|s| DeltaRow {
                time_s: time(s.time),
                vehicle_id: s.vehicle,
                vehicle_type: m.vehicle_class[s.vehicle].label().to_string(),
                delta: round_sig(s.delta),
            })
            .collect();
        let satisfaction = m
            .satisfaction()
            .into_iter()
            .map(|s| SatisfactionRow {
                group: s.class.label().to_string(),
                service: s.kind.label().to_string(),
                priority: s.priority,
                ratio: round_sig(s.ratio),
            })
            .collect();
        Tables {
            cbr,
            delta,
            satisfaction,
        }
    }
}

/// Post-warm-up CBR distribution over all vehicles and epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyCbr {
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    /// Interquartile range across vehicles within one epoch, averaged and
    /// maximized over post-warm-up epochs.
    pub mean_epoch_iqr: f64,
    pub max_epoch_iqr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub cbr_percentiles: Vec<PercentileRow>,
    pub steady_cbr: Option<SteadyCbr>,
    /// Post-warm-up mean delta per vehicle type.
    pub delta_by_type: BTreeMap<String, f64>,
    pub satisfaction: Vec<SatisfactionRow>,
}

/// Computes the aggregate tables from exported (rounded) data.
pub fn aggregate(tables: &Tables, warmup_s: f64, epoch_s: f64) -> Aggregates {
    let warmup = SimTime::from_secs(warmup_s);
    let epoch = SimTime::from_secs(epoch_s);
    let samples: Vec<(SimTime, f64)> = tables
        .cbr
        .iter()
        .map(|r| (SimTime::from_secs(r.time_s), r.cbr))
        .collect();
    let round_row = |r: PercentileRow| PercentileRow {
        time_s: round_sig(r.time_s),
        p5: round_sig(r.p5),
        p25: round_sig(r.p25),
        p50: round_sig(r.p50),
        p75: round_sig(r.p75),
        p95: round_sig(r.p95),
    };
    let cbr_percentiles: Vec<PercentileRow> = percentile_series(&samples, epoch)
        .into_iter()
        .map(round_row)
        .collect();

    let steady: Vec<(SimTime, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, _)| t >= warmup)
        .collect();
    let steady_cbr = (!steady.is_empty()).then(|| {
        let mut all: Vec<f64> = steady.iter().map(|&(_, v)| v).collect();
        all.sort_by(f64::total_cmp);
        let iqrs: Vec<f64> = percentile_series(&steady, epoch)
            .iter()
            .map(|r| r.iqr())
            .collect();
        SteadyCbr {
            p5: nearest_rank(&all, 5.0),
            p25: nearest_rank(&all, 25.0),
            p50: nearest_rank(&all, 50.0),
            p75: nearest_rank(&all, 75.0),
            p95: nearest_rank(&all, 95.0),
            mean_epoch_iqr: round_sig(iqrs.iter().sum::<f64>() / iqrs.len() as f64),
            max_epoch_iqr: round_sig(iqrs.iter().copied().fold(0.0, f64::max)),
        }
    });

    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in tables
        .delta
        .iter()
        .filter(|r| SimTime::from_secs(r.time_s) >= warmup)
    {
        let e = sums.entry(r.vehicle_type.clone()).or_default();
        e.0 += r.delta;
        e.1 += 1;
    }
    let delta_by_type = sums
        .into_iter()
        .map(|(k, (sum, n))| (k, round_sig(sum / n as f64)))
        .collect();

    Aggregates {
        cbr_percentiles,
        steady_cbr,
        delta_by_type,
        satisfaction: tables.satisfaction.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionDiagnostic {
    pub group: String,
    pub service: String,
    /// Emitted over demanded airtime.
    pub airtime_ratio: f64,
    /// No demand after warm-up; the ratio is 1 by convention.
    pub zero_demand: bool,
    /// Unconstrained payload demand per vehicle, kbit/s.
    pub demand_kbps: f64,
    pub emitted_kbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub satisfaction: Vec<SatisfactionDiagnostic>,
    /// Post-warm-up mean beta per vehicle type.
    pub beta_by_type: BTreeMap<String, f64>,
    /// Share of post-warm-up control ticks where the priority override fired.
    pub override_share_by_type: BTreeMap<String, f64>,
}

impl Diagnostics {
    pub fn from_metrics(m: &MetricsStore) -> Self {
        let horizon = (m.config.duration_s - m.config.warmup_s).max(0.0);
        let mut members: BTreeMap<_, usize> = BTreeMap::new();
        for c in &m.vehicle_class {
            *members.entry(*c).or_default() += 1;
        }
        let per_vehicle_kbps = |bits: f64, n: usize| {
            if horizon > 0.0 && n > 0 {
                round_sig(bits / (horizon * n as f64) / 1e3)
            } else {
                0.0
            }
        };
        let satisfaction = m
            .satisfaction()
            .into_iter()
            .map(|s| {
                let n = members.get(&s.class).copied().unwrap_or(0);
                SatisfactionDiagnostic {
                    group: s.class.label().to_string(),
                    service: s.kind.label().to_string(),
                    airtime_ratio: round_sig(s.airtime_ratio),
                    zero_demand: s.zero_demand,
                    demand_kbps: per_vehicle_kbps(s.demand_bits, n),
                    emitted_kbps: per_vehicle_kbps(s.emitted_bits, n),
                }
            })
            .collect();

        let mut acc: BTreeMap<String, (f64, usize, usize)> = BTreeMap::new();
        for s in m.steady_control() {
            let e = acc
                .entry(m.vehicle_class[s.vehicle].label().to_string())
                .or_default();
            e.0 += s.beta;
            e.1 += usize::from(s.override_applied);
            e.2 += 1;
        }
        let beta_by_type = acc
            .iter()
            .map(|(k, &(b, _, n))| (k.clone(), round_sig(b / n as f64)))
            .collect();
        let override_share_by_type = acc
            .iter()
            .map(|(k, &(_, o, n))| (k.clone(), round_sig(o as f64 / n as f64)))
            .collect();
        Diagnostics {
            satisfaction,
            beta_by_type,
            override_share_by_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ScenarioConfig,
    pub seed: u64,
    /// Priority of each service under the configured scheme (0 is highest).
    pub service_priorities: BTreeMap<String, u32>,
    pub aggregates: Aggregates,
    pub diagnostics: Diagnostics,
}

impl Summary {
    pub fn new(m: &MetricsStore, tables: &Tables) -> Self {
        let cfg = &m.config;
        let service_priorities = [
            ServiceKind::Generic1,
            ServiceKind::Generic2,
            ServiceKind::Generic3,
            ServiceKind::Cas,
            ServiceKind::Cps,
        ]
        .into_iter()
        .map(|k| (k.label().to_string(), cfg.priorities.priority_of(k)))
        .collect();
        Summary {
            config: cfg.clone(),
            seed: cfg.seed,
            service_priorities,
            aggregates: aggregate(tables, cfg.warmup_s, cfg.control_epoch_s),
            diagnostics: Diagnostics::from_metrics(m),
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the CSV files and `summary.json` into `out_dir`, creating it if
/// needed.
pub fn export(m: &MetricsStore, out_dir: &Path) -> Result<Summary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let tables = Tables::from_metrics(m);

    write_csv(
        &out_dir.join(CBR_FILE),
        &["time_s", "vehicle_id", "cbr"],
        tables
            .cbr
            .iter()
            .map(|r| vec![fmt_sig(r.time_s), r.vehicle_id.to_string(), fmt_sig(r.cbr)]),
    )?;
    write_csv(
        &out_dir.join(DELTA_FILE),
        &["time_s", "vehicle_id", "vehicle_type", "delta"],
        tables.delta.iter().map(|r| {
            vec![
                fmt_sig(r.time_s),
                r.vehicle_id.to_string(),
                r.vehicle_type.clone(),
                fmt_sig(r.delta),
            ]
        }),
    )?;
    write_csv(
        &out_dir.join(SATISFACTION_FILE),
        &["group", "service", "priority", "ratio"],
        tables.satisfaction.iter().map(|r| {
            vec![
                r.group.clone(),
                r.service.clone(),
                r.priority.to_string(),
                fmt_sig(r.ratio),
            ]
        }),
    )?;

    let summary = Summary::new(m, &tables);
    let path = out_dir.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(&summary).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_err)
}

/// Reads `summary.json` from an export directory.
pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path, source })
}

/// Reads the exported CSV tables.
pub fn read_tables(dir: &Path) -> Result<Tables> {
    Ok(Tables {
        cbr: read_csv(&dir.join(CBR_FILE))?,
        delta: read_csv(&dir.join(DELTA_FILE))?,
        satisfaction: read_csv(&dir.join(SATISFACTION_FILE))?,
    })
}

/// Recomputes the aggregate tables of an export directory from its CSV files.
pub fn report(dir: &Path) -> Result<Aggregates> {
    if !dir.is_dir() {
        return Err(Error::Format {
            path: PathBuf::from(dir),
            message: "not a directory".into(),
        });
    }
    let summary = read_summary(dir)?;
    let tables = read_tables(dir)?;
    Ok(aggregate(
        &tables,
        summary.config.warmup_s,
        summary.config.control_epoch_s,
    ))
}

/// Renders aggregates as CSV sections separated by blank lines.
pub fn aggregates_to_csv(a: &Aggregates, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "time_s,p5,p25,p50,p75,p95")?;
    for r in &a.cbr_percentiles {
        let cells = [r.time_s, r.p5, r.p25, r.p50, r.p75, r.p95].map(fmt_sig);
        writeln!(out, "{}", cells.join(","))?;
    }
    writeln!(out)?;
    writeln!(out, "statistic,value")?;
    if let Some(s) = &a.steady_cbr {
        for (name, v) in [
            ("cbr_p5", s.p5),
            ("cbr_p25", s.p25),
            ("cbr_p50", s.p50),
            ("cbr_p75", s.p75),
            ("cbr_p95", s.p95),
            ("cbr_mean_epoch_iqr", s.mean_epoch_iqr),
            ("cbr_max_epoch_iqr", s.max_epoch_iqr),
        ] {
            writeln!(out, "{name},{}", fmt_sig(v))?;
        }
    }
    writeln!(out)?;
    writeln!(out, "vehicle_type,mean_delta")?;
    for (k, v) in &a.delta_by_type {
        writeln!(out, "{k},{}", fmt_sig(*v))?;
    }
    writeln!(out)?;
    writeln!(out, "group,service,priority,ratio")?;
    for r in &a.satisfaction {
        writeln!(
            out,
            "{},{},{},{}",
            r.group,
            r.service,
            r.priority,
            fmt_sig(r.ratio)
        )?;
    }
    Ok(())
}
