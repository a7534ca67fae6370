//! Market data ingestion and the end-to-end volatility-index forecast.
//!
//! Each trading day `t` the reservoir sees the asymmetric transform of the
//! last `n` index log-return differences, predicts the next day's change in
//! the volatility index, and is refit once the actual change is known.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::encoding::{asym_transform, delta, log_returns, AsymTransformParams};
use crate::error::{invalid_argument, invalid_data, Error, Result};
use crate::forecast::{run_online, OnlineSettings};
use crate::readout::{mse, ForecastRecord};
use crate::reservoir::ReservoirSpec;
use crate::rng::{stream, Stream};
use crate::stats;
use crate::topology::ReservoirTopology;

/// Aligned daily closes of the equity index and the volatility index.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSeries {
    pub dates: Vec<NaiveDate>,
    pub spx: Vec<f64>,
    pub vix: Vec<f64>,
}

impl MarketSeries {
    pub fn new(dates: Vec<NaiveDate>, spx: Vec<f64>, vix: Vec<f64>) -> Result<Self> {
        if dates.len() != spx.len() || dates.len() != vix.len() {
            return Err(invalid_data("date, spx and vix columns differ in length"));
        }
        if let Some(i) = (1..dates.len()).find(|&i| dates[i] <= dates[i - 1]) {
            return Err(invalid_data(format!(
                "dates not strictly increasing at row {i} ({} after {})",
                dates[i],
                dates[i - 1]
            )));
        }
        for (name, col) in [("spx", &spx), ("vix", &vix)] {
            if let Some(i) = col.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(invalid_data(format!(
                    "{name} at row {i} is not positive ({})",
                    col[i]
                )));
            }
        }
        Ok(Self { dates, spx, vix })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Reads `date,spx,vix` CSV with ISO-8601 dates.
pub fn load_market_csv(path: impl AsRef<Path>) -> Result<MarketSeries> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_market_csv(file)
}

/// Parses `date,spx,vix` CSV from any reader. Line numbers in errors are
/// 1-based and count the header.
pub fn parse_market_csv<R: Read>(input: R) -> Result<MarketSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(rec) => rec?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file, expected header date,spx,vix".into(),
            })
        }
    };
    let cols: Vec<String> = header
        .iter()
        .map(|c| c.trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect();
    if cols != ["date", "spx", "vix"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header date,spx,vix, found {}", cols.join(",")),
        });
    }

    let (mut dates, mut spx, mut vix) = (Vec::new(), Vec::new(), Vec::new());
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<&str> {
            let v = &rec[i];
            if v.is_empty() {
                Err(Error::Parse {
                    line,
                    message: format!("missing {name}"),
                })
            } else {
                Ok(v)
            }
        };
        let date =
            NaiveDate::parse_from_str(field(0, "date")?, "%Y-%m-%d").map_err(|e| Error::Parse {
                line,
                message: format!("bad date `{}`: {e}", &rec[0]),
            })?;
        let number = |i: usize, name: &str| -> Result<f64> {
            let raw = field(i, name)?;
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {name} value `{raw}`"),
            })?;
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid_data(format!(
                    "line {line}: {name} must be positive, got {raw}"
                )));
            }
            Ok(v)
        };
        let s = number(1, "spx")?;
        let v = number(2, "vix")?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(invalid_data(format!(
                    "line {line}: date {date} is not after {prev} (unsorted or duplicate)"
                )));
            }
        }
        dates.push(date);
        spx.push(s);
        vix.push(v);
    }
    MarketSeries::new(dates, spx, vix)
}

/// Stylized facts of a market file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub rows: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    /// Correlation of daily percentage changes; `None` when undefined.
    pub corr_pct_change: Option<f64>,
    pub mean_vix: f64,
    pub max_vix: f64,
    pub max_vix_date: Option<NaiveDate>,
    pub all_positive: bool,
}

pub fn pct_changes(xs: &[f64]) -> Vec<f64> {
    xs.windows(2).map(|w| 100.0 * (w[1] / w[0] - 1.0)).collect()
}

pub fn diagnostics(series: &MarketSeries) -> DiagnosticsReport {
    let corr = if series.len() >= 3 {
        stats::pearson(&pct_changes(&series.spx), &pct_changes(&series.vix))
    } else {
        None
    };
    let (max_idx, max_vix) =
        series
            .vix
            .iter()
            .copied()
            .enumerate()
            .fold((None, f64::NAN), |(bi, bv), (i, v)| {
                if bi.is_none() || v > bv {
                    (Some(i), v)
                } else {
                    (bi, bv)
                }
            });
    DiagnosticsReport {
        rows: series.len(),
        first_date: series.dates.first().copied(),
        last_date: series.dates.last().copied(),
        corr_pct_change: corr,
        mean_vix: stats::mean(&series.vix),
        max_vix,
        max_vix_date: max_idx.map(|i| series.dates[i]),
        all_positive: series.spx.iter().chain(&series.vix).all(|&v| v > 0.0),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForecastSettings {
    pub spec: ReservoirSpec,
    pub asym: AsymTransformParams,
    pub online: OnlineSettings,
    pub burn_in_fraction: f64,
    pub seed: u64,
}

/// One forecast, expressed on the calendar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastRow {
    /// Day whose volatility level is forecast.
    pub date: NaiveDate,
    pub actual_vix: f64,
    pub predicted_vix: f64,
    pub actual_dvix: f64,
    pub predicted_dvix: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastSummary {
    pub records: usize,
    pub burn_in_records: usize,
    pub mse: f64,
    pub residual_mean: f64,
    pub residual_std: f64,
    /// Correlation of predicted and actual daily changes; `None` when
    /// either side is constant.
    pub corr_dvix: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastOutcome {
    pub records: Vec<ForecastRecord>,
    pub rows: Vec<ForecastRow>,
    pub summary: ForecastSummary,
}

impl ForecastOutcome {
    pub fn scored_rows(&self) -> &[ForecastRow] {
        &self.rows[self.summary.burn_in_records..]
    }
}

/// Index of the first price used by `inputs[0]`: two prices are consumed by
/// the log return and its difference.
const INPUT_DAY_OFFSET: usize = 2;

/// Reservoir inputs `u(t)` for days `2..len-1` and the change in the
/// volatility index from each of those days to the next.
fn align_inputs(series: &MarketSeries, asym: &AsymTransformParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = log_returns(&series.spx)?;
    let dr = delta(&r)?;
    // dr[k] belongs to day k + 2; the last day has no next-day target.
    let days = dr.len() - 1;
    let inputs = dr[..days]
        .iter()
        .map(|&d| asym_transform(d, asym))
        .collect();
    let targets = (0..days)
        .map(|k| {
            let d = k + INPUT_DAY_OFFSET;
            series.vix[d + 1] - series.vix[d]
        })
        .collect();
    Ok((inputs, targets))
}

pub fn run_forecast(
    series: &MarketSeries,
    topology: &ReservoirTopology,
    settings: &ForecastSettings,
) -> Result<ForecastOutcome> {
    let n = topology.n_qubits();
    // n inputs for the first window, plus two to have something to score.
    let needed = n + INPUT_DAY_OFFSET + 3;
    if series.len() < needed {
        return Err(invalid_argument(format!(
            "{} rows are too few; a {n}-qubit forecast needs at least {needed}",
            series.len()
        )));
    }
    let (inputs, targets) = align_inputs(series, &settings.asym)?;
    let n_records = inputs.len() + 1 - n;
    let burn_in = (n_records as f64 * settings.burn_in_fraction).floor() as usize;
    if n_records - burn_in < 2 {
        return Err(invalid_argument("not enough records remain after burn-in"));
    }
    let online = OnlineSettings {
        burn_in_records: burn_in,
        ..settings.online
    };
    let mut reservoir = settings.spec.build(topology.clone());
    let mut rng = stream(settings.seed, Stream::Quantum);
    let records = run_online(&mut reservoir, &inputs, &targets, &online, &mut rng)?;

    let rows = records
        .iter()
        .map(|r| {
            let d = r.t + INPUT_DAY_OFFSET;
            ForecastRow {
                date: series.dates[d + 1],
                actual_vix: series.vix[d + 1],
                predicted_vix: series.vix[d] + r.predicted,
                actual_dvix: r.actual,
                predicted_dvix: r.predicted,
                residual: r.residual,
            }
        })
        .collect();

    let scored = &records[burn_in..];
    let residuals: Vec<f64> = scored.iter().map(|r| r.residual).collect();
    let pred: Vec<f64> = scored.iter().map(|r| r.predicted).collect();
    let actual: Vec<f64> = scored.iter().map(|r| r.actual).collect();
    let summary = ForecastSummary {
        records: records.len(),
        burn_in_records: burn_in,
        mse: mse(scored)?,
        residual_mean: stats::mean(&residuals),
        residual_std: stats::std_dev(&residuals),
        corr_dvix: stats::pearson(&pred, &actual),
    };
    Ok(ForecastOutcome {
        records,
        rows,
        summary,
    })
}

/// `date,actual_vix,predicted_vix,actual_dvix,predicted_dvix,residual`.
pub fn write_forecast_csv<W: Write>(rows: &[ForecastRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "date",
        "actual_vix",
        "predicted_vix",
        "actual_dvix",
        "predicted_dvix",
        "residual",
    ])?;
    for r in rows {
        wtr.write_record([
            r.date.to_string(),
            r.actual_vix.to_string(),
            r.predicted_vix.to_string(),
            r.actual_dvix.to_string(),
            r.predicted_dvix.to_string(),
            r.residual.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Post-burn-in levels for actual-vs-predicted plots:
/// `date,actual_vix,predicted_vix`.
pub fn write_plot_csv<W: Write>(rows: &[ForecastRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["date", "actual_vix", "predicted_vix"])?;
    for r in rows {
        wtr.write_record([
            r.date.to_string(),
            r.actual_vix.to_string(),
            r.predicted_vix.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
