//! End-to-end behaviour of the forecasting loop.

mod common;

use chrono::{Days, NaiveDate};

use nisq_reservoir::config::{NoisePreset, NoiseSection, RunConfig};
use nisq_reservoir::encoding::{asym_transform, EncodingWeights};
use nisq_reservoir::pipeline::{parse_market_csv, run_forecast, MarketSeries};
use nisq_reservoir::quantum::{NoiseModel, SpinVector};
use nisq_reservoir::reservoir::{lag_window, ReservoirSpec};
use nisq_reservoir::rng::{stream, Stream};
use nisq_reservoir::topology::ReservoirTopology;

fn default_setup() -> (RunConfig, ReservoirTopology) {
    let cfg = RunConfig::default().resolve().unwrap();
    let topo = cfg.topology().unwrap();
    (cfg, topo)
}

#[test]
fn synthetic_forecast_is_unbiased_and_informative() {
    let series = common::synthetic_market(2500, 11);
    let (cfg, topo) = default_setup();
    let out = run_forecast(&series, &topo, &cfg.forecast_settings()).unwrap();
    let s = out.summary;
    assert_eq!(s.records, out.rows.len());
    assert!(s.residual_mean.abs() < 0.1 * s.residual_std, "{s:?}");
    assert!(s.corr_dvix.unwrap() > 0.2, "{s:?}");
    for rec in &out.records {
        assert_eq!(rec.residual, rec.actual - rec.predicted);
    }
}

#[test]
fn level_reconstruction() {
    let series = common::synthetic_market(300, 2);
    let (cfg, topo) = default_setup();
    let out = run_forecast(&series, &topo, &cfg.forecast_settings()).unwrap();
    for row in &out.rows {
        let i = series.dates.iter().position(|d| *d == row.date).unwrap();
        assert_eq!(row.actual_vix, series.vix[i]);
        assert_eq!(row.actual_dvix, series.vix[i] - series.vix[i - 1]);
        assert_eq!(row.predicted_vix, series.vix[i - 1] + row.predicted_dvix);
        assert_eq!(row.residual, row.actual_dvix - row.predicted_dvix);
    }
    // first forecast needs a full 6-day window of return differences
    assert_eq!(out.rows[0].date, series.dates[8]);
}

#[test]
fn constant_market_predicts_zero_change() {
    let start = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    let n = 200;
    let series = MarketSeries::new(
        (0..n).map(|i| start + Days::new(i)).collect(),
        vec![1500.0; n as usize],
        vec![18.0; n as usize],
    )
    .unwrap();
    let (cfg, topo) = default_setup();
    let out = run_forecast(&series, &topo, &cfg.forecast_settings()).unwrap();
    assert_eq!(out.summary.mse, 0.0);
    assert!(out.rows.iter().all(|r| r.predicted_dvix == 0.0));
}

#[test]
fn too_short_series_is_rejected() {
    let series = common::synthetic_market(10, 3);
    let (cfg, topo) = default_setup();
    assert!(run_forecast(&series, &topo, &cfg.forecast_settings()).is_err());
}

#[test]
fn forecast_is_deterministic() {
    let series = common::synthetic_market(600, 5);
    let (cfg, topo) = default_setup();
    let a = run_forecast(&series, &topo, &cfg.forecast_settings()).unwrap();
    let b = run_forecast(&series, &topo, &cfg.forecast_settings()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_round_trip_feeds_forecast() {
    let series = common::synthetic_market(120, 8);
    let parsed = parse_market_csv(common::market_csv(&series).as_bytes()).unwrap();
    assert_eq!(parsed, series);
}

/// A single SPX perturbation only moves the reservoir state inside the
/// input window plus a short feedback-decay horizon. Checked on the
/// noiseless, infinite-shot reservoir without error feedback, where the
/// state is a deterministic function of the inputs.
#[test]
fn perturbation_is_local() {
    let series = common::synthetic_market(400, 9);
    let mut bumped = series.clone();
    let at = 200;
    bumped.spx[at] *= 1.03;
    let (mut cfg, topo) = default_setup();
    cfg.noise = NoiseSection::from_preset(NoisePreset::None);
    cfg.shots = 1 << 50;
    cfg.encoding.gamma = 0.0;
    cfg.encoding.gamma_prime = 0.0;
    let settings = cfg.forecast_settings();
    let spin_path = |s: &MarketSeries| {
        let mut res = cfg.reservoir_spec().build(topo.clone());
        let asym = settings.asym;
        let r: Vec<f64> = s.spx.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        let u: Vec<f64> = r
            .windows(2)
            .map(|w| asym_transform(w[1] - w[0], &asym))
            .collect();
        let mut rng = stream(1, Stream::Quantum);
        (5..u.len())
            .map(|t| {
                res.step(&lag_window(&u, t, 6), 0.0, &mut rng)
                    .unwrap()
                    .clone()
            })
            .collect::<Vec<SpinVector>>()
    };
    let (a, b) = (spin_path(&series), spin_path(&bumped));
    let changed: Vec<usize> = (0..a.len())
        .filter(|&i| a[i].max_abs_diff(&b[i]) > 1e-6)
        .collect();
    assert!(!changed.is_empty());
    let span = changed.last().unwrap() - changed.first().unwrap();
    assert!(span < 30, "perturbation persisted for {span} steps");
}

#[test]
fn echo_state_forgets_initial_spins() {
    let topo = ReservoirTopology::with_self_loops(6, 5).unwrap();
    let spec = ReservoirSpec {
        weights: EncodingWeights::default(),
        noise: NoiseModel::noiseless(),
        shots: 1 << 50,
    };
    let mut a = spec.build(topo.clone());
    let mut b = spec
        .build(topo)
        .with_initial_spins(SpinVector(vec![-1.0; 6]));
    let mut ra = stream(4, Stream::Quantum);
    let mut rb = stream(4, Stream::Quantum);
    let mut gap = 2.0;
    for t in 0..20 {
        let u = [0.1 * (t % 7) as f64; 6];
        let sa = a.step(&u, 0.2, &mut ra).unwrap().clone();
        let sb = b.step(&u, 0.2, &mut rb).unwrap().clone();
        let g = sa.max_abs_diff(&sb);
        assert!(
            g <= gap * 0.3 * std::f64::consts::PI / 4.0 + 1e-6,
            "t={t}: {g} after {gap}"
        );
        gap = g;
    }
    assert!(gap < 1e-3);
}
