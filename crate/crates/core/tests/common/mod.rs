//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use nisq_reservoir::encoding::{asym_transform, AsymTransformParams};
use nisq_reservoir::pipeline::MarketSeries;

/// Random-walk index with a volatility level that jumps after return
/// drops and decays back to 20, plus daily noise. The next-day change in
/// the volatility level is partly predictable from recent index returns.
pub fn synthetic_market(days: usize, seed: u64) -> MarketSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ret = Normal::new(0.0003, 0.011).unwrap();
    let noise = Normal::new(0.0, 0.3).unwrap();
    let asym = AsymTransformParams::default();
    let start = NaiveDate::from_ymd_opt(1995, 1, 2).unwrap();

    let mut spx = vec![1000.0, 1000.0 * (1.0 + ret.sample(&mut rng))];
    while spx.len() < days {
        let r: f64 = ret.sample(&mut rng);
        spx.push(spx.last().unwrap() * r.exp());
    }
    let r: Vec<f64> = spx.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let mut vix = vec![20.0, 20.0, 20.0];
    for d in 2..days - 1 {
        let u = asym_transform(r[d - 1] - r[d - 2], &asym);
        let last: f64 = vix[d];
        let next = last + 0.08 * (20.0 - last) + 12.0 * (u - 0.45) + noise.sample(&mut rng);
        vix.push(next.max(5.0 + rng.random::<f64>()));
    }
    let dates = (0..days).map(|i| start + Days::new(i as u64)).collect();
    MarketSeries::new(dates, spx, vix).unwrap()
}

pub fn market_csv(series: &MarketSeries) -> String {
    let mut s = String::from("date,spx,vix\n");
    for i in 0..series.len() {
        s += &format!("{},{},{}\n", series.dates[i], series.spx[i], series.vix[i]);
    }
    s
}
