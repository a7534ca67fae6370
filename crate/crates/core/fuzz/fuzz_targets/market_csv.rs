#![no_main]

use libfuzzer_sys::fuzz_target;
use nisq_reservoir::pipeline::{diagnostics, parse_market_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(series) = parse_market_csv(data) {
        assert!(series.dates.windows(2).all(|w| w[0] < w[1]));
        assert!(series.spx.iter().chain(&series.vix).all(|v| *v > 0.0));
        let _ = diagnostics(&series);
    }
});
