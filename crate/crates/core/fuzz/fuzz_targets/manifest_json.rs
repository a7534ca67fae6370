#![no_main]

use libfuzzer_sys::fuzz_target;
use nisq_reservoir::cli::Manifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<Manifest>(data) {
        let _ = m.config.validate();
    }
});
