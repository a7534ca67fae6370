#![no_main]

use libfuzzer_sys::fuzz_target;
use nisq_reservoir::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = RunConfig::from_toml_str(text) else {
        return;
    };
    let Ok(resolved) = cfg.resolve() else { return };
    // A resolved config must survive its own serialization unchanged.
    let again = RunConfig::from_toml_str(&resolved.to_toml_string().unwrap()).unwrap();
    assert_eq!(again, resolved);
});
