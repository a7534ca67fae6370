//! Replays the checked-in fuzz corpus through the same invariants as the
//! fuzz targets, so seeds stay meaningful without a nightly toolchain.

use std::fs;
use std::path::PathBuf;

use nisq_reservoir::cli::Manifest;
use nisq_reservoir::config::RunConfig;
use nisq_reservoir::pipeline::{diagnostics, parse_market_csv};
use nisq_reservoir::topology::ReservoirTopology;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files
}

#[test]
fn market_csv_seeds() {
    let mut accepted = 0;
    for (name, data) in corpus("market_csv") {
        if let Ok(series) = parse_market_csv(data.as_slice()) {
            assert!(series.dates.windows(2).all(|w| w[0] < w[1]), "{name}");
            let _ = diagnostics(&series);
            accepted += 1;
        }
    }
    assert!(accepted >= 1);
}

#[test]
fn run_config_seeds() {
    let mut resolved_any = false;
    for (name, data) in corpus("run_config") {
        let text = String::from_utf8(data).unwrap();
        let Ok(cfg) = RunConfig::from_toml_str(&text) else {
            continue;
        };
        let Ok(resolved) = cfg.resolve() else {
            continue;
        };
        let again = RunConfig::from_toml_str(&resolved.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, resolved, "{name}");
        resolved_any = true;
    }
    assert!(resolved_any);
}

#[test]
fn topology_json_seeds() {
    for (name, data) in corpus("topology_json") {
        let text = String::from_utf8(data).unwrap();
        let Ok(topo) = ReservoirTopology::from_json(&text) else {
            continue;
        };
        let back = ReservoirTopology::from_json(&topo.to_json().unwrap()).unwrap();
        assert_eq!(back, topo, "{name}");
    }
    assert!(ReservoirTopology::from_json(r#"{"n":2,"loops":[false],"edges":[[0,0]]}"#).is_err());
}

#[test]
fn manifest_json_seeds() {
    for (name, data) in corpus("manifest_json") {
        let m: Manifest = serde_json::from_slice(&data).unwrap_or_else(|e| panic!("{name}: {e}"));
        m.config.validate().unwrap();
    }
}
