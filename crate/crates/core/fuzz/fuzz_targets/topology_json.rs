#![no_main]

use libfuzzer_sys::fuzz_target;
use nisq_reservoir::topology::ReservoirTopology;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(topo) = ReservoirTopology::from_json(text) else {
        return;
    };
    let n = topo.n_qubits();
    assert!(topo.edges().all(|(i, j)| i < j && j < n));
    assert!((0.0..=1.0).contains(&topo.edge_density()));
    let back = ReservoirTopology::from_json(&topo.to_json().unwrap()).unwrap();
    assert_eq!(back, topo);
});
