#![no_main]

use bandit_attack::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ExperimentConfig::from_json_str(text) else {
        return;
    };
    // Accepted configs resolve, and survive a serialization round trip.
    cfg.attacker.resolve().expect("validated attacker resolves");
    let echoed = serde_json::to_string(&cfg).expect("config serializes");
    let again = ExperimentConfig::from_json_str(&echoed).expect("echo parses");
    assert_eq!(cfg, again);
});
