#![no_main]
use kcl_core::harness::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(config) = ScenarioConfig::from_json(data) {
        // a config that parses must resolve or name a field, and its echo must parse back
        if let Ok(resolved) = config.resolve() {
            let back = ScenarioConfig::from_json(&resolved.to_json()).expect("echo parses");
            assert_eq!(back, resolved);
        }
    }
});
