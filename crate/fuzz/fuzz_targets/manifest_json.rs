#![no_main]
use kcl_core::harness::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(m) = Manifest::from_json(data) {
        let _ = Manifest::from_json(&m.to_json()).expect("manifest echo parses");
    }
});
