#![no_main]
use kcl_core::harness::read_surface_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_surface_csv(data);
});
