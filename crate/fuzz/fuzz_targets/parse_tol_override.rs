#![no_main]

use gdisc_core::Tolerances;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = Tolerances::DEFAULT.with_overrides(text);
    }
});
