#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(list) = gdisc_core::io::parse_f64_list(text) {
            assert!(list.iter().all(|v| v.is_finite()));
        }
    }
});
