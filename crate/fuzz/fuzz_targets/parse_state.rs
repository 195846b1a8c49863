#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(state) = gdisc_core::io::parse_state_file(text) {
            let again = gdisc_core::io::parse_state_file(&gdisc_core::io::state_to_json(&state)).unwrap();
            assert_eq!(again, state);
        }
    }
});
