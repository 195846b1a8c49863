#![no_main]

use gdisc_core::designer::optimizer::OptimizerOptions;
use gdisc_core::designer::GdmaxOptions;
use libfuzzer_sys::fuzz_target;

// Two state files separated by a line holding `---`.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Some((a, b)) = text.split_once("\n---\n") else { return };
    let (Ok(rho), Ok(sigma)) = (gdisc_core::io::parse_state_file(a), gdisc_core::io::parse_state_file(b)) else {
        return;
    };
    let opts = GdmaxOptions {
        optimizer: OptimizerOptions { starts: 2, max_iters: 40, rounds: 1, ..OptimizerOptions::default() },
        ..GdmaxOptions::default()
    };
    let _ = gdisc_core::report::report(&rho, &sigma, &opts);
});
