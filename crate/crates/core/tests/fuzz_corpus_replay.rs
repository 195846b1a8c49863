//! Replays the fuzz seed corpus through the same entry points as the fuzz
//! targets, so parser regressions show up without cargo-fuzz.

use std::path::PathBuf;

use gdisc_core::designer::optimizer::OptimizerOptions;
use gdisc_core::designer::GdmaxOptions;
use gdisc_core::io::{parse_f64_list, parse_range, parse_state_file, state_to_json};
use gdisc_core::Tolerances;

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus for {target}");
    files
        .into_iter()
        .map(|p| (p.display().to_string(), String::from_utf8_lossy(&std::fs::read(&p).unwrap()).into_owned()))
        .collect()
}

#[test]
fn parse_state() {
    let mut ok = 0;
    for (_, text) in corpus("parse_state") {
        if let Ok(state) = parse_state_file(&text) {
            assert_eq!(parse_state_file(&state_to_json(&state)).unwrap(), state);
            ok += 1;
        }
    }
    assert!(ok >= 2);
}

#[test]
fn parse_range_seeds() {
    for (name, text) in corpus("parse_range") {
        if let Ok(range) = parse_range(&text) {
            let values = range.values();
            assert_eq!(values.len(), range.steps, "{name}");
            assert!(values.iter().all(|v| v.is_finite()), "{name}");
        }
    }
}

#[test]
fn parse_list_seeds() {
    for (name, text) in corpus("parse_list") {
        if let Ok(list) = parse_f64_list(&text) {
            assert!(list.iter().all(|v| v.is_finite()), "{name}");
        }
    }
}

#[test]
fn tolerance_override_seeds() {
    let results: Vec<bool> = corpus("parse_tol_override")
        .iter()
        .map(|(_, text)| Tolerances::DEFAULT.with_overrides(text).is_ok())
        .collect();
    assert!(results.contains(&true) && results.contains(&false));
}

#[test]
fn report_pipeline_seeds() {
    let opts = GdmaxOptions {
        optimizer: OptimizerOptions { starts: 2, max_iters: 40, rounds: 1, ..OptimizerOptions::default() },
        ..GdmaxOptions::default()
    };
    let mut reports = 0;
    for (name, text) in corpus("report_pipeline") {
        let (a, b) = text.split_once("\n---\n").unwrap_or_else(|| panic!("{name} lacks separator"));
        let rho = parse_state_file(a).unwrap();
        let sigma = parse_state_file(b).unwrap();
        if gdisc_core::report::report(&rho, &sigma, &opts).is_ok() {
            reports += 1;
        }
    }
    assert!(reports >= 4);
}
