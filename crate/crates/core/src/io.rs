//! State files, numeric argument parsing and number formatting.
//!
//! A state file is a JSON object
//!
//! ```json
//! {"version": "v1", "modes": 1, "mean": [0.0, 0.0], "cov": [[3.0, 0.0], [0.0, 3.0]]}
//! ```
//!
//! `cov` is either `2N` rows of `2N` numbers or a flat row-major list of
//! `4N²` numbers. `mean` may be omitted for a zero-mean state.

use nalgebra::{DMatrix, DVector};
use serde_json::{Map, Value};

use crate::divergence::{Extended, GaussianState};
use crate::error::{Error, Result};
use crate::symplectic::{PhaseSpaceMatrix, MAX_MODES};

pub const STATE_VERSION: &str = "v1";

/// `{:.16e}`, with `inf`, `-inf` and `nan` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_extended(x: Extended) -> String {
    fmt_f64(x.value())
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn number(v: &Value, what: impl Fn() -> String) -> Result<f64> {
    v.as_f64().ok_or_else(|| parse_err(format!("{} is not a number", what())))
}

pub fn parse_state_file(text: &str) -> Result<GaussianState> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| parse_err(format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column())))?;
    parse_state_value(&value)
}

pub fn parse_state_value(value: &Value) -> Result<GaussianState> {
    let obj = value.as_object().ok_or_else(|| parse_err("state file must be a JSON object"))?;
    check_keys(obj)?;
    match obj.get("version") {
        Some(Value::String(v)) if v == STATE_VERSION => {}
        Some(other) => return Err(parse_err(format!("unsupported version {other}; expected \"{STATE_VERSION}\""))),
        None => return Err(parse_err("missing `version`")),
    }
    let modes = obj
        .get("modes")
        .ok_or_else(|| parse_err("missing `modes`"))?
        .as_u64()
        .filter(|&m| m >= 1 && m <= MAX_MODES as u64)
        .ok_or_else(|| parse_err(format!("`modes` must be an integer between 1 and {MAX_MODES}")))? as usize;
    let dim = 2 * modes;

    let mean = match obj.get("mean") {
        None => DVector::zeros(dim),
        Some(v) => {
            let arr = v.as_array().ok_or_else(|| parse_err("`mean` must be an array"))?;
            if arr.len() != dim {
                return Err(parse_err(format!("`mean` has {} entries, expected {dim}", arr.len())));
            }
            let mut out = DVector::zeros(dim);
            for (i, x) in arr.iter().enumerate() {
                out[i] = number(x, || format!("mean entry {i}"))?;
            }
            out
        }
    };

    let cov = obj.get("cov").ok_or_else(|| parse_err("missing `cov`"))?;
    let cov = parse_cov(cov, dim)?;
    let cov = PhaseSpaceMatrix::new(cov)?;
    GaussianState::new(mean, cov)
}

fn check_keys(obj: &Map<String, Value>) -> Result<()> {
    for key in obj.keys() {
        if !matches!(key.as_str(), "version" | "modes" | "mean" | "cov") {
            return Err(parse_err(format!("unknown field `{key}`")));
        }
    }
    Ok(())
}

fn parse_cov(v: &Value, dim: usize) -> Result<DMatrix<f64>> {
    let arr = v.as_array().ok_or_else(|| parse_err("`cov` must be an array"))?;
    let mut m = DMatrix::zeros(dim, dim);
    if arr.first().is_some_and(Value::is_array) {
        if arr.len() != dim {
            return Err(parse_err(format!("`cov` has {} rows, expected {dim}", arr.len())));
        }
        for (i, row) in arr.iter().enumerate() {
            let row = row.as_array().ok_or_else(|| parse_err(format!("cov row {i} is not an array")))?;
            if row.len() != dim {
                return Err(parse_err(format!("cov row {i} has {} entries, expected {dim}", row.len())));
            }
            for (j, x) in row.iter().enumerate() {
                m[(i, j)] = number(x, || format!("cov row {i}, column {j}"))?;
            }
        }
    } else {
        if arr.len() != dim * dim {
            return Err(parse_err(format!(
                "flat `cov` has {} entries, expected {}",
                arr.len(),
                dim * dim
            )));
        }
        for (k, x) in arr.iter().enumerate() {
            m[(k / dim, k % dim)] = number(x, || format!("cov row {}, column {}", k / dim, k % dim))?;
        }
    }
    Ok(m)
}

pub fn state_to_json(state: &GaussianState) -> String {
    let value = serde_json::json!({
        "version": STATE_VERSION,
        "modes": state.modes(),
        "mean": state.mean.iter().copied().collect::<Vec<f64>>(),
        "cov": state.cov.rows(),
    });
    serde_json::to_string_pretty(&value).expect("state serialises")
}

/// `min:max:steps` grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

/// Upper bound on grid steps accepted from text.
pub const MAX_STEPS: usize = 100_000;

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let k = (self.steps - 1) as f64;
        let mut h = (self.max - self.min) / k;
        if !h.is_finite() {
            h = self.max / k - self.min / k;
        }
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 })
            .collect()
    }
}

pub fn parse_range(s: &str) -> Result<GridRange> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidRange(format!("`{s}` is not min:max:steps")));
    }
    let bound = |p: &str, name: &str| -> Result<f64> {
        let x: f64 = p.parse().map_err(|_| Error::InvalidRange(format!("{name} `{p}` is not a number")))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::InvalidRange(format!("{name} must be finite")))
        }
    };
    let min = bound(parts[0], "min")?;
    let max = bound(parts[1], "max")?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| Error::InvalidRange(format!("steps `{}` is not a positive integer", parts[2])))?;
    if steps == 0 || steps > MAX_STEPS {
        return Err(Error::InvalidRange(format!("steps must lie in 1..={MAX_STEPS}")));
    }
    if min > max || (steps > 1 && min == max) {
        return Err(Error::InvalidRange(format!("need min < max, got {min} and {max}")));
    }
    Ok(GridRange { min, max, steps })
}

/// Comma-separated finite numbers.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = s.split(',').map(str::trim).collect();
    if items.iter().all(|x| x.is_empty()) {
        return Err(parse_err("empty list"));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, item)| match item.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(parse_err(format!("list entry {i} `{item}` is not a finite number"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_numbers() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_extended(Extended::Infinite), "inf");
    }

    #[test]
    fn parses_nested_and_flat() {
        let nested = r#"{"version":"v1","modes":1,"mean":[0.5,0],"cov":[[3,0],[0,3]]}"#;
        let flat = r#"{"version":"v1","modes":1,"mean":[0.5,0],"cov":[3,0,0,3]}"#;
        let a = parse_state_file(nested).unwrap();
        let b = parse_state_file(flat).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean[0], 0.5);
        let no_mean = parse_state_file(r#"{"version":"v1","modes":1,"cov":[1,0,0,1]}"#).unwrap();
        assert_eq!(no_mean.mean.amax(), 0.0);
    }

    #[test]
    fn round_trips() {
        let s = parse_state_file(r#"{"version":"v1","modes":2,"mean":[1,2,3,4],"cov":[[2,0.5,0,0],[0.5,2,0,0],[0,0,3,0],[0,0,0,3]]}"#).unwrap();
        assert_eq!(parse_state_file(&state_to_json(&s)).unwrap(), s);
    }

    #[test]
    fn diagnostics_name_the_culprit() {
        let msg = |t: &str| parse_state_file(t).unwrap_err().to_string();
        assert!(msg(r#"{"version":"v1","modes":1,"cov":[[1,0],[0]]}"#).contains("cov row 1 has 1 entries"));
        assert!(msg(r#"{"version":"v1","modes":1,"cov":[[1,0],[0,"x"]]}"#).contains("cov row 1, column 1"));
        assert!(msg(r#"{"version":"v2","modes":1,"cov":[1,0,0,1]}"#).contains("unsupported version"));
        assert!(msg(r#"{"modes":1,"cov":[1,0,0,1]}"#).contains("missing `version`"));
        assert!(msg(r#"{"version":"v1","modes":1,"cov":[1,0,0,1],"extra":1}"#).contains("unknown field"));
        assert!(msg(r#"{"version":"v1","modes":0,"cov":[]}"#).contains("`modes`"));
        assert!(msg("{").contains("line 1"));
        let asym = parse_state_file(r#"{"version":"v1","modes":1,"cov":[[2,0.1],[0,2]]}"#).unwrap_err();
        assert!(matches!(asym, Error::NotSymmetric { row: 0, col: 1, .. }));
        let unphysical = parse_state_file(r#"{"version":"v1","modes":1,"cov":[[0.5,0],[0,0.5]]}"#).unwrap_err();
        assert!(matches!(unphysical, Error::NotBonaFide { .. }));
    }

    #[test]
    fn ranges() {
        let r = parse_range("0:2:5").unwrap();
        assert_eq!(r.values(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_range("1:1:1").unwrap().values(), vec![1.0]);
        let wide = parse_range("-1e308:1e308:3").unwrap().values();
        assert_eq!(wide, vec![-1e308, 0.0, 1e308]);
        for bad in ["0:1", "1:0:5", "0:1:0", "0:nan:3", "a:1:2", "0:1:-3", "2:2:3"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_f64_list("1, 2.5,1e-3").unwrap(), vec![1.0, 2.5, 1e-3]);
        assert!(parse_f64_list("").is_err());
        assert!(parse_f64_list("1,,2").is_err());
        assert!(parse_f64_list("inf").is_err());
    }
}
