use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The single table of numerical tolerances used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Semidefinite tests (`V + iΩ >= -psd`), scaled by `max(1, ‖V‖)`.
    pub psd: f64,
    /// Relative symmetry check on phase-space matrices.
    pub symmetry: f64,
    /// Relative reconstruction residuals (Williamson, determinants).
    pub reconstruction: f64,
    /// `S Ω Sᵀ = Ω` residual.
    pub symplectic: f64,
    /// Distance from 1 below which arcoth is considered divergent.
    pub domain: f64,
    /// Classification band, relative to `‖V_sigma‖`.
    pub class_rel: f64,
    /// Relative purity residual `‖V − Ω V⁻¹ Ωᵀ‖ / ‖V‖`.
    pub purity: f64,
    /// Off-diagonal block threshold for product-structure detection.
    pub block: f64,
    /// Condition numbers above this are reported as warnings.
    pub condition_warn: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        psd: 1e-10,
        symmetry: 1e-12,
        reconstruction: 1e-9,
        symplectic: 1e-10,
        domain: 1e-12,
        class_rel: 1e-9,
        purity: 1e-9,
        block: 1e-10,
        condition_warn: 1e12,
    };

    /// Applies `key=value` overrides, comma separated, e.g. `class_rel=1e-6,psd=1e-9`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("tolerance override `{item}` is not key=value")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("tolerance `{}` has non-numeric value", key.trim())))?;
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Parse(format!(
                    "tolerance `{}` must be positive and finite",
                    key.trim()
                )));
            }
            let slot = match key.trim() {
                "psd" => &mut self.psd,
                "symmetry" => &mut self.symmetry,
                "reconstruction" => &mut self.reconstruction,
                "symplectic" => &mut self.symplectic,
                "domain" => &mut self.domain,
                "class_rel" => &mut self.class_rel,
                "purity" => &mut self.purity,
                "block" => &mut self.block,
                "condition_warn" => &mut self.condition_warn,
                other => return Err(Error::Parse(format!("unknown tolerance `{other}`"))),
            };
            *slot = value;
        }
        Ok(self)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_by_name() {
        let t = Tolerances::DEFAULT.with_overrides("class_rel=1e-6, psd=2e-9").unwrap();
        assert_eq!(t.class_rel, 1e-6);
        assert_eq!(t.psd, 2e-9);
        assert_eq!(t.block, Tolerances::DEFAULT.block);
    }

    #[test]
    fn overrides_reject_garbage() {
        assert!(Tolerances::DEFAULT.with_overrides("nope=1").is_err());
        assert!(Tolerances::DEFAULT.with_overrides("psd").is_err());
        assert!(Tolerances::DEFAULT.with_overrides("psd=-1").is_err());
        assert!(Tolerances::DEFAULT.with_overrides("psd=abc").is_err());
    }
}
