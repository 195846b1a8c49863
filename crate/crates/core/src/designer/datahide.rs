//! The nearly-pure family `a = 1+ε`, `b = 1+κε`, `μ = 1+(κ−1)ε(1−ε)`, on
//! which Gaussian measurements see almost nothing while the unrestricted
//! divergence grows like `ln κ / 2`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::optimizer::{optimize_seed_numeric, OptimizerOptions};
use super::single_mode::{single_mode_gdmax, standard_form_covs};
use crate::divergence::{dmax_with_difference, Extended, GaussianState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DataHidingParams {
    pub epsilon: f64,
    pub kappa: f64,
}

impl DataHidingParams {
    pub fn new(epsilon: f64, kappa: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        if !(kappa.is_finite() && kappa >= 1.0) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be >= 1")));
        }
        Ok(Self { epsilon, kappa })
    }

    /// `(a, b, μ)`.
    pub fn standard_form(&self) -> (f64, f64, f64) {
        let (e, k) = (self.epsilon, self.kappa);
        (1.0 + e, 1.0 + k * e, 1.0 + (k - 1.0) * e * (1.0 - e))
    }

    /// `V_σ − V_ρ` evaluated without cancellation: its q-entry is `(κ−1)ε³`.
    pub fn difference(&self) -> DMatrix<f64> {
        let (e, k) = (self.epsilon, self.kappa);
        let (a, b, mu) = self.standard_form();
        DMatrix::from_diagonal(&DVector::from_vec(vec![(k - 1.0) * e.powi(3), b - a / mu]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataHidingStatus {
    Ok,
    /// `κ = 1`: the two states coincide.
    Identical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataHidingReport {
    pub params: DataHidingParams,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub status: DataHidingStatus,
    pub dgmax: Extended,
    pub dmax: Extended,
    pub gap: f64,
    /// Leading-order `(κ−1)ε`.
    pub dgmax_leading: f64,
    /// Leading-order `ln κ / 2 − κε/4`.
    pub dmax_leading: f64,
    pub dgmax_rel_dev: f64,
    pub dmax_rel_dev: f64,
    /// Measured divergence of the requested finite order, if asked for.
    pub measured_alpha: Option<(f64, f64)>,
}

/// Builds the pair for `(ε, κ)` and evaluates both divergences exactly.
/// With `alpha` set, also runs the numeric seed search at that order.
pub fn data_hiding_family(
    params: DataHidingParams,
    alpha: Option<f64>,
    opts: &OptimizerOptions,
) -> Result<(GaussianState, GaussianState, DataHidingReport)> {
    let (a, b, mu) = params.standard_form();
    let (v_rho, v_sigma) = standard_form_covs(a, b, mu)?;
    let rho = GaussianState::zero_mean(v_rho)?;
    let sigma = GaussianState::zero_mean(v_sigma)?;
    let dgmax_leading = (params.kappa - 1.0) * params.epsilon;
    let dmax_leading = 0.5 * params.kappa.ln() - params.kappa * params.epsilon / 4.0;
    let rel = |x: f64, y: f64| if y == 0.0 { x.abs() } else { ((x - y) / y).abs() };

    if params.kappa == 1.0 {
        let report = DataHidingReport {
            params,
            a,
            b,
            mu,
            status: DataHidingStatus::Identical,
            dgmax: Extended::Finite(0.0),
            dmax: Extended::Finite(0.0),
            gap: 0.0,
            dgmax_leading,
            dmax_leading,
            dgmax_rel_dev: 0.0,
            dmax_rel_dev: rel(0.0, dmax_leading),
            measured_alpha: alpha.map(|al| (al, 0.0)),
        };
        return Ok((rho, sigma, report));
    }

    let dgmax = single_mode_gdmax(a, b, mu)?;
    let dmax = dmax_with_difference(&rho.cov, &sigma.cov, &params.difference())?;
    let measured_alpha = match alpha {
        Some(al) => Some((al, optimize_seed_numeric(&rho, &sigma, al, opts)?.value)),
        None => None,
    };
    let report = DataHidingReport {
        params,
        a,
        b,
        mu,
        status: DataHidingStatus::Ok,
        dgmax,
        dmax,
        gap: dmax.value() - dgmax.value(),
        dgmax_leading,
        dmax_leading,
        dgmax_rel_dev: rel(dgmax.value(), dgmax_leading),
        dmax_rel_dev: rel(dmax.value(), dmax_leading),
        measured_alpha,
    };
    Ok((rho, sigma, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designer::single_mode::mu_interval;

    fn run(e: f64, k: f64) -> DataHidingReport {
        data_hiding_family(DataHidingParams::new(e, k).unwrap(), None, &OptimizerOptions::default())
            .unwrap()
            .2
    }

    #[test]
    fn worked_point() {
        let r = run(1e-4, 100.0);
        assert!((r.dgmax.value() - 9.85e-3).abs() < 1e-5);
        assert!(r.dgmax_rel_dev < 0.05);
        assert!(r.dmax.value() >= 2.25);
        assert!(r.gap >= 2.2);
    }

    #[test]
    fn family_sits_in_the_gap_region() {
        let p = DataHidingParams::new(1e-3, 50.0).unwrap();
        let (a, b, mu) = p.standard_form();
        let (_, hi) = mu_interval(a, b);
        assert!(mu > hi && a * mu < b);
        let d = p.difference();
        assert!((d[(0, 0)] - (b - a * mu)).abs() < 1e-15);
    }

    #[test]
    fn deviation_shrinks_with_epsilon() {
        let devs: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&e| run(e, 100.0).dgmax_rel_dev).collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
    }

    #[test]
    fn gap_approaches_half_log_kappa() {
        let k: f64 = 100.0;
        let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&e| run(e, k).gap).collect();
        let target = 0.5 * k.ln();
        assert!(gaps.windows(2).all(|w| (w[1] - target).abs() < (w[0] - target).abs()), "{gaps:?}");
        assert!((gaps[3] - target).abs() < 2e-3);
    }

    #[test]
    fn unit_kappa_is_identical() {
        let r = run(1e-3, 1.0);
        assert_eq!(r.status, DataHidingStatus::Identical);
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DataHidingParams::new(0.0, 10.0).is_err());
        assert!(DataHidingParams::new(0.5, 0.5).is_err());
    }
}
