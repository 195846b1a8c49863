//! One-stop evaluation of a state pair.

use serde::Serialize;

use crate::designer::{classify, gdmax, Case, Classification, GdmaxOptions, Method};
use crate::divergence::{condition_number, dmax_unrestricted, support_difference, Extended, GaussianState};
use crate::error::Result;
use crate::symplectic::PhaseSpaceMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub modes: usize,
    pub case: Case,
    pub classification: Classification,
    /// Unrestricted max-relative entropy. With nonzero displacement in the gap
    /// case this is only a lower bound; see `dmax_is_lower_bound`.
    pub dmax: Extended,
    pub dmax_zero_mean: Extended,
    pub dmax_is_lower_bound: bool,
    pub dgmax: Extended,
    pub dgmax_zero_mean: Extended,
    pub displacement: f64,
    /// `D_max − D^G_max` when both are finite.
    pub gap: Option<f64>,
    pub seed: Option<PhaseSpaceMatrix>,
    pub method: Method,
    pub homodyne_limit: bool,
    pub optimizer_converged: bool,
    pub warnings: Vec<String>,
}

pub fn report(rho: &GaussianState, sigma: &GaussianState, opts: &GdmaxOptions) -> Result<DivergenceReport> {
    let delta = support_difference(&rho.cov, &sigma.cov)?;
    let mut warnings = Vec::new();
    let cond = condition_number(&delta);
    if cond > opts.tol.condition_warn {
        warnings.push(format!("V_sigma - V_rho has condition number {cond:.3e}"));
    }

    let mut classification = classify(&rho.cov, &sigma.cov, &opts.tol)?;
    if classification.zeta_condition > opts.tol.condition_warn {
        warnings.push(format!(
            "V_sigma - V_zeta has condition number {:.3e}",
            classification.zeta_condition
        ));
    }
    if !classification.candidate_consistent {
        warnings.push(format!(
            "bona fide status of the candidate seed disagrees with margin {:.3e}",
            classification.margin
        ));
    }

    let dmax_zero_mean = dmax_unrestricted(rho, sigma)?;
    let g = gdmax(rho, sigma, opts)?;
    if !g.converged {
        warnings.push("seed optimizer did not converge; D^G_max is a lower bound".into());
    }
    let displaced = g.displacement != 0.0;
    let dmax = dmax_zero_mean.add(g.displacement);
    let gap = match (dmax_zero_mean, g.zero_mean) {
        (Extended::Finite(x), Extended::Finite(y)) => Some(x - y),
        _ => None,
    };
    let case = classification.case;
    if case == Case::Gap {
        classification.gap_value = gap;
    }
    Ok(DivergenceReport {
        modes: rho.modes(),
        case,
        classification,
        dmax,
        dmax_zero_mean,
        dmax_is_lower_bound: displaced && case == Case::Gap,
        dgmax: g.value,
        dgmax_zero_mean: g.zero_mean,
        displacement: g.displacement,
        gap,
        seed: g.seed,
        method: g.method,
        homodyne_limit: g.homodyne_limit,
        optimizer_converged: g.converged,
        warnings,
    })
}
