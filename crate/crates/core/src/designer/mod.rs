//! Optimal Gaussian measurements: the seed map, the optimal seed, the
//! three-way achievability classification, and the Gaussian-measured
//! max-relative entropy with its closed-form, block-sum and numeric routes.

pub mod datahide;
pub mod optimizer;
pub mod single_mode;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::divergence::{
    g_times, likelihood_spec, require_mixed_reference, seed_objective, support_difference,
    displacement_term, Extended, GaussianState,
};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, max_abs_eig, min_eig, spd_inverse, sym_inverse, symmetrize};
use crate::symplectic::{check_bona_fide, check_bona_fide_with, williamson, PhaseSpaceMatrix};
use crate::tolerance::Tolerances;

pub use datahide::{data_hiding_family, DataHidingParams, DataHidingReport, DataHidingStatus};
pub use optimizer::{optimize_seed_numeric, OptimizerOptions, SeedOptimum, LOG_SQUEEZE_BOX};
pub use single_mode::{
    mu_interval, single_mode_branch, single_mode_gdmax, single_mode_seed_value, single_mode_zopt,
    standard_form_covs, standard_form_reduce, Branch, StandardFormParams,
};

/// `f_σ(V_ψ) = V_σ − X_σ (V_σ + V_ψ)^{-1} X_σ` with `X_σ = G(V_σΩ) V_σ`.
pub fn f_sigma(v_sigma: &PhaseSpaceMatrix, v_psi: &PhaseSpaceMatrix) -> Result<PhaseSpaceMatrix> {
    if v_sigma.dim() != v_psi.dim() {
        return Err(Error::DimensionMismatch { expected: v_sigma.dim(), found: v_psi.dim() });
    }
    require_mixed_reference(v_sigma)?;
    let bf = check_bona_fide(v_psi);
    if !bf.ok {
        return Err(Error::NotBonaFide { min_eig: bf.min_eig });
    }
    let x = g_times(v_sigma)?;
    let (inv, _) = spd_inverse(&(v_sigma.as_matrix() + v_psi.as_matrix()))
        .map_err(|_| Error::Singular("V_sigma + V_psi"))?;
    PhaseSpaceMatrix::new(symmetrize(&(v_sigma.as_matrix() - &x * inv * &x)))
}

/// Candidate optimal seed `−V_σ − X_σ (V_ζ − V_σ)^{-1} X_σ`.
///
/// The raw matrix is returned even when it is not a valid covariance; a
/// singular `V_ζ − V_σ` marks the achievability boundary.
pub fn gamma_opt(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<PhaseSpaceMatrix> {
    let spec = likelihood_spec(v_rho, v_sigma)?;
    gamma_from_zeta(v_sigma, &spec.v_zeta)
}

fn gamma_from_zeta(v_sigma: &PhaseSpaceMatrix, v_zeta: &PhaseSpaceMatrix) -> Result<PhaseSpaceMatrix> {
    let x = g_times(v_sigma)?;
    let w = sym_inverse(&(v_zeta.as_matrix() - v_sigma.as_matrix()), "V_zeta - V_sigma")?;
    PhaseSpaceMatrix::new(symmetrize(&(-v_sigma.as_matrix() - &x * w * &x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    /// An optimal Gaussian seed exists.
    AchievableFinite,
    /// Achieved only in an infinitely squeezed limit.
    AchievableLimit,
    /// Gaussian measurements fall strictly short.
    Gap,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::AchievableFinite => "finite",
            Case::AchievableLimit => "limit",
            Case::Gap => "gap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub case: Case,
    /// Present exactly in the finite case; bona fide and pure.
    pub gamma_opt: Option<PhaseSpaceMatrix>,
    /// `min eig(V_σ − V_ζ)`.
    pub margin: f64,
    /// Half-width of the boundary band, `class_rel·‖V_σ‖`.
    pub band: f64,
    /// Smallest eigenvalue of `γ + iΩ` for the raw candidate, when it exists.
    pub candidate_min_eig: Option<f64>,
    /// Bona fide status of the candidate agrees with the sign of the margin
    /// (always true inside the band).
    pub candidate_consistent: bool,
    /// `D_max − D^G_max`, filled in by reports for gap pairs.
    pub gap_value: Option<f64>,
    /// `min eig(V_ζ − V_σ)` spread, for conditioning warnings.
    #[serde(skip)]
    pub zeta_condition: f64,
}

pub fn classify(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix, tol: &Tolerances) -> Result<Classification> {
    let spec = likelihood_spec(v_rho, v_sigma)?;
    let diff = symmetrize(&(v_sigma.as_matrix() - spec.v_zeta.as_matrix()));
    let margin = min_eig(&diff);
    let band = tol.class_rel * max_abs_eig(v_sigma.as_matrix());
    let candidate = gamma_from_zeta(v_sigma, &spec.v_zeta).ok();
    let candidate_bf = candidate.as_ref().map(|g| check_bona_fide_with(g, tol));
    let case = if margin > band {
        Case::AchievableFinite
    } else if margin >= -band {
        Case::AchievableLimit
    } else {
        Case::Gap
    };
    let candidate_consistent = match candidate_bf {
        _ if case == Case::AchievableLimit => true,
        Some(bf) => bf.ok == (margin > 0.0),
        None => false,
    };
    let gamma_opt = if case == Case::AchievableFinite && candidate_consistent { candidate } else { None };
    Ok(Classification {
        case,
        gamma_opt,
        margin,
        band,
        candidate_min_eig: candidate_bf.map(|bf| bf.min_eig),
        candidate_consistent,
        gap_value: None,
        zeta_condition: crate::divergence::condition_number(&diff),
    })
}

/// How a Gaussian-measured value was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    ClosedForm { branch: Branch },
    BlockSum { blocks: Vec<Vec<usize>> },
    Numeric { starts: usize, best_start: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdmaxResult {
    /// `D^G_max`, displacement included.
    pub value: Extended,
    pub zero_mean: Extended,
    pub displacement: f64,
    pub method: Method,
    /// Optimal or best-found seed, absent in homodyne limits of the closed form.
    pub seed: Option<PhaseSpaceMatrix>,
    pub homodyne_limit: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GdmaxOptions {
    pub tol: Tolerances,
    pub optimizer: OptimizerOptions,
}

struct Partial {
    zero_mean: Extended,
    seed: Option<DMatrix<f64>>,
    homodyne_limit: bool,
    converged: bool,
}

fn single_mode_partial(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix) -> Result<(Partial, Branch)> {
    let p = standard_form_reduce(v_rho, v_sigma)?;
    let branch = single_mode_branch(p.a, p.b, p.mu)?;
    let zero_mean = single_mode_gdmax(p.a, p.b, p.mu)?;
    let seed = if branch == Branch::Interior {
        let z = single_mode_zopt(p.a, p.b, p.mu)?;
        let t_inv = p
            .reducing_symplectic
            .clone()
            .try_inverse()
            .ok_or(Error::Singular("reducing symplectic"))?;
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![z, 1.0 / z]));
        Some(symmetrize(&(t_inv.transpose() * g * t_inv)))
    } else {
        None
    };
    let homodyne_limit = matches!(branch, Branch::HomodyneQ | Branch::HomodyneP);
    Ok((Partial { zero_mean, seed, homodyne_limit, converged: true }, branch))
}

fn numeric_partial(
    v_rho: &PhaseSpaceMatrix,
    v_sigma: &PhaseSpaceMatrix,
    opts: &GdmaxOptions,
) -> Result<(Partial, usize)> {
    let best = optimizer::optimize_seed_cov(v_rho, v_sigma, &opts.optimizer)?;
    let mut partial = Partial {
        zero_mean: Extended::Finite(best.value),
        seed: Some(best.seed.as_matrix().clone()),
        homodyne_limit: best.at_box,
        converged: best.converged,
    };
    let class = classify(v_rho, v_sigma, &opts.tol)?;
    if let Some(g) = class.gamma_opt {
        let v = seed_objective(v_rho.as_matrix(), v_sigma.as_matrix(), g.as_matrix())?;
        if v > best.value {
            partial.zero_mean = Extended::Finite(v);
            partial.seed = Some(g.into_inner());
            partial.homodyne_limit = false;
            partial.converged = true;
        }
    }
    Ok((partial, best.best_start))
}

/// Connected components of the mode-coupling graph of the pair.
fn components(v_rho: &DMatrix<f64>, v_sigma: &DMatrix<f64>, tol: f64) -> Vec<Vec<usize>> {
    let n = v_rho.nrows() / 2;
    let scale = max_abs(v_rho).max(max_abs(v_sigma)).max(1.0);
    let coupled = |j: usize, k: usize| {
        [v_rho, v_sigma].iter().any(|m| {
            (0..2).any(|p| (0..2).any(|q| m[(2 * j + p, 2 * k + q)].abs() > tol * scale))
        })
    };
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for j in 0..n {
        for k in (j + 1)..n {
            if coupled(j, k) {
                let (rj, rk) = (root(&mut label, j), root(&mut label, k));
                label[rj.max(rk)] = rj.min(rk);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for j in 0..n {
        let r = root(&mut label, j);
        if index[r] == usize::MAX {
            index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[r]].push(j);
    }
    groups
}

/// A frame in which the pair splits into independent blocks: the identity, or
/// the inverse Williamson symplectic of `V_σ`.
fn block_frame(v_rho: &PhaseSpaceMatrix, v_sigma: &PhaseSpaceMatrix, tol: f64) -> Option<(DMatrix<f64>, Vec<Vec<usize>>)> {
    let n = v_rho.modes();
    let direct = components(v_rho.as_matrix(), v_sigma.as_matrix(), tol);
    if direct.len() > 1 {
        return Some((DMatrix::identity(2 * n, 2 * n), direct));
    }
    let t = williamson(v_sigma).ok()?.symplectic.try_inverse()?;
    let rho_t = v_rho.congruence(&t);
    let sigma_t = v_sigma.congruence(&t);
    let groups = components(rho_t.as_matrix(), sigma_t.as_matrix(), tol);
    (groups.len() > 1).then_some((t, groups))
}

/// Gaussian-measured max-relative entropy.
///
/// Single modes use the closed form. Pairs that split into independent blocks,
/// either as given or after the Williamson reduction of `V_σ`, are summed block
/// by block. Everything else goes through the numeric seed search, which is
/// also compared against the optimal seed whenever one exists. The
/// displacement term is added in every case.
pub fn gdmax(rho: &GaussianState, sigma: &GaussianState, opts: &GdmaxOptions) -> Result<GdmaxResult> {
    let (v_rho, v_sigma) = (&rho.cov, &sigma.cov);
    support_difference(v_rho, v_sigma)?;
    let displacement = displacement_term(rho, sigma)?;
    let (partial, method) = if v_rho.modes() == 1 {
        let (p, branch) = single_mode_partial(v_rho, v_sigma)?;
        (p, Method::ClosedForm { branch })
    } else if let Some((t, blocks)) = block_frame(v_rho, v_sigma, opts.tol.block) {
        let rho_t = v_rho.congruence(&t);
        let sigma_t = v_sigma.congruence(&t);
        let mut total = 0.0;
        let mut infinite = false;
        let mut seed_t = Some(DMatrix::zeros(v_rho.dim(), v_rho.dim()));
        let mut homodyne_limit = false;
        let mut converged = true;
        for block in &blocks {
            let (br, bs) = (rho_t.submatrix(block), sigma_t.submatrix(block));
            let part = if block.len() == 1 {
                single_mode_partial(&br, &bs)?.0
            } else {
                numeric_partial(&br, &bs, opts)?.0
            };
            match part.zero_mean {
                Extended::Finite(v) => total += v,
                Extended::Infinite => infinite = true,
            }
            homodyne_limit |= part.homodyne_limit;
            converged &= part.converged;
            match (&mut seed_t, part.seed) {
                (Some(full), Some(s)) => {
                    let idx: Vec<usize> = block.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
                    for (i, &gi) in idx.iter().enumerate() {
                        for (j, &gj) in idx.iter().enumerate() {
                            full[(gi, gj)] = s[(i, j)];
                        }
                    }
                }
                _ => seed_t = None,
            }
        }
        let t_inv = t.clone().try_inverse().ok_or(Error::Singular("block frame"))?;
        let seed = seed_t.map(|s| symmetrize(&(t_inv.transpose() * s * &t_inv)));
        let zero_mean = if infinite { Extended::Infinite } else { Extended::Finite(total) };
        (Partial { zero_mean, seed, homodyne_limit, converged }, Method::BlockSum { blocks })
    } else {
        let (p, best_start) = numeric_partial(v_rho, v_sigma, opts)?;
        (p, Method::Numeric { starts: opts.optimizer.starts, best_start })
    };
    Ok(GdmaxResult {
        value: partial.zero_mean.add(displacement),
        zero_mean: partial.zero_mean,
        displacement,
        method,
        seed: partial.seed.map(PhaseSpaceMatrix::new).transpose()?,
        homodyne_limit: partial.homodyne_limit,
        converged: partial.converged,
    })
}
