use std::path::PathBuf;

use gdisc_core::designer::{classify, gamma_opt, standard_form_covs};
use gdisc_core::divergence::dmax_unrestricted_cov;
use gdisc_core::fock::{
    convergence_check, convergence_csv, gaussian_state_fock, likelihood_top_eig, projector_ratio, top_vector_overlap,
    SingleModeSpec,
};
use gdisc_core::symplectic::PhaseSpaceMatrix;
use gdisc_core::Tolerances;
use nalgebra::{Matrix2, Vector2};

const GOLDEN_CUTOFFS: [usize; 5] = [50, 100, 200, 300, 450];

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/squeezed_mu_e4_convergence.csv")
}

fn parse_csv(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect()
}

/// Squeezed vacuum at `μ = e⁴` (mean photon number `sinh² 2 ≈ 13.15`).
/// Set `GDISC_BLESS=1` to rewrite the table.
#[test]
fn squeezed_convergence_matches_golden_table() {
    let spec = SingleModeSpec::standard(1.0, 4f64.exp());
    let rows = convergence_check(&spec, &GOLDEN_CUTOFFS).unwrap();
    let csv = convergence_csv(&rows);
    if std::env::var("GDISC_BLESS").as_deref() == Ok("1") {
        std::fs::write(golden_path(), &csv).unwrap();
    }
    let golden = parse_csv(&std::fs::read_to_string(golden_path()).expect("golden table present"));
    let fresh = parse_csv(&csv);
    assert_eq!(golden.len(), fresh.len());
    for (g, f) in golden.iter().zip(&fresh) {
        assert_eq!(g[0], f[0]);
        for k in 1..3 {
            assert!((g[k] - f[k]).abs() <= 1e-9 * g[k].abs().max(1e-6), "{g:?} vs {f:?}");
        }
    }
    let deficit = |c: usize| rows.iter().find(|r| r.cutoff == c).unwrap().trace_deficit;
    assert!(deficit(200) > 1e-8);
    assert!(deficit(450) < 1e-8);
    assert!((rows.last().unwrap().value - 2f64.sinh().powi(2)).abs() < 1e-5);
}

#[test]
fn perturbed_seeds_respect_overlap_bound() {
    for &(a, b, mu) in &[(1.0, 3.0, 1.2), (2.0, 4.0, 0.8), (1.5, 2.5, 1.05)] {
        let (v_rho, v_sigma) = standard_form_covs(a, b, mu).unwrap();
        let class = classify(&v_rho, &v_sigma, &Tolerances::DEFAULT).unwrap();
        let gamma = class.gamma_opt.expect("finite case");
        let rho = gaussian_state_fock(&SingleModeSpec::standard(a, mu), 80).unwrap();
        let sigma = gaussian_state_fock(&SingleModeSpec::thermal(b), 80).unwrap();
        let g = gamma.as_matrix();
        for factor in [1.05, 1.3, 2.0, 4.0] {
            let seed = PhaseSpaceMatrix::diag(&[g[(0, 0)] * factor, g[(1, 1)] / factor]).unwrap();
            let check = top_vector_overlap(&rho, &sigma, &seed, [0.0, 0.0]).unwrap().expect("gapped spectrum");
            assert!(check.ratio <= check.lambda1 + 1e-9);
            assert!(check.overlap >= check.bound - 1e-6, "{check:?}");
        }
    }
}

#[test]
fn gamma_opt_projector_attains_top_eigenvalue() {
    let (v_rho, v_sigma) = standard_form_covs(2.0, 4.0, 1.3).unwrap();
    let gamma = gamma_opt(&v_rho, &v_sigma).unwrap();
    let rho = gaussian_state_fock(&SingleModeSpec::standard(2.0, 1.3), 80).unwrap();
    let sigma = gaussian_state_fock(&SingleModeSpec::thermal(4.0), 80).unwrap();
    let ratio = projector_ratio(&rho, &sigma, &gamma, [0.0, 0.0]).unwrap();
    let lambda1 = likelihood_top_eig(&rho, &sigma).unwrap().lambda1;
    let exact = dmax_unrestricted_cov(&v_rho, &v_sigma).unwrap().value();
    assert!((ratio.ln() - exact).abs() < 1e-8);
    assert!((lambda1.ln() - exact).abs() < 1e-8);
}

fn log_density(x: Vector2<f64>, mean: Vector2<f64>, cov: Matrix2<f64>) -> f64 {
    let d = x - mean;
    -0.5 * d.dot(&(cov.try_inverse().unwrap() * d)) - 0.5 * cov.determinant().ln()
}

/// Coherent-state-like projectors on displaced states reproduce the
/// log-ratio of the Gaussian outcome densities `N(r, V + γ)`.
#[test]
fn displaced_projectors_match_outcome_densities() {
    let rho_spec = SingleModeSpec { thermal: 1.4, log_squeeze: 0.2, angle: 0.4, mean: [0.6, -0.3] };
    let sigma_spec = SingleModeSpec { thermal: 2.5, log_squeeze: 0.0, angle: 0.0, mean: [-0.2, 0.1] };
    let rho = gaussian_state_fock(&rho_spec, 90).unwrap();
    let sigma = gaussian_state_fock(&sigma_spec, 90).unwrap();
    let gamma = Matrix2::new(1.5, 0.0, 0.0, 1.0 / 1.5);
    let seed = PhaseSpaceMatrix::diag(&[1.5, 1.0 / 1.5]).unwrap();
    let v = |s: &SingleModeSpec| Matrix2::from_iterator(s.covariance().iter().copied());
    for m in [[0.0, 0.0], [0.8, -0.4], [-1.0, 1.2]] {
        let x = Vector2::new(m[0], m[1]);
        let expected = log_density(x, Vector2::from(rho_spec.mean), v(&rho_spec) + gamma)
            - log_density(x, Vector2::from(sigma_spec.mean), v(&sigma_spec) + gamma);
        let ratio = projector_ratio(&rho, &sigma, &seed, m).unwrap();
        assert!((ratio.ln() - expected).abs() < 1e-8, "m={m:?}: {} vs {expected}", ratio.ln());
    }
}

/// Displaced vacuum against a thermal state: `λ₁ = ⟨α|σ⁻¹|α⟩` has the closed
/// form `(b+1)/2 · exp(|α|²·2/(b−1))`, independent of the phase-space route.
#[test]
fn displaced_vacuum_top_eigenvalue() {
    use gdisc_core::divergence::{displacement_term, dmax_unrestricted, GaussianState};
    use nalgebra::DVector;
    let b: f64 = 3.0;
    let r = [0.7, -0.4];
    let rho = gaussian_state_fock(&SingleModeSpec { mean: r, ..SingleModeSpec::thermal(1.0) }, 80).unwrap();
    let sigma = gaussian_state_fock(&SingleModeSpec::thermal(b), 80).unwrap();
    let alpha_sq = (r[0] * r[0] + r[1] * r[1]) / 4.0;
    let hand = ((b + 1.0) / 2.0).ln() + 2.0 * alpha_sq / (b - 1.0);
    let lambda1 = likelihood_top_eig(&rho, &sigma).unwrap().lambda1;
    assert!((lambda1.ln() - hand).abs() < 1e-9, "{} vs {hand}", lambda1.ln());

    let g_rho = GaussianState::new(DVector::from_column_slice(&r), PhaseSpaceMatrix::identity(1)).unwrap();
    let g_sigma = GaussianState::zero_mean(PhaseSpaceMatrix::scaled_identity(1, b)).unwrap();
    let phase_space = dmax_unrestricted(&g_rho, &g_sigma).unwrap().value() + displacement_term(&g_rho, &g_sigma).unwrap();
    assert!((phase_space - hand).abs() < 1e-12);
}
