//! Phase-diagram scans over `(r, m)` at fixed `n`, with `a = 2m+1`,
//! `b = 2n+1`, `μ = e^{2r}`.
//!
//! Each point is classified twice: by the general matrix route ([`classify`])
//! and by where `μ` falls relative to the closed-form interval.

use rayon::prelude::*;
use serde::Serialize;

use crate::designer::{classify, mu_interval, single_mode_branch, single_mode_gdmax, standard_form_covs, Branch, Case};
use crate::divergence::{dmax_unrestricted_cov, Extended};
use crate::io::{fmt_f64, GridRange};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanLabel {
    Finite,
    Limit,
    Gap,
    Infinite,
    /// `V_σ − V_ρ` singular, or the general route failed numerically.
    Domain,
}

impl ScanLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanLabel::Finite => "finite",
            ScanLabel::Limit => "limit",
            ScanLabel::Gap => "gap",
            ScanLabel::Infinite => "infinite",
            ScanLabel::Domain => "domain",
        }
    }

    fn from_case(case: Case) -> Self {
        match case {
            Case::AchievableFinite => ScanLabel::Finite,
            Case::AchievableLimit => ScanLabel::Limit,
            Case::Gap => ScanLabel::Gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub r: f64,
    pub m: f64,
    pub n: f64,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    /// General-route label.
    pub case: ScanLabel,
    /// Closed-form interval label.
    pub interval_case: ScanLabel,
    /// `None` on domain cells.
    pub dgmax: Option<Extended>,
    pub dmax: Option<Extended>,
    pub gap: Option<f64>,
    pub margin: Option<f64>,
    /// Margin lies outside the band but the two labels differ.
    pub disagrees: bool,
    /// Error text when the general route failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScanCounts {
    pub finite: usize,
    pub limit: usize,
    pub gap: usize,
    pub infinite: usize,
    pub domain: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub n: f64,
    pub r_steps: usize,
    pub m_steps: usize,
    /// Ordered by `m`, then `r`.
    pub rows: Vec<ScanRow>,
    pub counts: ScanCounts,
    pub disagreements: usize,
    pub errors: usize,
}

pub const SCAN_COLUMNS: &str = "r,m,n,a,b,mu,case,interval_case,dgmax,dmax,gap,margin";

fn interval_label(a: f64, b: f64, mu: f64) -> ScanLabel {
    let on = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y;
    match single_mode_branch(a, b, mu) {
        Err(_) => ScanLabel::Domain,
        Ok(Branch::Infinite) => ScanLabel::Infinite,
        Ok(Branch::Interior) => ScanLabel::Finite,
        Ok(_) => {
            let (lo, hi) = mu_interval(a, b);
            if on(mu, hi) || on(mu, lo) {
                ScanLabel::Limit
            } else {
                ScanLabel::Gap
            }
        }
    }
}

pub fn scan_point(r: f64, m: f64, n: f64, tol: &Tolerances) -> ScanRow {
    let (a, b, mu) = (2.0 * m + 1.0, 2.0 * n + 1.0, (2.0 * r).exp());
    let interval_case = interval_label(a, b, mu);
    let mut row = ScanRow {
        r,
        m,
        n,
        a,
        b,
        mu,
        case: interval_case,
        interval_case,
        dgmax: None,
        dmax: None,
        gap: None,
        margin: None,
        disagrees: false,
        error: None,
    };
    match interval_case {
        ScanLabel::Domain => return row,
        ScanLabel::Infinite => {
            row.dgmax = Some(Extended::Infinite);
            row.dmax = Some(Extended::Infinite);
            return row;
        }
        _ => {}
    }
    let general = (|| {
        let (v_rho, v_sigma) = standard_form_covs(a, b, mu)?;
        let c = classify(&v_rho, &v_sigma, tol)?;
        let dmax = dmax_unrestricted_cov(&v_rho, &v_sigma)?;
        let dgmax = single_mode_gdmax(a, b, mu)?;
        Ok::<_, crate::Error>((c, dmax, dgmax))
    })();
    match general {
        Ok((c, dmax, dgmax)) => {
            row.case = ScanLabel::from_case(c.case);
            row.margin = Some(c.margin);
            row.dmax = Some(dmax);
            row.dgmax = Some(dgmax);
            if let (Extended::Finite(x), Extended::Finite(y)) = (dmax, dgmax) {
                row.gap = Some(x - y);
            }
            row.disagrees = row.case != interval_case && c.margin.abs() > c.band;
        }
        Err(e) => {
            row.case = ScanLabel::Domain;
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Evaluates the grid in parallel; row order does not depend on scheduling.
pub fn scan_grid(n: f64, r_range: &GridRange, m_range: &GridRange, tol: &Tolerances) -> ScanResult {
    let rs = r_range.values();
    let ms = m_range.values();
    let points: Vec<(f64, f64)> = ms.iter().flat_map(|&m| rs.iter().map(move |&r| (r, m))).collect();
    let rows: Vec<ScanRow> = points.par_iter().map(|&(r, m)| scan_point(r, m, n, tol)).collect();
    let mut counts = ScanCounts::default();
    for row in &rows {
        *match row.case {
            ScanLabel::Finite => &mut counts.finite,
            ScanLabel::Limit => &mut counts.limit,
            ScanLabel::Gap => &mut counts.gap,
            ScanLabel::Infinite => &mut counts.infinite,
            ScanLabel::Domain => &mut counts.domain,
        } += 1;
    }
    ScanResult {
        n,
        r_steps: rs.len(),
        m_steps: ms.len(),
        disagreements: rows.iter().filter(|r| r.disagrees).count(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        rows,
        counts,
    }
}

impl ScanResult {
    /// Largest distance, in grid cells along `r`, between a cell whose
    /// general label disagrees with membership in the open interval and the
    /// nearest interval endpoint `½ ln μ_min`, `½ ln μ_max`. Zero when the
    /// labels agree everywhere.
    pub fn boundary_offset_cells(&self) -> f64 {
        let h = if self.r_steps > 1 {
            (self.rows[1].r - self.rows[0].r).abs()
        } else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            if matches!(row.interval_case, ScanLabel::Infinite | ScanLabel::Domain) {
                continue;
            }
            let (lo, hi) = mu_interval(row.a, row.b);
            let inside = row.mu > lo && row.mu < hi;
            if inside != (row.case == ScanLabel::Finite) {
                let d = (row.r - 0.5 * lo.ln()).abs().min((row.r - 0.5 * hi.ln()).abs());
                worst = worst.max(d / h);
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(160 * (self.rows.len() + 1));
        out.push_str(SCAN_COLUMNS);
        out.push('\n');
        let ext = |x: Option<Extended>| x.map_or_else(|| "nan".to_string(), |v| fmt_f64(v.value()));
        let opt = |x: Option<f64>| fmt_f64(x.unwrap_or(f64::NAN));
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(r.r),
                fmt_f64(r.m),
                fmt_f64(r.n),
                fmt_f64(r.a),
                fmt_f64(r.b),
                fmt_f64(r.mu),
                r.case.as_str(),
                r.interval_case.as_str(),
                ext(r.dgmax),
                ext(r.dmax),
                opt(r.gap),
                opt(r.margin)
            ));
        }
        out
    }
}
