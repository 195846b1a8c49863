use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gdisc_core::certify::{certify, CertifyOptions};
use gdisc_core::designer::{
    data_hiding_family, optimize_seed_numeric, DataHidingParams, DataHidingStatus, GdmaxOptions, OptimizerOptions,
};
use gdisc_core::io::{fmt_extended, fmt_f64, parse_f64_list, parse_range, parse_state_file};
use gdisc_core::report::report;
use gdisc_core::scan::scan_grid;
use gdisc_core::{Error, Tolerances};
use serde_json::json;

const EXIT_INPUT: u8 = 1;
const EXIT_DOMAIN: u8 = 2;

const REPORT_HELP: &str = "\
State files are JSON: {\"version\": \"v1\", \"modes\": N, \"mean\": [2N numbers], \"cov\": [[2N x 2N]]}.
`cov` may also be a flat row-major list. Means are sqrt(2) times the quadrature expectations.

CSV columns (--format csv):
  case, dmax, dmax_zero_mean, dmax_is_lower_bound, dgmax, dgmax_zero_mean, displacement, gap,
  margin, homodyne_limit, method, alpha, measured_alpha

Exit codes: 0 success, 1 parse or input error, 2 V_sigma - V_rho not positive definite.";

const SCAN_HELP: &str = "\
Grid points use a = 2m+1, b = 2n+1, mu = exp(2r); rows are ordered by m, then r.

CSV columns:
  r, m, n, a, b, mu,
  case           classification from V_sigma - V_zeta: finite | limit | gap | infinite | domain
  interval_case  classification from the closed-form mu interval, same labels
  dgmax, dmax    divergences (inf when unbounded, nan on domain cells)
  gap            dmax - dgmax (nan unless both finite)
  margin         min eig(V_sigma - V_zeta) (nan off the finite domain)

A summary with cell counts and the number of disagreements outside the
classification band goes to stderr. GDISC_THREADS caps the worker count.";

const DATAHIDE_HELP: &str = "\
Evaluates a = 1+eps, b = 1+kappa*eps, mu = 1+(kappa-1)*eps*(1-eps) for every pair of
list entries. Invalid combinations become flagged rows.

CSV columns:
  epsilon, kappa, a, b, mu, status (ok | identical | invalid | domain),
  dgmax, dmax, gap, dgmax_leading, dmax_leading, dgmax_rel_dev, dmax_rel_dev,
  alpha, measured_alpha   (nan unless --alpha is given)";

const CERTIFY_HELP: &str = "\
Builds each corpus pair in a truncated Fock space and compares the oracle against the
phase-space formulas. Exit code 0 iff every check is within tolerance, 1 otherwise.

CSV columns (--format csv):
  check, tolerance, max_deviation, evaluated, failures";

#[derive(Parser)]
#[command(name = "gdisc", version, about = "Gaussian-measured max-relative entropy between Gaussian states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Tolerance overrides, e.g. `class_rel=1e-8,psd=1e-9`.
    #[arg(long = "tol-override", global = true)]
    tol_override: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Divergences, classification and optimal seed for one state pair.
    #[command(after_help = REPORT_HELP)]
    Report {
        rho: PathBuf,
        sigma: PathBuf,
        /// Also optimise the measured Renyi divergence of this order (>= 1, or `inf`).
        #[arg(long)]
        alpha: Option<f64>,
        /// Seed for the multistart optimizer.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Phase diagram over squeezing r and thermal photon number m at fixed n.
    #[command(after_help = SCAN_HELP)]
    Scan {
        /// Thermal photon number n of sigma.
        #[arg(long = "n", default_value_t = 0.5)]
        n_thermal: f64,
        /// r grid as min:max:steps.
        #[arg(long = "r-range", default_value = "-1.5:1.5:300", allow_hyphen_values = true)]
        r_range: String,
        /// m grid as min:max:steps.
        #[arg(long = "m-range", default_value = "0:3:300", allow_hyphen_values = true)]
        m_range: String,
    },
    /// Data-hiding family over lists of epsilon and kappa.
    #[command(after_help = DATAHIDE_HELP)]
    Datahide {
        /// Comma-separated epsilons in (0, 1).
        #[arg(long, default_value = "1e-2,1e-3,1e-4,1e-5")]
        epsilon: String,
        /// Comma-separated kappas >= 1.
        #[arg(long, default_value = "100")]
        kappa: String,
        /// Also optimise the measured Renyi divergence of this order (1 = Kullback-Leibler).
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fock-space certification of the closed forms on a random corpus.
    #[command(after_help = CERTIFY_HELP)]
    Certify {
        /// Corpus seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fock levels kept.
        #[arg(long, default_value_t = 80)]
        cutoff: usize,
        /// Corpus size.
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
    /// Printed to the output target before exiting.
    payload: Option<String>,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into(), payload: None }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if let Error::DomainViolation { min_eig } = e {
            let payload = json!({ "error": "domain_violation", "min_eig": min_eig, "message": e.to_string() });
            Self { code: EXIT_DOMAIN, message: e.to_string(), payload: Some(payload.to_string()) }
        } else {
            Self::input(e.to_string())
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_state(path: &Path) -> Result<gdisc_core::divergence::GaussianState, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    parse_state_file(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("GDISC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| Failure::input(format!("GDISC_THREADS=`{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::input(format!("cannot configure threads: {e}")))
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let tol = match &cli.common.tol_override {
        Some(spec) => Tolerances::DEFAULT.with_overrides(spec)?,
        None => Tolerances::DEFAULT,
    };
    let out = cli.common.out.as_deref();
    let format = cli.common.format;
    configure_threads()?;

    match cli.command {
        Command::Report { rho, sigma, alpha, seed } => {
            let (rho, sigma) = (load_state(&rho)?, load_state(&sigma)?);
            if rho.modes() != sigma.modes() {
                return Err(Failure::input(format!("rho has {} modes, sigma has {}", rho.modes(), sigma.modes())));
            }
            let optimizer = OptimizerOptions { seed, ..OptimizerOptions::default() };
            let r = report(&rho, &sigma, &GdmaxOptions { tol, optimizer })?;
            let measured = match alpha {
                Some(a) => Some((a, optimize_seed_numeric(&rho, &sigma, a, &optimizer)?)),
                None => None,
            };
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            let text = if format == Some(Format::Csv) {
                let method = serde_json::to_value(&r.method).expect("serialisable")["kind"].as_str().unwrap_or("").to_string();
                format!(
                    "case,dmax,dmax_zero_mean,dmax_is_lower_bound,dgmax,dgmax_zero_mean,displacement,gap,margin,homodyne_limit,method,alpha,measured_alpha\n{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.case.label(),
                    fmt_extended(r.dmax),
                    fmt_extended(r.dmax_zero_mean),
                    r.dmax_is_lower_bound,
                    fmt_extended(r.dgmax),
                    fmt_extended(r.dgmax_zero_mean),
                    fmt_f64(r.displacement),
                    fmt_f64(r.gap.unwrap_or(f64::NAN)),
                    fmt_f64(r.classification.margin),
                    r.homodyne_limit,
                    method,
                    fmt_f64(measured.as_ref().map_or(f64::NAN, |m| m.0)),
                    fmt_f64(measured.as_ref().map_or(f64::NAN, |m| m.1.value)),
                )
            } else {
                let mut value = serde_json::to_value(&r).expect("serialisable");
                if let Some((a, m)) = &measured {
                    value["measured_alpha"] = json!({
                        "alpha": if a.is_finite() { json!(a) } else { json!("inf") },
                        "value": m.value,
                        "seed": m.seed,
                        "converged": m.converged,
                    });
                }
                pretty(&value)
            };
            emit(out, &text)?;
        }
        Command::Scan { n_thermal, r_range, m_range } => {
            if !(n_thermal.is_finite() && n_thermal >= 0.0) {
                return Err(Failure::input(format!("n = {n_thermal} must be a non-negative number")));
            }
            let r_range = parse_range(&r_range)?;
            let m_range = parse_range(&m_range)?;
            if m_range.min < 0.0 {
                return Err(Failure::input("m must be non-negative"));
            }
            let result = scan_grid(n_thermal, &r_range, &m_range, &tol);
            let c = &result.counts;
            eprintln!(
                "scan n={n_thermal}: finite={} limit={} gap={} infinite={} domain={} disagreements={} errors={}",
                c.finite, c.limit, c.gap, c.infinite, c.domain, result.disagreements, result.errors
            );
            if result.disagreements > 0 {
                eprintln!("warning: {} cells disagree outside the classification band", result.disagreements);
            }
            let text = if format == Some(Format::Json) { pretty(&result) } else { result.to_csv() };
            emit(out, &text)?;
        }
        Command::Datahide { epsilon, kappa, alpha, seed } => {
            let eps = parse_f64_list(&epsilon)?;
            let kap = parse_f64_list(&kappa)?;
            let optimizer = OptimizerOptions { seed, ..OptimizerOptions::default() };
            let mut rows = Vec::new();
            for &k in &kap {
                for &e in &eps {
                    rows.push(datahide_row(e, k, alpha, &optimizer));
                }
            }
            let text = if format == Some(Format::Json) {
                pretty(&rows)
            } else {
                let mut s = String::from(
                    "epsilon,kappa,a,b,mu,status,dgmax,dmax,gap,dgmax_leading,dmax_leading,dgmax_rel_dev,dmax_rel_dev,alpha,measured_alpha\n",
                );
                for r in &rows {
                    s.push_str(&r.csv());
                }
                s
            };
            emit(out, &text)?;
        }
        Command::Certify { seed, cutoff, points } => {
            if cutoff < 2 || points == 0 {
                return Err(Failure::input("need cutoff >= 2 and points >= 1"));
            }
            let report = certify(&CertifyOptions { seed, cutoff, points });
            let text = match format {
                Some(Format::Json) => pretty(&report),
                Some(Format::Csv) => {
                    let mut s = String::from("check,tolerance,max_deviation,evaluated,failures\n");
                    for c in &report.checks {
                        s.push_str(&format!(
                            "{},{},{},{},{}\n",
                            c.check.name(),
                            fmt_f64(c.tolerance),
                            fmt_f64(c.max_deviation),
                            c.evaluated,
                            c.failures
                        ));
                    }
                    s
                }
                None => report.summary(),
            };
            emit(out, &text)?;
            if !report.passed {
                if format.is_some() || out.is_some() {
                    eprint!("{}", report.summary());
                }
                return Ok(ExitCode::from(EXIT_INPUT));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Serialize)]
struct DatahideRow {
    epsilon: f64,
    kappa: f64,
    a: f64,
    b: f64,
    mu: f64,
    status: String,
    dgmax: Option<gdisc_core::divergence::Extended>,
    dmax: Option<gdisc_core::divergence::Extended>,
    gap: Option<f64>,
    dgmax_leading: f64,
    dmax_leading: f64,
    dgmax_rel_dev: Option<f64>,
    dmax_rel_dev: Option<f64>,
    alpha: Option<f64>,
    measured_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl DatahideRow {
    fn csv(&self) -> String {
        let o = |x: Option<f64>| fmt_f64(x.unwrap_or(f64::NAN));
        let e = |x: Option<gdisc_core::divergence::Extended>| x.map_or_else(|| "nan".to_string(), fmt_extended);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(self.epsilon),
            fmt_f64(self.kappa),
            fmt_f64(self.a),
            fmt_f64(self.b),
            fmt_f64(self.mu),
            self.status,
            e(self.dgmax),
            e(self.dmax),
            o(self.gap),
            fmt_f64(self.dgmax_leading),
            fmt_f64(self.dmax_leading),
            o(self.dgmax_rel_dev),
            o(self.dmax_rel_dev),
            o(self.alpha),
            o(self.measured_alpha),
        )
    }
}

fn datahide_row(e: f64, k: f64, alpha: Option<f64>, opts: &OptimizerOptions) -> DatahideRow {
    let (a, b, mu) = (1.0 + e, 1.0 + k * e, 1.0 + (k - 1.0) * e * (1.0 - e));
    let mut row = DatahideRow {
        epsilon: e,
        kappa: k,
        a,
        b,
        mu,
        status: String::new(),
        dgmax: None,
        dmax: None,
        gap: None,
        dgmax_leading: (k - 1.0) * e,
        dmax_leading: 0.5 * k.ln() - k * e / 4.0,
        dgmax_rel_dev: None,
        dmax_rel_dev: None,
        alpha,
        measured_alpha: None,
        error: None,
    };
    let params = match DataHidingParams::new(e, k) {
        Ok(p) => p,
        Err(err) => {
            row.status = "invalid".into();
            row.error = Some(err.to_string());
            return row;
        }
    };
    match data_hiding_family(params, alpha, opts) {
        Ok((_, _, r)) => {
            row.status = match r.status {
                DataHidingStatus::Ok => "ok",
                DataHidingStatus::Identical => "identical",
            }
            .into();
            row.dgmax = Some(r.dgmax);
            row.dmax = Some(r.dmax);
            row.gap = Some(r.gap);
            row.dgmax_rel_dev = Some(r.dgmax_rel_dev);
            row.dmax_rel_dev = Some(r.dmax_rel_dev);
            row.measured_alpha = r.measured_alpha.map(|m| m.1);
        }
        Err(err) => {
            row.status = if err.is_domain_violation() { "domain" } else { "invalid" }.into();
            row.error = Some(err.to_string());
        }
    }
    row
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = cli.common.out.clone();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            if let Some(payload) = f.payload {
                let _ = emit(out.as_deref(), &format!("{payload}\n"));
            }
            ExitCode::from(f.code)
        }
    }
}
