//! `latflow` command-line front end.
//!
//! Settings come from built-in defaults, then an optional `key=value` config
//! file, then command-line flags. Reports are written to `--output` (or
//! standard output) as JSON or CSV; a one-line verdict goes to standard
//! output.

mod config;
mod emit;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{RunConfig, Settings};
use emit::{csv_number, Format, Report};
use latflow::diophantine::{
    dani_check, escape_of_mass, inhom_dani_scan, inhom_littlewood_min, littlewood_min, mult_singular_density, theta_scan,
    Gate, OrbitBase,
};
use latflow::exact::{parse_vector, Value};
use latflow::flows::XPrimePoint;
use latflow::heights::{alpha_prime, alpha_tilde, bq_alpha_slice, ht2, phi_lambda1, CalibratedConstants, HeightParams};
use latflow::lab::{
    calibrate, check_beta_contraction, check_log_lipschitz, check_psi_bounds, check_subharmonic, covering_counts, fit_c7,
    fit_constants, HeightKind, LipGroup, SampleSpec, COVERING_BUDGET,
};
use latflow::Error;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

const EXACT_GRAMMAR: &str = "\
Exact inputs (--xi, --theta) are comma separated entries of a small grammar:
  integers and p/q fractions, sqrtD or sqrt(D), phi, wrap(expr),
  combined with + - * / and parentheses, e.g. \"sqrt2-1,(sqrt2-1)/2\".
  Each entry must stay inside one quadratic field Q(sqrtD).
  Decimal literals such as 0.25 are read as floats.

Points (--point) are written \"tau_1,...,tau_{d-1};xi_1,...,xi_{d-1}\".
Direction indices --i run from 1 to d-1.

Exit codes: 0 success or INFO, 1 FAIL verdict or runtime error,
2 invalid input or configuration, 3 enumeration or grid budget exceeded.";

#[derive(Parser, Debug)]
#[command(name = "latflow", version, about = "Heights, Diophantine checks and contraction certification on the space of lattices", after_help = EXACT_GRAMMAR)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Plain-text key=value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Calibration file written by `latflow calibrate`.
    #[arg(long, global = true)]
    calibration: Option<PathBuf>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Flow step t.
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Monomial gate ε of the height functions.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Quadrature resolution (at least 64).
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// θ-grid resolution for inhomogeneous scans.
    #[arg(long = "theta-grid-res", global = true)]
    theta_grid_res: Option<usize>,
    /// Report destination; standard output when absent.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate every height at one slice point.
    Heights {
        #[arg(long)]
        point: String,
        #[arg(long = "i")]
        i: usize,
    },
    /// Fit C, C' and the D-table on a seeded sample and write a calibration file.
    Calibrate {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_parser = parse_range, default_value = "0.5,3")]
        tau_range: (f64, f64),
    },
    /// Certify a contraction inequality on a fresh seeded sample.
    VerifyContraction {
        #[arg(long, value_enum, default_value_t = Check::Subharmonic)]
        check: Check,
        #[arg(long, default_value = "ht")]
        kind: HeightKind,
        #[arg(long, value_enum, default_value_t = GroupArg::UiPerp)]
        group: GroupArg,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, value_parser = parse_range, default_value = "0.5,3")]
        tau_range: (f64, f64),
        /// Share of samples drawn near rational cusps.
        #[arg(long, default_value_t = 0.0)]
        cusp_fraction: f64,
        /// Pass-rate threshold for sample-based checks.
        #[arg(long, default_value_t = 0.99)]
        min_pass_rate: f64,
        /// Additive slack of the β rate bound; the inequality's own slack when absent.
        #[arg(long)]
        slack: Option<f64>,
        /// Base point for the ψ check.
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 8)]
        perturbations: usize,
    },
    /// Record-setting minima of q·∏‖qξ_i‖ up to Q.
    Littlewood {
        #[arg(long)]
        xi: String,
        #[arg(long = "Q")]
        q_max: u64,
    },
    /// Window minimum of q·∏‖qξ_i − θ_i‖ over [q0, Q], or a θ-grid scan.
    InhomLittlewood {
        #[arg(long)]
        xi: String,
        /// Fixed θ; when absent the θ-grid of --theta-grid-res is scanned.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value_t = 1)]
        q0: u64,
        #[arg(long = "Q")]
        q_max: u64,
    },
    /// Singular-on-average and Mahler escape densities side by side.
    Dani {
        #[arg(long)]
        xi: String,
        /// With θ, scan the grid orbit for the ε-ball instead.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Start of the τ range scanned when --theta is given.
        #[arg(long = "T", default_value_t = 1.0)]
        t_min: f64,
    },
    /// Escape of mass along the diagonal orbit of u(ξ)ℤ^d.
    Divergence {
        #[arg(long)]
        xi: String,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Compact set: λ₁ ≥ ε, or max α̃ ≤ h (needs a calibration file).
        #[arg(long, value_enum, default_value_t = GateArg::Epsilon)]
        gate: GateArg,
        /// Also report multiplicative-singularity densities.
        #[arg(long)]
        singular: bool,
    },
    /// Box-counting slopes of the divergent set near a base point.
    Dimension {
        #[arg(long, default_value = "0.5,0.5;0,0")]
        point: String,
        #[arg(long = "N-list", value_delimiter = ',', default_value = "2,3")]
        n_list: Vec<usize>,
        /// τ-grid step of the covering; defaults to the flow step t.
        #[arg(long)]
        t_cov: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Check {
    Subharmonic,
    Lipschitz,
    Beta,
    Psi,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupArg {
    HBall,
    APlusUBall,
    AiUiBall,
    UiPerp,
    Identity,
}

impl From<GroupArg> for LipGroup {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::HBall => LipGroup::HBall,
            GroupArg::APlusUBall => LipGroup::APlusUBall,
            GroupArg::AiUiBall => LipGroup::AiUiBall,
            GroupArg::UiPerp => LipGroup::UiPerp,
            GroupArg::Identity => LipGroup::Identity,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GateArg {
    Epsilon,
    Height,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo > 0.0 && hi > lo) {
        return Err("need 0 < lo < hi".into());
    }
    Ok((lo, hi))
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Invalid(anyhow::Error),
    Budget(anyhow::Error),
    Runtime(anyhow::Error),
    Verdict,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EnumerationBudgetExceeded { .. } | Error::GridBudgetExceeded { .. } => Failure::Budget(e.into()),
            Error::InvalidParameter(_)
            | Error::Parse(_)
            | Error::NotUnimodular(_)
            | Error::LeavesSlice(_)
            | Error::RankDeficient { .. } => Failure::Invalid(e.into()),
            Error::DegenerateBasis | Error::CalibrationUnstable(_) => Failure::Runtime(e.into()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(anyhow!(msg.into()))
}

type Out<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LATFLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        // Only fails if a pool was already built, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn settings(common: &Common) -> Out<Settings> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Invalid)?,
        None => RunConfig::default(),
    };
    cfg.apply_flags(common);
    cfg.resolve().map_err(Failure::Invalid)
}

fn load_constants(s: &Settings, params: &HeightParams) -> Out<CalibratedConstants> {
    let path = s.calibration.as_ref().ok_or_else(|| invalid("a calibration file is required (--calibration)"))?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read calibration file {}", path.display()))
        .map_err(Failure::Invalid)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("calibration file {} is not JSON", path.display()))
        .map_err(Failure::Invalid)?;
    // Accept both a bare constants object and a full calibration report.
    let inner = value.get("constants").cloned().unwrap_or(value);
    let consts: CalibratedConstants = serde_json::from_value(inner)
        .with_context(|| format!("calibration file {} lacks the constants", path.display()))
        .map_err(Failure::Invalid)?;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
    if !same(consts.lambda, params.lambda) || !same(consts.t, params.t) || !same(consts.epsilon, params.epsilon) {
        return Err(invalid(format!(
            "calibration was made for lambda={}, t={}, epsilon={} but the run uses lambda={}, t={}, epsilon={}",
            consts.lambda, consts.t, consts.epsilon, params.lambda, params.t, params.epsilon
        )));
    }
    Ok(consts)
}

fn parse_point(s: &str) -> Out<XPrimePoint> {
    let (tau, xi) = s.split_once(';').ok_or_else(|| invalid("point must read \"tau_1,...;xi_1,...\""))?;
    let nums = |part: &str| -> Out<Vec<f64>> {
        part.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| invalid(format!("bad number '{v}': {e}"))))
            .collect()
    };
    Ok(XPrimePoint::new(nums(tau)?, nums(xi)?)?)
}

fn parse_exact(s: &str, d: usize) -> Out<Vec<Value>> {
    let v = parse_vector(s)?;
    if v.len() + 1 != d {
        return Err(invalid(format!("expected {} entries for d = {d}, got {}", d - 1, v.len())));
    }
    Ok(v)
}

fn direction(i: usize, d: usize) -> Out<usize> {
    if i == 0 || i > d - 1 {
        return Err(invalid(format!("--i must lie in 1..={}", d - 1)));
    }
    Ok(i - 1)
}

fn run(cli: Cli) -> Out<()> {
    let s = settings(&cli.common)?;
    let params = s.height_params();
    params.validate()?;
    match cli.command {
        Command::Heights { point, i } => {
            let consts = load_constants(&s, &params)?;
            let x = parse_point(&point)?;
            let i = direction(i, x.d())?;
            let phi = x.phi_i(i);
            let bq = bq_alpha_slice(&x, &[i], &params)?.remove(0);
            let tilde = alpha_tilde(&x, i, &params, &consts)?;
            let mut flags = bq.flags.clone();
            flags.extend(tilde.flags.iter().copied().filter(|f| !bq.flags.contains(f)));
            let row = [
                ("kappa", x.kappa_i(i)),
                ("phi_lambda1", phi_lambda1(&x, i)?),
                ("ht", ht2(phi, params.lambda)?),
                ("alpha_prime", alpha_prime(&x, i, params.lambda)?),
                ("alpha_bq", bq.value),
                ("alpha_tilde", tilde.value),
            ];
            let mut obj = serde_json::Map::new();
            for (k, v) in row {
                obj.insert(k.into(), json!(v));
            }
            obj.insert("branch".into(), json!(tilde.branch));
            obj.insert("flags".into(), json!(flags));
            let report = Report::json(serde_json::Value::Object(obj)).with_csv(
                row.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(","),
                vec![row.iter().map(|(_, v)| csv_number(*v)).collect::<Vec<_>>().join(",")],
            );
            report.emit(&s, None).map_err(Failure::Runtime)
        }
        Command::Calibrate { samples, tau_range } => {
            let seed = s.require_seed().map_err(Failure::Invalid)?;
            let r = calibrate(&params, &SampleSpec::new(samples, seed, s.d, tau_range))?;
            let line = format!(
                "INFO calibrate C={} C_ht={} E101={} over {} samples",
                r.constants.c, r.constants.c_ht, r.constants.e101, samples
            );
            let csv_rows = r.constants.d_breakpoints.iter().map(|(h, dv)| format!("{},{}", csv_number(*h), csv_number(*dv))).collect();
            Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("h,D".into(), csv_rows).emit(&s, Some(&line)).map_err(Failure::Runtime)
        }
        Command::VerifyContraction { check, kind, group, samples, tau_range, cusp_fraction, min_pass_rate, slack, point, perturbations } => {
            let seed = s.require_seed().map_err(Failure::Invalid)?;
            let consts = load_constants(&s, &params)?;
            let spec = SampleSpec::new(samples, seed, s.d, tau_range).with_cusp_fraction(cusp_fraction);
            spec.validate()?;
            let (pass, line, report) = match check {
                Check::Subharmonic => {
                    let r = check_subharmonic(kind, &params, &consts, &spec)?;
                    let pass = r.pass_rate >= min_pass_rate;
                    let line = format!("{} subharmonic {kind} pass_rate={} (threshold {min_pass_rate})", verdict(pass), r.pass_rate);
                    let rows = r
                        .samples
                        .iter()
                        .map(|x| format!("{},{},{},{},{},{}", csv_number(x.input_height), csv_number(x.integral_estimate), csv_number(x.error), csv_number(x.bound), x.pass, x.regime))
                        .collect();
                    (pass, line, Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("height,integral,error,bound,pass,regime".into(), rows))
                }
                Check::Lipschitz => {
                    let r = check_log_lipschitz(kind, group.into(), &params, &consts, &spec, perturbations)?;
                    let line = format!("{} log-lipschitz {kind} max_log_ratio={} fitted={}", verdict(r.pass), r.max_log_ratio, r.fitted_constant);
                    let rows = r.per_sample.iter().map(|v| csv_number(*v)).collect();
                    (r.pass, line, Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("log_ratio".into(), rows))
                }
                Check::Beta => {
                    let n = s.n.unwrap_or(8);
                    let delta = s.delta.unwrap_or(0.1);
                    let h = s.h.unwrap_or(1.01 * consts.e101 * params.t.exp());
                    let fitted = fit_constants(&params, &consts, &spec, perturbations, &[n.max(2)], delta)?;
                    let r = check_beta_contraction(&params, &consts, &spec.draw()?, n, delta, h, fitted.c5, fitted.c6, slack)?;
                    let pass = r.nonvacuous > 0 && r.pass_rate >= min_pass_rate;
                    let line = format!("{} beta nonvacuous={} pass_rate={} rate_bound={}", verdict(pass), r.nonvacuous, r.pass_rate, r.rate_bound);
                    let rows = r
                        .samples
                        .iter()
                        .map(|b| format!("{},{},{},{},{}", b.direction + 1, csv_number(b.alpha_tilde), csv_number(b.integral), b.rate.map(csv_number).unwrap_or_default(), b.pass))
                        .collect();
                    (pass, line, Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("i,alpha_tilde,integral,rate,pass".into(), rows))
                }
                Check::Psi => {
                    let x = parse_point(point.as_deref().ok_or_else(|| invalid("the psi check needs --point"))?)?;
                    let n = s.n.unwrap_or(1);
                    let delta = s.delta.unwrap_or(0.5);
                    let h = s.h.unwrap_or(1.01 * consts.e101 * params.t.exp());
                    let fitted = fit_constants(&params, &consts, &spec, perturbations, &[n.max(2)], delta)?;
                    let c7 = fit_c7(&[n.max(2)], delta, x.d(), params.t)?;
                    let r = check_psi_bounds(&params, &consts, &x, n, delta, h, c7, fitted.c11, s.theta_grid_res.unwrap_or(16), n <= 4)?;
                    let line = format!("{} psi integral={} trivial_bound={}", verdict(r.pass), r.integral, r.trivial_bound);
                    let row = format!("{},{},{}", n, csv_number(r.integral), csv_number(r.trivial_bound));
                    (r.pass, line, Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("N,integral,trivial_bound".into(), vec![row]))
                }
            };
            report.emit(&s, Some(&line)).map_err(Failure::Runtime)?;
            if pass {
                Ok(())
            } else {
                Err(Failure::Verdict)
            }
        }
        Command::Littlewood { xi, q_max } => {
            let xi = parse_exact(&xi, s.d)?;
            let r = littlewood_min(&xi, q_max)?;
            let line = format!("INFO littlewood min={} at q={} (Q={})", r.min_value, r.argmin, r.q_horizon);
            let rows = r.series.iter().map(|(q, v)| format!("{q},{}", csv_number(*v))).collect();
            Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("q,value".into(), rows).emit(&s, Some(&line)).map_err(Failure::Runtime)
        }
        Command::InhomLittlewood { xi, theta, q0, q_max } => {
            let xi = parse_exact(&xi, s.d)?;
            match theta {
                Some(th) => {
                    let theta = parse_exact(&th, s.d)?;
                    let r = inhom_littlewood_min(&xi, &theta, q_max, q0)?;
                    let line = format!("INFO inhom-littlewood min={} at q={} over [{}, {}]", r.min_value, r.argmin, r.q0, r.q_horizon);
                    let rows = r.series.iter().map(|(q, v)| format!("{q},{}", csv_number(*v))).collect();
                    Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("q,value".into(), rows).emit(&s, Some(&line)).map_err(Failure::Runtime)
                }
                None => {
                    let res = s.theta_grid_res.unwrap_or(64);
                    let r = theta_scan(&xi, res, q0, q_max)?;
                    let line = format!("INFO theta-scan max={} at theta={:?} (resolution 1/{res})", r.max_value, r.argmax_theta);
                    let theta_str = r.argmax_theta.iter().map(|v| csv_number(*v)).collect::<Vec<_>>().join(";");
                    let row = format!("{},{},{}", res, csv_number(r.max_value), theta_str);
                    Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("resolution,max_value,argmax_theta".into(), vec![row]).emit(&s, Some(&line)).map_err(Failure::Runtime)
                }
            }
        }
        Command::Dani { xi, theta, eps, t_min } => {
            let xi = parse_exact(&xi, s.d)?;
            let n = s.n.unwrap_or(12);
            match theta {
                None => {
                    let r = dani_check(&xi, eps, n, params.t, params.enum_cap)?;
                    let last = |v: &[(usize, f64)]| v.last().map(|p| p.1).unwrap_or(0.0);
                    let line = format!("INFO dani singular={} mahler={} at N={n}", last(&r.singular), last(&r.mahler));
                    let mut rows: Vec<String> = r.singular.iter().map(|(k, v)| format!("{k},{},singular", csv_number(*v))).collect();
                    rows.extend(r.mahler.iter().map(|(k, v)| format!("{k},{},mahler", csv_number(*v))));
                    Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("N,density,series".into(), rows).emit(&s, Some(&line)).map_err(Failure::Runtime)
                }
                Some(th) => {
                    let theta = parse_exact(&th, s.d)?;
                    let r = inhom_dani_scan(&xi, &theta, eps, t_min, n, params.t, params.enum_cap)?;
                    let line = match &r.first_violation {
                        Some((tau, norm)) => format!("INFO inhom-dani ball met at tau={tau:?} norm={norm}"),
                        None => format!("INFO inhom-dani no ball hit over {} points", r.points_scanned),
                    };
                    let row = match &r.first_violation {
                        Some((tau, norm)) => format!("{},{}", tau.iter().map(|v| csv_number(*v)).collect::<Vec<_>>().join(";"), csv_number(*norm)),
                        None => ",".into(),
                    };
                    Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("tau,norm".into(), vec![row]).emit(&s, Some(&line)).map_err(Failure::Runtime)
                }
            }
        }
        Command::Divergence { xi, eps, gate, singular } => {
            let xi = parse_exact(&xi, s.d)?;
            let n = s.n.unwrap_or(40);
            let (gate, consts) = match gate {
                GateArg::Epsilon => (Gate::Epsilon(eps), CalibratedConstants::uncalibrated(&params, s.d)),
                GateArg::Height => {
                    let consts = load_constants(&s, &params)?;
                    (Gate::Height(s.h.ok_or_else(|| invalid("the height gate needs --h"))?), consts)
                }
            };
            let series = escape_of_mass(&OrbitBase::from_xi(xi.clone()), n, params.t, gate, &params, &consts)?;
            let sing = if singular { Some(mult_singular_density(&xi, eps, n, params.enum_cap)?) } else { None };
            let last = series.series.last().map(|p| p.1).unwrap_or(0.0);
            let line = format!("INFO divergence density={last} at N={n}");
            let rows = series.series.iter().map(|(k, v)| format!("{k},{}", csv_number(*v))).collect();
            let body = json!({ "escape": series, "singular": sing });
            Report::json(body).with_csv("N,density".into(), rows).emit(&s, Some(&line)).map_err(Failure::Runtime)
        }
        Command::Dimension { point, n_list, t_cov } => {
            let consts = load_constants(&s, &params)?;
            let x = parse_point(&point)?;
            let delta = s.delta.unwrap_or(0.3);
            let h = s.h.unwrap_or(2.0 * consts.e101 * params.t.exp());
            let c7 = fit_c7(&n_list, delta, x.d(), params.t)?;
            let r = covering_counts(&x, &n_list, delta, h, t_cov.unwrap_or(params.t), &params, &consts, c7, COVERING_BUDGET)?;
            let slopes: Vec<String> = r.rows.iter().map(|row| format!("N={}:{}", row.n, row.slope)).collect();
            let line = format!("INFO dimension slopes {}", slopes.join(" "));
            let rows = r
                .rows
                .iter()
                .map(|row| format!("{},{},{},{}", row.n, csv_number(row.resolution), row.covering_count, csv_number(row.slope)))
                .collect();
            Report::serialize(&r).map_err(Failure::Runtime)?.with_csv("N,resolution,M,slope".into(), rows).emit(&s, Some(&line)).map_err(Failure::Runtime)
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
