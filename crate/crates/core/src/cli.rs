//! Command-line driver. Every subcommand reads JSON inputs, writes a JSON
//! report (or CSV / a bare number where noted) and maps failures to exit
//! codes: 0 success, 1 suite breach or internal failure, 2 invalid input,
//! 3 numeric non-convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::info_geom::{
    asymptotic_variance, fisher_at_time_n, fisher_information, kl_taylor, pressure_derivatives, tangent_project,
    DEFAULT_STEP, GREEN_KUBO_TOL,
};
use crate::involution::{duality_check, entropy_production_report, flip_kl};
use crate::io::{load_family, load_matrix, load_measure, load_potential, MeasureFile};
use crate::maxent::{
    energy_rate_decomposition, gibbs_equation, maxent_solve, susceptibility, thermo_operation_accounting, RateMode,
    DEFAULT_H_BETA, DEFAULT_H_V,
};
use crate::measure::{
    iterate_push, iterated_irn_closed_form, kl_divergence, weak_convergence_trace, EquilibriumState,
    SuitableMeasure, CONSISTENCY_TOL,
};
use crate::second_law::{
    entropy_change, ep_dyn, kl_along_orbit, rrty_margin, second_law_v1,
};
use crate::suite::{run_suite, Check};
use crate::transfer::{equilibrium, normalization_residual, perron, NORMALIZATION_TOL, PERRON_TOL};

#[derive(Debug, Parser)]
#[command(name = "thermoform", version, about = "Thermodynamic formalism on the full shift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Options shared by every subcommand; each command checks the ones it needs.
#[derive(Debug, Clone, Args)]
struct RunConfig {
    /// Potential file
    #[arg(long)]
    potential: Option<PathBuf>,
    /// Normalized potential (log Jacobian) file
    #[arg(long)]
    jacobian: Option<PathBuf>,
    /// Second log Jacobian file
    #[arg(long)]
    jacobian2: Option<PathBuf>,
    /// Measure file
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Second measure file
    #[arg(long)]
    measure2: Option<PathBuf>,
    /// Column-stochastic matrix file
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Constraint family file
    #[arg(long)]
    family: Option<PathBuf>,
    /// Observable file (potential format)
    #[arg(long)]
    observable: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Comma-separated theta values
    #[arg(long, allow_hyphen_values = true)]
    theta_grid: Option<String>,
    /// Comma-separated inverse temperatures
    #[arg(long, allow_hyphen_values = true)]
    beta_grid: Option<String>,
    /// Comma-separated constraint values
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    /// Comma-separated multipliers
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Constraint index, 1-based
    #[arg(long)]
    index: Option<usize>,
    /// Generator parameter
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Topological pressure of a potential
    Pressure(RunConfig),
    /// Perron data and equilibrium state of a potential
    Equilibrium(RunConfig),
    /// Entropy of a measure, Markov chain or equilibrium state
    Entropy(RunConfig),
    /// KL divergence between two measures
    Kl(RunConfig),
    /// Push a measure n times by the dual operator
    Push(RunConfig),
    /// Cylinder deviation and KL along the push orbit
    Orbit(RunConfig),
    /// First form of the Second Law
    SecondLaw(RunConfig),
    /// Sufficient condition for entropy increase
    Rrty(RunConfig),
    /// Fisher information, asymptotic variance and pressure curvature
    Fisher(RunConfig),
    /// KL along an exponential family with its Taylor predictions
    KlTaylor(RunConfig),
    /// Maximum-entropy multipliers for constraint values
    Maxent(RunConfig),
    /// Pressure and entropy susceptibility matrices
    Susceptibility(RunConfig),
    /// Entropy-energy relation along a temperature grid
    GibbsEq(RunConfig),
    /// Work, heat and energy of one thermodynamic operation
    ThermoOp(RunConfig),
    /// Work, heat and energy rates along a parametrized family
    EnergyRate(RunConfig),
    /// Flip entropy production of an equilibrium state
    EntropyProduction(RunConfig),
    /// Randomized invariant suite
    VerifyAll(RunConfig),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunConfig) {
        match self {
            Command::Pressure(c) => ("pressure", c),
            Command::Equilibrium(c) => ("equilibrium", c),
            Command::Entropy(c) => ("entropy", c),
            Command::Kl(c) => ("kl", c),
            Command::Push(c) => ("push", c),
            Command::Orbit(c) => ("orbit", c),
            Command::SecondLaw(c) => ("second-law", c),
            Command::Rrty(c) => ("rrty", c),
            Command::Fisher(c) => ("fisher", c),
            Command::KlTaylor(c) => ("kl-taylor", c),
            Command::Maxent(c) => ("maxent", c),
            Command::Susceptibility(c) => ("susceptibility", c),
            Command::GibbsEq(c) => ("gibbs-eq", c),
            Command::ThermoOp(c) => ("thermo-op", c),
            Command::EnergyRate(c) => ("energy-rate", c),
            Command::EntropyProduction(c) => ("entropy-production", c),
            Command::VerifyAll(c) => ("verify-all", c),
        }
    }
}

enum Output {
    Number(&'static str, f64),
    Report(Value),
    Table(Value, Vec<&'static str>, Vec<Vec<Option<f64>>>),
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            eprintln!("{} (see --help)", text.lines().next().unwrap_or("invalid arguments"));
            return 2;
        }
    };
    let (name, cfg) = cli.command.parts();
    let result = dispatch(name, cfg).and_then(|(out, code)| emit(cfg, out).map(|_| code));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => 3,
        Error::Internal(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str, command: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidInput(format!("{command} requires --{flag}")))
}

fn parse_list(text: &str, flag: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("--{flag}: {t:?} is not a number")))
        })
        .collect()
}

fn report(name: &str, cfg: &RunConfig, tolerances: Value, results: Value, checks: Vec<Check>) -> Value {
    let pass = checks.iter().all(|c| c.pass);
    json!({
        "engine": "thermoform",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "seed": cfg.seed,
        "tolerances": tolerances,
        "results": results,
        "checks": checks,
        "pass": pass,
    })
}

fn check(name: &str, identity: &str, residual: f64, tolerance: f64) -> Check {
    Check {
        check: name.into(),
        identity: identity.into(),
        residual,
        tolerance,
        inputs: Value::Null,
        pass: residual.is_finite() && residual < tolerance,
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// The measure named by `--measure`, `--matrix` or the equilibrium of `--potential`.
fn any_measure(cfg: &RunConfig, name: &str) -> Result<SuitableMeasure> {
    if let Some(p) = &cfg.measure {
        load_measure(p)
    } else if let Some(p) = &cfg.matrix {
        load_matrix(p)?.into_measure()
    } else if let Some(p) = &cfg.potential {
        Ok(equilibrium(&load_potential(p)?)?.into_measure())
    } else {
        Err(Error::InvalidInput(format!("{name} requires --measure, --matrix or --potential")))
    }
}

fn invariant(measure: SuitableMeasure) -> Result<EquilibriumState> {
    EquilibriumState::new(measure)
}

fn dispatch(name: &str, cfg: &RunConfig) -> Result<(Output, i32)> {
    let ok = |o: Output| Ok((o, 0));
    match name {
        "pressure" => {
            let a = load_potential(require(&cfg.potential, "potential", name)?)?;
            let data = perron(&a)?;
            if cfg.format == Some(Format::Json) {
                let results = json!({"pressure": data.log_lambda, "lambda": data.lambda});
                ok(Output::Report(report(name, cfg, json!({"perron": PERRON_TOL}), results, vec![])))
            } else {
                ok(Output::Number("pressure", data.log_lambda))
            }
        }
        "equilibrium" => {
            let a = load_potential(require(&cfg.potential, "potential", name)?)?;
            let data = perron(&a)?;
            let mu = equilibrium(&a)?;
            let mut results = json!({
                "measure": MeasureFile::from(mu.measure()),
                "pressure": data.log_lambda,
                "lambda": data.lambda,
                "phi": data.phi,
                "nu": data.nu,
                "entropy": mu.entropy()?,
            });
            if let Some(m) = cfg.depth {
                results["weights"] = to_value(&mu.weights(m)?)?;
            }
            let checks = vec![
                check(
                    "jacobian-normalization",
                    "sum over preimages of J equals one",
                    normalization_residual(mu.log_jacobian())?,
                    NORMALIZATION_TOL,
                ),
                check(
                    "shift-invariance",
                    "cylinder weights are shift invariant",
                    mu.shift_invariance_residual(mu.depth() + 1)?,
                    NORMALIZATION_TOL,
                ),
            ];
            ok(Output::Report(report(name, cfg, json!({"perron": PERRON_TOL}), results, checks)))
        }
        "entropy" => {
            let mu = any_measure(cfg, name)?;
            let h = mu.entropy()?;
            if cfg.format == Some(Format::Json) {
                ok(Output::Report(report(name, cfg, json!({}), json!({"entropy": h}), vec![])))
            } else {
                ok(Output::Number("entropy", h))
            }
        }
        "kl" => {
            let mu1 = load_measure(require(&cfg.measure, "measure", name)?)?;
            let mu2 = load_measure(require(&cfg.measure2, "measure2", name)?)?;
            let kl = kl_divergence(&mu1, &mu2)?;
            if cfg.format == Some(Format::Json) {
                ok(Output::Report(report(name, cfg, json!({}), json!({"kl": kl}), vec![])))
            } else {
                ok(Output::Number("kl", kl))
            }
        }
        "push" => {
            let j = load_potential(require(&cfg.jacobian, "jacobian", name)?)?;
            let mu0 = any_measure(cfg, name)?;
            let n = cfg.n.unwrap_or(1);
            let mu = iterate_push(&j, &mu0, n)?;
            let formula = iterated_irn_closed_form(&j, mu0.log_irn(), n)?;
            let depth = formula.depth().max(mu.depth());
            let closed = mu.log_irn().extend_depth(depth)?.distance(&formula.extend_depth(depth)?)?;
            let results = json!({"n": n, "measure": MeasureFile::from(&mu), "entropy": mu.entropy()?});
            let checks = vec![
                check("iterated-irn-closed-form", "IRN after n pushes in closed form", closed, 1e-12),
                check(
                    "irn-consistency",
                    "cylinder ratios reproduce the IRN",
                    mu.verify_irn(mu.depth() + 1)?,
                    CONSISTENCY_TOL,
                ),
            ];
            ok(Output::Report(report(name, cfg, json!({"consistency": CONSISTENCY_TOL}), results, checks)))
        }
        "orbit" => {
            let j = load_potential(require(&cfg.jacobian, "jacobian", name)?)?;
            let mu0 = any_measure(cfg, name)?;
            let n = cfg.n.unwrap_or(5);
            let probe = cfg.depth.unwrap_or(2);
            let rows = weak_convergence_trace(&j, &mu0, n, probe)?;
            let drift = rows.iter().map(|r| (r.kl - rows[0].kl).abs()).fold(0.0, f64::max);
            let (kl, rhs) = kl_along_orbit(&j, &mu0, n)?;
            let checks = vec![
                check("kl-constant-on-orbit", "KL to equilibrium is constant along the push orbit", drift, 1e-10),
                check(
                    "kl-along-orbit",
                    "KL along the push orbit as an integral of IRN differences",
                    (kl - rhs).abs(),
                    1e-10,
                ),
            ];
            let results = json!({"probe_depth": probe, "trace": rows, "kl": kl, "rhs": rhs});
            let rep = report(name, cfg, json!({}), results, checks);
            let table = rows
                .iter()
                .map(|r| vec![Some(r.n as f64), Some(r.deviation), Some(r.total_variation), Some(r.kl)])
                .collect();
            ok(Output::Table(rep, vec!["n", "deviation", "total_variation", "kl"], table))
        }
        "second-law" => {
            let j = load_potential(require(&cfg.jacobian, "jacobian", name)?)?;
            let mu1 = any_measure(cfg, name)?;
            let r = second_law_v1(&j, &mu1)?;
            let change = entropy_change(&j, &mu1)?;
            let dynamic = ep_dyn(&j, &mu1)?;
            let checks = vec![
                check(
                    "entropy-monotone",
                    "entropy of the re-equilibrated push does not drop",
                    (r.h1 - r.h3).max(0.0),
                    1e-12,
                ),
                check("pushed-irn-pressure", "pressure of the pushed IRN vanishes", r.pressure_log_j2.abs(), 1e-10),
                check("absolute-continuity", "equilibrium of the pushed IRN has density phi", r.ac_residual, 1e-10),
                check("entropy-identity", "entropy equals minus the integral of the IRN", r.h3_identity_residual, 1e-10),
                check(
                    "kl-to-equilibrium-invariance",
                    "KL divergence to the equilibrium of J is invariant under its dual operator",
                    dynamic.abs(),
                    1e-10,
                ),
            ];
            let mut results = to_value(&r)?;
            results["entropy_change"] = json!(change);
            results["ep_dyn"] = json!(dynamic);
            ok(Output::Report(report(name, cfg, json!({}), results, checks)))
        }
        "rrty" => {
            let j = load_potential(require(&cfg.jacobian, "jacobian", name)?)?;
            let mu1 = any_measure(cfg, name)?;
            let margin = rrty_margin(&j, &mu1)?;
            let change = entropy_change(&j, &mu1)?;
            let breach = if margin >= 0.0 { (-change).max(0.0) } else { 0.0 };
            let checks = vec![check(
                "entropy-increase-condition",
                "nonnegative margin implies entropy does not decrease",
                breach,
                1e-12,
            )];
            let results = json!({"margin": margin, "entropy_change": change, "condition_holds": margin >= 0.0});
            ok(Output::Report(report(name, cfg, json!({}), results, checks)))
        }
        "fisher" => {
            let a = load_potential(require(&cfg.potential, "potential", name)?)?;
            let eta = load_potential(require(&cfg.observable, "observable", name)?)?;
            let h = cfg.step.unwrap_or(DEFAULT_STEP);
            let tol = cfg.tol.unwrap_or(GREEN_KUBO_TOL);
            let n = cfg.n.unwrap_or(8);
            let mu = equilibrium(&a)?;
            let t = tangent_project(&mu, &eta)?;
            let fisher = fisher_information(&t)?;
            let var = asymptotic_variance(&mu, t.xi(), tol)?;
            let (first, second) = pressure_derivatives(mu.log_jacobian(), t.xi(), h)?;
            let finite = fisher_at_time_n(&mu, t.xi(), n, h)?;
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            let scale = t.xi().sup_norm().powi(3).max(1.0);
            let checks = vec![
                check(
                    "fisher-variance",
                    "Fisher information of a tangent vector equals its asymptotic variance",
                    rel(fisher, var),
                    1e-10,
                ),
                check(
                    "pressure-curvature",
                    "second derivative of pressure equals the asymptotic variance (error over max(1, sup|xi|^3))",
                    (second - var).abs() / scale,
                    10.0 * h * h,
                ),
            ];
            let results = json!({
                "fisher": fisher,
                "asymptotic_variance": var,
                "pressure_first_derivative": first,
                "pressure_second_derivative": second,
                "n": n,
                "fisher_at_time_n": finite,
                "fisher_per_step": finite / n as f64,
                "three_way_relative": rel(fisher, var).max(rel(second, var)),
                "tangent_xi": t.xi().values(),
            });
            ok(Output::Report(report(name, cfg, json!({"green_kubo": tol, "step": h}), results, checks)))
        }
        "kl-taylor" => {
            let mu1 = invariant(any_measure(cfg, name)?)?;
            let mu2 = match &cfg.measure2 {
                Some(p) => invariant(load_measure(p)?)?,
                None => mu1.clone(),
            };
            let xi = load_potential(require(&cfg.observable, "observable", name)?)?;
            let grid = match &cfg.theta_grid {
                Some(t) => parse_list(t, "theta-grid")?,
                None => vec![-1e-2, -5e-3, 0.0, 5e-3, 1e-2],
            };
            let t = kl_taylor(&mu1, &mu2, &xi, &grid)?;
            let table = t
                .samples
                .iter()
                .map(|s| vec![Some(s.theta), Some(s.kl), Some(t.slope_pred), Some(t.curvature_pred)])
                .collect();
            let rep = report(name, cfg, json!({"green_kubo": GREEN_KUBO_TOL}), to_value(&t)?, vec![]);
            ok(Output::Table(rep, vec!["theta", "kl", "slope_pred", "curvature_pred"], table))
        }
        "maxent" => {
            let family = load_family(require(&cfg.family, "family", name)?)?;
            let target = parse_list(
                cfg.target
                    .as_deref()
                    .ok_or_else(|| Error::InvalidInput("maxent requires --target".into()))?,
                "target",
            )?;
            let tol = cfg.tol.unwrap_or(1e-12);
            let sol = maxent_solve(&family, &target, tol)?;
            let checks = vec![
                check("maxent-constraints", "constraint values reproduced", sol.residual, tol),
                check(
                    "maxent-entropy",
                    "maximal entropy equals the Legendre transform of pressure",
                    (sol.alpha - sol.entropy).abs(),
                    1e-8,
                ),
            ];
            ok(Output::Report(report(name, cfg, json!({"newton": tol}), to_value(&sol)?, checks)))
        }
        "susceptibility" => {
            let family = load_family(require(&cfg.family, "family", name)?)?;
            let z = match &cfg.z {
                Some(t) => parse_list(t, "z")?,
                None => vec![0.0; family.len()],
            };
            let h = cfg.step.unwrap_or(DEFAULT_STEP);
            let s = susceptibility(&family, &z, h)?;
            let checks = vec![
                check("susceptibility-green-kubo", "pressure Hessian equals the covariance matrix", s.sp_crosscheck, 1e-4),
                check(
                    "susceptibility-duality",
                    "entropy susceptibility is minus the inverse pressure susceptibility",
                    s.duality_residual,
                    1e-4,
                ),
            ];
            ok(Output::Report(report(name, cfg, json!({"step": h}), to_value(&s)?, checks)))
        }
        "gibbs-eq" => {
            let hamiltonian = load_potential(require(&cfg.potential, "potential", name)?)?;
            let grid = match &cfg.beta_grid {
                Some(t) => parse_list(t, "beta-grid")?,
                None => (0..20).map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 19.0)).collect(),
            };
            let h = cfg.step.unwrap_or(DEFAULT_H_BETA);
            let rows = gibbs_equation(&hamiltonian, &grid, h)?;
            let worst = rows
                .iter()
                .map(|r| r.dh_de.map_or(0.0, |v| (v - r.beta).abs()))
                .fold(0.0, f64::max);
            let checks = vec![check(
                "gibbs-relation",
                "derivative of entropy in energy equals inverse temperature",
                worst,
                1e-3,
            )];
            let table = rows
                .iter()
                .map(|r| vec![Some(r.beta), Some(r.energy), Some(r.entropy), r.dh_de, Some(r.energy_crosscheck)])
                .collect();
            let rep = report(name, cfg, json!({"h_beta": h}), json!({"rows": rows}), checks);
            ok(Output::Table(rep, vec!["beta", "energy", "entropy", "dh_de", "energy_crosscheck"], table))
        }
        "thermo-op" => {
            let j1 = load_potential(require(&cfg.jacobian, "jacobian", name)?)?;
            let j2 = load_potential(require(&cfg.jacobian2, "jacobian2", name)?)?;
            let mu1 = any_measure(cfg, name)?;
            let acc = thermo_operation_accounting(&j1, &j2, &mu1)?;
            let checks = vec![check(
                "first-law-operation",
                "work plus heat equals internal energy change",
                acc.residual,
                1e-12,
            )];
            ok(Output::Report(report(name, cfg, json!({}), to_value(&acc)?, checks)))
        }
        "energy-rate" => {
            let family = load_family(require(&cfg.family, "family", name)?)?;
            let mode = match (&cfg.target, &cfg.z) {
                (Some(t), None) => RateMode::FixedConstraints(parse_list(t, "target")?),
                (None, Some(z)) => RateMode::FixedMultipliers(parse_list(z, "z")?),
                _ => {
                    return Err(Error::InvalidInput(
                        "energy-rate requires exactly one of --target or --z".into(),
                    ))
                }
            };
            let index = cfg.index.unwrap_or(1);
            if index == 0 {
                return Err(Error::InvalidInput("--index is 1-based".into()));
            }
            let h = cfg.step.unwrap_or(DEFAULT_H_V);
            let v0 = cfg.v0.unwrap_or(0.0);
            let rates = energy_rate_decomposition(&family, index - 1, &mode, v0, h)?;
            let checks = vec![check(
                "first-law-rates",
                "work plus heat rates equal the internal energy rate",
                rates.residual,
                1e-8,
            )];
            let mut results = to_value(&rates)?;
            results["index"] = json!(index);
            results["v0"] = json!(v0);
            ok(Output::Report(report(name, cfg, json!({"step": h}), results, checks)))
        }
        "entropy-production" => {
            let a = load_potential(require(&cfg.potential, "potential", name)?)?;
            let r = entropy_production_report(&a)?;
            let mut results = to_value(&r)?;
            let mut checks = Vec::new();
            if a.depth() <= 3 {
                let kl = flip_kl(&a)?;
                results["flip_kl"] = json!(kl);
                checks.push(check(
                    "production-flip-kl",
                    "entropy production equals KL to the time reversal",
                    (kl - r.e_p).abs(),
                    1e-10,
                ));
            }
            if a.depth() <= 2 {
                let residual = duality_check(&a)?;
                results["duality_residual"] = json!(residual);
                checks.push(check(
                    "kernel-duality",
                    "dual eigenmeasure integrated against the kernel is proportional to the eigenfunction",
                    residual,
                    1e-10,
                ));
            }
            ok(Output::Report(report(name, cfg, json!({}), results, checks)))
        }
        "verify-all" => {
            let suite = run_suite(cfg.seed)?;
            let code = if suite.pass { 0 } else { 1 };
            Ok((Output::Report(to_value(&suite)?), code))
        }
        other => Err(Error::Internal(format!("unhandled command {other}"))),
    }
}

fn csv_field(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| serde_json::to_string(&x).unwrap_or_default())
}

fn emit(cfg: &RunConfig, out: Output) -> Result<()> {
    let text = match (out, cfg.format) {
        (Output::Number(_, x), Some(Format::Csv)) | (Output::Number(_, x), None) => format!("{x}\n"),
        (Output::Number(label, x), Some(Format::Json)) => format!("{}\n", json!({ label: x })),
        (Output::Table(_, header, rows), Some(Format::Csv)) => {
            let mut s = header.join(",");
            s.push('\n');
            for row in rows {
                s.push_str(&row.into_iter().map(csv_field).collect::<Vec<_>>().join(","));
                s.push('\n');
            }
            s
        }
        (Output::Report(_), Some(Format::Csv)) => {
            return Err(Error::InvalidInput("this command has no CSV form; use --format json".into()))
        }
        (Output::Report(v), _) | (Output::Table(v, _, _), _) => {
            let mut s = serde_json::to_string_pretty(&v)?;
            s.push('\n');
            s
        }
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("-0.01, 0,5e-3", "g").unwrap(), vec![-0.01, 0.0, 5e-3]);
        assert!(parse_list("1,x", "g").is_err());
    }

    #[test]
    fn parse_errors_exit_two() {
        assert_eq!(run(["thermoform", "pressure", "--bogus"]), 2);
        assert_eq!(run(["thermoform", "frobnicate"]), 2);
        assert_eq!(run(["thermoform", "pressure"]), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NonConvergence { what: "x".into(), iterations: 1 }), 3);
        assert_eq!(exit_code(&Error::Domain("x".into())), 2);
    }
}
