//! Command-line front end: parse a model document, run the
//! check / equilibrium / simulate / periodic / stability pipelines, emit CSV
//! trajectories and JSON reports.
//!
//! Exit codes: 0 success, 1 input error, 2 hypothesis failure (`check`),
//! 3 computation error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use irnn_cli::bundled_document;
use irnn_cli::document::{BuiltModel, ModelDocument};
use irnn_core::equilibrium::{check_condition_a, solve_equilibrium};
use irnn_core::hypotheses::{check_hypotheses, derive_constants};
use irnn_core::integrator::{simulate, StepControl, StepMethod};
use irnn_core::model::validate;
use irnn_core::periodic::{find_periodic, poincare_check, SampledRef};
use irnn_core::stability::{verify_decay, verify_lambda_inequality, Reference};

#[derive(Parser)]
#[command(
    name = "irnn",
    about = "Simulate and verify impulsive recurrent neural networks with piecewise constant delay",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate hypotheses H1-H7, the equilibrium dominance condition and
    /// condition (A); exit 2 when the required guarantee bundle fails.
    Check {
        /// Document path or bundled name (example1, example2, example3)
        document: String,
        /// Guarantee bundle that decides the exit code
        #[arg(long, value_enum, default_value_t = Bundle::Existence)]
        require: Bundle,
        /// Tolerance for condition (A)
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Write the full report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the algebraic equilibrium system by contraction iteration.
    Equilibrium {
        document: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// Write the result as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the hybrid system and export the trajectory as CSV.
    Simulate {
        document: String,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Override the initial state, comma separated (e.g. "7,7")
        #[arg(long)]
        x0: Option<String>,
        /// Trajectory CSV path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the periodic solution as the fixed point of the
    /// Green's-function operator and export it as CSV.
    Periodic {
        document: String,
        /// Grid resolution (default ω/200)
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 200)]
        max_sweeps: usize,
        /// Periodic solution CSV path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate and verify the decay bound and the λ-inequality against a
    /// reference (equilibrium or periodic solution).
    Stability {
        document: String,
        #[arg(long, value_enum, default_value_t = RefKind::Equilibrium)]
        reference: RefKind,
        #[arg(long)]
        slack: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Distance below which the trajectory counts as converged
        #[arg(long, default_value_t = 1e-6)]
        conv_tol: f64,
        /// Write the report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Bundle {
    /// H1-H3: unique solutions for all initial data
    Existence,
    /// H1-H5: globally stable equilibrium dynamics
    Stability,
    /// H1-H3, H6-H7: unique periodic solution
    Periodic,
    /// per-unit dominance: unique equilibrium of the algebraic system
    Equilibrium,
    /// everything checkable
    All,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum RefKind {
    Equilibrium,
    Periodic,
}

enum AppError {
    Input(String),
    Hypothesis(String),
    Module(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Input(_) => 1,
            AppError::Hypothesis(_) => 2,
            AppError::Module(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            AppError::Input(m) | AppError::Hypothesis(m) | AppError::Module(m) => m,
        }
    }
}

impl From<irnn_core::Error> for AppError {
    fn from(e: irnn_core::Error) -> Self {
        AppError::Module(e.to_string())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Check {
            document,
            require,
            tol,
            out,
        } => cmd_check(&document, require, tol, out.as_deref()),
        Command::Equilibrium {
            document,
            tol,
            max_iter,
            out,
        } => cmd_equilibrium(&document, tol, max_iter, out.as_deref()),
        Command::Simulate {
            document,
            t_end,
            step,
            x0,
            out,
        } => cmd_simulate(&document, t_end, step, x0.as_deref(), out.as_deref()),
        Command::Periodic {
            document,
            grid,
            tol,
            max_sweeps,
            out,
        } => cmd_periodic(&document, grid, tol, max_sweeps, out.as_deref()),
        Command::Stability {
            document,
            reference,
            slack,
            t_end,
            step,
            conv_tol,
            out,
        } => cmd_stability(&document, reference, slack, t_end, step, conv_tol, out.as_deref()),
    }
}

fn load(document: &str) -> Result<(ModelDocument, BuiltModel), AppError> {
    let text = match bundled_document(document) {
        Some(t) => t.to_string(),
        None => std::fs::read_to_string(document)
            .map_err(|e| AppError::Input(format!("cannot read {document}: {e}")))?,
    };
    let doc = ModelDocument::parse(&text).map_err(|e| AppError::Input(e.to_string()))?;
    let built = doc.build().map_err(|e| AppError::Input(e.to_string()))?;
    Ok((doc, built))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| AppError::Module(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path)
        .map_err(|e| AppError::Module(format!("writing {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "unset".to_string(), |x| format!("{x}"))
}

fn cmd_check(
    document: &str,
    require: Bundle,
    tol: f64,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let (_, built) = load(document)?;
    let validation = validate(&built.spec, &built.ts, &built.imp, &built.operating_box);

    // best-effort equilibrium so condition (A) can be reported
    let x_star = solve_equilibrium(&built.spec, 1e-12, 500, None)
        .ok()
        .map(|r| r.x_star);
    let report = check_hypotheses(&built.spec, &built.ts, &built.imp, x_star.as_deref(), tol);

    println!(
        "structural validation: {}",
        if validation.is_valid() { "ok" } else { "VIOLATIONS" }
    );
    for v in &validation.violations {
        println!("  {}: {}", v.code, v.detail);
    }
    let dc = &report.constants;
    println!("derived constants:");
    println!("  k1 = {}  k2 = {}  k3 = {}  k4 = {}", dc.k1, dc.k2, dc.k3, dc.k4);
    println!("  mu = {}  gamma = {}  ell = {}  p = {}", dc.mu, dc.gamma, dc.ell, dc.p);
    println!(
        "  lambda = {}  R = {}  alpha1 = {}  alpha2 = {}  h_bound = {}",
        fmt_opt(dc.lambda),
        fmt_opt(dc.r_const),
        fmt_opt(dc.alpha1),
        fmt_opt(dc.alpha2),
        fmt_opt(dc.h_bound)
    );
    println!("hypotheses:");
    for e in &report.entries {
        println!(
            "  {:<22} value = {:<22} margin = {:<22} {}",
            e.name,
            fmt_opt(e.value),
            fmt_opt(e.margin),
            if e.pass { "pass" } else { "FAIL" }
        );
        if let Some(n) = &e.note {
            println!("      note: {n}");
        }
    }
    println!("guarantees:");
    println!("  existence-unique  (H1-H3): {}", report.existence_unique);
    println!("  lambda-valid      (H4)   : {}", report.lambda_valid);
    println!("  global-stability  (H5)   : {}", report.global_stability);
    println!("  periodic-exists   (H6-H7): {}", report.periodic_exists);
    println!("  equilibrium-unique       : {}", report.equilibrium_unique);
    match report.condition_a {
        Some(ok) => println!("  condition-A at x*        : {ok}"),
        None => println!("  condition-A at x*        : not evaluated"),
    }

    if let Some(path) = out {
        let doc = json!({
            "validation": validation,
            "hypotheses": report,
            "x_star": x_star,
        });
        write_atomic(path, format!("{doc:#}\n").as_bytes())?;
        println!("report written to {}", path.display());
    }

    let bundle_ok = match require {
        Bundle::Existence => report.existence_unique,
        Bundle::Stability => {
            report.existence_unique && report.lambda_valid && report.global_stability
        }
        Bundle::Periodic => report.existence_unique && report.periodic_exists,
        Bundle::Equilibrium => report.equilibrium_unique,
        Bundle::All => {
            report.existence_unique
                && report.lambda_valid
                && report.global_stability
                && report.periodic_exists
                && report.equilibrium_unique
        }
    };
    if !validation.is_valid() {
        Err(AppError::Hypothesis("structural validation failed".into()))
    } else if !bundle_ok {
        Err(AppError::Hypothesis(format!(
            "required guarantee bundle ({require:?}) not satisfied"
        )))
    } else {
        Ok(())
    }
}

fn cmd_equilibrium(
    document: &str,
    tol: f64,
    max_iter: usize,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let (_, built) = load(document)?;
    let r = solve_equilibrium(&built.spec, tol, max_iter, None)?;
    let (in_omega, deviation) = check_condition_a(&r.x_star, &built.imp, 1e-8);
    println!("x* = {:?}", r.x_star);
    println!("residual = {}  iterations = {}", r.residual, r.iterations);
    println!(
        "contraction: theoretical = {}  observed = {}  guaranteed = {}",
        r.theoretical_contraction,
        fmt_opt(r.observed_contraction),
        r.guaranteed
    );
    println!("condition-A: {} (max |I(x*)| = {})", in_omega, deviation);
    if let Some(path) = out {
        let doc = json!({
            "equilibrium": r,
            "condition_a": { "holds": in_omega, "max_deviation": deviation },
        });
        write_atomic(path, format!("{doc:#}\n").as_bytes())?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn parse_x0(s: &str, m: usize) -> Result<Vec<f64>, AppError> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let v = v.map_err(|e| AppError::Input(format!("--x0: {e}")))?;
    if v.len() != m {
        return Err(AppError::Input(format!(
            "--x0: expected {m} components, found {}",
            v.len()
        )));
    }
    Ok(v)
}

fn cmd_simulate(
    document: &str,
    t_end: Option<f64>,
    step: Option<f64>,
    x0: Option<&str>,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let (_, built) = load(document)?;
    let t_end = t_end.unwrap_or(built.run.t_end);
    let step = step.unwrap_or(built.run.step);
    let x0 = match x0 {
        Some(s) => parse_x0(s, built.spec.unit_count())?,
        None => built.run.x0.clone(),
    };
    let ctl = StepControl::new(step, StepMethod::Rk4Fixed, 1e-9, &built.ts)?;
    let traj = simulate(&built.spec, &built.ts, &built.imp, built.run.t0, &x0, t_end, &ctl)?;
    let impulses = traj
        .samples()
        .iter()
        .filter(|s| s.tag == irnn_core::model::SampleTag::ImpulseLeft)
        .count();
    println!(
        "simulated [{}, {}] at step {}: {} samples, {} impulses",
        built.run.t0,
        t_end,
        step,
        traj.samples().len(),
        impulses
    );
    println!("final state = {:?}", traj.final_state());
    if let Some(path) = out {
        let mut csv = Vec::new();
        traj.write_csv(&mut csv)
            .map_err(|e| AppError::Module(format!("csv: {e}")))?;
        write_atomic(path, &csv)?;
        println!("trajectory written to {}", path.display());
    }
    Ok(())
}

fn cmd_periodic(
    document: &str,
    grid: Option<f64>,
    tol: Option<f64>,
    max_sweeps: usize,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let (_, built) = load(document)?;
    let Some(omega) = built.ts.omega() else {
        return Err(AppError::Input(
            "omega-required: the document declares no period".into(),
        ));
    };
    let h_grid = grid.or(built.run.grid).unwrap_or(omega / 200.0);
    let tol = tol.unwrap_or(built.run.tol);
    let res = find_periodic(&built.spec, &built.ts, &built.imp, h_grid, tol, max_sweeps)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let chk = poincare_check(SampledRef::Grid(&res.phi_star), omega, 1e-6)?;
    println!(
        "periodic solution: {} sweeps, final delta = {}, observed ratio = {}",
        res.iterations,
        res.final_delta,
        fmt_opt(res.alpha1_observed)
    );
    println!(
        "phi*(0) = {:?}  poincare defect = {}  norm bound = {}",
        res.phi_star.start_value(),
        chk.defect,
        fmt_opt(res.h_bound)
    );
    if let Some(path) = out {
        let mut csv = Vec::new();
        res.phi_star
            .write_csv(&mut csv)
            .map_err(|e| AppError::Module(format!("csv: {e}")))?;
        write_atomic(path, &csv)?;
        println!("periodic solution written to {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_stability(
    document: &str,
    reference: RefKind,
    slack: Option<f64>,
    t_end: Option<f64>,
    step: Option<f64>,
    conv_tol: f64,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let (_, built) = load(document)?;
    let dc = derive_constants(&built.spec, &built.ts, &built.imp);
    let slack = slack.unwrap_or(built.run.slack);
    let t_end = t_end.unwrap_or(built.run.t_end);
    let step = step.unwrap_or(built.run.step);

    let ctl = StepControl::new(step, StepMethod::Rk4Fixed, 1e-9, &built.ts)?;
    let traj = simulate(
        &built.spec,
        &built.ts,
        &built.imp,
        built.run.t0,
        &built.run.x0,
        t_end,
        &ctl,
    )?;

    // the reference, plus whether the λ-check is exact for it: with an
    // equilibrium reference the shifted system is the linearized one only
    // under condition (A)
    let (eq_point, periodic_grid, lambda_applicable, notice) = match reference {
        RefKind::Equilibrium => {
            let r = solve_equilibrium(&built.spec, 1e-12, 500, None)?;
            let (holds, dev) = check_condition_a(&r.x_star, &built.imp, 1e-8);
            let notice = (!holds).then(|| {
                format!(
                    "condition (A) fails at x* (max |I(x*)| = {dev}), λ-check skipped"
                )
            });
            (Some(r.x_star), None, holds, notice)
        }
        RefKind::Periodic => {
            let h_grid = built
                .run
                .grid
                .unwrap_or_else(|| built.ts.omega().map(|om| om / 200.0).unwrap_or(0.005));
            let res =
                find_periodic(&built.spec, &built.ts, &built.imp, h_grid, built.run.tol, 200)?;
            (None, Some(res.phi_star), true, None)
        }
    };
    let reference_obj = match (&eq_point, &periodic_grid) {
        (Some(x), _) => Reference::Equilibrium(x),
        (_, Some(g)) => Reference::Periodic(g),
        _ => unreachable!(),
    };

    let mut report = verify_decay(&traj, &reference_obj, &dc, &built.ts, slack, conv_tol)?;
    let lambda_checked = if lambda_applicable {
        match verify_lambda_inequality(&traj, &reference_obj, &dc, &built.ts) {
            Ok(v) => {
                report.lambda_violations = v;
                true
            }
            Err(irnn_core::Error::LambdaUndefined { quantity }) => {
                eprintln!(
                    "notice: lambda-undefined (H4 quantity {quantity} >= 1), λ-check skipped"
                );
                false
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        if let Some(n) = &notice {
            eprintln!("notice: {n}");
        }
        false
    };

    println!("sigma = {}", report.sigma);
    println!(
        "decay bound: {} violations at slack {}",
        report.bound_violations.len(),
        slack
    );
    for v in report.bound_violations.iter().take(5) {
        println!("  t = {}: observed {} > bound {}", v.t, v.observed, v.bound);
    }
    if lambda_checked {
        println!(
            "lambda inequality: {} violations",
            report.lambda_violations.len()
        );
    } else {
        println!("lambda inequality: skipped");
    }
    println!(
        "final distance = {}  converged (< {}) = {}",
        report.final_distance, conv_tol, report.converged
    );
    if let Some(path) = out {
        let doc = json!({
            "report": report,
            "lambda_checked": lambda_checked,
            "notice": notice,
            "reference": match reference {
                RefKind::Equilibrium => "equilibrium",
                RefKind::Periodic => "periodic",
            },
            "x_star": eq_point,
        });
        write_atomic(path, format!("{doc:#}\n").as_bytes())?;
        println!("report written to {}", path.display());
    }
    Ok(())
}
