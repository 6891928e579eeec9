mod args;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ecs_leggett::coherent::{DEFAULT_PRUNE_TOL, LABEL_MERGE_TOL};
use ecs_leggett::engine::Engine;
use ecs_leggett::error::Error;
use ecs_leggett::homodyne::TRACE_TOLERANCE;
use ecs_leggett::inequalities::{Kind, BELL_RESTARTS, PHI_GRID_STEP, PHI_TOLERANCE};
use ecs_leggett::loss::Efficiency;
use ecs_leggett::sweep::{find_threshold, run_sweep, Range, SweepRow, SweepSpec, ThresholdOutcome};
use ecs_leggett_oracle::regression::{
    regression_cases, run_case, FOCK_TOLERANCE, REGRESSION_SEED, WIGNER_TOLERANCE,
};
use serde::Serialize;

use args::{Cli, Command, Common, Format, Resolved, VerifyArgs};

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) | Failure::Io(_) => 3,
        }
    }

    fn record(&self) -> serde_json::Value {
        let (kind, message) = match self {
            Failure::Validation(m) => ("validation", m),
            Failure::Numerical(m) => ("numerical", m),
            Failure::Io(m) => ("io", m),
        };
        serde_json::json!({ "error": { "kind": kind, "code": self.code(), "message": message } })
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Failure::Validation(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Tolerances {
    prune: f64,
    trace: f64,
    label_merge: f64,
    phi_grid_step: f64,
    phi_refinement: f64,
    bell_restarts: usize,
}

#[derive(Serialize)]
struct Metadata {
    tool_version: &'static str,
    command: &'static str,
    seed: u64,
    tolerances: Tolerances,
}

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    metadata: Metadata,
    rows: &'a [R],
}

fn metadata(command: &'static str, seed: u64) -> Metadata {
    Metadata {
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        tolerances: Tolerances {
            prune: DEFAULT_PRUNE_TOL,
            trace: TRACE_TOLERANCE,
            label_merge: LABEL_MERGE_TOL,
            phi_grid_step: PHI_GRID_STEP,
            phi_refinement: PHI_TOLERANCE,
            bell_restarts: BELL_RESTARTS,
        },
    }
}

fn render<R: Serialize>(rows: &[R], format: Format, meta: Metadata) -> Result<Vec<u8>, Failure> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| Failure::Io(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Failure::Io(e.to_string()))
        }
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&Document { metadata: meta, rows })
                .map_err(|e| Failure::Io(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

fn emit(bytes: &[u8], out: Option<&std::path::Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn resolve(common: &Common) -> Result<Resolved, Failure> {
    common.resolve().map_err(Failure::Validation)
}

fn require(range: Option<Range>, name: &str) -> Result<Range, Failure> {
    let r = range.ok_or_else(|| Failure::Validation(format!("missing --{name} or --{name}-range")))?;
    r.validate(name)?;
    Ok(r)
}

fn sweep(common: &Common) -> Result<(), Failure> {
    let opts = resolve(common)?;
    let alpha = require(opts.alpha, "alpha")?;
    let phi = match opts.kind {
        Kind::Bell => opts.phi.unwrap_or(Range::single(0.0)),
        _ => require(opts.phi, "phi")?,
    };
    let spec = SweepSpec {
        kind: opts.kind,
        alpha,
        phi,
        eta: opts.eta.clone(),
        seed: opts.seed,
    };
    spec.validate()?;
    let rows = run_sweep(&Engine::default(), &spec)?;
    check_rows(&rows)?;
    let bytes = render(&rows, opts.format, metadata("sweep", opts.seed))?;
    emit(&bytes, opts.out.as_deref())
}

fn check_rows(rows: &[SweepRow]) -> Result<(), Failure> {
    match rows.iter().find(|r| !(r.value.is_finite() && r.violation.is_finite())) {
        Some(r) => Err(Failure::Numerical(format!(
            "non-finite result at alpha = {}, eta = {}",
            r.alpha, r.eta
        ))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct ThresholdRow {
    kind: Kind,
    phi: f64,
    eta: f64,
    crossing: bool,
    alpha_star: Option<f64>,
    bracket_width: Option<f64>,
    non_monotonic: Option<bool>,
    best_alpha: Option<f64>,
    best_violation: Option<f64>,
}

fn threshold(common: &Common) -> Result<(), Failure> {
    let opts = resolve(common)?;
    if opts.kind == Kind::Bell {
        return Err(Failure::Validation("thresholds are defined for L and LS only".into()));
    }
    let phis = require(opts.phi, "phi")?.values();
    if opts.eta.is_empty() {
        return Err(Failure::Validation("eta list is empty".into()));
    }
    let mut etas = opts.eta.clone();
    etas.sort_by(f64::total_cmp);
    etas.reverse();
    let engine = Engine::default();
    let mut rows = Vec::new();
    for &phi in &phis {
        for &eta in &etas {
            let row = match find_threshold(&engine, opts.kind, phi, eta, opts.resolution)? {
                ThresholdOutcome::Crossing(r) => ThresholdRow {
                    kind: opts.kind,
                    phi,
                    eta,
                    crossing: true,
                    alpha_star: Some(r.alpha_star),
                    bracket_width: Some(r.bracket_width),
                    non_monotonic: Some(r.non_monotonic),
                    best_alpha: None,
                    best_violation: None,
                },
                ThresholdOutcome::NoCrossing {
                    best_alpha,
                    best_violation,
                    ..
                } => ThresholdRow {
                    kind: opts.kind,
                    phi,
                    eta,
                    crossing: false,
                    alpha_star: None,
                    bracket_width: None,
                    non_monotonic: None,
                    best_alpha: Some(best_alpha),
                    best_violation: Some(best_violation),
                },
            };
            rows.push(row);
        }
    }
    let bytes = render(&rows, opts.format, metadata("threshold", opts.seed))?;
    emit(&bytes, opts.out.as_deref())
}

fn optimize(common: &Common) -> Result<(), Failure> {
    let opts = resolve(common)?;
    let alphas = require(opts.alpha, "alpha")?.values();
    if opts.eta.is_empty() {
        return Err(Failure::Validation("eta list is empty".into()));
    }
    let mut etas = opts.eta.clone();
    etas.sort_by(f64::total_cmp);
    let engine = Engine::default();
    let mut rows = Vec::new();
    for &alpha in &alphas {
        for &eta in &etas {
            let eff = Efficiency::new(eta)?;
            let best = engine.optimize_settings(opts.kind, alpha, eff, opts.seed)?;
            rows.push(SweepRow::from(best.report));
        }
    }
    check_rows(&rows)?;
    let bytes = render(&rows, opts.format, metadata("optimize", opts.seed))?;
    emit(&bytes, opts.out.as_deref())
}

#[derive(Serialize)]
struct VerifyRow {
    alpha: f64,
    eta: f64,
    a_theta: f64,
    a_phi: f64,
    b_theta: f64,
    b_phi: f64,
    engine_correlation: f64,
    fock_difference: f64,
    wigner_difference: Option<f64>,
    passed: bool,
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let engine = Engine::default();
    let mut rows = Vec::new();
    for case in regression_cases() {
        let r = run_case(&engine, case, !args.skip_wigner)?;
        rows.push(VerifyRow {
            alpha: case.alpha,
            eta: case.eta,
            a_theta: case.a.theta(),
            a_phi: case.a.phi(),
            b_theta: case.b.theta(),
            b_phi: case.b.phi(),
            engine_correlation: r.engine.correlation(),
            fock_difference: r.fock_difference,
            wigner_difference: r.wigner_difference,
            passed: r.passed(),
        });
    }
    let bytes = render(&rows, args.format, metadata("verify", REGRESSION_SEED))?;
    emit(&bytes, args.out.as_deref())?;
    let failed = rows.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Numerical(format!(
            "{failed} of {} regression cases exceed tolerance (fock {FOCK_TOLERANCE:e}, wigner {WIGNER_TOLERANCE:e})",
            rows.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let failure = Failure::Validation(e.to_string().trim_end().to_owned());
            eprintln!("{}", failure.record());
            return ExitCode::from(failure.code());
        }
    };
    let result = match &cli.command {
        Command::Sweep(c) => sweep(c),
        Command::Threshold(c) => threshold(c),
        Command::Optimize(c) => optimize(c),
        Command::Verify(v) => verify(v),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.record());
            ExitCode::from(failure.code())
        }
    }
}
