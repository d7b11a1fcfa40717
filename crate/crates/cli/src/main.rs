//! `qprop`: evaluate measurement propositions on scenario files, sweep the
//! interferometer, check the eraser identity and the causal equality.

mod reproduce;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qprop_core::eraser::{verify_equivalence, young_slit_scenario, EraserBasis};
use qprop_core::mzi;
use qprop_core::{
    brute_force_oracle, causal_gap, evaluate, indefinite_kraus, load_path, parse, validate, ComplexMatrix, Error,
    KrausOperator, LoadedScenario, MeasurementExpr, OrderPolicy, Query, Scenario, Tolerance,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "qprop",
    version,
    about = "Probabilities of sequential quantum measurement propositions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every binding and declared outcome group of a scenario file.
    Validate { file: PathBuf },
    /// Evaluate a query such as "d & (a + b) | s".
    Eval {
        /// Defaults to the file's `expression`.
        #[arg(long)]
        expr: Option<String>,
        file: PathBuf,
        /// Also run the brute-force system-detector simulation.
        #[arg(long)]
        oracle: bool,
    },
    /// Parameter sweeps written as CSV.
    Sweep {
        #[command(subcommand)]
        target: SweepTarget,
    },
    /// Compare the rotated-basis readout with the which-path sum.
    Eraser {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Complex64,
        #[arg(long, allow_hyphen_values = true)]
        beta: Complex64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phase: f64,
        /// Scenario with projective `a`, `b` and an effect `d`; the built-in
        /// two-slit scenario otherwise.
        file: Option<PathBuf>,
    },
    /// Causal-equality report for two intermediate measurements.
    Causal {
        file: PathBuf,
        /// Order superposition weights `w1,w2`; defaults to the file's
        /// `indefinite_coherent` policy, else equal weights.
        #[arg(long, value_parser = parse_weights, allow_hyphen_values = true)]
        weights: Option<[Complex64; 2]>,
        /// Final label; defaults to the first label of the file's expression.
        #[arg(long = "final")]
        final_label: Option<String>,
        /// The two intermediate labels `a,b`.
        #[arg(long, value_delimiter = ',')]
        between: Option<Vec<String>>,
        /// Include the operators of the instance in the output.
        #[arg(long)]
        emit_witness: bool,
    },
    /// Re-run canned acceptance scenarios; prints PASS/FAIL per criterion.
    Reproduce { target: Target },
}

#[derive(Subcommand)]
enum SweepTarget {
    /// Movable-splitter interferometer over phase and kick strength.
    Mzi {
        /// `start:stop:step` (stop excluded) or a single value.
        #[arg(long, allow_hyphen_values = true)]
        phi: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    #[value(name = "fig4-top")]
    Fig4Top,
    #[value(name = "fig4-bottom")]
    Fig4Bottom,
    Eraser,
    #[value(name = "causal-gap")]
    CausalGap,
}

/// Exit status and message of a failed command.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ScenarioFile(_) | Error::PovmViolation(_) => 1,
            Error::NumericalConsistency(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn parse_weights(s: &str) -> Result<[Complex64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err("expected two comma-separated complex numbers".into());
    };
    let p = |x: &str| x.parse::<Complex64>().map_err(|e| format!("`{x}`: {e}"));
    Ok([p(a)?, p(b)?])
}

fn parse_range(s: &str) -> Result<Vec<f64>, Failure> {
    let nums = s
        .split(':')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Failure::usage(format!("`{s}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match nums.as_slice() {
        [v] => Ok(vec![*v]),
        [start, stop, step] => Ok(mzi::grid(*start, *stop, *step).map_err(|e| Failure::usage(e.to_string()))?),
        _ => Err(Failure::usage(format!("`{s}` is neither a value nor start:stop:step"))),
    }
}

fn load(path: &Path) -> Result<LoadedScenario, Failure> {
    Ok(load_path(path, &Tolerance::default())?)
}

/// Writes to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn print_probability(p: f64) -> String {
    format!("{p:.12}")
}

/// True if an order alternative sits inside a sequence.
fn has_order_alternative(e: &MeasurementExpr, in_seq: bool) -> bool {
    match e {
        MeasurementExpr::Label(_) => false,
        MeasurementExpr::Seq(l, r) => has_order_alternative(l, true) || has_order_alternative(r, true),
        MeasurementExpr::Alt(cs) => {
            (in_seq && cs.iter().any(|c| !matches!(c, MeasurementExpr::Label(_))))
                || cs.iter().any(|c| has_order_alternative(c, in_seq))
        }
    }
}

fn cmd_validate(file: &Path) -> CmdResult {
    let loaded = load(file)?;
    let report = validate(&loaded)?;
    out!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    if report.valid {
        return Ok(());
    }
    let diagnostics: Vec<String> = report.groups.iter().flat_map(|g| g.diagnostics.clone()).collect();
    Err(Failure {
        code: 1,
        message: diagnostics.join("\n"),
    })
}

fn cmd_eval(expr: Option<&str>, file: &Path, oracle: bool) -> CmdResult {
    let loaded = load(file)?;
    let q: Query = match expr {
        Some(text) => parse(text)?,
        None => loaded
            .expression
            .clone()
            .ok_or_else(|| Failure::usage("no --expr given and the file has no expression"))?,
    };
    let p = evaluate(&q, &loaded.scenario)?;
    out!("{}", print_probability(p));
    if !oracle {
        return Ok(());
    }
    let o = brute_force_oracle(&q, &loaded.scenario, &loaded.models)?;
    out!("oracle {}", print_probability(o));
    let coherent_orders = matches!(loaded.scenario.order_policy(), Some(OrderPolicy::IndefiniteCoherent(_)))
        && has_order_alternative(&q.expr, false);
    if coherent_orders {
        eprintln!(
            "note: the oracle post-selects the order control, so it differs from the evaluator by a constant factor"
        );
        return Ok(());
    }
    let tol = loaded.scenario.tol();
    if (p - o).abs() > tol.eps_prob {
        return Err(Failure {
            code: 3,
            message: format!("evaluator and oracle disagree by {:e}", (p - o).abs()),
        });
    }
    Ok(())
}

fn cmd_sweep(target: &SweepTarget) -> CmdResult {
    let SweepTarget::Mzi { phi, alpha, out } = target;
    let rows = mzi::sweep(&parse_range(phi)?, &parse_range(alpha)?, &Tolerance::default())?;
    let csv = mzi::to_csv(&rows);
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let _ = std::io::stdout().write_all(csv.as_bytes());
            Ok(())
        }
    }
}

fn cmd_eraser(alpha: Complex64, beta: Complex64, phase: f64, file: Option<&Path>) -> CmdResult {
    let tol = Tolerance::default();
    let sc = match file {
        Some(f) => load(f)?.scenario,
        None => young_slit_scenario(&tol)?,
    };
    let basis = EraserBasis::new(alpha, beta, phase, &tol)?;
    let report = verify_equivalence(&basis, &sc)?;
    out!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    if report.gap > tol.eps_prob {
        return Err(Failure {
            code: 3,
            message: format!("eraser identity violated by {:e}", report.gap),
        });
    }
    Ok(())
}

/// Final label and the two intermediates from `d & ((b & a) + (a & b))`-style
/// expressions: the first label and the other distinct labels, the one
/// applied first in the first written ordering listed first.
fn causal_labels(loaded: &LoadedScenario) -> Result<(String, [String; 2]), Failure> {
    let q = loaded
        .expression
        .as_ref()
        .ok_or_else(|| Failure::usage("the file has no expression; pass --final and --between"))?;
    let mut labels: Vec<String> = Vec::new();
    for l in q.labels() {
        if !labels.iter().any(|x| x == l) {
            labels.push(l.to_string());
        }
    }
    match labels.as_slice() {
        [f, second, first] => Ok((f.clone(), [first.clone(), second.clone()])),
        _ => Err(Failure::usage(format!(
            "expected a final label and two intermediates in `{q}`; pass --final and --between"
        ))),
    }
}

fn matrix_json(m: &ComplexMatrix) -> serde_json::Value {
    json!((0..m.rows()).map(|r| m.row(r).to_vec()).collect::<Vec<_>>())
}

fn cmd_causal(
    file: &Path,
    weights: Option<[Complex64; 2]>,
    final_label: Option<&str>,
    between: Option<&[String]>,
    emit_witness: bool,
) -> CmdResult {
    let loaded = load(file)?;
    let sc: &Scenario = &loaded.scenario;
    let tol = sc.tol();
    let (default_final, default_between) = match (final_label, between) {
        (Some(f), Some(b)) => (f.to_string(), b.to_vec()),
        _ => {
            let (f, [a, b]) = causal_labels(&loaded)?;
            (
                final_label.map(str::to_string).unwrap_or(f),
                between.map(<[String]>::to_vec).unwrap_or(vec![a, b]),
            )
        }
    };
    let [a, b] = default_between.as_slice() else {
        return Err(Failure::usage("--between takes exactly two labels"));
    };
    let w = match (weights, sc.order_policy()) {
        (Some(w), _) => w,
        (None, Some(OrderPolicy::IndefiniteCoherent(w))) => *w,
        (None, _) => [Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2],
    };
    OrderPolicy::indefinite(w, tol)?;
    let report = causal_gap(sc, &default_final, &[a, b], w)?;
    let mut out = json!({
        "final": default_final,
        "intermediates": [a, b],
        "weights": w,
        "report": report,
    });
    if emit_witness {
        let ops = |l: &str| -> Result<Vec<KrausOperator>, Failure> {
            Ok(sc
                .kraus_mats(l)?
                .into_iter()
                .map(|m| KrausOperator::new(l, m, tol))
                .collect::<Result<Vec<_>, _>>()?)
        };
        let combined = indefinite_kraus(&ops(a)?, &ops(b)?, w, tol)?;
        let kraus_json = |l: &str| -> Result<serde_json::Value, Failure> {
            Ok(json!(sc.kraus_mats(l)?.iter().map(matrix_json).collect::<Vec<_>>()))
        };
        out["witness"] = json!({
            "preparation": matrix_json(sc.preparation().mat()),
            a.as_str(): kraus_json(a)?,
            b.as_str(): kraus_json(b)?,
            default_final.as_str(): matrix_json(&sc.effect_mat(&default_final)?),
            "combined": combined.ops.iter().map(matrix_json).collect::<Vec<_>>(),
            "rescale": combined.rescale,
        });
    }
    out!("{}", serde_json::to_string_pretty(&out).expect("report serialises"));
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Validate { file } => cmd_validate(file),
        Command::Eval { expr, file, oracle } => cmd_eval(expr.as_deref(), file, *oracle),
        Command::Sweep { target } => cmd_sweep(target),
        Command::Eraser {
            alpha,
            beta,
            phase,
            file,
        } => cmd_eraser(*alpha, *beta, *phase, file.as_deref()),
        Command::Causal {
            file,
            weights,
            final_label,
            between,
            emit_witness,
        } => cmd_causal(
            file,
            *weights,
            final_label.as_deref(),
            between.as_deref(),
            *emit_witness,
        ),
        Command::Reproduce { target } => {
            let results = match target {
                Target::Fig4Top => reproduce::fig4_top(),
                Target::Fig4Bottom => reproduce::fig4_bottom(),
                Target::Eraser => reproduce::eraser(),
                Target::CausalGap => reproduce::causal_gap(),
            };
            let mut failed = 0;
            for r in &results {
                match &r.outcome {
                    Ok(msg) => out!("PASS  criterion {}: {}: {msg}", r.criterion, r.name),
                    Err(msg) => {
                        failed += 1;
                        out!("FAIL  criterion {}: {}: {msg}", r.criterion, r.name);
                    }
                }
            }
            if failed > 0 {
                return Err(Failure {
                    code: 3,
                    message: format!("{failed} criteria failed"),
                });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
