//! Command-line front end: evaluate diagram files, run positivity and
//! channel checks, execute protocol verifications and solve CTC fixed
//! points. Exit codes: 0 success/holds, 1 property fails, 2 usage or
//! parse/type error, 3 numerical guard.

use clap::{Parser, Subcommand, ValueEnum};
use propcalc::analysis::{self, SuperOp};
use propcalc::dsl;
use propcalc::linalg::{self, CMat};
use propcalc::morph::Direction;
use propcalc::protocols;
use propcalc::thickctc::{self, Channel, CtcProblem, Idempotent};
use serde_json::{json, Value};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "propcalc", version, about = "Typed tensor diagram calculator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Emit a machine-readable JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Emit a human-readable report (the default).
    #[arg(long, global = true)]
    pretty: bool,
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance override for pass/fail decisions.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Contraction-order strategy.
    #[arg(long, global = true, value_enum, default_value_t = PlanArg::Greedy)]
    plan: PlanArg,
    /// Intermediate element cap for diagram evaluation.
    #[arg(long, global = true, default_value_t = dsl::DEFAULT_ELEMENT_CAP)]
    cap: usize,
    /// Trial count for randomized suites.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanArg {
    Greedy,
    Exhaustive,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse, typecheck, plan and evaluate a diagram file.
    Eval { file: String },
    /// Check a property of the operator a diagram file evaluates to.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        file: String,
    },
    /// Run a protocol verification suite.
    Protocol {
        #[arg(value_enum)]
        name: ProtoName,
    },
    /// Closed-timelike-curve solvers and diagnostics.
    Ctc {
        #[command(subcommand)]
        which: CtcCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    /// Positive semidefiniteness of the evaluated operator.
    Positive,
    /// Complete positivity of the evaluated superoperator matrix.
    Cp,
    /// Positivity under partial transpose of the first subsystem.
    Ppt,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtoName {
    Teleport,
    Superdense,
    Swap,
    Coecke,
    Nosignal,
    Zigzag,
}

#[derive(Subcommand)]
enum CtcCmd {
    /// Deutsch fixed point for a named two-qubit unitary.
    Deutsch {
        #[arg(long, value_enum)]
        builder: GateName,
        #[arg(long, value_enum, default_value_t = RhoName::Plus)]
        rho_in: RhoName,
        #[arg(long, default_value_t = 1)]
        loop_port: usize,
    },
    /// Thickened CTC solve against a time-machine channel.
    Thick {
        #[arg(long, value_enum)]
        builder: GateName,
        #[arg(long, value_enum, default_value_t = RhoName::Plus)]
        rho_in: RhoName,
        #[arg(long, value_enum, default_value_t = MachineName::Depolarize)]
        machine: MachineName,
        #[arg(long, default_value_t = 1)]
        loop_port: usize,
    },
    /// Post-selected teleportation branches of a two-qubit unitary.
    Postselect {
        #[arg(long, value_enum)]
        builder: GateName,
    },
    /// Power-limit classification of a named qubit channel.
    Classify {
        #[arg(long, value_enum)]
        channel: ChannelName,
    },
    /// Universality evidence for a time-machine channel.
    Universal {
        #[arg(long, value_enum, default_value_t = MachineName::Depolarize)]
        machine: MachineName,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GateName {
    Identity,
    Cnot,
    Swap,
    Controlv,
}

#[derive(Clone, Copy, ValueEnum)]
enum RhoName {
    Zero,
    One,
    Plus,
    Minus,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum MachineName {
    Depolarize,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelName {
    Identity,
    Depolarize,
    Dephase,
    Paulix,
}

fn gate_matrix(g: GateName) -> CMat {
    match g {
        GateName::Identity => linalg::identity(4),
        GateName::Cnot => linalg::cnot(),
        GateName::Swap => linalg::swap(),
        GateName::Controlv => linalg::controlled_on_second(&linalg::pauli_x()),
    }
}

fn rho_matrix(r: RhoName) -> CMat {
    use linalg::cr;
    match r {
        RhoName::Zero => {
            CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(0.0)])
        }
        RhoName::One => {
            CMat::from_row_slice(2, 2, &[cr(0.0), cr(0.0), cr(0.0), cr(1.0)])
        }
        RhoName::Plus => {
            CMat::from_row_slice(2, 2, &[cr(0.5), cr(0.5), cr(0.5), cr(0.5)])
        }
        RhoName::Minus => {
            CMat::from_row_slice(2, 2, &[cr(0.5), cr(-0.5), cr(-0.5), cr(0.5)])
        }
        RhoName::Mixed => linalg::identity(2).scale(0.5),
    }
}

fn machine_channel(m: MachineName) -> Channel {
    match m {
        MachineName::Depolarize => thickctc::depolarize_to_max_mixed(2),
        MachineName::Identity => Channel::identity(2),
    }
}

fn named_channel(c: ChannelName) -> Channel {
    use linalg::cr;
    use thickctc::TraceMode;
    match c {
        ChannelName::Identity => Channel::identity(2),
        ChannelName::Depolarize => thickctc::depolarize_to_max_mixed(2),
        ChannelName::Dephase => {
            let s = cr(1.0 / 2.0_f64.sqrt());
            let k0 = linalg::identity(2) * s;
            let k1 = linalg::pauli_z() * s;
            Channel::new(vec![k0, k1], TraceMode::TracePreserving, 1e-10).expect("complete")
        }
        ChannelName::Paulix => Channel::unitary(&linalg::pauli_x(), 1e-10).expect("unitary"),
    }
}

fn complex_json(z: &linalg::C64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMat) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(&m[(i, j)])).collect()))
        .collect();
    Value::Array(rows)
}

struct Report {
    command: String,
    config: Value,
    result: Value,
    metrics: Vec<protocols::Metric>,
    passed: bool,
}

impl Report {
    fn json(&self) -> Value {
        json!({
            "command": self.command,
            "config": self.config,
            "result": self.result,
            "metrics": self.metrics.iter().map(|m| json!({
                "label": m.label, "value": m.value, "tol": m.tol
            })).collect::<Vec<_>>(),
            "passed": self.passed,
        })
    }

    fn pretty(&self) -> String {
        let mut s = format!("{}: {}\n", self.command, if self.passed { "PASS" } else { "FAIL" });
        for m in &self.metrics {
            s.push_str(&format!("  {:<44} {:>12.3e}  (tol {:.1e})\n", m.label, m.value, m.tol));
        }
        if !self.result.is_null() {
            s.push_str(&serde_json::to_string_pretty(&self.result).unwrap());
            s.push('\n');
        }
        s
    }
}

fn config_json(cli: &Cli) -> Value {
    json!({
        "seed": cli.seed,
        "tol": cli.tol,
        "plan": match cli.plan { PlanArg::Greedy => "greedy", PlanArg::Exhaustive => "exhaustive" },
        "cap": cli.cap,
        "trials": cli.trials,
    })
}

/// Evaluate a diagram file end to end.
fn eval_file(path: &str, cli: &Cli) -> Result<(dsl::EvalResult, dsl::Plan), (u8, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (2, format!("cannot read '{path}': {e}")))?;
    let strategy = match cli.plan {
        PlanArg::Greedy => dsl::Strategy::Greedy,
        PlanArg::Exhaustive => dsl::Strategy::Exhaustive,
    };
    let run = || -> Result<(dsl::EvalResult, dsl::Plan), dsl::DslError> {
        let d = dsl::parse(&text)?;
        dsl::typecheck(&d)?;
        let p = dsl::plan(&d, strategy)?;
        let r = dsl::evaluate(&d, &p, cli.cap)?;
        Ok((r, p))
    };
    run().map_err(|e| {
        let code = match &e {
            dsl::DslError::CapExceeded { .. } => 3,
            dsl::DslError::Eval(_) => 3,
            _ => 2,
        };
        (code, e.to_string())
    })
}

/// Interpret the evaluated morph as a square matrix: Out legs are rows,
/// In legs are columns.
fn as_square_matrix(r: &dsl::EvalResult) -> Result<(CMat, Vec<usize>), (u8, String)> {
    let legs = r.morph.legs();
    let rows: Vec<usize> = (0..legs.len())
        .filter(|&p| legs[p].direction == Direction::Out)
        .collect();
    let cols: Vec<usize> = (0..legs.len())
        .filter(|&p| legs[p].direction == Direction::In)
        .collect();
    let rp: usize = rows.iter().map(|&p| legs[p].dim).product();
    let cp: usize = cols.iter().map(|&p| legs[p].dim).product();
    if rp != cp || rows.is_empty() {
        return Err((2, format!("diagram output is not a square operator ({rp}x{cp})")));
    }
    let dims = rows.iter().map(|&p| legs[p].dim).collect();
    let m = r
        .morph
        .to_matrix(&rows, &cols)
        .map_err(|e| (2, format!("cannot matricize output: {e}")))?;
    Ok((m, dims))
}

fn metric(label: &str, value: f64, tol: f64) -> protocols::Metric {
    protocols::Metric { label: label.into(), value, tol }
}

fn run(cli: &Cli) -> Result<Report, (u8, String)> {
    let tol = |default: f64| cli.tol.unwrap_or(default);
    match &cli.cmd {
        Cmd::Eval { file } => {
            let (r, plan) = eval_file(file, cli)?;
            let legs: Vec<Value> = r
                .morph
                .legs()
                .iter()
                .map(|l| {
                    json!({
                        "space": l.space,
                        "dim": l.dim,
                        "direction": match l.direction { Direction::In => "in", Direction::Out => "out" },
                        "essence": match l.essence {
                            propcalc::morph::Essence::Physical => "physical",
                            propcalc::morph::Essence::Virtual => "virtual",
                        },
                    })
                })
                .collect();
            let data: Vec<Value> = r.morph.data().iter().map(complex_json).collect();
            Ok(Report {
                command: "eval".into(),
                config: config_json(cli),
                result: json!({
                    "legs": legs,
                    "data": data,
                    "plan": serde_json::to_value(&plan).unwrap(),
                    "realized_cost": r.realized_cost,
                    "peak_elements": r.peak_elements,
                }),
                metrics: vec![],
                passed: true,
            })
        }
        Cmd::Check { kind, file } => {
            let (r, _) = eval_file(file, cli)?;
            let (m, dims) = as_square_matrix(&r)?;
            let t = tol(1e-9);
            let (label, min_eig) = match kind {
                CheckKind::Positive => {
                    let (_, e) = analysis::is_positive_matrix(&m, t)
                        .map_err(|e| (2, e.to_string()))?;
                    ("min eigenvalue", e)
                }
                CheckKind::Ppt => {
                    if dims.len() < 2 {
                        return Err((2, "ppt needs at least two subsystems".into()));
                    }
                    let rho = analysis::DensityMatrix::from_matrix_unchecked(&m, &dims);
                    let pt = rho
                        .partial_transpose_matrix(0)
                        .map_err(|e| (2, e.to_string()))?;
                    let (_, e) = analysis::is_positive_matrix(&pt, t)
                        .map_err(|e| (2, e.to_string()))?;
                    ("partial transpose min eigenvalue", e)
                }
                CheckKind::Cp => {
                    let d2 = m.nrows();
                    let d = (d2 as f64).sqrt().round() as usize;
                    if d * d != d2 {
                        return Err((2, format!("superoperator matrix side {d2} is not a square")));
                    }
                    let sup = SuperOp::from_superop_matrix(&m, "Q")
                        .map_err(|e| (2, e.to_string()))?;
                    let e = linalg::min_eigenvalue(&sup.choi_matrix());
                    ("Choi min eigenvalue", e)
                }
            };
            let passed = min_eig >= -t;
            Ok(Report {
                command: format!(
                    "check {}",
                    match kind {
                        CheckKind::Positive => "positive",
                        CheckKind::Cp => "cp",
                        CheckKind::Ppt => "ppt",
                    }
                ),
                config: config_json(cli),
                result: json!({ "min_eigenvalue": min_eig }),
                metrics: vec![metric(label, (-min_eig).max(0.0), t)],
                passed,
            })
        }
        Cmd::Protocol { name } => {
            let trials = cli.trials.unwrap_or(50);
            let report = match name {
                ProtoName::Teleport => protocols::check_teleportation(cli.seed, trials),
                ProtoName::Superdense => protocols::check_superdense(cli.seed),
                ProtoName::Swap => protocols::check_entanglement_swap(cli.seed),
                ProtoName::Coecke => protocols::check_coecke(cli.seed),
                ProtoName::Nosignal => protocols::check_no_signaling(cli.seed, &[2, 3]),
                ProtoName::Zigzag => {
                    let mut metrics = Vec::new();
                    let mut passed = true;
                    for d in [2usize, 3, 5] {
                        let r = protocols::check_zigzag(d);
                        passed &= r.passed;
                        for m in r.metrics {
                            metrics.push(metric(&format!("d={d}: {}", m.label), m.value, m.tol));
                        }
                    }
                    protocols::ProtocolReport {
                        name: "zigzag".into(),
                        passed,
                        metrics,
                        witness: None,
                    }
                }
            };
            Ok(Report {
                command: format!("protocol {}", report.name),
                config: config_json(cli),
                result: match &report.witness {
                    Some(w) => json!({ "witness": w }),
                    None => Value::Null,
                },
                metrics: report.metrics,
                passed: report.passed,
            })
        }
        Cmd::Ctc { which } => run_ctc(which, cli),
    }
}

fn run_ctc(which: &CtcCmd, cli: &Cli) -> Result<Report, (u8, String)> {
    let tol = |default: f64| cli.tol.unwrap_or(default);
    match which {
        CtcCmd::Deutsch { builder, rho_in, loop_port } => {
            let u = gate_matrix(*builder);
            let rho = rho_matrix(*rho_in);
            let t = tol(1e-10);
            let (rho_ctc, multiplicity) =
                thickctc::deutsch_fixed_point(&u, &rho, 2, 2, *loop_port, t, 10_000)
                    .map_err(|e| (3, e.to_string()))?;
            let rho_out = thickctc::deutsch_out(&u, &rho, &rho_ctc, 2, 2, *loop_port)
                .map_err(|e| (3, e.to_string()))?;
            // one more round trip keeping the looped subsystem measures
            // how far rho_ctc is from the fixed point
            let next = thickctc::deutsch_out(&u, &rho, &rho_ctc, 2, 2, 1 - *loop_port)
                .map_err(|e| (3, e.to_string()))?;
            let residual = linalg::max_abs_diff(&next, &rho_ctc);
            Ok(Report {
                command: "ctc deutsch".into(),
                config: config_json(cli),
                result: json!({
                    "rho_ctc": matrix_json(&rho_ctc),
                    "rho_out": matrix_json(&rho_out),
                    "multiplicity": multiplicity,
                }),
                metrics: vec![metric("fixed-point residual", residual, t)],
                passed: residual <= t,
            })
        }
        CtcCmd::Thick { builder, rho_in, machine, loop_port } => {
            let u = gate_matrix(*builder);
            let rho = rho_matrix(*rho_in);
            let t = tol(1e-10);
            let problem = CtcProblem {
                direct: thickctc::thicken_unitary_channel(&u).map_err(|e| (2, e.to_string()))?,
                machine: machine_channel(*machine),
                rho_in: rho,
                d_in: 2,
                d_ctc: 2,
                loop_port: *loop_port,
            };
            let sol = thickctc::thick_ctc_solve(&problem, t, 10_000)
                .map_err(|e| (3, e.to_string()))?;
            Ok(Report {
                command: "ctc thick".into(),
                config: config_json(cli),
                result: json!({
                    "rho_ctc": matrix_json(&sol.rho_ctc),
                    "rho_ctc_prime": matrix_json(&sol.rho_ctc_prime),
                    "rho_out": matrix_json(&sol.rho_out),
                    "multiplicity": sol.multiplicity,
                }),
                metrics: vec![metric("fixed-point residual", sol.residual, t)],
                passed: sol.residual <= t,
            })
        }
        CtcCmd::Postselect { builder } => {
            let u = gate_matrix(*builder);
            let mut kraus = Vec::with_capacity(4);
            for x in 0..2u8 {
                for y in 0..2u8 {
                    kraus.push(
                        thickctc::post_selected_kraus(&u, x, y)
                            .map_err(|e| (2, e.to_string()))?,
                    );
                }
            }
            let t = tol(1e-10);
            let mut sum = CMat::zeros(2, 2);
            for a in &kraus {
                sum += a.adjoint() * a;
            }
            let defect = linalg::max_abs_diff(&sum, &linalg::identity(2));
            let branches: Vec<Value> = kraus.iter().map(matrix_json).collect();
            Ok(Report {
                command: "ctc postselect".into(),
                config: config_json(cli),
                result: json!({ "kraus": branches }),
                metrics: vec![metric("completeness defect", defect, t)],
                passed: defect <= t,
            })
        }
        CtcCmd::Classify { channel } => {
            let ch = named_channel(*channel);
            let t = tol(1e-9);
            let r = thickctc::power_limit_classify(&ch, t, 10_000);
            let label = match &r.kind {
                Idempotent::Identity => "identity",
                Idempotent::PointCollapse(_) => "point-collapse",
                Idempotent::ProjectiveMeasurement(_, _) => "projective-measurement",
                Idempotent::Unclassified => "unclassified",
            };
            let passed =
                r.idempotent_defect <= t && !matches!(r.kind, Idempotent::Unclassified);
            Ok(Report {
                command: "ctc classify".into(),
                config: config_json(cli),
                result: json!({ "class": label, "powers_used": r.powers_used }),
                metrics: vec![metric("idempotency defect", r.idempotent_defect, t)],
                passed,
            })
        }
        CtcCmd::Universal { machine } => {
            use rand::SeedableRng;
            let t = tol(1e-9);
            let trials = cli.trials.unwrap_or(20);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
            let suite: Vec<Channel> = (0..trials)
                .map(|_| {
                    thickctc::Channel::unitary(&linalg::haar_random_unitary(4, &mut rng), 1e-9)
                        .expect("haar unitary")
                })
                .collect();
            let r = thickctc::is_universal_evidence(
                &machine_channel(*machine),
                &suite,
                2,
                2,
                1,
                t,
                cli.seed,
            )
            .map_err(|e| (3, e.to_string()))?;
            let max_lin = r
                .entries
                .iter()
                .map(|e| e.linearity_defect)
                .fold(0.0f64, f64::max);
            let min_choi = r
                .entries
                .iter()
                .map(|e| e.choi_min_eig)
                .fold(f64::INFINITY, f64::min);
            Ok(Report {
                command: "ctc universal".into(),
                config: config_json(cli),
                result: json!({
                    "universal": r.passed,
                    "point_collapse_machine": r.point_collapse_machine,
                    "trials": trials,
                }),
                metrics: vec![
                    metric("max linearity defect", max_lin, 1e-10),
                    metric("worst Choi negativity", (-min_choi).max(0.0), t),
                ],
                passed: r.passed,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                println!("{}", serde_json::to_string(&report.json()).unwrap());
            } else {
                print!("{}", report.pretty());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
