//! `qtsp`: one binary driving the whole toolkit, from instance generation
//! through solving and model export to metric reports.
//!
//! Exit codes: `0` success (optimal or feasible solve, feasible check),
//! `1` infeasible check, `2` argument/parse/IO failure, `3` the solver
//! found no tour within its budget, `4` the solver hit a budget with an
//! incumbent in hand or ran out of node memory. Multi-instance solves
//! exit with the highest per-instance code.
//!
//! The default output directory is `$QTSP_OUT_DIR`, falling back to the
//! current directory; explicit `--out`/`--trace` paths override it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use qtsp::didp::{solve_cabs, solve_exact, SolveParams, SolveStatus};
use qtsp::instance::generate_instance;
use qtsp::io::{
    read_assignment, read_instance, read_solution, write_atomic, write_instance, write_solution,
};
use qtsp::metrics::{
    aggregate_report, gnuplot_tables, optimality_gap, primal_gap, primal_integral, read_trace_csv,
    RunRecord,
};
use qtsp::model::{
    assignment_from_tour, check_milp, eval_cp, eval_miqp_objective, export_cp, export_milp,
    export_miqp, SubtourKind,
};
use qtsp::oracle::brute_force_optimal;
use qtsp::{CostKind, Instance};

#[derive(Parser)]
#[command(name = "qtsp", version, about = "Quadratic TSP toolkit driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark instances on the 501x501 integer grid
    Generate {
        /// Number of customers including the depot (3..=256)
        #[arg(long)]
        n: usize,
        /// Base RNG seed; batch mode uses seed, seed+1, ...
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cost family
        #[arg(long, value_enum, default_value_t = KindArg::Angle)]
        kind: KindArg,
        /// Turning-angle weight for the angledistance family
        #[arg(long, default_value_t = 40.0)]
        rho: f64,
        /// How many instances to generate
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve instances and write solution plus trace files
    Solve {
        /// Instance files
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = SolverArg::Cabs)]
        solver: SolverArg,
        /// Time limit in seconds
        #[arg(long)]
        time_limit: Option<f64>,
        /// Maximum number of state expansions
        #[arg(long)]
        expansion_limit: Option<u64>,
        /// Maximum number of stored search nodes
        #[arg(long)]
        node_cap: Option<usize>,
        /// Initial beam width (cabs)
        #[arg(long, default_value_t = 1)]
        width: usize,
        /// Beam width growth factor between passes (cabs)
        #[arg(long, default_value_t = 2.0)]
        growth: f64,
        /// Disable incumbent pruning (audit mode)
        #[arg(long)]
        no_prune: bool,
        /// Derive elapsed times from the expansion counter so traces are
        /// byte-identical across runs
        #[arg(long)]
        virtual_clock: bool,
        /// Trace CSV file (single instance) or directory (batch)
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Solution file (single instance) or directory (batch)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve this many instances concurrently
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Export a MILP, MIQP, or CP model as text plus a variable manifest
    Export {
        /// Instance file
        instance: PathBuf,
        /// Model format
        #[arg(long, value_enum)]
        format: FormatArg,
        /// Subtour elimination family for lp-milp
        #[arg(long, value_enum, default_value_t = SubtourArg::Dl)]
        subtour: SubtourArg,
        /// Model output file (manifest lands beside it as vars.tsv)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a tour or assignment file against a model's constraints
    Check {
        /// Instance file
        instance: PathBuf,
        /// Solution (`tour ...`) or assignment (`assignment ...`) file
        candidate: PathBuf,
        /// Model whose constraints and objective to apply
        #[arg(long, value_enum, default_value_t = ModelArg::Milp)]
        model: ModelArg,
    },
    /// Aggregate solver traces into metric reports
    Metrics {
        /// Directory of trace CSVs named <instance>__<solver>.trace.csv
        #[arg(long)]
        traces: PathBuf,
        /// Best-known CSV with rows instance,n,kind,best_known
        /// (best_known may be empty)
        #[arg(long)]
        best_known: PathBuf,
        /// Horizon in seconds for the primal integral
        #[arg(long, default_value_t = 60.0)]
        horizon: f64,
        /// Aggregate report path (per-run rows land beside it as runs.csv)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write gnuplot-ready .dat tables into this directory
        #[arg(long)]
        dat: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Angle,
    Angledistance,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Exact,
    Cabs,
    Oracle,
}

impl SolverArg {
    fn name(self) -> &'static str {
        match self {
            SolverArg::Exact => "exact",
            SolverArg::Cabs => "cabs",
            SolverArg::Oracle => "oracle",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    LpMilp,
    LpMiqp,
    Cp,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Milp,
    Miqp,
    Cp,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SubtourArg {
    Dl,
    Mtz,
    Flow,
}

impl From<SubtourArg> for SubtourKind {
    fn from(arg: SubtourArg) -> Self {
        match arg {
            SubtourArg::Dl => SubtourKind::Dl,
            SubtourArg::Mtz => SubtourKind::Mtz,
            SubtourArg::Flow => SubtourKind::Flow,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match cli.command {
        Command::Generate {
            n,
            seed,
            kind,
            rho,
            count,
            out,
        } => cmd_generate(n, seed, kind, rho, count, out.as_deref()),
        Command::Solve {
            instances,
            solver,
            time_limit,
            expansion_limit,
            node_cap,
            width,
            growth,
            no_prune,
            virtual_clock,
            trace,
            out,
            jobs,
        } => {
            let params = SolveParams {
                time_limit,
                expansion_limit,
                node_cap,
                prune: !no_prune,
                width_init: width,
                growth,
                virtual_clock,
            };
            cmd_solve(
                &instances,
                solver,
                &params,
                trace.as_deref(),
                out.as_deref(),
                jobs,
            )
        }
        Command::Export {
            instance,
            format,
            subtour,
            out,
        } => cmd_export(&instance, format, subtour.into(), out.as_deref()),
        Command::Check {
            instance,
            candidate,
            model,
        } => cmd_check(&instance, &candidate, model),
        Command::Metrics {
            traces,
            best_known,
            horizon,
            out,
            dat,
        } => cmd_metrics(&traces, &best_known, horizon, out.as_deref(), dat.as_deref()),
    });
}

/// Argument/IO/parse failure: message on stderr, contract code 2.
fn fail(msg: impl std::fmt::Display) -> i32 {
    eprintln!("qtsp: {msg}");
    2
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("QTSP_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Resolves one output file. An explicit path is taken verbatim for a
/// single input unless it is an existing directory; otherwise (batch, or
/// no flag) outputs land in a directory under the conventional `name`.
fn resolve_output(flag: Option<&Path>, single: bool, name: &str) -> PathBuf {
    match flag {
        Some(p) if single && !p.is_dir() => p.to_path_buf(),
        Some(p) => p.join(name),
        None => default_out_dir().join(name),
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
    }
    write_atomic(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn read_input(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let text = read_input(path)?;
    read_instance(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// File stem used to derive solution, trace, and report names.
fn instance_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string())
}

fn cmd_generate(
    n: usize,
    seed: u64,
    kind: KindArg,
    rho: f64,
    count: u64,
    out: Option<&Path>,
) -> i32 {
    if count == 0 {
        return fail("--count must be at least 1");
    }
    let dir = out.map(Path::to_path_buf).unwrap_or_else(default_out_dir);
    for offset in 0..count {
        let Some(seed) = seed.checked_add(offset) else {
            return fail("seed range overflows");
        };
        let cost_kind = match kind {
            KindArg::Angle => CostKind::Angle,
            KindArg::Angledistance => CostKind::AngleDistance { rho },
        };
        let inst = match generate_instance(n, seed, cost_kind) {
            Ok(inst) => inst,
            Err(e) => return fail(e),
        };
        let label = inst.kind().label();
        let path = dir.join(format!("{label}_n{n}_s{seed}.qtsp"));
        if let Err(msg) = write_output(&path, &write_instance(&inst)) {
            return fail(msg);
        }
        println!("wrote {} n={n} kind={label} seed={seed}", path.display());
    }
    0
}

/// Everything `solve` reports about one instance.
struct SolveReport {
    summary: String,
    code: i32,
}

fn cmd_solve(
    instances: &[PathBuf],
    solver: SolverArg,
    params: &SolveParams,
    trace: Option<&Path>,
    out: Option<&Path>,
    jobs: usize,
) -> i32 {
    if jobs == 0 {
        return fail("--jobs must be at least 1");
    }
    let single = instances.len() == 1;
    let workers = jobs.min(instances.len());

    let next = AtomicUsize::new(0);
    let reports: Mutex<Vec<Option<SolveReport>>> =
        Mutex::new((0..instances.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = instances.get(i) else { break };
                let report = solve_one(path, solver, params, trace, out, single);
                reports.lock().unwrap()[i] = Some(report);
            });
        }
    });

    let mut exit = 0;
    for report in reports.into_inner().unwrap() {
        let report = report.expect("every index was processed");
        println!("{}", report.summary);
        exit = exit.max(report.code);
    }
    exit
}

fn solve_one(
    path: &Path,
    solver: SolverArg,
    params: &SolveParams,
    trace: Option<&Path>,
    out: Option<&Path>,
    single: bool,
) -> SolveReport {
    let stem = instance_stem(path);
    let inst = match load_instance(path) {
        Ok(inst) => inst,
        Err(msg) => {
            eprintln!("qtsp: {msg}");
            return SolveReport {
                summary: format!("{} status=error", path.display()),
                code: 2,
            };
        }
    };

    let (status, cost, dual, elapsed_s, expansions, tour, trace_csv) = match solver {
        SolverArg::Oracle => {
            let started = Instant::now();
            match brute_force_optimal(&inst) {
                Ok((tour, _)) => {
                    // Report the canonical rescore (identical to what the
                    // solvers and checkers compute), not the oracle's own
                    // accumulation order.
                    let cost = inst.tour_cost(&tour).expect("oracle tours are valid");
                    let elapsed = if params.virtual_clock {
                        0.0
                    } else {
                        started.elapsed().as_secs_f64()
                    };
                    // A one-row trace: the proven optimum, found at `elapsed`.
                    let csv = format!("elapsed_s,primal,dual,event\n{elapsed},{cost},{cost},final\n");
                    (
                        SolveStatus::Optimal,
                        Some(cost),
                        cost,
                        elapsed,
                        0u64,
                        Some(tour),
                        csv,
                    )
                }
                Err(e) => {
                    eprintln!("qtsp: {}: {e}", path.display());
                    return SolveReport {
                        summary: format!("{} status=error", path.display()),
                        code: 2,
                    };
                }
            }
        }
        SolverArg::Exact | SolverArg::Cabs => {
            let run = if solver == SolverArg::Exact {
                solve_exact(&inst, params)
            } else {
                solve_cabs(&inst, params)
            };
            match run {
                Ok(outcome) => (
                    outcome.status,
                    outcome.cost,
                    outcome.dual_bound,
                    outcome.elapsed_s,
                    outcome.expansions,
                    outcome.tour,
                    outcome.trace.to_csv(),
                ),
                Err(e) => {
                    eprintln!("qtsp: {}: {e}", path.display());
                    return SolveReport {
                        summary: format!("{} status=error", path.display()),
                        code: 2,
                    };
                }
            }
        }
    };

    let trace_path = resolve_output(
        trace,
        single,
        &format!("{stem}__{}.trace.csv", solver.name()),
    );
    if let Err(msg) = write_output(&trace_path, &trace_csv) {
        eprintln!("qtsp: {msg}");
        return SolveReport {
            summary: format!("{} status=error", path.display()),
            code: 2,
        };
    }
    if let (Some(tour), Some(cost)) = (&tour, cost) {
        let sol_path = resolve_output(out, single, &format!("{stem}__{}.sol", solver.name()));
        if let Err(msg) = write_output(&sol_path, &write_solution(tour, cost)) {
            eprintln!("qtsp: {msg}");
            return SolveReport {
                summary: format!("{} status=error", path.display()),
                code: 2,
            };
        }
    }

    let cost_text = cost.map_or_else(|| "-".to_string(), |c| c.to_string());
    SolveReport {
        summary: format!(
            "{} status={status} cost={cost_text} dual={dual} elapsed_s={elapsed_s} expansions={expansions}",
            path.display()
        ),
        code: match status {
            SolveStatus::Optimal | SolveStatus::Feasible => 0,
            SolveStatus::NoSolution => 3,
            SolveStatus::OutOfBudget => 4,
        },
    }
}

fn cmd_export(
    instance: &Path,
    format: FormatArg,
    subtour: SubtourKind,
    out: Option<&Path>,
) -> i32 {
    let inst = match load_instance(instance) {
        Ok(inst) => inst,
        Err(msg) => return fail(msg),
    };
    let stem = instance_stem(instance);
    let (text, default_name) = match format {
        FormatArg::LpMilp => (
            export_milp(&inst, subtour),
            format!("{stem}.{subtour}.milp.lp"),
        ),
        FormatArg::LpMiqp => (export_miqp(&inst), format!("{stem}.miqp.lp")),
        FormatArg::Cp => (export_cp(&inst), format!("{stem}.cp")),
    };
    let model_path = resolve_output(out, true, &default_name);
    let manifest_path = model_path.with_file_name("vars.tsv");
    if let Err(msg) = write_output(&model_path, &text.model) {
        return fail(msg);
    }
    if let Err(msg) = write_output(&manifest_path, &text.manifest) {
        return fail(msg);
    }
    let vars = text.manifest.lines().count().saturating_sub(1);
    println!(
        "wrote {} and {} ({vars} variables)",
        model_path.display(),
        manifest_path.display()
    );
    0
}

fn cmd_check(instance: &Path, candidate: &Path, model: ModelArg) -> i32 {
    let inst = match load_instance(instance) {
        Ok(inst) => inst,
        Err(msg) => return fail(msg),
    };
    let text = match read_input(candidate) {
        Ok(text) => text,
        Err(msg) => return fail(msg),
    };

    // The candidate is either a visiting order or an explicit assignment;
    // the header keyword tells them apart.
    let is_assignment = text.starts_with("assignment ");
    let (objective, violations): (Option<f64>, Vec<String>) = if model == ModelArg::Cp {
        if is_assignment {
            return fail("the cp model checks visiting orders; pass a tour file");
        }
        let (tour, _) = match read_solution::<f64>(&text) {
            Ok(parsed) => parsed,
            Err(e) => return fail(format!("{}: {e}", candidate.display())),
        };
        let values: Vec<usize> = tour.order().to_vec();
        match eval_cp(&inst, &values) {
            Ok(check) => (
                check.objective,
                check.violations.iter().map(|v| v.to_string()).collect(),
            ),
            Err(e) => return fail(e),
        }
    } else {
        let asg = if is_assignment {
            match read_assignment(&text) {
                Ok(asg) => asg,
                Err(e) => return fail(format!("{}: {e}", candidate.display())),
            }
        } else {
            let (tour, _) = match read_solution::<f64>(&text) {
                Ok(parsed) => parsed,
                Err(e) => return fail(format!("{}: {e}", candidate.display())),
            };
            // A parseable but invalid visiting order (missing or repeated
            // customers, wrong start) is an infeasible candidate, not a
            // usage error.
            let broken = tour.validate(inst.n());
            if !broken.is_empty() {
                println!("objective -");
                for v in &broken {
                    println!("violated validation: {v}");
                }
                return 1;
            }
            match assignment_from_tour(&tour) {
                Ok(asg) => asg,
                Err(e) => return fail(format!("{}: {e}", candidate.display())),
            }
        };
        match model {
            ModelArg::Milp => match check_milp(&inst, &asg) {
                Ok(check) => (
                    Some(check.objective),
                    check.violations.iter().map(|v| v.to_string()).collect(),
                ),
                Err(e) => return fail(e),
            },
            ModelArg::Miqp => {
                // The quadratic model shares the assignment constraints;
                // only the objective differs.
                let linear = match check_milp(&inst, &asg) {
                    Ok(check) => check,
                    Err(e) => return fail(e),
                };
                let objective = match eval_miqp_objective(&inst, &asg) {
                    Ok(o) => o,
                    Err(e) => return fail(e),
                };
                (
                    Some(objective),
                    linear.violations.iter().map(|v| v.to_string()).collect(),
                )
            }
            ModelArg::Cp => unreachable!("handled above"),
        }
    };

    match objective {
        Some(o) => println!("objective {o}"),
        None => println!("objective -"),
    }
    if violations.is_empty() {
        println!("feasible");
        0
    } else {
        for v in &violations {
            println!("violated {v}");
        }
        1
    }
}

/// One row of the best-known table: `instance,n,kind,best_known`.
struct BestKnownRow {
    n: usize,
    kind: String,
    best_known: Option<f64>,
}

fn parse_best_known(text: &str, path: &Path) -> Result<BTreeMap<String, BestKnownRow>, String> {
    let mut table = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (no == 0 && line.starts_with("instance,")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(format!(
                "{} line {}: expected instance,n,kind,best_known",
                path.display(),
                no + 1
            ));
        }
        let n: usize = fields[1].parse().map_err(|_| {
            format!("{} line {}: bad n {:?}", path.display(), no + 1, fields[1])
        })?;
        let best_known = if fields[3].is_empty() {
            None
        } else {
            Some(fields[3].parse().map_err(|_| {
                format!(
                    "{} line {}: bad best_known {:?}",
                    path.display(),
                    no + 1,
                    fields[3]
                )
            })?)
        };
        table.insert(
            fields[0].to_string(),
            BestKnownRow {
                n,
                kind: fields[2].to_string(),
                best_known,
            },
        );
    }
    Ok(table)
}

fn cmd_metrics(
    traces: &Path,
    best_known: &Path,
    horizon: f64,
    out: Option<&Path>,
    dat: Option<&Path>,
) -> i32 {
    if !(horizon > 0.0) {
        return fail("--horizon must be positive");
    }
    let table = match read_input(best_known).and_then(|t| parse_best_known(&t, best_known)) {
        Ok(table) => table,
        Err(msg) => return fail(msg),
    };

    let mut names: Vec<String> = match std::fs::read_dir(traces) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|name| name.ends_with(".trace.csv"))
            .collect(),
        Err(e) => return fail(format!("cannot read {}: {e}", traces.display())),
    };
    names.sort();

    let mut records: Vec<RunRecord<f64>> = Vec::new();
    for name in &names {
        let base = name.trim_end_matches(".trace.csv");
        let Some((instance, solver)) = base.rsplit_once("__") else {
            eprintln!("qtsp: warning: {name}: not <instance>__<solver>.trace.csv, skipped");
            continue;
        };
        let Some(row) = table.get(instance) else {
            eprintln!("qtsp: warning: {name}: no best-known row for {instance:?}, skipped");
            continue;
        };
        let events = match read_input(&traces.join(name)).and_then(|text| {
            read_trace_csv(&text).map_err(|e| format!("{name}: {e}"))
        }) {
            Ok(events) => events,
            Err(msg) => {
                eprintln!("qtsp: warning: {msg}, skipped");
                continue;
            }
        };
        let record = RunRecord {
            instance: instance.to_string(),
            n: row.n,
            kind: row.kind.clone(),
            solver: solver.to_string(),
            horizon,
            events,
            best_known: row.best_known,
        };
        // Verify the row is metrically sound up front so one bad trace
        // cannot sink the whole aggregation.
        let sound = optimality_gap(record.final_primal(), record.final_dual()).is_ok()
            && row.best_known.map_or(true, |best| {
                primal_gap(record.final_primal(), best).is_ok()
                    && primal_integral(&record.events, best, horizon).is_ok()
            });
        if !sound {
            eprintln!("qtsp: warning: {name}: inconsistent metrics input, skipped");
            continue;
        }
        records.push(record);
    }
    for instance in table.keys() {
        if !records.iter().any(|r| &r.instance == instance) {
            eprintln!("qtsp: warning: no usable trace for {instance:?}");
        }
    }

    let report = match aggregate_report(&records) {
        Ok(report) => report,
        Err(e) => return fail(e),
    };
    let report_path = resolve_output(out, true, "report.csv");
    if let Err(msg) = write_output(&report_path, &report) {
        return fail(msg);
    }

    let mut runs = String::from("instance,solver,n,kind,opt_gap,primal_gap,primal_integral\n");
    for r in &records {
        let opt = optimality_gap(r.final_primal(), r.final_dual()).expect("validated above");
        let (pg, pi) = match r.best_known {
            Some(best) => (
                primal_gap(r.final_primal(), best)
                    .expect("validated above")
                    .to_string(),
                primal_integral(&r.events, best, horizon)
                    .expect("validated above")
                    .to_string(),
            ),
            None => ("nan".to_string(), "nan".to_string()),
        };
        runs.push_str(&format!(
            "{},{},{},{},{opt},{pg},{pi}\n",
            r.instance, r.solver, r.n, r.kind
        ));
    }
    let runs_path = report_path.with_file_name("runs.csv");
    if let Err(msg) = write_output(&runs_path, &runs) {
        return fail(msg);
    }

    if let Some(dir) = dat {
        let tables = match gnuplot_tables(&records) {
            Ok(tables) => tables,
            Err(e) => return fail(e),
        };
        for (name, contents) in tables {
            if let Err(msg) = write_output(&dir.join(name), &contents) {
                return fail(msg);
            }
        }
    }

    // Echo the aggregate rows; the files carry the full precision anyway.
    print!("{report}");
    0
}
