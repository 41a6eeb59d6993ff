//! Command-line front end. [`run`] takes the argument vector and output
//! streams and returns the process exit status: 0 on success, 1 when the
//! problem is infeasible, 2 on usage, parse and other errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use diskalloc::allocator::{
    check_placements, evaluate_objective, exact_solve, heuristic_solve, ExactOptions, SolveError, StageProblem,
    DEFAULT_EXACT_CAP,
};
use diskalloc::io::{
    emit_report, emit_solution, generate_instance, parse_instance, parse_solution, relations_dump, GenerateError,
    GeneratorParams, SolutionDocument, StageSolution, TransitionSolution,
};
use diskalloc::model::{Accounting, Allocation, Instance};
use diskalloc::restructuring::{
    aligned_relocation_diff, plan_trajectory, recorded_trajectories, relocation_diff, restructure_one_stage,
    RestructureError, RestructureMode, RestructuringProblem, StageSolver, TrajectoryOptions, TrajectoryStrategy,
};
use diskalloc::Parallelism;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "diskalloc", version, about = "Allocate data files onto parallel disks across processing stages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Print the solution document as JSON instead of the report
    #[arg(long)]
    json: bool,
    /// Also write the solution document to this path
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolverFlags {
    /// Largest stage the exhaustive search accepts
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    exact_cap: usize,
    /// Run searches on one thread
    #[arg(long)]
    sequential: bool,
}

impl SolverFlags {
    fn parallelism(&self) -> Parallelism {
        if self.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::Parallel
        }
    }
}

#[derive(Args, Debug)]
struct InstanceArg {
    #[arg(long, value_name = "FILE")]
    instance: PathBuf,
    /// Print the precedence, concurrency and integrated relation of every stage first
    #[arg(long)]
    dump_relations: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one stage with spread placement, optionally refined
    Solve {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        stage: u32,
        /// Use exhaustive search instead of the heuristic
        #[arg(long)]
        exact: bool,
        /// Refine the heuristic placement by local search
        #[arg(long)]
        local_search: bool,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: Output,
    },
    /// Check feasibility and evaluate the objective of a stored solution
    Evaluate {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, value_name = "FILE")]
        solution: PathBuf,
        #[arg(long)]
        stage: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Relocation plan between two stored solutions
    Diff {
        #[arg(long, value_name = "FILE")]
        from: PathBuf,
        #[arg(long, value_name = "FILE")]
        to: PathBuf,
        /// Stage entry to compare when a document holds several
        #[arg(long)]
        stage: Option<u32>,
        /// Match disk labels of the target to the source first
        #[arg(long)]
        aligned: bool,
        #[arg(long, default_value_t = 1.0)]
        unit_cost: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Modify a previous allocation for a stage within a budget
    Restructure {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        stage: u32,
        #[arg(long, value_name = "FILE")]
        previous: PathBuf,
        #[arg(long)]
        budget: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: Output,
    },
    /// Plan allocations and relocations over all stages
    Trajectory {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        /// One budget per transition, comma separated
        #[arg(long, value_delimiter = ',')]
        budgets: Vec<f64>,
        /// Restructuring mode of the sequential strategy
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Per-stage solver of the independent strategy
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver_kind: SolverArg,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: Output,
    },
    /// Certified optimum of one stage by exhaustive search
    Oracle {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        stage: u32,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        out: Output,
    },
    /// Write a random instance document
    Generate {
        #[arg(long, default_value_t = 8)]
        files: u32,
        #[arg(long, default_value_t = 3)]
        disks: u32,
        #[arg(long, default_value_t = 3)]
        stages: u32,
        #[arg(long, default_value_t = 0.25)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        size_min: u64,
        #[arg(long, default_value_t = 1)]
        size_max: u64,
        #[arg(long, default_value_t = 1.0)]
        slack: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Exact,
    Greedy,
}

impl From<ModeArg> for RestructureMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => RestructureMode::Exact,
            ModeArg::Greedy => RestructureMode::Greedy,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StrategyArg {
    Independent,
    Sequential,
    Replay,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SolverArg {
    Auto,
    Exact,
    Heuristic,
}

enum Failure {
    Infeasible(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Infeasible(_) => 1,
            Failure::Other(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Infeasible(m) | Failure::Other(m) => m,
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Infeasible { .. } | SolveError::InfeasibleInput(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<RestructureError> for Failure {
    fn from(e: RestructureError) -> Self {
        match e {
            RestructureError::Solve(s) => s.into(),
            RestructureError::PreviousInfeasible(_) => Failure::Infeasible(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn load_instance(arg: &InstanceArg, out: &mut dyn Write) -> Result<Instance, Failure> {
    let instance = parse_instance(&arg.instance).map_err(|e| Failure::Other(e.to_string()))?;
    if arg.dump_relations {
        out.write_all(relations_dump(&instance).as_bytes())?;
    }
    Ok(instance)
}

fn load_solution(path: &Path) -> Result<SolutionDocument, Failure> {
    parse_solution(path).map_err(|e| Failure::Other(e.to_string()))
}

fn stage_entry<'a>(doc: &'a SolutionDocument, stage: Option<u32>, path: &Path) -> Result<&'a StageSolution, Failure> {
    doc.stage(stage).ok_or_else(|| {
        Failure::Other(match stage {
            Some(j) => format!("{}: no entry for stage {j}", path.display()),
            None => format!("{}: holds several stages, pick one with --stage", path.display()),
        })
    })
}

fn allocation_of(entry: &StageSolution) -> Result<Allocation, Failure> {
    entry.allocation().map_err(|e| Failure::Infeasible(e.to_string()))
}

fn finish(doc: &SolutionDocument, instance: Option<&Instance>, opts: &Output, out: &mut dyn Write) -> Result<(), Failure> {
    let text = emit_solution(doc);
    if let Some(path) = &opts.output {
        std::fs::write(path, &text).map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))?;
    }
    if opts.json {
        out.write_all(text.as_bytes())?;
    } else {
        out.write_all(emit_report(doc, instance).as_bytes())?;
    }
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            instance,
            stage,
            exact,
            local_search,
            solver,
            out: opts,
        } => {
            let inst = load_instance(&instance, out)?;
            let problem = StageProblem::from_instance(&inst, stage)?;
            let entry = if exact {
                let sol = exact_solve(
                    &problem,
                    ExactOptions {
                        cap: solver.exact_cap,
                        parallelism: solver.parallelism(),
                    },
                )?;
                StageSolution {
                    reference_objective: Some(sol.objective),
                    certified: Some(true),
                    rho: Some(0.0),
                    ..StageSolution::plain(stage, &sol.allocation, sol.objective)
                }
            } else {
                let sol = heuristic_solve(&problem, local_search)?;
                StageSolution {
                    degraded: Some(sol.degraded),
                    ..StageSolution::plain(stage, &sol.allocation, sol.objective)
                }
            };
            finish(&SolutionDocument::single(entry), Some(&inst), &opts, out)
        }
        Command::Evaluate {
            instance,
            solution,
            stage,
            out: opts,
        } => {
            let inst = load_instance(&instance, out)?;
            let problem = StageProblem::from_instance(&inst, stage)?;
            let doc = load_solution(&solution)?;
            let entry = stage_entry(&doc, Some(stage), &solution)?;
            let report = check_placements(&entry.assignment.0, &problem);
            if !report.feasible() {
                let listed: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
                return Err(Failure::Infeasible(format!("infeasible allocation: {}", listed.join("; "))));
            }
            let alloc = allocation_of(entry)?;
            let objective = evaluate_objective(&alloc, &problem)?.value;
            finish(
                &SolutionDocument::single(StageSolution::plain(stage, &alloc, objective)),
                Some(&inst),
                &opts,
                out,
            )
        }
        Command::Diff {
            from,
            to,
            stage,
            aligned,
            unit_cost,
            out: opts,
        } => {
            if !unit_cost.is_finite() || unit_cost < 0.0 {
                return Err(Failure::Other(format!("unit cost must be non-negative, got {unit_cost}")));
            }
            let (a_doc, b_doc) = (load_solution(&from)?, load_solution(&to)?);
            let a_entry = stage_entry(&a_doc, stage, &from)?;
            let b_entry = stage_entry(&b_doc, stage, &to)?;
            let (a, b) = (allocation_of(a_entry)?, allocation_of(b_entry)?);
            let (plan, accounting) = if aligned {
                let disks: Vec<_> = a.assignment.values().chain(b.assignment.values()).copied().collect();
                (aligned_relocation_diff(&a, &b, &disks, unit_cost)?.plan, Accounting::Aligned)
            } else {
                (relocation_diff(&a, &b, unit_cost)?, Accounting::Labeled)
            };
            let doc = SolutionDocument {
                name: None,
                stages: Vec::new(),
                total_modification_cost: plan.total_cost,
                transitions: vec![TransitionSolution {
                    from_stage: a_entry.stage,
                    to_stage: b_entry.stage,
                    accounting,
                    h: plan.total_cost,
                    moves: plan.moves,
                }],
            };
            finish(&doc, None, &opts, out)
        }
        Command::Restructure {
            instance,
            stage,
            previous,
            budget,
            mode,
            solver,
            out: opts,
        } => {
            let inst = load_instance(&instance, out)?;
            let problem = StageProblem::from_instance(&inst, stage)?;
            let prev_doc = load_solution(&previous)?;
            let prev_entry = match prev_doc.stage(None) {
                Some(e) => e,
                None => prev_doc
                    .stages
                    .iter()
                    .filter(|s| s.stage < stage)
                    .max_by_key(|s| s.stage)
                    .ok_or_else(|| Failure::Other(format!("{}: no stage before {stage}", previous.display())))?,
            };
            let prev = allocation_of(prev_entry)?;
            let rp = RestructuringProblem::new(
                prev,
                problem,
                budget,
                inst.relocation_unit_cost,
                solver.exact_cap,
                solver.parallelism(),
            )?;
            let result = restructure_one_stage(&rp, mode.into(), solver.parallelism())?;
            let doc = SolutionDocument {
                name: None,
                stages: vec![StageSolution {
                    reference_objective: Some(result.reference.value),
                    certified: Some(result.reference.certified),
                    rho: Some(result.proximity),
                    ..StageSolution::plain(stage, &result.allocation, result.objective)
                }],
                total_modification_cost: result.plan.total_cost,
                transitions: vec![TransitionSolution {
                    from_stage: prev_entry.stage,
                    to_stage: stage,
                    accounting: Accounting::Labeled,
                    h: result.plan.total_cost,
                    moves: result.plan.moves,
                }],
            };
            finish(&doc, Some(&inst), &opts, out)
        }
        Command::Trajectory {
            instance,
            strategy,
            budgets,
            mode,
            solver_kind,
            solver,
            out: opts,
        } => {
            let inst = load_instance(&instance, out)?;
            let options = TrajectoryOptions {
                solver: match solver_kind {
                    SolverArg::Auto => StageSolver::Auto,
                    SolverArg::Exact => StageSolver::Exact,
                    SolverArg::Heuristic => StageSolver::Heuristic,
                },
                restructure: mode.into(),
                exact_cap: solver.exact_cap,
                parallelism: solver.parallelism(),
            };
            match strategy {
                StrategyArg::Replay => {
                    let recorded = recorded_trajectories(&inst)?;
                    let docs = [
                        SolutionDocument::from_trajectory(&recorded.optimal),
                        SolutionDocument::from_trajectory(&recorded.restructured),
                    ];
                    if let Some(path) = &opts.output {
                        std::fs::write(path, emit_solution(&docs[1]))
                            .map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))?;
                    }
                    for (i, doc) in docs.iter().enumerate() {
                        if i > 0 && !opts.json {
                            out.write_all(b"\n")?;
                        }
                        let text = if opts.json {
                            emit_solution(doc)
                        } else {
                            emit_report(doc, Some(&inst))
                        };
                        out.write_all(text.as_bytes())?;
                    }
                    Ok(())
                }
                StrategyArg::Independent | StrategyArg::Sequential => {
                    let strategy = match strategy {
                        StrategyArg::Independent => TrajectoryStrategy::IndependentOptimal,
                        _ => TrajectoryStrategy::SequentialRestructured,
                    };
                    let t = plan_trajectory(&inst, strategy, &budgets, &options)?;
                    finish(&SolutionDocument::from_trajectory(&t), Some(&inst), &opts, out)
                }
            }
        }
        Command::Oracle {
            instance,
            stage,
            solver,
            out: opts,
        } => {
            let inst = load_instance(&instance, out)?;
            let problem = StageProblem::from_instance(&inst, stage)?;
            let sol = exact_solve(
                &problem,
                ExactOptions {
                    cap: solver.exact_cap,
                    parallelism: solver.parallelism(),
                },
            )?;
            let entry = StageSolution {
                reference_objective: Some(sol.objective),
                certified: Some(true),
                rho: Some(0.0),
                ..StageSolution::plain(stage, &sol.allocation, sol.objective)
            };
            finish(&SolutionDocument::single(entry), Some(&inst), &opts, out)
        }
        Command::Generate {
            files,
            disks,
            stages,
            density,
            size_min,
            size_max,
            slack,
            seed,
            output,
        } => {
            let params = GeneratorParams {
                n_files: files,
                gamma: disks,
                n_stages: stages,
                edge_density: density,
                size_range: (size_min, size_max),
                capacity_slack: slack,
                seed,
            };
            let doc = generate_instance(&params).map_err(|e| match e {
                GenerateError::Infeasible { .. } => Failure::Infeasible(e.to_string()),
                _ => Failure::Other(e.to_string()),
            })?;
            let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
            text.push('\n');
            match output {
                Some(path) => std::fs::write(&path, &text)
                    .map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(())
        }
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                2
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}
