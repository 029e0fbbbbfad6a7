//! `brwalk`: run walks, tabulate designs, evaluate bounds, build worst-case
//! games and run the seeded experiments.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 invalid input,
//! 3 enumeration budget or tie cap exceeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brwalk::analytics::{
    frontier_setcov, one_round_eff_bound, poa_closed_form, poa_lp, theory_bounds, BoundDesign, Horizon, PoaFamily,
};
use brwalk::constructions::{
    build_ci_chain, build_example3, build_poa_matching, build_setcov_stack_spread, build_thm2_game, Construction,
    Scaling,
};
use brwalk::designs::{
    design_asymptotic, design_common_interest, design_one_round_bent, design_pareto_setcov, q_to_chi, DesignFamily,
    DesignSpec,
};
use brwalk::dynamics::{
    k_round_walk, limit_walk, worst_case_walk, worst_reachable_nash, Schedule, TieBreak, DEFAULT_TIE_CAP,
};
use brwalk::experiments::{export, run_experiment, ExperimentConfig, ExportFormat};
use brwalk::model::{io, make_welfare_rule, JointAction, UtilityRule, WelfareFamily, WelfareRule};
use brwalk::Error;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "brwalk", version, about = "Best-response walks and utility design for resource allocation games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a best-response walk on a game file and write the trajectory as JSON lines.
    Simulate(SimulateArgs),
    /// Tabulate a utility design.
    Design(DesignArgs),
    /// Evaluate efficiency bounds over a parameter grid; writes CSV.
    Analyze(AnalyzeArgs),
    /// Build a worst-case game; writes the game JSON and a `.meta.json` sidecar.
    Construct(ConstructArgs),
    /// Run a seeded experiment from a JSON configuration.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Incumbent,
    Lex,
    Adversarial,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    game: PathBuf,
    /// Number of rounds, or `inf` to run until a Nash equilibrium.
    #[arg(long, default_value = "1")]
    k: String,
    #[arg(long, value_enum, default_value = "incumbent")]
    tiebreak: TieArg,
    /// State cap for adversarial tie enumeration.
    #[arg(long, default_value_t = DEFAULT_TIE_CAP)]
    cap: usize,
    /// Comma-separated player indices (0-based) replacing round robin.
    #[arg(long)]
    schedule: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    CommonInterest,
    OneRound,
    Asymptotic,
    Pareto,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(clap::Args)]
#[command(allow_negative_numbers = true)]
struct DesignArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Curvature of the bent welfare rule.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1)]
    b: usize,
    /// Pareto parameter; `--q` may be given instead.
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long, conflicts_with = "chi")]
    q: Option<f64>,
    #[arg(long, default_value_t = 20)]
    jmax: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    /// Price of anarchy from the closed form for bent welfare.
    ClosedForm,
    /// Price of anarchy from the N-agent linear program.
    Lp,
    /// One-round efficiency bound.
    OneRound,
    /// Set covering frontier; the grid holds values of Q.
    Frontier,
    /// Stated guarantees for bent welfare.
    Bounds,
}

#[derive(Clone, Copy, ValueEnum)]
enum HorizonArg {
    One,
    Finite,
    Inf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundDesignArg {
    Optimal,
    CommonInterest,
    AsymptoticAtOne,
}

#[derive(clap::Args)]
#[command(allow_negative_numbers = true)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    route: Route,
    /// Comma-separated values or `start:step:end`.
    #[arg(long = "C-grid", default_value = "0:0.25:1")]
    c_grid: String,
    /// Number of agents for the LP route.
    #[arg(long = "N", default_value_t = 8)]
    n: usize,
    /// Truncation index for closed forms and one-round bounds.
    #[arg(long, default_value_t = 50)]
    jtrunc: usize,
    /// Utility design evaluated by the closed-form, LP and one-round routes.
    #[arg(long, value_enum, default_value = "asymptotic")]
    design: FamilyArg,
    #[arg(long, value_enum, default_value = "one")]
    horizon: HorizonArg,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, value_enum, default_value = "optimal")]
    bound_design: BoundDesignArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Example3,
    Thm2,
    CiChain,
    StackSpread,
    PoaMatching,
}

#[derive(clap::Args)]
#[command(allow_negative_numbers = true)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long = "C", default_value_t = 0.5)]
    c: f64,
    /// Utility rule `f(2)` for the two-agent game; defaults to the one-round design.
    #[arg(long)]
    f2: Option<f64>,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, value_enum, default_value = "asymptotic")]
    design: FamilyArg,
    #[arg(long, default_value_t = 100)]
    base_size: u64,
    #[arg(long, default_value_t = 3)]
    n1: usize,
    #[arg(long, default_value_t = 40)]
    n2: usize,
    /// Round block sizes to integers over a common denominator up to this bound.
    #[arg(long)]
    max_denominator: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
}

enum Failure {
    Core(Error),
    Input(String),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Design(a) => design(a),
        Command::Analyze(a) => analyze(a),
        Command::Construct(a) => construct(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() {
                2
            } else if e.is_budget() {
                3
            } else {
                1
            })
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(1)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(PathBuf::from("<stdout>"), e)),
    }
}

fn json<T: serde::Serialize>(value: &T) -> Outcome<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Core(e.into()))?;
    text.push('\n');
    Ok(text)
}

fn simulate(args: SimulateArgs) -> Outcome {
    let text = fs::read_to_string(&args.game).map_err(|e| Failure::Io(args.game.clone(), e))?;
    let game = io::game_from_json(&text)?;
    let tie = match args.tiebreak {
        TieArg::Incumbent => TieBreak::IncumbentThenLex,
        TieArg::Lex => TieBreak::Lexicographic,
        TieArg::Adversarial => TieBreak::AdversarialEnumerate { cap: args.cap },
    };
    let schedule = args
        .schedule
        .as_deref()
        .map(|s| {
            let order = s
                .split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Input(format!("bad schedule {s:?}: {e}")))?;
            Schedule::new(order, game.n_players()).map_err(Failure::Core)
        })
        .transpose()?;
    let out = args.out.as_deref();
    if args.k == "inf" {
        if schedule.is_some() {
            return Err(Failure::Input("--schedule needs a finite --k".into()));
        }
        if let TieBreak::AdversarialEnumerate { cap } = tie {
            let (joint, welfare) = worst_reachable_nash(&game, cap)?;
            return emit(out, &json(&serde_json::json!({ "joint": joint, "welfare": welfare }))?);
        }
        return emit(out, &limit_walk(&game, &tie)?.to_jsonl());
    }
    let k: usize = args
        .k
        .parse()
        .map_err(|_| Failure::Input(format!("--k must be a number of rounds or `inf`, got {:?}", args.k)))?;
    let walk = match (&tie, &schedule) {
        (TieBreak::AdversarialEnumerate { cap }, Some(s)) => {
            let mut order = Vec::with_capacity(s.len() * k);
            for _ in 0..k {
                order.extend_from_slice(s.order());
            }
            worst_case_walk(&game, &Schedule::new(order, game.n_players())?, *cap)?
        }
        _ => k_round_walk(&game, k, &tie, schedule.as_ref())?,
    };
    emit(out, &walk.to_jsonl())
}

fn bent(c: f64, b: usize, j_max: usize) -> Outcome<WelfareRule> {
    Ok(make_welfare_rule(&WelfareFamily::Bent { b, c }, j_max)?)
}

fn pareto_chi(chi: Option<f64>, q: Option<f64>) -> f64 {
    chi.or(q.map(q_to_chi)).unwrap_or(1.0)
}

fn tabulate(family: FamilyArg, c: f64, b: usize, chi: f64, j_max: usize) -> Outcome<UtilityRule> {
    Ok(match family {
        FamilyArg::CommonInterest => design_common_interest(&bent(c, b, j_max)?),
        FamilyArg::OneRound => design_one_round_bent(c, j_max)?,
        FamilyArg::Asymptotic => design_asymptotic(b, c, j_max)?,
        FamilyArg::Pareto => design_pareto_setcov(chi, j_max)?,
    })
}

fn design(args: DesignArgs) -> Outcome {
    let chi = pareto_chi(args.chi, args.q);
    let f = tabulate(args.family, args.c, args.b, chi, args.jmax)?;
    let text = match args.format {
        TableFormat::Json => json(&f)?,
        TableFormat::Csv => {
            let mut s = String::from("j,f_j\n");
            for (j, v) in f.values().iter().enumerate() {
                s.push_str(&format!("{},{}\n", j + 1, v));
            }
            s
        }
    };
    emit(args.out.as_deref(), &text)
}

fn parse_grid(spec: &str) -> Outcome<Vec<f64>> {
    let bad = || Failure::Input(format!("bad grid {spec:?}; use `a,b,c` or `start:step:end`"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || end < start {
            return Err(bad());
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|i| start + i as f64 * step).collect());
    }
    spec.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

fn analyze(args: AnalyzeArgs) -> Outcome {
    let grid = parse_grid(&args.c_grid)?;
    let j_table = args.jtrunc.max(args.n) + 2;
    let mut s = String::from("parameter,value,truncation_flag\n");
    for &p in &grid {
        let (value, flag) = match args.route {
            Route::ClosedForm => {
                let w = bent(p, 1, j_table)?;
                let f = tabulate(args.design, p, 1, 1.0, j_table)?;
                let b = poa_closed_form(&w, &f, PoaFamily::Bent { j_trunc: args.jtrunc })?;
                (b.value, b.at_boundary)
            }
            Route::Lp => {
                let w = bent(p, 1, j_table)?;
                let f = tabulate(args.design, p, 1, 1.0, j_table)?;
                (poa_lp(&[w], &[f], args.n)?, false)
            }
            Route::OneRound => {
                let w = bent(p, 1, j_table)?;
                let f = tabulate(args.design, p, 1, 1.0, j_table)?;
                let b = one_round_eff_bound(&w, &f, args.jtrunc);
                (b.value, b.at_boundary)
            }
            Route::Frontier => (frontier_setcov(p, args.jtrunc)?.one_round, false),
            Route::Bounds => {
                let horizon = match args.horizon {
                    HorizonArg::One => Horizon::One,
                    HorizonArg::Finite => Horizon::Finite { k: args.k },
                    HorizonArg::Inf => Horizon::Infinity,
                };
                let design = match args.bound_design {
                    BoundDesignArg::Optimal => BoundDesign::Optimal,
                    BoundDesignArg::CommonInterest => BoundDesign::CommonInterest,
                    BoundDesignArg::AsymptoticAtOne => BoundDesign::AsymptoticDesignAtOneRound,
                };
                (theory_bounds(p, horizon, design)?, false)
            }
        };
        s.push_str(&format!("{p},{value},{flag}\n"));
    }
    emit(args.out.as_deref(), &s)
}

fn construct(args: ConstructArgs) -> Outcome {
    let scaling = match args.max_denominator {
        Some(max_denominator) => Scaling::Rational { max_denominator },
        None => Scaling::Exact,
    };
    let built: Construction = match args.kind {
        KindArg::Example3 => build_example3(args.eps)?,
        KindArg::Thm2 => {
            let f = match args.f2 {
                Some(f2) => UtilityRule::unrestricted(vec![1.0, f2], f2)?,
                None => design_one_round_bent(args.c, 2)?,
            };
            build_thm2_game(args.c, &f, scaling)?
        }
        KindArg::CiChain => build_ci_chain(args.n, args.c)?,
        KindArg::StackSpread => {
            let f = tabulate(args.design, 1.0, 1, 1.0, args.n.max(2))?;
            build_setcov_stack_spread(args.n, &f, args.base_size, scaling)?
        }
        KindArg::PoaMatching => {
            let design = match args.design {
                FamilyArg::CommonInterest => DesignFamily::CommonInterest,
                FamilyArg::OneRound => DesignFamily::OneRoundBent { c: None },
                FamilyArg::Asymptotic => DesignFamily::AsymptoticBent { b: 1, c: None },
                FamilyArg::Pareto => {
                    return Err(Failure::Input("use common-interest, one-round or asymptotic here".into()))
                }
            };
            let w = make_welfare_rule(&WelfareFamily::SetCovering, args.n1 + 1)?;
            let f = DesignSpec::new(design).resolve(&w)?;
            let (ws, fs) = (vec![w], vec![f]);
            let lp = brwalk::analytics::LpInstance::new(&ws, &fs, args.n1)?;
            let solution = lp.solve()?;
            build_poa_matching(&lp, &solution, &ws, &fs, args.n2, scaling)?
        }
    };
    emit(Some(&args.out), &io::game_to_json(&built.game)?)?;
    let sidecar = sidecar_path(&args.out);
    emit(Some(&sidecar), &json(&built.meta)?)?;
    if let (Some(ne), Some(opt)) = (&built.meta.nash, &built.meta.optimum) {
        let show = |a: &JointAction| built.game.welfare(a);
        eprintln!(
            "{}: W(nash) = {}, W(opt) = {}, target ratio = {}",
            built.meta.kind,
            show(ne),
            show(opt),
            built.meta.target_ratio
        );
    }
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.meta.json"))
}

fn experiment(args: ExperimentArgs) -> Outcome {
    let text = fs::read_to_string(&args.config).map_err(|e| Failure::Io(args.config.clone(), e))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Failure::Core(e.into()))?;
    let result = run_experiment(&cfg)?;
    let format = match args.format {
        TableFormat::Csv => ExportFormat::Csv,
        TableFormat::Json => ExportFormat::Json,
    };
    let (raw, summary) = export(&result, format, &args.out_dir)?;
    eprintln!("wrote {} and {}", raw.display(), summary.display());
    let mut table = String::from("design,round,min,median,max\n");
    for s in &result.summary {
        table.push_str(&format!("{},{},{:.4},{:.4},{:.4}\n", s.design, s.round, s.min, s.median, s.max));
    }
    emit(None, &table)
}
