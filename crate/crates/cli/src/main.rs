use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use impulse_game::compare::{compare, CompareTolerances};
use impulse_game::config::ProblemConfig;
use impulse_game::oracle::{backward_induction_lower, backward_induction_upper, dpp_check, value_gap};
use impulse_game::payoff::evaluate_payoff;
use impulse_game::problem::collinear_scales;
use impulse_game::qvi::{boundary_margin, residual_report, strict_supersolution_transform, QviResidualReport, TransformParams};
use impulse_game::trajectory::simulate;
use impulse_game::{
    solve_fixed_point, validate_h1, validate_h2, value_bound, Execution, GameProblem, Grid,
    GridFunction, SolverConfig,
};

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

/// Solver, oracle and diagnostics for zero-sum deterministic impulse games.
#[derive(Parser)]
#[command(name = "impulse-game", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV artifacts; created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Run node sweeps on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the standing assumptions on the configured problem.
    Validate(Common),
    /// Value-iterate to the fixed point; writes value.csv and policy.csv.
    Solve(Common),
    /// Residuals of both inequalities for a value CSV; writes residual.csv.
    Residual {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        value: PathBuf,
    },
    /// Backward induction; writes lower.csv and upper.csv.
    Oracle(Common),
    /// One-stage dynamic programming gap of a value CSV (solves first if omitted).
    DppCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        value: Option<PathBuf>,
    },
    /// Simulate the controls of the [simulate] section; writes trajectory.csv.
    Simulate(Common),
    /// Solve, run the oracle and evaluate every check with a pass/fail summary.
    Compare(Common),
    /// Strict-supersolution perturbation of a value CSV; writes transform.csv
    /// and transform_residual.csv.
    Transform {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        value: PathBuf,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        k: f64,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate(c)
            | Command::Solve(c)
            | Command::Oracle(c)
            | Command::Simulate(c)
            | Command::Compare(c) => c,
            Command::Residual { common, .. }
            | Command::DppCheck { common, .. }
            | Command::Transform { common, .. } => common,
        }
    }
}

/// Loaded config plus the objects built from it.
struct Setup {
    config: ProblemConfig,
    base_dir: PathBuf,
    problem: GameProblem,
    grid: Grid,
    exec: Execution,
    out: PathBuf,
}

impl Setup {
    fn solver(&self) -> anyhow::Result<SolverConfig> {
        let mut s = self.config.solver_config(&self.base_dir)?;
        s.exec = self.exec;
        Ok(s)
    }

    fn read_value(&self, path: &Path) -> anyhow::Result<GridFunction> {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(GridFunction::read_csv(&self.grid, file)?)
    }

    fn create(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.out.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }
}

fn load(common: &Common) -> Result<Setup, String> {
    let config = ProblemConfig::load(&common.config)
        .map_err(|e| format!("{}: {e}", common.config.display()))?;
    let problem = config.problem().map_err(|e| e.to_string())?;
    let grid = config.grid().map_err(|e| e.to_string())?;
    let base_dir = common
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok(Setup {
        config,
        base_dir,
        problem,
        grid,
        exec: if common.sequential { Execution::Sequential } else { Execution::Parallel },
        out: common.out.clone(),
    })
}

fn validate(s: &Setup) -> anyhow::Result<u8> {
    let domain = s.config.domain()?;
    let h1 = validate_h1(&s.problem, &domain, s.config.validate.samples, s.config.seed)?;
    let mut scales = collinear_scales(s.problem.max_player());
    for k in &s.config.validate.h2_scales {
        if !scales.contains(k) {
            scales.push(*k);
        }
    }
    let report = h1.merge(validate_h2(&s.problem, &scales)?);
    print!("{report}");
    Ok(if report.passed() { 0 } else { EXIT_FAILED })
}

fn solve(s: &Setup) -> anyhow::Result<u8> {
    let result = solve_fixed_point(&s.problem, &s.grid, &s.solver()?)?;
    result.value.write_csv(s.create("value.csv")?)?;
    result.write_policy_csv(&s.problem, s.create("policy.csv")?)?;
    println!("value_bound={}", value_bound(&s.problem));
    print!("{result}");
    Ok(if result.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn print_residual_summary(prefix: &str, report: &QviResidualReport) {
    let interior: Vec<_> = report.interior().collect();
    let max_abs = |f: fn(&impulse_game::qvi::ResidualEntry) -> f64| {
        interior.iter().map(|e| f(e).abs()).fold(0.0, f64::max)
    };
    let min = |f: fn(&impulse_game::qvi::ResidualEntry) -> f64| {
        interior.iter().map(|e| f(e)).fold(f64::INFINITY, f64::min)
    };
    println!("{prefix}interior_nodes={}", interior.len());
    println!("{prefix}max_abs_residual_classic={:e}", max_abs(|e| e.residual_classic));
    println!("{prefix}max_abs_residual_new={:e}", max_abs(|e| e.residual_new));
    println!("{prefix}min_residual_new={:e}", min(|e| e.residual_new));
}

fn residual(s: &Setup, value: &Path) -> anyhow::Result<u8> {
    let v = s.read_value(value)?;
    let dt = s.solver()?.resolved_dt(&s.problem, &s.grid);
    let report = residual_report(
        &s.problem,
        &v,
        boundary_margin(&s.problem, dt),
        s.config.compare.active_margin,
        s.exec,
    );
    report.write_csv(&s.problem, s.create("residual.csv")?)?;
    print_residual_summary("", &report);
    Ok(0)
}

fn oracle(s: &Setup) -> anyhow::Result<u8> {
    let mut spec = s.config.oracle_spec()?;
    spec.exec = s.exec;
    let lower = backward_induction_lower(&spec);
    let upper = backward_induction_upper(&spec);
    lower.write_csv(s.create("lower.csv")?)?;
    upper.write_csv(s.create("upper.csv")?)?;
    let dt = s.solver()?.resolved_dt(&s.problem, &s.grid);
    let mask = s.grid.interior_mask(boundary_margin(&s.problem, dt));
    println!("horizon={}", spec.horizon());
    println!("tail_bound={:e}", spec.tail_bound());
    println!("value_gap={:e}", value_gap(&lower, &upper, &mask)?);
    println!("value_gap_all_nodes={:e}", lower.sup_distance(&upper)?);
    Ok(0)
}

fn dpp(s: &Setup, value: Option<&Path>) -> anyhow::Result<u8> {
    let solver = s.solver()?;
    let v = match value {
        Some(p) => s.read_value(p)?,
        None => {
            let r = solve_fixed_point(&s.problem, &s.grid, &solver)?;
            if !r.converged {
                print!("{r}");
                return Ok(EXIT_NOT_CONVERGED);
            }
            r.value
        }
    };
    let dt = solver.resolved_dt(&s.problem, &s.grid);
    let mask = s.grid.interior_mask(boundary_margin(&s.problem, dt));
    let tol = s.config.compare.dpp_tol_factor * solver.tol;
    let report = dpp_check(&s.problem, &v, dt, tol, &mask)?;
    print!("{report}");
    Ok(if report.passed { 0 } else { EXIT_FAILED })
}

fn run_simulation(s: &Setup) -> anyhow::Result<u8> {
    let Some(sim) = &s.config.simulate else {
        bail!("config has no [simulate] section");
    };
    let (u, v) = sim.controls()?;
    let traj = simulate(&s.problem, &sim.x0, &u, &v, sim.horizon, sim.step)?;
    traj.write_csv(s.create("trajectory.csv")?)?;
    let payoff = evaluate_payoff(&s.problem, &traj, &u, &v)?;
    println!("final_state={:?}", traj.final_state());
    println!("jumps={}", traj.jump_records.len());
    println!(
        "suppressed_jumps={}",
        traj.jump_records.iter().filter(|r| r.suppressed).count()
    );
    print!("{payoff}");
    Ok(0)
}

fn run_compare(s: &Setup) -> anyhow::Result<u8> {
    let mut spec = s.config.oracle_spec()?;
    spec.exec = s.exec;
    let c = &s.config.compare;
    let tols = CompareTolerances {
        oracle: c.oracle_tol,
        value_gap: c.value_gap_tol,
        obstacle: c.obstacle_tol,
        active_margin: c.active_margin,
        residual: c.residual_tol,
        dpp_factor: c.dpp_tol_factor,
    };
    let report = compare(&s.problem, &s.grid, &s.solver()?, &spec, &tols)?;
    report.solve.value.write_csv(s.create("value.csv")?)?;
    report.lower.write_csv(s.create("lower.csv")?)?;
    report.upper.write_csv(s.create("upper.csv")?)?;
    print!("{report}");
    Ok(if !report.solve.converged {
        EXIT_NOT_CONVERGED
    } else if report.passed() {
        0
    } else {
        EXIT_FAILED
    })
}

fn transform(s: &Setup, value: &Path, mu: f64, alpha: f64, k: f64) -> anyhow::Result<u8> {
    let v = s.read_value(value)?;
    let params = TransformParams { mu, alpha, k };
    let star = strict_supersolution_transform(&s.problem, &v, params)?;
    star.write_csv(s.create("transform.csv")?)?;
    let dt = s.solver()?.resolved_dt(&s.problem, &s.grid);
    let report = residual_report(&s.problem, &star, boundary_margin(&s.problem, dt), 0.0, s.exec);
    report.write_csv(&s.problem, s.create("transform_residual.csv")?)?;
    println!("alpha_limit={:e}", TransformParams::alpha_limit(&s.problem, mu, k));
    print_residual_summary("transform_", &report);
    let strict = report.interior().all(|e| e.residual_new > 0.0);
    println!("strict_supersolution={strict}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common();
    let setup = match load(common) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Err(e) = fs::create_dir_all(&setup.out) {
        eprintln!("error: creating {}: {e}", setup.out.display());
        return ExitCode::from(EXIT_FAILED);
    }
    let outcome = match &cli.command {
        Command::Validate(_) => validate(&setup),
        Command::Solve(_) => solve(&setup),
        Command::Residual { value, .. } => residual(&setup, value),
        Command::Oracle(_) => oracle(&setup),
        Command::DppCheck { value, .. } => dpp(&setup, value.as_deref()),
        Command::Simulate(_) => run_simulation(&setup),
        Command::Compare(_) => run_compare(&setup),
        Command::Transform { value, mu, alpha, k, .. } => transform(&setup, value, *mu, *alpha, *k),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = matches!(
                e.downcast_ref::<impulse_game::Error>(),
                Some(impulse_game::Error::Config(_))
            );
            ExitCode::from(if config_error { EXIT_CONFIG } else { EXIT_FAILED })
        }
    }
}
