use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use mdpcg::{
    build_transformation, derive_primal_graph, map_equilibrium, sensitivity, solve,
    stochasticity_bound_check, sweep_points, validate_assumptions, BraessReport, Game,
    SolverChoice, WardropEquilibrium,
};
use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::gamefile::{GameFile, LoadedGame};
use crate::json::{matrix, num, vector};

/// Tolerance for equilibria that feed sensitivity, sweep and cycle output.
const INNER_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "mdpcg", version, about = "Wardrop equilibria and sensitivity of MDP congestion games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Kkt,
    Fw,
}

impl From<SolverArg> for SolverChoice {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Auto => SolverChoice::Auto,
            SolverArg::Kkt => SolverChoice::Kkt,
            SolverArg::Fw => SolverChoice::FrankWolfe,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check strong connectivity, incidence rank and cost monotonicity.
    Validate { file: PathBuf },
    /// Compute the equilibrium.
    Solve {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver: SolverArg,
    },
    /// Equilibrium Jacobians and the Braess report.
    Sensitivity { file: PathBuf },
    /// Equilibria along a ray of cost perturbations, as CSV.
    Sweep {
        file: PathBuf,
        /// Perturb a single hyperarc (1-based).
        #[arg(long, conflicts_with = "direction", required_unless_present = "direction")]
        arc: Option<usize>,
        /// Comma-separated nonnegative direction, one entry per hyperarc.
        #[arg(long)]
        direction: Option<String>,
        #[arg(long = "max")]
        max: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Primal graph, transformation and the stochasticity bound.
    Cycle { file: PathBuf },
}

pub fn load(path: &Path) -> Result<LoadedGame, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    GameFile::from_json(&text)?.into_game()
}

/// Runs `cli`, writing the machine-readable result to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { file } => validate(&load(file)?, out),
        Command::Solve { file, tol, solver } => solve_cmd(&load(file)?, *tol, (*solver).into(), out),
        Command::Sensitivity { file } => sensitivity_cmd(&load(file)?, out),
        Command::Sweep {
            file,
            arc,
            direction,
            max,
            steps,
            out: path,
        } => {
            let game = load(file)?;
            let direction = sweep_direction(&game.spec, *arc, direction.as_deref())?;
            match path {
                Some(p) => {
                    let mut f = io::BufWriter::new(fs::File::create(p)?);
                    sweep_cmd(&game, &direction, *max, *steps, &mut f)
                }
                None => sweep_cmd(&game, &direction, *max, *steps, out),
            }
        }
        Command::Cycle { file } => cycle_cmd(&load(file)?, out),
    }
}

fn emit(out: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn validate(game: &LoadedGame, out: &mut dyn Write) -> Result<(), CliError> {
    let report = validate_assumptions(&game.spec);
    emit(
        out,
        &json!({
            "strongly_connected": report.strongly_connected,
            "incidence_rank": report.incidence_rank,
            "rank_ok": report.rank_ok,
            "costs_monotone": report.costs_monotone,
            "kernel_stochastic": report.kernel_stochastic,
            "messages": report.messages,
        }),
    )?;
    if report.all_ok() {
        Ok(())
    } else {
        Err(CliError::Validation)
    }
}

fn equilibrium_fields(spec: &Game, eq: &WardropEquilibrium, eps: &DVector<f64>) -> Result<Map<String, Value>, CliError> {
    let social_cost = spec.social_cost(&eq.y, eps)?;
    let mut m = Map::new();
    m.insert("y".into(), vector(&eq.y));
    m.insert("nu".into(), vector(&eq.nu));
    m.insert("lambda".into(), num(eq.lambda));
    m.insert("mu".into(), vector(&eq.mu));
    m.insert("social_cost".into(), num(social_cost));
    m.insert("kkt_residual".into(), num(eq.kkt_residual));
    m.insert("wardrop_gap".into(), num(eq.wardrop_gap));
    m.insert("solver".into(), json!(eq.solver.as_str()));
    m.insert("iterations".into(), json!(eq.iterations));
    Ok(m)
}

fn solve_cmd(game: &LoadedGame, tol: f64, choice: SolverChoice, out: &mut dyn Write) -> Result<(), CliError> {
    if !(tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {tol}")));
    }
    let eq = solve(&game.spec, &game.eps, choice, tol)?;
    let scale = game.spec.cost_eval(&eq.y, &game.eps)?.amax().max(1.0);
    if eq.kkt_residual > tol * scale {
        return Err(mdpcg::Error::MaxIterations {
            iterations: eq.iterations,
            gap: eq.kkt_residual,
        }
        .into());
    }
    emit(out, &Value::Object(equilibrium_fields(&game.spec, &eq, &game.eps)?))
}

fn braess_json(report: &BraessReport<f64>) -> Value {
    json!({
        "possible": report.paradox_possible,
        "worst_direction": vector(&report.worst_direction),
        "rate": num(report.predicted_rate),
    })
}

fn sensitivity_cmd(game: &LoadedGame, out: &mut dyn Write) -> Result<(), CliError> {
    let eq = solve(&game.spec, &game.eps, SolverChoice::Auto, INNER_TOL)?;
    let r = sensitivity(&game.spec, &eq, &game.eps)?;
    let mut m = equilibrium_fields(&game.spec, &eq, &game.eps)?;
    m.insert("grad_J".into(), vector(&r.dj_deps));
    m.insert("dy_deps".into(), matrix(&r.dy_deps));
    m.insert("dl_deps".into(), matrix(&r.dl_deps));
    m.insert("ddual_deps".into(), matrix(&r.ddual_deps));
    m.insert("braess".into(), braess_json(&BraessReport::from_gradient(&r.dj_deps)));
    emit(out, &Value::Object(m))
}

fn sweep_direction(spec: &Game, arc: Option<usize>, direction: Option<&str>) -> Result<DVector<f64>, CliError> {
    let k = spec.num_hyperarcs();
    match (arc, direction) {
        (Some(a), None) => {
            if a == 0 || a > k {
                return Err(CliError::Usage(format!("--arc {a} outside 1..={k}")));
            }
            let mut d = DVector::zeros(k);
            d[a - 1] = 1.0;
            Ok(d)
        }
        (None, Some(text)) => {
            let values = text
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(format!("--direction: {e}")))?;
            if values.len() != k {
                return Err(CliError::Usage(format!(
                    "--direction has {} entries, expected {k}",
                    values.len()
                )));
            }
            if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(CliError::Usage("--direction entries must be finite and nonnegative".into()));
            }
            Ok(DVector::from_vec(values))
        }
        _ => Err(CliError::Usage("give exactly one of --arc or --direction".into())),
    }
}

fn sweep_cmd(
    game: &LoadedGame,
    direction: &DVector<f64>,
    eps_max: f64,
    steps: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let rows = sweep_points(&game.spec, &game.eps, direction, eps_max, steps)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let k = game.spec.num_hyperarcs();
    let mut header = String::from("eps,social_cost,pred_dJ,lambda,assumption4_ok");
    for i in 1..=k {
        header.push_str(&format!(",y_{i}"));
    }
    writeln!(out, "{header}")?;
    for row in rows {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                writeln!(out, "# aborted")?;
                out.flush()?;
                return Err(e.into());
            }
        };
        let mut line = format!(
            "{},{},{},{},{}",
            row.t,
            row.social_cost,
            row.pred_dj.unwrap_or(f64::NAN),
            row.lambda,
            row.assumption4_ok
        );
        for v in row.y.iter() {
            line.push_str(&format!(",{v}"));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn cycle_cmd(game: &LoadedGame, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = &game.spec;
    let primal = derive_primal_graph(spec)?;
    let transform = build_transformation(spec, &primal)?;
    if !transform.invertible {
        return Err(mdpcg::Error::NotInvertible {
            edges: primal.edges.len(),
            hyperarcs: spec.num_hyperarcs(),
        }
        .into());
    }
    let eq = solve(spec, &game.eps, SolverChoice::Auto, INNER_TOL)?;
    let mapped = map_equilibrium(spec, &eq, &game.eps, &primal, &transform)?;
    let bound = stochasticity_bound_check(spec, &eq, &game.eps)?;
    let edges: Vec<Value> = primal.edges.iter().map(|&(a, b)| json!([a + 1, b + 1])).collect();
    emit(
        out,
        &json!({
            "edges": edges,
            "D": matrix(&primal.d),
            "T": matrix(&transform.t),
            "sigma_max": num(transform.sigma_max),
            "y": vector(&eq.y),
            "z": vector(&mapped.z),
            "kkt_residual": num(mapped.kkt_residual),
            "theorem2": {
                "lhs": num(bound.lhs),
                "rhs": num(bound.rhs),
                "holds": bound.holds,
            },
        }),
    )
}
