//! Command-line front end. `run` parses arguments, does the work, and returns the exit
//! code: 0 on success, 1 when the answer is negative (not an equilibrium, infeasible,
//! violated bounds), 2 on usage or input errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

use crate::boundary_search::{solve_free_boundaries, BoundarySolution, SearchError, SearchOptions};
use crate::bounds::{big_cut_bound, check_bounds, cut_bound, BoundsError};
use crate::closed_form::{clique_candidate, solve_line, solve_star, solve_tree, solve_two, ClosedFormError, ClosedFormSolution};
use crate::fp_oracle::{kolmogorov_distance, run_fictitious_play, FpConfig, FpError, TieRule};
use crate::network::{Network, NetworkError};
use crate::numerics::{Rational, Scalar, Tolerance};
use crate::sketch::{sketch_solution_to_profile, solve_lp1, Sketch, SketchError, SketchShape, SketchSolution};
use crate::strategy::{StrategyError, StrategyProfile};
use crate::verifier::{verify_profile, Verdict, VerificationReport, VerifyError};

#[derive(Debug, Parser)]
#[command(name = "bertrand", version, about = "Equilibria of Bertrand price competition on seller networks")]
pub struct Cli {
    /// Exact rational arithmetic (default).
    #[arg(long, global = true, conflicts_with = "float")]
    pub exact: bool,
    /// Double-precision arithmetic.
    #[arg(long, global = true)]
    pub float: bool,
    /// Tolerance for float verification.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for anything random (search restarts, fictitious play).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for output files; nothing is written without it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveKind {
    Two,
    Line,
    Tree,
    Star,
    Clique,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieArg {
    Split,
    Lower,
    Random,
}

impl From<TieArg> for TieRule {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Split => TieRule::SplitEqually,
            TieArg::Lower => TieRule::LowerIndexWins,
            TieArg::Random => TieRule::RandomUniform,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form equilibrium for a two-seller network, line, tree, star or clique.
    Solve {
        kind: SolveKind,
        network: PathBuf,
        /// Center of a star, by seller id.
        #[arg(long)]
        center: Option<String>,
    },
    /// Solve the linear program of a sketch with numeric support intervals.
    SketchSolve { network: PathBuf, sketch: PathBuf },
    /// Find the boundary points of a sketch shape numerically.
    SearchBoundaries {
        network: PathBuf,
        shape: PathBuf,
        /// Initial boundary points, comma separated, starting at 1.
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<f64>>,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
    },
    /// Check whether a profile is an equilibrium.
    Verify { network: PathBuf, profile: PathBuf },
    /// Run discretized fictitious play.
    Fp {
        network: PathBuf,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long, default_value_t = 100_000)]
        iters: usize,
        #[arg(long, value_enum, default_value_t = TieArg::Split)]
        tie: TieArg,
        #[arg(long, default_value_t = 0.1)]
        burn_in: f64,
        /// Profile to measure the Kolmogorov distance against.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Check utilities against the distance and cut bounds.
    Bounds {
        network: PathBuf,
        /// Take utilities from this profile (after verifying it).
        #[arg(long, conflicts_with = "utilities")]
        profile: Option<PathBuf>,
        /// Utilities in seller order, comma separated.
        #[arg(long, value_delimiter = ',')]
        utilities: Option<Vec<String>>,
        /// Seller ids forming a cut set G.
        #[arg(long, value_delimiter = ',')]
        cut: Option<Vec<String>>,
        /// Seller ids of a set G behind big markets; needs --scale.
        #[arg(long, value_delimiter = ',', requires = "scale")]
        big_cut: Option<Vec<String>>,
        /// Smallest size of a big market.
        #[arg(long)]
        scale: Option<String>,
    },
    /// Sample every CDF of a profile on an even grid, as CSV.
    ExportCdf {
        network: PathBuf,
        profile: PathBuf,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Fp(#[from] FpError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Whether the command answered its question positively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Positive,
    Negative,
}

impl Status {
    fn from_verdict(v: Verdict) -> Self {
        if v == Verdict::Equilibrium {
            Status::Positive
        } else {
            Status::Negative
        }
    }
}

struct Ctx {
    tol: Tolerance,
    seed: u64,
    out: Option<PathBuf>,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let Some(dir) = &self.out else { return Ok(()) };
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }

    fn write_json(&self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v).expect("values serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

fn read_network<S: Scalar>(path: &Path) -> Result<Network<S>, CliError> {
    Ok(Network::from_json_value(&read_json(path)?)?)
}

fn read_profile<S: Scalar>(path: &Path, net: &Network<S>, tol: Tolerance) -> Result<StrategyProfile<S>, CliError> {
    Ok(StrategyProfile::from_json(&read_json(path)?, net, tol)?)
}

fn fmt_scalar<S: Scalar>(x: &S) -> String {
    if S::EXACT {
        x.to_string()
    } else {
        format!("{:.9}", x.to_f64())
    }
}

fn fmt_list<S: Scalar>(v: &[S]) -> String {
    let parts: Vec<String> = v.iter().map(fmt_scalar).collect();
    format!("({})", parts.join(", "))
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(Status::Positive) => 0,
        Ok(Status::Negative) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<Status, CliError> {
    let float = cli.float;
    let ctx = Ctx { tol: Tolerance::new(cli.tol.unwrap_or(Tolerance::VERIFY.abs)), seed: cli.seed, out: cli.out };
    if ctx.tol.abs < 0.0 || !ctx.tol.abs.is_finite() {
        return Err(CliError::Usage("tolerance must be a finite non-negative number".into()));
    }
    match cli.command {
        Command::Solve { kind, network, center } => {
            if float {
                solve_cmd::<f64>(&ctx, kind, &network, center.as_deref())
            } else {
                solve_cmd::<Rational>(&ctx, kind, &network, center.as_deref())
            }
        }
        Command::SketchSolve { network, sketch } => {
            if float {
                eprintln!("note: sketch programs are always solved exactly");
            }
            sketch_solve_cmd(&ctx, &network, &sketch)
        }
        Command::SearchBoundaries { network, shape, points, restarts, max_iter } => {
            search_cmd(&ctx, &network, &shape, points, restarts, max_iter)
        }
        Command::Verify { network, profile } => {
            if float {
                verify_cmd::<f64>(&ctx, &network, &profile)
            } else {
                verify_cmd::<Rational>(&ctx, &network, &profile)
            }
        }
        Command::Fp { network, grid, iters, tie, burn_in, compare } => {
            let cfg = FpConfig { grid_size: grid, iterations: iters, tie_rule: tie.into(), seed: ctx.seed, burn_in };
            fp_cmd(&ctx, &network, &cfg, compare.as_deref())
        }
        Command::Bounds { network, profile, utilities, cut, big_cut, scale } => {
            let args = BoundsArgs { profile, utilities, cut, big_cut, scale };
            if float {
                bounds_cmd::<f64>(&ctx, &network, &args)
            } else {
                bounds_cmd::<Rational>(&ctx, &network, &args)
            }
        }
        Command::ExportCdf { network, profile, points } => {
            if float {
                export_cmd::<f64>(&ctx, &network, &profile, points)
            } else {
                export_cmd::<Rational>(&ctx, &network, &profile, points)
            }
        }
    }
}

fn report_verification<S: Scalar>(
    ctx: &Ctx,
    net: &Network<S>,
    report: &VerificationReport<S>,
) -> Result<Status, CliError> {
    print!("{}", report.table(net));
    if let Some(w) = report.worst_seller {
        if report.verdict != Verdict::Equilibrium {
            let d = &report.sellers[w];
            println!("{} gains {} by pricing at {}", net.label(w), fmt_scalar(&d.gain), fmt_scalar(&d.best_price));
        }
    }
    ctx.write_json("report.json", &report.to_json(net))?;
    Ok(Status::from_verdict(report.verdict))
}

fn emit_solution<S: Scalar>(ctx: &Ctx, net: &Network<S>, sol: &ClosedFormSolution<S>) -> Result<Status, CliError> {
    println!("u = {}", fmt_list(&sol.utilities));
    ctx.write_json("profile.json", &sol.profile.to_json(net))?;
    ctx.write("profile.csv", &sol.profile.to_csv(net, 201))?;
    ctx.write_json("sketch-solution.json", &sol.sketch.to_json(net))?;
    let report = verify_profile(net, &sol.profile, ctx.tol)?;
    report_verification(ctx, net, &report)
}

fn solve_cmd<S: Scalar>(ctx: &Ctx, kind: SolveKind, path: &Path, center: Option<&str>) -> Result<Status, CliError> {
    let net: Network<S> = read_network(path)?;
    let sol = match kind {
        SolveKind::Two => solve_two(&net)?,
        SolveKind::Line => solve_line(&net)?,
        SolveKind::Tree => solve_tree(&net)?,
        SolveKind::Star => {
            let c = center.map(|id| net.index_of(id)).transpose()?;
            let star = solve_star(&net, c)?;
            println!("center {}, case {:?}", net.label(star.center), star.case);
            if !star.conventions_agree() {
                eprintln!("warning: the two star recurrences disagree on the case");
            }
            star.solution
        }
        SolveKind::Clique => {
            let cand = clique_candidate(&net)?;
            println!("candidate construction, unproven: t = {}, q = {}", fmt_list(&cand.t), fmt_list(&cand.q));
            cand.solution
        }
    };
    emit_solution(ctx, &net, &sol)
}

fn sketch_solve_cmd(ctx: &Ctx, net_path: &Path, sketch_path: &Path) -> Result<Status, CliError> {
    let net: Network<Rational> = read_network(net_path)?;
    let sketch = Sketch::<Rational>::from_json(&read_json(sketch_path)?, &net, Tolerance::exact())?;
    match solve_lp1(&net, &sketch) {
        Ok(sol) => {
            println!("points = {}", fmt_list(&sol.sketch.points));
            println!("u = {}", fmt_list(&sol.utilities));
            println!("uniqueness: {}", sol.uniqueness.as_str());
            ctx.write_json("sketch-solution.json", &sol.to_json(&net))?;
            let profile = sketch_solution_to_profile(&sol, net.labels(), Tolerance::exact())?;
            ctx.write_json("profile.json", &profile.to_json(&net))?;
            let report = verify_profile(&net, &profile, ctx.tol)?;
            report_verification(ctx, &net, &report)
        }
        Err(SketchError::Infeasible { violated }) => {
            println!("infeasible sketch");
            for v in &violated {
                println!("  {v}");
            }
            Ok(Status::Negative)
        }
        Err(e) => Err(e.into()),
    }
}

fn print_float_solution(sol: &SketchSolution<f64>) {
    println!("points = {}", fmt_list(&sol.sketch.points));
    println!("u = {}", fmt_list(&sol.utilities));
}

fn search_cmd(
    ctx: &Ctx,
    net_path: &Path,
    shape_path: &Path,
    points: Option<Vec<f64>>,
    restarts: usize,
    max_iter: usize,
) -> Result<Status, CliError> {
    let net: Network<Rational> = read_network(net_path)?;
    let shape = SketchShape::from_json(&read_json(shape_path)?, &net)?;
    let opts = SearchOptions {
        seed: points,
        max_iterations: max_iter,
        restarts,
        rng_seed: ctx.seed,
        verify_tol: ctx.tol.abs,
        ..Default::default()
    };
    let fnet = net.map(|v| v.to_f64());
    match solve_free_boundaries(&net, &shape, &opts) {
        Ok(rep) => {
            println!("converged: residual {:e}, {} iterations, restart {}", rep.residual, rep.iterations, rep.restart);
            match &rep.solution {
                BoundarySolution::Exact(sol) => {
                    println!("exact points = {}", fmt_list(&sol.sketch.points));
                    println!("u = {}", fmt_list(&sol.utilities));
                    ctx.write_json("sketch-solution.json", &sol.to_json(&net))?;
                    let profile = sketch_solution_to_profile(sol, net.labels(), Tolerance::exact())?;
                    ctx.write_json("profile.json", &profile.to_json(&net))?;
                    report_verification(ctx, &net, &verify_profile(&net, &profile, ctx.tol)?)
                }
                BoundarySolution::Approximate(sol) => {
                    print_float_solution(sol);
                    ctx.write_json("sketch-solution.json", &sol.to_json(&fnet))?;
                    let profile = sketch_solution_to_profile(sol, fnet.labels(), Tolerance::DEFAULT)?;
                    ctx.write_json("profile.json", &profile.to_json(&fnet))?;
                    report_verification(ctx, &fnet, &verify_profile(&fnet, &profile, ctx.tol)?)
                }
            }
        }
        Err(SearchError::StrictViolated { reason, candidate }) => {
            println!("not an equilibrium: {reason}");
            print_float_solution(&candidate);
            ctx.write_json("candidate.json", &candidate.to_json(&fnet))?;
            Ok(Status::Negative)
        }
        Err(SearchError::NoConvergence { best_residual }) => {
            println!("no convergence (best residual {best_residual:e})");
            Ok(Status::Negative)
        }
        Err(SearchError::BadSeed { expected }) => {
            Err(CliError::Usage(format!("--points must list {expected} decreasing values starting at 1")))
        }
        Err(SearchError::Sketch(e)) => Err(e.into()),
    }
}

fn verify_cmd<S: Scalar>(ctx: &Ctx, net_path: &Path, profile_path: &Path) -> Result<Status, CliError> {
    let net: Network<S> = read_network(net_path)?;
    let profile = read_profile(profile_path, &net, ctx.tol)?;
    let report = verify_profile(&net, &profile, ctx.tol)?;
    report_verification(ctx, &net, &report)
}

fn fp_cmd(ctx: &Ctx, net_path: &Path, cfg: &FpConfig, compare: Option<&Path>) -> Result<Status, CliError> {
    let net: Network<f64> = read_network(net_path)?;
    let emp = run_fictitious_play(&net, cfg)?;
    let csv = emp.to_csv();
    if ctx.out.is_some() {
        ctx.write("histogram.csv", &csv)?;
    } else {
        print!("{csv}");
    }
    if let Some(p) = compare {
        let profile: StrategyProfile<f64> = read_profile(p, &net, Tolerance::DEFAULT)?;
        let d = kolmogorov_distance(&emp, &profile)?;
        for (i, v) in d.iter().enumerate() {
            eprintln!("kolmogorov {}: {v:.6}", net.label(i));
        }
    }
    Ok(Status::Positive)
}

struct BoundsArgs {
    profile: Option<PathBuf>,
    utilities: Option<Vec<String>>,
    cut: Option<Vec<String>>,
    big_cut: Option<Vec<String>>,
    scale: Option<String>,
}

fn ids<S: Scalar>(net: &Network<S>, list: &[String]) -> Result<Vec<usize>, CliError> {
    list.iter().map(|id| net.index_of(id).map_err(CliError::from)).collect()
}

fn bounds_cmd<S: Scalar>(ctx: &Ctx, net_path: &Path, args: &BoundsArgs) -> Result<Status, CliError> {
    let net: Network<S> = read_network(net_path)?;
    let u: Vec<S> = match (&args.profile, &args.utilities) {
        (Some(p), _) => {
            let profile = read_profile(p, &net, ctx.tol)?;
            let report = verify_profile(&net, &profile, ctx.tol)?;
            if report.verdict != Verdict::Equilibrium {
                eprintln!("warning: profile is not a verified equilibrium ({})", report.verdict.as_str());
            }
            report.utilities()
        }
        (None, Some(list)) => list
            .iter()
            .map(|s| S::parse_str(s).map_err(|e| CliError::Usage(format!("utility {s:?}: {e}"))))
            .collect::<Result<_, _>>()?,
        (None, None) => return Err(CliError::Usage("give --profile or --utilities".into())),
    };
    let report = check_bounds(&net, &u, ctx.tol)?;
    print!("{}", report.table(&net));
    let mut json = report.to_json(&net);
    let mut extra_violation = false;
    if let Some(list) = &args.cut {
        let g = ids(&net, list)?;
        let c = cut_bound(&net, &g)?;
        println!("cut bound for {{{}}}: {}", list.join(","), fmt_scalar(&c.bound));
        extra_violation |= g.iter().any(|&i| c.bound.approx_lt(&u[i], ctx.tol));
        json["userCut"] = serde_json::json!({"members": list, "bound": c.bound.to_json()});
    }
    if let Some(list) = &args.big_cut {
        let m = S::parse_str(args.scale.as_deref().unwrap_or_default())
            .map_err(|e| CliError::Usage(format!("--scale: {e}")))?;
        let g = ids(&net, list)?;
        let b = big_cut_bound(&net, &g, &m)?;
        let covered: Vec<&str> = b.covered.iter().map(|&i| net.label(i)).collect();
        println!("big-cut bound for {{{}}}: {}", covered.join(","), fmt_scalar(&b.bound));
        extra_violation |= b.covered.iter().any(|&i| b.bound.approx_lt(&u[i], ctx.tol));
        json["bigCut"] = serde_json::json!({"covered": covered, "bound": b.bound.to_json()});
    }
    ctx.write_json("bounds.json", &json)?;
    if report.violation_count() == 0 && !extra_violation {
        Ok(Status::Positive)
    } else {
        Ok(Status::Negative)
    }
}

fn export_cmd<S: Scalar>(ctx: &Ctx, net_path: &Path, profile_path: &Path, points: usize) -> Result<Status, CliError> {
    let net: Network<S> = read_network(net_path)?;
    let profile = read_profile(profile_path, &net, ctx.tol)?;
    let csv = profile.to_csv(&net, points);
    if ctx.out.is_some() {
        ctx.write("cdf.csv", &csv)?;
    } else {
        print!("{csv}");
    }
    Ok(Status::Positive)
}
