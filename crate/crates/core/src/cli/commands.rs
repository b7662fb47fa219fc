use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use crate::cli::{
    BatchArgs, CliError, FigureArgs, InitArg, MethodArg, RunManifest, SimulateArgs, SocialArgs,
    SolveArgs, SolverArgs, VerifyArgs, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_VERIFY,
};
use crate::config::load_game;
use crate::dynamics::{simulate as run_simulation, write_csv, SimOptions, TrajectorySummary};
use crate::efficiency::efficiency_report;
use crate::model::{random_profile, AggregateStrategy, Game, StrategyProfile};
use crate::solver::{
    invert_phi, kkt_residuals, solve_ne_potential, solve_ne_separable, Equilibrium, KktResiduals,
    Method, SolveError, SolverOptions,
};

fn solver_options(args: &SolverArgs) -> SolverOptions {
    SolverOptions {
        tolerance: args.tol,
        max_iterations: args.max_iter,
        ..SolverOptions::default()
    }
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("cannot write {}: {e}", path.display())))
}

/// Sends `text` to `out` (recording it in the manifest) or to stdout.
fn emit(out: Option<&Path>, text: &str, manifest: &mut RunManifest) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_output(path, text)?;
            manifest.outputs.push(path.to_path_buf());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn finish(manifest: RunManifest, started: Instant) -> Result<(), CliError> {
    manifest.write(started.elapsed())?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub(crate) struct SolveReport {
    pub s_star: AggregateStrategy,
    pub nu: f64,
    pub lambda: Vec<f64>,
    pub residuals: KktResiduals,
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    /// `‖s_bisect − s_pga‖∞` when both solvers ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
}

impl SolveReport {
    fn from_equilibrium(eq: Equilibrium) -> Self {
        SolveReport {
            s_star: eq.s_star,
            nu: eq.nu,
            lambda: eq.certificate.lambda,
            residuals: eq.certificate.residuals,
            method: eq.method,
            converged: eq.converged,
            iterations: eq.iterations,
            discrepancy: None,
        }
    }
}

pub(crate) fn solve_game(
    game: &Game,
    method: MethodArg,
    opts: &SolverOptions,
) -> Result<SolveReport, SolveError> {
    match method {
        MethodArg::Pga => Ok(SolveReport::from_equilibrium(solve_ne_potential(
            game, opts,
        )?)),
        MethodArg::Bisect => Ok(SolveReport::from_equilibrium(solve_ne_separable(
            game, opts,
        )?)),
        MethodArg::Auto if !game.is_separable() => Ok(SolveReport::from_equilibrium(
            solve_ne_potential(game, opts)?,
        )),
        MethodArg::Auto => {
            let bisect = solve_ne_separable(game, opts)?;
            let pga = solve_ne_potential(game, opts)?;
            let discrepancy = bisect
                .s_star
                .values()
                .iter()
                .zip(pga.s_star.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let converged = bisect.converged && pga.converged;
            let mut report = SolveReport::from_equilibrium(bisect);
            report.converged = converged;
            report.discrepancy = Some(discrepancy);
            Ok(report)
        }
    }
}

pub(crate) fn solve(args: &SolveArgs) -> Result<u8, CliError> {
    let started = Instant::now();
    let game = load_game(&args.config)?;
    let report = solve_game(&game, args.method, &solver_options(&args.solver))?;
    let mut manifest = RunManifest::new("solve", vec![args.config.clone()], args, None);
    emit(args.out.as_deref(), &to_json(&report)?, &mut manifest)?;
    finish(manifest, started)?;
    if report.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "warning: not converged after {} iterations (max residual {:e})",
            report.iterations,
            report
                .residuals
                .saddle
                .max(report.residuals.complementarity)
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    #[serde(flatten)]
    summary: &'a TrajectorySummary,
    s_star: &'a AggregateStrategy,
    final_profile: Vec<Vec<f64>>,
}

fn read_profile(path: &Path, game: &Game) -> Result<StrategyProfile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::new(
            EXIT_CONFIG,
            format!("cannot read init file {}: {e}", path.display()),
        )
    })?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("init file {}: {e}", path.display())))?;
    if rows.len() != game.players() || rows.iter().any(|r| r.len() != game.markets()) {
        return Err(CliError::new(
            EXIT_CONFIG,
            format!(
                "init file {} must hold {} rows of {} entries",
                path.display(),
                game.players(),
                game.markets()
            ),
        ));
    }
    Ok(StrategyProfile::new(rows)?)
}

pub(crate) fn simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let started = Instant::now();
    let game = load_game(&args.config)?;
    let start = match args.init {
        InitArg::Uniform => StrategyProfile::uniform(game.players(), game.markets()),
        InitArg::Random => random_profile(game.markets(), game.players(), args.seed),
        InitArg::File => {
            let path = args
                .init_file
                .as_deref()
                .ok_or_else(|| CliError::new(EXIT_CONFIG, "--init file requires --init-file"))?;
            read_profile(path, &game)?
        }
    };
    let opts = SimOptions {
        h: args.h,
        horizon: args.t_max,
        method: args.method.into(),
        stride: args.stride,
        threshold: args.threshold,
    };
    let trajectory = run_simulation(&game, &start, &opts)?;
    let mut csv = Vec::new();
    write_csv(&trajectory, &mut csv)?;
    let csv = String::from_utf8(csv).map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    let report = SimulationReport {
        summary: &trajectory.summary,
        s_star: &trajectory.s_star,
        final_profile: trajectory
            .final_profile()
            .map(|p| p.rows().map(<[f64]>::to_vec).collect())
            .unwrap_or_default(),
    };
    let summary = to_json(&report)?;
    let seed = (args.init == InitArg::Random).then_some(args.seed);
    let mut manifest = RunManifest::new("simulate", vec![args.config.clone()], args, seed);
    match &args.out {
        Some(path) => {
            emit(Some(path), &csv, &mut manifest)?;
            emit(None, &summary, &mut manifest)?;
        }
        None => {
            emit(None, &csv, &mut manifest)?;
            eprint!("{summary}");
        }
    }
    finish(manifest, started)?;
    Ok(if trajectory.summary.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

pub(crate) fn social(args: &SocialArgs) -> Result<u8, CliError> {
    let started = Instant::now();
    let game = load_game(&args.config)?;
    let report = efficiency_report(&game, &solver_options(&args.solver))?;
    let mut manifest = RunManifest::new("social", vec![args.config.clone()], args, None);
    emit(args.out.as_deref(), &to_json(&report)?, &mut manifest)?;
    finish(manifest, started)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyReport {
    candidate: Vec<f64>,
    nu: f64,
    lambda: Vec<f64>,
    residuals: KktResiduals,
    max_residual: f64,
    tol: f64,
    pass: bool,
}

fn read_candidate(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::new(
            EXIT_CONFIG,
            format!("cannot read candidate {}: {e}", path.display()),
        )
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::new(EXIT_CONFIG, format!("candidate {}: {e}", path.display())))?;
    let array = match &value {
        serde_json::Value::Object(map) => map.get("s_star").cloned().ok_or_else(|| {
            CliError::new(
                EXIT_CONFIG,
                format!("candidate {} has no `s_star` field", path.display()),
            )
        })?,
        other => other.clone(),
    };
    serde_json::from_value(array).map_err(|e| {
        CliError::new(
            EXIT_CONFIG,
            format!(
                "candidate {} must be an array of numbers: {e}",
                path.display()
            ),
        )
    })
}

pub(crate) fn verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let game = load_game(&args.config)?;
    let values = read_candidate(&args.candidate)?;
    if values.len() != game.markets() {
        return Err(CliError::new(
            EXIT_CONFIG,
            format!(
                "candidate has {} entries, game has {} markets",
                values.len(),
                game.markets()
            ),
        ));
    }
    let sum: f64 = values.iter().sum();
    let s = AggregateStrategy::new(values.clone(), game.players()).map_err(|e| {
        CliError::new(
            EXIT_CONFIG,
            format!(
                "primal violation: candidate sums to {sum}, expected {}: {e}",
                game.players()
            ),
        )
    })?;
    let certificate = kkt_residuals(&game, &s);
    let max_residual = certificate.max_residual();
    let pass = max_residual <= args.tol;
    let report = VerifyReport {
        candidate: values,
        nu: certificate.nu,
        lambda: certificate.lambda,
        residuals: certificate.residuals,
        max_residual,
        tol: args.tol,
        pass,
    };
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(to_json(&report)?.as_bytes())?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn format_row(values: impl IntoIterator<Item = f64>) -> String {
    let fields: Vec<String> = values.into_iter().map(|v| format!("{v:.16e}")).collect();
    fields.join(",")
}

pub(crate) fn figure(args: &FigureArgs) -> Result<u8, CliError> {
    let started = Instant::now();
    let game = load_game(&args.config)?;
    if !game.is_separable() {
        return Err(CliError::new(EXIT_CONFIG, "figure requires separable cost"));
    }
    if args.steps == 0 {
        return Err(CliError::new(EXIT_CONFIG, "--steps must be at least 1"));
    }
    let eq = solve_ne_separable(&game, &SolverOptions::default())?;
    let half_width = 0.5 * eq.nu.abs().max(1e-3);
    let nu_min = args.nu_min.unwrap_or(eq.nu - half_width);
    let nu_max = args.nu_max.unwrap_or(eq.nu + half_width);
    if !(nu_min.is_finite() && nu_max.is_finite() && nu_min < nu_max) {
        return Err(CliError::new(
            EXIT_CONFIG,
            format!("need finite --nu-min < --nu-max, got {nu_min} and {nu_max}"),
        ));
    }
    let mut grid: Vec<f64> = (0..=args.steps)
        .map(|k| nu_min + (nu_max - nu_min) * k as f64 / args.steps as f64)
        .collect();
    if !grid.contains(&eq.nu) {
        grid.push(eq.nu);
        grid.sort_by(f64::total_cmp);
    }
    let mut text = String::from("nu");
    for x in 1..=game.markets() {
        text.push_str(&format!(",s_{x}"));
    }
    text.push_str(",total\n");
    for nu in grid {
        let s = (0..game.markets())
            .map(|x| invert_phi(&game, x, nu))
            .collect::<Result<Vec<f64>, _>>()?;
        let total = s.iter().sum();
        text.push_str(&format_row(std::iter::once(nu).chain(s).chain([total])));
        text.push('\n');
    }
    let mut manifest = RunManifest::new("figure", vec![args.config.clone()], args, None);
    emit(args.out.as_deref(), &text, &mut manifest)?;
    finish(manifest, started)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
struct BatchEntry {
    config: PathBuf,
    output: Option<PathBuf>,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn batch_one(args: &BatchArgs, config: &Path) -> BatchEntry {
    let stem = config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let output = args.out_dir.join(format!("{stem}.ne.json"));
    let outcome = (|| -> Result<u8, CliError> {
        let game = load_game(config)?;
        let report = solve_game(&game, args.method, &solver_options(&args.solver))?;
        write_output(&output, &to_json(&report)?)?;
        Ok(if report.converged {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        })
    })();
    match outcome {
        Ok(code) => BatchEntry {
            config: config.to_path_buf(),
            output: Some(output),
            exit_code: code,
            error: None,
        },
        Err(e) => BatchEntry {
            config: config.to_path_buf(),
            output: None,
            exit_code: e.code,
            error: Some(e.message),
        },
    }
}

pub(crate) fn batch(args: &BatchArgs) -> Result<u8, CliError> {
    let started = Instant::now();
    fs::create_dir_all(&args.out_dir)?;
    let stems: Vec<_> = args
        .configs
        .iter()
        .map(|c| c.file_stem().map(|s| s.to_owned()))
        .collect();
    for (i, stem) in stems.iter().enumerate() {
        if stems[..i].contains(stem) {
            return Err(CliError::new(
                EXIT_CONFIG,
                format!("duplicate config name {}", args.configs[i].display()),
            ));
        }
    }
    let results: Mutex<Vec<Option<BatchEntry>>> = Mutex::new(vec![None; args.configs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..args.jobs.clamp(1, args.configs.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(config) = args.configs.get(k) else {
                    break;
                };
                let entry = batch_one(args, config);
                results.lock().unwrap_or_else(|e| e.into_inner())[k] = Some(entry);
            });
        }
    });
    let entries: Vec<BatchEntry> = results
        .into_inner()
        .unwrap_or_else(|e| e.into_inner())
        .into_iter()
        .flatten()
        .collect();
    let code = entries.iter().map(|e| e.exit_code).max().unwrap_or(EXIT_OK);
    let mut manifest = RunManifest::new("batch", args.configs.clone(), args, None);
    manifest.outputs = entries.iter().filter_map(|e| e.output.clone()).collect();
    let summary_path: PathBuf = args.out_dir.join("batch.json");
    write_output(&summary_path, &to_json(&entries)?)?;
    manifest.outputs.insert(0, summary_path);
    emit(None, &to_json(&entries)?, &mut manifest)?;
    finish(manifest, started)?;
    Ok(code)
}
