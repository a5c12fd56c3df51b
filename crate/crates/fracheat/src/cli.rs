//! Command-line driver. Every subcommand resolves one layered
//! configuration (defaults, then the config file, then --set overrides),
//! works inside a fresh run directory named by timestamp and content
//! hash, and leaves a manifest.json recording the resolved
//! configuration, input hashes, timing, every warning the run emitted,
//! and the verdicts.
//!
//! Exit codes are the machine contract: 0 success, 1 failed verification
//! verdict, 2 usage error. Nothing is written outside the run directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::experiments::{
    make_data, study_continuity, study_doubly_critical, study_global, study_scaling,
    study_smoothing, study_weak_convergence, ContinuityStudyConfig, DoublyCriticalConfig,
    GlobalStudyConfig, ScalingStudyConfig, SmoothingStudyConfig, WeakConvergenceConfig, WeakRow,
};
use crate::io::{
    read_field_binary, sha256_hex, sha256_hex_file, write_csv, write_field_binary,
    write_field_csv,
};
use crate::manifest::{boundary_mass_warning, RunManifest};
use crate::norms::{besov_morrey_norm, morrey_norm};
use crate::operators::{p_alpha, s_alpha, FracParams, SmoothingOp};
use crate::plot;
use crate::solver::{solve, solve_with_halving, Verdict};
use crate::specfun::{gamma_fn, wright_moment, MlEvaluator, WrightEvaluator};
use crate::spectral::{dft, heat_semigroup, idft, Field, FilterBank, Grid};
use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fracheat",
    version,
    about = "Time-fractional semilinear heat flows in Besov-Morrey spaces"
)]
pub struct Cli {
    /// Flat key = value config file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Accept a smoothness index outside the well-posedness window
    #[arg(long, global = true)]
    pub force: bool,
    /// Parent directory for run directories
    #[arg(long, global = true, value_name = "DIR", default_value = "runs")]
    pub out_root: PathBuf,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Evaluate a special function on a list of abscissas
    Specfun {
        #[arg(long, value_enum)]
        function: SpecialFunction,
        #[arg(long)]
        alpha: f64,
        /// Second parameter of the two-index Mittag-Leffler family
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Abscissas (the moment order r for --function moment)
        #[arg(long = "x", value_name = "X", required = true, num_args = 1..)]
        xs: Vec<f64>,
    },
    /// Apply one propagator at one time to a field
    Apply {
        #[arg(long, value_enum)]
        op: OperatorName,
        #[arg(long)]
        t: f64,
        /// Binary field file; defaults to the configured datum
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Norm survey of a field: per-block Morrey norms and aggregates
    Norms {
        /// Binary field file; defaults to the configured datum
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Picard-iterate the mild formulation and store the trajectory
    Solve,
    /// Check fitted smoothing slopes against the predicted rates
    VerifySmoothing,
    /// Check discrete scale equivariance of the solver
    VerifyScaling,
    /// Check weak-star return to the datum and the correction rate
    VerifyWeakConvergence,
    /// Check time continuity of converged trajectories away from zero
    VerifyContinuity,
    /// Drain the high-frequency surrogate at the critical power
    DoublyCritical,
    /// Long-horizon small-data run under the decay-weighted norm
    Global,
    /// Render an SVG chart next to every CSV table of a run directory
    Plot { run_dir: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum SpecialFunction {
    Wright,
    Ml,
    Gamma,
    Moment,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum OperatorName {
    PAlpha,
    SAlpha,
    Heat,
}

/// Parse the command line, run it, and return the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    init_threads();
    match execute(cli) {
        Ok(code) => code,
        Err(Error::Usage(m)) => {
            eprintln!("usage error: {m}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// FRACHEAT_THREADS caps worker parallelism; orchestration itself stays
/// on one thread.
fn init_threads() {
    if let Ok(text) = std::env::var("FRACHEAT_THREADS") {
        if let Ok(k) = text.trim().parse::<usize>() {
            if k >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

fn parse_overrides(raw: &[String]) -> Result<Vec<(String, String)>> {
    raw.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got '{s}'")))
        })
        .collect()
}

fn execute(cli: Cli) -> Result<i32> {
    // plot works inside an existing run directory and resolves no config
    if let Cmd::Plot { run_dir } = &cli.cmd {
        return cmd_plot(run_dir);
    }
    let overrides = parse_overrides(&cli.set)?;
    let cfg = Config::from_layers(cli.config.as_deref(), &overrides, cli.force)?;
    let echo: String = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let root = &cli.out_root;
    match cli.cmd {
        Cmd::Specfun { function, alpha, beta, xs } => {
            cmd_specfun(root, &echo, &cfg, function, alpha, beta, &xs)
        }
        Cmd::Apply { op, t, input } => cmd_apply(root, &echo, &cfg, op, t, input.as_deref()),
        Cmd::Norms { input } => cmd_norms(root, &echo, &cfg, input.as_deref()),
        Cmd::Solve => cmd_solve(root, &echo, &cfg),
        Cmd::VerifySmoothing => cmd_verify_smoothing(root, &echo, &cfg),
        Cmd::VerifyScaling => cmd_verify_scaling(root, &echo, &cfg),
        Cmd::VerifyWeakConvergence => cmd_verify_weak(root, &echo, &cfg),
        Cmd::VerifyContinuity => cmd_verify_continuity(root, &echo, &cfg),
        Cmd::DoublyCritical => cmd_doubly_critical(root, &echo, &cfg),
        Cmd::Global => cmd_global(root, &echo, &cfg),
        Cmd::Plot { .. } => unreachable!("handled above"),
    }
}

// ---------------------------------------------------------------------------
// run directories

struct RunContext {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunContext {
    fn new(
        out_root: &Path,
        command: &str,
        cfg: &Config,
        input_hashes: BTreeMap<String, String>,
    ) -> Result<RunContext> {
        let echo = cfg.to_map();
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        let mut material = format!("{command}\n{}\n", now.as_nanos());
        for (k, v) in &echo {
            material.push_str(&format!("{k}={v}\n"));
        }
        for (k, v) in &input_hashes {
            material.push_str(&format!("{k}:{v}\n"));
        }
        let digest = sha256_hex(material.as_bytes());
        let dir = out_root.join(format!("{}-{}", now.as_secs(), &digest[..8]));
        std::fs::create_dir_all(&dir)?;
        let mut manifest = RunManifest::new(command.to_string());
        manifest.config = echo;
        manifest.input_hashes = input_hashes;
        Ok(RunContext { dir, manifest })
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.manifest.write(&self.dir)?;
        println!("run dir: {}", self.dir.display());
        Ok(self.dir)
    }
}

/// Input field: an explicit binary file (hashed into the manifest), or
/// the configured datum.
fn load_input(input: Option<&Path>, cfg: &Config) -> Result<(Field, BTreeMap<String, String>)> {
    match input {
        Some(path) => {
            let field = read_field_binary(path)?;
            let mut hashes = BTreeMap::new();
            hashes.insert("input".into(), sha256_hex_file(path)?);
            Ok((field, hashes))
        }
        None => {
            let grid = cfg.grid()?;
            let field = make_data(&cfg.data_spec(), grid)?.to_field(grid)?;
            Ok((field, BTreeMap::new()))
        }
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Converged => "Converged",
        Verdict::Diverged => "Diverged",
        Verdict::MaxIters => "MaxIters",
    }
}

/// Merge explicit grid keys over a study's default grid.
fn grid_override(cfg: &Config, default: Grid) -> Result<Grid> {
    if !(cfg.is_set("dim") || cfg.is_set("n") || cfg.is_set("half_width")) {
        return Ok(default);
    }
    let dim = if cfg.is_set("dim") { cfg.dim } else { default.dim() };
    let n = if cfg.is_set("n") { cfg.n } else { default.points_per_dim() };
    let l = if cfg.is_set("half_width") { cfg.half_width } else { default.half_width() };
    Grid::new(dim, n, l)
}

fn op_label(op: SmoothingOp) -> &'static str {
    match op {
        SmoothingOp::PAlpha => "p_alpha",
        SmoothingOp::SAlpha => "s_alpha",
        SmoothingOp::Heat => "heat",
    }
}

// ---------------------------------------------------------------------------
// specfun

/// One CSV row per abscissa: value, error estimate, method branch.
fn specfun_rows(
    function: SpecialFunction,
    alpha: f64,
    beta: f64,
    xs: &[f64],
) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::with_capacity(xs.len());
    match function {
        SpecialFunction::Wright => {
            let ev = WrightEvaluator::new(alpha)?;
            for &x in xs {
                let pe = ev.phi_detailed(x)?;
                rows.push(row(function, alpha, beta, x, pe.value, pe.error_estimate, pe.branch));
            }
        }
        SpecialFunction::Ml => {
            let ev = MlEvaluator::new(alpha, beta)?;
            for &x in xs {
                let v = ev.eval(x)?;
                let branch = ev.branch(x);
                let err = match branch {
                    "integral" => v.abs() * 1e-12 + 1e-13,
                    _ => v.abs() * 4.0 * f64::EPSILON,
                };
                rows.push(row(function, alpha, beta, x, v, err, branch));
            }
        }
        SpecialFunction::Gamma => {
            for &x in xs {
                let v = gamma_fn(x)?;
                let branch = if x < 0.5 { "reflection" } else { "lanczos" };
                rows.push(row(function, alpha, beta, x, v, v.abs() * 1e-14, branch));
            }
        }
        SpecialFunction::Moment => {
            for &r in xs {
                let v = wright_moment(alpha, r)?;
                rows.push(row(function, alpha, beta, r, v, v.abs() * 1e-14, "gamma-ratio"));
            }
        }
    }
    Ok(rows)
}

fn row(
    function: SpecialFunction,
    alpha: f64,
    beta: f64,
    x: f64,
    value: f64,
    err: f64,
    branch: &str,
) -> Vec<String> {
    vec![
        format!("{function:?}").to_lowercase(),
        alpha.to_string(),
        beta.to_string(),
        x.to_string(),
        value.to_string(),
        err.to_string(),
        branch.to_string(),
    ]
}

const SPECFUN_HEADER: [&str; 7] =
    ["function", "alpha", "beta", "x", "value", "error_estimate", "branch"];

fn cmd_specfun(
    out_root: &Path,
    echo: &str,
    cfg: &Config,
    function: SpecialFunction,
    alpha: f64,
    beta: f64,
    xs: &[f64],
) -> Result<i32> {
    let rows = specfun_rows(function, alpha, beta, xs)?;
    let mut ctx = RunContext::new(out_root, echo, cfg, BTreeMap::new())?;
    write_csv(&ctx.dir.join("specfun.csv"), &SPECFUN_HEADER, &rows)?;
    println!("{}", SPECFUN_HEADER.join(","));
    for r in &rows {
        println!("{}", r.join(","));
    }
    ctx.manifest.verdict("evaluations", rows.len());
    ctx.finish()?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// apply / norms / solve

fn cmd_apply(
    out_root: &Path,
    echo: &str,
    cfg: &Config,
    op: OperatorName,
    t: f64,
    input: Option<&Path>,
) -> Result<i32> {
    let (field, hashes) = load_input(input, cfg)?;
    let fp = FracParams::new(cfg.alpha, cfg.gamma, field.grid().dim())?;
    let backend = cfg.operator_backend();
    let out = match op {
        OperatorName::PAlpha => p_alpha(t, &field, &fp, &backend)?,
        OperatorName::SAlpha => s_alpha(t, &field, &fp, &backend)?,
        OperatorName::Heat => heat_semigroup(&field, t)?,
    };
    let mut ctx = RunContext::new(out_root, echo, cfg, hashes)?;
    if let Some(w) = boundary_mass_warning(&field) {
        ctx.manifest.warn(format!("input: {w}"));
    }
    if let Some(w) = boundary_mass_warning(&out) {
        ctx.manifest.warn(format!("output: {w}"));
    }
    write_field_binary(&ctx.dir.join("output.bin"), &out)?;
    write_field_csv(&ctx.dir.join("output.csv"), &out)?;
    let name = format!("{op:?}").to_lowercase();
    ctx.manifest.verdict("operator", format!("{name} at t = {t}"));
    println!(
        "{name} at t = {t}: |input|_2 = {:.6e}, |output|_2 = {:.6e}",
        field.l2_norm(),
        out.l2_norm()
    );
    ctx.finish()?;
    Ok(0)
}

fn cmd_norms(out_root: &Path, echo: &str, cfg: &Config, input: Option<&Path>) -> Result<i32> {
    let (field, hashes) = load_input(input, cfg)?;
    let sp = cfg.space_params()?;
    let mp = sp.morrey();
    let bank = FilterBank::new(field.grid());
    let mut ctx = RunContext::new(out_root, echo, cfg, hashes)?;
    if let Some(w) = boundary_mass_warning(&field) {
        ctx.manifest.warn(w);
    }
    let blocks = bank.blocks().to_vec();
    if sp.homogeneous {
        ctx.manifest.warn(format!(
            "homogeneous block sum truncated below j_min = {} by the pi/L grid cutoff",
            blocks[0]
        ));
    }
    let sf = dft(&field);
    let mut rows = Vec::with_capacity(blocks.len());
    for &j in &blocks {
        let piece = idft(&bank.block(&sf, j)?)?;
        let est = morrey_norm(&piece, &mp, cfg.stride)?;
        for w in est.warnings {
            ctx.manifest.warn(format!("block {j}: {w}"));
        }
        let weighted = (2.0f64).powi(j).powf(sp.s) * est.value;
        rows.push(vec![j.to_string(), est.value.to_string(), weighted.to_string()]);
    }
    write_csv(
        &ctx.dir.join("blocks.csv"),
        &["j", "morrey_norm", "weighted"],
        &rows,
    )?;
    let whole = morrey_norm(&field, &mp, cfg.stride)?;
    for w in whole.warnings {
        ctx.manifest.warn(w);
    }
    let besov = besov_morrey_norm(&field, &sp, &bank, cfg.stride)?;
    write_csv(
        &ctx.dir.join("aggregate.csv"),
        &["besov_morrey_norm", "morrey_norm", "l1_norm", "l2_norm", "linf_norm"],
        &[vec![
            besov.to_string(),
            whole.value.to_string(),
            field.l1_norm().to_string(),
            field.l2_norm().to_string(),
            field.linf_norm().to_string(),
        ]],
    )?;
    ctx.manifest.verdict("besov_morrey_norm", besov);
    ctx.manifest.verdict("morrey_norm", whole.value);
    ctx.manifest.verdict("stride", cfg.stride);
    println!(
        "besov_morrey = {besov:.6e}, morrey = {:.6e}, blocks {}..={}",
        whole.value,
        blocks[0],
        blocks[blocks.len() - 1]
    );
    ctx.finish()?;
    Ok(0)
}

fn cmd_solve(out_root: &Path, echo: &str, cfg: &Config) -> Result<i32> {
    let grid = cfg.grid()?;
    let mu = make_data(&cfg.data_spec(), grid)?.to_field(grid)?;
    let sc = cfg.solver_config()?;
    let (outcome, halvings) = if cfg.max_halvings > 0 {
        solve_with_halving(&mu, &sc, cfg.max_halvings)?
    } else {
        (solve(&mu, &sc)?, 0)
    };
    let mut ctx = RunContext::new(out_root, echo, cfg, BTreeMap::new())?;
    if halvings > 0 {
        ctx.manifest.warn(format!("time horizon halved {halvings} time(s) after divergence"));
    }
    if let Some(w) = boundary_mass_warning(&mu) {
        ctx.manifest.warn(format!("datum: {w}"));
    }
    write_field_binary(&ctx.dir.join("datum.bin"), &mu)?;
    write_field_csv(&ctx.dir.join("datum.csv"), &mu)?;

    let traj = &outcome.trajectory;
    let d = &outcome.diagnostics;
    let node_dir = ctx.dir.join("trajectory");
    std::fs::create_dir_all(&node_dir)?;
    let mp = cfg.morrey_params()?;
    let mut norm_rows = Vec::new();
    for m in 1..=traj.time().segments() {
        let state = traj.state(m);
        write_field_binary(&node_dir.join(format!("node_{m:03}.bin")), state)?;
        let t = traj.time().node(m);
        let est = morrey_norm(state, &mp, cfg.stride)?;
        for w in est.warnings {
            ctx.manifest.warn(w);
        }
        let weighted = t.powf(-cfg.s * cfg.alpha / 2.0) * est.value;
        norm_rows.push(vec![t.to_string(), est.value.to_string(), weighted.to_string()]);
    }
    if let Some(w) = boundary_mass_warning(traj.state(traj.time().segments())) {
        ctx.manifest.warn(format!("final state: {w}"));
    }
    write_csv(
        &ctx.dir.join("trajectory_norms.csv"),
        &["t", "morrey_norm", "weighted_norm"],
        &norm_rows,
    )?;
    let diag = serde_json::json!({
        "verdict": verdict_str(d.verdict),
        "iterations": d.iterations,
        "distances": d.distances,
        "ratios": d.ratios,
        "sup_weighted_norm": d.sup_weighted_norm,
        "final_weighted_norm": d.final_weighted_norm,
        "halvings": halvings,
        "config": cfg.to_map(),
    });
    std::fs::write(
        ctx.dir.join("diagnostics.json"),
        serde_json::to_string_pretty(&diag).expect("diagnostics serialize") + "\n",
    )?;
    ctx.manifest.verdict("solve", verdict_str(d.verdict));
    ctx.manifest.verdict("iterations", d.iterations);
    println!(
        "{} after {} iteration(s), final weighted norm {:.6e}, horizon {}",
        verdict_str(d.verdict),
        d.iterations,
        d.final_weighted_norm,
        traj.time().node(traj.time().segments())
    );
    ctx.finish()?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// verification subcommands: exit 0 only when every check passes

fn cmd_verify_smoothing(out_root: &Path, echo: &str, cfg: &Config) -> Result<i32> {
    let mut study = SmoothingStudyConfig::default();
    study.grid = grid_override(cfg, study.grid)?;
    if cfg.is_set("alpha") {
        study.alphas = vec![cfg.alpha];
    }
    if cfg.is_set("s") {
        study.s_source = cfg.s;
    }
    if cfg.is_set("sigma") {
        study.sigma_target = cfg.sigma;
    }
    if cfg.is_set("p") {
        study.p = cfg.p;
    }
    if cfg.is_set("stride") {
        study.stride = cfg.stride;
    }
    if cfg.is_set("backend") {
        study.backend = cfg.operator_backend();
    }
    let rows = study_smoothing(&study)?;
    let mut ctx = RunContext::new(out_root, echo, cfg, BTreeMap::new())?;
    let mut pass = true;
    let mut csv = Vec::new();
    for r in &rows {
        let gap = (r.fitted - r.expected).abs();
        let ok = gap <= 0.05;
        pass &= ok;
        csv.push(vec![
            op_label(r.op).to_string(),
            r.alpha.to_string(),
            r.fitted.to_string(),
            r.expected.to_string(),
            gap.to_string(),
        ]);
        let name = format!("{}_{}", op_label(r.op), r.alpha);
        ctx.manifest.verdict(
            &name,
            format!("fitted {:.4}, expected {:.4}, |gap| {:.4}: {}", r.fitted, r.expected, gap,
                if ok { "pass" } else { "fail" }),
        );
        println!(
            "{:8} alpha {:.2}: fitted {:+.4}, expected {:+.4}, |gap| {:.4} {}",
            op_label(r.op),
            r.alpha,
            r.fitted,
            r.expected,
            gap,
            if ok { "pass" } else { "FAIL" }
        );
    }
    // the data-propagator slope over the heat slope recovers the order
    if let Some(heat) = rows.iter().find(|r| r.op == SmoothingOp::Heat) {
        for r in rows.iter().filter(|r| r.op == SmoothingOp::PAlpha) {
            let ratio = r.fitted / heat.fitted;
            let ok = (ratio - r.alpha).abs() <= 0.05;
            pass &= ok;
            ctx.manifest.verdict(
                &format!("ratio_{}", r.alpha),
                format!("{ratio:.4} vs order {}: {}", r.alpha, if ok { "pass" } else { "fail" }),
            );
            println!(
                "slope ratio alpha {:.2}: {ratio:.4} (want within 0.05 of the order) {}",
                r.alpha,
                if ok { "pass" } else { "FAIL" }
            );
        }
    }
    write_csv(
        &ctx.dir.join("smoothing.csv"),
        &["op", "alpha", "fitted", "expected", "abs_gap"],
        &csv,
    )?;
    ctx.manifest.verdict("verify", if pass { "pass" } else { "fail" });
    println!("verify-smoothing: {}", if pass { "PASS" } else { "FAIL" });
    ctx.finish()?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_verify_scaling(out_root: &Path, echo: &str, cfg: &Config) -> Result<i32> {
    let mut study = ScalingStudyConfig::default();
    study.base_grid = grid_override(cfg, study.base_grid)?;
    if cfg.is_set("amplitude") {
        study.amplitude = cfg.amplitude;
    }
    if cfg.is_set("t_horizon") {
        study.t_horizon = cfg.t_horizon;
    }
    if cfg.is_set("segments") {
        study.segments = cfg.segments;
    }
    if cfg.is_set("stride") {
        study.stride = cfg.stride;
    }
    let rows = study_scaling(&study)?;
    let mut ctx = RunContext::new(out_root, echo, cfg, BTreeMap::new())?;
    let mut pass = true;
    let mut csv = Vec::new();
    for r in &rows {
        let ok = r.xt_relative_error <= 0.02;
        pass &= ok;
        csv.push(vec![r.lambda.to_string(), r.xt_relative_error.to_string()]);
        ctx.manifest.verdict(
            &format!("lambda_{}", r.lambda),
            format!("relative error {:.3e}: {}", r.xt_relative_error, if ok { "pass" } else { "fail" }),
        );
        println!(
            "lambda {:>4}: weighted relative error {:.3e} {}",
            r.lambda,
            r.xt_relative_error,
            if ok { "pass" } else { "FAIL" }
        );
    }
    write_csv(&ctx.dir.join("scaling.csv"), &["lambda", "xt_relative_error"], &csv)?;
    ctx.manifest.verdict("verify", if pass { "pass" } else { "fail" });
    println!("verify-scaling: {}", if pass { "PASS" } else { "FAIL" });
    ctx.finish()?;
    Ok(if pass { 0 } else { 1 })
}

fn nearest_row(rows: &[WeakRow], target: f64) -> usize {
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (i, r) in rows.iter().enumerate() {
        let d = (r.t.ln() - target.ln()).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    best
}

fn cmd_verify_weak(out_root: &Path, echo: &str, cfg: &Config) -> Result<i32> {
    let mut study = WeakConvergenceConfig::default();
    study.grid = grid_override(cfg, study.grid)?;
    if cfg.is_set("amplitude") {
        study.smooth_amplitude = cfg.amplitude;
        study.rough_amplitude = cfg.amplitude;
    }
    if cfg.is_set("t_horizon") {
        study.t_horizon = cfg.t_horizon;
    }
    if cfg.is_set("segments") {
        study.segments = cfg.segments;
    }
    if cfg.is_set("stride") {
        study.stride = cfg.stride;
    }
    let report = study_weak_convergence(&study)?;
    let mut ctx = RunContext::new(out_root, echo, cfg, BTreeMap::new())?;
    let mut csv = Vec::new();
    for r in &report.rows {
        csv.push(vec![
            r.t.to_string(),
            r.smooth_gaps[0].to_string(),
            r.linear_gaps[0].to_string(),
            r.smooth_gaps[1].to_string(),
            r.linear_gaps[1].to_string(),
            r.smooth_gaps[2].to_string(),
            r.linear_gaps[2].to_string(),
            r.duhamel_pairing.to_string(),
        ]);
    }
    write_csv(
        &ctx.dir.join("weak_convergence.csv"),
        &[
            "t",
            "gap_narrow",
            "linear_narrow",
            "gap_mid",
            "linear_mid",
            "gap_wide",
            "linear_wide",
            "duhamel_pairing",
        ],
        &csv,
    )?;

    let mut pass = true;
    let converged = report.smooth_verdict == Verdict::Converged
        && report.rough_verdict == Verdict::Converged;
    pass &= converged;
    ctx.manifest.verdict(
        "solves",
        format!(
            "smooth {}, rough {}",
            verdict_str(report.smooth_verdict),
            verdict_str(report.rough_verdict)
        ),
    );
    println!(
        "solves: smooth {}, rough {} {}",
        verdict_str(report.smooth_verdict),
        verdict_str(report.rough_verdict),
        if converged { "pass" } else { "FAIL" }
    );

    let t = study.t_horizon;
    let big = nearest_row(&report.rows, 0.1 * t);
    let small = nearest_row(&report.rows, 0.001 * t);
    for (w, label) in ["narrow", "mid", "wide"].iter().enumerate() {
        let hi = report.rows[big].smooth_gaps[w];
        let lo = report.rows[small].smooth_gaps[w];
        let ok = lo * 10.0 <= hi;
        pass &= ok;
        ctx.manifest.verdict(
            &format!("decay_{label}"),
            format!("gap {hi:.3e} at t/10 down to {lo:.3e} at t/1000: {}", if ok { "pass" } else { "fail" }),
        );
        println!(
            "pairing gap ({label}): {hi:.3e} -> {lo:.3e}, want 10x decrease {}",
            if ok { "pass" } else { "FAIL" }
        );
    }

    let final_ok = report.final_relative_gap < 1e-3;
    pass &= final_ok;
    ctx.manifest.verdict(
        "final_relative_gap",
        format!("{:.3e}: {}", report.final_relative_gap, if final_ok { "pass" } else { "fail" }),
    );
    println!(
        "final relative gap {:.3e} (< 1e-3) {}",
        report.final_relative_gap,
        if final_ok { "pass" } else { "FAIL" }
    );

    let fit = &report.duhamel_fit;
    let slope_ok = (fit.slope - fit.expected).abs() <= 0.1;
    pass &= slope_ok;
    ctx.manifest.verdict(
        "duhamel_slope",
        format!("fitted {:.4}, expected {:.4}: {}", fit.slope, fit.expected, if slope_ok { "pass" } else { "fail" }),
    );
    println!(
        "nonlinear correction rate: fitted {:.4}, expected {:.4} (tol 0.1) {}",
        fit.slope,
        fit.expected,
        if slope_ok { "pass" } else { "FAIL" }
    );

    ctx.manifest.verdict("verify", if pass { "pass" } else { "fail" });
    println!("verify-weak-convergence: {}", if pass { "PASS" } else { "FAIL" });
    ctx.finish()?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_verify_continuity(out_root: &Path, echo: &str, cfg: &Config) -> Result<i32> {
    let mut study = ContinuityStudyConfig::default();
    study.grid = grid_override(cfg, study.grid)?;
    if cfg.is_set("amplitude") {
        study.amplitude = cfg.amplitude;
    }
    if cfg.is_set("stride") {
        study.stride = cfg.stride;
    }
    let rows = study_continuity(&study)?;
    let mut ctx = RunContext::new(out_root, echo, cfg, BTreeMap::new())?;
    let mut csv = Vec::new();
    for r in &rows {
        csv.push(vec![
            r.h.to_string(),
            r.late_diff.to_string(),
            r.early_diff.to_string(),
            r.linear_late_diff.to_string(),
        ]);
        println!(
            "h {:<8}: late {:.3e}, early {:.3e}, linear late {:.3e}",
            r.h, r.late_diff, r.early_diff, r.linear_late_diff
        );
    }
    write_csv(
        &ctx.dir.join("continuity.csv"),
        &["h", "late_diff", "early_diff", "linear_late_diff"],
        &csv,
    )?;
    // each halving of h must shrink both difference columns by >= 10%
    let mut pass = true;
    for pair in rows.windows(2) {
        pass &= pair[1].late_diff <= 0.9 * pair[0].late_diff;
        pass &= pair[1].early_diff <= 0.9 * pair[0].early_diff;
    }
    ctx.manifest.verdict("verify", if pass { "pass" } else { "fail" });
    println!("verify-continuity: {}", if pass { "PASS" } else { "FAIL" });
    ctx.finish()?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_doubly_critical(out_root: &Path, echo: &str, cfg: &Config) -> Result<i32> {
    let mut study = DoublyCriticalConfig::default();
    study.grid = grid_override(cfg, study.grid)?;
    if cfg.is_set("amplitude") {
        study.amplitude = cfg.amplitude;
    }
    if cfg.is_set("stride") {
        study.stride = cfg.stride;
    }
    let report = study_doubly_critical(&study)?;
    let mut ctx = RunContext::new(out_root, echo, cfg, BTreeMap::new())?;
    let mut csv = Vec::new();
    for &(lambda, v) in &report.surrogate {
        csv.push(vec![lambda.to_string(), v.to_string()]);
        println!("lambda {lambda:>6}: high-frequency surrogate {v:.4e}");
    }
    write_csv(&ctx.dir.join("surrogate.csv"), &["lambda", "surrogate"], &csv)?;
    let draining = report
        .surrogate
        .windows(2)
        .all(|pair| pair[1].1 < pair[0].1);
    let small_ok = report.small_lambda_verdict == Verdict::Converged;
    let pass = draining && small_ok;
    ctx.manifest.verdict("surrogate_draining", draining);
    ctx.manifest.verdict("small_lambda", verdict_str(report.small_lambda_verdict));
    ctx.manifest.verdict("large_data", verdict_str(report.large_data_verdict));
    ctx.manifest.verdict("verify", if pass { "pass" } else { "fail" });
    println!(
        "surrogate strictly decreasing: {draining}; solve at smallest lambda: {}; \
         large-data observation: {}",
        verdict_str(report.small_lambda_verdict),
        verdict_str(report.large_data_verdict)
    );
    println!("doubly-critical: {}", if pass { "PASS" } else { "FAIL" });
    ctx.finish()?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_global(out_root: &Path, echo: &str, cfg: &Config) -> Result<i32> {
    let mut study = GlobalStudyConfig::default();
    study.grid = grid_override(cfg, study.grid)?;
    if cfg.is_set("amplitude") {
        study.amplitude = cfg.amplitude;
    }
    if cfg.is_set("t_horizon") {
        study.t_horizon = cfg.t_horizon;
    }
    if cfg.is_set("segments") {
        study.segments = cfg.segments;
    }
    if cfg.is_set("seed") {
        study.seed = cfg.seed;
    }
    if cfg.is_set("stride") {
        study.stride = cfg.stride;
    }
    if cfg.is_set("max_halvings") {
        study.max_halvings = cfg.max_halvings;
    }
    let report = study_global(&study)?;
    let mut ctx = RunContext::new(out_root, echo, cfg, BTreeMap::new())?;
    let mut csv = Vec::new();
    for &(t, v) in &report.weighted_profile {
        csv.push(vec![t.to_string(), v.to_string()]);
    }
    write_csv(&ctx.dir.join("weighted_profile.csv"), &["t", "weighted_norm"], &csv)?;
    if report.amplitude < study.amplitude {
        ctx.manifest.warn(format!(
            "amplitude halved from {} to {} to meet the smallness target",
            study.amplitude, report.amplitude
        ));
    }
    let adm = &report.admissibility;
    ctx.manifest.verdict(
        "p_window",
        format!("({:.4}, {:.4})", adm.p_window.0, adm.p_window.1),
    );
    ctx.manifest.verdict("amplitude", report.amplitude);
    ctx.manifest.verdict("data_norm", report.data_norm);
    ctx.manifest.verdict("solve", verdict_str(report.verdict));
    ctx.manifest.verdict("bounded", report.bounded);
    let pass = report.verdict == Verdict::Converged && report.bounded;
    ctx.manifest.verdict("verify", if pass { "pass" } else { "fail" });
    let peak = report
        .weighted_profile
        .iter()
        .cloned()
        .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let last = report.weighted_profile.last().copied().unwrap_or((0.0, 0.0));
    println!(
        "admissible p window ({:.3}, {:.3}); amplitude {}, data norm {:.4e}",
        adm.p_window.0, adm.p_window.1, report.amplitude, report.data_norm
    );
    println!(
        "{}; weighted profile peaks at {:.3e} (t = {:.3e}) and ends at {:.3e} (t = {:.3e}); \
         bounded: {}",
        verdict_str(report.verdict),
        peak.1,
        peak.0,
        last.1,
        last.0,
        report.bounded
    );
    println!("global: {}", if pass { "PASS" } else { "FAIL" });
    ctx.finish()?;
    Ok(if pass { 0 } else { 1 })
}

fn cmd_plot(run_dir: &Path) -> Result<i32> {
    if !run_dir.is_dir() {
        return Err(Error::Usage(format!("{} is not a directory", run_dir.display())));
    }
    let (written, skipped) = plot::render_dir(run_dir)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    for s in &skipped {
        eprintln!("skipped {s}");
    }
    println!("{} chart(s)", written.len());
    Ok(0)
}
