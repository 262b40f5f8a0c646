mod config;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ddenf::ddesim::{default_dt, integrate, measure_oscillation, History};
use ddenf::linsys::{adjoint_vector, spectrum_report, AdjointVector, DelayLinearOperator, SpectrumSpec};
use ddenf::nfengine::{hopf_oracle, reduce_to_normal_form, DDEModel, NormalFormResult};
use ddenf::polyring::{Poly, VariableSpace, VectorPoly};
use ddenf::realizer::{
    double_hopf_one_delay_analysis, realize, realize_unfolding, scan_tau, RealizationProblem, COND_LIMIT,
    DET_THRESHOLD,
};
use ddenf::symmetry::dims;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use config::{ScenarioConfig, TauConfig};

#[derive(Parser, Debug)]
#[command(name = "ddenf", version, about = "Normal forms and realization for scalar delay equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report and CSV tables; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the random delay scan.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Forward-check tolerance on radial coefficients.
    #[arg(long, global = true, default_value_t = 1e-8)]
    forward_tol: f64,
    /// Tolerance of the oracle comparison.
    #[arg(long, global = true, default_value_t = 1e-8)]
    oracle_tol: f64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Design the linear part and verify its spectrum.
    Design,
    /// Dimension counts of the realization problem.
    Dims,
    /// Scan delay vectors for invertible realizability matrices.
    Scan,
    /// Realize a target radial field.
    Realize,
    /// Reduce an explicit model to normal form.
    Reduce,
    /// One-delay double Hopf restriction analysis.
    Restrict,
    /// Integrate an explicit or realized model.
    Simulate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Design => "design",
            Command::Dims => "dims",
            Command::Scan => "scan",
            Command::Realize => "realize",
            Command::Reduce => "reduce",
            Command::Restrict => "restrict",
            Command::Simulate => "simulate",
        }
    }
}

#[derive(Serialize)]
struct Tolerances {
    forward: f64,
    oracle: f64,
    simulate_rel: f64,
    det_threshold: f64,
    cond_limit: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a ScenarioConfig,
    tolerances: Tolerances,
    passed: bool,
    /// CSV files written next to the report, with their column layout.
    tables: Vec<Value>,
    result: Value,
}

struct Outcome {
    passed: bool,
    result: Value,
    tables: Vec<(String, String, String)>,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Self { passed: true, result, tables: vec![] }
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: &'a ScenarioConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    let Some(path) = &cli.config else { bail!("--config is required") };
    let cfg = ScenarioConfig::load(path)?;
    let ctx = Ctx { cli, cfg: &cfg };
    let outcome = match cli.command {
        Command::Design => design(&ctx)?,
        Command::Dims => dims_cmd(&ctx)?,
        Command::Scan => scan(&ctx)?,
        Command::Realize => realize_cmd(&ctx)?,
        Command::Reduce => reduce(&ctx)?,
        Command::Restrict => restrict(&ctx)?,
        Command::Simulate => simulate(&ctx)?,
    };
    emit(&ctx, outcome)
}

fn emit(ctx: &Ctx, outcome: Outcome) -> Result<bool> {
    let name = ctx.cli.command.name();
    let report = Report {
        tool: "ddenf",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        seed: ctx.cli.seed,
        config: ctx.cfg,
        tolerances: Tolerances {
            forward: ctx.cli.forward_tol,
            oracle: ctx.cli.oracle_tol,
            simulate_rel: ctx.cfg.verify.simulate_rel_tol,
            det_threshold: DET_THRESHOLD,
            cond_limit: COND_LIMIT,
        },
        passed: outcome.passed,
        tables: outcome.tables.iter().map(|(f, cols, _)| json!({ "file": f, "columns": cols })).collect(),
        result: outcome.result,
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    let out = ctx.cli.out.clone().or_else(|| ctx.cfg.output.as_ref().map(PathBuf::from));
    match out {
        Some(dir) => {
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            write(&dir.join(format!("{name}.json")), &text)?;
            for (file, _, body) in &outcome.tables {
                write(&dir.join(file), body)?;
            }
            println!("{name}: {} -> {}", if report.passed { "passed" } else { "FAILED" }, dir.display());
        }
        None => print!("{text}"),
    }
    Ok(report.passed)
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn core<T, E: Into<ddenf::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| anyhow::Error::new(e.into()))
}

struct Setup {
    spec: SpectrumSpec,
    op: DelayLinearOperator,
    adj: AdjointVector,
}

fn setup(cfg: &ScenarioConfig) -> Result<Setup> {
    let spec = cfg.spectrum()?;
    let op = cfg.operator(&spec)?;
    let adj = core(adjoint_vector(&op, &spec))?;
    Ok(Setup { spec, op, adj })
}

fn poly_json(p: &Poly) -> Value {
    VectorPoly::from_components(p.space, vec![p.chop(1e-15)]).expect("one component").to_json()
}

fn model_json(m: &DDEModel) -> Value {
    json!({
        "linear": m.linear,
        "delays": m.delays,
        "params": m.s,
        "eta": poly_json(&m.eta),
        "xi": poly_json(&m.xi),
    })
}

fn design(ctx: &Ctx) -> Result<Outcome> {
    let spec = ctx.cfg.spectrum()?;
    let op = ctx.cfg.operator_unverified(&spec)?;
    let rep = spectrum_report(&op, &spec, None);
    let adj = if rep.passed { Some(core(adjoint_vector(&op, &spec))?) } else { None };
    Ok(Outcome {
        passed: rep.passed,
        result: json!({ "operator": op, "spectrum": rep, "adjoint": adj }),
        tables: vec![],
    })
}

fn dims_cmd(ctx: &Ctx) -> Result<Outcome> {
    let spec = ctx.cfg.spectrum()?;
    let delays = ctx.cfg.dims_delays.unwrap_or(spec.d());
    let rep = core(dims(&spec, ctx.cfg.order, ctx.cfg.params, delays))?;
    Ok(Outcome::ok(serde_json::to_value(rep)?))
}

fn scan(ctx: &Ctx) -> Result<Outcome> {
    let st = setup(ctx.cfg)?;
    let sc = &ctx.cfg.scan;
    let res = core(scan_tau(&st.spec, &st.adj, ctx.cfg.order, ctx.cfg.params, sc.sampler, sc.samples, ctx.cli.seed))?;
    let csv = res.to_csv();
    let columns = csv.lines().next().unwrap_or_default().to_string();
    Ok(Outcome {
        passed: true,
        result: json!({
            "best_tau": res.best_tau,
            "best_score": res.best_score,
            "fraction": res.fraction,
            "threshold": res.threshold,
            "samples": res.samples.len(),
        }),
        tables: vec![("scan.csv".into(), columns, csv)],
    })
}

/// Explicit delays, or the best delay vector of a seeded scan.
fn resolve_tau(ctx: &Ctx, st: &Setup) -> Result<(Vec<f64>, Value)> {
    match &ctx.cfg.tau {
        TauConfig::Explicit(t) => Ok((t.clone(), Value::Null)),
        TauConfig::Keyword(k) if k == "scan" => {
            let sc = &ctx.cfg.scan;
            let res = core(scan_tau(
                &st.spec,
                &st.adj,
                ctx.cfg.order,
                ctx.cfg.params,
                sc.sampler,
                sc.samples,
                ctx.cli.seed,
            ))?;
            let summary = json!({ "best_score": res.best_score, "fraction": res.fraction, "samples": res.samples.len() });
            Ok((res.best_tau, summary))
        }
        TauConfig::Keyword(k) => bail!("tau must be a list of delays or \"scan\", got {k:?}"),
    }
}

/// Model given by `delays` and `nonlinearity` in the config.
fn explicit_model(cfg: &ScenarioConfig, op: &DelayLinearOperator) -> Result<Option<DDEModel>> {
    if cfg.nonlinearity.is_empty() {
        return Ok(None);
    }
    let space = VariableSpace::delayed(cfg.delays.len(), cfg.params);
    let f = ScenarioConfig::delayed_poly(&cfg.nonlinearity, space)?;
    let m = core(DDEModel::new(op.clone(), cfg.delays.clone(), f.param_free(), f.param_vanishing(), cfg.params))?;
    Ok(Some(m))
}

fn realize_cmd(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let st = setup(cfg)?;
    let target = cfg.target(&st.spec)?;
    let tol = if cfg.verify.forward_check { ctx.cli.forward_tol } else { f64::INFINITY };
    let mut result = serde_json::Map::new();
    let (model, forward, forward_error) = match explicit_model(cfg, &st.op)? {
        // Unfold an existing model: only the parameter-dependent part is solved for.
        Some(base) => {
            let unf = core(realize_unfolding(&base, &st.spec, &st.adj, &target, cfg.order, tol))?;
            let cond: Vec<Value> = unf
                .param_blocks
                .iter()
                .map(|b| json!({ "order": b.order, "det": b.det, "normalized_det": b.normalized_det, "cond": b.cond }))
                .collect();
            result.insert("mode".into(), json!("unfolding"));
            result.insert("orders".into(), json!(cond));
            (unf.model, unf.forward, unf.forward_error)
        }
        None => {
            let (tau, scan) = resolve_tau(ctx, &st)?;
            let pinned = cfg.pinned(VariableSpace::delayed(tau.len(), cfg.params))?;
            let problem = RealizationProblem {
                spec: st.spec.clone(),
                linear: st.op.clone(),
                adj: st.adj.clone(),
                tau,
                ell: cfg.order,
                s: cfg.params,
                target: target.clone(),
                pinned,
                tol,
            };
            let res = core(realize(&problem))?;
            result.insert("mode".into(), json!("realize"));
            result.insert("scan".into(), scan);
            result.insert("orders".into(), serde_json::to_value(&res.orders)?);
            (res.model, res.forward, res.forward_error)
        }
    };
    let mut passed = true;
    result.insert("model".into(), model_json(&model));
    result.insert("normal_form".into(), serde_json::to_value(forward.report())?);
    result.insert("forward_error".into(), json!(forward_error));
    result.insert("forward_check".into(), json!(cfg.verify.forward_check.then_some(forward_error <= tol)));
    if cfg.verify.oracle {
        let (v, ok) = oracle_check(&model, &st, &forward, ctx.cli.oracle_tol)?;
        passed &= ok;
        result.insert("oracle".into(), v);
    }
    let mut tables = vec![];
    if !cfg.verify.simulate_mu.is_empty() {
        let mut runs = vec![];
        for (k, mu) in cfg.verify.simulate_mu.iter().enumerate() {
            let (v, ok, csv) = simulate_run(ctx, &model, &st.spec, Some(&forward), mu)?;
            passed &= ok;
            runs.push(v);
            tables.push((format!("realize_sim_{k}.csv"), "t,z".to_string(), csv));
        }
        result.insert("simulations".into(), json!(runs));
    }
    Ok(Outcome { passed, result: Value::Object(result), tables })
}

/// Compares the cubic radial coefficient with the closed-form Hopf route
/// when the model is in the oracle's scope.
fn oracle_check(model: &DDEModel, st: &Setup, nf: &NormalFormResult, tol: f64) -> Result<(Value, bool)> {
    if st.spec.p() != 1 || st.spec.includes_zero || nf.ell < 3 || model.eta.degree().unwrap_or(0) > 3 {
        return Ok((json!({ "applicable": false }), true));
    }
    // The oracle sees the parameter-free slice.
    let slice = core(DDEModel::new(model.linear.clone(), model.delays.clone(), model.eta.clone(), Poly::zero(model.space()), model.s))?;
    let h = core(hopf_oracle(&slice, &st.spec, &st.adj))?;
    let mut e = vec![0u32; nf.radial.space.nvars()];
    e[0] = 3;
    let a = nf.radial_coeff(0, &e);
    let diff = (h.c1.re - a).abs();
    let ok = diff <= tol;
    Ok((json!({ "applicable": true, "c1": h.c1, "cubic": a, "difference": diff, "passed": ok }), ok))
}

/// Smallest positive root of `R(rho, mu) / rho` for a single Hopf pair.
fn predicted_radius(nf: &NormalFormResult, mu: &[f64]) -> Option<f64> {
    let comp = &nf.radial.components[0];
    let g = |rho: f64| {
        let mut pt = vec![Complex64::new(rho, 0.0)];
        pt.extend(mu.iter().map(|&m| Complex64::new(m, 0.0)));
        comp.eval(&pt).re / rho
    };
    let grid: Vec<f64> = (1..=4000).map(|k| k as f64 * 1e-3).collect();
    let mut prev = (grid[0], g(grid[0]));
    for &x in &grid[1..] {
        let gx = g(x);
        if prev.1.signum() != gx.signum() {
            let (mut lo, mut hi, glo) = (prev.0, x, prev.1);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == glo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev = (x, gx);
    }
    None
}

/// One simulation; compared with the predicted radius when the spectrum is
/// a single Hopf pair. Returns `(summary, passed, csv)`.
fn simulate_run(
    ctx: &Ctx,
    model: &DDEModel,
    spec: &SpectrumSpec,
    nf: Option<&NormalFormResult>,
    mu: &[f64],
) -> Result<(Value, bool, String)> {
    let sim = &ctx.cfg.simulate;
    let single_hopf = spec.p() == 1 && !spec.includes_zero;
    let predicted = nf.filter(|_| single_hopf).and_then(|nf| predicted_radius(nf, mu));
    let omega = spec.omegas.first().copied().unwrap_or(PI / 2.0);
    // z = 2 rho cos(theta) on the center manifold.
    let start = predicted.map(|r| 2.0 * r).unwrap_or(sim.history_amplitude);
    let dt = sim.dt.unwrap_or_else(|| default_dt(model));
    let traj = core(integrate(model, mu, History::function(move |t| start * (omega * t).cos()), sim.t_end, dt))?;
    let osc = measure_oscillation(&traj, sim.discard_fraction);
    let rho = osc.amplitude / 2.0;
    let tol = ctx.cfg.verify.simulate_rel_tol;
    let (checked, ok) = match (nf, single_hopf, predicted) {
        (Some(_), true, Some(p)) => (true, !traj.overflow && ((rho - p) / p).abs() <= tol),
        _ => (false, !traj.overflow),
    };
    let v = json!({
        "mu": mu,
        "dt": dt,
        "t_end": sim.t_end,
        "amplitude": osc.amplitude,
        "frequency": osc.frequency,
        "extrema": osc.extrema,
        "rho": rho,
        "predicted_rho": predicted,
        "checked": checked,
        "overflow": traj.overflow,
        "passed": ok,
    });
    Ok((v, ok, traj.to_csv()))
}

fn reduce(ctx: &Ctx) -> Result<Outcome> {
    let st = setup(ctx.cfg)?;
    let model = match explicit_model(ctx.cfg, &st.op)? {
        Some(m) => m,
        None => DDEModel::linear_only(st.op.clone(), ctx.cfg.delays.clone(), ctx.cfg.params),
    };
    let nf = core(reduce_to_normal_form(&model, &st.spec, &st.adj, ctx.cfg.order))?;
    let mut passed = true;
    let mut result = json!({ "model": model_json(&model), "normal_form": nf.report() });
    if ctx.cfg.verify.oracle {
        let (v, ok) = oracle_check(&model, &st, &nf, ctx.cli.oracle_tol)?;
        passed &= ok;
        result["oracle"] = v;
    }
    Ok(Outcome { passed, result, tables: vec![] })
}

fn restrict(ctx: &Ctx) -> Result<Outcome> {
    let st = setup(ctx.cfg)?;
    let Some(rc) = &ctx.cfg.restrict else { bail!("config needs a `restrict` section") };
    let analysis = core(double_hopf_one_delay_analysis(&st.spec, &st.op, &st.adj, rc.tau, rc.grid))?;
    let dims = core(dims(&st.spec, ctx.cfg.order, 0, 1))?;
    Ok(Outcome::ok(json!({ "analysis": analysis, "dims": dims })))
}

fn simulate(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let st = setup(cfg)?;
    let (model, nf) = match explicit_model(cfg, &st.op)? {
        Some(m) => (m, None),
        None if !cfg.target.is_empty() => {
            let (tau, _) = resolve_tau(ctx, &st)?;
            let problem = RealizationProblem {
                spec: st.spec.clone(),
                linear: st.op.clone(),
                adj: st.adj.clone(),
                pinned: cfg.pinned(VariableSpace::delayed(tau.len(), cfg.params))?,
                tau,
                ell: cfg.order,
                s: cfg.params,
                target: cfg.target(&st.spec)?,
                tol: ctx.cli.forward_tol,
            };
            let res = core(realize(&problem))?;
            (res.model, Some(res.forward))
        }
        None => bail!("nothing to simulate: the model has no nonlinearity and no target to realize"),
    };
    let mus: Vec<Vec<f64>> = if cfg.simulate.mu.is_empty() { vec![vec![0.0; cfg.params]] } else { cfg.simulate.mu.clone() };
    let mut runs = vec![];
    let mut tables = vec![];
    let mut passed = true;
    for (k, mu) in mus.iter().enumerate() {
        let (v, ok, csv) = simulate_run(ctx, &model, &st.spec, nf.as_ref(), mu)?;
        passed &= ok;
        runs.push(v);
        tables.push((format!("simulate_{k}.csv"), "t,z".to_string(), csv));
    }
    Ok(Outcome {
        passed,
        result: json!({ "model": model_json(&model), "runs": runs }),
        tables,
    })
}
