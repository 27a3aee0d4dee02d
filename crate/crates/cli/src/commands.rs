use std::path::PathBuf;
use std::time::Instant;

use mfhj_core::bipartite::{
    coupled_fixed_point, finite_size_study, linearized_critical_beta, minmax_solve, partner_size,
    trial_curvature, BipartiteParams,
};
use mfhj_core::checks::run_checks;
use mfhj_core::finite_n::{convergence_study, ConvergenceReport};
use mfhj_core::shock::{characteristics, characteristics_table, detect_shock};
use mfhj_core::single_party::{critical_time, hopf_lax, ModelPoint};
use mfhj_core::sweep::{bipartite_sweep, single_party_sweep, BipartiteSweepSpec};
use mfhj_core::{Error, Symmetry};
use serde_json::{json, Value};

use crate::config::{FileConfig, ResolvedMeasure, Resolver};
use crate::output::{json_text, write_file, Run};
use crate::{Cli, Command};

#[derive(Debug)]
pub enum Failure {
    Validation(Vec<String>),
    Solver(String),
    Invariant(String),
    Io(anyhow::Error),
}

impl Failure {
    pub fn report(&self) -> String {
        let v = match self {
            Failure::Validation(p) => json!({"error": "validation", "problems": p}),
            Failure::Solver(m) => json!({"error": "solver", "message": m}),
            Failure::Invariant(m) => json!({"error": "invariant", "message": m}),
            Failure::Io(e) => json!({"error": "io", "message": format!("{e:#}")}),
        };
        v.to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. }
            | Error::CoupledNonConvergence { .. }
            | Error::Confinement(_)
            | Error::Quadrature(_) => Failure::Solver(e.to_string()),
            _ => Failure::Validation(vec![e.to_string()]),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

struct Context {
    resolver: Resolver,
    file: FileConfig,
    symmetry: Symmetry,
    counting: bool,
    out: Option<PathBuf>,
    workers: usize,
}

impl Context {
    /// Stop with every collected problem, or print the warnings and go on.
    fn validated(&mut self) -> Outcome {
        if !self.resolver.problems.is_empty() {
            return Err(Failure::Validation(std::mem::take(
                &mut self.resolver.problems,
            )));
        }
        for w in self.resolver.warnings.drain(..) {
            eprintln!("warning: {w}");
        }
        Ok(())
    }

    fn run(&self, command: &'static str, config: Value) -> Run {
        Run {
            command,
            config,
            workers: self.workers,
            started: Instant::now(),
        }
    }

    fn positive_all(&mut self, name: &str, values: &[f64]) {
        if let Some(v) = values.iter().find(|v| **v <= 0.0) {
            self.resolver
                .problems
                .push(format!("--{name} must be positive, got {v}"));
        }
    }
}

fn worker_count(r: &mut Resolver, flag: Option<usize>, file: Option<usize>) -> usize {
    let env = std::env::var("MFHJ_WORKERS").ok().map(|v| {
        v.trim().parse::<usize>().unwrap_or_else(|_| {
            r.problems.push(format!(
                "MFHJ_WORKERS must be a positive integer, got '{v}'"
            ));
            1
        })
    });
    let n = env.or(flag).or(file).unwrap_or(0);
    if n == 0 && (env.is_some() || flag.is_some() || file.is_some()) {
        r.problems.push("worker count must be at least 1".into());
    }
    n
}

pub fn execute(cli: Cli) -> Outcome {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(|e| Failure::Validation(vec![e]))?,
        None => FileConfig::default(),
    };
    let mut resolver = Resolver::default();
    let symmetrize = resolver.flag("symmetrize", cli.symmetrize, file.symmetrize);
    let counting = resolver.flag("counting", cli.counting, file.counting);
    let out = resolver.path("out", cli.out.clone(), file.out.clone());
    let workers = worker_count(&mut resolver, cli.workers, file.workers);
    if workers > 0 {
        // a pool built twice in one process keeps its first size
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    let mut ctx = Context {
        resolver,
        file,
        symmetry: if symmetrize {
            Symmetry::Symmetrize
        } else {
            Symmetry::Strict
        },
        counting,
        out,
        workers: rayon::current_num_threads(),
    };
    match cli.command {
        Command::Solve(a) => solve(&mut ctx, a),
        Command::Sweep(a) => sweep(&mut ctx, a),
        Command::Critical(a) => critical(&mut ctx, a),
        Command::Shock(a) => shock(&mut ctx, a),
        Command::Finiten(a) => finiten(&mut ctx, a),
        Command::Bipartite(a) => bipartite(&mut ctx, a),
        Command::BipartiteSweep(a) => bipartite_sweep_cmd(&mut ctx, a),
        Command::BipartiteFiniten(a) => bipartite_finiten(&mut ctx, a),
        Command::Check(a) => check(&mut ctx, a),
    }
}

fn measure(
    ctx: &mut Context,
    flag: Option<String>,
    default: Option<&str>,
) -> Option<ResolvedMeasure> {
    let file = ctx.file.measure.clone();
    let sym = ctx.symmetry;
    ctx.resolver.measure("measure", flag, file, default, sym)
}

fn party_measures(
    ctx: &mut Context,
    m: crate::PartyMeasures,
) -> (Option<ResolvedMeasure>, Option<ResolvedMeasure>) {
    let sym = ctx.symmetry;
    let fs = ctx.file.measure_sigma.clone();
    let ft = ctx.file.measure_tau.clone();
    let s = ctx.resolver.measure(
        "measure-sigma",
        m.measure_sigma,
        fs,
        Some("dichotomic"),
        sym,
    );
    let t = ctx
        .resolver
        .measure("measure-tau", m.measure_tau, ft, Some("dichotomic"), sym);
    (s, t)
}

fn solve(ctx: &mut Context, a: crate::SolveArgs) -> Outcome {
    let m = measure(ctx, a.measure, None);
    let beta = ctx
        .resolver
        .value("beta", a.beta, ctx.file.beta.clone(), None);
    let h = ctx.resolver.value("h", a.h, ctx.file.h.clone(), Some(0.0));
    ctx.positive_all("beta", &[beta]);
    ctx.validated()?;
    let m = m.expect("validated");
    let sol = hopf_lax(&m.measure, ModelPoint::thermodynamic(beta, h)?)?;
    let shift = if ctx.counting {
        m.measure.counting_constant()
    } else {
        0.0
    };
    let config = json!({"measure": m.spec, "beta": beta, "h": h, "counting": ctx.counting});
    let record = json!({
        "measure": m.spec,
        "beta": beta,
        "h": h,
        "x": sol.point.x,
        "t": sol.point.t,
        "counting": ctx.counting,
        "magnetization": sol.magnetization_m,
        "pressure": sol.pressure_a + shift,
        "free_energy": sol.free_energy_f - shift / beta,
        "action_phi": sol.action_phi,
        "minimizer_y": sol.minimizer_y,
        "branch_count": sol.branch_count,
        "other_branch": sol.other_branch,
        "residual": sol.residual,
    });
    ctx.run("solve", config)
        .emit(ctx.out.as_deref(), &json_text(&record))?;
    Ok(())
}

fn sweep(ctx: &mut Context, a: crate::SweepArgs) -> Outcome {
    let m = measure(ctx, a.measure, Some("dichotomic"));
    let betas = ctx
        .resolver
        .grid("beta", a.beta, ctx.file.beta.clone(), None);
    let hs = ctx.resolver.grid("h", a.h, ctx.file.h.clone(), Some("0"));
    ctx.positive_all("beta", &betas);
    ctx.validated()?;
    let m = m.expect("validated");
    let grid = single_party_sweep(&m.measure, &betas, &hs, ctx.counting)?;
    let config = json!({"measure": m.spec, "beta": betas, "h": hs, "counting": ctx.counting});
    ctx.run("sweep", config)
        .emit(ctx.out.as_deref(), &grid.to_csv())?;
    Ok(())
}

fn critical(ctx: &mut Context, a: crate::MeasureOnly) -> Outcome {
    let m = measure(ctx, a.measure, None);
    ctx.validated()?;
    let m = m.expect("validated");
    let c = critical_time(&m.measure);
    if c.first_order_candidate {
        eprintln!(
            "warning: first crossing time {} differs from 1/variance {}",
            c.t_c, c.curvature_t_c
        );
    }
    let record = json!({
        "measure": m.spec,
        "t_c": c.t_c,
        "curvature_t_c": c.curvature_t_c,
        "sup_slope": c.sup_slope,
        "first_order_candidate": c.first_order_candidate,
        "variance": m.measure.variance(),
    });
    ctx.run("critical", json!({"measure": m.spec}))
        .emit(ctx.out.as_deref(), &json_text(&record))?;
    Ok(())
}

fn shock(ctx: &mut Context, a: crate::ShockArgs) -> Outcome {
    let m = measure(ctx, a.measure, None);
    let ts = ctx.resolver.grid("t", a.t, ctx.file.t.clone(), None);
    let x0s = ctx
        .resolver
        .grid("x0", a.x0, ctx.file.x0.clone(), Some("0.05:3:0.05"));
    let chars_path = ctx.resolver.path(
        "characteristics",
        a.characteristics,
        ctx.file.characteristics.clone(),
    );
    ctx.positive_all("t", &ts);
    ctx.validated()?;
    let m = m.expect("validated");
    let report = detect_shock(&m.measure, &ts)?;
    let lines = characteristics(&m.measure, &x0s)?;
    let config = json!({"measure": m.spec, "t": ts, "x0": x0s});
    let run = ctx.run("shock", config);
    run.emit(ctx.out.as_deref(), &report.to_csv())?;
    let chars_path = chars_path.or_else(|| {
        ctx.out.as_ref().map(|o| {
            let mut name = o.as_os_str().to_owned();
            name.push(".characteristics.dat");
            PathBuf::from(name)
        })
    });
    match chars_path {
        Some(p) => write_file(&p, &characteristics_table(&lines))?,
        None => {
            eprintln!("note: pass --out or --characteristics to write the characteristics table")
        }
    }
    let bad_rh = report
        .supercritical()
        .filter(|r| r.rh_residual > 1e-7)
        .count();
    if bad_rh > 0 || report.entropy_violations > 0 {
        return Err(Failure::Invariant(format!(
            "{bad_rh} jump-symmetry violations, {} entropy violations",
            report.entropy_violations
        )));
    }
    Ok(())
}

fn finiten(ctx: &mut Context, a: crate::FiniteArgs) -> Outcome {
    let m = measure(ctx, a.measure, None);
    let x = ctx.resolver.value("x", a.x, ctx.file.x.clone(), None);
    let t = ctx.resolver.value("t", a.t, ctx.file.t.clone(), None);
    let ns = ctx.resolver.sizes("n", a.n, ctx.file.n.clone(), None);
    let summary_path = ctx
        .resolver
        .path("summary", a.summary, ctx.file.summary.clone());
    ctx.positive_all("t", &[t]);
    ctx.resolver
        .require(ns.len() >= 4, "--n needs at least 4 sizes");
    ctx.validated()?;
    let m = m.expect("validated");
    let r = convergence_study(&m.measure, ModelPoint::new(x, t)?, &ns)?;
    let config = json!({"measure": m.spec, "x": x, "t": t, "n": ns});
    ctx.run("finiten", config)
        .emit(ctx.out.as_deref(), &r.to_csv())?;
    let summary = json!({
        "x": x,
        "t": t,
        "phi_limit": r.phi_limit,
        "m_limit": r.m_limit,
        "fitted_slope_phi": r.fitted_slope_phi,
        "fitted_slope_u": r.fitted_slope_u,
        "spread_n_err_phi": ConvergenceReport::scaled_spread(&r.errors_phi, &r.n_values, 1.0),
        "spread_sqrt_n_err_u": ConvergenceReport::scaled_spread(&r.errors_u, &r.n_values, 0.5),
    });
    match summary_path {
        Some(p) => write_file(&p, &json_text(&summary))?,
        None => eprintln!("{}", summary),
    }
    Ok(())
}

struct BipartiteInputs {
    sigma: ResolvedMeasure,
    tau: ResolvedMeasure,
    h1: f64,
    h2: f64,
}

fn bipartite_inputs(
    ctx: &mut Context,
    measures: crate::PartyMeasures,
    h1: Option<String>,
    h2: Option<String>,
) -> (Option<ResolvedMeasure>, Option<ResolvedMeasure>, f64, f64) {
    let (s, t) = party_measures(ctx, measures);
    let h1 = ctx.resolver.value("h1", h1, ctx.file.h1.clone(), Some(0.0));
    let h2 = ctx.resolver.value("h2", h2, ctx.file.h2.clone(), Some(0.0));
    (s, t, h1, h2)
}

fn finish_inputs(
    ctx: &mut Context,
    parts: (Option<ResolvedMeasure>, Option<ResolvedMeasure>, f64, f64),
) -> Result<BipartiteInputs, Failure> {
    ctx.validated()?;
    let (s, t, h1, h2) = parts;
    Ok(BipartiteInputs {
        sigma: s.expect("validated"),
        tau: t.expect("validated"),
        h1,
        h2,
    })
}

fn bipartite(ctx: &mut Context, a: crate::BipartiteArgs) -> Outcome {
    let parts = bipartite_inputs(ctx, a.measures, a.h1, a.h2);
    let beta = ctx
        .resolver
        .value("beta", a.beta, ctx.file.beta.clone(), None);
    let alpha = ctx
        .resolver
        .value("alpha", a.alpha, ctx.file.alpha.clone(), Some(1.0));
    let method = a
        .method
        .or(ctx.file.method.clone())
        .unwrap_or_else(|| "fixed-point".into());
    ctx.positive_all("beta", &[beta]);
    ctx.resolver.require(
        alpha >= 0.0,
        format!("--alpha must be nonnegative, got {alpha}"),
    );
    ctx.resolver.require(
        method == "fixed-point" || method == "minmax",
        format!("--method must be fixed-point or minmax, got '{method}'"),
    );
    let inp = finish_inputs(ctx, parts)?;
    let p = BipartiteParams::new(
        beta,
        alpha,
        inp.h1,
        inp.h2,
        inp.sigma.measure.clone(),
        inp.tau.measure.clone(),
    )?;
    let mut s = if method == "minmax" {
        minmax_solve(&p)?
    } else {
        coupled_fixed_point(&p, (0.0, 0.0))?
    };
    let curv = trial_curvature(&p, s.m_tilde, s.n_tilde);
    if ctx.counting {
        s = s.with_counting(&p);
    }
    let config = json!({
        "measure_sigma": inp.sigma.spec, "measure_tau": inp.tau.spec,
        "beta": beta, "alpha": alpha, "h1": inp.h1, "h2": inp.h2,
        "method": method, "counting": ctx.counting,
    });
    let record = json!({
        "beta": beta,
        "alpha": alpha,
        "h1": inp.h1,
        "h2": inp.h2,
        "method": method,
        "counting": ctx.counting,
        "solution": s,
        "linearized_critical_beta": linearized_critical_beta(&p.sigma, &p.tau, alpha),
        "trial_curvature": curv,
    });
    ctx.run("bipartite", config)
        .emit(ctx.out.as_deref(), &json_text(&record))?;
    Ok(())
}

fn bipartite_sweep_cmd(ctx: &mut Context, a: crate::BipartiteSweepArgs) -> Outcome {
    let parts = bipartite_inputs(ctx, a.measures, a.h1, a.h2);
    let betas = ctx
        .resolver
        .grid("beta", a.beta, ctx.file.beta.clone(), None);
    let alphas = ctx
        .resolver
        .grid("alpha", a.alpha, ctx.file.alpha.clone(), Some("1"));
    ctx.positive_all("beta", &betas);
    if let Some(v) = alphas.iter().find(|v| **v < 0.0) {
        ctx.resolver
            .problems
            .push(format!("--alpha must be nonnegative, got {v}"));
    }
    let inp = finish_inputs(ctx, parts)?;
    let spec = BipartiteSweepSpec {
        sigma: &inp.sigma.measure,
        tau: &inp.tau.measure,
        h1: inp.h1,
        h2: inp.h2,
        counting: ctx.counting,
    };
    let grid = bipartite_sweep(spec, &betas, &alphas)?;
    let config = json!({
        "measure_sigma": inp.sigma.spec, "measure_tau": inp.tau.spec,
        "beta": betas, "alpha": alphas, "h1": inp.h1, "h2": inp.h2, "counting": ctx.counting,
    });
    ctx.run("bipartite-sweep", config)
        .emit(ctx.out.as_deref(), &grid.to_csv())?;
    Ok(())
}

fn bipartite_finiten(ctx: &mut Context, a: crate::BipartiteFiniteArgs) -> Outcome {
    let parts = bipartite_inputs(ctx, a.measures, a.h1, a.h2);
    let beta = ctx
        .resolver
        .value("beta", a.beta, ctx.file.beta.clone(), None);
    let alpha = ctx
        .resolver
        .value("alpha", a.alpha, ctx.file.alpha.clone(), Some(1.0));
    let n1s = ctx.resolver.sizes("n1", a.n1, ctx.file.n1.clone(), None);
    ctx.positive_all("beta", &[beta]);
    ctx.resolver.require(
        alpha >= 0.0,
        format!("--alpha must be nonnegative, got {alpha}"),
    );
    let mut sizes = Vec::new();
    for &n1 in &n1s {
        match partner_size(alpha, n1) {
            Ok(n2) => sizes.push((n1, n2)),
            Err(e) => ctx.resolver.problems.push(format!("--n1 {n1}: {e}")),
        }
    }
    let inp = finish_inputs(ctx, parts)?;
    let p = BipartiteParams::new(
        beta,
        alpha,
        inp.h1,
        inp.h2,
        inp.sigma.measure.clone(),
        inp.tau.measure.clone(),
    )?;
    let study = finite_size_study(&p, &sizes)?;
    let config = json!({
        "measure_sigma": inp.sigma.spec, "measure_tau": inp.tau.spec,
        "beta": beta, "alpha": alpha, "h1": inp.h1, "h2": inp.h2, "n1": n1s,
    });
    ctx.run("bipartite-finiten", config)
        .emit(ctx.out.as_deref(), &study.to_csv())?;
    Ok(())
}

fn check(ctx: &mut Context, a: crate::CheckArgs) -> Outcome {
    let quick = ctx.resolver.flag("quick", a.quick, ctx.file.quick);
    ctx.validated()?;
    let report = run_checks(quick)?;
    ctx.run("check", json!({"quick": quick}))
        .emit(ctx.out.as_deref(), &json_text(&report))?;
    let failed: Vec<&str> = report
        .results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}
