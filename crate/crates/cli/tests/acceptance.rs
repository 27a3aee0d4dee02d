//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mfhj_core::bipartite::{
    coupled_fixed_point, detect_bifurcation_beta, exact_bipartite_pressure, minmax_solve,
    minmax_trial, BipartiteParams,
};
use mfhj_core::finite_n::{convergence_study, lemma1_check, phi_n_quadrature};
use mfhj_core::shock::entropy_scan;
use mfhj_core::shock::shock_row;
use mfhj_core::single_party::{critical_time, self_consistent_m, ModelPoint};
use mfhj_core::SpinMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Atoms = &'static [(f64, f64)];
type Criterion = (&'static str, fn() -> Outcome);

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- test-side oracles ----

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let lf = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    lf(n) - lf(k) - lf(n - k)
}

/// Every occupation vector of `n` spins over `atoms`: (log multinomial weight,
/// sum, sum of squares).
fn multinomial(atoms: &[(f64, f64)], n: usize) -> Vec<(f64, f64, f64)> {
    fn rec(
        atoms: &[(f64, f64)],
        left: usize,
        acc: (f64, f64, f64),
        out: &mut Vec<(f64, f64, f64)>,
    ) {
        let (v, w) = atoms[0];
        if atoms.len() == 1 {
            let k = left as f64;
            out.push((acc.0 + k * w.ln(), acc.1 + k * v, acc.2 + k * v * v));
            return;
        }
        for k in 0..=left {
            let kf = k as f64;
            let lw = ln_choose(left, k) + kf * w.ln();
            rec(
                &atoms[1..],
                left - k,
                (acc.0 + lw, acc.1 + kf * v, acc.2 + kf * v * v),
                out,
            );
        }
    }
    let mut out = Vec::new();
    rec(atoms, n, (0.0, 0.0, 0.0), &mut out);
    out
}

const DICHOTOMIC: [(f64, f64); 2] = [(-1.0, 0.5), (1.0, 0.5)];
const THREE: [(f64, f64); 3] = [(-1.0, 1.0 / 3.0), (0.0, 1.0 / 3.0), (1.0, 1.0 / 3.0)];

/// `-(1/N) log E exp(t S²/2N + x S)`.
fn phi_n_oracle(atoms: &[(f64, f64)], n: usize, x: f64, t: f64) -> f64 {
    let nf = n as f64;
    let e: Vec<f64> = multinomial(atoms, n)
        .iter()
        .map(|&(lw, s, _)| lw + t * s * s / (2.0 * nf) + x * s)
        .collect();
    -lse(&e) / nf
}

/// `(1/N) log E exp(t S²/2N − t Q/2N + x S)`.
fn pressure_n_oracle(atoms: &[(f64, f64)], n: usize, x: f64, t: f64) -> f64 {
    let nf = n as f64;
    let e: Vec<f64> = multinomial(atoms, n)
        .iter()
        .map(|&(lw, s, q)| lw + t * s * s / (2.0 * nf) - t * q / (2.0 * nf) + x * s)
        .collect();
    lse(&e) / nf
}

fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (g(m) > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Positive root of `M = tanh(x + tM)` for `x ≥ 0`.
fn tanh_root(x: f64, t: f64) -> f64 {
    bisect(
        |m| (x + t * m).tanh() - m,
        if x > 0.0 { 0.0 } else { 1e-12 },
        1.0,
    )
}

fn dichotomic_phi(x: f64, t: f64) -> (f64, f64) {
    let m = if x >= 0.0 {
        tanh_root(x, t)
    } else {
        -tanh_root(-x, t)
    };
    (t * m * m / 2.0 - (x + t * m).cosh().ln(), m)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn ratio(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

fn builtins() -> Vec<(&'static str, SpinMeasure)> {
    vec![
        ("dichotomic", SpinMeasure::dichotomic()),
        ("uniform", SpinMeasure::uniform(2.0).unwrap()),
        (
            "three_atoms",
            SpinMeasure::equally_spaced_atoms(3, 2.0).unwrap(),
        ),
    ]
}

// ---- criteria ----

fn c1() -> Outcome {
    let d = SpinMeasure::dichotomic();
    let mut worst: f64 = 0.0;
    for &x in &linspace(-2.0, 2.0, 50) {
        for &t in &linspace(0.02, 4.0, 50) {
            let seed = if x >= 0.0 { 1.0 } else { -1.0 };
            let m = self_consistent_m(&d, ModelPoint::new(x, t).unwrap(), seed)
                .map_err(|e| e.to_string())?;
            worst = worst.max((m - (x + t * m).tanh()).abs());
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max |M - tanh(x+tM)| = {worst:.3e} (tol 1e-12)"),
    )
}

/// Smallest `t` at which `Λ'(tM) = M` has a positive root, scanning `M` on a
/// log grid down to 1e-9.
fn bifurcation_scan(dlambda: impl Fn(f64) -> f64, hw: f64) -> f64 {
    let ms: Vec<f64> = (0..4000)
        .map(|i| hw * 10f64.powf(-9.0 * i as f64 / 3999.0))
        .collect();
    let ordered = |t: f64| ms.iter().any(|&m| dlambda(t * m) - m > 0.0);
    bisect(|t| if ordered(t) { 1.0 } else { -1.0 }, 0.05, 20.0)
}

fn c2() -> Outcome {
    let coth_minus = |y: f64| {
        if y.abs() < 1e-4 {
            y / 3.0 - y.powi(3) / 45.0
        } else {
            1.0 / y.tanh() - 1.0 / y
        }
    };
    let three = |y: f64| 2.0 * y.sinh() / (1.0 + 2.0 * y.cosh());
    let cases: [(&str, SpinMeasure, f64, f64, f64); 3] = [
        (
            "dichotomic",
            SpinMeasure::dichotomic(),
            bifurcation_scan(f64::tanh, 1.0),
            1.0,
            1e-6,
        ),
        (
            "uniform",
            SpinMeasure::uniform(2.0).unwrap(),
            bifurcation_scan(coth_minus, 1.0),
            3.0,
            1e-4,
        ),
        (
            "three_atoms",
            SpinMeasure::equally_spaced_atoms(3, 2.0).unwrap(),
            bifurcation_scan(three, 1.0),
            1.5,
            1e-4,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, m, scan, expected, tol) in cases {
        let tc = critical_time(&m).t_c;
        ok &= (tc - expected).abs() <= tol && (scan - expected).abs() <= tol;
        parts.push(format!(
            "{name} t_c={tc:.9} scan={scan:.9} (expect {expected} ± {tol:e})"
        ));
    }
    verdict(ok, parts.join("; "))
}

fn c3() -> Outcome {
    let d = SpinMeasure::dichotomic();
    let mut worst_rh: f64 = 0.0;
    let mut worst_root: f64 = 0.0;
    let mut min_plus = f64::INFINITY;
    for &t in &[1.1, 1.5, 2.0, 3.0] {
        let r = shock_row(&d, t).map_err(|e| e.to_string())?;
        worst_rh = worst_rh.max((r.m_plus + r.m_minus).abs());
        worst_root = worst_root.max((r.m_plus - tanh_root(0.0, t)).abs());
        min_plus = min_plus.min(r.m_plus);
    }
    let mut worst_jump: f64 = 0.0;
    for &t in &[0.3, 0.6, 0.9] {
        worst_jump = worst_jump.max(shock_row(&d, t).map_err(|e| e.to_string())?.jump().abs());
    }
    verdict(
        worst_rh <= 1e-7 && min_plus > 0.0 && worst_jump <= 1e-8 && worst_root <= 1e-6,
        format!(
            "max |M+ + M-| = {worst_rh:.3e} (tol 1e-7), min M+ = {min_plus:.6}, |M+ - tanh root| = {worst_root:.3e}, subcritical jump = {worst_jump:.3e} (tol 1e-8)"
        ),
    )
}

fn c4() -> Outcome {
    let mut violations = 0;
    let xs = linspace(-2.0, 2.0, 401);
    for (_, m) in builtins() {
        for &t in &linspace(0.2, 5.0, 20) {
            violations += entropy_scan(&m, t, &xs).map_err(|e| e.to_string())?;
        }
    }
    verdict(
        violations == 0,
        format!("{violations} monotonicity violations over 3 x 20 x 401 points"),
    )
}

fn c5() -> Outcome {
    let mut worst_margin = f64::INFINITY;
    let mut worst_oracle: f64 = 0.0;
    let cases: [(Atoms, SpinMeasure, f64); 2] = [
        (&DICHOTOMIC, SpinMeasure::dichotomic(), 2.0),
        (
            &THREE,
            SpinMeasure::equally_spaced_atoms(3, 2.0).unwrap(),
            2.0,
        ),
    ];
    for (atoms, m, l) in &cases {
        for &n in &[2usize, 4, 8, 12] {
            for &x in &linspace(-1.0, 1.0, 5) {
                for &t in &linspace(0.2, 3.0, 5) {
                    let c = lemma1_check(m, ModelPoint::new(x, t).unwrap(), n)
                        .map_err(|e| e.to_string())?;
                    let gap =
                        (phi_n_oracle(atoms, n, x, t) + pressure_n_oracle(atoms, n, x, t)).abs();
                    worst_oracle = worst_oracle.max((gap - c.gap).abs());
                    worst_margin = worst_margin.min(l * l * t / (2.0 * n as f64) - gap);
                }
            }
        }
    }
    verdict(
        worst_margin >= 0.0 && worst_oracle <= 1e-12,
        format!("min margin L^2 t/2N - gap = {worst_margin:.4e} (must be >= 0); solver vs enumeration gap diff = {worst_oracle:.2e}"),
    )
}

fn c6() -> Outcome {
    let mut worst: f64 = 0.0;
    let cases: [(Atoms, SpinMeasure); 2] = [
        (&DICHOTOMIC, SpinMeasure::dichotomic()),
        (&THREE, SpinMeasure::equally_spaced_atoms(3, 2.0).unwrap()),
    ];
    for (atoms, m) in &cases {
        for n in 1..=14 {
            for &x in &linspace(-1.0, 1.0, 5) {
                for &t in &linspace(0.2, 3.0, 5) {
                    let q = phi_n_quadrature(m, ModelPoint::new(x, t).unwrap(), n)
                        .map_err(|e| e.to_string())?;
                    worst = worst.max((q - phi_n_oracle(atoms, n, x, t)).abs());
                }
            }
        }
    }
    verdict(
        worst <= 1e-9,
        format!("max |quadrature - enumeration| = {worst:.3e} (tol 1e-9)"),
    )
}

fn c7() -> Outcome {
    let start = Instant::now();
    let d = SpinMeasure::dichotomic();
    let ns = [25usize, 50, 100, 200, 400];
    let mut ok = true;
    let mut parts = Vec::new();
    for &(x, t) in &[(0.3, 0.5), (0.3, 2.0)] {
        let r = convergence_study(&d, ModelPoint::new(x, t).unwrap(), &ns)
            .map_err(|e| e.to_string())?;
        let (phi, m) = dichotomic_phi(x, t);
        let err_phi: Vec<f64> = r.phi_n.iter().map(|p| (p - phi).abs()).collect();
        let err_u: Vec<f64> = r.u_n.iter().map(|u| (u + m).abs()).collect();
        let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ly: Vec<f64> = err_phi.iter().map(|e| e.ln()).collect();
        let s = slope(&lx, &ly);
        let rp = ratio(
            &ns.iter()
                .zip(&err_phi)
                .map(|(&n, e)| n as f64 * e)
                .collect::<Vec<_>>(),
        );
        let ru = ratio(
            &ns.iter()
                .zip(&err_u)
                .map(|(&n, e)| (n as f64).sqrt() * e)
                .collect::<Vec<_>>(),
        );
        ok &= (-1.3..=-0.7).contains(&s) && rp <= 5.0 && ru <= 5.0;
        parts.push(format!(
            "(x={x}, t={t}) slope={s:.4} N-ratio={rp:.3} sqrtN-ratio={ru:.3}"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 30.0;
    parts.push(format!("runtime {secs:.2}s"));
    verdict(ok, parts.join("; "))
}

fn c8() -> Outcome {
    let mut worst: f64 = 0.0;
    for &beta in &linspace(0.1, 3.0, 12) {
        for &h1 in &linspace(-1.0, 1.0, 11) {
            for &h2 in &[-0.4, 0.0, 0.6] {
                let p =
                    BipartiteParams::dichotomic(beta, 0.0, h1, h2).map_err(|e| e.to_string())?;
                let s = coupled_fixed_point(&p, (0.0, 0.0))
                    .map_err(|e| e.to_string())?
                    .with_counting(&p);
                let oracle = 2f64.ln() + (beta * h1).cosh().ln();
                worst = worst.max((-beta * s.free_energy_f - oracle).abs());
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max |-beta f - (ln 2 + ln cosh(beta h1))| = {worst:.3e} (tol 1e-10)"),
    )
}

fn c9() -> Outcome {
    let d = SpinMeasure::dichotomic();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &alpha in &[0.25, 0.5, 1.0, 2.0] {
        let b = detect_bifurcation_beta(&d, &d, alpha, 0.2, 6.0).map_err(|e| e.to_string())?;
        let expected = 1.0 / f64::sqrt(alpha);
        worst = worst.max((b - expected).abs());
        parts.push(format!("alpha={alpha}: {b:.6}"));
    }
    verdict(
        worst <= 1e-3,
        format!(
            "{}; max |beta_c - 1/sqrt(alpha)| = {worst:.3e} (tol 1e-3)",
            parts.join(", ")
        ),
    )
}

fn c10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let measures = builtins();
    let mut worst_agree: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    let mut saddle_checked = 0;
    let mut saddle_failed = 0;
    let mut indefinite = 0;
    for _ in 0..100 {
        let beta = 3.0 * (1.0 - rng.gen::<f64>());
        let alpha = rng.gen_range(0.0..=2.0);
        let h1 = rng.gen_range(-1.0..=1.0);
        let h2 = rng.gen_range(-1.0..=1.0);
        let sigma = measures[rng.gen_range(0..3)].1.clone();
        let tau = measures[rng.gen_range(0..3)].1.clone();
        let threshold = 1.0 / (alpha * sigma.variance() * tau.variance()).sqrt();
        let p = BipartiteParams::new(beta, alpha, h1, h2, sigma, tau).map_err(|e| e.to_string())?;
        let a = coupled_fixed_point(&p, (0.0, 0.0)).map_err(|e| e.to_string())?;
        let b = minmax_solve(&p).map_err(|e| e.to_string())?;
        worst_agree = worst_agree
            .max((a.m_tilde - b.m_tilde).abs())
            .max((a.n_tilde - b.n_tilde).abs())
            .max((a.free_energy_f - b.free_energy_f).abs());
        let f = |m: f64, n: f64| minmax_trial(&p, m, n).unwrap_or(f64::NAN);
        let (m, n) = (a.m_tilde, a.n_tilde);
        // keep the stencils inside the box near saturation
        let g = 1e-6;
        let mc = m.clamp(-p.sigma.half_width() + g, p.sigma.half_width() - g);
        let nc = n.clamp(-p.tau.half_width() + g, p.tau.half_width() - g);
        let gm = (f(mc + g, n) - f(mc - g, n)) / (2.0 * g);
        let gn = (f(m, nc + g) - f(m, nc - g)) / (2.0 * g);
        worst_grad = worst_grad.max(gm.abs()).max(gn.abs());
        if alpha > 0.0 && beta > threshold {
            saddle_checked += 1;
            let h = 1e-4;
            let mc = m.clamp(-p.sigma.half_width() + h, p.sigma.half_width() - h);
            let nc = n.clamp(-p.tau.half_width() + h, p.tau.half_width() - h);
            let dmm = (f(mc + h, n) - 2.0 * f(mc, n) + f(mc - h, n)) / (h * h);
            let dnn = (f(m, nc + h) - 2.0 * f(m, nc) + f(m, nc - h)) / (h * h);
            let dmn = (f(mc + h, nc + h) - f(mc + h, nc - h) - f(mc - h, nc + h)
                + f(mc - h, nc - h))
                / (4.0 * h * h);
            if dmm * dnn >= 0.0 {
                saddle_failed += 1;
            }
            if dmm * dnn - dmn * dmn < 0.0 {
                indefinite += 1;
            }
        }
    }
    let ok = worst_agree <= 1e-8 && worst_grad <= 1e-6 && saddle_checked > 0 && saddle_failed == 0;
    verdict(
        ok,
        format!(
            "agreement {worst_agree:.3e} (tol 1e-8), gradient {worst_grad:.3e} (tol 1e-6), axis curvatures of opposite sign at {}/{saddle_checked} ordered draws (Hessian indefinite at {indefinite}/{saddle_checked})",
            saddle_checked - saddle_failed
        ),
    )
}

fn c11() -> Outcome {
    let (beta, alpha) = (2.0, 1.0);
    let p = BipartiteParams::dichotomic(beta, alpha, 0.0, 0.0).map_err(|e| e.to_string())?;
    let m = tanh_root(0.0, beta);
    let limit =
        -alpha * beta * m * m + (alpha * beta * m).cosh().ln() + alpha * (beta * m).cosh().ln();
    let solved = coupled_fixed_point(&p, (0.0, 0.0))
        .map_err(|e| e.to_string())?
        .pressure_a;
    let mut scaled = Vec::new();
    let mut worst_oracle: f64 = 0.0;
    for n in [4usize, 6, 8, 10, 12, 14] {
        let exact = exact_bipartite_pressure(n, n, &p).map_err(|e| e.to_string())?;
        let nf = n as f64;
        let mut e = Vec::new();
        for k1 in 0..=n {
            for k2 in 0..=n {
                let (s1, s2) = (2.0 * k1 as f64 - nf, 2.0 * k2 as f64 - nf);
                e.push(
                    ln_choose(n, k1) + ln_choose(n, k2) - 2.0 * nf * 2f64.ln()
                        + beta * s1 * s2 / nf,
                );
            }
        }
        worst_oracle = worst_oracle.max((exact - lse(&e) / nf).abs());
        scaled.push(nf * (exact - limit).abs());
    }
    let r = ratio(&scaled);
    verdict(
        r <= 5.0 && worst_oracle <= 1e-12 && (solved - limit).abs() <= 1e-10,
        format!(
            "N*gap = {:?}, max/min = {r:.3} (tol 5); enumeration diff {worst_oracle:.2e}; limit diff {:.2e}",
            scaled.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            (solved - limit).abs()
        ),
    )
}

fn c12() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_mfhj");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |out: &Path| {
        Command::new(bin)
            .args([
                "sweep",
                "--measure",
                "uniform",
                "--beta",
                "0.1:3:0.1",
                "--h",
                "-0.5:0.5:0.25",
                "--out",
            ])
            .arg(out)
            .status()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let sa = run(&a)?;
    let sb = run(&b)?;
    let ca = std::fs::read(&a).map_err(|e| e.to_string())?;
    let cb = std::fs::read(&b).map_err(|e| e.to_string())?;
    let header = ca
        .split(|&c| c == b'\n')
        .next()
        .map(|h| h.to_vec())
        .unwrap_or_default();
    let rows = ca.iter().filter(|&&c| c == b'\n').count() - 1;
    let check = Command::new(bin)
        .arg("check")
        .output()
        .map_err(|e| e.to_string())?;
    let ok = sa.success()
        && sb.success()
        && ca == cb
        && header == b"beta,h,M,A,f,branch_count,residual"
        && rows == 150
        && check.status.success();
    verdict(
        ok,
        format!(
            "sweep byte-identical: {} ({rows} rows); check exit code {:?}",
            ca == cb,
            check.status.code()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("dichotomic reduction", c1),
        ("single-party critical point", c2),
        ("shock symmetry", c3),
        ("entropy condition", c4),
        ("finite-size bound", c5),
        ("Gaussian linearization identity", c6),
        ("finite-size rates", c7),
        ("bipartite reduction at alpha = 0", c8),
        ("bipartite critical line", c9),
        ("minmax consistency", c10),
        ("bipartite finite-size convergence", c11),
        ("CLI determinism and schema", c12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("[PASS] {:>2} {name}: {d} [{secs:.2}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {d} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
