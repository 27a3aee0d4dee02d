//! One-dimensional search primitives: bracketing scans, golden-section
//! refinement and sign-change bisection.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimize `f` on `[a, b]` by golden-section search until the bracket is
/// narrower than `tol`. Returns `(x, f(x))` for the best point seen.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Sample `f` on `n` evenly spaced points of `[a, b]` and return the brackets
/// `[x_{i-1}, x_{i+1}]` around every sampled local minimum (endpoints
/// included, clipped to the interval).
pub fn bracket_minima<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let n = n.max(3);
    let xs: Vec<f64> = (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || fs[i] <= fs[i - 1];
        let right_ok = i == n - 1 || fs[i] < fs[i + 1];
        if left_ok && right_ok {
            let lo = xs[i.saturating_sub(1)];
            let hi = xs[(i + 1).min(n - 1)];
            out.push((lo, hi));
        }
    }
    out
}

/// Bisection on a sign change of `g` in `[a, b]`. `g(a)` and `g(b)` must
/// have opposite signs (or one of them vanish). Returns the endpoint of the
/// final bracket with the smaller `|g|`.
pub fn bisect<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    let gb = g(b);
    if ga == 0.0 {
        return a;
    }
    if gb == 0.0 {
        return b;
    }
    debug_assert!(ga.signum() != gb.signum(), "bisect needs a sign change");
    let mut best = if ga.abs() < gb.abs() {
        (a, ga)
    } else {
        (b, gb)
    };
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let gm = g(mid);
        if gm.abs() < best.1.abs() {
            best = (mid, gm);
        }
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    best.0
}

/// Locate a root of an increasing-through-zero `g` near `x0` (a local
/// minimum of a function whose derivative is `g`): expand a bracket
/// `[x0 - δ, x0 + δ']` inside `[lo, hi]` until `g(left) <= 0 <= g(right)`,
/// then bisect. Returns `None` when no such bracket exists inside the bounds.
pub fn polish_minimum<G: Fn(f64) -> f64>(g: G, x0: f64, lo: f64, hi: f64) -> Option<f64> {
    let g0 = g(x0);
    if g0 == 0.0 {
        return Some(x0);
    }
    let mut step = 1e-9 * (1.0 + x0.abs());
    if g0 < 0.0 {
        // root lies to the right
        let mut left = x0;
        loop {
            let right = (x0 + step).min(hi);
            let gr = g(right);
            if gr >= 0.0 {
                return Some(bisect(&g, left, right));
            }
            if right >= hi {
                return None;
            }
            left = right;
            step *= 4.0;
        }
    } else {
        let mut right = x0;
        loop {
            let left = (x0 - step).max(lo);
            let gl = g(left);
            if gl <= 0.0 {
                return Some(bisect(&g, left, right));
            }
            if left <= lo {
                return None;
            }
            right = left;
            step *= 4.0;
        }
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
