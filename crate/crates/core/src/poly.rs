//! Real polynomials of degree at most three, stored as coefficients of
//! increasing powers of `x`.

pub(crate) fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

pub(crate) fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| k as f64 * ck)
        .collect()
}

/// Antiderivative vanishing at `x = 0`.
pub(crate) fn antiderivative(c: &[f64]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(c.iter().enumerate().map(|(k, &ck)| ck / (k + 1) as f64))
        .collect()
}

pub(crate) fn integrate(c: &[f64], x0: f64, x1: f64) -> f64 {
    let anti = antiderivative(c);
    eval(&anti, x1) - eval(&anti, x0)
}

/// Drops trailing coefficients that are exactly zero.
fn trimmed(c: &[f64]) -> &[f64] {
    let mut n = c.len();
    while n > 0 && c[n - 1] == 0.0 {
        n -= 1;
    }
    &c[..n]
}

/// All real roots of `c` (degree <= 3), sorted, in closed form and polished
/// by a couple of Newton steps.
pub(crate) fn real_roots(c: &[f64]) -> Vec<f64> {
    let c = trimmed(c);
    let mut roots = match c.len() {
        0 | 1 => Vec::new(),
        2 => vec![-c[0] / c[1]],
        3 => quadratic_roots(c[2], c[1], c[0]),
        4 => cubic_roots(c[3], c[2], c[1], c[0]),
        _ => panic!("polynomial segments are limited to degree 3"),
    };
    let dc = derivative(c);
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = eval(&dc, *r);
            if d == 0.0 {
                break;
            }
            let step = eval(c, *r) / d;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
    roots
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // cancellation-free form
    let t = -0.5 * (b + b.signum() * sq);
    if t == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![t / a, c / t]
}

fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (b, c, d) = (b / a, c / a, d / a);
    // depressed cubic t^3 + p t + q with x = t - b/3
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    }
}

/// Minimum and maximum of the polynomial over `[x0, x1]`.
pub(crate) fn range_on(c: &[f64], x0: f64, x1: f64) -> (f64, f64) {
    let mut lo = eval(c, x0).min(eval(c, x1));
    let mut hi = eval(c, x0).max(eval(c, x1));
    for r in real_roots(&derivative(c)) {
        if r > x0 && r < x1 {
            let v = eval(c, r);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}
