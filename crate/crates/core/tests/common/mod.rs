//! Closed-form solutions for problems whose coefficients are constant on
//! every piece. Each piece is solved with `cosh` and `sinh`, so nothing here
//! goes through the integrator, the root finders or the quadrature of the
//! library.

#![allow(dead_code)]

use std::f64::consts::PI;

use sl_ghosts::{Complex64, Problem, Segment};

#[derive(Clone, Copy, Debug)]
pub struct Layer {
    pub x0: f64,
    pub x1: f64,
    pub p: f64,
    pub q: f64,
    pub w: f64,
}

fn constant(s: &Segment) -> f64 {
    match s {
        Segment::Constant(c) => *c,
        Segment::Polynomial(c) if c.len() == 1 => c[0],
        other => panic!("closed form needs constant pieces, got {other:?}"),
    }
}

pub fn layers(prob: &Problem) -> Vec<Layer> {
    prob.pieces()
        .iter()
        .map(|pc| Layer { x0: pc.x0, x1: pc.x1, p: constant(&pc.p), q: constant(&pc.q), w: constant(&pc.w) })
        .collect()
}

/// `(y, p y')` after a distance `h` inside one layer.
fn propagate(l: &Layer, lambda: Complex64, y: Complex64, py: Complex64, h: f64) -> (Complex64, Complex64) {
    let c = (l.q - lambda * l.w) / l.p;
    let s = c.sqrt();
    let z = s * h;
    let (ch, sh_over) = if z.norm() < 1e-8 {
        (Complex64::new(1.0, 0.0) + 0.5 * z * z, Complex64::new(h, 0.0))
    } else {
        (z.cosh(), z.sinh() / s)
    };
    let v = py / l.p;
    let y1 = y * ch + v * sh_over;
    let v1 = y * c * sh_over + v * ch;
    (y1, l.p * v1)
}

/// `y(b)` for `y(a) = 0`, `p y'(a) = 1`.
pub fn d(layers: &[Layer], lambda: Complex64) -> Complex64 {
    let (mut y, mut py) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    for l in layers {
        (y, py) = propagate(l, lambda, y, py, l.x1 - l.x0);
    }
    y
}

/// `dD/dlambda` by the trapezoidal rule on a small circle.
pub fn d_prime(layers: &[Layer], lambda: Complex64) -> Complex64 {
    const N: usize = 64;
    let r = 1e-2 * (1.0 + lambda.norm()).sqrt();
    (0..N)
        .map(|k| {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / N as f64);
            d(layers, lambda + r * e) / (r * e)
        })
        .sum::<Complex64>()
        / N as f64
}

pub fn d_real(layers: &[Layer], lambda: f64) -> f64 {
    d(layers, Complex64::new(lambda, 0.0)).re
}

/// Real zeros of `D` on `[lo, hi]` located by sign changes on a grid of
/// spacing `h` and bisection.
pub fn real_eigenvalues(layers: &[Layer], lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).ceil() as usize;
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut f0 = d_real(layers, x0);
    for k in 1..=n {
        let x1 = (lo + k as f64 * h).min(hi);
        let f1 = d_real(layers, x1);
        if f0 == 0.0 {
            out.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = d_real(layers, m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

const PHASE_MARGIN: f64 = 1e-6;

/// Zeros of `y = y0 cos(kt) + v0 sin(kt) / k` (or its hyperbolic analogue)
/// strictly inside `(0, h)`, with `v0 = y'(0)`.
fn zeros_in_layer(c: f64, y0: f64, v0: f64, h: f64) -> usize {
    if c < -1e-12 {
        let k = (-c).sqrt();
        let phi = y0.atan2(v0 / k);
        let lo = ((phi + PHASE_MARGIN) / PI).floor() as i64;
        let hi = ((phi + k * h - PHASE_MARGIN) / PI).floor() as i64;
        (hi - lo).max(0) as usize
    } else if c > 1e-12 {
        let kappa = c.sqrt();
        if v0 == 0.0 {
            return 0;
        }
        let tau = -kappa * y0 / v0;
        usize::from(tau > 0.0 && tau < (kappa * h).tanh() && (tau.atanh() / kappa) < h - PHASE_MARGIN)
    } else {
        if v0 == 0.0 {
            return 0;
        }
        let t = -y0 / v0;
        usize::from(t > PHASE_MARGIN && t < h - PHASE_MARGIN)
    }
}

/// Interior zeros of the eigenfunction at a real eigenvalue. The last layer
/// is solved backwards from `y(b) = 0`, so the count does not depend on how
/// closely `lambda` annihilates `D`.
pub fn zero_count(layers: &[Layer], lambda: f64) -> usize {
    let lam = Complex64::new(lambda, 0.0);
    let (mut y, mut py) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let mut zeros = 0;
    let (last, head) = layers.split_last().expect("at least one layer");
    for l in head {
        let c = (l.q - lambda * l.w) / l.p;
        zeros += zeros_in_layer(c, y.re, py.re / l.p, l.x1 - l.x0);
        (y, py) = propagate(l, lam, y, py, l.x1 - l.x0);
        // a zero sitting on a breakpoint is excluded from both layers
        if y.re.abs() <= 1e-9 * py.re.abs() / l.p {
            zeros += 1;
        }
    }
    let c = (last.q - lambda * last.w) / last.p;
    // mirrored: starts at b with y = 0, y' = 1
    zeros + zeros_in_layer(c, 0.0, 1.0, last.x1 - last.x0)
}
