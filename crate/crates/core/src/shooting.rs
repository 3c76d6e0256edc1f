//! Shooting from the left endpoint and the characteristic function
//! `D(lambda) = y(b; lambda)` with `y(a) = 0`, `(p y')(a) = 1`.

use std::io::Write;

use num_complex::Complex64;

use crate::coefficients::{Piece, Problem};
use crate::error::{Error, Result};
use crate::ode::{self, DenseStep};

pub const DEFAULT_TOL: f64 = 1e-11;

/// State layout: `y`, `p y'`, `v = dy/dlambda`, `p v'`, each as (re, im).
type State = [f64; 8];

#[derive(Clone, Debug)]
pub struct ShotSolution {
    pub lambda: Complex64,
    /// Step endpoints; contains `a`, `b` and every breakpoint.
    pub grid: Vec<f64>,
    pub y: Vec<Complex64>,
    pub py_prime: Vec<Complex64>,
    pub d: Complex64,
    pub d_prime: Complex64,
    steps: Vec<DenseStep<8>>,
    scale: Complex64,
    tail: Option<Tail>,
}

/// Solution shot from `b` towards `a`, used right of `split`.
#[derive(Clone, Debug)]
struct Tail {
    split: f64,
    /// `a + b`; the tail runs in `t = a + b - x`.
    mirror: f64,
    factor: Complex64,
    steps: Vec<DenseStep<4>>,
}

impl Tail {
    /// `(y, p y')` at `x`, before `factor` is applied.
    fn eval_unscaled(&self, x: f64) -> (Complex64, Complex64) {
        let t = self.mirror - x;
        let k = self.steps.partition_point(|s| s.x0 <= t).saturating_sub(1).min(self.steps.len() - 1);
        let s = self.steps[k].eval(t);
        // the tail state carries p dy/dt = -p y'
        (Complex64::new(s[0], s[1]), -Complex64::new(s[2], s[3]))
    }

    fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let (y, py) = self.eval_unscaled(x);
        (self.factor * y, self.factor * py)
    }
}

/// Samples per interval when choosing the splice point.
const SPLICE_SAMPLES: usize = 256;

fn rhs(piece: &Piece, lambda: Complex64) -> impl Fn(f64, &State) -> State + '_ {
    move |x, s| {
        let p = piece.p.eval(x);
        let q = piece.q.eval(x);
        let w = piece.w.eval(x);
        let y = Complex64::new(s[0], s[1]);
        let py = Complex64::new(s[2], s[3]);
        let v = Complex64::new(s[4], s[5]);
        let pv = Complex64::new(s[6], s[7]);
        let m = q - lambda * w;
        let dy = py / p;
        let dpy = m * y;
        let dv = pv / p;
        let dpv = m * v - w * y;
        [dy.re, dy.im, dpy.re, dpy.im, dv.re, dv.im, dpv.re, dpv.im]
    }
}

/// Integrates the shooting system at `lambda` with local error target `tol`.
pub fn shoot(prob: &Problem, lambda: Complex64, tol: f64) -> Result<ShotSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidProblem(format!("tolerance must be positive, got {tol}")));
    }
    let opts = ode::Options::with_tol(tol);
    let mut state: State = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut steps = Vec::new();
    for piece in prob.pieces() {
        let traj = ode::integrate(rhs(&piece, lambda), piece.x0, piece.x1, state, &opts)?;
        state = traj.end;
        steps.extend(traj.steps);
    }
    let mut grid = Vec::with_capacity(steps.len() + 1);
    let mut y = Vec::with_capacity(steps.len() + 1);
    let mut py_prime = Vec::with_capacity(steps.len() + 1);
    for s in &steps {
        let st = s.start();
        grid.push(s.x0);
        y.push(Complex64::new(st[0], st[1]));
        py_prime.push(Complex64::new(st[2], st[3]));
    }
    grid.push(prob.interval().b);
    y.push(Complex64::new(state[0], state[1]));
    py_prime.push(Complex64::new(state[2], state[3]));
    Ok(ShotSolution {
        lambda,
        grid,
        y,
        py_prime,
        d: Complex64::new(state[0], state[1]),
        d_prime: Complex64::new(state[4], state[5]),
        steps,
        scale: Complex64::new(1.0, 0.0),
        tail: None,
    })
}

fn rhs_mirrored(piece: &Piece, lambda: Complex64, mirror: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] + '_ {
    move |t, s| {
        let x = mirror - t;
        let p = piece.p.eval(x);
        let m = piece.q.eval(x) - lambda * piece.w.eval(x);
        let y = Complex64::new(s[0], s[1]);
        let pz = Complex64::new(s[2], s[3]);
        let dy = pz / p;
        let dpz = m * y;
        [dy.re, dy.im, dpz.re, dpz.im]
    }
}

/// `(D(lambda), D'(lambda))` at the default tolerance.
pub fn char_fn(prob: &Problem, lambda: Complex64) -> Result<(Complex64, Complex64)> {
    char_fn_tol(prob, lambda, DEFAULT_TOL)
}

pub fn char_fn_tol(prob: &Problem, lambda: Complex64, tol: f64) -> Result<(Complex64, Complex64)> {
    let s = shoot(prob, lambda, tol)?;
    Ok((s.d, s.d_prime))
}

/// Real-axis convenience wrapper returning real parts.
pub fn char_fn_real(prob: &Problem, lambda: f64, tol: f64) -> Result<(f64, f64)> {
    let (d, dp) = char_fn_tol(prob, Complex64::new(lambda, 0.0), tol)?;
    Ok((d.re, dp.re))
}

impl ShotSolution {
    fn step_index(&self, x: f64) -> usize {
        let k = self.steps.partition_point(|s| s.x0 <= x);
        k.saturating_sub(1).min(self.steps.len() - 1)
    }

    fn left(&self, x: f64) -> (Complex64, Complex64) {
        let s = self.steps[self.step_index(x)].eval(x);
        (Complex64::new(s[0], s[1]), Complex64::new(s[2], s[3]))
    }

    /// `(y, p y')` before normalization.
    fn raw(&self, x: f64) -> (Complex64, Complex64) {
        match &self.tail {
            Some(t) if x > t.split => t.eval(x),
            _ => self.left(x),
        }
    }

    /// `(y(x), (p y')(x))` from the dense output, including normalization.
    pub fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let x = x.clamp(self.a(), self.b());
        let (y, py) = self.raw(x);
        (self.scale * y, self.scale * py)
    }

    pub fn a(&self) -> f64 {
        self.grid[0]
    }

    pub fn b(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    /// Where the left solution hands over to one shot from `b`, if spliced.
    pub fn split(&self) -> Option<f64> {
        self.tail.as_ref().map(|t| t.split)
    }

    /// Replaces the solution right of a matching point by one shot from
    /// `b`. Forward shooting alone loses an eigenfunction wherever it decays
    /// towards `b`; the two shots are joined where they agree best.
    pub fn spliced(&self, prob: &Problem, tol: f64) -> Result<Self> {
        let (a, b) = (self.a(), self.b());
        let mirror = a + b;
        let opts = ode::Options::with_tol(tol);
        let mut state = [0.0, 0.0, 1.0, 0.0];
        let mut steps = Vec::new();
        for piece in prob.pieces().iter().rev() {
            let traj = ode::integrate(rhs_mirrored(piece, self.lambda, mirror), mirror - piece.x1, mirror - piece.x0, state, &opts)?;
            state = traj.end;
            steps.extend(traj.steps);
        }
        let mut tail = Tail { split: b, mirror, factor: Complex64::new(1.0, 0.0), steps };

        // local wavenumber puts y and p y' on a common scale
        let lam = self.lambda.norm();
        let weigh = |x: f64| {
            let p = prob.p().eval(x).unwrap_or(1.0);
            let m = prob.q().eval(x).unwrap_or(0.0).abs() + lam * prob.w().eval(x).unwrap_or(0.0).abs();
            (m.max(1.0) * p).sqrt()
        };
        let mut xs: Vec<f64> = (1..SPLICE_SAMPLES).map(|k| a + (b - a) * k as f64 / SPLICE_SAMPLES as f64).collect();
        xs.extend(prob.breakpoints().into_iter().filter(|&x| x > a && x < b));
        let mut best: Option<(f64, f64, Complex64)> = None;
        for x in xs {
            let k = weigh(x);
            let (yl, pl) = self.left(x);
            let (yr, pr) = tail.eval_unscaled(x);
            let (l, r) = ([k * yl, pl], [k * yr, pr]);
            let rr = r[0].norm_sqr() + r[1].norm_sqr();
            let ll = l[0].norm_sqr() + l[1].norm_sqr();
            if rr == 0.0 || ll == 0.0 {
                continue;
            }
            // sine of the angle between the two state vectors
            let sin = (l[0] * r[1] - l[1] * r[0]).norm() / (ll * rr).sqrt();
            let c = (r[0].conj() * l[0] + r[1].conj() * l[1]) / rr;
            if best.is_none_or(|(s, _, _)| sin < s) {
                best = Some((sin, x, c));
            }
        }
        let Some((_, split, factor)) = best else {
            return Ok(self.clone());
        };
        tail.split = split;
        tail.factor = factor;

        let mut out = self.clone();
        let mut grid: Vec<f64> = self.grid.iter().copied().filter(|&x| x <= split).collect();
        if grid.last() != Some(&split) {
            grid.push(split);
        }
        let mut right: Vec<f64> = tail.steps.iter().map(|s| mirror - s.x0).filter(|&x| x > split && x < b).collect();
        right.sort_by(f64::total_cmp);
        grid.extend(right);
        grid.push(b);
        out.tail = Some(tail);
        out.y = grid.iter().map(|&x| self.scale * out.raw(x).0).collect();
        out.py_prime = grid.iter().map(|&x| self.scale * out.raw(x).1).collect();
        out.grid = grid;
        Ok(out)
    }

    /// Rescales so that `max |y| = 1` and `y` is real and positive where the
    /// maximum is attained.
    pub fn normalized(&self) -> Self {
        let raw = |x: f64| self.raw(x).0;
        let mut best = (0.0, self.a(), 0.0);
        for w in self.grid.windows(2) {
            let h = w[1] - w[0];
            for k in 0..8 {
                let x = w[0] + h * k as f64 / 8.0;
                let m = raw(x).norm();
                if m > best.0 {
                    best = (m, x, h / 8.0);
                }
            }
        }
        // golden-section polish of the sampled peak
        let (_, xc, dx) = best;
        let (mut lo, mut hi) = ((xc - dx).max(self.a()), (xc + dx).min(self.b()));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if raw(x1).norm() > raw(x2).norm() {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let peak = raw(0.5 * (lo + hi));
        let peak = if peak.norm() >= best.0 { peak } else { raw(xc) };
        let factor = if peak.norm() > 0.0 {
            peak.conj() / peak.norm_sqr()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut out = self.clone();
        out.scale = factor;
        out.y = self.grid.iter().map(|&x| factor * self.raw(x).0).collect();
        out.py_prime = self.grid.iter().map(|&x| factor * self.raw(x).1).collect();
        out
    }

    /// Writes `x, Re y, Im y, Re py', Im py'` on the step grid.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,re_y,im_y,re_py,im_py")?;
        for ((x, y), py) in self.grid.iter().zip(&self.y).zip(&self.py_prime) {
            writeln!(out, "{x},{},{},{},{}", y.re, y.im, py.re, py.im)?;
        }
        Ok(())
    }

    /// Samples `(x, y, py')` on a uniform grid of `n + 1` points.
    pub fn sample(&self, n: usize) -> Vec<(f64, Complex64, Complex64)> {
        let (a, b) = (self.a(), self.b());
        (0..=n)
            .map(|k| {
                let x = if k == n { b } else { a + (b - a) * k as f64 / n as f64 };
                let (y, py) = self.eval(x);
                (x, y, py)
            })
            .collect()
    }
}
