//! Dormand-Prince 5(4) with Hairer's continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step length; `f64::INFINITY` for none.
    pub h_max: f64,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            max_steps: 200_000,
            h_max: f64::INFINITY,
        }
    }
}

/// Interpolation data for one accepted step.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub x0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn x1(&self) -> f64 {
        self.x0 + self.h
    }

    pub fn start(&self) -> [f64; N] {
        self.rcont[0]
    }

    pub fn end(&self) -> [f64; N] {
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = self.rcont[0][i] + self.rcont[1][i];
        }
        y
    }

    /// Fifth-order interpolant at `x` in `[x0, x0 + h]`.
    pub fn eval(&self, x: f64) -> [f64; N] {
        let s = (x - self.x0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.rcont;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        y
    }
}

pub struct Trajectory<const N: usize> {
    pub end: [f64; N],
    pub steps: Vec<DenseStep<N>>,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn initial_step<const N: usize, F>(f: &F, x0: f64, y0: &[f64; N], k1: &[f64; N], opts: &Options, span: f64) -> f64
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let sk = |i: usize| opts.atol + opts.rtol * y0[i].abs();
    let rms = |v: &[f64; N]| (v.iter().enumerate().map(|(i, x)| (x / sk(i)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(k1);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span).min(opts.h_max);
    let y1 = axpy(y0, h0, &[(1.0, k1)]);
    let k2 = f(x0 + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k2[i] - k1[i];
    }
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).min(opts.h_max)
}

/// Integrates `y' = f(x, y)` from `x0` to `x1 > x0`, keeping dense output.
pub fn integrate<const N: usize, F>(f: F, x0: f64, x1: f64, y0: [f64; N], opts: &Options) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let span = x1 - x0;
    let mut steps = Vec::new();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut h = initial_step(&f, x, &y, &k1, opts, span);
    let mut rejected = 0;
    let mut last_rejected = false;

    while x < x1 {
        if steps.len() + rejected >= opts.max_steps {
            return Err(Error::TooManySteps { x, steps: steps.len() });
        }
        let remaining = x1 - x;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h < 1e-14 * (1.0 + x.abs()) {
            return Err(Error::StepUnderflow { x, h });
        }

        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(
            x + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let x_new = if last { x1 } else { x + h };
        let k7 = f(x_new, &y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sk).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            rejected += 1;
            last_rejected = true;
            continue;
        }

        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        if err <= 1.0 {
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k7[i] - bspl;
                rcont[4][i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            steps.push(DenseStep { x0: x, h, rcont });
            x = x_new;
            y = y_new;
            k1 = k7;
            let grow = if last_rejected { fac.min(1.0) } else { fac };
            h = (h * grow).min(opts.h_max);
            last_rejected = false;
        } else {
            h *= fac.min(1.0);
            rejected += 1;
            last_rejected = true;
        }
    }
    Ok(Trajectory { end: y, steps, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_endpoint() {
        let t = integrate(oscillator, 0.0, 10.0, [0.0, 1.0], &Options::with_tol(1e-12)).unwrap();
        assert!((t.end[0] - 10f64.sin()).abs() < 1e-10);
        assert!((t.end[1] - 10f64.cos()).abs() < 1e-10);
        assert_eq!(t.steps.last().unwrap().x1(), 10.0);
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let t = integrate(oscillator, 0.0, 6.0, [0.0, 1.0], &Options::with_tol(1e-11)).unwrap();
        for s in &t.steps {
            for k in 1..8 {
                let x = s.x0 + s.h * k as f64 / 8.0;
                let y = s.eval(x);
                assert!((y[0] - x.sin()).abs() < 1e-8, "x = {x}");
            }
            assert!((s.eval(s.x1())[0] - s.end()[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn global_error_follows_fifth_order() {
        // Error ratio for a tolerance drop of 10^5 should be near 10^5 when
        // the controller tracks tolerance proportionally.
        let run = |tol: f64| {
            let t = integrate(oscillator, 0.0, 20.0, [0.0, 1.0], &Options::with_tol(tol)).unwrap();
            (t.end[0] - 20f64.sin()).abs()
        };
        let coarse = run(1e-6);
        let fine = run(1e-11);
        assert!(fine < coarse * 1e-3, "{coarse:e} -> {fine:e}");
    }

    #[test]
    fn step_budget_is_enforced() {
        let opts = Options { max_steps: 5, ..Options::with_tol(1e-12) };
        let r = integrate(oscillator, 0.0, 100.0, [0.0, 1.0], &opts);
        assert!(matches!(r, Err(Error::TooManySteps { .. })));
    }
}
