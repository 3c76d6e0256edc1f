//! Scalar root finders: Brent on brackets, Newton and Muller in the plane.

use num_complex::Complex64;

use crate::error::Result;

/// Brent's method on a bracket with `fa * fb <= 0`. Stops when the bracket
/// is shorter than `xtol`. Fallible so that integration errors propagate.
pub fn brent<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    debug_assert!(fa * fb < 0.0, "brent needs a sign change");
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Ok(b)
}

pub struct Converged {
    pub z: Complex64,
    pub iterations: usize,
}

/// Newton on `f` with derivative `(f, f')`. Returns `None` when the
/// iterate leaves `region` or fails to settle in `max_iter` steps.
pub fn newton<F, R>(mut fdf: F, z0: Complex64, tol: f64, max_iter: usize, region: R) -> Result<Option<Converged>>
where
    F: FnMut(Complex64) -> Result<(Complex64, Complex64)>,
    R: Fn(Complex64) -> bool,
{
    let mut z = z0;
    for it in 0..max_iter {
        let (f, df) = fdf(z)?;
        if f == Complex64::new(0.0, 0.0) {
            return Ok(Some(Converged { z, iterations: it }));
        }
        let step = f / df;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Ok(None);
        }
        z -= step;
        if !region(z) {
            return Ok(None);
        }
        if step.norm() <= tol * (1.0 + z.norm()) {
            return Ok(Some(Converged { z, iterations: it + 1 }));
        }
    }
    Ok(None)
}

/// Muller's method from three starting points.
pub fn muller<F, R>(mut f: F, mut z: [Complex64; 3], tol: f64, max_iter: usize, region: R) -> Result<Option<Converged>>
where
    F: FnMut(Complex64) -> Result<Complex64>,
    R: Fn(Complex64) -> bool,
{
    let mut fz = [f(z[0])?, f(z[1])?, f(z[2])?];
    for it in 0..max_iter {
        let h1 = z[1] - z[0];
        let h2 = z[2] - z[1];
        let d1 = (fz[1] - fz[0]) / h1;
        let d2 = (fz[2] - fz[1]) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - 4.0 * a * fz[2]).sqrt();
        let den = if (b + disc).norm() >= (b - disc).norm() { b + disc } else { b - disc };
        if den.norm() == 0.0 {
            return Ok(None);
        }
        let step = -2.0 * fz[2] / den;
        let next = z[2] + step;
        if !next.re.is_finite() || !next.im.is_finite() || !region(next) {
            return Ok(None);
        }
        z = [z[1], z[2], next];
        fz = [fz[1], fz[2], f(next)?];
        if step.norm() <= tol * (1.0 + next.norm()) || fz[2].norm() == 0.0 {
            return Ok(Some(Converged { z: next, iterations: it + 1 }));
        }
    }
    Ok(None)
}
