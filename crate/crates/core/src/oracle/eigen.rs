//! Dense non-symmetric eigenvalues: balancing, reduction to Hessenberg
//! form by stabilized elimination, and the Francis double-shift QR sweep.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major square matrix.
pub type Matrix = Vec<Vec<f64>>;

const MAX_ITS: usize = 60;

/// Diagonal similarity with powers of two that equalizes row and column
/// norms. Eigenvalues are unchanged.
pub fn balance(a: &mut Matrix) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for v in a[i].iter_mut() {
                    *v *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

/// Reduces `a` to upper Hessenberg form in place by Gaussian elimination
/// with partial pivoting; entries below the subdiagonal are zeroed.
pub fn hessenberg(a: &mut Matrix) {
    let n = a.len();
    for m in 1..n.saturating_sub(1) {
        let mut x: f64 = 0.0;
        let mut piv = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                piv = j;
            }
        }
        if piv != m {
            a.swap(piv, m);
            for row in a.iter_mut() {
                row.swap(piv, m);
            }
        }
        if x == 0.0 {
            continue;
        }
        for i in m + 1..n {
            let y = a[i][m - 1];
            if y == 0.0 {
                continue;
            }
            let y = y / x;
            a[i][m - 1] = y;
            let (top, bottom) = a.split_at_mut(i);
            let pivot_row = &top[m];
            for (dst, src) in bottom[0][m..].iter_mut().zip(&pivot_row[m..]) {
                *dst -= y * src;
            }
            for row in a.iter_mut() {
                row[m] += y * row[i];
            }
        }
    }
    for i in 2..n {
        for v in a[i][..i - 1].iter_mut() {
            *v = 0.0;
        }
    }
}

/// All eigenvalues of an upper Hessenberg matrix; `a` is destroyed.
pub fn hqr(a: &mut Matrix) -> Result<Vec<Complex64>> {
    let n = a.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(out);
    }
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for (i, row) in a.iter().enumerate() {
        for v in &row[i.saturating_sub(1)..] {
            anorm += v.abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z): (f64, f64, f64, f64, f64, f64, f64, f64);
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 1 {
                let (lu, lm) = (l as usize, l as usize - 1);
                s = a[lm][lm].abs() + a[lu][lu].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[lu][lm].abs() <= eps * s {
                    a[lu][lm] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            x = a[nu][nu];
            if l == nn {
                out[nu] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            y = a[nu - 1][nu - 1];
            w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    out[nu - 1] = Complex64::new(x + z, 0.0);
                    out[nu] = Complex64::new(if z != 0.0 { x - w / z } else { x + z }, 0.0);
                } else {
                    out[nu] = Complex64::new(x + p, -z);
                    out[nu - 1] = Complex64::new(x + p, z);
                }
                nn -= 2;
                break;
            }
            if its == MAX_ITS {
                return Err(Error::QrNoConvergence { deflated: n - 1 - nu, n });
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    a[i][i] -= x;
                }
                s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let lu = l as usize;
            let mut m = nu - 2;
            loop {
                z = a[m][m];
                r = x - z;
                s = y - z;
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s;
                r = a[m + 2][m + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            for k in m..nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k + 1 != nu { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if lu != m {
                        a[k][k - 1] = -a[k][k - 1];
                    }
                } else {
                    a[k][k - 1] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;
                for j in k..=nu {
                    p = a[k][j] + q * a[k + 1][j];
                    if k + 1 != nu {
                        p += r * a[k + 2][j];
                        a[k + 2][j] -= p * z;
                    }
                    a[k + 1][j] -= p * y;
                    a[k][j] -= p * x;
                }
                let mmin = nu.min(k + 3);
                for row in a[lu..=mmin].iter_mut() {
                    p = x * row[k] + y * row[k + 1];
                    if k + 1 != nu {
                        p += z * row[k + 2];
                        row[k + 2] -= p * r;
                    }
                    row[k + 1] -= p * q;
                    row[k] -= p;
                }
            }
        }
    }
    Ok(out)
}

/// Replaces each eigenvalue with positive imaginary part and its nearest
/// partner in the lower half-plane by an exact conjugate pair.
pub fn pair_conjugates(vals: &mut [Complex64]) {
    let n = vals.len();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] || vals[i].im <= 0.0 {
            continue;
        }
        let target = vals[i].conj();
        let partner = (0..n)
            .filter(|&j| !used[j] && j != i && vals[j].im < 0.0)
            .min_by(|&a, &b| (vals[a] - target).norm().total_cmp(&(vals[b] - target).norm()));
        if let Some(j) = partner {
            let re = 0.5 * (vals[i].re + vals[j].re);
            let im = 0.5 * (vals[i].im - vals[j].im);
            vals[i] = Complex64::new(re, im);
            vals[j] = Complex64::new(re, -im);
            used[i] = true;
            used[j] = true;
        }
    }
}

/// Eigenvalues of a general real matrix, sorted by real then imaginary part.
pub fn eigenvalues(mut a: Matrix) -> Result<Vec<Complex64>> {
    balance(&mut a);
    hessenberg(&mut a);
    let mut vals = hqr(&mut a)?;
    pair_conjugates(&mut vals);
    vals.sort_by(|u, v| u.re.total_cmp(&v.re).then(u.im.total_cmp(&v.im)));
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_matrix_is_exact() {
        let a = vec![vec![3.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 7.5]];
        let v = eigenvalues(a).unwrap();
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![-1.0, 3.0, 7.5]);
        assert!(v.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn rotation_block() {
        let a = vec![vec![1.0, -2.0], vec![2.0, 1.0]];
        let v = eigenvalues(a).unwrap();
        assert!((v[0] - Complex64::new(1.0, -2.0)).norm() < 1e-14);
        assert!((v[1] - Complex64::new(1.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 = (x-1)(x-2)(x-3)(x-4)
        let a = vec![
            vec![10.0, -35.0, 50.0, -24.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let v = eigenvalues(a).unwrap();
        for (k, z) in v.iter().enumerate() {
            assert!((z.re - (k + 1) as f64).abs() < 1e-10 && z.im.abs() < 1e-10);
        }
    }

    #[test]
    fn random_matrix_trace_and_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let a: Matrix = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let trace: f64 = (0..n).map(|i| a[i][i]).sum();
        let v = eigenvalues(a.clone()).unwrap();
        let sum: Complex64 = v.iter().sum();
        assert!((sum.re - trace).abs() < 1e-10);
        assert!(sum.im.abs() < 1e-10);
        // each eigenvalue makes a - lambda I singular: check smallest pivot of LU
        for z in v.iter().filter(|z| z.im == 0.0) {
            let mut m: Matrix = a.clone();
            for (i, row) in m.iter_mut().enumerate() {
                row[i] -= z.re;
            }
            assert!(min_pivot(m) < 1e-8);
        }
    }

    fn min_pivot(mut m: Matrix) -> f64 {
        let n = m.len();
        let mut smallest = f64::INFINITY;
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, piv);
            smallest = smallest.min(m[k][k].abs());
            if m[k][k] == 0.0 {
                return 0.0;
            }
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        smallest
    }

    #[test]
    fn hessenberg_preserves_spectrum_shape() {
        let mut a = vec![
            vec![4.0, 1.0, -2.0, 2.0],
            vec![1.0, 2.0, 0.0, 1.0],
            vec![-2.0, 0.0, 3.0, -2.0],
            vec![2.0, 1.0, -2.0, -1.0],
        ];
        hessenberg(&mut a);
        for i in 2..4 {
            for j in 0..i - 1 {
                assert_eq!(a[i][j], 0.0);
            }
        }
        let trace: f64 = (0..4).map(|i| a[i][i]).sum();
        assert!((trace - 8.0).abs() < 1e-12);
    }
}
