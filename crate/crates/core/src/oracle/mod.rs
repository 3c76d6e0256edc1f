//! Finite-difference cross-check: a three-point discretization of the
//! operator turned into the matrix `W^-1 A`, solved densely, and
//! extrapolated over two meshes.
//!
//! Coefficient breakpoints sit halfway between mesh nodes, so every node's
//! control volume lies inside one smooth piece and the scheme stays second
//! order across jumps in `p`, `q` and `w`.

pub mod eigen;

use std::io::Write;

use num_complex::Complex64;
use rayon::join;

use crate::coefficients::Problem;
use crate::error::{Error, Result};

pub use eigen::Matrix;

/// Smallest `|w|` accepted at a node.
pub const W_EPS: f64 = 1e-12;

/// Mesh refinement factor between the two extrapolation meshes.
pub const REFINE: usize = 3;

/// Symmetric tridiagonal `A` (Dirichlet rows removed) and diagonal `W`.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub h: f64,
    pub nodes: Vec<f64>,
    pub diag: Vec<f64>,
    /// `off[i]` couples nodes `i` and `i + 1`.
    pub off: Vec<f64>,
    pub w: Vec<f64>,
}

impl DiscreteOperator {
    pub fn n_interior(&self) -> usize {
        self.nodes.len()
    }

    /// Dense `W^-1 A`.
    pub fn matrix(&self) -> Matrix {
        let n = self.n_interior();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i] / self.w[i];
            if i + 1 < n {
                m[i][i + 1] = self.off[i] / self.w[i];
                m[i + 1][i] = self.off[i] / self.w[i + 1];
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().zip(&self.w).map(|(d, w)| d / w).sum()
    }

    /// Plain text dump: the dimension on the first line, then one row of
    /// `W^-1 A` per line.
    pub fn write_matrix<W: Write>(&self, mut out: W) -> Result<()> {
        let m = self.matrix();
        writeln!(out, "{}", m.len())?;
        for row in &m {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn aligned(prob: &Problem, cells: usize) -> bool {
    let iv = prob.interval();
    let h = iv.len() / cells as f64;
    prob.breakpoints().iter().filter(|&&c| c > iv.a && c < iv.b).all(|&c| {
        let t = (c - iv.a) / h - 0.5;
        (t - t.round()).abs() < 1e-9 && t.round() >= 0.0
    })
}

/// Smallest cell count `>= min_cells` that puts every interior breakpoint
/// at a cell midpoint. Refining by an odd factor preserves the property.
pub fn aligned_cells(prob: &Problem, min_cells: usize) -> Result<usize> {
    let start = min_cells.max(4);
    (start..start * 8 + 64)
        .find(|&n| aligned(prob, n))
        .ok_or_else(|| Error::NotSupported(format!("no mesh near {min_cells} cells puts breakpoints at midpoints")))
}

/// Value of `p` at a flux point; across a jump the harmonic mean of the
/// one-sided limits.
fn flux_p(prob: &Problem, x: f64) -> Result<f64> {
    let right = prob.p().eval(x)?;
    let left = prob.p().eval_left(x)?;
    Ok(if left == right { right } else { 2.0 * left * right / (left + right) })
}

/// Second-order three-point scheme on `cells` uniform cells.
pub fn discretize(prob: &Problem, cells: usize) -> Result<DiscreteOperator> {
    if cells < 4 {
        return Err(Error::InvalidProblem(format!("need at least 4 cells, got {cells}")));
    }
    if !aligned(prob, cells) {
        return Err(Error::NotSupported(format!("{cells} cells do not put every breakpoint at a cell midpoint")));
    }
    let iv = prob.interval();
    let h = iv.len() / cells as f64;
    let n = cells - 1;
    let x = |i: usize| if i == cells { iv.b } else { iv.a + i as f64 * h };
    let flux: Vec<f64> = (0..cells).map(|i| flux_p(prob, iv.a + (i as f64 + 0.5) * h)).collect::<Result<_>>()?;
    let h2 = h * h;
    let mut nodes = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 1..cells {
        let xi = x(i);
        let wi = prob.w().eval(xi)?;
        if wi.abs() <= W_EPS {
            return Err(Error::NotSupported(format!("w vanishes at node x = {xi}")));
        }
        nodes.push(xi);
        diag.push((flux[i - 1] + flux[i]) / h2 + prob.q().eval(xi)?);
        w.push(wi);
    }
    let off = (1..n).map(|i| -flux[i] / h2).collect();
    Ok(DiscreteOperator { h, nodes, diag, off, w })
}

/// All eigenvalues of the pencil `(A, W)`, with a trace check.
pub fn pencil_eigenvalues(dop: &DiscreteOperator) -> Result<Vec<Complex64>> {
    let vals = eigen::eigenvalues(dop.matrix())?;
    let sum: Complex64 = vals.iter().sum();
    let trace = dop.trace();
    let size: f64 = vals.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
    if (sum.re - trace).abs() > 1e-8 * size || sum.im.abs() > 1e-8 * size {
        return Err(Error::Integrity(format!("eigenvalue sum {sum} differs from trace {trace}")));
    }
    Ok(vals)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrapolated {
    pub lambda: Complex64,
    pub error: f64,
    pub coarse: Complex64,
    pub fine: Complex64,
    /// Another candidate lies within the error estimate, so the matching
    /// across meshes is not trustworthy.
    pub cluster: bool,
}

/// Richardson extrapolation over `cells` and `REFINE * cells` cells for
/// every coarse eigenvalue with `|lambda| <= radius`.
pub fn extrapolate(prob: &Problem, cells: usize, radius: f64) -> Result<Vec<Extrapolated>> {
    let coarse_cells = aligned_cells(prob, cells)?;
    let (coarse, fine) = join(
        || discretize(prob, coarse_cells).and_then(|d| pencil_eigenvalues(&d)),
        || discretize(prob, REFINE * coarse_cells).and_then(|d| pencil_eigenvalues(&d)),
    );
    let (coarse, fine) = (coarse?, fine?);
    let r2 = (REFINE * REFINE) as f64;
    let mut out: Vec<Extrapolated> = Vec::new();
    let mut claimed: Vec<usize> = Vec::new();
    for &c in coarse.iter().filter(|z| z.norm() <= radius) {
        let mut order: Vec<usize> = (0..fine.len()).collect();
        order.sort_by(|&a, &b| (fine[a] - c).norm().total_cmp(&(fine[b] - c).norm()));
        let j = order[0];
        let f = fine[j];
        let error = (f - c).norm() / (r2 - 1.0);
        let runner_up = order.get(1).map_or(f64::INFINITY, |&k| (fine[k] - c).norm());
        let cluster = claimed.contains(&j) || runner_up <= (f - c).norm() + 2.0 * error;
        claimed.push(j);
        out.push(Extrapolated { lambda: (r2 * f - c) / (r2 - 1.0), error, coarse: c, fine: f, cluster });
    }
    // a fine eigenvalue claimed twice marks both claimants
    for i in 0..out.len() {
        if out.iter().enumerate().any(|(k, e)| k != i && e.fine == out[i].fine) {
            out[i].cluster = true;
        }
    }
    Ok(out)
}

/// Relative gap below which neighbouring shooting eigenvalues are compared
/// with the oracle as one cluster. The members of a split double eigenvalue
/// converge at first order but their centroid converges at second order.
pub const CLUSTER_GAP: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct Agreement {
    /// Shooting eigenvalues of the cluster, repeated by multiplicity.
    pub shooting: Vec<Complex64>,
    pub oracle: Vec<Complex64>,
    pub distance: f64,
    pub tolerance: f64,
}

impl Agreement {
    pub fn ok(&self) -> bool {
        self.distance <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossCheck {
    pub agreements: Vec<Agreement>,
    /// Oracle eigenvalues inside the comparison disk with no shooting partner.
    pub unmatched_oracle: Vec<Complex64>,
}

impl CrossCheck {
    pub fn ok(&self) -> bool {
        self.unmatched_oracle.is_empty() && self.agreements.iter().all(Agreement::ok)
    }
}

fn centroid(zs: &[Complex64]) -> Complex64 {
    zs.iter().sum::<Complex64>() / zs.len() as f64
}

/// Compares shooting eigenvalues `(lambda, multiplicity)` in the closed
/// upper half-plane with extrapolated oracle values, inside `|lambda| <=
/// radius`. Oracle values near the rim are only required to have a partner
/// when they lie within `0.9 * radius`.
pub fn cross_check(shooting: &[(Complex64, u32)], oracle: &[Extrapolated], radius: f64) -> CrossCheck {
    let mut pts: Vec<Complex64> = shooting
        .iter()
        .filter(|(z, _)| z.norm() <= radius && z.im >= 0.0)
        .flat_map(|&(z, m)| std::iter::repeat(z).take(m as usize))
        .collect();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in pts {
        match clusters.last_mut() {
            Some(c) if (z - c[c.len() - 1]).norm() <= CLUSTER_GAP * (1.0 + z.norm()) => c.push(z),
            _ => clusters.push(vec![z]),
        }
    }
    let upper: Vec<&Extrapolated> = oracle.iter().filter(|e| e.lambda.im >= -1e-12).collect();
    let mut claimed = vec![false; upper.len()];
    let mut agreements = Vec::new();
    for c in clusters {
        let center = centroid(&c);
        let mut order: Vec<usize> = (0..upper.len()).collect();
        order.sort_by(|&a, &b| (upper[a].lambda - center).norm().total_cmp(&(upper[b].lambda - center).norm()));
        let picked: Vec<usize> = order.into_iter().take(c.len()).collect();
        for &k in &picked {
            claimed[k] = true;
        }
        let vals: Vec<Complex64> = picked.iter().map(|&k| upper[k].lambda).collect();
        let error = picked.iter().map(|&k| upper[k].error).fold(0.0, f64::max);
        let distance = if vals.len() == c.len() { (centroid(&vals) - center).norm() } else { f64::INFINITY };
        agreements.push(Agreement {
            tolerance: error.max(1e-4 * (1.0 + center.norm())),
            shooting: c,
            oracle: vals,
            distance,
        });
    }
    let unmatched_oracle = upper
        .iter()
        .zip(&claimed)
        .filter(|(e, &c)| !c && e.lambda.norm() <= 0.9 * radius)
        .map(|(e, _)| e.lambda)
        .collect();
    CrossCheck { agreements, unmatched_oracle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn alignment_rules() {
        assert_eq!(aligned_cells(&fixtures::p0(), 100).unwrap(), 100);
        let n = aligned_cells(&fixtures::p1(3.0), 100).unwrap();
        assert_eq!(n, 101);
        assert!(aligned(&fixtures::p1(3.0), 3 * n));
        let n = aligned_cells(&fixtures::p2(), 100).unwrap();
        assert_eq!(n % 4, 2);
        assert!(discretize(&fixtures::p1(3.0), 100).is_err());
    }

    #[test]
    fn operator_is_symmetric_tridiagonal() {
        let d = discretize(&fixtures::p2(), 10).unwrap();
        assert_eq!(d.n_interior(), 9);
        assert_eq!(d.off.len(), 8);
        assert!(d.w.iter().all(|w| w.abs() == 1.0));
        let h2 = d.h * d.h;
        assert!((d.diag[0] - (2.0 / h2 + fixtures::P2_Q)).abs() < 1e-9);
    }

    #[test]
    fn p0_low_eigenvalues() {
        let d = discretize(&fixtures::p0(), 100).unwrap();
        let vals = pencil_eigenvalues(&d).unwrap();
        for (k, z) in vals.iter().take(5).enumerate() {
            let want = ((k + 1) * (k + 1)) as f64;
            assert!((z.re - want).abs() < 5e-3 * want, "{z} vs {want}");
        }
    }

    #[test]
    fn p0_extrapolated() {
        let ex = extrapolate(&fixtures::p0(), 100, 30.0).unwrap();
        assert_eq!(ex.len(), 5);
        for (k, e) in ex.iter().enumerate() {
            let want = ((k + 1) * (k + 1)) as f64;
            assert!((e.lambda.re - want).abs() < 1e-5, "{} vs {want}", e.lambda);
            assert!(!e.cluster);
        }
    }

    #[test]
    fn split_pair_is_compared_by_centroid() {
        let ex = |z: f64| Extrapolated {
            lambda: Complex64::new(z, 0.0),
            error: 1e-3,
            coarse: Complex64::new(z, 0.0),
            fine: Complex64::new(z, 0.0),
            cluster: false,
        };
        let oracle = [ex(6.09), ex(6.21), ex(48.6)];
        let shooting = [(Complex64::new(6.1466, 0.0), 1), (Complex64::new(6.1534, 0.0), 1), (Complex64::new(48.6, 0.0), 1)];
        let cc = cross_check(&shooting, &oracle, 60.0);
        assert_eq!(cc.agreements.len(), 2);
        assert!(cc.ok(), "{cc:?}");
        let double = [(Complex64::new(6.15, 0.0), 2), (Complex64::new(48.6, 0.0), 1)];
        assert!(cross_check(&double, &oracle, 60.0).ok());
        let missing = [(Complex64::new(48.6, 0.0), 1)];
        assert_eq!(cross_check(&missing, &oracle, 60.0).unmatched_oracle.len(), 2);
    }

    #[test]
    fn p1_three_has_imaginary_pair() {
        let d = discretize(&fixtures::p1(-3.0), 201).unwrap();
        let vals = pencil_eigenvalues(&d).unwrap();
        let nonreal: Vec<_> = vals.iter().filter(|z| z.im.abs() > 1e-8).collect();
        assert_eq!(nonreal.len(), 2);
        assert!(nonreal.iter().all(|z| z.re.abs() < 1e-8));
        assert_eq!(nonreal[0].conj(), *nonreal[1]);
    }
}
