//! Eigenvalue trajectories of the sign-weight family over a range of `q`.

use std::io::Write;

use rayon::prelude::*;
use sl_ghosts::classification::resolved_lambda;
use sl_ghosts::spectrum::{build_inventory, default_rect, Rect, SpectralWindow, Tolerances};
use sl_ghosts::{fixtures, Complex64, Error, Interval, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub q: f64,
    pub real: Vec<RealPoint>,
    /// Upper half-plane only.
    pub complex: Vec<Complex64>,
    pub certified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealPoint {
    pub lambda: f64,
    pub osc_count: Option<usize>,
    /// `int u^2 w / int u^2 |w|`.
    pub weighted_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    RealToComplex,
    ComplexToReal,
    NearCollision,
}

impl EventKind {
    fn as_str(self) -> &'static str {
        match self {
            EventKind::RealToComplex => "real_to_complex",
            EventKind::ComplexToReal => "complex_to_real",
            EventKind::NearCollision => "near_collision",
        }
    }
}

/// A minimum of the distance between neighbouring positive real
/// eigenvalues, located between `q_lo` and `q_hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Collision {
    pub q_lo: f64,
    pub q_hi: f64,
    pub kind: EventKind,
    /// Midpoint of the closest pair on the real side of the event.
    pub lambda: f64,
    pub gap: f64,
}

pub struct SweepSpec {
    pub from: f64,
    pub to: f64,
    pub step: f64,
    /// Use `-q` as the potential, matching `y'' + (q + lambda sgn x) y = 0`.
    pub negate: bool,
    pub lmax: f64,
    pub rect: Option<Rect>,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.to >= self.from) || !self.from.is_finite() || !self.to.is_finite() {
            return Err(Error::InvalidProblem("sweep needs finite from <= to and step > 0".into()));
        }
        let n = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| self.from + k as f64 * self.step).collect())
    }
}

fn point(spec: &SweepSpec, q: f64, tol: &Tolerances) -> Result<SweepPoint> {
    let prob = fixtures::p1(if spec.negate { -q } else { q });
    let rect = spec.rect.unwrap_or_else(|| default_rect(&prob));
    let window = SpectralWindow::new(Interval::new(-spec.lmax, spec.lmax)?, rect)?;
    let inv = build_inventory(&prob, window, tol)?;
    let real = inv
        .real_pairs
        .iter()
        .map(|e| RealPoint {
            lambda: resolved_lambda(e, tol.refine).re,
            osc_count: e.osc_count,
            weighted_ratio: e.forms.map_or(f64::NAN, |f| f.weighted_sq.re / f.scale),
        })
        .collect();
    let complex = inv.complex_pairs.iter().filter(|e| e.lambda.im > 0.0).map(|e| e.lambda).collect();
    Ok(SweepPoint { q, real, complex, certified: inv.is_certified() })
}

/// All points, in parameter order whatever order they finish in.
pub fn run(spec: &SweepSpec, tol: &Tolerances) -> Result<Vec<SweepPoint>> {
    spec.values()?.into_par_iter().map(|q| point(spec, q, tol)).collect()
}

/// Smallest gap between neighbouring non-negative real eigenvalues and the
/// midpoint of that pair.
fn closest_pair(p: &SweepPoint) -> Option<(f64, f64)> {
    let mut l: Vec<f64> = p.real.iter().map(|r| r.lambda).filter(|&l| l >= 0.0).collect();
    l.sort_by(f64::total_cmp);
    l.windows(2)
        .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

pub fn collisions(points: &[SweepPoint]) -> Vec<Collision> {
    let mut out = Vec::new();
    for k in 0..points.len().saturating_sub(1) {
        let (a, b) = (&points[k], &points[k + 1]);
        let kind = match b.complex.len().cmp(&a.complex.len()) {
            std::cmp::Ordering::Greater => EventKind::RealToComplex,
            std::cmp::Ordering::Less => EventKind::ComplexToReal,
            std::cmp::Ordering::Equal => continue,
        };
        let real_side = if kind == EventKind::RealToComplex { a } else { b };
        if let Some((gap, lambda)) = closest_pair(real_side) {
            out.push(Collision { q_lo: a.q, q_hi: b.q, kind, lambda, gap });
        }
    }
    let gaps: Vec<Option<(f64, f64)>> = points.iter().map(closest_pair).collect();
    for k in 1..points.len().saturating_sub(1) {
        let (Some(l), Some(c), Some(r)) = (gaps[k - 1], gaps[k], gaps[k + 1]) else { continue };
        let steady = points[k - 1].complex.len() == points[k].complex.len()
            && points[k].complex.len() == points[k + 1].complex.len();
        // the minimum must belong to the same pair on both sides
        let same_pair = (l.1 - c.1).abs() < 0.5 * (l.0 + c.0 + 1.0) && (r.1 - c.1).abs() < 0.5 * (r.0 + c.0 + 1.0);
        if steady && same_pair && c.0 < l.0 && c.0 < r.0 {
            out.push(Collision {
                q_lo: points[k - 1].q,
                q_hi: points[k + 1].q,
                kind: EventKind::NearCollision,
                lambda: c.1,
                gap: c.0,
            });
        }
    }
    out.sort_by(|a, b| a.q_lo.total_cmp(&b.q_lo).then(a.lambda.total_cmp(&b.lambda)));
    out
}

pub fn write_trajectories<W: Write>(points: &[SweepPoint], mut out: W) -> Result<()> {
    writeln!(out, "q,kind,re,im,osc_count,weighted_ratio,certified")?;
    for p in points {
        for r in &p.real {
            let osc = r.osc_count.map(|n| n.to_string()).unwrap_or_default();
            writeln!(out, "{},real,{},0,{osc},{},{}", p.q, r.lambda, r.weighted_ratio, p.certified)?;
        }
        for z in &p.complex {
            writeln!(out, "{},complex,{},{},,,{}", p.q, z.re, z.im, p.certified)?;
        }
    }
    Ok(())
}

pub fn write_collisions<W: Write>(events: &[Collision], mut out: W) -> Result<()> {
    writeln!(out, "q_lo,q_hi,event,lambda,gap")?;
    for c in events {
        writeln!(out, "{},{},{},{},{}", c.q_lo, c.q_hi, c.kind.as_str(), c.lambda, c.gap)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(q: f64, real: &[f64], complex: usize) -> SweepPoint {
        SweepPoint {
            q,
            real: real.iter().map(|&lambda| RealPoint { lambda, osc_count: None, weighted_ratio: 0.0 }).collect(),
            complex: vec![Complex64::new(1.0, 1.0); complex],
            certified: true,
        }
    }

    #[test]
    fn values_cover_the_range() {
        let spec = SweepSpec { from: 0.0, to: 1.0, step: 0.25, negate: false, lmax: 10.0, rect: None };
        assert_eq!(spec.values().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let bad = SweepSpec { step: 0.0, ..spec };
        assert!(bad.values().is_err());
    }

    #[test]
    fn detects_merges_and_minima() {
        let points = vec![
            pt(0.0, &[1.0, 3.0, 10.0], 0),
            pt(1.0, &[1.8, 2.2, 10.0], 0),
            pt(2.0, &[10.0], 1),
            pt(3.0, &[9.0, 10.0], 1),
            pt(4.0, &[9.6, 10.0], 1),
            pt(5.0, &[9.0, 10.0], 1),
        ];
        let ev = collisions(&points);
        assert_eq!(ev.len(), 2, "{ev:?}");
        assert_eq!(ev[0].kind, EventKind::RealToComplex);
        assert_eq!((ev[0].q_lo, ev[0].q_hi), (1.0, 2.0));
        assert!((ev[0].lambda - 2.0).abs() < 1e-12);
        assert_eq!(ev[1].kind, EventKind::NearCollision);
        assert!((ev[1].gap - 0.4).abs() < 1e-12);
    }
}
