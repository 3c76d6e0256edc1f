//! Piecewise coefficient functions and the Dirichlet problem
//! `-(p y')' + q y = lambda w y`, `y(a) = 0 = y(b)`.
//!
//! Coefficients are right-continuous: at an interior breakpoint `eval`
//! returns the value of the segment to the right. Integrals never sample
//! isolated points, so the convention only matters for point evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidProblem(format!(
                "interval [{a}, {b}] must be finite with a < b"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

/// One smooth piece of a coefficient.
#[derive(Clone, Debug, PartialEq)]
pub enum Segment {
    Constant(f64),
    /// Coefficients of `1, x, x^2, x^3` in the global variable `x`.
    Polynomial(Vec<f64>),
}

impl Segment {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Segment::Constant(c) => *c,
            Segment::Polynomial(c) => poly::eval(c, x),
        }
    }

    fn coeffs(&self) -> Vec<f64> {
        match self {
            Segment::Constant(c) => vec![*c],
            Segment::Polynomial(c) => c.clone(),
        }
    }

    fn integral(&self, x0: f64, x1: f64) -> f64 {
        match self {
            Segment::Constant(c) => c * (x1 - x0),
            Segment::Polynomial(c) => poly::integrate(c, x0, x1),
        }
    }

    /// `int max(s * c, 0)` over `[x0, x1]` for `s = +-1`.
    fn signed_part(&self, sign: f64, x0: f64, x1: f64) -> f64 {
        match self {
            Segment::Constant(c) => (sign * c).max(0.0) * (x1 - x0),
            Segment::Polynomial(c) => {
                let mut cuts = vec![x0];
                cuts.extend(poly::real_roots(c).into_iter().filter(|&r| r > x0 && r < x1));
                cuts.push(x1);
                cuts.windows(2)
                    .map(|w| {
                        let mid = 0.5 * (w[0] + w[1]);
                        if sign * poly::eval(c, mid) > 0.0 {
                            sign * poly::integrate(c, w[0], w[1])
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
        }
    }

    /// Minimum and maximum over `[x0, x1]`.
    pub fn range_on(&self, x0: f64, x1: f64) -> (f64, f64) {
        match self {
            Segment::Constant(c) => (*c, *c),
            Segment::Polynomial(c) => poly::range_on(c, x0, x1),
        }
    }

    fn scaled_sum(alpha: f64, s: &Segment, beta: f64, t: &Segment) -> Segment {
        match (s, t) {
            (Segment::Constant(c), Segment::Constant(d)) => Segment::Constant(alpha * c + beta * d),
            _ => {
                let (cs, ct) = (s.coeffs(), t.coeffs());
                let n = cs.len().max(ct.len());
                let combined = (0..n)
                    .map(|k| {
                        alpha * cs.get(k).copied().unwrap_or(0.0)
                            + beta * ct.get(k).copied().unwrap_or(0.0)
                    })
                    .collect();
                Segment::Polynomial(combined)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Positive,
    Negative,
}

/// A coefficient that is smooth between consecutive breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseCoefficient {
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
}

impl PiecewiseCoefficient {
    /// `breakpoints` runs from `a` to `b` inclusive and has one more entry
    /// than `segments`.
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Segment>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != segments.len() + 1 {
            return Err(Error::InvalidProblem(
                "need n + 1 breakpoints for n segments".into(),
            ));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidProblem("breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProblem(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        for s in &segments {
            match s {
                Segment::Constant(c) if !c.is_finite() => {
                    return Err(Error::InvalidProblem("non-finite constant segment".into()))
                }
                Segment::Polynomial(c) if c.is_empty() || c.len() > 4 => {
                    return Err(Error::InvalidProblem(
                        "polynomial segments need 1 to 4 coefficients (degree <= 3)".into(),
                    ))
                }
                Segment::Polynomial(c) if c.iter().any(|v| !v.is_finite()) => {
                    return Err(Error::InvalidProblem("non-finite polynomial coefficient".into()))
                }
                _ => {}
            }
        }
        Ok(Self { breakpoints, segments })
    }

    pub fn constant(interval: Interval, c: f64) -> Self {
        Self::new(vec![interval.a, interval.b], vec![Segment::Constant(c)])
            .expect("valid interval")
    }

    /// Builds a coefficient from `(upto, segment)` pairs starting at `a`.
    pub fn from_pieces(a: f64, pieces: Vec<(f64, Segment)>) -> Result<Self> {
        let mut breakpoints = vec![a];
        let mut segments = Vec::with_capacity(pieces.len());
        for (upto, seg) in pieces {
            breakpoints.push(upto);
            segments.push(seg);
        }
        Self::new(breakpoints, segments)
    }

    pub fn interval(&self) -> Interval {
        Interval {
            a: self.breakpoints[0],
            b: *self.breakpoints.last().unwrap(),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Index of the segment whose half-open range `[x_k, x_{k+1})` holds `x`;
    /// `b` belongs to the last segment.
    pub fn segment_index(&self, x: f64) -> usize {
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        interior.partition_point(|&bp| bp <= x)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let iv = self.interval();
        if !iv.contains(x) {
            return Err(Error::Domain { x, a: iv.a, b: iv.b });
        }
        Ok(self.segments[self.segment_index(x)].eval(x))
    }

    /// Left limit at `x` (equal to `eval` away from breakpoints).
    pub fn eval_left(&self, x: f64) -> Result<f64> {
        let iv = self.interval();
        if !iv.contains(x) {
            return Err(Error::Domain { x, a: iv.a, b: iv.b });
        }
        let interior = &self.breakpoints[1..self.breakpoints.len() - 1];
        let k = interior.partition_point(|&bp| bp < x);
        Ok(self.segments[k].eval(x))
    }

    /// Pieces of the coefficient clipped to `range`.
    fn clipped(&self, range: Interval) -> Result<Vec<(f64, f64, &Segment)>> {
        let iv = self.interval();
        if range.a < iv.a || range.b > iv.b {
            return Err(Error::Domain {
                x: if range.a < iv.a { range.a } else { range.b },
                a: iv.a,
                b: iv.b,
            });
        }
        Ok(self
            .breakpoints
            .windows(2)
            .zip(&self.segments)
            .filter_map(|(w, s)| {
                let lo = w[0].max(range.a);
                let hi = w[1].min(range.b);
                (hi > lo).then_some((lo, hi, s))
            })
            .collect())
    }

    pub fn integral(&self, range: Interval) -> Result<f64> {
        Ok(self
            .clipped(range)?
            .into_iter()
            .map(|(lo, hi, s)| s.integral(lo, hi))
            .sum())
    }

    /// `int c_+` or `int c_-` over `range`, with `c_+ = (c + |c|)/2` and
    /// `c_- = (|c| - c)/2`. Exact for every segment kind.
    pub fn integrate_part(&self, part: Part, range: Interval) -> Result<f64> {
        let sign = match part {
            Part::Positive => 1.0,
            Part::Negative => -1.0,
        };
        Ok(self
            .clipped(range)?
            .into_iter()
            .map(|(lo, hi, s)| s.signed_part(sign, lo, hi))
            .sum())
    }

    /// Infimum and supremum over the whole interval.
    pub fn range(&self) -> (f64, f64) {
        self.breakpoints
            .windows(2)
            .zip(&self.segments)
            .map(|(w, s)| s.range_on(w[0], w[1]))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (l, h)| {
                (lo.min(l), hi.max(h))
            })
    }

    /// `alpha * self + beta * other` on the union of both breakpoint sets.
    pub fn linear_combination(alpha: f64, s: &Self, beta: f64, t: &Self) -> Result<Self> {
        if s.interval() != t.interval() {
            return Err(Error::InvalidProblem(
                "cannot combine coefficients on different intervals".into(),
            ));
        }
        let mut bps: Vec<f64> = s.breakpoints.iter().chain(&t.breakpoints).copied().collect();
        bps.sort_by(|x, y| x.total_cmp(y));
        bps.dedup();
        let segments = bps
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                Segment::scaled_sum(
                    alpha,
                    &s.segments[s.segment_index(mid)],
                    beta,
                    &t.segments[t.segment_index(mid)],
                )
            })
            .collect();
        Self::new(bps, segments)
    }

    /// Same values with extra breakpoints inserted.
    pub fn refined(&self, extra: &[f64]) -> Result<Self> {
        let iv = self.interval();
        let mut cuts = self.breakpoints.clone();
        cuts.extend(extra.iter().copied().filter(|&x| x > iv.a && x < iv.b));
        cuts.sort_by(|x, y| x.total_cmp(y));
        cuts.dedup();
        let segments = cuts
            .windows(2)
            .map(|w| self.segments[self.segment_index(0.5 * (w[0] + w[1]))].clone())
            .collect();
        Self::new(cuts, segments)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| match s {
                    Segment::Constant(c) => Segment::Constant(alpha * c),
                    Segment::Polynomial(c) => {
                        Segment::Polynomial(c.iter().map(|v| alpha * v).collect())
                    }
                })
                .collect(),
        }
    }
}

/// A sub-interval on which `p`, `q` and `w` are all smooth.
#[derive(Clone, Debug)]
pub struct Piece {
    pub x0: f64,
    pub x1: f64,
    pub p: Segment,
    pub q: Segment,
    pub w: Segment,
}

impl Piece {
    /// Upper bound of `|lambda w - q| / p` on the piece, for a given `|lambda|`.
    pub fn stiffness(&self, lambda_abs: f64) -> f64 {
        let (pmin, _) = self.p.range_on(self.x0, self.x1);
        let (qlo, qhi) = self.q.range_on(self.x0, self.x1);
        let (wlo, whi) = self.w.range_on(self.x0, self.x1);
        let wmax = wlo.abs().max(whi.abs());
        let qmax = qlo.abs().max(qhi.abs());
        (lambda_abs * wmax + qmax) / pmin
    }

    pub fn p_min(&self) -> f64 {
        self.p.range_on(self.x0, self.x1).0
    }
}

/// Dirichlet problem on `interval` with coefficients `p`, `q`, `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    interval: Interval,
    p: PiecewiseCoefficient,
    q: PiecewiseCoefficient,
    w: PiecewiseCoefficient,
}

impl Problem {
    pub fn new(
        p: PiecewiseCoefficient,
        q: PiecewiseCoefficient,
        w: PiecewiseCoefficient,
    ) -> Result<Self> {
        let interval = p.interval();
        if q.interval() != interval || w.interval() != interval {
            return Err(Error::InvalidProblem(
                "p, q and w must share the same interval".into(),
            ));
        }
        Interval::new(interval.a, interval.b)?;
        check_positive(&p)?;
        let support = w.integrate_part(Part::Positive, interval)?
            + w.integrate_part(Part::Negative, interval)?;
        if support <= 0.0 {
            return Err(Error::InvalidProblem("w vanishes identically".into()));
        }
        Ok(Self { interval, p, q, w })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn p(&self) -> &PiecewiseCoefficient {
        &self.p
    }

    pub fn q(&self) -> &PiecewiseCoefficient {
        &self.q
    }

    pub fn w(&self) -> &PiecewiseCoefficient {
        &self.w
    }

    /// Union of all breakpoints of `p`, `q`, `w`, including `a` and `b`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .p
            .breakpoints()
            .iter()
            .chain(self.q.breakpoints())
            .chain(self.w.breakpoints())
            .copied()
            .collect();
        b.sort_by(|x, y| x.total_cmp(y));
        b.dedup();
        b
    }

    pub fn pieces(&self) -> Vec<Piece> {
        self.breakpoints()
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                Piece {
                    x0: w[0],
                    x1: w[1],
                    p: self.p.segments()[self.p.segment_index(mid)].clone(),
                    q: self.q.segments()[self.q.segment_index(mid)].clone(),
                    w: self.w.segments()[self.w.segment_index(mid)].clone(),
                }
            })
            .collect()
    }

    /// The problem with `w` replaced by `-w`; its eigenvalues are the
    /// negatives of the original ones, with the same eigenfunctions.
    pub fn reflected(&self) -> Self {
        Self {
            interval: self.interval,
            p: self.p.clone(),
            q: self.q.clone(),
            w: self.w.scaled(-1.0),
        }
    }

    /// The same operator with weight one.
    pub fn with_unit_weight(&self) -> Self {
        Self {
            interval: self.interval,
            p: self.p.clone(),
            q: self.q.clone(),
            w: PiecewiseCoefficient::constant(self.interval, 1.0),
        }
    }

    /// `lambda w - q` as a piecewise coefficient.
    pub fn effective_potential(&self, lambda: f64) -> Result<PiecewiseCoefficient> {
        PiecewiseCoefficient::linear_combination(lambda, &self.w, -1.0, &self.q)
    }
}

/// Which of the two quadratic forms is sign-definite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    /// Weight form definite, Dirichlet form indefinite.
    RightDefinite,
    /// Weight form indefinite, Dirichlet form definite.
    LeftDefinite,
    /// Both forms indefinite.
    NonDefinite,
    /// Both forms definite.
    DefiniteBoth,
}

impl Definiteness {
    /// Definite weight, whatever the Dirichlet form does.
    pub fn is_right_definite(self) -> bool {
        matches!(self, Definiteness::RightDefinite | Definiteness::DefiniteBoth)
    }

    /// Definite Dirichlet form, whatever the weight does.
    pub fn is_left_definite(self) -> bool {
        matches!(self, Definiteness::LeftDefinite | Definiteness::DefiniteBoth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessReport {
    pub class: Definiteness,
    pub weight_indefinite: bool,
    pub form_indefinite: bool,
    /// Lowest eigenvalue of `-(p y')' + q y = mu y` with Dirichlet ends.
    pub smallest_auxiliary: f64,
}

/// Lowest Dirichlet eigenvalue of the operator with unit weight, by
/// bisection on the interior zero count of the solution from `a`.
pub fn smallest_auxiliary_eigenvalue(prob: &Problem) -> Result<f64> {
    let aux = prob.with_unit_weight();
    // Below the lowest eigenvalue the solution from `a` stays positive on
    // `(a, b]`; above it, it has a zero before `b`.
    let below = |mu: f64| -> Result<bool> {
        let sol = crate::shooting::shoot(&aux, num_complex::Complex64::new(mu, 0.0), 1e-11)?;
        Ok(sol.d.re > 0.0 && crate::classification::count_zeros(&aux, &sol)? == 0)
    };
    let iv = prob.interval();
    let (qmin, qmax) = prob.q.range();
    let (_, pmax) = prob.p.range();
    let mut lo = qmin - 1.0;
    let mut hi = qmax + std::f64::consts::PI.powi(2) * pmax / iv.len().powi(2) + 1.0;
    if !below(lo)? || below(hi)? {
        return Err(Error::AuxiliarySearch { lo, hi });
    }
    while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn definiteness(prob: &Problem) -> Result<DefinitenessReport> {
    let iv = prob.interval();
    let weight_indefinite = prob.w.integrate_part(Part::Positive, iv)? > 0.0
        && prob.w.integrate_part(Part::Negative, iv)? > 0.0;
    let mu = smallest_auxiliary_eigenvalue(prob)?;
    let form_indefinite = mu < 0.0;
    let class = match (weight_indefinite, form_indefinite) {
        (true, true) => Definiteness::NonDefinite,
        (true, false) => Definiteness::LeftDefinite,
        (false, true) => Definiteness::RightDefinite,
        (false, false) => Definiteness::DefiniteBoth,
    };
    Ok(DefinitenessReport { class, weight_indefinite, form_indefinite, smallest_auxiliary: mu })
}

pub fn definiteness_class(prob: &Problem) -> Result<Definiteness> {
    Ok(definiteness(prob)?.class)
}

fn check_positive(p: &PiecewiseCoefficient) -> Result<()> {
    for (w, s) in p.breakpoints().windows(2).zip(p.segments()) {
        let (x0, x1) = (w[0], w[1]);
        // Chebyshev points of the segment
        const N: usize = 9;
        let sampled_ok = (0..N).all(|k| {
            let t = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * N) as f64).cos();
            s.eval(0.5 * (x0 + x1) + 0.5 * (x1 - x0) * t) > 0.0
        });
        let endpoint_ok = s.eval(x0) > 0.0 && s.eval(x1) > 0.0;
        let roots_ok = match s {
            Segment::Constant(_) => true,
            Segment::Polynomial(c) => poly::real_roots(c)
                .into_iter()
                .all(|r| r < x0 || r > x1),
        };
        if !(sampled_ok && endpoint_ok && roots_ok) {
            return Err(Error::InvalidProblem(format!(
                "p must be positive on [{x0}, {x1}]"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn sign_weight_is_right_continuous() {
        let p1 = fixtures::p1(3.0);
        assert_eq!(p1.w().eval(0.5).unwrap(), 1.0);
        assert_eq!(p1.w().eval(-0.5).unwrap(), -1.0);
        assert_eq!(p1.w().eval(0.0).unwrap(), 1.0);
        assert_eq!(p1.w().eval_left(0.0).unwrap(), -1.0);
    }

    #[test]
    fn two_turning_point_potential() {
        let p2 = fixtures::p2();
        let q = p2.q().eval(2.0).unwrap();
        assert!((q + 9.0 * std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-12);
        assert!((q + 22.2066).abs() < 1e-4);
    }

    #[test]
    fn evaluation_outside_domain_fails() {
        let p0 = fixtures::p0();
        assert!(matches!(p0.q().eval(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(p0.q().eval(4.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn positive_and_negative_parts() {
        let p1 = fixtures::p1(-22.0);
        let iv = p1.interval();
        assert_eq!(p1.w().integrate_part(Part::Positive, iv).unwrap(), 1.0);
        assert_eq!(p1.q().integrate_part(Part::Negative, iv).unwrap(), 44.0);
        let p2 = fixtures::p2();
        assert_eq!(p2.q().integrate_part(Part::Positive, p2.interval()).unwrap(), 0.0);
    }

    #[test]
    fn polynomial_parts_split_at_roots() {
        // x^2 - 1/4 on [-1, 1]
        let c = PiecewiseCoefficient::new(
            vec![-1.0, 1.0],
            vec![Segment::Polynomial(vec![-0.25, 0.0, 1.0])],
        )
        .unwrap();
        let iv = c.interval();
        // negative part: int_{-1/2}^{1/2} (1/4 - x^2) = 1/4 - 1/12 = 1/6
        let neg = c.integrate_part(Part::Negative, iv).unwrap();
        assert!((neg - 1.0 / 6.0).abs() < 1e-15);
        let pos = c.integrate_part(Part::Positive, iv).unwrap();
        let total = c.integral(iv).unwrap();
        assert!((pos - neg - total).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_p() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let p = PiecewiseCoefficient::new(
            vec![0.0, 1.0],
            vec![Segment::Polynomial(vec![0.5, -1.0])],
        )
        .unwrap();
        let q = PiecewiseCoefficient::constant(iv, 0.0);
        let w = PiecewiseCoefficient::constant(iv, 1.0);
        assert!(Problem::new(p, q, w).is_err());
    }

    #[test]
    fn rejects_zero_weight_and_bad_breakpoints() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let one = PiecewiseCoefficient::constant(iv, 1.0);
        let zero = PiecewiseCoefficient::constant(iv, 0.0);
        assert!(Problem::new(one.clone(), zero.clone(), zero).is_err());
        assert!(PiecewiseCoefficient::new(vec![0.0, 0.5, 0.5, 1.0], vec![
            Segment::Constant(1.0),
            Segment::Constant(1.0),
            Segment::Constant(1.0)
        ])
        .is_err());
        assert!(PiecewiseCoefficient::new(
            vec![0.0, 1.0],
            vec![Segment::Polynomial(vec![1.0, 0.0, 0.0, 0.0, 1.0])]
        )
        .is_err());
    }

    #[test]
    fn definiteness_of_fixtures() {
        use std::f64::consts::PI;
        let p0 = definiteness(&fixtures::p0()).unwrap();
        assert_eq!(p0.class, Definiteness::DefiniteBoth);
        assert!(p0.class.is_right_definite());
        assert!((p0.smallest_auxiliary - 1.0).abs() < 1e-8);

        let pos = definiteness(&fixtures::p1(3.0)).unwrap();
        assert_eq!(pos.class, Definiteness::LeftDefinite);
        assert!((pos.smallest_auxiliary - (PI * PI / 4.0 + 3.0)).abs() < 1e-8);

        let neg = definiteness(&fixtures::p1(-22.0)).unwrap();
        assert_eq!(neg.class, Definiteness::NonDefinite);
        assert!((neg.smallest_auxiliary - (PI * PI / 4.0 - 22.0)).abs() < 1e-8);
    }

    #[test]
    fn effective_potential_merges_breakpoints() {
        let p2 = fixtures::p2();
        let eff = p2.effective_potential(2.0).unwrap();
        assert_eq!(eff.breakpoints(), &[0.0, 1.0, 4.0]);
        let q0 = 9.0 * std::f64::consts::PI.powi(2) / 4.0;
        assert!((eff.eval(0.5).unwrap() - (2.0 + q0)).abs() < 1e-12);
        assert!((eff.eval(3.0).unwrap() - (-2.0 + q0)).abs() < 1e-12);
    }
}
