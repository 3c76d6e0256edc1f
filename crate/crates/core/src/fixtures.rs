//! Named problems used throughout the tests, the CLI and `reproduce`.

use std::f64::consts::PI;

use crate::coefficients::{Interval, PiecewiseCoefficient, Problem, Segment};
use crate::error::{Error, Result};

/// `-y'' = lambda y` on `[0, pi]`.
pub fn p0() -> Problem {
    let iv = Interval::new(0.0, PI).unwrap();
    Problem::new(
        PiecewiseCoefficient::constant(iv, 1.0),
        PiecewiseCoefficient::constant(iv, 0.0),
        PiecewiseCoefficient::constant(iv, 1.0),
    )
    .unwrap()
}

/// `-y'' + q y = lambda sgn(x) y` on `[-1, 1]`.
pub fn p1(q: f64) -> Problem {
    let iv = Interval::new(-1.0, 1.0).unwrap();
    let w = PiecewiseCoefficient::new(
        vec![-1.0, 0.0, 1.0],
        vec![Segment::Constant(-1.0), Segment::Constant(1.0)],
    )
    .unwrap();
    Problem::new(
        PiecewiseCoefficient::constant(iv, 1.0),
        PiecewiseCoefficient::constant(iv, q),
        w,
    )
    .unwrap()
}

pub const P2_Q: f64 = -9.0 * PI * PI / 4.0;

/// Two-turning-point problem on `[0, 4]`: `q = -9 pi^2 / 4`, `w = 1` on
/// `[0, 1)` and `w = -1` on `[1, 4]`.
pub fn p2() -> Problem {
    p2_with_q(P2_Q)
}

/// The same problem with `q = -9 pi^2/4 + w`, i.e. eigenvalues shifted by one.
pub fn p2_shifted() -> Problem {
    let iv = Interval::new(0.0, 4.0).unwrap();
    let q = PiecewiseCoefficient::new(
        vec![0.0, 1.0, 4.0],
        vec![Segment::Constant(P2_Q + 1.0), Segment::Constant(P2_Q - 1.0)],
    )
    .unwrap();
    Problem::new(PiecewiseCoefficient::constant(iv, 1.0), q, p2_weight()).unwrap()
}

fn p2_weight() -> PiecewiseCoefficient {
    PiecewiseCoefficient::new(
        vec![0.0, 1.0, 4.0],
        vec![Segment::Constant(1.0), Segment::Constant(-1.0)],
    )
    .unwrap()
}

fn p2_with_q(q: f64) -> Problem {
    let iv = Interval::new(0.0, 4.0).unwrap();
    Problem::new(
        PiecewiseCoefficient::constant(iv, 1.0),
        PiecewiseCoefficient::constant(iv, q),
        p2_weight(),
    )
    .unwrap()
}

/// Degenerate-ghost parameter of the sign-weight family.
pub const Q_DEG: f64 = 21.99604;

/// Example ids and the constant potential of `-y'' + q y = lambda sgn(x) y`
/// that realizes each of them. The worked examples are stated for
/// `y'' + (q + lambda sgn x) y = 0`, so the potential is `-q`.
pub const EXAMPLES: &[(&str, f64)] = &[
    ("q3", -3.0),
    ("q15", -15.0),
    ("q33", -33.0),
    ("qdeg", -Q_DEG),
    ("q4pi2", -4.0 * PI * PI),
    ("qm22", -22.0),
    ("qm419", -41.9),
];

pub const EXAMPLE_IDS: &[&str] = &["q3", "q15", "q33", "qdeg", "q4pi2", "qm22", "qm419", "tturn"];

/// Problem for a worked-example id.
pub fn example(id: &str) -> Result<Problem> {
    if id == "tturn" {
        return Ok(p2());
    }
    EXAMPLES
        .iter()
        .find(|(name, _)| *name == id)
        .map(|&(_, q)| p1(q))
        .ok_or_else(|| Error::InvalidProblem(format!("unknown example id '{id}'")))
}

/// Resolves `P0`, `P1` (with `q`), `P2`, `P2S` or an example id.
pub fn by_name(name: &str, q: Option<f64>) -> Result<Problem> {
    match name.to_ascii_uppercase().as_str() {
        "P0" => Ok(p0()),
        "P1" => q
            .map(p1)
            .ok_or_else(|| Error::InvalidProblem("fixture P1 needs a value for q".into())),
        "P2" => Ok(p2()),
        "P2S" => Ok(p2_shifted()),
        _ => example(name),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_names() {
        assert!(by_name("p0", None).is_ok());
        assert!(by_name("P1", None).is_err());
        assert_eq!(by_name("P1", Some(2.0)).unwrap().q().eval(0.3).unwrap(), 2.0);
        assert_eq!(by_name("qm22", None).unwrap().q().eval(0.0).unwrap(), -22.0);
        assert_eq!(by_name("q15", None).unwrap().q().eval(0.0).unwrap(), -15.0);
        assert!(by_name("nope", None).is_err());
    }

    #[test]
    fn shifted_two_turning_point_potential() {
        let p = p2_shifted();
        assert_eq!(p.q().eval(0.5).unwrap(), P2_Q + 1.0);
        assert_eq!(p.q().eval(2.0).unwrap(), P2_Q - 1.0);
    }
}
