//! TOML problem files.
//!
//! ```toml
//! [interval]
//! a = -1.0
//! b = 1.0
//!
//! [[p]]
//! upto = 1.0
//! kind = "constant"
//! values = [1.0]
//!
//! [[q]]
//! upto = 1.0
//! kind = "polynomial"   # coefficients of 1, x, x^2, x^3
//! values = [0.0, 2.0]
//!
//! [[w]]
//! upto = 0.0
//! kind = "constant"
//! values = [-1.0]
//!
//! [[w]]
//! upto = 1.0
//! kind = "constant"
//! values = [1.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::{Interval, PiecewiseCoefficient, Problem, Segment};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Constant,
    Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub upto: f64,
    pub kind: Kind,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub interval: IntervalSpec,
    pub p: Vec<PieceSpec>,
    pub q: Vec<PieceSpec>,
    pub w: Vec<PieceSpec>,
}

fn segment(name: &str, spec: &PieceSpec) -> Result<Segment> {
    match spec.kind {
        Kind::Constant => match spec.values.as_slice() {
            [c] => Ok(Segment::Constant(*c)),
            v => Err(Error::Parse(format!("{name}: a constant piece takes one value, got {}", v.len()))),
        },
        Kind::Polynomial => {
            if spec.values.is_empty() || spec.values.len() > 4 {
                return Err(Error::Parse(format!(
                    "{name}: a polynomial piece takes 1 to 4 coefficients, got {}",
                    spec.values.len()
                )));
            }
            Ok(Segment::Polynomial(spec.values.clone()))
        }
    }
}

fn coefficient(name: &str, a: f64, pieces: &[PieceSpec]) -> Result<PiecewiseCoefficient> {
    let segs = pieces
        .iter()
        .map(|s| Ok((s.upto, segment(name, s)?)))
        .collect::<Result<Vec<_>>>()?;
    PiecewiseCoefficient::from_pieces(a, segs).map_err(|e| Error::Parse(format!("{name}: {e}")))
}

fn piece_specs(c: &PiecewiseCoefficient) -> Vec<PieceSpec> {
    c.breakpoints()[1..]
        .iter()
        .zip(c.segments())
        .map(|(&upto, s)| match s {
            Segment::Constant(v) => PieceSpec { upto, kind: Kind::Constant, values: vec![*v] },
            Segment::Polynomial(v) => PieceSpec { upto, kind: Kind::Polynomial, values: v.clone() },
        })
        .collect()
}

impl ProblemFile {
    pub fn from_problem(prob: &Problem) -> Self {
        let iv = prob.interval();
        Self {
            interval: IntervalSpec { a: iv.a, b: iv.b },
            p: piece_specs(prob.p()),
            q: piece_specs(prob.q()),
            w: piece_specs(prob.w()),
        }
    }

    pub fn to_problem(&self) -> Result<Problem> {
        let iv = Interval::new(self.interval.a, self.interval.b)?;
        let p = coefficient("p", iv.a, &self.p)?;
        let q = coefficient("q", iv.a, &self.q)?;
        let w = coefficient("w", iv.a, &self.w)?;
        for (name, c) in [("p", &p), ("q", &q), ("w", &w)] {
            if c.interval() != iv {
                return Err(Error::Parse(format!(
                    "{name} covers [{}, {}] instead of [{}, {}]",
                    c.interval().a,
                    c.interval().b,
                    iv.a,
                    iv.b
                )));
            }
        }
        Problem::new(p, q, w)
    }
}

pub fn parse(text: &str) -> Result<Problem> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_problem()
}

pub fn to_toml(prob: &Problem) -> Result<String> {
    toml::to_string(&ProblemFile::from_problem(prob)).map_err(|e| Error::Parse(e.to_string()))
}

pub fn load(path: &Path) -> Result<Problem> {
    parse(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trip_fixtures() {
        for prob in [fixtures::p0(), fixtures::p1(-22.0), fixtures::p2(), fixtures::p2_shifted()] {
            let text = to_toml(&prob).unwrap();
            assert_eq!(parse(&text).unwrap(), prob, "{text}");
        }
    }

    #[test]
    fn parses_documented_example() {
        let text = r#"
            [interval]
            a = -1.0
            b = 1.0
            [[p]]
            upto = 1.0
            kind = "constant"
            values = [1.0]
            [[q]]
            upto = 1.0
            kind = "polynomial"
            values = [0.0, 2.0]
            [[w]]
            upto = 0.0
            kind = "constant"
            values = [-1.0]
            [[w]]
            upto = 1.0
            kind = "constant"
            values = [1.0]
        "#;
        let prob = parse(text).unwrap();
        assert_eq!(prob.q().eval(0.5).unwrap(), 1.0);
        assert_eq!(prob.w().eval(-0.5).unwrap(), -1.0);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(parse("[interval]\na = 0.0\n"), Err(Error::Parse(_))));
        let short = r#"
            [interval]
            a = 0.0
            b = 2.0
            [[p]]
            upto = 1.0
            kind = "constant"
            values = [1.0]
            [[q]]
            upto = 2.0
            kind = "constant"
            values = [0.0]
            [[w]]
            upto = 2.0
            kind = "constant"
            values = [1.0]
        "#;
        assert!(matches!(parse(short), Err(Error::Parse(_))));
        let two_values = short.replace("upto = 1.0\n            kind = \"constant\"\n            values = [1.0]", "upto = 2.0\n            kind = \"constant\"\n            values = [1.0, 2.0]");
        assert!(matches!(parse(&two_values), Err(Error::Parse(_))));
    }
}
