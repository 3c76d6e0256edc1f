//! Spectra of non-definite Sturm-Liouville problems
//! `-(p y')' + q y = lambda w y`, `y(a) = 0 = y(b)`, with sign-changing `w`.

pub mod analysis;
pub mod classification;
pub mod coefficients;
pub mod error;
pub mod fixtures;
pub mod ode;
pub mod oracle;
mod poly;
pub mod problem_file;
pub mod quadrature;
pub mod reproduce;
pub mod roots;
pub mod shooting;
pub mod spectrum;

pub use coefficients::{Interval, Part, PiecewiseCoefficient, Problem, Segment};
pub use error::{Error, Result};
pub use num_complex::Complex64;
