//! Locating eigenvalues: sign-change scans on the real axis, argument
//! principle counts on rectangles, and Newton refinement of non-real zeros.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classification::{self, FormValues, GhostClass};
use crate::coefficients::{Interval, Part, Problem};
use crate::error::{Error, Result};
use crate::poly;
use crate::quadrature::panel_rule;
use crate::roots;
use crate::shooting::{self, ShotSolution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Local error target of the shooting integrator.
    pub shoot: f64,
    /// Target accuracy of refined eigenvalues.
    pub refine: f64,
    /// Absolute `|K15 - G7|` target per contour panel.
    pub quad: f64,
    /// Relative threshold for degenerate ghosts.
    pub tol_deg: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { shoot: 1e-11, refine: 1e-10, quad: 1e-6, tol_deg: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !finite || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidProblem(format!(
                "rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}] has no area"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    /// Square of half-side `r` centred at `c`.
    pub fn square(c: Complex64, r: f64) -> Self {
        Self { re_min: c.re - r, re_max: c.re + r, im_min: c.im - r, im_max: c.im + r }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn expanded(&self, frac: f64) -> Self {
        let (dw, dh) = (frac * self.width(), frac * self.height());
        Self {
            re_min: self.re_min - dw,
            re_max: self.re_max + dw,
            im_min: self.im_min - dh,
            im_max: self.im_max + dh,
        }
    }

    /// Counter-clockwise corners starting at the lower left.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Outward perturbation used when the contour passes too close to a
    /// zero. Upper-half rectangles keep `im_min > 0`.
    fn perturbed(&self, attempt: usize) -> Self {
        let k = attempt as f64;
        let (w, h) = (self.width(), self.height());
        let im_min = if self.im_min > 0.0 {
            self.im_min * 0.8f64.powi(attempt as i32)
        } else {
            self.im_min - 0.0071 * h * k
        };
        Self {
            re_min: self.re_min - 0.0137 * w * k,
            re_max: self.re_max + 0.0113 * w * k,
            im_min,
            im_max: self.im_max + 0.0127 * h * k,
        }
    }

    /// Halves along the longer side, cutting at fraction `t`.
    fn split(&self, t: f64) -> (Self, Self) {
        if self.width() >= self.height() {
            let m = self.re_min + t * self.width();
            (Self { re_max: m, ..*self }, Self { re_min: m, ..*self })
        } else {
            let m = self.im_min + t * self.height();
            (Self { im_max: m, ..*self }, Self { im_min: m, ..*self })
        }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] x [{}, {}]i", self.re_min, self.re_max, self.im_min, self.im_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub real_range: Interval,
    pub complex_rect: Rect,
}

impl SpectralWindow {
    pub fn new(real_range: Interval, complex_rect: Rect) -> Result<Self> {
        Interval::new(real_range.a, real_range.b)?;
        Rect::new(complex_rect.re_min, complex_rect.re_max, complex_rect.im_min, complex_rect.im_max)?;
        if complex_rect.im_min <= 0.0 {
            return Err(Error::InvalidProblem("complex rectangle needs im_min > 0".into()));
        }
        Ok(Self { real_range, complex_rect })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFlag {
    /// Even-order zero or unresolved near-axis pair found by a tangency count.
    Tangency,
    /// Newton and Muller both failed; the value is a contour centroid.
    Unrefined,
    /// Several zeros in a region too small to separate.
    Cluster,
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub lambda: Complex64,
    pub multiplicity: u32,
    /// Normalized so that `max |y| = 1`.
    pub eigenfunction: ShotSolution,
    /// Estimated distance to the zero of `D`, `multiplicity * |D / D'|`.
    pub residual: f64,
    pub osc_count: Option<usize>,
    pub ghost_class: Option<GhostClass>,
    pub forms: Option<FormValues>,
    pub flags: Vec<PairFlag>,
}

impl Eigenpair {
    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0
    }

    fn new(prob: &Problem, lambda: Complex64, multiplicity: u32, tol: &Tolerances, flags: Vec<PairFlag>) -> Result<Self> {
        let shot = shooting::shoot(prob, lambda, tol.shoot)?;
        // a tangency is only located to within its counting square
        let residual = if flags.contains(&PairFlag::Tangency) {
            tangency_radius(lambda.re, f64::INFINITY, f64::INFINITY)
        } else {
            multiplicity as f64 * newton_correction(prob, lambda, tol.shoot)?
        };
        Ok(Self {
            lambda,
            multiplicity,
            residual,
            eigenfunction: shot.spliced(prob, tol.shoot)?.normalized(),
            osc_count: None,
            ghost_class: None,
            forms: None,
            flags,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub rect_count: i64,
    pub found_count: i64,
    #[serde(rename = "match")]
    pub matched: bool,
    /// Rectangle actually integrated over (after any perturbation).
    pub rect: Option<Rect>,
    /// Largest `|D / D'|` at the conjugates of the found eigenvalues.
    pub conjugate_residual: f64,
    pub unresolved: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SpectralInventory {
    pub window: SpectralWindow,
    pub real_pairs: Vec<Eigenpair>,
    pub complex_pairs: Vec<Eigenpair>,
    pub certificate: Certificate,
    pub tolerances: Tolerances,
}

impl SpectralInventory {
    pub fn is_certified(&self) -> bool {
        self.certificate.matched
    }

    pub fn pairs(&self) -> impl Iterator<Item = &Eigenpair> {
        self.real_pairs.iter().chain(&self.complex_pairs)
    }
}

/// Rate of change of the total oscillation phase with respect to `lambda`.
fn phase_rate(prob: &Problem, lambda: f64) -> f64 {
    const M: usize = 32;
    prob.pieces()
        .iter()
        .map(|pc| {
            let dx = (pc.x1 - pc.x0) / M as f64;
            (0..M)
                .map(|k| {
                    let x = pc.x0 + (k as f64 + 0.5) * dx;
                    let (p, q, w) = (pc.p.eval(x), pc.q.eval(x), pc.w.eval(x));
                    w.abs() / (2.0 * (p * (lambda * w - q).abs().max(1.0)).sqrt()) * dx
                })
                .sum::<f64>()
        })
        .sum()
}

/// Grid over `range` with about ten points per expected eigenvalue gap.
pub fn scan_grid(prob: &Problem, range: Interval) -> Vec<f64> {
    let h_cap = range.len() / 20.0;
    let mut grid = vec![range.a];
    let mut x = range.a;
    while x < range.b {
        let h = (0.1 * PI / phase_rate(prob, x)).min(h_cap);
        x = if x + h >= range.b - 1e-3 * h { range.b } else { x + h };
        grid.push(x);
    }
    grid
}

#[derive(Clone, Copy, Debug)]
struct Node {
    x: f64,
    d: f64,
    dp: f64,
}

fn node(prob: &Problem, x: f64, tol: f64) -> Result<Node> {
    let (d, dp) = shooting::char_fn_real(prob, x, tol)?;
    Ok(Node { x, d, dp })
}

#[derive(Clone, Debug)]
enum Found {
    Simple(f64),
    Tangency { at: f64, multiplicity: u32 },
    Unresolved(f64),
}

/// Result of a real-axis scan.
#[derive(Clone, Debug)]
pub struct RealScan {
    pub pairs: Vec<Eigenpair>,
    /// Suspected zeros that could not be resolved.
    pub unresolved: Vec<f64>,
}

/// All real eigenvalues in `range`.
pub fn scan_real(prob: &Problem, range: Interval, tol: &Tolerances) -> Result<RealScan> {
    let grid = scan_grid(prob, range);
    let nodes: Vec<Node> = grid.par_iter().map(|&x| node(prob, x, tol.shoot)).collect::<Result<_>>()?;
    let found: Vec<Vec<Found>> = nodes
        .par_windows(2)
        .map(|w| process_cell(prob, w[0], w[1], tol, 0))
        .collect::<Result<_>>()?;

    let mut simple = Vec::new();
    let mut tangencies = Vec::new();
    let mut unresolved = Vec::new();
    for f in found.into_iter().flatten() {
        match f {
            Found::Simple(x) => simple.push(x),
            Found::Tangency { at, multiplicity } => tangencies.push((at, multiplicity)),
            Found::Unresolved(x) => unresolved.push(x),
        }
    }
    simple.sort_by(f64::total_cmp);
    simple.dedup_by(|a, b| (*a - *b).abs() <= 10.0 * tol.refine * (1.0 + a.abs()));

    let mut items: Vec<(f64, u32, Vec<PairFlag>)> = simple.into_iter().map(|x| (x, 1, vec![])).collect();
    items.extend(tangencies.into_iter().map(|(x, m)| (x, m, vec![PairFlag::Tangency])));
    items.retain(|(x, _, _)| *x >= range.a && *x <= range.b);
    items.sort_by(|a, b| a.0.total_cmp(&b.0));

    let pairs = items
        .into_par_iter()
        .map(|(x, m, flags)| Eigenpair::new(prob, Complex64::new(x, 0.0), m, tol, flags))
        .collect::<Result<Vec<_>>>()?;
    Ok(RealScan { pairs, unresolved })
}

/// Critical points in `(0, 1)` of the cubic Hermite interpolant of a cell.
fn hermite_critical_points(l: &Node, r: &Node) -> usize {
    let h = r.x - l.x;
    let c1 = h * l.dp;
    let c2 = 3.0 * (r.d - l.d) - 2.0 * h * l.dp - h * r.dp;
    let c3 = 2.0 * (l.d - r.d) + h * l.dp + h * r.dp;
    poly::real_roots(&[c1, 2.0 * c2, 3.0 * c3])
        .into_iter()
        .filter(|&t| t > 0.0 && t < 1.0)
        .count()
}

fn sign_change(a: f64, b: f64) -> bool {
    (a < 0.0) != (b < 0.0)
}

/// Smallest integration tolerance used when a root needs polishing.
const FINEST_SHOOT_TOL: f64 = 1e-14;

/// `|D / D'|` at `lambda`, tightening the integration tolerance until the
/// value of `D` stops moving.
fn newton_correction(prob: &Problem, lambda: Complex64, shoot_tol: f64) -> Result<f64> {
    let mut st = shoot_tol;
    let (mut d, mut dp) = shooting::char_fn_tol(prob, lambda, st)?;
    while st > FINEST_SHOOT_TOL {
        st *= 0.1;
        let (d2, dp2) = shooting::char_fn_tol(prob, lambda, st)?;
        let moved = (d2 - d).norm();
        d = d2;
        dp = dp2;
        if moved <= 0.1 * d.norm() {
            break;
        }
    }
    Ok((d / dp).norm())
}

fn bracket_root(prob: &Problem, l: &Node, r: &Node, tol: &Tolerances) -> Result<f64> {
    let shoot_tol = tol.shoot * 0.1;
    let x = roots::brent(
        |x| Ok(shooting::char_fn_real(prob, x, shoot_tol)?.0),
        l.x,
        r.x,
        l.d,
        r.d,
        tol.refine,
    )?;
    polish_real(prob, x, l.x, r.x, tol)
}

/// Near a close pair `D'` is small and integration noise in `D` moves the
/// root. Newton steps at tighter tolerances until the noise is below target.
fn polish_real(prob: &Problem, mut x: f64, lo: f64, hi: f64, tol: &Tolerances) -> Result<f64> {
    let target = tol.refine * (1.0 + x.abs());
    let mut st = tol.shoot * 0.1;
    while st > FINEST_SHOOT_TOL {
        let (d, dp) = shooting::char_fn_real(prob, x, st)?;
        let (fine, _) = shooting::char_fn_real(prob, x, st * 0.1)?;
        if (d - fine).abs() <= target * dp.abs() {
            break;
        }
        st *= 0.1;
        for _ in 0..8 {
            let (d, dp) = shooting::char_fn_real(prob, x, st)?;
            let step = d / dp;
            if !step.is_finite() {
                break;
            }
            x = (x - step).clamp(lo, hi);
            if step.abs() <= 0.1 * target {
                break;
            }
        }
    }
    Ok(x)
}

fn tangency_radius(c: f64, left: f64, right: f64) -> f64 {
    (1e-2 * (1.0 + c.abs())).min(0.45 * left.min(right))
}

fn process_cell(prob: &Problem, l: Node, r: Node, tol: &Tolerances, depth: usize) -> Result<Vec<Found>> {
    const MAX_DEPTH: usize = 10;
    let crit = hermite_critical_points(&l, &r);
    let same_slope = (l.dp < 0.0) == (r.dp < 0.0);
    if same_slope && crit == 0 {
        return Ok(if sign_change(l.d, r.d) { vec![Found::Simple(bracket_root(prob, &l, &r, tol)?)] } else { vec![] });
    }
    if !same_slope && crit <= 1 {
        return extremum_cell(prob, l, r, tol);
    }
    if depth < MAX_DEPTH {
        let m = node(prob, 0.5 * (l.x + r.x), tol.shoot)?;
        let mut out = process_cell(prob, l, m, tol, depth + 1)?;
        out.extend(process_cell(prob, m, r, tol, depth + 1)?);
        return Ok(out);
    }
    let mut out = if same_slope {
        if sign_change(l.d, r.d) { vec![Found::Simple(bracket_root(prob, &l, &r, tol)?)] } else { vec![] }
    } else {
        extremum_cell(prob, l, r, tol)?
    };
    out.push(Found::Unresolved(0.5 * (l.x + r.x)));
    Ok(out)
}

/// Cell with exactly one extremum of `D`: split at the root of `D'`.
fn extremum_cell(prob: &Problem, l: Node, r: Node, tol: &Tolerances) -> Result<Vec<Found>> {
    let shoot_tol = tol.shoot * 0.1;
    let c = roots::brent(
        |x| Ok(shooting::char_fn_real(prob, x, shoot_tol)?.1),
        l.x,
        r.x,
        l.dp,
        r.dp,
        tol.refine,
    )?;
    let mid = node(prob, c, shoot_tol)?;
    let scale = l.d.abs().max(r.d.abs());
    let noise = 1e3 * tol.shoot * scale.max(1.0);
    let tangent = mid.d.abs() <= noise
        || (!sign_change(l.d, mid.d) && !sign_change(mid.d, r.d) && mid.d.abs() < 1e-6 * scale);
    if tangent {
        let delta = tangency_radius(c, c - l.x, r.x - c);
        if delta > 0.0 {
            let count = count_rect(prob, Rect::square(Complex64::new(c, 0.0), delta), tol.quad)?;
            if count.count > 0 {
                return Ok(vec![Found::Tangency { at: c, multiplicity: count.count as u32 }]);
            }
            return Ok(vec![]);
        }
        return Ok(vec![Found::Unresolved(c)]);
    }
    let mut out = Vec::new();
    if sign_change(l.d, mid.d) {
        out.push(Found::Simple(bracket_root(prob, &l, &mid, tol)?));
    }
    if sign_change(mid.d, r.d) {
        out.push(Found::Simple(bracket_root(prob, &mid, &r, tol)?));
    }
    Ok(out)
}

/// Argument-principle count over a rectangle.
#[derive(Clone, Copy, Debug)]
pub struct ContourCount {
    pub count: i64,
    /// `(1 / 2 pi i) * integral of lambda D'/D`: sum of the enclosed zeros.
    pub moment: Complex64,
    /// Unrounded quadrature value of the count.
    pub raw: f64,
    /// Rectangle actually used.
    pub rect: Rect,
}

struct Side {
    integral: Complex64,
    moment: Complex64,
    arg: f64,
}

const SHOOT_CONTOUR: f64 = 1e-10;

fn side_integral(
    prob: &Problem,
    z0: Complex64,
    d0: Complex64,
    z1: Complex64,
    d1: Complex64,
    quad_tol: f64,
    min_len: f64,
) -> Result<Option<Side>> {
    let f = |z: Complex64| shooting::char_fn_tol(prob, z, SHOOT_CONTOUR);
    let dz = z1 - z0;
    let rule = panel_rule(0.0, 1.0);
    let values = rule.iter().map(|r| f(z0 + dz * r.0)).collect::<Result<Vec<_>>>()?;
    let degenerate = values.iter().any(|(d, _)| d.norm() == 0.0);
    if !degenerate {
        let mut k = Complex64::new(0.0, 0.0);
        let mut g = Complex64::new(0.0, 0.0);
        let mut m = Complex64::new(0.0, 0.0);
        for (&(t, wk, wg), (d, dp)) in rule.iter().zip(&values) {
            let v = dp / d;
            k += v * wk;
            g += v * wg;
            m += (z0 + dz * t) * v * wk;
        }
        let (integral, err, moment) = (k * dz, ((k - g) * dz).norm(), m * dz);
        let arg = (d1 / d0).arg();
        if integral.im.abs() < 0.5 * PI
            && (integral.im - arg).abs() < 0.05
            && err < quad_tol * (1.0 + integral.norm())
        {
            return Ok(Some(Side { integral, moment, arg }));
        }
    }
    if dz.norm() < min_len {
        return Ok(None);
    }
    let zm = z0 + 0.5 * dz;
    let (dm, _) = f(zm)?;
    if dm.norm() == 0.0 {
        return Ok(None);
    }
    let (a, b) = rayon::join(
        || side_integral(prob, z0, d0, zm, dm, quad_tol, min_len),
        || side_integral(prob, zm, dm, z1, d1, quad_tol, min_len),
    );
    match (a?, b?) {
        (Some(a), Some(b)) => Ok(Some(Side {
            integral: a.integral + b.integral,
            moment: a.moment + b.moment,
            arg: a.arg + b.arg,
        })),
        _ => Ok(None),
    }
}

const SIDE_NAMES: [&str; 4] = ["bottom", "right", "top", "left"];

fn try_count(prob: &Problem, rect: Rect, quad_tol: f64) -> Result<std::result::Result<ContourCount, &'static str>> {
    let corners = rect.corners();
    let dvals = corners
        .par_iter()
        .map(|&z| shooting::char_fn_tol(prob, z, SHOOT_CONTOUR).map(|v| v.0))
        .collect::<Result<Vec<_>>>()?;
    if let Some(k) = dvals.iter().position(|d| d.norm() == 0.0) {
        return Ok(Err(SIDE_NAMES[k]));
    }
    let min_len = 1e-7 * rect.width().max(rect.height());
    let sides = (0..4)
        .into_par_iter()
        .map(|k| {
            let j = (k + 1) % 4;
            side_integral(prob, corners[k], dvals[k], corners[j], dvals[j], quad_tol, min_len)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut integral = Complex64::new(0.0, 0.0);
    let mut moment = Complex64::new(0.0, 0.0);
    let mut arg = 0.0;
    for (k, s) in sides.into_iter().enumerate() {
        match s {
            Some(s) => {
                integral += s.integral;
                moment += s.moment;
                arg += s.arg;
            }
            None => return Ok(Err(SIDE_NAMES[k])),
        }
    }
    let raw = integral.im / (2.0 * PI);
    let by_arg = (arg / (2.0 * PI)).round();
    if (raw - raw.round()).abs() > 0.25 || raw.round() != by_arg {
        return Ok(Err("all"));
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    Ok(Ok(ContourCount { count: by_arg as i64, moment: moment / two_pi_i, raw, rect }))
}

/// Zeros of `D` inside `rect`, counted with multiplicity.
pub fn count_rect(prob: &Problem, rect: Rect, quad_tol: f64) -> Result<ContourCount> {
    const RETRIES: usize = 4;
    let mut last_side = "all";
    for attempt in 0..=RETRIES {
        let r = if attempt == 0 { rect } else { rect.perturbed(attempt) };
        match try_count(prob, r, quad_tol)? {
            Ok(c) => return Ok(c),
            Err(side) => last_side = side,
        }
    }
    Err(Error::ContourThroughZero { side: last_side, rect: rect.to_string() })
}

/// Non-real eigenvalues in an upper-half rectangle.
#[derive(Clone, Debug)]
pub struct ComplexSearch {
    pub pairs: Vec<Eigenpair>,
    pub total: ContourCount,
    pub unresolved: Vec<Rect>,
}

struct Located {
    z: Complex64,
    multiplicity: u32,
    flags: Vec<PairFlag>,
}

fn refine_single(prob: &Problem, region: Rect, guess: Complex64, tol: &Tolerances) -> Result<Option<Complex64>> {
    let bounds = region.expanded(0.1);
    let inside = |z: Complex64| bounds.contains(z);
    let fdf = |z: Complex64| shooting::char_fn_tol(prob, z, tol.shoot);
    if let Some(c) = roots::newton(fdf, guess, tol.refine, 60, inside)? {
        return Ok(Some(c.z));
    }
    let h = 1e-3 * (region.width() + region.height());
    let starts = [guess - h, guess + Complex64::new(0.0, h), guess + h];
    let f = |z: Complex64| Ok(shooting::char_fn_tol(prob, z, tol.shoot)?.0);
    Ok(roots::muller(f, starts, tol.refine, 100, inside)?.map(|c| c.z))
}

fn locate(prob: &Problem, cc: ContourCount, tol: &Tolerances, depth: usize) -> Result<(Vec<Located>, Vec<Rect>)> {
    const MAX_DEPTH: usize = 40;
    let rect = cc.rect;
    if cc.count <= 0 {
        return Ok((vec![], vec![]));
    }
    if cc.count == 1 {
        if let Some(z) = refine_single(prob, rect, cc.moment, tol)? {
            if rect.expanded(1e-6).contains(z) {
                return Ok((vec![Located { z, multiplicity: 1, flags: vec![] }], vec![]));
            }
        }
    }
    let size = rect.width().max(rect.height());
    if depth >= MAX_DEPTH || size < 1e3 * tol.refine * (1.0 + rect.center().norm()) {
        let z = cc.moment / cc.count as f64;
        let flag = if cc.count == 1 { PairFlag::Unrefined } else { PairFlag::Cluster };
        return Ok((vec![Located { z, multiplicity: cc.count as u32, flags: vec![flag] }], vec![rect]));
    }
    for t in [0.5, 0.4871, 0.5129, 0.4613] {
        let (ra, rb) = rect.split(t);
        let (ca, cb) = rayon::join(|| try_count(prob, ra, tol.quad), || try_count(prob, rb, tol.quad));
        if let (Ok(ca), Ok(cb)) = (ca?, cb?) {
            if ca.count + cb.count != cc.count || ca.count < 0 || cb.count < 0 {
                continue;
            }
            let (a, b) = rayon::join(|| locate(prob, ca, tol, depth + 1), || locate(prob, cb, tol, depth + 1));
            let (mut la, mut ua) = a?;
            let (lb, ub) = b?;
            la.extend(lb);
            ua.extend(ub);
            return Ok((la, ua));
        }
    }
    let z = cc.moment / cc.count as f64;
    Ok((vec![Located { z, multiplicity: cc.count as u32, flags: vec![PairFlag::Unrefined] }], vec![rect]))
}

pub fn find_complex(prob: &Problem, rect: Rect, tol: &Tolerances) -> Result<ComplexSearch> {
    if rect.im_min <= 0.0 {
        return Err(Error::InvalidProblem("complex search needs im_min > 0".into()));
    }
    let total = count_rect(prob, rect, tol.quad)?;
    let (located, unresolved) = locate(prob, total, tol, 0)?;
    let mut pairs = located
        .into_par_iter()
        .map(|l| Eigenpair::new(prob, l.z, l.multiplicity, tol, l.flags))
        .collect::<Result<Vec<_>>>()?;
    pairs.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    Ok(ComplexSearch { pairs, total, unresolved })
}

/// Default complex search rectangle.
pub fn default_rect(prob: &Problem) -> Rect {
    let iv = prob.interval();
    let q = prob.q().integrate_part(Part::Positive, iv).unwrap_or(0.0)
        + prob.q().integrate_part(Part::Negative, iv).unwrap_or(0.0);
    let wp = prob.w().integrate_part(Part::Positive, iv).unwrap_or(0.0);
    let wm = prob.w().integrate_part(Part::Negative, iv).unwrap_or(0.0);
    let wmin = wp.min(wm);
    let s = if wmin > 0.0 { (2.0 * q / wmin).max(20.0) } else { 20.0 };
    Rect { re_min: -s, re_max: s, im_min: 1e-3, im_max: s }
}

/// Smallest `L` (doubling from 50) such that `(0, L]` holds at least
/// `want` eigenvalues.
pub fn default_real_extent(prob: &Problem, want: usize, tol: &Tolerances) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = 50.0;
    let mut found = 0;
    while hi <= 1e5 {
        let scan = scan_real(prob, Interval::new(lo, hi)?, tol)?;
        found += scan.pairs.iter().filter(|e| e.lambda.re > 0.0).map(|e| e.multiplicity as usize).sum::<usize>();
        if found >= want {
            return Ok(hi);
        }
        lo = hi;
        hi *= 2.0;
    }
    Ok(lo)
}

pub fn default_window(prob: &Problem, tol: &Tolerances) -> Result<SpectralWindow> {
    let l = default_real_extent(prob, 12, tol)?;
    SpectralWindow::new(Interval::new(-l, l)?, default_rect(prob))
}

/// Full inventory with certificate, oscillation counts and ghost classes.
pub fn build_inventory(prob: &Problem, window: SpectralWindow, tol: &Tolerances) -> Result<SpectralInventory> {
    let window = SpectralWindow::new(window.real_range, window.complex_rect)?;
    let (real, complex) = rayon::join(
        || scan_real(prob, window.real_range, tol),
        || find_complex(prob, window.complex_rect, tol),
    );
    let real = real?;
    let complex = complex?;

    let found_count: i64 = complex.pairs.iter().map(|e| e.multiplicity as i64).sum();
    let conjugate_residual = complex
        .pairs
        .par_iter()
        .map(|e| {
            let (d, dp) = shooting::char_fn_tol(prob, e.lambda.conj(), tol.shoot)?;
            Ok((d / dp).norm())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut unresolved: Vec<String> = complex.unresolved.iter().map(|r| format!("complex region {r}")).collect();
    unresolved.extend(real.unresolved.iter().map(|x| format!("real candidate near {x}")));
    let matched = found_count == complex.total.count
        && complex.unresolved.is_empty()
        && real.unresolved.is_empty()
        && complex.pairs.iter().all(|e| complex.total.rect.contains(e.lambda));
    let certificate = Certificate {
        rect_count: complex.total.count,
        found_count,
        matched,
        rect: Some(complex.total.rect),
        conjugate_residual,
        unresolved,
    };
    let mut inv = SpectralInventory {
        window,
        real_pairs: real.pairs,
        complex_pairs: complex.pairs,
        certificate,
        tolerances: *tol,
    };
    classification::annotate(prob, &mut inv)?;
    Ok(inv)
}

/// Serializable summary of one eigenpair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub re: f64,
    pub im: f64,
    pub multiplicity: u32,
    pub residual: f64,
    pub osc_count: Option<usize>,
    pub class: Option<String>,
    pub ground_state: bool,
    pub borderline: bool,
    pub flags: Vec<PairFlag>,
    pub eigenfunction_csv: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InventoryRecord {
    pub window: SpectralWindow,
    pub tolerances: Tolerances,
    pub real: Vec<EigenRecord>,
    pub complex: Vec<EigenRecord>,
    pub certificate: Certificate,
}

fn record(e: &Eigenpair, csv: Option<String>) -> EigenRecord {
    EigenRecord {
        re: e.lambda.re,
        im: e.lambda.im,
        multiplicity: e.multiplicity,
        residual: e.residual,
        osc_count: e.osc_count,
        class: e.ghost_class.map(|g| g.tag.to_string()),
        ground_state: e.ghost_class.is_some_and(|g| g.ground_state),
        borderline: e.ghost_class.is_some_and(|g| g.borderline),
        flags: e.flags.clone(),
        eigenfunction_csv: csv,
    }
}

impl SpectralInventory {
    pub fn to_record(&self) -> InventoryRecord {
        InventoryRecord {
            window: self.window,
            tolerances: self.tolerances,
            real: self.real_pairs.iter().map(|e| record(e, None)).collect(),
            complex: self.complex_pairs.iter().map(|e| record(e, None)).collect(),
            certificate: self.certificate.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    /// Writes `inventory.json` and one eigenfunction CSV per eigenvalue
    /// (`real_<k>.csv`, `complex_<k>.csv`) into `dir`.
    pub fn write_files(&self, dir: &Path, samples: usize) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut rec = self.to_record();
        for (kind, pairs, recs) in [
            ("real", &self.real_pairs, &mut rec.real),
            ("complex", &self.complex_pairs, &mut rec.complex),
        ] {
            for (k, (e, r)) in pairs.iter().zip(recs.iter_mut()).enumerate() {
                let name = format!("{kind}_{k}.csv");
                let mut out = String::from("x,re_y,im_y,re_py,im_py\n");
                for (x, y, py) in e.eigenfunction.sample(samples) {
                    out.push_str(&format!("{x},{},{},{},{}\n", y.re, y.im, py.re, py.im));
                }
                std::fs::write(dir.join(&name), out)?;
                r.eigenfunction_csv = Some(name);
            }
        }
        std::fs::write(dir.join("inventory.json"), serde_json::to_string_pretty(&rec)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn classical_real_scan() {
        let scan = scan_real(&fixtures::p0(), Interval::new(0.5, 10.0).unwrap(), &tol()).unwrap();
        let got: Vec<f64> = scan.pairs.iter().map(|e| e.lambda.re).collect();
        assert_eq!(got.len(), 3);
        for (g, k) in got.iter().zip([1.0, 4.0, 9.0]) {
            assert!((g - k).abs() < 1e-8, "{g}");
        }
        assert!(scan.unresolved.is_empty());
    }

    #[test]
    fn classical_problem_has_no_complex_zeros() {
        let c = count_rect(&fixtures::p0(), Rect::new(0.5, 4.5, 0.1, 5.0).unwrap(), 1e-6).unwrap();
        assert_eq!(c.count, 0);
    }

    #[test]
    fn count_straddling_a_real_zero() {
        let c = count_rect(&fixtures::p0(), Rect::square(Complex64::new(4.0, 0.0), 0.5), 1e-6).unwrap();
        assert_eq!(c.count, 1);
        assert!((c.moment - Complex64::new(4.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn rect_validation() {
        assert!(Rect::new(1.0, 0.0, 0.1, 1.0).is_err());
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(SpectralWindow::new(iv, Rect::new(-1.0, 1.0, 0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn split_halves_longer_side() {
        let r = Rect::new(0.0, 4.0, 1.0, 2.0).unwrap();
        let (a, b) = r.split(0.5);
        assert_eq!(a.re_max, 2.0);
        assert_eq!(b.re_min, 2.0);
    }

    #[test]
    fn hermite_detects_hidden_extrema() {
        // D = (x - 0.4)(x - 0.6) sampled at 0 and 1: same sign, same slope sign? no
        let l = Node { x: 0.0, d: 0.24, dp: -1.0 };
        let r = Node { x: 1.0, d: 0.24, dp: 1.0 };
        assert_eq!(hermite_critical_points(&l, &r), 1);
        let l = Node { x: 0.0, d: 1.0, dp: 1.0 };
        let r = Node { x: 1.0, d: 2.0, dp: 1.0 };
        assert_eq!(hermite_critical_points(&l, &r), 0);
    }
}
