//! Oscillation profiles, the Richardson and Haupt indices, and the
//! inequalities that tie them to the spectrum.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classification::{resolved_lambda, GhostTag};
use crate::coefficients::{Part, Problem, Segment};
use crate::error::{Error, Result};
use crate::quadrature::panel_rule;
use crate::spectrum::{Eigenpair, SpectralInventory};

/// Consecutive stabilized counts needed before the indices are trusted.
pub const MIN_STABILITY_MARGIN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Positive,
    Negative,
}

/// Eigenvalues on one side of the spectrum grouped by oscillation count.
/// The negative side is stored as the spectrum of the reflected problem,
/// so all eigenvalues in `entries` are non-negative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscillationProfile {
    pub side: Side,
    pub entries: BTreeMap<usize, Vec<f64>>,
    pub window_top: f64,
}

/// Real eigenvalues of `inv` as seen from `side`: values are negated for
/// the negative side and zero belongs to both.
fn side_pairs(inv: &SpectralInventory, side: Side) -> Vec<(f64, &Eigenpair)> {
    let sign = match side {
        Side::Positive => 1.0,
        Side::Negative => -1.0,
    };
    inv.real_pairs
        .iter()
        .filter_map(|e| {
            let l = sign * resolved_lambda(e, inv.tolerances.refine).re;
            (l >= 0.0).then_some((l.abs(), e))
        })
        .collect()
}

pub fn profile(inv: &SpectralInventory, side: Side) -> Result<OscillationProfile> {
    if !inv.is_certified() {
        return Err(Error::Uncertified(format!(
            "contour count {} but {} eigenvalues refined",
            inv.certificate.rect_count, inv.certificate.found_count
        )));
    }
    let mut entries: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (l, e) in side_pairs(inv, side) {
        let n = e
            .osc_count
            .ok_or_else(|| Error::Uncertified(format!("no oscillation count for lambda = {l}")))?;
        entries.entry(n).or_default().push(l);
    }
    for v in entries.values_mut() {
        v.sort_by(f64::total_cmp);
    }
    let window_top = match side {
        Side::Positive => inv.window.real_range.b,
        Side::Negative => -inv.window.real_range.a,
    };
    Ok(OscillationProfile { side, entries, window_top })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Indices {
    pub n_r: usize,
    pub n_h: usize,
    /// Smallest eigenvalue whose eigenfunction has `n_h` zeros; `None` when
    /// no count at the top of the window is realized exactly once.
    pub lambda_r: Option<f64>,
    /// Smallest eigenvalue whose eigenfunction has `n_r` zeros.
    pub lambda_h: f64,
    pub stability_margin: usize,
    pub window_too_small: bool,
}

pub fn indices(prof: &OscillationProfile) -> Result<Indices> {
    let Some((&top, _)) = prof.entries.last_key_value() else {
        return Err(Error::InvalidProblem("empty oscillation profile".into()));
    };
    let mut n_r = top;
    while n_r > 0 && prof.entries.contains_key(&(n_r - 1)) {
        n_r -= 1;
    }
    let once = |n: usize| prof.entries.get(&n).is_some_and(|v| v.len() == 1);
    let mut n_h = top + 1;
    while n_h > n_r && once(n_h - 1) {
        n_h -= 1;
    }
    let lambda_h = prof.entries[&n_r][0];
    let lambda_r = prof.entries.get(&n_h).map(|v| v[0]);
    let stability_margin = (top + 1).saturating_sub(n_h + 1);
    Ok(Indices {
        n_r,
        n_h,
        lambda_r,
        lambda_h,
        stability_margin,
        window_too_small: stability_margin < MIN_STABILITY_MARGIN,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    /// Holds with equality up to the tolerance.
    Equality,
    Fail,
    NotApplicable,
    /// Recorded for comparison only; never asserted.
    Reference,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "pass",
            Outcome::Equality => "equality",
            Outcome::Fail => "FAIL",
            Outcome::NotApplicable => "n/a",
            Outcome::Reference => "reference",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Eigenvalue the check is about, for per-eigenpair checks.
    pub subject: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: &'static str,
    pub outcome: Outcome,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    fn new(name: &str, lhs: f64, relation: &'static str, rhs: f64, outcome: Outcome) -> Self {
        Self {
            name: name.to_string(),
            subject: None,
            lhs,
            rhs,
            relation,
            outcome,
            passed: outcome != Outcome::Fail,
            note: None,
        }
    }

    fn geq(name: &str, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, ">=", rhs, if lhs >= rhs { Outcome::Pass } else { Outcome::Fail })
    }

    fn leq(name: &str, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, "<=", rhs, if lhs <= rhs { Outcome::Pass } else { Outcome::Fail })
    }

    /// Strict `lhs > rhs`, with near-equality reported separately.
    fn gt(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let outcome = if (lhs - rhs).abs() <= tol * (1.0 + rhs.abs()) {
            Outcome::Equality
        } else if lhs > rhs {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        Self::new(name, lhs, ">", rhs, outcome)
    }

    fn approx_eq(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let ok = (lhs - rhs).abs() <= tol * (1.0 + rhs.abs());
        Self::new(name, lhs, "=", rhs, if ok { Outcome::Pass } else { Outcome::Fail })
    }

    fn not_applicable(name: &str, why: &str) -> Self {
        Self::new(name, f64::NAN, "", f64::NAN, Outcome::NotApplicable).with_note(why)
    }

    fn with_subject(mut self, lambda: f64) -> Self {
        self.subject = Some(lambda);
        self
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub side: Side,
    pub n_r: usize,
    pub n_h: usize,
    pub lambda_r: Option<f64>,
    pub lambda_h: f64,
    pub m_pairs: usize,
    pub n_deg: usize,
    pub stability_margin: usize,
    pub window_too_small: bool,
    pub checks: Vec<Check>,
}

impl IndexReport {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.outcome == Outcome::Fail)
    }

    pub fn all_passed(&self) -> bool {
        self.failed().next().is_none()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_checks_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "name,subject,lhs,relation,rhs,outcome")?;
        for c in &self.checks {
            let subject = c.subject.map(|s| s.to_string()).unwrap_or_default();
            writeln!(out, "{},{subject},{},{},{},{}", c.name, c.lhs, c.relation, c.rhs, c.outcome)?;
        }
        Ok(())
    }
}

impl fmt::Display for IndexReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lr = self.lambda_r.map_or("-".to_string(), |v| format!("{v:.6}"));
        writeln!(f, "side                {:?}", self.side)?;
        writeln!(f, "Richardson index    n_R = {}", self.n_r)?;
        writeln!(f, "Haupt index         n_H = {}", self.n_h)?;
        writeln!(f, "Haupt number        L_H = {:.6}", self.lambda_h)?;
        writeln!(f, "Richardson number   L_R = {lr}")?;
        writeln!(f, "non-real pairs      m   = {}", self.m_pairs)?;
        writeln!(f, "degenerate ghosts   n   = {}", self.n_deg)?;
        write!(f, "stability margin        = {}", self.stability_margin)?;
        if self.window_too_small {
            write!(f, "  (window too small)")?;
        }
        writeln!(f)?;
        writeln!(f)?;
        writeln!(f, "{:<38} {:>14} {:>3} {:<14} {}", "check", "lhs", "", "rhs", "outcome")?;
        for c in &self.checks {
            let name = match c.subject {
                Some(s) => format!("{} @ {s:.6}", c.name),
                None => c.name.clone(),
            };
            writeln!(f, "{name:<38} {:>14.6} {:>3} {:<14.6} {}", c.lhs, c.relation, c.rhs, c.outcome)?;
        }
        Ok(())
    }
}

/// Distinct non-real eigenvalues in the upper half-plane.
pub fn count_nonreal_pairs(inv: &SpectralInventory) -> usize {
    let mut seen: Vec<num_complex::Complex64> = Vec::new();
    for e in inv.complex_pairs.iter().filter(|e| e.lambda.im > 0.0) {
        let tol = 1e3 * inv.tolerances.refine * (1.0 + e.lambda.norm());
        if !seen.iter().any(|z| (z - e.lambda).norm() <= tol) {
            seen.push(e.lambda);
        }
    }
    seen.len()
}

/// Distinct real eigenvalues with degenerate ghost eigenfunctions. Two
/// neighbouring degenerate eigenvalues whose weighted integrals have
/// opposite signs are the split halves of one double eigenvalue and are
/// counted once.
pub fn count_degenerate_ghosts(inv: &SpectralInventory) -> usize {
    let mut count = 0;
    let mut prev: Option<f64> = None;
    for e in &inv.real_pairs {
        let degenerate = e.ghost_class.is_some_and(|g| g.tag == GhostTag::DegenerateRealGhost);
        let ws = e.forms.map_or(0.0, |f| f.weighted_sq.re);
        match (degenerate, prev) {
            (false, _) => prev = None,
            (true, Some(p)) if p * ws < 0.0 => prev = None,
            (true, _) => {
                count += 1;
                prev = Some(ws);
            }
        }
    }
    count
}

/// `n_R >= m + n` for `m` non-real pairs and `n` degenerate real ghosts.
pub fn ghost_lower_bound_check(n_r: usize, m_pairs: usize, n_deg: usize) -> Check {
    Check::geq("ghost_lower_bound", n_r as f64, (m_pairs + n_deg) as f64)
        .with_note(&format!("m = {m_pairs}, n = {n_deg}"))
}

fn has_unit_p(prob: &Problem) -> bool {
    prob.p().segments().iter().all(|s| match s {
        Segment::Constant(c) => *c == 1.0,
        Segment::Polynomial(c) => c.first() == Some(&1.0) && c[1..].iter().all(|&v| v == 0.0),
    })
}

/// `int (lambda w - q)_+ >= 4 (n + 1)^2 / (b - a)` for an eigenpair with `n`
/// interior zeros.
pub fn rapoport_check(prob: &Problem, e: &Eigenpair) -> Result<Check> {
    let Some(n) = e.osc_count else {
        return Err(Error::InvalidProblem("eigenpair without oscillation count".into()));
    };
    rapoport_at(prob, e.lambda.re, n)
}

fn rapoport_at(prob: &Problem, lambda: f64, n: usize) -> Result<Check> {
    let name = if n == 0 { "lyapunov" } else { "rapoport" };
    if !has_unit_p(prob) {
        return Ok(Check::not_applicable(name, "requires p = 1").with_subject(lambda));
    }
    let iv = prob.interval();
    let lhs = prob.effective_potential(lambda)?.integrate_part(Part::Positive, iv)?;
    let rhs = 4.0 * ((n + 1) as f64).powi(2) / iv.len();
    Ok(Check::geq(name, lhs, rhs).with_subject(lambda))
}

/// Right-hand side of the index upper bound,
/// `((b - a)/4 * (lambda int w_+ + int q_-))^(1/2)`.
pub fn index_bound(prob: &Problem, lambda: f64) -> Result<f64> {
    let iv = prob.interval();
    let wp = prob.w().integrate_part(Part::Positive, iv)?;
    let qm = prob.q().integrate_part(Part::Negative, iv)?;
    Ok((iv.len() / 4.0 * (lambda * wp + qm)).sqrt())
}

/// The same expression with the length factor applied to the weight term
/// only, `(lambda (b - a)/4 int w_+ + int q_-)^(1/2)`, for comparison with
/// published figures computed that way.
pub fn index_bound_unscaled_q(prob: &Problem, lambda: f64) -> Result<f64> {
    let iv = prob.interval();
    let wp = prob.w().integrate_part(Part::Positive, iv)?;
    let qm = prob.q().integrate_part(Part::Negative, iv)?;
    Ok((iv.len() / 4.0 * lambda * wp + qm).sqrt())
}

/// Upper bounds on `n_R + 1` and `n_H + 1`, the identities tying the numbers
/// to the smallest eigenvalues with `n_R` and `n_H` zeros, and their order.
pub fn index_upper_bounds(prob: &Problem, inv: &SpectralInventory, rep: &IndexReport) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let iv = prob.interval();
    if !has_unit_p(prob) || prob.w().integrate_part(Part::Positive, iv)? <= 0.0 {
        out.push(Check::not_applicable("theorem4_upper_bound", "requires p = 1 and int w_+ > 0"));
        out.push(Check::not_applicable("theorem5_upper_bound", "requires p = 1 and int w_+ > 0"));
    } else {
        out.push(Check::leq("theorem4_upper_bound", (rep.n_r + 1) as f64, index_bound(prob, rep.lambda_h)?));
        out.push(
            Check::new(
                "theorem4_bound_unscaled_q",
                rep.n_r as f64,
                "<=",
                index_bound_unscaled_q(prob, rep.lambda_h)? - 1.0,
                Outcome::Reference,
            )
            .with_note("bound on n_R without the length factor on int q_-"),
        );
        match rep.lambda_r {
            Some(lr) => out.push(Check::leq("theorem5_upper_bound", (rep.n_h + 1) as f64, index_bound(prob, lr)?)),
            None => out.push(Check::not_applicable("theorem5_upper_bound", "no Richardson number in window")),
        }
    }

    // the identities, recomputed from the inventory without the profile
    let smallest_with = |n: usize| {
        side_pairs(inv, rep.side)
            .into_iter()
            .filter(|(_, e)| e.osc_count == Some(n))
            .map(|(l, _)| l)
            .min_by(f64::total_cmp)
    };
    let tol = 1e-12;
    match smallest_with(rep.n_r) {
        Some(l) => out.push(Check::approx_eq("haupt_number_identity", rep.lambda_h, l, tol)),
        None => out.push(Check::new("haupt_number_identity", rep.lambda_h, "=", f64::NAN, Outcome::Fail)),
    }
    match (rep.lambda_r, smallest_with(rep.n_h)) {
        (Some(lr), Some(l)) => {
            out.push(Check::approx_eq("richardson_number_identity", lr, l, tol));
            out.push(Check::leq("haupt_richardson_order", rep.lambda_h, lr));
        }
        _ => out.push(Check::not_applicable("richardson_number_identity", "no Richardson number in window")),
    }
    out.push(Check::leq("index_order", rep.n_r as f64, rep.n_h as f64));
    Ok(out)
}

/// Sampled infimum of `q / |w|` and supremum of `|w p|`, or `None` when `w`
/// vanishes inside a segment.
fn comparison_constants(prob: &Problem) -> Option<(f64, f64)> {
    const SAMPLES: usize = 2000;
    let mut inf = f64::INFINITY;
    let mut sup: f64 = 0.0;
    for pc in prob.pieces() {
        let (lo, hi) = pc.w.range_on(pc.x0, pc.x1);
        if lo <= 0.0 && hi >= 0.0 {
            return None;
        }
        for k in 0..=SAMPLES {
            let x = pc.x0 + (pc.x1 - pc.x0) * k as f64 / SAMPLES as f64;
            let w = pc.w.eval(x);
            inf = inf.min(pc.q.eval(x) / w.abs());
            sup = sup.max((w * pc.p.eval(x)).abs());
        }
    }
    Some((inf, sup))
}

/// `int_a^b dx / p`.
fn reciprocal_p_integral(prob: &Problem) -> f64 {
    prob.pieces()
        .iter()
        .map(|pc| match &pc.p {
            Segment::Constant(c) => (pc.x1 - pc.x0) / c,
            seg => {
                const PANELS: usize = 64;
                let h = (pc.x1 - pc.x0) / PANELS as f64;
                (0..PANELS)
                    .flat_map(|k| panel_rule(pc.x0 + k as f64 * h, pc.x0 + (k + 1) as f64 * h))
                    .map(|(x, wk, _)| wk / seg.eval(x))
                    .sum()
            }
        })
        .sum()
}

/// Lower bound `inf q/|w| + (n + 1)^2 pi^2 / (c^2 (int dx/p)^2)` with
/// `c^2 = sup |w p|`, applied to the Richardson number with `n_H` and to
/// the Haupt number with `n_R`.
pub fn comparison_lower_bound(prob: &Problem, rep: &IndexReport) -> Vec<Check> {
    let names = ["comparison_lower_bound_richardson", "comparison_lower_bound_haupt"];
    let Some((inf, c2)) = comparison_constants(prob) else {
        return names.iter().map(|n| Check::not_applicable(n, "w vanishes inside a segment")).collect();
    };
    let len = reciprocal_p_integral(prob);
    let bound = |n: usize| inf + ((n + 1) as f64 * PI).powi(2) / (c2 * len * len);
    let mut out = Vec::new();
    match rep.lambda_r {
        Some(lr) => out.push(Check::gt(names[0], lr, bound(rep.n_h), 1e-8)),
        None => out.push(Check::not_applicable(names[0], "no Richardson number in window")),
    }
    out.push(Check::gt(names[1], rep.lambda_h, bound(rep.n_r), 1e-8));
    out
}

/// Real eigenpairs (either side) with exactly `n` zeros.
fn with_count(inv: &SpectralInventory, n: usize) -> usize {
    inv.real_pairs.iter().filter(|e| e.osc_count == Some(n)).count()
}

/// No real eigenfunction with `k - 1` zeros when `k` ghosts of the named
/// kind exist.
fn forbidden_count_check(name: &str, inv: &SpectralInventory, k: usize) -> Check {
    if k == 0 {
        return Check::not_applicable(name, "no ghosts of this kind");
    }
    Check::approx_eq(name, with_count(inv, k - 1) as f64, 0.0, 0.0)
        .with_note(&format!("real eigenpairs with {} zeros", k - 1))
}

/// Whether adding the non-degenerate real ghosts to `m + n` would still
/// bound the smallest realized count. Recorded for reference only, since
/// the ghost bound does not extend to them.
pub fn nondegenerate_extension_check(prof: &OscillationProfile, rep: &IndexReport, inv: &SpectralInventory) -> Check {
    let k = inv
        .real_pairs
        .iter()
        .filter(|e| e.ghost_class.is_some_and(|g| g.tag == GhostTag::NondegenerateRealGhost))
        .count();
    let smallest = prof.entries.keys().next().copied().unwrap_or(0);
    let bound = rep.m_pairs + rep.n_deg + k;
    let note = if smallest >= bound {
        format!("consistent with m + n + {k} non-degenerate ghosts")
    } else {
        format!("a count below m + n + {k} is realized, so non-degenerate ghosts cannot be added")
    };
    Check::new("nondegenerate_ghost_extension", smallest as f64, ">=", bound as f64, Outcome::Reference).with_note(&note)
}

/// Exactly one eigenvalue per count on the stabilized tail.
fn tail_check(prof: &OscillationProfile, rep: &IndexReport) -> Check {
    let top = rep.n_h + rep.stability_margin;
    let bad = (rep.n_h..=top).filter(|n| prof.entries.get(n).map_or(0, Vec::len) != 1).count();
    Check::approx_eq("haupt_richardson_tail", bad as f64, 0.0, 0.0)
        .with_note(&format!("counts {}..={top} realized exactly once", rep.n_h))
}

/// Runs the whole analysis on one side of a certified, classified inventory.
pub fn analyze(prob: &Problem, inv: &SpectralInventory, side: Side) -> Result<IndexReport> {
    let prof = profile(inv, side)?;
    let idx = indices(&prof)?;
    let m_pairs = count_nonreal_pairs(inv);
    let n_deg = count_degenerate_ghosts(inv);
    let mut rep = IndexReport {
        side,
        n_r: idx.n_r,
        n_h: idx.n_h,
        lambda_r: idx.lambda_r,
        lambda_h: idx.lambda_h,
        m_pairs,
        n_deg,
        stability_margin: idx.stability_margin,
        window_too_small: idx.window_too_small,
        checks: Vec::new(),
    };
    let mut checks = vec![ghost_lower_bound_check(rep.n_r, m_pairs, n_deg)];
    checks.push(forbidden_count_check("theorem1_forbidden_count", inv, m_pairs));
    checks.push(forbidden_count_check("theorem2_forbidden_count", inv, n_deg));
    checks.push(forbidden_count_check("theorem3_forbidden_count", inv, m_pairs + n_deg));
    checks.push(if m_pairs > 0 {
        Check::approx_eq("no_ground_state", with_count(inv, 0) as f64, 0.0, 0.0)
    } else {
        Check::not_applicable("no_ground_state", "no non-real eigenvalues")
    });
    checks.extend(index_upper_bounds(prob, inv, &rep)?);
    checks.extend(comparison_lower_bound(prob, &rep));
    checks.push(tail_check(&prof, &rep));
    checks.push(nondegenerate_extension_check(&prof, &rep, inv));
    let reflected;
    let seen_by = match side {
        Side::Positive => prob,
        Side::Negative => {
            reflected = prob.reflected();
            &reflected
        }
    };
    let mut eigen: Vec<(f64, usize)> = side_pairs(inv, side)
        .into_iter()
        .filter(|(l, _)| *l > 0.0)
        .filter_map(|(l, e)| e.osc_count.map(|n| (l, n)))
        .collect();
    eigen.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (l, n) in eigen {
        checks.push(rapoport_at(seen_by, l, n)?);
    }
    rep.checks = checks;
    Ok(rep)
}
