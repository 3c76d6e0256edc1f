//! Oscillation counts, quadratic forms and ghost classes of eigenpairs.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::Problem;
use crate::error::{Error, Result};
use crate::poly;
use crate::quadrature::QuadMesh;
use crate::roots;
use crate::shooting::ShotSolution;
use crate::spectrum::{Eigenpair, SpectralInventory, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostTag {
    Ordinary,
    DegenerateRealGhost,
    NondegenerateRealGhost,
    ComplexGhostDegenerate,
    ComplexGhostNondegenerate,
}

impl fmt::Display for GhostTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GhostTag::Ordinary => "ordinary",
            GhostTag::DegenerateRealGhost => "degenerate_real_ghost",
            GhostTag::NondegenerateRealGhost => "nondegenerate_real_ghost",
            GhostTag::ComplexGhostDegenerate => "complex_ghost_degenerate",
            GhostTag::ComplexGhostNondegenerate => "complex_ghost_nondegenerate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhostClass {
    pub tag: GhostTag,
    /// Real eigenfunction without interior zeros.
    pub ground_state: bool,
    /// The tag rests on the tolerance rather than on a resolved sign.
    pub borderline: bool,
    /// Real eigenvalue zero: `lambda * int u^2 w` vanishes identically.
    pub zero_eigenvalue: bool,
}

impl GhostClass {
    pub fn is_real_ghost(&self) -> bool {
        matches!(self.tag, GhostTag::DegenerateRealGhost | GhostTag::NondegenerateRealGhost)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormValues {
    /// `int y^2 w` (no conjugation).
    pub weighted_sq: Complex64,
    /// `int |y|^2 w`.
    pub weighted_abs: f64,
    /// `int p |y'|^2 + q |y|^2`.
    pub dirichlet: f64,
    /// `int |y|^2 |w|`, the scale for relative tests.
    pub scale: f64,
    /// `int |y|^2`.
    pub norm_sq: f64,
    /// `int p |y'|^2 + |q| |y|^2`, the scale of the Dirichlet form.
    pub dirichlet_scale: f64,
    /// Sum of `|K15 - G7|` over the mesh for all integrals above.
    pub quad_error: f64,
}

/// Number of interior zeros of a real solution, by sign changes on a grid
/// fine enough that no two zeros share a cell.
pub fn count_zeros(prob: &Problem, sol: &ShotSolution) -> Result<usize> {
    count_zeros_refined(prob, sol, 1)
}

/// As `count_zeros` with the sampling density multiplied by `refine`.
pub fn count_zeros_refined(prob: &Problem, sol: &ShotSolution, refine: usize) -> Result<usize> {
    let lambda = sol.lambda.re;
    let mut xs = Vec::new();
    for piece in prob.pieces() {
        // Sturm majorant: zeros are at least pi sqrt(p_min / Q_max) apart.
        let (wlo, whi) = piece.w.range_on(piece.x0, piece.x1);
        let (qlo, _) = piece.q.range_on(piece.x0, piece.x1);
        let qmax = (lambda * wlo).max(lambda * whi) - qlo;
        let len = piece.x1 - piece.x0;
        let mut n = 16;
        if qmax > 0.0 {
            let gap = PI * (piece.p_min() / qmax).sqrt();
            n = n.max((4.0 * len / gap).ceil() as usize);
        }
        n *= refine.max(1);
        for k in 0..n {
            xs.push(piece.x0 + len * k as f64 / n as f64);
        }
    }
    let iv = prob.interval();
    let interior: Vec<f64> = xs.into_iter().filter(|&x| x > iv.a && x < iv.b).collect();

    let values: Vec<(f64, f64)> = interior
        .iter()
        .map(|&x| {
            let (y, py) = sol.eval(x);
            (y.re, py.re)
        })
        .collect();
    let mut zeros = 0;
    for k in 1..values.len() {
        let (y0, y1) = (values[k - 1].0, values[k].0);
        if (y0 < 0.0) != (y1 < 0.0) {
            zeros += 1;
            let (x0, x1) = (interior[k - 1], interior[k]);
            let x = roots::brent(|x| Ok(sol.eval(x).0.re), x0, x1, y0, y1, 1e-12 * (x1 - x0).max(1e-300))?;
            let py = sol.eval(x).1.re;
            // local amplitude of (y, p y') around the crossing
            let p = prob.p().eval(x).unwrap_or(1.0);
            let local = values[k - 1].1.abs().max(values[k].1.abs()) + p * y0.abs().max(y1.abs()) / (x1 - x0);
            if py.abs() < 1e-8 * local {
                return Err(Error::Integrity(format!(
                    "y and p y' vanish together near x = {x} (lambda = {lambda})"
                )));
            }
        }
    }
    Ok(zeros)
}

/// Interior zero count of a real eigenpair.
pub fn oscillation_count(prob: &Problem, e: &Eigenpair) -> Result<usize> {
    if e.lambda.im != 0.0 {
        return Err(Error::InvalidProblem("oscillation count needs a real eigenvalue".into()));
    }
    count_zeros(prob, &e.eigenfunction)
}

/// Quadrature mesh fine enough for every eigenfunction with `|lambda| <= lambda_max`.
pub fn mesh_for(prob: &Problem, lambda_max: f64) -> QuadMesh {
    QuadMesh::for_problem(prob, lambda_max, 4)
}

struct Integrals {
    values: Vec<Complex64>,
    errors: Vec<f64>,
}

/// Integrates several functions of `x` on the mesh at once.
fn integrate_many<F>(mesh: &QuadMesh, count: usize, f: F) -> Integrals
where
    F: Fn(f64, &mut [Complex64]),
{
    let mut k = vec![Complex64::new(0.0, 0.0); count];
    let mut errors = vec![0.0; count];
    let mut buf = vec![Complex64::new(0.0, 0.0); count];
    for &(a, b) in &mesh.panels {
        let mut pk = vec![Complex64::new(0.0, 0.0); count];
        let mut pg = vec![Complex64::new(0.0, 0.0); count];
        for (x, wk, wg) in crate::quadrature::panel_rule(a, b) {
            f(x, &mut buf);
            for i in 0..count {
                pk[i] += buf[i] * wk;
                pg[i] += buf[i] * wg;
            }
        }
        for i in 0..count {
            k[i] += pk[i];
            errors[i] += (pk[i] - pg[i]).norm();
        }
    }
    Integrals { values: k, errors }
}

/// Local coefficient values with breakpoint-safe segment selection.
fn coeffs_at(prob: &Problem, x: f64) -> (f64, f64, f64) {
    (
        prob.p().eval(x).unwrap_or(f64::NAN),
        prob.q().eval(x).unwrap_or(f64::NAN),
        prob.w().eval(x).unwrap_or(f64::NAN),
    )
}

pub fn form_values_on(prob: &Problem, e: &Eigenpair, mesh: &QuadMesh) -> FormValues {
    let sol = &e.eigenfunction;
    let r = integrate_many(mesh, 6, |x, out| {
        let (p, q, w) = coeffs_at(prob, x);
        let (y, py) = sol.eval(x);
        let y2 = y.norm_sqr();
        let dy2 = py.norm_sqr() / p;
        out[0] = y * y * w;
        out[1] = (y2 * w).into();
        out[2] = (dy2 + q * y2).into();
        out[3] = (y2 * w.abs()).into();
        out[4] = y2.into();
        out[5] = (dy2 + q.abs() * y2).into();
    });
    FormValues {
        weighted_sq: r.values[0],
        weighted_abs: r.values[1].re,
        dirichlet: r.values[2].re,
        scale: r.values[3].re,
        norm_sq: r.values[4].re,
        dirichlet_scale: r.values[5].re,
        quad_error: r.errors.iter().sum(),
    }
}

pub fn form_values(prob: &Problem, e: &Eigenpair) -> FormValues {
    form_values_on(prob, e, &mesh_for(prob, e.lambda.norm()))
}

/// Ghost class from precomputed forms and (for real eigenvalues) the
/// oscillation count.
pub fn classify_with(lambda: Complex64, forms: &FormValues, osc_count: Option<usize>, tol_deg: f64) -> GhostClass {
    let band = tol_deg * forms.scale;
    let noise = forms.quad_error.max(1e-10 * forms.scale);
    if lambda.im != 0.0 {
        let ws = forms.weighted_sq.norm();
        let degenerate = ws <= band;
        return GhostClass {
            tag: if degenerate { GhostTag::ComplexGhostDegenerate } else { GhostTag::ComplexGhostNondegenerate },
            ground_state: false,
            borderline: (degenerate && ws > noise) || (!degenerate && ws <= noise),
            zero_eigenvalue: false,
        };
    }
    let ws = forms.weighted_sq.re;
    let degenerate = ws.abs() <= band;
    let zero_eigenvalue = lambda.re == 0.0;
    let tag = if degenerate {
        GhostTag::DegenerateRealGhost
    } else if lambda.re * ws < 0.0 {
        GhostTag::NondegenerateRealGhost
    } else {
        GhostTag::Ordinary
    };
    GhostClass {
        tag,
        ground_state: osc_count == Some(0),
        borderline: (degenerate && ws.abs() > noise) || (!degenerate && ws.abs() <= noise),
        zero_eigenvalue,
    }
}

pub fn classify(prob: &Problem, e: &Eigenpair, tol_deg: f64) -> Result<GhostClass> {
    let forms = match e.forms {
        Some(f) => f,
        None => form_values(prob, e),
    };
    let osc = if e.lambda.im == 0.0 {
        Some(match e.osc_count {
            Some(n) => n,
            None => oscillation_count(prob, e)?,
        })
    } else {
        None
    };
    Ok(classify_with(resolved_lambda(e, Tolerances::default().refine), &forms, osc, tol_deg))
}

/// A real eigenvalue that cannot be told apart from zero is treated as zero.
pub fn resolved_lambda(e: &Eigenpair, refine_tol: f64) -> Complex64 {
    if e.lambda.im == 0.0 && e.lambda.re.abs() <= e.residual.max(refine_tol) {
        Complex64::new(0.0, 0.0)
    } else {
        e.lambda
    }
}

/// Fills oscillation counts, forms and ghost classes of every eigenpair.
pub fn annotate(prob: &Problem, inv: &mut SpectralInventory) -> Result<()> {
    let lambda_max = inv.pairs().map(|e| e.lambda.norm()).fold(1.0, f64::max);
    let mesh = mesh_for(prob, lambda_max);
    let tol_deg = inv.tolerances.tol_deg;
    let refine_tol = inv.tolerances.refine;
    inv.real_pairs
        .par_iter_mut()
        .chain(inv.complex_pairs.par_iter_mut())
        .try_for_each(|e| -> Result<()> {
            let forms = form_values_on(prob, e, &mesh);
            let osc = if e.lambda.im == 0.0 { Some(oscillation_count(prob, e)?) } else { None };
            e.forms = Some(forms);
            e.osc_count = osc;
            e.ghost_class = Some(classify_with(resolved_lambda(e, refine_tol), &forms, osc, tol_deg));
            Ok(())
        })
}

/// Re-derives every ghost class with a different threshold.
pub fn reclassify(inv: &mut SpectralInventory, tol_deg: f64) {
    let refine_tol = inv.tolerances.refine;
    for e in inv.real_pairs.iter_mut().chain(inv.complex_pairs.iter_mut()) {
        if let Some(f) = e.forms {
            e.ghost_class = Some(classify_with(resolved_lambda(e, refine_tol), &f, e.osc_count, tol_deg));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `int u v w = 0` for distinct real eigenvalues.
    RealReal,
    /// `int u phi w = 0`.
    RealComplex,
    /// `int u conj(phi) w = 0`.
    RealComplexConj,
    /// `int p phi1' conj(phi2') + q phi1 conj(phi2) = 0`.
    DirichletCross,
    /// `int phi1 conj(phi2) w = 0`.
    WeightedCross,
    /// `int phi1 phi2 w = 0`.
    WeightedProduct,
    /// `int p |phi'|^2 + q |phi|^2 = 0`.
    DirichletSelf,
    /// `int |phi|^2 w = 0`.
    WeightedSelf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthoResidual {
    pub identity: Identity,
    pub lambda_1: Complex64,
    pub lambda_2: Complex64,
    /// `|integral|` over the product of the relevant norms.
    pub residual: f64,
}

/// Normalized residuals of every applicable orthogonality identity.
pub fn orthogonality_residuals(prob: &Problem, inv: &SpectralInventory) -> Vec<OrthoResidual> {
    let lambda_max = inv.pairs().map(|e| e.lambda.norm()).fold(1.0, f64::max);
    let mesh = mesh_for(prob, lambda_max);
    let pairs: Vec<&Eigenpair> = inv.pairs().collect();
    // Samples of (y, py') for every eigenfunction at every node.
    let nodes = mesh.nodes();
    let samples: Vec<Vec<(Complex64, Complex64)>> = pairs
        .par_iter()
        .map(|e| nodes.iter().map(|&(x, _, _)| e.eigenfunction.eval(x)).collect())
        .collect();
    let coeffs: Vec<(f64, f64, f64)> = nodes.iter().map(|&(x, _, _)| coeffs_at(prob, x)).collect();
    let integrate = |f: &dyn Fn(usize) -> Complex64| -> Complex64 {
        nodes.iter().enumerate().map(|(k, &(_, wk, _))| f(k) * wk).sum()
    };
    let norms: Vec<f64> = (0..pairs.len())
        .map(|i| integrate(&|k| samples[i][k].0.norm_sqr().into()).re.sqrt())
        .collect();
    let dnorms: Vec<f64> = (0..pairs.len())
        .map(|i| {
            integrate(&|k| {
                let (p, q, _) = coeffs[k];
                let (y, py) = samples[i][k];
                (py.norm_sqr() / p + q.abs() * y.norm_sqr()).into()
            })
            .re
            .sqrt()
        })
        .collect();

    let mut jobs = Vec::new();
    for i in 0..pairs.len() {
        for j in 0..pairs.len() {
            let (a, b) = (pairs[i], pairs[j]);
            match (a.is_real(), b.is_real()) {
                (true, true) if i < j && a.lambda != b.lambda => jobs.push((Identity::RealReal, i, j)),
                (true, false) => {
                    jobs.push((Identity::RealComplex, i, j));
                    jobs.push((Identity::RealComplexConj, i, j));
                }
                (false, false) if i < j => {
                    jobs.push((Identity::DirichletCross, i, j));
                    jobs.push((Identity::WeightedCross, i, j));
                    jobs.push((Identity::WeightedProduct, i, j));
                }
                (false, false) if i == j => {
                    jobs.push((Identity::DirichletSelf, i, i));
                    jobs.push((Identity::WeightedSelf, i, i));
                }
                _ => {}
            }
        }
    }
    jobs.par_iter()
        .map(|&(identity, i, j)| {
            let (si, sj) = (&samples[i], &samples[j]);
            let value = integrate(&|k| {
                let (p, q, w) = coeffs[k];
                let ((y1, py1), (y2, py2)) = (si[k], sj[k]);
                match identity {
                    Identity::RealReal | Identity::RealComplex | Identity::WeightedProduct => y1 * y2 * w,
                    Identity::RealComplexConj | Identity::WeightedCross | Identity::WeightedSelf => {
                        y1 * y2.conj() * w
                    }
                    Identity::DirichletCross | Identity::DirichletSelf => {
                        py1 * py2.conj() / p + q * y1 * y2.conj()
                    }
                }
            });
            let denom = match identity {
                Identity::DirichletCross | Identity::DirichletSelf => dnorms[i] * dnorms[j],
                _ => norms[i] * norms[j],
            };
            OrthoResidual {
                identity,
                lambda_1: pairs[i].lambda,
                lambda_2: pairs[j].lambda,
                residual: value.norm() / denom,
            }
        })
        .collect()
}

/// Smooth multiplier `eta` for the minimum-principle test.
#[derive(Clone, Debug)]
pub enum Multiplier {
    /// Coefficients of increasing powers of `x`.
    Polynomial(Vec<f64>),
    /// Tabulated `(x, eta, eta')` on an increasing grid, linearly interpolated.
    Sampled(Vec<(f64, f64, f64)>),
}

impl Multiplier {
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match self {
            Multiplier::Polynomial(c) => (poly::eval(c, x), poly::eval(&poly::derivative(c), x)),
            Multiplier::Sampled(s) => {
                let k = s.partition_point(|r| r.0 <= x).clamp(1, s.len() - 1);
                let (x0, e0, d0) = s[k - 1];
                let (x1, e1, d1) = s[k];
                let t = if x1 > x0 { ((x - x0) / (x1 - x0)).clamp(0.0, 1.0) } else { 0.0 };
                (e0 + t * (e1 - e0), d0 + t * (d1 - d0))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    /// `int p |phi'|^2 + q |phi|^2 - lambda int |phi|^2 w` with `phi = u eta`.
    pub gap: f64,
    /// Quadrature estimate plus the effect of the eigenvalue residual.
    pub error: f64,
}

pub fn quadratic_form_gap(prob: &Problem, e: &Eigenpair, eta: &Multiplier) -> Result<Gap> {
    if e.lambda.im != 0.0 {
        return Err(Error::InvalidProblem("minimum principle needs a real eigenpair".into()));
    }
    let mesh = mesh_for(prob, e.lambda.norm());
    let lambda = e.lambda.re;
    let r = integrate_many(&mesh, 2, |x, out| {
        let (p, q, w) = coeffs_at(prob, x);
        let (y, py) = e.eigenfunction.eval(x);
        let (u, pu) = (y.re, py.re);
        let (eta, deta) = eta.eval(x);
        let phi = u * eta;
        let pphi = pu * eta + p * u * deta;
        out[0] = (pphi * pphi / p + q * phi * phi - lambda * phi * phi * w).into();
        out[1] = (phi * phi * w.abs()).into();
    });
    let boundary = e.eigenfunction.eval(e.eigenfunction.b()).0.norm() * e.eigenfunction.eval(e.eigenfunction.b()).1.norm();
    let error = r.errors[0] + e.residual * r.values[1].re + 1e-9 * r.values[1].re + boundary * 10.0;
    Ok(Gap { gap: r.values[0].re, error })
}

/// Classification report, one row per eigenpair.
pub fn write_report_csv<W: Write>(inv: &SpectralInventory, mut out: W) -> Result<()> {
    writeln!(
        out,
        "lambda_re,lambda_im,multiplicity,osc_count,weighted_sq,weighted_abs,dirichlet,class,borderline_flag"
    )?;
    for e in inv.pairs() {
        let f = e.forms;
        let ws = f.map(|f| if e.is_real() { f.weighted_sq.re } else { f.weighted_sq.norm() });
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.lambda.re,
            e.lambda.im,
            e.multiplicity,
            e.osc_count.map(|n| n.to_string()).unwrap_or_default(),
            ws.map(|v| v.to_string()).unwrap_or_default(),
            f.map(|f| f.weighted_abs.to_string()).unwrap_or_default(),
            f.map(|f| f.dirichlet.to_string()).unwrap_or_default(),
            e.ghost_class.map(|g| g.tag.to_string()).unwrap_or_else(|| "unclassified".into()),
            e.ghost_class.is_some_and(|g| g.borderline),
        )?;
    }
    Ok(())
}
