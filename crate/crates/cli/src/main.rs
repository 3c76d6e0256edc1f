use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sl_ghosts::analysis::{self, IndexReport, Outcome, Side};
use sl_ghosts::classification::{orthogonality_residuals, write_report_csv};
use sl_ghosts::fixtures::EXAMPLE_IDS;
use sl_ghosts::reproduce::{self, Status};
use sl_ghosts::spectrum::{build_inventory, Rect, SpectralInventory};
use sl_ghosts::{Error, Problem};

mod config;
mod sweep;

use config::RunConfig;

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INTEGRATION: u8 = 3;
const EXIT_CERTIFICATE: u8 = 4;
const EXIT_WINDOW: u8 = 5;
const EXIT_CHECK: u8 = 6;

/// Largest normalized orthogonality residual accepted by `verify`.
const ORTHO_TOL: f64 = 1e-5;
/// Largest `|D/D'|` at the conjugate of a refined eigenvalue.
const CONJUGATE_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "sl-ghosts", version, about = "Spectra of non-definite Sturm-Liouville problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Positive,
    Negative,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Positive => Side::Positive,
            SideArg::Negative => Side::Negative,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, eigenfunctions and ghost classes in a window
    Solve {
        #[command(flatten)]
        run: RunConfig,
        /// TOML file whose settings replace the flags
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Richardson and Haupt indices and numbers
    Indices {
        #[command(flatten)]
        run: RunConfig,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "positive")]
        side: SideArg,
        /// Report indices even when too few counts past n_H are in the window
        #[arg(long)]
        allow_unstable: bool,
    },
    /// Every applicable identity and inequality
    Verify {
        #[command(flatten)]
        run: RunConfig,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "positive")]
        side: SideArg,
    },
    /// Published values of a worked example next to recomputed ones
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(EXAMPLE_IDS))]
        id: String,
        #[arg(long, env = "SL_GHOSTS_OUT")]
        out: Option<PathBuf>,
    },
    /// Eigenvalue trajectories of p = 1, w = sgn x on [-1, 1] over constant q
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        step: f64,
        /// Use -q as the potential, as in y'' + (q + lambda sgn x) y = 0
        #[arg(long)]
        negate_q: bool,
        #[command(flatten)]
        run: RunConfig,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::InvalidProblem(_) | Error::Domain { .. } => EXIT_PARSE,
            Error::StepUnderflow { .. }
            | Error::TooManySteps { .. }
            | Error::AuxiliarySearch { .. }
            | Error::ContourThroughZero { .. }
            | Error::QrNoConvergence { .. }
            | Error::Integrity(_) => EXIT_INTEGRATION,
            Error::Uncertified(_) => EXIT_CERTIFICATE,
            Error::NotSupported(_) | Error::Io(_) | Error::Json(_) => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn fail(code: u8, message: String) -> Failure {
    Failure { code, message }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { run, config } => solve(run, config.as_deref()),
        Command::Indices { run, config, side, allow_unstable } => indices(run, config.as_deref(), side.into(), allow_unstable),
        Command::Verify { run, config, side } => verify(run, config.as_deref(), side.into()),
        Command::Reproduce { id, out } => reproduce_cmd(&id, out),
        Command::Sweep { from, to, step, negate_q, run, config } => sweep_cmd(from, to, step, negate_q, run, config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn inventory(cfg: &RunConfig) -> Result<(Problem, SpectralInventory), Failure> {
    let prob = cfg.problem()?;
    let tol = cfg.tolerances();
    let window = cfg.window(&prob, &tol)?;
    let inv = build_inventory(&prob, window, &tol)?;
    Ok((prob, inv))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn print_inventory(inv: &SpectralInventory) {
    let w = &inv.window;
    println!(
        "window: real [{}, {}], rectangle [{}, {}] x [{}, {}]",
        w.real_range.a, w.real_range.b, w.complex_rect.re_min, w.complex_rect.re_max, w.complex_rect.im_min, w.complex_rect.im_max
    );
    println!("real eigenvalues: {}", inv.real_pairs.len());
    for e in &inv.real_pairs {
        let osc = e.osc_count.map_or("-".into(), |n| n.to_string());
        let class = e.ghost_class.map_or("-".into(), |g| g.tag.to_string());
        let mult = if e.multiplicity > 1 { format!(" (x{})", e.multiplicity) } else { String::new() };
        println!("  {:>16.9}{mult}  zeros {osc:>3}  {class}", e.lambda.re);
    }
    println!("non-real eigenvalues: {} (upper half-plane)", inv.complex_pairs.len());
    for e in &inv.complex_pairs {
        let class = e.ghost_class.map_or("-".into(), |g| g.tag.to_string());
        println!("  {:>16.9} {:+.9}i  {class}", e.lambda.re, e.lambda.im);
    }
    let c = &inv.certificate;
    println!(
        "certificate: contour count {} refined {} -> {}",
        c.rect_count,
        c.found_count,
        if c.matched { "match" } else { "MISMATCH" }
    );
    for u in &c.unresolved {
        println!("  unresolved: {u}");
    }
}

fn solve(run: RunConfig, config: Option<&Path>) -> CmdResult {
    let cfg = run.resolve(config)?;
    let (_, inv) = inventory(&cfg)?;
    print_inventory(&inv);
    let dir = cfg.out_dir();
    if cfg.wants("json") {
        inv.write_files(&dir, cfg.samples())?;
    }
    if cfg.wants("csv") {
        write_report_csv(&inv, create(&dir, "classification.csv")?)?;
    }
    if !inv.certificate.matched {
        return Err(fail(EXIT_CERTIFICATE, "argument-principle count does not match the refined eigenvalues".into()));
    }
    Ok(())
}

fn report(cfg: &RunConfig, side: Side) -> Result<(Problem, SpectralInventory, IndexReport), Failure> {
    let (prob, inv) = inventory(cfg)?;
    let rep = analysis::analyze(&prob, &inv, side)?;
    Ok((prob, inv, rep))
}

fn write_report(cfg: &RunConfig, rep: &IndexReport) -> CmdResult {
    let dir = cfg.out_dir();
    if cfg.wants("json") {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("indices.json"), rep.to_json()? + "\n")?;
    }
    if cfg.wants("csv") {
        rep.write_checks_csv(create(&dir, "checks.csv")?)?;
    }
    Ok(())
}

fn indices(run: RunConfig, config: Option<&Path>, side: Side, allow_unstable: bool) -> CmdResult {
    let cfg = run.resolve(config)?;
    let (_, _, rep) = report(&cfg, side)?;
    print!("{rep}");
    write_report(&cfg, &rep)?;
    if rep.window_too_small && !allow_unstable {
        return Err(fail(
            EXIT_WINDOW,
            format!(
                "only {} counts past n_H in the window (need {}); raise --lmax or pass --allow-unstable",
                rep.stability_margin,
                analysis::MIN_STABILITY_MARGIN
            ),
        ));
    }
    Ok(())
}

fn verify(run: RunConfig, config: Option<&Path>, side: Side) -> CmdResult {
    let cfg = run.resolve(config)?;
    let (prob, inv, rep) = report(&cfg, side)?;
    print!("{rep}");
    write_report(&cfg, &rep)?;

    let mut failed: Vec<String> = rep.failed().map(|c| c.name.clone()).collect();
    println!();
    let mut line = |name: &str, value: f64, bound: f64| {
        let ok = value <= bound;
        println!("{name:<38} {value:>14.3e} <= {bound:<14.3e} {}", if ok { Outcome::Pass } else { Outcome::Fail });
        if !ok {
            failed.push(name.to_string());
        }
    };
    let c = &inv.certificate;
    line("certificate_mismatch", (c.rect_count - c.found_count).abs() as f64 + c.unresolved.len() as f64, 0.0);
    line("conjugate_symmetry", c.conjugate_residual, CONJUGATE_TOL);
    let residuals = orthogonality_residuals(&prob, &inv);
    let mut worst: Vec<(String, f64)> = Vec::new();
    for r in &residuals {
        let name = format!("orthogonality_{}", serde_json::to_value(r.identity).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
        match worst.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => *v = v.max(r.residual),
            None => worst.push((name, r.residual)),
        }
    }
    for (name, v) in &worst {
        line(name, *v, ORTHO_TOL);
    }
    if failed.is_empty() {
        println!("\nall checks pass");
        Ok(())
    } else {
        Err(fail(EXIT_CHECK, format!("failed checks: {}", failed.join(", "))))
    }
}

fn reproduce_cmd(id: &str, out: Option<PathBuf>) -> CmdResult {
    let rep = reproduce::reproduce(id)?;
    println!("{rep}");
    let dir = out.unwrap_or_else(|| PathBuf::from(config::DEFAULT_OUT));
    rep.write_csv(create(&dir, &format!("reproduce_{id}.csv"))?)?;
    std::fs::write(dir.join(format!("reproduce_{id}.json")), rep.to_json()? + "\n")?;
    let failed: Vec<&str> = rep.rows.iter().filter(|r| r.status == Status::Fail).map(|r| r.quantity.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fail(EXIT_CHECK, format!("mismatched rows: {}", failed.join(", "))))
    }
}

fn sweep_cmd(from: f64, to: f64, step: f64, negate: bool, run: RunConfig, config: Option<&Path>) -> CmdResult {
    let cfg = run.resolve(config)?;
    if cfg.fixture.is_some() || cfg.file.is_some() || cfg.q.is_some() {
        return Err(Error::InvalidProblem("sweep varies q of the sign-weight problem; drop --fixture, --file and --q".into()).into());
    }
    let rect = match (cfg.re_min, cfg.re_max, cfg.im_min, cfg.im_max) {
        (None, None, None, None) => None,
        (a, b, c, d) => Some(Rect::new(a.unwrap_or(-20.0), b.unwrap_or(20.0), c.unwrap_or(1e-3), d.unwrap_or(20.0))?),
    };
    let spec = sweep::SweepSpec { from, to, step, negate, lmax: cfg.lmax.unwrap_or(60.0), rect };
    let points = sweep::run(&spec, &cfg.tolerances())?;
    let events = sweep::collisions(&points);
    let dir = cfg.out_dir();
    sweep::write_trajectories(&points, create(&dir, "sweep.csv")?)?;
    sweep::write_collisions(&events, create(&dir, "collisions.csv")?)?;
    println!("{:>10} {:>5} {:>8} {:>9}", "q", "real", "pairs", "certified");
    for p in &points {
        println!("{:>10} {:>5} {:>8} {:>9}", p.q, p.real.len(), p.complex.len(), p.certified);
    }
    for e in &events {
        println!("{:?} between q = {} and {} near lambda = {:.6} (gap {:.3e})", e.kind, e.q_lo, e.q_hi, e.lambda, e.gap);
    }
    println!("wrote {}", dir.join("sweep.csv").display());
    Ok(())
}
