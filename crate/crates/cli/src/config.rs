use std::path::{Path, PathBuf};

use serde::Deserialize;
use sl_ghosts::problem_file;
use sl_ghosts::spectrum::{default_window, Rect, SpectralWindow, Tolerances};
use sl_ghosts::{fixtures, Error, Interval, Problem, Result};

/// Settings shared by every subcommand. Values read from a config file
/// replace the ones given as flags.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, clap::Args)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Named fixture: P0, P1 (needs --q), P2, P2S or an example id such as qm22
    #[arg(long)]
    pub fixture: Option<String>,
    /// Constant potential of P1
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// TOML problem file
    #[arg(long)]
    pub file: Option<PathBuf>,

    /// Lower end of the real search range (default -lmax)
    #[arg(long, allow_hyphen_values = true)]
    pub lmin: Option<f64>,
    /// Upper end of the real search range
    #[arg(long)]
    pub lmax: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub re_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub re_max: Option<f64>,
    #[arg(long)]
    pub im_min: Option<f64>,
    #[arg(long)]
    pub im_max: Option<f64>,

    /// Local error target of the shooting integrator
    #[arg(long)]
    pub shoot_tol: Option<f64>,
    /// Accuracy of refined eigenvalues
    #[arg(long)]
    pub refine_tol: Option<f64>,
    /// Per-panel error target of contour counts
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Relative threshold for degenerate ghosts
    #[arg(long)]
    pub tol_deg: Option<f64>,

    /// Output directory
    #[arg(long, env = "SL_GHOSTS_OUT")]
    pub out: Option<PathBuf>,
    /// Output formats, comma separated: csv, json
    #[arg(long, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
    /// Eigenfunction samples per CSV
    #[arg(long)]
    pub samples: Option<usize>,
}

pub const DEFAULT_OUT: &str = "sl-ghosts-out";
pub const DEFAULT_SAMPLES: usize = 401;

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Applies `config` (when given) on top of the flags and validates.
    pub fn resolve(mut self, config: Option<&Path>) -> Result<Self> {
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)?;
            let file: RunConfig = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            overlay!(
                self, file, fixture, q, file, lmin, lmax, re_min, re_max, im_min, im_max, shoot_tol, refine_tol,
                quad_tol, tol_deg, out, formats, samples
            );
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("shoot_tol", self.shoot_tol),
            ("refine_tol", self.refine_tol),
            ("quad_tol", self.quad_tol),
            ("tol_deg", self.tol_deg),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidProblem(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(q) = self.q {
            if !q.is_finite() {
                return Err(Error::InvalidProblem(format!("q must be finite, got {q}")));
            }
        }
        for f in self.formats.iter().flatten() {
            if f != "csv" && f != "json" {
                return Err(Error::InvalidProblem(format!("unknown output format '{f}'")));
            }
        }
        if self.fixture.is_some() && self.file.is_some() {
            return Err(Error::InvalidProblem("give either --fixture or --file, not both".into()));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem> {
        match (&self.fixture, &self.file) {
            (_, Some(path)) => problem_file::load(path),
            (Some(name), None) => fixtures::by_name(name, self.q),
            (None, None) => match self.q {
                Some(q) => Ok(fixtures::p1(q)),
                None => Err(Error::InvalidProblem("no problem given: use --fixture, --q or --file".into())),
            },
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            shoot: self.shoot_tol.unwrap_or(d.shoot),
            refine: self.refine_tol.unwrap_or(d.refine),
            quad: self.quad_tol.unwrap_or(d.quad),
            tol_deg: self.tol_deg.unwrap_or(d.tol_deg),
        }
    }

    /// Default window with the overrides applied. The default real range is
    /// only searched for when no bound is given.
    pub fn window(&self, prob: &Problem, tol: &Tolerances) -> Result<SpectralWindow> {
        let real = match (self.lmin, self.lmax) {
            (lo, Some(hi)) => Interval::new(lo.unwrap_or(-hi), hi)?,
            (Some(lo), None) => Interval::new(lo, default_window(prob, tol)?.real_range.b)?,
            (None, None) => default_window(prob, tol)?.real_range,
        };
        let d = sl_ghosts::spectrum::default_rect(prob);
        let rect = Rect::new(
            self.re_min.unwrap_or(d.re_min),
            self.re_max.unwrap_or(d.re_max),
            self.im_min.unwrap_or(d.im_min),
            self.im_max.unwrap_or(d.im_max),
        )?;
        SpectralWindow::new(real, rect)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.as_ref().is_none_or(|f| f.iter().any(|x| x == format))
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(DEFAULT_SAMPLES)
    }
}
