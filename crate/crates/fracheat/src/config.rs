//! Layered run configuration: built-in defaults, then a flat key = value
//! config file, then command-line overrides, in that order. Unknown keys
//! are rejected by name, and the smoothness index is gated against the
//! well-posedness window max{-2/(alpha gamma), -2} < s < 0 unless forced.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::experiments::{DataKind, DataSpec};
use crate::norms::{MorreyParams, SpaceParams};
use crate::operators::{FracParams, OperatorBackend};
use crate::solver::{SolverConfig, TimeGrid};
use crate::spectral::Grid;
use crate::{Error, Result};

/// Every tunable of a run, with defaults for a small one-dimensional
/// cubic problem at half order.
#[derive(Clone, Debug)]
pub struct Config {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub homogeneous: bool,
    pub t_horizon: f64,
    pub segments: usize,
    pub rho: f64,
    pub max_picard_iters: usize,
    pub cauchy_tol: f64,
    pub divergence_cap: f64,
    pub stride: usize,
    pub backend: String,
    pub max_halvings: usize,
    pub data: String,
    pub amplitude: f64,
    pub scale: f64,
    pub seed: u64,
    pub exponent: f64,
    pub j_lo: i32,
    pub j_hi: i32,
    pub spectral_derivative: bool,
    pub t_eval: f64,
    pub sigma: f64,
    explicit: BTreeSet<String>,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            dim: 1,
            n: 512,
            half_width: 32.0,
            alpha: 0.5,
            gamma: 3.0,
            s: -0.4,
            p: 3.0,
            q: 3.0,
            r: f64::INFINITY,
            homogeneous: true,
            t_horizon: 0.5,
            segments: 64,
            rho: 2.0,
            max_picard_iters: 25,
            cauchy_tol: 1e-9,
            divergence_cap: 1e6,
            stride: 8,
            backend: "ml".into(),
            max_halvings: 0,
            data: "gaussian".into(),
            amplitude: 0.1,
            scale: 1.0,
            seed: 7,
            exponent: 1.0,
            j_lo: 0,
            j_hi: 2,
            spectral_derivative: false,
            t_eval: 0.1,
            sigma: 0.0,
            explicit: BTreeSet::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, want: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("config key '{key}' expects {want}, got '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Usage(format!(
            "config key '{key}' expects true or false, got '{value}'"
        ))),
    }
}

impl Config {
    /// Set one key from its text form; unknown keys are an error naming
    /// the key. Keys set this way override defaults and are remembered as
    /// explicit.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "dim" => self.dim = parse_num(key, value, "an integer")?,
            "n" => self.n = parse_num(key, value, "an integer")?,
            "half_width" => self.half_width = parse_num(key, value, "a number")?,
            "alpha" => self.alpha = parse_num(key, value, "a number")?,
            "gamma" => self.gamma = parse_num(key, value, "a number")?,
            "s" => self.s = parse_num(key, value, "a number")?,
            "p" => self.p = parse_num(key, value, "a number")?,
            "q" => self.q = parse_num(key, value, "a number")?,
            "r" => self.r = parse_num(key, value, "a number or inf")?,
            "homogeneous" => self.homogeneous = parse_bool(key, value)?,
            "t_horizon" => self.t_horizon = parse_num(key, value, "a number")?,
            "segments" => self.segments = parse_num(key, value, "an integer")?,
            "rho" => self.rho = parse_num(key, value, "a number")?,
            "max_picard_iters" => self.max_picard_iters = parse_num(key, value, "an integer")?,
            "cauchy_tol" => self.cauchy_tol = parse_num(key, value, "a number")?,
            "divergence_cap" => self.divergence_cap = parse_num(key, value, "a number")?,
            "stride" => self.stride = parse_num(key, value, "an integer")?,
            "backend" => match value {
                "ml" | "subordination" => self.backend = value.into(),
                _ => {
                    return Err(Error::Usage(format!(
                        "config key 'backend' expects ml or subordination, got '{value}'"
                    )))
                }
            },
            "max_halvings" => self.max_halvings = parse_num(key, value, "an integer")?,
            "data" => match value {
                "gaussian" | "l1_bump" | "dirac" | "dirac_derivative" | "power_law"
                | "random_band" => self.data = value.into(),
                _ => {
                    return Err(Error::Usage(format!(
                        "config key 'data' expects one of gaussian, l1_bump, dirac, \
                         dirac_derivative, power_law, random_band, got '{value}'"
                    )))
                }
            },
            "amplitude" => self.amplitude = parse_num(key, value, "a number")?,
            "scale" => self.scale = parse_num(key, value, "a number")?,
            "seed" => self.seed = parse_num(key, value, "an integer")?,
            "exponent" => self.exponent = parse_num(key, value, "a number")?,
            "j_lo" => self.j_lo = parse_num(key, value, "an integer")?,
            "j_hi" => self.j_hi = parse_num(key, value, "an integer")?,
            "spectral_derivative" => self.spectral_derivative = parse_bool(key, value)?,
            "t_eval" => self.t_eval = parse_num(key, value, "a number")?,
            "sigma" => self.sigma = parse_num(key, value, "a number")?,
            _ => return Err(Error::Usage(format!("unknown config key '{key}'"))),
        }
        self.explicit.insert(key.to_string());
        Ok(())
    }

    /// Whether a key was set by file or flag rather than left at default.
    pub fn is_set(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    /// Parse a whole config file body: one key = value per line, '#'
    /// starts a comment, blank lines ignored.
    pub fn parse_file_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!(
                    "config line {} is not 'key = value': '{}'",
                    lineno + 1,
                    raw.trim()
                ))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Defaults, then the file, then the overrides; validated at the end.
    pub fn from_layers(
        file: Option<&Path>,
        overrides: &[(String, String)],
        force: bool,
    ) -> Result<Config> {
        let mut cfg = Config::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Usage(format!("cannot read config file {}: {e}", path.display()))
            })?;
            cfg.parse_file_text(&text)?;
        }
        for (key, value) in overrides {
            cfg.set(key, value)?;
        }
        cfg.validate(force)?;
        Ok(cfg)
    }

    /// Cheap global checks; the typed constructors below do the rest.
    pub fn validate(&self, force: bool) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Usage(format!(
                "dim must be 1 or 2, got {}",
                self.dim
            )));
        }
        if !(self.t_horizon > 0.0) {
            return Err(Error::Usage(format!(
                "t_horizon must be positive, got {}",
                self.t_horizon
            )));
        }
        if self.segments == 0 {
            return Err(Error::Usage("segments must be at least 1".into()));
        }
        self.grid()?;
        let fp = self.frac_params()?;
        let lo = (-2.0 / (fp.alpha * fp.gamma)).max(-2.0);
        if !force && !(lo < self.s && self.s < 0.0) {
            return Err(Error::Usage(format!(
                "s = {} lies outside the well-posedness window \
                 max{{-2/(alpha gamma), -2}} < s < 0 = ({lo:.6}, 0) for alpha = {}, \
                 gamma = {}; pass --force to run anyway",
                self.s, fp.alpha, fp.gamma
            )));
        }
        Ok(())
    }

    /// Full resolved configuration as text, suitable for the manifest and
    /// parseable back by `set`.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("dim".into(), self.dim.to_string());
        m.insert("n".into(), self.n.to_string());
        m.insert("half_width".into(), self.half_width.to_string());
        m.insert("alpha".into(), self.alpha.to_string());
        m.insert("gamma".into(), self.gamma.to_string());
        m.insert("s".into(), self.s.to_string());
        m.insert("p".into(), self.p.to_string());
        m.insert("q".into(), self.q.to_string());
        m.insert("r".into(), self.r.to_string());
        m.insert("homogeneous".into(), self.homogeneous.to_string());
        m.insert("t_horizon".into(), self.t_horizon.to_string());
        m.insert("segments".into(), self.segments.to_string());
        m.insert("rho".into(), self.rho.to_string());
        m.insert("max_picard_iters".into(), self.max_picard_iters.to_string());
        m.insert("cauchy_tol".into(), self.cauchy_tol.to_string());
        m.insert("divergence_cap".into(), self.divergence_cap.to_string());
        m.insert("stride".into(), self.stride.to_string());
        m.insert("backend".into(), self.backend.clone());
        m.insert("max_halvings".into(), self.max_halvings.to_string());
        m.insert("data".into(), self.data.clone());
        m.insert("amplitude".into(), self.amplitude.to_string());
        m.insert("scale".into(), self.scale.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("exponent".into(), self.exponent.to_string());
        m.insert("j_lo".into(), self.j_lo.to_string());
        m.insert("j_hi".into(), self.j_hi.to_string());
        m.insert("spectral_derivative".into(), self.spectral_derivative.to_string());
        m.insert("t_eval".into(), self.t_eval.to_string());
        m.insert("sigma".into(), self.sigma.to_string());
        m
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.half_width)
    }

    pub fn frac_params(&self) -> Result<FracParams> {
        FracParams::new(self.alpha, self.gamma, self.dim)
    }

    pub fn space_params(&self) -> Result<SpaceParams> {
        SpaceParams::new(self.s, self.p, self.q, self.r, self.homogeneous)
    }

    pub fn morrey_params(&self) -> Result<MorreyParams> {
        Ok(self.space_params()?.morrey())
    }

    pub fn operator_backend(&self) -> OperatorBackend {
        if self.backend == "subordination" {
            OperatorBackend::subordination()
        } else {
            OperatorBackend::MlMultiplier
        }
    }

    pub fn data_spec(&self) -> DataSpec {
        let kind = match self.data.as_str() {
            "l1_bump" => DataKind::L1Bump,
            "dirac" => DataKind::Dirac,
            "dirac_derivative" => DataKind::DiracDerivative {
                spectral: self.spectral_derivative,
            },
            "power_law" => DataKind::PowerLaw { exponent: self.exponent },
            "random_band" => DataKind::RandomBand { j_lo: self.j_lo, j_hi: self.j_hi },
            _ => DataKind::Gaussian,
        };
        DataSpec {
            kind,
            amplitude: self.amplitude,
            scale: self.scale,
            seed: self.seed,
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::graded(self.t_horizon, self.segments, self.rho)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        Ok(SolverConfig {
            fp: self.frac_params()?,
            space: self.space_params()?,
            time: self.time_grid()?,
            max_picard_iters: self.max_picard_iters,
            cauchy_tol: self.cauchy_tol,
            divergence_cap: self.divergence_cap,
            backend: self.operator_backend(),
            stride: self.stride,
        })
    }
}
