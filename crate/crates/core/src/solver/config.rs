//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once, unknown keys are rejected, and [`RunConfig::echo`] writes a
//! canonical form that parses back to an identical configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{Orientation, PerturbationKind, PerturbationSpec, Physics, SolverParams};
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::riemann::FluidParams;

/// Which run-time checks `rtmix simulate` turns into a failing exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verification {
    pub envelope: bool,
    pub monotonicity: bool,
    pub perimeter: bool,
}

impl Default for Verification {
    fn default() -> Self {
        Verification { envelope: true, monotonicity: true, perimeter: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub g: f64,
    pub l: f64,
    pub h: f64,
    pub ny: usize,
    pub nz: usize,
    pub t_end: f64,
    pub sample_interval: f64,
    pub perturbation: PerturbationSpec,
    pub edge_threshold: f64,
    /// Fraction of `H` at which a mixing edge stops the run.
    pub stop_fraction: f64,
    /// Write a snapshot every this many samples; 0 disables snapshots.
    pub snapshot_every: usize,
    pub orientation: Orientation,
    pub physics: Physics,
    pub cfl_safety: f64,
    pub cfl_adv: f64,
    pub poisson_tol: f64,
    pub out: Option<PathBuf>,
    pub verify: Verification,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverParams::default();
        RunConfig {
            rho_plus: 1.2,
            rho_minus: 0.8,
            g: 10.0,
            l: 8.0,
            h: 16.0,
            ny: 128,
            nz: 512,
            t_end: 40.0,
            sample_interval: 0.1,
            perturbation: PerturbationSpec { kind: PerturbationKind::SingleMode { mode: 1 }, amplitude: 0.05, width: 0.25 },
            edge_threshold: crate::diagnostics::DEFAULT_EDGE_THRESHOLD,
            stop_fraction: 0.9,
            snapshot_every: 0,
            orientation: solver.orientation,
            physics: solver.physics,
            cfl_safety: solver.cfl_safety,
            cfl_adv: solver.cfl_adv,
            poisson_tol: solver.poisson_tol,
            out: None,
            verify: Verification::default(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn parse_modes(v: &str) -> Result<Vec<(u32, f64, f64)>> {
    v.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            match parts.as_slice() {
                [k, w, ph] => Ok((
                    parse_num("perturbation.modes", k)?,
                    parse_num("perturbation.modes", w)?,
                    parse_num("perturbation.modes", ph)?,
                )),
                _ => Err(Error::Config(format!("perturbation.modes: expected k:weight:phase, got {item:?}"))),
            }
        })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = std::collections::BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if seen.insert(k.clone(), v).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k}", n + 1)));
            }
        }
        let mut c = RunConfig::default();
        let kind = seen.remove("perturbation.kind");
        let mut seed = None;
        let mut mode = None;
        let mut modes = None;
        let mut n_modes = None;
        for (k, v) in &seen {
            let v = v.as_str();
            match k.as_str() {
                "rho_plus" => c.rho_plus = parse_num(k, v)?,
                "rho_minus" => c.rho_minus = parse_num(k, v)?,
                "g" => c.g = parse_num(k, v)?,
                "L" => c.l = parse_num(k, v)?,
                "H" => c.h = parse_num(k, v)?,
                "ny" => c.ny = parse_num(k, v)?,
                "nz" => c.nz = parse_num(k, v)?,
                "t_end" => c.t_end = parse_num(k, v)?,
                "sample_interval" => c.sample_interval = parse_num(k, v)?,
                "perturbation.amplitude" => c.perturbation.amplitude = parse_num(k, v)?,
                "perturbation.width" => c.perturbation.width = parse_num(k, v)?,
                "perturbation.seed" => seed = Some(parse_num(k, v)?),
                "perturbation.mode" => mode = Some(parse_num(k, v)?),
                "perturbation.modes" => modes = Some(parse_modes(v)?),
                "perturbation.n_modes" => n_modes = Some(parse_num(k, v)?),
                "edge_threshold" => c.edge_threshold = parse_num(k, v)?,
                "stop_fraction" => c.stop_fraction = parse_num(k, v)?,
                "snapshot_every" => c.snapshot_every = parse_num(k, v)?,
                "orientation" => {
                    c.orientation = match v {
                        "unstable" => Orientation::Unstable,
                        "stable" => Orientation::Stable,
                        _ => return Err(Error::Config(format!("orientation: expected unstable or stable, got {v:?}"))),
                    }
                }
                "physics" => {
                    c.physics = match v {
                        "full" => Physics::Full,
                        "diffusion_only" => Physics::DiffusionOnly,
                        _ => return Err(Error::Config(format!("physics: expected full or diffusion_only, got {v:?}"))),
                    }
                }
                "cfl_safety" => c.cfl_safety = parse_num(k, v)?,
                "cfl_adv" => c.cfl_adv = parse_num(k, v)?,
                "poisson_tol" => c.poisson_tol = parse_num(k, v)?,
                "out" => c.out = Some(PathBuf::from(v)),
                "verify.envelope" => c.verify.envelope = parse_bool(k, v)?,
                "verify.monotonicity" => c.verify.monotonicity = parse_bool(k, v)?,
                "verify.perimeter" => c.verify.perimeter = parse_bool(k, v)?,
                _ => return Err(Error::Config(format!("unknown key {k}"))),
            }
        }
        let unused = |what: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::Config(format!("perturbation.{what} does not apply to this perturbation kind")))
            } else {
                Ok(())
            }
        };
        c.perturbation.kind = match kind.as_deref().unwrap_or("single_mode") {
            "single_mode" => {
                unused("seed", seed.is_some())?;
                unused("modes", modes.is_some())?;
                unused("n_modes", n_modes.is_some())?;
                PerturbationKind::SingleMode { mode: mode.unwrap_or(1) }
            }
            "multi_mode" => {
                unused("seed", seed.is_some())?;
                unused("mode", mode.is_some())?;
                unused("n_modes", n_modes.is_some())?;
                PerturbationKind::MultiMode {
                    modes: modes.ok_or_else(|| Error::Config("multi_mode needs perturbation.modes".into()))?,
                }
            }
            "random_seeded" => {
                unused("mode", mode.is_some())?;
                unused("modes", modes.is_some())?;
                PerturbationKind::RandomSeeded {
                    seed: seed.ok_or_else(|| Error::Config("random_seeded needs perturbation.seed".into()))?,
                    n_modes: n_modes.unwrap_or(8),
                }
            }
            other => return Err(Error::Config(format!("perturbation.kind: unknown kind {other:?}"))),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text form; `parse(echo())` reproduces `self` exactly.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("rho_plus", format!("{:?}", self.rho_plus));
        kv("rho_minus", format!("{:?}", self.rho_minus));
        kv("g", format!("{:?}", self.g));
        kv("L", format!("{:?}", self.l));
        kv("H", format!("{:?}", self.h));
        kv("ny", self.ny.to_string());
        kv("nz", self.nz.to_string());
        kv("t_end", format!("{:?}", self.t_end));
        kv("sample_interval", format!("{:?}", self.sample_interval));
        kv("perturbation.kind", self.perturbation.kind.name().to_string());
        kv("perturbation.amplitude", format!("{:?}", self.perturbation.amplitude));
        kv("perturbation.width", format!("{:?}", self.perturbation.width));
        match &self.perturbation.kind {
            PerturbationKind::SingleMode { mode } => kv("perturbation.mode", mode.to_string()),
            PerturbationKind::MultiMode { modes } => kv(
                "perturbation.modes",
                modes.iter().map(|(k, w, ph)| format!("{k}:{w:?}:{ph:?}")).collect::<Vec<_>>().join(","),
            ),
            PerturbationKind::RandomSeeded { seed, n_modes } => {
                kv("perturbation.seed", seed.to_string());
                kv("perturbation.n_modes", n_modes.to_string());
            }
        }
        kv("edge_threshold", format!("{:?}", self.edge_threshold));
        kv("stop_fraction", format!("{:?}", self.stop_fraction));
        kv("snapshot_every", self.snapshot_every.to_string());
        kv("orientation", self.orientation.name().to_string());
        kv("physics", self.physics.name().to_string());
        kv("cfl_safety", format!("{:?}", self.cfl_safety));
        kv("cfl_adv", format!("{:?}", self.cfl_adv));
        kv("poisson_tol", format!("{:?}", self.poisson_tol));
        if let Some(out) = &self.out {
            kv("out", out.display().to_string());
        }
        kv("verify.envelope", self.verify.envelope.to_string());
        kv("verify.monotonicity", self.verify.monotonicity.to_string());
        kv("verify.perimeter", self.verify.perimeter.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.fluid()?;
        let grid = self.grid()?;
        let positive = |k: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{k} must be positive and finite, got {v}")))
            }
        };
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        positive("sample_interval", self.sample_interval)?;
        positive("perturbation.width", self.perturbation.width)?;
        if !(self.edge_threshold > 0.0 && self.edge_threshold < 0.5) {
            return Err(Error::Config(format!("edge_threshold must lie in (0, 1/2), got {}", self.edge_threshold)));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction <= 1.0) {
            return Err(Error::Config(format!("stop_fraction must lie in (0, 1], got {}", self.stop_fraction)));
        }
        if !(self.perturbation.amplitude >= 0.0 && self.perturbation.amplitude < 0.5 * self.l) {
            return Err(Error::Config(format!(
                "perturbation.amplitude must lie in [0, L/2), got {}",
                self.perturbation.amplitude
            )));
        }
        if self.perturbation.width < 2.0 * grid.dz() {
            return Err(Error::Config(format!(
                "perturbation.width {} is below two cells (2 dz = {})",
                self.perturbation.width,
                2.0 * grid.dz()
            )));
        }
        match &self.perturbation.kind {
            PerturbationKind::SingleMode { mode } if *mode == 0 || *mode as usize >= self.ny / 2 => {
                return Err(Error::Config(format!("perturbation.mode must lie in 1..{}, got {mode}", self.ny / 2)));
            }
            PerturbationKind::MultiMode { modes } if modes.is_empty() => {
                return Err(Error::Config("perturbation.modes is empty".into()));
            }
            PerturbationKind::RandomSeeded { n_modes, .. } if *n_modes == 0 || *n_modes as usize >= self.ny / 2 => {
                return Err(Error::Config(format!("perturbation.n_modes must lie in 1..{}, got {n_modes}", self.ny / 2)));
            }
            _ => {}
        }
        self.solver_params().validate()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.l, self.h, self.ny, self.nz)
    }

    pub fn fluid(&self) -> Result<FluidParams> {
        FluidParams::new(self.rho_plus, self.rho_minus, self.g)
            .map_err(|e| Error::Config(format!("fluid parameters: {e}")))
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            orientation: self.orientation,
            physics: self.physics,
            cfl_safety: self.cfl_safety,
            cfl_adv: self.cfl_adv,
            poisson_tol: self.poisson_tol,
            ..SolverParams::default()
        }
    }
}
