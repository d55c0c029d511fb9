//! Experiment files: TOML with one section per concern.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use strz_core::groundstate::{
    gaussian_weight, ground_pair, standing_wave_potential, GroundStateOptions, StandingWave,
};
use strz_core::potentials::{Modulation, PotentialConfig, PotentialSpec, Schedule};
use strz_core::solver::{DuhamelOptions, Source};
use strz_core::spectral::{gaussian, read_snapshot};
use strz_core::{exponents, ComplexField, Error, ExtExponent, Grid, Result, ScheduleParams};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub ground_state: GroundStateConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default = "default_potential")]
    pub potential: PotentialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            ground_state: GroundStateConfig::default(),
            initial: InitialConfig::default(),
            potential: default_potential(),
            source: None,
            solver: SolverConfig::default(),
        }
    }
}

fn default_potential() -> PotentialConfig {
    PotentialConfig {
        kind: "static".into(),
        profile: Some("standing_wave".into()),
        r: ExtExponent::int(1),
        s: ExtExponent::Infinity,
        schedule: None,
        alpha: None,
        beta: None,
        windows: None,
        delta: None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 1, half_width: 16.0, points: 128 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.half_width, self.points)
    }
}

/// Weight `w` of the ground-state problem: a Gaussian bump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateConfig {
    pub amplitude: f64,
    pub sigma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        let opts = GroundStateOptions::default();
        Self { amplitude: 1.0, sigma: 1.0, tol: opts.tol, max_iter: opts.max_iter }
    }
}

impl GroundStateConfig {
    pub fn weight(&self, grid: Grid) -> ComplexField {
        gaussian_weight(grid, self.amplitude, self.sigma, &[0.0; 3][..grid.dim()])
    }

    pub fn options(&self) -> GroundStateOptions {
        GroundStateOptions { tol: self.tol, max_iter: self.max_iter }
    }

    pub fn standing_wave(&self, grid: Grid) -> Result<StandingWave> {
        Ok(standing_wave_potential(&ground_pair(&self.weight(grid), &self.options())?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitialConfig {
    /// The ground state `f` of the configured weight.
    GroundState,
    Gaussian { sigma: f64 },
    Snapshot { path: PathBuf },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::GroundState
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub amplitude: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<Modulation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SplitStep,
    Duhamel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Method,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub record_every: usize,
    /// Partition threshold for the Duhamel solve; calibrated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub z_exponent_2d: f64,
    /// Admissible pairs whose Strichartz ratios are reported.
    #[serde(default)]
    pub pairs: Vec<(ExtExponent, ExtExponent)>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = DuhamelOptions::default();
        Self {
            method: Method::SplitStep,
            t0: 0.0,
            t1: 1.0,
            dt: 1e-3,
            record_every: 10,
            tau: None,
            tol: d.tol,
            max_iter: d.max_iter,
            z_exponent_2d: d.z_exponent_2d,
            pairs: Vec::new(),
        }
    }
}

impl SolverConfig {
    pub fn duhamel(&self) -> DuhamelOptions {
        DuhamelOptions { dt: self.dt, tol: self.tol, max_iter: self.max_iter, z_exponent_2d: self.z_exponent_2d }
    }
}

impl Config {
    pub fn load(path: &Path) -> std::result::Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> std::result::Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Canonical text form; parsing it back gives the same config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn initial(&self, grid: Grid, wave: Option<&StandingWave>) -> Result<ComplexField> {
        match &self.initial {
            InitialConfig::GroundState => match wave {
                Some(w) => Ok(w.profile.clone()),
                None => Ok(self.ground_state.standing_wave(grid)?.profile),
            },
            InitialConfig::Gaussian { sigma } => Ok(gaussian(grid, *sigma)),
            InitialConfig::Snapshot { path } => load_snapshot(path, grid),
        }
    }

    pub fn source(&self, grid: Grid) -> Result<Option<Source>> {
        let Some(src) = &self.source else {
            return Ok(None);
        };
        if let Some(m) = &src.modulation {
            m.validate()?;
        }
        let profile = gaussian(grid, src.sigma).scale_real(src.amplitude);
        Ok(Some(Source { profile, modulation: src.modulation.clone() }))
    }

    /// Whether building the potential or the datum needs the ground state.
    pub fn needs_wave(&self) -> bool {
        self.potential.profile.as_deref() == Some("standing_wave")
            || matches!(self.initial, InitialConfig::GroundState)
    }

    pub fn potential(&self, grid: Grid, wave: Option<&StandingWave>) -> Result<PotentialSpec> {
        build_potential(&self.potential, grid, wave, &self.ground_state)
    }
}

fn load_snapshot(path: &Path, grid: Grid) -> Result<ComplexField> {
    let field = read_snapshot(BufReader::new(File::open(path)?))?;
    if *field.grid() != grid {
        return Err(Error::Precondition(format!(
            "snapshot {} lives on a different grid than the config",
            path.display()
        )));
    }
    Ok(field)
}

fn profile(
    name: Option<&str>,
    grid: Grid,
    wave: Option<&StandingWave>,
    gs: &GroundStateConfig,
) -> Result<ComplexField> {
    match name.unwrap_or("standing_wave") {
        "standing_wave" => match wave {
            Some(w) => Ok(w.potential.clone()),
            None => Ok(gs.standing_wave(grid)?.potential),
        },
        "weight" => Ok(gs.weight(grid)),
        path => load_snapshot(Path::new(path), grid),
    }
}

fn schedule_params(cfg: &PotentialConfig, n: usize) -> Result<ScheduleParams> {
    let kind = cfg
        .schedule
        .ok_or_else(|| Error::Precondition("patched potentials need a schedule".into()))?;
    let mut params = exponents::schedule_params(kind, cfg.r, cfg.s, n)?;
    if let Some(a) = &cfg.alpha {
        params.alpha = exponents::parse_rational(a)?;
    }
    if let Some(b) = &cfg.beta {
        params.beta = exponents::parse_rational(b)?;
    }
    params.check(&exponents::classify_potential(cfg.r, cfg.s, n)?)?;
    Ok(params)
}

pub fn build_potential(
    cfg: &PotentialConfig,
    grid: Grid,
    wave: Option<&StandingWave>,
    gs: &GroundStateConfig,
) -> Result<PotentialSpec> {
    match cfg.kind.as_str() {
        "zero" => Ok(PotentialSpec::Zero),
        "static" => PotentialSpec::static_profile(profile(cfg.profile.as_deref(), grid, wave, gs)?),
        "patched" => {
            let params = schedule_params(cfg, grid.dim())?;
            let schedule = Schedule::build(params, cfg.windows.unwrap_or(3), None)?;
            PotentialSpec::patched(profile(cfg.profile.as_deref(), grid, wave, gs)?, schedule)
        }
        "pseudoconformal" => {
            PotentialSpec::pseudoconformal(profile(cfg.profile.as_deref(), grid, wave, gs)?)
        }
        other => Err(Error::Precondition(format!(
            "unknown potential kind {other:?} (zero, static, patched, pseudoconformal)"
        ))),
    }
}
