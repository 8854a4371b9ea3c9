//! TOML run configuration. Every experiment threshold lives here with its
//! default, so a reviewed config file fully determines a run.

use std::path::{Path, PathBuf};

use holowave::energies::DriftProfile;
use holowave::evolution::{ExpFilter, Formulation, Projection, Scheme, StepOptions};
use holowave::experiments::{DispersionFlow, LifespanSettings, RunSettings};
use holowave::io::load_snapshot;
use holowave::wavestate::linear_wave;
use holowave::{Domain, Params, Tolerances, WaveState};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub dispersion: DispersionBlock,
    #[serde(default)]
    pub normalform: NormalFormBlock,
    #[serde(default)]
    pub lifespan: LifespanBlock,
    #[serde(default)]
    pub drift: DriftBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig { n: 64, length: std::f64::consts::TAU }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub g: f64,
    pub c: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig { g: 1.0, c: 1.0 }
    }
}

/// One Fourier mode `amp · e^{ikα}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: i64,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Mode {
    fn pair(&self) -> (i64, C64) {
        (self.k, C64::new(self.re, self.im))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Explicit modes for `W` and `Q`.
    Modes {
        #[serde(default)]
        w: Vec<Mode>,
        #[serde(default)]
        q: Vec<Mode>,
    },
    /// Linear waves: `W` modes as given, `Q` on the matching branch.
    LinearWave { w: Vec<Mode> },
    /// A snapshot file; its grid replaces `[domain]`.
    Snapshot { path: PathBuf },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Modes { w: Vec::new(), q: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    pub t_end: f64,
    pub dt: Option<f64>,
    pub c_cfl: f64,
    pub every: usize,
    /// Write a snapshot at every `snapshot_every`-th diagnostics record; 0 disables.
    pub snapshot_every: usize,
    pub cusp_delta: f64,
    pub taylor_delta: f64,
    pub scheme: Scheme,
    pub formulation: Formulation,
    pub projection: Projection,
    pub filter: Option<ExpFilter>,
}

impl Default for RunBlock {
    fn default() -> Self {
        let r = RunSettings::default();
        RunBlock {
            t_end: r.t_end,
            dt: r.dt,
            c_cfl: r.c_cfl,
            every: r.every,
            snapshot_every: 0,
            cusp_delta: r.cusp_delta,
            taylor_delta: r.taylor_delta,
            scheme: Scheme::default(),
            formulation: Formulation::default(),
            projection: Projection::default(),
            filter: None,
        }
    }
}

impl RunBlock {
    pub fn settings(&self) -> RunSettings {
        RunSettings {
            t_end: self.t_end,
            dt: self.dt,
            c_cfl: self.c_cfl,
            every: self.every,
            cusp_delta: self.cusp_delta,
            taylor_delta: self.taylor_delta,
            step: StepOptions {
                scheme: self.scheme,
                formulation: self.formulation,
                projection: self.projection,
                filter: self.filter,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionBlock {
    pub ks: Vec<i64>,
    /// `(g, c)` pairs; empty means `[params]` only.
    pub cases: Vec<[f64; 2]>,
    pub flow: DispersionFlow,
    pub eps: f64,
    pub dt: f64,
    pub steps: usize,
    /// Relative tolerance; `None` means 1e-6 for the linear flow, 1e-3 for the full one.
    pub tolerance: Option<f64>,
}

impl Default for DispersionBlock {
    fn default() -> Self {
        DispersionBlock {
            ks: vec![-1, -4, -16],
            cases: vec![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]],
            flow: DispersionFlow::Linear,
            eps: 1e-4,
            dt: 2e-3,
            steps: 3000,
            tolerance: None,
        }
    }
}

impl DispersionBlock {
    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(match self.flow {
            DispersionFlow::Linear => 1e-6,
            DispersionFlow::Full => 1e-3,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalFormBlock {
    pub samples: usize,
    pub residual_tol: f64,
    /// Amplitudes for the cubic-residual slope.
    pub eps: Vec<f64>,
    pub slope_target: f64,
    pub slope_tol: f64,
    /// Also run the `c = 0` lane.
    pub gravity_lane: bool,
}

impl Default for NormalFormBlock {
    fn default() -> Self {
        NormalFormBlock {
            samples: 100,
            residual_tol: 1e-10,
            eps: vec![1e-1, 3e-2, 1e-2],
            slope_target: 3.0,
            slope_tol: 0.15,
            gravity_lane: true,
        }
    }
}

// flatten rules out deny_unknown_fields here
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LifespanBlock {
    pub eps: Vec<f64>,
    /// Amplitudes above this are reported but do not decide the verdict.
    pub small_data_limit: f64,
    #[serde(flatten)]
    pub settings: LifespanSettings,
}

impl Default for LifespanBlock {
    fn default() -> Self {
        LifespanBlock { eps: vec![0.2, 0.1, 0.05], small_data_limit: 0.2, settings: LifespanSettings::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftBlock {
    pub eps: Vec<f64>,
    pub n: usize,
    pub t_end: f64,
    pub dt: f64,
    pub profile: DriftProfile,
    pub slope_mod: [f64; 2],
    pub slope_raw: [f64; 2],
}

impl Default for DriftBlock {
    fn default() -> Self {
        DriftBlock {
            eps: vec![0.1, 0.05, 0.025],
            n: 0,
            t_end: 5.0,
            dt: 0.01,
            profile: DriftProfile::default(),
            slope_mod: [4.0, 0.3],
            slope_raw: [3.0, 0.3],
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Default configuration, used when no `--config` is given.
    pub fn default_config() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            domain: DomainConfig::default(),
            params: ParamsConfig::default(),
            tolerances: Tolerances::default(),
            initial: InitialData::default(),
            run: RunBlock::default(),
            dispersion: DispersionBlock::default(),
            normalform: NormalFormBlock::default(),
            lifespan: LifespanBlock::default(),
            drift: DriftBlock::default(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        Domain::new(self.domain.n, self.domain.length).map_err(|e| e.to_string())?;
        self.params()?;
        let r = &self.run;
        if !(r.t_end >= 0.0 && r.t_end.is_finite()) {
            return Err(format!("run.t_end = {} must be nonnegative", r.t_end));
        }
        if let Some(dt) = r.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(format!("run.dt = {dt} must be positive"));
            }
        }
        if !(r.c_cfl > 0.0) || r.every == 0 {
            return Err("run.c_cfl must be positive and run.every at least 1".into());
        }
        let positive = |name: &str, v: &[f64]| -> Result<(), String> {
            if v.iter().all(|x| *x > 0.0 && x.is_finite()) {
                Ok(())
            } else {
                Err(format!("{name} must hold positive amplitudes"))
            }
        };
        positive("normalform.eps", &self.normalform.eps)?;
        positive("lifespan.eps", &self.lifespan.eps)?;
        positive("drift.eps", &self.drift.eps)?;
        if self.dispersion.ks.iter().any(|&k| k >= 0) {
            return Err("dispersion.ks must be negative wavenumbers".into());
        }
        if self.dispersion.steps < 5 || !(self.dispersion.dt > 0.0) {
            return Err("dispersion needs dt > 0 and at least 5 steps".into());
        }
        Ok(())
    }

    pub fn params(&self) -> Result<Params, String> {
        Params::with_tolerances(self.params.g, self.params.c, self.tolerances).map_err(|e| e.to_string())
    }

    pub fn domain(&self) -> Result<Domain, String> {
        Domain::new(self.domain.n, self.domain.length).map_err(|e| e.to_string())
    }

    /// Initial state; snapshot paths are resolved against `base`.
    pub fn initial_state(&self, base: &Path) -> Result<WaveState, String> {
        let p = self.params()?;
        match &self.initial {
            InitialData::Modes { w, q } => {
                let dom = self.domain()?;
                let w: Vec<_> = w.iter().map(Mode::pair).collect();
                let q: Vec<_> = q.iter().map(Mode::pair).collect();
                WaveState::from_modes(&dom, &w, &q).map_err(|e| e.to_string())
            }
            InitialData::LinearWave { w } => {
                let dom = self.domain()?;
                let w: Vec<_> = w.iter().map(Mode::pair).collect();
                linear_wave(&dom, &p, &w).map_err(|e| e.to_string())
            }
            InitialData::Snapshot { path } => {
                let path = if path.is_absolute() { path.clone() } else { base.join(path) };
                load_snapshot(&path).map(|s| s.state).map_err(|e| format!("{}: {e}", path.display()))
            }
        }
    }
}
