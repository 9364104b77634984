//! Run configuration: one JSON file with optional per-subcommand sections.

use nsk::evolution::EvolutionConfig;
use nsk::field::FieldGrid;
use nsk::oracle::CollocationConfig;
use nsk::verifier::{AsymptoticsGrid, DetGrid, ShellGrid};
use nsk::{FluidParams, Sector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSource {
    Preset { preset: String },
    File { file: PathBuf },
    Inline(FluidParams),
}

impl Default for ParamsSource {
    fn default() -> Self {
        ParamsSource::Preset { preset: "P0".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorSection {
    pub epsilon: f64,
    pub lambda0: f64,
}

impl Default for SectorSection {
    fn default() -> Self {
        SectorSection { epsilon: PI / 3.0, lambda0: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub samples: usize,
    pub xi_range: (f64, f64),
    pub lambda_range: (f64, f64),
    pub gap_tolerance: f64,
    pub node_tolerance: f64,
    pub collocation: CollocationConfig,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            samples: 50,
            xi_range: (0.1, 10.0),
            lambda_range: (0.5, 50.0),
            gap_tolerance: 1e-6,
            node_tolerance: 1e-8,
            collocation: CollocationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub period: f64,
    pub modes: usize,
    pub xn_nodes: Vec<f64>,
    pub lambda_re: f64,
    pub lambda_im: f64,
    /// gaussian | mode:k[,k2] | file:PATH
    pub eta: String,
    pub width: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection {
            period: 20.0,
            modes: 32,
            xn_nodes: vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0],
            lambda_re: 1.0,
            lambda_im: 1.0,
            eta: "gaussian".into(),
            width: 1.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub gamma: f64,
    pub tau_max: f64,
    pub num_tau: usize,
    pub t_max: f64,
    pub lambda0: f64,
    pub period: f64,
    pub modes: usize,
    pub xn_nodes: Vec<f64>,
    /// forcing ζ = e^{ik·x′}·s(rate·t), s(t) = t⁴e^{−t}/24
    pub forcing_mode: Vec<i64>,
    pub forcing_rate: f64,
    pub snapshots: bool,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            gamma: 1.5,
            tau_max: 400.0,
            num_tau: 4096,
            t_max: 8.0,
            lambda0: 1.0,
            period: 2.0 * PI,
            modes: 16,
            xn_nodes: vec![0.0, 0.5, 1.0],
            forcing_mode: vec![1],
            forcing_rate: 1.0,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSource,
    pub dimension: Option<usize>,
    pub sector: SectorSection,
    pub shells: ShellGrid,
    pub det: DetGrid,
    pub asymptotics: AsymptoticsGrid,
    pub oracle: OracleSection,
    pub field: FieldSection,
    pub evolve: EvolveSection,
}

/// Resolved, validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub run: RunConfig,
    pub params: FluidParams,
    pub base_dir: PathBuf,
}

/// Read and resolve; callers apply flag overrides and then [`Resolved::validate`].
pub fn load(path: Option<&Path>) -> Result<Resolved, String> {
    let (run, base_dir) = match path {
        None => (RunConfig::default(), PathBuf::from(".")),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            let run: RunConfig = serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", p.display()))?;
            (run, p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")))
        }
    };
    let dim = run.dimension.unwrap_or(2);
    let params = match &run.params {
        ParamsSource::Preset { preset } => FluidParams::preset(preset, dim).map_err(|e| e.to_string())?,
        ParamsSource::File { file } => {
            let f = base_dir.join(file);
            let text = std::fs::read_to_string(&f).map_err(|e| format!("cannot read params {}: {e}", f.display()))?;
            let p: FluidParams = serde_json::from_str(&text).map_err(|e| format!("params {}: {e}", f.display()))?;
            match run.dimension {
                Some(d) => p.with_dim(d).map_err(|e| e.to_string())?,
                None => p,
            }
        }
        ParamsSource::Inline(p) => match run.dimension {
            Some(d) => p.with_dim(d).map_err(|e| e.to_string())?,
            None => *p,
        },
    };
    Ok(Resolved { run, params, base_dir })
}

impl Resolved {
    pub fn sector(&self) -> Result<Sector, String> {
        Sector::new(self.run.sector.epsilon, self.run.sector.lambda0).map_err(|e| e.to_string())
    }

    pub fn field_grid(&self) -> Result<FieldGrid, String> {
        let f = &self.run.field;
        FieldGrid::new(self.params.dim, f.period, f.modes, f.xn_nodes.clone()).map_err(|e| e.to_string())
    }

    pub fn evolution_config(&self) -> Result<EvolutionConfig, String> {
        let e = &self.run.evolve;
        let grid = FieldGrid::new(self.params.dim, e.period, e.modes, e.xn_nodes.clone()).map_err(|e| e.to_string())?;
        let cfg = EvolutionConfig { gamma: e.gamma, tau_max: e.tau_max, num_tau: e.num_tau, t_max: e.t_max, grid, lambda0: e.lambda0 };
        cfg.validate().map_err(|e| e.to_string())?;
        if e.forcing_mode.len() != self.params.dim - 1 {
            return Err(format!("evolve.forcing_mode needs {} entries", self.params.dim - 1));
        }
        if !(e.forcing_rate > 0.0) {
            return Err("evolve.forcing_rate must be positive".into());
        }
        Ok(cfg)
    }

    /// Every section is checked up front so that no subcommand starts
    /// computing on a bad file.
    pub fn validate(&self) -> Result<(), String> {
        self.sector()?;
        let s = &self.run.shells;
        if s.shells < 6 || s.points_per_shell == 0 || !(s.r_min > 0.0) {
            return Err("shells: need >= 6 shells, points_per_shell > 0, r_min > 0".into());
        }
        let d = &self.run.det;
        if d.xi_count == 0 || d.lambda_count == 0 || d.arg_count == 0 || !(d.xi_range.0 > 0.0 && d.lambda_range.0 > 0.0) {
            return Err("det: counts must be positive and ranges must start above 0".into());
        }
        let a = &self.run.asymptotics;
        if a.lambda0s.len() < 2 || a.ratio_range.0 < 1.0 {
            return Err("asymptotics: need >= 2 lambda0 values and ratio_range starting at >= 1".into());
        }
        let o = &self.run.oracle;
        o.collocation.validate().map_err(|e| e.to_string())?;
        if o.samples == 0 {
            return Err("oracle.samples must be positive".into());
        }
        self.field_grid()?;
        self.evolution_config()?;
        Ok(())
    }
}
