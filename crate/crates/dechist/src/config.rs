//! TOML experiment configuration: model, initial state, history set, sweeps,
//! analysis knobs, and output settings.
//!
//! All quantities carry unit suffixes (`_cm1`, `_fs`, `_ps`) to keep the
//! implicit-unit ambiguity of the source literature out of config files.
//! Site indices in config files are 1-based; the library is 0-based.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex;
use serde::Deserialize;

use crate::dynamics::{DensityMatrix, NetworkModel, Trap};
use crate::histories::ProjectionBasis;
use crate::{Error, Result};

pub const FS_PER_PS: f64 = 1000.0;

/// Uniform rate or one rate per site.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl GammaSpec {
    pub fn rates(&self, n_sites: usize) -> Result<Vec<f64>> {
        match self {
            GammaSpec::Uniform(g) => Ok(vec![*g; n_sites]),
            GammaSpec::PerSite(v) => {
                if v.len() != n_sites {
                    return Err(Error::ConfigInvalid(format!(
                        "model.gamma_ps: {} rates for {} sites",
                        v.len(),
                        n_sites
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    /// 1-based exit site.
    pub exit_site: usize,
    pub k_trap_ps: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hamiltonian_cm1: Vec<Vec<f64>>,
    pub gamma_ps: GammaSpec,
    pub trap: Option<TrapConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    /// 1-based site for a localized start.
    pub site: Option<usize>,
    /// Explicit density matrix, real and imaginary parts.
    pub density_matrix_re: Option<Vec<Vec<f64>>>,
    pub density_matrix_im: Option<Vec<Vec<f64>>>,
}

fn default_basis() -> String {
    "site".into()
}

fn default_n() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start_fs: f64,
    pub stop_fs: f64,
    pub step_fs: f64,
}

impl GridConfig {
    /// Ascending grid in ps: start, start+step, …, ≤ stop (inclusive within
    /// half a step).
    pub fn points_ps(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let t = self.start_fs + k as f64 * self.step_fs;
            if t > self.stop_fs + 0.5 * self.step_fs {
                break;
            }
            out.push(t / FS_PER_PS);
            k += 1;
        }
        out
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryConfig {
    #[serde(default = "default_basis")]
    pub basis: String,
    #[serde(default = "default_n")]
    pub n: usize,
    pub dt_grid: GridConfig,
}

impl HistoryConfig {
    pub fn projection_basis(&self) -> Result<ProjectionBasis> {
        parse_basis(&self.basis)
    }
}

pub fn parse_basis(s: &str) -> Result<ProjectionBasis> {
    match s {
        "site" => Ok(ProjectionBasis::Site),
        "exciton" => Ok(ProjectionBasis::Exciton),
        other => Err(Error::ConfigInvalid(format!(
            "history.basis: expected \"site\" or \"exciton\", got \"{other}\""
        ))),
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub gamma_ps: Vec<f64>,
}

fn default_tau_trap() -> f64 {
    200.0
}

fn default_tau_d() -> Vec<f64> {
    vec![20.0, 40.0, 200.0, 1000.0]
}

fn default_quad_step() -> f64 {
    1.0
}

fn default_entry_cap() -> u64 {
    crate::histories::DEFAULT_ENTRY_CAP
}

fn default_site() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// 1-based site whose interference/efficiency share is traced.
    #[serde(default = "default_site")]
    pub site: usize,
    #[serde(default = "default_tau_trap")]
    pub tau_trap_fs: f64,
    #[serde(default = "default_tau_d")]
    pub tau_d_fs: Vec<f64>,
    #[serde(default = "default_quad_step")]
    pub quadrature_step_fs: f64,
    #[serde(default = "default_entry_cap")]
    pub entry_cap: u64,
    /// Keep the trap (and sink projector) on when scanning coherence.
    #[serde(default)]
    pub coherence_include_trap: bool,
    /// Keep the trap on when tracing interference.
    #[serde(default)]
    pub interference_include_trap: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            site: default_site(),
            tau_trap_fs: default_tau_trap(),
            tau_d_fs: default_tau_d(),
            quadrature_step_fs: default_quad_step(),
            entry_cap: default_entry_cap(),
            coherence_include_trap: false,
            interference_include_trap: false,
        }
    }
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_precision() -> usize {
    12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            precision: default_precision(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub initial_state: InitialStateConfig,
    pub history: HistoryConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Outcome of schema + physics validation: hard errors and advisory warnings.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

impl ExperimentConfig {
    pub fn from_str_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ParseError(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.display().to_string()));
        }
        let text = std::fs::read_to_string(path)?;
        Self::from_str_toml(&text)
    }

    pub fn n_sites(&self) -> usize {
        self.model.hamiltonian_cm1.len()
    }

    fn hamiltonian(&self) -> Result<Array2<f64>> {
        let n = self.n_sites();
        let mut flat = Vec::with_capacity(n * n);
        for row in &self.model.hamiltonian_cm1 {
            if row.len() != n {
                return Err(Error::ConfigInvalid(format!(
                    "model.hamiltonian_cm1: row of length {} in a {}-site matrix",
                    row.len(),
                    n
                )));
            }
            flat.extend_from_slice(row);
        }
        Array2::from_shape_vec((n, n), flat).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Build the network model; `gamma` overrides the config dephasing with a
    /// uniform rate, `include_trap` drops the trap when false.
    pub fn to_model(&self, gamma: Option<f64>, include_trap: bool) -> Result<NetworkModel<f64>> {
        let h = self.hamiltonian()?;
        let n = self.n_sites();
        let rates = match gamma {
            Some(g) => vec![g; n],
            None => self.model.gamma_ps.rates(n)?,
        };
        let trap = match (&self.model.trap, include_trap) {
            (Some(t), true) => {
                if t.exit_site == 0 || t.exit_site > n {
                    return Err(Error::ConfigInvalid(format!(
                        "model.trap.exit_site: {} out of 1..={}",
                        t.exit_site, n
                    )));
                }
                Some(Trap {
                    exit_site: t.exit_site - 1,
                    k_trap: t.k_trap_ps,
                })
            }
            _ => None,
        };
        NetworkModel::new(h, rates, trap)
    }

    /// Initial state on the model's full space (sink-extended when trapped).
    pub fn to_initial_state(&self, model: &NetworkModel<f64>) -> Result<DensityMatrix<f64>> {
        let n = self.n_sites();
        let base = match (
            &self.initial_state.site,
            &self.initial_state.density_matrix_re,
        ) {
            (Some(s), None) => {
                if *s == 0 || *s > n {
                    return Err(Error::ConfigInvalid(format!(
                        "initial_state.site: {s} out of 1..={n}"
                    )));
                }
                DensityMatrix::localized(n, s - 1)?
            }
            (None, Some(re)) => {
                let im = self.initial_state.density_matrix_im.clone();
                let m = Array2::from_shape_fn((n, n), |(i, j)| {
                    let r = re.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0.0);
                    let ii = im
                        .as_ref()
                        .and_then(|mm| mm.get(i))
                        .and_then(|row| row.get(j))
                        .copied()
                        .unwrap_or(0.0);
                    Complex::new(r, ii)
                });
                DensityMatrix::new(m)?
            }
            _ => {
                return Err(Error::ConfigInvalid(
                    "initial_state: set exactly one of `site` or `density_matrix_re`".into(),
                ))
            }
        };
        if model.dim() == n + 1 {
            Ok(base.extend_with_sink())
        } else {
            Ok(base)
        }
    }

    /// Sweep rates, falling back to the model's uniform rate when no sweep is
    /// configured.
    pub fn gammas(&self) -> Vec<f64> {
        if !self.sweep.gamma_ps.is_empty() {
            return self.sweep.gamma_ps.clone();
        }
        match &self.model.gamma_ps {
            GammaSpec::Uniform(g) => vec![*g],
            GammaSpec::PerSite(v) => vec![v.iter().sum::<f64>() / v.len() as f64],
        }
    }

    /// Schema and physics checks; exit 0 iff no errors and no warnings.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let n = self.n_sites();
        if n == 0 {
            rep.errors.push("model.hamiltonian_cm1: empty matrix".into());
            return rep;
        }
        for (i, row) in self.model.hamiltonian_cm1.iter().enumerate() {
            if row.len() != n {
                rep.errors.push(format!(
                    "model.hamiltonian_cm1: row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    n
                ));
            }
        }
        if rep.errors.is_empty() {
            let h = &self.model.hamiltonian_cm1;
            let scale = h
                .iter()
                .flatten()
                .fold(0.0f64, |a, x| a.max(x.abs()))
                .max(1.0);
            for i in 0..n {
                for j in i + 1..n {
                    if (h[i][j] - h[j][i]).abs() > 1e-10 * scale {
                        rep.warnings.push(format!(
                            "NotSymmetric: H[{}][{}] = {} but H[{}][{}] = {}",
                            i + 1,
                            j + 1,
                            h[i][j],
                            j + 1,
                            i + 1,
                            h[j][i]
                        ));
                    }
                }
            }
        }
        match self.model.gamma_ps.rates(n) {
            Ok(rates) => {
                for (i, g) in rates.iter().enumerate() {
                    if *g < 0.0 {
                        rep.errors
                            .push(format!("model.gamma_ps: site {} rate {} < 0", i + 1, g));
                    }
                }
            }
            Err(e) => rep.errors.push(e.to_string()),
        }
        if let Some(t) = &self.model.trap {
            if t.exit_site == 0 || t.exit_site > n {
                rep.errors.push(format!(
                    "model.trap.exit_site: {} out of 1..={}",
                    t.exit_site, n
                ));
            }
            if t.k_trap_ps < 0.0 {
                rep.errors
                    .push(format!("model.trap.k_trap_ps: {} < 0", t.k_trap_ps));
            }
        }
        match (
            &self.initial_state.site,
            &self.initial_state.density_matrix_re,
        ) {
            (Some(s), None) => {
                if *s == 0 || *s > n {
                    rep.errors
                        .push(format!("initial_state.site: {s} out of 1..={n}"));
                }
            }
            (None, Some(_)) => {}
            _ => rep.errors.push(
                "initial_state: set exactly one of `site` or `density_matrix_re`".into(),
            ),
        }
        if self.history.projection_basis().is_err() {
            rep.errors.push(format!(
                "history.basis: expected \"site\" or \"exciton\", got \"{}\"",
                self.history.basis
            ));
        }
        if self.history.n == 0 {
            rep.errors.push("history.n: must be >= 1".into());
        }
        let g = &self.history.dt_grid;
        if g.start_fs <= 0.0 || g.step_fs <= 0.0 || g.stop_fs < g.start_fs {
            rep.errors.push(format!(
                "history.dt_grid: need 0 < start <= stop and step > 0, got start {} stop {} step {}",
                g.start_fs, g.stop_fs, g.step_fs
            ));
        }
        for g in &self.sweep.gamma_ps {
            if *g < 0.0 {
                rep.errors.push(format!("sweep.gamma_ps: rate {g} < 0"));
            }
        }
        if self.analysis.site == 0 || self.analysis.site > n {
            rep.errors
                .push(format!("analysis.site: {} out of 1..={}", self.analysis.site, n));
        }
        if self.analysis.quadrature_step_fs <= 0.0 {
            rep.errors.push(format!(
                "analysis.quadrature_step_fs: {} <= 0",
                self.analysis.quadrature_step_fs
            ));
        }
        if self.output.precision == 0 || self.output.precision > 17 {
            rep.errors.push(format!(
                "output.precision: {} out of 1..=17",
                self.output.precision
            ));
        }
        rep
    }
}
