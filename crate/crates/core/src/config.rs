//! Run configuration.
//!
//! Configs are TOML. Only `basis.n_modes` and `noise.seed` are required;
//! everything else has a default that [`SimConfig::materialize`] writes back
//! into the struct, so the echoed config of a run reproduces it exactly.
//!
//! ```toml
//! [basis]
//! n_modes = 16
//!
//! [noise]
//! seed = 20240501
//! kind = "scalar"            # or "diagonal"
//! n_noise_modes = 16         # diagonal only, default n_modes
//! q = [1.0, 1.0]             # diagonal only, default all ones
//!
//! [diffusion]
//! kind = "rank_one"          # or "diagonal"
//! h = [1.0, 1.0]             # leading coefficients, normalized
//! profile = "decaying"       # diagonal: λ_k(r) = a_k/(1+r²), or "constant"
//! amplitudes = []            # diagonal: a_k, default 1/α_k
//!
//! [initial]
//! u0 = [1.0, -1.0]           # leading coefficients, normalized
//! v0 = []                    # projected onto the tangent space of u0
//!
//! [wave]
//! mu = 0.1
//! gamma = 1.0
//! dt = 1e-3
//! t_end = 0.5
//! project = "each-step"      # or "never"; shared by every run of the config
//!
//! [limit]
//! drift = "noise-induced"    # or "stratonovich"
//!
//! [sweep]
//! mu_list = [0.2, 0.1, 0.05, 0.025]
//! replicas = 200
//! # mu_scaled_dt = 0.05
//!
//! [discriminator]
//! replicas = 400
//! checkpoints = 5
//!
//! [output]
//! directory = "out"
//! formats = ["csv", "json"]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion::{DiffusionModel, LambdaProfile};
use crate::error::{Error, Result};
use crate::geometry::renormalize_state;
use crate::harness::SweepConfig;
use crate::limit::{DriftKind, LimitParams};
use crate::noise::{NoiseKind, NoiseModel};
use crate::spectral::{eigenvalue, SpectralField, StateZ};
use crate::wave::{Projection, WaveParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub n_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<NoiseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_noise_modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    #[default]
    RankOne,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionSection {
    pub kind: DiffusionKind,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub h: Vec<f64>,
    pub profile: LambdaProfile,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub amplitudes: Vec<f64>,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self {
            kind: DiffusionKind::RankOne,
            h: vec![],
            profile: LambdaProfile::Decaying,
            amplitudes: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSection {
    pub mu: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub project: Projection,
}

impl Default for WaveSection {
    fn default() -> Self {
        Self {
            mu: 0.1,
            gamma: 1.0,
            dt: 1e-3,
            t_end: 0.5,
            project: Projection::EachStep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LimitSection {
    pub drift: DriftKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub mu_list: Vec<f64>,
    pub replicas: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_scaled_dt: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            mu_list: vec![0.2, 0.1, 0.05, 0.025],
            replicas: 200,
            mu_scaled_dt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminatorSection {
    pub replicas: usize,
    pub checkpoints: usize,
}

impl Default for DiscriminatorSection {
    fn default() -> Self {
        Self {
            replicas: 400,
            checkpoints: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub basis: BasisSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub diffusion: DiffusionSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub wave: WaveSection,
    #[serde(default)]
    pub limit: LimitSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub discriminator: DiscriminatorSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(format!("{name} must be positive and finite, got {x}")))
    }
}

fn leading(name: &str, n_modes: usize, c: &[f64]) -> Result<SpectralField> {
    if c.len() > n_modes {
        return Err(cfg_err(format!(
            "{name} has {} coefficients but the basis has {n_modes} modes",
            c.len()
        )));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(cfg_err(format!("{name} has a non-finite coefficient")));
    }
    SpectralField::from_leading(n_modes, c).map_err(|e| cfg_err(format!("{name}: {e}")))
}

impl SimConfig {
    /// A config with only the required keys set.
    pub fn minimal(n_modes: usize, seed: u64) -> Self {
        Self {
            basis: BasisSection { n_modes },
            noise: NoiseSection {
                seed,
                kind: None,
                n_noise_modes: None,
                q: vec![],
            },
            diffusion: DiffusionSection::default(),
            initial: InitialSection::default(),
            wave: WaveSection::default(),
            limit: LimitSection::default(),
            sweep: SweepSection::default(),
            discriminator: DiscriminatorSection::default(),
            output: OutputSection::default(),
        }
    }

    /// Fills every data-dependent default, validates, and returns warnings.
    pub fn materialize(&mut self) -> Result<Vec<String>> {
        let n = self.basis.n_modes;
        if n == 0 {
            return Err(cfg_err("basis.n_modes must be at least 1"));
        }
        let mut warnings = vec![];

        let default_noise = match self.diffusion.kind {
            DiffusionKind::RankOne => NoiseKind::Scalar,
            DiffusionKind::Diagonal => NoiseKind::Diagonal,
        };
        let kind = *self.noise.kind.get_or_insert(default_noise);
        match (self.diffusion.kind, kind) {
            (DiffusionKind::RankOne, NoiseKind::Scalar) => {
                if self.noise.n_noise_modes.is_some_and(|k| k != 1) || !self.noise.q.is_empty() {
                    return Err(cfg_err("scalar noise has exactly one coordinate and no q weights"));
                }
                self.noise.n_noise_modes = Some(1);
                if self.diffusion.h.is_empty() {
                    if n < 2 {
                        return Err(cfg_err("the default h = (e1+e2)/sqrt2 needs n_modes >= 2"));
                    }
                    self.diffusion.h = vec![1.0, 1.0];
                }
                if !self.diffusion.amplitudes.is_empty() {
                    return Err(cfg_err("diffusion.amplitudes only applies to the diagonal kind"));
                }
            }
            (DiffusionKind::Diagonal, NoiseKind::Diagonal) => {
                let k = *self.noise.n_noise_modes.get_or_insert(if self.noise.q.is_empty() {
                    n
                } else {
                    self.noise.q.len()
                });
                if k == 0 {
                    return Err(cfg_err("noise.n_noise_modes must be at least 1"));
                }
                if self.noise.q.is_empty() {
                    self.noise.q = vec![1.0; k];
                }
                if self.diffusion.amplitudes.is_empty() {
                    self.diffusion.amplitudes = (1..=k).map(|j| 1.0 / eigenvalue(j)).collect();
                }
                if self.noise.q.len() != k || self.diffusion.amplitudes.len() != k {
                    return Err(cfg_err(format!(
                        "noise.n_noise_modes = {k} but {} q weights and {} amplitudes",
                        self.noise.q.len(),
                        self.diffusion.amplitudes.len()
                    )));
                }
                if k > n {
                    return Err(cfg_err(format!(
                        "diagonal noise acts on e_1..e_{k} but the basis has {n} modes"
                    )));
                }
                if !self.diffusion.h.is_empty() {
                    return Err(cfg_err("diffusion.h only applies to the rank_one kind"));
                }
            }
            (d, k) => {
                return Err(cfg_err(format!(
                    "diffusion kind {d:?} is incompatible with noise kind {k:?}"
                )))
            }
        }
        let nm = self.noise_model()?;
        if nm.trace_looks_divergent() {
            warnings.push(format!(
                "noise covariance weights look non-summable (sum q_k^2 = {} over {} modes); \
                 fine at this truncation but not trace class in the limit",
                nm.trace(),
                nm.n_noise_modes()
            ));
        }
        self.diffusion_model()?;

        if self.initial.u0.is_empty() {
            if n < 2 {
                return Err(cfg_err("the default u0 = (e1-e2)/sqrt2 needs n_modes >= 2"));
            }
            self.initial.u0 = vec![1.0, -1.0];
        }
        self.initial_state()?;

        let w = &self.wave;
        positive("wave.mu", w.mu)?;
        positive("wave.gamma", w.gamma)?;
        positive("wave.dt", w.dt)?;
        positive("wave.t_end", w.t_end)?;
        self.wave_params().validate().map_err(|e| cfg_err(e.to_string()))?;
        if self.wave_params().exceeds_stiffness_guard() {
            warnings.push(format!(
                "wave.dt = {} exceeds mu/(2 gamma) = {}; the explicit nonlinearity may destabilize",
                w.dt,
                w.mu / (2.0 * w.gamma)
            ));
        }

        let s = &self.sweep;
        if s.mu_list.is_empty() || s.mu_list.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(cfg_err("sweep.mu_list must hold positive masses"));
        }
        if s.mu_list.windows(2).any(|p| p[1] >= p[0]) {
            return Err(cfg_err("sweep.mu_list must be strictly decreasing"));
        }
        if s.replicas == 0 {
            return Err(cfg_err("sweep.replicas must be at least 1"));
        }
        if let Some(c) = s.mu_scaled_dt {
            positive("sweep.mu_scaled_dt", c)?;
        }
        if self.discriminator.replicas == 0 || self.discriminator.checkpoints == 0 {
            return Err(cfg_err("discriminator.replicas and checkpoints must be at least 1"));
        }
        if self.output.directory.is_empty() {
            return Err(cfg_err("output.directory must not be empty"));
        }
        Ok(warnings)
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        match self.noise.kind.unwrap_or(NoiseKind::Scalar) {
            NoiseKind::Scalar => Ok(NoiseModel::scalar(self.noise.seed)),
            NoiseKind::Diagonal => NoiseModel::diagonal(self.noise.q.clone(), self.noise.seed)
                .map_err(|e| cfg_err(format!("noise: {e}"))),
        }
    }

    pub fn diffusion_model(&self) -> Result<DiffusionModel> {
        let n = self.basis.n_modes;
        match self.diffusion.kind {
            DiffusionKind::RankOne => {
                let h = leading("diffusion.h", n, &self.diffusion.h)?;
                DiffusionModel::rank_one(h).map_err(|e| cfg_err(format!("diffusion: {e}")))
            }
            DiffusionKind::Diagonal => DiffusionModel::diagonal(
                self.diffusion.profile,
                self.diffusion.amplitudes.clone(),
                self.noise.q.clone(),
            )
            .map_err(|e| cfg_err(format!("diffusion: {e}"))),
        }
    }

    /// `(u0/|u0|_H, Π_{u0} v0)`.
    pub fn initial_state(&self) -> Result<StateZ> {
        let n = self.basis.n_modes;
        let u = leading("initial.u0", n, &self.initial.u0)?;
        let v = leading("initial.v0", n, &self.initial.v0)?;
        renormalize_state(&StateZ { u, v }).map_err(|e| cfg_err(format!("initial state: {e}")))
    }

    pub fn wave_params(&self) -> WaveParams {
        WaveParams {
            mu: self.wave.mu,
            gamma: self.wave.gamma,
            dt: self.wave.dt,
            t_end: self.wave.t_end,
            project: self.wave.project,
        }
    }

    pub fn limit_params(&self) -> LimitParams {
        LimitParams {
            gamma: self.wave.gamma,
            dt: self.wave.dt,
            t_end: self.wave.t_end,
            project: self.wave.project,
            drift: self.limit.drift,
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        Ok(SweepConfig {
            mu_list: self.sweep.mu_list.clone(),
            replicas: self.sweep.replicas,
            gamma: self.wave.gamma,
            dt: self.wave.dt,
            t_end: self.wave.t_end,
            project: self.wave.project,
            mu_scaled_dt: self.sweep.mu_scaled_dt,
            z0: self.initial_state()?,
            diffusion: self.diffusion_model()?,
            noise: self.noise_model()?,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| cfg_err(e.to_string()))
    }

    /// Parses and materializes a config.
    pub fn from_toml(text: &str) -> Result<(Self, Vec<String>)> {
        let mut c: SimConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        let warnings = c.materialize()?;
        Ok((c, warnings))
    }

    /// Git-style content hash: sha256 of `"blob {len}\0" + echoed config`.
    pub fn content_hash(&self) -> Result<String> {
        Ok(blob_hash(self.to_toml()?.as_bytes()))
    }
}

pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn load_config(path: impl AsRef<Path>) -> Result<(SimConfig, Vec<String>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    SimConfig::from_toml(&text)
}

pub fn write_config(c: &SimConfig, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, c.to_toml()?)?;
    Ok(())
}
