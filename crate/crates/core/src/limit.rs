//! The constrained parabolic limit
//!
//! ```text
//! γ du = [Δu + |u|²_{H¹} u - (1/2γ)‖σ(u)‖²_{𝒯₂} u] dt + σ(u) dW
//! ```
//!
//! and, behind the same code path, the Itô form of the Stratonovich
//! equation, whose drift correction is `(1/2γ) σ'(u)σ(u)` instead.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionModel;
use crate::error::{Error, Result};
use crate::flow::HeatFlow;
use crate::geometry::{require_on_sphere, ManifoldTolerances};
use crate::noise::{wiener_increments, IncrementTable, NoiseModel};
use crate::spectral::{eigenvalue, SpectralField, StateZ};
use crate::stats::MeanEstimate;
use crate::wave::{check_noise_match, step_count, Diagnostics, NoiseRef, Projection, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DriftKind {
    /// `-(1/2γ)‖σ(u)‖² u`, the drift produced by the small-mass limit.
    #[default]
    #[serde(rename = "noise-induced")]
    NoiseInduced,
    /// `+(1/2γ)σ'(u)σ(u)`, the Stratonovich-to-Itô correction.
    #[serde(rename = "stratonovich")]
    Stratonovich,
}

impl std::str::FromStr for DriftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise-induced" => Ok(DriftKind::NoiseInduced),
            "stratonovich" => Ok(DriftKind::Stratonovich),
            other => Err(Error::invalid(format!(
                "unknown drift kind {other:?} (expected noise-induced or stratonovich)"
            ))),
        }
    }
}

impl std::fmt::Display for DriftKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DriftKind::NoiseInduced => "noise-induced",
            DriftKind::Stratonovich => "stratonovich",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub project: Projection,
    #[serde(default)]
    pub drift: DriftKind,
}

impl LimitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::invalid(format!(
                "damping gamma must be positive, got {}",
                self.gamma
            )));
        }
        step_count(self.dt, self.t_end).map(|_| ())
    }

    pub fn n_steps(&self) -> Result<usize> {
        self.validate()?;
        step_count(self.dt, self.t_end)
    }

    pub fn with_drift(mut self, drift: DriftKind) -> Self {
        self.drift = drift;
        self
    }
}

/// The drift correction of the chosen equation, entering as `γ du = [… + drift] dt`.
pub fn correction_drift(
    u: &SpectralField,
    gamma: f64,
    drift: DriftKind,
    dm: &DiffusionModel,
) -> Result<SpectralField> {
    match drift {
        DriftKind::NoiseInduced => Ok(u.scaled(-dm.sigma_hs_norm_sq(u, 0.0) / (2.0 * gamma))),
        DriftKind::Stratonovich => {
            if !dm.is_rank_one() {
                return Err(Error::invalid(
                    "the Stratonovich drift is only available in closed form for the rank-one diffusion",
                ));
            }
            Ok(sigma_prime_sigma_radial(dm, u)?.scaled(0.5 / gamma))
        }
    }
}

// Unprojected runs leave the sphere by O(dt); the closed form is evaluated
// at the radial projection of u.
fn sigma_prime_sigma_radial(dm: &DiffusionModel, u: &SpectralField) -> Result<SpectralField> {
    let n = u.norm(0.0);
    if !(n > 0.0) {
        return Err(Error::DegenerateState("sigma'sigma at u = 0".into()));
    }
    dm.sigma_prime_sigma(&u.scaled(1.0 / n))
}

#[derive(Debug, Clone)]
pub struct LimitIntegrator {
    params: LimitParams,
    flows: Vec<HeatFlow>,
}

impl LimitIntegrator {
    pub fn new(params: LimitParams, n_modes: usize) -> Result<Self> {
        params.validate()?;
        let flows = (1..=n_modes)
            .map(|j| HeatFlow::new(eigenvalue(j), params.gamma, params.dt))
            .collect();
        Ok(Self { params, flows })
    }

    pub fn params(&self) -> &LimitParams {
        &self.params
    }

    pub fn step(
        &self,
        u: &SpectralField,
        dm: &DiffusionModel,
        dw: &[f64],
        step_index: usize,
    ) -> Result<SpectralField> {
        let LimitParams { gamma, dt, .. } = self.params;
        let s = u.norm_sq(1.0);
        let mut force = correction_drift(u, gamma, self.params.drift, dm)?;
        force.axpy(s, u);
        let kick = dm.apply_noise(u, dw);

        let mut next = SpectralField::zeros(u.n_modes());
        for (j, out) in next.coeffs_mut().iter_mut().enumerate() {
            *out = self.flows[j].apply(
                u.coeffs()[j] + kick.coeffs()[j] / gamma,
                force.coeffs()[j],
            );
        }
        let blow_up = || Error::BlowUp {
            step: step_index,
            time: (step_index + 1) as f64 * dt,
        };
        if !next.is_finite() {
            return Err(blow_up());
        }
        if self.params.project == Projection::EachStep {
            let n = next.norm(0.0);
            if !(n > 0.0) {
                return Err(blow_up());
            }
            next = next.scaled(1.0 / n);
        }
        Ok(next)
    }
}

/// One step of the parabolic scheme with this step's increments.
pub fn limit_step(
    u: &SpectralField,
    p: &LimitParams,
    dm: &DiffusionModel,
    dw: &[f64],
) -> Result<SpectralField> {
    if dw.len() != dm.noise_dim() {
        return Err(Error::invalid(format!(
            "{} increments for a {}-dimensional noise",
            dw.len(),
            dm.noise_dim()
        )));
    }
    require_on_sphere(u, ManifoldTolerances::default().tol_constraint, "limit_step")?;
    LimitIntegrator::new(*p, u.n_modes())?.step(u, dm, dw, 0)
}

pub fn simulate_limit(
    u0: &SpectralField,
    p: &LimitParams,
    dm: &DiffusionModel,
    nm: &NoiseModel,
    replica: u64,
) -> Result<Trajectory> {
    let n_steps = p.n_steps()?;
    let inc = wiener_increments(nm, p.dt, n_steps, replica)?;
    simulate_limit_with(
        u0,
        p,
        dm,
        Arc::new(inc),
        Some(NoiseRef {
            seed: nm.seed(),
            replica,
        }),
    )
}

pub fn simulate_limit_with(
    u0: &SpectralField,
    p: &LimitParams,
    dm: &DiffusionModel,
    increments: Arc<IncrementTable>,
    noise_ref: Option<NoiseRef>,
) -> Result<Trajectory> {
    let n_steps = p.n_steps()?;
    check_noise_match(dm, &increments)?;
    if increments.n_steps() != n_steps || (increments.dt() - p.dt).abs() > 1e-12 * p.dt {
        return Err(Error::GridMismatch(format!(
            "increments cover {} steps of {}, run needs {} steps of {}",
            increments.n_steps(),
            increments.dt(),
            n_steps,
            p.dt
        )));
    }
    require_on_sphere(u0, ManifoldTolerances::default().tol_constraint, "simulate_limit")?;
    if let Some(h) = dm.h() {
        h.check_same_basis(u0)?;
    }
    if p.drift == DriftKind::Stratonovich && !dm.is_rank_one() {
        return Err(Error::invalid(
            "the Stratonovich drift needs the rank-one diffusion",
        ));
    }

    let integ = LimitIntegrator::new(*p, u0.n_modes())?;
    let zero_v = SpectralField::zeros(u0.n_modes());
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut diagnostics = Vec::with_capacity(n_steps + 1);
    let z0 = StateZ {
        u: u0.clone(),
        v: zero_v.clone(),
    };
    diagnostics.push(Diagnostics::of(&z0, dm));
    states.push(z0);
    for i in 0..n_steps {
        let u = integ.step(&states[i].u, dm, increments.step(i), i)?;
        let z = StateZ {
            u,
            v: zero_v.clone(),
        };
        diagnostics.push(Diagnostics::of(&z, dm));
        states.push(z);
    }
    Ok(Trajectory {
        dt: p.dt,
        times: (0..=n_steps).map(|i| i as f64 * p.dt).collect(),
        states,
        diagnostics,
        noise_ref,
        increments,
    })
}

/// `|u_strat - u_noise_induced|_H / dt` after one step from `u0` with shared
/// increments. The noise contributions cancel exactly.
pub fn single_step_gap_rate(
    u0: &SpectralField,
    p: &LimitParams,
    dm: &DiffusionModel,
    dw: &[f64],
) -> Result<f64> {
    let a = limit_step(u0, &p.with_drift(DriftKind::NoiseInduced), dm, dw)?;
    let b = limit_step(u0, &p.with_drift(DriftKind::Stratonovich), dm, dw)?;
    Ok((&b - &a).norm(0.0) / p.dt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub t: f64,
    pub mean_gap: f64,
    pub stderr: Option<f64>,
    /// `t · |Λ(u₀)|_H / (2γ²)`, the gap predicted to first order in `t`.
    pub predicted_first_order_gap: f64,
    pub distinguished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorReport {
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub replicas: usize,
    /// `|Λ(u₀)|_H`.
    pub lambda_norm: f64,
    /// `|Λ(u₀)/g³|_H`, the scale-free profile of the discrepancy.
    pub lambda_profile_norm: f64,
    /// Observed `|ũ(dt) - u(dt)|_H / dt` for a single step.
    pub one_step_gap_rate: f64,
    /// `|Λ(u₀)|_H / (2γ²)`, the `dt → 0` limit of the one-step rate.
    pub predicted_gap_rate: f64,
    pub records: Vec<GapRecord>,
    /// Whether the mean gap at `t_end` exceeds five standard errors.
    pub distinguished: bool,
}

/// Runs the noise-induced and Stratonovich equations from `u0` on shared
/// noise and measures how far apart they drift.
pub fn discriminator_experiment(
    u0: &SpectralField,
    p: &LimitParams,
    dm: &DiffusionModel,
    nm: &NoiseModel,
    replicas: usize,
    checkpoints: usize,
) -> Result<DiscriminatorReport> {
    if !dm.is_rank_one() {
        return Err(Error::invalid("the discriminator needs the rank-one diffusion"));
    }
    if replicas == 0 || checkpoints == 0 {
        return Err(Error::invalid("need at least one replica and one checkpoint"));
    }
    require_on_sphere(u0, ManifoldTolerances::default().tol_constraint, "discriminator")?;
    let profile = dm.lambda_profile(u0)?;
    let scale = 1.0 + u0.norm(1.0) * dm.h().map_or(1.0, |h| h.norm(1.0));
    if profile.norm(0.0) <= 1e-10 * scale {
        return Err(Error::invalid(
            "initial datum lies in the degenerate set where the two drifts agree",
        ));
    }
    let lambda = dm.lambda_discriminator(u0)?;
    let n_steps = p.n_steps()?;
    let gamma = p.gamma;

    let first = wiener_increments(nm, p.dt, 1, 0)?;
    let one_step_gap_rate = single_step_gap_rate(u0, p, dm, first.step(0))?;

    let marks: Vec<usize> = (1..=checkpoints)
        .map(|c| (c * n_steps) / checkpoints)
        .collect();
    let gaps: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let inc = Arc::new(wiener_increments(nm, p.dt, n_steps, r)?);
            let nref = Some(NoiseRef {
                seed: nm.seed(),
                replica: r,
            });
            let a = simulate_limit_with(u0, &p.with_drift(DriftKind::NoiseInduced), dm, inc.clone(), nref)?;
            let b = simulate_limit_with(u0, &p.with_drift(DriftKind::Stratonovich), dm, inc, nref)?;
            Ok(marks
                .iter()
                .map(|&i| (&a.states[i].u - &b.states[i].u).norm(0.0))
                .collect())
        })
        .collect::<Result<_>>()?;

    let records: Vec<GapRecord> = marks
        .iter()
        .enumerate()
        .map(|(c, &i)| {
            let est = MeanEstimate::from_samples(gaps.iter().map(|g| g[c]));
            let t = i as f64 * p.dt;
            GapRecord {
                t,
                mean_gap: est.mean,
                stderr: est.stderr,
                predicted_first_order_gap: t * lambda.norm(0.0) / (2.0 * gamma * gamma),
                distinguished: est.stderr.is_some_and(|se| est.mean > 5.0 * se),
            }
        })
        .collect();
    let distinguished = records.last().is_some_and(|r| r.distinguished);

    Ok(DiscriminatorReport {
        gamma,
        dt: p.dt,
        t_end: p.t_end,
        replicas,
        lambda_norm: lambda.norm(0.0),
        lambda_profile_norm: profile.norm(0.0),
        one_step_gap_rate,
        predicted_gap_rate: lambda.norm(0.0) / (2.0 * gamma * gamma),
        records,
        distinguished,
    })
}
