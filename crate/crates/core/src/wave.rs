//! Time integration of the constrained small-mass wave system
//!
//! ```text
//! du = v dt
//! μ dv = [Δu + |u|²_{H¹} u - μ|v|²_H u - γ v] dt + σ(u) dW
//! ```
//!
//! and its pathwise diagnostics.
//!
//! The scheme is a stochastic exponential Euler method: the damped wave
//! operator is propagated exactly mode by mode, the cubic terms are frozen
//! at the left end of the step and integrated against the exact flow, and
//! the noise enters as an Itô kick on the velocity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionModel;
use crate::error::{Error, Result};
use crate::flow::OscillatorFlow;
use crate::geometry::{self, ManifoldTolerances};
use crate::noise::{wiener_increments, IncrementTable, NoiseModel};
use crate::spectral::{eigenvalue, SpectralField, StateZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Projection {
    #[serde(rename = "each-step")]
    EachStep,
    #[default]
    #[serde(rename = "never")]
    Never,
}

impl std::str::FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "each-step" => Ok(Projection::EachStep),
            "never" => Ok(Projection::Never),
            other => Err(Error::invalid(format!(
                "unknown projection mode {other:?} (expected each-step or never)"
            ))),
        }
    }
}

impl std::fmt::Display for Projection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Projection::EachStep => "each-step",
            Projection::Never => "never",
        })
    }
}

/// Number of steps for a horizon, rejecting horizons that are not a whole
/// number of steps.
pub(crate) fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0 && t_end > 0.0) || !dt.is_finite() || !t_end.is_finite() {
        return Err(Error::invalid(format!(
            "dt and t_end must be positive, got dt = {dt}, t_end = {t_end}"
        )));
    }
    if dt > t_end {
        return Err(Error::invalid(format!("dt = {dt} exceeds t_end = {t_end}")));
    }
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end {
        return Err(Error::invalid(format!(
            "t_end = {t_end} is not a whole number of steps of size {dt}"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub mu: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub project: Projection,
}

impl WaveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::invalid(format!("mass mu must be positive, got {}", self.mu)));
        }
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

    /// Whether the step is above the `dt ≤ μ/(2γ)` advisory bound.
    pub fn exceeds_stiffness_guard(&self) -> bool {
        self.dt > self.mu / (2.0 * self.gamma)
    }
}

/// Scalars monitored at every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub norm_h: f64,
    pub psi: f64,
    pub phi: f64,
    pub h2norm: f64,
    pub hs_norm_sq: f64,
}

impl Diagnostics {
    pub fn of(z: &StateZ, dm: &DiffusionModel) -> Self {
        Self {
            norm_h: z.u.norm(0.0),
            psi: geometry::energy_psi(z),
            phi: geometry::phi_unchecked(&z.u),
            h2norm: z.u.norm(2.0),
            hs_norm_sq: dm.sigma_hs_norm_sq(&z.u, 0.0),
        }
    }
}

/// Where the noise of a run came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseRef {
    pub seed: u64,
    pub replica: u64,
}

/// A simulated path on the uniform grid `t_i = i·dt`, `i = 0..=n_steps`.
///
/// Parabolic runs store `v ≡ 0`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<StateZ>,
    pub diagnostics: Vec<Diagnostics>,
    pub noise_ref: Option<NoiseRef>,
    pub increments: Arc<IncrementTable>,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn n_modes(&self) -> usize {
        self.states[0].n_modes()
    }

    pub fn final_state(&self) -> &StateZ {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Keeps every `factor`-th grid point.
    pub fn subsample(&self, factor: usize) -> Result<Trajectory> {
        if factor == 0 || !self.n_steps().is_multiple_of(factor) {
            return Err(Error::invalid(format!(
                "cannot subsample {} steps by {factor}",
                self.n_steps()
            )));
        }
        let pick = |i: usize| i.is_multiple_of(factor);
        Ok(Trajectory {
            dt: self.dt * factor as f64,
            times: self.times.iter().enumerate().filter(|(i, _)| pick(*i)).map(|(_, t)| *t).collect(),
            states: self.states.iter().enumerate().filter(|(i, _)| pick(*i)).map(|(_, s)| s.clone()).collect(),
            diagnostics: self.diagnostics.iter().enumerate().filter(|(i, _)| pick(*i)).map(|(_, d)| *d).collect(),
            noise_ref: self.noise_ref,
            increments: Arc::new(self.increments.coarsen(factor)?),
        })
    }
}

/// Precomputed per-mode propagators for fixed `(μ, γ, dt, N)`.
#[derive(Debug, Clone)]
pub struct WaveIntegrator {
    params: WaveParams,
    flows: Vec<OscillatorFlow>,
}

impl WaveIntegrator {
    pub fn new(params: WaveParams, n_modes: usize) -> Result<Self> {
        params.validate()?;
        let flows = (1..=n_modes)
            .map(|j| OscillatorFlow::new(eigenvalue(j), params.mu, params.gamma, params.dt))
            .collect();
        Ok(Self { params, flows })
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    /// One step; `step_index` is only used to label a blow-up.
    pub fn step(
        &self,
        z: &StateZ,
        dm: &DiffusionModel,
        dw: &[f64],
        step_index: usize,
    ) -> Result<StateZ> {
        let WaveParams { mu, dt, .. } = self.params;
        let u = &z.u;
        let s = u.norm_sq(1.0);
        let v_sq = z.v.norm_sq(0.0);
        // frozen force |u|²_{H¹} u - μ|v|² u, and the Itô kick σ(u)ΔW
        let force_scale = (s - mu * v_sq) / mu;
        let kick = dm.apply_noise(u, dw);

        let n = u.n_modes();
        let mut un = SpectralField::zeros(n);
        let mut vn = SpectralField::zeros(n);
        {
            let (uo, vo) = (un.coeffs_mut(), vn.coeffs_mut());
            for j in 0..n {
                let (a, b) = self.flows[j].apply(
                    u.coeffs()[j],
                    z.v.coeffs()[j] + kick.coeffs()[j] / mu,
                    force_scale * u.coeffs()[j],
                );
                uo[j] = a;
                vo[j] = b;
            }
        }
        let mut next = StateZ { u: un, v: vn };
        if !(next.u.is_finite() && next.v.is_finite()) {
            return Err(Error::BlowUp {
                step: step_index,
                time: (step_index + 1) as f64 * dt,
            });
        }
        if self.params.project == Projection::EachStep {
            next = geometry::renormalize_state(&next).map_err(|_| Error::BlowUp {
                step: step_index,
                time: (step_index + 1) as f64 * dt,
            })?;
        }
        Ok(next)
    }
}

/// One step of the wave scheme from `z` with the increments `dw` of this step.
pub fn wave_step(z: &StateZ, p: &WaveParams, dm: &DiffusionModel, dw: &[f64]) -> Result<StateZ> {
    if dw.len() != dm.noise_dim() {
        return Err(Error::invalid(format!(
            "{} increments for a {}-dimensional noise",
            dw.len(),
            dm.noise_dim()
        )));
    }
    WaveIntegrator::new(*p, z.n_modes())?.step(z, dm, dw, 0)
}

pub(crate) fn check_noise_match(dm: &DiffusionModel, inc: &IncrementTable) -> Result<()> {
    if inc.n_noise_modes() != dm.noise_dim() {
        return Err(Error::invalid(format!(
            "increment table has {} noise coordinates, diffusion expects {}",
            inc.n_noise_modes(),
            dm.noise_dim()
        )));
    }
    Ok(())
}

/// Simulates the wave system with noise drawn from `(nm.seed, replica)`.
pub fn simulate_wave(
    z0: &StateZ,
    p: &WaveParams,
    dm: &DiffusionModel,
    nm: &NoiseModel,
    replica: u64,
) -> Result<Trajectory> {
    let n_steps = p.n_steps()?;
    let inc = wiener_increments(nm, p.dt, n_steps, replica)?;
    simulate_wave_with(
        z0,
        p,
        dm,
        Arc::new(inc),
        Some(NoiseRef {
            seed: nm.seed(),
            replica,
        }),
    )
}

/// Simulates the wave system on a caller-supplied increment table.
pub fn simulate_wave_with(
    z0: &StateZ,
    p: &WaveParams,
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
    let tol = ManifoldTolerances::default();
    if !z0.is_on_manifold(tol.tol_constraint) {
        let (a, b) = z0.constraint_defects();
        return Err(Error::invalid(format!(
            "initial state is off the tangent bundle (| |u|-1 | = {a:e}, |<u,v>| = {b:e})"
        )));
    }
    if let Some(h) = dm.h() {
        h.check_same_basis(&z0.u)?;
    }
    if p.exceeds_stiffness_guard() {
        log::warn!(
            "dt = {} exceeds mu/(2 gamma) = {}; the explicit cubic terms may be unstable",
            p.dt,
            p.mu / (2.0 * p.gamma)
        );
    }

    let integ = WaveIntegrator::new(*p, z0.n_modes())?;
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut diagnostics = Vec::with_capacity(n_steps + 1);
    states.push(z0.clone());
    diagnostics.push(Diagnostics::of(z0, dm));
    for i in 0..n_steps {
        let next = integ.step(&states[i], dm, increments.step(i), i)?;
        diagnostics.push(Diagnostics::of(&next, dm));
        states.push(next);
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

/// Pathwise residual of the energy equality at every grid point:
///
/// `½|u(t)|²_{H¹} + (μ/2)|v(t)|²_H - [½|u₀|²_{H¹} + (μ/2)|v₀|²_H - γ∫|v|² + ∫⟨v, σ(u)dW⟩ + (1/2μ)∫‖σ(u)‖²]`
///
/// with left-point sums against the run's own increments.
pub fn energy_residual_series(tr: &Trajectory, p: &WaveParams, dm: &DiffusionModel) -> Vec<f64> {
    let energy = |z: &StateZ| 0.5 * z.u.norm_sq(1.0) + 0.5 * p.mu * z.v.norm_sq(0.0);
    let e0 = energy(&tr.states[0]);
    let mut rhs = e0;
    let mut out = Vec::with_capacity(tr.states.len());
    out.push(0.0);
    for i in 0..tr.n_steps() {
        let z = &tr.states[i];
        let dw = tr.increments.step(i);
        rhs += -p.gamma * z.v.norm_sq(0.0) * tr.dt
            + z.v.dot(&dm.apply_noise(&z.u, dw), 0.0)
            + dm.sigma_hs_norm_sq(&z.u, 0.0) * tr.dt / (2.0 * p.mu);
        out.push(energy(&tr.states[i + 1]) - rhs);
    }
    out
}

/// `sup_t |LHS - RHS|` of the energy equality.
pub fn energy_equality_residual(tr: &Trajectory, p: &WaveParams, dm: &DiffusionModel) -> f64 {
    energy_residual_series(tr, p, dm)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

/// `R_μ(t) = μ∫₀ᵗ|v|²_H u ds - (1/2γ)∫₀ᵗ‖σ(u)‖²_{𝒯₂} u ds` (left-point sums) at every grid
/// point, returned as the field series.
pub fn remainder_field_series(
    tr: &Trajectory,
    p: &WaveParams,
    dm: &DiffusionModel,
) -> Vec<SpectralField> {
    let mut acc = SpectralField::zeros(tr.n_modes());
    let mut out = Vec::with_capacity(tr.states.len());
    out.push(acc.clone());
    for i in 0..tr.n_steps() {
        let z = &tr.states[i];
        let w = p.mu * z.v.norm_sq(0.0) - dm.sigma_hs_norm_sq(&z.u, 0.0) / (2.0 * p.gamma);
        acc.axpy(w * tr.dt, &z.u);
        out.push(acc.clone());
    }
    out
}

/// `t ↦ |R_μ(t)|_H`.
pub fn remainder_r_mu(tr: &Trajectory, p: &WaveParams, dm: &DiffusionModel) -> Vec<f64> {
    remainder_field_series(tr, p, dm)
        .iter()
        .map(|r| r.norm(0.0))
        .collect()
}

/// `Φ_μ(t) = γ u(t) + μ v(t)` along the path.
pub fn phi_mu_process(tr: &Trajectory, p: &WaveParams) -> Vec<SpectralField> {
    tr.states
        .iter()
        .map(|z| {
            let mut f = z.u.scaled(p.gamma);
            f.axpy(p.mu, &z.v);
            f
        })
        .collect()
}

/// Discrete Sobolev–Slobodeckij seminorm of a path in `H`:
///
/// `[f]²_{W^{θ,2}} ≈ Σ_{i≠j} |f_i - f_j|²_H / |t_i - t_j|^{1+2θ} dt²`.
pub fn time_seminorm(path: &[SpectralField], dt: f64, theta: f64) -> Result<f64> {
    if !(0.0 < theta && theta < 1.0) {
        return Err(Error::invalid(format!("theta must lie in (0, 1), got {theta}")));
    }
    let mut total = 0.0;
    for i in 0..path.len() {
        for j in (i + 1)..path.len() {
            let d = (&path[i] - &path[j]).norm_sq(0.0);
            let lag = (j - i) as f64 * dt;
            total += 2.0 * d / lag.powf(1.0 + 2.0 * theta);
        }
    }
    Ok((total * dt * dt).sqrt())
}
