//! Invariant suites run by `skwave verify`.
//!
//! Each suite draws its random samples from a seeded stream, so a failure is
//! reproducible from the seed alone.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diffusion::{DiffusionModel, LambdaProfile};
use crate::error::{Error, Result};
use crate::flow::OscillatorFlow;
use crate::geometry::{crucial_identity_residual, phi_functional, tangent_project};
use crate::noise::{IncrementTable, NormalStream};
use crate::spectral::{eigenvalue, interpolation_slack, SpectralField, StateZ};
use crate::stats::loglog_slope;
use crate::wave::{energy_equality_residual, simulate_wave_with, Projection, WaveParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Geometry,
    Identity,
    Functional,
    Scheme,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Geometry, Suite::Identity, Suite::Functional, Suite::Scheme];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Identity => "identity",
            Suite::Functional => "functional",
            Suite::Scheme => "scheme",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite {s:?}")))
    }
}

/// One checked property: the worst observed value against its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, observed: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            bound: format!("<= {tol:e}"),
            passed: observed <= tol,
        }
    }

    fn at_least(name: &str, observed: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            bound: format!(">= {tol:e}"),
            passed: observed >= tol,
        }
    }

    fn within(name: &str, observed: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            bound: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&observed),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {:e} (bound {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.bound
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub samples: usize,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Random fields with a decaying spectrum `c_j ~ N(0,1) / j^p`.
pub struct FieldSampler {
    stream: NormalStream,
    counter: u64,
    n_modes: usize,
}

impl FieldSampler {
    pub fn new(seed: u64, n_modes: usize) -> Self {
        Self {
            stream: NormalStream::new(seed, 0),
            counter: 0,
            n_modes,
        }
    }

    pub fn normal(&mut self) -> f64 {
        self.counter += 1;
        self.stream.normal_at(self.counter)
    }

    pub fn field(&mut self, decay: f64) -> SpectralField {
        let coeffs = (1..=self.n_modes)
            .map(|j| self.normal() / (j as f64).powf(decay))
            .collect();
        SpectralField::from_coeffs(coeffs).expect("n_modes > 0")
    }

    pub fn unit_field(&mut self, decay: f64) -> SpectralField {
        loop {
            let f = self.field(decay);
            let n = f.norm(0.0);
            if n > 1e-8 {
                return f.scaled(1.0 / n);
            }
        }
    }
}

fn models(n: usize, sampler: &mut FieldSampler) -> Result<Vec<DiffusionModel>> {
    let amplitudes = (0..n).map(|_| sampler.normal()).collect();
    Ok(vec![
        DiffusionModel::default_rank_one(n)?,
        DiffusionModel::rank_one(sampler.field(2.0))?,
        DiffusionModel::default_diagonal(n)?,
        DiffusionModel::diagonal(LambdaProfile::Constant, amplitudes, vec![1.0; n])?,
    ])
}

fn geometry(seed: u64, samples: usize) -> Result<Vec<Check>> {
    let n = 16;
    let mut s = FieldSampler::new(seed, n);
    let dms = models(n, &mut s)?;
    let (mut idem, mut adj, mut contr, mut tang, mut decomp, mut domin) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let a = s.unit_field(1.5);
        let x = s.field(1.0);
        let y = s.field(1.0);
        let px = tangent_project(&a, &x)?;
        idem = idem.max(tangent_project(&a, &px)?.max_abs_diff(&px));
        let lhs = px.inner(&y, 0.0)?;
        let rhs = x.inner(&tangent_project(&a, &y)?, 0.0)?;
        adj = adj.max((lhs - rhs).abs() / (1.0 + x.norm(0.0) * y.norm(0.0)));
        contr = contr.max(px.norm(0.0) - x.norm(0.0));
        for dm in &dms {
            for k in 1..=dm.noise_dim() {
                let s0 = dm.sigma0_apply(&a, k)?;
                let s1 = dm.sigma1_apply(&a, k)?;
                let sg = dm.sigma_apply(&a, k)?;
                tang = tang.max(sg.inner(&a, 0.0)?.abs());
                decomp = decomp.max((&sg + &s1).max_abs_diff(&s0));
                domin = domin.max(sg.norm(0.0) - s0.norm(0.0));
            }
        }
    }
    Ok(vec![
        Check::at_most("projection idempotence", idem, 1e-12),
        Check::at_most("projection self-adjointness", adj, 1e-12),
        Check::at_most("projection contraction excess", contr.max(0.0), 1e-12),
        Check::at_most("tangency of sigma", tang, 1e-12),
        Check::at_most("sigma0 = sigma + sigma1", decomp, 1e-12),
        Check::at_most("|sigma e| <= |sigma0 e| excess", domin.max(0.0), 1e-12),
    ])
}

/// Central difference `(σ(u + εw) - σ(u - εw))/(2ε)` with `w = σ(u)`, using
/// the flat extension of `σ` off the sphere.
pub fn fd_sigma_prime_sigma(dm: &DiffusionModel, u: &SpectralField, eps: f64) -> Result<SpectralField> {
    let w = dm.sigma_apply(u, 1)?;
    let mut plus = u.clone();
    plus.axpy(eps, &w);
    let mut minus = u.clone();
    minus.axpy(-eps, &w);
    Ok((&dm.sigma_apply(&plus, 1)? - &dm.sigma_apply(&minus, 1)?).scaled(0.5 / eps))
}

fn identity(seed: u64, samples: usize) -> Result<Vec<Check>> {
    let n = 16;
    let mut s = FieldSampler::new(seed, n);
    let (mut ident, mut fd) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let dm = if i % 2 == 0 {
            DiffusionModel::default_rank_one(n)?
        } else {
            DiffusionModel::rank_one(s.field(2.0))?
        };
        let u = s.unit_field(1.0 + (i % 3) as f64 * 0.5);
        let spsi = dm.sigma_prime_sigma(&u)?;
        let lambda = dm.lambda_discriminator(&u)?;
        let mut lhs = spsi.clone();
        lhs.axpy(dm.sigma_hs_norm_sq(&u, 0.0), &u);
        ident = ident.max((&lhs - &lambda).norm(0.0) / (1.0 + lambda.norm(0.0)));
        let approx = fd_sigma_prime_sigma(&dm, &u, 1e-5)?;
        fd = fd.max((&approx - &spsi).norm(0.0) / spsi.norm(0.0).max(1e-300));
    }
    Ok(vec![
        Check::at_most("sigma'sigma + |sigma|^2 u = Lambda (relative)", ident, 1e-8),
        Check::at_most("sigma'sigma vs central difference (relative)", fd, 1e-6),
    ])
}

fn functional(seed: u64, samples: usize) -> Result<Vec<Check>> {
    let n = 16;
    let mut s = FieldSampler::new(seed, n);
    let (mut interp, mut phi_lo, mut phi_hi, mut crucial) = (f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..samples {
        let u = s.unit_field(0.5 + (i % 4) as f64 * 0.5);
        for (theta, rho) in [(1.0, 2.0), (1.0, 3.0), (2.0, 3.0)] {
            interp = interp.min(interpolation_slack(&u, theta, rho, 1e-10)?);
        }
        let h2 = u.norm_sq(2.0);
        let phi = phi_functional(&u)?;
        phi_lo = phi_lo.max((0.5 * h2 - phi) / h2);
        phi_hi = phi_hi.max((phi - h2) / h2);
        crucial = crucial.max(crucial_identity_residual(&u)? / (1.0 + h2).powi(2));
    }
    Ok(vec![
        Check::at_least("interpolation slack", interp, -1e-12),
        Check::at_most("Phi >= |u|^2_H2 / 2 violation (relative)", phi_lo.max(0.0), 1e-12),
        Check::at_most("Phi <= |u|^2_H2 violation (relative)", phi_hi.max(0.0), 1e-12),
        Check::at_most("crucial identity residual (relative)", crucial, 1e-10),
    ])
}

/// Closed-form solution of `u' = v`, `μ v' = -α u - γ v` in real arithmetic.
fn oscillator_exact(alpha: f64, mu: f64, gamma: f64, t: f64, u0: f64, v0: f64) -> (f64, f64) {
    let c = 0.5 * gamma / mu;
    let w2 = alpha / mu - c * c;
    let e = (-c * t).exp();
    if w2 > 0.0 {
        let w = w2.sqrt();
        let (sn, cs) = (w * t).sin_cos();
        let b = (v0 + c * u0) / w;
        let u = e * (u0 * cs + b * sn);
        let v = e * ((-c * u0 + w * b) * cs + (-c * b - w * u0) * sn);
        (u, v)
    } else {
        let d = (-w2).sqrt();
        let (l1, l2) = (-c + d, -c - d);
        let a1 = (v0 - l2 * u0) / (l1 - l2);
        let a2 = u0 - a1;
        let (x1, x2) = ((l1 * t).exp(), (l2 * t).exp());
        (a1 * x1 + a2 * x2, a1 * l1 * x1 + a2 * l2 * x2)
    }
}

/// Generic smooth start on the tangent bundle used by the refinement studies.
pub fn refinement_start(n: usize) -> Result<StateZ> {
    let u = SpectralField::from_coeffs(
        (1..=n)
            .map(|j| if j % 2 == 1 { 1.0 } else { -0.7 } / (j as f64).powi(2))
            .collect(),
    )?;
    let u = u.scaled(1.0 / u.norm(0.0));
    let v = tangent_project(&u, &SpectralField::from_leading(n, &[0.0, 1.0, 0.5])?)?;
    StateZ::new(u, v)
}

fn scheme(_seed: u64, _samples: usize) -> Result<Vec<Check>> {
    let mut checks = vec![];

    // linear part against the closed form, 1000 steps
    let mut lin = 0.0f64;
    for &(j, mu, gamma) in &[(1, 0.1, 1.0), (3, 0.025, 1.0), (1, 1.0, 8.0), (8, 0.01, 2.0)] {
        let alpha = eigenvalue(j);
        let dt = 1e-3;
        let flow = OscillatorFlow::new(alpha, mu, gamma, dt);
        let (mut u, mut v) = (0.8, -0.4);
        for _ in 0..1000 {
            (u, v) = flow.apply(u, v, 0.0);
        }
        let (eu, ev) = oscillator_exact(alpha, mu, gamma, 1000.0 * dt, 0.8, -0.4);
        lin = lin
            .max((u - eu).abs() / (1.0 + eu.abs()))
            .max((v - ev).abs() / (1.0 + ev.abs()));
    }
    checks.push(Check::at_most("linear flow vs closed form", lin, 1e-12));

    let n = 16;
    let z0 = refinement_start(n)?;
    let null = DiffusionModel::diagonal(LambdaProfile::Constant, vec![0.0], vec![1.0])?;
    let dts = [4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4];
    let (mut drift, mut energy) = (vec![], vec![]);
    for &dt in &dts {
        let p = WaveParams {
            mu: 0.1,
            gamma: 1.0,
            dt,
            t_end: 0.5,
            project: Projection::Never,
        };
        let inc = Arc::new(IncrementTable::zeros(dt, p.n_steps()?, 1)?);
        let tr = simulate_wave_with(&z0, &p, &null, inc, None)?;
        drift.push(
            tr.states
                .iter()
                .map(|z| (z.u.norm(0.0) - 1.0).abs())
                .fold(0.0, f64::max),
        );
        energy.push(energy_equality_residual(&tr, &p, &null));
    }
    checks.push(Check::within(
        "constraint drift order",
        loglog_slope(&dts, &drift),
        0.7,
        1.3,
    ));
    checks.push(Check::within(
        "energy identity residual order",
        loglog_slope(&dts, &energy),
        0.7,
        1.3,
    ));

    let p = WaveParams {
        mu: 0.1,
        gamma: 1.0,
        dt: 1e-3,
        t_end: 0.5,
        project: Projection::EachStep,
    };
    let inc = Arc::new(IncrementTable::zeros(p.dt, p.n_steps()?, 1)?);
    let tr = simulate_wave_with(&z0, &p, &DiffusionModel::default_rank_one(n)?, inc, None)?;
    let worst = tr
        .states
        .iter()
        .map(|z| {
            let (a, b) = z.constraint_defects();
            a.max(b)
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("projected run stays on the tangent bundle", worst, 1e-12));
    Ok(checks)
}

pub fn run_suite(suite: Suite, seed: u64, samples: usize) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Geometry => geometry(seed, samples)?,
        Suite::Identity => identity(seed, samples)?,
        Suite::Functional => functional(seed, samples)?,
        Suite::Scheme => scheme(seed, samples)?,
    };
    Ok(SuiteReport {
        suite,
        samples,
        checks,
    })
}
