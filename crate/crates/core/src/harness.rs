//! Small-mass convergence experiment: wave runs at decreasing `μ` against
//! the parabolic limit on coupled noise, plus the a-priori monitors.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::DiffusionModel;
use crate::error::{Error, Result};
use crate::limit::{simulate_limit_with, DriftKind, LimitParams};
use crate::noise::{wiener_increments, NoiseModel};
use crate::spectral::StateZ;
use crate::stats::{quantile, MeanEstimate};
use crate::wave::{
    remainder_r_mu, simulate_wave_with, NoiseRef, Projection, Trajectory, WaveParams,
};

/// `(Σ_i dt |u_a(t_i) - u_b(t_i)|⁴_{H¹})^{1/4}` over the left endpoints of the grid.
pub fn l4_h1_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.states.len() != b.states.len() || (a.dt - b.dt).abs() > 1e-12 * a.dt {
        return Err(Error::GridMismatch(format!(
            "{} points at dt = {} vs {} points at dt = {}",
            a.states.len(),
            a.dt,
            b.states.len(),
            b.dt
        )));
    }
    a.states[0].u.check_same_basis(&b.states[0].u)?;
    let sum: f64 = a.states[..a.n_steps()]
        .iter()
        .zip(&b.states)
        .map(|(x, y)| (&x.u - &y.u).norm_sq(1.0).powi(2))
        .sum();
    Ok((sum * a.dt).powf(0.25))
}

/// Pathwise statistics whose ensemble means stay bounded as `μ → 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    /// `sup_t |u|²_{H¹}`.
    pub sup_h1_sq: f64,
    /// `sup_t |u|²_{H²}`.
    pub sup_h2_sq: f64,
    /// `μ^{3/2} sup_t |v|²_H`.
    pub scaled_sup_v_sq: f64,
    /// `μ ∫₀ᵀ |v|²_{H¹} dt`.
    pub scaled_int_v_h1_sq: f64,
}

impl MonitorRecord {
    pub const NAMES: [&'static str; 4] = [
        "sup_h1_sq",
        "sup_h2_sq",
        "scaled_sup_v_sq",
        "scaled_int_v_h1_sq",
    ];

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.sup_h1_sq,
            self.sup_h2_sq,
            self.scaled_sup_v_sq,
            self.scaled_int_v_h1_sq,
        ]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            sup_h1_sq: a[0],
            sup_h2_sq: a[1],
            scaled_sup_v_sq: a[2],
            scaled_int_v_h1_sq: a[3],
        }
    }
}

pub fn apriori_monitors(tr: &Trajectory, mu: f64) -> MonitorRecord {
    let sup = |f: &dyn Fn(&StateZ) -> f64| tr.states.iter().map(f).fold(0.0, f64::max);
    let int_v_h1: f64 = tr.states[..tr.n_steps()]
        .iter()
        .map(|z| z.v.norm_sq(1.0))
        .sum::<f64>()
        * tr.dt;
    MonitorRecord {
        sup_h1_sq: sup(&|z| z.u.norm_sq(1.0)),
        sup_h2_sq: sup(&|z| z.u.norm_sq(2.0)),
        scaled_sup_v_sq: mu.powf(1.5) * sup(&|z| z.v.norm_sq(0.0)),
        scaled_int_v_h1_sq: mu * int_v_h1,
    }
}

/// Indices `k` for which statistic `k` more than doubles from one `μ` to the next.
pub fn monitor_growth_flags(per_mu: &[MonitorRecord]) -> Vec<String> {
    let mut flags = vec![];
    for w in per_mu.windows(2) {
        let (a, b) = (w[0].as_array(), w[1].as_array());
        for k in 0..4 {
            if b[k] > 2.0 * a[k] {
                flags.push(MonitorRecord::NAMES[k].to_string());
            }
        }
    }
    flags.sort();
    flags.dedup();
    flags
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Strictly decreasing masses.
    pub mu_list: Vec<f64>,
    pub replicas: usize,
    pub gamma: f64,
    /// Common grid step shared by the limit and (after subsampling) all wave runs.
    pub dt: f64,
    pub t_end: f64,
    pub project: Projection,
    /// When set to `c`, wave runs use `dt / 2^m` with the smallest `m` making
    /// the step at most `c·μ`; their paths are read back on the common grid.
    pub mu_scaled_dt: Option<f64>,
    pub z0: StateZ,
    pub diffusion: DiffusionModel,
    pub noise: NoiseModel,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu_list.is_empty() {
            return Err(Error::invalid("mu_list is empty"));
        }
        if self.mu_list.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::invalid("masses must be positive"));
        }
        if self.mu_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("mu_list must be strictly decreasing"));
        }
        if self.replicas == 0 {
            return Err(Error::invalid("need at least one replica"));
        }
        if let Some(c) = self.mu_scaled_dt {
            if !(c > 0.0) {
                return Err(Error::invalid("mu_scaled_dt factor must be positive"));
            }
        }
        self.limit_params().validate()
    }

    fn limit_params(&self) -> LimitParams {
        LimitParams {
            gamma: self.gamma,
            dt: self.dt,
            t_end: self.t_end,
            project: self.project,
            drift: DriftKind::NoiseInduced,
        }
    }

    /// Refinement factor `2^m` of the wave grid for mass `mu`.
    pub fn refinement(&self, mu: f64) -> usize {
        match self.mu_scaled_dt {
            None => 1,
            Some(c) => {
                let mut m = 1usize;
                while self.dt / m as f64 > c * mu {
                    m *= 2;
                }
                m
            }
        }
    }

    fn wave_params(&self, mu: f64) -> WaveParams {
        WaveParams {
            mu,
            gamma: self.gamma,
            dt: self.dt / self.refinement(mu) as f64,
            t_end: self.t_end,
            project: self.project,
        }
    }
}

/// One `(μ, replica)` outcome, `None` values for excluded pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub replica: u64,
    pub l4h1_error: Option<f64>,
    pub sup_r_mu: Option<f64>,
    pub monitors: Option<MonitorRecord>,
    pub excluded_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSummary {
    pub mu: f64,
    pub wave_dt: f64,
    pub included: usize,
    pub excluded: usize,
    pub l4h1_error: MeanEstimate,
    pub l4h1_quantiles: [f64; 3],
    pub sup_r_mu: MeanEstimate,
    pub monitors: MonitorRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub replicas: usize,
    pub dt: f64,
    pub t_end: f64,
    pub gamma: f64,
    pub per_mu: Vec<MuSummary>,
    /// Mean error strictly decreasing with non-overlapping one-stderr bars.
    pub error_decreasing: bool,
    /// Same test for `E sup_t |R_μ(t)|_H`.
    pub remainder_decreasing: bool,
    /// Monitors that more than doubled as `μ` halved.
    pub monitor_flags: Vec<String>,
    /// Whether the standard errors are defined (more than one replica).
    pub stderr_defined: bool,
    /// More than 5% of the replicas of some `μ` were excluded.
    pub exclusion_limit_exceeded: bool,
    pub rows: Vec<SweepRow>,
}

/// `means[k+1] + se[k+1] < means[k] - se[k]` for all consecutive pairs.
pub fn strictly_decreasing_beyond_stderr(est: &[MeanEstimate]) -> bool {
    est.windows(2).all(|w| {
        w[1].mean + w[1].stderr_or_zero() < w[0].mean - w[0].stderr_or_zero()
    })
}

struct ReplicaOutcome {
    rows: Vec<SweepRow>,
}

fn run_replica(sc: &SweepConfig, replica: u64) -> ReplicaOutcome {
    let max_ref = sc
        .mu_list
        .iter()
        .map(|&m| sc.refinement(m))
        .max()
        .unwrap_or(1);
    let excluded_all = |reason: String| ReplicaOutcome {
        rows: sc
            .mu_list
            .iter()
            .map(|&mu| SweepRow {
                mu,
                replica,
                l4h1_error: None,
                sup_r_mu: None,
                monitors: None,
                excluded_reason: Some(reason.clone()),
            })
            .collect(),
    };

    let lp = sc.limit_params();
    let n_coarse = match lp.n_steps() {
        Ok(n) => n,
        Err(e) => return excluded_all(e.to_string()),
    };
    let fine = match wiener_increments(&sc.noise, sc.dt / max_ref as f64, n_coarse * max_ref, replica) {
        Ok(t) => t,
        Err(e) => return excluded_all(e.to_string()),
    };
    let nref = Some(NoiseRef {
        seed: sc.noise.seed(),
        replica,
    });
    let coarse = match fine.coarsen(max_ref) {
        Ok(t) => Arc::new(t),
        Err(e) => return excluded_all(e.to_string()),
    };
    let limit = match simulate_limit_with(&sc.z0.u, &lp, &sc.diffusion, coarse, nref) {
        Ok(tr) => tr,
        Err(e) => return excluded_all(format!("limit run: {e}")),
    };

    let rows = sc
        .mu_list
        .iter()
        .map(|&mu| {
            let p = sc.wave_params(mu);
            let m = sc.refinement(mu);
            let run = || -> Result<(f64, f64, MonitorRecord)> {
                let inc = Arc::new(fine.coarsen(max_ref / m)?);
                let tr = simulate_wave_with(&sc.z0, &p, &sc.diffusion, inc, nref)?;
                let sup_r = remainder_r_mu(&tr, &p, &sc.diffusion)
                    .into_iter()
                    .fold(0.0, f64::max);
                let mon = apriori_monitors(&tr, mu);
                let on_grid = if m == 1 { tr } else { tr.subsample(m)? };
                Ok((l4_h1_distance(&on_grid, &limit)?, sup_r, mon))
            };
            match run() {
                Ok((err, sup_r, mon)) => SweepRow {
                    mu,
                    replica,
                    l4h1_error: Some(err),
                    sup_r_mu: Some(sup_r),
                    monitors: Some(mon),
                    excluded_reason: None,
                },
                Err(e) => SweepRow {
                    mu,
                    replica,
                    l4h1_error: None,
                    sup_r_mu: None,
                    monitors: None,
                    excluded_reason: Some(e.to_string()),
                },
            }
        })
        .collect();
    ReplicaOutcome { rows }
}

/// Runs the sweep. Replicas run in parallel on the current rayon pool; the
/// reduction is in replica order, so reports are reproducible.
pub fn small_mass_sweep(sc: &SweepConfig) -> Result<ConvergenceReport> {
    sc.validate()?;
    let outcomes: Vec<ReplicaOutcome> = (0..sc.replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(sc, r))
        .collect();

    let mut per_mu = Vec::with_capacity(sc.mu_list.len());
    let mut rows = Vec::with_capacity(sc.mu_list.len() * sc.replicas);
    for (k, &mu) in sc.mu_list.iter().enumerate() {
        let col: Vec<&SweepRow> = outcomes.iter().map(|o| &o.rows[k]).collect();
        let ok: Vec<&SweepRow> = col.iter().copied().filter(|r| r.excluded_reason.is_none()).collect();
        let errs: Vec<f64> = ok.iter().filter_map(|r| r.l4h1_error).collect();
        let sup_r: Vec<f64> = ok.iter().filter_map(|r| r.sup_r_mu).collect();
        let mons: Vec<MonitorRecord> = ok.iter().filter_map(|r| r.monitors).collect();
        let mut mon_mean = [if mons.is_empty() { f64::NAN } else { 0.0 }; 4];
        for m in &mons {
            for (acc, x) in mon_mean.iter_mut().zip(m.as_array()) {
                *acc += x / mons.len() as f64;
            }
        }
        per_mu.push(MuSummary {
            mu,
            wave_dt: sc.wave_params(mu).dt,
            included: ok.len(),
            excluded: col.len() - ok.len(),
            l4h1_error: MeanEstimate::from_samples(errs.iter().copied()),
            l4h1_quantiles: [
                quantile(&errs, 0.1),
                quantile(&errs, 0.5),
                quantile(&errs, 0.9),
            ],
            sup_r_mu: MeanEstimate::from_samples(sup_r),
            monitors: MonitorRecord::from_array(mon_mean),
        });
        rows.extend(col.into_iter().cloned());
    }

    let errs: Vec<MeanEstimate> = per_mu.iter().map(|s| s.l4h1_error).collect();
    let rems: Vec<MeanEstimate> = per_mu.iter().map(|s| s.sup_r_mu).collect();
    let monitors: Vec<MonitorRecord> = per_mu.iter().map(|s| s.monitors).collect();
    Ok(ConvergenceReport {
        replicas: sc.replicas,
        dt: sc.dt,
        t_end: sc.t_end,
        gamma: sc.gamma,
        error_decreasing: strictly_decreasing_beyond_stderr(&errs),
        remainder_decreasing: strictly_decreasing_beyond_stderr(&rems),
        monitor_flags: monitor_growth_flags(&monitors),
        stderr_defined: sc.replicas > 1,
        exclusion_limit_exceeded: per_mu
            .iter()
            .any(|s| s.excluded as f64 > 0.05 * sc.replicas as f64),
        per_mu,
        rows,
    })
}
