//! Diffusion coefficients `σ₀`, their tangential part `σ = σ₀ - σ₁` and the
//! rank-one analytic objects used to tell the small-mass limit apart from the
//! Stratonovich equation.
//!
//! Two families are supported:
//!
//! * rank one, `K = ℝ`: `σ₀(u) = g(|u|²_{H¹}) h` with `g(t) = 1/(1+t)` and `|h|_H = 1`;
//! * diagonal: `σ₀(u) ẽ_k = q_k λ_k(|u|_{H¹}) e_k`, where `ẽ_k = q_k e_k` is the
//!   orthonormal basis of `K` and `λ_k` is either constant or `a_k / (1 + r²)`.
//!
//! Noise coordinates `k` are 1-based throughout, like the sine modes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{require_on_sphere, ManifoldTolerances};
use crate::spectral::{eigenvalue, eigenvalue_pow, SpectralField};

/// `g(t) = (1 + t)⁻¹`.
#[inline]
pub fn g_scale(t: f64) -> f64 {
    1.0 / (1.0 + t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaProfile {
    /// `λ_k(r) = a_k`.
    Constant,
    /// `λ_k(r) = a_k / (1 + r²)`.
    Decaying,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionModel {
    RankOne {
        h: SpectralField,
    },
    Diagonal {
        profile: LambdaProfile,
        amplitudes: Vec<f64>,
        q: Vec<f64>,
    },
}

impl DiffusionModel {
    /// Rank-one model; `h` is renormalized to `|h|_H = 1`.
    pub fn rank_one(h: SpectralField) -> Result<Self> {
        let n = h.norm(0.0);
        if !(n > 0.0) {
            return Err(Error::invalid("rank-one direction h must be nonzero"));
        }
        Ok(DiffusionModel::RankOne {
            h: h.scaled(1.0 / n),
        })
    }

    /// The default rank-one direction `h = (e₁ + e₂)/√2`.
    pub fn default_rank_one(n_modes: usize) -> Result<Self> {
        if n_modes < 2 {
            return Err(Error::invalid("default h needs at least two modes"));
        }
        Self::rank_one(SpectralField::from_leading(n_modes, &[1.0, 1.0])?)
    }

    pub fn diagonal(profile: LambdaProfile, amplitudes: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("diagonal diffusion needs at least one mode"));
        }
        if amplitudes.len() != q.len() {
            return Err(Error::invalid(format!(
                "{} amplitudes but {} covariance weights",
                amplitudes.len(),
                q.len()
            )));
        }
        if amplitudes.iter().chain(&q).any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite diffusion parameter"));
        }
        Ok(DiffusionModel::Diagonal {
            profile,
            amplitudes,
            q,
        })
    }

    /// `λ_k(r) = α_k⁻¹ / (1 + r²)` on `k = 1..=n_noise`, unit covariance weights.
    pub fn default_diagonal(n_noise: usize) -> Result<Self> {
        let amplitudes = (1..=n_noise).map(|k| 1.0 / eigenvalue(k)).collect();
        Self::diagonal(LambdaProfile::Decaying, amplitudes, vec![1.0; n_noise])
    }

    /// Dimension of the noise coordinates consumed per step.
    pub fn noise_dim(&self) -> usize {
        match self {
            DiffusionModel::RankOne { .. } => 1,
            DiffusionModel::Diagonal { amplitudes, .. } => amplitudes.len(),
        }
    }

    pub fn is_rank_one(&self) -> bool {
        matches!(self, DiffusionModel::RankOne { .. })
    }

    /// The direction `h` of a rank-one model.
    pub fn h(&self) -> Option<&SpectralField> {
        match self {
            DiffusionModel::RankOne { h } => Some(h),
            _ => None,
        }
    }

    fn check_basis(&self, u: &SpectralField) -> Result<()> {
        if let DiffusionModel::RankOne { h } = self {
            h.check_same_basis(u)?;
        }
        Ok(())
    }

    fn check_coordinate(&self, k: usize) -> Result<()> {
        if let DiffusionModel::Diagonal { amplitudes, .. } = self {
            if k == 0 || k > amplitudes.len() {
                return Err(Error::invalid(format!(
                    "noise coordinate {k} outside 1..={}",
                    amplitudes.len()
                )));
            }
        }
        Ok(())
    }

    /// Diagonal gain `q_k λ_k(r)` (0-based index).
    #[inline]
    fn diagonal_gain(profile: LambdaProfile, a: f64, q: f64, r: f64) -> f64 {
        match profile {
            LambdaProfile::Constant => q * a,
            LambdaProfile::Decaying => q * a / (1.0 + r * r),
        }
    }

    /// `σ₀(u) ẽ_k`.
    pub fn sigma0_apply(&self, u: &SpectralField, k: usize) -> Result<SpectralField> {
        self.check_basis(u)?;
        self.check_coordinate(k)?;
        Ok(match self {
            DiffusionModel::RankOne { h } => h.scaled(g_scale(u.norm_sq(1.0))),
            DiffusionModel::Diagonal {
                profile,
                amplitudes,
                q,
            } => {
                let mut out = SpectralField::zeros(u.n_modes());
                // modes beyond the Galerkin truncation are projected out
                if k <= u.n_modes() {
                    let r = u.norm(1.0);
                    out.coeffs_mut()[k - 1] =
                        Self::diagonal_gain(*profile, amplitudes[k - 1], q[k - 1], r);
                }
                out
            }
        })
    }

    /// `σ₁(u) ẽ_k = ⟨σ₀(u) ẽ_k, u⟩_H u`.
    pub fn sigma1_apply(&self, u: &SpectralField, k: usize) -> Result<SpectralField> {
        let s0 = self.sigma0_apply(u, k)?;
        Ok(u.scaled(s0.dot(u, 0.0)))
    }

    /// `σ(u) ẽ_k = σ₀(u) ẽ_k - ⟨σ₀(u) ẽ_k, u⟩_H u`.
    pub fn sigma_apply(&self, u: &SpectralField, k: usize) -> Result<SpectralField> {
        let mut s = self.sigma0_apply(u, k)?;
        let c = s.dot(u, 0.0);
        s.axpy(-c, u);
        Ok(s)
    }

    /// `σ(u) ΔW = Σ_k σ(u) ẽ_k ΔW_k` for one row of increments.
    pub fn apply_noise(&self, u: &SpectralField, dw: &[f64]) -> SpectralField {
        debug_assert_eq!(dw.len(), self.noise_dim());
        let mut w = match self {
            DiffusionModel::RankOne { h } => h.scaled(g_scale(u.norm_sq(1.0)) * dw[0]),
            DiffusionModel::Diagonal {
                profile,
                amplitudes,
                q,
            } => {
                let r = u.norm(1.0);
                let mut w = SpectralField::zeros(u.n_modes());
                for (i, c) in w.coeffs_mut().iter_mut().enumerate().take(dw.len()) {
                    *c = Self::diagonal_gain(*profile, amplitudes[i], q[i], r) * dw[i];
                }
                w
            }
        };
        let c = w.dot(u, 0.0);
        w.axpy(-c, u);
        w
    }

    /// `‖σ₀(u)‖²_{𝒯₂(K, H^β)}`.
    pub fn sigma0_hs_norm_sq(&self, u: &SpectralField, beta: f64) -> f64 {
        match self {
            DiffusionModel::RankOne { h } => {
                let g = g_scale(u.norm_sq(1.0));
                g * g * h.norm_sq(beta)
            }
            DiffusionModel::Diagonal {
                profile,
                amplitudes,
                q,
            } => {
                let r = u.norm(1.0);
                (0..amplitudes.len().min(u.n_modes()))
                    .map(|i| {
                        let c = Self::diagonal_gain(*profile, amplitudes[i], q[i], r);
                        c * c * eigenvalue_pow(i + 1, beta)
                    })
                    .sum()
            }
        }
    }

    /// `‖σ(u)‖²_{𝒯₂(K, H^β)} = Σ_k |σ(u) ẽ_k|²_{H^β}`.
    pub fn sigma_hs_norm_sq(&self, u: &SpectralField, beta: f64) -> f64 {
        match self {
            DiffusionModel::RankOne { h } => {
                let g = g_scale(u.norm_sq(1.0));
                let mut w = h.clone();
                w.axpy(-h.dot(u, 0.0), u);
                g * g * w.norm_sq(beta)
            }
            DiffusionModel::Diagonal {
                profile,
                amplitudes,
                q,
            } => {
                // |c_k e_k - c_k u_k u|²_β summed over k
                let r = u.norm(1.0);
                let u_beta = u.norm_sq(beta);
                let uc = u.coeffs();
                let mut total = 0.0;
                for i in 0..amplitudes.len().min(u.n_modes()) {
                    let c = Self::diagonal_gain(*profile, amplitudes[i], q[i], r);
                    let ab = eigenvalue_pow(i + 1, beta);
                    total += c * c * (ab - 2.0 * uc[i] * uc[i] * ab + uc[i] * uc[i] * u_beta);
                }
                total.max(0.0)
            }
        }
    }

    fn rank_one_scalars(&self, u: &SpectralField, what: &str) -> Result<RankOneScalars> {
        let DiffusionModel::RankOne { h } = self else {
            return Err(Error::invalid(format!("{what} needs the rank-one diffusion")));
        };
        h.check_same_basis(u)?;
        require_on_sphere(u, ManifoldTolerances::default().tol_constraint, what)?;
        let s = u.norm_sq(1.0);
        Ok(RankOneScalars {
            g: g_scale(s),
            s,
            a: u.dot(h, 0.0),
            b: u.dot(h, 1.0),
        })
    }

    /// Closed form of `σ'(u) σ(u)` for the rank-one model on the sphere:
    ///
    /// `g³ [(a s - 2b - a) h + (2a² + 2ab - 1 - s) u]`,
    ///
    /// with `s = |u|²_{H¹}`, `a = ⟨u,h⟩_H`, `b = ⟨u,h⟩_{H¹}`, `g = g(s)`.
    pub fn sigma_prime_sigma(&self, u: &SpectralField) -> Result<SpectralField> {
        let RankOneScalars { g, s, a, b } = self.rank_one_scalars(u, "sigma_prime_sigma")?;
        let h = self.h().expect("rank one");
        let g3 = g * g * g;
        let mut out = h.scaled(g3 * (a * s - 2.0 * b - a));
        out.axpy(g3 * (2.0 * a * a + 2.0 * a * b - 1.0 - s), u);
        Ok(out)
    }

    /// `Λ(u) = σ'(u)σ(u) + ‖σ(u)‖²_{𝒯₂(K,H)} u`, in closed form
    /// `g³ [(a s - 2b - a) h + a(a + 2b - a s) u]`.
    pub fn lambda_discriminator(&self, u: &SpectralField) -> Result<SpectralField> {
        let g = self.rank_one_scalars(u, "lambda_discriminator")?.g;
        Ok(self.lambda_profile(u)?.scaled(g * g * g))
    }

    /// `Λ(u) / g³(|u|²_{H¹})`: the bracket that decides membership of the
    /// degenerate set `{Λ = 0}`. On `⟨u,h⟩_H = 0` it equals `-2⟨u,h⟩_{H¹} h`.
    pub fn lambda_profile(&self, u: &SpectralField) -> Result<SpectralField> {
        let RankOneScalars { s, a, b, .. } = self.rank_one_scalars(u, "lambda_profile")?;
        let h = self.h().expect("rank one");
        let mut out = h.scaled(a * s - 2.0 * b - a);
        out.axpy(a * (a + 2.0 * b - a * s), u);
        Ok(out)
    }
}

struct RankOneScalars {
    g: f64,
    s: f64,
    a: f64,
    b: f64,
}
