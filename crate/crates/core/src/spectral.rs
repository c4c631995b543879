//! Dirichlet sine basis on `D = (0, 1)` and coefficient-space field arithmetic.
//!
//! The eigenpairs of `-d²/dξ²` with homogeneous Dirichlet data are
//! `e_j(ξ) = √2 sin(jπξ)` and `α_j = (jπ)²`. A [`SpectralField`] stores the
//! coefficients `⟨x, e_j⟩` for `j = 1..=N`, so every Sobolev norm is the
//! weighted sum `|x|²_{H^β} = Σ α_j^β x_j²`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dirichlet eigenvalue `α_j = (jπ)²` for a 1-based mode index.
#[inline]
pub fn eigenvalue(j: usize) -> f64 {
    let k = j as f64 * PI;
    k * k
}

/// `α_j^β`, exact for integer exponents.
#[inline]
pub fn eigenvalue_pow(j: usize, beta: f64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    let a = eigenvalue(j);
    if beta.fract() == 0.0 && beta.abs() <= 16.0 {
        a.powi(beta as i32)
    } else {
        a.powf(beta)
    }
}

/// Galerkin truncation of the Dirichlet Laplacian spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    n_modes: usize,
    eigenvalues: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("basis needs at least one mode"));
        }
        let eigenvalues = (1..=n_modes).map(eigenvalue).collect();
        Ok(Self {
            n_modes,
            eigenvalues,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// `α_1 < α_2 < … < α_N`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Pointwise evaluation of the eigenfunction `e_j` (1-based).
    pub fn eigenfunction(&self, j: usize, xi: f64) -> f64 {
        std::f64::consts::SQRT_2 * (j as f64 * PI * xi).sin()
    }

    pub fn zeros(&self) -> SpectralField {
        SpectralField::zeros(self.n_modes)
    }

    pub fn unit(&self, j: usize) -> SpectralField {
        SpectralField::unit(self.n_modes, j)
    }
}

/// Alias kept for callers that think in terms of the operation name.
pub fn make_basis(n_modes: usize) -> Result<SpectralBasis> {
    SpectralBasis::new(n_modes)
}

/// A field in `H^β(0, 1)` represented by its sine coefficients.
///
/// The basis is implied by the coefficient count: two fields share a basis
/// exactly when they carry the same number of modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldRepr", into = "FieldRepr")]
pub struct SpectralField {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    n_modes: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<FieldRepr> for SpectralField {
    type Error = String;

    fn try_from(r: FieldRepr) -> std::result::Result<Self, String> {
        if r.n_modes != r.coeffs.len() {
            return Err(format!(
                "n_modes = {} but {} coefficients given",
                r.n_modes,
                r.coeffs.len()
            ));
        }
        if r.n_modes == 0 {
            return Err("field needs at least one mode".into());
        }
        Ok(SpectralField { coeffs: r.coeffs })
    }
}

impl From<SpectralField> for FieldRepr {
    fn from(f: SpectralField) -> Self {
        FieldRepr {
            n_modes: f.coeffs.len(),
            coeffs: f.coeffs,
        }
    }
}

impl SpectralField {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            coeffs: vec![0.0; n_modes],
        }
    }

    /// The basis vector `e_j`, 1-based. Panics if `j` is outside `1..=n_modes`.
    pub fn unit(n_modes: usize, j: usize) -> Self {
        assert!(j >= 1 && j <= n_modes, "mode {j} outside 1..={n_modes}");
        let mut f = Self::zeros(n_modes);
        f.coeffs[j - 1] = 1.0;
        f
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("field needs at least one mode"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite coefficient"));
        }
        Ok(Self { coeffs })
    }

    /// Builds a field from the leading coefficients, zero-padding up to `n_modes`.
    pub fn from_leading(n_modes: usize, leading: &[f64]) -> Result<Self> {
        if leading.len() > n_modes {
            return Err(Error::invalid(format!(
                "{} coefficients do not fit in {} modes",
                leading.len(),
                n_modes
            )));
        }
        let mut coeffs = vec![0.0; n_modes];
        coeffs[..leading.len()].copy_from_slice(leading);
        Self::from_coeffs(coeffs)
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn check_same_basis(&self, other: &Self) -> Result<()> {
        if self.n_modes() != other.n_modes() {
            return Err(Error::BasisMismatch {
                left: self.n_modes(),
                right: other.n_modes(),
            });
        }
        Ok(())
    }

    /// `⟨x, y⟩_{H^β} = Σ α_j^β x_j y_j`.
    pub fn inner(&self, other: &Self, beta: f64) -> Result<f64> {
        self.check_same_basis(other)?;
        Ok(self.dot(other, beta))
    }

    /// Unchecked weighted product for internal hot paths.
    #[inline]
    pub(crate) fn dot(&self, other: &Self, beta: f64) -> f64 {
        debug_assert_eq!(self.n_modes(), other.n_modes());
        if beta == 0.0 {
            return self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a * b)
                .sum();
        }
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(i, (a, b))| eigenvalue_pow(i + 1, beta) * a * b)
            .sum()
    }

    pub fn norm_sq(&self, beta: f64) -> f64 {
        self.dot(self, beta)
    }

    /// `|x|_{H^β}`.
    pub fn norm(&self, beta: f64) -> f64 {
        self.norm_sq(beta).sqrt()
    }

    /// `Δx`, i.e. coefficients `-α_j x_j`.
    pub fn laplacian(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| -eigenvalue(i + 1) * c)
            .collect();
        Self { coeffs }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.n_modes(), x.n_modes());
        for (s, xi) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += a * xi;
        }
    }

    /// Keeps only the first `n` modes (the rest are zeroed).
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut().skip(n) {
            *c = 0.0;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Largest coefficient-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Point value `x(ξ) = Σ x_j e_j(ξ)`.
    pub fn eval(&self, xi: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * std::f64::consts::SQRT_2 * ((i + 1) as f64 * PI * xi).sin())
            .sum()
    }
}

/// Checked `⟨x, y⟩_{H^β}`.
pub fn inner(x: &SpectralField, y: &SpectralField, beta: f64) -> Result<f64> {
    x.inner(y, beta)
}

pub fn sobolev_norm(x: &SpectralField, beta: f64) -> f64 {
    x.norm(beta)
}

/// Interpolation bound on the unit sphere: `|x|_{H^θ} ≤ |x|_{H^ρ}^{θ/ρ}`.
///
/// `tol` is the admissible deviation of `|x|_H` from one.
pub fn interpolation_check(x: &SpectralField, theta: f64, rho: f64, tol: f64) -> Result<bool> {
    Ok(interpolation_slack(x, theta, rho, tol)? >= -1e-12)
}

/// `|x|_{H^ρ}^{θ/ρ} - |x|_{H^θ}` relative to the right-hand side; nonnegative when the
/// interpolation bound holds.
pub fn interpolation_slack(x: &SpectralField, theta: f64, rho: f64, tol: f64) -> Result<f64> {
    if !(0.0 <= theta && theta < rho) {
        return Err(Error::invalid(format!(
            "need 0 <= theta < rho, got theta = {theta}, rho = {rho}"
        )));
    }
    let h = x.norm(0.0);
    if (h - 1.0).abs() > tol {
        return Err(Error::invalid(format!("|x|_H = {h} is not on the unit sphere")));
    }
    let lhs = x.norm(theta);
    let rhs = x.norm(rho).powf(theta / rho);
    Ok((rhs - lhs) / rhs.max(1.0))
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.n_modes(), rhs.n_modes(), "basis mismatch");
        SpectralField {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.n_modes(), rhs.n_modes(), "basis mismatch");
        SpectralField {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&SpectralField> for f64 {
    type Output = SpectralField;
    fn mul(self, rhs: &SpectralField) -> SpectralField {
        rhs.scaled(self)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// A point `z = (u, v)` of the phase space; on the tangent bundle when
/// `|u|_H = 1` and `⟨u, v⟩_H = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateZ {
    pub u: SpectralField,
    pub v: SpectralField,
}

impl StateZ {
    pub fn new(u: SpectralField, v: SpectralField) -> Result<Self> {
        u.check_same_basis(&v)?;
        Ok(Self { u, v })
    }

    pub fn n_modes(&self) -> usize {
        self.u.n_modes()
    }

    /// `(||u|_H - 1|, |⟨u, v⟩_H|)`.
    pub fn constraint_defects(&self) -> (f64, f64) {
        ((self.u.norm(0.0) - 1.0).abs(), self.u.dot(&self.v, 0.0).abs())
    }

    pub fn is_on_manifold(&self, tol: f64) -> bool {
        let (a, b) = self.constraint_defects();
        a <= tol && b <= tol
    }
}
