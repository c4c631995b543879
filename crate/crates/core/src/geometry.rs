//! The unit sphere `M ⊂ L²(0,1)`, its tangent projection and the energy-type
//! functionals monitored along trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, StateZ};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldTolerances {
    pub tol_constraint: f64,
    pub tol_tangency: f64,
}

impl Default for ManifoldTolerances {
    fn default() -> Self {
        Self {
            tol_constraint: 1e-10,
            tol_tangency: 1e-10,
        }
    }
}

impl ManifoldTolerances {
    pub fn new(tol_constraint: f64, tol_tangency: f64) -> Result<Self> {
        if !(tol_constraint > 0.0 && tol_tangency > 0.0) {
            return Err(Error::invalid("manifold tolerances must be strictly positive"));
        }
        Ok(Self {
            tol_constraint,
            tol_tangency,
        })
    }
}

pub(crate) fn require_on_sphere(u: &SpectralField, tol: f64, what: &str) -> Result<()> {
    let n = u.norm(0.0);
    if (n - 1.0).abs() > tol {
        return Err(Error::invalid(format!(
            "{what}: |u|_H = {n} is off the unit sphere"
        )));
    }
    Ok(())
}

/// `Π_a x = x - ⟨x, a⟩_H a`, the orthogonal projection onto `T_a M`.
pub fn tangent_project(a: &SpectralField, x: &SpectralField) -> Result<SpectralField> {
    tangent_project_tol(a, x, ManifoldTolerances::default().tol_constraint)
}

pub fn tangent_project_tol(a: &SpectralField, x: &SpectralField, tol: f64) -> Result<SpectralField> {
    a.check_same_basis(x)?;
    require_on_sphere(a, tol, "tangent_project")?;
    Ok(project_unchecked(a, x))
}

#[inline]
pub(crate) fn project_unchecked(a: &SpectralField, x: &SpectralField) -> SpectralField {
    let mut out = x.clone();
    out.axpy(-x.dot(a, 0.0), a);
    out
}

/// Pulls a state back onto the tangent bundle: `u ← u/|u|_H`, `v ← Π_u v`.
pub fn renormalize_state(z: &StateZ) -> Result<StateZ> {
    let n = z.u.norm(0.0);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateState(format!(
            "cannot renormalize u with |u|_H = {n}"
        )));
    }
    let u = z.u.scaled(1.0 / n);
    let v = project_unchecked(&u, &z.v);
    Ok(StateZ { u, v })
}

/// `Ψ(u, v) = ½(|u|²_{H¹} + |v|²_H)`.
pub fn energy_psi(z: &StateZ) -> f64 {
    0.5 * (z.u.norm_sq(1.0) + z.v.norm_sq(0.0))
}

/// `Φ(u) = |u|²_{H²} - ½|u|⁴_{H¹}` for `u` on the sphere.
pub fn phi_functional(u: &SpectralField) -> Result<f64> {
    require_on_sphere(u, ManifoldTolerances::default().tol_constraint, "phi_functional")?;
    Ok(phi_unchecked(u))
}

pub(crate) fn phi_unchecked(u: &SpectralField) -> f64 {
    let h1 = u.norm_sq(1.0);
    u.norm_sq(2.0) - 0.5 * h1 * h1
}

/// `|(|u|²_{H²} - |u|⁴_{H¹}) - |Δu + |u|²_{H¹} u|²_H|`, which vanishes on the sphere.
pub fn crucial_identity_residual(u: &SpectralField) -> Result<f64> {
    require_on_sphere(
        u,
        ManifoldTolerances::default().tol_constraint,
        "crucial_identity_residual",
    )?;
    let h1 = u.norm_sq(1.0);
    let lhs = u.norm_sq(2.0) - h1 * h1;
    let mut w = u.laplacian();
    w.axpy(h1, u);
    Ok((lhs - w.norm_sq(0.0)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn e(j: usize) -> SpectralField {
        SpectralField::unit(4, j)
    }

    fn on_sphere(raw: Vec<f64>) -> SpectralField {
        let f = SpectralField::from_coeffs(raw).unwrap();
        let n = f.norm(0.0);
        f.scaled(1.0 / n)
    }

    #[test]
    fn projection_examples() {
        assert_eq!(tangent_project(&e(1), &e(1)).unwrap(), SpectralField::zeros(4));
        assert_eq!(tangent_project(&e(1), &e(2)).unwrap(), e(2));
        assert_eq!(tangent_project(&e(1), &(&e(1) + &e(2))).unwrap(), e(2));
        assert!(tangent_project(&e(1).scaled(2.0), &e(2)).is_err());
    }

    #[test]
    fn renormalize_examples() {
        let z = StateZ::new(e(1).scaled(2.0), e(2)).unwrap();
        assert_eq!(renormalize_state(&z).unwrap(), StateZ::new(e(1), e(2)).unwrap());
        let z = StateZ::new(e(1), &e(1) + &e(2)).unwrap();
        assert_eq!(renormalize_state(&z).unwrap(), StateZ::new(e(1), e(2)).unwrap());
        let z = StateZ::new(SpectralField::zeros(4), e(1)).unwrap();
        assert!(matches!(renormalize_state(&z), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn psi_examples() {
        let z0 = SpectralField::zeros(4);
        let pi2 = PI * PI;
        assert!((energy_psi(&StateZ::new(e(1), z0.clone()).unwrap()) - pi2 / 2.0).abs() < 1e-14);
        assert_eq!(energy_psi(&StateZ::new(z0, e(1)).unwrap()), 0.5);
        assert!((energy_psi(&StateZ::new(e(1), e(2)).unwrap()) - (pi2 + 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn phi_examples() {
        let pi4 = PI.powi(4);
        assert!((phi_functional(&e(1)).unwrap() - pi4 / 2.0).abs() < 1e-11);
        assert!((phi_functional(&e(1)).unwrap() - 48.705).abs() < 1e-3);
        let s = 1.0 / 2f64.sqrt();
        let u = SpectralField::from_leading(4, &[s, s]).unwrap();
        // |u|²_{H²} = 17π⁴/2, |u|⁴_{H¹} = 25π⁴/4
        let expected = 43.0 * pi4 / 8.0;
        assert!((phi_functional(&u).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 523.59).abs() < 2e-2);
        assert!(phi_functional(&e(1).scaled(2.0)).is_err());
    }

    #[test]
    fn crucial_identity_examples() {
        assert!(crucial_identity_residual(&e(1)).unwrap() < 1e-10);
        let s = 1.0 / 2f64.sqrt();
        for u in [
            SpectralField::from_leading(4, &[s, s]).unwrap(),
            SpectralField::from_leading(4, &[0.6, 0.0, 0.8]).unwrap(),
        ] {
            let scale = (1.0 + u.norm_sq(2.0)).powi(2);
            assert!(crucial_identity_residual(&u).unwrap() <= 1e-10 * scale);
        }
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(ManifoldTolerances::new(0.0, 1e-3).is_err());
        assert!(ManifoldTolerances::new(1e-8, 1e-8).is_ok());
    }

    proptest! {
        #[test]
        fn projection_properties(
            a in prop::collection::vec(-1.0f64..1.0, 8),
            x in prop::collection::vec(-2.0f64..2.0, 8),
            y in prop::collection::vec(-2.0f64..2.0, 8),
        ) {
            prop_assume!(a.iter().map(|c| c * c).sum::<f64>() > 1e-3);
            let a = on_sphere(a);
            let x = SpectralField::from_coeffs(x).unwrap();
            let y = SpectralField::from_coeffs(y).unwrap();
            let px = tangent_project(&a, &x).unwrap();
            let ppx = tangent_project(&a, &px).unwrap();
            prop_assert!(px.max_abs_diff(&ppx) <= 1e-12);
            prop_assert!(px.norm(0.0) <= x.norm(0.0) + 1e-12);
            prop_assert!(px.dot(&a, 0.0).abs() <= 1e-12 * (1.0 + x.norm(0.0)));
            let py = tangent_project(&a, &y).unwrap();
            prop_assert!((px.dot(&y, 0.0) - x.dot(&py, 0.0)).abs() <= 1e-12);
        }

        #[test]
        fn renormalized_state_is_on_manifold(
            u in prop::collection::vec(-1.0f64..1.0, 6),
            v in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            prop_assume!(u.iter().map(|c| c * c).sum::<f64>() > 1e-3);
            let z = StateZ::new(
                SpectralField::from_coeffs(u).unwrap(),
                SpectralField::from_coeffs(v).unwrap(),
            ).unwrap();
            let r = renormalize_state(&z).unwrap();
            prop_assert!(r.is_on_manifold(1e-14));
        }
    }
}
