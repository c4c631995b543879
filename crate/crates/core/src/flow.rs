//! Exact per-mode linear propagators.
//!
//! For the wave system each Dirichlet mode obeys the damped oscillator
//! `u' = v`, `μ v' = -α u - γ v + f` and for the parabolic limit
//! `γ u' = -α u + f`. With `f` frozen over a step both are solved in closed
//! form, which gives the exponential-Euler update used by the integrators.

/// Propagator of `u' = v, μ v' = -α u - γ v + f` over one step, `f` constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorFlow {
    /// `exp(A dt)` in row-major order.
    pub e: [[f64; 2]; 2],
    /// Response `(u, v)` to a unit force `f = μ`, i.e. `∫₀^dt exp(A s) ds · (0, 1)`.
    pub forced: [f64; 2],
}

impl OscillatorFlow {
    pub fn new(alpha: f64, mu: f64, gamma: f64, dt: f64) -> Self {
        let a = alpha / mu;
        let c = gamma / mu;
        let half_c = 0.5 * c;
        let disc = half_c * half_c - a;
        let t = dt;
        // ep = e^{λ̄t} C(t), es = e^{λ̄t} S(t), where
        // exp(At) = e^{λ̄t} [C I + S (A - λ̄ I)], λ̄ = -c/2.
        let (ep, es) = if disc > 0.0 && disc.sqrt() * t > 1.0 {
            // strongly overdamped: combine the two real exponentials directly
            let d = disc.sqrt();
            let slow = -a / (half_c + d); // λ̄ + d without cancellation
            let fast = -half_c - d;
            let (x1, x2) = ((slow * t).exp(), (fast * t).exp());
            (0.5 * (x1 + x2), 0.5 * (x1 - x2) / d)
        } else {
            let q = disc * t * t;
            let decay = (-half_c * t).exp();
            let (cc, ss) = if q.abs() < 1e-8 {
                (1.0 + 0.5 * q + q * q / 24.0, t * (1.0 + q / 6.0 + q * q / 120.0))
            } else if q > 0.0 {
                let r = q.sqrt();
                (r.cosh(), t * r.sinh() / r)
            } else {
                let r = (-q).sqrt();
                (r.cos(), t * r.sin() / r)
            };
            (decay * cc, decay * ss)
        };
        let e11 = ep + half_c * es;
        let e12 = es;
        let e21 = -a * es;
        let e22 = ep - half_c * es;
        // A⁻¹ (exp(At) - I) (0, 1)
        let i12 = (1.0 - e22 - c * e12) / a;
        let i22 = e12;
        Self {
            e: [[e11, e12], [e21, e22]],
            forced: [i12, i22],
        }
    }

    /// Advances `(u, v)` with the constant force `f` (already divided by `μ`).
    #[inline]
    pub fn apply(&self, u: f64, v: f64, f_over_mu: f64) -> (f64, f64) {
        let [[a, b], [c, d]] = self.e;
        (
            a * u + b * v + self.forced[0] * f_over_mu,
            c * u + d * v + self.forced[1] * f_over_mu,
        )
    }
}

/// Propagator of `γ u' = -α u + f` over one step, `f` constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatFlow {
    /// `exp(-α dt / γ)`.
    pub decay: f64,
    /// `(1 - exp(-α dt/γ)) / α`, the response to a unit force.
    pub forced: f64,
}

impl HeatFlow {
    pub fn new(alpha: f64, gamma: f64, dt: f64) -> Self {
        let x = -alpha * dt / gamma;
        Self {
            decay: x.exp(),
            forced: -x.exp_m1() / alpha,
        }
    }

    #[inline]
    pub fn apply(&self, u: f64, f: f64) -> f64 {
        self.decay * u + self.forced * f
    }
}
