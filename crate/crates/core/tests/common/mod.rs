//! Test-side oracles, written against coefficient vectors only so they share
//! no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

/// SplitMix64 feeding a Box–Muller transform.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let (a, b) = (self.uniform(), self.uniform());
        (-2.0 * a.ln()).sqrt() * (2.0 * PI * b).cos()
    }

    /// Coefficients `N(0,1)/j^decay`, `j = 1..=n`.
    pub fn coeffs(&mut self, n: usize, decay: f64) -> Vec<f64> {
        (1..=n).map(|j| self.normal() / (j as f64).powf(decay)).collect()
    }

    pub fn unit_coeffs(&mut self, n: usize, decay: f64) -> Vec<f64> {
        normalize(&self.coeffs(n, decay))
    }
}

pub fn alpha(j: usize) -> f64 {
    (j as f64 * PI).powi(2)
}

pub fn dot(x: &[f64], y: &[f64], beta: f64) -> f64 {
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (a, b))| alpha(i + 1).powf(beta) * a * b)
        .sum()
}

pub fn nsq(x: &[f64], beta: f64) -> f64 {
    dot(x, x, beta)
}

pub fn normalize(x: &[f64]) -> Vec<f64> {
    let n = nsq(x, 0.0).sqrt();
    x.iter().map(|c| c / n).collect()
}

pub fn lin(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

pub fn padded(n: usize, leading: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[..leading.len()].copy_from_slice(leading);
    v
}

/// Rank-one tangential diffusion `σ(u) = g(|u|²_{H¹})(h - ⟨h,u⟩_H u)`, `g(t) = 1/(1+t)`.
pub fn sigma_rank_one(h: &[f64], u: &[f64]) -> Vec<f64> {
    let g = 1.0 / (1.0 + nsq(u, 1.0));
    let c = dot(h, u, 0.0);
    h.iter().zip(u).map(|(hh, uu)| g * (hh - c * uu)).collect()
}

/// `σ'(u)σ(u)` by central differences of [`sigma_rank_one`].
pub fn sigma_prime_sigma_fd(h: &[f64], u: &[f64], eps: f64) -> Vec<f64> {
    let w = sigma_rank_one(h, u);
    let plus = sigma_rank_one(h, &lin(1.0, u, eps, &w));
    let minus = sigma_rank_one(h, &lin(1.0, u, -eps, &w));
    lin(0.5 / eps, &plus, -0.5 / eps, &minus)
}

/// `σ'(u)σ(u)` by forward differences.
pub fn sigma_prime_sigma_forward(h: &[f64], u: &[f64], eps: f64) -> Vec<f64> {
    let w = sigma_rank_one(h, u);
    let plus = sigma_rank_one(h, &lin(1.0, u, eps, &w));
    lin(1.0 / eps, &plus, -1.0 / eps, &w)
}

/// Closed-form solution of `u' = v, μv' = -αu - γv` via the complex
/// eigenvalues of the companion matrix.
pub fn oscillator(alpha: f64, mu: f64, gamma: f64, t: f64, u0: f64, v0: f64) -> (f64, f64) {
    use num_complex::Complex64 as C;
    let disc = C::new(gamma * gamma - 4.0 * alpha * mu, 0.0).sqrt();
    let l1 = (C::new(-gamma, 0.0) + disc) / (2.0 * mu);
    let l2 = (C::new(-gamma, 0.0) - disc) / (2.0 * mu);
    let a1 = (C::new(v0, 0.0) - l2 * u0) / (l1 - l2);
    let a2 = C::new(u0, 0.0) - a1;
    let (x1, x2) = ((l1 * t).exp(), (l2 * t).exp());
    ((a1 * x1 + a2 * x2).re, (a1 * l1 * x1 + a2 * l2 * x2).re)
}

/// Least-squares slope of `log y` against `log x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
