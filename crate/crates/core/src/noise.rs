//! Q-Wiener increments on the reproducing kernel space `K`.
//!
//! Increments are the coordinates `Δβ_k` of `W` along an orthonormal basis
//! `ẽ_k` of `K`; they are independent `N(0, dt)` draws. The covariance
//! weights `q_k` (with `ẽ_k = q_k e_k`) live on the model and are applied by
//! the diffusion, see [`crate::diffusion::DiffusionModel`].
//!
//! Every draw is addressed by `(seed, replica, step, mode)` through a ChaCha
//! keystream, so any sub-table can be regenerated independently and two runs
//! sharing `(seed, replica)` consume bit-identical noise.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `K = ℝ`: a single Brownian motion.
    Scalar,
    /// Trace-class noise diagonal in the sine basis.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    kind: NoiseKind,
    q: Vec<f64>,
    seed: u64,
}

impl NoiseModel {
    pub fn scalar(seed: u64) -> Self {
        Self {
            kind: NoiseKind::Scalar,
            q: vec![1.0],
            seed,
        }
    }

    pub fn diagonal(q: Vec<f64>, seed: u64) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::invalid("diagonal noise needs at least one mode"));
        }
        if q.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("covariance weights q_k must be positive"));
        }
        Ok(Self {
            kind: NoiseKind::Diagonal,
            q,
            seed,
        })
    }

    /// Diagonal noise with `q_k ≡ 1` on `n` modes.
    pub fn diagonal_unit(n: usize, seed: u64) -> Result<Self> {
        Self::diagonal(vec![1.0; n], seed)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn n_noise_modes(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `Σ q_k²` at the current truncation.
    pub fn trace(&self) -> f64 {
        self.q.iter().map(|w| w * w).sum()
    }

    /// Heuristic for a covariance whose truncated trace has not settled: the
    /// upper half of the modes carries at least 10% of `Σ q_k²`.
    pub fn trace_looks_divergent(&self) -> bool {
        if self.q.len() < 4 {
            return false;
        }
        let half = self.q.len() / 2;
        let tail: f64 = self.q[half..].iter().map(|w| w * w).sum();
        tail >= 0.1 * self.trace()
    }
}

/// Row-major table of Brownian increments, `n_steps × n_noise_modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementTable {
    dt: f64,
    n_steps: usize,
    n_noise_modes: usize,
    data: Vec<f64>,
}

impl IncrementTable {
    pub fn from_raw(dt: f64, n_steps: usize, n_noise_modes: usize, data: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid("increment time step must be positive"));
        }
        if data.len() != n_steps * n_noise_modes {
            return Err(Error::invalid("increment table has the wrong size"));
        }
        Ok(Self {
            dt,
            n_steps,
            n_noise_modes,
            data,
        })
    }

    /// A table of zero increments, i.e. the noise switched off.
    pub fn zeros(dt: f64, n_steps: usize, n_noise_modes: usize) -> Result<Self> {
        Self::from_raw(dt, n_steps, n_noise_modes, vec![0.0; n_steps * n_noise_modes])
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_noise_modes(&self) -> usize {
        self.n_noise_modes
    }

    pub fn step(&self, i: usize) -> &[f64] {
        let k = self.n_noise_modes;
        &self.data[i * k..(i + 1) * k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sums blocks of `factor` consecutive steps: the same Brownian path seen
    /// on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(Error::invalid(format!(
                "cannot coarsen {} steps by a factor of {factor}",
                self.n_steps
            )));
        }
        let k = self.n_noise_modes;
        let n = self.n_steps / factor;
        let mut data = vec![0.0; n * k];
        for i in 0..self.n_steps {
            let row = &mut data[(i / factor) * k..(i / factor + 1) * k];
            for (acc, x) in row.iter_mut().zip(self.step(i)) {
                *acc += x;
            }
        }
        Self::from_raw(self.dt * factor as f64, n, k, data)
    }

    /// FNV-1a digest over the raw bit patterns; equal digests for bit-identical tables.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.data {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// Counter-addressed standard normal stream for one `(seed, replica)` pair.
#[derive(Clone)]
pub struct NormalStream {
    rng: ChaCha12Rng,
}

impl NormalStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(replica);
        Self { rng }
    }

    /// The standard normal at counter `index`. Each index owns four 32-bit
    /// words of keystream, consumed by one Box–Muller transform.
    pub fn normal_at(&mut self, index: u64) -> f64 {
        self.rng.set_word_pos(index as u128 * 4);
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // (0, 1] and [0, 1) with 53-bit resolution
        let u1 = ((a >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Brownian increments for `n_steps` steps of size `dt`, keyed by
/// `(seed, replica, step, mode)`.
pub fn wiener_increments(
    nm: &NoiseModel,
    dt: f64,
    n_steps: usize,
    replica: u64,
) -> Result<IncrementTable> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    let k = nm.n_noise_modes();
    let sd = dt.sqrt();
    let mut stream = NormalStream::new(nm.seed, replica);
    let mut data = Vec::with_capacity(n_steps * k);
    for step in 0..n_steps {
        for mode in 0..k {
            let idx = (step * k + mode) as u64;
            data.push(sd * stream.normal_at(idx));
        }
    }
    IncrementTable::from_raw(dt, n_steps, k, data)
}
