//! AWGN channel arithmetic: Eb/N0-to-noise-variance conversion, noise and
//! jamming generation, perturbation injection, PSR power accounting, and
//! cyclic time shifts.
//!
//! Signals are length-`2n` real vectors holding `n` complex channel uses as
//! adjacent (real, imaginary) pairs. The complex noise variance `sigma2`
//! splits evenly across the two real components of each channel use.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Channel operating point: Eb/N0, code parameters, derived noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub ebno_db: f64,
    /// Bits per message.
    pub k: usize,
    /// Channel uses per message.
    pub n: usize,
    /// Noise variance per complex dimension.
    pub sigma2: f64,
}

impl ChannelConfig {
    pub fn new(ebno_db: f64, k: usize, n: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::Argument("k and n must be at least 1".into()));
        }
        if !ebno_db.is_finite() {
            return Err(Error::Argument("Eb/N0 must be finite".into()));
        }
        Ok(ChannelConfig {
            ebno_db,
            k,
            n,
            sigma2: noise_variance(ebno_db, k, n),
        })
    }

    /// Signal dimension in real components.
    pub fn signal_len(&self) -> usize {
        2 * self.n
    }

    /// Deterministic received signal power for power-normalized signals:
    /// 2n components at mean square 0.5.
    pub fn signal_power(&self) -> f64 {
        self.n as f64
    }
}

/// Noise variance per complex dimension: `sigma2 = 1 / (2 (k/n) 10^(ebno_db/10))`
/// with the energy per bit normalized to 1.
pub fn noise_variance(ebno_db: f64, k: usize, n: usize) -> f64 {
    let rate = k as f64 / n as f64;
    1.0 / (2.0 * rate * 10f64.powf(ebno_db / 10.0))
}

/// AWGN realization: `len` i.i.d. Gaussians of variance `sigma2 / 2` each
/// (the complex variance split across real and imaginary parts).
pub fn awgn<R: Rng + ?Sized>(len: usize, sigma2: f64, rng: &mut R) -> Vec<f64> {
    let std = (sigma2 / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * std
        })
        .collect()
}

/// Received signal `y = x + p + n`.
pub fn apply_channel(x: &[f64], p: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
    if x.len() != p.len() || x.len() != noise.len() {
        return Err(Error::Argument(format!(
            "length mismatch: signal {}, perturbation {}, noise {}",
            x.len(),
            p.len(),
            noise.len()
        )));
    }
    Ok(x.iter()
        .zip(p)
        .zip(noise)
        .map(|((a, b), c)| a + b + c)
        .collect())
}

/// Perturbation power for a target PSR: `signal_power * 10^(psr_db/10)`.
pub fn perturbation_power(psr_db: f64, signal_power: f64) -> f64 {
    signal_power * 10f64.powf(psr_db / 10.0)
}

/// Cyclically delays the signal by `r` complex channel uses. Adjacent real
/// pairs move together; the multiset of complex samples (and hence the norm)
/// is preserved.
pub fn cyclic_shift(p: &[f64], r: usize) -> Result<Vec<f64>> {
    if p.len() % 2 != 0 {
        return Err(Error::Argument(format!(
            "signal length {} is not a whole number of complex samples",
            p.len()
        )));
    }
    let n = p.len() / 2;
    if r >= n {
        return Err(Error::Argument(format!(
            "shift {r} out of range for {n} complex samples"
        )));
    }
    let mut out = vec![0.0; p.len()];
    for i in 0..n {
        let src = (i + n - r) % n;
        out[2 * i] = p[2 * src];
        out[2 * i + 1] = p[2 * src + 1];
    }
    Ok(out)
}

/// Gaussian jamming vector scaled so `E[||j||^2] = p_power`
/// (variance `p_power / len` per real component). Message- and
/// model-independent by construction.
pub fn gaussian_jamming<R: Rng + ?Sized>(len: usize, p_power: f64, rng: &mut R) -> Vec<f64> {
    let std = (p_power / len as f64).sqrt();
    (0..len)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * std
        })
        .collect()
}
