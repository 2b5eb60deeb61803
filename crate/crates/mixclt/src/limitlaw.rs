//! Exact samplers and moment formulas for the limit laws used as Monte
//! Carlo oracles.
//!
//! The clock of every limit here is a constant times the Brownian local time
//! at zero, sampled through the identity `l_t(0) ~ sqrt(t) |Z|`; the mixture
//! value is a centred Gaussian run at that clock. The inverse of the local
//! time is the one-sided stable subordinator of index 1/2, sampled as
//! `t^2 / Z^2`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powervar::gaussian_abs_moment;
use crate::rng::{lane, stream_rng};

/// Law of a Gaussian mixture `W(c * l_t(0))`: a Brownian value read at an
/// independent local-time clock scaled by `scale_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureLawSpec {
    pub scale_c: f64,
    pub horizon_t: f64,
}

impl MixtureLawSpec {
    pub fn new(scale_c: f64, horizon_t: f64) -> Result<Self> {
        let spec = Self { scale_c, horizon_t };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale_c >= 0.0 && self.scale_c.is_finite()) {
            return Err(Error::InvalidParameter("scale must be >= 0".into()));
        }
        if !(self.horizon_t > 0.0 && self.horizon_t.is_finite()) {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// One draw of the Brownian local time at zero up to time `t`:
/// `sqrt(t) |Z|`, exact in law.
pub fn sample_local_time(t: f64, rng: &mut impl Rng) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time {t} must be positive")));
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(t.sqrt() * z.abs())
}

/// One draw of the inverse local time at level `t`: `t^2 / Z^2`, the
/// one-sided stable law of index 1/2 with Laplace transform
/// `exp(-t sqrt(2 lambda))`.
///
/// The measure-zero event `Z = 0` in floating point is resampled.
pub fn sample_inverse_local_time(t: f64, rng: &mut impl Rng) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("level {t} must be positive")));
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z != 0.0 {
            return Ok(t * t / (z * z));
        }
    }
}

/// Seeded sampler for the mixture law `W(c * l_t(0))`, with independent
/// streams for the clock and the Gaussian read-out.
pub struct MixtureSampler {
    spec: MixtureLawSpec,
    clock_rng: rand_chacha::ChaCha8Rng,
    noise_rng: rand_chacha::ChaCha8Rng,
}

impl MixtureSampler {
    pub fn new(spec: MixtureLawSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            clock_rng: stream_rng(seed, lane::SIGMA),
            noise_rng: stream_rng(seed, lane::MAIN),
        })
    }

    pub fn draw(&mut self) -> f64 {
        let l = sample_local_time(self.spec.horizon_t, &mut self.clock_rng)
            .expect("validated horizon");
        let z: f64 = self.noise_rng.sample(StandardNormal);
        (self.spec.scale_c * l).sqrt() * z
    }

    pub fn draw_many(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw()).collect()
    }
}

/// One draw from the mixture law for the given seed.
pub fn sample_mixture(spec: MixtureLawSpec, seed: u64) -> Result<f64> {
    Ok(MixtureSampler::new(spec, seed)?.draw())
}

/// Moment of order `k` of the mixture law:
/// `mu_k c^{k/2} t^{k/4} mu_{k/2}` for even `k`, exact zero for odd `k`
/// (the law is symmetric).
pub fn mixture_moments(spec: &MixtureLawSpec, k: u32) -> Result<f64> {
    spec.validate()?;
    if k % 2 == 1 {
        return Ok(0.0);
    }
    if k == 0 {
        return Ok(1.0);
    }
    let mu_k = gaussian_abs_moment(k as f64)?;
    let mu_half = gaussian_abs_moment(k as f64 / 2.0)?;
    Ok(mu_k * spec.scale_c.powf(k as f64 / 2.0) * spec.horizon_t.powf(k as f64 / 4.0) * mu_half)
}
