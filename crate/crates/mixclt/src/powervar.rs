//! Absolute Gaussian moments, realized and compensator power variation, and
//! the quadratic / higher-power volatility estimation schemes.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::paths::SamplePath;

/// Volatility family driving the time-changed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SigmaFamily {
    /// Flat volatility `sigma0`.
    Constant,
    /// User-supplied values at the left endpoints of the refined grid.
    DeterministicGrid { values: Vec<f64> },
    /// `log sigma` follows a mean-reverting Gaussian recursion around
    /// `log sigma0` with reversion `kappa` and volatility-of-volatility `nu`.
    LogOu { kappa: f64, nu: f64 },
}

/// Specification of the volatility model: the sigma process family, the
/// trend `mu`, the business-time loading `beta`, and the grid refinement
/// used when integrating spot variance over observation intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolModelSpec {
    #[serde(flatten)]
    pub sigma: SigmaFamily,
    pub sigma0: f64,
    #[serde(default)]
    pub mu_drift: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_refine")]
    pub refine: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_refine() -> usize {
    1
}

fn default_horizon() -> f64 {
    1.0
}

impl VolModelSpec {
    pub fn constant(sigma0: f64) -> Self {
        Self {
            sigma: SigmaFamily::Constant,
            sigma0,
            mu_drift: 0.0,
            beta: 0.0,
            refine: 1,
            horizon: 1.0,
        }
    }

    pub fn log_ou(sigma0: f64, kappa: f64, nu: f64) -> Self {
        Self {
            sigma: SigmaFamily::LogOu { kappa, nu },
            sigma0,
            mu_drift: 0.0,
            beta: 0.0,
            refine: 1,
            horizon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::InvalidParameter("sigma0 must be positive".into()));
        }
        if self.refine < 1 {
            return Err(Error::InvalidParameter("refine must be >= 1".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if !self.mu_drift.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter("beta must be >= 0".into()));
        }
        match &self.sigma {
            SigmaFamily::Constant => {}
            SigmaFamily::DeterministicGrid { values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidParameter(
                        "deterministic volatility grid must be nonnegative and finite".into(),
                    ));
                }
            }
            SigmaFamily::LogOu { kappa, nu } => {
                if !(*kappa >= 0.0 && kappa.is_finite() && *nu >= 0.0 && nu.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "log-OU parameters must be nonnegative".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Absolute moment `E|Z|^p` of a standard Gaussian:
/// `2^{p/2} Gamma((p+1)/2) / Gamma(1/2)`.
///
/// Integer orders take the exact product form (odd double factorial for even
/// `p`, `sqrt(2/pi)` times the even product for odd `p`).
pub fn gaussian_abs_moment(p: f64) -> Result<f64> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("moment order {p} must be >= 0")));
    }
    let rounded = p.round();
    if (p - rounded).abs() < 1e-12 {
        let k = rounded as u32;
        if k.is_multiple_of(2) {
            return Ok((1..=k / 2).map(|j| (2 * j - 1) as f64).product());
        }
        let even_product: f64 = (1..=(k - 1) / 2).map(|j| (2 * j) as f64).product();
        return Ok((2.0 / std::f64::consts::PI).sqrt() * even_product);
    }
    Ok(2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt())
}

fn check_power(p: f64) -> Result<()> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("power {p} must be >= 2")));
    }
    Ok(())
}

/// Number of whole `delta`-blocks the path grid contains, rejecting `delta`
/// that is not an integer multiple of the path step.
fn subsample_stride(path_delta: f64, delta: f64) -> Result<usize> {
    let ratio = delta / path_delta;
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-9 * stride {
        return Err(Error::GridMismatch(format!(
            "block length {delta} is not a multiple of the path step {path_delta}"
        )));
    }
    Ok(stride as usize)
}

/// Realized power variation
/// `V_{p,delta}(t) = delta^{1-p/2} sum_{k <= floor(t/delta)} |increment_k|^p`
/// on the subsampled grid `t_k = k delta`.
pub fn realized_power_variation(m: &SamplePath, p: f64, delta: f64) -> Result<Vec<f64>> {
    check_power(p)?;
    let stride = subsample_stride(m.delta(), delta)?;
    let blocks = (m.len() - 1) / stride;
    let scale = delta.powf(1.0 - p / 2.0);
    let vals = m.values();
    let mut out = Vec::with_capacity(blocks + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=blocks {
        let inc = vals[k * stride] - vals[(k - 1) * stride];
        acc += inc.abs().powf(p);
        out.push(scale * acc);
    }
    Ok(out)
}

/// Compensator power variation
/// `U_{p,delta}(t) = delta^{1-p/2} sum_{k <= floor(t/delta)} (increment_k)^{p/2}`
/// from nonnegative clock increments already at step `delta`.
///
/// For `p = 2` this returns the clock itself on the grid.
pub fn compensator_power_variation(a_increments: &[f64], p: f64, delta: f64) -> Result<Vec<f64>> {
    check_power(p)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter("block length must be positive".into()));
    }
    let scale = delta.powf(1.0 - p / 2.0);
    let mut out = Vec::with_capacity(a_increments.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for (k, &a) in a_increments.iter().enumerate() {
        if a.is_nan() || a < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "clock increment {a} at block {k} is negative"
            )));
        }
        acc += a.powf(p / 2.0);
        out.push(scale * acc);
    }
    Ok(out)
}

/// Realized and compensator power variation on a common `t_k = k delta` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerVariationSeries {
    pub p: f64,
    pub delta: f64,
    pub t_grid: Vec<f64>,
    pub v_pd: Vec<f64>,
    pub u_pd: Vec<f64>,
}

/// Build the paired series from a path at step `1/n`-style resolution and the
/// matching per-step clock increments, aggregating the clock over each
/// `delta`-block.
pub fn power_variation_series(
    m: &SamplePath,
    a_increments: &[f64],
    p: f64,
    delta: f64,
) -> Result<PowerVariationSeries> {
    let stride = subsample_stride(m.delta(), delta)?;
    if a_increments.len() < m.len() - 1 {
        return Err(Error::GridMismatch(format!(
            "expected at least {} clock increments, found {}",
            m.len() - 1,
            a_increments.len()
        )));
    }
    let v_pd = realized_power_variation(m, p, delta)?;
    let blocks = (m.len() - 1) / stride;
    let block_a: Vec<f64> = (0..blocks)
        .map(|k| a_increments[k * stride..(k + 1) * stride].iter().sum())
        .collect();
    let u_pd = compensator_power_variation(&block_a, p, delta)?;
    Ok(PowerVariationSeries {
        p,
        delta,
        t_grid: (0..=blocks).map(|k| k as f64 * delta).collect(),
        v_pd,
        u_pd,
    })
}

/// Normalized estimation-error series of a volatility scheme.
///
/// `x_n` is the scaled difference between realized powers of the increments
/// and their compensator prediction, `bracket` the realized plug-in for its
/// predictable quadratic variation, and `v_n` the matching realized power
/// variation. `y_n` is the same statistic recomputed from drift-perturbed
/// returns when drift parameters are supplied (quadratic scheme only).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSeries {
    pub t_grid: Vec<f64>,
    pub x_n: Vec<f64>,
    pub bracket: Vec<f64>,
    pub v_n: Vec<f64>,
    pub y_n: Option<Vec<f64>>,
}

/// Compute the scheme series at observation step `1/n`.
///
/// `p = 2` selects the quadratic scheme
/// (`x_n(t) = n^{1/2} sum [(dM)^2 - dA]`, plug-in bracket
/// `2 n sum (dA)^2`, `v_n(t) = n sum (dM)^4`); `p >= 4` selects the
/// higher-power scheme
/// (`x_n(t) = n^{(p-2)/4} sum [|dM|^{p/2} - mu_{p/2} (dA)^{p/4}]`, bracket
/// `(mu_p - mu_{p/2}^2) n^{p/2-1} sum (dA)^{p/2}`,
/// `v_n(t) = n^{p/2-1} sum |dM|^p`). Powers strictly between 2 and 4 have no
/// scheme and are rejected.
pub fn scheme_series(
    m: &SamplePath,
    a_increments: &[f64],
    n: usize,
    p: f64,
    drift: Option<(f64, f64)>,
) -> Result<SchemeSeries> {
    check_power(p)?;
    if p > 2.0 && p < 4.0 {
        return Err(Error::InvalidParameter(format!(
            "power {p} must be 2 (quadratic scheme) or >= 4 (higher-power scheme)"
        )));
    }
    if n == 0 || (m.delta() * n as f64 - 1.0).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!(
            "path step {} is not 1/{n}",
            m.delta()
        )));
    }
    let steps = m.len() - 1;
    if a_increments.len() < steps {
        return Err(Error::GridMismatch(format!(
            "expected at least {steps} clock increments, found {}",
            a_increments.len()
        )));
    }
    let nf = n as f64;
    let vals = m.values();
    let quadratic = p == 2.0;
    let (scale_x, scale_bracket, scale_v, mu_half, bracket_coeff) = if quadratic {
        (nf.sqrt(), 2.0 * nf, nf, 1.0, 1.0)
    } else {
        let mu_p = gaussian_abs_moment(p)?;
        let mu_half = gaussian_abs_moment(p / 2.0)?;
        (
            nf.powf((p - 2.0) / 4.0),
            nf.powf(p / 2.0 - 1.0),
            nf.powf(p / 2.0 - 1.0),
            mu_half,
            mu_p - mu_half * mu_half,
        )
    };

    let len = steps + 1;
    let mut out = SchemeSeries {
        t_grid: (0..len).map(|j| j as f64 / nf).collect(),
        x_n: Vec::with_capacity(len),
        bracket: Vec::with_capacity(len),
        v_n: Vec::with_capacity(len),
        y_n: (quadratic && drift.is_some()).then(|| Vec::with_capacity(len)),
    };
    let (mut sx, mut sb, mut sv, mut sy) = (0.0, 0.0, 0.0, 0.0);
    out.x_n.push(0.0);
    out.bracket.push(0.0);
    out.v_n.push(0.0);
    if let Some(y) = out.y_n.as_mut() {
        y.push(0.0);
    }
    for j in 0..steps {
        let dm = vals[j + 1] - vals[j];
        let da = a_increments[j];
        if quadratic {
            sx += dm * dm - da;
            sb += da * da;
            sv += dm.powi(4);
            if let Some((mu, beta)) = drift {
                let dr = dm + mu / nf + beta * da;
                sy += dr * dr - da;
            }
        } else {
            sx += dm.abs().powf(p / 2.0) - mu_half * da.powf(p / 4.0);
            sb += da.powf(p / 2.0);
            sv += dm.abs().powf(p);
        }
        out.x_n.push(scale_x * sx);
        out.bracket.push(bracket_coeff * scale_bracket * sb);
        out.v_n.push(scale_v * sv);
        if let Some(y) = out.y_n.as_mut() {
            y.push(scale_x * sy);
        }
    }
    Ok(out)
}

/// The two drift-perturbation sums that must vanish for the scheme limit to
/// survive adding `N(t) = mu t + beta A(t)` to the martingale:
/// `s1 = n^{1/2} sum (dN)^2` and `s2 = n sum (dN)^2 dA`.
pub fn drift_perturbation_check(
    a_increments: &[f64],
    n: usize,
    mu: f64,
    beta: f64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("step count must be >= 1".into()));
    }
    let nf = n as f64;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &da in a_increments {
        let dn = mu / nf + beta * da;
        s1 += dn * dn;
        s2 += dn * dn * da;
    }
    Ok((nf.sqrt() * s1, nf * s2))
}
