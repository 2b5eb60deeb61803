//! Discrete-process simulators and their rescaled martingale statistics.
//!
//! Covers the symmetric simple random walk with occupation-time statistics,
//! the comb lattice walk, discrete stochastic integrals driven by iid noise,
//! the time-changed volatility model, and the clock-change diagnostic. All
//! simulators are pure functions of `(parameters, seed)`; replications are
//! expected to run on derived seeds (see [`crate::rng`]).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::DobrushinSystem;
use crate::powervar::{SigmaFamily, VolModelSpec};
use crate::rng::{lane, stream_rng, BitSource};

/// A process sampled on the uniform grid `t_k = k * delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    delta: f64,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(delta: f64, values: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid step {delta} must be positive")));
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter("path must contain the initial value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite path value".into()));
        }
        Ok(Self { delta, values })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Time of the last grid point.
    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.delta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: the constructor requires at least the initial value.
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Largest absolute grid increment up to time `t` (grid proxy for the
/// largest jump of a discretely observed path).
pub fn max_jump(path: &SamplePath, t: f64) -> Result<f64> {
    if !(0.0..=path.horizon() + 1e-12 * path.delta()).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "time {t} outside [0, {}]",
            path.horizon()
        )));
    }
    let k_max = ((t / path.delta) * (1.0 + 1e-12)).floor() as usize;
    Ok(path
        .values
        .windows(2)
        .take(k_max)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max))
}

/// Clock change `W(s) = m(tau(s))` with `tau(s)` the first grid time at
/// which the clock `a` exceeds `s` (right-continuous inverse).
///
/// The output lives on an `s`-grid of step `a(horizon) / steps` with the same
/// number of points as the input; values are taken at grid points, never
/// interpolated. Under the martingale assumptions the output increments have
/// variance close to the step.
pub fn dds_time_change(m: &SamplePath, a: &SamplePath) -> Result<SamplePath> {
    if m.len() != a.len() || (m.delta - a.delta).abs() > 1e-12 * m.delta {
        return Err(Error::GridMismatch("clock and path must share the grid".into()));
    }
    if a.values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("clock must be nondecreasing".into()));
    }
    let total = *a.values.last().unwrap();
    if total <= 0.0 {
        return Err(Error::InvalidParameter("clock must end above zero".into()));
    }
    let steps = m.len() - 1;
    let ds = total / steps as f64;
    let mut out = Vec::with_capacity(m.len());
    let mut k = 0usize;
    for i in 0..=steps {
        let s = i as f64 * ds;
        while k < a.values.len() && a.values[k] <= s {
            k += 1;
        }
        let idx = k.min(m.len() - 1);
        out.push(m.values[idx]);
    }
    SamplePath::new(ds, out)
}

/// A symmetric simple random walk `S_0 = 0, S_1, ..., S_n` on the integers.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    positions: Vec<i64>,
}

impl WalkPath {
    /// Wrap an explicit position sequence, validating unit steps from zero.
    pub fn from_positions(positions: Vec<i64>) -> Result<Self> {
        if positions.len() < 2 || positions[0] != 0 {
            return Err(Error::InvalidParameter("walk must start at 0 with >= 1 step".into()));
        }
        if positions.windows(2).any(|w| (w[1] - w[0]).abs() != 1) {
            return Err(Error::InvalidParameter("walk increments must be +-1".into()));
        }
        Ok(Self { positions })
    }

    pub fn n_steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }
}

/// Simulate `n` fair +-1 steps from the given seed.
pub fn simulate_srw(n: usize, seed: u64) -> Result<WalkPath> {
    if n == 0 {
        return Err(Error::InvalidParameter("step count must be >= 1".into()));
    }
    let mut bits = BitSource::new(stream_rng(seed, lane::MAIN));
    let mut positions = Vec::with_capacity(n + 1);
    let mut s = 0i64;
    positions.push(s);
    for _ in 0..n {
        s += bits.next_sign();
        positions.push(s);
    }
    Ok(WalkPath { positions })
}

/// Visit counts `N_n(x) = #{k in [1, n] : S_k = x}`.
pub fn occupation_counts(walk: &WalkPath) -> std::collections::BTreeMap<i64, u64> {
    let mut counts = std::collections::BTreeMap::new();
    for &x in &walk.positions[1..] {
        *counts.entry(x).or_insert(0) += 1;
    }
    counts
}

/// Rescaled occupation statistics of a walk under a zero-mass potential,
/// sampled on an even grid over `[0, 1]` of walk time.
///
/// With `N = floor(n t)`:
/// `v_n(t) = n^{-1/4} sum_{k<=N} V(S_k)`,
/// `m_n(t) = n^{-1/4} (G(S_N) - G(0)) + n^{-1/4} sum_{k<=N} V(S_{k-1})`,
/// `a_n(t) = n^{-1/2} sum_{k<=N} v(S_{k-1})`,
/// `b_n(t) = n^{-1/2} S_N`, and
/// `cross_mb(t) = n^{-3/4} sum_{k<=N} g(S_{k-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledStats {
    pub t_grid: Vec<f64>,
    pub m_n: Vec<f64>,
    pub a_n: Vec<f64>,
    pub b_n: Vec<f64>,
    pub v_n: Vec<f64>,
    pub cross_mb: Vec<f64>,
}

pub fn rescaled_statistics(
    walk: &WalkPath,
    sys: &DobrushinSystem,
    grid_points: usize,
) -> Result<RescaledStats> {
    if !sys.has_zero_mass() {
        return Err(Error::NonzeroMass(sys.mass()));
    }
    if grid_points == 0 {
        return Err(Error::InvalidParameter("grid must have >= 1 point".into()));
    }
    let n = walk.n_steps();
    let pot = sys.potential();
    let g = sys.g();
    let v = sys.v();
    let cross = sys.cross().expect("zero-mass system has a cross-bracket function");
    let g0 = g.eval(0);

    let quarter = (n as f64).powf(-0.25);
    let half = (n as f64).powf(-0.5);
    let three_quarter = (n as f64).powf(-0.75);

    let len = grid_points + 1;
    let mut out = RescaledStats {
        t_grid: (0..len).map(|j| j as f64 / grid_points as f64).collect(),
        m_n: Vec::with_capacity(len),
        a_n: Vec::with_capacity(len),
        b_n: Vec::with_capacity(len),
        v_n: Vec::with_capacity(len),
        cross_mb: Vec::with_capacity(len),
    };

    let mut sum_v_cur = 0.0; // sum V(S_k), k = 1..N
    let mut sum_v_prev = 0.0; // sum V(S_{k-1})
    let mut sum_comp = 0.0; // sum v(S_{k-1})
    let mut sum_cross = 0.0; // sum g(S_{k-1})
    let mut k = 0usize;
    for j in 0..len {
        let target = n * j / grid_points; // floor(n * j / grid_points), exact
        while k < target {
            let prev = walk.positions[k];
            let cur = walk.positions[k + 1];
            sum_v_cur += pot.value(cur);
            sum_v_prev += pot.value(prev);
            sum_comp += v.eval(prev);
            sum_cross += cross.eval(prev);
            k += 1;
        }
        let s_now = walk.positions[k];
        out.v_n.push(quarter * sum_v_cur);
        out.m_n.push(quarter * (g.eval(s_now) - g0) + quarter * sum_v_prev);
        out.a_n.push(half * sum_comp);
        out.b_n.push(half * s_now as f64);
        out.cross_mb.push(three_quarter * sum_cross);
    }
    Ok(out)
}

/// A comb-lattice walk: the first coordinate moves only while the second
/// sits on the axis.
///
/// `a1[k]` counts the visits of the second coordinate to 0 among times
/// `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombPath {
    c1: Vec<i64>,
    c2: Vec<i64>,
    a1: Vec<u64>,
}

impl CombPath {
    /// Wrap explicit coordinate sequences, validating the transition rule
    /// shape and recomputing the axis-visit counter.
    pub fn from_components(c1: Vec<i64>, c2: Vec<i64>) -> Result<Self> {
        if c1.len() != c2.len() || c1.len() < 2 || c1[0] != 0 || c2[0] != 0 {
            return Err(Error::InvalidParameter(
                "components must share a length >= 2 and start at (0, 0)".into(),
            ));
        }
        let mut a1 = Vec::with_capacity(c1.len());
        a1.push(0u64);
        for k in 1..c1.len() {
            let d1 = c1[k] - c1[k - 1];
            let d2 = c2[k] - c2[k - 1];
            if d1.abs() + d2.abs() != 1 {
                return Err(Error::InvalidParameter(format!(
                    "exactly one coordinate must move by one at step {k}"
                )));
            }
            if d1 != 0 && c2[k - 1] != 0 {
                return Err(Error::InvalidParameter(format!(
                    "first coordinate moved off-axis at step {k}"
                )));
            }
            a1.push(a1[k - 1] + (c2[k] == 0) as u64);
        }
        Ok(Self { c1, c2, a1 })
    }

    pub fn n_steps(&self) -> usize {
        self.c1.len() - 1
    }

    pub fn c1(&self) -> &[i64] {
        &self.c1
    }

    pub fn c2(&self) -> &[i64] {
        &self.c2
    }

    /// Axis-visit counts `A_1(k)`.
    pub fn a1(&self) -> &[u64] {
        &self.a1
    }
}

/// Simulate `n` comb steps: on the axis, each of the four unit moves has
/// probability 1/4; off the axis, the second coordinate moves +-1 with
/// probability 1/2 each.
pub fn simulate_comb(n: usize, seed: u64) -> Result<CombPath> {
    if n == 0 {
        return Err(Error::InvalidParameter("step count must be >= 1".into()));
    }
    let mut bits = BitSource::new(stream_rng(seed, lane::MAIN));
    let mut c1 = Vec::with_capacity(n + 1);
    let mut c2 = Vec::with_capacity(n + 1);
    let mut a1 = Vec::with_capacity(n + 1);
    let (mut x, mut y, mut visits) = (0i64, 0i64, 0u64);
    c1.push(x);
    c2.push(y);
    a1.push(visits);
    for _ in 0..n {
        if y == 0 {
            if bits.next_bit() {
                x += bits.next_sign();
            } else {
                y += bits.next_sign();
            }
        } else {
            y += bits.next_sign();
        }
        visits += (y == 0) as u64;
        c1.push(x);
        c2.push(y);
        a1.push(visits);
    }
    Ok(CombPath { c1, c2, a1 })
}

/// The comb pair rescaled to `[0, 1]` with its componentwise compensators:
/// `xi1(t) = n^{-1/4} C_1(N)`, `xi2(t) = n^{-1/2} C_2(N)`,
/// `comp1(t) = n^{-1/2} A_1(N) / 2`, `comp2(t) = N/n - A_1(N) / (2n)`,
/// where `N = floor(n t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombRescaled {
    pub t_grid: Vec<f64>,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub comp1: Vec<f64>,
    pub comp2: Vec<f64>,
}

pub fn comb_rescaled(path: &CombPath, grid_points: usize) -> Result<CombRescaled> {
    if grid_points == 0 {
        return Err(Error::InvalidParameter("grid must have >= 1 point".into()));
    }
    let n = path.n_steps();
    let quarter = (n as f64).powf(-0.25);
    let half = (n as f64).powf(-0.5);
    let len = grid_points + 1;
    let mut out = CombRescaled {
        t_grid: (0..len).map(|j| j as f64 / grid_points as f64).collect(),
        xi1: Vec::with_capacity(len),
        xi2: Vec::with_capacity(len),
        comp1: Vec::with_capacity(len),
        comp2: Vec::with_capacity(len),
    };
    for j in 0..len {
        let k = n * j / grid_points;
        let a1 = path.a1[k] as f64;
        out.xi1.push(quarter * path.c1[k] as f64);
        out.xi2.push(half * path.c2[k] as f64);
        out.comp1.push(half * a1 / 2.0);
        out.comp2.push(k as f64 / n as f64 - a1 / (2.0 * n as f64));
    }
    Ok(out)
}

/// Driving-noise law for the discrete stochastic integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    Rademacher,
    Gaussian,
}

/// Output of [`simulate_discrete_stoch_integral`]: the integral `m`, its
/// compensator `v`, and the driving walk `b`, all on the step-`1/n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StochIntegralPaths {
    pub m: SamplePath,
    pub v: SamplePath,
    pub b: SamplePath,
}

/// Discrete stochastic integral
/// `M_n(t) = n^{-1/2} sum_{j<=floor(nt)} sigma((j-1)/n) xi_j`
/// with `V_n(t) = n^{-1} sum sigma^2((j-1)/n)` and
/// `B_n(t) = n^{-1/2} sum xi_j`.
///
/// The volatility path must resolve the `1/n` grid exactly (its step must
/// divide `1/n`).
pub fn simulate_discrete_stoch_integral(
    sigma: &SamplePath,
    noise: NoiseDistribution,
    n: usize,
    seed: u64,
) -> Result<StochIntegralPaths> {
    if n == 0 {
        return Err(Error::InvalidParameter("step count must be >= 1".into()));
    }
    let ratio = 1.0 / (n as f64 * sigma.delta());
    let stride = ratio.round();
    if stride < 1.0 || (ratio - stride).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!(
            "volatility step {} does not resolve the 1/{n} grid",
            sigma.delta()
        )));
    }
    let stride = stride as usize;
    let steps = (sigma.len() - 1) / stride;
    if steps == 0 {
        return Err(Error::GridMismatch("volatility path shorter than one step".into()));
    }

    let mut rng = stream_rng(seed, lane::MAIN);
    let root_n = (n as f64).sqrt();
    let mut m = Vec::with_capacity(steps + 1);
    let mut v = Vec::with_capacity(steps + 1);
    let mut b = Vec::with_capacity(steps + 1);
    let (mut ms, mut vs, mut bs) = (0.0, 0.0, 0.0);
    m.push(ms);
    v.push(vs);
    b.push(bs);
    for j in 1..=steps {
        let s = sigma.values()[(j - 1) * stride];
        let xi: f64 = match noise {
            NoiseDistribution::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseDistribution::Gaussian => rng.sample(StandardNormal),
        };
        ms += s * xi / root_n;
        vs += s * s / n as f64;
        bs += xi / root_n;
        m.push(ms);
        v.push(vs);
        b.push(bs);
    }
    let delta = 1.0 / n as f64;
    Ok(StochIntegralPaths {
        m: SamplePath::new(delta, m)?,
        v: SamplePath::new(delta, v)?,
        b: SamplePath::new(delta, b)?,
    })
}

/// Output of [`simulate_vol_model`]: the martingale `m`, the business-time
/// increments over each observation interval, and the returns
/// `r = m + mu t + beta A`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolModelPaths {
    pub m: SamplePath,
    pub a_increments: Vec<f64>,
    pub r: SamplePath,
}

/// Volatility values at the left endpoints of the refined grid
/// (`steps * refine` sub-steps of length `1/(n * refine)`).
fn sigma_values(spec: &VolModelSpec, n: usize, steps: usize, seed: u64) -> Result<Vec<f64>> {
    let refine = spec.refine;
    let h = 1.0 / (n as f64 * refine as f64);
    let sub_steps = steps * refine;
    let mut sigma_rng = stream_rng(seed, lane::SIGMA);
    Ok(match &spec.sigma {
        SigmaFamily::Constant => vec![spec.sigma0; sub_steps],
        SigmaFamily::DeterministicGrid { values } => {
            if values.len() != sub_steps {
                return Err(Error::GridMismatch(format!(
                    "deterministic volatility grid has {} values, expected {sub_steps}",
                    values.len()
                )));
            }
            values.clone()
        }
        SigmaFamily::LogOu { kappa, nu } => {
            let mean = spec.sigma0.ln();
            let (decay, sd) = if *kappa > 0.0 {
                let d = (-kappa * h).exp();
                (d, ((1.0 - d * d) / (2.0 * kappa)).sqrt())
            } else {
                (1.0, h.sqrt())
            };
            let mut log_sigma = mean;
            (0..sub_steps)
                .map(|_| {
                    let current = log_sigma.exp();
                    let z: f64 = sigma_rng.sample(StandardNormal);
                    log_sigma = mean + (log_sigma - mean) * decay + nu * sd * z;
                    current
                })
                .collect()
        }
    })
}

/// The volatility path of a model on its refined grid, as a sample path of
/// step `1/(n * refine)` (the final grid point repeats the last value).
pub fn sigma_path(spec: &VolModelSpec, n: usize, seed: u64) -> Result<SamplePath> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("step count must be >= 1".into()));
    }
    let steps = (n as f64 * spec.horizon * (1.0 + 1e-12)).floor() as usize;
    if steps == 0 {
        return Err(Error::InvalidParameter("horizon shorter than one observation step".into()));
    }
    let mut values = sigma_values(spec, n, steps, seed)?;
    let last = *values.last().unwrap();
    values.push(last);
    SamplePath::new(1.0 / (n as f64 * spec.refine as f64), values)
}

/// Simulate the time-changed volatility model at observation step `1/n`.
///
/// The volatility path is generated first on a grid refined `spec.refine`
/// times (own stream), held piecewise constant over sub-steps; the
/// business-time increment of interval `j` is the left-endpoint sum
/// `a_j = sum sigma^2 * h`, and the martingale increment is drawn as
/// `sqrt(a_j) Z_j` from an independent stream, which makes the conditional
/// law of the increments given the volatility exactly centred Gaussian with
/// variance `a_j`.
pub fn simulate_vol_model(spec: &VolModelSpec, n: usize, seed: u64) -> Result<VolModelPaths> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("step count must be >= 1".into()));
    }
    let steps = (n as f64 * spec.horizon * (1.0 + 1e-12)).floor() as usize;
    if steps == 0 {
        return Err(Error::InvalidParameter("horizon shorter than one observation step".into()));
    }
    let refine = spec.refine;
    let h = 1.0 / (n as f64 * refine as f64);
    let sigma = sigma_values(spec, n, steps, seed)?;
    let a_increments: Vec<f64> = sigma
        .chunks_exact(refine)
        .map(|block| block.iter().map(|s| s * s).sum::<f64>() * h)
        .collect();

    let mut noise_rng = stream_rng(seed, lane::MAIN);
    let delta = 1.0 / n as f64;
    let mut m = Vec::with_capacity(steps + 1);
    let mut r = Vec::with_capacity(steps + 1);
    m.push(0.0);
    r.push(0.0);
    let (mut ms, mut a_total) = (0.0, 0.0);
    for (j, &a_j) in a_increments.iter().enumerate() {
        let z: f64 = noise_rng.sample(StandardNormal);
        ms += a_j.sqrt() * z;
        a_total += a_j;
        let t = (j + 1) as f64 * delta;
        m.push(ms);
        r.push(ms + spec.mu_drift * t + spec.beta * a_total);
    }
    Ok(VolModelPaths {
        m: SamplePath::new(delta, m)?,
        a_increments,
        r: SamplePath::new(delta, r)?,
    })
}
