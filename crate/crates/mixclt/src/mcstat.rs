//! Replication engine and statistical checks.
//!
//! Each experiment runs `replications` independent simulations on seeds
//! derived from the master seed, reduces them to a per-replication statistic,
//! and compares the empirical sample against its predicted limit law — a
//! one-sample comparison with the standard normal CDF where the limit is
//! Gaussian, a two-sample comparison against an oracle sampler where the
//! limit is a local-time mixture with no closed-form CDF. Reports are
//! recomputable bit-for-bit from `(master_seed, config)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::lattice::{DobrushinSystem, LatticePotential};
use crate::limitlaw::{MixtureLawSpec, MixtureSampler};
use crate::paths::{rescaled_statistics, simulate_comb, simulate_srw, simulate_vol_model};
use crate::powervar::{
    compensator_power_variation, drift_perturbation_check, realized_power_variation,
    scheme_series, VolModelSpec,
};
use crate::rng::stream_seed;

/// Stream index reserved for oracle draws (far above replication indices).
const ORACLE_STREAM: u64 = u64::MAX;
/// Base index for auxiliary streams (conditional-moment chunks, decay paths).
const AUX_STREAM_BASE: u64 = 1 << 62;

/// Right-continuous empirical CDF of a sample.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn value(&self, y: f64) -> f64 {
        // Number of samples <= y via binary search on the sorted copy.
        let count = self.sorted.partition_point(|&x| x <= y);
        count as f64 / self.sorted.len() as f64
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<Ecdf> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    Ok(Ecdf { sorted })
}

/// Two-sample sup distance between empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).expect("non-finite sample"));
    ys.sort_by(|u, v| u.partial_cmp(v).expect("non-finite sample"));
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// One-sample sup distance between the empirical CDF and a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).expect("non-finite sample"));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Moment summary of a replication sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    pub se_mean: f64,
    pub variance: f64,
    pub se_variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleSummary {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in samples {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let variance = if samples.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
        Ok(Self {
            count: samples.len(),
            mean,
            se_mean: (m2 / n).sqrt(),
            variance,
            se_variance: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
            skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
            excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Experiment selector; each value verifies one limit theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    OccupationClt,
    CombClt,
    RealizedVarClt,
    PowerVarLln,
    PowerVarCltP,
    DriftRobustness,
    CrossBracketDecay,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::OccupationClt => "occupation_clt",
            Experiment::CombClt => "comb_clt",
            Experiment::RealizedVarClt => "realized_var_clt",
            Experiment::PowerVarLln => "power_var_lln",
            Experiment::PowerVarCltP => "power_var_clt_p",
            Experiment::DriftRobustness => "drift_robustness",
            Experiment::CrossBracketDecay => "cross_bracket_decay",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "occupation_clt" => Ok(Experiment::OccupationClt),
            "comb_clt" => Ok(Experiment::CombClt),
            "realized_var_clt" => Ok(Experiment::RealizedVarClt),
            "power_var_lln" => Ok(Experiment::PowerVarLln),
            "power_var_clt_p" => Ok(Experiment::PowerVarCltP),
            "drift_robustness" => Ok(Experiment::DriftRobustness),
            "cross_bracket_decay" => Ok(Experiment::CrossBracketDecay),
            other => Err(Error::InvalidParameter(format!("unknown experiment `{other}`"))),
        }
    }

    fn uses_ks(&self) -> bool {
        !matches!(self, Experiment::PowerVarLln | Experiment::CrossBracketDecay)
    }
}

/// Experiment-specific parameters; unset fields fall back to the built-in
/// defaults of the experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<LatticePotential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<VolModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_steps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_hi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_replications: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on_axis_target: Option<u64>,
}

/// Full configuration of one verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub replications: usize,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_threshold: Option<f64>,
    #[serde(default)]
    pub params: Params,
}

impl McConfig {
    /// Built-in configuration of each experiment at verification scale, with
    /// every tolerance pinned.
    pub fn default_for(experiment: Experiment) -> Self {
        let master_seed = 0xA5EED5;
        let two_point = LatticePotential::new(0, vec![-1.0, 1.0]).expect("static potential");
        match experiment {
            Experiment::OccupationClt => Self {
                experiment,
                master_seed,
                replications: 5000,
                steps: 100_000,
                ks_threshold: None,
                params: Params { potential: Some(two_point), ..Params::default() },
            },
            Experiment::CombClt => Self {
                experiment,
                master_seed,
                replications: 5000,
                steps: 1_000_000,
                ks_threshold: None,
                params: Params {
                    mean_replications: Some(2000),
                    on_axis_target: Some(1_000_000),
                    ..Params::default()
                },
            },
            Experiment::RealizedVarClt => Self {
                experiment,
                master_seed,
                replications: 10_000,
                steps: 4096,
                ks_threshold: None,
                params: Params {
                    model: Some(VolModelSpec::constant(1.0)),
                    ..Params::default()
                },
            },
            Experiment::PowerVarLln => Self {
                experiment,
                master_seed,
                replications: 2000,
                steps: 4096,
                ks_threshold: None,
                params: Params {
                    model: Some(VolModelSpec::constant(1.0)),
                    delta: Some(1e-3),
                    ..Params::default()
                },
            },
            Experiment::PowerVarCltP => Self {
                experiment,
                master_seed,
                replications: 5000,
                steps: 8192,
                ks_threshold: None,
                params: Params {
                    model: Some(VolModelSpec::constant(1.0)),
                    p: Some(6.0),
                    ..Params::default()
                },
            },
            Experiment::DriftRobustness => Self {
                experiment,
                master_seed,
                replications: 10_000,
                steps: 4096,
                ks_threshold: None,
                params: Params {
                    model: Some(VolModelSpec {
                        mu_drift: 0.5,
                        beta: 0.3,
                        ..VolModelSpec::constant(1.0)
                    }),
                    decay_steps: Some(vec![256, 1024, 4096]),
                    ..Params::default()
                },
            },
            Experiment::CrossBracketDecay => Self {
                experiment,
                master_seed,
                replications: 2000,
                steps: 4096,
                ks_threshold: None,
                params: Params {
                    potential: Some(two_point),
                    steps_hi: Some(65_536),
                    ..Params::default()
                },
            },
        }
    }

    /// The distance bar actually applied: explicit override, else 0.02 for
    /// ten thousand replications and up, else 0.03.
    pub fn effective_ks_threshold(&self) -> f64 {
        self.ks_threshold.unwrap_or(if self.replications >= 10_000 { 0.02 } else { 0.03 })
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 || self.steps == 0 {
            return Err(Error::InfeasibleConfig("replications and steps must be >= 1".into()));
        }
        if self.experiment.uses_ks() && self.replications < 100 {
            return Err(Error::InfeasibleConfig(format!(
                "{} needs >= 100 replications for a meaningful distance bar",
                self.experiment.name()
            )));
        }
        if let Some(t) = self.ks_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InfeasibleConfig(format!("threshold {t} outside (0, 1)")));
            }
        }
        if let Some(model) = &self.params.model {
            model.validate()?;
        }
        Ok(())
    }
}

/// One named tolerance check: passes when `|value - target| <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn within(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            target,
            tolerance,
            passed: (value - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub stat: f64,
    pub threshold: f64,
}

/// Seed provenance: how replication streams derive from the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub master_seed: u64,
    pub replication_streams: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<SampleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub checks: Vec<CheckResult>,
    pub seeds: SeedProvenance,
}

/// Verification report; everything except `runtime_seconds` is a pure
/// function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub experiment: String,
    pub config_echo: McConfig,
    pub stats: ReportStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<KsResult>,
    pub passed: bool,
    pub runtime_seconds: f64,
}

impl McReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct ExperimentOutput {
    checks: Vec<CheckResult>,
    ks: Option<KsResult>,
    sample: Option<SampleSummary>,
    oracle: Option<SampleSummary>,
    reference: Option<String>,
    raw: Option<ExperimentSamples>,
}

/// Per-replication samples behind a report, for CDF plot emission.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSamples {
    pub sample: Vec<f64>,
    /// Oracle draws for two-sample comparisons; `None` when the reference
    /// law has a closed-form CDF (standard normal).
    pub oracle: Option<Vec<f64>>,
}

/// Run every replication of the configured experiment and assemble the
/// report. Rerunning with the same configuration reproduces every statistic
/// exactly; only the wall-clock field differs.
pub fn run_experiment(cfg: &McConfig) -> Result<McReport> {
    Ok(run_experiment_with_samples(cfg)?.0)
}

/// Like [`run_experiment`] but also hands back the raw per-replication
/// samples (when the experiment produces a law comparison), so callers can
/// emit empirical-vs-oracle CDF data for plotting.
pub fn run_experiment_with_samples(
    cfg: &McConfig,
) -> Result<(McReport, Option<ExperimentSamples>)> {
    cfg.validate()?;
    let start = Instant::now();
    let out = match cfg.experiment {
        Experiment::OccupationClt => occupation_clt(cfg)?,
        Experiment::CombClt => comb_clt(cfg)?,
        Experiment::RealizedVarClt => realized_var_clt(cfg)?,
        Experiment::PowerVarLln => power_var_lln(cfg)?,
        Experiment::PowerVarCltP => power_var_clt_p(cfg)?,
        Experiment::DriftRobustness => drift_robustness(cfg)?,
        Experiment::CrossBracketDecay => cross_bracket_decay(cfg)?,
    };
    let passed = out.checks.iter().all(|c| c.passed)
        && out.ks.as_ref().is_none_or(|k| k.stat < k.threshold);
    let report = McReport {
        experiment: cfg.experiment.name().to_string(),
        config_echo: cfg.clone(),
        stats: ReportStats {
            sample: out.sample,
            oracle: out.oracle,
            reference: out.reference,
            checks: out.checks,
            seeds: SeedProvenance {
                master_seed: cfg.master_seed,
                replication_streams: "chacha8(splitmix_hash(master_seed, replication_index))"
                    .to_string(),
            },
        },
        ks: out.ks,
        passed,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((report, out.raw))
}

const ROOT_2_OVER_PI: f64 = 0.7978845608028654;

fn required_potential(cfg: &McConfig) -> LatticePotential {
    cfg.params
        .potential
        .clone()
        .unwrap_or_else(|| LatticePotential::new(0, vec![-1.0, 1.0]).expect("static potential"))
}

fn required_model(cfg: &McConfig) -> VolModelSpec {
    cfg.params.model.clone().unwrap_or_else(|| VolModelSpec::constant(1.0))
}

/// Rescaled occupation sums of the walk against the mixture oracle, plus the
/// compensator mean against the expected local time.
fn occupation_clt(cfg: &McConfig) -> Result<ExperimentOutput> {
    let sys = DobrushinSystem::new(required_potential(cfg));
    let mu_v = sys.mu_v().ok_or_else(|| {
        Error::InfeasibleConfig("occupation experiment requires a zero-mass potential".into())
    })?;
    let n = cfg.steps;
    let rows: Vec<(f64, f64)> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let walk = simulate_srw(n, stream_seed(cfg.master_seed, i as u64))?;
            let stats = rescaled_statistics(&walk, &sys, 1)?;
            Ok((stats.v_n[1], stats.a_n[1]))
        })
        .collect::<Result<_>>()?;
    let occupation: Vec<f64> = rows.iter().map(|r| r.0).collect();

    let spec = MixtureLawSpec::new(mu_v, 1.0)?;
    let oracle =
        MixtureSampler::new(spec, stream_seed(cfg.master_seed, ORACLE_STREAM))?
            .draw_many(cfg.replications);

    let ks = KsResult {
        stat: ks_two_sample(&occupation, &oracle)?,
        threshold: cfg.effective_ks_threshold(),
    };
    let mean_clock =
        rows.iter().map(|r| r.1 / mu_v).sum::<f64>() / cfg.replications as f64;
    let checks = vec![CheckResult::within(
        "compensator_mean_over_mu_v",
        mean_clock,
        ROOT_2_OVER_PI,
        0.03 * ROOT_2_OVER_PI,
    )];
    Ok(ExperimentOutput {
        checks,
        ks: Some(ks),
        sample: Some(SampleSummary::from_samples(&occupation)?),
        oracle: Some(SampleSummary::from_samples(&oracle)?),
        reference: None,
        raw: Some(ExperimentSamples { sample: occupation, oracle: Some(oracle) }),
    })
}

/// Comb walk: rescaled first coordinate against the mixture oracle, axis
/// occupation against the expected local time, and the one-step conditional
/// moments of the transition kernel.
fn comb_clt(cfg: &McConfig) -> Result<ExperimentOutput> {
    let n = cfg.steps;
    let rows: Vec<(f64, f64)> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let path = simulate_comb(n, stream_seed(cfg.master_seed, i as u64))?;
            let quarter = (n as f64).powf(-0.25);
            let half = (n as f64).powf(-0.5);
            Ok((quarter * path.c1()[n] as f64, half * path.a1()[n] as f64 / 2.0))
        })
        .collect::<Result<_>>()?;
    let xi1: Vec<f64> = rows.iter().map(|r| r.0).collect();

    let oracle = MixtureSampler::new(
        MixtureLawSpec::new(1.0, 1.0)?,
        stream_seed(cfg.master_seed, ORACLE_STREAM),
    )?
    .draw_many(cfg.replications);
    let ks = KsResult {
        stat: ks_two_sample(&xi1, &oracle)?,
        threshold: cfg.effective_ks_threshold(),
    };

    let mean_reps = cfg.params.mean_replications.unwrap_or(2000).min(cfg.replications);
    let mean_axis = rows[..mean_reps].iter().map(|r| r.1).sum::<f64>() / mean_reps as f64;

    // Conditional one-step moments, aggregated across fresh paths until the
    // requested number of on-axis transitions has been observed.
    let target = cfg.params.on_axis_target.unwrap_or(1_000_000);
    let chunk_steps = 100_000;
    let batch = 64u64;
    let mut on_axis = 0u64;
    let mut lateral = 0u64;
    let mut vertical_on_axis = 0u64;
    let mut next_chunk = 0u64;
    while on_axis < target {
        let stats: Vec<(u64, u64, u64)> = (next_chunk..next_chunk + batch)
            .into_par_iter()
            .map(|j| {
                let path =
                    simulate_comb(chunk_steps, stream_seed(cfg.master_seed, AUX_STREAM_BASE + j))?;
                let (mut on, mut lat, mut vert) = (0u64, 0u64, 0u64);
                for k in 1..=chunk_steps {
                    if path.c2()[k - 1] == 0 {
                        on += 1;
                        let moved_first = path.c1()[k] != path.c1()[k - 1];
                        lat += moved_first as u64;
                        vert += !moved_first as u64;
                    }
                }
                Ok((on, lat, vert))
            })
            .collect::<Result<_>>()?;
        for (on, lat, vert) in stats {
            on_axis += on;
            lateral += lat;
            vertical_on_axis += vert;
        }
        next_chunk += batch;
    }
    // The coordinates never move together, so the empirical cross moment is
    // identically zero with zero standard error.
    let cross_moment = 0.0;

    let checks = vec![
        CheckResult::within(
            "on_axis_first_coordinate_mean_square",
            lateral as f64 / on_axis as f64,
            0.5,
            0.01,
        ),
        CheckResult::within(
            "on_axis_second_coordinate_mean_square",
            vertical_on_axis as f64 / on_axis as f64,
            0.5,
            0.01,
        ),
        CheckResult::within("cross_increment_moment", cross_moment, 0.0, 0.0),
        CheckResult::within(
            "axis_time_mean_over_two",
            mean_axis,
            ROOT_2_OVER_PI,
            0.03 * ROOT_2_OVER_PI,
        ),
    ];
    Ok(ExperimentOutput {
        checks,
        ks: Some(ks),
        sample: Some(SampleSummary::from_samples(&xi1)?),
        oracle: Some(SampleSummary::from_samples(&oracle)?),
        reference: None,
        raw: Some(ExperimentSamples { sample: xi1, oracle: Some(oracle) }),
    })
}

/// Per-replication normalized estimation error of the quadratic scheme.
fn quadratic_error_stats(
    cfg: &McConfig,
    model: &VolModelSpec,
    drifted: bool,
) -> Result<Vec<f64>> {
    let n = cfg.steps;
    let drift = drifted.then_some((model.mu_drift, model.beta));
    (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let paths = simulate_vol_model(model, n, stream_seed(cfg.master_seed, i as u64))?;
            let series = scheme_series(&paths.m, &paths.a_increments, n, 2.0, drift)?;
            let bracket = *series.bracket.last().unwrap();
            let numer = match &series.y_n {
                Some(y) => *y.last().unwrap(),
                None => *series.x_n.last().unwrap(),
            };
            Ok(numer / bracket.sqrt())
        })
        .collect()
}

/// Realized-variance error normalized by the plug-in bracket against the
/// standard normal.
fn realized_var_clt(cfg: &McConfig) -> Result<ExperimentOutput> {
    let model = required_model(cfg);
    let stats = quadratic_error_stats(cfg, &model, false)?;
    let ks = KsResult {
        stat: ks_one_sample(&stats, standard_normal_cdf)?,
        threshold: cfg.effective_ks_threshold(),
    };
    Ok(ExperimentOutput {
        checks: vec![],
        ks: Some(ks),
        sample: Some(SampleSummary::from_samples(&stats)?),
        oracle: None,
        reference: Some("standard_normal".to_string()),
        raw: Some(ExperimentSamples { sample: stats, oracle: None }),
    })
}

/// Power-variation law of large numbers: the deterministic ramp clock
/// reaches its limiting integral, and the quartic variation of the model is
/// three times its quartic clock power on average.
fn power_var_lln(cfg: &McConfig) -> Result<ExperimentOutput> {
    // Ramp clock A(t) = t + t^2/2 (spot variance 1 + s) observed at `delta`.
    let delta = cfg.params.delta.unwrap_or(1e-3);
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InfeasibleConfig(format!("block length {delta} outside (0, 1]")));
    }
    let blocks = (1.0 / delta).round() as usize;
    let ramp: Vec<f64> = (1..=blocks)
        .map(|k| {
            let a = |t: f64| t + t * t / 2.0;
            a(k as f64 * delta) - a((k - 1) as f64 * delta)
        })
        .collect();
    let u4 = *compensator_power_variation(&ramp, 4.0, delta)?.last().unwrap();

    let model = required_model(cfg);
    let n = cfg.steps;
    let rows: Vec<(f64, f64)> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let paths = simulate_vol_model(&model, n, stream_seed(cfg.master_seed, i as u64))?;
            let v4 = *realized_power_variation(&paths.m, 4.0, 1.0 / n as f64)?.last().unwrap();
            let u4 = *compensator_power_variation(&paths.a_increments, 4.0, 1.0 / n as f64)?
                .last()
                .unwrap();
            Ok((v4, u4))
        })
        .collect::<Result<_>>()?;
    let mean_v = rows.iter().map(|r| r.0).sum::<f64>() / cfg.replications as f64;
    let mean_u = rows.iter().map(|r| r.1).sum::<f64>() / cfg.replications as f64;

    let v_samples: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let checks = vec![
        CheckResult::within("ramp_quartic_clock_power", u4, 7.0 / 3.0, 1e-2),
        CheckResult::within("quartic_variation_over_clock_power", mean_v / mean_u, 3.0, 0.06),
    ];
    Ok(ExperimentOutput {
        checks,
        ks: None,
        sample: Some(SampleSummary::from_samples(&v_samples)?),
        oracle: None,
        reference: None,
        raw: None,
    })
}

/// Higher-power scheme error normalized by its plug-in bracket against the
/// standard normal.
fn power_var_clt_p(cfg: &McConfig) -> Result<ExperimentOutput> {
    let model = required_model(cfg);
    let p = cfg.params.p.unwrap_or(6.0);
    let n = cfg.steps;
    let stats: Vec<f64> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let paths = simulate_vol_model(&model, n, stream_seed(cfg.master_seed, i as u64))?;
            let series = scheme_series(&paths.m, &paths.a_increments, n, p, None)?;
            Ok(*series.x_n.last().unwrap() / series.bracket.last().unwrap().sqrt())
        })
        .collect::<Result<_>>()?;
    let ks = KsResult {
        stat: ks_one_sample(&stats, standard_normal_cdf)?,
        threshold: cfg.effective_ks_threshold(),
    };
    Ok(ExperimentOutput {
        checks: vec![],
        ks: Some(ks),
        sample: Some(SampleSummary::from_samples(&stats)?),
        oracle: None,
        reference: Some("standard_normal".to_string()),
        raw: Some(ExperimentSamples { sample: stats, oracle: None }),
    })
}

/// Drift-perturbed scheme error against the standard normal, plus the decay
/// exponents of the two perturbation sums across step counts.
fn drift_robustness(cfg: &McConfig) -> Result<ExperimentOutput> {
    let model = required_model(cfg);
    let stats = quadratic_error_stats(cfg, &model, true)?;
    let ks = KsResult {
        stat: ks_one_sample(&stats, standard_normal_cdf)?,
        threshold: cfg.effective_ks_threshold(),
    };

    let decay_steps = cfg
        .params
        .decay_steps
        .clone()
        .unwrap_or_else(|| vec![256, 1024, 4096]);
    let mut checks = vec![];
    if decay_steps.len() >= 2 {
        let sums: Vec<(f64, f64)> = decay_steps
            .iter()
            .enumerate()
            .map(|(k, &n_k)| {
                let paths = simulate_vol_model(
                    &model,
                    n_k,
                    stream_seed(cfg.master_seed, AUX_STREAM_BASE + k as u64),
                )?;
                drift_perturbation_check(
                    &paths.a_increments,
                    n_k,
                    model.mu_drift,
                    model.beta,
                )
            })
            .collect::<Result<_>>()?;
        let span = (*decay_steps.last().unwrap() as f64 / decay_steps[0] as f64).ln();
        let (s1_first, s2_first) = sums[0];
        let (s1_last, s2_last) = *sums.last().unwrap();
        if s1_first > 0.0 && s1_last > 0.0 {
            checks.push(CheckResult::within(
                "first_perturbation_decay_exponent",
                (s1_first / s1_last).ln() / span,
                0.5,
                0.1,
            ));
        }
        if s2_first > 0.0 && s2_last > 0.0 {
            checks.push(CheckResult::within(
                "second_perturbation_decay_exponent",
                (s2_first / s2_last).ln() / span,
                1.0,
                0.2,
            ));
        }
    }
    Ok(ExperimentOutput {
        checks,
        ks: Some(ks),
        sample: Some(SampleSummary::from_samples(&stats)?),
        oracle: None,
        reference: Some("standard_normal".to_string()),
        raw: Some(ExperimentSamples { sample: stats, oracle: None }),
    })
}

/// Mean absolute cross bracket between the occupation martingale and the
/// driving walk drops at the quarter-power rate when the step count grows.
fn cross_bracket_decay(cfg: &McConfig) -> Result<ExperimentOutput> {
    let sys = DobrushinSystem::new(required_potential(cfg));
    if !sys.has_zero_mass() {
        return Err(Error::InfeasibleConfig(
            "cross-bracket experiment requires a zero-mass potential".into(),
        ));
    }
    let n_lo = cfg.steps;
    let n_hi = cfg.params.steps_hi.unwrap_or(16 * cfg.steps);
    if n_hi <= n_lo {
        return Err(Error::InfeasibleConfig(format!(
            "upper step count {n_hi} must exceed {n_lo}"
        )));
    }
    let mean_abs = |n: usize, base: u64| -> Result<f64> {
        let total: f64 = (0..cfg.replications)
            .into_par_iter()
            .map(|i| {
                let walk = simulate_srw(n, stream_seed(cfg.master_seed, base + i as u64))?;
                let stats = rescaled_statistics(&walk, &sys, 1)?;
                Ok(stats.cross_mb[1].abs())
            })
            .collect::<Result<Vec<f64>>>()?
            .iter()
            .sum();
        Ok(total / cfg.replications as f64)
    };
    let mean_lo = mean_abs(n_lo, 0)?;
    let mean_hi = mean_abs(n_hi, AUX_STREAM_BASE)?;
    let target = (n_hi as f64 / n_lo as f64).powf(0.25);
    let checks = vec![CheckResult::within(
        "cross_bracket_decay_factor",
        mean_lo / mean_hi,
        target,
        0.25 * target,
    )];
    Ok(ExperimentOutput {
        checks,
        ks: None,
        sample: None,
        oracle: None,
        reference: None,
        raw: None,
    })
}
