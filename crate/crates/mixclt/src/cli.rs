//! Command-line front end: argument parsing, config files, and CSV/JSON
//! emission. Subcommands are thin adapters over the library modules; no
//! numerics happen here.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    c_v_squared, cross_bracket_g, mu_v_formulas, DobrushinSystem, LatticePotential, WindowFn,
};
use crate::limitlaw::{sample_inverse_local_time, sample_local_time, MixtureLawSpec, MixtureSampler};
use crate::mcstat::{
    empirical_cdf, run_experiment, run_experiment_with_samples, standard_normal_cdf, Experiment,
    ExperimentSamples, McConfig, Params,
};
use crate::paths::{
    comb_rescaled, sigma_path, simulate_comb, simulate_discrete_stoch_integral, simulate_srw,
    simulate_vol_model, NoiseDistribution, SamplePath,
};
use crate::powervar::{power_variation_series, scheme_series, VolModelSpec};
use crate::rng::{lane, stream_rng};

#[derive(Parser, Debug)]
#[command(
    name = "mixclt",
    version,
    about = "Simulation and Monte Carlo verification of martingale limit laws",
    max_term_width = 100
)]
struct Cli {
    /// Master seed for all randomness in the command.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads for replication-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress informational output.
    #[arg(long, global = true, default_value_t = false)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive all lattice functions and constants of a potential.
    Dobrushin {
        /// Potential file: a line `a b`, then `b - a + 1` values.
        #[arg(long)]
        potential: PathBuf,
    },
    /// Simulate one path of a process and write it as CSV.
    Simulate {
        #[arg(value_enum)]
        process: Process,
        /// Step count n.
        #[arg(long)]
        n: usize,
        /// Model config (TOML with a [model] table) for stochint/volmodel.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Driving noise for stochint.
        #[arg(long, value_enum, default_value_t = Noise::Gaussian)]
        noise: Noise,
    },
    /// Realized and compensator power variation of a simulated model path.
    Powervar {
        /// Input CSV in the volmodel format `t,m,a[,r]`.
        #[arg(long)]
        path: PathBuf,
        /// Power of the variation.
        #[arg(long)]
        p: f64,
        /// Sampling block length (a multiple of the path step).
        #[arg(long)]
        delta: f64,
    },
    /// Volatility scheme series (one path) or its Monte Carlo law (reps > 1).
    Scheme {
        /// Experiment config (TOML; [model] table plus optional [params]).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Observation steps per unit time.
        #[arg(long)]
        n: usize,
        /// Replications: 1 writes the series CSV, more runs the law check.
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Scheme power (2 = quadratic, >= 4 = higher-power).
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Draw from a limit law.
    Limitlaw {
        #[command(subcommand)]
        action: LimitLawAction,
    },
    /// Run a verification experiment and write its report.
    Verify {
        /// Experiment name (overrides the config file).
        #[arg(long)]
        experiment: Option<String>,
        /// Config file (TOML) with experiment, sizes and parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Override the step count.
        #[arg(long)]
        n: Option<usize>,
        /// Override the distance threshold.
        #[arg(long)]
        ks_threshold: Option<f64>,
        /// Also write empirical-vs-reference CDF pairs as CSV for plotting.
        #[arg(long)]
        cdf_out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum LimitLawAction {
    Sample {
        #[arg(long, value_enum)]
        law: Law,
        /// Time horizon (or level for the inverse local time).
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Clock scale of the mixture law.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Number of draws.
        #[arg(long)]
        n: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Process {
    Srw,
    Comb,
    Stochint,
    Volmodel,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Noise {
    Rademacher,
    Gaussian,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Law {
    Localtime,
    Mixture,
    Invlocaltime,
}

/// Parse arguments and run; returns the process exit code.
///
/// Exit codes: 0 success, 1 validation/usage error (single-line diagnostic
/// on stderr), 2 verification ran but failed (report still written).
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Clap prints full help for --help/--version; keep that behaviour.
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mixclt: {e}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::InvalidParameter("thread count must be >= 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        return pool.install(|| dispatch(&cli));
    }
    dispatch(&cli)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Dobrushin { potential } => {
            let out = require_out(cli, "report")?;
            let pot = LatticePotential::from_text(&fs::read_to_string(potential)?)?;
            let json = dobrushin_report(&pot)?;
            fs::write(&out, json)?;
            info(cli, &format!("wrote {}", out.display()));
            Ok(0)
        }
        Command::Simulate { process, n, spec, noise } => {
            let out = require_out(cli, "path CSV")?;
            let csv = simulate_csv(cli, *process, *n, spec.as_deref(), *noise)?;
            fs::write(&out, csv)?;
            info(cli, &format!("wrote {}", out.display()));
            Ok(0)
        }
        Command::Powervar { path, p, delta } => {
            let out = require_out(cli, "series CSV")?;
            let (m, a_increments) = read_model_csv(path)?;
            let series = power_variation_series(&m, &a_increments, *p, *delta)?;
            let mut csv = String::from("t,v_pd,u_pd\n");
            for ((t, v), u) in series.t_grid.iter().zip(&series.v_pd).zip(&series.u_pd) {
                csv.push_str(&format!("{t},{v},{u}\n"));
            }
            fs::write(&out, csv)?;
            info(cli, &format!("wrote {}", out.display()));
            Ok(0)
        }
        Command::Scheme { spec, n, reps, p } => run_scheme(cli, spec.as_deref(), *n, *reps, *p),
        Command::Limitlaw { action } => {
            let LimitLawAction::Sample { law, t, c, n } = action;
            let out = require_out(cli, "draws CSV")?;
            let draws = limit_law_draws(*law, *t, *c, *n, cli.seed)?;
            let mut csv = String::from("value\n");
            for d in draws {
                csv.push_str(&format!("{d}\n"));
            }
            fs::write(&out, csv)?;
            info(cli, &format!("wrote {}", out.display()));
            Ok(0)
        }
        Command::Verify { experiment, config, reps, n, ks_threshold, cdf_out } => {
            let out = require_out(cli, "report")?;
            let mut cfg = load_verify_config(experiment.as_deref(), config.as_deref())?;
            cfg.master_seed = cli.seed;
            if let Some(r) = reps {
                cfg.replications = *r;
            }
            if let Some(steps) = n {
                cfg.steps = *steps;
            }
            if let Some(t) = ks_threshold {
                cfg.ks_threshold = Some(*t);
            }
            let (report, samples) = run_experiment_with_samples(&cfg)?;
            fs::write(&out, report.to_json_pretty())?;
            if let Some(cdf_path) = cdf_out {
                let samples = samples.ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "{} produces no law comparison to plot",
                        report.experiment
                    ))
                })?;
                fs::write(cdf_path, cdf_pairs_csv(&samples)?)?;
            }
            let verdict = if report.passed { "passed" } else { "FAILED" };
            info(
                cli,
                &format!(
                    "{}: {verdict} in {:.1}s, report at {}",
                    report.experiment,
                    report.runtime_seconds,
                    out.display()
                ),
            );
            Ok(if report.passed { 0 } else { 2 })
        }
    }
}

fn info(cli: &Cli, message: &str) {
    if !cli.quiet {
        println!("{message}");
    }
}

fn require_out(cli: &Cli, what: &str) -> Result<PathBuf> {
    cli.out
        .clone()
        .ok_or_else(|| Error::InvalidParameter(format!("--out is required for the {what}")))
}

/// Config file shape shared by `scheme` and `verify`: every field optional,
/// merged over the experiment defaults, with CLI flags applied last.
#[derive(Debug, Default, Serialize, Deserialize)]
struct FileConfig {
    #[serde(default)]
    experiment: Option<Experiment>,
    #[serde(default)]
    master_seed: Option<u64>,
    #[serde(default)]
    replications: Option<usize>,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    ks_threshold: Option<f64>,
    #[serde(default)]
    model: Option<VolModelSpec>,
    #[serde(default)]
    params: Option<Params>,
}

fn read_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => toml::from_str(&fs::read_to_string(p)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", p.display()))),
    }
}

fn load_verify_config(experiment_flag: Option<&str>, config: Option<&Path>) -> Result<McConfig> {
    let file = read_file_config(config)?;
    let experiment = match experiment_flag {
        Some(name) => Experiment::from_name(name)?,
        None => file.experiment.ok_or_else(|| {
            Error::InvalidParameter("an experiment is required (--experiment or config file)".into())
        })?,
    };
    let mut cfg = McConfig::default_for(experiment);
    if let Some(seed) = file.master_seed {
        cfg.master_seed = seed;
    }
    if let Some(r) = file.replications {
        cfg.replications = r;
    }
    if let Some(s) = file.steps {
        cfg.steps = s;
    }
    if file.ks_threshold.is_some() {
        cfg.ks_threshold = file.ks_threshold;
    }
    if let Some(params) = file.params {
        merge_params(&mut cfg.params, params);
    }
    if file.model.is_some() {
        cfg.params.model = file.model;
    }
    Ok(cfg)
}

fn merge_params(base: &mut Params, over: Params) {
    macro_rules! take {
        ($($field:ident),*) => {
            $(if over.$field.is_some() { base.$field = over.$field; })*
        };
    }
    take!(potential, model, p, delta, decay_steps, steps_hi, mean_replications, on_axis_target);
}

fn model_from_spec(spec: Option<&Path>) -> Result<VolModelSpec> {
    let file = read_file_config(spec)?;
    Ok(file.model.unwrap_or_else(|| VolModelSpec::constant(1.0)))
}

fn dobrushin_report(pot: &LatticePotential) -> Result<String> {
    #[derive(Serialize)]
    struct Report {
        lo: i64,
        hi: i64,
        mass: f64,
        boundary_c: f64,
        sum_squares: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        mu_v: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        mu_v_formulas: Option<crate::lattice::MuVFormulas>,
        #[serde(skip_serializing_if = "Option::is_none")]
        c_v_sq: Option<f64>,
        tables: Tables,
    }
    #[derive(Serialize)]
    struct Tables {
        h: Vec<(i64, f64)>,
        g: Vec<(i64, f64)>,
        v: Vec<(i64, f64)>,
        #[serde(skip_serializing_if = "Option::is_none")]
        cross: Option<Vec<(i64, f64)>>,
    }
    let sys = DobrushinSystem::new(pot.clone());
    let report = Report {
        lo: pot.lo(),
        hi: pot.hi(),
        mass: sys.mass(),
        boundary_c: sys.c(),
        sum_squares: pot.sum_squares(),
        mu_v: sys.mu_v(),
        mu_v_formulas: sys.has_zero_mass().then(|| mu_v_formulas(pot)).transpose()?,
        c_v_sq: sys.has_zero_mass().then(|| c_v_squared(pot)).transpose()?,
        tables: Tables {
            h: sys.h().to_pairs(),
            g: sys.g().to_pairs(),
            v: sys.v().to_pairs(),
            cross: sys
                .has_zero_mass()
                .then(|| cross_bracket_g(pot).map(|w: WindowFn| w.to_pairs()))
                .transpose()?,
        },
    };
    Ok(serde_json::to_string_pretty(&report).expect("report serializes"))
}

fn simulate_csv(
    cli: &Cli,
    process: Process,
    n: usize,
    spec: Option<&Path>,
    noise: Noise,
) -> Result<String> {
    match process {
        Process::Srw => {
            let walk = simulate_srw(n, cli.seed)?;
            let mut csv = String::from("t,value\n");
            for (k, s) in walk.positions().iter().enumerate() {
                csv.push_str(&format!("{k},{s}\n"));
            }
            Ok(csv)
        }
        Process::Comb => {
            let path = simulate_comb(n, cli.seed)?;
            // Also emit the rescaled pair on the full grid for plotting.
            let rescaled = comb_rescaled(&path, n)?;
            let mut csv = String::from("t,c1,c2,a1,xi1,xi2\n");
            for k in 0..=n {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    rescaled.t_grid[k],
                    path.c1()[k],
                    path.c2()[k],
                    path.a1()[k],
                    rescaled.xi1[k],
                    rescaled.xi2[k],
                ));
            }
            Ok(csv)
        }
        Process::Stochint => {
            let model = model_from_spec(spec)?;
            let sigma = sigma_path(&model, n, cli.seed)?;
            let dist = match noise {
                Noise::Rademacher => NoiseDistribution::Rademacher,
                Noise::Gaussian => NoiseDistribution::Gaussian,
            };
            // The volatility lane and the driving-noise lane split off the
            // same command seed inside the two simulators.
            let out = simulate_discrete_stoch_integral(&sigma, dist, n, cli.seed)?;
            let mut csv = String::from("t,m,v,b\n");
            for j in 0..out.m.len() {
                let t = j as f64 * out.m.delta();
                csv.push_str(&format!(
                    "{t},{},{},{}\n",
                    out.m.values()[j],
                    out.v.values()[j],
                    out.b.values()[j]
                ));
            }
            Ok(csv)
        }
        Process::Volmodel => {
            let model = model_from_spec(spec)?;
            let out = simulate_vol_model(&model, n, cli.seed)?;
            let mut csv = String::from("t,m,a,r\n");
            let mut a_total = 0.0;
            csv.push_str("0,0,0,0\n");
            for j in 1..out.m.len() {
                let t = j as f64 * out.m.delta();
                a_total += out.a_increments[j - 1];
                csv.push_str(&format!(
                    "{t},{},{a_total},{}\n",
                    out.m.values()[j],
                    out.r.values()[j]
                ));
            }
            Ok(csv)
        }
    }
}

/// Read the volmodel CSV `t,m,a[,r]`, returning the path of `m` and the
/// per-step increments of the clock column.
fn read_model_csv(path: &Path) -> Result<(SamplePath, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "t" || cols[1] != "m" || cols[2] != "a" {
        return Err(Error::Parse(format!(
            "expected volmodel CSV with header t,m,a[,r]; found `{header}` \
             (a clock column is required for the compensator variation)"
        )));
    }
    let mut ts = Vec::new();
    let mut ms = Vec::new();
    let mut a_cum = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::Parse(format!("row {}: expected 3+ columns", idx + 2)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", idx + 2)))
        };
        ts.push(parse(fields[0])?);
        ms.push(parse(fields[1])?);
        a_cum.push(parse(fields[2])?);
    }
    if ts.len() < 2 {
        return Err(Error::Parse("need at least two rows".into()));
    }
    let delta = ts[1] - ts[0];
    for (k, pair) in ts.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - delta).abs() > 1e-9 * delta.max(1e-12) {
            return Err(Error::Parse(format!("non-uniform grid between rows {} and {}", k + 2, k + 3)));
        }
    }
    let a_increments: Vec<f64> = a_cum.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((SamplePath::new(delta, ms)?, a_increments))
}

fn run_scheme(cli: &Cli, spec: Option<&Path>, n: usize, reps: usize, p: f64) -> Result<i32> {
    let out = require_out(cli, "scheme output")?;
    let file = read_file_config(spec)?;
    let model = file.model.clone().unwrap_or_else(|| VolModelSpec::constant(1.0));
    if reps <= 1 {
        let paths = simulate_vol_model(&model, n, cli.seed)?;
        let drift = (model.mu_drift != 0.0 || model.beta != 0.0)
            .then_some((model.mu_drift, model.beta));
        let series = scheme_series(&paths.m, &paths.a_increments, n, p, drift)?;
        let mut csv = String::new();
        csv.push_str(if series.y_n.is_some() {
            "t,x_n,bracket,v_n,y_n\n"
        } else {
            "t,x_n,bracket,v_n\n"
        });
        for (i, t) in series.t_grid.iter().enumerate() {
            match &series.y_n {
                Some(y_n) => csv.push_str(&format!(
                    "{t},{},{},{},{}\n",
                    series.x_n[i], series.bracket[i], series.v_n[i], y_n[i]
                )),
                None => csv.push_str(&format!(
                    "{t},{},{},{}\n",
                    series.x_n[i], series.bracket[i], series.v_n[i]
                )),
            }
        }
        fs::write(&out, csv)?;
        info(cli, &format!("wrote {}", out.display()));
        return Ok(0);
    }

    // Replicated run: delegate to the matching verification experiment.
    let experiment = if p == 2.0 {
        if model.mu_drift != 0.0 || model.beta != 0.0 {
            Experiment::DriftRobustness
        } else {
            Experiment::RealizedVarClt
        }
    } else {
        Experiment::PowerVarCltP
    };
    let mut cfg = McConfig::default_for(experiment);
    cfg.master_seed = cli.seed;
    cfg.replications = reps;
    cfg.steps = n;
    cfg.params.model = Some(model);
    if experiment == Experiment::PowerVarCltP {
        cfg.params.p = Some(p);
    }
    if let Some(t) = file.ks_threshold {
        cfg.ks_threshold = Some(t);
    }
    let report = run_experiment(&cfg)?;
    fs::write(&out, report.to_json_pretty())?;
    let verdict = if report.passed { "passed" } else { "FAILED" };
    info(cli, &format!("{}: {verdict}, report at {}", report.experiment, out.display()));
    Ok(if report.passed { 0 } else { 2 })
}

/// CSV of the empirical CDF against the reference law at the sorted sample
/// points: the oracle's empirical CDF for two-sample experiments, the
/// standard normal CDF otherwise.
fn cdf_pairs_csv(samples: &ExperimentSamples) -> Result<String> {
    let mut sorted = samples.sample.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite statistic"));
    let oracle_cdf = samples.oracle.as_deref().map(empirical_cdf).transpose()?;
    let n = sorted.len() as f64;
    let mut csv = String::from("value,sample_cdf,reference_cdf\n");
    for (i, &v) in sorted.iter().enumerate() {
        let reference = match &oracle_cdf {
            Some(f) => f.value(v),
            None => standard_normal_cdf(v),
        };
        csv.push_str(&format!("{v},{},{reference}\n", (i + 1) as f64 / n));
    }
    Ok(csv)
}

fn limit_law_draws(law: Law, t: f64, c: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("draw count must be >= 1".into()));
    }
    match law {
        Law::Localtime => {
            let mut rng = stream_rng(seed, lane::MAIN);
            (0..n).map(|_| sample_local_time(t, &mut rng)).collect()
        }
        Law::Invlocaltime => {
            let mut rng = stream_rng(seed, lane::MAIN);
            (0..n).map(|_| sample_inverse_local_time(t, &mut rng)).collect()
        }
        Law::Mixture => {
            let mut sampler = MixtureSampler::new(MixtureLawSpec::new(c, t)?, seed)?;
            Ok(sampler.draw_many(n))
        }
    }
}
