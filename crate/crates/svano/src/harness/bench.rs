//! Benchmark grid: run every configured problem under every configured
//! algorithm and render the results as CSV and JSON.
//!
//! The configuration format is deliberately flat: one `key = value` pair per
//! line, `#` starts a comment. Unknown keys are errors so that typos cannot
//! silently fall back to defaults. Randomized algorithms honor `trials`: the
//! cell is rerun with seeds `seed, seed+1, ...` and the row reports the run
//! with the median final value (deterministic algorithms ignore extra trials).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::{run, FrameworkParams, HBarChoice, HarnessError, RunLimits, RunRecord, YRule};
use crate::problems::{by_name, registry, ProblemSpec};
use crate::strategies::{
    BfgsStrategy, BundleConfig, BundleStrategy, GsStrategy, RadiusPolicy, SamplingConfig,
    StepStrategy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bfgs,
    Bundle,
    Gs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Bfgs, Algorithm::Bundle, Algorithm::Gs];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Bfgs => "bfgs",
            Algorithm::Bundle => "bundle",
            Algorithm::Gs => "gs",
        }
    }

    /// Whether reruns with different seeds can change the result.
    pub fn is_randomized(&self) -> bool {
        matches!(self, Algorithm::Gs)
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bfgs" => Ok(Algorithm::Bfgs),
            "bundle" => Ok(Algorithm::Bundle),
            "gs" | "sampling" => Ok(Algorithm::Gs),
            other => Err(format!("unknown algorithm '{other}' (expected bfgs, bundle, or gs)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Problem names; empty means the full registry.
    pub problems: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub n: usize,
    pub seed: u64,
    pub trials: usize,
    pub params: FrameworkParams,
    pub radius: RadiusPolicy,
    pub limits: RunLimits,
    pub bundle: BundleConfig,
    /// Fresh samples per gradient-sampling iteration; `None` means `2 n`.
    pub sample_count: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            problems: Vec::new(),
            algorithms: Algorithm::ALL.to_vec(),
            n: 50,
            seed: 1,
            trials: 1,
            params: FrameworkParams::default(),
            radius: RadiusPolicy::default(),
            limits: RunLimits::default(),
            bundle: BundleConfig::default(),
            sample_count: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| {
        HarnessError::Config(format!("line {line}: invalid value '{value}' for {key}: {e}"))
    })
}

fn parse_float(key: &str, value: &str, line: usize) -> Result<f64, HarnessError> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("inf") || v.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    parse_num::<f64>(key, v, line)
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, HarnessError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(HarnessError::Config(format!(
            "line {line}: invalid boolean '{other}' for {key}"
        ))),
    }
}

/// `identity`, `bb` (Barzilai-Borwein), or `scaled:<c>`.
pub fn parse_h_bar(value: &str) -> Result<HBarChoice, String> {
    let v = value.trim().to_ascii_lowercase();
    if v == "identity" {
        Ok(HBarChoice::Identity)
    } else if v == "bb" || v == "barzilai-borwein" {
        Ok(HBarChoice::BarzilaiBorwein)
    } else if let Some(c) = v.strip_prefix("scaled:") {
        c.trim()
            .parse()
            .map(HBarChoice::Scaled)
            .map_err(|e| format!("invalid h_bar scale '{c}': {e}"))
    } else {
        Err(format!("unknown h_bar '{value}' (identity, bb, or scaled:<c>)"))
    }
}

/// Parses the flat `key = value` configuration format.
pub fn parse_config(text: &str) -> Result<BenchConfig, HarnessError> {
    let mut cfg = BenchConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(HarnessError::Config(format!(
                "line {line}: expected 'key = value', found '{content}'"
            )));
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        match key.as_str() {
            "problems" => {
                if value.eq_ignore_ascii_case("all") {
                    cfg.problems.clear();
                } else {
                    cfg.problems = value.split(',').map(|p| p.trim().to_string()).collect();
                }
            }
            "algorithms" => {
                if value.eq_ignore_ascii_case("all") {
                    cfg.algorithms = Algorithm::ALL.to_vec();
                } else {
                    cfg.algorithms = value
                        .split(',')
                        .map(|a| {
                            a.parse().map_err(|e| {
                                HarnessError::Config(format!("line {line}: {e}"))
                            })
                        })
                        .collect::<Result<_, _>>()?;
                }
            }
            "n" => cfg.n = parse_num(&key, value, line)?,
            "seed" => cfg.seed = parse_num(&key, value, line)?,
            "trials" => cfg.trials = parse_num(&key, value, line)?,
            "alpha" => cfg.params.alpha = parse_float(&key, value, line)?,
            "eta" => cfg.params.eta = parse_float(&key, value, line)?,
            "theta" => cfg.params.theta = parse_float(&key, value, line)?,
            "r" => cfg.bundle.r = parse_float(&key, value, line)?,
            "delta1" => cfg.radius.delta1 = parse_float(&key, value, line)?,
            "tau" => cfg.radius.tau = parse_float(&key, value, line)?,
            "upsilon1" => cfg.radius.upsilon[0] = parse_float(&key, value, line)?,
            "upsilon2" => cfg.radius.upsilon[1] = parse_float(&key, value, line)?,
            "upsilon3" => cfg.radius.upsilon[2] = parse_float(&key, value, line)?,
            "y_rule" => {
                cfg.params.y_rule = match value.to_ascii_lowercase().as_str() {
                    "subgradient" | "subgradient-difference" | "default" => {
                        YRule::SubgradientDifference
                    }
                    "aggregate" | "aggregate-difference" | "convex-combination" => {
                        YRule::AggregateDifference
                    }
                    other => {
                        return Err(HarnessError::Config(format!(
                            "line {line}: unknown y_rule '{other}'"
                        )))
                    }
                }
            }
            "h_bar" => {
                cfg.params.h_bar = parse_h_bar(value)
                    .map_err(|e| HarnessError::Config(format!("line {line}: {e}")))?;
            }
            "verification" => cfg.params.verification = parse_bool(&key, value, line)?,
            "max_iters" => cfg.limits.max_iters = parse_num(&key, value, line)?,
            "wall_clock_secs" => cfg.limits.wall_clock_secs = parse_float(&key, value, line)?,
            "termination_factor" => {
                cfg.limits.termination_factor = parse_float(&key, value, line)?
            }
            "termination_delta" => cfg.limits.termination_delta = parse_float(&key, value, line)?,
            "sample_count" => cfg.sample_count = Some(parse_num(&key, value, line)?),
            other => {
                return Err(HarnessError::Config(format!(
                    "line {line}: unknown key '{other}'"
                )))
            }
        }
    }
    if cfg.trials == 0 {
        return Err(HarnessError::Config("trials must be at least 1".to_string()));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub problem: String,
    pub algorithm: Algorithm,
    /// Seeds actually run for this cell.
    pub seeds: Vec<u64>,
    /// The reported run (median final value across trials), absent on failure.
    pub record: Option<RunRecord>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

fn build_strategy(alg: Algorithm, cfg: &BenchConfig, seed: u64) -> Box<dyn StepStrategy> {
    match alg {
        Algorithm::Bfgs => Box::new(BfgsStrategy::new(cfg.params.alpha)),
        Algorithm::Bundle => {
            Box::new(BundleStrategy::nonconvex(cfg.params.alpha, cfg.bundle.clone()))
        }
        Algorithm::Gs => Box::new(GsStrategy::new(SamplingConfig {
            seed,
            sample_count: cfg.sample_count,
            ..SamplingConfig::default()
        })),
    }
}

fn run_cell(alg: Algorithm, spec: &ProblemSpec, cfg: &BenchConfig) -> BenchRow {
    let trials = if alg.is_randomized() { cfg.trials } else { 1 };
    let seeds: Vec<u64> = (0..trials as u64).map(|t| cfg.seed + t).collect();
    let mut successes: Vec<RunRecord> = Vec::new();
    let mut first_error: Option<String> = None;
    for &seed in &seeds {
        let mut strategy = build_strategy(alg, cfg, seed);
        let result = run(
            spec,
            spec.name(),
            spec.starting_point(),
            strategy.as_mut(),
            &cfg.params,
            &cfg.radius,
            &cfg.limits,
            false,
        );
        match result {
            Ok(record) => successes.push(record),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e.to_string());
                }
            }
        }
    }
    // Median by final value: stable against one lucky or unlucky trial.
    successes.sort_by(|a, b| a.f_end.total_cmp(&b.f_end));
    let record = if successes.is_empty() {
        None
    } else {
        Some(successes.swap_remove((successes.len() - 1) / 2))
    };
    let error = if record.is_none() { first_error } else { None };
    BenchRow {
        problem: spec.name().to_string(),
        algorithm: alg,
        seeds,
        record,
        error,
    }
}

/// Runs the full grid, algorithm-major, and returns the rows in input order.
pub fn benchmark(cfg: &BenchConfig) -> Result<BenchReport, HarnessError> {
    let specs: Vec<ProblemSpec> = if cfg.problems.is_empty() {
        registry(cfg.n).map_err(|e| HarnessError::Config(e.to_string()))?
    } else {
        cfg.problems
            .iter()
            .map(|name| by_name(name, cfg.n).map_err(|e| HarnessError::Config(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let cells: Vec<(Algorithm, &ProblemSpec)> = cfg
        .algorithms
        .iter()
        .flat_map(|&alg| specs.iter().map(move |spec| (alg, spec)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(alg, spec)| run_cell(alg, spec, cfg))
        .collect();
    Ok(BenchReport { rows })
}

/// `+x.xxe+XX` scientific notation with a signed two-digit exponent.
pub fn format_scientific(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "+0.00e+00".to_string();
    }
    let s = format!("{x:+.2e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponential format contains 'e'");
    let e: i32 = exponent.parse().expect("exponent is an integer");
    format!("{mantissa}e{e:+03}")
}

pub fn render_csv(report: &BenchReport) -> String {
    let mut out = String::from("Name,Exit,delta_end,f_end,iter,func,grad,subs\n");
    for row in &report.rows {
        let name = format!("{}:{}", row.algorithm.name(), row.problem);
        match &row.record {
            Some(rec) => {
                let _ = writeln!(
                    out,
                    "{name},{},{},{},{},{},{},{}",
                    rec.exit.as_str(),
                    format_scientific(rec.delta_end),
                    format_scientific(rec.f_end),
                    rec.iters,
                    rec.func_evals,
                    rec.grad_evals,
                    rec.subproblem_solves,
                );
            }
            None => {
                let _ = writeln!(out, "{name},Error,,,,,,");
            }
        }
    }
    out
}

pub fn write_outputs(
    report: &BenchReport,
    csv_path: Option<&Path>,
    json_path: Option<&Path>,
) -> Result<(), HarnessError> {
    if let Some(path) = csv_path {
        std::fs::write(path, render_csv(report))?;
    }
    if let Some(path) = json_path {
        let json = serde_json::to_string_pretty(report)
            .map_err(|e| HarnessError::Config(format!("serialization failed: {e}")))?;
        std::fs::write(path, json)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_format_matches_the_report_style() {
        assert_eq!(format_scientific(9.765625e-5), "+9.77e-05");
        assert_eq!(format_scientific(-69.3), "-6.93e+01");
        assert_eq!(format_scientific(0.1), "+1.00e-01");
        assert_eq!(format_scientific(0.0), "+0.00e+00");
        assert_eq!(format_scientific(-2.22e-16), "-2.22e-16");
        assert_eq!(format_scientific(1.0e+100), "+1.00e+100");
    }

    #[test]
    fn config_parser_round_trips_the_main_keys() {
        let text = "\
# grid
problems = maxq, mxhilb
algorithms = bfgs, gs
n = 10
seed = 42
trials = 3
theta = inf
delta1 = 0.8
verification = true
";
        let cfg = parse_config(text).expect("config parses");
        assert_eq!(cfg.problems, vec!["maxq".to_string(), "mxhilb".to_string()]);
        assert_eq!(cfg.algorithms, vec![Algorithm::Bfgs, Algorithm::Gs]);
        assert_eq!(cfg.n, 10);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.trials, 3);
        assert!(cfg.params.theta.is_infinite());
        assert_eq!(cfg.radius.delta1, 0.8);
        assert!(cfg.params.verification);
    }

    #[test]
    fn config_parser_rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            parse_config("bogus = 1"),
            Err(HarnessError::Config(msg)) if msg.contains("unknown key")
        ));
        assert!(matches!(
            parse_config("alpha = fast"),
            Err(HarnessError::Config(msg)) if msg.contains("invalid value")
        ));
        assert!(matches!(
            parse_config("just a line"),
            Err(HarnessError::Config(msg)) if msg.contains("expected 'key = value'")
        ));
    }
}
