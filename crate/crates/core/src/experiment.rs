//! Subcommand logic behind the `mechlab` binary. Each command turns an
//! [`ExperimentConfig`] into output bytes and an exit code; identical
//! configs always produce identical bytes.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_lemma_random_order, check_lemma_revenue, check_sampling_concentration, empirical_ratio_observed,
    opt_or_bound, standard_deviations, truthfulness_sweep_with, DoubledPriceOracle, OptKind, RatioReport,
    SupportedAllocation, Violation,
};
use crate::auctions::{greedy_allocation, DemandOracle, ExactDemand};
use crate::error::Error;
use crate::generate::{generate, GeneratorSpec};
use crate::instance::Instance;
use crate::limits::BruteLimits;
use crate::mechanism::{run_mechanism, CoinRecord, MechanismOutcome, MechanismParams};
use crate::rational::Rational;
use crate::valuations::demand_bruteforce;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_RUN_TRIALS: usize = 100;
pub const DEFAULT_CHECK_SEEDS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandError {
    pub code: i32,
    pub message: String,
}

impl CommandError {
    pub fn usage(message: impl Into<String>) -> Self {
        CommandError { code: EXIT_USAGE, message: message.into() }
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CommandError {}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        CommandError::usage(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub bytes: Vec<u8>,
    pub code: i32,
}

impl CommandOutput {
    fn ok(bytes: Vec<u8>) -> Self {
        CommandOutput { bytes, code: EXIT_OK }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CommandError;

    fn from_str(s: &str) -> Result<Self, CommandError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(CommandError::usage(format!("unknown format `{s}` (expected json or csv)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceSource {
    File(PathBuf),
    Generate(GeneratorSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub source: Option<InstanceSource>,
    /// Trials for `run`/`eval`, coin seeds for `check`.
    pub trials: Option<usize>,
    pub seed: u64,
    pub alpha: Option<usize>,
    pub bins: Option<usize>,
    pub grand_bundle_prob: Option<Rational>,
    pub termination_prob: Option<Rational>,
    pub coins: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Route every demand query through [`DoubledPriceOracle`].
    pub inject_fault: bool,
}

impl ExperimentConfig {
    pub fn instance(&self) -> Result<Instance, CommandError> {
        match &self.source {
            None => Err(CommandError::usage("no instance given: pass --instance or --family/--n/--m")),
            Some(InstanceSource::File(path)) => read_instance(path),
            Some(InstanceSource::Generate(spec)) => Ok(generate(spec)?),
        }
    }

    pub fn params(&self, m: usize) -> Result<MechanismParams, CommandError> {
        Ok(MechanismParams::with_overrides(m, self.alpha, self.bins, self.grand_bundle_prob, self.termination_prob)?)
    }

    fn trials_or(&self, default: usize) -> Result<usize, CommandError> {
        match self.trials {
            Some(0) => Err(CommandError::usage("--trials must be at least 1")),
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }

    fn oracle(&self) -> &'static dyn DemandOracle {
        if self.inject_fault {
            &DoubledPriceOracle
        } else {
            &ExactDemand
        }
    }

    fn coin_record(&self) -> Result<Option<CoinRecord>, CommandError> {
        let Some(path) = &self.coins else { return Ok(None) };
        let text = read_file(path)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CommandError::usage(format!("{}: invalid coin record: {e}", path.display())))
    }

    /// Writes `bytes` to `--out`, or returns them for stdout.
    pub fn emit(&self, bytes: &[u8]) -> Result<bool, CommandError> {
        match &self.out {
            Some(path) => std::fs::write(path, bytes)
                .map(|_| true)
                .map_err(|e| CommandError::usage(format!("cannot write {}: {e}", path.display()))),
            None => Ok(false),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CommandError> {
    std::fs::read_to_string(path).map_err(|e| CommandError::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_instance(path: &Path) -> Result<Instance, CommandError> {
    Instance::from_json(&read_file(path)?).map_err(|e| CommandError::usage(format!("{}: {e}", path.display())))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

fn csv_bytes<T: Serialize>(rows: &[T], empty_header: &str) -> Result<Vec<u8>, CommandError> {
    if rows.is_empty() {
        return Ok(format!("{empty_header}\n").into_bytes());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CommandError::usage(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CommandError::usage(e.to_string()))
}

const TRIAL_HEADER: &str = "seed,branch,welfare_num,welfare_den,opt,ratio";
const VIOLATION_HEADER: &str = "seed,bidder,deviation,truthful_utility,deviant_utility";

pub fn cmd_gen(spec: &GeneratorSpec) -> Result<CommandOutput, CommandError> {
    let mut bytes = generate(spec)?.to_json().into_bytes();
    bytes.push(b'\n');
    Ok(CommandOutput::ok(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Absent when the coins were supplied rather than drawn.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub coins: CoinRecord,
    pub outcome: MechanismOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<RatioReport>,
    pub trials: Vec<TrialRecord>,
}

/// Seeded trials with full transcripts, or a single replay when `coins`
/// is set.
pub fn cmd_run(config: &ExperimentConfig) -> Result<CommandOutput, CommandError> {
    let instance = config.instance()?;
    let params = config.params(instance.m)?;
    if let Some(coins) = config.coin_record()? {
        if config.trials.is_some_and(|t| t != 1) {
            return Err(CommandError::usage("--coins replays exactly one trial"));
        }
        let outcome = run_mechanism(&instance, &params, &coins)?;
        let out = RunOutput { report: None, trials: vec![TrialRecord { seed: None, coins, outcome }] };
        return match config.format {
            Format::Json => Ok(CommandOutput::ok(json_bytes(&out))),
            Format::Csv => Err(CommandError::usage("replayed runs are only available as json")),
        };
    }
    let trials = config.trials_or(DEFAULT_RUN_TRIALS)?;
    let opt = opt_or_bound(&instance)?;
    let keep_rows = config.format == Format::Csv;
    let mut records = Vec::new();
    let report = empirical_ratio_observed(&instance, &params, trials, config.seed, opt, keep_rows, |s, out| {
        if !keep_rows {
            records.push(TrialRecord { seed: Some(s), coins: out.transcript.coins.clone(), outcome: out.clone() });
        }
    })?;
    let bytes = match config.format {
        Format::Json => json_bytes(&RunOutput { report: Some(report), trials: records }),
        Format::Csv => csv_bytes(&report.rows, TRIAL_HEADER)?,
    };
    Ok(CommandOutput::ok(bytes))
}

/// Ratio report only; csv gives one row per trial.
pub fn cmd_eval(config: &ExperimentConfig) -> Result<CommandOutput, CommandError> {
    let instance = config.instance()?;
    let params = config.params(instance.m)?;
    let trials = config.trials_or(DEFAULT_RUN_TRIALS)?;
    let opt = opt_or_bound(&instance)?;
    let keep_rows = config.format == Format::Csv;
    let report = empirical_ratio_observed(&instance, &params, trials, config.seed, opt, keep_rows, |_, _| {})?;
    let bytes = match config.format {
        Format::Json => json_bytes(&report),
        Format::Csv => csv_bytes(&report.rows, TRIAL_HEADER)?,
    };
    Ok(CommandOutput::ok(bytes))
}

/// Reruns one mechanism execution from a saved coin record.
pub fn cmd_replay(config: &ExperimentConfig) -> Result<CommandOutput, CommandError> {
    let instance = config.instance()?;
    let params = config.params(instance.m)?;
    let coins = config.coin_record()?.ok_or_else(|| CommandError::usage("replay needs --coins"))?;
    if config.format == Format::Csv {
        return Err(CommandError::usage("replay output is only available as json"));
    }
    Ok(CommandOutput::ok(json_bytes(&run_mechanism(&instance, &params, &coins)?)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    /// Any failure is a bug; fails the check.
    Deterministic,
    /// Monte Carlo estimate; reported with a z-score, never fails the check.
    Statistical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub kind: SuiteKind,
    pub status: SuiteStatus,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z: Option<f64>,
}

impl SuiteResult {
    fn deterministic(name: &str, cases: usize, failures: usize, detail: String) -> Self {
        SuiteResult {
            name: name.into(),
            kind: SuiteKind::Deterministic,
            status: if failures == 0 { SuiteStatus::Pass } else { SuiteStatus::Fail },
            cases,
            failures,
            detail,
            z: None,
        }
    }

    fn skipped(name: &str, kind: SuiteKind, detail: String) -> Self {
        SuiteResult { name: name.into(), kind, status: SuiteStatus::Skipped, cases: 0, failures: 0, detail, z: None }
    }

    fn statistical(name: &str, cases: usize, holds: bool, z: f64, detail: String) -> Self {
        SuiteResult {
            name: name.into(),
            kind: SuiteKind::Statistical,
            status: if holds { SuiteStatus::Pass } else { SuiteStatus::Fail },
            cases,
            failures: usize::from(!holds),
            detail,
            z: z.is_finite().then_some(z),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub n: usize,
    pub m: usize,
    pub seeds: usize,
    pub seed: u64,
    pub fault_injected: bool,
    pub suites: Vec<SuiteResult>,
    pub violations: Vec<Violation>,
    /// No deterministic suite failed.
    pub passed: bool,
}

const DEMAND_CASES_PER_BIDDER: usize = 50;
const REVENUE_ALLOCATIONS: usize = 20;
const RANDOM_ORDER_TRIALS: usize = 500;
const CONCENTRATION_TRIALS: usize = 2000;

fn random_prices(rng: &mut ChaCha8Rng, instance: &Instance, i: usize) -> Vec<Rational> {
    let top = instance.valuation(i).grand_value().floor().max(1) as i64;
    (0..instance.m).map(|_| Rational::new(rng.gen_range(0..=4 * top) as i128, 4)).collect()
}

fn suite_demand(config: &ExperimentConfig, instance: &Instance) -> Result<SuiteResult, CommandError> {
    let name = "demand_oracle";
    let cap = BruteLimits::current().demand_items;
    if instance.m > cap {
        return Ok(SuiteResult::skipped(
            name,
            SuiteKind::Deterministic,
            format!("m = {} above the exhaustive cap {cap}", instance.m),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut cases, mut failures) = (0, 0);
    let mut first = String::new();
    for i in 0..instance.n() {
        for _ in 0..DEMAND_CASES_PER_BIDDER {
            let p = random_prices(&mut rng, instance, i);
            let v = instance.valuation(i);
            let got = config.oracle().demand(v, &p)?;
            let want = demand_bruteforce(v, &p)?;
            cases += 1;
            if got != want {
                failures += 1;
                if first.is_empty() {
                    first =
                        format!("; first mismatch: bidder {i} got {:?}, exhaustive {:?}", got.items(), want.items());
                }
            }
        }
    }
    Ok(SuiteResult::deterministic(name, cases, failures, format!("{failures} mismatches{first}")))
}

fn suite_revenue(config: &ExperimentConfig, instance: &Instance) -> Result<SuiteResult, CommandError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0001);
    let (mut cases, mut failures) = (0, 0);
    let mut worst: Option<Rational> = None;
    for _ in 0..REVENUE_ALLOCATIONS {
        let sa = SupportedAllocation::random(instance, &mut rng);
        let ascending: Vec<usize> = (0..instance.n()).collect();
        let mut shuffled = ascending.clone();
        shuffled.shuffle(&mut rng);
        let descending: Vec<usize> = ascending.iter().rev().copied().collect();
        for order in [ascending, descending, shuffled] {
            let check = check_lemma_revenue(instance, &sa, &order)?;
            cases += 1;
            failures += usize::from(!check.holds);
            worst = Some(worst.map_or(check.slack, |w| w.min(check.slack)));
        }
    }
    let worst = worst.unwrap_or_default();
    Ok(SuiteResult::deterministic("lemma_revenue", cases, failures, format!("minimum slack {worst}")))
}

fn suite_random_order(config: &ExperimentConfig, instance: &Instance) -> Result<SuiteResult, CommandError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0002);
    let sa = SupportedAllocation::random(instance, &mut rng);
    let rep = check_lemma_random_order(instance, &sa, &Rational::new(1, 2), RANDOM_ORDER_TRIALS, config.seed)?;
    Ok(SuiteResult::statistical(
        "lemma_random_order",
        rep.trials,
        rep.holds,
        rep.z,
        format!("mean welfare {:.6} against bound {:.6}", rep.mean_welfare, rep.rhs),
    ))
}

fn suite_concentration(config: &ExperimentConfig, instance: &Instance) -> Result<SuiteResult, CommandError> {
    let alloc = greedy_allocation(instance, &(0..instance.n()).collect::<Vec<_>>());
    let values: Vec<Rational> =
        (0..instance.n()).map(|i| instance.valuation(i).value_unchecked(alloc.bundle(i))).collect();
    let rep = check_sampling_concentration(&values, &Rational::new(1, 2), CONCENTRATION_TRIALS, config.seed)?;
    let z = if rep.stderr > 0.0 { (rep.bound - rep.frequency) / rep.stderr } else { f64::INFINITY };
    Ok(SuiteResult::statistical(
        "sampling_concentration",
        rep.trials,
        rep.holds,
        z,
        format!("failure frequency {:.6} against bound {:.6}", rep.frequency, rep.bound),
    ))
}

/// Oracle equivalence, the revenue lemma, truthfulness, IR, feasibility
/// and the welfare bound as deterministic suites; the random-order lemma
/// and sampling concentration as statistical ones.
pub fn cmd_check(config: &ExperimentConfig) -> Result<CommandOutput, CommandError> {
    let instance = config.instance()?;
    let params = config.params(instance.m)?;
    let seeds = config.trials_or(DEFAULT_CHECK_SEEDS)?;
    let seed_range = (0..seeds).map(|t| crate::random::trial_seed(config.seed, t));

    let mut suites = vec![suite_demand(config, &instance)?, suite_revenue(config, &instance)?];

    let sweep =
        truthfulness_sweep_with(config.oracle(), &instance, &params, &standard_deviations(), seed_range.clone())?;
    suites.push(SuiteResult::deterministic(
        "truthfulness",
        sweep.runs - sweep.seeds,
        sweep.violations.len(),
        format!("{} strict gains over {} deviations", sweep.violations.len(), standard_deviations().len()),
    ));
    suites.push(SuiteResult::deterministic(
        "individual_rationality",
        sweep.seeds * instance.n(),
        sweep.ir_violations.len(),
        format!("{} negative utilities", sweep.ir_violations.len()),
    ));

    let (opt, kind) = opt_or_bound(&instance)?;
    let mut over = 0;
    for s in seed_range {
        let coins = crate::mechanism::draw_coins(instance.n(), &params, s);
        let out = crate::mechanism::run_mechanism_with(config.oracle(), &instance, &params, &coins)?;
        over += usize::from(out.welfare(&instance) > opt);
    }
    let bound_name = if kind == OptKind::Exact { "optimum" } else { "item bound" };
    suites.push(SuiteResult::deterministic(
        "feasibility_and_opt",
        sweep.runs + seeds,
        sweep.infeasible_runs + over,
        format!("{} infeasible runs, {over} runs above the {bound_name} {opt}", sweep.infeasible_runs),
    ));

    suites.push(suite_random_order(config, &instance)?);
    suites.push(suite_concentration(config, &instance)?);

    let passed = suites.iter().all(|s| s.kind == SuiteKind::Statistical || s.status != SuiteStatus::Fail);
    let report = CheckReport {
        n: instance.n(),
        m: instance.m,
        seeds,
        seed: config.seed,
        fault_injected: config.inject_fault,
        suites,
        violations: sweep.violations,
        passed,
    };
    let bytes = match config.format {
        Format::Json => json_bytes(&report),
        Format::Csv => csv_bytes(&report.violations, VIOLATION_HEADER)?,
    };
    Ok(CommandOutput { bytes, code: if passed { EXIT_OK } else { EXIT_CHECK_FAILED } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::Family;

    fn generated(family: Family, n: usize, m: usize) -> ExperimentConfig {
        ExperimentConfig {
            source: Some(InstanceSource::Generate(GeneratorSpec::new(family, n, m, 7))),
            ..Default::default()
        }
    }

    #[test]
    fn missing_source_is_usage_error() {
        let err = cmd_run(&ExperimentConfig::default()).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE);
        let err = cmd_check(&ExperimentConfig::default()).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE);
    }

    #[test]
    fn missing_file_is_usage_error() {
        let cfg = ExperimentConfig {
            source: Some(InstanceSource::File("/nonexistent/instance.json".into())),
            ..Default::default()
        };
        assert_eq!(cmd_eval(&cfg).unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn run_is_deterministic_and_csv_has_rows() {
        let mut cfg = generated(Family::RandomAdditive, 3, 4);
        cfg.trials = Some(5);
        assert_eq!(cmd_run(&cfg).unwrap(), cmd_run(&cfg).unwrap());
        cfg.format = Format::Csv;
        let text = String::from_utf8(cmd_run(&cfg).unwrap().bytes).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with(TRIAL_HEADER));
    }

    #[test]
    fn check_passes_and_fault_fails() {
        let mut cfg = generated(Family::RandomAdditive, 4, 4);
        cfg.trials = Some(10);
        let ok = cmd_check(&cfg).unwrap();
        assert_eq!(ok.code, EXIT_OK, "{}", String::from_utf8_lossy(&ok.bytes));
        cfg.inject_fault = true;
        let bad = cmd_check(&cfg).unwrap();
        assert_eq!(bad.code, EXIT_CHECK_FAILED);
        let report: serde_json::Value = serde_json::from_slice(&bad.bytes).unwrap();
        let truth = report["suites"].as_array().unwrap().iter().find(|s| s["name"] == "truthfulness").unwrap();
        assert_eq!(truth["status"], "fail");
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }
}
