//! Experiment harness behind the `dtrecon` binary: instance generation, the
//! scores / reconstruct / test / learn pipelines and CSV reporting.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boolfn::{
    exact_distance, random_tree_instance, BooleanFunction, Constant, CorruptedOracle, CountingOracle, Dictator,
    Majority, Parity, Point, Sign,
};
use crate::bruteforce::{fourier_scores, TruthTable, TOPDOWN_MAX_N};
use crate::error::{invalid, Error, Result};
use crate::estimators::{estimate_scores_with, NoiseRate};
use crate::learner::{learn, DistanceEstimator, TesterBackend};
use crate::params::{Constants, Params};
use crate::reconstructor::{Mode, Reconstructor};
use crate::tape::{Purpose, RandomTape};
use crate::tester::{tolerant_test, Verdict, DEFAULT_KAPPA};

pub const CSV_HEADER: [&str; 11] = [
    "trial",
    "n",
    "s",
    "eps",
    "delta",
    "rho",
    "queries_total",
    "queries_max_per_answer",
    "distance",
    "verdict",
    "seed",
];

/// Largest `n` for which reported distances are computed exhaustively.
pub const EXHAUSTIVE_REPORT_MAX_N: usize = 20;

/// Built-in target functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FnSpec {
    Constant,
    Dictator,
    Parity(usize),
    Majority(usize),
    RandomTree,
    RandomTable,
}

impl FromStr for FnSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let arity = |rest: &str| {
            rest.parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| format!("bad arity in '{s}'"))
        };
        match s {
            "constant" => Ok(FnSpec::Constant),
            "dictator" => Ok(FnSpec::Dictator),
            "random-tree" => Ok(FnSpec::RandomTree),
            "random-table" => Ok(FnSpec::RandomTable),
            _ => {
                if let Some(rest) = s.strip_prefix("parity-") {
                    Ok(FnSpec::Parity(arity(rest)?))
                } else if let Some(rest) = s.strip_prefix("majority-") {
                    Ok(FnSpec::Majority(arity(rest)?))
                } else {
                    Err(format!(
                        "unknown function '{s}' (expected constant, dictator, parity-K, majority-K, random-tree, random-table)"
                    ))
                }
            }
        }
    }
}

impl fmt::Display for FnSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FnSpec::Constant => f.write_str("constant"),
            FnSpec::Dictator => f.write_str("dictator"),
            FnSpec::Parity(k) => write!(f, "parity-{k}"),
            FnSpec::Majority(k) => write!(f, "majority-{k}"),
            FnSpec::RandomTree => f.write_str("random-tree"),
            FnSpec::RandomTable => f.write_str("random-table"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Exact,
    Tester,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub s: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Fraction of points whose value is flipped.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, env = "DTRECON_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long = "fn", default_value = "random-tree")]
    pub function: FnSpec,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tester rejects when the mismatch exceeds kappa * eps.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,
    /// Soundness constant of the tester inside the learner; defaults to kappa.
    #[arg(long)]
    pub c: Option<f64>,
    /// Constant override, repeatable: c_d, c_p, c_tau, c_q, c_leaf, c_m.
    #[arg(long = "const", value_name = "NAME=VALUE")]
    pub constants: Vec<String>,
    /// Noise rate for `scores`; the parameter-derived rate when absent.
    #[arg(long)]
    pub p: Option<f64>,
    /// Write serialized trees here, one per trial.
    #[arg(long)]
    pub tree_out: Option<PathBuf>,
    /// Uniform points answered per `reconstruct` trial.
    #[arg(long, default_value_t = 1000)]
    pub queries: usize,
    /// Answer every point of the cube in `reconstruct`.
    #[arg(long)]
    pub full: bool,
    #[arg(long, value_enum, default_value_t = Backend::Exact)]
    pub backend: Backend,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Print a generated instance tree.
    Generate(Options),
    /// Estimate all scores of the target.
    Scores(Options),
    /// Run the reconstructor and report closeness and query counts.
    Reconstruct(Options),
    /// Tolerant test; exit code 1 when any trial rejects.
    Test(Options),
    /// Properly learn a tree of size at most s.
    Learn(Options),
}

#[derive(Debug, Clone, Parser)]
#[command(name = "dtrecon", version, about = "Decision-tree reconstruction experiments")]
pub struct ExperimentConfig {
    #[command(subcommand)]
    pub command: Command,
}

impl ExperimentConfig {
    pub fn options(&self) -> &Options {
        match &self.command {
            Command::Generate(o) | Command::Scores(o) | Command::Reconstruct(o) | Command::Test(o) | Command::Learn(o) => o,
        }
    }

    pub fn constants(&self) -> Result<Constants> {
        let mut c = Constants::default();
        for spec in &self.options().constants {
            c.apply_override(spec)?;
        }
        Ok(c)
    }
}

/// Per-trial seeds: one for the instance, one for the algorithm.
pub fn trial_seeds(seed: u64, trial: usize) -> (u64, u64) {
    let mut rng = RandomTape::new(seed).stream_for_key(&(trial as u64).to_le_bytes(), Purpose::Probe);
    (rng.random(), rng.random())
}

/// The target for one trial, corruption applied when `rho > 0`.
pub fn build_instance(
    spec: FnSpec,
    n: usize,
    s: usize,
    rho: f64,
    seed: u64,
) -> Result<Box<dyn BooleanFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k_vars = |k: usize| -> Result<Vec<usize>> {
        if k > n {
            return Err(invalid(format!("{spec} needs at least {k} variables, n = {n}")));
        }
        Ok((0..k).collect())
    };
    let base: Box<dyn BooleanFunction> = match spec {
        FnSpec::Constant => Box::new(Constant::new(n, Sign::Plus)?),
        FnSpec::Dictator => Box::new(Dictator::new(n, 0)?),
        FnSpec::Parity(k) => Box::new(Parity::new(n, k_vars(k)?)?),
        FnSpec::Majority(k) => Box::new(Majority::new(n, k_vars(k)?)?),
        FnSpec::RandomTree => Box::new(random_tree_instance(n, s, &mut rng)?),
        FnSpec::RandomTable => Box::new(TruthTable::random(n, &mut rng)?),
    };
    if rho > 0.0 {
        Ok(Box::new(CorruptedOracle::new(base, rho, rng.random())?))
    } else {
        Ok(base)
    }
}

/// One CSV row plus optional artifacts.
#[derive(Debug, Clone, Default)]
struct TrialResult {
    queries_total: u64,
    queries_max_per_answer: u64,
    distance: Option<f64>,
    verdict: Option<Verdict>,
    extra: Vec<String>,
    tree: Option<String>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|d| d.to_string()).unwrap_or_default()
}

/// Runs the configured pipeline, writing CSV (or the tree, for `generate`)
/// to `out` unless `--out` is given. Returns the process exit code.
pub fn run<W: Write>(config: &ExperimentConfig, out: &mut W) -> Result<i32> {
    let o = config.options();
    let constants = config.constants()?;
    if o.trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    if !(0.0..=1.0).contains(&o.rho) {
        return Err(invalid(format!("--rho {} outside [0, 1]", o.rho)));
    }
    // Validates n, s, eps, delta and the constants up front.
    let params = Params::new(o.n, o.s, o.eps, o.delta, constants)?;

    if let Command::Generate(_) = config.command {
        let (inst_seed, _) = trial_seeds(o.seed, 0);
        let tree = random_tree_instance(o.n, o.s, &mut ChaCha8Rng::seed_from_u64(inst_seed))?;
        let text = tree.serialize() + "\n";
        match &o.out {
            Some(path) => std::fs::write(path, text)?,
            None => out.write_all(text.as_bytes())?,
        }
        return Ok(0);
    }

    let results: Vec<TrialResult> = (0..o.trials)
        .into_par_iter()
        .map(|t| run_trial(config, &params, t))
        .collect::<Result<_>>()?;

    let mut header: Vec<String> = CSV_HEADER.iter().map(|s| s.to_string()).collect();
    match config.command {
        Command::Scores(_) => header.extend((1..=o.n).map(|i| format!("score_{i}"))),
        Command::Learn(_) => header.extend(["tester_calls".into(), "call_budget".into(), "tree_size".into()]),
        _ => {}
    }
    let sink: Box<dyn Write + '_> = match &o.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(&mut *out),
    };
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (t, r) in results.iter().enumerate() {
        let mut row = vec![
            t.to_string(),
            o.n.to_string(),
            o.s.to_string(),
            o.eps.to_string(),
            o.delta.to_string(),
            o.rho.to_string(),
            r.queries_total.to_string(),
            r.queries_max_per_answer.to_string(),
            fmt_opt(r.distance),
            r.verdict.map(|v| v.to_string()).unwrap_or_default(),
            trial_seeds(o.seed, t).1.to_string(),
        ];
        row.extend(r.extra.iter().cloned());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    if let Some(path) = &o.tree_out {
        let text: String = results
            .iter()
            .filter_map(|r| r.tree.as_ref())
            .map(|t| format!("{t}\n"))
            .collect();
        std::fs::write(path, text)?;
    }
    let rejected = results.iter().any(|r| r.verdict == Some(Verdict::Reject));
    Ok(if rejected { Verdict::Reject.exit_code() } else { Verdict::Accept.exit_code() })
}

fn run_trial(config: &ExperimentConfig, params: &Params, trial: usize) -> Result<TrialResult> {
    let o = config.options();
    let (inst_seed, alg_seed) = trial_seeds(o.seed, trial);
    let f = build_instance(o.function, o.n, o.s, o.rho, inst_seed)?;
    let small = o.n <= EXHAUSTIVE_REPORT_MAX_N;
    match &config.command {
        Command::Generate(_) => unreachable!("handled before trials"),
        Command::Scores(_) => {
            let p = match o.p {
                Some(p) => NoiseRate::new(p)?,
                None => params.noise(),
            };
            let counted = CountingOracle::new(&f);
            let mut rng = ChaCha8Rng::seed_from_u64(alg_seed);
            let scores = estimate_scores_with(&counted, p, o.eps, o.delta, params.constants.c_q, &mut rng)?;
            let distance = if o.n <= TOPDOWN_MAX_N {
                let exact = fourier_scores(&TruthTable::from_function(&f)?, p);
                let worst = exact
                    .iter()
                    .zip(scores.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                Some(worst)
            } else {
                None
            };
            Ok(TrialResult {
                queries_total: counted.queries(),
                queries_max_per_answer: counted.queries(),
                distance,
                extra: scores.values().iter().map(|v| v.to_string()).collect(),
                ..TrialResult::default()
            })
        }
        Command::Reconstruct(_) => {
            let rec = Reconstructor::with_params(&f, *params, alg_seed, Mode::Local)?;
            let mut wrong = 0u64;
            let asked = if o.full {
                if !small {
                    return Err(invalid(format!("--full needs n <= {EXHAUSTIVE_REPORT_MAX_N}")));
                }
                for idx in 0..1u64 << o.n {
                    rec.answer(&Point::from_index(o.n, idx))?;
                }
                1u64 << o.n
            } else {
                let mut rng = RandomTape::new(alg_seed).stream_for_key(b"queries", Purpose::Probe);
                let mut x = Point::zeros(o.n);
                for _ in 0..o.queries {
                    x.randomize(&mut rng);
                    if rec.answer(&x)? != f.eval(&x) {
                        wrong += 1;
                    }
                }
                o.queries as u64
            };
            let tree = rec.materialize();
            let distance = if small {
                exact_distance(&tree, &f)?
            } else {
                wrong as f64 / asked.max(1) as f64
            };
            let stats = rec.query_stats();
            Ok(TrialResult {
                queries_total: stats.total,
                queries_max_per_answer: stats.max_per_answer,
                distance: Some(distance),
                tree: Some(tree.serialize()),
                ..TrialResult::default()
            })
        }
        Command::Test(_) => {
            let outcome = tolerant_test(&f, o.s, o.eps, o.delta, o.kappa, params.constants, alg_seed)?;
            Ok(TrialResult {
                queries_total: outcome.queries,
                queries_max_per_answer: outcome.max_queries_per_answer,
                distance: Some(outcome.mismatch),
                verdict: Some(outcome.verdict),
                ..TrialResult::default()
            })
        }
        Command::Learn(_) => {
            let estimator = match o.backend {
                Backend::Exact => DistanceEstimator::Exact,
                Backend::Tester => DistanceEstimator::Tester(TesterBackend {
                    kappa: o.kappa,
                    c: o.c.unwrap_or(o.kappa),
                    delta: o.delta,
                    constants: params.constants,
                    seed: alg_seed,
                    mean_accuracy: o.eps,
                }),
            };
            let counted = CountingOracle::new(&f);
            let report = learn(&counted, o.s, o.eps, &estimator)?;
            let distance = if small { Some(exact_distance(&report.tree, &f)?) } else { None };
            Ok(TrialResult {
                queries_total: counted.queries(),
                queries_max_per_answer: 0,
                distance,
                extra: vec![
                    report.tester_calls.to_string(),
                    report.call_budget.to_string(),
                    report.tree.size().to_string(),
                ],
                tree: Some(report.tree.serialize()),
                ..TrialResult::default()
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> ExperimentConfig {
        ExperimentConfig::try_parse_from(std::iter::once("dtrecon").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn fn_specs_round_trip() {
        for s in ["constant", "dictator", "parity-3", "majority-5", "random-tree", "random-table"] {
            assert_eq!(s.parse::<FnSpec>().unwrap().to_string(), s);
        }
        assert!("parity-0".parse::<FnSpec>().is_err());
        assert!("xor".parse::<FnSpec>().is_err());
    }

    #[test]
    fn unknown_flags_rejected() {
        assert!(ExperimentConfig::try_parse_from(["dtrecon", "test", "--bogus", "1"]).is_err());
        assert!(ExperimentConfig::try_parse_from(["dtrecon", "frobnicate"]).is_err());
    }

    #[test]
    fn constant_overrides_parse() {
        let c = parse(&["test", "--const", "c_d=0.5", "--const", "c_tau=3"]).constants().unwrap();
        assert_eq!(c.c_d, 0.5);
        assert_eq!(c.c_tau, 3.0);
        assert!(parse(&["test", "--const", "c_zz=1"]).constants().is_err());
    }

    #[test]
    fn scores_csv_has_header_and_columns() {
        let cfg = parse(&["scores", "--n", "8", "--fn", "dictator", "--p", "0.5", "--eps", "0.2"]);
        let mut buf = Vec::new();
        assert_eq!(run(&cfg, &mut buf).unwrap(), 0);
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with(&CSV_HEADER.join(",")));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), CSV_HEADER.len() + 8);
        let s1: f64 = row[CSV_HEADER.len()].parse().unwrap();
        assert!((s1 - 0.25).abs() < 0.1, "score_1 = {s1}");
    }

    #[test]
    fn invalid_params_are_errors() {
        let mut buf = Vec::new();
        assert!(run(&parse(&["test", "--s", "1"]), &mut buf).is_err());
        assert!(run(&parse(&["test", "--rho", "2"]), &mut buf).is_err());
        assert!(run(&parse(&["test", "--trials", "0"]), &mut buf).is_err());
    }
}
