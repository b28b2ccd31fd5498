//! Seeded, repeatable experiment runs.
//!
//! Each (fold, repetition) unit owns one ChaCha8 stream derived from the base
//! seed, consumed in a fixed order: initial ranker, then per iteration the
//! training query draw followed by the learner's own draws (directions,
//! interleaving, clicks). Units run in parallel and are reassembled in order,
//! so the thread count never changes the output. [`RNG_SCHEMA`] is bumped
//! whenever that order changes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::click::{ClickModel, ClickModelKind};
use crate::data::{gen_synthetic_split, load_fold, load_split, FoldSplit, Query};
use crate::engine::{Algorithm, AlgorithmConfig, CandidateSource, CandidateSplit, Learner};
use crate::error::{Error, Result};
use crate::metrics::{
    cosine_similarity, offline_ndcg, online_ndcg, CumulativeNdcg, IterationMetrics, MetricConfig,
};

pub const RNG_SCHEMA: u32 = 1;

pub const CSV_COLUMNS: &str =
    "algorithm,click_model,repetition,iteration,offline_ndcg,cumulative_ndcg,cosine_sim";

/// Parameters a sweep may vary.
pub const SWEEP_PARAMETERS: [&str; 7] = ["m", "alpha", "k_g", "k_h", "n", "epsilon", "lag_k"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub click_model: ClickModelKind,
    pub iterations: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    pub params: AlgorithmConfig,
    pub metrics: MetricConfig,
    /// Offline NDCG is recomputed every this many iterations and carried
    /// forward in between. The first and last iterations are always scored.
    pub eval_every: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::Nsgd,
            click_model: ClickModelKind::Perfect,
            iterations: 1000,
            repetitions: 15,
            base_seed: 0,
            params: AlgorithmConfig::default(),
            metrics: MetricConfig::default(),
            eval_every: 1,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 1 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if self.eval_every < 1 {
            return Err(Error::config("eval_every must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads must be at least 1"));
        }
        self.params.validate()
    }
}

/// Folds to learn on plus an optional reference ranker for cosine tracking.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub folds: Vec<FoldSplit>,
    pub reference: Option<Vec<f64>>,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.folds[0].dim()
    }

    pub fn with_reference(mut self, reference: Vec<f64>) -> Result<Self> {
        if reference.len() != self.dim() {
            return Err(Error::config(format!(
                "reference ranker has {} weights, dataset has {} features",
                reference.len(),
                self.dim()
            )));
        }
        self.reference = Some(reference);
        Ok(self)
    }
}

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Synthetic {
        dim: usize,
        n_train: usize,
        n_test: usize,
        docs_per_query: usize,
        seed: u64,
    },
    /// A LETOR root with `Fold<i>` subdirectories.
    Folds { root: PathBuf, folds: Vec<usize> },
    /// A directory holding `train.txt` and `test.txt`.
    Split { dir: PathBuf },
}

impl DatasetSpec {
    pub const DEFAULT_SYNTHETIC: DatasetSpec = DatasetSpec::Synthetic {
        dim: 20,
        n_train: 50,
        n_test: 20,
        docs_per_query: 10,
        seed: 1,
    };

    /// `synthetic[:d=20,train=50,test=20,docs=10,seed=1]` or a directory.
    /// For fold roots, `folds` selects which folds to use (all present when
    /// empty).
    pub fn parse(text: &str, folds: &[usize]) -> Result<Self> {
        if let Some(rest) = text.strip_prefix("synthetic") {
            let DatasetSpec::Synthetic {
                mut dim,
                mut n_train,
                mut n_test,
                mut docs_per_query,
                mut seed,
            } = Self::DEFAULT_SYNTHETIC
            else {
                unreachable!()
            };
            let rest = match rest.strip_prefix(':') {
                Some(r) => r,
                None if rest.is_empty() => "",
                None => return Err(Error::config(format!("bad dataset spec {text:?}"))),
            };
            for kv in rest.split(',').filter(|s| !s.is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::config(format!("expected key=value, got {kv:?}")))?;
                let n: u64 = v
                    .parse()
                    .map_err(|_| Error::config(format!("invalid number {v:?} for {k}")))?;
                match k {
                    "d" | "dim" => dim = n as usize,
                    "train" => n_train = n as usize,
                    "test" => n_test = n as usize,
                    "docs" => docs_per_query = n as usize,
                    "seed" => seed = n,
                    other => return Err(Error::config(format!("unknown synthetic key {other:?}"))),
                }
            }
            return Ok(DatasetSpec::Synthetic {
                dim,
                n_train,
                n_test,
                docs_per_query,
                seed,
            });
        }

        let path = PathBuf::from(text);
        if !path.is_dir() {
            return Err(Error::io(
                &path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
            ));
        }
        if path.join("train.txt").is_file() {
            return Ok(DatasetSpec::Split { dir: path });
        }
        let folds = if folds.is_empty() {
            (1..=5).filter(|i| path.join(format!("Fold{i}")).is_dir()).collect()
        } else {
            folds.to_vec()
        };
        if folds.is_empty() {
            return Err(Error::config(format!(
                "{} holds neither train.txt nor Fold<i> directories",
                path.display()
            )));
        }
        Ok(DatasetSpec::Folds { root: path, folds })
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            &DatasetSpec::Synthetic {
                dim,
                n_train,
                n_test,
                docs_per_query,
                seed,
            } => {
                let (split, reference) =
                    gen_synthetic_split(dim, n_train, n_test, docs_per_query, seed)?;
                Ok(Dataset {
                    folds: vec![split],
                    reference: Some(reference),
                })
            }
            DatasetSpec::Folds { root, folds } => {
                let folds = folds
                    .iter()
                    .map(|&f| load_fold(root, f))
                    .collect::<Result<Vec<_>>>()?;
                let dim = folds[0].dim();
                if folds.iter().any(|f| f.dim() != dim) {
                    return Err(Error::config("folds disagree on feature dimension"));
                }
                Ok(Dataset {
                    folds,
                    reference: None,
                })
            }
            DatasetSpec::Split { dir } => Ok(Dataset {
                folds: vec![load_split(dir)?],
                reference: None,
            }),
        }
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(MeanStd { mean, std })
    }
}

/// Final-iteration statistics across repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub offline_ndcg: MeanStd,
    pub cumulative_ndcg: MeanStd,
    pub cosine_sim: Option<MeanStd>,
}

/// Per-source selection counts of one repetition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelectionCounts {
    pub null_space: usize,
    pub uniform: usize,
}

#[derive(Debug, Clone)]
pub struct RepetitionTrace {
    pub metrics: Vec<IterationMetrics>,
    pub selections: SelectionCounts,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub click_model: ClickModelKind,
    pub iterations: usize,
    /// Ordered by fold, then repetition.
    pub repetitions: Vec<RepetitionTrace>,
}

impl RunResult {
    /// Metric values at the given 1-based iteration, one per repetition.
    pub fn at_iteration(&self, iteration: usize) -> Vec<IterationMetrics> {
        self.repetitions
            .iter()
            .map(|r| r.metrics[iteration - 1])
            .collect()
    }

    /// `None` for zero-iteration runs.
    pub fn summary(&self) -> Option<Summary> {
        if self.iterations == 0 {
            return None;
        }
        let finals = self.at_iteration(self.iterations);
        let pick = |f: fn(&IterationMetrics) -> f64| finals.iter().map(f).collect::<Vec<_>>();
        let cosines: Option<Vec<f64>> = finals.iter().map(|m| m.cosine_to_reference).collect();
        Some(Summary {
            offline_ndcg: MeanStd::of(&pick(|m| m.offline_ndcg))?,
            cumulative_ndcg: MeanStd::of(&pick(|m| m.cumulative_ndcg))?,
            cosine_sim: cosines.and_then(|c| MeanStd::of(&c)),
        })
    }

    pub fn write_rows(&self, out: &mut String, prefix: &str) {
        for (rep, trace) in self.repetitions.iter().enumerate() {
            for (t, m) in trace.metrics.iter().enumerate() {
                let cosine = m
                    .cosine_to_reference
                    .map(|c| format!("{c:.6}"))
                    .unwrap_or_default();
                writeln!(
                    out,
                    "{prefix}{},{},{},{},{:.6},{:.6},{}",
                    self.algorithm,
                    self.click_model,
                    rep,
                    t + 1,
                    m.offline_ndcg,
                    m.cumulative_ndcg,
                    cosine
                )
                .unwrap();
            }
        }
    }

    fn write_summary(&self, out: &mut String, prefix: &str) {
        let Some(s) = self.summary() else { return };
        let mut line = |name: &str, v: Option<MeanStd>| {
            if let Some(v) = v {
                writeln!(out, "# summary,{prefix}{name},{:.6},{:.6}", v.mean, v.std).unwrap();
            }
        };
        line("offline_ndcg", Some(s.offline_ndcg));
        line("cumulative_ndcg", Some(s.cumulative_ndcg));
        line("cosine_sim", s.cosine_sim);
    }

    /// Rows for every (repetition, iteration) followed by `# summary` lines
    /// with the mean and sample standard deviation at the last iteration.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# rng-schema={RNG_SCHEMA}\n{CSV_COLUMNS}\n");
        self.write_rows(&mut out, "");
        self.write_summary(&mut out, "");
        out
    }
}

pub fn write_file(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Index of a training query drawn uniformly with replacement.
pub fn sample_query<R: Rng + ?Sized>(n_queries: usize, rng: &mut R) -> usize {
    rng.random_range(0..n_queries)
}

fn unit_rng(base_seed: u64, unit: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(unit);
    rng
}

fn run_unit(
    config: &ExperimentConfig,
    split: &FoldSplit,
    train: &[Arc<Query>],
    reference: Option<&[f64]>,
    unit: u64,
) -> Result<RepetitionTrace> {
    let mut rng = unit_rng(config.base_seed, unit);
    let clicks = ClickModel::preset(config.click_model);
    let mut learner = Learner::new(config.algorithm, config.params.clone(), split.dim(), &mut rng)?;
    let k = config.metrics.cutoff_k;
    let mut cumulative = CumulativeNdcg::new(config.metrics.discount_gamma);
    let mut offline = 0.0;
    let mut selections = SelectionCounts::default();
    let mut metrics = Vec::with_capacity(config.iterations);

    for t in 1..=config.iterations {
        let query = &train[sample_query(train.len(), &mut rng)];
        let step = learner.step(query, &clicks, &mut rng);
        if step.chosen > 0 {
            match step.sources[step.chosen - 1] {
                CandidateSource::NullSpace => selections.null_space += 1,
                CandidateSource::Uniform => selections.uniform += 1,
            }
        }
        cumulative.push(online_ndcg(query, &step.shown, k));
        if (t - 1) % config.eval_every == 0 || t == config.iterations {
            offline = offline_ndcg(learner.ranker(), &split.test, k);
        }
        metrics.push(IterationMetrics {
            offline_ndcg: offline,
            cumulative_ndcg: cumulative.value(),
            cosine_to_reference: reference.and_then(|r| cosine_similarity(learner.ranker().weights(), r)),
        });
    }
    Ok(RepetitionTrace {
        metrics,
        selections,
    })
}

/// Runs every fold `config.repetitions` times.
pub fn run_experiment(config: &ExperimentConfig, dataset: &Dataset) -> Result<RunResult> {
    config.validate()?;
    if dataset.folds.is_empty() {
        return Err(Error::config("dataset has no folds"));
    }
    let trains: Vec<Vec<Arc<Query>>> = dataset
        .folds
        .iter()
        .map(|f| f.train.queries().iter().cloned().map(Arc::new).collect())
        .collect();
    let units: Vec<(usize, u64)> = (0..dataset.folds.len())
        .flat_map(|f| (0..config.repetitions).map(move |r| (f, r as u64)))
        .collect();
    let reps = config.repetitions as u64;
    let reference = dataset.reference.as_deref();

    let work = || {
        units
            .par_iter()
            .map(|&(f, r)| {
                run_unit(config, &dataset.folds[f], &trains[f], reference, f as u64 * reps + r)
            })
            .collect::<Result<Vec<_>>>()
    };
    let repetitions = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(RunResult {
        algorithm: config.algorithm,
        click_model: config.click_model,
        iterations: config.iterations,
        repetitions,
    })
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: String,
    pub runs: Vec<(f64, RunResult)>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# rng-schema={RNG_SCHEMA}\nparameter,value,{CSV_COLUMNS}\n");
        for (value, run) in &self.runs {
            run.write_rows(&mut out, &format!("{},{},", self.parameter, value));
        }
        for (value, run) in &self.runs {
            run.write_summary(&mut out, &format!("{}={}:", self.parameter, value));
        }
        out
    }
}

/// One run per value of `parameter`, all from the same base seed.
pub fn sweep(
    config: &ExperimentConfig,
    dataset: &Dataset,
    parameter: &str,
    values: &[f64],
) -> Result<SweepResult> {
    if !SWEEP_PARAMETERS.contains(&parameter) {
        return Err(Error::config(format!(
            "cannot sweep {parameter:?} (expected one of {})",
            SWEEP_PARAMETERS.join(", ")
        )));
    }
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    let runs = values
        .iter()
        .map(|&v| {
            let mut cfg = config.clone();
            cfg.params.set(parameter, v)?;
            Ok((v, run_experiment(&cfg, dataset)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        parameter: parameter.to_string(),
        runs,
    })
}

/// Candidate slate size of the mixed-source experiment.
pub const RATIO_CANDIDATES: usize = 4;

#[derive(Debug, Clone)]
pub struct RatioReport {
    pub split: CandidateSplit,
    /// Fraction of iterations a null-space candidate replaced the current
    /// ranker, divided by the number of null-space candidates.
    pub null_space_rate: Option<f64>,
    pub uniform_rate: Option<f64>,
    pub online: Option<MeanStd>,
    pub run: RunResult,
}

impl RatioReport {
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from(
            "null_space_candidates,uniform_candidates,null_space_rate,uniform_rate,online_mean,online_std\n",
        );
        writeln!(
            out,
            "{},{},{},{},{},{}",
            self.split.null_space,
            self.split.uniform,
            fmt(self.null_space_rate),
            fmt(self.uniform_rate),
            fmt(self.online.map(|o| o.mean)),
            fmt(self.online.map(|o| o.std)),
        )
        .unwrap();
        out
    }
}

/// Null-space learner with `null_space` of its four candidates drawn from the
/// null space and the rest uniformly, reporting how often each kind wins.
pub fn selection_ratio_experiment(
    config: &ExperimentConfig,
    dataset: &Dataset,
    split: CandidateSplit,
) -> Result<RatioReport> {
    if split.null_space + split.uniform != RATIO_CANDIDATES {
        return Err(Error::config(format!(
            "candidate counts must add up to {RATIO_CANDIDATES}"
        )));
    }
    let mut cfg = config.clone();
    cfg.algorithm = Algorithm::Nsgd;
    cfg.params.set("m", RATIO_CANDIDATES as f64)?;
    cfg.params.split = Some(split);
    let run = run_experiment(&cfg, dataset)?;

    let total_iters = (run.repetitions.len() * run.iterations) as f64;
    let rate = |wins: usize, count: usize| {
        (count > 0 && total_iters > 0.0).then(|| wins as f64 / (total_iters * count as f64))
    };
    let wins_ns: usize = run.repetitions.iter().map(|r| r.selections.null_space).sum();
    let wins_u: usize = run.repetitions.iter().map(|r| r.selections.uniform).sum();
    Ok(RatioReport {
        split,
        null_space_rate: rate(wins_ns, split.null_space),
        uniform_rate: rate(wins_u, split.uniform),
        online: run.summary().map(|s| s.cumulative_ndcg),
        run,
    })
}
