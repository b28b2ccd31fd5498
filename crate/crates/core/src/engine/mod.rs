//! Online learning loops.
//!
//! Every learner keeps a linear ranker and, per query, proposes exploratory
//! candidates around it, multileaves their rankings, observes simulated
//! clicks and moves the ranker toward a winning direction.
//!
//! RNG draws within one step always happen in this order: direction
//! sampling, team-draft round permutations, click simulation.

pub mod baselines;
pub mod history;
pub mod nsgd;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::click::{ClickOutcome, ClickSimulator};
use crate::data::Query;
use crate::error::{Error, Result};
use crate::gradient::{sample_uniform_unit, DirectionMatrix, SamplingMode};
use crate::interleave::{CreditVector, InterleavedList, WinnerSet, DISPLAY_LENGTH};
use crate::ranking::Ranker;

pub use baselines::{dbgd_step, dp_dbgd_step, mgd_step};
pub use history::{GradientQueue, GradientRecord, QueryQueue, QueryRecord};
pub use nsgd::{nsgd_step, tie_break};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Dbgd,
    Mgd,
    DpDbgd,
    Nsgd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Dbgd,
        Algorithm::Mgd,
        Algorithm::DpDbgd,
        Algorithm::Nsgd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dbgd => "dbgd",
            Algorithm::Mgd => "mgd",
            Algorithm::DpDbgd => "dp-dbgd",
            Algorithm::Nsgd => "nsgd",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown algorithm {s:?} (expected dbgd, mgd, dp-dbgd or nsgd)"
                ))
            })
    }
}

/// How many of the null-space learner's candidates come from the null space
/// and how many are plain uniform directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateSplit {
    pub null_space: usize,
    pub uniform: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    /// Exploration step.
    pub delta: f64,
    /// Learning rate.
    pub alpha: f64,
    /// Directions sampled before preselection.
    pub n: usize,
    /// Candidate rankers per iteration.
    pub m: usize,
    /// Historical directions spanning the excluded subspace.
    pub k_g: usize,
    /// Historical queries consulted on ties.
    pub k_h: usize,
    pub t_g: usize,
    pub t_h: usize,
    pub epsilon: f64,
    pub lag_k: usize,
    pub display_length: usize,
    /// Mixed null-space/uniform candidates; `None` means all null-space.
    pub split: Option<CandidateSplit>,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            delta: 1.0,
            alpha: 0.1,
            n: 16,
            m: 4,
            k_g: 25,
            k_h: 10,
            t_g: 15,
            t_h: 50,
            epsilon: 0.1,
            lag_k: 10,
            display_length: DISPLAY_LENGTH,
            split: None,
        }
    }
}

fn as_count(name: &str, value: f64) -> Result<usize> {
    if value.fract() != 0.0 || value < 0.0 || !value.is_finite() {
        return Err(Error::config(format!(
            "{name} must be a non-negative integer, got {value}"
        )));
    }
    Ok(value as usize)
}

impl AlgorithmConfig {
    /// Parameter names accepted by [`set`](Self::set).
    pub const PARAMETERS: [&'static str; 11] = [
        "delta",
        "alpha",
        "n",
        "m",
        "k_g",
        "k_h",
        "t_g",
        "t_h",
        "epsilon",
        "lag_k",
        "display_length",
    ];

    /// Sets one parameter by name. When `m` changes, `n` follows at `4m`
    /// unless it is set separately afterwards.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "delta" => self.delta = value,
            "alpha" => self.alpha = value,
            "n" => self.n = as_count(name, value)?,
            "m" => {
                self.m = as_count(name, value)?;
                self.n = 4 * self.m;
            }
            "k_g" => self.k_g = as_count(name, value)?,
            "k_h" => self.k_h = as_count(name, value)?,
            "t_g" => self.t_g = as_count(name, value)?,
            "t_h" => self.t_h = as_count(name, value)?,
            "epsilon" => self.epsilon = value,
            "lag_k" => self.lag_k = as_count(name, value)?,
            "display_length" => self.display_length = as_count(name, value)?,
            other => return Err(Error::config(format!("unknown parameter {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::config(msg)) };
        check(self.delta > 0.0 && self.delta.is_finite(), "delta must be positive")?;
        check(self.alpha > 0.0 && self.alpha.is_finite(), "alpha must be positive")?;
        check(self.m >= 1, "m must be at least 1")?;
        check(self.n >= self.m, "n must be at least m")?;
        check(self.t_g >= 1 && self.t_h >= 1, "queue capacities must be positive")?;
        check(
            self.epsilon > 0.0 && self.epsilon < 1.0,
            "epsilon must lie in (0, 1)",
        )?;
        check(self.lag_k >= 1, "lag_k must be at least 1")?;
        check(self.display_length >= 1, "display_length must be positive")?;
        if let Some(split) = self.split {
            check(
                split.null_space + split.uniform == self.m,
                "candidate split must add up to m",
            )?;
        }
        Ok(())
    }

    /// Number of candidates drawn from the null space.
    pub(crate) fn null_space_candidates(&self) -> usize {
        self.split.map_or(self.m, |s| s.null_space)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    NullSpace,
    Uniform,
}

/// What happened during one learning step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Exploration directions; candidate `i` (1-based team id) used
    /// `directions[i - 1]`.
    pub directions: Vec<Vec<f64>>,
    pub sources: Vec<CandidateSource>,
    pub shown: InterleavedList,
    pub clicks: ClickOutcome,
    pub credits: CreditVector,
    pub winners: WinnerSet,
    /// Team whose ranker the current one moved toward; 0 means no move.
    pub chosen: usize,
    /// Rows the null-space candidates were kept orthogonal to.
    pub excluded: Option<DirectionMatrix>,
    pub mode: Option<SamplingMode>,
}

/// State of one online learning run.
#[derive(Debug, Clone)]
pub struct Learner {
    algorithm: Algorithm,
    config: AlgorithmConfig,
    ranker: Ranker,
    gradients: GradientQueue,
    history: QueryQueue,
    lagged: VecDeque<Vec<f64>>,
}

impl Learner {
    /// Starts from a uniformly random unit-norm ranker.
    pub fn new<R: Rng>(
        algorithm: Algorithm,
        config: AlgorithmConfig,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let ranker = Ranker::new(sample_uniform_unit(dim, rng));
        Self::with_ranker(algorithm, config, ranker)
    }

    pub fn with_ranker(algorithm: Algorithm, config: AlgorithmConfig, ranker: Ranker) -> Result<Self> {
        config.validate()?;
        Ok(Learner {
            algorithm,
            gradients: GradientQueue::new(ranker.dim(), config.t_g),
            history: QueryQueue::new(config.t_h),
            lagged: VecDeque::with_capacity(config.lag_k),
            config,
            ranker,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    pub fn ranker(&self) -> &Ranker {
        &self.ranker
    }

    pub fn gradient_queue(&self) -> &GradientQueue {
        &self.gradients
    }

    pub fn query_queue(&self) -> &QueryQueue {
        &self.history
    }

    /// The ranker from `lag_k` iterations ago, once that many have run.
    pub fn lagged_ranker(&self) -> Option<&[f64]> {
        (self.lagged.len() == self.config.lag_k).then(|| self.lagged[0].as_slice())
    }

    pub fn step<C, R>(&mut self, query: &Arc<Query>, clicks: &C, rng: &mut R) -> StepOutcome
    where
        C: ClickSimulator + ?Sized,
        R: Rng,
    {
        let start = self.ranker.weights().to_vec();
        let outcome = match self.algorithm {
            Algorithm::Dbgd => dbgd_step(self, query, clicks, rng),
            Algorithm::Mgd => mgd_step(self, query, clicks, rng),
            Algorithm::DpDbgd => dp_dbgd_step(self, query, clicks, rng),
            Algorithm::Nsgd => nsgd_step(self, query, clicks, rng),
        };
        if self.lagged.len() == self.config.lag_k {
            self.lagged.pop_front();
        }
        self.lagged.push_back(start);
        outcome
    }

    fn move_along(&mut self, direction: &[f64], scale: f64) {
        self.ranker = self.ranker.shifted(self.config.alpha * scale, direction);
    }
}

/// Scripted click sources are handy in tests and replays.
impl<F> ClickSimulator for F
where
    F: Fn(&Query, &InterleavedList) -> ClickOutcome,
{
    fn clicks(&self, query: &Query, shown: &InterleavedList, _: &mut dyn rand::RngCore) -> ClickOutcome {
        self(query, shown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_algorithms() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("cps".parse::<Algorithm>().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        let c = AlgorithmConfig::default();
        c.validate().unwrap();
        assert_eq!((c.delta, c.alpha, c.m, c.n), (1.0, 0.1, 4, 16));
        assert_eq!((c.k_g, c.t_g, c.k_h, c.t_h), (25, 15, 10, 50));
    }

    #[test]
    fn set_parameters() {
        let mut c = AlgorithmConfig::default();
        c.set("m", 6.0).unwrap();
        assert_eq!((c.m, c.n), (6, 24));
        c.set("alpha", 0.05).unwrap();
        assert_eq!(c.alpha, 0.05);
        assert!(c.set("k_g", 2.5).is_err());
        assert!(c.set("gamma", 1.0).is_err());
        c.set("n", 3.0).unwrap();
        assert!(c.validate().is_err());
    }
}
