//! Uniform-exploration learners: single-candidate dueling bandit gradient
//! descent, its dual-point variant and multileave gradient descent.
//!
//! These functions perform one iteration on a [`Learner`]; call them through
//! [`Learner::step`] so the lag window advances too.

use std::sync::Arc;

use rand::Rng;

use super::{CandidateSource, Learner, StepOutcome};
use crate::click::{ClickOutcome, ClickSimulator};
use crate::data::Query;
use crate::gradient::sample_uniform_unit;
use crate::interleave::{
    attribute_credit, infer_winners, team_draft, CreditVector, InterleavedList, WinnerSet,
};
use crate::ranking::Ranker;

pub(crate) struct Comparison {
    pub shown: InterleavedList,
    pub clicks: ClickOutcome,
    pub credits: CreditVector,
    pub winners: WinnerSet,
}

/// Multileaves the rankings of `rankers` (team 0 first) and collects clicks.
pub(crate) fn compare<C, R>(
    rankers: &[Ranker],
    query: &Query,
    display_length: usize,
    clicks: &C,
    rng: &mut R,
) -> Comparison
where
    C: ClickSimulator + ?Sized,
    R: Rng,
{
    let lists: Vec<_> = rankers.iter().map(|r| r.rank(query)).collect();
    let shown = team_draft(&lists, display_length, rng);
    let clicked = clicks.clicks(query, &shown, rng);
    let credits = attribute_credit(&shown, &clicked, rankers.len());
    let winners = infer_winners(&credits);
    Comparison {
        shown,
        clicks: clicked,
        credits,
        winners,
    }
}

fn outcome(directions: Vec<Vec<f64>>, cmp: Comparison, chosen: usize) -> StepOutcome {
    StepOutcome {
        sources: vec![CandidateSource::Uniform; directions.len()],
        directions,
        shown: cmp.shown,
        clicks: cmp.clicks,
        credits: cmp.credits,
        winners: cmp.winners,
        chosen,
        excluded: None,
        mode: None,
    }
}

/// Moves by `alpha * u` only when the candidate strictly out-clicks the
/// current ranker.
pub fn dbgd_step<C, R>(
    learner: &mut Learner,
    query: &Arc<Query>,
    clicks: &C,
    rng: &mut R,
) -> StepOutcome
where
    C: ClickSimulator + ?Sized,
    R: Rng,
{
    let delta = learner.config.delta;
    let u = sample_uniform_unit(learner.ranker.dim(), rng);
    let rankers = [learner.ranker.clone(), learner.ranker.shifted(delta, &u)];
    let cmp = compare(&rankers, query, learner.config.display_length, clicks, rng);
    let chosen = if cmp.credits.0[1] > cmp.credits.0[0] {
        learner.move_along(&u, 1.0);
        1
    } else {
        0
    };
    outcome(vec![u], cmp, chosen)
}

/// Moves toward the mean of the winning candidate directions; the current
/// ranker's membership in the winner set does not dilute the step.
pub fn mgd_step<C, R>(
    learner: &mut Learner,
    query: &Arc<Query>,
    clicks: &C,
    rng: &mut R,
) -> StepOutcome
where
    C: ClickSimulator + ?Sized,
    R: Rng,
{
    let (dim, delta) = (learner.ranker.dim(), learner.config.delta);
    let directions: Vec<Vec<f64>> = (0..learner.config.m)
        .map(|_| sample_uniform_unit(dim, rng))
        .collect();
    let mut rankers = vec![learner.ranker.clone()];
    rankers.extend(directions.iter().map(|u| learner.ranker.shifted(delta, u)));
    let cmp = compare(&rankers, query, learner.config.display_length, clicks, rng);

    let winning: Vec<usize> = cmp.winners.members().iter().copied().filter(|&j| j != 0).collect();
    let chosen = match winning.as_slice() {
        [] => 0,
        [j] => {
            learner.move_along(&directions[j - 1], 1.0);
            *j
        }
        many => {
            let mut mean = vec![0.0; dim];
            for &j in many {
                mean.iter_mut()
                    .zip(&directions[j - 1])
                    .for_each(|(m, x)| *m += x / many.len() as f64);
            }
            learner.move_along(&mean, 1.0);
            many[0]
        }
    };
    outcome(directions, cmp, chosen)
}

/// Explores `+u` and `-u` together; only an outright winning candidate
/// moves the ranker.
pub fn dp_dbgd_step<C, R>(
    learner: &mut Learner,
    query: &Arc<Query>,
    clicks: &C,
    rng: &mut R,
) -> StepOutcome
where
    C: ClickSimulator + ?Sized,
    R: Rng,
{
    let delta = learner.config.delta;
    let u = sample_uniform_unit(learner.ranker.dim(), rng);
    let neg: Vec<f64> = u.iter().map(|x| -x).collect();
    let rankers = [
        learner.ranker.clone(),
        learner.ranker.shifted(delta, &u),
        learner.ranker.shifted(delta, &neg),
    ];
    let cmp = compare(&rankers, query, learner.config.display_length, clicks, rng);
    let chosen = match cmp.winners.members() {
        [1] => {
            learner.move_along(&u, 1.0);
            1
        }
        [2] => {
            learner.move_along(&u, -1.0);
            2
        }
        _ => 0,
    };
    outcome(vec![u, neg], cmp, chosen)
}
