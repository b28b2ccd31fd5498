//! Null-space gradient descent.
//!
//! Per query:
//!
//! 1. take the worst-quality directions from the gradient history and
//!    compute the null space of their span;
//! 2. sample `n` unit directions inside it (basis vectors early on, interior
//!    points once the ranker settles) and keep the `m` with the largest
//!    `|xbar . g|`, where `xbar` sums the query's document features;
//! 3. multileave the current ranker with `w + delta * g` for each kept `g`;
//! 4. on a multi-way tie, replay the tied rankers on the hardest recent
//!    queries against their recorded clicks;
//! 5. move by `alpha * g` toward the winner, record the directions that lost
//!    clicks to the current ranker and remember the served query.

use std::sync::Arc;

use rand::Rng;

use super::baselines::compare;
use super::history::{GradientRecord, QueryQueue, QueryRecord};
use super::{CandidateSource, Learner, StepOutcome};
use crate::click::ClickSimulator;
use crate::data::Query;
use crate::gradient::{
    null_space, preselect, sample_in_subspace, sample_uniform_unit, worst_gradients,
    HybridSwitch, NULL_SPACE_TOL,
};
use crate::interleave::WinnerSet;
use crate::metrics::{eval_clicked, DEFAULT_CUTOFF};
use crate::ranking::{aggregate_features, Ranker};

/// Picks one ranker from a tied winner set using the `k_h` recent queries
/// whose displayed lists earned the lowest click quality. Each tied ranker
/// re-ranks those queries and is scored against the recorded clicks. With no
/// history, or a residual tie, the current ranker (index 0) is preferred,
/// then the lowest index.
pub fn tie_break(winners: &WinnerSet, rankers: &[Ranker], history: &QueryQueue, k_h: usize) -> usize {
    let default = |set: &[usize]| {
        if set.contains(&0) {
            0
        } else {
            *set.iter().min().expect("winner set is never empty")
        }
    };
    let members = winners.members();
    let hard = history.worst(k_h);
    if hard.is_empty() || members.len() < 2 {
        return default(members);
    }

    let scores: Vec<f64> = members
        .iter()
        .map(|&o| {
            hard.iter()
                .map(|rec| {
                    let ranked = rankers[o].rank(&rec.query);
                    eval_clicked(ranked.as_slice(), rec.clicked_docs(), DEFAULT_CUTOFF)
                })
                .sum()
        })
        .collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<usize> = members
        .iter()
        .zip(&scores)
        .filter(|&(_, &s)| s == best)
        .map(|(&o, _)| o)
        .collect();
    default(&top)
}

/// One null-space iteration. Prefer [`Learner::step`], which also advances
/// the lag window used by the hybrid sampler.
pub fn nsgd_step<C, R>(
    learner: &mut Learner,
    query: &Arc<Query>,
    clicks: &C,
    rng: &mut R,
) -> StepOutcome
where
    C: ClickSimulator + ?Sized,
    R: Rng,
{
    let cfg = learner.config.clone();
    let dim = learner.ranker.dim();
    let xbar = aggregate_features(query);

    let excluded = worst_gradients(&learner.gradients, cfg.k_g);
    let basis = null_space(&excluded, NULL_SPACE_TOL).ok();
    let hybrid = HybridSwitch {
        lag: cfg.lag_k,
        epsilon: cfg.epsilon,
    };
    let mode = hybrid.mode(learner.ranker.weights(), learner.lagged_ranker());

    let from_null = cfg.null_space_candidates();
    let from_uniform = cfg.m - from_null;
    let mut directions = Vec::with_capacity(cfg.m);
    let mut sources = Vec::with_capacity(cfg.m);
    if from_null > 0 {
        // Keep the pre-sample ratio n/m when only part of the slate is ours.
        let pool = (cfg.n * from_null / cfg.m).max(from_null);
        let sampled: Vec<Vec<f64>> = (0..pool)
            .map(|_| match &basis {
                Some(b) => sample_in_subspace(b, mode, rng),
                // Selected directions span everything: explore uniformly.
                None => sample_uniform_unit(dim, rng),
            })
            .collect();
        for i in preselect(&sampled, &xbar, from_null) {
            directions.push(sampled[i].clone());
            sources.push(CandidateSource::NullSpace);
        }
    }
    for _ in 0..from_uniform {
        directions.push(sample_uniform_unit(dim, rng));
        sources.push(CandidateSource::Uniform);
    }

    let mut rankers = vec![learner.ranker.clone()];
    rankers.extend(directions.iter().map(|g| learner.ranker.shifted(cfg.delta, g)));
    let cmp = compare(&rankers, query, cfg.display_length, clicks, rng);

    let chosen = match cmp.winners.members() {
        [only] => *only,
        _ => tie_break(&cmp.winners, &rankers, &learner.history, cfg.k_h),
    };
    if chosen != 0 {
        learner.move_along(&directions[chosen - 1], 1.0);
    }

    let current = cmp.credits.0[0] as i32;
    for (g, &c) in directions.iter().zip(&cmp.credits.0[1..]) {
        let quality = c as i32 - current;
        if quality < 0 {
            learner.gradients.push(GradientRecord {
                direction: g.clone(),
                quality,
            });
        }
    }
    learner.history.push(QueryRecord::new(
        Arc::clone(query),
        cmp.shown.clone(),
        cmp.clicks.clone(),
    ));

    StepOutcome {
        directions,
        sources,
        shown: cmp.shown,
        clicks: cmp.clicks,
        credits: cmp.credits,
        winners: cmp.winners,
        chosen,
        excluded: Some(excluded),
        mode: Some(mode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click::ClickOutcome;
    use crate::data::Document;
    use crate::engine::{Algorithm, AlgorithmConfig, CandidateSplit};
    use crate::interleave::{Entry, InterleavedList};
    use crate::ranking::dot;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DIM: usize = 6;

    fn query(seed: u64) -> Arc<Query> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Arc::new(Query {
            qid: seed.to_string(),
            documents: (0..10)
                .map(|i| Document {
                    doc_id: i.to_string(),
                    features: sample_uniform_unit(DIM, &mut rng),
                    relevance: (i % 3) as u8,
                })
                .collect(),
        })
    }

    fn learner() -> Learner {
        let mut w = vec![0.0; DIM];
        w[1] = 1.0;
        Learner::with_ranker(Algorithm::Nsgd, AlgorithmConfig::default(), Ranker::new(w)).unwrap()
    }

    fn click_teams(teams: &'static [usize]) -> impl Fn(&Query, &InterleavedList) -> ClickOutcome {
        move |_, shown| {
            ClickOutcome::new(
                shown
                    .entries
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| teams.contains(&e.team))
                    .map(|(i, _)| i + 1)
                    .collect(),
            )
        }
    }

    #[test]
    fn candidates_avoid_recorded_direction() {
        let mut l = learner();
        let mut e0 = vec![0.0; DIM];
        e0[0] = 1.0;
        l.gradients.push(GradientRecord {
            direction: e0.clone(),
            quality: -1,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = l.step(&query(1), &click_teams(&[]), &mut rng);
        assert_eq!(out.directions.len(), 4);
        for g in &out.directions {
            assert!(dot(g, &e0).abs() <= 1e-9);
            assert!((dot(g, g) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_way_tie_without_history_keeps_current() {
        let mut l = learner();
        let before = l.ranker().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // Five teams over ten documents: clicking teams 0 and 1 gives
        // credits (2, 2, 0, 0, 0).
        let out = l.step(&query(2), &click_teams(&[0, 1]), &mut rng);
        assert_eq!(out.credits.0, [2, 2, 0, 0, 0]);
        assert_eq!(out.winners.members(), [0, 1]);
        assert_eq!(out.chosen, 0);
        assert_eq!(l.ranker(), &before);
        // Candidates 2..4 received no clicks against the current ranker's 2.
        let recorded: Vec<i32> = l.gradient_queue().iter().map(|r| r.quality).collect();
        assert_eq!(recorded, [-2, -2, -2]);
        assert_eq!(l.query_queue().len(), 1);
    }

    #[test]
    fn only_deficits_are_recorded() {
        let mut l = learner();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = l.step(&query(3), &click_teams(&[0, 1, 2, 3, 4]), &mut rng);
        assert_eq!(out.credits.0, [2; 5]);
        assert!(l.gradient_queue().is_empty());
        let out = l.step(&query(3), &click_teams(&[0, 2]), &mut rng);
        assert_eq!(out.credits.0, [2, 0, 2, 0, 0]);
        let recorded: Vec<(Vec<f64>, i32)> = l
            .gradient_queue()
            .iter()
            .map(|r| (r.direction.clone(), r.quality))
            .collect();
        assert_eq!(
            recorded,
            vec![
                (out.directions[0].clone(), -2),
                (out.directions[2].clone(), -2),
                (out.directions[3].clone(), -2)
            ]
        );
    }

    fn two_doc_query() -> Arc<Query> {
        Arc::new(Query {
            qid: "h".into(),
            documents: vec![
                Document {
                    doc_id: "a".into(),
                    features: vec![1.0, 0.0],
                    relevance: 0,
                },
                Document {
                    doc_id: "b".into(),
                    features: vec![0.0, 1.0],
                    relevance: 0,
                },
            ],
        })
    }

    #[test]
    fn tie_break_uses_history() {
        let q = two_doc_query();
        let mut history = QueryQueue::new(50);
        let shown = InterleavedList {
            entries: vec![Entry { doc: 0, team: 0 }, Entry { doc: 1, team: 1 }],
        };
        // The user clicked document b at position 2.
        history.push(QueryRecord::new(q, shown, ClickOutcome::new(vec![2])));
        let rankers = [
            Ranker::new(vec![1.0, 0.0]), // b second: 1/log2(3)
            Ranker::new(vec![1.0, 0.5]),
            Ranker::new(vec![0.0, 1.0]), // b first: 1.0
        ];
        assert_eq!(tie_break(&WinnerSet(vec![0, 2]), &rankers, &history, 10), 2);
        // equal evidence keeps the current ranker
        assert_eq!(tie_break(&WinnerSet(vec![0, 1]), &rankers, &history, 10), 0);
        // k_h = 0 disables the replay
        assert_eq!(tie_break(&WinnerSet(vec![0, 2]), &rankers, &history, 0), 0);
    }

    #[test]
    fn tie_break_defaults() {
        let rankers = vec![Ranker::new(vec![1.0, 0.0]); 4];
        let empty = QueryQueue::new(5);
        assert_eq!(tie_break(&WinnerSet(vec![0, 3]), &rankers, &empty, 10), 0);
        assert_eq!(tie_break(&WinnerSet(vec![2, 3]), &rankers, &empty, 10), 2);
    }

    #[test]
    fn mixed_split_labels_sources() {
        let cfg = AlgorithmConfig {
            split: Some(CandidateSplit {
                null_space: 2,
                uniform: 2,
            }),
            ..Default::default()
        };
        let mut l = Learner::with_ranker(Algorithm::Nsgd, cfg, Ranker::new(vec![1.0; DIM])).unwrap();
        let out = l.step(&query(4), &click_teams(&[]), &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(
            out.sources,
            [
                CandidateSource::NullSpace,
                CandidateSource::NullSpace,
                CandidateSource::Uniform,
                CandidateSource::Uniform
            ]
        );
    }

    #[test]
    fn full_rank_history_falls_back_to_uniform() {
        let cfg = AlgorithmConfig {
            t_g: 10,
            ..Default::default()
        };
        let mut l = Learner::with_ranker(Algorithm::Nsgd, cfg, Ranker::new(vec![1.0, 0.0])).unwrap();
        l.gradients.push(GradientRecord {
            direction: vec![1.0, 0.0],
            quality: -1,
        });
        l.gradients.push(GradientRecord {
            direction: vec![0.0, 1.0],
            quality: -1,
        });
        let q = Arc::new(Query {
            qid: "x".into(),
            documents: (0..4)
                .map(|i| Document {
                    doc_id: i.to_string(),
                    features: vec![i as f64, 1.0 - i as f64],
                    relevance: 1,
                })
                .collect(),
        });
        let out = l.step(&q, &click_teams(&[]), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(out.directions.len(), 4);
        assert!(out.directions.iter().all(|g| (dot(g, g) - 1.0).abs() < 1e-12));
    }
}
