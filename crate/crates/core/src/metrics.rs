//! Ranking quality measures.
//!
//! NDCG uses the exponential gain `2^rel - 1` and the `log2(i + 1)` discount.
//! A query whose ideal DCG is zero scores zero.

use crate::data::{Query, QuerySet};
use crate::interleave::InterleavedList;
use crate::ranking::{dot, norm, Ranker};

pub const DEFAULT_CUTOFF: usize = 10;
pub const DEFAULT_GAMMA: f64 = 0.995;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub cutoff_k: usize,
    pub discount_gamma: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            cutoff_k: DEFAULT_CUTOFF,
            discount_gamma: DEFAULT_GAMMA,
        }
    }
}

/// Metrics recorded after one learning iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationMetrics {
    pub offline_ndcg: f64,
    pub cumulative_ndcg: f64,
    pub cosine_to_reference: Option<f64>,
}

fn discount(position: usize) -> f64 {
    // position is 0-based
    1.0 / ((position + 2) as f64).log2()
}

fn gain(grade: u8) -> f64 {
    (1u32 << grade) as f64 - 1.0
}

pub fn dcg_at_k(grades: &[u8], k: usize) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) * discount(i))
        .sum()
}

pub fn ndcg_at_k(ranked_grades: &[u8], all_grades: &[u8], k: usize) -> f64 {
    let mut ideal = all_grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg_at_k(&ideal, k);
    if idcg == 0.0 {
        return 0.0;
    }
    dcg_at_k(ranked_grades, k) / idcg
}

/// `sum_t gamma^(t-1) * ndcg_t`
pub fn cumulative_ndcg(per_iteration: &[f64], gamma: f64) -> f64 {
    let mut acc = CumulativeNdcg::new(gamma);
    per_iteration.iter().for_each(|&v| acc.push(v));
    acc.value()
}

/// Running discounted sum of per-iteration scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulativeNdcg {
    gamma: f64,
    weight: f64,
    sum: f64,
}

impl CumulativeNdcg {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma > 0.0 && gamma <= 1.0, "discount must be in (0, 1]");
        CumulativeNdcg {
            gamma,
            weight: 1.0,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, value: f64) {
        self.sum += self.weight * value;
        self.weight *= self.gamma;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Binary NDCG@k of a ranking of query documents, treating the clicked
/// documents as the only relevant ones.
pub fn eval_clicked(ranked_docs: &[usize], clicked_docs: &[usize], k: usize) -> f64 {
    let n_rel = clicked_docs.len().min(k);
    if n_rel == 0 {
        return 0.0;
    }
    let idcg: f64 = (0..n_rel).map(discount).sum();
    let dcg: f64 = ranked_docs
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, d)| clicked_docs.contains(d))
        .map(|(i, _)| discount(i))
        .sum();
    dcg / idcg
}

/// Clicked document indices of a displayed list.
pub fn clicked_docs(shown: &InterleavedList, positions: &[usize]) -> Vec<usize> {
    positions.iter().map(|&p| shown.entries[p - 1].doc).collect()
}

/// `None` when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// NDCG@k of the list shown to the user, judged by true relevance.
pub fn online_ndcg(query: &Query, shown: &InterleavedList, k: usize) -> f64 {
    let shown_grades: Vec<u8> = shown
        .entries
        .iter()
        .map(|e| query.documents[e.doc].relevance)
        .collect();
    ndcg_at_k(&shown_grades, &query.grades(), k)
}

/// Mean NDCG@k of `ranker` over every query of `set`.
pub fn offline_ndcg(ranker: &Ranker, set: &QuerySet, k: usize) -> f64 {
    let total: f64 = set
        .queries()
        .iter()
        .map(|q| ndcg_at_k(&ranker.rank(q).grades(q), &q.grades(), k))
        .sum();
    total / set.len() as f64
}
