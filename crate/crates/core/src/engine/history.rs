//! Fixed-capacity FIFO histories kept by the null-space learner.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::click::ClickOutcome;
use crate::data::Query;
use crate::interleave::InterleavedList;
use crate::metrics::{clicked_docs, eval_clicked, DEFAULT_CUTOFF};

/// An explored direction and its click-credit deficit against the current
/// ranker. Only negative qualities are ever stored.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRecord {
    pub direction: Vec<f64>,
    pub quality: i32,
}

#[derive(Debug, Clone)]
pub struct GradientQueue {
    dim: usize,
    capacity: usize,
    records: VecDeque<GradientRecord>,
}

impl GradientQueue {
    pub fn new(dim: usize, capacity: usize) -> Self {
        assert!(capacity >= 1, "queue capacity must be positive");
        GradientQueue {
            dim,
            capacity,
            records: VecDeque::with_capacity(capacity),
        }
    }

    /// Appends, evicting the oldest record when full.
    pub fn push(&mut self, record: GradientRecord) {
        assert!(record.quality < 0, "only negative-quality directions are kept");
        assert_eq!(record.direction.len(), self.dim, "direction has wrong dimension");
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &GradientRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// A served query with what was shown and what was clicked.
#[derive(Debug, Clone)]
pub struct QueryRecord {
    pub query: Arc<Query>,
    pub displayed: InterleavedList,
    pub clicks: ClickOutcome,
    clicked: Vec<usize>,
    quality: f64,
}

impl QueryRecord {
    pub fn new(query: Arc<Query>, displayed: InterleavedList, clicks: ClickOutcome) -> Self {
        let clicked = clicked_docs(&displayed, clicks.positions());
        let quality = eval_clicked(&displayed.docs(), &clicked, DEFAULT_CUTOFF);
        QueryRecord {
            query,
            displayed,
            clicks,
            clicked,
            quality,
        }
    }

    /// Document indices the user clicked.
    pub fn clicked_docs(&self) -> &[usize] {
        &self.clicked
    }

    /// Click-based quality of the displayed list.
    pub fn quality(&self) -> f64 {
        self.quality
    }
}

#[derive(Debug, Clone)]
pub struct QueryQueue {
    capacity: usize,
    records: VecDeque<QueryRecord>,
}

impl QueryQueue {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "queue capacity must be positive");
        QueryQueue {
            capacity,
            records: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, record: QueryRecord) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &QueryRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// The `k` records with the lowest click quality, newer first on ties.
    pub fn worst(&self, k: usize) -> Vec<&QueryRecord> {
        let mut indexed: Vec<(usize, &QueryRecord)> = self.records.iter().enumerate().collect();
        indexed.sort_by(|(ia, a), (ib, b)| a.quality.total_cmp(&b.quality).then(ib.cmp(ia)));
        indexed.into_iter().take(k).map(|(_, r)| r).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Document;
    use crate::interleave::Entry;

    fn record(direction: f64, quality: i32) -> GradientRecord {
        GradientRecord {
            direction: vec![direction],
            quality,
        }
    }

    #[test]
    fn gradient_queue_evicts_oldest() {
        let mut q = GradientQueue::new(1, 3);
        for i in 0..5 {
            q.push(record(i as f64, -1));
            assert!(q.len() <= 3);
        }
        let kept: Vec<f64> = q.iter().map(|r| r.direction[0]).collect();
        assert_eq!(kept, [2.0, 3.0, 4.0]);
    }

    #[test]
    #[should_panic(expected = "negative-quality")]
    fn gradient_queue_rejects_non_negative() {
        GradientQueue::new(1, 3).push(record(1.0, 0));
    }

    fn served(clicked_positions: Vec<usize>) -> QueryRecord {
        let query = Arc::new(Query {
            qid: "q".into(),
            documents: (0..3)
                .map(|i| Document {
                    doc_id: i.to_string(),
                    features: vec![i as f64],
                    relevance: 0,
                })
                .collect(),
        });
        let displayed = InterleavedList {
            entries: (0..3).map(|doc| Entry { doc, team: 0 }).collect(),
        };
        QueryRecord::new(query, displayed, ClickOutcome::new(clicked_positions))
    }

    #[test]
    fn query_queue_worst_selection() {
        let mut q = QueryQueue::new(4);
        q.push(served(vec![1])); // 1.0
        q.push(served(vec![2])); // 0.63
        q.push(served(vec![3])); // 0.5
        q.push(served(vec![2])); // 0.63, newer
        q.push(served(vec![1])); // evicts the first
        assert_eq!(q.len(), 4);
        let worst = q.worst(2);
        assert_eq!(worst[0].clicked_docs(), [2]);
        assert_eq!(worst[1].clicked_docs(), [1]);
        assert!(std::ptr::eq(worst[1], q.iter().nth(2).unwrap()));
    }
}
