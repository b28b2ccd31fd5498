//! Linear rankers.

use std::fmt;
use std::str::FromStr;

use crate::data::{Document, Query};
use crate::error::Error;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `a + scale * b`
pub fn axpy(a: &[f64], scale: f64, b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x + scale * y).collect()
}

/// A linear scoring function over document features.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranker {
    weights: Vec<f64>,
}

impl Ranker {
    pub fn new(weights: Vec<f64>) -> Self {
        assert!(
            weights.iter().all(|w| w.is_finite()),
            "ranker weights must be finite"
        );
        Ranker { weights }
    }

    pub fn zeros(dim: usize) -> Self {
        Ranker {
            weights: vec![0.0; dim],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// The ranker displaced by `step * direction`.
    pub fn shifted(&self, step: f64, direction: &[f64]) -> Ranker {
        Ranker::new(axpy(&self.weights, step, direction))
    }

    pub fn score(&self, doc: &Document) -> f64 {
        dot(&self.weights, &doc.features)
    }

    /// Document indices by descending score, ties by ascending index.
    pub fn rank(&self, query: &Query) -> RankedList {
        assert!(!query.is_empty(), "cannot rank an empty query");
        let scores: Vec<f64> = query.documents.iter().map(|d| self.score(d)).collect();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        RankedList(order)
    }
}

pub fn score(ranker: &Ranker, doc: &Document) -> f64 {
    ranker.score(doc)
}

pub fn rank(ranker: &Ranker, query: &Query) -> RankedList {
    ranker.rank(query)
}

/// Single line of whitespace-separated decimals.
impl fmt::Display for Ranker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

impl FromStr for Ranker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let weights = s
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: 1,
                        message: format!("invalid weight {tok:?}"),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if weights.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "no weights".into(),
            });
        }
        Ok(Ranker { weights })
    }
}

/// Indices into a query's documents, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList(pub Vec<usize>);

impl RankedList {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Relevance grades along the list.
    pub fn grades(&self, query: &Query) -> Vec<u8> {
        self.0.iter().map(|&i| query.documents[i].relevance).collect()
    }
}

/// Elementwise sum of all candidate document features.
pub fn aggregate_features(query: &Query) -> Vec<f64> {
    assert!(!query.is_empty(), "cannot aggregate an empty query");
    let mut sum = vec![0.0; query.dim()];
    for doc in &query.documents {
        for (s, x) in sum.iter_mut().zip(&doc.features) {
            *s += x;
        }
    }
    sum
}
