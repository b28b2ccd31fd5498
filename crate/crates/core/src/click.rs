//! Cascade click model.
//!
//! The user scans the list top-down. At each position they click with a
//! probability depending on the document's relevance grade; after a click they
//! stop with a grade-dependent probability. Unclicked documents never end the
//! scan. Per position the RNG is consumed as: click draw, then stop draw if
//! clicked.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::data::{Query, MAX_GRADE};
use crate::error::Error;
use crate::interleave::InterleavedList;

/// Clicked 1-based positions, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClickOutcome {
    positions: Vec<usize>,
}

impl ClickOutcome {
    pub fn new(positions: Vec<usize>) -> Self {
        assert!(
            positions.first().is_none_or(|&p| p >= 1),
            "positions are 1-based"
        );
        assert!(
            positions.windows(2).all(|w| w[0] < w[1]),
            "positions must be strictly increasing"
        );
        ClickOutcome { positions }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClickModelKind {
    Perfect,
    Navigational,
    Informational,
}

impl ClickModelKind {
    pub const ALL: [ClickModelKind; 3] = [
        ClickModelKind::Perfect,
        ClickModelKind::Navigational,
        ClickModelKind::Informational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClickModelKind::Perfect => "perfect",
            ClickModelKind::Navigational => "navigational",
            ClickModelKind::Informational => "informational",
        }
    }
}

impl fmt::Display for ClickModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClickModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClickModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown click model {s:?} (expected perfect, navigational or informational)"
                ))
            })
    }
}

/// Click and stop probabilities indexed by relevance grade 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickModel {
    pub kind: ClickModelKind,
    pub click_prob: [f64; 3],
    pub stop_prob: [f64; 3],
}

impl ClickModel {
    pub const PERFECT: ClickModel = ClickModel {
        kind: ClickModelKind::Perfect,
        click_prob: [0.0, 0.5, 1.0],
        stop_prob: [0.0, 0.0, 0.0],
    };

    pub const NAVIGATIONAL: ClickModel = ClickModel {
        kind: ClickModelKind::Navigational,
        click_prob: [0.05, 0.5, 0.95],
        stop_prob: [0.2, 0.5, 0.9],
    };

    pub const INFORMATIONAL: ClickModel = ClickModel {
        kind: ClickModelKind::Informational,
        click_prob: [0.4, 0.7, 0.9],
        stop_prob: [0.1, 0.3, 0.5],
    };

    pub fn preset(kind: ClickModelKind) -> ClickModel {
        match kind {
            ClickModelKind::Perfect => Self::PERFECT,
            ClickModelKind::Navigational => Self::NAVIGATIONAL,
            ClickModelKind::Informational => Self::INFORMATIONAL,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn simulate<R: Rng + ?Sized>(&self, grades: &[u8], rng: &mut R) -> ClickOutcome {
        self.simulate_traced(grades, rng).0
    }

    /// Like [`simulate`](Self::simulate), also returning the 1-based position
    /// of the click after which the user stopped scanning, if any.
    pub fn simulate_traced<R: Rng + ?Sized>(
        &self,
        grades: &[u8],
        rng: &mut R,
    ) -> (ClickOutcome, Option<usize>) {
        let mut positions = Vec::new();
        for (i, &g) in grades.iter().enumerate() {
            assert!(g <= MAX_GRADE, "relevance grade {g} out of range");
            let g = g as usize;
            if rng.random::<f64>() < self.click_prob[g] {
                positions.push(i + 1);
                if rng.random::<f64>() < self.stop_prob[g] {
                    return (ClickOutcome { positions }, Some(i + 1));
                }
            }
        }
        (ClickOutcome { positions }, None)
    }
}

impl FromStr for ClickModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(ClickModel::preset)
    }
}

pub fn simulate<R: Rng + ?Sized>(grades: &[u8], model: &ClickModel, rng: &mut R) -> ClickOutcome {
    model.simulate(grades, rng)
}

/// Anything that produces clicks for a displayed list.
pub trait ClickSimulator {
    fn clicks(&self, query: &Query, shown: &InterleavedList, rng: &mut dyn RngCore) -> ClickOutcome;
}

impl ClickSimulator for ClickModel {
    fn clicks(&self, query: &Query, shown: &InterleavedList, rng: &mut dyn RngCore) -> ClickOutcome {
        let grades: Vec<u8> = shown
            .entries
            .iter()
            .map(|e| query.documents[e.doc].relevance)
            .collect();
        self.simulate(&grades, rng)
    }
}
