//! Team-draft multileaving. Two-ranker interleaving is the two-team case.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::click::ClickOutcome;
use crate::ranking::RankedList;

/// Number of results shown to the simulated user.
pub const DISPLAY_LENGTH: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub doc: usize,
    pub team: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterleavedList {
    pub entries: Vec<Entry>,
}

impl InterleavedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn docs(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.doc).collect()
    }

    /// Per-team contribution counts.
    pub fn team_sizes(&self, team_count: usize) -> Vec<usize> {
        let mut sizes = vec![0; team_count];
        for e in &self.entries {
            sizes[e.team] += 1;
        }
        sizes
    }
}

/// Merges `lists` in rounds: each round visits the teams in a fresh random
/// order and each team appends its best document not yet shown. Exhausted
/// teams are skipped.
pub fn team_draft<R: Rng + ?Sized>(
    lists: &[RankedList],
    display_length: usize,
    rng: &mut R,
) -> InterleavedList {
    assert!(lists.len() >= 2, "team draft needs at least two lists");
    assert!(display_length >= 1, "display length must be positive");
    let universe = lists
        .iter()
        .flat_map(|l| l.as_slice().iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let mut placed = vec![false; universe];
    let mut cursors = vec![0usize; lists.len()];
    let mut order: Vec<usize> = (0..lists.len()).collect();
    let mut entries = Vec::with_capacity(display_length);

    'rounds: while entries.len() < display_length {
        order.shuffle(rng);
        let mut progressed = false;
        for &team in &order {
            if entries.len() == display_length {
                break 'rounds;
            }
            let list = lists[team].as_slice();
            let cursor = &mut cursors[team];
            while *cursor < list.len() && placed[list[*cursor]] {
                *cursor += 1;
            }
            if let Some(&doc) = list.get(*cursor) {
                placed[doc] = true;
                entries.push(Entry { doc, team });
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    InterleavedList { entries }
}

/// Click counts per team.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreditVector(pub Vec<u32>);

impl CreditVector {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

pub fn attribute_credit(
    interleaved: &InterleavedList,
    clicks: &ClickOutcome,
    team_count: usize,
) -> CreditVector {
    let mut credits = vec![0u32; team_count];
    for &pos in clicks.positions() {
        assert!(
            pos >= 1 && pos <= interleaved.len(),
            "click position {pos} outside list of length {}",
            interleaved.len()
        );
        credits[interleaved.entries[pos - 1].team] += 1;
    }
    CreditVector(credits)
}

/// Teams with the maximal credit, ascending. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinnerSet(pub Vec<usize>);

impl WinnerSet {
    pub fn contains(&self, team: usize) -> bool {
        self.0.contains(&team)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }
}

/// Argmax set of the credits; without any clicks the current ranker (team 0)
/// wins alone.
pub fn infer_winners(credits: &CreditVector) -> WinnerSet {
    let best = credits.0.iter().copied().max().unwrap_or(0);
    if best == 0 {
        return WinnerSet(vec![0]);
    }
    WinnerSet(
        credits
            .0
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == best)
            .map(|(i, _)| i)
            .collect(),
    )
}
