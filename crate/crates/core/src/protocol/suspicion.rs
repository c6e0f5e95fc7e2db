use std::collections::BTreeMap;

/// Contradictions needed before a sender is accused.
pub const DEFAULT_ACCUSE_AFTER: u32 = 2;

/// One accepted claim seen during an observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservedClaim {
    pub sender: u64,
    pub category: u16,
    pub claim: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WindowReport {
    /// Senders that disagreed with the majority, one per (sender, category).
    pub contradictions: Vec<(u64, u16)>,
    /// Senders whose contradiction count reached the accusation threshold.
    pub suspects: Vec<u64>,
}

/// Counts, per sender and category, how often a sender's claim disagreed
/// with the majority of VC-holding senders in an observation window.
///
/// Counts persist across windows; the per-window claims do not. A sender is
/// reported once its count reaches `accuse_after`, after which its count
/// starts again from zero.
#[derive(Debug, Clone)]
pub struct SuspicionTracker {
    accuse_after: u32,
    counts: BTreeMap<(u64, u16), u32>,
}

impl Default for SuspicionTracker {
    fn default() -> Self {
        SuspicionTracker::new(DEFAULT_ACCUSE_AFTER)
    }
}

impl SuspicionTracker {
    pub fn new(accuse_after: u32) -> Self {
        SuspicionTracker {
            accuse_after: accuse_after.max(1),
            counts: BTreeMap::new(),
        }
    }

    pub fn count(&self, sender: u64, category: u16) -> u32 {
        self.counts.get(&(sender, category)).copied().unwrap_or(0)
    }

    /// Closes one observation window. The latest claim of each sender in a
    /// category is compared against that category's strict-majority claim;
    /// categories without a strict majority contribute nothing.
    pub fn observe(&mut self, batch: &[ObservedClaim]) -> WindowReport {
        let mut by_category: BTreeMap<u16, BTreeMap<u64, i64>> = BTreeMap::new();
        for c in batch {
            by_category.entry(c.category).or_default().insert(c.sender, c.claim);
        }

        let mut report = WindowReport::default();
        for (category, claims) in by_category {
            let Some(majority) = strict_majority(claims.values().copied()) else {
                continue;
            };
            for (&sender, &claim) in &claims {
                if claim == majority {
                    continue;
                }
                report.contradictions.push((sender, category));
                let count = self.counts.entry((sender, category)).or_insert(0);
                *count += 1;
                if *count >= self.accuse_after {
                    *count = 0;
                    if !report.suspects.contains(&sender) {
                        report.suspects.push(sender);
                    }
                }
            }
        }
        report
    }
}

fn strict_majority(claims: impl Iterator<Item = i64>) -> Option<i64> {
    let mut tally: BTreeMap<i64, usize> = BTreeMap::new();
    let mut total = 0usize;
    for c in claims {
        *tally.entry(c).or_insert(0) += 1;
        total += 1;
    }
    tally.into_iter().find(|&(_, n)| 2 * n > total).map(|(c, _)| c)
}
