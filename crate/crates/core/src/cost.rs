//! Operation counters behind the computation-cost metric.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign};

/// Per-subsystem operation counts. Counters from independent scopes add up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCounter {
    /// Path-search node expansions.
    pub search_expansions: u64,
    /// Embedding similarity evaluations.
    pub similarity_evals: u64,
    /// Q-network forward and backward passes.
    pub net_passes: u64,
    /// Content index lookups.
    pub index_lookups: u64,
}

impl CostCounter {
    pub fn total(&self) -> u64 {
        self.search_expansions + self.similarity_evals + self.net_passes + self.index_lookups
    }
}

impl AddAssign for CostCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.search_expansions += rhs.search_expansions;
        self.similarity_evals += rhs.similarity_evals;
        self.net_passes += rhs.net_passes;
        self.index_lookups += rhs.index_lookups;
    }
}

impl Add for CostCounter {
    type Output = CostCounter;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_across_scopes() {
        let a = CostCounter {
            search_expansions: 3,
            similarity_evals: 1,
            ..Default::default()
        };
        let b = CostCounter {
            search_expansions: 2,
            index_lookups: 7,
            ..Default::default()
        };
        let c = a + b;
        assert_eq!(c.total(), a.total() + b.total());
        assert_eq!(c.search_expansions, 5);
    }
}
