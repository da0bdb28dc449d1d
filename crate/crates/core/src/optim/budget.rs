use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Episode budget of a design run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_episodes: u64,
    consumed: u64,
}

impl Budget {
    pub const DEFAULT_EPISODES: u64 = 100_000;

    pub fn new(max_episodes: u64) -> Self {
        Self {
            max_episodes,
            consumed: 0,
        }
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn remaining(&self) -> u64 {
        self.max_episodes - self.consumed
    }

    pub fn can_afford(&self, n: u64) -> bool {
        n <= self.remaining()
    }

    /// Reserves `n` episodes, or refuses without changing anything.
    pub fn charge(&mut self, n: u64) -> Result<()> {
        if !self.can_afford(n) {
            return Err(Error::BudgetExhausted {
                requested: n,
                remaining: self.remaining(),
            });
        }
        self.consumed += n;
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::new(Self::DEFAULT_EPISODES)
    }
}
