//! Work budget guarding the exact (big-number) computations.

use crate::error::{Error, Result};

/// Environment variable overriding the default budget.
pub const BUDGET_ENV: &str = "INVWALK_BUDGET";

/// Default budget: 10^9 elementary updates.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Upper bound on abstract work units (cell updates, big-integer operations)
/// a single call may perform before refusing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkBudget(pub u64);

impl Default for WorkBudget {
    fn default() -> Self {
        WorkBudget(DEFAULT_BUDGET)
    }
}

impl WorkBudget {
    pub fn unlimited() -> Self {
        WorkBudget(u64::MAX)
    }

    /// Reads `INVWALK_BUDGET`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(BUDGET_ENV) {
            Ok(raw) => raw
                .trim()
                .replace('_', "")
                .parse::<u64>()
                .map(WorkBudget)
                .map_err(|_| Error::InvalidArgument(format!("{BUDGET_ENV}={raw:?} is not an integer"))),
            Err(_) => Ok(WorkBudget::default()),
        }
    }

    pub fn check(&self, operation: &'static str, required: u128) -> Result<()> {
        if required > u128::from(self.0) {
            Err(Error::BudgetExceeded {
                operation,
                required,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_over_budget() {
        let b = WorkBudget(10);
        assert!(b.check("x", 10).is_ok());
        let err = b.check("x", 11).unwrap_err();
        assert_eq!(err.kind(), "budget-exceeded");
    }
}
