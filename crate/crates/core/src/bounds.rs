//! Limits on exhaustive searches.

use crate::error::{PsError, Result};
use crate::perm::{factorial, profile_count};

/// Environment variable overriding [`Bounds::max_profiles`].
pub const BOUND_ENV: &str = "PSLAB_BOUND";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Largest `m` for which all `m!` reports of one agent are enumerated.
    pub max_houses: usize,
    /// Largest `(m!)^n` profile space that may be enumerated.
    pub max_profiles: u64,
    /// Largest number of memoized states in the sub-stage eating game.
    pub max_game_states: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_houses: 8,
            max_profiles: 10_000_000,
            max_game_states: 5_000_000,
        }
    }
}

impl Bounds {
    /// Defaults, with `max_profiles` taken from `PSLAB_BOUND` when set.
    pub fn from_env() -> Result<Self> {
        let mut b = Bounds::default();
        if let Ok(v) = std::env::var(BOUND_ENV) {
            b.max_profiles = v.trim().parse().map_err(|_| {
                PsError::InvalidParameter(format!("{BOUND_ENV}={v:?} is not an integer"))
            })?;
        }
        Ok(b)
    }

    /// Number of reports `m!`, if within `max_houses`.
    pub fn check_reports(&self, m: usize) -> Result<u64> {
        if m > self.max_houses {
            return Err(PsError::BoundExceeded {
                what: "report enumeration",
                needed: format!("m = {m}"),
                bound: format!("m <= {}", self.max_houses),
            });
        }
        Ok(factorial(m).expect("m is small"))
    }

    /// Number of profiles `(m!)^n`, if within `max_profiles`.
    pub fn check_profiles(&self, n: usize, m: usize) -> Result<u64> {
        self.check_reports(m)?;
        let count = profile_count(n, m)?;
        if count > self.max_profiles {
            return Err(PsError::BoundExceeded {
                what: "profile enumeration",
                needed: count.to_string(),
                bound: self.max_profiles.to_string(),
            });
        }
        Ok(count)
    }
}
