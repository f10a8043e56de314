//! Fixtures shared by the criterion benches.

use std::collections::BTreeMap;

use sbsp::{Model, SufficientStats};

/// Grouped binary-activity statistics with `users_per_bucket` users on each
/// active-day count `1..=d0`, exercising the likelihood's grouped path the
/// way a very large panel would.
pub fn synthetic_be_stats(d0: u32, users_per_bucket: u64) -> SufficientStats {
    let per_user: BTreeMap<u64, u64> = (1..=d0 as u64).map(|m| (m, users_per_bucket)).collect();
    SufficientStats {
        model: Model::Be,
        d0,
        n_users: d0 as u64 * users_per_bucket,
        per_user,
        daily_counts: BTreeMap::new(),
        total_triggers: None,
    }
}
