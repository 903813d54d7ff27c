//! Size guards for exhaustive searches.
//!
//! `MECHLAB_BRUTE_CAP` overrides the defaults. It takes either a single
//! item count (`"12"`) applied to every exhaustive search, or
//! `"items,bidders"` to also raise the bidder guard of the welfare oracle.

use std::sync::OnceLock;

pub const ENV_VAR: &str = "MECHLAB_BRUTE_CAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteLimits {
    /// Max items for exhaustive demand scans.
    pub demand_items: usize,
    /// Max items for the welfare oracle.
    pub opt_items: usize,
    /// Max bidders for the welfare oracle.
    pub opt_bidders: usize,
}

impl Default for BruteLimits {
    fn default() -> Self {
        BruteLimits { demand_items: 20, opt_items: 10, opt_bidders: 6 }
    }
}

impl BruteLimits {
    /// Applies an override string in the `MECHLAB_BRUTE_CAP` format.
    pub fn with_override(mut self, spec: &str) -> Option<Self> {
        let mut parts = spec.split(',').map(str::trim);
        let items: usize = parts.next()?.parse().ok()?;
        self.demand_items = items;
        self.opt_items = items;
        if let Some(b) = parts.next() {
            self.opt_bidders = b.parse().ok()?;
        }
        parts.next().is_none().then_some(self)
    }

    /// Process-wide limits, read once from the environment.
    pub fn current() -> BruteLimits {
        static LIMITS: OnceLock<BruteLimits> = OnceLock::new();
        *LIMITS.get_or_init(|| {
            let base = BruteLimits::default();
            std::env::var(ENV_VAR).ok().and_then(|s| base.with_override(&s)).unwrap_or(base)
        })
    }
}
