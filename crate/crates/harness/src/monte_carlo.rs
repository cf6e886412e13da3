//! Seed fan-out and parallel replication.
//!
//! Replication `r` of a run with master seed `m` uses
//! `split(m, r) = mix(m + (r + 1)·γ)` with `γ = 0x9E3779B97F4A7C15` and `mix`
//! the SplitMix64 finalizer. The counter is injective in `r` and `mix` is a
//! bijection of `u64`, so the seeds of one run are pairwise distinct. The
//! same function splits a replication seed into sub-streams.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use crate::error::{HarnessError, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` derived from `seed`.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Named scalar outputs of one replication, in a fixed order.
pub type Outputs = Vec<(String, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    /// Outputs, or the failure message.
    pub outcome: std::result::Result<Outputs, String>,
}

impl RepRecord {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.outcome.as_ref().ok()?.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Values of `name` over the successful replications, in replication order.
pub fn column(records: &[RepRecord], name: &str) -> Vec<f64> {
    records.iter().filter_map(|r| r.get(name)).collect()
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "replication panicked".to_string()
    }
}

/// Runs `step(r, seed_r)` for `r = 0..reps` on `workers` threads.
///
/// Records come back in replication order whatever the scheduling. A panic
/// or error in one replication is recorded as its failure; `inject` lists
/// replications that fail on purpose.
pub fn monte_carlo<F>(
    reps: usize,
    master_seed: u64,
    workers: usize,
    inject: &[usize],
    step: F,
) -> Result<Vec<RepRecord>>
where
    F: Fn(usize, u64) -> std::result::Result<Outputs, String> + Sync,
{
    if reps < 1 {
        return Err(HarnessError::config("replications must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::config(format!("cannot build worker pool: {e}")))?;
    let run = |r: usize| {
        let seed = split_seed(master_seed, r as u64);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            if inject.contains(&r) {
                panic!("injected failure in replication {r}");
            }
            step(r, seed)
        }))
        .unwrap_or_else(|p| Err(panic_message(p)));
        RepRecord { rep: r, seed, outcome }
    };
    Ok(pool.install(|| (0..reps).into_par_iter().map(run).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn seeds_are_distinct() {
        let s: HashSet<u64> = (0..10_000).map(|r| split_seed(7, r)).collect();
        assert_eq!(s.len(), 10_000);
    }

    #[test]
    fn order_is_independent_of_workers() {
        let step = |r: usize, s: u64| Ok(vec![("v".to_string(), (s % 1000) as f64 + r as f64)]);
        let a = monte_carlo(50, 3, 1, &[], step).unwrap();
        let b = monte_carlo(50, 3, 8, &[], step).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, r)| r.rep == i));
    }

    #[test]
    fn failures_are_recorded() {
        let recs = monte_carlo(3, 1, 2, &[2], |_, _| Ok(vec![("x".into(), 1.0)])).unwrap();
        assert_eq!(recs.iter().filter(|r| r.is_ok()).count(), 2);
        assert!(recs[2].outcome.as_ref().unwrap_err().contains("injected"));
        let recs = monte_carlo(2, 1, 1, &[], |r, _| if r == 0 { Err("bad".into()) } else { Ok(vec![]) }).unwrap();
        assert_eq!(recs[0].outcome, Err("bad".to_string()));
    }

    #[test]
    fn constant_statistic_averages_to_itself() {
        let recs = monte_carlo(16, 9, 4, &[], |_, _| Ok(vec![("c".into(), 0.375)])).unwrap();
        let c = column(&recs, "c");
        assert_eq!(c.iter().sum::<f64>() / c.len() as f64, 0.375);
    }
}
