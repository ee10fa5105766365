use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Session;
use crate::goal_reasoner::GoalMode;

/// Nearest-rank percentiles in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub samples: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl TimingStats {
    pub fn from_durations(samples: &[Duration]) -> Self {
        if samples.is_empty() {
            return TimingStats::default();
        }
        let mut ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1000.0).collect();
        ms.sort_by(f64::total_cmp);
        let rank = |p: f64| ms[((p * ms.len() as f64).ceil() as usize).clamp(1, ms.len()) - 1];
        TimingStats {
            samples: ms.len(),
            mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
            p50_ms: rank(0.50),
            p95_ms: rank(0.95),
            p99_ms: rank(0.99),
            max_ms: *ms.last().expect("non-empty"),
        }
    }
}

/// Goal counts and reasoning latency for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub steps: u64,
    pub goals_created: usize,
    pub goals_by_type: BTreeMap<String, usize>,
    pub finished: usize,
    pub dropped: usize,
    pub active: usize,
    pub latency: TimingStats,
}

impl RunReport {
    pub(super) fn new(session: &Session) -> Self {
        let ledger = &session.current().reasoner.ledger;
        let mut by_type = BTreeMap::new();
        for g in ledger.goals() {
            *by_type.entry(g.goal_type.as_str().to_string()).or_insert(0) += 1;
        }
        let count = |m: GoalMode| ledger.goals().filter(|g| g.mode == m).count();
        RunReport {
            scenario: session.sim.world.config.name.clone(),
            steps: session.time(),
            goals_created: ledger.len(),
            goals_by_type: by_type,
            finished: count(GoalMode::Finished),
            dropped: count(GoalMode::Dropped),
            active: ledger.active().count(),
            latency: TimingStats::from_durations(&session.reasoning_times()),
        }
    }
}
