//! Labeled synthetic ledgers.
//!
//! Normal traffic: per-account log-normal amounts, arrivals thinned by a
//! daytime-heavy hourly profile, a small channel vocabulary. Anomalies are
//! contiguous episodes of one pattern, every record in an episode labeled 1.
//! Each account receives exactly `round(anomaly_rate * records_per_account)`
//! anomalous records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::SeededRng;

use super::{Direction, TransactionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyKind {
    /// Amount multiplied by 10–50.
    AmountSpike,
    /// Inter-arrival time divided by 20 for 5–15 records.
    Burst,
    /// Activity between 03:00 and 05:00.
    OffHours,
    /// Repeated round amounts just under [`STRUCTURING_THRESHOLD`].
    Structuring,
}

impl AnomalyKind {
    pub const ALL: [AnomalyKind; 4] = [
        AnomalyKind::AmountSpike,
        AnomalyKind::Burst,
        AnomalyKind::OffHours,
        AnomalyKind::Structuring,
    ];

    fn episode_len(self, rng: &mut SeededRng) -> usize {
        let (lo, hi) = match self {
            AnomalyKind::AmountSpike => (1, 3),
            AnomalyKind::Burst => (5, 15),
            AnomalyKind::OffHours => (2, 6),
            AnomalyKind::Structuring => (3, 8),
        };
        lo + rng.below(hi - lo + 1)
    }
}

pub const STRUCTURING_THRESHOLD: f64 = 10_000.0;

const CHANNELS: [&str; 5] = ["card", "ach", "wire", "atm", "online"];
const MEAN_GAP_SECONDS: f64 = 7_200.0;
const DEFAULT_START: i64 = 1_600_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub accounts: usize,
    pub records_per_account: usize,
    pub anomaly_rate: f64,
    pub seed: u64,
    pub patterns: Vec<AnomalyKind>,
    pub start_timestamp: i64,
}

impl SynthConfig {
    /// All four anomaly patterns.
    pub fn new(accounts: usize, records_per_account: usize, anomaly_rate: f64, seed: u64) -> Self {
        Self {
            accounts,
            records_per_account,
            anomaly_rate,
            seed,
            patterns: AnomalyKind::ALL.to_vec(),
            start_timestamp: DEFAULT_START,
        }
    }

    pub fn with_patterns(mut self, patterns: &[AnomalyKind]) -> Self {
        self.patterns = patterns.to_vec();
        self
    }
}

/// Relative arrival intensity by UTC hour.
fn hourly_profile(hour: i64) -> f64 {
    match hour {
        8..=20 => 1.0,
        6 | 7 | 21 | 22 => 0.3,
        _ => 0.03,
    }
}

fn hour_of(ts: i64) -> i64 {
    ts.rem_euclid(86_400) / 3_600
}

fn round_cents(x: f64) -> f64 {
    ((x * 100.0).round() / 100.0).max(0.01)
}

/// Generates a ledger sorted by `(account_id, timestamp)`. Output is a pure
/// function of `cfg`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Vec<TransactionRecord>> {
    if !(0.0..=0.5).contains(&cfg.anomaly_rate) {
        return Err(Error::Param(format!(
            "anomaly_rate must be in [0, 0.5], got {}",
            cfg.anomaly_rate
        )));
    }
    if cfg.anomaly_rate > 0.0 && cfg.patterns.is_empty() {
        return Err(Error::Param(
            "anomaly_rate > 0 needs at least one pattern".into(),
        ));
    }
    if cfg.start_timestamp < 0 {
        return Err(Error::Param("start_timestamp must be >= 0".into()));
    }
    let mut out = Vec::with_capacity(cfg.accounts * cfg.records_per_account);
    for a in 0..cfg.accounts {
        let mut rng = SeededRng::derive(cfg.seed, a as u64);
        out.extend(generate_account(cfg, a, &mut rng));
    }
    Ok(out)
}

/// Places non-overlapping episodes covering exactly `target` slots.
fn plan_episodes(
    n: usize,
    target: usize,
    patterns: &[AnomalyKind],
    rng: &mut SeededRng,
) -> Vec<Option<AnomalyKind>> {
    let mut plan = vec![None; n];
    let mut placed = 0;
    let mut attempts = 0;
    while placed < target {
        attempts += 1;
        let kind = patterns[rng.below(patterns.len())];
        let len = kind.episode_len(rng).min(target - placed);
        if len > n {
            break;
        }
        let start = rng.below(n - len + 1);
        // Keep a normal record between episodes while space allows.
        let separated = attempts < 2_000;
        let lo = if separated {
            start.saturating_sub(1)
        } else {
            start
        };
        let hi = if separated {
            (start + len + 1).min(n)
        } else {
            start + len
        };
        if plan[lo..hi].iter().all(Option::is_none) {
            plan[start..start + len]
                .iter_mut()
                .for_each(|p| *p = Some(kind));
            placed += len;
        } else if attempts > 4_000 {
            // Dense plans: fill remaining free slots in order.
            for p in plan
                .iter_mut()
                .filter(|p| p.is_none())
                .take(target - placed)
            {
                *p = Some(patterns[rng.below(patterns.len())]);
            }
            break;
        }
    }
    plan
}

// Thinned arrivals: skip ahead until the hourly profile accepts.
fn regular_gap(ts: i64, rng: &mut SeededRng) -> i64 {
    let mut t = ts;
    loop {
        t += 60 + rng.exponential(MEAN_GAP_SECONDS / 4.0) as i64;
        if rng.next_f64() < hourly_profile(hour_of(t)) {
            return t - ts;
        }
    }
}

fn generate_account(
    cfg: &SynthConfig,
    index: usize,
    rng: &mut SeededRng,
) -> Vec<TransactionRecord> {
    let n = cfg.records_per_account;
    let account_id = format!("acct-{index:04}");
    let location = rng.uniform(50f64.ln(), 500f64.ln());
    let spread = 0.4;
    let channel_weights: Vec<f64> = CHANNELS.iter().map(|_| rng.uniform(0.1, 1.0)).collect();
    let weight_total: f64 = channel_weights.iter().sum();
    let counterparties: Vec<String> = (0..6).map(|k| format!("cp-{index:04}-{k}")).collect();

    let target = (cfg.anomaly_rate * n as f64).round() as usize;
    let plan = if target > 0 {
        plan_episodes(n, target, &cfg.patterns, rng)
    } else {
        vec![None; n]
    };

    let mut ts = cfg.start_timestamp + rng.below(86_400) as i64;
    let mut out = Vec::with_capacity(n);
    for (i, kind) in plan.into_iter().enumerate() {
        let next = match kind {
            Some(AnomalyKind::Burst) => ts + (regular_gap(ts, rng) as f64 / 20.0).max(1.0) as i64,
            Some(AnomalyKind::OffHours) => {
                let candidate = ts + 60 + rng.below(1_140) as i64;
                if (3..5).contains(&hour_of(candidate)) {
                    candidate
                } else {
                    let day = ts.div_euclid(86_400) * 86_400;
                    let mut t = day + 3 * 3_600 + rng.below(7_200) as i64;
                    if t <= ts {
                        t += 86_400;
                    }
                    t
                }
            }
            _ if i == 0 => ts,
            _ => ts + regular_gap(ts, rng),
        };
        ts = next.max(ts + i64::from(i > 0));

        let base = rng.normal(location, spread).exp();
        let amount = match kind {
            Some(AnomalyKind::AmountSpike) => base * rng.uniform(10.0, 50.0),
            Some(AnomalyKind::Structuring) => {
                STRUCTURING_THRESHOLD - 50.0 * (1 + rng.below(6)) as f64
            }
            _ => base,
        };
        let mut pick = rng.next_f64() * weight_total;
        let mut channel = CHANNELS[CHANNELS.len() - 1];
        for (c, w) in CHANNELS.iter().zip(&channel_weights) {
            if pick < *w {
                channel = c;
                break;
            }
            pick -= w;
        }
        let direction = if rng.bernoulli(0.3) {
            Direction::Credit
        } else {
            Direction::Debit
        };
        out.push(TransactionRecord {
            timestamp: ts,
            account_id: account_id.clone(),
            amount: round_cents(amount),
            direction,
            channel: channel.to_string(),
            counterparty: counterparties[rng.below(counterparties.len())].clone(),
            label: Some(u8::from(kind.is_some())),
        });
    }
    out
}
