//! Sampling estimate of the unsuccessful-delivery percentage.
//!
//! Draws are made with ChaCha8 seeded from the user seed; shard `k` uses
//! stream `k` of that key, so results are identical across platforms and
//! thread counts. Shard statistics are merged in shard order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Schedule, ScheduleError};
use crate::instance::Instance;

const SHARD: u64 = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate_pct: f64,
    pub standard_error: f64,
    pub samples: u64,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (other.n as f64 / n as f64);
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64 / n as f64);
        Moments { n, mean, m2 }
    }
}

/// Replays `schedule` under `samples` independently drawn (takeoff,
/// breakdown) scenario pairs and averages the percentage of packages lost.
pub fn monte_carlo_unsuccessful(
    instance: &Instance,
    schedule: &Schedule,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, ScheduleError> {
    schedule.check(instance)?;
    if samples == 0 {
        return Err(ScheduleError("at least one sample is required".into()));
    }
    let c = instance.num_customers();
    let routes: Vec<(usize, Vec<usize>)> = instance
        .drones
        .iter()
        .enumerate()
        .filter_map(|(d, dr)| {
            schedule.routes.get(&dr.id).map(|r| {
                (
                    d,
                    r.sequence
                        .iter()
                        .map(|id| instance.customer_index(id).expect("checked"))
                        .collect(),
                )
            })
        })
        .collect();
    let sc = &instance.scenarios;
    let takeoff = WeightedIndex::new(sc.takeoff.iter().map(|s| s.probability))
        .map_err(|e| ScheduleError(format!("takeoff probabilities: {e}")))?;
    let breakdown = WeightedIndex::new(sc.breakdown.iter().map(|s| s.probability))
        .map_err(|e| ScheduleError(format!("breakdown probabilities: {e}")))?;
    let scale = if c == 0 { 0.0 } else { 100.0 / c as f64 };

    let shards = samples.div_ceil(SHARD);
    let stats: Vec<Moments> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let count = SHARD.min(samples - k * SHARD);
            let mut m = Moments::default();
            for _ in 0..count {
                let w = &sc.takeoff[takeoff.sample(&mut rng)];
                let l = &sc.breakdown[breakdown.sample(&mut rng)];
                let mut lost = 0usize;
                for (d, route) in &routes {
                    if w.cannot_takeoff[*d] {
                        lost += route.len();
                    } else if let Some(k) = route.iter().position(|&i| l.breaks[i][*d]) {
                        lost += route.len() - k;
                    }
                }
                m.push(scale * lost as f64);
            }
            m
        })
        .collect();
    let total = stats.into_iter().fold(Moments::default(), Moments::merge);
    let standard_error = if total.n > 1 {
        (total.m2.max(0.0) / (total.n - 1) as f64 / total.n as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate_pct: total.mean,
        standard_error,
        samples: total.n,
    })
}
