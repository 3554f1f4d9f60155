//! Slot-by-slot simulation of the relay queue in isolation: Bernoulli(p_s)
//! arrivals and a server that succeeds with probability p_r in every slot it
//! holds a packet. Written independently of the main engine so it can serve
//! as a reference for the mean waiting time.

use std::collections::VecDeque;

use rand::Rng;

use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoGeoResult {
    pub mean_wait: f64,
    /// Standard error from batch means (20 batches).
    pub se_wait: f64,
    pub packets: u64,
}

/// A packet that arrives in slot `a` can first be served in slot `a + 1`.
/// Its waiting time is the number of slots between its arrival and the slot
/// the server became free for it.
pub fn simulate_geo_geo(p_s: f64, p_r: f64, slots: u64, seed: u64) -> GeoGeoResult {
    let mut rng = stream_rng(seed, 0);
    let mut queue: VecDeque<u64> = VecDeque::new();
    // service start of the head-of-line packet
    let mut head_start: Option<u64> = None;
    let mut last_departure: Option<u64> = None;
    let mut waits: Vec<u64> = Vec::new();
    let warmup = slots / 20;
    for t in 0..slots {
        if let Some(&a) = queue.front() {
            if a < t {
                let start = *head_start.get_or_insert_with(|| match last_departure {
                    Some(d) => a.max(d),
                    None => a,
                });
                if rng.random::<f64>() < p_r {
                    queue.pop_front();
                    if a >= warmup {
                        waits.push(start - a);
                    }
                    last_departure = Some(t);
                    head_start = None;
                }
            }
        }
        if rng.random::<f64>() < p_s {
            queue.push_back(t);
        }
    }
    let n = waits.len();
    let mean = waits.iter().sum::<u64>() as f64 / n as f64;
    let batches = 20;
    let size = n / batches;
    let bm: Vec<f64> = (0..batches)
        .map(|b| waits[b * size..(b + 1) * size].iter().sum::<u64>() as f64 / size as f64)
        .collect();
    let bmean = bm.iter().sum::<f64>() / batches as f64;
    let var = bm.iter().map(|x| (x - bmean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    GeoGeoResult {
        mean_wait: mean,
        se_wait: (var / batches as f64).sqrt(),
        packets: n as u64,
    }
}
