use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Geometric};
use serde::{Deserialize, Serialize};

use super::stats::Moments;
use super::{SimConfig, StopRule, SuccessMode};
use crate::analysis::Scheme;
use crate::charging::{ChargeSampler, ChargeTimeDist};
use crate::error::{ModelError, Result};
use crate::params::{effective_relay_power, DerivedParams, SystemParams};
use crate::rng::StreamRng;

/// Service times at or above this many slots share the last histogram bin.
pub const SERVICE_HIST_BINS: usize = 512;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCounts {
    pub attempts: u64,
    pub successes: u64,
}

/// Output of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub mean_aoi: f64,
    pub mean_paoi: f64,
    /// Deliveries kept after warmup.
    pub deliveries: u64,
    pub total_deliveries: u64,
    /// Number of simulated slots.
    pub slots: u64,
    pub first_link: LinkCounts,
    pub relay_link: LinkCounts,
    pub t_s: Moments,
    pub t_r: Moments,
    pub t_af: Moments,
    /// End-to-end cycle (one-hop schemes) or source inter-arrival (DF), post-warmup.
    pub x_first: Moments,
    /// Relay service time, post-warmup (DF).
    pub x_relay: Moments,
    /// Mean product of a packet's inter-arrival time and its waiting time (DF).
    pub e_xs_w: f64,
    pub mean_wait: f64,
    /// Mean of inter-arrival plus system time (DF); equals `mean_paoi` by construction.
    pub mean_xs_plus_y: f64,
    pub mean_queue_len: f64,
    pub max_queue_len: usize,
    /// Histogram of relay service times (DF), indexed by slots.
    pub service_hist: Vec<u64>,
    pub diverged: bool,
}

enum Link {
    Bernoulli(f64),
    /// Rayleigh fade with the given mean SNR against a threshold.
    Fade { mean_snr: f64, gamma: f64 },
    /// Two fades combined by the amplify-and-forward SNR.
    FadeAf { m1: f64, m2: f64, gamma: f64 },
}

impl Link {
    fn success(&self, rng: &mut StreamRng) -> bool {
        match *self {
            Link::Bernoulli(p) => rng.random::<f64>() < p,
            Link::Fade { mean_snr, gamma } => {
                let h: f64 = rng.sample(Exp1);
                h * mean_snr >= gamma
            }
            Link::FadeAf { m1, m2, gamma } => {
                let h1: f64 = rng.sample(Exp1);
                let h2: f64 = rng.sample(Exp1);
                let (g1, g2) = (h1 * m1, h2 * m2);
                g1 * g2 / (g1 + g2 + 1.0) >= gamma
            }
        }
    }

    fn never_succeeds(&self) -> bool {
        matches!(*self, Link::Bernoulli(p) if p <= 0.0)
    }
}

fn mean_snr(p: &SystemParams, d: f64, b: f64) -> f64 {
    b / (p.sigma2 * d.powf(p.alpha))
}

fn links(config: &SimConfig, d: &DerivedParams) -> Result<(Link, Link)> {
    let p = &config.params;
    Ok(match config.success_mode {
        SuccessMode::Analytic => {
            let first = match config.scheme {
                Scheme::Direct => d.p_suc_direct,
                Scheme::Df => d.p_suc_s,
                Scheme::Af => d.p_suc_af,
            };
            (Link::Bernoulli(first), Link::Bernoulli(d.p_suc_r))
        }
        SuccessMode::Physical => {
            let g = p.gamma_th;
            let first = match config.scheme {
                Scheme::Direct => Link::Fade { mean_snr: mean_snr(p, p.d_ds, p.b_s), gamma: g },
                Scheme::Df => Link::Fade { mean_snr: mean_snr(p, p.d_rs, p.b_s), gamma: g },
                Scheme::Af => Link::FadeAf {
                    m1: mean_snr(p, p.d_rs, p.b_s),
                    m2: mean_snr(p, p.d_dr, p.b_r),
                    gamma: g,
                },
            };
            let b_star = effective_relay_power(p)?;
            (first, Link::Fade { mean_snr: mean_snr(p, p.d_dr, b_star), gamma: g })
        }
    })
}

struct Packet {
    xs: i64,
    wait: i64,
    service: i64,
}

struct Run<'a> {
    config: &'a SimConfig,
    rng: &'a mut StreamRng,
    charge_s: ChargeTimeDist,
    charge_r: ChargeTimeDist,
    sampler: ChargeSampler,
    horizon: Option<i64>,
    target: Option<usize>,
    first: Link,
    relay: Link,
    first_counts: LinkCounts,
    relay_counts: LinkCounts,
    t_s: Moments,
    t_r: Moments,
    t_af: Moments,
    /// (delivery slot, stamp of the delivered update)
    deliveries: Vec<(i64, i64)>,
    packets: Vec<Packet>,
    queue_area: f64,
    max_queue_len: usize,
    diverged: bool,
    end_slot: i64,
}

impl<'a> Run<'a> {
    fn draw_s(&mut self) -> i64 {
        let t = self.charge_s.sample(self.rng, self.sampler);
        self.t_s.push(t as f64);
        t as i64
    }

    fn draw_r(&mut self) -> i64 {
        let t = self.charge_r.sample(self.rng, self.sampler);
        self.t_r.push(t as f64);
        t as i64
    }

    fn past_horizon(&self, slot: i64) -> bool {
        self.horizon.is_some_and(|h| slot >= h)
    }

    fn target_reached(&self) -> bool {
        self.target.is_some_and(|k| self.deliveries.len() >= k)
    }

    /// Direct and AF: every success is a delivery of a fresh update.
    fn run_one_hop(&mut self, af: bool) {
        let unit = self.charge_s.mean() == 1.0 && (!af || self.charge_r.mean() == 1.0);
        if let (true, &Link::Bernoulli(p)) = (unit, &self.first) {
            if p > 0.0 {
                return self.run_one_hop_unit(af, p);
            }
        }
        let mut t: i64 = -1;
        loop {
            let dt = if af {
                let a = self.draw_s();
                let b = self.draw_r();
                let m = a.max(b);
                self.t_af.push(m as f64);
                m
            } else {
                self.draw_s()
            };
            t += dt;
            if self.past_horizon(t) {
                break;
            }
            self.first_counts.attempts += 1;
            if self.first.success(self.rng) {
                self.first_counts.successes += 1;
                self.deliveries.push((t, t));
                if self.target_reached() {
                    break;
                }
            }
        }
        self.end_slot = self.horizon.unwrap_or(t + 1);
    }

    /// Every charge lasts one slot, so a run of failed attempts is a single
    /// geometric draw.
    fn run_one_hop_unit(&mut self, af: bool, p: f64) {
        let failures = Geometric::new(p).expect("p in (0, 1]");
        let mut t: i64 = -1;
        loop {
            let n = failures.sample(self.rng) as i64 + 1;
            let (n, done) = match self.horizon {
                Some(h) if t + n >= h => (h - 1 - t, true),
                _ => (n, false),
            };
            self.first_counts.attempts += n as u64;
            self.t_s.push_n(1.0, n as u64);
            if af {
                self.t_r.push_n(1.0, n as u64);
                self.t_af.push_n(1.0, n as u64);
            }
            t += n;
            if done {
                break;
            }
            self.first_counts.successes += 1;
            self.deliveries.push((t, t));
            if self.target_reached() {
                break;
            }
        }
        self.end_slot = self.horizon.unwrap_or(t + 1);
    }

    fn run_df(&mut self) {
        let banking = self.config.relay_energy_banking;
        let alarm = self.config.max_queue_alarm;
        let mut queue: VecDeque<(i64, i64)> = VecDeque::new(); // (arrival, inter-arrival)
        let mut src_next: i64 = -1 + self.draw_s();
        let mut last_arrival: i64 = -1;
        let mut d_prev: i64 = -1;
        let mut relay_ready: i64 = if banking { -1 + self.draw_r() } else { 0 };
        let mut in_service: Option<i64> = None;
        let stop_slot: Option<i64>;

        'packets: loop {
            while queue.is_empty() {
                if self.past_horizon(src_next) {
                    stop_slot = self.horizon;
                    break 'packets;
                }
                self.source_attempt(src_next, &mut queue, &mut last_arrival);
                src_next += self.draw_s();
            }
            let (a, xs) = queue.pop_front().expect("queue refilled above");
            in_service = Some(a);
            let start = a.max(d_prev);
            let mut attempt = if banking { relay_ready.max(a + 1) } else { start + self.draw_r() };
            loop {
                if self.past_horizon(attempt) {
                    stop_slot = self.horizon;
                    break 'packets;
                }
                self.relay_counts.attempts += 1;
                if self.relay.success(self.rng) {
                    self.relay_counts.successes += 1;
                    break;
                }
                attempt += self.draw_r();
            }
            let d = attempt;
            if banking {
                relay_ready = d + self.draw_r();
            }
            in_service = None;
            while src_next <= d {
                self.source_attempt(src_next, &mut queue, &mut last_arrival);
                src_next += self.draw_s();
            }
            self.max_queue_len = self.max_queue_len.max(queue.len());
            self.deliveries.push((d, a));
            self.packets.push(Packet {
                xs,
                wait: start - a,
                service: d - start,
            });
            self.queue_area += (d - a) as f64;
            d_prev = d;
            if queue.len() > alarm {
                self.diverged = true;
                stop_slot = Some(d + 1);
                break;
            }
            if self.target_reached() {
                stop_slot = Some(d + 1);
                break;
            }
        }
        let end = stop_slot.unwrap_or(d_prev + 1);
        for &(a, _) in queue.iter() {
            self.queue_area += (end - a).max(0) as f64;
        }
        if let Some(a) = in_service {
            self.queue_area += (end - a).max(0) as f64;
        }
        self.end_slot = end;
    }

    fn source_attempt(&mut self, slot: i64, queue: &mut VecDeque<(i64, i64)>, last_arrival: &mut i64) {
        self.first_counts.attempts += 1;
        if self.first.success(self.rng) {
            self.first_counts.successes += 1;
            queue.push_back((slot, slot - *last_arrival));
            *last_arrival = slot;
        }
    }
}

/// One replication with its own random stream.
pub fn run_replication(
    config: &SimConfig,
    derived: &DerivedParams,
    rng: &mut StreamRng,
) -> Result<ReplicationStats> {
    let (first, relay) = links(config, derived)?;
    let (horizon, target) = match config.stop {
        StopRule::Horizon(h) => (Some(h as i64), None),
        StopRule::Deliveries(k) => (None, Some(k as usize)),
    };
    if target.is_some() {
        let relay_used = config.scheme == Scheme::Df;
        if first.never_succeeds() || (relay_used && relay.never_succeeds()) {
            return Err(ModelError::DivideByZeroProb);
        }
    }
    let mut run = Run {
        config,
        rng,
        charge_s: ChargeTimeDist::new(derived.bprime_s)?,
        charge_r: ChargeTimeDist::new(derived.bprime_r)?,
        sampler: config.sampler,
        horizon,
        target,
        first,
        relay,
        first_counts: LinkCounts::default(),
        relay_counts: LinkCounts::default(),
        t_s: Moments::default(),
        t_r: Moments::default(),
        t_af: Moments::default(),
        deliveries: Vec::new(),
        packets: Vec::new(),
        queue_area: 0.0,
        max_queue_len: 0,
        diverged: false,
        end_slot: 0,
    };
    match config.scheme {
        Scheme::Direct => run.run_one_hop(false),
        Scheme::Af => run.run_one_hop(true),
        Scheme::Df => run.run_df(),
    }
    Ok(summarize(config, run))
}

fn summarize(config: &SimConfig, run: Run<'_>) -> ReplicationStats {
    let k = run.deliveries.len();
    let skip = (config.warmup_fraction * k as f64).floor() as usize;
    let mut area = 0.0;
    let mut span = 0.0;
    let mut peaks = 0.0;
    let mut x_first = Moments::default();
    for i in skip..k {
        let (prev_d, prev_g) = if i == 0 { (-1, -1) } else { run.deliveries[i - 1] };
        let (d, _) = run.deliveries[i];
        let len = (d - prev_d) as f64;
        let a0 = (prev_d + 1 - prev_g) as f64;
        area += len * a0 + 0.5 * len * (len - 1.0);
        span += len;
        peaks += (d - prev_g) as f64;
        if config.scheme != Scheme::Df {
            x_first.push(len);
        }
    }
    let kept = k - skip;
    let mut x_relay = Moments::default();
    let mut xw = 0.0;
    let mut wait = 0.0;
    let mut xs_y = 0.0;
    let mut service_hist = Vec::new();
    if config.scheme == Scheme::Df {
        service_hist = vec![0u64; SERVICE_HIST_BINS];
        for p in &run.packets[skip..] {
            x_first.push(p.xs as f64);
            x_relay.push(p.service as f64);
            xw += (p.xs * p.wait) as f64;
            wait += p.wait as f64;
            xs_y += (p.xs + p.wait + p.service) as f64;
            service_hist[(p.service as usize).min(SERVICE_HIST_BINS - 1)] += 1;
        }
    }
    let per = |v: f64| if kept == 0 { f64::NAN } else { v / kept as f64 };
    ReplicationStats {
        mean_aoi: if span > 0.0 { area / span } else { f64::NAN },
        mean_paoi: per(peaks),
        deliveries: kept as u64,
        total_deliveries: k as u64,
        slots: run.end_slot.max(0) as u64,
        first_link: run.first_counts,
        relay_link: run.relay_counts,
        t_s: run.t_s,
        t_r: run.t_r,
        t_af: run.t_af,
        x_first,
        x_relay,
        e_xs_w: per(xw),
        mean_wait: per(wait),
        mean_xs_plus_y: per(xs_y),
        mean_queue_len: if run.end_slot > 0 { run.queue_area / run.end_slot as f64 } else { 0.0 },
        max_queue_len: run.max_queue_len,
        service_hist,
        diverged: run.diverged,
    }
}
