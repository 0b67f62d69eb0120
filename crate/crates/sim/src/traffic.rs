//! Per-vehicle CAM/DENM generation and the bounded transmit queue.

use std::collections::VecDeque;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use v2xmac_core::traffic::TrafficParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub generated_us: u64,
}

#[derive(Debug, Clone, Copy)]
enum DenmPhase {
    /// Waiting for a trigger; `u64::MAX` if triggers are disabled.
    Waiting { next_ms: u64 },
    Repeating { next_ms: u64, remaining: u32 },
}

/// CAM and DENM generators of one vehicle, at 1 ms resolution.
#[derive(Debug, Clone)]
pub struct TrafficSource {
    params: TrafficParams,
    next_cam_ms: u64,
    denm: DenmPhase,
}

impl TrafficSource {
    /// CAMs start at a uniform phase within the first period.
    pub fn new(params: &TrafficParams, cam_enabled: bool, denm_enabled: bool, rng: &mut ChaCha8Rng) -> Self {
        let next_cam_ms = if cam_enabled {
            rng.random_range(0..u64::from(params.cam_interval))
        } else {
            u64::MAX
        };
        let denm = if denm_enabled {
            DenmPhase::Waiting { next_ms: next_trigger(params, 0, rng) }
        } else {
            DenmPhase::Waiting { next_ms: u64::MAX }
        };
        Self { params: *params, next_cam_ms, denm }
    }

    /// Time of the next generation, `u64::MAX` if none.
    pub fn next_ms(&self) -> u64 {
        let denm = match self.denm {
            DenmPhase::Waiting { next_ms } | DenmPhase::Repeating { next_ms, .. } => next_ms,
        };
        self.next_cam_ms.min(denm)
    }

    /// Packets generated at `now_ms`; `now_ms` must not skip past `next_ms`.
    pub fn generate(&mut self, now_ms: u64, rng: &mut ChaCha8Rng) -> u32 {
        let mut count = 0;
        if self.next_cam_ms == now_ms {
            count += 1;
            self.next_cam_ms += u64::from(self.params.cam_interval);
        }
        match self.denm {
            DenmPhase::Waiting { next_ms } if next_ms == now_ms => {
                count += 1;
                self.denm = self.after_denm(now_ms, self.params.denm_repeats - 1, rng);
            }
            DenmPhase::Repeating { next_ms, remaining } if next_ms == now_ms => {
                count += 1;
                self.denm = self.after_denm(now_ms, remaining - 1, rng);
            }
            _ => {}
        }
        debug_assert!(self.next_ms() > now_ms);
        count
    }

    fn after_denm(&self, now_ms: u64, remaining: u32, rng: &mut ChaCha8Rng) -> DenmPhase {
        if remaining > 0 {
            DenmPhase::Repeating { next_ms: now_ms + u64::from(self.params.denm_interval), remaining }
        } else {
            DenmPhase::Waiting { next_ms: next_trigger(&self.params, now_ms + 1, rng) }
        }
    }
}

/// First millisecond at or after `from` in which a trigger fires, with an
/// independent trigger probability `1 − exp(−λT̃)` per millisecond.
fn next_trigger(params: &TrafficParams, from: u64, rng: &mut ChaCha8Rng) -> u64 {
    let p = params.trigger_probability();
    if p <= 0.0 {
        return u64::MAX;
    }
    if p >= 1.0 {
        return from;
    }
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let skip = (u.ln() / (-p).ln_1p()).floor();
    if skip >= 1e15 {
        u64::MAX
    } else {
        from + skip as u64
    }
}

/// Bounded FIFO; arrivals to a full queue are dropped.
#[derive(Debug, Clone)]
pub struct PacketQueue {
    capacity: usize,
    packets: VecDeque<Packet>,
}

impl PacketQueue {
    pub fn new(capacity: u32) -> Self {
        Self { capacity: capacity as usize, packets: VecDeque::with_capacity(capacity as usize) }
    }

    /// Returns `false` if the packet was dropped.
    pub fn push(&mut self, p: Packet) -> bool {
        if self.packets.len() >= self.capacity {
            return false;
        }
        self.packets.push_back(p);
        true
    }

    pub fn pop(&mut self) -> Option<Packet> {
        self.packets.pop_front()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }
}
