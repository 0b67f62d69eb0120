//! IEEE 802.11p broadcast CSMA/CA at slot resolution.
//!
//! Broadcast frames are never acknowledged, so the contention window stays
//! at `CW_min`. A vehicle sensing a busy slot in its first AIFS slot waits a
//! uniform share of the frame in progress; later in AIFS it waits a whole
//! frame. After the wait it draws a backoff stage and counts down one stage
//! per idle slot, each stage preceded by an AIFS, freezing for a frame
//! whenever the channel turns busy. Idle stretches are skipped.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use v2xmac_core::dot11p::Dot11pParams;
use v2xmac_core::traffic::TrafficParams;

use crate::stats::ReplicationStats;
use crate::trace::{EventKind, Tracer};
use crate::traffic::{Packet, PacketQueue, TrafficSource};
use crate::{vehicle_rng, RunSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Idle,
    /// Sensing AIFS slot `i ∈ [1, Ω]`.
    Aifs(u32),
    /// Remaining slots of a wait after a busy AIFS slot.
    BusyWait(u32),
    /// AIFS slot `j ∈ [1, Ω−1]` before counting down `stage`.
    BackoffAifs { stage: u32, j: u32 },
    Sense { stage: u32 },
    Defer { stage: u32, left: u32 },
    /// Transmitting until slot `end` (exclusive).
    Tx { end: u64 },
}

impl State {
    fn senses(self) -> bool {
        matches!(self, State::Aifs(_) | State::BackoffAifs { .. } | State::Sense { .. })
    }
}

struct Vehicle {
    rng: ChaCha8Rng,
    source: TrafficSource,
    queue: PacketQueue,
    state: State,
    /// Consecutive idle slots sensed so far.
    idle_run: u32,
    active: bool,
    /// Sub-millisecond phase of this vehicle's generation instants, so that
    /// vehicles generating in the same millisecond do not start in lockstep.
    offset_us: u64,
}

enum Step {
    Next(State),
    Start,
}

pub(crate) fn run(
    setup: &RunSpec,
    params: &Dot11pParams,
    traffic: &TrafficParams,
    replication: u64,
    tracer: &mut Tracer<'_>,
) -> ReplicationStats {
    let n = setup.vehicles as usize;
    let omega = params.aifs_slots();
    let vt = params.tx_slots;
    let slot_us = params.slot_us;
    let end_slot = (setup.duration_ms() as f64 * 1000.0 / slot_us).floor() as u64;
    let warmup_slot = (setup.warmup_ms() as f64 * 1000.0 / slot_us).ceil() as u64;
    let mut stats = ReplicationStats::new(n, 1.0);
    stats.tx_weight = f64::from(vt);
    stats.observed_units = end_slot.saturating_sub(warmup_slot);

    let mut vehicles: Vec<Vehicle> = (0..n)
        .map(|v| {
            let mut rng = vehicle_rng(setup.seed, replication, v);
            let source = TrafficSource::new(traffic, setup.cam_enabled, setup.denm_enabled, &mut rng);
            let offset_us = rng.random_range(0..1000);
            Vehicle {
                rng,
                source,
                queue: PacketQueue::new(traffic.queue_capacity),
                state: State::Idle,
                idle_run: 0,
                active: false,
                offset_us,
            }
        })
        .collect();

    // Keyed by generation time in µs; the source works in milliseconds.
    let mut generations: BinaryHeap<Reverse<(u64, usize)>> = vehicles
        .iter()
        .enumerate()
        .filter(|(_, veh)| veh.source.next_ms() != u64::MAX)
        .map(|(v, veh)| Reverse((veh.source.next_ms() * 1000 + veh.offset_us, v)))
        .collect();
    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut on_air: Vec<(usize, u64)> = Vec::new();
    let mut starts: Vec<usize> = Vec::new();

    let mut k = 0u64;
    while k < end_slot {
        let slot_end_us = (k + 1) as f64 * slot_us;
        while let Some(&Reverse((at_us, v))) = generations.peek() {
            if at_us as f64 >= slot_end_us {
                break;
            }
            generations.pop();
            let veh = &mut vehicles[v];
            let count = veh.source.generate((at_us - veh.offset_us) / 1000, &mut veh.rng);
            for _ in 0..count {
                stats.per_vehicle[v].generated += 1;
                tracer.emit(at_us, v, EventKind::Generation, String::new);
                if veh.queue.push(Packet { generated_us: at_us }) {
                    tracer.emit(at_us, v, EventKind::Enqueue, String::new);
                } else {
                    stats.per_vehicle[v].dropped += 1;
                    tracer.emit(at_us, v, EventKind::Drop, String::new);
                }
            }
            if veh.source.next_ms() != u64::MAX {
                generations.push(Reverse((veh.source.next_ms() * 1000 + veh.offset_us, v)));
            }
            if !veh.active {
                veh.active = true;
                let pos = active.binary_search(&v).unwrap_err();
                active.insert(pos, v);
            }
        }

        on_air.retain(|&(_, end)| end > k);
        let busy_total = on_air.len();
        starts.clear();
        for &v in &active {
            let veh = &mut vehicles[v];
            let own = usize::from(matches!(veh.state, State::Tx { .. }));
            let busy = busy_total > own;
            let sensing = veh.state.senses();
            if sensing {
                veh.idle_run = if busy { 0 } else { veh.idle_run + 1 };
            } else {
                veh.idle_run = 0;
            }
            match step(veh, k, busy, params, omega, vt) {
                Step::Next(s) => veh.state = s,
                Step::Start => starts.push(v),
            }
        }

        let start = k + 1;
        let observed = start >= warmup_slot;
        let collided = starts.len() >= 2;
        let start_us = (start as f64 * slot_us).round() as u64;
        for &v in &starts {
            let veh = &mut vehicles[v];
            if veh.idle_run < omega {
                stats.aifs_violations += 1;
            }
            let packet = veh.queue.pop().expect("contending vehicle has a packet");
            let end = start + u64::from(vt);
            veh.state = State::Tx { end };
            on_air.push((v, end));
            let delay_ms = (end as f64 * slot_us - packet.generated_us as f64) / 1000.0;
            stats.record_transmission(v, observed, delay_ms);
            tracer.emit(start_us, v, EventKind::Transmission, || "channel".to_owned());
            if collided {
                stats.record_collision(observed);
                tracer.emit(start_us, v, EventKind::Collision, || "channel".to_owned());
            }
        }

        active.retain(|&v| {
            let veh = &mut vehicles[v];
            veh.active = veh.state != State::Idle || !veh.queue.is_empty();
            veh.active
        });

        k += 1;
        if active.is_empty() && on_air.iter().all(|&(_, end)| end <= k) {
            match generations.peek() {
                Some(&Reverse((at_us, _))) => {
                    let next = (at_us as f64 / slot_us).floor() as u64;
                    k = k.max(next);
                }
                None => break,
            }
        }
    }

    for (v, veh) in vehicles.iter().enumerate() {
        stats.per_vehicle[v].queued = veh.queue.len() as u64;
    }
    stats
}

fn step(veh: &mut Vehicle, k: u64, busy: bool, params: &Dot11pParams, omega: u32, vt: u32) -> Step {
    let next = match veh.state {
        State::Idle => {
            if veh.queue.is_empty() {
                State::Idle
            } else {
                State::Aifs(1)
            }
        }
        State::Aifs(i) => {
            if busy {
                State::BusyWait(if i == 1 { veh.rng.random_range(1..=vt) } else { vt })
            } else if i < omega {
                State::Aifs(i + 1)
            } else {
                return Step::Start;
            }
        }
        State::BusyWait(left) => {
            if left > 1 {
                State::BusyWait(left - 1)
            } else {
                State::BackoffAifs { stage: draw_stage(&mut veh.rng, params.cw_min), j: 1 }
            }
        }
        State::BackoffAifs { stage, j } => {
            if busy {
                State::Defer { stage, left: vt }
            } else if j < omega - 1 {
                State::BackoffAifs { stage, j: j + 1 }
            } else {
                State::Sense { stage }
            }
        }
        State::Sense { stage } => {
            if busy {
                State::Defer { stage, left: vt }
            } else {
                match stage {
                    0 => return Step::Start,
                    2 => State::Sense { stage: 0 },
                    s => State::Sense { stage: s - 1 },
                }
            }
        }
        State::Defer { stage, left } => {
            if left > 1 {
                State::Defer { stage, left: left - 1 }
            } else {
                State::BackoffAifs { stage, j: 1 }
            }
        }
        State::Tx { end } => {
            if k + 1 >= end {
                State::Idle
            } else {
                State::Tx { end }
            }
        }
    };
    Step::Next(next)
}

/// Stage 0 with weight `2/Č`, stages `2..Č` with `1/Č` each.
fn draw_stage(rng: &mut ChaCha8Rng, cw_min: u32) -> u32 {
    match rng.random_range(0..cw_min) {
        0 | 1 => 0,
        s => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn stage_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = [0u32; 15];
        for _ in 0..150_000 {
            counts[draw_stage(&mut rng, 15) as usize] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[0] as f64 / 20_000.0 - 1.0).abs() < 0.05);
        assert!((counts[7] as f64 / 10_000.0 - 1.0).abs() < 0.06);
    }
}
