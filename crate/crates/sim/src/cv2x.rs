//! C-V2X Mode 4 sensing-based semi-persistent scheduling, one subframe per step.
//!
//! Each vehicle keeps at most one reservation `(subframe, csr)` repeating every
//! `Γ` subframes. A reservation becomes visible to the others once it has
//! carried a transmission, standing in for the sidelink control information
//! announcing it. Resource selection excludes the vehicle's own transmit
//! history (half duplex) and the visible reservations of others, then picks
//! uniformly among the least occupied 20 % of the window.

use std::collections::{HashSet, VecDeque};

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use v2xmac_core::cv2x::Cv2xParams;
use v2xmac_core::traffic::TrafficParams;

use crate::stats::ReplicationStats;
use crate::trace::{EventKind, Tracer};
use crate::traffic::{Packet, PacketQueue, TrafficSource};
use crate::{vehicle_rng, RunSpec};

/// Own transmissions older than this no longer constrain selection.
const SENSING_WINDOW_MS: u64 = 1000;
/// Fraction of the selection window kept as candidates.
const CANDIDATE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Reservation {
    next_tx: u64,
    csr: u32,
    rc: u32,
    announced: bool,
}

struct Vehicle {
    rng: ChaCha8Rng,
    source: TrafficSource,
    queue: PacketQueue,
    reservation: Option<Reservation>,
    /// Own transmissions `(subframe, csr)` inside the sensing window.
    history: VecDeque<(u64, u32)>,
}

pub(crate) fn run(
    setup: &RunSpec,
    params: &Cv2xParams,
    traffic: &TrafficParams,
    replication: u64,
    tracer: &mut Tracer<'_>,
) -> ReplicationStats {
    let n = setup.vehicles as usize;
    let gamma = u64::from(params.gamma);
    let csrs = params.csrs_per_subframe;
    let end_ms = setup.duration_ms();
    let warmup_ms = setup.warmup_ms();
    let mut stats = ReplicationStats::new(n, f64::from(csrs));

    let mut vehicles: Vec<Vehicle> = (0..n)
        .map(|v| {
            let mut rng = vehicle_rng(setup.seed, replication, v);
            let source = TrafficSource::new(traffic, setup.cam_enabled, setup.denm_enabled, &mut rng);
            Vehicle {
                rng,
                source,
                queue: PacketQueue::new(traffic.queue_capacity),
                reservation: None,
                history: VecDeque::new(),
            }
        })
        .collect();

    let mut tx_now: Vec<(u32, usize)> = Vec::with_capacity(n);
    for t in 0..end_ms {
        let observed = t >= warmup_ms;
        tx_now.clear();
        for v in 0..n {
            generate(&mut vehicles[v], v, t, &mut stats, tracer);

            let veh = &mut vehicles[v];
            while veh.history.front().is_some_and(|&(u, _)| u + SENSING_WINDOW_MS <= t) {
                veh.history.pop_front();
            }

            match veh.reservation {
                None => {
                    if !veh.queue.is_empty() {
                        select(&mut vehicles, v, t, params, tracer);
                    }
                }
                Some(r) if r.next_tx == t => {
                    let veh = &mut vehicles[v];
                    if let Some(packet) = veh.queue.pop() {
                        tx_now.push((r.csr, v));
                        veh.history.push_back((t, r.csr));
                        stats.record_transmission(v, observed, delay_ms(packet, t));
                        tracer.emit(t * 1000, v, EventKind::Transmission, || format!("csr={}", r.csr));
                        let mut r = Reservation { announced: true, ..r };
                        if r.rc > 1 {
                            r.rc -= 1;
                            r.next_tx += gamma;
                            veh.reservation = Some(r);
                        } else if veh.rng.random_bool(params.p_keep) {
                            r.rc = veh.rng.random_range(params.rc_low..=params.rc_high);
                            r.next_tx += gamma;
                            veh.reservation = Some(r);
                            tracer.emit(t * 1000, v, EventKind::Reservation, || {
                                format!("subframe={};csr={};rc={};origin=keep", r.next_tx, r.csr, r.rc)
                            });
                        } else if veh.rng.random_bool(params.p_sched) {
                            select(&mut vehicles, v, t, params, tracer);
                        } else {
                            veh.reservation = None;
                        }
                    } else {
                        // Nothing to send: the counter is held.
                        veh.reservation = Some(Reservation { next_tx: r.next_tx + gamma, ..r });
                    }
                }
                Some(_) => {}
            }
        }

        tx_now.sort_unstable();
        let mut i = 0;
        while i < tx_now.len() {
            let mut j = i + 1;
            while j < tx_now.len() && tx_now[j].0 == tx_now[i].0 {
                j += 1;
            }
            if j - i >= 2 {
                for &(csr, v) in &tx_now[i..j] {
                    stats.record_collision(observed);
                    tracer.emit(t * 1000, v, EventKind::Collision, || format!("csr={csr}"));
                }
            }
            i = j;
        }
        if observed {
            stats.observed_units += 1;
        }
    }
    for (v, veh) in vehicles.iter().enumerate() {
        stats.per_vehicle[v].queued = veh.queue.len() as u64;
    }
    stats
}

fn generate(veh: &mut Vehicle, v: usize, t: u64, stats: &mut ReplicationStats, tracer: &mut Tracer<'_>) {
    if veh.source.next_ms() != t {
        return;
    }
    let count = veh.source.generate(t, &mut veh.rng);
    for _ in 0..count {
        stats.per_vehicle[v].generated += 1;
        tracer.emit(t * 1000, v, EventKind::Generation, String::new);
        if veh.queue.push(Packet { generated_us: t * 1000 }) {
            tracer.emit(t * 1000, v, EventKind::Enqueue, String::new);
        } else {
            stats.per_vehicle[v].dropped += 1;
            tracer.emit(t * 1000, v, EventKind::Drop, String::new);
        }
    }
}

fn delay_ms(p: Packet, t_ms: u64) -> f64 {
    (t_ms * 1000 - p.generated_us) as f64 / 1000.0
}

/// Selects a new resource for vehicle `v` at subframe `t` within `[t+2, t+Γ]`.
fn select(vehicles: &mut [Vehicle], v: usize, t: u64, params: &Cv2xParams, tracer: &mut Tracer<'_>) {
    let gamma = u64::from(params.gamma);
    let csrs = params.csrs_per_subframe as usize;
    let first = t + 2;
    let width = (gamma - 1) as usize;
    let cells = width * csrs;

    let own: HashSet<(u64, u32)> = vehicles[v].history.iter().map(|&(u, c)| (u % gamma, c)).collect();
    let mut occupancy = vec![0u32; cells];
    for (w, other) in vehicles.iter().enumerate() {
        let Some(r) = other.reservation else { continue };
        if w == v || !r.announced {
            continue;
        }
        let mut s = r.next_tx;
        if s < first {
            s += (first - s).div_ceil(gamma) * gamma;
        }
        if s < first + width as u64 {
            occupancy[(s - first) as usize * csrs + r.csr as usize] += 1;
        }
    }

    let allowed = |idx: usize| {
        let s = first + (idx / csrs) as u64;
        !own.contains(&(s % gamma, (idx % csrs) as u32))
    };
    let keep = ((cells as f64) * CANDIDATE_FRACTION).ceil() as usize;
    let veh = &mut vehicles[v];
    let free: Vec<usize> = (0..cells).filter(|&i| occupancy[i] == 0 && allowed(i)).collect();
    let chosen = if free.len() >= keep {
        // Ranking by occupancy with a random tie-break and drawing uniformly
        // from the best `keep` is the same as drawing uniformly from `free`.
        free[veh.rng.random_range(0..free.len())]
    } else {
        let mut ranked: Vec<(u32, u32, usize)> = (0..cells)
            .filter(|&i| allowed(i))
            .map(|i| (occupancy[i], veh.rng.random::<u32>(), i))
            .collect();
        if ranked.is_empty() {
            // Every cell clashes with the own history; fall back to any cell.
            ranked = (0..cells).map(|i| (occupancy[i], veh.rng.random::<u32>(), i)).collect();
        }
        ranked.sort_unstable();
        ranked.truncate(keep);
        ranked[veh.rng.random_range(0..ranked.len())].2
    };
    let r = Reservation {
        next_tx: first + (chosen / csrs) as u64,
        csr: (chosen % csrs) as u32,
        rc: veh.rng.random_range(params.rc_low..=params.rc_high),
        announced: false,
    };
    veh.reservation = Some(r);
    tracer.emit(t * 1000, v, EventKind::Reservation, || {
        format!("subframe={};csr={};rc={};origin=select", r.next_tx, r.csr, r.rc)
    });
}
