//! Per-state delays against absorption times of random walks on the
//! explicit 802.11p chain.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use v2xmac_core::chains::dot11p_chain;
use v2xmac_core::dot11p::{state_delays, Dot11pParams};

const WALKS: usize = 1_000_000;

/// Mean number of states from each visit up to and including the end of
/// the transmission, estimated from every visit of every walk.
fn walk_delays(params: &Dot11pParams, theta: f64, seed: u64) -> (Vec<f64>, Vec<u64>) {
    let m = dot11p_chain(params, 0.5, 0.5, theta).unwrap();
    let start = m.labels().index_of("A1").unwrap();
    let n = m.len();
    let mut sum = vec![0.0; n];
    let mut count = vec![0u64; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = Vec::with_capacity(1024);
    for _ in 0..WALKS {
        path.clear();
        let mut s = start;
        while s != 0 {
            path.push(s);
            let u: f64 = rng.random();
            let row = m.row(s);
            let mut acc = 0.0;
            let mut next = row[row.len() - 1].0;
            for &(j, p) in row {
                acc += p;
                if u < acc {
                    next = j;
                    break;
                }
            }
            s = next;
        }
        let len = path.len();
        for (k, &st) in path.iter().enumerate() {
            sum[st] += (len - k) as f64;
            count[st] += 1;
        }
    }
    let mean = sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();
    (mean, count)
}

fn check(theta: f64) {
    let p = Dot11pParams::default();
    let table = state_delays(&p, theta).unwrap().to_vector();
    let (mc, count) = walk_delays(&p, theta, 0x5eed);
    let labels = dot11p_chain(&p, 0.5, 0.5, theta).unwrap().labels().clone();
    for i in 1..table.len() {
        if count[i] < 1000 {
            continue; // unreachable at θ = 0 (contention states)
        }
        let rel = (mc[i] - table[i]).abs() / table[i];
        assert!(rel < 0.01, "θ={theta} {}: recurrence {} walk {} ({} visits)", labels.name(i), table[i], mc[i], count[i]);
    }
}

#[test]
fn delays_match_walks_at_default_load() {
    check(0.3);
}

#[test]
fn delays_match_walks_on_quiet_channel() {
    check(0.0);
}
