//! Fast Sybil sweep: recruitment draws only, no cryptography.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::contracts::LayerAssignment;
use crate::rng::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SybilSweep {
    pub v: u32,
    pub l: u32,
    pub t: u32,
    pub n: u32,
    pub assignment: LayerAssignment,
    /// Deposit per mailman, in any unit.
    pub d: f64,
    pub xs: Vec<u32>,
    pub trials: u32,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SybilPoint {
    pub x: u32,
    pub p_m: f64,
    /// Fraction of shares whose every layer holder was adversarial.
    pub capture_rate: f64,
    /// Standard error of `capture_rate` across trials.
    pub capture_se: f64,
    /// Fraction of trials with at least `t` captured shares.
    pub success_rate: f64,
    pub mean_captured: f64,
    /// `x·d·t / (n·capture_rate)`: deposit per expected `t` captured shares.
    pub empirical_cost: f64,
}

/// Per-share capture statistics for every `x` in the sweep.
///
/// Each trial draws the recruits from a pool of `v + x` by sequential
/// hypergeometric sampling: recruit `j` is adversarial with probability
/// `(x − a) / (v + x − j)`, `a` being the adversarial recruits so far. The
/// same uniforms are reused for every `x`, so neighbouring points differ
/// only through `x` itself.
pub fn sybil_sweep(cfg: &SybilSweep) -> Vec<SybilPoint> {
    let k = cfg.assignment.recruits(cfg.n, cfg.l) as usize;
    let holders: Vec<Vec<usize>> =
        (0..cfg.n).map(|i| cfg.assignment.holders(i, cfg.n, cfg.l).map(|h| h as usize).collect()).collect();
    let mut rng = SimRng::from_label(cfg.seed, "sybil-sweep");
    let uniforms: Vec<f64> = (0..cfg.trials as usize * k).map(|_| rng.unit()).collect();
    let mut adversarial = alloc::vec![false; k];

    cfg.xs
        .iter()
        .map(|&x| {
            let pool = (cfg.v + x) as f64;
            let (mut sum, mut sum_sq, mut wins) = (0.0, 0.0, 0u32);
            for u in uniforms.chunks_exact(k) {
                let mut a = 0.0;
                for (j, slot) in adversarial.iter_mut().enumerate() {
                    let remaining = pool - j as f64;
                    *slot = remaining > 0.0 && u[j] < (x as f64 - a) / remaining;
                    if *slot {
                        a += 1.0;
                    }
                }
                let captured = holders.iter().filter(|hs| hs.iter().all(|h| adversarial[*h])).count();
                let frac = captured as f64 / cfg.n as f64;
                sum += frac;
                sum_sq += frac * frac;
                if captured >= cfg.t as usize {
                    wins += 1;
                }
            }
            let trials = cfg.trials as f64;
            let rate = sum / trials;
            let var = (sum_sq / trials - rate * rate).max(0.0);
            SybilPoint {
                x,
                p_m: x as f64 / pool,
                capture_rate: rate,
                capture_se: libm::sqrt(var / trials),
                success_rate: wins as f64 / trials,
                mean_captured: rate * cfg.n as f64,
                empirical_cost: if rate > 0.0 {
                    x as f64 * cfg.d * cfg.t as f64 / (cfg.n as f64 * rate)
                } else {
                    f64::INFINITY
                },
            }
        })
        .collect()
}
