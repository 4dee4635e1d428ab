use std::ops::RangeInclusive;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AtomState, World, WorldError};
use crate::formula::Pred;

/// Closed density interval per observed predicate, indexed by [`Pred::slot`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRanges {
    pub ranges: [(f64, f64); 4],
}

impl DensityRanges {
    /// Ranges shared by the closed-world and existential regimes.
    pub const FULL_PARTIAL: DensityRanges =
        DensityRanges { ranges: [(0.20, 0.60), (0.20, 0.60), (0.12, 0.25), (0.08, 0.18)] };

    pub const SKEPTICAL: DensityRanges =
        DensityRanges { ranges: [(0.40, 0.60), (0.20, 0.50), (0.15, 0.30), (0.10, 0.25)] };

    pub fn get(&self, p: Pred) -> (f64, f64) {
        self.ranges[p.slot()]
    }

    pub fn is_valid(&self) -> bool {
        self.ranges.iter().all(|&(lo, hi)| (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi)
    }
}

/// Fraction of the ground atoms of each binary predicate masked as unknown.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnknownRates {
    pub r: f64,
    pub s: f64,
}

impl UnknownRates {
    pub const NONE: UnknownRates = UnknownRates { r: 0.0, s: 0.0 };

    /// Number of masked atoms for a predicate over a domain of size `n`.
    pub fn masked_count(&self, p: Pred, n: usize) -> usize {
        let rate = match p {
            Pred::R => self.r,
            Pred::S => self.s,
            _ => 0.0,
        };
        ((rate * (n * n) as f64).round() as usize).min(n * n)
    }
}

/// `max(1, floor(n^k * rho))`, the number of atoms marked true.
///
/// A tiny tolerance keeps products such as `100 * 0.29` from flooring one
/// below the intended integer.
pub fn true_atom_count(n: usize, arity: usize, rho: f64) -> usize {
    let total = n.pow(arity as u32);
    let raw = (total as f64 * rho + 1e-9).floor() as usize;
    raw.clamp(1, total)
}

/// Draw one world: size uniform from `n_range`, per-predicate density uniform
/// from its interval, true atoms uniform without replacement, then a uniform
/// sample of each binary predicate's `n^2` atoms masked as unknown.
pub fn sample_world<G: Rng + ?Sized>(
    n_range: RangeInclusive<usize>,
    densities: &DensityRanges,
    rates: &UnknownRates,
    rng: &mut G,
) -> Result<World, WorldError> {
    if n_range.is_empty() {
        return Err(WorldError::EmptyDomain);
    }
    let n = rng.random_range(n_range);
    let mut w = World::new(n)?;
    for p in Pred::OBSERVED {
        let (lo, hi) = densities.get(p);
        let rho = if lo < hi { rng.random_range(lo..=hi) } else { lo };
        let total = n.pow(p.arity() as u32);
        let count = true_atom_count(n, p.arity(), rho);
        for off in index::sample(rng, total, count) {
            w.set_state_raw(p, off, AtomState::True);
        }
    }
    for p in [Pred::R, Pred::S] {
        let count = rates.masked_count(p, n);
        if count > 0 {
            for off in index::sample(rng, n * n, count) {
                w.set_state_raw(p, off, AtomState::Unknown);
            }
        }
    }
    w.reindex();
    Ok(w)
}
