//! World filters and filtered world sampling.

use std::ops::RangeInclusive;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{world_assess, world_opt_cost, OptVariant, Regime};
use crate::formula::{Hypothesis, Pred};
use crate::theory::TheorySpec;
use crate::world::{true_atom_count, AtomState, DensityRanges, UnknownRates, World};

/// Gold cost and optimal cost on one accepted world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldStats {
    pub gold_cost: usize,
    pub opt_cost: usize,
}

impl WorldStats {
    pub fn gap(&self) -> usize {
        self.gold_cost.saturating_sub(self.opt_cost)
    }
}

/// The first training-world filter a world fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterFailure {
    /// The gold rule is invalid.
    GoldInvalid,
    /// OptCost is zero: nothing needs to be abnormal.
    Trivial,
    /// OptCost / |D| exceeds the exception cap.
    ExceptionRate,
    /// Gold cost exceeds OptCost plus the slack.
    GoldGap,
}

impl FilterFailure {
    pub fn name(self) -> &'static str {
        match self {
            FilterFailure::GoldInvalid => "gold_validity",
            FilterFailure::Trivial => "opt_cost_floor",
            FilterFailure::ExceptionRate => "exception_rate",
            FilterFailure::GoldGap => "gold_gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub exception_cap: f64,
    pub gold_gap_slack: usize,
}

/// Training-world filters, most selective first.
pub fn check_world(
    regime: Regime,
    theory: &TheorySpec,
    gold: &Hypothesis,
    w: &World,
    fp: &FilterParams,
) -> Result<WorldStats, FilterFailure> {
    let gold_cost = world_assess(regime, theory, w, gold).ok_or(FilterFailure::GoldInvalid)?;
    let opt_cost = world_opt_cost(regime, theory, w, OptVariant::Pointwise);
    if opt_cost < 1 {
        return Err(FilterFailure::Trivial);
    }
    if opt_cost as f64 > fp.exception_cap * w.domain_size() as f64 + 1e-9 {
        return Err(FilterFailure::ExceptionRate);
    }
    if gold_cost > opt_cost + fp.gold_gap_slack {
        return Err(FilterFailure::GoldGap);
    }
    Ok(WorldStats { gold_cost, opt_cost })
}

/// Draws worlds in two stages. The outer stage fixes the domain size, every
/// density, and the extensions of the predicates a hypothesis may use. The
/// inner stage redraws only the repaired predicates (which no hypothesis can
/// mention) and the unknown-atom mask. Each draw matches the plain sampler's
/// counts exactly; the split only lets one outer draw be reused for several
/// inner draws.
#[derive(Debug, Clone)]
pub struct WorldSampler {
    pub n_range: RangeInclusive<usize>,
    pub densities: DensityRanges,
    pub rates: UnknownRates,
    pub repaired: Vec<Pred>,
    pub inner_draws: usize,
}

impl WorldSampler {
    fn fill<G: Rng + ?Sized>(w: &mut World, p: Pred, rho: f64, rng: &mut G) {
        let n = w.domain_size();
        let total = n.pow(p.arity() as u32);
        for off in 0..total {
            w.set_state_raw(p, off, AtomState::False);
        }
        for off in index::sample(rng, total, true_atom_count(n, p.arity(), rho)) {
            w.set_state_raw(p, off, AtomState::True);
        }
    }

    /// One outer draw followed by up to `inner_draws` inner draws; returns
    /// the first world `accept` maps to `Some`, with the number of inner
    /// draws used.
    pub fn draw<G: Rng + ?Sized, T>(
        &self,
        rng: &mut G,
        mut accept: impl FnMut(&World) -> Option<T>,
    ) -> Option<(World, T)> {
        let n = rng.random_range(self.n_range.clone());
        let mut base = World::new(n).expect("non-empty domain");
        let mut rho = [0.0; 4];
        for p in Pred::OBSERVED {
            let (lo, hi) = self.densities.get(p);
            rho[p.slot()] = if lo < hi { rng.random_range(lo..=hi) } else { lo };
        }
        for p in Pred::OBSERVED {
            if !self.repaired.contains(&p) {
                Self::fill(&mut base, p, rho[p.slot()], rng);
            }
        }
        for _ in 0..self.inner_draws.max(1) {
            let mut w = base.clone();
            for p in Pred::OBSERVED {
                if self.repaired.contains(&p) {
                    Self::fill(&mut w, p, rho[p.slot()], rng);
                }
            }
            for p in [Pred::R, Pred::S] {
                let count = self.rates.masked_count(p, n);
                if count > 0 {
                    for off in index::sample(rng, n * n, count) {
                        w.set_state_raw(p, off, AtomState::Unknown);
                    }
                }
            }
            w.reindex();
            if let Some(t) = accept(&w) {
                return Some((w, t));
            }
        }
        None
    }
}
