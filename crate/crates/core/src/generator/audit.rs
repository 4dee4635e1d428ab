//! Re-verification of generated instances from scratch.

use serde::{Deserialize, Serialize};

use super::{best_cheater, FilterSettings};
use crate::dataset::InstanceRecord;
use crate::engine::{world_assess, world_opt_cost, OptVariant};
use crate::formula::validate_hypothesis;
use crate::world::worlds_equivalent;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub id: String,
    pub check: String,
    pub detail: String,
}

/// Every filter the generator applied, recomputed with the engine. An empty
/// result means the instance passes.
pub fn audit_instance(rec: &InstanceRecord, filters: &FilterSettings) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fail = |check: &str, detail: String| {
        out.push(Violation { id: rec.id.clone(), check: check.to_string(), detail })
    };
    if let Err(e) = rec.check_shape() {
        fail("shape", e.to_string());
        return out;
    }
    let theory = rec.theory_spec();
    let regime = rec.scenario;
    if !theory.scenarios.contains(&regime) {
        fail("scenario", format!("{} is not used under {regime}", rec.theory));
    }
    let gold = match rec.gold_hypothesis() {
        Ok(g) => g,
        Err(e) => {
            fail("gold_scope", e.to_string());
            return out;
        }
    };
    let mut gold_total = 0;
    for (i, w) in rec.train_worlds.iter().enumerate() {
        let opt = world_opt_cost(regime, &theory, w, OptVariant::Pointwise);
        if opt != rec.train_opt_cost[i] {
            fail("opt_cache", format!("world {i}: cached {} recomputed {opt}", rec.train_opt_cost[i]));
        }
        if opt < 1 {
            fail("opt_cost_floor", format!("world {i}: OptCost 0"));
        }
        if opt as f64 > filters.exception_cap * w.domain_size() as f64 + 1e-9 {
            fail("exception_rate", format!("world {i}: OptCost {opt} over {} elements", w.domain_size()));
        }
        match world_assess(regime, &theory, w, &gold) {
            None => fail("gold_validity", format!("world {i}")),
            Some(c) => {
                gold_total += c;
                if c != rec.train_gold_cost[i] {
                    fail("gold_cache", format!("world {i}: cached {} recomputed {c}", rec.train_gold_cost[i]));
                }
                if c > opt + filters.gold_gap_slack {
                    fail("gold_gap", format!("world {i}: gold {c} OptCost {opt}"));
                }
            }
        }
    }
    for comp in &rec.provenance.competitors {
        let Ok(h) = validate_hypothesis(&comp.formula, &theory.scope) else {
            fail("competitor_scope", comp.formula.render());
            continue;
        };
        let total: Option<usize> = rec.train_worlds.iter().map(|w| world_assess(regime, &theory, w, &h)).sum();
        if let Some(t) = total {
            if t < gold_total + filters.margin {
                fail("competitor_survives", format!("{} costs {t} vs gold {gold_total}", comp.formula));
            }
        }
    }
    let cheat = best_cheater(regime, &theory, &rec.train_worlds);
    if let Some(c) = cheat {
        if c < gold_total {
            fail("cheater", format!("best cheater costs {c} vs gold {gold_total}"));
        }
    }
    if cheat.map(|c| c as i64 - gold_total as i64) != rec.provenance.cheater_margin {
        fail("cheater_cache", format!("recorded margin {:?}", rec.provenance.cheater_margin));
    }
    if rec.has_holdouts() {
        let span = |v: &[usize]| (*v.iter().min().unwrap_or(&0), *v.iter().max().unwrap_or(&0));
        let costs = span(&rec.train_gold_cost);
        let gaps: Vec<usize> =
            rec.train_gold_cost.iter().zip(&rec.train_opt_cost).map(|(g, o)| g.saturating_sub(*o)).collect();
        let gaps = span(&gaps);
        for (i, w) in rec.holdout_worlds.iter().enumerate() {
            if rec.train_worlds.iter().chain(&rec.holdout_worlds[..i]).any(|t| worlds_equivalent(t, w)) {
                fail("holdout_duplicate", format!("holdout {i}"));
            }
            let opt = world_opt_cost(regime, &theory, w, OptVariant::Pointwise);
            if opt != rec.holdout_opt_cost[i] {
                fail("holdout_opt_cache", format!("holdout {i}"));
            }
            if opt < 1 {
                fail("holdout_opt_cost_floor", format!("holdout {i}: OptCost 0"));
            }
            match world_assess(regime, &theory, w, &gold) {
                None => fail("holdout_gold_validity", format!("holdout {i}")),
                Some(c) => {
                    if c != rec.holdout_gold_cost[i] {
                        fail("holdout_gold_cache", format!("holdout {i}"));
                    }
                    let gap = c.saturating_sub(opt);
                    if c < costs.0 || c > costs.1 || gap < gaps.0 || gap > gaps.1 {
                        fail("holdout_range", format!("holdout {i}: cost {c} gap {gap}"));
                    }
                }
            }
        }
    }
    out
}
