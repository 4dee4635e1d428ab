//! Instance generation: gold rules, filtered training worlds hardened against
//! shortcut competitors, cheater screening and reproducible holdout worlds.

pub mod audit;
pub mod pool;
pub mod sampler;
pub mod templates;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{CompetitorRecord, Dataset, GoldRecord, HoldoutStatus, InstanceRecord, Provenance};
use crate::engine::{world_assess, world_opt_cost, OptVariant, Regime};
use crate::formula::{formula_metrics, validate_hypothesis, Hypothesis, Pred};
use crate::theory::{builtin_theory, TheoryId, TheorySpec};
use crate::world::{worlds_equivalent, DensityRanges, UnknownRates, World};

use pool::{build_competitor_pool, cheater_pool, mutants, Competitor};
use sampler::{check_world, FilterFailure, FilterParams, WorldSampler, WorldStats};
use templates::{DiversityGate, Template};

/// Masking rates for the binary predicates.
pub fn unknown_rates(regime: Regime, theory: TheoryId) -> UnknownRates {
    match (regime, theory) {
        (Regime::Full, _) => UnknownRates::NONE,
        (Regime::Partial, _) => UnknownRates { r: 0.20, s: 0.10 },
        (Regime::Skeptical, TheoryId::T1 | TheoryId::T7) => UnknownRates { r: 0.05, s: 0.08 },
        (Regime::Skeptical, TheoryId::T6) => UnknownRates { r: 0.04, s: 0.08 },
        (Regime::Skeptical, _) => UnknownRates { r: 0.05, s: 0.05 },
    }
}

pub fn densities(regime: Regime) -> DensityRanges {
    match regime {
        Regime::Skeptical => DensityRanges::SKEPTICAL,
        _ => DensityRanges::FULL_PARTIAL,
    }
}

/// Domain sizes: drawn per world under Full and Partial, once per instance
/// under Skeptical.
pub fn domain_range(regime: Regime) -> RangeInclusive<usize> {
    match regime {
        Regime::Skeptical => 10..=12,
        _ => 9..=11,
    }
}

/// Default number of worlds drawn before elimination starts. Elimination
/// from a single world typically ends after one or two more, far below the
/// training-set sizes the benchmark is meant to have.
pub fn seed_worlds(regime: Regime) -> usize {
    match regime {
        Regime::Full => 9,
        Regime::Partial => 8,
        Regime::Skeptical => 6,
    }
}

/// The filter thresholds an instance was generated under; stored in dataset
/// headers so `verify` can re-check them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSettings {
    pub margin: usize,
    pub exception_cap: f64,
    pub gold_gap_slack: usize,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings { margin: 2, exception_cap: 0.20, gold_gap_slack: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub scenario: Regime,
    pub theory: TheorySpec,
    pub densities: DensityRanges,
    pub unknown_rates: UnknownRates,
    pub world_budget: usize,
    /// Filtered worlds drawn before competitor elimination starts.
    pub seed_worlds: usize,
    pub margin: usize,
    pub pool_cap: usize,
    pub holdout_count: usize,
    pub exception_cap: f64,
    pub gold_gap_slack: usize,
    pub diversity_cap: f64,
    pub global_seed: u64,
    /// Outer sampler draws per adversarial or initial world.
    pub world_attempts: usize,
    /// Outer sampler draws per holdout world.
    pub holdout_attempts: usize,
    /// Repaired-predicate redraws per outer draw.
    pub inner_draws: usize,
    /// Seeds tried per instance before giving up.
    pub instance_attempts: usize,
    /// Seeds tried per template before moving to the next one.
    pub attempts_per_template: usize,
    pub refine_gold: bool,
    pub refine_candidates: usize,
    /// Mixed into holdout seeds.
    pub dataset_path: String,
}

impl GenParams {
    pub fn new(scenario: Regime, theory: TheoryId, global_seed: u64) -> GenParams {
        GenParams {
            scenario,
            theory: builtin_theory(theory),
            densities: densities(scenario),
            unknown_rates: unknown_rates(scenario, theory),
            world_budget: 15,
            seed_worlds: seed_worlds(scenario),
            margin: 2,
            pool_cap: 30,
            holdout_count: 5,
            exception_cap: 0.20,
            gold_gap_slack: 1,
            diversity_cap: 0.15,
            global_seed,
            world_attempts: 200,
            holdout_attempts: 400,
            inner_draws: 32,
            instance_attempts: 64,
            attempts_per_template: 4,
            refine_gold: false,
            refine_candidates: 20,
            dataset_path: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Params(m.to_string()));
        if self.world_budget < 1 {
            return bad("world budget must be at least 1");
        }
        if self.seed_worlds < 1 || self.seed_worlds > self.world_budget {
            return bad("seed worlds must lie between 1 and the world budget");
        }
        if self.margin < 1 {
            return bad("margin must be at least 1");
        }
        if self.pool_cap < 1 {
            return bad("pool cap must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.exception_cap) || !(0.0..=1.0).contains(&self.diversity_cap) {
            return bad("fractions must lie in [0, 1]");
        }
        if !self.densities.is_valid() {
            return bad("density ranges must lie in [0, 1]");
        }
        if self.world_attempts == 0 || self.instance_attempts == 0 || self.attempts_per_template == 0 {
            return bad("attempt caps must be positive");
        }
        if !self.theory.scenarios.contains(&self.scenario) {
            return bad("theory is not used under this scenario");
        }
        Ok(())
    }

    pub fn filters(&self) -> FilterSettings {
        FilterSettings { margin: self.margin, exception_cap: self.exception_cap, gold_gap_slack: self.gold_gap_slack }
    }

    fn filter_params(&self) -> FilterParams {
        FilterParams { exception_cap: self.exception_cap, gold_gap_slack: self.gold_gap_slack }
    }

    /// Hex SHA-256 over every parameter that influences generation.
    pub fn digest(&self) -> String {
        let text = format!(
            "{}|{:?}|{:?}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}",
            self.scenario,
            self.densities,
            self.unknown_rates,
            self.world_budget,
            self.seed_worlds,
            self.margin,
            self.pool_cap,
            self.holdout_count,
            self.exception_cap,
            self.gold_gap_slack,
            self.diversity_cap,
            self.global_seed,
            self.world_attempts,
            self.holdout_attempts,
            self.inner_draws,
            self.instance_attempts,
            self.attempts_per_template,
            self.refine_gold,
            self.refine_candidates,
            self.dataset_path,
        );
        hex(&Sha256::digest(text.as_bytes()))
    }

    fn sampler(&self, n_range: RangeInclusive<usize>) -> WorldSampler {
        WorldSampler {
            n_range,
            densities: self.densities,
            rates: self.unknown_rates,
            repaired: self.theory.scope.forbidden.iter().copied().filter(|p| *p != Pred::Ab).collect(),
            inner_draws: self.inner_draws,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("{id}: no accepted instance after {attempts} attempts (last: {last})")]
    Exhausted { id: String, attempts: usize, last: String },
}

pub fn instance_id(scenario: Regime, theory: &str, index: usize) -> String {
    format!("ABD_{}_{}_{:04}", scenario.tag(), theory, index)
}

/// Seed of one generation attempt: the first eight bytes, big-endian, of
/// SHA-256 over `global_seed|scenario|theory|index|attempt`.
pub fn instance_seed(global_seed: u64, scenario: Regime, theory: &str, index: usize, attempt: usize) -> u64 {
    let h = Sha256::digest(format!("{global_seed}|{scenario}|{theory}|{index}|{attempt}").as_bytes());
    u64::from_be_bytes(h[..8].try_into().expect("eight bytes"))
}

/// Seed of holdout world `idx`: SHA-256 over the decimal concatenation of
/// dataset path, instance id, holdout index and global seed, read as a
/// big-endian integer, reduced mod 2^31.
pub fn holdout_seed(dataset_path: &str, instance_id: &str, idx: usize, global_seed: u64) -> u32 {
    let h = Sha256::digest(format!("{dataset_path}{instance_id}{idx}{global_seed}").as_bytes());
    u32::from_be_bytes(h[28..32].try_into().expect("four bytes")) & 0x7fff_ffff
}

fn gate_for(params: &GenParams) -> DiversityGate {
    let h = Sha256::digest(
        format!("{}|{}|{}|gate", params.global_seed, params.scenario, params.theory.short_id).as_bytes(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_be_bytes(h[..8].try_into().expect("eight bytes")));
    DiversityGate::new(&params.theory.scope, &mut rng)
}

/// One gold rule from a template.
pub fn sample_gold<G: Rng + ?Sized>(theory: &TheorySpec, template: Template, rng: &mut G) -> Hypothesis {
    let f = template.instantiate(&theory.scope, rng);
    validate_hypothesis(&f, &theory.scope).expect("templates fill only allowed predicates")
}

/// What happened to one attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub attempt: usize,
    pub seed: u64,
    pub template: String,
    pub gold: String,
    /// `accepted`, or the reason for rejection.
    pub outcome: String,
    pub worlds: usize,
    /// Sampler draws (outer times inner) spent on training worlds.
    pub draws: usize,
    pub filter_failures: BTreeMap<String, usize>,
    /// Competitor index and the world count at which it was eliminated.
    pub eliminated: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutLog {
    pub seeds: Vec<u32>,
    pub draws: Vec<usize>,
    pub status: HoldoutStatus,
}

/// Sidecar log line for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceLog {
    pub id: String,
    pub attempts: Vec<AttemptLog>,
    pub holdouts: Option<HoldoutLog>,
}

/// Per-competitor tracking inside the elimination loop.
struct Tracked {
    competitor: Competitor,
    alive: bool,
    total: usize,
    invalid_from: Option<usize>,
}

struct Draft {
    template: Template,
    gold: Hypothesis,
    worlds: Vec<World>,
    stats: Vec<WorldStats>,
    tracked: Vec<Tracked>,
}

impl Draft {
    fn gold_total(&self) -> usize {
        self.stats.iter().map(|s| s.gold_cost).sum()
    }

    fn survivors(&self, margin: usize) -> Vec<usize> {
        let bound = self.gold_total() + margin;
        (0..self.tracked.len()).filter(|&i| self.tracked[i].alive && self.tracked[i].total < bound).collect()
    }
}

enum Rejection {
    Filter,
    Budget,
    Separation,
    Cheater,
}

impl Rejection {
    fn name(&self) -> &'static str {
        match self {
            Rejection::Filter => "no world passed the filters",
            Rejection::Budget => "survivors remain at the world budget",
            Rejection::Separation => "no world separates the survivors",
            Rejection::Cheater => "a cheater undercuts the gold",
        }
    }
}

/// Count a sampled world's filter outcome.
fn tally(log: &mut AttemptLog, f: FilterFailure) {
    *log.filter_failures.entry(f.name().to_string()).or_insert(0) += 1;
}

fn filtered_world<G: Rng + ?Sized>(
    params: &GenParams,
    sampler: &WorldSampler,
    gold: &Hypothesis,
    taken: &[World],
    log: &mut AttemptLog,
    rng: &mut G,
) -> Option<(World, WorldStats)> {
    let fp = params.filter_params();
    for _ in 0..params.world_attempts {
        let found = sampler.draw(rng, |w| {
            log.draws += 1;
            if taken.iter().any(|t| worlds_equivalent(t, w)) {
                return None;
            }
            match check_world(params.scenario, &params.theory, gold, w, &fp) {
                Ok(s) => Some(s),
                Err(f) => {
                    tally(log, f);
                    None
                }
            }
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// A world that passes the filters and leaves strictly fewer survivors;
/// returns it with its stats and every live competitor's cost on it.
fn adversarial_world<G: Rng + ?Sized>(
    params: &GenParams,
    sampler: &WorldSampler,
    draft: &Draft,
    survivors: &[usize],
    log: &mut AttemptLog,
    rng: &mut G,
) -> Option<(World, (WorldStats, Vec<Option<usize>>))> {
    let fp = params.filter_params();
    let (regime, theory) = (params.scenario, &params.theory);
    let gold_total = draft.gold_total();
    for _ in 0..params.world_attempts {
        let found = sampler.draw(rng, |w| {
            log.draws += 1;
            if draft.worlds.iter().any(|t| worlds_equivalent(t, w)) {
                return None;
            }
            let stats = match check_world(regime, theory, &draft.gold, w, &fp) {
                Ok(s) => s,
                Err(f) => {
                    tally(log, f);
                    return None;
                }
            };
            let bound = gold_total + stats.gold_cost + params.margin;
            let mut costs: Vec<Option<usize>> = vec![None; draft.tracked.len()];
            let mut left = 0;
            for &i in survivors {
                costs[i] = world_assess(regime, theory, w, &draft.tracked[i].competitor.hypothesis);
                if matches!(costs[i], Some(c) if draft.tracked[i].total + c < bound) {
                    left += 1;
                }
            }
            if left == survivors.len() {
                *log.filter_failures.entry("no_elimination".into()).or_insert(0) += 1;
                return None;
            }
            // competitors already beaten on cost can come back if the gold
            // pays more on this world than they do
            for (i, t) in draft.tracked.iter().enumerate() {
                if t.alive && !survivors.contains(&i) {
                    costs[i] = world_assess(regime, theory, w, &t.competitor.hypothesis);
                    if matches!(costs[i], Some(c) if t.total + c < bound) {
                        left += 1;
                    }
                }
            }
            if left >= survivors.len() {
                *log.filter_failures.entry("no_elimination".into()).or_insert(0) += 1;
                return None;
            }
            Some((stats, costs))
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Best total cost of a valid cheater, if any cheater is valid everywhere.
fn best_cheater(regime: Regime, theory: &TheorySpec, worlds: &[World]) -> Option<usize> {
    cheater_pool(&theory.scope)
        .iter()
        .filter_map(|c| {
            worlds.iter().map(|w| world_assess(regime, theory, w, &c.hypothesis)).sum::<Option<usize>>()
        })
        .min()
}

fn cegis<G: Rng + ?Sized>(params: &GenParams, template: Template, log: &mut AttemptLog, rng: &mut G) -> Result<Draft, Rejection> {
    let theory = &params.theory;
    let gold = sample_gold(theory, template, rng);
    log.gold = gold.formula().render();
    let n_range = match params.scenario {
        Regime::Skeptical => {
            let n = rng.random_range(domain_range(Regime::Skeptical));
            n..=n
        }
        r => domain_range(r),
    };
    let sampler = params.sampler(n_range);
    let mut worlds = Vec::new();
    let mut stats = Vec::new();
    for _ in 0..params.seed_worlds {
        let (w, s) = filtered_world(params, &sampler, &gold, &worlds, log, rng).ok_or(Rejection::Filter)?;
        worlds.push(w);
        stats.push(s);
    }
    let pool = build_competitor_pool(&theory.scope, gold.formula(), params.pool_cap, rng);
    let tracked = pool
        .into_iter()
        .map(|c| {
            let mut t = Tracked { competitor: c, alive: true, total: 0, invalid_from: None };
            for w in &worlds {
                match world_assess(params.scenario, theory, w, &t.competitor.hypothesis) {
                    Some(c) => t.total += c,
                    None => {
                        t.alive = false;
                        t.invalid_from = Some(worlds.len());
                        break;
                    }
                }
            }
            t
        })
        .collect();
    let mut draft = Draft { template, gold, worlds, stats, tracked };
    loop {
        let survivors = draft.survivors(params.margin);
        if survivors.is_empty() {
            break;
        }
        if draft.worlds.len() >= params.world_budget {
            return Err(Rejection::Budget);
        }
        let (w, (stats, costs)) =
            adversarial_world(params, &sampler, &draft, &survivors, log, rng).ok_or(Rejection::Separation)?;
        draft.worlds.push(w);
        draft.stats.push(stats);
        let count = draft.worlds.len();
        for (i, t) in draft.tracked.iter_mut().enumerate() {
            if !t.alive {
                continue;
            }
            // every live competitor was evaluated on the accepted world
            match costs[i] {
                Some(c) => t.total += c,
                None => {
                    t.alive = false;
                    t.invalid_from = Some(count);
                    log.eliminated.push((i, count));
                }
            }
        }
    }
    Ok(draft)
}

/// Candidate golds for refinement: fresh template draws and mutants of the
/// seed gold.
fn refine<G: Rng + ?Sized>(
    params: &GenParams,
    draft: &Draft,
    excluded: &[Template],
    rng: &mut G,
) -> Option<(Template, Hypothesis, Vec<WorldStats>)> {
    let (regime, theory) = (params.scenario, &params.theory);
    let fp = params.filter_params();
    let per_kind = params.refine_candidates / 2;
    let mut candidates: Vec<(Template, Hypothesis)> = Vec::new();
    let gate_templates: Vec<Template> =
        Template::ALL.into_iter().filter(|t| t.fits(&theory.scope) && !excluded.contains(t)).collect();
    let draws = if gate_templates.is_empty() { 0 } else { per_kind };
    for _ in 0..draws {
        let t = gate_templates[rng.random_range(0..gate_templates.len())];
        candidates.push((t, sample_gold(theory, t, rng)));
    }
    for m in mutants(draft.gold.formula(), &theory.scope, params.refine_candidates - per_kind, rng) {
        candidates.push((draft.template, m));
    }
    // (gold total, negated cheater margin, ast size) ascending
    let mut best: Option<((usize, i64, usize), Template, Hypothesis, Vec<WorldStats>)> = None;
    let cheat = best_cheater(regime, theory, &draft.worlds);
    for (t, h) in candidates {
        let stats: Option<Vec<WorldStats>> =
            draft.worlds.iter().map(|w| check_world(regime, theory, &h, w, &fp).ok()).collect();
        let Some(stats) = stats else { continue };
        let total: usize = stats.iter().map(|s| s.gold_cost).sum();
        let bound = total + params.margin;
        let beaten = draft.tracked.iter().all(|c| {
            draft.worlds.iter().map(|w| world_assess(regime, theory, w, &c.competitor.hypothesis)).sum::<Option<usize>>().is_none_or(|c| c >= bound)
        });
        if !beaten {
            continue;
        }
        let margin = cheat.map(|c| c as i64 - total as i64);
        if matches!(margin, Some(m) if m < 0) {
            continue;
        }
        let key = (total, -margin.unwrap_or(i64::MAX / 2), formula_metrics(h.formula()).ast_size);
        if best.as_ref().is_none_or(|b| key < b.0) {
            best = Some((key, t, h, stats));
        }
    }
    let seed_total = draft.gold_total();
    let seed_margin = cheat.map(|c| c as i64 - seed_total as i64);
    let seed_key = (seed_total, -seed_margin.unwrap_or(i64::MAX / 2), formula_metrics(draft.gold.formula()).ast_size);
    best.filter(|b| b.0 < seed_key).map(|(_, t, h, s)| (t, h, s))
}

/// Generate instance `index` of a batch, retrying with fresh seeds.
pub fn generate_instance(params: &GenParams, index: usize) -> (Result<InstanceRecord, GenError>, InstanceLog) {
    generate_with_gate(params, index, &gate_for(params), &[])
}

/// As [`generate_instance`], never using the `excluded` templates. Batches
/// use this to reassign instances whose template reached the diversity cap;
/// the exclusions are kept in the provenance so the instance can be
/// regenerated on its own.
pub fn generate_instance_excluding(
    params: &GenParams,
    index: usize,
    excluded: &[Template],
) -> (Result<InstanceRecord, GenError>, InstanceLog) {
    generate_with_gate(params, index, &gate_for(params), excluded)
}

fn generate_with_gate(
    params: &GenParams,
    index: usize,
    gate: &DiversityGate,
    excluded: &[Template],
) -> (Result<InstanceRecord, GenError>, InstanceLog) {
    let id = instance_id(params.scenario, &params.theory.short_id, index);
    let mut log = InstanceLog { id: id.clone(), attempts: Vec::new(), holdouts: None };
    if let Err(e) = params.validate() {
        return (Err(e), log);
    }
    let (regime, theory) = (params.scenario, &params.theory);
    for attempt in 0..params.instance_attempts {
        let seed = instance_seed(params.global_seed, regime, &theory.short_id, index, attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(template) = gate.assign_excluding(index, attempt / params.attempts_per_template, excluded) else {
            break;
        };
        let mut alog = AttemptLog {
            attempt,
            seed,
            template: template.name().into(),
            gold: String::new(),
            outcome: String::new(),
            worlds: 0,
            draws: 0,
            filter_failures: BTreeMap::new(),
            eliminated: Vec::new(),
        };
        let result = cegis(params, template, &mut alog, &mut rng);
        let mut draft = match result {
            Ok(d) => d,
            Err(r) => {
                alog.outcome = r.name().into();
                log.attempts.push(alog);
                continue;
            }
        };
        alog.worlds = draft.worlds.len();
        let mut refined = false;
        let mut template_name = draft.template.name().to_string();
        if params.refine_gold {
            if let Some((t, h, stats)) = refine(params, &draft, excluded, &mut rng) {
                template_name = t.name().into();
                draft.gold = h;
                draft.stats = stats;
                refined = true;
            }
        }
        let gold_total = draft.gold_total();
        let cheat = best_cheater(regime, theory, &draft.worlds);
        if matches!(cheat, Some(c) if c < gold_total) {
            alog.outcome = Rejection::Cheater.name().into();
            log.attempts.push(alog);
            continue;
        }
        alog.outcome = "accepted".into();
        log.attempts.push(alog);
        let m = formula_metrics(draft.gold.formula());
        let record = InstanceRecord {
            id: id.clone(),
            scenario: regime,
            theory: theory.id().expect("built-in theory"),
            theory_internal: theory.internal_id.clone(),
            gold: GoldRecord {
                formula: draft.gold.formula().clone(),
                template: template_name,
                ast_size: m.ast_size,
                quantifier_depth: m.quantifier_depth,
            },
            train_gold_cost: draft.stats.iter().map(|s| s.gold_cost).collect(),
            train_opt_cost: draft.stats.iter().map(|s| s.opt_cost).collect(),
            train_worlds: draft.worlds,
            holdout_status: HoldoutStatus::Unavailable,
            holdout_worlds: Vec::new(),
            holdout_gold_cost: Vec::new(),
            holdout_opt_cost: Vec::new(),
            provenance: Provenance {
                global_seed: params.global_seed,
                instance_index: index,
                attempt,
                instance_seed: seed,
                dataset_path: params.dataset_path.clone(),
                holdout_seeds: Vec::new(),
                competitors: draft
                    .tracked
                    .iter()
                    .map(|t| CompetitorRecord {
                        formula: t.competitor.hypothesis.formula().clone(),
                        tier: t.competitor.tier,
                        invalid_from: t.invalid_from,
                    })
                    .collect(),
                cheater_margin: cheat.map(|c| c as i64 - gold_total as i64),
                refined,
                excluded_templates: excluded.iter().map(|t| t.name().to_string()).collect(),
            },
        };
        return (Ok(record), log);
    }
    let last = log.attempts.last().map(|a| a.outcome.clone()).unwrap_or_default();
    (Err(GenError::Exhausted { id, attempts: params.instance_attempts, last }), log)
}

/// Sample holdout worlds for an accepted instance and store them on it.
/// `params` must be the parameters the instance was generated with.
/// All-or-nothing: if any world exhausts its attempts the instance is marked
/// as having no holdouts.
pub fn generate_holdouts(params: &GenParams, record: &mut InstanceRecord) -> HoldoutLog {
    let (regime, theory) = (record.scenario, record.theory_spec());
    let gold = record.gold_hypothesis().expect("accepted gold is in scope");
    let ns = record.train_worlds.iter().map(World::domain_size);
    let n_range = ns.clone().min().unwrap_or(1)..=ns.max().unwrap_or(1);
    let sampler = params.sampler(n_range);
    let span = |v: &[usize]| (*v.iter().min().unwrap_or(&0), *v.iter().max().unwrap_or(&0));
    let cost_range = span(&record.train_gold_cost);
    let gaps: Vec<usize> = record.train_gold_cost.iter().zip(&record.train_opt_cost).map(|(g, o)| g.saturating_sub(*o)).collect();
    let gap_range = span(&gaps);
    let mut seeds = Vec::new();
    let mut draws = Vec::new();
    let mut worlds: Vec<World> = Vec::new();
    let mut gold_costs = Vec::new();
    let mut opt_costs = Vec::new();
    for idx in 0..params.holdout_count {
        let seed = holdout_seed(&params.dataset_path, &record.id, idx, params.global_seed);
        seeds.push(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let mut used = 0;
        let mut found = None;
        for _ in 0..params.holdout_attempts {
            found = sampler.draw(&mut rng, |w| {
                used += 1;
                if record.train_worlds.iter().chain(&worlds).any(|t| worlds_equivalent(t, w)) {
                    return None;
                }
                let g = world_assess(regime, &theory, w, &gold)?;
                if g < cost_range.0 || g > cost_range.1 {
                    return None;
                }
                let o = world_opt_cost(regime, &theory, w, OptVariant::Pointwise);
                if o < 1 {
                    return None;
                }
                let gap = g.checked_sub(o)?;
                (gap_range.0..=gap_range.1).contains(&gap).then_some((g, o))
            });
            if found.is_some() {
                break;
            }
        }
        draws.push(used);
        match found {
            Some((w, (g, o))) => {
                worlds.push(w);
                gold_costs.push(g);
                opt_costs.push(o);
            }
            None => {
                record.provenance.holdout_seeds = seeds.clone();
                return HoldoutLog { seeds, draws, status: HoldoutStatus::Unavailable };
            }
        }
    }
    let status = if worlds.is_empty() { HoldoutStatus::Unavailable } else { HoldoutStatus::Complete };
    record.provenance.holdout_seeds = seeds.clone();
    record.holdout_status = status;
    record.holdout_worlds = worlds;
    record.holdout_gold_cost = gold_costs;
    record.holdout_opt_cost = opt_costs;
    HoldoutLog { seeds, draws, status }
}

/// Outcome of a batch for one scenario.
#[derive(Debug, Clone)]
pub struct Batch {
    pub dataset: Dataset,
    pub logs: Vec<InstanceLog>,
    pub failures: Vec<GenError>,
}

/// Generate `count` instances for each theory, holdouts included.
///
/// Instances are generated independently (in parallel with the `parallel`
/// feature), then checked in job order against the diversity cap, which is
/// computed over the whole batch. An instance whose template is already at
/// the cap is regenerated, in job order, with every capped template
/// excluded. Output does not depend on scheduling.
pub fn generate_batch(base: &GenParams, theories: &[TheoryId], count: usize) -> Batch {
    let jobs: Vec<(GenParams, usize)> = theories
        .iter()
        .flat_map(|&t| {
            let mut p = base.clone();
            p.theory = builtin_theory(t);
            p.unknown_rates = unknown_rates(base.scenario, t);
            (0..count).map(move |i| (p.clone(), i))
        })
        .collect();
    let gates: BTreeMap<String, DiversityGate> =
        jobs.iter().map(|(p, _)| (p.theory.short_id.clone(), gate_for(p))).collect();
    let first = |(p, i): &(GenParams, usize)| generate_with_gate(p, *i, &gates[&p.theory.short_id], &[]);
    let mut results: Vec<(Result<InstanceRecord, GenError>, InstanceLog)> = par_map(&jobs, first);

    let cap = DiversityGate::cap(jobs.len(), base.diversity_cap);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut over = Vec::new();
    for (k, (rec, _)) in results.iter().enumerate() {
        if let Ok(r) = rec {
            let c = counts.entry(r.gold.template.clone()).or_default();
            if *c >= cap {
                over.push(k);
            } else {
                *c += 1;
            }
        }
    }
    for k in over {
        let excluded: Vec<Template> =
            counts.iter().filter(|(_, c)| **c >= cap).filter_map(|(t, _)| Template::from_name(t)).collect();
        let (p, i) = &jobs[k];
        let (rec, log) = generate_with_gate(p, *i, &gates[&p.theory.short_id], &excluded);
        if let Ok(r) = &rec {
            *counts.entry(r.gold.template.clone()).or_default() += 1;
        }
        let (_, first_log) = &mut results[k];
        first_log.attempts.extend(log.attempts);
        results[k].0 = rec;
    }

    let with_holdouts = |(k, (rec, mut log)): (usize, (Result<InstanceRecord, GenError>, InstanceLog))| {
        let p = &jobs[k].0;
        let rec = rec.map(|mut r| {
            if p.holdout_count > 0 {
                log.holdouts = Some(generate_holdouts(p, &mut r));
            }
            r
        });
        (rec, log)
    };
    let results = par_map_owned(results.into_iter().enumerate().collect(), with_holdouts);
    let mut instances = Vec::new();
    let mut logs = Vec::new();
    let mut failures = Vec::new();
    for (rec, log) in results {
        match rec {
            Ok(r) => instances.push(r),
            Err(e) => failures.push(e),
        }
        logs.push(log);
    }
    let mut dataset = Dataset::new(base.scenario, base.digest(), instances);
    dataset.header.filters = base.filters();
    Batch { dataset, logs, failures }
}

fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

fn par_map_owned<T: Send, U: Send>(items: Vec<T>, f: impl Fn(T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holdout_seed_is_low_bits_of_digest() {
        let h = Sha256::digest(b"data/full.jsonlABD_FULL_T1_000037");
        let mut big = 0u64;
        for b in h.iter() {
            big = ((big << 8) | *b as u64) % (1 << 31);
        }
        assert_eq!(holdout_seed("data/full.jsonl", "ABD_FULL_T1_0000", 3, 7) as u64, big);
    }

    #[test]
    fn rates_table() {
        assert_eq!(unknown_rates(Regime::Partial, TheoryId::T3), UnknownRates { r: 0.20, s: 0.10 });
        assert_eq!(unknown_rates(Regime::Skeptical, TheoryId::T6), UnknownRates { r: 0.04, s: 0.08 });
        assert_eq!(unknown_rates(Regime::Skeptical, TheoryId::T2), UnknownRates { r: 0.05, s: 0.05 });
        assert_eq!(unknown_rates(Regime::Full, TheoryId::T1), UnknownRates::NONE);
    }

    #[test]
    fn ids_and_seeds_are_stable() {
        assert_eq!(instance_id(Regime::Partial, "T4", 12), "ABD_PARTIAL_T4_0012");
        assert_eq!(instance_seed(1, Regime::Full, "T1", 0, 0), instance_seed(1, Regime::Full, "T1", 0, 0));
        assert_ne!(instance_seed(1, Regime::Full, "T1", 0, 0), instance_seed(1, Regime::Full, "T1", 0, 1));
    }

    #[test]
    fn invalid_params_are_reported() {
        let mut p = GenParams::new(Regime::Full, TheoryId::T1, 0);
        p.margin = 0;
        assert!(matches!(generate_instance(&p, 0).0, Err(GenError::Params(_))));
        let p = GenParams::new(Regime::Full, TheoryId::T6, 0);
        assert!(p.validate().is_err());
    }
}
