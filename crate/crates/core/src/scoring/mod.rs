//! Scoring model predictions against instances.

pub mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::InstanceRecord;
use crate::engine::oracle::{oracle_assess, oracle_opt_cost, MAX_ORACLE_DOMAIN};
use crate::engine::{world_assess, OptVariant, Regime};
use crate::formula::{formula_metrics, parse_formula, validate_hypothesis, Formula, Hypothesis};
use crate::theory::{TheoryId, TheorySpec};
use crate::world::{World, ENUMERATION_CAP};

pub use report::{aggregate_report, Report, ReportError, Table};

/// One model answer for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub model_id: String,
    pub formula_text: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictionError {
    #[error("output spans several lines")]
    MultiLine,
    #[error("not a single JSON object: {0}")]
    Json(String),
    #[error("expected exactly the keys formula and description, found {0:?}")]
    Keys(Vec<String>),
    #[error("`{0}` must be a string")]
    NotString(&'static str),
}

/// Strict parse of one output line: a single JSON object with exactly the
/// string keys `formula` and `description`, nothing before or after it.
pub fn parse_prediction(line: &str) -> Result<(String, String), PredictionError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.contains('\n') {
        return Err(PredictionError::MultiLine);
    }
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| PredictionError::Json(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| PredictionError::Json("top level is not an object".into()))?;
    let mut keys: Vec<String> = obj.keys().cloned().collect();
    keys.sort();
    if keys != ["description", "formula"] {
        return Err(PredictionError::Keys(keys));
    }
    let formula = obj["formula"].as_str().ok_or(PredictionError::NotString("formula"))?;
    let description = obj["description"].as_str().ok_or(PredictionError::NotString("description"))?;
    Ok((formula.to_string(), description.to_string()))
}

/// Failure taxonomy, assigned first-match in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum FailureClass {
    ParseError,
    AllInvalidTrain,
    PartialInvalidTrain,
    Brittle { catastrophic: bool },
    ParsimonyInflation,
    Success,
}

impl FailureClass {
    pub fn name(self) -> &'static str {
        match self {
            FailureClass::ParseError => "parse_error",
            FailureClass::AllInvalidTrain => "all_invalid_train",
            FailureClass::PartialInvalidTrain => "partial_invalid_train",
            FailureClass::Brittle { .. } => "brittle",
            FailureClass::ParsimonyInflation => "parsimony_inflation",
            FailureClass::Success => "success",
        }
    }
}

/// Thresholds of the failure taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Survivors whose ΔGap exceeds this are inflated.
    pub inflation_threshold: f64,
    /// Brittle records with a holdout-valid fraction below this are
    /// catastrophic.
    pub catastrophic_fraction: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig { inflation_threshold: 2.0, catastrophic_fraction: 0.5 }
    }
}

/// Everything measured about one prediction. Costs and gaps are `None`
/// wherever the formula is invalid; gaps are per world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub instance_id: String,
    pub model_id: String,
    pub scenario: Regime,
    pub theory: TheoryId,
    pub gold_ast_size: usize,
    pub parse_ok: bool,
    /// Parse or scope problem, if any.
    pub error: Option<String>,
    pub formula: Option<String>,
    pub ast_size: Option<usize>,
    pub quantifier_depth: Option<usize>,
    pub train_worlds: usize,
    pub train_valid_worlds: Vec<bool>,
    pub train_valid: bool,
    pub train_cost: Option<usize>,
    pub train_opt: usize,
    pub train_gap: Option<f64>,
    pub gold_cost: usize,
    pub gap_gold: Option<f64>,
    /// Train cost minus gold cost; negative when the gold is beaten.
    pub gold_margin: Option<i64>,
    pub beats_gold: bool,
    pub holdout_available: bool,
    pub holdout_valid_worlds: Vec<bool>,
    pub holdout_valid: Option<bool>,
    pub holdout_cost: Option<usize>,
    pub holdout_opt: Option<usize>,
    pub holdout_gap: Option<f64>,
    pub survivor: bool,
    pub delta_gap: Option<f64>,
    pub failure: FailureClass,
}

impl ScoreRecord {
    pub fn holdout_valid_fraction(&self) -> Option<f64> {
        if self.holdout_valid_worlds.is_empty() {
            return None;
        }
        Some(self.holdout_valid_worlds.iter().filter(|v| **v).count() as f64 / self.holdout_valid_worlds.len() as f64)
    }
}

/// Per-world validity and cost; the total is `None` unless every world is
/// valid.
fn assess_all(regime: Regime, theory: &TheorySpec, worlds: &[World], h: &Hypothesis) -> (Vec<bool>, Option<usize>) {
    let costs: Vec<Option<usize>> = worlds.iter().map(|w| world_assess(regime, theory, w, h)).collect();
    let valid = costs.iter().map(Option::is_some).collect();
    (valid, costs.into_iter().sum())
}

/// Score the raw model output `line` for `inst`.
pub fn score_line(line: &str, model_id: &str, inst: &InstanceRecord, cfg: &ClassifyConfig) -> ScoreRecord {
    match parse_prediction(line) {
        Ok((formula, description)) => score_prediction(
            &Prediction { instance_id: inst.id.clone(), model_id: model_id.into(), formula_text: formula, description },
            inst,
            cfg,
        ),
        Err(e) => blank(inst, model_id, false, Some(e.to_string()), None, cfg),
    }
}

fn blank(
    inst: &InstanceRecord,
    model_id: &str,
    parse_ok: bool,
    error: Option<String>,
    formula: Option<&Formula>,
    cfg: &ClassifyConfig,
) -> ScoreRecord {
    let metrics = formula.map(formula_metrics);
    let mut r = ScoreRecord {
        instance_id: inst.id.clone(),
        model_id: model_id.to_string(),
        scenario: inst.scenario,
        theory: inst.theory,
        gold_ast_size: inst.gold.ast_size,
        parse_ok,
        error,
        formula: formula.map(Formula::render),
        ast_size: metrics.map(|m| m.ast_size),
        quantifier_depth: metrics.map(|m| m.quantifier_depth),
        train_worlds: inst.train_worlds.len(),
        train_valid_worlds: vec![false; inst.train_worlds.len()],
        train_valid: false,
        train_cost: None,
        train_opt: inst.train_opt_cost.iter().sum(),
        train_gap: None,
        gold_cost: inst.train_gold_cost.iter().sum(),
        gap_gold: None,
        gold_margin: None,
        beats_gold: false,
        holdout_available: inst.has_holdouts(),
        holdout_valid_worlds: if inst.has_holdouts() && parse_ok { vec![false; inst.holdout_worlds.len()] } else { vec![] },
        holdout_valid: (inst.has_holdouts() && parse_ok).then_some(false),
        holdout_cost: None,
        holdout_opt: inst.has_holdouts().then(|| inst.holdout_opt_cost.iter().sum()),
        holdout_gap: None,
        survivor: false,
        delta_gap: None,
        failure: FailureClass::ParseError,
    };
    r.failure = classify_failure(&r, cfg);
    r
}

/// Score a parsed prediction. A formula outside the theory's scope is
/// invalid on every world.
pub fn score_prediction(p: &Prediction, inst: &InstanceRecord, cfg: &ClassifyConfig) -> ScoreRecord {
    let f = match parse_formula(&p.formula_text, true) {
        Ok(f) => f,
        Err(e) => return blank(inst, &p.model_id, false, Some(format!("formula: {e}")), None, cfg),
    };
    let theory = inst.theory_spec();
    let hyp = match validate_hypothesis(&f, &theory.scope) {
        Ok(h) => h,
        Err(e) => return blank(inst, &p.model_id, true, Some(format!("scope: {e}")), Some(&f), cfg),
    };
    let mut r = blank(inst, &p.model_id, true, None, Some(&f), cfg);
    let regime = inst.scenario;
    let (valid, cost) = assess_all(regime, &theory, &inst.train_worlds, &hyp);
    let nw = inst.train_worlds.len() as f64;
    r.train_valid_worlds = valid;
    r.train_valid = cost.is_some();
    r.train_cost = cost;
    if let Some(c) = cost {
        r.train_gap = Some((c as f64 - r.train_opt as f64) / nw);
        r.gap_gold = Some((c as f64 - r.gold_cost as f64) / nw);
        r.gold_margin = Some(c as i64 - r.gold_cost as i64);
        r.beats_gold = c < r.gold_cost;
    }
    if inst.has_holdouts() {
        let (hvalid, hcost) = assess_all(regime, &theory, &inst.holdout_worlds, &hyp);
        r.holdout_valid_worlds = hvalid;
        r.holdout_valid = Some(hcost.is_some());
        r.holdout_cost = hcost;
        let opt = r.holdout_opt.expect("holdouts present");
        r.holdout_gap = hcost.map(|c| (c as f64 - opt as f64) / inst.holdout_worlds.len() as f64);
    }
    r.survivor = r.train_valid && r.holdout_valid == Some(true);
    if r.survivor {
        r.delta_gap = Some(r.holdout_gap.expect("survivor") - r.train_gap.expect("survivor"));
    }
    r.failure = classify_failure(&r, cfg);
    r
}

/// First matching class. A train-valid record without holdouts is a
/// success: there is nothing for it to fail on.
pub fn classify_failure(r: &ScoreRecord, cfg: &ClassifyConfig) -> FailureClass {
    if !r.parse_ok {
        return FailureClass::ParseError;
    }
    let valid = r.train_valid_worlds.iter().filter(|v| **v).count();
    if valid == 0 {
        return FailureClass::AllInvalidTrain;
    }
    if valid < r.train_valid_worlds.len() {
        return FailureClass::PartialInvalidTrain;
    }
    if let Some(frac) = r.holdout_valid_fraction() {
        if frac < 1.0 {
            return FailureClass::Brittle { catastrophic: frac < cfg.catastrophic_fraction };
        }
    }
    match r.delta_gap {
        Some(d) if d > cfg.inflation_threshold => FailureClass::ParsimonyInflation,
        _ => FailureClass::Success,
    }
}

/// Syntactic shape used to group brittle formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrittlePattern {
    ExistsOnly,
    MixedQuantifiers,
    Propositional,
    ForallOnly,
    Other,
}

impl BrittlePattern {
    pub const ALL: [BrittlePattern; 5] = [
        BrittlePattern::ExistsOnly,
        BrittlePattern::MixedQuantifiers,
        BrittlePattern::Propositional,
        BrittlePattern::ForallOnly,
        BrittlePattern::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BrittlePattern::ExistsOnly => "exists_only",
            BrittlePattern::MixedQuantifiers => "mixed_quantifiers",
            BrittlePattern::Propositional => "propositional_and",
            BrittlePattern::ForallOnly => "forall_only",
            BrittlePattern::Other => "other",
        }
    }

    /// Quantifier-free formulas count as propositional when they contain a
    /// conjunction.
    pub fn of(f: &Formula) -> BrittlePattern {
        let (mut ex, mut fa, mut and) = (false, false, false);
        f.visit(&mut |g| match g {
            Formula::Exists(..) => ex = true,
            Formula::Forall(..) => fa = true,
            Formula::And(_) => and = true,
            _ => {}
        });
        match (ex, fa) {
            (true, false) => BrittlePattern::ExistsOnly,
            (true, true) => BrittlePattern::MixedQuantifiers,
            (false, true) => BrittlePattern::ForallOnly,
            (false, false) if and => BrittlePattern::Propositional,
            _ => BrittlePattern::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleMismatch {
    pub instance_id: String,
    pub detail: String,
}

/// Largest completion count (as bits) the oracle sweeps for validity and
/// cost, and largest completion-times-subset count for OptCost.
pub const ORACLE_ASSESS_BITS: usize = 20;
pub const ORACLE_OPT_BITS: usize = 22;

/// Re-derive a record's validity and costs with the brute-force engine.
/// Queries too large for the oracle are skipped and counted.
pub fn oracle_diff(r: &ScoreRecord, inst: &InstanceRecord) -> (Vec<OracleMismatch>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    let Some(text) = &r.formula else { return (out, 0) };
    let theory = inst.theory_spec();
    let Ok(h) = parse_formula(text, true).map_err(|_| ()).and_then(|f| validate_hypothesis(&f, &theory.scope).map_err(|_| ()))
    else {
        return (out, 0);
    };
    let sets: [(&str, &[World], &[bool], &[usize]); 2] = [
        ("train", &inst.train_worlds, &r.train_valid_worlds, &inst.train_opt_cost),
        ("holdout", &inst.holdout_worlds, &r.holdout_valid_worlds, &inst.holdout_opt_cost),
    ];
    for (label, worlds, valid, opt) in sets {
        for (i, w) in worlds.iter().enumerate() {
            let k = w.unknown_atoms().len();
            if k > ORACLE_ASSESS_BITS {
                skipped += 1;
                continue;
            }
            let engine_cost = world_assess(inst.scenario, &theory, w, &h);
            match oracle_assess(inst.scenario, &theory, w, h.formula(), ENUMERATION_CAP) {
                Ok((ok, cost)) => {
                    if valid.get(i) != Some(&ok) || engine_cost != cost {
                        out.push(OracleMismatch {
                            instance_id: inst.id.clone(),
                            detail: format!("{label} world {i}: engine {engine_cost:?}, oracle {cost:?}"),
                        });
                    }
                }
                Err(_) => skipped += 1,
            }
            if w.domain_size() > MAX_ORACLE_DOMAIN || k + w.domain_size() > ORACLE_OPT_BITS {
                skipped += 1;
                continue;
            }
            if let Ok(o) = oracle_opt_cost(inst.scenario, &theory, w, OptVariant::Pointwise, ENUMERATION_CAP) {
                if opt.get(i) != Some(&o) {
                    out.push(OracleMismatch {
                        instance_id: inst.id.clone(),
                        detail: format!("{label} world {i}: cached OptCost {:?}, oracle {o}", opt.get(i)),
                    });
                }
            }
        }
    }
    (out, skipped)
}
