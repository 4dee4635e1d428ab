//! Aggregate tables over score records.
//!
//! Each statistic is a plain function over a slice of records so callers can
//! regroup freely; [`aggregate_report`] assembles the standard tables per
//! model, per scenario, per theory and pooled.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BrittlePattern, FailureClass, ScoreRecord};
use crate::dataset::InstanceRecord;
use crate::engine::Regime;
use crate::formula::parse_formula;
use crate::theory::TheoryId;

/// Label of pooled rows.
pub const ALL: &str = "ALL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("no score records")]
    Empty,
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn pct(k: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| 100.0 * k as f64 / n as f64)
}

/// Percentile with linear interpolation between closest ranks.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub n: usize,
    pub valid: usize,
    pub valid_pct: Option<f64>,
    /// Means over train-valid records.
    pub gap: Option<f64>,
    pub gap_gold: Option<f64>,
}

pub fn train_stats(recs: &[&ScoreRecord]) -> TrainStats {
    let valid: Vec<&&ScoreRecord> = recs.iter().filter(|r| r.train_valid).collect();
    TrainStats {
        n: recs.len(),
        valid: valid.len(),
        valid_pct: pct(valid.len(), recs.len()),
        gap: mean(valid.iter().filter_map(|r| r.train_gap)),
        gap_gold: mean(valid.iter().filter_map(|r| r.gap_gold)),
    }
}

/// Train and holdout side by side. Each column averages over its own valid
/// subset, so `delta_gap` need not equal `holdout_gap - train_gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutStats {
    pub n: usize,
    pub train_valid_pct: Option<f64>,
    pub with_holdout: usize,
    pub holdout_valid: usize,
    pub holdout_valid_pct: Option<f64>,
    pub train_gap: Option<f64>,
    pub holdout_gap: Option<f64>,
    pub survivors: usize,
    pub delta_gap: Option<f64>,
    pub mean_ast: Option<f64>,
}

pub fn holdout_stats(recs: &[&ScoreRecord]) -> HoldoutStats {
    let with: Vec<&&ScoreRecord> = recs.iter().filter(|r| r.holdout_available).collect();
    let hvalid = with.iter().filter(|r| r.holdout_valid == Some(true)).count();
    let survivors: Vec<&&ScoreRecord> = recs.iter().filter(|r| r.survivor).collect();
    HoldoutStats {
        n: recs.len(),
        train_valid_pct: pct(recs.iter().filter(|r| r.train_valid).count(), recs.len()),
        with_holdout: with.len(),
        holdout_valid: hvalid,
        holdout_valid_pct: pct(hvalid, with.len()),
        train_gap: mean(recs.iter().filter_map(|r| r.train_gap)),
        holdout_gap: mean(recs.iter().filter_map(|r| r.holdout_gap)),
        survivors: survivors.len(),
        delta_gap: mean(survivors.iter().filter_map(|r| r.delta_gap)),
        mean_ast: mean(recs.iter().filter_map(|r| r.ast_size.map(|a| a as f64))),
    }
}

/// Holdout validity among train-valid records that have holdout worlds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalStats {
    pub train_valid: usize,
    pub train_valid_with_holdout: usize,
    pub holdout_given_train: usize,
    pub pct: Option<f64>,
}

pub fn conditional_stats(recs: &[&ScoreRecord]) -> ConditionalStats {
    let tv: Vec<&&ScoreRecord> = recs.iter().filter(|r| r.train_valid).collect();
    let th: Vec<&&ScoreRecord> = tv.iter().copied().filter(|r| r.holdout_available).collect();
    let h = th.iter().filter(|r| r.holdout_valid == Some(true)).count();
    ConditionalStats {
        train_valid: tv.len(),
        train_valid_with_holdout: th.len(),
        holdout_given_train: h,
        pct: pct(h, th.len()),
    }
}

/// Holdout validity given train validity and survivor ΔGap for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationStats {
    pub n: usize,
    pub valid_pct: Option<f64>,
    pub survivors: usize,
    pub delta_gap: Option<f64>,
}

pub fn generalization_stats(recs: &[&ScoreRecord]) -> GeneralizationStats {
    let c = conditional_stats(recs);
    let survivors: Vec<f64> = recs.iter().filter_map(|r| r.delta_gap).collect();
    GeneralizationStats {
        n: c.train_valid_with_holdout,
        valid_pct: c.pct,
        survivors: survivors.len(),
        delta_gap: mean(survivors),
    }
}

pub const AST_BINS: [(usize, Option<usize>); 3] = [(0, Some(15)), (15, Some(30)), (30, None)];

pub const GOLD_AST_BINS: [(usize, Option<usize>); 6] =
    [(0, Some(5)), (5, Some(10)), (10, Some(15)), (15, Some(20)), (20, Some(30)), (30, None)];

pub fn in_bin(x: usize, bin: (usize, Option<usize>)) -> bool {
    x >= bin.0 && bin.1.is_none_or(|hi| x < hi)
}

pub fn bin_label(bin: (usize, Option<usize>)) -> String {
    match bin.1 {
        Some(hi) => format!("[{},{})", bin.0, hi),
        None => format!("[{},+)", bin.0),
    }
}

/// Per AST bin of the predicted formula.
pub fn ast_bin_stats(recs: &[&ScoreRecord]) -> Vec<GeneralizationStats> {
    AST_BINS
        .iter()
        .map(|&b| {
            let sub: Vec<&ScoreRecord> = recs.iter().copied().filter(|r| r.ast_size.is_some_and(|a| in_bin(a, b))).collect();
            generalization_stats(&sub)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSide {
    pub records: usize,
    /// Mean over problems of the per-problem holdout validity.
    pub valid_pct: Option<f64>,
    /// Mean over problems with at least one survivor of the per-problem
    /// mean ΔGap.
    pub delta_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedStats {
    pub problems: usize,
    pub shorter: PairedSide,
    pub longer: PairedSide,
}

/// Shorter (AST below gold) against longer (AST above gold) train-valid
/// formulas with holdout data, on problems that have both; formulas of
/// exactly the gold's size are left out. Every problem weighs the same.
pub fn paired_stats(recs: &[&ScoreRecord]) -> PairedStats {
    let mut by_problem: BTreeMap<&str, (Vec<&ScoreRecord>, Vec<&ScoreRecord>)> = BTreeMap::new();
    for r in recs.iter().filter(|r| r.train_valid && r.holdout_available) {
        let Some(a) = r.ast_size else { continue };
        let entry = by_problem.entry(r.instance_id.as_str()).or_default();
        match a.cmp(&r.gold_ast_size) {
            std::cmp::Ordering::Less => entry.0.push(r),
            std::cmp::Ordering::Greater => entry.1.push(r),
            std::cmp::Ordering::Equal => {}
        }
    }
    let pairs: Vec<_> = by_problem.values().filter(|(s, l)| !s.is_empty() && !l.is_empty()).collect();
    let side = |longer: bool| {
        let groups: Vec<&Vec<&ScoreRecord>> = pairs.iter().map(|p| if longer { &p.1 } else { &p.0 }).collect();
        PairedSide {
            records: groups.iter().map(|g| g.len()).sum(),
            valid_pct: mean(groups.iter().map(|g| {
                100.0 * g.iter().filter(|r| r.holdout_valid == Some(true)).count() as f64 / g.len() as f64
            })),
            delta_gap: mean(groups.iter().filter_map(|g| mean(g.iter().filter_map(|r| r.delta_gap)))),
        }
    };
    PairedStats { problems: pairs.len(), shorter: side(false), longer: side(true) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatsGoldStats {
    pub train_valid: usize,
    pub beaters: usize,
    pub rate_pct: Option<f64>,
    /// Mean per-world cost improvement over the gold among beaters.
    pub mean_improvement: Option<f64>,
    pub mean_ast: Option<f64>,
}

pub fn beats_gold_stats(recs: &[&ScoreRecord]) -> BeatsGoldStats {
    let valid = recs.iter().filter(|r| r.train_valid).count();
    let beaters: Vec<&&ScoreRecord> = recs.iter().filter(|r| r.beats_gold).collect();
    BeatsGoldStats {
        train_valid: valid,
        beaters: beaters.len(),
        rate_pct: pct(beaters.len(), valid),
        mean_improvement: mean(
            beaters.iter().filter_map(|r| r.gold_margin.map(|m| -(m as f64) / r.train_worlds as f64)),
        ),
        mean_ast: mean(beaters.iter().filter_map(|r| r.ast_size.map(|a| a as f64))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDistribution {
    pub n: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub p90: Option<f64>,
    pub max: Option<f64>,
    pub over3_pct: Option<f64>,
    pub over5_pct: Option<f64>,
}

/// Distribution of the normalized train gap over train-valid records.
pub fn gap_distribution(recs: &[&ScoreRecord]) -> GapDistribution {
    let mut gaps: Vec<f64> = recs.iter().filter_map(|r| r.train_gap).collect();
    gaps.sort_by(f64::total_cmp);
    GapDistribution {
        n: gaps.len(),
        mean: mean(gaps.iter().copied()),
        median: percentile(&gaps, 0.5),
        p90: percentile(&gaps, 0.9),
        max: gaps.last().copied(),
        over3_pct: pct(gaps.iter().filter(|g| **g > 3.0).count(), gaps.len()),
        over5_pct: pct(gaps.iter().filter(|g| **g > 5.0).count(), gaps.len()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FailureCounts {
    pub parse_error: usize,
    pub all_invalid_train: usize,
    pub partial_invalid_train: usize,
    pub brittle: usize,
    pub catastrophic: usize,
    pub parsimony_inflation: usize,
    pub success: usize,
}

impl FailureCounts {
    pub fn total(&self) -> usize {
        self.parse_error
            + self.all_invalid_train
            + self.partial_invalid_train
            + self.brittle
            + self.parsimony_inflation
            + self.success
    }
}

pub fn failure_counts(recs: &[&ScoreRecord]) -> FailureCounts {
    let mut c = FailureCounts::default();
    for r in recs {
        match r.failure {
            FailureClass::ParseError => c.parse_error += 1,
            FailureClass::AllInvalidTrain => c.all_invalid_train += 1,
            FailureClass::PartialInvalidTrain => c.partial_invalid_train += 1,
            FailureClass::Brittle { catastrophic } => {
                c.brittle += 1;
                c.catastrophic += catastrophic as usize;
            }
            FailureClass::ParsimonyInflation => c.parsimony_inflation += 1,
            FailureClass::Success => c.success += 1,
        }
    }
    c
}

pub fn brittle_patterns(recs: &[&ScoreRecord]) -> BTreeMap<BrittlePattern, usize> {
    let mut out: BTreeMap<BrittlePattern, usize> = BrittlePattern::ALL.iter().map(|p| (*p, 0)).collect();
    for r in recs.iter().filter(|r| matches!(r.failure, FailureClass::Brittle { .. })) {
        if let Some(f) = r.formula.as_deref().and_then(|t| parse_formula(t, true).ok()) {
            *out.entry(BrittlePattern::of(&f)).or_insert(0) += 1;
        }
    }
    out
}

/// A table cell: text, a count, or a possibly missing number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(Option<f64>),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(k) => k.to_string(),
            Cell::Num(Some(x)) => format!("{x:.2}"),
            Cell::Num(None) => "---".to_string(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Int(k as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Num(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, title: &str, columns: &[&str]) -> Table {
        Table {
            name: name.into(),
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows as JSON objects keyed by column name.
    pub fn json_rows(&self) -> Vec<serde_json::Value> {
        self.rows
            .iter()
            .map(|row| {
                let obj: serde_json::Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.clone(), serde_json::to_value(v).expect("cells serialize")))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect()
    }

    /// Fixed-width text rendering.
    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| cells.iter().map(|r| r[i].len()).chain([self.columns[i].len()]).max().unwrap_or(0))
            .collect();
        let mut out = format!("{}\n", self.title);
        let line = |vals: &[String]| {
            let parts: Vec<String> = vals
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (v, w))| if i == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let _ = writeln!(out, "{}", line(&self.columns));
        let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
        for r in &cells {
            let _ = writeln!(out, "{}", line(r));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn render(&self) -> String {
        self.tables.iter().map(Table::render).collect::<Vec<_>>().join("\n")
    }
}

/// Records of one model (or all of them for [`ALL`]).
fn of_model<'a>(recs: &[&'a ScoreRecord], model: &str) -> Vec<&'a ScoreRecord> {
    recs.iter().copied().filter(|r| model == ALL || r.model_id == model).collect()
}

fn filter<'a>(recs: &[&'a ScoreRecord], keep: impl Fn(&ScoreRecord) -> bool) -> Vec<&'a ScoreRecord> {
    recs.iter().copied().filter(|r| keep(r)).collect()
}

/// All standard tables. `instances` is the instance set the records were
/// scored against; it is used to count missing predictions.
pub fn aggregate_report(records: &[ScoreRecord], instances: &[InstanceRecord]) -> Result<Report, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let all: Vec<&ScoreRecord> = records.iter().collect();
    let models: Vec<String> = {
        let set: BTreeSet<&str> = records.iter().map(|r| r.model_id.as_str()).collect();
        set.into_iter().map(String::from).chain([ALL.to_string()]).collect()
    };
    let scenarios: Vec<Regime> = {
        let set: BTreeSet<Regime> = records.iter().map(|r| r.scenario).collect();
        set.into_iter().collect()
    };
    let theories: Vec<TheoryId> = {
        let set: BTreeSet<TheoryId> = records.iter().map(|r| r.theory).collect();
        set.into_iter().collect()
    };
    let mut tables = Vec::new();

    // training performance per scenario, with pooled (micro) and
    // per-scenario-averaged (macro) overall columns
    let mut t = Table::new(
        "train_by_scenario",
        "Training performance by scenario (Gap and GapG per world, over train-valid records)",
        &["model", "scenario", "n", "valid_pct", "gap", "gap_gold"],
    );
    for m in &models {
        let mine = of_model(&all, m);
        let mut per: Vec<TrainStats> = Vec::new();
        for s in &scenarios {
            let st = train_stats(&filter(&mine, |r| r.scenario == *s));
            t.push(vec![m.as_str().into(), s.name().into(), st.n.into(), st.valid_pct.into(), st.gap.into(), st.gap_gold.into()]);
            per.push(st);
        }
        let micro = train_stats(&mine);
        t.push(vec![m.as_str().into(), "overall_micro".into(), micro.n.into(), micro.valid_pct.into(), micro.gap.into(), micro.gap_gold.into()]);
        t.push(vec![
            m.as_str().into(),
            "overall_macro".into(),
            micro.n.into(),
            mean(per.iter().filter_map(|s| s.valid_pct)).into(),
            mean(per.iter().filter_map(|s| s.gap)).into(),
            mean(per.iter().filter_map(|s| s.gap_gold)).into(),
        ]);
    }
    tables.push(t);

    let mut t = Table::new(
        "train_by_theory",
        "Training validity and gap to gold by theory (all scenarios)",
        &["theory", "model", "n", "valid_pct", "gap_gold"],
    );
    for th in &theories {
        for m in &models {
            let st = train_stats(&filter(&of_model(&all, m), |r| r.theory == *th));
            t.push(vec![th.short_id().into(), m.as_str().into(), st.n.into(), st.valid_pct.into(), st.gap_gold.into()]);
        }
    }
    tables.push(t);

    let holdout_cols = ["t_val_pct", "h_val_pct", "t_gap", "h_gap", "delta_gap", "survivors", "mean_ast"];
    let holdout_row = |st: &HoldoutStats| -> Vec<Cell> {
        vec![
            st.train_valid_pct.into(),
            st.holdout_valid_pct.into(),
            st.train_gap.into(),
            st.holdout_gap.into(),
            st.delta_gap.into(),
            st.survivors.into(),
            st.mean_ast.into(),
        ]
    };
    let mut t = Table::new(
        "holdout_summary",
        "Train vs holdout (each gap over its own valid subset; delta over survivors)",
        &[&["model"][..], &holdout_cols].concat(),
    );
    for m in &models {
        let mut row: Vec<Cell> = vec![m.as_str().into()];
        row.extend(holdout_row(&holdout_stats(&of_model(&all, m))));
        t.push(row);
    }
    tables.push(t);

    let mut t = Table::new(
        "holdout_conditional",
        "Holdout validity conditional on train validity",
        &["model", "t_val", "t_plus_h", "h_given_t", "h_pct_given_t"],
    );
    for m in &models {
        let c = conditional_stats(&of_model(&all, m));
        t.push(vec![
            m.as_str().into(),
            c.train_valid.into(),
            c.train_valid_with_holdout.into(),
            c.holdout_given_train.into(),
            c.pct.into(),
        ]);
    }
    tables.push(t);

    let mut t = Table::new(
        "holdout_by_scenario",
        "Holdout generalization by scenario",
        &[&["scenario", "model"][..], &holdout_cols].concat(),
    );
    for s in &scenarios {
        for m in &models {
            let mut row: Vec<Cell> = vec![s.name().into(), m.as_str().into()];
            row.extend(holdout_row(&holdout_stats(&filter(&of_model(&all, m), |r| r.scenario == *s))));
            t.push(row);
        }
    }
    tables.push(t);

    let mut t = Table::new(
        "holdout_by_theory",
        "Survivor delta gap by theory",
        &["theory", "model", "survivors", "delta_gap"],
    );
    for th in &theories {
        for m in &models {
            let g = generalization_stats(&filter(&of_model(&all, m), |r| r.theory == *th));
            t.push(vec![th.short_id().into(), m.as_str().into(), g.survivors.into(), g.delta_gap.into()]);
        }
    }
    tables.push(t);

    let mut t = Table::new(
        "complexity_bins",
        "Holdout validity given train validity and survivor delta gap by formula AST",
        &["scenario", "model", "bin", "n", "valid_pct", "survivors", "delta_gap"],
    );
    for s in &scenarios {
        for m in &models {
            let sub = filter(&of_model(&all, m), |r| r.scenario == *s);
            for (b, g) in AST_BINS.iter().zip(ast_bin_stats(&sub)) {
                t.push(vec![
                    s.name().into(),
                    m.as_str().into(),
                    bin_label(*b).into(),
                    g.n.into(),
                    g.valid_pct.into(),
                    g.survivors.into(),
                    g.delta_gap.into(),
                ]);
            }
        }
    }
    tables.push(t);

    let mut t = Table::new(
        "paired_shorter_longer",
        "Shorter vs longer than gold on paired problems (macro-averaged per problem)",
        &["scenario", "problems", "shorter_n", "shorter_valid_pct", "shorter_delta_gap", "longer_n", "longer_valid_pct", "longer_delta_gap"],
    );
    let paired_row = |label: &str, p: PairedStats| -> Vec<Cell> {
        vec![
            label.into(),
            p.problems.into(),
            p.shorter.records.into(),
            p.shorter.valid_pct.into(),
            p.shorter.delta_gap.into(),
            p.longer.records.into(),
            p.longer.valid_pct.into(),
            p.longer.delta_gap.into(),
        ]
    };
    for s in &scenarios {
        t.push(paired_row(s.name(), paired_stats(&filter(&all, |r| r.scenario == *s))));
    }
    t.push(paired_row("overall", paired_stats(&all)));
    tables.push(t);

    let mut t = Table::new(
        "beats_gold",
        "Gold-beating predictions (train cost strictly below gold)",
        &["scenario", "model", "train_valid", "beaters", "rate_pct", "mean_improvement", "mean_ast"],
    );
    let scen_labels: Vec<(String, Option<Regime>)> =
        scenarios.iter().map(|s| (s.name().to_string(), Some(*s))).chain([(ALL.to_string(), None)]).collect();
    for (label, s) in &scen_labels {
        for m in &models {
            let b = beats_gold_stats(&filter(&of_model(&all, m), |r| s.is_none_or(|s| r.scenario == s)));
            t.push(vec![
                label.as_str().into(),
                m.as_str().into(),
                b.train_valid.into(),
                b.beaters.into(),
                b.rate_pct.into(),
                b.mean_improvement.into(),
                b.mean_ast.into(),
            ]);
        }
    }
    tables.push(t);

    let mut t = Table::new(
        "beats_gold_by_theory",
        "Gold-beating rate by theory (all models)",
        &["theory", "scenario", "train_valid", "beaters", "rate_pct"],
    );
    for th in &theories {
        for s in &scenarios {
            let b = beats_gold_stats(&filter(&all, |r| r.theory == *th && r.scenario == *s));
            if b.train_valid > 0 || records.iter().any(|r| r.theory == *th && r.scenario == *s) {
                t.push(vec![th.short_id().into(), s.name().into(), b.train_valid.into(), b.beaters.into(), b.rate_pct.into()]);
            }
        }
    }
    tables.push(t);

    let mut t = Table::new(
        "beats_gold_by_gold_ast",
        "Gold-beating rate by gold AST size (all models)",
        &["gold_ast", "scenario", "train_valid", "beaters", "rate_pct"],
    );
    for b in GOLD_AST_BINS {
        for s in &scenarios {
            let st = beats_gold_stats(&filter(&all, |r| r.scenario == *s && in_bin(r.gold_ast_size, b)));
            t.push(vec![bin_label(b).into(), s.name().into(), st.train_valid.into(), st.beaters.into(), st.rate_pct.into()]);
        }
    }
    tables.push(t);

    let mut t = Table::new(
        "gap_distribution",
        "Normalized train gap distribution over train-valid records",
        &["scenario", "model", "n", "mean", "median", "p90", "max", "over3_pct", "over5_pct"],
    );
    for s in &scenarios {
        for m in &models {
            let g = gap_distribution(&filter(&of_model(&all, m), |r| r.scenario == *s));
            t.push(vec![
                s.name().into(),
                m.as_str().into(),
                g.n.into(),
                g.mean.into(),
                g.median.into(),
                g.p90.into(),
                g.max.into(),
                g.over3_pct.into(),
                g.over5_pct.into(),
            ]);
        }
    }
    tables.push(t);

    let mut t = Table::new(
        "failure_modes",
        "Failure classes (first match)",
        &["scenario", "model", "parse_error", "all_invalid_train", "partial_invalid_train", "brittle", "catastrophic", "parsimony_inflation", "success"],
    );
    for (label, s) in &scen_labels {
        for m in &models {
            let c = failure_counts(&filter(&of_model(&all, m), |r| s.is_none_or(|s| r.scenario == s)));
            t.push(vec![
                label.as_str().into(),
                m.as_str().into(),
                c.parse_error.into(),
                c.all_invalid_train.into(),
                c.partial_invalid_train.into(),
                c.brittle.into(),
                c.catastrophic.into(),
                c.parsimony_inflation.into(),
                c.success.into(),
            ]);
        }
    }
    tables.push(t);

    let mut t = Table::new(
        "failure_breakdown",
        "Valid, invalid, unparseable and missing predictions",
        &["model", "expected", "valid_pct", "invalid_pct", "parse_pct", "missing_pct"],
    );
    for m in &models {
        let mine = of_model(&all, m);
        let missing = if m == ALL {
            models
                .iter()
                .filter(|x| x.as_str() != ALL)
                .map(|x| missing_count(&of_model(&all, x), instances))
                .sum()
        } else {
            missing_count(&mine, instances)
        };
        let expected = mine.len() + missing;
        let valid = mine.iter().filter(|r| r.train_valid).count();
        let parse = mine.iter().filter(|r| !r.parse_ok).count();
        t.push(vec![
            m.as_str().into(),
            expected.into(),
            pct(valid, expected).into(),
            pct(mine.len() - valid - parse, expected).into(),
            pct(parse, expected).into(),
            pct(missing, expected).into(),
        ]);
    }
    tables.push(t);

    let mut t = Table::new("brittle_patterns", "Brittle formulas by syntactic pattern", &["pattern", "scenario", "count"]);
    for s in &scenarios {
        for (p, k) in brittle_patterns(&filter(&all, |r| r.scenario == *s)) {
            t.push(vec![p.name().into(), s.name().into(), k.into()]);
        }
    }
    tables.push(t);

    Ok(Report { tables })
}

/// Instances with no record among `recs` (which belong to one model).
fn missing_count(recs: &[&ScoreRecord], instances: &[InstanceRecord]) -> usize {
    let seen: BTreeSet<&str> = recs.iter().map(|r| r.instance_id.as_str()).collect();
    instances.iter().filter(|i| !seen.contains(i.id.as_str())).count()
}
