//! Instance records and the line-delimited dataset file format.
//!
//! A dataset file is one header object followed by one instance per line.
//! Serialization is canonical: loading and re-saving a file reproduces it
//! byte for byte.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Regime;
use crate::formula::{formula_metrics, validate_hypothesis, Formula, Hypothesis};
use crate::generator::pool::Tier;
use crate::generator::FilterSettings;
use crate::theory::{builtin_theory, TheoryId, TheorySpec};
use crate::world::World;

pub const FORMAT: &str = "abd-dataset";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub scenario: Regime,
    pub params_digest: String,
    #[serde(default)]
    pub filters: FilterSettings,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub formula: Formula,
    pub template: String,
    pub ast_size: usize,
    pub quantifier_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoldoutStatus {
    Complete,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompetitorRecord {
    pub formula: Formula,
    pub tier: Tier,
    /// Number of training worlds present when the competitor stopped
    /// surviving for good (invalid), or `None` if it was only beaten on cost.
    pub invalid_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub global_seed: u64,
    pub instance_index: usize,
    pub attempt: usize,
    pub instance_seed: u64,
    pub dataset_path: String,
    pub holdout_seeds: Vec<u32>,
    pub competitors: Vec<CompetitorRecord>,
    /// Best valid cheater cost minus gold cost, if any cheater was valid.
    pub cheater_margin: Option<i64>,
    pub refined: bool,
    /// Templates that had reached the batch diversity cap when this instance
    /// was reassigned.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded_templates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub scenario: Regime,
    pub theory: TheoryId,
    pub theory_internal: String,
    pub gold: GoldRecord,
    pub train_worlds: Vec<World>,
    pub train_gold_cost: Vec<usize>,
    pub train_opt_cost: Vec<usize>,
    pub holdout_status: HoldoutStatus,
    pub holdout_worlds: Vec<World>,
    pub holdout_gold_cost: Vec<usize>,
    pub holdout_opt_cost: Vec<usize>,
    pub provenance: Provenance,
}

impl InstanceRecord {
    pub fn theory_spec(&self) -> TheorySpec {
        builtin_theory(self.theory)
    }

    pub fn gold_hypothesis(&self) -> Result<Hypothesis, DatasetError> {
        validate_hypothesis(&self.gold.formula, &self.theory_spec().scope)
            .map_err(|e| DatasetError::Invalid(format!("{}: gold out of scope: {e}", self.id)))
    }

    pub fn has_holdouts(&self) -> bool {
        self.holdout_status == HoldoutStatus::Complete && !self.holdout_worlds.is_empty()
    }

    /// Shape checks that need no engine calls.
    pub fn check_shape(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Invalid(format!("{}: {m}", self.id)));
        let n = self.train_worlds.len();
        if n == 0 {
            return bad("no training worlds".into());
        }
        if self.train_gold_cost.len() != n || self.train_opt_cost.len() != n {
            return bad("cached training costs do not match world count".into());
        }
        let k = self.holdout_worlds.len();
        if self.holdout_gold_cost.len() != k || self.holdout_opt_cost.len() != k {
            return bad("cached holdout costs do not match world count".into());
        }
        if (self.holdout_status == HoldoutStatus::Unavailable) != (k == 0) {
            return bad("holdout status disagrees with holdout worlds".into());
        }
        if self.theory_internal != self.theory.internal_id() {
            return bad(format!("internal id {} does not match {}", self.theory_internal, self.theory));
        }
        let m = formula_metrics(&self.gold.formula);
        if m.ast_size != self.gold.ast_size || m.quantifier_depth != self.gold.quantifier_depth {
            return bad("gold metrics do not match gold formula".into());
        }
        self.gold_hypothesis()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("missing or malformed header")]
    Header,
    #[error("invalid instance {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub instances: Vec<InstanceRecord>,
}

/// The JSONL text `write` produces.
impl std::fmt::Display for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut buf = Vec::new();
        self.write(&mut buf).map_err(|_| std::fmt::Error)?;
        f.write_str(std::str::from_utf8(&buf).map_err(|_| std::fmt::Error)?)
    }
}

impl Dataset {
    pub fn new(scenario: Regime, params_digest: String, instances: Vec<InstanceRecord>) -> Self {
        Dataset {
            header: DatasetHeader {
                format: FORMAT.into(),
                version: VERSION,
                scenario,
                params_digest,
                filters: FilterSettings::default(),
            },
            instances,
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<(), DatasetError> {
        serde_json::to_writer(&mut out, &self.header).map_err(|e| DatasetError::Json { line: 1, source: e })?;
        out.write_all(b"\n")?;
        for (i, inst) in self.instances.iter().enumerate() {
            serde_json::to_writer(&mut out, inst).map_err(|e| DatasetError::Json { line: i + 2, source: e })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Parse a dataset and run the shape checks on every instance.
    pub fn read<R: BufRead>(input: R) -> Result<Dataset, DatasetError> {
        let mut lines = input.lines().enumerate();
        let header: DatasetHeader = match lines.next() {
            Some((_, line)) => serde_json::from_str(&line?).map_err(|_| DatasetError::Header)?,
            None => return Err(DatasetError::Header),
        };
        if header.format != FORMAT || header.version != VERSION {
            return Err(DatasetError::Header);
        }
        let mut instances = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let inst: InstanceRecord =
                serde_json::from_str(&line).map_err(|e| DatasetError::Json { line: i + 1, source: e })?;
            inst.check_shape()?;
            instances.push(inst);
        }
        Ok(Dataset { header, instances })
    }

    pub fn load(path: &std::path::Path) -> Result<Dataset, DatasetError> {
        let f = std::fs::File::open(path)?;
        Dataset::read(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), DatasetError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn find(&self, id: &str) -> Option<&InstanceRecord> {
        self.instances.iter().find(|i| i.id == id)
    }
}
