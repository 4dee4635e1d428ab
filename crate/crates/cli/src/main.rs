use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abd_core::dataset::{Dataset, InstanceRecord};
use abd_core::engine::{world_opt_cost, OptVariant};
use abd_core::generator::audit::audit_instance;
use abd_core::generator::{generate_batch, GenParams};
use abd_core::prompt::render_prompt;
use abd_core::scoring::{aggregate_report, oracle_diff, score_line, score_prediction, ClassifyConfig, Prediction, ScoreRecord};
use abd_core::theory::TheoryId;
use abd_core::Regime;
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "abd", version, about = "Abnormality-rule abduction benchmark tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instances with holdouts; writes the dataset and a `.log.jsonl` sidecar.
    Generate {
        #[arg(long)]
        scenario: Regime,
        /// Theory ids (T1..T7); all theories of the scenario when omitted.
        #[arg(long = "theory", value_delimiter = ',')]
        theories: Vec<TheoryId>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances per theory.
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        world_budget: Option<usize>,
        #[arg(long)]
        margin: Option<usize>,
        #[arg(long)]
        holdouts: Option<usize>,
        /// Run the gold refinement pass.
        #[arg(long)]
        refine: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check every generation filter on a dataset.
    Verify {
        #[arg(long)]
        dataset: PathBuf,
        /// Also compare gold costs and OptCost against the brute-force oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Per-world free-Ab optimum against the gold cost.
    Optcost {
        #[arg(long)]
        dataset: PathBuf,
        /// Skeptical only: also report the uniform-Ab optimum.
        #[arg(long)]
        uniform: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score prediction files (JSONL with instance_id, model_id, output).
    Score {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long = "predictions", required = true)]
        predictions: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 2.0)]
        inflation_threshold: f64,
        #[arg(long, default_value_t = 0.5)]
        catastrophic_fraction: f64,
    },
    /// Aggregate score records into tables.
    Report {
        #[arg(long = "scores", required = true)]
        scores: Vec<PathBuf>,
        /// Datasets the scores refer to; used to count missing predictions.
        #[arg(long = "dataset")]
        datasets: Vec<PathBuf>,
        /// JSON output with the rows of every table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render system and user prompts for every instance.
    Prompt {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// One line of a predictions file: the model's raw output for an instance.
#[derive(Debug, Serialize, Deserialize)]
struct PredictionLine {
    instance_id: String,
    model_id: String,
    output: String,
}

type Result<T> = std::result::Result<T, String>;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(errors) => {
            eprintln!("{errors} error(s)");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for it in items {
        let line = serde_json::to_string(it).map_err(|e| e.to_string())?;
        writeln!(w, "{line}").map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn load(path: &Path) -> Result<Dataset> {
    Dataset::load(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn log_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".log.jsonl");
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<usize> {
    match cli.command {
        Command::Generate { scenario, theories, seed, count, world_budget, margin, holdouts, refine, out } => {
            let theories = if theories.is_empty() { TheoryId::for_regime(scenario).to_vec() } else { theories };
            let mut p = GenParams::new(scenario, theories[0], seed);
            if let Some(b) = world_budget {
                p.world_budget = b;
                p.seed_worlds = p.seed_worlds.min(b);
            }
            if let Some(m) = margin {
                p.margin = m;
            }
            if let Some(h) = holdouts {
                p.holdout_count = h;
            }
            p.refine_gold = refine;
            p.dataset_path = out.display().to_string();
            for t in &theories {
                let mut q = p.clone();
                q.theory = abd_core::theory::builtin_theory(*t);
                q.validate().map_err(|e| format!("{t}: {e}"))?;
            }
            let batch = generate_batch(&p, &theories, count);
            batch.dataset.save(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            write_jsonl(&log_path(&out), &batch.logs)?;
            for f in &batch.failures {
                eprintln!("{f}");
            }
            let with_holdouts = batch.dataset.instances.iter().filter(|i| i.has_holdouts()).count();
            println!(
                "{} instances ({} with holdouts), {} failures -> {}",
                batch.dataset.instances.len(),
                with_holdouts,
                batch.failures.len(),
                out.display()
            );
            Ok(batch.failures.len())
        }
        Command::Verify { dataset, oracle } => {
            let ds = load(&dataset)?;
            let filters = ds.header.filters;
            let results: Vec<(Vec<String>, usize)> = ds
                .instances
                .par_iter()
                .map(|inst| {
                    let mut errs: Vec<String> = audit_instance(inst, &filters)
                        .into_iter()
                        .map(|v| format!("{}: {}: {}", v.id, v.check, v.detail))
                        .collect();
                    let mut skipped = 0;
                    if oracle {
                        let (mism, s) = gold_oracle(inst);
                        errs.extend(mism);
                        skipped = s;
                    }
                    (errs, skipped)
                })
                .collect();
            let errors: Vec<&String> = results.iter().flat_map(|(e, _)| e).collect();
            for e in &errors {
                println!("{e}");
            }
            let skipped: usize = results.iter().map(|(_, s)| s).sum();
            println!("{} instances, {} violations", ds.instances.len(), errors.len());
            if oracle {
                println!("oracle: {skipped} world checks skipped as too large");
            }
            Ok(errors.len())
        }
        Command::Optcost { dataset, uniform, out } => {
            let ds = load(&dataset)?;
            let rows: Vec<serde_json::Value> = ds.instances.par_iter().map(|i| optcost_row(i, uniform)).collect();
            println!("{:<22} {:>5} {:>8} {:>8} {:>8}", "id", "worlds", "opt", "gold", "gap/w");
            for r in &rows {
                println!(
                    "{:<22} {:>5} {:>8} {:>8} {:>8.2}",
                    r["id"].as_str().unwrap_or(""),
                    r["worlds"],
                    r["opt_total"],
                    r["gold_total"],
                    r["gold_gap_per_world"].as_f64().unwrap_or(f64::NAN)
                );
            }
            if let Some(path) = out {
                write_jsonl(&path, &rows)?;
            }
            Ok(0)
        }
        Command::Score { dataset, predictions, out, oracle, inflation_threshold, catastrophic_fraction } => {
            let ds = load(&dataset)?;
            let cfg = ClassifyConfig { inflation_threshold, catastrophic_fraction };
            let mut lines: Vec<PredictionLine> = Vec::new();
            for p in &predictions {
                lines.extend(read_jsonl::<PredictionLine>(p)?);
            }
            let mut errors = 0;
            let scored: Vec<std::result::Result<(ScoreRecord, Vec<String>), String>> = lines
                .par_iter()
                .map(|l| {
                    let inst = ds.find(&l.instance_id).ok_or_else(|| format!("unknown instance {}", l.instance_id))?;
                    let rec = score_line(&l.output, &l.model_id, inst, &cfg);
                    let mism = if oracle {
                        oracle_diff(&rec, inst).0.into_iter().map(|m| format!("{}: {}", m.instance_id, m.detail)).collect()
                    } else {
                        Vec::new()
                    };
                    Ok((rec, mism))
                })
                .collect();
            let mut records = Vec::new();
            for s in scored {
                match s {
                    Ok((r, mism)) => {
                        for m in &mism {
                            eprintln!("oracle mismatch: {m}");
                        }
                        errors += mism.len();
                        records.push(r);
                    }
                    Err(e) => {
                        eprintln!("{e}");
                        errors += 1;
                    }
                }
            }
            write_jsonl(&out, &records)?;
            println!("{} records -> {}", records.len(), out.display());
            Ok(errors)
        }
        Command::Report { scores, datasets, out } => {
            let mut records: Vec<ScoreRecord> = Vec::new();
            for s in &scores {
                records.extend(read_jsonl::<ScoreRecord>(s)?);
            }
            let mut instances: Vec<InstanceRecord> = Vec::new();
            for d in &datasets {
                instances.extend(load(d)?.instances);
            }
            let report = aggregate_report(&records, &instances).map_err(|e| e.to_string())?;
            print!("{}", report.render());
            if let Some(path) = out {
                let obj: serde_json::Map<String, serde_json::Value> =
                    report.tables.iter().map(|t| (t.name.clone(), serde_json::Value::Array(t.json_rows()))).collect();
                let mut w = create(&path)?;
                serde_json::to_writer_pretty(&mut w, &obj).map_err(|e| e.to_string())?;
                writeln!(w).map_err(|e| e.to_string())?;
            }
            Ok(0)
        }
        Command::Prompt { dataset, out } => {
            let ds = load(&dataset)?;
            let bundles: Vec<_> = ds.instances.iter().map(render_prompt).collect();
            write_jsonl(&out, &bundles)?;
            println!("{} prompts -> {}", bundles.len(), out.display());
            Ok(0)
        }
    }
}

/// Score the gold formula as a prediction and diff it against the oracle.
fn gold_oracle(inst: &InstanceRecord) -> (Vec<String>, usize) {
    let p = Prediction {
        instance_id: inst.id.clone(),
        model_id: "gold".into(),
        formula_text: inst.gold.formula.render(),
        description: String::new(),
    };
    let rec = score_prediction(&p, inst, &ClassifyConfig::default());
    let (mism, skipped) = oracle_diff(&rec, inst);
    let mut out: Vec<String> = mism.into_iter().map(|m| format!("{}: oracle: {}", m.instance_id, m.detail)).collect();
    if rec.train_cost != Some(inst.train_gold_cost.iter().sum()) {
        out.push(format!("{}: oracle: gold train cost {:?}", inst.id, rec.train_cost));
    }
    (out, skipped)
}

fn optcost_row(inst: &InstanceRecord, uniform: bool) -> serde_json::Value {
    let theory = inst.theory_spec();
    let opt: Vec<usize> =
        inst.train_worlds.iter().map(|w| world_opt_cost(inst.scenario, &theory, w, OptVariant::Pointwise)).collect();
    let opt_total: usize = opt.iter().sum();
    let gold_total: usize = inst.train_gold_cost.iter().sum();
    let mut row = serde_json::json!({
        "id": inst.id,
        "theory": inst.theory,
        "worlds": inst.train_worlds.len(),
        "opt_per_world": opt,
        "opt_total": opt_total,
        "gold_per_world": inst.train_gold_cost,
        "gold_total": gold_total,
        "gold_gap_per_world": (gold_total as f64 - opt_total as f64) / inst.train_worlds.len() as f64,
    });
    if uniform && inst.scenario == Regime::Skeptical {
        let u: Vec<usize> =
            inst.train_worlds.iter().map(|w| world_opt_cost(inst.scenario, &theory, w, OptVariant::Uniform)).collect();
        row["uniform_opt_per_world"] = serde_json::json!(u);
    }
    row
}
