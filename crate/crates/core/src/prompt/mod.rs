//! Prompt rendering for model evaluation.
//!
//! The three scenario templates live next to this file as plain text with a
//! single `{{instance}}` slot for the instance block.

use serde::{Deserialize, Serialize};

use crate::dataset::InstanceRecord;
use crate::engine::Regime;
use crate::formula::Pred;
use crate::world::{AtomState, World};

pub const SYSTEM_PROMPT: &str = "You are an expert in first-order logic and abductive reasoning. \n\
Your task is to find concise formulas that explain abnormal behavior in logical systems.\n\
Always output valid JSON with the required fields.";

const FULL: &str = include_str!("full.txt");
const PARTIAL: &str = include_str!("partial.txt");
const SKEPTICAL: &str = include_str!("skeptical.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub id: String,
    pub system_prompt: String,
    pub user_prompt: String,
}

pub fn template(regime: Regime) -> &'static str {
    match regime {
        Regime::Full => FULL,
        Regime::Partial => PARTIAL,
        Regime::Skeptical => SKEPTICAL,
    }
}

pub fn render_prompt(inst: &InstanceRecord) -> PromptBundle {
    PromptBundle {
        id: inst.id.clone(),
        system_prompt: SYSTEM_PROMPT.to_string(),
        user_prompt: template(inst.scenario).replace("{{instance}}", &instance_block(inst)),
    }
}

fn name_list(names: &[&str]) -> String {
    let quoted: Vec<String> = names.iter().map(|n| format!("\"{n}\"")).collect();
    format!("[{}]", quoted.join(", "))
}

fn instance_block(inst: &InstanceRecord) -> String {
    let theory = inst.theory_spec();
    let mut out = String::from("\n");
    out += &format!("**AllowedAlphaPredicates**: {}\n", name_list(&theory.scope.allowed_names()));
    out += &format!("**ForbiddenAlphaPredicates**: {}\n\n", name_list(&theory.scope.forbidden_names()));
    out += &format!("**Theory ID**: {}\n", theory.internal_id);
    if inst.scenario == Regime::Skeptical {
        out += &format!("**Description**: {}\n", theory.description);
    }
    out += &format!("\n**Axioms**:\n1. `{}`\n\n## Training Worlds\n\n", theory.axiom.render());
    let worlds: Vec<String> = inst
        .train_worlds
        .iter()
        .enumerate()
        .map(|(i, w)| format!("### World W{i}\n{}", render_world(w, inst.scenario)))
        .collect();
    out += &worlds.join("\n");
    out
}

fn atom_set(w: &World, pred: Pred, state: AtomState) -> String {
    let items: Vec<String> = w
        .atoms_with(pred, state)
        .iter()
        .map(|a| match pred.arity() {
            1 => format!("a{}", a.args.0),
            _ => format!("(a{}, a{})", a.args.0, a.args.1),
        })
        .collect();
    format!("{{{}}}", items.join(", "))
}

/// One world in list style: domain, true atoms per predicate and, outside
/// the closed-world regime, the unknown atoms of each predicate that has any.
pub fn render_world(w: &World, regime: Regime) -> String {
    let domain: Vec<String> = (0..w.domain_size()).map(|i| format!("a{i}")).collect();
    let mut out = format!("Domain: {{{}}}\n\n", domain.join(", "));
    out += match regime {
        Regime::Full => "**Predicates** (Closed World Assumption: unlisted atoms are false):\n",
        _ => "**Known Facts** (unlisted atoms that are not Unknown are known FALSE):\n",
    };
    for p in Pred::OBSERVED {
        out += &format!("- {}: {}\n", p.name(), atom_set(w, p, AtomState::True));
    }
    if regime != Regime::Full {
        out += "\n**Unknown Atoms** (truth value not observed, can be completed either way):\n";
        for p in Pred::OBSERVED {
            if !w.atoms_with(p, AtomState::Unknown).is_empty() {
                out += &format!("- {}: {}\n", p.name(), atom_set(w, p, AtomState::Unknown));
            }
        }
    }
    out
}
