//! Browser bindings. Every export takes and returns plain strings (JSON for
//! structured results) so the same functions run natively in tests.

use abd_core::engine::{world_assess, world_opt_cost, OptVariant};
use abd_core::formula::{formula_metrics, parse_formula, validate_hypothesis};
use abd_core::generator::{densities, domain_range, unknown_rates};
use abd_core::prompt::render_world;
use abd_core::theory::{builtin_theory, TheoryId};
use abd_core::world::{sample_world as draw_world, World};
use abd_core::Regime;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn error(msg: impl ToString) -> String {
    json!({ "ok": false, "error": msg.to_string() }).to_string()
}

fn setup(scenario: &str, theory: &str) -> Result<(Regime, TheoryId), String> {
    let regime: Regime = scenario.parse().map_err(|e: abd_core::engine::UnknownRegime| e.to_string())?;
    let id: TheoryId = theory.parse().map_err(|e: abd_core::theory::TheoryError| e.to_string())?;
    if !TheoryId::for_regime(regime).contains(&id) {
        return Err(format!("{id} is not used under {regime}"));
    }
    Ok((regime, id))
}

#[derive(Serialize)]
struct FormulaInfo {
    ok: bool,
    canonical: String,
    ast_size: usize,
    quantifier_depth: usize,
}

/// Parse a formula and report its canonical form, AST size and quantifier
/// depth.
#[wasm_bindgen]
pub fn formula_info(text: &str) -> String {
    match parse_formula(text, true) {
        Ok(f) => {
            let m = formula_metrics(&f);
            serde_json::to_string(&FormulaInfo {
                ok: true,
                canonical: f.render(),
                ast_size: m.ast_size,
                quantifier_depth: m.quantifier_depth,
            })
            .expect("serializable")
        }
        Err(e) => error(e),
    }
}

/// Draw one world from the scenario's sampler for `theory`. The result holds
/// the world itself (to pass back to `evaluate_hypothesis`), its text
/// rendering, the theory axiom and the allowed predicates.
#[wasm_bindgen]
pub fn sample_world(scenario: &str, theory: &str, seed: u64) -> String {
    let (regime, id) = match setup(scenario, theory) {
        Ok(x) => x,
        Err(e) => return error(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match draw_world(domain_range(regime), &densities(regime), &unknown_rates(regime, id), &mut rng) {
        Ok(w) => {
            let spec = builtin_theory(id);
            json!({
                "ok": true,
                "world": w,
                "text": render_world(&w, regime),
                "axiom": spec.axiom.render(),
                "allowed": spec.scope.allowed_names(),
                "opt_cost": world_opt_cost(regime, &spec, &w, OptVariant::Pointwise),
            })
            .to_string()
        }
        Err(e) => error(e),
    }
}

/// Validity and cost of `formula` as the abnormality rule on `world_json`
/// (a world as returned by `sample_world`).
#[wasm_bindgen]
pub fn evaluate_hypothesis(scenario: &str, theory: &str, world_json: &str, formula: &str) -> String {
    let (regime, id) = match setup(scenario, theory) {
        Ok(x) => x,
        Err(e) => return error(e),
    };
    let w: World = match serde_json::from_str(world_json) {
        Ok(w) => w,
        Err(e) => return error(format!("world: {e}")),
    };
    let spec = builtin_theory(id);
    let f = match parse_formula(formula, true) {
        Ok(f) => f,
        Err(e) => return error(e),
    };
    let h = match validate_hypothesis(&f, &spec.scope) {
        Ok(h) => h,
        Err(e) => return error(e),
    };
    let cost = world_assess(regime, &spec, &w, &h);
    let opt = world_opt_cost(regime, &spec, &w, OptVariant::Pointwise);
    json!({
        "ok": true,
        "valid": cost.is_some(),
        "cost": cost,
        "opt_cost": opt,
        "gap": cost.map(|c| c as i64 - opt as i64),
    })
    .to_string()
}
