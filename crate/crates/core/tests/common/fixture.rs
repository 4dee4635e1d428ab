//! Hand-built scoring fixture: two Full instances of T1 over the same
//! worlds and eleven predictions covering every failure class.
//!
//! Every element has an R self-loop and Q is empty, so the violators of
//! T1 are exactly the P elements {a0, a1}. S atoms act as markers.
//!
//! Training (n = 4): W0 has S on (0,0) (1,1) (0,2) (1,2) (0,1) (1,0);
//! W1 has S on (0,0) (1,1) (0,2) (1,2).
//! Holdouts (n = 8): H0 has S on (0,0) (1,1) (0,2) (1,2); H1 has S on
//! (0,0) (1,1); H2 has no S.
//!
//! Gold `(or (P x) (exists y (S y x)))` marks {0,1,2} on W0, W1, H0 and
//! {0,1} on H1, H2.

use abd_core::dataset::{GoldRecord, HoldoutStatus, InstanceRecord, Provenance};
use abd_core::engine::Regime;
use abd_core::formula::{formula_metrics, Pred};
use abd_core::parse_formula;
use abd_core::theory::TheoryId;
use abd_core::world::{AtomState, World};

pub const GOLD: &str = "(or (P x) (exists y (S y x)))";

fn world(n: usize, s: &[(usize, usize)]) -> World {
    let mut w = World::new(n).unwrap();
    for i in 0..n {
        w.set(Pred::R, &[i, i], AtomState::True).unwrap();
    }
    w.set(Pred::P, &[0], AtomState::True).unwrap();
    w.set(Pred::P, &[1], AtomState::True).unwrap();
    for &(a, b) in s {
        w.set(Pred::S, &[a, b], AtomState::True).unwrap();
    }
    w
}

pub fn instance(index: usize) -> InstanceRecord {
    let gold = parse_formula(GOLD, false).unwrap();
    let m = formula_metrics(&gold);
    InstanceRecord {
        id: format!("ABD_FULL_T1_{index:04}"),
        scenario: Regime::Full,
        theory: TheoryId::T1,
        theory_internal: "TH2".into(),
        gold: GoldRecord { formula: gold, template: "fixture".into(), ast_size: m.ast_size, quantifier_depth: m.quantifier_depth },
        train_worlds: vec![
            world(4, &[(0, 0), (1, 1), (0, 2), (1, 2), (0, 1), (1, 0)]),
            world(4, &[(0, 0), (1, 1), (0, 2), (1, 2)]),
        ],
        train_gold_cost: vec![3, 3],
        train_opt_cost: vec![2, 2],
        holdout_status: HoldoutStatus::Complete,
        holdout_worlds: vec![world(8, &[(0, 0), (1, 1), (0, 2), (1, 2)]), world(8, &[(0, 0), (1, 1)]), world(8, &[])],
        holdout_gold_cost: vec![3, 2, 2],
        holdout_opt_cost: vec![2, 2, 2],
        provenance: Provenance {
            global_seed: 0,
            instance_index: index,
            attempt: 0,
            instance_seed: 0,
            dataset_path: String::new(),
            holdout_seeds: vec![],
            competitors: vec![],
            cheater_margin: None,
            refined: false,
            excluded_templates: vec![],
        },
    }
}

/// (instance index, model, raw output line, expected class name, catastrophic)
pub fn predictions() -> Vec<(usize, &'static str, String, &'static str, bool)> {
    let line = |f: &str| serde_json::json!({"formula": f, "description": "fixture"}).to_string();
    vec![
        (0, "m1", line("(P x)"), "success", false),
        (0, "m2", line("(exists y (R x y))"), "parsimony_inflation", false),
        (0, "m3", line("(S x x)"), "brittle", false),
        (0, "m4", line("(exists y (and (S x y) (not (= x y))))"), "brittle", true),
        (0, "m5", line("(exists y (and (S x y) (P y) (not (= x y))))"), "partial_invalid_train", false),
        (0, "m6", line("(not (P x))"), "all_invalid_train", false),
        (0, "m7", "The answer is (P x)".to_string(), "parse_error", false),
        (0, "m8", line("(Q x)"), "all_invalid_train", false),
        (1, "m1", line("(P x)"), "success", false),
        (1, "m2", line("(and (P x) (exists y (and (R x y) (P y))))"), "success", false),
        (1, "m3", line("(or (P x) (and (P x) (exists y (exists z (and (R x y) (R y z) (P z))))))"), "success", false),
    ]
}
