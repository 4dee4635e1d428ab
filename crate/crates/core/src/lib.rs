//! Default-exception abduction over finite relational worlds.
//!
//! A theory states a default `forall x (ante(x) and not Ab(x) -> cons(x))`.
//! Given worlds where the default fails for some elements, a hypothesis
//! `alpha(x)` defines `Ab` and must repair the theory while marking as few
//! elements abnormal as possible.

pub mod dataset;
pub mod engine;
pub mod formula;
pub mod generator;
pub mod prompt;
pub mod scoring;
pub mod theory;
pub mod world;

pub use engine::Regime;
pub use formula::{parse_formula, render_formula, Formula};
pub use theory::{builtin_theory, TheoryId, TheorySpec};
pub use world::World;
