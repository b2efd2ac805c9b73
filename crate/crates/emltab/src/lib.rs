//! Tableau-based satisfiability solver for a multi-agent epistemic logic
//! with common and distributed knowledge over arbitrary coalitions.
//!
//! The pipeline: parse a formula set, compute its extended closure, build
//! the pretableau (cut-saturated expansions plus diamond successors),
//! eliminate prestates, eliminate states that miss successors or leave an
//! eventuality unrealized, and read the verdict off the final graph. On a
//! sat verdict the final tableau yields a Hintikka structure and from it a
//! finite pseudo-model witnessing the input.

pub mod bench;
pub mod closure;
pub mod expansion;
pub mod formula;
pub mod gen;
pub mod parse;
pub mod semantics;
pub mod tableau;

pub use closure::{ClosureIndex, LabelSet};
pub use expansion::{cs_expansions, cut_targets, full_expansions, CutMode};
pub use formula::{Coalition, Formula, Symbols};
pub use parse::{parse, parse_set, ParseError};
pub use semantics::{
    brute_force_sat, check, hintikka_from_model, hintikka_from_tableau, parse_model,
    pseudo_model_from_hintikka, render_model, verify_hintikka, HintikkaStructure,
    KripkeStructure,
};
pub use tableau::{decide, Solved, Verdict};
