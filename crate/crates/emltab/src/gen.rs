//! Seeded random formula generation and named formula families.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{self, AtomId, Coalition, Formula, Symbols};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Weights {
    pub atom: u32,
    pub not: u32,
    pub and: u32,
    pub dist: u32,
    pub common: u32,
}

impl Default for Weights {
    fn default() -> Weights {
        Weights {
            atom: 2,
            not: 2,
            and: 3,
            dist: 2,
            common: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenParams {
    pub max_depth: u32,
    pub agents: Vec<String>,
    pub atoms: Vec<String>,
    pub weights: Weights,
    pub seed: u64,
}

impl GenParams {
    pub fn new(max_depth: u32, agents: &[&str], atoms: &[&str], seed: u64) -> GenParams {
        GenParams {
            max_depth,
            agents: agents.iter().map(|s| s.to_string()).collect(),
            atoms: atoms.iter().map(|s| s.to_string()).collect(),
            weights: Weights::default(),
            seed,
        }
    }
}

/// Deterministic formula stream: the same parameters and seed produce the
/// same sequence.
pub struct FormulaGen {
    params: GenParams,
    rng: ChaCha8Rng,
    pub symbols: Symbols,
    atom_ids: Vec<AtomId>,
    coalition_pool: Vec<Coalition>,
}

impl FormulaGen {
    pub fn new(params: GenParams) -> FormulaGen {
        assert!(!params.agents.is_empty() && !params.atoms.is_empty());
        let mut symbols = Symbols::new();
        let mut agent_ids = Vec::new();
        for a in &params.agents {
            agent_ids.push(symbols.agent_id(a).expect("agent cap"));
        }
        let atom_ids = params.atoms.iter().map(|a| symbols.atom_id(a)).collect();
        let mut coalition_pool = Vec::new();
        for mask in 1u32..(1u32 << agent_ids.len()) {
            let members = agent_ids
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1u32 << i) != 0)
                .map(|(_, &a)| a);
            coalition_pool.push(Coalition::from_agents(members).expect("non-empty"));
        }
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        FormulaGen {
            params,
            rng,
            symbols,
            atom_ids,
            coalition_pool,
        }
    }

    pub fn next_formula(&mut self) -> Arc<Formula> {
        self.gen_at(self.params.max_depth)
    }

    fn gen_at(&mut self, depth: u32) -> Arc<Formula> {
        let atom = self.atom_ids[self.rng.gen_range(0..self.atom_ids.len())];
        if depth == 0 {
            return if self.rng.gen_bool(0.5) {
                formula::atom(atom)
            } else {
                formula::not(formula::atom(atom))
            };
        }
        let w = self.params.weights;
        let total = w.atom + w.not + w.and + w.dist + w.common;
        let mut pick = self.rng.gen_range(0..total);
        if pick < w.atom {
            return formula::atom(atom);
        }
        pick -= w.atom;
        if pick < w.not {
            return formula::not(self.gen_at(depth - 1));
        }
        pick -= w.not;
        if pick < w.and {
            let l = self.gen_at(depth - 1);
            let r = self.gen_at(depth - 1);
            return formula::and(l, r);
        }
        pick -= w.and;
        let coalition = self.coalition_pool[self.rng.gen_range(0..self.coalition_pool.len())];
        if pick < w.dist {
            formula::dist(coalition, self.gen_at(depth - 1))
        } else {
            formula::common(coalition, self.gen_at(depth - 1))
        }
    }
}

/// The negated fixpoint equivalence of common knowledge,
/// `~(C{A}f <-> f & D{a1}C{A}f & ... & D{ak}C{A}f)`, desugared. Each
/// instance is unsatisfiable because the equivalence is valid.
pub fn fixpoint_family(coalition: Coalition, f: Arc<Formula>) -> Arc<Formula> {
    let ck = formula::common(coalition, f.clone());
    let mut rhs = f;
    for a in coalition.agents() {
        rhs = formula::and(rhs, formula::dist(Coalition::singleton(a), ck.clone()));
    }
    formula::not(formula::iff(ck, rhs))
}
