//! Finite Kripke structures for the logic, model checking, Hintikka
//! structures and their verification, pseudo-model extraction, and a
//! brute-force small-model search used as an independent oracle.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::closure::{negative, positive, ClosureIndex, LabelSet};
use crate::formula::{AgentId, Coalition, Formula, Symbols};
use crate::tableau::{Solved, Verdict};

/// Square boolean matrix with bit-packed rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMat {
    n: usize,
    wpr: usize,
    bits: Vec<u64>,
}

impl BitMat {
    pub fn new(n: usize) -> BitMat {
        let wpr = n.div_ceil(64).max(1);
        BitMat {
            n,
            wpr,
            bits: vec![0; n * wpr],
        }
    }

    pub fn identity(n: usize) -> BitMat {
        let mut m = BitMat::new(n);
        for i in 0..n {
            m.set(i, i);
        }
        m
    }

    pub fn full(n: usize) -> BitMat {
        let mut m = BitMat::new(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.wpr + j / 64] & (1u64 << (j % 64)) != 0
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[i * self.wpr + j / 64] |= 1u64 << (j % 64);
    }

    pub fn or_assign(&mut self, other: &BitMat) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn intersect(&self, other: &BitMat) -> BitMat {
        let mut out = self.clone();
        for (a, b) in out.bits.iter_mut().zip(&other.bits) {
            *a &= b;
        }
        out
    }

    pub fn is_subset(&self, other: &BitMat) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.wpr..(i + 1) * self.wpr]
    }

    /// Boolean matrix product.
    fn mul(&self, other: &BitMat) -> BitMat {
        let mut out = BitMat::new(self.n);
        for i in 0..self.n {
            for w in 0..self.wpr {
                let mut word = self.row(i)[w];
                while word != 0 {
                    let j = w * 64 + word.trailing_zeros() as usize;
                    word &= word - 1;
                    let (dst, src) = (i * self.wpr, j * self.wpr);
                    for k in 0..self.wpr {
                        out.bits[dst + k] |= other.bits[src + k];
                    }
                }
            }
        }
        out
    }

    pub fn reflexive_close(&mut self) {
        for i in 0..self.n {
            self.set(i, i);
        }
    }

    pub fn symmetric_close(&mut self) {
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    self.set(j, i);
                }
            }
        }
    }

    /// Transitive closure by iterated squaring.
    pub fn transitive_close(&mut self) {
        loop {
            let step = self.mul(self);
            let before = self.bits.clone();
            self.or_assign(&step);
            if self.bits == before {
                return;
            }
        }
    }

    pub fn equivalence_close(&mut self) {
        self.reflexive_close();
        self.symmetric_close();
        self.transitive_close();
    }

    pub fn is_equivalence(&self) -> bool {
        let mut c = self.clone();
        c.equivalence_close();
        c == *self
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Equivalence classes, each sorted, ordered by least member.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for i in 0..self.n {
            if seen[i] {
                continue;
            }
            let cls: Vec<usize> = (0..self.n).filter(|&j| self.get(i, j)).collect();
            for &j in &cls {
                seen[j] = true;
            }
            out.push(cls);
        }
        out
    }

    fn from_partition(class_of: &[usize]) -> BitMat {
        let n = class_of.len();
        let mut m = BitMat::new(n);
        for i in 0..n {
            for j in 0..n {
                if class_of[i] == class_of[j] {
                    m.set(i, j);
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// Per-agent equivalences; every coalition relation is the intersection
    /// of its members' relations.
    Cmaem,
    /// Explicit coalition equivalences, monotone under coalition inclusion
    /// only: larger coalitions have smaller relations.
    PseudoCmaem,
    /// Arbitrary per-coalition binary relations (Hintikka carriers).
    RawCmaes,
}

#[derive(Debug, Clone)]
pub enum SemError {
    UnknownAgent(String),
    UnknownState(String),
    TooLarge(String),
    Invalid(String),
}

impl fmt::Display for SemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemError::UnknownAgent(a) => write!(f, "unknown agent '{a}'"),
            SemError::UnknownState(s) => write!(f, "unknown state '{s}'"),
            SemError::TooLarge(m) => write!(f, "problem too large: {m}"),
            SemError::Invalid(m) => write!(f, "invalid structure: {m}"),
        }
    }
}

impl std::error::Error for SemError {}

/// A finite epistemic structure. Relations are keyed by local coalition
/// bitmask over `agents`; which masks are stored depends on the flavor.
#[derive(Debug, Clone)]
pub struct KripkeStructure {
    pub flavor: Flavor,
    pub state_names: Vec<String>,
    pub agents: Vec<String>,
    rels: BTreeMap<u32, BitMat>,
    pub valuation: Vec<BTreeSet<String>>,
}

impl KripkeStructure {
    /// A genuine model given by per-agent partitions (class id per state).
    pub fn cmaem(
        state_names: Vec<String>,
        agents: Vec<String>,
        partitions: &[Vec<usize>],
        valuation: Vec<BTreeSet<String>>,
    ) -> Result<KripkeStructure, SemError> {
        let n = state_names.len();
        if partitions.len() != agents.len() {
            return Err(SemError::Invalid("one partition per agent required".into()));
        }
        let mut rels = BTreeMap::new();
        for (a, part) in partitions.iter().enumerate() {
            if part.len() != n {
                return Err(SemError::Invalid("partition size mismatch".into()));
            }
            rels.insert(1u32 << a, BitMat::from_partition(part));
        }
        Ok(KripkeStructure {
            flavor: Flavor::Cmaem,
            state_names,
            agents,
            rels,
            valuation,
        })
    }

    /// A pseudo-model from explicit coalition equivalences. Missing
    /// coalitions default to the intersection of their explicit subsets;
    /// the monotonicity condition is validated across all coalitions.
    pub fn pseudo(
        state_names: Vec<String>,
        agents: Vec<String>,
        explicit: BTreeMap<u32, BitMat>,
        valuation: Vec<BTreeSet<String>>,
    ) -> Result<KripkeStructure, SemError> {
        let k = agents.len();
        if k > 12 {
            return Err(SemError::TooLarge(format!(
                "{k} agents in an explicit-coalition structure"
            )));
        }
        for a in 0..k {
            if !explicit.contains_key(&(1u32 << a)) {
                return Err(SemError::Invalid(format!(
                    "missing singleton relation for agent '{}'",
                    agents[a]
                )));
            }
        }
        for m in explicit.values() {
            if !m.is_equivalence() {
                return Err(SemError::Invalid(
                    "coalition relations must be equivalences".into(),
                ));
            }
        }
        let mut rels = BTreeMap::new();
        for mask in 1u32..(1u32 << k) {
            let rel = match explicit.get(&mask) {
                Some(m) => m.clone(),
                None => {
                    let mut acc = BitMat::full(state_names.len());
                    for (&b, m) in &explicit {
                        if b & !mask == 0 {
                            acc = acc.intersect(m);
                        }
                    }
                    acc
                }
            };
            rels.insert(mask, rel);
        }
        for (&a, ra) in &rels {
            for (&b, rb) in &rels {
                if b & !a == 0 && !ra.is_subset(rb) {
                    return Err(SemError::Invalid(
                        "coalition relations must shrink as coalitions grow".into(),
                    ));
                }
            }
        }
        Ok(KripkeStructure {
            flavor: Flavor::PseudoCmaem,
            state_names,
            agents,
            rels,
            valuation,
        })
    }

    /// An unconstrained structure with the given coalition relations.
    pub fn raw(
        state_names: Vec<String>,
        agents: Vec<String>,
        rels: BTreeMap<u32, BitMat>,
        valuation: Vec<BTreeSet<String>>,
    ) -> KripkeStructure {
        KripkeStructure {
            flavor: Flavor::RawCmaes,
            state_names,
            agents,
            rels,
            valuation,
        }
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn agent_index(&self, name: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_names.iter().position(|s| s == name)
    }

    /// The distributed-knowledge relation of a local coalition mask.
    pub fn rel_d(&self, mask: u32) -> BitMat {
        debug_assert!(mask != 0);
        if let Some(m) = self.rels.get(&mask) {
            return m.clone();
        }
        match self.flavor {
            Flavor::RawCmaes => BitMat::new(self.n_states()),
            _ => {
                // intersection of the members' relations
                let mut acc = BitMat::full(self.n_states());
                for a in 0..self.agents.len() {
                    if mask & (1u32 << a) != 0 {
                        acc = acc.intersect(&self.rel_d(1u32 << a));
                    }
                }
                acc
            }
        }
    }

    /// The common-knowledge relation: reflexive-transitive closure of the
    /// union of the subset coalitions' relations.
    pub fn rel_c(&self, mask: u32) -> BitMat {
        let mut acc = BitMat::new(self.n_states());
        match self.flavor {
            Flavor::RawCmaes => {
                for (&b, m) in &self.rels {
                    if b & !mask == 0 {
                        acc.or_assign(m);
                    }
                }
            }
            _ => {
                // in (pseudo-)models the singleton relations dominate
                for a in 0..self.agents.len() {
                    if mask & (1u32 << a) != 0 {
                        acc.or_assign(&self.rel_d(1u32 << a));
                    }
                }
            }
        }
        acc.reflexive_close();
        acc.transitive_close();
        acc
    }
}

fn local_mask(m: &KripkeStructure, sym: &Symbols, c: Coalition) -> Result<u32, SemError> {
    let mut mask = 0u32;
    for a in c.agents() {
        let name = sym.agent_name(a);
        let i = m
            .agent_index(name)
            .ok_or_else(|| SemError::UnknownAgent(name.to_string()))?;
        mask |= 1u32 << i;
    }
    Ok(mask)
}

/// Evaluates a formula at every state, memoized bottom-up over subformulae.
pub fn eval_states(
    m: &KripkeStructure,
    sym: &Symbols,
    f: &Arc<Formula>,
) -> Result<Vec<bool>, SemError> {
    let mut memo: HashMap<Arc<Formula>, Vec<bool>> = HashMap::new();
    eval_rec(m, sym, f, &mut memo)
}

fn eval_rec(
    m: &KripkeStructure,
    sym: &Symbols,
    f: &Arc<Formula>,
    memo: &mut HashMap<Arc<Formula>, Vec<bool>>,
) -> Result<Vec<bool>, SemError> {
    if let Some(v) = memo.get(f) {
        return Ok(v.clone());
    }
    let n = m.n_states();
    let out: Vec<bool> = match &**f {
        Formula::Atom(a) => {
            let name = sym.atom_name(*a);
            (0..n).map(|s| m.valuation[s].contains(name)).collect()
        }
        Formula::Not(g) => {
            let v = eval_rec(m, sym, g, memo)?;
            v.into_iter().map(|b| !b).collect()
        }
        Formula::And(l, r) => {
            let lv = eval_rec(m, sym, l, memo)?;
            let rv = eval_rec(m, sym, r, memo)?;
            lv.into_iter().zip(rv).map(|(a, b)| a && b).collect()
        }
        Formula::Dist(c, g) => {
            let gv = eval_rec(m, sym, g, memo)?;
            let rel = m.rel_d(local_mask(m, sym, *c)?);
            box_eval(&rel, &gv)
        }
        Formula::Common(c, g) => {
            let gv = eval_rec(m, sym, g, memo)?;
            let rel = m.rel_c(local_mask(m, sym, *c)?);
            box_eval(&rel, &gv)
        }
    };
    memo.insert(f.clone(), out.clone());
    Ok(out)
}

fn box_eval(rel: &BitMat, truths: &[bool]) -> Vec<bool> {
    (0..rel.n())
        .map(|s| (0..rel.n()).all(|t| !rel.get(s, t) || truths[t]))
        .collect()
}

/// Truth of a formula at one state.
pub fn check(
    m: &KripkeStructure,
    sym: &Symbols,
    f: &Arc<Formula>,
    state: usize,
) -> Result<bool, SemError> {
    Ok(eval_states(m, sym, f)?[state])
}

/// States reachable from `s` by steps along single agents of the coalition,
/// including `s` itself.
pub fn a_reachable(
    m: &KripkeStructure,
    sym: &Symbols,
    s: usize,
    c: Coalition,
) -> Result<Vec<usize>, SemError> {
    let mask = local_mask(m, sym, c)?;
    let mut rel = BitMat::new(m.n_states());
    for a in 0..m.agents.len() {
        if mask & (1u32 << a) != 0 {
            rel.or_assign(&m.rel_d(1u32 << a));
        }
    }
    let mut seen = vec![false; m.n_states()];
    seen[s] = true;
    let mut queue = vec![s];
    while let Some(u) = queue.pop() {
        for v in 0..m.n_states() {
            if rel.get(u, v) && !seen[v] {
                seen[v] = true;
                queue.push(v);
            }
        }
    }
    Ok((0..m.n_states()).filter(|&i| seen[i]).collect())
}

/// A labeled transition structure over closure formulae; relations are
/// keyed by the formula-level coalition bits.
#[derive(Debug, Clone)]
pub struct HintikkaStructure {
    pub ctx: Arc<ClosureIndex>,
    pub labels: Vec<LabelSet>,
    pub relations: BTreeMap<u32, BitMat>,
}

impl HintikkaStructure {
    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    fn rel_c_bits(&self, mask: u32) -> BitMat {
        let mut acc = BitMat::new(self.n_states());
        for (&b, m) in &self.relations {
            if b & !mask == 0 {
                acc.or_assign(m);
            }
        }
        acc.reflexive_close();
        acc.transitive_close();
        acc
    }
}

/// Reads the surviving states of an open tableau as a Hintikka structure:
/// one relation edge per solid edge, keyed by the edge diamond's coalition.
pub fn hintikka_from_tableau(solved: &Solved) -> Result<HintikkaStructure, String> {
    if solved.verdict == Verdict::Unsat {
        return Err("tableau is closed".into());
    }
    let kept: Vec<usize> = solved.surviving_states().collect();
    let remap: HashMap<usize, usize> = kept.iter().enumerate().map(|(n, &i)| (i, n)).collect();
    let labels: Vec<LabelSet> = kept.iter().map(|&i| solved.states[i].clone()).collect();
    let mut relations: BTreeMap<u32, BitMat> = BTreeMap::new();
    for (f, chi, t) in solved.final_edges() {
        let bits = solved.edge_coalition(chi).bits();
        relations
            .entry(bits)
            .or_insert_with(|| BitMat::new(labels.len()))
            .set(remap[&f], remap[&t]);
    }
    Ok(HintikkaStructure {
        ctx: solved.ctx.clone(),
        labels,
        relations,
    })
}

/// Per-condition verification report; `None` means the condition holds,
/// otherwise the first counterexample found is described.
#[derive(Debug, Clone, Default)]
pub struct HintikkaReport {
    pub ch1: Option<String>,
    pub ch2: Option<String>,
    pub ch3: Option<String>,
    pub ch4: Option<String>,
}

impl HintikkaReport {
    pub fn pass(&self) -> bool {
        self.ch1.is_none() && self.ch2.is_none() && self.ch3.is_none() && self.ch4.is_none()
    }
}

/// Checks the four Hintikka conditions exhaustively: labels fully expanded;
/// every negated box has a witnessing successor; box membership constant
/// along relation edges for all subset coalitions, in both directions; and
/// every eventuality reaches a witness through the derived common relation.
pub fn verify_hintikka(h: &HintikkaStructure, sym: &Symbols) -> HintikkaReport {
    let ctx = &h.ctx;
    let mut report = HintikkaReport::default();

    'ch1: for (s, label) in h.labels.iter().enumerate() {
        if label.patently_inconsistent() {
            report.ch1 = Some(format!("state {s} is patently inconsistent"));
            break;
        }
        for sf in label.iter() {
            if let Some(comps) = ctx.alpha_comps(sf) {
                if !comps.iter().all(|&c| label.contains(c)) {
                    report.ch1 = Some(format!(
                        "state {s} misses an alpha component of {}",
                        ctx.render_signed(sf, sym)
                    ));
                    break 'ch1;
                }
            }
            if let Some(comps) = ctx.beta_comps(sf) {
                if !comps.iter().any(|&c| label.contains(c)) {
                    report.ch1 = Some(format!(
                        "state {s} has no beta component of {}",
                        ctx.render_signed(sf, sym)
                    ));
                    break 'ch1;
                }
            }
        }
    }

    'ch2: for (s, label) in h.labels.iter().enumerate() {
        for sf in label.iter() {
            if let Some((c, neg_body)) = ctx.diamond(sf) {
                let ok = h.relations.get(&c.bits()).is_some_and(|rel| {
                    (0..h.n_states()).any(|t| rel.get(s, t) && h.labels[t].contains(neg_body))
                });
                if !ok {
                    report.ch2 = Some(format!(
                        "state {s}: no successor witnessing {}",
                        ctx.render_signed(sf, sym)
                    ));
                    break 'ch2;
                }
            }
        }
    }

    'ch3: for (&bits, rel) in &h.relations {
        let a = Coalition::from_bits(bits).expect("relations are keyed by coalitions");
        for b in 0..ctx.n_bases() {
            let Some(c) = ctx.dist_coalition(b) else {
                continue;
            };
            if !c.is_subset(a) {
                continue;
            }
            let pos = positive(b);
            for (s, t) in rel.pairs() {
                if h.labels[s].contains(pos) != h.labels[t].contains(pos) {
                    report.ch3 = Some(format!(
                        "edge {s}->{t} (coalition bits {bits:#b}) disagrees on {}",
                        ctx.render_signed(pos, sym)
                    ));
                    break 'ch3;
                }
            }
        }
    }

    'ch4: for (s, label) in h.labels.iter().enumerate() {
        for sf in label.iter() {
            if let Some((c, neg_body)) = ctx.eventuality(sf) {
                let rc = h.rel_c_bits(c.bits());
                let ok =
                    (0..h.n_states()).any(|t| rc.get(s, t) && h.labels[t].contains(neg_body));
                if !ok {
                    report.ch4 = Some(format!(
                        "state {s}: eventuality {} unrealized",
                        ctx.render_signed(sf, sym)
                    ));
                    break 'ch4;
                }
            }
        }
    }

    report
}

/// Turns a Hintikka structure into a pseudo-model: each coalition relation
/// becomes the reflexive-symmetric-transitive closure of the union of the
/// relations of its superset coalitions, and labels shrink to their atoms.
pub fn pseudo_model_from_hintikka(
    h: &HintikkaStructure,
    sym: &Symbols,
) -> Result<KripkeStructure, SemError> {
    let ctx = &h.ctx;
    let universe: Vec<AgentId> = Coalition::from_bits(ctx.agent_universe())
        .map(|c| c.agents().collect())
        .unwrap_or_default();
    let k = universe.len();
    if k > 12 {
        return Err(SemError::TooLarge(format!("{k} agents")));
    }
    let agents: Vec<String> = universe
        .iter()
        .map(|&a| sym.agent_name(a).to_string())
        .collect();
    let n = h.n_states();
    let to_formula_bits = |local: u32| -> u32 {
        let mut bits = 0u32;
        for (i, a) in universe.iter().enumerate() {
            if local & (1u32 << i) != 0 {
                bits |= Coalition::singleton(*a).bits();
            }
        }
        bits
    };
    let mut explicit = BTreeMap::new();
    for local in 1u32..(1u32 << k) {
        let fbits = to_formula_bits(local);
        let mut rel = BitMat::new(n);
        for (&b, m) in &h.relations {
            if fbits & !b == 0 {
                rel.or_assign(m); // superset coalition
            }
        }
        rel.equivalence_close();
        explicit.insert(local, rel);
    }
    let mut valuation = vec![BTreeSet::new(); n];
    for (s, label) in h.labels.iter().enumerate() {
        for b in 0..ctx.n_bases() {
            if ctx.is_atom_base(b) && label.contains(positive(b)) {
                if let Formula::Atom(a) = &**ctx.base(b) {
                    valuation[s].insert(sym.atom_name(*a).to_string());
                }
            }
        }
    }
    let state_names = (0..n).map(|i| format!("s{i}")).collect();
    KripkeStructure::pseudo(state_names, agents, explicit, valuation)
}

/// Labels every state of a genuine model with the closure formulae true
/// there, giving a Hintikka structure over the model's relations.
pub fn hintikka_from_model(
    m: &KripkeStructure,
    sym: &Symbols,
    ctx: &Arc<ClosureIndex>,
) -> Result<HintikkaStructure, SemError> {
    let universe: Vec<AgentId> = Coalition::from_bits(ctx.agent_universe())
        .map(|c| c.agents().collect())
        .unwrap_or_default();
    if universe.len() > 12 {
        return Err(SemError::TooLarge(format!("{} agents", universe.len())));
    }
    let n = m.n_states();
    let mut labels = vec![ctx.empty_label(); n];
    for b in 0..ctx.n_bases() {
        let truths = eval_states(m, sym, ctx.base(b))?;
        for (s, &t) in truths.iter().enumerate() {
            labels[s].insert(if t { positive(b) } else { negative(b) });
        }
    }
    let mut relations = BTreeMap::new();
    for sub in subsets_nonempty(&universe) {
        let c = Coalition::from_agents(sub.iter().copied()).expect("non-empty");
        let rel = m.rel_d(local_mask(m, sym, c)?);
        relations.insert(c.bits(), rel);
    }
    Ok(HintikkaStructure {
        ctx: ctx.clone(),
        labels,
        relations,
    })
}

fn subsets_nonempty(items: &[AgentId]) -> Vec<Vec<AgentId>> {
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << items.len()) {
        out.push(
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1u32 << i) != 0)
                .map(|(_, &a)| a)
                .collect(),
        );
    }
    out
}

/// All partitions of `n` elements as class-id vectors, in restricted-growth
/// order.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, i: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            cur[i] = c;
            rec(cur, i + 1, max.max(c), out);
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    rec(&mut cur, 1, 0, &mut out);
    out
}

/// Exhaustive small-model search: enumerates all genuine models over the
/// formula's agents and atoms with up to `max_states` states and returns
/// the first satisfying pair, if any.
pub fn brute_force_sat(
    f: &Arc<Formula>,
    sym: &Symbols,
    max_states: usize,
) -> Result<Option<(KripkeStructure, usize)>, SemError> {
    if max_states > 4 {
        return Err(SemError::TooLarge("oracle bound is 4 states".into()));
    }
    let agent_ids: Vec<AgentId> = Coalition::from_bits(f.agent_bits())
        .map(|c| c.agents().collect())
        .unwrap_or_default();
    let agents: Vec<String> = agent_ids
        .iter()
        .map(|&a| sym.agent_name(a).to_string())
        .collect();
    let mut atom_ids = Vec::new();
    f.collect_atoms(&mut atom_ids);
    let atoms: Vec<String> = atom_ids
        .iter()
        .map(|&a| sym.atom_name(a).to_string())
        .collect();
    // purely propositional inputs still need one relation carrier
    let agents = if agents.is_empty() {
        vec!["_a".to_string()]
    } else {
        agents
    };
    let k = agents.len();

    for n in 1..=max_states {
        if atoms.len() * n > 24 {
            return Err(SemError::TooLarge(format!(
                "{} atoms over {n} states",
                atoms.len()
            )));
        }
        let parts = partitions(n);
        let state_names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let mut choice = vec![0usize; k];
        loop {
            let partition_set: Vec<Vec<usize>> =
                choice.iter().map(|&c| parts[c].clone()).collect();
            let val_count = 1u32 << (atoms.len() * n);
            for val in 0..val_count {
                let mut valuation = vec![BTreeSet::new(); n];
                for (ai, atom) in atoms.iter().enumerate() {
                    for (s, v) in valuation.iter_mut().enumerate() {
                        if val & (1u32 << (ai * n + s)) != 0 {
                            v.insert(atom.clone());
                        }
                    }
                }
                let m = KripkeStructure::cmaem(
                    state_names.clone(),
                    agents.clone(),
                    &partition_set,
                    valuation,
                )?;
                let truths = eval_states(&m, sym, f)?;
                if let Some(s) = truths.iter().position(|&t| t) {
                    return Ok(Some((m, s)));
                }
            }
            // odometer over per-agent partition choices
            let mut i = 0;
            while i < k {
                choice[i] += 1;
                if choice[i] < parts.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
    }
    Ok(None)
}

/// Error for the text model format below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model error on line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ModelError {}

/// Parses the text model format:
/// ```text
/// # comment
/// states: s0 s1 s2
/// agent a: {s0 s1} {s2}
/// coalition a,b: {s0} {s1} {s2}
/// val s0: p q
/// ```
/// `agent` lines give equivalence partitions. `coalition` lines are
/// optional; their presence switches the structure to the pseudo flavor
/// with explicit coalition equivalences.
pub fn parse_model(text: &str) -> Result<KripkeStructure, ModelError> {
    let err = |line: usize, msg: String| ModelError { line, msg };
    let mut states: Option<Vec<String>> = None;
    let mut agent_parts: Vec<(String, Vec<usize>)> = Vec::new();
    let mut coalition_parts: Vec<(Vec<String>, Vec<usize>, usize)> = Vec::new();
    let mut vals: Vec<(String, Vec<String>, usize)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = ln + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("states:") {
            if states.is_some() {
                return Err(err(lineno, "duplicate states line".into()));
            }
            let names: Vec<String> = rest.split_whitespace().map(|s| s.to_string()).collect();
            if names.is_empty() {
                return Err(err(lineno, "no states listed".into()));
            }
            states = Some(names);
        } else if let Some(rest) = line.strip_prefix("agent ") {
            let states = states
                .as_ref()
                .ok_or_else(|| err(lineno, "states line must come first".into()))?;
            let (name, blocks) = split_decl(rest, lineno)?;
            let part = parse_partition(&blocks, states, lineno)?;
            agent_parts.push((name, part));
        } else if let Some(rest) = line.strip_prefix("coalition ") {
            let states = states
                .as_ref()
                .ok_or_else(|| err(lineno, "states line must come first".into()))?;
            let (names, blocks) = split_decl(rest, lineno)?;
            let members: Vec<String> = names.split(',').map(|s| s.trim().to_string()).collect();
            if members.len() < 2 {
                return Err(err(
                    lineno,
                    "coalition lines need at least two agents".into(),
                ));
            }
            let part = parse_partition(&blocks, states, lineno)?;
            coalition_parts.push((members, part, lineno));
        } else if let Some(rest) = line.strip_prefix("val ") {
            let (state, atoms) = match rest.split_once(':') {
                Some((s, a)) => (
                    s.trim().to_string(),
                    a.split_whitespace().map(|x| x.to_string()).collect(),
                ),
                None => return Err(err(lineno, "expected 'val STATE: atoms...'".into())),
            };
            vals.push((state, atoms, lineno));
        } else {
            return Err(err(lineno, format!("unrecognized line '{line}'")));
        }
    }

    let states = states.ok_or_else(|| err(0, "missing states line".into()))?;
    let n = states.len();
    let mut valuation = vec![BTreeSet::new(); n];
    for (state, atoms, lineno) in vals {
        let i = states
            .iter()
            .position(|s| *s == state)
            .ok_or_else(|| err(lineno, format!("unknown state '{state}'")))?;
        valuation[i].extend(atoms);
    }
    let agents: Vec<String> = agent_parts.iter().map(|(a, _)| a.clone()).collect();
    let parts: Vec<Vec<usize>> = agent_parts.into_iter().map(|(_, p)| p).collect();

    if coalition_parts.is_empty() {
        KripkeStructure::cmaem(states, agents, &parts, valuation).map_err(|e| err(0, e.to_string()))
    } else {
        let mut explicit = BTreeMap::new();
        for (i, p) in parts.iter().enumerate() {
            explicit.insert(1u32 << i, BitMat::from_partition(p));
        }
        for (members, part, lineno) in coalition_parts {
            let mut mask = 0u32;
            for mname in &members {
                let i = agents
                    .iter()
                    .position(|a| a == mname)
                    .ok_or_else(|| err(lineno, format!("agent '{mname}' has no agent line")))?;
                mask |= 1u32 << i;
            }
            explicit.insert(mask, BitMat::from_partition(&part));
        }
        KripkeStructure::pseudo(states, agents, explicit, valuation)
            .map_err(|e| err(0, e.to_string()))
    }
}

fn split_decl(rest: &str, lineno: usize) -> Result<(String, String), ModelError> {
    match rest.split_once(':') {
        Some((name, blocks)) => Ok((name.trim().to_string(), blocks.to_string())),
        None => Err(ModelError {
            line: lineno,
            msg: "expected ':' after name".into(),
        }),
    }
}

fn parse_partition(
    blocks: &str,
    states: &[String],
    lineno: usize,
) -> Result<Vec<usize>, ModelError> {
    let err = |msg: String| ModelError { line: lineno, msg };
    let mut class_of = vec![usize::MAX; states.len()];
    let mut class = 0usize;
    let mut rest = blocks.trim();
    while !rest.is_empty() {
        if !rest.starts_with('{') {
            return Err(err(format!("expected '{{' in partition, found '{rest}'")));
        }
        let close = rest
            .find('}')
            .ok_or_else(|| err("unclosed partition block".into()))?;
        for name in rest[1..close].split_whitespace() {
            let i = states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| err(format!("unknown state '{name}'")))?;
            if class_of[i] != usize::MAX {
                return Err(err(format!("state '{name}' in two blocks")));
            }
            class_of[i] = class;
        }
        class += 1;
        rest = rest[close + 1..].trim_start();
    }
    if let Some(i) = class_of.iter().position(|&c| c == usize::MAX) {
        return Err(err(format!("state '{}' missing from partition", states[i])));
    }
    Ok(class_of)
}

/// Renders a model in the text format; pseudo structures emit explicit
/// `coalition` lines for all non-singleton coalitions.
pub fn render_model(m: &KripkeStructure) -> String {
    let mut out = String::new();
    out.push_str("states:");
    for s in &m.state_names {
        out.push(' ');
        out.push_str(s);
    }
    out.push('\n');
    let render_part = |rel: &BitMat| -> String {
        rel.classes()
            .iter()
            .map(|cls| {
                let names: Vec<&str> = cls.iter().map(|&i| m.state_names[i].as_str()).collect();
                format!("{{{}}}", names.join(" "))
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (i, a) in m.agents.iter().enumerate() {
        out.push_str(&format!("agent {a}: {}\n", render_part(&m.rel_d(1u32 << i))));
    }
    if m.flavor == Flavor::PseudoCmaem {
        for mask in 1u32..(1u32 << m.agents.len()) {
            if mask.count_ones() < 2 {
                continue;
            }
            let names: Vec<&str> = (0..m.agents.len())
                .filter(|&i| mask & (1u32 << i) != 0)
                .map(|i| m.agents[i].as_str())
                .collect();
            out.push_str(&format!(
                "coalition {}: {}\n",
                names.join(","),
                render_part(&m.rel_d(mask))
            ));
        }
    }
    for (i, s) in m.state_names.iter().enumerate() {
        if !m.valuation[i].is_empty() {
            let atoms: Vec<&str> = m.valuation[i].iter().map(|a| a.as_str()).collect();
            out.push_str(&format!("val {s}: {}\n", atoms.join(" ")));
        }
    }
    out
}
