//! Formula AST for the epistemic language: atoms, negation, conjunction, and
//! the distributed-knowledge and common-knowledge operators over coalitions.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Hard cap on distinct agents; coalitions are `u32` bitmasks.
pub const MAX_AGENTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub u32);

/// A non-empty set of agents, stored as a bitmask so that subset and
/// intersection tests are single instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(u32);

impl Coalition {
    pub fn singleton(a: AgentId) -> Coalition {
        Coalition(1u32 << a.0)
    }

    /// Returns `None` for an empty agent set; coalitions are non-empty.
    pub fn from_agents<I: IntoIterator<Item = AgentId>>(agents: I) -> Option<Coalition> {
        let mut bits = 0u32;
        for a in agents {
            bits |= 1u32 << a.0;
        }
        if bits == 0 {
            None
        } else {
            Some(Coalition(bits))
        }
    }

    pub fn from_bits(bits: u32) -> Option<Coalition> {
        if bits == 0 {
            None
        } else {
            Some(Coalition(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, a: AgentId) -> bool {
        self.0 & (1u32 << a.0) != 0
    }

    pub fn is_subset(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: Coalition) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: Coalition) -> Coalition {
        Coalition(self.0 | other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn agents(self) -> impl Iterator<Item = AgentId> {
        let bits = self.0;
        (0..32u8).filter_map(move |i| {
            if bits & (1u32 << i) != 0 {
                Some(AgentId(i))
            } else {
                None
            }
        })
    }
}

/// Core connectives only; `|`, `->`, `<->` and `K{a}` are expanded by the
/// parser and by the constructor helpers below.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(AtomId),
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    /// Distributed knowledge among the coalition.
    Dist(Coalition, Arc<Formula>),
    /// Common knowledge among the coalition.
    Common(Coalition, Arc<Formula>),
}

pub fn atom(id: AtomId) -> Arc<Formula> {
    Arc::new(Formula::Atom(id))
}

pub fn not(f: Arc<Formula>) -> Arc<Formula> {
    Arc::new(Formula::Not(f))
}

pub fn and(l: Arc<Formula>, r: Arc<Formula>) -> Arc<Formula> {
    Arc::new(Formula::And(l, r))
}

pub fn dist(c: Coalition, f: Arc<Formula>) -> Arc<Formula> {
    Arc::new(Formula::Dist(c, f))
}

pub fn common(c: Coalition, f: Arc<Formula>) -> Arc<Formula> {
    Arc::new(Formula::Common(c, f))
}

/// `l | r` as `~(~l & ~r)`.
pub fn or(l: Arc<Formula>, r: Arc<Formula>) -> Arc<Formula> {
    not(and(not(l), not(r)))
}

/// `l -> r` as `~(l & ~r)`.
pub fn implies(l: Arc<Formula>, r: Arc<Formula>) -> Arc<Formula> {
    not(and(l, not(r)))
}

/// `l <-> r` as `(l -> r) & (r -> l)`, desugared.
pub fn iff(l: Arc<Formula>, r: Arc<Formula>) -> Arc<Formula> {
    and(implies(l.clone(), r.clone()), implies(r, l))
}

impl Formula {
    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(l, r) => 1 + l.size() + r.size(),
            Formula::Dist(_, f) | Formula::Common(_, f) => 1 + f.size(),
        }
    }

    fn tag_rank(&self) -> u8 {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(_) => 1,
            Formula::And(_, _) => 2,
            Formula::Dist(_, _) => 3,
            Formula::Common(_, _) => 4,
        }
    }

    /// Total order used everywhere a deterministic iteration over formula
    /// sets is needed: first size, then constructor, then components.
    pub fn cmp_canonical(&self, other: &Formula) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.tag_rank().cmp(&other.tag_rank()))
            .then_with(|| match (self, other) {
                (Formula::Atom(a), Formula::Atom(b)) => a.cmp(b),
                (Formula::Not(a), Formula::Not(b)) => a.cmp_canonical(b),
                (Formula::And(al, ar), Formula::And(bl, br)) => {
                    al.cmp_canonical(bl).then_with(|| ar.cmp_canonical(br))
                }
                (Formula::Dist(ac, af), Formula::Dist(bc, bf))
                | (Formula::Common(ac, af), Formula::Common(bc, bf)) => {
                    ac.cmp(bc).then_with(|| af.cmp_canonical(bf))
                }
                _ => Ordering::Equal,
            })
    }

    /// All agents occurring in the formula, as a bitmask.
    pub fn agent_bits(&self) -> u32 {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(f) => f.agent_bits(),
            Formula::And(l, r) => l.agent_bits() | r.agent_bits(),
            Formula::Dist(c, f) | Formula::Common(c, f) => c.bits() | f.agent_bits(),
        }
    }

    pub fn collect_atoms(&self, acc: &mut Vec<AtomId>) {
        match self {
            Formula::Atom(a) => {
                if !acc.contains(a) {
                    acc.push(*a);
                }
            }
            Formula::Not(f) => f.collect_atoms(acc),
            Formula::And(l, r) => {
                l.collect_atoms(acc);
                r.collect_atoms(acc);
            }
            Formula::Dist(_, f) | Formula::Common(_, f) => f.collect_atoms(acc),
        }
    }
}

impl PartialOrd for Formula {
    fn partial_cmp(&self, other: &Formula) -> Option<Ordering> {
        Some(self.cmp_canonical(other))
    }
}

impl Ord for Formula {
    fn cmp(&self, other: &Formula) -> Ordering {
        self.cmp_canonical(other)
    }
}

/// Classification of a formula as used by the expansion rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaClass {
    Literal,
    NegLiteral,
    Alpha(Vec<Arc<Formula>>),
    Beta(Vec<Arc<Formula>>),
    /// A negated distributed-knowledge formula `~D{A}f`.
    DiamondD(Coalition, Arc<Formula>),
}

/// Decomposes a formula into its conjunctive (alpha) or disjunctive (beta)
/// components; atoms, negated atoms and `~D` formulae are elementary.
pub fn classify(f: &Arc<Formula>) -> FormulaClass {
    match &**f {
        Formula::Atom(_) => FormulaClass::Literal,
        Formula::And(l, r) => FormulaClass::Alpha(sorted_set(vec![l.clone(), r.clone()])),
        Formula::Dist(_, body) => FormulaClass::Alpha(sorted_set(vec![f.clone(), body.clone()])),
        Formula::Common(c, body) => {
            let mut comps = vec![body.clone()];
            for a in c.agents() {
                comps.push(dist(Coalition::singleton(a), f.clone()));
            }
            FormulaClass::Alpha(sorted_set(comps))
        }
        Formula::Not(inner) => match &**inner {
            Formula::Atom(_) => FormulaClass::NegLiteral,
            Formula::Not(g) => FormulaClass::Alpha(vec![g.clone()]),
            Formula::And(l, r) => {
                FormulaClass::Beta(sorted_set(vec![not(l.clone()), not(r.clone())]))
            }
            Formula::Dist(c, body) => FormulaClass::DiamondD(*c, body.clone()),
            Formula::Common(c, body) => {
                let mut comps = vec![not(body.clone())];
                for a in c.agents() {
                    comps.push(not(dist(Coalition::singleton(a), inner.clone())));
                }
                FormulaClass::Beta(sorted_set(comps))
            }
        },
    }
}

fn sorted_set(mut v: Vec<Arc<Formula>>) -> Vec<Arc<Formula>> {
    v.sort_by(|a, b| a.cmp_canonical(b));
    v.dedup();
    v
}

/// Interned atom and agent names shared by all formulae of one problem.
#[derive(Debug, Default, Clone)]
pub struct Symbols {
    atoms: Vec<String>,
    agents: Vec<String>,
    atom_ix: HashMap<String, u32>,
    agent_ix: HashMap<String, u8>,
}

impl Symbols {
    pub fn new() -> Symbols {
        Symbols::default()
    }

    pub fn atom_id(&mut self, name: &str) -> AtomId {
        if let Some(&i) = self.atom_ix.get(name) {
            return AtomId(i);
        }
        let i = self.atoms.len() as u32;
        self.atoms.push(name.to_string());
        self.atom_ix.insert(name.to_string(), i);
        AtomId(i)
    }

    /// Errors once more than [`MAX_AGENTS`] distinct agents are introduced.
    pub fn agent_id(&mut self, name: &str) -> Result<AgentId, String> {
        if let Some(&i) = self.agent_ix.get(name) {
            return Ok(AgentId(i));
        }
        if self.agents.len() >= MAX_AGENTS {
            return Err(format!("too many agents (cap {MAX_AGENTS})"));
        }
        let i = self.agents.len() as u8;
        self.agents.push(name.to_string());
        self.agent_ix.insert(name.to_string(), i);
        Ok(AgentId(i))
    }

    pub fn lookup_atom(&self, name: &str) -> Option<AtomId> {
        self.atom_ix.get(name).map(|&i| AtomId(i))
    }

    pub fn lookup_agent(&self, name: &str) -> Option<AgentId> {
        self.agent_ix.get(name).map(|&i| AgentId(i))
    }

    pub fn atom_name(&self, a: AtomId) -> &str {
        &self.atoms[a.0 as usize]
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agents[a.0 as usize]
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn coalition_names(&self, c: Coalition) -> Vec<&str> {
        c.agents().map(|a| self.agent_name(a)).collect()
    }
}

/// Renders a formula in the concrete syntax accepted by the parser; the
/// round trip `parse(render(f)) == f` is structural.
pub fn render(f: &Formula, sym: &Symbols) -> String {
    let mut out = String::new();
    render_into(f, sym, &mut out, false);
    out
}

fn render_into(f: &Formula, sym: &Symbols, out: &mut String, under_unary: bool) {
    match f {
        Formula::Atom(a) => out.push_str(sym.atom_name(*a)),
        Formula::Not(inner) => {
            out.push('~');
            render_into(inner, sym, out, true);
        }
        Formula::And(l, r) => {
            if under_unary {
                out.push('(');
            }
            // left operand of a chain may itself be a bare conjunction
            render_into(l, sym, out, !matches!(**l, Formula::And(_, _)));
            out.push_str(" & ");
            render_into(r, sym, out, true);
            if under_unary {
                out.push(')');
            }
        }
        Formula::Dist(c, inner) | Formula::Common(c, inner) => {
            out.push(if matches!(f, Formula::Dist(_, _)) { 'D' } else { 'C' });
            out.push('{');
            let mut first = true;
            for a in c.agents() {
                if !first {
                    out.push(',');
                }
                out.push_str(sym.agent_name(a));
                first = false;
            }
            out.push('}');
            render_into(inner, sym, out, true);
        }
    }
}

/// `Display`-style helper bundling a formula with its symbol table.
pub struct Rendered<'a>(pub &'a Formula, pub &'a Symbols);

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self.0, self.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    fn p(sym: &mut Symbols, s: &str) -> Arc<Formula> {
        parse(s, sym).unwrap()
    }

    #[test]
    fn coalition_ops() {
        let mut sym = Symbols::new();
        let a = sym.agent_id("a").unwrap();
        let b = sym.agent_id("b").unwrap();
        let c = sym.agent_id("c").unwrap();
        let ab = Coalition::from_agents([a, b]).unwrap();
        let ac = Coalition::from_agents([a, c]).unwrap();
        assert!(Coalition::singleton(a).is_subset(ab));
        assert!(!ab.is_subset(ac));
        assert!(ab.intersects(ac));
        assert_eq!(ab.union(ac).len(), 3);
        assert!(Coalition::from_agents(std::iter::empty()).is_none());
    }

    #[test]
    fn classify_common_knowledge() {
        let mut sym = Symbols::new();
        let f = p(&mut sym, "C{a,b}p");
        let expect = vec![
            p(&mut sym, "p"),
            p(&mut sym, "D{a}C{a,b}p"),
            p(&mut sym, "D{b}C{a,b}p"),
        ];
        match classify(&f) {
            FormulaClass::Alpha(comps) => {
                assert_eq!(comps.len(), 3);
                for e in &expect {
                    assert!(comps.contains(e));
                }
            }
            other => panic!("expected alpha, got {other:?}"),
        }
    }

    #[test]
    fn classify_neg_common_knowledge() {
        let mut sym = Symbols::new();
        let f = p(&mut sym, "~C{a,b}p");
        let expect = vec![
            p(&mut sym, "~p"),
            p(&mut sym, "~D{a}C{a,b}p"),
            p(&mut sym, "~D{b}C{a,b}p"),
        ];
        match classify(&f) {
            FormulaClass::Beta(comps) => {
                assert_eq!(comps.len(), 3);
                for e in &expect {
                    assert!(comps.contains(e));
                }
            }
            other => panic!("expected beta, got {other:?}"),
        }
    }

    #[test]
    fn classify_elementary_and_alpha() {
        let mut sym = Symbols::new();
        let f = p(&mut sym, "~D{a}p");
        let body = p(&mut sym, "p");
        match classify(&f) {
            FormulaClass::DiamondD(c, b) => {
                assert_eq!(c.len(), 1);
                assert_eq!(b, body);
            }
            other => panic!("expected diamond, got {other:?}"),
        }
        assert_eq!(classify(&p(&mut sym, "p")), FormulaClass::Literal);
        assert_eq!(classify(&p(&mut sym, "~p")), FormulaClass::NegLiteral);
        // ~~p is an alpha formula with component p
        match classify(&p(&mut sym, "~~p")) {
            FormulaClass::Alpha(comps) => assert_eq!(comps, vec![body]),
            other => panic!("expected alpha, got {other:?}"),
        }
        // D{A}f keeps itself among its components
        let d = p(&mut sym, "D{a,b}q");
        match classify(&d) {
            FormulaClass::Alpha(comps) => {
                assert!(comps.contains(&d));
                assert!(comps.contains(&p(&mut sym, "q")));
            }
            other => panic!("expected alpha, got {other:?}"),
        }
    }

    #[test]
    fn canonical_order_is_total_on_samples() {
        let mut sym = Symbols::new();
        let mut fs = vec![
            p(&mut sym, "p"),
            p(&mut sym, "~p"),
            p(&mut sym, "p & q"),
            p(&mut sym, "D{a}p"),
            p(&mut sym, "C{a}p"),
            p(&mut sym, "~D{a}p"),
        ];
        fs.sort();
        // size first: atoms before compounds
        assert_eq!(fs[0], p(&mut sym, "p"));
        for w in fs.windows(2) {
            assert_ne!(w[0].cmp_canonical(&w[1]), Ordering::Greater);
        }
    }
}
