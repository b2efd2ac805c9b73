//! Closure and extended-closure computation, plus the bit-vector label sets
//! the expansion and tableau engines operate on.
//!
//! Every formula is indexed in a signed form: leading negations are stripped
//! and folded into a sign bit, so a label set can never distinguish `~~p`
//! from `p` and "patently inconsistent" (contains some `f` together with
//! `~f`) is a single masked bit test.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::formula::{classify, not, Coalition, Formula, FormulaClass, Symbols};

/// Index of a signed formula: `2 * base + (0 positive | 1 negative)`.
pub type SignedIdx = u32;

pub fn positive(base: usize) -> SignedIdx {
    (base as u32) << 1
}

pub fn negative(base: usize) -> SignedIdx {
    ((base as u32) << 1) | 1
}

pub fn flip(s: SignedIdx) -> SignedIdx {
    s ^ 1
}

pub fn base_of(s: SignedIdx) -> usize {
    (s >> 1) as usize
}

pub fn is_positive(s: SignedIdx) -> bool {
    s & 1 == 0
}

/// A distributed- or common-knowledge subformula occurrence, used when
/// scanning for cut candidates.
#[derive(Debug, Clone, Copy)]
pub struct DcSub {
    pub base: usize,
    pub is_common: bool,
    pub coalition: Coalition,
}

#[derive(Debug, Clone)]
enum BaseKind {
    Atom,
    And {
        left: SignedIdx,
        right: SignedIdx,
    },
    Dist {
        coalition: Coalition,
        body: SignedIdx,
    },
    Common {
        coalition: Coalition,
        body: SignedIdx,
        /// Base indices of `D{a} C{A} f` for each `a` in the coalition.
        d_comps: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
struct BaseInfo {
    kind: BaseKind,
    dc_subs: Vec<DcSub>,
}

/// Shape of a formula as a cut trigger: boxes and negated boxes, or negated
/// common knowledge, each carrying their coalition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerShape {
    DistEither(Coalition),
    NegCommon(Coalition),
}

/// The extended closure of an input set, with a fixed canonical ordering of
/// base formulae. All label sets of one problem refer to one index.
#[derive(Debug)]
pub struct ClosureIndex {
    bases: Vec<Arc<Formula>>,
    base_ix: HashMap<Arc<Formula>, usize>,
    info: Vec<BaseInfo>,
    words: usize,
    /// Bitmask of all agents occurring anywhere in the closure.
    agent_bits: u32,
    /// Base indices of common-knowledge formulae (potential eventualities).
    common_bases: Vec<usize>,
}

impl ClosureIndex {
    pub fn build(formulas: &[Arc<Formula>]) -> ClosureIndex {
        let mut set: BTreeSet<Arc<Formula>> = BTreeSet::new();
        for f in formulas {
            collect_bases(f, &mut set);
        }
        let bases: Vec<Arc<Formula>> = set.into_iter().collect();
        let base_ix: HashMap<Arc<Formula>, usize> = bases
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();

        let signed_of = |f: &Arc<Formula>| -> SignedIdx {
            let (b, pos) = strip(f);
            let i = base_ix[b];
            if pos {
                positive(i)
            } else {
                negative(i)
            }
        };

        let mut info = Vec::with_capacity(bases.len());
        let mut agent_bits = 0u32;
        let mut common_bases = Vec::new();
        for (i, b) in bases.iter().enumerate() {
            agent_bits |= b.agent_bits();
            let kind = match &**b {
                Formula::Atom(_) => BaseKind::Atom,
                Formula::And(l, r) => BaseKind::And {
                    left: signed_of(l),
                    right: signed_of(r),
                },
                Formula::Dist(c, body) => BaseKind::Dist {
                    coalition: *c,
                    body: signed_of(body),
                },
                Formula::Common(c, body) => {
                    common_bases.push(i);
                    let d_comps = c
                        .agents()
                        .map(|a| {
                            base_ix[&Arc::new(Formula::Dist(
                                Coalition::singleton(a),
                                b.clone(),
                            ))]
                        })
                        .collect();
                    BaseKind::Common {
                        coalition: *c,
                        body: signed_of(body),
                        d_comps,
                    }
                }
                Formula::Not(_) => unreachable!("bases are negation-free"),
            };
            let mut dc_subs = Vec::new();
            collect_dc_subs(b, &base_ix, &mut dc_subs);
            info.push(BaseInfo { kind, dc_subs });
        }
        let words = (2 * bases.len()).div_ceil(64).max(1);
        ClosureIndex {
            bases,
            base_ix,
            info,
            words,
            agent_bits,
            common_bases,
        }
    }

    pub fn n_bases(&self) -> usize {
        self.bases.len()
    }

    /// Number of signed formulae in the extended closure.
    pub fn ecl_size(&self) -> usize {
        2 * self.bases.len()
    }

    pub fn base(&self, i: usize) -> &Arc<Formula> {
        &self.bases[i]
    }

    pub fn agent_universe(&self) -> u32 {
        self.agent_bits
    }

    pub fn common_bases(&self) -> &[usize] {
        &self.common_bases
    }

    /// Signed index of a formula, collapsing leading negations; `None` if it
    /// is not in the extended closure.
    pub fn index_of(&self, f: &Arc<Formula>) -> Option<SignedIdx> {
        let (b, pos) = strip(f);
        self.base_ix.get(b).map(|&i| {
            if pos {
                positive(i)
            } else {
                negative(i)
            }
        })
    }

    /// Reconstructs the (canonical-signed) formula of an index.
    pub fn formula_of(&self, s: SignedIdx) -> Arc<Formula> {
        let b = self.bases[base_of(s)].clone();
        if is_positive(s) {
            b
        } else {
            not(b)
        }
    }

    pub fn label_of(&self, fs: &[Arc<Formula>]) -> LabelSet {
        let mut l = self.empty_label();
        for f in fs {
            l.insert(self.index_of(f).expect("formula outside the closure"));
        }
        l
    }

    pub fn empty_label(&self) -> LabelSet {
        LabelSet {
            words: vec![0u64; self.words],
        }
    }

    /// Alpha components of a signed formula (the formula itself excluded),
    /// or `None` if it is not an alpha formula.
    pub fn alpha_comps(&self, s: SignedIdx) -> Option<Vec<SignedIdx>> {
        let inf = &self.info[base_of(s)];
        if is_positive(s) {
            match &inf.kind {
                BaseKind::And { left, right } => Some(vec![*left, *right]),
                BaseKind::Dist { body, .. } => Some(vec![*body]),
                BaseKind::Common { body, d_comps, .. } => {
                    let mut v = vec![*body];
                    v.extend(d_comps.iter().map(|&b| positive(b)));
                    Some(v)
                }
                BaseKind::Atom => None,
            }
        } else {
            None
        }
    }

    /// Beta components of a signed formula, or `None` if not a beta formula.
    pub fn beta_comps(&self, s: SignedIdx) -> Option<Vec<SignedIdx>> {
        let inf = &self.info[base_of(s)];
        if is_positive(s) {
            return None;
        }
        match &inf.kind {
            BaseKind::And { left, right } => Some(vec![flip(*left), flip(*right)]),
            BaseKind::Common { body, d_comps, .. } => {
                let mut v = vec![flip(*body)];
                v.extend(d_comps.iter().map(|&b| negative(b)));
                Some(v)
            }
            _ => None,
        }
    }

    /// For `~C{A}f`: the coalition and the signed index of `~f`.
    pub fn eventuality(&self, s: SignedIdx) -> Option<(Coalition, SignedIdx)> {
        if is_positive(s) {
            return None;
        }
        match &self.info[base_of(s)].kind {
            BaseKind::Common {
                coalition, body, ..
            } => Some((*coalition, flip(*body))),
            _ => None,
        }
    }

    /// For `~D{A}f`: the coalition and the signed index of `~f`.
    pub fn diamond(&self, s: SignedIdx) -> Option<(Coalition, SignedIdx)> {
        if is_positive(s) {
            return None;
        }
        match &self.info[base_of(s)].kind {
            BaseKind::Dist { coalition, body } => Some((*coalition, flip(*body))),
            _ => None,
        }
    }

    /// Coalition of a distributed-knowledge base formula.
    pub fn dist_coalition(&self, base: usize) -> Option<Coalition> {
        match &self.info[base].kind {
            BaseKind::Dist { coalition, .. } => Some(*coalition),
            _ => None,
        }
    }

    pub fn common_coalition(&self, base: usize) -> Option<Coalition> {
        match &self.info[base].kind {
            BaseKind::Common { coalition, .. } => Some(*coalition),
            _ => None,
        }
    }

    pub fn is_atom_base(&self, base: usize) -> bool {
        matches!(self.info[base].kind, BaseKind::Atom)
    }

    pub fn dc_subs(&self, base: usize) -> &[DcSub] {
        &self.info[base].dc_subs
    }

    pub fn trigger_shape(&self, s: SignedIdx) -> Option<TriggerShape> {
        match &self.info[base_of(s)].kind {
            BaseKind::Dist { coalition, .. } => Some(TriggerShape::DistEither(*coalition)),
            BaseKind::Common { coalition, .. } if !is_positive(s) => {
                Some(TriggerShape::NegCommon(*coalition))
            }
            _ => None,
        }
    }

    pub fn render_signed(&self, s: SignedIdx, sym: &Symbols) -> String {
        crate::formula::render(&self.formula_of(s), sym)
    }

    pub fn render_label(&self, l: &LabelSet, sym: &Symbols) -> String {
        let mut parts = Vec::new();
        for s in l.iter() {
            parts.push(self.render_signed(s, sym));
        }
        format!("{{{}}}", parts.join(", "))
    }
}

fn strip(f: &Arc<Formula>) -> (&Arc<Formula>, bool) {
    let mut cur = f;
    let mut pos = true;
    while let Formula::Not(inner) = &**cur {
        cur = inner;
        pos = !pos;
    }
    (cur, pos)
}

fn collect_bases(f: &Arc<Formula>, acc: &mut BTreeSet<Arc<Formula>>) {
    let (base, _) = strip(f);
    if !acc.insert(base.clone()) {
        return;
    }
    match &**base {
        Formula::Atom(_) => {}
        Formula::And(l, r) => {
            collect_bases(l, acc);
            collect_bases(r, acc);
        }
        Formula::Dist(_, body) => collect_bases(body, acc),
        Formula::Common(c, body) => {
            collect_bases(body, acc);
            for a in c.agents() {
                let d = Arc::new(Formula::Dist(Coalition::singleton(a), base.clone()));
                collect_bases(&d, acc);
            }
        }
        Formula::Not(_) => unreachable!(),
    }
}

fn collect_dc_subs(f: &Arc<Formula>, ix: &HashMap<Arc<Formula>, usize>, out: &mut Vec<DcSub>) {
    match &**f {
        Formula::Atom(_) => {}
        Formula::Not(inner) => collect_dc_subs(inner, ix, out),
        Formula::And(l, r) => {
            collect_dc_subs(l, ix, out);
            collect_dc_subs(r, ix, out);
        }
        Formula::Dist(c, body) => {
            push_dc(f, ix, *c, false, out);
            collect_dc_subs(body, ix, out);
        }
        Formula::Common(c, body) => {
            push_dc(f, ix, *c, true, out);
            collect_dc_subs(body, ix, out);
        }
    }
}

fn push_dc(
    f: &Arc<Formula>,
    ix: &HashMap<Arc<Formula>, usize>,
    c: Coalition,
    is_common: bool,
    out: &mut Vec<DcSub>,
) {
    let base = ix[f];
    if !out.iter().any(|d| d.base == base) {
        out.push(DcSub {
            base,
            is_common,
            coalition: c,
        });
    }
}

/// A set of signed closure formulae as a bit vector. Ordering is the
/// lexicographic word order, used only as an arbitrary fixed total order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelSet {
    words: Vec<u64>,
}

impl LabelSet {
    pub fn insert(&mut self, s: SignedIdx) {
        self.words[(s / 64) as usize] |= 1u64 << (s % 64);
    }

    pub fn remove(&mut self, s: SignedIdx) {
        self.words[(s / 64) as usize] &= !(1u64 << (s % 64));
    }

    pub fn contains(&self, s: SignedIdx) -> bool {
        self.words[(s / 64) as usize] & (1u64 << (s % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &LabelSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &LabelSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// True iff some base occurs with both signs.
    pub fn patently_inconsistent(&self) -> bool {
        const ODD: u64 = 0xAAAA_AAAA_AAAA_AAAA;
        self.words.iter().any(|&w| (w << 1) & w & ODD != 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = SignedIdx> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros();
                    bits &= bits - 1;
                    Some((wi as u32) * 64 + b)
                }
            })
        })
    }

    pub fn with(&self, s: SignedIdx) -> LabelSet {
        let mut l = self.clone();
        l.insert(s);
        l
    }
}

/// The literal closure of a set of formulae: least set containing them,
/// closed under alpha/beta components, and containing `~f` for each `~D{A}f`.
/// Unlike the index, this keeps formulae verbatim (no sign collapsing).
pub fn closure(formulas: &[Arc<Formula>]) -> BTreeSet<Arc<Formula>> {
    let mut out: BTreeSet<Arc<Formula>> = BTreeSet::new();
    let mut work: Vec<Arc<Formula>> = formulas.to_vec();
    while let Some(f) = work.pop() {
        if !out.insert(f.clone()) {
            continue;
        }
        match classify(&f) {
            FormulaClass::Alpha(comps) | FormulaClass::Beta(comps) => {
                for c in comps {
                    if c != f {
                        work.push(c);
                    }
                }
            }
            FormulaClass::DiamondD(_, body) => work.push(not(body)),
            FormulaClass::Literal | FormulaClass::NegLiteral => {}
        }
    }
    out
}
