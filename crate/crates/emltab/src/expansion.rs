//! Full expansions and cut-saturated expansions of a formula set.
//!
//! A set is expanded by saturating it under the local decomposition rules:
//! alpha formulae add all their components, beta formulae branch over their
//! components, and an eventuality `~C{A}f` whose branching was pre-empted by
//! an already-present component additionally spawns the variant containing
//! `~f`. Cut-saturation interleaves binary branching `F | ~F` on every
//! distributed- or common-knowledge subformula that meets the active cut
//! condition. Sets that acquire a contradictory pair are dropped the moment
//! they arise; the result is a deduplicated, canonically ordered family.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::closure::{
    base_of, negative, positive, ClosureIndex, LabelSet, SignedIdx, TriggerShape,
};
use crate::formula::Formula;
use std::sync::Arc;

/// Governs the cut rules used while saturating expansions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutMode {
    /// Cut only where the restrictive conditions C1/C2 hold.
    Restricted,
    /// Cut on every knowledge subformula of every member.
    Unrestricted,
    /// No cuts at all. Diagnostic only: the resulting decision procedure is
    /// incomplete for unsatisfiability (it can report sat on unsat inputs).
    NoCut,
}

impl CutMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CutMode::Restricted => "restricted",
            CutMode::Unrestricted => "unrestricted",
            CutMode::NoCut => "no-cut",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimedOut;

/// Wall-clock budget threaded through the saturation loops.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn none() -> Budget {
        Budget { deadline: None }
    }

    pub fn until(deadline: Instant) -> Budget {
        Budget {
            deadline: Some(deadline),
        }
    }

    fn check(&self) -> Result<(), TimedOut> {
        match self.deadline {
            Some(d) if Instant::now() > d => Err(TimedOut),
            _ => Ok(()),
        }
    }
}

#[derive(Clone)]
struct WorkSet {
    label: LabelSet,
    /// Base indices of eventualities whose beta rule already fired on this
    /// lineage; the rule is one-shot per set.
    handled: Vec<u64>,
}

impl WorkSet {
    fn handled_contains(&self, base: usize) -> bool {
        self.handled[base / 64] & (1u64 << (base % 64)) != 0
    }

    fn mark_handled(&mut self, base: usize) {
        self.handled[base / 64] |= 1u64 << (base % 64);
    }
}

/// The family of full expansions of a set (no cuts).
pub fn full_expansions(ctx: &ClosureIndex, gamma: &LabelSet) -> Vec<LabelSet> {
    expand(ctx, gamma, CutMode::NoCut, &Budget::none()).expect("no budget set")
}

/// The family of cut-saturated expansions of a set.
pub fn cs_expansions(ctx: &ClosureIndex, gamma: &LabelSet, mode: CutMode) -> Vec<LabelSet> {
    expand(ctx, gamma, mode, &Budget::none()).expect("no budget set")
}

pub fn expand(
    ctx: &ClosureIndex,
    gamma: &LabelSet,
    mode: CutMode,
    budget: &Budget,
) -> Result<Vec<LabelSet>, TimedOut> {
    let handled_words = ctx.n_bases().div_ceil(64).max(1);
    let mut stack = vec![WorkSet {
        label: gamma.clone(),
        handled: vec![0u64; handled_words],
    }];
    let mut out: BTreeSet<LabelSet> = BTreeSet::new();
    let mut steps = 0u32;

    'outer: while let Some(mut w) = stack.pop() {
        loop {
            steps += 1;
            if steps & 0xFF == 0 {
                budget.check()?;
            }
            if w.label.patently_inconsistent() {
                continue 'outer;
            }
            if alpha_saturate(ctx, &mut w.label) {
                continue; // recheck consistency
            }

            // eventualities first
            if let Some(s) = first_pending_eventuality(ctx, &w) {
                let comps = ctx.beta_comps(s).unwrap();
                let (_, neg_body) = ctx.eventuality(s).unwrap();
                if comps.iter().any(|&c| w.label.contains(c)) {
                    // branching pre-empted; spawn the ~f variant once
                    w.mark_handled(base_of(s));
                    if !w.label.contains(neg_body) {
                        let mut sib = w.clone();
                        sib.label.insert(neg_body);
                        stack.push(sib);
                    }
                    continue;
                }
                for &c in &comps {
                    let mut child = w.clone();
                    child.mark_handled(base_of(s));
                    child.label.insert(c);
                    stack.push(child);
                }
                continue 'outer;
            }

            // remaining beta formulae (negated conjunctions)
            if let Some(s) = first_unsatisfied_beta(ctx, &w.label) {
                for &c in &ctx.beta_comps(s).unwrap() {
                    let mut child = w.clone();
                    child.label.insert(c);
                    stack.push(child);
                }
                continue 'outer;
            }

            // cut branching, largest target first: deciding an outer
            // knowledge formula lets its eventuality branch before cuts on
            // its subformulae pre-empt that branching
            if let Some(base) = cut_target_bases(ctx, &w.label, mode).last().copied() {
                let mut with_pos = w.clone();
                with_pos.label.insert(positive(base));
                stack.push(with_pos);
                let mut with_neg = w;
                with_neg.label.insert(negative(base));
                stack.push(with_neg);
                continue 'outer;
            }

            out.insert(w.label);
            continue 'outer;
        }
    }
    Ok(out.into_iter().collect())
}

/// Adds alpha components of all members until nothing is missing. Returns
/// true if the label changed.
fn alpha_saturate(ctx: &ClosureIndex, label: &mut LabelSet) -> bool {
    let mut changed = false;
    loop {
        let mut grew = false;
        for s in label.clone().iter() {
            if let Some(comps) = ctx.alpha_comps(s) {
                for c in comps {
                    if !label.contains(c) {
                        label.insert(c);
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            return changed;
        }
        changed = true;
        if label.patently_inconsistent() {
            return true;
        }
    }
}

fn first_pending_eventuality(ctx: &ClosureIndex, w: &WorkSet) -> Option<SignedIdx> {
    w.label
        .iter()
        .find(|&s| ctx.eventuality(s).is_some() && !w.handled_contains(base_of(s)))
}

fn first_unsatisfied_beta(ctx: &ClosureIndex, label: &LabelSet) -> Option<SignedIdx> {
    label.iter().find(|&s| {
        ctx.eventuality(s).is_none()
            && ctx
                .beta_comps(s)
                .is_some_and(|comps| comps.iter().all(|&c| !label.contains(c)))
    })
}

/// Base indices of knowledge formulae eligible for a cut in this set: those
/// occurring as a subformula of some member, not yet decided either way, and
/// passing the mode's condition. Ascending base order.
pub fn cut_target_bases(ctx: &ClosureIndex, label: &LabelSet, mode: CutMode) -> Vec<usize> {
    if mode == CutMode::NoCut {
        return Vec::new();
    }
    let diamonds: Vec<_> = label.iter().filter_map(|s| ctx.diamond(s)).collect();
    let mut out: BTreeSet<usize> = BTreeSet::new();
    for s in label.iter() {
        let shape = ctx.trigger_shape(s);
        for sub in ctx.dc_subs(base_of(s)) {
            if label.contains(positive(sub.base)) || label.contains(negative(sub.base)) {
                continue;
            }
            let eligible = match mode {
                CutMode::Unrestricted => true,
                CutMode::Restricted => match (sub.is_common, shape) {
                    // C11: cut on D{A}f inside a (possibly negated) box D{B}g
                    // when some ~D{E}e is present with A and B inside E.
                    (false, Some(TriggerShape::DistEither(b))) => diamonds
                        .iter()
                        .any(|(e, _)| sub.coalition.is_subset(*e) && b.is_subset(*e)),
                    // C12: cut on D{A}f inside ~C{B}g when A is inside E and
                    // B meets E.
                    (false, Some(TriggerShape::NegCommon(b))) => diamonds
                        .iter()
                        .any(|(e, _)| sub.coalition.is_subset(*e) && b.intersects(*e)),
                    // C21: cut on C{A}f inside a box D{B}g when B is inside E
                    // and A meets E.
                    (true, Some(TriggerShape::DistEither(b))) => diamonds
                        .iter()
                        .any(|(e, _)| b.is_subset(*e) && sub.coalition.intersects(*e)),
                    // C22: cut on C{A}f inside ~C{B}g when both meet E.
                    (true, Some(TriggerShape::NegCommon(b))) => diamonds.iter().any(|(e, _)| {
                        sub.coalition.intersects(*e) && b.intersects(*e)
                    }),
                    (_, None) => false,
                },
                CutMode::NoCut => false,
            };
            if eligible {
                out.insert(sub.base);
            }
        }
    }
    out.into_iter().collect()
}

/// Cut targets as formulae, for inspection.
pub fn cut_targets(ctx: &ClosureIndex, label: &LabelSet, mode: CutMode) -> Vec<Arc<Formula>> {
    cut_target_bases(ctx, label, mode)
        .into_iter()
        .map(|b| ctx.base(b).clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Symbols;
    use crate::parse::parse;

    fn setup(inputs: &[&str]) -> (Symbols, ClosureIndex, LabelSet) {
        let mut sym = Symbols::new();
        let fs: Vec<_> = inputs.iter().map(|s| parse(s, &mut sym).unwrap()).collect();
        let ctx = ClosureIndex::build(&fs);
        let label = ctx.label_of(&fs);
        (sym, ctx, label)
    }

    fn family_strings(ctx: &ClosureIndex, sym: &Symbols, fam: &[LabelSet]) -> Vec<Vec<String>> {
        fam.iter()
            .map(|l| l.iter().map(|s| ctx.render_signed(s, sym)).collect())
            .collect()
    }

    #[test]
    fn contradictory_input_has_no_expansions() {
        let (_, ctx, label) = setup(&["p", "~p"]);
        assert!(full_expansions(&ctx, &label).is_empty());
    }

    #[test]
    fn conjunction_expands_deterministically() {
        let (mut sym, ctx, label) = setup(&["p & q"]);
        let fam = full_expansions(&ctx, &label);
        assert_eq!(fam.len(), 1);
        let expect = ctx.label_of(&[
            parse("p & q", &mut sym).unwrap(),
            parse("p", &mut sym).unwrap(),
            parse("q", &mut sym).unwrap(),
        ]);
        assert_eq!(fam[0], expect);
    }

    #[test]
    fn eventuality_branches_over_all_components() {
        // ~C{a}p branches into the ~p child and the ~D{a}C{a}p child; the
        // beta rule is one-shot per lineage, so no ~p-augmented variant of
        // the second child is produced here.
        let (mut sym, ctx, label) = setup(&["~C{a}p"]);
        let fam = full_expansions(&ctx, &label);
        let l1 = ctx.label_of(&[
            parse("~C{a}p", &mut sym).unwrap(),
            parse("~p", &mut sym).unwrap(),
        ]);
        let l2 = ctx.label_of(&[
            parse("~C{a}p", &mut sym).unwrap(),
            parse("~D{a}C{a}p", &mut sym).unwrap(),
        ]);
        assert_eq!(fam, vec![l2.clone(), l1.clone()].into_iter().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn preempted_eventuality_spawns_neg_body_variant() {
        // here ~D{a}C{a}p is already present, so the beta rule is blocked
        // and the ~p variant is added alongside
        let (mut sym, ctx, label) = setup(&["~C{a}p", "~D{a}C{a}p"]);
        let fam = full_expansions(&ctx, &label);
        assert_eq!(fam.len(), 2);
        let with_neg_p = ctx.label_of(&[
            parse("~C{a}p", &mut sym).unwrap(),
            parse("~D{a}C{a}p", &mut sym).unwrap(),
            parse("~p", &mut sym).unwrap(),
        ]);
        assert!(fam.contains(&label));
        assert!(fam.contains(&with_neg_p));
    }

    #[test]
    fn cut_targets_on_plain_conjunction_are_empty() {
        let (_, ctx, label) = setup(&["p & q"]);
        let fam = full_expansions(&ctx, &label);
        for mode in [CutMode::Restricted, CutMode::Unrestricted, CutMode::NoCut] {
            assert!(cut_target_bases(&ctx, &fam[0], mode).is_empty());
        }
    }

    #[test]
    fn cut_target_via_c11() {
        // after expanding the cut-necessity example's input, D{a}p is an
        // undecided subformula of ~D{a,c}~D{a}p, and that diamond itself
        // provides the witness E = {a,c}
        let (mut sym, ctx, _) = setup(&["~D{a,b}p & ~D{a,c}~D{a}p"]);
        let phi = ctx.label_of(&[
            parse("~D{a,b}p & ~D{a,c}~D{a}p", &mut sym).unwrap(),
            parse("~D{a,b}p", &mut sym).unwrap(),
            parse("~D{a,c}~D{a}p", &mut sym).unwrap(),
        ]);
        let targets = cut_targets(&ctx, &phi, CutMode::Restricted);
        let dap = parse("D{a}p", &mut sym).unwrap();
        assert_eq!(targets, vec![dap]);
        assert!(cut_targets(&ctx, &phi, CutMode::NoCut).is_empty());
    }

    #[test]
    fn unrestricted_targets_of_mode_comparison_input() {
        let (mut sym, ctx, label) = setup(&["C{a,b}D{a}p -> ~C{b,c}D{b}p"]);
        let targets = cut_targets(&ctx, &label, CutMode::Unrestricted);
        let expect: BTreeSet<_> = [
            parse("C{a,b}D{a}p", &mut sym).unwrap(),
            parse("C{b,c}D{b}p", &mut sym).unwrap(),
            parse("D{a}p", &mut sym).unwrap(),
            parse("D{b}p", &mut sym).unwrap(),
        ]
        .into_iter()
        .collect();
        assert_eq!(targets.into_iter().collect::<BTreeSet<_>>(), expect);
    }

    #[test]
    fn cs_expansion_counts_for_mode_comparison_input() {
        let (_, ctx, label) = setup(&["C{a,b}D{a}p -> ~C{b,c}D{b}p"]);
        assert_eq!(cs_expansions(&ctx, &label, CutMode::Unrestricted).len(), 35);
        assert_eq!(cs_expansions(&ctx, &label, CutMode::Restricted).len(), 8);
    }

    #[test]
    fn singleton_atom_is_its_own_expansion() {
        let (_, ctx, label) = setup(&["p"]);
        for mode in [CutMode::Restricted, CutMode::Unrestricted, CutMode::NoCut] {
            assert_eq!(cs_expansions(&ctx, &label, mode), vec![label.clone()]);
        }
    }

    #[test]
    fn members_contain_input_and_are_fully_expanded() {
        let (_, ctx, label) = setup(&["~C{a,b}(p & q) & D{b}p"]);
        for mode in [CutMode::Restricted, CutMode::Unrestricted, CutMode::NoCut] {
            let fam = cs_expansions(&ctx, &label, mode);
            assert!(!fam.is_empty());
            for delta in &fam {
                assert!(label.is_subset(delta));
                assert!(!delta.patently_inconsistent());
                for s in delta.iter() {
                    if let Some(comps) = ctx.alpha_comps(s) {
                        assert!(comps.iter().all(|&c| delta.contains(c)));
                    }
                    if let Some(comps) = ctx.beta_comps(s) {
                        assert!(comps.iter().any(|&c| delta.contains(c)));
                    }
                }
            }
        }
    }

    #[test]
    fn identical_inputs_yield_identical_families() {
        let (_, ctx, label) = setup(&["~C{a,b}(p & q) | D{b}(p & ~q)"]);
        let a = cs_expansions(&ctx, &label, CutMode::Restricted);
        let b = cs_expansions(&ctx, &label, CutMode::Restricted);
        assert_eq!(a, b);
    }

    #[test]
    #[allow(clippy::mutable_key_type)]
    fn family_is_sorted_and_deduplicated() {
        let (_, ctx, label) = setup(&["~(p & q) & ~(q & p)"]);
        let fam = cs_expansions(&ctx, &label, CutMode::Restricted);
        let set: BTreeSet<_> = fam.iter().cloned().collect();
        assert_eq!(set.len(), fam.len());
        assert!(fam.windows(2).all(|w| w[0] < w[1]));
    }
}
