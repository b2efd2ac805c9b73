//! The three-phase tableau procedure: pretableau construction (rules SR and
//! DR), prestate elimination (PR), and state elimination (E1 and E2 with
//! realization marking), followed by the open/closed verdict.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::closure::{base_of, ClosureIndex, LabelSet, SignedIdx};
use crate::expansion::{expand, Budget, CutMode, TimedOut};
use crate::formula::{Coalition, Formula, Symbols};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    State,
    Prestate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElimRule {
    /// Missing successor for one of the state's diamonds.
    E1,
    /// The eventuality (signed index) is not realized at the state.
    E2(SignedIdx),
}

#[derive(Debug, Clone, Copy)]
pub struct Elimination {
    pub state: usize,
    pub rule: ElimRule,
    /// Elimination cycle in which the removal happened; 0 is the initial
    /// E1 sweep.
    pub stage: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub prestates: usize,
    pub states: usize,
    /// States reachable from the input prestate by one dashed edge.
    pub initial_states: usize,
    pub eliminated_e1: usize,
    pub eliminated_e2: usize,
    pub cycles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat { witness: usize },
    Unsat,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat { .. })
    }
}

/// Everything produced by a run: the pretableau, the initial tableau, the
/// surviving states, the elimination log and the verdict.
#[derive(Debug)]
pub struct Solved {
    pub ctx: Arc<ClosureIndex>,
    pub mode: CutMode,
    pub input: LabelSet,
    pub prestates: Vec<LabelSet>,
    pub states: Vec<LabelSet>,
    /// Dashed edges: `st(prestate)`.
    pub dashed: Vec<Vec<usize>>,
    /// Solid pretableau edges `state --chi--> prestate`.
    pub solid_pre: Vec<(usize, SignedIdx, usize)>,
    /// Initial-tableau edges `state --chi--> state`.
    pub edges: Vec<(usize, SignedIdx, usize)>,
    /// Survival mask over `states` after state elimination.
    pub alive: Vec<bool>,
    pub log: Vec<Elimination>,
    pub verdict: Verdict,
    pub stats: Stats,
}

/// Incremental pretableau under construction.
pub struct Pretableau<'c> {
    pub ctx: &'c ClosureIndex,
    pub mode: CutMode,
    pub prestates: Vec<LabelSet>,
    prestate_ix: HashMap<LabelSet, usize>,
    pub states: Vec<LabelSet>,
    state_ix: HashMap<LabelSet, usize>,
    pub dashed: Vec<Vec<usize>>,
    pub solid_pre: Vec<(usize, SignedIdx, usize)>,
    sr_done: Vec<bool>,
    dr_done: Vec<bool>,
    pending_prestates: VecDeque<usize>,
    pending_states: VecDeque<usize>,
}

impl<'c> Pretableau<'c> {
    pub fn new(ctx: &'c ClosureIndex, input: LabelSet, mode: CutMode) -> Pretableau<'c> {
        let mut t = Pretableau {
            ctx,
            mode,
            prestates: Vec::new(),
            prestate_ix: HashMap::new(),
            states: Vec::new(),
            state_ix: HashMap::new(),
            dashed: Vec::new(),
            solid_pre: Vec::new(),
            sr_done: Vec::new(),
            dr_done: Vec::new(),
            pending_prestates: VecDeque::new(),
            pending_states: VecDeque::new(),
        };
        t.intern_prestate(input);
        t
    }

    fn intern_prestate(&mut self, label: LabelSet) -> usize {
        if let Some(&i) = self.prestate_ix.get(&label) {
            return i;
        }
        let i = self.prestates.len();
        self.prestate_ix.insert(label.clone(), i);
        self.prestates.push(label);
        self.dashed.push(Vec::new());
        self.sr_done.push(false);
        self.pending_prestates.push_back(i);
        i
    }

    fn intern_state(&mut self, label: LabelSet) -> usize {
        if let Some(&i) = self.state_ix.get(&label) {
            return i;
        }
        let i = self.states.len();
        self.state_ix.insert(label.clone(), i);
        self.states.push(label);
        self.dr_done.push(false);
        self.pending_states.push_back(i);
        i
    }

    /// Rule SR: expand a prestate into its cut-saturated expansions, reusing
    /// states with identical labels.
    pub fn apply_sr(&mut self, prestate: usize, budget: &Budget) -> Result<(), TimedOut> {
        debug_assert!(!self.sr_done[prestate]);
        self.sr_done[prestate] = true;
        let family = expand(self.ctx, &self.prestates[prestate], self.mode, budget)?;
        for delta in family {
            let s = self.intern_state(delta);
            if !self.dashed[prestate].contains(&s) {
                self.dashed[prestate].push(s);
            }
        }
        Ok(())
    }

    /// Rule DR: for one diamond `chi = ~D{A}f` of a state, build the
    /// successor prestate and link it with a solid edge labelled `chi`.
    pub fn apply_dr(&mut self, state: usize, chi: SignedIdx) -> usize {
        let (coalition, neg_body) = self.ctx.diamond(chi).expect("chi must be a diamond");
        let mut gamma = self.ctx.empty_label();
        gamma.insert(neg_body);
        for s in self.states[state].clone().iter() {
            if s == chi {
                continue;
            }
            let base = base_of(s);
            if let Some(c) = self.ctx.dist_coalition(base) {
                if c.is_subset(coalition) {
                    gamma.insert(s); // D{A'}g or ~D{A'}g with A' inside A
                }
            } else if let Some((c, _)) = self.ctx.eventuality(s) {
                if c.intersects(coalition) {
                    gamma.insert(s); // ~C{A'}g with A' meeting A
                }
            }
        }
        let p = self.intern_prestate(gamma);
        self.solid_pre.push((state, chi, p));
        p
    }

    fn apply_dr_all(&mut self, state: usize) {
        debug_assert!(!self.dr_done[state]);
        self.dr_done[state] = true;
        let diamonds: Vec<SignedIdx> = self.states[state]
            .iter()
            .filter(|&s| self.ctx.diamond(s).is_some())
            .collect();
        for chi in diamonds {
            self.apply_dr(state, chi);
        }
    }

    /// Alternates SR over new prestates and DR over new states to completion.
    pub fn run(&mut self, budget: &Budget) -> Result<(), TimedOut> {
        loop {
            budget.check_coarse()?;
            if let Some(p) = self.pending_prestates.pop_front() {
                self.apply_sr(p, budget)?;
            } else if let Some(s) = self.pending_states.pop_front() {
                self.apply_dr_all(s);
            } else {
                return Ok(());
            }
        }
    }

    pub fn st(&self, prestate: usize) -> &[usize] {
        &self.dashed[prestate]
    }

    pub fn state_id(&self, label: &LabelSet) -> Option<usize> {
        self.state_ix.get(label).copied()
    }

    pub fn prestate_id(&self, label: &LabelSet) -> Option<usize> {
        self.prestate_ix.get(label).copied()
    }
}

impl Budget {
    fn check_coarse(&self) -> Result<(), TimedOut> {
        match self.deadline {
            Some(d) if Instant::now() > d => Err(TimedOut),
            _ => Ok(()),
        }
    }
}

/// Rule PR: drop all prestates, rerouting each solid edge through the
/// expansions of its target prestate.
pub fn eliminate_prestates(pre: &Pretableau<'_>) -> Vec<(usize, SignedIdx, usize)> {
    let mut edges = Vec::new();
    for &(from, chi, p) in &pre.solid_pre {
        for &to in &pre.dashed[p] {
            edges.push((from, chi, to));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Marks all states at which the eventuality `xi = ~C{A}f` is realized:
/// those containing `~f`, then transitively those containing `xi` with an
/// edge labelled `~D{a}g`, `a` in `A`, into a marked state.
pub fn realization_marking(
    ctx: &ClosureIndex,
    states: &[LabelSet],
    edges: &[(usize, SignedIdx, usize)],
    alive: &[bool],
    xi: SignedIdx,
) -> Vec<bool> {
    let (coalition, neg_body) = ctx.eventuality(xi).expect("xi must be an eventuality");
    let mut marked: Vec<bool> = states
        .iter()
        .enumerate()
        .map(|(i, l)| alive[i] && l.contains(neg_body))
        .collect();
    loop {
        let mut changed = false;
        for &(from, chi, to) in edges {
            if marked[from] || !alive[from] || !alive[to] || !marked[to] {
                continue;
            }
            if !states[from].contains(xi) {
                continue;
            }
            let (c, _) = ctx.diamond(chi).expect("edge labels are diamonds");
            if c.len() == 1 && c.is_subset(coalition) {
                marked[from] = true;
                changed = true;
            }
        }
        if !changed {
            return marked;
        }
    }
}

fn e1_sweep(
    ctx: &ClosureIndex,
    states: &[LabelSet],
    edges: &[(usize, SignedIdx, usize)],
    alive: &mut [bool],
    log: &mut Vec<Elimination>,
    stage: usize,
) -> bool {
    let mut removed_any = false;
    loop {
        let mut removed = false;
        'states: for i in 0..states.len() {
            if !alive[i] {
                continue;
            }
            for chi in states[i].iter() {
                if ctx.diamond(chi).is_none() {
                    continue;
                }
                let has_successor = edges
                    .iter()
                    .any(|&(f, c, t)| f == i && c == chi && alive[t]);
                if !has_successor {
                    alive[i] = false;
                    log.push(Elimination {
                        state: i,
                        rule: ElimRule::E1,
                        stage,
                    });
                    removed = true;
                    continue 'states;
                }
            }
        }
        if !removed {
            return removed_any;
        }
        removed_any = true;
    }
}

/// The state elimination phase: an initial E1 sweep, then cycles that, for
/// each eventuality in turn, remove every state where it is unrealized (E2)
/// and re-run E1 to exhaustion, until a full cycle removes nothing.
pub fn eliminate_states(
    ctx: &ClosureIndex,
    states: &[LabelSet],
    edges: &[(usize, SignedIdx, usize)],
) -> (Vec<bool>, Vec<Elimination>, usize) {
    let mut alive = vec![true; states.len()];
    let mut log = Vec::new();

    // eventualities occurring in the initial tableau, canonical order
    let eventualities: Vec<SignedIdx> = ctx
        .common_bases()
        .iter()
        .map(|&b| crate::closure::negative(b))
        .filter(|&xi| states.iter().any(|l| l.contains(xi)))
        .collect();

    e1_sweep(ctx, states, edges, &mut alive, &mut log, 0);
    let mut cycles = 0;
    loop {
        cycles += 1;
        let mut any = false;
        for &xi in &eventualities {
            let marked = realization_marking(ctx, states, edges, &alive, xi);
            for i in 0..states.len() {
                if alive[i] && states[i].contains(xi) && !marked[i] {
                    alive[i] = false;
                    log.push(Elimination {
                        state: i,
                        rule: ElimRule::E2(xi),
                        stage: cycles,
                    });
                    any = true;
                }
            }
            any |= e1_sweep(ctx, states, edges, &mut alive, &mut log, cycles);
        }
        if !any || eventualities.is_empty() {
            break;
        }
    }
    (alive, log, cycles)
}

/// Builds the pretableau for an input label set.
pub fn build_pretableau<'c>(
    ctx: &'c ClosureIndex,
    input: LabelSet,
    mode: CutMode,
    budget: &Budget,
) -> Result<Pretableau<'c>, TimedOut> {
    let mut pre = Pretableau::new(ctx, input, mode);
    pre.run(budget)?;
    Ok(pre)
}

/// Runs the full procedure on a set of formulae.
pub fn decide(formulas: &[Arc<Formula>], mode: CutMode) -> Solved {
    decide_with_budget(formulas, mode, &Budget::none()).expect("no budget set")
}

pub fn decide_with_budget(
    formulas: &[Arc<Formula>],
    mode: CutMode,
    budget: &Budget,
) -> Result<Solved, TimedOut> {
    assert!(!formulas.is_empty(), "empty input set");
    let ctx = Arc::new(ClosureIndex::build(formulas));
    let input = ctx.label_of(formulas);
    solve(ctx, input, mode, budget)
}

pub fn solve(
    ctx: Arc<ClosureIndex>,
    input: LabelSet,
    mode: CutMode,
    budget: &Budget,
) -> Result<Solved, TimedOut> {
    let mut pre = build_pretableau(&ctx, input.clone(), mode, budget)?;
    let edges = eliminate_prestates(&pre);
    let (alive, log, cycles) = eliminate_states(&ctx, &pre.states, &edges);
    let (prestates, states, dashed, solid_pre) = (
        std::mem::take(&mut pre.prestates),
        std::mem::take(&mut pre.states),
        std::mem::take(&mut pre.dashed),
        std::mem::take(&mut pre.solid_pre),
    );
    drop(pre);

    let verdict = states
        .iter()
        .enumerate()
        .find(|(i, l)| alive[*i] && input.is_subset(l))
        .map(|(i, _)| Verdict::Sat { witness: i })
        .unwrap_or(Verdict::Unsat);

    let stats = Stats {
        prestates: prestates.len(),
        states: states.len(),
        initial_states: dashed[0].len(),
        eliminated_e1: log.iter().filter(|e| e.rule == ElimRule::E1).count(),
        eliminated_e2: log
            .iter()
            .filter(|e| matches!(e.rule, ElimRule::E2(_)))
            .count(),
        cycles,
    };

    Ok(Solved {
        ctx,
        mode,
        input,
        prestates,
        states,
        dashed,
        solid_pre,
        edges,
        alive,
        log,
        verdict,
        stats,
    })
}

impl Solved {
    pub fn surviving_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.alive[i])
    }

    pub fn n_surviving(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// Surviving edges of the final tableau.
    pub fn final_edges(&self) -> impl Iterator<Item = (usize, SignedIdx, usize)> + '_ {
        self.edges
            .iter()
            .copied()
            .filter(|&(f, _, t)| self.alive[f] && self.alive[t])
    }

    /// Coalition of the diamond labelling an edge.
    pub fn edge_coalition(&self, chi: SignedIdx) -> Coalition {
        self.ctx.diamond(chi).expect("edge labels are diamonds").0
    }

    pub fn trace(&self, sym: &Symbols) -> String {
        let mut out = String::new();
        for e in &self.log {
            let rule = match e.rule {
                ElimRule::E1 => "E1".to_string(),
                ElimRule::E2(xi) => format!("E2({})", self.ctx.render_signed(xi, sym)),
            };
            out.push_str(&format!(
                "stage {}: {} removed s{} {}\n",
                e.stage,
                rule,
                e.state,
                self.ctx.render_label(&self.states[e.state], sym)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pretableau,
    Initial,
    Final,
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz export of one phase of the run. States are solid boxes,
/// prestates dashed boxes; dashed edges are unlabeled, solid edges carry
/// their diamond formula. In the final phase eliminated states are greyed
/// and annotated with the rule that removed them.
pub fn to_dot(solved: &Solved, phase: Phase, sym: &Symbols) -> String {
    let ctx = &solved.ctx;
    let mut out = String::from("digraph tableau {\n  rankdir=TB;\n  node [shape=box];\n");
    let state_label = |i: usize| dot_escape(&ctx.render_label(&solved.states[i], sym));
    match phase {
        Phase::Pretableau => {
            for (i, l) in solved.prestates.iter().enumerate() {
                out.push_str(&format!(
                    "  p{} [style=dashed, label=\"{}\"];\n",
                    i,
                    dot_escape(&ctx.render_label(l, sym))
                ));
            }
            for i in 0..solved.states.len() {
                out.push_str(&format!("  s{} [label=\"{}\"];\n", i, state_label(i)));
            }
            for (p, targets) in solved.dashed.iter().enumerate() {
                for &s in targets {
                    out.push_str(&format!("  p{p} -> s{s} [style=dashed];\n"));
                }
            }
            for &(s, chi, p) in &solved.solid_pre {
                out.push_str(&format!(
                    "  s{} -> p{} [label=\"{}\"];\n",
                    s,
                    p,
                    dot_escape(&ctx.render_signed(chi, sym))
                ));
            }
        }
        Phase::Initial => {
            for i in 0..solved.states.len() {
                out.push_str(&format!("  s{} [label=\"{}\"];\n", i, state_label(i)));
            }
            for &(f, chi, t) in &solved.edges {
                out.push_str(&format!(
                    "  s{} -> s{} [label=\"{}\"];\n",
                    f,
                    t,
                    dot_escape(&ctx.render_signed(chi, sym))
                ));
            }
        }
        Phase::Final => {
            for i in 0..solved.states.len() {
                if solved.alive[i] {
                    out.push_str(&format!("  s{} [label=\"{}\"];\n", i, state_label(i)));
                } else {
                    let e = solved
                        .log
                        .iter()
                        .find(|e| e.state == i)
                        .expect("dead state has a log entry");
                    let rule = match e.rule {
                        ElimRule::E1 => "E1".to_string(),
                        ElimRule::E2(xi) => format!("E2({})", ctx.render_signed(xi, sym)),
                    };
                    out.push_str(&format!(
                        "  s{} [color=gray, fontcolor=gray, label=\"{}\\nremoved by {}\"];\n",
                        i,
                        state_label(i),
                        dot_escape(&rule)
                    ));
                }
            }
            for &(f, chi, t) in &solved.edges {
                let style = if solved.alive[f] && solved.alive[t] {
                    String::new()
                } else {
                    ", color=gray".to_string()
                };
                out.push_str(&format!(
                    "  s{} -> s{} [label=\"{}\"{}];\n",
                    f,
                    t,
                    dot_escape(&ctx.render_signed(chi, sym)),
                    style
                ));
            }
        }
    }
    out.push_str("}\n");
    out
}
