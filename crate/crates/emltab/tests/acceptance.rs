//! Acceptance suite: replays the worked examples exactly, pins the
//! cut-restriction counts, and runs the oracle-backed property checks over
//! a fixed seeded corpus. Each test prints one pass line on success.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use emltab::closure::{is_positive, ClosureIndex};
use emltab::expansion::{cs_expansions, full_expansions, CutMode};
use emltab::formula::{classify, Coalition, Formula, FormulaClass, Symbols};
use emltab::gen::{fixpoint_family, FormulaGen, GenParams};
use emltab::parse::parse;
use emltab::semantics::{
    brute_force_sat, check, eval_states, hintikka_from_tableau, partitions,
    pseudo_model_from_hintikka, verify_hintikka, KripkeStructure,
};
use emltab::tableau::{decide, Verdict};

const CORPUS_SEED: u64 = 0xE17AB;
const CORPUS_SIZE: usize = 500;

fn corpus() -> (Vec<Arc<Formula>>, Symbols) {
    let mut g = FormulaGen::new(GenParams::new(
        4,
        &["a", "b", "c"],
        &["p", "q"],
        CORPUS_SEED,
    ));
    let formulas = (0..CORPUS_SIZE).map(|_| g.next_formula()).collect();
    (formulas, g.symbols.clone())
}

#[test]
fn criterion_1_worked_example_replay() {
    let start = Instant::now();
    let mut sym = Symbols::new();
    let theta = vec![
        parse("~D{a,c}C{a,b}p", &mut sym).unwrap(),
        parse("C{a,b}(p & q)", &mut sym).unwrap(),
    ];
    let solved = decide(&theta, CutMode::Restricted);
    assert_eq!(solved.verdict, Verdict::Unsat);
    assert_eq!(solved.stats.states, 5, "initial tableau must have 5 states");
    assert_eq!(solved.stats.eliminated_e1, 1, "exactly one E1 removal");
    assert_eq!(solved.stats.eliminated_e2, 4, "exactly four E2 removals");
    assert_eq!(solved.n_surviving(), 0, "final graph must be empty");
    assert!(start.elapsed() < Duration::from_secs(1));
    println!("criterion 1 PASS: worked-example replay (unsat, 5 states, 1 E1 + 4 E2, empty final)");
}

#[test]
fn criterion_2_cut_necessity_replay() {
    let start = Instant::now();
    let mut sym = Symbols::new();
    let theta = vec![parse("~D{a,b}p & ~D{a,c}~D{a}p", &mut sym).unwrap()];
    for mode in [CutMode::Restricted, CutMode::Unrestricted] {
        let solved = decide(&theta, mode);
        assert_eq!(solved.verdict, Verdict::Unsat, "{mode:?} must refute");
        assert_eq!(
            solved.n_surviving(),
            3,
            "{mode:?} final graph must keep 3 states"
        );
    }
    let solved = decide(&theta, CutMode::NoCut);
    assert!(
        solved.verdict.is_sat(),
        "the no-cut diagnostic mode accepts this unsatisfiable input"
    );
    assert!(start.elapsed() < Duration::from_secs(1));
    println!("criterion 2 PASS: cut-necessity replay (unsat with cuts, 3-state final, sat without cuts)");
}

#[test]
fn criterion_3_cut_restriction_counts() {
    let mut sym = Symbols::new();
    let theta = parse("C{a,b}D{a}p -> ~C{b,c}D{b}p", &mut sym).unwrap();
    let fs = vec![theta];
    let ctx = ClosureIndex::build(&fs);
    let label = ctx.label_of(&fs);
    let unrestricted = cs_expansions(&ctx, &label, CutMode::Unrestricted);
    let restricted = cs_expansions(&ctx, &label, CutMode::Restricted);
    assert_eq!(unrestricted.len(), 35, "unrestricted cut expansion count");
    assert_eq!(restricted.len(), 8, "restricted cut expansion count");
    println!("criterion 3 PASS: cut-saturated expansion counts (35 unrestricted, 8 restricted)");
}

#[test]
fn criterion_4_fixpoint_validity_suite() {
    let mut sym = Symbols::new();
    let _ = parse("D{a,b,c}p", &mut sym).unwrap(); // register agents in order
    let a = sym.lookup_agent("a").unwrap();
    let b = sym.lookup_agent("b").unwrap();
    let c = sym.lookup_agent("c").unwrap();
    let coalitions = [
        Coalition::singleton(a),
        Coalition::from_agents([a, b]).unwrap(),
        Coalition::from_agents([a, b, c]).unwrap(),
    ];
    let bodies = [
        parse("p", &mut sym).unwrap(),
        parse("p & q", &mut sym).unwrap(),
        parse("D{a}p", &mut sym).unwrap(),
    ];
    let mut runs = 0;
    for &coal in &coalitions {
        for body in &bodies {
            let start = Instant::now();
            let f = fixpoint_family(coal, body.clone());
            let solved = decide(&[f], CutMode::Restricted);
            assert_eq!(
                solved.verdict,
                Verdict::Unsat,
                "fixpoint instance must be valid (negation unsat)"
            );
            assert!(start.elapsed() < Duration::from_secs(1));
            runs += 1;
        }
    }
    assert_eq!(runs, 9);
    println!("criterion 4 PASS: fixpoint validity suite (9 instances unsat)");
}

#[test]
fn criterion_5_soundness_oracle_on_corpus() {
    let start = Instant::now();
    let (formulas, sym) = corpus();
    let mut sat_count = 0usize;
    for f in &formulas {
        let solved = decide(std::slice::from_ref(f), CutMode::Restricted);
        let Verdict::Sat { witness } = solved.verdict else {
            continue;
        };
        sat_count += 1;
        let h = hintikka_from_tableau(&solved).expect("open tableau");
        let report = verify_hintikka(&h, &sym);
        // box agreement is checked in both directions along every edge
        assert!(
            report.pass(),
            "Hintikka conditions failed on a sat verdict: {report:?}"
        );
        let m = pseudo_model_from_hintikka(&h, &sym).expect("extraction");
        let w = solved
            .surviving_states()
            .position(|i| i == witness)
            .expect("witness survives");
        assert!(
            check(&m, &sym, f, w).unwrap(),
            "extracted pseudo-model must satisfy the input at the witness"
        );
    }
    assert!(sat_count > 0, "corpus must contain satisfiable formulas");
    assert!(start.elapsed() < Duration::from_secs(300));
    println!(
        "criterion 5 PASS: soundness oracle on {sat_count} sat verdicts (Hintikka + pseudo-model checks)"
    );
}

#[test]
fn criterion_6_brute_force_agreement() {
    let (formulas, sym) = corpus();
    let mut found = 0usize;
    for f in &formulas {
        if brute_force_sat(f, &sym, 3).unwrap().is_some() {
            found += 1;
            let solved = decide(std::slice::from_ref(f), CutMode::Restricted);
            assert!(
                solved.verdict.is_sat(),
                "oracle found a model but the tableau refuted the formula"
            );
        }
    }
    assert!(found > 0);
    println!("criterion 6 PASS: brute-force agreement on {found} oracle-found models");
}

#[test]
fn criterion_7_mode_consistency() {
    let (formulas, _) = corpus();
    for f in &formulas {
        let r = decide(std::slice::from_ref(f), CutMode::Restricted);
        let u = decide(std::slice::from_ref(f), CutMode::Unrestricted);
        assert_eq!(
            r.verdict.is_sat(),
            u.verdict.is_sat(),
            "restricted and unrestricted verdicts must agree"
        );
        assert!(
            r.stats.states <= u.stats.states,
            "restricted cuts must not create more states"
        );
    }
    println!("criterion 7 PASS: mode consistency over the corpus (verdicts agree, states monotone)");
}

fn random_model(rng: &mut ChaCha8Rng) -> KripkeStructure {
    let n = rng.gen_range(1..=3);
    let parts = partitions(n);
    let agent_parts: Vec<Vec<usize>> = (0..3)
        .map(|_| parts[rng.gen_range(0..parts.len())].clone())
        .collect();
    let valuation = (0..n)
        .map(|_| {
            let mut v = BTreeSet::new();
            if rng.gen_bool(0.5) {
                v.insert("p".to_string());
            }
            if rng.gen_bool(0.5) {
                v.insert("q".to_string());
            }
            v
        })
        .collect();
    KripkeStructure::cmaem(
        (0..n).map(|i| format!("s{i}")).collect(),
        vec!["a".into(), "b".into(), "c".into()],
        &agent_parts,
        valuation,
    )
    .unwrap()
}

fn subformulas(f: &Arc<Formula>, out: &mut Vec<Arc<Formula>>) {
    out.push(f.clone());
    match &**f {
        Formula::Atom(_) => {}
        Formula::Not(g) | Formula::Dist(_, g) | Formula::Common(_, g) => subformulas(g, out),
        Formula::And(l, r) => {
            subformulas(l, out);
            subformulas(r, out);
        }
    }
}

#[test]
fn criterion_8_decomposition_and_disjunction() {
    let mut g = FormulaGen::new(GenParams::new(
        4,
        &["a", "b", "c"],
        &["p", "q"],
        CORPUS_SEED ^ 0xD15C,
    ));
    let sym = g.symbols.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED ^ 0x30DE);
    for round in 0..200 {
        let f = g.next_formula();
        let m = random_model(&mut rng);

        // alpha formulas equal the conjunction of their components, beta
        // formulas the disjunction, at every state
        let mut subs = Vec::new();
        subformulas(&f, &mut subs);
        for sub in &subs {
            let truths = eval_states(&m, &sym, sub).unwrap();
            match classify(sub) {
                FormulaClass::Alpha(comps) => {
                    for s in 0..m.n_states() {
                        let conj = comps
                            .iter()
                            .all(|c| eval_states(&m, &sym, c).unwrap()[s]);
                        assert_eq!(truths[s], conj, "alpha decomposition at state {s}");
                    }
                }
                FormulaClass::Beta(comps) => {
                    for s in 0..m.n_states() {
                        let disj = comps
                            .iter()
                            .any(|c| eval_states(&m, &sym, c).unwrap()[s]);
                        assert_eq!(truths[s], disj, "beta decomposition at state {s}");
                    }
                }
                _ => {}
            }
        }

        // the conjunction of a set is equivalent to the disjunction over
        // the conjunctions of its expansions, with or without cuts
        let gamma: Vec<Arc<Formula>> = if round % 2 == 0 {
            vec![f.clone()]
        } else {
            vec![f.clone(), g.next_formula()]
        };
        let ctx = ClosureIndex::build(&gamma);
        let label = ctx.label_of(&gamma);
        let mut base_truths = Vec::with_capacity(ctx.n_bases());
        for b in 0..ctx.n_bases() {
            base_truths.push(eval_states(&m, &sym, ctx.base(b)).unwrap());
        }
        let member_true = |sf: u32, s: usize| -> bool {
            let t = base_truths[emltab::closure::base_of(sf)][s];
            if is_positive(sf) {
                t
            } else {
                !t
            }
        };
        for family in [
            full_expansions(&ctx, &label),
            cs_expansions(&ctx, &label, CutMode::Restricted),
        ] {
            for s in 0..m.n_states() {
                let lhs = label.iter().all(|sf| member_true(sf, s));
                let rhs = family
                    .iter()
                    .any(|delta| delta.iter().all(|sf| member_true(sf, s)));
                assert_eq!(lhs, rhs, "expansion disjunction at state {s}");
            }
        }
    }
    println!("criterion 8 PASS: decomposition and expansion-disjunction on 200 formula/model pairs");
}

#[test]
fn criterion_9_closure_size_bound() {
    let (formulas, _) = corpus();
    for f in &formulas {
        let ctx = ClosureIndex::build(std::slice::from_ref(f));
        // k counts the agents occurring in the formula, at least 1
        let k = (f.agent_bits().count_ones() as usize).max(1);
        let bound = 8 * k * f.size();
        assert!(
            ctx.ecl_size() <= bound,
            "extended closure size {} above 8*k*|f| = {bound}",
            ctx.ecl_size()
        );
    }
    println!("criterion 9 PASS: extended closure within 8*k*|formula| across the corpus");
}
