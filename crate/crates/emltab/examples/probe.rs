use emltab::expansion::CutMode;
use emltab::gen::{FormulaGen, GenParams};
use emltab::semantics::*;
use emltab::tableau::decide;
use std::time::Instant;

fn main() {
    let mut g = FormulaGen::new(GenParams::new(4, &["a", "b", "c"], &["p", "q"], 0xE17AB));
    let corpus: Vec<_> = (0..500).map(|_| g.next_formula()).collect();
    let sym = g.symbols.clone();

    let t0 = Instant::now();
    let mut max_states = 0usize;
    let mut max_ecl = 0usize;
    let mut sat_n = 0usize;
    for f in &corpus {
        let s = decide(std::slice::from_ref(f), CutMode::Restricted);
        max_states = max_states.max(s.stats.states);
        max_ecl = max_ecl.max(s.ctx.ecl_size());
        if s.verdict.is_sat() { sat_n += 1; }
    }
    println!("restricted decide: {:?}, max_states={max_states} max_ecl={max_ecl} sat={sat_n}", t0.elapsed());

    let t0 = Instant::now();
    let mut max_states_u = 0usize;
    for f in &corpus {
        let s = decide(std::slice::from_ref(f), CutMode::Unrestricted);
        max_states_u = max_states_u.max(s.stats.states);
    }
    println!("unrestricted decide: {:?}, max_states={max_states_u}", t0.elapsed());

    let t0 = Instant::now();
    let mut extract_fail = 0;
    for f in &corpus {
        let s = decide(std::slice::from_ref(f), CutMode::Restricted);
        if s.verdict.is_sat() {
            let h = hintikka_from_tableau(&s).unwrap();
            if !verify_hintikka(&h, &sym).pass() { extract_fail += 1; }
            match pseudo_model_from_hintikka(&h, &sym) {
                Ok(m) => {
                    let emltab::tableau::Verdict::Sat { witness } = s.verdict else { unreachable!() };
                    let w = s.surviving_states().position(|i| i == witness).unwrap();
                    if !check(&m, &sym, f, w).unwrap() { extract_fail += 1; }
                }
                Err(e) => { println!("extract err: {e}"); extract_fail += 1; }
            }
        }
    }
    println!("extraction+verify+check: {:?}, failures={extract_fail}", t0.elapsed());

    let t0 = Instant::now();
    let mut found = 0usize;
    let mut disagree = 0usize;
    for f in &corpus {
        if let Some((_m, _s)) = brute_force_sat(f, &sym, 3).unwrap() {
            found += 1;
            let s = decide(std::slice::from_ref(f), CutMode::Restricted);
            if !s.verdict.is_sat() { disagree += 1; }
        }
    }
    println!("brute force(3): {:?}, found={found} disagreements={disagree}", t0.elapsed());
}
