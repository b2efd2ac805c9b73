use emltab::*;
use emltab::expansion::*;
use emltab::tableau::*;
use emltab::closure::*;

fn main() {
    let mut sym = Symbols::new();
    let f = parse("C{a,b}D{a}p -> ~C{b,c}D{b}p", &mut sym).unwrap();
    let fs = vec![f];
    let ctx = ClosureIndex::build(&fs);
    let label = ctx.label_of(&fs);
    for mode in [CutMode::Unrestricted, CutMode::Restricted] {
        let fam = cs_expansions(&ctx, &label, mode);
        println!("== mode {:?}: {} members", mode, fam.len());
        for l in &fam {
            println!("  {}", ctx.render_label(l, &sym));
        }
    }

    // worked example initial tableau
    let mut sym = Symbols::new();
    let fs = vec![
        parse("~D{a,c}C{a,b}p", &mut sym).unwrap(),
        parse("C{a,b}(p & q)", &mut sym).unwrap(),
    ];
    let ctx = ClosureIndex::build(&fs);
    let input = ctx.label_of(&fs);
    let pre = build_pretableau(&ctx, input, CutMode::Restricted, &Budget::none()).unwrap();
    println!("== worked example: {} states, {} prestates", pre.states.len(), pre.prestates.len());
    for (i, s) in pre.states.iter().enumerate() {
        println!("  s{}: {}", i, ctx.render_label(s, &sym));
    }
    let edges = eliminate_prestates(&pre);
    for (f, chi, t) in &edges {
        println!("  s{} --{}--> s{}", f, ctx.render_signed(*chi, &sym), t);
    }
}
