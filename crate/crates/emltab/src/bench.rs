//! Benchmark runner: solves a corpus under one or more cut modes and
//! reports per-run state counts and timings as CSV.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::expansion::{Budget, CutMode};
use crate::formula::{render, Formula, Symbols};
use crate::tableau::{decide_with_budget, Verdict};

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchVerdict {
    Sat,
    Unsat,
    Timeout,
}

impl BenchVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchVerdict::Sat => "sat",
            BenchVerdict::Unsat => "unsat",
            BenchVerdict::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub formula: String,
    pub mode: CutMode,
    pub verdict: BenchVerdict,
    pub states: usize,
    pub initial_states: usize,
    pub eliminated_e1: usize,
    pub eliminated_e2: usize,
    pub ecl_size: usize,
    pub millis: u128,
}

#[derive(Debug, Clone, Default)]
pub struct BenchSummary {
    pub total_runs: usize,
    pub timeouts: usize,
    /// Formula indices where restricted and unrestricted runs disagreed on
    /// the verdict; any entry here is a bug, both modes are complete.
    pub mode_disagreements: Vec<usize>,
}

/// Solves every corpus formula under every mode. A timed-out run is
/// recorded as such and the rest of the corpus continues.
pub fn run_bench(
    corpus: &[Arc<Formula>],
    sym: &Symbols,
    modes: &[CutMode],
    timeout: Duration,
) -> (Vec<BenchRecord>, BenchSummary) {
    let mut records = Vec::new();
    let mut summary = BenchSummary::default();
    for (i, f) in corpus.iter().enumerate() {
        let mut verdicts: Vec<(CutMode, BenchVerdict)> = Vec::new();
        for &mode in modes {
            let start = Instant::now();
            let budget = Budget::until(start + timeout);
            let rec = match decide_with_budget(std::slice::from_ref(f), mode, &budget) {
                Ok(solved) => BenchRecord {
                    formula: render(f, sym),
                    mode,
                    verdict: match solved.verdict {
                        Verdict::Sat { .. } => BenchVerdict::Sat,
                        Verdict::Unsat => BenchVerdict::Unsat,
                    },
                    states: solved.stats.states,
                    initial_states: solved.stats.initial_states,
                    eliminated_e1: solved.stats.eliminated_e1,
                    eliminated_e2: solved.stats.eliminated_e2,
                    ecl_size: solved.ctx.ecl_size(),
                    millis: start.elapsed().as_millis(),
                },
                Err(_) => {
                    summary.timeouts += 1;
                    BenchRecord {
                        formula: render(f, sym),
                        mode,
                        verdict: BenchVerdict::Timeout,
                        states: 0,
                        initial_states: 0,
                        eliminated_e1: 0,
                        eliminated_e2: 0,
                        ecl_size: 0,
                        millis: start.elapsed().as_millis(),
                    }
                }
            };
            verdicts.push((mode, rec.verdict));
            records.push(rec);
            summary.total_runs += 1;
        }
        let restricted = verdicts
            .iter()
            .find(|(m, _)| *m == CutMode::Restricted)
            .map(|(_, v)| *v);
        let unrestricted = verdicts
            .iter()
            .find(|(m, _)| *m == CutMode::Unrestricted)
            .map(|(_, v)| *v);
        if let (Some(r), Some(u)) = (restricted, unrestricted) {
            if r != BenchVerdict::Timeout && u != BenchVerdict::Timeout && r != u {
                summary.mode_disagreements.push(i);
            }
        }
    }
    (records, summary)
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn render_csv(records: &[BenchRecord]) -> String {
    let mut out =
        String::from("formula,mode,verdict,states,eliminated_e1,eliminated_e2,ecl_size,millis\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_quote(&r.formula),
            r.mode.as_str(),
            r.verdict.as_str(),
            r.states,
            r.eliminated_e1,
            r.eliminated_e2,
            r.ecl_size,
            r.millis
        ));
    }
    out
}

pub fn render_summary(records: &[BenchRecord], summary: &BenchSummary) -> String {
    let mut out = String::new();
    for mode in [CutMode::Restricted, CutMode::Unrestricted, CutMode::NoCut] {
        let runs: Vec<&BenchRecord> = records.iter().filter(|r| r.mode == mode).collect();
        if runs.is_empty() {
            continue;
        }
        let sat = runs
            .iter()
            .filter(|r| r.verdict == BenchVerdict::Sat)
            .count();
        let unsat = runs
            .iter()
            .filter(|r| r.verdict == BenchVerdict::Unsat)
            .count();
        let timeout = runs
            .iter()
            .filter(|r| r.verdict == BenchVerdict::Timeout)
            .count();
        let states: usize = runs.iter().map(|r| r.states).sum();
        let millis: u128 = runs.iter().map(|r| r.millis).sum();
        out.push_str(&format!(
            "{}: {} runs, {} sat, {} unsat, {} timeout, {} states, {} ms\n",
            mode.as_str(),
            runs.len(),
            sat,
            unsat,
            timeout,
            states,
            millis
        ));
    }
    if summary.mode_disagreements.is_empty() {
        out.push_str("mode verdicts agree on the corpus\n");
    } else {
        out.push_str(&format!(
            "BUG: mode verdict disagreement on formulas {:?}\n",
            summary.mode_disagreements
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{FormulaGen, GenParams};
    use crate::parse::parse;

    #[test]
    fn empty_corpus_empty_report() {
        let sym = Symbols::new();
        let (records, summary) = run_bench(
            &[],
            &sym,
            &[CutMode::Restricted],
            Duration::from_millis(100),
        );
        assert!(records.is_empty());
        assert_eq!(summary.total_runs, 0);
        assert_eq!(
            render_csv(&records),
            "formula,mode,verdict,states,eliminated_e1,eliminated_e2,ecl_size,millis\n"
        );
    }

    #[test]
    fn mode_comparison_first_level_counts() {
        let mut sym = Symbols::new();
        let f = parse("C{a,b}D{a}p -> ~C{b,c}D{b}p", &mut sym).unwrap();
        let (records, summary) = run_bench(
            &[f],
            &sym,
            &[CutMode::Restricted, CutMode::Unrestricted],
            Duration::from_secs(10),
        );
        assert_eq!(records.len(), 2);
        assert!(summary.mode_disagreements.is_empty());
        let restricted = &records[0];
        let unrestricted = &records[1];
        assert_eq!(restricted.initial_states, 8);
        assert_eq!(unrestricted.initial_states, 35);
        assert!(restricted.states <= unrestricted.states);
        assert_eq!(restricted.verdict, unrestricted.verdict);
    }

    #[test]
    fn csv_quotes_formula_commas() {
        let mut sym = Symbols::new();
        let f = parse("D{a,b}p", &mut sym).unwrap();
        let (records, _) = run_bench(
            &[f],
            &sym,
            &[CutMode::Restricted],
            Duration::from_secs(10),
        );
        let csv = render_csv(&records);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("\"D{a,b}p\","));
    }

    #[test]
    fn small_corpus_modes_agree_and_states_monotone() {
        let mut g = FormulaGen::new(GenParams::new(3, &["a", "b"], &["p", "q"], 5));
        let corpus: Vec<_> = (0..30).map(|_| g.next_formula()).collect();
        let sym = g.symbols.clone();
        let (records, summary) = run_bench(
            &corpus,
            &sym,
            &[CutMode::Restricted, CutMode::Unrestricted],
            Duration::from_secs(10),
        );
        assert!(summary.mode_disagreements.is_empty());
        assert_eq!(summary.timeouts, 0);
        for pair in records.chunks(2) {
            assert!(pair[0].states <= pair[1].states);
        }
        let text = render_summary(&records, &summary);
        assert!(text.contains("mode verdicts agree"));
    }
}
