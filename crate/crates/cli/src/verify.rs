use probserial::generators::{random_paused_instance, random_profile, Seed};
use probserial::manipulation::{best_response_all_k, DEFAULT_FULL_CAP};
use probserial::theory::{
    elimination_regime_check, pause_monotonicity_check, within_bound, MonotonicityOutcome, RegimeOutcome,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::VerifyArgs;
use crate::render::{meta, write_output};
use crate::Failure;

#[derive(Debug, Serialize)]
struct CheckReport {
    check: &'static str,
    instances: usize,
    passed: usize,
    /// Instances outside the regime the check speaks about.
    skipped: usize,
    counterexamples: Vec<Value>,
}

enum Verdict {
    Pass,
    Skip,
    Fail(Value),
}

fn run_check(
    name: &'static str,
    count: usize,
    eval: impl Fn(usize) -> Result<Verdict, String> + Sync,
) -> Result<CheckReport, Failure> {
    let verdicts: Vec<Verdict> =
        (0..count).into_par_iter().map(&eval).collect::<Result<_, _>>().map_err(Failure::Usage)?;
    let mut rep = CheckReport { check: name, instances: count, passed: 0, skipped: 0, counterexamples: Vec::new() };
    for v in verdicts {
        match v {
            Verdict::Pass => rep.passed += 1,
            Verdict::Skip => rep.skipped += 1,
            Verdict::Fail(c) => rep.counterexamples.push(c),
        }
    }
    Ok(rep)
}

fn pause_monotonicity(a: &VerifyArgs) -> Result<CheckReport, Failure> {
    let base = Seed(a.seed).derive(2);
    run_check("lemma2", a.seeds, |i| {
        let (profile, plan) = random_paused_instance(a.max_size, base.derive(i as u64));
        Ok(match pause_monotonicity_check(&profile, &plan).map_err(|e| e.to_string())? {
            MonotonicityOutcome::Pass { .. } => Verdict::Pass,
            MonotonicityOutcome::Counterexample(v) => {
                Verdict::Fail(json!({ "index": i, "profile": profile, "pauses": plan, "violation": v }))
            }
        })
    })
}

fn elimination(a: &VerifyArgs) -> Result<CheckReport, Failure> {
    let base = Seed(a.seed).derive(1);
    run_check("theorem1", a.seeds, |i| {
        let profile = random_profile(10, 10, base.derive(i as u64)).map_err(|e| e.to_string())?;
        let interested = profile.ordering(0)[..2].to_vec();
        Ok(match elimination_regime_check(&profile, 0, &interested).map_err(|e| e.to_string())? {
            RegimeOutcome::Pass(_) => Verdict::Pass,
            RegimeOutcome::Skip(_) => Verdict::Skip,
            RegimeOutcome::Counterexample(rep) => Verdict::Fail(
                json!({ "index": i, "profile": profile, "agent": 0, "interested": interested, "report": rep }),
            ),
        })
    })
}

fn global_bound(a: &VerifyArgs) -> Result<CheckReport, Failure> {
    if !(3..=DEFAULT_FULL_CAP).contains(&a.bound_max_n) {
        return Err(Failure::Usage(format!("--bound-max-n must lie in 3..={DEFAULT_FULL_CAP}")));
    }
    let base = Seed(a.seed).derive(3);
    let sizes = a.bound_max_n - 2;
    run_check("global-bound", a.seeds, |i| {
        let n = 3 + i % sizes;
        let profile = random_profile(n, n, base.derive(i as u64)).map_err(|e| e.to_string())?;
        let all = best_response_all_k(&profile, 0, DEFAULT_FULL_CAP).map_err(|e| e.to_string())?;
        Ok(match all.into_iter().enumerate().find(|(_, r)| !within_bound(&r.ratio)) {
            None => Verdict::Pass,
            Some((k, r)) => Verdict::Fail(json!({ "index": i, "profile": profile, "k": k + 1, "result": r })),
        })
    })
}

pub fn cmd_verify(a: VerifyArgs, quiet: bool) -> Result<(), Failure> {
    let all = !(a.lemma2 || a.theorem1 || a.global_bound);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.workers).build()?;
    let reports: Vec<CheckReport> = pool.install(|| {
        let mut out = Vec::new();
        if all || a.lemma2 {
            out.push(pause_monotonicity(&a)?);
        }
        if all || a.theorem1 {
            out.push(elimination(&a)?);
        }
        if all || a.global_bound {
            out.push(global_bound(&a)?);
        }
        Ok::<_, Failure>(out)
    })?;
    for r in &reports {
        let skipped = if r.skipped > 0 { format!(", {} outside the regime", r.skipped) } else { String::new() };
        println!(
            "{}: {} instances, {} passed{skipped}, {} counterexamples",
            r.check,
            r.instances,
            r.passed,
            r.counterexamples.len()
        );
    }
    let failures: usize = reports.iter().map(|r| r.counterexamples.len()).sum();
    let doc = json!({ "meta": meta("verify", a.seed).json, "checks": reports });
    let dump = serde_json::to_string_pretty(&doc)? + "\n";
    if let Some(path) = &a.out {
        write_output(Some(path), &dump)?;
    } else if failures > 0 && !quiet {
        eprint!("{dump}");
    }
    if failures > 0 {
        return Err(Failure::Violation(format!("{failures} counterexamples")));
    }
    Ok(())
}
