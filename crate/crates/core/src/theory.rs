//! Executable checks of the structural facts behind the 3/2 bound:
//! pause monotonicity, the elimination-time comparison for early completion,
//! the global bound by exhaustive search, and the completion-time chain.
//!
//! Every comparison here is exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, remaining_at, run_ps, run_with_pauses, EngineError};
use crate::generators::{default_epsilon, dichotomous_for, GeneratorError};
use crate::manipulation::{best_response, IncentiveRatio, ManipulationError, ManipulationResult, SearchSpace};
use crate::model::{Horizon, OrdinalProfile, PausePlan};
use crate::rational::{r, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Manipulation(#[from] ManipulationError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("interested set is empty")]
    EmptyInterest,
    #[error("requires n >= m, got n = {n}, m = {m}")]
    NotEnoughAgents { n: usize, m: usize },
    #[error("interested items are never all eaten once agent {agent} is eliminated")]
    NeverCompleted { agent: usize },
}

/// Point where a paused run has less of an item left than the plain run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub item: usize,
    pub time: Rational,
    pub normal_remaining: Rational,
    pub pause_remaining: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MonotonicityOutcome {
    Pass { points_checked: usize },
    Counterexample(MonotonicityViolation),
}

impl MonotonicityOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, MonotonicityOutcome::Pass { .. })
    }
}

/// Compares remaining amounts with and without `plan` at every breakpoint of
/// either run, up to each item's depletion in the paused run.
///
/// Both remaining-amount curves are piecewise linear with breakpoints in the
/// merged set, so passing here implies the inequality at every instant.
pub fn pause_monotonicity_check(
    profile: &OrdinalProfile,
    plan: &PausePlan,
) -> Result<MonotonicityOutcome, TheoryError> {
    let normal = run_ps(profile);
    let paused = run_with_pauses(profile, plan)?;
    let mut times = normal.breakpoints();
    times.extend(paused.breakpoints());
    times.sort();
    times.dedup();
    let mut checked = 0;
    for item in 0..profile.m() {
        for t in &times {
            if let Horizon::At(d) = paused.depletion_time(item) {
                if t > d {
                    break;
                }
            }
            let normal_remaining = remaining_at(&normal, item, t)?;
            let pause_remaining = remaining_at(&paused, item, t)?;
            checked += 1;
            if pause_remaining < normal_remaining {
                return Ok(MonotonicityOutcome::Counterexample(MonotonicityViolation {
                    item,
                    time: t.clone(),
                    normal_remaining,
                    pause_remaining,
                }));
            }
        }
    }
    Ok(MonotonicityOutcome::Pass { points_checked: checked })
}

/// Completion time of the interested set with the agent present (`t`) and
/// eliminated (`t_tilde`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationReport {
    pub t: Rational,
    pub t_tilde: Rational,
    pub ratio: Rational,
}

fn finite_completion(horizon: Horizon, agent: usize) -> Result<Rational, TheoryError> {
    match horizon {
        Horizon::At(t) => Ok(t),
        Horizon::Never => Err(TheoryError::NeverCompleted { agent }),
    }
}

pub fn elimination_ratio(
    profile: &OrdinalProfile,
    agent: usize,
    interested: &[usize],
) -> Result<EliminationReport, TheoryError> {
    profile.check_agent(agent).map_err(EngineError::from)?;
    if interested.is_empty() {
        return Err(TheoryError::EmptyInterest);
    }
    if profile.n() < profile.m() {
        return Err(TheoryError::NotEnoughAgents { n: profile.n(), m: profile.m() });
    }
    let t = finite_completion(engine::completion_time(&run_ps(profile), interested)?, agent)?;
    let eliminated = run_with_pauses(profile, &PausePlan::eliminate(agent))?;
    let t_tilde = finite_completion(engine::completion_time(&eliminated, interested)?, agent)?;
    let ratio = &t_tilde / &t;
    Ok(EliminationReport { t, t_tilde, ratio })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RegimeOutcome {
    /// `T < 1/2` and `T̃ ≤ 3/2 · T`.
    Pass(EliminationReport),
    /// `T ≥ 1/2`; no claim is made there.
    Skip(EliminationReport),
    Counterexample(EliminationReport),
}

/// For `T < 1/2`, checks `T̃ ≤ (3/2)·T`.
pub fn elimination_regime_check(
    profile: &OrdinalProfile,
    agent: usize,
    interested: &[usize],
) -> Result<RegimeOutcome, TheoryError> {
    let rep = elimination_ratio(profile, agent, interested)?;
    Ok(if rep.t >= r(1, 2) {
        RegimeOutcome::Skip(rep)
    } else if rep.t_tilde <= r(3, 2) * &rep.t {
        RegimeOutcome::Pass(rep)
    } else {
        RegimeOutcome::Counterexample(rep)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundOutcome {
    pub k: usize,
    pub result: ManipulationResult,
    /// False when `n < m`, where the bound is not claimed.
    pub within_hypothesis: bool,
    pub holds: bool,
}

/// Whether an incentive ratio respects the 3/2 bound.
pub fn within_bound(ratio: &IncentiveRatio) -> bool {
    ratio.finite().is_some_and(|x| *x <= r(3, 2))
}

/// Exhaustive best response for the top-`k` dichotomous valuation, compared
/// against 3/2 exactly.
pub fn global_bound_check(
    profile: &OrdinalProfile,
    agent: usize,
    k: usize,
    cap: usize,
) -> Result<BoundOutcome, TheoryError> {
    let valuation = dichotomous_for(profile, agent, k, default_epsilon())?;
    let result = best_response(profile, agent, &valuation.into(), &SearchSpace::FullPermutations { cap })?;
    let holds = within_bound(&result.ratio);
    Ok(BoundOutcome { k, result, within_hypothesis: profile.n() >= profile.m(), holds })
}

/// Completion times of the interested set: truthful, under a given report,
/// and with the agent eliminated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeChain {
    pub truthful: Rational,
    pub manipulated: Rational,
    pub eliminated: Rational,
    pub truthful_utility: Rational,
}

impl TimeChain {
    /// `u ≤ T ≤ T' ≤ T̃`.
    pub fn holds(&self) -> bool {
        self.truthful_utility <= self.truthful
            && self.truthful <= self.manipulated
            && self.manipulated <= self.eliminated
    }
}

pub fn time_chain(
    profile: &OrdinalProfile,
    agent: usize,
    interested: &[usize],
    report: &[usize],
) -> Result<TimeChain, TheoryError> {
    let rep = elimination_ratio(profile, agent, interested)?;
    let lied = profile.with_report(agent, report).map_err(EngineError::from)?;
    let lied_trace = run_ps(&lied);
    let manipulated = finite_completion(engine::completion_time(&lied_trace, interested)?, agent)?;
    let row = run_ps(profile).allocation.swap_remove(agent);
    let truthful_utility = interested.iter().map(|&j| &row[j]).sum();
    Ok(TimeChain { truthful: rep.t, manipulated, eliminated: rep.t_tilde, truthful_utility })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{tight_instance, worked_example};
    use crate::model::PauseInterval;

    #[test]
    fn empty_plan_passes() {
        let w = worked_example();
        assert!(pause_monotonicity_check(&w.profile, &PausePlan::empty()).unwrap().passed());
    }

    #[test]
    fn eliminated_worked_example_passes() {
        // by hand: at breakpoints 0, 1/2, 3/4, 1 the paused run holds
        // (1,1,1), (0,1,1), (0,3/4,3/4), (0,1/2,1/2) against
        // (1,1,1), (0,1/2,1), (0,0,3/4), (0,0,0) in the plain run
        let w = worked_example();
        let plan = PausePlan::eliminate(0);
        assert!(pause_monotonicity_check(&w.profile, &plan).unwrap().passed());
        let paused = run_with_pauses(&w.profile, &plan).unwrap();
        assert_eq!(remaining_at(&paused, 1, &r(3, 4)).unwrap(), r(3, 4));
        assert_eq!(remaining_at(&paused, 2, &r(3, 4)).unwrap(), r(3, 4));
    }

    #[test]
    fn worked_example_elimination() {
        // agents 1 and 2 finish a at 1/2; agent 1 then eats b alone until 3/2
        let w = worked_example();
        let rep = elimination_ratio(&w.profile, 0, &[1, 0]).unwrap();
        assert_eq!(rep.t, r(3, 4));
        assert_eq!(rep.t_tilde, r(3, 2));
        assert_eq!(rep.ratio, r(2, 1));
        assert!(matches!(elimination_regime_check(&w.profile, 0, &[1, 0]).unwrap(), RegimeOutcome::Skip(_)));
    }

    #[test]
    fn lone_agent_elimination_never_completes() {
        let p = OrdinalProfile::new(1, vec![vec![0]]).unwrap();
        assert_eq!(elimination_ratio(&p, 0, &[0]), Err(TheoryError::NeverCompleted { agent: 0 }));
    }

    #[test]
    fn elimination_preconditions() {
        let w = worked_example();
        assert_eq!(elimination_ratio(&w.profile, 0, &[]), Err(TheoryError::EmptyInterest));
        let wide = OrdinalProfile::new(3, vec![vec![0, 1, 2], vec![2, 1, 0]]).unwrap();
        assert!(matches!(elimination_ratio(&wide, 0, &[0]), Err(TheoryError::NotEnoughAgents { .. })));
    }

    #[test]
    fn tight_instance_elimination() {
        let t = tight_instance(10).unwrap();
        let rep = elimination_ratio(&t.profile, 0, t.valuation.interested()).unwrap();
        assert_eq!(rep.t, r(1, 2));
        // agent 1 finishes item 0 alone: 1 unit; the rest hold 1..=3 by 3/8
        assert_eq!(rep.t_tilde, r(1, 1));
        assert!(matches!(
            elimination_regime_check(&t.profile, 0, t.valuation.interested()).unwrap(),
            RegimeOutcome::Skip(_)
        ));
    }

    #[test]
    fn global_bound_scope_tagging() {
        let p = OrdinalProfile::new(4, vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3], vec![1, 0, 3, 2]]).unwrap();
        let out = global_bound_check(&p, 0, 2, 8).unwrap();
        assert!(!out.within_hypothesis);
        let w = worked_example();
        let out = global_bound_check(&w.profile, 0, 2, 8).unwrap();
        assert!(out.within_hypothesis && out.holds);
        assert!(matches!(global_bound_check(&w.profile, 0, 2, 2), Err(TheoryError::Manipulation(_))));
    }

    #[test]
    fn chain_on_worked_example() {
        let w = worked_example();
        let chain = time_chain(&w.profile, 0, &[1, 0], &w.misreport).unwrap();
        assert!(chain.holds());
        assert_eq!(chain.truthful_utility, r(3, 4));
    }

    #[test]
    fn mid_run_pause_passes() {
        let w = worked_example();
        let mut plan = PausePlan::empty();
        plan.set(1, vec![PauseInterval::new(r(1, 4), Horizon::At(r(1, 2)))]).unwrap();
        assert!(pause_monotonicity_check(&w.profile, &plan).unwrap().passed());
    }
}
