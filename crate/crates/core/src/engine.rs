//! Event-driven simultaneous eating.
//!
//! Between events every active agent eats its most preferred remaining item
//! at unit speed. Events are item depletions and pause-plan endpoints; the
//! simulation jumps from one event to the next in exact arithmetic. Items
//! that run out at the same instant are removed together before any agent
//! picks its next item.

use thiserror::Error;

use crate::error::ModelError;
use crate::model::{EatingTrace, Horizon, OrdinalProfile, PauseInterval, PausePlan, Segment};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("pause plan names agent {agent} but the profile has {n} agents")]
    PlanAgent { agent: usize, n: usize },
    #[error("item {item} is out of range for {m} items")]
    ItemOutOfRange { item: usize, m: usize },
    #[error("time must be non-negative")]
    NegativeTime,
    #[error("item set is empty")]
    EmptyItemSet,
}

/// Plain Probabilistic Serial run.
pub fn run_ps(profile: &OrdinalProfile) -> EatingTrace {
    Simulation::new(profile, None, true).run()
}

/// Run in which agents skip their pause intervals.
pub fn run_with_pauses(profile: &OrdinalProfile, plan: &PausePlan) -> Result<EatingTrace, EngineError> {
    if let Some(agent) = plan.agents().find(|&a| a >= profile.n()) {
        return Err(EngineError::PlanAgent { agent, n: profile.n() });
    }
    Ok(Simulation::new(profile, Some(plan), true).run())
}

/// Allocation matrix only, without segment bookkeeping.
pub fn allocation(profile: &OrdinalProfile) -> Vec<Vec<Rational>> {
    Simulation::new(profile, None, false).run().allocation
}

/// Remaining amount of `item` at `time`, integrated from the segments.
pub fn remaining_at(trace: &EatingTrace, item: usize, time: &Rational) -> Result<Rational, EngineError> {
    if item >= trace.m {
        return Err(EngineError::ItemOutOfRange { item, m: trace.m });
    }
    if time.is_negative() {
        return Err(EngineError::NegativeTime);
    }
    let mut left = Rational::one();
    for seg in &trace.segments {
        if seg.start >= *time {
            break;
        }
        let eaters = seg.eaters(item);
        if eaters == 0 {
            continue;
        }
        let end = if seg.end < *time { &seg.end } else { time };
        left -= Rational::from(eaters) * (end - &seg.start);
    }
    Ok(left)
}

/// Latest depletion time over `items`; `Never` if any is never depleted.
pub fn completion_time(trace: &EatingTrace, items: &[usize]) -> Result<Horizon, EngineError> {
    if items.is_empty() {
        return Err(EngineError::EmptyItemSet);
    }
    let mut latest = Horizon::At(Rational::zero());
    for &item in items {
        let d = trace.depletion.get(item).ok_or(EngineError::ItemOutOfRange { item, m: trace.m })?;
        if *d > latest {
            latest = d.clone();
        }
    }
    Ok(latest)
}

struct Simulation<'a> {
    profile: &'a OrdinalProfile,
    plan: Option<&'a PausePlan>,
    record: bool,
}

impl<'a> Simulation<'a> {
    fn new(profile: &'a OrdinalProfile, plan: Option<&'a PausePlan>, record: bool) -> Self {
        Simulation { profile, plan, record }
    }

    fn intervals(&self, agent: usize) -> &'a [PauseInterval] {
        match self.plan {
            Some(p) => p.intervals(agent),
            None => &[],
        }
    }

    fn run(self) -> EatingTrace {
        let n = self.profile.n();
        let m = self.profile.m();
        let prefs = self.profile.prefs();

        let mut remaining = vec![Rational::one(); m];
        let mut depletion: Vec<Option<Rational>> = vec![None; m];
        let mut left = m;
        let mut cursor = vec![0usize; n];
        // index of the first pause interval of each agent that has not ended yet
        let mut pause_at = vec![0usize; n];
        let mut alloc = vec![vec![Rational::zero(); m]; n];
        let mut eating: Vec<Option<usize>> = vec![None; n];
        let mut eaters = vec![0usize; m];
        let mut segments = Vec::new();
        let mut t = Rational::zero();

        while left > 0 {
            eaters.iter_mut().for_each(|c| *c = 0);
            let mut next: Option<Rational> = None;
            let consider = |cand: Rational, next: &mut Option<Rational>| {
                if next.as_ref().is_none_or(|cur| cand < *cur) {
                    *next = Some(cand);
                }
            };

            for i in 0..n {
                while cursor[i] < m && depletion[prefs[i][cursor[i]]].is_some() {
                    cursor[i] += 1;
                }
                eating[i] = None;
                if cursor[i] == m {
                    continue;
                }
                let ivs = self.intervals(i);
                while pause_at[i] < ivs.len() && matches!(&ivs[pause_at[i]].end, Horizon::At(e) if *e <= t) {
                    pause_at[i] += 1;
                }
                match ivs.get(pause_at[i]) {
                    Some(iv) if iv.start <= t => {
                        if let Horizon::At(e) = &iv.end {
                            consider(e.clone(), &mut next);
                        }
                    }
                    Some(iv) => {
                        consider(iv.start.clone(), &mut next);
                        eating[i] = Some(prefs[i][cursor[i]]);
                    }
                    None => eating[i] = Some(prefs[i][cursor[i]]),
                }
                if let Some(j) = eating[i] {
                    eaters[j] += 1;
                }
            }

            for j in 0..m {
                if eaters[j] > 0 {
                    let cand = &t + &remaining[j] / Rational::from(eaters[j]);
                    consider(cand, &mut next);
                }
            }

            let Some(next) = next else {
                break;
            };
            let dt = &next - &t;
            for i in 0..n {
                if let Some(j) = eating[i] {
                    alloc[i][j] += &dt;
                }
            }
            for j in 0..m {
                if eaters[j] > 0 {
                    remaining[j] -= Rational::from(eaters[j]) * &dt;
                    debug_assert!(!remaining[j].is_negative());
                    if remaining[j].is_zero() {
                        depletion[j] = Some(next.clone());
                        left -= 1;
                    }
                }
            }
            if self.record {
                segments.push(Segment { start: t, end: next.clone(), eating: eating.clone() });
            }
            t = next;
        }

        EatingTrace {
            n,
            m,
            segments,
            depletion: depletion.into_iter().map(|d| d.map_or(Horizon::Never, Horizon::At)).collect(),
            allocation: alloc,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::r;

    fn worked() -> OrdinalProfile {
        // items a=0, b=1, c=2
        OrdinalProfile::new(3, vec![vec![1, 0, 2], vec![0, 1, 2], vec![0, 2, 1]]).unwrap()
    }

    fn rows(v: &[[(i64, i64); 3]]) -> Vec<Vec<Rational>> {
        v.iter().map(|row| row.iter().map(|&(p, q)| r(p, q)).collect()).collect()
    }

    #[test]
    fn worked_example_truthful() {
        let t = run_ps(&worked());
        assert_eq!(t.allocation, rows(&[[(0, 1), (3, 4), (1, 4)], [(1, 2), (1, 4), (1, 4)], [(1, 2), (0, 1), (1, 2)]]));
        assert_eq!(t.depletion, vec![Horizon::At(r(1, 2)), Horizon::At(r(3, 4)), Horizon::At(r(1, 1))]);
        assert_eq!(t.segments.len(), 3);
    }

    #[test]
    fn worked_example_misreport() {
        let p = worked().with_report(0, &[0, 1, 2]).unwrap();
        let t = run_ps(&p);
        assert_eq!(t.allocation, rows(&[[(1, 3), (1, 2), (1, 6)], [(1, 3), (1, 2), (1, 6)], [(1, 3), (0, 1), (2, 3)]]));
    }

    #[test]
    fn identical_preferences_split_evenly() {
        for n in 1..6 {
            let t = run_ps(&OrdinalProfile::identical(n, n).unwrap());
            for row in &t.allocation {
                assert!(row.iter().all(|x| *x == r(1, n as i64)));
            }
        }
    }

    #[test]
    fn empty_plan_matches_plain_run() {
        let p = worked();
        assert_eq!(run_with_pauses(&p, &PausePlan::empty()).unwrap(), run_ps(&p));
    }

    #[test]
    fn eliminated_agent_in_worked_example() {
        // hand simulation: agents 1 and 2 split a by 1/2, then each eats its
        // next item alone for a full unit
        let t = run_with_pauses(&worked(), &PausePlan::eliminate(0)).unwrap();
        assert_eq!(t.allocation, rows(&[[(0, 1), (0, 1), (0, 1)], [(1, 2), (1, 1), (0, 1)], [(1, 2), (0, 1), (1, 1)]]));
        assert_eq!(t.depletion, vec![Horizon::At(r(1, 2)), Horizon::At(r(3, 2)), Horizon::At(r(3, 2))]);
    }

    #[test]
    fn pause_shifts_single_agent() {
        let p = OrdinalProfile::new(1, vec![vec![0]]).unwrap();
        let mut plan = PausePlan::empty();
        plan.set(0, vec![PauseInterval::new(Rational::zero(), Horizon::At(r(1, 2)))]).unwrap();
        let t = run_with_pauses(&p, &plan).unwrap();
        assert_eq!(t.depletion, vec![Horizon::At(r(3, 2))]);
        assert_eq!(t.segments.len(), 2);
        assert_eq!(t.segments[0].eating, vec![None]);
    }

    #[test]
    fn everyone_eliminated_leaves_items_uneaten() {
        let p = worked();
        let mut plan = PausePlan::empty();
        for a in 0..3 {
            plan.set(a, vec![PauseInterval::forever()]).unwrap();
        }
        let t = run_with_pauses(&p, &plan).unwrap();
        assert!(t.depletion.iter().all(Horizon::is_never));
        assert!(t.segments.is_empty());
        assert_eq!(completion_time(&t, &[0]).unwrap(), Horizon::Never);
    }

    #[test]
    fn late_elimination_leaves_rest_never_eaten() {
        let p = OrdinalProfile::new(2, vec![vec![0, 1]]).unwrap();
        let mut plan = PausePlan::empty();
        plan.set(0, vec![PauseInterval::new(r(1, 2), Horizon::Never)]).unwrap();
        let t = run_with_pauses(&p, &plan).unwrap();
        assert_eq!(t.depletion, vec![Horizon::Never, Horizon::Never]);
        assert_eq!(t.end_time(), r(1, 2));
        assert_eq!(remaining_at(&t, 0, &r(5, 1)).unwrap(), r(1, 2));
    }

    #[test]
    fn plan_agent_out_of_range() {
        assert!(matches!(
            run_with_pauses(&worked(), &PausePlan::eliminate(3)),
            Err(EngineError::PlanAgent { agent: 3, n: 3 })
        ));
    }

    #[test]
    fn remaining_amounts() {
        let t = run_ps(&worked());
        assert_eq!(remaining_at(&t, 0, &Rational::zero()).unwrap(), Rational::one());
        assert_eq!(remaining_at(&t, 0, &r(1, 4)).unwrap(), r(1, 2));
        assert_eq!(remaining_at(&t, 1, &r(1, 2)).unwrap(), r(1, 2));
        for j in 0..3 {
            let d = t.depletion[j].time().unwrap().clone();
            assert_eq!(remaining_at(&t, j, &d).unwrap(), Rational::zero());
            assert_eq!(remaining_at(&t, j, &(d + r(1, 1))).unwrap(), Rational::zero());
        }
        assert!(remaining_at(&t, 3, &Rational::zero()).is_err());
        assert!(remaining_at(&t, 0, &r(-1, 2)).is_err());
    }

    #[test]
    fn completion_times() {
        let t = run_ps(&worked());
        assert_eq!(completion_time(&t, &[0]).unwrap(), Horizon::At(r(1, 2)));
        assert_eq!(completion_time(&t, &[0, 1, 2]).unwrap(), Horizon::At(r(1, 1)));
        assert!(completion_time(&t, &[]).is_err());
    }

    #[test]
    fn allocation_only_matches_trace() {
        let p = worked();
        assert_eq!(allocation(&p), run_ps(&p).allocation);
    }
}
