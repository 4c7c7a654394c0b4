//! Best-response search for a single manipulating agent.
//!
//! All other agents' reports stay fixed. Each candidate report is evaluated
//! by rerunning the eating process and scoring the manipulator's row with its
//! true valuation.

use std::fmt;
use std::ops::Range;

use itertools::{Itertools, Permutations};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine;
use crate::error::ModelError;
use crate::model::{OrdinalProfile, Valuation};
use crate::rational::Rational;

/// Largest item count enumerated exhaustively unless overridden.
pub const DEFAULT_FULL_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManipulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("m = {m} exceeds the FullPermutations cap of {cap} ({m}! reports); raise the cap explicitly to proceed")]
    CapExceeded { m: usize, cap: usize },
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("valuation belongs to agent {valuation} but agent {agent} was requested")]
    AgentMismatch { agent: usize, valuation: usize },
    #[error("truthful utility is zero while a report reaches {best}; the ratio is unbounded")]
    Unbounded { best: Rational },
}

/// Which reports the manipulator may try.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SearchSpace {
    /// Every ordering of all `m` items, refused above `cap` items.
    FullPermutations { cap: usize },
    /// Every ordering of the interested items in the first `k` slots,
    /// followed by the remaining items in their truthful relative order.
    InterestedFirst { interested: Vec<usize> },
}

impl SearchSpace {
    pub fn full() -> Self {
        SearchSpace::FullPermutations { cap: DEFAULT_FULL_CAP }
    }

    pub fn interested_first(interested: impl Into<Vec<usize>>) -> Self {
        SearchSpace::InterestedFirst { interested: interested.into() }
    }

    /// Number of reports the space enumerates for `m` items.
    pub fn report_count(&self, m: usize) -> u128 {
        let k = match self {
            SearchSpace::FullPermutations { .. } => m,
            SearchSpace::InterestedFirst { interested } => interested.len(),
        };
        (1..=k as u128).product()
    }
}

/// Deterministic lexicographic stream of reports.
///
/// Permutations are generated over rank positions of the truthful ordering,
/// so the first report is always the truthful one (or its interested-first
/// projection).
pub struct Reports {
    head: Vec<usize>,
    tail: Vec<usize>,
    perms: Permutations<Range<usize>>,
}

impl Iterator for Reports {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let idx = self.perms.next()?;
        let mut report = Vec::with_capacity(self.head.len() + self.tail.len());
        report.extend(idx.into_iter().map(|i| self.head[i]));
        report.extend_from_slice(&self.tail);
        Some(report)
    }
}

pub fn enumerate_reports(space: &SearchSpace, truthful: &[usize]) -> Result<Reports, ManipulationError> {
    let m = truthful.len();
    let (head, tail) = match space {
        SearchSpace::FullPermutations { cap } => {
            if m > *cap {
                return Err(ManipulationError::CapExceeded { m, cap: *cap });
            }
            (truthful.to_vec(), Vec::new())
        }
        SearchSpace::InterestedFirst { interested } => {
            if interested.is_empty() {
                return Err(ManipulationError::InvalidSpace("interested set is empty".into()));
            }
            if let Some(bad) = interested.iter().find(|&&j| !truthful.contains(&j)) {
                return Err(ManipulationError::InvalidSpace(format!("item {bad} is not among the {m} items")));
            }
            if interested.iter().duplicates().next().is_some() {
                return Err(ManipulationError::InvalidSpace("interested set has duplicates".into()));
            }
            truthful.iter().partition(|j| interested.contains(j))
        }
    };
    let k = head.len();
    Ok(Reports { head, tail, perms: (0..k).permutations(k) })
}

/// What a utility-maximizing report achieves for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManipulationResult {
    pub agent: usize,
    pub truthful_utility: Rational,
    pub best_report: Vec<usize>,
    pub best_utility: Rational,
    pub ratio: IncentiveRatio,
    pub reports_evaluated: u64,
}

/// `best / truthful`, with `1` for `0/0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IncentiveRatio {
    Finite(Rational),
    Unbounded,
}

impl IncentiveRatio {
    pub fn of(best: &Rational, truthful: &Rational) -> Self {
        if truthful.is_zero() {
            if best.is_zero() {
                IncentiveRatio::Finite(Rational::one())
            } else {
                IncentiveRatio::Unbounded
            }
        } else {
            IncentiveRatio::Finite(best / truthful)
        }
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            IncentiveRatio::Finite(r) => Some(r),
            IncentiveRatio::Unbounded => None,
        }
    }
}

impl fmt::Display for IncentiveRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IncentiveRatio::Finite(r) => write!(f, "{r}"),
            IncentiveRatio::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for IncentiveRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            IncentiveRatio::Finite(r) => r.serialize(s),
            IncentiveRatio::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for IncentiveRatio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "unbounded" {
            Ok(IncentiveRatio::Unbounded)
        } else {
            s.parse().map(IncentiveRatio::Finite).map_err(serde::de::Error::custom)
        }
    }
}

fn prepare(
    profile: &OrdinalProfile,
    agent: usize,
    valuation: &Valuation,
    space: &SearchSpace,
) -> Result<(Rational, Reports), ManipulationError> {
    profile.check_agent(agent)?;
    if valuation.agent() != agent {
        return Err(ManipulationError::AgentMismatch { agent, valuation: valuation.agent() });
    }
    valuation.check_compatible(profile)?;
    let reports = enumerate_reports(space, profile.ordering(agent))?;
    let truthful = valuation.utility(&engine::allocation(profile)[agent])?;
    Ok((truthful, reports))
}

fn utility_of(profile: &OrdinalProfile, agent: usize, valuation: &Valuation, report: &[usize]) -> Rational {
    let alloc = engine::allocation(&profile.with_report_unchecked(agent, report));
    // row length is m by construction, so evaluation cannot fail
    valuation.utility(&alloc[agent]).expect("row matches item count")
}

/// Exhaustive best response within `space`.
///
/// The truthful report is the incumbent; a candidate replaces the incumbent
/// only with strictly higher utility, so ties go to the truthful report and
/// then to the earliest report in enumeration order.
pub fn best_response(
    profile: &OrdinalProfile,
    agent: usize,
    valuation: &Valuation,
    space: &SearchSpace,
) -> Result<ManipulationResult, ManipulationError> {
    let (truthful_utility, reports) = prepare(profile, agent, valuation, space)?;
    let mut best_utility = truthful_utility.clone();
    let mut best_report = profile.ordering(agent).to_vec();
    let mut evaluated = 0u64;
    for report in reports {
        evaluated += 1;
        let u = utility_of(profile, agent, valuation, &report);
        if u > best_utility {
            best_utility = u;
            best_report = report;
        }
    }
    Ok(finish(agent, truthful_utility, best_report, best_utility, evaluated))
}

/// Same result as [`best_response`], evaluating candidates on the rayon pool.
pub fn best_response_parallel(
    profile: &OrdinalProfile,
    agent: usize,
    valuation: &Valuation,
    space: &SearchSpace,
) -> Result<ManipulationResult, ManipulationError> {
    let (truthful_utility, reports) = prepare(profile, agent, valuation, space)?;
    let reports: Vec<Vec<usize>> = reports.collect();
    let evaluated = reports.len() as u64;
    let best =
        reports.par_iter().enumerate().map(|(idx, rep)| (utility_of(profile, agent, valuation, rep), idx)).reduce_with(
            |a, b| match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    let (best_report, best_utility) = match best {
        Some((u, idx)) if u > truthful_utility => (reports[idx].clone(), u),
        _ => (profile.ordering(agent).to_vec(), truthful_utility.clone()),
    };
    Ok(finish(agent, truthful_utility, best_report, best_utility, evaluated))
}

fn finish(
    agent: usize,
    truthful_utility: Rational,
    best_report: Vec<usize>,
    best_utility: Rational,
    reports_evaluated: u64,
) -> ManipulationResult {
    let ratio = IncentiveRatio::of(&best_utility, &truthful_utility);
    ManipulationResult { agent, truthful_utility, best_report, best_utility, ratio, reports_evaluated }
}

/// Per-instance incentive ratio `max u' / u`.
pub fn incentive_ratio_instance(
    profile: &OrdinalProfile,
    agent: usize,
    valuation: &Valuation,
    space: &SearchSpace,
) -> Result<Rational, ManipulationError> {
    let res = best_response(profile, agent, valuation, space)?;
    match res.ratio {
        IncentiveRatio::Finite(r) => Ok(r),
        IncentiveRatio::Unbounded => Err(ManipulationError::Unbounded { best: res.best_utility }),
    }
}

/// Best responses for every dichotomous top-`k` valuation, `k = 1..=m`, from
/// one pass over all `m!` reports.
///
/// Entry `k - 1` equals `best_response` with the top-`k` dichotomous
/// valuation and `FullPermutations`.
pub fn best_response_all_k(
    profile: &OrdinalProfile,
    agent: usize,
    cap: usize,
) -> Result<Vec<ManipulationResult>, ManipulationError> {
    profile.check_agent(agent)?;
    let truthful = profile.ordering(agent).to_vec();
    let reports = enumerate_reports(&SearchSpace::FullPermutations { cap }, &truthful)?;
    let m = profile.m();
    let prefix_sums = |row: &[Rational]| -> Vec<Rational> {
        let mut acc = Rational::zero();
        truthful
            .iter()
            .map(|&j| {
                acc += &row[j];
                acc.clone()
            })
            .collect()
    };
    let truthful_u = prefix_sums(&engine::allocation(profile)[agent]);
    let mut best_u = truthful_u.clone();
    let mut best_rep = vec![truthful.clone(); m];
    let mut evaluated = 0u64;
    for report in reports {
        evaluated += 1;
        let alloc = engine::allocation(&profile.with_report_unchecked(agent, &report));
        let u = prefix_sums(&alloc[agent]);
        for k in 0..m {
            if u[k] > best_u[k] {
                best_u[k] = u[k].clone();
                best_rep[k] = report.clone();
            }
        }
    }
    Ok(truthful_u
        .into_iter()
        .zip(best_u)
        .zip(best_rep)
        .map(|((tu, bu), rep)| finish(agent, tu, rep, bu, evaluated))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CardinalUtilities, DichotomousValuation};
    use crate::rational::r;

    fn worked() -> (OrdinalProfile, Valuation) {
        let p = OrdinalProfile::new(3, vec![vec![1, 0, 2], vec![0, 1, 2], vec![0, 2, 1]]).unwrap();
        let a = CardinalUtilities::new(0, vec![r(9, 10), r(1, 1), r(0, 1)]).unwrap();
        (p, a.into())
    }

    #[test]
    fn report_counts() {
        let truthful: Vec<usize> = (0..5).collect();
        let one = enumerate_reports(&SearchSpace::interested_first(vec![0]), &truthful).unwrap().collect_vec();
        assert_eq!(one, vec![truthful.clone()]);
        let three = enumerate_reports(&SearchSpace::interested_first(vec![2, 0, 1]), &truthful).unwrap().collect_vec();
        assert_eq!(three.len(), 6);
        assert_eq!(three[0], truthful);
        for rep in &three {
            let mut head = rep[..3].to_vec();
            head.sort();
            assert_eq!(head, vec![0, 1, 2]);
            assert_eq!(&rep[3..], &[3, 4]);
        }
        assert_eq!(three.iter().unique().count(), 6);
        let full = enumerate_reports(&SearchSpace::full(), &[2, 0, 1]).unwrap().collect_vec();
        assert_eq!(full.len(), 6);
        assert_eq!(full[0], vec![2, 0, 1]);
        assert_eq!(SearchSpace::full().report_count(3), 6);
    }

    #[test]
    fn interested_first_keeps_truthful_order_of_the_rest() {
        let reps = enumerate_reports(&SearchSpace::interested_first(vec![3]), &[4, 3, 2, 1, 0]).unwrap().collect_vec();
        assert_eq!(reps, vec![vec![3, 4, 2, 1, 0]]);
    }

    #[test]
    fn full_cap_is_enforced() {
        let truthful: Vec<usize> = (0..9).collect();
        let err = enumerate_reports(&SearchSpace::full(), &truthful).err().unwrap();
        assert_eq!(err, ManipulationError::CapExceeded { m: 9, cap: 8 });
        assert!(err.to_string().contains("cap of 8"));
        assert!(enumerate_reports(&SearchSpace::FullPermutations { cap: 9 }, &truthful).is_ok());
    }

    #[test]
    fn invalid_interested_sets() {
        assert!(enumerate_reports(&SearchSpace::interested_first(vec![]), &[0, 1]).is_err());
        assert!(enumerate_reports(&SearchSpace::interested_first(vec![5]), &[0, 1]).is_err());
        assert!(enumerate_reports(&SearchSpace::interested_first(vec![1, 1]), &[0, 1]).is_err());
    }

    #[test]
    fn worked_example_best_response() {
        let (p, a) = worked();
        let res = best_response(&p, 0, &a, &SearchSpace::full()).unwrap();
        assert_eq!(res.truthful_utility, r(3, 4));
        assert_eq!(res.best_utility, r(4, 5));
        assert_eq!(res.best_report, vec![0, 1, 2]);
        assert_eq!(res.ratio, IncentiveRatio::Finite(r(16, 15)));
        assert_eq!(res.reports_evaluated, 6);
        assert_eq!(incentive_ratio_instance(&p, 0, &a, &SearchSpace::full()).unwrap(), r(16, 15));
        assert_eq!(best_response_parallel(&p, 0, &a, &SearchSpace::full()).unwrap(), res);
    }

    #[test]
    fn brute_force_oracle_for_worked_example() {
        // independent scan of all six reports, scored by hand-written inner product
        let (p, _) = worked();
        let a = [r(9, 10), r(1, 1), r(0, 1)];
        let mut best = Rational::zero();
        for rep in (0..3).permutations(3) {
            let alloc = engine::run_ps(&p.with_report(0, &rep).unwrap()).allocation;
            let u: Rational = (0..3).map(|j| &alloc[0][j] * &a[j]).sum();
            best = best.max(u);
        }
        assert_eq!(best, r(4, 5));
    }

    #[test]
    fn single_agent_cannot_gain() {
        let p = OrdinalProfile::new(3, vec![vec![2, 0, 1]]).unwrap();
        for k in 1..=3 {
            let v: Valuation = DichotomousValuation::new(&p, 0, p.ordering(0)[..k].to_vec(), r(1, 100)).unwrap().into();
            assert_eq!(incentive_ratio_instance(&p, 0, &v, &SearchSpace::full()).unwrap(), Rational::one());
        }
    }

    #[test]
    fn incompatible_or_mismatched_valuations_are_rejected() {
        let (p, _) = worked();
        let bad: Valuation = CardinalUtilities::new(0, vec![r(1, 1), r(9, 10), r(0, 1)]).unwrap().into();
        assert!(matches!(best_response(&p, 0, &bad, &SearchSpace::full()), Err(ManipulationError::Model(_))));
        let other: Valuation = CardinalUtilities::new(1, vec![r(1, 1), r(9, 10), r(0, 1)]).unwrap().into();
        assert!(matches!(
            best_response(&p, 0, &other, &SearchSpace::full()),
            Err(ManipulationError::AgentMismatch { .. })
        ));
    }

    #[test]
    fn unbounded_ratio_marker() {
        // a compatible valuation always rewards the top item, which the agent
        // eats from time 0, so the marker is only reachable by hand
        assert_eq!(IncentiveRatio::of(&r(1, 2), &Rational::zero()), IncentiveRatio::Unbounded);
        assert_eq!(IncentiveRatio::of(&Rational::zero(), &Rational::zero()), IncentiveRatio::Finite(Rational::one()));
        assert_eq!(serde_json::to_string(&IncentiveRatio::Unbounded).unwrap(), "\"unbounded\"");
    }

    #[test]
    fn all_k_matches_individual_searches() {
        let (p, _) = worked();
        let all = best_response_all_k(&p, 0, DEFAULT_FULL_CAP).unwrap();
        for k in 1..=3 {
            let v: Valuation = DichotomousValuation::new(&p, 0, p.ordering(0)[..k].to_vec(), r(1, 100)).unwrap().into();
            assert_eq!(all[k - 1], best_response(&p, 0, &v, &SearchSpace::full()).unwrap());
        }
    }
}
