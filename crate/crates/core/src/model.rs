//! Domain types shared by the engine, the manipulation search and the
//! verification tools. Agents and items are identified by 0-based indices.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, ProfileViolation};
use crate::rational::Rational;

/// Checks that every row of `prefs` is a permutation of `0..m`.
///
/// Reports the first defect found, scanning agents in order.
pub fn validate_profile(m: usize, prefs: &[Vec<usize>]) -> Result<(), ProfileViolation> {
    if prefs.is_empty() {
        return Err(ProfileViolation::NoAgents);
    }
    if m == 0 {
        return Err(ProfileViolation::NoItems);
    }
    let mut seen = vec![false; m];
    for (agent, row) in prefs.iter().enumerate() {
        seen.iter_mut().for_each(|s| *s = false);
        for &item in row {
            if item >= m {
                return Err(ProfileViolation::OutOfRange { agent, item });
            }
            if seen[item] {
                return Err(ProfileViolation::Duplicate { agent, item });
            }
            seen[item] = true;
        }
        if let Some(item) = seen.iter().position(|s| !s) {
            return Err(ProfileViolation::Missing { agent, item });
        }
    }
    Ok(())
}

/// One strict preference ordering per agent, most preferred item first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct OrdinalProfile {
    m: usize,
    prefs: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    n: usize,
    m: usize,
    prefs: Vec<Vec<usize>>,
}

impl TryFrom<RawProfile> for OrdinalProfile {
    type Error = ModelError;
    fn try_from(raw: RawProfile) -> Result<Self, ModelError> {
        if raw.n != raw.prefs.len() {
            return Err(ProfileViolation::AgentCount { declared: raw.n, actual: raw.prefs.len() }.into());
        }
        OrdinalProfile::new(raw.m, raw.prefs)
    }
}

impl From<OrdinalProfile> for RawProfile {
    fn from(p: OrdinalProfile) -> Self {
        RawProfile { n: p.prefs.len(), m: p.m, prefs: p.prefs }
    }
}

impl OrdinalProfile {
    pub fn new(m: usize, prefs: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        validate_profile(m, &prefs)?;
        Ok(OrdinalProfile { m, prefs })
    }

    /// Every agent ranks items identically, `0 ≻ 1 ≻ … ≻ m-1`.
    pub fn identical(n: usize, m: usize) -> Result<Self, ModelError> {
        Self::new(m, vec![(0..m).collect(); n])
    }

    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn prefs(&self) -> &[Vec<usize>] {
        &self.prefs
    }

    pub fn ordering(&self, agent: usize) -> &[usize] {
        &self.prefs[agent]
    }

    pub fn check_agent(&self, agent: usize) -> Result<(), ModelError> {
        if agent < self.n() {
            Ok(())
        } else {
            Err(ModelError::AgentOutOfRange { agent, n: self.n() })
        }
    }

    /// Copy of the profile with `agent`'s row replaced by `report`.
    pub fn with_report(&self, agent: usize, report: &[usize]) -> Result<Self, ModelError> {
        self.check_agent(agent)?;
        let mut prefs = self.prefs.clone();
        prefs[agent] = report.to_vec();
        Self::new(self.m, prefs)
    }

    /// Like [`with_report`](Self::with_report) for a report already known to
    /// be a permutation of the items.
    pub(crate) fn with_report_unchecked(&self, agent: usize, report: &[usize]) -> Self {
        let mut prefs = self.prefs.clone();
        prefs[agent].clear();
        prefs[agent].extend_from_slice(report);
        OrdinalProfile { m: self.m, prefs }
    }
}

/// Cardinal utility of one agent for a unit of each item, indexed by item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalUtilities {
    pub agent: usize,
    values: Vec<Rational>,
}

impl CardinalUtilities {
    /// Values must lie in `[0, 1]`.
    pub fn new(agent: usize, values: Vec<Rational>) -> Result<Self, ModelError> {
        let (zero, one) = (Rational::zero(), Rational::one());
        for (item, v) in values.iter().enumerate() {
            if *v < zero || *v > one {
                return Err(ModelError::UtilityOutOfRange { item, value: v.clone() });
            }
        }
        Ok(CardinalUtilities { agent, values })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Values strictly decrease along `ordering`.
    pub fn check_compatible(&self, ordering: &[usize]) -> Result<(), ModelError> {
        if self.values.len() != ordering.len() {
            return Err(ModelError::LengthMismatch { expected: ordering.len(), actual: self.values.len() });
        }
        for (rank, w) in ordering.windows(2).enumerate() {
            if self.values[w[0]] <= self.values[w[1]] {
                return Err(ModelError::IncompatibleUtilities { agent: self.agent, rank: rank + 1 });
            }
        }
        Ok(())
    }
}

/// Exact inner product `Σ_j a_j x_j` of an allocation row with utilities.
pub fn expected_utility(row: &[Rational], utilities: &CardinalUtilities) -> Result<Rational, ModelError> {
    if row.len() != utilities.values.len() {
        return Err(ModelError::LengthMismatch { expected: utilities.values.len(), actual: row.len() });
    }
    Ok(row.iter().zip(&utilities.values).map(|(x, a)| x * a).sum())
}

/// Utility close to 1 on an interested prefix of the ordering and close to 0
/// elsewhere. Exact evaluation drops the ε terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomousValuation {
    pub agent: usize,
    interested: Vec<usize>,
    epsilon: Rational,
}

impl DichotomousValuation {
    /// `interested` must be exactly the top-|interested| prefix of the
    /// agent's ordering in `profile` (in any order).
    pub fn new(
        profile: &OrdinalProfile,
        agent: usize,
        interested: Vec<usize>,
        epsilon: Rational,
    ) -> Result<Self, ModelError> {
        profile.check_agent(agent)?;
        if !epsilon.is_positive() {
            return Err(ModelError::NonPositiveEpsilon);
        }
        let m = profile.m();
        let k = interested.len();
        if k == 0 || k > m {
            return Err(ModelError::InterestedSize { k, m });
        }
        let mut sorted = interested.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let mut prefix = profile.ordering(agent)[..k].to_vec();
        prefix.sort_unstable();
        if sorted != prefix {
            return Err(ModelError::InterestedNotPrefix { agent });
        }
        // stored in the truthful preference order
        let interested = profile.ordering(agent)[..k].to_vec();
        Ok(DichotomousValuation { agent, interested, epsilon })
    }

    /// Interested items in the agent's truthful order.
    pub fn interested(&self) -> &[usize] {
        &self.interested
    }

    pub fn k(&self) -> usize {
        self.interested.len()
    }

    pub fn epsilon(&self) -> &Rational {
        &self.epsilon
    }

    pub fn is_interested(&self, item: usize) -> bool {
        self.interested.contains(&item)
    }

    /// Sum of the interested-item fractions in `row`.
    pub fn utility(&self, row: &[Rational]) -> Rational {
        self.interested.iter().map(|&j| &row[j]).sum()
    }

    /// The strict compatible cardinal vector with ε terms: rank `j`
    /// (1-based) gets `1 - (j-1)ε` inside the prefix and `(m-j)ε` outside.
    pub fn epsilon_utilities(&self, ordering: &[usize]) -> CardinalUtilities {
        let m = ordering.len();
        let k = self.k();
        let mut values = vec![Rational::zero(); m];
        for (pos, &item) in ordering.iter().enumerate() {
            let j = pos + 1;
            values[item] = if j <= k {
                Rational::one() - Rational::from(j - 1) * &self.epsilon
            } else {
                Rational::from(m - j) * &self.epsilon
            };
        }
        CardinalUtilities { agent: self.agent, values }
    }
}

/// Either kind of utility model for a single agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Valuation {
    Cardinal(CardinalUtilities),
    Dichotomous(DichotomousValuation),
}

impl Valuation {
    pub fn agent(&self) -> usize {
        match self {
            Valuation::Cardinal(c) => c.agent,
            Valuation::Dichotomous(d) => d.agent,
        }
    }

    pub fn utility(&self, row: &[Rational]) -> Result<Rational, ModelError> {
        match self {
            Valuation::Cardinal(c) => expected_utility(row, c),
            Valuation::Dichotomous(d) => {
                if let Some(&bad) = d.interested.iter().find(|&&j| j >= row.len()) {
                    return Err(ModelError::ItemOutOfRange { item: bad, m: row.len() });
                }
                Ok(d.utility(row))
            }
        }
    }

    pub fn check_compatible(&self, profile: &OrdinalProfile) -> Result<(), ModelError> {
        profile.check_agent(self.agent())?;
        match self {
            Valuation::Cardinal(c) => c.check_compatible(profile.ordering(c.agent)),
            Valuation::Dichotomous(d) => {
                DichotomousValuation::new(profile, d.agent, d.interested.clone(), d.epsilon.clone()).map(|_| ())
            }
        }
    }
}

impl From<CardinalUtilities> for Valuation {
    fn from(c: CardinalUtilities) -> Self {
        Valuation::Cardinal(c)
    }
}

impl From<DichotomousValuation> for Valuation {
    fn from(d: DichotomousValuation) -> Self {
        Valuation::Dichotomous(d)
    }
}

/// A time that may never arrive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Horizon {
    At(Rational),
    Never,
}

impl Horizon {
    pub fn time(&self) -> Option<&Rational> {
        match self {
            Horizon::At(t) => Some(t),
            Horizon::Never => None,
        }
    }

    pub fn is_never(&self) -> bool {
        matches!(self, Horizon::Never)
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::At(t) => write!(f, "{t}"),
            Horizon::Never => f.write_str("never"),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Horizon::At(t) => t.serialize(s),
            Horizon::Never => s.serialize_str("never"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "never" | "inf" => Ok(Horizon::Never),
            other => other.parse().map(Horizon::At).map_err(serde::de::Error::custom),
        }
    }
}

/// Half-open pause `[start, end)`; `end = Never` pauses forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauseInterval {
    pub start: Rational,
    pub end: Horizon,
}

impl PauseInterval {
    pub fn new(start: Rational, end: Horizon) -> Self {
        PauseInterval { start, end }
    }

    pub fn forever() -> Self {
        PauseInterval { start: Rational::zero(), end: Horizon::Never }
    }

    pub fn contains(&self, t: &Rational) -> bool {
        self.start <= *t
            && match &self.end {
                Horizon::At(e) => t < e,
                Horizon::Never => true,
            }
    }
}

/// Per-agent sorted, disjoint pause intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<usize, Vec<PauseInterval>>", into = "BTreeMap<usize, Vec<PauseInterval>>")]
pub struct PausePlan {
    agents: BTreeMap<usize, Vec<PauseInterval>>,
}

impl TryFrom<BTreeMap<usize, Vec<PauseInterval>>> for PausePlan {
    type Error = ModelError;
    fn try_from(map: BTreeMap<usize, Vec<PauseInterval>>) -> Result<Self, ModelError> {
        let mut plan = PausePlan::empty();
        for (agent, ivs) in map {
            plan.set(agent, ivs)?;
        }
        Ok(plan)
    }
}

impl From<PausePlan> for BTreeMap<usize, Vec<PauseInterval>> {
    fn from(p: PausePlan) -> Self {
        p.agents
    }
}

impl PausePlan {
    pub fn empty() -> Self {
        PausePlan::default()
    }

    /// Pause `agent` over `[0, ∞)`.
    pub fn eliminate(agent: usize) -> Self {
        let mut plan = PausePlan::empty();
        plan.agents.insert(agent, vec![PauseInterval::forever()]);
        plan
    }

    /// Sets the intervals of one agent. They are sorted by start and must be
    /// non-empty, non-negative and pairwise disjoint.
    pub fn set(&mut self, agent: usize, mut intervals: Vec<PauseInterval>) -> Result<(), ModelError> {
        let err = |reason: String| ModelError::PausePlan { agent, reason };
        intervals.sort_by(|a, b| a.start.cmp(&b.start));
        for iv in &intervals {
            if iv.start.is_negative() {
                return Err(err(format!("start {} is negative", iv.start)));
            }
            if let Horizon::At(e) = &iv.end {
                if *e <= iv.start {
                    return Err(err(format!("interval [{}, {}) is empty", iv.start, e)));
                }
            }
        }
        for w in intervals.windows(2) {
            match &w[0].end {
                Horizon::Never => {
                    return Err(err(format!("interval starting at {} follows an unbounded pause", w[1].start)))
                }
                Horizon::At(e) if *e > w[1].start => {
                    return Err(err(format!("intervals overlap at {}", w[1].start)));
                }
                _ => {}
            }
        }
        if intervals.is_empty() {
            self.agents.remove(&agent);
        } else {
            self.agents.insert(agent, intervals);
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn intervals(&self, agent: usize) -> &[PauseInterval] {
        self.agents.get(&agent).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.agents.keys().copied()
    }

    pub fn is_paused(&self, agent: usize, t: &Rational) -> bool {
        self.intervals(agent).iter().any(|iv| iv.contains(t))
    }

    /// All finite interval endpoints, sorted and deduplicated.
    pub fn endpoints(&self) -> Vec<Rational> {
        let mut pts: Vec<Rational> = self
            .agents
            .values()
            .flatten()
            .flat_map(|iv| std::iter::once(iv.start.clone()).chain(iv.end.time().cloned()))
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }
}

/// Maximal time interval over which every agent eats a single item (or idles).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Rational,
    pub end: Rational,
    /// Item each agent eats during the segment; `None` when idle or paused.
    pub eating: Vec<Option<usize>>,
}

impl Segment {
    pub fn eaters(&self, item: usize) -> usize {
        self.eating.iter().filter(|e| **e == Some(item)).count()
    }

    pub fn len(&self) -> Rational {
        &self.end - &self.start
    }
}

/// Full record of one simultaneous-eating run.
///
/// Agents eat at unit speed, so `allocation[i][j]` is also the time agent `i`
/// spent eating item `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EatingTrace {
    pub n: usize,
    pub m: usize,
    pub segments: Vec<Segment>,
    pub depletion: Vec<Horizon>,
    pub allocation: Vec<Vec<Rational>>,
}

impl EatingTrace {
    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.allocation[agent]
    }

    /// Time agent `agent` spent on `item`.
    pub fn duration(&self, agent: usize, item: usize) -> &Rational {
        &self.allocation[agent][item]
    }

    pub fn depletion_time(&self, item: usize) -> &Horizon {
        &self.depletion[item]
    }

    /// End of the last recorded segment.
    pub fn end_time(&self) -> Rational {
        self.segments.last().map(|s| s.end.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn column_sum(&self, item: usize) -> Rational {
        self.allocation.iter().map(|row| &row[item]).sum()
    }

    pub fn row_sum(&self, agent: usize) -> Rational {
        self.allocation[agent].iter().sum()
    }

    /// Segment boundaries including 0.
    pub fn breakpoints(&self) -> Vec<Rational> {
        let mut pts = vec![Rational::zero()];
        pts.extend(self.segments.iter().map(|s| s.end.clone()));
        pts
    }

    /// Human-readable timeline, one line per segment.
    pub fn timeline(&self, item_label: impl Fn(usize) -> String) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            let _ = write!(out, "[{}, {})", seg.start, seg.end);
            for (i, e) in seg.eating.iter().enumerate() {
                let what = e.map(&item_label).unwrap_or_else(|| "-".to_string());
                let _ = write!(out, "  {i}:{what}");
            }
            out.push('\n');
        }
        out
    }
}
