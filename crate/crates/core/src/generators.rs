//! Instance construction: seeded random profiles, dichotomous valuations,
//! the classic 3×3 manipulation example, the tight-bound family and the
//! transformation from cardinal to dichotomous utilities.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::model::{CardinalUtilities, DichotomousValuation, Horizon, OrdinalProfile, PauseInterval, PausePlan};
use crate::rational::{r, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeneratorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("n and m must both be at least 1")]
    EmptyInstance,
    #[error("k = {k} must lie in 1..={m}")]
    KOutOfRange { k: usize, m: usize },
    #[error("tight instance needs an even n >= 6, got {0}")]
    TightSize(usize),
    #[error("vectors must have equal non-zero length")]
    LengthMismatch,
    #[error("durations must be non-negative")]
    NegativeDuration,
    #[error("truthful durations are all zero; prefix ratios are undefined")]
    ZeroDurations,
    #[error("prefix {prefix} has zero truthful duration but positive manipulated duration")]
    UnboundedPrefix { prefix: usize },
    #[error("utilities must lie in [0, 1] and strictly decrease along the ordering")]
    NotDecreasing,
    #[error("epsilon must satisfy 0 < m·epsilon < 1")]
    EpsilonRange,
}

/// Default ε when a strict cardinal vector has to be materialized.
pub fn default_epsilon() -> Rational {
    Rational::pow10_recip(9)
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit experiment seed. Sub-seeds are a pure function of the parent seed
/// and a counter, so work can be split across threads in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn derive(self, counter: u64) -> Seed {
        Seed(mix64(self.0 ^ mix64(counter.wrapping_add(0x9e37_79b9_7f4a_7c15))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// `n` independent uniformly random orderings of `m` items.
pub fn random_profile(n: usize, m: usize, seed: Seed) -> Result<OrdinalProfile, GeneratorError> {
    if n == 0 || m == 0 {
        return Err(GeneratorError::EmptyInstance);
    }
    let mut rng = seed.rng();
    let prefs = (0..n)
        .map(|_| {
            let mut row: Vec<usize> = (0..m).collect();
            row.shuffle(&mut rng);
            row
        })
        .collect();
    Ok(OrdinalProfile::new(m, prefs)?)
}

/// Random pause plan for `n` agents. Each agent gets up to two pauses with
/// endpoints on the grid `j/12`, `0 ≤ j ≤ 24`; a final pause may last
/// forever.
pub fn random_pause_plan(n: usize, seed: Seed) -> PausePlan {
    let mut rng = seed.rng();
    let mut plan = PausePlan::empty();
    for agent in 0..n {
        let count = rng.gen_range(0..=2usize);
        if count == 0 {
            continue;
        }
        let mut pts = rand::seq::index::sample(&mut rng, 25, 2 * count).into_vec();
        pts.sort_unstable();
        let forever = rng.gen_bool(0.25);
        let intervals = pts
            .chunks(2)
            .enumerate()
            .map(|(i, c)| {
                let end = if forever && i + 1 == count { Horizon::Never } else { Horizon::At(r(c[1] as i64, 12)) };
                PauseInterval::new(r(c[0] as i64, 12), end)
            })
            .collect();
        plan.set(agent, intervals).expect("sorted disjoint intervals");
    }
    plan
}

/// Random profile with `1 ≤ n, m ≤ max_size` and a random pause plan.
pub fn random_paused_instance(max_size: usize, seed: Seed) -> (OrdinalProfile, PausePlan) {
    let mut rng = seed.rng();
    let n = rng.gen_range(1..=max_size);
    let m = rng.gen_range(1..=max_size);
    let profile = random_profile(n, m, seed.derive(0)).expect("non-empty");
    (profile, random_pause_plan(n, seed.derive(1)))
}

/// Dichotomous valuation interested in the agent's top `k` items.
pub fn dichotomous_for(
    profile: &OrdinalProfile,
    agent: usize,
    k: usize,
    epsilon: Rational,
) -> Result<DichotomousValuation, GeneratorError> {
    profile.check_agent(agent)?;
    let m = profile.m();
    if k == 0 || k > m {
        return Err(GeneratorError::KOutOfRange { k, m });
    }
    Ok(DichotomousValuation::new(profile, agent, profile.ordering(agent)[..k].to_vec(), epsilon)?)
}

/// Member of the family on which the 3/2 bound is approached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightInstance {
    pub profile: OrdinalProfile,
    pub valuation: DichotomousValuation,
    /// Report that demotes item 0 behind the other interested items.
    pub strategy: Vec<usize>,
}

/// Agents 0 and 1 rank `0 ≻ 1 ≻ … ≻ n-1`; everyone else ranks
/// `1 ≻ 2 ≻ … ≻ n-1 ≻ 0`. Agent 0 is interested in items `0..n/2-1`.
pub fn tight_instance(n: usize) -> Result<TightInstance, GeneratorError> {
    if n < 6 || n % 2 == 1 {
        return Err(GeneratorError::TightSize(n));
    }
    let top: Vec<usize> = (0..n).collect();
    let rest: Vec<usize> = (1..n).chain([0]).collect();
    let prefs = (0..n).map(|i| if i < 2 { top.clone() } else { rest.clone() }).collect();
    let profile = OrdinalProfile::new(n, prefs)?;
    let k = n / 2 - 1;
    let valuation = DichotomousValuation::new(&profile, 0, (0..k).collect(), default_epsilon())?;
    let strategy = (1..k).chain([0]).chain(k..n).collect();
    Ok(TightInstance { profile, valuation, strategy })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkedExample {
    pub profile: OrdinalProfile,
    pub utilities: CardinalUtilities,
    pub misreport: Vec<usize>,
}

/// Three agents, items `a = 0`, `b = 1`, `c = 2`:
/// `b ≻ a ≻ c`, `a ≻ b ≻ c`, `a ≻ c ≻ b`, with agent 0 valuing
/// `(9/10, 1, 0)` and misreporting `a ≻ b ≻ c`.
pub fn worked_example() -> WorkedExample {
    let profile = OrdinalProfile::new(3, vec![vec![1, 0, 2], vec![0, 1, 2], vec![0, 2, 1]]).expect("valid profile");
    let utilities = CardinalUtilities::new(0, vec![r(9, 10), r(1, 1), r(0, 1)]).expect("values in range");
    WorkedExample { profile, utilities, misreport: vec![0, 1, 2] }
}

/// Result of [`dichotomize`]. Vectors are indexed by rank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dichotomized {
    /// Length of the prefix attaining the largest prefix ratio (1-based).
    pub k: usize,
    pub values: Vec<Rational>,
    pub c_max: Rational,
}

/// `Σ w_j l'_j / Σ w_j l_j`, or `None` when the denominator vanishes.
pub fn weighted_ratio(weights: &[Rational], durations: &[Rational], manipulated: &[Rational]) -> Option<Rational> {
    let num: Rational = weights.iter().zip(manipulated).map(|(w, x)| w * x).sum();
    let den: Rational = weights.iter().zip(durations).map(|(w, x)| w * x).sum();
    num.checked_div(&den)
}

/// Pushes a strictly decreasing utility vector towards a dichotomous one
/// without lowering the manipulation ratio.
///
/// `utilities`, `durations` (truthful eating times) and `manipulated`
/// (eating times under the misreport) are indexed by rank in the agent's
/// truthful ordering. `k` is the first prefix maximizing
/// `Σ_{h≤j} l'_h / Σ_{h≤j} l_h`; prefixes with both sums zero are skipped.
/// The returned values are `1 - (j-1)ε` for ranks `j ≤ k` and `(m-j)ε`
/// beyond.
pub fn dichotomize(
    utilities: &[Rational],
    durations: &[Rational],
    manipulated: &[Rational],
    epsilon: &Rational,
) -> Result<Dichotomized, GeneratorError> {
    let m = utilities.len();
    if m == 0 || durations.len() != m || manipulated.len() != m {
        return Err(GeneratorError::LengthMismatch);
    }
    let (zero, one) = (Rational::zero(), Rational::one());
    if utilities.iter().any(|a| *a < zero || *a > one) || utilities.windows(2).any(|w| w[0] <= w[1]) {
        return Err(GeneratorError::NotDecreasing);
    }
    if durations.iter().chain(manipulated).any(Rational::is_negative) {
        return Err(GeneratorError::NegativeDuration);
    }
    if !epsilon.is_positive() || Rational::from(m) * epsilon >= one {
        return Err(GeneratorError::EpsilonRange);
    }
    if durations.iter().all(Rational::is_zero) {
        return Err(GeneratorError::ZeroDurations);
    }

    let (mut sum_l, mut sum_lp) = (Rational::zero(), Rational::zero());
    let mut best: Option<(usize, Rational)> = None;
    for j in 0..m {
        sum_l += &durations[j];
        sum_lp += &manipulated[j];
        if sum_l.is_zero() {
            if sum_lp.is_zero() {
                continue;
            }
            return Err(GeneratorError::UnboundedPrefix { prefix: j + 1 });
        }
        let ratio = &sum_lp / &sum_l;
        if best.as_ref().is_none_or(|(_, c)| ratio > *c) {
            best = Some((j + 1, ratio));
        }
    }
    let (k, c_max) = best.expect("some prefix has positive truthful duration");
    let values = (1..=m)
        .map(|j| if j <= k { &one - Rational::from(j - 1) * epsilon } else { Rational::from(m - j) * epsilon })
        .collect();
    Ok(Dichotomized { k, values, c_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{allocation, run_ps};

    #[test]
    fn random_profiles_are_deterministic() {
        let p = random_profile(1, 1, Seed(99)).unwrap();
        assert_eq!(p.prefs(), &[vec![0]]);
        let a = random_profile(6, 7, Seed(42)).unwrap();
        let b = random_profile(6, 7, Seed(42)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_profile(6, 7, Seed(43)).unwrap());
        assert!(random_profile(0, 3, Seed(1)).is_err());
    }

    #[test]
    fn random_pause_plans_are_valid() {
        for i in 0..200 {
            let (p, plan) = random_paused_instance(10, Seed(3).derive(i));
            assert!(p.n() <= 10 && p.m() <= 10);
            assert!(plan.agents().all(|a| a < p.n()));
            assert_eq!(plan, random_paused_instance(10, Seed(3).derive(i)).1);
        }
    }

    #[test]
    fn sub_seeds_are_pure() {
        let s = Seed(7);
        assert_eq!(s.derive(3), Seed(7).derive(3));
        assert_ne!(s.derive(3), s.derive(4));
        assert_ne!(s.derive(3).derive(1), s.derive(1).derive(3));
    }

    #[test]
    fn top_item_is_uniform() {
        // first-ranked item of agent 0 over 10^4 seeds; chi-square with 7 dof
        let draws = 10_000u64;
        let mut counts = [0u64; 8];
        for i in 0..draws {
            counts[random_profile(8, 8, Seed(2024).derive(i)).unwrap().ordering(0)[0]] += 1;
        }
        let expect = draws as f64 / 8.0;
        let sigma = (draws as f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
        let mut chi2 = 0.0;
        for &c in &counts {
            assert!((c as f64 - expect).abs() <= 3.0 * sigma, "{counts:?}");
            chi2 += (c as f64 - expect).powi(2) / expect;
        }
        // 0.999 quantile of chi-square(7)
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }

    #[test]
    fn dichotomous_prefixes() {
        let w = worked_example();
        let d = dichotomous_for(&w.profile, 0, 2, default_epsilon()).unwrap();
        assert_eq!(d.interested(), &[1, 0]);
        let d1 = dichotomous_for(&w.profile, 0, 1, default_epsilon()).unwrap();
        assert_eq!(d1.interested(), &[1]);
        let all = dichotomous_for(&w.profile, 0, 3, default_epsilon()).unwrap();
        assert_eq!(all.utility(run_ps(&w.profile).row(0)), Rational::one());
        assert!(matches!(
            dichotomous_for(&w.profile, 0, 0, default_epsilon()),
            Err(GeneratorError::KOutOfRange { .. })
        ));
        assert!(matches!(
            dichotomous_for(&w.profile, 0, 4, default_epsilon()),
            Err(GeneratorError::KOutOfRange { .. })
        ));
    }

    #[test]
    fn full_interest_utility_is_m_over_n() {
        let p = random_profile(5, 3, Seed(11)).unwrap();
        let d = dichotomous_for(&p, 2, 3, default_epsilon()).unwrap();
        assert_eq!(d.utility(run_ps(&p).row(2)), r(3, 5));
    }

    #[test]
    fn worked_example_rows() {
        let w = worked_example();
        let truthful = allocation(&w.profile);
        assert_eq!(truthful[0], vec![r(0, 1), r(3, 4), r(1, 4)]);
        let lied = allocation(&w.profile.with_report(0, &w.misreport).unwrap());
        assert_eq!(lied[0], vec![r(1, 3), r(1, 2), r(1, 6)]);
        let u = crate::model::expected_utility(&truthful[0], &w.utilities).unwrap();
        let u2 = crate::model::expected_utility(&lied[0], &w.utilities).unwrap();
        assert_eq!((u, u2), (r(3, 4), r(4, 5)));
    }

    #[test]
    fn tight_instance_shape() {
        let t = tight_instance(10).unwrap();
        assert_eq!(t.profile.ordering(1), &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        assert_eq!(t.profile.ordering(5), &[1, 2, 3, 4, 5, 6, 7, 8, 9, 0]);
        assert_eq!(t.valuation.interested(), &[0, 1, 2, 3]);
        assert_eq!(t.strategy, vec![1, 2, 3, 0, 4, 5, 6, 7, 8, 9]);
        for bad in [4, 7, 0] {
            assert_eq!(tight_instance(bad), Err(GeneratorError::TightSize(bad)));
        }
    }

    #[test]
    fn tight_instance_values_at_ten() {
        let t = tight_instance(10).unwrap();
        let u = t.valuation.utility(&allocation(&t.profile)[0]);
        let u2 = t.valuation.utility(&allocation(&t.profile.with_report(0, &t.strategy).unwrap())[0]);
        assert_eq!(u, r(1, 2));
        assert_eq!(u2, r(2, 3));
    }

    #[test]
    fn dichotomize_examples() {
        let a = [r(1, 1), r(1, 2)];
        let eps = r(1, 1000);
        let same = dichotomize(&a, &[r(1, 2), r(1, 4)], &[r(1, 2), r(1, 4)], &eps).unwrap();
        assert_eq!((same.k, same.c_max), (1, Rational::one()));
        let d = dichotomize(&a, &[r(1, 2), r(1, 2)], &[r(1, 1), r(0, 1)], &eps).unwrap();
        assert_eq!((d.k, d.c_max.clone()), (1, r(2, 1)));
        assert_eq!(d.values, vec![r(1, 1), r(0, 1)]);
        let d = dichotomize(&a, &[r(1, 4), r(1, 4)], &[r(1, 4), r(1, 2)], &eps).unwrap();
        assert_eq!((d.k, d.c_max), (2, r(3, 2)));
        assert_eq!(d.values, vec![r(1, 1), r(999, 1000)]);
    }

    #[test]
    fn dichotomize_errors() {
        let a = [r(1, 1), r(1, 2)];
        let eps = r(1, 1000);
        let z = [Rational::zero(), Rational::zero()];
        assert_eq!(dichotomize(&a, &z, &z, &eps), Err(GeneratorError::ZeroDurations));
        assert_eq!(
            dichotomize(&a, &[r(0, 1), r(1, 1)], &[r(1, 1), r(0, 1)], &eps),
            Err(GeneratorError::UnboundedPrefix { prefix: 1 })
        );
        assert_eq!(dichotomize(&[r(1, 2), r(1, 2)], &[r(1, 1), r(0, 1)], &z, &eps), Err(GeneratorError::NotDecreasing));
        assert_eq!(dichotomize(&a, &[r(1, 1)], &z, &eps), Err(GeneratorError::LengthMismatch));
        assert_eq!(dichotomize(&a, &[r(1, 1), r(0, 1)], &z, &r(1, 2)), Err(GeneratorError::EpsilonRange));
    }
}
