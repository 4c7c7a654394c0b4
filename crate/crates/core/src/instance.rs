//! JSON instance files.
//!
//! ```json
//! {
//!   "n": 3, "m": 3,
//!   "prefs": [[0, 1, 2], [1, 0, 2], [0, 2, 1]],
//!   "utilities": {"agent": 0, "values": ["1", "4/5", "0"]},
//!   "pauses": {"1": [["0", "1/2"], ["1", "inf"]]}
//! }
//! ```
//!
//! `utilities` may instead be `{"agent": 0, "interested": [0, 1], "epsilon":
//! "1/1000000000"}` (epsilon optional). A pause `end` of `"never"` or
//! `"inf"` pauses for good; `{"start": .., "end": ..}` objects are accepted in
//! place of pairs. A top-level `meta` object is ignored.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::generators::default_epsilon;
use crate::model::{
    CardinalUtilities, DichotomousValuation, Horizon, OrdinalProfile, PauseInterval, PausePlan, Valuation,
};
use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read instance: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("pause plan names agent {agent} but n = {n}")]
    PauseAgent { agent: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub profile: OrdinalProfile,
    pub valuation: Option<Valuation>,
    pub pauses: PausePlan,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawUtilities {
    Cardinal {
        agent: usize,
        values: Vec<Rational>,
    },
    Dichotomous {
        agent: usize,
        interested: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<Rational>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawInterval {
    Pair(Rational, Horizon),
    Object(PauseInterval),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: usize,
    m: usize,
    prefs: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utilities: Option<RawUtilities>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pauses: BTreeMap<usize, Vec<RawInterval>>,
    /// Provenance written by tools; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

impl Instance {
    pub fn new(
        profile: OrdinalProfile,
        valuation: Option<Valuation>,
        pauses: PausePlan,
    ) -> Result<Self, InstanceError> {
        if let Some(v) = &valuation {
            v.check_compatible(&profile)?;
        }
        if let Some(agent) = pauses.agents().find(|&a| a >= profile.n()) {
            return Err(InstanceError::PauseAgent { agent, n: profile.n() });
        }
        Ok(Instance { profile, valuation, pauses })
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let raw: RawInstance = serde_json::from_str(text)?;
        if raw.n != raw.prefs.len() {
            return Err(ModelError::from(crate::error::ProfileViolation::AgentCount {
                declared: raw.n,
                actual: raw.prefs.len(),
            })
            .into());
        }
        let profile = OrdinalProfile::new(raw.m, raw.prefs)?;
        let valuation = match raw.utilities {
            None => None,
            Some(RawUtilities::Cardinal { agent, values }) => {
                profile.check_agent(agent)?;
                Some(CardinalUtilities::new(agent, values)?.into())
            }
            Some(RawUtilities::Dichotomous { agent, interested, epsilon }) => Some(
                DichotomousValuation::new(&profile, agent, interested, epsilon.unwrap_or_else(default_epsilon))?.into(),
            ),
        };
        let mut pauses = PausePlan::empty();
        for (agent, ivs) in raw.pauses {
            let ivs = ivs
                .into_iter()
                .map(|iv| match iv {
                    RawInterval::Pair(start, end) => PauseInterval::new(start, end),
                    RawInterval::Object(iv) => iv,
                })
                .collect();
            pauses.set(agent, ivs)?;
        }
        Self::new(profile, valuation, pauses)
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        self.to_json_with_meta(None)
    }

    pub fn to_json_with_meta(&self, meta: Option<serde_json::Value>) -> String {
        let utilities = self.valuation.as_ref().map(|v| match v {
            Valuation::Cardinal(c) => RawUtilities::Cardinal { agent: c.agent, values: c.values().to_vec() },
            Valuation::Dichotomous(d) => RawUtilities::Dichotomous {
                agent: d.agent,
                interested: d.interested().to_vec(),
                epsilon: Some(d.epsilon().clone()),
            },
        });
        let raw = RawInstance {
            n: self.profile.n(),
            m: self.profile.m(),
            prefs: self.profile.prefs().to_vec(),
            utilities,
            pauses: self
                .pauses
                .agents()
                .map(|a| {
                    let ivs =
                        self.pauses.intervals(a).iter().map(|iv| RawInterval::Pair(iv.start.clone(), iv.end.clone()));
                    (a, ivs.collect())
                })
                .collect(),
            meta,
        };
        serde_json::to_string_pretty(&raw).expect("instance serializes")
    }
}
