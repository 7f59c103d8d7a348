//! Aggregation of demonstrations into per-action-pair keypoint difference
//! sets and the four-mixture action pair keypoint models fitted on them.
//!
//! All differences follow the convention `d = keypoint(first) -
//! keypoint(second)`: a negative start/start difference means the first
//! action starts earlier.

use crate::mixture::{fit_best, GaussianMixture, MixtureError};
use crate::temporal::{Action, ActionPair, Demonstration, TimeInterval};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApkmError {
    #[error("cannot build difference sets from an empty pair set")]
    EmptyPairSet,
    #[error("actions {0} and {1} never co-occur in any demonstration")]
    NoCooccurrence(Action, Action),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
}

/// The four keypoint combinations of an action pair: start/start, start/end,
/// end/start and end/end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Ss,
    Se,
    Es,
    Ee,
}

pub const ALL_CHANNELS: [Channel; 4] = [Channel::Ss, Channel::Se, Channel::Es, Channel::Ee];

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Ss => "ss",
            Channel::Se => "se",
            Channel::Es => "es",
            Channel::Ee => "ee",
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Observed temporal differences for each keypoint combination of a pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeypointDifferenceSets {
    pub t_ss: Vec<f64>,
    pub t_se: Vec<f64>,
    pub t_es: Vec<f64>,
    pub t_ee: Vec<f64>,
}

impl KeypointDifferenceSets {
    pub fn len(&self) -> usize {
        self.t_ss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_ss.is_empty()
    }

    pub fn channel(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Ss => &self.t_ss,
            Channel::Se => &self.t_se,
            Channel::Es => &self.t_es,
            Channel::Ee => &self.t_ee,
        }
    }
}

/// The four keypoint-difference mixtures of one ordered action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPairKeypointModel {
    pub first: Action,
    pub second: Action,
    pub m_ss: GaussianMixture,
    pub m_se: GaussianMixture,
    pub m_es: GaussianMixture,
    pub m_ee: GaussianMixture,
    pub pair_count: usize,
}

impl ActionPairKeypointModel {
    pub fn mixture(&self, channel: Channel) -> &GaussianMixture {
        match channel {
            Channel::Ss => &self.m_ss,
            Channel::Se => &self.m_se,
            Channel::Es => &self.m_es,
            Channel::Ee => &self.m_ee,
        }
    }
}

/// Collect, per demonstration, every ordered pair of observations of `a1`
/// and `a2` over the merged two-hand observation pool. Pairs never cross
/// demonstrations, and an observation is never paired with itself.
pub fn collect_pairs(
    demos: &[Demonstration],
    a1: &Action,
    a2: &Action,
) -> Vec<(TimeInterval, TimeInterval)> {
    let mut pairs = Vec::new();
    for demo in demos {
        let pool: Vec<_> = demo.observations().map(|(_, o)| o).collect();
        for (j, obs_j) in pool.iter().enumerate() {
            if obs_j.action != *a1 {
                continue;
            }
            for (k, obs_k) in pool.iter().enumerate() {
                if j == k || obs_k.action != *a2 {
                    continue;
                }
                pairs.push((obs_j.interval, obs_k.interval));
            }
        }
    }
    pairs
}

/// Collect instance pairs of a single action across hands: for every
/// left-hand and right-hand observation of `action` in the same
/// demonstration, both orientations are emitted. Same-hand repetitions are
/// not paired; they would only produce sequence-gap differences.
pub fn collect_cross_hand_pairs(
    demos: &[Demonstration],
    action: &Action,
) -> Vec<(TimeInterval, TimeInterval)> {
    let mut pairs = Vec::new();
    for demo in demos {
        for obs_l in demo.left.iter().filter(|o| o.action == *action) {
            for obs_r in demo.right.iter().filter(|o| o.action == *action) {
                pairs.push((obs_l.interval, obs_r.interval));
                pairs.push((obs_r.interval, obs_l.interval));
            }
        }
    }
    pairs
}

/// Turn interval pairs into the four keypoint difference sets.
pub fn build_differences(
    pairs: &[(TimeInterval, TimeInterval)],
) -> Result<KeypointDifferenceSets, ApkmError> {
    if pairs.is_empty() {
        return Err(ApkmError::EmptyPairSet);
    }
    let mut sets = KeypointDifferenceSets::default();
    for (i, k) in pairs {
        sets.t_ss.push(i.start - k.start);
        sets.t_se.push(i.start - k.end);
        sets.t_es.push(i.end - k.start);
        sets.t_ee.push(i.end - k.end);
    }
    Ok(sets)
}

/// Build the keypoint model for the ordered pair `(a1, a2)`. For a self pair
/// (`a1 == a2`) only cross-hand instance pairs are used.
pub fn build_apkm(
    demos: &[Demonstration],
    a1: &Action,
    a2: &Action,
    seed: u64,
) -> Result<ActionPairKeypointModel, ApkmError> {
    let pairs = if a1 == a2 {
        collect_cross_hand_pairs(demos, a1)
    } else {
        collect_pairs(demos, a1, a2)
    };
    if pairs.is_empty() {
        return Err(ApkmError::NoCooccurrence(a1.clone(), a2.clone()));
    }
    let sets = build_differences(&pairs)?;
    Ok(ActionPairKeypointModel {
        first: a1.clone(),
        second: a2.clone(),
        m_ss: fit_best(&sets.t_ss, seed)?,
        m_se: fit_best(&sets.t_se, seed)?,
        m_es: fit_best(&sets.t_es, seed)?,
        m_ee: fit_best(&sets.t_ee, seed)?,
        pair_count: sets.len(),
    })
}

/// All actions observed anywhere in the demonstrations, sorted.
pub fn action_vocabulary(demos: &[Demonstration]) -> Vec<Action> {
    let mut set: Vec<Action> = demos
        .iter()
        .flat_map(|d| d.observations().map(|(_, o)| o.action.clone()))
        .collect();
    set.sort();
    set.dedup();
    set
}

/// Build one model per ordered action pair with at least one co-occurrence.
/// Self pairs are included when the action appears on both hands of some
/// demonstration.
pub fn build_all(
    demos: &[Demonstration],
    seed: u64,
) -> BTreeMap<(Action, Action), ActionPairKeypointModel> {
    let vocab = action_vocabulary(demos);
    let mut out = BTreeMap::new();
    for a1 in &vocab {
        for a2 in &vocab {
            if let Ok(model) = build_apkm(demos, a1, a2, seed) {
                out.insert((a1.clone(), a2.clone()), model);
            }
        }
    }
    out
}

/// Models for the canonical orientation only: one per unordered pair of
/// distinct actions (oriented lexicographically) plus one per
/// cross-hand-co-occurring self pair. This is what the learning pipeline
/// consumes; the reverse orientation is recoverable by inversion.
#[derive(Debug, Clone, Default)]
pub struct CanonicalModels {
    pub pairs: BTreeMap<ActionPair, ActionPairKeypointModel>,
    pub self_pairs: BTreeMap<Action, ActionPairKeypointModel>,
}

pub fn build_canonical(demos: &[Demonstration], seed: u64) -> CanonicalModels {
    let vocab = action_vocabulary(demos);
    let mut models = CanonicalModels::default();
    for (i, a1) in vocab.iter().enumerate() {
        if let Ok(model) = build_apkm(demos, a1, a1, seed) {
            models.self_pairs.insert(a1.clone(), model);
        }
        for a2 in vocab.iter().skip(i + 1) {
            if let Ok(model) = build_apkm(demos, a1, a2, seed) {
                let pair = ActionPair::try_new(a1.clone(), a2.clone()).expect("distinct");
                models.pairs.insert(pair, model);
            }
        }
    }
    models
}
