//! Fuzzy temporal relations: degrees of membership of observed keypoint
//! differences to the point relations, and of action pairs to the thirteen
//! interval relations.
//!
//! A difference mixture is first filtered to the components whose means lie
//! strictly outside the equality margin `[-epsilon, epsilon]`. The
//! before/after memberships are the tail masses of that filtered mixture;
//! whatever remains (including all filtered-out components) counts as
//! equality. Interval-relation memberships combine the per-channel point
//! memberships of the relation's full four-condition signature with the
//! min-conjunction.

use crate::apkm::{ActionPairKeypointModel, ALL_CHANNELS};
use crate::mixture::{mass, GaussianMixture};
use crate::temporal::{signature_of, AllenRelation, PointRelation, ALL_RELATIONS};
use serde::{Deserialize, Serialize};

/// Default equality margin in seconds.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Fuzzification parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyConfig {
    /// Equality margin in seconds; must be positive.
    pub epsilon: f64,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        FuzzyConfig { epsilon: DEFAULT_EPSILON }
    }
}

/// Degrees of membership of a keypoint difference to the point relations.
/// The three memberships sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyPointMembership {
    pub before: f64,
    pub equals: f64,
    pub after: f64,
}

impl FuzzyPointMembership {
    pub fn get(&self, relation: PointRelation) -> f64 {
        match relation {
            PointRelation::Before => self.before,
            PointRelation::Equals => self.equals,
            PointRelation::After => self.after,
        }
    }
}

/// Indices of the components whose means lie strictly outside the equality
/// margin.
pub fn filtered_components(m: &GaussianMixture, epsilon: f64) -> Vec<usize> {
    debug_assert!(epsilon > 0.0);
    m.components
        .iter()
        .enumerate()
        .filter(|(_, c)| c.mean < -epsilon || c.mean > epsilon)
        .map(|(i, _)| i)
        .collect()
}

/// Fuzzy point memberships of the difference mixture `m` under margin
/// `epsilon`.
pub fn fuzzy_point(m: &GaussianMixture, epsilon: f64) -> FuzzyPointMembership {
    let filtered = filtered_components(m, epsilon);
    let before = mass(m, f64::NEG_INFINITY, -epsilon, Some(&filtered));
    let after = mass(m, epsilon, f64::INFINITY, Some(&filtered));
    FuzzyPointMembership {
        before,
        equals: 1.0 - before - after,
        after,
    }
}

/// Degrees of membership of an action pair to all thirteen interval
/// relations. Entries lie in `[0, 1]`; the min-conjunction does not
/// normalize them.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyAllenProfile {
    memberships: [f64; 13],
}

impl FuzzyAllenProfile {
    pub fn from_memberships(memberships: [f64; 13]) -> Self {
        debug_assert!(memberships.iter().all(|m| (0.0..=1.0).contains(m)));
        FuzzyAllenProfile { memberships }
    }

    pub fn get(&self, r: AllenRelation) -> f64 {
        self.memberships[r.index()]
    }

    /// The relation with the highest membership; ties resolve to the first
    /// relation in declaration order.
    pub fn argmax(&self) -> (AllenRelation, f64) {
        let mut best = (ALL_RELATIONS[0], self.memberships[0]);
        for r in ALL_RELATIONS.iter().skip(1) {
            if self.memberships[r.index()] > best.1 {
                best = (*r, self.memberships[r.index()]);
            }
        }
        best
    }

    pub fn iter(&self) -> impl Iterator<Item = (AllenRelation, f64)> + '_ {
        ALL_RELATIONS.iter().map(move |r| (*r, self.get(*r)))
    }

    /// The profile of the pair read in the opposite orientation.
    pub fn inverted(&self) -> Self {
        let mut memberships = [0.0; 13];
        for r in ALL_RELATIONS {
            memberships[r.index()] = self.get(r.inverse());
        }
        FuzzyAllenProfile { memberships }
    }
}

/// Fuzzy interval-relation memberships of an action pair from its keypoint
/// model: for each relation, the min-conjunction over all four channels of
/// the point membership required by the relation's signature.
pub fn fuzzy_allen(apkm: &ActionPairKeypointModel, config: &FuzzyConfig) -> FuzzyAllenProfile {
    let point: Vec<FuzzyPointMembership> = ALL_CHANNELS
        .iter()
        .map(|ch| fuzzy_point(apkm.mixture(*ch), config.epsilon))
        .collect();
    let mut memberships = [0.0; 13];
    for r in ALL_RELATIONS {
        let sig = signature_of(r);
        let required = [sig.ss, sig.se, sig.es, sig.ee];
        memberships[r.index()] = required
            .iter()
            .zip(point.iter())
            .map(|(rel, p)| p.get(*rel))
            .fold(f64::INFINITY, f64::min);
    }
    FuzzyAllenProfile { memberships }
}
