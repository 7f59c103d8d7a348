//! Inference of a contradiction-free set of symbolic temporal task
//! constraints from per-pair fuzzy relation profiles.
//!
//! Candidates are assigned greedily in order of decreasing membership; each
//! tentative assignment is checked with path consistency against everything
//! assigned so far, with all still-open pairs unconstrained. A rejected
//! candidate falls back to the pair's next-best relation above the
//! threshold, or leaves the pair unassigned.

use crate::fuzzy::FuzzyAllenProfile;
use crate::temporal::{compose_sets, Action, ActionPair, AllenRelation, AllenSet};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default membership threshold for assignment.
pub const DEFAULT_THETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Minimum membership a relation needs to become a constraint.
    pub theta: f64,
    /// Try the next-best relation of a pair when a candidate is rejected for
    /// inconsistency.
    pub allow_fallback: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta: DEFAULT_THETA,
            allow_fallback: true,
        }
    }
}

/// One symbolic constraint: a relation and the membership it was assigned
/// with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sttc {
    pub relation: AllenRelation,
    pub membership: f64,
}

/// A contradiction-free constraint assignment. Network constraints map
/// canonical pairs to relations; bimanual-symmetric actions are reported
/// separately since self loops are outside the network semantics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SttcSet {
    pub assignments: BTreeMap<ActionPair, Sttc>,
    pub symmetric: BTreeMap<Action, f64>,
}

impl SttcSet {
    pub fn relation(&self, pair: &ActionPair) -> Option<AllenRelation> {
        self.assignments.get(pair).map(|c| c.relation)
    }

    /// Equality on the assigned relations, ignoring memberships.
    pub fn same_relations(&self, other: &SttcSet) -> bool {
        self.assignments.len() == other.assignments.len()
            && self
                .assignments
                .iter()
                .all(|(pair, c)| other.relation(pair) == Some(c.relation))
    }
}

/// Enforce path consistency on a qualitative network. Pairs missing from
/// `constraints` are unconstrained. Returns the reduced domains for every
/// pair of mentioned actions, or `None` if some domain becomes empty.
pub fn path_consistency(
    constraints: &BTreeMap<ActionPair, AllenSet>,
) -> Option<BTreeMap<ActionPair, AllenSet>> {
    let mut actions: Vec<&Action> = Vec::new();
    for pair in constraints.keys() {
        actions.push(pair.first());
        actions.push(pair.second());
    }
    actions.sort();
    actions.dedup();
    let n = actions.len();
    if n == 0 {
        return Some(BTreeMap::new());
    }
    let idx =
        |a: &Action| -> usize { actions.binary_search(&a).expect("action is in the node list") };

    let mut domains = vec![AllenSet::FULL; n * n];
    for i in 0..n {
        domains[i * n + i] = AllenSet::singleton(AllenRelation::Equals);
    }
    for (pair, set) in constraints {
        let (i, j) = (idx(pair.first()), idx(pair.second()));
        domains[i * n + j] = domains[i * n + j].intersect(*set);
        domains[j * n + i] = domains[j * n + i].intersect(set.inverse());
        if domains[i * n + j].is_empty() {
            return None;
        }
    }

    // Naive fixpoint iteration; the networks here are small.
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let through_k = compose_sets(domains[i * n + k], domains[k * n + j]);
                    let reduced = domains[i * n + j].intersect(through_k);
                    if reduced != domains[i * n + j] {
                        if reduced.is_empty() {
                            return None;
                        }
                        domains[i * n + j] = reduced;
                        domains[j * n + i] = reduced.inverse();
                        changed = true;
                    }
                }
            }
        }
    }

    let mut out = BTreeMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let pair = ActionPair::try_new(actions[i].clone(), actions[j].clone())
                .expect("actions are distinct");
            out.insert(pair, domains[i * n + j]);
        }
    }
    Some(out)
}

fn is_consistent(constraints: &BTreeMap<ActionPair, AllenSet>) -> bool {
    path_consistency(constraints).is_some()
}

/// Assign at most one relation per pair, greedily by membership, keeping the
/// network contradiction free. Self-pair profiles become
/// bimanual-symmetric constraints when their equality membership reaches the
/// threshold.
pub fn infer_sttcs(
    profiles: &BTreeMap<ActionPair, FuzzyAllenProfile>,
    self_profiles: &BTreeMap<Action, FuzzyAllenProfile>,
    config: &SolverConfig,
) -> SttcSet {
    // candidate relations above threshold, best first; relation order breaks
    // membership ties
    let mut queue: Vec<(&ActionPair, Vec<(AllenRelation, f64)>)> = profiles
        .iter()
        .map(|(pair, profile)| {
            let mut candidates: Vec<(AllenRelation, f64)> = profile
                .iter()
                .filter(|(_, m)| *m >= config.theta)
                .collect();
            candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.index().cmp(&b.0.index())));
            (pair, candidates)
        })
        .collect();
    queue.sort_by(|(pa, ca), (pb, cb)| {
        let best_a = ca.first().map(|c| c.1).unwrap_or(f64::NEG_INFINITY);
        let best_b = cb.first().map(|c| c.1).unwrap_or(f64::NEG_INFINITY);
        best_b.total_cmp(&best_a).then_with(|| pa.cmp(pb))
    });

    let mut assigned: BTreeMap<ActionPair, Sttc> = BTreeMap::new();
    let mut network: BTreeMap<ActionPair, AllenSet> = BTreeMap::new();
    for (pair, candidates) in queue {
        for (attempt, (relation, membership)) in candidates.into_iter().enumerate() {
            if attempt > 0 && !config.allow_fallback {
                break;
            }
            network.insert(pair.clone(), AllenSet::singleton(relation));
            if is_consistent(&network) {
                assigned.insert(pair.clone(), Sttc { relation, membership });
                break;
            }
            network.remove(pair);
        }
    }

    let symmetric = self_profiles
        .iter()
        .filter_map(|(action, profile)| {
            let membership = profile.get(AllenRelation::Equals);
            (membership >= config.theta).then(|| (action.clone(), membership))
        })
        .collect();

    let result = SttcSet {
        assignments: assigned,
        symmetric,
    };
    // post-hoc guard: the assignment must form a consistent network
    assert!(is_consistent(
        &result
            .assignments
            .iter()
            .map(|(p, c)| (p.clone(), AllenSet::singleton(c.relation)))
            .collect()
    ));
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::{classify_interval, ALL_RELATIONS};

    fn action(name: &str) -> Action {
        Action::new(name, "obj")
    }

    fn pair(a: &str, b: &str) -> ActionPair {
        ActionPair::try_new(action(a), action(b)).unwrap()
    }

    fn profile(entries: &[(AllenRelation, f64)]) -> FuzzyAllenProfile {
        let mut memberships = [0.0; 13];
        for (r, m) in entries {
            memberships[r.index()] = *m;
        }
        FuzzyAllenProfile::from_memberships(memberships)
    }

    #[test]
    fn path_consistency_propagates_before_chains() {
        let mut constraints = BTreeMap::new();
        constraints.insert(pair("a", "b"), AllenSet::singleton(AllenRelation::Before));
        constraints.insert(pair("b", "c"), AllenSet::singleton(AllenRelation::Before));
        let reduced = path_consistency(&constraints).unwrap();
        assert_eq!(
            reduced[&pair("a", "c")],
            AllenSet::singleton(AllenRelation::Before)
        );
    }

    #[test]
    fn path_consistency_detects_contradiction() {
        // a before b and simultaneously b before a: the domain intersection
        // on the canonical pair is already empty
        let mut both = BTreeMap::new();
        both.insert(
            pair("a", "b"),
            AllenSet::singleton(AllenRelation::Before)
                .intersect(AllenSet::singleton(AllenRelation::After)),
        );
        assert!(path_consistency(&both).is_none());

        // three-node cycle of strict precedence
        let mut cyc = BTreeMap::new();
        cyc.insert(pair("a", "b"), AllenSet::singleton(AllenRelation::Before));
        cyc.insert(pair("b", "c"), AllenSet::singleton(AllenRelation::Before));
        cyc.insert(pair("a", "c"), AllenSet::singleton(AllenRelation::After));
        assert!(path_consistency(&cyc).is_none());
    }

    #[test]
    fn singleton_network_from_a_timeline_is_stable() {
        // a concrete timeline: every pairwise classification is consistent
        use crate::temporal::TimeInterval;
        let intervals = [
            ("a", TimeInterval { start: 0.0, end: 2.0 }),
            ("b", TimeInterval { start: 1.0, end: 4.0 }),
            ("c", TimeInterval { start: 3.0, end: 5.0 }),
            ("d", TimeInterval { start: 0.5, end: 1.5 }),
        ];
        let mut constraints = BTreeMap::new();
        for (i, (na, ia)) in intervals.iter().enumerate() {
            for (nb, ib) in intervals.iter().skip(i + 1) {
                let rel = classify_interval(ia, ib, 0.0).unwrap();
                constraints.insert(pair(na, nb), AllenSet::singleton(rel));
            }
        }
        let reduced = path_consistency(&constraints).unwrap();
        for (p, set) in &constraints {
            assert_eq!(reduced[p], *set);
        }
    }

    #[test]
    fn single_strong_candidate_is_assigned() {
        let mut profiles = BTreeMap::new();
        profiles.insert(
            pair("a", "b"),
            profile(&[(AllenRelation::Before, 0.95), (AllenRelation::Meets, 0.08)]),
        );
        let result = infer_sttcs(&profiles, &BTreeMap::new(), &SolverConfig::default());
        assert_eq!(result.relation(&pair("a", "b")), Some(AllenRelation::Before));
        assert!((result.assignments[&pair("a", "b")].membership - 0.95).abs() < 1e-12);
    }

    #[test]
    fn three_cycle_keeps_the_two_strongest_edges() {
        let mut profiles = BTreeMap::new();
        profiles.insert(pair("a", "b"), profile(&[(AllenRelation::Before, 0.9)]));
        profiles.insert(pair("b", "c"), profile(&[(AllenRelation::Before, 0.9)]));
        // c before a, stated on the canonical pair (a, c) as After
        profiles.insert(pair("a", "c"), profile(&[(AllenRelation::After, 0.8)]));
        let result = infer_sttcs(&profiles, &BTreeMap::new(), &SolverConfig::default());
        assert_eq!(result.relation(&pair("a", "b")), Some(AllenRelation::Before));
        assert_eq!(result.relation(&pair("b", "c")), Some(AllenRelation::Before));
        assert_eq!(result.relation(&pair("a", "c")), None);

        // brute force: maximize total membership over consistent assignments
        let pairs = [pair("a", "b"), pair("b", "c"), pair("a", "c")];
        let options: Vec<Vec<Option<(AllenRelation, f64)>>> = pairs
            .iter()
            .map(|p| {
                let mut opts: Vec<Option<(AllenRelation, f64)>> = profiles[p]
                    .iter()
                    .filter(|(_, m)| *m >= 0.5)
                    .map(Some)
                    .collect();
                opts.push(None);
                opts
            })
            .collect();
        let mut best = f64::NEG_INFINITY;
        for i in 0..options[0].len() {
            for j in 0..options[1].len() {
                for k in 0..options[2].len() {
                    let choice = [options[0][i], options[1][j], options[2][k]];
                    let mut network = BTreeMap::new();
                    let mut total = 0.0;
                    for (p, c) in pairs.iter().zip(choice.iter()) {
                        if let Some((r, m)) = c {
                            network.insert(p.clone(), AllenSet::singleton(*r));
                            total += m;
                        }
                    }
                    if path_consistency(&network).is_some() {
                        best = best.max(total);
                    }
                }
            }
        }
        let greedy_total: f64 = result.assignments.values().map(|c| c.membership).sum();
        assert!((greedy_total - best).abs() < 1e-12, "greedy {greedy_total} vs optimum {best}");
    }

    #[test]
    fn below_threshold_pairs_stay_unassigned() {
        let mut profiles = BTreeMap::new();
        profiles.insert(
            pair("a", "b"),
            profile(&[(AllenRelation::Before, 0.45), (AllenRelation::After, 0.4)]),
        );
        let result = infer_sttcs(&profiles, &BTreeMap::new(), &SolverConfig::default());
        assert!(result.assignments.is_empty());
    }

    #[test]
    fn dominant_conflict_free_input_is_fully_assigned() {
        // relations taken from one concrete timeline are mutually consistent
        use crate::temporal::TimeInterval;
        let intervals = [
            ("a", TimeInterval { start: 0.0, end: 2.0 }),
            ("b", TimeInterval { start: 1.0, end: 4.0 }),
            ("c", TimeInterval { start: 3.0, end: 5.0 }),
            ("d", TimeInterval { start: 6.0, end: 7.0 }),
        ];
        let mut profiles = BTreeMap::new();
        let mut expected = BTreeMap::new();
        for (i, (na, ia)) in intervals.iter().enumerate() {
            for (nb, ib) in intervals.iter().skip(i + 1) {
                let rel = classify_interval(ia, ib, 0.0).unwrap();
                profiles.insert(pair(na, nb), profile(&[(rel, 1.0)]));
                expected.insert(pair(na, nb), rel);
            }
        }
        let result = infer_sttcs(&profiles, &BTreeMap::new(), &SolverConfig::default());
        assert_eq!(result.assignments.len(), expected.len());
        for (p, rel) in expected {
            assert_eq!(result.relation(&p), Some(rel));
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let mut profiles = BTreeMap::new();
        for (i, r) in ALL_RELATIONS.iter().enumerate() {
            profiles.insert(
                pair(&format!("x{i}"), &format!("y{i}")),
                profile(&[(*r, 0.7), (r.inverse(), 0.6)]),
            );
        }
        let a = infer_sttcs(&profiles, &BTreeMap::new(), &SolverConfig::default());
        let b = infer_sttcs(&profiles, &BTreeMap::new(), &SolverConfig::default());
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_actions_bypass_the_network() {
        let mut self_profiles = BTreeMap::new();
        self_profiles.insert(action("lift"), profile(&[(AllenRelation::Equals, 0.97)]));
        self_profiles.insert(action("shake"), profile(&[(AllenRelation::Equals, 0.2)]));
        let result = infer_sttcs(&BTreeMap::new(), &self_profiles, &SolverConfig::default());
        assert_eq!(result.symmetric.len(), 1);
        assert!((result.symmetric[&action("lift")] - 0.97).abs() < 1e-12);
    }
}
