//! The learning pipeline: demonstrations in, a task model out. A task model
//! carries the per-pair keypoint models, their fuzzy relation profiles, the
//! inferred symbolic constraints, the subsymbolic constraints quantifying
//! them, and mean action durations for planning.

use crate::apkm::{build_canonical, ActionPairKeypointModel, CanonicalModels};
use crate::fuzzy::{fuzzy_allen, FuzzyAllenProfile, FuzzyConfig};
use crate::solver::{infer_sttcs, SolverConfig, SttcSet};
use crate::ssttc::{extract_ssttcs, extract_ssttcs_all_channels, Ssttc};
use crate::temporal::{validate_demonstration, Action, ActionPair, Demonstration, Violation};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid demonstrations:\n{}", format_violations(.0))]
    InvalidDemonstrations(Vec<(String, Violation)>),
    #[error("duplicate demonstration id `{0}`")]
    DuplicateId(String),
    #[error("no demonstrations provided")]
    EmptyDataset,
}

fn format_violations(violations: &[(String, Violation)]) -> String {
    violations
        .iter()
        .map(|(id, v)| format!("  {id}: {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Numeric parameters echoed into the model for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub epsilon: f64,
    pub theta: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            epsilon: crate::fuzzy::DEFAULT_EPSILON,
            theta: crate::solver::DEFAULT_THETA,
            seed: 0,
        }
    }
}

/// A learned temporal task model.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskModel {
    pub config: ModelConfig,
    /// Keypoint models and fuzzy profiles per canonical pair.
    pub pairs: BTreeMap<ActionPair, (ActionPairKeypointModel, FuzzyAllenProfile)>,
    /// Cross-hand self-pair models for bimanual-symmetric detection.
    pub self_pairs: BTreeMap<Action, (ActionPairKeypointModel, FuzzyAllenProfile)>,
    pub sttcs: SttcSet,
    /// Subsymbolic constraints per assigned pair. Pairs whose mixtures have
    /// no suitably signed component are absent.
    pub ssttcs: BTreeMap<ActionPair, Vec<Ssttc>>,
    /// Mean observed duration per action.
    pub durations: BTreeMap<Action, f64>,
}

impl TaskModel {
    /// Assigned pairs whose subsymbolic extraction failed.
    pub fn ssttc_gaps(&self) -> Vec<&ActionPair> {
        self.sttcs
            .assignments
            .keys()
            .filter(|p| !self.ssttcs.contains_key(*p))
            .collect()
    }
}

fn profiles_of(
    models: &CanonicalModels,
    fuzzy: &FuzzyConfig,
) -> (
    BTreeMap<ActionPair, FuzzyAllenProfile>,
    BTreeMap<Action, FuzzyAllenProfile>,
) {
    let pair_profiles = models
        .pairs
        .iter()
        .map(|(pair, apkm)| (pair.clone(), fuzzy_allen(apkm, fuzzy)))
        .collect();
    let self_profiles = models
        .self_pairs
        .iter()
        .map(|(action, apkm)| (action.clone(), fuzzy_allen(apkm, fuzzy)))
        .collect();
    (pair_profiles, self_profiles)
}

/// Constraint inference without model assembly; the inner loop of the
/// evaluation harness. The demonstrations are assumed valid.
pub fn infer_from_demos(
    demos: &[Demonstration],
    fuzzy: &FuzzyConfig,
    solver: &SolverConfig,
    seed: u64,
) -> SttcSet {
    let models = build_canonical(demos, seed);
    let (pair_profiles, self_profiles) = profiles_of(&models, fuzzy);
    infer_sttcs(&pair_profiles, &self_profiles, solver)
}

/// Mean observed duration per action.
pub fn mean_durations(demos: &[Demonstration]) -> BTreeMap<Action, f64> {
    let mut sums: BTreeMap<Action, (f64, usize)> = BTreeMap::new();
    for demo in demos {
        for (_, obs) in demo.observations() {
            let entry = sums.entry(obs.action.clone()).or_insert((0.0, 0));
            entry.0 += obs.interval.duration();
            entry.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(a, (total, count))| (a, total / count as f64))
        .collect()
}

/// Learn a full task model from validated demonstrations.
///
/// With `all_channels` the subsymbolic constraints cover the whole
/// four-condition signature of each assigned relation instead of only the
/// necessary conditions.
pub fn learn(
    demos: &[Demonstration],
    config: ModelConfig,
    all_channels: bool,
) -> Result<TaskModel, LearnError> {
    if demos.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut seen = std::collections::BTreeSet::new();
    for demo in demos {
        if !seen.insert(&demo.id) {
            return Err(LearnError::DuplicateId(demo.id.clone()));
        }
    }
    let violations: Vec<(String, Violation)> = demos
        .iter()
        .flat_map(|d| {
            validate_demonstration(d)
                .into_iter()
                .map(move |v| (d.id.clone(), v))
        })
        .collect();
    if !violations.is_empty() {
        return Err(LearnError::InvalidDemonstrations(violations));
    }

    let fuzzy = FuzzyConfig { epsilon: config.epsilon };
    let solver = SolverConfig { theta: config.theta, allow_fallback: true };
    let models = build_canonical(demos, config.seed);
    let (pair_profiles, self_profiles) = profiles_of(&models, &fuzzy);
    let sttcs = infer_sttcs(&pair_profiles, &self_profiles, &solver);

    let mut ssttcs = BTreeMap::new();
    for (pair, constraint) in &sttcs.assignments {
        let apkm = &models.pairs[pair];
        let extracted = if all_channels {
            extract_ssttcs_all_channels(apkm, constraint.relation, config.epsilon)
        } else {
            extract_ssttcs(apkm, constraint.relation, config.epsilon)
        };
        if let Ok(constraints) = extracted {
            ssttcs.insert(pair.clone(), constraints);
        }
    }

    let pairs = models
        .pairs
        .into_iter()
        .map(|(pair, apkm)| {
            let profile = pair_profiles[&pair].clone();
            (pair, (apkm, profile))
        })
        .collect();
    let self_pairs = models
        .self_pairs
        .into_iter()
        .map(|(action, apkm)| {
            let profile = self_profiles[&action].clone();
            (action, (apkm, profile))
        })
        .collect();

    Ok(TaskModel {
        config,
        pairs,
        self_pairs,
        sttcs,
        ssttcs,
        durations: mean_durations(demos),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apkm::Channel;
    use crate::temporal::{ActionObservation, AllenRelation, TimeInterval};

    fn obs(verb: &str, object: &str, start: f64, end: f64) -> ActionObservation {
        ActionObservation::new(Action::new(verb, object), TimeInterval { start, end })
    }

    fn before_dataset(n: usize) -> Vec<Demonstration> {
        (0..n)
            .map(|i| {
                let shift = i as f64 * 0.01;
                Demonstration::new(
                    format!("d{i}"),
                    vec![obs("grasp", "cup", shift, 1.0 + shift)],
                    vec![obs("pour", "milk", 2.0 + shift, 3.0 + shift)],
                )
            })
            .collect()
    }

    #[test]
    fn learn_recovers_a_before_constraint() {
        let model = learn(&before_dataset(10), ModelConfig::default(), false).unwrap();
        let pair = ActionPair::try_new(Action::new("grasp", "cup"), Action::new("pour", "milk")).unwrap();
        assert_eq!(model.sttcs.relation(&pair), Some(AllenRelation::Before));
        let constraints = &model.ssttcs[&pair];
        assert_eq!(constraints.len(), 1);
        assert_eq!(constraints[0].channel, Channel::Es);
        assert!(constraints[0].mean < 0.0);
        assert!(model.ssttc_gaps().is_empty());
        assert!((model.durations[&Action::new("grasp", "cup")] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn learn_rejects_invalid_demos() {
        let mut demos = before_dataset(3);
        demos[1].left.push(obs("grasp", "cup", 0.5, 1.5)); // overlaps previous
        let err = learn(&demos, ModelConfig::default(), false).unwrap_err();
        assert!(matches!(err, LearnError::InvalidDemonstrations(v) if v.len() == 1));
    }

    #[test]
    fn learn_rejects_duplicate_ids() {
        let mut demos = before_dataset(2);
        demos[1].id = demos[0].id.clone();
        assert!(matches!(
            learn(&demos, ModelConfig::default(), false),
            Err(LearnError::DuplicateId(_))
        ));
    }

    #[test]
    fn all_channels_flag_widens_the_extraction() {
        let minimal = learn(&before_dataset(10), ModelConfig::default(), false).unwrap();
        let full = learn(&before_dataset(10), ModelConfig::default(), true).unwrap();
        let pair = ActionPair::try_new(Action::new("grasp", "cup"), Action::new("pour", "milk")).unwrap();
        assert_eq!(minimal.ssttcs[&pair].len(), 1);
        assert_eq!(full.ssttcs[&pair].len(), 4);
    }

    #[test]
    fn infer_from_demos_matches_learn() {
        let demos = before_dataset(8);
        let config = ModelConfig::default();
        let direct = infer_from_demos(
            &demos,
            &FuzzyConfig { epsilon: config.epsilon },
            &SolverConfig { theta: config.theta, allow_fallback: true },
            config.seed,
        );
        let model = learn(&demos, config, false).unwrap();
        assert_eq!(direct, model.sttcs);
    }
}
