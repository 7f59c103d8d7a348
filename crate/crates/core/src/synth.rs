//! Seeded generation of synthetic demonstration datasets from mode
//! templates, with the ground-truth constraint set derived from the
//! templates themselves: a pair is constrained iff its relation is invariant
//! across every mode (and every instance combination within a mode).

use crate::solver::{Sttc, SttcSet};
use crate::temporal::{
    classify_interval, validate_demonstration, Action, ActionObservation, ActionPair,
    AllenRelation, Demonstration, Hand, TimeInterval,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Attempts per demonstration before giving up on rejection sampling.
pub const REJECTION_LIMIT: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator config: field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("rejection limit exceeded for mode `{mode}`: jitter too large for the template spacing")]
    RejectionLimitExceeded { mode: String },
}

/// One nominal scheduled action of a mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateEntry {
    pub action: Action,
    pub hand: Hand,
    pub start: f64,
    pub duration: f64,
}

impl TemplateEntry {
    pub fn interval(&self) -> TimeInterval {
        TimeInterval {
            start: self.start,
            end: self.start + self.duration,
        }
    }
}

/// One qualitative way of executing the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTemplate {
    pub name: String,
    pub entries: Vec<TemplateEntry>,
}

impl ModeTemplate {
    fn hand_entries(&self, hand: Hand) -> Vec<&TemplateEntry> {
        let mut entries: Vec<&TemplateEntry> =
            self.entries.iter().filter(|e| e.hand == hand).collect();
        entries.sort_by(|a, b| a.start.total_cmp(&b.start));
        entries
    }

    /// Nominal intervals per action, covering repeated occurrences.
    fn instances(&self) -> BTreeMap<Action, Vec<TimeInterval>> {
        let mut map: BTreeMap<Action, Vec<TimeInterval>> = BTreeMap::new();
        for e in &self.entries {
            map.entry(e.action.clone()).or_default().push(e.interval());
        }
        map
    }
}

fn default_task() -> String {
    "synthetic".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub modes: Vec<ModeTemplate>,
    pub mode_weights: Vec<f64>,
    pub jitter_sigma: f64,
    pub n_demos: usize,
    pub seed: u64,
    pub epsilon: f64,
    #[serde(default = "default_task")]
    pub task: String,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let err = |field: &'static str, reason: String| Err(GenError::InvalidConfig { field, reason });
        if self.modes.is_empty() {
            return err("modes", "at least one mode template is required".into());
        }
        if self.mode_weights.len() != self.modes.len() {
            return err(
                "mode_weights",
                format!(
                    "{} weights for {} modes",
                    self.mode_weights.len(),
                    self.modes.len()
                ),
            );
        }
        if self.mode_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return err("mode_weights", "weights must be non-negative".into());
        }
        let total: f64 = self.mode_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return err("mode_weights", format!("weights sum to {total}, expected 1"));
        }
        if !self.jitter_sigma.is_finite() || self.jitter_sigma < 0.0 {
            return err("jitter_sigma", "must be a non-negative number".into());
        }
        if self.n_demos < 1 {
            return err("n_demos", "at least one demonstration is required".into());
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return err("epsilon", "must be a positive number".into());
        }
        for mode in &self.modes {
            for e in &mode.entries {
                if !e.start.is_finite() || !e.duration.is_finite() {
                    return err("modes", format!("mode `{}`: non-finite times", mode.name));
                }
                if e.duration <= 2.0 * self.epsilon {
                    return err(
                        "modes",
                        format!(
                            "mode `{}`: duration {} of {} not above 2*epsilon = {}",
                            mode.name,
                            e.duration,
                            e.action,
                            2.0 * self.epsilon
                        ),
                    );
                }
            }
            for hand in [Hand::Left, Hand::Right] {
                let entries = mode.hand_entries(hand);
                for pair in entries.windows(2) {
                    if pair[0].interval().end > pair[1].start {
                        return err(
                            "modes",
                            format!(
                                "mode `{}`: {} entries {} and {} overlap",
                                mode.name, hand, pair[0].action, pair[1].action
                            ),
                        );
                    }
                }
            }
        }
        Ok(())
    }
}

/// Constraints shared by every mode: a pair is assigned a relation iff all
/// nominal instance combinations in all modes classify to that same
/// relation. Pairs absent from some mode, or with mixed relations, stay
/// unconstrained.
pub fn derive_ground_truth(modes: &[ModeTemplate], epsilon: f64) -> SttcSet {
    let per_mode: Vec<BTreeMap<Action, Vec<TimeInterval>>> =
        modes.iter().map(|m| m.instances()).collect();
    let mut actions: Vec<Action> = per_mode
        .iter()
        .flat_map(|m| m.keys().cloned())
        .collect();
    actions.sort();
    actions.dedup();

    let mut truth = SttcSet::default();
    for (i, a) in actions.iter().enumerate() {
        for b in actions.iter().skip(i + 1) {
            if !per_mode
                .iter()
                .all(|m| m.contains_key(a) && m.contains_key(b))
            {
                continue;
            }
            let mut relations: Vec<Option<AllenRelation>> = Vec::new();
            for mode in &per_mode {
                for ia in &mode[a] {
                    for ib in &mode[b] {
                        relations.push(classify_interval(ia, ib, epsilon).ok());
                    }
                }
            }
            let first = relations[0];
            if first.is_some() && relations.iter().all(|r| *r == first) {
                let pair = ActionPair::try_new(a.clone(), b.clone()).expect("distinct");
                truth.assignments.insert(
                    pair,
                    Sttc {
                        relation: first.unwrap(),
                        membership: 1.0,
                    },
                );
            }
        }
    }
    truth
}

/// Sample one demonstration of the given mode: every nominal keypoint is
/// perturbed independently, and the whole demonstration is resampled until
/// the per-hand sequence invariants hold.
pub fn sample_demo(
    config: &GeneratorConfig,
    mode: &ModeTemplate,
    rng: &mut ChaCha8Rng,
) -> Result<Demonstration, GenError> {
    let noise = Normal::new(0.0, config.jitter_sigma).map_err(|_| GenError::InvalidConfig {
        field: "jitter_sigma",
        reason: "not a valid standard deviation".into(),
    })?;
    for _ in 0..REJECTION_LIMIT {
        let mut hands: [Vec<ActionObservation>; 2] = [Vec::new(), Vec::new()];
        for (slot, hand) in [(0, Hand::Left), (1, Hand::Right)] {
            for entry in mode.hand_entries(hand) {
                let iv = entry.interval();
                hands[slot].push(ActionObservation::new(
                    entry.action.clone(),
                    TimeInterval {
                        start: iv.start + noise.sample(rng),
                        end: iv.end + noise.sample(rng),
                    },
                ));
            }
        }
        let [left, right] = hands;
        let demo = Demonstration::new(mode.name.clone(), left, right);
        if validate_demonstration(&demo).is_empty() {
            return Ok(demo);
        }
    }
    Err(GenError::RejectionLimitExceeded {
        mode: mode.name.clone(),
    })
}

/// Generate the full dataset and its ground truth. Deterministic for a
/// fixed config.
pub fn generate(config: &GeneratorConfig) -> Result<(Vec<Demonstration>, SttcSet), GenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut demos = Vec::with_capacity(config.n_demos);
    for i in 0..config.n_demos {
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut mode_index = config.modes.len() - 1;
        for (m, w) in config.mode_weights.iter().enumerate() {
            acc += w;
            if draw < acc {
                mode_index = m;
                break;
            }
        }
        let mut demo = sample_demo(config, &config.modes[mode_index], &mut rng)?;
        demo.id = format!("demo-{i:03}");
        demos.push(demo);
    }
    Ok((demos, derive_ground_truth(&config.modes, config.epsilon)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(verb: &str, object: &str, hand: Hand, start: f64, duration: f64) -> TemplateEntry {
        TemplateEntry {
            action: Action::new(verb, object),
            hand,
            start,
            duration,
        }
    }

    fn two_action_mode(name: &str, gap: f64) -> ModeTemplate {
        ModeTemplate {
            name: name.into(),
            entries: vec![
                entry("a", "x", Hand::Left, 0.0, 1.0),
                entry("b", "y", Hand::Right, 1.0 + gap, 1.0),
            ],
        }
    }

    fn config(modes: Vec<ModeTemplate>, weights: Vec<f64>, jitter: f64, n: usize) -> GeneratorConfig {
        GeneratorConfig {
            modes,
            mode_weights: weights,
            jitter_sigma: jitter,
            n_demos: n,
            seed: 7,
            epsilon: 0.1,
            task: "test".into(),
        }
    }

    #[test]
    fn validate_rejects_bad_weights() {
        let cfg = config(vec![two_action_mode("m", 0.5)], vec![0.7], 0.0, 1);
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, GenError::InvalidConfig { field: "mode_weights", .. }));
    }

    #[test]
    fn validate_rejects_short_durations() {
        let mut mode = two_action_mode("m", 0.5);
        mode.entries[0].duration = 0.15;
        let cfg = config(vec![mode], vec![1.0], 0.0, 1);
        assert!(matches!(
            cfg.validate().unwrap_err(),
            GenError::InvalidConfig { field: "modes", .. }
        ));
    }

    #[test]
    fn ground_truth_single_mode_is_the_crisp_classification() {
        let truth = derive_ground_truth(&[two_action_mode("m", 0.5)], 0.1);
        assert_eq!(truth.assignments.len(), 1);
        let pair = ActionPair::try_new(Action::new("a", "x"), Action::new("b", "y")).unwrap();
        assert_eq!(truth.relation(&pair), Some(AllenRelation::Before));
    }

    #[test]
    fn ground_truth_drops_pairs_that_differ_across_modes() {
        let mode_a = ModeTemplate {
            name: "ab".into(),
            entries: vec![
                entry("a", "x", Hand::Left, 0.0, 1.0),
                entry("b", "y", Hand::Right, 2.0, 1.0),
            ],
        };
        let mode_b = ModeTemplate {
            name: "ba".into(),
            entries: vec![
                entry("b", "y", Hand::Right, 0.0, 1.0),
                entry("a", "x", Hand::Left, 2.0, 1.0),
            ],
        };
        let truth = derive_ground_truth(&[mode_a, mode_b], 0.1);
        assert!(truth.assignments.is_empty());
    }

    #[test]
    fn ground_truth_keeps_invariant_containment() {
        let make = |shift: f64| ModeTemplate {
            name: format!("m{shift}"),
            entries: vec![
                entry("hold", "cup", Hand::Left, shift + 0.5, 5.0),
                entry("pour", "milk", Hand::Right, shift, 6.0),
            ],
        };
        let truth = derive_ground_truth(&[make(0.0), make(10.0)], 0.1);
        let pair = ActionPair::try_new(Action::new("hold", "cup"), Action::new("pour", "milk")).unwrap();
        assert_eq!(truth.relation(&pair), Some(AllenRelation::During));
    }

    #[test]
    fn zero_jitter_reproduces_the_template() {
        let cfg = config(vec![two_action_mode("m", 0.5)], vec![1.0], 0.0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let demo = sample_demo(&cfg, &cfg.modes[0], &mut rng).unwrap();
        assert_eq!(demo.left[0].interval, TimeInterval { start: 0.0, end: 1.0 });
        assert_eq!(demo.right[0].interval, TimeInterval { start: 1.5, end: 2.5 });
    }

    #[test]
    fn small_jitter_keeps_demos_valid() {
        let cfg = config(vec![two_action_mode("m", 0.5)], vec![1.0], 0.02, 50);
        let (demos, _) = generate(&cfg).unwrap();
        assert_eq!(demos.len(), 50);
        for d in &demos {
            assert!(validate_demonstration(d).is_empty());
        }
    }

    #[test]
    fn oversized_jitter_hits_the_rejection_limit() {
        // a long same-hand chain: with jitter far above the spacing, each of
        // the ~50 ordering constraints holds with probability ~1/2, so all
        // attempts fail
        let mode = ModeTemplate {
            name: "tight".into(),
            entries: (0..24)
                .map(|i| entry("a", &format!("x{i}"), Hand::Left, i as f64 * 0.4, 0.3))
                .collect(),
        };
        let cfg = config(vec![mode], vec![1.0], 10.0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_demo(&cfg, &cfg.modes[0], &mut rng).unwrap_err();
        assert!(matches!(err, GenError::RejectionLimitExceeded { .. }));
    }

    #[test]
    fn generation_is_deterministic_and_covers_modes() {
        let cfg = config(
            vec![two_action_mode("m1", 0.5), two_action_mode("m2", 3.0)],
            vec![0.5, 0.5],
            0.01,
            216,
        );
        let (demos_a, truth_a) = generate(&cfg).unwrap();
        let (demos_b, truth_b) = generate(&cfg).unwrap();
        assert_eq!(demos_a, demos_b);
        assert_eq!(truth_a, truth_b);
        // both modes appear: mode m2 has a 3 s gap between the actions
        let gaps: Vec<f64> = demos_a
            .iter()
            .map(|d| d.right[0].interval.start - d.left[0].interval.end)
            .collect();
        assert!(gaps.iter().any(|g| *g < 1.0));
        assert!(gaps.iter().any(|g| *g > 2.0));
    }

    #[test]
    fn ground_truth_ignores_jitter_and_count() {
        let modes = vec![two_action_mode("m1", 0.5), two_action_mode("m2", 3.0)];
        let a = derive_ground_truth(&modes, 0.1);
        let cfg = config(modes, vec![0.5, 0.5], 0.05, 5);
        let (_, b) = generate(&cfg).unwrap();
        assert_eq!(a, b);
    }
}
