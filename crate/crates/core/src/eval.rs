//! Learning-curve evaluation: seeded incremental learning scenarios,
//! confusion counts against a ground-truth constraint set, and aggregated
//! precision/recall curves.

use crate::fuzzy::FuzzyConfig;
use crate::model::infer_from_demos;
use crate::solver::{SolverConfig, SttcSet};
use crate::temporal::{ActionPair, Demonstration};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;

/// Outcome counts of one prediction/truth comparison. A pair where both
/// sides assign different relations counts as a false positive and a false
/// negative at once, so the four counts can exceed the universe size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl ConfusionCounts {
    /// `tp / (tp + fp)`, defined as 1 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        if self.true_pos + self.false_pos == 0 {
            1.0
        } else {
            self.true_pos as f64 / (self.true_pos + self.false_pos) as f64
        }
    }

    /// `tp / (tp + fn)`, defined as 1 when the truth is empty.
    pub fn recall(&self) -> f64 {
        if self.true_pos + self.false_neg == 0 {
            1.0
        } else {
            self.true_pos as f64 / (self.true_pos + self.false_neg) as f64
        }
    }
}

/// All unordered pairs of actions appearing anywhere in the dataset. Fixed
/// across prefix sizes so curves at different counts are comparable.
pub fn pair_universe(demos: &[Demonstration]) -> BTreeSet<ActionPair> {
    let vocab = crate::apkm::action_vocabulary(demos);
    let mut universe = BTreeSet::new();
    for (i, a) in vocab.iter().enumerate() {
        for b in vocab.iter().skip(i + 1) {
            universe.insert(ActionPair::try_new(a.clone(), b.clone()).expect("distinct"));
        }
    }
    universe
}

/// Compare predicted constraints to the ground truth over a pair universe.
pub fn compare(
    predicted: &SttcSet,
    truth: &SttcSet,
    universe: &BTreeSet<ActionPair>,
) -> ConfusionCounts {
    let mut counts = ConfusionCounts::default();
    for pair in universe {
        match (predicted.relation(pair), truth.relation(pair)) {
            (Some(p), Some(t)) if p == t => counts.true_pos += 1,
            (Some(_), Some(_)) => {
                counts.false_pos += 1;
                counts.false_neg += 1;
            }
            (Some(_), None) => counts.false_pos += 1,
            (None, Some(_)) => counts.false_neg += 1,
            (None, None) => counts.true_neg += 1,
        }
    }
    counts
}

/// Precision and recall after learning from a fixed number of
/// demonstrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningCurvePoint {
    pub n_demos: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Per-count mean and population standard deviation over all scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedPoint {
    pub n_demos: usize,
    pub mean_precision: f64,
    pub std_precision: f64,
    pub mean_recall: f64,
    pub std_recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_scenarios: usize,
    pub demos_per_scenario: usize,
    pub seed: u64,
    pub fuzzy: FuzzyConfig,
    pub solver: SolverConfig,
}

/// One incremental learning scenario: demonstrations are added one by one
/// in the given order, re-learning and re-evaluating after each addition.
pub fn run_scenario(
    dataset: &[Demonstration],
    truth: &SttcSet,
    order: &[usize],
    universe: &BTreeSet<ActionPair>,
    fuzzy: &FuzzyConfig,
    solver: &SolverConfig,
    fit_seed: u64,
) -> Vec<LearningCurvePoint> {
    let mut prefix: Vec<Demonstration> = Vec::with_capacity(order.len());
    let mut points = Vec::with_capacity(order.len());
    for &index in order {
        prefix.push(dataset[index].clone());
        let predicted = infer_from_demos(&prefix, fuzzy, solver, fit_seed);
        let counts = compare(&predicted, truth, universe);
        points.push(LearningCurvePoint {
            n_demos: prefix.len(),
            precision: counts.precision(),
            recall: counts.recall(),
        });
    }
    points
}

/// The demonstration order a scenario with this seed uses: a seeded shuffle
/// of the dataset indices, truncated to the scenario size.
pub fn scenario_order(dataset_len: usize, take: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..dataset_len).collect();
    indices.shuffle(&mut rng);
    indices.truncate(take);
    indices
}

/// Run independently seeded scenarios (scenario `i` uses `seed + i`) and
/// aggregate the curves. `jobs > 1` runs scenarios in parallel; the result
/// does not depend on the job count.
pub fn run_scenarios(
    dataset: &[Demonstration],
    truth: &SttcSet,
    config: &ScenarioConfig,
    jobs: usize,
) -> Vec<AggregatedPoint> {
    assert!(
        config.demos_per_scenario <= dataset.len(),
        "demos_per_scenario exceeds the dataset size"
    );
    let universe = pair_universe(dataset);
    let run_one = |i: usize| -> Vec<LearningCurvePoint> {
        let seed = config.seed.wrapping_add(i as u64);
        let order = scenario_order(dataset.len(), config.demos_per_scenario, seed);
        run_scenario(
            dataset,
            truth,
            &order,
            &universe,
            &config.fuzzy,
            &config.solver,
            seed,
        )
    };
    let curves: Vec<Vec<LearningCurvePoint>> = if jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| (0..config.n_scenarios).into_par_iter().map(run_one).collect())
    } else {
        (0..config.n_scenarios).map(run_one).collect()
    };

    (0..config.demos_per_scenario)
        .map(|k| {
            let precisions: Vec<f64> = curves.iter().map(|c| c[k].precision).collect();
            let recalls: Vec<f64> = curves.iter().map(|c| c[k].recall).collect();
            AggregatedPoint {
                n_demos: k + 1,
                mean_precision: mean(&precisions),
                std_precision: population_std(&precisions),
                mean_recall: mean(&recalls),
                std_recall: population_std(&recalls),
            }
        })
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    var.max(0.0).sqrt()
}

/// Render the aggregated curve as CSV with six decimal places.
pub fn curve_to_csv(points: &[AggregatedPoint]) -> String {
    let mut out = String::from("n_demos,mean_precision,std_precision,mean_recall,std_recall\n");
    for p in points {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6}",
            p.n_demos, p.mean_precision, p.std_precision, p.mean_recall, p.std_recall
        )
        .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Sttc;
    use crate::synth::{generate, GeneratorConfig, ModeTemplate, TemplateEntry};
    use crate::temporal::{Action, AllenRelation, Hand};

    fn pair(a: &str, b: &str) -> ActionPair {
        ActionPair::try_new(Action::new(a, "o"), Action::new(b, "o")).unwrap()
    }

    fn sttc_set(entries: &[(&str, &str, AllenRelation)]) -> SttcSet {
        let mut set = SttcSet::default();
        for (a, b, r) in entries {
            set.assignments.insert(
                pair(a, b),
                Sttc { relation: *r, membership: 1.0 },
            );
        }
        set
    }

    fn universe(names: &[&str]) -> BTreeSet<ActionPair> {
        let mut out = BTreeSet::new();
        for (i, a) in names.iter().enumerate() {
            for b in names.iter().skip(i + 1) {
                out.insert(pair(a, b));
            }
        }
        out
    }

    #[test]
    fn compare_counts_matches_and_true_negatives() {
        let truth = sttc_set(&[
            ("a", "b", AllenRelation::Before),
            ("a", "c", AllenRelation::Meets),
            ("b", "d", AllenRelation::During),
            ("c", "d", AllenRelation::Before),
        ]);
        let universe = universe(&["a", "b", "c", "d", "e"]); // 10 pairs
        let counts = compare(&truth, &truth, &universe);
        assert_eq!(counts.true_pos, 4);
        assert_eq!(counts.true_neg, 6);
        assert_eq!(counts.false_pos, 0);
        assert_eq!(counts.false_neg, 0);
        assert_eq!(counts.precision(), 1.0);
        assert_eq!(counts.recall(), 1.0);
    }

    #[test]
    fn compare_counts_relation_mismatch_twice() {
        let truth = sttc_set(&[("a", "b", AllenRelation::Meets)]);
        let predicted = sttc_set(&[("a", "b", AllenRelation::Before)]);
        let counts = compare(&predicted, &truth, &universe(&["a", "b"]));
        assert_eq!(counts.false_pos, 1);
        assert_eq!(counts.false_neg, 1);
        assert_eq!(counts.true_pos + counts.false_pos + counts.false_neg + counts.true_neg, 2);
    }

    #[test]
    fn compare_counts_extra_prediction_as_false_positive() {
        let truth = SttcSet::default();
        let predicted = sttc_set(&[("a", "b", AllenRelation::Before)]);
        let counts = compare(&predicted, &truth, &universe(&["a", "b"]));
        assert_eq!(counts.false_pos, 1);
        assert_eq!(counts.recall(), 1.0); // vacuous truth
        assert_eq!(counts.precision(), 0.0);
    }

    #[test]
    fn empty_universe_gives_unit_scores() {
        let counts = compare(&SttcSet::default(), &SttcSet::default(), &BTreeSet::new());
        assert_eq!(counts.precision(), 1.0);
        assert_eq!(counts.recall(), 1.0);
    }

    fn noiseless_dataset() -> (Vec<Demonstration>, SttcSet) {
        let mode = ModeTemplate {
            name: "only".into(),
            entries: vec![
                TemplateEntry { action: Action::new("a", "o"), hand: Hand::Left, start: 0.0, duration: 1.0 },
                TemplateEntry { action: Action::new("b", "o"), hand: Hand::Right, start: 2.0, duration: 1.0 },
                TemplateEntry { action: Action::new("c", "o"), hand: Hand::Left, start: 4.0, duration: 1.0 },
            ],
        };
        let config = GeneratorConfig {
            modes: vec![mode],
            mode_weights: vec![1.0],
            jitter_sigma: 0.0,
            n_demos: 6,
            seed: 5,
            epsilon: 0.1,
            task: "t".into(),
        };
        generate(&config).unwrap()
    }

    #[test]
    fn noiseless_single_mode_curve_is_perfect() {
        let (demos, truth) = noiseless_dataset();
        let universe = pair_universe(&demos);
        let order: Vec<usize> = (0..demos.len()).collect();
        let fuzzy = FuzzyConfig::default();
        let solver = SolverConfig::default();
        let points = run_scenario(&demos, &truth, &order, &universe, &fuzzy, &solver, 1);
        assert_eq!(points.len(), 6);
        for p in points {
            assert_eq!(p.precision, 1.0);
            assert_eq!(p.recall, 1.0);
        }
    }

    #[test]
    fn single_scenario_has_zero_std_and_csv_is_deterministic() {
        let (demos, truth) = noiseless_dataset();
        let config = ScenarioConfig {
            n_scenarios: 1,
            demos_per_scenario: 4,
            seed: 9,
            fuzzy: FuzzyConfig::default(),
            solver: SolverConfig::default(),
        };
        let a = run_scenarios(&demos, &truth, &config, 1);
        for p in &a {
            assert_eq!(p.std_precision, 0.0);
            assert_eq!(p.std_recall, 0.0);
        }
        let b = run_scenarios(&demos, &truth, &config, 2);
        assert_eq!(curve_to_csv(&a), curve_to_csv(&b));
        assert!(curve_to_csv(&a).starts_with(
            "n_demos,mean_precision,std_precision,mean_recall,std_recall\n1,"
        ));
    }
}
