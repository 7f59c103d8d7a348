use ttc_core::eval::{pair_universe, run_scenarios, ScenarioConfig};
use ttc_core::synth::{generate, GeneratorConfig, ModeTemplate, TemplateEntry};
use ttc_core::temporal::{Action, Hand};
use ttc_core::{FuzzyConfig, SolverConfig};

fn entry(verb: &str, object: &str, hand: Hand, start: f64, duration: f64) -> TemplateEntry {
    TemplateEntry { action: Action::new(verb, object), hand, start, duration }
}

fn disassembly_config(n_demos: usize, jitter: f64, seed: u64) -> GeneratorConfig {
    let left = vec![
        entry("hold", "housing", Hand::Left, 0.0, 10.0),
        entry("place", "parts", Hand::Left, 12.0, 1.5),
        entry("inspect", "housing", Hand::Left, 14.4, 1.1),
    ];
    let right_shared = vec![
        entry("unscrew", "screw1", Hand::Right, 1.0, 2.0),
        entry("unscrew", "screw2", Hand::Right, 3.5, 2.0),
        entry("remove", "cover", Hand::Right, 6.0, 1.5),
        entry("remove", "rotor", Hand::Right, 8.0, 1.5),
    ];
    let mut mode_a_entries = left.clone();
    mode_a_entries.extend(right_shared.clone());
    mode_a_entries.push(entry("clean", "housing", Hand::Right, 12.3, 0.9));
    let mut mode_b_entries = left;
    mode_b_entries.extend(right_shared);
    mode_b_entries.push(entry("clean", "housing", Hand::Right, 10.3, 0.6));
    mode_b_entries.push(entry("clean", "housing", Hand::Right, 11.2, 0.8));
    GeneratorConfig {
        modes: vec![
            ModeTemplate { name: "clean-during-place".into(), entries: mode_a_entries },
            ModeTemplate { name: "clean-before-place".into(), entries: mode_b_entries },
        ],
        mode_weights: vec![0.5, 0.5],
        jitter_sigma: jitter,
        n_demos,
        seed,
        epsilon: 0.1,
        task: "disassembly".into(),
    }
}

#[test]
fn timing_probe() {
    let config = disassembly_config(60, 0.02, 424242);
    let (demos, truth) = generate(&config).unwrap();
    println!("truth constraints: {}", truth.assignments.len());
    println!("universe: {}", pair_universe(&demos).len());
    let t0 = std::time::Instant::now();
    let sc = ScenarioConfig {
        n_scenarios: 2,
        demos_per_scenario: 60,
        seed: 1000,
        fuzzy: FuzzyConfig { epsilon: 0.1 },
        solver: SolverConfig { theta: 0.5, allow_fallback: true },
    };
    let curve = run_scenarios(&demos, &truth, &sc, 2);
    let elapsed = t0.elapsed();
    println!("2 scenarios on 2 jobs took {elapsed:?}");
    let last = curve.last().unwrap();
    println!(
        "k=60: precision {} recall {}",
        last.mean_precision, last.mean_recall
    );
    let k40 = &curve[39];
    println!("k=40: precision {} recall {}", k40.mean_precision, k40.mean_recall);
    for p in &curve {
        assert_eq!(p.mean_recall, 1.0, "recall at k={}", p.n_demos);
    }
    panic!("timing: {elapsed:?} for 2 scenarios");
}
