//! End-to-end runs checked against brute-force enumeration.

use phaseboost::concepts::{random_concept, ConceptSpec, Junta};
use phaseboost::distributional::{distributional_learn, DistributionalConfig, LabelFunction};
use phaseboost::experiment::{make_corrupted_state, run_experiment, write_jsonl};
use phaseboost::learners::{agnostic_learn_dt, agnostic_learn_junta};
use phaseboost::weaklearn::ParityLearner;
use phaseboost::{
    agnostic_boost, BooleanConcept, CopySource, ExperimentConfig, MansourConstants, OracleMode, ResultRecord,
    StateVector, Task,
};

/// Best fidelity of `psi` with any function of at most two of its variables.
fn brute_force_two_junta_opt(psi: &StateVector) -> f64 {
    let n = psi.n();
    let mut best = 0.0f64;
    for a in 0..n {
        for b in a + 1..n {
            for t in 0..16u32 {
                let table = (0..4).map(|i| t >> i & 1 == 1).collect();
                let phi = BooleanConcept::Junta(Junta::new(n, vec![a, b], table).unwrap()).phase_state().unwrap();
                best = best.max(psi.fidelity(&phi).unwrap());
            }
        }
    }
    best
}

#[test]
fn junta_learner_reaches_enumerated_optimum() {
    for seed in 0..6u64 {
        let f = random_concept(&ConceptSpec::Junta { n: 5, k: 2 }, seed).unwrap();
        let psi = make_corrupted_state(&f, 0.8, seed + 100).unwrap();
        let opt = brute_force_two_junta_opt(&psi);
        assert!(opt >= 0.8 - 1e-9, "seed {seed}: opt {opt}");
        for mode in [OracleMode::Exact, OracleMode::Sampled] {
            let mut src = CopySource::new(psi.clone(), mode, seed);
            let out = agnostic_learn_junta(&mut src, 2, 0.1, 0.1).unwrap();
            let direct = out.decomposition.fidelity_with(&psi).unwrap();
            assert!((direct - out.achieved_fidelity).abs() < 1e-12);
            assert!(out.achieved_fidelity >= opt - 0.1, "seed {seed} {mode}: {} vs {opt}", out.achieved_fidelity);
        }
    }
}

#[test]
fn boosted_state_beats_every_single_parity() {
    // a state spread over several parities: no single one explains it
    let n = 6;
    let f = random_concept(&ConceptSpec::Junta { n, k: 3 }, 11).unwrap();
    let psi = f.phase_state().unwrap();
    let best_single = psi.walsh_hadamard().probabilities().into_iter().fold(0.0, f64::max);
    let mut src = CopySource::new(psi.clone(), OracleMode::Exact, 1);
    let res = agnostic_boost(&mut src, &ParityLearner, 0.1, 0.1).unwrap();
    let achieved = res.decomposition.fidelity_with(&psi).unwrap();
    assert!(best_single < 0.9);
    assert!(achieved >= 0.9, "{achieved}");
}

#[test]
fn tree_learner_matches_planted_tree() {
    for seed in 0..4u64 {
        let spec = ConceptSpec::DecisionTree { n: 7, size: 5, rule: Default::default() };
        let f = random_concept(&spec, seed).unwrap();
        let psi = f.phase_state().unwrap();
        let mut src = CopySource::new(psi, OracleMode::Sampled, seed);
        let out = agnostic_learn_dt(&mut src, 5, 0.1, 0.1).unwrap();
        assert!(out.achieved_fidelity >= 0.9, "seed {seed}: {}", out.achieved_fidelity);
        assert!(out.ledger.is_conserved());
    }
}

#[test]
fn noisy_parity_labels_learned_through_post_selection() {
    let n = 5;
    let mask = 0b10110;
    for noise in [0.0, 0.15, 0.3] {
        let best = 1.0 - 2.0 * noise;
        let phi = LabelFunction::new(
            n,
            (0..1usize << n).map(|x| if (x & mask).count_ones() % 2 == 1 { -best } else { best }).collect(),
        )
        .unwrap();
        let learner = |src: &mut CopySource| agnostic_boost(src, &ParityLearner, 0.1, 0.1).map(|r| r.decomposition);
        let cfg = DistributionalConfig { mode: OracleMode::Sampled, seed: 3, ..Default::default() };
        let out = distributional_learn(&phi, &learner, 0.1, &cfg).unwrap();
        let exact: f64 =
            (0..1usize << n).map(|x| phi.phi()[x] * if out.hypothesis[x] { -1.0 } else { 1.0 }).sum::<f64>()
                / (1u64 << n) as f64;
        assert!((exact - out.margin).abs() < 1e-12);
        assert!(out.margin >= best - 0.1, "noise {noise}: margin {}", out.margin);
    }
}

#[test]
fn jsonl_records_read_back_unchanged() {
    let cfg = ExperimentConfig {
        n: 6,
        task: Task::Dnf { terms: 2, width: 2 },
        opt_lb: 0.9,
        eps: 0.1,
        delta: 0.1,
        mode: OracleMode::Sampled,
        seeds: vec![4, 9],
        mansour: MansourConstants::default(),
    };
    let recs = run_experiment(&cfg).unwrap();
    let mut buf = Vec::new();
    write_jsonl(&recs, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let back: Vec<ResultRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(back, recs);
}
