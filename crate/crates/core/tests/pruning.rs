mod oracles;

use oracles::{all_inputs, naive_outputs, random_circuit};

use boolnet_core::prune::{
    greedy_prune, logic_equivalence_prune, logic_equivalence_prune_with_limit, phi_coefficient, profile_activations,
    similarity_prune, spearman, trivial_prune,
};
use boolnet_core::{BitMatrix, GateTruthTable, HardCircuit, HardGate, Source};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn word_evaluator_matches_naive_interpreter() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let c = random_circuit(&mut rng, 10, 3, 40);
        let x = all_inputs(c.input_width);
        let fast = c.eval(&x).unwrap();
        for r in 0..x.rows() {
            let bits: Vec<bool> = (0..c.input_width).map(|i| x.get(r, i)).collect();
            let want = naive_outputs(&c, &bits);
            let got: Vec<bool> = (0..c.outputs.len()).map(|o| fast.get(r, o)).collect();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn sound_passes_preserve_every_output_on_every_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut removed = 0;
    for _ in 0..50 {
        let c = random_circuit(&mut rng, 16, 3, 64);
        let x = all_inputs(c.input_width);
        let reference = c.eval(&x).unwrap();

        let (t, rt) = trivial_prune(&c);
        let (e, re) = logic_equivalence_prune(&t).unwrap();
        let (e_only, _) = logic_equivalence_prune(&c).unwrap();
        for (p, label) in [(&t, "trivial"), (&e, "trivial+equiv"), (&e_only, "equiv")] {
            p.validate().unwrap();
            assert_eq!(p.eval(&x).unwrap(), reference, "{label} changed the function");
            assert_eq!(p.predict(&x).unwrap(), c.predict(&x).unwrap());
            assert!(p.gate_count() <= c.gate_count());
        }
        assert!(rt.gates_after.iter().zip(&rt.gates_before).all(|(a, b)| a <= b));
        assert_eq!(re.gates_before, rt.gates_after);
        removed += rt.removed() + re.removed();
    }
    assert!(removed > 500, "generator too tame: only {removed} gates removed");
}

#[test]
fn sound_passes_are_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let c = random_circuit(&mut rng, 12, 3, 48);
        let (t, _) = trivial_prune(&c);
        let (t2, r) = trivial_prune(&t);
        assert_eq!(r.removed(), 0);
        assert_eq!(t2, t);

        let (e, _) = logic_equivalence_prune(&t).unwrap();
        let (e2, r) = logic_equivalence_prune(&e).unwrap();
        assert_eq!(r.removed(), 0);
        assert_eq!(e2, e);
        let (e3, r) = trivial_prune(&e);
        assert_eq!(r.removed(), 0);
        assert_eq!(e3, e);
    }
}

#[test]
fn oversized_cone_is_reported_not_guessed() {
    let and = GateTruthTable::from_code(8).unwrap();
    let c = HardCircuit {
        input_width: 3,
        num_classes: 1,
        group_tau: 1.0,
        layers: vec![
            vec![HardGate::new(and, 0, 1), HardGate::new(and, 1, 2)],
            vec![HardGate::new(and, 0, 1)],
        ],
        outputs: vec![Source::Signal(0)],
    };
    assert!(logic_equivalence_prune_with_limit(&c, 2).is_err());
    let (p, _) = logic_equivalence_prune_with_limit(&c, 3).unwrap();
    assert_eq!(p.eval(&all_inputs(3)).unwrap(), c.eval(&all_inputs(3)).unwrap());
}

#[test]
fn data_driven_passes_at_one_are_lossless_on_the_profile() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let c = random_circuit(&mut rng, 16, 3, 64);
        let samples = rng.random_range(1..300);
        let x = BitMatrix::from_fn(samples, c.input_width, |_, _| rng.random_bool(0.5));
        let reference = c.eval(&x).unwrap();
        let profile = profile_activations(&c, &x).unwrap();
        let (g, _) = greedy_prune(&c, &profile, 1.0).unwrap();
        let (s, _) = similarity_prune(&c, &profile, 1.0).unwrap();
        assert_eq!(g.eval(&x).unwrap(), reference);
        assert_eq!(s.eval(&x).unwrap(), reference);
    }
}

#[test]
fn data_driven_thresholds_are_checked() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = random_circuit(&mut rng, 6, 2, 8);
    let x = all_inputs(c.input_width);
    let p = profile_activations(&c, &x).unwrap();
    for t in [0.5, 0.0, 1.01, f64::NAN] {
        assert!(greedy_prune(&c, &p, t).is_err(), "greedy accepted {t}");
    }
    for t in [0.0, -0.3, 1.5, f64::NAN] {
        assert!(similarity_prune(&c, &p, t).is_err(), "similarity accepted {t}");
    }
}

fn bits_to_f64(bits: &[bool]) -> Vec<f64> {
    bits.iter().map(|&b| b as u8 as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn spearman_of_binary_vectors_is_phi(
        x in proptest::collection::vec(any::<bool>(), 256),
        y in proptest::collection::vec(any::<bool>(), 256),
    ) {
        let n = x.len();
        let ni = x.iter().filter(|&&b| b).count();
        let nj = y.iter().filter(|&&b| b).count();
        let nij = x.iter().zip(&y).filter(|(a, b)| **a && **b).count();
        let rho = spearman(&bits_to_f64(&x), &bits_to_f64(&y));
        let phi = phi_coefficient(n, ni, nj, nij);
        match (rho, phi) {
            (Some(r), Some(p)) => prop_assert!((r - p).abs() <= 1e-12, "rho {} phi {}", r, p),
            (None, None) => {}
            other => prop_assert!(false, "definedness differs: {:?}", other),
        }
    }
}

#[test]
fn phi_handles_degenerate_and_extreme_vectors() {
    assert_eq!(phi_coefficient(8, 0, 4, 0), None);
    assert_eq!(phi_coefficient(8, 8, 4, 4), None);
    assert_eq!(phi_coefficient(8, 3, 3, 3), Some(1.0));
    assert_eq!(phi_coefficient(8, 3, 5, 0), Some(-1.0));
    // skewed vectors keep their exact extremes too
    let x: Vec<f64> = (0..256).map(|i| (i < 1) as u8 as f64).collect();
    assert_eq!(spearman(&x, &x), Some(1.0));
}
