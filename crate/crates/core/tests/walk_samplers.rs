use std::collections::HashMap;

use proptest::prelude::*;
use wh_core::graph::*;
use wh_core::walks::*;
use wh_core::word::{occurrences_cyclic, reduced_words};
use wh_core::*;

fn chi_square(counts: &[usize], expected: f64) -> f64 {
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

#[test]
fn single_letters_are_uniform() {
    let mut rng = rng_from_seed(1);
    let mut counts = [0usize; 4];
    for _ in 0..100_000 {
        counts[uniform_nb(2, 1, &mut rng).letters()[0].code() as usize] += 1;
    }
    // 3 degrees of freedom, 0.999 quantile 16.27.
    assert!(chi_square(&counts, 25_000.0) < 16.27, "{counts:?}");
}

#[test]
fn spheres_are_covered_uniformly() {
    let alphabet = Alphabet::new(2).unwrap();
    let mut rng = rng_from_seed(2);
    for n in 1..=6 {
        let sphere = reduced_words(alphabet, n);
        assert_eq!(sphere.len(), 4 * 3usize.pow(n as u32 - 1));
        let index: HashMap<&Word, usize> = sphere.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let draws = 200 * sphere.len();
        let mut counts = vec![0usize; sphere.len()];
        for _ in 0..draws {
            counts[index[&uniform_nb(2, n, &mut rng)]] += 1;
        }
        let dof = sphere.len() as f64 - 1.0;
        // Normal approximation to the chi-square upper tail, z = 4.
        let bound = dof + 4.0 * (2.0 * dof).sqrt();
        assert!(chi_square(&counts, 200.0) < bound, "n={n}");
    }
}

/// Exact `E|W_n|` for the simple walk on `F_N`: from 0 the length goes to 1,
/// otherwise up with probability `(2N-1)/2N` and down with `1/2N`.
fn expected_simple_walk_length(rank: usize, n: usize) -> f64 {
    let up = (2 * rank - 1) as f64 / (2 * rank) as f64;
    let mut dist = vec![0.0; n + 1];
    dist[0] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; n + 1];
        for (k, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if k == 0 {
                next[1] += p;
            } else {
                next[k + 1] += p * up;
                next[k - 1] += p * (1.0 - up);
            }
        }
        dist = next;
    }
    dist.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
}

#[test]
fn simple_walk_drift_matches_birth_death_recursion() {
    let walk = GroupWalk::simple(2);
    let mut rng = rng_from_seed(3);
    for n in [10, 100, 400] {
        let trials = 2000;
        let mean = (0..trials).map(|_| walk.sample(n, &mut rng).len() as f64).sum::<f64>() / trials as f64;
        let exact = expected_simple_walk_length(2, n);
        assert!((mean - exact).abs() <= 0.1 * exact, "n={n}: {mean} vs {exact}");
    }
    assert!((expected_simple_walk_length(2, 400) / 400.0 - 0.5).abs() < 0.01);
}

#[test]
fn group_walk_is_tame() {
    let support = [
        (Word::parse("ab").unwrap(), 0.5),
        (Word::parse("BBa").unwrap(), 0.3),
        (Word::parse("A").unwrap(), 0.2),
    ];
    let walk = GroupWalk::new(&support).unwrap();
    let mut rng = rng_from_seed(4);
    for n in [1, 10, 100, 1000] {
        assert!(walk.sample(n, &mut rng).len() <= walk.max_step_len() * n);
    }
}

#[test]
fn biased_letter_block_frequencies() {
    let w = LetterDistribution::biased_positive().sample(100_000, &mut rng_from_seed(5));
    let c = CyclicWord::from_word(&w).unwrap();
    let freq = |v: &str| occurrences_cyclic(&Word::parse(v).unwrap(), &c) as f64 / c.len() as f64;
    assert!((freq("abb") - 0.081).abs() < 0.005);
    assert!((freq("aaa") - 0.001).abs() < 0.005);
    assert!((freq("aba") - 0.009).abs() < 0.005);
}

#[test]
fn rose_directed_walk_matches_uniform_sampler() {
    let gc = Preset::RoseUniform.build(2).unwrap();
    let s = DirectedSampler::new(gc, None, ClosingMode::Breve).unwrap();
    let mut r1 = rng_from_seed(6);
    let mut r2 = rng_from_seed(7);
    let trials = 40_000;
    let mut a: HashMap<usize, f64> = HashMap::new();
    let mut b: HashMap<usize, f64> = HashMap::new();
    let mut classes_a: HashMap<CyclicWord, f64> = HashMap::new();
    let mut classes_b: HashMap<CyclicWord, f64> = HashMap::new();
    for _ in 0..trials {
        let x = s.sample(8, &mut r1).unwrap().class;
        *a.entry(x.len()).or_default() += 1.0 / trials as f64;
        *classes_a.entry(x).or_default() += 1.0 / trials as f64;
        if let Some(y) = cyclic_reduce(&uniform_nb(2, 8, &mut r2)).class {
            *b.entry(y.len()).or_default() += 1.0 / trials as f64;
            *classes_b.entry(y).or_default() += 1.0 / trials as f64;
        }
    }
    let tv = |p: &HashMap<usize, f64>, q: &HashMap<usize, f64>| {
        (0..=8)
            .map(|k| (p.get(&k).unwrap_or(&0.0) - q.get(&k).unwrap_or(&0.0)).abs())
            .sum::<f64>()
            / 2.0
    };
    assert!(tv(&a, &b) < 0.02);
    let mut keys: Vec<&CyclicWord> = classes_a.keys().chain(classes_b.keys()).collect();
    keys.sort();
    keys.dedup();
    let ks = keys
        .iter()
        .scan((0.0, 0.0), |acc, k| {
            acc.0 += classes_a.get(*k).unwrap_or(&0.0);
            acc.1 += classes_b.get(*k).unwrap_or(&0.0);
            Some((acc.0 - acc.1).abs())
        })
        .fold(0.0, f64::max);
    // Two-sample KS critical value at α = 0.001: 1.95 · sqrt(2 / trials).
    assert!(ks < 1.95 * (2.0 / trials as f64).sqrt(), "{ks}");
}

#[test]
fn closing_systems_respect_their_contract() {
    for preset in Preset::ALL {
        let rank = 2;
        let gc = preset.build(rank).unwrap();
        let g = &gc.graph;
        let cs = build_closing_system(g).unwrap();
        assert!(cs.max_len() <= g.edge_count());
        for e in 0..g.edge_count() {
            for f in 0..g.edge_count() {
                let p: Vec<usize> = [&[e][..], cs.beta(e, f), &[f]].concat();
                assert!(g.is_reduced_path(&p), "{}", g.path_name(&p));
            }
        }
    }
    let rose = MarkedGraph::rose(2).unwrap();
    let cs = build_closing_system(&rose).unwrap();
    for e in 0..4 {
        for f in 0..4 {
            if rose.follows(e, f) {
                assert!(cs.beta(e, f).is_empty());
            } else {
                let beta = cs.beta(e, f);
                assert_eq!(beta.len(), 1);
                assert_ne!(beta[0] / 2, e / 2);
            }
        }
    }
    assert_eq!(
        cs.hat(&rose, &rose.parse_path("ab").unwrap()).unwrap(),
        rose.parse_path("ab").unwrap()
    );
}

#[test]
fn gamma_based_validation() {
    let g = MarkedGraph::rose(2).unwrap();
    assert!(Preset::RoseUniform.build(2).is_ok());
    let bad = fsmc::RationalChain::new(
        vec!["a".into(), "A".into()],
        vec![
            vec![fsmc::rat(1, 2), fsmc::rat(1, 2)],
            vec![fsmc::rat(1, 2), fsmc::rat(1, 2)],
        ],
    )
    .unwrap();
    assert!(!validate_gamma_based(&bad, &g).is_empty());
    assert!(matches!(GammaChain::new(g, bad), Err(GraphError::NotGammaBased(_))));
    let lolli = Preset::Lollipop.build(2).unwrap();
    assert!(validate_gamma_based(&lolli.chain, &lolli.graph).is_empty());
    assert!(!lolli.graph.warnings().is_empty());
}

#[test]
fn path_translation() {
    let rose = MarkedGraph::rose(2).unwrap();
    assert_eq!(
        rose.path_to_class(&rose.parse_path("abb").unwrap())
            .unwrap()
            .to_string(),
        "abb"
    );
    let lolli = MarkedGraph::lollipop(3).unwrap();
    for i in 1..=3 {
        let p = lolli.parse_path(&format!("e{i}.f{i}.E{i}")).unwrap();
        assert_eq!(
            lolli.path_to_class(&p).unwrap(),
            CyclicWord::from_letters(&[Letter::new(i, false)]).unwrap()
        );
    }
    let theta = MarkedGraph::theta(2).unwrap();
    assert_eq!(
        theta.path_to_class(&theta.parse_path("t.T").unwrap()),
        Err(GraphError::Degenerate)
    );
    let loop_path = theta.parse_path("t.A1").unwrap();
    assert_eq!(theta.path_to_class(&loop_path).unwrap().to_string(), "A");
    let lolli2 = MarkedGraph::lollipop(2).unwrap();
    assert!(matches!(
        lolli2.path_to_class(&lolli2.parse_path("e1.f1").unwrap()),
        Err(GraphError::NotClosed)
    ));
}

#[test]
fn graph_file_roundtrip() {
    for g in [
        MarkedGraph::rose(3).unwrap(),
        MarkedGraph::lollipop(2).unwrap(),
        MarkedGraph::theta(3).unwrap(),
    ] {
        let json = serde_json::to_string(&g.to_file()).unwrap();
        let back = MarkedGraph::from_json(&json).unwrap();
        assert_eq!(back.to_file(), g.to_file());
        assert_eq!(back.rank(), g.rank());
    }
}

#[test]
fn breve_length_is_rarely_much_shorter() {
    let gc = Preset::RoseUniform.build(2).unwrap();
    assert!(gc.chain.is_tight());
    let s = DirectedSampler::new(gc, None, ClosingMode::Breve).unwrap();
    let mut rng = rng_from_seed(8);
    let n = 400;
    let short = (0..2000)
        .filter(|_| (s.sample(n, &mut rng).unwrap().closed.len() as f64) < n as f64 - 2.0 * (n as f64).sqrt())
        .count();
    assert!(short <= 20, "{short}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn breve_equals_hat_off_closed_paths(seed in any::<u64>(), n in 1usize..40) {
        for preset in [Preset::Lollipop, Preset::Theta] {
            let gc = preset.build(2).unwrap();
            let hat = DirectedSampler::new(gc.clone(), None, ClosingMode::Hat).unwrap();
            let breve = DirectedSampler::new(gc, None, ClosingMode::Breve).unwrap();
            let raw = hat.raw_path(n, &mut rng_from_seed(seed)).unwrap();
            let g = &hat.gamma.graph;
            prop_assert!(g.is_reduced_path(&raw));
            if !g.is_closed(&raw) {
                prop_assert_eq!(hat.close(&raw).unwrap(), breve.close(&raw).unwrap());
            } else {
                let b = breve.close(&raw).unwrap();
                prop_assert!(b.len() <= raw.len());
            }
        }
    }

    #[test]
    fn samplers_are_deterministic(seed in any::<u64>()) {
        prop_assert_eq!(uniform_nb(3, 30, &mut rng_from_seed(seed)), uniform_nb(3, 30, &mut rng_from_seed(seed)));
        let d = LetterDistribution::biased_positive();
        prop_assert_eq!(d.sample(30, &mut rng_from_seed(seed)), d.sample(30, &mut rng_from_seed(seed)));
        let w = GroupWalk::simple(2);
        prop_assert_eq!(w.sample(30, &mut rng_from_seed(seed)), w.sample(30, &mut rng_from_seed(seed)));
        let s = DirectedSampler::new(Preset::Lollipop.build(3).unwrap(), None, ClosingMode::Hat).unwrap();
        prop_assert_eq!(s.sample(30, &mut rng_from_seed(seed)).unwrap().closed, s.sample(30, &mut rng_from_seed(seed)).unwrap().closed);
    }

    #[test]
    fn closed_paths_translate_conjugation_invariantly(seed in any::<u64>(), shift in 0usize..100) {
        let s = DirectedSampler::new(Preset::Theta.build(3).unwrap(), None, ClosingMode::Hat).unwrap();
        let out = s.sample(25, &mut rng_from_seed(seed)).unwrap();
        let k = shift % out.closed.len();
        let rotated = [&out.closed[k..], &out.closed[..k]].concat();
        prop_assert_eq!(s.gamma.graph.path_to_class(&rotated).unwrap(), out.class);
    }

    #[test]
    fn positive_rose_chain_outputs_positive_words(seed in any::<u64>(), n in 1usize..200) {
        let s = DirectedSampler::new(Preset::RosePositive.build(2).unwrap(), None, ClosingMode::Hat).unwrap();
        let out = s.sample(n, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(&out.raw, &out.closed);
        prop_assert!(out.class.letters().iter().all(|l| !l.is_inverse()));
    }
}
