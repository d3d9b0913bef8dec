use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use wh_core::currents::*;
use wh_core::fsmc::{rat, RationalChain};
use wh_core::graph::*;
use wh_core::walks::{rng_from_seed, uniform_cyclic_word};
use wh_core::*;

fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Switch and flip conditions recomputed from scratch.
fn switch_holds(t: &WeightTable) -> bool {
    let g = t.graph();
    let m = g.edge_count();
    t.iter().all(|(v, w)| {
        if t.weight(&g.inverse_path(v)) != Some(w) {
            return false;
        }
        if v.len() == t.depth() {
            return true;
        }
        let sum = |ext: &dyn Fn(usize) -> Option<Vec<usize>>| {
            (0..m)
                .filter_map(ext)
                .map(|p| t.weight(&p).unwrap().clone())
                .fold(BigRational::zero(), |a, b| a + b)
        };
        let right = sum(&|e| g.follows(*v.last().unwrap(), e).then(|| [v.as_slice(), &[e]].concat()));
        let left = sum(&|e| g.follows(e, v[0]).then(|| [&[e], v.as_slice()].concat()));
        right == *w && left == *w
    })
}

fn class_strategy(len: std::ops::Range<usize>) -> impl Strategy<Value = CyclicWord> {
    prop::collection::vec(0u8..4, len).prop_filter_map("trivial", |v| {
        CyclicWord::from_word(&free_reduce(&v.into_iter().map(Letter::from_code).collect::<Vec<_>>())).ok()
    })
}

fn naive_cyclic_count(v: &[Letter], c: &[Letter]) -> usize {
    let n = c.len();
    (0..n).filter(|&i| (0..v.len()).all(|j| c[(i + j) % n] == v[j])).count()
}

/// Random positive weights on every non-backtracking transition of `g`.
fn random_gamma_chain(g: MarkedGraph, weights: &[u8]) -> GammaChain {
    let m = g.edge_count();
    let rows = (0..m)
        .map(|e| {
            let raw: Vec<i64> = (0..m)
                .map(|f| {
                    if g.follows(e, f) {
                        1 + weights[e * m + f] as i64
                    } else {
                        0
                    }
                })
                .collect();
            let total: i64 = raw.iter().sum();
            raw.into_iter().map(|x| rat(x, total)).collect()
        })
        .collect();
    let names = g.edges().iter().map(|e| e.id.clone()).collect();
    GammaChain::new(g, RationalChain::new(names, rows).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn counting_tables_are_exact(c in class_strategy(1..40), depth in 1usize..=4) {
        let t = counting_current(&c, 2, depth).unwrap();
        prop_assert!(switch_holds(&t));
        prop_assert_eq!(t.length_norm(), int(c.len()));
        for (p, w) in t.iter() {
            let v: Vec<Letter> = p.iter().map(|&e| Letter::from_code(e as u8)).collect();
            let inv: Vec<Letter> = v.iter().rev().map(|l| l.inverse()).collect();
            let expected = naive_cyclic_count(&v, c.letters()) + naive_cyclic_count(&inv, c.letters());
            prop_assert_eq!(w, &int(expected));
            prop_assert_eq!(w, &int(occurrences_symmetrized(&Word::parse(&t.graph().path_name(p)).unwrap(), &c)));
        }
    }

    #[test]
    fn characteristic_tables_of_random_chains(weights in prop::collection::vec(0u8..5, 64), theta in any::<bool>()) {
        let g = if theta { MarkedGraph::theta(2).unwrap() } else { MarkedGraph::rose(2).unwrap() };
        let gc = random_gamma_chain(g, &weights);
        let t = characteristic_current(&gc, 4).unwrap();
        prop_assert!(switch_holds(&t));
        prop_assert!(t.length_norm().is_one());
    }

    #[test]
    fn projective_distance_is_a_pseudometric(a in class_strategy(3..30), b in class_strategy(3..30), c in class_strategy(3..30), s in 1usize..5) {
        let ta = counting_current(&a, 2, 3).unwrap();
        let tb = counting_current(&b, 2, 3).unwrap();
        let tc = counting_current(&c, 2, 3).unwrap();
        let probes = default_probes(ta.graph(), 3);
        prop_assert_eq!(probes.len(), 4 + 12 + 36);
        let d = |x: &WeightTable, y: &WeightTable| projective_distance_exact(x, y, &probes).unwrap();
        prop_assert!(d(&ta, &ta).is_zero());
        prop_assert!(d(&ta, &ta.scale(&int(s))).is_zero());
        prop_assert_eq!(d(&ta, &tb), d(&tb, &ta));
        prop_assert!(d(&ta, &tc) <= d(&ta, &tb) + d(&tb, &tc));
        prop_assert_eq!(ta.scale(&int(s)).length_norm(), ta.length_norm() * int(s));
    }
}

#[test]
fn small_counting_examples() {
    let ab = counting_current(&CyclicWord::parse("ab").unwrap(), 2, 1).unwrap();
    for l in ["a", "A", "b", "B"] {
        assert_eq!(ab.weight_of(l).unwrap(), Some(&int(1)));
    }
    assert_eq!(ab.length_norm(), int(2));
    let aa = counting_current(&CyclicWord::parse("aa").unwrap(), 2, 2).unwrap();
    assert_eq!(aa.weight_of("aa").unwrap(), Some(&int(2)));
    assert_eq!(aa.weight_of("AA").unwrap(), Some(&int(2)));
    assert_eq!(aa.length_norm(), int(2));
    assert_eq!(
        counting_current(&CyclicWord::parse("abAB").unwrap(), 2, 2)
            .unwrap()
            .length_norm(),
        int(4)
    );
}

#[test]
fn counting_norm_on_random_long_words() {
    let mut rng = rng_from_seed(12);
    for _ in 0..100 {
        let c = uniform_cyclic_word(3, 500, &mut rng);
        let t = counting_current(&c, 3, 2).unwrap();
        assert_eq!(t.length_norm(), int(500));
        assert!(t.is_valid());
    }
}

#[test]
fn uniform_current_values() {
    let t = uniform_current(2, 3).unwrap();
    assert_eq!(t.weight_of("a").unwrap(), Some(&rat(1, 2)));
    assert_eq!(t.weight_of("ab").unwrap(), Some(&rat(1, 6)));
    assert_eq!(t.weight_of("abB").unwrap(), None);
    assert_eq!(t.weight_of("aba").unwrap(), Some(&rat(1, 18)));
    assert!(t.length_norm().is_one());
    for rank in 2..=4 {
        let t = uniform_current(rank, 4).unwrap();
        assert!(switch_holds(&t));
        assert!(t.length_norm().is_one());
    }
}

#[test]
fn rose_uniform_chain_gives_uniform_current() {
    for rank in 2..=3 {
        let gc = Preset::RoseUniform.build(rank).unwrap();
        let depth = if rank == 2 { 5 } else { 4 };
        let ch = characteristic_current(&gc, depth).unwrap();
        assert_eq!(ch, uniform_current(rank, depth).unwrap());
    }
}

#[test]
fn positive_chain_support() {
    let gc = Preset::RosePositive.build(2).unwrap();
    let t = characteristic_current(&gc, 4).unwrap();
    assert!(switch_holds(&t));
    for (p, w) in t.iter() {
        let forward = p.iter().all(|&e| e % 2 == 0);
        let backward = p.iter().all(|&e| e % 2 == 1);
        assert_eq!(!w.is_zero(), forward || backward, "{}", t.graph().path_name(p));
    }
}

#[test]
fn preset_characteristic_tables_are_valid() {
    for preset in Preset::ALL {
        let gc = preset.build(2).unwrap();
        let t = characteristic_current(&gc, 4).unwrap();
        assert!(switch_holds(&t) && t.is_valid(), "{}", preset.name());
        assert!(t.length_norm().is_one());
    }
}

/// Cyclic word through every reduced 3-word: an Eulerian circuit in the graph
/// whose vertices are reduced 2-words and whose edges are reduced 3-words.
fn de_bruijn_word(rank: usize) -> CyclicWord {
    let alphabet = Alphabet::new(rank).unwrap();
    let mut out_edges: HashMap<Vec<Letter>, Vec<Letter>> = HashMap::new();
    for w in word::reduced_words(alphabet, 3) {
        let l = w.letters();
        out_edges.entry(l[..2].to_vec()).or_default().push(l[2]);
    }
    let start = vec![Letter::new(1, false), Letter::new(1, false)];
    let mut stack = vec![start];
    let mut circuit = Vec::new();
    while let Some(v) = stack.last().cloned() {
        match out_edges.get_mut(&v).and_then(|e| e.pop()) {
            Some(x) => stack.push(vec![v[1], x]),
            None => circuit.push(stack.pop().unwrap()),
        }
    }
    circuit.reverse();
    let letters: Vec<Letter> = circuit[1..].iter().map(|v| v[1]).collect();
    CyclicWord::from_letters(&letters).unwrap()
}

#[test]
fn de_bruijn_word_has_three_subword_certificate() {
    for rank in 2..=3 {
        let c = de_bruijn_word(rank);
        let all = word::reduced_words(Alphabet::new(rank).unwrap(), 3).len();
        assert_eq!(c.len(), all);
        let verdict = certify_filling(FillingInput::Word(&c), &FillingMethod::ThreeSubword).unwrap();
        let cert = verdict.certificate().expect("certified");
        assert!(cert.conclusive);
        assert!(verify_certificate(cert, FillingInput::Word(&c)));
        let distinct: BTreeSet<Vec<Letter>> = (0..c.len())
            .map(|i| (0..3).map(|j| c.letters()[(i + j) % c.len()]).collect())
            .collect();
        assert_eq!(distinct.len(), all);
    }
    let short = CyclicWord::parse("aaabbb").unwrap();
    assert!(matches!(
        certify_filling(FillingInput::Word(&short), &FillingMethod::ThreeSubword).unwrap(),
        FillingVerdict::Inconclusive(_)
    ));
}

#[test]
fn chain_certificates() {
    let expected = [
        (Preset::RoseUniform, 1u8),
        (Preset::RosePositive, 2),
        (Preset::Lollipop, 4),
        (Preset::Theta, 1),
    ];
    for (preset, case) in expected {
        let gc = preset.build(2).unwrap();
        let verdict = certify_filling(FillingInput::Chain(&gc), &FillingMethod::FsmcXF { case3_path: None }).unwrap();
        let cert = verdict
            .certificate()
            .unwrap_or_else(|| panic!("{} not certified", preset.name()));
        assert_eq!(cert.kind, CertificateKind::FsmcXF(case));
        assert!(cert.conclusive);
        assert!(verify_certificate(cert, FillingInput::Chain(&gc)));
    }
}

#[test]
fn tampered_certificates_fail_verification() {
    let gc = Preset::RoseUniform.build(2).unwrap();
    let verdict = certify_filling(FillingInput::Chain(&gc), &FillingMethod::FsmcXF { case3_path: None }).unwrap();
    let mut cert = verdict.certificate().unwrap().clone();
    if let Evidence::Transitions(pairs) = &mut cert.evidence {
        pairs.pop();
    }
    assert!(!verify_certificate(&cert, FillingInput::Chain(&gc)));
    let positive = Preset::RosePositive.build(2).unwrap();
    let good = verdict.certificate().unwrap();
    assert!(!verify_certificate(good, FillingInput::Chain(&positive)));
}

#[test]
fn table_certificates_are_depth_bounded() {
    let t = uniform_current(2, 4).unwrap();
    for method in [
        FillingMethod::FullSupportDepth,
        FillingMethod::BasisPairs,
        FillingMethod::WordPower(de_bruijn_word(2)),
    ] {
        let verdict = certify_filling(FillingInput::Table(&t), &method).unwrap();
        match verdict {
            FillingVerdict::Certified(cert) => {
                assert!(!cert.conclusive, "{method:?}");
                assert!(verify_certificate(&cert, FillingInput::Table(&t)));
            }
            FillingVerdict::Inconclusive(why) => {
                assert!(matches!(method, FillingMethod::WordPower(_)), "{method:?}: {why}");
            }
        }
    }
    let positive = characteristic_current(&Preset::RosePositive.build(2).unwrap(), 3).unwrap();
    assert!(matches!(
        certify_filling(FillingInput::Table(&positive), &FillingMethod::FullSupportDepth).unwrap(),
        FillingVerdict::Inconclusive(_)
    ));
    let c = CyclicWord::parse("ab").unwrap();
    assert!(matches!(
        certify_filling(FillingInput::Word(&c), &FillingMethod::BasisPairs),
        Err(CurrentError::MethodMismatch(_))
    ));
}

#[test]
fn table_dump_lists_every_path() {
    let t = uniform_current(2, 2).unwrap();
    let dump = t.to_jsonl();
    assert_eq!(dump.lines().count(), 4 + 12);
    let first: WeightLine = serde_json::from_str(dump.lines().next().unwrap()).unwrap();
    assert_eq!(first.weight, "1/2");
}
