use std::collections::BTreeSet;

use proptest::prelude::*;
use wh_core::*;

fn reduced_word(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..(2 * rank) as u8, 0..max_len)
        .prop_map(|v| free_reduce(&v.into_iter().map(Letter::from_code).collect::<Vec<_>>()))
}

fn images(mv: &Move) -> Vec<String> {
    mv.positive_images().map(|w| w.to_string()).collect()
}

/// Second-kind moves from subsets `A` with `a ∈ A`, `a^-1 ∉ A`:
/// `x -> x a` if only `x ∈ A`, `x -> a^-1 x` if only `x^-1 ∈ A`, both: `a^-1 x a`.
fn subset_moves(rank: usize) -> BTreeSet<Vec<String>> {
    let alphabet = Alphabet::new(rank).unwrap();
    let mut out = BTreeSet::new();
    for a in alphabet.letters() {
        let others: Vec<Letter> = alphabet.letters().filter(|l| l.index() != a.index()).collect();
        for mask in 0u32..(1 << others.len()) {
            let in_a = |l: Letter| l == a || others.iter().position(|&o| o == l).is_some_and(|i| mask >> i & 1 == 1);
            let imgs: Vec<String> = (1..=rank)
                .map(|i| {
                    let x = Letter::new(i, false);
                    if x.index() == a.index() {
                        return x.to_char().to_string();
                    }
                    let mut raw = Vec::new();
                    if in_a(x.inverse()) {
                        raw.push(a.inverse());
                    }
                    raw.push(x);
                    if in_a(x) {
                        raw.push(a);
                    }
                    free_reduce(&raw).to_string()
                })
                .collect();
            out.insert(imgs);
        }
    }
    out
}

fn signed_permutations(rank: usize) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut perm: Vec<usize> = (1..=rank).collect();
    fn permute(k: usize, perm: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == perm.len() {
            out.push(perm.clone());
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(k + 1, perm, out);
            perm.swap(k, i);
        }
    }
    let mut all = Vec::new();
    permute(0, &mut perm, &mut all);
    for p in all {
        for signs in 0u32..(1 << rank) {
            out.insert(
                p.iter()
                    .enumerate()
                    .map(|(i, &j)| Letter::new(j, signs >> i & 1 == 1).to_char().to_string())
                    .collect(),
            );
        }
    }
    out
}

#[test]
fn enumeration_matches_independent_construction() {
    for rank in 2..=4 {
        let moves = MoveSet::new(rank).unwrap();
        let identity: Vec<String> = (1..=rank)
            .map(|i| Letter::new(i, false).to_char().to_string())
            .collect();
        let mut expected: BTreeSet<Vec<String>> =
            subset_moves(rank).union(&signed_permutations(rank)).cloned().collect();
        expected.remove(&identity);
        let got: BTreeSet<Vec<String>> = moves.entries().iter().map(|e| images(&e.mv)).collect();
        assert_eq!(got.len(), moves.len(), "duplicate letter maps at rank {rank}");
        assert_eq!(got, expected, "rank {rank}");
        let first: BTreeSet<Vec<String>> = moves
            .entries()
            .iter()
            .filter(|e| e.is_first_kind)
            .map(|e| images(&e.mv))
            .collect();
        assert_eq!(first.len(), (1..=rank).product::<usize>() * (1 << rank) - 1);
    }
}

#[test]
fn inner_moves_are_conjugations() {
    let moves = MoveSet::new(3).unwrap();
    for e in moves.entries().iter().filter(|e| e.is_inner) {
        let MoveKind::SecondKind { multiplier, .. } = e.mv.kind() else {
            panic!("first-kind move flagged inner");
        };
        for x in moves.alphabet().letters() {
            let img = e.mv.image(x);
            if x.index() != multiplier.index() {
                let conj = Word::parse(&format!(
                    "{}{}{}",
                    multiplier.inverse().to_char(),
                    x.to_char(),
                    multiplier.to_char()
                ))
                .unwrap();
                assert_eq!(*img, conj);
            }
        }
    }
    assert_eq!(moves.entries().iter().filter(|e| e.is_inner).count(), 6);
}

#[test]
fn rank_limit() {
    assert!(matches!(MoveSet::new(7), Err(MoveError::RankTooLarge(7))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn moves_are_homomorphisms(u in reduced_word(3, 20), v in reduced_word(3, 20), idx in 0usize..10_000) {
        let moves = MoveSet::new(3).unwrap();
        let mv = moves.get(idx % moves.len());
        prop_assert_eq!(mv.apply_to_word(&u.concat(&v)), mv.apply_to_word(&u).concat(&mv.apply_to_word(&v)));
    }

    #[test]
    fn inverse_index_undoes_move(w in reduced_word(3, 30), idx in 0usize..10_000) {
        let moves = MoveSet::new(3).unwrap();
        let i = idx % moves.len();
        let inv = moves.get(moves.inverse_index(i));
        prop_assert_eq!(inv.apply_to_word(&moves.get(i).apply_to_word(&w)), w.clone());
        prop_assert_eq!(moves.get(i).invert(), inv.clone());
        prop_assert_eq!(moves.inverse_index(moves.inverse_index(i)), i);
    }

    #[test]
    fn class_action_matches_word_action(w in reduced_word(2, 30), idx in 0usize..10_000) {
        let moves = MoveSet::new(2).unwrap();
        let mv = moves.get(idx % moves.len());
        if let Ok(c) = CyclicWord::from_word(&w) {
            let via_word = CyclicWord::from_word(&mv.apply_to_word(&w)).unwrap();
            prop_assert_eq!(mv.apply_to_class(&c), via_word.clone());
            let mut buf = Vec::new();
            prop_assert_eq!(mv.image_length(&c, &mut buf), via_word.len());
        }
    }

    #[test]
    fn record_roundtrip(idx in 0usize..10_000) {
        let moves = MoveSet::new(3).unwrap();
        let mv = moves.get(idx % moves.len());
        let rec = mv.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back = Move::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        prop_assert_eq!(images(&back), images(mv));
    }
}
