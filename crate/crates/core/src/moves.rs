//! Whitehead automorphisms: construction, enumeration, application and inversion.
//!
//! Every move is stored as a full table of letter images (one freely reduced
//! word per signed letter), so applying a move costs O(1) per input letter.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::word::{cyclic_core_bounds, push_reduced, Alphabet, CyclicWord, Letter, Word, WordError};

/// Largest rank for which the full move set is enumerated.
pub const MAX_ENUMERATION_RANK: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("rank {0} too large to enumerate all Whitehead moves (max {MAX_ENUMERATION_RANK})")]
    RankTooLarge(usize),
    #[error("first-kind images must form a signed permutation of the basis")]
    NotSignedPermutation,
    #[error("expected {expected} entries, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("the multiplier's own generator pair must be tagged Keep")]
    MultiplierTagged,
    #[error("unknown move kind {0:?}")]
    UnknownKind(String),
}

/// Action of a second-kind move on the positive letter `x` of one generator pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    /// `x -> x`
    Keep,
    /// `x -> x a`
    Right,
    /// `x -> a^-1 x`
    Left,
    /// `x -> a^-1 x a`
    Conj,
}

impl Tag {
    pub const ALL: [Tag; 4] = [Tag::Keep, Tag::Right, Tag::Left, Tag::Conj];
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MoveKind {
    /// Signed permutation of the basis.
    FirstKind,
    /// `tags[i]` acts on `a_{i+1}`; the multiplier's own pair is always `Keep`.
    SecondKind { multiplier: Letter, tags: Vec<Tag> },
}

/// A Whitehead automorphism of `F_N`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Move {
    rank: usize,
    /// Image of every signed letter, indexed by letter code.
    images: Vec<Word>,
    kind: MoveKind,
}

impl Move {
    /// First-kind move sending `a_i` to `targets[i-1]`.
    pub fn first_kind(targets: &[Letter]) -> Result<Self, MoveError> {
        let rank = targets.len();
        let alphabet = Alphabet::new(rank)?;
        alphabet.check(targets)?;
        let mut seen = vec![false; rank];
        for t in targets {
            if std::mem::replace(&mut seen[t.index() - 1], true) {
                return Err(MoveError::NotSignedPermutation);
            }
        }
        let mut images = vec![Word::identity(); 2 * rank];
        for (i, &t) in targets.iter().enumerate() {
            let a = Letter::new(i + 1, false);
            images[a.code() as usize] = Word::from_reduced_unchecked(vec![t]);
            images[a.inverse().code() as usize] = Word::from_reduced_unchecked(vec![t.inverse()]);
        }
        Ok(Move {
            rank,
            images,
            kind: MoveKind::FirstKind,
        })
    }

    /// Second-kind move with the given multiplier; `tags[i]` acts on `a_{i+1}`.
    pub fn second_kind(multiplier: Letter, tags: &[Tag]) -> Result<Self, MoveError> {
        let rank = tags.len();
        let alphabet = Alphabet::new(rank)?;
        alphabet.check(&[multiplier])?;
        if tags[multiplier.index() - 1] != Tag::Keep {
            return Err(MoveError::MultiplierTagged);
        }
        let m = multiplier;
        let mi = m.inverse();
        let mut images = vec![Word::identity(); 2 * rank];
        for (i, &tag) in tags.iter().enumerate() {
            let x = Letter::new(i + 1, false);
            let raw: Vec<Letter> = match tag {
                Tag::Keep => vec![x],
                Tag::Right => vec![x, m],
                Tag::Left => vec![mi, x],
                Tag::Conj => vec![mi, x, m],
            };
            let img = crate::word::free_reduce(&raw);
            images[x.inverse().code() as usize] = img.inverse();
            images[x.code() as usize] = img;
        }
        Ok(Move {
            rank,
            images,
            kind: MoveKind::SecondKind {
                multiplier,
                tags: tags.to_vec(),
            },
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kind(&self) -> &MoveKind {
        &self.kind
    }

    pub fn is_first_kind(&self) -> bool {
        matches!(self.kind, MoveKind::FirstKind)
    }

    /// True for the all-`Conj` second-kind moves, i.e. conjugation by the multiplier.
    pub fn is_inner(&self) -> bool {
        match &self.kind {
            MoveKind::FirstKind => false,
            MoveKind::SecondKind { multiplier, tags } => tags
                .iter()
                .enumerate()
                .all(|(i, t)| i + 1 == multiplier.index() || *t == Tag::Conj),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(code, img)| img.letters() == [Letter::from_code(code as u8)])
    }

    pub fn image(&self, letter: Letter) -> &Word {
        &self.images[letter.code() as usize]
    }

    /// Images of `a_1 .. a_N`.
    pub fn positive_images(&self) -> impl Iterator<Item = &Word> {
        self.images.iter().step_by(2)
    }

    /// Appends the image of `letters` to a freely reduced stack.
    #[inline]
    pub fn extend_image(&self, letters: &[Letter], stack: &mut Vec<Letter>) {
        for &l in letters {
            for &x in self.images[l.code() as usize].letters() {
                push_reduced(stack, x);
            }
        }
    }

    pub fn apply_to_word(&self, w: &Word) -> Word {
        let mut stack = Vec::with_capacity(w.len() + w.len() / 2);
        self.extend_image(w.letters(), &mut stack);
        Word::from_reduced_unchecked(stack)
    }

    /// Image of a class, cyclically reduced and canonicalized.
    pub fn apply_to_class(&self, c: &CyclicWord) -> CyclicWord {
        let mut buf = Vec::new();
        let (s, e) = self.class_image_into(c, &mut buf);
        CyclicWord::from_cyclically_reduced(&buf[s..e])
    }

    /// Cyclic length of the image class, without canonicalizing.
    pub fn image_length(&self, c: &CyclicWord, buf: &mut Vec<Letter>) -> usize {
        let (s, e) = self.class_image_into(c, buf);
        e - s
    }

    /// Writes the freely reduced image of `c` into `buf` and returns the
    /// bounds of its cyclically reduced core.
    pub fn class_image_into(&self, c: &CyclicWord, buf: &mut Vec<Letter>) -> (usize, usize) {
        buf.clear();
        self.extend_image(c.letters(), buf);
        let bounds = cyclic_core_bounds(buf);
        debug_assert!(bounds.1 > bounds.0, "automorphism killed a nontrivial class");
        bounds
    }

    /// The inverse automorphism, itself a Whitehead move of the same kind.
    pub fn invert(&self) -> Move {
        match &self.kind {
            MoveKind::FirstKind => {
                let mut targets = vec![Letter::new(1, false); self.rank];
                for code in 0..2 * self.rank {
                    let x = Letter::from_code(code as u8);
                    let y = self.images[code].letters()[0];
                    if !y.is_inverse() {
                        targets[y.index() - 1] = x;
                    }
                }
                Move::first_kind(&targets).expect("inverse of a signed permutation")
            }
            MoveKind::SecondKind { multiplier, tags } => {
                // x -> x a inverts to x -> x a^-1, which is the same tag with multiplier a^-1.
                Move::second_kind(multiplier.inverse(), tags).expect("valid second-kind inverse")
            }
        }
    }

    pub fn to_record(&self) -> MoveRecord {
        MoveRecord {
            kind: match self.kind {
                MoveKind::FirstKind => "first".into(),
                MoveKind::SecondKind { .. } => "second".into(),
            },
            multiplier: match self.kind {
                MoveKind::FirstKind => None,
                MoveKind::SecondKind { multiplier, .. } => Some(multiplier.to_string()),
            },
            images: self.positive_images().map(|w| w.to_string()).collect(),
        }
    }

    pub fn from_record(rec: &MoveRecord) -> Result<Self, MoveError> {
        let images: Vec<Word> = rec.images.iter().map(|s| Word::parse(s)).collect::<Result<_, _>>()?;
        let rank = images.len();
        match rec.kind.as_str() {
            "first" => {
                let targets: Vec<Letter> = images
                    .iter()
                    .map(|w| match w.letters() {
                        [l] => Ok(*l),
                        _ => Err(MoveError::NotSignedPermutation),
                    })
                    .collect::<Result<_, _>>()?;
                Move::first_kind(&targets)
            }
            "second" => {
                let m = rec
                    .multiplier
                    .as_deref()
                    .and_then(|s| s.chars().next())
                    .ok_or_else(|| MoveError::UnknownKind("second without multiplier".into()))?;
                let m = Letter::from_char(m)?;
                let mut tags = vec![Tag::Keep; rank];
                for (i, img) in images.iter().enumerate() {
                    if i + 1 == m.index() {
                        continue;
                    }
                    tags[i] = Tag::ALL
                        .into_iter()
                        .find(|&t| {
                            let mut probe = vec![Tag::Keep; rank];
                            probe[i] = t;
                            Move::second_kind(m, &probe)
                                .map(|mv| mv.image(Letter::new(i + 1, false)) == img)
                                .unwrap_or(false)
                        })
                        .ok_or(MoveError::UnknownKind(format!("image {img}")))?;
                }
                Move::second_kind(m, &tags)
            }
            other => Err(MoveError::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Debug for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Move(")?;
        for (i, img) in self.positive_images().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}->{}", Letter::new(i + 1, false), img)?;
        }
        write!(f, ")")
    }
}

/// Serialized form used in witness output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<String>,
    pub images: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct MoveEntry {
    pub mv: Move,
    pub is_first_kind: bool,
    pub is_inner: bool,
    pub index: usize,
}

/// The enumerated Whitehead moves of a fixed rank, identity excluded.
///
/// Enumeration order: first-kind moves by permutation (lexicographic) then
/// sign mask (binary, bit `i` inverts the image of `a_{i+1}`); then second-kind
/// moves by multiplier code, then tag vector in base-4 lexicographic order over
/// generators `a_1..a_N`. Entries inducing an already-seen letter map are dropped.
#[derive(Debug, Clone)]
pub struct MoveSet {
    alphabet: Alphabet,
    entries: Vec<MoveEntry>,
    inverse: Vec<usize>,
    by_images: HashMap<Vec<Word>, usize>,
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

pub fn enumerate_moves(rank: usize) -> Result<MoveSet, MoveError> {
    MoveSet::new(rank)
}

impl MoveSet {
    pub fn new(rank: usize) -> Result<Self, MoveError> {
        let alphabet = Alphabet::new(rank)?;
        if rank > MAX_ENUMERATION_RANK {
            return Err(MoveError::RankTooLarge(rank));
        }
        let mut set = MoveSet {
            alphabet,
            entries: Vec::new(),
            inverse: Vec::new(),
            by_images: HashMap::new(),
        };

        let mut perm: Vec<usize> = (0..rank).collect();
        loop {
            for mask in 0u32..(1 << rank) {
                let targets: Vec<Letter> = perm
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| Letter::new(p + 1, mask >> i & 1 == 1))
                    .collect();
                set.push(Move::first_kind(&targets)?);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }

        for m in alphabet.letters() {
            let others: Vec<usize> = (0..rank).filter(|&i| i + 1 != m.index()).collect();
            let combos = 4usize.pow(others.len() as u32);
            for code in 0..combos {
                let mut tags = vec![Tag::Keep; rank];
                let mut rest = code;
                // most significant digit on the lowest generator index
                for &i in others.iter().rev() {
                    tags[i] = Tag::ALL[rest % 4];
                    rest /= 4;
                }
                set.push(Move::second_kind(m, &tags)?);
            }
        }

        set.inverse = set
            .entries
            .iter()
            .map(|e| set.index_of(&e.mv.invert()).expect("move set closed under inversion"))
            .collect();
        Ok(set)
    }

    fn push(&mut self, mv: Move) {
        if mv.is_identity() {
            return;
        }
        let key: Vec<Word> = mv.positive_images().cloned().collect();
        if self.by_images.contains_key(&key) {
            return;
        }
        let index = self.entries.len();
        self.by_images.insert(key, index);
        self.entries.push(MoveEntry {
            is_first_kind: mv.is_first_kind(),
            is_inner: mv.is_inner(),
            mv,
            index,
        });
    }

    pub fn rank(&self) -> usize {
        self.alphabet.rank()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MoveEntry] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> &Move {
        &self.entries[index].mv
    }

    pub fn entry(&self, index: usize) -> &MoveEntry {
        &self.entries[index]
    }

    /// Index of the inverse move.
    pub fn inverse_index(&self, index: usize) -> usize {
        self.inverse[index]
    }

    /// Index of the entry inducing the same letter map as `mv`.
    pub fn index_of(&self, mv: &Move) -> Option<usize> {
        let key: Vec<Word> = mv.positive_images().cloned().collect();
        self.by_images.get(&key).copied()
    }

    /// Moves that act nontrivially on conjugacy classes (inner moves skipped).
    pub fn outer(&self) -> impl Iterator<Item = &MoveEntry> {
        self.entries.iter().filter(|e| !e.is_inner)
    }

    pub fn count_first_kind(&self) -> usize {
        self.entries.iter().filter(|e| e.is_first_kind).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(c: char) -> Letter {
        Letter::from_char(c).unwrap()
    }

    /// tau: a -> a b^-1, b -> b
    fn tau() -> Move {
        Move::second_kind(l('B'), &[Tag::Right, Tag::Keep]).unwrap()
    }

    #[test]
    fn shortening_move_on_words() {
        let t = tau();
        assert_eq!(t.image(l('a')).to_string(), "aB");
        assert_eq!(t.apply_to_word(&Word::parse("abb").unwrap()).to_string(), "ab");
        assert_eq!(t.apply_to_word(&Word::parse("aba").unwrap()).to_string(), "aaB");
        let c = CyclicWord::parse("abb").unwrap();
        let img = t.apply_to_class(&c);
        assert_eq!(img.to_string(), "ab");
    }

    #[test]
    fn shortening_move_inverse() {
        let inv = tau().invert();
        assert_eq!(inv.image(l('a')).to_string(), "ab");
        assert_eq!(inv.image(l('b')).to_string(), "b");
    }

    #[test]
    fn swap_is_involution() {
        let swap = Move::first_kind(&[l('b'), l('a')]).unwrap();
        assert_eq!(swap.invert(), swap);
        let c = CyclicWord::parse("aab").unwrap();
        assert_eq!(swap.apply_to_class(&c).to_string(), "abb");
    }

    #[test]
    fn inner_moves_fix_classes() {
        let conj = Move::second_kind(l('a'), &[Tag::Keep, Tag::Conj]).unwrap();
        assert!(conj.is_inner());
        for s in ["ab", "abAB", "aabBBa", "b"] {
            let c = CyclicWord::parse(s).unwrap();
            assert_eq!(conj.apply_to_class(&c), c);
        }
    }

    #[test]
    fn invalid_constructions() {
        assert_eq!(
            Move::first_kind(&[l('a'), l('A')]),
            Err(MoveError::NotSignedPermutation)
        );
        assert_eq!(
            Move::second_kind(l('a'), &[Tag::Right, Tag::Keep]),
            Err(MoveError::MultiplierTagged)
        );
        assert!(matches!(MoveSet::new(1), Err(MoveError::Word(_))));
        assert_eq!(MoveSet::new(7).unwrap_err(), MoveError::RankTooLarge(7));
    }

    #[test]
    fn rank_two_counts() {
        let set = MoveSet::new(2).unwrap();
        assert_eq!(set.count_first_kind(), 7);
        let second = set.len() - 7;
        assert_eq!(second, 12);
        assert_eq!(set.entries().iter().filter(|e| e.is_inner).count(), 4);
    }

    #[test]
    fn record_round_trip() {
        let set = MoveSet::new(3).unwrap();
        for e in set.entries() {
            let rec = e.mv.to_record();
            let back = Move::from_record(&rec).unwrap();
            assert_eq!(set.index_of(&back), Some(e.index));
        }
        let rec = tau().to_record();
        assert_eq!(rec.images, vec!["aB", "b"]);
        assert_eq!(rec.multiplier.as_deref(), Some("B"));
    }
}
