//! Letters, freely reduced words and conjugacy classes over a rank-N free basis.
//!
//! Letters are encoded as `2 * (i - 1) + s` where `s = 1` marks an inverse, so
//! the natural order of codes is `a_1 < a_1^-1 < a_2 < a_2^-1 < ...`. Text uses
//! `a..z` for generators and `A..Z` for their inverses.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest supported rank (one lowercase character per generator).
pub const MAX_RANK: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("invalid letter {0:?}: expected a..z or A..Z")]
    InvalidChar(char),
    #[error("rank {0} out of range 2..=26")]
    RankOutOfRange(usize),
    #[error("letter {letter} exceeds rank {rank}")]
    LetterOutOfRank { letter: Letter, rank: usize },
    #[error("word {0} is not cyclically reduced")]
    NotCyclicallyReduced(String),
    #[error("the trivial class has no cyclic representative")]
    Empty,
}

/// A free basis `{a_1, .., a_N}` with `2 <= N <= 26`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    rank: usize,
}

impl Alphabet {
    pub fn new(rank: usize) -> Result<Self, WordError> {
        if !(2..=MAX_RANK).contains(&rank) {
            return Err(WordError::RankOutOfRange(rank));
        }
        Ok(Self { rank })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of signed letters, `2N`.
    pub fn size(&self) -> usize {
        2 * self.rank
    }

    /// All signed letters in code order.
    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.size() as u8).map(Letter)
    }

    pub fn contains(&self, letter: Letter) -> bool {
        (letter.0 as usize) < self.size()
    }

    pub fn check(&self, letters: &[Letter]) -> Result<(), WordError> {
        match letters.iter().find(|l| !self.contains(**l)) {
            Some(&letter) => Err(WordError::LetterOutOfRank {
                letter,
                rank: self.rank,
            }),
            None => Ok(()),
        }
    }
}

/// A signed generator `a_i^{±1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u8);

impl Letter {
    /// `index` is 1-based.
    pub fn new(index: usize, inverse: bool) -> Self {
        assert!((1..=MAX_RANK).contains(&index), "letter index {index}");
        Letter((2 * (index - 1) + inverse as usize) as u8)
    }

    pub fn from_code(code: u8) -> Self {
        assert!((code as usize) < 2 * MAX_RANK, "letter code {code}");
        Letter(code)
    }

    pub fn code(self) -> u8 {
        self.0
    }

    /// 1-based generator index.
    pub fn index(self) -> usize {
        (self.0 / 2) as usize + 1
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }

    /// The positive letter of this generator pair.
    pub fn positive(self) -> Self {
        Letter(self.0 & !1)
    }

    pub fn to_char(self) -> char {
        let base = if self.is_inverse() { b'A' } else { b'a' };
        (base + self.0 / 2) as char
    }

    pub fn from_char(c: char) -> Result<Self, WordError> {
        match c {
            'a'..='z' => Ok(Letter(2 * (c as u8 - b'a'))),
            'A'..='Z' => Ok(Letter(2 * (c as u8 - b'A') + 1)),
            _ => Err(WordError::InvalidChar(c)),
        }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

pub fn parse_letters(s: &str) -> Result<Vec<Letter>, WordError> {
    s.chars().map(Letter::from_char).collect()
}

fn letters_to_string(letters: &[Letter]) -> String {
    letters.iter().map(|l| l.to_char()).collect()
}

/// Appends `letter` to a freely reduced stack, cancelling against the top.
#[inline]
pub(crate) fn push_reduced(stack: &mut Vec<Letter>, letter: Letter) {
    if stack.last() == Some(&letter.inverse()) {
        stack.pop();
    } else {
        stack.push(letter);
    }
}

/// A freely reduced word; the empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

/// Freely reduces an arbitrary letter sequence.
pub fn free_reduce(raw: &[Letter]) -> Word {
    let mut stack = Vec::with_capacity(raw.len());
    for &l in raw {
        push_reduced(&mut stack, l);
    }
    Word { letters: stack }
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Parses and freely reduces.
    pub fn parse(s: &str) -> Result<Self, WordError> {
        Ok(free_reduce(&parse_letters(s)?))
    }

    /// Wraps letters already known to be freely reduced.
    pub(crate) fn from_reduced_unchecked(letters: Vec<Letter>) -> Self {
        debug_assert!(is_freely_reduced(&letters));
        Word { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut stack = self.letters.clone();
        stack.reserve(other.len());
        for &l in &other.letters {
            push_reduced(&mut stack, l);
        }
        Word { letters: stack }
    }

    /// Smallest rank whose alphabet contains every letter (at least 2).
    pub fn min_rank(&self) -> usize {
        self.letters.iter().map(|l| l.index()).max().unwrap_or(0).max(2)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => self.letters.len() == 1 || f != l.inverse(),
            _ => false,
        }
    }
}

pub fn is_freely_reduced(letters: &[Letter]) -> bool {
    letters.windows(2).all(|p| p[0] != p[1].inverse())
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&letters_to_string(&self.letters))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({:?})", letters_to_string(&self.letters))
    }
}

impl FromStr for Word {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Word::parse(s)
    }
}

/// Start index of the lexicographically least rotation of `s`.
pub fn least_rotation<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    if n < 2 {
        return 0;
    }
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = &s[(i + k) % n];
        let b = &s[(j + k) % n];
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

/// A nontrivial conjugacy class, stored as its least cyclically reduced rotation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord {
    letters: Vec<Letter>,
}

/// Canonical rotation of a nonempty cyclically reduced sequence.
pub fn canonical_rotation(letters: &[Letter]) -> Result<CyclicWord, WordError> {
    if letters.is_empty() {
        return Err(WordError::Empty);
    }
    let n = letters.len();
    if !is_freely_reduced(letters) || (n > 1 && letters[0] == letters[n - 1].inverse()) {
        return Err(WordError::NotCyclicallyReduced(letters_to_string(letters)));
    }
    Ok(CyclicWord::rotated(letters))
}

impl CyclicWord {
    fn rotated(letters: &[Letter]) -> Self {
        let start = least_rotation(letters);
        let mut out = Vec::with_capacity(letters.len());
        out.extend_from_slice(&letters[start..]);
        out.extend_from_slice(&letters[..start]);
        CyclicWord { letters: out }
    }

    /// Canonicalizes a sequence the caller knows is cyclically reduced.
    pub(crate) fn from_cyclically_reduced(letters: &[Letter]) -> Self {
        debug_assert!(canonical_rotation(letters).is_ok());
        Self::rotated(letters)
    }

    /// Class of an arbitrary (not necessarily reduced) letter sequence.
    pub fn from_letters(raw: &[Letter]) -> Result<Self, WordError> {
        cyclic_reduce(&free_reduce(raw)).class.ok_or(WordError::Empty)
    }

    pub fn from_word(w: &Word) -> Result<Self, WordError> {
        cyclic_reduce(w).class.ok_or(WordError::Empty)
    }

    /// Parses any word literal and returns its conjugacy class.
    pub fn parse(s: &str) -> Result<Self, WordError> {
        Self::from_letters(&parse_letters(s)?)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Cyclic length `||w||`.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_word(&self) -> Word {
        Word::from_reduced_unchecked(self.letters.clone())
    }

    /// The class of the inverse element.
    pub fn inverse(&self) -> CyclicWord {
        let inv: Vec<Letter> = self.letters.iter().rev().map(|l| l.inverse()).collect();
        Self::rotated(&inv)
    }

    pub fn min_rank(&self) -> usize {
        self.letters.iter().map(|l| l.index()).max().unwrap_or(0).max(2)
    }

    /// FNV-1a hash of the canonical letters; stable across runs and platforms.
    pub fn stable_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for l in &self.letters {
            h ^= l.0 as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^ (self.letters.len() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&letters_to_string(&self.letters))
    }
}

impl fmt::Debug for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", letters_to_string(&self.letters))
    }
}

impl FromStr for CyclicWord {
    type Err = WordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CyclicWord::parse(s)
    }
}

/// Result of peeling conjugation layers off a freely reduced word:
/// `word = conjugator · core · conjugator^-1` holds exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicReduction {
    /// Canonical class of `core`; `None` when the word is the identity.
    pub class: Option<CyclicWord>,
    pub conjugator: Word,
    /// Cyclically reduced middle segment, in its original rotation.
    pub core: Word,
}

pub fn cyclic_reduce(w: &Word) -> CyclicReduction {
    let (start, end) = cyclic_core_bounds(w.letters());
    let core = &w.letters()[start..end];
    CyclicReduction {
        class: (!core.is_empty()).then(|| CyclicWord::rotated(core)),
        conjugator: Word::from_reduced_unchecked(w.letters()[..start].to_vec()),
        core: Word::from_reduced_unchecked(core.to_vec()),
    }
}

/// Bounds `[start, end)` of the cyclically reduced core of a freely reduced sequence.
#[inline]
pub(crate) fn cyclic_core_bounds(letters: &[Letter]) -> (usize, usize) {
    let (mut i, mut j) = (0, letters.len());
    while j > i + 1 && letters[i] == letters[j - 1].inverse() {
        i += 1;
        j -= 1;
    }
    (i, j)
}

/// Occurrences of `pattern` read forwards in the bi-infinite periodic word
/// with period `cycle`, counted over `cycle.len()` start positions.
pub fn cyclic_pattern_count<T: Eq>(pattern: &[T], cycle: &[T]) -> usize {
    let n = cycle.len();
    if pattern.is_empty() || n == 0 {
        return 0;
    }
    (0..n)
        .filter(|&start| pattern.iter().enumerate().all(|(j, x)| *x == cycle[(start + j) % n]))
        .count()
}

/// Forward occurrences of `v` in the cyclic word `w`.
pub fn occurrences_cyclic(v: &Word, w: &CyclicWord) -> usize {
    cyclic_pattern_count(v.letters(), w.letters())
}

/// Occurrences of `v` read forwards or backwards, i.e. of `v` or `v^-1`.
pub fn occurrences_symmetrized(v: &Word, w: &CyclicWord) -> usize {
    occurrences_cyclic(v, w) + occurrences_cyclic(&v.inverse(), w)
}

/// All freely reduced words of length exactly `k` in code-lexicographic order.
pub fn reduced_words(alphabet: Alphabet, k: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * (alphabet.size() - 1));
        for w in &out {
            for l in alphabet.letters() {
                if w.last() != Some(&l.inverse()) {
                    let mut v = w.clone();
                    v.push(l);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out.into_iter().map(Word::from_reduced_unchecked).collect()
}

/// All conjugacy classes of cyclic length `1..=max_len`, sorted by (length, letters).
pub fn all_classes(alphabet: Alphabet, max_len: usize) -> Vec<CyclicWord> {
    let mut out = std::collections::BTreeSet::new();
    for k in 1..=max_len {
        for w in reduced_words(alphabet, k) {
            if w.is_cyclically_reduced() {
                out.insert((k, CyclicWord::rotated(w.letters())));
            }
        }
    }
    out.into_iter().map(|(_, c)| c).collect()
}
