//! Random word samplers and deterministic seed derivation.

use std::collections::HashMap;

use num_rational::BigRational;
use rand::distributions::{Distribution, WeightedError, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fsmc::ChainSampler;
use crate::graph::{build_closing_system, ClosingSystem, GammaChain, GraphError};
use crate::word::{push_reduced, Alphabet, CyclicWord, Letter, Word};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trial, a pure function of its coordinates.
pub fn derive_seed(master: u64, experiment: &str, n: u64, trial: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in experiment.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    [h, n, trial]
        .into_iter()
        .fold(splitmix(master), |acc, x| splitmix(acc ^ splitmix(x)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_letter(alphabet: Alphabet, rng: &mut impl Rng) -> Letter {
    Letter::from_code(rng.gen_range(0..alphabet.size()) as u8)
}

/// Uniform element of the sphere of radius `n` in `F_N`: a non-backtracking
/// walk with `1/(2N)` first step and `1/(2N-1)` afterwards.
pub fn uniform_nb(rank: usize, n: usize, rng: &mut impl Rng) -> Word {
    let alphabet = Alphabet::new(rank).expect("rank in 2..=26");
    let mut letters = Vec::with_capacity(n);
    if n > 0 {
        letters.push(random_letter(alphabet, rng));
    }
    while letters.len() < n {
        let prev = letters[letters.len() - 1].inverse();
        // draw from the 2N-1 letters other than prev
        let mut code = rng.gen_range(0..alphabet.size() - 1) as u8;
        if code >= prev.code() {
            code += 1;
        }
        letters.push(Letter::from_code(code));
    }
    Word::from_reduced_unchecked(letters)
}

/// Uniform cyclically reduced word of length `n >= 1` (by rejection), as a class.
pub fn uniform_cyclic_word(rank: usize, n: usize, rng: &mut impl Rng) -> CyclicWord {
    assert!(n >= 1, "length must be positive");
    loop {
        let w = uniform_nb(rank, n, rng);
        if w.is_cyclically_reduced() {
            return CyclicWord::from_word(&w).expect("nonempty");
        }
    }
}

/// I.i.d. letters from a finite distribution, freely reduced.
#[derive(Debug, Clone)]
pub struct LetterDistribution {
    letters: Vec<Letter>,
    index: WeightedIndex<f64>,
}

impl LetterDistribution {
    pub fn new(weights: &[(Letter, f64)]) -> Result<Self, WeightedError> {
        Ok(LetterDistribution {
            letters: weights.iter().map(|(l, _)| *l).collect(),
            index: WeightedIndex::new(weights.iter().map(|(_, w)| *w))?,
        })
    }

    /// `p(a) = 1/10`, `p(b) = 9/10`.
    pub fn biased_positive() -> Self {
        Self::new(&[(Letter::new(1, false), 0.1), (Letter::new(2, false), 0.9)]).expect("valid weights")
    }

    pub fn is_positive(&self) -> bool {
        self.letters.iter().all(|l| !l.is_inverse())
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Word {
        let mut stack = Vec::with_capacity(n);
        for _ in 0..n {
            push_reduced(&mut stack, self.letters[self.index.sample(rng)]);
        }
        Word::from_reduced_unchecked(stack)
    }
}

/// Random walk on `F_N` driven by a finitely supported step measure.
#[derive(Debug, Clone)]
pub struct GroupWalk {
    support: Vec<Word>,
    index: WeightedIndex<f64>,
}

impl GroupWalk {
    pub fn new(support: &[(Word, f64)]) -> Result<Self, WeightedError> {
        Ok(GroupWalk {
            support: support.iter().map(|(w, _)| w.clone()).collect(),
            index: WeightedIndex::new(support.iter().map(|(_, p)| *p))?,
        })
    }

    /// Uniform measure on the `2N` letters (a simple, backtracking walk).
    pub fn simple(rank: usize) -> Self {
        let alphabet = Alphabet::new(rank).expect("rank in 2..=26");
        let support: Vec<(Word, f64)> = alphabet
            .letters()
            .map(|l| (Word::from_reduced_unchecked(vec![l]), 1.0))
            .collect();
        Self::new(&support).expect("valid weights")
    }

    /// Longest support element; `|W_n| <= C n`.
    pub fn max_step_len(&self) -> usize {
        self.support.iter().map(Word::len).max().unwrap_or(0)
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Word {
        self.sample_prefixes(&[n], rng).pop().expect("one checkpoint")
    }

    /// `W_n` for each `n` in `checkpoints` (non-decreasing) along one trajectory.
    pub fn sample_prefixes(&self, checkpoints: &[usize], rng: &mut impl Rng) -> Vec<Word> {
        let mut stack = Vec::new();
        let mut steps = 0;
        let mut out = Vec::with_capacity(checkpoints.len());
        for &n in checkpoints {
            while steps < n {
                for &l in self.support[self.index.sample(rng)].letters() {
                    push_reduced(&mut stack, l);
                }
                steps += 1;
            }
            out.push(Word::from_reduced_unchecked(stack.clone()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosingMode {
    Hat,
    Breve,
}

/// One output of a chain-directed sampler.
#[derive(Debug, Clone)]
pub struct DirectedSample {
    /// The raw non-backtracking edge path.
    pub raw: Vec<usize>,
    /// Its closing, a reduced cyclically reduced closed path.
    pub closed: Vec<usize>,
    pub class: CyclicWord,
}

/// Chain-directed non-backtracking walk on a marked graph with hat or breve closing.
#[derive(Debug, Clone)]
pub struct DirectedSampler {
    pub gamma: GammaChain,
    pub closing: ClosingSystem,
    pub mode: ClosingMode,
    sampler: ChainSampler,
}

impl DirectedSampler {
    /// `mu` defaults to the stationary distribution.
    pub fn new(gamma: GammaChain, mu: Option<Vec<BigRational>>, mode: ClosingMode) -> Result<Self, GraphError> {
        let mu = match mu {
            Some(m) => m,
            None => gamma.chain.stationary()?.mu0,
        };
        let sampler = ChainSampler::new(&gamma.chain, &mu)?;
        let closing = build_closing_system(&gamma.graph)?;
        Ok(DirectedSampler {
            gamma,
            closing,
            mode,
            sampler,
        })
    }

    /// Chain trajectory of `n` states.
    pub fn states(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        self.sampler.sample(n, rng)
    }

    /// Edge path of length `n`, checked to be non-backtracking step by step.
    pub fn raw_path(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>, GraphError> {
        let mut path = Vec::with_capacity(n);
        for s in self.sampler.sample(n, rng) {
            let e = self.gamma.state_edge(s);
            if let Some(&prev) = path.last() {
                if !self.gamma.graph.follows(prev, e) {
                    return Err(GraphError::NotReduced);
                }
            }
            path.push(e);
        }
        Ok(path)
    }

    pub fn close(&self, path: &[usize]) -> Result<Vec<usize>, GraphError> {
        match self.mode {
            ClosingMode::Hat => self.closing.hat(&self.gamma.graph, path),
            ClosingMode::Breve => self.closing.breve(&self.gamma.graph, path),
        }
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<DirectedSample, GraphError> {
        let raw = self.raw_path(n, rng)?;
        let closed = self.close(&raw)?;
        let class = self.gamma.graph.path_to_class(&closed)?;
        Ok(DirectedSample { raw, closed, class })
    }
}

/// Counts of every length-`k` window of `path` (linear, not wrapping).
pub fn block_counts(path: &[usize], k: usize) -> HashMap<Vec<usize>, usize> {
    let mut counts = HashMap::new();
    if k == 0 {
        return counts;
    }
    for w in path.windows(k) {
        *counts.entry(w.to_vec()).or_insert(0) += 1;
    }
    counts
}
