//! Finite-depth weight tables standing in for geodesic currents, and filling certificates.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsmc::FsmcError;
use crate::graph::{GammaChain, GraphError, MarkedGraph};
use crate::word::{reduced_words, Alphabet, CyclicWord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurrentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Chain(#[from] FsmcError),
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("depth {0} is too large for dense counting on this chart")]
    DepthTooLarge(usize),
    #[error("input path is not reduced, closed and cyclically reduced")]
    NotCyclicPath,
    #[error("tables live on different charts")]
    ChartMismatch,
    #[error("table does not cover probe {0:?}")]
    ProbeMissing(String),
    #[error("table has zero length norm")]
    ZeroNorm,
    #[error("method {0} does not apply to this input")]
    MethodMismatch(String),
}

/// Weights on all reduced edge paths of length `1..=depth` of a marked graph.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    graph: MarkedGraph,
    depth: usize,
    weights: BTreeMap<Vec<usize>, BigRational>,
}

/// One line of the table dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightLine {
    pub word: String,
    pub weight: String,
}

fn all_paths(g: &MarkedGraph, depth: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
    (1..=depth).flat_map(move |k| g.reduced_paths(k))
}

impl WeightTable {
    pub fn from_fn(
        graph: &MarkedGraph,
        depth: usize,
        mut f: impl FnMut(&[usize]) -> BigRational,
    ) -> Result<Self, CurrentError> {
        if depth == 0 {
            return Err(CurrentError::ZeroDepth);
        }
        let weights = all_paths(graph, depth).map(|p| {
            let w = f(&p);
            (p, w)
        });
        Ok(WeightTable {
            graph: graph.clone(),
            depth,
            weights: weights.collect(),
        })
    }

    pub fn graph(&self) -> &MarkedGraph {
        &self.graph
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn weight(&self, path: &[usize]) -> Option<&BigRational> {
        self.weights.get(path)
    }

    /// Weight of a word on a rose chart, or of a named path.
    pub fn weight_of(&self, name: &str) -> Result<Option<&BigRational>, CurrentError> {
        Ok(self.weight(&self.graph.parse_path(name)?))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &BigRational)> {
        self.weights.iter()
    }

    pub fn scale(&self, s: &BigRational) -> WeightTable {
        WeightTable {
            graph: self.graph.clone(),
            depth: self.depth,
            weights: self.weights.iter().map(|(k, v)| (k.clone(), v * s)).collect(),
        }
    }

    /// Half the sum of all depth-1 weights.
    pub fn length_norm(&self) -> BigRational {
        let total = self
            .weights
            .iter()
            .filter(|(k, _)| k.len() == 1)
            .fold(BigRational::zero(), |acc, (_, v)| acc + v);
        total / BigRational::from_integer(BigInt::from(2))
    }

    /// Paths whose weight differs from that of their inverse.
    pub fn flip_violations(&self) -> Vec<String> {
        self.weights
            .iter()
            .filter(|(k, v)| self.weights.get(&self.graph.inverse_path(k)) != Some(*v))
            .map(|(k, _)| self.graph.path_name(k))
            .collect()
    }

    /// Paths `v` with `|v| < depth` where `⟨v⟩ ≠ Σ⟨ve⟩` or `⟨v⟩ ≠ Σ⟨e'v⟩`.
    pub fn switch_violations(&self) -> Vec<String> {
        let m = self.graph.edge_count();
        let mut out = Vec::new();
        for (v, w) in self.weights.iter().filter(|(k, _)| k.len() < self.depth) {
            let last = *v.last().unwrap();
            let first = v[0];
            let mut right = BigRational::zero();
            let mut left = BigRational::zero();
            for e in 0..m {
                if self.graph.follows(last, e) {
                    let mut x = v.clone();
                    x.push(e);
                    right += &self.weights[&x];
                }
                if self.graph.follows(e, first) {
                    let mut x = vec![e];
                    x.extend_from_slice(v);
                    left += &self.weights[&x];
                }
            }
            if right != *w || left != *w {
                out.push(self.graph.path_name(v));
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.weights.values().all(|w| !w.is_negative())
            && self.flip_violations().is_empty()
            && self.switch_violations().is_empty()
    }

    pub fn lines(&self) -> Vec<WeightLine> {
        self.weights
            .iter()
            .map(|(k, v)| WeightLine {
                word: self.graph.path_name(k),
                weight: v.to_string(),
            })
            .collect()
    }

    /// JSON-lines dump.
    pub fn to_jsonl(&self) -> String {
        self.lines()
            .iter()
            .map(|l| serde_json::to_string(l).expect("plain strings serialize") + "\n")
            .collect()
    }
}

/// Counting table of a reduced, closed, cyclically reduced edge path:
/// `⟨v⟩` counts cyclic occurrences of `v` and of `v^{-1}`.
pub fn counting_current_path(g: &MarkedGraph, path: &[usize], depth: usize) -> Result<WeightTable, CurrentError> {
    if depth == 0 {
        return Err(CurrentError::ZeroDepth);
    }
    let n = path.len();
    if n == 0 || !g.is_reduced_path(path) || !g.is_closed(path) || !g.follows(path[n - 1], path[0]) {
        return Err(CurrentError::NotCyclicPath);
    }
    let m = g.edge_count();
    if (m as u128).checked_pow(depth as u32).is_none_or(|c| c > 1 << 26) {
        return Err(CurrentError::DepthTooLarge(depth));
    }
    let mut counts: Vec<Vec<u64>> = Vec::with_capacity(depth);
    for len in 1..=depth {
        let mut table = vec![0u64; (m as u128).pow(len as u32) as usize];
        for i in 0..n {
            let code = (0..len).fold(0usize, |acc, j| acc * m + path[(i + j) % n]);
            table[code] += 1;
        }
        counts.push(table);
    }
    let code = |p: &[usize]| p.iter().fold(0usize, |acc, &e| acc * m + e);
    WeightTable::from_fn(g, depth, |p| {
        let fwd = counts[p.len() - 1][code(p)];
        let bwd = counts[p.len() - 1][code(&g.inverse_path(p))];
        BigRational::from_integer(BigInt::from(fwd + bwd))
    })
}

/// Counting table of a class on the `rank`-rose.
pub fn counting_current(c: &CyclicWord, rank: usize, depth: usize) -> Result<WeightTable, CurrentError> {
    let g = MarkedGraph::rose(rank)?;
    let path: Vec<usize> = c.letters().iter().map(|l| l.code() as usize).collect();
    if path.iter().any(|&e| e >= g.edge_count()) {
        return Err(CurrentError::NotCyclicPath);
    }
    counting_current_path(&g, &path, depth)
}

/// `⟨v⟩ = 1/(N(2N−1)^{|v|−1})` on the `N`-rose.
pub fn uniform_current(rank: usize, depth: usize) -> Result<WeightTable, CurrentError> {
    let g = MarkedGraph::rose(rank)?;
    let n = BigInt::from(rank);
    let q = BigInt::from(2 * rank - 1);
    WeightTable::from_fn(&g, depth, |p| {
        BigRational::new(BigInt::one(), &n * num_traits::pow(q.clone(), p.len() - 1))
    })
}

/// `⟨v⟩ = μ₀[k](v) + μ₀[k](v^{-1})`, zero on paths leaving the state set.
pub fn characteristic_current(gc: &GammaChain, depth: usize) -> Result<WeightTable, CurrentError> {
    let st = gc.chain.stationary()?;
    let mu = |p: &[usize]| -> Result<BigRational, FsmcError> {
        match gc.states_of(p) {
            Some(states) => gc.chain.mu0_k(&st, &states),
            None => Ok(BigRational::zero()),
        }
    };
    let mut err = None;
    let table = WeightTable::from_fn(&gc.graph, depth, |p| match (mu(p), mu(&gc.graph.inverse_path(p))) {
        (Ok(a), Ok(b)) => a + b,
        (Err(e), _) | (_, Err(e)) => {
            err = Some(e);
            BigRational::zero()
        }
    })?;
    match err {
        Some(e) => Err(e.into()),
        None => Ok(table),
    }
}

/// All reduced paths of length `1..=depth`.
pub fn default_probes(g: &MarkedGraph, depth: usize) -> Vec<Vec<usize>> {
    all_paths(g, depth).collect()
}

/// `max_{v ∈ probes} |⟨v,t1⟩/‖t1‖ − ⟨v,t2⟩/‖t2‖|`, exactly.
pub fn projective_distance_exact(
    t1: &WeightTable,
    t2: &WeightTable,
    probes: &[Vec<usize>],
) -> Result<BigRational, CurrentError> {
    if t1.graph != t2.graph {
        return Err(CurrentError::ChartMismatch);
    }
    let (n1, n2) = (t1.length_norm(), t2.length_norm());
    if n1.is_zero() || n2.is_zero() {
        return Err(CurrentError::ZeroNorm);
    }
    let mut best = BigRational::zero();
    for v in probes {
        let missing = || CurrentError::ProbeMissing(t1.graph.path_name(v));
        let a = t1.weight(v).ok_or_else(missing)?;
        let b = t2.weight(v).ok_or_else(missing)?;
        let d = (a / &n1 - b / &n2).abs();
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

pub fn projective_distance(t1: &WeightTable, t2: &WeightTable, probes: &[Vec<usize>]) -> Result<f64, CurrentError> {
    Ok(projective_distance_exact(t1, t2, probes)?.to_f64().unwrap_or(f64::NAN))
}

/// How a filling claim is supported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    /// Positive weight on every reduced path up to the given depth.
    FullSupportDepth(usize),
    /// Every reduced length-3 word occurs cyclically in the word or its inverse.
    ThreeSubword,
    /// Positive weights on powers of paths for `a_i` and `a_i a_j` up to `power`.
    BasisPairs { power: usize },
    /// A three-subword word `z` with `⟨z^n⟩ > 0` up to `power`.
    WordPower { word: String, power: usize },
    /// Structural condition of the given case on a Γ-based chain.
    FsmcXF(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordWitness {
    pub word: String,
    /// Start position in the canonical rotation of the word (or of its inverse).
    pub position: usize,
    pub inverted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evidence {
    Subwords(Vec<SubwordWitness>),
    /// `(path, weight)` pairs, all positive.
    Weights(Vec<(Vec<usize>, String)>),
    /// Positive transitions `(e, e')` as edge indices.
    Transitions(Vec<(usize, usize)>),
    /// Closed paths whose cyclic transition products are positive, with their classes.
    Cycles(Vec<(Vec<usize>, String)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FillingCertificate {
    pub kind: CertificateKind,
    /// True when the evidence implies filling; false for depth-bounded evidence.
    pub conclusive: bool,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FillingVerdict {
    Certified(FillingCertificate),
    Inconclusive(String),
}

impl FillingVerdict {
    pub fn certificate(&self) -> Option<&FillingCertificate> {
        match self {
            FillingVerdict::Certified(c) => Some(c),
            FillingVerdict::Inconclusive(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FillingInput<'a> {
    Word(&'a CyclicWord),
    Chain(&'a GammaChain),
    Table(&'a WeightTable),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FillingMethod {
    ThreeSubword,
    FullSupportDepth,
    BasisPairs,
    WordPower(CyclicWord),
    /// Tries the cases in order; case 3 needs a candidate closed path.
    FsmcXF {
        case3_path: Option<Vec<usize>>,
    },
}

fn three_subword_evidence(c: &CyclicWord) -> Result<Vec<SubwordWitness>, String> {
    let n = c.len();
    if n < 3 {
        return Err("word shorter than 3".into());
    }
    let rank = c.min_rank();
    let alphabet = Alphabet::new(rank).map_err(|e| e.to_string())?;
    let forward = c.letters();
    let inverse = c.inverse();
    let mut out = Vec::new();
    for v in reduced_words(alphabet, 3) {
        let find =
            |cycle: &[crate::word::Letter]| (0..n).find(|&p| (0..3).all(|j| cycle[(p + j) % n] == v.letters()[j]));
        let hit = find(forward)
            .map(|p| (p, false))
            .or_else(|| find(inverse.letters()).map(|p| (p, true)));
        match hit {
            Some((position, inverted)) => out.push(SubwordWitness {
                word: v.to_string(),
                position,
                inverted,
            }),
            None => return Err(format!("{v} does not occur")),
        }
    }
    Ok(out)
}

/// Closed reduced cyclically reduced path of length at most `max_len`
/// representing `target`, subject to `allowed`.
///
/// Letter edges must spell a rotation of `target` in order, so only tree
/// edges branch freely.
pub fn find_cycle(
    g: &MarkedGraph,
    target: &CyclicWord,
    max_len: usize,
    allowed: &dyn Fn(&[usize]) -> bool,
) -> Option<Vec<usize>> {
    struct Search<'a> {
        g: &'a MarkedGraph,
        target: &'a CyclicWord,
        max_len: usize,
        allowed: &'a dyn Fn(&[usize]) -> bool,
        rotation: usize,
    }
    impl Search<'_> {
        fn fits(&self, e: usize, letters: usize) -> Option<usize> {
            let n = self.target.len();
            match self.g.letter(e) {
                None => Some(letters),
                Some(l) if letters < n && l == self.target.letters()[(self.rotation + letters) % n] => {
                    Some(letters + 1)
                }
                Some(_) => None,
            }
        }

        fn dfs(&self, path: &mut Vec<usize>, letters: usize) -> bool {
            let (first, last) = (path[0], *path.last().unwrap());
            if letters == self.target.len()
                && self.g.follows(last, first)
                && self.g.path_to_class(path).ok().as_ref() == Some(self.target)
                && (self.allowed)(path)
            {
                return true;
            }
            if path.len() == self.max_len {
                return false;
            }
            for e in 0..self.g.edge_count() {
                if !self.g.follows(last, e) {
                    continue;
                }
                if let Some(next) = self.fits(e, letters) {
                    path.push(e);
                    if self.dfs(path, next) {
                        return true;
                    }
                    path.pop();
                }
            }
            false
        }
    }
    for rotation in 0..target.len() {
        let search = Search {
            g,
            target,
            max_len,
            allowed,
            rotation,
        };
        for start in 0..g.edge_count() {
            if let Some(letters) = search.fits(start, 0) {
                let mut path = vec![start];
                if search.dfs(&mut path, letters) {
                    return Some(path);
                }
            }
        }
    }
    None
}

fn cycle_budget(g: &MarkedGraph, target: &CyclicWord) -> usize {
    (target.len() + 1) * g.vertex_count().max(1) + target.len()
}

/// Target classes `a_i` and `a_i a_j` (`i < j`).
fn basis_targets(rank: usize) -> Vec<CyclicWord> {
    let letter = |i: usize| crate::word::Letter::new(i, false);
    let mut out: Vec<CyclicWord> = (1..=rank)
        .map(|i| CyclicWord::from_letters(&[letter(i)]).unwrap())
        .collect();
    for i in 1..=rank {
        for j in i + 1..=rank {
            out.push(CyclicWord::from_letters(&[letter(i), letter(j)]).unwrap());
        }
    }
    out
}

type WeightEvidence = Vec<(Vec<usize>, String)>;

fn power_evidence(t: &WeightTable, cycle: &[usize]) -> Result<(usize, WeightEvidence), String> {
    let power = t.depth() / cycle.len();
    if power == 0 {
        return Err(format!(
            "path {} is longer than the table depth",
            t.graph().path_name(cycle)
        ));
    }
    let mut out = Vec::new();
    for k in 1..=power {
        let p: Vec<usize> = cycle.iter().copied().cycle().take(k * cycle.len()).collect();
        match t.weight(&p) {
            Some(w) if w.is_positive() => out.push((p, w.to_string())),
            _ => return Err(format!("weight of {} is not positive", t.graph().path_name(&p))),
        }
    }
    Ok((power, out))
}

fn certify_table(t: &WeightTable, method: &FillingMethod) -> Result<FillingVerdict, CurrentError> {
    let g = t.graph();
    let verdict = match method {
        FillingMethod::FullSupportDepth => match t.iter().find(|(_, w)| !w.is_positive()) {
            Some((p, _)) => FillingVerdict::Inconclusive(format!("zero weight on {}", g.path_name(p))),
            None => FillingVerdict::Certified(FillingCertificate {
                kind: CertificateKind::FullSupportDepth(t.depth()),
                conclusive: false,
                evidence: Evidence::Weights(t.iter().map(|(p, w)| (p.clone(), w.to_string())).collect()),
            }),
        },
        FillingMethod::BasisPairs => {
            let mut all = Vec::new();
            let mut min_power = usize::MAX;
            for target in basis_targets(g.rank()) {
                let Some(cycle) = find_cycle(g, &target, cycle_budget(g, &target), &|_| true) else {
                    return Ok(FillingVerdict::Inconclusive(format!("no closed path for {target}")));
                };
                match power_evidence(t, &cycle) {
                    Ok((p, ev)) => {
                        min_power = min_power.min(p);
                        all.extend(ev);
                    }
                    Err(why) => return Ok(FillingVerdict::Inconclusive(why)),
                }
            }
            FillingVerdict::Certified(FillingCertificate {
                kind: CertificateKind::BasisPairs { power: min_power },
                conclusive: false,
                evidence: Evidence::Weights(all),
            })
        }
        FillingMethod::WordPower(z) => {
            if let Err(why) = three_subword_evidence(z) {
                return Ok(FillingVerdict::Inconclusive(format!(
                    "{z} is not certified filling: {why}"
                )));
            }
            let Some(cycle) = find_cycle(g, z, cycle_budget(g, z), &|_| true) else {
                return Ok(FillingVerdict::Inconclusive(format!("no closed path for {z}")));
            };
            match power_evidence(t, &cycle) {
                Ok((power, ev)) => FillingVerdict::Certified(FillingCertificate {
                    kind: CertificateKind::WordPower {
                        word: z.to_string(),
                        power,
                    },
                    conclusive: false,
                    evidence: Evidence::Weights(ev),
                }),
                Err(why) => FillingVerdict::Inconclusive(why),
            }
        }
        other => return Err(CurrentError::MethodMismatch(format!("{other:?} on a weight table"))),
    };
    Ok(verdict)
}

fn reduced_pairs(g: &MarkedGraph) -> Vec<(usize, usize)> {
    let m = g.edge_count();
    (0..m)
        .flat_map(|e| (0..m).filter(move |&f| g.follows(e, f)).map(move |f| (e, f)))
        .collect()
}

fn positive_letter_pairs(g: &MarkedGraph) -> Vec<(usize, usize)> {
    let pos: Vec<usize> = (0..g.rank()).map(|i| 2 * i).collect();
    pos.iter().flat_map(|&e| pos.iter().map(move |&f| (e, f))).collect()
}

fn transition_positive(gc: &GammaChain, e: usize, f: usize) -> bool {
    match (gc.edge_state(e), gc.edge_state(f)) {
        (Some(s), Some(t)) => gc.chain.p(s, t).is_positive(),
        _ => false,
    }
}

fn certify_chain(gc: &GammaChain, case3_path: Option<&[usize]>) -> FillingVerdict {
    let g = &gc.graph;
    let all_states = (0..g.edge_count()).all(|e| gc.edge_state(e).is_some());
    let pairs = reduced_pairs(g);
    if all_states && pairs.iter().all(|&(e, f)| transition_positive(gc, e, f)) {
        return FillingVerdict::Certified(FillingCertificate {
            kind: CertificateKind::FsmcXF(1),
            conclusive: true,
            evidence: Evidence::Transitions(pairs),
        });
    }
    if g.is_rose() {
        let pairs = positive_letter_pairs(g);
        if pairs.iter().all(|&(e, f)| transition_positive(gc, e, f)) {
            return FillingVerdict::Certified(FillingCertificate {
                kind: CertificateKind::FsmcXF(2),
                conclusive: true,
                evidence: Evidence::Transitions(pairs),
            });
        }
    }
    if let Some(w) = case3_path {
        if g.is_reduced_path(w) && gc.cyclic_path_positive(w) {
            if let Ok(c) = g.path_to_class(w) {
                if three_subword_evidence(&c).is_ok() {
                    return FillingVerdict::Certified(FillingCertificate {
                        kind: CertificateKind::FsmcXF(3),
                        conclusive: true,
                        evidence: Evidence::Cycles(vec![(w.to_vec(), c.to_string())]),
                    });
                }
            }
        }
    }
    let mut cycles = Vec::new();
    for target in basis_targets(g.rank()) {
        match find_cycle(g, &target, cycle_budget(g, &target), &|p| gc.cyclic_path_positive(p)) {
            Some(p) => cycles.push((p, target.to_string())),
            None => return FillingVerdict::Inconclusive(format!("no chain-feasible closed path for {target}")),
        }
    }
    FillingVerdict::Certified(FillingCertificate {
        kind: CertificateKind::FsmcXF(4),
        conclusive: true,
        evidence: Evidence::Cycles(cycles),
    })
}

/// Attempts to certify that the input is filling with the given method.
pub fn certify_filling(input: FillingInput<'_>, method: &FillingMethod) -> Result<FillingVerdict, CurrentError> {
    match (input, method) {
        (FillingInput::Word(c), FillingMethod::ThreeSubword) => Ok(match three_subword_evidence(c) {
            Ok(ev) => FillingVerdict::Certified(FillingCertificate {
                kind: CertificateKind::ThreeSubword,
                conclusive: true,
                evidence: Evidence::Subwords(ev),
            }),
            Err(why) => FillingVerdict::Inconclusive(why),
        }),
        (FillingInput::Chain(gc), FillingMethod::FsmcXF { case3_path }) => Ok(certify_chain(gc, case3_path.as_deref())),
        (FillingInput::Table(t), m) => certify_table(t, m),
        (_, m) => Err(CurrentError::MethodMismatch(format!("{m:?}"))),
    }
}

/// Re-checks a certificate's evidence against its input.
pub fn verify_certificate(cert: &FillingCertificate, input: FillingInput<'_>) -> bool {
    match (&cert.kind, &cert.evidence, input) {
        (CertificateKind::ThreeSubword, Evidence::Subwords(ws), FillingInput::Word(c)) => {
            let n = c.len();
            let inv = c.inverse();
            let Ok(alphabet) = Alphabet::new(c.min_rank()) else {
                return false;
            };
            let needed: std::collections::BTreeSet<String> =
                reduced_words(alphabet, 3).iter().map(|w| w.to_string()).collect();
            let covered: std::collections::BTreeSet<String> = ws.iter().map(|w| w.word.clone()).collect();
            needed == covered
                && ws.iter().all(|w| {
                    let cycle = if w.inverted { inv.letters() } else { c.letters() };
                    let s: String = (0..3).map(|j| cycle[(w.position + j) % n].to_char()).collect();
                    n >= 3 && s == w.word
                })
        }
        (CertificateKind::FsmcXF(case), Evidence::Transitions(pairs), FillingInput::Chain(gc)) => {
            let g = &gc.graph;
            let required = match case {
                1 => {
                    if !(0..g.edge_count()).all(|e| gc.edge_state(e).is_some()) {
                        return false;
                    }
                    reduced_pairs(g)
                }
                2 if g.is_rose() => positive_letter_pairs(g),
                _ => return false,
            };
            *pairs == required && pairs.iter().all(|&(e, f)| transition_positive(gc, e, f))
        }
        (CertificateKind::FsmcXF(case @ (3 | 4)), Evidence::Cycles(cycles), FillingInput::Chain(gc)) => {
            let g = &gc.graph;
            let classes_ok = cycles.iter().all(|(p, class)| {
                g.is_reduced_path(p)
                    && g.follows(*p.last().unwrap(), p[0])
                    && gc.cyclic_path_positive(p)
                    && g.path_to_class(p).map(|c| c.to_string()).as_deref() == Ok(class.as_str())
            });
            let targets_ok = match case {
                3 => {
                    cycles.len() == 1
                        && g.path_to_class(&cycles[0].0)
                            .is_ok_and(|c| three_subword_evidence(&c).is_ok())
                }
                _ => {
                    let want: Vec<String> = basis_targets(g.rank()).iter().map(|c| c.to_string()).collect();
                    let have: Vec<String> = cycles.iter().map(|(_, c)| c.clone()).collect();
                    want == have
                }
            };
            classes_ok && targets_ok
        }
        (CertificateKind::FullSupportDepth(d), Evidence::Weights(ws), FillingInput::Table(t)) => {
            *d <= t.depth()
                && default_probes(t.graph(), *d)
                    .iter()
                    .all(|p| t.weight(p).is_some_and(|w| w.is_positive()))
                && !ws.is_empty()
        }
        (
            CertificateKind::BasisPairs { .. } | CertificateKind::WordPower { .. },
            Evidence::Weights(ws),
            FillingInput::Table(t),
        ) => !ws.is_empty() && ws.iter().all(|(p, _)| t.weight(p).is_some_and(|w| w.is_positive())),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Preset;

    fn r(p: i64, q: i64) -> BigRational {
        crate::fsmc::rat(p, q)
    }

    #[test]
    fn counting_small_examples() {
        let t = counting_current(&CyclicWord::parse("ab").unwrap(), 2, 1).unwrap();
        for l in ["a", "A", "b", "B"] {
            assert_eq!(t.weight_of(l).unwrap(), Some(&r(1, 1)));
        }
        assert_eq!(t.length_norm(), r(2, 1));
        let t = counting_current(&CyclicWord::parse("aa").unwrap(), 2, 2).unwrap();
        assert_eq!(t.weight_of("aa").unwrap(), Some(&r(2, 1)));
        assert_eq!(t.weight_of("AA").unwrap(), Some(&r(2, 1)));
        assert_eq!(t.length_norm(), r(2, 1));
        let t = counting_current(&CyclicWord::parse("abAB").unwrap(), 2, 3).unwrap();
        assert_eq!(t.length_norm(), r(4, 1));
        assert!(t.is_valid());
    }

    #[test]
    fn uniform_values() {
        let t = uniform_current(2, 3).unwrap();
        assert_eq!(t.weight_of("a").unwrap(), Some(&r(1, 2)));
        assert_eq!(t.weight_of("ab").unwrap(), Some(&r(1, 6)));
        assert_eq!(t.weight_of("abB").unwrap(), None);
        assert_eq!(t.weight_of("abA").unwrap(), Some(&r(1, 18)));
        assert_eq!(t.length_norm(), r(1, 1));
        assert!(t.is_valid());
        assert_eq!(t.scale(&r(3, 1)).length_norm(), r(3, 1));
    }

    #[test]
    fn positive_chain_support() {
        let gc = Preset::RosePositive.build(2).unwrap();
        let t = characteristic_current(&gc, 3).unwrap();
        assert!(t.is_valid());
        assert_eq!(t.length_norm(), r(1, 1));
        for (p, w) in t.iter() {
            let positive = p.iter().all(|&e| e % 2 == 0) || p.iter().all(|&e| e % 2 == 1);
            assert_eq!(w.is_positive(), positive, "{}", t.graph().path_name(p));
        }
    }

    #[test]
    fn distance_basics() {
        let u = uniform_current(2, 3).unwrap();
        let probes = default_probes(u.graph(), 3);
        assert_eq!(projective_distance(&u, &u, &probes).unwrap(), 0.0);
        assert_eq!(projective_distance(&u, &u.scale(&r(2, 1)), &probes).unwrap(), 0.0);
        let c = counting_current(&CyclicWord::parse("ab").unwrap(), 2, 2).unwrap();
        assert!(matches!(
            projective_distance(&u, &c, &probes),
            Err(CurrentError::ProbeMissing(_))
        ));
    }

    #[test]
    fn chain_certificates() {
        let cases = [
            (Preset::RoseUniform, 1),
            (Preset::RosePositive, 2),
            (Preset::Lollipop, 4),
            (Preset::Theta, 1),
        ];
        for (p, case) in cases {
            let gc = p.build(2).unwrap();
            let v = certify_filling(FillingInput::Chain(&gc), &FillingMethod::FsmcXF { case3_path: None }).unwrap();
            let cert = v.certificate().unwrap_or_else(|| panic!("{p:?}: {v:?}"));
            assert_eq!(cert.kind, CertificateKind::FsmcXF(case), "{p:?}");
            assert!(cert.conclusive);
            assert!(verify_certificate(cert, FillingInput::Chain(&gc)));
        }
        let gc = Preset::RoseUniform.build(2).unwrap();
        assert!(certify_filling(FillingInput::Chain(&gc), &FillingMethod::ThreeSubword).is_err());
    }

    #[test]
    fn table_certificates() {
        let u = uniform_current(2, 4).unwrap();
        let cert = certify_filling(FillingInput::Table(&u), &FillingMethod::FullSupportDepth).unwrap();
        let cert = cert.certificate().unwrap();
        assert_eq!(cert.kind, CertificateKind::FullSupportDepth(4));
        assert!(!cert.conclusive);
        assert!(verify_certificate(cert, FillingInput::Table(&u)));
        let bp = certify_filling(FillingInput::Table(&u), &FillingMethod::BasisPairs).unwrap();
        assert_eq!(bp.certificate().unwrap().kind, CertificateKind::BasisPairs { power: 2 });
        let c = counting_current(&CyclicWord::parse("aab").unwrap(), 2, 3).unwrap();
        let v = certify_filling(FillingInput::Table(&c), &FillingMethod::FullSupportDepth).unwrap();
        assert!(matches!(v, FillingVerdict::Inconclusive(_)));
    }
}
