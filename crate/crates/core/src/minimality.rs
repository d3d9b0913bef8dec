//! Strict minimality, `(M, λ, ε)`-minimality detection and verification, and
//! Monte-Carlo estimation of the automorphic distortion spectrum.
//!
//! All threshold comparisons are exact: `λ` and `ε` are rationals and every
//! length-ratio test is an integer cross-multiplication.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algo::{self, check_rank, AlgoError, Witness};
use crate::moves::MoveSet;
use crate::walks;
use crate::word::CyclicWord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MinimalityError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("detector needs λ(1-ε)/(1+ε) > 1, got λ={lambda}, ε={epsilon}")]
    DetectorInequality { lambda: String, epsilon: String },
    #[error(transparent)]
    Algo(#[from] AlgoError),
    #[error("the sample stream is empty")]
    EmptyStream,
    #[error("radius must be at least 1")]
    ZeroRadius,
}

/// Parameters `(M, λ, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MleParams {
    pub m: usize,
    pub lambda: Ratio<i64>,
    pub epsilon: Ratio<i64>,
}

/// `a / b` compared against a rational, exactly.
fn ratio_ge(a: usize, b: usize, r: Ratio<i64>) -> bool {
    (a as i128) * (*r.denom() as i128) >= (*r.numer() as i128) * (b as i128)
}

fn ratio_le(a: usize, b: usize, r: Ratio<i64>) -> bool {
    (a as i128) * (*r.denom() as i128) <= (*r.numer() as i128) * (b as i128)
}

impl MleParams {
    /// Requires `M >= 1`, `λ > 1`, `0 < ε < 1` and `ε < λ - 1`.
    pub fn new(m: usize, lambda: Ratio<i64>, epsilon: Ratio<i64>) -> Result<Self, MinimalityError> {
        let one = Ratio::from_integer(1);
        let zero = Ratio::from_integer(0);
        if m < 1 {
            return Err(MinimalityError::Params("M must be at least 1".into()));
        }
        if lambda <= one {
            return Err(MinimalityError::Params(format!("λ={lambda} must exceed 1")));
        }
        if epsilon <= zero || epsilon >= one {
            return Err(MinimalityError::Params(format!("ε={epsilon} must lie in (0, 1)")));
        }
        if epsilon >= lambda - one {
            return Err(MinimalityError::Params(format!(
                "ε={epsilon} must be below λ-1={}",
                lambda - one
            )));
        }
        Ok(MleParams { m, lambda, epsilon })
    }

    /// Parses `"3/2"`-style or integer rationals.
    pub fn parse(m: usize, lambda: &str, epsilon: &str) -> Result<Self, MinimalityError> {
        let p = |s: &str| {
            s.trim()
                .parse::<Ratio<i64>>()
                .map_err(|e| MinimalityError::Params(format!("{s:?}: {e}")))
        };
        Self::new(m, p(lambda)?, p(epsilon)?)
    }

    pub fn satisfies_detector_inequality(&self) -> bool {
        let one = Ratio::from_integer(1);
        self.lambda * (one - self.epsilon) > one + self.epsilon
    }

    fn check_detector(&self) -> Result<(), MinimalityError> {
        if self.satisfies_detector_inequality() {
            Ok(())
        } else {
            Err(MinimalityError::DetectorInequality {
                lambda: self.lambda.to_string(),
                epsilon: self.epsilon.to_string(),
            })
        }
    }

    fn one_plus_eps(&self) -> Ratio<i64> {
        Ratio::from_integer(1) + self.epsilon
    }

    fn one_minus_eps(&self) -> Ratio<i64> {
        Ratio::from_integer(1) - self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Escapes are checked against single Whitehead moves.
    Mlew,
    /// Escapes are checked against the whole orbit (bounded-length ball).
    Mle,
}

/// A violated condition of the minimizing-set definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// Condition (1): more than `M` classes.
    TooMany { found: usize, m: usize },
    /// Condition (2): two classes in different orbits.
    DifferentOrbits { u: String, v: String },
    /// Condition (3): length ratio outside `[1-ε, 1+ε]`.
    LengthSpread { shortest: String, longest: String },
    /// Condition (4): a class outside the set reached with ratio below `λ`.
    Escape {
        from: String,
        to: String,
        /// Move index for single-move escapes; `None` for orbit-ball escapes.
        move_index: Option<usize>,
        length_from: usize,
        length_to: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooMany { found, m } => write!(f, "condition (1): {found} classes > M={m}"),
            Violation::DifferentOrbits { u, v } => write!(f, "condition (2): {u} and {v} in different orbits"),
            Violation::LengthSpread { shortest, longest } => {
                write!(f, "condition (3): length spread {shortest} vs {longest}")
            }
            Violation::Escape {
                from,
                to,
                length_from,
                length_to,
                ..
            } => {
                write!(f, "condition (4): {from} -> {to} with ratio {length_to}/{length_from}")
            }
        }
    }
}

/// A set found by the detector, with a witness from the seed to each member.
#[derive(Debug, Clone)]
pub struct MinimizingSet {
    pub classes: Vec<CyclicWord>,
    pub params: MleParams,
    pub mode: Mode,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone)]
pub enum Detection {
    Minimal(MinimizingSet),
    NotMinimal(Violation),
}

impl Detection {
    pub fn is_minimal(&self) -> bool {
        matches!(self, Detection::Minimal(_))
    }
}

/// True when every non-inner second-kind move strictly lengthens `c`.
pub fn is_strictly_minimal(moves: &MoveSet, c: &CyclicWord) -> bool {
    let mut buf = Vec::new();
    moves
        .outer()
        .filter(|e| !e.is_first_kind)
        .all(|e| e.mv.image_length(c, &mut buf) > c.len())
}

fn spread_violation(classes: &[CyclicWord], p: &MleParams) -> Option<Violation> {
    let shortest = classes.iter().min_by_key(|c| c.len())?;
    let longest = classes.iter().max_by_key(|c| c.len())?;
    let ok = ratio_le(longest.len(), shortest.len(), p.one_plus_eps())
        && ratio_ge(shortest.len(), longest.len(), p.one_minus_eps());
    (!ok).then(|| Violation::LengthSpread {
        shortest: shortest.to_string(),
        longest: longest.to_string(),
    })
}

fn single_move_escape(moves: &MoveSet, classes: &[CyclicWord], p: &MleParams) -> Option<Violation> {
    let members: HashSet<&CyclicWord> = classes.iter().collect();
    for u in classes {
        for e in moves.outer() {
            let img = e.mv.apply_to_class(u);
            if !members.contains(&img) && !ratio_ge(img.len(), u.len(), p.lambda) {
                return Some(Violation::Escape {
                    from: u.to_string(),
                    to: img.to_string(),
                    move_index: Some(e.index),
                    length_from: u.len(),
                    length_to: img.len(),
                });
            }
        }
    }
    None
}

/// Linear-time `(M, λ, ε, W_N)`-minimality detector.
///
/// Collects every class reachable from `c` by at most `M` moves whose stepwise
/// length ratio is at most `1 + ε`, then checks conditions (1), (3) and (4) on
/// that set; condition (2) holds by construction.
pub fn detect_mlew(moves: &MoveSet, c: &CyclicWord, p: &MleParams) -> Result<Detection, MinimalityError> {
    p.check_detector()?;
    check_rank(moves, c)?;
    let step_bound = p.one_plus_eps();
    let mut classes = vec![c.clone()];
    let mut index: HashMap<CyclicWord, usize> = HashMap::from([(c.clone(), 0)]);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    let mut buf = Vec::new();
    while let Some((u, depth)) = queue.pop_front() {
        if depth == p.m {
            continue;
        }
        for e in moves.outer() {
            let (s, t) = e.mv.class_image_into(&classes[u], &mut buf);
            if !ratio_le(t - s, classes[u].len(), step_bound) {
                continue;
            }
            let img = CyclicWord::from_cyclically_reduced(&buf[s..t]);
            if index.contains_key(&img) {
                continue;
            }
            if classes.len() == p.m {
                return Ok(Detection::NotMinimal(Violation::TooMany { found: p.m + 1, m: p.m }));
            }
            index.insert(img.clone(), classes.len());
            classes.push(img);
            parent.push(Some((u, e.index)));
            queue.push_back((classes.len() - 1, depth + 1));
        }
    }
    if let Some(v) = spread_violation(&classes, p) {
        return Ok(Detection::NotMinimal(v));
    }
    if let Some(v) = single_move_escape(moves, &classes, p) {
        return Ok(Detection::NotMinimal(v));
    }
    let witnesses = (0..classes.len())
        .map(|v| {
            let mut seq = Vec::new();
            let mut cur = v;
            while let Some((u, m)) = parent[cur] {
                seq.push((m, false));
                cur = u;
            }
            seq.reverse();
            Witness::from_moves(moves, c, seq)
        })
        .collect();
    Ok(Detection::Minimal(MinimizingSet {
        classes,
        params: *p,
        mode: Mode::Mlew,
        witnesses,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

/// All orbit elements reachable from `c` through classes of length `< bound(len)`,
/// i.e. the orbit ball, by peak reduction.
fn orbit_ball_below_lambda(
    moves: &MoveSet,
    c: &CyclicWord,
    lambda: Ratio<i64>,
    vertex_cap: usize,
) -> Result<Vec<CyclicWord>, AlgoError> {
    let base = c.len();
    let inside = |len: usize| !ratio_ge(len, base, lambda);
    let mut seen: HashSet<CyclicWord> = HashSet::from([c.clone()]);
    let mut order = vec![c.clone()];
    let mut queue = VecDeque::from([c.clone()]);
    let mut buf = Vec::new();
    while let Some(u) = queue.pop_front() {
        for e in moves.outer() {
            let (s, t) = e.mv.class_image_into(&u, &mut buf);
            if !inside(t - s) {
                continue;
            }
            let img = CyclicWord::from_cyclically_reduced(&buf[s..t]);
            if seen.insert(img.clone()) {
                if seen.len() > vertex_cap {
                    return Err(AlgoError::CapExceeded(vertex_cap));
                }
                order.push(img.clone());
                queue.push_back(img);
            }
        }
    }
    Ok(order)
}

/// Checks conditions (1)-(4) of the minimizing-set definition for `set`.
///
/// `Mlew` checks condition (4) against single moves. `Mle` enumerates, for
/// each member `u`, every orbit element shorter than `λ·||u||` (capped BFS)
/// and requires all of them to lie in the set, which is equivalent to
/// `ρ([u]) >= λ` together with `F[u] ⊆ S`.
pub fn verify_minimizing_set(
    moves: &MoveSet,
    set: &[CyclicWord],
    p: &MleParams,
    mode: Mode,
    vertex_cap: usize,
) -> Result<Verification, MinimalityError> {
    let classes: Vec<CyclicWord> = set.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    for c in &classes {
        check_rank(moves, c)?;
    }
    let mut violations = Vec::new();
    if classes.len() > p.m {
        violations.push(Violation::TooMany {
            found: classes.len(),
            m: p.m,
        });
    }
    if let Some(first) = classes.first() {
        for other in &classes[1..] {
            if !algo::equivalent(moves, first, other, vertex_cap)?.equivalent {
                violations.push(Violation::DifferentOrbits {
                    u: first.to_string(),
                    v: other.to_string(),
                });
            }
        }
    }
    if let Some(v) = spread_violation(&classes, p) {
        violations.push(v);
    }
    match mode {
        Mode::Mlew => violations.extend(single_move_escape(moves, &classes, p)),
        Mode::Mle => {
            let members: HashSet<&CyclicWord> = classes.iter().collect();
            'outer: for u in &classes {
                for img in orbit_ball_below_lambda(moves, u, p.lambda, vertex_cap)? {
                    if !members.contains(&img) {
                        violations.push(Violation::Escape {
                            from: u.to_string(),
                            to: img.to_string(),
                            move_index: None,
                            length_from: u.len(),
                            length_to: img.len(),
                        });
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok(Verification {
        passed: violations.is_empty(),
        violations,
    })
}

/// Ratio statistics of one automorphism (a product of moves) over the stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutomorphismStat {
    /// Move indices applied left to right; empty for the identity.
    pub product: Vec<usize>,
    pub first_kind_only: bool,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    /// 95% normal-approximation radius of the mean; `None` below the sample floor.
    pub confidence_radius: Option<f64>,
}

/// Estimated distortion spectrum; every figure is a sample estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionEstimate {
    pub radius: usize,
    pub samples: usize,
    pub stats: Vec<AutomorphismStat>,
    /// Products dropped because their probe action matched an earlier product.
    pub probe_collisions: usize,
    /// Estimated infimum of the length ratio.
    pub j_hat: f64,
    /// Indices into `stats` of the estimated minimizing set.
    pub delta_hat: Vec<usize>,
    /// Estimated minimizing multiplicity, `#delta_hat`.
    pub m_hat: usize,
    /// Second-smallest mean ratio over the smallest; `None` if every product minimizes.
    pub lambda_hat: Option<f64>,
}

/// Sample count below which confidence radii are not reported.
pub const CONFIDENCE_SAMPLE_FLOOR: usize = 200;
/// Number of probe words used to identify automorphisms by their action.
pub const PROBE_COUNT: usize = 32;
const PROBE_LENGTH: usize = 12;

/// Products of at most `radius` non-inner moves, deduplicated by their action
/// on a fixed probe set. Returns the products and the number of collisions.
pub fn move_products(moves: &MoveSet, radius: usize, probe_seed: u64) -> (Vec<Vec<usize>>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let probes: Vec<CyclicWord> = (0..PROBE_COUNT)
        .map(|_| walks::uniform_cyclic_word(moves.rank(), PROBE_LENGTH, &mut rng))
        .collect();
    let signature = |images: &[CyclicWord]| images.to_vec();
    let mut seen: HashSet<Vec<CyclicWord>> = HashSet::from([signature(&probes)]);
    let mut products: Vec<(Vec<usize>, Vec<CyclicWord>)> = vec![(Vec::new(), probes)];
    let mut frontier = vec![0usize];
    let mut collisions = 0;
    for _ in 0..radius {
        let mut next = Vec::new();
        for &pi in &frontier {
            for e in moves.outer() {
                let images: Vec<CyclicWord> = products[pi].1.iter().map(|c| e.mv.apply_to_class(c)).collect();
                if seen.insert(signature(&images)) {
                    let mut seq = products[pi].0.clone();
                    seq.push(e.index);
                    products.push((seq, images));
                    next.push(products.len() - 1);
                } else {
                    collisions += 1;
                }
            }
        }
        frontier = next;
    }
    (products.into_iter().map(|(s, _)| s).collect(), collisions)
}

/// Monte-Carlo estimate of `||φ ν|| / ||ν||` for every product `φ` of at most
/// `radius` moves, using `||φ(w)|| / ||w||` over up to `samples` stream words.
pub fn estimate_distortion<I>(
    moves: &MoveSet,
    stream: I,
    radius: usize,
    samples: usize,
    probe_seed: u64,
) -> Result<DistortionEstimate, MinimalityError>
where
    I: IntoIterator<Item = CyclicWord>,
{
    if radius == 0 {
        return Err(MinimalityError::ZeroRadius);
    }
    let words: Vec<CyclicWord> = stream.into_iter().take(samples.max(1)).collect();
    if words.is_empty() {
        return Err(MinimalityError::EmptyStream);
    }
    for w in &words {
        check_rank(moves, w)?;
    }
    let (products, probe_collisions) = move_products(moves, radius, probe_seed);
    let mut buf = Vec::new();
    let stats: Vec<AutomorphismStat> = products
        .iter()
        .map(|product| {
            let ratios: Vec<f64> = words
                .iter()
                .map(|w| {
                    let len = match product.split_last() {
                        None => w.len(),
                        Some((&last, init)) => {
                            let pre = init.iter().fold(w.clone(), |c, &m| moves.get(m).apply_to_class(&c));
                            moves.get(last).image_length(&pre, &mut buf)
                        }
                    };
                    len as f64 / w.len() as f64
                })
                .collect();
            let n = ratios.len() as f64;
            let mean = ratios.iter().sum::<f64>() / n;
            let var = if ratios.len() > 1 {
                ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let std_dev = var.sqrt();
            AutomorphismStat {
                first_kind_only: product.iter().all(|&m| moves.entry(m).is_first_kind),
                product: product.clone(),
                mean,
                std_dev,
                min: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
                max: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                confidence_radius: (ratios.len() >= CONFIDENCE_SAMPLE_FLOOR).then(|| 1.96 * std_dev / n.sqrt()),
            }
        })
        .collect();

    let argmin = stats
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .map(|(i, _)| i)
        .expect("identity is always present");
    let j_hat = stats[argmin].mean;
    let tol = |s: &AutomorphismStat| {
        let r = s.confidence_radius.unwrap_or(0.0) + stats[argmin].confidence_radius.unwrap_or(0.0);
        r.max(1e-9)
    };
    let delta_hat: Vec<usize> = (0..stats.len())
        .filter(|&i| stats[i].mean - j_hat <= tol(&stats[i]))
        .collect();
    let lambda_hat = stats
        .iter()
        .enumerate()
        .filter(|(i, _)| !delta_hat.contains(i))
        .map(|(_, s)| s.mean)
        .min_by(f64::total_cmp)
        .map(|second| second / j_hat);
    Ok(DistortionEstimate {
        radius,
        samples: words.len(),
        m_hat: delta_hat.len(),
        stats,
        probe_collisions,
        j_hat,
        delta_hat,
        lambda_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::DEFAULT_VERTEX_CAP;

    fn c(s: &str) -> CyclicWord {
        CyclicWord::parse(s).unwrap()
    }

    fn params(m: usize, l: &str, e: &str) -> MleParams {
        MleParams::parse(m, l, e).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(MleParams::parse(0, "3/2", "1/10").is_err());
        assert!(MleParams::parse(1, "1", "1/10").is_err());
        assert!(MleParams::parse(1, "3/2", "0").is_err());
        assert!(MleParams::parse(1, "3/2", "1/2").is_err());
        let p = params(1, "3/2", "1/10");
        assert!(p.satisfies_detector_inequality());
        // (6/5)(9/10) < 11/10
        assert!(!params(1, "6/5", "1/10").satisfies_detector_inequality());
        let moves = MoveSet::new(2).unwrap();
        assert!(matches!(
            detect_mlew(&moves, &c("ab"), &params(2, "6/5", "1/10")),
            Err(MinimalityError::DetectorInequality { .. })
        ));
    }

    #[test]
    fn strict_minimality_examples() {
        let moves = MoveSet::new(2).unwrap();
        // a -> ab fixes the length of the commutator
        assert!(!is_strictly_minimal(&moves, &c("abAB")));
        assert!(!is_strictly_minimal(&moves, &c("ab")));
        assert!(is_strictly_minimal(&moves, &c("aaabbb")));
    }

    #[test]
    fn single_letter_is_four_element_minimizing_set() {
        let moves = MoveSet::new(2).unwrap();
        let p = params(4, "3/2", "1/10");
        let Detection::Minimal(set) = detect_mlew(&moves, &c("a"), &p).unwrap() else {
            panic!("expected success");
        };
        assert_eq!(set.classes.len(), 4);
        for w in &set.witnesses {
            w.verify(&moves).unwrap();
        }
        let v = verify_minimizing_set(&moves, &set.classes, &p, Mode::Mle, 10_000).unwrap();
        assert!(v.passed, "{:?}", v.violations);
        // M = 3 is too small
        let det = detect_mlew(&moves, &c("a"), &params(3, "3/2", "1/10")).unwrap();
        assert!(matches!(det, Detection::NotMinimal(Violation::TooMany { .. })));
    }

    #[test]
    fn spread_violation_is_condition_three() {
        let moves = MoveSet::new(2).unwrap();
        let p = params(4, "3/2", "1/10");
        let v = verify_minimizing_set(&moves, &[c("a"), c("ab")], &p, Mode::Mlew, DEFAULT_VERTEX_CAP).unwrap();
        assert!(!v.passed);
        assert!(v.violations.iter().any(|v| matches!(v, Violation::LengthSpread { .. })));
    }

    #[test]
    fn duplicates_collapse() {
        let moves = MoveSet::new(2).unwrap();
        let p = params(1, "3/2", "1/10");
        let v = verify_minimizing_set(&moves, &[c("abAB"), c("ABab")], &p, Mode::Mlew, 100).unwrap();
        assert!(!v.violations.iter().any(|v| matches!(v, Violation::TooMany { .. })));
    }

    #[test]
    fn rational_current_ratios_are_exact() {
        let moves = MoveSet::new(2).unwrap();
        let w = c("aabAbbbAB");
        let est = estimate_distortion(&moves, std::iter::repeat_n(w.clone(), 10), 1, 10, 7).unwrap();
        for s in &est.stats {
            assert!(s.std_dev < 1e-12);
            let expected = match s.product.as_slice() {
                [] => w.len(),
                [m] => moves.get(*m).apply_to_class(&w).len(),
                _ => unreachable!(),
            };
            assert!((s.mean - expected as f64 / w.len() as f64).abs() < 1e-12);
            assert_eq!(s.min, expected as f64 / w.len() as f64);
            assert!(s.confidence_radius.is_none());
        }
        assert!(estimate_distortion(&moves, std::iter::empty(), 1, 10, 7).is_err());
    }
}
