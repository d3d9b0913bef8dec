//! Finite-state Markov chains with exact rational or floating-point entries.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Row-sum tolerance in float mode.
pub const FLOAT_ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FsmcError {
    #[error("chain has no states")]
    Empty,
    #[error("duplicate state name {0:?}")]
    DuplicateState(String),
    #[error("row {row} has {found} entries, expected {expected}")]
    RowArity { row: usize, found: usize, expected: usize },
    #[error("negative entry at ({row}, {col})")]
    Negative { row: usize, col: usize },
    #[error("row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: String },
    #[error("cannot parse entry {0:?}")]
    BadEntry(String),
    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("stationary residual {0} exceeds tolerance")]
    Residual(f64),
    #[error("initial distribution has {found} entries for {expected} states")]
    InitialArity { found: usize, expected: usize },
    #[error("invalid chain file: {0}")]
    File(String),
}

/// Entry type of a transition matrix.
pub trait Scalar: Clone + fmt::Debug + fmt::Display + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// Whether arithmetic is exact.
    const EXACT: bool;
    fn parse_entry(s: &str) -> Result<Self, FsmcError>;
    fn to_f64(&self) -> f64;
    fn row_sum_is_one(sum: &Self) -> bool;
    /// Pivot magnitude below which a column counts as singular.
    fn negligible(&self) -> bool;
}

/// Parses `p/q`, integers and decimals (optionally with exponent) exactly.
pub fn parse_rational(s: &str) -> Result<BigRational, FsmcError> {
    let t = s.trim();
    let bad = || FsmcError::BadEntry(s.to_string());
    if t.contains('/') {
        let r = BigRational::from_str(t).map_err(|_| bad())?;
        return Ok(r);
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().map_err(|_| bad())?);
    let scale = exp - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    value = if scale >= 0 { value * pow } else { value / pow };
    Ok(if neg { -value } else { value })
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn parse_entry(s: &str) -> Result<Self, FsmcError> {
        parse_rational(s)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn row_sum_is_one(sum: &Self) -> bool {
        sum.is_one()
    }
    fn negligible(&self) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn parse_entry(s: &str) -> Result<Self, FsmcError> {
        let t = s.trim();
        match t.split_once('/') {
            Some((p, q)) => {
                let p: f64 = p.trim().parse().map_err(|_| FsmcError::BadEntry(s.into()))?;
                let q: f64 = q.trim().parse().map_err(|_| FsmcError::BadEntry(s.into()))?;
                Ok(p / q)
            }
            None => t.parse().map_err(|_| FsmcError::BadEntry(s.into())),
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn row_sum_is_one(sum: &Self) -> bool {
        (sum - 1.0).abs() <= FLOAT_ROW_TOLERANCE
    }
    fn negligible(&self) -> bool {
        self.abs() <= 1e-14
    }
}

/// On-disk chain format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFile {
    pub states: Vec<String>,
    /// Entries as fraction strings, decimal strings or JSON numbers.
    pub rows: Vec<Vec<Value>>,
}

/// A finite-state Markov chain with named states.
#[derive(Debug, Clone, PartialEq)]
pub struct Fsmc<T> {
    states: Vec<String>,
    rows: Vec<Vec<T>>,
}

/// Exact rational chain.
pub type RationalChain = Fsmc<BigRational>;

/// Stationary distribution of an irreducible chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryData<T> {
    pub mu0: Vec<T>,
}

/// The iterated chain `X[k]` together with the `k`-words labelling its states.
#[derive(Debug, Clone)]
pub struct IteratedChain<T> {
    pub chain: Fsmc<T>,
    pub words: Vec<Vec<usize>>,
}

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

impl<T: Scalar> Fsmc<T> {
    pub fn new(states: Vec<String>, rows: Vec<Vec<T>>) -> Result<Self, FsmcError> {
        let n = states.len();
        if n == 0 {
            return Err(FsmcError::Empty);
        }
        let mut seen = HashMap::new();
        for s in &states {
            if seen.insert(s.clone(), ()).is_some() {
                return Err(FsmcError::DuplicateState(s.clone()));
            }
        }
        if rows.len() != n {
            return Err(FsmcError::RowArity {
                row: rows.len(),
                found: rows.len(),
                expected: n,
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(FsmcError::RowArity {
                    row: i,
                    found: row.len(),
                    expected: n,
                });
            }
            let mut sum = T::zero();
            for (j, x) in row.iter().enumerate() {
                if x.is_negative() {
                    return Err(FsmcError::Negative { row: i, col: j });
                }
                sum = sum + x.clone();
            }
            if !T::row_sum_is_one(&sum) {
                return Err(FsmcError::RowSum {
                    row: i,
                    sum: sum.to_string(),
                });
            }
        }
        Ok(Fsmc { states, rows })
    }

    pub fn from_file(file: &ChainFile) -> Result<Self, FsmcError> {
        let rows = file
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| match v {
                        Value::String(s) => T::parse_entry(s),
                        Value::Number(x) => T::parse_entry(&x.to_string()),
                        other => Err(FsmcError::BadEntry(other.to_string())),
                    })
                    .collect::<Result<Vec<T>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(file.states.clone(), rows)
    }

    pub fn from_json(s: &str) -> Result<Self, FsmcError> {
        let file: ChainFile = serde_json::from_str(s).map_err(|e| FsmcError::File(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> ChainFile {
        ChainFile {
            states: self.states.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|x| Value::String(x.to_string())).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn p(&self, s: usize, t: usize) -> &T {
        &self.rows[s][t]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    /// Successors with positive probability.
    pub fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[s]
            .iter()
            .enumerate()
            .filter(|(_, x)| x.is_positive())
            .map(|(j, _)| j)
    }

    fn reach(&self, forward: bool) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for (v, flag) in seen.iter_mut().enumerate() {
                let edge = if forward {
                    self.rows[u][v].is_positive()
                } else {
                    self.rows[v][u].is_positive()
                };
                if edge && !*flag {
                    *flag = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Strong connectivity of the positive-transition digraph.
    pub fn is_irreducible(&self) -> bool {
        self.reach(true).into_iter().all(|x| x) && self.reach(false).into_iter().all(|x| x)
    }

    /// Every transition probability is strictly below 1.
    pub fn is_tight(&self) -> bool {
        self.rows.iter().flatten().all(|x| *x < T::one())
    }

    /// Largest transition probability `σ`.
    pub fn max_entry(&self) -> T {
        self.rows
            .iter()
            .flatten()
            .fold(T::zero(), |m, x| if *x > m { x.clone() } else { m })
    }

    /// Solves `μ(P - I) = 0`, `Σμ = 1` by Gaussian elimination.
    pub fn stationary(&self) -> Result<StationaryData<T>, FsmcError> {
        if !self.is_irreducible() {
            return Err(FsmcError::NotIrreducible);
        }
        let n = self.len();
        // Row i of the system is column i of (P - I); the last row is replaced by Σμ = 1.
        let mut a: Vec<Vec<T>> = (0..n)
            .map(|i| {
                let mut row: Vec<T> = (0..n)
                    .map(|j| {
                        let x = self.rows[j][i].clone();
                        if i == j {
                            x - T::one()
                        } else {
                            x
                        }
                    })
                    .collect();
                row.push(T::zero());
                row
            })
            .collect();
        a[n - 1] = vec![T::one(); n + 1];
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[x][col]
                        .abs()
                        .partial_cmp(&a[y][col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .filter(|&r| !a[r][col].negligible())
                .ok_or(FsmcError::NotIrreducible)?;
            a.swap(col, pivot);
            let p = a[col][col].clone();
            for x in a[col].iter_mut() {
                *x = x.clone() / p.clone();
            }
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    let (pivot_row, target) = if r < col {
                        let (lo, hi) = a.split_at_mut(col);
                        (&hi[0], &mut lo[r])
                    } else {
                        let (lo, hi) = a.split_at_mut(r);
                        (&lo[col], &mut hi[0])
                    };
                    for (x, p) in target[col..].iter_mut().zip(&pivot_row[col..]) {
                        *x = x.clone() - p.clone() * f.clone();
                    }
                }
            }
        }
        let mu0: Vec<T> = a.into_iter().map(|row| row[n].clone()).collect();
        let data = StationaryData { mu0 };
        if !T::EXACT {
            let r = self.residual(&data.mu0).to_f64();
            if r > FLOAT_ROW_TOLERANCE {
                return Err(FsmcError::Residual(r));
            }
        }
        Ok(data)
    }

    /// `‖μP − μ‖₁`.
    pub fn residual(&self, mu: &[T]) -> T {
        let n = self.len();
        (0..n)
            .map(|j| {
                let s = (0..n).fold(T::zero(), |acc, i| acc + mu[i].clone() * self.rows[i][j].clone());
                (s - mu[j].clone()).abs()
            })
            .fold(T::zero(), |a, b| a + b)
    }

    /// `μ₀[k](v) = μ₀(s₁) p(s₁,s₂) ⋯ p(s_{k−1},s_k)`.
    pub fn mu0_k(&self, st: &StationaryData<T>, v: &[usize]) -> Result<T, FsmcError> {
        if let Some(&bad) = v.iter().find(|&&s| s >= self.len()) {
            return Err(FsmcError::UnknownState(bad.to_string()));
        }
        let Some((&first, _)) = v.split_first() else {
            return Ok(T::one());
        };
        Ok(v.windows(2)
            .fold(st.mu0[first].clone(), |acc, w| acc * self.rows[w[0]][w[1]].clone()))
    }

    /// Same as [`Fsmc::mu0_k`] with states given by name.
    pub fn mu0_k_named(&self, st: &StationaryData<T>, v: &[&str]) -> Result<T, FsmcError> {
        let idx = v
            .iter()
            .map(|s| {
                self.state_index(s)
                    .ok_or_else(|| FsmcError::UnknownState(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.mu0_k(st, &idx)
    }

    /// All state sequences of length `k` with positive transition probabilities.
    pub fn feasible_words(&self, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let mut words: Vec<Vec<usize>> = (0..self.len()).map(|s| vec![s]).collect();
        for _ in 1..k {
            words = words
                .into_iter()
                .flat_map(|w| {
                    let last = *w.last().unwrap();
                    self.successors(last)
                        .map(|s| {
                            let mut x = w.clone();
                            x.push(s);
                            x
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        words
    }

    /// The iterated chain on feasible `k`-words: `s₁…s_k → s₂…s_k s` with probability `p(s_k, s)`.
    pub fn build_iterated(&self, k: usize) -> Result<IteratedChain<T>, FsmcError> {
        if !self.is_irreducible() {
            return Err(FsmcError::NotIrreducible);
        }
        let k = k.max(1);
        let words = self.feasible_words(k);
        let index: HashMap<&[usize], usize> = words.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
        let m = words.len();
        let mut rows = vec![vec![T::zero(); m]; m];
        for (i, w) in words.iter().enumerate() {
            let last = w[k - 1];
            for s in self.successors(last) {
                let mut next = w[1..].to_vec();
                next.push(s);
                rows[i][index[next.as_slice()]] = self.rows[last][s].clone();
            }
        }
        let states = words
            .iter()
            .map(|w| w.iter().map(|&s| self.states[s].as_str()).collect::<Vec<_>>().join(","))
            .collect();
        Ok(IteratedChain {
            chain: Fsmc::new(states, rows)?,
            words,
        })
    }

    /// Trajectory of length `n` started from `mu`, reproducible under `seed`.
    pub fn sample(&self, mu: &[T], n: usize, seed: u64) -> Result<Vec<usize>, FsmcError> {
        let sampler = ChainSampler::new(self, mu)?;
        Ok(sampler.sample(n, &mut ChaCha8Rng::seed_from_u64(seed)))
    }
}

impl Fsmc<BigRational> {
    /// Float copy of an exact chain.
    pub fn to_float(&self) -> Fsmc<f64> {
        Fsmc {
            states: self.states.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect(),
        }
    }
}

/// Inverse-CDF sampler over the positive entries of each row.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    initial: (Vec<usize>, Vec<f64>),
    rows: Vec<(Vec<usize>, Vec<f64>)>,
}

fn cdf<T: Scalar>(row: &[T]) -> (Vec<usize>, Vec<f64>) {
    let mut targets = Vec::new();
    let mut acc = Vec::new();
    let mut total = 0.0;
    for (j, x) in row.iter().enumerate() {
        if x.is_positive() {
            total += x.to_f64();
            targets.push(j);
            acc.push(total);
        }
    }
    for a in &mut acc {
        *a /= total;
    }
    (targets, acc)
}

fn draw(table: &(Vec<usize>, Vec<f64>), rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let i = table.1.partition_point(|&c| c <= u).min(table.0.len() - 1);
    table.0[i]
}

impl ChainSampler {
    pub fn new<T: Scalar>(chain: &Fsmc<T>, mu: &[T]) -> Result<Self, FsmcError> {
        if mu.len() != chain.len() {
            return Err(FsmcError::InitialArity {
                found: mu.len(),
                expected: chain.len(),
            });
        }
        if mu.iter().any(|x| x.is_negative()) || !mu.iter().any(|x| x.is_positive()) {
            return Err(FsmcError::BadEntry("initial distribution".into()));
        }
        Ok(ChainSampler {
            initial: cdf(mu),
            rows: chain.rows.iter().map(|r| cdf(r)).collect(),
        })
    }

    pub fn first(&self, rng: &mut impl Rng) -> usize {
        draw(&self.initial, rng)
    }

    pub fn step(&self, s: usize, rng: &mut impl Rng) -> usize {
        draw(&self.rows[s], rng)
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        let mut s = self.first(rng);
        out.push(s);
        for _ in 1..n {
            s = self.step(s, rng);
            out.push(s);
        }
        out
    }
}

/// The event `s₁…s_m = (ι(s_{n−m+1}…s_n))^R` with `m = ⌊√n⌋`, where
/// `inverse[s]` is the state of the reversed edge (if it is a state).
pub fn quasi_inversion_event(path: &[usize], inverse: &[Option<usize>]) -> bool {
    let n = path.len();
    let m = n.isqrt();
    m > 0 && (0..m).all(|i| inverse[path[n - 1 - i]] == Some(path[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: &[&[(i64, i64)]]) -> RationalChain {
        let states = (0..rows.len()).map(|i| format!("s{i}")).collect();
        Fsmc::new(
            states,
            rows.iter()
                .map(|r| r.iter().map(|&(p, q)| rat(p, q)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn parse_entries() {
        assert_eq!(parse_rational("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("1").unwrap(), rat(1, 1));
        assert_eq!(parse_rational("2.5e-1").unwrap(), rat(1, 4));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational(".").is_err());
        let c = RationalChain::from_json(r#"{"states":["x","y"],"rows":[["0.5","1/2"],[0.25, 0.75]]}"#).unwrap();
        assert_eq!(c.p(1, 0), &rat(1, 4));
        assert!(matches!(
            RationalChain::from_json(r#"{"states":["x","y"],"rows":[["0.5","1/3"],[0.25, 0.75]]}"#),
            Err(FsmcError::RowSum { row: 0, .. })
        ));
        assert!(Fsmc::<f64>::from_json(r#"{"states":["x"],"rows":[[0.9999999999999999]]}"#).is_ok());
    }

    #[test]
    fn irreducibility_and_tightness() {
        let half = chain(&[&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]]);
        assert!(half.is_irreducible() && half.is_tight());
        let blocks = chain(&[
            &[(1, 2), (1, 2), (0, 1), (0, 1)],
            &[(1, 2), (1, 2), (0, 1), (0, 1)],
            &[(0, 1), (0, 1), (1, 2), (1, 2)],
            &[(0, 1), (0, 1), (1, 2), (1, 2)],
        ]);
        assert!(!blocks.is_irreducible());
        assert_eq!(blocks.stationary(), Err(FsmcError::NotIrreducible));
        let forced = chain(&[&[(1, 1), (0, 1)], &[(1, 2), (1, 2)]]);
        assert!(!forced.is_tight());
    }

    #[test]
    fn symmetric_two_state() {
        let c = chain(&[&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]]);
        let st = c.stationary().unwrap();
        assert_eq!(st.mu0, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(c.mu0_k(&st, &[0, 1]).unwrap(), rat(1, 4));
        assert!(c.mu0_k(&st, &[0, 2]).is_err());
        let it = c.build_iterated(2).unwrap();
        assert_eq!(it.chain.len(), 4);
        assert_eq!(it.chain.stationary().unwrap().mu0, vec![rat(1, 4); 4]);
        assert_eq!(c.build_iterated(1).unwrap().chain.rows(), c.rows());
    }

    #[test]
    fn asymmetric_stationary() {
        let c = chain(&[&[(3, 4), (1, 4)], &[(1, 3), (2, 3)]]);
        let st = c.stationary().unwrap();
        assert_eq!(st.mu0, vec![rat(4, 7), rat(3, 7)]);
        assert!(c.residual(&st.mu0).is_zero());
        let f = c.to_float().stationary().unwrap();
        assert!((f.mu0[0] - 4.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn forced_cycle_is_periodic() {
        let c = chain(&[
            &[(0, 1), (1, 1), (0, 1)],
            &[(0, 1), (0, 1), (1, 1)],
            &[(1, 1), (0, 1), (0, 1)],
        ]);
        let path = c.sample(&[rat(1, 1), rat(0, 1), rat(0, 1)], 9, 3).unwrap();
        assert_eq!(path, vec![0, 1, 2, 0, 1, 2, 0, 1, 2]);
        assert_eq!(
            c.sample(&c.stationary().unwrap().mu0, 50, 11),
            c.sample(&c.stationary().unwrap().mu0, 50, 11)
        );
    }

    #[test]
    fn quasi_inversion() {
        // states a, A with inverse pairing
        let inv = [Some(1), Some(0)];
        assert!(quasi_inversion_event(&[0, 0, 1, 1], &inv));
        assert!(!quasi_inversion_event(&[0, 0, 1, 0], &inv));
    }
}
