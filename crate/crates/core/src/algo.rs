//! Whitehead minimization, breadth-first stabilization of a length level,
//! orbit equivalence and stabilizer generators, all with replayable witnesses.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moves::{MoveRecord, MoveSet};
use crate::word::{CyclicWord, Letter};

/// Default vertex cap for level components.
pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgoError {
    #[error("level component exceeds the vertex cap of {0}")]
    CapExceeded(usize),
    #[error("witness diverged at step {step}: expected state hash {expected:#x}, found {found:#x}")]
    WitnessDiverged { step: usize, expected: u64, found: u64 },
    #[error("witness ends at {found} instead of {expected}")]
    WitnessWrongTarget { expected: String, found: String },
    #[error("witness move index {0} out of range")]
    UnknownMove(usize),
    #[error("class {class} needs rank {needed} but the move set has rank {rank}")]
    RankMismatch { class: String, needed: usize, rank: usize },
}

pub(crate) fn check_rank(moves: &MoveSet, c: &CyclicWord) -> Result<(), AlgoError> {
    if c.min_rank() > moves.rank() {
        return Err(AlgoError::RankMismatch {
            class: c.to_string(),
            needed: c.min_rank(),
            rank: moves.rank(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessStep {
    pub move_index: usize,
    /// Apply the inverse of the indexed move instead.
    pub inverted: bool,
    /// Stable hash of the class the step is applied to.
    pub pre_hash: u64,
}

/// A sequence of moves carrying `source` to `target`, checkable by replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub source: CyclicWord,
    pub target: CyclicWord,
    pub steps: Vec<WitnessStep>,
}

fn step_index(moves: &MoveSet, step: &WitnessStep) -> Result<usize, AlgoError> {
    if step.move_index >= moves.len() {
        return Err(AlgoError::UnknownMove(step.move_index));
    }
    Ok(if step.inverted {
        moves.inverse_index(step.move_index)
    } else {
        step.move_index
    })
}

impl Witness {
    pub fn identity(c: &CyclicWord) -> Self {
        Witness {
            source: c.clone(),
            target: c.clone(),
            steps: Vec::new(),
        }
    }

    /// Builds a witness by applying `(move, inverted)` pairs to `source`.
    pub fn from_moves(moves: &MoveSet, source: &CyclicWord, seq: impl IntoIterator<Item = (usize, bool)>) -> Self {
        let mut cur = source.clone();
        let mut steps = Vec::new();
        for (move_index, inverted) in seq {
            let step = WitnessStep {
                move_index,
                inverted,
                pre_hash: cur.stable_hash(),
            };
            let idx = step_index(moves, &step).expect("move index in range");
            cur = moves.get(idx).apply_to_class(&cur);
            steps.push(step);
        }
        Witness {
            source: source.clone(),
            target: cur,
            steps,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Replays the steps from `source`, checking every intermediate hash and the target.
    pub fn verify(&self, moves: &MoveSet) -> Result<(), AlgoError> {
        let mut cur = self.source.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let h = cur.stable_hash();
            if h != step.pre_hash {
                return Err(AlgoError::WitnessDiverged {
                    step: i,
                    expected: step.pre_hash,
                    found: h,
                });
            }
            cur = moves.get(step_index(moves, step)?).apply_to_class(&cur);
        }
        if cur != self.target {
            return Err(AlgoError::WitnessWrongTarget {
                expected: self.target.to_string(),
                found: cur.to_string(),
            });
        }
        Ok(())
    }

    /// Applies the move sequence to an arbitrary class (no hash checks).
    pub fn apply(&self, moves: &MoveSet, c: &CyclicWord) -> CyclicWord {
        self.steps.iter().fold(c.clone(), |cur, step| {
            moves
                .get(step_index(moves, step).expect("move index in range"))
                .apply_to_class(&cur)
        })
    }

    /// Concatenation; `self.target` must equal `next.source`.
    pub fn then(mut self, next: Witness) -> Witness {
        assert_eq!(self.target, next.source, "witnesses do not compose");
        self.steps.extend(next.steps);
        self.target = next.target;
        self
    }

    /// The inverse witness, from `target` back to `source`.
    pub fn reversed(&self, moves: &MoveSet) -> Witness {
        let seq: Vec<(usize, bool)> = self.steps.iter().rev().map(|s| (s.move_index, !s.inverted)).collect();
        let w = Witness::from_moves(moves, &self.target, seq);
        debug_assert_eq!(w.target, self.source);
        w
    }

    pub fn to_record(&self, moves: &MoveSet) -> WitnessRecord {
        WitnessRecord {
            source: self.source.to_string(),
            target: self.target.to_string(),
            steps: self
                .steps
                .iter()
                .map(|s| WitnessStepRecord {
                    step: s.clone(),
                    mv: {
                        let mv = moves.get(s.move_index);
                        if s.inverted {
                            mv.invert().to_record()
                        } else {
                            mv.to_record()
                        }
                    },
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessStepRecord {
    #[serde(flatten)]
    pub step: WitnessStep,
    /// The move actually applied (already inverted when `inverted` is set).
    #[serde(rename = "move")]
    pub mv: MoveRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub source: String,
    pub target: String,
    pub steps: Vec<WitnessStepRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minimization {
    pub result: CyclicWord,
    pub witness: Witness,
    pub steps: usize,
}

/// Index and image length of the move shortening `c` the most, if any shortens it.
pub fn steepest_descent_move(moves: &MoveSet, c: &CyclicWord, buf: &mut Vec<Letter>) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for e in moves.outer() {
        let len = e.mv.image_length(c, buf);
        if len < c.len() && best.is_none_or(|(_, b)| len < b) {
            best = Some((e.index, len));
        }
    }
    best
}

/// True when no Whitehead move strictly shortens `c`.
pub fn is_whitehead_minimal(moves: &MoveSet, c: &CyclicWord) -> bool {
    let mut buf = Vec::new();
    steepest_descent_move(moves, c, &mut buf).is_none()
}

/// Steepest-descent Whitehead minimization; ties go to the earliest move.
///
/// # Panics
/// If `c` uses letters outside the move set's rank.
pub fn minimize(moves: &MoveSet, c: &CyclicWord) -> Minimization {
    assert!(c.min_rank() <= moves.rank(), "class {c} exceeds rank {}", moves.rank());
    let mut buf = Vec::new();
    let mut cur = c.clone();
    let mut seq = Vec::new();
    while let Some((idx, _)) = steepest_descent_move(moves, &cur, &mut buf) {
        seq.push(WitnessStep {
            move_index: idx,
            inverted: false,
            pre_hash: cur.stable_hash(),
        });
        cur = moves.get(idx).apply_to_class(&cur);
    }
    Minimization {
        steps: seq.len(),
        witness: Witness {
            source: c.clone(),
            target: cur.clone(),
            steps: seq,
        },
        result: cur,
    }
}

/// Minimizes `c` and each `ψ(c)` for `ψ` in `aux` (a move-index sequence),
/// returning the shortest result; ties go to fewer descent steps, then to the earliest branch.
pub fn speedup_minimize(moves: &MoveSet, c: &CyclicWord, aux: &[Vec<usize>]) -> Minimization {
    let mut best = minimize(moves, c);
    for seq in aux {
        let pre = Witness::from_moves(moves, c, seq.iter().map(|&i| (i, false)));
        let m = minimize(moves, &pre.target);
        if (m.result.len(), m.steps) < (best.result.len(), best.steps) {
            best = Minimization {
                result: m.result,
                steps: m.steps,
                witness: pre.then(m.witness),
            };
        }
    }
    best
}

/// The connected component of the length-`level` automorphism graph containing `root`.
#[derive(Debug, Clone)]
pub struct LevelComponent {
    pub level: usize,
    /// Vertices in BFS discovery order; `vertices[0]` is the root.
    pub vertices: Vec<CyclicWord>,
    index: HashMap<CyclicWord, usize>,
    /// Directed edges `(from, to, move)` for every outer move preserving length,
    /// self-loops included.
    pub edges: Vec<(usize, usize, usize)>,
    /// BFS tree: parent vertex and the move leading from it.
    parent: Vec<Option<(usize, usize)>>,
}

impl LevelComponent {
    pub fn root(&self) -> &CyclicWord {
        &self.vertices[0]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, c: &CyclicWord) -> bool {
        self.index.contains_key(c)
    }

    pub fn index_of(&self, c: &CyclicWord) -> Option<usize> {
        self.index.get(c).copied()
    }

    /// Witness along BFS-tree edges from the root to vertex `v`.
    pub fn path_from_root(&self, moves: &MoveSet, v: usize) -> Witness {
        let mut seq = Vec::new();
        let mut cur = v;
        while let Some((p, m)) = self.parent[cur] {
            seq.push(m);
            cur = p;
        }
        seq.reverse();
        Witness::from_moves(moves, self.root(), seq.into_iter().map(|m| (m, false)))
    }

    /// Number of topological edges: a directed edge `(u, v, τ)` and its reverse
    /// `(v, u, τ^-1)` are the same edge.
    fn topological_edges(&self, moves: &MoveSet) -> BTreeSet<(usize, usize)> {
        self.edges
            .iter()
            .map(|&(u, v, m)| (u, m).min((v, moves.inverse_index(m))))
            .collect()
    }

    pub fn edge_count(&self, moves: &MoveSet) -> usize {
        self.topological_edges(moves).len()
    }
}

/// Breadth-first closure of `c` under length-preserving Whitehead moves.
pub fn level_component(moves: &MoveSet, c: &CyclicWord, vertex_cap: usize) -> Result<LevelComponent, AlgoError> {
    check_rank(moves, c)?;
    let level = c.len();
    let mut comp = LevelComponent {
        level,
        vertices: vec![c.clone()],
        index: HashMap::from([(c.clone(), 0)]),
        edges: Vec::new(),
        parent: vec![None],
    };
    let mut queue = VecDeque::from([0usize]);
    let mut buf = Vec::new();
    while let Some(u) = queue.pop_front() {
        for e in moves.outer() {
            let (s, t) = e.mv.class_image_into(&comp.vertices[u], &mut buf);
            if t - s != level {
                continue;
            }
            let img = CyclicWord::from_cyclically_reduced(&buf[s..t]);
            let v = match comp.index.get(&img) {
                Some(&v) => v,
                None => {
                    if comp.vertices.len() >= vertex_cap {
                        return Err(AlgoError::CapExceeded(vertex_cap));
                    }
                    let v = comp.vertices.len();
                    comp.index.insert(img.clone(), v);
                    comp.vertices.push(img);
                    comp.parent.push(Some((u, e.index)));
                    queue.push_back(v);
                    v
                }
            };
            comp.edges.push((u, v, e.index));
        }
    }
    Ok(comp)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Verified witness from the first class to the second when equivalent.
    pub witness: Option<Witness>,
    pub minimal_lengths: (usize, usize),
}

/// Decides whether two classes lie in the same `Out(F_N)`-orbit.
pub fn equivalent(
    moves: &MoveSet,
    c1: &CyclicWord,
    c2: &CyclicWord,
    vertex_cap: usize,
) -> Result<Equivalence, AlgoError> {
    check_rank(moves, c1)?;
    check_rank(moves, c2)?;
    let m1 = minimize(moves, c1);
    let m2 = minimize(moves, c2);
    let lengths = (m1.result.len(), m2.result.len());
    if lengths.0 != lengths.1 {
        return Ok(Equivalence {
            equivalent: false,
            witness: None,
            minimal_lengths: lengths,
        });
    }
    let middle = if m1.result == m2.result {
        Witness::identity(&m1.result)
    } else {
        let comp = level_component(moves, &m1.result, vertex_cap)?;
        match comp.index_of(&m2.result) {
            Some(v) => comp.path_from_root(moves, v),
            None => {
                return Ok(Equivalence {
                    equivalent: false,
                    witness: None,
                    minimal_lengths: lengths,
                })
            }
        }
    };
    let witness = m1.witness.then(middle).then(m2.witness.reversed(moves));
    witness.verify(moves)?;
    Ok(Equivalence {
        equivalent: true,
        witness: Some(witness),
        minimal_lengths: lengths,
    })
}

/// Generators of the stabilizer of `c`: one loop per edge outside a BFS spanning tree.
#[derive(Debug, Clone)]
pub struct Stabilizer {
    pub component_size: usize,
    pub edge_count: usize,
    pub loops: Vec<Witness>,
}

pub fn stabilizer_generators(moves: &MoveSet, c: &CyclicWord, vertex_cap: usize) -> Result<Stabilizer, AlgoError> {
    let comp = level_component(moves, c, vertex_cap)?;
    let tree: BTreeSet<(usize, usize)> = comp
        .parent
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|(u, m)| (u, m).min((v, moves.inverse_index(m)))))
        .collect();
    let topo = comp.topological_edges(moves);
    let mut loops = Vec::new();
    for &(u, m) in topo.difference(&tree) {
        let to_u = comp.path_from_root(moves, u);
        let step = Witness::from_moves(moves, &comp.vertices[u], [(m, false)]);
        let v = comp.index_of(&step.target).expect("edge stays in component");
        let back = comp.path_from_root(moves, v).reversed(moves);
        loops.push(to_u.then(step).then(back));
    }
    Ok(Stabilizer {
        component_size: comp.len(),
        edge_count: topo.len(),
        loops,
    })
}
