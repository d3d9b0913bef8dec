//! Marked graphs, Γ-based chains, closing path systems and the translation of
//! closed edge paths into conjugacy classes.

use std::collections::{HashMap, VecDeque};

use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsmc::{rat, FsmcError, RationalChain};
use crate::word::{Alphabet, CyclicWord, Letter, WordError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("unknown edge {0:?}")]
    UnknownEdge(String),
    #[error("duplicate edge id {0:?}")]
    DuplicateEdge(String),
    #[error("edge {0:?}: inversion must be a fixed-point-free involution reversing endpoints")]
    BadInversion(String),
    #[error("graph is not connected")]
    NotConnected,
    #[error("invalid spanning tree: {0}")]
    Tree(String),
    #[error("invalid letter edges: {0}")]
    Letters(String),
    #[error("first Betti number {0} is outside the supported rank range")]
    Rank(usize),
    #[error("no closing path from {from:?} to {to:?}")]
    NoClosingPath { from: String, to: String },
    #[error("path is not reduced")]
    NotReduced,
    #[error("path is not closed")]
    NotClosed,
    #[error("path is empty")]
    EmptyPath,
    #[error("closed path represents the trivial class")]
    Degenerate,
    #[error("chain is not Γ-based: {0:?}")]
    NotGammaBased(Vec<String>),
    #[error("preset {0:?} is not available for rank {1}")]
    Preset(String, usize),
    #[error("invalid graph file: {0}")]
    File(String),
    #[error(transparent)]
    Chain(#[from] FsmcError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// On-disk graph format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    pub base: String,
    pub tree_edges: Vec<String>,
    pub letter_edges: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub inv: String,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub inv: usize,
    pub from: usize,
    pub to: usize,
}

/// A finite connected graph with a marking given by a spanning tree and an
/// ordered list of non-tree edges identified with the basis letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    base: usize,
    in_tree: Vec<bool>,
    letter: Vec<Option<Letter>>,
    rank: usize,
    warnings: Vec<String>,
}

impl MarkedGraph {
    pub fn from_file(file: &GraphFile) -> Result<Self, GraphError> {
        let vindex: HashMap<&str, usize> = file.vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let vertex = |name: &str| {
            vindex
                .get(name)
                .copied()
                .ok_or_else(|| GraphError::UnknownVertex(name.into()))
        };
        let mut eindex: HashMap<&str, usize> = HashMap::new();
        for (i, e) in file.edges.iter().enumerate() {
            if eindex.insert(e.id.as_str(), i).is_some() {
                return Err(GraphError::DuplicateEdge(e.id.clone()));
            }
        }
        let edge = |name: &str| {
            eindex
                .get(name)
                .copied()
                .ok_or_else(|| GraphError::UnknownEdge(name.into()))
        };
        let edges = file
            .edges
            .iter()
            .map(|e| {
                Ok(Edge {
                    id: e.id.clone(),
                    inv: edge(&e.inv)?,
                    from: vertex(&e.from)?,
                    to: vertex(&e.to)?,
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        for (i, e) in edges.iter().enumerate() {
            let r = &edges[e.inv];
            if e.inv == i || r.inv != i || r.from != e.to || r.to != e.from {
                return Err(GraphError::BadInversion(e.id.clone()));
            }
        }
        let nv = file.vertices.len();
        let base = vertex(&file.base)?;

        let mut in_tree = vec![false; edges.len()];
        for t in &file.tree_edges {
            let i = edge(t)?;
            in_tree[i] = true;
            in_tree[edges[i].inv] = true;
        }
        let tree_pairs = in_tree.iter().filter(|&&x| x).count() / 2;
        if tree_pairs + 1 != nv {
            return Err(GraphError::Tree(format!("{tree_pairs} edge pairs for {nv} vertices")));
        }
        // a tree with V-1 edges spanning all vertices is acyclic
        let reach = |use_edge: &dyn Fn(usize) -> bool| {
            let mut seen = vec![false; nv];
            seen[base] = true;
            let mut stack = vec![base];
            while let Some(v) = stack.pop() {
                for (i, e) in edges.iter().enumerate() {
                    if e.from == v && use_edge(i) && !seen[e.to] {
                        seen[e.to] = true;
                        stack.push(e.to);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        if !reach(&|_| true) {
            return Err(GraphError::NotConnected);
        }
        if !reach(&|i| in_tree[i]) {
            return Err(GraphError::Tree("tree edges do not span the graph".into()));
        }

        let mut letter = vec![None; edges.len()];
        for (k, name) in file.letter_edges.iter().enumerate() {
            let i = edge(name)?;
            if in_tree[i] {
                return Err(GraphError::Letters(format!("{name:?} is a tree edge")));
            }
            if letter[i].is_some() {
                return Err(GraphError::Letters(format!("{name:?} listed twice")));
            }
            letter[i] = Some(Letter::new(k + 1, false));
            letter[edges[i].inv] = Some(Letter::new(k + 1, true));
        }
        if let Some(i) = (0..edges.len()).find(|&i| !in_tree[i] && letter[i].is_none()) {
            return Err(GraphError::Letters(format!(
                "non-tree edge {:?} has no letter",
                edges[i].id
            )));
        }
        let rank = file.letter_edges.len();
        if edges.len() / 2 + 1 != nv + rank {
            return Err(GraphError::Letters(
                "letter count differs from the first Betti number".into(),
            ));
        }
        Alphabet::new(rank).map_err(|_| GraphError::Rank(rank))?;

        let mut warnings = Vec::new();
        for (v, name) in file.vertices.iter().enumerate() {
            let d = edges.iter().filter(|e| e.from == v).count();
            if d < 3 {
                warnings.push(format!("vertex {name:?} has degree {d} < 3"));
            }
        }
        if edges.len() > 6 * rank {
            warnings.push(format!("{} oriented edges exceed 6N = {}", edges.len(), 6 * rank));
        }
        Ok(MarkedGraph {
            vertices: file.vertices.clone(),
            edges,
            base,
            in_tree,
            letter,
            rank,
            warnings,
        })
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        let file: GraphFile = serde_json::from_str(s).map_err(|e| GraphError::File(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> GraphFile {
        let mut tree_edges = Vec::new();
        let mut letter_edges = vec![String::new(); self.rank];
        for (i, e) in self.edges.iter().enumerate() {
            if self.in_tree[i] && i < e.inv {
                tree_edges.push(e.id.clone());
            }
            if let Some(l) = self.letter[i].filter(|l| !l.is_inverse()) {
                letter_edges[l.index() - 1] = e.id.clone();
            }
        }
        GraphFile {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    id: e.id.clone(),
                    inv: self.edges[e.inv].id.clone(),
                    from: self.vertices[e.from].clone(),
                    to: self.vertices[e.to].clone(),
                })
                .collect(),
            base: self.vertices[self.base].clone(),
            tree_edges,
            letter_edges,
        }
    }

    /// The `N`-rose: one vertex, edge index equal to the letter code.
    pub fn rose(rank: usize) -> Result<Self, GraphError> {
        let alphabet = Alphabet::new(rank)?;
        let edges = alphabet
            .letters()
            .map(|l| EdgeSpec {
                id: l.to_char().to_string(),
                inv: l.inverse().to_char().to_string(),
                from: "x0".into(),
                to: "x0".into(),
            })
            .collect();
        Self::from_file(&GraphFile {
            vertices: vec!["x0".into()],
            edges,
            base: "x0".into(),
            tree_edges: vec![],
            letter_edges: (1..=rank)
                .map(|i| Letter::new(i, false).to_char().to_string())
                .collect(),
        })
    }

    /// Fan of lollipops: stems `e_i` from the center to `y_i`, loops `f_i` at `y_i` marked `a_i`.
    pub fn lollipop(rank: usize) -> Result<Self, GraphError> {
        let mut vertices = vec!["x0".to_string()];
        let mut edges = Vec::new();
        for i in 1..=rank {
            let y = format!("y{i}");
            vertices.push(y.clone());
            let pair = |id: &str, inv: &str, from: &str, to: &str| {
                [
                    EdgeSpec {
                        id: id.into(),
                        inv: inv.into(),
                        from: from.into(),
                        to: to.into(),
                    },
                    EdgeSpec {
                        id: inv.into(),
                        inv: id.into(),
                        from: to.into(),
                        to: from.into(),
                    },
                ]
            };
            edges.extend(pair(&format!("e{i}"), &format!("E{i}"), "x0", &y));
            edges.extend(pair(&format!("f{i}"), &format!("F{i}"), &y, &y));
        }
        Self::from_file(&GraphFile {
            vertices,
            edges,
            base: "x0".into(),
            tree_edges: (1..=rank).map(|i| format!("e{i}")).collect(),
            letter_edges: (1..=rank).map(|i| format!("f{i}")).collect(),
        })
    }

    /// Theta graph: two vertices joined by a tree edge `t` and letter edges `a1..aN`.
    pub fn theta(rank: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        let mut names = vec![("t".to_string(), "T".to_string())];
        names.extend((1..=rank).map(|i| (format!("a{i}"), format!("A{i}"))));
        for (id, inv) in &names {
            edges.push(EdgeSpec {
                id: id.clone(),
                inv: inv.clone(),
                from: "u".into(),
                to: "v".into(),
            });
            edges.push(EdgeSpec {
                id: inv.clone(),
                inv: id.clone(),
                from: "v".into(),
                to: "u".into(),
            });
        }
        Self::from_file(&GraphFile {
            vertices: vec!["u".into(), "v".into()],
            edges,
            base: "u".into(),
            tree_edges: vec!["t".into()],
            letter_edges: (1..=rank).map(|i| format!("a{i}")).collect(),
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.rank).expect("rank validated on construction")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn inv(&self, e: usize) -> usize {
        self.edges[e].inv
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn is_tree_edge(&self, e: usize) -> bool {
        self.in_tree[e]
    }

    pub fn letter(&self, e: usize) -> Option<Letter> {
        self.letter[e]
    }

    /// Degree and edge-count warnings found during validation.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_rose(&self) -> bool {
        self.vertices.len() == 1 && (0..self.edges.len()).all(|i| self.letter[i].map(|l| l.code() as usize) == Some(i))
    }

    /// `ee'` is a reduced length-2 path.
    pub fn follows(&self, e: usize, next: usize) -> bool {
        self.edges[e].to == self.edges[next].from && next != self.edges[e].inv
    }

    pub fn is_reduced_path(&self, path: &[usize]) -> bool {
        path.iter().all(|&e| e < self.edges.len()) && path.windows(2).all(|w| self.follows(w[0], w[1]))
    }

    pub fn is_closed(&self, path: &[usize]) -> bool {
        match (path.first(), path.last()) {
            (Some(&f), Some(&l)) => self.edges[l].to == self.edges[f].from,
            _ => false,
        }
    }

    /// Reversed path of inverse edges.
    pub fn inverse_path(&self, path: &[usize]) -> Vec<usize> {
        path.iter().rev().map(|&e| self.edges[e].inv).collect()
    }

    /// All reduced edge paths of length exactly `k`, in lexicographic edge order.
    pub fn reduced_paths(&self, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        let mut out: Vec<Vec<usize>> = (0..self.edges.len()).map(|e| vec![e]).collect();
        for _ in 1..k {
            out = out
                .into_iter()
                .flat_map(|p| {
                    let last = *p.last().unwrap();
                    (0..self.edges.len())
                        .filter(move |&e| self.follows(last, e))
                        .map(move |e| {
                            let mut q = p.clone();
                            q.push(e);
                            q
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        out
    }

    fn single_char_names(&self) -> bool {
        self.edges.iter().all(|e| e.id.chars().count() == 1)
    }

    /// Edge names concatenated (single-character ids) or dot-separated.
    pub fn path_name(&self, path: &[usize]) -> String {
        let sep = if self.single_char_names() { "" } else { "." };
        path.iter()
            .map(|&e| self.edges[e].id.as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn parse_path(&self, s: &str) -> Result<Vec<usize>, GraphError> {
        let lookup = |t: &str| self.edge_index(t).ok_or_else(|| GraphError::UnknownEdge(t.into()));
        if self.single_char_names() && !s.contains(['.', ' ']) {
            s.chars().map(|c| lookup(&c.to_string())).collect()
        } else {
            s.split(['.', ' ']).filter(|t| !t.is_empty()).map(lookup).collect()
        }
    }

    /// Letters read off the non-tree edges of `path`, in order.
    pub fn read_letters(&self, path: &[usize]) -> Vec<Letter> {
        path.iter().filter_map(|&e| self.letter[e]).collect()
    }

    /// Conjugacy class represented by a closed path.
    pub fn path_to_class(&self, path: &[usize]) -> Result<CyclicWord, GraphError> {
        if path.is_empty() {
            return Err(GraphError::EmptyPath);
        }
        if !self.is_closed(path) {
            return Err(GraphError::NotClosed);
        }
        CyclicWord::from_letters(&self.read_letters(path)).map_err(|_| GraphError::Degenerate)
    }

    /// Maximal cyclic reduction of a reduced closed path.
    pub fn cyclic_reduction<'a>(&self, path: &'a [usize]) -> &'a [usize] {
        let (mut i, mut j) = (0, path.len());
        while j > i + 1 && path[i] == self.edges[path[j - 1]].inv {
            i += 1;
            j -= 1;
        }
        &path[i..j]
    }
}

/// Connector paths `β_{e,e'}` with `e β e'` reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosingSystem {
    table: Vec<Vec<Vec<usize>>>,
    max_len: usize,
}

/// Shortest reduced paths (ties broken by edge order) from `t(e)` to `o(e')`
/// avoiding `e^{-1}` first and `e'^{-1}` last.
pub fn build_closing_system(g: &MarkedGraph) -> Result<ClosingSystem, GraphError> {
    let m = g.edge_count();
    let mut table = vec![vec![Vec::new(); m]; m];
    let mut max_len = 0;
    for e in 0..m {
        // BFS over (vertex, last edge) states, starting from "just traversed e".
        let mut parent: Vec<Option<usize>> = vec![None; m];
        let mut seen = vec![false; m];
        seen[e] = true;
        let mut queue = VecDeque::from([e]);
        let mut found: Vec<Option<usize>> = vec![None; m];
        let mut remaining = m;
        while let Some(last) = queue.pop_front() {
            for (target, slot) in found.iter_mut().enumerate() {
                if slot.is_none() && g.follows(last, target) {
                    *slot = Some(last);
                    remaining -= 1;
                }
            }
            if remaining == 0 {
                break;
            }
            for x in 0..m {
                if !seen[x] && g.follows(last, x) {
                    seen[x] = true;
                    parent[x] = Some(last);
                    queue.push_back(x);
                }
            }
        }
        for (target, slot) in found.iter().enumerate() {
            let Some(mut last) = *slot else {
                return Err(GraphError::NoClosingPath {
                    from: g.edge(e).id.clone(),
                    to: g.edge(target).id.clone(),
                });
            };
            let mut beta = Vec::new();
            while last != e {
                beta.push(last);
                last = parent[last].expect("BFS tree leads back to the start edge");
            }
            beta.reverse();
            max_len = max_len.max(beta.len());
            table[e][target] = beta;
        }
    }
    Ok(ClosingSystem { table, max_len })
}

impl ClosingSystem {
    pub fn beta(&self, e: usize, next: usize) -> &[usize] {
        &self.table[e][next]
    }

    /// `C = max |β|`.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// `path · β_{last, first}`, a reduced and cyclically reduced closed path.
    pub fn hat(&self, g: &MarkedGraph, path: &[usize]) -> Result<Vec<usize>, GraphError> {
        let (&first, &last) = path.first().zip(path.last()).ok_or(GraphError::EmptyPath)?;
        if !g.is_reduced_path(path) {
            return Err(GraphError::NotReduced);
        }
        let mut out = path.to_vec();
        out.extend_from_slice(self.beta(last, first));
        Ok(out)
    }

    /// Cyclic reduction when `path` is closed, the hat closing otherwise.
    pub fn breve(&self, g: &MarkedGraph, path: &[usize]) -> Result<Vec<usize>, GraphError> {
        if path.is_empty() {
            return Err(GraphError::EmptyPath);
        }
        if !g.is_reduced_path(path) {
            return Err(GraphError::NotReduced);
        }
        if g.is_closed(path) {
            Ok(g.cyclic_reduction(path).to_vec())
        } else {
            self.hat(g, path)
        }
    }
}

/// Positive transitions that violate the Γ-based conditions.
pub fn validate_gamma_based(chain: &RationalChain, g: &MarkedGraph) -> Vec<String> {
    let mut violations = Vec::new();
    if chain.len() < 2 {
        violations.push("fewer than two states".to_string());
    }
    let edge: Vec<Option<usize>> = chain.states().iter().map(|s| g.edge_index(s)).collect();
    for (s, e) in edge.iter().enumerate() {
        if e.is_none() {
            violations.push(format!("state {:?} is not an edge", chain.states()[s]));
        }
    }
    for s in 0..chain.len() {
        for t in chain.successors(s) {
            if let (Some(e), Some(f)) = (edge[s], edge[t]) {
                if g.edge(e).to != g.edge(f).from {
                    violations.push(format!("{} -> {}: endpoints do not match", g.edge(e).id, g.edge(f).id));
                } else if f == g.inv(e) {
                    violations.push(format!("{} -> {}: backtracking", g.edge(e).id, g.edge(f).id));
                }
            }
        }
    }
    violations
}

/// A validated Γ-based chain with its graph.
#[derive(Debug, Clone)]
pub struct GammaChain {
    pub graph: MarkedGraph,
    pub chain: RationalChain,
    state_edge: Vec<usize>,
    edge_state: Vec<Option<usize>>,
}

impl GammaChain {
    pub fn new(graph: MarkedGraph, chain: RationalChain) -> Result<Self, GraphError> {
        let violations = validate_gamma_based(&chain, &graph);
        if !violations.is_empty() {
            return Err(GraphError::NotGammaBased(violations));
        }
        let state_edge: Vec<usize> = chain.states().iter().map(|s| graph.edge_index(s).unwrap()).collect();
        let mut edge_state = vec![None; graph.edge_count()];
        for (s, &e) in state_edge.iter().enumerate() {
            edge_state[e] = Some(s);
        }
        Ok(GammaChain {
            graph,
            chain,
            state_edge,
            edge_state,
        })
    }

    pub fn state_edge(&self, s: usize) -> usize {
        self.state_edge[s]
    }

    pub fn edge_state(&self, e: usize) -> Option<usize> {
        self.edge_state[e]
    }

    /// For each state, the state of the reversed edge if present.
    pub fn state_inverses(&self) -> Vec<Option<usize>> {
        self.state_edge
            .iter()
            .map(|&e| self.edge_state[self.graph.inv(e)])
            .collect()
    }

    /// Edge path to chain states; `None` if some edge is not a state.
    pub fn states_of(&self, path: &[usize]) -> Option<Vec<usize>> {
        path.iter().map(|&e| self.edge_state[e]).collect()
    }

    /// Product of transition probabilities along a closed path and back to its start.
    pub fn cyclic_path_positive(&self, path: &[usize]) -> bool {
        let Some(states) = self.states_of(path) else {
            return false;
        };
        let n = states.len();
        n > 0 && (0..n).all(|i| self.chain.p(states[i], states[(i + 1) % n]).is_positive())
    }
}

/// Named chain presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Uniform non-backtracking chain on the rose.
    RoseUniform,
    /// Positive-letter chain on the 2-rose with rows `[[3/4, 1/4], [1/3, 2/3]]`.
    RosePositive,
    /// Fan of lollipops.
    Lollipop,
    /// Uniform non-backtracking chain on the theta graph, all edges as states.
    Theta,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::RoseUniform,
        Preset::RosePositive,
        Preset::Lollipop,
        Preset::Theta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::RoseUniform => "rose2",
            Preset::RosePositive => "rose-positive",
            Preset::Lollipop => "lollipop",
            Preset::Theta => "theta",
        }
    }

    pub fn parse(s: &str) -> Option<Preset> {
        match s {
            "rose" | "rose2" | "rose-uniform" => Some(Preset::RoseUniform),
            _ => Preset::ALL.into_iter().find(|p| p.name() == s),
        }
    }

    pub fn build(self, rank: usize) -> Result<GammaChain, GraphError> {
        match self {
            Preset::RoseUniform => uniform_nb_chain(MarkedGraph::rose(rank)?, None),
            Preset::RosePositive => {
                if rank != 2 {
                    return Err(GraphError::Preset(self.name().into(), rank));
                }
                positive_rose_chain(&[vec![rat(3, 4), rat(1, 4)], vec![rat(1, 3), rat(2, 3)]])
            }
            Preset::Lollipop => lollipop_chain(rank),
            Preset::Theta => uniform_nb_chain(MarkedGraph::theta(rank)?, None),
        }
    }
}

/// Uniform transitions over reduced continuations among `states` (all edges by default).
pub fn uniform_nb_chain(g: MarkedGraph, states: Option<&[usize]>) -> Result<GammaChain, GraphError> {
    let states: Vec<usize> = states
        .map(|s| s.to_vec())
        .unwrap_or_else(|| (0..g.edge_count()).collect());
    let rows = states
        .iter()
        .map(|&e| {
            let next: Vec<bool> = states.iter().map(|&f| g.follows(e, f)).collect();
            let k = next.iter().filter(|&&x| x).count() as i64;
            next.into_iter()
                .map(|x| if x { rat(1, k) } else { rat(0, 1) })
                .collect()
        })
        .collect();
    let names = states.iter().map(|&e| g.edge(e).id.clone()).collect();
    let chain = RationalChain::new(names, rows)?;
    GammaChain::new(g, chain)
}

/// Chain on the positive letters of the rose with the given transition rows.
pub fn positive_rose_chain(rows: &[Vec<BigRational>]) -> Result<GammaChain, GraphError> {
    let rank = rows.len();
    let g = MarkedGraph::rose(rank)?;
    let names = (1..=rank)
        .map(|i| Letter::new(i, false).to_char().to_string())
        .collect();
    let chain = RationalChain::new(names, rows.to_vec())?;
    GammaChain::new(g, chain)
}

/// Lollipop chain on `S = EΓ − {f_i^{-1}}`: `e_i → f_i`, `f_i → f_i | e_i^{-1}`
/// with probability 1/2 each, `e_i^{-1} → e_j` uniformly over `j ≠ i`.
pub fn lollipop_chain(rank: usize) -> Result<GammaChain, GraphError> {
    let g = MarkedGraph::lollipop(rank)?;
    let states: Vec<usize> = (0..g.edge_count())
        .filter(|&e| !g.edge(e).id.starts_with('F'))
        .collect();
    let pos = |id: &str| states.iter().position(|&e| g.edge(e).id == id).unwrap();
    let mut rows = vec![vec![rat(0, 1); states.len()]; states.len()];
    for i in 1..=rank {
        rows[pos(&format!("e{i}"))][pos(&format!("f{i}"))] = rat(1, 1);
        rows[pos(&format!("f{i}"))][pos(&format!("f{i}"))] = rat(1, 2);
        rows[pos(&format!("f{i}"))][pos(&format!("E{i}"))] = rat(1, 2);
        for j in (1..=rank).filter(|&j| j != i) {
            rows[pos(&format!("E{i}"))][pos(&format!("e{j}"))] = rat(1, rank as i64 - 1);
        }
    }
    let names = states.iter().map(|&e| g.edge(e).id.clone()).collect();
    let chain = RationalChain::new(names, rows)?;
    GammaChain::new(g, chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rose_structure() {
        let g = MarkedGraph::rose(2).unwrap();
        assert!(g.is_rose());
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.inv(0), 1);
        assert!(g.warnings().is_empty());
        let file = g.to_file();
        assert_eq!(MarkedGraph::from_file(&file).unwrap(), g);
        assert_eq!(g.reduced_paths(2).len(), 12);
    }

    #[test]
    fn rose_closing_system() {
        let g = MarkedGraph::rose(2).unwrap();
        let b = build_closing_system(&g).unwrap();
        assert!(b.beta(0, 2).is_empty());
        assert!(b.beta(0, 0).is_empty());
        let beta = b.beta(0, 1);
        assert_eq!(beta.len(), 1);
        assert!(beta[0] == 2 || beta[0] == 3);
        assert_eq!(b.max_len(), 1);
        let ab = g.parse_path("ab").unwrap();
        assert_eq!(b.hat(&g, &ab).unwrap(), ab);
        assert_eq!(b.breve(&g, &g.parse_path("abA").unwrap()).unwrap(), vec![2]);
    }

    #[test]
    fn lollipop_marking() {
        let gc = Preset::Lollipop.build(2).unwrap();
        let g = &gc.graph;
        assert_eq!(g.rank(), 2);
        assert_eq!(g.warnings().len(), 1);
        let f1 = g.parse_path("f1").unwrap();
        assert_eq!(g.path_to_class(&f1).unwrap().to_string(), "a");
        let tree = g.parse_path("e1.E1").unwrap();
        assert!(!g.is_reduced_path(&tree));
        let b = build_closing_system(g).unwrap();
        for e in 0..g.edge_count() {
            for f in 0..g.edge_count() {
                let mut p = vec![e];
                p.extend_from_slice(b.beta(e, f));
                p.push(f);
                assert!(g.is_reduced_path(&p));
                assert!(b.beta(e, f).len() <= g.edge_count());
            }
        }
        assert!(!gc.chain.is_tight());
        assert!(gc.chain.is_irreducible());
    }

    #[test]
    fn tree_only_path_is_degenerate() {
        let g = MarkedGraph::theta(2).unwrap();
        // t then a1 inverse is a closed loop reading A1; t alone is not closed
        let p = g.parse_path("t.A1").unwrap();
        assert_eq!(g.path_to_class(&p).unwrap().to_string(), "A");
        assert_eq!(g.path_to_class(&g.parse_path("t").unwrap()), Err(GraphError::NotClosed));
        let lolli = MarkedGraph::lollipop(2).unwrap();
        let mut file = lolli.to_file();
        file.letter_edges.pop();
        assert!(MarkedGraph::from_file(&file).is_err());
    }

    #[test]
    fn gamma_based_validation() {
        for p in Preset::ALL {
            let gc = p.build(2).unwrap();
            assert!(validate_gamma_based(&gc.chain, &gc.graph).is_empty(), "{p:?}");
        }
        let g = MarkedGraph::rose(2).unwrap();
        let names = ["a", "A", "b", "B"].map(String::from).to_vec();
        let row = vec![rat(1, 4); 4];
        let chain = RationalChain::new(names, vec![row; 4]).unwrap();
        let v = validate_gamma_based(&chain, &g);
        assert!(v.iter().any(|s| s.contains("backtracking")));
    }
}
