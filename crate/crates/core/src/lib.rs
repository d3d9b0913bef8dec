//! Whitehead's algorithm on free groups and the machinery used to study its
//! generic-case behavior: exact word and move arithmetic, the minimization,
//! stabilization and equivalence procedures, `(M, λ, ε)`-minimality detectors,
//! finite-state Markov chains, graph-based word samplers and finite-depth
//! geodesic-current tables.

pub mod algo;
pub mod currents;
pub mod fsmc;
pub mod graph;
pub mod minimality;
pub mod moves;
pub mod walks;
pub mod word;

pub use moves::{enumerate_moves, Move, MoveError, MoveKind, MoveSet, Tag};
pub use word::{
    canonical_rotation, cyclic_reduce, free_reduce, occurrences_cyclic, occurrences_symmetrized, Alphabet, CyclicWord,
    Letter, Word, WordError,
};
