//! Revenue allocation for music-streaming subscription problems.
//!
//! Artists are paid from the subscription fees of users according to a
//! popularity index computed from the stream-count matrix. The crate
//! computes pro-rata, user-centric and weighted allocations on exact
//! rationals, checks the allocation axioms on concrete instances, builds
//! the associated coalitional game and claims problems, and decides core
//! membership two independent ways.

pub mod axioms;
pub mod claims;
pub mod flow;
pub mod game;
pub mod indices;
pub mod io;
pub mod problem;
pub mod rational;

pub use axioms::{
    axiom_matrix, search_witness, Axiom, AxiomMatrix, AxiomVerdict, ProblemGenerator,
};
pub use claims::{BankruptcyProblem, BankruptcyRule, MultiIssueClaims};
pub use game::{CoalitionalGame, CoreDecomposition};
pub use indices::{
    counterexample_index, pro_rata_index, rewards, user_centric_index, weighted_index, Allocation,
    BandedWeightParams, Counterexample, Index, IndexError, IndexValues, WeightSystem,
};
pub use io::{parse_problem, serialize_problem, Format, ParseError};
pub use problem::{merge_problems, ProblemError, StreamingProblem};
pub use rational::Rational;
