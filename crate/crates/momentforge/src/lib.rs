//! Symmetry-adapted semidefinite (moment) relaxations for noncommutative
//! polynomial optimization.
//!
//! The pipeline: describe an operator algebra as a finitely generated
//! `*`-monoid with degree-2 rewrite rules ([`rewrite`]), attach an evaluation
//! structure and a signed-permutation symmetry group ([`evaluation`],
//! [`symmetry`]), then build the moment matrix over a generating basis and
//! assemble a block-diagonal semidefinite program ([`relaxation`]) that can be
//! solved in process ([`solver`]) or exported ([`export`]). Problems are
//! described in a small text format ([`dsl`]) consumed by the `momentforge`
//! command-line tool.

pub mod algebra;
pub mod dsl;
pub mod evaluation;
pub mod export;
pub mod pipeline;
pub mod relaxation;
pub mod rewrite;
pub mod solver;
pub mod symmetry;

pub use algebra::{Alphabet, Letter, Polynomial, Sign, SignedWord, Word};
pub use dsl::{parse_problem, print_problem, ParseError, ProblemDefinition, ProblemOptions};
pub use evaluation::{canonical, ClosureError, EvaluationRules};
pub use export::{read_sdpa_sparse, write_sdpa_sparse, write_structured, SdpaReadError};
pub use pipeline::{build_problem, BuiltRelaxation, PipelineError, SymmetryMode};
pub use relaxation::{
    assemble_sdp, build_relaxation, split_order2, BlockSdp, GeneratingBasis, MomentRelaxation,
    RelaxError, RelaxOptions, SparseSymMat,
};
pub use rewrite::{ConfluenceReport, RewriteError, RewriteSystem, RewriteSystemBuilder, RuleCode};
pub use solver::{check_psd, solve, Solution, SolverError, SolverOptions, SolverStatus};
pub use symmetry::{symmetry_subgroup, GeneralizedPermutation, GroupError, PermGroup};
