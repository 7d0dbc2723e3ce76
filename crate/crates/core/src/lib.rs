//! Magic templates compilation and bottom-up evaluation of definite-clause
//! grammars.
//!
//! The usual route is [`pipeline::compile`] followed by [`engine::evaluate`]
//! with the seed built by [`MagicProgram::make_seed`].

pub mod diagnose;
pub mod engine;
pub mod error;
pub mod magic;
pub mod optimize;
pub mod pipeline;
pub mod program;
pub mod syntax;
pub mod term;
pub mod trim;

pub use diagnose::{analyze_duplicates, DependencyReport, DuplicateGroup};
pub use engine::{answers, evaluate, trace, Chart, Derivation, DerivationTree, EvalConfig, EvalError, Fact, FactId, Limit, Strategy};
pub use error::{Error, Result};
pub use magic::{lexical_only_transform, magic_transform, prune_lexical_magic, CompileMode, MagicProgram, PredInfo};
pub use pipeline::{compile, Optimization, PipelineSpec};
pub use program::{AbstractQuery, Binding, Clause, ClauseId, Program, Provenance, Role};
pub use syntax::{parse_mode, parse_program, parse_query, print_program};
pub use term::{rename_apart, restrict, subsumes, unify, variant, Predicate, Substitution, Term, Unifier, Var};
pub use optimize::{add_indexing, abstract_fixpoint, abstract_seed, remove_cycles, unfold_magic, AbstractFixpoint, AbstractSeed, IndexScope};
pub use trim::adorn_and_trim;

/// Example grammars shipped with the crate.
pub mod fixtures {
    /// Head-recursive grammar ordered for generation.
    pub const GRAMMAR: &str = include_str!("../fixtures/grammar.gr");
    /// The same grammar ordered for parsing.
    pub const PARSE_GRAMMAR: &str = include_str!("../fixtures/parse-grammar.gr");
    /// Compiled grammar whose magic rule ignores the dependency it follows.
    pub const SCHEMATIC: &str = include_str!("../fixtures/schematic.gr");
    /// Expected output of pruning and trimming `GRAMMAR` for `sentence(f,f,b)`.
    pub const V1_GOLDEN: &str = include_str!("../fixtures/v1.golden.gr");
    /// Expected output of the full optimization pipeline.
    pub const V2_GOLDEN: &str = include_str!("../fixtures/v2.golden.gr");
}

pub use fixtures::*;
