use thiserror::Error;

use crate::term::Predicate;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("predicate {0} has no defining clauses")]
    UndefinedPredicate(Predicate),
    #[error("query predicate {0} is not defined by the program")]
    UnknownQueryPredicate(Predicate),
    #[error("source predicate {0} clashes with the magic_ namespace")]
    NameClash(Predicate),
    #[error("expected an atom of {expected}, got {found}")]
    PredicateMismatch { expected: Predicate, found: String },
    #[error("the magic predicate for {0} was pruned; no seed is needed")]
    NoSeed(Predicate),
    #[error("depth bound must be at least 1")]
    InvalidDepth,
    #[error("clause {0} lacks the provenance required for indexing")]
    MissingProvenance(u32),
    #[error("abstract query has {found} markers but {predicate} has arity {}", predicate.arity)]
    AdornmentArity { predicate: Predicate, found: usize },
    #[error("invalid pipeline: {0}")]
    InvalidPipeline(String),
}

pub type Result<T> = std::result::Result<T, Error>;
