//! In-memory definite-clause programs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::term::{self, Named, Predicate, Term};

pub type ClauseId = u32;

/// What a compiled clause was derived from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Role {
    /// The source rule with its guard added.
    Modified,
    /// The magic rule for body literal `literal` (1-based) of the source rule.
    Magic { literal: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub source: ClauseId,
    pub role: Role,
    /// Magic clauses unfolded into this one, in order.
    pub unfolded: Vec<ClauseId>,
}

impl Provenance {
    pub fn modified(source: ClauseId) -> Self {
        Provenance { source, role: Role::Modified, unfolded: Vec::new() }
    }

    pub fn magic(source: ClauseId, literal: usize) -> Self {
        Provenance { source, role: Role::Magic { literal }, unfolded: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub id: ClauseId,
    pub head: Term,
    pub body: Vec<Term>,
    pub provenance: Option<Provenance>,
}

impl Clause {
    pub fn new(id: ClauseId, head: Term, body: Vec<Term>) -> Self {
        Clause { id, head, body, provenance: None }
    }

    pub fn is_unit(&self) -> bool {
        self.body.is_empty()
    }

    pub fn predicate(&self) -> Predicate {
        self.head.predicate().expect("clause head is an atom")
    }

    /// Consistent fresh renaming of the whole clause.
    pub fn rename_apart(&self) -> Clause {
        let mut fresh = HashMap::new();
        Clause {
            id: self.id,
            head: term::rename_with(&self.head, &mut fresh),
            body: self.body.iter().map(|b| term::rename_with(b, &mut fresh)).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Head and body as one compound, convenient for variant comparison.
    pub fn as_term(&self) -> Term {
        let mut args = vec![self.head.clone()];
        args.extend(self.body.iter().cloned());
        Term::app(":-", args)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = term::name_vars(std::iter::once(&self.head).chain(self.body.iter()));
        write!(f, "{}", Named { term: &self.head, names: &names })?;
        for (i, b) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            write!(f, "{}", Named { term: b, names: &names })?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Binding {
    Bound,
    Free,
}

/// Intended input pattern of a query: one bound/free marker per argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractQuery {
    pub predicate: Predicate,
    pub adornment: Vec<Binding>,
}

impl AbstractQuery {
    pub fn new(predicate: Predicate, adornment: Vec<Binding>) -> Result<Self> {
        if adornment.len() != predicate.arity {
            return Err(Error::AdornmentArity { predicate, found: adornment.len() });
        }
        Ok(AbstractQuery { predicate, adornment })
    }

    /// Marks a position bound exactly when the query argument is ground.
    pub fn from_query(query: &Term) -> Option<Self> {
        let predicate = query.predicate()?;
        let adornment = query
            .args()
            .iter()
            .map(|a| if a.is_ground() { Binding::Bound } else { Binding::Free })
            .collect();
        Some(AbstractQuery { predicate, adornment })
    }

    pub fn bound_positions(&self) -> Vec<usize> {
        (0..self.adornment.len()).filter(|&i| self.adornment[i] == Binding::Bound).collect()
    }
}

impl fmt::Display for AbstractQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate.name)?;
        if !self.adornment.is_empty() {
            f.write_str("(")?;
            for (i, b) in self.adornment.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(if *b == Binding::Bound { "b" } else { "f" })?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Ordered clauses plus the mode directives that came with them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    clauses: Vec<Clause>,
    by_predicate: BTreeMap<Predicate, Vec<ClauseId>>,
    pub modes: Vec<AbstractQuery>,
}

impl Program {
    pub fn new(clauses: Vec<Clause>) -> Self {
        let mut p = Program { clauses, by_predicate: BTreeMap::new(), modes: Vec::new() };
        p.reindex();
        p
    }

    fn reindex(&mut self) {
        self.by_predicate.clear();
        for c in &self.clauses {
            self.by_predicate.entry(c.predicate()).or_default().push(c.id);
        }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn into_clauses(self) -> Vec<Clause> {
        self.clauses
    }

    /// Rebuilds the program from new clauses, keeping the mode directives.
    pub fn with_clauses(&self, clauses: Vec<Clause>) -> Program {
        let mut p = Program::new(clauses);
        p.modes = self.modes.clone();
        p
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn clause(&self, id: ClauseId) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn defining(&self, pred: &Predicate) -> impl Iterator<Item = &Clause> {
        let ids = self.by_predicate.get(pred).cloned().unwrap_or_default();
        self.clauses.iter().filter(move |c| ids.contains(&c.id))
    }

    pub fn is_defined(&self, pred: &Predicate) -> bool {
        self.by_predicate.contains_key(pred)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.by_predicate.keys()
    }

    /// True iff `pred` occurs in some head or body.
    pub fn mentions(&self, pred: &Predicate) -> bool {
        self.clauses.iter().any(|c| {
            std::iter::once(&c.head)
                .chain(c.body.iter())
                .any(|a| a.predicate().as_ref() == Some(pred))
        })
    }

    /// A lexical predicate is one defined only by unit clauses.
    pub fn is_lexical(&self, pred: &Predicate) -> Result<bool> {
        let mut defining = self.defining(pred).peekable();
        if defining.peek().is_none() {
            return Err(Error::UndefinedPredicate(pred.clone()));
        }
        Ok(defining.all(Clause::is_unit))
    }

    pub fn max_id(&self) -> ClauseId {
        self.clauses.iter().map(|c| c.id).max().unwrap_or(0)
    }

    /// One warning per name used with more than one arity.
    pub fn arity_warnings(&self) -> Vec<String> {
        let mut arities: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for c in &self.clauses {
            for a in std::iter::once(&c.head).chain(c.body.iter()) {
                if let Some(p) = a.predicate() {
                    let e = arities.entry(a.name().map(|n| &**n).unwrap_or_default()).or_default();
                    if !e.contains(&p.arity) {
                        e.push(p.arity);
                    }
                }
            }
        }
        arities
            .into_iter()
            .filter(|(_, a)| a.len() > 1)
            .map(|(n, a)| format!("predicate name `{n}` used with arities {a:?}"))
            .collect()
    }
}
