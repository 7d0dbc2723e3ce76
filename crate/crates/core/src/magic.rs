//! Magic templates compilation.
//!
//! For a rule `p(t) :- q1(t1), .., qn(tn)` the compiler emits the modified
//! rule `p(t) :- magic_p(t), q1(t1), .., qn(tn)` and, for every body literal,
//! a magic rule `magic_qi(ti) :- magic_p(t), q1(t1), .., q(i-1)(t(i-1))`.
//! The seed `magic_q(c)` is built from the concrete query at run time.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::program::{Clause, ClauseId, Program, Provenance, Role};
use crate::term::{Predicate, Sym, Term};

pub const MAGIC_PREFIX: &str = "magic_";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompileMode {
    FullMagic,
    /// Only lexical unit clauses are guarded.
    LexicalOnly,
}

/// Bookkeeping for one source predicate and its magic counterpart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredInfo {
    pub source: Predicate,
    pub magic_name: Sym,
    /// Source argument positions (0-based) the magic predicate retains.
    pub kept: Vec<usize>,
    /// Whether an index argument was appended to the predicate and its magic.
    pub indexed: bool,
    /// Lexical predicates lose their magic rules and guards when pruned.
    pub pruned: bool,
}

impl PredInfo {
    pub fn magic_predicate(&self) -> Predicate {
        Predicate {
            name: self.magic_name.clone(),
            arity: self.kept.len() + usize::from(self.indexed),
        }
    }

    /// Current identity of the source predicate inside the compiled program.
    pub fn current_predicate(&self) -> Predicate {
        Predicate { name: self.source.name.clone(), arity: self.source.arity + usize::from(self.indexed) }
    }

    /// `magic_p` applied to the kept positions of `args` (source arity).
    pub fn magic_atom(&self, args: &[Term]) -> Term {
        Term::app(self.magic_name.clone(), self.kept.iter().map(|&i| args[i].clone()).collect())
    }
}

#[derive(Clone, Debug)]
pub struct MagicProgram {
    /// Modified rules followed by magic rules.
    pub program: Program,
    /// The program the compilation started from.
    pub source: Program,
    /// Keyed by the original source predicate.
    pub preds: BTreeMap<Predicate, PredInfo>,
    pub query: Predicate,
    pub mode: CompileMode,
    /// One line per optimization action, in the order performed.
    pub report: Vec<String>,
}

impl MagicProgram {
    pub fn info(&self, source: &Predicate) -> Option<&PredInfo> {
        self.preds.get(source)
    }

    /// Source predicate -> current magic predicate, for unpruned predicates.
    pub fn magic_of(&self) -> BTreeMap<Predicate, Predicate> {
        self.preds
            .iter()
            .filter(|(_, i)| !i.pruned)
            .map(|(p, i)| (p.clone(), i.magic_predicate()))
            .collect()
    }

    /// Kept source positions per magic predicate.
    pub fn kept_positions(&self) -> BTreeMap<Predicate, Vec<usize>> {
        self.preds
            .values()
            .filter(|i| !i.pruned)
            .map(|i| (i.magic_predicate(), i.kept.clone()))
            .collect()
    }

    /// The magic predicate of the query, unless it was pruned.
    pub fn seed_template(&self) -> Option<Predicate> {
        self.preds.get(&self.query).filter(|i| !i.pruned).map(PredInfo::magic_predicate)
    }

    pub fn info_for_magic_name(&self, name: &str) -> Option<&PredInfo> {
        self.preds.values().find(|i| &*i.magic_name == name)
    }

    pub fn info_for_magic(&self, magic: &Predicate) -> Option<&PredInfo> {
        self.preds.values().find(|i| !i.pruned && i.magic_predicate() == *magic)
    }

    /// Source-side info for an atom of the compiled program.
    pub fn info_for_current(&self, pred: &Predicate) -> Option<&PredInfo> {
        self.preds.values().find(|i| i.current_predicate() == *pred)
    }

    pub fn is_magic_atom(&self, atom: &Term) -> bool {
        atom.name().is_some_and(|n| self.info_for_magic_name(n).is_some())
    }

    pub fn magic_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.program.clauses().iter().filter(|c| self.is_magic_atom(&c.head))
    }

    /// Builds the seed fact for a concrete query atom.
    pub fn make_seed(&self, query: &Term) -> Result<Term> {
        let pred = query.predicate();
        if pred.as_ref() != Some(&self.query) {
            return Err(Error::PredicateMismatch {
                expected: self.query.clone(),
                found: query.to_string(),
            });
        }
        let info = &self.preds[&self.query];
        if info.pruned {
            return Err(Error::NoSeed(self.query.clone()));
        }
        let seed = info.magic_atom(query.args());
        Ok(if info.indexed { seed.with_extra_arg(Term::fresh_var()) } else { seed })
    }

    /// The query atom as it must be posed against the compiled program:
    /// indexed predicates take an extra, unconstrained index argument.
    pub fn query_atom(&self, query: &Term) -> Term {
        match query.predicate().and_then(|p| self.preds.get(&p)) {
            Some(info) if info.indexed => query.with_extra_arg(Term::fresh_var()),
            _ => query.clone(),
        }
    }
}

fn check_namespace(p: &Program) -> Result<()> {
    for c in p.clauses() {
        for a in std::iter::once(&c.head).chain(c.body.iter()) {
            if a.name().is_some_and(|n| n.starts_with(MAGIC_PREFIX)) {
                return Err(Error::NameClash(a.predicate().unwrap()));
            }
        }
    }
    Ok(())
}

fn all_predicates(p: &Program) -> BTreeSet<Predicate> {
    p.clauses()
        .iter()
        .flat_map(|c| std::iter::once(&c.head).chain(c.body.iter()))
        .filter_map(Term::predicate)
        .collect()
}

fn compile(p: &Program, query: &Predicate, mode: CompileMode) -> Result<MagicProgram> {
    if !p.is_defined(query) {
        return Err(Error::UnknownQueryPredicate(query.clone()));
    }
    check_namespace(p)?;
    let preds: BTreeMap<Predicate, PredInfo> = all_predicates(p)
        .into_iter()
        .map(|pred| {
            let info = PredInfo {
                source: pred.clone(),
                magic_name: format!("{MAGIC_PREFIX}{}", pred.name).into(),
                kept: (0..pred.arity).collect(),
                indexed: false,
                pruned: false,
            };
            (pred, info)
        })
        .collect();

    let guard_of = |c: &Clause| preds[&c.predicate()].magic_atom(c.head.args());
    let mut clauses = Vec::new();
    for c in p.clauses() {
        let guarded = match mode {
            CompileMode::FullMagic => true,
            CompileMode::LexicalOnly => p.is_lexical(&c.predicate())?,
        };
        let mut body = Vec::with_capacity(c.body.len() + 1);
        if guarded {
            body.push(guard_of(c));
        }
        body.extend(c.body.iter().cloned());
        clauses.push(Clause {
            id: c.id,
            head: c.head.clone(),
            body,
            provenance: Some(Provenance::modified(c.id)),
        })
    }

    // Magic rules are grouped by the magic predicate they define, in order of
    // first appearance, and numbered after the source clauses.
    let mut groups: Vec<(Predicate, Vec<Clause>)> = Vec::new();
    for c in p.clauses() {
        for (i, lit) in c.body.iter().enumerate() {
            let lp = lit.predicate().expect("body literal is an atom");
            let mut body = vec![guard_of(c)];
            body.extend(c.body[..i].iter().cloned());
            let rule = Clause {
                id: 0,
                head: preds[&lp].magic_atom(lit.args()),
                body,
                provenance: Some(Provenance::magic(c.id, i + 1)),
            };
            match groups.iter_mut().find(|(q, _)| *q == lp) {
                Some((_, g)) => g.push(rule),
                None => groups.push((lp, vec![rule])),
            }
        }
    }
    let mut next: ClauseId = p.max_id();
    for (_, group) in groups {
        for mut rule in group {
            next += 1;
            rule.id = next;
            clauses.push(rule);
        }
    }

    Ok(MagicProgram {
        program: p.with_clauses(clauses),
        source: p.clone(),
        preds,
        query: query.clone(),
        mode,
        report: Vec::new(),
    })
}

/// Full magic templates compilation; no seed fact is emitted.
pub fn magic_transform(p: &Program, query: &Predicate) -> Result<MagicProgram> {
    compile(p, query, CompileMode::FullMagic)
}

/// Magic rules as usual, but only lexical unit clauses carry guards.
pub fn lexical_only_transform(p: &Program, query: &Predicate) -> Result<MagicProgram> {
    compile(p, query, CompileMode::LexicalOnly)
}

/// Removes magic rules and guards belonging to lexical predicates.
/// Predicates that are called but never defined are treated the same way.
pub fn prune_lexical_magic(mp: &MagicProgram) -> MagicProgram {
    let mut out = mp.clone();
    let lexical: Vec<Predicate> = mp
        .preds
        .keys()
        .filter(|p| !mp.preds[*p].pruned && mp.source.is_lexical(p).unwrap_or(true))
        .cloned()
        .collect();
    let mut clauses = Vec::new();
    for c in mp.program.clauses() {
        let head_pred = c.predicate();
        let owner = mp.info_for_magic(&head_pred).map(|i| i.source.clone());
        if let Some(src) = owner.filter(|s| lexical.contains(s)) {
            out.report.push(format!("prune magic rule {} for lexical {}", c.id, src));
            continue;
        }
        let source_pred = mp.info_for_current(&head_pred);
        let is_lexical_clause = source_pred.is_some_and(|i| lexical.contains(&i.source));
        if is_lexical_clause && c.body.len() == 1 && mp.is_magic_atom(&c.body[0]) {
            out.report.push(format!("unguard lexical clause {}", c.id));
            clauses.push(Clause { body: Vec::new(), ..c.clone() });
        } else {
            clauses.push(c.clone());
        }
    }
    for p in &lexical {
        out.preds.get_mut(p).unwrap().pruned = true;
    }
    out.program = mp.program.with_clauses(clauses);
    out
}

/// Where body literal `index` of a compiled clause came from in its source
/// rule (1-based literal number), if the clause still has the layout the
/// compiler gave it.
pub(crate) fn source_literal(mp: &MagicProgram, c: &Clause, index: usize) -> Option<(ClauseId, usize)> {
    let prov = c.provenance.as_ref()?;
    if !prov.unfolded.is_empty() {
        return None;
    }
    let offset = usize::from(c.body.first().is_some_and(|b| mp.is_magic_atom(b)));
    if index < offset {
        return None;
    }
    let literal = index - offset + 1;
    match prov.role {
        Role::Magic { literal: upto } if literal >= upto => None,
        _ => Some((prov.source, literal)),
    }
}
