//! Filter optimizations on compiled programs: off-line abstraction of the
//! magic part, removal of redundant cyclic magic rules, indexing of magic
//! rules with their instigating rules, and unfolding of magic literals.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::magic::{source_literal, MagicProgram};
use crate::program::{AbstractQuery, Binding, Clause, ClauseId, Role};
use crate::term::{self, canonical, generalize, restrict, variant, Predicate, Term, Unifier};

/// The query's magic atom as far as it is known off-line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractSeed {
    pub atom: Term,
}

/// Builds the abstract seed: bound positions carry the most specific pattern
/// common to every use of the query's magic predicate, free positions and the
/// index argument are fresh variables. The result is restricted to depth `d`.
pub fn abstract_seed(mp: &MagicProgram, aq: &AbstractQuery, d: usize) -> Result<AbstractSeed> {
    if d == 0 {
        return Err(Error::InvalidDepth);
    }
    let template = mp.seed_template().ok_or_else(|| Error::NoSeed(mp.query.clone()))?;
    let info = &mp.preds[&mp.query];
    let pattern = mp
        .program
        .clauses()
        .iter()
        .flat_map(|c| c.body.iter())
        .filter(|b| b.predicate().as_ref() == Some(&template))
        .fold(None, |acc: Option<Term>, b| Some(acc.map_or_else(|| b.clone(), |g| generalize(&g, b))));
    let mut args: Vec<Term> = match pattern {
        Some(p) => p.args().to_vec(),
        None => (0..template.arity).map(|_| Term::fresh_var()).collect(),
    };
    for (slot, pos) in info.kept.iter().enumerate() {
        if aq.adornment.get(*pos) == Some(&Binding::Free) {
            args[slot] = Term::fresh_var();
        }
    }
    if info.indexed {
        *args.last_mut().unwrap() = Term::fresh_var();
    }
    Ok(AbstractSeed { atom: restrict(&Term::app(template.name.clone(), args), d) })
}

/// One firing of a magic rule during abstract evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleUse {
    pub premises: Vec<Term>,
    pub conclusion: Term,
}

#[derive(Clone, Debug, Default)]
pub struct AbstractFixpoint {
    /// Abstract magic atoms in derivation order, pairwise non-variant.
    pub facts: Vec<Term>,
    pub used_rules: BTreeMap<ClauseId, Vec<RuleUse>>,
}

impl AbstractFixpoint {
    pub fn contains(&self, t: &Term) -> bool {
        self.facts.iter().any(|f| variant(f, t))
    }

    /// Set equality up to variants.
    pub fn same_facts(&self, other: &AbstractFixpoint) -> bool {
        let a: HashSet<Term> = self.facts.iter().map(canonical).collect();
        let b: HashSet<Term> = other.facts.iter().map(canonical).collect();
        a == b
    }
}

fn join(
    literals: &[&Term],
    facts: &[Term],
    u: Unifier,
    premises: &mut Vec<Term>,
    out: &mut Vec<(Unifier, Vec<Term>)>,
) {
    let Some((first, rest)) = literals.split_first() else {
        out.push((u, premises.clone()));
        return;
    };
    for f in facts {
        let mut branch = u.clone();
        if branch.unify(first, &term::rename_apart(f)) {
            premises.push(f.clone());
            join(rest, facts, branch, premises, out);
            premises.pop();
        }
    }
}

fn fixpoint_from(mp: &MagicProgram, seed: &Term, d: usize, skip: &BTreeSet<ClauseId>) -> AbstractFixpoint {
    let rules: Vec<&Clause> = mp.magic_clauses().filter(|c| !skip.contains(&c.id)).collect();
    let mut fp = AbstractFixpoint { facts: vec![seed.clone()], used_rules: BTreeMap::new() };
    let mut known: HashSet<Term> = HashSet::from([canonical(seed)]);
    let mut recorded: HashSet<(ClauseId, Term)> = HashSet::new();
    loop {
        let mut new = Vec::new();
        for r in &rules {
            let r = r.rename_apart();
            // Non-magic literals are taken to succeed without binding anything.
            let magic: Vec<&Term> = r.body.iter().filter(|b| mp.is_magic_atom(b)).collect();
            let mut solutions = Vec::new();
            join(&magic, &fp.facts, Unifier::new(true), &mut Vec::new(), &mut solutions);
            for (u, premises) in solutions {
                let Some(head) = u.resolve(&r.head) else { continue };
                let conclusion = restrict(&head, d);
                let key = canonical(&Term::app("use", std::iter::once(conclusion.clone()).chain(premises.iter().cloned()).collect()));
                if recorded.insert((r.id, key)) {
                    fp.used_rules.entry(r.id).or_default().push(RuleUse { premises, conclusion: conclusion.clone() });
                }
                if known.insert(canonical(&conclusion)) {
                    new.push(conclusion);
                }
            }
        }
        if new.is_empty() {
            return fp;
        }
        fp.facts.extend(new);
    }
}

/// Closes the abstract seed under the magic rules, restricting every derived
/// atom to depth `d`. An empty fixpoint is returned when the query's magic
/// predicate was pruned.
pub fn abstract_fixpoint(mp: &MagicProgram, aq: &AbstractQuery, d: usize) -> Result<AbstractFixpoint> {
    abstract_fixpoint_without(mp, aq, d, &BTreeSet::new())
}

/// As [`abstract_fixpoint`], ignoring the magic rules in `skip`.
pub fn abstract_fixpoint_without(
    mp: &MagicProgram,
    aq: &AbstractQuery,
    d: usize,
    skip: &BTreeSet<ClauseId>,
) -> Result<AbstractFixpoint> {
    match abstract_seed(mp, aq, d) {
        Ok(seed) => Ok(fixpoint_from(mp, &seed.atom, d, skip)),
        Err(Error::NoSeed(_)) => Ok(AbstractFixpoint::default()),
        Err(e) => Err(e),
    }
}

/// True iff some magic predicate in the body of `r` depends on the head of `r`.
fn on_cycle(mp: &MagicProgram, rules: &[&Clause], r: &Clause) -> bool {
    let mut reach: BTreeSet<Predicate> = BTreeSet::from([r.predicate()]);
    let mut frontier = vec![r.predicate()];
    while let Some(p) = frontier.pop() {
        for c in rules {
            if c.body.iter().any(|b| b.predicate().as_ref() == Some(&p)) && reach.insert(c.predicate()) {
                frontier.push(c.predicate());
            }
        }
    }
    r.body.iter().filter(|b| mp.is_magic_atom(b)).any(|b| reach.contains(&b.predicate().unwrap()))
}

/// Off-line abstraction of the magic part. Magic rule heads are restricted to
/// depth `d`; afterwards a magic rule is deleted when its body consists of
/// magic literals only, it lies on a cycle of magic predicates, and the
/// abstract fixpoint is the same with and without it. Rules are tried in
/// clause order until nothing changes.
pub fn remove_cycles(mp: &MagicProgram, aq: &AbstractQuery, d: usize) -> Result<MagicProgram> {
    if d == 0 {
        return Err(Error::InvalidDepth);
    }
    let mut out = mp.clone();
    let clauses: Vec<Clause> = mp
        .program
        .clauses()
        .iter()
        .map(|c| {
            if !mp.is_magic_atom(&c.head) {
                return c.clone();
            }
            let head = restrict(&c.head, d);
            if !variant(&c.as_term(), &Clause { head: head.clone(), ..c.clone() }.as_term()) {
                out.report.push(format!("restrict head of rule {} at depth {d}", c.id));
            }
            Clause { head, ..c.clone() }
        })
        .collect();
    out.program = mp.program.with_clauses(clauses);

    loop {
        let full = abstract_fixpoint(&out, aq, d)?;
        let rules: Vec<&Clause> = out.magic_clauses().collect();
        let mut victim = None;
        for r in &rules {
            if !r.body.iter().all(|b| out.is_magic_atom(b)) || !on_cycle(&out, &rules, r) {
                continue;
            }
            if mp.program.clause(r.id).is_some_and(widens) {
                continue;
            }
            let without = abstract_fixpoint_without(&out, aq, d, &BTreeSet::from([r.id]))?;
            if without.same_facts(&full) {
                victim = Some((*r).clone());
                break;
            }
        }
        let Some(v) = victim else { return Ok(out) };
        out.report.push(format!("remove cyclic rule {}: {v}", v.id));
        let kept = out.program.clauses().iter().filter(|c| c.id != v.id).cloned().collect();
        out.program = out.program.with_clauses(kept);
    }
}

/// A head argument that is a variable absent from the body frees a position
/// the premise may bind, so the rule derives strictly more general filters.
fn widens(c: &Clause) -> bool {
    c.head.args().iter().any(|a| match a {
        Term::Var(v) => !c.body.iter().any(|b| b.occurs(*v)),
        _ => false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IndexScope {
    /// Only magic predicates with two or more defining rules whose heads unify.
    #[default]
    OverlappingOnly,
    All,
}

/// Couples every magic rule of an indexed magic predicate with the call
/// site that instigated it. The magic rule head and the call site receive the
/// same `index_n` constant; the called predicate's rules pass the index of
/// their guard on to their head.
pub fn add_indexing(mp: &MagicProgram, scope: IndexScope) -> Result<MagicProgram> {
    let mut out = mp.clone();
    let mut in_scope: BTreeSet<Predicate> = BTreeSet::new();
    let mut tags: BTreeMap<(ClauseId, usize), Term> = BTreeMap::new();
    let mut head_tags: BTreeMap<ClauseId, Term> = BTreeMap::new();

    for (p, info) in &mp.preds {
        if info.pruned || info.indexed {
            continue;
        }
        let magic = info.magic_predicate();
        let defs: Vec<&Clause> = mp.program.clauses().iter().filter(|c| c.predicate() == magic).collect();
        let selected = match scope {
            IndexScope::All => !defs.is_empty(),
            IndexScope::OverlappingOnly => defs.iter().enumerate().any(|(i, a)| {
                defs[i + 1..].iter().any(|b| term::unify(&a.head, &term::rename_apart(&b.head), true).is_some())
            }),
        };
        if !selected {
            continue;
        }
        for (n, c) in defs.iter().enumerate() {
            let site = match &c.provenance {
                Some(prov) if prov.unfolded.is_empty() => match prov.role {
                    Role::Magic { literal } => (prov.source, literal),
                    Role::Modified => return Err(Error::MissingProvenance(c.id)),
                },
                _ => return Err(Error::MissingProvenance(c.id)),
            };
            let tag = Term::constant(&format!("index_{}", n + 1));
            out.report.push(format!("index rule {} as {} for {}", c.id, tag, magic));
            tags.insert(site, tag.clone());
            head_tags.insert(c.id, tag);
        }
        in_scope.insert(p.clone());
    }

    let clauses = mp
        .program
        .clauses()
        .iter()
        .map(|c| {
            let mut c = c.clone();
            let head_pred = c.predicate();
            let own = mp.info_for_current(&head_pred).filter(|i| in_scope.contains(&i.source) && !mp.is_magic_atom(&c.head));
            let index_var = Term::fresh_var();
            if own.is_some() {
                c.head = c.head.with_extra_arg(index_var.clone());
            }
            if let Some(tag) = head_tags.get(&c.id) {
                c.head = c.head.with_extra_arg(tag.clone());
            }
            let original = c.clone();
            for (i, b) in original.body.iter().enumerate() {
                let Some(bp) = b.predicate() else { continue };
                if let Some(info) = mp.info_for_magic(&bp).filter(|i| in_scope.contains(&i.source)) {
                    let own_guard = own.is_some_and(|o| o.source == info.source);
                    let arg = if own_guard { index_var.clone() } else { Term::fresh_var() };
                    c.body[i] = b.with_extra_arg(arg);
                } else if let Some(info) = mp.info_for_current(&bp).filter(|i| in_scope.contains(&i.source)) {
                    debug_assert!(!info.indexed);
                    let tag = source_literal(mp, &original, i).and_then(|site| tags.get(&site).cloned());
                    c.body[i] = b.with_extra_arg(tag.unwrap_or_else(Term::fresh_var));
                }
            }
            c
        })
        .collect();
    for p in &in_scope {
        out.preds.get_mut(p).unwrap().indexed = true;
    }
    out.program = mp.program.with_clauses(clauses);
    Ok(out)
}

/// Replaces literals of single-clause magic predicates whose only clause has
/// a body of magic literals by that body. The query's magic predicate is
/// never unfolded since the seed has to reach it.
pub fn unfold_magic(mp: &MagicProgram) -> MagicProgram {
    let mut out = mp.clone();
    let seed = mp.seed_template();
    loop {
        let candidate = out.magic_clauses().find_map(|c| {
            let m = c.predicate();
            let single = out.program.defining(&m).count() == 1;
            let pure = c.body.iter().all(|b| out.is_magic_atom(b));
            let recursive = c.body.iter().any(|b| b.predicate().as_ref() == Some(&m));
            (single && pure && !recursive && Some(&m) != seed.as_ref()).then(|| c.clone())
        });
        let Some(def) = candidate else { return out };
        let m = def.predicate();
        let mut into = Vec::new();
        let mut dropped = Vec::new();
        let mut clauses = Vec::new();
        for c in out.program.clauses() {
            if c.id == def.id {
                continue;
            }
            if !c.body.iter().any(|b| b.predicate().as_ref() == Some(&m)) {
                clauses.push(c.clone());
                continue;
            }
            match unfold_into(c, &def, &m) {
                Some(u) => {
                    into.push(c.id.to_string());
                    clauses.push(u);
                }
                None => dropped.push(c.id),
            }
        }
        out.report.push(format!("unfold {} (rule {}) into rules {}", m, def.id, into.join(",")));
        for id in dropped {
            out.report.push(format!("delete rule {id}: unfolding {m} fails"));
        }
        out.report.push(format!("delete rule {}", def.id));
        out.program = out.program.with_clauses(clauses);
        if let Some(info) = out.info_for_magic(&m).map(|i| i.source.clone()) {
            out.preds.get_mut(&info).unwrap().pruned = true;
        }
    }
}

fn unfold_into(c: &Clause, def: &Clause, m: &Predicate) -> Option<Clause> {
    let mut u = Unifier::new(true);
    let mut body = Vec::new();
    for b in &c.body {
        if b.predicate().as_ref() == Some(m) {
            let d = def.rename_apart();
            if !u.unify(b, &d.head) {
                return None;
            }
            body.extend(d.body);
        } else {
            body.push(b.clone());
        }
    }
    let mut out = c.clone();
    out.head = u.resolve(&c.head)?;
    out.body = body.iter().map(|b| u.resolve(b)).collect::<Option<_>>()?;
    if let Some(p) = out.provenance.as_mut() {
        p.unfolded.push(def.id);
    }
    Some(out)
}
