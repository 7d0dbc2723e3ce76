//! First-order terms: unification, one-way matching, variants and
//! depth-bounded restriction.
//!
//! Terms are immutable and cheap to clone (compound arguments live behind an
//! `Arc`). Variables are identified by a process-wide integer id; every call
//! to [`Var::fresh`] hands out an id that has never been used before, which
//! is what standardizing apart relies on.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub type Sym = Arc<str>;

/// Functor of the binary list constructor.
pub const CONS: &str = ".";
/// The empty list.
pub const NIL: &str = "[]";

static NEXT_VAR: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u64);

impl Var {
    pub fn fresh() -> Var {
        Var(NEXT_VAR.fetch_add(1, Ordering::Relaxed))
    }
}

/// Name and arity. Constants are predicates/functors of arity 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    pub name: Sym,
    pub arity: usize,
}

impl Predicate {
    pub fn new(name: &str, arity: usize) -> Self {
        Predicate { name: name.into(), arity }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Const(Sym),
    /// Always at least one argument; nullary applications are `Const`.
    Compound(Sym, Arc<[Term]>),
}

impl Term {
    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn fresh_var() -> Term {
        Term::Var(Var::fresh())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.into())
    }

    /// Builds `name(args..)`, or the constant `name` when `args` is empty.
    pub fn app(name: impl Into<Sym>, args: Vec<Term>) -> Term {
        let name = name.into();
        if args.is_empty() {
            Term::Const(name)
        } else {
            Term::Compound(name, args.into())
        }
    }

    pub fn nil() -> Term {
        Term::constant(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::app(CONS, vec![head, tail])
    }

    /// `[items | tail]`; pass `Term::nil()` for a proper list.
    pub fn list(items: Vec<Term>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, t| Term::cons(t, acc))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> Option<&Sym> {
        match self {
            Term::Var(_) => None,
            Term::Const(n) | Term::Compound(n, _) => Some(n),
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    /// Predicate identity when the term is used as an atom.
    pub fn predicate(&self) -> Option<Predicate> {
        match self {
            Term::Var(_) => None,
            Term::Const(n) => Some(Predicate { name: n.clone(), arity: 0 }),
            Term::Compound(n, args) => Some(Predicate { name: n.clone(), arity: args.len() }),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Variables in left-to-right first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        self.collect_vars(&mut out, &mut seen);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Var>, seen: &mut HashSet<Var>) {
        match self {
            Term::Var(v) => {
                if seen.insert(*v) {
                    out.push(*v);
                }
            }
            Term::Const(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out, seen)),
        }
    }

    pub fn occurs(&self, v: Var) -> bool {
        match self {
            Term::Var(w) => *w == v,
            Term::Const(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(v)),
        }
    }

    /// Depth of the deepest node; the root is at depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Compound(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Node count, or `None` once it passes `limit`.
    pub fn size_within(&self, limit: usize) -> Option<usize> {
        fn go(t: &Term, left: &mut usize) -> bool {
            if *left == 0 {
                return false;
            }
            *left -= 1;
            match t {
                Term::Compound(_, args) => args.iter().all(|a| go(a, left)),
                _ => true,
            }
        }
        let mut left = limit;
        go(self, &mut left).then(|| limit - left)
    }

    /// Structural map over variables.
    pub fn map_vars(&self, f: &mut impl FnMut(Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(*v),
            Term::Const(_) => self.clone(),
            Term::Compound(n, args) => {
                Term::Compound(n.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
        }
    }

    /// Appends one argument, turning a constant into a unary compound.
    pub fn with_extra_arg(&self, extra: Term) -> Term {
        match self {
            Term::Var(_) => panic!("cannot extend a variable"),
            Term::Const(n) => Term::Compound(n.clone(), vec![extra].into()),
            Term::Compound(n, args) => {
                let mut v = args.to_vec();
                v.push(extra);
                Term::Compound(n.clone(), v.into())
            }
        }
    }
}

/// A finite, idempotent map from variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: Var) -> Option<&Term> {
        self.bindings.get(&v)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    /// Builds a substitution from explicit bindings; identity bindings are
    /// dropped. The caller is responsible for idempotence.
    pub fn from_bindings(pairs: impl IntoIterator<Item = (Var, Term)>) -> Self {
        Substitution {
            bindings: pairs.into_iter().filter(|(v, t)| *t != Term::Var(*v)).collect(),
        }
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| self.bindings.get(&v).cloned().unwrap_or(Term::Var(v)))
    }
}

/// Triangular binding store used while unifying; can be cloned to branch.
#[derive(Clone, Debug, Default)]
pub struct Unifier {
    // Rule bodies bind few variables; a vector beats hashing and clones cheaply.
    map: Vec<(Var, Term)>,
    occurs_check: bool,
}

impl Unifier {
    pub fn new(occurs_check: bool) -> Self {
        Unifier { map: Vec::new(), occurs_check }
    }

    fn get(&self, v: &Var) -> Option<&Term> {
        self.map.iter().find(|(w, _)| w == v).map(|(_, t)| t)
    }

    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn occurs_in(&self, v: Var, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::Const(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs_in(v, a)),
        }
    }

    /// Extends the bindings so that `a` and `b` become equal. On failure the
    /// store may hold partial bindings; callers branch on a clone.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), _) => self.bind(*x, b),
            (_, Term::Var(y)) => self.bind(*y, a),
            (Term::Const(m), Term::Const(n)) => m == n,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y))
            }
            _ => false,
        }
    }

    /// Cheap necessary condition for `unify(a, b)` when no variable of `b`
    /// is bound here: constructors agree wherever both sides have one.
    pub fn compatible(&self, a: &Term, b: &Term) -> bool {
        match (self.walk(a), b) {
            (Term::Var(_), _) | (_, Term::Var(_)) => true,
            (Term::Const(m), Term::Const(n)) => m == n,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| self.compatible(x, y))
            }
            _ => false,
        }
    }

    fn bind(&mut self, v: Var, t: Term) -> bool {
        if self.occurs_check && self.occurs_in(v, &t) {
            return false;
        }
        self.map.push((v, t));
        true
    }

    /// Fully applies the bindings. Returns `None` if the store describes a
    /// cyclic term, which can only happen with the occurs check disabled.
    pub fn resolve(&self, t: &Term) -> Option<Term> {
        let mut stack = Vec::new();
        self.resolve_in(t, &mut stack)
    }

    fn resolve_in(&self, t: &Term, stack: &mut Vec<Var>) -> Option<Term> {
        match t {
            Term::Var(v) => match self.get(v) {
                None => Some(t.clone()),
                Some(next) => {
                    if stack.contains(v) {
                        return None;
                    }
                    stack.push(*v);
                    let r = self.resolve_in(next, stack);
                    stack.pop();
                    r
                }
            },
            Term::Const(_) => Some(t.clone()),
            Term::Compound(n, args) => {
                let mut out = Vec::with_capacity(args.len());
                for a in args.iter() {
                    out.push(self.resolve_in(a, stack)?);
                }
                Some(Term::Compound(n.clone(), out.into()))
            }
        }
    }

    pub fn into_substitution(self) -> Option<Substitution> {
        let mut bindings = BTreeMap::new();
        for (v, _) in &self.map {
            let t = self.resolve(&Term::Var(*v))?;
            if t != Term::Var(*v) {
                bindings.insert(*v, t);
            }
        }
        Some(Substitution { bindings })
    }
}

/// Most general unifier of two terms, or `None` when they do not unify.
pub fn unify(a: &Term, b: &Term, occurs_check: bool) -> Option<Substitution> {
    let mut u = Unifier::new(occurs_check);
    if u.unify(a, b) {
        u.into_substitution()
    } else {
        None
    }
}

/// One-way matching: extends `theta` so that `theta(pattern) == target`,
/// treating the target's variables as constants.
pub fn match_term(pattern: &Term, target: &Term, theta: &mut HashMap<Var, Term>) -> bool {
    match (pattern, target) {
        (Term::Var(v), _) => match theta.get(v) {
            Some(bound) => bound == target,
            None => {
                theta.insert(*v, target.clone());
                true
            }
        },
        (Term::Const(m), Term::Const(n)) => m == n,
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys.iter()).all(|(x, y)| match_term(x, y, theta))
        }
        _ => false,
    }
}

/// True iff `specific` is an instance of `general`.
pub fn subsumes(general: &Term, specific: &Term) -> bool {
    match_term(general, specific, &mut HashMap::new())
}

/// Renames variables to `Var(0), Var(1), ..` in first-occurrence order.
/// Two terms are variants exactly when their canonical forms are equal.
pub fn canonical(t: &Term) -> Term {
    let mut seen: Vec<Var> = Vec::new();
    t.map_vars(&mut |v| {
        let i = seen.iter().position(|w| *w == v).unwrap_or_else(|| {
            seen.push(v);
            seen.len() - 1
        });
        Term::Var(Var(i as u64))
    })
}

pub fn variant(a: &Term, b: &Term) -> bool {
    canonical(a) == canonical(b)
}

/// Consistently renames every variable of `t` to a fresh one.
pub fn rename_apart(t: &Term) -> Term {
    let mut fresh: Vec<(Var, Term)> = Vec::new();
    t.map_vars(&mut |v| match fresh.iter().find(|(w, _)| *w == v) {
        Some((_, n)) => n.clone(),
        None => {
            let n = Term::fresh_var();
            fresh.push((v, n.clone()));
            n
        }
    })
}

pub(crate) fn rename_with(t: &Term, fresh: &mut HashMap<Var, Term>) -> Term {
    t.map_vars(&mut |v| fresh.entry(v).or_insert_with(Term::fresh_var).clone())
}

/// Replaces every subterm rooted at depth `>= depth` (root at 0) by a
/// distinct fresh variable.
pub fn restrict(t: &Term, depth: usize) -> Term {
    assert!(depth >= 1, "restriction depth must be positive");
    restrict_at(t, 0, depth)
}

fn restrict_at(t: &Term, at: usize, depth: usize) -> Term {
    if at >= depth {
        return Term::fresh_var();
    }
    match t {
        Term::Compound(n, args) => Term::Compound(
            n.clone(),
            args.iter().map(|a| restrict_at(a, at + 1, depth)).collect(),
        ),
        _ => t.clone(),
    }
}

/// Least general generalization (anti-unification) of two terms.
pub fn generalize(a: &Term, b: &Term) -> Term {
    let mut table: HashMap<(Term, Term), Term> = HashMap::new();
    lgg(a, b, &mut table)
}

fn lgg(a: &Term, b: &Term, table: &mut HashMap<(Term, Term), Term>) -> Term {
    match (a, b) {
        _ if a == b => a.clone(),
        (Term::Compound(f, xs), Term::Compound(g, ys)) if f == g && xs.len() == ys.len() => {
            Term::Compound(
                f.clone(),
                xs.iter().zip(ys.iter()).map(|(x, y)| lgg(x, y, table)).collect(),
            )
        }
        _ => table.entry((a.clone(), b.clone())).or_insert_with(Term::fresh_var).clone(),
    }
}

/// Letter names `A..Z`, then `A1..Z1`, and so on.
pub fn var_name(index: usize) -> String {
    let letter = (b'A' + (index % 26) as u8) as char;
    match index / 26 {
        0 => letter.to_string(),
        n => format!("{letter}{n}"),
    }
}

/// Displays a term with its variables named by a caller-provided table.
pub struct Named<'a> {
    pub term: &'a Term,
    pub names: &'a HashMap<Var, String>,
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self.term, &|v| {
            self.names.get(&v).cloned().unwrap_or_else(|| format!("_G{}", v.0))
        })
    }
}

/// Naming table for a group of terms that share variables (a clause, a fact).
pub fn name_vars<'a>(terms: impl IntoIterator<Item = &'a Term>) -> HashMap<Var, String> {
    let mut order = Vec::new();
    let mut seen = HashSet::new();
    for t in terms {
        t.collect_vars(&mut order, &mut seen);
    }
    order.into_iter().enumerate().map(|(i, v)| (v, var_name(i))).collect()
}

/// Formats a term with variables normalized to `A, B, ..`.
pub fn normalized(t: &Term) -> String {
    let names = name_vars([t]);
    Named { term: t, names: &names }.to_string()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, &|v| format!("_G{}", v.0))
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, name: &dyn Fn(Var) -> String) -> fmt::Result {
    match t {
        Term::Var(v) => f.write_str(&name(*v)),
        Term::Const(n) => f.write_str(n),
        Term::Compound(n, args) if &**n == CONS && args.len() == 2 => {
            f.write_str("[")?;
            write_term(f, &args[0], name)?;
            let mut tail = &args[1];
            loop {
                match tail {
                    Term::Compound(m, rest) if &**m == CONS && rest.len() == 2 => {
                        f.write_str(",")?;
                        write_term(f, &rest[0], name)?;
                        tail = &rest[1];
                    }
                    Term::Const(m) if &**m == NIL => break,
                    other => {
                        f.write_str("|")?;
                        write_term(f, other, name)?;
                        break;
                    }
                }
            }
            f.write_str("]")
        }
        Term::Compound(n, args) => {
            write!(f, "{n}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write_term(f, a, name)?;
            }
            f.write_str(")")
        }
    }
}
