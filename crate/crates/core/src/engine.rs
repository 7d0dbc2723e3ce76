//! Bottom-up fixpoint evaluation with a fact chart and derivation traces.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::program::{Clause, ClauseId, Program};
use crate::term::{canonical, normalized, rename_apart, subsumes, Predicate, Term, Unifier};

pub type FactId = usize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    Naive,
    #[default]
    SemiNaive,
    /// Semi-naive evaluation that stores every derived fact.
    NotSoNaive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub strategy: Strategy,
    pub subsumption: bool,
    pub occurs_check: bool,
    pub max_iterations: usize,
    pub max_facts: usize,
    /// Largest derived fact, counted in term nodes.
    pub max_term_size: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            strategy: Strategy::SemiNaive,
            subsumption: true,
            occurs_check: true,
            max_iterations: 1000,
            max_facts: 100_000,
            max_term_size: 100_000,
        }
    }
}

impl EvalConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        EvalConfig { strategy, ..Self::default() }
    }

    /// Not-so-naive evaluation never checks subsumption.
    pub fn uses_subsumption(&self) -> bool {
        self.subsumption && self.strategy != Strategy::NotSoNaive
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Derivation {
    Seed,
    Rule { rule: ClauseId, premises: Vec<FactId> },
}

#[derive(Clone, Debug)]
pub struct Fact {
    pub id: FactId,
    pub term: Term,
    pub derivation: Derivation,
    pub round: usize,
    /// Set when a later, more general fact took its place.
    pub retracted: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Chart {
    facts: Vec<Fact>,
    by_pred: HashMap<Predicate, Vec<FactId>>,
    variants: HashSet<Term>,
}

impl Chart {
    /// Live facts in id order.
    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter().filter(|f| !f.retracted)
    }

    /// Every fact ever stored, including retracted ones.
    pub fn all_facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn get(&self, id: FactId) -> Option<&Fact> {
        id.checked_sub(1).and_then(|i| self.facts.get(i))
    }

    pub fn len(&self) -> usize {
        self.facts().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn round_of(&self, id: FactId) -> Option<usize> {
        self.get(id).map(|f| f.round)
    }

    pub fn by_predicate<'a>(&'a self, p: &Predicate) -> impl Iterator<Item = &'a Fact> + 'a {
        self.by_pred
            .get(p)
            .into_iter()
            .flatten()
            .map(|&id| &self.facts[id - 1])
            .filter(|f| !f.retracted)
    }

    /// Live facts whose predicate name starts with `prefix`.
    pub fn count_with_prefix(&self, prefix: &str) -> usize {
        self.facts().filter(|f| f.term.name().is_some_and(|n| n.starts_with(prefix))).count()
    }

    /// One line per live fact, variables named `A, B, ..` per fact.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for f in self.facts() {
            write!(out, "{}. {} <- ", f.id, normalized(&f.term)).unwrap();
            match &f.derivation {
                Derivation::Seed => write!(out, "seed").unwrap(),
                Derivation::Rule { rule, premises } => {
                    let ids: Vec<String> = premises.iter().map(|p| p.to_string()).collect();
                    write!(out, "rule:{rule} premises:[{}]", ids.join(",")).unwrap();
                }
            }
            writeln!(out, " round:{}", f.round).unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Policy {
    Subsumption,
    Variants,
    Everything,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    Iterations(usize),
    Facts(usize),
    TermSize(usize),
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Iterations(n) => write!(f, "iteration limit {n}"),
            Limit::Facts(n) => write!(f, "fact limit {n}"),
            Limit::TermSize(n) => write!(f, "term size limit {n}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation stopped at the {limit} with {} facts", chart.len())]
    ResourceExceeded { chart: Box<Chart>, limit: Limit },
    #[error("seed predicate {0} does not occur in the program")]
    UnknownSeedPredicate(Predicate),
    #[error("no fact with id {0}")]
    UnknownFact(FactId),
}

/// Which stored facts a body literal may use during one round.
/// Conclusions of one round, checked against the chart as it stood when the round began.
struct Stage {
    policy: Policy,
    base: usize,
    facts: Vec<Fact>,
    by_pred: HashMap<Predicate, Vec<usize>>,
    variants: HashSet<Term>,
    retired: HashSet<FactId>,
}

impl Stage {
    fn new(chart: &Chart, policy: Policy) -> Self {
        Stage {
            policy,
            base: chart.facts.len(),
            facts: Vec::new(),
            by_pred: HashMap::new(),
            variants: HashSet::new(),
            retired: HashSet::new(),
        }
    }

    fn total(&self) -> usize {
        self.base + self.facts.len()
    }

    fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    fn admit(&mut self, chart: &Chart, term: Term, derivation: Derivation, round: usize) -> bool {
        let pred = term.predicate().expect("facts are atoms");
        match self.policy {
            Policy::Everything => {}
            Policy::Variants => {
                let c = canonical(&term);
                if chart.variants.contains(&c) || !self.variants.insert(c) {
                    return false;
                }
            }
            Policy::Subsumption => {
                let staged = self.by_pred.get(&pred).map(Vec::as_slice).unwrap_or(&[]);
                let covered = chart
                    .by_predicate(&pred)
                    .any(|f| !self.retired.contains(&f.id) && subsumes(&f.term, &term))
                    || staged.iter().any(|&i| !self.facts[i].retracted && subsumes(&self.facts[i].term, &term));
                if covered {
                    return false;
                }
                let victims: Vec<FactId> = chart
                    .by_predicate(&pred)
                    .filter(|f| !self.retired.contains(&f.id) && subsumes(&term, &f.term))
                    .map(|f| f.id)
                    .collect();
                self.retired.extend(victims);
                for &i in staged {
                    let f = &mut self.facts[i];
                    if !f.retracted && subsumes(&term, &f.term) {
                        f.retracted = true;
                    }
                }
            }
        }
        let i = self.facts.len();
        self.by_pred.entry(pred).or_default().push(i);
        self.facts.push(Fact { id: self.base + i + 1, term, derivation, round, retracted: false });
        true
    }

    fn commit(self, chart: &mut Chart) {
        for id in self.retired {
            let f = &mut chart.facts[id - 1];
            f.retracted = true;
            chart.variants.remove(&canonical(&f.term));
        }
        for f in self.facts {
            chart.by_pred.entry(f.term.predicate().expect("facts are atoms")).or_default().push(f.id);
            if self.policy != Policy::Everything && !f.retracted {
                chart.variants.insert(canonical(&f.term));
            }
            chart.facts.push(f);
        }
    }
}

#[derive(Clone, Copy)]
enum Slice {
    Old,
    Delta,
    All,
}

struct Round<'a> {
    chart: &'a Chart,
    round: usize,
    occurs_check: bool,
}

type Sink<'s> = dyn FnMut(Term, Derivation) -> bool + 's;

impl Round<'_> {
    fn allowed(&self, f: &Fact, slice: Slice) -> bool {
        let r = self.round;
        match slice {
            Slice::Old => f.round + 1 < r,
            Slice::Delta => f.round + 1 == r,
            Slice::All => f.round < r,
        }
    }

    /// Returns `false` once `sink` asks to stop.
    fn join(
        &self,
        rule: &Clause,
        body: &[Term],
        slices: &[Slice],
        u: Unifier,
        premises: &mut Vec<FactId>,
        sink: &mut Sink<'_>,
    ) -> bool {
        let Some((lit, rest)) = body.split_first() else {
            return match u.resolve(&rule.head) {
                Some(head) => sink(head, Derivation::Rule { rule: rule.id, premises: premises.clone() }),
                None => true,
            };
        };
        let pred = lit.predicate().expect("body literals are atoms");
        for f in self.chart.by_predicate(&pred) {
            if !self.allowed(f, slices[0]) || !u.compatible(lit, &f.term) {
                continue;
            }
            let fact = if f.term.is_ground() { f.term.clone() } else { rename_apart(&f.term) };
            let mut branch = u.clone();
            if branch.unify(lit, &fact) {
                premises.push(f.id);
                let go = self.join(rule, rest, &slices[1..], branch, premises, sink);
                premises.pop();
                if !go {
                    return false;
                }
            }
        }
        true
    }

    /// Conclusions of `rule` in premise order.
    fn fire(&self, rule: &Clause, slices: &[Slice], sink: &mut Sink<'_>) -> bool {
        self.join(rule, &rule.body, slices, Unifier::new(self.occurs_check), &mut Vec::new(), sink)
    }
}

/// Evaluates `p` bottom-up from `seeds` and the unit clauses of `p`.
pub fn evaluate(p: &Program, seeds: &[Term], cfg: &EvalConfig) -> Result<Chart, EvalError> {
    for s in seeds {
        let pred = s.predicate().ok_or_else(|| EvalError::UnknownSeedPredicate(Predicate::new(&s.to_string(), 0)))?;
        if !p.mentions(&pred) {
            return Err(EvalError::UnknownSeedPredicate(pred));
        }
    }
    let policy = if cfg.uses_subsumption() {
        Policy::Subsumption
    } else if cfg.strategy == Strategy::NotSoNaive {
        Policy::Everything
    } else {
        Policy::Variants
    };
    let exceeded = |chart: Chart, limit| Err(EvalError::ResourceExceeded { chart: Box::new(chart), limit });

    let mut chart = Chart::default();
    let mut stage = Stage::new(&chart, policy);
    let initial = seeds
        .iter()
        .map(|s| (s.clone(), Derivation::Seed))
        .chain(p.clauses().iter().filter(|c| c.is_unit()).map(|c| {
            (c.head.clone(), Derivation::Rule { rule: c.id, premises: Vec::new() })
        }));
    for (term, derivation) in initial {
        stage.admit(&chart, term, derivation, 0);
        if stage.total() > cfg.max_facts {
            stage.commit(&mut chart);
            return exceeded(chart, Limit::Facts(cfg.max_facts));
        }
    }
    stage.commit(&mut chart);

    let rules: Vec<&Clause> = p.clauses().iter().filter(|c| !c.is_unit()).collect();
    for round in 1.. {
        if round > cfg.max_iterations {
            return exceeded(chart, Limit::Iterations(cfg.max_iterations));
        }
        let mut stage = Stage::new(&chart, policy);
        let mut oversized = false;
        {
            let r = Round { chart: &chart, round, occurs_check: cfg.occurs_check };
            let mut sink = |term: Term, derivation: Derivation| {
                if term.size_within(cfg.max_term_size).is_none() {
                    oversized = true;
                    return false;
                }
                stage.admit(&chart, term, derivation, round);
                stage.total() <= cfg.max_facts
            };
            for rule in &rules {
                let n = rule.body.len();
                let go = match cfg.strategy {
                    Strategy::Naive => r.fire(rule, &vec![Slice::All; n], &mut sink),
                    Strategy::SemiNaive | Strategy::NotSoNaive => (0..n).all(|k| {
                        let slices: Vec<Slice> = (0..n)
                            .map(|j| match j.cmp(&k) {
                                std::cmp::Ordering::Less => Slice::Old,
                                std::cmp::Ordering::Equal => Slice::Delta,
                                std::cmp::Ordering::Greater => Slice::All,
                            })
                            .collect();
                        r.fire(rule, &slices, &mut sink)
                    }),
                };
                if !go {
                    break;
                }
            }
        }
        let over = stage.total() > cfg.max_facts;
        let quiet = stage.is_empty();
        stage.commit(&mut chart);
        if over {
            return exceeded(chart, Limit::Facts(cfg.max_facts));
        }
        if oversized {
            return exceeded(chart, Limit::TermSize(cfg.max_term_size));
        }
        if quiet {
            break;
        }
    }
    Ok(chart)
}

/// Live facts unifying with `q`, instantiated, without variant repetitions.
pub fn answers(chart: &Chart, q: &Term) -> Vec<(FactId, Term)> {
    let mut seen = HashSet::new();
    let Some(pred) = q.predicate() else { return Vec::new() };
    chart
        .by_predicate(&pred)
        .filter_map(|f| {
            let mut u = Unifier::new(true);
            let fact = rename_apart(&f.term);
            if !u.unify(q, &fact) {
                return None;
            }
            let t = u.resolve(q)?;
            seen.insert(canonical(&t)).then_some((f.id, t))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationTree {
    pub fact: FactId,
    pub term: Term,
    /// `None` for seeds.
    pub rule: Option<ClauseId>,
    pub children: Vec<DerivationTree>,
}

impl DerivationTree {
    fn write(&self, out: &mut fmt::Formatter<'_>, indent: usize) -> fmt::Result {
        write!(out, "{:indent$}{}. {} <- ", "", self.fact, normalized(&self.term))?;
        match self.rule {
            None => writeln!(out, "seed")?,
            Some(r) => writeln!(out, "rule:{r}")?,
        }
        self.children.iter().try_for_each(|c| c.write(out, indent + 2))
    }
}

impl fmt::Display for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

pub fn trace(chart: &Chart, id: FactId) -> Result<DerivationTree, EvalError> {
    let f = chart.get(id).ok_or(EvalError::UnknownFact(id))?;
    Ok(match &f.derivation {
        Derivation::Seed => DerivationTree { fact: id, term: f.term.clone(), rule: None, children: Vec::new() },
        Derivation::Rule { rule, premises } => DerivationTree {
            fact: id,
            term: f.term.clone(),
            rule: Some(*rule),
            children: premises.iter().map(|&p| trace(chart, p)).collect::<Result<_, _>>()?,
        },
    })
}
