//! Detection of spurious ambiguity in charts built without subsumption.
//!
//! When the solutions of one body literal do not determine the rest of the
//! rule, different derivations produce variant facts, and every later fact
//! built on them is duplicated as well.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::engine::{Chart, Derivation, FactId};
use crate::term::{canonical, normalized, Predicate, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuplicateGroup {
    pub term: Term,
    /// The variant facts with their derivations, in chart order.
    pub facts: Vec<(FactId, Derivation)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyReport {
    pub groups: BTreeMap<Predicate, Vec<DuplicateGroup>>,
}

impl DependencyReport {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn duplicate_count(&self) -> usize {
        self.groups.values().flatten().map(|g| g.facts.len() - 1).sum()
    }
}

/// Lists every class of variant facts that were derived in more than one way.
pub fn analyze_duplicates(chart: &Chart) -> DependencyReport {
    let mut classes: Vec<(Term, Vec<(FactId, Derivation)>)> = Vec::new();
    let mut index: HashMap<Term, usize> = HashMap::new();
    for f in chart.facts() {
        let key = canonical(&f.term);
        let i = *index.entry(key).or_insert_with(|| {
            classes.push((f.term.clone(), Vec::new()));
            classes.len() - 1
        });
        classes[i].1.push((f.id, f.derivation.clone()));
    }
    let mut report = DependencyReport::default();
    for (term, facts) in classes {
        let distinct = facts.iter().enumerate().any(|(i, (_, d))| facts[..i].iter().any(|(_, e)| e != d));
        if facts.len() > 1 && distinct {
            let pred = term.predicate().unwrap();
            report.groups.entry(pred).or_default().push(DuplicateGroup { term, facts });
        }
    }
    report
}

impl fmt::Display for DependencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return writeln!(f, "no duplicate derivations");
        }
        for (pred, groups) in &self.groups {
            writeln!(f, "{pred}:")?;
            for g in groups {
                writeln!(f, "  {} derived {} times", normalized(&g.term), g.facts.len())?;
                for (id, d) in &g.facts {
                    match d {
                        Derivation::Seed => writeln!(f, "    {id} <- seed")?,
                        Derivation::Rule { rule, premises } => {
                            let ids: Vec<String> = premises.iter().map(|p| p.to_string()).collect();
                            writeln!(f, "    {id} <- rule:{rule} premises:[{}]", ids.join(","))?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
