//! Data-flow trimming of magic predicates.
//!
//! A magic argument only helps if it is bound when the magic fact is
//! derived. Boundness is propagated left to right through every source rule,
//! starting from the abstract query. A body literal binds the variables at
//! its *success-ground* positions: positions that are ground in every answer,
//! given how the predicate is called. Phonology difference lists, for
//! instance, stay partially instantiated during generation and therefore
//! bind nothing.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::magic::MagicProgram;
use crate::program::{AbstractQuery, ClauseId, Program, Role};
use crate::term::{Predicate, Term, Var};

type Positions = BTreeSet<usize>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Adornments {
    /// Argument positions bound at every call site, per predicate.
    pub call: BTreeMap<Predicate, Positions>,
    /// Positions ground in every answer under the call pattern above.
    pub success: BTreeMap<Predicate, Positions>,
    /// Bound positions at each call site, keyed by (rule, 1-based literal).
    pub sites: BTreeMap<(ClauseId, usize), Positions>,
}

fn vars_at(atom: &Term, positions: Option<&Positions>, into: &mut HashSet<Var>) {
    if let Some(ps) = positions {
        for &i in ps {
            into.extend(atom.args()[i].vars());
        }
    }
}

fn is_bound(t: &Term, bound: &HashSet<Var>, keep_structural: bool) -> bool {
    let vars = t.vars();
    if vars.iter().all(|v| bound.contains(v)) {
        return true;
    }
    keep_structural && (!t.is_var() || vars.iter().any(|v| bound.contains(v)))
}

fn success(source: &Program, call: &BTreeMap<Predicate, Positions>) -> BTreeMap<Predicate, Positions> {
    let mut succ: BTreeMap<Predicate, Positions> = source
        .clauses()
        .iter()
        .flat_map(|c| std::iter::once(&c.head).chain(c.body.iter()))
        .filter_map(Term::predicate)
        .map(|p| {
            let all = (0..p.arity).collect();
            (p, all)
        })
        .collect();
    loop {
        let mut changed = false;
        let preds: Vec<Predicate> = source.predicates().cloned().collect();
        for p in preds {
            let mut ground: Positions = (0..p.arity).collect();
            for c in source.defining(&p) {
                let mut g = HashSet::new();
                vars_at(&c.head, call.get(&p), &mut g);
                for lit in &c.body {
                    vars_at(lit, succ.get(&lit.predicate().unwrap()), &mut g);
                }
                ground.retain(|&j| c.head.args()[j].vars().iter().all(|v| g.contains(v)));
            }
            if succ[&p] != ground {
                succ.insert(p, ground);
                changed = true;
            }
        }
        if !changed {
            return succ;
        }
    }
}

/// Call and success patterns for every predicate reachable from the query.
pub fn analyze(
    source: &Program,
    query: &Predicate,
    seed: &Positions,
    keep_structural: bool,
) -> Adornments {
    // Greatest fixpoint: every reachable predicate starts fully bound.
    let mut call: BTreeMap<Predicate, Positions> = BTreeMap::from([(query.clone(), seed.clone())]);
    let mut todo = vec![query.clone()];
    while let Some(p) = todo.pop() {
        for c in source.defining(&p) {
            for lp in c.body.iter().filter_map(Term::predicate) {
                if !call.contains_key(&lp) {
                    call.insert(lp.clone(), (0..lp.arity).collect());
                    todo.push(lp);
                }
            }
        }
    }
    loop {
        let succ = success(source, &call);
        let mut next: BTreeMap<Predicate, Positions> = BTreeMap::from([(query.clone(), seed.clone())]);
        let mut sites = BTreeMap::new();
        for c in source.clauses() {
            let Some(head_call) = call.get(&c.predicate()) else { continue };
            let mut g = HashSet::new();
            vars_at(&c.head, Some(head_call), &mut g);
            for (i, lit) in c.body.iter().enumerate() {
                let lp = lit.predicate().unwrap();
                let bound: Positions = (0..lp.arity)
                    .filter(|&j| is_bound(&lit.args()[j], &g, keep_structural))
                    .collect();
                next.entry(lp.clone())
                    .and_modify(|ps| {
                        if lp != *query {
                            ps.retain(|j| bound.contains(j))
                        }
                    })
                    .or_insert_with(|| bound.clone());
                sites.insert((c.id, i + 1), bound);
                vars_at(lit, succ.get(&lp), &mut g);
            }
        }
        if next == call {
            return Adornments { call, success: succ, sites };
        }
        call = next;
    }
}

fn format_positions(ps: &[usize]) -> String {
    let v: Vec<String> = ps.iter().map(|p| (p + 1).to_string()).collect();
    format!("[{}]", v.join(","))
}

/// Projects every magic predicate onto the argument positions that are bound
/// at every call site (for the query predicate, also by the abstract query).
///
/// In a magic rule, a retained position that this particular rule leaves
/// unbound is generalized to a fresh variable, so no partial structure
/// survives that carries no filtering information.
pub fn adorn_and_trim(mp: &MagicProgram, aq: &AbstractQuery, keep_structural: bool) -> Result<MagicProgram> {
    if aq.predicate != mp.query {
        return Err(Error::PredicateMismatch {
            expected: mp.query.clone(),
            found: aq.to_string(),
        });
    }
    let seed: Positions = aq.bound_positions().into_iter().collect();
    let an = analyze(&mp.source, &mp.query, &seed, keep_structural);

    let mut out = mp.clone();
    let mut new_kept: BTreeMap<Predicate, Vec<usize>> = BTreeMap::new();
    for (p, info) in &mp.preds {
        let call = an.call.get(p).cloned().unwrap_or_default();
        let kept: Vec<usize> = info.kept.iter().copied().filter(|i| call.contains(i)).collect();
        if !info.pruned && kept != info.kept {
            out.report.push(format!(
                "trim {} -> {}/{} keeping {}",
                info.magic_predicate(),
                info.magic_name,
                kept.len() + usize::from(info.indexed),
                format_positions(&kept)
            ));
        }
        new_kept.insert(p.clone(), kept);
    }

    let project = |atom: &Term, site: Option<&Positions>| -> Term {
        let Some(info) = atom.predicate().and_then(|p| mp.info_for_magic(&p)) else {
            return atom.clone();
        };
        let kept = &new_kept[&info.source];
        let mut args: Vec<Term> = kept
            .iter()
            .map(|pos| {
                let old = info.kept.iter().position(|k| k == pos).unwrap();
                match site {
                    Some(bound) if !bound.contains(pos) => Term::fresh_var(),
                    _ => atom.args()[old].clone(),
                }
            })
            .collect();
        if info.indexed {
            args.push(atom.args().last().unwrap().clone());
        }
        Term::app(info.magic_name.clone(), args)
    };

    let clauses = mp
        .program
        .clauses()
        .iter()
        .map(|c| {
            let site = match &c.provenance {
                Some(p) if p.unfolded.is_empty() => match p.role {
                    Role::Magic { literal } => an.sites.get(&(p.source, literal)),
                    Role::Modified => None,
                },
                _ => None,
            };
            let mut c = c.clone();
            c.head = project(&c.head, site);
            c.body = c.body.iter().map(|b| project(b, None)).collect();
            c
        })
        .collect();
    for (p, kept) in new_kept {
        out.preds.get_mut(&p).unwrap().kept = kept;
    }
    out.program = mp.program.with_clauses(clauses);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magic::{magic_transform, prune_lexical_magic};
    use crate::program::Binding;
    use crate::syntax::parse_program;
    use crate::GRAMMAR;

    fn grammar_v0() -> MagicProgram {
        let p = parse_program(GRAMMAR).unwrap();
        prune_lexical_magic(&magic_transform(&p, &Predicate::new("sentence", 3)).unwrap())
    }

    fn sentence(adornment: Vec<Binding>) -> AbstractQuery {
        AbstractQuery::new(Predicate::new("sentence", 3), adornment).unwrap()
    }

    #[test]
    fn generation_mode_reproduces_compiled_arities() {
        use Binding::*;
        let mp = adorn_and_trim(&grammar_v0(), &sentence(vec![Free, Free, Bound]), false).unwrap();
        let kept = mp.kept_positions();
        assert_eq!(kept[&Predicate::new("magic_sentence", 1)], vec![2]);
        assert_eq!(kept[&Predicate::new("magic_s", 2)], vec![2, 3]);
        assert_eq!(kept[&Predicate::new("magic_vp", 2)], vec![2, 4]);
        assert_eq!(kept[&Predicate::new("magic_np", 1)], vec![2]);
    }

    #[test]
    fn structural_mode_keeps_the_subcat_list() {
        use Binding::*;
        let mp = adorn_and_trim(&grammar_v0(), &sentence(vec![Free, Free, Bound]), true).unwrap();
        let kept = mp.kept_positions();
        assert_eq!(kept[&Predicate::new("magic_vp", 3)], vec![2, 3, 4]);
    }

    #[test]
    fn all_free_query_leaves_only_constant_information() {
        use Binding::*;
        let mp = adorn_and_trim(&grammar_v0(), &sentence(vec![Free, Free, Free]), false).unwrap();
        let kept = mp.kept_positions();
        assert_eq!(kept[&Predicate::new("magic_sentence", 0)], Vec::<usize>::new());
        assert_eq!(kept[&Predicate::new("magic_np", 0)], Vec::<usize>::new());
        // `finite` is a constant in rule 1 and still filters.
        assert_eq!(kept[&Predicate::new("magic_s", 1)], vec![2]);

        let p = parse_program("p(X,Y) :- q(X,Z), r(Z,Y). q(a,b). r(b,c).").unwrap();
        let mp = magic_transform(&p, &Predicate::new("p", 2)).unwrap();
        let q = AbstractQuery::new(Predicate::new("p", 2), vec![Free, Free]).unwrap();
        let mp = adorn_and_trim(&mp, &q, false).unwrap();
        let kept = mp.kept_positions();
        assert_eq!(kept[&Predicate::new("magic_p", 0)], Vec::<usize>::new());
        assert_eq!(kept[&Predicate::new("magic_q", 0)], Vec::<usize>::new());
        // q answers are ground, so Z is bound when r is called.
        assert_eq!(kept[&Predicate::new("magic_r", 1)], vec![0]);
    }

    #[test]
    fn seed_bound_positions_are_never_trimmed() {
        use Binding::*;
        for ad in [vec![Bound, Free, Free], vec![Free, Bound, Bound], vec![Bound, Bound, Bound]] {
            let q = sentence(ad.clone());
            let mp = adorn_and_trim(&grammar_v0(), &q, false).unwrap();
            let kept = &mp.preds[&Predicate::new("sentence", 3)].kept;
            for b in q.bound_positions() {
                assert!(kept.contains(&b), "{ad:?}");
            }
        }
    }

    #[test]
    fn positions_unbound_at_one_call_site_are_dropped() {
        use Binding::*;
        let p = parse_program(crate::PARSE_GRAMMAR).unwrap();
        let mp = prune_lexical_magic(&magic_transform(&p, &Predicate::new("sentence", 3)).unwrap());
        let mp = adorn_and_trim(&mp, &sentence(vec![Bound, Bound, Free]), false).unwrap();
        let kept = mp.kept_positions();
        // The recursive vp call leaves its end position open.
        assert_eq!(kept[&Predicate::new("magic_vp", 2)], vec![0, 2]);
        assert_eq!(kept[&Predicate::new("magic_np", 1)], vec![0]);
        assert_eq!(kept[&Predicate::new("magic_s", 3)], vec![0, 1, 2]);
    }

    #[test]
    fn wrong_predicate_is_rejected() {
        let q = AbstractQuery::new(Predicate::new("s", 4), vec![Binding::Free; 4]).unwrap();
        assert!(adorn_and_trim(&grammar_v0(), &q, false).is_err());
    }
}
