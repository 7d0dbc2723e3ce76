use std::collections::HashSet;

use magicforge::term::canonical;
use magicforge::{
    analyze_duplicates, answers, compile, evaluate, parse_mode, parse_program, parse_query, trace, variant, Chart,
    Derivation, EvalConfig, EvalError, MagicProgram, PipelineSpec, Program, Strategy, Term, Unifier, GRAMMAR,
};

const QUERY: &str = "sentence(P0,P,decl(buys(john,a(book),mary)))";

const LEXICAL: [&str; 5] = [
    "det([a|P],P,NSem,a(NSem))",
    "v([buys|P],P,finite,[I,D,S],buys(S,D,I))",
    "pn([mary|P],P,mary)",
    "n([book|P],P,book)",
    "pn([john|P],P,john)",
];

// Derived by hand from the generation-ordered grammar and the seed above.
const V1_CHART: [&str; 15] = [
    "magic_sentence(decl(buys(john,a(book),mary)))",
    "magic_s(finite,buys(john,a(book),mary))",
    "magic_vp(finite,buys(john,a(book),mary))",
    "vp([buys|A],A,finite,[mary,a(book),john],buys(john,a(book),mary))",
    "magic_np(mary)",
    "np([mary|A],A,mary)",
    "vp([buys,mary|A],A,finite,[a(book),john],buys(john,a(book),mary))",
    "magic_np(a(book))",
    "np([a,book|A],A,a(book))",
    "vp([buys,mary,a,book|A],A,finite,[john],buys(john,a(book),mary))",
    "magic_np(john)",
    "np([john|A],A,john)",
    "vp([buys,mary,a,book,john|A],A,finite,[],buys(john,a(book),mary))",
    "s([john,buys,mary,a,book|A],A,finite,buys(john,a(book),mary))",
    "sentence([john,buys,mary,a,book|A],A,decl(buys(john,a(book),mary)))",
];

const V2_CHART: [&str; 15] = [
    "magic_sentence(decl(buys(john,a(book),mary)))",
    "vp([buys|A],A,finite,[mary,a(book),john],buys(john,a(book),mary))",
    "magic_np(mary,index_2)",
    "np([mary|A],A,mary,index_2)",
    "vp([buys,mary|A],A,finite,[a(book),john],buys(john,a(book),mary))",
    "magic_np(a(book),index_2)",
    "np([a,book|A],A,a(book),index_2)",
    "vp([buys,mary,a,book|A],A,finite,[john],buys(john,a(book),mary))",
    "magic_np(john,index_1)",
    "magic_np(john,index_2)",
    "np([john|A],A,john,index_1)",
    "np([john|A],A,john,index_2)",
    "vp([buys,mary,a,book,john|A],A,finite,[],buys(john,a(book),mary))",
    "s([john,buys,mary,a,book|A],A,finite,buys(john,a(book),mary))",
    "sentence([john,buys,mary,a,book|A],A,decl(buys(john,a(book),mary)))",
];

fn atom(s: &str) -> Term {
    parse_query(s).unwrap()
}

fn compiled(preset: &str) -> MagicProgram {
    let p = parse_program(GRAMMAR).unwrap();
    let aq = parse_mode("sentence(f,f,b)").unwrap();
    let spec = PipelineSpec::preset(preset).unwrap().unwrap();
    compile(&p, &aq.predicate, Some(&aq), &spec).unwrap()
}

fn run(preset: &str, cfg: &EvalConfig) -> Result<Chart, EvalError> {
    let mp = compiled(preset);
    let seed = mp.make_seed(&atom(QUERY)).unwrap();
    evaluate(&mp.program, &[seed], cfg)
}

fn fact_set(chart: &Chart) -> HashSet<Term> {
    chart.facts().map(|f| canonical(&f.term)).collect()
}

fn expected(derived: &[&str]) -> HashSet<Term> {
    derived.iter().chain(LEXICAL.iter()).map(|s| canonical(&atom(s))).collect()
}

#[test]
fn v1_generation_chart() {
    let chart = run("v1", &EvalConfig::default()).unwrap();
    assert_eq!(fact_set(&chart), expected(&V1_CHART));
    assert_eq!(chart.len(), 20);
    let got = answers(&chart, &atom("sentence(P0,[],S)"));
    assert_eq!(got.len(), 1);
    assert!(variant(&got[0].1, &atom("sentence([john,buys,mary,a,book],[],decl(buys(john,a(book),mary)))")));
}

#[test]
fn v1_sentence_derivation_uses_the_guard() {
    let chart = run("v1", &EvalConfig::default()).unwrap();
    let s = chart.facts().find(|f| f.term.name().unwrap().as_ref() == "s").unwrap();
    let Derivation::Rule { rule, premises } = &s.derivation else { panic!() };
    assert_eq!(*rule, 2);
    let names: Vec<String> =
        premises.iter().map(|p| chart.get(*p).unwrap().term.name().unwrap().to_string()).collect();
    assert_eq!(names, ["magic_s", "vp", "np"]);
    let t = trace(&chart, s.id).unwrap();
    assert_eq!(t.children.len(), 3);
}

#[test]
fn v2_not_so_naive_chart() {
    let chart = run("v2", &EvalConfig::with_strategy(Strategy::NotSoNaive)).unwrap();
    assert_eq!(fact_set(&chart), expected(&V2_CHART));
    assert_eq!(chart.len(), 20);
    assert!(analyze_duplicates(&chart).is_empty());
    assert_eq!(chart.count_with_prefix("magic_"), 5);
}

#[test]
fn v1_without_cycle_removal_loops_under_not_so_naive() {
    let cfg = EvalConfig { max_facts: 5000, ..EvalConfig::with_strategy(Strategy::NotSoNaive) };
    match run("v1-no-cycle-removal", &cfg) {
        Err(EvalError::ResourceExceeded { chart, .. }) => {
            // The cyclic magic rule re-derives the same filter every round.
            let report = analyze_duplicates(&chart);
            let groups = &report.groups[&magicforge::Predicate::new("magic_vp", 2)];
            assert_eq!(groups.len(), 1);
            assert!(groups[0].facts.len() > 2);
            assert!(chart.count_with_prefix("vp") > 4000);
        }
        other => panic!("expected non-termination, got {other:?}"),
    }
}

/// Replays a stored derivation: unifying the rule body with the premises
/// must reproduce the fact.
fn replay(program: &Program, chart: &Chart) {
    for f in chart.all_facts() {
        let Derivation::Rule { rule, premises } = &f.derivation else { continue };
        let c = program.clause(*rule).unwrap().rename_apart();
        let mut u = Unifier::new(true);
        for (lit, p) in c.body.iter().zip(premises) {
            let premise = magicforge::rename_apart(&chart.get(*p).unwrap().term);
            assert!(u.unify(lit, &premise), "fact {} premise {p}", f.id);
            assert!(*p < f.id);
        }
        assert!(variant(&u.resolve(&c.head).unwrap(), &f.term), "fact {}", f.id);
    }
}

#[test]
fn derivations_replay() {
    for (preset, strategy) in [("v1", Strategy::SemiNaive), ("v2", Strategy::NotSoNaive), ("v2", Strategy::Naive)] {
        let mp = compiled(preset);
        let seed = mp.make_seed(&atom(QUERY)).unwrap();
        let chart = evaluate(&mp.program, &[seed], &EvalConfig::with_strategy(strategy)).unwrap();
        replay(&mp.program, &chart);
    }
}

#[test]
fn evaluation_is_deterministic() {
    let a = run("v2", &EvalConfig::with_strategy(Strategy::NotSoNaive)).unwrap();
    let b = run("v2", &EvalConfig::with_strategy(Strategy::NotSoNaive)).unwrap();
    assert_eq!(a.dump(), b.dump());
}

#[test]
fn strategies_agree_on_the_fixtures() {
    for preset in ["v1", "v2"] {
        let mut sets = Vec::new();
        for cfg in [
            EvalConfig::with_strategy(Strategy::Naive),
            EvalConfig { subsumption: false, ..EvalConfig::with_strategy(Strategy::Naive) },
            EvalConfig::with_strategy(Strategy::SemiNaive),
            EvalConfig { subsumption: false, ..EvalConfig::default() },
        ] {
            sets.push(fact_set(&run(preset, &cfg).unwrap()));
        }
        assert!(sets.windows(2).all(|w| w[0] == w[1]), "{preset}");
    }
    let nsn = fact_set(&run("v2", &EvalConfig::with_strategy(Strategy::NotSoNaive)).unwrap());
    assert_eq!(nsn, fact_set(&run("v2", &EvalConfig::default()).unwrap()));
}

#[test]
fn lexical_only_mode_finds_the_same_sentence() {
    let p = parse_program(GRAMMAR).unwrap();
    let aq = parse_mode("sentence(f,f,b)").unwrap();
    let spec = PipelineSpec {
        mode: magicforge::CompileMode::LexicalOnly,
        ..PipelineSpec::with(&[magicforge::Optimization::Trim])
    };
    let mp = compile(&p, &aq.predicate, Some(&aq), &spec).unwrap();
    let seed = mp.make_seed(&atom(QUERY)).unwrap();
    let chart = evaluate(&mp.program, &[seed], &EvalConfig::default()).unwrap();
    let q = atom("sentence(P0,[],decl(buys(john,a(book),mary)))");
    let lex = answers(&chart, &q);
    let full = answers(&run("v1", &EvalConfig::default()).unwrap(), &q);
    assert_eq!(lex.len(), 1);
    assert!(variant(&lex[0].1, &full[0].1));
}

#[test]
fn raw_grammar_is_finite_but_large() {
    let p = parse_program(GRAMMAR).unwrap();
    let chart = evaluate(&p, &[], &EvalConfig::default()).unwrap();
    // Without a goal every sentence the grammar licenses is built.
    let sentences = answers(&chart, &atom("sentence(P0,[],S)"));
    assert_eq!(sentences.len(), 27);
    assert!(chart.len() > 100);
}
