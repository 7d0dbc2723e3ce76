use magicforge::{
    compile, parse_mode, parse_program, print_program, variant, Clause, CompileMode, IndexScope, Optimization,
    PipelineSpec, Program, Role, Term, GRAMMAR, PARSE_GRAMMAR, V1_GOLDEN, V2_GOLDEN,
};

fn as_term(c: &Clause) -> Term {
    Term::app("clause", vec![c.head.clone(), Term::list(c.body.clone(), Term::nil())])
}

fn is_magic(c: &Clause) -> bool {
    c.provenance.as_ref().is_some_and(|p| matches!(p.role, Role::Magic { .. }))
}

fn same_clauses(got: &Program, want: &Program) {
    assert_eq!(got.len(), want.len(), "\n{}", print_program(got));
    for (g, w) in got.clauses().iter().zip(want.clauses()) {
        assert!(variant(&as_term(g), &as_term(w)), "got {g}\nwant {w}");
    }
}

fn compile_grammar(spec: &PipelineSpec) -> magicforge::MagicProgram {
    let p = parse_program(GRAMMAR).unwrap();
    let aq = parse_mode("sentence(f,f,b)").unwrap();
    compile(&p, &aq.predicate, Some(&aq), spec).unwrap()
}

#[test]
fn v1_matches_the_golden_program() {
    let mp = compile_grammar(&PipelineSpec::preset("v1").unwrap().unwrap());
    same_clauses(&mp.program, &parse_program(V1_GOLDEN).unwrap());
    let magic = mp.program.clauses().iter().filter(|c| is_magic(c)).count();
    assert_eq!(magic, 5);
}

#[test]
fn v2_matches_the_golden_program() {
    let mp = compile_grammar(&PipelineSpec::preset("v2").unwrap().unwrap());
    same_clauses(&mp.program, &parse_program(V2_GOLDEN).unwrap());
}

#[test]
fn magic_rules_follow_the_source() {
    let mp = compile_grammar(&PipelineSpec::preset("v1").unwrap().unwrap());
    let ids: Vec<u32> = mp.program.clauses().iter().map(|c| c.id).collect();
    assert_eq!(ids, (1..=16).collect::<Vec<u32>>());
    assert!(mp.program.clauses().iter().filter(|c| c.id <= 11).all(|c| !is_magic(c)));
}

#[test]
fn report_names_every_step() {
    let mp = compile_grammar(&PipelineSpec::preset("v2").unwrap().unwrap());
    let joined = mp.report.join("\n");
    for needle in ["trim magic_vp/5 -> magic_vp/2", "remove cyclic rule 14", "index rule", "unfold"] {
        assert!(joined.contains(needle), "missing `{needle}` in\n{joined}");
    }
}

#[test]
fn index_scope_all_still_agrees_on_answers() {
    let spec = PipelineSpec { index_scope: IndexScope::All, ..PipelineSpec::preset("v2").unwrap().unwrap() };
    let mp = compile_grammar(&spec);
    let text = print_program(&mp.program);
    assert!(text.contains("index_"));
}

#[test]
fn parse_direction_compiles() {
    let p = parse_program(PARSE_GRAMMAR).unwrap();
    let aq = parse_mode("sentence(b,b,f)").unwrap();
    for preset in ["v1", "v2"] {
        let mp = compile(&p, &aq.predicate, Some(&aq), &PipelineSpec::preset(preset).unwrap().unwrap()).unwrap();
        assert!(mp.program.len() >= p.len());
    }
}

#[test]
fn lexical_only_guards_only_the_lexicon() {
    let spec = PipelineSpec { mode: CompileMode::LexicalOnly, ..PipelineSpec::with(&[Optimization::Trim]) };
    let mp = compile_grammar(&spec);
    for c in mp.program.clauses() {
        if !c.provenance.as_ref().is_some_and(|p| p.role == Role::Modified) {
            continue;
        }
        let guarded = c.body.first().is_some_and(|b| mp.is_magic_atom(b));
        let lexical = mp.source.is_lexical(&c.head.predicate().unwrap()).unwrap();
        assert_eq!(guarded, lexical, "{c}");
    }
}
