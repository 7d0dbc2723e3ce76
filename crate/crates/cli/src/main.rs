use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magicforge::term::{match_term, normalized};
use magicforge::{
    analyze_duplicates, answers, compile, evaluate, parse_mode, parse_program, parse_query, print_program, trace,
    AbstractQuery, Chart, CompileMode, Error, EvalConfig, EvalError, IndexScope, MagicProgram,
    PipelineSpec, Predicate, Program, Strategy, Term,
};

#[derive(Parser)]
#[command(name = "magicforge", version, about = "Magic compilation and bottom-up evaluation of definite-clause grammars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the compiled program.
    Compile(Opts),
    /// Compile, evaluate from the query seed, print chart and answers.
    Run(Opts),
    /// Evaluate not-so-naively and list variant facts derived more than once.
    Diagnose(Opts),
}

#[derive(Args)]
struct Opts {
    grammar: PathBuf,
    /// Query atom, or `name/arity`.
    #[arg(long)]
    query: Option<String>,
    /// Abstract query such as `sentence(f,f,b)`; defaults to the file's directive.
    #[arg(long)]
    mode: Option<String>,
    /// Named pipeline: v1, v1-no-cycle-removal, v2 or none.
    #[arg(long)]
    pipeline: Option<String>,
    /// Comma-separated optimizations; overrides --pipeline.
    #[arg(long)]
    opt: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::FullMagic)]
    compile_mode: ModeArg,
    #[arg(long)]
    keep_structural: bool,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = ScopeArg::OverlappingOnly)]
    index_scope: ScopeArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::SemiNaive)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    subsumption: Switch,
    #[arg(long)]
    no_occurs_check: bool,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 100_000)]
    max_facts: usize,
    /// Largest derived fact in term nodes.
    #[arg(long, default_value_t = 100_000)]
    max_term_size: usize,
    /// Extra seed fact; repeatable.
    #[arg(long = "seed")]
    seeds: Vec<String>,
    /// Comma-separated subset of program,report,chart,trace,answers.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModeArg {
    FullMagic,
    LexicalOnly,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ScopeArg {
    OverlappingOnly,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum StrategyArg {
    Naive,
    SemiNaive,
    NotSoNaive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

const EXIT_PARSE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_DUPLICATES: u8 = 4;

struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Syntax { .. }) { EXIT_PARSE } else { EXIT_USAGE };
        Fail(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail(EXIT_USAGE, msg.into())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Output {
    Program,
    Report,
    Chart,
    Trace,
    Answers,
}

fn parse_outputs(text: &str) -> Result<Vec<Output>, Fail> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "program" => Ok(Output::Program),
            "report" => Ok(Output::Report),
            "chart" => Ok(Output::Chart),
            "trace" => Ok(Output::Trace),
            "answers" => Ok(Output::Answers),
            _ => Err(usage(format!("unknown output `{s}`"))),
        })
        .collect()
}

/// A query given as `name/arity` or as an atom.
enum QueryArg {
    Predicate(Predicate),
    Atom { atom: Term, names: Vec<Option<String>> },
}

impl QueryArg {
    fn parse(text: &str) -> Result<Self, Fail> {
        if let Some((name, arity)) = text.trim().rsplit_once('/') {
            if let Ok(arity) = arity.trim().parse() {
                return Ok(QueryArg::Predicate(Predicate::new(name.trim(), arity)));
            }
        }
        let atom = parse_query(text)?;
        Ok(QueryArg::Atom { atom, names: var_names(text) })
    }

    fn predicate(&self) -> Predicate {
        match self {
            QueryArg::Predicate(p) => p.clone(),
            QueryArg::Atom { atom, .. } => atom.predicate().unwrap(),
        }
    }

    fn atom(&self) -> Term {
        match self {
            QueryArg::Predicate(p) => {
                Term::app(p.name.clone(), (0..p.arity).map(|_| Term::fresh_var()).collect())
            }
            QueryArg::Atom { atom, .. } => atom.clone(),
        }
    }
}

/// Variable names of a query text in first-occurrence order; `None` for `_`.
fn var_names(text: &str) -> Vec<Option<String>> {
    let mut out: Vec<Option<String>> = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '%' {
            break;
        }
        if !(c.is_alphanumeric() || c == '_') {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, d)) = chars.peek() {
            if !(d.is_alphanumeric() || d == '_') {
                break;
            }
            end = j + d.len_utf8();
            chars.next();
        }
        let word = &text[i..end];
        if word == "_" {
            out.push(None);
        } else if (c.is_uppercase() || c == '_') && !out.iter().any(|n| n.as_deref() == Some(word)) {
            out.push(Some(word.to_string()));
        }
    }
    out
}

struct Setup {
    program: Program,
    compiled: Option<MagicProgram>,
    seeds: Vec<Term>,
    pattern: Option<Term>,
    names: Vec<Option<String>>,
}

fn load(opts: &Opts) -> Result<Program, Fail> {
    let text = std::fs::read_to_string(&opts.grammar)
        .map_err(|e| Fail(EXIT_PARSE, format!("{}: {e}", opts.grammar.display())))?;
    Ok(parse_program(&text)?)
}

fn pipeline(opts: &Opts, have_mode: bool) -> Result<Option<PipelineSpec>, Fail> {
    let base = match (&opts.opt, &opts.pipeline) {
        (Some(list), _) => Some(PipelineSpec::with(&PipelineSpec::parse_list(list)?)),
        (None, Some(name)) => PipelineSpec::preset(name)?,
        (None, None) if have_mode => PipelineSpec::preset("v2")?,
        (None, None) => Some(PipelineSpec::default()),
    };
    Ok(base.map(|spec| PipelineSpec {
        mode: match opts.compile_mode {
            ModeArg::FullMagic => CompileMode::FullMagic,
            ModeArg::LexicalOnly => CompileMode::LexicalOnly,
        },
        keep_structural: opts.keep_structural,
        depth: opts.depth,
        index_scope: match opts.index_scope {
            ScopeArg::OverlappingOnly => IndexScope::OverlappingOnly,
            ScopeArg::All => IndexScope::All,
        },
        ..spec
    }))
}

fn setup(opts: &Opts) -> Result<Setup, Fail> {
    let program = load(opts)?;
    let query = opts.query.as_deref().map(QueryArg::parse).transpose()?;
    let aq: Option<AbstractQuery> = match &opts.mode {
        Some(m) => Some(parse_mode(m)?),
        None => match &query {
            Some(q) => program.modes.iter().find(|m| m.predicate == q.predicate()).cloned(),
            None => program.modes.first().cloned(),
        },
    };
    let mut seeds = Vec::new();
    for s in &opts.seeds {
        seeds.push(parse_query(s)?);
    }
    let names = match &query {
        Some(QueryArg::Atom { names, .. }) => names.clone(),
        _ => Vec::new(),
    };
    let target = query.as_ref().map(QueryArg::predicate).or_else(|| aq.as_ref().map(|m| m.predicate.clone()));
    let spec = pipeline(opts, aq.is_some())?;
    let (Some(spec), Some(target)) = (spec, target) else {
        if opts.opt.is_some() {
            return Err(usage("--opt needs a query predicate (--query or a mode)"));
        }
        let pattern = query.as_ref().map(QueryArg::atom);
        return Ok(Setup { program, compiled: None, seeds, pattern, names });
    };
    let mp = compile(&program, &target, aq.as_ref(), &spec)?;
    let atom = query.as_ref().map(QueryArg::atom).unwrap_or_else(|| QueryArg::Predicate(target.clone()).atom());
    match mp.make_seed(&atom) {
        Ok(seed) => seeds.insert(0, seed),
        Err(Error::NoSeed(_)) => {}
        Err(e) => return Err(e.into()),
    }
    let pattern = Some(mp.query_atom(&atom));
    Ok(Setup { program: mp.program.clone(), compiled: Some(mp), seeds, pattern, names })
}

fn config(opts: &Opts, strategy: Strategy) -> EvalConfig {
    EvalConfig {
        strategy,
        subsumption: matches!(opts.subsumption, Switch::On),
        occurs_check: !opts.no_occurs_check,
        max_iterations: opts.max_iter,
        max_facts: opts.max_facts,
        max_term_size: opts.max_term_size,
    }
}

fn strategy(opts: &Opts) -> Strategy {
    match opts.strategy {
        StrategyArg::Naive => Strategy::Naive,
        StrategyArg::SemiNaive => Strategy::SemiNaive,
        StrategyArg::NotSoNaive => Strategy::NotSoNaive,
    }
}

fn program_text(s: &Setup, outputs: &[Output]) -> String {
    let mut out = String::new();
    if outputs.contains(&Output::Report) {
        for line in s.compiled.iter().flat_map(|mp| &mp.report) {
            writeln!(out, "% {line}").unwrap();
        }
    }
    if outputs.contains(&Output::Program) {
        out.push_str(&print_program(&s.program));
    }
    out
}

fn chart_text(s: &Setup, chart: &Chart, outputs: &[Output]) -> String {
    let mut out = String::new();
    if outputs.contains(&Output::Chart) {
        out.push_str(&chart.dump());
    }
    let Some(pattern) = &s.pattern else { return out };
    let found = answers(chart, pattern);
    if outputs.contains(&Output::Answers) {
        writeln!(out, "% answers: {}", found.len()).unwrap();
        let vars = pattern.vars();
        for (id, t) in &found {
            writeln!(out, "{id}. {}", normalized(t)).unwrap();
            let mut theta = HashMap::new();
            if !match_term(pattern, t, &mut theta) {
                continue;
            }
            for (v, name) in vars.iter().zip(&s.names) {
                if let (Some(name), Some(value)) = (name, theta.get(v)) {
                    writeln!(out, "    {name} = {}", normalized(value)).unwrap();
                }
            }
        }
    }
    if outputs.contains(&Output::Trace) {
        for (id, _) in &found {
            if let Ok(tree) = trace(chart, *id) {
                write!(out, "{tree}").unwrap();
            }
        }
    }
    out
}

fn evaluate_or_partial(s: &Setup, cfg: &EvalConfig) -> Result<(Chart, Option<String>), Fail> {
    match evaluate(&s.program, &s.seeds, cfg) {
        Ok(chart) => Ok((chart, None)),
        Err(EvalError::ResourceExceeded { chart, limit }) => Ok((*chart, Some(format!("resource limit exceeded: {limit}")))),
        Err(e) => Err(usage(e.to_string())),
    }
}

fn execute(cli: Cli) -> Result<(String, u8, Option<String>), Fail> {
    match cli.command {
        Command::Compile(opts) => {
            let outputs = parse_outputs(opts.output.as_deref().unwrap_or("report,program"))?;
            let s = setup(&opts)?;
            Ok((program_text(&s, &outputs), 0, None))
        }
        Command::Run(opts) => {
            let outputs = parse_outputs(opts.output.as_deref().unwrap_or("chart,answers"))?;
            let s = setup(&opts)?;
            let mut out = program_text(&s, &outputs);
            let (chart, limit) = evaluate_or_partial(&s, &config(&opts, strategy(&opts)))?;
            out.push_str(&chart_text(&s, &chart, &outputs));
            let code = if limit.is_some() { EXIT_LIMIT } else { 0 };
            Ok((out, code, limit))
        }
        Command::Diagnose(opts) => {
            let outputs = parse_outputs(opts.output.as_deref().unwrap_or(""))?;
            let s = setup(&opts)?;
            let mut out = program_text(&s, &outputs);
            let (chart, limit) = evaluate_or_partial(&s, &config(&opts, Strategy::NotSoNaive))?;
            out.push_str(&chart_text(&s, &chart, &outputs));
            let report = analyze_duplicates(&chart);
            out.push_str(&report.to_string());
            let code = match (&limit, report.is_empty()) {
                (Some(_), _) => EXIT_LIMIT,
                (None, true) => 0,
                (None, false) => EXIT_DUPLICATES,
            };
            Ok((out, code, limit))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok((out, code, note)) => {
            print!("{out}");
            if let Some(note) = note {
                eprintln!("magicforge: {note}");
            }
            ExitCode::from(code)
        }
        Err(Fail(code, msg)) => {
            eprintln!("magicforge: {msg}");
            ExitCode::from(code)
        }
    }
}
