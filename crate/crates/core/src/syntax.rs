//! Concrete syntax for programs, queries and mode directives.
//!
//! ```text
//! % comment
//! :- mode sentence(f,f,b).
//! sentence(P0,P,decl(SSem)) :- s(P0,P,finite,SSem).
//! pn([mary|P],P,mary).
//! ```
//!
//! A line starting with `%@` is a comment to other tools but carries the
//! clause identity and provenance of the clause that follows it, e.g.
//! `%@ id=14 magic=2/2 unfolded=11`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::program::{AbstractQuery, Binding, Clause, ClauseId, Program, Provenance, Role};
use crate::term::{Predicate, Term, Var};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Atom(String),
    Var(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Bar,
    Dot,
    Neck,
    QueryMark,
    Pragma(String),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, column, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let ch = chars[i];
        let (l, c) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        match ch {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i),
            '%' => {
                let start = i;
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                let comment: String = chars[start..i].iter().collect();
                if let Some(rest) = comment.strip_prefix("%@") {
                    out.push(Spanned { tok: Tok::Pragma(rest.trim().to_string()), line: l, column: c });
                }
            }
            '(' | ')' | '[' | ']' | ',' | '|' | '.' => {
                let tok = match ch {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBrack,
                    ']' => Tok::RBrack,
                    ',' => Tok::Comma,
                    '|' => Tok::Bar,
                    _ => Tok::Dot,
                };
                out.push(Spanned { tok, line: l, column: c });
                advance(1, &mut i);
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                out.push(Spanned { tok: Tok::Neck, line: l, column: c });
                advance(2, &mut i);
            }
            '?' if chars.get(i + 1) == Some(&'-') => {
                out.push(Spanned { tok: Tok::QueryMark, line: l, column: c });
                advance(2, &mut i);
            }
            c0 if c0.is_alphanumeric() || c0 == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                let word: String = chars[start..i].iter().collect();
                let tok = if c0.is_uppercase() || c0 == '_' { Tok::Var(word) } else { Tok::Atom(word) };
                out.push(Spanned { tok, line: l, column: c });
            }
            other => return Err(syntax(l, c, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
    vars: HashMap<String, Var>,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        let toks = tokenize(text)?;
        let lines = text.lines().count().max(1);
        let last_col = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
        Ok(Parser { toks, pos: 0, end: (lines, last_col), vars: HashMap::new() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|s| (s.line, s.column)).unwrap_or(self.end)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.next() {
            Some(Tok::Var(name)) => {
                if name == "_" {
                    return Ok(Term::fresh_var());
                }
                Ok(Term::Var(*self.vars.entry(name).or_insert_with(Var::fresh)))
            }
            Some(Tok::Atom(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = vec![self.term()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.term()?);
                    }
                    self.expect(Tok::RParen, "`,` or `)`")?;
                    Ok(Term::app(name.as_str(), args))
                } else {
                    Ok(Term::constant(&name))
                }
            }
            Some(Tok::LBrack) => {
                if self.peek() == Some(&Tok::RBrack) {
                    self.pos += 1;
                    return Ok(Term::nil());
                }
                let mut items = vec![self.term()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    items.push(self.term()?);
                }
                let tail = if self.peek() == Some(&Tok::Bar) {
                    self.pos += 1;
                    self.term()?
                } else {
                    Term::nil()
                };
                self.expect(Tok::RBrack, "`]`")?;
                Ok(Term::list(items, tail))
            }
            _ => {
                self.pos -= 1;
                Err(self.error("expected a term"))
            }
        }
    }

    fn atom(&mut self) -> Result<Term> {
        let at = self.pos;
        let t = self.term()?;
        if t.is_var() || t.name().is_some_and(|n| &**n == crate::term::CONS || &**n == crate::term::NIL) {
            self.pos = at;
            return Err(self.error("expected an atom"));
        }
        Ok(t)
    }

    fn mode(&mut self) -> Result<AbstractQuery> {
        let (l, c) = self.here();
        let name = match self.next() {
            Some(Tok::Atom(n)) => n,
            _ => return Err(syntax(l, c, "expected a predicate name in mode directive")),
        };
        let mut adornment = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            loop {
                let (l, c) = self.here();
                match self.next() {
                    Some(Tok::Atom(m)) if m == "b" => adornment.push(Binding::Bound),
                    Some(Tok::Atom(m)) if m == "f" => adornment.push(Binding::Free),
                    _ => return Err(syntax(l, c, "mode markers must be `b` or `f`")),
                }
                match self.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RParen) => break,
                    _ => return Err(self.error("expected `,` or `)` in mode directive")),
                }
            }
        }
        Ok(AbstractQuery { predicate: Predicate::new(&name, adornment.len()), adornment })
    }
}

fn parse_pragma(text: &str, line: usize) -> Result<(Option<ClauseId>, Option<Provenance>)> {
    let bad = |m: &str| syntax(line, 1, format!("malformed clause annotation: {m}"));
    let num = |s: &str| s.parse::<u32>().map_err(|_| bad(s));
    let mut id = None;
    let mut prov: Option<Provenance> = None;
    let mut unfolded = Vec::new();
    for field in text.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| bad(field))?;
        match key {
            "id" => id = Some(num(value)?),
            "modified" => prov = Some(Provenance::modified(num(value)?)),
            "magic" => {
                let (src, lit) = value.split_once('/').ok_or_else(|| bad(value))?;
                prov = Some(Provenance::magic(num(src)?, num(lit)? as usize));
            }
            "unfolded" => {
                for v in value.split(',') {
                    unfolded.push(num(v)?);
                }
            }
            _ => return Err(bad(key)),
        }
    }
    if let Some(p) = prov.as_mut() {
        p.unfolded = unfolded;
    }
    Ok((id, prov))
}

/// Parses a program. Clause ids default to the 1-based clause position.
pub fn parse_program(text: &str) -> Result<Program> {
    let mut p = Parser::new(text)?;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut modes = Vec::new();
    let mut pending: Option<(Option<ClauseId>, Option<Provenance>)> = None;
    while let Some(tok) = p.peek().cloned() {
        match tok {
            Tok::Pragma(text) => {
                let line = p.toks[p.pos].line;
                p.pos += 1;
                pending = Some(parse_pragma(&text, line)?);
            }
            Tok::Neck => {
                p.pos += 1;
                match p.next() {
                    Some(Tok::Atom(d)) if d == "mode" => modes.push(p.mode()?),
                    _ => {
                        p.pos -= 1;
                        return Err(p.error("only `:- mode ...` directives are supported"));
                    }
                }
                p.expect(Tok::Dot, "`.` after directive")?;
            }
            Tok::QueryMark => return Err(p.error("queries belong in a separate query text")),
            _ => {
                p.vars.clear();
                let head = p.atom()?;
                let mut body = Vec::new();
                if p.peek() == Some(&Tok::Neck) {
                    p.pos += 1;
                    body.push(p.atom()?);
                    while p.peek() == Some(&Tok::Comma) {
                        p.pos += 1;
                        body.push(p.atom()?);
                    }
                }
                p.expect(Tok::Dot, "`.` at end of clause")?;
                let (id, provenance) = pending.take().unwrap_or((None, None));
                let id = id.unwrap_or(clauses.len() as ClauseId + 1);
                clauses.push(Clause { id, head, body, provenance });
            }
        }
    }
    let mut program = Program::new(clauses);
    program.modes = modes;
    Ok(program)
}

/// Parses `?- p(t1,..,tn).`; both the `?-` and the final period are optional.
pub fn parse_query(text: &str) -> Result<Term> {
    let mut p = Parser::new(text)?;
    if p.peek() == Some(&Tok::QueryMark) {
        p.pos += 1;
    }
    let t = p.atom()?;
    if p.peek() == Some(&Tok::Dot) {
        p.pos += 1;
    }
    if p.peek().is_some() {
        return Err(p.error("trailing input after query"));
    }
    Ok(t)
}

/// Parses a bare mode pattern such as `sentence(f,f,b)`.
pub fn parse_mode(text: &str) -> Result<AbstractQuery> {
    let mut p = Parser::new(text)?;
    if p.peek() == Some(&Tok::Neck) {
        p.pos += 1;
        if p.peek() == Some(&Tok::Atom("mode".into())) {
            p.pos += 1;
        }
    }
    let q = p.mode()?;
    if p.peek() == Some(&Tok::Dot) {
        p.pos += 1;
    }
    if p.peek().is_some() {
        return Err(p.error("trailing input after mode"));
    }
    Ok(q)
}

fn pragma(c: &Clause, position: usize) -> Option<String> {
    let mut s = String::new();
    if c.id as usize != position || c.provenance.is_some() {
        write!(s, "%@ id={}", c.id).unwrap();
    }
    if let Some(p) = &c.provenance {
        match p.role {
            Role::Modified => write!(s, " modified={}", p.source).unwrap(),
            Role::Magic { literal } => write!(s, " magic={}/{}", p.source, literal).unwrap(),
        }
        if !p.unfolded.is_empty() {
            let ids: Vec<String> = p.unfolded.iter().map(|i| i.to_string()).collect();
            write!(s, " unfolded={}", ids.join(",")).unwrap();
        }
    }
    (!s.is_empty()).then_some(s)
}

/// Canonical text: mode directives, then one clause per line, with an
/// annotation line wherever id or provenance would not survive re-parsing.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for m in &p.modes {
        writeln!(out, ":- mode {m}.").unwrap();
    }
    for (i, c) in p.clauses().iter().enumerate() {
        if let Some(line) = pragma(c, i + 1) {
            writeln!(out, "{line}").unwrap();
        }
        writeln!(out, "{c}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::variant;

    #[test]
    fn parses_a_rule() {
        let p = parse_program("vp(P0,P,VF,A,S) :- v(P0,P,VF,A,S).").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.clauses()[0].body.len(), 1);
        assert_eq!(p.clauses()[0].id, 1);
    }

    #[test]
    fn parses_list_sugar_in_unit_clause() {
        let p = parse_program("pn([mary|P],P,mary).").unwrap();
        let c = &p.clauses()[0];
        assert!(c.is_unit());
        assert_eq!(c.to_string(), "pn([mary|A],A,mary).");
    }

    #[test]
    fn empty_program() {
        let p = parse_program("").unwrap();
        assert!(p.is_empty());
        assert_eq!(print_program(&p), "");
        assert!(parse_program("  % only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_program("p(a) :- q(b)\nr(c).").unwrap_err();
        match err {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (2, 1)),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(parse_program("p(a"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_program("X :- p."), Err(Error::Syntax { line: 1, column: 1, .. })));
        assert!(matches!(parse_program("p(#)."), Err(Error::Syntax { line: 1, column: 3, .. })));
    }

    #[test]
    fn mode_directives() {
        let p = parse_program(":- mode sentence(f,f,b).\nsentence(A,B,C) :- s(A,B,C).").unwrap();
        assert_eq!(p.modes.len(), 1);
        assert_eq!(p.modes[0].to_string(), "sentence(f,f,b)");
        assert_eq!(parse_mode("sentence(b,b,f)").unwrap().bound_positions(), vec![0, 1]);
        assert!(parse_mode("s(x)").is_err());
    }

    #[test]
    fn queries() {
        let q = parse_query("?- sentence(P0,[],decl(buys(john,a(book),mary))).").unwrap();
        assert_eq!(q.predicate().unwrap(), Predicate::new("sentence", 3));
        assert!(parse_query("s(X) t").is_err());
    }

    #[test]
    fn anonymous_variables_are_distinct() {
        let p = parse_program("p(_, _).").unwrap();
        let h = &p.clauses()[0].head;
        assert_ne!(h.args()[0], h.args()[1]);
    }

    #[test]
    fn unit_clause_prints_without_neck() {
        let p = parse_program("det([a|P],P,NSem,a(NSem)).").unwrap();
        let text = print_program(&p);
        assert_eq!(text, "det([a|A],A,B,a(B)).\n");
        assert!(!text.contains(":-"));
    }

    #[test]
    fn provenance_survives_printing() {
        let mut c = Clause::new(14, Term::app("magic_np", vec![Term::fresh_var()]), vec![]);
        c.provenance = Some(Provenance {
            source: 2,
            role: Role::Magic { literal: 2 },
            unfolded: vec![11, 12],
        });
        let p = Program::new(vec![c.clone()]);
        let text = print_program(&p);
        assert!(text.starts_with("%@ id=14 magic=2/2 unfolded=11,12\n"));
        let back = parse_program(&text).unwrap();
        assert_eq!(back.clauses()[0].id, 14);
        assert_eq!(back.clauses()[0].provenance, c.provenance);
        assert!(variant(&back.clauses()[0].as_term(), &c.as_term()));
    }

    #[test]
    fn arity_inconsistency_is_a_warning() {
        let p = parse_program("p(a). p(a,b). q :- p(X).").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.arity_warnings().len(), 1);
    }
}
