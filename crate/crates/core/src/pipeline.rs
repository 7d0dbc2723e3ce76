//! Compilation pipelines: the magic transformation followed by a selection
//! of filter optimizations, always applied in a fixed order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::magic::{lexical_only_transform, magic_transform, prune_lexical_magic, CompileMode, MagicProgram};
use crate::optimize::{add_indexing, remove_cycles, unfold_magic, IndexScope};
use crate::program::{AbstractQuery, Program};
use crate::term::Predicate;
use crate::trim::adorn_and_trim;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Optimization {
    PruneLexical,
    Trim,
    Cycles,
    Index,
    Unfold,
}

impl Optimization {
    pub const ALL: [Optimization; 5] =
        [Optimization::PruneLexical, Optimization::Trim, Optimization::Cycles, Optimization::Index, Optimization::Unfold];

    pub fn name(self) -> &'static str {
        match self {
            Optimization::PruneLexical => "prune_lexical",
            Optimization::Trim => "trim",
            Optimization::Cycles => "cycles",
            Optimization::Index => "index",
            Optimization::Unfold => "unfold",
        }
    }
}

impl fmt::Display for Optimization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Optimization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Optimization::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidPipeline(format!("unknown optimization `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineSpec {
    pub mode: CompileMode,
    pub optimizations: Vec<Optimization>,
    pub keep_structural: bool,
    pub depth: usize,
    pub index_scope: IndexScope,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        PipelineSpec {
            mode: CompileMode::FullMagic,
            optimizations: Vec::new(),
            keep_structural: false,
            depth: 3,
            index_scope: IndexScope::OverlappingOnly,
        }
    }
}

impl PipelineSpec {
    pub fn with(optimizations: &[Optimization]) -> Self {
        PipelineSpec { optimizations: optimizations.to_vec(), ..Self::default() }
    }

    /// `v1` prunes and trims; `v2` adds cycle removal, indexing and
    /// unfolding. `v1-no-cycle-removal` names `v1` by what it leaves out.
    /// `none` is a valid preset that means no compilation at all.
    pub fn preset(name: &str) -> Result<Option<Self>> {
        use Optimization::*;
        match name {
            "v1" | "v1-no-cycle-removal" => Ok(Some(Self::with(&[PruneLexical, Trim]))),
            "v2" => Ok(Some(Self::with(&[PruneLexical, Trim, Cycles, Index, Unfold]))),
            "none" => Ok(None),
            _ => Err(Error::InvalidPipeline(format!("unknown pipeline `{name}`"))),
        }
    }

    pub fn parse_list(list: &str) -> Result<Vec<Optimization>> {
        list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
    }

    pub fn has(&self, o: Optimization) -> bool {
        self.optimizations.contains(&o)
    }

    pub fn validate(&self, aq: Option<&AbstractQuery>) -> Result<()> {
        use Optimization::*;
        if self.depth == 0 {
            return Err(Error::InvalidDepth);
        }
        if self.has(Unfold) && !self.has(Cycles) {
            return Err(Error::InvalidPipeline("unfold requires cycles".into()));
        }
        for o in [Trim, Cycles] {
            if self.has(o) && aq.is_none() {
                return Err(Error::InvalidPipeline(format!("{o} requires an abstract query (mode)")));
            }
        }
        Ok(())
    }
}

/// Compiles `p` for queries on `query` and applies the selected
/// optimizations in their canonical order.
pub fn compile(p: &Program, query: &Predicate, aq: Option<&AbstractQuery>, spec: &PipelineSpec) -> Result<MagicProgram> {
    use Optimization::*;
    spec.validate(aq)?;
    if let Some(aq) = aq {
        if aq.predicate != *query {
            return Err(Error::PredicateMismatch { expected: query.clone(), found: aq.to_string() });
        }
    }
    let mut mp = match spec.mode {
        CompileMode::FullMagic => magic_transform(p, query)?,
        CompileMode::LexicalOnly => lexical_only_transform(p, query)?,
    };
    for o in Optimization::ALL.into_iter().filter(|o| spec.has(*o)) {
        mp = match o {
            PruneLexical => prune_lexical_magic(&mp),
            Trim => adorn_and_trim(&mp, aq.unwrap(), spec.keep_structural)?,
            Cycles => remove_cycles(&mp, aq.unwrap(), spec.depth)?,
            Index => add_indexing(&mp, spec.index_scope)?,
            Unfold => unfold_magic(&mp),
        };
    }
    Ok(mp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_mode, parse_program};
    use crate::GRAMMAR;

    #[test]
    fn presets() {
        assert_eq!(PipelineSpec::preset("v1").unwrap().unwrap().optimizations.len(), 2);
        assert_eq!(PipelineSpec::preset("v1-no-cycle-removal").unwrap(), PipelineSpec::preset("v1").unwrap());
        assert_eq!(PipelineSpec::preset("v2").unwrap().unwrap().optimizations.len(), 5);
        assert!(PipelineSpec::preset("none").unwrap().is_none());
        assert!(PipelineSpec::preset("v3").is_err());
    }

    #[test]
    fn invalid_combinations() {
        let p = parse_program(GRAMMAR).unwrap();
        let aq = parse_mode("sentence(f,f,b)").unwrap();
        let q = aq.predicate.clone();
        let unfold_only = PipelineSpec::with(&PipelineSpec::parse_list("prune_lexical,unfold").unwrap());
        assert!(matches!(compile(&p, &q, Some(&aq), &unfold_only), Err(Error::InvalidPipeline(_))));
        let trim = PipelineSpec::with(&[Optimization::Trim]);
        assert!(matches!(compile(&p, &q, None, &trim), Err(Error::InvalidPipeline(_))));
        assert!(PipelineSpec::parse_list("trim,fold").is_err());
        let zero = PipelineSpec { depth: 0, ..PipelineSpec::default() };
        assert!(matches!(compile(&p, &q, None, &zero), Err(Error::InvalidDepth)));
    }

    #[test]
    fn order_of_the_list_does_not_matter() {
        let p = parse_program(GRAMMAR).unwrap();
        let aq = parse_mode("sentence(f,f,b)").unwrap();
        let a = PipelineSpec::with(&PipelineSpec::parse_list("unfold,index,cycles,trim,prune_lexical").unwrap());
        let b = PipelineSpec::preset("v2").unwrap().unwrap();
        let x = compile(&p, &aq.predicate, Some(&aq), &a).unwrap();
        let y = compile(&p, &aq.predicate, Some(&aq), &b).unwrap();
        assert_eq!(crate::print_program(&x.program).lines().count(), crate::print_program(&y.program).lines().count());
        assert_eq!(x.report.len(), y.report.len());
    }
}
