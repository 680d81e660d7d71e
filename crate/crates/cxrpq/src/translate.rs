//! Translations between CXRPQ fragments, ECRPQ with equality, and unions of
//! queries, plus evaluators for the latter two.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::automaton::Automaton;
use crate::eval::{all_mappings, chain, fix_mapping, resolve_aliases, solve, EvalError, EvalLimits, Factor, Product};
use crate::graphdb::{
    nfa_reachability, nfa_to_regex, parse_query_file, pattern_indices, regex_to_nfa, render_query_file, AnswerSet,
    Edge, GraphDb, GraphError, Nfa, Query,
};
use crate::normalform::{expand_with, normalize_with_report};
use crate::par;
use crate::xregex::{classify, VarId, Xregex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("edge {edge} has a label with variables; equality queries use classical labels")]
    NotClassical { edge: usize },
    #[error("edge {edge} is in two equality blocks")]
    OverlappingBlocks { edge: usize },
    #[error("equality block refers to edge {edge}, the query has {count}")]
    EdgeOutOfRange { edge: usize, count: usize },
    #[error("a union needs at least one disjunct")]
    EmptyUnion,
    #[error("disjunct {index} has arity {got}, expected {expected}")]
    ArityMismatch { index: usize, expected: usize, got: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<crate::normalform::NormalFormError> for TranslateError {
    fn from(e: crate::normalform::NormalFormError) -> Self {
        TranslateError::Eval(e.into())
    }
}

/// A CRPQ whose edges are partitioned into blocks that must read equal words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EcrpqEq {
    query: Query,
    blocks: Vec<Vec<usize>>,
}

impl EcrpqEq {
    /// `equal` lists the nontrivial blocks; unlisted edges become singletons.
    pub fn new(query: Query, equal: Vec<Vec<usize>>) -> Result<Self, TranslateError> {
        let m = query.edges.len();
        if let Some(i) = query.edges.iter().position(|e| !e.label.is_classical()) {
            return Err(TranslateError::NotClassical { edge: i + 1 });
        }
        let mut owner = vec![None; m];
        let mut blocks = Vec::new();
        for b in equal {
            let mut b: Vec<usize> = b.into_iter().collect();
            b.sort_unstable();
            b.dedup();
            if b.is_empty() {
                continue;
            }
            for &i in &b {
                if i >= m {
                    return Err(TranslateError::EdgeOutOfRange { edge: i + 1, count: m });
                }
                if owner[i].replace(blocks.len()).is_some() {
                    return Err(TranslateError::OverlappingBlocks { edge: i + 1 });
                }
            }
            blocks.push(b);
        }
        for (i, o) in owner.iter().enumerate() {
            if o.is_none() {
                blocks.push(vec![i]);
            }
        }
        blocks.sort();
        Ok(EcrpqEq { query, blocks })
    }

    pub fn crpq(query: Query) -> Result<Self, TranslateError> {
        EcrpqEq::new(query, Vec::new())
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    /// The full partition, singletons included.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    fn nontrivial_blocks(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().filter(|b| b.len() > 1).cloned().collect()
    }

    pub fn parse(text: &str) -> Result<Self, TranslateError> {
        let f = parse_query_file(text)?;
        EcrpqEq::new(f.query, f.equal)
    }

    pub fn render(&self) -> String {
        render_query_file(&self.query, &self.nontrivial_blocks())
    }

    fn block_nfa(&self, b: &[usize]) -> Result<Nfa, TranslateError> {
        let parts = b.iter().map(|&i| regex_to_nfa(&self.query.edges[i].label)).collect::<Result<Vec<_>, _>>()?;
        Ok(Automaton::intersect(&parts))
    }
}

/// Disjunction of equality queries (plain CRPQs have only singleton blocks).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnionQuery {
    disjuncts: Vec<EcrpqEq>,
}

impl UnionQuery {
    pub fn new(disjuncts: Vec<EcrpqEq>) -> Result<Self, TranslateError> {
        let first = disjuncts.first().ok_or(TranslateError::EmptyUnion)?;
        let expected = first.query.output.len();
        for (index, d) in disjuncts.iter().enumerate() {
            let got = d.query.output.len();
            if got != expected {
                return Err(TranslateError::ArityMismatch { index, expected, got });
            }
        }
        Ok(UnionQuery { disjuncts })
    }

    pub fn disjuncts(&self) -> &[EcrpqEq] {
        &self.disjuncts
    }

    pub fn arity(&self) -> usize {
        self.disjuncts[0].query.output.len()
    }

    /// Blocks of query-file text separated by `---` lines.
    pub fn parse(text: &str) -> Result<Self, TranslateError> {
        let mut blocks = vec![String::new()];
        for line in text.lines() {
            if line.trim() == "---" {
                blocks.push(String::new());
            } else {
                let cur = blocks.last_mut().unwrap();
                cur.push_str(line);
                cur.push('\n');
            }
        }
        let disjuncts = blocks
            .iter()
            .filter(|b| b.lines().any(|l| !crate::graphdb::strip_comment(l).trim().is_empty()))
            .map(|b| EcrpqEq::parse(b))
            .collect::<Result<Vec<_>, _>>()?;
        UnionQuery::new(disjuncts)
    }

    pub fn render(&self) -> String {
        self.disjuncts.iter().map(EcrpqEq::render).collect::<Vec<_>>().join("---\n")
    }
}

/// Each nontrivial block becomes `z_j{β}` on its first edge and `z_j` on
/// the others, where L(β) is the intersection of the block's languages.
/// A block with an empty intersection is relabelled ∅ throughout.
pub fn ecrpq_eq_to_cxrpq(q: &EcrpqEq) -> Result<Query, TranslateError> {
    let mut labels = q.query.labels();
    for (j, b) in q.nontrivial_blocks().iter().enumerate() {
        let z = VarId::new(format!("z{}", j + 1)).expect("valid name");
        let beta = nfa_to_regex(&q.block_nfa(b)?);
        if beta == Xregex::Empty {
            for &i in b {
                labels[i] = Xregex::Empty;
            }
            continue;
        }
        labels[b[0]] = Xregex::def(&z, beta);
        for &i in &b[1..] {
            labels[i] = Xregex::var(&z);
        }
    }
    let mut out = q.query.relabel(labels);
    out.mode = None;
    Ok(out)
}

/// Evaluates through the intersection automata of the blocks directly.
pub fn eval_ecrpq_eq(q: &EcrpqEq, db: &GraphDb) -> Result<AnswerSet, TranslateError> {
    eval_ecrpq_eq_with(q, db, &EvalLimits::default())
}

pub fn eval_ecrpq_eq_with(q: &EcrpqEq, db: &GraphDb, limits: &EvalLimits) -> Result<AnswerSet, TranslateError> {
    let (names, ends, out) = pattern_indices(&q.query);
    let mut p = Product { nvars: names.len(), binary: Vec::new(), groups: Vec::new(), out };
    for b in &q.blocks {
        let nfa = q.block_nfa(b)?;
        if let [i] = b[..] {
            let (s, t) = ends[i];
            p.binary.push((s, t, nfa_reachability(db, &nfa)));
        } else {
            p.groups.push((b.iter().map(|&i| ends[i]).collect(), nfa.remove_epsilon()));
        }
    }
    Ok(solve(db, p, q.query.output.len(), limits)?)
}

/// Normal form, expansion into simple queries, then per simple query: every
/// factor becomes its own edge, a definition keeps its body, a reference
/// reads Σ*, and a definition with its references forms one equality block.
pub fn vsf_to_union_ecrpq_eq(q: &Query) -> Result<UnionQuery, TranslateError> {
    vsf_to_union_ecrpq_eq_with(q, &EvalLimits::default())
}

pub fn vsf_to_union_ecrpq_eq_with(q: &Query, limits: &EvalLimits) -> Result<UnionQuery, TranslateError> {
    let cx = q.conjunctive()?;
    if !classify(&cx).vstar_free {
        return Err(EvalError::NotVstarFree.into());
    }
    let (nf, _) = normalize_with_report(&cx, limits.normal_form)?;
    let parts = expand_with(&nf, limits.normal_form)?;
    let taken = q.node_vars();
    let mut counter = 0usize;
    let mut fresh = || loop {
        counter += 1;
        let name = format!("w{counter}");
        if !taken.contains(&name) {
            return name;
        }
    };
    let mut disjuncts = Vec::new();
    for part in parts {
        let labels = resolve_aliases(part.components());
        let mut edges = Vec::new();
        let mut blocks: BTreeMap<VarId, Vec<usize>> = BTreeMap::new();
        for (label, e) in labels.iter().zip(&q.edges) {
            let fs = chain(label)?;
            if fs.is_empty() {
                edges.push(Edge { src: e.src.clone(), dst: e.dst.clone(), label: Xregex::Epsilon });
                continue;
            }
            let len = fs.len();
            let mut cur = e.src.clone();
            for (i, f) in fs.into_iter().enumerate() {
                let next = if i + 1 == len { e.dst.clone() } else { fresh() };
                let label = match f {
                    Factor::Classical(r) => r,
                    Factor::Def(x, body) => {
                        blocks.entry(x).or_default().insert(0, edges.len());
                        body
                    }
                    Factor::Ref(x) => {
                        blocks.entry(x).or_default().push(edges.len());
                        q.alphabet.sigma_star()
                    }
                };
                edges.push(Edge { src: cur, dst: next.clone(), label });
                cur = next;
            }
        }
        let query = Query::new(edges, q.output.clone(), q.alphabet.clone())?;
        disjuncts.push(EcrpqEq::new(query, blocks.into_values().collect())?);
    }
    UnionQuery::new(disjuncts)
}

/// One CRPQ per mapping into Σ^{≤k}, fixed with [`fix_mapping`]. Mappings
/// that fix some edge to ∅ are dropped; if every mapping is dropped the
/// union holds the single all-∅ query so that it keeps the output arity.
pub fn bounded_to_union_crpq(q: &Query, k: usize) -> Result<UnionQuery, TranslateError> {
    bounded_to_union_crpq_with(q, k, &EvalLimits::default())
}

pub fn bounded_to_union_crpq_with(q: &Query, k: usize, limits: &EvalLimits) -> Result<UnionQuery, TranslateError> {
    let cx = q.conjunctive()?;
    let mut disjuncts = Vec::new();
    for v in all_mappings(&cx, k, limits.max_mappings)? {
        let labels = fix_mapping(&cx, &v)?;
        if labels.contains(&Xregex::Empty) {
            continue;
        }
        let mut fixed = q.relabel(labels);
        fixed.mode = None;
        disjuncts.push(EcrpqEq::crpq(fixed)?);
    }
    if disjuncts.is_empty() {
        let mut none = q.relabel(vec![Xregex::Empty; q.edges.len()]);
        none.mode = None;
        disjuncts.push(EcrpqEq::crpq(none)?);
    }
    UnionQuery::new(disjuncts)
}

pub fn eval_union(u: &UnionQuery, db: &GraphDb) -> Result<AnswerSet, TranslateError> {
    let results = par::map(&u.disjuncts, |d| eval_ecrpq_eq(d, db));
    let mut ans = AnswerSet::new(u.arity());
    for r in results {
        ans.extend(r?);
    }
    Ok(ans)
}
