//! Normal form for vstar-free conjunctive xregex: multiply out alternations
//! (step 1), make definitions unique (step 2), and split non-basic
//! definitions into fresh variables (step 3).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::xregex::{is_basic_body, precedence_of, top_alternatives, vars_of, ConjunctiveXregex, VarId, Xregex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalFormError {
    #[error("component {component} has a variable under `+` or `*`")]
    NotVstarFree { component: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("expansion exceeds {limit} nodes (reached {reached}); raise the limit to continue")]
    ExpansionLimitExceeded { limit: usize, reached: usize },
}

/// Node-count ceiling for intermediate and final results.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_nodes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_nodes: 1_000_000 }
    }
}

/// AST sizes at each stage of [`normalize_with_report`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SizeReport {
    pub input: usize,
    pub step1: usize,
    pub step2: usize,
    pub step3: usize,
}

fn guard(size: usize, limits: Limits) -> Result<(), NormalFormError> {
    if size > limits.max_nodes {
        Err(NormalFormError::ExpansionLimitExceeded { limit: limits.max_nodes, reached: size })
    } else {
        Ok(())
    }
}

fn rebuild(cx: &ConjunctiveXregex, components: Vec<Xregex>) -> ConjunctiveXregex {
    ConjunctiveXregex::from_parts_unchecked(components, cx.alphabet().clone())
}

fn flatten(parts: Vec<Xregex>) -> Xregex {
    let mut flat = Vec::new();
    for p in parts {
        match p {
            Xregex::Concat(cs) => flat.extend(cs),
            p => flat.push(p),
        }
    }
    Xregex::concat(flat)
}

/// Top-level factors of a variable-simple expression.
fn factors(e: &Xregex) -> Vec<Xregex> {
    match e {
        Xregex::Concat(cs) => cs.iter().flat_map(factors).collect(),
        Xregex::Epsilon => Vec::new(),
        e => vec![e.clone()],
    }
}

// ---------------------------------------------------------------------------
// Step 1

fn alternatives(e: &Xregex, component: usize, limits: Limits) -> Result<Vec<Xregex>, NormalFormError> {
    if !e.has_vars() {
        return Ok(vec![e.clone()]);
    }
    match e {
        Xregex::Ref(_) => Ok(vec![e.clone()]),
        Xregex::Plus(_) => Err(NormalFormError::NotVstarFree { component }),
        Xregex::Alt(l, r) => {
            let mut out = alternatives(l, component, limits)?;
            out.extend(alternatives(r, component, limits)?);
            Ok(out)
        }
        Xregex::Def(x, body) => {
            Ok(alternatives(body, component, limits)?.into_iter().map(|b| Xregex::def(x, b)).collect())
        }
        Xregex::Concat(cs) => {
            let mut acc: Vec<Vec<Xregex>> = vec![Vec::new()];
            let mut acc_size = 0usize;
            for c in cs {
                let opts = alternatives(c, component, limits)?;
                let opt_size: usize = opts.iter().map(Xregex::size).sum();
                let next_size = acc_size.saturating_mul(opts.len()).saturating_add(opt_size.saturating_mul(acc.len()));
                guard(next_size, limits)?;
                let mut next = Vec::with_capacity(acc.len() * opts.len());
                for prefix in &acc {
                    for o in &opts {
                        let mut p = prefix.clone();
                        p.push(o.clone());
                        next.push(p);
                    }
                }
                acc = next;
                acc_size = next_size;
            }
            Ok(acc.into_iter().map(flatten).collect())
        }
        Xregex::Term(_) | Xregex::Epsilon | Xregex::Empty => unreachable!("variable-free leaves handled above"),
    }
}

pub fn step1_multiply_out(cx: &ConjunctiveXregex) -> Result<ConjunctiveXregex, NormalFormError> {
    step1_with(cx, Limits::default())
}

pub fn step1_with(cx: &ConjunctiveXregex, limits: Limits) -> Result<ConjunctiveXregex, NormalFormError> {
    let mut comps = Vec::new();
    let mut total = 0;
    for (i, c) in cx.components().iter().enumerate() {
        let alts = alternatives(c, i, limits)?;
        total += alts.iter().map(Xregex::size).sum::<usize>();
        guard(total, limits)?;
        comps.push(Xregex::alternation(alts));
    }
    Ok(rebuild(cx, comps))
}

// ---------------------------------------------------------------------------
// Step 2

fn is_variable_simple(e: &Xregex) -> bool {
    match e {
        Xregex::Plus(c) => !c.has_vars(),
        Xregex::Alt(l, r) if e.as_star().is_none() => !l.has_vars() && !r.has_vars(),
        _ => e.children().into_iter().all(is_variable_simple),
    }
}

fn split_alternatives(cx: &ConjunctiveXregex) -> Result<Vec<Vec<Xregex>>, NormalFormError> {
    let mut out = Vec::new();
    for (i, c) in cx.components().iter().enumerate() {
        let alts: Vec<Xregex> = top_alternatives(c).into_iter().cloned().collect();
        if let Some(bad) = alts.iter().find(|a| !is_variable_simple(a)) {
            return Err(NormalFormError::Precondition(format!(
                "component {} has an alternative that is not variable-simple: {}",
                i + 1,
                crate::xregex::render_xregex(bad)
            )));
        }
        out.push(alts);
    }
    Ok(out)
}

/// Name generator that never reuses a name already present.
struct Fresh {
    used: BTreeSet<String>,
    counter: usize,
}

impl Fresh {
    fn new(cx_vars: impl IntoIterator<Item = VarId>) -> Self {
        Fresh { used: cx_vars.into_iter().map(|v| v.as_str().to_string()).collect(), counter: 0 }
    }

    fn claim(&mut self, name: String) -> Option<VarId> {
        if self.used.contains(&name) {
            return None;
        }
        self.used.insert(name.clone());
        Some(VarId::new(name).expect("generated names are identifiers"))
    }

    /// `x` numbered `k`: `x3`, or `x_3` when `x` already ends in a digit.
    fn numbered(&mut self, base: &VarId, k: usize) -> VarId {
        let b = base.as_str();
        let sep = if b.ends_with(|c: char| c.is_ascii_digit()) { "_" } else { "" };
        let mut pad = String::from(sep);
        loop {
            if let Some(v) = self.claim(format!("{b}{pad}{k}")) {
                return v;
            }
            pad.push('_');
        }
    }

    fn next_u(&mut self) -> VarId {
        loop {
            self.counter += 1;
            if let Some(v) = self.claim(format!("u{}", self.counter)) {
                return v;
            }
        }
    }
}

pub fn step2_unique_definitions(cx: &ConjunctiveXregex) -> Result<ConjunctiveXregex, NormalFormError> {
    let alts = split_alternatives(cx)?;
    // variable -> (component, alternative) pairs holding a definition
    let mut defining: BTreeMap<VarId, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, comp) in alts.iter().enumerate() {
        for (j, a) in comp.iter().enumerate() {
            let mut count: BTreeMap<VarId, usize> = BTreeMap::new();
            a.visit(&mut |n| {
                if let Xregex::Def(x, _) = n {
                    *count.entry(x.clone()).or_default() += 1;
                }
            });
            for (x, n) in count {
                if n > 1 {
                    return Err(NormalFormError::Precondition(format!("{x} is defined twice in one alternative")));
                }
                defining.entry(x).or_default().push((i, j));
            }
        }
    }
    let mut fresh = Fresh::new(cx.vars());
    let mut rename: BTreeMap<(VarId, usize, usize), VarId> = BTreeMap::new();
    let mut expansion: BTreeMap<VarId, Vec<VarId>> = BTreeMap::new();
    for (x, places) in &defining {
        if places.len() < 2 {
            continue;
        }
        let names: Vec<VarId> = (1..=places.len()).map(|k| fresh.numbered(x, k)).collect();
        for (&(i, j), n) in places.iter().zip(&names) {
            rename.insert((x.clone(), i, j), n.clone());
        }
        expansion.insert(x.clone(), names);
    }
    let mut comps = Vec::new();
    for (i, comp) in alts.iter().enumerate() {
        let mut out = Vec::new();
        for (j, a) in comp.iter().enumerate() {
            let rewritten = a.map_bottom_up(&mut |e| match e {
                Xregex::Def(x, body) => match rename.get(&(x.clone(), i, j)) {
                    Some(n) => Xregex::Def(n.clone(), body),
                    None => Xregex::Def(x, body),
                },
                Xregex::Ref(x) => match expansion.get(&x) {
                    Some(names) => Xregex::concat(names.iter().map(Xregex::var).collect()),
                    None => Xregex::Ref(x),
                },
                e => e,
            });
            out.push(rewritten.simplify_concat());
        }
        comps.push(Xregex::alternation(out));
    }
    Ok(rebuild(cx, comps))
}

// ---------------------------------------------------------------------------
// Step 3

fn definition_of<'a>(cx: &'a ConjunctiveXregex, z: &VarId) -> Vec<&'a Xregex> {
    let mut out = Vec::new();
    for c in cx.components() {
        c.visit(&mut |n| {
            if let Xregex::Def(x, body) = n {
                if x == z {
                    out.push(&**body);
                }
            }
        });
    }
    out
}

fn modify(cx: &ConjunctiveXregex, z: &VarId, fresh: &mut Fresh) -> Result<ConjunctiveXregex, NormalFormError> {
    let defs = definition_of(cx, z);
    let [body] = defs.as_slice() else {
        return Err(NormalFormError::Precondition(format!(
            "{z} must have exactly one definition, found {}",
            defs.len()
        )));
    };
    if !is_variable_simple(body) {
        return Err(NormalFormError::Precondition(format!("definition of {z} is not variable-simple")));
    }
    // group maximal classical runs; definitions stay, everything else is wrapped
    let mut pieces: Vec<Xregex> = Vec::new();
    let mut run: Vec<Xregex> = Vec::new();
    let mut fresh_wrap = |e: Xregex, pieces: &mut Vec<Xregex>| {
        let u = fresh.next_u();
        pieces.push(Xregex::def(&u, e));
    };
    for f in factors(body) {
        if !f.has_vars() {
            run.push(f);
            continue;
        }
        if !run.is_empty() {
            fresh_wrap(Xregex::concat(std::mem::take(&mut run)), &mut pieces);
        }
        match f {
            Xregex::Def(..) => pieces.push(f),
            Xregex::Ref(_) => fresh_wrap(f, &mut pieces),
            _ => return Err(NormalFormError::Precondition(format!("definition of {z} has a non-factor part"))),
        }
    }
    if !run.is_empty() {
        fresh_wrap(Xregex::concat(run), &mut pieces);
    }
    let heads: Vec<Xregex> = pieces
        .iter()
        .map(|p| match p {
            Xregex::Def(y, _) => Xregex::var(y),
            _ => unreachable!(),
        })
        .collect();
    let replacement = Xregex::concat(pieces);
    let refs = Xregex::concat(heads);
    let comps = cx
        .components()
        .iter()
        .map(|c| {
            c.map_bottom_up(&mut |e| match e {
                Xregex::Def(x, _) if &x == z => replacement.clone(),
                Xregex::Ref(x) if &x == z => refs.clone(),
                e => e,
            })
            .simplify_concat()
        })
        .collect();
    Ok(rebuild(cx, comps))
}

/// Applies the main modification step to the definition of `z`, with fresh
/// variables `u1, u2, …` that do not occur in `cx`.
pub fn main_modification_step(cx: &ConjunctiveXregex, z: &VarId) -> Result<ConjunctiveXregex, NormalFormError> {
    modify(cx, z, &mut Fresh::new(cx.vars()))
}

fn check_unique_definitions(cx: &ConjunctiveXregex) -> Result<(), NormalFormError> {
    let mut seen = BTreeSet::new();
    for c in cx.components() {
        let mut dup = None;
        c.visit(&mut |n| {
            if let Xregex::Def(x, _) = n {
                if !seen.insert(x.clone()) {
                    dup = Some(x.clone());
                }
            }
        });
        if let Some(x) = dup {
            return Err(NormalFormError::Precondition(format!("{x} has more than one definition")));
        }
    }
    Ok(())
}

pub fn step3_remove_nonbasic(cx: &ConjunctiveXregex) -> Result<ConjunctiveXregex, NormalFormError> {
    step3_with(cx, Limits::default())
}

pub fn step3_with(cx: &ConjunctiveXregex, limits: Limits) -> Result<ConjunctiveXregex, NormalFormError> {
    split_alternatives(cx)?;
    check_unique_definitions(cx)?;
    let order = precedence_of(cx.components())
        .topological_order()
        .ok_or_else(|| NormalFormError::Precondition("cyclic variable dependencies".into()))?;
    let mut fresh = Fresh::new(cx.vars());
    let mut cur = cx.clone();
    for x in order {
        let basic = match definition_of(&cur, &x).first() {
            None => true,
            Some(body) => is_basic_body(body),
        };
        if !basic {
            cur = modify(&cur, &x, &mut fresh)?;
            guard(cur.size(), limits)?;
        }
    }
    Ok(cur)
}

pub fn normalize(cx: &ConjunctiveXregex) -> Result<ConjunctiveXregex, NormalFormError> {
    normalize_with_report(cx, Limits::default()).map(|r| r.0)
}

pub fn normalize_with_report(
    cx: &ConjunctiveXregex,
    limits: Limits,
) -> Result<(ConjunctiveXregex, SizeReport), NormalFormError> {
    let s1 = step1_with(cx, limits)?;
    let s2 = step2_unique_definitions(&s1)?;
    guard(s2.size(), limits)?;
    let s3 = step3_with(&s2, limits)?;
    let report = SizeReport { input: cx.size(), step1: s1.size(), step2: s2.size(), step3: s3.size() };
    Ok((s3, report))
}

/// Steps 2 and 3 only, for inputs that are already alternations of
/// variable-simple xregex.
pub fn normalize_flat(cx: &ConjunctiveXregex) -> Result<ConjunctiveXregex, NormalFormError> {
    step3_remove_nonbasic(&step2_unique_definitions(cx)?)
}

/// Every way of choosing one top-level alternative per component.
pub fn expand_to_simple_queries(cx: &ConjunctiveXregex) -> Result<Vec<ConjunctiveXregex>, NormalFormError> {
    expand_with(cx, Limits::default())
}

pub fn expand_with(cx: &ConjunctiveXregex, limits: Limits) -> Result<Vec<ConjunctiveXregex>, NormalFormError> {
    let alts: Vec<Vec<&Xregex>> = cx.components().iter().map(top_alternatives).collect();
    for (i, comp) in alts.iter().enumerate() {
        if !comp.iter().all(|a| crate::xregex::is_simple(a)) {
            return Err(NormalFormError::Precondition(format!("component {} is not in normal form", i + 1)));
        }
    }
    let count = alts.iter().fold(1usize, |n, a| n.saturating_mul(a.len()));
    guard(count.saturating_mul(cx.size()), limits)?;
    let mut acc: Vec<Vec<Xregex>> = vec![Vec::new()];
    for comp in &alts {
        let mut next = Vec::with_capacity(acc.len() * comp.len());
        for prefix in &acc {
            for a in comp {
                let mut p = prefix.clone();
                p.push((*a).clone());
                next.push(p);
            }
        }
        acc = next;
    }
    Ok(acc.into_iter().map(|comps| rebuild(cx, comps)).collect())
}

/// Variables introduced by the pipeline, i.e. present in `after` but not in `before`.
pub fn fresh_variables(before: &ConjunctiveXregex, after: &ConjunctiveXregex) -> BTreeSet<VarId> {
    let old: BTreeSet<VarId> = before.components().iter().flat_map(vars_of).collect();
    after.components().iter().flat_map(vars_of).filter(|v| !old.contains(v)).collect()
}
