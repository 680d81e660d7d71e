//! Query evaluation: the product evaluator for simple queries, the
//! vstar-free pipeline, mapping fixing, image-bounded evaluation and a
//! brute-force oracle.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

use crate::automaton::thompson;
use crate::conjunctive::{MatchBounds, MatchEngine};
use crate::graphdb::{
    crpq_eval, join, nfa_reachability, path_words, pattern_indices, regex_to_nfa, AnswerSet, Atom, GraphDb, GraphError,
    Mode, Nfa, Query,
};
use crate::normalform::{expand_with, normalize_with_report, Limits, NormalFormError};
use crate::par;
use crate::refwords::VariableMapping;
use crate::xregex::{classify, precedence_of, Alphabet, ConjunctiveXregex, VarId, Xregex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("the query is not simple")]
    NotSimple,
    #[error("the query is not vstar-free; use a bounded mode")]
    NotVstarFree,
    #[error("product search exceeds {limit} states")]
    StateSpaceLimitExceeded { limit: usize },
    #[error("mapping search exceeds {limit} candidates")]
    MappingSpaceLimitExceeded { limit: usize },
    #[error("tuple has {got} entries, the query outputs {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("image of {var} uses {symbol:?}, which is not in the alphabet")]
    BadImage { var: VarId, symbol: char },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

/// Resource ceilings shared by the evaluators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalLimits {
    /// Product vertices visited by the simple-query evaluator.
    pub max_states: usize,
    /// Mappings (or search nodes) examined by the bounded evaluators.
    pub max_mappings: usize,
    pub normal_form: Limits,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits { max_states: 10_000_000, max_mappings: 1_000_000, normal_form: Limits::default() }
    }
}

// ---------------------------------------------------------------------------
// Simple queries

pub(crate) enum Factor {
    Classical(Xregex),
    Def(VarId, Xregex),
    Ref(VarId),
}

/// Replaces every `x{y}` and every reference of `x` by a reference of the
/// variable `y` ultimately stands for, or by ε when that has no definition.
pub(crate) fn resolve_aliases(labels: &[Xregex]) -> Vec<Xregex> {
    let mut alias: BTreeMap<VarId, VarId> = BTreeMap::new();
    let mut defined: BTreeSet<VarId> = BTreeSet::new();
    for l in labels {
        l.visit(&mut |e| {
            if let Xregex::Def(x, body) = e {
                defined.insert(x.clone());
                if let Xregex::Ref(y) = &**body {
                    alias.insert(x.clone(), y.clone());
                }
            }
        });
    }
    let target = |x: &VarId| -> Option<VarId> {
        let mut cur = x.clone();
        while let Some(next) = alias.get(&cur) {
            cur = next.clone();
        }
        defined.contains(&cur).then_some(cur)
    };
    labels
        .iter()
        .map(|l| {
            l.map_bottom_up(&mut |e| match e {
                Xregex::Def(x, body) if alias.contains_key(&x) => {
                    let _ = body;
                    target(&x).map_or(Xregex::Epsilon, Xregex::Ref)
                }
                Xregex::Ref(x) => target(&x).map_or(Xregex::Epsilon, Xregex::Ref),
                e => e,
            })
        })
        .collect()
}

fn concat_items(e: &Xregex, out: &mut Vec<Xregex>) {
    match e {
        Xregex::Concat(cs) => cs.iter().for_each(|c| concat_items(c, out)),
        Xregex::Epsilon => {}
        e => out.push(e.clone()),
    }
}

/// Factor chain of a simple label; maximal classical runs are merged.
pub(crate) fn chain(label: &Xregex) -> Result<Vec<Factor>, EvalError> {
    let mut items = Vec::new();
    concat_items(label, &mut items);
    let mut out = Vec::new();
    let mut run: Vec<Xregex> = Vec::new();
    let flush = |run: &mut Vec<Xregex>, out: &mut Vec<Factor>| {
        if !run.is_empty() {
            out.push(Factor::Classical(Xregex::concat(std::mem::take(run))));
        }
    };
    for it in items {
        match it {
            Xregex::Def(x, body) => {
                if body.has_vars() {
                    return Err(EvalError::NotSimple);
                }
                flush(&mut run, &mut out);
                out.push(Factor::Def(x, *body));
            }
            Xregex::Ref(x) => {
                flush(&mut run, &mut out);
                out.push(Factor::Ref(x));
            }
            e if e.has_vars() => return Err(EvalError::NotSimple),
            e => run.push(e),
        }
    }
    flush(&mut run, &mut out);
    Ok(out)
}

fn cartesian(lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
    for l in lists {
        let mut next = Vec::with_capacity(acc.len() * l.len());
        for p in &acc {
            for &x in l {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        acc = next;
    }
    acc
}

fn start_tuples(db: &GraphDb, occ: &[(usize, usize)], dom: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let lists: Vec<Vec<usize>> =
        occ.iter().map(|&(a, _)| (0..db.num_nodes()).filter(|&u| dom[a][u]).collect()).collect();
    cartesian(&lists)
}

/// Tuples `(s0, t0, s1, t1, …)` with `(s0, s1, …)` among `starts` such that
/// one word of L(nfa) labels a path `s_j → t_j` for every occurrence `j`.
fn group_relation(
    db: &GraphDb,
    nfa: &Nfa,
    occ: &[(usize, usize)],
    dom: &[Vec<bool>],
    starts: &[Vec<usize>],
    budget: &AtomicUsize,
    limit: usize,
) -> Result<Vec<Vec<usize>>, EvalError> {
    let m = occ.len();
    let per_start = par::map(starts, |s| -> Result<Vec<Vec<usize>>, EvalError> {
        let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
        // state: nfa state, then the node reached by each occurrence
        let mut init = Vec::with_capacity(m + 1);
        init.push(nfa.start);
        init.extend_from_slice(s);
        let mut seen: HashSet<Vec<usize>> = HashSet::from([init.clone()]);
        let mut queue = VecDeque::from([init]);
        while let Some(st) = queue.pop_front() {
            let p = st[0];
            if nfa.finals[p] && (0..m).all(|j| dom[occ[j].1][st[1 + j]]) {
                found.insert((0..m).flat_map(|j| [s[j], st[1 + j]]).collect());
            }
            for (l, p2) in &nfa.trans[p] {
                let c = l.expect("ε-free automaton");
                let succ: Vec<Vec<usize>> =
                    (0..m).map(|j| db.out_arcs(st[1 + j]).iter().filter(|a| a.0 == c).map(|a| a.1).collect()).collect();
                if succ.iter().any(Vec::is_empty) {
                    continue;
                }
                for nodes in cartesian(&succ) {
                    let mut next = Vec::with_capacity(m + 1);
                    next.push(*p2);
                    next.extend(nodes);
                    if seen.insert(next.clone()) {
                        if budget.fetch_add(1, Ordering::Relaxed) >= limit {
                            return Err(EvalError::StateSpaceLimitExceeded { limit });
                        }
                        queue.push_back(next);
                    }
                }
            }
        }
        Ok(found.into_iter().collect())
    });
    let mut out = Vec::new();
    for r in per_start {
        out.extend(r?);
    }
    Ok(out)
}

/// Constraint form of a graph pattern: binary reachability constraints plus
/// groups of node-variable pairs that must read one common word of an NFA.
pub(crate) struct Product {
    pub nvars: usize,
    pub binary: Vec<(usize, usize, Vec<BTreeSet<usize>>)>,
    /// ε-free automata
    pub groups: Vec<(Vec<(usize, usize)>, Nfa)>,
    pub out: Vec<usize>,
}

const DETERMINIZE_CAP: usize = 4096;

/// Product evaluation of a simple query; `cap` bounds every variable image.
fn product_eval(q: &Query, db: &GraphDb, cap: Option<usize>, limits: &EvalLimits) -> Result<AnswerSet, EvalError> {
    let labels = resolve_aliases(&q.labels());
    let (names, ends, out) = pattern_indices(q);
    let n = db.num_nodes();
    let mut p = Product { nvars: names.len(), binary: Vec::new(), groups: Vec::new(), out };
    let mut defs: BTreeMap<VarId, (usize, usize, Nfa)> = BTreeMap::new();
    let mut refs: BTreeMap<VarId, Vec<(usize, usize)>> = BTreeMap::new();
    for (label, &(s, t)) in labels.iter().zip(&ends) {
        let fs = chain(label)?;
        if fs.is_empty() {
            p.binary.push((s, t, identity(n)));
            continue;
        }
        let mut cur = s;
        let len = fs.len();
        for (i, f) in fs.into_iter().enumerate() {
            let next = if i + 1 == len {
                t
            } else {
                p.nvars += 1;
                p.nvars - 1
            };
            match f {
                Factor::Classical(e) => p.binary.push((cur, next, nfa_reachability(db, &regex_to_nfa(&e)?))),
                Factor::Def(x, body) => {
                    let nfa = regex_to_nfa(&body)?;
                    let nfa = match cap {
                        Some(k) => nfa.truncate(k),
                        None => nfa,
                    };
                    defs.insert(x, (cur, next, nfa));
                }
                Factor::Ref(x) => refs.entry(x).or_default().push((cur, next)),
            }
            cur = next;
        }
    }
    for (x, (a, b, nfa)) in defs {
        let mut occ = vec![(a, b)];
        occ.extend(refs.remove(&x).unwrap_or_default());
        p.groups.push((occ, nfa));
    }
    debug_assert!(refs.is_empty(), "references to undefined variables are resolved to ε");
    merge_adjacent(&mut p.groups, names.len());
    for g in &mut p.groups {
        g.1 = g.1.remove_epsilon();
        if g.0.len() > 1 {
            // the product search multiplies NFA nondeterminism by every occurrence
            if let Some(d) = g.1.determinize(DETERMINIZE_CAP) {
                g.1 = d;
            }
        }
    }
    solve(db, p, q.output.len(), limits)
}

/// Fuses two variables when every occurrence of the first runs straight into
/// an occurrence of the second through an internal chain node. All
/// occurrences of the pair read one word `uv`; cutting each at `|u|` gives
/// back the separate occurrences, so the answers do not change.
fn merge_adjacent(groups: &mut Vec<(Vec<(usize, usize)>, Nfa)>, first_internal: usize) {
    'outer: loop {
        for i in 0..groups.len() {
            for j in 0..groups.len() {
                if i == j || groups[i].0.len() != groups[j].0.len() {
                    continue;
                }
                let starts: HashMap<usize, usize> = groups[j].0.iter().map(|&(a, b)| (a, b)).collect();
                let fused: Option<Vec<(usize, usize)>> = groups[i]
                    .0
                    .iter()
                    .map(|&(a, b)| (b >= first_internal).then(|| starts.get(&b).map(|&c| (a, c))).flatten())
                    .collect();
                if let Some(occ) = fused {
                    let nfa = groups[i].1.concat(&groups[j].1);
                    let (hi, lo) = (i.max(j), i.min(j));
                    groups.remove(hi);
                    groups.remove(lo);
                    groups.push((occ, nfa));
                    continue 'outer;
                }
            }
        }
        return;
    }
}

pub(crate) fn identity(n: usize) -> Vec<BTreeSet<usize>> {
    (0..n).map(|u| BTreeSet::from([u])).collect()
}

pub(crate) fn solve(db: &GraphDb, mut p: Product, arity: usize, limits: &EvalLimits) -> Result<AnswerSet, EvalError> {
    let n = db.num_nodes();
    // every occurrence of a group reads a word of its language
    for (occ, nfa) in &p.groups {
        let reach = nfa_reachability(db, nfa);
        for &(c, d) in occ {
            p.binary.push((c, d, reach.clone()));
        }
    }
    let mut dom = vec![vec![true; n]; p.nvars];
    let mut changed = true;
    while changed {
        changed = false;
        for (a, b, reach) in &p.binary {
            for u in 0..n {
                if dom[*a][u] && !reach[u].iter().any(|&v| dom[*b][v]) {
                    dom[*a][u] = false;
                    changed = true;
                }
            }
            let mut hit = vec![false; n];
            for u in (0..n).filter(|&u| dom[*a][u]) {
                for &v in &reach[u] {
                    hit[v] = true;
                }
            }
            for v in 0..n {
                if dom[*b][v] && !hit[v] {
                    dom[*b][v] = false;
                    changed = true;
                }
            }
        }
    }
    if dom.iter().any(|d| !d.contains(&true)) {
        return Ok(AnswerSet::new(arity));
    }

    let mut atoms = Vec::new();
    for (a, b, reach) in &p.binary {
        let mut tuples = Vec::new();
        for u in (0..n).filter(|&u| dom[*a][u]) {
            for &v in reach[u].iter().filter(|&&v| dom[*b][v]) {
                tuples.push(vec![u, v]);
            }
        }
        atoms.push(Atom { vars: vec![*a, *b], tuples });
    }
    let budget = AtomicUsize::new(0);
    for (occ, nfa) in &p.groups {
        if occ.len() == 1 {
            continue; // the binary constraint is already exact
        }
        let starts = if occ.len() > 2 {
            // Pair the occurrence with the fewest starts with each other
            // occurrence and keep only start tuples the join admits.
            let width = |&(a, _): &(usize, usize)| dom[a].iter().filter(|&&b| b).count();
            let pivot = (0..occ.len()).min_by_key(|&j| width(&occ[j])).unwrap();
            let mut pruned = atoms.clone();
            for j in (0..occ.len()).filter(|&j| j != pivot) {
                let pair = [occ[pivot], occ[j]];
                let tuples =
                    group_relation(db, nfa, &pair, &dom, &start_tuples(db, &pair, &dom), &budget, limits.max_states)?;
                pruned.push(Atom { vars: pair.iter().flat_map(|&(a, b)| [a, b]).collect(), tuples });
            }
            let vars: Vec<usize> = occ.iter().map(|o| o.0).collect();
            join(p.nvars, n, &pruned, &vars).into_iter().collect()
        } else {
            start_tuples(db, occ, &dom)
        };
        let tuples = group_relation(db, nfa, occ, &dom, &starts, &budget, limits.max_states)?;
        atoms.push(Atom { vars: occ.iter().flat_map(|&(a, b)| [a, b]).collect(), tuples });
    }
    let ids = join(p.nvars, n, &atoms, &p.out);
    Ok(AnswerSet::from_ids(db, arity, ids))
}

pub fn eval_simple(q: &Query, db: &GraphDb) -> Result<AnswerSet, EvalError> {
    eval_simple_with(q, db, &EvalLimits::default())
}

pub fn eval_simple_with(q: &Query, db: &GraphDb, limits: &EvalLimits) -> Result<AnswerSet, EvalError> {
    if !classify(&q.conjunctive()?).simple {
        return Err(EvalError::NotSimple);
    }
    product_eval(q, db, None, limits)
}

// ---------------------------------------------------------------------------
// Vstar-free queries

pub fn eval_vsf(q: &Query, db: &GraphDb) -> Result<AnswerSet, EvalError> {
    eval_vsf_with(q, db, &EvalLimits::default())
}

pub fn eval_vsf_with(q: &Query, db: &GraphDb, limits: &EvalLimits) -> Result<AnswerSet, EvalError> {
    let cx = q.conjunctive()?;
    if !classify(&cx).vstar_free {
        return Err(EvalError::NotVstarFree);
    }
    let (nf, _) = normalize_with_report(&cx, limits.normal_form)?;
    let parts = expand_with(&nf, limits.normal_form)?;
    let results = par::map(&parts, |p| product_eval(&q.relabel(p.components().to_vec()), db, None, limits));
    let mut ans = AnswerSet::new(q.output.len());
    for r in results {
        ans.extend(r?);
    }
    Ok(ans)
}

// ---------------------------------------------------------------------------
// Fixing a mapping

/// Image of a variable while fixing: a word, or unknown of length at most k.
#[derive(Clone, Debug)]
enum Image {
    Known(Vec<char>),
    Unknown,
}

struct Fixer<'a> {
    images: &'a BTreeMap<VarId, Image>,
    alphabet: &'a Alphabet,
    k: usize,
}

impl Fixer<'_> {
    fn image(&self, x: &VarId) -> Image {
        self.images.get(x).cloned().unwrap_or(Image::Known(Vec::new()))
    }

    fn image_regex(&self, x: &VarId) -> Xregex {
        match self.image(x) {
            Image::Known(w) => Xregex::word(&w),
            Image::Unknown => {
                let one = Xregex::alt(self.alphabet.any_symbol(), Xregex::Epsilon);
                Xregex::concat(vec![one; self.k])
            }
        }
    }

    fn substitute(&self, e: &Xregex) -> Xregex {
        match e {
            Xregex::Def(x, _) | Xregex::Ref(x) => self.image_regex(x),
            Xregex::Concat(cs) => Xregex::Concat(cs.iter().map(|c| self.substitute(c)).collect()),
            Xregex::Alt(l, r) => Xregex::alt(self.substitute(l), self.substitute(r)),
            Xregex::Plus(c) => Xregex::plus(self.substitute(c)),
            leaf => leaf.clone(),
        }
    }

    /// Step 1: drop definitions that cannot produce their image, deleting
    /// upwards to the nearest alternation. `None` means the deletion reached
    /// the top.
    fn prune(&self, e: &Xregex) -> Option<Xregex> {
        match e {
            Xregex::Def(x, body) => {
                let body = self.prune(body)?;
                if let Image::Known(w) = self.image(x) {
                    let re = self.substitute(&body).to_classical().expect("substituted bodies are classical");
                    if !thompson(&re).accepts(&w) {
                        return None;
                    }
                }
                Some(Xregex::def(x, body))
            }
            Xregex::Alt(l, r) => match (self.prune(l), self.prune(r)) {
                (Some(l), Some(r)) => Some(Xregex::alt(l, r)),
                (Some(e), None) | (None, Some(e)) => Some(e),
                (None, None) => None,
            },
            Xregex::Concat(cs) => cs.iter().map(|c| self.prune(c)).collect::<Option<Vec<_>>>().map(Xregex::Concat),
            Xregex::Plus(c) => self.prune(c).map(Xregex::plus),
            leaf => Some(leaf.clone()),
        }
    }
}

/// Step 2: keep only the branches that instantiate a definition of `x`.
fn force(e: &Xregex, x: &VarId) -> Xregex {
    let has = |e: &Xregex| e.defined_vars().contains(x);
    match e {
        Xregex::Def(y, _) if y == x => e.clone(),
        Xregex::Def(y, body) => Xregex::def(y, force(body, x)),
        Xregex::Alt(l, r) => match (has(l), has(r)) {
            (true, true) => Xregex::alt(force(l, x), force(r, x)),
            (true, false) => force(l, x),
            (false, true) => force(r, x),
            (false, false) => e.clone(),
        },
        Xregex::Concat(cs) => Xregex::Concat(cs.iter().map(|c| if has(c) { force(c, x) } else { c.clone() }).collect()),
        Xregex::Plus(c) => Xregex::plus(force(c, x)),
        leaf => leaf.clone(),
    }
}

fn fix_core(components: &[Xregex], images: &BTreeMap<VarId, Image>, alphabet: &Alphabet, k: usize) -> Vec<Xregex> {
    let fixer = Fixer { images, alphabet, k };
    let mut comps: Vec<Xregex> = components.iter().map(|c| fixer.prune(c).unwrap_or(Xregex::Empty)).collect();
    let all: BTreeSet<VarId> = components.iter().flat_map(crate::xregex::vars_of).collect();
    for (x, img) in images {
        if !all.contains(x) {
            continue;
        }
        let Image::Known(w) = img else { continue };
        if w.is_empty() {
            continue;
        }
        let mut any = false;
        for c in comps.iter_mut() {
            if c.defined_vars().contains(x) {
                *c = force(c, x);
                any = true;
            }
        }
        if !any {
            return vec![Xregex::Empty; components.len()];
        }
    }
    comps.iter().map(|c| fixer.substitute(c).simplify_concat()).collect()
}

/// Classical tuple whose language is the set of matches of `cx` with
/// variable mapping exactly `v` (missing variables map to ε).
pub fn fix_mapping(cx: &ConjunctiveXregex, v: &VariableMapping) -> Result<Vec<Xregex>, EvalError> {
    for (x, w) in v.iter() {
        if let Some(&c) = w.iter().find(|&&c| !cx.alphabet().contains(c)) {
            return Err(EvalError::BadImage { var: x.clone(), symbol: c });
        }
    }
    let images = v.iter().map(|(x, w)| (x.clone(), Image::Known(w.clone()))).collect();
    Ok(fix_core(cx.components(), &images, cx.alphabet(), 0))
}

// ---------------------------------------------------------------------------
// Image-bounded evaluation

fn words_up_to(alphabet: &Alphabet, k: usize) -> Vec<Vec<char>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for w in &layer {
            for &c in alphabet.symbols() {
                let mut w2: Vec<char> = w.clone();
                w2.push(c);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Answers under images of length at most `k`.
pub fn eval_bounded(q: &Query, k: usize, db: &GraphDb) -> Result<AnswerSet, EvalError> {
    eval_bounded_with(q, k, db, &EvalLimits::default())
}

pub fn eval_bounded_with(q: &Query, k: usize, db: &GraphDb, limits: &EvalLimits) -> Result<AnswerSet, EvalError> {
    let cx = q.conjunctive()?;
    if classify(&cx).simple {
        // every definition of a simple query is instantiated, so the bound
        // is a length cap on the definition factors
        return product_eval(q, db, Some(k), limits);
    }
    bounded_search(q, &cx, k, db, limits)
}

/// Branch-and-bound over mappings. Candidate images are ε and the words of
/// length ≤ k labelling some path of `db`, since an instantiated definition
/// reads a path label. Each partial mapping is checked through the CRPQ that
/// leaves the unassigned variables open; branches whose open CRPQ has no
/// answer outside those already found are cut.
fn bounded_search(
    q: &Query,
    cx: &ConjunctiveXregex,
    k: usize,
    db: &GraphDb,
    limits: &EvalLimits,
) -> Result<AnswerSet, EvalError> {
    let alphabet = cx.alphabet();
    let mut cands: Vec<Vec<char>> =
        path_words(db, k).into_keys().filter(|w| w.iter().all(|&c| alphabet.contains(c))).collect();
    cands.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    // outer definitions first: fixing them constrains the most
    let defined = cx.defined_vars();
    let mut order: Vec<VarId> = precedence_of(cx.components())
        .topological_order()
        .expect("conjunctive xregex are acyclic")
        .into_iter()
        .filter(|x| defined.contains(x))
        .collect();
    order.reverse();

    let explored = AtomicUsize::new(0);
    let search = Search { q, cx, k, db, order: &order, cands: &cands, explored: &explored, limit: limits.max_mappings };
    let mut images: BTreeMap<VarId, Image> = order.iter().map(|x| (x.clone(), Image::Unknown)).collect();
    let mut found = AnswerSet::new(q.output.len());
    if !search.viable(&images, &found)? {
        return Ok(found);
    }
    let Some(first) = order.first() else {
        return search.leaf(&images);
    };
    let branches = par::map(&cands, |c| -> Result<AnswerSet, EvalError> {
        let mut images = images.clone();
        images.insert(first.clone(), Image::Known(c.clone()));
        let mut local = AnswerSet::new(q.output.len());
        search.explore(1, &mut images, &mut local)?;
        Ok(local)
    });
    for b in branches {
        found.extend(b?);
    }
    images.clear();
    Ok(found)
}

struct Search<'a> {
    q: &'a Query,
    cx: &'a ConjunctiveXregex,
    k: usize,
    db: &'a GraphDb,
    order: &'a [VarId],
    cands: &'a [Vec<char>],
    explored: &'a AtomicUsize,
    limit: usize,
}

impl Search<'_> {
    fn answers(&self, images: &BTreeMap<VarId, Image>) -> Result<AnswerSet, EvalError> {
        if self.explored.fetch_add(1, Ordering::Relaxed) >= self.limit {
            return Err(EvalError::MappingSpaceLimitExceeded { limit: self.limit });
        }
        let labels = fix_core(self.cx.components(), images, self.cx.alphabet(), self.k);
        if labels.contains(&Xregex::Empty) {
            return Ok(AnswerSet::new(self.q.output.len()));
        }
        Ok(crpq_eval(&self.q.relabel(labels), self.db)?)
    }

    fn viable(&self, images: &BTreeMap<VarId, Image>, found: &AnswerSet) -> Result<bool, EvalError> {
        let open = self.answers(images)?;
        Ok(!open.is_empty() && !open.is_subset(found))
    }

    fn leaf(&self, images: &BTreeMap<VarId, Image>) -> Result<AnswerSet, EvalError> {
        self.answers(images)
    }

    fn explore(&self, i: usize, images: &mut BTreeMap<VarId, Image>, found: &mut AnswerSet) -> Result<(), EvalError> {
        if i == self.order.len() {
            let exact = self.leaf(images)?;
            found.extend(exact);
            return Ok(());
        }
        if !self.viable(images, found)? {
            return Ok(());
        }
        for c in self.cands {
            images.insert(self.order[i].clone(), Image::Known(c.clone()));
            self.explore(i + 1, images, found)?;
        }
        images.insert(self.order[i].clone(), Image::Unknown);
        Ok(())
    }
}

/// Union over all mappings in (Σ^{≤k})^n of the CRPQ fixed at that mapping.
/// Exponential; kept as a cross-check for [`eval_bounded`].
pub fn eval_bounded_exhaustive(q: &Query, k: usize, db: &GraphDb) -> Result<AnswerSet, EvalError> {
    eval_bounded_exhaustive_with(q, k, db, &EvalLimits::default())
}

pub fn eval_bounded_exhaustive_with(
    q: &Query,
    k: usize,
    db: &GraphDb,
    limits: &EvalLimits,
) -> Result<AnswerSet, EvalError> {
    let cx = q.conjunctive()?;
    let mappings = all_mappings(&cx, k, limits.max_mappings)?;
    let results = par::map_owned(mappings, |v| -> Result<AnswerSet, EvalError> {
        let labels = fix_mapping(&cx, &v)?;
        if labels.contains(&Xregex::Empty) {
            return Ok(AnswerSet::new(q.output.len()));
        }
        Ok(crpq_eval(&q.relabel(labels), db)?)
    });
    let mut ans = AnswerSet::new(q.output.len());
    for r in results {
        ans.extend(r?);
    }
    Ok(ans)
}

/// Every mapping of the defined variables of `cx` into Σ^{≤k}.
pub fn all_mappings(cx: &ConjunctiveXregex, k: usize, limit: usize) -> Result<Vec<VariableMapping>, EvalError> {
    let vars: Vec<VarId> = cx.defined_vars().into_iter().collect();
    let words = words_up_to(cx.alphabet(), k);
    let total = (0..vars.len()).try_fold(1usize, |acc, _| acc.checked_mul(words.len()));
    match total {
        Some(t) if t <= limit => {}
        _ => return Err(EvalError::MappingSpaceLimitExceeded { limit }),
    }
    let idx: Vec<Vec<usize>> = vec![(0..words.len()).collect(); vars.len()];
    Ok(cartesian(&idx)
        .into_iter()
        .map(|choice| {
            let mut v = VariableMapping::new();
            for (x, &c) in vars.iter().zip(&choice) {
                v.set(x.clone(), words[c].clone());
            }
            v
        })
        .collect())
}

/// What `|D|` counts in the log bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SizeMeasure {
    #[default]
    NodesAndArcs,
    Nodes,
    Arcs,
}

impl std::str::FromStr for SizeMeasure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nodes+arcs" => Ok(SizeMeasure::NodesAndArcs),
            "nodes" => Ok(SizeMeasure::Nodes),
            "arcs" => Ok(SizeMeasure::Arcs),
            _ => Err(format!("unknown size measure {s:?}; expected nodes+arcs, nodes or arcs")),
        }
    }
}

/// `floor(log2(|V| + |E|))`, and 0 for an empty database.
pub fn log_bound(db: &GraphDb) -> usize {
    log_bound_by(db, SizeMeasure::NodesAndArcs)
}

pub fn log_bound_by(db: &GraphDb, measure: SizeMeasure) -> usize {
    let size = match measure {
        SizeMeasure::NodesAndArcs => db.size(),
        SizeMeasure::Nodes => db.num_nodes(),
        SizeMeasure::Arcs => db.num_arcs(),
    };
    match size {
        0 => 0,
        s => s.ilog2() as usize,
    }
}

pub fn eval_log_bounded(q: &Query, db: &GraphDb) -> Result<AnswerSet, EvalError> {
    eval_bounded(q, log_bound(db), db)
}

// ---------------------------------------------------------------------------
// Oracle

/// Brute-force answers: every word tuple of path labels (length ≤
/// `path_len`) that is a bounded conjunctive match (ref-words ≤ `ref_len`)
/// is joined over the node pairs its words connect.
pub fn eval_oracle(q: &Query, db: &GraphDb, ref_len: usize, path_len: usize) -> Result<AnswerSet, EvalError> {
    eval_oracle_bounded(q, db, ref_len, path_len, None)
}

/// As [`eval_oracle`], keeping only witnesses whose images are at most `image_len` long.
pub fn eval_oracle_bounded(
    q: &Query,
    db: &GraphDb,
    ref_len: usize,
    path_len: usize,
    image_len: Option<usize>,
) -> Result<AnswerSet, EvalError> {
    let cx = q.conjunctive()?;
    let n = db.num_nodes();
    let words = path_words(db, path_len);
    let mut pair_sets: Vec<&BTreeSet<(usize, usize)>> = Vec::new();
    let mut set_id: HashMap<&BTreeSet<(usize, usize)>, usize> = HashMap::new();
    let mut word_set: HashMap<&[char], usize> = HashMap::new();
    for (w, ps) in &words {
        let id = *set_id.entry(ps).or_insert_with(|| {
            pair_sets.push(ps);
            pair_sets.len() - 1
        });
        word_set.insert(w.as_slice(), id);
    }
    let (names, ends, out) = pattern_indices(q);

    // components sharing a defined variable are matched together
    let m = cx.dimension();
    let mut group: Vec<usize> = (0..m).collect();
    fn root(g: &mut [usize], i: usize) -> usize {
        if g[i] != i {
            let r = root(g, g[i]);
            g[i] = r;
        }
        g[i]
    }
    for x in cx.defined_vars() {
        let users: Vec<usize> = (0..m).filter(|&i| crate::xregex::vars_of(&cx.components()[i]).contains(&x)).collect();
        for w in users.windows(2) {
            let (a, b) = (root(&mut group, w[0]), root(&mut group, w[1]));
            group[a] = b;
        }
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..m {
        let r = root(&mut group, i);
        members.entry(r).or_default().push(i);
    }

    let mut atoms = Vec::new();
    for comps in members.values() {
        let sub = ConjunctiveXregex::from_parts_unchecked(
            comps.iter().map(|&i| cx.components()[i].clone()).collect(),
            cx.alphabet().clone(),
        );
        let engine = MatchEngine::new(
            &sub,
            MatchBounds { max_ref_len: ref_len, max_word_len: path_len, max_image_len: image_len },
        );
        let mut combos: BTreeSet<Vec<usize>> = BTreeSet::new();
        engine.for_each_match(&mut |_, w| word_set.contains_key(w), &mut |ws, _| {
            combos.insert(ws.iter().map(|w| word_set[w.as_slice()]).collect());
        });
        let mut gvars: Vec<usize> = comps.iter().flat_map(|&i| [ends[i].0, ends[i].1]).collect();
        gvars.sort_unstable();
        gvars.dedup();
        let local = |v: usize| gvars.iter().position(|&g| g == v).unwrap();
        let all: Vec<usize> = (0..gvars.len()).collect();
        let mut rel: BTreeSet<Vec<usize>> = BTreeSet::new();
        for combo in &combos {
            let edge_atoms: Vec<Atom> = comps
                .iter()
                .zip(combo)
                .map(|(&i, &sid)| Atom {
                    vars: vec![local(ends[i].0), local(ends[i].1)],
                    tuples: pair_sets[sid].iter().map(|&(u, v)| vec![u, v]).collect(),
                })
                .collect();
            rel.extend(join(gvars.len(), n, &edge_atoms, &all));
        }
        atoms.push(Atom { vars: gvars.clone(), tuples: rel.into_iter().collect() });
    }
    let ids = join(names.len(), n, &atoms, &out);
    Ok(AnswerSet::from_ids(db, q.output.len(), ids))
}

// ---------------------------------------------------------------------------
// Dispatch

/// Evaluates under the given semantics. `Unrestricted` uses the simple
/// evaluator when it applies and the vstar-free pipeline otherwise.
pub fn evaluate(q: &Query, db: &GraphDb, mode: Mode) -> Result<AnswerSet, EvalError> {
    match mode {
        Mode::Unrestricted => {
            let c = classify(&q.conjunctive()?);
            if c.simple {
                eval_simple(q, db)
            } else if c.vstar_free {
                eval_vsf(q, db)
            } else {
                Err(EvalError::NotVstarFree)
            }
        }
        Mode::Simple => eval_simple(q, db),
        Mode::Vsf => eval_vsf(q, db),
        Mode::Bounded(k) => eval_bounded(q, k, db),
        Mode::LogBounded => eval_log_bounded(q, db),
        Mode::Oracle { ref_len, path_len } => eval_oracle(q, db, ref_len, path_len),
    }
}

/// Whether `tuple` (node names, in output order) is an answer under `mode`.
pub fn check_answer(q: &Query, db: &GraphDb, tuple: &[String], mode: Mode) -> Result<bool, EvalError> {
    if tuple.len() != q.output.len() {
        return Err(EvalError::ArityMismatch { expected: q.output.len(), got: tuple.len() });
    }
    if let Some(t) = tuple.iter().find(|t| db.node_id(t).is_none()) {
        return Err(GraphError::UnknownNode(t.clone()).into());
    }
    Ok(evaluate(q, db, mode)?.contains(tuple))
}
