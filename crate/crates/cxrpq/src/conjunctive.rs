//! Conjunctive matches: the var-prefix / separator construction and bounded
//! match oracles.
//!
//! The oracle joins per-component ref-words symbolically. For each component
//! we enumerate its own ref-words `v''` (the part after the separator) and
//! dereference them while keeping references to variables defined in other
//! components as placeholders. A conjunctive match is then a choice of one
//! entry per component such that the placeholders resolve consistently. The
//! var-prefix of the separator construction only ever copies those shared
//! images, so the bound on ref-word length applies to `v''`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::par;
use crate::refwords::{enumerate_filtered, RefSymbol, RefWord, VariableMapping};
use crate::xregex::{Alphabet, ConjunctiveXregex, VarId, Xregex};

/// Reserved separator, never admitted into a user alphabet.
pub const SEPARATOR: char = '\u{E000}';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConjunctiveMatchError {
    #[error("expected {expected} words, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the alphabet contains the reserved separator")]
    SeparatorInAlphabet,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConjunctiveMatch {
    pub words: Vec<Vec<char>>,
    pub mapping: VariableMapping,
}

/// `x{Σ*}` for every variable of `all_vars` without a definition in the
/// component, in variable order.
pub fn var_prefix(component: &Xregex, all_vars: &BTreeSet<VarId>, alphabet: &Alphabet) -> Xregex {
    let defined = component.defined_vars();
    let defs: Vec<Xregex> =
        all_vars.iter().filter(|x| !defined.contains(*x)).map(|x| Xregex::def(x, alphabet.sigma_star())).collect();
    Xregex::concat(defs)
}

pub fn inter_xregex(
    component: &Xregex,
    all_vars: &BTreeSet<VarId>,
    alphabet: &Alphabet,
) -> Result<Xregex, ConjunctiveMatchError> {
    if alphabet.contains(SEPARATOR) {
        return Err(ConjunctiveMatchError::SeparatorInAlphabet);
    }
    Ok(Xregex::Concat(vec![var_prefix(component, all_vars, alphabet), Xregex::Term(SEPARATOR), component.clone()]))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum PSym {
    T(char),
    V(usize),
}

/// One dereferenced ref-word of a component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Entry {
    pattern: Vec<PSym>,
    /// Images of the variables defined in this component, in `own` order.
    images: Vec<Vec<PSym>>,
}

/// Bounds for the match oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchBounds {
    /// Maximal length of a component's own ref-word.
    pub max_ref_len: usize,
    /// Maximal length of a matched word.
    pub max_word_len: usize,
    /// Optional bound on every variable image.
    pub max_image_len: Option<usize>,
}

/// Precomputed per-component entries for repeated match queries.
pub struct MatchEngine {
    dimension: usize,
    vars: Vec<VarId>,
    owner: Vec<usize>,
    own: Vec<Vec<usize>>,
    entries: Vec<Vec<Entry>>,
    order: Vec<usize>,
    bounds: MatchBounds,
}

impl MatchEngine {
    pub fn new(cx: &ConjunctiveXregex, bounds: MatchBounds) -> Self {
        let components = cx.components();
        let vars: Vec<VarId> = cx.defined_vars().into_iter().collect();
        let index: HashMap<&VarId, usize> = vars.iter().enumerate().map(|(i, x)| (x, i)).collect();
        let mut owner = vec![0; vars.len()];
        let mut own = vec![Vec::new(); components.len()];
        for (i, c) in components.iter().enumerate() {
            for x in c.defined_vars() {
                owner[index[&x]] = i;
                own[i].push(index[&x]);
            }
        }
        let jobs: Vec<usize> = (0..components.len()).collect();
        let entries = par::map(&jobs, |&i| {
            let max_terms = bounds.max_word_len;
            let words = enumerate_filtered(&components[i], bounds.max_ref_len, max_terms);
            let mut set = BTreeSet::new();
            for w in &words {
                if let Some(e) = symbolic_entry(w, &index, &owner, i, &own[i], bounds.max_image_len) {
                    set.insert(e);
                }
            }
            set.into_iter().collect::<Vec<_>>()
        });
        let order = component_order(components, &entries, &index, &owner);
        MatchEngine { dimension: components.len(), vars, owner, own, entries, order, bounds }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of distinct symbolic entries per component.
    pub fn entry_counts(&self) -> Vec<usize> {
        self.entries.iter().map(Vec::len).collect()
    }

    /// Calls `emit` for every choice of entries that resolves to words
    /// accepted by `allowed`. `allowed(i, w)` is consulted as soon as the
    /// word of component `i` is determined.
    pub fn for_each_match(
        &self,
        allowed: &mut dyn FnMut(usize, &[char]) -> bool,
        emit: &mut dyn FnMut(&[Vec<char>], VariableMapping),
    ) {
        let mut st = JoinState {
            chosen: vec![None; self.dimension],
            psi: vec![None; self.vars.len()],
            words: vec![None; self.dimension],
        };
        self.join(0, &mut st, allowed, emit);
    }

    fn join(
        &self,
        depth: usize,
        st: &mut JoinState,
        allowed: &mut dyn FnMut(usize, &[char]) -> bool,
        emit: &mut dyn FnMut(&[Vec<char>], VariableMapping),
    ) {
        if depth == self.dimension {
            if st.psi.iter().any(Option::is_none) || st.words.iter().any(Option::is_none) {
                return;
            }
            let words: Vec<Vec<char>> = st.words.iter().map(|w| w.clone().unwrap()).collect();
            let mut m = VariableMapping::new();
            for (i, x) in self.vars.iter().enumerate() {
                m.set(x.clone(), st.psi[i].clone().unwrap());
            }
            emit(&words, m);
            return;
        }
        let comp = self.order[depth];
        for (ei, _) in self.entries[comp].iter().enumerate() {
            let saved_psi = st.psi.clone();
            let saved_words = st.words.clone();
            st.chosen[comp] = Some(ei);
            if self.propagate(st, allowed) {
                self.join(depth + 1, st, allowed, emit);
            }
            st.chosen[comp] = None;
            st.psi = saved_psi;
            st.words = saved_words;
        }
    }

    /// Resolves whatever became resolvable; false on a violated bound.
    fn propagate(&self, st: &mut JoinState, allowed: &mut dyn FnMut(usize, &[char]) -> bool) -> bool {
        loop {
            let mut progress = false;
            for v in 0..self.vars.len() {
                if st.psi[v].is_some() {
                    continue;
                }
                let c = self.owner[v];
                let Some(ei) = st.chosen[c] else { continue };
                let pos = self.own[c].iter().position(|&o| o == v).unwrap();
                if let Some(img) = resolve(&self.entries[c][ei].images[pos], &st.psi) {
                    if self.bounds.max_image_len.is_some_and(|k| img.len() > k) {
                        return false;
                    }
                    st.psi[v] = Some(img);
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        for c in 0..self.dimension {
            if st.words[c].is_some() {
                continue;
            }
            let Some(ei) = st.chosen[c] else { continue };
            if let Some(w) = resolve(&self.entries[c][ei].pattern, &st.psi) {
                if w.len() > self.bounds.max_word_len || !allowed(c, &w) {
                    return false;
                }
                st.words[c] = Some(w);
            }
        }
        true
    }
}

struct JoinState {
    chosen: Vec<Option<usize>>,
    psi: Vec<Option<Vec<char>>>,
    words: Vec<Option<Vec<char>>>,
}

fn resolve(pattern: &[PSym], psi: &[Option<Vec<char>>]) -> Option<Vec<char>> {
    let mut out = Vec::with_capacity(pattern.len());
    for s in pattern {
        match s {
            PSym::T(c) => out.push(*c),
            PSym::V(v) => out.extend(psi[*v].as_ref()?),
        }
    }
    Some(out)
}

/// Dereferences `w` keeping references to variables of other components
/// symbolic. References to variables defined nowhere, or defined in this
/// component but not instantiated by `w`, vanish.
fn symbolic_entry(
    w: &RefWord,
    index: &HashMap<&VarId, usize>,
    owner: &[usize],
    comp: usize,
    own: &[usize],
    max_image_len: Option<usize>,
) -> Option<Entry> {
    let syms = w.symbols();
    let mut span: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut open_at: HashMap<usize, usize> = HashMap::new();
    for (i, s) in syms.iter().enumerate() {
        match s {
            RefSymbol::Open(x) => {
                open_at.insert(index[x], i);
            }
            RefSymbol::Close(x) => {
                let v = index[x];
                span.insert(v, (open_at[&v] + 1, i));
            }
            _ => {}
        }
    }
    let mut memo: HashMap<usize, Vec<PSym>> = HashMap::new();
    fn expand(part: &[RefSymbol], ctx: &Ctx, memo: &mut HashMap<usize, Vec<PSym>>) -> Vec<PSym> {
        let mut out = Vec::new();
        for s in part {
            match s {
                RefSymbol::Term(c) => out.push(PSym::T(*c)),
                RefSymbol::Ref(x) => {
                    let Some(&v) = ctx.index.get(x) else { continue };
                    if ctx.owner[v] != ctx.comp {
                        out.push(PSym::V(v));
                    } else if let Some(&(a, b)) = ctx.span.get(&v) {
                        if let Some(img) = memo.get(&v) {
                            out.extend(img.iter().cloned());
                        } else {
                            let img = expand(&ctx.syms[a..b], ctx, memo);
                            memo.insert(v, img.clone());
                            out.extend(img);
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }
    struct Ctx<'a> {
        syms: &'a [RefSymbol],
        span: HashMap<usize, (usize, usize)>,
        index: &'a HashMap<&'a VarId, usize>,
        owner: &'a [usize],
        comp: usize,
    }
    let ctx = Ctx { syms, span, index, owner, comp };
    let pattern = expand(syms, &ctx, &mut memo);
    let mut images = Vec::with_capacity(own.len());
    for &v in own {
        let img = match ctx.span.get(&v) {
            Some(&(a, b)) => expand(&syms[a..b], &ctx, &mut memo),
            None => Vec::new(),
        };
        if let Some(k) = max_image_len {
            if img.iter().filter(|s| matches!(s, PSym::T(_))).count() > k {
                return None;
            }
        }
        images.push(img);
    }
    Some(Entry { pattern, images })
}

/// Greedy order: components whose placeholders are already covered first,
/// then fewer entries.
fn component_order(
    components: &[Xregex],
    entries: &[Vec<Entry>],
    index: &HashMap<&VarId, usize>,
    owner: &[usize],
) -> Vec<usize> {
    let deps: Vec<BTreeSet<usize>> = components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.referenced_vars().iter().filter_map(|x| index.get(x)).map(|&v| owner[v]).filter(|&o| o != i).collect()
        })
        .collect();
    let mut placed: Vec<usize> = Vec::new();
    let mut left: BTreeSet<usize> = (0..components.len()).collect();
    while !left.is_empty() {
        let best = *left
            .iter()
            .min_by_key(|&&c| (deps[c].iter().filter(|d| !placed.contains(d)).count(), entries[c].len(), c))
            .unwrap();
        left.remove(&best);
        placed.push(best);
    }
    placed
}

/// Some mapping witnessing `words` as a conjunctive match within the bound.
pub fn is_conjunctive_match_bounded(
    cx: &ConjunctiveXregex,
    words: &[Vec<char>],
    max_ref_len: usize,
) -> Result<Option<VariableMapping>, ConjunctiveMatchError> {
    if words.len() != cx.dimension() {
        return Err(ConjunctiveMatchError::DimensionMismatch { expected: cx.dimension(), got: words.len() });
    }
    let max_word_len = words.iter().map(Vec::len).max().unwrap_or(0);
    let engine = MatchEngine::new(cx, MatchBounds { max_ref_len, max_word_len, max_image_len: None });
    let mut found: Option<VariableMapping> = None;
    engine.for_each_match(&mut |i, w| w == words[i].as_slice(), &mut |_, m| {
        if found.as_ref().is_none_or(|f| m < *f) {
            found = Some(m);
        }
    });
    Ok(found)
}

/// All matches whose component ref-words have length at most `max_ref_len`
/// and whose words have length at most `max_word_len`, sorted.
pub fn enumerate_conjunctive_matches(
    cx: &ConjunctiveXregex,
    max_ref_len: usize,
    max_word_len: usize,
) -> Vec<ConjunctiveMatch> {
    enumerate_matches_with(cx, MatchBounds { max_ref_len, max_word_len, max_image_len: None })
}

pub fn enumerate_matches_with(cx: &ConjunctiveXregex, bounds: MatchBounds) -> Vec<ConjunctiveMatch> {
    let engine = MatchEngine::new(cx, bounds);
    let mut out = BTreeSet::new();
    engine.for_each_match(&mut |_, _| true, &mut |ws, m| {
        out.insert(ConjunctiveMatch { words: ws.to_vec(), mapping: m });
    });
    out.into_iter().collect()
}

/// Word tuples of the bounded matches, mappings dropped.
pub fn match_words(cx: &ConjunctiveXregex, bounds: MatchBounds) -> BTreeSet<Vec<Vec<char>>> {
    let engine = MatchEngine::new(cx, bounds);
    let mut out = BTreeSet::new();
    engine.for_each_match(&mut |_, _| true, &mut |ws, _| {
        out.insert(ws.to_vec());
    });
    out
}

/// Bounded matches grouped by mapping.
pub fn matches_by_mapping(
    cx: &ConjunctiveXregex,
    bounds: MatchBounds,
) -> BTreeMap<VariableMapping, BTreeSet<Vec<Vec<char>>>> {
    let mut out: BTreeMap<VariableMapping, BTreeSet<Vec<Vec<char>>>> = BTreeMap::new();
    for m in enumerate_matches_with(cx, bounds) {
        out.entry(m.mapping).or_default().insert(m.words);
    }
    out
}
