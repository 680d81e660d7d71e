//! Ref-words, `deref`, variable mappings and bounded ref-language enumeration.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::conjunctive::SEPARATOR;
use crate::xregex::{ref_automaton, Alphabet, VarId, Xregex};

/// A symbol of a ref-word. The derived order (terminals, then opening
/// brackets, closing brackets, references; ties by payload) is the order used
/// for length-lexicographic enumeration.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RefSymbol {
    Term(char),
    Open(VarId),
    Close(VarId),
    Ref(VarId),
}

impl fmt::Display for RefSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefSymbol::Term(c) => write!(f, "{c}"),
            RefSymbol::Open(x) => write!(f, "<{x}"),
            RefSymbol::Close(x) => write!(f, ">{x}"),
            RefSymbol::Ref(x) => write!(f, "${x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefWordError {
    #[error("parenthesis for {0} occurs more than once")]
    DuplicateParen(VarId),
    #[error("definition brackets are not properly nested")]
    MalformedNesting,
    #[error("cyclic references: {}", .0.iter().map(VarId::to_string).collect::<Vec<_>>().join(" -> "))]
    CyclicReference(Vec<VarId>),
    #[error("terminal {0:?} is not in the alphabet")]
    UnknownSymbol(char),
    #[error("cannot parse ref-word token {0:?}")]
    BadToken(String),
}

/// A validated ref-word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefWord {
    symbols: Vec<RefSymbol>,
}

impl RefWord {
    pub fn symbols(&self) -> &[RefSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn terminal_count(&self) -> usize {
        self.symbols.iter().filter(|s| matches!(s, RefSymbol::Term(_))).count()
    }

    pub fn defined_vars(&self) -> BTreeSet<VarId> {
        self.symbols
            .iter()
            .filter_map(|s| match s {
                RefSymbol::Open(x) => Some(x.clone()),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn from_valid(symbols: Vec<RefSymbol>) -> RefWord {
        RefWord { symbols }
    }
}

impl fmt::Display for RefWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.symbols.iter().map(RefSymbol::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

pub fn validate_refword(symbols: Vec<RefSymbol>, alphabet: &Alphabet) -> Result<RefWord, RefWordError> {
    for s in &symbols {
        if let RefSymbol::Term(c) = s {
            if !alphabet.contains(*c) && *c != SEPARATOR {
                return Err(RefWordError::UnknownSymbol(*c));
            }
        }
    }
    check_structure(&symbols)?;
    Ok(RefWord { symbols })
}

/// Bracket discipline and acyclicity, without the alphabet check.
pub(crate) fn check_structure(symbols: &[RefSymbol]) -> Result<(), RefWordError> {
    let mut opened = BTreeSet::new();
    let mut closed = BTreeSet::new();
    let mut stack: Vec<&VarId> = Vec::new();
    // deps[y] = variables referenced or defined inside the definition of y
    let mut deps: BTreeMap<&VarId, BTreeSet<&VarId>> = BTreeMap::new();
    for s in symbols {
        match s {
            RefSymbol::Open(x) => {
                if !opened.insert(x) {
                    return Err(RefWordError::DuplicateParen(x.clone()));
                }
                for y in &stack {
                    deps.entry(*y).or_default().insert(x);
                }
                deps.entry(x).or_default();
                stack.push(x);
            }
            RefSymbol::Close(x) => {
                if closed.contains(x) {
                    return Err(RefWordError::DuplicateParen(x.clone()));
                }
                if stack.pop() != Some(x) {
                    return Err(RefWordError::MalformedNesting);
                }
                closed.insert(x);
            }
            RefSymbol::Ref(x) => {
                for y in &stack {
                    deps.entry(*y).or_default().insert(x);
                }
            }
            RefSymbol::Term(_) => {}
        }
    }
    if !stack.is_empty() {
        return Err(RefWordError::MalformedNesting);
    }
    if let Some(cycle) = find_cycle(&deps) {
        return Err(RefWordError::CyclicReference(cycle));
    }
    Ok(())
}

fn find_cycle(deps: &BTreeMap<&VarId, BTreeSet<&VarId>>) -> Option<Vec<VarId>> {
    fn visit<'a>(
        v: &'a VarId,
        deps: &BTreeMap<&'a VarId, BTreeSet<&'a VarId>>,
        state: &mut HashMap<&'a VarId, u8>,
        path: &mut Vec<&'a VarId>,
    ) -> Option<Vec<VarId>> {
        state.insert(v, 1);
        path.push(v);
        for &w in deps.get(v).into_iter().flatten() {
            match state.get(w).copied().unwrap_or(0) {
                1 => {
                    let start = path.iter().position(|&p| p == w).unwrap();
                    let mut c: Vec<VarId> = path[start..].iter().map(|&p| p.clone()).collect();
                    c.push(w.clone());
                    return Some(c);
                }
                0 => {
                    if let Some(c) = visit(w, deps, state, path) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        path.pop();
        state.insert(v, 2);
        None
    }
    let mut state = HashMap::new();
    for &v in deps.keys() {
        if !state.contains_key(v) {
            if let Some(c) = visit(v, deps, &mut state, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

/// Parses whitespace-separated tokens: `<x`, `>x`, `$x`, or runs of terminals.
/// The unicode brackets `⊢x` / `⊣x` are accepted as well.
pub fn parse_refword(text: &str, alphabet: &Alphabet) -> Result<RefWord, RefWordError> {
    let mut symbols = Vec::new();
    for tok in text.split_whitespace() {
        let mut chars = tok.chars();
        let head = chars.next().unwrap();
        let rest: String = chars.collect();
        let var = || VarId::new(rest.clone()).map_err(|_| RefWordError::BadToken(tok.to_string()));
        match head {
            '<' | '⊢' => symbols.push(RefSymbol::Open(var()?)),
            '>' | '⊣' => symbols.push(RefSymbol::Close(var()?)),
            '$' => symbols.push(RefSymbol::Ref(var()?)),
            _ => symbols.extend(tok.chars().map(RefSymbol::Term)),
        }
    }
    validate_refword(symbols, alphabet)
}

/// Variable mapping; variables without an entry have image ε.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableMapping {
    images: BTreeMap<VarId, Vec<char>>,
}

impl VariableMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, x: &VarId) -> &[char] {
        self.images.get(x).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn set(&mut self, x: VarId, image: Vec<char>) {
        if image.is_empty() {
            self.images.remove(&x);
        } else {
            self.images.insert(x, image);
        }
    }

    pub fn with(mut self, x: &VarId, image: &str) -> Self {
        self.set(x.clone(), image.chars().collect());
        self
    }

    /// Non-ε entries in variable order.
    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &Vec<char>)> {
        self.images.iter()
    }

    pub fn max_image_len(&self) -> usize {
        self.images.values().map(Vec::len).max().unwrap_or(0)
    }

    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<(), RefWordError> {
        for w in self.images.values() {
            if let Some(&c) = w.iter().find(|&&c| !alphabet.contains(c)) {
                return Err(RefWordError::UnknownSymbol(c));
            }
        }
        Ok(())
    }

    /// `x=ab y=ε` over the given variables.
    pub fn render(&self, vars: &[VarId]) -> String {
        let parts: Vec<String> = vars
            .iter()
            .map(|x| {
                let w = self.get(x);
                if w.is_empty() {
                    format!("{x}=ε")
                } else {
                    format!("{x}={}", w.iter().collect::<String>())
                }
            })
            .collect();
        parts.join(" ")
    }
}

impl fmt::Display for VariableMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<VarId> = self.images.keys().cloned().collect();
        f.write_str(&self.render(&vars))
    }
}

/// Resolves all references; undefined references are deleted.
pub fn deref(w: &RefWord) -> (Vec<char>, VariableMapping) {
    let syms = &w.symbols;
    let mut span: HashMap<&VarId, (usize, usize)> = HashMap::new();
    let mut open_at: HashMap<&VarId, usize> = HashMap::new();
    for (i, s) in syms.iter().enumerate() {
        match s {
            RefSymbol::Open(x) => {
                open_at.insert(x, i);
            }
            RefSymbol::Close(x) => {
                span.insert(x, (open_at[x] + 1, i));
            }
            _ => {}
        }
    }
    let mut memo: HashMap<&VarId, Vec<char>> = HashMap::new();
    fn image<'a>(
        x: &'a VarId,
        syms: &'a [RefSymbol],
        span: &HashMap<&'a VarId, (usize, usize)>,
        memo: &mut HashMap<&'a VarId, Vec<char>>,
    ) -> Vec<char> {
        if let Some(v) = memo.get(x) {
            return v.clone();
        }
        let (a, b) = span[x];
        let out = expand(&syms[a..b], syms, span, memo);
        memo.insert(x, out.clone());
        out
    }
    fn expand<'a>(
        part: &'a [RefSymbol],
        syms: &'a [RefSymbol],
        span: &HashMap<&'a VarId, (usize, usize)>,
        memo: &mut HashMap<&'a VarId, Vec<char>>,
    ) -> Vec<char> {
        let mut out = Vec::new();
        for s in part {
            match s {
                RefSymbol::Term(c) => out.push(*c),
                RefSymbol::Ref(y) if span.contains_key(y) => out.extend(image(y, syms, span, memo)),
                _ => {}
            }
        }
        out
    }
    let word = expand(syms, syms, &span, &mut memo);
    let mut mapping = VariableMapping::new();
    let keys: Vec<&VarId> = span.keys().copied().collect();
    for x in keys {
        let img = image(x, syms, &span, &mut memo);
        mapping.set(x.clone(), img);
    }
    (word, mapping)
}

fn open_counts_ok(prefix: &[RefSymbol]) -> bool {
    match prefix.last() {
        Some(RefSymbol::Open(x)) => !prefix[..prefix.len() - 1].contains(&RefSymbol::Open(x.clone())),
        _ => true,
    }
}

/// All ref-words of the xregex up to the given length, length-lexicographic.
pub fn enumerate_refwords(x: &Xregex, max_ref_len: usize) -> Vec<RefWord> {
    enumerate_filtered(x, max_ref_len, usize::MAX)
}

/// Like [`enumerate_refwords`], but pruned to at most `max_terminals`
/// terminal symbols.
pub(crate) fn enumerate_filtered(x: &Xregex, max_ref_len: usize, max_terminals: usize) -> Vec<RefWord> {
    let nfa = ref_automaton(x);
    let words = nfa.words_up_to(max_ref_len, |p| {
        open_counts_ok(p)
            && (max_terminals == usize::MAX
                || p.iter().filter(|s| matches!(s, RefSymbol::Term(_))).count() <= max_terminals)
    });
    words.into_iter().filter(|w| check_structure(w).is_ok()).map(RefWord::from_valid).collect()
}

/// `{deref(w) : w ∈ Ref(x), |w| ≤ max_ref_len, |deref(w)| ≤ max_word_len}`.
/// A sound under-approximation of the language.
pub fn enumerate_lang_bounded(x: &Xregex, max_ref_len: usize, max_word_len: usize) -> BTreeSet<Vec<char>> {
    enumerate_filtered(x, max_ref_len, max_word_len)
        .iter()
        .map(|w| deref(w).0)
        .filter(|w| w.len() <= max_word_len)
        .collect()
}

/// Ref-words whose mapping agrees with `v` on every variable of `x`.
pub fn refwords_with_mapping(x: &Xregex, v: &VariableMapping, max_ref_len: usize) -> Vec<RefWord> {
    let vars = crate::xregex::vars_of(x);
    enumerate_refwords(x, max_ref_len)
        .into_iter()
        .filter(|w| {
            let (_, m) = deref(w);
            vars.iter().all(|y| m.get(y) == v.get(y))
        })
        .collect()
}
