//! Regular expressions with backreferences: syntax tree, concrete syntax,
//! ref-regex lowering, sequentiality, precedence and fragment classification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::automaton::{thompson, Automaton, Re};
use crate::conjunctive::SEPARATOR;
use crate::refwords::RefSymbol;

const METACHARS: &[char] = &['(', ')', '|', '+', '*', '{', '}', '$', '\\', '%'];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XregexError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("symbol {symbol:?} at offset {pos} is not in the alphabet")]
    UnknownSymbol { pos: usize, symbol: char },
    #[error("variable {0} occurs inside its own definition")]
    SelfReference(VarId),
    #[error("the empty set may not occur inside the definition of {0}")]
    EmptyInDefinition(VarId),
    #[error("invalid variable name {0:?}")]
    BadVarName(String),
    #[error("invalid alphabet: {0}")]
    BadAlphabet(String),
    #[error("concatenation needs at least two factors")]
    ShortConcat,
}

/// A string variable name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(String);

impl VarId {
    pub fn new(name: impl Into<String>) -> Result<Self, XregexError> {
        let name = name.into();
        let mut chars = name.chars();
        let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(is_ident_char);
        if ok {
            Ok(VarId(name))
        } else {
            Err(XregexError::BadVarName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Finite, nonempty, ordered terminal alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self, XregexError> {
        let set: BTreeSet<char> = symbols.into_iter().collect();
        if set.is_empty() {
            return Err(XregexError::BadAlphabet("alphabet is empty".into()));
        }
        for &c in &set {
            if c.is_whitespace() || METACHARS.contains(&c) || c == SEPARATOR {
                return Err(XregexError::BadAlphabet(format!("reserved symbol {c:?}")));
            }
        }
        Ok(Alphabet { symbols: set.into_iter().collect() })
    }

    /// Parses `abc` or `a b c`.
    pub fn parse(text: &str) -> Result<Self, XregexError> {
        Alphabet::new(text.chars().filter(|c| !c.is_whitespace()))
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn contains(&self, c: char) -> bool {
        self.symbols.binary_search(&c).is_ok()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn union(&self, other: &Alphabet) -> Alphabet {
        Alphabet {
            symbols: self.symbols.iter().chain(&other.symbols).copied().collect::<BTreeSet<_>>().into_iter().collect(),
        }
    }

    /// `(a|b|…)*` over the alphabet.
    pub fn sigma_star(&self) -> Xregex {
        Xregex::star(self.any_symbol())
    }

    pub fn any_symbol(&self) -> Xregex {
        let mut it = self.symbols.iter().map(|&c| Xregex::Term(c));
        let first = it.next().expect("alphabet is nonempty");
        it.fold(first, Xregex::alt)
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.symbols.iter().map(|c| c.to_string()).collect();
        f.write_str(&s.join(" "))
    }
}

/// Syntax tree of an xregex. Star is sugar for `Alt(Plus(r), Epsilon)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Xregex {
    Term(char),
    Epsilon,
    Empty,
    Concat(Vec<Xregex>),
    Alt(Box<Xregex>, Box<Xregex>),
    Plus(Box<Xregex>),
    Def(VarId, Box<Xregex>),
    Ref(VarId),
}

impl Xregex {
    /// Concatenation that collapses to a single factor or ε when possible.
    pub fn concat(mut parts: Vec<Xregex>) -> Xregex {
        match parts.len() {
            0 => Xregex::Epsilon,
            1 => parts.pop().unwrap(),
            _ => Xregex::Concat(parts),
        }
    }

    pub fn alt(l: Xregex, r: Xregex) -> Xregex {
        Xregex::Alt(Box::new(l), Box::new(r))
    }

    pub fn plus(e: Xregex) -> Xregex {
        Xregex::Plus(Box::new(e))
    }

    pub fn star(e: Xregex) -> Xregex {
        Xregex::alt(Xregex::plus(e), Xregex::Epsilon)
    }

    pub fn def(x: &VarId, body: Xregex) -> Xregex {
        Xregex::Def(x.clone(), Box::new(body))
    }

    pub fn var(x: &VarId) -> Xregex {
        Xregex::Ref(x.clone())
    }

    pub fn word(w: &[char]) -> Xregex {
        Xregex::concat(w.iter().map(|&c| Xregex::Term(c)).collect())
    }

    /// Left-nested alternation of the given alternatives.
    pub fn alternation(parts: Vec<Xregex>) -> Xregex {
        let mut it = parts.into_iter();
        let first = it.next().unwrap_or(Xregex::Empty);
        it.fold(first, Xregex::alt)
    }

    /// The `Alt(Plus(r), Epsilon)` shape that star desugars to.
    pub fn as_star(&self) -> Option<&Xregex> {
        match self {
            Xregex::Alt(l, r) if **r == Xregex::Epsilon => match &**l {
                Xregex::Plus(body) => Some(body),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Xregex::Term(_) | Xregex::Epsilon | Xregex::Empty | Xregex::Ref(_) => 1,
            Xregex::Concat(cs) => 1 + cs.iter().map(Xregex::size).sum::<usize>(),
            Xregex::Alt(l, r) => 1 + l.size() + r.size(),
            Xregex::Plus(c) | Xregex::Def(_, c) => 1 + c.size(),
        }
    }

    pub fn children(&self) -> Vec<&Xregex> {
        match self {
            Xregex::Concat(cs) => cs.iter().collect(),
            Xregex::Alt(l, r) => vec![l, r],
            Xregex::Plus(c) | Xregex::Def(_, c) => vec![c],
            _ => Vec::new(),
        }
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Xregex)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Xregex::Def(..) | Xregex::Ref(_) => true,
            Xregex::Term(_) | Xregex::Epsilon | Xregex::Empty => false,
            _ => self.children().into_iter().any(Xregex::has_vars),
        }
    }

    pub fn is_classical(&self) -> bool {
        !self.has_vars()
    }

    pub fn defined_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Xregex::Def(x, _) = e {
                out.insert(x.clone());
            }
        });
        out
    }

    pub fn referenced_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Xregex::Ref(x) = e {
                out.insert(x.clone());
            }
        });
        out
    }

    /// Variables in pre-order of first occurrence.
    pub fn vars_in_order(&self) -> Vec<VarId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Xregex::Def(x, _) | Xregex::Ref(x) = e {
                if seen.insert(x.clone()) {
                    out.push(x.clone());
                }
            }
        });
        out
    }

    pub fn terminals(&self) -> BTreeSet<char> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Xregex::Term(c) = e {
                out.insert(*c);
            }
        });
        out
    }

    /// Classical regex form; `None` if a variable occurs.
    pub fn to_classical(&self) -> Option<Re<char>> {
        Some(match self {
            Xregex::Term(c) => Re::Sym(*c),
            Xregex::Epsilon => Re::Eps,
            Xregex::Empty => Re::Empty,
            Xregex::Concat(cs) => Re::Concat(cs.iter().map(Xregex::to_classical).collect::<Option<_>>()?),
            Xregex::Alt(l, r) => Re::Alt(Box::new(l.to_classical()?), Box::new(r.to_classical()?)),
            Xregex::Plus(c) => Re::Plus(Box::new(c.to_classical()?)),
            Xregex::Def(..) | Xregex::Ref(_) => return None,
        })
    }

    /// Rewrites bottom-up with `f`, which sees already rewritten children.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Xregex) -> Xregex) -> Xregex {
        let rebuilt = match self {
            Xregex::Concat(cs) => Xregex::Concat(cs.iter().map(|c| c.map_bottom_up(f)).collect()),
            Xregex::Alt(l, r) => Xregex::alt(l.map_bottom_up(f), r.map_bottom_up(f)),
            Xregex::Plus(c) => Xregex::plus(c.map_bottom_up(f)),
            Xregex::Def(x, c) => Xregex::def(x, c.map_bottom_up(f)),
            leaf => leaf.clone(),
        };
        f(rebuilt)
    }

    /// Flattens nested concatenations and drops ε factors.
    pub fn simplify_concat(&self) -> Xregex {
        self.map_bottom_up(&mut |e| match e {
            Xregex::Concat(cs) => {
                let mut flat = Vec::new();
                for c in cs {
                    match c {
                        Xregex::Concat(inner) => flat.extend(inner),
                        Xregex::Epsilon => {}
                        other => flat.push(other),
                    }
                }
                Xregex::concat(flat)
            }
            other => other,
        })
    }

    /// Checks the structural invariants that the parser guarantees.
    pub fn check_well_formed(&self) -> Result<(), XregexError> {
        match self {
            Xregex::Concat(cs) if cs.len() < 2 => return Err(XregexError::ShortConcat),
            Xregex::Def(x, body) => {
                if body.defined_vars().contains(x) || body.referenced_vars().contains(x) {
                    return Err(XregexError::SelfReference(x.clone()));
                }
                let mut empty = false;
                body.visit(&mut |e| empty |= *e == Xregex::Empty);
                if empty {
                    return Err(XregexError::EmptyInDefinition(x.clone()));
                }
            }
            _ => {}
        }
        for c in self.children() {
            c.check_well_formed()?;
        }
        Ok(())
    }
}

/// All variables with a definition or reference.
pub fn vars_of(ast: &Xregex) -> BTreeSet<VarId> {
    let mut out = ast.defined_vars();
    out.extend(ast.referenced_vars());
    out
}

// ---------------------------------------------------------------------------
// Concrete syntax

pub fn parse_xregex(text: &str, alphabet: &Alphabet) -> Result<Xregex, XregexError> {
    let mut p = Parser { chars: text.char_indices().collect(), pos: 0, alphabet, len: text.len() };
    let e = p.alternation()?;
    p.skip_ws();
    if let Some((off, c)) = p.peek_raw() {
        return Err(XregexError::Syntax { pos: off, msg: format!("unexpected {c:?}") });
    }
    e.check_well_formed()?;
    Ok(e)
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    alphabet: &'a Alphabet,
    len: usize,
}

impl Parser<'_> {
    fn peek_raw(&self) -> Option<(usize, char)> {
        self.chars.get(self.pos).copied()
    }

    fn offset(&self) -> usize {
        self.peek_raw().map_or(self.len, |(o, _)| o)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek_raw(), Some((_, c)) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw().map(|(_, c)| c)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, XregexError> {
        Err(XregexError::Syntax { pos: self.offset(), msg: msg.into() })
    }

    fn alternation(&mut self) -> Result<Xregex, XregexError> {
        let mut left = self.concatenation()?;
        while self.peek() == Some('|') {
            self.pos += 1;
            let right = self.concatenation()?;
            left = Xregex::alt(left, right);
        }
        Ok(left)
    }

    fn concatenation(&mut self) -> Result<Xregex, XregexError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if matches!(c, '|' | ')' | '}') {
                break;
            }
            items.push(self.postfix()?);
        }
        if items.is_empty() {
            return self.err("empty expression (write \\e for the empty word)");
        }
        Ok(Xregex::concat(items))
    }

    fn postfix(&mut self) -> Result<Xregex, XregexError> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    e = Xregex::plus(e);
                }
                Some('*') => {
                    self.pos += 1;
                    e = Xregex::star(e);
                }
                _ => return Ok(e),
            }
        }
    }

    fn atom(&mut self) -> Result<Xregex, XregexError> {
        let Some(c) = self.peek() else { return self.err("unexpected end of input") };
        let at = self.offset();
        self.pos += 1;
        match c {
            '(' => {
                let e = self.alternation()?;
                if self.peek() != Some(')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            '$' => {
                let start = self.pos;
                while matches!(self.peek_raw(), Some((_, c)) if is_ident_char(c)) {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
                let x =
                    VarId::new(name).map_err(|_| XregexError::Syntax { pos: at, msg: "bad variable name".into() })?;
                if matches!(self.peek_raw(), Some((_, '{'))) {
                    self.pos += 1;
                    let body = self.alternation()?;
                    if self.peek() != Some('}') {
                        return self.err("expected '}'");
                    }
                    self.pos += 1;
                    Ok(Xregex::def(&x, body))
                } else {
                    Ok(Xregex::Ref(x))
                }
            }
            '\\' => {
                let Some((_, e)) = self.peek_raw() else { return self.err("dangling escape") };
                self.pos += 1;
                match e {
                    'e' => Ok(Xregex::Epsilon),
                    '0' => Ok(Xregex::Empty),
                    other => self.terminal(other, at),
                }
            }
            ')' | '|' | '+' | '*' | '{' | '}' | '%' => {
                Err(XregexError::Syntax { pos: at, msg: format!("unexpected {c:?}") })
            }
            other => self.terminal(other, at),
        }
    }

    fn terminal(&self, c: char, at: usize) -> Result<Xregex, XregexError> {
        if self.alphabet.contains(c) || c == SEPARATOR {
            Ok(Xregex::Term(c))
        } else {
            Err(XregexError::UnknownSymbol { pos: at, symbol: c })
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Top,
    AltRight,
    Factor,
    Postfix,
}

/// Canonical text; `parse_xregex(render_xregex(a))` rebuilds `a`.
pub fn render_xregex(ast: &Xregex) -> String {
    let mut out = String::new();
    render_into(ast, Ctx::Top, &mut out);
    out
}

impl fmt::Display for Xregex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_xregex(self))
    }
}

fn render_into(e: &Xregex, ctx: Ctx, out: &mut String) {
    if let Some(body) = e.as_star() {
        render_into(body, Ctx::Postfix, out);
        out.push('*');
        return;
    }
    match e {
        Xregex::Term(c) => {
            if METACHARS.contains(c) || c.is_whitespace() {
                out.push('\\');
            }
            out.push(*c);
        }
        Xregex::Epsilon => out.push_str("\\e"),
        Xregex::Empty => out.push_str("\\0"),
        Xregex::Ref(x) => {
            out.push('$');
            out.push_str(x.as_str());
        }
        Xregex::Def(x, body) => {
            out.push('$');
            out.push_str(x.as_str());
            out.push('{');
            render_into(body, Ctx::Top, out);
            out.push('}');
        }
        Xregex::Plus(c) => {
            render_into(c, Ctx::Postfix, out);
            out.push('+');
        }
        Xregex::Concat(cs) => {
            let paren = matches!(ctx, Ctx::Factor | Ctx::Postfix);
            if paren {
                out.push('(');
            }
            let mut prev_ref = false;
            for c in cs {
                let mut piece = String::new();
                render_into(c, Ctx::Factor, &mut piece);
                if prev_ref && piece.chars().next().is_some_and(is_ident_char) {
                    out.push(' ');
                }
                out.push_str(&piece);
                prev_ref = matches!(c, Xregex::Ref(_));
            }
            if paren {
                out.push(')');
            }
        }
        Xregex::Alt(l, r) => {
            let paren = ctx != Ctx::Top;
            if paren {
                out.push('(');
            }
            render_into(l, Ctx::Top, out);
            out.push('|');
            render_into(r, Ctx::AltRight, out);
            if paren {
                out.push(')');
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Ref-regex and sequentiality

/// Replaces every definition `x{β}` by `⊢x β ⊣x`; references become symbols.
pub fn to_ref_regex(ast: &Xregex) -> Re<RefSymbol> {
    match ast {
        Xregex::Term(c) => Re::Sym(RefSymbol::Term(*c)),
        Xregex::Epsilon => Re::Eps,
        Xregex::Empty => Re::Empty,
        Xregex::Concat(cs) => Re::Concat(cs.iter().map(to_ref_regex).collect()),
        Xregex::Alt(l, r) => Re::Alt(Box::new(to_ref_regex(l)), Box::new(to_ref_regex(r))),
        Xregex::Plus(c) => Re::Plus(Box::new(to_ref_regex(c))),
        Xregex::Def(x, body) => Re::Concat(vec![
            Re::Sym(RefSymbol::Open(x.clone())),
            to_ref_regex(body),
            Re::Sym(RefSymbol::Close(x.clone())),
        ]),
        Xregex::Ref(x) => Re::Sym(RefSymbol::Ref(x.clone())),
    }
}

/// ε-free automaton for the ref-language of `ast`.
pub fn ref_automaton(ast: &Xregex) -> Automaton<RefSymbol> {
    thompson(&to_ref_regex(ast)).remove_epsilon()
}

/// True iff no word of the ref-regex opens the same variable twice.
pub fn is_sequential(ast: &Xregex) -> bool {
    first_repeated_definition(ast).is_none()
}

/// A variable that some word of the ref-regex opens twice.
pub fn first_repeated_definition(ast: &Xregex) -> Option<VarId> {
    let defined = ast.defined_vars();
    if defined.is_empty() {
        return None;
    }
    let nfa = ref_automaton(ast);
    defined.into_iter().find(|x| opens_twice(&nfa, x))
}

/// Product of the automaton with a saturating counter of `⊢x`, searched for an
/// accepting state with count 2.
fn opens_twice(nfa: &Automaton<RefSymbol>, x: &VarId) -> bool {
    let open = RefSymbol::Open(x.clone());
    let n = nfa.num_states();
    let mut seen = vec![[false; 3]; n];
    let mut stack = vec![(nfa.start, 0usize)];
    seen[nfa.start][0] = true;
    while let Some((q, c)) = stack.pop() {
        if c == 2 && nfa.finals[q] {
            return true;
        }
        for (l, t) in &nfa.trans[q] {
            let nc = if l.as_ref() == Some(&open) { (c + 1).min(2) } else { c };
            if !seen[*t][nc] {
                seen[*t][nc] = true;
                stack.push((*t, nc));
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Conjunctive xregex, precedence

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConjunctiveError {
    #[error("variable {0} can be defined more than once")]
    NotSequential(VarId),
    #[error("cyclic variable dependencies: {}", render_cycle(.0))]
    Cyclic(Vec<VarId>),
    #[error("component {index}: {source}")]
    Component { index: usize, source: XregexError },
    #[error("a conjunctive xregex needs at least one component")]
    NoComponents,
}

fn render_cycle(c: &[VarId]) -> String {
    c.iter().map(VarId::to_string).collect::<Vec<_>>().join(" -> ")
}

/// Ordered tuple of xregex over one alphabet whose concatenation is
/// sequential and acyclic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConjunctiveXregex {
    components: Vec<Xregex>,
    alphabet: Alphabet,
}

impl ConjunctiveXregex {
    pub fn components(&self) -> &[Xregex] {
        &self.components
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn size(&self) -> usize {
        self.components.iter().map(Xregex::size).sum()
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.components.iter().flat_map(vars_of).collect()
    }

    pub fn defined_vars(&self) -> BTreeSet<VarId> {
        self.components.iter().flat_map(Xregex::defined_vars).collect()
    }

    /// Variables in order of first occurrence across the components.
    pub fn vars_in_order(&self) -> Vec<VarId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for c in &self.components {
            for x in c.vars_in_order() {
                if seen.insert(x.clone()) {
                    out.push(x);
                }
            }
        }
        out
    }

    /// Index of the component holding the definitions of `x`, if any.
    pub fn defining_component(&self, x: &VarId) -> Option<usize> {
        self.components.iter().position(|c| c.defined_vars().contains(x))
    }

    /// Skips validation; for pipeline outputs that are valid by construction.
    pub(crate) fn from_parts_unchecked(components: Vec<Xregex>, alphabet: Alphabet) -> Self {
        ConjunctiveXregex { components, alphabet }
    }

    pub fn concatenation(&self) -> Xregex {
        Xregex::concat(self.components.clone())
    }

    pub fn render(&self) -> Vec<String> {
        self.components.iter().map(render_xregex).collect()
    }
}

pub fn validate_conjunctive(
    components: Vec<Xregex>,
    alphabet: &Alphabet,
) -> Result<ConjunctiveXregex, ConjunctiveError> {
    if components.is_empty() {
        return Err(ConjunctiveError::NoComponents);
    }
    for (index, c) in components.iter().enumerate() {
        c.check_well_formed().map_err(|source| ConjunctiveError::Component { index, source })?;
        if let Some(&symbol) = c.terminals().iter().find(|&&t| !alphabet.contains(t)) {
            return Err(ConjunctiveError::Component { index, source: XregexError::UnknownSymbol { pos: 0, symbol } });
        }
    }
    let whole = Xregex::concat(components.clone());
    if let Some(x) = first_repeated_definition(&whole) {
        return Err(ConjunctiveError::NotSequential(x));
    }
    let cx = ConjunctiveXregex { components, alphabet: alphabet.clone() };
    if let Some(cycle) = precedence_graph(&cx).find_cycle() {
        return Err(ConjunctiveError::Cyclic(cycle));
    }
    Ok(cx)
}

/// Arcs `x → y` whenever a definition of `y` contains a reference or
/// definition of `x`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PrecedenceGraph {
    pub nodes: BTreeSet<VarId>,
    pub arcs: BTreeSet<(VarId, VarId)>,
}

pub fn precedence_graph(cx: &ConjunctiveXregex) -> PrecedenceGraph {
    precedence_of(cx.components())
}

pub(crate) fn precedence_of(components: &[Xregex]) -> PrecedenceGraph {
    let mut g = PrecedenceGraph::default();
    for c in components {
        g.nodes.extend(vars_of(c));
        c.visit(&mut |e| {
            if let Xregex::Def(y, body) = e {
                for x in vars_of(body) {
                    g.arcs.insert((x, y.clone()));
                }
            }
        });
    }
    g
}

pub fn is_acyclic(cx: &ConjunctiveXregex) -> bool {
    precedence_graph(cx).find_cycle().is_none()
}

impl PrecedenceGraph {
    fn successors(&self) -> BTreeMap<&VarId, Vec<&VarId>> {
        let mut succ: BTreeMap<&VarId, Vec<&VarId>> = self.nodes.iter().map(|n| (n, Vec::new())).collect();
        for (a, b) in &self.arcs {
            succ.entry(a).or_default().push(b);
        }
        succ
    }

    /// A directed cycle, listed from its first node and closed by repeating it.
    pub fn find_cycle(&self) -> Option<Vec<VarId>> {
        let succ = self.successors();
        let mut state: BTreeMap<&VarId, u8> = BTreeMap::new();
        fn dfs<'a>(
            v: &'a VarId,
            succ: &BTreeMap<&'a VarId, Vec<&'a VarId>>,
            state: &mut BTreeMap<&'a VarId, u8>,
            path: &mut Vec<&'a VarId>,
        ) -> Option<Vec<VarId>> {
            state.insert(v, 1);
            path.push(v);
            for &w in succ.get(v).map(Vec::as_slice).unwrap_or(&[]) {
                match state.get(w).copied().unwrap_or(0) {
                    1 => {
                        let start = path.iter().position(|&p| p == w).unwrap();
                        let mut cycle: Vec<VarId> = path[start..].iter().map(|&p| p.clone()).collect();
                        cycle.push(w.clone());
                        return Some(cycle);
                    }
                    0 => {
                        if let Some(c) = dfs(w, succ, state, path) {
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
        for v in &self.nodes {
            if state.get(v).copied().unwrap_or(0) == 0 {
                if let Some(c) = dfs(v, &succ, &mut state, &mut Vec::new()) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Topological order, least available node first; `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<VarId>> {
        self.topological_order_by(|x| x.clone())
    }

    pub fn topological_order_by<K: Ord>(&self, key: impl Fn(&VarId) -> K) -> Option<Vec<VarId>> {
        let mut indeg: BTreeMap<&VarId, usize> = self.nodes.iter().map(|n| (n, 0)).collect();
        for (_, b) in &self.arcs {
            *indeg.entry(b).or_default() += 1;
        }
        let succ = self.successors();
        let mut ready: BTreeSet<(K, &VarId)> =
            indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| (key(n), n)).collect();
        let mut out = Vec::new();
        while let Some(first) = ready.pop_first() {
            let v = first.1;
            out.push(v.clone());
            for &w in succ.get(v).map(Vec::as_slice).unwrap_or(&[]) {
                let d = indeg.get_mut(w).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert((key(w), w));
                }
            }
        }
        (out.len() == indeg.len()).then_some(out)
    }
}

// ---------------------------------------------------------------------------
// Fragments

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FragmentClassification {
    pub vstar_free: bool,
    pub valt_free: bool,
    pub variable_simple: bool,
    pub simple: bool,
    pub normal_form: bool,
    pub flat_vars: BTreeSet<VarId>,
    pub all_flat: bool,
}

fn vstar_free(e: &Xregex) -> bool {
    match e {
        Xregex::Plus(c) => !c.has_vars(),
        _ => e.children().into_iter().all(vstar_free),
    }
}

fn valt_free(e: &Xregex) -> bool {
    if let Some(body) = e.as_star() {
        return valt_free(body);
    }
    match e {
        Xregex::Alt(l, r) => !l.has_vars() && !r.has_vars(),
        _ => e.children().into_iter().all(valt_free),
    }
}

/// Classical body or a single reference.
pub fn is_basic_body(body: &Xregex) -> bool {
    body.is_classical() || matches!(body, Xregex::Ref(_))
}

fn all_defs_basic(e: &Xregex) -> bool {
    let mut ok = true;
    e.visit(&mut |n| {
        if let Xregex::Def(_, body) = n {
            ok &= is_basic_body(body);
        }
    });
    ok
}

/// Simple single xregex: variable-simple with basic definitions.
pub fn is_simple(e: &Xregex) -> bool {
    vstar_free(e) && valt_free(e) && all_defs_basic(e)
}

/// Splits top-level alternations whose branches mention variables.
pub fn top_alternatives(e: &Xregex) -> Vec<&Xregex> {
    match e {
        Xregex::Alt(l, r) if e.has_vars() && e.as_star().is_none() => {
            let mut out = top_alternatives(l);
            out.extend(top_alternatives(r));
            out
        }
        _ => vec![e],
    }
}

pub fn classify(cx: &ConjunctiveXregex) -> FragmentClassification {
    classify_components(cx.components())
}

pub fn classify_components(components: &[Xregex]) -> FragmentClassification {
    let vstar = components.iter().all(vstar_free);
    let valt = components.iter().all(valt_free);
    let variable_simple = vstar && valt;
    let simple = variable_simple && components.iter().all(all_defs_basic);
    let normal_form = components.iter().all(|c| top_alternatives(c).into_iter().all(is_simple));

    let mut basic: BTreeMap<VarId, bool> = BTreeMap::new();
    let mut referenced_in_def: BTreeSet<VarId> = BTreeSet::new();
    let mut all = BTreeSet::new();
    for c in components {
        all.extend(vars_of(c));
        c.visit(&mut |n| {
            if let Xregex::Def(x, body) = n {
                *basic.entry(x.clone()).or_insert(true) &= is_basic_body(body);
                referenced_in_def.extend(body.referenced_vars());
            }
        });
    }
    let flat_vars: BTreeSet<VarId> = all
        .iter()
        .filter(|x| basic.get(*x).copied().unwrap_or(true) || !referenced_in_def.contains(*x))
        .cloned()
        .collect();
    let all_flat = flat_vars.len() == all.len();
    FragmentClassification {
        vstar_free: vstar,
        valt_free: valt,
        variable_simple,
        simple,
        normal_form,
        flat_vars,
        all_flat,
    }
}
