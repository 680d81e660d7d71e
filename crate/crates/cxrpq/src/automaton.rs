//! Classical regular expressions and finite automata over an arbitrary symbol type.
//!
//! The same machinery serves plain terminal regexes (`S = char`) and the
//! extended alphabet of ref-words, where definitions become bracket symbols.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;

/// A variable-free regular expression over symbols `S`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Re<S> {
    Sym(S),
    Eps,
    Empty,
    Concat(Vec<Re<S>>),
    Alt(Box<Re<S>>, Box<Re<S>>),
    Plus(Box<Re<S>>),
}

impl<S> Re<S> {
    pub fn size(&self) -> usize {
        match self {
            Re::Sym(_) | Re::Eps | Re::Empty => 1,
            Re::Concat(cs) => 1 + cs.iter().map(Re::size).sum::<usize>(),
            Re::Alt(l, r) => 1 + l.size() + r.size(),
            Re::Plus(c) => 1 + c.size(),
        }
    }
}

impl<S: fmt::Display> fmt::Display for Re<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go<S: fmt::Display>(e: &Re<S>, f: &mut fmt::Formatter<'_>, tight: bool) -> fmt::Result {
            match e {
                Re::Sym(s) => write!(f, "{s}"),
                Re::Eps => write!(f, "ε"),
                Re::Empty => write!(f, "∅"),
                Re::Concat(cs) => {
                    if tight {
                        write!(f, "(")?;
                    }
                    for c in cs {
                        go(c, f, true)?;
                    }
                    if tight {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
                Re::Alt(l, r) => {
                    write!(f, "(")?;
                    go(l, f, false)?;
                    write!(f, "|")?;
                    go(r, f, false)?;
                    write!(f, ")")
                }
                Re::Plus(c) => {
                    go(c, f, true)?;
                    write!(f, "+")
                }
            }
        }
        go(self, f, false)
    }
}

/// Nondeterministic automaton; `None` labels are ε-transitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton<S> {
    pub start: usize,
    pub finals: Vec<bool>,
    pub trans: Vec<Vec<(Option<S>, usize)>>,
}

impl<S: Clone + Eq + Hash + Ord> Automaton<S> {
    pub fn new(states: usize, start: usize) -> Self {
        Automaton { start, finals: vec![false; states], trans: vec![Vec::new(); states] }
    }

    pub fn num_states(&self) -> usize {
        self.trans.len()
    }

    pub fn add_state(&mut self) -> usize {
        self.trans.push(Vec::new());
        self.finals.push(false);
        self.trans.len() - 1
    }

    pub fn add_transition(&mut self, from: usize, label: Option<S>, to: usize) {
        self.trans[from].push((label, to));
    }

    /// The automaton accepting nothing.
    pub fn empty() -> Self {
        Automaton::new(1, 0)
    }

    pub fn has_epsilon(&self) -> bool {
        self.trans.iter().flatten().any(|(l, _)| l.is_none())
    }

    /// Symbols occurring on transitions, sorted.
    pub fn symbols(&self) -> Vec<S> {
        let set: BTreeSet<S> = self.trans.iter().flatten().filter_map(|(l, _)| l.clone()).collect();
        set.into_iter().collect()
    }

    pub fn closure(&self, seeds: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(q) = stack.pop() {
            if seen.insert(q) {
                for (l, t) in &self.trans[q] {
                    if l.is_none() && !seen.contains(t) {
                        stack.push(*t);
                    }
                }
            }
        }
        seen
    }

    pub fn step(&self, from: &BTreeSet<usize>, sym: &S) -> BTreeSet<usize> {
        let mut next = Vec::new();
        for &q in from {
            for (l, t) in &self.trans[q] {
                if l.as_ref() == Some(sym) {
                    next.push(*t);
                }
            }
        }
        self.closure(next)
    }

    pub fn accepts(&self, word: &[S]) -> bool {
        let mut cur = self.closure([self.start]);
        for s in word {
            if cur.is_empty() {
                return false;
            }
            cur = self.step(&cur, s);
        }
        cur.iter().any(|&q| self.finals[q])
    }

    /// Equivalent automaton without ε-transitions, restricted to reachable states.
    pub fn remove_epsilon(&self) -> Self {
        if !self.has_epsilon() {
            return self.trim_reachable();
        }
        let n = self.num_states();
        let closures: Vec<BTreeSet<usize>> = (0..n).map(|q| self.closure([q])).collect();
        let mut out = Automaton::new(n, self.start);
        for (q, closure) in closures.iter().enumerate() {
            out.finals[q] = closure.iter().any(|&p| self.finals[p]);
            let mut seen = HashSet::new();
            for &p in closure {
                for (l, t) in &self.trans[p] {
                    if let Some(s) = l {
                        if seen.insert((s.clone(), *t)) {
                            out.trans[q].push((Some(s.clone()), *t));
                        }
                    }
                }
            }
        }
        out.trim_reachable()
    }

    fn trim_reachable(&self) -> Self {
        let mut index = vec![usize::MAX; self.num_states()];
        let mut order = vec![self.start];
        index[self.start] = 0;
        let mut i = 0;
        while i < order.len() {
            let q = order[i];
            i += 1;
            for (_, t) in &self.trans[q] {
                if index[*t] == usize::MAX {
                    index[*t] = order.len();
                    order.push(*t);
                }
            }
        }
        let mut out = Automaton::new(order.len(), 0);
        for (new, &old) in order.iter().enumerate() {
            out.finals[new] = self.finals[old];
            out.trans[new] = self.trans[old].iter().map(|(l, t)| (l.clone(), index[*t])).collect();
        }
        out
    }

    /// Accepts the concatenation of the two languages.
    pub fn concat(&self, other: &Automaton<S>) -> Self {
        let off = self.num_states();
        let mut out = self.clone();
        out.finals = vec![false; off];
        for q in 0..other.num_states() {
            out.add_state();
            out.finals[off + q] = other.finals[q];
            out.trans[off + q] = other.trans[q].iter().map(|(l, t)| (l.clone(), off + t)).collect();
        }
        for q in (0..off).filter(|&q| self.finals[q]) {
            out.add_transition(q, None, off + other.start);
        }
        out
    }

    /// Restriction to words of length at most `k`.
    pub fn truncate(&self, k: usize) -> Self {
        let a = self.remove_epsilon();
        let n = a.num_states();
        let id = |q: usize, i: usize| i * n + q;
        let mut out = Automaton::new(n * (k + 1), id(a.start, 0));
        for i in 0..=k {
            for q in 0..n {
                out.finals[id(q, i)] = a.finals[q];
                if i < k {
                    for (l, t) in &a.trans[q] {
                        out.trans[id(q, i)].push((l.clone(), id(*t, i + 1)));
                    }
                }
            }
        }
        out.trim_reachable()
    }

    /// Subset construction over the reachable subsets, or `None` once more
    /// than `max_states` subsets appear.
    pub fn determinize(&self, max_states: usize) -> Option<Self> {
        let symbols = self.symbols();
        let start = self.closure([self.start]);
        let mut ids: HashMap<BTreeSet<usize>, usize> = HashMap::from([(start.clone(), 0)]);
        let mut subsets = vec![start];
        let mut out = Automaton::new(1, 0);
        let mut i = 0;
        while i < subsets.len() {
            out.finals[i] = subsets[i].iter().any(|&q| self.finals[q]);
            for sym in &symbols {
                let next = self.step(&subsets[i], sym);
                if next.is_empty() {
                    continue;
                }
                let id = match ids.get(&next) {
                    Some(&id) => id,
                    None => {
                        if subsets.len() == max_states {
                            return None;
                        }
                        let id = out.add_state();
                        ids.insert(next.clone(), id);
                        subsets.push(next);
                        id
                    }
                };
                out.trans[i].push((Some(sym.clone()), id));
            }
            i += 1;
        }
        Some(out)
    }

    /// Product automaton of ε-free automata; accepts the intersection.
    pub fn intersect(parts: &[Automaton<S>]) -> Automaton<S> {
        assert!(!parts.is_empty());
        let parts: Vec<Automaton<S>> = parts.iter().map(Automaton::remove_epsilon).collect();
        let start: Vec<usize> = parts.iter().map(|a| a.start).collect();
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut tuples = vec![start.clone()];
        ids.insert(start, 0);
        let mut out = Automaton::new(1, 0);
        let mut i = 0;
        while i < tuples.len() {
            let tuple = tuples[i].clone();
            out.finals[i] = tuple.iter().zip(&parts).all(|(&q, a)| a.finals[q]);
            for sym in successors_symbols(&parts, &tuple) {
                for next in tuple_successors(&parts, &tuple, &sym) {
                    let id = match ids.get(&next) {
                        Some(&id) => id,
                        None => {
                            let id = out.add_state();
                            ids.insert(next.clone(), id);
                            tuples.push(next);
                            id
                        }
                    };
                    out.trans[i].push((Some(sym.clone()), id));
                }
            }
            i += 1;
        }
        out
    }

    /// A shortest word accepted by every automaton, if the intersection is nonempty.
    pub fn intersection_witness(parts: &[Automaton<S>]) -> Option<Vec<S>> {
        assert!(!parts.is_empty());
        let parts: Vec<Automaton<S>> = parts.iter().map(Automaton::remove_epsilon).collect();
        let start: Vec<usize> = parts.iter().map(|a| a.start).collect();
        let mut parent: HashMap<Vec<usize>, Option<(Vec<usize>, S)>> = HashMap::new();
        parent.insert(start.clone(), None);
        let mut queue = VecDeque::from([start]);
        while let Some(tuple) = queue.pop_front() {
            if tuple.iter().zip(&parts).all(|(&q, a)| a.finals[q]) {
                let mut word = Vec::new();
                let mut cur = tuple;
                while let Some(Some((prev, s))) = parent.get(&cur).cloned() {
                    word.push(s);
                    cur = prev;
                }
                word.reverse();
                return Some(word);
            }
            for sym in successors_symbols(&parts, &tuple) {
                for next in tuple_successors(&parts, &tuple, &sym) {
                    if !parent.contains_key(&next) {
                        parent.insert(next.clone(), Some((tuple.clone(), sym.clone())));
                        queue.push_back(next);
                    }
                }
            }
        }
        None
    }

    /// All accepted words of length at most `max_len`, in length-lexicographic
    /// order. `keep` is consulted on every prefix; returning false prunes the
    /// prefix and all its extensions.
    pub fn words_up_to(&self, max_len: usize, mut keep: impl FnMut(&[S]) -> bool) -> Vec<Vec<S>> {
        let symbols = self.symbols();
        let mut out = Vec::new();
        let start = self.closure([self.start]);
        if !keep(&[]) {
            return out;
        }
        let mut layer: Vec<(Vec<S>, BTreeSet<usize>)> = vec![(Vec::new(), start)];
        for len in 0..=max_len {
            let mut next_layer = Vec::new();
            for (word, set) in layer {
                if set.iter().any(|&q| self.finals[q]) {
                    out.push(word.clone());
                }
                if len == max_len {
                    continue;
                }
                for s in &symbols {
                    let next = self.step(&set, s);
                    if next.is_empty() {
                        continue;
                    }
                    let mut w = word.clone();
                    w.push(s.clone());
                    if keep(&w) {
                        next_layer.push((w, next));
                    }
                }
            }
            layer = next_layer;
            if layer.is_empty() {
                break;
            }
        }
        out
    }
}

fn successors_symbols<S: Clone + Ord>(parts: &[Automaton<S>], tuple: &[usize]) -> Vec<S> {
    let mut common: Option<BTreeSet<S>> = None;
    for (a, &q) in parts.iter().zip(tuple) {
        let here: BTreeSet<S> = a.trans[q].iter().filter_map(|(l, _)| l.clone()).collect();
        common = Some(match common {
            None => here,
            Some(c) => c.intersection(&here).cloned().collect(),
        });
    }
    common.unwrap_or_default().into_iter().collect()
}

fn tuple_successors<S: Clone + Eq>(parts: &[Automaton<S>], tuple: &[usize], sym: &S) -> Vec<Vec<usize>> {
    let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
    for (a, &q) in parts.iter().zip(tuple) {
        let targets: Vec<usize> = a.trans[q].iter().filter(|(l, _)| l.as_ref() == Some(sym)).map(|(_, t)| *t).collect();
        let mut grown = Vec::with_capacity(acc.len() * targets.len());
        for prefix in &acc {
            for &t in &targets {
                let mut p = prefix.clone();
                p.push(t);
                grown.push(p);
            }
        }
        acc = grown;
    }
    let set: BTreeSet<Vec<usize>> = acc.into_iter().collect();
    set.into_iter().collect()
}

/// Thompson construction: one start, one final state, ε-transitions.
pub fn thompson<S: Clone + Eq + Hash + Ord>(re: &Re<S>) -> Automaton<S> {
    let mut a = Automaton::new(0, 0);
    let (s, f) = build(&mut a, re);
    a.start = s;
    a.finals[f] = true;
    a
}

fn build<S: Clone + Eq + Hash + Ord>(a: &mut Automaton<S>, re: &Re<S>) -> (usize, usize) {
    match re {
        Re::Sym(x) => {
            let s = a.add_state();
            let f = a.add_state();
            a.add_transition(s, Some(x.clone()), f);
            (s, f)
        }
        Re::Eps => {
            let s = a.add_state();
            let f = a.add_state();
            a.add_transition(s, None, f);
            (s, f)
        }
        Re::Empty => (a.add_state(), a.add_state()),
        Re::Concat(cs) => {
            let mut ends: Option<(usize, usize)> = None;
            for c in cs {
                let (s, f) = build(a, c);
                ends = Some(match ends {
                    None => (s, f),
                    Some((s0, f0)) => {
                        a.add_transition(f0, None, s);
                        (s0, f)
                    }
                });
            }
            ends.unwrap_or_else(|| build(a, &Re::Eps))
        }
        Re::Alt(l, r) => {
            let s = a.add_state();
            let (ls, lf) = build(a, l);
            let (rs, rf) = build(a, r);
            let f = a.add_state();
            a.add_transition(s, None, ls);
            a.add_transition(s, None, rs);
            a.add_transition(lf, None, f);
            a.add_transition(rf, None, f);
            (s, f)
        }
        Re::Plus(c) => {
            let s = a.add_state();
            let (cs, cf) = build(a, c);
            let f = a.add_state();
            a.add_transition(s, None, cs);
            a.add_transition(cf, None, cs);
            a.add_transition(cf, None, f);
            (s, f)
        }
    }
}
