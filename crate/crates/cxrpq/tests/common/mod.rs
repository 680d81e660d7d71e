//! Seeded instance generators and small independent oracles shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cxrpq::graphdb::{Edge, Nfa};
use cxrpq::reductions::HittingSet;
use cxrpq::refwords::enumerate_refwords;
use cxrpq::xregex::classify;
use cxrpq::{Alphabet, ConjunctiveXregex, GraphDb, Query, RefSymbol, VarId, VariableMapping, Xregex, SEPARATOR};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_QUERY_SIZE: usize = 12;
const VARS: [&str; 3] = ["x", "y", "z"];
const NODE_VARS: [&str; 3] = ["u", "v", "w"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fragment {
    Simple,
    Vsf,
    General,
}

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn alphabet(&mut self) -> Alphabet {
        let n = self.rng.gen_range(1..=3);
        Alphabet::parse(&"abc"[..n]).unwrap()
    }

    fn sym(&mut self, sigma: &Alphabet) -> char {
        *sigma.symbols().choose(&mut self.rng).unwrap()
    }

    fn var(&mut self) -> VarId {
        VarId::new(*VARS.choose(&mut self.rng).unwrap()).unwrap()
    }

    /// Up to 4 nodes, up to 6 arcs, every node declared.
    pub fn db(&mut self, sigma: &Alphabet) -> GraphDb {
        let mut db = GraphDb::with_alphabet(sigma.clone());
        let n = self.rng.gen_range(1..=4);
        let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        for name in &names {
            db.add_node(name);
        }
        for _ in 0..self.rng.gen_range(0..=6) {
            let s = names.choose(&mut self.rng).unwrap().clone();
            let t = names.choose(&mut self.rng).unwrap().clone();
            let c = self.sym(sigma);
            db.add_arc(&s, c, &t);
        }
        db
    }

    pub fn classical(&mut self, sigma: &Alphabet, depth: usize) -> Xregex {
        let roll = if depth == 0 { 0 } else { self.rng.gen_range(0..10) };
        match roll {
            0..=4 => Xregex::Term(self.sym(sigma)),
            5 => Xregex::Epsilon,
            6 => Xregex::concat(vec![self.classical(sigma, depth - 1), self.classical(sigma, depth - 1)]),
            7 => Xregex::alt(self.classical(sigma, depth - 1), self.classical(sigma, depth - 1)),
            8 => Xregex::plus(self.classical(sigma, depth - 1)),
            _ => Xregex::star(self.classical(sigma, depth - 1)),
        }
    }

    /// A concatenation of factors: classical pieces, definitions with a
    /// basic body, and references.
    fn simple_label(&mut self, sigma: &Alphabet) -> Xregex {
        let n = self.rng.gen_range(1..=3);
        let mut parts = Vec::new();
        for _ in 0..n {
            let f = match self.rng.gen_range(0..6) {
                0 | 1 => self.classical(sigma, 2),
                2 | 3 => {
                    let body = if self.rng.gen_bool(0.2) { Xregex::Ref(self.var()) } else { self.classical(sigma, 2) };
                    Xregex::def(&self.var(), body)
                }
                _ => Xregex::Ref(self.var()),
            };
            parts.push(f);
        }
        Xregex::concat(parts)
    }

    fn any_label(&mut self, sigma: &Alphabet, depth: usize, star_vars: bool) -> Xregex {
        let roll = if depth == 0 { self.rng.gen_range(0..3) } else { self.rng.gen_range(0..10) };
        match roll {
            0 => Xregex::Term(self.sym(sigma)),
            1 => Xregex::Ref(self.var()),
            2 if depth == 0 => Xregex::Epsilon,
            2 | 3 => Xregex::def(&self.var(), self.any_label(sigma, depth - 1, star_vars)),
            4 | 5 => Xregex::concat(vec![
                self.any_label(sigma, depth - 1, star_vars),
                self.any_label(sigma, depth - 1, star_vars),
            ]),
            6 | 7 => {
                Xregex::alt(self.any_label(sigma, depth - 1, star_vars), self.any_label(sigma, depth - 1, star_vars))
            }
            _ => {
                let body =
                    if star_vars { self.any_label(sigma, depth - 1, true) } else { self.classical(sigma, depth - 1) };
                if self.rng.gen_bool(0.5) {
                    Xregex::star(body)
                } else {
                    Xregex::plus(body)
                }
            }
        }
    }

    pub fn label(&mut self, sigma: &Alphabet, fragment: Fragment) -> Xregex {
        match fragment {
            Fragment::Simple => self.simple_label(sigma),
            Fragment::Vsf => self.any_label(sigma, 3, false),
            Fragment::General => self.any_label(sigma, 3, true),
        }
    }

    /// A valid query of the requested fragment with at most two edges and
    /// total label size at most [`MAX_QUERY_SIZE`].
    pub fn query(&mut self, sigma: &Alphabet, fragment: Fragment) -> Query {
        loop {
            let n = self.rng.gen_range(1..=2);
            let mut edges = Vec::new();
            for _ in 0..n {
                let src = NODE_VARS.choose(&mut self.rng).unwrap().to_string();
                let dst = NODE_VARS.choose(&mut self.rng).unwrap().to_string();
                edges.push(Edge { src, dst, label: self.label(sigma, fragment) });
            }
            let size: usize = edges.iter().map(|e| e.label.size()).sum();
            if size > MAX_QUERY_SIZE {
                continue;
            }
            let mut nodes: Vec<String> = Vec::new();
            for e in &edges {
                for v in [&e.src, &e.dst] {
                    if !nodes.contains(v) {
                        nodes.push(v.clone());
                    }
                }
            }
            let arity = self.rng.gen_range(0..=nodes.len().min(2));
            let output: Vec<String> = nodes.choose_multiple(&mut self.rng, arity).cloned().collect();
            let Ok(q) = Query::new(edges, output, sigma.clone()) else { continue };
            let Ok(cx) = q.conjunctive() else { continue };
            let c = classify(&cx);
            let fits = match fragment {
                Fragment::Simple => c.simple,
                Fragment::Vsf => c.vstar_free && cx.vars().len() <= 3,
                Fragment::General => true,
            };
            if fits {
                return q;
            }
        }
    }

    /// Over {a, b}, one accepting state, no ε-transitions.
    pub fn nfa(&mut self) -> Nfa {
        let n = self.rng.gen_range(1..=3);
        let mut nfa = Nfa::new(n, 0);
        nfa.finals[self.rng.gen_range(0..n)] = true;
        for p in 0..n {
            for c in ['a', 'b'] {
                for q in 0..n {
                    if self.rng.gen_bool(0.35) {
                        nfa.add_transition(p, Some(c), q);
                    }
                }
            }
        }
        nfa
    }

    /// A CRPQ with 1..=`max_edges` classical edges over u, v, w.
    pub fn classical_query(&mut self, sigma: &Alphabet, max_edges: usize) -> Query {
        let n = self.rng.gen_range(1..=max_edges);
        let edges: Vec<Edge> = (0..n)
            .map(|_| Edge {
                src: NODE_VARS[self.rng.gen_range(0..3)].into(),
                dst: NODE_VARS[self.rng.gen_range(0..3)].into(),
                label: self.classical(sigma, 2),
            })
            .collect();
        let mut vars: Vec<String> = Vec::new();
        for e in &edges {
            for v in [&e.src, &e.dst] {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        let k = self.rng.gen_range(0..=vars.len());
        Query::new(edges, vars[..k].to_vec(), sigma.clone()).unwrap()
    }

    /// Arcs only go from lower to higher node index.
    pub fn dag(&mut self, sigma: &Alphabet) -> GraphDb {
        let mut db = GraphDb::with_alphabet(sigma.clone());
        let n = self.rng.gen_range(1..=4);
        for i in 0..n {
            db.add_node(&format!("n{i}"));
        }
        for _ in 0..self.rng.gen_range(0..=5) {
            let s = self.rng.gen_range(0..n);
            let t = self.rng.gen_range(0..n);
            if s < t {
                let c = sigma.symbols()[self.rng.gen_range(0..sigma.len())];
                db.add_arc(&format!("n{s}"), c, &format!("n{t}"));
            }
        }
        db
    }

    pub fn hitting_set(&mut self) -> HittingSet {
        let universe = self.rng.gen_range(1..=4);
        let m = self.rng.gen_range(1..=3);
        let mut sets = Vec::new();
        for _ in 0..m {
            let mut s = BTreeSet::new();
            while s.is_empty() {
                for z in 1..=universe {
                    if self.rng.gen_bool(0.4) {
                        s.insert(z);
                    }
                }
            }
            sets.push(s);
        }
        HittingSet::new(universe, sets, self.rng.gen_range(0..=3)).unwrap()
    }
}

pub fn word(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// Backtracking membership test over the syntax tree; classical input only.
pub fn naive_match(e: &Xregex, w: &[char]) -> bool {
    ends(e, w, 0).contains(&w.len())
}

fn ends(e: &Xregex, w: &[char], at: usize) -> BTreeSet<usize> {
    match e {
        Xregex::Term(c) => (w.get(at) == Some(c)).then_some(at + 1).into_iter().collect(),
        Xregex::Epsilon => [at].into(),
        Xregex::Empty => BTreeSet::new(),
        Xregex::Concat(cs) => {
            cs.iter().fold([at].into(), |acc: BTreeSet<usize>, c| acc.into_iter().flat_map(|p| ends(c, w, p)).collect())
        }
        Xregex::Alt(l, r) => ends(l, w, at).union(&ends(r, w, at)).copied().collect(),
        Xregex::Plus(c) => {
            let mut seen = BTreeSet::new();
            let mut frontier = ends(c, w, at);
            while !frontier.is_empty() {
                let fresh: BTreeSet<usize> = frontier.difference(&seen).copied().collect();
                seen.extend(fresh.iter().copied());
                frontier = fresh.into_iter().flat_map(|p| ends(c, w, p)).filter(|p| !seen.contains(p)).collect();
            }
            seen
        }
        Xregex::Def(..) | Xregex::Ref(_) => panic!("naive_match is for classical expressions"),
    }
}

/// Every word over `sigma` of length at most `n`.
pub fn all_words(sigma: &[char], n: usize) -> Vec<Vec<char>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &layer {
            for &c in sigma {
                let mut v: Vec<char> = w.clone();
                v.push(c);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Textbook dereferencing: the image of `x` is the expansion of the content
/// of its (unique) definition; undefined variables are ε.
pub fn naive_deref(symbols: &[RefSymbol]) -> (Vec<char>, BTreeMap<VarId, Vec<char>>) {
    let mut spans: BTreeMap<VarId, (usize, usize)> = BTreeMap::new();
    for (i, s) in symbols.iter().enumerate() {
        if let RefSymbol::Open(x) = s {
            let close = symbols[i..].iter().position(|t| *t == RefSymbol::Close(x.clone())).unwrap() + i;
            spans.insert(x.clone(), (i + 1, close));
        }
    }
    fn expand(all: &[RefSymbol], from: usize, to: usize, spans: &BTreeMap<VarId, (usize, usize)>) -> Vec<char> {
        let mut out = Vec::new();
        for s in &all[from..to] {
            match s {
                RefSymbol::Term(c) => out.push(*c),
                RefSymbol::Ref(y) => {
                    if let Some(&(a, b)) = spans.get(y) {
                        out.extend(expand(all, a, b, spans));
                    }
                }
                RefSymbol::Open(_) | RefSymbol::Close(_) => {}
            }
        }
        out
    }
    let w = expand(symbols, 0, symbols.len(), &spans);
    let images = spans.iter().map(|(x, &(a, b))| (x.clone(), expand(symbols, a, b, &spans))).collect();
    (w, images)
}

/// Number of definition brackets and references in the tree; for
/// vstar-free expressions this bounds the non-terminal part of a ref-word.
pub fn var_symbol_count(e: &Xregex) -> usize {
    let mut n = 0;
    e.visit(&mut |node| match node {
        Xregex::Def(..) => n += 2,
        Xregex::Ref(_) => n += 1,
        _ => {}
    });
    n
}

/// Every walk of length at most `max_len` from `src`, as (end, label).
pub fn naive_path_labels(db: &GraphDb, src: usize, max_len: usize) -> Vec<(usize, Vec<char>)> {
    let mut out = vec![(src, Vec::new())];
    let mut layer = vec![(src, Vec::new())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (node, w) in &layer {
            for &(c, t) in db.out_arcs(*node) {
                let mut v: Vec<char> = w.clone();
                v.push(c);
                next.push((t, v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Joins one ref-word per component with separators and dereferences the
/// whole tuple at once, so every reference sees the single definition of
/// its variable wherever it lives. Mappings list every defined variable,
/// uninstantiated ones at ε.
pub fn naive_conjunctive_matches(
    c: &ConjunctiveXregex,
    max_ref_len: usize,
    max_word_len: usize,
) -> BTreeSet<(Vec<Vec<char>>, VariableMapping)> {
    let per: Vec<Vec<Vec<RefSymbol>>> = c
        .components()
        .iter()
        .map(|comp| enumerate_refwords(comp, max_ref_len).into_iter().map(|w| w.symbols().to_vec()).collect())
        .collect();
    let mut out = BTreeSet::new();
    let mut pick = vec![0usize; per.len()];
    if per.iter().any(Vec::is_empty) {
        return out;
    }
    loop {
        let mut joined = Vec::new();
        for (i, &p) in pick.iter().enumerate() {
            if i > 0 {
                joined.push(RefSymbol::Term(SEPARATOR));
            }
            joined.extend(per[i][p].iter().cloned());
        }
        let (w, images) = naive_deref(&joined);
        let words: Vec<Vec<char>> = w.split(|&c| c == SEPARATOR).map(<[char]>::to_vec).collect();
        if words.iter().all(|w| w.len() <= max_word_len) {
            let mut v = VariableMapping::new();
            for x in c.defined_vars() {
                let img = images.get(&x).cloned().unwrap_or_default();
                v.set(x, img);
            }
            out.insert((words, v));
        }
        let Some(i) = (0..pick.len()).rev().find(|&i| pick[i] + 1 < per[i].len()) else { break };
        pick[i] += 1;
        for p in &mut pick[i + 1..] {
            *p = 0;
        }
    }
    out
}
