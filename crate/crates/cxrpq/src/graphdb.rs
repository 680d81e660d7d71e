//! Graph databases, classical automata plumbing, query files and baseline
//! CRPQ evaluation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::automaton::{thompson, Automaton};
use crate::xregex::{
    parse_xregex, render_xregex, validate_conjunctive, Alphabet, ConjunctiveError, ConjunctiveXregex, Xregex,
    XregexError,
};

/// Classical NFA over terminals; `None` labels are ε-transitions.
pub type Nfa = Automaton<char>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: graph databases have no ε-labelled arcs")]
    EpsilonArc { line: usize },
    #[error("line {line}: symbol {symbol:?} is not in the declared alphabet")]
    UnknownSymbol { line: usize, symbol: char },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("edge label {0} is not a classical regular expression")]
    NotClassical(String),
    #[error("line {line}: {source}")]
    Xregex { line: usize, source: XregexError },
    #[error(transparent)]
    Conjunctive(#[from] ConjunctiveError),
    #[error("invalid query: {0}")]
    BadQuery(String),
}

/// Edge-labelled directed multigraph. Nodes are indexed in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GraphDb {
    names: Vec<String>,
    index: HashMap<String, usize>,
    arcs: BTreeSet<(usize, char, usize)>,
    declared: Option<Alphabet>,
    out: Vec<Vec<(char, usize)>>,
}

impl GraphDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_alphabet(alphabet: Alphabet) -> Self {
        GraphDb { declared: Some(alphabet), ..Self::default() }
    }

    pub fn add_node(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.out.push(Vec::new());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }

    pub fn add_arc(&mut self, src: &str, symbol: char, dst: &str) {
        let s = self.add_node(src);
        let t = self.add_node(dst);
        if self.arcs.insert((s, symbol, t)) {
            self.out[s].push((symbol, t));
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// `|V| + |E|`.
    pub fn size(&self) -> usize {
        self.num_nodes() + self.num_arcs()
    }

    pub fn node_name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, char, usize)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn out_arcs(&self, node: usize) -> &[(char, usize)] {
        &self.out[node]
    }

    pub fn declared_alphabet(&self) -> Option<&Alphabet> {
        self.declared.as_ref()
    }

    pub fn arc_symbols(&self) -> BTreeSet<char> {
        self.arcs.iter().map(|a| a.1).collect()
    }

    /// Declared alphabet, else the arc symbols; `None` for an unlabelled graph
    /// without header.
    pub fn alphabet(&self) -> Option<Alphabet> {
        match &self.declared {
            Some(a) => Some(a.clone()),
            None => Alphabet::new(self.arc_symbols()).ok(),
        }
    }
}

pub(crate) fn strip_comment(line: &str) -> &str {
    let mut prev = '\0';
    for (i, c) in line.char_indices() {
        if c == '%' && prev != '\\' {
            return &line[..i];
        }
        prev = if prev == '\\' && c == '\\' { '\0' } else { c };
    }
    line
}

pub fn load_graphdb(text: &str) -> Result<GraphDb, GraphError> {
    let mut db = GraphDb::new();
    let mut arcs = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let toks: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["alphabet", rest @ ..] => {
                let a = Alphabet::parse(&rest.concat()).map_err(|e| GraphError::Parse { line, msg: e.to_string() })?;
                db.declared = Some(a);
            }
            ["node", id] => {
                db.add_node(id);
            }
            [src, sym, dst] => {
                if *sym == "\\e" || *sym == "ε" {
                    return Err(GraphError::EpsilonArc { line });
                }
                let mut cs = sym.chars();
                let (Some(c), None) = (cs.next(), cs.next()) else {
                    return Err(GraphError::Parse {
                        line,
                        msg: format!("arc symbol {sym:?} is not a single character"),
                    });
                };
                arcs.push((line, src.to_string(), c, dst.to_string()));
            }
            _ => return Err(GraphError::Parse { line, msg: format!("cannot parse {:?}", raw.trim()) }),
        }
    }
    for (line, src, c, dst) in arcs {
        if let Some(a) = &db.declared {
            if !a.contains(c) {
                return Err(GraphError::UnknownSymbol { line, symbol: c });
            }
        }
        db.add_arc(&src, c, &dst);
    }
    Ok(db)
}

pub fn save_graphdb(db: &GraphDb) -> String {
    let mut out = String::new();
    if let Some(a) = &db.declared {
        out.push_str(&format!("alphabet {a}\n"));
    }
    for n in &db.names {
        out.push_str(&format!("node {n}\n"));
    }
    for &(s, c, t) in &db.arcs {
        out.push_str(&format!("{} {} {}\n", db.names[s], c, db.names[t]));
    }
    out
}

// ---------------------------------------------------------------------------
// Automata

pub fn regex_to_nfa(x: &Xregex) -> Result<Nfa, GraphError> {
    let re = x.to_classical().ok_or_else(|| GraphError::NotClassical(render_xregex(x)))?;
    Ok(thompson(&re))
}

pub fn nfa_intersection_nonempty(automata: &[Nfa]) -> Option<Vec<char>> {
    Automaton::intersection_witness(automata)
}

/// Regex for the language of `n` by state elimination.
pub fn nfa_to_regex(n: &Nfa) -> Xregex {
    let k = n.num_states();
    let (s, f) = (k, k + 1);
    let mut r: BTreeMap<(usize, usize), Xregex> = BTreeMap::new();
    let put = |r: &mut BTreeMap<(usize, usize), Xregex>, p: usize, q: usize, e: Xregex| {
        let merged = match r.remove(&(p, q)) {
            Some(old) => s_alt(old, e),
            None => e,
        };
        if merged != Xregex::Empty {
            r.insert((p, q), merged);
        }
    };
    put(&mut r, s, n.start, Xregex::Epsilon);
    for q in 0..k {
        if n.finals[q] {
            put(&mut r, q, f, Xregex::Epsilon);
        }
        for (l, t) in &n.trans[q] {
            let e = l.map_or(Xregex::Epsilon, Xregex::Term);
            put(&mut r, q, *t, e);
        }
    }
    let mut remaining: BTreeSet<usize> = (0..k).collect();
    while !remaining.is_empty() {
        // eliminate the state with the fewest in × out arcs
        let &x = remaining
            .iter()
            .min_by_key(|&&x| {
                let ins = r.keys().filter(|&&(p, q)| q == x && p != x).count();
                let outs = r.keys().filter(|&&(p, q)| p == x && q != x).count();
                (ins * outs, x)
            })
            .unwrap();
        remaining.remove(&x);
        let lp = r.remove(&(x, x));
        let ins: Vec<(usize, Xregex)> =
            r.iter().filter(|(&(p, q), _)| q == x && p != x).map(|(&(p, _), e)| (p, e.clone())).collect();
        let outs: Vec<(usize, Xregex)> =
            r.iter().filter(|(&(p, q), _)| p == x && q != x).map(|(&(_, q), e)| (q, e.clone())).collect();
        r.retain(|&(p, q), _| p != x && q != x);
        let mid = lp.map(s_star).unwrap_or(Xregex::Epsilon);
        for (p, a) in &ins {
            for (q, b) in &outs {
                put(&mut r, *p, *q, s_concat(vec![a.clone(), mid.clone(), b.clone()]));
            }
        }
    }
    r.remove(&(s, f)).unwrap_or(Xregex::Empty)
}

fn s_alt(a: Xregex, b: Xregex) -> Xregex {
    match (a, b) {
        (Xregex::Empty, e) | (e, Xregex::Empty) => e,
        (a, b) if a == b => a,
        (a, b) => Xregex::alt(a, b),
    }
}

fn s_concat(parts: Vec<Xregex>) -> Xregex {
    let mut flat = Vec::new();
    for p in parts {
        match p {
            Xregex::Empty => return Xregex::Empty,
            Xregex::Epsilon => {}
            Xregex::Concat(cs) => flat.extend(cs),
            e => flat.push(e),
        }
    }
    Xregex::concat(flat)
}

fn s_star(e: Xregex) -> Xregex {
    match e {
        Xregex::Empty | Xregex::Epsilon => Xregex::Epsilon,
        e if e.as_star().is_some() => e,
        Xregex::Plus(c) => Xregex::star(*c),
        e => Xregex::star(e),
    }
}

/// Labelled paths from `source` of length at most `max_len`, as distinct
/// (target, word) pairs in sorted order.
pub fn enumerate_paths(db: &GraphDb, source: &str, max_len: usize) -> Result<Vec<(String, Vec<char>)>, GraphError> {
    let s = db.node_id(source).ok_or_else(|| GraphError::UnknownNode(source.to_string()))?;
    let mut out = BTreeSet::new();
    let mut stack = vec![(s, Vec::new())];
    while let Some((v, w)) = stack.pop() {
        if w.len() < max_len {
            for &(c, t) in db.out_arcs(v) {
                let mut w2 = w.clone();
                w2.push(c);
                stack.push((t, w2));
            }
        }
        out.insert((db.node_name(v).to_string(), w));
    }
    Ok(out.into_iter().collect())
}

/// For every word of length at most `max_len` labelling some path, the node
/// pairs it connects. Computed on sets of pairs, so the cost is per word, not
/// per path.
pub fn path_words(db: &GraphDb, max_len: usize) -> HashMap<Vec<char>, BTreeSet<(usize, usize)>> {
    let n = db.num_nodes();
    let mut out = HashMap::new();
    let start: BTreeSet<(usize, usize)> = (0..n).map(|v| (v, v)).collect();
    let symbols: Vec<char> = db.arc_symbols().into_iter().collect();
    let mut layer = vec![(Vec::new(), start)];
    for len in 0..=max_len {
        let mut next = Vec::new();
        for (w, pairs) in layer {
            if len < max_len {
                for &c in &symbols {
                    let mut np = BTreeSet::new();
                    for &(u, v) in &pairs {
                        for &(d, t) in db.out_arcs(v) {
                            if d == c {
                                np.insert((u, t));
                            }
                        }
                    }
                    if !np.is_empty() {
                        let mut w2 = w.clone();
                        w2.push(c);
                        next.push((w2, np));
                    }
                }
            }
            out.insert(w, pairs);
        }
        layer = next;
    }
    out
}

/// Pairs (u, v) such that some u→v path is labelled by a word of L(nfa),
/// grouped by u.
pub fn nfa_reachability(db: &GraphDb, nfa: &Nfa) -> Vec<BTreeSet<usize>> {
    let nfa = nfa.remove_epsilon();
    let q = nfa.num_states();
    let n = db.num_nodes();
    let mut result = vec![BTreeSet::new(); n];
    for (u, res) in result.iter_mut().enumerate() {
        let mut seen = vec![false; n * q];
        let mut queue = VecDeque::from([(u, nfa.start)]);
        seen[u * q + nfa.start] = true;
        while let Some((v, p)) = queue.pop_front() {
            if nfa.finals[p] {
                res.insert(v);
            }
            for (l, p2) in &nfa.trans[p] {
                let c = l.expect("ε-free");
                for &(d, t) in db.out_arcs(v) {
                    if d == c && !seen[t * q + p2] {
                        seen[t * q + p2] = true;
                        queue.push_back((t, *p2));
                    }
                }
            }
        }
    }
    result
}

// ---------------------------------------------------------------------------
// Queries

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub label: Xregex,
}

/// Evaluation semantics carried by a query file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Unrestricted semantics; dispatches to the simple or vstar-free evaluator.
    Unrestricted,
    Simple,
    Vsf,
    Bounded(usize),
    LogBounded,
    Oracle {
        ref_len: usize,
        path_len: usize,
    },
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Unrestricted => write!(f, "unrestricted"),
            Mode::Simple => write!(f, "simple"),
            Mode::Vsf => write!(f, "vsf"),
            Mode::Bounded(k) => write!(f, "bounded {k}"),
            Mode::LogBounded => write!(f, "log"),
            Mode::Oracle { ref_len, path_len } => write!(f, "oracle {ref_len} {path_len}"),
        }
    }
}

impl Mode {
    pub fn parse(toks: &[&str]) -> Result<Mode, String> {
        let num = |s: &str| s.parse::<usize>().map_err(|_| format!("expected a number, got {s:?}"));
        match toks {
            ["unrestricted"] => Ok(Mode::Unrestricted),
            ["simple"] => Ok(Mode::Simple),
            ["vsf"] => Ok(Mode::Vsf),
            ["bounded", k] => Ok(Mode::Bounded(num(k)?)),
            ["log"] => Ok(Mode::LogBounded),
            ["oracle", r, p] => Ok(Mode::Oracle { ref_len: num(r)?, path_len: num(p)? }),
            _ => Err(format!("unknown mode {:?}", toks.join(" "))),
        }
    }
}

/// A graph pattern with xregex edge labels and an output tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub edges: Vec<Edge>,
    pub output: Vec<String>,
    pub alphabet: Alphabet,
    pub mode: Option<Mode>,
}

impl Query {
    pub fn new(edges: Vec<Edge>, output: Vec<String>, alphabet: Alphabet) -> Result<Query, GraphError> {
        let q = Query { edges, output, alphabet, mode: None };
        q.check()?;
        Ok(q)
    }

    fn check(&self) -> Result<(), GraphError> {
        if self.edges.is_empty() {
            return Err(GraphError::BadQuery("a query needs at least one edge".into()));
        }
        let vars = self.node_vars();
        if let Some(o) = self.output.iter().find(|o| !vars.contains(o)) {
            return Err(GraphError::BadQuery(format!("output variable {o} does not occur in the pattern")));
        }
        Ok(())
    }

    pub fn is_boolean(&self) -> bool {
        self.output.is_empty()
    }

    /// Node variables in order of first occurrence.
    pub fn node_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.edges {
            for v in [&e.src, &e.dst] {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn labels(&self) -> Vec<Xregex> {
        self.edges.iter().map(|e| e.label.clone()).collect()
    }

    pub fn conjunctive(&self) -> Result<ConjunctiveXregex, GraphError> {
        Ok(validate_conjunctive(self.labels(), &self.alphabet)?)
    }

    /// Same pattern with new labels.
    pub fn relabel(&self, labels: Vec<Xregex>) -> Query {
        let edges = self
            .edges
            .iter()
            .zip(labels)
            .map(|(e, label)| Edge { src: e.src.clone(), dst: e.dst.clone(), label })
            .collect();
        Query { edges, output: self.output.clone(), alphabet: self.alphabet.clone(), mode: self.mode }
    }

    pub fn size(&self) -> usize {
        self.edges.iter().map(|e| e.label.size()).sum()
    }
}

/// A parsed query file: the query plus any `equal` blocks (0-based edge indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryFile {
    pub query: Query,
    pub equal: Vec<Vec<usize>>,
}

pub fn parse_query(text: &str) -> Result<Query, GraphError> {
    let f = parse_query_file(text)?;
    if !f.equal.is_empty() {
        return Err(GraphError::BadQuery("`equal` lines belong to equality-fragment files".into()));
    }
    Ok(f.query)
}

pub fn parse_query_file(text: &str) -> Result<QueryFile, GraphError> {
    let mut alphabet: Option<Alphabet> = None;
    let mut output = Vec::new();
    let mut mode = None;
    let mut raw_edges: Vec<(usize, String, String, String)> = Vec::new();
    let mut equal = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (head, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        let perr = |msg: String| GraphError::Parse { line, msg };
        match head {
            "alphabet" => alphabet = Some(Alphabet::parse(rest).map_err(|e| perr(e.to_string()))?),
            "output" => output = rest.split_whitespace().map(str::to_string).collect(),
            "mode" => {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                mode = Some(Mode::parse(&toks).map_err(perr)?);
            }
            "edge" => {
                let mut it = rest.splitn(3, char::is_whitespace);
                let (Some(s), Some(t), Some(label)) = (it.next(), it.next(), it.next()) else {
                    return Err(perr("expected `edge <src> <dst> <xregex>`".into()));
                };
                raw_edges.push((line, s.to_string(), t.to_string(), label.trim().to_string()));
            }
            "equal" => {
                let mut block = Vec::new();
                for t in rest.split_whitespace() {
                    let i: usize = t.parse().map_err(|_| perr(format!("bad edge index {t:?}")))?;
                    if i == 0 {
                        return Err(perr("edge indices start at 1".into()));
                    }
                    block.push(i - 1);
                }
                equal.push(block);
            }
            other => return Err(perr(format!("unknown directive {other:?}"))),
        }
    }
    let alphabet = alphabet.ok_or_else(|| GraphError::BadQuery("missing `alphabet` header".into()))?;
    let mut edges = Vec::new();
    for (line, src, dst, label) in raw_edges {
        let label = parse_xregex(&label, &alphabet).map_err(|source| GraphError::Xregex { line, source })?;
        edges.push(Edge { src, dst, label });
    }
    for b in &equal {
        if let Some(&i) = b.iter().find(|&&i| i >= edges.len()) {
            return Err(GraphError::BadQuery(format!("equality refers to edge {} of {}", i + 1, edges.len())));
        }
    }
    let mut query = Query { edges, output, alphabet, mode: None };
    query.check()?;
    query.mode = mode;
    Ok(QueryFile { query, equal })
}

pub fn render_query(q: &Query) -> String {
    render_query_file(q, &[])
}

pub fn render_query_file(q: &Query, equal: &[Vec<usize>]) -> String {
    let mut out = format!("alphabet {}\n", q.alphabet);
    if !q.output.is_empty() {
        out.push_str(&format!("output {}\n", q.output.join(" ")));
    }
    if let Some(m) = q.mode {
        out.push_str(&format!("mode {m}\n"));
    }
    for e in &q.edges {
        out.push_str(&format!("edge {} {} {}\n", e.src, e.dst, render_xregex(&e.label)));
    }
    for b in equal {
        let idx: Vec<String> = b.iter().map(|i| (i + 1).to_string()).collect();
        out.push_str(&format!("equal {}\n", idx.join(" ")));
    }
    out
}

// ---------------------------------------------------------------------------
// Answers

/// Output tuples of node names. Boolean queries have arity 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AnswerSet {
    arity: usize,
    tuples: BTreeSet<Vec<String>>,
}

impl AnswerSet {
    pub fn new(arity: usize) -> Self {
        AnswerSet { arity, tuples: BTreeSet::new() }
    }

    /// The Boolean answer `{()}` or `∅`.
    pub fn boolean(matched: bool) -> Self {
        let mut a = AnswerSet::new(0);
        if matched {
            a.tuples.insert(Vec::new());
        }
        a
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn insert(&mut self, tuple: Vec<String>) {
        assert_eq!(tuple.len(), self.arity, "tuple arity");
        self.tuples.insert(tuple);
    }

    pub fn contains(&self, tuple: &[String]) -> bool {
        self.tuples.contains(tuple)
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<String>> {
        self.tuples.iter()
    }

    pub fn extend(&mut self, other: AnswerSet) {
        assert_eq!(self.arity, other.arity, "arity");
        self.tuples.extend(other.tuples);
    }

    pub fn is_subset(&self, other: &AnswerSet) -> bool {
        self.tuples.is_subset(&other.tuples)
    }

    pub(crate) fn from_ids(db: &GraphDb, arity: usize, ids: impl IntoIterator<Item = Vec<usize>>) -> Self {
        let mut a = AnswerSet::new(arity);
        for t in ids {
            a.insert(t.iter().map(|&i| db.node_name(i).to_string()).collect());
        }
        a
    }
}

impl fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.arity == 0 {
            return writeln!(f, "{}", if self.is_empty() { "NO MATCH" } else { "MATCH" });
        }
        for t in &self.tuples {
            writeln!(f, "{}", t.join(" "))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Joins

/// A relation over some of the join variables. A variable may repeat within
/// `vars`; tuples then agree on those positions.
#[derive(Clone, Debug)]
pub(crate) struct Atom {
    pub vars: Vec<usize>,
    pub tuples: Vec<Vec<usize>>,
}

struct Planned<'a> {
    atom: &'a Atom,
    /// positions whose variable is bound before this atom
    key: Vec<usize>,
    index: HashMap<Vec<usize>, Vec<usize>>,
}

/// All projections onto `output` of assignments of `num_vars` variables over
/// `0..domain` that agree with every atom. Atoms are joined one at a time,
/// preferring atoms that share bound variables, each through a hash index on
/// its bound positions. Unconstrained output variables range over the whole domain.
pub(crate) fn join(num_vars: usize, domain: usize, atoms: &[Atom], output: &[usize]) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    if atoms.iter().any(|a| a.tuples.is_empty()) {
        return out;
    }
    let mut bound = vec![false; num_vars];
    let mut left: Vec<&Atom> = atoms.iter().collect();
    let mut plan: Vec<Planned> = Vec::new();
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .min_by_key(|(_, a)| {
                let shared = a.vars.iter().filter(|&&v| bound[v]).count();
                (shared == 0, a.tuples.len(), std::cmp::Reverse(shared))
            })
            .unwrap();
        let atom = left.swap_remove(pos);
        let key: Vec<usize> = (0..atom.vars.len()).filter(|&i| bound[atom.vars[i]]).collect();
        let mut index: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        'tuples: for (ti, t) in atom.tuples.iter().enumerate() {
            // repeated variables inside one atom must agree
            for i in 0..atom.vars.len() {
                for j in 0..i {
                    if atom.vars[i] == atom.vars[j] && t[i] != t[j] {
                        continue 'tuples;
                    }
                }
            }
            index.entry(key.iter().map(|&i| t[i]).collect()).or_default().push(ti);
        }
        for &v in &atom.vars {
            bound[v] = true;
        }
        plan.push(Planned { atom, key, index });
    }
    // an unconstrained variable outside the output only needs some node
    if domain == 0 && bound.contains(&false) {
        return out;
    }
    let free: Vec<usize> = output.iter().copied().filter(|&v| !bound[v]).collect::<BTreeSet<_>>().into_iter().collect();
    let mut assign = vec![usize::MAX; num_vars];
    go(0, &plan, &mut assign, &free, domain, output, &mut out);
    out
}

fn go(
    i: usize,
    plan: &[Planned],
    assign: &mut Vec<usize>,
    free: &[usize],
    domain: usize,
    output: &[usize],
    out: &mut BTreeSet<Vec<usize>>,
) {
    if i == plan.len() {
        fill(0, free, assign, domain, output, out);
        return;
    }
    let p = &plan[i];
    let key: Vec<usize> = p.key.iter().map(|&k| assign[p.atom.vars[k]]).collect();
    let Some(hits) = p.index.get(&key) else { return };
    for &ti in hits {
        let t = &p.atom.tuples[ti];
        let mut newly = Vec::new();
        for (&v, &val) in p.atom.vars.iter().zip(t) {
            if assign[v] == usize::MAX {
                assign[v] = val;
                newly.push(v);
            }
        }
        go(i + 1, plan, assign, free, domain, output, out);
        for v in newly {
            assign[v] = usize::MAX;
        }
    }
}

fn fill(
    j: usize,
    free: &[usize],
    assign: &mut Vec<usize>,
    domain: usize,
    output: &[usize],
    out: &mut BTreeSet<Vec<usize>>,
) {
    if j == free.len() {
        out.insert(output.iter().map(|&v| assign[v]).collect());
        return;
    }
    for d in 0..domain {
        assign[free[j]] = d;
        fill(j + 1, free, assign, domain, output, out);
    }
    assign[free[j]] = usize::MAX;
}

/// Maps query node variables to indices; returns (names, edge endpoints, output indices).
pub(crate) fn pattern_indices(q: &Query) -> (Vec<String>, Vec<(usize, usize)>, Vec<usize>) {
    let names = q.node_vars();
    let idx = |n: &str| names.iter().position(|m| m == n).unwrap();
    let ends = q.edges.iter().map(|e| (idx(&e.src), idx(&e.dst))).collect();
    let out = q.output.iter().map(|o| idx(o)).collect();
    (names, ends, out)
}

/// Classical CRPQ evaluation: per-edge reachability, then a join.
pub fn crpq_eval(q: &Query, db: &GraphDb) -> Result<AnswerSet, GraphError> {
    let (names, ends, out) = pattern_indices(q);
    let mut atoms = Vec::new();
    for (e, &(s, t)) in q.edges.iter().zip(&ends) {
        let nfa = regex_to_nfa(&e.label)?;
        let reach = nfa_reachability(db, &nfa);
        let mut tuples = Vec::new();
        for (u, vs) in reach.iter().enumerate() {
            for &v in vs {
                tuples.push(vec![u, v]);
            }
        }
        atoms.push(Atom { vars: vec![s, t], tuples });
    }
    let ids = join(names.len(), db.num_nodes(), &atoms, &out);
    Ok(AnswerSet::from_ids(db, q.output.len(), ids))
}
