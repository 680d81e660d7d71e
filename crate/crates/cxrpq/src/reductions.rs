//! Instance generators for the NFA-intersection and hitting-set reductions,
//! and a brute-force hitting-set solver to check them against.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::graphdb::{Edge, GraphDb, Nfa, Query};
use crate::xregex::{Alphabet, VarId, Xregex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("bad automaton description: {0}")]
    Parse(String),
}

type Result<T> = std::result::Result<T, ReductionError>;

/// How the query repeats the shared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `# z{(a|b)*} (## z)* ###`, not vstar-free.
    Starred,
    /// `# z{(a|b)*} (## z)^{k-1} ###` for k automata.
    Unrolled,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "starred" => Ok(Variant::Starred),
            "unrolled" => Ok(Variant::Unrolled),
            _ => Err(format!("unknown variant {s:?}; expected starred or unrolled")),
        }
    }
}

fn var(name: &str) -> VarId {
    VarId::new(name).expect("valid name")
}

fn hashes(n: usize) -> Xregex {
    Xregex::word(&vec!['#'; n])
}

/// Adds a path spelling `word` from `src` to `dst`, with fresh inner nodes
/// named after `tag`.
fn add_word_arc(db: &mut GraphDb, src: &str, word: &[char], dst: &str, tag: &str) {
    let mut cur = src.to_string();
    for (i, &c) in word.iter().enumerate() {
        let next = if i + 1 == word.len() { dst.to_string() } else { format!("{tag}.{}", i + 1) };
        db.add_arc(&cur, c, &next);
        cur = next;
    }
}

/// Reads an automaton from `start q`, `final q` and `p sym q` items,
/// separated by newlines or semicolons.
pub fn parse_nfa(text: &str) -> Result<Nfa> {
    let mut start = None;
    let mut finals = Vec::new();
    let mut arcs = Vec::new();
    let num = |s: &str| s.parse::<usize>().map_err(|_| ReductionError::Parse(format!("bad state {s:?}")));
    for item in text.split([';', '\n']).map(str::trim).filter(|s| !s.is_empty()) {
        let toks: Vec<&str> = item.split_whitespace().collect();
        match toks[..] {
            ["start", q] => start = Some(num(q)?),
            ["final", q] => finals.push(num(q)?),
            [p, c, q] => {
                let mut cs = c.chars();
                let (Some(sym), None) = (cs.next(), cs.next()) else {
                    return Err(ReductionError::Parse(format!("bad symbol {c:?}")));
                };
                arcs.push((num(p)?, sym, num(q)?));
            }
            _ => return Err(ReductionError::Parse(format!("cannot read {item:?}"))),
        }
    }
    let start = start.ok_or_else(|| ReductionError::Parse("missing start state".into()))?;
    let states =
        arcs.iter().flat_map(|&(p, _, q)| [p, q]).chain(finals.iter().copied()).chain([start]).max().unwrap() + 1;
    let mut nfa = Nfa::new(states, start);
    for f in finals {
        nfa.finals[f] = true;
    }
    for (p, c, q) in arcs {
        nfa.add_transition(p, Some(c), q);
    }
    Ok(nfa)
}

/// Inverse of [`parse_nfa`].
pub fn render_nfa(nfa: &Nfa) -> String {
    let mut items = vec![format!("start {}", nfa.start)];
    items.extend((0..nfa.num_states()).filter(|&q| nfa.finals[q]).map(|q| format!("final {q}")));
    for (p, ts) in nfa.trans.iter().enumerate() {
        for (l, q) in ts {
            if let Some(c) = l {
                items.push(format!("{p} {c} {q}"));
            }
        }
    }
    items.join("; ")
}

fn check_automaton(i: usize, nfa: &Nfa) -> Result<usize> {
    let finals: Vec<usize> = (0..nfa.num_states()).filter(|&q| nfa.finals[q]).collect();
    let [f] = finals[..] else {
        return Err(ReductionError::Precondition(format!("automaton {} needs exactly one accepting state", i + 1)));
    };
    for ts in &nfa.trans {
        for (l, _) in ts {
            match l {
                Some('a' | 'b') => {}
                Some(c) => {
                    return Err(ReductionError::Precondition(format!(
                        "automaton {} uses {c:?}; the alphabet is {{a, b}}",
                        i + 1
                    )))
                }
                None => return Err(ReductionError::Precondition(format!("automaton {} has ε-transitions", i + 1))),
            }
        }
    }
    Ok(f)
}

/// The chained database `s -#-> M1 -##-> M2 … Mk -###-> t` and the
/// single-edge Boolean query of the chosen variant.
pub fn gen_nfa_intersection_instance(automata: &[Nfa], variant: Variant) -> Result<(GraphDb, Query)> {
    if automata.is_empty() {
        return Err(ReductionError::Precondition("at least one automaton is needed".into()));
    }
    let finals = automata.iter().enumerate().map(|(i, a)| check_automaton(i, a)).collect::<Result<Vec<_>>>()?;
    let k = automata.len();
    let mut db = GraphDb::with_alphabet(Alphabet::parse("ab#").expect("valid"));
    let state = |i: usize, q: usize| format!("m{}q{q}", i + 1);
    db.add_node("s");
    for (i, a) in automata.iter().enumerate() {
        for q in 0..a.num_states() {
            db.add_node(&state(i, q));
        }
        for (p, ts) in a.trans.iter().enumerate() {
            for (l, q) in ts {
                db.add_arc(&state(i, p), l.expect("checked"), &state(i, *q));
            }
        }
    }
    db.add_arc("s", '#', &state(0, automata[0].start));
    for i in 0..k - 1 {
        add_word_arc(
            &mut db,
            &state(i, finals[i]),
            &['#', '#'],
            &state(i + 1, automata[i + 1].start),
            &format!("h{}", i + 1),
        );
    }
    db.add_node("t");
    add_word_arc(&mut db, &state(k - 1, finals[k - 1]), &['#', '#', '#'], "t", "e");

    let z = var("z");
    let ab = Xregex::star(Xregex::alt(Xregex::Term('a'), Xregex::Term('b')));
    let link = Xregex::concat(vec![hashes(2), Xregex::var(&z)]);
    let mut parts = vec![Xregex::Term('#'), Xregex::def(&z, ab)];
    match variant {
        Variant::Starred => parts.push(Xregex::star(link)),
        Variant::Unrolled => parts.extend(std::iter::repeat_n(link, k - 1)),
    }
    parts.push(hashes(3));
    let edge = Edge { src: "x".into(), dst: "y".into(), label: Xregex::Concat(parts).simplify_concat() };
    let q = Query::new(vec![edge], Vec::new(), db.declared_alphabet().expect("set above").clone())
        .expect("one edge, no output");
    Ok((db, q))
}

/// Sets `A_1 … A_m` over the universe `{1, …, n}` and a size budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HittingSet {
    pub universe: usize,
    pub sets: Vec<BTreeSet<usize>>,
    pub budget: usize,
}

impl HittingSet {
    pub fn new(universe: usize, sets: Vec<BTreeSet<usize>>, budget: usize) -> Result<Self> {
        if universe == 0 {
            return Err(ReductionError::Precondition("the universe is empty".into()));
        }
        for (i, s) in sets.iter().enumerate() {
            if s.is_empty() {
                return Err(ReductionError::Precondition(format!("set {} is empty", i + 1)));
            }
            if let Some(&z) = s.iter().find(|&&z| z == 0 || z > universe) {
                return Err(ReductionError::Precondition(format!("element {z} is outside 1..={universe}")));
            }
        }
        Ok(HittingSet { universe, sets, budget })
    }
}

impl fmt::Display for HittingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sets: Vec<String> =
            self.sets.iter().map(|s| s.iter().map(usize::to_string).collect::<Vec<_>>().join(",")).collect();
        write!(f, "U=1..{} sets=[{}] budget={}", self.universe, sets.join(" "), self.budget)
    }
}

/// Smallest hitting set of size at most the budget; ties go to the
/// lexicographically first.
pub fn brute_hitting_set(inst: &HittingSet) -> Option<BTreeSet<usize>> {
    let hits = |b: &BTreeSet<usize>| inst.sets.iter().all(|s| !s.is_disjoint(b));
    for size in 0..=inst.budget.min(inst.universe) {
        let mut pick: Vec<usize> = (1..=size).collect();
        loop {
            let b: BTreeSet<usize> = pick.iter().copied().collect();
            if hits(&b) {
                return Some(b);
            }
            // next combination of `size` elements from 1..=universe
            let Some(i) = (0..size).rev().find(|&i| pick[i] < inst.universe - (size - 1 - i)) else { break };
            pick[i] += 1;
            for j in i + 1..size {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
    None
}

/// `⟨z_i⟩ = b a^i b`
fn code(i: usize) -> Vec<char> {
    let mut w = vec!['b'];
    w.extend(std::iter::repeat_n('a', i));
    w.push('b');
    w
}

/// The u-chain picks `budget` elements, the v-chain picks one member of each
/// set between self-loops over the whole universe; the query demands that
/// the second part is the first repeated `m` times.
pub fn gen_hitting_set_instance(inst: &HittingSet) -> Result<(GraphDb, Query)> {
    let HittingSet { universe: n, sets, budget: k } = inst;
    let m = sets.len();
    let mut db = GraphDb::with_alphabet(Alphabet::parse("ab#").expect("valid"));
    db.add_node("s");
    db.add_arc("s", '#', "u0");
    for i in 1..=*k {
        for z in 1..=*n {
            add_word_arc(&mut db, &format!("u{}", i - 1), &code(z), &format!("u{i}"), &format!("u{i}z{z}"));
        }
    }
    db.add_arc(&format!("u{k}"), '#', "v0");
    for (i, a) in sets.iter().enumerate() {
        for &z in a {
            add_word_arc(&mut db, &format!("v{i}"), &code(z), &format!("v{}", i + 1), &format!("v{}z{z}", i + 1));
        }
    }
    for i in 0..=m {
        for z in 1..=*n {
            add_word_arc(&mut db, &format!("v{i}"), &code(z), &format!("v{i}"), &format!("v{i}loop{z}"));
        }
    }
    db.add_arc(&format!("v{m}"), '#', "t");

    let vars: Vec<VarId> = (1..=(n + 2) * k).map(|i| var(&format!("x{i}"))).collect();
    let one = Xregex::alternation(vec![Xregex::Term('a'), Xregex::Term('b'), Xregex::Epsilon]);
    let mut parts = vec![Xregex::Term('#')];
    parts.extend(vars.iter().map(|x| Xregex::def(x, one.clone())));
    parts.push(Xregex::Term('#'));
    for _ in 0..m {
        parts.extend(vars.iter().map(Xregex::var));
    }
    parts.push(Xregex::Term('#'));
    let edge = Edge { src: "x".into(), dst: "y".into(), label: Xregex::Concat(parts).simplify_concat() };
    let q = Query::new(vec![edge], Vec::new(), db.declared_alphabet().expect("set above").clone())
        .expect("one edge, no output");
    Ok((db, q))
}
