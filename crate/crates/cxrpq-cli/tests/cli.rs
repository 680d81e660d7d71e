use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GRAPH: &str = "\
alphabet ab
p a q
q b r
r a s
s b t
";

struct Scratch {
    dir: TempDir,
}

impl Scratch {
    fn new() -> Self {
        Scratch { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cxrpq")).args(args.iter().map(|a| a.as_ref())).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn eval(graph: &Path, query: &Path, extra: &[&str]) -> Output {
    let mut args: Vec<&dyn AsRef<std::ffi::OsStr>> = vec![&"eval", &"-g", &graph, &"-q", &query];
    for e in extra {
        args.push(e);
    }
    run(&args)
}

#[test]
fn eval_prints_answers_and_exit_codes() {
    let s = Scratch::new();
    let g = s.file("g.txt", GRAPH);
    let q = s.file("q.txt", "alphabet ab\noutput x y\nedge x y $v{ab}$v\n");
    let o = eval(&g, &q, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "p t\n");

    let none = s.file("none.txt", "alphabet ab\noutput x\nedge x y bb\n");
    let o = eval(&g, &none, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "");

    let boolean = s.file("b.txt", "alphabet ab\nedge x y (ab)+\n");
    assert_eq!(stdout(&eval(&g, &boolean, &[])), "MATCH\n");
}

#[test]
fn modes_agree_on_a_vstar_free_query() {
    let s = Scratch::new();
    let g = s.file("g.txt", GRAPH);
    let q = s.file("q.txt", "alphabet ab\noutput x y\nedge x y $v{a|b}(b|a)$v\n");
    let want = stdout(&eval(&g, &q, &[]));
    assert!(!want.is_empty());
    for extra in [
        &["--mode", "vsf"][..],
        &["--mode", "bounded", "--k", "1"],
        &["--mode", "log"],
        &["--mode", "oracle"],
        &["--k", "2"],
        &["--sequential"],
    ] {
        let o = eval(&g, &q, extra);
        assert_eq!(o.status.code(), Some(0), "{extra:?}");
        assert_eq!(stdout(&o), want, "{extra:?}");
    }
}

#[test]
fn mode_line_and_flag_precedence() {
    let s = Scratch::new();
    let g = s.file("g.txt", GRAPH);
    // x = ab needs k = 2
    let q = s.file("q.txt", "alphabet ab\nmode bounded 1\noutput x y\nedge x y $v{(a|b)+}$v\n");
    assert_eq!(eval(&g, &q, &[]).status.code(), Some(1));
    assert_eq!(stdout(&eval(&g, &q, &["--k", "2"])), "p t\n");
    assert_eq!(stdout(&eval(&g, &q, &["--mode", "vsf"])), "p t\n");
}

#[test]
fn errors_exit_with_two() {
    let s = Scratch::new();
    let g = s.file("g.txt", GRAPH);
    let bad = s.file("bad.txt", "alphabet ab\nedge x y $v{a\n");
    let o = eval(&g, &bad, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(eval(&g, &s.path("missing.txt"), &[]).status.code(), Some(2));
    let starred = s.file("star.txt", "alphabet ab\nedge x y $v{a}$v*\n");
    assert_eq!(eval(&g, &starred, &[]).status.code(), Some(2));
    assert_eq!(eval(&g, &starred, &["--mode", "bounded"]).status.code(), Some(2));
    assert_eq!(eval(&g, &starred, &["--mode", "bounded", "--k", "1"]).status.code(), Some(0));
    assert_eq!(run(&[&"frobnicate"]).status.code(), Some(2));
}

#[test]
fn classify_reports_fragments() {
    let s = Scratch::new();
    let q = s.file("q.txt", "alphabet ab\nedge x y $u{a*}$w{$u b}\nedge y z $w*\n");
    let o = run(&[&"classify", &"-q", &q]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for line in ["vstar-free: false", "simple: false", "order: u w", "precedes: u w"] {
        assert!(out.lines().any(|l| l == line), "{line} missing from\n{out}");
    }
}

#[test]
fn normalize_output_reparses() {
    let s = Scratch::new();
    let g = s.file("g.txt", GRAPH);
    let q = s.file("q.txt", "alphabet ab\noutput x y\nedge x y ($v{a}|$v{b})(a|b)*$v\n");
    let out = s.path("nf.txt");
    let o = run(&[&"normalize", &"-q", &q, &"-o", &out]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().last().unwrap().starts_with("% size input"));
    let c = stdout(&run(&[&"classify", &"-q", &out]));
    assert!(c.contains("normal-form: true"), "{c}");
    assert_eq!(stdout(&eval(&g, &out, &[])), stdout(&eval(&g, &q, &[])));

    let blowup: String = (0..12).map(|i| format!("($v{i}{{a}}|b)")).collect();
    let big = s.file("big.txt", &format!("alphabet ab\nedge x y {blowup}\n"));
    assert_eq!(run(&[&"normalize", &"-q", &big, &"--max-nodes", &"500"]).status.code(), Some(2));
}

#[test]
fn translations_evaluate_alike() {
    let s = Scratch::new();
    let g = s.file("g.txt", GRAPH);
    let q = s.file("q.txt", "alphabet ab\noutput x y\nedge x y $v{a|b}(a|b)$v\n");
    let want = stdout(&eval(&g, &q, &[]));
    for (to, k) in [("union-ecrpq-eq", None), ("union-crpq", Some("1"))] {
        let out = s.path(&format!("{to}.txt"));
        let mut args: Vec<&dyn AsRef<std::ffi::OsStr>> = vec![&"translate", &"-q", &q, &"--to", &to, &"-o", &out];
        if let Some(k) = &k {
            args.push(&"--k");
            args.push(k);
        }
        assert_eq!(run(&args).status.code(), Some(0), "{to}");
        assert_eq!(stdout(&eval(&g, &out, &[])), want, "{to}");
    }
    assert_eq!(run(&[&"translate", &"-q", &q, &"--to", &"union-crpq"]).status.code(), Some(2));

    let eq = s.file("eq.txt", "alphabet ab\noutput x y\nedge x z a\nedge z y (a|b)*\nedge x y ab(ab)*\nequal 1 3\n");
    let direct = eval(&g, &eq, &[]);
    let cx = s.path("cx.txt");
    assert_eq!(run(&[&"translate", &"-q", &eq, &"--to", &"cxrpq", &"-o", &cx]).status.code(), Some(0));
    assert_eq!(stdout(&eval(&g, &cx, &[])), stdout(&direct));
}

#[test]
fn generators_write_loadable_instances() {
    let s = Scratch::new();
    let (g, q) = (s.path("g.txt"), s.path("q.txt"));
    let o = run(&[
        &"gen",
        &"nfa-intersection",
        &"--nfa",
        &"start 0; final 1; 0 a 1; 1 a 1",
        &"--nfa",
        &"start 0; final 2; 0 a 1; 1 a 2; 2 a 1",
        &"--graph",
        &g,
        &"--query",
        &q,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&eval(&g, &q, &[])), "MATCH\n");
    assert_eq!(stdout(&eval(&g, &q, &["--mode", "bounded", "--k", "1"])), "NO MATCH\n");

    let o = run(&[
        &"gen",
        &"hitting-set",
        &"--set",
        &"1,2",
        &"--set",
        &"2,3",
        &"--set",
        &"3",
        &"--budget",
        &"1",
        &"--graph",
        &g,
        &"--query",
        &q,
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(eval(&g, &q, &["--mode", "bounded", "--k", "1"]).status.code(), Some(1));
    run(&[
        &"gen",
        &"hitting-set",
        &"--set",
        &"1,2",
        &"--set",
        &"2,3",
        &"--set",
        &"3",
        &"--budget",
        &"2",
        &"--graph",
        &g,
        &"--query",
        &q,
    ]);
    assert_eq!(eval(&g, &q, &["--mode", "bounded", "--k", "1"]).status.code(), Some(0));

    let o = run(&[&"gen", &"hitting-set", &"--set", &"1,x", &"--budget", &"1", &"--graph", &g, &"--query", &q]);
    assert_eq!(o.status.code(), Some(2));
}
