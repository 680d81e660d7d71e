use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cxrpq::eval::{self, EvalLimits, SizeMeasure};
use cxrpq::graphdb::{load_graphdb, parse_query_file, render_query, save_graphdb, GraphDb, Query};
use cxrpq::normalform::{normalize_with_report, Limits};
use cxrpq::reductions::{gen_hitting_set_instance, gen_nfa_intersection_instance, parse_nfa, HittingSet, Variant};
use cxrpq::translate::{bounded_to_union_crpq, ecrpq_eq_to_cxrpq, eval_ecrpq_eq, eval_union, vsf_to_union_ecrpq_eq};
use cxrpq::translate::{EcrpqEq, UnionQuery};
use cxrpq::xregex::{classify, precedence_graph};
use cxrpq::{par, AnswerSet, Mode};

/// Conjunctive xregex path queries over edge-labelled graph databases.
#[derive(Parser)]
#[command(name = "cxrpq", version)]
struct Cli {
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a query, an equality query or a union file on a graph.
    Eval(EvalArgs),
    /// Print the fragment flags and the variable precedence order.
    Classify {
        #[arg(short, long)]
        query: PathBuf,
    },
    /// Rewrite a vstar-free query into normal form.
    Normalize {
        #[arg(short, long)]
        query: PathBuf,
        /// Node ceiling for intermediate results.
        #[arg(long, default_value_t = Limits::default().max_nodes)]
        max_nodes: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Translate between query classes.
    Translate {
        #[arg(short, long)]
        query: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        /// Image bound for `union-crpq`.
        #[arg(long)]
        k: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a reduction instance.
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(short, long)]
    graph: PathBuf,
    #[arg(short, long)]
    query: PathBuf,
    /// Overrides the `mode` line of the query file.
    #[arg(long, value_enum)]
    mode: Option<ModeFlag>,
    /// Image bound for `--mode bounded`.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 12)]
    ref_len: usize,
    #[arg(long, default_value_t = 8)]
    path_len: usize,
    /// What the log bound measures: nodes+arcs, nodes or arcs.
    #[arg(long, default_value = "nodes+arcs")]
    size_measure: SizeMeasure,
    /// Ceiling on product states and explored mappings.
    #[arg(long)]
    max_states: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeFlag {
    Unrestricted,
    Simple,
    Vsf,
    Bounded,
    Log,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    /// From an equality-fragment file to a vstar-free query.
    Cxrpq,
    UnionEcrpqEq,
    UnionCrpq,
}

#[derive(Subcommand)]
enum Gen {
    /// Chained automata database with the `z{(a|b)*}` query.
    NfaIntersection {
        /// Automaton as `start 0; final 1; 0 a 1; …`.
        #[arg(long = "nfa", required = true)]
        nfas: Vec<String>,
        #[arg(long, default_value = "unrolled")]
        variant: Variant,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
    /// Hitting-set database with the repeated-selection query.
    HittingSet {
        /// A set as comma-separated elements from 1..=universe.
        #[arg(long = "set", required = true)]
        sets: Vec<String>,
        #[arg(long)]
        budget: usize,
        /// Defaults to the largest element mentioned.
        #[arg(long)]
        universe: Option<usize>,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        query: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.sequential {
        par::set_parallel(false);
    }
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn is_union(text: &str) -> bool {
    text.lines().any(|l| l.trim() == "---")
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Eval(args) => cmd_eval(args),
        Command::Classify { query } => cmd_classify(&query),
        Command::Normalize { query, max_nodes, output } => cmd_normalize(&query, max_nodes, output.as_deref()),
        Command::Translate { query, to, k, output } => cmd_translate(&query, to, k, output.as_deref()),
        Command::Gen(g) => cmd_gen(g),
    }
}

fn answer(ans: &AnswerSet) -> ExitCode {
    print!("{ans}");
    if ans.is_empty() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_eval(a: EvalArgs) -> Result<ExitCode> {
    let db = load_graphdb(&read(&a.graph)?).context("graph file")?;
    let text = read(&a.query)?;
    if is_union(&text) {
        let u = UnionQuery::parse(&text).context("union file")?;
        return Ok(answer(&eval_union(&u, &db)?));
    }
    let file = parse_query_file(&text).context("query file")?;
    if !file.equal.is_empty() {
        let q = EcrpqEq::new(file.query, file.equal)?;
        return Ok(answer(&eval_ecrpq_eq(&q, &db)?));
    }
    let q = file.query;
    let mode = resolve_mode(&a, &q)?;
    let mut limits = EvalLimits::default();
    if let Some(m) = a.max_states {
        limits.max_states = m;
        limits.max_mappings = m;
    }
    let ans = match mode {
        Mode::Unrestricted => {
            let c = classify(&q.conjunctive()?);
            if c.simple {
                eval::eval_simple_with(&q, &db, &limits)?
            } else if c.vstar_free {
                eval::eval_vsf_with(&q, &db, &limits)?
            } else {
                bail!("the query is not vstar-free; use --mode bounded, log or oracle")
            }
        }
        Mode::Simple => eval::eval_simple_with(&q, &db, &limits)?,
        Mode::Vsf => eval::eval_vsf_with(&q, &db, &limits)?,
        Mode::Bounded(k) => eval::eval_bounded_with(&q, k, &db, &limits)?,
        Mode::LogBounded => eval::eval_bounded_with(&q, eval::log_bound_by(&db, a.size_measure), &db, &limits)?,
        Mode::Oracle { ref_len, path_len } => eval::eval_oracle(&q, &db, ref_len, path_len)?,
    };
    Ok(answer(&ans))
}

fn resolve_mode(a: &EvalArgs, q: &Query) -> Result<Mode> {
    let file = q.mode;
    Ok(match a.mode {
        None => match (file, a.k) {
            (Some(Mode::Bounded(_)), Some(k)) => Mode::Bounded(k),
            (Some(m), _) => m,
            (None, Some(k)) => Mode::Bounded(k),
            (None, None) => Mode::Unrestricted,
        },
        Some(ModeFlag::Unrestricted) => Mode::Unrestricted,
        Some(ModeFlag::Simple) => Mode::Simple,
        Some(ModeFlag::Vsf) => Mode::Vsf,
        Some(ModeFlag::Log) => Mode::LogBounded,
        Some(ModeFlag::Bounded) => match (a.k, file) {
            (Some(k), _) | (None, Some(Mode::Bounded(k))) => Mode::Bounded(k),
            _ => bail!("--mode bounded needs --k"),
        },
        Some(ModeFlag::Oracle) => Mode::Oracle { ref_len: a.ref_len, path_len: a.path_len },
    })
}

fn cmd_classify(path: &Path) -> Result<ExitCode> {
    let q = parse_query_file(&read(path)?)?.query;
    let cx = q.conjunctive()?;
    let c = classify(&cx);
    println!("vstar-free: {}", c.vstar_free);
    println!("valt-free: {}", c.valt_free);
    println!("variable-simple: {}", c.variable_simple);
    println!("simple: {}", c.simple);
    println!("normal-form: {}", c.normal_form);
    println!("all-flat: {}", c.all_flat);
    let flat: Vec<String> = c.flat_vars.iter().map(ToString::to_string).collect();
    println!("flat: {}", flat.join(" "));
    let g = precedence_graph(&cx);
    let order = g.topological_order().ok_or_else(|| anyhow!("cyclic precedence"))?;
    let order: Vec<String> = order.iter().map(ToString::to_string).collect();
    println!("order: {}", order.join(" "));
    for (x, y) in &g.arcs {
        println!("precedes: {x} {y}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_normalize(path: &Path, max_nodes: usize, output: Option<&Path>) -> Result<ExitCode> {
    let q = parse_query_file(&read(path)?)?.query;
    let (nf, report) = normalize_with_report(&q.conjunctive()?, Limits { max_nodes })?;
    let mut text = render_query(&q.relabel(nf.components().to_vec()));
    text.push_str(&format!(
        "% size input {} step1 {} step2 {} step3 {}\n",
        report.input, report.step1, report.step2, report.step3
    ));
    emit(&text, output)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_translate(path: &Path, to: Target, k: Option<usize>, output: Option<&Path>) -> Result<ExitCode> {
    let file = parse_query_file(&read(path)?)?;
    let text = match to {
        Target::Cxrpq => render_query(&ecrpq_eq_to_cxrpq(&EcrpqEq::new(file.query, file.equal)?)?),
        Target::UnionEcrpqEq => {
            no_equalities(&file.equal)?;
            vsf_to_union_ecrpq_eq(&file.query)?.render()
        }
        Target::UnionCrpq => {
            no_equalities(&file.equal)?;
            let k = match (k, file.query.mode) {
                (Some(k), _) | (None, Some(Mode::Bounded(k))) => k,
                _ => bail!("--to union-crpq needs --k"),
            };
            bounded_to_union_crpq(&file.query, k)?.render()
        }
    };
    emit(&text, output)?;
    Ok(ExitCode::SUCCESS)
}

fn no_equalities(equal: &[Vec<usize>]) -> Result<()> {
    if equal.is_empty() {
        Ok(())
    } else {
        bail!("this target takes a CXRPQ file without `equal` lines")
    }
}

fn write_instance(db: &GraphDb, q: &Query, graph: &Path, query: &Path) -> Result<ExitCode> {
    fs::write(graph, save_graphdb(db)).with_context(|| format!("writing {}", graph.display()))?;
    fs::write(query, render_query(q)).with_context(|| format!("writing {}", query.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(g: Gen) -> Result<ExitCode> {
    match g {
        Gen::NfaIntersection { nfas, variant, graph, query } => {
            let automata = nfas.iter().map(|t| parse_nfa(t)).collect::<Result<Vec<_>, _>>()?;
            let (db, q) = gen_nfa_intersection_instance(&automata, variant)?;
            write_instance(&db, &q, &graph, &query)
        }
        Gen::HittingSet { sets, budget, universe, graph, query } => {
            let sets = sets
                .iter()
                .map(|s| {
                    s.split(',')
                        .map(|z| z.trim().parse::<usize>().map_err(|_| anyhow!("bad element {z:?} in set {s:?}")))
                        .collect::<Result<BTreeSet<usize>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let n = universe.unwrap_or_else(|| sets.iter().flatten().copied().max().unwrap_or(0));
            let (db, q) = gen_hitting_set_instance(&HittingSet::new(n, sets, budget)?)?;
            write_instance(&db, &q, &graph, &query)
        }
    }
}
