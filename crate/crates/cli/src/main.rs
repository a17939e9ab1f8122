use clap::{Parser, Subcommand, ValueEnum};
use lambdap::inhabitation::inhabit;
use lambdap::reduction::{classify, reduce, Outcome, Strategy};
use lambdap::solvability::{find_canonical, solve, SolveVerdict};
use lambdap::syntax::{
    alpha_eq, parse_term, print_term, print_term_raw, substitute_all, Name, Term,
};
use lambdap::typesys::{
    check_derivation, parse_query, parse_type, synth_canonical, synth_canonical_with_tail,
    Derivation, TypeExpr,
};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::process::ExitCode;

const SCHEMA: &str = "lambdap-cli/1";

#[derive(Parser)]
#[command(
    name = "lambdap",
    version,
    about = "Pair-pattern lambda calculus toolkit"
)]
struct Cli {
    /// Maximum number of reduction steps.
    #[arg(long, global = true, default_value_t = 1000)]
    fuel: usize,
    /// Number of alternative product tails tried by `solve`.
    #[arg(long, global = true, default_value_t = 2)]
    bound: usize,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the random strategy.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Maximum number of inhabitants printed.
    #[arg(long, global = true)]
    limit: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = StrategyArg::Lo)]
    strategy: StrategyArg,
    /// Bind the free names I, K, S and delta to their usual combinators.
    #[arg(long, global = true)]
    prelude: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Lo,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a term and print the trace.
    Reduce { term: String },
    /// Report grammar membership of a term.
    Classify { term: String },
    /// Reduce to a canonical form and type it.
    Canonical { term: String },
    /// Check a derivation given as JSON.
    Typecheck { derivation: String },
    /// Type a canonical form.
    Synth {
        term: String,
        /// Target type for head-variable spines.
        #[arg(long = "type")]
        ty: Option<String>,
    },
    /// Enumerate the approximate normal forms inhabiting `ENV |- ? : TYPE`.
    Inhabit { query: String },
    /// Decide solvability.
    Solve { term: String },
    /// Run the built-in example suite.
    Selftest,
}

enum Failure {
    Usage(String),
    Negative,
}

type Run = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::Reduce { term } => cmd_reduce(cli, &load_term(cli, term)?),
        Command::Classify { term } => cmd_classify(cli, &load_term(cli, term)?),
        Command::Canonical { term } => cmd_canonical(cli, &load_term(cli, term)?),
        Command::Typecheck { derivation } => cmd_typecheck(cli, &read_arg(derivation)?),
        Command::Synth { term, ty } => cmd_synth(cli, &load_term(cli, term)?, ty.as_deref()),
        Command::Inhabit { query } => cmd_inhabit(cli, &read_arg(query)?),
        Command::Solve { term } => cmd_solve(cli, &load_term(cli, term)?),
        Command::Selftest => cmd_selftest(cli),
    }
}

/// `@path` reads the argument from a file.
fn read_arg(arg: &str) -> Result<String, Failure> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}"))),
        None => Ok(arg.to_string()),
    }
}

fn prelude() -> BTreeMap<Name, Term> {
    [
        ("I", "\\x.x"),
        ("K", "\\x.\\y.x"),
        ("S", "\\x.\\y.\\z.x z (y z)"),
        ("delta", "\\x.x x"),
    ]
    .into_iter()
    .map(|(n, src)| {
        (
            Name::new(n).expect("prelude name"),
            parse_term(src).expect("prelude term"),
        )
    })
    .collect()
}

fn load_term(cli: &Cli, arg: &str) -> Result<Term, Failure> {
    let t = parse_term(&read_arg(arg)?).map_err(usage)?;
    Ok(if cli.prelude {
        substitute_all(&t, &prelude())
    } else {
        t
    })
}

fn emit(v: Value) {
    let mut v = v;
    if let Value::Object(m) = &mut v {
        m.insert("schema".into(), json!(SCHEMA));
    }
    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
}

fn cmd_reduce(cli: &Cli, t: &Term) -> Run {
    let strategy = match cli.strategy {
        StrategyArg::Lo => Strategy::LeftmostOutermost,
        StrategyArg::Random => Strategy::Random(cli.seed),
    };
    let out = reduce(t, strategy, cli.fuel).map_err(usage)?;
    let status = if out.is_normal_form() {
        "normal-form"
    } else {
        "out-of-fuel"
    };
    if cli.json {
        let steps: Vec<Value> = out
            .trace()
            .iter()
            .map(|s| json!({ "rule": s.rule.name(), "position": s.position.to_string(), "term": print_term_raw(&s.after) }))
            .collect();
        emit(
            json!({ "command": "reduce", "start": print_term_raw(t), "steps": steps, "status": status, "result": print_term_raw(out.term()) }),
        );
    } else {
        println!("   {}", print_term_raw(t));
        for s in out.trace() {
            println!("-> {}", print_term_raw(&s.after));
            println!("     by {} at {}", s.rule.name(), s.position);
        }
        println!("{status}: {}", print_term_raw(out.term()));
    }
    match out {
        Outcome::NormalForm { .. } => Ok(()),
        Outcome::OutOfFuel { .. } => Err(Failure::Negative),
    }
}

fn cmd_classify(cli: &Cli, t: &Term) -> Run {
    let c = classify(t);
    if cli.json {
        emit(json!({ "command": "classify", "term": print_term_raw(t), "classification": c }));
    } else {
        println!("normal: {}", c.normal);
        println!("canonical: {}", c.canonical);
        println!("pure-canonical: {}", c.pure_canonical);
        println!("k-form: {}", c.k_form);
        println!("anf: {}", c.anf);
    }
    Ok(())
}

fn cmd_canonical(cli: &Cli, t: &Term) -> Run {
    let found = find_canonical(t, cli.fuel).map_err(usage)?;
    match (&found, cli.json) {
        (Some((c, d)), true) => emit(json!({
            "command": "canonical", "found": true, "canonical": print_term_raw(c),
            "judgment": d.judgment().to_string(), "derivation": d.to_json(),
        })),
        (None, true) => emit(json!({ "command": "canonical", "found": false })),
        (Some((c, d)), false) => {
            println!("canonical: {}", print_term_raw(c));
            println!("typing: {}", d.judgment());
        }
        (None, false) => println!("no canonical form within {} steps", cli.fuel),
    }
    found.map(|_| ()).ok_or(Failure::Negative)
}

fn cmd_typecheck(cli: &Cli, src: &str) -> Run {
    let v: Value = serde_json::from_str(src).map_err(usage)?;
    let d = Derivation::from_json(&v).map_err(usage)?;
    let res = check_derivation(&d);
    match (&res, cli.json) {
        (Ok(j), true) => {
            emit(json!({ "command": "typecheck", "valid": true, "judgment": j.to_string() }))
        }
        (Err(e), true) => {
            emit(json!({ "command": "typecheck", "valid": false, "error": e.to_string() }))
        }
        (Ok(j), false) => println!("OK {j}"),
        (Err(e), false) => println!("REJECTED {e}"),
    }
    res.map(|_| ()).map_err(|_| Failure::Negative)
}

fn cmd_synth(cli: &Cli, t: &Term, ty: Option<&str>) -> Run {
    let target = ty.map(parse_type).transpose().map_err(usage)?;
    match synth_canonical(t, target.as_ref()) {
        Ok(d) => {
            if cli.json {
                emit(
                    json!({ "command": "synth", "judgment": d.judgment().to_string(), "derivation": d.to_json() }),
                );
            } else {
                println!("{}", d.judgment());
            }
            Ok(())
        }
        Err(e) => {
            if cli.json {
                emit(json!({ "command": "synth", "error": e.to_string() }));
            } else {
                println!("NOT-TYPABLE {e}");
            }
            Err(Failure::Negative)
        }
    }
}

fn cmd_inhabit(cli: &Cli, query: &str) -> Run {
    let (env, ty) = parse_query(query).map_err(usage)?;
    let set = inhabit(&env, &ty);
    let limit = cli.limit.unwrap_or(usize::MAX);
    let shown: Vec<_> = set.iter().take(limit).collect();
    if cli.json {
        let items: Vec<Value> = shown
            .iter()
            .map(|i| json!({ "anf": print_term(&i.term), "derivation": i.derivation.to_json() }))
            .collect();
        emit(
            json!({ "command": "inhabit", "env": env.to_string(), "type": ty.to_string(), "total": set.len(), "inhabitants": items }),
        );
    } else {
        for i in &shown {
            println!("{}", print_term(&i.term));
        }
    }
    if set.is_empty() {
        Err(Failure::Negative)
    } else {
        Ok(())
    }
}

fn cmd_solve(cli: &Cli, t: &Term) -> Run {
    let v = solve(t, cli.fuel, cli.bound).map_err(usage)?;
    if cli.json {
        let mut j = v.to_json();
        j["command"] = json!("solve");
        emit(j);
    } else {
        match &v {
            SolveVerdict::Solvable {
                canonical,
                witness,
                typing,
                reduct,
            } => {
                println!("SOLVABLE");
                println!("canonical: {}", print_term_raw(canonical));
                println!("typing: {typing}");
                println!("witness: {witness}");
                println!("reduct: {}", print_term_raw(reduct));
            }
            SolveVerdict::UnsolvableWithinBound { canonical, failed } => {
                let first = failed
                    .first()
                    .map(|f| f.uninhabited.to_string())
                    .unwrap_or_default();
                println!(
                    "UNSOLVABLE-WITHIN-BOUND canonical: {} uninhabited: {first}",
                    print_term_raw(canonical)
                );
                for f in failed {
                    println!(
                        "  typing: {} |- {} uninhabited: {}",
                        f.typing.env,
                        f.typing.ty(),
                        f.uninhabited
                    );
                }
            }
            SolveVerdict::Unknown { reason } => println!("UNKNOWN {reason}"),
        }
    }
    if v.is_solvable() {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}

fn inhabitants(query: &str) -> Vec<String> {
    let (env, ty) = parse_query(query).expect("query");
    inhabit(&env, &ty).printed()
}

fn normalize_set(terms: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = terms
        .iter()
        .map(|s| print_term(&parse_term(s).expect("term")))
        .collect();
    v.sort();
    v
}

fn selftest_items() -> Vec<(&'static str, Box<dyn Fn() -> bool>)> {
    let dd = "(\\x.x x) (\\x.x x)";
    let solvable = |src: String| {
        move || solve(&parse_term(&src).unwrap(), 1000, 2).is_ok_and(|v| v.is_solvable())
    };
    let not_solvable = |src: String| {
        move || solve(&parse_term(&src).unwrap(), 200, 2).is_ok_and(|v| !v.is_solvable())
    };
    vec![
        (
            "pair pattern against an abstraction fails",
            Box::new(|| {
                let t = parse_term("(\\<z1,z2>.z1)(\\y.y)").unwrap();
                reduce(&t, Strategy::LeftmostOutermost, 100).is_ok_and(|o| *o.term() == Term::Fail)
            }),
        ),
        (
            "matching reduces at a distance",
            Box::new(|| {
                let t = parse_term("(\\<x,y>.x) (<\\a.a, \\b.b>[<u,v>/w])").unwrap();
                reduce(&t, Strategy::LeftmostOutermost, 100)
                    .is_ok_and(|o| alpha_eq(o.term(), &parse_term("(\\a.a)[<u,v>/w]").unwrap()))
            }),
        ),
        (
            "identity has a product typing",
            Box::new(|| {
                synth_canonical_with_tail(&parse_term("\\x.x").unwrap(), &TypeExpr::o())
                    .is_ok_and(|d| check_derivation(&d).is_ok() && d.ty().to_string() == "[o]->o")
            }),
        ),
        (
            "inhabitants of [[a]->a]->[a]->a",
            Box::new(|| {
                inhabitants("|- ? : [[a]->a]->[a]->a") == normalize_set(&["\\f.\\x.f x", "\\f.f"])
            }),
        ),
        (
            "inhabitants of [[]->a]->a",
            Box::new(|| inhabitants("|- ? : [[]->a]->a") == normalize_set(&["\\f.f _"])),
        ),
        (
            "inhabitants of [[o]->o, o]->o include the listed six",
            Box::new(|| {
                let got = inhabitants("|- ? : [[o]->o, o]->o");
                normalize_set(&[
                    "\\x.x x",
                    "\\x.(x <_,_>)[<y,z>/x]",
                    "\\x.x[<y,z>/x <_,_>]",
                    "\\x.<_,_>[<y,z>/x x]",
                    "\\x.<_,_>[<y,z>/x <_,_>][<w,s>/x]",
                    "\\x.<_,_>[<y,z>/x][<w,s>/x <_,_>]",
                ])
                .iter()
                .all(|t| got.contains(t))
            }),
        ),
        (
            "t1 is unsolvable with [o, []->o] uninhabited",
            Box::new(|| {
                let t1 = parse_term("\\x.(\\w.w)[<y,z>/x][<y2,z2>/x (\\v.v)]").unwrap();
                matches!(solve(&t1, 200, 2), Ok(SolveVerdict::UnsolvableWithinBound { failed, .. })
                    if failed.first().is_some_and(|f| f.uninhabited.to_string() == "[o, []->o]"))
            }),
        ),
        ("I is solvable", Box::new(solvable("\\x.x".into()))),
        ("K is solvable", Box::new(solvable("\\x.\\y.x".into()))),
        (
            "S is solvable",
            Box::new(solvable("\\x.\\y.\\z.x z (y z)".into())),
        ),
        (
            "\\x.\\y.y (x I) is solvable",
            Box::new(solvable("\\x.\\y.y (x (\\z.z))".into())),
        ),
        (
            "<dd,dd> is solvable",
            Box::new(solvable(format!("<{dd}, {dd}>"))),
        ),
        ("dd is not solvable", Box::new(not_solvable(dd.into()))),
        (
            "\\x.dd is not solvable",
            Box::new(not_solvable(format!("\\x.{dd}"))),
        ),
        (
            "dd I is not solvable",
            Box::new(not_solvable(format!("{dd} (\\z.z)"))),
        ),
    ]
}

fn cmd_selftest(cli: &Cli) -> Run {
    let results: Vec<(&str, bool)> = selftest_items()
        .into_iter()
        .map(|(name, f)| (name, f()))
        .collect();
    if cli.json {
        let items: Vec<Value> = results
            .iter()
            .map(|(n, ok)| json!({ "name": n, "pass": ok }))
            .collect();
        emit(json!({ "command": "selftest", "items": items }));
    } else {
        for (name, ok) in &results {
            println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
        }
    }
    if results.iter().all(|(_, ok)| *ok) {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}
