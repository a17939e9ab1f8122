use serde_json::Value;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lambdap"))
        .args(args)
        .output()
        .expect("spawn lambdap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn reduce_failure_trace() {
    let o = run(&["reduce", "--fuel", "100", "(\\<z1,z2>.z1)(\\y.y)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "   (\\<z1,z2>.z1) (\\y.y)\n\
         -> z1[<z1,z2>/\\y.y]\n     by Beta at root\n\
         -> fail\n     by MatchAbs at root\n\
         normal-form: fail\n"
    );
    assert!(stdout(&o).trim_end().ends_with("fail"));
}

#[test]
fn reduce_out_of_fuel_is_negative() {
    let o = run(&["reduce", "--fuel", "5", "(\\x.x x) (\\x.x x)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("out-of-fuel"));
}

#[test]
fn reduce_random_is_deterministic_per_seed() {
    let args = [
        "reduce",
        "--strategy",
        "random",
        "--seed",
        "7",
        "(\\x.\\y.x) ((\\z.z) a) ((\\z.z) b)",
    ];
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    assert!(a.ends_with("normal-form: a\n"));
}

#[test]
fn inhabit_example() {
    let o = run(&["inhabit", "|- ? : [[a]->a]->[a]->a"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "\\x0.\\x1.x0 x1\n\\x0.x0\n");
    let o = run(&["inhabit", "--limit", "1", "|- ? : [[a]->a]->[a]->a"]);
    assert_eq!(stdout(&o), "\\x0.\\x1.x0 x1\n");
}

#[test]
fn inhabit_empty_is_negative() {
    let o = run(&["inhabit", "|- ? : a"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "");
}

#[test]
fn solve_t1() {
    let o = run(&[
        "solve",
        "--fuel",
        "200",
        "--bound",
        "2",
        "\\x. (\\w.w) [<y,z>/x][<y2,z2>/x (\\v.v)]",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let first = stdout(&o).lines().next().unwrap().to_string();
    assert!(first.starts_with("UNSOLVABLE-WITHIN-BOUND "), "{first}");
    assert!(first.ends_with("uninhabited: [o, []->o]"), "{first}");
}

#[test]
fn solve_with_prelude() {
    let o = run(&["solve", "--prelude", "\\x.\\y.y (x I)"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("SOLVABLE\n"), "{out}");
    assert!(out.contains("reduct: <"), "{out}");
    let o = run(&["solve", "--prelude", "--fuel", "100", "delta delta"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("UNKNOWN"));
}

#[test]
fn json_output_carries_schema() {
    for args in [
        vec!["--json", "classify", "\\x.x"],
        vec!["--json", "solve", "\\x.x"],
        vec!["--json", "inhabit", "|- ? : [[]->a]->a"],
        vec!["--json", "reduce", "(\\x.x) y"],
    ] {
        let o = run(&args);
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["schema"], "lambdap-cli/1", "{args:?}");
    }
    let o = run(&["--json", "inhabit", "|- ? : [[]->a]->a"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["inhabitants"][0]["anf"], "\\x0.x0 _");
}

#[test]
fn synth_then_typecheck_from_file() {
    let o = run(&["--json", "synth", "--type", "o", "\\x.\\y.<x,y>"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let dir = std::env::temp_dir().join(format!("lambdap-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("d.json");
    std::fs::write(&path, v["derivation"].to_string()).unwrap();
    let arg = format!("@{}", path.display());
    let o = run(&["typecheck", &arg]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "OK  |- \\x.\\y.<x,y> : []->[]->o\n");

    let mut broken = v["derivation"].clone();
    broken["object"] = Value::String("[]->o".into());
    std::fs::write(&path, broken.to_string()).unwrap();
    let o = run(&["typecheck", &arg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("REJECTED"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["reduce", "(\\x."]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["--fuel", "many", "reduce", "x"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["reduce", "@/nonexistent/file"]).status.code(),
        Some(2)
    );
}

#[test]
fn classify_lines() {
    let o = run(&["classify", "\\x.x"]);
    assert_eq!(
        stdout(&o),
        "normal: true\ncanonical: true\npure-canonical: true\nk-form: false\nanf: true\n"
    );
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
}
