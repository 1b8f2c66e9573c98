use std::path::PathBuf;

use provlog::explain::{prepare, DEFAULT_DEPTH};
use provlog::testing::{POINTS_TO, TRANSITIVE_CLOSURE};
use provlog::{parse_program, Database, Explorer, Options};
use provlog_cli::json;
use provlog_cli::repl::{transcript, Format, Repl};

fn evaluated(src: &str) -> Database {
    let mut db = Database::new(parse_program(src).unwrap(), Options::default()).unwrap();
    db.evaluate().unwrap();
    prepare(&mut db);
    db
}

const SCRIPT: &str = r#"explain alias("a", "b")
setdepth 2
explain alias("a", "b")
setdepth inf
explain new("a", "l1")
explainnegation vpt("b", "l4")
2
d
explainnegation vpt("b", "l4")
7
3
e
"d"
c
f
explainnegation alias("a", "a")
4
l1
explainnegation vpt("a", "l1")
explain vpt("b", "l4")
explain nope("a")
explain alias("a")
setdepth 0
format yaml
frobnicate
format json
explain alias("a", "b")
explainnegation vpt("b", "l4")
1
quit
"#;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Set `UPDATE_GOLDEN=1` to rewrite the expected transcript after an
/// intentional change, then review the diff.
#[test]
fn points_to_transcript_is_byte_stable() {
    let db = evaluated(POINTS_TO);
    let got = transcript(&db, SCRIPT);
    let path = golden("points_to.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap();
    assert_eq!(got, want);
    // Same input, fresh database: same bytes.
    assert_eq!(transcript(&evaluated(POINTS_TO), SCRIPT), got);
}

#[test]
fn negation_walkthrough_matches_the_published_layout() {
    let db = evaluated(POINTS_TO);
    let got = transcript(&db, "explainnegation vpt(\"b\", \"l4\")\n2\nd\n");
    assert!(got.contains(
        "Pick a rule number: 2\n\
         Pick a value for Var2: d\n\
         assign(\"b\", \"d\") X  vpt(\"d\", \"l4\") ✓\n\
         ----------------------------------(R2)\n\
         \x20           vpt(\"b\",\"l4\")\n"
    ), "{got}");
}

#[test]
fn json_mode_reparses_to_the_explorer_value() {
    for src in [POINTS_TO, TRANSITIVE_CLOSURE_WITH_EDGES] {
        let db = evaluated(src);
        let ex = Explorer::new(&db);
        let p = db.program();
        for rel in p.rel_ids() {
            for (t, _) in db.tuples(rel) {
                for depth in [1, 2, DEFAULT_DEPTH, usize::MAX] {
                    let mut repl = Repl::new(&db);
                    repl.handle("format json");
                    assert_eq!(repl.format(), Format::Json);
                    if depth == usize::MAX {
                        repl.handle("setdepth inf");
                    } else {
                        repl.handle(&format!("setdepth {depth}"));
                    }
                    let shown = p.display_ground(&t).to_string();
                    let text = repl.handle(&format!("explain {shown}")).text;
                    let node: json::Node = serde_json::from_str(&text).unwrap();
                    let back = json::proof_node(p, &node).unwrap();
                    assert_eq!(back, ex.explain(&t, depth).unwrap(), "{shown} at depth {depth}");
                }
            }
        }
    }
}

const TRANSITIVE_CLOSURE_WITH_EDGES: &str = "\
.decl edge(x:number, y:number)
.decl path(x:number, y:number)
.output path
edge(1, 2). edge(2, 3). edge(3, 1). edge(3, 4). edge(4, 5).
path(X, Y) :- edge(X, Y).
path(X, Z) :- path(X, Y), edge(Y, Z).
";

#[test]
fn tc_program_text_stays_in_sync() {
    // The inline copy above only adds facts and drops the input directive.
    let rules = |s: &str| s.lines().filter(|l| l.contains(":-")).map(str::to_owned).collect::<Vec<_>>();
    assert_eq!(rules(TRANSITIVE_CLOSURE), rules(TRANSITIVE_CLOSURE_WITH_EDGES));
}
