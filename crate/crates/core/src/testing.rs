//! Programs shared by unit tests, integration tests and benchmarks.

use alloc::string::String;
use core::fmt::Write as _;

/// The four-rule points-to analysis with its eight input facts.
pub const POINTS_TO: &str = r#"// points-to analysis of:
//   l1: a = new O();  l2: b = a;  l3: c = new P();  l4: d = new P();
//   l5: c.f = a;      l6: e = d.f;  l7: b = c.f;  l8: a = b;
.decl new(v:symbol, o:symbol)
.decl assign(v:symbol, w:symbol)
.decl load(v:symbol, b:symbol, f:symbol)
.decl store(b:symbol, f:symbol, v:symbol)
.decl vpt(v:symbol, o:symbol)
.decl alias(v:symbol, w:symbol)
.input new
.input assign
.input load
.input store
.output vpt
.output alias

new(a, l1).
assign(b, a).
new(c, l3).
new(d, l4).
store(c, f, a).
load(e, d, f).
load(b, c, f).
assign(a, b).

r1: vpt(Var, Obj) :- new(Var, Obj).
r2: vpt(Var, Obj) :- assign(Var, Var2),
                     vpt(Var2, Obj).
r3: vpt(Var, Obj) :- load(Var, Y, F),
                     store(P, F, Q),
                     vpt(Q, Obj),
                     alias(P, Y).
r4: alias(Var1, Var2) :- vpt(Var1, Obj),
                         vpt(Var2, Obj),
                         Var1 != Var2.
"#;

/// The points-to rules with the inequality dropped from the alias rule, so
/// every variable with a points-to fact aliases itself.
pub const POINTS_TO_REFLEXIVE: &str = r#".decl new(v:symbol, o:symbol)
.decl assign(v:symbol, w:symbol)
.decl load(v:symbol, b:symbol, f:symbol)
.decl store(b:symbol, f:symbol, v:symbol)
.decl vpt(v:symbol, o:symbol)
.decl alias(v:symbol, w:symbol)
.input new
.input assign
.input load
.input store
.output vpt
.output alias

new(a, l1).
assign(b, a).
new(c, l3).
new(d, l4).
store(c, f, a).
load(e, d, f).
load(b, c, f).
assign(a, b).

vpt(Var, Obj) :- new(Var, Obj).
vpt(Var, Obj) :- assign(Var, Var2), vpt(Var2, Obj).
vpt(Var, Obj) :- load(Var, Y, F), store(P, F, Q), vpt(Q, Obj), alias(P, Y).
alias(Var1, Var2) :- vpt(Var1, Obj), vpt(Var2, Obj).
"#;

/// Points-to where `assign` is computed by an earlier stratum. The lower
/// stratum walks a five-hop chain, so `assign(b, a)` arrives with height 6
/// while `assign(a, b)` has height 1. In the upper stratum `vpt(b, l1)` is
/// first found at height 7 through the assignment and later lowered to 3
/// through the field load once `alias(c, c)` exists.
pub const DELAYED_ASSIGN: &str = r#".decl seed(v:symbol, w:symbol)
.decl hop(v:symbol, w:symbol)
.decl new(v:symbol, o:symbol)
.decl load(v:symbol, b:symbol, f:symbol)
.decl store(b:symbol, f:symbol, v:symbol)
.decl assign(v:symbol, w:symbol)
.decl vpt(v:symbol, o:symbol)
.decl alias(v:symbol, w:symbol)
.input seed
.input hop
.input new
.input load
.input store
.output vpt
.output alias

seed(b, n1).
seed(a, b).
hop(n1, n2).
hop(n2, n3).
hop(n3, n4).
hop(n4, n5).
hop(n5, a).
new(a, l1).
new(c, l3).
new(d, l4).
store(c, f, a).
load(e, d, f).
load(b, c, f).

assign(V, W) :- seed(V, W).
assign(V, W) :- assign(V, U), hop(U, W).
vpt(Var, Obj) :- new(Var, Obj).
vpt(Var, Obj) :- assign(Var, Var2), vpt(Var2, Obj).
vpt(Var, Obj) :- load(Var, Y, F), store(P, F, Q), vpt(Q, Obj), alias(P, Y).
alias(Var1, Var2) :- vpt(Var1, Obj), vpt(Var2, Obj).
"#;

/// Transitive closure over an input edge relation.
pub const TRANSITIVE_CLOSURE: &str = r#".decl edge(x:number, y:number)
.decl path(x:number, y:number)
.input edge
.output path
path(X, Y) :- edge(X, Y).
path(X, Z) :- path(X, Y), edge(Y, Z).
"#;

/// A reachability program whose annotation-update count grows
/// quadratically in `k`.
///
/// Node `a = v0` starts a bottom chain `v0 -> .. -> vk` and every `vi` has
/// a chord to `e`, which starts a leg `e -> w1 -> .. -> wk`. The chords are
/// derived by an earlier stratum whose heights fall as `i` grows, so each
/// chord reached later along the chain offers `reach(a, e)` a strictly
/// lower height. Every such improvement travels down the whole leg again.
pub fn tight_bound_program(k: usize) -> String {
    let mut s = String::from(
        ".decl base(x:symbol, y:symbol)
.decl chord(x:symbol, y:symbol, l:number)
.decl next(x:number, y:number)
.decl ready(l:number)
.decl edge(x:symbol, y:symbol)
.decl reach(x:symbol, y:symbol)
.input base
.input chord
.input next
.output reach
ready(0).
",
    );
    let levels = 3 * k + 1;
    for l in 0..levels {
        let _ = writeln!(s, "next({}, {}).", l, l + 1);
    }
    let _ = writeln!(s, "base(a, v1).");
    for i in 1..k {
        let _ = writeln!(s, "base(v{}, v{}).", i, i + 1);
    }
    let _ = writeln!(s, "base(e, w1).");
    for j in 1..k {
        let _ = writeln!(s, "base(w{}, w{}).", j, j + 1);
    }
    // chord from vi has height 3k - 2i + 1
    for i in 0..k {
        let from = if i == 0 { String::from("a") } else { alloc::format!("v{}", i) };
        let _ = writeln!(s, "chord({}, e, {}).", from, 3 * k - 2 * i);
    }
    s.push_str(
        "ready(Y) :- ready(X), next(X, Y).
edge(X, Y) :- base(X, Y).
edge(X, Y) :- chord(X, Y, L), ready(L).
reach(a, N) :- edge(a, N).
reach(a, Y) :- reach(a, X), edge(X, Y).
",
    );
    s
}

#[cfg(feature = "testing")]
pub use random::random_program;

#[cfg(feature = "testing")]
mod random {
    use alloc::string::String;
    use alloc::vec::Vec;
    use core::fmt::Write as _;
    use rand::seq::SliceRandom;
    use rand::Rng;

    const VARS: [&str; 4] = ["X", "Y", "Z", "W"];
    const OPS: [&str; 6] = ["=", "!=", "<", "<=", ">", ">="];

    struct Rel {
        name: String,
        arity: usize,
        level: usize,
    }

    /// A random stratified program over small numbers: at most six
    /// relations, at most ten rules, negation only on strictly lower
    /// levels, and few enough constants that it never derives more than a
    /// couple of hundred tuples.
    ///
    /// With `single_stratum` all rule heads are tied into one recursive
    /// component and every input tuple has height 0.
    pub fn random_program<R: Rng>(rng: &mut R, single_stratum: bool) -> String {
        let domain = rng.gen_range(3..=6i64);
        let n_edb = rng.gen_range(1..=2usize);
        let n_idb = rng.gen_range(1..=(6 - n_edb).min(4));
        let shared_arity = if rng.gen_bool(0.7) { 2 } else { 1 };
        let mut rels = Vec::new();
        for i in 0..n_edb {
            rels.push(Rel {
                name: alloc::format!("e{}", i),
                arity: if rng.gen_bool(0.7) { 2 } else { 1 },
                level: 0,
            });
        }
        for i in 0..n_idb {
            rels.push(Rel {
                name: alloc::format!("p{}", i),
                arity: if single_stratum {
                    shared_arity
                } else if rng.gen_bool(0.7) {
                    2
                } else {
                    1
                },
                level: if single_stratum { 1 } else { rng.gen_range(1..=3) },
            });
        }

        let mut s = String::new();
        for r in &rels {
            let attrs: Vec<String> = (0..r.arity).map(|i| alloc::format!("a{}:number", i)).collect();
            let _ = writeln!(s, ".decl {}({})", r.name, attrs.join(", "));
            let _ = writeln!(s, ".{} {}", if r.level == 0 { "input" } else { "output" }, r.name);
        }
        for r in rels.iter().filter(|r| r.level == 0) {
            let count = rng.gen_range(2..=(domain as usize * r.arity * 2));
            for _ in 0..count {
                let args: Vec<String> = (0..r.arity)
                    .map(|_| alloc::format!("{}", rng.gen_range(0..domain)))
                    .collect();
                let _ = writeln!(s, "{}({}).", r.name, args.join(", "));
            }
        }
        if !single_stratum && rng.gen_bool(0.2) {
            let r = &rels[n_edb + rng.gen_range(0..n_idb)];
            let args: Vec<String> = (0..r.arity)
                .map(|_| alloc::format!("{}", rng.gen_range(0..domain)))
                .collect();
            let _ = writeln!(s, "{}({}).", r.name, args.join(", "));
        }

        let mut rules = Vec::new();
        if single_stratum && n_idb > 1 {
            let vars = &VARS[..shared_arity];
            for i in 0..n_idb {
                let j = (i + 1) % n_idb;
                rules.push(alloc::format!(
                    "p{}({}) :- p{}({}).",
                    i,
                    vars.join(", "),
                    j,
                    vars.join(", ")
                ));
            }
        }
        for h in n_edb..rels.len() {
            rules.push(random_rule(rng, &rels, h, domain));
        }
        let extra = rng.gen_range(0..=10 - rules.len().min(10));
        for _ in 0..extra {
            let h = rng.gen_range(n_edb..rels.len());
            rules.push(random_rule(rng, &rels, h, domain));
        }
        rules.truncate(10);
        for r in rules {
            let _ = writeln!(s, "{}", r);
        }
        s
    }

    fn random_rule<R: Rng>(rng: &mut R, rels: &[Rel], head: usize, domain: i64) -> String {
        let level = rels[head].level;
        let positive: Vec<usize> = (0..rels.len()).filter(|&i| rels[i].level <= level).collect();
        let lower: Vec<usize> = (0..rels.len()).filter(|&i| rels[i].level < level).collect();
        let mut bound: Vec<&str> = Vec::new();
        let mut parts = Vec::new();
        // the first atom always reads an input relation or a strictly lower
        // level, so every rule has a chance to fire
        let first = *lower.choose(rng).expect("input relations exist");
        let n_body = rng.gen_range(1..=3);
        let mut fresh = 0;
        for k in 0..n_body {
            let r = if k == 0 { first } else { *positive.choose(rng).expect("nonempty") };
            let args: Vec<String> = (0..rels[r].arity)
                .map(|i| {
                    if rng.gen_bool(0.1) {
                        return alloc::format!("{}", rng.gen_range(0..domain));
                    }
                    // later atoms usually join on an earlier variable
                    let v = if !bound.is_empty() && ((k > 0 && i == 0) || rng.gen_bool(0.3)) {
                        *bound.choose(rng).expect("nonempty")
                    } else if fresh < VARS.len() {
                        fresh += 1;
                        VARS[fresh - 1]
                    } else {
                        VARS[rng.gen_range(0..VARS.len())]
                    };
                    if !bound.contains(&v) {
                        bound.push(v);
                    }
                    String::from(v)
                })
                .collect();
            parts.push(alloc::format!("{}({})", rels[r].name, args.join(", ")));
        }
        let term = |rng: &mut R, bound: &[&str]| -> String {
            if bound.is_empty() || rng.gen_bool(0.1) {
                alloc::format!("{}", rng.gen_range(0..domain))
            } else {
                String::from(*bound.choose(rng).expect("nonempty"))
            }
        };
        if rng.gen_bool(0.25) {
            let r = *lower.choose(rng).expect("input relations exist");
            let args: Vec<String> = (0..rels[r].arity).map(|_| term(rng, &bound)).collect();
            parts.push(alloc::format!("!{}({})", rels[r].name, args.join(", ")));
        }
        if !bound.is_empty() && rng.gen_bool(0.3) {
            let lhs = String::from(*bound.choose(rng).expect("nonempty"));
            let rhs = term(rng, &bound);
            parts.push(alloc::format!("{} {} {}", lhs, OPS.choose(rng).expect("nonempty"), rhs));
        }
        let head_args: Vec<String> = (0..rels[head].arity).map(|_| term(rng, &bound)).collect();
        alloc::format!("{}({}) :- {}.", rels[head].name, head_args.join(", "), parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    #[test]
    fn fixtures_parse() {
        for src in [POINTS_TO, POINTS_TO_REFLEXIVE, DELAYED_ASSIGN, TRANSITIVE_CLOSURE] {
            parse_program(src).unwrap();
        }
        let p = parse_program(&tight_bound_program(4)).unwrap();
        assert_eq!(p.rules.len(), 5);
    }
}
