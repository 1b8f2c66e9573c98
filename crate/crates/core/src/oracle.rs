//! Reference semantics, written for obviousness rather than speed.
//!
//! Nothing here touches the engine, the store or the symbol table: tuples
//! are [`GroundAtom`]s, joins are nested loops over whole relations and
//! every round starts from scratch. The only shared piece is the
//! stratification, which the fixpoint needs to know where negation is safe.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::ast::{GroundAtom, Program, RelId, Rule, RuleId, Term};
use crate::explain::{constraint_text, negation_text, ConstraintLeaf, ProofChild, ProofNode};
use crate::strata::{build_precedence_graph, stratify};
use crate::symbols::Constant;

pub type Instance = BTreeSet<GroundAtom>;

/// Tuples with their heights.
pub type Heights = BTreeMap<GroundAtom, u32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_tuples: usize,
    pub max_rounds: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_tuples: 20_000,
            max_rounds: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle budget exceeded")]
    BudgetExceeded,
    #[error("tuple is not derivable")]
    NotDerivable,
    #[error(transparent)]
    Unstratifiable(#[from] crate::error::CyclicNegation),
}

/// The program's inline facts as an instance.
pub fn input_instance(program: &Program) -> Instance {
    program
        .facts
        .iter()
        .map(|f| GroundAtom::new(f.relation, f.args.clone()))
        .collect()
}

/// Inline facts at height 0.
pub fn input_heights(program: &Program) -> Heights {
    input_instance(program).into_iter().map(|t| (t, 0)).collect()
}

fn by_relation(i: &Instance) -> BTreeMap<RelId, Vec<&[Constant]>> {
    let mut m: BTreeMap<RelId, Vec<&[Constant]>> = BTreeMap::new();
    for t in i {
        m.entry(t.relation).or_default().push(&t.args);
    }
    m
}

/// A rule instantiation: head, positive body tuples, and the variable
/// assignment that produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instantiation {
    pub rule: RuleId,
    pub head: GroundAtom,
    pub body: Vec<GroundAtom>,
    pub assignment: Vec<Constant>,
}

fn unify(args: &[Term], tuple: &[Constant], env: &mut [Option<Constant>], trail: &mut Vec<usize>) -> bool {
    for (t, c) in args.iter().zip(tuple) {
        match t {
            Term::Const(k) => {
                if k != c {
                    return false;
                }
            }
            Term::Var(v) => match &env[*v] {
                Some(b) if b != c => return false,
                Some(_) => {}
                None => {
                    env[*v] = Some(c.clone());
                    trail.push(*v);
                }
            },
        }
    }
    true
}

fn ground(args: &[Term], env: &[Option<Constant>]) -> Vec<Constant> {
    args.iter()
        .map(|t| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => env[*v].clone().expect("grounded rule"),
        })
        .collect()
}

fn value(t: &Term, env: &[Option<Constant>]) -> Constant {
    match t {
        Term::Const(c) => c.clone(),
        Term::Var(v) => env[*v].clone().expect("grounded rule"),
    }
}

/// All valid instantiations of `rule` whose positive body lies in
/// `positive`, whose negated atoms are absent from `negative` and whose
/// constraints hold.
pub fn instantiations(rule: &Rule, positive: &Instance, negative: &Instance) -> Vec<Instantiation> {
    let rels = by_relation(positive);
    let mut out = Vec::new();
    let mut env = alloc::vec![None; rule.variables.len()];
    let mut body = Vec::new();
    search(rule, &rels, negative, 0, &mut env, &mut body, &mut out);
    out
}

fn search(
    rule: &Rule,
    rels: &BTreeMap<RelId, Vec<&[Constant]>>,
    negative: &Instance,
    i: usize,
    env: &mut Vec<Option<Constant>>,
    body: &mut Vec<GroundAtom>,
    out: &mut Vec<Instantiation>,
) {
    if i == rule.body.len() {
        for n in &rule.negations {
            if negative.contains(&GroundAtom::new(n.relation, ground(&n.args, env))) {
                return;
            }
        }
        for c in &rule.constraints {
            if !c.op.holds(&value(&c.lhs, env), &value(&c.rhs, env)) {
                return;
            }
        }
        out.push(Instantiation {
            rule: rule.id,
            head: GroundAtom::new(rule.head.relation, ground(&rule.head.args, env)),
            body: body.clone(),
            assignment: env.iter().map(|c| c.clone().expect("grounded rule")).collect(),
        });
        return;
    }
    let atom = &rule.body[i];
    let Some(tuples) = rels.get(&atom.relation) else {
        return;
    };
    for t in tuples {
        let mut trail = Vec::new();
        if unify(&atom.args, t, env, &mut trail) {
            body.push(GroundAtom::new(atom.relation, t.to_vec()));
            search(rule, rels, negative, i + 1, env, body, out);
            body.pop();
        }
        for v in trail {
            env[v] = None;
        }
    }
}

/// One application of the immediate consequence operator for `rules`:
/// the input plus every head of a valid instantiation over it.
pub fn gamma_step(program: &Program, rules: &[RuleId], i: &Instance) -> Instance {
    let mut out = i.clone();
    for &id in rules {
        let rule = program.rule(id).expect("rule id in range");
        for inst in instantiations(rule, i, i) {
            out.insert(inst.head);
        }
    }
    out
}

/// Least model, stratum by stratum, starting from the inline facts.
pub fn naive_fixpoint(program: &Program, budget: Budget) -> Result<Instance, OracleError> {
    naive_fixpoint_from(program, input_instance(program), budget)
}

pub fn naive_fixpoint_from(program: &Program, input: Instance, budget: Budget) -> Result<Instance, OracleError> {
    let strata = stratify(program, &build_precedence_graph(program))?;
    let mut i = input;
    let mut rounds = 0;
    for s in &strata.strata {
        loop {
            rounds += 1;
            if rounds > budget.max_rounds {
                return Err(OracleError::BudgetExceeded);
            }
            let next = gamma_step(program, &s.rules, &i);
            if next.len() > budget.max_tuples {
                return Err(OracleError::BudgetExceeded);
            }
            if next == i {
                break;
            }
            i = next;
        }
    }
    Ok(i)
}

/// Minimal proof heights of every tuple of the least model, computed level
/// by level: `T^0` holds the inputs of height 0, and `T^k` adds every input
/// of height `k` and every head whose body lies in `T^(k-1)`. A tuple's
/// height is the first `k` whose level contains it.
pub fn minimal_heights(program: &Program, inputs: &Heights, budget: Budget) -> Result<Heights, OracleError> {
    let input: Instance = inputs.keys().cloned().collect();
    let model = naive_fixpoint_from(program, input, budget)?;
    let all: Vec<Instantiation> = program
        .rules
        .iter()
        .flat_map(|r| instantiations(r, &model, &model))
        .collect();
    let max_input = inputs.values().copied().max().unwrap_or(0);
    let mut heights: Heights = BTreeMap::new();
    let mut k = 0u32;
    loop {
        let mut added = Vec::new();
        for (t, &h) in inputs {
            if h == k && !heights.contains_key(t) {
                added.push(t.clone());
            }
        }
        if k > 0 {
            for inst in &all {
                if heights.contains_key(&inst.head) {
                    continue;
                }
                if inst.body.iter().all(|b| heights.get(b).is_some_and(|&h| h < k)) {
                    added.push(inst.head.clone());
                }
            }
        }
        for t in added {
            heights.entry(t).or_insert(k);
        }
        if heights.len() == model.len() && k >= max_input {
            break;
        }
        k += 1;
        if k as usize > budget.max_rounds {
            return Err(OracleError::BudgetExceeded);
        }
    }
    Ok(heights)
}

pub fn minimal_height(program: &Program, inputs: &Heights, t: &GroundAtom, budget: Budget) -> Result<u32, OracleError> {
    minimal_heights(program, inputs, budget)?
        .get(t)
        .copied()
        .ok_or(OracleError::NotDerivable)
}

/// A full proof tree of minimal height for `t`, built top-down from the
/// height table: each node uses the first instantiation (in rule order)
/// whose body heights are all below the node's height.
pub fn enumerate_min_proof_tree(
    program: &Program,
    inputs: &Heights,
    t: &GroundAtom,
    budget: Budget,
) -> Result<ProofNode, OracleError> {
    let heights = minimal_heights(program, inputs, budget)?;
    let model: Instance = heights.keys().cloned().collect();
    if !heights.contains_key(t) {
        return Err(OracleError::NotDerivable);
    }
    Ok(build_tree(program, &heights, &model, t))
}

fn build_tree(program: &Program, heights: &Heights, model: &Instance, t: &GroundAtom) -> ProofNode {
    let h = heights[t];
    if h == 0 {
        return ProofNode::leaf(t.clone(), 0, 0);
    }
    for rule in program.rules_for(t.relation) {
        for inst in instantiations(rule, model, model) {
            if inst.head != *t || !inst.body.iter().all(|b| heights[b] < h) {
                continue;
            }
            let mut children: Vec<ProofChild> = inst
                .body
                .iter()
                .map(|b| ProofChild::Tuple(build_tree(program, heights, model, b)))
                .collect();
            for n in &rule.negations {
                let atom = GroundAtom::new(n.relation, ground_with(&n.args, &inst.assignment));
                children.push(ProofChild::Constraint(ConstraintLeaf {
                    text: negation_text(program, &atom),
                    holds: true,
                }));
            }
            for c in &rule.constraints {
                let lhs = value_with(&c.lhs, &inst.assignment);
                let rhs = value_with(&c.rhs, &inst.assignment);
                children.push(ProofChild::Constraint(ConstraintLeaf {
                    text: constraint_text(&lhs, c.op, &rhs),
                    holds: true,
                }));
            }
            return ProofNode {
                tuple: t.clone(),
                rule: rule.id,
                height: h,
                expanded: true,
                children,
            };
        }
    }
    unreachable!("a tuple with a height has a supporting instantiation")
}

fn value_with(t: &Term, a: &[Constant]) -> Constant {
    match t {
        Term::Const(c) => c.clone(),
        Term::Var(v) => a[*v].clone(),
    }
}

fn ground_with(args: &[Term], a: &[Constant]) -> Vec<Constant> {
    args.iter().map(|t| value_with(t, a)).collect()
}

/// Every instantiation over the final model whose `max(body heights) + 1`
/// is strictly below the recorded height of its head. Empty for a correct
/// annotation.
pub fn minimality_violations(program: &Program, heights: &Heights) -> Vec<Instantiation> {
    let model: Instance = heights.keys().cloned().collect();
    program
        .rules
        .iter()
        .flat_map(|r| instantiations(r, &model, &model))
        .filter(|inst| {
            let body = inst.body.iter().map(|b| heights[b]).max().unwrap_or(0);
            body + 1 < heights[&inst.head]
        })
        .collect()
}

/// `(I, h) ⊑ (I', h')`: `I ⊆ I'` and no height grew.
pub fn provenance_le(a: &Heights, b: &Heights) -> bool {
    a.iter().all(|(t, h)| b.get(t).is_some_and(|h2| h2 <= h))
}

/// The provenance ordering as a partial order.
pub fn provenance_cmp(a: &Heights, b: &Heights) -> Option<Ordering> {
    match (provenance_le(a, b), provenance_le(b, a)) {
        (true, true) => Some(Ordering::Equal),
        (true, false) => Some(Ordering::Less),
        (false, true) => Some(Ordering::Greater),
        (false, false) => None,
    }
}

/// Human-readable ground atom for oracle diagnostics.
pub fn describe(program: &Program, t: &GroundAtom) -> String {
    alloc::format!("{}", program.display_ground(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::testing::{POINTS_TO, POINTS_TO_REFLEXIVE};

    fn atom(p: &Program, rel: &str, args: &[&str]) -> GroundAtom {
        p.ground(rel, args.iter().map(|a| Constant::symbol(*a)).collect()).unwrap()
    }

    #[test]
    fn one_gamma_step_applies_r1() {
        let p = parse_program(POINTS_TO).unwrap();
        let i = input_instance(&p);
        let next = gamma_step(&p, &[1, 2, 3, 4], &i);
        let added: Vec<_> = next.difference(&i).cloned().collect();
        assert_eq!(
            added,
            [atom(&p, "vpt", &["a", "l1"]), atom(&p, "vpt", &["c", "l3"]), atom(&p, "vpt", &["d", "l4"])]
        );
        let fix = naive_fixpoint(&p, Budget::default()).unwrap();
        assert_eq!(gamma_step(&p, &[1, 2, 3, 4], &fix), fix);
        assert_eq!(gamma_step(&p, &[], &i), i);
    }

    #[test]
    fn points_to_model_and_heights() {
        let p = parse_program(POINTS_TO).unwrap();
        let fix = naive_fixpoint(&p, Budget::default()).unwrap();
        let idb: Vec<_> = fix.difference(&input_instance(&p)).cloned().collect();
        assert_eq!(idb.len(), 6);
        assert!(fix.contains(&atom(&p, "alias", &["a", "b"])));
        assert!(fix.contains(&atom(&p, "alias", &["b", "a"])));
        let h = minimal_heights(&p, &input_heights(&p), Budget::default()).unwrap();
        assert_eq!(h[&atom(&p, "vpt", &["b", "l1"])], 2);
        assert_eq!(h[&atom(&p, "alias", &["a", "b"])], 3);
        assert_eq!(h[&atom(&p, "new", &["a", "l1"])], 0);
        assert!(minimality_violations(&p, &h).is_empty());
    }

    #[test]
    fn three_chain_closure() {
        let p = parse_program(
            ".decl e(x:number, y:number)\n.decl t(x:number, y:number)\ne(1,2). e(2,3). e(3,4).\nt(X,Y) :- e(X,Y).\nt(X,Z) :- t(X,Y), e(Y,Z).",
        )
        .unwrap();
        let fix = naive_fixpoint(&p, Budget::default()).unwrap();
        assert_eq!(fix.len() - 3, 6);
    }

    #[test]
    fn seeded_assign_height_with_and_without_inequality() {
        let strict = parse_program(POINTS_TO).unwrap();
        let mut inputs = input_heights(&strict);
        inputs.insert(atom(&strict, "assign", &["b", "a"]), 6);
        let t = atom(&strict, "vpt", &["b", "l1"]);
        assert_eq!(minimal_height(&strict, &inputs, &t, Budget::default()), Ok(7));

        let loose = parse_program(POINTS_TO_REFLEXIVE).unwrap();
        let mut inputs = input_heights(&loose);
        inputs.insert(atom(&loose, "assign", &["b", "a"]), 6);
        assert_eq!(minimal_height(&loose, &inputs, &t, Budget::default()), Ok(3));
    }

    #[test]
    fn proof_tree_for_alias() {
        let p = parse_program(POINTS_TO).unwrap();
        let t = atom(&p, "alias", &["a", "b"]);
        let tree = enumerate_min_proof_tree(&p, &input_heights(&p), &t, Budget::default()).unwrap();
        assert_eq!(tree.rule, 4);
        assert_eq!(tree.tree_height(), 3);
        assert_eq!(tree.node_count(), 8);
        let edb = atom(&p, "new", &["a", "l1"]);
        let leaf = enumerate_min_proof_tree(&p, &input_heights(&p), &edb, Budget::default()).unwrap();
        assert!(leaf.children.is_empty());
        assert_eq!(
            minimal_height(&p, &input_heights(&p), &atom(&p, "vpt", &["b", "l4"]), Budget::default()),
            Err(OracleError::NotDerivable)
        );
    }

    #[test]
    fn budget_is_enforced() {
        let p = parse_program(POINTS_TO).unwrap();
        let tiny = Budget {
            max_tuples: 5,
            max_rounds: 100,
        };
        assert_eq!(naive_fixpoint(&p, tiny), Err(OracleError::BudgetExceeded));
    }
}
