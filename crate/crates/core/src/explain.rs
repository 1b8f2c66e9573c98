//! Proof exploration over an evaluated [`Database`].
//!
//! For a stored tuple `t` with annotation `(k, h)` one level of its proof is
//! recovered by a single query against the materialized relations: bind the
//! head of rule `k` to `t` and look for the first body configuration whose
//! tuples all have height below `h`. Minimality of the annotations
//! guarantees such a configuration exists, so repeated levels build a full
//! proof tree of height exactly `h` without any search over alternatives.
//!
//! For an absent tuple the explorer instead lets the user pick a rule and
//! values for the variables the head leaves open, then marks each literal
//! of that instantiation as holding or failing.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::ast::{AttrType, CmpOp, GroundAtom, Program, Rule, RuleId, Term};
use crate::engine::plan::{Exec, JoinPlan};
use crate::engine::{Database, Slot};
use crate::store::Annotation;
use crate::symbols::{Constant, Value};

/// Fragment depth used when a caller does not choose one.
pub const DEFAULT_DEPTH: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintLeaf {
    /// `"a" != "b"` for a comparison, `!rel("c")` for a negated atom.
    pub text: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofChild {
    Tuple(ProofNode),
    Constraint(ConstraintLeaf),
}

/// A node of a (possibly partial) proof tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofNode {
    pub tuple: GroundAtom,
    /// 0 for input tuples.
    pub rule: RuleId,
    pub height: u32,
    /// False for frontier nodes whose children were not computed.
    pub expanded: bool,
    /// Body atoms in rule order, then negated atoms, then constraints.
    pub children: Vec<ProofChild>,
}

impl ProofNode {
    /// A node without children; input tuples count as expanded.
    pub fn leaf(tuple: GroundAtom, rule: RuleId, height: u32) -> Self {
        ProofNode {
            tuple,
            rule,
            height,
            expanded: rule == 0,
            children: Vec::new(),
        }
    }

    pub fn tuple_children(&self) -> impl Iterator<Item = &ProofNode> {
        self.children.iter().filter_map(|c| match c {
            ProofChild::Tuple(n) => Some(n),
            ProofChild::Constraint(_) => None,
        })
    }

    /// Edges on the longest root-to-leaf path.
    pub fn tree_height(&self) -> u32 {
        if self.children.is_empty() {
            return 0;
        }
        1 + self.tuple_children().map(ProofNode::tree_height).max().unwrap_or(0)
    }

    /// Tuple nodes plus constraint leaves.
    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                ProofChild::Tuple(n) => n.node_count(),
                ProofChild::Constraint(_) => 1,
            })
            .sum::<usize>()
    }

    pub fn is_complete(&self) -> bool {
        self.expanded && self.tuple_children().all(ProofNode::is_complete)
    }
}

pub fn constraint_text(lhs: &Constant, op: CmpOp, rhs: &Constant) -> String {
    alloc::format!("{} {} {}", lhs, op.symbol(), rhs)
}

pub fn negation_text(program: &Program, atom: &GroundAtom) -> String {
    alloc::format!("!{}", program.display_ground(atom))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExplainError {
    #[error("tuple {0} does not exist")]
    UnknownTuple(String),
    #[error("tuple {0} is an input tuple and has no subproof")]
    IsEdb(String),
    #[error("no configuration supports {0}; the annotations are inconsistent")]
    NotFound(String),
    #[error("tuple {0} exists; explain it instead")]
    TupleExists(String),
    #[error("rule {0} does not exist")]
    UnknownRule(RuleId),
    #[error("head of rule {rule} does not match {tuple}")]
    HeadMismatch { rule: RuleId, tuple: String },
    #[error("no value given for variable {0}")]
    IncompleteBindings(String),
    #[error("{0} is not a free variable of the rule")]
    UnknownVariable(String),
    #[error("variable {variable} needs a {expected}")]
    BindingType { variable: String, expected: AttrType },
    #[error("evaluation ran without provenance annotations")]
    NoProvenance,
    #[error("the session is not waiting for this input")]
    WrongStep,
}

/// One level below a stored tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subproof {
    pub rule: RuleId,
    pub children: Vec<(GroundAtom, Annotation)>,
    /// Negated atoms, then constraints, all holding.
    pub constraints: Vec<ConstraintLeaf>,
}

/// A rule that could have produced an absent tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub rule: RuleId,
    /// The rule with head variables replaced by the tuple's constants.
    pub text: String,
    pub bindings: Vec<(String, Constant)>,
    pub free: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LiteralKind {
    Atom(GroundAtom),
    Negated(GroundAtom),
    Constraint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedLiteral {
    pub kind: LiteralKind,
    pub text: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailedSubproof {
    pub head: GroundAtom,
    pub rule: RuleId,
    pub literals: Vec<MarkedLiteral>,
}

impl FailedSubproof {
    pub fn failures(&self) -> usize {
        self.literals.iter().filter(|l| !l.holds).count()
    }
}

/// Builds the indexes proof search wants: for every rule, the join order
/// chosen with its head variables bound.
pub fn prepare(db: &mut Database) {
    let mut wanted = Vec::new();
    for rule in db.compiled_rules() {
        let bound = head_bound(rule.nvars, &rule.head.args);
        wanted.extend(JoinPlan::index_requests(rule, None, &bound));
    }
    for (rel, order) in wanted {
        db.store_mut().build_secondary_index(rel, &order);
    }
}

fn head_bound(nvars: usize, head: &[Slot]) -> Vec<bool> {
    let mut bound = alloc::vec![false; nvars];
    for s in head {
        if let Slot::Var(v) = s {
            bound[*v] = true;
        }
    }
    bound
}

/// A variable of a rule that the head does not bind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeVariable {
    pub slot: usize,
    pub name: String,
    pub ty: AttrType,
}

/// Read-only queries over an evaluated database.
#[derive(Clone, Copy)]
pub struct Explorer<'a> {
    db: &'a Database,
}

impl<'a> Explorer<'a> {
    pub fn new(db: &'a Database) -> Self {
        Explorer { db }
    }

    pub fn database(&self) -> &'a Database {
        self.db
    }

    fn program(&self) -> &'a Program {
        self.db.program()
    }

    fn show(&self, t: &GroundAtom) -> String {
        self.program().display_ground(t).to_string()
    }

    fn lookup(&self, t: &GroundAtom) -> Result<(Vec<Value>, Annotation), ExplainError> {
        let unknown = || ExplainError::UnknownTuple(self.show(t));
        let values = self.db.values_of(t).ok_or_else(unknown)?;
        let ann = self
            .db
            .store()
            .relation(t.relation)
            .annotation(&values)
            .ok_or_else(unknown)?;
        Ok((values, ann))
    }

    /// The first body configuration of the tuple's recorded rule whose
    /// tuples all sit strictly below it.
    pub fn subproof(&self, t: &GroundAtom) -> Result<Subproof, ExplainError> {
        if !self.db.options().provenance {
            return Err(ExplainError::NoProvenance);
        }
        let (values, ann) = self.lookup(t)?;
        if ann.rule == 0 {
            return Err(ExplainError::IsEdb(self.show(t)));
        }
        let ri = ann.rule as usize - 1;
        let rule = &self.db.compiled_rules()[ri];
        let corrupt = || ExplainError::NotFound(self.show(t));

        let mut vars = alloc::vec![Value::default(); rule.nvars];
        let mut bound = alloc::vec![false; rule.nvars];
        for (s, v) in rule.head.args.iter().zip(&values) {
            match *s {
                Slot::Const(c) if c != *v => return Err(corrupt()),
                Slot::Const(_) => {}
                Slot::Var(x) if bound[x] && vars[x] != *v => return Err(corrupt()),
                Slot::Var(x) => {
                    vars[x] = *v;
                    bound[x] = true;
                }
            }
        }
        let store = self.db.store();
        let mut resolve = |rel, order: &[usize]| store.relation(rel).find_index(order);
        let sources = alloc::vec![crate::engine::AtomSource::Full; rule.body.len()];
        let plan = JoinPlan::build(ri, rule, None, &sources, &bound, &mut resolve);
        let exec = Exec {
            store,
            deltas: &[],
            epoch: 0,
            height_bound: ann.height,
            provenance: true,
        };
        let mut found: Option<Vec<Value>> = None;
        let mut emit = |vars: &[Value], _maxh: u32| {
            found = Some(vars.to_vec());
            ControlFlow::Break(())
        };
        let _ = exec.run(rule, &plan, 0, &mut vars, 0, &mut emit);
        let vars = found.ok_or_else(corrupt)?;

        let source = self.program().rule(ann.rule).expect("compiled rule has source");
        let mut tuple = Vec::new();
        let children = rule
            .body
            .iter()
            .map(|a| {
                a.instantiate(&vars, &mut tuple);
                let ann = store.relation(a.rel).annotation(&tuple).expect("join hit is stored");
                (self.db.ground(a.rel, &tuple), ann)
            })
            .collect();
        let mut constraints = Vec::new();
        for a in &rule.negations {
            a.instantiate(&vars, &mut tuple);
            let g = self.db.ground(a.rel, &tuple);
            constraints.push(ConstraintLeaf {
                text: negation_text(self.program(), &g),
                holds: true,
            });
        }
        for (c, src) in rule.constraints.iter().zip(&source.constraints) {
            let lhs = self.constant_of(source, &src.lhs, c.lhs.get(&vars));
            let rhs = self.constant_of(source, &src.rhs, c.rhs.get(&vars));
            constraints.push(ConstraintLeaf {
                text: constraint_text(&lhs, c.op, &rhs),
                holds: true,
            });
        }
        Ok(Subproof {
            rule: ann.rule,
            children,
            constraints,
        })
    }

    fn constant_of(&self, rule: &Rule, term: &Term, v: Value) -> Constant {
        match term {
            Term::Const(c) => c.clone(),
            Term::Var(x) => self.db.symbols().constant(v, var_type(self.program(), rule, *x)),
        }
    }

    /// A proof fragment of `depth` levels below `t`. Depth 0 returns the
    /// bare node; `usize::MAX` expands everything.
    pub fn explain(&self, t: &GroundAtom, depth: usize) -> Result<ProofNode, ExplainError> {
        if !self.db.options().provenance {
            return Err(ExplainError::NoProvenance);
        }
        let (_, ann) = self.lookup(t)?;
        self.node(t.clone(), ann, depth)
    }

    /// One level below `t`: children are unexpanded unless they are inputs.
    pub fn expand(&self, t: &GroundAtom) -> Result<ProofNode, ExplainError> {
        self.explain(t, 1)
    }

    fn node(&self, t: GroundAtom, ann: Annotation, depth: usize) -> Result<ProofNode, ExplainError> {
        if ann.rule == 0 || depth == 0 {
            return Ok(ProofNode::leaf(t, ann.rule, ann.height));
        }
        let sub = self.subproof(&t)?;
        let mut children = Vec::with_capacity(sub.children.len() + sub.constraints.len());
        for (c, a) in sub.children {
            children.push(ProofChild::Tuple(self.node(c, a, depth - 1)?));
        }
        children.extend(sub.constraints.into_iter().map(ProofChild::Constraint));
        Ok(ProofNode {
            tuple: t,
            rule: ann.rule,
            height: ann.height,
            expanded: true,
            children,
        })
    }

    /// Re-checks a fragment against the program and the store: every
    /// expanded node must be an instantiation of its rule with holding
    /// negations and constraints, every child must be stored with the
    /// recorded annotation, and a node's height must be exactly one above
    /// its highest child.
    pub fn verify(&self, node: &ProofNode) -> Result<(), String> {
        let (_, ann) = self.lookup(&node.tuple).map_err(|e| e.to_string())?;
        if ann.rule != node.rule || ann.height != node.height {
            return Err(alloc::format!("{}: annotation differs from store", self.show(&node.tuple)));
        }
        if !node.expanded {
            return if node.children.is_empty() {
                Ok(())
            } else {
                Err(String::from("unexpanded node has children"))
            };
        }
        if node.rule == 0 {
            return if node.children.is_empty() {
                Ok(())
            } else {
                Err(alloc::format!("{}: input tuple with children", self.show(&node.tuple)))
            };
        }
        let rule = self
            .program()
            .rule(node.rule)
            .ok_or_else(|| alloc::format!("unknown rule {}", node.rule))?;
        let tuples: Vec<&ProofNode> = node.tuple_children().collect();
        let leaves: Vec<&ConstraintLeaf> = node
            .children
            .iter()
            .filter_map(|c| match c {
                ProofChild::Constraint(l) => Some(l),
                ProofChild::Tuple(_) => None,
            })
            .collect();
        if tuples.len() != rule.body.len() || leaves.len() != rule.negations.len() + rule.constraints.len() {
            return Err(alloc::format!("{}: child count does not match rule {}", self.show(&node.tuple), rule.id));
        }
        let mut env: Vec<Option<Constant>> = alloc::vec![None; rule.variables.len()];
        let mut ok = bind(&rule.head.args, &node.tuple.args, &mut env) && rule.head.relation == node.tuple.relation;
        for (a, c) in rule.body.iter().zip(&tuples) {
            ok &= a.relation == c.tuple.relation && bind(&a.args, &c.tuple.args, &mut env);
        }
        if !ok {
            return Err(alloc::format!("{}: children do not instantiate rule {}", self.show(&node.tuple), rule.id));
        }
        let get = |t: &Term| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => env[*v].clone().expect("grounded"),
        };
        for (n, leaf) in rule.negations.iter().zip(&leaves) {
            let g = GroundAtom::new(n.relation, n.args.iter().map(get).collect());
            if self.db.contains(&g) || leaf.text != negation_text(self.program(), &g) {
                return Err(alloc::format!("negation {} fails", leaf.text));
            }
        }
        for (c, leaf) in rule.constraints.iter().zip(&leaves[rule.negations.len()..]) {
            let (l, r) = (get(&c.lhs), get(&c.rhs));
            if !c.op.holds(&l, &r) || leaf.text != constraint_text(&l, c.op, &r) {
                return Err(alloc::format!("constraint {} fails", leaf.text));
            }
        }
        let top = tuples.iter().map(|c| c.height).max().unwrap_or(0);
        if top + 1 != node.height {
            return Err(alloc::format!("{}: height is not one above its highest child", self.show(&node.tuple)));
        }
        for c in &tuples {
            if c.height >= node.height {
                return Err(alloc::format!("{}: child height not below parent", self.show(&c.tuple)));
            }
            self.verify(c)?;
        }
        Ok(())
    }

    /// Rules whose head can produce `t`, with the head's bindings applied.
    pub fn negation_candidates(&self, t: &GroundAtom) -> Result<Vec<Candidate>, ExplainError> {
        if self.db.contains(t) {
            return Err(ExplainError::TupleExists(self.show(t)));
        }
        let program = self.program();
        let mut out = Vec::new();
        for rule in program.rules_for(t.relation) {
            let mut env = alloc::vec![None; rule.variables.len()];
            if !bind(&rule.head.args, &t.args, &mut env) {
                continue;
            }
            let bindings = head_vars(rule)
                .into_iter()
                .map(|v| (String::from(rule.var_name(v)), env[v].clone().expect("bound by head")))
                .collect();
            let free = free_variables(program, rule).into_iter().map(|f| f.name).collect();
            out.push(Candidate {
                rule: rule.id,
                text: instantiated_text(program, rule, &env),
                bindings,
                free,
            });
        }
        Ok(out)
    }

    /// Body variables of `rule` that unifying its head with `t` leaves open,
    /// in order of first occurrence.
    pub fn negation_free_variables(&self, rule: RuleId, t: &GroundAtom) -> Result<Vec<FreeVariable>, ExplainError> {
        let r = self.program().rule(rule).ok_or(ExplainError::UnknownRule(rule))?;
        let mut env = alloc::vec![None; r.variables.len()];
        if r.head.relation != t.relation || !bind(&r.head.args, &t.args, &mut env) {
            return Err(ExplainError::HeadMismatch {
                rule,
                tuple: self.show(t),
            });
        }
        Ok(free_variables(self.program(), r))
    }

    /// Instantiates `rule` for the absent `t` with `bindings` for its free
    /// variables and marks every literal as holding or failing.
    pub fn evaluate_failed_subproof(
        &self,
        rule: RuleId,
        t: &GroundAtom,
        bindings: &BTreeMap<String, Constant>,
    ) -> Result<FailedSubproof, ExplainError> {
        if self.db.contains(t) {
            return Err(ExplainError::TupleExists(self.show(t)));
        }
        let free = self.negation_free_variables(rule, t)?;
        let program = self.program();
        let r = program.rule(rule).expect("checked above");
        for name in bindings.keys() {
            if !free.iter().any(|f| &f.name == name) {
                return Err(ExplainError::UnknownVariable(name.clone()));
            }
        }
        let mut env = alloc::vec![None; r.variables.len()];
        bind(&r.head.args, &t.args, &mut env);
        for f in &free {
            let c = bindings
                .get(&f.name)
                .ok_or_else(|| ExplainError::IncompleteBindings(f.name.clone()))?;
            if c.attr_type() != f.ty {
                return Err(ExplainError::BindingType {
                    variable: f.name.clone(),
                    expected: f.ty,
                });
            }
            env[f.slot] = Some(c.clone());
        }
        let get = |t: &Term| match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => env[*v].clone().expect("all variables bound"),
        };
        let mut literals = Vec::new();
        for a in &r.body {
            let g = GroundAtom::new(a.relation, a.args.iter().map(get).collect());
            literals.push(MarkedLiteral {
                text: program.display_ground(&g).to_string(),
                holds: self.db.contains(&g),
                kind: LiteralKind::Atom(g),
            });
        }
        for a in &r.negations {
            let g = GroundAtom::new(a.relation, a.args.iter().map(get).collect());
            literals.push(MarkedLiteral {
                text: negation_text(program, &g),
                holds: !self.db.contains(&g),
                kind: LiteralKind::Negated(g),
            });
        }
        for c in &r.constraints {
            let (l, rhs) = (get(&c.lhs), get(&c.rhs));
            literals.push(MarkedLiteral {
                text: constraint_text(&l, c.op, &rhs),
                holds: c.op.holds(&l, &rhs),
                kind: LiteralKind::Constraint,
            });
        }
        let result = FailedSubproof {
            head: t.clone(),
            rule,
            literals,
        };
        if result.failures() == 0 {
            return Err(ExplainError::NotFound(self.show(t)));
        }
        Ok(result)
    }
}

fn bind(args: &[Term], values: &[Constant], env: &mut [Option<Constant>]) -> bool {
    if args.len() != values.len() {
        return false;
    }
    for (t, c) in args.iter().zip(values) {
        match t {
            Term::Const(k) if k != c => return false,
            Term::Const(_) => {}
            Term::Var(v) => match &env[*v] {
                Some(b) if b != c => return false,
                Some(_) => {}
                None => env[*v] = Some(c.clone()),
            },
        }
    }
    true
}

fn head_vars(rule: &Rule) -> Vec<usize> {
    let mut seen = Vec::new();
    for v in rule.head.vars() {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen
}

fn var_type(program: &Program, rule: &Rule, v: usize) -> AttrType {
    for a in rule.body.iter().chain(core::iter::once(&rule.head)) {
        let decl = program.relation(a.relation);
        for (t, ty) in a.args.iter().zip(decl.types()) {
            if *t == Term::Var(v) {
                return ty;
            }
        }
    }
    AttrType::Number
}

fn display_name(rule: &Rule, v: usize) -> String {
    let name = rule.var_name(v);
    if name != "_" {
        return String::from(name);
    }
    let ordinal = rule.variables[..=v].iter().filter(|n| *n == "_").count();
    alloc::format!("_{}", ordinal)
}

fn free_variables(program: &Program, rule: &Rule) -> Vec<FreeVariable> {
    let bound = head_vars(rule);
    let mut out: Vec<FreeVariable> = Vec::new();
    for v in rule.body.iter().flat_map(|a| a.vars()) {
        if !bound.contains(&v) && !out.iter().any(|f| f.slot == v) {
            out.push(FreeVariable {
                slot: v,
                name: display_name(rule, v),
                ty: var_type(program, rule, v),
            });
        }
    }
    out
}

fn instantiated_text(program: &Program, rule: &Rule, env: &[Option<Constant>]) -> String {
    let term = |t: &Term| match t {
        Term::Const(c) => c.to_string(),
        Term::Var(v) => match &env[*v] {
            Some(c) => c.to_string(),
            None => display_name(rule, *v),
        },
    };
    let atom = |a: &crate::ast::Atom| {
        let args: Vec<String> = a.args.iter().map(term).collect();
        alloc::format!("{}({})", program.relation(a.relation).name, args.join(", "))
    };
    let mut parts: Vec<String> = rule.body.iter().map(atom).collect();
    parts.extend(rule.negations.iter().map(|a| alloc::format!("!{}", atom(a))));
    parts.extend(
        rule.constraints
            .iter()
            .map(|c| alloc::format!("{} {} {}", term(&c.lhs), c.op.symbol(), term(&c.rhs))),
    );
    alloc::format!("{} :- {}.", atom(&rule.head), parts.join(", "))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionStep {
    PickRule,
    BindVariables,
    Done,
}

/// The three-step dialogue for an absent tuple: pick a candidate rule,
/// supply values for its free variables, read the marked instantiation.
#[derive(Clone, Debug)]
pub struct NegationSession {
    pub target: GroundAtom,
    pub step: SessionStep,
    pub candidates: Vec<Candidate>,
    pub rule: Option<RuleId>,
    pub bindings: BTreeMap<String, Constant>,
    pub remaining: Vec<FreeVariable>,
    pub result: Option<FailedSubproof>,
}

impl NegationSession {
    pub fn start(ex: &Explorer<'_>, target: GroundAtom) -> Result<Self, ExplainError> {
        let candidates = ex.negation_candidates(&target)?;
        Ok(NegationSession {
            target,
            step: SessionStep::PickRule,
            candidates,
            rule: None,
            bindings: BTreeMap::new(),
            remaining: Vec::new(),
            result: None,
        })
    }

    pub fn pick_rule(&mut self, ex: &Explorer<'_>, rule: RuleId) -> Result<(), ExplainError> {
        if self.step != SessionStep::PickRule {
            return Err(ExplainError::WrongStep);
        }
        if !self.candidates.iter().any(|c| c.rule == rule) {
            return Err(ExplainError::UnknownRule(rule));
        }
        self.remaining = ex.negation_free_variables(rule, &self.target)?;
        self.rule = Some(rule);
        self.step = SessionStep::BindVariables;
        self.finish_if_bound(ex)
    }

    /// The variable the next [`NegationSession::bind`] call assigns.
    pub fn next_variable(&self) -> Option<&FreeVariable> {
        match self.step {
            SessionStep::BindVariables => self.remaining.first(),
            _ => None,
        }
    }

    pub fn bind(&mut self, ex: &Explorer<'_>, value: Constant) -> Result<(), ExplainError> {
        let var = self.next_variable().ok_or(ExplainError::WrongStep)?.clone();
        if value.attr_type() != var.ty {
            return Err(ExplainError::BindingType {
                variable: var.name,
                expected: var.ty,
            });
        }
        self.bindings.insert(var.name, value);
        self.remaining.remove(0);
        self.finish_if_bound(ex)
    }

    /// Binds user text: symbols may be given bare or double-quoted, numbers
    /// as decimal integers.
    pub fn bind_text(&mut self, ex: &Explorer<'_>, text: &str) -> Result<(), ExplainError> {
        let var = self.next_variable().ok_or(ExplainError::WrongStep)?;
        let text = text.trim();
        let value = match var.ty {
            AttrType::Symbol => Constant::symbol(
                text.strip_prefix('"')
                    .and_then(|t| t.strip_suffix('"'))
                    .unwrap_or(text),
            ),
            AttrType::Number => Constant::Number(text.parse().map_err(|_| ExplainError::BindingType {
                variable: var.name.clone(),
                expected: var.ty,
            })?),
        };
        self.bind(ex, value)
    }

    fn finish_if_bound(&mut self, ex: &Explorer<'_>) -> Result<(), ExplainError> {
        if self.remaining.is_empty() {
            let rule = self.rule.expect("rule picked");
            self.result = Some(ex.evaluate_failed_subproof(rule, &self.target, &self.bindings)?);
            self.step = SessionStep::Done;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Options;
    use crate::parser::parse_program;
    use crate::testing::POINTS_TO;

    fn db() -> Database {
        let mut db = Database::new(parse_program(POINTS_TO).unwrap(), Options::default()).unwrap();
        db.evaluate().unwrap();
        prepare(&mut db);
        db
    }

    fn atom(db: &Database, rel: &str, args: &[&str]) -> GroundAtom {
        db.program()
            .ground(rel, args.iter().map(|a| Constant::symbol(*a)).collect())
            .unwrap()
    }

    #[test]
    fn alias_subproof() {
        let db = db();
        let ex = Explorer::new(&db);
        let sub = ex.subproof(&atom(&db, "alias", &["a", "b"])).unwrap();
        assert_eq!(sub.rule, 4);
        assert_eq!(
            sub.children,
            [
                (atom(&db, "vpt", &["a", "l1"]), Annotation::new(1, 1)),
                (atom(&db, "vpt", &["b", "l1"]), Annotation::new(2, 2)),
            ]
        );
        assert_eq!(
            sub.constraints,
            [ConstraintLeaf {
                text: String::from("\"a\" != \"b\""),
                holds: true
            }]
        );
        assert_eq!(
            ex.subproof(&atom(&db, "new", &["a", "l1"])),
            Err(ExplainError::IsEdb(String::from("new(\"a\", \"l1\")")))
        );
        let vpt = ex.subproof(&atom(&db, "vpt", &["b", "l1"])).unwrap();
        assert_eq!(
            vpt.children,
            [
                (atom(&db, "assign", &["b", "a"]), Annotation::EDB),
                (atom(&db, "vpt", &["a", "l1"]), Annotation::new(1, 1)),
            ]
        );
    }

    #[test]
    fn full_and_partial_fragments() {
        let db = db();
        let ex = Explorer::new(&db);
        let t = atom(&db, "alias", &["a", "b"]);
        let full = ex.explain(&t, usize::MAX).unwrap();
        assert_eq!(full.tree_height(), 3);
        assert_eq!(full.node_count(), 8);
        assert!(full.is_complete());
        ex.verify(&full).unwrap();

        let one = ex.explain(&t, 1).unwrap();
        assert_eq!(one.children.len(), 3);
        assert!(one.tuple_children().all(|c| !c.expanded && c.children.is_empty()));
        assert_eq!(one.tuple_children().map(|c| c.height).collect::<Vec<_>>(), [1, 2]);
        ex.verify(&one).unwrap();

        let two = ex.explain(&t, 2).unwrap();
        let vpt_b = two.tuple_children().nth(1).unwrap();
        assert!(vpt_b.expanded);
        assert!(!vpt_b.tuple_children().nth(1).unwrap().expanded);

        let edb = ex.explain(&atom(&db, "new", &["a", "l1"]), 4).unwrap();
        assert_eq!(edb.node_count(), 1);
        assert!(matches!(
            ex.explain(&atom(&db, "vpt", &["b", "l4"]), 1),
            Err(ExplainError::UnknownTuple(_))
        ));
    }

    #[test]
    fn candidates_and_free_variables() {
        let db = db();
        let ex = Explorer::new(&db);
        let t = atom(&db, "vpt", &["b", "l4"]);
        let c = ex.negation_candidates(&t).unwrap();
        assert_eq!(c.iter().map(|c| c.rule).collect::<Vec<_>>(), [1, 2, 3]);
        assert_eq!(c[1].text, "vpt(\"b\", \"l4\") :- assign(\"b\", Var2), vpt(Var2, \"l4\").");
        let names = |r| {
            ex.negation_free_variables(r, &t)
                .unwrap()
                .into_iter()
                .map(|f| f.name)
                .collect::<Vec<_>>()
        };
        assert_eq!(names(2), ["Var2"]);
        assert!(names(1).is_empty());
        assert_eq!(names(3), ["Y", "F", "P", "Q"]);

        let xy = atom(&db, "alias", &["x", "y"]);
        let c = ex.negation_candidates(&xy).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(
            c[0].bindings,
            [
                (String::from("Var1"), Constant::symbol("x")),
                (String::from("Var2"), Constant::symbol("y"))
            ]
        );
        assert!(matches!(
            ex.negation_candidates(&atom(&db, "vpt", &["a", "l1"])),
            Err(ExplainError::TupleExists(_))
        ));
    }

    #[test]
    fn failed_subproofs() {
        let db = db();
        let ex = Explorer::new(&db);
        let t = atom(&db, "vpt", &["b", "l4"]);
        let marks = |rule, var: Option<&str>| {
            let mut b = BTreeMap::new();
            if let Some(v) = var {
                b.insert(String::from("Var2"), Constant::symbol(v));
            }
            ex.evaluate_failed_subproof(rule, &t, &b)
                .unwrap()
                .literals
                .into_iter()
                .map(|l| (l.text, l.holds))
                .collect::<Vec<_>>()
        };
        assert_eq!(
            marks(2, Some("d")),
            [
                (String::from("assign(\"b\", \"d\")"), false),
                (String::from("vpt(\"d\", \"l4\")"), true)
            ]
        );
        assert_eq!(marks(1, None), [(String::from("new(\"b\", \"l4\")"), false)]);
        assert_eq!(
            marks(2, Some("a")),
            [
                (String::from("assign(\"b\", \"a\")"), true),
                (String::from("vpt(\"a\", \"l4\")"), false)
            ]
        );
        assert_eq!(
            ex.evaluate_failed_subproof(2, &t, &BTreeMap::new()),
            Err(ExplainError::IncompleteBindings(String::from("Var2")))
        );
    }

    #[test]
    fn session_walks_forward() {
        let db = db();
        let ex = Explorer::new(&db);
        let mut s = NegationSession::start(&ex, atom(&db, "vpt", &["b", "l4"])).unwrap();
        assert_eq!(s.step, SessionStep::PickRule);
        assert_eq!(s.bind_text(&ex, "d"), Err(ExplainError::WrongStep));
        s.pick_rule(&ex, 2).unwrap();
        assert_eq!(s.step, SessionStep::BindVariables);
        assert_eq!(s.next_variable().unwrap().name, "Var2");
        s.bind_text(&ex, "\"d\"").unwrap();
        assert_eq!(s.step, SessionStep::Done);
        assert_eq!(s.result.as_ref().unwrap().failures(), 1);
        assert_eq!(s.pick_rule(&ex, 1), Err(ExplainError::WrongStep));

        let mut s = NegationSession::start(&ex, atom(&db, "vpt", &["b", "l4"])).unwrap();
        s.pick_rule(&ex, 1).unwrap();
        assert_eq!(s.step, SessionStep::Done);
    }

    #[test]
    fn wildcards_get_ordinal_names() {
        let p = parse_program(".decl e(x:number, y:number)\n.decl s(x:number)\ne(1, 2).\ns(X) :- e(X, _), e(_, X).")
            .unwrap();
        let mut db = Database::new(p, Options::default()).unwrap();
        db.evaluate().unwrap();
        let ex = Explorer::new(&db);
        let t = db.program().ground("s", alloc::vec![Constant::Number(7)]).unwrap();
        let names: Vec<String> = ex
            .negation_free_variables(1, &t)
            .unwrap()
            .into_iter()
            .map(|f| f.name)
            .collect();
        assert_eq!(names, ["_1", "_2"]);
    }
}
