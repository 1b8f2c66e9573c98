//! Stratified semi-naive evaluation with proof annotations.
//!
//! Every rule is evaluated as if rewritten to
//! `R(X, k, max(h1, .., hn) + 1) :- R1(X1, h1), .., Rn(Xn, hn)`. A derived
//! head is offered to the iteration's `new` buffer only when the stored
//! relation lacks the tuple or holds it with a strictly larger height; the
//! buffer itself keeps the minimum over all derivations. Merging `new` into
//! the relation yields the next delta, which therefore contains both fresh
//! tuples and tuples whose height went down.

mod compile;
pub(crate) mod plan;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::ops::ControlFlow;

pub use plan::AtomSource;

pub(crate) use compile::{CompiledRule, Slot};
use plan::{DeltaList, Exec, JoinPlan};

use crate::ast::{AttrType, GroundAtom, Program, RelId, RuleId};
use crate::error::CyclicNegation;
use crate::store::{AnnotatedStore, Annotation, InsertOutcome};
use crate::strata::{build_precedence_graph, stratify, Stratification};
use crate::symbols::{Constant, SymbolTable, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    /// Track rule ids and heights. Off gives plain semi-naive evaluation.
    pub provenance: bool,
    /// Worker threads per iteration; 1 is the deterministic reference mode.
    pub jobs: usize,
    /// Keep a log of every insert and annotation update.
    pub record_history: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            provenance: true,
            jobs: 1,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Fixpoint iterations per stratum (0 for strata without rules).
    pub iterations: Vec<u32>,
    /// Derivations that inserted a tuple or lowered an annotation.
    pub rule_firings: u64,
    pub annotation_updates: u64,
    pub max_height: u32,
    /// Tuples inserted by rules.
    pub derived_tuples: u64,
}

impl EvalStats {
    /// Updates never exceed `n * max_height`: each one lowers some tuple's
    /// height by at least one and heights stay above zero.
    pub fn update_bound_holds(&self) -> bool {
        update_count_bound_check(self, self.derived_tuples, self.max_height)
    }
}

pub fn update_count_bound_check(stats: &EvalStats, n: u64, max_height: u32) -> bool {
    stats.annotation_updates <= n.saturating_mul(u64::from(max_height))
}

/// One accepted change to the store.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeEvent {
    pub stratum: usize,
    /// 0 for the non-recursive round that opens a stratum.
    pub iteration: u32,
    pub relation: RelId,
    pub tuple: Vec<Value>,
    pub previous: Option<Annotation>,
    pub annotation: Annotation,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Unstratifiable(#[from] CyclicNegation),
    #[error("fact for `{relation}` does not match its declaration: {detail}")]
    FactMismatch { relation: String, detail: String },
    #[error("program was already evaluated")]
    AlreadyEvaluated,
}

/// A rule's evaluation variant: which body atom reads the delta and which
/// read the stable or full relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaVariant {
    pub rule: RuleId,
    /// `None` for a rule with no body atom in its own stratum; it runs once.
    pub delta_atom: Option<usize>,
    pub sources: Vec<AtomSource>,
}

/// One variant per body atom whose relation lives in the rule's stratum.
/// Atoms left of the delta atom read the stable part, atoms right of it the
/// full relation, so each instantiation that touches the previous delta is
/// enumerated once.
pub fn seminaive_delta_rules(program: &Program, strata: &Stratification, rule: RuleId) -> Vec<DeltaVariant> {
    let r = program.rule(rule).expect("unknown rule id");
    let here = strata.stratum_of(r.head.relation);
    let recursive: Vec<bool> = r
        .body
        .iter()
        .map(|a| strata.stratum_of(a.relation) == here)
        .collect();
    if !recursive.iter().any(|x| *x) {
        return alloc::vec![DeltaVariant {
            rule,
            delta_atom: None,
            sources: alloc::vec![AtomSource::Full; r.body.len()],
        }];
    }
    (0..r.body.len())
        .filter(|&j| recursive[j])
        .map(|j| DeltaVariant {
            rule,
            delta_atom: Some(j),
            sources: (0..r.body.len())
                .map(|p| {
                    if p == j {
                        AtomSource::Delta
                    } else if p < j && recursive[p] {
                        AtomSource::Stable
                    } else {
                        AtomSource::Full
                    }
                })
                .collect(),
        })
        .collect()
}

/// The annotation-carrying form of a rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstrumentedRule {
    pub rule: RuleId,
    /// Positive body positions whose heights feed `max(..) + 1`.
    pub height_inputs: Vec<usize>,
}

pub fn instrument_rules(program: &Program) -> Vec<InstrumentedRule> {
    program
        .rules
        .iter()
        .map(|r| InstrumentedRule {
            rule: r.id,
            height_inputs: (0..r.body.len()).collect(),
        })
        .collect()
}

/// Textual form of the instrumented rules, one per line.
pub fn dump_instrumented(program: &Program) -> String {
    let mut out = String::new();
    for ir in instrument_rules(program) {
        let r = program.rule(ir.rule).expect("instrumented rule exists");
        let hs: Vec<String> = ir.height_inputs.iter().map(|i| alloc::format!("@h{}", i)).collect();
        let head = program.display_atom(r, &r.head).to_string();
        let _ = write!(
            out,
            "{}, @rule={}, @height=max({})+1) :- ",
            &head[..head.len() - 1],
            r.id,
            hs.join(", ")
        );
        let mut parts: Vec<String> = Vec::new();
        for (i, a) in r.body.iter().enumerate() {
            let t = program.display_atom(r, a).to_string();
            parts.push(alloc::format!("{}, _, @h{})", &t[..t.len() - 1], i));
        }
        for a in &r.negations {
            parts.push(alloc::format!("!{}", program.display_atom(r, a).to_string()));
        }
        for c in &r.constraints {
            let mut s = String::new();
            let term = |t: &crate::ast::Term| match t {
                crate::ast::Term::Var(v) => String::from(r.var_name(*v)),
                crate::ast::Term::Const(c) => alloc::format!("{}", c),
            };
            let _ = write!(s, "{} {} {}", term(&c.lhs), c.op.symbol(), term(&c.rhs));
            parts.push(s);
        }
        let _ = writeln!(out, "{}.", parts.join(", "));
    }
    out
}

/// A program, its facts and (after [`Database::evaluate`]) the annotated
/// fixpoint.
#[derive(Clone, Debug)]
pub struct Database {
    program: Program,
    symbols: SymbolTable,
    strata: Stratification,
    rules: Vec<CompiledRule>,
    store: AnnotatedStore,
    options: Options,
    stats: EvalStats,
    history: Vec<MergeEvent>,
    evaluated: bool,
}

impl Database {
    /// Stratifies and compiles `program` and loads its inline facts.
    pub fn new(program: Program, options: Options) -> Result<Self, EvalError> {
        let mut db = Database::without_facts(program, options)?;
        let facts = core::mem::take(&mut db.program.facts);
        for f in &facts {
            db.insert_fact(f.relation, &f.args)?;
        }
        db.program.facts = facts;
        Ok(db)
    }

    /// Like [`Database::new`] but leaves the inline facts unloaded, so the
    /// caller can insert them with heights of its choosing.
    pub fn without_facts(program: Program, options: Options) -> Result<Self, EvalError> {
        let strata = stratify(&program, &build_precedence_graph(&program))?;
        let mut symbols = SymbolTable::new();
        let rules = compile::compile_program(&program, &mut symbols);
        let store = AnnotatedStore::new(&program, options.provenance);
        Ok(Database {
            stats: EvalStats {
                iterations: alloc::vec![0; strata.strata.len()],
                ..EvalStats::default()
            },
            program,
            symbols,
            strata,
            rules,
            store,
            options,
            history: Vec::new(),
            evaluated: false,
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn symbols_mut(&mut self) -> &mut SymbolTable {
        &mut self.symbols
    }

    pub fn store(&self) -> &AnnotatedStore {
        &self.store
    }

    pub fn strata(&self) -> &Stratification {
        &self.strata
    }

    pub fn stats(&self) -> &EvalStats {
        &self.stats
    }

    pub fn options(&self) -> &Options {
        &self.options
    }

    pub fn history(&self) -> &[MergeEvent] {
        &self.history
    }

    pub fn is_evaluated(&self) -> bool {
        self.evaluated
    }

    pub(crate) fn compiled_rules(&self) -> &[CompiledRule] {
        &self.rules
    }

    pub(crate) fn store_mut(&mut self) -> &mut AnnotatedStore {
        &mut self.store
    }

    pub fn insert_fact(&mut self, rel: RelId, args: &[Constant]) -> Result<(), EvalError> {
        self.insert_fact_with_height(rel, args, 0)
    }

    /// Loads an input tuple that behaves as if its minimal proof had the
    /// given height (rule id stays 0).
    pub fn insert_fact_with_height(&mut self, rel: RelId, args: &[Constant], height: u32) -> Result<(), EvalError> {
        if self.evaluated {
            return Err(EvalError::AlreadyEvaluated);
        }
        let decl = self.program.relation(rel);
        if args.len() != decl.arity() {
            return Err(EvalError::FactMismatch {
                relation: decl.name.clone(),
                detail: alloc::format!("expected {} values, found {}", decl.arity(), args.len()),
            });
        }
        for (c, ty) in args.iter().zip(decl.types()) {
            if c.attr_type() != ty {
                return Err(EvalError::FactMismatch {
                    relation: decl.name.clone(),
                    detail: alloc::format!("{} is not a {}", c, ty),
                });
            }
        }
        let values: Vec<Value> = args.iter().map(|c| self.symbols.intern_constant(c)).collect();
        self.store
            .insert_or_minimize(rel, &values, Annotation::new(0, height));
        self.stats.max_height = self.stats.max_height.max(height);
        Ok(())
    }

    /// Interned form of a ground atom, or `None` if it names a symbol that
    /// never occurred (such a tuple cannot be stored).
    pub fn values_of(&self, atom: &GroundAtom) -> Option<Vec<Value>> {
        atom.args.iter().map(|c| self.symbols.value_of(c)).collect()
    }

    pub fn ground(&self, rel: RelId, values: &[Value]) -> GroundAtom {
        let decl = self.program.relation(rel);
        GroundAtom::new(
            rel,
            values
                .iter()
                .zip(decl.types())
                .map(|(v, ty)| self.symbols.constant(*v, ty))
                .collect(),
        )
    }

    pub fn annotation_of(&self, atom: &GroundAtom) -> Option<Annotation> {
        let values = self.values_of(atom)?;
        self.store.relation(atom.relation).annotation(&values)
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.values_of(atom)
            .is_some_and(|v| self.store.relation(atom.relation).contains(&v))
    }

    /// Every stored tuple of a relation as ground atoms, in index order.
    pub fn tuples(&self, rel: RelId) -> Vec<(GroundAtom, Annotation)> {
        self.store
            .relation(rel)
            .iter()
            .map(|(t, a)| (self.ground(rel, t), a))
            .collect()
    }

    pub fn attr_types(&self, rel: RelId) -> Vec<AttrType> {
        self.program.relation(rel).types().collect()
    }

    /// Evaluates all strata in order. Can run once.
    pub fn evaluate(&mut self) -> Result<&EvalStats, EvalError> {
        if self.evaluated {
            return Err(EvalError::AlreadyEvaluated);
        }
        self.evaluated = true;
        let mut epoch = 0u32;
        for s in 0..self.strata.strata.len() {
            self.evaluate_stratum(s, &mut epoch);
        }
        Ok(&self.stats)
    }

    fn evaluate_stratum(&mut self, s: usize, epoch: &mut u32) {
        let stratum = self.strata.strata[s].clone();
        if stratum.rules.is_empty() {
            return;
        }
        let mut once: Vec<JoinPlan> = Vec::new();
        let mut recursive: Vec<JoinPlan> = Vec::new();
        for &rid in &stratum.rules {
            let ri = rid as usize - 1;
            let rule = &self.rules[ri];
            for v in seminaive_delta_rules(&self.program, &self.strata, rid) {
                for (rel, order) in JoinPlan::index_requests(rule, v.delta_atom, &[]) {
                    self.store.build_secondary_index(rel, &order);
                }
                let store = &self.store;
                let mut resolve = |rel: RelId, order: &[usize]| store.relation(rel).find_index(order);
                let plan = JoinPlan::build(ri, rule, v.delta_atom, &v.sources, &[], &mut resolve);
                if v.delta_atom.is_some() {
                    recursive.push(plan);
                } else {
                    once.push(plan);
                }
            }
        }

        let nrel = self.program.relations.len();
        let mut deltas: Vec<DeltaList> = (0..nrel).map(|_| Vec::new()).collect();
        *epoch += 1;
        // input tuples of this stratum's relations seed the first delta
        for &rel in &stratum.relations {
            let seeded: DeltaList = self
                .store
                .relation(rel)
                .index_range(crate::store::IndexId::PRIMARY, &[])
                .map(|(t, slot)| (Box::<[Value]>::from(t), slot))
                .collect();
            let r = self.store.relation_mut(rel);
            for (_, slot) in &seeded {
                r.mark(*slot, *epoch);
            }
            deltas[rel.0] = seeded;
        }

        let new = self.run_plans(&once, &deltas, *epoch);
        let opening = self.merge(s, 0, new, *epoch);
        for (rel, list) in opening.into_iter().enumerate() {
            deltas[rel].extend(list);
        }
        let mut iterations = 1;
        while deltas.iter().any(|d| !d.is_empty()) {
            let new = self.run_plans(&recursive, &deltas, *epoch);
            *epoch += 1;
            deltas = self.merge(s, iterations, new, *epoch);
            iterations += 1;
        }
        self.stats.iterations[s] = iterations;
    }

    fn run_plans(&self, plans: &[JoinPlan], deltas: &[DeltaList], epoch: u32) -> Vec<Vec<(Box<[Value]>, Annotation)>> {
        let exec = Exec {
            store: &self.store,
            deltas,
            epoch,
            height_bound: u32::MAX,
            provenance: self.options.provenance,
        };
        #[cfg(feature = "std")]
        if self.options.jobs > 1 {
            return parallel::run_plans(self, &exec, plans);
        }
        let nrel = self.program.relations.len();
        let mut new: Vec<BTreeMap<Box<[Value]>, Annotation>> = (0..nrel).map(|_| BTreeMap::new()).collect();
        for plan in plans {
            let rule = &self.rules[plan.rule];
            let head_rel = rule.head.rel;
            let target = self.store.relation(head_rel);
            let buf = &mut new[head_rel.0];
            let mut head = Vec::with_capacity(rule.head.args.len());
            let mut vars = alloc::vec![Value::default(); rule.nvars];
            let provenance = self.options.provenance;
            let mut emit = |vars: &[Value], maxh: u32| {
                rule.head.instantiate(vars, &mut head);
                let ann = Annotation::new(rule.id, maxh + 1);
                if target.contains_with_height_below(&head, ann.height) {
                    return ControlFlow::Continue(());
                }
                match buf.get_mut(&head[..]) {
                    Some(stored) => {
                        if provenance && ann.height < stored.height {
                            *stored = ann;
                        }
                    }
                    None => {
                        buf.insert(head.as_slice().into(), ann);
                    }
                }
                ControlFlow::Continue(())
            };
            let _ = exec.run(rule, plan, 0, &mut vars, 0, &mut emit);
        }
        new.into_iter().map(|m| m.into_iter().collect()).collect()
    }

    fn merge(
        &mut self,
        stratum: usize,
        iteration: u32,
        new: Vec<Vec<(Box<[Value]>, Annotation)>>,
        epoch: u32,
    ) -> Vec<DeltaList> {
        let mut deltas = Vec::with_capacity(new.len());
        for (rel, entries) in new.into_iter().enumerate() {
            let mut delta = Vec::new();
            for (tuple, ann) in entries {
                let r = self.store.relation_mut(RelId(rel));
                let (outcome, slot) = r.upsert(&tuple, ann);
                let previous = match outcome {
                    InsertOutcome::Rejected => continue,
                    InsertOutcome::Inserted => {
                        self.stats.derived_tuples += 1;
                        None
                    }
                    InsertOutcome::Updated(old) => {
                        self.stats.annotation_updates += 1;
                        Some(old)
                    }
                };
                r.mark(slot, epoch);
                self.stats.rule_firings += 1;
                if self.options.provenance {
                    self.stats.max_height = self.stats.max_height.max(ann.height);
                }
                if self.options.record_history {
                    self.history.push(MergeEvent {
                        stratum,
                        iteration,
                        relation: RelId(rel),
                        tuple: tuple.to_vec(),
                        previous,
                        annotation: ann,
                    });
                }
                delta.push((tuple, slot));
            }
            deltas.push(delta);
        }
        deltas
    }
}

#[cfg(feature = "std")]
mod parallel {
    use super::*;
    use crate::store::SharedRelation;
    use std::sync::atomic::{AtomicUsize, Ordering};

    type Hits<'a> = Vec<(&'a [Value], u32)>;

    /// Splits the outermost scan of every plan into chunks and lets `jobs`
    /// workers drain them, all writing into shared minimizing buffers. The
    /// scope join is the iteration barrier.
    pub(super) fn run_plans(
        db: &Database,
        exec: &Exec<'_>,
        plans: &[JoinPlan],
    ) -> Vec<Vec<(Box<[Value]>, Annotation)>> {
        let jobs = db.options.jobs;
        let shards = jobs * 4;
        let buffers: Vec<SharedRelation> = db
            .program
            .relations
            .iter()
            .map(|d| SharedRelation::new(d.arity(), shards))
            .collect();
        let outer: Vec<Option<Hits<'_>>> = plans.iter().map(|p| exec.outer_hits(p)).collect();
        let mut tasks: Vec<(usize, usize, usize)> = Vec::new();
        for (pi, hits) in outer.iter().enumerate() {
            match hits {
                Some(h) if !h.is_empty() => {
                    let chunk = h.len().div_ceil(jobs * 4).max(64);
                    let mut start = 0;
                    while start < h.len() {
                        let end = (start + chunk).min(h.len());
                        tasks.push((pi, start, end));
                        start = end;
                    }
                }
                Some(_) => {}
                None => tasks.push((pi, 0, 0)),
            }
        }
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(tasks.len().max(1)) {
                scope.spawn(|| {
                    let mut head = Vec::new();
                    loop {
                        let t = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&(pi, start, end)) = tasks.get(t) else {
                            break;
                        };
                        let plan = &plans[pi];
                        let rule = &db.rules[plan.rule];
                        let target = db.store.relation(rule.head.rel);
                        let buf = &buffers[rule.head.rel.0];
                        let mut vars = alloc::vec![Value::default(); rule.nvars];
                        let mut emit = |vars: &[Value], maxh: u32| {
                            rule.head.instantiate(vars, &mut head);
                            let ann = Annotation::new(rule.id, maxh + 1);
                            if !target.contains_with_height_below(&head, ann.height) {
                                buf.insert_or_minimize(&head, ann);
                            }
                            ControlFlow::Continue(())
                        };
                        let _ = match &outer[pi] {
                            Some(h) => exec.run_outer(rule, plan, &h[start..end], &mut vars, &mut emit),
                            None => exec.run(rule, plan, 0, &mut vars, 0, &mut emit),
                        };
                    }
                });
            }
        });
        buffers
            .into_iter()
            .map(|b| {
                let mut v = b.into_sorted();
                if !db.options.provenance {
                    for e in &mut v {
                        e.1 = Annotation::new(e.1.rule, 1);
                    }
                }
                v
            })
            .collect()
    }
}
