//! Left-deep indexed nested-loop join plans and their executor.
//!
//! The same machinery serves forward evaluation (one plan per delta variant)
//! and the backward proof search of the explorer (head variables bound up
//! front, child heights capped).

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use super::compile::{CAtom, CompiledRule, Slot};
use crate::ast::RelId;
use crate::store::{complete_order, AnnotatedStore, IndexId, Relation};
use crate::symbols::Value;

/// Which version of a relation a body atom reads.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AtomSource {
    /// Everything stored so far.
    Full,
    /// Only the previous iteration's new or re-annotated tuples.
    Delta,
    /// Stored tuples that are not in the current delta.
    Stable,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum KeyOp {
    Bind(usize),
    Check(Slot),
}

#[derive(Clone, Debug)]
pub(crate) struct Scan {
    pub rel: RelId,
    pub source: AtomSource,
    pub index: IndexId,
    pub prefix: Vec<Slot>,
    /// Applied to key positions `prefix.len()..` in order.
    pub ops: Vec<(usize, KeyOp)>,
}

#[derive(Clone, Debug)]
pub(crate) enum Step {
    Scan(Scan),
    Negation(usize),
    Filter(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct JoinPlan {
    pub rule: usize,
    pub steps: Vec<Step>,
}

impl JoinPlan {
    /// `resolve` maps a relation and a complete key order to an existing
    /// index, or `None` to fall back to a filtered full scan.
    pub(crate) fn build(
        rule_index: usize,
        rule: &CompiledRule,
        delta: Option<usize>,
        sources: &[AtomSource],
        initially_bound: &[bool],
        resolve: &mut dyn FnMut(RelId, &[usize]) -> Option<IndexId>,
    ) -> JoinPlan {
        let mut bound = initially_bound.to_vec();
        bound.resize(rule.nvars, false);
        let mut steps = Vec::new();
        let mut placed_c = alloc::vec![false; rule.constraints.len()];
        let mut placed_n = alloc::vec![false; rule.negations.len()];
        let mut used = alloc::vec![false; rule.body.len()];

        let place_ready = |steps: &mut Vec<Step>, bound: &[bool], pc: &mut [bool], pn: &mut [bool]| {
            let ready = |s: &Slot| match s {
                Slot::Var(v) => bound[*v],
                Slot::Const(_) => true,
            };
            for (i, n) in rule.negations.iter().enumerate() {
                if !pn[i] && n.args.iter().all(ready) {
                    pn[i] = true;
                    steps.push(Step::Negation(i));
                }
            }
            for (i, c) in rule.constraints.iter().enumerate() {
                if !pc[i] && ready(&c.lhs) && ready(&c.rhs) {
                    pc[i] = true;
                    steps.push(Step::Filter(i));
                }
            }
        };
        place_ready(&mut steps, &bound, &mut placed_c, &mut placed_n);

        for _ in 0..rule.body.len() {
            let next = match delta {
                Some(d) if !used[d] => d,
                _ => (0..rule.body.len())
                    .filter(|&p| !used[p])
                    .max_by_key(|&p| {
                        let score = rule.body[p]
                            .args
                            .iter()
                            .filter(|s| match s {
                                Slot::Var(v) => bound[*v],
                                Slot::Const(_) => true,
                            })
                            .count();
                        (score, core::cmp::Reverse(p))
                    })
                    .expect("unused atom remains"),
            };
            used[next] = true;
            let scan = make_scan(&rule.body[next], sources[next], &mut bound, resolve);
            steps.push(Step::Scan(scan));
            place_ready(&mut steps, &bound, &mut placed_c, &mut placed_n);
        }
        debug_assert!(placed_c.iter().chain(placed_n.iter()).all(|p| *p));
        JoinPlan {
            rule: rule_index,
            steps,
        }
    }

    /// Relations and complete key orders this plan wants indexed.
    pub(crate) fn index_requests(rule: &CompiledRule, delta: Option<usize>, initially_bound: &[bool]) -> Vec<(RelId, Vec<usize>)> {
        let mut out = Vec::new();
        let mut resolve = |rel: RelId, order: &[usize]| {
            out.push((rel, order.to_vec()));
            None
        };
        let sources = alloc::vec![AtomSource::Full; rule.body.len()];
        let mut sources = sources;
        if let Some(d) = delta {
            sources[d] = AtomSource::Delta;
        }
        JoinPlan::build(0, rule, delta, &sources, initially_bound, &mut resolve);
        out
    }
}

fn make_scan(
    atom: &CAtom,
    source: AtomSource,
    bound: &mut [bool],
    resolve: &mut dyn FnMut(RelId, &[usize]) -> Option<IndexId>,
) -> Scan {
    let arity = atom.args.len();
    let is_bound = |s: &Slot, bound: &[bool]| match s {
        Slot::Var(v) => bound[*v],
        Slot::Const(_) => true,
    };
    let bound_cols: Vec<usize> = (0..arity).filter(|&c| is_bound(&atom.args[c], bound)).collect();
    let identity: Vec<usize> = (0..arity).collect();
    let (index, order, prefix_len) = if source == AtomSource::Delta || bound_cols.is_empty() {
        (IndexId::PRIMARY, identity, 0)
    } else {
        let full = complete_order(arity, &bound_cols);
        match resolve(atom.rel, &full) {
            Some(id) => (id, full, bound_cols.len()),
            None => (IndexId::PRIMARY, identity, 0),
        }
    };
    let prefix = order[..prefix_len].iter().map(|&c| atom.args[c]).collect();
    let mut ops = Vec::new();
    for (kp, &c) in order.iter().enumerate().skip(prefix_len) {
        match atom.args[c] {
            Slot::Const(v) => ops.push((kp, KeyOp::Check(Slot::Const(v)))),
            Slot::Var(v) if bound[v] => ops.push((kp, KeyOp::Check(Slot::Var(v)))),
            Slot::Var(v) => {
                bound[v] = true;
                ops.push((kp, KeyOp::Bind(v)));
            }
        }
    }
    Scan {
        rel: atom.rel,
        source,
        index,
        prefix,
        ops,
    }
}

pub(crate) type DeltaList = Vec<(Box<[Value]>, u32)>;

/// Read-only view shared by all executions of one evaluation phase.
pub(crate) struct Exec<'a> {
    pub store: &'a AnnotatedStore,
    pub deltas: &'a [DeltaList],
    pub epoch: u32,
    /// Scan hits with a stored height `>=` this are skipped.
    pub height_bound: u32,
    pub provenance: bool,
}

pub(crate) type Emit<'e> = dyn FnMut(&[Value], u32) -> ControlFlow<()> + 'e;

impl<'a> Exec<'a> {
    #[inline]
    fn on_hit(&self, rel: &Relation, scan: &Scan, key: &[Value], slot: u32, vars: &mut [Value], maxh: u32) -> Option<u32> {
        if scan.source == AtomSource::Stable && rel.is_marked(slot, self.epoch) {
            return None;
        }
        for &(kp, op) in &scan.ops {
            match op {
                KeyOp::Bind(v) => vars[v] = key[kp],
                KeyOp::Check(s) => {
                    if key[kp] != s.get(vars) {
                        return None;
                    }
                }
            }
        }
        if !self.provenance {
            return Some(maxh);
        }
        let h = rel.annotation_at(slot).height;
        if h >= self.height_bound {
            return None;
        }
        Some(maxh.max(h))
    }

    /// Runs `plan` from `step`, calling `emit` with the variable bindings
    /// and the maximum body height of every complete instantiation.
    pub(crate) fn run(
        &self,
        rule: &CompiledRule,
        plan: &JoinPlan,
        step: usize,
        vars: &mut [Value],
        maxh: u32,
        emit: &mut Emit<'_>,
    ) -> ControlFlow<()> {
        let Some(s) = plan.steps.get(step) else {
            return emit(vars, maxh);
        };
        match s {
            Step::Filter(i) => {
                if rule.constraints[*i].holds(vars) {
                    self.run(rule, plan, step + 1, vars, maxh, emit)
                } else {
                    ControlFlow::Continue(())
                }
            }
            Step::Negation(i) => {
                let neg = &rule.negations[*i];
                let mut buf = [Value::default(); 8];
                let present = if neg.args.len() <= buf.len() {
                    for (b, a) in buf.iter_mut().zip(&neg.args) {
                        *b = a.get(vars);
                    }
                    self.store.relation(neg.rel).contains(&buf[..neg.args.len()])
                } else {
                    let mut t = Vec::new();
                    neg.instantiate(vars, &mut t);
                    self.store.relation(neg.rel).contains(&t)
                };
                if present {
                    ControlFlow::Continue(())
                } else {
                    self.run(rule, plan, step + 1, vars, maxh, emit)
                }
            }
            Step::Scan(scan) => {
                let rel = self.store.relation(scan.rel);
                if scan.source == AtomSource::Delta {
                    for (key, slot) in &self.deltas[scan.rel.0] {
                        if let Some(h) = self.on_hit(rel, scan, key, *slot, vars, maxh) {
                            self.run(rule, plan, step + 1, vars, h, emit)?;
                        }
                    }
                    return ControlFlow::Continue(());
                }
                let mut buf = [Value::default(); 8];
                let heap;
                let prefix: &[Value] = if scan.prefix.len() <= buf.len() {
                    for (b, s) in buf.iter_mut().zip(&scan.prefix) {
                        *b = s.get(vars);
                    }
                    &buf[..scan.prefix.len()]
                } else {
                    heap = scan.prefix.iter().map(|s| s.get(vars)).collect::<Vec<_>>();
                    &heap
                };
                for (key, slot) in rel.index_range(scan.index, prefix) {
                    if let Some(h) = self.on_hit(rel, scan, key, slot, vars, maxh) {
                        self.run(rule, plan, step + 1, vars, h, emit)?;
                    }
                }
                ControlFlow::Continue(())
            }
        }
    }

    #[cfg(feature = "std")]
    /// Candidate entries of a plan's first scan, for splitting across
    /// workers. `None` when the plan does not start with a scan.
    pub(crate) fn outer_hits(&self, plan: &JoinPlan) -> Option<Vec<(&'a [Value], u32)>> {
        let Step::Scan(scan) = plan.steps.first()? else {
            return None;
        };
        if scan.source == AtomSource::Delta {
            return Some(self.deltas[scan.rel.0].iter().map(|(k, s)| (&**k, *s)).collect());
        }
        if !scan.prefix.iter().all(|s| matches!(s, Slot::Const(_))) {
            return None;
        }
        let prefix: Vec<Value> = scan.prefix.iter().map(|s| s.get(&[])).collect();
        let rel = self.store.relation(scan.rel);
        Some(rel.index_range(scan.index, &prefix).collect())
    }

    #[cfg(feature = "std")]
    /// Processes a slice of [`Exec::outer_hits`] and continues with the rest
    /// of the plan.
    pub(crate) fn run_outer(
        &self,
        rule: &CompiledRule,
        plan: &JoinPlan,
        hits: &[(&[Value], u32)],
        vars: &mut [Value],
        emit: &mut Emit<'_>,
    ) -> ControlFlow<()> {
        let Some(Step::Scan(scan)) = plan.steps.first() else {
            return self.run(rule, plan, 0, vars, 0, emit);
        };
        let rel = self.store.relation(scan.rel);
        for (key, slot) in hits {
            if let Some(h) = self.on_hit(rel, scan, key, *slot, vars, 0) {
                self.run(rule, plan, 1, vars, h, emit)?;
            }
        }
        ControlFlow::Continue(())
    }
}
