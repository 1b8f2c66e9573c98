//! Rules with interned constants and variable slots.

use alloc::vec::Vec;

use crate::ast::{Atom, CmpOp, Program, RelId, Rule, RuleId, Term};
use crate::symbols::{SymbolTable, Value};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Slot {
    Var(usize),
    Const(Value),
}

impl Slot {
    #[inline]
    pub(crate) fn get(self, vars: &[Value]) -> Value {
        match self {
            Slot::Var(v) => vars[v],
            Slot::Const(c) => c,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CAtom {
    pub rel: RelId,
    pub args: Vec<Slot>,
}

impl CAtom {
    pub(crate) fn instantiate(&self, vars: &[Value], out: &mut Vec<Value>) {
        out.clear();
        out.extend(self.args.iter().map(|s| s.get(vars)));
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct CConstraint {
    pub op: CmpOp,
    pub lhs: Slot,
    pub rhs: Slot,
}

impl CConstraint {
    #[inline]
    pub(crate) fn holds(&self, vars: &[Value]) -> bool {
        self.op.holds(&self.lhs.get(vars), &self.rhs.get(vars))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledRule {
    pub id: RuleId,
    pub head: CAtom,
    pub body: Vec<CAtom>,
    pub negations: Vec<CAtom>,
    pub constraints: Vec<CConstraint>,
    pub nvars: usize,
}

fn slot(t: &Term, symbols: &mut SymbolTable) -> Slot {
    match t {
        Term::Var(v) => Slot::Var(*v),
        Term::Const(c) => Slot::Const(symbols.intern_constant(c)),
    }
}

fn atom(a: &Atom, symbols: &mut SymbolTable) -> CAtom {
    CAtom {
        rel: a.relation,
        args: a.args.iter().map(|t| slot(t, symbols)).collect(),
    }
}

pub(crate) fn compile_rule(rule: &Rule, symbols: &mut SymbolTable) -> CompiledRule {
    CompiledRule {
        id: rule.id,
        head: atom(&rule.head, symbols),
        body: rule.body.iter().map(|a| atom(a, symbols)).collect(),
        negations: rule.negations.iter().map(|a| atom(a, symbols)).collect(),
        constraints: rule
            .constraints
            .iter()
            .map(|c| CConstraint {
                op: c.op,
                lhs: slot(&c.lhs, symbols),
                rhs: slot(&c.rhs, symbols),
            })
            .collect(),
        nvars: rule.variables.len(),
    }
}

pub(crate) fn compile_program(program: &Program, symbols: &mut SymbolTable) -> Vec<CompiledRule> {
    program.rules.iter().map(|r| compile_rule(r, symbols)).collect()
}
