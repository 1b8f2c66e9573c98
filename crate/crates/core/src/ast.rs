//! Validated program representation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::ProgramError;
use crate::symbols::Constant;

/// Index of a relation in [`Program::relations`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RelId(pub usize);

/// 1-based rule number; 0 is reserved for input tuples.
pub type RuleId = u32;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AttrType {
    Symbol,
    Number,
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrType::Symbol => "symbol",
            AttrType::Number => "number",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IoKind {
    Input,
    Output,
    Internal,
}

impl fmt::Display for IoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IoKind::Input => "input",
            IoKind::Output => "output",
            IoKind::Internal => "internal",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Attribute {
    pub name: String,
    pub ty: AttrType,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RelationDecl {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub input: bool,
    pub output: bool,
}

impl RelationDecl {
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn io(&self) -> IoKind {
        if self.input {
            IoKind::Input
        } else if self.output {
            IoKind::Output
        } else {
            IoKind::Internal
        }
    }

    pub fn types(&self) -> impl Iterator<Item = AttrType> + '_ {
        self.attributes.iter().map(|a| a.ty)
    }
}

/// A rule argument. Variables index into [`Rule::variables`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Term {
    Var(usize),
    Const(Constant),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Atom {
    pub relation: RelId,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_order(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }

    pub fn holds<T: Ord>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Constraint {
    pub op: CmpOp,
    pub lhs: Term,
    pub rhs: Term,
}

impl Constraint {
    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        [&self.lhs, &self.rhs].into_iter().filter_map(|t| match t {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        })
    }
}

/// `head :- body, !negations, constraints.`
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub id: RuleId,
    pub head: Atom,
    pub body: Vec<Atom>,
    pub negations: Vec<Atom>,
    pub constraints: Vec<Constraint>,
    /// Variable names by slot. Every `_` gets its own slot.
    pub variables: Vec<String>,
}

impl Rule {
    /// First variable of the head, negations or constraints that does not
    /// occur in a positive body atom.
    pub fn ungrounded_variable(&self) -> Option<usize> {
        let mut bound = alloc::vec![false; self.variables.len()];
        for v in self.body.iter().flat_map(Atom::vars) {
            bound[v] = true;
        }
        self.head
            .vars()
            .chain(self.negations.iter().flat_map(Atom::vars))
            .chain(self.constraints.iter().flat_map(Constraint::vars))
            .find(|v| !bound[*v])
    }

    pub fn var_name(&self, v: usize) -> &str {
        &self.variables[v]
    }
}

/// A ground input tuple written inline in the source.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Fact {
    pub relation: RelId,
    pub args: Vec<Constant>,
}

/// A fully instantiated atom, independent of any symbol table.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GroundAtom {
    pub relation: RelId,
    pub args: Vec<Constant>,
}

impl GroundAtom {
    pub fn new(relation: RelId, args: Vec<Constant>) -> Self {
        GroundAtom { relation, args }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Program {
    pub relations: Vec<RelationDecl>,
    pub rules: Vec<Rule>,
    pub facts: Vec<Fact>,
}

impl Program {
    pub fn relation(&self, id: RelId) -> &RelationDecl {
        &self.relations[id.0]
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.relations.iter().position(|r| r.name == name).map(RelId)
    }

    pub fn rel_ids(&self) -> impl Iterator<Item = RelId> {
        (0..self.relations.len()).map(RelId)
    }

    /// Rule by 1-based id.
    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        (id as usize)
            .checked_sub(1)
            .and_then(|i| self.rules.get(i))
    }

    pub fn rules_for(&self, rel: RelId) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.head.relation == rel)
    }

    /// Re-checks every structural invariant of a program. The parser calls
    /// this; hand-built programs should too.
    pub fn validate(&self) -> Result<(), ProgramError> {
        let mut seen = BTreeMap::new();
        for decl in &self.relations {
            if seen.insert(decl.name.as_str(), ()).is_some() {
                return Err(ProgramError::DuplicateDeclaration(decl.name.clone()));
            }
            if decl.attributes.is_empty() {
                return Err(ProgramError::ZeroArity(decl.name.clone()));
            }
        }
        for fact in &self.facts {
            let decl = self.checked_relation(fact.relation)?;
            if fact.args.len() != decl.arity() {
                return Err(self.arity_error(fact.relation, fact.args.len()));
            }
            for (c, ty) in fact.args.iter().zip(decl.types()) {
                if c.attr_type() != ty {
                    return Err(ProgramError::TypeMismatch {
                        relation: decl.name.clone(),
                        detail: alloc::format!("constant {} is not a {}", c, ty),
                    });
                }
            }
        }
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.id as usize != i + 1 {
                return Err(ProgramError::RuleNumbering(rule.id));
            }
            self.validate_rule(rule)?;
        }
        Ok(())
    }

    fn checked_relation(&self, id: RelId) -> Result<&RelationDecl, ProgramError> {
        self.relations
            .get(id.0)
            .ok_or_else(|| ProgramError::UndeclaredRelation(alloc::format!("#{}", id.0)))
    }

    fn arity_error(&self, rel: RelId, found: usize) -> ProgramError {
        let decl = self.relation(rel);
        ProgramError::ArityMismatch {
            relation: decl.name.clone(),
            expected: decl.arity(),
            found,
        }
    }

    fn validate_rule(&self, rule: &Rule) -> Result<(), ProgramError> {
        let mut var_types: Vec<Option<AttrType>> = alloc::vec![None; rule.variables.len()];
        let atoms = core::iter::once(&rule.head)
            .chain(rule.body.iter())
            .chain(rule.negations.iter());
        for atom in atoms {
            let decl = self.checked_relation(atom.relation)?;
            if atom.args.len() != decl.arity() {
                return Err(self.arity_error(atom.relation, atom.args.len()));
            }
            for (term, ty) in atom.args.iter().zip(decl.types()) {
                match term {
                    Term::Const(c) if c.attr_type() != ty => {
                        return Err(ProgramError::TypeMismatch {
                            relation: decl.name.clone(),
                            detail: alloc::format!("constant {} is not a {}", c, ty),
                        })
                    }
                    Term::Const(_) => {}
                    Term::Var(v) => match var_types[*v] {
                        Some(prev) if prev != ty => {
                            return Err(ProgramError::TypeMismatch {
                                relation: decl.name.clone(),
                                detail: alloc::format!(
                                    "variable {} used as both {} and {}",
                                    rule.variables[*v],
                                    prev,
                                    ty
                                ),
                            })
                        }
                        _ => var_types[*v] = Some(ty),
                    },
                }
            }
        }
        if let Some(v) = rule.ungrounded_variable() {
            return Err(ProgramError::UngroundedVariable {
                rule: rule.id,
                variable: rule.variables[v].clone(),
            });
        }
        for c in &rule.constraints {
            let ty = |t: &Term| match t {
                Term::Var(v) => var_types[*v],
                Term::Const(c) => Some(c.attr_type()),
            };
            let (l, r) = (ty(&c.lhs), ty(&c.rhs));
            if l != r {
                return Err(ProgramError::ConstraintType {
                    rule: rule.id,
                    detail: String::from("sides of a comparison must have the same type"),
                });
            }
            if c.op.is_order() && l != Some(AttrType::Number) {
                return Err(ProgramError::ConstraintType {
                    rule: rule.id,
                    detail: alloc::format!("`{}` needs number operands", c.op.symbol()),
                });
            }
        }
        Ok(())
    }

    /// Display adapter for a single rule in canonical source form.
    pub fn display_rule<'a>(&'a self, rule: &'a Rule) -> RuleDisplay<'a> {
        RuleDisplay { program: self, rule }
    }

    /// `rel("a", 1)` form of a ground atom.
    pub fn display_ground<'a>(&'a self, atom: &'a GroundAtom) -> GroundDisplay<'a> {
        GroundDisplay {
            program: self,
            atom,
            separator: ", ",
        }
    }

    /// Builds a ground atom from a relation name and constants, checking
    /// arity and attribute types.
    pub fn ground(&self, relation: &str, args: Vec<Constant>) -> Result<GroundAtom, ProgramError> {
        let id = self
            .relation_id(relation)
            .ok_or_else(|| ProgramError::UndeclaredRelation(relation.into()))?;
        let decl = self.relation(id);
        if decl.arity() != args.len() {
            return Err(ProgramError::ArityMismatch {
                relation: relation.into(),
                expected: decl.arity(),
                found: args.len(),
            });
        }
        for (c, ty) in args.iter().zip(decl.types()) {
            if c.attr_type() != ty {
                return Err(ProgramError::TypeMismatch {
                    relation: relation.into(),
                    detail: alloc::format!("{} is not a {}", c, ty),
                });
            }
        }
        Ok(GroundAtom::new(id, args))
    }

    pub fn display_atom<'a>(&'a self, rule: &'a Rule, atom: &'a Atom) -> AtomDisplay<'a> {
        AtomDisplay {
            program: self,
            rule,
            atom,
        }
    }
}

pub struct AtomDisplay<'a> {
    program: &'a Program,
    rule: &'a Rule,
    atom: &'a Atom,
}

fn write_term(f: &mut fmt::Formatter<'_>, rule: &Rule, t: &Term) -> fmt::Result {
    match t {
        Term::Var(v) => f.write_str(rule.var_name(*v)),
        Term::Const(c) => write!(f, "{}", c),
    }
}

impl fmt::Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.program.relation(self.atom.relation).name)?;
        for (i, t) in self.atom.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write_term(f, self.rule, t)?;
        }
        f.write_str(")")
    }
}

pub struct GroundDisplay<'a> {
    program: &'a Program,
    atom: &'a GroundAtom,
    separator: &'a str,
}

impl<'a> GroundDisplay<'a> {
    /// Use `sep` between arguments instead of `", "`.
    pub fn separator(mut self, sep: &'a str) -> Self {
        self.separator = sep;
        self
    }
}

impl fmt::Display for GroundDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.program.relation(self.atom.relation).name)?;
        for (i, c) in self.atom.args.iter().enumerate() {
            if i > 0 {
                f.write_str(self.separator)?;
            }
            write!(f, "{}", c)?;
        }
        f.write_str(")")
    }
}

pub struct RuleDisplay<'a> {
    program: &'a Program,
    rule: &'a Rule,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, r) = (self.program, self.rule);
        write!(f, "{} :- ", p.display_atom(r, &r.head))?;
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !core::mem::take(&mut first) {
                f.write_str(", ")?;
            }
            Ok(())
        };
        for a in &r.body {
            sep(f)?;
            write!(f, "{}", p.display_atom(r, a))?;
        }
        for a in &r.negations {
            sep(f)?;
            write!(f, "!{}", p.display_atom(r, a))?;
        }
        for c in &r.constraints {
            sep(f)?;
            write_term(f, r, &c.lhs)?;
            write!(f, " {} ", c.op.symbol())?;
            write_term(f, r, &c.rhs)?;
        }
        f.write_str(".")
    }
}

/// Prints a program in a form the parser accepts back.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.relations {
            write!(f, ".decl {}(", d.name)?;
            for (i, a) in d.attributes.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}:{}", a.name, a.ty)?;
            }
            f.write_str(")\n")?;
            if d.input {
                writeln!(f, ".input {}", d.name)?;
            }
            if d.output {
                writeln!(f, ".output {}", d.name)?;
            }
        }
        for fact in &self.facts {
            write!(f, "{}(", self.relation(fact.relation).name)?;
            for (i, c) in fact.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", c)?;
            }
            f.write_str(").\n")?;
        }
        for r in &self.rules {
            writeln!(f, "{}", self.display_rule(r))?;
        }
        Ok(())
    }
}
