//! Reader for the Soufflé-like surface syntax.
//!
//! ```text
//! .decl vpt(v:symbol, o:symbol)
//! .output vpt
//! new(a, l1).
//! r2: vpt(Var, Obj) :- assign(Var, Var2), vpt(Var2, Obj).
//! alias(X, Y) :- vpt(X, O), vpt(Y, O), X != Y.
//! ```
//!
//! Identifiers starting with an upper-case letter or `_` are variables, other
//! bare identifiers and double-quoted strings are symbols, integers are
//! numbers. An optional `label:` before a rule is accepted and ignored; rule
//! ids are always assigned in source order.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ast::{
    Atom, AttrType, Attribute, CmpOp, Constraint, Fact, Program, RelId, RelationDecl, Rule, Term,
};
use crate::error::ProgramError;
use crate::symbols::Constant;

pub fn parse_program(source: &str) -> Result<Program, ProgramError> {
    let tokens = Lexer::new(source).tokenize()?;
    let statements = Parser { tokens, pos: 0 }.statements()?;
    let program = resolve(statements)?;
    program.validate()?;
    Ok(program)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(i64),
    Directive(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Implies,
    Bang,
    Cmp(CmpOp),
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

fn syntax(pos: Pos, message: impl Into<String>) -> ProgramError {
    ProgramError::Syntax {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

struct Lexer<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            pos: Pos { line: 1, column: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn skip_trivia(&mut self) -> Result<(), ProgramError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek2() == Some('/') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some('/') if self.peek2() == Some('*') => {
                    let start = self.pos;
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                            None => return Err(syntax(start, "unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, Pos)>, ProgramError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let start = self.pos;
            let Some(c) = self.peek() else {
                out.push((Tok::Eof, start));
                return Ok(out);
            };
            let tok = match c {
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '.' => {
                    self.bump();
                    match self.peek() {
                        Some(c) if c.is_alphabetic() => {
                            let word = self.ident();
                            match word.as_str() {
                                "decl" | "input" | "output" => Tok::Directive(word),
                                _ => return Err(syntax(start, alloc::format!("unknown directive `.{}`", word))),
                            }
                        }
                        _ => Tok::Dot,
                    }
                }
                ':' => {
                    self.bump();
                    if self.peek() == Some('-') {
                        self.bump();
                        Tok::Implies
                    } else {
                        Tok::Colon
                    }
                }
                '!' => {
                    self.bump();
                    if self.peek() == Some('=') {
                        self.bump();
                        Tok::Cmp(CmpOp::Ne)
                    } else {
                        Tok::Bang
                    }
                }
                '=' => {
                    self.bump();
                    Tok::Cmp(CmpOp::Eq)
                }
                '<' | '>' => {
                    self.bump();
                    let eq = self.peek() == Some('=');
                    if eq {
                        self.bump();
                    }
                    Tok::Cmp(match (c, eq) {
                        ('<', false) => CmpOp::Lt,
                        ('<', true) => CmpOp::Le,
                        ('>', false) => CmpOp::Gt,
                        _ => CmpOp::Ge,
                    })
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some(c @ ('"' | '\\')) => s.push(c),
                                _ => return Err(syntax(self.pos, "invalid escape in string")),
                            },
                            Some('\n') | None => return Err(syntax(start, "unterminated string")),
                            Some(c) => s.push(c),
                        }
                    }
                    Tok::Str(s)
                }
                '-' | '0'..='9' => {
                    let mut s = String::new();
                    if c == '-' {
                        self.bump();
                        s.push('-');
                        if !matches!(self.peek(), Some('0'..='9')) {
                            return Err(syntax(start, "expected digits after `-`"));
                        }
                    }
                    while let Some(d @ '0'..='9') = self.peek() {
                        s.push(d);
                        self.bump();
                    }
                    Tok::Num(
                        s.parse()
                            .map_err(|_| syntax(start, alloc::format!("number `{}` out of range", s)))?,
                    )
                }
                c if c.is_alphabetic() || c == '_' => Tok::Ident(self.ident()),
                other => return Err(syntax(start, alloc::format!("unexpected character `{}`", other))),
            };
            out.push((tok, start));
        }
    }
}

#[derive(Debug)]
enum RawTerm {
    Var(String),
    Const(Constant),
}

#[derive(Debug)]
struct RawAtom {
    name: String,
    args: Vec<RawTerm>,
}

#[derive(Debug)]
enum RawLiteral {
    Pos(RawAtom),
    Neg(RawAtom),
    Cmp(CmpOp, RawTerm, RawTerm),
}

#[derive(Debug)]
enum Statement {
    Decl(String, Vec<Attribute>),
    Io(bool, String),
    Clause(RawAtom, Vec<RawLiteral>),
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    pos: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => alloc::format!("`{}`", s),
        Tok::Str(s) => alloc::format!("\"{}\"", s),
        Tok::Num(n) => alloc::format!("`{}`", n),
        Tok::Directive(d) => alloc::format!("`.{}`", d),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Implies => "`:-`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Cmp(op) => alloc::format!("`{}`", op.symbol()),
        Tok::Eof => "end of input".into(),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].0
    }

    fn here(&self) -> Pos {
        self.tokens[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ProgramError> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            Err(syntax(
                self.here(),
                alloc::format!("expected {}, found {}", describe(&want), describe(self.peek())),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ProgramError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => Err(syntax(
                self.here(),
                alloc::format!("expected {}, found {}", what, describe(&other)),
            )),
        }
    }

    fn statements(mut self) -> Result<Vec<Statement>, ProgramError> {
        let mut out = Vec::new();
        loop {
            let pos = self.here();
            match self.peek().clone() {
                Tok::Eof => return Ok(out),
                Tok::Directive(d) => {
                    self.next();
                    if d == "decl" {
                        out.push(self.decl()?);
                    } else {
                        let input = d == "input";
                        loop {
                            out.push(Statement::Io(input, self.ident("relation name")?));
                            if *self.peek() != Tok::Comma {
                                break;
                            }
                            self.next();
                        }
                    }
                }
                Tok::Ident(_) => {
                    if matches!(self.peek_at(1), Tok::Colon) {
                        self.next();
                        self.next();
                    }
                    let head = self.atom()?;
                    let mut body = Vec::new();
                    if *self.peek() == Tok::Implies {
                        self.next();
                        loop {
                            body.push(self.literal()?);
                            if *self.peek() != Tok::Comma {
                                break;
                            }
                            self.next();
                        }
                    }
                    self.expect(Tok::Dot)?;
                    out.push(Statement::Clause(head, body));
                }
                other => {
                    return Err(syntax(
                        pos,
                        alloc::format!("expected a declaration, fact or rule, found {}", describe(&other)),
                    ))
                }
            }
        }
    }

    fn decl(&mut self) -> Result<Statement, ProgramError> {
        let name = self.ident("relation name")?;
        self.expect(Tok::LParen)?;
        let mut attrs = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let attr = self.ident("attribute name")?;
                self.expect(Tok::Colon)?;
                let tpos = self.here();
                let ty = match self.ident("attribute type")?.as_str() {
                    "symbol" => AttrType::Symbol,
                    "number" => AttrType::Number,
                    other => {
                        return Err(syntax(
                            tpos,
                            alloc::format!("unknown type `{}` (expected symbol or number)", other),
                        ))
                    }
                };
                attrs.push(Attribute { name: attr, ty });
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.next();
            }
        }
        self.expect(Tok::RParen)?;
        Ok(Statement::Decl(name, attrs))
    }

    fn atom(&mut self) -> Result<RawAtom, ProgramError> {
        let name = self.ident("relation name")?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.term()?);
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.next();
            }
        }
        self.expect(Tok::RParen)?;
        Ok(RawAtom { name, args })
    }

    fn term(&mut self) -> Result<RawTerm, ProgramError> {
        let pos = self.here();
        match self.next() {
            Tok::Ident(s) => {
                let first = s.chars().next().unwrap_or('_');
                if first == '_' || first.is_uppercase() {
                    Ok(RawTerm::Var(s))
                } else {
                    Ok(RawTerm::Const(Constant::Symbol(s)))
                }
            }
            Tok::Str(s) => Ok(RawTerm::Const(Constant::Symbol(s))),
            Tok::Num(n) => Ok(RawTerm::Const(Constant::Number(n))),
            other => Err(syntax(pos, alloc::format!("expected a term, found {}", describe(&other)))),
        }
    }

    fn literal(&mut self) -> Result<RawLiteral, ProgramError> {
        if *self.peek() == Tok::Bang {
            self.next();
            return Ok(RawLiteral::Neg(self.atom()?));
        }
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::LParen {
            return Ok(RawLiteral::Pos(self.atom()?));
        }
        let lhs = self.term()?;
        let pos = self.here();
        let op = match self.next() {
            Tok::Cmp(op) => op,
            other => {
                return Err(syntax(
                    pos,
                    alloc::format!("expected a comparison operator, found {}", describe(&other)),
                ))
            }
        };
        let rhs = self.term()?;
        Ok(RawLiteral::Cmp(op, lhs, rhs))
    }
}

fn resolve(statements: Vec<Statement>) -> Result<Program, ProgramError> {
    let mut program = Program::default();
    let mut names: BTreeMap<String, RelId> = BTreeMap::new();
    for st in &statements {
        if let Statement::Decl(name, attrs) = st {
            if names.contains_key(name) {
                return Err(ProgramError::DuplicateDeclaration(name.clone()));
            }
            names.insert(name.clone(), RelId(program.relations.len()));
            program.relations.push(RelationDecl {
                name: name.clone(),
                attributes: attrs.clone(),
                input: false,
                output: false,
            });
        }
    }
    let lookup = |name: &str| {
        names
            .get(name)
            .copied()
            .ok_or_else(|| ProgramError::UndeclaredRelation(name.to_string()))
    };
    for st in statements {
        match st {
            Statement::Decl(..) => {}
            Statement::Io(input, name) => {
                let decl = &mut program.relations[lookup(&name)?.0];
                if input {
                    decl.input = true;
                } else {
                    decl.output = true;
                }
            }
            Statement::Clause(head, body) if body.is_empty() => {
                let relation = lookup(&head.name)?;
                let mut args = Vec::with_capacity(head.args.len());
                for t in head.args {
                    match t {
                        RawTerm::Const(c) => args.push(c),
                        RawTerm::Var(v) => {
                            return Err(ProgramError::UngroundedVariable {
                                rule: 0,
                                variable: v,
                            })
                        }
                    }
                }
                program.facts.push(Fact { relation, args });
            }
            Statement::Clause(head, body) => {
                let id = program.rules.len() as u32 + 1;
                let mut vars = VarTable::default();
                let head = vars.atom(head, &lookup)?;
                let mut rule = Rule {
                    id,
                    head,
                    body: Vec::new(),
                    negations: Vec::new(),
                    constraints: Vec::new(),
                    variables: Vec::new(),
                };
                for lit in body {
                    match lit {
                        RawLiteral::Pos(a) => rule.body.push(vars.atom(a, &lookup)?),
                        RawLiteral::Neg(a) => rule.negations.push(vars.atom(a, &lookup)?),
                        RawLiteral::Cmp(op, l, r) => rule.constraints.push(Constraint {
                            op,
                            lhs: vars.term(l),
                            rhs: vars.term(r),
                        }),
                    }
                }
                rule.variables = vars.names;
                program.rules.push(rule);
            }
        }
    }
    Ok(program)
}

#[derive(Default)]
struct VarTable {
    names: Vec<String>,
    slots: BTreeMap<String, usize>,
}

impl VarTable {
    fn term(&mut self, t: RawTerm) -> Term {
        match t {
            RawTerm::Const(c) => Term::Const(c),
            RawTerm::Var(name) => {
                if name == "_" {
                    self.names.push(name);
                    return Term::Var(self.names.len() - 1);
                }
                if let Some(&slot) = self.slots.get(&name) {
                    return Term::Var(slot);
                }
                let slot = self.names.len();
                self.names.push(name.clone());
                self.slots.insert(name, slot);
                Term::Var(slot)
            }
        }
    }

    fn atom(
        &mut self,
        a: RawAtom,
        lookup: &impl Fn(&str) -> Result<RelId, ProgramError>,
    ) -> Result<Atom, ProgramError> {
        let relation = lookup(&a.name)?;
        Ok(Atom {
            relation,
            args: a.args.into_iter().map(|t| self.term(t)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::POINTS_TO;

    #[test]
    fn points_to_program() {
        let p = parse_program(POINTS_TO).unwrap();
        assert_eq!(p.rules.len(), 4);
        assert_eq!(
            p.rules.iter().map(|r| r.id).collect::<Vec<_>>(),
            [1, 2, 3, 4]
        );
        assert_eq!(p.relations.iter().filter(|r| r.input).count(), 4);
        assert_eq!(p.relations.iter().filter(|r| r.output).count(), 2);
        assert_eq!(p.facts.len(), 8);
    }

    #[test]
    fn empty_source() {
        let p = parse_program("").unwrap();
        assert!(p.relations.is_empty() && p.rules.is_empty() && p.facts.is_empty());
        assert_eq!(parse_program("  // nothing\n/* here */").unwrap(), p);
    }

    #[test]
    fn ungrounded_constraint_variable() {
        let src = ".decl p(x:number)\n.decl q(x:number)\nq(X) :- p(Y), X != Y.";
        match parse_program(src) {
            Err(ProgramError::UngroundedVariable { rule, variable }) => {
                assert_eq!(rule, 1);
                assert_eq!(variable, "X");
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn undeclared_and_arity_errors() {
        assert_eq!(
            parse_program("p(1)."),
            Err(ProgramError::UndeclaredRelation("p".into()))
        );
        assert!(matches!(
            parse_program(".decl p(x:number)\np(1, 2)."),
            Err(ProgramError::ArityMismatch { expected: 1, found: 2, .. })
        ));
        assert_eq!(
            parse_program(".decl p(x:number)\n.decl p(y:symbol)"),
            Err(ProgramError::DuplicateDeclaration("p".into()))
        );
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_program(".decl p(x:number)\np(1) :- p(X) p(X).") {
            Err(ProgramError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 14)),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn type_checks() {
        assert!(matches!(
            parse_program(".decl p(x:symbol)\n.decl q(x:symbol)\nq(X) :- p(X), X < \"b\"."),
            Err(ProgramError::ConstraintType { .. })
        ));
        assert!(matches!(
            parse_program(".decl p(x:symbol)\n.decl n(x:number)\nn(X) :- p(X)."),
            Err(ProgramError::TypeMismatch { .. })
        ));
        assert!(matches!(
            parse_program(".decl n(x:number)\nn(a)."),
            Err(ProgramError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn wildcards_get_distinct_slots() {
        let p = parse_program(".decl e(x:number, y:number)\n.decl s(x:number)\ns(X) :- e(X, _), e(_, X).")
            .unwrap();
        let r = &p.rules[0];
        assert_eq!(r.variables, ["X", "_", "_"]);
    }

    #[test]
    fn wildcard_in_negation_is_ungrounded() {
        let src = ".decl e(x:number, y:number)\n.decl s(x:number)\ns(X) :- e(X, X), !e(X, _).";
        assert!(matches!(
            parse_program(src),
            Err(ProgramError::UngroundedVariable { .. })
        ));
    }

    #[test]
    fn labels_and_quoted_symbols() {
        let src = ".decl p(x:symbol)\n.decl q(x:symbol)\np(\"has space\").\nr9: q(X) :- p(X), X != \"b\".";
        let p = parse_program(src).unwrap();
        assert_eq!(p.rules[0].id, 1);
        assert_eq!(p.facts[0].args[0], Constant::symbol("has space"));
    }

    #[test]
    fn pretty_print_round_trips_points_to() {
        let p = parse_program(POINTS_TO).unwrap();
        let again = parse_program(&alloc::format!("{}", p)).unwrap();
        assert_eq!(p, again);
    }
}
