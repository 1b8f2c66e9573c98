//! Constants and the symbol dictionary.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::ast::AttrType;

/// A stored attribute value.
///
/// Symbols are dense interned ids, numbers are stored as-is. The declared
/// attribute type of a column says which reading applies.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Value(pub i64);

/// A constant as written by a user, before interning.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Constant {
    Symbol(String),
    Number(i64),
}

impl Constant {
    pub fn symbol(text: impl Into<String>) -> Self {
        Constant::Symbol(text.into())
    }

    pub fn attr_type(&self) -> AttrType {
        match self {
            Constant::Symbol(_) => AttrType::Symbol,
            Constant::Number(_) => AttrType::Number,
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Symbol(s) => write!(f, "\"{}\"", s),
            Constant::Number(n) => write!(f, "{}", n),
        }
    }
}

/// Bidirectional symbol dictionary. Interning is injective and ids are
/// never reused within one table.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    ids: BTreeMap<String, Value>,
    names: Vec<String>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, text: &str) -> Value {
        if let Some(v) = self.ids.get(text) {
            return *v;
        }
        let v = Value(self.names.len() as i64);
        self.names.push(text.to_string());
        self.ids.insert(text.to_string(), v);
        v
    }

    /// Interns symbols; numbers pass through unchanged.
    pub fn intern_constant(&mut self, c: &Constant) -> Value {
        match c {
            Constant::Symbol(s) => self.intern(s),
            Constant::Number(n) => Value(*n),
        }
    }

    pub fn lookup(&self, text: &str) -> Option<Value> {
        self.ids.get(text).copied()
    }

    /// Like [`SymbolTable::intern_constant`] but never grows the table. A
    /// symbol that was never interned cannot occur in any stored tuple.
    pub fn value_of(&self, c: &Constant) -> Option<Value> {
        match c {
            Constant::Symbol(s) => self.lookup(s),
            Constant::Number(n) => Some(Value(*n)),
        }
    }

    pub fn resolve(&self, v: Value) -> Option<&str> {
        usize::try_from(v.0)
            .ok()
            .and_then(|i| self.names.get(i))
            .map(String::as_str)
    }

    pub fn constant(&self, v: Value, ty: AttrType) -> Constant {
        match ty {
            AttrType::Number => Constant::Number(v.0),
            AttrType::Symbol => Constant::Symbol(
                self.resolve(v)
                    .map(ToString::to_string)
                    .unwrap_or_else(|| alloc::format!("#{}", v.0)),
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_idempotent() {
        let mut t = SymbolTable::new();
        let a = t.intern("l1");
        assert_eq!(t.intern("l1"), a);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn interning_is_injective() {
        let mut t = SymbolTable::new();
        let a = t.intern("a");
        let b = t.intern("b");
        assert_ne!(a, b);
        assert_eq!(t.resolve(a), Some("a"));
        assert_eq!(t.resolve(b), Some("b"));
    }

    #[test]
    fn numbers_pass_through() {
        let mut t = SymbolTable::new();
        assert_eq!(t.intern_constant(&Constant::Number(42)), Value(42));
        assert!(t.is_empty());
    }

    #[test]
    fn lookup_does_not_intern() {
        let t = SymbolTable::new();
        assert_eq!(t.value_of(&Constant::symbol("x")), None);
        assert_eq!(t.value_of(&Constant::Number(-3)), Some(Value(-3)));
    }
}
