//! Bottom-up Datalog evaluation that records, for every tuple, the rule that
//! derived it and the height of its smallest proof tree, together with a
//! proof explorer that rebuilds minimal proof fragments on demand and walks
//! users through why a tuple was *not* derived.
//!
//! ```
//! use provlog::{parse_program, Database, Options};
//!
//! let program = parse_program(
//!     ".decl edge(x:number, y:number)
//!      .decl path(x:number, y:number)
//!      edge(1, 2). edge(2, 3).
//!      path(X, Y) :- edge(X, Y).
//!      path(X, Z) :- path(X, Y), edge(Y, Z).",
//! )
//! .unwrap();
//! let mut db = Database::new(program, Options::default()).unwrap();
//! db.evaluate().unwrap();
//! let path = db.program().relation_id("path").unwrap();
//! let heights: Vec<u32> = db.tuples(path).iter().map(|(_, a)| a.height).collect();
//! assert_eq!(heights, [1, 2, 1]);
//! ```
//!
//! Without the default `std` feature the crate builds for `no_std` targets
//! with an allocator; only the multi-threaded evaluation path needs `std`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ast;
pub mod engine;
pub mod error;
pub mod explain;
pub mod oracle;
pub mod parser;
pub mod store;
pub mod strata;
pub mod symbols;
pub mod testing;

pub use ast::{GroundAtom, Program, RelId, RuleId};
pub use engine::{Database, EvalError, EvalStats, Options};
pub use error::{CyclicNegation, ProgramError};
pub use explain::{ExplainError, Explorer, ProofChild, ProofNode};
pub use parser::parse_program;
pub use store::{Annotation, InsertOutcome};
pub use symbols::{Constant, Value};
