//! The JSON shapes shared by the REPL's `format json` mode and the HTTP API.
//!
//! A tuple is an array whose first element is the relation name followed by
//! its arguments (strings for symbols, numbers for numbers). A proof node is
//! `{"kind":"tuple","tuple":[..],"rule":k,"height":h,"expanded":b,"children":[..]}`
//! or `{"kind":"constraint","text":"..","holds":b}`.

use std::collections::BTreeMap;

use provlog::explain::{Candidate, ConstraintLeaf, FailedSubproof, LiteralKind, ProofChild, ProofNode};
use provlog::{Annotation, Constant, EvalStats, GroundAtom, Program, RuleId};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("a tuple is a non-empty array starting with the relation name")]
    TupleShape,
    #[error("argument {0} must be a string or an integer")]
    Argument(usize),
    #[error(transparent)]
    Program(#[from] provlog::ProgramError),
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

pub fn constant(c: &Constant) -> Json {
    match c {
        Constant::Symbol(s) => Json::String(s.clone()),
        Constant::Number(n) => Json::from(*n),
    }
}

pub fn tuple(program: &Program, t: &GroundAtom) -> Json {
    let mut v = vec![Json::String(program.relation(t.relation).name.clone())];
    v.extend(t.args.iter().map(constant));
    Json::Array(v)
}

pub fn parse_constant(j: &Json) -> Option<Constant> {
    match j {
        Json::String(s) => Some(Constant::symbol(s.as_str())),
        Json::Number(n) => n.as_i64().map(Constant::Number),
        _ => None,
    }
}

/// Reads a tuple array back, checking relation, arity and types.
pub fn parse_tuple(program: &Program, j: &Json) -> Result<GroundAtom, JsonError> {
    let items = j.as_array().ok_or(JsonError::TupleShape)?;
    let (name, args) = items.split_first().ok_or(JsonError::TupleShape)?;
    let name = name.as_str().ok_or(JsonError::TupleShape)?;
    let args = args
        .iter()
        .enumerate()
        .map(|(i, a)| parse_constant(a).ok_or(JsonError::Argument(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(program.ground(name, args)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Tuple {
        tuple: Json,
        rule: RuleId,
        height: u32,
        expanded: bool,
        children: Vec<Node>,
    },
    Constraint {
        text: String,
        holds: bool,
    },
}

pub fn node(program: &Program, n: &ProofNode) -> Node {
    Node::Tuple {
        tuple: tuple(program, &n.tuple),
        rule: n.rule,
        height: n.height,
        expanded: n.expanded,
        children: n
            .children
            .iter()
            .map(|c| match c {
                ProofChild::Tuple(t) => node(program, t),
                ProofChild::Constraint(c) => Node::Constraint {
                    text: c.text.clone(),
                    holds: c.holds,
                },
            })
            .collect(),
    }
}

/// Rebuilds the explorer value a [`Node`] was made from.
pub fn proof_node(program: &Program, n: &Node) -> Result<ProofNode, JsonError> {
    match n {
        Node::Tuple {
            tuple,
            rule,
            height,
            expanded,
            children,
        } => {
            let children = children
                .iter()
                .map(|c| match c {
                    Node::Constraint { text, holds } => Ok(ProofChild::Constraint(ConstraintLeaf {
                        text: text.clone(),
                        holds: *holds,
                    })),
                    t => proof_node(program, t).map(ProofChild::Tuple),
                })
                .collect::<Result<_, _>>()?;
            Ok(ProofNode {
                tuple: parse_tuple(program, tuple)?,
                rule: *rule,
                height: *height,
                expanded: *expanded,
                children,
            })
        }
        Node::Constraint { .. } => Err(JsonError::TupleShape),
    }
}

pub fn proof_text(program: &Program, n: &ProofNode) -> String {
    serde_json::to_string(&node(program, n)).expect("proof nodes serialize")
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateJson {
    pub rule: RuleId,
    pub text: String,
    pub bindings: BTreeMap<String, Json>,
    pub free: Vec<String>,
}

pub fn candidates(cs: &[Candidate]) -> Vec<CandidateJson> {
    cs.iter()
        .map(|c| CandidateJson {
            rule: c.rule,
            text: c.text.clone(),
            bindings: c.bindings.iter().map(|(k, v)| (k.clone(), constant(v))).collect(),
            free: c.free.clone(),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LiteralJson {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuple: Option<Json>,
    pub text: String,
    pub holds: bool,
    pub mark: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailedJson {
    pub head: Json,
    pub rule: RuleId,
    pub literals: Vec<LiteralJson>,
}

pub fn failed(program: &Program, fs: &FailedSubproof) -> FailedJson {
    FailedJson {
        head: tuple(program, &fs.head),
        rule: fs.rule,
        literals: fs
            .literals
            .iter()
            .map(|l| {
                let (kind, t) = match &l.kind {
                    LiteralKind::Atom(a) => ("atom", Some(tuple(program, a))),
                    LiteralKind::Negated(a) => ("negated", Some(tuple(program, a))),
                    LiteralKind::Constraint => ("constraint", None),
                };
                LiteralJson {
                    kind,
                    tuple: t,
                    text: l.text.clone(),
                    holds: l.holds,
                    mark: if l.holds { "✓" } else { "✗" },
                }
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsJson {
    pub iterations: Vec<u32>,
    pub rule_firings: u64,
    pub annotation_updates: u64,
    pub max_height: u32,
    pub derived_tuples: u64,
}

impl From<&EvalStats> for StatsJson {
    fn from(s: &EvalStats) -> Self {
        StatsJson {
            iterations: s.iterations.clone(),
            rule_firings: s.rule_firings,
            annotation_updates: s.annotation_updates,
            max_height: s.max_height,
            derived_tuples: s.derived_tuples,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub tuple: Json,
    pub rule: RuleId,
    pub height: u32,
}

pub fn row(program: &Program, t: &GroundAtom, a: Annotation) -> Row {
    Row {
        tuple: tuple(program, t),
        rule: a.rule,
        height: a.height,
    }
}
