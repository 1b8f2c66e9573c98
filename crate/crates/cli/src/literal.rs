//! Ground tuple literals as typed at the REPL: `alias("a", "b")`,
//! `path(1, 7)`. Symbols are double-quoted (a bare identifier is accepted
//! too), numbers are decimal integers.

use provlog::ast::AttrType;
use provlog::{Constant, GroundAtom, Program, ProgramError};

#[derive(Debug, thiserror::Error)]
pub enum LiteralError {
    #[error("malformed tuple `{text}`: {reason}")]
    Syntax { text: String, reason: &'static str },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

pub fn parse_tuple(program: &Program, text: &str) -> Result<GroundAtom, LiteralError> {
    let (name, args) = split(text)?;
    program.ground(name, args).map_err(Into::into)
}

fn split(text: &str) -> Result<(&str, Vec<Constant>), LiteralError> {
    let bad = |reason| LiteralError::Syntax {
        text: text.trim().to_string(),
        reason,
    };
    let t = text.trim();
    let open = t.find('(').ok_or_else(|| bad("expected `(`"))?;
    let name = t[..open].trim();
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(bad("expected a relation name"));
    }
    let rest = t[open + 1..].strip_suffix(')').ok_or_else(|| bad("expected `)` at the end"))?;

    let mut args = Vec::new();
    let mut chars = rest.chars().peekable();
    loop {
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        match chars.peek() {
            None if args.is_empty() => break,
            None => return Err(bad("expected an argument after `,`")),
            Some('"') => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => s.push(chars.next().ok_or_else(|| bad("unterminated string"))?),
                        Some(c) => s.push(c),
                        None => return Err(bad("unterminated string")),
                    }
                }
                args.push(Constant::Symbol(s));
            }
            Some(_) => {
                let mut word = String::new();
                while let Some(c) = chars.next_if(|c| *c != ',' && !c.is_whitespace()) {
                    word.push(c);
                }
                if word.is_empty() {
                    return Err(bad("empty argument"));
                }
                args.push(match word.parse::<i64>() {
                    Ok(n) => Constant::Number(n),
                    Err(_) if word.chars().all(|c| c.is_alphanumeric() || c == '_') => Constant::Symbol(word),
                    Err(_) => return Err(bad("arguments are quoted symbols or integers")),
                });
            }
        }
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        match chars.next() {
            None => break,
            Some(',') => continue,
            Some(_) => return Err(bad("expected `,` between arguments")),
        }
    }
    Ok((name, args))
}

/// Parses a constant of a known type from free text, as in fact files and
/// query strings: symbols are taken verbatim.
pub fn parse_constant(text: &str, ty: AttrType) -> Option<Constant> {
    match ty {
        AttrType::Symbol => Some(Constant::symbol(text)),
        AttrType::Number => text.trim().parse().ok().map(Constant::Number),
    }
}
