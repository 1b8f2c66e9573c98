//! Tab-separated fact files: `<relation>.facts`, one tuple per line, no
//! header.

use std::fs;
use std::path::{Path, PathBuf};

use provlog::{Constant, Database, RelId};

use crate::literal::parse_constant;

#[derive(Debug, thiserror::Error)]
pub enum FactError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: expected {expected} tab-separated fields, found {found}", path.display())]
    Fields { path: PathBuf, line: usize, expected: usize, found: usize },
    #[error("{}:{line}: `{text}` is not a number", path.display())]
    Number { path: PathBuf, line: usize, text: String },
    #[error(transparent)]
    Eval(#[from] provlog::EvalError),
}

/// Parses one fact file into rows of constants typed by the relation.
pub fn read(db: &Database, rel: RelId, path: &Path) -> Result<Vec<Vec<Constant>>, FactError> {
    let text = fs::read_to_string(path).map_err(|source| FactError::Io {
        path: path.to_owned(),
        source,
    })?;
    let types = db.attr_types(rel);
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != types.len() {
            return Err(FactError::Fields {
                path: path.to_owned(),
                line: i + 1,
                expected: types.len(),
                found: fields.len(),
            });
        }
        let row = fields
            .iter()
            .zip(&types)
            .map(|(f, ty)| {
                parse_constant(f, *ty).ok_or_else(|| FactError::Number {
                    path: path.to_owned(),
                    line: i + 1,
                    text: f.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Loads `<dir>/<name>.facts` for every `.input` relation. A missing file is
/// an error: an input the program declares but the caller did not supply is
/// more often a typo than an intentionally empty relation.
pub fn load_inputs(db: &mut Database, dir: &Path) -> Result<usize, FactError> {
    let inputs: Vec<(RelId, String)> = db
        .program()
        .rel_ids()
        .filter(|r| db.program().relation(*r).input)
        .map(|r| (r, db.program().relation(r).name.clone()))
        .collect();
    let mut n = 0;
    for (rel, name) in inputs {
        let path = dir.join(format!("{name}.facts"));
        for row in read(db, rel, &path)? {
            db.insert_fact(rel, &row)?;
            n += 1;
        }
    }
    Ok(n)
}
