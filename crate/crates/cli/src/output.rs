//! Writes `.output` relations as `<name>.csv`: tab-separated, symbols
//! unquoted, and with provenance on two trailing columns for the rule id
//! and the proof height.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use provlog::{Constant, Database, RelId};

pub fn relation_csv(db: &Database, rel: RelId) -> String {
    let provenance = db.options().provenance;
    let mut out = String::new();
    for (t, a) in db.tuples(rel) {
        for (i, c) in t.args.iter().enumerate() {
            if i > 0 {
                out.push('\t');
            }
            match c {
                Constant::Symbol(s) => out.push_str(s),
                Constant::Number(n) => write!(out, "{n}").unwrap(),
            }
        }
        if provenance {
            write!(out, "\t{}\t{}", a.rule, a.height).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes every output relation into `dir`, creating it if needed, and
/// returns the files written.
pub fn write_outputs(db: &Database, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for rel in db.program().rel_ids() {
        let decl = db.program().relation(rel);
        if !decl.output {
            continue;
        }
        let path = dir.join(format!("{}.csv", decl.name));
        fs::write(&path, relation_csv(db, rel))?;
        written.push(path);
    }
    Ok(written)
}
