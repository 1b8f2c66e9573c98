//! The interactive explain loop.
//!
//! [`Repl::handle`] consumes one input line and returns what to print;
//! [`Repl::prompt`] says what to show before the next line. Keeping the
//! loop itself in [`run`] separate makes transcripts reproducible from a
//! script.

use std::io::{self, BufRead, Write};

use provlog::explain::{NegationSession, SessionStep, DEFAULT_DEPTH};
use provlog::{Database, Explorer};

use crate::{json, literal, render};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

const HELP: &str = "\
commands:
  explain R(c, ...)          minimal proof fragment of a stored tuple
  explainnegation R(c, ...)  walk through why a tuple is absent
  setdepth N|inf             levels to construct per explain query
  format text|json           output format
  quit
";

pub struct Repl<'a> {
    ex: Explorer<'a>,
    depth: usize,
    format: Format,
    session: Option<NegationSession>,
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Response {
    pub text: String,
    pub quit: bool,
}

impl Response {
    fn text(text: impl Into<String>) -> Self {
        Response {
            text: text.into(),
            quit: false,
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Response::text(format!("error: {e}\n"))
    }
}

impl<'a> Repl<'a> {
    pub fn new(db: &'a Database) -> Self {
        Repl {
            ex: Explorer::new(db),
            depth: DEFAULT_DEPTH,
            format: Format::Text,
            session: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn prompt(&self) -> String {
        match &self.session {
            None => "Enter command > ".into(),
            Some(s) if s.step == SessionStep::PickRule => "Pick a rule number: ".into(),
            Some(s) => match s.next_variable() {
                Some(v) => format!("Pick a value for {}: ", v.name),
                None => "Enter command > ".into(),
            },
        }
    }

    pub fn handle(&mut self, line: &str) -> Response {
        if self.session.is_some() {
            return self.continue_session(line.trim());
        }
        let line = line.trim();
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match cmd {
            "" => Response::default(),
            "explain" => self.explain(rest),
            "explainnegation" => self.explain_negation(rest),
            "setdepth" => match rest {
                "inf" | "all" => {
                    self.depth = usize::MAX;
                    Response::text("depth = inf\n")
                }
                _ => match rest.parse::<usize>() {
                    Ok(n) if n > 0 => {
                        self.depth = n;
                        Response::text(format!("depth = {n}\n"))
                    }
                    _ => Response::error(format!("setdepth expects a positive integer or `inf`, found `{rest}`")),
                },
            },
            "format" => match rest {
                "text" => {
                    self.format = Format::Text;
                    Response::text("format = text\n")
                }
                "json" => {
                    self.format = Format::Json;
                    Response::text("format = json\n")
                }
                _ => Response::error(format!("format expects `text` or `json`, found `{rest}`")),
            },
            "help" => Response::text(HELP),
            "quit" | "exit" => Response {
                text: String::new(),
                quit: true,
            },
            other => Response::error(format!("unknown command `{other}` (try `help`)")),
        }
    }

    fn explain(&self, arg: &str) -> Response {
        let program = self.ex.database().program();
        let t = match literal::parse_tuple(program, arg) {
            Ok(t) => t,
            Err(e) => return Response::error(e),
        };
        match self.ex.explain(&t, self.depth) {
            Ok(node) => Response::text(match self.format {
                Format::Text => render::proof(program, &node),
                Format::Json => json::proof_text(program, &node) + "\n",
            }),
            Err(e) => Response::error(e),
        }
    }

    fn explain_negation(&mut self, arg: &str) -> Response {
        let program = self.ex.database().program();
        let t = match literal::parse_tuple(program, arg) {
            Ok(t) => t,
            Err(e) => return Response::error(e),
        };
        let session = match NegationSession::start(&self.ex, t) {
            Ok(s) => s,
            Err(e) => return Response::error(e),
        };
        if session.candidates.is_empty() {
            let shown = program.display_ground(&session.target).to_string();
            return Response::text(format!("no rule derives {shown}; it could only be an input fact\n"));
        }
        let mut text = String::new();
        for c in &session.candidates {
            text.push_str(&render::rule_listing(program, c.rule));
            text.push('\n');
        }
        self.session = Some(session);
        Response::text(text)
    }

    fn continue_session(&mut self, line: &str) -> Response {
        let ex = self.ex;
        let session = self.session.as_mut().expect("session in progress");
        if line == "cancel" {
            self.session = None;
            return Response::default();
        }
        let outcome = match session.step {
            SessionStep::PickRule => match line.parse() {
                Ok(rule) => session.pick_rule(&ex, rule),
                Err(_) => return Response::error(format!("`{line}` is not a rule number")),
            },
            _ => session.bind_text(&ex, line),
        };
        if let Err(e) = outcome {
            return Response::error(e);
        }
        if session.step != SessionStep::Done {
            return Response::default();
        }
        let session = self.session.take().expect("session in progress");
        let fs = session.result.expect("finished session has a result");
        let program = ex.database().program();
        Response::text(match self.format {
            Format::Text => render::failed_subproof(program, &fs),
            Format::Json => serde_json::to_string(&json::failed(program, &fs)).expect("serializable") + "\n",
        })
    }
}

/// Reads commands from `input` until `quit` or end of input. With `echo`
/// each line read is written after its prompt, so the output reads like a
/// terminal session even when input comes from a file.
pub fn run(repl: &mut Repl<'_>, input: impl BufRead, mut out: impl Write, echo: bool) -> io::Result<()> {
    let mut lines = input.lines();
    loop {
        write!(out, "{}", repl.prompt())?;
        out.flush()?;
        let Some(line) = lines.next().transpose()? else {
            writeln!(out)?;
            return Ok(());
        };
        if echo {
            writeln!(out, "{line}")?;
        }
        let r = repl.handle(&line);
        out.write_all(r.text.as_bytes())?;
        if r.quit {
            return Ok(());
        }
    }
}

/// Runs a whole script through a fresh REPL and returns the transcript.
pub fn transcript(db: &Database, script: &str) -> String {
    let mut out = Vec::new();
    run(&mut Repl::new(db), script.as_bytes(), &mut out, true).expect("writing to memory");
    String::from_utf8(out).expect("utf-8 output")
}
