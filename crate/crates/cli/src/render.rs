//! Text rendering of proof fragments and failed subproofs.
//!
//! Trees grow upwards: a node's text sits under an inference line ending in
//! its rule label `(Rk)`, and the children are laid out left to right two
//! rows above. A subtree is as wide as its children plus one separating
//! column each, or as its own text if that is wider; node text is centred
//! over the line.

use provlog::explain::{FailedSubproof, ProofChild, ProofNode};
use provlog::ast::Term;
use provlog::{Program, RuleId};

/// A rendered box. Widths count display columns; a leaf carrying a ✓/✗
/// mark reserves one extra column after its text.
enum Tree {
    Leaf { text: String, width: usize },
    Inner { text: String, rule: RuleId, children: Vec<Tree>, width: usize, height: usize },
}

impl Tree {
    fn leaf(text: String) -> Self {
        let width = columns(&text);
        Tree::Leaf { text, width }
    }

    fn marked(text: String, holds: bool) -> Self {
        let text = format!("{text} {}", if holds { '✓' } else { 'X' });
        let width = columns(&text) + 1;
        Tree::Leaf { text, width }
    }

    fn inner(text: String, rule: RuleId, children: Vec<Tree>) -> Self {
        let width = children.iter().map(|c| c.width() + 1).sum::<usize>().max(columns(&text));
        let height = children.iter().map(Tree::height).max().unwrap_or(0) + 2;
        Tree::Inner { text, rule, children, width, height }
    }

    fn width(&self) -> usize {
        match self {
            Tree::Leaf { width, .. } | Tree::Inner { width, .. } => *width,
        }
    }

    fn height(&self) -> usize {
        match self {
            Tree::Leaf { .. } => 1,
            Tree::Inner { height, .. } => *height,
        }
    }

    /// Draws into `rows`, where row 0 is the bottom line of the picture.
    fn draw(&self, rows: &mut [Vec<char>], x: usize, y: usize) {
        match self {
            Tree::Leaf { text, .. } => put(rows, x, y, text),
            Tree::Inner { text, rule, children, width, .. } => {
                put(rows, x + (width - columns(text)) / 2, y, text);
                let label = format!("(R{rule})");
                let dashes = width.saturating_sub(columns(&label));
                put(rows, x, y + 1, &"-".repeat(dashes));
                put(rows, x + dashes, y + 1, &label);
                let mut cx = x;
                for c in children {
                    c.draw(rows, cx, y + 2);
                    cx += c.width() + 1;
                }
            }
        }
    }

    fn render(&self) -> String {
        let mut rows = vec![Vec::new(); self.height()];
        self.draw(&mut rows, 0, 0);
        let mut out = String::new();
        for row in rows.iter().rev() {
            let line: String = row.iter().collect();
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

fn columns(s: &str) -> usize {
    s.chars().count()
}

fn put(rows: &mut [Vec<char>], x: usize, y: usize, text: &str) {
    let row = &mut rows[y];
    for (i, c) in text.chars().enumerate() {
        if row.len() <= x + i {
            row.resize(x + i + 1, ' ');
        }
        row[x + i] = c;
    }
}

fn proof_tree(program: &Program, node: &ProofNode) -> Tree {
    let text = program.display_ground(&node.tuple).to_string();
    if node.rule == 0 {
        return Tree::leaf(text);
    }
    if !node.expanded {
        return Tree::leaf(format!("{text} [R{} h={}]", node.rule, node.height));
    }
    let children = node
        .children
        .iter()
        .map(|c| match c {
            ProofChild::Tuple(n) => proof_tree(program, n),
            ProofChild::Constraint(leaf) => Tree::leaf(leaf.text.clone()),
        })
        .collect();
    Tree::inner(text, node.rule, children)
}

/// The fragment as an ASCII proof tree. Frontier nodes left unexpanded show
/// their rule and height in brackets.
pub fn proof(program: &Program, node: &ProofNode) -> String {
    proof_tree(program, node).render()
}

/// One marked level for an absent tuple: every literal of the instantiated
/// rule followed by `✓` if it holds or `X` if it fails.
pub fn failed_subproof(program: &Program, fs: &FailedSubproof) -> String {
    let children = fs.literals.iter().map(|l| Tree::marked(l.text.clone(), l.holds)).collect();
    let head = program.display_ground(&fs.head).separator(",").to_string();
    Tree::inner(head, fs.rule, children).render()
}

/// A rule as listed when choosing a candidate: head on the first line, one
/// literal per indented line, arguments without spaces.
pub fn rule_listing(program: &Program, rule: RuleId) -> String {
    let Some(r) = program.rule(rule) else {
        return String::new();
    };
    let compact = |a| program.display_atom(r, a).to_string().replace(", ", ",");
    let mut lines: Vec<String> = r.body.iter().map(compact).collect();
    lines.extend(r.negations.iter().map(|a| format!("!{}", compact(a))));
    let term = |t: &Term| match t {
        Term::Var(v) => r.var_name(*v).to_string(),
        Term::Const(c) => c.to_string(),
    };
    lines.extend(
        r.constraints
            .iter()
            .map(|c| format!("{} {} {}", term(&c.lhs), c.op.symbol(), term(&c.rhs))),
    );
    let mut out = format!("{rule}: {} :-\n", compact(&r.head));
    let n = lines.len();
    for (i, l) in lines.into_iter().enumerate() {
        out.push_str("   ");
        out.push_str(&l);
        out.push_str(if i + 1 == n { ".\n" } else { ",\n" });
    }
    out
}
