//! Precedence graph and stratification.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::ast::{Program, RelId, RuleId};
use crate::error::CyclicNegation;

/// Dependency edge from a body relation to a head relation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Edge {
    pub from: RelId,
    pub to: RelId,
    pub negative: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecedenceGraph {
    pub nodes: Vec<RelId>,
    /// Sorted by `(from, to, negative)`, deduplicated.
    pub edges: Vec<Edge>,
}

impl PrecedenceGraph {
    fn successors(&self, n: RelId) -> impl Iterator<Item = RelId> + '_ {
        let start = self.edges.partition_point(|e| e.from < n);
        self.edges[start..]
            .iter()
            .take_while(move |e| e.from == n)
            .map(|e| e.to)
    }
}

pub fn build_precedence_graph(program: &Program) -> PrecedenceGraph {
    let mut edges = BTreeSet::new();
    for rule in &program.rules {
        let to = rule.head.relation;
        for a in &rule.body {
            edges.insert(Edge {
                from: a.relation,
                to,
                negative: false,
            });
        }
        for a in &rule.negations {
            edges.insert(Edge {
                from: a.relation,
                to,
                negative: true,
            });
        }
    }
    PrecedenceGraph {
        nodes: program.rel_ids().collect(),
        edges: edges.into_iter().collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    pub relations: Vec<RelId>,
    pub rules: Vec<RuleId>,
}

impl Stratum {
    pub fn contains(&self, r: RelId) -> bool {
        self.relations.contains(&r)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratification {
    pub strata: Vec<Stratum>,
    stratum_of: Vec<usize>,
}

impl Stratification {
    pub fn stratum_of(&self, r: RelId) -> usize {
        self.stratum_of[r.0]
    }
}

/// Iterative Tarjan. Components come out in reverse topological order.
fn tarjan(g: &PrecedenceGraph) -> Vec<Vec<RelId>> {
    const UNSEEN: usize = usize::MAX;
    let n = g.nodes.len();
    let mut index = alloc::vec![UNSEEN; n];
    let mut low = alloc::vec![0; n];
    let mut on_stack = alloc::vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    let succ: Vec<Vec<RelId>> = g.nodes.iter().map(|&v| g.successors(v).collect()).collect();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // (node, next successor position)
        let mut work = alloc::vec![(root, 0usize)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if let Some(&w) = succ[v].get(*pos) {
                *pos += 1;
                let w = w.0;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(RelId(w));
                    if w == v {
                        break;
                    }
                }
                comp.sort();
                comps.push(comp);
            }
        }
    }
    comps
}

/// Splits the program into strata: input-only relations first in
/// declaration order, then the SCC condensation in topological order, ties
/// broken by the smallest declaration index in each component.
pub fn stratify(program: &Program, g: &PrecedenceGraph) -> Result<Stratification, CyclicNegation> {
    let comps = tarjan(g);
    let n = g.nodes.len();
    let mut comp_of = alloc::vec![0usize; n];
    for (i, c) in comps.iter().enumerate() {
        for r in c {
            comp_of[r.0] = i;
        }
    }
    for e in &g.edges {
        if e.negative && comp_of[e.from.0] == comp_of[e.to.0] {
            return Err(CyclicNegation {
                negated: program.relation(e.from).name.clone(),
                head: program.relation(e.to).name.clone(),
            });
        }
    }

    let mut has_rules = alloc::vec![false; n];
    for r in &program.rules {
        has_rules[r.head.relation.0] = true;
    }

    let mut order: Vec<usize> = Vec::with_capacity(comps.len());
    let mut placed = alloc::vec![false; comps.len()];
    // input-only relations never have incoming edges, so each is its own
    // component
    for r in 0..n {
        if !has_rules[r] {
            let c = comp_of[r];
            placed[c] = true;
            order.push(c);
        }
    }
    let mut indegree = alloc::vec![0usize; comps.len()];
    let mut comp_edges = BTreeSet::new();
    for e in &g.edges {
        let (a, b) = (comp_of[e.from.0], comp_of[e.to.0]);
        if a != b && comp_edges.insert((a, b)) {
            indegree[b] += 1;
        }
    }
    for &c in &order {
        for &(_, b) in comp_edges.range((c, 0)..(c + 1, 0)) {
            indegree[b] -= 1;
        }
    }
    // ready set keyed by the component's first declared relation
    let mut ready: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (c, comp) in comps.iter().enumerate() {
        if !placed[c] && indegree[c] == 0 {
            ready.insert((comp[0].0, c));
        }
    }
    while let Some((key, c)) = ready.iter().next().copied() {
        ready.remove(&(key, c));
        placed[c] = true;
        order.push(c);
        for &(_, b) in comp_edges.range((c, 0)..(c + 1, 0)) {
            indegree[b] -= 1;
            if indegree[b] == 0 && !placed[b] {
                ready.insert((comps[b][0].0, b));
            }
        }
    }
    debug_assert_eq!(order.len(), comps.len());

    let mut stratum_of = alloc::vec![0usize; n];
    let strata = order
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            for r in &comps[c] {
                stratum_of[r.0] = i;
            }
            Stratum {
                relations: comps[c].clone(),
                rules: program
                    .rules
                    .iter()
                    .filter(|r| comps[c].contains(&r.head.relation))
                    .map(|r| r.id)
                    .collect(),
            }
        })
        .collect();
    Ok(Stratification { strata, stratum_of })
}
