//! Precedence inference: the smallest quasi-order on symbols compatible
//! with the occurrence constraints of symbol types and rule right-hand
//! sides.

use std::collections::{BTreeSet, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::diagnostic::{Code, Diagnostic};
use crate::signature::{output_head, RewriteRule, SymbolDecl};
use crate::term::{Name, Sort};

#[derive(Clone, Debug, Default)]
pub struct Precedence {
    class_of: HashMap<Name, usize>,
    /// Equivalence classes in increasing order.
    classes: Vec<Vec<Name>>,
    /// For each class, the classes strictly below it.
    below: Vec<BTreeSet<usize>>,
    /// Strict type-occurrence constraints relaxed for inductive-recursive
    /// pairs `(C, F)`.
    pub relaxed: Vec<(Name, Name)>,
}

impl Precedence {
    pub fn class(&self, f: &str) -> Option<usize> {
        self.class_of.get(f).copied()
    }
    pub fn classes(&self) -> &[Vec<Name>] {
        &self.classes
    }
    /// `f < g`
    pub fn lt(&self, f: &str, g: &str) -> bool {
        match (self.class(f), self.class(g)) {
            (Some(a), Some(b)) => self.below[b].contains(&a),
            _ => false,
        }
    }
    /// `f ≃ g`
    pub fn equiv(&self, f: &str, g: &str) -> bool {
        f == g || matches!((self.class(f), self.class(g)), (Some(a), Some(b)) if a == b)
    }
    /// `f ≤ g`
    pub fn le(&self, f: &str, g: &str) -> bool {
        self.equiv(f, g) || self.lt(f, g)
    }
    /// Members of the class of `f`.
    pub fn equivalents(&self, f: &str) -> Vec<Name> {
        match self.class(f) {
            Some(c) => self.classes[c].clone(),
            None => vec![Name::from(f)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Edge {
    Strict,
    Weak,
}

/// Build the constraint graph and quotient it by its strongly connected
/// components. `g <: f` for `g` in τ_f, `g ≤: f` for `g` in a rule of `f`
/// (rhs, environment, ρ), and `g ≤: C` for every predicate symbol `g` in
/// the type of a recursor for `C`.
pub fn infer_precedence(decls: &[SymbolDecl], rules: &[RewriteRule]) -> Result<Precedence, Vec<Diagnostic>> {
    let mut graph: DiGraph<Name, Edge> = DiGraph::new();
    let mut node: HashMap<Name, NodeIndex> = HashMap::new();
    for d in decls {
        let ix = graph.add_node(d.name.clone());
        node.insert(d.name.clone(), ix);
    }
    let decl = |f: &str| decls.iter().find(|d| &*d.name == f);
    let defined: BTreeSet<&str> = rules.iter().map(|r| &*r.head).collect();
    let is_defined_pred = |f: &str| defined.contains(f) && decl(f).is_some_and(|d| d.sort == Sort::Box);
    let is_constant_pred = |f: &str| !defined.contains(f) && decl(f).is_some_and(|d| d.sort == Sort::Box);
    // F occurs in the type of some constructor of C.
    let in_constructor_of = |f: &str, c: &str| {
        decls
            .iter()
            .any(|d| output_head(&d.ty).is_some_and(|h| &*h == c) && &*d.name != c && d.ty.occurs_sym(f))
    };

    let mut relaxed = Vec::new();
    let mut strict_edges = Vec::new();
    for d in decls {
        let f = &d.name;
        for g in d.ty.symbols() {
            let (Some(&a), Some(&b)) = (node.get(&g), node.get(f)) else { continue };
            if is_constant_pred(&g) && is_defined_pred(f) && in_constructor_of(f, &g) {
                relaxed.push((g.clone(), f.clone()));
                graph.add_edge(a, b, Edge::Weak);
                graph.add_edge(b, a, Edge::Weak);
            } else {
                graph.add_edge(a, b, Edge::Strict);
                strict_edges.push((g.clone(), f.clone()));
            }
        }
        if let Some(c) = &d.recursor_for {
            for g in d.ty.symbols() {
                if decl(&g).is_some_and(|e| e.sort == Sort::Box) {
                    if let (Some(&a), Some(&b)) = (node.get(&g), node.get(c)) {
                        graph.add_edge(a, b, Edge::Weak);
                    }
                }
            }
        }
    }
    for r in rules {
        let Some(&b) = node.get(&r.head) else { continue };
        let mut syms = r.rhs.symbols();
        for (_, t) in r.env.bindings() {
            syms.extend(t.symbols());
        }
        for (_, t) in r.rho.iter() {
            syms.extend(t.symbols());
        }
        for g in syms {
            if let Some(&a) = node.get(&g) {
                graph.add_edge(a, b, Edge::Weak);
            }
        }
    }

    let sccs = tarjan_scc(&graph);
    let mut comp = vec![0usize; graph.node_count()];
    for (i, scc) in sccs.iter().enumerate() {
        for n in scc {
            comp[n.index()] = i;
        }
    }
    let mut errors = Vec::new();
    for (g, f) in &strict_edges {
        let (a, b) = (node[g], node[f]);
        if comp[a.index()] == comp[b.index()] {
            let msg = if g == f {
                format!("the type of {f} mentions {f} itself")
            } else {
                let members: Vec<String> =
                    sccs[comp[a.index()]].iter().map(|n| graph[*n].to_string()).collect();
                format!(
                    "{g} occurs in the type of {f} so it must be strictly smaller, but {{{}}} are forced equivalent",
                    members.join(", ")
                )
            };
            errors.push(Diagnostic::error(Code::PrecedenceCycle, msg).symbol(f));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    // Order classes topologically, breaking ties by declaration order.
    let ncomp = sccs.len();
    let first_decl: Vec<usize> =
        sccs.iter().map(|scc| scc.iter().map(|n| n.index()).min().unwrap_or(0)).collect();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncomp];
    let mut indeg = vec![0usize; ncomp];
    for e in graph.edge_indices() {
        let (a, b) = graph.edge_endpoints(e).expect("edge");
        let (ca, cb) = (comp[a.index()], comp[b.index()]);
        if ca != cb && succ[ca].insert(cb) {
            indeg[cb] += 1;
        }
    }
    let mut ready: BTreeSet<(usize, usize)> =
        (0..ncomp).filter(|&c| indeg[c] == 0).map(|c| (first_decl[c], c)).collect();
    let mut order = Vec::with_capacity(ncomp);
    while let Some(&(k, c)) = ready.iter().next() {
        ready.remove(&(k, c));
        order.push(c);
        for &s in &succ[c] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.insert((first_decl[s], s));
            }
        }
    }
    let mut rank = vec![0usize; ncomp];
    for (i, &c) in order.iter().enumerate() {
        rank[c] = i;
    }
    let mut classes = Vec::with_capacity(ncomp);
    for &c in &order {
        let mut members: Vec<NodeIndex> = sccs[c].clone();
        members.sort();
        classes.push(members.into_iter().map(|n| graph[n].clone()).collect::<Vec<_>>());
    }
    let mut below: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncomp];
    for &c in &order {
        let r = rank[c];
        for &s in &succ[c] {
            let rs = rank[s];
            let mut add = below[r].clone();
            add.insert(r);
            below[rs].extend(add);
        }
    }
    let mut class_of = HashMap::new();
    for (i, members) in classes.iter().enumerate() {
        for m in members {
            class_of.insert(m.clone(), i);
        }
    }
    Ok(Precedence { class_of, classes, below, relaxed })
}
