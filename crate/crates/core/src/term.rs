//! Terms of the calculus: sorts, variables, symbols, abstraction,
//! application and dependent product.
//!
//! Bound variables are de Bruijn indices; free variables carry a name and a
//! sort. Equality and hashing ignore binder names, so `==` is
//! α-equivalence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::position::Position;

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Star,
    Box,
}

impl Sort {
    /// Sort of a variable bound with annotation `ty`: kinds bind predicate
    /// variables, everything else binds object variables.
    pub fn of_annotation(ty: &Term) -> Sort {
        if ty.is_kind() {
            Sort::Box
        } else {
            Sort::Star
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Star => write!(f, "*"),
            Sort::Box => write!(f, "[]"),
        }
    }
}

/// A free variable. Identity is the name; the sort is carried along.
#[derive(Clone, Debug)]
pub struct Var {
    pub name: Name,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Var {
        Var { name: Arc::from(name), sort }
    }
    pub fn object(name: &str) -> Var {
        Var::new(name, Sort::Star)
    }
    pub fn predicate(name: &str) -> Var {
        Var::new(name, Sort::Box)
    }
    pub fn term(&self) -> Term {
        Term::Var(self.clone())
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Var) -> bool {
        self.name == other.name
    }
}
impl Eq for Var {}
impl Hash for Var {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.name.hash(h)
    }
}
impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Var) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Var {
    fn cmp(&self, other: &Var) -> std::cmp::Ordering {
        self.name.cmp(&other.name)
    }
}

/// Name hint and sort of a bound variable. Not observed by equality.
#[derive(Clone, Debug)]
pub struct Binder {
    pub name: Name,
    pub sort: Sort,
}

impl Binder {
    pub fn new(name: &str, sort: Sort) -> Binder {
        Binder { name: Arc::from(name), sort }
    }
}

#[derive(Clone, Debug)]
pub enum Term {
    Sort(Sort),
    Bound(u32),
    Var(Var),
    Sym(Name),
    Abs(Binder, Arc<Term>, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
    Prod(Binder, Arc<Term>, Arc<Term>),
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        use Term::*;
        match (self, other) {
            (Sort(a), Sort(b)) => a == b,
            (Bound(a), Bound(b)) => a == b,
            (Var(a), Var(b)) => a == b,
            (Sym(a), Sym(b)) => a == b,
            (Abs(_, a1, b1), Abs(_, a2, b2)) | (Prod(_, a1, b1), Prod(_, a2, b2)) => {
                (Arc::ptr_eq(a1, a2) || a1 == a2) && (Arc::ptr_eq(b1, b2) || b1 == b2)
            }
            (App(f1, a1), App(f2, a2)) => {
                (Arc::ptr_eq(f1, f2) || f1 == f2) && (Arc::ptr_eq(a1, a2) || a1 == a2)
            }
            _ => false,
        }
    }
}
impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, h: &mut H) {
        use Term::*;
        match self {
            Sort(s) => {
                0u8.hash(h);
                s.hash(h)
            }
            Bound(i) => {
                1u8.hash(h);
                i.hash(h)
            }
            Var(v) => {
                2u8.hash(h);
                v.hash(h)
            }
            Sym(f) => {
                3u8.hash(h);
                f.hash(h)
            }
            Abs(_, a, b) => {
                4u8.hash(h);
                a.hash(h);
                b.hash(h)
            }
            App(a, b) => {
                5u8.hash(h);
                a.hash(h);
                b.hash(h)
            }
            Prod(_, a, b) => {
                6u8.hash(h);
                a.hash(h);
                b.hash(h)
            }
        }
    }
}

/// Syntactic class of a term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    Object,
    Predicate,
    Kind,
    Sort,
    IllFormed,
}

impl Term {
    pub fn star() -> Term {
        Term::Sort(Sort::Star)
    }
    pub fn kind_box() -> Term {
        Term::Sort(Sort::Box)
    }
    pub fn sym(f: &str) -> Term {
        Term::Sym(Arc::from(f))
    }
    pub fn var(v: &Var) -> Term {
        Term::Var(v.clone())
    }
    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }
    pub fn apps<I: IntoIterator<Item = Term>>(f: Term, args: I) -> Term {
        args.into_iter().fold(f, Term::app)
    }
    /// `[x:ty]body` where `x` occurs free in `body`.
    pub fn abs(x: &Var, ty: Term, body: &Term) -> Term {
        Term::Abs(
            Binder { name: x.name.clone(), sort: x.sort },
            Arc::new(ty),
            Arc::new(body.close(&x.name)),
        )
    }
    /// `(x:ty)body` where `x` occurs free in `body`.
    pub fn prod(x: &Var, ty: Term, body: &Term) -> Term {
        Term::Prod(
            Binder { name: x.name.clone(), sort: x.sort },
            Arc::new(ty),
            Arc::new(body.close(&x.name)),
        )
    }
    /// Non-dependent product `dom -> cod`.
    pub fn arrow(dom: Term, cod: Term) -> Term {
        let sort = Sort::of_annotation(&dom);
        Term::Prod(Binder::new("_", sort), Arc::new(dom), Arc::new(cod.shift(1, 0)))
    }
    /// Iterated product over a telescope of named variables.
    pub fn prods(tel: &[(Var, Term)], body: Term) -> Term {
        tel.iter().rev().fold(body, |acc, (x, ty)| Term::prod(x, ty.clone(), &acc))
    }
    /// Iterated abstraction over a telescope of named variables.
    pub fn abss(tel: &[(Var, Term)], body: Term) -> Term {
        tel.iter().rev().fold(body, |acc, (x, ty)| Term::abs(x, ty.clone(), &acc))
    }

    pub fn is_sort(&self) -> bool {
        matches!(self, Term::Sort(_))
    }

    /// `⋆` or `(x:t)K` with `K` a kind.
    pub fn is_kind(&self) -> bool {
        match self {
            Term::Sort(Sort::Star) => true,
            Term::Prod(_, _, b) => b.is_kind(),
            _ => false,
        }
    }

    pub fn as_sym(&self) -> Option<&Name> {
        match self {
            Term::Sym(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Head and arguments of a left-associated application spine.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, a) = t {
            args.push(&**a);
            t = f;
        }
        args.reverse();
        (t, args)
    }

    /// Head symbol of the spine, if any.
    pub fn head_sym(&self) -> Option<&Name> {
        self.spine().0.as_sym()
    }

    /// Shift loose bound indices `>= cutoff` by `d`.
    pub fn shift(&self, d: i64, cutoff: u32) -> Term {
        if d == 0 || !self.has_loose_bound_from(cutoff) {
            return self.clone();
        }
        match self {
            Term::Bound(i) if *i >= cutoff => Term::Bound((*i as i64 + d) as u32),
            Term::Abs(b, t, u) => Term::Abs(
                b.clone(),
                Arc::new(t.shift(d, cutoff)),
                Arc::new(u.shift(d, cutoff + 1)),
            ),
            Term::Prod(b, t, u) => Term::Prod(
                b.clone(),
                Arc::new(t.shift(d, cutoff)),
                Arc::new(u.shift(d, cutoff + 1)),
            ),
            Term::App(t, u) => Term::app(t.shift(d, cutoff), u.shift(d, cutoff)),
            _ => self.clone(),
        }
    }

    /// True if some bound index refers outside `depth` enclosing binders.
    pub fn has_loose_bound_from(&self, depth: u32) -> bool {
        match self {
            Term::Bound(i) => *i >= depth,
            Term::Abs(_, t, u) | Term::Prod(_, t, u) => {
                t.has_loose_bound_from(depth) || u.has_loose_bound_from(depth + 1)
            }
            Term::App(t, u) => t.has_loose_bound_from(depth) || u.has_loose_bound_from(depth),
            _ => false,
        }
    }

    /// True if the term has no loose bound indices.
    pub fn is_locally_closed(&self) -> bool {
        !self.has_loose_bound_from(0)
    }

    /// True if bound index `k` occurs (used to detect non-dependent products).
    pub fn has_bound(&self, k: u32) -> bool {
        match self {
            Term::Bound(i) => *i == k,
            Term::Abs(_, t, u) | Term::Prod(_, t, u) => t.has_bound(k) || u.has_bound(k + 1),
            Term::App(t, u) => t.has_bound(k) || u.has_bound(k),
            _ => false,
        }
    }

    /// Replace bound index `k` by `u` (given at the outer depth) and lower
    /// the indices above it.
    pub fn subst_bound(&self, k: u32, u: &Term) -> Term {
        if !self.has_loose_bound_from(k) {
            return self.clone();
        }
        match self {
            Term::Bound(i) if *i == k => u.shift(k as i64, 0),
            Term::Bound(i) if *i > k => Term::Bound(i - 1),
            Term::Abs(b, t, body) => Term::Abs(
                b.clone(),
                Arc::new(t.subst_bound(k, u)),
                Arc::new(body.subst_bound(k + 1, u)),
            ),
            Term::Prod(b, t, body) => Term::Prod(
                b.clone(),
                Arc::new(t.subst_bound(k, u)),
                Arc::new(body.subst_bound(k + 1, u)),
            ),
            Term::App(t, a) => Term::app(t.subst_bound(k, u), a.subst_bound(k, u)),
            _ => self.clone(),
        }
    }

    /// Body of a binder with its variable replaced by `u`.
    pub fn instantiate(&self, u: &Term) -> Term {
        self.subst_bound(0, u)
    }

    /// Body of a binder with its variable replaced by the free variable `x`.
    pub fn open(&self, x: &Var) -> Term {
        self.instantiate(&Term::Var(x.clone()))
    }

    /// Abstract the free variable `x` into the outermost loose index.
    pub fn close(&self, x: &Name) -> Term {
        self.close_at(x, 0)
    }

    fn close_at(&self, x: &Name, depth: u32) -> Term {
        match self {
            Term::Var(v) if &v.name == x => Term::Bound(depth),
            Term::Bound(i) if *i >= depth => Term::Bound(i + 1),
            Term::Abs(b, t, u) => Term::Abs(
                b.clone(),
                Arc::new(t.close_at(x, depth)),
                Arc::new(u.close_at(x, depth + 1)),
            ),
            Term::Prod(b, t, u) => Term::Prod(
                b.clone(),
                Arc::new(t.close_at(x, depth)),
                Arc::new(u.close_at(x, depth + 1)),
            ),
            Term::App(t, u) => Term::app(t.close_at(x, depth), u.close_at(x, depth)),
            _ => self.clone(),
        }
    }

    /// Capture-avoiding substitution of free variables.
    pub fn subst(&self, theta: &Substitution) -> Term {
        if theta.is_empty() {
            return self.clone();
        }
        self.subst_at(theta, 0)
    }

    fn subst_at(&self, theta: &Substitution, depth: u32) -> Term {
        match self {
            Term::Var(v) => match theta.get(&v.name) {
                Some(u) => u.shift(depth as i64, 0),
                None => self.clone(),
            },
            Term::Abs(b, t, u) => Term::Abs(
                b.clone(),
                Arc::new(t.subst_at(theta, depth)),
                Arc::new(u.subst_at(theta, depth + 1)),
            ),
            Term::Prod(b, t, u) => Term::Prod(
                b.clone(),
                Arc::new(t.subst_at(theta, depth)),
                Arc::new(u.subst_at(theta, depth + 1)),
            ),
            Term::App(t, u) => Term::app(t.subst_at(theta, depth), u.subst_at(theta, depth)),
            _ => self.clone(),
        }
    }

    /// Substitute a single free variable.
    pub fn subst1(&self, x: &Name, u: &Term) -> Term {
        let mut theta = Substitution::new();
        theta.insert(x.clone(), u.clone());
        self.subst(&theta)
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Abs(_, t, u) | Term::Prod(_, t, u) | Term::App(t, u) => {
                t.collect_vars(out);
                u.collect_vars(out);
            }
            _ => {}
        }
    }

    /// Free variables in left-to-right order of first occurrence.
    pub fn free_vars_ordered(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    pub fn occurs_var(&self, x: &str) -> bool {
        match self {
            Term::Var(v) => &*v.name == x,
            Term::Abs(_, t, u) | Term::Prod(_, t, u) | Term::App(t, u) => {
                t.occurs_var(x) || u.occurs_var(x)
            }
            _ => false,
        }
    }

    pub fn occurs_sym(&self, f: &str) -> bool {
        match self {
            Term::Sym(g) => &**g == f,
            Term::Abs(_, t, u) | Term::Prod(_, t, u) | Term::App(t, u) => {
                t.occurs_sym(f) || u.occurs_sym(f)
            }
            _ => false,
        }
    }

    pub fn symbols(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Term::Sym(f) = t {
                out.insert(f.clone());
            }
        });
        out
    }

    /// Pre-order traversal of all subterms (binder bodies seen with loose indices).
    pub fn walk<F: FnMut(&Term)>(&self, f: &mut F) {
        f(self);
        match self {
            Term::Abs(_, t, u) | Term::Prod(_, t, u) | Term::App(t, u) => {
                t.walk(f);
                u.walk(f);
            }
            _ => {}
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Abs(_, t, u) | Term::Prod(_, t, u) | Term::App(t, u) => 1 + t.size() + u.size(),
            _ => 1,
        }
    }

    /// Number of free occurrences of `x`.
    pub fn count_var(&self, x: &str) -> usize {
        match self {
            Term::Var(v) => usize::from(&*v.name == x),
            Term::Abs(_, t, u) | Term::Prod(_, t, u) | Term::App(t, u) => {
                t.count_var(x) + u.count_var(x)
            }
            _ => 0,
        }
    }

    pub fn child(&self, k: u32) -> Option<&Term> {
        match (self, k) {
            (Term::Abs(_, t, _), 1) | (Term::Prod(_, t, _), 1) | (Term::App(t, _), 1) => Some(t),
            (Term::Abs(_, _, u), 2) | (Term::Prod(_, _, u), 2) | (Term::App(_, u), 2) => Some(u),
            _ => None,
        }
    }

    pub fn subterm_at(&self, p: &Position) -> Option<&Term> {
        let mut t = self;
        for &k in p.path() {
            t = t.child(k)?;
        }
        Some(t)
    }

    /// Replace the subterm at `p` by `u`; `u` is given in the context of `p`.
    pub fn replace_at(&self, p: &Position, u: Term) -> Option<Term> {
        self.replace_path(p.path(), u)
    }

    fn replace_path(&self, path: &[u32], u: Term) -> Option<Term> {
        let Some((&k, rest)) = path.split_first() else {
            return Some(u);
        };
        match self {
            Term::Abs(b, t, body) => Some(match k {
                1 => Term::Abs(b.clone(), Arc::new(t.replace_path(rest, u)?), body.clone()),
                2 => Term::Abs(b.clone(), t.clone(), Arc::new(body.replace_path(rest, u)?)),
                _ => return None,
            }),
            Term::Prod(b, t, body) => Some(match k {
                1 => Term::Prod(b.clone(), Arc::new(t.replace_path(rest, u)?), body.clone()),
                2 => Term::Prod(b.clone(), t.clone(), Arc::new(body.replace_path(rest, u)?)),
                _ => return None,
            }),
            Term::App(f, a) => Some(match k {
                1 => Term::App(Arc::new(f.replace_path(rest, u)?), a.clone()),
                2 => Term::App(f.clone(), Arc::new(a.replace_path(rest, u)?)),
                _ => return None,
            }),
            _ => None,
        }
    }

    /// All valid positions, in pre-order.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        self.collect_positions(&mut cur, &mut |p, _| out.push(Position::from(p.to_vec())));
        out
    }

    fn collect_positions<F: FnMut(&[u32], &Term)>(&self, cur: &mut Vec<u32>, f: &mut F) {
        f(cur, self);
        for k in 1..=2 {
            if let Some(c) = self.child(k) {
                cur.push(k);
                c.collect_positions(cur, f);
                cur.pop();
            }
        }
    }

    /// Positions of free occurrences of the variable `x`.
    pub fn positions_of_var(&self, x: &str) -> BTreeSet<Position> {
        let mut out = BTreeSet::new();
        let mut cur = Vec::new();
        self.collect_positions(&mut cur, &mut |p, t| {
            if matches!(t, Term::Var(v) if &*v.name == x) {
                out.insert(Position::from(p.to_vec()));
            }
        });
        out
    }

    /// Positions of occurrences of the symbol `f`.
    pub fn positions_of_sym(&self, f: &str) -> BTreeSet<Position> {
        let mut out = BTreeSet::new();
        let mut cur = Vec::new();
        self.collect_positions(&mut cur, &mut |p, t| {
            if matches!(t, Term::Sym(g) if &**g == f) {
                out.insert(Position::from(p.to_vec()));
            }
        });
        out
    }

    /// An algebraic term is built from variables and symbol-headed spines only.
    pub fn is_algebraic(&self) -> bool {
        match self {
            Term::Var(_) => true,
            _ => {
                let (h, args) = self.spine();
                h.as_sym().is_some() && args.iter().all(|a| a.is_algebraic())
            }
        }
    }

    /// Syntactic class, given the sorts of symbols.
    pub fn classify(&self, sym_sort: &dyn Fn(&str) -> Option<Sort>) -> Class {
        let mut ctx = Vec::new();
        self.classify_in(&mut ctx, sym_sort)
    }

    fn classify_in(&self, ctx: &mut Vec<Sort>, sym_sort: &dyn Fn(&str) -> Option<Sort>) -> Class {
        let of_sort = |s: Sort| match s {
            Sort::Star => Class::Object,
            Sort::Box => Class::Predicate,
        };
        match self {
            Term::Sort(_) => Class::Sort,
            Term::Var(v) => of_sort(v.sort),
            Term::Bound(i) => match ctx.len().checked_sub(*i as usize + 1) {
                Some(k) => of_sort(ctx[k]),
                None => Class::IllFormed,
            },
            Term::Sym(f) => sym_sort(f).map(of_sort).unwrap_or(Class::IllFormed),
            Term::Abs(b, _, body) => {
                ctx.push(b.sort);
                let c = body.classify_in(ctx, sym_sort);
                ctx.pop();
                match c {
                    Class::Object | Class::Predicate => c,
                    _ => Class::IllFormed,
                }
            }
            Term::App(t, _) => match t.classify_in(ctx, sym_sort) {
                c @ (Class::Object | Class::Predicate) => c,
                _ => Class::IllFormed,
            },
            Term::Prod(b, _, body) => {
                ctx.push(b.sort);
                let c = body.classify_in(ctx, sym_sort);
                ctx.pop();
                match c {
                    Class::Sort if **body == Term::star() => Class::Kind,
                    Class::Kind => Class::Kind,
                    Class::Predicate => Class::Predicate,
                    _ => Class::IllFormed,
                }
            }
        }
    }

    /// Split a product telescope, opening each binder with a fresh variable
    /// drawn from `names`.
    pub fn open_telescope(&self, names: &mut NameSupply) -> (Vec<(Var, Term)>, Term) {
        self.open_telescope_n(usize::MAX, names)
    }

    /// As `open_telescope` but opens at most `n` binders.
    pub fn open_telescope_n(&self, n: usize, names: &mut NameSupply) -> (Vec<(Var, Term)>, Term) {
        let mut tel = Vec::new();
        let mut t = self.clone();
        while tel.len() < n {
            let Term::Prod(b, dom, body) = &t else { break };
            let x = names.fresh_var(&b.name, b.sort);
            let next = body.open(&x);
            tel.push((x, (**dom).clone()));
            t = next;
        }
        (tel, t)
    }

    /// Number of leading products.
    pub fn arity(&self) -> usize {
        match self {
            Term::Prod(_, _, b) => 1 + b.arity(),
            _ => 0,
        }
    }
}

/// Finite map from variable names to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Name, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }
    pub fn singleton(x: &Var, t: Term) -> Substitution {
        let mut s = Substitution::new();
        s.insert(x.name.clone(), t);
        s
    }
    /// Insert a binding; identity bindings `x ↦ x` are dropped so that
    /// the domain is exactly the set of moved variables.
    pub fn insert(&mut self, x: Name, t: Term) {
        if matches!(&t, Term::Var(v) if v.name == x) {
            self.map.remove(&x);
        } else {
            self.map.insert(x, t);
        }
    }
    pub fn get(&self, x: &str) -> Option<&Term> {
        self.map.get(x)
    }
    pub fn contains(&self, x: &str) -> bool {
        self.map.contains_key(x)
    }
    pub fn remove(&mut self, x: &str) -> Option<Term> {
        self.map.remove(x)
    }
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
    pub fn len(&self) -> usize {
        self.map.len()
    }
    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.map.keys()
    }
    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.map.iter()
    }
    /// `(self ; other)(x) = subst(self(x), other)`, plus `other` on the rest.
    pub fn then(&self, other: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (x, t) in &self.map {
            out.insert(x.clone(), t.subst(other));
        }
        for (x, t) in &other.map {
            if !self.map.contains_key(x) {
                out.insert(x.clone(), t.clone());
            }
        }
        out
    }
}

impl FromIterator<(Name, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(it: I) -> Substitution {
        let mut s = Substitution::new();
        for (x, t) in it {
            s.insert(x, t);
        }
        s
    }
}

/// Ordered typing environment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Environment {
    bindings: Vec<(Var, Term)>,
}

impl Environment {
    pub fn new() -> Environment {
        Environment::default()
    }
    pub fn from_bindings(bindings: Vec<(Var, Term)>) -> Environment {
        Environment { bindings }
    }
    pub fn push(&mut self, x: Var, ty: Term) {
        self.bindings.push((x, ty));
    }
    pub fn pop(&mut self) {
        self.bindings.pop();
    }
    pub fn lookup(&self, x: &str) -> Option<&Term> {
        self.bindings.iter().rev().find(|(v, _)| &*v.name == x).map(|(_, t)| t)
    }
    pub fn lookup_var(&self, x: &str) -> Option<&Var> {
        self.bindings.iter().rev().find(|(v, _)| &*v.name == x).map(|(v, _)| v)
    }
    pub fn contains(&self, x: &str) -> bool {
        self.lookup(x).is_some()
    }
    pub fn len(&self) -> usize {
        self.bindings.len()
    }
    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
    pub fn bindings(&self) -> &[(Var, Term)] {
        &self.bindings
    }
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.bindings.iter().map(|(v, _)| v)
    }
}

/// Source of variable names that are unused in some context.
#[derive(Clone, Debug, Default)]
pub struct NameSupply {
    used: BTreeSet<Name>,
}

impl NameSupply {
    pub fn new() -> NameSupply {
        NameSupply::default()
    }
    pub fn avoiding<'a, I: IntoIterator<Item = &'a Term>>(terms: I) -> NameSupply {
        let mut s = NameSupply::new();
        for t in terms {
            s.avoid_term(t);
        }
        s
    }
    pub fn avoid(&mut self, x: &str) {
        self.used.insert(Arc::from(x));
    }
    pub fn avoid_term(&mut self, t: &Term) {
        for v in t.free_vars() {
            self.used.insert(v.name);
        }
    }
    pub fn avoid_env(&mut self, env: &Environment) {
        for (v, t) in env.bindings() {
            self.used.insert(v.name.clone());
            self.avoid_term(t);
        }
    }
    pub fn is_used(&self, x: &str) -> bool {
        self.used.contains(x)
    }
    pub fn fresh(&mut self, hint: &str) -> Name {
        let base = if hint.is_empty() || hint == "_" { "x" } else { hint };
        let mut candidate = base.to_string();
        let mut primes = 0;
        while self.used.contains(candidate.as_str()) {
            primes += 1;
            candidate = if primes <= 3 {
                format!("{base}{}", "'".repeat(primes))
            } else {
                format!("{base}{}", primes - 3)
            };
        }
        let n: Name = Arc::from(candidate.as_str());
        self.used.insert(n.clone());
        n
    }
    pub fn fresh_var(&mut self, hint: &str, sort: Sort) -> Var {
        Var { name: self.fresh(hint), sort }
    }
}
