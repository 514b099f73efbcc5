//! CIC⁻: inductive types as term formers, ι′-reduction, typing, and the
//! translation into a CAC signature with canonical recursors.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::diagnostic::{Code, Diagnostic};
use crate::rewrite::{FuelBudget, RewriteError};
use crate::signature::RewriteRule;
use crate::syntax::{ParseError, Parser, Raw, Tok};
use crate::term::{Binder, Environment, Name, NameSupply, Sort, Substitution, Term, Var};

#[derive(Clone, Debug)]
pub enum CicTerm {
    Sort(Sort),
    Bound(u32),
    Var(Var),
    Abs(Binder, Box<CicTerm>, Box<CicTerm>),
    App(Box<CicTerm>, Box<CicTerm>),
    Prod(Binder, Box<CicTerm>, Box<CicTerm>),
    Ind(Arc<Inductive>),
    Constr(usize, Box<CicTerm>),
    Elim(Box<Elim>),
}

/// `Ind(X:A){C⃗}`; each constructor type binds `X` as index 0.
#[derive(Clone, Debug)]
pub struct Inductive {
    pub binder: Binder,
    pub arity: CicTerm,
    pub constructors: Vec<CicTerm>,
}

/// `Elim(I; Q; a⃗; c){f⃗}`.
#[derive(Clone, Debug)]
pub struct Elim {
    pub ind: CicTerm,
    pub motive: CicTerm,
    pub indices: Vec<CicTerm>,
    pub scrutinee: CicTerm,
    pub branches: Vec<CicTerm>,
}

impl PartialEq for CicTerm {
    fn eq(&self, other: &CicTerm) -> bool {
        use CicTerm::*;
        match (self, other) {
            (Sort(a), Sort(b)) => a == b,
            (Bound(i), Bound(j)) => i == j,
            (Var(x), Var(y)) => x == y,
            (Abs(_, a, b), Abs(_, c, d)) | (Prod(_, a, b), Prod(_, c, d)) => a == c && b == d,
            (App(a, b), App(c, d)) => a == c && b == d,
            (Ind(i), Ind(j)) => Arc::ptr_eq(i, j) || (i.arity == j.arity && i.constructors == j.constructors),
            (Constr(i, a), Constr(j, b)) => i == j && a == b,
            (Elim(e), Elim(f)) => {
                e.ind == f.ind
                    && e.motive == f.motive
                    && e.indices == f.indices
                    && e.scrutinee == f.scrutinee
                    && e.branches == f.branches
            }
            _ => false,
        }
    }
}

impl Eq for CicTerm {}

/// Sort of a variable bound with annotation `ty`: kinds end in `⋆`.
pub fn sort_of_annotation(ty: &CicTerm) -> Sort {
    let mut t = ty;
    while let CicTerm::Prod(_, _, b) = t {
        t = b;
    }
    if matches!(t, CicTerm::Sort(Sort::Star)) {
        Sort::Box
    } else {
        Sort::Star
    }
}

fn is_kind(ty: &CicTerm) -> bool {
    sort_of_annotation(ty) == Sort::Box
}

impl CicTerm {
    pub fn star() -> CicTerm {
        CicTerm::Sort(Sort::Star)
    }

    pub fn var(x: &Var) -> CicTerm {
        CicTerm::Var(x.clone())
    }

    pub fn app(f: CicTerm, a: CicTerm) -> CicTerm {
        CicTerm::App(Box::new(f), Box::new(a))
    }

    pub fn apps<I: IntoIterator<Item = CicTerm>>(f: CicTerm, args: I) -> CicTerm {
        args.into_iter().fold(f, CicTerm::app)
    }

    pub fn abs(x: &Var, ty: CicTerm, body: &CicTerm) -> CicTerm {
        CicTerm::Abs(Binder { name: x.name.clone(), sort: x.sort }, Box::new(ty), Box::new(body.close(&x.name)))
    }

    pub fn prod(x: &Var, ty: CicTerm, body: &CicTerm) -> CicTerm {
        CicTerm::Prod(Binder { name: x.name.clone(), sort: x.sort }, Box::new(ty), Box::new(body.close(&x.name)))
    }

    pub fn arrow(a: CicTerm, b: CicTerm) -> CicTerm {
        CicTerm::Prod(Binder::new("_", sort_of_annotation(&a)), Box::new(a), Box::new(b.shift(1, 0)))
    }

    pub fn spine(&self) -> (&CicTerm, Vec<&CicTerm>) {
        let mut args = Vec::new();
        let mut t = self;
        while let CicTerm::App(f, a) = t {
            args.push(&**a);
            t = f;
        }
        args.reverse();
        (t, args)
    }

    pub fn as_ind(&self) -> Option<&Arc<Inductive>> {
        match self {
            CicTerm::Ind(i) => Some(i),
            _ => None,
        }
    }

    /// Rebuild with every variable leaf passed to `f` along with the
    /// number of enclosing binders.
    fn map_leaves(&self, depth: u32, f: &mut dyn FnMut(u32, &CicTerm) -> Option<CicTerm>) -> CicTerm {
        use CicTerm::*;
        match self {
            Bound(_) | Var(_) => f(depth, self).unwrap_or_else(|| self.clone()),
            Sort(_) => self.clone(),
            Abs(b, a, body) => Abs(b.clone(), Box::new(a.map_leaves(depth, f)), Box::new(body.map_leaves(depth + 1, f))),
            Prod(b, a, body) => Prod(b.clone(), Box::new(a.map_leaves(depth, f)), Box::new(body.map_leaves(depth + 1, f))),
            App(a, b) => App(Box::new(a.map_leaves(depth, f)), Box::new(b.map_leaves(depth, f))),
            Ind(i) => Ind(Arc::new(Inductive {
                binder: i.binder.clone(),
                arity: i.arity.map_leaves(depth, f),
                constructors: i.constructors.iter().map(|c| c.map_leaves(depth + 1, f)).collect(),
            })),
            Constr(k, i) => Constr(*k, Box::new(i.map_leaves(depth, f))),
            Elim(e) => Elim(Box::new(self::Elim {
                ind: e.ind.map_leaves(depth, f),
                motive: e.motive.map_leaves(depth, f),
                indices: e.indices.iter().map(|t| t.map_leaves(depth, f)).collect(),
                scrutinee: e.scrutinee.map_leaves(depth, f),
                branches: e.branches.iter().map(|t| t.map_leaves(depth, f)).collect(),
            })),
        }
    }

    fn walk_leaves(&self, depth: u32, f: &mut dyn FnMut(u32, &CicTerm)) {
        use CicTerm::*;
        match self {
            Bound(_) | Var(_) => f(depth, self),
            Sort(_) => {}
            Abs(_, a, b) | Prod(_, a, b) => {
                a.walk_leaves(depth, f);
                b.walk_leaves(depth + 1, f);
            }
            App(a, b) => {
                a.walk_leaves(depth, f);
                b.walk_leaves(depth, f);
            }
            Ind(i) => {
                i.arity.walk_leaves(depth, f);
                for c in &i.constructors {
                    c.walk_leaves(depth + 1, f);
                }
            }
            Constr(_, i) => i.walk_leaves(depth, f),
            Elim(e) => {
                for t in [&e.ind, &e.motive, &e.scrutinee].into_iter().chain(&e.indices).chain(&e.branches) {
                    t.walk_leaves(depth, f);
                }
            }
        }
    }

    pub fn shift(&self, d: u32, cutoff: u32) -> CicTerm {
        if d == 0 {
            return self.clone();
        }
        self.map_leaves(cutoff, &mut |depth, t| match t {
            CicTerm::Bound(k) if *k >= depth => Some(CicTerm::Bound(k + d)),
            _ => None,
        })
    }

    /// Replace the loose index 0 by `u`.
    pub fn instantiate(&self, u: &CicTerm) -> CicTerm {
        self.map_leaves(0, &mut |depth, t| match t {
            CicTerm::Bound(k) if *k == depth => Some(u.shift(depth, 0)),
            CicTerm::Bound(k) if *k > depth => Some(CicTerm::Bound(k - 1)),
            _ => None,
        })
    }

    pub fn open(&self, x: &Var) -> CicTerm {
        self.instantiate(&CicTerm::Var(x.clone()))
    }

    /// Abstract the free variable `x` as the new index 0.
    pub fn close(&self, x: &Name) -> CicTerm {
        self.map_leaves(0, &mut |depth, t| match t {
            CicTerm::Var(v) if v.name == *x => Some(CicTerm::Bound(depth)),
            CicTerm::Bound(k) if *k >= depth => Some(CicTerm::Bound(k + 1)),
            _ => None,
        })
    }

    pub fn subst(&self, theta: &HashMap<Name, CicTerm>) -> CicTerm {
        if theta.is_empty() {
            return self.clone();
        }
        self.map_leaves(0, &mut |depth, t| match t {
            CicTerm::Var(v) => theta.get(&v.name).map(|u| u.shift(depth, 0)),
            _ => None,
        })
    }

    pub fn subst1(&self, x: &Name, u: &CicTerm) -> CicTerm {
        self.subst(&HashMap::from([(x.clone(), u.clone())]))
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        self.walk_leaves(0, &mut |_, t| {
            if let CicTerm::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    pub fn occurs(&self, x: &str) -> bool {
        let mut found = false;
        self.walk_leaves(0, &mut |_, t| {
            if matches!(t, CicTerm::Var(v) if &*v.name == x) {
                found = true;
            }
        });
        found
    }

    pub fn is_closed(&self) -> bool {
        let mut closed = true;
        self.walk_leaves(0, &mut |depth, t| match t {
            CicTerm::Var(_) => closed = false,
            CicTerm::Bound(k) if *k >= depth => closed = false,
            _ => {}
        });
        closed
    }

    fn avoid_in(&self, names: &mut NameSupply) {
        for v in self.free_vars() {
            names.avoid(&v.name);
        }
    }

    pub fn size(&self) -> usize {
        use CicTerm::*;
        match self {
            Sort(_) | Bound(_) | Var(_) => 1,
            Abs(_, a, b) | Prod(_, a, b) | App(a, b) => 1 + a.size() + b.size(),
            Ind(i) => 1 + i.arity.size() + i.constructors.iter().map(|c| c.size()).sum::<usize>(),
            Constr(_, i) => 1 + i.size(),
            Elim(e) => {
                1 + [&e.ind, &e.motive, &e.scrutinee]
                    .into_iter()
                    .chain(&e.indices)
                    .chain(&e.branches)
                    .map(|t| t.size())
                    .sum::<usize>()
            }
        }
    }
}

/// Peel products, opening each binder with a fresh variable.
pub fn open_telescope(t: &CicTerm, names: &mut NameSupply) -> (Vec<(Var, CicTerm)>, CicTerm) {
    let mut tel = Vec::new();
    let mut t = t.clone();
    while let CicTerm::Prod(b, dom, body) = &t {
        let x = names.fresh_var(&b.name, sort_of_annotation(dom));
        tel.push((x.clone(), (**dom).clone()));
        t = body.open(&x);
    }
    (tel, t)
}

fn prods(tel: &[(Var, CicTerm)], body: CicTerm) -> CicTerm {
    tel.iter().rev().fold(body, |acc, (x, t)| CicTerm::prod(x, t.clone(), &acc))
}

fn abss(tel: &[(Var, CicTerm)], body: CicTerm) -> CicTerm {
    tel.iter().rev().fold(body, |acc, (x, t)| CicTerm::abs(x, t.clone(), &acc))
}

fn var_terms(tel: &[(Var, CicTerm)]) -> Vec<CicTerm> {
    tel.iter().map(|(x, _)| CicTerm::var(x)).collect()
}

// ---------------------------------------------------------------------
// Printing

impl fmt::Display for CicTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        print_cic(self, 0, &mut Vec::new(), &mut out);
        f.write_str(&out.replace("(*", "( *"))
    }
}

fn pick(hint: &str, body: &CicTerm, stack: &[String]) -> String {
    let base = if hint.is_empty() || hint == "_" { "x" } else { hint };
    let used: BTreeSet<String> = body.free_vars().into_iter().map(|v| v.name.to_string()).collect();
    let mut c = base.to_string();
    let mut k = 0;
    while used.contains(&c) || stack.contains(&c) {
        k += 1;
        c = format!("{base}{k}");
    }
    c
}

fn print_cic(t: &CicTerm, level: u8, stack: &mut Vec<String>, out: &mut String) {
    let paren = |out: &mut String, open: bool, on: bool| {
        if on {
            out.push(if open { '(' } else { ')' });
        }
    };
    match t {
        CicTerm::Sort(s) => out.push_str(&s.to_string()),
        CicTerm::Var(v) => out.push_str(&v.name),
        CicTerm::Bound(i) => match stack.len().checked_sub(*i as usize + 1) {
            Some(k) => out.push_str(&stack[k]),
            None => out.push_str(&format!("#{i}")),
        },
        CicTerm::App(a, b) => {
            paren(out, true, level >= 2);
            print_cic(a, 1, stack, out);
            out.push(' ');
            print_cic(b, 2, stack, out);
            paren(out, false, level >= 2);
        }
        CicTerm::Prod(b, dom, cod) | CicTerm::Abs(b, dom, cod) => {
            let is_prod = matches!(t, CicTerm::Prod(..));
            let dependent = {
                let mut d = false;
                cod.walk_leaves(0, &mut |depth, l| {
                    if matches!(l, CicTerm::Bound(k) if *k == depth) {
                        d = true;
                    }
                });
                d
            };
            paren(out, true, level >= 1);
            if is_prod && !dependent {
                print_cic(dom, 1, stack, out);
                out.push_str(" -> ");
                stack.push("_".to_string());
                print_cic(cod, 0, stack, out);
                stack.pop();
            } else {
                let name = pick(&b.name, cod, stack);
                out.push(if is_prod { '(' } else { '[' });
                out.push_str(&name);
                out.push(':');
                print_cic(dom, 0, stack, out);
                out.push(if is_prod { ')' } else { ']' });
                stack.push(name);
                print_cic(cod, 0, stack, out);
                stack.pop();
            }
            paren(out, false, level >= 1);
        }
        CicTerm::Ind(i) => {
            let name = pick(&i.binder.name, &CicTerm::Sort(Sort::Star), stack);
            out.push_str("Ind(");
            out.push_str(&name);
            out.push(':');
            print_cic(&i.arity, 0, stack, out);
            out.push_str("){");
            stack.push(name);
            for (k, c) in i.constructors.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                print_cic(c, 0, stack, out);
            }
            stack.pop();
            out.push('}');
        }
        CicTerm::Constr(k, i) => {
            out.push_str(&format!("Constr({k}, "));
            print_cic(i, 0, stack, out);
            out.push(')');
        }
        CicTerm::Elim(e) => {
            out.push_str("Elim(");
            print_cic(&e.ind, 0, stack, out);
            out.push_str("; ");
            print_cic(&e.motive, 0, stack, out);
            out.push_str("; ");
            for (k, a) in e.indices.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                print_cic(a, 2, stack, out);
            }
            out.push_str("; ");
            print_cic(&e.scrutinee, 0, stack, out);
            out.push_str("){");
            for (k, f) in e.branches.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                print_cic(f, 0, stack, out);
            }
            out.push('}');
        }
    }
}

// ---------------------------------------------------------------------
// Constructor shapes

/// A recursive argument type `(y⃗:D⃗)X q⃗`.
#[derive(Clone, Debug)]
pub struct RecBinder {
    pub tel: Vec<(Var, CicTerm)>,
    pub args: Vec<CicTerm>,
}

/// A constructor type `(z⃗:B⃗)X m⃗` opened with `X` as a variable.
#[derive(Clone, Debug)]
pub struct CtorView {
    pub binders: Vec<(Var, CicTerm, Option<RecBinder>)>,
    pub outputs: Vec<CicTerm>,
}

fn head_is(t: &CicTerm, x: &Var) -> Option<Vec<CicTerm>> {
    let (h, args) = t.spine();
    match h {
        CicTerm::Var(v) if v == x => Some(args.into_iter().cloned().collect()),
        _ => None,
    }
}

/// Decompose an opened constructor type, checking the shape and strict
/// positivity of `x`.
pub fn view_constructor(c: &CicTerm, x: &Var, names: &mut NameSupply) -> Result<CtorView, String> {
    let (tel, out) = open_telescope(c, names);
    let Some(outputs) = head_is(&out, x) else {
        return Err(format!("its conclusion {out} is not an application of {}", x.name));
    };
    if outputs.iter().any(|m| m.occurs(&x.name)) {
        return Err(format!("{} occurs in the arguments of its conclusion", x.name));
    }
    let mut binders = Vec::new();
    for (z, b) in tel {
        if !b.occurs(&x.name) {
            binders.push((z, b, None));
            continue;
        }
        let (ytel, bout) = open_telescope(&b, names);
        let Some(args) = head_is(&bout, x) else {
            return Err(format!("{} occurs in the type {b} of {} other than as its conclusion", x.name, z.name));
        };
        if ytel.iter().any(|(_, d)| d.occurs(&x.name)) || args.iter().any(|a| a.occurs(&x.name)) {
            return Err(format!("{} occurs non-strictly-positively in the type {b} of {}", x.name, z.name));
        }
        binders.push((z, b, Some(RecBinder { tel: ytel, args })));
    }
    Ok(CtorView { binders, outputs })
}

impl Inductive {
    /// The arity telescope `x⃗:A⃗` of `A = (x⃗:A⃗)⋆`.
    pub fn arity_telescope(&self, names: &mut NameSupply) -> Option<Vec<(Var, CicTerm)>> {
        let (tel, out) = open_telescope(&self.arity, names);
        (out == CicTerm::star()).then_some(tel)
    }

    /// Constructor `i` (0-based) opened with `X` as the variable `x`.
    pub fn constructor_open(&self, i: usize, x: &Var) -> CicTerm {
        self.constructors[i].open(x)
    }

    fn x_var(&self, names: &mut NameSupply) -> Var {
        names.fresh_var(&self.binder.name, Sort::Box)
    }
}

fn supply_for(terms: &[&CicTerm]) -> NameSupply {
    let mut names = NameSupply::new();
    for t in terms {
        t.avoid_in(&mut names);
    }
    names
}

/// Branch type of the object-level eliminator: `Δ{I,X,C,Q,c}`.
pub fn delta_type(ind: &CicTerm, i: usize, q: &CicTerm, c: &CicTerm) -> Result<CicTerm, String> {
    let def = ind.as_ind().ok_or("not an inductive type")?;
    let mut names = supply_for(&[ind, q, c]);
    let x = def.x_var(&mut names);
    let view = view_constructor(&def.constructor_open(i, &x), &x, &mut names)?;
    let sub = |t: &CicTerm| t.subst1(&x.name, ind);
    let mut body = CicTerm::apps(q.clone(), view.outputs.iter().map(sub));
    let mut head = c.clone();
    let mut parts: Vec<(Var, CicTerm, Option<CicTerm>)> = Vec::new();
    for (z, b, rec) in &view.binders {
        let ih = rec.as_ref().map(|r| {
            let zy = CicTerm::apps(CicTerm::var(z), var_terms(&r.tel));
            let tel: Vec<(Var, CicTerm)> = r.tel.iter().map(|(y, d)| (y.clone(), sub(d))).collect();
            prods(&tel, CicTerm::apps(q.clone(), r.args.iter().map(sub).chain([zy])))
        });
        parts.push((z.clone(), sub(b), ih));
        head = CicTerm::app(head, CicTerm::var(z));
    }
    body = CicTerm::app(body, head);
    for (z, b, ih) in parts.into_iter().rev() {
        if let Some(ih) = ih {
            body = CicTerm::arrow(ih, body);
        }
        body = CicTerm::prod(&z, b, &body);
    }
    Ok(body)
}

/// Branch type of the kind-level eliminator: `Δ′{I,X,C,x⃗ y,K,c}`.
pub fn delta_prime_type(ind: &CicTerm, i: usize, xs: &[Var], y: &Var, k: &CicTerm, c: &CicTerm) -> Result<CicTerm, String> {
    let def = ind.as_ind().ok_or("not an inductive type")?;
    let mut names = supply_for(&[ind, k, c]);
    for v in xs.iter().chain([y]) {
        names.avoid(&v.name);
    }
    let x = def.x_var(&mut names);
    let view = view_constructor(&def.constructor_open(i, &x), &x, &mut names)?;
    let sub = |t: &CicTerm| t.subst1(&x.name, ind);
    let motive_at = |ms: &[CicTerm], scrut: CicTerm| {
        let mut theta: HashMap<Name, CicTerm> = xs.iter().zip(ms).map(|(v, m)| (v.name.clone(), m.clone())).collect();
        theta.insert(y.name.clone(), scrut);
        k.subst(&theta)
    };
    let mut head = c.clone();
    let mut parts: Vec<(Var, CicTerm, Option<CicTerm>)> = Vec::new();
    for (z, b, rec) in &view.binders {
        let ih = rec.as_ref().map(|r| {
            let zy = CicTerm::apps(CicTerm::var(z), var_terms(&r.tel));
            let tel: Vec<(Var, CicTerm)> = r.tel.iter().map(|(y, d)| (y.clone(), sub(d))).collect();
            let args: Vec<CicTerm> = r.args.iter().map(sub).collect();
            prods(&tel, motive_at(&args, zy))
        });
        parts.push((z.clone(), sub(b), ih));
        head = CicTerm::app(head, CicTerm::var(z));
    }
    let outs: Vec<CicTerm> = view.outputs.iter().map(sub).collect();
    let mut body = motive_at(&outs, head);
    for (z, b, ih) in parts.into_iter().rev() {
        if let Some(ih) = ih {
            body = CicTerm::arrow(ih, body);
        }
        body = CicTerm::prod(&z, b, &body);
    }
    Ok(body)
}

// ---------------------------------------------------------------------
// Reduction

/// One ι′ contraction at the root, if the root is an `Elim` redex.
pub fn iota_prime_step(t: &CicTerm) -> Option<CicTerm> {
    let CicTerm::Elim(e) = t else { return None };
    let def = e.ind.as_ind()?;
    let (h, zs) = e.scrutinee.spine();
    let CicTerm::Constr(i, _) = h else { return None };
    let i = i.checked_sub(1)?;
    if i >= def.constructors.len() || i >= e.branches.len() {
        return None;
    }
    let mut names = supply_for(&[t]);
    let x = def.x_var(&mut names);
    let mut c = def.constructor_open(i, &x);
    let mut f = e.branches[i].clone();
    for z in &zs {
        let CicTerm::Prod(_, b, d) = &c else { return None };
        if b.occurs(&x.name) {
            let (ytel, bout) = open_telescope(b, &mut names);
            let q = head_is(&bout, &x)?;
            let ind = |t: &CicTerm| t.subst1(&x.name, &e.ind);
            let call = CicTerm::Elim(Box::new(Elim {
                ind: e.ind.clone(),
                motive: e.motive.clone(),
                indices: q.iter().map(ind).collect(),
                scrutinee: CicTerm::apps((*z).clone(), var_terms(&ytel)),
                branches: e.branches.clone(),
            }));
            let tel: Vec<(Var, CicTerm)> = ytel.iter().map(|(y, d)| (y.clone(), ind(d))).collect();
            f = CicTerm::apps(f, [(*z).clone(), abss(&tel, call)]);
        } else {
            f = CicTerm::app(f, (*z).clone());
        }
        c = d.instantiate(z);
    }
    if matches!(c, CicTerm::Prod(..)) {
        return None;
    }
    Some(f)
}

/// What fired at a CIC⁻ reduction step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CicRedex {
    Beta,
    Iota,
}

/// Leftmost-outermost βι′ step.
pub fn step(t: &CicTerm) -> Option<(CicTerm, CicRedex)> {
    use CicTerm::*;
    if let App(f, a) = t {
        if let Abs(_, _, body) = &**f {
            return Some((body.instantiate(a), CicRedex::Beta));
        }
    }
    if let Some(u) = iota_prime_step(t) {
        return Some((u, CicRedex::Iota));
    }
    match t {
        Sort(_) | Bound(_) | Var(_) => None,
        App(f, a) => step(f)
            .map(|(f2, r)| (App(Box::new(f2), a.clone()), r))
            .or_else(|| step(a).map(|(a2, r)| (App(f.clone(), Box::new(a2)), r))),
        Abs(b, a, body) | Prod(b, a, body) => {
            let rebuild = |a: Box<CicTerm>, body: Box<CicTerm>| match t {
                Abs(..) => Abs(b.clone(), a, body),
                _ => Prod(b.clone(), a, body),
            };
            step(a)
                .map(|(a2, r)| (rebuild(Box::new(a2), body.clone()), r))
                .or_else(|| step(body).map(|(b2, r)| (rebuild(a.clone(), Box::new(b2)), r)))
        }
        Ind(i) => {
            if let Some((a2, r)) = step(&i.arity) {
                return Some((Ind(Arc::new(Inductive { arity: a2, ..(**i).clone() })), r));
            }
            for (k, c) in i.constructors.iter().enumerate() {
                if let Some((c2, r)) = step(c) {
                    let mut j = (**i).clone();
                    j.constructors[k] = c2;
                    return Some((Ind(Arc::new(j)), r));
                }
            }
            None
        }
        Constr(k, i) => step(i).map(|(i2, r)| (Constr(*k, Box::new(i2)), r)),
        Elim(e) => {
            let mut parts: Vec<CicTerm> = vec![e.ind.clone(), e.motive.clone()];
            parts.extend(e.indices.iter().cloned());
            parts.push(e.scrutinee.clone());
            parts.extend(e.branches.iter().cloned());
            for k in 0..parts.len() {
                if let Some((p2, r)) = step(&parts[k]) {
                    parts[k] = p2;
                    let n = e.indices.len();
                    let mut it = parts.into_iter();
                    let ind = it.next().unwrap();
                    let motive = it.next().unwrap();
                    let indices: Vec<CicTerm> = it.by_ref().take(n).collect();
                    let scrutinee = it.next().unwrap();
                    let branches: Vec<CicTerm> = it.collect();
                    return Some((Elim(Box::new(self::Elim { ind, motive, indices, scrutinee, branches })), r));
                }
            }
            None
        }
    }
}

pub fn normalize(t: &CicTerm, fuel: FuelBudget) -> Result<CicTerm, RewriteError> {
    let mut t = t.clone();
    let mut steps = 0u64;
    while let Some((u, _)) = step(&t) {
        steps += 1;
        if steps > fuel.max_steps {
            return Err(RewriteError::FuelExhausted { steps, partial: Term::star() });
        }
        t = u;
    }
    Ok(t)
}

pub fn is_normal(t: &CicTerm) -> bool {
    step(t).is_none()
}

// ---------------------------------------------------------------------
// Typing

pub type CicEnv = Vec<(Var, CicTerm)>;

#[derive(Clone, Copy, Debug, Default)]
pub struct CicChecker {
    pub fuel: FuelBudget,
}

fn err(code: Code, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(code, msg)
}

fn lookup<'e>(env: &'e CicEnv, x: &Var) -> Option<&'e CicTerm> {
    env.iter().rev().find(|(v, _)| v == x).map(|(_, t)| t)
}

fn fresh_for(env: &CicEnv, terms: &[&CicTerm], hint: &str, sort: Sort) -> Var {
    let mut names = supply_for(terms);
    for (v, t) in env {
        names.avoid(&v.name);
        t.avoid_in(&mut names);
    }
    names.fresh_var(hint, sort)
}

/// Does the motive have the shape `[x⃗:A⃗][y:I x⃗]K` with `K` a kind?
pub fn is_kind_motive(n_indices: usize, q: &CicTerm) -> bool {
    let mut t = q;
    for _ in 0..=n_indices {
        match t {
            CicTerm::Abs(_, _, b) => t = b,
            _ => return false,
        }
    }
    is_kind(t)
}

impl CicChecker {
    pub fn new(fuel: FuelBudget) -> CicChecker {
        CicChecker { fuel }
    }

    fn nf(&self, t: &CicTerm) -> Result<CicTerm, Diagnostic> {
        normalize(t, self.fuel).map_err(|e| err(Code::FuelExhausted, format!("normalizing {t}: {e}")))
    }

    pub fn convertible(&self, a: &CicTerm, b: &CicTerm) -> Result<bool, Diagnostic> {
        Ok(a == b || self.nf(a)? == self.nf(b)?)
    }

    pub fn check(&self, env: &CicEnv, t: &CicTerm, ty: &CicTerm) -> Result<(), Diagnostic> {
        let found = self.infer(env, t)?;
        if self.convertible(&found, ty)? {
            Ok(())
        } else {
            Err(err(Code::CicType, format!("{t} has type {found} but {ty} was expected")))
        }
    }

    pub fn infer_sort(&self, env: &CicEnv, t: &CicTerm) -> Result<Sort, Diagnostic> {
        let k = self.infer(env, t)?;
        match self.nf(&k)? {
            CicTerm::Sort(s) => Ok(s),
            other => Err(err(Code::CicType, format!("{t} has type {other}, which is not a sort"))),
        }
    }

    pub fn infer(&self, env: &CicEnv, t: &CicTerm) -> Result<CicTerm, Diagnostic> {
        match t {
            CicTerm::Sort(Sort::Star) => Ok(CicTerm::Sort(Sort::Box)),
            CicTerm::Sort(Sort::Box) => Err(err(Code::CicType, "the sort [] has no type")),
            CicTerm::Bound(_) => Err(err(Code::CicType, "ill-scoped bound variable")),
            CicTerm::Var(x) => lookup(env, x).cloned().ok_or_else(|| err(Code::CicType, format!("unbound variable {}", x.name))),
            CicTerm::Prod(b, dom, cod) => {
                self.infer_sort(env, dom)?;
                let x = fresh_for(env, &[cod], &b.name, sort_of_annotation(dom));
                let mut env2 = env.clone();
                env2.push((x.clone(), (**dom).clone()));
                Ok(CicTerm::Sort(self.infer_sort(&env2, &cod.open(&x))?))
            }
            CicTerm::Abs(b, dom, body) => {
                self.infer_sort(env, dom)?;
                let x = fresh_for(env, &[body], &b.name, sort_of_annotation(dom));
                let mut env2 = env.clone();
                env2.push((x.clone(), (**dom).clone()));
                let ty = self.infer(&env2, &body.open(&x))?;
                if ty == CicTerm::Sort(Sort::Box) {
                    return Err(err(Code::CicType, format!("the body of {t} is a kind and cannot be abstracted")));
                }
                self.infer_sort(&env2, &ty)?;
                Ok(CicTerm::prod(&x, (**dom).clone(), &ty))
            }
            CicTerm::App(f, a) => {
                let fty = self.infer(env, f)?;
                let prod = match fty {
                    CicTerm::Prod(..) => fty,
                    other => self.nf(&other)?,
                };
                let CicTerm::Prod(_, dom, cod) = &prod else {
                    return Err(err(Code::CicType, format!("{f} has type {prod}, which is not a product")));
                };
                self.check(env, a, dom)?;
                Ok(cod.instantiate(a))
            }
            CicTerm::Ind(def) => {
                self.check_inductive(def)?;
                Ok(def.arity.clone())
            }
            CicTerm::Constr(i, ind) => {
                let Some(def) = ind.as_ind() else {
                    return Err(err(Code::CicType, format!("Constr({i}, {ind}): {ind} is not an inductive type")));
                };
                self.check_inductive(def)?;
                let Some(c) = def.constructors.get(i.wrapping_sub(1)) else {
                    return Err(err(Code::CicType, format!("{ind} has {} constructors, not {i}", def.constructors.len())));
                };
                Ok(c.instantiate(ind))
            }
            CicTerm::Elim(e) => self.check_elim(env, e),
        }
    }

    /// The (Ind) premises.
    pub fn check_inductive(&self, def: &Inductive) -> Result<(), Diagnostic> {
        let ind = CicTerm::Ind(Arc::new(def.clone()));
        if !ind.is_closed() {
            return Err(err(Code::CicInductive, format!("{ind} is not closed")));
        }
        let mut names = supply_for(&[&ind]);
        if def.arity_telescope(&mut names).is_none() {
            return Err(err(Code::CicInductive, format!("the arity {} is not of the form (x⃗:A⃗)*", def.arity)));
        }
        if self.infer_sort(&Vec::new(), &def.arity)? != Sort::Box {
            return Err(err(Code::CicInductive, format!("the arity {} is not a kind", def.arity)));
        }
        let x = def.x_var(&mut names);
        let env = vec![(x.clone(), def.arity.clone())];
        for i in 0..def.constructors.len() {
            let c = def.constructor_open(i, &x);
            match self.infer_sort(&env, &c) {
                Ok(Sort::Star) => {}
                Ok(Sort::Box) => return Err(err(Code::CicInductive, format!("constructor type {} is a kind", i + 1))),
                Err(d) => return Err(err(d.code, format!("in constructor type {}: {}", i + 1, d.message))),
            }
            view_constructor(&c, &x, &mut names)
                .map_err(|m| err(Code::NotStrictlyPositive, format!("constructor type {} of {ind}: {m}", i + 1)))?;
        }
        if !is_normal(&ind) {
            return Err(err(Code::CicInductive, format!("{ind} is not in βι′-normal form")));
        }
        Ok(())
    }

    fn check_elim(&self, env: &CicEnv, e: &Elim) -> Result<CicTerm, Diagnostic> {
        let Some(def) = e.ind.as_ind() else {
            return Err(err(Code::CicElim, format!("the eliminated type {} is not of the form Ind(…){{…}}", e.ind)));
        };
        self.check_inductive(def)?;
        let mut names = supply_for(&[&e.ind, &e.motive]);
        let tel = def.arity_telescope(&mut names).expect("checked arity");
        if e.indices.len() != tel.len() {
            return Err(err(Code::CicElim, format!("{} takes {} indices, {} given", e.ind, tel.len(), e.indices.len())));
        }
        if e.branches.len() != def.constructors.len() {
            return Err(err(Code::CicElim, format!("{} has {} constructors, {} branches given", e.ind, def.constructors.len(), e.branches.len())));
        }
        let strong = is_kind_motive(tel.len(), &e.motive);
        let empty = Vec::new();
        let mut branch_types = Vec::new();
        let result;
        if !strong {
            let y = names.fresh_var("y", Sort::Star);
            let i_x = CicTerm::apps(e.ind.clone(), var_terms(&tel));
            let qty = prods(&tel, CicTerm::prod(&y, i_x, &CicTerm::star()));
            if !e.motive.is_closed() {
                return Err(err(Code::CicElim, format!("the motive {} is not closed", e.motive)));
            }
            self.check(&empty, &e.motive, &qty).map_err(|d| err(d.code, format!("motive: {}", d.message)))?;
            for i in 0..def.constructors.len() {
                let t = delta_type(&e.ind, i, &e.motive, &CicTerm::Constr(i + 1, Box::new(e.ind.clone())))
                    .map_err(|m| err(Code::CicElim, m))?;
                if self.infer_sort(&empty, &t)? != Sort::Star {
                    return Err(err(Code::CicElim, format!("branch type {t} is not a type")));
                }
                branch_types.push(t);
            }
            result = CicTerm::apps(e.motive.clone(), e.indices.iter().cloned().chain([e.scrutinee.clone()]));
        } else {
            if let Err(m) = is_small(def) {
                return Err(err(Code::NotSmall, format!("strong elimination of {}: {m}", e.ind)));
            }
            if let Err(m) = is_safe(def) {
                return Err(err(Code::Unsafe, format!("strong elimination of {}: {m}", e.ind)));
            }
            if !is_normal(&e.motive) {
                return Err(err(Code::CicElim, format!("the motive {} is not in normal form", e.motive)));
            }
            if !e.motive.is_closed() {
                return Err(err(Code::CicElim, format!("the motive {} is not closed", e.motive)));
            }
            // Q = [x⃗:A⃗][y:I x⃗]K
            let mut q = e.motive.clone();
            let mut xs = Vec::new();
            let mut qenv: CicEnv = Vec::new();
            for (k, (_, a)) in tel.iter().enumerate() {
                let CicTerm::Abs(b, dom, body) = &q else { unreachable!() };
                let ak = a.subst(&tel.iter().zip(&xs).map(|((t, _), v): (&(Var, CicTerm), &Var)| (t.name.clone(), CicTerm::var(v))).collect());
                if !self.convertible(dom, &ak)? {
                    return Err(err(Code::CicElim, format!("the motive abstraction {} has type {dom}, expected {ak}", k + 1)));
                }
                let v = names.fresh_var(&b.name, sort_of_annotation(dom));
                qenv.push((v.clone(), (**dom).clone()));
                q = body.open(&v);
                xs.push(v);
            }
            let CicTerm::Abs(b, dom, body) = &q else { unreachable!() };
            let i_x = CicTerm::apps(e.ind.clone(), xs.iter().map(CicTerm::var));
            if !self.convertible(dom, &i_x)? {
                return Err(err(Code::CicElim, format!("the motive's scrutinee abstraction has type {dom}, expected {i_x}")));
            }
            let y = names.fresh_var(&b.name, Sort::Star);
            qenv.push((y.clone(), (**dom).clone()));
            let k = body.open(&y);
            if self.infer(&qenv, &k)? != CicTerm::Sort(Sort::Box) {
                return Err(err(Code::CicElim, format!("the motive body {k} is not a kind")));
            }
            for i in 0..def.constructors.len() {
                let t = delta_prime_type(&e.ind, i, &xs, &y, &k, &CicTerm::Constr(i + 1, Box::new(e.ind.clone())))
                    .map_err(|m| err(Code::CicElim, m))?;
                if self.infer(&empty, &t)? != CicTerm::Sort(Sort::Box) {
                    return Err(err(Code::CicElim, format!("branch type {t} is not a kind")));
                }
                branch_types.push(t);
            }
            let mut theta: HashMap<Name, CicTerm> =
                xs.iter().zip(&e.indices).map(|(v, a)| (v.name.clone(), a.clone())).collect();
            theta.insert(y.name.clone(), e.scrutinee.clone());
            result = k.subst(&theta);
        }
        // Indices, scrutinee and branches in the ambient environment.
        let mut theta: HashMap<Name, CicTerm> = HashMap::new();
        for ((x, a), arg) in tel.iter().zip(&e.indices) {
            self.check(env, arg, &a.subst(&theta)).map_err(|d| err(d.code, format!("index: {}", d.message)))?;
            theta.insert(x.name.clone(), arg.clone());
        }
        self.check(env, &e.scrutinee, &CicTerm::apps(e.ind.clone(), e.indices.iter().cloned()))
            .map_err(|d| err(d.code, format!("scrutinee: {}", d.message)))?;
        for (k, (f, t)) in e.branches.iter().zip(&branch_types).enumerate() {
            self.check(env, f, t).map_err(|d| err(d.code, format!("branch {}: {}", k + 1, d.message)))?;
        }
        Ok(result)
    }
}

/// Leading constructor binders that are passed unchanged to the same
/// arity position of the conclusion count as parameters.
fn parameter_prefix(view: &CtorView, n_arity: usize) -> usize {
    let mut k = 0;
    while k < view.binders.len() && k < n_arity {
        let z = &view.binders[k].0;
        if view.outputs.get(k) != Some(&CicTerm::var(z)) || view.binders[k].2.is_some() {
            break;
        }
        k += 1;
    }
    k
}

/// Constructor binders beyond the parameters bind no predicate variable.
pub fn is_small(def: &Inductive) -> Result<(), String> {
    let mut names = NameSupply::new();
    let n = def.arity_telescope(&mut names).map(|t| t.len()).unwrap_or(0);
    let x = def.x_var(&mut names);
    for i in 0..def.constructors.len() {
        let view = view_constructor(&def.constructor_open(i, &x), &x, &mut names)?;
        let p = parameter_prefix(&view, n);
        for (z, b, _) in &view.binders[p..] {
            if is_kind(b) {
                return Err(format!("constructor {} binds the predicate variable {} : {b}", i + 1, z.name));
            }
        }
    }
    Ok(())
}

/// Predicate arguments of every constructor conclusion are pairwise
/// distinct variables.
pub fn is_safe(def: &Inductive) -> Result<(), String> {
    let mut names = NameSupply::new();
    let tel = def.arity_telescope(&mut names).unwrap_or_default();
    let x = def.x_var(&mut names);
    for i in 0..def.constructors.len() {
        let view = view_constructor(&def.constructor_open(i, &x), &x, &mut names)?;
        let mut seen = Vec::new();
        for (k, (_, a)) in tel.iter().enumerate() {
            if !is_kind(a) {
                continue;
            }
            let m = &view.outputs[k];
            match m {
                CicTerm::Var(v) if v.sort == Sort::Box && !seen.contains(v) => seen.push(v.clone()),
                _ => return Err(format!("constructor {} has {m} at predicate position {}", i + 1, k + 1)),
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Files

#[derive(Clone, Debug)]
pub enum CicItem {
    Define { name: String, body: Raw, line: usize },
    Assume { name: String, ty: Raw, line: usize },
    Check { term: Raw, line: usize },
}

/// `define N := t.`, `assume x : T.` and `check t.` items.
pub fn parse_cic(src: &str) -> Result<Vec<CicItem>, ParseError> {
    let mut p = Parser::new(src)?;
    p.cic = true;
    let mut items = Vec::new();
    while !p.at_end() {
        let line = p.line();
        if p.keyword("define") {
            let name = p.ident()?;
            p.expect(&Tok::Define)?;
            let body = p.term()?;
            p.expect(&Tok::Dot)?;
            items.push(CicItem::Define { name, body, line });
        } else if p.keyword("assume") {
            let name = p.ident()?;
            p.expect(&Tok::Colon)?;
            let ty = p.term()?;
            p.expect(&Tok::Dot)?;
            items.push(CicItem::Assume { name, ty, line });
        } else if p.keyword("check") {
            let term = p.term()?;
            p.expect(&Tok::Dot)?;
            items.push(CicItem::Check { term, line });
        } else {
            return Err(p.error(format!("expected `define`, `assume` or `check`, found {}", p.describe())));
        }
    }
    Ok(items)
}

struct Resolver<'a> {
    defines: &'a HashMap<String, CicTerm>,
    assumptions: &'a CicEnv,
    names: NameSupply,
}

impl<'a> Resolver<'a> {
    fn type_of(&self, v: &Var, bound: &[(String, Var, CicTerm)]) -> Option<CicTerm> {
        bound
            .iter()
            .rev()
            .find(|(_, w, _)| w == v)
            .map(|(_, _, t)| t.clone())
            .or_else(|| lookup(self.assumptions, v).cloned())
    }

    /// Position of a variable in the combined context, for ordering.
    fn rank(&self, v: &Var, bound: &[(String, Var, CicTerm)]) -> usize {
        self.assumptions
            .iter()
            .position(|(w, _)| w == v)
            .or_else(|| bound.iter().position(|(_, w, _)| w == v).map(|k| k + self.assumptions.len()))
            .unwrap_or(usize::MAX)
    }

    fn resolve(&mut self, raw: &Raw, bound: &mut Vec<(String, Var, CicTerm)>) -> Result<CicTerm, String> {
        Ok(match raw {
            Raw::Star => CicTerm::star(),
            Raw::Box => CicTerm::Sort(Sort::Box),
            Raw::Ident(x) => {
                if let Some((_, v, _)) = bound.iter().rev().find(|(y, _, _)| y == x) {
                    CicTerm::var(v)
                } else if let Some((v, _)) = self.assumptions.iter().rev().find(|(v, _)| &*v.name == x) {
                    CicTerm::var(v)
                } else if let Some(t) = self.defines.get(x) {
                    t.clone()
                } else {
                    return Err(format!("unbound identifier {x}"));
                }
            }
            Raw::App(f, a) => CicTerm::app(self.resolve(f, bound)?, self.resolve(a, bound)?),
            Raw::Arrow(a, b) => CicTerm::arrow(self.resolve(a, bound)?, self.resolve(b, bound)?),
            Raw::Prod(x, a, b) | Raw::Abs(x, a, b) => {
                let ty = self.resolve(a, bound)?;
                let v = self.names.fresh_var(x, sort_of_annotation(&ty));
                bound.push((x.clone(), v.clone(), ty.clone()));
                let body = self.resolve(b, bound);
                bound.pop();
                let body = body?;
                match raw {
                    Raw::Prod(..) => CicTerm::prod(&v, ty, &body),
                    _ => CicTerm::abs(&v, ty, &body),
                }
            }
            Raw::Ind(x, a, cs) => {
                let arity = self.resolve(a, bound)?;
                let xv = self.names.fresh_var(x, Sort::Box);
                bound.push((x.clone(), xv.clone(), arity.clone()));
                let cs: Result<Vec<CicTerm>, String> = cs.iter().map(|c| self.resolve(c, bound)).collect();
                bound.pop();
                self.close_inductive(&xv, arity, cs?, bound)?
            }
            Raw::Constr(i, ind) => {
                let ind = self.resolve(ind, bound)?;
                let (h, ys) = ind.spine();
                match h {
                    CicTerm::Ind(_) if !ys.is_empty() => {
                        let ys: Vec<CicTerm> = ys.into_iter().cloned().collect();
                        CicTerm::apps(CicTerm::Constr(*i, Box::new(h.clone())), ys)
                    }
                    _ => CicTerm::Constr(*i, Box::new(ind)),
                }
            }
            Raw::Elim { ind, motive, indices, scrutinee, branches } => {
                let ind = self.resolve(ind, bound)?;
                let motive = self.resolve(motive, bound)?;
                let indices: Vec<CicTerm> = indices.iter().map(|t| self.resolve(t, bound)).collect::<Result<_, _>>()?;
                let scrutinee = self.resolve(scrutinee, bound)?;
                let branches: Vec<CicTerm> = branches.iter().map(|t| self.resolve(t, bound)).collect::<Result<_, _>>()?;
                let (h, ys) = ind.spine();
                if matches!(h, CicTerm::Ind(_)) && !ys.is_empty() {
                    // Parameters closed over become leading indices; the
                    // motive and branches abstract them.
                    let tel: Vec<(Var, CicTerm)> = ys
                        .iter()
                        .map(|y| match y {
                            CicTerm::Var(v) => Ok((v.clone(), self.type_of(v, bound).ok_or("unknown parameter")?)),
                            _ => Err("closed inductive applied to a non-variable".to_string()),
                        })
                        .collect::<Result<_, String>>()?;
                    let ys: Vec<CicTerm> = ys.into_iter().cloned().collect();
                    CicTerm::Elim(Box::new(Elim {
                        ind: h.clone(),
                        motive: abss(&tel, motive),
                        indices: ys.into_iter().chain(indices).collect(),
                        scrutinee,
                        branches: branches.into_iter().map(|f| abss(&tel, f)).collect(),
                    }))
                } else {
                    CicTerm::Elim(Box::new(Elim { ind, motive, indices, scrutinee, branches }))
                }
            }
        })
    }

    /// Close an inductive over the context variables it mentions:
    /// `Ind(X′:(y⃗:U⃗)A){(y⃗:U⃗)C{X→X′ y⃗}} y⃗`.
    fn close_inductive(&mut self, x: &Var, arity: CicTerm, cs: Vec<CicTerm>, bound: &[(String, Var, CicTerm)]) -> Result<CicTerm, String> {
        let mut needed: Vec<Var> = Vec::new();
        let mut todo: Vec<Var> = arity.free_vars();
        for c in &cs {
            todo.extend(c.free_vars().into_iter().filter(|v| v != x));
        }
        while let Some(v) = todo.pop() {
            if needed.contains(&v) {
                continue;
            }
            let ty = self.type_of(&v, bound).ok_or_else(|| format!("unbound variable {}", v.name))?;
            todo.extend(ty.free_vars());
            needed.push(v);
        }
        needed.sort_by_key(|v| self.rank(v, bound));
        if needed.is_empty() {
            let constructors = cs.iter().map(|c| c.close(&x.name)).collect();
            return Ok(CicTerm::Ind(Arc::new(Inductive { binder: Binder::new(&x.name, Sort::Box), arity, constructors })));
        }
        let tel: Vec<(Var, CicTerm)> = needed.iter().map(|v| (v.clone(), self.type_of(v, bound).unwrap())).collect();
        let ys = var_terms(&tel);
        let x_ys = CicTerm::apps(CicTerm::var(x), ys.iter().cloned());
        let arity2 = prods(&tel, arity);
        let constructors = cs
            .iter()
            .map(|c| {
                let c2 = c.subst1(&x.name, &x_ys);
                prods(&tel, c2).close(&x.name)
            })
            .collect();
        let ind = CicTerm::Ind(Arc::new(Inductive { binder: Binder::new(&x.name, Sort::Box), arity: arity2, constructors }));
        Ok(CicTerm::apps(ind, ys))
    }
}

/// One checked item of a CIC⁻ file.
#[derive(Clone, Debug)]
pub enum CheckedItem {
    Define { name: String, term: CicTerm, ty: CicTerm },
    Assume { name: Var, ty: CicTerm },
    Check { term: CicTerm, ty: CicTerm },
}

#[derive(Clone, Debug, Default)]
pub struct CicFile {
    pub items: Vec<CheckedItem>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CicFile {
    pub fn accepted(&self) -> bool {
        !self.diagnostics.iter().any(|d| d.is_error())
    }
}

/// Parse, resolve and type-check a CIC⁻ file; stops at the first
/// rejected item.
pub fn check_cic_source(src: &str, fuel: FuelBudget) -> CicFile {
    let items = match parse_cic(src) {
        Ok(items) => items,
        Err(e) => {
            return CicFile {
                items: Vec::new(),
                diagnostics: vec![Diagnostic::error(Code::Parse, e.message.clone()).at(format!("line {}:{}", e.line, e.col))],
            }
        }
    };
    let checker = CicChecker::new(fuel);
    let mut defines: HashMap<String, CicTerm> = HashMap::new();
    let mut env: CicEnv = Vec::new();
    let mut out = CicFile::default();
    let mut names = NameSupply::new();
    for it in &items {
        let (line, name) = match it {
            CicItem::Define { line, name, .. } | CicItem::Assume { line, name, .. } => (*line, Some(name.as_str())),
            CicItem::Check { line, .. } => (*line, None),
        };
        if let Some(n) = name {
            if defines.contains_key(n) || env.iter().any(|(v, _)| &*v.name == n) {
                out.diagnostics.push(Diagnostic::error(Code::Duplicate, format!("{n} is declared twice")).at(format!("line {line}")));
                return out;
            }
            names.avoid(n);
        }
        let raw = match it {
            CicItem::Define { body, .. } => body,
            CicItem::Assume { ty, .. } => ty,
            CicItem::Check { term, .. } => term,
        };
        let mut r = Resolver { defines: &defines, assumptions: &env, names: names.clone() };
        let t = match r.resolve(raw, &mut Vec::new()) {
            Ok(t) => t,
            Err(m) => {
                out.diagnostics.push(Diagnostic::error(Code::Unbound, m).at(format!("line {line}")));
                return out;
            }
        };
        names = r.names;
        let at = |d: Diagnostic| d.at(format!("line {line}"));
        match it {
            CicItem::Assume { name, .. } => match checker.infer_sort(&env, &t) {
                Ok(_) => {
                    let v = Var::new(name, sort_of_annotation(&t));
                    out.items.push(CheckedItem::Assume { name: v.clone(), ty: t.clone() });
                    env.push((v, t));
                }
                Err(d) => {
                    out.diagnostics.push(at(d));
                    return out;
                }
            },
            CicItem::Define { .. } | CicItem::Check { .. } => match checker.infer(&env, &t) {
                Ok(ty) => {
                    if let CicItem::Define { name, .. } = it {
                        defines.insert(name.clone(), t.clone());
                        out.items.push(CheckedItem::Define { name: name.clone(), term: t, ty });
                    } else {
                        out.items.push(CheckedItem::Check { term: t, ty });
                    }
                }
                Err(d) => {
                    out.diagnostics.push(at(d));
                    return out;
                }
            },
        }
    }
    out
}

// ---------------------------------------------------------------------
// Translation

/// The CAC signature produced from a checked CIC⁻ file.
#[derive(Clone, Debug, Default)]
pub struct TranslationOutput {
    pub inductives: Vec<TranslatedInductive>,
    /// Assumptions and named terms, as `symbol` declarations with an
    /// optional defining rule.
    pub mains: Vec<(String, Term, Option<Term>)>,
    assumed: BTreeSet<Name>,
}

#[derive(Clone, Debug)]
pub struct TranslatedInductive {
    pub name: String,
    pub ind: CicTerm,
    pub ind_ty: Term,
    pub constructors: Vec<(String, Term)>,
    pub welim: (String, Term, Vec<RewriteRule>),
    pub selims: Vec<(String, Term, Vec<RewriteRule>)>,
    kind_motives: Vec<CicTerm>,
}

pub fn ind_symbol(n: &str) -> String {
    format!("Ind_{n}")
}

pub fn constr_symbol(n: &str, i: usize) -> String {
    format!("Constr^{n}_{i}")
}

pub fn welim_symbol(n: &str) -> String {
    format!("WElim_{n}")
}

pub fn selim_symbol(n: &str, k: usize) -> String {
    format!("SElim^{n}_{k}")
}

struct Translator {
    inds: Vec<TranslatedInductive>,
    assumed: BTreeSet<Name>,
}

impl Translator {
    fn index_of(&self, ind: &CicTerm) -> Option<usize> {
        self.inds.iter().position(|t| t.ind == *ind)
    }

    fn translate(&self, t: &CicTerm) -> Term {
        match t {
            CicTerm::Sort(s) => Term::Sort(*s),
            CicTerm::Bound(k) => Term::Bound(*k),
            CicTerm::Var(v) if self.assumed.contains(&v.name) => Term::Sym(v.name.clone()),
            CicTerm::Var(v) => Term::Var(v.clone()),
            CicTerm::Abs(b, a, u) => Term::Abs(b.clone(), Arc::new(self.translate(a)), Arc::new(self.translate(u))),
            CicTerm::Prod(b, a, u) => Term::Prod(b.clone(), Arc::new(self.translate(a)), Arc::new(self.translate(u))),
            CicTerm::App(a, b) => Term::app(self.translate(a), self.translate(b)),
            CicTerm::Ind(_) => Term::sym(&ind_symbol(&self.inds[self.index_of(t).expect("collected")].name)),
            CicTerm::Constr(i, ind) => {
                Term::sym(&constr_symbol(&self.inds[self.index_of(ind).expect("collected")].name, *i))
            }
            CicTerm::Elim(e) => {
                let ti = &self.inds[self.index_of(&e.ind).expect("collected")];
                let rest = e.indices.iter().chain([&e.scrutinee]).chain(&e.branches).map(|u| self.translate(u));
                if is_kind_motive(e.indices.len(), &e.motive) {
                    let k = ti.kind_motives.iter().position(|m| *m == e.motive).expect("collected");
                    Term::apps(Term::Sym(Name::from(ti.selims[k].0.as_str())), rest)
                } else {
                    Term::apps(Term::sym(&ti.welim.0), [self.translate(&e.motive)].into_iter().chain(rest))
                }
            }
        }
    }
}

/// Inductive nodes of `t`, innermost first.
fn collect_inductives(t: &CicTerm, out: &mut Vec<CicTerm>) {
    let visit = |u: &CicTerm, out: &mut Vec<CicTerm>| collect_inductives(u, out);
    match t {
        CicTerm::Sort(_) | CicTerm::Bound(_) | CicTerm::Var(_) => {}
        CicTerm::Abs(_, a, b) | CicTerm::Prod(_, a, b) | CicTerm::App(a, b) => {
            visit(a, out);
            visit(b, out);
        }
        CicTerm::Ind(i) => {
            visit(&i.arity, out);
            for c in &i.constructors {
                visit(c, out);
            }
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        CicTerm::Constr(_, i) => visit(i, out),
        CicTerm::Elim(e) => {
            for u in [&e.ind, &e.motive, &e.scrutinee].into_iter().chain(&e.indices).chain(&e.branches) {
                visit(u, out);
            }
        }
    }
}

fn collect_kind_motives(t: &CicTerm, out: &mut Vec<(CicTerm, CicTerm)>) {
    if let CicTerm::Elim(e) = t {
        if is_kind_motive(e.indices.len(), &e.motive) && !out.iter().any(|(i, m)| *i == e.ind && *m == e.motive) {
            out.push((e.ind.clone(), e.motive.clone()));
        }
    }
    let mut subs: Vec<&CicTerm> = Vec::new();
    match t {
        CicTerm::Abs(_, a, b) | CicTerm::Prod(_, a, b) | CicTerm::App(a, b) => subs.extend([&**a, &**b]),
        CicTerm::Ind(i) => {
            subs.push(&i.arity);
            subs.extend(&i.constructors);
        }
        CicTerm::Constr(_, i) => subs.push(i),
        CicTerm::Elim(e) => subs.extend([&e.ind, &e.motive, &e.scrutinee].into_iter().chain(&e.indices).chain(&e.branches)),
        _ => {}
    }
    for s in subs {
        collect_kind_motives(s, out);
    }
}

fn cac_var(v: &Var) -> Var {
    Var { name: v.name.clone(), sort: v.sort }
}

/// Translate a checked file: symbols for inductives, constructors and
/// their recursors, plus the assumptions and named terms.
pub fn translate(file: &CicFile) -> TranslationOutput {
    let mut inds: Vec<CicTerm> = Vec::new();
    let mut motives: Vec<(CicTerm, CicTerm)> = Vec::new();
    let mut define_names: Vec<(CicTerm, String)> = Vec::new();
    for it in &file.items {
        let ts: Vec<&CicTerm> = match it {
            CheckedItem::Define { name, term, ty } => {
                let (h, _) = term.spine();
                if matches!(h, CicTerm::Ind(_)) && !define_names.iter().any(|(i, _)| i == h) {
                    define_names.push((h.clone(), name.clone()));
                }
                vec![term, ty]
            }
            CheckedItem::Assume { ty, .. } => vec![ty],
            CheckedItem::Check { term, ty } => vec![term, ty],
        };
        for t in ts {
            collect_inductives(t, &mut inds);
            collect_kind_motives(t, &mut motives);
        }
    }
    let mut tr = Translator {
        inds: Vec::new(),
        assumed: file
            .items
            .iter()
            .filter_map(|it| match it {
                CheckedItem::Assume { name, .. } => Some(name.name.clone()),
                _ => None,
            })
            .collect(),
    };
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut anon = 0;
    for ind in &inds {
        let name = match define_names.iter().find(|(i, _)| i == ind) {
            Some((_, n)) if used.insert(n.clone()) => n.clone(),
            _ => loop {
                anon += 1;
                let n = format!("I{anon}");
                if used.insert(n.clone()) {
                    break n;
                }
            },
        };
        let kind_motives: Vec<CicTerm> = motives.iter().filter(|(i, _)| i == ind).map(|(_, m)| m.clone()).collect();
        let te = translate_inductive(&tr, ind, &name, &kind_motives);
        tr.inds.push(te);
    }
    let mut mains = Vec::new();
    let mut k = 0;
    for it in &file.items {
        match it {
            CheckedItem::Assume { name, ty } => mains.push((name.name.to_string(), tr.translate(ty), None)),
            CheckedItem::Define { name, term, ty } => {
                if !matches!(term.spine().0, CicTerm::Ind(_)) {
                    mains.push((name.clone(), tr.translate(ty), Some(tr.translate(term))));
                }
            }
            CheckedItem::Check { term, ty } => {
                k += 1;
                mains.push((format!("check_{k}"), tr.translate(ty), Some(tr.translate(term))));
            }
        }
    }
    TranslationOutput { inductives: tr.inds, mains, assumed: tr.assumed }
}

fn translate_inductive(tr: &Translator, ind: &CicTerm, name: &str, kind_motives: &[CicTerm]) -> TranslatedInductive {
    let def = ind.as_ind().expect("inductive").clone();
    let mut names = supply_for(&[ind]);
    for k in kind_motives {
        k.avoid_in(&mut names);
    }
    // Avoid names that could be read back as symbols.
    for s in tr.assumed.iter() {
        names.avoid(s);
    }
    let ind_sym = Term::sym(&ind_symbol(name));
    // Symbols of this inductive are not yet in `tr`; translate with a
    // temporary table containing it.
    let mut local = Translator { inds: tr.inds.clone(), assumed: tr.assumed.clone() };
    local.inds.push(TranslatedInductive {
        name: name.to_string(),
        ind: ind.clone(),
        ind_ty: Term::star(),
        constructors: Vec::new(),
        welim: (welim_symbol(name), Term::star(), Vec::new()),
        selims: (1..=kind_motives.len()).map(|k| (selim_symbol(name, k), Term::star(), Vec::new())).collect(),
        kind_motives: kind_motives.to_vec(),
    });
    let ind_ty = local.translate(&def.arity);
    let constructors: Vec<(String, Term)> = def
        .constructors
        .iter()
        .enumerate()
        .map(|(i, c)| (constr_symbol(name, i + 1), local.translate(&c.instantiate(ind))))
        .collect();
    let tel = def.arity_telescope(&mut names).expect("checked arity");
    let x = def.x_var(&mut names);
    let views: Vec<CtorView> = (0..def.constructors.len())
        .map(|i| view_constructor(&def.constructor_open(i, &x), &x, &mut names).expect("checked constructor"))
        .collect();
    let sub = |t: &CicTerm| t.subst1(&x.name, ind);
    let cac_tel = |tel: &[(Var, CicTerm)]| -> Vec<(Var, Term)> { tel.iter().map(|(v, t)| (cac_var(v), local.translate(t))).collect() };
    let xs = cac_tel(&tel);
    let y = names.fresh_var("y", Sort::Star);
    let i_x = Term::apps(ind_sym.clone(), xs.iter().map(|(v, _)| v.term()));

    // Weak eliminator.
    let q = names.fresh_var("Q", Sort::Box);
    let q_ty = Term::prods(&xs, Term::arrow(i_x.clone(), Term::star()));
    let fs: Vec<Var> = (1..=def.constructors.len()).map(|i| names.fresh_var(&format!("f{i}"), Sort::Star)).collect();
    let q_cic = CicTerm::var(&q);
    let weak_branch: Vec<Term> = (0..def.constructors.len())
        .map(|i| local.translate(&delta_type(ind, i, &q_cic, &CicTerm::Constr(i + 1, Box::new(ind.clone()))).expect("checked")))
        .collect();
    let wname = welim_symbol(name);
    let mut wtel = vec![(cac_var(&q), q_ty.clone())];
    wtel.extend(xs.iter().cloned());
    wtel.push((cac_var(&y), i_x.clone()));
    wtel.extend(fs.iter().zip(&weak_branch).map(|(f, t)| (cac_var(f), t.clone())));
    let wty = Term::prods(&wtel, Term::apps(q.term(), xs.iter().map(|(v, _)| v.term()).chain([y.term()])));
    let env_head = vec![(cac_var(&q), q_ty)];
    let wrules = elim_rules(&local, &wname, name, &views, &sub, &xs, Some(&q), &env_head, &fs, &weak_branch);

    // Strong eliminators, one per kind motive.
    let mut selims = Vec::new();
    for (k, m) in kind_motives.iter().enumerate() {
        let mut body = m.clone();
        let mut mx = Vec::new();
        for _ in 0..tel.len() {
            let CicTerm::Abs(b, dom, u) = &body else { unreachable!() };
            let v = names.fresh_var(&b.name, sort_of_annotation(dom));
            body = u.open(&v);
            mx.push(v);
        }
        let CicTerm::Abs(b, _, u) = &body else { unreachable!() };
        let my = names.fresh_var(&b.name, Sort::Star);
        let kk = u.open(&my);
        let gs: Vec<Var> = (1..=def.constructors.len()).map(|i| names.fresh_var(&format!("f{i}"), Sort::Box)).collect();
        let branch: Vec<Term> = (0..def.constructors.len())
            .map(|i| {
                local.translate(
                    &delta_prime_type(ind, i, &mx, &my, &kk, &CicTerm::Constr(i + 1, Box::new(ind.clone()))).expect("checked"),
                )
            })
            .collect();
        // Re-express K over the telescope variables x⃗ and y.
        let mut theta: HashMap<Name, CicTerm> =
            mx.iter().zip(&tel).map(|(v, (x, _))| (v.name.clone(), CicTerm::var(x))).collect();
        theta.insert(my.name.clone(), CicTerm::var(&y));
        let kt = local.translate(&kk.subst(&theta));
        let sname = selim_symbol(name, k + 1);
        let mut stel: Vec<(Var, Term)> = xs.clone();
        stel.push((cac_var(&y), i_x.clone()));
        stel.extend(gs.iter().zip(&branch).map(|(f, t)| (cac_var(f), t.clone())));
        let sty = Term::prods(&stel, kt);
        let rules = elim_rules(&local, &sname, name, &views, &sub, &xs, None, &[], &gs, &branch);
        selims.push((sname, sty, rules));
    }

    TranslatedInductive {
        name: name.to_string(),
        ind: ind.clone(),
        ind_ty,
        constructors,
        welim: (wname, wty, wrules),
        selims,
        kind_motives: kind_motives.to_vec(),
    }
}

/// `E Q? x⃗ (Constr_i z⃗) f⃗ --> Δ′[…]` with `ρ = {x⃗ ↦ m⃗}`.
#[allow(clippy::too_many_arguments)]
fn elim_rules(
    tr: &Translator,
    elim: &str,
    name: &str,
    views: &[CtorView],
    sub: &dyn Fn(&CicTerm) -> CicTerm,
    xs: &[(Var, Term)],
    q: Option<&Var>,
    env_head: &[(Var, Term)],
    fs: &[Var],
    branch_types: &[Term],
) -> Vec<RewriteRule> {
    let head = Term::sym(elim);
    let prefix: Vec<Term> = q.map(|q| q.term()).into_iter().collect();
    views
        .iter()
        .enumerate()
        .map(|(i, view)| {
            let mut env: Vec<(Var, Term)> = env_head.to_vec();
            let zs: Vec<Term> = view.binders.iter().map(|(z, _, _)| Term::Var(cac_var(z))).collect();
            for (z, b, _) in &view.binders {
                env.push((cac_var(z), tr.translate(&sub(b))));
            }
            env.extend(fs.iter().zip(branch_types).map(|(f, t)| (cac_var(f), t.clone())));
            let scrut = Term::apps(Term::sym(&constr_symbol(name, i + 1)), zs.iter().cloned());
            let mut args = prefix.clone();
            args.extend(xs.iter().map(|(v, _)| v.term()));
            args.push(scrut);
            args.extend(fs.iter().map(|f| f.term()));
            let rho: Substitution =
                xs.iter().zip(&view.outputs).map(|((v, _), m)| (v.name.clone(), tr.translate(&sub(m)))).collect();
            let mut rhs = fs[i].term();
            for (z, _, rec) in &view.binders {
                rhs = Term::app(rhs, Term::Var(cac_var(z)));
                if let Some(r) = rec {
                    let ytel: Vec<(Var, Term)> = r.tel.iter().map(|(y, d)| (cac_var(y), tr.translate(&sub(d)))).collect();
                    let zy = Term::apps(Term::Var(cac_var(z)), ytel.iter().map(|(y, _)| y.term()));
                    let call = Term::apps(
                        head.clone(),
                        prefix
                            .iter()
                            .cloned()
                            .chain(r.args.iter().map(|a| tr.translate(&sub(a))))
                            .chain([zy])
                            .chain(fs.iter().map(|f| f.term())),
                    );
                    rhs = Term::app(rhs, Term::abss(&ytel, call));
                }
            }
            RewriteRule::new(&format!("{elim}/{}", i + 1), elim, args, rhs)
                .with_env(Environment::from_bindings(env))
                .with_rho(rho)
        })
        .collect()
}

fn rule_source(r: &RewriteRule) -> String {
    let mut s = format!("rule {} --> {}", r.lhs(), r.rhs);
    let env: Vec<String> = r.env.bindings().iter().map(|(x, t)| format!("{} : {t}", x.name)).collect();
    let rho: Vec<String> = r.rho.iter().map(|(x, t)| format!("{x} := {t}")).collect();
    if !env.is_empty() || !rho.is_empty() {
        s.push_str(" [env: ");
        s.push_str(&env.join(", "));
        if !rho.is_empty() {
            s.push_str("; rho: ");
            s.push_str(&rho.join(", "));
        }
        s.push(']');
    }
    s.push('.');
    s
}

impl TranslationOutput {
    /// `|t|` for a term over the inductives and assumptions of the file;
    /// `None` if it mentions an inductive or kind motive not seen there.
    pub fn translate_term(&self, t: &CicTerm) -> Option<Term> {
        let mut inds = Vec::new();
        let mut motives = Vec::new();
        collect_inductives(t, &mut inds);
        collect_kind_motives(t, &mut motives);
        let known = |i: &CicTerm| self.inductives.iter().find(|ti| ti.ind == *i);
        if !inds.iter().all(|i| known(i).is_some()) || !motives.iter().all(|(i, m)| known(i).is_some_and(|ti| ti.kind_motives.contains(m))) {
            return None;
        }
        let tr = Translator { inds: self.inductives.clone(), assumed: self.assumed.clone() };
        Some(tr.translate(t))
    }

    /// CAC source text that `elaborate_source` reads back.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for ti in &self.inductives {
            out.push_str(&format!("constant {} : {}.\n", ind_symbol(&ti.name), ti.ind_ty));
            for (c, ty) in &ti.constructors {
                out.push_str(&format!("constant {c} : {ty}.\n"));
            }
            for (e, ty, rules) in std::iter::once(&ti.welim).chain(&ti.selims) {
                out.push_str(&format!("symbol {e} : {ty}.\n"));
                for r in rules {
                    out.push_str(&rule_source(r));
                    out.push('\n');
                }
                out.push_str(&format!("recursor {e} for {}.\n", ind_symbol(&ti.name)));
            }
            out.push('\n');
        }
        for (n, ty, body) in &self.mains {
            out.push_str(&format!("symbol {n} : {ty}.\n"));
            if let Some(body) = body {
                out.push_str(&format!("rule {n} --> {body}.\n"));
            }
        }
        out
    }
}
