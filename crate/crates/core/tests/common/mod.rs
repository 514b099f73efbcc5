//! Shared fixtures: corpus loading and random well-typed term generators.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use cac_kernel::cic::{self, CheckedItem, CicTerm, Elim, TranslationOutput};
use cac_kernel::elaborate::{elaborate_source, Elaboration, Options};
use cac_kernel::rewrite::{normalize, FuelBudget};
use cac_kernel::signature::output_head;
use cac_kernel::term::NameSupply;
use cac_kernel::typing::Typer;
use cac_kernel::{Environment, Name, Signature, Sort, Substitution, Term, Var};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_source(file: &str) -> String {
    let p = corpus_dir().join(file);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn options(trusted: &[&str]) -> Options {
    Options { trusted: trusted.iter().map(|s| s.to_string()).collect(), ..Options::default() }
}

pub fn elaborate_file(file: &str, trusted: &[&str]) -> Elaboration {
    elaborate_source(&corpus_source(file), &options(trusted))
}

/// Accepted signatures of the corpus, `.cicminus` files through translation.
pub fn acceptance_signatures() -> Vec<(&'static str, Signature)> {
    let mut out = Vec::new();
    for (f, trusted) in [
        ("nat.cac", &[][..]),
        ("list.cac", &[]),
        ("int.cac", &[]),
        ("distributivity.cac", &[]),
        ("f-arrow.cac", &[]),
        ("dlist.cac", &[]),
        ("trm.cac", &["trm"]),
    ] {
        let e = elaborate_file(f, trusted);
        assert!(e.accepted(), "{f}: {:?}", e.diagnostics);
        out.push((f, e.sig));
    }
    for f in ["nat.cicminus", "list.cicminus", "vec.cicminus"] {
        let file = cic::check_cic_source(&corpus_source(f), FuelBudget::new(100_000));
        assert!(file.accepted(), "{f}: {:?}", file.diagnostics);
        let e = elaborate_source(&cic::translate(&file).to_source(), &Options::default());
        assert!(e.accepted(), "{f}: {:?}", e.diagnostics);
        out.push((f, e.sig));
    }
    out
}

// CAC terms

/// Type-directed generator over one signature. Terms live in a fixed
/// context `A:*, a:A` so signatures without closed base types still have
/// inhabitants.
pub struct TermGen<'a> {
    pub sig: &'a Signature,
    pub rng: ChaCha8Rng,
    names: NameSupply,
    pool: Vec<Term>,
    pub context: Vec<(Var, Term)>,
    fuel: FuelBudget,
    nesting: u32,
    nodes: u32,
}

impl<'a> TermGen<'a> {
    pub fn new(sig: &'a Signature, rng: ChaCha8Rng) -> TermGen<'a> {
        let mut names = NameSupply::new();
        for d in sig.decls() {
            names.avoid(&d.name);
        }
        let a_ty = names.fresh_var("A", Sort::Box);
        let a = names.fresh_var("a", Sort::Star);
        let mut pool: Vec<Term> = sig.decls().iter().filter(|d| d.ty == Term::star()).map(|d| Term::sym(&d.name)).collect();
        pool.push(Term::var(&a_ty));
        let context = vec![(a_ty.clone(), Term::star()), (a, Term::var(&a_ty))];
        TermGen { sig, rng, names, pool, context, fuel: FuelBudget::new(10_000), nesting: 0, nodes: 0 }
    }

    pub fn environment(&self) -> Environment {
        Environment::from_bindings(self.context.clone())
    }

    fn nf(&self, t: &Term) -> Term {
        normalize(t, self.sig, self.fuel).unwrap_or_else(|_| t.clone())
    }

    /// A random type of sort `*`.
    pub fn gen_type(&mut self, depth: u32) -> Option<Term> {
        let mut env = self.context.clone();
        self.nodes = 40;
        self.gen(&mut env, &Term::star(), depth)
    }

    /// A random term of type `ty` in the generator context, kept only if
    /// the type checker agrees.
    pub fn gen_checked(&mut self, ty: &Term, depth: u32) -> Option<Term> {
        let mut env = self.context.clone();
        self.nodes = 40;
        let t = self.gen(&mut env, ty, depth)?;
        Typer::new(self.sig).with_fuel(self.fuel).check(&self.environment(), &t, ty).ok()?;
        Some(t)
    }

    pub fn gen(&mut self, env: &mut Vec<(Var, Term)>, ty: &Term, depth: u32) -> Option<Term> {
        if self.nesting > 24 {
            return None;
        }
        self.nesting += 1;
        let t = self.gen_nested(env, ty, depth);
        self.nesting -= 1;
        t
    }

    fn gen_nested(&mut self, env: &mut Vec<(Var, Term)>, ty: &Term, depth: u32) -> Option<Term> {
        let ty = self.nf(ty);
        if let Term::Prod(b, dom, body) = &ty {
            let x = self.names.fresh_var(&b.name, Sort::of_annotation(dom));
            env.push((x.clone(), (**dom).clone()));
            let body = self.gen(env, &body.open(&x), depth);
            env.pop();
            return Some(Term::abs(&x, (**dom).clone(), &body?));
        }
        let budget = if self.nodes == 0 { 0 } else { depth };
        self.nodes = self.nodes.saturating_sub(1);
        if budget > 0 && !ty.is_kind() && self.rng.gen_ratio(1, 8) {
            if let Some(t) = self.gen_beta(env, &ty, budget) {
                return Some(t);
            }
        }
        // Type variables are drawn through the pool.
        let vars: Vec<Var> =
            if ty == Term::star() { Vec::new() } else { env.iter().filter(|(_, xty)| self.nf(xty) == ty).map(|(x, _)| x.clone()).collect() };
        if ty == Term::star() && (budget == 0 || self.rng.gen_ratio(1, 3)) {
            let in_scope: Vec<Term> =
                self.pool.iter().filter(|p| p.as_var().is_none_or(|x| env.iter().any(|(y, _)| y == x))).cloned().collect();
            if let Some(p) = in_scope.choose(&mut self.rng) {
                return Some(p.clone());
            }
        }
        let head = ty.head_sym().cloned();
        let mut syms: Vec<Name> = self
            .sig
            .decls()
            .iter()
            .filter(|d| {
                let out = output_of(&d.ty);
                match (&head, output_head(&d.ty)) {
                    (Some(h), Some(o)) => *h == o,
                    (None, None) => (ty == Term::star() && out == Term::star()) || (!ty.is_kind() && out.spine().0.as_var().is_some()),
                    (Some(_), None) => out.spine().0.as_var().is_some() || matches!(out, Term::Bound(_)),
                    _ => false,
                }
            })
            .map(|d| d.name.clone())
            .collect();
        syms.shuffle(&mut self.rng);
        if budget == 0 {
            // Only symbols whose output head is fixed: no recursors.
            syms.retain(|f| self.sig.get(f).is_some_and(|d| output_head(&d.ty).is_some() || output_of(&d.ty) == Term::star()));
            syms.sort_by_key(|f| self.sig.get(f).map(|d| d.arity()).unwrap_or(0));
            if let Some(x) = vars.choose(&mut self.rng) {
                return Some(Term::var(x));
            }
        } else if !vars.is_empty() && self.rng.gen_ratio(1, 3) {
            return Some(Term::var(vars.choose(&mut self.rng).unwrap()));
        }
        for f in syms.iter().take(4) {
            if let Some(t) = self.instantiate(env, f, &ty, budget.saturating_sub(1)) {
                return Some(t);
            }
        }
        if let Some(x) = vars.first() {
            return Some(Term::var(x));
        }
        if ty == Term::star() {
            return self.pool.first().cloned();
        }
        None
    }

    fn gen_beta(&mut self, env: &mut Vec<(Var, Term)>, ty: &Term, depth: u32) -> Option<Term> {
        let dom = self.pool.choose(&mut self.rng)?.clone();
        let arg = self.gen(env, &dom, depth - 1)?;
        let x = self.names.fresh_var("x", Sort::Star);
        env.push((x.clone(), dom.clone()));
        let body = self.gen(env, ty, depth - 1);
        env.pop();
        Some(Term::app(Term::abs(&x, dom, &body?), arg))
    }

    /// `f a⃗ : ty`, the arguments determined by matching the output type of
    /// `f` against `ty` where possible and generated otherwise.
    fn instantiate(&mut self, env: &mut Vec<(Var, Term)>, f: &str, ty: &Term, depth: u32) -> Option<Term> {
        let decl = self.sig.get(f)?;
        let (tel, out) = decl.ty.open_telescope(&mut self.names);
        let metas: HashMap<Name, Term> = tel.iter().map(|(x, t)| (x.name.clone(), t.clone())).collect();
        let mut theta = Substitution::new();
        if !match_meta(&out, ty, &metas, &mut theta, self) {
            return None;
        }
        let mut args = Vec::new();
        for (x, xty) in &tel {
            if let Some(v) = theta.get(&x.name) {
                args.push(v.clone());
                continue;
            }
            let xty = xty.subst(&theta);
            let v = self.gen(env, &xty, depth)?;
            theta.insert(x.name.clone(), v.clone());
            args.push(v);
        }
        Some(Term::apps(Term::sym(f), args))
    }
}

fn output_of(ty: &Term) -> Term {
    let mut t = ty;
    while let Term::Prod(_, _, b) = t {
        t = b;
    }
    t.clone()
}

/// First-order matching of an opened output type against a target, with
/// `P z⃗` patterns solved by a constant motive.
fn match_meta(p: &Term, t: &Term, metas: &HashMap<Name, Term>, theta: &mut Substitution, g: &TermGen) -> bool {
    if let Term::Var(x) = p {
        if metas.contains_key(&x.name) {
            if let Some(v) = theta.get(&x.name) {
                return g.nf(v) == *t;
            }
            if t.is_kind() {
                return false;
            }
            theta.insert(x.name.clone(), t.clone());
            return true;
        }
    }
    let (h, args) = p.spine();
    if let Term::Var(x) = h {
        if let Some(mty) = metas.get(&x.name) {
            if !args.is_empty() && !theta.contains(&x.name) && !t.is_kind() && args.iter().all(|a| a.as_var().is_some_and(|v| metas.contains_key(&v.name))) {
                // λ over the domains of the motive's type, body `t`.
                let mut doms = Vec::new();
                let mut m = mty.clone();
                while let Term::Prod(b, d, body) = m {
                    doms.push((b, (*d).clone()));
                    m = (*body).clone();
                }
                if doms.len() != args.len() {
                    return false;
                }
                let mut lam = t.clone();
                for (b, d) in doms.into_iter().rev() {
                    lam = Term::Abs(b, d.into(), lam.into());
                }
                theta.insert(x.name.clone(), lam);
                return true;
            }
        }
    }
    match (p, t) {
        (Term::App(f, a), Term::App(h, b)) => match_meta(f, h, metas, theta, g) && match_meta(a, b, metas, theta, g),
        (Term::Sym(f), Term::Sym(h)) => f == h,
        (Term::Sort(s), Term::Sort(u)) => s == u,
        (Term::Var(x), Term::Var(y)) => x == y,
        _ => {
            let q = p.subst(theta);
            q.free_vars().iter().all(|v| !metas.contains_key(&v.name)) && g.nf(&q) == *t
        }
    }
}

// CIC⁻ computations over the natural numbers

pub struct NatFixture {
    pub nat: CicTerm,
    pub translation: TranslationOutput,
    pub sig: Signature,
}

pub fn nat_fixture() -> NatFixture {
    let file = cic::check_cic_source("define Nat := Ind(X:*){X, X -> X}.", FuelBudget::new(1000));
    assert!(file.accepted(), "{:?}", file.diagnostics);
    let nat = match &file.items[0] {
        CheckedItem::Define { term, .. } => term.clone(),
        other => panic!("unexpected item {other:?}"),
    };
    let translation = cic::translate(&file);
    let e = elaborate_source(&translation.to_source(), &Options::default());
    assert!(e.accepted(), "{:?}", e.diagnostics);
    NatFixture { nat, translation, sig: e.sig }
}

impl NatFixture {
    pub fn zero(&self) -> CicTerm {
        CicTerm::Constr(1, Box::new(self.nat.clone()))
    }

    pub fn succ(&self, t: CicTerm) -> CicTerm {
        CicTerm::app(CicTerm::Constr(2, Box::new(self.nat.clone())), t)
    }

    pub fn numeral(&self, n: usize) -> CicTerm {
        (0..n).fold(self.zero(), |t, _| self.succ(t))
    }

    /// Random term of type `Nat` whose free variables are in `env`.
    pub fn gen(&self, rng: &mut ChaCha8Rng, names: &mut NameSupply, env: &mut Vec<Var>, depth: u32) -> CicTerm {
        let choice = if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..6) };
        match choice {
            0 | 1 => match env.choose(rng) {
                Some(x) if choice == 1 => CicTerm::var(x),
                _ => self.zero(),
            },
            2 => self.succ(self.gen(rng, names, env, depth - 1)),
            3 => {
                let x = names.fresh_var("x", Sort::Star);
                let arg = self.gen(rng, names, env, depth - 1);
                env.push(x.clone());
                let body = self.gen(rng, names, env, depth - 1);
                env.pop();
                CicTerm::app(CicTerm::abs(&x, self.nat.clone(), &body), arg)
            }
            _ => {
                let y = names.fresh_var("y", Sort::Star);
                let motive = CicTerm::abs(&y, self.nat.clone(), &self.nat);
                let scrutinee = self.gen(rng, names, env, depth - 1);
                let base = self.gen(rng, names, env, depth - 1);
                let p = names.fresh_var("p", Sort::Star);
                let r = names.fresh_var("r", Sort::Star);
                env.push(p.clone());
                env.push(r.clone());
                let body = self.gen(rng, names, env, depth - 1);
                env.pop();
                env.pop();
                let step = CicTerm::abs(&p, self.nat.clone(), &CicTerm::abs(&r, self.nat.clone(), &body));
                CicTerm::Elim(Box::new(Elim {
                    ind: self.nat.clone(),
                    motive,
                    indices: Vec::new(),
                    scrutinee,
                    branches: vec![base, step],
                }))
            }
        }
    }
}
