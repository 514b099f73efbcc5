//! Typing rules: (ax), (symb), (var), (weak), (prod), (abs), (app), (conv).

use thiserror::Error;

use crate::rewrite::{convertible, normalize, FuelBudget, RewriteError};
use crate::signature::Signature;
use crate::term::{Environment, NameSupply, Sort, Term};

#[derive(Clone, Debug, Error)]
pub enum TypeError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("symbol {0} is not visible here (it must be smaller than the symbol being checked)")]
    NotVisible(String),
    #[error("the sort [] has no type")]
    BoxHasNoType,
    #[error("{term} has type {ty}, which is not a sort")]
    NotASort { term: String, ty: String },
    #[error("{term} has type {ty}, which is not a product and cannot be applied")]
    NotAProduct { term: String, ty: String },
    #[error("{term} has type {found} but {expected} was expected")]
    Mismatch { term: String, expected: String, found: String },
    #[error("abstraction body {0} has type [], which cannot be abstracted")]
    KindBody(String),
    #[error("ill-scoped bound variable")]
    IllScoped,
    #[error(transparent)]
    Fuel(#[from] RewriteError),
}

impl TypeError {
    pub fn is_fuel(&self) -> bool {
        matches!(self, TypeError::Fuel(_))
    }
}

/// Typing context: signature, fuel for conversion, and an optional
/// restriction of the visible symbols.
#[derive(Clone, Copy)]
pub struct Typer<'a> {
    pub sig: &'a Signature,
    pub fuel: FuelBudget,
    pub visible: Option<&'a dyn Fn(&str) -> bool>,
}

impl<'a> Typer<'a> {
    pub fn new(sig: &'a Signature) -> Typer<'a> {
        Typer { sig, fuel: FuelBudget::default(), visible: None }
    }

    pub fn with_fuel(mut self, fuel: FuelBudget) -> Typer<'a> {
        self.fuel = fuel;
        self
    }

    pub fn restricted(mut self, visible: &'a dyn Fn(&str) -> bool) -> Typer<'a> {
        self.visible = Some(visible);
        self
    }

    pub fn infer(&self, env: &Environment, t: &Term) -> Result<Term, TypeError> {
        let mut env = env.clone();
        self.infer_in(&mut env, t)
    }

    pub fn check(&self, env: &Environment, t: &Term, ty: &Term) -> Result<(), TypeError> {
        let mut env = env.clone();
        if *ty != Term::kind_box() {
            self.infer_sort(&mut env, ty)?;
        }
        let found = self.infer_in(&mut env, t)?;
        self.expect_conv(t, &found, ty)
    }

    /// Sort of a well-sorted type.
    pub fn sort_of_type(&self, env: &Environment, ty: &Term) -> Result<Sort, TypeError> {
        let mut env = env.clone();
        self.infer_sort(&mut env, ty)
    }

    /// Every binding type is well-sorted in its prefix.
    pub fn check_env(&self, env: &Environment) -> Result<(), (usize, TypeError)> {
        let mut prefix = Environment::new();
        for (i, (x, ty)) in env.bindings().iter().enumerate() {
            self.infer_sort(&mut prefix, ty).map_err(|e| (i, e))?;
            prefix.push(x.clone(), ty.clone());
        }
        Ok(())
    }

    pub fn convertible(&self, a: &Term, b: &Term) -> Result<bool, TypeError> {
        Ok(convertible(a, b, self.sig, self.fuel)?)
    }

    fn expect_conv(&self, t: &Term, found: &Term, expected: &Term) -> Result<(), TypeError> {
        if found == expected {
            return Ok(());
        }
        if *expected == Term::kind_box() || *found == Term::kind_box() {
            return Err(mismatch(t, expected, found));
        }
        if convertible(found, expected, self.sig, self.fuel)? {
            Ok(())
        } else {
            Err(mismatch(t, expected, found))
        }
    }

    fn infer_sort(&self, env: &mut Environment, ty: &Term) -> Result<Sort, TypeError> {
        let k = self.infer_in(env, ty)?;
        if let Term::Sort(s) = k {
            return Ok(s);
        }
        match normalize(&k, self.sig, self.fuel)? {
            Term::Sort(s) => Ok(s),
            _ => Err(TypeError::NotASort { term: ty.to_string(), ty: k.to_string() }),
        }
    }

    fn fresh(&self, env: &Environment, hint: &str, sort: Sort, body: &Term) -> crate::term::Var {
        let mut names = NameSupply::new();
        names.avoid_env(env);
        names.avoid_term(body);
        names.fresh_var(hint, sort)
    }

    fn infer_in(&self, env: &mut Environment, t: &Term) -> Result<Term, TypeError> {
        match t {
            Term::Sort(Sort::Star) => Ok(Term::kind_box()),
            Term::Sort(Sort::Box) => Err(TypeError::BoxHasNoType),
            Term::Bound(_) => Err(TypeError::IllScoped),
            Term::Var(x) => env.lookup(&x.name).cloned().ok_or_else(|| TypeError::Unbound(x.name.to_string())),
            Term::Sym(f) => {
                if let Some(vis) = self.visible {
                    if !vis(f) {
                        return Err(TypeError::NotVisible(f.to_string()));
                    }
                }
                self.sig.get(f).map(|d| d.ty.clone()).ok_or_else(|| TypeError::UnknownSymbol(f.to_string()))
            }
            Term::Prod(b, dom, cod) => {
                self.infer_sort(env, dom)?;
                let x = self.fresh(env, &b.name, Sort::of_annotation(dom), cod);
                let body = cod.open(&x);
                env.push(x, (**dom).clone());
                let s = self.infer_sort(env, &body);
                env.pop();
                Ok(Term::Sort(s?))
            }
            Term::Abs(b, dom, body) => {
                self.infer_sort(env, dom)?;
                let x = self.fresh(env, &b.name, Sort::of_annotation(dom), body);
                let opened = body.open(&x);
                env.push(x.clone(), (**dom).clone());
                let res = (|| {
                    let ty = self.infer_in(env, &opened)?;
                    if ty == Term::kind_box() {
                        return Err(TypeError::KindBody(opened.to_string()));
                    }
                    self.infer_sort(env, &ty)?;
                    Ok(ty)
                })();
                env.pop();
                let ty = res?;
                Ok(Term::prod(&x, (**dom).clone(), &ty))
            }
            Term::App(f, a) => {
                let fty = self.infer_in(env, f)?;
                let prod = match fty {
                    Term::Prod(..) => fty,
                    other => match normalize(&other, self.sig, self.fuel)? {
                        p @ Term::Prod(..) => p,
                        _ => {
                            return Err(TypeError::NotAProduct { term: f.to_string(), ty: other.to_string() })
                        }
                    },
                };
                let Term::Prod(_, dom, cod) = &prod else { unreachable!() };
                let aty = self.infer_in(env, a)?;
                self.expect_conv(a, &aty, dom)?;
                Ok(cod.instantiate(a))
            }
        }
    }
}

fn mismatch(t: &Term, expected: &Term, found: &Term) -> TypeError {
    TypeError::Mismatch { term: t.to_string(), expected: expected.to_string(), found: found.to_string() }
}

/// Convenience: infer under the whole signature with default fuel.
pub fn infer(env: &Environment, t: &Term, sig: &Signature) -> Result<Term, TypeError> {
    Typer::new(sig).infer(env, t)
}

/// Convenience: check under the whole signature with default fuel.
pub fn check(env: &Environment, t: &Term, ty: &Term, sig: &Signature) -> Result<(), TypeError> {
    Typer::new(sig).check(env, t, ty)
}
