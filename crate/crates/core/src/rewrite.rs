//! Matching, βR-reduction, fuel-bounded normalization and conversion.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::position::Position;
use crate::signature::{RewriteRule, Signature};
use crate::term::{Substitution, Term};

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Upper bound on reduction steps for one call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FuelBudget {
    pub max_steps: u64,
}

impl FuelBudget {
    pub fn new(max_steps: u64) -> FuelBudget {
        FuelBudget { max_steps: max_steps.max(1) }
    }
}

impl Default for FuelBudget {
    fn default() -> FuelBudget {
        FuelBudget { max_steps: DEFAULT_FUEL }
    }
}

#[derive(Clone, Debug, Error)]
pub enum RewriteError {
    #[error("fuel exhausted after {steps} steps (possible non-termination)")]
    FuelExhausted { steps: u64, partial: Term },
}

/// What fired at a reduction step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Redex {
    Beta,
    Rule(String),
}

impl std::fmt::Display for Redex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Redex::Beta => f.write_str("beta"),
            Redex::Rule(r) => f.write_str(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub position: Position,
    pub redex: Redex,
}

/// Syntactic matching of an algebraic pattern; repeated pattern variables
/// require α-equal subterms.
pub fn match_lhs(lhs: &Term, t: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    let mut bound = HashMap::new();
    if match_into(lhs, t, &mut bound) {
        for (x, u) in bound {
            sigma.insert(x, u);
        }
        Some(sigma)
    } else {
        None
    }
}

fn match_into(p: &Term, t: &Term, bound: &mut HashMap<Arc<str>, Term>) -> bool {
    match p {
        Term::Var(v) => match bound.get(&v.name) {
            Some(u) => u == t,
            None => {
                bound.insert(v.name.clone(), t.clone());
                true
            }
        },
        Term::Sym(f) => matches!(t, Term::Sym(g) if f == g),
        Term::App(pf, pa) => match t {
            Term::App(tf, ta) => match_into(pf, tf, bound) && match_into(pa, ta, bound),
            _ => false,
        },
        _ => p == t,
    }
}

fn match_args(rule: &RewriteRule, args: &[&Term]) -> Option<Substitution> {
    let mut bound = HashMap::new();
    for (p, t) in rule.lhs_args.iter().zip(args) {
        if !match_into(p, t, &mut bound) {
            return None;
        }
    }
    Some(bound.into_iter().collect())
}

/// Contract the outermost redex on the application spine of `t`, if any.
/// Returns the new term, the spine position (relative to `t`) and what fired.
pub fn head_step(t: &Term, sig: &Signature) -> Option<(Term, Position, Redex)> {
    let (head, args) = t.spine();
    let n = args.len();
    match head {
        Term::Abs(_, _, body) if n > 0 => {
            let reduced = body.instantiate(args[0]);
            let out = Term::apps(reduced, args[1..].iter().map(|a| (*a).clone()));
            Some((out, Position::ones(n - 1), Redex::Beta))
        }
        Term::Sym(f) => {
            let mut best: Option<&RewriteRule> = None;
            for r in sig.rules_of(f) {
                let k = r.lhs_args.len();
                if k <= n && best.is_none_or(|b| k > b.lhs_args.len()) && match_args(r, &args[..k]).is_some() {
                    best = Some(r);
                }
            }
            let r = best?;
            let k = r.lhs_args.len();
            let sigma = match_args(r, &args[..k])?;
            let out = Term::apps(r.rhs.subst(&sigma), args[k..].iter().map(|a| (*a).clone()));
            Some((out, Position::ones(n - k), Redex::Rule(r.name.clone())))
        }
        _ => None,
    }
}

/// Whether contraction at the spine root can never become possible by
/// reducing strict subterms.
fn rigid(t: &Term, sig: &Signature) -> bool {
    let (head, args) = t.spine();
    match head {
        Term::Sym(f) => sig.min_rule_arity(f).is_none_or(|k| k > args.len()),
        Term::Abs(..) => args.is_empty(),
        _ => true,
    }
}

/// One leftmost-outermost β or R step, with its position.
pub fn step_traced(t: &Term, sig: &Signature) -> Option<(Term, TraceStep)> {
    let mut r = Reducer::new(sig, u64::MAX, false);
    let mut pos = Vec::new();
    r.lo_step(t, &mut pos)
}

/// One leftmost-outermost step; `None` iff `t` is in normal form.
pub fn step(t: &Term, sig: &Signature) -> Option<Term> {
    step_traced(t, sig).map(|(u, _)| u)
}

/// Every one-step reduct of `t`, at every position.
pub fn all_reducts(t: &Term, sig: &Signature) -> Vec<(Position, Redex, Term)> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    collect_reducts(t, t, sig, &mut path, &mut out);
    out
}

fn collect_reducts(
    root: &Term,
    t: &Term,
    sig: &Signature,
    path: &mut Vec<u32>,
    out: &mut Vec<(Position, Redex, Term)>,
) {
    let here = Position::from(path.clone());
    if let Term::App(f, a) = t {
        if let Term::Abs(_, _, body) = &**f {
            let u = body.instantiate(a);
            out.push((here.clone(), Redex::Beta, root.replace_at(&here, u).expect("valid position")));
        }
    }
    let (head, args) = t.spine();
    if let Term::Sym(f) = head {
        for r in sig.rules_of(f) {
            if r.lhs_args.len() == args.len() {
                if let Some(sigma) = match_args(r, &args) {
                    let u = r.rhs.subst(&sigma);
                    out.push((here.clone(), Redex::Rule(r.name.clone()), root.replace_at(&here, u).expect("valid")));
                }
            }
        }
    }
    for k in 1..=2 {
        if let Some(c) = t.child(k) {
            path.push(k);
            collect_reducts(root, c, sig, path, out);
            path.pop();
        }
    }
}

/// Fuel-bounded leftmost-outermost normalization.
pub fn normalize(t: &Term, sig: &Signature, fuel: FuelBudget) -> Result<Term, RewriteError> {
    let mut r = Reducer::new(sig, fuel.max_steps, false);
    r.normalize(t)
}

/// Normalization recording every step.
pub fn normalize_traced(
    t: &Term,
    sig: &Signature,
    fuel: FuelBudget,
) -> (Result<Term, RewriteError>, Vec<TraceStep>) {
    let mut r = Reducer::new(sig, fuel.max_steps, true);
    let res = r.normalize(t);
    (res, r.trace)
}

/// Number of steps leftmost-outermost normalization takes.
pub fn count_steps(t: &Term, sig: &Signature, fuel: FuelBudget) -> Result<u64, RewriteError> {
    let mut r = Reducer::new(sig, fuel.max_steps, false);
    r.normalize(t)?;
    Ok(r.steps)
}

/// `normalize(t) =α normalize(u)`.
pub fn convertible(t: &Term, u: &Term, sig: &Signature, fuel: FuelBudget) -> Result<bool, RewriteError> {
    if t == u {
        return Ok(true);
    }
    let nt = normalize(t, sig, fuel)?;
    let nu = normalize(u, sig, fuel)?;
    Ok(nt == nu)
}

struct Reducer<'a> {
    sig: &'a Signature,
    max: u64,
    steps: u64,
    tracing: bool,
    trace: Vec<TraceStep>,
    /// Subterms known to be in normal form, kept alive by the stored Arc.
    normal: HashMap<*const Term, Arc<Term>>,
}

impl<'a> Reducer<'a> {
    fn new(sig: &'a Signature, max: u64, tracing: bool) -> Reducer<'a> {
        Reducer { sig, max, steps: 0, tracing, trace: Vec::new(), normal: HashMap::new() }
    }

    fn tick(&mut self, partial: &Term, pos: &[u32], rel: &Position, redex: Redex) -> Result<(), RewriteError> {
        if self.steps >= self.max {
            return Err(RewriteError::FuelExhausted { steps: self.steps, partial: partial.clone() });
        }
        self.steps += 1;
        if self.tracing {
            let position = Position::from(pos.to_vec()).concat(rel);
            self.trace.push(TraceStep { position, redex });
        }
        Ok(())
    }

    fn normalize(&mut self, t: &Term) -> Result<Term, RewriteError> {
        let mut pos = Vec::new();
        self.nf(t.clone(), &mut pos)
    }

    fn nf(&mut self, mut t: Term, pos: &mut Vec<u32>) -> Result<Term, RewriteError> {
        loop {
            if let Some((u, rel, redex)) = head_step(&t, self.sig) {
                self.tick(&t, pos, &rel, redex)?;
                t = u;
                continue;
            }
            if rigid(&t, self.sig) {
                return self.nf_children(t, pos);
            }
            match self.lo_step_inside(&t, pos) {
                Some((u, s)) => {
                    self.tick(&t, &[], &s.position, s.redex)?;
                    t = u;
                }
                None => return Ok(t),
            }
        }
    }

    fn nf_children(&mut self, t: Term, pos: &mut Vec<u32>) -> Result<Term, RewriteError> {
        Ok(match t {
            Term::Abs(b, ty, body) => {
                let ty = self.nf_at(&ty, pos, 1)?;
                let body = self.nf_at(&body, pos, 2)?;
                Term::Abs(b, ty, body)
            }
            Term::Prod(b, ty, body) => {
                let ty = self.nf_at(&ty, pos, 1)?;
                let body = self.nf_at(&body, pos, 2)?;
                Term::Prod(b, ty, body)
            }
            Term::App(f, a) => {
                let f2 = self.nf_at(&f, pos, 1)?;
                let a2 = self.nf_at(&a, pos, 2)?;
                Term::App(f2, a2)
            }
            other => other,
        })
    }

    fn nf_at(&mut self, t: &Arc<Term>, pos: &mut Vec<u32>, k: u32) -> Result<Arc<Term>, RewriteError> {
        if self.normal.contains_key(&Arc::as_ptr(t)) {
            return Ok(t.clone());
        }
        pos.push(k);
        let r = self.nf((**t).clone(), pos);
        pos.pop();
        let r = Arc::new(r?);
        self.normal.insert(Arc::as_ptr(&r), r.clone());
        Ok(r)
    }

    /// One step strictly below the spine root, leftmost-outermost. The
    /// returned position is absolute.
    fn lo_step_inside(&mut self, t: &Term, pos: &mut Vec<u32>) -> Option<(Term, TraceStep)> {
        match t {
            Term::App(f, a) => {
                // the function side holds the spine; its own head was
                // already tried by the caller, so descend into it as a
                // non-root node
                pos.push(1);
                let r = self.lo_step_inside(f, pos);
                pos.pop();
                if let Some((f2, s)) = r {
                    return Some((Term::App(Arc::new(f2), a.clone()), s));
                }
                pos.push(2);
                let r = self.lo_step_arc(a, pos);
                pos.pop();
                r.map(|(a2, s)| (Term::App(f.clone(), a2), s))
            }
            Term::Abs(..) | Term::Prod(..) => {
                let (b, ty, body, is_abs) = match t {
                    Term::Abs(b, ty, body) => (b, ty, body, true),
                    Term::Prod(b, ty, body) => (b, ty, body, false),
                    _ => unreachable!(),
                };
                let mk = |b: &crate::term::Binder, x: Arc<Term>, y: Arc<Term>| {
                    if is_abs {
                        Term::Abs(b.clone(), x, y)
                    } else {
                        Term::Prod(b.clone(), x, y)
                    }
                };
                pos.push(1);
                let r = self.lo_step_arc(ty, pos);
                pos.pop();
                if let Some((ty2, s)) = r {
                    return Some((mk(b, ty2, body.clone()), s));
                }
                pos.push(2);
                let r = self.lo_step_arc(body, pos);
                pos.pop();
                r.map(|(body2, s)| (mk(b, ty.clone(), body2), s))
            }
            _ => None,
        }
    }

    fn lo_step_arc(&mut self, t: &Arc<Term>, pos: &mut Vec<u32>) -> Option<(Arc<Term>, TraceStep)> {
        if self.normal.contains_key(&Arc::as_ptr(t)) {
            return None;
        }
        match self.lo_step(t, pos) {
            Some((u, s)) => Some((Arc::new(u), s)),
            None => {
                self.normal.insert(Arc::as_ptr(t), t.clone());
                None
            }
        }
    }

    fn lo_step(&mut self, t: &Term, pos: &mut Vec<u32>) -> Option<(Term, TraceStep)> {
        if let Some((u, rel, redex)) = head_step(t, self.sig) {
            let position = Position::from(pos.clone()).concat(&rel);
            return Some((u, TraceStep { position, redex }));
        }
        self.lo_step_inside(t, pos)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::SymbolDecl;
    use crate::term::Var;

    fn s(t: Term) -> Term {
        Term::app(Term::sym("s"), t)
    }
    fn zero() -> Term {
        Term::sym("0")
    }
    fn plus(a: Term, b: Term) -> Term {
        Term::apps(Term::sym("plus"), [a, b])
    }

    fn nat_sig() -> Signature {
        let nat = Term::sym("nat");
        let mut sig = Signature::new();
        sig.add_symbol(SymbolDecl::new("nat", Term::star()));
        sig.add_symbol(SymbolDecl::new("0", nat.clone()));
        sig.add_symbol(SymbolDecl::new("s", Term::arrow(nat.clone(), nat.clone())));
        sig.add_symbol(SymbolDecl::new("plus", Term::arrow(nat.clone(), Term::arrow(nat.clone(), nat))));
        let x = Var::object("x");
        let y = Var::object("y");
        sig.add_rule(RewriteRule::new("plus/1", "plus", vec![x.term(), zero()], x.term()));
        sig.add_rule(RewriteRule::new(
            "plus/2",
            "plus",
            vec![x.term(), s(y.term())],
            s(plus(x.term(), y.term())),
        ));
        sig
    }

    #[test]
    fn matching_binds_pattern_variables() {
        let x = Var::object("x");
        let sigma = match_lhs(&plus(x.term(), zero()), &plus(s(zero()), zero())).unwrap();
        assert_eq!(sigma.get("x"), Some(&s(zero())));
        assert!(match_lhs(&plus(x.term(), zero()), &plus(zero(), s(zero()))).is_none());
    }

    #[test]
    fn non_linear_matching_uses_alpha_equality() {
        let x = Var::object("x");
        let p = Term::apps(Term::sym("eq"), [x.term(), x.term()]);
        assert!(match_lhs(&p, &Term::apps(Term::sym("eq"), [zero(), zero()])).is_some());
        assert!(match_lhs(&p, &Term::apps(Term::sym("eq"), [zero(), s(zero())])).is_none());
    }

    #[test]
    fn one_step_is_leftmost_outermost() {
        let sig = nat_sig();
        let t = plus(s(zero()), s(zero()));
        assert_eq!(step(&t, &sig), Some(s(plus(s(zero()), zero()))));
        assert_eq!(step(&zero(), &sig), None);
        let x = Var::object("x");
        let beta = Term::app(Term::abs(&x, Term::sym("nat"), &x.term()), zero());
        assert_eq!(step(&beta, &sig), Some(zero()));
    }

    #[test]
    fn normalize_counts_rule_steps() {
        let sig = nat_sig();
        let t = plus(s(zero()), s(zero()));
        assert_eq!(normalize(&t, &sig, FuelBudget::default()).unwrap(), s(s(zero())));
        assert_eq!(count_steps(&t, &sig, FuelBudget::default()).unwrap(), 2);
    }

    #[test]
    fn trace_records_positions() {
        let sig = nat_sig();
        let t = plus(s(zero()), s(zero()));
        let (res, trace) = normalize_traced(&t, &sig, FuelBudget::default());
        assert_eq!(res.unwrap(), s(s(zero())));
        let shown: Vec<String> = trace.iter().map(|s| format!("{} {}", s.position, s.redex)).collect();
        assert_eq!(shown, vec!["ε plus/2", "2 plus/1"]);
    }

    #[test]
    fn fuel_exhaustion_is_reported() {
        let mut sig = nat_sig();
        sig.add_symbol(SymbolDecl::new("loop", Term::sym("nat")));
        sig.add_rule(RewriteRule::new("loop/1", "loop", vec![], s(Term::sym("loop"))));
        let err = normalize(&Term::sym("loop"), &sig, FuelBudget::new(10)).unwrap_err();
        let RewriteError::FuelExhausted { steps, .. } = err;
        assert_eq!(steps, 10);
    }

    #[test]
    fn conversion_by_normal_forms() {
        let sig = nat_sig();
        let two = s(s(zero()));
        let four = s(s(two.clone()));
        let p = |t| Term::app(Term::sym("P"), t);
        assert!(convertible(&p(plus(two.clone(), two)), &p(four), &sig, FuelBudget::default()).unwrap());
        let nat = Term::sym("nat");
        assert!(!convertible(&nat, &Term::arrow(nat.clone(), nat.clone()), &sig, FuelBudget::default()).unwrap());
    }

    #[test]
    fn all_reducts_finds_inner_redexes() {
        let sig = nat_sig();
        let t = plus(plus(zero(), zero()), s(zero()));
        let reducts = all_reducts(&t, &sig);
        assert_eq!(reducts.len(), 2);
        assert!(reducts.iter().any(|(p, _, _)| p.is_root()));
        assert!(reducts.iter().any(|(p, _, _)| p.to_string() == "1.2"));
    }
}
