//! Parameters, strict positivity, canonical weak and strong recursors,
//! pre-recursor shape, recursor positivity, canonical-pattern admission
//! and the structural-decrease check.

use std::collections::{BTreeSet, HashMap};

use crate::diagnostic::{Code, Diagnostic};
use crate::position::Position;
use crate::positivity::{
    base_signed_positions, check_safe, check_small, equivalent_predicates, signed_positions, Polarity,
};
use crate::signature::{InterpClass, Origin, RecursorKind, RewriteRule, Signature, SymbolDecl};
use crate::term::{Environment, Name, NameSupply, Sort, Substitution, Term, Var};

/// Which motive the recursor eliminates into.
#[derive(Clone, Debug)]
pub enum RecursorTarget {
    /// `P : (z⃗:V⃗)C q⃗ z⃗ ⇒ ⋆` is an argument.
    Weak,
    /// A closed motive `[q⃗:Q⃗][z⃗:V⃗][z:C q⃗ z⃗]K` with `K` a kind.
    Strong(Term),
}

/// How branch arguments are laid out in the branch types.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchLayout {
    /// `(x⃗:T⃗)(x⃗′:T⃗′)`, one copy per argument.
    Grouped,
    /// `(x₁:T₁)(x₁′:T₁′)…`, induction hypotheses only for recursive
    /// arguments, each right after its argument.
    Interleaved,
}

#[derive(Clone, Debug)]
pub struct RecArg {
    /// `α⃗:W⃗`
    pub alphas: Vec<(Var, Term)>,
    /// Index arguments `w⃗` of the recursive occurrence.
    pub w: Vec<Term>,
}

#[derive(Clone, Debug)]
pub struct ConstructorInfo {
    pub name: Name,
    /// Arguments after the parameters.
    pub args: Vec<(Var, Term)>,
    /// Output index arguments `v⃗`.
    pub v: Vec<Term>,
    pub recursive: Vec<Option<RecArg>>,
}

/// A strictly positive type split into parameters, indices and
/// constructors, every telescope opened with names from one supply.
#[derive(Clone, Debug)]
pub struct InductiveShape {
    pub target: Name,
    pub params: Vec<(Var, Term)>,
    pub indices: Vec<(Var, Term)>,
    pub constructors: Vec<ConstructorInfo>,
    names: NameSupply,
}

#[derive(Clone, Debug)]
pub struct GeneratedRecursor {
    pub decl: SymbolDecl,
    pub rules: Vec<RewriteRule>,
}

fn supply_for(sig: &Signature) -> NameSupply {
    let mut names = NameSupply::new();
    for d in sig.decls() {
        names.avoid(&d.name);
    }
    names
}

/// Instantiate the first binders of `ty` with `vars`, requiring their
/// domains to equal `expected`.
fn instantiate_prefix(ty: &Term, expected: &[(Var, Term)]) -> Option<Term> {
    let mut t = ty.clone();
    for (q, qty) in expected {
        let Term::Prod(_, dom, body) = &t else { return None };
        if **dom != *qty {
            return None;
        }
        t = body.instantiate(&q.term());
    }
    Some(t)
}

/// Longest parameter prefix shared by `c`'s type and all its constant
/// constructors.
pub fn infer_parameters(c: &str, sig: &Signature) -> usize {
    let Some(decl) = sig.get(c) else { return 0 };
    let mut names = supply_for(sig);
    let (tel, _) = decl.ty.open_telescope(&mut names);
    let equivs = equivalent_predicates(c, sig);
    let cons: Vec<&SymbolDecl> = sig.constant_constructors_of(c).into_iter().filter(|d| &*d.name != c).collect();
    (0..=tel.len())
        .rev()
        .find(|&k| {
            let q = &tel[..k];
            cons.iter().all(|d| parameters_fit(d, c, q, &equivs, &mut names.clone()))
        })
        .unwrap_or(0)
}

fn parameters_fit(d: &SymbolDecl, c: &str, q: &[(Var, Term)], equivs: &[Name], names: &mut NameSupply) -> bool {
    let Some(rest) = instantiate_prefix(&d.ty, q) else { return false };
    let (args, out) = rest.open_telescope(names);
    let starts_with_q = |t: &Term| {
        let (h, a) = t.spine();
        h.as_sym().is_some_and(|h| &**h == c)
            && a.len() >= q.len()
            && a.iter().zip(q).all(|(x, (v, _))| x.as_var() == Some(v))
    };
    if !starts_with_q(&out) {
        return false;
    }
    args.iter().all(|(_, tj)| {
        if !equivs.iter().any(|e| tj.occurs_sym(e)) {
            return true;
        }
        let (_, inner) = tj.open_telescope(&mut names.clone());
        starts_with_q(&inner)
    })
}

/// Split `c` with `n_params` parameters; reports every argument type that
/// is neither free of `D ≃ C` nor of the form `(α⃗:W⃗)C q⃗ w⃗`.
pub fn analyze_inductive(c: &str, n_params: usize, sig: &Signature) -> Result<InductiveShape, Vec<Diagnostic>> {
    let Some(decl) = sig.get(c) else {
        return Err(vec![Diagnostic::error(Code::InductiveShape, format!("unknown type {c}"))]);
    };
    let mut names = supply_for(sig);
    let (tel, out) = decl.ty.open_telescope(&mut names);
    if out != Term::star() || n_params > tel.len() {
        return Err(vec![Diagnostic::error(
            Code::InductiveShape,
            format!("{c} must have a type of the form (z⃗:V⃗)*"),
        )
        .symbol(c)]);
    }
    let params = tel[..n_params].to_vec();
    let indices = tel[n_params..].to_vec();
    let equivs = equivalent_predicates(c, sig);
    let constants: Vec<&Name> = equivs.iter().filter(|e| sig.is_constant_predicate(e)).collect();
    let defined: Vec<&Name> = equivs.iter().filter(|e| sig.is_defined_predicate(e)).collect();
    let mut errors = Vec::new();
    let mut constructors = Vec::new();
    for d in sig.constant_constructors_of(c) {
        if &*d.name == c {
            continue;
        }
        let Some(rest) = instantiate_prefix(&d.ty, &params) else {
            errors.push(
                Diagnostic::error(Code::InductiveShape, format!("{} does not start with the parameters of {c}", d.name))
                    .symbol(&d.name),
            );
            continue;
        };
        let (args, out) = rest.open_telescope(&mut names);
        let (_, oargs) = out.spine();
        let v: Vec<Term> = oargs[n_params.min(oargs.len())..].iter().map(|t| (*t).clone()).collect();
        let mut recursive = Vec::new();
        for (j, (_, tj)) in args.iter().enumerate() {
            let at = Position::from(vec![2; n_params + j]).child(1);
            let hits: Vec<(&Name, BTreeSet<Position>)> =
                constants.iter().map(|e| (*e, tj.positions_of_sym(e))).filter(|(_, p)| !p.is_empty()).collect();
            if hits.is_empty() {
                for f in &defined {
                    let occ = tj.positions_of_sym(f);
                    let sp = signed_positions(tj, Polarity::Pos, sig);
                    if let Some(p) = sp.first_outside(&occ, Polarity::Pos) {
                        errors.push(
                            Diagnostic::error(
                                Code::NotStrictlyPositive,
                                format!("{f}, defined together with {c}, occurs non-positively in argument {} of {}", n_params + j + 1, d.name),
                            )
                            .symbol(&d.name)
                            .at(at.concat(&p)),
                        );
                    }
                }
                recursive.push(None);
                continue;
            }
            let mut sub = names.clone();
            let (alphas, inner) = tj.open_telescope(&mut sub);
            let (h, iargs) = inner.spine();
            let bad_alpha = alphas.iter().enumerate().find_map(|(k, (_, w))| {
                equivs.iter().find_map(|e| w.positions_of_sym(e).into_iter().next().map(|p| (k, p)))
            });
            let head_ok = h.as_sym().is_some_and(|h| &**h == c);
            let q_ok = iargs.len() == tel.len()
                && iargs.iter().zip(&params).all(|(x, (q, _))| x.as_var() == Some(q))
                && iargs.iter().all(|w| !equivs.iter().any(|e| w.occurs_sym(e)));
            if let Some((k, p)) = bad_alpha {
                let pos = at.concat(&Position::from(vec![2; k]).child(1)).concat(&p);
                errors.push(
                    Diagnostic::error(
                        Code::NotStrictlyPositive,
                        format!("{c} occurs in the domain of argument {} of {}: {tj}", n_params + j + 1, d.name),
                    )
                    .symbol(&d.name)
                    .at(pos),
                );
            } else if !head_ok || !q_ok {
                let p = hits[0].1.iter().next().cloned().unwrap_or_default();
                errors.push(
                    Diagnostic::error(
                        Code::NotStrictlyPositive,
                        format!(
                            "argument {} of {} has type {tj}, which mentions {} but is not of the form (α⃗:W⃗){c} q⃗ w⃗",
                            n_params + j + 1,
                            d.name,
                            hits[0].0
                        ),
                    )
                    .symbol(&d.name)
                    .at(at.concat(&p)),
                );
            } else {
                let w = iargs[n_params..].iter().map(|t| (*t).clone()).collect();
                names = sub;
                recursive.push(Some(RecArg { alphas, w }));
                continue;
            }
            recursive.push(None);
        }
        constructors.push(ConstructorInfo { name: d.name.clone(), args, v, recursive });
    }
    if errors.is_empty() {
        Ok(InductiveShape { target: Name::from(c), params, indices, constructors, names })
    } else {
        Err(errors)
    }
}

/// Strict positivity of every constant constructor of `c`.
pub fn check_strictly_positive(c: &str, sig: &Signature) -> Vec<Diagnostic> {
    let k = infer_parameters(c, sig);
    match analyze_inductive(c, k, sig) {
        Ok(_) => Vec::new(),
        Err(e) => e,
    }
}

fn var_terms(tel: &[(Var, Term)]) -> Vec<Term> {
    tel.iter().map(|(v, _)| v.term()).collect()
}

/// Apply a motive `[q⃗][z⃗][z]K` to arguments.
fn apply_motive(motive: &Term, args: &[Term]) -> Option<Term> {
    let mut t = motive.clone();
    for a in args {
        let Term::Abs(_, _, body) = &t else { return None };
        t = body.instantiate(a);
    }
    Some(t)
}

/// Canonical recursor named `name` for the analyzed type.
pub fn gen_recursor(
    shape: &InductiveShape,
    target: &RecursorTarget,
    layout: BranchLayout,
    name: &str,
) -> Result<GeneratedRecursor, Vec<Diagnostic>> {
    let c = &shape.target;
    let mut names = shape.names.clone();
    names.avoid(name);
    let q = var_terms(&shape.params);
    let zs = var_terms(&shape.indices);
    let c_q = |w: &[Term]| Term::apps(Term::Sym(c.clone()), q.iter().chain(w).cloned());
    let z = names.fresh_var("z", Sort::Star);
    let rec = Term::sym(name);

    let (pvar, motive) = match target {
        RecursorTarget::Weak => {
            let p = names.fresh_var("P", Sort::Box);
            let pty = Term::prods(&shape.indices, Term::arrow(c_q(&zs), Term::star()));
            (Some((p, pty)), None)
        }
        RecursorTarget::Strong(m) => {
            let n = shape.params.len() + shape.indices.len() + 1;
            let mut probe = m.clone();
            let mut doms = Vec::new();
            let mut vals: Vec<Term> = Vec::new();
            for _ in 0..n {
                let Term::Abs(_, dom, body) = &probe else {
                    return Err(vec![motive_error(c, m, "too few abstractions")]);
                };
                doms.push((**dom).clone());
                let k = vals.len();
                let v = if k < q.len() {
                    q[k].clone()
                } else if k < q.len() + zs.len() {
                    zs[k - q.len()].clone()
                } else {
                    z.term()
                };
                vals.push(v.clone());
                probe = body.instantiate(&v);
            }
            let expected: Vec<Term> = shape
                .params
                .iter()
                .chain(&shape.indices)
                .map(|(_, t)| t.clone())
                .chain([c_q(&zs)])
                .collect();
            if doms != expected {
                return Err(vec![motive_error(c, m, "its abstractions do not match the parameters, indices and scrutinee")]);
            }
            if !probe.is_kind() {
                return Err(vec![motive_error(c, m, "its body is not a kind")]);
            }
            (None, Some(m.clone()))
        }
    };
    let result_at = |w: &[Term], scrut: Term| -> Term {
        match (&pvar, &motive) {
            (Some((p, _)), _) => Term::apps(p.term(), w.iter().cloned().chain([scrut])),
            (None, Some(m)) => apply_motive(m, &q.iter().chain(w).cloned().chain([scrut]).collect::<Vec<_>>())
                .expect("checked motive"),
            _ => unreachable!(),
        }
    };

    // Branch variables first so that the recursive calls can mention them.
    let ys: Vec<Var> = (1..=shape.constructors.len())
        .map(|i| {
            let s = if motive.is_some() { Sort::Box } else { Sort::Star };
            names.fresh_var(&format!("y{i}"), s)
        })
        .collect();
    let tail = |args: Vec<Term>| -> Vec<Term> {
        let mut v = args;
        if let Some((p, _)) = &pvar {
            v.push(p.term());
        }
        v.extend(ys.iter().map(|y| y.term()));
        v
    };

    let mut branch_types = Vec::new();
    let mut rules = Vec::new();
    for (i, k) in shape.constructors.iter().enumerate() {
        let x = var_terms(&k.args);
        let mut ih_tel = Vec::new();
        let mut ih_args = Vec::new();
        let mut per_arg: Vec<Option<(Var, Term, Term)>> = Vec::new();
        for (j, (xj, _)) in k.args.iter().enumerate() {
            let hint = format!("{}'", xj.name);
            match &k.recursive[j] {
                Some(ra) => {
                    let x_alpha = Term::apps(xj.term(), var_terms(&ra.alphas));
                    let tj2 = Term::prods(&ra.alphas, result_at(&ra.w, x_alpha.clone()));
                    let s = Sort::of_annotation(&tj2);
                    let xv = names.fresh_var(&hint, s);
                    let call = Term::apps(rec.clone(), tail(q.iter().chain(&ra.w).cloned().chain([x_alpha]).collect()));
                    let tj_arg = Term::abss(&ra.alphas, call);
                    per_arg.push(Some((xv, tj2, tj_arg)));
                }
                None => per_arg.push(None),
            }
        }
        let mut tel = Vec::new();
        let mut rhs_args = Vec::new();
        match layout {
            BranchLayout::Grouped => {
                tel.extend(k.args.iter().cloned());
                rhs_args.extend(x.iter().cloned());
                for (xv, ty, arg) in per_arg.into_iter().flatten() {
                    ih_tel.push((xv, ty));
                    ih_args.push(arg);
                }
                tel.extend(ih_tel);
                rhs_args.extend(ih_args);
            }
            BranchLayout::Interleaved => {
                for (j, extra) in per_arg.into_iter().enumerate() {
                    tel.push(k.args[j].clone());
                    rhs_args.push(x[j].clone());
                    if let Some((xv, ty, arg)) = extra {
                        tel.push((xv, ty));
                        rhs_args.push(arg);
                    }
                }
            }
        }
        let c_app = Term::apps(Term::Sym(k.name.clone()), q.iter().chain(&x).cloned());
        branch_types.push(Term::prods(&tel, result_at(&k.v, c_app)));

        let q2: Vec<Var> = shape.params.iter().map(|(v, _)| names.fresh_var(&format!("{}'", v.name), v.sort)).collect();
        let pattern = Term::apps(Term::Sym(k.name.clone()), q2.iter().map(|v| v.term()).chain(x.iter().cloned()));
        let lhs_args = tail(q.iter().chain(&zs).cloned().chain([pattern]).collect());
        // The parameter slots of the recursor are instantiated by ρ with the
        // constructor's own parameters, which the rest of the rule uses.
        let theta: Substitution = shape.params.iter().zip(&q2).map(|((qv, _), v2)| (qv.name.clone(), v2.term())).collect();
        let rhs = Term::apps(ys[i].term(), rhs_args).subst(&theta);
        let mut rho = Substitution::new();
        for ((zv, _), vi) in shape.indices.iter().zip(&k.v) {
            rho.insert(zv.name.clone(), vi.subst(&theta));
        }
        for ((qv, _), v2) in shape.params.iter().zip(&q2) {
            rho.insert(qv.name.clone(), v2.term());
        }
        let mut env: Vec<(Var, Term)> = q2.iter().zip(&shape.params).map(|(v2, (_, t))| (v2.clone(), t.subst(&theta))).collect();
        env.extend(k.args.iter().map(|(v, t)| (v.clone(), t.subst(&theta))));
        if let Some((p, pty)) = &pvar {
            env.push((p.clone(), pty.subst(&theta)));
        }
        rules.push((lhs_args, rhs, env, rho, theta));
    }
    // Branch types mention earlier binders only through P and the params.
    let y_tel: Vec<(Var, Term)> = ys.iter().cloned().zip(branch_types).collect();
    let mut full: Vec<(Var, Term)> = shape.params.clone();
    full.extend(shape.indices.iter().cloned());
    full.push((z.clone(), c_q(&zs)));
    if let Some((p, pty)) = &pvar {
        full.push((p.clone(), pty.clone()));
    }
    full.extend(y_tel.iter().cloned());
    let out = result_at(&zs, z.term());
    let ty = Term::prods(&full, out);
    let mut decl = SymbolDecl::new(name, ty);
    decl.recursor_for = Some(c.clone());
    decl.recursor_kind = Some(if motive.is_some() { RecursorKind::Strong } else { RecursorKind::Weak });
    decl.origin = Origin::Generated;
    let rules = rules
        .into_iter()
        .enumerate()
        .map(|(i, (lhs_args, rhs, mut env, rho, theta))| {
            env.extend(y_tel.iter().map(|(y, t)| (y.clone(), t.subst(&theta))));
            RewriteRule::new(&format!("{name}/{}", i + 1), name, lhs_args, rhs)
                .with_env(Environment::from_bindings(env))
                .with_rho(rho)
        })
        .collect();
    Ok(GeneratedRecursor { decl, rules })
}

fn motive_error(c: &str, m: &Term, why: &str) -> Diagnostic {
    Diagnostic::error(
        Code::InductiveShape,
        format!("motive {m} for {c} must be [q⃗:Q⃗][z⃗:V⃗][z:{c} q⃗ z⃗]K with K a kind: {why}"),
    )
    .symbol(c)
}

/// Canonical weak recursor of `c` with the inferred parameters.
pub fn gen_weak_recursor(c: &str, name: &str, sig: &Signature) -> Result<GeneratedRecursor, Vec<Diagnostic>> {
    let k = infer_parameters(c, sig);
    let shape = analyze_inductive(c, k, sig)?;
    gen_recursor(&shape, &RecursorTarget::Weak, BranchLayout::Grouped, name)
}

/// Canonical strong recursor of `c` for `motive`; smallness and safeness of
/// the generated rules are preconditions.
pub fn gen_strong_recursor(
    c: &str,
    motive: &Term,
    name: &str,
    sig: &Signature,
) -> Result<GeneratedRecursor, Vec<Diagnostic>> {
    let k = infer_parameters(c, sig);
    let shape = analyze_inductive(c, k, sig)?;
    let mut errors = check_small(c, k, sig);
    let g = gen_recursor(&shape, &RecursorTarget::Strong(motive.clone()), BranchLayout::Grouped, name)?;
    for r in &g.rules {
        let lrho: Vec<Term> = r.lhs_args.iter().map(|l| l.subst(&r.rho)).collect();
        errors.extend(check_safe(&g.decl, &lrho, &r.name));
    }
    if errors.is_empty() {
        Ok(g)
    } else {
        for e in &mut errors {
            e.message = format!("strong recursor {name} for {c}: {}", e.message);
            if e.symbol.is_none() {
                e.symbol = Some(name.to_string());
            }
        }
        Err(errors)
    }
}

/// How a pre-recursor's arguments line up with `(z⃗:V⃗)(z:C z⃗)W`.
#[derive(Clone, Debug)]
pub struct PreRecursorShape {
    /// Original 0-based indices of the arguments, in canonical order.
    pub order: Vec<usize>,
    /// Number of index arguments `z⃗` (parameters included).
    pub n_indices: usize,
    /// Opened binders of τ_f in the original order.
    pub binders: Vec<(Var, Term)>,
    pub output: Term,
}

impl PreRecursorShape {
    pub fn scrutinee(&self) -> usize {
        self.order[self.n_indices]
    }

    pub fn is_identity(&self) -> bool {
        self.order.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// τ_f with its arguments in canonical order.
    pub fn permuted_type(&self) -> Term {
        let tel: Vec<(Var, Term)> = self.order.iter().map(|&i| self.binders[i].clone()).collect();
        Term::prods(&tel, self.output.clone())
    }

    /// `W`: everything after the scrutinee.
    pub fn w(&self) -> Term {
        let tel: Vec<(Var, Term)> =
            self.order[self.n_indices + 1..].iter().map(|&i| self.binders[i].clone()).collect();
        Term::prods(&tel, self.output.clone())
    }

    pub fn index_vars(&self) -> Vec<Var> {
        self.order[..self.n_indices].iter().map(|&i| self.binders[i].0.clone()).collect()
    }

    /// Reorder the arguments of every full application of `f` in `t`.
    pub fn permute_calls(&self, f: &str, t: &Term) -> Option<Term> {
        let n = self.binders.len();
        let (h, args) = t.spine();
        let args: Vec<Term> = args.into_iter().map(|a| self.permute_calls(f, a)).collect::<Option<_>>()?;
        if h.as_sym().is_some_and(|h| &**h == f) {
            if args.is_empty() && !self.is_identity() {
                return None;
            }
            if args.len() < n && !self.is_identity() {
                return None;
            }
            let mut out: Vec<Term> = self.order.iter().map(|&i| args[i].clone()).collect();
            out.extend(args[n.min(args.len())..].iter().cloned());
            if args.len() < n {
                out = args;
            }
            return Some(Term::apps(h.clone(), out));
        }
        let h = match h {
            Term::Abs(b, d, body) => Term::Abs(b.clone(), self.permute_calls(f, d)?.into(), self.permute_calls(f, body)?.into()),
            Term::Prod(b, d, body) => Term::Prod(b.clone(), self.permute_calls(f, d)?.into(), self.permute_calls(f, body)?.into()),
            other => other.clone(),
        };
        Some(Term::apps(h, args))
    }
}

/// Pre-recursor conditions for `f` as a recursor of `c`. Arguments whose
/// types do not depend on each other may be permuted to reach the
/// `(z⃗:V⃗)(z:C z⃗)W` form.
pub fn check_pre_recursor(f: &str, c: &str, sig: &Signature) -> Result<PreRecursorShape, Vec<Diagnostic>> {
    let Some(decl) = sig.get(f) else {
        return Err(vec![Diagnostic::error(Code::PreRecursor, format!("unknown recursor {f}"))]);
    };
    let err = |msg: String| Diagnostic::error(Code::PreRecursor, msg).symbol(f);
    let mut names = supply_for(sig);
    let (binders, output) = decl.ty.open_telescope(&mut names);
    if output.head_sym().is_some_and(|h| sig.is_constant_predicate(h)) {
        return Err(vec![err(format!("{f} has output type {output} and is therefore a constructor, not a recursor"))]);
    }
    let c_arity = sig.get(c).map(|d| d.arity()).unwrap_or(0);
    let rules: Vec<&RewriteRule> = sig.rules_of(f).collect();
    let mut candidates = Vec::new();
    for (s, (_, ty)) in binders.iter().enumerate() {
        let (h, args) = ty.spine();
        if !h.as_sym().is_some_and(|h| &**h == c) || args.len() != c_arity {
            continue;
        }
        let vars: Option<Vec<usize>> = args
            .iter()
            .map(|a| a.as_var().and_then(|v| binders[..s].iter().position(|(b, _)| b == v)))
            .collect();
        let Some(vars) = vars else { continue };
        let distinct: BTreeSet<usize> = vars.iter().copied().collect();
        if distinct.len() != vars.len() {
            continue;
        }
        // Dependencies of the indices must be the indices themselves.
        let dep_ok = vars.iter().all(|&i| {
            binders[..s].iter().enumerate().all(|(k, (b, _))| vars.contains(&k) || !binders[i].1.occurs_var(&b.name))
        });
        let ordered = vars.windows(2).all(|w| w[0] < w[1]);
        if !dep_ok || !ordered {
            continue;
        }
        let mut order = vars.clone();
        order.push(s);
        order.extend((0..s).filter(|k| !vars.contains(k)));
        order.extend(s + 1..binders.len());
        candidates.push(PreRecursorShape { order, n_indices: vars.len(), binders: binders.clone(), output: output.clone() });
    }
    if candidates.is_empty() {
        return Err(vec![err(format!(
            "the type of {f} has no argument of type {c} z⃗ with z⃗ distinct variables bound before it; \
             put the indices first and the scrutinee right after them (arguments whose types do not depend on each other can be permuted)"
        ))]);
    }
    let matches_rules = |shape: &PreRecursorShape| {
        let s = shape.scrutinee();
        rules
            .iter()
            .all(|r| r.lhs_args.get(s).and_then(|a| a.head_sym()).is_some_and(|h| sig.is_constant(h)))
    };
    let shape = candidates.iter().find(|s| matches_rules(s)).unwrap_or(&candidates[0]).clone();

    let mut errors = Vec::new();
    let w = shape.w();
    for g in w.symbols() {
        if sig.sort_of(&g) == Some(Sort::Box) && !sig.precedence.le(&g, c) {
            errors.push(err(format!("predicate symbol {g} occurs in the type of {f} but is not smaller than {c}")));
        }
    }
    let s = shape.scrutinee();
    let idx: Vec<usize> = shape.order[..shape.n_indices].to_vec();
    for r in &rules {
        let Some(scrut) = r.lhs_args.get(s) else {
            errors.push(err(format!("rule does not match the argument {} of type {c}", s + 1)).rule(&r.name));
            continue;
        };
        match scrut.head_sym() {
            Some(h) if sig.is_constant(h) => {}
            _ => errors.push(
                err(format!("argument {} must be matched against a constant constructor, found {scrut}", s + 1))
                    .rule(&r.name),
            ),
        }
        let mut zvars = Vec::new();
        for &i in &idx {
            match r.lhs_args.get(i).and_then(|a| a.as_var()) {
                Some(v) if !zvars.contains(v) => zvars.push(v.clone()),
                _ => errors.push(err(format!("index argument {} must be a distinct variable", i + 1)).rule(&r.name)),
            }
        }
        for v in &zvars {
            if r.rhs.occurs_var(&v.name) {
                errors.push(err(format!("index variable {} occurs in the right-hand side", v.name)).rule(&r.name));
            }
        }
    }
    if errors.is_empty() {
        Ok(shape)
    } else {
        Err(errors)
    }
}

/// Positivity conditions on `W`. `extended` selects the monotone-argument
/// form, which admits defined predicates equivalent to `c` and checks the
/// indices declared monotone.
pub fn check_recursor_positivity(
    f: &str,
    c: &str,
    shape: &PreRecursorShape,
    extended: bool,
    sig: &Signature,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let w = shape.w();
    let err = |msg: String| Diagnostic::error(Code::RecursorPositivity, msg).symbol(f);
    let sp = if extended { signed_positions(&w, Polarity::Pos, sig) } else { base_signed_positions(&w, Polarity::Pos) };
    let describe = |p: &Position| match sp.sign_at(p) {
        Some(s) => format!("with sign {s}"),
        None => "without a sign".to_string(),
    };
    for g in equivalent_predicates(c, sig) {
        let occ = w.positions_of_sym(&g);
        if occ.is_empty() {
            continue;
        }
        if !extended && sig.is_defined_predicate(&g) {
            let p = occ.iter().next().cloned().unwrap_or_default();
            out.push(err(format!("defined predicate {g} equivalent to {c} occurs in {w}")).at(p));
            continue;
        }
        if let Some(p) = sp.first_outside(&occ, Polarity::Pos) {
            out.push(err(format!("{g} occurs {} at position {p} of {w}", describe(&p))).at(p));
        }
    }
    if extended {
        if let Some(cd) = sig.get(c) {
            let zs = shape.index_vars();
            for (d, set) in [(Polarity::Pos, &cd.mon_plus), (Polarity::Neg, &cd.mon_minus)] {
                for &i in set {
                    let Some(zi) = zs.get(i - 1) else { continue };
                    let occ = w.positions_of_var(&zi.name);
                    if let Some(p) = sp.first_outside(&occ, d) {
                        out.push(
                            err(format!(
                                "argument {i} of {c} is declared with sign {d} but {} occurs {} at position {p} of {w}",
                                zi.name,
                                describe(&p)
                            ))
                            .at(p),
                        );
                    }
                }
            }
        }
    }
    out
}

/// Consistent bijective renaming of free variables between two terms.
pub fn alpha_vars_match(a: &Term, b: &Term, fwd: &mut HashMap<Name, Name>, bwd: &mut HashMap<Name, Name>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            if x.sort != y.sort {
                return false;
            }
            match (fwd.get(&x.name), bwd.get(&y.name)) {
                (None, None) => {
                    fwd.insert(x.name.clone(), y.name.clone());
                    bwd.insert(y.name.clone(), x.name.clone());
                    true
                }
                (Some(y2), Some(x2)) => *y2 == y.name && *x2 == x.name,
                _ => false,
            }
        }
        (Term::Sort(s), Term::Sort(t)) => s == t,
        (Term::Bound(i), Term::Bound(j)) => i == j,
        (Term::Sym(f), Term::Sym(g)) => f == g,
        (Term::App(f, x), Term::App(g, y)) => alpha_vars_match(f, g, fwd, bwd) && alpha_vars_match(x, y, fwd, bwd),
        (Term::Abs(_, t, u), Term::Abs(_, v, w)) | (Term::Prod(_, t, u), Term::Prod(_, v, w)) => {
            alpha_vars_match(t, v, fwd, bwd) && alpha_vars_match(u, w, fwd, bwd)
        }
        _ => false,
    }
}

/// Two rules are the same up to renaming of their variables, comparing
/// `lρ` and `r`.
pub fn rules_match(a: &RewriteRule, b: &RewriteRule) -> bool {
    let la = a.lhs().subst(&a.rho);
    let lb = b.lhs().subst(&b.rho);
    let mut fwd = HashMap::new();
    let mut bwd = HashMap::new();
    alpha_vars_match(&la, &lb, &mut fwd, &mut bwd) && alpha_vars_match(&a.rhs, &b.rhs, &mut fwd, &mut bwd)
}

/// How a user-declared recursor was admitted.
#[derive(Clone, Debug)]
pub struct CanonicalMatch {
    pub n_params: usize,
    pub layout: BranchLayout,
    pub kind: RecursorKind,
}

/// Does `f`, after the pre-recursor permutation, coincide with a canonical
/// recursor of `c` (any parameter prefix, either branch layout)?
pub fn match_canonical(f: &str, c: &str, shape: &PreRecursorShape, sig: &Signature) -> Option<CanonicalMatch> {
    let decl = sig.get(f)?;
    let user_ty = shape.permuted_type();
    let user_rules: Vec<RewriteRule> = sig
        .rules_of(f)
        .map(|r| {
            if r.lhs_args.len() != shape.binders.len() && !shape.is_identity() {
                return None;
            }
            let args: Vec<Term> = if r.lhs_args.len() == shape.binders.len() {
                shape.order.iter().map(|&i| r.lhs_args[i].clone()).collect()
            } else {
                r.lhs_args.clone()
            };
            let mut r2 = r.clone();
            r2.lhs_args = args;
            r2.rhs = shape.permute_calls(f, &r.rhs)?;
            Some(r2)
        })
        .collect::<Option<_>>()?;
    let kmax = infer_parameters(c, sig);
    let target = match decl.sort {
        Sort::Star => RecursorTarget::Weak,
        Sort::Box => {
            // Motive from the output: abstract indices and scrutinee.
            let n = shape.n_indices + 1;
            let tel: Vec<(Var, Term)> = shape.order[..n].iter().map(|&i| shape.binders[i].clone()).collect();
            let m = Term::abss(&tel, shape.output.clone());
            if !m.free_vars().is_empty() {
                return None;
            }
            RecursorTarget::Strong(m)
        }
    };
    for k in (0..=kmax).rev() {
        let Ok(ind) = analyze_inductive(c, k, sig) else { continue };
        for layout in [BranchLayout::Grouped, BranchLayout::Interleaved] {
            let Ok(g) = gen_recursor(&ind, &target, layout, f) else { continue };
            if g.decl.ty != user_ty || g.rules.len() != user_rules.len() {
                continue;
            }
            let mut used = vec![false; user_rules.len()];
            let all = g.rules.iter().all(|cr| {
                match user_rules.iter().enumerate().find(|(i, ur)| !used[*i] && rules_match(cr, ur)) {
                    Some((i, _)) => {
                        used[i] = true;
                        true
                    }
                    None => false,
                }
            });
            if all {
                let kind = if decl.sort == Sort::Box { RecursorKind::Strong } else { RecursorKind::Weak };
                return Some(CanonicalMatch { n_params: k, layout, kind });
            }
        }
    }
    None
}

/// Subterms of an lhs argument reachable through accessible constructor
/// arguments, or through any argument of a nested call to the head symbol.
fn accessible_subterms(l: &Term, sig: &Signature, head: &str, out: &mut Vec<Term>) {
    let (h, args) = l.spine();
    let Some(c) = h.as_sym() else { return };
    if &**c == head {
        for a in args {
            out.push(a.clone());
            accessible_subterms(a, sig, head, out);
        }
        return;
    }
    let Some(decl) = sig.get(c) else { return };
    let Some(target) = &decl.constructor_of else { return };
    if sig.interp_class(target) == InterpClass::Elim && sig.has_rules(c) {
        return;
    }
    let Some(acc) = &decl.acc else { return };
    for (j, a) in args.iter().enumerate() {
        if acc.contains(&(j + 1)) {
            out.push((*a).clone());
            accessible_subterms(a, sig, head, out);
        }
    }
}

/// Variables of `l` reachable from the root through accessible arguments.
pub fn accessible_vars(lhs_args: &[Term], sig: &Signature, head: &str) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    for l in lhs_args {
        let mut subs = vec![l.clone()];
        accessible_subterms(l, sig, head, &mut subs);
        for s in subs {
            if let Some(v) = s.as_var() {
                out.insert(v.clone());
            }
        }
    }
    out
}

/// Every call in the rhs to a symbol equivalent to the head has an
/// argument that is a strict accessible subterm of the lhs argument at the
/// same index (possibly applied to bound variables).
pub fn structural_decrease_check(rule: &RewriteRule, sig: &Signature) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let strict: Vec<Vec<Term>> = rule
        .lhs_args
        .iter()
        .map(|l| {
            let mut v = Vec::new();
            accessible_subterms(l, sig, &rule.head, &mut v);
            v
        })
        .collect();
    let decreasing = |i: usize, u: &Term| -> bool {
        let Some(subs) = strict.get(i) else { return false };
        if subs.contains(u) {
            return true;
        }
        let (h, args) = u.spine();
        !args.is_empty() && args.iter().all(|a| matches!(a, Term::Bound(_))) && subs.contains(h)
    };
    let mut calls = Vec::new();
    collect_calls(&rule.rhs, &rule.head, sig, &mut calls);
    for call in calls {
        let (_, args) = call.spine();
        if !args.iter().enumerate().any(|(i, a)| decreasing(i, a)) {
            out.push(
                Diagnostic::error(
                    Code::NoDecrease,
                    format!("recursive call {call} has no argument that is a strict accessible subterm of the matching argument of {}", rule.lhs()),
                )
                .rule(&rule.name)
                .symbol(&rule.head),
            );
        }
    }
    out
}

fn collect_calls(t: &Term, head: &str, sig: &Signature, out: &mut Vec<Term>) {
    let (h, args) = t.spine();
    if let Some(g) = h.as_sym() {
        if sig.precedence.equiv(g, head) && sig.has_rules(g) {
            out.push(t.clone());
        }
    }
    match h {
        Term::Abs(_, d, b) | Term::Prod(_, d, b) => {
            collect_calls(d, head, sig, out);
            collect_calls(b, head, sig, out);
        }
        _ => {}
    }
    for a in args {
        collect_calls(a, head, sig, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precedence::infer_precedence;
    use crate::typing::Typer;

    fn nat_sig() -> Signature {
        let nat = Term::sym("nat");
        let mut sig = Signature::new();
        sig.add_symbol(SymbolDecl::new("nat", Term::star()));
        sig.add_symbol(SymbolDecl::new("0", nat.clone()));
        sig.add_symbol(SymbolDecl::new("s", Term::arrow(nat.clone(), nat)));
        sig
    }

    fn list_sig() -> Signature {
        let mut sig = Signature::new();
        let a = Var::predicate("A");
        let la = Term::app(Term::sym("list"), a.term());
        sig.add_symbol(SymbolDecl::new("list", Term::arrow(Term::star(), Term::star())));
        sig.add_symbol(SymbolDecl::new("nil", Term::prod(&a, Term::star(), &la)));
        sig.add_symbol(SymbolDecl::new(
            "cons",
            Term::prod(&a, Term::star(), &Term::arrow(a.term(), Term::arrow(la.clone(), la))),
        ));
        sig
    }

    fn jmeq_sig() -> Signature {
        let a = Var::predicate("A");
        let b = Var::predicate("B");
        let x = Var::object("x");
        let y = Var::object("y");
        let mut sig = Signature::new();
        let jm_ty = Term::prods(&[(a.clone(), Term::star()), (x.clone(), a.term()), (b.clone(), Term::star()), (y, b.term())], Term::star());
        sig.add_symbol(SymbolDecl::new("JMeq", jm_ty));
        let out = Term::apps(Term::sym("JMeq"), [a.term(), x.term(), a.term(), x.term()]);
        sig.add_symbol(SymbolDecl::new("refl", Term::prods(&[(a.clone(), Term::star()), (x, a.term())], out)));
        sig
    }

    fn mendler_sig() -> Signature {
        let mut sig = nat_sig();
        sig.add_symbol(SymbolDecl::new("C", Term::star()));
        sig.add_symbol(SymbolDecl::new("c", Term::arrow(Term::arrow(Term::sym("C"), Term::sym("nat")), Term::sym("C"))));
        sig
    }

    /// The generated type is well-sorted and each rule's rhs has the type
    /// of its lhs.
    fn assert_well_typed(sig: &Signature, g: &GeneratedRecursor) {
        let mut sig = sig.clone();
        sig.add_symbol(g.decl.clone());
        let typer = Typer::new(&sig);
        typer.sort_of_type(&Environment::new(), &g.decl.ty).unwrap();
        for r in &g.rules {
            let lhs = r.lhs().subst(&r.rho);
            let ty = typer.infer(&r.env, &lhs).unwrap_or_else(|e| panic!("{}: {lhs}: {e}", r.name));
            typer.check(&r.env, &r.rhs, &ty).unwrap_or_else(|e| panic!("{}: {}: {e}", r.name, r.rhs));
        }
    }

    #[test]
    fn parameters_are_inferred() {
        assert_eq!(infer_parameters("nat", &nat_sig()), 0);
        assert_eq!(infer_parameters("list", &list_sig()), 1);
        assert_eq!(infer_parameters("JMeq", &jmeq_sig()), 2);
    }

    #[test]
    fn nat_weak_recursor() {
        let sig = nat_sig();
        let g = gen_weak_recursor("nat", "rec_nat", &sig).unwrap();
        assert_eq!(g.decl.ty.to_string(), "(z:nat)(P:nat -> *)P 0 -> ((x:nat)P x -> P (s x)) -> P z");
        let rhs: Vec<String> = g.rules.iter().map(|r| r.rhs.to_string()).collect();
        assert_eq!(rhs, ["y1", "y2 x (rec_nat x P y1 y2)"]);
        assert_eq!(g.rules[1].lhs().to_string(), "rec_nat (s x) P y1 y2");
        assert_well_typed(&sig, &g);
    }

    #[test]
    fn list_and_jmeq_recursors_are_well_typed() {
        let sig = list_sig();
        let g = gen_weak_recursor("list", "rec_list", &sig).unwrap();
        assert_well_typed(&sig, &g);
        let shape = analyze_inductive("list", 1, &sig).unwrap();
        let inter = gen_recursor(&shape, &RecursorTarget::Weak, BranchLayout::Interleaved, "rec_list").unwrap();
        assert_well_typed(&sig, &inter);
        // The recursive argument of cons comes last, so both layouts agree.
        assert_eq!(inter.decl.ty, g.decl.ty);

        // snoc : (A:*)list A -> A -> list A puts it first.
        let mut sig = Signature::new();
        let a = Var::predicate("A");
        let la = Term::app(Term::sym("list"), a.term());
        sig.add_symbol(SymbolDecl::new("list", Term::arrow(Term::star(), Term::star())));
        sig.add_symbol(SymbolDecl::new("nil", Term::prod(&a, Term::star(), &la)));
        sig.add_symbol(SymbolDecl::new("snoc", Term::prod(&a, Term::star(), &Term::arrow(la.clone(), Term::arrow(a.term(), la)))));
        let shape = analyze_inductive("list", 1, &sig).unwrap();
        let grouped = gen_recursor(&shape, &RecursorTarget::Weak, BranchLayout::Grouped, "rec_list").unwrap();
        let inter = gen_recursor(&shape, &RecursorTarget::Weak, BranchLayout::Interleaved, "rec_list").unwrap();
        assert_well_typed(&sig, &grouped);
        assert_well_typed(&sig, &inter);
        assert_eq!(grouped.rules[1].rhs.to_string(), "y2 x' x'' (rec_list x'1 x' P y1 y2)");
        assert_eq!(inter.rules[1].rhs.to_string(), "y2 x' (rec_list x'1 x' P y1 y2) x''");

        let sig = jmeq_sig();
        let g = gen_weak_recursor("JMeq", "rec_JMeq", &sig).unwrap();
        assert_well_typed(&sig, &g);
        let rho: BTreeSet<String> = g.rules[0].rho.iter().map(|(x, t)| format!("{x}:={t}")).collect();
        assert_eq!(rho, ["A:=A'", "B:=A'", "x:=x'", "y:=x'"].into_iter().map(String::from).collect());
    }

    #[test]
    fn mendler_type_is_not_strictly_positive() {
        assert!(check_strictly_positive("nat", &nat_sig()).is_empty());
        assert!(check_strictly_positive("list", &list_sig()).is_empty());
        let d = check_strictly_positive("C", &mendler_sig());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::NotStrictlyPositive);
        assert_eq!(d[0].position.as_deref(), Some("1.1"));
    }

    #[test]
    fn strong_recursor_into_kinds() {
        let sig = nat_sig();
        let n = Var::object("n");
        let motive = Term::abs(&n, Term::sym("nat"), &Term::star());
        let g = gen_strong_recursor("nat", &motive, "Rec", &sig).unwrap();
        assert_eq!(g.decl.sort, Sort::Box);
        assert_well_typed(&sig, &g);
    }

    #[test]
    fn strong_jmeq_is_unsafe() {
        let sig = jmeq_sig();
        let a = Var::predicate("A");
        let b = Var::predicate("B");
        let x = Var::object("x");
        let y = Var::object("y");
        let z = Var::object("z");
        let jm = Term::apps(Term::sym("JMeq"), [a.term(), x.term(), b.term(), y.term()]);
        let motive = Term::abss(
            &[(a.clone(), Term::star()), (x, a.term()), (b.clone(), Term::star()), (y, b.term()), (z, jm)],
            Term::star(),
        );
        let err = gen_strong_recursor("JMeq", &motive, "Rec", &sig).unwrap_err();
        assert!(err.iter().any(|d| d.code == Code::Unsafe), "{err:?}");
    }

    #[test]
    fn strong_recursor_over_predicate_index_is_not_small() {
        let nat = Term::sym("nat");
        let pred = Term::arrow(nat.clone(), Term::star());
        let mut sig = nat_sig();
        sig.add_symbol(SymbolDecl::new("fin", Term::arrow(pred.clone(), Term::star())));
        let x = Var::object("x");
        let pv = Var::predicate("p");
        let y = Var::object("y");
        let out = Term::app(Term::sym("fin"), Term::abs(&y, nat.clone(), &Term::app(pv.term(), y.term())));
        let ty = Term::prod(&x, nat, &Term::prod(&pv, pred.clone(), &Term::arrow(Term::app(Term::sym("fin"), pv.term()), out)));
        sig.add_symbol(SymbolDecl::new("add", ty));
        let q = Var::predicate("q");
        let z = Var::object("z");
        let motive = Term::abss(&[(q.clone(), pred), (z, Term::app(Term::sym("fin"), q.term()))], Term::star());
        let err = gen_strong_recursor("fin", &motive, "Rec", &sig).unwrap_err();
        assert!(err.iter().any(|d| d.code == Code::NotSmall), "{err:?}");
        assert!(err.iter().any(|d| d.code == Code::Unsafe), "{err:?}");
    }

    /// `natrec : (P:nat -> *)P 0 -> ((x:nat)P x -> P (s x)) -> (n:nat)P n`,
    /// scrutinee last.
    fn scrutinee_last_sig() -> Signature {
        let nat = Term::sym("nat");
        let mut sig = nat_sig();
        let pv = Var::predicate("P");
        let x = Var::object("x");
        let n = Var::object("n");
        let p = |t: Term| Term::app(pv.term(), t);
        let step = Term::prod(&x, nat.clone(), &Term::arrow(p(x.term()), p(Term::app(Term::sym("s"), x.term()))));
        let ty = Term::prod(
            &pv,
            Term::arrow(nat.clone(), Term::star()),
            &Term::arrow(p(Term::sym("0")), Term::arrow(step, Term::prod(&n, nat, &p(n.term())))),
        );
        let mut decl = SymbolDecl::new("natrec", ty);
        decl.recursor_for = Some(Name::from("nat"));
        sig.add_symbol(decl);
        let y1 = Var::object("y1");
        let y2 = Var::object("y2");
        let base = [pv.term(), y1.term(), y2.term()];
        let call = |t: Term| Term::apps(Term::sym("natrec"), base.iter().cloned().chain([t]));
        sig.add_rule(RewriteRule::new("natrec/1", "natrec", base.iter().cloned().chain([Term::sym("0")]).collect(), y1.term()));
        sig.add_rule(RewriteRule::new(
            "natrec/2",
            "natrec",
            base.iter().cloned().chain([Term::app(Term::sym("s"), x.term())]).collect(),
            Term::apps(y2.term(), [x.term(), call(x.term())]),
        ));
        sig.precedence = infer_precedence(sig.decls(), sig.rules()).unwrap();
        sig
    }

    #[test]
    fn pre_recursor_permutes_independent_arguments() {
        let sig = scrutinee_last_sig();
        let shape = check_pre_recursor("natrec", "nat", &sig).unwrap();
        assert_eq!(shape.order, [3, 0, 1, 2]);
        assert_eq!(shape.n_indices, 0);
        assert!(check_recursor_positivity("natrec", "nat", &shape, false, &sig).is_empty());
        let m = match_canonical("natrec", "nat", &shape, &sig).expect("canonical");
        assert_eq!(m.n_params, 0);
        assert_eq!(m.layout, BranchLayout::Grouped);
    }

    #[test]
    fn altered_rule_is_not_canonical() {
        let mut sig = scrutinee_last_sig();
        for r in sig.rules_mut() {
            if r.name == "natrec/2" {
                r.rhs = Term::apps(Var::object("y2").term(), [Var::object("x").term(), Var::object("y1").term()]);
            }
        }
        let shape = check_pre_recursor("natrec", "nat", &sig).unwrap();
        assert!(match_canonical("natrec", "nat", &shape, &sig).is_none());
    }

    #[test]
    fn constructor_cannot_be_recursor() {
        let sig = nat_sig();
        let err = check_pre_recursor("s", "nat", &sig).unwrap_err();
        assert_eq!(err[0].code, Code::PreRecursor);
    }

    #[test]
    fn structural_decrease() {
        let mut sig = nat_sig();
        let nat = Term::sym("nat");
        sig.add_symbol(SymbolDecl::new("f", Term::arrow(nat.clone(), nat)));
        let x = Var::object("x");
        let sx = Term::app(Term::sym("s"), x.term());
        sig.add_rule(RewriteRule::new("f/1", "f", vec![sx.clone()], Term::app(Term::sym("f"), x.term())));
        sig.add_rule(RewriteRule::new("f/2", "f", vec![x.term()], Term::app(Term::sym("f"), sx)));
        sig.precedence = infer_precedence(sig.decls(), sig.rules()).unwrap();
        let s = sig.get_mut("s").unwrap();
        s.constructor_of = Some(Name::from("nat"));
        s.acc = Some([1].into_iter().collect());
        assert!(structural_decrease_check(&sig.rules()[0], &sig).is_empty());
        let d = structural_decrease_check(&sig.rules()[1], &sig);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::NoDecrease);
    }
}
