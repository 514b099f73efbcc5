//! Signature elaboration: resolution of parsed items, precedence
//! inference, recursor generation and every admission gate.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::critical::critical_pairs;
use crate::diagnostic::{Code, Diagnostic, Severity};
use crate::positivity::{accessible_args, check_i6, check_mon_declarations, check_safe, is_first_order_data_type};
use crate::precedence::infer_precedence;
use crate::recursor::{
    accessible_vars, check_pre_recursor, check_recursor_positivity, gen_strong_recursor, gen_weak_recursor,
    match_canonical, structural_decrease_check,
};
use crate::rewrite::{normalize, FuelBudget};
use crate::signature::{InterpClass, Origin, RecursorKind, RewriteRule, Signature, SymbolDecl};
use crate::syntax::{parse_cac, Item, Raw, RecursorRequest, Scope};
use crate::term::{Class, Environment, Name, Sort, Substitution, Term, Var};
use crate::typing::{TypeError, Typer};

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub fuel: FuelBudget,
    /// Downgrade the conservative rule-validity errors to warnings.
    pub assume_valid_rules: bool,
    /// Types whose declared recursors are admitted without the canonical
    /// match (strict positivity is not required of them).
    pub trusted: BTreeSet<String>,
}

#[derive(Clone, Debug)]
pub struct Elaboration {
    pub sig: Signature,
    pub diagnostics: Vec<Diagnostic>,
}

impl Elaboration {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    pub fn accepted(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn fuel_exhausted(&self) -> bool {
        self.diagnostics.iter().any(|d| d.code == Code::FuelExhausted)
    }

    /// Parse, resolution and duplicate-name errors.
    pub fn input_error(&self) -> bool {
        self.errors().any(|d| matches!(d.code, Code::Parse | Code::Unbound | Code::Duplicate))
    }
}

pub fn elaborate_source(src: &str, opts: &Options) -> Elaboration {
    match parse_cac(src) {
        Ok(items) => elaborate_items(&items, opts),
        Err(e) => Elaboration {
            sig: Signature::new(),
            diagnostics: vec![Diagnostic::error(Code::Parse, e.message.clone()).at(format!("line {}:{}", e.line, e.col))],
        },
    }
}

/// Parse a term against an elaborated signature; unknown identifiers
/// become free object variables.
pub fn parse_term_in(src: &str, sig: &Signature) -> Result<Term, Diagnostic> {
    let raw = crate::syntax::parse_term(src)
        .map_err(|e| Diagnostic::error(Code::Parse, e.message.clone()).at(format!("{}:{}", e.line, e.col)))?;
    let is_sym = |f: &str| sig.contains(f);
    let mut scope = Scope::new(&is_sym);
    scope.open = true;
    scope.resolve(&raw).map_err(|e| Diagnostic::error(Code::Unbound, e.to_string()))
}

struct Pending {
    name: String,
    target: String,
    request: RecursorRequest,
    line: usize,
}

fn fuel_diag(e: &TypeError, what: String) -> Diagnostic {
    Diagnostic::error(Code::FuelExhausted, format!("{what}: {e}"))
}

/// Peel `args.len()` products off `ty`, instantiating with the arguments.
pub fn instantiate_type(ty: &Term, args: &[Term]) -> Option<Term> {
    let mut t = ty.clone();
    for a in args {
        let Term::Prod(_, _, body) = &t else { return None };
        t = body.instantiate(a);
    }
    Some(t)
}

fn fix_sorts(t: &Term, sorts: &HashMap<Name, Sort>) -> Term {
    let theta: Substitution =
        t.free_vars().into_iter().filter_map(|v| sorts.get(&v.name).map(|s| (v.name.clone(), Var { name: v.name.clone(), sort: *s }.term()))).collect();
    t.subst(&theta)
}

/// Types of pattern variables read off the symbol types along the lhs.
fn infer_pattern_env(lhs: &Term, sig: &Signature) -> Result<Vec<(Var, Term)>, String> {
    fn walk(t: &Term, expected: Option<&Term>, sig: &Signature, out: &mut Vec<(Var, Term)>) -> Result<(), String> {
        if let Some(x) = t.as_var() {
            if out.iter().any(|(v, _)| v == x) {
                return Ok(());
            }
            return match expected {
                Some(ty) => {
                    out.push((x.clone(), ty.clone()));
                    Ok(())
                }
                None => Err(format!("cannot infer the type of {}; give it in [env: …]", x.name)),
            };
        }
        let (h, args) = t.spine();
        let Some(f) = h.as_sym() else {
            return Err(format!("{t} is not an algebraic pattern"));
        };
        let Some(d) = sig.get(f) else { return Err(format!("unknown symbol {f}")) };
        let mut ty = d.ty.clone();
        for a in args {
            let Term::Prod(_, dom, body) = &ty else {
                return Err(format!("{f} is applied to too many arguments in {t}"));
            };
            walk(a, Some(dom), sig, out)?;
            ty = body.instantiate(a);
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(lhs, None, sig, &mut out)?;
    let sorts: HashMap<Name, Sort> = out.iter().map(|(v, t)| (v.name.clone(), Sort::of_annotation(t))).collect();
    Ok(out
        .into_iter()
        .map(|(v, t)| (Var { sort: sorts[&v.name], name: v.name }, fix_sorts(&t, &sorts)))
        .collect())
}

struct RawRule<'a> {
    lhs: &'a Raw,
    rhs: &'a Raw,
    env: &'a Option<Vec<(String, Raw)>>,
    rho: &'a [(String, Raw)],
    line: usize,
}

fn class_sort(t: &Term, sig: &Signature) -> Sort {
    match t.classify(&sig.sort_lookup()) {
        Class::Predicate | Class::Kind => Sort::Box,
        _ => Sort::Star,
    }
}

/// Resolve a rule against the (partial) signature.
fn resolve_rule(r: &RawRule, sig: &Signature, counter: &mut HashMap<Name, usize>) -> Result<RewriteRule, Vec<Diagnostic>> {
    let is_sym = |f: &str| sig.contains(f);
    let err = |code: Code, msg: String| vec![Diagnostic::error(code, msg).at(format!("line {}", r.line))];
    let mut scope = Scope::new(&is_sym);
    scope.open = true;
    let lhs0 = scope.resolve(r.lhs).map_err(|e| err(Code::Unbound, e.to_string()))?;
    let Some(head) = lhs0.head_sym().cloned() else {
        return Err(err(Code::RuleFormat, format!("the left-hand side {lhs0} is not headed by a symbol")));
    };
    let k = counter.entry(head.clone()).or_insert(0);
    *k += 1;
    let name = format!("{head}/{k}");
    let with_name = |mut ds: Vec<Diagnostic>| {
        for d in &mut ds {
            d.rule = Some(name.clone());
        }
        ds
    };

    let mut sorts: HashMap<Name, Sort> = HashMap::new();
    let mut env: Vec<(Var, Term)> = Vec::new();
    match r.env {
        Some(binds) => {
            let mut scope = Scope::new(&is_sym);
            for (x, raw) in binds {
                let ty = scope.resolve(raw).map_err(|e| with_name(err(Code::Unbound, format!("in the type of {x}: {e}"))))?;
                let s = Sort::of_annotation(&ty);
                scope.vars.insert(x.clone(), s);
                sorts.insert(Name::from(x.as_str()), s);
                env.push((Var::new(x, s), ty));
            }
        }
        None => {
            let inferred = infer_pattern_env(&lhs0, sig).map_err(|m| with_name(err(Code::RuleEnv, m)))?;
            for (v, _) in &inferred {
                sorts.insert(v.name.clone(), v.sort);
            }
            env = inferred;
        }
    }
    // ρ: domain variables take the sort of their image.
    let mut rho = Substitution::new();
    {
        let mut scope = Scope::new(&is_sym);
        for (x, s) in &sorts {
            scope.vars.insert(x.to_string(), *s);
        }
        for (x, raw) in r.rho {
            let t = scope.resolve(raw).map_err(|e| with_name(err(Code::Unbound, format!("in ρ({x}): {e}"))))?;
            let s = class_sort(&t, sig);
            sorts.insert(Name::from(x.as_str()), s);
            rho.insert(Name::from(x.as_str()), t);
        }
    }
    if r.env.is_none() {
        env.retain(|(v, _)| !rho.contains(&v.name));
    }
    let mut scope = Scope::new(&is_sym);
    for (x, s) in &sorts {
        scope.vars.insert(x.to_string(), *s);
    }
    scope.open = true;
    let lhs = scope.resolve(r.lhs).map_err(|e| with_name(err(Code::Unbound, e.to_string())))?;
    let rhs = scope.resolve(r.rhs).map_err(|e| with_name(err(Code::Unbound, e.to_string())))?;
    let (_, args) = lhs.spine();
    let args: Vec<Term> = args.into_iter().cloned().collect();
    let mut rule = RewriteRule::new(&name, &head, args, rhs)
        .with_env(Environment::from_bindings(env))
        .with_rho(rho);
    rule.line = Some(r.line);
    Ok(rule)
}

/// Resolve and elaborate a parsed file.
pub fn elaborate_items(items: &[Item], opts: &Options) -> Elaboration {
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut names: BTreeSet<String> = BTreeSet::new();
    let mut declare = |n: &str, line: usize, diags: &mut Vec<Diagnostic>| {
        if !names.insert(n.to_string()) {
            diags.push(Diagnostic::error(Code::Duplicate, format!("{n} is declared twice")).symbol(n).at(format!("line {line}")));
        }
    };
    for it in items {
        match it {
            Item::Symbol { name, line, .. } => declare(name, *line, &mut diags),
            Item::Inductive { name, constructors, line, .. } => {
                declare(name, *line, &mut diags);
                for (c, _) in constructors {
                    declare(c, *line, &mut diags);
                }
                declare(&format!("rec_{name}"), *line, &mut diags);
            }
            Item::Recursor { name, request: RecursorRequest::Weak | RecursorRequest::Strong(_), line, .. } => {
                declare(name, *line, &mut diags)
            }
            _ => {}
        }
    }
    let generated_names: BTreeSet<String> = items
        .iter()
        .filter_map(|it| match it {
            Item::Recursor { name, request: RecursorRequest::Weak | RecursorRequest::Strong(_), .. } => Some(name.clone()),
            Item::Inductive { name, .. } => Some(format!("rec_{name}")),
            _ => None,
        })
        .collect();
    let all_names = names.clone();
    let is_sym = |f: &str| all_names.contains(f);

    // Symbol declarations.
    let mut sig = Signature::new();
    let mut pending: Vec<Pending> = Vec::new();
    let mut elim: BTreeSet<String> = BTreeSet::new();
    for it in items {
        match it {
            Item::Symbol { name, ty, constant, line } => {
                let gen_ok = |f: &str| is_sym(f) && !generated_names.contains(f);
                match Scope::new(&gen_ok).resolve(ty) {
                    Ok(t) => {
                        let mut d = SymbolDecl::new(name, t);
                        d.declared_constant = *constant;
                        d.origin = Origin::Source { line: *line };
                        sig.add_symbol(d);
                    }
                    Err(e) => diags.push(
                        Diagnostic::error(Code::Unbound, format!("in the type of {name}: {e}")).symbol(name).at(format!("line {line}")),
                    ),
                }
            }
            Item::Inductive { name, params, indices, constructors, line } => {
                let wrap = |body: Raw, tel: &[(String, Raw)]| {
                    tel.iter().rev().fold(body, |acc, (x, t)| Raw::Prod(x.clone(), Box::new(t.clone()), Box::new(acc)))
                };
                let arity = wrap(wrap(Raw::Star, indices), params);
                let scope = Scope::new(&is_sym);
                match scope.resolve(&arity) {
                    Ok(t) => {
                        let mut d = SymbolDecl::new(name, t);
                        d.declared_constant = true;
                        d.origin = Origin::Source { line: *line };
                        sig.add_symbol(d);
                    }
                    Err(e) => diags.push(Diagnostic::error(Code::Unbound, format!("in the type of {name}: {e}")).symbol(name)),
                }
                for (c, ty) in constructors {
                    match scope.resolve(&wrap(ty.clone(), params)) {
                        Ok(t) => {
                            let mut d = SymbolDecl::new(c, t);
                            d.declared_constant = true;
                            d.origin = Origin::Source { line: *line };
                            sig.add_symbol(d);
                        }
                        Err(e) => diags.push(Diagnostic::error(Code::Unbound, format!("in the type of {c}: {e}")).symbol(c)),
                    }
                }
                elim.insert(name.clone());
                pending.push(Pending { name: format!("rec_{name}"), target: name.clone(), request: RecursorRequest::Weak, line: *line });
            }
            Item::Recursor { name, target, request, line } => {
                elim.insert(target.clone());
                pending.push(Pending { name: name.clone(), target: target.clone(), request: request.clone(), line: *line });
            }
            _ => {}
        }
    }
    for it in items {
        if let Item::Monotone { name, plus, minus, line } = it {
            match sig.get_mut(name) {
                Some(d) => {
                    d.mon_plus.extend(plus);
                    d.mon_minus.extend(minus);
                }
                None => diags.push(Diagnostic::error(Code::Unbound, format!("monotone declaration for unknown symbol {name}")).at(format!("line {line}"))),
            }
        }
    }
    let mut counter = HashMap::new();
    for it in items {
        if let Item::Rule { lhs, rhs, env, rho, line } = it {
            let raw = RawRule { lhs, rhs, env, rho, line: *line };
            match resolve_rule(&raw, &sig, &mut counter) {
                Ok(r) => {
                    if !sig.contains(&r.head) {
                        diags.push(Diagnostic::error(Code::Unbound, format!("rule for unknown symbol {}", r.head)).rule(&r.name));
                    } else {
                        sig.add_rule(r);
                    }
                }
                Err(ds) => diags.extend(ds),
            }
        }
    }
    let mut declared_recursors: BTreeMap<String, usize> = BTreeMap::new();
    for p in &pending {
        if !sig.contains(&p.target) {
            diags.push(Diagnostic::error(Code::Unbound, format!("recursor {} for unknown type {}", p.name, p.target)).at(format!("line {}", p.line)));
            continue;
        }
        if p.request == RecursorRequest::Declared {
            *declared_recursors.entry(p.name.clone()).or_insert(0) += 1;
            match sig.get_mut(&p.name) {
                Some(d) => {
                    if d.recursor_for.as_deref().is_some_and(|c| c != p.target) {
                        diags.push(
                            Diagnostic::error(Code::RecursorDuplicate, format!("{} is already a recursor for {}", p.name, d.recursor_for.as_ref().unwrap()))
                                .symbol(&p.name),
                        );
                    }
                    d.recursor_for = Some(Name::from(p.target.as_str()));
                    d.recursor_kind = Some(if d.sort == Sort::Box { RecursorKind::Strong } else { RecursorKind::Weak });
                }
                None => diags.push(Diagnostic::error(Code::Unbound, format!("recursor declaration for unknown symbol {}", p.name)).at(format!("line {}", p.line))),
            }
        }
    }
    for c in &elim {
        if let Some(d) = sig.get_mut(c) {
            d.interp_class = Some(InterpClass::Elim);
        }
    }
    if diags.iter().any(|d| d.is_error()) {
        return finish(sig, diags);
    }
    mark_constructors(&mut sig);

    // First precedence, needed to classify predicates equivalent to a type.
    match infer_precedence(sig.decls(), sig.rules()) {
        Ok(p) => sig.precedence = p,
        Err(ds) => {
            diags.extend(ds);
            return finish(sig, diags);
        }
    }
    compute_acc(&mut sig);

    // Canonical recursors.
    for p in pending.iter().filter(|p| p.request != RecursorRequest::Declared) {
        let result = match &p.request {
            RecursorRequest::Weak => gen_weak_recursor(&p.target, &p.name, &sig),
            RecursorRequest::Strong(raw) => match Scope::new(&|f: &str| sig.contains(f)).resolve(raw) {
                Ok(m) => gen_strong_recursor(&p.target, &m, &p.name, &sig),
                Err(e) => Err(vec![Diagnostic::error(Code::Unbound, format!("in the motive of {}: {e}", p.name))]),
            },
            RecursorRequest::Declared => unreachable!(),
        };
        match result {
            Ok(g) => {
                sig.add_symbol(g.decl);
                for r in g.rules {
                    sig.add_rule(r);
                }
            }
            Err(ds) => {
                for mut d in ds {
                    if d.symbol.is_none() {
                        d.symbol = Some(p.target.clone());
                    }
                    diags.push(d);
                }
            }
        }
    }
    if diags.iter().any(|d| d.is_error() && d.code == Code::Unbound) {
        return finish(sig, diags);
    }
    match infer_precedence(sig.decls(), sig.rules()) {
        Ok(p) => sig.precedence = p,
        Err(ds) => {
            diags.extend(ds);
            return finish(sig, diags);
        }
    }
    compute_acc(&mut sig);

    let gates = Gates { sig: &sig, opts };
    diags.extend(gates.symbol_types());
    diags.extend(gates.positivity());
    diags.extend(check_mon_declarations(&sig));
    diags.extend(gates.rules());
    diags.extend(gates.confluence());
    diags.extend(gates.recursors());
    finish(sig, diags)
}

fn finish(mut sig: Signature, diagnostics: Vec<Diagnostic>) -> Elaboration {
    sig.gate_report = diagnostics.clone();
    Elaboration { sig, diagnostics }
}

fn mark_constructors(sig: &mut Signature) {
    let targets: Vec<(Name, Option<Name>)> = sig
        .decls()
        .iter()
        .map(|d| {
            let t = crate::signature::output_head(&d.ty).filter(|h| *h != d.name && sig.is_constant_predicate(h));
            (d.name.clone(), t)
        })
        .collect();
    for (f, t) in targets {
        if let Some(d) = sig.get_mut(&f) {
            d.constructor_of = t;
        }
    }
}

fn compute_acc(sig: &mut Signature) {
    let accs: Vec<(Name, BTreeSet<usize>)> = sig
        .decls()
        .iter()
        .filter_map(|d| d.constructor_of.as_ref().map(|c| (d.name.clone(), accessible_args(d, c, sig).acc)))
        .collect();
    for (f, acc) in accs {
        if let Some(d) = sig.get_mut(&f) {
            d.acc = Some(acc);
        }
    }
}

struct Gates<'a> {
    sig: &'a Signature,
    opts: &'a Options,
}

impl<'a> Gates<'a> {
    fn typer(&self) -> Typer<'a> {
        Typer::new(self.sig).with_fuel(self.opts.fuel)
    }

    fn decls_in_order(&self) -> Vec<&'a SymbolDecl> {
        let mut out = Vec::new();
        for class in self.sig.precedence.classes() {
            for f in class {
                if let Some(d) = self.sig.get(f) {
                    out.push(d);
                }
            }
        }
        out
    }

    /// τ_f is closed and well-sorted using only smaller symbols.
    fn symbol_types(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let prec = &self.sig.precedence;
        for d in self.decls_in_order() {
            let f = d.name.clone();
            let relaxed = &prec.relaxed;
            let visible = |g: &str| {
                prec.lt(g, &f)
                    || (g != &*f && relaxed.iter().any(|(c, h)| (&**c == g && *h == f) || (*c == f && &**h == g)))
            };
            let typer = self.typer().restricted(&visible);
            match typer.sort_of_type(&Environment::new(), &d.ty) {
                Ok(s) if s == d.sort => {}
                Ok(s) => out.push(
                    Diagnostic::error(Code::SymbolType, format!("the type {} of {f} has sort {s}, expected {}", d.ty, d.sort)).symbol(&f),
                ),
                Err(e) if e.is_fuel() => out.push(fuel_diag(&e, format!("checking the type of {f}")).symbol(&f)),
                Err(e) => {
                    out.push(Diagnostic::error(Code::SymbolType, format!("the type {} of {f} is ill-typed: {e}", d.ty)).symbol(&f))
                }
            }
        }
        out
    }

    /// I6 for intro-class types.
    fn positivity(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for d in self.sig.decls() {
            if self.sig.is_constant_predicate(&d.name)
                && self.sig.interp_class(&d.name) == InterpClass::Intro
                && !self.sig.constructors_of(&d.name).is_empty()
            {
                out.extend(check_i6(&d.name, self.sig));
            }
        }
        out
    }

    fn soft(&self, d: Diagnostic) -> Diagnostic {
        if self.opts.assume_valid_rules {
            d.with_severity(Severity::Warning)
        } else {
            d
        }
    }

    fn rules(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let higher_order = self.sig.rules().iter().any(|r| !self.is_first_order_rule(r));
        for d in self.decls_in_order() {
            for r in self.sig.rules_of(&d.name) {
                out.extend(self.check_rule(d, r, higher_order));
            }
        }
        out
    }

    fn is_first_order_type(&self, t: &Term) -> bool {
        let (h, _) = t.spine();
        h.as_sym().is_some_and(|c| self.sig.is_constant_predicate(c) && is_first_order_data_type(c, self.sig))
    }

    fn is_first_order_rule(&self, r: &RewriteRule) -> bool {
        let Some(d) = self.sig.get(&r.head) else { return false };
        let mut names = crate::term::NameSupply::new();
        let (tel, out) = d.ty.open_telescope(&mut names);
        tel.iter().all(|(x, t)| x.sort == Sort::Star && self.is_first_order_type(t))
            && self.is_first_order_type(&out)
            && r.env.bindings().iter().all(|(x, t)| x.sort == Sort::Star && self.is_first_order_type(t))
            && r.rhs.is_algebraic()
    }

    fn check_rule(&self, d: &SymbolDecl, r: &RewriteRule, higher_order: bool) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let sig = self.sig;
        let diag = |code: Code, msg: String| Diagnostic::error(code, msg).rule(&r.name).symbol(&r.head);
        let lhs = r.lhs();
        let gamma: BTreeSet<Name> = r.env.vars().map(|v| v.name.clone()).collect();
        let lhs_vars: BTreeSet<Name> = lhs.free_vars().into_iter().map(|v| v.name).collect();

        // Format.
        if d.declared_constant {
            out.push(diag(Code::ConstantHasRules, format!("{} is declared constant but has a rule", d.name)));
        }
        if !lhs.is_algebraic() || r.lhs_args.iter().any(|a| a.symbols().iter().any(|g| !sig.contains(g))) {
            out.push(diag(Code::RuleFormat, format!("the left-hand side {lhs} is not algebraic")));
        }
        if r.lhs_args.len() > d.arity() {
            out.push(diag(Code::RuleFormat, format!("{} takes {} arguments but the rule matches {}", d.name, d.arity(), r.lhs_args.len())));
        }
        let stray: Vec<String> =
            r.rhs.free_vars().into_iter().filter(|v| !lhs_vars.contains(&v.name)).map(|v| v.name.to_string()).collect();
        if !stray.is_empty() {
            out.push(diag(Code::RuleFormat, format!("variables {} of the right-hand side do not occur in the left-hand side", stray.join(", "))));
            return out;
        }
        let outside: Vec<String> =
            r.rhs.free_vars().into_iter().filter(|v| !gamma.contains(&v.name)).map(|v| v.name.to_string()).collect();
        if !outside.is_empty() {
            out.push(diag(Code::RuleEnv, format!("variables {} of the right-hand side are not in the rule environment", outside.join(", "))));
        }

        // ρ soundness.
        for (x, t) in r.rho.iter() {
            if gamma.contains(x) {
                out.push(self.soft(diag(Code::RuleRho, format!("{x} is both in the environment and in the domain of ρ"))));
            }
            if !lhs_vars.contains(x) {
                out.push(self.soft(diag(Code::RuleRho, format!("{x} is in the domain of ρ but not in the left-hand side"))));
            }
            let bad: Vec<String> = t.free_vars().into_iter().filter(|v| !gamma.contains(&v.name)).map(|v| v.name.to_string()).collect();
            if !bad.is_empty() {
                out.push(self.soft(diag(Code::RuleRho, format!("ρ({x}) = {t} mentions {} outside the environment", bad.join(", ")))));
            }
        }
        for v in &lhs_vars {
            if !gamma.contains(v) && !r.rho.contains(v) {
                out.push(diag(Code::RuleEnv, format!("left-hand side variable {v} is neither in the environment nor in the domain of ρ")));
            }
        }

        // Typing.
        let typer = self.typer();
        match typer.check_env(&r.env) {
            Ok(()) => {}
            Err((_, e)) if e.is_fuel() => out.push(fuel_diag(&e, format!("checking the environment of {}", r.name)).rule(&r.name)),
            Err((i, e)) => {
                let (x, _) = &r.env.bindings()[i];
                out.push(diag(Code::RuleEnv, format!("the type of {} in the environment is ill-formed: {e}", x.name)));
                return out;
            }
        }
        let Some(u) = instantiate_type(&d.ty, &r.lhs_args) else { return out };
        let expected = u.subst(&r.rho);
        let lrho = lhs.subst(&r.rho);
        let res = typer.check(&r.env, &lrho, &expected).and_then(|_| typer.check(&r.env, &r.rhs, &expected));
        match res {
            Ok(()) => {}
            Err(e) if e.is_fuel() => out.push(fuel_diag(&e, format!("typing rule {}", r.name)).rule(&r.name)),
            Err(e) => out.push(diag(Code::RuleType, format!("in the environment, {lrho} --> {} does not type at {expected}: {e}", r.rhs))),
        }

        // Accessibility of the environment variables.
        let acc = accessible_vars(&r.lhs_args, sig, &r.head);
        for x in r.env.vars() {
            if !acc.contains(x) && lhs_vars.contains(&x.name) {
                out.push(self.soft(diag(
                    Code::Accessibility,
                    format!("{} occurs in {lhs} only below non-accessible constructor arguments", x.name),
                )));
            }
        }

        // Predicate-level rules.
        if d.sort == Sort::Box {
            let mut kappa_ok = true;
            for x in r.rhs.free_vars() {
                if x.sort != Sort::Box {
                    continue;
                }
                if !r.lhs_args.iter().any(|a| a.as_var() == Some(&x)) {
                    kappa_ok = false;
                    out.push(diag(Code::Kappa, format!("predicate variable {} of the right-hand side is not an argument of {lhs}", x.name)));
                }
            }
            let _ = kappa_ok;
            out.extend(check_safe(d, &r.lhs_args, &r.name));
        }

        // First-order rules among higher-order ones must not duplicate.
        if higher_order && self.is_first_order_rule(r) {
            for x in lhs.free_vars() {
                let (nl, nr) = (lhs.count_var(&x.name), r.rhs.count_var(&x.name));
                if nr > nl {
                    out.push(diag(
                        Code::NonDuplicating,
                        format!("{} occurs {nr} times in the right-hand side but {nl} in the left-hand side of a first-order rule mixed with higher-order rules", x.name),
                    ));
                }
            }
        }

        // Structural decrease for defined symbols and strong recursors.
        let weak_recursor = d.recursor_kind == Some(RecursorKind::Weak);
        if !weak_recursor {
            out.extend(structural_decrease_check(r, sig));
        }
        out
    }

    /// Left-linearity and joinable critical pairs when predicate-level
    /// rules exist; critical pairs are reported in every case.
    fn confluence(&self) -> Vec<Diagnostic> {
        let sig = self.sig;
        let mut out = Vec::new();
        let rules = sig.rules();
        let is_pred = |r: &RewriteRule| sig.sort_of(&r.head) == Some(Sort::Box);
        let pred_rules = rules.iter().any(is_pred);
        for cp in critical_pairs(rules) {
            let (a, b) = &cp.reducts;
            let joinable = if cp.trivially_joinable {
                Ok(true)
            } else {
                match (normalize(a, sig, self.opts.fuel), normalize(b, sig, self.opts.fuel)) {
                    (Ok(x), Ok(y)) => Ok(x == y),
                    (Err(e), _) | (_, Err(e)) => Err(e),
                }
            };
            let what = format!("{} and {} overlap at {} on {}", cp.rule1.name, cp.rule2.name, cp.position, cp.peak);
            match joinable {
                Err(e) => out.push(Diagnostic::error(Code::FuelExhausted, format!("joining {what}: {e}")).rule(&cp.rule1.name)),
                Ok(true) => out.push(Diagnostic::info(Code::CriticalPair, format!("{what}; the reducts {a} and {b} are joinable")).rule(&cp.rule1.name)),
                Ok(false) => {
                    let sev = if pred_rules { Severity::Error } else { Severity::Warning };
                    out.push(
                        Diagnostic::new(Code::Confluence, sev, format!("{what}; the reducts {a} and {b} have distinct normal forms"))
                            .rule(&cp.rule1.name),
                    );
                }
            }
            if is_pred(&cp.rule1) && is_pred(&cp.rule2) && !cp.trivially_joinable {
                out.push(
                    Diagnostic::error(Code::PredicateOverlap, format!("predicate-level rules {what}"))
                        .rule(&cp.rule1.name)
                        .symbol(&cp.rule1.head),
                );
            }
        }
        if pred_rules {
            for r in rules {
                let lhs = r.lhs();
                for x in lhs.free_vars() {
                    if lhs.count_var(&x.name) > 1 {
                        out.push(
                            Diagnostic::error(Code::Confluence, format!("{lhs} is not left-linear ({} repeats); predicate-level rules require a left-linear system", x.name))
                                .rule(&r.name),
                        );
                        break;
                    }
                }
            }
        }
        out
    }

    fn recursors(&self) -> Vec<Diagnostic> {
        let sig = self.sig;
        let mut out = Vec::new();
        let extended = !sig.precedence.relaxed.is_empty()
            || sig.decls().iter().any(|d| !d.mon_plus.is_empty() || !d.mon_minus.is_empty());
        for d in sig.decls() {
            let Some(c) = &d.recursor_for else { continue };
            let f = &d.name;
            if !sig.is_constant_predicate(c) {
                out.push(Diagnostic::error(Code::PreRecursor, format!("{f} is a recursor for {c}, which is not a constant predicate symbol")).symbol(f));
                continue;
            }
            let shape = match check_pre_recursor(f, c, sig) {
                Ok(s) => s,
                Err(ds) => {
                    out.extend(ds);
                    continue;
                }
            };
            out.extend(check_recursor_positivity(f, c, &shape, extended, sig));
            if d.origin == Origin::Generated {
                continue;
            }
            if self.opts.trusted.contains(&**c) {
                out.push(
                    Diagnostic::warning(Code::TrustedRecursor, format!("{f} is admitted as a recursor for {c} on trust; head-computability is not checked"))
                        .symbol(f),
                );
            } else if match_canonical(f, c, &shape, sig).is_none() {
                out.push(
                    Diagnostic::error(
                        Code::NonCanonicalRecursor,
                        format!("{f} does not match the canonical recursor of {c} up to argument permutation and renaming; only canonical recursors are admitted (pass --trusted-recursor {c} to admit it on trust)"),
                    )
                    .symbol(f),
                );
            }
        }
        out
    }
}

impl Signature {
    /// Neutral terms: not an abstraction, not a partial application of a
    /// defined symbol, and not a full constructor application (of a
    /// constant constructor when the type is elim-class).
    pub fn is_neutral(&self, t: &Term) -> bool {
        if matches!(t, Term::Abs(..)) {
            return false;
        }
        let (h, args) = t.spine();
        let Some(f) = h.as_sym() else { return true };
        if self.max_rule_arity(f).is_some_and(|n| n > args.len()) {
            return false;
        }
        if let Some(d) = self.get(f) {
            if let Some(c) = crate::signature::output_head(&d.ty) {
                if self.is_constant_predicate(&c)
                    && d.arity() == args.len()
                    && (self.interp_class(&c) == InterpClass::Intro || !self.has_rules(f))
                {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn accepted(src: &str) -> Elaboration {
        let e = elaborate_source(src, &Options::default());
        assert!(e.accepted(), "{:#?}", e.diagnostics.iter().filter(|d| d.is_error()).map(|d| d.to_string()).collect::<Vec<_>>());
        e
    }

    fn codes(src: &str) -> Vec<Code> {
        elaborate_source(src, &Options::default()).errors().map(|d| d.code).collect()
    }

    const NAT: &str = "inductive nat := 0 : nat | s : nat -> nat.
symbol + : nat -> nat -> nat.
rule x + 0 --> x.
rule x + (s y) --> s (x + y).";

    #[test]
    fn nat_with_plus_and_recursor() {
        let src = NAT.replace("rule x + 0", "rule + x 0").replace("rule x + (s y) --> s (x + y)", "rule + x (s y) --> s (+ x y)");
        let e = accepted(&src);
        assert!(e.sig.get("rec_nat").is_some());
        assert_eq!(e.sig.rules_of("rec_nat").count(), 2);
    }

    #[test]
    fn mendler_is_rejected() {
        let c = codes(
            "symbol nat : *.
inductive C := c : (C -> nat) -> C.
symbol p : C -> C -> nat.
rule p (c x) --> x.",
        );
        assert!(c.contains(&Code::NotStrictlyPositive), "{c:?}");
        assert!(c.contains(&Code::Accessibility), "{c:?}");
    }

    #[test]
    fn rhs_variable_must_occur_in_lhs() {
        let c = codes("constant nat : *. symbol f : nat -> nat. rule f x --> y.");
        assert_eq!(c, [Code::RuleFormat]);
    }

    #[test]
    fn neutral_terms() {
        let e = accepted("inductive nat := 0 : nat | s : nat -> nat.");
        let sig = &e.sig;
        let x = Var::object("x");
        assert!(!sig.is_neutral(&Term::abs(&x, Term::sym("nat"), &x.term())));
        assert!(sig.is_neutral(&Term::app(x.term(), Term::sym("0"))));
        assert!(!sig.is_neutral(&Term::app(Term::sym("s"), Term::sym("0"))));
        assert!(!sig.is_neutral(&Term::app(Term::sym("rec_nat"), Term::sym("0"))));
    }
}
