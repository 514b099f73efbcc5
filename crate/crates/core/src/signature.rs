//! Symbol declarations, rewrite rules and signatures.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::diagnostic::Diagnostic;
use crate::precedence::Precedence;
use crate::term::{Environment, Name, NameSupply, Sort, Substitution, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterpClass {
    Intro,
    Elim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecursorKind {
    Weak,
    Strong,
}

/// Where a declaration comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Source { line: usize },
    Generated,
}

#[derive(Clone, Debug)]
pub struct SymbolDecl {
    pub name: Name,
    pub sort: Sort,
    pub ty: Term,
    /// Declared with `constant`: rules headed by it are rejected.
    pub declared_constant: bool,
    pub defined: bool,
    pub interp_class: Option<InterpClass>,
    pub mon_plus: BTreeSet<usize>,
    pub mon_minus: BTreeSet<usize>,
    /// Accessible argument indices (1-based), for constructors.
    pub acc: Option<BTreeSet<usize>>,
    /// Target type when the output type is a constant predicate symbol.
    pub constructor_of: Option<Name>,
    pub recursor_for: Option<Name>,
    pub recursor_kind: Option<RecursorKind>,
    pub origin: Origin,
}

impl SymbolDecl {
    pub fn new(name: &str, ty: Term) -> SymbolDecl {
        SymbolDecl {
            name: Name::from(name),
            sort: Sort::of_annotation(&ty),
            ty,
            declared_constant: false,
            defined: false,
            interp_class: None,
            mon_plus: BTreeSet::new(),
            mon_minus: BTreeSet::new(),
            acc: None,
            constructor_of: None,
            recursor_for: None,
            recursor_kind: None,
            origin: Origin::Generated,
        }
    }

    /// Number of leading products of τ_f.
    pub fn arity(&self) -> usize {
        self.ty.arity()
    }

    pub fn is_predicate(&self) -> bool {
        self.sort == Sort::Box
    }

    /// Sorts of the binders of τ_f, in order.
    pub fn arg_sorts(&self) -> Vec<Sort> {
        let mut out = Vec::new();
        let mut t = &self.ty;
        while let Term::Prod(b, _, body) = t {
            out.push(b.sort);
            t = body;
        }
        out
    }

    /// 1-based indices of the predicate arguments.
    pub fn predicate_args(&self) -> BTreeSet<usize> {
        self.arg_sorts()
            .into_iter()
            .enumerate()
            .filter(|(_, s)| *s == Sort::Box)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn mon(&self, positive: bool) -> &BTreeSet<usize> {
        if positive {
            &self.mon_plus
        } else {
            &self.mon_minus
        }
    }
}

#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub name: String,
    pub head: Name,
    pub lhs_args: Vec<Term>,
    pub rhs: Term,
    pub env: Environment,
    pub rho: Substitution,
    /// Predicate variables of the rhs mapped to the 1-based lhs argument
    /// index where they occur as a whole argument.
    pub kappa: BTreeMap<Name, usize>,
    pub line: Option<usize>,
}

impl RewriteRule {
    pub fn new(name: &str, head: &str, lhs_args: Vec<Term>, rhs: Term) -> RewriteRule {
        RewriteRule {
            name: name.to_string(),
            head: Name::from(head),
            lhs_args,
            rhs,
            env: Environment::new(),
            rho: Substitution::new(),
            kappa: BTreeMap::new(),
            line: None,
        }
    }

    pub fn with_env(mut self, env: Environment) -> RewriteRule {
        self.env = env;
        self
    }

    pub fn with_rho(mut self, rho: Substitution) -> RewriteRule {
        self.rho = rho;
        self
    }

    pub fn lhs(&self) -> Term {
        Term::apps(Term::Sym(self.head.clone()), self.lhs_args.iter().cloned())
    }

    /// Variables of the lhs in order of first occurrence.
    pub fn lhs_vars(&self) -> Vec<Var> {
        self.lhs().free_vars_ordered()
    }

    /// Rename every rule variable apart from `names`.
    pub fn rename_apart(&self, names: &mut NameSupply) -> RewriteRule {
        let mut theta = Substitution::new();
        let mut vars = self.lhs_vars();
        for v in self.env.vars() {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        for v in &vars {
            let fresh = names.fresh_var(&v.name, v.sort);
            theta.insert(v.name.clone(), fresh.term());
        }
        let rename = |t: &Term| t.subst(&theta);
        let env = Environment::from_bindings(
            self.env
                .bindings()
                .iter()
                .map(|(v, t)| {
                    let nv = theta.get(&v.name).and_then(|u| u.as_var().cloned()).unwrap_or(v.clone());
                    (nv, rename(t))
                })
                .collect(),
        );
        let rho = self
            .rho
            .iter()
            .map(|(x, t)| {
                let nx = theta.get(x).and_then(|u| u.as_var()).map(|v| v.name.clone()).unwrap_or(x.clone());
                (nx, rename(t))
            })
            .collect();
        RewriteRule {
            name: self.name.clone(),
            head: self.head.clone(),
            lhs_args: self.lhs_args.iter().map(rename).collect(),
            rhs: rename(&self.rhs),
            env,
            rho,
            kappa: BTreeMap::new(),
            line: self.line,
        }
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} --> {}", self.lhs(), self.rhs)
    }
}

/// Ordered symbol declarations, rules and the inferred precedence.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    decls: Vec<SymbolDecl>,
    index: HashMap<Name, usize>,
    rules: Vec<RewriteRule>,
    by_head: HashMap<Name, Vec<usize>>,
    pub precedence: Precedence,
    pub gate_report: Vec<Diagnostic>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    /// Add a declaration; returns false if the name is taken.
    pub fn add_symbol(&mut self, decl: SymbolDecl) -> bool {
        if self.index.contains_key(&decl.name) {
            return false;
        }
        self.index.insert(decl.name.clone(), self.decls.len());
        self.decls.push(decl);
        true
    }

    pub fn add_rule(&mut self, rule: RewriteRule) {
        self.by_head.entry(rule.head.clone()).or_default().push(self.rules.len());
        if let Some(&i) = self.index.get(&rule.head) {
            self.decls[i].defined = true;
        }
        self.rules.push(rule);
    }

    pub fn get(&self, f: &str) -> Option<&SymbolDecl> {
        self.index.get(f).map(|&i| &self.decls[i])
    }

    pub fn get_mut(&mut self, f: &str) -> Option<&mut SymbolDecl> {
        match self.index.get(f) {
            Some(&i) => Some(&mut self.decls[i]),
            None => None,
        }
    }

    pub fn contains(&self, f: &str) -> bool {
        self.index.contains_key(f)
    }

    pub fn decls(&self) -> &[SymbolDecl] {
        &self.decls
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn rules_mut(&mut self) -> &mut [RewriteRule] {
        &mut self.rules
    }

    pub fn rules_of<'a>(&'a self, f: &str) -> impl Iterator<Item = &'a RewriteRule> + 'a {
        self.by_head
            .get(f)
            .into_iter()
            .flat_map(move |ix| ix.iter().map(move |&i| &self.rules[i]))
    }

    pub fn rule_by_name(&self, name: &str) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    pub fn has_rules(&self, f: &str) -> bool {
        self.by_head.get(f).is_some_and(|v| !v.is_empty())
    }

    /// Largest number of lhs arguments among the rules of `f`.
    pub fn max_rule_arity(&self, f: &str) -> Option<usize> {
        self.rules_of(f).map(|r| r.lhs_args.len()).max()
    }

    /// Smallest number of lhs arguments among the rules of `f`.
    pub fn min_rule_arity(&self, f: &str) -> Option<usize> {
        self.rules_of(f).map(|r| r.lhs_args.len()).min()
    }

    pub fn sort_of(&self, f: &str) -> Option<Sort> {
        self.get(f).map(|d| d.sort)
    }

    pub fn is_constant(&self, f: &str) -> bool {
        self.contains(f) && !self.has_rules(f)
    }

    /// Constant predicate symbol (an element of CF^□).
    pub fn is_constant_predicate(&self, f: &str) -> bool {
        self.get(f).is_some_and(|d| d.sort == Sort::Box) && !self.has_rules(f)
    }

    /// Defined predicate symbol (an element of DF^□).
    pub fn is_defined_predicate(&self, f: &str) -> bool {
        self.get(f).is_some_and(|d| d.sort == Sort::Box) && self.has_rules(f)
    }

    /// Symbols whose type ends in `C v⃗`, in declaration order.
    pub fn constructors_of(&self, c: &str) -> Vec<&SymbolDecl> {
        self.decls.iter().filter(|d| output_head(&d.ty).is_some_and(|h| &*h == c)).collect()
    }

    /// Constant constructors of `C`.
    pub fn constant_constructors_of(&self, c: &str) -> Vec<&SymbolDecl> {
        self.constructors_of(c).into_iter().filter(|d| !self.has_rules(&d.name)).collect()
    }

    pub fn recursors_of(&self, c: &str) -> Vec<&SymbolDecl> {
        self.decls.iter().filter(|d| d.recursor_for.as_deref() == Some(c)).collect()
    }

    pub fn interp_class(&self, c: &str) -> InterpClass {
        match self.get(c).and_then(|d| d.interp_class) {
            Some(k) => k,
            None if self.decls.iter().any(|d| d.recursor_for.as_deref() == Some(c)) => InterpClass::Elim,
            None => InterpClass::Intro,
        }
    }

    pub fn has_errors(&self) -> bool {
        self.gate_report.iter().any(|d| d.is_error())
    }

    /// Symbol-sort lookup suitable for `Term::classify`.
    pub fn sort_lookup(&self) -> impl Fn(&str) -> Option<Sort> + '_ {
        move |f| self.sort_of(f)
    }
}

/// Head symbol of the output type of a product telescope, if the output
/// is a symbol-headed spine.
pub fn output_head(ty: &Term) -> Option<Name> {
    let mut t = ty;
    while let Term::Prod(_, _, b) = t {
        t = b;
    }
    t.head_sym().cloned()
}
