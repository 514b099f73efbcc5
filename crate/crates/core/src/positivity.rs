//! Signed positions, accessibility, I6, safeness, smallness, first-order
//! data types and monotone-argument declarations.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::diagnostic::{Code, Diagnostic};
use crate::position::Position;
use crate::signature::{InterpClass, Signature, SymbolDecl};
use crate::term::{Name, NameSupply, Sort, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Pos,
    Neg,
}

impl Polarity {
    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
        }
    }

    /// Usual rules of signs.
    pub fn times(self, other: Polarity) -> Polarity {
        if self == other {
            Polarity::Pos
        } else {
            Polarity::Neg
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Pos => "+",
            Polarity::Neg => "-",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignedPositions {
    pub positive: BTreeSet<Position>,
    pub negative: BTreeSet<Position>,
}

impl SignedPositions {
    pub fn get(&self, d: Polarity) -> &BTreeSet<Position> {
        match d {
            Polarity::Pos => &self.positive,
            Polarity::Neg => &self.negative,
        }
    }

    fn insert(&mut self, d: Polarity, p: Position) {
        match d {
            Polarity::Pos => self.positive.insert(p),
            Polarity::Neg => self.negative.insert(p),
        };
    }

    /// Sign of `p`, if it has exactly one.
    pub fn sign_at(&self, p: &Position) -> Option<Polarity> {
        match (self.positive.contains(p), self.negative.contains(p)) {
            (true, false) => Some(Polarity::Pos),
            (false, true) => Some(Polarity::Neg),
            _ => None,
        }
    }

    /// The first element of `occ` outside the `d`-signed set.
    pub fn first_outside(&self, occ: &BTreeSet<Position>, d: Polarity) -> Option<Position> {
        occ.iter().find(|p| !self.get(d).contains(*p)).cloned()
    }
}

/// `positive` is Pos^δ(t) and `negative` is Pos^{-δ}(t), where application arguments are traversed only through the
/// declared monotone arguments of the head symbol.
pub fn signed_positions(t: &Term, delta: Polarity, sig: &Signature) -> SignedPositions {
    let mut out = SignedPositions::default();
    collect(t, delta, &mut Vec::new(), Some(sig), &mut out);
    out
}

/// As `signed_positions`, ignoring monotone arguments: applications only expose their
/// head.
pub fn base_signed_positions(t: &Term, delta: Polarity) -> SignedPositions {
    let mut out = SignedPositions::default();
    collect(t, delta, &mut Vec::new(), None, &mut out);
    out
}

fn collect(t: &Term, d: Polarity, path: &mut Vec<u32>, sig: Option<&Signature>, out: &mut SignedPositions) {
    match t {
        Term::Sort(_) | Term::Var(_) | Term::Sym(_) | Term::Bound(_) => out.insert(d, Position::from(path.clone())),
        Term::Prod(_, dom, cod) => {
            path.push(1);
            collect(dom, d.flip(), path, sig, out);
            path.pop();
            path.push(2);
            collect(cod, d, path, sig, out);
            path.pop();
        }
        Term::Abs(_, _, body) => {
            path.push(2);
            collect(body, d, path, sig, out);
            path.pop();
        }
        Term::App(fun, _) => {
            let (head, args) = t.spine();
            match (sig, head) {
                (Some(sig), Term::Sym(f)) => {
                    let n = args.len();
                    let mut p = path.clone();
                    p.extend(std::iter::repeat_n(1, n));
                    out.insert(d, Position::from(p));
                    let Some(decl) = sig.get(f) else { return };
                    for (eps, set) in [(Polarity::Pos, &decl.mon_plus), (Polarity::Neg, &decl.mon_minus)] {
                        for &i in set.iter().filter(|&&i| i >= 1 && i <= n) {
                            let base = path.len();
                            path.extend(std::iter::repeat_n(1, n - i));
                            path.push(2);
                            collect(args[i - 1], eps.times(d), path, Some(sig), out);
                            path.truncate(base);
                        }
                    }
                }
                _ => {
                    path.push(1);
                    collect(fun, d, path, sig, out);
                    path.pop();
                }
            }
        }
    }
}

/// Every occurrence of `f` in `t` has sign `d`. Returns the first
/// offending occurrence and its sign (if any) otherwise.
pub fn occurs_only_with_sign(
    f: &str,
    t: &Term,
    d: Polarity,
    sig: Option<&Signature>,
) -> Result<(), (Position, Option<Polarity>)> {
    let occ = t.positions_of_sym(f);
    if occ.is_empty() {
        return Ok(());
    }
    let sp = match sig {
        Some(sig) => signed_positions(t, Polarity::Pos, sig),
        None => base_signed_positions(t, Polarity::Pos),
    };
    match sp.first_outside(&occ, d) {
        None => Ok(()),
        Some(p) => {
            let s = sp.sign_at(&p);
            Err((p, s))
        }
    }
}

/// Predicate symbols equivalent to `c` in the precedence.
pub fn equivalent_predicates(c: &str, sig: &Signature) -> Vec<Name> {
    let mut out: Vec<Name> = sig
        .precedence
        .equivalents(c)
        .into_iter()
        .filter(|g| sig.sort_of(g) == Some(Sort::Box))
        .collect();
    if !out.iter().any(|g| &**g == c) {
        out.push(Name::from(c));
    }
    out
}

/// Constructor type split into its argument telescope and output
/// arguments `v⃗`.
#[derive(Clone, Debug)]
pub struct ConstructorShape {
    pub args: Vec<(Var, Term)>,
    pub target: Name,
    pub outputs: Vec<Term>,
}

pub fn constructor_shape(decl: &SymbolDecl) -> Option<ConstructorShape> {
    let mut names = NameSupply::new();
    let (args, out) = decl.ty.open_telescope(&mut names);
    let (head, outs) = out.spine();
    let target = head.as_sym()?.clone();
    Some(ConstructorShape { args, target, outputs: outs.into_iter().cloned().collect() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccRejection {
    /// 1-based argument index.
    pub index: usize,
    pub symbol: Name,
    pub position: Position,
    pub sign: Option<Polarity>,
}

#[derive(Clone, Debug, Default)]
pub struct AccessReport {
    pub acc: BTreeSet<usize>,
    pub rejected: Vec<AccRejection>,
    /// Arguments dropped because a predicate variable of their type is not
    /// among the output arguments (intro-class only).
    pub i6_dropped: Vec<(usize, Name)>,
}

/// Arguments `j` of `c : (x⃗:T⃗)C v⃗` such that every `D ≃ C` occurs only
/// positively in `T_j`.
pub fn accessible_args(c: &SymbolDecl, target: &str, sig: &Signature) -> AccessReport {
    let mut report = AccessReport::default();
    let Some(shape) = constructor_shape(c) else { return report };
    let equivs = equivalent_predicates(target, sig);
    let check_i6 = sig.interp_class(target) == InterpClass::Intro && sig.has_rules(&c.name);
    for (j, (_, tj)) in shape.args.iter().enumerate() {
        let index = j + 1;
        let sp = signed_positions(tj, Polarity::Pos, sig);
        let mut ok = true;
        for d in &equivs {
            let occ = tj.positions_of_sym(d);
            if let Some(p) = sp.first_outside(&occ, Polarity::Pos) {
                report.rejected.push(AccRejection { index, symbol: d.clone(), position: p.clone(), sign: sp.sign_at(&p) });
                ok = false;
                break;
            }
        }
        if ok && check_i6 {
            if let Some(x) = i6_missing(&shape, j) {
                report.i6_dropped.push((index, x));
                ok = false;
            }
        }
        if ok {
            report.acc.insert(index);
        }
    }
    report
}

/// A predicate variable of the telescope occurring in `T_j` that is not an
/// output argument.
fn i6_missing(shape: &ConstructorShape, j: usize) -> Option<Name> {
    let tj = &shape.args[j].1;
    for (x, _) in &shape.args {
        if x.sort == Sort::Box && tj.occurs_var(&x.name) && !shape.outputs.iter().any(|v| v.as_var() == Some(x)) {
            return Some(x.name.clone());
        }
    }
    None
}

/// Condition I6 for every constant constructor of the intro-class type `c`.
pub fn check_i6(c: &str, sig: &Signature) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for d in sig.constant_constructors_of(c) {
        if &*d.name == c {
            continue;
        }
        let Some(shape) = constructor_shape(d) else { continue };
        for j in 0..shape.args.len() {
            if let Some(x) = i6_missing(&shape, j) {
                out.push(
                    Diagnostic::error(
                        Code::I6,
                        format!(
                            "predicate variable {x} occurs in the type {} of argument {} of constructor {} but is not an argument of {c} in its output type",
                            shape.args[j].1,
                            j + 1,
                            d.name
                        ),
                    )
                    .symbol(&d.name),
                );
            }
        }
    }
    out
}

/// Witness indices ι_x for the predicate variables of a constructor, when
/// I6 holds.
pub fn i6_witnesses(c: &SymbolDecl) -> Option<Vec<(Name, usize)>> {
    let shape = constructor_shape(c)?;
    let mut out = Vec::new();
    for (x, _) in &shape.args {
        if x.sort != Sort::Box || !shape.args.iter().any(|(_, t)| t.occurs_var(&x.name)) {
            continue;
        }
        let i = shape.outputs.iter().position(|v| v.as_var() == Some(x))?;
        out.push((x.name.clone(), i + 1));
    }
    Some(out)
}

/// Safeness of `f l⃗`: variables at predicate arguments, pairwise distinct.
pub fn check_safe(head: &SymbolDecl, lhs_args: &[Term], rule: &str) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let preds: Vec<usize> = head.predicate_args().into_iter().filter(|&i| i <= lhs_args.len()).collect();
    for &i in &preds {
        let li = &lhs_args[i - 1];
        if li.as_var().is_none() {
            out.push(
                Diagnostic::error(
                    Code::Unsafe,
                    format!("predicate argument {i} of {} is matched against {li}, which is not a variable", head.name),
                )
                .rule(rule)
                .at(Position::ones(lhs_args.len() - i).child(2)),
            );
        }
    }
    for (a, &i) in preds.iter().enumerate() {
        for &j in &preds[a + 1..] {
            let (li, lj) = (&lhs_args[i - 1], &lhs_args[j - 1]);
            if li.as_var().is_some() && li == lj {
                out.push(
                    Diagnostic::error(
                        Code::Unsafe,
                        format!("predicate arguments {i} and {j} of {} are both {li}", head.name),
                    )
                    .rule(rule),
                );
            }
        }
    }
    out
}

/// Smallness: constructor binders after the `n_params` parameters bind no
/// predicate variable.
pub fn check_small(c: &str, n_params: usize, sig: &Signature) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for d in sig.constant_constructors_of(c) {
        if &*d.name == c {
            continue;
        }
        let Some(shape) = constructor_shape(d) else { continue };
        for (j, (x, t)) in shape.args.iter().enumerate().skip(n_params) {
            if x.sort == Sort::Box {
                out.push(
                    Diagnostic::error(
                        Code::NotSmall,
                        format!(
                            "constructor {} binds the predicate {}:{t} (argument {}), which is not a parameter of {c}",
                            d.name,
                            x.name,
                            j + 1
                        ),
                    )
                    .symbol(&d.name),
                );
            }
        }
    }
    out
}

/// First-order data type status of `c` and its equivalents.
pub fn is_first_order_data_type(c: &str, sig: &Signature) -> bool {
    let mut visiting = HashSet::new();
    first_order(c, sig, &mut visiting)
}

fn first_order(c: &str, sig: &Signature, visiting: &mut HashSet<Name>) -> bool {
    if !sig.is_constant_predicate(c) {
        return false;
    }
    if visiting.contains(c) {
        return true;
    }
    let class = equivalent_predicates(c, sig);
    for d in &class {
        visiting.insert(d.clone());
    }
    for d in &class {
        let Some(decl) = sig.get(d) else { return false };
        if !sig.is_constant_predicate(d) {
            return false;
        }
        let (tel, out) = decl.ty.open_telescope(&mut NameSupply::new());
        if out != Term::star() || tel.iter().any(|(x, _)| x.sort != Sort::Star) {
            return false;
        }
        for k in sig.constructors_of(d) {
            if k.name == *d {
                continue;
            }
            let Some(shape) = constructor_shape(k) else { return false };
            if shape.args.iter().any(|(x, _)| x.sort != Sort::Star) {
                return false;
            }
            let acc = match &k.acc {
                Some(a) => a.clone(),
                None => accessible_args(k, d, sig).acc,
            };
            if acc.len() != shape.args.len() {
                return false;
            }
            for (_, tj) in &shape.args {
                let Some(e) = tj.head_sym() else { return false };
                if !sig.precedence.le(e, c) && !class.contains(e) {
                    return false;
                }
                if !first_order(e, sig, visiting) {
                    return false;
                }
            }
        }
    }
    true
}

/// Monotone-argument declarations: indices are predicate arguments, the
/// two sets are disjoint, and every rule of a defined predicate symbol
/// respects them.
pub fn check_mon_declarations(sig: &Signature) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for d in sig.decls() {
        if d.mon_plus.is_empty() && d.mon_minus.is_empty() {
            continue;
        }
        let f = &d.name;
        if d.sort != Sort::Box {
            out.push(
                Diagnostic::error(Code::MonDeclaration, format!("{f} is not a predicate symbol; monotone arguments apply to predicate symbols only"))
                    .symbol(f),
            );
            continue;
        }
        let preds = d.predicate_args();
        let mut bad = false;
        for i in d.mon_plus.iter().chain(&d.mon_minus) {
            if !preds.contains(i) {
                out.push(
                    Diagnostic::error(Code::MonDeclaration, format!("argument {i} of {f} is not a predicate argument"))
                        .symbol(f),
                );
                bad = true;
            }
        }
        let both: Vec<_> = d.mon_plus.intersection(&d.mon_minus).collect();
        if !both.is_empty() {
            out.push(
                Diagnostic::error(
                    Code::MonDeclaration,
                    format!("argument {} of {f} is declared both monotone and anti-monotone", both[0]),
                )
                .symbol(f),
            );
            bad = true;
        }
        if bad {
            continue;
        }
        if !sig.has_rules(f) {
            if sig.interp_class(f) == InterpClass::Intro {
                out.push(
                    Diagnostic::warning(
                        Code::MonDeclaration,
                        format!("monotonicity of the constant {f} is assumed, not verified"),
                    )
                    .symbol(f),
                );
            }
            continue;
        }
        for r in sig.rules_of(f) {
            let sp = signed_positions(&r.rhs, Polarity::Pos, sig);
            for (eps, set) in [(Polarity::Pos, &d.mon_plus), (Polarity::Neg, &d.mon_minus)] {
                for &i in set {
                    let Some(li) = r.lhs_args.get(i - 1) else {
                        out.push(
                            Diagnostic::error(
                                Code::Monotonicity,
                                format!("rule does not match argument {i} of {f}, declared {}", mon_word(eps)),
                            )
                            .rule(&r.name),
                        );
                        continue;
                    };
                    let Some(x) = li.as_var().filter(|x| x.sort == Sort::Box) else {
                        out.push(
                            Diagnostic::error(
                                Code::Monotonicity,
                                format!("argument {i} of {f} is declared {} but the rule matches it against {li}", mon_word(eps)),
                            )
                            .rule(&r.name),
                        );
                        continue;
                    };
                    let occ = r.rhs.positions_of_var(&x.name);
                    if let Some(p) = sp.first_outside(&occ, eps) {
                        let found = match sp.sign_at(&p) {
                            Some(s) => format!("sign {s}"),
                            None => "no sign".to_string(),
                        };
                        out.push(
                            Diagnostic::error(
                                Code::Monotonicity,
                                format!(
                                    "argument {i} of {f} is declared {} but {} occurs at position {p} of {} with {found}",
                                    mon_word(eps),
                                    x.name,
                                    r.rhs
                                ),
                            )
                            .rule(&r.name)
                            .at(p),
                        );
                    }
                }
            }
        }
    }
    out
}

fn mon_word(d: Polarity) -> &'static str {
    match d {
        Polarity::Pos => "monotone",
        Polarity::Neg => "anti-monotone",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precedence::infer_precedence;
    use crate::signature::RewriteRule;

    fn p(s: &str) -> Position {
        Position::parse(s).unwrap()
    }

    fn neg_sig(mon_minus: bool) -> Signature {
        let mut sig = Signature::new();
        sig.add_symbol(SymbolDecl::new("trm", Term::star()));
        sig.add_symbol(SymbolDecl::new("⊥", Term::star()));
        let mut neg = SymbolDecl::new("¬", Term::arrow(Term::star(), Term::star()));
        if mon_minus {
            neg.mon_minus.insert(1);
        }
        sig.add_symbol(neg);
        let a = Var::predicate("A");
        sig.add_rule(RewriteRule::new("¬/1", "¬", vec![a.term()], Term::arrow(a.term(), Term::sym("⊥"))));
        sig
    }

    fn negneg(t: Term) -> Term {
        Term::app(Term::sym("¬"), Term::app(Term::sym("¬"), t))
    }

    #[test]
    fn double_negation_is_positive_with_antimonotone_argument() {
        let sig = neg_sig(true);
        let t = negneg(Term::sym("trm"));
        let sp = signed_positions(&t, Polarity::Pos, &sig);
        assert_eq!(sp.positive, [p("1"), p("2.2")].into_iter().collect());
        assert_eq!(t.positions_of_sym("trm"), [p("2.2")].into_iter().collect());
        assert!(occurs_only_with_sign("trm", &t, Polarity::Pos, Some(&sig)).is_ok());
    }

    #[test]
    fn without_declarations_the_occurrence_is_unsigned() {
        let sig = neg_sig(false);
        let t = negneg(Term::sym("trm"));
        let err = occurs_only_with_sign("trm", &t, Polarity::Pos, Some(&sig)).unwrap_err();
        assert_eq!(err, (p("2.2"), None));
        assert_eq!(signed_positions(&t, Polarity::Pos, &sig), base_signed_positions(&t, Polarity::Pos));
    }

    #[test]
    fn product_domains_flip_sign() {
        let c = Term::sym("C");
        let nat = Term::sym("nat");
        let t = Term::arrow(Term::arrow(c.clone(), nat.clone()), c);
        let sp = base_signed_positions(&t, Polarity::Pos);
        assert_eq!(sp.positive, [p("1.1"), p("2")].into_iter().collect());
        assert_eq!(sp.negative, [p("1.2")].into_iter().collect());
        assert_eq!(occurs_only_with_sign("C", &Term::arrow(Term::sym("C"), Term::sym("nat")), Polarity::Pos, None), Err((p("1"), Some(Polarity::Neg))));
    }

    fn nat_sig() -> Signature {
        let nat = Term::sym("nat");
        let mut sig = Signature::new();
        sig.add_symbol(SymbolDecl::new("nat", Term::star()));
        sig.add_symbol(SymbolDecl::new("0", nat.clone()));
        sig.add_symbol(SymbolDecl::new("s", Term::arrow(nat.clone(), nat.clone())));
        sig.add_symbol(SymbolDecl::new("+", Term::arrow(nat.clone(), Term::arrow(nat.clone(), nat.clone()))));
        sig.add_symbol(SymbolDecl::new("C", Term::star()));
        sig.add_symbol(SymbolDecl::new(
            "c",
            Term::arrow(Term::arrow(Term::sym("C"), nat.clone()), Term::sym("C")),
        ));
        let x = Var::object("x");
        sig.add_rule(RewriteRule::new("+/1", "+", vec![x.term(), Term::sym("0")], x.term()));
        sig.precedence = infer_precedence(sig.decls(), sig.rules()).unwrap();
        sig
    }

    #[test]
    fn accessible_arguments() {
        let sig = nat_sig();
        let acc = |f: &str, c: &str| accessible_args(sig.get(f).unwrap(), c, &sig).acc;
        assert_eq!(acc("s", "nat"), [1].into_iter().collect());
        assert_eq!(acc("+", "nat"), [1, 2].into_iter().collect());
        let rep = accessible_args(sig.get("c").unwrap(), "C", &sig);
        assert!(rep.acc.is_empty());
        assert_eq!(rep.rejected[0].position, p("1"));
        assert_eq!(rep.rejected[0].sign, Some(Polarity::Neg));
    }

    #[test]
    fn first_order_data_types() {
        let sig = nat_sig();
        assert!(is_first_order_data_type("nat", &sig));
        assert!(!is_first_order_data_type("C", &sig));
    }

    fn fin_sig() -> Signature {
        let nat = Term::sym("nat");
        let pred = Term::arrow(nat.clone(), Term::star());
        let mut sig = Signature::new();
        sig.add_symbol(SymbolDecl::new("nat", Term::star()));
        sig.add_symbol(SymbolDecl::new("fin", Term::arrow(pred.clone(), Term::star())));
        let x = Var::object("x");
        let pv = Var::predicate("p");
        let y = Var::object("y");
        let out = Term::app(Term::sym("fin"), Term::abs(&y, nat.clone(), &Term::app(pv.term(), y.term())));
        let ty = Term::prod(
            &x,
            nat.clone(),
            &Term::prod(&pv, pred, &Term::arrow(Term::app(Term::sym("fin"), pv.term()), out)),
        );
        sig.add_symbol(SymbolDecl::new("add", ty));
        sig.precedence = infer_precedence(sig.decls(), sig.rules()).unwrap();
        sig
    }

    #[test]
    fn i6_and_smallness_on_fin() {
        let sig = fin_sig();
        let i6 = check_i6("fin", &sig);
        assert_eq!(i6.len(), 1);
        assert_eq!(i6[0].code, Code::I6);
        assert!(i6_witnesses(sig.get("add").unwrap()).is_none());
        let small = check_small("fin", 0, &sig);
        assert_eq!(small.len(), 1);
        assert_eq!(small[0].code, Code::NotSmall);
    }

    #[test]
    fn list_satisfies_i6() {
        let mut sig = Signature::new();
        sig.add_symbol(SymbolDecl::new("list", Term::arrow(Term::star(), Term::star())));
        let a = Var::predicate("A");
        let la = Term::app(Term::sym("list"), a.term());
        sig.add_symbol(SymbolDecl::new(
            "cons",
            Term::prod(&a, Term::star(), &Term::arrow(a.term(), Term::arrow(la.clone(), la))),
        ));
        assert!(check_i6("list", &sig).is_empty());
        assert_eq!(i6_witnesses(sig.get("cons").unwrap()).unwrap(), vec![(Name::from("A"), 1)]);
    }

    #[test]
    fn safeness_rejects_repeated_predicate_arguments() {
        let a = Var::predicate("A");
        let b = Var::predicate("B");
        let x = Var::object("x");
        let ty = Term::prod(&a, Term::star(), &Term::prod(&b, Term::star(), &Term::arrow(a.term(), Term::star())));
        let head = SymbolDecl::new("g", ty);
        assert!(check_safe(&head, &[a.term(), b.term(), x.term()], "g/1").is_empty());
        let dup = check_safe(&head, &[a.term(), a.term(), x.term()], "g/1");
        assert_eq!(dup.len(), 1);
        assert_eq!(dup[0].code, Code::Unsafe);
        let matched = check_safe(&head, &[Term::sym("nat"), b.term()], "g/1");
        assert_eq!(matched.len(), 1);
    }

    #[test]
    fn monotone_declarations_are_checked_against_rules() {
        assert!(check_mon_declarations(&neg_sig(true)).is_empty());
        let mut sig = neg_sig(false);
        sig.get_mut("¬").unwrap().mon_plus.insert(1);
        let d = check_mon_declarations(&sig);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::Monotonicity);
        let mut sig = neg_sig(true);
        sig.get_mut("¬").unwrap().mon_plus.insert(1);
        assert_eq!(check_mon_declarations(&sig)[0].code, Code::MonDeclaration);
    }
}
