//! First-order unification of algebraic patterns and critical pairs.

use crate::position::Position;
use crate::signature::RewriteRule;
use crate::term::{NameSupply, Substitution, Term};

#[derive(Clone, Debug)]
pub struct CriticalPair {
    pub rule1: RewriteRule,
    pub rule2: RewriteRule,
    /// Non-variable position of `rule1`'s lhs.
    pub position: Position,
    pub unifier: Substitution,
    pub peak: Term,
    /// `(rhs1 σ, lhs1 σ [rhs2 σ]_p)`
    pub reducts: (Term, Term),
    /// Both one-step reducts are α-equal.
    pub trivially_joinable: bool,
}

/// Most general unifier of two algebraic terms.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    let mut todo = vec![(a.clone(), b.clone())];
    while let Some((s, t)) = todo.pop() {
        let s = s.subst(&sigma);
        let t = t.subst(&sigma);
        if s == t {
            continue;
        }
        match (&s, &t) {
            (Term::Var(x), _) => bind(&mut sigma, x, &t)?,
            (_, Term::Var(y)) => bind(&mut sigma, y, &s)?,
            (Term::App(f1, a1), Term::App(f2, a2)) => {
                todo.push(((**a1).clone(), (**a2).clone()));
                todo.push(((**f1).clone(), (**f2).clone()));
            }
            _ => return None,
        }
    }
    Some(sigma)
}

fn bind(sigma: &mut Substitution, x: &crate::term::Var, t: &Term) -> Option<()> {
    if t.occurs_var(&x.name) {
        return None;
    }
    let single = Substitution::singleton(x, t.clone());
    let composed = sigma.then(&single);
    *sigma = composed;
    sigma.insert(x.name.clone(), t.clone());
    Some(())
}

/// All overlaps between lhs patterns: every non-variable position of
/// every lhs against every lhs (renamed apart), except a rule against
/// itself at the root. Root overlaps of distinct rules are listed once.
pub fn critical_pairs(rules: &[RewriteRule]) -> Vec<CriticalPair> {
    let mut out = Vec::new();
    for (i, r1) in rules.iter().enumerate() {
        let l1 = r1.lhs();
        for (j, r2) in rules.iter().enumerate() {
            let mut names = NameSupply::avoiding([&l1, &r1.rhs]);
            let r2 = r2.rename_apart(&mut names);
            let l2 = r2.lhs();
            for p in l1.positions() {
                let sub = l1.subterm_at(&p).expect("position of lhs");
                if matches!(sub, Term::Var(_)) {
                    continue;
                }
                if p.is_root() && j <= i {
                    continue;
                }
                if sub.head_sym() != Some(&r2.head) {
                    continue;
                }
                let Some(sigma) = unify(sub, &l2) else { continue };
                let peak = l1.subst(&sigma);
                let left = r1.rhs.subst(&sigma);
                let right = peak.replace_at(&p, r2.rhs.subst(&sigma)).expect("valid position");
                let trivially_joinable = left == right;
                out.push(CriticalPair {
                    rule1: r1.clone(),
                    rule2: r2.clone(),
                    position: p,
                    unifier: sigma,
                    peak,
                    reducts: (left, right),
                    trivially_joinable,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Var;

    fn app1(f: &str, t: Term) -> Term {
        Term::app(Term::sym(f), t)
    }

    #[test]
    fn unify_binds_both_sides() {
        let x = Var::object("x");
        let y = Var::object("y");
        let a = Term::apps(Term::sym("f"), [x.term(), app1("s", y.term())]);
        let b = Term::apps(Term::sym("f"), [app1("s", Term::sym("0")), x.term()]);
        let sigma = unify(&a, &b).unwrap();
        assert_eq!(a.subst(&sigma), b.subst(&sigma));
        assert!(unify(&x.term(), &app1("s", x.term())).is_none());
    }

    #[test]
    fn constructor_disjoint_rules_have_no_pairs() {
        let x = Var::object("x");
        let y = Var::object("y");
        let plus = |a, b| Term::apps(Term::sym("+"), [a, b]);
        let rules = vec![
            RewriteRule::new("+/1", "+", vec![x.term(), Term::sym("0")], x.term()),
            RewriteRule::new("+/2", "+", vec![x.term(), app1("s", y.term())], app1("s", plus(x.term(), y.term()))),
        ];
        assert!(critical_pairs(&rules).is_empty());
    }

    #[test]
    fn inverse_rules_overlap_with_joinable_pairs() {
        let x = Var::object("x");
        let rules = vec![
            RewriteRule::new("s/1", "s", vec![app1("p", x.term())], x.term()),
            RewriteRule::new("p/1", "p", vec![app1("s", x.term())], x.term()),
        ];
        let cps = critical_pairs(&rules);
        assert_eq!(cps.len(), 2);
        assert!(cps.iter().all(|cp| cp.trivially_joinable));
        assert!(cps.iter().all(|cp| cp.position.to_string() == "2"));
    }
}
