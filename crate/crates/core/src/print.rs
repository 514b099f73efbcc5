//! Concrete printing of terms. Bound variables get readable names chosen
//! so that the output parses back to an α-equivalent term.

use std::collections::BTreeSet;
use std::fmt;

use crate::term::{Name, Term};

const TOP: u8 = 0;
const APP: u8 = 1;
const ATOM: u8 = 2;

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut stack = Vec::new();
        let mut out = String::new();
        print(self, TOP, &mut stack, &mut out);
        // `(*` would open a comment when read back.
        f.write_str(&out.replace("(*", "( *"))
    }
}

fn used_names(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    t.walk(&mut |u| match u {
        Term::Var(v) => {
            out.insert(v.name.to_string());
        }
        Term::Sym(s) => {
            out.insert(s.to_string());
        }
        _ => {}
    });
    out
}

fn pick_name(hint: &Name, body: &Term, stack: &[String]) -> String {
    let base = match &**hint {
        "" | "_" => "x",
        h => h,
    };
    let avoid = used_names(body);
    let taken = |c: &str| avoid.contains(c) || stack.iter().any(|s| s == c);
    let mut candidate = base.to_string();
    let mut primes = 0;
    while taken(&candidate) {
        primes += 1;
        candidate = if primes <= 3 {
            format!("{base}{}", "'".repeat(primes))
        } else {
            format!("{base}{}", primes - 3)
        };
    }
    candidate
}

fn print(t: &Term, level: u8, stack: &mut Vec<String>, out: &mut String) {
    match t {
        Term::Sort(s) => out.push_str(&s.to_string()),
        Term::Var(v) => out.push_str(&v.name),
        Term::Sym(s) => out.push_str(s),
        Term::Bound(i) => match stack.len().checked_sub(*i as usize + 1) {
            Some(k) => out.push_str(&stack[k]),
            None => out.push_str(&format!("#{i}")),
        },
        Term::App(fun, arg) => {
            let paren = level >= ATOM;
            if paren {
                out.push('(');
            }
            print(fun, APP, stack, out);
            out.push(' ');
            print(arg, ATOM, stack, out);
            if paren {
                out.push(')');
            }
        }
        Term::Prod(b, dom, cod) if !cod.has_bound(0) => {
            let paren = level >= APP;
            if paren {
                out.push('(');
            }
            print(dom, APP, stack, out);
            out.push_str(" -> ");
            stack.push("_".to_string());
            print(cod, TOP, stack, out);
            stack.pop();
            let _ = b;
            if paren {
                out.push(')');
            }
        }
        Term::Prod(b, dom, body) | Term::Abs(b, dom, body) => {
            let paren = level >= APP;
            if paren {
                out.push('(');
            }
            let x = pick_name(&b.name, body, stack);
            let (open, close) = if matches!(t, Term::Prod(..)) { ('(', ')') } else { ('[', ']') };
            out.push(open);
            out.push_str(&x);
            out.push(':');
            print(dom, TOP, stack, out);
            out.push(close);
            stack.push(x);
            print(body, TOP, stack, out);
            stack.pop();
            if paren {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::term::{Term, Var};

    #[test]
    fn arrows_and_applications() {
        let nat = Term::sym("nat");
        let t = Term::arrow(Term::arrow(nat.clone(), nat.clone()), nat.clone());
        assert_eq!(t.to_string(), "(nat -> nat) -> nat");
        let s = Term::app(Term::sym("s"), Term::app(Term::sym("s"), Term::sym("0")));
        assert_eq!(s.to_string(), "s (s 0)");
        let k = Term::arrow(Term::arrow(Term::star(), Term::star()), Term::star());
        assert_eq!(k.to_string(), "( * -> *) -> *");
    }

    #[test]
    fn dependent_product_keeps_binder() {
        let x = Var::object("x");
        let p = Term::sym("P");
        let t = Term::prod(&x, Term::sym("nat"), &Term::app(p, x.term()));
        assert_eq!(t.to_string(), "(x:nat)P x");
    }

    #[test]
    fn binder_clashing_with_symbol_is_renamed() {
        let x = Var::object("x");
        let t = Term::abs(&x, Term::sym("nat"), &Term::app(Term::sym("x"), x.term()));
        assert_eq!(t.to_string(), "[x':nat]x x'");
    }
}
